//! Building finite-state controllers from natural-language step lists and
//! checking them against LTL specifications over an environment model.
#![no_std]

extern crate alloc;

pub mod buchi;
pub mod builder;
pub mod check;
pub mod controller;
pub mod formula;
pub mod glm;
pub mod iso;
pub mod ltl;
pub mod model;
pub mod product;
pub mod refine;
pub mod smv;
pub mod stepparse;
pub mod steps;

pub use check::{brute_force_check, check, CheckError, CheckOptions, Counterexample, LassoBounds, ModelProjection, Verdict};
pub use controller::{ActionSet, Controller, ControllerState, StateId, Transition};
pub use formula::CondFormula;
pub use ltl::{parse_ltl, Ltl};
pub use model::{Model, ModelTransition};
pub use builder::{build_fsa, BuildError, BuildTrace};
pub use steps::{StepNode, StepTree};
pub use glm::{Glm, GlmError, ReplayBackend, Transcript};
pub use refine::{RefinementSession, SessionStatus, SynonymMap};
