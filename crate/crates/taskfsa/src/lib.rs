//! Document formats, GLM backends, the batch pipeline, the command line and
//! the HTTP service around `taskfsa-core`.

pub mod backend;
pub mod cli;
pub mod config;
pub mod dot;
pub mod io;
pub mod pipeline;
pub mod service;

pub use taskfsa_core as core;
