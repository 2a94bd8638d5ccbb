#![allow(dead_code)]

use std::path::PathBuf;

use taskfsa::config::PipelineConfig;
use taskfsa::io::{read_doc, SpecSet};
use taskfsa_core::glm::{Backend, Glm};
use taskfsa_core::{Controller, Model};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn config(case: &str) -> PipelineConfig {
    PipelineConfig::load(&fixtures().join(case).join("config.toml")).unwrap()
}

/// Replay client for a case directory.
pub fn replay(case: &str) -> Glm {
    config(case).glm().unwrap()
}

/// Client for a case with another backend but the case's prompt settings.
pub fn glm_with(case: &str, backend: Box<dyn Backend>) -> Glm {
    let cfg = config(case);
    let mut glm = Glm::new(backend).with_templates(cfg.templates.clone());
    glm.params = cfg.params();
    glm
}

pub fn model(name: &str) -> Model {
    read_doc(&fixtures().join("models").join(format!("{}.json", name))).unwrap()
}

pub fn specs(name: &str) -> Vec<String> {
    let s: SpecSet = read_doc(&fixtures().join("specs").join(format!("{}.json", name))).unwrap();
    s.specs
}

pub fn expected(name: &str) -> Controller {
    read_doc(&fixtures().join("expected").join(format!("{}.json", name))).unwrap()
}

pub const CROSS: &str = "Cross the road";
pub const AT_LIGHT: &str = "Cross the road at the traffic light";
pub const DENTAL: &str = "finding a dentist and making an appointment";
pub const MPC: &str = "Secure multi-party computation";
pub const REBOOT: &str = "rebooting the modem and router";

pub const LIGHT_FIRST: &str = "with an action \"approach pedestrian crossing\"";
pub const LIGHT_SECOND: &str =
    "to ensure the action \"cross the road\" is performed under conditions \"traffic light turns green\" and \"no cars are coming\"";
pub const REBOOT_FIRST: &str = "include \"wait two minutes\" after \"plug in modem\"";
pub const REBOOT_SECOND: &str = "include \"wait two minutes\" after \"turn on router\"";
