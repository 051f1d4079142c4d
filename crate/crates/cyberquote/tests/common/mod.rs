// Not every integration test uses every helper.
#![allow(dead_code)]

use std::path::PathBuf;

use cyberquote::maturity::{self, MaturityModelSpec, MuRecord};
use cyberquote::pricing::{self, LayerEconomics, Scenario};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn fixture(name: &str) -> String {
    let path = fixture_path(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

pub fn cmmc() -> MaturityModelSpec {
    maturity::load_maturity_model("cmmc", &fixture("cmmc.csv")).unwrap()
}

pub fn mu_from_fixture(name: &str, spec: &MaturityModelSpec) -> MuRecord {
    let assessment = maturity::parse_assessment(&fixture(name)).unwrap();
    maturity::mu(&assessment, spec, spec.num_levels).unwrap().0
}

/// The three retail layers' maturity records, in layer order.
pub fn retail_mu() -> Vec<MuRecord> {
    let spec = cmmc();
    (1..=3)
        .map(|i| mu_from_fixture(&format!("retail-l{i}.assess"), &spec))
        .collect()
}

pub fn retail_econ() -> Vec<LayerEconomics> {
    pricing::load_economics(&fixture("retail-econ.csv")).unwrap()
}

pub fn point_scenarios() -> Vec<Scenario> {
    pricing::load_scenarios(&fixture("scenario-point.csv"), true).unwrap()
}
