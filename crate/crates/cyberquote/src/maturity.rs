//! Security-maturity model: domains, practices, levels, per-layer
//! assessments, and their reduction to the scalar record consumed by
//! pricing.
//!
//! An assessment marks each practice as met (1), not relevant (0), or not
//! met (-1). The reduction keeps the practice score in [0,1]: "not met"
//! contributes 0 to the numerator rather than -1, so the downstream loss
//! discount factor (1 + p̄)^γ never drops below 1.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::org::Layer;
use crate::report::Warning;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub code: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Practice {
    pub id: String,
    pub domain_code: String,
    pub level: u32,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaturityModelSpec {
    pub name: String,
    pub num_levels: u32,
    pub domains: Vec<Domain>,
    pub practices: Vec<Practice>,
}

impl MaturityModelSpec {
    pub fn practices_at_level(&self, level: u32) -> impl Iterator<Item = &Practice> {
        self.practices.iter().filter(move |p| p.level == level)
    }

    pub fn domain(&self, code: &str) -> Option<&Domain> {
        self.domains.iter().find(|d| d.code == code)
    }

    pub fn practice(&self, id: &str) -> Option<&Practice> {
        self.practices.iter().find(|p| p.id == id)
    }
}

/// Assessment outcome for a single practice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PracticeStatus {
    NotMet,
    NotRelevant,
    Met,
}

impl PracticeStatus {
    pub fn from_value(value: i8) -> Option<PracticeStatus> {
        match value {
            -1 => Some(PracticeStatus::NotMet),
            0 => Some(PracticeStatus::NotRelevant),
            1 => Some(PracticeStatus::Met),
            _ => None,
        }
    }

    pub fn value(self) -> i8 {
        match self {
            PracticeStatus::NotMet => -1,
            PracticeStatus::NotRelevant => 0,
            PracticeStatus::Met => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssessorRole {
    #[default]
    Underwriting,
    Adjuster,
}

/// One layer's maturity assessment against a bound [`MaturityModelSpec`].
/// Practices absent from `practice_status` count as not relevant; domains
/// absent from `domain_weights` carry full weight 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerAssessment {
    pub layer: Layer,
    pub role: AssessorRole,
    pub practice_status: BTreeMap<String, PracticeStatus>,
    pub domain_weights: BTreeMap<String, f64>,
    pub objectives: Vec<Objective>,
    pub maturity_override: Option<f64>,
    /// Path of the domain-objective matrix CSV, if the assessment names one.
    pub objective_domain_matrix: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub label: String,
    pub score: f64,
}

/// Output of the maturity function for one layer: the scalars handed to the
/// economic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuRecord {
    pub layer: Layer,
    /// Domain-weighted fraction of relevant practices met.
    pub p_bar: f64,
    /// Mean objective attainment.
    pub o: f64,
    /// Normalized maturity level.
    pub m: f64,
    /// Per-domain fraction of relevant practices met. Domains with no
    /// relevant practice are omitted.
    pub domain_coverage: BTreeMap<String, f64>,
}

/// Importance gating of domains per objective (the tabular d_i matrices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainObjectiveMatrix {
    pub objectives: Vec<String>,
    /// domain code -> one cell in [0,1] per objective.
    pub cells: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaturityError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("unknown practice `{0}`")]
    UnknownPractice(String),
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
    #[error("{0}")]
    Domain(String),
}

/// Load a maturity model from CSV text with header `id,domain,level,description`.
/// Domains are registered in order of first appearance; the level count is
/// the highest level seen.
pub fn load_maturity_model(name: &str, csv_text: &str) -> Result<MaturityModelSpec, MaturityError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| MaturityError::Format {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let expected = ["id", "domain", "level", "description"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(MaturityError::Format {
            line: 1,
            message: format!("expected header `{}`", expected.join(",")),
        });
    }
    let mut domains: Vec<Domain> = Vec::new();
    let mut practices: Vec<Practice> = Vec::new();
    let mut seen_ids: BTreeSet<String> = BTreeSet::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| MaturityError::Format {
            line,
            message: e.to_string(),
        })?;
        if record.len() != 4 {
            return Err(MaturityError::Format {
                line,
                message: format!("expected 4 columns, found {}", record.len()),
            });
        }
        let id = record[0].to_string();
        let domain_code = record[1].to_string();
        let level: u32 = record[2].parse().map_err(|_| MaturityError::Format {
            line,
            message: format!("level `{}` is not a positive integer", &record[2]),
        })?;
        if level == 0 {
            return Err(MaturityError::Format {
                line,
                message: "level must be at least 1".to_string(),
            });
        }
        if id.is_empty() || domain_code.is_empty() {
            return Err(MaturityError::Format {
                line,
                message: "id and domain must be non-empty".to_string(),
            });
        }
        if !seen_ids.insert(id.clone()) {
            return Err(MaturityError::Format {
                line,
                message: format!("duplicate practice id `{id}`"),
            });
        }
        if !domains.iter().any(|d| d.code == domain_code) {
            domains.push(Domain {
                code: domain_code.clone(),
                name: domain_code.clone(),
            });
        }
        practices.push(Practice {
            id,
            domain_code,
            level,
            description: record[3].to_string(),
        });
    }
    let num_levels = practices.iter().map(|p| p.level).max().unwrap_or(1);
    Ok(MaturityModelSpec {
        name: name.to_string(),
        num_levels,
        domains,
        practices,
    })
}

/// Load a domain-objective matrix from CSV with header `Domain,<labels...>`.
pub fn load_domain_objective_matrix(csv_text: &str) -> Result<DomainObjectiveMatrix, MaturityError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| MaturityError::Format {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.is_empty() || &headers[0] != "Domain" {
        return Err(MaturityError::Format {
            line: 1,
            message: "expected header starting with `Domain`".to_string(),
        });
    }
    let objectives: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut cells = BTreeMap::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| MaturityError::Format {
            line,
            message: e.to_string(),
        })?;
        if record.len() != objectives.len() + 1 {
            return Err(MaturityError::Format {
                line,
                message: format!(
                    "expected {} columns, found {}",
                    objectives.len() + 1,
                    record.len()
                ),
            });
        }
        let mut row_cells = Vec::with_capacity(objectives.len());
        for cell in record.iter().skip(1) {
            let value: f64 = cell.parse().map_err(|_| MaturityError::Format {
                line,
                message: format!("cell `{cell}` is not a number"),
            })?;
            if !(0.0..=1.0).contains(&value) {
                return Err(MaturityError::Format {
                    line,
                    message: format!("cell {value} outside [0,1]"),
                });
            }
            row_cells.push(value);
        }
        cells.insert(record[0].to_string(), row_cells);
    }
    Ok(DomainObjectiveMatrix { objectives, cells })
}

/// Check that every practice and domain the assessment references exists in
/// the spec and that all scalars are in range.
pub fn bind_assessment(
    assessment: &LayerAssessment,
    spec: &MaturityModelSpec,
) -> Result<(), MaturityError> {
    for id in assessment.practice_status.keys() {
        if spec.practice(id).is_none() {
            return Err(MaturityError::UnknownPractice(id.clone()));
        }
    }
    for (code, weight) in &assessment.domain_weights {
        if spec.domain(code).is_none() {
            return Err(MaturityError::UnknownDomain(code.clone()));
        }
        if !(0.0..=1.0).contains(weight) {
            return Err(MaturityError::Domain(format!(
                "weight {weight} for domain `{code}` outside [0,1]"
            )));
        }
    }
    for objective in &assessment.objectives {
        if !(0.0..=1.0).contains(&objective.score) {
            return Err(MaturityError::Domain(format!(
                "objective `{}` score {} outside [0,1]",
                objective.label, objective.score
            )));
        }
    }
    if let Some(m) = assessment.maturity_override {
        if !(0.0..=1.0).contains(&m) {
            return Err(MaturityError::Domain(format!(
                "maturity override {m} outside [0,1]"
            )));
        }
    }
    Ok(())
}

fn status_of(assessment: &LayerAssessment, practice_id: &str) -> PracticeStatus {
    assessment
        .practice_status
        .get(practice_id)
        .copied()
        .unwrap_or(PracticeStatus::NotRelevant)
}

fn weight_of(assessment: &LayerAssessment, domain_code: &str) -> f64 {
    assessment
        .domain_weights
        .get(domain_code)
        .copied()
        .unwrap_or(1.0)
}

/// Domain-weighted fraction of relevant practices met, over practices at
/// levels up to `max_level`. Returns 0 with a warning when nothing relevant
/// carries weight.
pub fn practice_score(
    assessment: &LayerAssessment,
    spec: &MaturityModelSpec,
    max_level: u32,
) -> (f64, Vec<Warning>) {
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for practice in &spec.practices {
        if practice.level > max_level {
            continue;
        }
        let status = status_of(assessment, &practice.id);
        if status == PracticeStatus::NotRelevant {
            continue;
        }
        let weight = weight_of(assessment, &practice.domain_code);
        denominator += weight;
        if status == PracticeStatus::Met {
            numerator += weight;
        }
    }
    if denominator == 0.0 {
        (
            0.0,
            vec![Warning::new(
                "no-relevant-practices",
                format!(
                    "no relevant weighted practice at levels 1..={max_level} for layer {}",
                    assessment.layer
                ),
            )],
        )
    } else {
        (numerator / denominator, Vec::new())
    }
}

/// Arithmetic mean of objective attainment scores.
pub fn objective_score(assessment: &LayerAssessment) -> (f64, Vec<Warning>) {
    if assessment.objectives.is_empty() {
        return (
            0.0,
            vec![Warning::new(
                "no-objectives",
                format!("no objectives scored for layer {}", assessment.layer),
            )],
        );
    }
    let sum: f64 = assessment.objectives.iter().map(|o| o.score).sum();
    (sum / assessment.objectives.len() as f64, Vec::new())
}

/// Map an achieved level onto [0,1].
pub fn normalize_maturity(achieved_level: u32, num_levels: u32) -> Result<f64, MaturityError> {
    if num_levels == 0 {
        return Err(MaturityError::Domain(
            "maturity model must have at least one level".to_string(),
        ));
    }
    if achieved_level > num_levels {
        return Err(MaturityError::Domain(format!(
            "achieved level {achieved_level} exceeds level count {num_levels}"
        )));
    }
    Ok(f64::from(achieved_level) / f64::from(num_levels))
}

/// The highest level L such that every practice at each level up to L is met
/// or not relevant. A level with only not-relevant practices counts as
/// achieved ("not relevant" must not block certification), with a warning
/// when the whole assessment is vacuous.
pub fn level_achieved(
    assessment: &LayerAssessment,
    spec: &MaturityModelSpec,
) -> (u32, Vec<Warning>) {
    let mut achieved = 0;
    for level in 1..=spec.num_levels {
        let all_ok = spec
            .practices_at_level(level)
            .all(|p| status_of(assessment, &p.id) != PracticeStatus::NotMet);
        if all_ok {
            achieved = level;
        } else {
            break;
        }
    }
    let any_relevant = spec
        .practices
        .iter()
        .any(|p| status_of(assessment, &p.id) != PracticeStatus::NotRelevant);
    let mut warnings = Vec::new();
    if !any_relevant {
        warnings.push(Warning::new(
            "no-relevant-practices",
            format!(
                "every practice marked not relevant for layer {}; levels achieved vacuously",
                assessment.layer
            ),
        ));
    }
    (achieved, warnings)
}

/// Assemble the maturity function output for one layer.
pub fn mu(
    assessment: &LayerAssessment,
    spec: &MaturityModelSpec,
    max_level: u32,
) -> Result<(MuRecord, Vec<Warning>), MaturityError> {
    bind_assessment(assessment, spec)?;
    let mut warnings = Vec::new();
    let (p_bar, w) = practice_score(assessment, spec, max_level);
    warnings.extend(w);
    let (o, w) = objective_score(assessment);
    warnings.extend(w);
    let m = match assessment.maturity_override {
        Some(m) => m,
        None => {
            let (achieved, w) = level_achieved(assessment, spec);
            warnings.extend(w);
            normalize_maturity(achieved, spec.num_levels)?
        }
    };
    let mut domain_coverage = BTreeMap::new();
    for domain in &spec.domains {
        let mut met = 0usize;
        let mut relevant = 0usize;
        for practice in &spec.practices {
            if practice.domain_code != domain.code || practice.level > max_level {
                continue;
            }
            match status_of(assessment, &practice.id) {
                PracticeStatus::Met => {
                    met += 1;
                    relevant += 1;
                }
                PracticeStatus::NotMet => relevant += 1,
                PracticeStatus::NotRelevant => {}
            }
        }
        if relevant > 0 {
            domain_coverage.insert(domain.code.clone(), met as f64 / relevant as f64);
        }
    }
    Ok((
        MuRecord {
            layer: assessment.layer,
            p_bar,
            o,
            m,
            domain_coverage,
        },
        warnings,
    ))
}

/// Per-objective coverage: the matrix gates which domains' coverage counts
/// toward each objective, weighted by the matrix cells.
pub fn objective_domain_breakdown(
    record: &MuRecord,
    matrix: &DomainObjectiveMatrix,
) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for (idx, objective) in matrix.objectives.iter().enumerate() {
        let mut numerator = 0.0;
        let mut denominator = 0.0;
        for (domain, cells) in &matrix.cells {
            let gate = cells[idx];
            if gate == 0.0 {
                continue;
            }
            if let Some(&coverage) = record.domain_coverage.get(domain) {
                numerator += gate * coverage;
                denominator += gate;
            }
        }
        if denominator > 0.0 {
            out.insert(objective.clone(), numerator / denominator);
        }
    }
    out
}

/// Parse a sectioned assessment file.
///
/// Top-level `key=value` lines (`layer`, `role`, `maturity_override`,
/// `objective_domain_matrix`) may appear before the sections
/// `[practice_status]`, `[domain_weights]`, and `[objectives]`, whose rows
/// are comma-separated pairs. `#` starts a comment.
pub fn parse_assessment(text: &str) -> Result<LayerAssessment, MaturityError> {
    #[derive(PartialEq)]
    enum Section {
        Top,
        PracticeStatus,
        DomainWeights,
        Objectives,
    }
    let mut section = Section::Top;
    let mut layer = None;
    let mut role = AssessorRole::Underwriting;
    let mut maturity_override = None;
    let mut matrix_path = None;
    let mut practice_status = BTreeMap::new();
    let mut domain_weights = BTreeMap::new();
    let mut objectives = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| MaturityError::Format {
            line: line_no,
            message,
        };
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = match name {
                "practice_status" => Section::PracticeStatus,
                "domain_weights" => Section::DomainWeights,
                "objectives" => Section::Objectives,
                other => return Err(err(format!("unknown section `{other}`"))),
            };
            continue;
        }
        match section {
            Section::Top => {
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| err("expected `key=value`".to_string()))?;
                match key.trim() {
                    "layer" => {
                        let index: u8 = value
                            .trim()
                            .parse()
                            .map_err(|_| err(format!("bad layer `{value}`")))?;
                        layer = Some(
                            Layer::from_index(index)
                                .ok_or_else(|| err(format!("layer {index} outside 1..=3")))?,
                        );
                    }
                    "role" => {
                        role = match value.trim() {
                            "underwriting" => AssessorRole::Underwriting,
                            "adjuster" => AssessorRole::Adjuster,
                            other => return Err(err(format!("unknown role `{other}`"))),
                        };
                    }
                    "maturity_override" => {
                        maturity_override = Some(
                            value
                                .trim()
                                .parse()
                                .map_err(|_| err(format!("bad maturity override `{value}`")))?,
                        );
                    }
                    "objective_domain_matrix" => {
                        matrix_path = Some(value.trim().to_string());
                    }
                    other => return Err(err(format!("unknown key `{other}`"))),
                }
            }
            Section::PracticeStatus => {
                let (id, value) = line
                    .split_once(',')
                    .ok_or_else(|| err("expected `practice_id,value`".to_string()))?;
                let value: i8 = value
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("bad status `{value}`")))?;
                let status = PracticeStatus::from_value(value)
                    .ok_or_else(|| err(format!("status {value} not in {{-1,0,1}}")))?;
                practice_status.insert(id.trim().to_string(), status);
            }
            Section::DomainWeights => {
                let (code, value) = line
                    .split_once(',')
                    .ok_or_else(|| err("expected `domain,weight`".to_string()))?;
                let weight: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("bad weight `{value}`")))?;
                domain_weights.insert(code.trim().to_string(), weight);
            }
            Section::Objectives => {
                let (label, value) = line
                    .split_once(',')
                    .ok_or_else(|| err("expected `label,score`".to_string()))?;
                let score: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("bad score `{value}`")))?;
                objectives.push(Objective {
                    label: label.trim().to_string(),
                    score,
                });
            }
        }
    }
    let layer = layer.ok_or(MaturityError::Format {
        line: 1,
        message: "assessment must declare `layer=<1|2|3>`".to_string(),
    })?;
    Ok(LayerAssessment {
        layer,
        role,
        practice_status,
        domain_weights,
        objectives,
        maturity_override,
        objective_domain_matrix: matrix_path,
    })
}
