//! In-memory organization model: three layers of entities, relationships
//! between them, and criticality/sensitivity zone membership.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The three strata of the organizational architecture, priced separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Layer {
    Operations,
    Service,
    Systems,
}

impl Layer {
    pub const ALL: [Layer; 3] = [Layer::Operations, Layer::Service, Layer::Systems];

    /// 1 = Operations, 2 = Service, 3 = Systems.
    pub fn index(self) -> u8 {
        match self {
            Layer::Operations => 1,
            Layer::Service => 2,
            Layer::Systems => 3,
        }
    }

    pub fn from_index(index: u8) -> Option<Layer> {
        match index {
            1 => Some(Layer::Operations),
            2 => Some(Layer::Service),
            3 => Some(Layer::Systems),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Layer::Operations => "Operations",
            Layer::Service => "Service",
            Layer::Systems => "Systems",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityNode {
    pub id: String,
    pub display_name: String,
    pub layer: Layer,
    pub attributes: Vec<String>,
}

/// An undirected hyperedge: two or more entity endpoints. Endpoint order is
/// preserved from the declaration but carries no direction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationshipEdge {
    pub id: String,
    pub label: String,
    pub endpoints: Vec<String>,
    pub attributes: Vec<String>,
}

/// Zone membership. Overlap is legal: an entity in both zones carries an
/// integrity requirement.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ZoneAssignment {
    pub criticality_members: BTreeSet<String>,
    pub sensitivity_members: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OrgModel {
    pub name: String,
    pub entities: Vec<EntityNode>,
    pub relationships: Vec<RelationshipEdge>,
    pub zones: ZoneAssignment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    /// Where the problem sits: an entity/relationship id, a layer name, ...
    pub location: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub items: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.items.iter().filter(|d| d.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Diagnostic> {
        self.items.iter().filter(|d| d.severity == Severity::Warning)
    }

    pub fn error_count(&self) -> usize {
        self.errors().count()
    }

    pub fn is_clean(&self) -> bool {
        self.error_count() == 0
    }

    fn push(&mut self, severity: Severity, code: &str, message: String, location: &str) {
        self.items.push(Diagnostic {
            severity,
            code: code.to_string(),
            message,
            location: location.to_string(),
        });
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrgError {
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
}

/// Criticality/sensitivity flags for a single entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneFlags {
    pub criticality: bool,
    pub sensitivity: bool,
}

/// The declarative CIA requirements attached to a component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CiaRequirement {
    Confidentiality,
    Integrity,
    Availability,
}

/// Collapse CIA requirements onto the criticality/sensitivity axes:
/// availability maps to criticality, confidentiality to sensitivity, and
/// integrity to both.
pub fn cia_to_cs(requirements: &BTreeSet<CiaRequirement>) -> ZoneFlags {
    let integrity = requirements.contains(&CiaRequirement::Integrity);
    ZoneFlags {
        criticality: integrity || requirements.contains(&CiaRequirement::Availability),
        sensitivity: integrity || requirements.contains(&CiaRequirement::Confidentiality),
    }
}

impl OrgModel {
    pub fn entity(&self, id: &str) -> Option<&EntityNode> {
        self.entities.iter().find(|e| e.id == id)
    }

    /// Entities of one layer, in declaration order.
    pub fn entities_in_layer(&self, layer: Layer) -> Vec<&EntityNode> {
        self.entities.iter().filter(|e| e.layer == layer).collect()
    }

    pub fn zone_flags(&self, entity_id: &str) -> Result<ZoneFlags, OrgError> {
        if self.entity(entity_id).is_none() {
            return Err(OrgError::UnknownEntity(entity_id.to_string()));
        }
        Ok(ZoneFlags {
            criticality: self.zones.criticality_members.contains(entity_id),
            sensitivity: self.zones.sensitivity_members.contains(entity_id),
        })
    }

    /// Transitive closure over relationships treated as undirected
    /// hyperedges. Always contains the start entity.
    pub fn reachable_from(&self, entity_id: &str) -> Result<BTreeSet<String>, OrgError> {
        if self.entity(entity_id).is_none() {
            return Err(OrgError::UnknownEntity(entity_id.to_string()));
        }
        let mut adjacency: HashMap<&str, Vec<&RelationshipEdge>> = HashMap::new();
        for rel in &self.relationships {
            for endpoint in &rel.endpoints {
                adjacency.entry(endpoint).or_default().push(rel);
            }
        }
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let mut queue = VecDeque::new();
        seen.insert(entity_id.to_string());
        queue.push_back(entity_id.to_string());
        while let Some(current) = queue.pop_front() {
            if let Some(rels) = adjacency.get(current.as_str()) {
                for rel in rels {
                    for endpoint in &rel.endpoints {
                        if !seen.contains(endpoint) {
                            seen.insert(endpoint.clone());
                            queue.push_back(endpoint.clone());
                        }
                    }
                }
            }
        }
        Ok(seen)
    }

    /// Check every structural invariant. Dangling references and duplicate
    /// ids are errors; an empty layer is only a warning (sparse layers are
    /// legal, a single systems entity is a perfectly good model).
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut ids: HashSet<&str> = HashSet::new();
        for entity in &self.entities {
            if entity.id.is_empty() {
                report.push(
                    Severity::Error,
                    "empty-id",
                    "entity with empty id".to_string(),
                    "<entity>",
                );
                continue;
            }
            if !ids.insert(&entity.id) {
                report.push(
                    Severity::Error,
                    "duplicate-id",
                    format!("id `{}` declared more than once", entity.id),
                    &entity.id,
                );
            }
        }
        let entity_ids: HashSet<&str> = self.entities.iter().map(|e| e.id.as_str()).collect();
        let mut rel_ids: HashSet<&str> = HashSet::new();
        for rel in &self.relationships {
            if !rel_ids.insert(&rel.id) || entity_ids.contains(rel.id.as_str()) {
                report.push(
                    Severity::Error,
                    "duplicate-id",
                    format!("id `{}` declared more than once", rel.id),
                    &rel.id,
                );
            }
            if rel.endpoints.len() < 2 {
                report.push(
                    Severity::Error,
                    "relationship-arity",
                    format!(
                        "relationship `{}` has {} endpoint(s), needs at least 2",
                        rel.id,
                        rel.endpoints.len()
                    ),
                    &rel.id,
                );
            }
            for endpoint in &rel.endpoints {
                if !entity_ids.contains(endpoint.as_str()) {
                    report.push(
                        Severity::Error,
                        "dangling-endpoint",
                        format!(
                            "relationship `{}` references undeclared entity `{endpoint}`",
                            rel.id
                        ),
                        &rel.id,
                    );
                }
            }
        }
        for (zone, members) in [
            ("criticality", &self.zones.criticality_members),
            ("sensitivity", &self.zones.sensitivity_members),
        ] {
            for member in members {
                if !entity_ids.contains(member.as_str()) {
                    report.push(
                        Severity::Error,
                        "unknown-zone-member",
                        format!("{zone} zone references undeclared entity `{member}`"),
                        member,
                    );
                }
            }
        }
        for layer in Layer::ALL {
            if self.entities_in_layer(layer).is_empty() {
                report.push(
                    Severity::Warning,
                    "empty-layer",
                    format!("layer {} has no entities", layer.name()),
                    layer.name(),
                );
            }
        }
        report
    }
}
