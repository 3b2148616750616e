//! Machine-readable expert knowledge: entities, characteristic dimensions,
//! context links and topology relations.
//!
//! The XML layout mirrors the ontology's core classes: an `<observation>` of
//! an entity holds `<measurement>`s of characteristics, each with one
//! `<dimension>` of `<value>`s; `<context>` elements rebind a dimension
//! depending on a semantic key sampled elsewhere; `<relationship
//! type="topology">` elements constrain the scene composition.
//!
//! ```xml
//! <ontology version="1.0">
//!   <sceneDefaults sceneSize="20480" sensorResolution="10"/>
//!   <observation entity="WindFarm">
//!     <measurement characteristic="size" unit="km">
//!       <dimension kind="choice-set">
//!         <value key="small" value="5"/>
//!         <value key="large" value="17" weight="2"/>
//!       </dimension>
//!     </measurement>
//!     <context characteristic="gridX" source="WindFarm.size" key="small">
//!       <dimension kind="discrete-uniform-range" lower="6" upper="10"/>
//!     </context>
//!     <relationship type="topology" predicate="MustNotOverlap" object="Land"/>
//!   </observation>
//! </ontology>
//! ```

mod parse;
mod sample;
mod snapshot;
mod validate;
mod write;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::xml::XmlError;

pub use parse::{parse_document, parse_ontology};
pub use sample::{sample_specification, ContextKeys, SampleError};
pub use snapshot::{parse_snapshot, write_snapshot, OntologySnapshot};
pub use validate::{validate_ontology, Diagnostic, DiagnosticCode};
pub use write::write_ontology;

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("malformed XML at {0}")]
    Xml(#[from] XmlError),
    #[error("schema error at {0}")]
    Schema(XmlError),
    #[error("context cycle: {}", .links.join(" -> "))]
    ContextCycle { links: Vec<String> },
    #[error("invalid ontology: {}", .diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid { diagnostics: Vec<Diagnostic> },
}

/// Scene extent defaults declared by the ontology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneDefaults {
    pub scene_size_m: f64,
    pub sensor_resolution_m: f64,
}

impl Default for SceneDefaults {
    fn default() -> Self {
        Self {
            scene_size_m: 20_480.0,
            sensor_resolution_m: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ontology {
    pub version: String,
    pub scene_defaults: SceneDefaults,
    pub entities: Vec<Entity>,
}

impl Ontology {
    pub fn entity(&self, name: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.name == name)
    }

    pub fn characteristic(&self, r: &CharacteristicRef) -> Option<&Characteristic> {
        self.entity(&r.entity)?.characteristic(&r.characteristic)
    }

    /// All topology relations, in declaration order.
    pub fn relations(&self) -> impl Iterator<Item = &TopologyRelation> {
        self.entities.iter().flat_map(|e| e.relations.iter())
    }

    /// Entity names ordered so that every context source precedes its
    /// targets. Ties keep declaration order. Requires an acyclic ontology.
    pub fn resolution_order(&self) -> Vec<&str> {
        validate::entity_order(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entity {
    pub name: String,
    pub characteristics: Vec<Characteristic>,
    pub relations: Vec<TopologyRelation>,
    /// Context links whose target characteristic belongs to this entity.
    pub contexts: Vec<ContextLink>,
}

impl Entity {
    pub fn characteristic(&self, name: &str) -> Option<&Characteristic> {
        self.characteristics.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Characteristic {
    pub name: String,
    /// Unit of the numeric values, e.g. `km`, `m`, `px`, `deg`.
    pub unit: Option<String>,
    pub dimension: Dimension,
}

/// One keyed item of a choice-set dimension, e.g. `small:5 km`.
#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    pub key: String,
    pub value: f64,
    pub weight: Option<f64>,
}

/// The space of values a characteristic can take.
#[derive(Debug, Clone, PartialEq)]
pub enum Dimension {
    ChoiceSet(Vec<Choice>),
    UniformRange { lower: f64, upper: f64 },
    DiscreteUniformRange { lower: i64, upper: i64 },
    Constant(f64),
    /// A query against the template store for the given class tag.
    TemplateQuery { class: String },
}

impl Dimension {
    pub fn kind(&self) -> &'static str {
        match self {
            Dimension::ChoiceSet(_) => "choice-set",
            Dimension::UniformRange { .. } => "uniform-range",
            Dimension::DiscreteUniformRange { .. } => "discrete-uniform-range",
            Dimension::Constant(_) => "constant",
            Dimension::TemplateQuery { .. } => "template-query",
        }
    }

    pub fn choice(&self, key: &str) -> Option<&Choice> {
        match self {
            Dimension::ChoiceSet(items) => items.iter().find(|c| c.key == key),
            _ => None,
        }
    }

    pub fn keys(&self) -> Vec<&str> {
        match self {
            Dimension::ChoiceSet(items) => items.iter().map(|c| c.key.as_str()).collect(),
            _ => Vec::new(),
        }
    }

    /// Membership of a sampled value in this dimension.
    pub fn contains(&self, v: &SampledValue) -> bool {
        match self {
            Dimension::ChoiceSet(items) => items
                .iter()
                .any(|c| Some(c.key.as_str()) == v.key.as_deref() && c.value == v.value),
            Dimension::UniformRange { lower, upper } => {
                v.key.is_none() && v.value >= *lower && v.value <= *upper
            }
            Dimension::DiscreteUniformRange { lower, upper } => {
                v.key.is_none()
                    && v.value.fract() == 0.0
                    && v.value >= *lower as f64
                    && v.value <= *upper as f64
            }
            Dimension::Constant(c) => v.key.is_none() && v.value == *c,
            Dimension::TemplateQuery { class } => {
                v.key.as_deref() == Some(class.as_str())
                    && v.value.fract() == 0.0
                    && (0.0..=u32::MAX as f64).contains(&v.value)
            }
        }
    }
}

/// `Entity.characteristic` address.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CharacteristicRef {
    pub entity: String,
    pub characteristic: String,
}

impl CharacteristicRef {
    pub fn new(entity: impl Into<String>, characteristic: impl Into<String>) -> Self {
        Self {
            entity: entity.into(),
            characteristic: characteristic.into(),
        }
    }

    /// Parses `Entity.characteristic`.
    pub fn parse(s: &str) -> Option<Self> {
        let (e, c) = s.split_once('.')?;
        (!e.is_empty() && !c.is_empty()).then(|| Self::new(e, c))
    }
}

impl fmt::Display for CharacteristicRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.entity, self.characteristic)
    }
}

/// When `source` was sampled with semantic key `key`, the `target`
/// characteristic draws from `dimension` instead of its declared one.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextLink {
    pub source: CharacteristicRef,
    pub key: String,
    pub target: CharacteristicRef,
    pub dimension: Dimension,
}

impl fmt::Display for ContextLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}] -> {}", self.source, self.key, self.target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Predicate {
    MustBeInside,
    MustBeCoincidentWith,
    MustNotOverlap,
    /// Maximum separation in meters.
    MustBeWithinDistance(f64),
}

impl Predicate {
    pub fn name(&self) -> &'static str {
        match self {
            Predicate::MustBeInside => "MustBeInside",
            Predicate::MustBeCoincidentWith => "MustBeCoincidentWith",
            Predicate::MustNotOverlap => "MustNotOverlap",
            Predicate::MustBeWithinDistance(_) => "MustBeWithinDistance",
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::MustBeWithinDistance(d) => write!(f, "MustBeWithinDistance({d} m)"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologyRelation {
    pub subject: String,
    pub predicate: Predicate,
    pub object: String,
}

impl fmt::Display for TopologyRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

/// One drawn value; `key` carries the semantic label for choice-set draws
/// and the class tag for template queries.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledValue {
    pub value: f64,
    pub key: Option<String>,
}

impl SampledValue {
    pub fn numeric(value: f64) -> Self {
        Self { value, key: None }
    }

    pub fn keyed(value: f64, key: impl Into<String>) -> Self {
        Self {
            value,
            key: Some(key.into()),
        }
    }
}

/// The values selected for one scene element of an entity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneElementSpecification {
    pub entity: String,
    pub sampled: BTreeMap<String, SampledValue>,
}

impl SceneElementSpecification {
    pub fn get(&self, characteristic: &str) -> Option<&SampledValue> {
        self.sampled.get(characteristic)
    }

    pub fn value(&self, characteristic: &str) -> Option<f64> {
        self.get(characteristic).map(|v| v.value)
    }

    pub fn key(&self, characteristic: &str) -> Option<&str> {
        self.get(characteristic).and_then(|v| v.key.as_deref())
    }

    /// Semantic keys produced by this specification, for downstream context.
    pub fn context_keys(&self) -> impl Iterator<Item = (CharacteristicRef, &str)> + '_ {
        self.sampled.iter().filter_map(move |(c, v)| {
            v.key
                .as_deref()
                .map(|k| (CharacteristicRef::new(self.entity.clone(), c.clone()), k))
        })
    }

    /// Checks that every sampled value is a member of its declared (or
    /// context-substituted) dimension.
    pub fn is_member_of(&self, ontology: &Ontology, context: &ContextKeys) -> bool {
        let Some(entity) = ontology.entity(&self.entity) else {
            return false;
        };
        let mut keys = context.clone();
        keys.extend(self.context_keys().map(|(r, k)| (r, k.to_string())));
        self.sampled.iter().all(|(name, v)| {
            entity.characteristic(name).is_some_and(|c| {
                sample::effective_dimension(entity, c, &keys)
                    .map(|d| d.contains(v))
                    .unwrap_or(false)
            })
        })
    }
}

/// Multiplier from a length unit to meters; `None` for non-length units.
pub fn meters_per_unit(unit: &str) -> Option<f64> {
    match unit {
        "m" => Some(1.0),
        "km" => Some(1000.0),
        _ => None,
    }
}

#[cfg(test)]
mod tests;
