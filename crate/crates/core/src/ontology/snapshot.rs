use std::collections::BTreeMap;

use super::*;
use crate::xml::{self, XmlWriter};

/// Per-example record of every sampled value plus the seed that produced
/// them.
///
/// `parameters` carries the generation settings that are not ontology
/// values (composition class, recipe flags, extent), so the example can be
/// rebuilt from the snapshot alone.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OntologySnapshot {
    pub example_id: String,
    pub rng_seed: u64,
    /// 32-bit words consumed from the generator by the end of generation.
    pub draws: u64,
    pub parameters: BTreeMap<String, String>,
    pub specifications: Vec<SceneElementSpecification>,
}

impl OntologySnapshot {
    pub fn new(example_id: impl Into<String>, rng_seed: u64) -> Self {
        Self {
            example_id: example_id.into(),
            rng_seed,
            ..Self::default()
        }
    }

    pub fn specification(&self, entity: &str) -> Option<&SceneElementSpecification> {
        self.specifications.iter().find(|s| s.entity == entity)
    }
}

/// Serializes a snapshot; the layout mirrors the ontology's data-generation
/// side (`<sceneElementSpecification>` per sampled entity).
pub fn write_snapshot(s: &OntologySnapshot) -> String {
    let mut w = XmlWriter::new();
    w.open(
        "snapshot",
        &[
            ("exampleId", s.example_id.clone()),
            ("seed", s.rng_seed.to_string()),
            ("draws", s.draws.to_string()),
        ],
    );
    for (name, value) in &s.parameters {
        w.empty("parameter", &[("name", name.clone()), ("value", value.clone())]);
    }
    for spec in &s.specifications {
        if spec.sampled.is_empty() {
            w.empty("sceneElementSpecification", &[("entity", spec.entity.clone())]);
            continue;
        }
        w.open("sceneElementSpecification", &[("entity", spec.entity.clone())]);
        for (characteristic, v) in &spec.sampled {
            let mut attrs = vec![
                ("characteristic", characteristic.clone()),
                ("value", v.value.to_string()),
            ];
            if let Some(k) = &v.key {
                attrs.push(("key", k.clone()));
            }
            w.empty("value", &attrs);
        }
        w.close("sceneElementSpecification");
    }
    w.close("snapshot");
    w.finish()
}

pub fn parse_snapshot(document: &str) -> Result<OntologySnapshot, OntologyError> {
    let root = xml::parse(document)?;
    if root.name != "snapshot" {
        return Err(OntologyError::Schema(
            root.error(format!("expected <snapshot>, found <{}>", root.name)),
        ));
    }
    let schema = OntologyError::Schema;
    let mut snapshot = OntologySnapshot {
        example_id: root.required_attr("exampleId").map_err(schema)?.to_string(),
        rng_seed: root.u64_attr("seed").map_err(schema)?,
        draws: match root.attr("draws") {
            Some(_) => root.u64_attr("draws").map_err(schema)?,
            None => 0,
        },
        ..OntologySnapshot::default()
    };
    for child in &root.children {
        match child.name.as_str() {
            "parameter" => {
                snapshot.parameters.insert(
                    child.required_attr("name").map_err(schema)?.to_string(),
                    child.required_attr("value").map_err(schema)?.to_string(),
                );
            }
            "sceneElementSpecification" => {
                let mut spec = SceneElementSpecification {
                    entity: child.required_attr("entity").map_err(schema)?.to_string(),
                    sampled: BTreeMap::new(),
                };
                for v in child.children_named("value") {
                    spec.sampled.insert(
                        v.required_attr("characteristic").map_err(schema)?.to_string(),
                        SampledValue {
                            value: v.f64_attr("value").map_err(schema)?,
                            key: v.attr("key").map(str::to_string),
                        },
                    );
                }
                snapshot.specifications.push(spec);
            }
            other => {
                return Err(OntologyError::Schema(
                    child.error(format!("unexpected element <{other}>")),
                ))
            }
        }
    }
    Ok(snapshot)
}
