use super::*;
use crate::xml::{self, Element};

/// Parses and validates an ontology document.
pub fn parse_ontology(document: &str) -> Result<Ontology, OntologyError> {
    let ontology = parse_document(document)?;
    let diagnostics = validate_ontology(&ontology);
    if diagnostics.is_empty() {
        return Ok(ontology);
    }
    if let Some(cycle) = diagnostics
        .iter()
        .find(|d| d.code == DiagnosticCode::ContextCycle)
    {
        return Err(OntologyError::ContextCycle {
            links: cycle.related.clone(),
        });
    }
    Err(OntologyError::Invalid { diagnostics })
}

/// Structural parse only; invariants are left to [`validate_ontology`].
pub fn parse_document(document: &str) -> Result<Ontology, OntologyError> {
    let root = xml::parse(document)?;
    if root.name != "ontology" {
        return Err(OntologyError::Schema(
            root.error(format!("expected <ontology>, found <{}>", root.name)),
        ));
    }
    from_element(&root).map_err(OntologyError::Schema)
}

fn from_element(root: &Element) -> Result<Ontology, xml::XmlError> {
    let version = root.attr("version").unwrap_or("1.0").to_string();
    let scene_defaults = match root.child("sceneDefaults") {
        Some(el) => SceneDefaults {
            scene_size_m: el.f64_attr("sceneSize")?,
            sensor_resolution_m: el.f64_attr("sensorResolution")?,
        },
        None => SceneDefaults::default(),
    };

    let mut entities = Vec::new();
    for child in &root.children {
        match child.name.as_str() {
            "observation" => entities.push(parse_entity(child)?),
            "sceneDefaults" => {}
            other => return Err(child.error(format!("unexpected element <{other}>"))),
        }
    }

    Ok(Ontology {
        version,
        scene_defaults,
        entities,
    })
}

fn parse_entity(el: &Element) -> Result<Entity, xml::XmlError> {
    let name = el.required_attr("entity")?.to_string();
    let mut entity = Entity {
        name: name.clone(),
        characteristics: Vec::new(),
        relations: Vec::new(),
        contexts: Vec::new(),
    };

    for child in &el.children {
        match child.name.as_str() {
            "measurement" => {
                let dim = child
                    .child("dimension")
                    .ok_or_else(|| child.error("<measurement> needs a <dimension>"))?;
                entity.characteristics.push(Characteristic {
                    name: child.required_attr("characteristic")?.to_string(),
                    unit: child.attr("unit").map(str::to_string),
                    dimension: parse_dimension(dim)?,
                });
            }
            "context" => {
                let source_raw = child.required_attr("source")?;
                let source = CharacteristicRef::parse(source_raw).ok_or_else(|| {
                    child.error(format!(
                        "context source must be `Entity.characteristic`, got {source_raw:?}"
                    ))
                })?;
                let dim = child
                    .child("dimension")
                    .ok_or_else(|| child.error("<context> needs a <dimension>"))?;
                entity.contexts.push(ContextLink {
                    source,
                    key: child.required_attr("key")?.to_string(),
                    target: CharacteristicRef::new(
                        name.clone(),
                        child.required_attr("characteristic")?,
                    ),
                    dimension: parse_dimension(dim)?,
                });
            }
            "relationship" => {
                let kind = child.attr("type").unwrap_or("topology");
                if kind != "topology" {
                    return Err(child.error(format!("unsupported relationship type {kind:?}")));
                }
                let predicate = match child.required_attr("predicate")? {
                    "MustBeInside" => Predicate::MustBeInside,
                    "MustBeCoincidentWith" => Predicate::MustBeCoincidentWith,
                    "MustNotOverlap" => Predicate::MustNotOverlap,
                    "MustBeWithinDistance" => {
                        Predicate::MustBeWithinDistance(child.f64_attr("distance")?)
                    }
                    other => return Err(child.error(format!("unknown predicate {other:?}"))),
                };
                entity.relations.push(TopologyRelation {
                    subject: name.clone(),
                    predicate,
                    object: child.required_attr("object")?.to_string(),
                });
            }
            other => return Err(child.error(format!("unexpected element <{other}>"))),
        }
    }
    Ok(entity)
}

pub(super) fn parse_dimension(el: &Element) -> Result<Dimension, xml::XmlError> {
    let kind = el.required_attr("kind")?;
    Ok(match kind {
        "choice-set" => {
            let mut items = Vec::new();
            for v in el.children_named("value") {
                let weight = match v.attr("weight") {
                    Some(_) => Some(v.f64_attr("weight")?),
                    None => None,
                };
                items.push(Choice {
                    key: v.required_attr("key")?.to_string(),
                    value: v.f64_attr("value")?,
                    weight,
                });
            }
            Dimension::ChoiceSet(items)
        }
        "uniform-range" => Dimension::UniformRange {
            lower: el.f64_attr("lower")?,
            upper: el.f64_attr("upper")?,
        },
        "discrete-uniform-range" => Dimension::DiscreteUniformRange {
            lower: el.i64_attr("lower")?,
            upper: el.i64_attr("upper")?,
        },
        "constant" => Dimension::Constant(el.f64_attr("value")?),
        "template-query" => Dimension::TemplateQuery {
            class: el.required_attr("class")?.to_string(),
        },
        other => return Err(el.error(format!("unknown dimension kind {other:?}"))),
    })
}
