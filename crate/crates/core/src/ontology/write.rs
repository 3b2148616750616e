use super::*;
use crate::xml::XmlWriter;

pub(super) fn dimension_attrs(d: &Dimension) -> Vec<(&'static str, String)> {
    let mut attrs = vec![("kind", d.kind().to_string())];
    match d {
        Dimension::ChoiceSet(_) => {}
        Dimension::UniformRange { lower, upper } => {
            attrs.push(("lower", lower.to_string()));
            attrs.push(("upper", upper.to_string()));
        }
        Dimension::DiscreteUniformRange { lower, upper } => {
            attrs.push(("lower", lower.to_string()));
            attrs.push(("upper", upper.to_string()));
        }
        Dimension::Constant(v) => attrs.push(("value", v.to_string())),
        Dimension::TemplateQuery { class } => attrs.push(("class", class.clone())),
    }
    attrs
}

fn write_dimension(w: &mut XmlWriter, d: &Dimension) {
    let attrs = dimension_attrs(d);
    match d {
        Dimension::ChoiceSet(items) => {
            w.open("dimension", &attrs);
            for c in items {
                let mut a = vec![("key", c.key.clone()), ("value", c.value.to_string())];
                if let Some(weight) = c.weight {
                    a.push(("weight", weight.to_string()));
                }
                w.empty("value", &a);
            }
            w.close("dimension");
        }
        _ => w.empty("dimension", &attrs),
    }
}

/// Serializes an ontology in the same schema [`parse_document`] reads.
pub fn write_ontology(o: &Ontology) -> String {
    let mut w = XmlWriter::new();
    w.open("ontology", &[("version", o.version.clone())]);
    w.empty(
        "sceneDefaults",
        &[
            ("sceneSize", o.scene_defaults.scene_size_m.to_string()),
            (
                "sensorResolution",
                o.scene_defaults.sensor_resolution_m.to_string(),
            ),
        ],
    );
    for e in &o.entities {
        w.open("observation", &[("entity", e.name.clone())]);
        for c in &e.characteristics {
            let mut attrs = vec![("characteristic", c.name.clone())];
            if let Some(unit) = &c.unit {
                attrs.push(("unit", unit.clone()));
            }
            w.open("measurement", &attrs);
            write_dimension(&mut w, &c.dimension);
            w.close("measurement");
        }
        for link in &e.contexts {
            w.open(
                "context",
                &[
                    ("characteristic", link.target.characteristic.clone()),
                    ("source", link.source.to_string()),
                    ("key", link.key.clone()),
                ],
            );
            write_dimension(&mut w, &link.dimension);
            w.close("context");
        }
        for r in &e.relations {
            let mut attrs = vec![
                ("type", "topology".to_string()),
                ("predicate", r.predicate.name().to_string()),
                ("object", r.object.clone()),
            ];
            if let Predicate::MustBeWithinDistance(d) = r.predicate {
                attrs.push(("distance", d.to_string()));
            }
            w.empty("relationship", &attrs);
        }
        w.close("observation");
    }
    w.close("ontology");
    w.finish()
}
