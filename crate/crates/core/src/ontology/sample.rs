use std::collections::BTreeMap;

use rand::Rng;

use super::*;

/// Semantic keys already resolved for the current example, addressed by
/// `Entity.characteristic`.
///
/// An entry for a characteristic of the entity being sampled forces that
/// choice instead of drawing it.
pub type ContextKeys = BTreeMap<CharacteristicRef, String>;

#[derive(Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("unknown entity {0:?}")]
    UnknownEntity(String),
    #[error("context link {link} is unresolved: no key for {missing} in context")]
    UnresolvedContext { link: String, missing: CharacteristicRef },
    #[error("forced key {key:?} is not a choice of {target}")]
    InvalidForcedKey { target: CharacteristicRef, key: String },
    #[error("cannot force a key on {target}: its dimension is a {kind}")]
    ForcedNonChoice { target: CharacteristicRef, kind: &'static str },
    #[error("intra-entity context cycle in {0}")]
    Cycle(String),
}

/// Dimension in effect for `c` given the resolved keys: the first context
/// link whose source key matches wins, otherwise the declared dimension.
pub(crate) fn effective_dimension<'a>(
    entity: &'a Entity,
    c: &'a Characteristic,
    keys: &ContextKeys,
) -> Result<&'a Dimension, SampleError> {
    let mut chosen = None;
    for link in entity
        .contexts
        .iter()
        .filter(|l| l.target.characteristic == c.name)
    {
        let key = keys
            .get(&link.source)
            .ok_or_else(|| SampleError::UnresolvedContext {
                link: link.to_string(),
                missing: link.source.clone(),
            })?;
        if chosen.is_none() && *key == link.key {
            chosen = Some(&link.dimension);
        }
    }
    Ok(chosen.unwrap_or(&c.dimension))
}

/// Characteristics of one entity ordered so intra-entity context sources
/// come before their targets (declaration order otherwise).
fn characteristic_order(entity: &Entity) -> Result<Vec<&Characteristic>, SampleError> {
    let mut remaining: Vec<&Characteristic> = entity.characteristics.iter().collect();
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let ready = remaining.iter().position(|c| {
            entity.contexts.iter().all(|l| {
                l.target.characteristic != c.name
                    || l.source.entity != entity.name
                    || order.iter().any(|o: &&Characteristic| o.name == l.source.characteristic)
                    || entity.characteristic(&l.source.characteristic).is_none()
            })
        });
        match ready {
            Some(i) => order.push(remaining.remove(i)),
            None => return Err(SampleError::Cycle(entity.name.clone())),
        }
    }
    Ok(order)
}

fn draw(d: &Dimension, rng: &mut impl Rng) -> SampledValue {
    match d {
        Dimension::ChoiceSet(items) => {
            let weighted = items.iter().any(|c| c.weight.is_some());
            let idx = if weighted {
                let total: f64 = items.iter().map(|c| c.weight.unwrap_or(1.0)).sum();
                let mut u = rng.random::<f64>() * total;
                let mut pick = items.len() - 1;
                for (i, c) in items.iter().enumerate() {
                    let w = c.weight.unwrap_or(1.0);
                    if u < w {
                        pick = i;
                        break;
                    }
                    u -= w;
                }
                pick
            } else {
                rng.random_range(0..items.len())
            };
            SampledValue::keyed(items[idx].value, items[idx].key.clone())
        }
        Dimension::UniformRange { lower, upper } => {
            let u: f64 = rng.random();
            SampledValue::numeric((lower + (upper - lower) * u).clamp(*lower, *upper))
        }
        Dimension::DiscreteUniformRange { lower, upper } => {
            SampledValue::numeric(rng.random_range(*lower..=*upper) as f64)
        }
        Dimension::Constant(v) => SampledValue::numeric(*v),
        Dimension::TemplateQuery { class } => {
            SampledValue::keyed(rng.random::<u32>() as f64, class.clone())
        }
    }
}

/// Samples one value per characteristic of `entity`.
///
/// Context links are resolved against `context` plus keys sampled earlier in
/// the same entity. A context entry addressing one of this entity's
/// choice-set characteristics forces that key.
pub fn sample_specification(
    o: &Ontology,
    entity: &str,
    context: &ContextKeys,
    rng: &mut impl Rng,
) -> Result<SceneElementSpecification, SampleError> {
    let e = o
        .entity(entity)
        .ok_or_else(|| SampleError::UnknownEntity(entity.to_string()))?;
    let mut keys = context.clone();
    let mut spec = SceneElementSpecification {
        entity: e.name.clone(),
        sampled: BTreeMap::new(),
    };

    for c in characteristic_order(e)? {
        let dim = effective_dimension(e, c, &keys)?;
        let target = CharacteristicRef::new(e.name.clone(), c.name.clone());
        let value = match context.get(&target) {
            Some(forced) => match dim {
                Dimension::ChoiceSet(_) => {
                    let choice = dim.choice(forced).ok_or_else(|| SampleError::InvalidForcedKey {
                        target: target.clone(),
                        key: forced.clone(),
                    })?;
                    SampledValue::keyed(choice.value, choice.key.clone())
                }
                other => {
                    return Err(SampleError::ForcedNonChoice {
                        target,
                        kind: other.kind(),
                    })
                }
            },
            None => draw(dim, rng),
        };
        if let Some(k) = &value.key {
            keys.insert(target, k.clone());
        }
        spec.sampled.insert(c.name.clone(), value);
    }
    Ok(spec)
}
