use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::cmp::Reverse;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::*;

/// Stable diagnostic codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiagnosticCode {
    DuplicateEntity,
    DuplicateCharacteristic,
    EmptyDimension,
    DuplicateChoiceKey,
    InvalidRange,
    InvalidValue,
    InvalidWeight,
    UnknownEntity,
    UnknownCharacteristic,
    UnknownContextKey,
    ContextSourceNotChoice,
    ContextKindMismatch,
    SelfRelation,
    InvalidDistance,
    ContextCycle,
    InvalidSceneDefaults,
}

impl DiagnosticCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DiagnosticCode::DuplicateEntity => "DUPLICATE_ENTITY",
            DiagnosticCode::DuplicateCharacteristic => "DUPLICATE_CHARACTERISTIC",
            DiagnosticCode::EmptyDimension => "EMPTY_DIMENSION",
            DiagnosticCode::DuplicateChoiceKey => "DUPLICATE_CHOICE_KEY",
            DiagnosticCode::InvalidRange => "INVALID_RANGE",
            DiagnosticCode::InvalidValue => "INVALID_VALUE",
            DiagnosticCode::InvalidWeight => "INVALID_WEIGHT",
            DiagnosticCode::UnknownEntity => "UNKNOWN_ENTITY",
            DiagnosticCode::UnknownCharacteristic => "UNKNOWN_CHARACTERISTIC",
            DiagnosticCode::UnknownContextKey => "UNKNOWN_CONTEXT_KEY",
            DiagnosticCode::ContextSourceNotChoice => "CONTEXT_SOURCE_NOT_CHOICE",
            DiagnosticCode::ContextKindMismatch => "CONTEXT_KIND_MISMATCH",
            DiagnosticCode::SelfRelation => "SELF_RELATION",
            DiagnosticCode::InvalidDistance => "INVALID_DISTANCE",
            DiagnosticCode::ContextCycle => "CONTEXT_CYCLE",
            DiagnosticCode::InvalidSceneDefaults => "INVALID_SCENE_DEFAULTS",
        }
    }
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    /// Where the violation was found, e.g. `WindFarm.size`.
    pub location: String,
    pub message: String,
    /// Links or names involved (the links of a cycle, for example).
    pub related: Vec<String>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code, self.location, self.message)
    }
}

struct Collector(Vec<Diagnostic>);

impl Collector {
    fn push(&mut self, code: DiagnosticCode, location: impl Into<String>, message: impl Into<String>) {
        self.0.push(Diagnostic {
            code,
            location: location.into(),
            message: message.into(),
            related: Vec::new(),
        });
    }
}

fn check_dimension(out: &mut Collector, location: &str, d: &Dimension) {
    use DiagnosticCode::*;
    match d {
        Dimension::ChoiceSet(items) => {
            if items.is_empty() {
                out.push(EmptyDimension, location, "choice-set has no values");
            }
            let mut seen = HashSet::new();
            for c in items {
                if !seen.insert(c.key.as_str()) {
                    out.push(DuplicateChoiceKey, location, format!("duplicate key {:?}", c.key));
                }
                if !c.value.is_finite() {
                    out.push(InvalidValue, location, format!("value of {:?} is not finite", c.key));
                }
                if let Some(w) = c.weight {
                    if !(w.is_finite() && w > 0.0) {
                        out.push(InvalidWeight, location, format!("weight of {:?} must be positive", c.key));
                    }
                }
            }
        }
        Dimension::UniformRange { lower, upper } => {
            if !(lower.is_finite() && upper.is_finite() && lower <= upper) {
                out.push(InvalidRange, location, format!("range [{lower}, {upper}] is invalid"));
            }
        }
        Dimension::DiscreteUniformRange { lower, upper } => {
            if lower > upper {
                out.push(InvalidRange, location, format!("range [{lower}, {upper}] is invalid"));
            }
        }
        Dimension::Constant(v) => {
            if !v.is_finite() {
                out.push(InvalidValue, location, "constant is not finite");
            }
        }
        Dimension::TemplateQuery { class } => {
            if class.is_empty() {
                out.push(EmptyDimension, location, "template query has no class");
            }
        }
    }
}

/// Checks every ontology invariant; an empty result means the ontology is
/// valid.
pub fn validate_ontology(o: &Ontology) -> Vec<Diagnostic> {
    use DiagnosticCode::*;
    let mut out = Collector(Vec::new());

    let sd = o.scene_defaults;
    let ratio = sd.scene_size_m / sd.sensor_resolution_m;
    if !(sd.scene_size_m > 0.0 && sd.sensor_resolution_m > 0.0 && ratio.is_finite())
        || (ratio - ratio.round()).abs() > 1e-9
    {
        out.push(
            InvalidSceneDefaults,
            "sceneDefaults",
            format!(
                "scene size {} m is not a positive multiple of resolution {} m",
                sd.scene_size_m, sd.sensor_resolution_m
            ),
        );
    }

    let mut names = HashSet::new();
    for e in &o.entities {
        if !names.insert(e.name.as_str()) {
            out.push(DuplicateEntity, &e.name, format!("entity {:?} declared twice", e.name));
        }
        let mut chars = HashSet::new();
        for c in &e.characteristics {
            let loc = format!("{}.{}", e.name, c.name);
            if !chars.insert(c.name.as_str()) {
                out.push(
                    DuplicateCharacteristic,
                    &loc,
                    format!("characteristic {:?} declared twice in {}", c.name, e.name),
                );
            }
            check_dimension(&mut out, &loc, &c.dimension);
        }

        for r in &e.relations {
            let loc = format!("{} {}", e.name, r.predicate.name());
            if o.entity(&r.object).is_none() {
                out.push(
                    UnknownEntity,
                    &loc,
                    format!("relation object {:?} is not a declared entity", r.object),
                );
            }
            if r.subject == r.object {
                out.push(SelfRelation, &loc, format!("{} relates to itself", r.subject));
            }
            if let Predicate::MustBeWithinDistance(d) = r.predicate {
                if !(d.is_finite() && d >= 0.0) {
                    out.push(InvalidDistance, &loc, format!("distance {d} must be non-negative"));
                }
            }
        }

        for link in &e.contexts {
            let loc = link.to_string();
            check_dimension(&mut out, &loc, &link.dimension);
            match e.characteristic(&link.target.characteristic) {
                None => out.push(
                    UnknownCharacteristic,
                    &loc,
                    format!("context target {} does not exist", link.target),
                ),
                Some(t) if t.dimension.kind() != link.dimension.kind() => out.push(
                    ContextKindMismatch,
                    &loc,
                    format!(
                        "context replaces a {} with a {}",
                        t.dimension.kind(),
                        link.dimension.kind()
                    ),
                ),
                Some(_) => {}
            }
            match o.entity(&link.source.entity) {
                None => out.push(
                    UnknownEntity,
                    &loc,
                    format!("context source entity {:?} does not exist", link.source.entity),
                ),
                Some(src) => match src.characteristic(&link.source.characteristic) {
                    None => out.push(
                        UnknownCharacteristic,
                        &loc,
                        format!("context source {} does not exist", link.source),
                    ),
                    Some(c) => match &c.dimension {
                        Dimension::ChoiceSet(_) => {
                            if c.dimension.choice(&link.key).is_none() {
                                out.push(
                                    UnknownContextKey,
                                    &loc,
                                    format!(
                                        "key {:?} is not one of {}'s choices {:?}",
                                        link.key,
                                        link.source,
                                        c.dimension.keys()
                                    ),
                                );
                            }
                        }
                        other => out.push(
                            ContextSourceNotChoice,
                            &loc,
                            format!("context source {} is a {}, not a choice-set", link.source, other.kind()),
                        ),
                    },
                },
            }
        }
    }

    out.0.extend(cycle_diagnostics(o));
    out.0
}

fn cycle_diagnostics(o: &Ontology) -> Vec<Diagnostic> {
    let links: Vec<&ContextLink> = o.entities.iter().flat_map(|e| e.contexts.iter()).collect();
    let mut graph: DiGraph<CharacteristicRef, ()> = DiGraph::new();
    let mut index = HashMap::new();
    let mut node = |g: &mut DiGraph<CharacteristicRef, ()>, r: &CharacteristicRef| {
        *index.entry(r.clone()).or_insert_with(|| g.add_node(r.clone()))
    };
    for link in &links {
        let a = node(&mut graph, &link.source);
        let b = node(&mut graph, &link.target);
        graph.update_edge(a, b, ());
    }

    let mut out = Vec::new();
    let mut sccs = tarjan_scc(&graph);
    // Report in declaration order of the first link touching each cycle.
    sccs.retain(|scc| scc.len() > 1 || graph.contains_edge(scc[0], scc[0]));
    let mut cycles: Vec<(usize, Diagnostic)> = sccs
        .into_iter()
        .map(|scc| {
            let members: BTreeSet<&CharacteristicRef> = scc.iter().map(|&n| &graph[n]).collect();
            let involved: Vec<(usize, &ContextLink)> = links
                .iter()
                .enumerate()
                .filter(|(_, l)| members.contains(&l.source) && members.contains(&l.target))
                .map(|(i, l)| (i, *l))
                .collect();
            let first = involved.first().map_or(usize::MAX, |(i, _)| *i);
            let related: Vec<String> = involved.iter().map(|(_, l)| l.to_string()).collect();
            let location = members
                .iter()
                .map(|m| m.to_string())
                .collect::<Vec<_>>()
                .join(", ");
            (
                first,
                Diagnostic {
                    code: DiagnosticCode::ContextCycle,
                    location,
                    message: format!("context links form a cycle: {}", related.join("; ")),
                    related,
                },
            )
        })
        .collect();
    cycles.sort_by_key(|(i, _)| *i);
    out.extend(cycles.into_iter().map(|(_, d)| d));
    out
}

/// Kahn's algorithm over the entity-level context graph, smallest
/// declaration index first. Entities left over by a cycle are appended in
/// declaration order.
pub(super) fn entity_order(o: &Ontology) -> Vec<&str> {
    let n = o.entities.len();
    let pos: HashMap<&str, usize> = o
        .entities
        .iter()
        .enumerate()
        .map(|(i, e)| (e.name.as_str(), i))
        .collect();
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (t, e) in o.entities.iter().enumerate() {
        for link in &e.contexts {
            if let Some(&s) = pos.get(link.source.entity.as_str()) {
                if s != t {
                    succ[s].insert(t);
                }
            }
        }
    }
    let mut indeg = vec![0usize; n];
    for s in &succ {
        for &t in s {
            indeg[t] += 1;
        }
    }
    let mut heap: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&i| indeg[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    let mut done = vec![false; n];
    while let Some(Reverse(i)) = heap.pop() {
        order.push(i);
        done[i] = true;
        for &t in &succ[i] {
            indeg[t] -= 1;
            if indeg[t] == 0 {
                heap.push(Reverse(t));
            }
        }
    }
    order.extend((0..n).filter(|&i| !done[i]));
    order.into_iter().map(|i| o.entities[i].name.as_str()).collect()
}
