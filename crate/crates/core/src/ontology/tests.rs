use std::collections::{BTreeMap, HashMap};

use proptest::prelude::*;

use super::*;
use crate::rng::rng_from_seed;

fn doc(body: &str) -> String {
    format!("<ontology version=\"1.0\">{body}</ontology>")
}

const WINDFARM: &str = r#"
  <observation entity="WindFarm">
    <measurement characteristic="size" unit="km">
      <dimension kind="choice-set">
        <value key="small" value="5"/>
        <value key="medium" value="10"/>
        <value key="large" value="17"/>
      </dimension>
    </measurement>
  </observation>"#;

fn shipped() -> Ontology {
    parse_ontology(crate::SHIPPED_ONTOLOGY).expect("shipped ontology parses")
}

#[test]
fn minimal_document_has_one_entity() {
    let o = parse_ontology(&doc(
        r#"<observation entity="A"><measurement characteristic="c"><dimension kind="constant" value="17"/></measurement></observation>"#,
    ))
    .unwrap();
    assert_eq!(o.entities.len(), 1);
    assert_eq!(o.entities[0].characteristics[0].dimension, Dimension::Constant(17.0));
    assert_eq!(o.scene_defaults, SceneDefaults::default());
}

#[test]
fn windfarm_sizes_are_keyed_choices() {
    let o = parse_ontology(&doc(WINDFARM)).unwrap();
    let size = o.characteristic(&CharacteristicRef::new("WindFarm", "size")).unwrap();
    assert_eq!(size.unit.as_deref(), Some("km"));
    assert_eq!(size.dimension.keys(), vec!["small", "medium", "large"]);
    let values: Vec<f64> = ["small", "medium", "large"]
        .iter()
        .map(|k| size.dimension.choice(k).unwrap().value)
        .collect();
    assert_eq!(values, vec![5.0, 10.0, 17.0]);
}

#[test]
fn context_targeting_missing_entity_names_it() {
    let body = format!(
        "{WINDFARM}{}",
        r#"<observation entity="Layout">
             <measurement characteristic="gridX"><dimension kind="discrete-uniform-range" lower="4" upper="6"/></measurement>
             <context characteristic="gridX" source="Turbine.size" key="small">
               <dimension kind="discrete-uniform-range" lower="6" upper="10"/>
             </context>
           </observation>"#
    );
    let err = parse_ontology(&doc(&body)).unwrap_err();
    let OntologyError::Invalid { diagnostics } = &err else {
        panic!("expected validation error, got {err:?}");
    };
    assert_eq!(diagnostics.len(), 1);
    assert_eq!(diagnostics[0].code, DiagnosticCode::UnknownEntity);
    assert!(err.to_string().contains("\"Turbine\""), "{err}");
}

#[test]
fn malformed_xml_reports_position() {
    let err = parse_ontology("<ontology>\n  <observation entity=\"A\">\n</ontology>").unwrap_err();
    match err {
        OntologyError::Xml(e) => assert!(e.line >= 2, "{e}"),
        other => panic!("expected XML error, got {other:?}"),
    }
}

#[test]
fn shipped_ontology_is_valid() {
    let o = parse_document(crate::SHIPPED_ONTOLOGY).unwrap();
    assert_eq!(validate_ontology(&o), vec![]);
    assert_eq!(o.scene_defaults.scene_size_m, 20_480.0);
}

#[test]
fn duplicate_characteristic_is_one_diagnostic() {
    let o = parse_document(&doc(
        r#"<observation entity="A">
             <measurement characteristic="c"><dimension kind="constant" value="1"/></measurement>
             <measurement characteristic="c"><dimension kind="constant" value="2"/></measurement>
           </observation>"#,
    ))
    .unwrap();
    let d = validate_ontology(&o);
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].code.as_str(), "DUPLICATE_CHARACTERISTIC");
}

#[test]
fn invalid_dimensions_are_reported() {
    let o = parse_document(&doc(
        r#"<observation entity="A">
             <measurement characteristic="r"><dimension kind="uniform-range" lower="3" upper="1"/></measurement>
             <measurement characteristic="e"><dimension kind="choice-set"/></measurement>
             <relationship type="topology" predicate="MustNotOverlap" object="A"/>
           </observation>"#,
    ))
    .unwrap();
    let codes: Vec<&str> = validate_ontology(&o).iter().map(|d| d.code.as_str()).collect();
    assert_eq!(codes, vec!["INVALID_RANGE", "EMPTY_DIMENSION", "SELF_RELATION"]);
}

#[test]
fn context_must_keep_dimension_kind() {
    let o = parse_document(&doc(
        r#"<observation entity="A">
             <measurement characteristic="k"><dimension kind="choice-set"><value key="a" value="1"/></dimension></measurement>
             <measurement characteristic="n"><dimension kind="constant" value="2"/></measurement>
             <context characteristic="n" source="A.k" key="a"><dimension kind="uniform-range" lower="0" upper="1"/></context>
           </observation>"#,
    ))
    .unwrap();
    let d = validate_ontology(&o);
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].code, DiagnosticCode::ContextKindMismatch);
}

/// Independent cycle check: depth-first search with colors over the
/// characteristic-level link graph.
fn dfs_has_cycle(o: &Ontology) -> bool {
    let mut adj: HashMap<String, Vec<String>> = HashMap::new();
    for e in &o.entities {
        for l in &e.contexts {
            adj.entry(l.source.to_string()).or_default().push(l.target.to_string());
        }
    }
    fn visit(n: &str, adj: &HashMap<String, Vec<String>>, color: &mut HashMap<String, u8>) -> bool {
        match color.get(n) {
            Some(1) => return true,
            Some(2) => return false,
            _ => {}
        }
        color.insert(n.to_string(), 1);
        for m in adj.get(n).into_iter().flatten() {
            if visit(m, adj, color) {
                return true;
            }
        }
        color.insert(n.to_string(), 2);
        false
    }
    let mut color = HashMap::new();
    let nodes: Vec<String> = adj.keys().cloned().collect();
    nodes.iter().any(|n| visit(n, &adj, &mut color))
}

const CYCLE: &str = r#"
  <observation entity="A">
    <measurement characteristic="x"><dimension kind="choice-set"><value key="p" value="1"/><value key="q" value="2"/></dimension></measurement>
    <context characteristic="x" source="B.y" key="u"><dimension kind="choice-set"><value key="p" value="1"/></dimension></context>
  </observation>
  <observation entity="B">
    <measurement characteristic="y"><dimension kind="choice-set"><value key="u" value="1"/><value key="v" value="2"/></dimension></measurement>
    <context characteristic="y" source="A.x" key="p"><dimension kind="choice-set"><value key="v" value="2"/></dimension></context>
  </observation>"#;

#[test]
fn two_entity_cycle_lists_both_links() {
    let o = parse_document(&doc(CYCLE)).unwrap();
    assert!(dfs_has_cycle(&o));
    let d = validate_ontology(&o);
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].code, DiagnosticCode::ContextCycle);
    assert_eq!(d[0].related, vec!["B.y[u] -> A.x", "A.x[p] -> B.y"]);

    match parse_ontology(&doc(CYCLE)).unwrap_err() {
        OntologyError::ContextCycle { links } => assert_eq!(links.len(), 2),
        other => panic!("expected cycle error, got {other:?}"),
    }
}

#[test]
fn shipped_ontology_has_no_cycle_by_dfs() {
    assert!(!dfs_has_cycle(&shipped()));
}

#[test]
fn resolution_order_puts_sources_first() {
    let o = shipped();
    let order = o.resolution_order();
    let pos = |n: &str| order.iter().position(|e| *e == n).unwrap();
    for e in &o.entities {
        for l in &e.contexts {
            if l.source.entity != e.name {
                assert!(pos(&l.source.entity) < pos(&e.name), "{l}");
            }
        }
    }
    assert_eq!(order.len(), o.entities.len());
}

#[test]
fn constant_dimension_ignores_seed() {
    let o = parse_ontology(&doc(
        r#"<observation entity="A"><measurement characteristic="c"><dimension kind="constant" value="17"/></measurement></observation>"#,
    ))
    .unwrap();
    for seed in 0..20 {
        let s = sample_specification(&o, "A", &ContextKeys::new(), &mut rng_from_seed(seed)).unwrap();
        assert_eq!(s.value("c"), Some(17.0));
    }
}

#[test]
fn forced_small_samples_five_km() {
    let o = parse_ontology(&doc(WINDFARM)).unwrap();
    let ctx = ContextKeys::from([(CharacteristicRef::new("WindFarm", "size"), "small".to_string())]);
    for seed in 0..10 {
        let s = sample_specification(&o, "WindFarm", &ctx, &mut rng_from_seed(seed)).unwrap();
        assert_eq!(s.get("size"), Some(&SampledValue::keyed(5.0, "small")));
    }
}

#[test]
fn forced_key_must_exist() {
    let o = parse_ontology(&doc(WINDFARM)).unwrap();
    let ctx = ContextKeys::from([(CharacteristicRef::new("WindFarm", "size"), "huge".to_string())]);
    assert!(matches!(
        sample_specification(&o, "WindFarm", &ctx, &mut rng_from_seed(1)),
        Err(SampleError::InvalidForcedKey { .. })
    ));
}

#[test]
fn discrete_range_is_uniform_and_reproducible() {
    let o = parse_ontology(&doc(
        r#"<observation entity="A"><measurement characteristic="n"><dimension kind="discrete-uniform-range" lower="3" upper="6"/></measurement></observation>"#,
    ))
    .unwrap();
    let ctx = ContextKeys::new();
    let a = sample_specification(&o, "A", &ctx, &mut rng_from_seed(99)).unwrap();
    let b = sample_specification(&o, "A", &ctx, &mut rng_from_seed(99)).unwrap();
    assert_eq!(a, b);

    let mut rng = rng_from_seed(2024);
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    let n = 10_000;
    for _ in 0..n {
        let s = sample_specification(&o, "A", &ctx, &mut rng).unwrap();
        *counts.entry(s.value("n").unwrap() as i64).or_default() += 1;
    }
    assert_eq!(counts.keys().copied().collect::<Vec<_>>(), vec![3, 4, 5, 6]);
    for (v, c) in counts {
        let f = c as f64 / n as f64;
        assert!((f - 0.25).abs() <= 0.02, "value {v}: frequency {f}");
    }
}

#[test]
fn unresolved_context_names_the_link() {
    let o = shipped();
    let err = sample_specification(&o, "WindfarmLayout", &ContextKeys::new(), &mut rng_from_seed(0))
        .unwrap_err();
    match &err {
        SampleError::UnresolvedContext { missing, .. } => assert_eq!(missing.to_string(), "WindFarm.size"),
        other => panic!("unexpected {other:?}"),
    }
    assert!(err.to_string().contains("WindFarm.size[small] -> WindfarmLayout.gridX"));
}

#[test]
fn context_substitution_changes_only_the_target() {
    let o = shipped();
    let ctx = |k: &str| ContextKeys::from([(CharacteristicRef::new("WindFarm", "size"), k.to_string())]);
    let e = o.entity("WindfarmLayout").unwrap();
    for key in ["small", "medium", "large"] {
        let keys = ctx(key);
        for c in &e.characteristics {
            let d = sample::effective_dimension(e, c, &keys).unwrap();
            let declared = e
                .contexts
                .iter()
                .find(|l| l.target.characteristic == c.name && l.key == key)
                .map(|l| &l.dimension);
            assert_eq!(d, declared.unwrap_or(&c.dimension), "{}", c.name);
        }
    }
    let small = sample_specification(&o, "WindfarmLayout", &ctx("small"), &mut rng_from_seed(5)).unwrap();
    let large = sample_specification(&o, "WindfarmLayout", &ctx("large"), &mut rng_from_seed(5)).unwrap();
    assert!((6.0..=10.0).contains(&small.value("gridX").unwrap()));
    assert!((4.0..=6.0).contains(&large.value("gridX").unwrap()));
}

#[test]
fn weighted_choice_follows_weights() {
    let o = parse_ontology(&doc(
        r#"<observation entity="A"><measurement characteristic="c"><dimension kind="choice-set">
             <value key="a" value="0" weight="3"/><value key="b" value="1" weight="1"/>
           </dimension></measurement></observation>"#,
    ))
    .unwrap();
    let mut rng = rng_from_seed(3);
    let n = 8000;
    let a = (0..n)
        .filter(|_| {
            sample_specification(&o, "A", &ContextKeys::new(), &mut rng).unwrap().key("c") == Some("a")
        })
        .count();
    assert!((a as f64 / n as f64 - 0.75).abs() < 0.02);
}

#[test]
fn empty_snapshot_has_no_specifications() {
    let s = OntologySnapshot::new("000001", 7);
    let text = write_snapshot(&s);
    assert!(!text.contains("sceneElementSpecification"));
    assert_eq!(parse_snapshot(&text).unwrap(), s);
}

#[test]
fn windfarm_snapshot_round_trips_byte_equal() {
    let o = parse_ontology(&doc(WINDFARM)).unwrap();
    let spec = sample_specification(&o, "WindFarm", &ContextKeys::new(), &mut rng_from_seed(11)).unwrap();
    let mut s = OntologySnapshot::new("000042", 11);
    s.specifications.push(spec);
    let text = write_snapshot(&s);
    let back = parse_snapshot(&text).unwrap();
    assert_eq!(back, s);
    assert_eq!(write_snapshot(&back), text);
}

#[test]
fn three_specs_share_one_seed_attribute() {
    let o = shipped();
    let mut rng = rng_from_seed(5);
    let mut s = OntologySnapshot::new("x", 5);
    for e in ["Sea", "Coast", "Rig"] {
        s.specifications
            .push(sample_specification(&o, e, &ContextKeys::new(), &mut rng).unwrap());
    }
    let text = write_snapshot(&s);
    assert_eq!(text.matches("seed=").count(), 1);
    assert_eq!(text.matches("<sceneElementSpecification").count(), 3);
    assert_eq!(parse_snapshot(&text).unwrap(), s);
}

#[test]
fn shipped_round_trip_is_structural() {
    let o = shipped();
    let text = write_ontology(&o);
    assert_eq!(parse_ontology(&text).unwrap(), o);
}

// Random ontologies for the property tests.

fn arb_dimension() -> impl Strategy<Value = Dimension> {
    prop_oneof![
        prop::collection::vec((-1e6f64..1e6, prop::option::of(0.01f64..10.0)), 1..5).prop_map(|items| {
            Dimension::ChoiceSet(
                items
                    .into_iter()
                    .enumerate()
                    .map(|(i, (value, weight))| Choice {
                        key: format!("k{i}"),
                        value,
                        weight,
                    })
                    .collect(),
            )
        }),
        (-1e6f64..1e6, 0f64..1e6).prop_map(|(lower, w)| Dimension::UniformRange { lower, upper: lower + w }),
        (-1000i64..1000, 0i64..50).prop_map(|(lower, w)| Dimension::DiscreteUniformRange { lower, upper: lower + w }),
        (-1e6f64..1e6).prop_map(Dimension::Constant),
        "[a-z]{1,6}".prop_map(|class| Dimension::TemplateQuery { class }),
    ]
}

/// Entities E0..En, each with characteristics c0..cm; optional links from
/// a choice-set characteristic of an earlier entity (so the graph stays
/// acyclic).
fn arb_ontology() -> impl Strategy<Value = Ontology> {
    prop::collection::vec(prop::collection::vec(arb_dimension(), 1..4), 1..5)
        .prop_flat_map(|dims| {
            let n = dims.len();
            (Just(dims), prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>(), arb_dimension()), 0..n * 2))
        })
        .prop_map(|(dims, raw_links)| {
            let mut entities: Vec<Entity> = dims
                .iter()
                .enumerate()
                .map(|(i, ds)| Entity {
                    name: format!("E{i}"),
                    characteristics: ds
                        .iter()
                        .enumerate()
                        .map(|(j, d)| Characteristic {
                            name: format!("c{j}"),
                            unit: (j % 2 == 0).then(|| "m".to_string()),
                            dimension: d.clone(),
                        })
                        .collect(),
                    relations: Vec::new(),
                    contexts: Vec::new(),
                })
                .collect();
            let choice_sources: Vec<(usize, usize, Vec<String>)> = entities
                .iter()
                .enumerate()
                .flat_map(|(i, e)| {
                    e.characteristics.iter().enumerate().filter_map(move |(j, c)| match &c.dimension {
                        Dimension::ChoiceSet(items) => {
                            Some((i, j, items.iter().map(|c| c.key.clone()).collect()))
                        }
                        _ => None,
                    })
                })
                .collect();
            for (s, t, dim) in raw_links {
                if choice_sources.is_empty() {
                    break;
                }
                let (si, sj, keys) = s.get(&choice_sources);
                let targets: Vec<usize> = (si + 1..entities.len()).collect();
                if targets.is_empty() {
                    continue;
                }
                let ti = *t.get(&targets);
                let tj = t.index(entities[ti].characteristics.len());
                let key = keys[t.index(keys.len())].clone();
                let declared = &entities[ti].characteristics[tj].dimension;
                let link = ContextLink {
                    source: CharacteristicRef::new(format!("E{si}"), format!("c{sj}")),
                    key,
                    target: CharacteristicRef::new(format!("E{ti}"), format!("c{tj}")),
                    dimension: if dim.kind() == declared.kind() { dim } else { declared.clone() },
                };
                entities[ti].contexts.push(link);
            }
            if entities.len() > 1 {
                entities[1].relations.push(TopologyRelation {
                    subject: "E1".into(),
                    predicate: Predicate::MustBeWithinDistance(250.0),
                    object: "E0".into(),
                });
            }
            Ontology {
                version: "1.0".into(),
                scene_defaults: SceneDefaults::default(),
                entities,
            }
        })
}

fn sample_all(o: &Ontology, seed: u64) -> (ContextKeys, Vec<SceneElementSpecification>) {
    let mut rng = rng_from_seed(seed);
    let mut ctx = ContextKeys::new();
    let mut out = Vec::new();
    for name in o.resolution_order() {
        let s = sample_specification(o, name, &ctx, &mut rng).unwrap();
        ctx.extend(s.context_keys().map(|(r, k)| (r, k.to_string())));
        out.push(s);
    }
    (ctx, out)
}

proptest! {
    #[test]
    fn generated_ontologies_validate(o in arb_ontology()) {
        prop_assert_eq!(validate_ontology(&o), vec![]);
    }

    #[test]
    fn serialize_parse_round_trip(o in arb_ontology()) {
        let text = write_ontology(&o);
        prop_assert_eq!(parse_ontology(&text).unwrap(), o);
    }

    #[test]
    fn samples_are_members(o in arb_ontology(), seed in any::<u64>()) {
        let (ctx, specs) = sample_all(&o, seed);
        for s in &specs {
            prop_assert!(s.is_member_of(&o, &ctx), "{:?}", s);
            let e = o.entity(&s.entity).unwrap();
            prop_assert_eq!(s.sampled.len(), e.characteristics.len());
        }
    }

    #[test]
    fn sampling_is_deterministic(o in arb_ontology(), seed in any::<u64>()) {
        prop_assert_eq!(sample_all(&o, seed), sample_all(&o, seed));
    }

    #[test]
    fn snapshot_round_trip(o in arb_ontology(), seed in any::<u64>(), id in "[0-9]{6}") {
        let (_, specs) = sample_all(&o, seed);
        let mut s = OntologySnapshot::new(id, seed);
        s.draws = seed % 1000;
        s.parameters.insert("class".into(), "owf-small".into());
        s.specifications = specs;
        let text = write_snapshot(&s);
        prop_assert_eq!(parse_snapshot(&text).unwrap(), s);
    }
}
