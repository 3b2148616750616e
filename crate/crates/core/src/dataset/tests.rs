use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::AtomicBool;

use proptest::prelude::*;
use sha2::{Digest, Sha256};

use super::*;
use crate::ontology::{parse_ontology, parse_snapshot, write_snapshot};
use crate::rng::rng_from_seed;
use crate::scene::{compose_scene, SceneExtentConfig};
use crate::templates::{make_fixtures, FixtureConfig, TemplateStore};
use CompositionClass::*;

fn shipped() -> Ontology {
    parse_ontology(crate::SHIPPED_ONTOLOGY).unwrap()
}

/// Full scene size at 80 m: 256 px images keep builds fast.
fn coarse() -> SceneExtentConfig {
    SceneExtentConfig::new(20_480.0, 80.0).unwrap()
}

fn coarse_fixtures(dir: &Path) -> TemplateStore {
    make_fixtures(
        dir,
        &FixtureConfig {
            tile_px: 320,
            pixel_size_m: 80.0,
            seed: 1,
            sea_tiles: 2,
            coast_tiles: 1,
            land_tiles: 1,
        },
    )
    .unwrap();
    TemplateStore::open(dir).unwrap()
}

fn mini(name: &str, total: usize) -> DatasetRecipe {
    DatasetRecipe {
        total_examples: total,
        ..builtin_recipe(name).unwrap()
    }
}

fn counts_of(r: &DatasetRecipe) -> Vec<usize> {
    r.counts().into_iter().map(|(_, n)| n).collect()
}

#[test]
fn builtin_recipe_sizes() {
    let names: Vec<String> = builtin_recipes().into_iter().map(|r| r.name).collect();
    assert_eq!(names, ["dataset-1", "dataset-2", "dataset-3", "dataset-3+"]);
    let d1 = builtin_recipe("dataset-1").unwrap();
    assert_eq!(d1.counts(), vec![(OwfSmall, 45_000)]);
    assert!(!d1.coast_enabled && !d1.template_sea_enabled);
    assert_eq!(
        builtin_recipe("dataset-2").unwrap().counts(),
        vec![(OwfSmall, 22_500), (OwfMedium, 45_000), (OwfLarge, 22_500)]
    );
    // Class order: owf-small, owf-medium, owf-large, rigs, land.
    assert_eq!(counts_of(&builtin_recipe("dataset-3").unwrap()), vec![15_000, 30_000, 15_000, 15_000, 15_000]);
    let plus = builtin_recipe("dataset-3+").unwrap();
    assert!(plus.tidal_turbine_enabled && plus.template_sea_enabled && plus.coast_enabled);
    for r in builtin_recipes() {
        r.validate().unwrap();
    }
}

#[test]
fn rounding_rule_small_totals() {
    assert_eq!(counts_of(&mini("dataset-3", 10)), vec![1, 3, 2, 2, 2]);
    assert_eq!(counts_of(&mini("dataset-3", 60)), vec![10, 20, 10, 10, 10]);
    assert_eq!(counts_of(&mini("dataset-3", 120)), vec![20, 40, 20, 20, 20]);
    assert_eq!(counts_of(&mini("dataset-2", 2)), vec![0, 1, 1]);
}

#[test]
fn invalid_mix_is_rejected() {
    let mut r = mini("dataset-2", 10);
    r.class_mix.insert(OwfSmall, 0.3);
    assert!(matches!(r.validate(), Err(DatasetError::Recipe(_))));
}

#[test]
fn recipe_json_round_trip() {
    let r = builtin_recipe("dataset-3").unwrap();
    let text = serde_json::to_string(&r).unwrap();
    assert!(text.contains("\"none-target-rigs\""));
    assert_eq!(serde_json::from_str::<DatasetRecipe>(&text).unwrap(), r);
    let minimal: DatasetRecipe = serde_json::from_str(r#"{"name":"x","total_examples":4,"class_mix":{"owf-large":1.0}}"#).unwrap();
    assert_eq!(minimal.seed, DEFAULT_SEED);
}

#[test]
fn slot_classes_follow_counts() {
    let r = mini("dataset-3", 37);
    let slots = r.slot_classes();
    assert_eq!(slots.len(), 37);
    for (class, n) in r.counts() {
        assert_eq!(slots.iter().filter(|&&c| c == class).count(), n);
    }
    assert_eq!(slots, r.slot_classes());
}

fn arb_mix() -> impl Strategy<Value = BTreeMap<CompositionClass, f64>> {
    prop::collection::vec(1u32..100, 5).prop_map(|w| {
        let sum: u32 = w.iter().sum();
        CompositionClass::ALL.iter().zip(&w).map(|(c, &x)| (*c, x as f64 / sum as f64)).collect()
    })
}

proptest! {
    #[test]
    fn counts_follow_the_rounding_rule(mix in arb_mix(), total in 0usize..5000) {
        let counts = class_counts(&mix, total);
        prop_assert_eq!(counts.iter().map(|(_, n)| n).sum::<usize>(), total);
        // Oracle: the classes that received an extra example are exactly the
        // first `remainder` ones by (fractional part desc, name asc).
        let exact: Vec<(CompositionClass, f64)> = mix.iter().map(|(c, f)| (*c, f * total as f64)).collect();
        let floors: usize = exact.iter().map(|(_, x)| x.floor() as usize).sum();
        let mut ranked = exact.clone();
        ranked.sort_by(|a, b| (b.1 - b.1.floor()).partial_cmp(&(a.1 - a.1.floor())).unwrap().then(a.0.key().cmp(b.0.key())));
        let bumped: Vec<CompositionClass> = ranked.iter().take(total - floors).map(|(c, _)| *c).collect();
        for ((c, n), (_, x)) in counts.iter().zip(&exact) {
            let expected = x.floor() as usize + bumped.contains(c) as usize;
            prop_assert_eq!(*n, expected);
        }
    }

    #[test]
    fn voc_round_trip(
        boxes in prop::collection::vec((0i64..2048, 0i64..2048, 0i64..200, 0i64..200, "[a-z]{1,8}"), 0..6),
        w in 1usize..4096,
    ) {
        let a = VocAnnotation {
            filename: "000001.png".into(),
            width: w,
            height: w,
            objects: boxes.into_iter().map(|(x, y, dx, dy, label)| BoxAnnotation { label, xmin: x, ymin: y, xmax: x + dx, ymax: y + dy }).collect(),
        };
        prop_assert_eq!(parse_annotation(&export_annotation(&a)).unwrap(), a);
    }

    #[test]
    fn rescale_matches_block_mean(data in prop::collection::vec(any::<u8>(), 64)) {
        let img = RasterImage { width: 8, height: 8, pixel_size: 10.0, data };
        let half = rescale_for_training(&img, 4).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let s: u32 = [(0, 0), (0, 1), (1, 0), (1, 1)].iter().map(|(dr, dc)| img.get(2 * c + dc, 2 * r + dr) as u32).sum();
                // Integer mean rounding halves up.
                prop_assert_eq!(half.get(c, r) as u32, (2 * s + 4) / 8);
            }
        }
    }
}

#[test]
fn empty_annotation_has_no_objects() {
    let text = export_annotation(&VocAnnotation {
        filename: "000000.png".into(),
        width: 2048,
        height: 2048,
        objects: vec![],
    });
    assert!(!text.contains("<object>"));
    assert!(text.contains("<width>2048</width>"));
    assert!(parse_annotation(&text).unwrap().objects.is_empty());
}

#[test]
fn box_fields_are_exact() {
    let b = BoxAnnotation {
        label: "owf".into(),
        xmin: 10,
        ymin: 20,
        xmax: 30,
        ymax: 40,
    };
    let text = export_annotation(&VocAnnotation {
        filename: "a.png".into(),
        width: 64,
        height: 64,
        objects: vec![b],
    });
    for needle in ["<xmin>10</xmin>", "<ymin>20</ymin>", "<xmax>30</xmax>", "<ymax>40</ymax>", "<name>owf</name>"] {
        assert!(text.contains(needle), "{needle}");
    }
}

#[test]
fn malformed_annotation_is_an_error() {
    assert!(parse_annotation("<annotation><size/></annotation>").is_err());
    assert!(parse_annotation("<other/>").is_err());
}

#[test]
fn rescale_cases() {
    let img = RasterImage::filled(2048, 2048, 10.0, 77);
    let half = rescale_for_training(&img, 1024).unwrap();
    assert!(half.data.iter().all(|&v| v == 77));
    assert_eq!(half.pixel_size, 20.0);
    let block = RasterImage {
        width: 2,
        height: 2,
        pixel_size: 1.0,
        data: vec![0, 0, 255, 255],
    };
    assert_eq!(rescale_for_training(&block, 1).unwrap().data, vec![128]);
    let up = rescale_for_training(&block, 4).unwrap();
    assert_eq!(up.data[..4], [0, 0, 0, 0]);
    assert_eq!(up.data[12..], [255, 255, 255, 255]);
    assert!(matches!(rescale_for_training(&img, 1000), Err(DatasetError::Rescale { .. })));
    let full = BoxAnnotation {
        label: "owf".into(),
        xmin: 0,
        ymin: 0,
        xmax: 2048,
        ymax: 2048,
    };
    let s = rescale_box(&full, 2048, 1024);
    assert_eq!((s.xmin, s.ymin, s.xmax, s.ymax), (0, 0, 1024, 1024));
    let inner = BoxAnnotation {
        xmax: 2047,
        ymax: 2047,
        ..full
    };
    let s = rescale_box(&inner, 2048, 1024);
    assert_eq!((s.xmax, s.ymax), (1023, 1023));
}

fn compose(class: CompositionClass, seed: u64) -> crate::scene::SceneComposition {
    let r = mini("dataset-2", 1).request(class);
    compose_scene(&shipped(), SceneExtentConfig::default(), &r, seed, &mut rng_from_seed(seed)).unwrap()
}

#[test]
fn rig_fields_have_no_boxes() {
    let r = mini("dataset-3", 1).request(NoneTargetRigs);
    let c = compose_scene(&shipped(), SceneExtentConfig::default(), &r, 3, &mut rng_from_seed(3)).unwrap();
    assert_eq!(derive_annotation(&c).unwrap(), vec![]);
}

#[test]
fn single_turbine_box() {
    let mut c = compose(OwfMedium, 5);
    let farm = c.elements.iter_mut().find(|e| e.entity == "WindFarm").unwrap();
    farm.points = vec![crate::geometry::pt(1005.0, 2017.0)];
    let r = crate::texture::kernel_from_spec(farm.part("WindTurbine").unwrap()).unwrap().radius as i64;
    let b = &derive_annotation(&c).unwrap()[0];
    assert_eq!((b.xmin, b.ymin, b.xmax, b.ymax), (100 - r, 201 - r, 100 + r, 201 + r));
}

#[test]
fn farm_box_is_pixel_hull_plus_radius() {
    for seed in 0..20 {
        let c = compose([OwfSmall, OwfMedium, OwfLarge][seed as usize % 3], seed);
        let farm = c.element("WindFarm").unwrap();
        let r = crate::texture::kernel_from_spec(farm.part("WindTurbine").unwrap()).unwrap().radius as i64;
        let xs: Vec<i64> = farm.points.iter().map(|p| (p.x / 10.0).floor() as i64).collect();
        let ys: Vec<i64> = farm.points.iter().map(|p| (p.y / 10.0).floor() as i64).collect();
        let clamp = |v: i64| v.clamp(0, 2047);
        let expected = BoxAnnotation {
            label: "owf".into(),
            xmin: clamp(xs.iter().min().unwrap() - r),
            ymin: clamp(ys.iter().min().unwrap() - r),
            xmax: clamp(xs.iter().max().unwrap() + r),
            ymax: clamp(ys.iter().max().unwrap() + r),
        };
        assert_eq!(derive_annotation(&c).unwrap(), vec![expected]);
    }
}

#[test]
fn example_ids_are_zero_padded() {
    assert_eq!(example_id(7, 120), "000007");
    assert_eq!(example_id(7, 10_000_000), "0000007");
}

#[test]
fn shards_partition_the_ids() {
    let ids: Vec<String> = (0..1000).map(|i| example_id(i, 1000)).collect();
    let m = make_shards(&ids, 7);
    assert_eq!(m.shards.len(), 9);
    let mut all: Vec<String> = m.shards.iter().flat_map(|s| s.example_ids.clone()).collect();
    all.sort();
    assert_eq!(all, ids);
    let val = m.shards.iter().find(|s| s.role == ShardRole::Val).unwrap();
    assert_eq!(val.example_ids.len(), 50);
    assert_eq!(m, make_shards(&ids, 7));
    assert_ne!(m, make_shards(&ids, 8));
}

#[test]
fn snapshot_replay_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let store = coarse_fixtures(dir.path());
    let o = shipped();
    let ctx = GenerationContext {
        ontology: &o,
        extent: coarse(),
        templates: Some(&store),
        partition: None,
    };
    let recipe = DatasetRecipe {
        export_scale: Some(128),
        ..mini("dataset-3+", 5)
    };
    for (i, class) in CompositionClass::ALL.into_iter().enumerate() {
        let ex = generate_example(&ctx, &recipe, class, &example_id(i, 5), i as u64).unwrap();
        assert_eq!(ex.image.width, 128);
        let text = write_snapshot(&ex.snapshot);
        let back = regenerate_from_snapshot(&o, Some(&store), None, &parse_snapshot(&text).unwrap()).unwrap();
        assert_eq!(back.image, ex.image);
        assert_eq!(back.annotations, ex.annotations);
        assert_eq!(back.composition, ex.composition);
    }
}

#[test]
fn tampered_snapshot_is_rejected() {
    let o = shipped();
    let ctx = GenerationContext {
        ontology: &o,
        extent: coarse(),
        templates: None,
        partition: None,
    };
    let ex = generate_example(&ctx, &mini("dataset-2", 1), OwfLarge, "000000", 0).unwrap();
    let mut s = ex.snapshot.clone();
    s.specifications[2].sampled.get_mut("constantValue").unwrap().value += 1.0;
    assert!(matches!(regenerate_from_snapshot(&o, None, None, &s), Err(DatasetError::Snapshot { .. })));
}

fn tree_hash(root: &Path) -> String {
    fn walk(dir: &Path, out: &mut Vec<std::path::PathBuf>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, out);
            } else {
                out.push(p);
            }
        }
    }
    let mut files = Vec::new();
    walk(root, &mut files);
    files.sort();
    let mut h = Sha256::new();
    for f in files {
        h.update(f.strip_prefix(root).unwrap().to_string_lossy().as_bytes());
        h.update(std::fs::read(&f).unwrap());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn build_is_independent_of_worker_count() {
    let fixtures = tempfile::tempdir().unwrap();
    let store = coarse_fixtures(fixtures.path());
    let o = shipped();
    let ctx = GenerationContext {
        ontology: &o,
        extent: coarse(),
        templates: Some(&store),
        partition: None,
    };
    let recipe = mini("dataset-3", 10);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = build_dataset(&recipe, &ctx, a.path(), &BuildOptions { workers: 1, ..Default::default() }).unwrap();
    let mb = build_dataset(&recipe, &ctx, b.path(), &BuildOptions { workers: 8, ..Default::default() }).unwrap();
    assert_eq!(ma, mb);
    assert_eq!(tree_hash(a.path()), tree_hash(b.path()));
    assert!(ma.complete);
    assert_eq!(ma.exported, 10);
    let counts: Vec<usize> = ma.class_counts.values().copied().collect();
    // Keys sort as none-target-land, none-target-rigs, owf-large, owf-medium, owf-small.
    assert_eq!(counts, vec![2, 2, 2, 3, 1]);
    for sub in ["images", "annotations", "snapshots"] {
        assert_eq!(std::fs::read_dir(a.path().join(sub)).unwrap().count(), 10);
    }
    let id = &ma.examples[0].id;
    assert!(a.path().join(format!("snapshots/{id}.snapshot.xml")).exists());
    let manifest: DatasetManifest = serde_json::from_str(&std::fs::read_to_string(a.path().join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(manifest, ma);
}

#[test]
fn dataset_one_is_single_class_without_coast() {
    let o = shipped();
    let ctx = GenerationContext {
        ontology: &o,
        extent: coarse(),
        templates: None,
        partition: None,
    };
    let out = tempfile::tempdir().unwrap();
    let m = build_dataset(&mini("dataset-1", 20), &ctx, out.path(), &BuildOptions::default()).unwrap();
    assert_eq!(m.exported, 20);
    for e in &m.examples {
        let voc = parse_annotation(&std::fs::read_to_string(out.path().join(format!("annotations/{}.xml", e.id))).unwrap()).unwrap();
        assert_eq!(voc.objects.len(), 1);
        assert!(voc.objects.iter().all(|b| b.label == TARGET_LABEL));
        let snap = parse_snapshot(&std::fs::read_to_string(out.path().join(format!("snapshots/{}.snapshot.xml", e.id))).unwrap()).unwrap();
        assert!(snap.specification("Coast").is_none());
        assert_eq!(snap.specification("WindFarm").unwrap().key("size"), Some("small"));
    }
}

#[test]
fn cancelled_build_is_marked_incomplete() {
    let o = shipped();
    let ctx = GenerationContext {
        ontology: &o,
        extent: coarse(),
        templates: None,
        partition: None,
    };
    let out = tempfile::tempdir().unwrap();
    let stop = AtomicBool::new(true);
    let m = build_dataset(
        &mini("dataset-2", 6),
        &ctx,
        out.path(),
        &BuildOptions {
            cancel: Some(&stop),
            ..Default::default()
        },
    )
    .unwrap();
    assert!(!m.complete);
    assert_eq!(m.exported, 0);
    assert!(out.path().join(MANIFEST_FILE).exists());
}

#[test]
fn template_recipe_without_store_fails() {
    let o = shipped();
    let ctx = GenerationContext {
        ontology: &o,
        extent: coarse(),
        templates: None,
        partition: None,
    };
    let err = generate_example(&ctx, &mini("dataset-3", 1), OwfSmall, "000000", 0).unwrap_err();
    assert!(matches!(err, DatasetError::Texture(crate::texture::TextureError::NoTemplate { .. })), "{err}");
}

#[test]
fn debug_geojson_is_written() {
    let o = shipped();
    let ctx = GenerationContext {
        ontology: &o,
        extent: coarse(),
        templates: None,
        partition: None,
    };
    let out = tempfile::tempdir().unwrap();
    let opts = BuildOptions {
        debug_geojson: true,
        ..Default::default()
    };
    build_dataset(&mini("dataset-2", 2), &ctx, out.path(), &opts).unwrap();
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.path().join("debug/000000.geojson")).unwrap()).unwrap();
    assert_eq!(v["frame"], "scene-m");
}
