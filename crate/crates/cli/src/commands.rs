use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};

use eosynth_core::dataset::{builtin_recipe, builtin_recipes, build_dataset, BuildOptions, DatasetError, DatasetRecipe, GenerationContext};
use eosynth_core::ontology::{meters_per_unit, parse_document, parse_ontology, validate_ontology, Dimension, Ontology};
use eosynth_core::scene::{read_partition_geojson, FixedPartition, SceneExtentConfig};
use eosynth_core::templates::{make_fixtures, FixtureConfig, TemplateStore};
use eosynth_core::SHIPPED_ONTOLOGY;
use eosynth_eval::report::merged_to_geojson;
use eosynth_eval::{anchor_scales, evaluate_files, ontology_target_sizes, AnchorConfig, EvalConfig, EvalError, NmsConfig};
use serde_json::{json, Value};

use crate::{AnchorArgs, Cli, Command, EvaluateArgs, Failure, FixtureArgs, GenerateArgs, NmsMode};

static CANCEL: AtomicBool = AtomicBool::new(false);

pub fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::ValidateOntology { path } => validate(path.as_deref(), cli.json),
        Command::Generate(a) => generate(a, cli.json),
        Command::Evaluate(a) => evaluate(a, cli.json),
        Command::Anchors(a) => anchors(a, cli.json),
        Command::MakeFixtures(a) => fixtures(a, cli.json),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_ontology(path: Option<&Path>) -> Result<Ontology, Failure> {
    let text = match path {
        Some(p) => read(p)?,
        None => SHIPPED_ONTOLOGY.to_string(),
    };
    parse_ontology(&text).map_err(|e| Failure::Domain(e.to_string()))
}

fn emit(json: bool, value: Value, text: impl FnOnce() -> String) {
    if json {
        println!("{}", serde_json::to_string_pretty(&value).expect("JSON serializes"));
    } else {
        print!("{}", text());
    }
}

fn validate(path: Option<&Path>, as_json: bool) -> Result<(), Failure> {
    let text = match path {
        Some(p) => read(p)?,
        None => SHIPPED_ONTOLOGY.to_string(),
    };
    let ontology = parse_document(&text).map_err(|e| Failure::Domain(e.to_string()))?;
    let diagnostics = validate_ontology(&ontology);
    for d in &diagnostics {
        eprintln!("{d}");
    }
    let listed: Vec<Value> = diagnostics
        .iter()
        .map(|d| json!({"code": format!("{:?}", d.code), "location": d.location, "message": d.message, "related": d.related}))
        .collect();
    emit(as_json, json!({"valid": diagnostics.is_empty(), "entities": ontology.entities.len(), "diagnostics": listed}), || {
        if diagnostics.is_empty() {
            format!("ok: {} entities\n", ontology.entities.len())
        } else {
            String::new()
        }
    });
    if diagnostics.is_empty() {
        Ok(())
    } else {
        Err(Failure::Domain(format!("{} diagnostic(s)", diagnostics.len())))
    }
}

/// Builtin recipe or recipe file, then command-line overrides.
fn resolve_recipe(name: &str, a: &GenerateArgs) -> Result<DatasetRecipe, Failure> {
    let mut recipe = match builtin_recipe(name) {
        Some(r) => r,
        None if Path::new(name).is_file() => {
            serde_json::from_str(&read(Path::new(name))?).map_err(|e| Failure::Usage(format!("recipe {name}: {e}")))?
        }
        None => {
            let known: Vec<String> = builtin_recipes().into_iter().map(|r| r.name).collect();
            return Err(Failure::Usage(format!("unknown recipe {name:?}; builtin recipes are {}", known.join(", "))));
        }
    };
    if let Some(t) = a.total {
        recipe.total_examples = t;
    }
    if let Some(s) = a.seed {
        recipe.seed = s;
    }
    if a.export_size.is_some() {
        recipe.export_scale = a.export_size;
    }
    recipe.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(recipe)
}

fn recipe_json(r: &DatasetRecipe) -> Value {
    let counts: BTreeMap<&str, usize> = r.counts().into_iter().map(|(c, n)| (c.key(), n)).collect();
    json!({
        "name": r.name,
        "total_examples": r.total_examples,
        "class_mix": r.class_mix,
        "counts": counts,
        "coast_enabled": r.coast_enabled,
        "template_sea_enabled": r.template_sea_enabled,
        "tidal_turbine_enabled": r.tidal_turbine_enabled,
        "seed": r.seed,
        "export_scale": r.export_scale,
    })
}

fn count_list(r: &DatasetRecipe) -> String {
    r.counts().iter().map(|(c, n)| format!("{} {n}", c.key())).collect::<Vec<_>>().join(", ")
}

fn dataset_failure(e: DatasetError) -> Failure {
    match e {
        DatasetError::Io { .. } => Failure::Usage(e.to_string()),
        other => Failure::Domain(other.to_string()),
    }
}

fn generate(a: &GenerateArgs, as_json: bool) -> Result<(), Failure> {
    if a.dry_run {
        let recipes = match &a.recipe {
            Some(name) => vec![resolve_recipe(name, a)?],
            None => builtin_recipes(),
        };
        let listed: Vec<Value> = recipes.iter().map(recipe_json).collect();
        emit(as_json, json!({"recipes": listed}), || {
            recipes.iter().map(|r| format!("{}: {} examples ({})\n", r.name, r.total_examples, count_list(r))).collect()
        });
        return Ok(());
    }
    let name = a.recipe.as_deref().ok_or_else(|| Failure::Usage("--recipe is required".into()))?;
    let out = a.out.as_deref().ok_or_else(|| Failure::Usage("--out is required".into()))?;
    let recipe = resolve_recipe(name, a)?;
    let ontology = load_ontology(a.ontology.as_deref())?;
    let defaults = ontology.scene_defaults;
    let extent = SceneExtentConfig::new(
        a.scene_size.unwrap_or(defaults.scene_size_m),
        a.resolution.unwrap_or(defaults.sensor_resolution_m),
    )
    .map_err(|e| Failure::Usage(e.to_string()))?;
    let store = match &a.templates {
        Some(root) => Some(TemplateStore::open(root).map_err(|e| Failure::Usage(e.to_string()))?),
        None if recipe.template_sea_enabled => {
            return Err(Failure::Usage(format!(
                "recipe {} uses template sea; pass --templates or set {}",
                recipe.name,
                crate::TEMPLATES_ENV
            )))
        }
        None => None,
    };
    let partition = match &a.coastline {
        Some(p) => {
            let (land, coast) = read_partition_geojson(&read(p)?).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            Some(FixedPartition { land, coast })
        }
        None => None,
    };
    let ctx = GenerationContext {
        ontology: &ontology,
        extent,
        templates: store.as_ref(),
        partition: partition.as_ref(),
    };
    if let Err(e) = ctrlc::set_handler(|| CANCEL.store(true, Ordering::SeqCst)) {
        log::warn!("cannot install interrupt handler: {e}");
    }
    let options = BuildOptions {
        workers: a.workers,
        cancel: Some(&CANCEL),
        debug_geojson: a.debug_geojson,
    };
    let manifest = build_dataset(&recipe, &ctx, out, &options).map_err(dataset_failure)?;
    let summary = manifest.class_counts.iter().map(|(c, n)| format!("{c} {n}")).collect::<Vec<_>>().join(", ");
    emit(
        as_json,
        json!({
            "out": out.display().to_string(),
            "recipe": recipe.name,
            "exported": manifest.exported,
            "complete": manifest.complete,
            "class_counts": manifest.class_counts,
            "failed": manifest.failed,
        }),
        || format!("generated {} examples in {} ({summary})\n", manifest.exported, out.display()),
    );
    if manifest.complete {
        Ok(())
    } else {
        Err(Failure::Domain("build interrupted; the manifest is marked incomplete".into()))
    }
}

fn eval_failure(e: EvalError) -> Failure {
    match e {
        EvalError::Io { .. } | EvalError::GeoJson(_) => Failure::Usage(e.to_string()),
        other => Failure::Domain(other.to_string()),
    }
}

fn evaluate(a: &EvaluateArgs, as_json: bool) -> Result<(), Failure> {
    let preset = match a.nms_mode {
        NmsMode::Score => NmsConfig::score_reading(),
        NmsMode::Overlap => NmsConfig::overlap_reading(),
    };
    let cfg = EvalConfig {
        score_threshold: a.score_threshold.unwrap_or(preset.score_threshold),
        nms_iou: a.nms_iou.unwrap_or(preset.overlap_threshold),
        merge_iou: a.merge_iou,
        match_iou: a.match_iou,
    };
    let (report, merged) = evaluate_files(&a.predictions, &a.ground_truth, &cfg).map_err(eval_failure)?;
    fs::create_dir_all(&a.out).map_err(|e| Failure::Usage(format!("{}: {e}", a.out.display())))?;
    let report_json = serde_json::to_value(&report).expect("report serializes");
    write(&a.out.join("report.json"), &(serde_json::to_string_pretty(&report_json).expect("JSON") + "\n"))?;
    let table = report.to_table();
    write(&a.out.join("report.txt"), &table)?;
    let merged_doc = merged_to_geojson(&report.frame, &merged);
    write(&a.out.join("merged.geojson"), &serde_json::to_string(&merged_doc).expect("JSON"))?;
    emit(as_json, report_json, || table);
    Ok(())
}

/// Farm extents in meters: every choice of `WindFarm.size` and
/// `WindFarm.minimumExtent`.
fn farm_extents(o: &Ontology) -> Result<Vec<f64>, Failure> {
    let farm = o.entity("WindFarm").ok_or_else(|| Failure::Domain("ontology has no WindFarm entity".into()))?;
    let mut out = Vec::new();
    for name in ["size", "minimumExtent"] {
        let Some(c) = farm.characteristic(name) else { continue };
        let unit = c.unit.as_deref().and_then(meters_per_unit).ok_or_else(|| Failure::Domain(format!("WindFarm.{name} has no length unit")))?;
        if let Dimension::ChoiceSet(items) = &c.dimension {
            out.extend(items.iter().map(|i| i.value * unit));
        }
    }
    if out.is_empty() {
        return Err(Failure::Domain("WindFarm declares no extents".into()));
    }
    Ok(out)
}

fn anchors(a: &AnchorArgs, as_json: bool) -> Result<(), Failure> {
    let sizes = match &a.from_ontology {
        Some(path) => {
            let o = load_ontology((!path.is_empty()).then(|| Path::new(path)))?;
            let resolution = a.resolution.unwrap_or(o.scene_defaults.sensor_resolution_m);
            if !(resolution > 0.0) || !(a.granularity > 0.0) {
                return Err(Failure::Usage("resolution and granularity must be positive".into()));
            }
            ontology_target_sizes(&farm_extents(&o)?, resolution, a.granularity)
        }
        None if a.sizes.is_empty() => return Err(Failure::Usage("give --sizes or --from-ontology".into())),
        None => a.sizes.clone(),
    };
    let cfg = AnchorConfig {
        model_h: a.model_size,
        model_w: a.model_size,
        image_h: a.image_size,
        image_w: a.image_size,
        stride: a.stride,
        anchor_h: a.anchor,
        anchor_w: a.anchor,
    };
    let scales = anchor_scales(&cfg, &sizes).map_err(|e| Failure::Usage(e.to_string()))?;
    emit(as_json, json!({"sizes": sizes, "scales": scales}), || {
        scales.iter().map(f64::to_string).collect::<Vec<_>>().join(" ") + "\n"
    });
    Ok(())
}

fn fixtures(a: &FixtureArgs, as_json: bool) -> Result<(), Failure> {
    let cfg = FixtureConfig {
        tile_px: a.tile_px,
        pixel_size_m: a.pixel_size,
        seed: a.seed,
        sea_tiles: a.tiles,
        coast_tiles: a.tiles,
        land_tiles: a.tiles,
    };
    if cfg.tile_px == 0 || !(cfg.pixel_size_m > 0.0) {
        return Err(Failure::Usage("tile size and pixel size must be positive".into()));
    }
    let index = make_fixtures(&a.out, &cfg).map_err(|e| Failure::Usage(e.to_string()))?;
    emit(
        as_json,
        json!({"root": a.out.display().to_string(), "tiles": index.tiles.len(), "tile_px": cfg.tile_px, "pixel_size_m": cfg.pixel_size_m}),
        || format!("wrote {} tiles of {} px to {}\n", index.tiles.len(), cfg.tile_px, a.out.display()),
    );
    Ok(())
}
