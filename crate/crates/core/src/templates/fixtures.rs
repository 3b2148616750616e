use std::fs;
use std::path::Path;

use noise::{NoiseFn, OpenSimplex};
use rand::Rng;
use rayon::prelude::*;

use super::{build_index, write_index, TemplateError, TileIndex, TileMeta};
use crate::raster::RasterImage;
use crate::rng::rng_from_seed;

/// Stand-in template tiles: noise-textured sea, brighter land and a coast
/// mixture of both.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureConfig {
    pub tile_px: usize,
    pub pixel_size_m: f64,
    pub seed: u64,
    pub sea_tiles: usize,
    pub coast_tiles: usize,
    pub land_tiles: usize,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            tile_px: 2560,
            pixel_size_m: 10.0,
            seed: 7,
            sea_tiles: 2,
            coast_tiles: 2,
            land_tiles: 2,
        }
    }
}

/// Fractal noise in roughly `[-1, 1]`.
fn fbm(n: &OpenSimplex, x: f64, y: f64, octaves: usize) -> f64 {
    let (mut sum, mut amp, mut freq, mut norm) = (0.0, 1.0, 1.0, 0.0);
    for _ in 0..octaves {
        sum += amp * n.get([x * freq, y * freq]);
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    sum / norm
}

fn texture(class: &str, tile_px: usize, pixel_size: f64, seed: u32) -> Vec<u8> {
    let n = OpenSimplex::new(seed);
    let grain = OpenSimplex::new(seed.wrapping_add(1));
    // Features per kilometer for the broad structure and the grain.
    let (broad, fine) = (0.25 / 1000.0, 40.0 / 1000.0);
    let mut data = vec![0u8; tile_px * tile_px];
    data.par_chunks_mut(tile_px).enumerate().for_each(|(row, line)| {
        for (col, px) in line.iter_mut().enumerate() {
            let (x, y) = (col as f64 * pixel_size, row as f64 * pixel_size);
            let b = fbm(&n, x * broad, y * broad, 4);
            let g = grain.get([x * fine, y * fine]);
            let sea = 36.0 + 10.0 * b + 4.0 * g;
            let land = 140.0 + 35.0 * b + 12.0 * g;
            let v = match class {
                "sea" => sea,
                "land" => land,
                _ => {
                    let t = (fbm(&n, x * broad * 0.5 + 31.0, y * broad * 0.5, 2) * 4.0).clamp(-1.0, 1.0) * 0.5 + 0.5;
                    sea + t * (land - sea)
                }
            };
            *px = v.round().clamp(0.0, 255.0) as u8;
        }
    });
    data
}

/// Writes fixture tiles plus their index into `root` and returns the index.
///
/// Tiles sit side by side along `x` in the planar frame, one tile width
/// apart, in the order sea, coast-mix, land.
pub fn make_fixtures(root: &Path, config: &FixtureConfig) -> Result<TileIndex, TemplateError> {
    let io = |source| TemplateError::Io {
        path: root.display().to_string(),
        source,
    };
    fs::create_dir_all(root).map_err(io)?;
    let size_m = config.tile_px as f64 * config.pixel_size_m;
    let mut rng = rng_from_seed(config.seed);
    let classes = std::iter::repeat_n("sea", config.sea_tiles)
        .chain(std::iter::repeat_n("coast-mix", config.coast_tiles))
        .chain(std::iter::repeat_n("land", config.land_tiles));
    let mut counters = std::collections::BTreeMap::new();
    for (i, class) in classes.enumerate() {
        let k = counters.entry(class).or_insert(0usize);
        let tile_id = format!("{class}-{k:03}");
        *k += 1;
        let img = RasterImage {
            width: config.tile_px,
            height: config.tile_px,
            pixel_size: config.pixel_size_m,
            data: texture(class, config.tile_px, config.pixel_size_m, rng.random()),
        };
        img.write_png(&root.join(format!("{tile_id}.png"))).map_err(|source| TemplateError::Raster {
            tile_id: tile_id.clone(),
            source,
        })?;
        let x0 = i as f64 * size_m;
        let meta = TileMeta {
            tile_id: tile_id.clone(),
            bounds: [x0, 0.0, x0 + size_m, size_m],
            class: class.to_string(),
        };
        let path = root.join(format!("{tile_id}.json"));
        fs::write(&path, serde_json::to_string_pretty(&meta).expect("sidecar serializes")).map_err(io)?;
    }
    let (index, _) = build_index(root)?;
    write_index(root, &index)?;
    Ok(index)
}
