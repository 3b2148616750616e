//! Tiled raster templates served by geometry.
//!
//! A store root holds one `<name>.png` (8-bit single band) per tile next to a
//! `<name>.json` sidecar `{tile_id, bounds, class}`. Bounds are
//! `[min_x, min_y, max_x, max_y]` in meters of a planar frame whose `y` axis
//! points down the tile rows, matching the scene frame. The index is written
//! to `index.json` in the root.

mod fixtures;

use std::collections::{HashMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use geo::MultiPolygon;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{multipolygon_bounds, Rect};
use crate::raster::{png_dimensions, RasterError, RasterImage};

pub use fixtures::{make_fixtures, FixtureConfig};

/// Class tags a tile may carry.
pub const TILE_CLASSES: [&str; 3] = ["sea", "coast-mix", "land"];
pub const INDEX_FILE: &str = "index.json";
pub const DEFAULT_CACHE_TILES: usize = 8;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("no {class} template covers the requested geometry")]
    NoTemplate { class: String },
    #[error("unknown tile {0}")]
    UnknownTile(String),
    #[error("cannot read template root {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid index {path}: {message}")]
    Index { path: String, message: String },
    #[error("tile {tile_id}: {source}")]
    Raster {
        tile_id: String,
        #[source]
        source: RasterError,
    },
    #[error("tile {tile_id} is {found_w}x{found_h}, index declares {width}x{height}")]
    TileSize {
        tile_id: String,
        width: usize,
        height: usize,
        found_w: usize,
        found_h: usize,
    },
}

/// Sidecar metadata of one tile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileMeta {
    pub tile_id: String,
    pub bounds: [f64; 4],
    pub class: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileEntry {
    pub tile_id: String,
    pub bounds: [f64; 4],
    pub class: String,
    /// PNG path relative to the store root.
    pub path: String,
}

impl TileEntry {
    pub fn rect(&self) -> Rect {
        let [a, b, c, d] = self.bounds;
        Rect::new(a, b, c, d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileIndex {
    pub tile_width: usize,
    pub tile_height: usize,
    /// Sorted by `tile_id`.
    pub tiles: Vec<TileEntry>,
}

impl TileIndex {
    pub fn tile(&self, tile_id: &str) -> Option<&TileEntry> {
        self.tiles.iter().find(|t| t.tile_id == tile_id)
    }

    /// Meters per pixel along x for `t`.
    pub fn pixel_size(&self, t: &TileEntry) -> f64 {
        t.rect().width() / self.tile_width as f64
    }

    pub fn of_class<'a>(&'a self, class: &str) -> impl Iterator<Item = &'a TileEntry> + 'a {
        let class = class.to_string();
        self.tiles.iter().filter(move |t| t.class == class)
    }
}

/// A tile that could not be indexed.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexDiagnostic {
    pub path: String,
    pub message: String,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TemplateError + '_ {
    move |source| TemplateError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn check_tile(root: &Path, sidecar: &Path) -> Result<(TileEntry, (usize, usize)), String> {
    let text = fs::read_to_string(sidecar).map_err(|e| e.to_string())?;
    let meta: TileMeta = serde_json::from_str(&text).map_err(|e| format!("bad sidecar: {e}"))?;
    if !TILE_CLASSES.contains(&meta.class.as_str()) {
        return Err(format!("unknown class tag {:?}", meta.class));
    }
    let [a, b, c, d] = meta.bounds;
    if !(meta.bounds.iter().all(|v| v.is_finite()) && c > a && d > b) {
        return Err(format!("degenerate bounds {:?}", meta.bounds));
    }
    let png = sidecar.with_extension("png");
    let bytes = fs::read(&png).map_err(|e| format!("{}: {e}", png.display()))?;
    let dims = png_dimensions(&bytes).map_err(|e| e.to_string())?;
    let (px_x, px_y) = ((c - a) / dims.0 as f64, (d - b) / dims.1 as f64);
    if (px_x - px_y).abs() > 1e-9 * px_x {
        return Err(format!("non-square pixels {px_x} x {px_y}"));
    }
    let rel = png.strip_prefix(root).unwrap_or(&png).to_string_lossy().into_owned();
    Ok((
        TileEntry {
            tile_id: meta.tile_id,
            bounds: meta.bounds,
            class: meta.class,
            path: rel,
        },
        dims,
    ))
}

/// Indexes every tile sidecar under `root` (non-recursive).
///
/// The first valid tile in file-name order fixes the tile dimensions; tiles
/// with other dimensions, duplicate ids, unreadable metadata or rasters are
/// reported and skipped.
pub fn build_index(root: &Path) -> Result<(TileIndex, Vec<IndexDiagnostic>), TemplateError> {
    let mut sidecars: Vec<PathBuf> = fs::read_dir(root)
        .map_err(io_err(root))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.file_name().is_some_and(|n| n != INDEX_FILE))
        .collect();
    sidecars.sort();

    let mut tiles: Vec<TileEntry> = Vec::new();
    let mut diagnostics = Vec::new();
    let mut dims: Option<(usize, usize)> = None;
    for sidecar in sidecars {
        let report = |message: String| IndexDiagnostic {
            path: sidecar.display().to_string(),
            message,
        };
        match check_tile(root, &sidecar) {
            Ok((entry, d)) => {
                if dims.is_some_and(|x| x != d) {
                    diagnostics.push(report(format!("tile is {}x{}, expected {:?}", d.0, d.1, dims.unwrap())));
                } else if tiles.iter().any(|t| t.tile_id == entry.tile_id) {
                    diagnostics.push(report(format!("duplicate tile id {}", entry.tile_id)));
                } else {
                    dims = Some(d);
                    tiles.push(entry);
                }
            }
            Err(message) => diagnostics.push(report(message)),
        }
    }
    tiles.sort_by(|a, b| a.tile_id.cmp(&b.tile_id));
    let (tile_width, tile_height) = dims.unwrap_or((0, 0));
    Ok((
        TileIndex {
            tile_width,
            tile_height,
            tiles,
        },
        diagnostics,
    ))
}

pub fn write_index(root: &Path, index: &TileIndex) -> Result<(), TemplateError> {
    let path = root.join(INDEX_FILE);
    let text = serde_json::to_string_pretty(index).expect("index serializes");
    fs::write(&path, text + "\n").map_err(io_err(&path))
}

/// Loads `index.json` and checks that every listed file exists with the
/// declared dimensions.
pub fn load_index(root: &Path) -> Result<TileIndex, TemplateError> {
    let path = root.join(INDEX_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let index: TileIndex = serde_json::from_str(&text).map_err(|e| TemplateError::Index {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    for t in &index.tiles {
        let file = root.join(&t.path);
        let bytes = fs::read(&file).map_err(io_err(&file))?;
        let (w, h) = png_dimensions(&bytes).map_err(|source| TemplateError::Raster {
            tile_id: t.tile_id.clone(),
            source,
        })?;
        if (w, h) != (index.tile_width, index.tile_height) {
            return Err(TemplateError::TileSize {
                tile_id: t.tile_id.clone(),
                width: index.tile_width,
                height: index.tile_height,
                found_w: w,
                found_h: h,
            });
        }
    }
    Ok(index)
}

/// Pixel block of a tile, in tile pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelWindow {
    pub col: usize,
    pub row: usize,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateSelection {
    pub tile_id: String,
    pub window: PixelWindow,
}

/// Picks a tile of `class` whose bounds contain the bounding box of
/// `geometry` and returns the pixel window covering that box.
///
/// Among several candidates the choice is `selector` modulo their count, in
/// `tile_id` order.
pub fn query_by_geometry(
    index: &TileIndex,
    geometry: &MultiPolygon<f64>,
    class: &str,
    selector: u64,
) -> Result<TemplateSelection, TemplateError> {
    let no_template = || TemplateError::NoTemplate { class: class.to_string() };
    let bbox = multipolygon_bounds(geometry).ok_or_else(no_template)?;
    let candidates: Vec<&TileEntry> = index.of_class(class).filter(|t| t.rect().contains_rect(&bbox)).collect();
    if candidates.is_empty() {
        return Err(no_template());
    }
    let tile = candidates[(selector % candidates.len() as u64) as usize];
    let r = tile.rect();
    let ps = index.pixel_size(tile);
    let col0 = ((bbox.min_x - r.min_x) / ps).floor().max(0.0) as usize;
    let row0 = ((bbox.min_y - r.min_y) / ps).floor().max(0.0) as usize;
    let col1 = (((bbox.max_x - r.min_x) / ps).ceil() as usize).clamp(col0 + 1, index.tile_width);
    let row1 = (((bbox.max_y - r.min_y) / ps).ceil() as usize).clamp(row0 + 1, index.tile_height);
    Ok(TemplateSelection {
        tile_id: tile.tile_id.clone(),
        window: PixelWindow {
            col: col0,
            row: row0,
            width: col1 - col0,
            height: row1 - row0,
        },
    })
}

/// Least-recently-used tile cache behind a mutex.
struct TileCache {
    capacity: usize,
    tiles: HashMap<String, Arc<RasterImage>>,
    order: VecDeque<String>,
}

impl TileCache {
    fn get(&mut self, id: &str) -> Option<Arc<RasterImage>> {
        let t = self.tiles.get(id)?.clone();
        self.order.retain(|x| x != id);
        self.order.push_back(id.to_string());
        Some(t)
    }

    fn put(&mut self, id: &str, tile: Arc<RasterImage>) {
        if self.capacity == 0 {
            return;
        }
        if self.tiles.insert(id.to_string(), tile).is_none() {
            self.order.push_back(id.to_string());
        }
        while self.order.len() > self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.tiles.remove(&old);
            }
        }
    }
}

/// An immutable index plus a shared, bounded cache of decoded tiles.
pub struct TemplateStore {
    root: PathBuf,
    index: TileIndex,
    cache: Mutex<TileCache>,
}

impl TemplateStore {
    pub fn new(root: impl Into<PathBuf>, index: TileIndex, cache_tiles: usize) -> Self {
        Self {
            root: root.into(),
            index,
            cache: Mutex::new(TileCache {
                capacity: cache_tiles,
                tiles: HashMap::new(),
                order: VecDeque::new(),
            }),
        }
    }

    /// Opens `root` using its `index.json`, or indexes the directory when no
    /// index file exists.
    pub fn open(root: &Path) -> Result<Self, TemplateError> {
        let index = if root.join(INDEX_FILE).exists() {
            load_index(root)?
        } else {
            let (index, diagnostics) = build_index(root)?;
            for d in diagnostics {
                log::warn!("skipping template {}: {}", d.path, d.message);
            }
            index
        };
        Ok(Self::new(root, index, DEFAULT_CACHE_TILES))
    }

    pub fn index(&self) -> &TileIndex {
        &self.index
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn cached_tiles(&self) -> usize {
        self.cache.lock().expect("cache lock").tiles.len()
    }

    /// Decoded raster of a tile, served from the cache when possible.
    pub fn tile(&self, tile_id: &str) -> Result<Arc<RasterImage>, TemplateError> {
        if let Some(t) = self.cache.lock().expect("cache lock").get(tile_id) {
            return Ok(t);
        }
        let entry = self
            .index
            .tile(tile_id)
            .ok_or_else(|| TemplateError::UnknownTile(tile_id.to_string()))?;
        let raster = RasterImage::read_png(&self.root.join(&entry.path), self.index.pixel_size(entry))
            .map_err(|source| TemplateError::Raster {
                tile_id: tile_id.to_string(),
                source,
            })?;
        if (raster.width, raster.height) != (self.index.tile_width, self.index.tile_height) {
            return Err(TemplateError::TileSize {
                tile_id: tile_id.to_string(),
                width: self.index.tile_width,
                height: self.index.tile_height,
                found_w: raster.width,
                found_h: raster.height,
            });
        }
        let raster = Arc::new(raster);
        self.cache.lock().expect("cache lock").put(tile_id, raster.clone());
        Ok(raster)
    }

    pub fn query(&self, geometry: &MultiPolygon<f64>, class: &str, selector: u64) -> Result<TemplateSelection, TemplateError> {
        query_by_geometry(&self.index, geometry, class, selector)
    }

    /// Pixels of a selection's window, row-major.
    pub fn read_window(&self, s: &TemplateSelection) -> Result<Vec<u8>, TemplateError> {
        let w = s.window;
        Ok(self.tile(&s.tile_id)?.window(w.col, w.row, w.width, w.height))
    }
}
