//! The sea / coast / land partition of the scene extent.

use geo::{Area, BooleanOps, MultiPolygon, Polygon};
use noise::{NoiseFn, Perlin};
use rand::Rng;

use super::{key_of, value_of, Role, SceneElement, SceneError, SceneExtentConfig};
use crate::geometry::{polygon_from_ring, pt, ring_is_simple, open_ring, Point};
use crate::ontology::SceneElementSpecification;

/// Coastline vertices per scene side.
const COAST_SAMPLES: usize = 128;

/// Scene side the land sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    North,
    East,
    South,
    West,
}

impl Side {
    pub fn from_key(key: &str) -> Option<Side> {
        match key {
            "north" => Some(Side::North),
            "east" => Some(Side::East),
            "south" => Some(Side::South),
            "west" => Some(Side::West),
            _ => None,
        }
    }

    /// Maps a point of the north-side construction onto this side.
    fn place(self, p: Point, size: f64) -> Point {
        match self {
            Side::North => p,
            Side::South => pt(p.x, size - p.y),
            Side::West => pt(p.y, p.x),
            Side::East => pt(size - p.y, p.x),
        }
    }
}

fn mp(p: Polygon<f64>) -> MultiPolygon<f64> {
    MultiPolygon::new(vec![p])
}

/// Builds the partition from sampled `Sea`, `Land` and (optional) `Coast`
/// specifications.
///
/// Absent land yields a single sea element covering the extent. Otherwise a
/// procedural coastline (1D gradient noise displacing a line parallel to
/// the land side) splits the extent; with a coast the band between the
/// coastline and its copy shifted seawards by the sampled width becomes the
/// coast element. All three polygons share their boundary vertices
/// exactly.
pub fn generate_partition(
    extent: SceneExtentConfig,
    sea: &SceneElementSpecification,
    land: &SceneElementSpecification,
    coast: Option<&SceneElementSpecification>,
    rng: &mut impl Rng,
) -> Result<Vec<SceneElement>, SceneError> {
    let size = extent.scene_size_m;
    let sea_element = |area| SceneElement::area_only("Sea", Role::NoneTarget, area, sea.clone());
    if key_of(land, "presence")? != "present" {
        return Ok(vec![sea_element(mp(extent.bounds().to_polygon()))]);
    }

    let side = Side::from_key(key_of(land, "side")?).ok_or_else(|| SceneError::MissingValue {
        entity: "Land".into(),
        characteristic: "side".into(),
    })?;
    let depth = value_of(land, "depth")?;
    let amplitude = value_of(land, "amplitude")?;
    let wavelength = value_of(land, "wavelength")?.max(f64::MIN_POSITIVE);
    let band = match coast {
        Some(c) => value_of(c, "width")?,
        None => 0.0,
    };
    let noise = Perlin::new(rng.random());
    let shift: f64 = rng.random::<f64>() * 1000.0;

    let margin = extent.sensor_resolution_m;
    let hi = size - band - margin;
    if hi < margin {
        return Err(SceneError::DegenerateGeometry(format!(
            "coast band of {band} m leaves no room for land and sea"
        )));
    }
    // Coastline in the north-side frame: land is y < line(x).
    let line: Vec<Point> = (0..=COAST_SAMPLES)
        .map(|i| {
            let x = size * i as f64 / COAST_SAMPLES as f64;
            let t = x / wavelength + shift;
            let n = noise.get([t]) + 0.5 * noise.get([2.0 * t + 17.0]);
            pt(x, (depth + amplitude * n).clamp(margin, hi))
        })
        .collect();
    let outer: Vec<Point> = line.iter().map(|p| pt(p.x, p.y + band)).collect();

    let place = |ring: Vec<Point>| polygon_from_ring(&ring.into_iter().map(|p| side.place(p, size)).collect::<Vec<_>>());

    let mut land_ring = vec![pt(0.0, 0.0), pt(size, 0.0)];
    land_ring.extend(line.iter().rev());
    let sea_front = if coast.is_some() { &outer } else { &line };
    let mut sea_ring: Vec<Point> = sea_front.clone();
    sea_ring.extend([pt(size, size), pt(0.0, size)]);

    let mut out = vec![sea_element(mp(place(sea_ring)))];
    if let Some(c) = coast {
        let mut coast_ring: Vec<Point> = line.clone();
        coast_ring.extend(outer.iter().rev());
        out.push(SceneElement::area_only("Coast", Role::NoneTarget, mp(place(coast_ring)), c.clone()));
    }
    out.push(SceneElement::area_only("Land", Role::NoneTarget, mp(place(land_ring)), land.clone()));
    Ok(out)
}

/// Builds a partition from external land (and optional coast) polygons in
/// scene meters. Geometry is clipped to the extent; the sea is whatever
/// remains.
pub fn partition_from_geometries(
    extent: SceneExtentConfig,
    land: &MultiPolygon<f64>,
    coast: Option<&MultiPolygon<f64>>,
    specs: (&SceneElementSpecification, &SceneElementSpecification, Option<&SceneElementSpecification>),
) -> Result<Vec<SceneElement>, SceneError> {
    let (sea_spec, land_spec, coast_spec) = specs;
    let check = |name: &str, g: &MultiPolygon<f64>| -> Result<(), SceneError> {
        for p in &g.0 {
            for ring in std::iter::once(p.exterior()).chain(p.interiors()) {
                let r = open_ring(ring);
                if r.len() < 3 || !ring_is_simple(r) {
                    return Err(SceneError::DegenerateGeometry(format!("{name} has a non-simple ring")));
                }
            }
        }
        if g.unsigned_area() <= 0.0 {
            return Err(SceneError::DegenerateGeometry(format!("{name} has no area")));
        }
        Ok(())
    };
    check("land", land)?;
    let frame = mp(extent.bounds().to_polygon());
    let land = land.intersection(&frame);
    let coast = match coast {
        Some(c) => {
            check("coast", c)?;
            Some(c.intersection(&frame).difference(&land))
        }
        None => None,
    };
    let mut sea = frame.difference(&land);
    if let Some(c) = &coast {
        sea = sea.difference(c);
    }
    if land.unsigned_area() <= 0.0 {
        return Err(SceneError::DegenerateGeometry("land lies outside the scene".into()));
    }
    if sea.unsigned_area() <= 0.0 {
        return Err(SceneError::DegenerateGeometry("no sea left in the scene".into()));
    }

    let mut out = vec![SceneElement::area_only("Sea", Role::NoneTarget, sea, sea_spec.clone())];
    if let (Some(c), Some(s)) = (coast, coast_spec) {
        out.push(SceneElement::area_only("Coast", Role::NoneTarget, c, s.clone()));
    }
    out.push(SceneElement::area_only("Land", Role::NoneTarget, land, land_spec.clone()));
    Ok(out)
}
