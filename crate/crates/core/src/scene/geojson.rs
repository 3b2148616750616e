use geo::{LineString, MultiPolygon, Polygon};
use serde_json::{json, Value};
use thiserror::Error;

use super::{Role, SceneComposition};
use crate::geometry::{pt, Point};

#[derive(Debug, Error)]
pub enum GeoJsonError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid GeoJSON: {0}")]
    Format(String),
}

fn ring_json(ring: &LineString<f64>) -> Value {
    Value::Array(ring.0.iter().map(|c| json!([c.x, c.y])).collect())
}

fn multipolygon_json(mp: &MultiPolygon<f64>) -> Value {
    let polys: Vec<Value> = mp
        .0
        .iter()
        .map(|p| {
            let mut rings = vec![ring_json(p.exterior())];
            rings.extend(p.interiors().iter().map(ring_json));
            Value::Array(rings)
        })
        .collect();
    json!({ "type": "MultiPolygon", "coordinates": polys })
}

fn role_str(r: Role) -> &'static str {
    match r {
        Role::Target => "target",
        Role::NoneTarget => "none-target",
    }
}

/// Debug dump of a composition: one feature per footprint and one per point
/// set, in scene meters.
pub fn composition_to_geojson(c: &SceneComposition) -> Value {
    let mut features = Vec::new();
    for (i, e) in c.elements.iter().enumerate() {
        if !e.area.0.is_empty() {
            features.push(json!({
                "type": "Feature",
                "properties": {
                    "element": i,
                    "entity": e.area_entity.as_deref().unwrap_or(&e.entity),
                    "parent": e.entity,
                    "role": role_str(e.role),
                },
                "geometry": multipolygon_json(&e.area),
            }));
        }
        if !e.points.is_empty() {
            features.push(json!({
                "type": "Feature",
                "properties": {
                    "element": i,
                    "entity": e.point_entity.as_deref().unwrap_or(&e.entity),
                    "parent": e.entity,
                    "role": role_str(e.role),
                },
                "geometry": {
                    "type": "MultiPoint",
                    "coordinates": e.points.iter().map(|p| json!([p.x, p.y])).collect::<Vec<_>>(),
                },
            }));
        }
    }
    json!({
        "type": "FeatureCollection",
        "frame": "scene-m",
        "extent": [0.0, 0.0, c.extent.scene_size_m, c.extent.scene_size_m],
        "seed": c.seed,
        "features": features,
    })
}

fn coords(v: &Value) -> Result<Vec<Point>, GeoJsonError> {
    let arr = v.as_array().ok_or_else(|| GeoJsonError::Format("ring is not an array".into()))?;
    arr.iter()
        .map(|c| match c.as_array().map(|a| a.as_slice()) {
            Some([x, y, ..]) => match (x.as_f64(), y.as_f64()) {
                (Some(x), Some(y)) => Ok(pt(x, y)),
                _ => Err(GeoJsonError::Format("non-numeric coordinate".into())),
            },
            _ => Err(GeoJsonError::Format("coordinate needs two numbers".into())),
        })
        .collect()
}

fn polygon(v: &Value) -> Result<Polygon<f64>, GeoJsonError> {
    let rings = v.as_array().ok_or_else(|| GeoJsonError::Format("polygon is not an array".into()))?;
    let mut rings = rings.iter().map(|r| coords(r).map(LineString::new));
    let exterior = rings
        .next()
        .ok_or_else(|| GeoJsonError::Format("polygon has no rings".into()))??;
    Ok(Polygon::new(exterior, rings.collect::<Result<_, _>>()?))
}

/// Land and optional coast polygons from a FeatureCollection whose features
/// carry `"entity": "Land"` or `"entity": "Coast"` properties.
pub fn read_partition_geojson(text: &str) -> Result<(MultiPolygon<f64>, Option<MultiPolygon<f64>>), GeoJsonError> {
    let doc: Value = serde_json::from_str(text)?;
    let features = doc["features"]
        .as_array()
        .ok_or_else(|| GeoJsonError::Format("expected a FeatureCollection".into()))?;
    let mut land = Vec::new();
    let mut coast = Vec::new();
    for f in features {
        let geometry = &f["geometry"];
        let polys = match geometry["type"].as_str() {
            Some("Polygon") => vec![polygon(&geometry["coordinates"])?],
            Some("MultiPolygon") => geometry["coordinates"]
                .as_array()
                .ok_or_else(|| GeoJsonError::Format("bad MultiPolygon".into()))?
                .iter()
                .map(polygon)
                .collect::<Result<_, _>>()?,
            other => return Err(GeoJsonError::Format(format!("unsupported geometry {other:?}"))),
        };
        match f["properties"]["entity"].as_str() {
            Some("Land") => land.extend(polys),
            Some("Coast") => coast.extend(polys),
            other => return Err(GeoJsonError::Format(format!("unknown entity {other:?}"))),
        }
    }
    if land.is_empty() {
        return Err(GeoJsonError::Format("no Land feature".into()));
    }
    Ok((MultiPolygon::new(land), (!coast.is_empty()).then(|| MultiPolygon::new(coast))))
}
