use std::fmt;

use geo::{
    coordinate_position::CoordPos, dimensions::Dimensions, unary_union, Contains, Distance, Euclidean, Geometry, GeometryCollection, Intersects,
    MultiPoint, MultiPolygon, Relate,
};

use super::{SceneComposition, SceneElement};
use crate::geometry::Point;
use crate::ontology::{Predicate, TopologyRelation};

/// A relation that does not hold for one subject in a composition.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub subject: String,
    pub predicate: Predicate,
    pub object: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}: {}", self.subject, self.predicate, self.object, self.detail)
    }
}

/// One entity's geometry inside a scene element.
struct Feature<'a> {
    entity: &'a str,
    element: usize,
    area: Option<&'a MultiPolygon<f64>>,
    points: &'a [Point],
}

impl Feature<'_> {
    fn geometry(&self) -> Geometry<f64> {
        let mut parts: Vec<Geometry<f64>> = Vec::new();
        if let Some(a) = self.area {
            parts.push(Geometry::MultiPolygon(a.clone()));
        }
        if !self.points.is_empty() {
            parts.push(Geometry::MultiPoint(MultiPoint::from(self.points.to_vec())));
        }
        Geometry::GeometryCollection(GeometryCollection::new_from(parts))
    }
}

fn features(elements: &[SceneElement]) -> Vec<Feature<'_>> {
    let mut out = Vec::new();
    for (i, e) in elements.iter().enumerate() {
        let area = (!e.area.0.is_empty()).then_some(&e.area);
        out.push(Feature {
            entity: &e.entity,
            element: i,
            area,
            points: &e.points,
        });
        if let Some(name) = &e.area_entity {
            out.push(Feature {
                entity: name,
                element: i,
                area,
                points: &[],
            });
        }
        if let Some(name) = &e.point_entity {
            out.push(Feature {
                entity: name,
                element: i,
                area: None,
                points: &e.points,
            });
        }
    }
    out
}

fn interiors_meet(a: &MultiPolygon<f64>, b: &MultiPolygon<f64>) -> bool {
    a.relate(b).get(CoordPos::Inside, CoordPos::Inside) != Dimensions::Empty
}

fn union_of(objects: &[&Feature]) -> Option<MultiPolygon<f64>> {
    let areas: Vec<&MultiPolygon<f64>> = objects.iter().filter_map(|o| o.area).collect();
    match areas.len() {
        0 => None,
        1 => Some(areas[0].clone()),
        _ => Some(unary_union(areas.iter().flat_map(|m| m.0.iter()))),
    }
}

/// Detail text for a violated relation, `None` when it holds.
fn check_enclosing(predicate: Predicate, s: &Feature, objects: &[&Feature]) -> Option<String> {
    let union = union_of(objects);
    let strict = predicate == Predicate::MustBeInside;
    for p in s.points {
        let gp = geo::Point::from(*p);
        let ok = match &union {
            Some(u) if strict => u.contains(&gp),
            Some(u) => u.intersects(&gp) || objects.iter().any(|o| o.points.contains(p)),
            None => !strict && objects.iter().any(|o| o.points.contains(p)),
        };
        if !ok {
            return Some(format!("point ({:.3}, {:.3}) is not {}", p.x, p.y, if strict { "inside" } else { "covered" }));
        }
    }
    if let Some(a) = s.area {
        match &union {
            Some(u) if a.relate(u).is_coveredby() => {}
            _ => return Some("footprint is not covered".into()),
        }
    }
    None
}

fn check_pair(predicate: Predicate, s: &Feature, o: &Feature) -> Option<String> {
    match predicate {
        Predicate::MustNotOverlap => {
            if let (Some(a), Some(b)) = (s.area, o.area) {
                if interiors_meet(a, b) {
                    return Some("footprints overlap".into());
                }
            }
            if let Some(b) = o.area {
                if let Some(p) = s.points.iter().find(|p| b.contains(&geo::Point::from(**p))) {
                    return Some(format!("point ({:.3}, {:.3}) lies inside", p.x, p.y));
                }
            }
            if let Some(a) = s.area {
                if let Some(p) = o.points.iter().find(|p| a.contains(&geo::Point::from(**p))) {
                    return Some(format!("object point ({:.3}, {:.3}) lies inside", p.x, p.y));
                }
            }
            None
        }
        Predicate::MustBeWithinDistance(d) => {
            let dist = Euclidean.distance(&s.geometry(), &o.geometry());
            (dist > d + 1e-6).then(|| format!("distance {dist:.3} m exceeds {d} m"))
        }
        _ => unreachable!("enclosing predicates are checked against all objects"),
    }
}

/// Violations of `relations` among `elements`. With `focus`, only pairs
/// that involve that element index are evaluated.
pub fn violations_of(elements: &[SceneElement], relations: &[TopologyRelation], focus: Option<usize>) -> Vec<Violation> {
    let feats = features(elements);
    let mut out = Vec::new();
    let involved = |f: &Feature| focus.is_none_or(|i| f.element == i);
    for r in relations {
        let subjects: Vec<&Feature> = feats.iter().filter(|f| f.entity == r.subject).collect();
        let objects: Vec<&Feature> = feats.iter().filter(|f| f.entity == r.object).collect();
        if objects.is_empty() {
            continue;
        }
        let mut push = |detail: String| {
            out.push(Violation {
                subject: r.subject.clone(),
                predicate: r.predicate,
                object: r.object.clone(),
                detail,
            })
        };
        for s in &subjects {
            match r.predicate {
                Predicate::MustBeInside | Predicate::MustBeCoincidentWith => {
                    if !(involved(s) || objects.iter().any(|o| involved(o))) {
                        continue;
                    }
                    if let Some(d) = check_enclosing(r.predicate, s, &objects) {
                        push(d);
                    }
                }
                _ => {
                    for o in &objects {
                        if !(involved(s) || involved(o)) {
                            continue;
                        }
                        if let Some(d) = check_pair(r.predicate, s, o) {
                            push(d);
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn violations(elements: &[SceneElement], relations: &[TopologyRelation]) -> Vec<Violation> {
    violations_of(elements, relations, None)
}

/// All relations the composition was built with, re-checked. Empty iff
/// every relation holds for every subject/object pair present.
pub fn check_topology(c: &SceneComposition) -> Vec<Violation> {
    violations(&c.elements, &c.relations)
}
