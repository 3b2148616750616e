//! Independent topology checker over plain vertex lists: ray casting,
//! orientation tests and segment distances only.

use eosynth_core::geometry::Point;
use eosynth_core::ontology::{Predicate, TopologyRelation};
use eosynth_core::scene::{SceneComposition, SceneElement};
use geo::MultiPolygon;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loc {
    In,
    On,
    Out,
}

/// Exterior ring and hole rings of one polygon, without closing vertices.
pub struct Poly {
    pub outer: Vec<Point>,
    pub holes: Vec<Vec<Point>>,
}

pub fn polys(mp: &MultiPolygon<f64>) -> Vec<Poly> {
    let open = |ls: &geo::LineString<f64>| {
        let mut v = ls.0.clone();
        if v.len() > 1 && v.first() == v.last() {
            v.pop();
        }
        v
    };
    mp.0.iter()
        .map(|p| Poly {
            outer: open(p.exterior()),
            holes: p.interiors().iter().map(open).collect(),
        })
        .collect()
}

fn edges(ring: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    (0..ring.len()).map(move |i| (ring[i], ring[(i + 1) % ring.len()]))
}

fn seg_dist(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0) };
    ((p.x - a.x - t * dx).powi(2) + (p.y - a.y - t * dy).powi(2)).sqrt()
}

pub fn ring_loc(p: Point, ring: &[Point]) -> Loc {
    if edges(ring).any(|(a, b)| seg_dist(p, a, b) <= EPS) {
        return Loc::On;
    }
    let mut inside = false;
    for (a, b) in edges(ring) {
        if (a.y > p.y) != (b.y > p.y) && p.x < a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x) {
            inside = !inside;
        }
    }
    if inside {
        Loc::In
    } else {
        Loc::Out
    }
}

pub fn poly_loc(p: Point, poly: &Poly) -> Loc {
    match ring_loc(p, &poly.outer) {
        Loc::In => {}
        other => return other,
    }
    for h in &poly.holes {
        match ring_loc(p, h) {
            Loc::In => return Loc::Out,
            Loc::On => return Loc::On,
            Loc::Out => {}
        }
    }
    Loc::In
}

pub fn set_loc(p: Point, set: &[Poly]) -> Loc {
    let locs: Vec<Loc> = set.iter().map(|q| poly_loc(p, q)).collect();
    if locs.contains(&Loc::In) {
        Loc::In
    } else if locs.contains(&Loc::On) {
        Loc::On
    } else {
        Loc::Out
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn proper_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0 && [o1, o2, o3, o4].iter().all(|o| o.abs() > EPS)
}

fn all_edges(set: &[Poly]) -> Vec<(Point, Point)> {
    set.iter()
        .flat_map(|p| std::iter::once(&p.outer).chain(&p.holes))
        .flat_map(|r| edges(r).collect::<Vec<_>>())
        .collect()
}

/// Vertices and edge midpoints of every ring.
fn samples(set: &[Poly]) -> Vec<Point> {
    all_edges(set)
        .into_iter()
        .flat_map(|(a, b)| [a, eosynth_core::geometry::pt((a.x + b.x) / 2.0, (a.y + b.y) / 2.0)])
        .collect()
}

fn any_crossing(a: &[Poly], b: &[Poly]) -> bool {
    let eb = all_edges(b);
    all_edges(a).iter().any(|&(p, q)| eb.iter().any(|&(r, s)| proper_cross(p, q, r, s)))
}

pub fn interiors_meet(a: &[Poly], b: &[Poly]) -> bool {
    any_crossing(a, b)
        || samples(a).iter().any(|&p| set_loc(p, b) == Loc::In)
        || samples(b).iter().any(|&p| set_loc(p, a) == Loc::In)
}

pub fn covered_by(a: &[Poly], b: &[Poly]) -> bool {
    !any_crossing(a, b)
        && samples(a).iter().all(|&p| set_loc(p, b) != Loc::Out)
        && samples(b).iter().all(|&p| set_loc(p, a) != Loc::In)
}

fn distance(a_area: &[Poly], a_pts: &[Point], b_area: &[Poly], b_pts: &[Point]) -> f64 {
    if interiors_meet(a_area, b_area)
        || a_pts.iter().any(|&p| set_loc(p, b_area) != Loc::Out)
        || b_pts.iter().any(|&p| set_loc(p, a_area) != Loc::Out)
        || samples(a_area).iter().any(|&p| set_loc(p, b_area) != Loc::Out)
    {
        return 0.0;
    }
    let (ea, eb) = (all_edges(a_area), all_edges(b_area));
    let mut best = f64::INFINITY;
    for &p in a_pts {
        best = best.min(eb.iter().map(|&(r, s)| seg_dist(p, r, s)).fold(f64::INFINITY, f64::min));
        best = best.min(b_pts.iter().map(|q| ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt()).fold(f64::INFINITY, f64::min));
    }
    for &p in b_pts {
        best = best.min(ea.iter().map(|&(r, s)| seg_dist(p, r, s)).fold(f64::INFINITY, f64::min));
    }
    for &(p, q) in &ea {
        for &(r, s) in &eb {
            best = best.min(seg_dist(p, r, s)).min(seg_dist(q, r, s)).min(seg_dist(r, p, q)).min(seg_dist(s, p, q));
        }
    }
    best
}

struct Feature<'a> {
    entity: &'a str,
    area: Vec<Poly>,
    points: &'a [Point],
}

fn features(elements: &[SceneElement]) -> Vec<Feature<'_>> {
    let mut out = Vec::new();
    for e in elements {
        out.push(Feature {
            entity: &e.entity,
            area: polys(&e.area),
            points: &e.points,
        });
        if let Some(a) = &e.area_entity {
            out.push(Feature {
                entity: a,
                area: polys(&e.area),
                points: &[],
            });
        }
        if let Some(p) = &e.point_entity {
            out.push(Feature {
                entity: p,
                area: Vec::new(),
                points: &e.points,
            });
        }
    }
    out
}

/// One `(subject, predicate name, object)` triple per violated subject for
/// enclosing predicates and per violated pair for the others, sorted.
pub fn oracle_violations(elements: &[SceneElement], relations: &[TopologyRelation]) -> Vec<(String, String, String)> {
    let feats = features(elements);
    let mut out = Vec::new();
    for r in relations {
        let subjects: Vec<&Feature> = feats.iter().filter(|f| f.entity == r.subject).collect();
        let objects: Vec<&Feature> = feats.iter().filter(|f| f.entity == r.object).collect();
        if objects.is_empty() {
            continue;
        }
        let triple = || (r.subject.clone(), r.predicate.name().to_string(), r.object.clone());
        for s in &subjects {
            match r.predicate {
                Predicate::MustBeInside | Predicate::MustBeCoincidentWith => {
                    let strict = r.predicate == Predicate::MustBeInside;
                    let union: Vec<&Poly> = objects.iter().flat_map(|o| &o.area).collect();
                    let union: Vec<Poly> = union.iter().map(|p| Poly { outer: p.outer.clone(), holes: p.holes.clone() }).collect();
                    let point_ok = |p: &Point| match set_loc(*p, &union) {
                        Loc::In => true,
                        Loc::On => !strict,
                        Loc::Out => !strict && objects.iter().any(|o| o.points.contains(p)),
                    };
                    let area_ok = s.area.is_empty() || (!union.is_empty() && covered_by(&s.area, &union));
                    if !(s.points.iter().all(point_ok) && area_ok) {
                        out.push(triple());
                    }
                }
                Predicate::MustNotOverlap => {
                    for o in &objects {
                        if interiors_meet(&s.area, &o.area)
                            || s.points.iter().any(|&p| set_loc(p, &o.area) == Loc::In)
                            || o.points.iter().any(|&p| set_loc(p, &s.area) == Loc::In)
                        {
                            out.push(triple());
                        }
                    }
                }
                Predicate::MustBeWithinDistance(d) => {
                    for o in &objects {
                        if distance(&s.area, s.points, &o.area, o.points) > d + 1e-6 {
                            out.push(triple());
                        }
                    }
                }
            }
        }
    }
    out.sort();
    out
}

pub fn composition_violations(c: &SceneComposition) -> Vec<(String, String, String)> {
    oracle_violations(&c.elements, &c.relations)
}
