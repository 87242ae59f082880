//! Exact geometric predicates, rotation systems and pipe crossings.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::*;
use crate::rat::Rat;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Clockwise,
    Collinear,
    CounterClockwise,
}

impl Orientation {
    pub fn sign(self) -> i8 {
        match self {
            Orientation::Clockwise => -1,
            Orientation::Collinear => 0,
            Orientation::CounterClockwise => 1,
        }
    }
}

fn cross(ax: &Rat, ay: &Rat, bx: &Rat, by: &Rat) -> Rat {
    ax * by - ay * bx
}

/// Sign of `(q − p) × (r − p)`.
pub fn orient(p: &Point, q: &Point, r: &Point) -> Orientation {
    let c = cross(
        &(&q.x - &p.x),
        &(&q.y - &p.y),
        &(&r.x - &p.x),
        &(&r.y - &p.y),
    );
    match c.signum() {
        1 => Orientation::CounterClockwise,
        -1 => Orientation::Clockwise,
        _ => Orientation::Collinear,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SegmentRelation {
    Disjoint,
    /// The relative interiors cross at a single point.
    ProperCrossing(Point),
    /// The segments share exactly one point, which is an endpoint of at
    /// least one of them.
    Touching(Point),
    /// Collinear with a common subsegment of positive length.
    CollinearOverlap(Point, Point),
}

/// `r` is collinear with `p`,`q`; is it inside their bounding box?
fn within_box(p: &Point, q: &Point, r: &Point) -> bool {
    let (x0, x1) = if p.x <= q.x {
        (&p.x, &q.x)
    } else {
        (&q.x, &p.x)
    };
    let (y0, y1) = if p.y <= q.y {
        (&p.y, &q.y)
    } else {
        (&q.y, &p.y)
    };
    *x0 <= r.x && r.x <= *x1 && *y0 <= r.y && r.y <= *y1
}

pub fn on_segment(a: &Point, b: &Point, p: &Point) -> bool {
    orient(a, b, p) == Orientation::Collinear && within_box(a, b, p)
}

pub fn segment_relation(a0: &Point, a1: &Point, b0: &Point, b1: &Point) -> SegmentRelation {
    let d1 = orient(b0, b1, a0).sign();
    let d2 = orient(b0, b1, a1).sign();
    let d3 = orient(a0, a1, b0).sign();
    let d4 = orient(a0, a1, b1).sign();
    if d1 == 0 && d2 == 0 && d3 == 0 && d4 == 0 {
        // lexicographic order is monotone along a line
        let (amin, amax) = if a0 <= a1 { (a0, a1) } else { (a1, a0) };
        let (bmin, bmax) = if b0 <= b1 { (b0, b1) } else { (b1, b0) };
        let lo = amin.max(bmin);
        let hi = amax.min(bmax);
        return match lo.cmp(hi) {
            Ordering::Greater => SegmentRelation::Disjoint,
            Ordering::Equal => SegmentRelation::Touching(lo.clone()),
            Ordering::Less => SegmentRelation::CollinearOverlap(lo.clone(), hi.clone()),
        };
    }
    if d1 * d2 < 0 && d3 * d4 < 0 {
        let ex = &a1.x - &a0.x;
        let ey = &a1.y - &a0.y;
        let fx = &b1.x - &b0.x;
        let fy = &b1.y - &b0.y;
        let num = cross(&(&b0.x - &a0.x), &(&b0.y - &a0.y), &fx, &fy);
        let den = cross(&ex, &ey, &fx, &fy);
        let t = &num / &den;
        let p = Point::new(&a0.x + &(&t * &ex), &a0.y + &(&t * &ey));
        return SegmentRelation::ProperCrossing(p);
    }
    for (d, p, s, t) in [
        (d1, a0, b0, b1),
        (d2, a1, b0, b1),
        (d3, b0, a0, a1),
        (d4, b1, a0, a1),
    ] {
        if d == 0 && within_box(s, t, p) {
            return SegmentRelation::Touching(p.clone());
        }
    }
    SegmentRelation::Disjoint
}

/// Does the point lie on the polyline (endpoints included)?
pub fn polyline_contains(poly: &[Point], p: &Point) -> bool {
    poly.windows(2).any(|w| on_segment(&w[0], &w[1], p))
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("pipes {0} and {1} leave cluster {2} in the same direction")]
    DegenerateRotation(PipeId, PipeId, ClusterId),
    #[error("pipes {0} and {1} touch or overlap at {2}")]
    DegenerateDrawing(PipeId, PipeId, Point),
    #[error("pipe {0} intersects itself at {1}")]
    SelfIntersection(PipeId, Point),
}

/// Direction in which pipe `p` leaves cluster `c`.
pub fn initial_direction(host: &HostGraph, p: PipeId, c: ClusterId) -> (Rat, Rat) {
    let pipe = &host.pipes[&p];
    let here = &host.clusters[&c];
    let next = if pipe.u == c {
        pipe.bends.first().unwrap_or(&host.clusters[&pipe.v])
    } else {
        pipe.bends.last().unwrap_or(&host.clusters[&pipe.u])
    };
    (&next.x - &here.x, &next.y - &here.y)
}

/// Counterclockwise angular comparison of nonzero direction vectors,
/// starting from the positive x-axis.
pub fn angle_cmp(a: &(Rat, Rat), b: &(Rat, Rat)) -> Ordering {
    let half = |d: &(Rat, Rat)| -> u8 {
        if d.1.signum() > 0 || (d.1.is_zero() && d.0.signum() > 0) {
            0
        } else {
            1
        }
    };
    half(a)
        .cmp(&half(b))
        .then_with(|| match cross(&a.0, &a.1, &b.0, &b.1).signum() {
            1 => Ordering::Less,
            -1 => Ordering::Greater,
            _ => Ordering::Equal,
        })
}

pub fn rotation_at(host: &HostGraph) -> Result<RotationSystem, GeometryError> {
    let inc = host.skeleton().incident();
    let mut at = BTreeMap::new();
    for (c, pipes) in inc {
        let mut dirs: Vec<(PipeId, (Rat, Rat))> = pipes
            .iter()
            .map(|&p| (p, initial_direction(host, p, c)))
            .collect();
        dirs.sort_by(|a, b| angle_cmp(&a.1, &b.1));
        for w in dirs.windows(2) {
            if angle_cmp(&w[0].1, &w[1].1) == Ordering::Equal {
                return Err(GeometryError::DegenerateRotation(w[0].0, w[1].0, c));
            }
        }
        at.insert(c, dirs.into_iter().map(|(p, _)| p).collect());
    }
    Ok(RotationSystem { at })
}

struct Seg {
    pipe: PipeId,
    index: usize,
    a: Point,
    b: Point,
    xmin: Rat,
    xmax: Rat,
}

fn segments(host: &HostGraph) -> Vec<Seg> {
    let mut out = Vec::new();
    for &p in host.pipes.keys() {
        let poly = host.polyline(p);
        for (index, w) in poly.windows(2).enumerate() {
            let (xmin, xmax) = if w[0].x <= w[1].x {
                (w[0].x.clone(), w[1].x.clone())
            } else {
                (w[1].x.clone(), w[0].x.clone())
            };
            out.push(Seg {
                pipe: p,
                index,
                a: w[0].clone(),
                b: w[1].clone(),
                xmin,
                xmax,
            });
        }
    }
    out
}

type Pairs = BTreeMap<(PipeId, PipeId), u64>;

fn shared_cluster(host: &HostGraph, p: PipeId, q: PipeId) -> Option<ClusterId> {
    let (a, b) = host.pipes[&p].ends();
    let (c, d) = host.pipes[&q].ends();
    if a == c || a == d {
        Some(a)
    } else if b == c || b == d {
        Some(b)
    } else {
        None
    }
}

fn classify(host: &HostGraph, s: &Seg, t: &Seg, acc: &mut Pairs) -> Result<(), GeometryError> {
    let rel = segment_relation(&s.a, &s.b, &t.a, &t.b);
    if s.pipe == t.pipe {
        let adjacent = s.index.abs_diff(t.index) == 1;
        return match rel {
            SegmentRelation::Disjoint => Ok(()),
            SegmentRelation::Touching(_) if adjacent => Ok(()),
            SegmentRelation::ProperCrossing(pt)
            | SegmentRelation::Touching(pt)
            | SegmentRelation::CollinearOverlap(pt, _) => {
                Err(GeometryError::SelfIntersection(s.pipe, pt))
            }
        };
    }
    let (p, q) = if s.pipe < t.pipe {
        (s.pipe, t.pipe)
    } else {
        (t.pipe, s.pipe)
    };
    match rel {
        SegmentRelation::Disjoint => Ok(()),
        SegmentRelation::ProperCrossing(_) => {
            *acc.entry((p, q)).or_default() += 1;
            Ok(())
        }
        SegmentRelation::Touching(pt) => match shared_cluster(host, p, q) {
            Some(c) if host.clusters[&c] == pt => Ok(()),
            _ => Err(GeometryError::DegenerateDrawing(p, q, pt)),
        },
        SegmentRelation::CollinearOverlap(pt, _) => Err(GeometryError::DegenerateDrawing(p, q, pt)),
    }
}

/// Crossing pipe pairs by testing every pair of segments.
pub fn crossing_pairs_reference(host: &HostGraph) -> Result<Pairs, GeometryError> {
    let segs = segments(host);
    let mut acc = Pairs::new();
    for i in 0..segs.len() {
        for j in i + 1..segs.len() {
            classify(host, &segs[i], &segs[j], &mut acc)?;
        }
    }
    Ok(acc)
}

/// Crossing pipe pairs by a left-to-right sweep that only tests segments
/// whose x-extents overlap.
pub fn crossing_pairs_sweep(host: &HostGraph) -> Result<Pairs, GeometryError> {
    let mut segs = segments(host);
    segs.sort_by(|a, b| a.xmin.cmp(&b.xmin));
    let mut acc = Pairs::new();
    let mut active: Vec<usize> = Vec::new();
    for i in 0..segs.len() {
        active.retain(|&j| segs[j].xmax >= segs[i].xmin);
        for &j in &active {
            classify(host, &segs[j], &segs[i], &mut acc)?;
        }
        active.push(i);
    }
    Ok(acc)
}

pub fn crossing_ledger(inst: &Instance) -> Result<CrossingLedger, GeometryError> {
    let pairs = crossing_pairs_sweep(&inst.host)?;
    Ok(ledger_from_pairs(inst, pairs))
}

pub fn crossing_ledger_reference(inst: &Instance) -> Result<CrossingLedger, GeometryError> {
    let pairs = crossing_pairs_reference(&inst.host)?;
    Ok(ledger_from_pairs(inst, pairs))
}

fn ledger_from_pairs(inst: &Instance, pairs: Pairs) -> CrossingLedger {
    let weights = inst.map.weights();
    let w = inst
        .host
        .pipes
        .keys()
        .map(|&p| (p, weights.get(&p).copied().unwrap_or(0)))
        .collect();
    CrossingLedger::new(w, pairs)
}

impl Embedded {
    /// The combinatorial view of a geometric instance.
    pub fn from_instance(inst: &Instance) -> Result<Embedded, GeometryError> {
        Ok(Embedded {
            guest: inst.guest.clone(),
            host: inst.host.skeleton(),
            map: inst.map.clone(),
            rotations: rotation_at(&inst.host)?,
            ledger: crossing_ledger(inst)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::text::parse_instance;
    use proptest::prelude::*;

    fn pt(x: i64, y: i64) -> Point {
        Point::int(x, y)
    }

    #[test]
    fn orient_signs() {
        assert_eq!(orient(&pt(0, 0), &pt(1, 0), &pt(0, 1)).sign(), 1);
        assert_eq!(orient(&pt(0, 0), &pt(1, 1), &pt(2, 2)).sign(), 0);
        assert_eq!(orient(&pt(0, 0), &pt(0, 1), &pt(1, 0)).sign(), -1);
    }

    #[test]
    fn segment_relation_examples() {
        assert_eq!(
            segment_relation(&pt(0, 0), &pt(2, 2), &pt(0, 2), &pt(2, 0)),
            SegmentRelation::ProperCrossing(pt(1, 1))
        );
        assert_eq!(
            segment_relation(&pt(0, 0), &pt(2, 0), &pt(1, 0), &pt(3, 0)),
            SegmentRelation::CollinearOverlap(pt(1, 0), pt(2, 0))
        );
        assert_eq!(
            segment_relation(&pt(0, 0), &pt(1, 0), &pt(1, 0), &pt(2, 1)),
            SegmentRelation::Touching(pt(1, 0))
        );
        assert_eq!(
            segment_relation(&pt(0, 0), &pt(1, 0), &pt(2, 0), &pt(3, 0)),
            SegmentRelation::Disjoint
        );
        // T-junction: endpoint in the other's interior
        assert_eq!(
            segment_relation(&pt(0, 0), &pt(2, 0), &pt(1, 0), &pt(1, 5)),
            SegmentRelation::Touching(pt(1, 0))
        );
    }

    #[test]
    fn crossing_point_is_exact_rational() {
        let rel = segment_relation(&pt(0, 0), &pt(3, 1), &pt(0, 1), &pt(1, 0));
        assert_eq!(
            rel,
            SegmentRelation::ProperCrossing(Point::new(Rat::new(3, 4), Rat::new(1, 4)))
        );
    }

    #[test]
    fn rotation_east_north_west() {
        let inst = parse_instance(
            "cluster 0 0 0\ncluster 1 1 0\ncluster 2 0 1\ncluster 3 -1 0\n\
             pipe 10 0 3\npipe 11 0 2\npipe 12 0 1\n",
        )
        .unwrap();
        let rot = rotation_at(&inst.host).unwrap();
        assert_eq!(
            rot.at[&ClusterId(0)],
            vec![PipeId(12), PipeId(11), PipeId(10)]
        );
    }

    #[test]
    fn coincident_directions_are_rejected() {
        let inst = parse_instance(
            "cluster 0 0 0\ncluster 1 2 0\ncluster 2 1 1\npipe 0 0 1\npipe 1 0 2 : 1 0 2 1\n",
        )
        .unwrap();
        assert!(matches!(
            rotation_at(&inst.host),
            Err(GeometryError::DegenerateRotation(..))
        ));
    }

    #[test]
    fn tri6_has_no_crossings() {
        let inst = corpus::tri6();
        let l = crossing_ledger(&inst).unwrap();
        assert_eq!(l.cr2, 0);
        assert!(l.crossing_pairs.is_empty());
        for r in rotation_at(&inst.host).unwrap().at.values() {
            assert_eq!(r.len(), 2);
        }
    }

    fn two_pipes(bends: &str, wa: usize, wb: usize) -> Instance {
        // pipe 0 from P=(0,0) to Q=(4,0), pipe 1 from R to S; guest paths
        // of `wa` and `wb` parallel single edges.
        let mut text =
            String::from("cluster 0 0 -1\ncluster 1 4 -1\ncluster 2 0 1\ncluster 3 4 1\n");
        text.push_str("pipe 0 0 3\n");
        text.push_str(&format!("pipe 1 2 1{bends}\n"));
        let mut inst = parse_instance(&text).unwrap();
        let mut next = 0u32;
        for (p, (a, b), w) in [(0, (0, 3), wa), (1, (2, 1), wb)] {
            for _ in 0..w {
                let (x, y) = (VertexId(next), VertexId(next + 1));
                inst.guest.vertices.insert(x);
                inst.guest.vertices.insert(y);
                inst.guest.edges.insert(EdgeId(next), (x, y));
                inst.map.vertex_map.insert(x, ClusterId(a));
                inst.map.vertex_map.insert(y, ClusterId(b));
                inst.map.edge_map.insert(EdgeId(next), PipeId(p));
                next += 2;
            }
        }
        inst
    }

    #[test]
    fn single_crossing_weights_multiply() {
        let inst = two_pipes("", 2, 3);
        let l = crossing_ledger(&inst).unwrap();
        assert_eq!(l.crossing_pairs[&(PipeId(0), PipeId(1))], 1);
        assert_eq!(l.cr2, 6);
        assert_eq!(l.cr2_from_crossing_weights(), 6);
    }

    #[test]
    fn zigzag_pipe_crosses_three_times() {
        // pipe 1 from (0,1) zigzags across the diagonal of pipe 0,
        // once per segment
        let inst = two_pipes(" : 1 -2 2 3", 1, 1);
        let reference = crossing_ledger_reference(&inst).unwrap();
        let sweep = crossing_ledger(&inst).unwrap();
        assert_eq!(reference, sweep);
        assert_eq!(reference.crossing_pairs[&(PipeId(0), PipeId(1))], 3);
        assert_eq!(reference.cr2, 3);
    }

    #[test]
    fn touching_pipes_are_degenerate() {
        // pipe 1 bends exactly onto pipe 0's interior
        let inst = two_pipes(" : 2 0", 1, 1);
        assert!(matches!(
            crossing_ledger_reference(&inst),
            Err(GeometryError::DegenerateDrawing(..))
        ));
        assert!(matches!(
            crossing_ledger(&inst),
            Err(GeometryError::DegenerateDrawing(..))
        ));
    }

    fn small_point() -> impl Strategy<Value = Point> {
        (-4i64..5, -4i64..5).prop_map(|(x, y)| Point::int(x, y))
    }

    proptest! {
        #[test]
        fn segment_relation_is_symmetric(
            a0 in small_point(), a1 in small_point(), b0 in small_point(), b1 in small_point()
        ) {
            prop_assume!(a0 != a1 && b0 != b1);
            let r1 = segment_relation(&a0, &a1, &b0, &b1);
            let r2 = segment_relation(&b0, &b1, &a0, &a1);
            prop_assert_eq!(&r1, &r2);
            let r3 = segment_relation(&a1, &a0, &b1, &b0);
            prop_assert_eq!(&r1, &r3);
        }

        #[test]
        fn sweep_matches_reference(seed in 0u64..400) {
            let inst = corpus::random_drawn_host(seed, 6, 3);
            let a = crossing_pairs_reference(&inst.host);
            let b = crossing_pairs_sweep(&inst.host);
            match (a, b) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "disagree: {:?} vs {:?}", a, b),
            }
        }
    }
}
