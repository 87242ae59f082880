//! Turning a raw piecewise-linear drawing of a graph into an instance
//! `(G′, H, λ, γ)` with a simplicial `λ`.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::geometry::{on_segment, segment_relation, SegmentRelation};
use crate::model::*;

/// Guest vertices with positions and guest edges as polylines.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawDrawing {
    pub vertices: BTreeMap<VertexId, Point>,
    /// `(a, b, interior bend points from a to b)`; edge `k` of the drawing is
    /// the `k`-th entry.
    pub edges: Vec<(VertexId, VertexId, Vec<Point>)>,
}

impl RawDrawing {
    pub fn polyline(&self, k: usize) -> Vec<Point> {
        let (a, b, bends) = &self.edges[k];
        let mut pts = vec![self.vertices[a].clone()];
        pts.extend(bends.iter().cloned());
        pts.push(self.vertices[b].clone());
        pts
    }

    /// The drawing `γ∘λ` of an instance, one polyline per guest edge.
    pub fn from_instance(inst: &Instance) -> RawDrawing {
        let vertices = inst
            .guest
            .vertices
            .iter()
            .map(|v| (*v, inst.host.clusters[&inst.map.vertex_map[v]].clone()))
            .collect();
        let edges = inst
            .guest
            .edges
            .iter()
            .map(|(e, &(a, b))| {
                let pipe = &inst.host.pipes[&inst.map.edge_map[e]];
                let mut bends = pipe.bends.clone();
                if pipe.u != inst.map.vertex_map[&a] {
                    bends.reverse();
                }
                (a, b, bends)
            })
            .collect();
        RawDrawing { vertices, edges }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error("edge {0} has a zero-length segment at {1}")]
    ZeroLengthSegment(usize, Point),
    #[error("edge {0} references an unknown vertex")]
    UnknownVertex(usize),
}

fn check(raw: &RawDrawing) -> Result<(), NormalizeError> {
    for (k, (a, b, _)) in raw.edges.iter().enumerate() {
        if !raw.vertices.contains_key(a) || !raw.vertices.contains_key(b) {
            return Err(NormalizeError::UnknownVertex(k));
        }
        let poly = raw.polyline(k);
        if let Some(w) = poly.windows(2).find(|w| w[0] == w[1]) {
            return Err(NormalizeError::ZeroLengthSegment(k, w[0].clone()));
        }
    }
    Ok(())
}

/// Vertex images and bend points.
fn special_points(raw: &RawDrawing) -> Vec<Point> {
    let mut set: BTreeSet<Point> = raw.vertices.values().cloned().collect();
    for (_, _, bends) in &raw.edges {
        set.extend(bends.iter().cloned());
    }
    // Point orders by x first, which the range queries below rely on
    set.into_iter().collect()
}

/// Special points in the relative interior of segment `a`-`b`, ordered from
/// `a` to `b`.
fn interior_points(special: &[Point], a: &Point, b: &Point) -> Vec<Point> {
    let (lo, hi) = if a.x <= b.x {
        (&a.x, &b.x)
    } else {
        (&b.x, &a.x)
    };
    let start = special.partition_point(|p| p.x < *lo);
    let mut hits: Vec<Point> = special[start..]
        .iter()
        .take_while(|p| p.x <= *hi)
        .filter(|p| *p != a && *p != b && on_segment(a, b, p))
        .cloned()
        .collect();
    // lexicographic order is monotone along the segment
    hits.sort();
    if b < a {
        hits.reverse();
    }
    hits
}

/// Builds the instance whose host is the arrangement of the drawing with
/// transversal crossings left as pipe crossings.
pub fn normalize(raw: &RawDrawing) -> Result<Instance, NormalizeError> {
    check(raw)?;
    let special = special_points(raw);
    // every raw edge becomes a chain of points, consecutive ones forming
    // atomic pieces
    let chains: Vec<Vec<Point>> = (0..raw.edges.len())
        .map(|k| {
            let poly = raw.polyline(k);
            let mut chain = vec![poly[0].clone()];
            for w in poly.windows(2) {
                chain.extend(interior_points(&special, &w[0], &w[1]));
                chain.push(w[1].clone());
            }
            chain
        })
        .collect();
    let mut used: BTreeSet<Point> = raw.vertices.values().cloned().collect();
    for c in &chains {
        used.extend(c.iter().cloned());
    }
    let cluster_of: BTreeMap<Point, ClusterId> = used
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), ClusterId(i as u32)))
        .collect();
    let mut pieces: BTreeSet<(ClusterId, ClusterId)> = BTreeSet::new();
    for c in &chains {
        for w in c.windows(2) {
            pieces.insert(canonical_pair(cluster_of[&w[0]], cluster_of[&w[1]]));
        }
    }
    let pipe_of: BTreeMap<(ClusterId, ClusterId), PipeId> = pieces
        .iter()
        .enumerate()
        .map(|(i, &k)| (k, PipeId(i as u32)))
        .collect();

    let mut inst = Instance::default();
    for (p, &c) in &cluster_of {
        inst.host.clusters.insert(c, p.clone());
    }
    for (&(u, v), &p) in &pipe_of {
        inst.host.pipes.insert(p, Pipe::straight(u, v));
    }
    for (&v, p) in &raw.vertices {
        inst.guest.vertices.insert(v);
        inst.map.vertex_map.insert(v, cluster_of[p]);
    }
    let mut next_vertex = raw.vertices.keys().next_back().map_or(0, |v| v.0 + 1);
    let mut next_edge = 0u32;
    for (k, chain) in chains.iter().enumerate() {
        let (a, b, _) = &raw.edges[k];
        let mut prev = *a;
        for (i, w) in chain.windows(2).enumerate() {
            let to = if i + 2 == chain.len() {
                *b
            } else {
                let v = VertexId(next_vertex);
                next_vertex += 1;
                inst.guest.vertices.insert(v);
                inst.map.vertex_map.insert(v, cluster_of[&w[1]]);
                v
            };
            let e = EdgeId(next_edge);
            next_edge += 1;
            inst.guest.edges.insert(e, (prev, to));
            let key = canonical_pair(cluster_of[&w[0]], cluster_of[&w[1]]);
            inst.map.edge_map.insert(e, pipe_of[&key]);
            prev = to;
        }
    }
    Ok(inst)
}

/// Vertices drawn in the relative interior of a nonincident edge, as
/// `(vertex, raw edge index)`.
pub fn detect_forks_raw(raw: &RawDrawing) -> Vec<(VertexId, usize)> {
    let mut out = Vec::new();
    for (k, (a, b, _)) in raw.edges.iter().enumerate() {
        let poly = raw.polyline(k);
        for (&v, p) in &raw.vertices {
            if v == *a || v == *b {
                continue;
            }
            let interior = poly.windows(2).enumerate().any(|(i, w)| {
                on_segment(&w[0], &w[1], p)
                    && !(i == 0 && *p == w[0])
                    && !(i + 2 == poly.len() && *p == w[1])
            });
            let at_end = *p == poly[0] || *p == poly[poly.len() - 1];
            if interior && !at_end {
                out.push((v, k));
            }
        }
    }
    out
}

/// Forks of a simplicial instance; empty for every admissible instance.
pub fn detect_forks(inst: &Instance) -> Vec<(VertexId, PipeId)> {
    crate::model::forks_in_instance(inst)
}

pub fn detect_spurs(inst: &Instance) -> Vec<VertexId> {
    crate::model::spurs(&inst.guest, &inst.map)
}

/// Number of vertices of the arrangement of the drawing: vertex images,
/// bend points and transversal crossing points.
pub fn image_complexity(raw: &RawDrawing) -> usize {
    let mut pts: BTreeSet<Point> = special_points(raw).into_iter().collect();
    let mut segs = Vec::new();
    for k in 0..raw.edges.len() {
        let poly = raw.polyline(k);
        for w in poly.windows(2) {
            segs.push((w[0].clone(), w[1].clone()));
        }
    }
    for i in 0..segs.len() {
        for j in i + 1..segs.len() {
            if let SegmentRelation::ProperCrossing(p) =
                segment_relation(&segs[i].0, &segs[i].1, &segs[j].0, &segs[j].1)
            {
                pts.insert(p);
            }
        }
    }
    pts.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;
    use crate::text::parse_raw;

    fn raw(text: &str) -> RawDrawing {
        parse_raw(text).unwrap()
    }

    #[test]
    fn bent_path_becomes_four_pipes() {
        let r = raw("vertex 0 0 0\nvertex 1 4 0\nedge 0 1 : 1 1 2 0 3 1\n");
        let inst = normalize(&r).unwrap();
        assert_eq!(inst.host.pipes.len(), 4);
        assert_eq!(inst.host.clusters.len(), 5);
        assert_eq!(inst.guest.edges.len(), 4);
        let w = inst.map.weights();
        assert!(w.values().all(|&x| x == 1));
        assert!(validate(&inst).is_clean());
    }

    #[test]
    fn shared_segment_is_one_pipe() {
        let r = raw("vertex 0 0 0\nvertex 1 1 0\nvertex 2 0 0\nvertex 3 1 0\nedge 0 1\nedge 2 3\n");
        let inst = normalize(&r).unwrap();
        assert_eq!(inst.host.pipes.len(), 1);
        assert_eq!(inst.map.weights()[&PipeId(0)], 2);
    }

    #[test]
    fn vertex_inside_segment_splits_it() {
        let r = raw("vertex 0 0 0\nvertex 1 2 0\nvertex 2 1 0\nvertex 3 1 3\nedge 0 1\nedge 2 3\n");
        assert_eq!(detect_forks_raw(&r), vec![(VertexId(2), 0)]);
        let inst = normalize(&r).unwrap();
        let pts: Vec<Point> = inst.host.clusters.values().cloned().collect();
        assert_eq!(
            pts,
            vec![
                Point::int(0, 0),
                Point::int(1, 0),
                Point::int(1, 3),
                Point::int(2, 0)
            ]
        );
        // the fork vertex sits on the new cluster at (1,0)
        assert_eq!(
            inst.host.clusters[&inst.map.vertex_map[&VertexId(2)]],
            Point::int(1, 0)
        );
        assert_eq!(inst.host.pipes.len(), 3);
        // edge 0-1 got subdivided into two guest edges
        assert_eq!(inst.guest.edges.len(), 3);
        assert!(detect_forks(&inst).is_empty());
        assert!(validate(&inst).is_clean());
    }

    #[test]
    fn forks_add_clusters_along_one_edge() {
        let f = 3;
        let mut text = String::from("vertex 0 0 0\nvertex 1 10 0\nedge 0 1\n");
        for i in 0..f {
            let (a, b, x) = (2 + 2 * i, 3 + 2 * i, 2 + 2 * i);
            text.push_str(&format!(
                "vertex {a} {x} 0\nvertex {b} {x} 5\nedge {a} {b}\n"
            ));
        }
        let r = raw(&text);
        assert_eq!(detect_forks_raw(&r).len(), f);
        let inst = normalize(&r).unwrap();
        let on_axis = inst
            .host
            .clusters
            .values()
            .filter(|p| p.y.is_zero())
            .count();
        assert_eq!(on_axis, 2 + f);
        // raw edge 0 is numbered first and is cut into f + 1 guest edges
        let first: Vec<_> = (0..=f as u32)
            .map(|e| inst.map.edge_map[&EdgeId(e)])
            .collect();
        assert_eq!(first.iter().collect::<BTreeSet<_>>().len(), f + 1);
    }

    #[test]
    fn crossings_stay_crossings() {
        let r = raw("vertex 0 0 0\nvertex 1 2 2\nvertex 2 0 2\nvertex 3 2 0\nedge 0 1\nedge 2 3\n");
        let inst = normalize(&r).unwrap();
        assert_eq!(inst.host.clusters.len(), 4);
        assert_eq!(inst.host.pipes.len(), 2);
        let l = crate::geometry::crossing_ledger(&inst).unwrap();
        assert_eq!(l.cr2, 1);
        assert_eq!(image_complexity(&r), 5);
    }

    #[test]
    fn zero_length_segment_is_rejected() {
        let r = raw("vertex 0 0 0\nvertex 1 1 0\nedge 0 1 : 0 0\n");
        assert!(matches!(
            normalize(&r),
            Err(NormalizeError::ZeroLengthSegment(0, _))
        ));
    }

    #[test]
    fn traced_back_path_has_a_spur() {
        let r = raw("vertex 0 0 0\nvertex 1 2 0\nvertex 2 1 0\nedge 0 1\nedge 1 2\n");
        let inst = normalize(&r).unwrap();
        assert_eq!(detect_spurs(&inst), vec![VertexId(1)]);
        assert!(validate(&inst).is_admissible());
    }
}
