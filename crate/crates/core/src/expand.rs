//! Cluster and pipe expansions on a combinatorial instance, and the safety
//! flags that decide when a pipe may be expanded.
//!
//! Expansions never produce coordinates. A new boundary cycle `b₀,…,b_{t−1}`
//! around the expanded disk is only a cyclic sequence; rotations of its
//! clusters and crossings between its chords follow from that sequence.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::evaluate::interleaving_pairs;
use crate::model::*;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ExpandError {
    #[error("cluster {0} does not exist")]
    UnknownCluster(ClusterId),
    #[error("pipe {0} does not exist")]
    UnknownPipe(PipeId),
    #[error("pipe {0} is not safe")]
    NotSafe(PipeId),
    #[error("guest vertex {0} is a spur")]
    Spur(VertexId),
    #[error("guest vertex {0} has no incident edge")]
    IsolatedVertex(VertexId),
    #[error("guest vertex {0} has degree above 2")]
    DegreeTooHigh(VertexId),
    #[error("guest vertex {0} ends a path at an end of the expanded pipe")]
    PathEnd(VertexId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpKind {
    ClusterExpansion,
    PipeExpansion,
}

/// What an expansion changed, in the ids of the resulting instance.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExpansionReport {
    /// The boundary cycle in counterclockwise order.
    pub boundary: Vec<ClusterId>,
    /// Outer stub pipe of each boundary cluster (parallel to `boundary`).
    pub stubs: Vec<PipeId>,
    pub chords: Vec<PipeId>,
    pub removed_clusters: Vec<ClusterId>,
    pub removed_pipes: Vec<PipeId>,
    /// Crossing pairs added between chords.
    pub new_crossings: usize,
    /// Guest edges that changed pipe or had an endpoint moved.
    pub charged: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExpandOptions {
    /// Keep the heaviest outer group in place during pipe expansion and only
    /// relabel the lighter ones.
    pub heavy_split: bool,
    pub conventions: Conventions,
}

/// Result of splitting a preimage into groups of the given sizes when the
/// largest group keeps its place.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Partition {
    /// Index of the group that stays (the first largest one).
    pub keep: usize,
    /// Elements that have to move.
    pub charged: u64,
}

pub fn weights_partition(sizes: &[u64]) -> Partition {
    let mut keep = 0;
    for (i, &s) in sizes.iter().enumerate() {
        if s > sizes[keep] {
            keep = i;
        }
    }
    let total: u64 = sizes.iter().sum();
    Partition {
        keep,
        charged: total - sizes.get(keep).copied().unwrap_or(0),
    }
}

const NONE: u32 = u32::MAX;

/// Mutable dense-index working copy used by the expansions and the solver.
#[derive(Clone, Debug)]
pub(crate) struct Work {
    pub c_id: Vec<ClusterId>,
    pub c_alive: Vec<bool>,
    pub c_rot: Vec<Vec<u32>>,
    pub c_verts: Vec<Vec<u32>>,
    pub p_id: Vec<PipeId>,
    pub p_alive: Vec<bool>,
    pub p_ends: Vec<[u32; 2]>,
    pub p_edges: Vec<Vec<u32>>,
    pub p_cross: Vec<BTreeMap<u32, u64>>,
    pub v_id: Vec<VertexId>,
    pub v_cluster: Vec<u32>,
    pub v_edges: Vec<[u32; 2]>,
    v_pos: Vec<u32>,
    pub e_id: Vec<EdgeId>,
    pub e_alive: Vec<bool>,
    pub e_ends: Vec<[u32; 2]>,
    pub e_pipe: Vec<u32>,
    e_pos: Vec<u32>,
    pub cr2: u64,
    pub live_clusters: usize,
    pub live_pipes: usize,
    pub live_edges: usize,
    next_cluster: u32,
    next_pipe: u32,
    next_vertex: u32,
    next_edge: u32,
    pub conv: Conventions,
}

impl Work {
    pub fn from_embedded(emb: &Embedded, conv: Conventions) -> Work {
        let c_id: Vec<ClusterId> = emb.host.clusters.iter().copied().collect();
        let c_ix: HashMap<ClusterId, u32> = c_id
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i as u32))
            .collect();
        let p_id: Vec<PipeId> = emb.host.pipes.keys().copied().collect();
        let p_ix: HashMap<PipeId, u32> = p_id
            .iter()
            .enumerate()
            .map(|(i, &p)| (p, i as u32))
            .collect();
        let v_id: Vec<VertexId> = emb.guest.vertices.iter().copied().collect();
        let v_ix: HashMap<VertexId, u32> = v_id
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i as u32))
            .collect();
        let e_id: Vec<EdgeId> = emb.guest.edges.keys().copied().collect();

        let mut w = Work {
            c_alive: vec![true; c_id.len()],
            c_rot: c_id
                .iter()
                .map(|c| {
                    emb.rotations
                        .at
                        .get(c)
                        .map_or(Vec::new(), |r| r.iter().map(|p| p_ix[p]).collect())
                })
                .collect(),
            c_verts: vec![Vec::new(); c_id.len()],
            p_alive: vec![true; p_id.len()],
            p_ends: p_id
                .iter()
                .map(|p| {
                    let (a, b) = emb.host.pipes[p];
                    [c_ix[&a], c_ix[&b]]
                })
                .collect(),
            p_edges: vec![Vec::new(); p_id.len()],
            p_cross: vec![BTreeMap::new(); p_id.len()],
            v_cluster: vec![NONE; v_id.len()],
            v_edges: vec![[NONE, NONE]; v_id.len()],
            v_pos: vec![NONE; v_id.len()],
            e_alive: vec![true; e_id.len()],
            e_ends: emb
                .guest
                .edges
                .values()
                .map(|(a, b)| [v_ix[a], v_ix[b]])
                .collect(),
            e_pipe: vec![NONE; e_id.len()],
            e_pos: vec![NONE; e_id.len()],
            cr2: emb.ledger.cr2,
            live_clusters: c_id.len(),
            live_pipes: p_id.len(),
            live_edges: e_id.len(),
            next_cluster: c_id.last().map_or(0, |c| c.0 + 1),
            next_pipe: p_id.last().map_or(0, |p| p.0 + 1),
            next_vertex: v_id.last().map_or(0, |v| v.0 + 1),
            next_edge: e_id.last().map_or(0, |e| e.0 + 1),
            conv,
            c_id,
            p_id,
            v_id,
            e_id,
        };
        for (v, c) in &emb.map.vertex_map {
            let vi = v_ix[v];
            let ci = c_ix[c];
            w.v_cluster[vi as usize] = ci;
            w.v_pos[vi as usize] = w.c_verts[ci as usize].len() as u32;
            w.c_verts[ci as usize].push(vi);
        }
        for ei in 0..w.e_id.len() {
            for end in w.e_ends[ei] {
                let slots = &mut w.v_edges[end as usize];
                if slots[0] == NONE {
                    slots[0] = ei as u32;
                } else {
                    slots[1] = ei as u32;
                }
            }
            let pi = p_ix[&emb.map.edge_map[&w.e_id[ei]]];
            w.e_pipe[ei] = pi;
            w.e_pos[ei] = w.p_edges[pi as usize].len() as u32;
            w.p_edges[pi as usize].push(ei as u32);
        }
        for (&(a, b), &m) in &emb.ledger.crossing_pairs {
            let (a, b) = (p_ix[&a], p_ix[&b]);
            w.p_cross[a as usize].insert(b, m);
            w.p_cross[b as usize].insert(a, m);
        }
        w
    }

    pub fn to_embedded(&self) -> Embedded {
        let mut guest = GuestGraph::default();
        let mut map = SimplicialMap::default();
        for (vi, &v) in self.v_id.iter().enumerate() {
            if self.v_cluster[vi] != NONE {
                guest.vertices.insert(v);
                map.vertex_map
                    .insert(v, self.c_id[self.v_cluster[vi] as usize]);
            }
        }
        for (ei, &e) in self.e_id.iter().enumerate() {
            if self.e_alive[ei] {
                let [a, b] = self.e_ends[ei];
                guest
                    .edges
                    .insert(e, (self.v_id[a as usize], self.v_id[b as usize]));
                map.edge_map.insert(e, self.p_id[self.e_pipe[ei] as usize]);
            }
        }
        let mut host = Skeleton::default();
        let mut rotations = RotationSystem::default();
        for (ci, &c) in self.c_id.iter().enumerate() {
            if self.c_alive[ci] {
                host.clusters.insert(c);
                rotations.at.insert(
                    c,
                    self.c_rot[ci]
                        .iter()
                        .map(|&p| self.p_id[p as usize])
                        .collect(),
                );
            }
        }
        let mut weights = BTreeMap::new();
        let mut pairs = BTreeMap::new();
        for (pi, &p) in self.p_id.iter().enumerate() {
            if !self.p_alive[pi] {
                continue;
            }
            let [a, b] = self.p_ends[pi];
            host.pipes.insert(
                p,
                canonical_pair(self.c_id[a as usize], self.c_id[b as usize]),
            );
            weights.insert(p, self.p_edges[pi].len() as u64);
            for (&q, &m) in &self.p_cross[pi] {
                let q = self.p_id[q as usize];
                if p < q {
                    pairs.insert((p, q), m);
                }
            }
        }
        let ledger = CrossingLedger::new(weights, pairs);
        debug_assert_eq!(ledger.cr2, self.cr2);
        Embedded {
            guest,
            host,
            map,
            rotations,
            ledger,
        }
    }

    pub fn weight(&self, p: u32) -> usize {
        self.p_edges[p as usize].len()
    }

    pub fn preimage_size(&self, c: u32) -> usize {
        self.c_verts[c as usize].len()
    }

    pub fn degree(&self, c: u32) -> usize {
        self.c_rot[c as usize].len()
    }

    /// `base(c, p)` for a spur-free guest of maximum degree 2, where every
    /// edge of `p` has exactly one endpoint at `c` and no vertex has two.
    pub fn is_base(&self, c: u32, p: u32) -> bool {
        self.weight(p) == self.preimage_size(c)
    }

    pub fn is_safe(&self, p: u32) -> bool {
        let [a, b] = self.p_ends[p as usize];
        self.is_base(a, p) && self.is_base(b, p)
    }

    pub fn expandable(&self, p: u32) -> bool {
        if !self.p_alive[p as usize] || !self.is_safe(p) {
            return false;
        }
        let [a, b] = self.p_ends[p as usize];
        self.degree(a) >= 3 || self.degree(b) >= 3
    }

    fn add_cluster(&mut self) -> u32 {
        let i = self.c_id.len() as u32;
        self.c_id.push(ClusterId(self.next_cluster));
        self.next_cluster += 1;
        self.c_alive.push(true);
        self.c_rot.push(Vec::new());
        self.c_verts.push(Vec::new());
        self.live_clusters += 1;
        i
    }

    fn kill_cluster(&mut self, c: u32) {
        debug_assert!(self.c_verts[c as usize].is_empty());
        self.c_alive[c as usize] = false;
        self.c_rot[c as usize].clear();
        self.live_clusters -= 1;
    }

    fn add_pipe(&mut self, a: u32, b: u32) -> u32 {
        let i = self.p_id.len() as u32;
        self.p_id.push(PipeId(self.next_pipe));
        self.next_pipe += 1;
        self.p_alive.push(true);
        self.p_ends.push([a, b]);
        self.p_edges.push(Vec::new());
        self.p_cross.push(BTreeMap::new());
        self.live_pipes += 1;
        i
    }

    /// Removes a pipe with empty preimage together with its crossings.
    fn kill_pipe(&mut self, p: u32) {
        debug_assert!(self.p_edges[p as usize].is_empty());
        let partners: Vec<u32> = self.p_cross[p as usize].keys().copied().collect();
        for q in partners {
            self.p_cross[q as usize].remove(&p);
        }
        self.p_cross[p as usize].clear();
        self.p_alive[p as usize] = false;
        self.live_pipes -= 1;
    }

    fn add_vertex(&mut self, c: u32) -> u32 {
        let i = self.v_id.len() as u32;
        self.v_id.push(VertexId(self.next_vertex));
        self.next_vertex += 1;
        self.v_cluster.push(c);
        self.v_edges.push([NONE, NONE]);
        self.v_pos.push(self.c_verts[c as usize].len() as u32);
        self.c_verts[c as usize].push(i);
        i
    }

    fn move_vertex(&mut self, v: u32, to: u32) {
        let from = self.v_cluster[v as usize];
        if from == to {
            return;
        }
        let pos = self.v_pos[v as usize] as usize;
        let list = &mut self.c_verts[from as usize];
        list.swap_remove(pos);
        if pos < list.len() {
            let moved = list[pos];
            self.v_pos[moved as usize] = pos as u32;
        }
        self.v_cluster[v as usize] = to;
        self.v_pos[v as usize] = self.c_verts[to as usize].len() as u32;
        self.c_verts[to as usize].push(v);
    }

    fn add_edge(&mut self, a: u32, b: u32, p: u32) -> u32 {
        let i = self.e_id.len() as u32;
        self.e_id.push(EdgeId(self.next_edge));
        self.next_edge += 1;
        self.e_alive.push(true);
        self.e_ends.push([a, b]);
        self.e_pipe.push(p);
        self.e_pos.push(self.p_edges[p as usize].len() as u32);
        self.p_edges[p as usize].push(i);
        for v in [a, b] {
            let slots = &mut self.v_edges[v as usize];
            if slots[0] == NONE {
                slots[0] = i;
            } else {
                debug_assert_eq!(slots[1], NONE);
                slots[1] = i;
            }
        }
        self.live_edges += 1;
        i
    }

    fn set_edge_pipe(&mut self, e: u32, to: u32) {
        let from = self.e_pipe[e as usize];
        if from == to {
            return;
        }
        let pos = self.e_pos[e as usize] as usize;
        let list = &mut self.p_edges[from as usize];
        list.swap_remove(pos);
        if pos < list.len() {
            let moved = list[pos];
            self.e_pos[moved as usize] = pos as u32;
        }
        self.e_pipe[e as usize] = to;
        self.e_pos[e as usize] = self.p_edges[to as usize].len() as u32;
        self.p_edges[to as usize].push(e);
    }

    fn other_edge(&self, v: u32, e: u32) -> u32 {
        let [a, b] = self.v_edges[v as usize];
        if a == e {
            b
        } else {
            a
        }
    }

    /// Endpoint of edge `e` that lies in cluster `c`.
    fn end_at(&self, e: u32, c: u32) -> u32 {
        let [a, b] = self.e_ends[e as usize];
        if self.v_cluster[a as usize] == c {
            a
        } else {
            debug_assert_eq!(self.v_cluster[b as usize], c);
            b
        }
    }

    fn replace_end(&mut self, p: u32, old: u32, new: u32) {
        let ends = &mut self.p_ends[p as usize];
        if ends[0] == old {
            ends[0] = new;
        } else {
            debug_assert_eq!(ends[1], old);
            ends[1] = new;
        }
    }

    fn degree_error(&self, c: u32) -> Option<ExpandError> {
        for &v in &self.c_verts[c as usize] {
            let [a, b] = self.v_edges[v as usize];
            if a == NONE {
                return Some(ExpandError::IsolatedVertex(self.v_id[v as usize]));
            }
            if b != NONE && self.e_pipe[a as usize] == self.e_pipe[b as usize] {
                return Some(ExpandError::Spur(self.v_id[v as usize]));
            }
        }
        None
    }

    /// Sets the rotations of a boundary cycle and records the crossings of
    /// its chords. `chords` hold boundary positions `(i, j)`, `i < j`.
    fn finish_boundary(
        &mut self,
        ys: &[u32],
        stubs: &[u32],
        chords: &[((usize, usize), u32)],
    ) -> usize {
        let t = ys.len();
        let mut at: Vec<Vec<(usize, u32)>> = vec![Vec::new(); t];
        for &((i, j), p) in chords {
            at[i].push((j, p));
            at[j].push((i, p));
        }
        for (k, list) in at.iter_mut().enumerate() {
            let dist = |j: usize| (j + t - k) % t;
            match self.conv.boundary_rotation {
                BoundaryRotation::Forward => list.sort_by_key(|&(j, _)| dist(j)),
                BoundaryRotation::Reversed => {
                    list.sort_by_key(|&(j, _)| std::cmp::Reverse(dist(j)))
                }
            }
            let mut rot = Vec::with_capacity(list.len() + 1);
            rot.push(stubs[k]);
            rot.extend(list.iter().map(|&(_, p)| p));
            self.c_rot[ys[k] as usize] = rot;
        }
        let spans: Vec<(usize, usize)> = chords.iter().map(|&(s, _)| s).collect();
        let pairs = interleaving_pairs(&spans);
        for &(x, y) in &pairs {
            let (p, q) = (chords[x].1, chords[y].1);
            *self.p_cross[p as usize].entry(q).or_default() += 1;
            *self.p_cross[q as usize].entry(p).or_default() += 1;
            self.cr2 += (self.weight(p) * self.weight(q)) as u64;
        }
        pairs.len()
    }

    /// Drops a boundary stub that carries nothing, and clusters left empty.
    fn prune_boundary(&mut self, stubs: &[u32]) {
        for &p in stubs {
            if !self.p_alive[p as usize] || self.weight(p) > 0 {
                continue;
            }
            let [a, b] = self.p_ends[p as usize];
            self.kill_pipe(p);
            for c in [a, b] {
                self.c_rot[c as usize].retain(|&q| q != p);
                if self.c_alive[c as usize]
                    && self.c_rot[c as usize].is_empty()
                    && self.c_verts[c as usize].is_empty()
                {
                    self.kill_cluster(c);
                }
            }
        }
    }

    pub fn expand_cluster(&mut self, u: u32) -> Result<ExpansionReport, ExpandError> {
        if let Some(err) = self.degree_error(u) {
            return Err(err);
        }
        let rot = self.c_rot[u as usize].clone();
        let t = rot.len();
        let pos: HashMap<u32, usize> = rot.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let ys: Vec<u32> = (0..t).map(|_| self.add_cluster()).collect();
        for (k, &p) in rot.iter().enumerate() {
            self.replace_end(p, u, ys[k]);
        }
        let mut chord_of: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        let verts = self.c_verts[u as usize].clone();
        let mut charged = 0u64;
        for b in verts {
            let [e1, e2] = self.v_edges[b as usize];
            let i = pos[&self.e_pipe[e1 as usize]];
            if e2 == NONE {
                self.move_vertex(b, ys[i]);
                continue;
            }
            let j = pos[&self.e_pipe[e2 as usize]];
            self.move_vertex(b, ys[i]);
            let x = self.add_vertex(ys[j]);
            // e2 now ends at x instead of b
            let ends = &mut self.e_ends[e2 as usize];
            if ends[0] == b {
                ends[0] = x;
            } else {
                ends[1] = x;
            }
            self.v_edges[b as usize] = [e1, NONE];
            self.v_edges[x as usize] = [e2, NONE];
            let key = (i.min(j), i.max(j));
            let chord = match chord_of.get(&key) {
                Some(&c) => c,
                None => {
                    let c = self.add_pipe(ys[key.0], ys[key.1]);
                    chord_of.insert(key, c);
                    c
                }
            };
            self.add_edge(b, x, chord);
            charged += 1;
        }
        self.kill_cluster(u);
        let chords: Vec<((usize, usize), u32)> = chord_of.into_iter().collect();
        let new_crossings = self.finish_boundary(&ys, &rot, &chords);
        let report = ExpansionReport {
            boundary: ys.iter().map(|&y| self.c_id[y as usize]).collect(),
            stubs: rot.iter().map(|&p| self.p_id[p as usize]).collect(),
            chords: chords.iter().map(|&(_, p)| self.p_id[p as usize]).collect(),
            removed_clusters: vec![self.c_id[u as usize]],
            removed_pipes: Vec::new(),
            new_crossings,
            charged,
        };
        self.prune_boundary(&rot);
        Ok(report)
    }

    /// Pipe expansion of a safe pipe in a spur-free instance. Safety is
    /// checked here; spur-freeness is the caller's responsibility.
    pub fn expand_pipe(
        &mut self,
        uv: u32,
        heavy_split: bool,
    ) -> Result<ExpansionReport, ExpandError> {
        if !self.is_safe(uv) {
            return Err(ExpandError::NotSafe(self.p_id[uv as usize]));
        }
        let [u, v] = self.p_ends[uv as usize];
        let after = |rot: &[u32]| -> Vec<u32> {
            let k = rot.iter().position(|&p| p == uv).expect("pipe in rotation");
            rot[k + 1..].iter().chain(&rot[..k]).copied().collect()
        };
        let side_u = after(&self.c_rot[u as usize]);
        let side_v = after(&self.c_rot[v as usize]);
        let a = side_u.len();
        let t = a + side_v.len();
        let outer: Vec<u32> = side_u.iter().chain(&side_v).copied().collect();
        let heaviest = |side: &[u32]| -> usize {
            let sizes: Vec<u64> = side.iter().map(|&p| self.weight(p) as u64).collect();
            weights_partition(&sizes).keep
        };
        let (ku, kv) = (heaviest(&side_u), a + heaviest(&side_v));

        // group of every uv-edge that moves: (u-side position, v-side position)
        let mut moved: Vec<(u32, usize, usize)> = Vec::new();
        if heavy_split {
            let mut index: HashMap<u32, usize> = HashMap::new();
            for (k, &p) in outer.iter().enumerate() {
                if k == ku || k == kv {
                    continue;
                }
                let here = if k < a { u } else { v };
                for &e in &self.p_edges[p as usize] {
                    let b = self.end_at(e, here);
                    let f = self.other_edge(b, e);
                    let slot = *index.entry(f).or_insert_with(|| {
                        moved.push((f, ku, kv));
                        moved.len() - 1
                    });
                    if k < a {
                        moved[slot].1 = k;
                    } else {
                        moved[slot].2 = k;
                    }
                }
            }
        } else {
            let pos: HashMap<u32, usize> = outer.iter().enumerate().map(|(k, &p)| (p, k)).collect();
            for &f in &self.p_edges[uv as usize] {
                let b = self.end_at(f, u);
                let c = self.end_at(f, v);
                let i = pos[&self.e_pipe[self.other_edge(b, f) as usize]];
                let j = pos[&self.e_pipe[self.other_edge(c, f) as usize]];
                moved.push((f, i, j));
            }
        }

        // boundary clusters; the heavy split reuses u and v
        let ys: Vec<u32> = (0..t)
            .map(|k| {
                if heavy_split && k == ku {
                    u
                } else if heavy_split && k == kv {
                    v
                } else {
                    self.add_cluster()
                }
            })
            .collect();
        for (k, &p) in outer.iter().enumerate() {
            let old = if k < a { u } else { v };
            if ys[k] != old {
                self.replace_end(p, old, ys[k]);
            }
        }
        let mut chord_of: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        if heavy_split {
            chord_of.insert((ku, kv), uv);
        }
        let mut charged = 0u64;
        for &(f, i, j) in &moved {
            let chord = match chord_of.get(&(i, j)) {
                Some(&c) => c,
                None => {
                    let c = self.add_pipe(ys[i], ys[j]);
                    chord_of.insert((i, j), c);
                    c
                }
            };
            let b = self.end_at(f, u);
            let c = self.end_at(f, v);
            self.set_edge_pipe(f, chord);
            self.move_vertex(b, ys[i]);
            self.move_vertex(c, ys[j]);
            charged += 1;
        }
        // crossings of uv carry over to every chord
        let inherited: Vec<(u32, u64)> = self.p_cross[uv as usize]
            .iter()
            .map(|(&q, &m)| (q, m))
            .collect();
        for &chord in chord_of.values() {
            if chord == uv {
                continue;
            }
            for &(q, m) in &inherited {
                self.p_cross[chord as usize].insert(q, m);
                self.p_cross[q as usize].insert(chord, m);
            }
        }
        let mut removed_pipes = Vec::new();
        let mut removed_clusters = Vec::new();
        if self.weight(uv) == 0 {
            chord_of.retain(|_, c| *c != uv);
            removed_pipes.push(self.p_id[uv as usize]);
            self.kill_pipe(uv);
        }
        for c in [u, v] {
            if !ys.contains(&c) {
                removed_clusters.push(self.c_id[c as usize]);
                self.kill_cluster(c);
            }
        }
        let chords: Vec<((usize, usize), u32)> = chord_of.into_iter().collect();
        let new_crossings = self.finish_boundary(&ys, &outer, &chords);
        Ok(ExpansionReport {
            boundary: ys.iter().map(|&y| self.c_id[y as usize]).collect(),
            stubs: outer.iter().map(|&p| self.p_id[p as usize]).collect(),
            chords: chords.iter().map(|&(_, p)| self.p_id[p as usize]).collect(),
            removed_clusters,
            removed_pipes,
            new_crossings,
            charged,
        })
    }

    pub fn cluster_index(&self, c: ClusterId) -> Option<u32> {
        let i = self.c_id.binary_search(&c).ok()?;
        self.c_alive[i].then_some(i as u32)
    }

    pub fn pipe_index(&self, p: PipeId) -> Option<u32> {
        let i = self.p_id.binary_search(&p).ok()?;
        self.p_alive[i].then_some(i as u32)
    }

    pub fn potential(&self) -> i64 {
        self.live_edges as i64 - self.live_pipes as i64
    }
}

fn check_degrees(emb: &Embedded) -> Result<(), ExpandError> {
    for (v, es) in emb.guest.incidence() {
        if es.len() > 2 {
            return Err(ExpandError::DegreeTooHigh(v));
        }
    }
    Ok(())
}

pub fn cluster_expansion_with(
    emb: &Embedded,
    u: ClusterId,
    conv: Conventions,
) -> Result<(Embedded, ExpansionReport), ExpandError> {
    check_degrees(emb)?;
    let mut work = Work::from_embedded(emb, conv);
    let ui = work
        .cluster_index(u)
        .ok_or(ExpandError::UnknownCluster(u))?;
    let report = work.expand_cluster(ui)?;
    Ok((work.to_embedded(), report))
}

/// Replaces cluster `u` by a boundary cycle with one cluster per incident
/// pipe and one chord pipe per pair of pipes joined by a guest vertex.
pub fn cluster_expansion(
    emb: &Embedded,
    u: ClusterId,
) -> Result<(Embedded, ExpansionReport), ExpandError> {
    cluster_expansion_with(emb, u, Conventions::default())
}

pub fn pipe_expansion_with(
    emb: &Embedded,
    p: PipeId,
    opts: ExpandOptions,
) -> Result<(Embedded, ExpansionReport), ExpandError> {
    check_degrees(emb)?;
    if let Some(v) = spurs(&emb.guest, &emb.map).first() {
        return Err(ExpandError::Spur(*v));
    }
    let &(a, b) = emb.host.pipes.get(&p).ok_or(ExpandError::UnknownPipe(p))?;
    let inc = emb.guest.incidence();
    for (v, c) in &emb.map.vertex_map {
        if (*c == a || *c == b) && inc.get(v).map_or(0, Vec::len) < 2 {
            return Err(ExpandError::PathEnd(*v));
        }
    }
    let mut work = Work::from_embedded(emb, opts.conventions);
    let pi = work.pipe_index(p).ok_or(ExpandError::UnknownPipe(p))?;
    let report = work.expand_pipe(pi, opts.heavy_split)?;
    Ok((work.to_embedded(), report))
}

/// Replaces a safe pipe `uv` and its end clusters by a boundary cycle with
/// the remaining pipes of `u` and `v` as stubs and the guest edges of `uv`
/// as chords.
pub fn pipe_expansion(
    emb: &Embedded,
    p: PipeId,
) -> Result<(Embedded, ExpansionReport), ExpandError> {
    pipe_expansion_with(emb, p, ExpandOptions::default())
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SafetyFlags {
    pub base: BTreeMap<(ClusterId, PipeId), bool>,
    pub safe: BTreeMap<PipeId, bool>,
}

fn base_flag(
    emb: &Embedded,
    c: ClusterId,
    p: PipeId,
    cluster_pre: &BTreeMap<ClusterId, Vec<VertexId>>,
    inc: &BTreeMap<VertexId, Vec<EdgeId>>,
) -> bool {
    cluster_pre.get(&c).is_none_or(|vs| {
        vs.iter()
            .all(|v| inc[v].iter().any(|e| emb.map.edge_map.get(e) == Some(&p)))
    })
}

/// Base and safe flags straight from their definitions.
pub fn recompute_safety(emb: &Embedded) -> SafetyFlags {
    let cluster_pre = emb.map.cluster_preimages();
    let inc = emb.guest.incidence();
    let mut flags = SafetyFlags::default();
    for (&p, &(a, b)) in &emb.host.pipes {
        let fa = base_flag(emb, a, p, &cluster_pre, &inc);
        let fb = base_flag(emb, b, p, &cluster_pre, &inc);
        flags.base.insert((a, p), fa);
        flags.base.insert((b, p), fb);
        flags.safe.insert(p, fa && fb);
    }
    flags
}

/// Flags after an expansion, recomputing only around the boundary cycle and
/// dropping entries of removed clusters and pipes.
pub fn update_safety(
    after: &Embedded,
    before: &SafetyFlags,
    report: &ExpansionReport,
) -> SafetyFlags {
    let mut flags = before.clone();
    let gone_c: BTreeSet<ClusterId> = report.removed_clusters.iter().copied().collect();
    let gone_p: BTreeSet<PipeId> = report.removed_pipes.iter().copied().collect();
    let touched: BTreeSet<ClusterId> = report.boundary.iter().copied().collect();
    let mut touched_pipes: BTreeSet<PipeId> = BTreeSet::new();
    flags.base.retain(|(c, p), _| {
        !gone_c.contains(c)
            && !gone_p.contains(p)
            && !touched.contains(c)
            && after.host.pipes.contains_key(p)
    });
    flags
        .safe
        .retain(|p, _| !gone_p.contains(p) && after.host.pipes.contains_key(p));
    let cluster_pre = after.map.cluster_preimages();
    let inc = after.guest.incidence();
    for &c in &touched {
        if let Some(rot) = after.rotations.at.get(&c) {
            for &p in rot {
                flags
                    .base
                    .insert((c, p), base_flag(after, c, p, &cluster_pre, &inc));
                touched_pipes.insert(p);
            }
        }
    }
    for p in touched_pipes {
        let (a, b) = after.host.pipes[&p];
        for c in [a, b] {
            flags
                .base
                .entry((c, p))
                .or_insert_with(|| base_flag(after, c, p, &cluster_pre, &inc));
        }
        flags
            .safe
            .insert(p, flags.base[&(a, p)] && flags.base[&(b, p)]);
    }
    flags
}

/// A safe pipe with an endpoint of degree at least 3, smallest id first.
pub fn find_safe_expandable_pipe(emb: &Embedded, flags: &SafetyFlags) -> Option<PipeId> {
    let inc = emb.host.incident();
    emb.host.pipes.iter().find_map(|(&p, &(a, b))| {
        let expandable = inc[&a].len() >= 3 || inc[&b].len() >= 3;
        (flags.safe.get(&p) == Some(&true) && expandable).then_some(p)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::model::validate_embedded;
    use crate::oracle::oracle_embedded;

    fn tri6() -> Embedded {
        Embedded::from_instance(&corpus::tri6()).unwrap()
    }

    #[test]
    fn partition_charges() {
        assert_eq!(weights_partition(&[3, 1]).charged, 1);
        assert_eq!(weights_partition(&[1, 1]).charged, 1);
        assert_eq!(weights_partition(&[4]).charged, 0);
        assert_eq!(weights_partition(&[1, 5, 5]).keep, 1);
    }

    #[test]
    fn tri6_cluster_expansion() {
        let emb = tri6();
        let a = *emb.host.clusters.iter().next().unwrap();
        assert_eq!(emb.map.cluster_preimages()[&a].len(), 2);
        let (after, report) = cluster_expansion(&emb, a).unwrap();
        assert_eq!(after.guest.shape(), Shape::Cycle);
        assert_eq!(after.guest.edges.len(), 8);
        assert_eq!(report.boundary.len(), 2);
        assert_eq!(report.chords.len(), 1);
        assert_eq!(after.ledger.weight(report.chords[0]), 2);
        assert_eq!(report.new_crossings, 0);
        assert!(spurs(&after.guest, &after.map).is_empty());
        assert!(
            validate_embedded(&after).is_clean(),
            "{}",
            validate_embedded(&after)
        );
        assert_eq!(oracle_embedded(&emb, 1_000_000).unwrap().0, 1);
        assert_eq!(oracle_embedded(&after, 1_000_000).unwrap().0, 1);
    }

    #[test]
    fn empty_cluster_is_pruned_away() {
        // square host with the guest using only three of its clusters
        let inst = corpus::with_idle_cluster();
        let emb = Embedded::from_instance(&inst).unwrap();
        let idle = *emb
            .host
            .clusters
            .iter()
            .find(|c| !emb.map.cluster_preimages().contains_key(c))
            .unwrap();
        let (after, report) = cluster_expansion(&emb, idle).unwrap();
        assert_eq!(report.boundary.len(), 2);
        assert!(report.chords.is_empty());
        let after = after.pruned();
        for c in &report.boundary {
            assert!(!after.host.clusters.contains(c));
        }
        assert!(validate_embedded(&after).is_admissible());
    }

    #[test]
    fn crossing_chords_at_degree_four_cluster() {
        let emb = Embedded::from_instance(&corpus::plus_cluster()).unwrap();
        let center = corpus::PLUS_CENTER;
        let before = oracle_embedded(&emb, 1_000_000).unwrap().0;
        let (after, report) = cluster_expansion(&emb, center).unwrap();
        assert_eq!(report.new_crossings, 1);
        assert_eq!(after.ledger.cr2, emb.ledger.cr2 + 1);
        assert_eq!(oracle_embedded(&after, 1_000_000).unwrap().0, before);
        assert_eq!(before, 1);
    }

    fn fully_cluster_expanded(emb: &Embedded) -> Embedded {
        let mut cur = emb.clone();
        for c in emb.host.clusters.iter().copied() {
            cur = cluster_expansion(&cur, c).unwrap().0;
        }
        cur
    }

    #[test]
    fn tri6_pipe_expansions_preserve_value() {
        let emb = fully_cluster_expanded(&tri6());
        let flags = recompute_safety(&emb);
        // the expanded TRI6 is already a cycle host
        assert_eq!(find_safe_expandable_pipe(&emb, &flags), None);
        assert_eq!(oracle_embedded(&emb, 1_000_000).unwrap().0, 1);
    }

    #[test]
    fn pipe_expansion_parallel_and_crossing_chords() {
        for (inst, crossings) in [
            (corpus::weight2_parallel(), 0),
            (corpus::weight2_crossing(), 1),
        ] {
            let emb = Embedded::from_instance(&inst).unwrap();
            let target = corpus::MIDDLE_PIPE;
            let before = oracle_embedded(&emb, 1_000_000).unwrap().0;
            for heavy_split in [false, true] {
                let opts = ExpandOptions {
                    heavy_split,
                    ..Default::default()
                };
                let (after, report) = pipe_expansion_with(&emb, target, opts).unwrap();
                assert_eq!(report.new_crossings, crossings);
                assert_eq!(after.ledger.cr2, emb.ledger.cr2 + crossings as u64);
                assert_eq!(after.guest.edges.len(), emb.guest.edges.len());
                assert_eq!(oracle_embedded(&after, 1_000_000).unwrap().0, before);
                assert!(validate_embedded(&after).is_clean());
                let weights: Vec<u64> = report
                    .chords
                    .iter()
                    .map(|c| after.ledger.weight(*c))
                    .collect();
                if crossings == 0 {
                    assert_eq!(weights, vec![2]);
                } else {
                    assert_eq!(weights, vec![1, 1]);
                }
            }
        }
    }

    #[test]
    fn unsafe_pipe_is_refused() {
        let emb = Embedded::from_instance(&corpus::plus_cluster()).unwrap();
        let flags = recompute_safety(&emb);
        let p = *flags.safe.iter().find(|(_, &s)| !s).unwrap().0;
        assert!(matches!(
            pipe_expansion(&emb, p),
            Err(ExpandError::NotSafe(_))
        ));
    }

    #[test]
    fn safety_examples() {
        // degree-2 clusters are bases of both pipes
        let emb = tri6();
        let flags = recompute_safety(&emb);
        assert!(flags.base.values().all(|&b| b));
        // boundary clusters are bases of their stubs
        let c = *emb.host.clusters.iter().next().unwrap();
        let (after, report) = cluster_expansion(&emb, c).unwrap();
        let flags = recompute_safety(&after);
        for (y, stub) in report.boundary.iter().zip(&report.stubs) {
            assert!(flags.base[&(*y, *stub)]);
        }
        assert_eq!(
            update_safety(&after, &recompute_safety(&emb), &report),
            flags
        );
        // a vertex not touching the pipe
        let plus = Embedded::from_instance(&corpus::plus_cluster()).unwrap();
        let flags = recompute_safety(&plus);
        assert!(flags
            .base
            .iter()
            .any(|((c, _), &b)| *c == corpus::PLUS_CENTER && !b));
    }

    #[test]
    fn spur_is_rejected_by_cluster_expansion() {
        let inst = corpus::spur_path();
        let emb = Embedded::from_instance(&inst).unwrap();
        let v = spurs(&emb.guest, &emb.map)[0];
        let c = emb.map.vertex_map[&v];
        assert_eq!(
            cluster_expansion(&emb, c).unwrap_err(),
            ExpandError::Spur(v)
        );
    }
}
