//! Instance model: the guest graph, the host graph with its drawing, the
//! simplicial map between them, and the combinatorial objects derived from
//! them (rotations, crossing ledger, pipe orders).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry;
use crate::rat::Rat;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(
            Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(
    /// A vertex of the host graph.
    ClusterId
);
id_type!(
    /// An edge of the host graph.
    PipeId
);
id_type!(VertexId);
id_type!(EdgeId);

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Point {
    pub x: Rat,
    pub y: Rat,
}

impl Point {
    pub fn new(x: Rat, y: Rat) -> Point {
        Point { x, y }
    }

    pub fn int(x: i64, y: i64) -> Point {
        Point {
            x: Rat::from_int(x),
            y: Rat::from_int(y),
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Shape of a guest graph, derived from its structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Cycle,
    DisjointPaths,
    General,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GuestGraph {
    pub vertices: BTreeSet<VertexId>,
    pub edges: BTreeMap<EdgeId, (VertexId, VertexId)>,
}

impl GuestGraph {
    /// Incident edges per vertex, in edge-id order.
    pub fn incidence(&self) -> BTreeMap<VertexId, Vec<EdgeId>> {
        let mut inc: BTreeMap<VertexId, Vec<EdgeId>> =
            self.vertices.iter().map(|&v| (v, Vec::new())).collect();
        for (&e, &(a, b)) in &self.edges {
            inc.entry(a).or_default().push(e);
            if b != a {
                inc.entry(b).or_default().push(e);
            }
        }
        inc
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.edges
            .values()
            .filter(|&&(a, b)| a == v || b == v)
            .count()
    }

    pub fn other_end(&self, e: EdgeId, v: VertexId) -> Option<VertexId> {
        let &(a, b) = self.edges.get(&e)?;
        if a == v {
            Some(b)
        } else if b == v {
            Some(a)
        } else {
            None
        }
    }

    /// Connected components as vertex sets, ordered by smallest vertex id.
    pub fn components(&self) -> Vec<Vec<VertexId>> {
        let inc = self.incidence();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &start in &self.vertices {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for e in &inc[&v] {
                    let w = self.other_end(*e, v).unwrap();
                    if seen.insert(w) {
                        comp.push(w);
                        stack.push(w);
                    }
                }
            }
            comp.sort();
            out.push(comp);
        }
        out
    }

    pub fn shape(&self) -> Shape {
        let inc = self.incidence();
        let max_deg = inc.values().map(Vec::len).max().unwrap_or(0);
        if max_deg > 2 || self.edges.values().any(|(a, b)| a == b) {
            return Shape::General;
        }
        let comps = self.components().len();
        if !self.vertices.is_empty()
            && comps == 1
            && inc.values().all(|es| es.len() == 2)
            && self.vertices.len() >= 3
        {
            return Shape::Cycle;
        }
        // A forest has |E| = |V| - #components.
        if self.edges.len() + comps == self.vertices.len() {
            Shape::DisjointPaths
        } else {
            Shape::General
        }
    }

    /// Vertex sequences of every component of a graph with maximum degree 2.
    /// Paths start at their smaller endpoint; cycles start at their smallest
    /// vertex and continue through its smaller incident edge.
    pub fn walks(&self) -> Vec<Walk> {
        let inc = self.incidence();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let trace = |start: VertexId, closed: bool, seen: &mut BTreeSet<VertexId>| {
            let mut verts = vec![start];
            let mut edges = Vec::new();
            seen.insert(start);
            let mut cur = start;
            let mut prev_edge: Option<EdgeId> = None;
            loop {
                let next = inc[&cur].iter().copied().find(|&e| Some(e) != prev_edge);
                let Some(e) = next else { break };
                let w = self.other_end(e, cur).unwrap();
                edges.push(e);
                if w == start && closed {
                    break;
                }
                if !seen.insert(w) {
                    break;
                }
                verts.push(w);
                prev_edge = Some(e);
                cur = w;
            }
            Walk {
                vertices: verts,
                edges,
                closed,
            }
        };
        for (&v, es) in &inc {
            if es.len() <= 1 && !seen.contains(&v) {
                out.push(trace(v, false, &mut seen));
            }
        }
        for &v in inc.keys() {
            if !seen.contains(&v) {
                out.push(trace(v, true, &mut seen));
            }
        }
        out
    }
}

/// One component of a guest graph of maximum degree 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Walk {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeId>,
    pub closed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pipe {
    pub u: ClusterId,
    pub v: ClusterId,
    /// Interior bend points, listed from `u` to `v`.
    pub bends: Vec<Point>,
}

impl Pipe {
    pub fn straight(u: ClusterId, v: ClusterId) -> Pipe {
        Pipe {
            u,
            v,
            bends: Vec::new(),
        }
    }

    pub fn ends(&self) -> (ClusterId, ClusterId) {
        (self.u, self.v)
    }

    /// Endpoints as (canonical tail, canonical head).
    pub fn canonical(&self) -> (ClusterId, ClusterId) {
        canonical_pair(self.u, self.v)
    }
}

pub fn canonical_pair(a: ClusterId, b: ClusterId) -> (ClusterId, ClusterId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Host graph together with its polyline drawing.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HostGraph {
    pub clusters: BTreeMap<ClusterId, Point>,
    pub pipes: BTreeMap<PipeId, Pipe>,
}

impl HostGraph {
    /// Full polyline of a pipe from `u` to `v`, endpoints included.
    pub fn polyline(&self, p: PipeId) -> Vec<Point> {
        let pipe = &self.pipes[&p];
        let mut pts = Vec::with_capacity(pipe.bends.len() + 2);
        pts.push(self.clusters[&pipe.u].clone());
        pts.extend(pipe.bends.iter().cloned());
        pts.push(self.clusters[&pipe.v].clone());
        pts
    }

    pub fn skeleton(&self) -> Skeleton {
        Skeleton {
            clusters: self.clusters.keys().copied().collect(),
            pipes: self
                .pipes
                .iter()
                .map(|(&id, p)| (id, p.canonical()))
                .collect(),
        }
    }
}

/// Host graph without geometry; pipes are stored as canonical endpoint pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Skeleton {
    pub clusters: BTreeSet<ClusterId>,
    pub pipes: BTreeMap<PipeId, (ClusterId, ClusterId)>,
}

impl Skeleton {
    pub fn incident(&self) -> BTreeMap<ClusterId, Vec<PipeId>> {
        let mut inc: BTreeMap<ClusterId, Vec<PipeId>> =
            self.clusters.iter().map(|&c| (c, Vec::new())).collect();
        for (&p, &(a, b)) in &self.pipes {
            inc.entry(a).or_default().push(p);
            if a != b {
                inc.entry(b).or_default().push(p);
            }
        }
        inc
    }

    pub fn degree(&self, c: ClusterId) -> usize {
        self.pipes
            .values()
            .filter(|&&(a, b)| a == c || b == c)
            .count()
    }

    pub fn other_end(&self, p: PipeId, c: ClusterId) -> Option<ClusterId> {
        let &(a, b) = self.pipes.get(&p)?;
        if a == c {
            Some(b)
        } else if b == c {
            Some(a)
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SimplicialMap {
    pub vertex_map: BTreeMap<VertexId, ClusterId>,
    pub edge_map: BTreeMap<EdgeId, PipeId>,
}

impl SimplicialMap {
    /// Preimage of every pipe, in edge-id order.
    pub fn pipe_preimages(&self) -> BTreeMap<PipeId, Vec<EdgeId>> {
        let mut out: BTreeMap<PipeId, Vec<EdgeId>> = BTreeMap::new();
        for (&e, &p) in &self.edge_map {
            out.entry(p).or_default().push(e);
        }
        out
    }

    /// Preimage of every cluster, in vertex-id order.
    pub fn cluster_preimages(&self) -> BTreeMap<ClusterId, Vec<VertexId>> {
        let mut out: BTreeMap<ClusterId, Vec<VertexId>> = BTreeMap::new();
        for (&v, &c) in &self.vertex_map {
            out.entry(c).or_default().push(v);
        }
        out
    }

    pub fn weights(&self) -> BTreeMap<PipeId, u64> {
        let mut out: BTreeMap<PipeId, u64> = BTreeMap::new();
        for &p in self.edge_map.values() {
            *out.entry(p).or_default() += 1;
        }
        out
    }
}

/// The map `φ = γ∘λ` in decomposed form.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Instance {
    pub guest: GuestGraph,
    pub host: HostGraph,
    pub map: SimplicialMap,
}

impl Instance {
    pub fn weight(&self, p: PipeId) -> u64 {
        self.map.edge_map.values().filter(|&&q| q == p).count() as u64
    }

    /// Drops pipes without preimage and clusters that carry neither guest
    /// vertices nor pipes.
    pub fn pruned(&self) -> Instance {
        let weights = self.map.weights();
        let mut out = self.clone();
        out.host
            .pipes
            .retain(|p, _| weights.get(p).copied().unwrap_or(0) > 0);
        let used = self.map.cluster_preimages();
        let mut touched: BTreeSet<ClusterId> = used.keys().copied().collect();
        for pipe in out.host.pipes.values() {
            touched.insert(pipe.u);
            touched.insert(pipe.v);
        }
        out.host.clusters.retain(|c, _| touched.contains(c));
        out
    }
}

/// Cyclic counterclockwise order of pipes around each cluster.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RotationSystem {
    pub at: BTreeMap<ClusterId, Vec<PipeId>>,
}

impl RotationSystem {
    /// True if `a` and `b` describe the same cyclic sequences.
    pub fn cyclically_equal(a: &[PipeId], b: &[PipeId]) -> bool {
        if a.len() != b.len() {
            return false;
        }
        if a.is_empty() {
            return true;
        }
        (0..b.len()).any(|s| (0..a.len()).all(|i| a[i] == b[(s + i) % b.len()]))
    }

    pub fn reversed(&self) -> RotationSystem {
        RotationSystem {
            at: self
                .at
                .iter()
                .map(|(&c, r)| (c, r.iter().rev().copied().collect()))
                .collect(),
        }
    }
}

/// Pipe weights, crossing pairs between pipes and the resulting `cr₂`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CrossingLedger {
    /// `w(uv)`: number of guest edges mapped to each pipe.
    pub weights: BTreeMap<PipeId, u64>,
    /// `W(uv)`: multiplicity-weighted sum of weights of the pipes crossing `uv`.
    pub crossing_weight: BTreeMap<PipeId, u64>,
    /// Unordered crossing pipe pairs (smaller id first) with the number of
    /// transversal intersection points.
    pub crossing_pairs: BTreeMap<(PipeId, PipeId), u64>,
    pub cr2: u64,
}

impl CrossingLedger {
    pub fn new(
        weights: BTreeMap<PipeId, u64>,
        crossing_pairs: BTreeMap<(PipeId, PipeId), u64>,
    ) -> CrossingLedger {
        let mut crossing_weight: BTreeMap<PipeId, u64> = weights.keys().map(|&p| (p, 0)).collect();
        let w = |p: &PipeId| weights.get(p).copied().unwrap_or(0);
        for ((a, b), &m) in &crossing_pairs {
            *crossing_weight.entry(*a).or_default() += m * w(b);
            *crossing_weight.entry(*b).or_default() += m * w(a);
        }
        let mut ledger = CrossingLedger {
            weights,
            crossing_weight,
            crossing_pairs,
            cr2: 0,
        };
        ledger.cr2 = ledger.cr2_from_pairs();
        ledger
    }

    pub fn weight(&self, p: PipeId) -> u64 {
        self.weights.get(&p).copied().unwrap_or(0)
    }

    /// `Σ multiplicity·w(e₁)·w(e₂)` over crossing pairs.
    pub fn cr2_from_pairs(&self) -> u64 {
        self.crossing_pairs
            .iter()
            .map(|((a, b), &m)| m * self.weight(*a) * self.weight(*b))
            .sum()
    }

    /// `½ Σ w(uv)·W(uv)`.
    pub fn cr2_from_crossing_weights(&self) -> u64 {
        let twice: u64 = self
            .weights
            .iter()
            .map(|(p, &w)| w * self.crossing_weight.get(p).copied().unwrap_or(0))
            .sum();
        twice / 2
    }

    /// Multiplicity of the crossing between two pipes.
    pub fn multiplicity(&self, a: PipeId, b: PipeId) -> u64 {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.crossing_pairs.get(&key).copied().unwrap_or(0)
    }
}

/// One total order of the preimage per pipe, read in canonical orientation
/// (from the smaller endpoint id to the larger).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PipeOrderSet {
    pub orders: BTreeMap<PipeId, Vec<EdgeId>>,
}

impl PipeOrderSet {
    /// Every pipe's preimage in edge-id order.
    pub fn identity(map: &SimplicialMap) -> PipeOrderSet {
        PipeOrderSet {
            orders: map.pipe_preimages(),
        }
    }

    pub fn reversed(&self) -> PipeOrderSet {
        PipeOrderSet {
            orders: self
                .orders
                .iter()
                .map(|(&p, o)| (p, o.iter().rev().copied().collect()))
                .collect(),
        }
    }
}

/// Disk-model conventions. The defaults are the correct ones; the other
/// variants exist so tests can check that a wrong convention is detected.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Conventions {
    pub boundary_rotation: BoundaryRotation,
    pub slot: SlotConvention,
}

/// Rotation at a boundary cluster `b_i` of a new boundary cycle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BoundaryRotation {
    /// Outer stub, then chords to `b_{i+1}, b_{i+2}, …, b_{i−1}`.
    #[default]
    Forward,
    /// Outer stub, then chords to `b_{i−1}, b_{i−2}, …, b_{i+1}`.
    Reversed,
}

/// How a pipe order is laid out on the boundary of an end cluster's disk.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SlotConvention {
    /// In order at the canonical tail, reversed at the head.
    #[default]
    ReverseAtHead,
    /// In order at both ends.
    SameAtBoth,
}

/// A guest graph mapped onto a host given only combinatorially: rotations
/// replace cluster positions and the ledger replaces pipe polylines.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Embedded {
    pub guest: GuestGraph,
    pub host: Skeleton,
    pub map: SimplicialMap,
    pub rotations: RotationSystem,
    pub ledger: CrossingLedger,
}

impl Embedded {
    /// Removes zero-weight pipes and clusters with empty preimage, together
    /// with their rotation entries and crossing pairs.
    pub fn pruned(&self) -> Embedded {
        let weights = self.map.weights();
        let live_pipe = |p: &PipeId| weights.get(p).copied().unwrap_or(0) > 0;
        let used = self.map.cluster_preimages();
        let mut host = self.host.clone();
        host.pipes.retain(|p, _| live_pipe(p));
        host.clusters.retain(|c| used.contains_key(c));
        let rotations = RotationSystem {
            at: self
                .rotations
                .at
                .iter()
                .filter(|(c, _)| host.clusters.contains(c))
                .map(|(&c, r)| (c, r.iter().copied().filter(|p| live_pipe(p)).collect()))
                .collect(),
        };
        let pairs = self
            .ledger
            .crossing_pairs
            .iter()
            .filter(|((a, b), _)| live_pipe(a) && live_pipe(b))
            .map(|(&k, &m)| (k, m))
            .collect();
        let ledger = CrossingLedger::new(
            host.pipes.keys().map(|&p| (p, weights[&p])).collect(),
            pairs,
        );
        Embedded {
            guest: self.guest.clone(),
            host,
            map: self.map.clone(),
            rotations,
            ledger,
        }
    }

    /// `|E(G)| − |E(H)|`.
    pub fn potential(&self) -> i64 {
        self.guest.edges.len() as i64 - self.host.pipes.len() as i64
    }

    /// Relabels every entity by applying an offset, reversing nothing else.
    /// Useful for checking that results do not depend on id choices.
    pub fn relabeled(&self, perm: &Relabeling) -> Embedded {
        let c = |x: ClusterId| perm.cluster(x);
        let p = |x: PipeId| perm.pipe(x);
        let v = |x: VertexId| perm.vertex(x);
        let e = |x: EdgeId| perm.edge(x);
        let guest = GuestGraph {
            vertices: self.guest.vertices.iter().map(|&x| v(x)).collect(),
            edges: self
                .guest
                .edges
                .iter()
                .map(|(&k, &(a, b))| (e(k), (v(a), v(b))))
                .collect(),
        };
        let host = Skeleton {
            clusters: self.host.clusters.iter().map(|&x| c(x)).collect(),
            pipes: self
                .host
                .pipes
                .iter()
                .map(|(&k, &(a, b))| (p(k), canonical_pair(c(a), c(b))))
                .collect(),
        };
        let map = SimplicialMap {
            vertex_map: self
                .map
                .vertex_map
                .iter()
                .map(|(&a, &b)| (v(a), c(b)))
                .collect(),
            edge_map: self
                .map
                .edge_map
                .iter()
                .map(|(&a, &b)| (e(a), p(b)))
                .collect(),
        };
        let rotations = RotationSystem {
            at: self
                .rotations
                .at
                .iter()
                .map(|(&k, r)| (c(k), r.iter().map(|&x| p(x)).collect()))
                .collect(),
        };
        let pairs = self
            .ledger
            .crossing_pairs
            .iter()
            .map(|(&(a, b), &m)| {
                let (a, b) = (p(a), p(b));
                (if a <= b { (a, b) } else { (b, a) }, m)
            })
            .collect();
        let ledger = CrossingLedger::new(
            self.ledger
                .weights
                .iter()
                .map(|(&k, &w)| (p(k), w))
                .collect(),
            pairs,
        );
        Embedded {
            guest,
            host,
            map,
            rotations,
            ledger,
        }
    }
}

/// A bijective relabeling of ids, given as explicit tables. Ids missing
/// from a table are left unchanged.
#[derive(Clone, Debug, Default)]
pub struct Relabeling {
    pub clusters: BTreeMap<ClusterId, ClusterId>,
    pub pipes: BTreeMap<PipeId, PipeId>,
    pub vertices: BTreeMap<VertexId, VertexId>,
    pub edges: BTreeMap<EdgeId, EdgeId>,
}

impl Relabeling {
    fn cluster(&self, x: ClusterId) -> ClusterId {
        self.clusters.get(&x).copied().unwrap_or(x)
    }
    fn pipe(&self, x: PipeId) -> PipeId {
        self.pipes.get(&x).copied().unwrap_or(x)
    }
    fn vertex(&self, x: VertexId) -> VertexId {
        self.vertices.get(&x).copied().unwrap_or(x)
    }
    fn edge(&self, x: EdgeId) -> EdgeId {
        self.edges.get(&x).copied().unwrap_or(x)
    }
}

/// A broken invariant of an instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    GuestLoop(EdgeId),
    GuestParallelEdges(EdgeId, EdgeId),
    GuestUnknownVertex(EdgeId, VertexId),
    HostLoop(PipeId),
    HostParallelPipes(PipeId, PipeId),
    HostUnknownCluster(PipeId, ClusterId),
    RepeatedBendPoint(PipeId),
    PipeThroughCluster(PipeId, ClusterId),
    VertexUnmapped(VertexId),
    VertexMapsToUnknownCluster(VertexId, ClusterId),
    EdgeUnmapped(EdgeId),
    EdgeMapsToUnknownPipe(EdgeId, PipeId),
    MapEntryForUnknownVertex(VertexId),
    MapEntryForUnknownEdge(EdgeId),
    EdgeMapsToNoPipe(EdgeId),
    IncidenceMismatch(EdgeId, PipeId),
    SlotConservation(ClusterId),
    RotationMismatch(ClusterId),
    LedgerWeightMismatch(PipeId),
    LedgerUnknownPipe(PipeId, PipeId),
    LedgerInconsistent,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            GuestLoop(e) => write!(f, "guest edge {e} is a loop"),
            GuestParallelEdges(a, b) => write!(f, "guest edges {a} and {b} are parallel"),
            GuestUnknownVertex(e, v) => write!(f, "guest edge {e} uses unknown vertex {v}"),
            HostLoop(p) => write!(f, "pipe {p} is a loop"),
            HostParallelPipes(a, b) => write!(f, "pipes {a} and {b} are parallel"),
            HostUnknownCluster(p, c) => write!(f, "pipe {p} uses unknown cluster {c}"),
            RepeatedBendPoint(p) => write!(f, "pipe {p} repeats a point consecutively"),
            PipeThroughCluster(p, c) => write!(f, "pipe {p} passes through cluster {c}"),
            VertexUnmapped(v) => write!(f, "vertex {v} is not mapped"),
            VertexMapsToUnknownCluster(v, c) => {
                write!(f, "vertex {v} maps to unknown cluster {c}")
            }
            EdgeUnmapped(e) => write!(f, "edge {e} is not mapped"),
            EdgeMapsToUnknownPipe(e, p) => write!(f, "edge {e} maps to unknown pipe {p}"),
            MapEntryForUnknownVertex(v) => write!(f, "map entry for unknown vertex {v}"),
            MapEntryForUnknownEdge(e) => write!(f, "map entry for unknown edge {e}"),
            EdgeMapsToNoPipe(e) => write!(f, "edge {e} maps to no pipe"),
            IncidenceMismatch(e, p) => {
                write!(f, "edge {e} endpoints do not map onto the ends of pipe {p}")
            }
            SlotConservation(c) => write!(f, "slot count mismatch at cluster {c}"),
            RotationMismatch(c) => {
                write!(
                    f,
                    "rotation at cluster {c} does not list its incident pipes"
                )
            }
            LedgerWeightMismatch(p) => write!(f, "ledger weight of pipe {p} is stale"),
            LedgerUnknownPipe(a, b) => write!(f, "ledger pair ({a}, {b}) names an unknown pipe"),
            LedgerInconsistent => write!(f, "ledger cr2 does not match its crossing pairs"),
        }
    }
}

/// Outcome of [`validate`]: hard violations plus spur and fork findings.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub spurs: Vec<VertexId>,
    pub forks: Vec<(VertexId, PipeId)>,
}

impl ValidationReport {
    /// No violated invariant; spurs and forks are findings, not violations.
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.spurs.is_empty() && self.forks.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "violation: {v}")?;
        }
        for s in &self.spurs {
            writeln!(f, "spur: vertex {s}")?;
        }
        for (v, p) in &self.forks {
            writeln!(f, "fork: vertex {v} inside pipe {p}")?;
        }
        Ok(())
    }
}

/// Guest vertices whose two incident edges map to the same pipe.
pub fn spurs(guest: &GuestGraph, map: &SimplicialMap) -> Vec<VertexId> {
    guest
        .incidence()
        .into_iter()
        .filter(|(_, es)| {
            es.len() == 2 && {
                let a = map.edge_map.get(&es[0]);
                a.is_some() && a == map.edge_map.get(&es[1])
            }
        })
        .map(|(v, _)| v)
        .collect()
}

fn check_guest(guest: &GuestGraph, out: &mut Vec<Violation>) {
    let mut seen: BTreeMap<(VertexId, VertexId), EdgeId> = BTreeMap::new();
    for (&e, &(a, b)) in &guest.edges {
        for x in [a, b] {
            if !guest.vertices.contains(&x) {
                out.push(Violation::GuestUnknownVertex(e, x));
            }
        }
        if a == b {
            out.push(Violation::GuestLoop(e));
            continue;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        if let Some(&prev) = seen.get(&key) {
            out.push(Violation::GuestParallelEdges(prev, e));
        } else {
            seen.insert(key, e);
        }
    }
}

fn check_skeleton(host: &Skeleton, out: &mut Vec<Violation>) {
    let mut seen: BTreeMap<(ClusterId, ClusterId), PipeId> = BTreeMap::new();
    for (&p, &(a, b)) in &host.pipes {
        for c in [a, b] {
            if !host.clusters.contains(&c) {
                out.push(Violation::HostUnknownCluster(p, c));
            }
        }
        if a == b {
            out.push(Violation::HostLoop(p));
            continue;
        }
        let key = canonical_pair(a, b);
        if let Some(&prev) = seen.get(&key) {
            out.push(Violation::HostParallelPipes(prev, p));
        } else {
            seen.insert(key, p);
        }
    }
}

fn check_map(guest: &GuestGraph, host: &Skeleton, map: &SimplicialMap, out: &mut Vec<Violation>) {
    for &v in &guest.vertices {
        match map.vertex_map.get(&v) {
            None => out.push(Violation::VertexUnmapped(v)),
            Some(c) if !host.clusters.contains(c) => {
                out.push(Violation::VertexMapsToUnknownCluster(v, *c))
            }
            _ => {}
        }
    }
    for &v in map.vertex_map.keys() {
        if !guest.vertices.contains(&v) {
            out.push(Violation::MapEntryForUnknownVertex(v));
        }
    }
    for &e in map.edge_map.keys() {
        if !guest.edges.contains_key(&e) {
            out.push(Violation::MapEntryForUnknownEdge(e));
        }
    }
    for (&e, &(a, b)) in &guest.edges {
        let (Some(&ca), Some(&cb)) = (map.vertex_map.get(&a), map.vertex_map.get(&b)) else {
            continue;
        };
        if ca == cb {
            out.push(Violation::EdgeMapsToNoPipe(e));
            continue;
        }
        match map.edge_map.get(&e) {
            None => out.push(Violation::EdgeUnmapped(e)),
            Some(p) => match host.pipes.get(p) {
                None => out.push(Violation::EdgeMapsToUnknownPipe(e, *p)),
                Some(&ends) => {
                    if ends != canonical_pair(ca, cb) {
                        out.push(Violation::IncidenceMismatch(e, *p));
                    }
                }
            },
        }
    }
    if !out.is_empty() {
        return;
    }
    // Slot conservation: every edge end at a cluster is one slot on the
    // boundary of that cluster's disk.
    let inc = guest.incidence();
    let weights = map.weights();
    let host_inc = host.incident();
    let pre = map.cluster_preimages();
    for (&c, pipes) in &host_inc {
        let slots: u64 = pipes
            .iter()
            .map(|p| weights.get(p).copied().unwrap_or(0))
            .sum();
        let demand: u64 = pre
            .get(&c)
            .map(|vs| vs.iter().map(|v| inc[v].len().min(2) as u64).sum())
            .unwrap_or(0);
        if slots != demand {
            out.push(Violation::SlotConservation(c));
        }
    }
}

/// Clusters lying on a pipe's polyline anywhere except at the pipe's own
/// two terminal points. Clusters are bucketed by x so each segment only
/// looks at clusters inside its x-range.
fn clusters_on_pipes(host: &HostGraph) -> Vec<(PipeId, ClusterId)> {
    let mut by_x: Vec<(&Point, ClusterId)> = host.clusters.iter().map(|(&c, p)| (p, c)).collect();
    by_x.sort();
    let mut out = Vec::new();
    for (&p, pipe) in &host.pipes {
        let poly = host.polyline(p);
        let last = poly.len() - 1;
        let mut hits = BTreeSet::new();
        for (k, w) in poly.windows(2).enumerate() {
            let (lo, hi) = if w[0].x <= w[1].x {
                (&w[0].x, &w[1].x)
            } else {
                (&w[1].x, &w[0].x)
            };
            let from = by_x.partition_point(|(q, _)| q.x < *lo);
            for &(q, c) in by_x[from..].iter().take_while(|(q, _)| q.x <= *hi) {
                let terminal = (k == 0 && *q == poly[0] && c == pipe.u)
                    || (k + 1 == last && *q == poly[last] && c == pipe.v);
                let own_end = (c == pipe.u || c == pipe.v) && (q == &w[0] || q == &w[1]);
                if terminal {
                    continue;
                }
                // a bend point on an own endpoint counts; a segment passing
                // its own endpoint's position elsewhere is a self-intersection
                if geometry::on_segment(&w[0], &w[1], q) && (c != pipe.u && c != pipe.v || own_end)
                {
                    hits.insert(c);
                }
            }
        }
        out.extend(hits.into_iter().map(|c| (p, c)));
    }
    out
}

/// Checks every invariant of a geometric instance and reports spurs and forks.
pub fn validate(instance: &Instance) -> ValidationReport {
    let mut violations = Vec::new();
    check_guest(&instance.guest, &mut violations);
    let skeleton = instance.host.skeleton();
    check_skeleton(&skeleton, &mut violations);
    let geometry_ok = violations
        .iter()
        .all(|v| !matches!(v, Violation::HostUnknownCluster(..)));
    if geometry_ok {
        let mut repeated = BTreeSet::new();
        for &p in instance.host.pipes.keys() {
            if instance.host.polyline(p).windows(2).any(|w| w[0] == w[1]) {
                violations.push(Violation::RepeatedBendPoint(p));
                repeated.insert(p);
            }
        }
        for (p, c) in clusters_on_pipes(&instance.host) {
            if !repeated.contains(&p) {
                violations.push(Violation::PipeThroughCluster(p, c));
            }
        }
    }
    check_map(&instance.guest, &skeleton, &instance.map, &mut violations);
    let forks = if violations.is_empty() {
        forks_in_instance(instance)
    } else {
        Vec::new()
    };
    ValidationReport {
        violations,
        spurs: spurs(&instance.guest, &instance.map),
        forks,
    }
}

/// Forks of a simplicial instance: guest vertices whose cluster lies in the
/// relative interior of a pipe polyline. Always empty on admissible input.
pub fn forks_in_instance(instance: &Instance) -> Vec<(VertexId, PipeId)> {
    let pre = instance.map.cluster_preimages();
    let mut out = Vec::new();
    for (p, c) in clusters_on_pipes(&instance.host) {
        let pipe = &instance.host.pipes[&p];
        if c == pipe.u || c == pipe.v {
            continue;
        }
        for &v in pre.get(&c).into_iter().flatten() {
            out.push((v, p));
        }
    }
    out.sort();
    out
}

/// Checks the combinatorial invariants of an embedded instance.
pub fn validate_embedded(emb: &Embedded) -> ValidationReport {
    let mut violations = Vec::new();
    check_guest(&emb.guest, &mut violations);
    check_skeleton(&emb.host, &mut violations);
    check_map(&emb.guest, &emb.host, &emb.map, &mut violations);
    let inc = emb.host.incident();
    for (&c, pipes) in &inc {
        let ok = match emb.rotations.at.get(&c) {
            None => pipes.is_empty(),
            Some(rot) => {
                let mut a = rot.clone();
                a.sort();
                let mut b = pipes.clone();
                b.sort();
                a == b
            }
        };
        if !ok {
            violations.push(Violation::RotationMismatch(c));
        }
    }
    let weights = emb.map.weights();
    for &p in emb.host.pipes.keys() {
        if emb.ledger.weight(p) != weights.get(&p).copied().unwrap_or(0) {
            violations.push(Violation::LedgerWeightMismatch(p));
        }
    }
    for &(a, b) in emb.ledger.crossing_pairs.keys() {
        if !emb.host.pipes.contains_key(&a) || !emb.host.pipes.contains_key(&b) {
            violations.push(Violation::LedgerUnknownPipe(a, b));
        }
    }
    if emb.ledger.cr2 != emb.ledger.cr2_from_pairs()
        || emb.ledger.cr2 != emb.ledger.cr2_from_crossing_weights()
    {
        violations.push(Violation::LedgerInconsistent);
    }
    ValidationReport {
        violations,
        spurs: spurs(&emb.guest, &emb.map),
        forks: Vec::new(),
    }
}
