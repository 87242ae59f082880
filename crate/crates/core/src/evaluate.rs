//! Crossing count of the perturbation described by a pipe order set.
//!
//! Each cluster `u` is a disk whose boundary carries, in rotation order, one
//! slot per guest edge of every incident pipe. A degree-2 guest vertex at `u`
//! is a chord joining the slots of its two edges, and two chords cross iff
//! their endpoints interleave. The total is `cr₂` plus all disk crossings.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::model::*;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no order given for pipe {0}")]
    MissingOrder(PipeId),
    #[error("order for pipe {0} is not a permutation of its preimage")]
    NotAPermutation(PipeId),
    #[error("order given for unknown pipe {0}")]
    UnknownPipe(PipeId),
    #[error("guest vertex {0} has degree above 2")]
    DegreeTooHigh(VertexId),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub total: u64,
    pub cr2: u64,
    /// Interleaving chord pairs per cluster (clusters without chords omitted).
    pub per_cluster: BTreeMap<ClusterId, u64>,
}

/// Number of strictly interleaving pairs among chords `(l, r)` with `l < r`.
/// Chords sharing an endpoint never interleave.
pub fn count_interleavings(chords: &[(usize, usize)]) -> u64 {
    if chords.len() < 24 {
        let mut n = 0;
        for (i, &(a, b)) in chords.iter().enumerate() {
            for &(c, d) in &chords[i + 1..] {
                if (a < c && c < b && b < d) || (c < a && a < d && d < b) {
                    n += 1;
                }
            }
        }
        return n;
    }
    let size = chords.iter().map(|c| c.1).max().unwrap_or(0) + 1;
    let mut closing: Vec<Vec<usize>> = vec![Vec::new(); size];
    let mut opening: Vec<Vec<usize>> = vec![Vec::new(); size];
    for (i, &(l, r)) in chords.iter().enumerate() {
        opening[l].push(i);
        closing[r].push(i);
    }
    let mut bit = Fenwick::new(size);
    let mut total = 0u64;
    for p in 0..size {
        for &i in &closing[p] {
            bit.add(chords[i].0, -1);
        }
        for &i in &closing[p] {
            let l = chords[i].0;
            if l + 1 < p {
                total += (bit.prefix(p) - bit.prefix(l + 1)) as u64;
            }
        }
        if !opening[p].is_empty() {
            bit.add(p, opening[p].len() as i64);
        }
    }
    total
}

/// Index pairs of strictly interleaving chords, in output-sensitive time.
pub fn interleaving_pairs(chords: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut events: Vec<usize> = chords.iter().flat_map(|&(l, r)| [l, r]).collect();
    events.sort_unstable();
    events.dedup();
    let mut closing: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut opening: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &(l, r)) in chords.iter().enumerate() {
        opening.entry(l).or_default().push(i);
        closing.entry(r).or_default().push(i);
    }
    let mut open: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut out = Vec::new();
    for p in events {
        if let Some(cs) = closing.get(&p) {
            for &i in cs {
                open.remove(&(chords[i].0, i));
            }
            for &i in cs {
                let l = chords[i].0;
                for &(_, j) in open.range((l + 1, 0)..(p, 0)) {
                    out.push(if i < j { (i, j) } else { (j, i) });
                }
            }
        }
        if let Some(os) = opening.get(&p) {
            for &i in os {
                open.insert((p, i));
            }
        }
    }
    out
}

struct Fenwick(Vec<i64>);

impl Fenwick {
    fn new(n: usize) -> Fenwick {
        Fenwick(vec![0; n + 1])
    }
    fn add(&mut self, i: usize, d: i64) {
        let mut i = i + 1;
        while i < self.0.len() {
            self.0[i] += d;
            i += i & i.wrapping_neg();
        }
    }
    /// Sum over positions `< i`.
    fn prefix(&self, i: usize) -> i64 {
        let mut i = i;
        let mut s = 0;
        while i > 0 {
            s += self.0[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// One end of a chord: where the edge's pipe sits on the disk boundary.
#[derive(Clone, Copy, Debug)]
struct SlotRef {
    edge: usize,
    offset: usize,
    weight: usize,
    reversed: bool,
}

impl SlotRef {
    fn position(&self, rank: &[usize]) -> usize {
        let r = rank[self.edge];
        self.offset
            + if self.reversed {
                self.weight - 1 - r
            } else {
                r
            }
    }
}

struct Disk {
    cluster: ClusterId,
    chords: Vec<(VertexId, SlotRef, SlotRef)>,
}

/// The disk layout of an embedded instance with dense edge and pipe indices,
/// reusable across many order sets.
pub struct DiskModel {
    pub edges: Vec<EdgeId>,
    pub edge_index: HashMap<EdgeId, usize>,
    pub pipes: Vec<PipeId>,
    /// Dense edge indices of each pipe's preimage, in edge-id order.
    pub pipe_edges: Vec<Vec<usize>>,
    disks: Vec<Disk>,
    /// Disks touched by each pipe.
    pub pipe_disks: Vec<Vec<usize>>,
    pub cr2: u64,
}

impl DiskModel {
    pub fn new(emb: &Embedded, conv: Conventions) -> Result<DiskModel, EvalError> {
        let edges: Vec<EdgeId> = emb.guest.edges.keys().copied().collect();
        let edge_index: HashMap<EdgeId, usize> =
            edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let pipes: Vec<PipeId> = emb.host.pipes.keys().copied().collect();
        let pipe_index: HashMap<PipeId, usize> =
            pipes.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let pre = emb.map.pipe_preimages();
        let pipe_edges: Vec<Vec<usize>> = pipes
            .iter()
            .map(|p| {
                pre.get(p)
                    .map_or(Vec::new(), |es| es.iter().map(|e| edge_index[e]).collect())
            })
            .collect();
        let inc = emb.guest.incidence();
        let cluster_pre = emb.map.cluster_preimages();
        let mut disks = Vec::new();
        let mut pipe_disks = vec![Vec::new(); pipes.len()];
        for (&c, rot) in &emb.rotations.at {
            // slot offset of every incident pipe on this boundary
            let mut offsets: HashMap<PipeId, (usize, usize, bool)> = HashMap::new();
            let mut off = 0;
            for p in rot {
                let w = pre.get(p).map_or(0, Vec::len);
                let (tail, _) = emb.host.pipes[p];
                let reversed = conv.slot == SlotConvention::ReverseAtHead && tail != c;
                offsets.insert(*p, (off, w, reversed));
                off += w;
            }
            let mut chords = Vec::new();
            for &v in cluster_pre.get(&c).map_or(&[][..], |v| v.as_slice()) {
                let es = &inc[&v];
                if es.len() > 2 {
                    return Err(EvalError::DegreeTooHigh(v));
                }
                if es.len() < 2 {
                    continue;
                }
                let slot = |e: EdgeId| {
                    let (offset, weight, reversed) = offsets[&emb.map.edge_map[&e]];
                    SlotRef {
                        edge: edge_index[&e],
                        offset,
                        weight,
                        reversed,
                    }
                };
                chords.push((v, slot(es[0]), slot(es[1])));
            }
            if !chords.is_empty() {
                let d = disks.len();
                for p in rot {
                    pipe_disks[pipe_index[p]].push(d);
                }
                disks.push(Disk { cluster: c, chords });
            }
        }
        Ok(DiskModel {
            edges,
            edge_index,
            pipes,
            pipe_edges,
            disks,
            pipe_disks,
            cr2: emb.ledger.cr2,
        })
    }

    pub fn disk_count(&self) -> usize {
        self.disks.len()
    }

    pub fn disk_cluster(&self, d: usize) -> ClusterId {
        self.disks[d].cluster
    }

    /// Interleaving chord pairs in disk `d`, given each edge's rank within
    /// its pipe order.
    pub fn disk_crossings(&self, d: usize, rank: &[usize]) -> u64 {
        let chords: Vec<(usize, usize)> = self.disks[d]
            .chords
            .iter()
            .map(|(_, a, b)| {
                let (x, y) = (a.position(rank), b.position(rank));
                if x < y {
                    (x, y)
                } else {
                    (y, x)
                }
            })
            .collect();
        count_interleavings(&chords)
    }

    /// Guest vertex pairs whose chords cross in disk `d`.
    pub fn disk_crossing_pairs(&self, d: usize, rank: &[usize]) -> Vec<(VertexId, VertexId)> {
        let disk = &self.disks[d];
        let chords: Vec<(usize, usize)> = disk
            .chords
            .iter()
            .map(|(_, a, b)| {
                let (x, y) = (a.position(rank), b.position(rank));
                (x.min(y), x.max(y))
            })
            .collect();
        interleaving_pairs(&chords)
            .into_iter()
            .map(|(i, j)| (disk.chords[i].0, disk.chords[j].0))
            .collect()
    }

    /// Rank of every edge within its pipe order.
    pub fn ranks(&self, orders: &PipeOrderSet) -> Result<Vec<usize>, EvalError> {
        let mut rank = vec![usize::MAX; self.edges.len()];
        for p in orders.orders.keys() {
            if self.pipes.binary_search(p).is_err() {
                return Err(EvalError::UnknownPipe(*p));
            }
        }
        for (pi, &p) in self.pipes.iter().enumerate() {
            let order = orders.orders.get(&p).ok_or(EvalError::MissingOrder(p))?;
            if order.len() != self.pipe_edges[pi].len() {
                return Err(EvalError::NotAPermutation(p));
            }
            for (r, e) in order.iter().enumerate() {
                let Some(&ei) = self.edge_index.get(e) else {
                    return Err(EvalError::NotAPermutation(p));
                };
                if rank[ei] != usize::MAX || !self.pipe_edges[pi].contains(&ei) {
                    return Err(EvalError::NotAPermutation(p));
                }
                rank[ei] = r;
            }
        }
        Ok(rank)
    }

    pub fn evaluate_ranks(&self, rank: &[usize]) -> Evaluation {
        let mut per_cluster = BTreeMap::new();
        let mut total = self.cr2;
        for d in 0..self.disks.len() {
            let n = self.disk_crossings(d, rank);
            total += n;
            per_cluster.insert(self.disks[d].cluster, n);
        }
        Evaluation {
            total,
            cr2: self.cr2,
            per_cluster,
        }
    }
}

pub fn evaluate_embedded_with(
    emb: &Embedded,
    orders: &PipeOrderSet,
    conv: Conventions,
) -> Result<Evaluation, EvalError> {
    let model = DiskModel::new(emb, conv)?;
    let rank = model.ranks(orders)?;
    Ok(model.evaluate_ranks(&rank))
}

pub fn evaluate_embedded(emb: &Embedded, orders: &PipeOrderSet) -> Result<Evaluation, EvalError> {
    evaluate_embedded_with(emb, orders, Conventions::default())
}

pub fn evaluate(inst: &Instance, orders: &PipeOrderSet) -> Result<Evaluation, EvalError> {
    evaluate_embedded(&Embedded::from_instance(inst)?, orders)
}

/// True iff the order set realizes at most `k` crossings.
pub fn check_certificate(
    inst: &Instance,
    orders: &PipeOrderSet,
    k: u64,
) -> Result<bool, EvalError> {
    Ok(evaluate(inst, orders)?.total <= k)
}

/// Crossing guest-vertex pairs inside one cluster's disk.
pub fn disk_crossing_pairs(
    emb: &Embedded,
    orders: &PipeOrderSet,
    cluster: ClusterId,
) -> Result<Vec<(VertexId, VertexId)>, EvalError> {
    let model = DiskModel::new(emb, Conventions::default())?;
    let rank = model.ranks(orders)?;
    Ok((0..model.disk_count())
        .find(|&d| model.disk_cluster(d) == cluster)
        .map(|d| model.disk_crossing_pairs(d, &rank))
        .unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use proptest::prelude::*;

    fn naive(chords: &[(usize, usize)]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..chords.len() {
            for j in i + 1..chords.len() {
                let (a, b) = chords[i];
                let (c, d) = chords[j];
                if (a < c && c < b && b < d) || (c < a && a < d && d < b) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    proptest! {
        #[test]
        fn interleaving_counters_agree(raw in proptest::collection::vec((0usize..40, 0usize..40), 0..60)) {
            let chords: Vec<(usize, usize)> = raw
                .into_iter()
                .filter(|(a, b)| a != b)
                .map(|(a, b)| (a.min(b), a.max(b)))
                .collect();
            let mut expected = naive(&chords);
            expected.sort();
            let mut got = interleaving_pairs(&chords);
            got.sort();
            prop_assert_eq!(&got, &expected);
            prop_assert_eq!(count_interleavings(&chords), expected.len() as u64);
        }
    }

    fn tri6_orders(flip: [bool; 3]) -> PipeOrderSet {
        let inst = corpus::tri6();
        let mut orders = PipeOrderSet::identity(&inst.map);
        for (i, (_, o)) in orders.orders.iter_mut().enumerate() {
            if flip[i] {
                o.reverse();
            }
        }
        orders
    }

    #[test]
    fn tri6_minimum_over_all_orders_is_one() {
        let inst = corpus::tri6();
        let mut values = Vec::new();
        for mask in 0..8u8 {
            let flip = [mask & 1 != 0, mask & 2 != 0, mask & 4 != 0];
            let ev = evaluate(&inst, &tri6_orders(flip)).unwrap();
            assert_eq!(ev.cr2, 0);
            values.push(ev.total);
        }
        assert_eq!(values.iter().min(), Some(&1));
        // two crossings per disk is impossible with two chords
        assert!(values.iter().all(|&v| (1..=3).contains(&v)));
    }

    #[test]
    fn certificates() {
        let inst = corpus::tri6();
        let best = (0..8u8)
            .map(|m| tri6_orders([m & 1 != 0, m & 2 != 0, m & 4 != 0]))
            .min_by_key(|o| evaluate(&inst, o).unwrap().total)
            .unwrap();
        assert!(check_certificate(&inst, &best, 1).unwrap());
        assert!(!check_certificate(&inst, &best, 0).unwrap());
        let c3 = corpus::identity_cycle(3);
        assert!(check_certificate(&c3, &PipeOrderSet::identity(&c3.map), 0).unwrap());
    }

    #[test]
    fn bad_orders_are_rejected() {
        let inst = corpus::tri6();
        let mut orders = PipeOrderSet::identity(&inst.map);
        let first = *orders.orders.keys().next().unwrap();
        orders.orders.get_mut(&first).unwrap().pop();
        assert_eq!(
            evaluate(&inst, &orders),
            Err(EvalError::NotAPermutation(first))
        );
        orders.orders.remove(&first);
        assert_eq!(
            evaluate(&inst, &orders),
            Err(EvalError::MissingOrder(first))
        );
    }

    #[test]
    fn chord_count_matches_degree_two_vertices() {
        let inst = corpus::tri6();
        let emb = Embedded::from_instance(&inst).unwrap();
        let model = DiskModel::new(&emb, Conventions::default()).unwrap();
        let pre = inst.map.cluster_preimages();
        for d in 0..model.disk_count() {
            let c = model.disk_cluster(d);
            assert_eq!(model.disks[d].chords.len(), pre[&c].len());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn mirror_symmetry_and_lower_bound(seed in 0u64..10_000) {
            let Some(inst) = corpus::random_spur_free_cycle(seed, 2_000) else { return Ok(()) };
            let emb = Embedded::from_instance(&inst).unwrap();
            let mut orders = PipeOrderSet::identity(&emb.map);
            // scramble deterministically
            for (k, o) in orders.orders.values_mut().enumerate() {
                let n = o.len();
                if n > 1 { o.rotate_left((seed as usize + k) % n); }
            }
            let a = evaluate_embedded(&emb, &orders).unwrap();
            prop_assert!(a.total >= a.cr2);
            let mut mirrored = emb.clone();
            mirrored.rotations = emb.rotations.reversed();
            let b = evaluate_embedded(&mirrored, &orders.reversed()).unwrap();
            prop_assert_eq!(a.total, b.total);
        }
    }
}
