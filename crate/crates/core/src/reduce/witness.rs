//! Pipe orders attaining `K` from a satisfying assignment.
//!
//! Orders are chosen top to bottom (left of the pipe when walking towards
//! larger `x`). Outside clause columns each variable's strands run parallel,
//! `P₁` above `P₃` when the variable is true and below it otherwise, with
//! `P₂` between. On a clause's three row-0 pipes the variables sit in
//! contiguous blocks, higher rows on top. The order inside each block and
//! the slot of the clause edge on the middle pipe come from an exhaustive
//! search per clause and variable.

use std::collections::BTreeMap;

use itertools::Itertools;
use rayon::prelude::*;
use thiserror::Error;

use super::cnf::{literal_value, Assignment};
use super::{ClauseRecord, Owner, ReductionOutput, Strand};
use crate::evaluate::{DiskModel, EvalError};
use crate::geometry::GeometryError;
use crate::model::*;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum WitnessError {
    #[error("assignment leaves clause {0} unsatisfied")]
    Unsatisfied(usize),
    #[error("clause {clause}: no crossing-free order for the strands of x{var} at its ends")]
    NoLocalOrder { clause: usize, var: u32 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Crossings inside one clause's four clusters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GadgetBreakdown {
    pub clause: usize,
    pub total: u64,
    /// Crossings between the clause path and each literal's variable path,
    /// in literal order.
    pub strand_crossings: Vec<u64>,
    /// Every variable crossed exactly 3 times carries a true literal, and
    /// there is one.
    pub three_is_true_literal: bool,
    /// Variable whose middle-pipe block holds the clause edge.
    pub carrier: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub orders: PipeOrderSet,
    pub total: u64,
    pub gadgets: Vec<GadgetBreakdown>,
}

/// Top-to-bottom orders for the three row-0 pipes of one block.
#[derive(Clone, Debug)]
struct Block {
    cost: u64,
    left: Vec<EdgeId>,
    middle: Vec<EdgeId>,
    right: Vec<EdgeId>,
}

struct Frame<'a> {
    emb: &'a Embedded,
    inst: &'a Instance,
    out: &'a ReductionOutput,
    tau: &'a Assignment,
}

impl Frame<'_> {
    /// Canonical order from a top-to-bottom one.
    fn canonical(&self, p: PipeId, top_down: &[EdgeId]) -> Vec<EdgeId> {
        let (tail, head) = self.emb.host.pipes[&p];
        let x = |c: ClusterId| &self.inst.host.clusters[&c].x;
        // walking away from a left tail, counterclockwise runs bottom to top
        if x(tail) < x(head) {
            top_down.iter().rev().copied().collect()
        } else {
            top_down.to_vec()
        }
    }

    fn strand_rank(&self, e: EdgeId) -> (u32, usize) {
        match self.out.provenance.edge_owner[&e] {
            Owner::Variable { var, strand } => {
                let s = match strand {
                    Strand::P1 => 0,
                    Strand::P2 => 1,
                    Strand::P3 => 2,
                };
                let truth = self.tau.get(&var).copied().unwrap_or(false);
                (var, if truth { s } else { 2 - s })
            }
            _ => (0, 0),
        }
    }

    fn parallel(&self, edges: &[EdgeId]) -> Vec<EdgeId> {
        let mut v = edges.to_vec();
        v.sort_by_key(|&e| (self.strand_rank(e), e));
        v
    }

    /// Best block of `var` in clause `g` for every slot `0..=7` of the clause
    /// edge among the variable's middle strands.
    fn search(&self, g: &ClauseRecord, var: u32) -> Result<Vec<Block>, WitnessError> {
        let slot = g
            .literals
            .iter()
            .position(|l| l.unsigned_abs() == var)
            .unwrap();
        let (entry, exit) = (g.entries[slot], g.exits[slot]);
        let own = |e: &EdgeId| match self.out.provenance.edge_owner[e] {
            Owner::Variable { var: v, .. } => v == var,
            Owner::Clause { index } => index == g.index,
            Owner::Matching => false,
        };
        let pipes = [entry, g.left, g.middle, g.right, exit, g.v_pipe, g.w_pipe];
        let pre = self.emb.map.pipe_preimages();
        let mut sub = Embedded::default();
        let mut weights = BTreeMap::new();
        for p in pipes {
            let es: Vec<EdgeId> = pre[&p].iter().copied().filter(own).collect();
            weights.insert(p, es.len() as u64);
            let (a, b) = self.emb.host.pipes[&p];
            sub.host.pipes.insert(p, (a, b));
            sub.host.clusters.extend([a, b]);
            for e in es {
                let (x, y) = self.emb.guest.edges[&e];
                sub.guest.edges.insert(e, (x, y));
                sub.map.edge_map.insert(e, p);
                for v in [x, y] {
                    sub.guest.vertices.insert(v);
                    sub.map.vertex_map.insert(v, self.emb.map.vertex_map[&v]);
                }
            }
        }
        for &c in &sub.host.clusters {
            let rot = self.emb.rotations.at[&c]
                .iter()
                .copied()
                .filter(|p| pipes.contains(p))
                .collect();
            sub.rotations.at.insert(c, rot);
        }
        sub.ledger = CrossingLedger::new(weights, BTreeMap::new());
        let model = DiskModel::new(&sub, Conventions::default())?;
        let disk = |c: ClusterId| (0..model.disk_count()).find(|&d| model.disk_cluster(d) == c);
        let disks = g.u.map(disk);
        let count =
            |d: Option<usize>, rank: &[usize]| d.map_or(0, |d| model.disk_crossings(d, rank));
        let set = |p: PipeId, top_down: &[EdgeId], rank: &mut [usize]| {
            for (r, e) in self.canonical(p, top_down).iter().enumerate() {
                rank[model.edge_index[e]] = r;
            }
        };
        let spub = sub.map.pipe_preimages();
        let edges_of = |p: PipeId| spub.get(&p).cloned().unwrap_or_default();

        let mut base = vec![0usize; model.edges.len()];
        for p in [entry, exit, g.v_pipe, g.w_pipe] {
            set(p, &self.parallel(&edges_of(p)), &mut base);
        }
        let crossing_free = |p: PipeId, d: Option<usize>| -> Vec<Vec<EdgeId>> {
            let es = edges_of(p);
            let mut rank = base.clone();
            es.iter()
                .copied()
                .permutations(es.len())
                .filter(|perm| {
                    set(p, perm, &mut rank);
                    count(d, &rank) == 0
                })
                .collect()
        };
        let lefts = crossing_free(g.left, disks[0]);
        let rights = crossing_free(g.right, disks[3]);
        if lefts.is_empty() || rights.is_empty() {
            return Err(WitnessError::NoLocalOrder {
                clause: g.index,
                var,
            });
        }
        let strands: Vec<EdgeId> = edges_of(g.middle)
            .into_iter()
            .filter(|&e| e != g.middle_edge)
            .collect();
        let middles: Vec<Vec<EdgeId>> = strands
            .iter()
            .copied()
            .permutations(strands.len())
            .collect();

        (0..=strands.len())
            .map(|k| {
                let best = middles
                    .par_iter()
                    .map_init(
                        || base.clone(),
                        |rank, perm| {
                            let mut mid = perm.clone();
                            mid.insert(k, g.middle_edge);
                            set(g.middle, &mid, rank);
                            let (mut dl, mut il) = (u64::MAX, 0);
                            for (i, l) in lefts.iter().enumerate() {
                                set(g.left, l, rank);
                                let c = count(disks[1], rank);
                                if c < dl {
                                    (dl, il) = (c, i);
                                }
                            }
                            let (mut dr, mut ir) = (u64::MAX, 0);
                            for (i, r) in rights.iter().enumerate() {
                                set(g.right, r, rank);
                                let c = count(disks[2], rank);
                                if c < dr {
                                    (dr, ir) = (c, i);
                                }
                            }
                            (dl + dr, il, ir, mid)
                        },
                    )
                    .min_by(|a, b| (a.0, a.1, a.2, &a.3).cmp(&(b.0, b.1, b.2, &b.3)))
                    .expect("at least one order");
                Block {
                    cost: best.0,
                    left: lefts[best.1].clone(),
                    middle: best.3,
                    right: rights[best.2].clone(),
                }
            })
            .map(Ok)
            .collect()
    }
}

pub fn build_witness(out: &ReductionOutput, tau: &Assignment) -> Result<Witness, WitnessError> {
    let prov = &out.provenance;
    for g in &prov.clause_gadgets {
        if !g.literals.iter().any(|&l| literal_value(l, tau)) {
            return Err(WitnessError::Unsatisfied(g.index));
        }
    }
    let inst = &out.instance;
    let emb = Embedded::from_instance(inst)?;
    let frame = Frame {
        emb: &emb,
        inst,
        out,
        tau,
    };
    let pre = emb.map.pipe_preimages();

    let mut orders = PipeOrderSet::default();
    for &p in emb.host.pipes.keys() {
        let es = pre.get(&p).cloned().unwrap_or_default();
        orders
            .orders
            .insert(p, frame.canonical(p, &frame.parallel(&es)));
    }

    let mut carriers = BTreeMap::new();
    for g in &prov.clause_gadgets {
        // blocks from the top: higher rows first
        let vars: Vec<u32> = g
            .literals
            .iter()
            .map(|l| l.unsigned_abs())
            .sorted()
            .rev()
            .collect();
        let tables: Vec<Vec<Block>> = vars
            .iter()
            .map(|&v| frame.search(g, v))
            .collect::<Result<_, _>>()?;
        let bottom = tables[0].len() - 1;
        let mut best: Option<(u64, usize, usize)> = None;
        for t in 0..vars.len() {
            for k in 0..=bottom {
                let cost: u64 = (0..vars.len())
                    .map(|x| match x.cmp(&t) {
                        std::cmp::Ordering::Less => tables[x][bottom].cost,
                        std::cmp::Ordering::Equal => tables[x][k].cost,
                        std::cmp::Ordering::Greater => tables[x][0].cost,
                    })
                    .sum();
                if best.is_none_or(|b| cost < b.0) {
                    best = Some((cost, t, k));
                }
            }
        }
        let (_, t, k) = best.expect("three variables");
        carriers.insert(g.index, vars[t]);
        let chosen: Vec<&Block> = (0..vars.len())
            .map(|x| match x.cmp(&t) {
                std::cmp::Ordering::Less => &tables[x][bottom],
                std::cmp::Ordering::Equal => &tables[x][k],
                std::cmp::Ordering::Greater => &tables[x][0],
            })
            .collect();
        let stack = |f: fn(&Block) -> &Vec<EdgeId>| -> Vec<EdgeId> {
            chosen.iter().flat_map(|b| f(b).clone()).collect()
        };
        // every block was searched with the clause edge; keep the carrier's
        let middle: Vec<EdgeId> = chosen
            .iter()
            .enumerate()
            .flat_map(|(x, b)| {
                b.middle
                    .iter()
                    .copied()
                    .filter(move |&e| x == t || e != g.middle_edge)
            })
            .collect();
        orders
            .orders
            .insert(g.left, frame.canonical(g.left, &stack(|b| &b.left)));
        orders
            .orders
            .insert(g.middle, frame.canonical(g.middle, &middle));
        orders
            .orders
            .insert(g.right, frame.canonical(g.right, &stack(|b| &b.right)));
    }

    let model = DiskModel::new(&emb, Conventions::default())?;
    let rank = model.ranks(&orders)?;
    let eval = model.evaluate_ranks(&rank);
    let mut owner: BTreeMap<VertexId, Option<u32>> = BTreeMap::new();
    for r in &prov.variables {
        owner.extend(r.vertices.iter().map(|&v| (v, Some(r.var))));
    }
    for g in &prov.clause_gadgets {
        owner.extend(g.path.iter().map(|&v| (v, None)));
    }
    let mut gadgets = Vec::new();
    for g in &prov.clause_gadgets {
        let mut total = 0;
        let mut per_var: BTreeMap<u32, u64> = BTreeMap::new();
        for d in (0..model.disk_count()).filter(|&d| g.u.contains(&model.disk_cluster(d))) {
            total += model.disk_crossings(d, &rank);
            for (a, b) in model.disk_crossing_pairs(d, &rank) {
                let in_clause = |v: VertexId| g.path.contains(&v);
                let other = match (in_clause(a), in_clause(b)) {
                    (true, false) => b,
                    (false, true) => a,
                    _ => continue,
                };
                if let Some(Some(var)) = owner.get(&other) {
                    *per_var.entry(*var).or_default() += 1;
                }
            }
        }
        let strand_crossings: Vec<u64> = g
            .literals
            .iter()
            .map(|l| per_var.get(&l.unsigned_abs()).copied().unwrap_or(0))
            .collect();
        let threes: Vec<i32> = g
            .literals
            .iter()
            .zip(&strand_crossings)
            .filter(|(_, &c)| c == 3)
            .map(|(&l, _)| l)
            .collect();
        gadgets.push(GadgetBreakdown {
            clause: g.index,
            total,
            three_is_true_literal: !threes.is_empty()
                && threes.iter().all(|&l| literal_value(l, tau)),
            strand_crossings,
            carrier: carriers[&g.index],
        });
    }
    Ok(Witness {
        orders,
        total: eval.total,
        gadgets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::evaluate;
    use crate::reduce::cnf::Cnf;
    use crate::reduce::{build_cycle_instance, build_paths_instance};

    #[test]
    fn one_clause_every_assignment() {
        let cnf = Cnf {
            num_vars: 3,
            clauses: vec![vec![1, -2, 3]],
        };
        let out = build_paths_instance(&cnf).unwrap();
        for bits in 0..8u32 {
            let tau: Assignment = (1..=3).map(|j| (j, bits >> (j - 1) & 1 == 1)).collect();
            match build_witness(&out, &tau) {
                Ok(w) => {
                    assert_eq!(w.total, out.k, "tau {tau:?}");
                    assert_eq!(evaluate(&out.instance, &w.orders).unwrap().total, out.k);
                    let mut c = w.gadgets[0].strand_crossings.clone();
                    c.sort();
                    assert_eq!(c, [3, 5, 5]);
                    assert!(w.gadgets[0].three_is_true_literal);
                }
                Err(WitnessError::Unsatisfied(1)) => assert!(!cnf.is_satisfied_by(&tau)),
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn cycle_variant_attains_k() {
        let (cnf, tau) = Cnf::random_satisfiable(3, 4, 2);
        let out = build_cycle_instance(&cnf).unwrap();
        let w = build_witness(&out, &tau).unwrap();
        assert_eq!(w.total, out.k);
    }
}
