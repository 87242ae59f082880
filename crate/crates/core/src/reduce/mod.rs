//! 3SAT reductions to path and cycle instances with spurs.
//!
//! Variable `x_j` owns row `y = j + 1` over the columns `3..=5m+5`. Clause
//! `i` (1-based) owns the columns `5i..=5i+3` on row 0; its three variables
//! leave their rows there and share those four clusters, so the middle pipe
//! `u_{5i+1}u_{5i+2}` carries 7 strands per variable plus the clause path
//! `v_i u_{5i+1} u_{5i+2} w_i`, with `v_i = (5i+1, 1)` and `w_i = (5i+2, −1)`.
//!
//! The path of `x_j` runs right along its row (`P₁`), back (`P₂`) and right
//! again (`P₃`), consecutive parts sharing their turning vertex. Inside
//! each clause of `x_j` one of `P₁`, `P₃` zigzags as `0 1 2 3 2 1 2 3` and
//! the other as `0 1 2 1 0 1 2 3` (column offsets from `5i`); which is
//! which depends on the sign of the literal. The threshold is
//! `K = cr₂ + 13m`.

pub mod cnf;
pub mod witness;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{crossing_ledger, rotation_at, GeometryError};
use crate::model::*;
use crate::rat::Rat;
use cnf::Cnf;

/// Zigzag of the strand that carries a positive literal through `P₁`.
const ZIGZAG_UP: [i64; 8] = [0, 1, 2, 3, 2, 1, 2, 3];
const ZIGZAG_BACK: [i64; 8] = [0, 1, 2, 1, 0, 1, 2, 3];

/// Crossings each clause adds to `cr₂` in a yes-instance.
pub const CLAUSE_COST: u64 = 13;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ReduceError {
    #[error("formula has no clauses")]
    Empty,
    #[error("clause {0} does not have exactly three distinct variables")]
    ClauseArity(usize),
    #[error("literal {0} is outside the declared variables")]
    UnknownVariable(i32),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("matching arcs stay degenerate after {0} attempts")]
    NoGeneralPosition(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Paths,
    Cycle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strand {
    P1,
    P2,
    P3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Owner {
    Variable { var: u32, strand: Strand },
    Clause { index: usize },
    Matching,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableRecord {
    pub var: u32,
    pub row: i64,
    /// `H_x`: the cluster of each column `3..=5m+5`.
    pub columns: Vec<ClusterId>,
    /// Guest path `G_x` in order.
    pub vertices: Vec<VertexId>,
    /// Clauses (1-based) containing the variable.
    pub occurrences: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseRecord {
    pub index: usize,
    pub literals: Vec<i32>,
    /// `u_{5i}, …, u_{5i+3}`.
    pub u: [ClusterId; 4],
    pub v: ClusterId,
    pub w: ClusterId,
    pub left: PipeId,
    pub middle: PipeId,
    pub right: PipeId,
    pub v_pipe: PipeId,
    pub w_pipe: PipeId,
    /// Pipe into `u_{5i}` of each literal's variable, in literal order.
    pub entries: Vec<PipeId>,
    /// Pipe out of `u_{5i+3}` of each literal's variable.
    pub exits: Vec<PipeId>,
    pub path: Vec<VertexId>,
    /// The clause path's edge on the middle pipe.
    pub middle_edge: EdgeId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub variant: Variant,
    pub num_vars: u32,
    pub clauses: Vec<Vec<i32>>,
    pub variables: Vec<VariableRecord>,
    pub clause_gadgets: Vec<ClauseRecord>,
    /// Arcs joining consecutive path ends in the cycle variant.
    pub matching: Vec<PipeId>,
    pub edge_owner: BTreeMap<EdgeId, Owner>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionOutput {
    pub instance: Instance,
    pub k: u64,
    pub cr2: u64,
    pub provenance: Provenance,
}

/// What `reduce` writes next to the instance file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    pub k: u64,
    pub cr2: u64,
    pub provenance: Provenance,
}

impl ReductionOutput {
    pub fn cnf(&self) -> Cnf {
        Cnf {
            num_vars: self.provenance.num_vars,
            clauses: self.provenance.clauses.clone(),
        }
    }

    pub fn sidecar_json(&self) -> String {
        let sidecar = Sidecar {
            k: self.k,
            cr2: self.cr2,
            provenance: self.provenance.clone(),
        };
        serde_json::to_string_pretty(&sidecar).expect("provenance serializes")
    }
}

#[derive(Default)]
struct Builder {
    inst: Instance,
    at: BTreeMap<(i64, i64), ClusterId>,
    pipes: BTreeMap<(ClusterId, ClusterId), PipeId>,
    owner: BTreeMap<EdgeId, Owner>,
}

impl Builder {
    fn cluster(&mut self, x: i64, y: i64) -> ClusterId {
        let next = ClusterId(self.at.len() as u32);
        let clusters = &mut self.inst.host.clusters;
        *self.at.entry((x, y)).or_insert_with(|| {
            clusters.insert(next, Point::int(x, y));
            next
        })
    }

    fn pipe(&mut self, a: ClusterId, b: ClusterId) -> PipeId {
        let next = PipeId(self.inst.host.pipes.len() as u32);
        let pipes = &mut self.inst.host.pipes;
        *self.pipes.entry(canonical_pair(a, b)).or_insert_with(|| {
            pipes.insert(next, Pipe::straight(a, b));
            next
        })
    }

    fn vertex(&mut self, c: ClusterId) -> VertexId {
        let v = VertexId(self.inst.guest.vertices.len() as u32);
        self.inst.guest.vertices.insert(v);
        self.inst.map.vertex_map.insert(v, c);
        v
    }

    fn edge_on(&mut self, a: VertexId, b: VertexId, p: PipeId, owner: Owner) -> EdgeId {
        let e = EdgeId(self.inst.guest.edges.len() as u32);
        self.inst.guest.edges.insert(e, (a, b));
        self.inst.map.edge_map.insert(e, p);
        self.owner.insert(e, owner);
        e
    }

    fn edge(&mut self, a: VertexId, b: VertexId, owner: Owner) -> EdgeId {
        let (ca, cb) = (self.inst.map.vertex_map[&a], self.inst.map.vertex_map[&b]);
        let p = self.pipe(ca, cb);
        self.edge_on(a, b, p, owner)
    }
}

/// Clause index and offset of a clause column.
fn clause_column(col: i64, m: usize) -> Option<(usize, usize)> {
    let (i, l) = (col / 5, col % 5);
    (col >= 5 && l <= 3 && i as usize <= m).then_some((i as usize, l as usize))
}

/// Column sequence of one strand with the zigzags of `subs` spliced in.
fn zigzag(cols: impl Iterator<Item = i64>, subs: &BTreeMap<usize, [i64; 8]>) -> Vec<i64> {
    let mut out = Vec::new();
    for c in cols {
        match clause_column(c, usize::MAX) {
            Some((i, 0)) if subs.contains_key(&i) => {
                out.extend(subs[&i].iter().map(|o| 5 * i as i64 + o))
            }
            Some((i, _)) if subs.contains_key(&i) => {}
            _ => out.push(c),
        }
    }
    out
}

fn check_cnf(cnf: &Cnf) -> Result<(), ReduceError> {
    if cnf.clauses.is_empty() {
        return Err(ReduceError::Empty);
    }
    for (i, c) in cnf.clauses.iter().enumerate() {
        if let Some(&l) = c
            .iter()
            .find(|l| l.unsigned_abs() == 0 || l.unsigned_abs() > cnf.num_vars)
        {
            return Err(ReduceError::UnknownVariable(l));
        }
        let mut vars: Vec<u32> = c.iter().map(|l| l.unsigned_abs()).collect();
        vars.sort_unstable();
        vars.dedup();
        if c.len() != 3 || vars.len() != 3 {
            return Err(ReduceError::ClauseArity(i + 1));
        }
    }
    Ok(())
}

/// Disjoint paths `G_x` and `G_i` on the grid host.
pub fn build_paths_instance(cnf: &Cnf) -> Result<ReductionOutput, ReduceError> {
    check_cnf(cnf)?;
    let (b, prov) = build_paths(cnf);
    finish(b, prov)
}

/// The path instance closed into one cycle by arcs through corridors below
/// the grid.
pub fn build_cycle_instance(cnf: &Cnf) -> Result<ReductionOutput, ReduceError> {
    check_cnf(cnf)?;
    let (base, mut prov) = build_paths(cnf);
    prov.variant = Variant::Cycle;
    let mut ends: Vec<(VertexId, VertexId)> = prov
        .variables
        .iter()
        .map(|r| (r.vertices[0], *r.vertices.last().unwrap()))
        .collect();
    ends.extend(prov.clause_gadgets.iter().map(|c| (c.path[0], c.path[3])));
    let n = ends.len();
    const ATTEMPTS: usize = 64;
    for attempt in 0..ATTEMPTS {
        let denom = 4 * n as i64 + 7 + attempt as i64;
        let mut b = Builder {
            inst: base.inst.clone(),
            owner: base.owner.clone(),
            ..Default::default()
        };
        let mut matching = Vec::new();
        for k in 0..n {
            let (tail, head) = (ends[k].1, ends[(k + 1) % n].0);
            let (ct, ch) = (b.inst.map.vertex_map[&tail], b.inst.map.vertex_map[&head]);
            let (pt, ph) = (&b.inst.host.clusters[&ct], &b.inst.host.clusters[&ch]);
            let depth = Rat::from_int(-3 - k as i64);
            // offsets in (0, 1) keep the descents off every integer point
            let bends = vec![
                Point::new(&pt.x + &Rat::new(2 * k as i64 + 1, denom), depth.clone()),
                Point::new(&ph.x + &Rat::new(2 * k as i64 + 2, denom), depth),
            ];
            let p = PipeId(b.inst.host.pipes.len() as u32);
            b.inst.host.pipes.insert(
                p,
                Pipe {
                    u: ct,
                    v: ch,
                    bends,
                },
            );
            b.edge_on(tail, head, p, Owner::Matching);
            matching.push(p);
        }
        if validate(&b.inst).is_admissible()
            && rotation_at(&b.inst.host).is_ok()
            && crossing_ledger(&b.inst).is_ok()
        {
            prov.matching = matching;
            return finish(b, prov);
        }
    }
    Err(ReduceError::NoGeneralPosition(ATTEMPTS))
}

fn finish(b: Builder, mut prov: Provenance) -> Result<ReductionOutput, ReduceError> {
    rotation_at(&b.inst.host)?;
    let cr2 = crossing_ledger(&b.inst)?.cr2;
    prov.edge_owner = b.owner;
    let m = prov.clauses.len() as u64;
    Ok(ReductionOutput {
        instance: b.inst,
        k: cr2 + CLAUSE_COST * m,
        cr2,
        provenance: prov,
    })
}

fn build_paths(cnf: &Cnf) -> (Builder, Provenance) {
    let m = cnf.clauses.len();
    let last = 5 * m as i64 + 5;
    let mut b = Builder::default();
    let mut occurrences: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, c) in cnf.clauses.iter().enumerate() {
        for l in c {
            occurrences.entry(l.unsigned_abs()).or_default().push(i + 1);
        }
    }

    let mut variables = Vec::new();
    for var in 1..=cnf.num_vars {
        let occ = occurrences.get(&var).cloned().unwrap_or_default();
        let row = var as i64 + 1;
        let columns: Vec<ClusterId> = (3..=last)
            .map(|col| match clause_column(col, m) {
                Some((i, _)) if occ.contains(&i) => b.cluster(col, 0),
                _ => b.cluster(col, row),
            })
            .collect();
        variables.push(VariableRecord {
            var,
            row,
            columns,
            vertices: Vec::new(),
            occurrences: occ,
        });
    }
    let mut clause_gadgets = Vec::new();
    for (i0, lits) in cnf.clauses.iter().enumerate() {
        let i = i0 as i64 + 1;
        let u = [
            b.cluster(5 * i, 0),
            b.cluster(5 * i + 1, 0),
            b.cluster(5 * i + 2, 0),
            b.cluster(5 * i + 3, 0),
        ];
        let v = b.cluster(5 * i + 1, 1);
        let w = b.cluster(5 * i + 2, -1);
        let entries = lits
            .iter()
            .map(|l| {
                let before = b.cluster(5 * i - 1, l.unsigned_abs() as i64 + 1);
                b.pipe(before, u[0])
            })
            .collect();
        let exits = lits
            .iter()
            .map(|l| {
                let after = b.cluster(5 * i + 4, l.unsigned_abs() as i64 + 1);
                b.pipe(u[3], after)
            })
            .collect();
        clause_gadgets.push(ClauseRecord {
            index: i as usize,
            literals: lits.clone(),
            u,
            v,
            w,
            left: b.pipe(u[0], u[1]),
            middle: b.pipe(u[1], u[2]),
            right: b.pipe(u[2], u[3]),
            v_pipe: b.pipe(v, u[1]),
            w_pipe: b.pipe(u[2], w),
            entries,
            exits,
            path: Vec::new(),
            middle_edge: EdgeId(0),
        });
    }

    for rec in &mut variables {
        let (mut first, mut third) = (BTreeMap::new(), BTreeMap::new());
        for &i in &rec.occurrences {
            let positive = cnf.clauses[i - 1].contains(&(rec.var as i32));
            let (a, c) = if positive {
                (ZIGZAG_UP, ZIGZAG_BACK)
            } else {
                (ZIGZAG_BACK, ZIGZAG_UP)
            };
            first.insert(i, a);
            third.insert(i, c);
        }
        let strands = [
            (Strand::P1, zigzag(3..=last - 1, &first)),
            (Strand::P2, (4..=last - 1).rev().collect()),
            (Strand::P3, zigzag(4..=last, &third)),
        ];
        let at = |col: i64| rec.columns[(col - 3) as usize];
        let mut prev = b.vertex(at(3));
        rec.vertices.push(prev);
        for (strand, cols) in strands {
            for &col in &cols[1..] {
                let v = b.vertex(at(col));
                b.edge(
                    prev,
                    v,
                    Owner::Variable {
                        var: rec.var,
                        strand,
                    },
                );
                rec.vertices.push(v);
                prev = v;
            }
        }
    }
    for g in &mut clause_gadgets {
        let owner = Owner::Clause { index: g.index };
        g.path = vec![
            b.vertex(g.v),
            b.vertex(g.u[1]),
            b.vertex(g.u[2]),
            b.vertex(g.w),
        ];
        b.edge(g.path[0], g.path[1], owner);
        g.middle_edge = b.edge(g.path[1], g.path[2], owner);
        b.edge(g.path[2], g.path[3], owner);
    }

    let prov = Provenance {
        variant: Variant::Paths,
        num_vars: cnf.num_vars,
        clauses: cnf.clauses.clone(),
        variables,
        clause_gadgets,
        matching: Vec::new(),
        edge_owner: BTreeMap::new(),
    };
    (b, prov)
}

/// Expected size of `G_x`: three strands of `5m + 2`, `5m + 1` and `5m + 2`
/// vertices sharing two turning vertices, plus 4 per zigzag.
pub fn variable_path_len(m: usize, occurrences: usize) -> usize {
    15 * m + 3 + 8 * occurrences
}

/// Every structural property the construction promises, as a list of
/// human-readable failures (empty when all hold).
pub fn structural_check(out: &ReductionOutput) -> Vec<String> {
    let mut bad = Vec::new();
    let inst = &out.instance;
    let prov = &out.provenance;
    let m = prov.clauses.len();
    let n = prov.num_vars as i64;

    let report = validate(inst);
    for v in &report.violations {
        bad.push(format!("not admissible: {v}"));
    }
    match crossing_ledger(inst) {
        Ok(ledger) if ledger.cr2 != out.cr2 => {
            bad.push(format!("cr2 {} recomputed as {}", out.cr2, ledger.cr2))
        }
        Ok(_) => {}
        Err(e) => bad.push(format!("degenerate drawing: {e}")),
    }
    if out.k != out.cr2 + CLAUSE_COST * m as u64 {
        bad.push(format!(
            "K − cr2 = {} for m = {m}",
            out.k as i64 - out.cr2 as i64
        ));
    }

    let rotations = rotation_at(&inst.host).ok();
    for g in &prov.clause_gadgets {
        if inst.weight(g.middle) != 22 {
            bad.push(format!(
                "clause {}: middle pipe weight {}",
                g.index,
                inst.weight(g.middle)
            ));
        }
        let Some(rot) = &rotations else { continue };
        let order = |c: ClusterId, pipes: &[PipeId]| -> Vec<usize> {
            rot.at[&c]
                .iter()
                .filter_map(|p| pipes.iter().position(|q| q == p))
                .collect()
        };
        let into = order(g.u[0], &g.entries);
        let mut out_of = order(g.u[3], &g.exits);
        out_of.reverse();
        let cyclic = (0..out_of.len()).any(|r| {
            let mut o = out_of.clone();
            o.rotate_left(r);
            o == into
        });
        if into.len() != 3 || !cyclic {
            bad.push(format!(
                "clause {}: rotations at u0 and u3 are not reversed",
                g.index
            ));
        }
    }

    let (x_max, y_max) = (5 * m as i64 + 5, n + 1);
    for (c, p) in &inst.host.clusters {
        let inside = |v: &Rat, lo: i64, hi: i64| {
            v.is_integer() && *v >= Rat::from_int(lo) && *v <= Rat::from_int(hi)
        };
        if !inside(&p.x, 3, x_max) || !inside(&p.y, -1, y_max) {
            bad.push(format!(
                "cluster {c} at {p} is off the [3, {x_max}] × [−1, {y_max}] grid"
            ));
        }
    }

    let pre = inst.map.cluster_preimages();
    let mut ends: Vec<VertexId> = Vec::new();
    for r in &prov.variables {
        let want = variable_path_len(m, r.occurrences.len());
        if r.vertices.len() != want {
            bad.push(format!(
                "G_x{} has {} vertices, expected {want}",
                r.var,
                r.vertices.len()
            ));
        }
        ends.extend([r.vertices[0], *r.vertices.last().unwrap()]);
    }
    for g in &prov.clause_gadgets {
        ends.extend([g.path[0], g.path[3]]);
    }
    for v in ends {
        let c = inst.map.vertex_map[&v];
        if pre[&c].len() != 1 {
            bad.push(format!("path end {v} shares cluster {c}"));
        }
    }
    let total: usize = prov
        .variables
        .iter()
        .map(|r| r.vertices.len())
        .sum::<usize>()
        + 4 * m;
    if inst.guest.vertices.len() != total {
        bad.push(format!(
            "guest has {} vertices, provenance lists {total}",
            inst.guest.vertices.len()
        ));
    }
    if prov.edge_owner.len() != inst.guest.edges.len() {
        bad.push("edge owners do not cover the guest".into());
    }

    if spurs(&inst.guest, &inst.map).is_empty() {
        bad.push("no spurs".into());
    }
    let shape = inst.guest.shape();
    let want = match prov.variant {
        Variant::Paths => Shape::DisjointPaths,
        Variant::Cycle => Shape::Cycle,
    };
    if shape != want {
        bad.push(format!("guest shape {shape:?}, expected {want:?}"));
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_clause() -> Cnf {
        Cnf {
            num_vars: 3,
            clauses: vec![vec![1, -2, 3]],
        }
    }

    #[test]
    fn single_clause_layout() {
        let out = build_paths_instance(&one_clause()).unwrap();
        assert!(
            structural_check(&out).is_empty(),
            "{:?}",
            structural_check(&out)
        );
        let g = &out.provenance.clause_gadgets[0];
        let at = |c: ClusterId| out.instance.host.clusters[&c].clone();
        assert_eq!(at(g.u[0]), Point::int(5, 0));
        assert_eq!(at(g.v), Point::int(6, 1));
        assert_eq!(at(g.w), Point::int(7, -1));
        assert_eq!(out.provenance.variables[1].vertices.len(), 15 + 3 + 8);
        assert_eq!(out.k, out.cr2 + 13);
    }

    #[test]
    fn sidecar_round_trips() {
        let out = build_cycle_instance(&one_clause()).unwrap();
        let back: Sidecar = serde_json::from_str(&out.sidecar_json()).unwrap();
        assert_eq!(back.k, out.k);
        assert_eq!(back.provenance, out.provenance);
    }

    #[test]
    fn cycle_variant_is_one_cycle() {
        let out = build_cycle_instance(&one_clause()).unwrap();
        assert!(
            structural_check(&out).is_empty(),
            "{:?}",
            structural_check(&out)
        );
        assert_eq!(out.provenance.matching.len(), 4);
    }

    #[test]
    fn rejects_short_and_repeated_clauses() {
        let cnf = Cnf {
            num_vars: 3,
            clauses: vec![vec![1, 2]],
        };
        assert_eq!(build_paths_instance(&cnf), Err(ReduceError::ClauseArity(1)));
        let cnf = Cnf {
            num_vars: 3,
            clauses: vec![vec![1, -1, 2]],
        };
        assert_eq!(build_paths_instance(&cnf), Err(ReduceError::ClauseArity(1)));
        assert_eq!(
            build_paths_instance(&Cnf {
                num_vars: 3,
                clauses: vec![]
            }),
            Err(ReduceError::Empty)
        );
    }

    #[test]
    fn spur_sits_on_a_zigzag_turn() {
        let out = build_paths_instance(&one_clause()).unwrap();
        let s = spurs(&out.instance.guest, &out.instance.map);
        let u3 = out.provenance.clause_gadgets[0].u[3];
        assert!(s.iter().any(|v| out.instance.map.vertex_map[v] == u3));
    }
}
