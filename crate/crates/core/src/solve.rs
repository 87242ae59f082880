//! Exact crossing number of a spur-free cycle mapped onto a drawn host.
//!
//! Every original cluster is expanded once, then safe pipes with an endpoint
//! of degree at least 3 are expanded until the host is a cycle. A cycle of
//! `n` guest edges winding uniformly around a host cycle of `k` pipes has
//! `n/k − 1` unavoidable disk crossings; the answer adds `cr₂`.

use std::fmt;

use thiserror::Error;

use crate::expand::{OpKind, Work};
use crate::geometry::GeometryError;
use crate::model::*;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("instance is not admissible:\n{0}")]
    Invalid(ValidationReport),
    #[error("guest graph is not a cycle ({0:?})")]
    GuestNotCycle(Shape),
    #[error("guest has spurs at vertices {0:?}")]
    SpurPresent(Vec<VertexId>),
    #[error(transparent)]
    Degenerate(#[from] GeometryError),
    #[error("internal invariant broken: {0}")]
    Internal(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Cluster(ClusterId),
    Pipe(PipeId),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Cluster(c) => write!(f, "cluster {c}"),
            Target::Pipe(p) => write!(f, "pipe {p}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub kind: OpKind,
    pub target: Target,
    pub potential_before: i64,
    pub potential_after: i64,
    pub cr2_after: u64,
    /// Guest edges touched by the operation.
    pub charged: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolveTrace {
    pub steps: Vec<TraceStep>,
    /// Number of pipes of the final host cycle.
    pub cycle_length: usize,
    /// Common weight of the final pipes.
    pub weight: u64,
    pub cr2: u64,
}

impl SolveTrace {
    pub fn total_charged(&self) -> u64 {
        self.steps.iter().map(|s| s.charged).sum()
    }

    pub fn pipe_expansions(&self) -> impl Iterator<Item = &TraceStep> {
        self.steps
            .iter()
            .filter(|s| s.kind == OpKind::PipeExpansion)
    }
}

impl fmt::Display for SolveTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            let kind = match s.kind {
                OpKind::ClusterExpansion => "cluster-expansion",
                OpKind::PipeExpansion => "pipe-expansion",
            };
            writeln!(
                f,
                "{kind} {} phi {} -> {} cr2 {} charged {}",
                s.target, s.potential_before, s.potential_after, s.cr2_after, s.charged
            )?;
        }
        writeln!(
            f,
            "final cycle length {} weight {} cr2 {}",
            self.cycle_length, self.weight, self.cr2
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveOptions {
    /// Relabel only the lighter groups when a pipe's preimage splits.
    pub heavy_split: bool,
    pub conventions: Conventions,
}

pub fn solve(inst: &Instance) -> Result<(u64, SolveTrace), SolveError> {
    solve_with(inst, SolveOptions::default())
}

pub fn solve_with(inst: &Instance, opts: SolveOptions) -> Result<(u64, SolveTrace), SolveError> {
    let report = validate(inst);
    if !report.is_admissible() {
        return Err(SolveError::Invalid(report));
    }
    precheck(&inst.guest, &inst.map)?;
    let emb = Embedded::from_instance(&inst.pruned())?;
    solve_embedded(&emb, opts)
}

fn precheck(guest: &GuestGraph, map: &SimplicialMap) -> Result<(), SolveError> {
    let shape = guest.shape();
    if shape != Shape::Cycle {
        return Err(SolveError::GuestNotCycle(shape));
    }
    let s = spurs(guest, map);
    if !s.is_empty() {
        return Err(SolveError::SpurPresent(s));
    }
    Ok(())
}

fn internal(msg: impl Into<String>) -> SolveError {
    SolveError::Internal(msg.into())
}

pub fn solve_embedded(emb: &Embedded, opts: SolveOptions) -> Result<(u64, SolveTrace), SolveError> {
    precheck(&emb.guest, &emb.map)?;
    let emb = emb.pruned();
    let mut work = Work::from_embedded(&emb, opts.conventions);
    let mut trace = SolveTrace::default();

    let originals = work.c_id.len();
    for u in 0..originals as u32 {
        if !work.c_alive[u as usize] {
            continue;
        }
        let before = work.potential();
        let report = work
            .expand_cluster(u)
            .map_err(|e| internal(format!("cluster expansion failed: {e}")))?;
        trace.steps.push(TraceStep {
            kind: OpKind::ClusterExpansion,
            target: Target::Cluster(work.c_id[u as usize]),
            potential_before: before,
            potential_after: work.potential(),
            cr2_after: work.cr2,
            charged: report.charged,
        });
    }

    let mut worklist: Vec<u32> = (0..work.p_id.len() as u32)
        .filter(|&p| work.p_alive[p as usize])
        .collect();
    while let Some(p) = worklist.pop() {
        if !work.expandable(p) {
            continue;
        }
        let before = work.potential();
        let target = Target::Pipe(work.p_id[p as usize]);
        let report = work
            .expand_pipe(p, opts.heavy_split)
            .map_err(|e| internal(format!("pipe expansion failed: {e}")))?;
        let after = work.potential();
        if after >= before || after < 0 {
            return Err(internal(format!(
                "potential went from {before} to {after} at {target}"
            )));
        }
        for id in report.stubs.iter().chain(&report.chords) {
            if let Some(i) = work.pipe_index(*id) {
                worklist.push(i);
            }
        }
        trace.steps.push(TraceStep {
            kind: OpKind::PipeExpansion,
            target,
            potential_before: before,
            potential_after: after,
            cr2_after: work.cr2,
            charged: report.charged,
        });
    }
    // the worklist must have seen every pipe whose flags changed
    let missed = (0..work.p_id.len() as u32)
        .filter(|&p| work.expandable(p))
        .count();
    if missed > 0 {
        return Err(internal(format!(
            "{missed} expandable pipes missed by the worklist"
        )));
    }

    let (k, w) = final_cycle(&work)?;
    trace.cycle_length = k;
    trace.weight = w;
    trace.cr2 = work.cr2;
    Ok((work.cr2 + w - 1, trace))
}

/// Length and common weight of the final host, which must be one cycle.
fn final_cycle(work: &Work) -> Result<(usize, u64), SolveError> {
    let live: Vec<u32> = (0..work.c_id.len() as u32)
        .filter(|&c| work.c_alive[c as usize])
        .collect();
    if let Some(&c) = live.iter().find(|&&c| work.degree(c) != 2) {
        return Err(internal(format!(
            "final cluster {} has degree {}",
            work.c_id[c as usize],
            work.degree(c)
        )));
    }
    let start = *live
        .first()
        .ok_or_else(|| internal("final host is empty"))?;
    let w = work.weight(work.c_rot[start as usize][0]) as u64;
    let (mut c, mut via, mut steps) = (start, work.c_rot[start as usize][0], 0usize);
    loop {
        if work.weight(via) as u64 != w {
            return Err(internal(format!(
                "final pipes have unequal weights {} and {w}",
                work.weight(via)
            )));
        }
        let [a, b] = work.p_ends[via as usize];
        c = if a == c { b } else { a };
        steps += 1;
        if c == start {
            break;
        }
        let rot = &work.c_rot[c as usize];
        via = if rot[0] == via { rot[1] } else { rot[0] };
    }
    if steps != live.len() || steps != work.live_pipes {
        return Err(internal(format!(
            "final host is not a single cycle ({steps} of {} clusters)",
            live.len()
        )));
    }
    Ok((steps, w))
}
