//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::time::{Duration, Instant};

use percross_core::corpus;
use percross_core::evaluate::evaluate;
use percross_core::expand::{
    cluster_expansion_with, find_safe_expandable_pipe, pipe_expansion_with, recompute_safety,
    ExpandOptions,
};
use percross_core::geometry::{
    crossing_ledger, crossing_ledger_reference, crossing_pairs_reference, crossing_pairs_sweep,
};
use percross_core::model::{BoundaryRotation, Conventions, Embedded, Instance, SlotConvention};
use percross_core::oracle::{oracle_embedded_with, DEFAULT_BUDGET};
use percross_core::reduce::{self, cnf::Cnf, witness::build_witness};
use percross_core::solve::{solve, solve_with, SolveOptions, SolveTrace};

type Outcome = Result<String, String>;

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let out = f()?;
    let took = start.elapsed();
    if took > limit {
        return Err(format!("{out}; took {took:.2?}, limit {limit:?}"));
    }
    Ok(format!("{out} in {took:.2?}"))
}

fn criterion_1() -> Outcome {
    timed(Duration::from_secs(1), || {
        for (n, k) in [(6, 3), (8, 4), (12, 3), (12, 4)] {
            let inst = corpus::winding_cycle(k, n / k);
            let (cr, _) = solve(&inst).map_err(|e| e.to_string())?;
            if cr != (n / k - 1) as u64 {
                return Err(format!(
                    "C{n} on a {k}-gon solved to {cr}, expected {}",
                    n / k - 1
                ));
            }
        }
        Ok("4 winding cycles match n/k − 1".into())
    })
}

fn criterion_2() -> Outcome {
    timed(Duration::from_secs(1), || {
        let mut count = 0;
        let mut cases: Vec<Instance> = (3..=10).map(corpus::identity_cycle).collect();
        cases.extend((3..=10).map(corpus::subdivided_cycle));
        cases.push(corpus::with_idle_cluster());
        for inst in &cases {
            let (cr, _) = solve(inst).map_err(|e| e.to_string())?;
            if cr != 0 {
                return Err(format!("weak embedding solved to {cr}"));
            }
            count += 1;
        }
        Ok(format!("{count} weak embeddings solve to 0"))
    })
}

/// Random spur-free cycles within the oracle budget.
fn random_instances(count: usize) -> Vec<Instance> {
    (0u64..)
        .filter_map(|s| corpus::random_spur_free_cycle(s, DEFAULT_BUDGET))
        .take(count)
        .collect()
}

/// Number of instances where the solver and the oracle disagree.
fn oracle_disagreements(
    instances: &[Instance],
    conv: Conventions,
    heavy_split: bool,
) -> Result<usize, String> {
    let mut bad = 0;
    for inst in instances {
        let emb = Embedded::from_instance(inst).map_err(|e| e.to_string())?;
        let want = oracle_embedded_with(&emb, DEFAULT_BUDGET, conv)
            .map_err(|e| e.to_string())?
            .0;
        let got = solve_with(
            inst,
            SolveOptions {
                heavy_split,
                conventions: conv,
            },
        )
        .map(|r| r.0);
        if got != Ok(want) {
            bad += 1;
        }
    }
    Ok(bad)
}

fn criterion_3(instances: &[Instance]) -> Outcome {
    timed(Duration::from_secs(300), || {
        let nonzero = instances
            .iter()
            .filter(|i| solve(i).map(|r| r.0 > 0).unwrap_or(false))
            .count();
        for heavy_split in [false, true] {
            let bad = oracle_disagreements(instances, Conventions::default(), heavy_split)?;
            if bad > 0 {
                return Err(format!(
                    "{bad} of {} disagree (heavy split {heavy_split})",
                    instances.len()
                ));
            }
        }
        Ok(format!(
            "solve = oracle on {} instances ({nonzero} with positive value), both split modes",
            instances.len()
        ))
    })
}

/// (before, after) pairs: one cluster expansion per instance, then every
/// pipe expansion of a full run after the cluster sweep.
fn expansion_pairs(
    instances: &[Instance],
    conv: Conventions,
) -> Result<Vec<(Embedded, Embedded)>, String> {
    let mut pairs = Vec::new();
    for (k, inst) in instances.iter().enumerate() {
        let emb = Embedded::from_instance(inst).map_err(|e| e.to_string())?;
        let clusters: Vec<_> = emb.host.clusters.iter().copied().collect();
        let c = clusters[k % clusters.len()];
        let (after, _) = cluster_expansion_with(&emb, c, conv).map_err(|e| e.to_string())?;
        pairs.push((emb.clone(), after));
        let mut cur = emb.clone();
        for c in clusters {
            cur = cluster_expansion_with(&cur, c, conv)
                .map_err(|e| e.to_string())?
                .0
                .pruned();
        }
        let opts = ExpandOptions {
            heavy_split: k % 2 == 1,
            conventions: conv,
        };
        while let Some(p) = find_safe_expandable_pipe(&cur, &recompute_safety(&cur)) {
            let (after, _) = pipe_expansion_with(&cur, p, opts).map_err(|e| e.to_string())?;
            let after = after.pruned();
            pairs.push((cur, after.clone()));
            cur = after;
        }
    }
    Ok(pairs)
}

fn invariance_failures(pairs: &[(Embedded, Embedded)], conv: Conventions) -> Result<usize, String> {
    let mut bad = 0;
    for (before, after) in pairs {
        let a = oracle_embedded_with(before, DEFAULT_BUDGET, conv)
            .map_err(|e| e.to_string())?
            .0;
        let b = oracle_embedded_with(after, DEFAULT_BUDGET, conv)
            .map_err(|e| e.to_string())?
            .0;
        if a != b {
            bad += 1;
        }
    }
    Ok(bad)
}

fn criterion_4(instances: &[Instance]) -> Outcome {
    timed(Duration::from_secs(600), || {
        let pairs = expansion_pairs(instances, Conventions::default())?;
        if pairs.len() < 100 {
            return Err(format!("only {} pairs", pairs.len()));
        }
        let pipe_ops = pairs
            .iter()
            .filter(|(a, b)| a.guest.edges.len() == b.guest.edges.len())
            .count();
        let bad = invariance_failures(&pairs, Conventions::default())?;
        if bad > 0 {
            return Err(format!(
                "{bad} of {} pairs change the oracle value",
                pairs.len()
            ));
        }
        Ok(format!(
            "oracle invariant over {} expansion pairs ({pipe_ops} pipe expansions)",
            pairs.len()
        ))
    })
}

fn check_trace(trace: &SolveTrace) -> Result<(), String> {
    for s in &trace.steps {
        if s.potential_after < 0 || s.potential_before < 0 {
            return Err(format!("negative potential at {}", s.target));
        }
    }
    for s in trace.pipe_expansions() {
        if s.potential_after >= s.potential_before {
            return Err(format!("potential did not drop at {}", s.target));
        }
    }
    if trace.cycle_length == 0 || trace.weight == 0 {
        return Err("empty final host".into());
    }
    Ok(())
}

fn criterion_5(instances: &[Instance]) -> Outcome {
    let mut corpus_set: Vec<Instance> = instances.to_vec();
    corpus_set.extend([
        corpus::tri6(),
        corpus::theta_cycle(),
        corpus::plus_cluster(),
        corpus::weight2_crossing(),
    ]);
    corpus_set.push(corpus::perf_instance(5_000, 4, 1));
    let mut pipe_steps = 0;
    for inst in &corpus_set {
        for heavy_split in [false, true] {
            let (_, trace) = solve_with(
                inst,
                SolveOptions {
                    heavy_split,
                    ..Default::default()
                },
            )
            .map_err(|e| e.to_string())?;
            check_trace(&trace)?;
            pipe_steps += trace.pipe_expansions().count();
        }
    }
    Ok(format!("{} traces, {pipe_steps} pipe expansions, all potentials decrease, final hosts are uniform cycles", 2 * corpus_set.len()))
}

fn criterion_6(instances: &[Instance]) -> Outcome {
    let mut checked = 0;
    let mut positive = 0;
    let mut hosts: Vec<Instance> = instances.to_vec();
    hosts.extend((0..200).map(|s| corpus::random_drawn_host(s, 7, 5)));
    for inst in &hosts {
        let (Ok(sweep), Ok(reference)) = (
            crossing_pairs_sweep(&inst.host),
            crossing_pairs_reference(&inst.host),
        ) else {
            continue;
        };
        if sweep != reference {
            return Err("sweep and reference crossing pairs differ".into());
        }
        let ledger = crossing_ledger(inst).map_err(|e| e.to_string())?;
        let reference = crossing_ledger_reference(inst).map_err(|e| e.to_string())?;
        if ledger != reference
            || ledger.cr2 != ledger.cr2_from_pairs()
            || ledger.cr2 != ledger.cr2_from_crossing_weights()
        {
            return Err("ledger identities fail".into());
        }
        positive += usize::from(ledger.cr2 > 0);
        checked += 1;
    }
    Ok(format!(
        "cr2 identities and sweep = reference on {checked} hosts ({positive} with cr2 > 0)"
    ))
}

fn criterion_7() -> Outcome {
    timed(Duration::from_secs(60), || {
        let mut cnfs = 0;
        for seed in 0..20 {
            let cnf = Cnf::random(seed, 3 + (seed as usize % 4), 1 + (seed as usize % 8));
            for cycle in [false, true] {
                let out = if cycle {
                    reduce::build_cycle_instance(&cnf)
                } else {
                    reduce::build_paths_instance(&cnf)
                }
                .map_err(|e| e.to_string())?;
                let problems = reduce::structural_check(&out);
                if !problems.is_empty() {
                    return Err(format!(
                        "seed {seed} cycle {cycle}: {}",
                        problems.join("; ")
                    ));
                }
            }
            cnfs += 1;
        }
        Ok(format!(
            "{cnfs} random 3CNFs pass K − cr2 = 13m, weight 22, rotation reversal and grid bounds"
        ))
    })
}

fn criterion_8() -> Outcome {
    timed(Duration::from_secs(300), || {
        let mut done = 0;
        let mut seed = 0u64;
        while done < 20 {
            seed += 1;
            let (cnf, tau) =
                Cnf::random_satisfiable(seed, 3 + (seed as usize % 4), 1 + (seed as usize % 6));
            let out = if seed.is_multiple_of(2) {
                reduce::build_cycle_instance(&cnf)
            } else {
                reduce::build_paths_instance(&cnf)
            }
            .map_err(|e| e.to_string())?;
            let witness = build_witness(&out, &tau).map_err(|e| format!("seed {seed}: {e}"))?;
            let total = evaluate(&out.instance, &witness.orders)
                .map_err(|e| e.to_string())?
                .total;
            if total != out.k {
                return Err(format!("seed {seed}: witness total {total}, K = {}", out.k));
            }
            for g in &witness.gadgets {
                let mut counts = g.strand_crossings.clone();
                counts.sort();
                if g.total != 13 || counts != [3, 5, 5] || !g.three_is_true_literal {
                    return Err(format!(
                        "seed {seed}: clause {} breakdown {:?}",
                        g.clause, g.strand_crossings
                    ));
                }
            }
            done += 1;
        }
        Ok(format!(
            "{done} satisfiable 3CNFs: witness total = K, every clause 13 = 3 + 5 + 5"
        ))
    })
}

fn criterion_9(instances: &[Instance]) -> Outcome {
    let mutants = [
        (
            "reversed boundary rotation",
            Conventions {
                boundary_rotation: BoundaryRotation::Reversed,
                ..Default::default()
            },
        ),
        (
            "same slot order at both ends",
            Conventions {
                slot: SlotConvention::SameAtBoth,
                ..Default::default()
            },
        ),
    ];
    let mut detected = Vec::new();
    for (name, conv) in mutants {
        let solve_bad = oracle_disagreements(instances, conv, false)?;
        let pairs = expansion_pairs(instances, conv)?;
        let inv_bad = invariance_failures(&pairs, conv)?;
        if solve_bad + inv_bad == 0 {
            return Err(format!("mutant '{name}' not detected"));
        }
        detected.push(format!(
            "{name}: {solve_bad} solve/oracle and {inv_bad} invariance failures"
        ));
    }
    Ok(format!(
        "{} mutants detected ({})",
        detected.len(),
        detected.join("; ")
    ))
}

fn median(mut xs: Vec<Duration>) -> Duration {
    xs.sort();
    xs[xs.len() / 2]
}

fn criterion_10() -> Outcome {
    let sizes = [10_000usize, 20_000, 40_000, 80_000];
    let mut times = Vec::new();
    let mut report = Vec::new();
    for &m in &sizes {
        let inst = corpus::perf_instance(m, 8, 42);
        let edges = inst.guest.edges.len();
        let mut runs = Vec::new();
        for _ in 0..5 {
            let start = Instant::now();
            let (cr, _) = solve_with(
                &inst,
                SolveOptions {
                    heavy_split: true,
                    ..Default::default()
                },
            )
            .map_err(|e| e.to_string())?;
            runs.push(start.elapsed());
            if cr != 7 {
                return Err(format!(
                    "perf instance with {edges} edges solved to {cr}, expected 7"
                ));
            }
        }
        let t = median(runs);
        report.push(format!("{edges}: {t:.2?}"));
        times.push(t);
    }
    let ratios: Vec<f64> = times
        .windows(2)
        .map(|w| w[1].as_secs_f64() / w[0].as_secs_f64())
        .collect();
    let text = format!(
        "{} (ratios {})",
        report.join(", "),
        ratios
            .iter()
            .map(|r| format!("{r:.2}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    if ratios.iter().all(|&r| r <= 2.5) {
        Ok(text)
    } else {
        Err(text)
    }
}

fn main() {
    let instances = random_instances(220);
    let results: Vec<(u32, Outcome)> = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3(&instances)),
        (4, criterion_4(&instances)),
        (5, criterion_5(&instances)),
        (6, criterion_6(&instances)),
        (7, criterion_7()),
        (8, criterion_8()),
        (9, criterion_9(&instances)),
        (10, criterion_10()),
    ];
    let mut failed = 0;
    for (n, r) in &results {
        match r {
            Ok(msg) => println!("PASS criterion {n}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {n}: {msg}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
