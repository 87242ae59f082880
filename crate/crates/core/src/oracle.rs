//! Brute-force minimum over all pipe order sets.

use itertools::Itertools;
use num_bigint::BigUint;
use rayon::prelude::*;
use thiserror::Error;

use crate::evaluate::{DiskModel, EvalError};
use crate::model::*;

pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("order space has {product} elements, above the budget of {budget}")]
    BudgetExceeded { product: BigUint, budget: u64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// `∏ w(uv)!` over all pipes.
pub fn order_space_size(emb: &Embedded) -> BigUint {
    let mut total = BigUint::from(1u32);
    for &w in emb.ledger.weights.values() {
        for k in 2..=w {
            total *= k;
        }
    }
    total
}

fn within_budget(emb: &Embedded, budget: u64) -> Result<u64, OracleError> {
    let product = order_space_size(emb);
    if product > BigUint::from(budget) {
        return Err(OracleError::BudgetExceeded { product, budget });
    }
    Ok(u64::try_from(&product).expect("fits under the budget"))
}

/// Position of every edge for the order set with mixed-radix index digits.
struct Enumeration<'a> {
    model: &'a DiskModel,
    /// All permutations of each pipe's preimage, lexicographic.
    perms: Vec<Vec<Vec<usize>>>,
    radix: Vec<u64>,
}

impl Enumeration<'_> {
    fn digits(&self, mut index: u64) -> Vec<u64> {
        let mut d = vec![0; self.radix.len()];
        for i in (0..self.radix.len()).rev() {
            d[i] = index % self.radix[i];
            index /= self.radix[i];
        }
        d
    }

    fn apply(&self, pipe: usize, digit: u64, rank: &mut [usize]) {
        for (r, &e) in self.perms[pipe][digit as usize].iter().enumerate() {
            rank[self.model.pipe_edges[pipe][e]] = r;
        }
    }

    /// Minimum and its first index over `[start, end)`.
    fn scan(&self, start: u64, end: u64) -> (u64, u64) {
        let model = self.model;
        let mut digits = self.digits(start);
        let mut rank = vec![0usize; model.edges.len()];
        for (p, &d) in digits.iter().enumerate() {
            self.apply(p, d, &mut rank);
        }
        let mut disk: Vec<u64> = (0..model.disk_count())
            .map(|d| model.disk_crossings(d, &rank))
            .collect();
        let mut sum: u64 = disk.iter().sum();
        let mut best = (u64::MAX, start);
        let mut dirty: Vec<usize> = Vec::new();
        let mut index = start;
        loop {
            if sum < best.0 {
                best = (sum, index);
            }
            index += 1;
            if index >= end {
                break;
            }
            // odometer step, last pipe fastest
            let mut p = digits.len();
            loop {
                p -= 1;
                digits[p] += 1;
                if digits[p] < self.radix[p] {
                    self.apply(p, digits[p], &mut rank);
                    dirty.extend(&model.pipe_disks[p]);
                    break;
                }
                digits[p] = 0;
                self.apply(p, 0, &mut rank);
                dirty.extend(&model.pipe_disks[p]);
            }
            dirty.sort_unstable();
            dirty.dedup();
            for &d in &dirty {
                let n = model.disk_crossings(d, &rank);
                sum = sum - disk[d] + n;
                disk[d] = n;
            }
            dirty.clear();
        }
        (best.0 + model.cr2, best.1)
    }
}

pub fn oracle_embedded_with(
    emb: &Embedded,
    budget: u64,
    conv: Conventions,
) -> Result<(u64, PipeOrderSet), OracleError> {
    let total = within_budget(emb, budget)?;
    let model = DiskModel::new(emb, conv)?;
    let perms: Vec<Vec<Vec<usize>>> = model
        .pipe_edges
        .iter()
        .map(|es| (0..es.len()).permutations(es.len()).collect())
        .collect();
    let radix: Vec<u64> = perms.iter().map(|p| p.len() as u64).collect();
    let en = Enumeration {
        model: &model,
        perms,
        radix,
    };
    let threads = rayon::current_num_threads() as u64;
    let chunk = (total / (threads * 8)).max(1024);
    let starts: Vec<u64> = (0..total).step_by(chunk as usize).collect();
    let (value, index) = starts
        .par_iter()
        .map(|&s| en.scan(s, (s + chunk).min(total)))
        .reduce(|| (u64::MAX, u64::MAX), |a, b| a.min(b));
    let digits = en.digits(index);
    let mut orders = PipeOrderSet::default();
    for (p, &d) in digits.iter().enumerate() {
        let order = en.perms[p][d as usize]
            .iter()
            .map(|&i| model.edges[model.pipe_edges[p][i]])
            .collect();
        orders.orders.insert(model.pipes[p], order);
    }
    Ok((value, orders))
}

pub fn oracle_embedded(emb: &Embedded, budget: u64) -> Result<(u64, PipeOrderSet), OracleError> {
    oracle_embedded_with(emb, budget, Conventions::default())
}

/// Minimum crossing number over all perturbations, with one optimal order set.
pub fn oracle(inst: &Instance, budget: u64) -> Result<(u64, PipeOrderSet), OracleError> {
    let emb = Embedded::from_instance(inst).map_err(EvalError::from)?;
    oracle_embedded(&emb, budget)
}

/// Do two instances have the same minimum?
pub fn oracle_invariance_check(
    before: &Embedded,
    after: &Embedded,
    budget: u64,
) -> Result<bool, OracleError> {
    Ok(oracle_embedded(before, budget)?.0 == oracle_embedded(after, budget)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::evaluate::evaluate;

    #[test]
    fn small_closed_forms() {
        assert_eq!(oracle(&corpus::tri6(), DEFAULT_BUDGET).unwrap().0, 1);
        assert_eq!(
            oracle(&corpus::identity_cycle(3), DEFAULT_BUDGET)
                .unwrap()
                .0,
            0
        );
        assert_eq!(
            oracle(&corpus::winding_cycle(4, 2), DEFAULT_BUDGET)
                .unwrap()
                .0,
            1
        );
    }

    #[test]
    fn witness_attains_minimum() {
        let inst = corpus::winding_cycle(3, 3);
        let (v, orders) = oracle(&inst, DEFAULT_BUDGET).unwrap();
        assert_eq!(v, 2);
        assert_eq!(evaluate(&inst, &orders).unwrap().total, v);
    }

    #[test]
    fn tie_break_is_first_in_lexicographic_order() {
        // the identity order set is index 0 and optimal for a weak embedding
        let inst = corpus::winding_cycle(3, 1);
        let (_, orders) = oracle(&inst, DEFAULT_BUDGET).unwrap();
        assert_eq!(orders, PipeOrderSet::identity(&inst.map));
    }

    #[test]
    fn budget_is_enforced() {
        let inst = corpus::winding_cycle(3, 8);
        // 8!^3 order sets
        match oracle(&inst, DEFAULT_BUDGET) {
            Err(OracleError::BudgetExceeded { product, .. }) => {
                assert_eq!(product, BigUint::from(40320u64).pow(3));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn relabeling_does_not_change_minimum() {
        let inst = corpus::tri6();
        let emb = Embedded::from_instance(&inst).unwrap();
        let mut perm = Relabeling::default();
        for (i, c) in emb.host.clusters.iter().enumerate() {
            perm.clusters.insert(*c, ClusterId(100 - i as u32));
        }
        for (i, e) in emb.guest.edges.keys().enumerate() {
            perm.edges.insert(*e, EdgeId(50 - i as u32));
        }
        let relabeled = emb.relabeled(&perm);
        assert_eq!(
            oracle_embedded(&emb, DEFAULT_BUDGET).unwrap().0,
            oracle_embedded(&relabeled, DEFAULT_BUDGET).unwrap().0
        );
    }
}
