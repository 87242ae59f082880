//! 3CNF formulas in DIMACS form, with seeded generators.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Truth value of each variable, by 1-based index.
pub type Assignment = BTreeMap<u32, bool>;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CnfError {
    #[error("line {0}: missing or malformed `p cnf` header")]
    Header(usize),
    #[error("line {line}: bad literal `{token}`")]
    Literal { line: usize, token: String },
    #[error("literal {0} names a variable outside 1..={1}")]
    OutOfRange(i64, u32),
    #[error("header announces {expected} clauses, found {found}")]
    ClauseCount { expected: usize, found: usize },
    #[error("clause ends without the terminating 0")]
    Unterminated,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: u32,
    /// Nonzero DIMACS literals: `j` is `x_j`, `-j` is its negation.
    pub clauses: Vec<Vec<i32>>,
}

impl Cnf {
    pub fn parse_dimacs(text: &str) -> Result<Cnf, CnfError> {
        let mut header: Option<(u32, usize)> = None;
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if line.starts_with('p') {
                let parts: Vec<&str> = line.split_whitespace().collect();
                let parsed = match parts.as_slice() {
                    ["p", "cnf", v, c] => v.parse().ok().zip(c.parse().ok()),
                    _ => None,
                };
                header = Some(parsed.ok_or(CnfError::Header(i + 1))?);
                continue;
            }
            let (n, _) = header.ok_or(CnfError::Header(i + 1))?;
            for tok in line.split_whitespace() {
                let lit: i64 = tok.parse().map_err(|_| CnfError::Literal {
                    line: i + 1,
                    token: tok.to_string(),
                })?;
                if lit == 0 {
                    clauses.push(std::mem::take(&mut current));
                } else if lit.unsigned_abs() > n as u64 {
                    return Err(CnfError::OutOfRange(lit, n));
                } else {
                    current.push(lit as i32);
                }
            }
        }
        let (num_vars, expected) = header.ok_or(CnfError::Header(0))?;
        if !current.is_empty() {
            return Err(CnfError::Unterminated);
        }
        if clauses.len() != expected {
            return Err(CnfError::ClauseCount {
                expected,
                found: clauses.len(),
            });
        }
        Ok(Cnf { num_vars, clauses })
    }

    /// `m` clauses on 3 distinct variables each, with random signs.
    pub fn random(seed: u64, n: usize, m: usize) -> Cnf {
        assert!(n >= 3, "need at least 3 variables");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let clauses = (0..m).map(|_| random_clause(&mut rng, n)).collect();
        Cnf {
            num_vars: n as u32,
            clauses,
        }
    }

    /// A random formula with a planted satisfying assignment.
    pub fn random_satisfiable(seed: u64, n: usize, m: usize) -> (Cnf, Assignment) {
        assert!(n >= 3, "need at least 3 variables");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tau: Assignment = (1..=n as u32).map(|j| (j, rng.gen())).collect();
        let mut clauses = Vec::with_capacity(m);
        while clauses.len() < m {
            let c = random_clause(&mut rng, n);
            if c.iter().any(|&l| literal_value(l, &tau)) {
                clauses.push(c);
            }
        }
        (
            Cnf {
                num_vars: n as u32,
                clauses,
            },
            tau,
        )
    }

    pub fn is_satisfied_by(&self, tau: &Assignment) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|&l| literal_value(l, tau)))
    }
}

fn random_clause(rng: &mut ChaCha8Rng, n: usize) -> Vec<i32> {
    let mut vars = sample(rng, n, 3).into_vec();
    vars.sort_unstable();
    vars.into_iter()
        .map(|v| {
            if rng.gen() {
                v as i32 + 1
            } else {
                -(v as i32 + 1)
            }
        })
        .collect()
}

/// Unassigned variables count as false.
pub fn literal_value(lit: i32, tau: &Assignment) -> bool {
    tau.get(&lit.unsigned_abs()).copied().unwrap_or(false) == (lit > 0)
}

impl fmt::Display for Cnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p cnf {} {}", self.num_vars, self.clauses.len())?;
        for c in &self.clauses {
            for l in c {
                write!(f, "{l} ")?;
            }
            writeln!(f, "0")?;
        }
        Ok(())
    }
}
