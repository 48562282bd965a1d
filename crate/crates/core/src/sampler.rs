//! Random-design observation batches: each round, each pair is compared with
//! probability `p`, and the outcome is drawn from the (shuffled) win-probability
//! matrix.

use std::fmt::Write as _;

use crate::error::{check_range, Error, Result};
use crate::model::ProbMatrix;
use crate::rng::{bernoulli, derive, DrawKind};

/// When the observation mask is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskMode {
    /// Fresh mask every round.
    #[default]
    PerRound,
    /// One mask drawn up front and reused by every round.
    Fixed,
}

impl std::str::FromStr for MaskMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "per-round" => Ok(Self::PerRound),
            "fixed" => Ok(Self::Fixed),
            other => Err(format!("unknown mask mode `{other}` (per-round|fixed)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignParams {
    p: f64,
    m: usize,
    mask_mode: MaskMode,
    seed: u64,
}

impl DesignParams {
    pub fn new(p: f64, m: usize, mask_mode: MaskMode, seed: u64) -> Result<Self> {
        check_range("p", p, p > 0.0 && p <= 1.0, "0 < p <= 1")?;
        check_range("m", m as f64, m >= 1, "m >= 1")?;
        Ok(Self {
            p,
            m,
            mask_mode,
            seed,
        })
    }

    #[cfg(test)]
    pub(crate) fn never_observed(m: usize, seed: u64) -> Self {
        Self {
            p: 0.0,
            m,
            mask_mode: MaskMode::PerRound,
            seed,
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn mask_mode(&self) -> MaskMode {
        self.mask_mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    #[inline]
    fn mask_key(&self, round: usize) -> u64 {
        let round = match self.mask_mode {
            MaskMode::PerRound => round,
            MaskMode::Fixed => 0,
        };
        derive(derive(self.seed, DrawKind::Mask as u64), round as u64)
    }

    #[inline]
    fn outcome_key(&self, round: usize) -> u64 {
        derive(derive(self.seed, DrawKind::Outcome as u64), round as u64)
    }
}

/// `m` antisymmetric `{-1, 0, +1}` matrices; `+1` at `(i, j)` means `i` beat `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationBatch {
    n: usize,
    rounds: Vec<Vec<i8>>,
    design: DesignParams,
}

impl ObservationBatch {
    /// Builds a batch from explicit rounds, checking antisymmetry and the value set.
    pub fn from_rounds(n: usize, rounds: Vec<Vec<i8>>, design: DesignParams) -> Result<Self> {
        if rounds.len() != design.m {
            return Err(Error::SizeMismatch {
                expected: design.m,
                got: rounds.len(),
            });
        }
        for r in &rounds {
            if r.len() != n * n {
                return Err(Error::SizeMismatch {
                    expected: n * n,
                    got: r.len(),
                });
            }
            for i in 0..n {
                if r[i * n + i] != 0 {
                    return Err(Error::InvalidMatrix("nonzero diagonal in round".into()));
                }
                for j in i + 1..n {
                    let v = r[i * n + j];
                    if !(-1..=1).contains(&v) || r[j * n + i] != -v {
                        return Err(Error::InvalidMatrix(format!(
                            "round entry ({i},{j}) = {v} breaks antisymmetry"
                        )));
                    }
                }
            }
        }
        Ok(Self { n, rounds, design })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.rounds.len()
    }

    pub fn design(&self) -> &DesignParams {
        &self.design
    }

    #[inline]
    pub fn get(&self, round: usize, i: usize, j: usize) -> i8 {
        self.rounds[round][i * self.n + j]
    }

    pub fn round(&self, k: usize) -> &[i8] {
        &self.rounds[k]
    }

    /// Debug dump: one `round i j value` line per observed pair, `i < j`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, r) in self.rounds.iter().enumerate() {
            for i in 0..self.n {
                for j in i + 1..self.n {
                    let v = r[i * self.n + j];
                    if v != 0 {
                        let _ = writeln!(out, "{k} {i} {j} {v}");
                    }
                }
            }
        }
        out
    }
}

/// Draws a batch under the random design. Every draw is keyed by
/// `(seed, kind, round, pair)`, so the result does not depend on evaluation order.
pub fn sample_batch(m: &ProbMatrix, d: &DesignParams) -> ObservationBatch {
    let n = m.n();
    let rounds = (0..d.m)
        .map(|k| {
            let mask_key = d.mask_key(k);
            let outcome_key = d.outcome_key(k);
            let mut r = vec![0i8; n * n];
            for i in 0..n {
                for j in i + 1..n {
                    let pair = (i * n + j) as u64;
                    if !bernoulli(derive(mask_key, pair), d.p) {
                        continue;
                    }
                    let v = if bernoulli(derive(outcome_key, pair), m.get(i, j)) {
                        1
                    } else {
                        -1
                    };
                    r[i * n + j] = v;
                    r[j * n + i] = -v;
                }
            }
            r
        })
        .collect();
    ObservationBatch {
        n,
        rounds,
        design: *d,
    }
}

/// Upper-triangle observation pattern only (`out[i * n + j]`, `i < j`, true when
/// the pair was compared in at least one round). Uses the same mask draws as
/// [`sample_batch`] and skips the outcomes.
pub fn observed_pairs(n: usize, d: &DesignParams) -> Vec<bool> {
    let mut seen = vec![false; n * n];
    let rounds = match d.mask_mode {
        MaskMode::PerRound => d.m,
        MaskMode::Fixed => 1,
    };
    for k in 0..rounds {
        let key = d.mask_key(k);
        for i in 0..n {
            for j in i + 1..n {
                let idx = i * n + j;
                if !seen[idx] && bernoulli(derive(key, idx as u64), d.p) {
                    seen[idx] = true;
                }
            }
        }
    }
    seen
}

/// Entrywise mean of the rounds. Keeps the integer round sums alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMatrix {
    n: usize,
    m: usize,
    net: Vec<i64>,
    values: Vec<f64>,
}

impl EnsembleMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// `Σ_k rounds[k][i][j]`, i.e. `m * get(i, j)` without rounding.
    #[inline]
    pub fn net(&self, i: usize, j: usize) -> i64 {
        self.net[i * self.n + j]
    }

    pub fn row_net(&self, i: usize) -> i64 {
        self.net[i * self.n..(i + 1) * self.n].iter().sum()
    }
}

pub fn ensemble(batch: &ObservationBatch) -> EnsembleMatrix {
    let n = batch.n;
    let mut net = vec![0i64; n * n];
    for r in &batch.rounds {
        for (acc, &v) in net.iter_mut().zip(r) {
            *acc += v as i64;
        }
    }
    let m = batch.m();
    let values = net.iter().map(|&s| s as f64 / m as f64).collect();
    EnsembleMatrix { n, m, net, values }
}

/// Per-pair win and loss counts over the rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct CountsMatrix {
    n: usize,
    m: usize,
    wins: Vec<u32>,
    losses: Vec<u32>,
}

impl CountsMatrix {
    /// Builds counts from a wins matrix; losses are its transpose.
    pub fn from_wins(n: usize, m: usize, wins: Vec<u32>) -> Result<Self> {
        if wins.len() != n * n {
            return Err(Error::SizeMismatch {
                expected: n * n,
                got: wins.len(),
            });
        }
        let mut losses = vec![0; n * n];
        for i in 0..n {
            if wins[i * n + i] != 0 {
                return Err(Error::InvalidMatrix("nonzero diagonal count".into()));
            }
            for j in 0..n {
                losses[i * n + j] = wins[j * n + i];
                if i < j && (wins[i * n + j] + wins[j * n + i]) as usize > m {
                    return Err(Error::InvalidMatrix(format!(
                        "pair ({i},{j}) has more than m = {m} observations"
                    )));
                }
            }
        }
        Ok(Self { n, m, wins, losses })
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            wins: vec![0; n * n],
            losses: vec![0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn wins(&self, i: usize, j: usize) -> u32 {
        self.wins[i * self.n + j]
    }

    #[inline]
    pub fn losses(&self, i: usize, j: usize) -> u32 {
        self.losses[i * self.n + j]
    }

    /// Renames labels: label `u` here becomes label `relabel(u)` in the result.
    pub fn relabel(&self, relabel: &crate::model::Permutation) -> Self {
        let n = self.n;
        let mut wins = vec![0; n * n];
        let mut losses = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (relabel.at(i), relabel.at(j));
                wins[a * n + b] = self.wins[i * n + j];
                losses[a * n + b] = self.losses[i * n + j];
            }
        }
        Self {
            n,
            m: self.m,
            wins,
            losses,
        }
    }
}

pub fn counts(batch: &ObservationBatch) -> CountsMatrix {
    let n = batch.n;
    let mut wins = vec![0u32; n * n];
    let mut losses = vec![0u32; n * n];
    for r in &batch.rounds {
        for (idx, &v) in r.iter().enumerate() {
            match v {
                1 => wins[idx] += 1,
                -1 => losses[idx] += 1,
                _ => {}
            }
        }
    }
    CountsMatrix {
        n,
        m: batch.m(),
        wins,
        losses,
    }
}
