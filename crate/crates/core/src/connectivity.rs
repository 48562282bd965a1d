//! Observed-comparison graph and the connectivity limit of the ensembled
//! Erdős–Rényi graph: with `p = (ln n + c)/(m n)` the probability that the
//! union of `m` rounds is connected tends to `exp(-exp(-c))`.

use rayon::prelude::*;

use crate::error::{check_range, Result};
use crate::rng::{derive_path, DrawKind};
use crate::sampler::{observed_pairs, DesignParams, MaskMode, ObservationBatch};
use crate::union_find::UnionFind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservedGraph {
    n: usize,
    /// Sorted `(i, j)` with `i < j`.
    edges: Vec<(usize, usize)>,
}

impl ObservedGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut edges: Vec<(usize, usize)> = edges
            .into_iter()
            .filter(|&(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        Self { n, edges }
    }

    fn from_pattern(n: usize, seen: &[bool]) -> Self {
        let edges = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| seen[i * n + j])
            .collect();
        Self { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

/// Edge `(i, j)` is present iff some round compared `i` and `j`.
pub fn observed_graph(batch: &ObservationBatch) -> ObservedGraph {
    let n = batch.n();
    let mut seen = vec![false; n * n];
    for k in 0..batch.m() {
        for (s, &v) in seen.iter_mut().zip(batch.round(k)) {
            *s |= v != 0;
        }
    }
    ObservedGraph::from_pattern(n, &seen)
}

pub fn is_connected(g: &ObservedGraph) -> bool {
    if g.n <= 1 {
        return true;
    }
    let mut uf = UnionFind::new(g.n);
    for &(a, b) in &g.edges {
        if uf.union(a, b) && uf.components() == 1 {
            return true;
        }
    }
    uf.components() == 1
}

/// `p = (ln n + c) / (m n)`, rejected when outside `(0, 1]`.
pub fn connectivity_p(n: usize, m: usize, c: f64) -> Result<f64> {
    check_range("n", n as f64, n >= 2, "n >= 2")?;
    check_range("m", m as f64, m >= 1, "m >= 1")?;
    let p = ((n as f64).ln() + c) / (m as f64 * n as f64);
    check_range("p", p, p > 0.0 && p <= 1.0, "(ln n + c)/(m n) in (0, 1]")?;
    Ok(p)
}

/// `exp(-exp(-c))`.
pub fn connectivity_limit(c: f64) -> f64 {
    (-(-c).exp()).exp()
}

/// Design for trial `t` of an experiment seeded with `seed`.
pub fn trial_design(p: f64, m: usize, mode: MaskMode, seed: u64, t: u64) -> Result<DesignParams> {
    DesignParams::new(p, m, mode, derive_path(seed, &[DrawKind::Trial as u64, t]))
}

/// Number of connected graphs over `trials` independent mask-only draws.
pub fn count_connected(n: usize, m: usize, p: f64, trials: u64, seed: u64) -> Result<u64> {
    let designs = (0..trials)
        .map(|t| trial_design(p, m, MaskMode::PerRound, seed, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(designs
        .par_iter()
        .map(|d| is_connected(&ObservedGraph::from_pattern(n, &observed_pairs(n, d))) as u64)
        .sum())
}

/// Per-pair observation counts over `trials` mask-only draws (`out[i*n+j]`, `i < j`).
pub fn edge_observation_counts(
    n: usize,
    m: usize,
    p: f64,
    trials: u64,
    seed: u64,
) -> Result<Vec<u64>> {
    let designs = (0..trials)
        .map(|t| trial_design(p, m, MaskMode::PerRound, seed, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(designs
        .par_iter()
        .map(|d| observed_pairs(n, d))
        .fold(
            || vec![0u64; n * n],
            |mut acc, seen| {
                for (a, s) in acc.iter_mut().zip(seen) {
                    *a += s as u64;
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; n * n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectivityResult {
    pub n: usize,
    pub m: usize,
    pub c: f64,
    pub p: f64,
    pub trials: u64,
    pub empirical: f64,
    pub analytic: f64,
    pub std_err: f64,
}

pub fn connectivity_experiment(
    n: usize,
    m: usize,
    c: f64,
    trials: u64,
    seed: u64,
) -> Result<ConnectivityResult> {
    check_range("trials", trials as f64, trials >= 1, "trials >= 1")?;
    let p = connectivity_p(n, m, c)?;
    let hits = count_connected(n, m, p, trials, seed)?;
    let empirical = hits as f64 / trials as f64;
    Ok(ConnectivityResult {
        n,
        m,
        c,
        p,
        trials,
        empirical,
        analytic: connectivity_limit(c),
        std_err: (empirical * (1.0 - empirical) / trials as f64).sqrt(),
    })
}
