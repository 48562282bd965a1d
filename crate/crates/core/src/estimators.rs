//! Rankers: the row-sum moment method and the exhaustive MAP search.
//!
//! Label/rank convention: a ranking `pi` maps rank `r` to label `pi.at(r)`;
//! rank 0 is the strongest item.

use rayon::prelude::*;

use crate::error::{check_range, Error, Result};
use crate::model::{disagreement, Permutation, ProbMatrix};
use crate::sampler::{CountsMatrix, EnsembleMatrix};

/// Largest `n` accepted by the factorial-time MAP search.
pub const MAX_MAP_N: usize = 10;

/// Relative slack under which two log-likelihoods count as tied.
pub const MAP_TIE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    Moment,
    Map,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Self::Moment => "moment",
            Self::Map => "map",
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "moment" => Ok(Self::Moment),
            "map" => Ok(Self::Map),
            other => Err(format!("unknown estimator `{other}` (moment|map)")),
        }
    }
}

/// Debiased win-probability estimate and its row means.
///
/// `m_hat` is not clamped into `[0, 1]`; at small `m` entries can leave that range.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    n: usize,
    m_hat: Vec<f64>,
    row_scores: Vec<f64>,
    p_known: bool,
}

impl MomentEstimate {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m_hat(&self, i: usize, j: usize) -> f64 {
        self.m_hat[i * self.n + j]
    }

    pub fn row_scores(&self) -> &[f64] {
        &self.row_scores
    }

    pub fn p_known(&self) -> bool {
        self.p_known
    }
}

/// `m_hat = ensemble / (2p) + 1/2` off the diagonal, `1/2` on it. With `p`
/// unknown the estimator uses `p = 1`, which rescales the scores but keeps
/// their order.
pub fn moment_estimate(ens: &EnsembleMatrix, p: Option<f64>) -> Result<MomentEstimate> {
    if let Some(p) = p {
        check_range("p", p, p > 0.0 && p <= 1.0, "0 < p <= 1")?;
    }
    let denom = 2.0 * p.unwrap_or(1.0);
    let n = ens.n();
    let mut m_hat = vec![0.5; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m_hat[i * n + j] = ens.get(i, j) / denom + 0.5;
            }
        }
    }
    // Row means from the exact integer row sums, so that the score is a
    // monotone function of the same integer for every p.
    let scale = denom * ens.m() as f64 * n as f64;
    let row_scores = (0..n)
        .map(|i| 0.5 + ens.row_net(i) as f64 / scale)
        .collect();
    Ok(MomentEstimate {
        n,
        m_hat,
        row_scores,
        p_known: p.is_some(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingResult {
    /// Rank to label.
    pub pi_hat: Permutation,
    /// Per-label score; `pi_hat` lists labels by non-increasing score.
    pub scores: Vec<f64>,
    /// Moment ranker: adjacent equal scores after sorting. MAP: number of maximizers.
    pub tie_count: usize,
}

/// Stable descending sort; equal scores keep the smaller label first.
pub fn rank_scores(scores: &[f64]) -> RankingResult {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let tie_count = order
        .windows(2)
        .filter(|w| scores[w[0]] == scores[w[1]])
        .count();
    RankingResult {
        pi_hat: Permutation::new(order).expect("sorted indices form a permutation"),
        scores: scores.to_vec(),
        tie_count,
    }
}

pub fn rank_by_scores(est: &MomentEstimate) -> RankingResult {
    rank_scores(&est.row_scores)
}

fn check_map_inputs(c: &CountsMatrix, m: &ProbMatrix) -> Result<()> {
    if c.n() != m.n() {
        return Err(Error::SizeMismatch {
            expected: m.n(),
            got: c.n(),
        });
    }
    if m.n() > MAX_MAP_N {
        return Err(Error::TooLargeForMap {
            n: m.n(),
            max: MAX_MAP_N,
        });
    }
    Ok(())
}

/// Observation log-likelihood of a candidate ranking `pi` (rank to label):
/// `Σ_{u<v} wins[u][v]·ln M[r(u)][r(v)] + wins[v][u]·ln M[r(v)][r(u)]` with `r = pi⁻¹`.
pub fn log_likelihood(c: &CountsMatrix, m: &ProbMatrix, pi: &Permutation) -> Result<f64> {
    if c.n() != m.n() || pi.len() != m.n() {
        return Err(Error::SizeMismatch {
            expected: m.n(),
            got: if c.n() != m.n() { c.n() } else { pi.len() },
        });
    }
    let n = m.n();
    let r = pi.inverse();
    let mut total = 0.0;
    for u in 0..n {
        for v in u + 1..n {
            let (ru, rv) = (r.at(u), r.at(v));
            total +=
                c.wins(u, v) as f64 * m.get(ru, rv).ln() + c.wins(v, u) as f64 * m.get(rv, ru).ln();
        }
    }
    Ok(total)
}

/// Exhaustive enumeration in lexicographic order of `pi` (rank to label),
/// accumulating the likelihood rank by rank.
struct Enumerator<'a> {
    n: usize,
    c: &'a CountsMatrix,
    log_m: Vec<f64>,
}

impl<'a> Enumerator<'a> {
    fn new(c: &'a CountsMatrix, m: &ProbMatrix) -> Self {
        let n = m.n();
        let log_m = (0..n * n).map(|k| m.get(k / n, k % n).ln()).collect();
        Self { n, c, log_m }
    }

    /// Contribution of placing `label` at rank `b`, against ranks `0..b`.
    #[inline]
    fn step(&self, prefix: &[usize], label: usize) -> f64 {
        let n = self.n;
        let b = prefix.len();
        let mut s = 0.0;
        for (a, &u) in prefix.iter().enumerate() {
            s += self.c.wins(u, label) as f64 * self.log_m[a * n + b]
                + self.c.wins(label, u) as f64 * self.log_m[b * n + a];
        }
        s
    }

    /// Visits every permutation starting with `first`, in lexicographic order.
    fn visit_from(&self, first: usize, f: &mut impl FnMut(&[usize], f64)) {
        let mut prefix = Vec::with_capacity(self.n);
        let mut used = vec![false; self.n];
        prefix.push(first);
        used[first] = true;
        self.dfs(&mut prefix, &mut used, 0.0, f);
    }

    fn dfs(
        &self,
        prefix: &mut Vec<usize>,
        used: &mut [bool],
        acc: f64,
        f: &mut impl FnMut(&[usize], f64),
    ) {
        if prefix.len() == self.n {
            f(prefix, acc);
            return;
        }
        for label in 0..self.n {
            if used[label] {
                continue;
            }
            let next = acc + self.step(prefix, label);
            used[label] = true;
            prefix.push(label);
            self.dfs(prefix, used, next, f);
            prefix.pop();
            used[label] = false;
        }
    }
}

/// Result of the exhaustive search.
#[derive(Debug, Clone, PartialEq)]
pub struct MapSearch {
    pub best_log_likelihood: f64,
    /// Lexicographically smallest maximizer.
    pub first: Permutation,
    pub maximizers: usize,
}

fn tie_floor(best: f64) -> f64 {
    best - MAP_TIE_RTOL * best.abs().max(1.0)
}

/// Maximizer count, first maximizer, and (optionally) all maximizers for one leading label.
type FirstLabelScan = (usize, Option<Vec<usize>>, Vec<Vec<usize>>);

fn map_search_impl(
    c: &CountsMatrix,
    m: &ProbMatrix,
    collect: Option<&mut Vec<Permutation>>,
) -> Result<MapSearch> {
    check_map_inputs(c, m)?;
    let e = Enumerator::new(c, m);
    let n = m.n();
    // Pass 1: the global maximum (max is order independent).
    let best = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut best = f64::NEG_INFINITY;
            e.visit_from(first, &mut |_, ll| best = best.max(ll));
            best
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    let floor = tie_floor(best);
    // Pass 2: count maximizers per leading label, keep the first in lex order.
    let per_first: Vec<FirstLabelScan> = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut count = 0;
            let mut lead = None;
            let mut all = Vec::new();
            let keep = collect.is_some();
            e.visit_from(first, &mut |perm, ll| {
                if ll >= floor {
                    count += 1;
                    if lead.is_none() {
                        lead = Some(perm.to_vec());
                    }
                    if keep {
                        all.push(perm.to_vec());
                    }
                }
            });
            (count, lead, all)
        })
        .collect();
    let maximizers = per_first.iter().map(|(k, _, _)| k).sum();
    let first = per_first
        .iter()
        .find_map(|(_, lead, _)| lead.clone())
        .expect("at least one permutation attains the maximum");
    if let Some(out) = collect {
        for (_, _, all) in per_first {
            out.extend(all.into_iter().map(|p| Permutation::new(p).unwrap()));
        }
    }
    Ok(MapSearch {
        best_log_likelihood: best,
        first: Permutation::new(first).unwrap(),
        maximizers,
    })
}

/// Exhaustive MAP search under a uniform prior (so MAP is maximum likelihood).
/// `m` is the unshuffled ground-truth matrix; `c` counts the shuffled observations.
pub fn map_search(c: &CountsMatrix, m: &ProbMatrix) -> Result<MapSearch> {
    map_search_impl(c, m, None)
}

/// Every maximizer, in lexicographic order.
pub fn map_argmax_set(c: &CountsMatrix, m: &ProbMatrix) -> Result<Vec<Permutation>> {
    let mut out = Vec::new();
    map_search_impl(c, m, Some(&mut out))?;
    Ok(out)
}

/// MAP ranking with lexicographic tie-break. Scores are `-(rank)` per label so
/// the ranking sorts them non-increasingly.
pub fn map_rank(c: &CountsMatrix, m: &ProbMatrix) -> Result<RankingResult> {
    let s = map_search(c, m)?;
    let mut scores = vec![0.0; m.n()];
    for (rank, &label) in s.first.as_slice().iter().enumerate() {
        scores[label] = -(rank as f64);
    }
    Ok(RankingResult {
        pi_hat: s.first,
        scores,
        tie_count: s.maximizers,
    })
}

/// `F(i, j) = Σ_{l ∉ {i,j}} wins[i][l]·ln M[j][l] + losses[i][l]·ln(1 - M[j][l])`:
/// the likelihood of label `i`'s comparisons if it held rank `j`, with every
/// other label at its own rank.
pub fn score_f(c: &CountsMatrix, m: &ProbMatrix, i: usize, j: usize) -> f64 {
    (0..m.n())
        .filter(|&l| l != i && l != j)
        .map(|l| {
            c.wins(i, l) as f64 * m.get(j, l).ln()
                + c.losses(i, l) as f64 * (1.0 - m.get(j, l)).ln()
        })
        .sum()
}

/// Generalization of [`score_f`] to an arbitrary rank assignment `ranks`
/// (label to rank): label `label` placed at `rank`, opponents `v` at `ranks(v)`.
/// Summing it over every label at its own rank counts each pair twice, so
/// `Σ_u score_f_under(c, m, u, ranks(u), ranks) = 2 · log_likelihood`.
pub fn score_f_under(
    c: &CountsMatrix,
    m: &ProbMatrix,
    label: usize,
    rank: usize,
    ranks: &Permutation,
) -> f64 {
    (0..m.n())
        .filter(|&v| v != label)
        .map(|v| {
            let q = m.get(rank, ranks.at(v));
            c.wins(label, v) as f64 * q.ln() + c.losses(label, v) as f64 * (1.0 - q).ln()
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapFailure {
    pub occurred: bool,
    pub statistic: f64,
}

/// Whether swapping ranks `i1` and `i2` scores at least as well as the truth.
/// Counts are indexed by true rank (ground truth taken as the identity).
///
/// `statistic = Σ_{l ∉ {i1,i2}} (W[i1][l] - W[i2][l])·ln(M[i2][l]/M[i1][l])
///             + (L[i1][l] - L[i2][l])·ln((1-M[i2][l])/(1-M[i1][l]))`,
/// equal to `F(i1,i2) + F(i2,i1) - F(i1,i1) - F(i2,i2)` once the direct
/// `i1`-vs-`i2` comparison terms are dropped from `F(i1,i1)` and `F(i2,i2)`.
pub fn swap_failure_event(c: &CountsMatrix, m: &ProbMatrix, i1: usize, i2: usize) -> SwapFailure {
    assert_ne!(i1, i2, "swap failure needs two distinct ranks");
    let mut statistic = 0.0;
    for l in (0..m.n()).filter(|&l| l != i1 && l != i2) {
        // integer differences first: identical counts cancel exactly
        let dw = c.wins(i1, l) as i64 - c.wins(i2, l) as i64;
        let dl = c.losses(i1, l) as i64 - c.losses(i2, l) as i64;
        if dw != 0 {
            statistic += dw as f64 * (m.get(i2, l) / m.get(i1, l)).ln();
        }
        if dl != 0 {
            statistic += dl as f64 * ((1.0 - m.get(i2, l)) / (1.0 - m.get(i1, l))).ln();
        }
    }
    SwapFailure {
        occurred: statistic >= 0.0,
        statistic,
    }
}

pub fn exact_recovery(pi_hat: &Permutation, pi_star: &Permutation) -> Result<bool> {
    Ok(disagreement(pi_hat, pi_star)? == 0.0)
}
