//! Closed-form bound machinery for exact recovery.
//!
//! The swap-failure statistic for ranks `i1`, `i2` is a sum, over rounds and
//! over opponents `l ∉ {i1, i2}`, of independent three-point "C variables":
//!
//! ```text
//! C_{i1,l} = ln(M[i2][l]/M[i1][l])          w.p. p·M[i1][l]
//!          = ln((1-M[i2][l])/(1-M[i1][l]))  w.p. p·(1-M[i1][l])
//!          = 0                              w.p. 1-p
//! ```
//!
//! and symmetrically for `C_{i2,l}` with the roles of the rows exchanged. The
//! functions here evaluate their moment generating functions (through the
//! `f_t`-divergence with `f_t(x) = x^t`), the Paley-Zygmund lower bound and
//! Chernoff upper bound on the failure probability, the tail bound for the
//! row-sum ranker, and the recovery thresholds. Natural log throughout.

use crate::error::{check_range, Error, Result};
use crate::model::{pair_sq_gap, ProbMatrix};

/// Exponent used by the impossibility argument.
pub const DEFAULT_PZ_T: f64 = 0.25;

/// Two Bernoulli parameters `m1 = M[i1][l]`, `m2 = M[i2][l]` and the observation probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliPair {
    pub m1: f64,
    pub m2: f64,
    pub p: f64,
}

impl BernoulliPair {
    pub fn new(m1: f64, m2: f64, p: f64) -> Result<Self> {
        check_range("m1", m1, m1 > 0.0 && m1 < 1.0, "0 < m1 < 1")?;
        check_range("m2", m2, m2 > 0.0 && m2 < 1.0, "0 < m2 < 1")?;
        check_range("p", p, p > 0.0 && p <= 1.0, "0 < p <= 1")?;
        Ok(Self { m1, m2, p })
    }

    /// `M[i2][l] / M[i1][l]`
    pub fn ratio_a(&self) -> f64 {
        self.m2 / self.m1
    }

    /// `(1 - M[i2][l]) / (1 - M[i1][l])`
    pub fn ratio_b(&self) -> f64 {
        (1.0 - self.m2) / (1.0 - self.m1)
    }

    /// `m2 (1 - m1) / (m1 (1 - m2))`
    pub fn odds_ratio(&self) -> f64 {
        self.ratio_a() / self.ratio_b()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `D(X || Y)` with `X ~ Bern(m1)`, `Y ~ Bern(m2)`.
    OneToTwo,
    /// `D(Y || X)`.
    TwoToOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    I1,
    I2,
}

/// `(m2/m1)^t m1 + ((1-m2)/(1-m1))^t (1-m1)` for `OneToTwo`, mirrored for `TwoToOne`.
pub fn f_t_divergence(pair: &BernoulliPair, t: f64, direction: Direction) -> f64 {
    let (a, b) = match direction {
        Direction::OneToTwo => (pair.m1, pair.m2),
        Direction::TwoToOne => (pair.m2, pair.m1),
    };
    (b / a).powf(t) * a + ((1.0 - b) / (1.0 - a)).powf(t) * (1.0 - a)
}

/// `E[exp(t C)] = 1 - p + p D_{f_t}` (the `i1` side uses `X || Y`, the `i2` side `Y || X`).
pub fn mgf_c(pair: &BernoulliPair, t: f64, which: Side) -> f64 {
    let dir = match which {
        Side::I1 => Direction::OneToTwo,
        Side::I2 => Direction::TwoToOne,
    };
    1.0 - pair.p + pair.p * f_t_divergence(pair, t, dir)
}

/// `E[C_{i1,l} + C_{i2,l}] = -p (m2 - m1) ln(odds ratio)`, never positive.
pub fn expected_c_sum(pair: &BernoulliPair) -> f64 {
    -pair.p * (pair.m2 - pair.m1) * pair.odds_ratio().ln()
}

/// Centered MGF of `C_{i1,l} + C_{i2,l}`:
/// `odds^{t p (m2 - m1)} · (1 - p + p D(X||Y)) · (1 - p + p D(Y||X))`.
pub fn centered_mgf_sum(pair: &BernoulliPair, t: f64) -> f64 {
    pair.odds_ratio().powf(t * pair.p * (pair.m2 - pair.m1))
        * mgf_c(pair, t, Side::I1)
        * mgf_c(pair, t, Side::I2)
}

/// Second-order expansion `1 + ½ t(t-1) (1/m1 + 1/(1-m1)) (m1 - m2)²` of `D(X || Y)`.
pub fn f_t_second_order(pair: &BernoulliPair, t: f64) -> f64 {
    let d = pair.m1 - pair.m2;
    1.0 + 0.5 * t * (t - 1.0) * (1.0 / pair.m1 + 1.0 / (1.0 - pair.m1)) * d * d
}

fn check_design(p: f64, m: usize) -> Result<()> {
    check_range("p", p, p > 0.0 && p <= 1.0, "0 < p <= 1")?;
    check_range("m", m as f64, m >= 1, "m >= 1")
}

fn check_pair(mat: &ProbMatrix, i1: usize, i2: usize) -> Result<()> {
    let n = mat.n();
    if i1 >= n || i2 >= n || i1 == i2 {
        return Err(Error::OutOfRange {
            name: "pair",
            value: i1.max(i2) as f64,
            expected: "two distinct indices below n",
        });
    }
    Ok(())
}

/// `ln Ψ(t) = m Σ_{l ∉ {i1,i2}} [ln E e^{t C_{i1,l}} + ln E e^{t C_{i2,l}}]`,
/// the log-MGF of the swap-failure statistic over `m` i.i.d. rounds.
pub fn log_psi(mat: &ProbMatrix, p: f64, m: usize, i1: usize, i2: usize, t: f64) -> Result<f64> {
    check_design(p, m)?;
    check_pair(mat, i1, i2)?;
    let mut per_round = 0.0;
    for l in (0..mat.n()).filter(|&l| l != i1 && l != i2) {
        let pair = BernoulliPair::new(mat.get(i1, l), mat.get(i2, l), p)?;
        per_round += mgf_c(&pair, t, Side::I1).ln() + mgf_c(&pair, t, Side::I2).ln();
    }
    Ok(m as f64 * per_round)
}

/// Paley-Zygmund lower bound `(Ψ(t) - 1)² / Ψ(2t)` on the swap-failure
/// probability, clipped to `[0, 1]`.
///
/// The underlying inequality takes `θ = 1/Ψ(t)`, which lies in `(0, 1)` only
/// when `Ψ(t) > 1`; see [`pz_theta_in_range`].
pub fn pz_lower_bound(
    mat: &ProbMatrix,
    p: f64,
    m: usize,
    i1: usize,
    i2: usize,
    t: f64,
) -> Result<f64> {
    check_range("t", t, t > 0.0, "t > 0")?;
    let lt = log_psi(mat, p, m, i1, i2, t)?;
    let l2t = log_psi(mat, p, m, i1, i2, 2.0 * t)?;
    let num = lt.exp_m1();
    if num == 0.0 {
        return Ok(0.0);
    }
    let bound = (2.0 * num.abs().ln() - l2t).exp();
    Ok(bound.clamp(0.0, 1.0))
}

/// Whether `θ = 1/Ψ(t)` is a valid Paley-Zygmund level, i.e. `Ψ(t) > 1`.
pub fn pz_theta_in_range(
    mat: &ProbMatrix,
    p: f64,
    m: usize,
    i1: usize,
    i2: usize,
    t: f64,
) -> Result<bool> {
    Ok(log_psi(mat, p, m, i1, i2, t)? > 0.0)
}

/// `exp(-8 m p S / K0)` for a squared-gap sum `S`.
pub fn chernoff_from_sum(m: usize, p: f64, sq_gap_sum: f64, k0: f64) -> f64 {
    (-8.0 * m as f64 * p * sq_gap_sum / k0).exp()
}

/// Chernoff-style upper bound `exp(-8 m p Σ_{l ∉ {i1,i2}} Δ² / K0)` on the
/// swap-failure probability. Derived with `Δ → 0` approximations, so it is an
/// asymptotic reference curve.
pub fn chernoff_upper_bound(
    mat: &ProbMatrix,
    p: f64,
    m: usize,
    i1: usize,
    i2: usize,
) -> Result<f64> {
    check_design(p, m)?;
    check_pair(mat, i1, i2)?;
    Ok(chernoff_from_sum(m, p, pair_sq_gap(mat, i1, i2), mat.k0()))
}

/// `min(1, n(n-1)/2 · exp(-8 m p S_min / K0))`.
pub fn union_bound_from(n: usize, m: usize, p: f64, min_pair_sq_gap: f64, k0: f64) -> f64 {
    let pairs = (n * (n - 1)) as f64 / 2.0;
    (pairs * chernoff_from_sum(m, p, min_pair_sq_gap, k0)).min(1.0)
}

/// Union bound over all pairs, using the smallest pairwise squared-gap sum.
pub fn union_bound_failure(mat: &ProbMatrix, p: f64, m: usize) -> Result<f64> {
    check_design(p, m)?;
    let n = mat.n();
    let mut min_sq = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            min_sq = min_sq.min(pair_sq_gap(mat, i, j));
        }
    }
    Ok(union_bound_from(n, m, p, min_sq, mat.k0()))
}

/// `κ_{i,j} = 1/(8 m n²) Σ_k ((2M[i][k] - 1)² - (2M[j][k] - 1)²)`.
pub fn kappa(mat: &ProbMatrix, m: usize, i: usize, j: usize) -> f64 {
    let n = mat.n() as f64;
    let s: f64 = (0..mat.n())
        .map(|k| (2.0 * mat.get(i, k) - 1.0).powi(2) - (2.0 * mat.get(j, k) - 1.0).powi(2))
        .sum();
    s / (8.0 * m as f64 * n * n)
}

/// `G_{i,j} = (1/n) Σ_k (M[i][k] - M[j][k])`.
pub fn row_gap(mat: &ProbMatrix, i: usize, j: usize) -> f64 {
    let s: f64 = mat.row(i).iter().zip(mat.row(j)).map(|(a, b)| a - b).sum();
    s / mat.n() as f64
}

/// Tail bound `exp(-G² / (4κ + 1/(m n p)))` on the probability that the
/// row-sum ranker orders `i` no higher than `j`, for `i` truly stronger.
pub fn moment_tail_bound(mat: &ProbMatrix, p: f64, m: usize, i: usize, j: usize) -> Result<f64> {
    check_design(p, m)?;
    check_pair(mat, i, j)?;
    let g = row_gap(mat, i, j);
    if g < 0.0 {
        return Err(Error::BoundInapplicable(format!(
            "row gap G = {g} < 0: item {i} is not stronger than {j}"
        )));
    }
    let denom = 4.0 * kappa(mat, m, i, j) + 1.0 / (m as f64 * mat.n() as f64 * p);
    if denom <= 0.0 {
        return Err(Error::BoundInapplicable(format!(
            "4κ + 1/(mnp) = {denom} is not positive"
        )));
    }
    Ok((-g * g / denom).exp().min(1.0))
}

/// The four recovery thresholds evaluated at `(n, m, p, K0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSet {
    /// `4 ln n / (K0 m p)`: below this the all-pairs squared gap makes exact ranking impossible.
    pub impossibility_sq: f64,
    /// `K0 ln n / (4 m p)`: above this MAP recovers the ranking.
    pub achievability_sq: f64,
    /// `(2/n) √(ln n / (K0 m p))`
    pub impossibility_bar: f64,
    /// `√(K0 ln n / (4 n m p))`
    pub achievability_bar: f64,
    /// `√(ln n / (m n p))`: sufficient gap for the row-sum ranker.
    pub moment_bar: f64,
    /// `(1/70) √(ln n / (m n p))`: minimax lower bound.
    pub shah_lower_bar: f64,
}

pub fn thresholds(n: usize, m: usize, p: f64, k0: f64) -> Result<ThresholdSet> {
    check_range("n", n as f64, n >= 2, "n >= 2")?;
    check_design(p, m)?;
    check_range("k0", k0, k0 >= 4.0 && k0.is_finite(), "k0 >= 4")?;
    let ln_n = (n as f64).ln();
    let (nf, mp) = (n as f64, m as f64 * p);
    let moment_bar = (ln_n / (mp * nf)).sqrt();
    Ok(ThresholdSet {
        impossibility_sq: 4.0 * ln_n / (k0 * mp),
        achievability_sq: k0 * ln_n / (4.0 * mp),
        impossibility_bar: 2.0 / nf * (ln_n / (k0 * mp)).sqrt(),
        achievability_bar: (k0 * ln_n / (4.0 * nf * mp)).sqrt(),
        moment_bar,
        shah_lower_bar: moment_bar / 70.0,
    })
}
