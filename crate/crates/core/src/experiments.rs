//! Monte Carlo harness: single trials, phase-transition sweeps, swap-failure
//! probability estimates, and the adjacent-pair failure census.
//!
//! Every trial is a pure function of `(master_seed, point index, trial index)`;
//! aggregation uses integer counters, so results do not depend on the number of
//! worker threads.

use rayon::prelude::*;

use crate::bounds::{self, ThresholdSet};
use crate::error::{check_range, Error, Result};
use crate::estimators::{
    exact_recovery, map_rank, moment_estimate, rank_by_scores, swap_failure_event, Estimator,
    MAX_MAP_N,
};
use crate::model::{
    apply_permutation, disagreement, gap_stats, GapStats, LinkFunction, Permutation, ProbMatrix,
    QualityVector, DEFAULT_EPS,
};
use crate::rng::{derive_path, CounterRng, DrawKind};
use crate::sampler::{counts, ensemble, sample_batch, DesignParams, MaskMode};

/// How the ground-truth permutation is chosen per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TruthMode {
    /// Fresh uniform permutation every trial.
    #[default]
    Uniform,
    /// One permutation drawn from the master seed, shared by all trials.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub link: LinkFunction,
    pub eps: f64,
    /// Multipliers of the quality gaps; `w[i] = scale * (n - i) / n`.
    pub scale_grid: Vec<f64>,
    pub trials_per_point: u64,
    pub estimators: Vec<Estimator>,
    pub master_seed: u64,
    pub mask_mode: MaskMode,
    pub truth_mode: TruthMode,
    /// Whether the moment ranker is told `p`.
    pub p_known: bool,
}

impl SweepConfig {
    pub fn new(n: usize, m: usize, p: f64, scale_grid: Vec<f64>, trials_per_point: u64) -> Self {
        Self {
            n,
            m,
            p,
            link: LinkFunction::logistic(1.0),
            eps: DEFAULT_EPS,
            scale_grid,
            trials_per_point,
            estimators: vec![Estimator::Moment],
            master_seed: 0,
            mask_mode: MaskMode::PerRound,
            truth_mode: TruthMode::Uniform,
            p_known: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::TooFewItems(self.n));
        }
        DesignParams::new(self.p, self.m, self.mask_mode, 0)?;
        self.link.validate()?;
        check_range(
            "trials",
            self.trials_per_point as f64,
            self.trials_per_point >= 1,
            "trials >= 1",
        )?;
        if self.estimators.is_empty() {
            return Err(Error::InvalidLink("no estimators requested".into()));
        }
        if self.estimators.contains(&Estimator::Map) && self.n > MAX_MAP_N {
            return Err(Error::TooLargeForMap {
                n: self.n,
                max: MAX_MAP_N,
            });
        }
        if self.scale_grid.is_empty() {
            return Err(Error::OutOfRange {
                name: "scales",
                value: 0.0,
                expected: "at least one scale",
            });
        }
        for w in self.scale_grid.windows(2) {
            check_range(
                "scales",
                w[1],
                w[0] < w[1],
                "strictly increasing scale grid",
            )?;
        }
        for &s in &self.scale_grid {
            check_range("scale", s, s > 0.0 && s.is_finite(), "scale > 0")?;
        }
        Ok(())
    }

    /// Ground-truth matrix (unshuffled) at `scale`.
    pub fn matrix(&self, scale: f64) -> Result<ProbMatrix> {
        let w = QualityVector::uniform_gaps(self.n, scale)?;
        ProbMatrix::build_sst_with_eps(&w, &self.link, self.eps)
    }
}

pub fn trial_seed(master: u64, point: usize, trial: u64) -> u64 {
    derive_path(master, &[DrawKind::Trial as u64, point as u64, trial])
}

/// Uniform random permutation of `0..n` keyed by `key`.
pub fn random_permutation(n: usize, key: u64) -> Permutation {
    let mut v: Vec<usize> = (0..n).collect();
    CounterRng::new(derive_path(key, &[DrawKind::Permutation as u64])).shuffle(&mut v);
    Permutation::new(v).expect("shuffle of 0..n")
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub estimator: Estimator,
    pub exact: bool,
    pub disagreement: f64,
    pub tie_count: usize,
    pub pi_hat: Permutation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub pi_star: Permutation,
    pub records: Vec<TrialRecord>,
}

impl TrialOutcome {
    pub fn exact(&self, e: Estimator) -> Option<bool> {
        self.records
            .iter()
            .find(|r| r.estimator == e)
            .map(|r| r.exact)
    }
}

fn run_trial_on(
    cfg: &SweepConfig,
    truth: &ProbMatrix,
    point: usize,
    trial: u64,
) -> Result<TrialOutcome> {
    let seed = trial_seed(cfg.master_seed, point, trial);
    let pi_star = match cfg.truth_mode {
        TruthMode::Uniform => random_permutation(cfg.n, seed),
        TruthMode::Fixed => random_permutation(cfg.n, cfg.master_seed),
    };
    let shuffled = apply_permutation(truth, &pi_star)?;
    let design = DesignParams::new(cfg.p, cfg.m, cfg.mask_mode, seed)?;
    let batch = sample_batch(&shuffled, &design);
    let mut records = Vec::with_capacity(cfg.estimators.len());
    for &e in &cfg.estimators {
        let ranking = match e {
            Estimator::Moment => {
                let p = cfg.p_known.then_some(cfg.p);
                rank_by_scores(&moment_estimate(&ensemble(&batch), p)?)
            }
            Estimator::Map => map_rank(&counts(&batch), truth)?,
        };
        records.push(TrialRecord {
            trial,
            estimator: e,
            exact: exact_recovery(&ranking.pi_hat, &pi_star)?,
            disagreement: disagreement(&ranking.pi_hat, &pi_star)?,
            tie_count: ranking.tie_count,
            pi_hat: ranking.pi_hat,
        });
    }
    Ok(TrialOutcome { pi_star, records })
}

/// One trial at `scale` (grid position `point`): build `M`, draw and apply the
/// ground truth, sample a batch, and run each requested estimator.
pub fn run_trial(cfg: &SweepConfig, point: usize, scale: f64, trial: u64) -> Result<TrialOutcome> {
    let truth = cfg.matrix(scale)?;
    run_trial_on(cfg, &truth, point, trial)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessRate {
    pub estimator: Estimator,
    pub successes: u64,
    pub trials: u64,
    pub success_rate: f64,
    pub std_err: f64,
}

impl SuccessRate {
    fn new(estimator: Estimator, successes: u64, trials: u64) -> Self {
        let r = successes as f64 / trials as f64;
        Self {
            estimator,
            successes,
            trials,
            success_rate: r,
            std_err: (r * (1.0 - r) / trials as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub scale: f64,
    pub gaps: GapStats,
    pub thresholds: ThresholdSet,
    pub rates: Vec<SuccessRate>,
}

impl SweepPoint {
    pub fn rate(&self, e: Estimator) -> Option<&SuccessRate> {
        self.rates.iter().find(|r| r.estimator == e)
    }
}

/// Runs every trial at every scale and aggregates exact-recovery rates.
pub fn phase_sweep(cfg: &SweepConfig) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    let mut points = Vec::with_capacity(cfg.scale_grid.len());
    for (idx, &scale) in cfg.scale_grid.iter().enumerate() {
        let truth = cfg.matrix(scale)?;
        let gaps = gap_stats(&truth)?;
        let thresholds = bounds::thresholds(cfg.n, cfg.m, cfg.p, gaps.k0)?;
        let k = cfg.estimators.len();
        let wins = (0..cfg.trials_per_point)
            .into_par_iter()
            .map(|t| {
                run_trial_on(cfg, &truth, idx, t)
                    .map(|o| o.records.iter().map(|r| r.exact as u64).collect::<Vec<_>>())
            })
            .try_reduce(
                || vec![0u64; k],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    Ok(a)
                },
            )?;
        let rates = cfg
            .estimators
            .iter()
            .zip(wins)
            .map(|(&e, s)| SuccessRate::new(e, s, cfg.trials_per_point))
            .collect();
        points.push(SweepPoint {
            scale,
            gaps,
            thresholds,
            rates,
        });
    }
    report_dominance(&points);
    Ok(points)
}

/// Diagnostic only: flags points where MAP trails the moment ranker by more
/// than three pooled standard errors.
pub fn dominance_violations(points: &[SweepPoint]) -> Vec<f64> {
    points
        .iter()
        .filter_map(|pt| {
            let (map, mom) = (pt.rate(Estimator::Map)?, pt.rate(Estimator::Moment)?);
            let pooled = (map.std_err.powi(2) + mom.std_err.powi(2)).sqrt();
            (map.success_rate < mom.success_rate - 3.0 * pooled).then_some(pt.scale)
        })
        .collect()
}

fn report_dominance(points: &[SweepPoint]) {
    for scale in dominance_violations(points) {
        log::warn!("MAP success rate below moment ranker at scale {scale}");
    }
}

/// Δ̄ of the uniform-gap family at `scale`.
pub fn bar_delta_at(n: usize, link: &LinkFunction, eps: f64, scale: f64) -> Result<f64> {
    let w = QualityVector::uniform_gaps(n, scale)?;
    Ok(gap_stats(&ProbMatrix::build_sst_with_eps(&w, link, eps)?)?.bar_delta)
}

/// Scale at which the uniform-gap family reaches `target` Δ̄, by bisection on
/// `[lo, hi]`. `None` when `target` is not bracketed.
pub fn scale_for_bar_delta(
    n: usize,
    link: &LinkFunction,
    eps: f64,
    target: f64,
    lo: f64,
    hi: f64,
) -> Result<Option<f64>> {
    let (mut lo, mut hi) = (lo, hi);
    if bar_delta_at(n, link, eps, lo)? > target || bar_delta_at(n, link, eps, hi)? < target {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bar_delta_at(n, link, eps, mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FailureEventResult {
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub i1: usize,
    pub i2: usize,
    pub trials: u64,
    pub empirical: f64,
    pub std_err: f64,
    pub pz_lower: f64,
    pub chernoff_upper: f64,
}

/// One draw of the swap-failure statistic from its C-variable representation:
/// `m` rounds, both sides, every opponent `l ∉ {i1, i2}`.
pub fn sample_c_sum(
    mat: &ProbMatrix,
    p: f64,
    m: usize,
    i1: usize,
    i2: usize,
    rng: &mut CounterRng,
) -> f64 {
    let mut stat = 0.0;
    for l in (0..mat.n()).filter(|&l| l != i1 && l != i2) {
        let (m1, m2) = (mat.get(i1, l), mat.get(i2, l));
        // branch counts per side; integer differences cancel exactly
        let (mut a, mut b) = (0i64, 0i64);
        for _ in 0..m {
            if rng.next_f64() < p {
                if rng.next_f64() < m1 {
                    a += 1;
                } else {
                    b += 1;
                }
            }
            if rng.next_f64() < p {
                if rng.next_f64() < m2 {
                    a -= 1;
                } else {
                    b -= 1;
                }
            }
        }
        if a != 0 {
            stat += a as f64 * (m2 / m1).ln();
        }
        if b != 0 {
            stat += b as f64 * ((1.0 - m2) / (1.0 - m1)).ln();
        }
    }
    stat
}

/// Monte Carlo estimate of `P(statistic >= 0)` for the swap of ranks `i1`, `i2`,
/// with the Paley-Zygmund (t = 1/4) and Chernoff bounds alongside.
pub fn failure_event_mc(
    mat: &ProbMatrix,
    p: f64,
    m: usize,
    i1: usize,
    i2: usize,
    trials: u64,
    seed: u64,
) -> Result<FailureEventResult> {
    check_range("trials", trials as f64, trials >= 1, "trials >= 1")?;
    let pz_lower = bounds::pz_lower_bound(mat, p, m, i1, i2, bounds::DEFAULT_PZ_T)?;
    let chernoff_upper = bounds::chernoff_upper_bound(mat, p, m, i1, i2)?;
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = CounterRng::new(derive_path(seed, &[DrawKind::CVariable as u64, t]));
            (sample_c_sum(mat, p, m, i1, i2, &mut rng) >= 0.0) as u64
        })
        .sum();
    let empirical = hits as f64 / trials as f64;
    Ok(FailureEventResult {
        n: mat.n(),
        m,
        p,
        i1,
        i2,
        trials,
        empirical,
        std_err: (empirical * (1.0 - empirical) / trials as f64).sqrt(),
        pz_lower,
        chernoff_upper,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensusResult {
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub trials: u64,
    /// Mean number of adjacent pairs whose swap scores at least as well as the truth.
    pub mean_xn: f64,
    /// Fraction of trials with at least one such pair.
    pub prob_xn_positive: f64,
    pub thresholds: ThresholdSet,
    /// Largest adjacent `Σ_{l ∉ {i,i+1}} Δ²`.
    pub max_adjacent_sq_gap: f64,
    /// Smallest adjacent `Σ_{l ∉ {i,i+1}} Δ²`.
    pub min_adjacent_sq_gap: f64,
}

/// Samples batches of the unshuffled `mat` (truth = identity) and counts the
/// adjacent swap-failure events per batch.
pub fn adjacent_failure_census(
    mat: &ProbMatrix,
    p: f64,
    m: usize,
    trials: u64,
    seed: u64,
    mask_mode: MaskMode,
) -> Result<CensusResult> {
    check_range("trials", trials as f64, trials >= 1, "trials >= 1")?;
    let n = mat.n();
    let designs = (0..trials)
        .map(|t| {
            DesignParams::new(
                p,
                m,
                mask_mode,
                derive_path(seed, &[DrawKind::Trial as u64, t]),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let (total, positive) = designs
        .par_iter()
        .map(|d| {
            let c = counts(&sample_batch(mat, d));
            let x = (0..n - 1)
                .filter(|&i| swap_failure_event(&c, mat, i, i + 1).occurred)
                .count() as u64;
            (x, (x > 0) as u64)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let adjacent: Vec<f64> = (0..n - 1)
        .map(|i| crate::model::pair_sq_gap(mat, i, i + 1))
        .collect();
    Ok(CensusResult {
        n,
        m,
        p,
        trials,
        mean_xn: total as f64 / trials as f64,
        prob_xn_positive: positive as f64 / trials as f64,
        thresholds: bounds::thresholds(n, m, p, mat.k0())?,
        max_adjacent_sq_gap: adjacent.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        min_adjacent_sq_gap: adjacent.iter().cloned().fold(f64::INFINITY, f64::min),
    })
}
