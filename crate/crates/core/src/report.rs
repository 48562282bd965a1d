//! CSV rows and number formatting shared by the experiments and the CLI.
//!
//! Reals are written with 10 significant digits, `.` as decimal separator:
//! plain decimal notation for exponents in `[-5, 10)`, scientific otherwise.
//! Lines end in `\n`.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use crate::bounds::ThresholdSet;
use crate::connectivity::ConnectivityResult;
use crate::experiments::{CensusResult, FailureEventResult, SweepPoint, TrialRecord};

pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("`e` formatting has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..10).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let body = if exp >= 0 {
        let split = exp as usize + 1;
        let (int, frac) = digits.split_at(split);
        if frac.is_empty() {
            int.to_string()
        } else {
            format!("{int}.{frac}")
        }
    } else {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    };
    format!("{sign}{body}")
}

pub const THRESHOLDS_HEADER: &str =
    "n,m,p,k0,imposs_sq,achiev_sq,imposs_bar,achiev_bar,moment_bar,shah_bar";

pub fn thresholds_row(n: usize, m: usize, p: f64, k0: f64, t: &ThresholdSet) -> String {
    format!(
        "{n},{m},{},{},{},{},{},{},{},{}",
        fmt_num(p),
        fmt_num(k0),
        fmt_num(t.impossibility_sq),
        fmt_num(t.achievability_sq),
        fmt_num(t.impossibility_bar),
        fmt_num(t.achievability_bar),
        fmt_num(t.moment_bar),
        fmt_num(t.shah_lower_bar),
    )
}

/// Human-readable threshold table.
pub fn thresholds_table(n: usize, m: usize, p: f64, k0: f64, t: &ThresholdSet) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "n = {n}, m = {m}, p = {}, K0 = {}",
        fmt_num(p),
        fmt_num(k0)
    );
    for (label, v) in [
        ("impossibility (all-pairs squared gap)", t.impossibility_sq),
        ("achievability (all-pairs squared gap)", t.achievability_sq),
        ("impossibility (bar delta)", t.impossibility_bar),
        ("achievability (bar delta)", t.achievability_bar),
        ("moment method (bar delta)", t.moment_bar),
        ("minimax lower bound (bar delta)", t.shah_lower_bar),
    ] {
        let _ = writeln!(out, "{label:<40} {}", fmt_num(v));
    }
    out
}

pub const RANKING_HEADER: &str = "trial,estimator,n,m,p,scale,exact,disagreement,tie_count";

pub fn ranking_row(r: &TrialRecord, n: usize, m: usize, p: f64, scale: f64) -> String {
    format!(
        "{},{},{n},{m},{},{},{},{},{}",
        r.trial,
        r.estimator.name(),
        fmt_num(p),
        fmt_num(scale),
        r.exact as u8,
        fmt_num(r.disagreement),
        r.tie_count,
    )
}

pub const CONNECTIVITY_HEADER: &str = "n,m,c,p,trials,empirical,analytic,std_err";

pub fn connectivity_row(r: &ConnectivityResult) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        r.n,
        r.m,
        fmt_num(r.c),
        fmt_num(r.p),
        r.trials,
        fmt_num(r.empirical),
        fmt_num(r.analytic),
        fmt_num(r.std_err),
    )
}

pub const PHASE_HEADER: &str = "scale,bar_delta,sq_gap_indicator,min_pair_sq_gap,estimator,trials,success_rate,std_err,imposs_sq,achiev_sq,moment_bar,shah_bar";

/// Header plus one row per (point, estimator), points in the given order.
pub fn phase_csv(points: &[SweepPoint]) -> String {
    let mut out = format!("{PHASE_HEADER}\n");
    for pt in points {
        for r in &pt.rates {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                fmt_num(pt.scale),
                fmt_num(pt.gaps.bar_delta),
                fmt_num(pt.gaps.sq_gap_indicator),
                fmt_num(pt.gaps.min_pair_sq_gap),
                r.estimator.name(),
                r.trials,
                fmt_num(r.success_rate),
                fmt_num(r.std_err),
                fmt_num(pt.thresholds.impossibility_sq),
                fmt_num(pt.thresholds.achievability_sq),
                fmt_num(pt.thresholds.moment_bar),
                fmt_num(pt.thresholds.shah_lower_bar),
            );
        }
    }
    out
}

pub const FAILURE_HEADER: &str = "n,m,p,i1,i2,trials,empirical,std_err,pz_lower,chernoff_upper";

pub fn failure_row(r: &FailureEventResult) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        r.n,
        r.m,
        fmt_num(r.p),
        r.i1,
        r.i2,
        r.trials,
        fmt_num(r.empirical),
        fmt_num(r.std_err),
        fmt_num(r.pz_lower),
        fmt_num(r.chernoff_upper),
    )
}

pub const CENSUS_HEADER: &str = "n,m,p,scale,trials,mean_xn,prob_xn_positive,imposs_sq,achiev_sq";

/// `scale` is left empty when the matrix did not come from the uniform-gap family.
pub fn census_row(r: &CensusResult, scale: Option<f64>) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        r.n,
        r.m,
        fmt_num(r.p),
        scale.map(fmt_num).unwrap_or_default(),
        r.trials,
        fmt_num(r.mean_xn),
        fmt_num(r.prob_xn_positive),
        fmt_num(r.thresholds.impossibility_sq),
        fmt_num(r.thresholds.achievability_sq),
    )
}

/// Writes `text` to `dest`, or to standard output when `dest` is `None`.
pub fn emit(text: &str, dest: Option<&Path>) -> io::Result<()> {
    match dest {
        Some(path) => std::fs::write(path, text),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}
