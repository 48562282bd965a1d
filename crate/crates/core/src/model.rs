//! Win-probability matrices with strong stochastic transitivity, permutations,
//! and the gap statistics that measure how separable adjacent items are.

use std::fmt::Write as _;

use crate::error::{check_range, Error, Result};

/// Default clamp keeping every link output inside `[eps, 1 - eps]`.
pub const DEFAULT_EPS: f64 = 1e-6;

/// Quality scores `w[0] > w[1] > ... > w[n-1]`. Index is the true rank.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityVector(Vec<f64>);

impl QualityVector {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.len() < 2 {
            return Err(Error::TooFewItems(w.len()));
        }
        for (i, pair) in w.windows(2).enumerate() {
            // `!(a > b)` also rejects NaN
            if !(pair[0] > pair[1]) {
                return Err(Error::NotStrictlyDecreasing {
                    index: i,
                    left: pair[0],
                    right: pair[1],
                });
            }
        }
        Ok(Self(w))
    }

    /// `w[i] = scale * (n - i) / n`: equally spaced qualities with adjacent gap `scale / n`.
    pub fn uniform_gaps(n: usize, scale: f64) -> Result<Self> {
        let w = (0..n).map(|i| scale * (n - i) as f64 / n as f64).collect();
        Self::new(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Increasing map from quality difference to win probability.
#[derive(Debug, Clone, PartialEq)]
pub enum LinkFunction {
    /// `1 / (1 + exp(-scale * x))`
    Logistic { scale: f64 },
    /// `clamp(1/2 + slope * x, floor, ceiling)`
    LinearClamped {
        slope: f64,
        floor: f64,
        ceiling: f64,
    },
    /// Piecewise-linear interpolation through `(x, F(x))` breakpoints, constant
    /// beyond the first and last breakpoint.
    Table { points: Vec<(f64, f64)> },
}

impl LinkFunction {
    pub fn logistic(scale: f64) -> Self {
        Self::Logistic { scale }
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Logistic { scale } => {
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(Error::InvalidLink(format!(
                        "logistic scale {scale} must be > 0"
                    )));
                }
            }
            Self::LinearClamped {
                slope,
                floor,
                ceiling,
            } => {
                if !(*slope > 0.0 && slope.is_finite()) {
                    return Err(Error::InvalidLink(format!("slope {slope} must be > 0")));
                }
                if !(0.0 < *floor && *floor <= 0.5 && 0.5 <= *ceiling && *ceiling < 1.0) {
                    return Err(Error::InvalidLink(format!(
                        "need 0 < floor <= 1/2 <= ceiling < 1, got [{floor}, {ceiling}]"
                    )));
                }
            }
            Self::Table { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidLink(
                        "table needs at least 2 breakpoints".into(),
                    ));
                }
                for w in points.windows(2) {
                    if !(w[0].0 < w[1].0) {
                        return Err(Error::InvalidLink(
                            "table x must be strictly increasing".into(),
                        ));
                    }
                    if !(w[0].1 <= w[1].1) {
                        return Err(Error::InvalidLink(
                            "table values must be non-decreasing".into(),
                        ));
                    }
                }
                if points.iter().any(|&(_, y)| !(0.0..=1.0).contains(&y)) {
                    return Err(Error::InvalidLink("table values must lie in [0, 1]".into()));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Logistic { scale } => 1.0 / (1.0 + (-scale * x).exp()),
            Self::LinearClamped {
                slope,
                floor,
                ceiling,
            } => (0.5 + slope * x).clamp(*floor, *ceiling),
            Self::Table { points } => {
                let first = points[0];
                let last = points[points.len() - 1];
                if x <= first.0 {
                    return first.1;
                }
                if x >= last.0 {
                    return last.1;
                }
                let k = points.partition_point(|&(px, _)| px <= x);
                let (x0, y0) = points[k - 1];
                let (x1, y1) = points[k];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }
}

/// `n x n` win-probability matrix: `get(i, j)` is the probability that `i` beats `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    n: usize,
    entries: Vec<f64>,
    gamma_min: f64,
    gamma_max: f64,
    sst: bool,
    clamped: usize,
}

impl ProbMatrix {
    /// Builds `M[i][j] = clamp(F(w[i] - w[j]))` for `i < j` and mirrors it.
    pub fn build_sst(w: &QualityVector, link: &LinkFunction) -> Result<Self> {
        Self::build_sst_with_eps(w, link, DEFAULT_EPS)
    }

    pub fn build_sst_with_eps(w: &QualityVector, link: &LinkFunction, eps: f64) -> Result<Self> {
        link.validate()?;
        check_range("eps", eps, eps > 0.0 && eps < 0.5, "0 < eps < 1/2")?;
        let n = w.len();
        let w = w.as_slice();
        let mut entries = vec![0.5; n * n];
        let mut clamped = 0;
        for i in 0..n {
            for j in i + 1..n {
                let arg = w[i] - w[j];
                let raw = link.eval(arg);
                let v = raw.clamp(eps, 1.0 - eps);
                if !(v > 0.0 && v < 1.0) {
                    return Err(Error::DegenerateLink { arg, value: raw });
                }
                if v != raw {
                    clamped += 1;
                }
                entries[i * n + j] = v;
                entries[j * n + i] = 1.0 - v;
            }
        }
        if clamped > 0 {
            log::warn!(
                "{clamped} matrix entries clamped into [{eps}, {}]",
                1.0 - eps
            );
        }
        let mut m = Self::assemble(n, entries);
        m.clamped = clamped;
        if let Some((row, col)) = m.first_sst_violation() {
            return Err(Error::NotSst {
                row,
                next: row + 1,
                col,
            });
        }
        Ok(m)
    }

    /// Builds a matrix from its strict upper triangle, given row by row
    /// (`upper[i][k]` is `M[i][i + 1 + k]`).
    pub fn from_upper(n: usize, upper: &[Vec<f64>]) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewItems(n));
        }
        if upper.len() < n - 1 {
            return Err(Error::SizeMismatch {
                expected: n - 1,
                got: upper.len(),
            });
        }
        let mut entries = vec![0.5; n * n];
        for i in 0..n - 1 {
            if upper[i].len() != n - 1 - i {
                return Err(Error::SizeMismatch {
                    expected: n - 1 - i,
                    got: upper[i].len(),
                });
            }
            for (k, &v) in upper[i].iter().enumerate() {
                let j = i + 1 + k;
                if !(v > 0.0 && v < 1.0) {
                    return Err(Error::InvalidMatrix(format!(
                        "entry ({i},{j}) = {v} not in (0,1)"
                    )));
                }
                entries[i * n + j] = v;
                entries[j * n + i] = 1.0 - v;
            }
        }
        Ok(Self::assemble(n, entries))
    }

    /// Builds a matrix from full rows. Pairs must sum to one within `1e-9`;
    /// the lower triangle is then rewritten as `1 - upper` so the stored
    /// matrix is exactly antisymmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::TooFewItems(n));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::SizeMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            if (row[i] - 0.5).abs() > 1e-9 {
                return Err(Error::InvalidMatrix(format!(
                    "diagonal ({i},{i}) = {} != 1/2",
                    row[i]
                )));
            }
            for j in i + 1..n {
                if (row[j] + rows[j][i] - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidMatrix(format!(
                        "M[{i}][{j}] + M[{j}][{i}] = {} != 1",
                        row[j] + rows[j][i]
                    )));
                }
            }
        }
        let upper: Vec<Vec<f64>> = (0..n - 1).map(|i| rows[i][i + 1..].to_vec()).collect();
        Self::from_upper(n, &upper)
    }

    fn assemble(n: usize, entries: Vec<f64>) -> Self {
        let (mut gamma_min, mut gamma_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    gamma_min = gamma_min.min(entries[i * n + j]);
                    gamma_max = gamma_max.max(entries[i * n + j]);
                }
            }
        }
        let mut m = Self {
            n,
            entries,
            gamma_min,
            gamma_max,
            sst: false,
            clamped: 0,
        };
        m.sst = m.first_sst_violation().is_none();
        m
    }

    fn first_sst_violation(&self) -> Option<(usize, usize)> {
        (0..self.n - 1).find_map(|i| {
            (0..self.n)
                .find(|&l| self.get(i, l) < self.get(i + 1, l))
                .map(|l| (i, l))
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn gamma_min(&self) -> f64 {
        self.gamma_min
    }

    pub fn gamma_max(&self) -> f64 {
        self.gamma_max
    }

    /// `1/gamma_max + 1/gamma_min`.
    pub fn k0(&self) -> f64 {
        1.0 / self.gamma_max + 1.0 / self.gamma_min
    }

    /// True when rows are ordered by strength (`i < j` implies `M[i][l] >= M[j][l]`).
    pub fn is_sst(&self) -> bool {
        self.sst
    }

    /// Number of entries the link clamp touched during construction.
    pub fn clamped_entries(&self) -> usize {
        self.clamped
    }

    /// Plain-text form: `n` on the first line, then `n` rows of space-separated entries.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, first) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty matrix file".into(),
        })?;
        let n: usize = first.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("expected matrix size, got `{first}`"),
        })?;
        let mut rows = Vec::with_capacity(n);
        for (line, text) in lines {
            let row = text
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|_| Error::Parse {
                        line,
                        msg: format!("bad number `{t}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        if rows.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                got: rows.len(),
            });
        }
        Self::from_rows(&rows)
    }
}

/// Bijection on `0..n`. For the ground truth, `map[r]` is the observed label of
/// the item whose true rank is `r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &v in &map {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidPermutation(n));
            }
        }
        Ok(Self(map))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn swap(n: usize, a: usize, b: usize) -> Self {
        let mut p = Self::identity(n);
        p.0.swap(a, b);
        p
    }

    pub fn reversal(n: usize) -> Self {
        Self((0..n).rev().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn at(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &v) in self.0.iter().enumerate() {
            inv[v] = i;
        }
        Self(inv)
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(Self(other.0.iter().map(|&i| self.0[i]).collect()))
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &v)| i == v)
    }
}

/// Relabels `M` so that `M'[pi(i)][pi(j)] = M[i][j]`.
///
/// The result is the shuffled ground truth and is generally not SST-ordered.
pub fn apply_permutation(m: &ProbMatrix, pi: &Permutation) -> Result<ProbMatrix> {
    let n = m.n();
    if pi.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: pi.len(),
        });
    }
    let mut entries = vec![0.5; n * n];
    for i in 0..n {
        for j in 0..n {
            entries[pi.at(i) * n + pi.at(j)] = m.get(i, j);
        }
    }
    let mut out = ProbMatrix::assemble(n, entries);
    out.clamped = m.clamped;
    Ok(out)
}

/// Fraction of positions where the two permutations differ.
pub fn disagreement(p1: &Permutation, p2: &Permutation) -> Result<f64> {
    if p1.len() != p2.len() {
        return Err(Error::SizeMismatch {
            expected: p1.len(),
            got: p2.len(),
        });
    }
    let differ = p1
        .as_slice()
        .iter()
        .zip(p2.as_slice())
        .filter(|(a, b)| a != b)
        .count();
    Ok(differ as f64 / p1.len() as f64)
}

/// Signal-strength summaries of an SST matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapStats {
    /// Minimum over adjacent `i` of `(1/n) Σ_k (M[i][k] - M[i+1][k])`.
    pub bar_delta: f64,
    /// `(1/n)` times the minimum over adjacent `i` of `Σ_l (M[i][l] - M[i+1][l])²`.
    pub sq_gap_indicator: f64,
    /// Minimum over all `i < j` of `Σ_{l ∉ {i,j}} (M[i][l] - M[j][l])²`.
    pub min_pair_sq_gap: f64,
    pub k0: f64,
}

/// `Σ_{l ∉ {i,j}} (M[i][l] - M[j][l])²`.
pub fn pair_sq_gap(m: &ProbMatrix, i: usize, j: usize) -> f64 {
    (0..m.n())
        .filter(|&l| l != i && l != j)
        .map(|l| (m.get(i, l) - m.get(j, l)).powi(2))
        .sum()
}

/// Gap statistics of an unshuffled matrix. Rejects matrices whose rows are not
/// in strength order, since adjacency is defined by true rank.
pub fn gap_stats(m: &ProbMatrix) -> Result<GapStats> {
    if !m.is_sst() {
        let (row, col) = m.first_sst_violation().unwrap_or((0, 0));
        return Err(Error::NotSst {
            row,
            next: row + 1,
            col,
        });
    }
    let n = m.n();
    let nf = n as f64;
    let mut bar_delta = f64::INFINITY;
    let mut min_sq = f64::INFINITY;
    for i in 0..n - 1 {
        let (a, b) = (m.row(i), m.row(i + 1));
        let diff: f64 = a.iter().zip(b).map(|(x, y)| x - y).sum();
        let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        bar_delta = bar_delta.min(diff / nf);
        min_sq = min_sq.min(sq);
    }
    let mut min_pair_sq_gap = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            min_pair_sq_gap = min_pair_sq_gap.min(pair_sq_gap(m, i, j));
        }
    }
    Ok(GapStats {
        bar_delta,
        sq_gap_indicator: min_sq / nf,
        min_pair_sq_gap,
        k0: m.k0(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn half_table() -> LinkFunction {
        LinkFunction::Table {
            points: vec![(-1.0, 0.5), (1.0, 0.5)],
        }
    }

    #[test]
    fn logistic_two_items() {
        let w = QualityVector::new(vec![1.0, 0.0]).unwrap();
        let m = ProbMatrix::build_sst(&w, &LinkFunction::logistic(1.0)).unwrap();
        // mpmath, 40 digits
        assert!((m.get(0, 1) - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert!((m.get(1, 0) - 0.268_941_421_369_995_1).abs() < 1e-15);
        assert_eq!(m.get(0, 0), 0.5);
    }

    #[test]
    fn rejects_ties_and_short_vectors() {
        assert!(matches!(
            QualityVector::new(vec![0.5, 0.5]),
            Err(Error::NotStrictlyDecreasing { .. })
        ));
        assert!(matches!(
            QualityVector::new(vec![1.0]),
            Err(Error::TooFewItems(1))
        ));
        assert!(QualityVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(QualityVector::uniform_gaps(5, 0.0).is_err());
    }

    #[test]
    fn rejects_bad_links() {
        let w = QualityVector::new(vec![1.0, 0.0]).unwrap();
        assert!(ProbMatrix::build_sst(&w, &LinkFunction::logistic(0.0)).is_err());
        let table = LinkFunction::Table {
            points: vec![(0.0, 0.6), (1.0, 0.4)],
        };
        assert!(ProbMatrix::build_sst(&w, &table).is_err());
        // increasing table that puts stronger items below 1/2 breaks SST ordering
        let below = LinkFunction::Table {
            points: vec![(0.0, 0.2), (2.0, 0.3)],
        };
        assert!(matches!(
            ProbMatrix::build_sst(&w, &below),
            Err(Error::NotSst { .. })
        ));
    }

    #[test]
    fn clamp_is_counted() {
        let w = QualityVector::new(vec![100.0, 0.0]).unwrap();
        let m = ProbMatrix::build_sst(&w, &LinkFunction::logistic(1.0)).unwrap();
        assert_eq!(m.clamped_entries(), 1);
        assert_eq!(m.get(0, 1), 1.0 - DEFAULT_EPS);
        assert!((m.gamma_min() - DEFAULT_EPS).abs() < 1e-15);
    }

    #[test]
    fn linear_and_table_links() {
        let lin = LinkFunction::LinearClamped {
            slope: 0.1,
            floor: 0.05,
            ceiling: 0.95,
        };
        assert_eq!(lin.eval(0.0), 0.5);
        assert_eq!(lin.eval(100.0), 0.95);
        let table = LinkFunction::Table {
            points: vec![(0.0, 0.5), (1.0, 0.7), (2.0, 0.9)],
        };
        assert!((table.eval(0.5) - 0.6).abs() < 1e-15);
        assert!((table.eval(1.5) - 0.8).abs() < 1e-15);
        assert_eq!(table.eval(5.0), 0.9);
        assert_eq!(table.eval(-5.0), 0.5);
    }

    #[test]
    fn gap_stats_all_half() {
        let w = QualityVector::uniform_gaps(5, 1.0).unwrap();
        let m = ProbMatrix::build_sst(&w, &half_table()).unwrap();
        let g = gap_stats(&m).unwrap();
        assert_eq!(g.bar_delta, 0.0);
        assert_eq!(g.sq_gap_indicator, 0.0);
        assert_eq!(g.min_pair_sq_gap, 0.0);
        assert_eq!(g.k0, 4.0);
    }

    #[test]
    fn gap_stats_three_items() {
        let m = ProbMatrix::from_upper(3, &[vec![0.6, 0.6], vec![0.6]]).unwrap();
        let g = gap_stats(&m).unwrap();
        // rows: [.5 .6 .6], [.4 .5 .6], [.4 .4 .5]; both adjacent pairs differ by (.1+.1+0)/3
        let expected = (0.1 + 0.1 + 0.0) / 3.0;
        assert!((g.bar_delta - expected).abs() < 1e-12);
        assert!((g.sq_gap_indicator - 0.02 / 3.0).abs() < 1e-12);
        // adjacent pairs agree on their only shared opponent
        assert_eq!(g.min_pair_sq_gap, 0.0);
        assert!((pair_sq_gap(&m, 0, 2) - 0.04).abs() < 1e-12);
        assert!((g.k0 - (1.0 / 0.6 + 1.0 / 0.4)).abs() < 1e-12);
    }

    #[test]
    fn gap_stats_rejects_shuffled() {
        let w = QualityVector::uniform_gaps(4, 2.0).unwrap();
        let m = ProbMatrix::build_sst(&w, &LinkFunction::logistic(1.0)).unwrap();
        let shuffled = apply_permutation(&m, &Permutation::reversal(4)).unwrap();
        assert!(!shuffled.is_sst());
        assert!(matches!(gap_stats(&shuffled), Err(Error::NotSst { .. })));
    }

    #[test]
    fn permutation_examples() {
        let w = QualityVector::new(vec![1.0, 0.0]).unwrap();
        let m = ProbMatrix::build_sst(&w, &LinkFunction::logistic(1.0)).unwrap();
        assert_eq!(apply_permutation(&m, &Permutation::identity(2)).unwrap(), m);
        let s = apply_permutation(&m, &Permutation::swap(2, 0, 1)).unwrap();
        assert_eq!(s.get(1, 0), m.get(0, 1));
        assert!(apply_permutation(&m, &Permutation::identity(3)).is_err());

        let id = Permutation::identity(5);
        assert_eq!(disagreement(&id, &id).unwrap(), 0.0);
        assert_eq!(
            disagreement(&Permutation::identity(4), &Permutation::swap(4, 0, 1)).unwrap(),
            0.5
        );
        let r = disagreement(&Permutation::identity(3), &Permutation::reversal(3)).unwrap();
        assert!((r - 2.0 / 3.0).abs() < 1e-15);
        assert!(disagreement(&id, &Permutation::identity(4)).is_err());
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3, 1]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let w = QualityVector::uniform_gaps(4, 1.3).unwrap();
        let m = ProbMatrix::build_sst(&w, &LinkFunction::logistic(1.0)).unwrap();
        let back = ProbMatrix::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert!(ProbMatrix::from_text("2\n0.5 0.7\n0.2 0.5\n").is_err());
        assert!(ProbMatrix::from_text("3\n0.5 0.7 0.6\n0.3 0.5 0.6\n").is_err());
        assert!(matches!(
            ProbMatrix::from_text("x\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    fn arb_matrix() -> impl Strategy<Value = ProbMatrix> {
        (
            2usize..9,
            prop::collection::vec(0.01f64..1.0, 8),
            0.1f64..5.0,
            0usize..3,
        )
            .prop_map(|(n, gaps, scale, kind)| {
                let mut w = vec![0.0; n];
                for i in (0..n - 1).rev() {
                    w[i] = w[i + 1] + gaps[i];
                }
                let link = match kind {
                    0 => LinkFunction::logistic(scale),
                    1 => LinkFunction::LinearClamped {
                        slope: scale / 4.0,
                        floor: 0.02,
                        ceiling: 0.98,
                    },
                    _ => LinkFunction::Table {
                        points: vec![(0.0, 0.5), (0.5, 0.5 + scale / 20.0), (3.0, 0.8)],
                    },
                };
                ProbMatrix::build_sst(&QualityVector::new(w).unwrap(), &link).unwrap()
            })
    }

    fn arb_perm(n: usize) -> impl Strategy<Value = Permutation> {
        Just((0..n).collect::<Vec<_>>())
            .prop_shuffle()
            .prop_map(|v| Permutation::new(v).unwrap())
    }

    proptest! {
        #[test]
        fn constructed_matrices_are_valid(m in arb_matrix()) {
            let n = m.n();
            prop_assert!(m.is_sst());
            for i in 0..n {
                prop_assert_eq!(m.get(i, i), 0.5);
                for j in 0..n {
                    if i != j {
                        prop_assert_eq!(m.get(i, j) + m.get(j, i), 1.0);
                        prop_assert!(m.gamma_min() <= m.get(i, j) && m.get(i, j) <= m.gamma_max());
                    }
                    if i < j {
                        for l in 0..n {
                            prop_assert!(m.get(i, l) >= m.get(j, l));
                        }
                    }
                }
            }
            let g = gap_stats(&m).unwrap();
            prop_assert!(g.bar_delta >= 0.0);
            prop_assert!(g.k0 >= 4.0);
        }

        #[test]
        fn permuting_back_restores(m in arb_matrix(), seed in any::<u64>()) {
            let n = m.n();
            let mut v: Vec<usize> = (0..n).collect();
            crate::rng::CounterRng::new(seed).shuffle(&mut v);
            let p = Permutation::new(v).unwrap();
            let there = apply_permutation(&m, &p).unwrap();
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(there.get(p.at(i), p.at(j)), m.get(i, j));
                }
            }
            let back = apply_permutation(&there, &p.inverse()).unwrap();
            prop_assert_eq!(back.row(0), m.row(0));
            prop_assert!(back.is_sst());
            prop_assert!(p.compose(&p.inverse()).unwrap().is_identity());
        }

        #[test]
        fn disagreement_is_a_metric(a in arb_perm(6), b in arb_perm(6), c in arb_perm(6)) {
            let d = |x: &Permutation, y: &Permutation| disagreement(x, y).unwrap();
            prop_assert_eq!(d(&a, &b), d(&b, &a));
            prop_assert_eq!(d(&a, &b) == 0.0, a == b);
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-15);
            prop_assert!((0.0..=1.0).contains(&d(&a, &b)));
        }
    }
}
