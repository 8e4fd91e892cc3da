//! Multi-class quantum sigmoidal activation and class-boundary sets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 0.239;
pub const GRAY_SCALE: f64 = 255.0;

#[derive(Debug, Clone, PartialEq)]
pub struct QSigParams {
    pub lambda: f64,
    pub h: f64,
    pub eta: f64,
    /// Gray-level span the unit input range is mapped onto inside the exponent.
    pub scale: f64,
    tau: Vec<f64>,
}

impl QSigParams {
    pub fn new(tau: Vec<f64>, lambda: f64) -> Result<Self> {
        Self::with(tau, lambda, 1.0, 0.0, GRAY_SCALE)
    }

    pub fn with(tau: Vec<f64>, lambda: f64, h: f64, eta: f64, scale: f64) -> Result<Self> {
        validate_tau(&tau)?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda {lambda} must be > 0")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("step h {h} must be > 0")));
        }
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::Domain(format!("eta {eta} must be >= 0")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Domain(format!("scale {scale} must be > 0")));
        }
        Ok(Self {
            lambda,
            h,
            eta,
            scale,
            tau,
        })
    }

    pub fn levels(&self) -> usize {
        self.tau.len() - 1
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    /// Normalized multi-class response for a pixel whose neighborhood mass is `q_n`.
    ///
    /// A zero mass yields the κ→∞ limit, 0.
    pub fn response(&self, x: f64, q_n: f64) -> f64 {
        if q_n <= 0.0 {
            return 0.0;
        }
        let hx = self.h * x;
        let mut acc = 0.0;
        for w in self.tau.windows(2) {
            let gap = w[1] - w[0];
            let e = (-self.lambda * ((hx - w[0]) * self.scale - self.eta)).exp();
            acc += gap * q_n / (q_n + gap * e);
        }
        acc.clamp(0.0, 1.0)
    }
}

fn validate_tau(tau: &[f64]) -> Result<()> {
    if tau.len() < 3 {
        return Err(Error::Boundary(format!(
            "need at least 3 boundaries (L >= 2), got {}",
            tau.len()
        )));
    }
    if tau[0] != 0.0 || tau[tau.len() - 1] != 1.0 {
        return Err(Error::Boundary("boundaries must start at 0 and end at 1".into()));
    }
    if tau.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Boundary("boundaries must be strictly increasing".into()));
    }
    Ok(())
}

pub fn qsig_single(x: f64, params: &QSigParams, kappa: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("input {x}")));
    }
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("kappa {kappa} must be > 0")));
    }
    Ok(1.0 / (kappa + (-params.lambda * (x * params.h - params.eta)).exp()))
}

pub fn kappa_for_class(q_n: f64, tau_hi: f64, tau_lo: f64) -> Result<f64> {
    if !(tau_hi > tau_lo) {
        return Err(Error::Boundary(format!("tau_hi {tau_hi} <= tau_lo {tau_lo}")));
    }
    if !(q_n > 0.0) {
        return Err(Error::Domain(format!("Q_N {q_n} must be > 0")));
    }
    Ok(q_n / (tau_hi - tau_lo))
}

/// Sum of the L class sigmoids divided by its supremum Σ 1/κ_ϑ.
pub fn qsig_multiclass(x: f64, params: &QSigParams, q_n: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("input {x}")));
    }
    if !(q_n > 0.0) {
        return Err(Error::Domain(format!("Q_N {q_n} must be > 0")));
    }
    Ok(params.response(x, q_n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BoundarySet {
    S1,
    S2,
    S3,
    S4,
}

impl BoundarySet {
    pub const ALL: [BoundarySet; 4] = [Self::S1, Self::S2, Self::S3, Self::S4];
}

impl fmt::Display for BoundarySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::S1 => "S1",
            Self::S2 => "S2",
            Self::S3 => "S3",
            Self::S4 => "S4",
        };
        f.write_str(s)
    }
}

impl FromStr for BoundarySet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "S1" => Ok(Self::S1),
            "S2" => Ok(Self::S2),
            "S3" => Ok(Self::S3),
            "S4" => Ok(Self::S4),
            _ => Err(Error::Config(format!("unknown boundary set {s:?} (S1|S2|S3|S4)"))),
        }
    }
}

pub const HIST_BINS: usize = 256;

/// Counts of values in [0,1] over `bins` equal-width bins.
pub fn histogram(values: &[f64], bins: usize) -> Vec<u64> {
    let mut h = vec![0u64; bins];
    for &v in values {
        let b = ((v * bins as f64) as usize).min(bins - 1);
        h[b] += 1;
    }
    h
}

pub fn boundary_set(kind: BoundarySet, levels: usize, hist: &[u64]) -> Result<Vec<f64>> {
    if levels < 2 {
        return Err(Error::Boundary(format!("L = {levels} must be >= 2")));
    }
    if kind == BoundarySet::S1 {
        return Ok((0..=levels).map(|v| v as f64 / levels as f64).collect());
    }
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::DegenerateHistogram);
    }
    let inner = match kind {
        BoundarySet::S1 => unreachable!(),
        BoundarySet::S2 => quantile_cuts(levels, hist),
        BoundarySet::S3 => otsu_cuts(levels, hist),
        BoundarySet::S4 => kmeans_cuts(levels, hist),
    };
    Ok(finish(inner))
}

const NUDGE: f64 = 1e-6;

fn finish(inner: Vec<f64>) -> Vec<f64> {
    let l = inner.len() + 1;
    let mut t = Vec::with_capacity(l + 1);
    t.push(0.0);
    t.extend(inner);
    t.push(1.0);
    for i in 1..l {
        if t[i] <= t[i - 1] {
            t[i] = t[i - 1] + NUDGE;
        }
    }
    for i in (1..l).rev() {
        let cap = t[i + 1] - NUDGE;
        if t[i] > cap {
            t[i] = cap;
        }
    }
    t
}

fn quantile_cuts(levels: usize, hist: &[u64]) -> Vec<f64> {
    let n = hist.len();
    let total: u64 = hist.iter().sum();
    let mut cum = Vec::with_capacity(n);
    let mut s = 0u64;
    for &c in hist {
        s += c;
        cum.push(s);
    }
    (1..levels)
        .map(|v| {
            // first bin whose cumulative mass reaches v/L
            let idx = cum
                .iter()
                .position(|&c| c as u128 * levels as u128 >= v as u128 * total as u128)
                .unwrap_or(n - 1);
            (idx + 1) as f64 / n as f64
        })
        .collect()
}

fn otsu_cuts(levels: usize, hist: &[u64]) -> Vec<f64> {
    let n = hist.len();
    let mut w = vec![0.0; n + 1];
    let mut s = vec![0.0; n + 1];
    for (i, &c) in hist.iter().enumerate() {
        let center = (i as f64 + 0.5) / n as f64;
        w[i + 1] = w[i] + c as f64;
        s[i + 1] = s[i] + c as f64 * center;
    }
    let score = |a: usize, b: usize| {
        let wt = w[b] - w[a];
        if wt > 0.0 {
            let st = s[b] - s[a];
            st * st / wt
        } else {
            0.0
        }
    };
    // best[k][j]: best score splitting bins [0, j) into k+1 classes
    let neg = f64::NEG_INFINITY;
    let mut best = vec![vec![neg; n + 1]; levels];
    let mut arg = vec![vec![0usize; n + 1]; levels];
    for (j, b) in best[0].iter_mut().enumerate().skip(1) {
        *b = score(0, j);
    }
    for k in 1..levels {
        for j in (k + 1)..=n {
            for i in k..j {
                let v = best[k - 1][i] + score(i, j);
                if v > best[k][j] {
                    best[k][j] = v;
                    arg[k][j] = i;
                }
            }
        }
    }
    let mut cuts = vec![0usize; levels - 1];
    let mut j = n;
    for k in (1..levels).rev() {
        let i = arg[k][j];
        cuts[k - 1] = i;
        j = i;
    }
    // a cut can slide across empty bins without changing the score; center it
    cuts.into_iter()
        .map(|c| {
            let (mut lo, mut hi) = (c, c);
            while lo > 0 && hist[lo - 1] == 0 {
                lo -= 1;
            }
            while hi < n && hist[hi] == 0 {
                hi += 1;
            }
            (lo + hi) as f64 / (2 * n) as f64
        })
        .collect()
}

fn kmeans_cuts(levels: usize, hist: &[u64]) -> Vec<f64> {
    let n = hist.len();
    let centers_of_bins: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let q = quantile_cuts(levels, hist);
    let mut c: Vec<f64> = (0..levels)
        .map(|k| {
            let lo = if k == 0 { 0.0 } else { q[k - 1] };
            let hi = if k == levels - 1 { 1.0 } else { q[k] };
            0.5 * (lo + hi)
        })
        .collect();
    for _ in 0..200 {
        let mut sw = vec![0.0; levels];
        let mut sx = vec![0.0; levels];
        let mut k = 0;
        for (i, &x) in centers_of_bins.iter().enumerate() {
            while k + 1 < levels && (x - c[k + 1]).abs() < (x - c[k]).abs() {
                k += 1;
            }
            sw[k] += hist[i] as f64;
            sx[k] += hist[i] as f64 * x;
        }
        let next: Vec<f64> = (0..levels)
            .map(|k| if sw[k] > 0.0 { sx[k] / sw[k] } else { c[k] })
            .collect();
        let mut sorted = next.clone();
        sorted.sort_by(f64::total_cmp);
        let moved = sorted
            .iter()
            .zip(&c)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        c = sorted;
        if moved < 1e-12 {
            break;
        }
    }
    c.windows(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_examples() {
        let p = QSigParams::with(vec![0.0, 0.5, 1.0], 1.0, 1.0, 0.0, 1.0).unwrap();
        assert!((qsig_single(0.0, &p, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let p = QSigParams::with(vec![0.0, 0.5, 1.0], 0.239, 1.0, 0.0, 1.0).unwrap();
        let want = 1.0 / (2.0 + (-2.39f64).exp());
        assert!((qsig_single(10.0, &p, 2.0).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.4781).abs() < 1e-4);
        assert!((qsig_single(1e6, &p, 2.0).unwrap() - 0.5).abs() < 1e-12);
        assert!(qsig_single(f64::INFINITY, &p, 2.0).is_err());
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa_for_class(8.0, 0.25, 0.0).unwrap(), 32.0);
        assert_eq!(kappa_for_class(4.0, 0.125, 0.0).unwrap(), 32.0);
        let tau = boundary_set(BoundarySet::S1, 8, &[]).unwrap();
        for w in tau.windows(2) {
            assert!((kappa_for_class(8.0, w[1], w[0]).unwrap() - 64.0).abs() < 1e-12);
        }
        assert!(matches!(kappa_for_class(1.0, 0.2, 0.2), Err(Error::Boundary(_))));
        assert!(matches!(kappa_for_class(0.0, 0.5, 0.2), Err(Error::Domain(_))));
    }

    #[test]
    fn multiclass_matches_raw_sum_over_supremum() {
        let tau = vec![0.0, 0.2, 0.45, 1.0];
        let p = QSigParams::new(tau.clone(), 0.239).unwrap();
        for &x in &[0.0, 0.1, 0.3, 0.7, 1.0] {
            let q_n = 5.3;
            let mut raw = 0.0;
            let mut sup = 0.0;
            for w in tau.windows(2) {
                let k = q_n / (w[1] - w[0]);
                raw += 1.0 / (k + (-0.239 * ((x - w[0]) * 255.0)).exp());
                sup += 1.0 / k;
            }
            let got = qsig_multiclass(x, &p, q_n).unwrap();
            assert!((got - raw / sup).abs() < 1e-12);
        }
        assert!(qsig_multiclass(0.5, &p, 0.0).is_err());
    }

    #[test]
    fn staircase_two_levels() {
        let p = QSigParams::with(vec![0.0, 0.5, 1.0], 25.0, 1.0, 0.0, GRAY_SCALE).unwrap();
        let ys: Vec<f64> = (0..10_000)
            .map(|i| p.response(i as f64 / 9_999.0, 8.0))
            .collect();
        assert_eq!(count_plateaus(&ys), 2);
    }

    pub(crate) fn count_plateaus(ys: &[f64]) -> usize {
        let mut count = 0;
        let mut run = 0;
        for w in ys.windows(2) {
            if (w[1] - w[0]).abs() < 1e-9 {
                run += 1;
                if run == 5 {
                    count += 1;
                }
            } else {
                run = 0;
            }
        }
        count
    }

    #[test]
    fn uniform_boundaries() {
        assert_eq!(
            boundary_set(BoundarySet::S1, 4, &[]).unwrap(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
    }

    #[test]
    fn quantile_half_mass() {
        let hist = [1, 1, 1, 0, 0, 0, 1, 1, 1, 0];
        let t = boundary_set(BoundarySet::S2, 2, &hist).unwrap();
        assert!((t[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn degenerate_histogram_rejected() {
        let mut h = vec![0u64; 256];
        h[40] = 100;
        for k in [BoundarySet::S2, BoundarySet::S3, BoundarySet::S4] {
            assert!(matches!(boundary_set(k, 3, &h), Err(Error::DegenerateHistogram)));
        }
    }

    #[test]
    fn parse_sets() {
        assert_eq!("s3".parse::<BoundarySet>().unwrap(), BoundarySet::S3);
        assert!("S9".parse::<BoundarySet>().is_err());
    }
}
