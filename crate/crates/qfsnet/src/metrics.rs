//! Confusion counts, overlap metrics and the one-sided two-sample KS test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::Mask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub trp: u64,
    pub trn: u64,
    pub flp: u64,
    pub fln: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.trp + self.trn + self.flp + self.fln
    }
}

pub fn confusion(pred: &Mask, gt: &Mask) -> Result<Confusion> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::Shape(format!(
            "prediction {}x{} vs ground truth {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    let mut c = Confusion::default();
    for (&p, &g) in pred.values().iter().zip(gt.values()) {
        match (p, g) {
            (true, true) => c.trp += 1,
            (false, false) => c.trn += 1,
            (true, false) => c.flp += 1,
            (false, true) => c.fln += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub acc: f64,
    pub ds: f64,
    pub ppv: f64,
    pub ss: f64,
    /// Set when any denominator was zero and the metric was reported as 0.
    pub degenerate: bool,
}

pub fn metrics(c: &Confusion) -> MetricReport {
    let mut degenerate = false;
    let mut ratio = |num: u64, den: u64| {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let acc = ratio(c.trp + c.trn, c.total());
    let ds = ratio(2 * c.trp, 2 * c.trp + c.flp + c.fln);
    let ppv = ratio(c.trp, c.trp + c.flp);
    let ss = ratio(c.trp, c.trp + c.fln);
    MetricReport {
        acc,
        ds,
        ppv,
        ss,
        degenerate,
    }
}

pub fn mean_report(reports: &[MetricReport]) -> Option<MetricReport> {
    if reports.is_empty() {
        return None;
    }
    let n = reports.len() as f64;
    let sum = |f: fn(&MetricReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    Some(MetricReport {
        acc: sum(|r| r.acc),
        ds: sum(|r| r.ds),
        ppv: sum(|r| r.ppv),
        ss: sum(|r| r.ss),
        degenerate: reports.iter().any(|r| r.degenerate),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    #[serde(rename = "D")]
    pub d: f64,
    pub reject: bool,
    pub alpha: f64,
}

pub fn ks_critical(alpha: f64, n: usize, m: usize) -> f64 {
    (-alpha.ln() / 2.0).sqrt() * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// D = sup_x (F_a(x) − F_b(x)); rejects when D exceeds the asymptotic critical value.
pub fn ks_test_one_sided(a: &[f64], b: &[f64], alpha: f64) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha {alpha} not in (0,1)")));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite sample value".into()));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < n || j < m {
        let v = match (xs.get(i), ys.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < n && xs[i] == v {
            i += 1;
        }
        while j < m && ys[j] == v {
            j += 1;
        }
        d = d.max(i as f64 / n as f64 - j as f64 / m as f64);
    }
    Ok(KsResult {
        d,
        reject: d > ks_critical(alpha, n, m),
        alpha,
    })
}
