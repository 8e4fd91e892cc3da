//! Segmentation pipeline and parameter sweeps over an image corpus.

use std::cmp::Ordering;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{binarize, disk_cleanup, normalize, GrayImage, Mask, DEFAULT_RADIUS, DEFAULT_THRESH};
use crate::lattice::{run, with_threads, FuzzyField, NetworkConfig, RunTrace, UpdateMode, DEFAULT_DELTA};
use crate::metrics::{confusion, metrics, MetricReport};
use crate::pgm::read_pgm;
use crate::qsig::{boundary_set, histogram, BoundarySet, QSigParams, DEFAULT_LAMBDA, HIST_BINS};
use crate::schemes::SchemeId;

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentConfig {
    pub levels: usize,
    pub lambda: f64,
    pub scheme: SchemeId,
    pub set: BoundarySet,
    pub max_epochs: usize,
    pub tolerance: f64,
    pub mode: UpdateMode,
    pub t_exponent: u32,
    pub seed: u64,
    pub radius: usize,
    pub thresh: f64,
    pub delta: f64,
    pub threads: Option<usize>,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            levels: 8,
            lambda: DEFAULT_LAMBDA,
            scheme: SchemeId::Xi,
            set: BoundarySet::S2,
            max_epochs: 100,
            tolerance: 1e-6,
            mode: UpdateMode::Recompute,
            t_exponent: 3,
            seed: 0,
            radius: DEFAULT_RADIUS,
            thresh: DEFAULT_THRESH,
            delta: DEFAULT_DELTA,
            threads: None,
        }
    }
}

impl SegmentConfig {
    pub fn network(&self, field: &FuzzyField) -> Result<NetworkConfig> {
        let hist = histogram(field.values(), HIST_BINS);
        let tau = boundary_set(self.set, self.levels, &hist)?;
        let mut cfg = NetworkConfig::new(QSigParams::new(tau, self.lambda)?);
        cfg.scheme = self.scheme;
        cfg.max_epochs = self.max_epochs;
        cfg.tolerance = self.tolerance;
        cfg.update_mode = self.mode;
        cfg.t_exponent = self.t_exponent;
        cfg.seed = self.seed;
        cfg.delta = self.delta;
        cfg.threads = self.threads;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone)]
pub struct Segmentation {
    pub field: FuzzyField,
    pub mask: Mask,
    pub trace: RunTrace,
}

pub fn segment(img: &GrayImage, cfg: &SegmentConfig) -> Result<Segmentation> {
    let mu = normalize(img);
    let net = cfg.network(&mu)?;
    let (field, trace) = run(&mu, &net)?;
    let mask = disk_cleanup(&binarize(&field, cfg.thresh)?, cfg.radius)?;
    Ok(Segmentation { field, mask, trace })
}

pub fn evaluate(pred: &Mask, gt: &Mask) -> Result<MetricReport> {
    Ok(metrics(&confusion(pred, gt)?))
}

#[derive(Debug, Clone)]
pub struct CorpusItem {
    pub name: String,
    pub image: GrayImage,
    pub truth: Mask,
}

/// Loads every `NAME.pgm` that has a `NAME_gt.pgm` partner, sorted by name.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Vec<CorpusItem>> {
    let dir = dir.as_ref();
    let mut names: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter_map(|f| f.strip_suffix(".pgm").map(str::to_owned))
        .filter(|stem| !stem.ends_with("_gt"))
        .filter(|stem| dir.join(format!("{stem}_gt.pgm")).is_file())
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|name| {
            let image = read_pgm(dir.join(format!("{name}.pgm")))?;
            let truth = Mask::from_gray(&read_pgm(dir.join(format!("{name}_gt.pgm")))?);
            Ok(CorpusItem { name, image, truth })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub levels: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub schemes: Vec<SchemeId>,
    pub sets: Vec<BoundarySet>,
    pub base: SegmentConfig,
}

pub fn default_lambdas() -> Vec<f64> {
    (230..=240).map(|m| m as f64 / 1000.0).collect()
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            levels: vec![4, 6, 8],
            lambdas: default_lambdas(),
            schemes: vec![SchemeId::Xi],
            sets: vec![BoundarySet::S1, BoundarySet::S2],
            base: SegmentConfig::default(),
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() || self.lambdas.is_empty() || self.schemes.is_empty() || self.sets.is_empty() {
            return Err(Error::Config("sweep lists must be non-empty".into()));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
            return Err(Error::Config(format!("lambda {l} not in (0,1)")));
        }
        if let Some(l) = self.levels.iter().find(|l| **l < 2) {
            return Err(Error::Config(format!("levels {l} must be >= 2")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub image: String,
    pub levels: Option<usize>,
    pub lambda: Option<f64>,
    pub scheme: Option<SchemeId>,
    pub set: Option<BoundarySet>,
    pub acc: f64,
    pub ds: f64,
    pub ppv: f64,
    pub ss: f64,
    pub iterations: f64,
}

pub const MEAN_ROW: &str = "mean";

fn row_order(a: &SweepRow, b: &SweepRow) -> Ordering {
    a.image
        .cmp(&b.image)
        .then(a.levels.cmp(&b.levels))
        .then(a.lambda.unwrap_or(0.0).total_cmp(&b.lambda.unwrap_or(0.0)))
        .then(a.scheme.cmp(&b.scheme))
        .then(a.set.cmp(&b.set))
}

/// One row per (image, L, λ, scheme, set) in key order, then the column-mean row.
pub fn sweep(corpus: &[CorpusItem], spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    if corpus.is_empty() {
        return Err(Error::Config("empty corpus".into()));
    }
    let mut jobs = Vec::new();
    for item in corpus {
        for &levels in &spec.levels {
            for &lambda in &spec.lambdas {
                for &scheme in &spec.schemes {
                    for &set in &spec.sets {
                        jobs.push((item, levels, lambda, scheme, set));
                    }
                }
            }
        }
    }
    let mut rows = with_threads(spec.base.threads, || {
        jobs.par_iter()
            .map(|&(item, levels, lambda, scheme, set)| {
                let cfg = SegmentConfig {
                    levels,
                    lambda,
                    scheme,
                    set,
                    threads: None,
                    ..spec.base.clone()
                };
                let seg = segment(&item.image, &cfg)?;
                let r = evaluate(&seg.mask, &item.truth)?;
                Ok(SweepRow {
                    image: item.name.clone(),
                    levels: Some(levels),
                    lambda: Some(lambda),
                    scheme: Some(scheme),
                    set: Some(set),
                    acc: r.acc,
                    ds: r.ds,
                    ppv: r.ppv,
                    ss: r.ss,
                    iterations: seg.trace.iterations() as f64,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    rows.sort_by(row_order);
    let n = rows.len() as f64;
    let mean = |f: fn(&SweepRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let agg = SweepRow {
        image: MEAN_ROW.into(),
        levels: None,
        lambda: None,
        scheme: None,
        set: None,
        acc: mean(|r| r.acc),
        ds: mean(|r| r.ds),
        ppv: mean(|r| r.ppv),
        ss: mean(|r| r.ss),
        iterations: mean(|r| r.iterations),
    };
    rows.push(agg);
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads the `ds` column of a sweep report, skipping the aggregate row.
pub fn read_dice_column(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let mut rd = csv::Reader::from_path(path)?;
    let headers = rd.headers()?.clone();
    let ds = headers
        .iter()
        .position(|h| h == "ds")
        .ok_or_else(|| Error::Format("column ds missing".into()))?;
    let image = headers.iter().position(|h| h == "image");
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        if image.and_then(|i| rec.get(i)) == Some(MEAN_ROW) {
            continue;
        }
        let v = rec
            .get(ds)
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::Format(format!("bad ds value in row {:?}", rec.position())))?;
        out.push(v);
    }
    Ok(out)
}
