//! Trinity-layer lattice network: phases, propagation, loss and the epoch loop.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsig::QSigParams;
use crate::schemes::{scheme_gamma, SchemeId};

/// Phase scale applied to ω and γ at use.
pub const PHASE_K: f64 = 2.0 * PI / 3.0;

/// Neighbor offsets (dx, dy), clockwise from north-west.
pub const OFFSETS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
];

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyField {
    width: usize,
    height: usize,
    mu: Vec<f64>,
}

impl FuzzyField {
    pub fn new(width: usize, height: usize, mu: Vec<f64>) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(Error::Shape(format!("field {width}x{height} is smaller than 3x3")));
        }
        if mu.len() != width * height {
            return Err(Error::Shape(format!(
                "{} values for a {width}x{height} field",
                mu.len()
            )));
        }
        if let Some(v) = mu.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("membership {v} not in [0,1]")));
        }
        Ok(Self { width, height, mu })
    }

    pub fn constant(width: usize, height: usize, c: f64) -> Result<Self> {
        Self::new(width, height, vec![c; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.mu
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.mu[y * self.width + x]
    }

    fn same_shape(&self, other: &FuzzyField) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    fn neigh(&self, i: usize) -> [f64; 8] {
        let (x, y) = ((i % self.width) as isize, (i / self.width) as isize);
        let mut out = [0.0; 8];
        for (o, (dx, dy)) in out.iter_mut().zip(OFFSETS) {
            let nx = reflect(x + dx, self.width);
            let ny = reflect(y + dy, self.height);
            *o = self.mu[ny * self.width + nx];
        }
        out
    }

    fn blend(&self, next: &FuzzyField, alpha: f64) -> FuzzyField {
        if alpha == 1.0 {
            return next.clone();
        }
        let mu = self
            .mu
            .iter()
            .zip(&next.mu)
            .map(|(a, b)| (a + alpha * (b - a)).clamp(0.0, 1.0))
            .collect();
        FuzzyField { mu, ..*self }
    }
}

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let r = if i < 0 {
        -i
    } else if i >= n {
        2 * (n - 1) - i
    } else {
        i
    };
    r as usize
}

/// The 8 neighbors of (x, y) in clockwise order from north-west, mirrored at borders.
pub fn neighborhood(field: &FuzzyField, x: usize, y: usize) -> Result<[f64; 8]> {
    if x >= field.width {
        return Err(Error::Index { index: x, len: field.width });
    }
    if y >= field.height {
        return Err(Error::Index { index: y, len: field.height });
    }
    Ok(field.neigh(y * field.width + x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    Forward,
    Reverse,
    #[default]
    Parallel,
}

fn map_pixels<T, F>(n: usize, schedule: Schedule, f: F) -> Vec<T>
where
    T: Copy + Default + Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match schedule {
        Schedule::Forward => (0..n).map(f).collect(),
        Schedule::Reverse => {
            let mut out = vec![T::default(); n];
            for i in (0..n).rev() {
                out[i] = f(i);
            }
            out
        }
        Schedule::Parallel => (0..n).into_par_iter().with_min_len(256).map(f).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFields {
    width: usize,
    height: usize,
    pub omega: Vec<[f64; 8]>,
    pub gamma: Vec<f64>,
}

impl PhaseFields {
    pub fn new(width: usize, height: usize, omega: Vec<[f64; 8]>, gamma: Vec<f64>) -> Result<Self> {
        if omega.len() != width * height || gamma.len() != width * height {
            return Err(Error::Shape(format!(
                "phase fields of length {}/{} for {width}x{height}",
                omega.len(),
                gamma.len()
            )));
        }
        Ok(Self {
            width,
            height,
            omega,
            gamma,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn check(&self, field: &FuzzyField) -> Result<()> {
        if self.width != field.width || self.height != field.height {
            return Err(Error::Shape(format!(
                "phases {}x{} vs field {}x{}",
                self.width, self.height, field.width, field.height
            )));
        }
        Ok(())
    }

    fn blend(&self, next: &PhaseFields, alpha: f64) -> PhaseFields {
        if alpha == 1.0 {
            return next.clone();
        }
        let omega = self
            .omega
            .iter()
            .zip(&next.omega)
            .map(|(a, b)| std::array::from_fn(|k| a[k] + alpha * (b[k] - a[k])))
            .collect();
        let gamma = self
            .gamma
            .iter()
            .zip(&next.gamma)
            .map(|(a, b)| a + alpha * (b - a))
            .collect();
        PhaseFields {
            width: self.width,
            height: self.height,
            omega,
            gamma,
        }
    }
}

/// ω_{i,k} = 1 − (μ_i − μ_{i,k}) for every pixel and neighbor.
pub fn weight_phases(field: &FuzzyField) -> Vec<[f64; 8]> {
    weight_phases_with(field, Schedule::Parallel)
}

fn weight_phases_with(field: &FuzzyField, schedule: Schedule) -> Vec<[f64; 8]> {
    map_pixels(field.len(), schedule, |i| {
        let c = field.mu[i];
        field.neigh(i).map(|m| 1.0 - (c - m))
    })
}

/// Per-neighbor activation phase: the scheme aggregate divided by the neighborhood size.
pub fn activation_phase(neigh: &[f64; 8], scheme: SchemeId) -> f64 {
    scheme_gamma(neigh, scheme) / 8.0
}

/// Phases of the link `src → dst`: ω from the source layer, γ from the destination layer.
pub fn link_phases(src: &FuzzyField, dst: &FuzzyField, scheme: SchemeId) -> Result<PhaseFields> {
    link_phases_with(src, dst, scheme, Schedule::Parallel)
}

pub fn link_phases_with(
    src: &FuzzyField,
    dst: &FuzzyField,
    scheme: SchemeId,
    schedule: Schedule,
) -> Result<PhaseFields> {
    src.same_shape(dst)?;
    let omega = weight_phases_with(src, schedule);
    let gamma = map_pixels(dst.len(), schedule, |i| activation_phase(&dst.neigh(i), scheme));
    PhaseFields::new(src.width, src.height, omega, gamma)
}

/// Per-pixel observation |Im z|² with z = Σ μ e^{jK(ω − γ + δ)}.
pub fn observe(src: &FuzzyField, phases: &PhaseFields, delta: f64, schedule: Schedule) -> Result<Vec<f64>> {
    phases.check(src)?;
    Ok(map_pixels(src.len(), schedule, |i| {
        let g = phases.gamma[i];
        let w = &phases.omega[i];
        let im: f64 = src
            .neigh(i)
            .iter()
            .zip(w)
            .map(|(m, w)| m * (PHASE_K * (w - g + delta)).sin())
            .sum();
        im * im
    }))
}

pub fn propagate_layer(src: &FuzzyField, phases: &PhaseFields, qsig: &QSigParams, delta: f64) -> Result<FuzzyField> {
    propagate_layer_with(src, phases, qsig, delta, Schedule::Parallel)
}

pub fn propagate_layer_with(
    src: &FuzzyField,
    phases: &PhaseFields,
    qsig: &QSigParams,
    delta: f64,
    schedule: Schedule,
) -> Result<FuzzyField> {
    let obs = observe(src, phases, delta, schedule)?;
    let omax = obs.iter().copied().fold(0.0, f64::max);
    let mu = map_pixels(src.len(), schedule, |i| {
        let x = if omax > 0.0 { (obs[i] / omax).sqrt() } else { 0.0 };
        let q_n: f64 = src.neigh(i).iter().sum();
        qsig.response(x, q_n)
    });
    Ok(FuzzyField {
        width: src.width,
        height: src.height,
        mu,
    })
}

pub fn theta_field(phases: &PhaseFields) -> Vec<[f64; 8]> {
    phases
        .omega
        .iter()
        .zip(&phases.gamma)
        .map(|(w, g)| w.map(|w| (PHASE_K * (w - g)).sin().powi(2)))
        .collect()
}

/// Mean over pixels of the summed squared Θ change over the 8 links.
pub fn loss(prev: &[[f64; 8]], next: &[[f64; 8]]) -> Result<f64> {
    if prev.len() != next.len() {
        return Err(Error::Shape(format!("{} vs {} pixels", prev.len(), next.len())));
    }
    if prev.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = prev
        .iter()
        .zip(next)
        .map(|(a, b)| a.iter().zip(b).map(|(a, b)| (b - a) * (b - a)).sum::<f64>())
        .sum();
    Ok(total / prev.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub d_omega: Vec<[f64; 8]>,
    pub d_gamma: Vec<f64>,
}

/// Derivative of `loss(theta_prev, theta_field(phases))` with respect to ω and γ.
pub fn loss_gradient(phases: &PhaseFields, theta_prev: &[[f64; 8]]) -> Result<Gradients> {
    if theta_prev.len() != phases.omega.len() {
        return Err(Error::Shape(format!(
            "{} vs {} pixels",
            theta_prev.len(),
            phases.omega.len()
        )));
    }
    let n = theta_prev.len() as f64;
    let d_omega: Vec<[f64; 8]> = phases
        .omega
        .iter()
        .zip(&phases.gamma)
        .zip(theta_prev)
        .map(|((w, g), tp)| {
            std::array::from_fn(|k| {
                let phi = PHASE_K * (w[k] - g);
                let (s, c) = phi.sin_cos();
                let dtheta = 2.0 * PHASE_K * s * c;
                2.0 * (s * s - tp[k]) * dtheta / n
            })
        })
        .collect();
    let d_gamma = d_omega.iter().map(|d| -d.iter().sum::<f64>()).collect();
    Ok(Gradients { d_omega, d_gamma })
}

/// Signed-root correction −σ·sign(g)·|g·ζ|^{1/t}.
pub fn delta_rule(sigma: f64, g: f64, zeta: f64, t: u32) -> f64 {
    if g == 0.0 || zeta == 0.0 {
        return 0.0;
    }
    -sigma * g.signum() * (g * zeta).abs().powf(1.0 / t as f64)
}

pub fn phase_update(
    phases: &PhaseFields,
    grads: &Gradients,
    field: &FuzzyField,
    zeta: f64,
    t: u32,
) -> Result<PhaseFields> {
    phases.check(field)?;
    if t < 3 {
        return Err(Error::Config(format!("t exponent {t} must be >= 3")));
    }
    if grads.d_omega.len() != field.len() || grads.d_gamma.len() != field.len() {
        return Err(Error::Shape("gradient length".into()));
    }
    let omega = (0..field.len())
        .map(|i| {
            let c = field.mu[i];
            let nb = field.neigh(i);
            let w = &phases.omega[i];
            let g = &grads.d_omega[i];
            std::array::from_fn(|k| w[k] + delta_rule((c - nb[k]).abs(), g[k], zeta, t))
        })
        .collect();
    let gamma = (0..field.len())
        .map(|i| phases.gamma[i] + delta_rule(field.mu[i], grads.d_gamma[i], zeta, t))
        .collect();
    PhaseFields::new(field.width, field.height, omega, gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateMode {
    #[default]
    Recompute,
    Gradient,
}

impl fmt::Display for UpdateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Recompute => "recompute",
            Self::Gradient => "gradient",
        })
    }
}

impl FromStr for UpdateMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recompute" => Ok(Self::Recompute),
            "gradient" => Ok(Self::Gradient),
            _ => Err(Error::Config(format!("unknown mode {s:?} (recompute|gradient)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NetworkConfig {
    pub qsig: QSigParams,
    pub scheme: SchemeId,
    pub max_epochs: usize,
    pub tolerance: f64,
    pub update_mode: UpdateMode,
    pub t_exponent: u32,
    pub seed: u64,
    /// Rotation offset added to every link phase before measurement.
    pub delta: f64,
    pub schedule: Schedule,
    pub threads: Option<usize>,
}

pub const DEFAULT_DELTA: f64 = 0.75;
const MIN_STEP: f64 = 1.0 / (1u64 << 30) as f64;

impl NetworkConfig {
    pub fn new(qsig: QSigParams) -> Self {
        Self {
            qsig,
            scheme: SchemeId::Xi,
            max_epochs: 100,
            tolerance: 1e-6,
            update_mode: UpdateMode::Recompute,
            t_exponent: 3,
            seed: 0,
            delta: DEFAULT_DELTA,
            schedule: Schedule::Parallel,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("tolerance {} must be > 0", self.tolerance)));
        }
        if self.max_epochs < 1 {
            return Err(Error::Config("max_epochs must be >= 1".into()));
        }
        if self.t_exponent < 3 {
            return Err(Error::Config(format!("t exponent {} must be >= 3", self.t_exponent)));
        }
        if !self.delta.is_finite() {
            return Err(Error::Config("delta must be finite".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("thread count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Reads `QFSNET_THREADS` as a positive thread cap.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("QFSNET_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

#[derive(Debug, Clone)]
pub struct NetworkState {
    pub input: FuzzyField,
    pub intermediate: FuzzyField,
    pub output: FuzzyField,
    pub epoch: usize,
    theta: Vec<[f64; 8]>,
    links: Option<(PhaseFields, PhaseFields)>,
    last_loss: Option<f64>,
}

impl NetworkState {
    pub fn new(input: &FuzzyField, cfg: &NetworkConfig) -> Result<Self> {
        let p = link_phases_with(input, input, cfg.scheme, cfg.schedule)?;
        Ok(Self {
            input: input.clone(),
            intermediate: input.clone(),
            output: input.clone(),
            epoch: 0,
            theta: theta_field(&p),
            links: None,
            last_loss: None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub max_delta: f64,
    pub ms: f64,
    /// Accepted fraction of the proposed update (1 unless step control engaged).
    pub step: f64,
}

/// Relaxes `phases` toward `target` with the Δ rule, driven by their Θ mismatch.
fn relax(phases: &PhaseFields, target: &PhaseFields, field: &FuzzyField, t: u32) -> Result<PhaseFields> {
    let tp = theta_field(target);
    let zeta = loss(&theta_field(phases), &tp)?;
    let grads = loss_gradient(phases, &tp)?;
    phase_update(phases, &grads, field, zeta, t)
}

/// One epoch on a snapshot; returns the next state and its record.
pub fn epoch(state: &NetworkState, cfg: &NetworkConfig) -> Result<(NetworkState, EpochRecord)> {
    let start = Instant::now();
    let s = cfg.schedule;
    let n = state.epoch + 1;
    let prop = |src: &FuzzyField, p: &PhaseFields| propagate_layer_with(src, p, &cfg.qsig, cfg.delta, s);
    let inter = if n == 1 {
        let p = link_phases_with(&state.input, &state.intermediate, cfg.scheme, s)?;
        prop(&state.input, &p)?
    } else {
        state.intermediate.clone()
    };
    // gradient mode starts its persistent link phases from the seeded intermediate layer
    let links = match (&state.links, cfg.update_mode) {
        (None, UpdateMode::Gradient) => Some((
            link_phases_with(&inter, &state.output, cfg.scheme, s)?,
            link_phases_with(&state.output, &inter, cfg.scheme, s)?,
        )),
        (l, _) => l.clone(),
    };
    let (out_new, inter_new, links_new) = match &links {
        None => {
            let out = prop(&inter, &link_phases_with(&inter, &state.output, cfg.scheme, s)?)?;
            let back = prop(&out, &link_phases_with(&out, &inter, cfg.scheme, s)?)?;
            (out, back, None)
        }
        Some((pio, poi)) => {
            let out = prop(&inter, pio)?;
            let back = prop(&out, poi)?;
            let pio2 = relax(pio, &link_phases_with(&back, &out, cfg.scheme, s)?, &back, cfg.t_exponent)?;
            let poi2 = relax(poi, &link_phases_with(&out, &back, cfg.scheme, s)?, &out, cfg.t_exponent)?;
            (out, back, Some((pio2, poi2)))
        }
    };

    let mut alpha = 1.0;
    loop {
        let c_inter = state.intermediate.blend(&inter_new, alpha);
        let c_out = state.output.blend(&out_new, alpha);
        let c_links = match (&links, &links_new) {
            (Some((a, b)), Some((c, d))) => Some((a.blend(c, alpha), b.blend(d, alpha))),
            _ => None,
        };
        let theta = match &c_links {
            Some((pio, _)) => theta_field(pio),
            None => theta_field(&link_phases_with(&c_inter, &c_out, cfg.scheme, s)?),
        };
        let z = loss(&state.theta, &theta)?;
        let accept = n < 3 || state.last_loss.is_none_or(|p| z <= p) || alpha <= MIN_STEP;
        if accept {
            let max_delta = state
                .output
                .mu
                .iter()
                .zip(&c_out.mu)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let rec = EpochRecord {
                epoch: n,
                loss: z,
                max_delta,
                ms: start.elapsed().as_secs_f64() * 1e3,
                step: alpha,
            };
            let next = NetworkState {
                input: state.input.clone(),
                intermediate: c_inter,
                output: c_out,
                epoch: n,
                theta,
                links: c_links,
                last_loss: Some(z),
            };
            return Ok((next, rec));
        }
        alpha *= 0.5;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    MaxEpochs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunTrace {
    pub records: Vec<EpochRecord>,
    pub status: RunStatus,
}

impl RunTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epoch,loss,max_delta,ms")?;
        for r in &self.records {
            writeln!(w, "{},{:e},{:e},{:.3}", r.epoch, r.loss, r.max_delta, r.ms)?;
        }
        Ok(())
    }

    /// Whitespace-separated `epoch loss` rows for gnuplot.
    pub fn write_gnuplot<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# epoch loss")?;
        for r in &self.records {
            writeln!(w, "{} {:e}", r.epoch, r.loss)?;
        }
        Ok(())
    }
}

pub(crate) fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Iterates epochs until ζ < tolerance or `max_epochs`, returning the output layer.
pub fn run(image: &FuzzyField, cfg: &NetworkConfig) -> Result<(FuzzyField, RunTrace)> {
    cfg.validate()?;
    with_threads(cfg.threads, || {
        let mut state = NetworkState::new(image, cfg)?;
        let mut records = Vec::new();
        let mut status = RunStatus::MaxEpochs;
        for _ in 0..cfg.max_epochs {
            let (next, rec) = epoch(&state, cfg)?;
            state = next;
            records.push(rec);
            if rec.loss < cfg.tolerance {
                status = RunStatus::Converged;
                break;
            }
        }
        Ok((state.output, RunTrace { records, status }))
    })?
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsig::{boundary_set, BoundarySet};

    fn ramp3() -> FuzzyField {
        FuzzyField::new(3, 3, (0..9).map(|v| v as f64 / 8.0).collect()).unwrap()
    }

    #[test]
    fn constant_neighborhood() {
        let f = FuzzyField::constant(5, 4, 0.3).unwrap();
        assert_eq!(neighborhood(&f, 2, 2).unwrap(), [0.3; 8]);
        assert!(neighborhood(&f, 5, 0).is_err());
    }

    #[test]
    fn center_order_and_corner_reflection() {
        let f = ramp3();
        let v = |x: usize, y: usize| f.get(x, y);
        assert_eq!(
            neighborhood(&f, 1, 1).unwrap(),
            [v(0, 0), v(1, 0), v(2, 0), v(2, 1), v(2, 2), v(1, 2), v(0, 2), v(0, 1)]
        );
        // mirror: -1 maps to 1
        assert_eq!(
            neighborhood(&f, 0, 0).unwrap(),
            [v(1, 1), v(0, 1), v(1, 1), v(1, 0), v(1, 1), v(0, 1), v(1, 1), v(1, 0)]
        );
    }

    #[test]
    fn weight_phase_examples() {
        let f = FuzzyField::constant(3, 3, 0.6).unwrap();
        assert!(weight_phases(&f).iter().all(|w| w.iter().all(|&x| x == 1.0)));
        let mut mu = vec![0.0; 9];
        mu[4] = 1.0;
        let f = FuzzyField::new(3, 3, mu).unwrap();
        assert_eq!(weight_phases(&f)[4], [0.0; 8]);
        let mut mu = vec![0.55; 9];
        mu[4] = 0.3;
        let f = FuzzyField::new(3, 3, mu).unwrap();
        assert!(weight_phases(&f)[4].iter().all(|w| (w - 1.25).abs() < 1e-15));
    }

    #[test]
    fn activation_examples() {
        assert_eq!(activation_phase(&[0.0; 8], SchemeId::Beta), 0.0);
        assert_eq!(scheme_gamma(&[1.0; 8], SchemeId::Beta), 8.0);
        let n = [0.1; 8];
        assert_eq!(activation_phase(&n, SchemeId::Xi), scheme_gamma(&n, SchemeId::Xi) / 8.0);
    }

    #[test]
    fn theta_and_loss_examples() {
        let p = PhaseFields::new(1, 1, vec![[0.4; 8]], vec![0.4]).unwrap();
        assert!(theta_field(&p)[0].iter().all(|&t| t == 0.0));
        let p = PhaseFields::new(1, 1, vec![[0.75; 8]], vec![0.0]).unwrap();
        assert!(theta_field(&p)[0].iter().all(|&t| (t - 1.0).abs() < 1e-15));
        let zeros = vec![[0.0; 8]; 10];
        let ones = vec![[1.0; 8]; 10];
        assert_eq!(loss(&zeros, &zeros).unwrap(), 0.0);
        assert_eq!(loss(&zeros, &ones).unwrap(), 8.0);
        assert!(loss(&zeros, &ones[..3]).is_err());
    }

    #[test]
    fn gradient_examples() {
        let p = PhaseFields::new(1, 1, vec![[0.3; 8]], vec![0.3]).unwrap();
        let g = loss_gradient(&p, &[[0.5; 8]]).unwrap();
        assert!(g.d_omega[0].iter().all(|&d| d == 0.0));
        assert_eq!(g.d_gamma[0], 0.0);
        // φ = π/4: dΘ/dω = 2K·sinφ·cosφ = K
        let w = 0.25 * PI / PHASE_K;
        let p = PhaseFields::new(1, 1, vec![[w; 8]], vec![0.0]).unwrap();
        let g = loss_gradient(&p, &[[0.0; 8]]).unwrap();
        let dtheta = 2.0 * PI / 3.0;
        assert!((g.d_omega[0][0] - 2.0 * 0.5 * dtheta).abs() < 1e-12);
    }

    #[test]
    fn delta_rule_examples() {
        let d = delta_rule(0.5, 0.2, 0.1, 3);
        assert!((d - (-0.5 * 0.02f64.powf(1.0 / 3.0))).abs() < 1e-15);
        assert!((d + 0.1357).abs() < 1e-4);
        assert_eq!(delta_rule(0.5, 0.2, 0.0, 3), 0.0);
        assert_eq!(delta_rule(0.0, 0.2, 0.1, 3), 0.0);
        assert!(delta_rule(0.5, -0.2, 0.1, 4) > 0.0);
    }

    #[test]
    fn equal_memberships_leave_link_unchanged() {
        let f = FuzzyField::constant(3, 3, 0.4).unwrap();
        let p = link_phases(&f, &f, SchemeId::Beta).unwrap();
        let grads = Gradients {
            d_omega: vec![[0.3; 8]; 9],
            d_gamma: vec![0.0; 9],
        };
        let q = phase_update(&p, &grads, &f, 0.2, 3).unwrap();
        assert_eq!(q.omega, p.omega);
    }

    fn s1(levels: usize) -> QSigParams {
        QSigParams::new(boundary_set(BoundarySet::S1, levels, &[]).unwrap(), 0.239).unwrap()
    }

    #[test]
    fn constant_field_propagates_uniformly() {
        let f = FuzzyField::constant(6, 5, 0.7).unwrap();
        let p = link_phases(&f, &f, SchemeId::Xi).unwrap();
        let out = propagate_layer(&f, &p, &s1(8), DEFAULT_DELTA).unwrap();
        assert!(out.values().iter().all(|&v| v == out.values()[0]));
        let z = FuzzyField::constant(6, 5, 0.0).unwrap();
        let p = link_phases(&z, &z, SchemeId::Xi).unwrap();
        let out = propagate_layer(&z, &p, &s1(8), DEFAULT_DELTA).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn propagate_rejects_shape_mismatch() {
        let a = FuzzyField::constant(4, 4, 0.2).unwrap();
        let b = FuzzyField::constant(5, 4, 0.2).unwrap();
        let p = link_phases(&a, &a, SchemeId::Beta).unwrap();
        assert!(matches!(propagate_layer(&b, &p, &s1(4), 0.0), Err(Error::Shape(_))));
        assert!(link_phases(&a, &b, SchemeId::Beta).is_err());
    }

    #[test]
    fn constant_image_converges_by_epoch_two() {
        let f = FuzzyField::constant(12, 12, 0.5).unwrap();
        let cfg = NetworkConfig::new(s1(8));
        let (_, trace) = run(&f, &cfg).unwrap();
        assert_eq!(trace.status, RunStatus::Converged);
        assert!(trace.iterations() <= 2);
        if trace.iterations() == 2 {
            assert!(trace.records[1].loss < 1e-20);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = NetworkConfig::new(s1(4));
        cfg.t_exponent = 2;
        assert!(cfg.validate().is_err());
        cfg.t_exponent = 3;
        cfg.tolerance = 0.0;
        assert!(cfg.validate().is_err());
        cfg.tolerance = 1e-6;
        cfg.max_epochs = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn trace_csv_header() {
        let t = RunTrace {
            records: vec![EpochRecord {
                epoch: 1,
                loss: 0.5,
                max_delta: 0.25,
                ms: 1.0,
                step: 1.0,
            }],
            status: RunStatus::MaxEpochs,
        };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("epoch,loss,max_delta,ms\n1,"));
    }
}
