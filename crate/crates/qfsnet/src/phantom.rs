//! Synthetic lesion phantoms with exact elliptical ground truth.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{GrayImage, Mask, MIN_SIDE};

pub const BACKGROUND: f64 = 0.35;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub size: usize,
    pub lesion_count: usize,
    pub radius_min: f64,
    pub radius_max: f64,
    pub contrast: f64,
    pub noise_sigma: f64,
    pub bias_amplitude: f64,
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            size: 128,
            lesion_count: 1,
            radius_min: 10.0,
            radius_max: 20.0,
            contrast: 0.4,
            noise_sigma: 0.05,
            bias_amplitude: 0.1,
            seed: 1,
        }
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.size < MIN_SIDE {
            return Err(Error::Spec(format!("size {} is below {MIN_SIDE}", self.size)));
        }
        if self.lesion_count < 1 {
            return Err(Error::Spec("at least one lesion is required".into()));
        }
        if !(self.contrast > 0.0 && self.contrast <= 1.0) {
            return Err(Error::Spec(format!("contrast {} not in (0,1]", self.contrast)));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Spec(format!("noise_sigma {} must be >= 0", self.noise_sigma)));
        }
        if !(self.bias_amplitude >= 0.0 && self.bias_amplitude < 1.0) {
            return Err(Error::Spec(format!(
                "bias_amplitude {} not in [0,1)",
                self.bias_amplitude
            )));
        }
        if !(self.radius_min > 0.0 && self.radius_min <= self.radius_max) {
            return Err(Error::Spec(format!(
                "radius range [{}, {}] is invalid",
                self.radius_min, self.radius_max
            )));
        }
        if 2.0 * self.radius_max + 2.0 > self.size as f64 {
            return Err(Error::Spec(format!(
                "lesion radius {} does not fit in a {} image",
                self.radius_max, self.size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lesion {
    pub cx: f64,
    pub cy: f64,
    pub rx: f64,
    pub ry: f64,
}

impl Lesion {
    /// Membership test at the pixel center (x + 0.5, y + 0.5).
    pub fn contains(&self, x: usize, y: usize) -> bool {
        let u = (x as f64 + 0.5 - self.cx) / self.rx;
        let v = (y as f64 + 0.5 - self.cy) / self.ry;
        u * u + v * v <= 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub size: usize,
    pub lesions: Vec<Lesion>,
    pub contrast: f64,
    pub noise_sigma: f64,
    pub bias_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub image: GrayImage,
    pub truth: Mask,
    pub manifest: Manifest,
}

pub fn gen_phantom(spec: &PhantomSpec) -> Result<Phantom> {
    spec.validate()?;
    let n = spec.size;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let lesions: Vec<Lesion> = (0..spec.lesion_count)
        .map(|_| {
            let rx = rng.random_range(spec.radius_min..=spec.radius_max);
            let ry = rng.random_range(spec.radius_min..=spec.radius_max);
            let cx = rng.random_range(rx + 1.0..=n as f64 - rx - 1.0);
            let cy = rng.random_range(ry + 1.0..=n as f64 - ry - 1.0);
            Lesion { cx, cy, rx, ry }
        })
        .collect();
    let angle = rng.random_range(0.0..2.0 * PI);
    let (sa, ca) = angle.sin_cos();

    let truth: Vec<bool> = (0..n * n)
        .map(|i| lesions.iter().any(|l| l.contains(i % n, i / n)))
        .collect();

    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Spec(e.to_string()))?;
    let half = n as f64 / 2.0;
    let reach = n as f64 / 2f64.sqrt();
    let data = truth
        .iter()
        .enumerate()
        .map(|(i, &inside)| {
            let base = if inside { BACKGROUND + spec.contrast } else { BACKGROUND };
            let eps = if spec.noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            let px = (i % n) as f64 + 0.5 - half;
            let py = (i / n) as f64 + 0.5 - half;
            let u = (px * ca + py * sa) / reach;
            let v = ((base + eps) * (1.0 + spec.bias_amplitude * u)).clamp(0.0, 1.0);
            (v * 255.0).round() as u16
        })
        .collect();

    Ok(Phantom {
        image: GrayImage::new(n, n, 255, data)?,
        truth: Mask::new(n, n, truth)?,
        manifest: Manifest {
            seed: spec.seed,
            size: n,
            lesions,
            contrast: spec.contrast,
            noise_sigma: spec.noise_sigma,
            bias_amplitude: spec.bias_amplitude,
        },
    })
}
