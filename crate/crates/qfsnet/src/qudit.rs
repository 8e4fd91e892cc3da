//! Qudit states, generalized Pauli/Hadamard gates and the qutrit rotation gate.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuditState {
    amps: Vec<Complex64>,
}

impl QuditState {
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Dimension(dim));
        }
        if k >= dim {
            return Err(Error::Index { index: k, len: dim });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[k] = Complex64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Builds a state from raw amplitudes, renormalizing to unit 2-norm.
pub fn make_qudit(amps: &[Complex64]) -> Result<QuditState> {
    if amps.len() < 2 {
        return Err(Error::Dimension(amps.len()));
    }
    let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroState);
    }
    Ok(QuditState {
        amps: amps.iter().map(|a| a / n).collect(),
    })
}

pub fn measure_prob(state: &QuditState, basis_index: usize) -> Result<f64> {
    state
        .amps
        .get(basis_index)
        .map(|a| a.norm_sqr())
        .ok_or(Error::Index {
            index: basis_index,
            len: state.dim(),
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryGate {
    dim: usize,
    m: Vec<Complex64>,
}

impl UnitaryGate {
    pub fn from_rows(dim: usize, m: Vec<Complex64>) -> Result<Self> {
        if m.len() != dim * dim {
            return Err(Error::Shape(format!(
                "{} entries for a {dim}x{dim} gate",
                m.len()
            )));
        }
        Ok(Self { dim, m })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, k: usize) -> Complex64 {
        self.m[i * self.dim + k]
    }

    pub fn matmul(&self, other: &UnitaryGate) -> Result<UnitaryGate> {
        if self.dim != other.dim {
            return Err(Error::Shape(format!("{} vs {}", self.dim, other.dim)));
        }
        let d = self.dim;
        let mut m = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                m[i * d + k] = (0..d).map(|j| self.get(i, j) * other.get(j, k)).sum();
            }
        }
        Ok(UnitaryGate { dim: d, m })
    }

    pub fn adjoint(&self) -> UnitaryGate {
        let d = self.dim;
        let mut m = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                m[k * d + i] = self.get(i, k).conj();
            }
        }
        UnitaryGate { dim: d, m }
    }

    /// Max-entry deviation of `G·G†` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.matmul(&self.adjoint()).expect("same dim");
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for k in 0..self.dim {
                let id = if i == k { 1.0 } else { 0.0 };
                worst = worst.max((p.get(i, k) - id).norm());
            }
        }
        worst
    }

    pub fn apply(&self, state: &QuditState) -> Result<QuditState> {
        if state.dim() != self.dim {
            return Err(Error::Shape(format!(
                "gate dim {} vs state dim {}",
                self.dim,
                state.dim()
            )));
        }
        let d = self.dim;
        let amps = (0..d)
            .map(|i| (0..d).map(|k| self.get(i, k) * state.amps[k]).sum())
            .collect();
        Ok(QuditState { amps })
    }
}

fn root_of_unity(d: usize, p: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * (p % d) as f64 / d as f64)
}

/// Shift operator `|k⟩ → |k+1 mod D⟩`.
pub fn pauli_x(d: usize) -> Result<UnitaryGate> {
    if d < 2 {
        return Err(Error::Dimension(d));
    }
    let mut m = vec![Complex64::new(0.0, 0.0); d * d];
    for k in 0..d {
        m[((k + 1) % d) * d + k] = Complex64::new(1.0, 0.0);
    }
    UnitaryGate::from_rows(d, m)
}

/// Clock operator `|k⟩ → θ^k |k⟩` with θ the D-th root of unity.
pub fn pauli_z(d: usize) -> Result<UnitaryGate> {
    if d < 2 {
        return Err(Error::Dimension(d));
    }
    let mut m = vec![Complex64::new(0.0, 0.0); d * d];
    for k in 0..d {
        m[k * d + k] = root_of_unity(d, k);
    }
    UnitaryGate::from_rows(d, m)
}

pub fn hadamard_qutrit() -> UnitaryGate {
    let s = 1.0 / 3f64.sqrt();
    let one = Complex64::new(s, 0.0);
    let w = Complex64::from_polar(s, 2.0 * PI / 3.0);
    let wc = w.conj();
    UnitaryGate {
        dim: 3,
        m: vec![one, one, one, one, w, wc, one, wc, w],
    }
}

/// Fourier-convention Hadamard, entry (i,k) = e^{j2πik/D}/√D.
pub fn hadamard_qudit(d: usize) -> Result<UnitaryGate> {
    if d < 2 {
        return Err(Error::Dimension(d));
    }
    let s = 1.0 / (d as f64).sqrt();
    let m = (0..d * d)
        .map(|ik| root_of_unity(d, (ik / d) * (ik % d)) * s)
        .collect();
    UnitaryGate::from_rows(d, m)
}

/// Spin-1 rotation on a qutrit.
pub fn rotation_gate(omega: f64) -> Result<UnitaryGate> {
    if !omega.is_finite() {
        return Err(Error::Domain(format!("rotation angle {omega}")));
    }
    let (s, c) = omega.sin_cos();
    let r2s = 2f64.sqrt() * s;
    let e = |v: f64| Complex64::new(0.5 * v, 0.0);
    UnitaryGate::from_rows(
        3,
        vec![
            e(1.0 + c),
            e(-r2s),
            e(1.0 - c),
            e(r2s),
            e(2.0 * c),
            e(-r2s),
            e(1.0 - c),
            e(r2s),
            e(1.0 + c),
        ],
    )
}

/// Interleaved (Re α_0, Im α_0, Re α_1, ...) real vector.
pub fn realize(state: &QuditState) -> Vec<f64> {
    state.amps.iter().flat_map(|a| [a.re, a.im]).collect()
}

pub fn unrealize(values: &[f64]) -> Result<QuditState> {
    if !values.len().is_multiple_of(2) {
        return Err(Error::Shape(format!("odd length {}", values.len())));
    }
    let amps: Vec<Complex64> = values
        .chunks_exact(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect();
    make_qudit(&amps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    Direct,
    Sigmoid,
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Maps a classical value in [0,1] to a phase in [0, 2π/D].
pub fn phase_encode(x: f64, d: usize, mode: PhaseMode) -> Result<f64> {
    if d < 2 {
        return Err(Error::Dimension(d));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("phase input {x} not in [0,1]")));
    }
    let f = match mode {
        PhaseMode::Direct => x,
        PhaseMode::Sigmoid => logistic(x),
    };
    Ok(2.0 * PI / d as f64 * f)
}
