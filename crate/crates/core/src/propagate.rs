//! Transfer matrices for the state `(y, p·y')`.
//!
//! A [`TransferMatrix`] maps the column `(y(x0), p(x0)·y'(x0))` to
//! `(y(x1), p(x1)·y'(x1))`. The p-weighted Wronskian is constant, so every
//! transfer matrix is unimodular, and the state stays continuous across
//! jumps of `p`.
//!
//! The one-period propagator based at `0` has the canonical solutions
//! `φ1` (state `(1, 0)`) and `φ2` (state `(0, 1)`) as its columns; its trace
//! is the discriminant `D(λ) = φ1(a) + p·φ2'(a)`. When `p(0) = 1` this is the
//! textbook `φ1(a) + φ2'(a)`.
//!
//! Piecewise-constant coefficients propagate with closed-form segment
//! matrices. Smooth coefficients use an adaptive sixth-order Magnus
//! integrator; each step is the exponential of a traceless matrix, so the
//! determinant stays at one up to rounding.

use serde::{Deserialize, Serialize};

use crate::coeffs::{CoefficientValues, PeriodicCoefficients};
use crate::error::{invalid_arg, HillError, Result};

/// Relative local tolerance of the adaptive integrator.
pub const INTEGRATION_RTOL: f64 = 1e-12;
/// Absolute local tolerance of the adaptive integrator.
pub const INTEGRATION_ATOL: f64 = 1e-14;

/// Below this `|κ²|·w²` the segment propagator switches to Taylor series.
const SERIES_THRESHOLD: f64 = 1e-8;

/// Real 2×2 propagator on `(y, p·y')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl TransferMatrix {
    pub const IDENTITY: TransferMatrix = TransferMatrix {
        m11: 1.0,
        m12: 0.0,
        m21: 0.0,
        m22: 1.0,
    };

    pub fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        TransferMatrix { m11, m12, m21, m22 }
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    /// `self · earlier`: first apply `earlier`, then `self`.
    pub fn after(&self, earlier: &TransferMatrix) -> TransferMatrix {
        TransferMatrix {
            m11: self.m11 * earlier.m11 + self.m12 * earlier.m21,
            m12: self.m11 * earlier.m12 + self.m12 * earlier.m22,
            m21: self.m21 * earlier.m11 + self.m22 * earlier.m21,
            m22: self.m21 * earlier.m12 + self.m22 * earlier.m22,
        }
    }

    /// Inverse via the adjugate, assuming unit determinant.
    pub fn unimodular_inverse(&self) -> TransferMatrix {
        TransferMatrix {
            m11: self.m22,
            m12: -self.m12,
            m21: -self.m21,
            m22: self.m11,
        }
    }

    pub fn apply(&self, state: [f64; 2]) -> [f64; 2] {
        [
            self.m11 * state[0] + self.m12 * state[1],
            self.m21 * state[0] + self.m22 * state[1],
        ]
    }

    pub fn max_abs(&self) -> f64 {
        self.m11.abs().max(self.m12.abs()).max(self.m21.abs()).max(self.m22.abs())
    }

    fn sub(&self, o: &TransferMatrix) -> TransferMatrix {
        TransferMatrix::new(self.m11 - o.m11, self.m12 - o.m12, self.m21 - o.m21, self.m22 - o.m22)
    }

    fn add(&self, o: &TransferMatrix) -> TransferMatrix {
        TransferMatrix::new(self.m11 + o.m11, self.m12 + o.m12, self.m21 + o.m21, self.m22 + o.m22)
    }

    fn scale(&self, k: f64) -> TransferMatrix {
        TransferMatrix::new(k * self.m11, k * self.m12, k * self.m21, k * self.m22)
    }

    fn commutator(&self, o: &TransferMatrix) -> TransferMatrix {
        self.after(o).sub(&o.after(self))
    }
}

/// How to integrate across an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Closed form for piecewise-constant models, adaptive otherwise.
    #[default]
    Auto,
    /// Always the adaptive Magnus integrator, restarted at every breakpoint.
    Adaptive,
}

/// Closed-form propagator across width `w` of constant `(p, q, s)`.
pub fn constant_segment(values: &CoefficientValues, lambda: f64, w: f64) -> TransferMatrix {
    let CoefficientValues { p, q, s } = *values;
    let kappa2 = (lambda * s - q) / p;
    let z = kappa2 * w * w;
    // c = cos(κw), sn = sin(κw)/κ, continued analytically through κ² < 0.
    let (c, sn) = if z.abs() < SERIES_THRESHOLD {
        (
            1.0 - z / 2.0 + z * z / 24.0,
            w * (1.0 - z / 6.0 + z * z / 120.0),
        )
    } else if kappa2 > 0.0 {
        let k = kappa2.sqrt();
        ((k * w).cos(), (k * w).sin() / k)
    } else {
        let g = (-kappa2).sqrt();
        ((g * w).cosh(), (g * w).sinh() / g)
    };
    TransferMatrix {
        m11: c,
        m12: sn / p,
        m21: -p * kappa2 * sn,
        m22: c,
    }
}

/// Generator `A(x)` of `u' = A u` for `u = (y, p·y')`.
fn generator(values: &CoefficientValues, lambda: f64) -> TransferMatrix {
    TransferMatrix::new(0.0, 1.0 / values.p, values.q - lambda * values.s, 0.0)
}

/// Exponential of a traceless 2×2 matrix.
fn exp_traceless(m: &TransferMatrix) -> TransferMatrix {
    let a = 0.5 * (m.m11 - m.m22);
    let delta = a * a + m.m12 * m.m21;
    let (ch, sh) = if delta.abs() < SERIES_THRESHOLD {
        (
            1.0 + delta / 2.0 + delta * delta / 24.0,
            1.0 + delta / 6.0 + delta * delta / 120.0,
        )
    } else if delta > 0.0 {
        let r = delta.sqrt();
        (r.cosh(), r.sinh() / r)
    } else {
        let r = (-delta).sqrt();
        (r.cos(), r.sin() / r)
    };
    let traceless = TransferMatrix::new(a, m.m12, m.m21, -a);
    TransferMatrix::IDENTITY.scale(ch).add(&traceless.scale(sh))
}

/// One sixth-order Magnus step over `[x, x + h]` (three Gauss–Legendre nodes).
fn magnus_step(coeffs: &PeriodicCoefficients, lambda: f64, x: f64, h: f64) -> TransferMatrix {
    const R15: f64 = 3.872_983_346_207_417; // √15
    let a1 = generator(&coeffs.evaluate(x + h * (0.5 - R15 / 10.0)), lambda);
    let a2 = generator(&coeffs.evaluate(x + 0.5 * h), lambda);
    let a3 = generator(&coeffs.evaluate(x + h * (0.5 + R15 / 10.0)), lambda);

    let q1 = a2.scale(h);
    let q2 = a3.sub(&a1).scale(R15 * h / 3.0);
    let q3 = a3.sub(&a2.scale(2.0)).add(&a1).scale(10.0 * h / 3.0);
    let c12 = q1.commutator(&q2);
    let left = q1.scale(-20.0).sub(&q3).add(&c12);
    let right = q2.sub(&q1.commutator(&q3.scale(2.0).add(&c12)).scale(1.0 / 60.0));
    let omega = q1.add(&q3.scale(1.0 / 12.0)).add(&left.commutator(&right).scale(1.0 / 240.0));
    exp_traceless(&omega)
}

/// Adaptive Magnus integration over `[x0, x1]` with step doubling.
fn magnus_adaptive(coeffs: &PeriodicCoefficients, lambda: f64, x0: f64, x1: f64) -> Result<TransferMatrix> {
    let mut t = TransferMatrix::IDENTITY;
    let mut x = x0;
    let len = x1 - x0;
    // a wavelength-aware first guess; the controller fixes the rest
    let v = coeffs.evaluate(x0);
    let k = ((lambda * v.s - v.q).abs() / v.p).sqrt();
    let mut h = len.min(coeffs.period() / 8.0).min(if k > 0.0 { 1.0 / k } else { f64::INFINITY });
    while x < x1 {
        if x + h >= x1 {
            h = x1 - x;
        }
        let full = magnus_step(coeffs, lambda, x, h);
        let half = magnus_step(coeffs, lambda, x + 0.5 * h, 0.5 * h).after(&magnus_step(coeffs, lambda, x, 0.5 * h));
        let err = full.sub(&half).max_abs() / (INTEGRATION_ATOL + INTEGRATION_RTOL * half.max_abs());
        if err <= 1.0 {
            t = half.after(&t);
            x += h;
            if x1 - x <= 1e-15 * x1.abs().max(1.0) {
                break;
            }
        }
        let factor = if err == 0.0 { 4.0 } else { (0.9 * err.powf(-1.0 / 7.0)).clamp(0.2, 4.0) };
        h *= factor;
        if h < 1e-13 * x.abs().max(coeffs.period()) {
            return Err(HillError::StepUnderflow { x, lambda });
        }
    }
    Ok(t)
}

/// Propagator from `x0` to `x1` (`x0 ≤ x1`) at spectral parameter `lambda`.
pub fn propagate(coeffs: &PeriodicCoefficients, lambda: f64, x0: f64, x1: f64) -> Result<TransferMatrix> {
    propagate_with(coeffs, lambda, x0, x1, Integrator::Auto)
}

/// [`propagate`] with an explicit choice of integrator.
pub fn propagate_with(
    coeffs: &PeriodicCoefficients,
    lambda: f64,
    x0: f64,
    x1: f64,
    integrator: Integrator,
) -> Result<TransferMatrix> {
    if !(x0.is_finite() && x1.is_finite() && lambda.is_finite()) {
        return Err(invalid_arg("x0/x1/lambda", "must be finite"));
    }
    if x1 < x0 {
        return Err(invalid_arg("x1", format!("must not precede x0 ({x1} < {x0})")));
    }
    if x1 == x0 {
        return Ok(TransferMatrix::IDENTITY);
    }
    match (coeffs.is_piecewise_constant(), integrator) {
        (true, Integrator::Auto) => {
            let mut t = TransferMatrix::IDENTITY;
            coeffs.for_each_piece::<HillError>(x0, x1, |a, b, v| {
                t = constant_segment(v, lambda, b - a).after(&t);
                Ok(())
            })?;
            Ok(t)
        }
        (true, Integrator::Adaptive) => {
            let mut t = TransferMatrix::IDENTITY;
            coeffs.for_each_piece::<HillError>(x0, x1, |a, b, _| {
                t = magnus_adaptive(coeffs, lambda, a, b)?.after(&t);
                Ok(())
            })?;
            Ok(t)
        }
        (false, _) => magnus_adaptive(coeffs, lambda, x0, x1),
    }
}

/// One-period propagator based at `tau`. Its trace does not depend on `tau`.
pub fn monodromy(coeffs: &PeriodicCoefficients, lambda: f64, tau: f64) -> Result<TransferMatrix> {
    propagate(coeffs, lambda, tau, tau + coeffs.period())
}

/// The discriminant `D(λ)`: trace of the monodromy based at `0`.
pub fn discriminant(coeffs: &PeriodicCoefficients, lambda: f64) -> Result<f64> {
    Ok(monodromy(coeffs, lambda, 0.0)?.trace())
}

/// Sampled solution of the equation at fixed `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSamples {
    pub lambda: f64,
    pub grid: Vec<f64>,
    pub values_y: Vec<f64>,
    pub values_py: Vec<f64>,
    /// `(c1, c2)` with `y = c1·φ1 + c2·φ2`, the canonical pair based at `grid[0]`.
    pub basis_coefficients: [f64; 2],
}

impl SolutionSamples {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn max_abs_y(&self) -> f64 {
        self.values_y.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// State `(y, p·y')` at sample `i`.
    pub fn state(&self, i: usize) -> [f64; 2] {
        [self.values_y[i], self.values_py[i]]
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid_arg("grid", "must not be empty"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid_arg("grid", "must be strictly increasing"));
    }
    Ok(())
}

/// Samples the solution with state `(y0, py0)` at `tau` on `grid`
/// (`grid[0] == tau`).
pub fn solve_ivp(
    coeffs: &PeriodicCoefficients,
    lambda: f64,
    tau: f64,
    y0: f64,
    py0: f64,
    grid: &[f64],
) -> Result<SolutionSamples> {
    check_grid(grid)?;
    if grid[0] != tau {
        return Err(invalid_arg("grid", format!("must start at tau = {tau}, starts at {}", grid[0])));
    }
    let mut values_y = Vec::with_capacity(grid.len());
    let mut values_py = Vec::with_capacity(grid.len());
    let mut state = [y0, py0];
    values_y.push(y0);
    values_py.push(py0);
    for w in grid.windows(2) {
        state = propagate(coeffs, lambda, w[0], w[1])?.apply(state);
        values_y.push(state[0]);
        values_py.push(state[1]);
    }
    Ok(SolutionSamples {
        lambda,
        grid: grid.to_vec(),
        values_y,
        values_py,
        basis_coefficients: [y0, py0],
    })
}

/// Samples the solution with state `(y_end, py_end)` at the last grid point,
/// integrating right to left. Stable for solutions that grow leftwards.
pub fn solve_terminal(
    coeffs: &PeriodicCoefficients,
    lambda: f64,
    grid: &[f64],
    y_end: f64,
    py_end: f64,
) -> Result<SolutionSamples> {
    check_grid(grid)?;
    let n = grid.len();
    let mut values_y = vec![0.0; n];
    let mut values_py = vec![0.0; n];
    let mut state = [y_end, py_end];
    values_y[n - 1] = y_end;
    values_py[n - 1] = py_end;
    for i in (0..n - 1).rev() {
        state = propagate(coeffs, lambda, grid[i], grid[i + 1])?
            .unimodular_inverse()
            .apply(state);
        values_y[i] = state[0];
        values_py[i] = state[1];
    }
    Ok(SolutionSamples {
        lambda,
        grid: grid.to_vec(),
        basis_coefficients: [values_y[0], values_py[0]],
        values_y,
        values_py,
    })
}

/// `n + 1` equally spaced points covering `[x0, x1]`, endpoints exact.
pub fn uniform_grid(x0: f64, x1: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    let mut g: Vec<f64> = (0..=n).map(|i| x0 + (x1 - x0) * i as f64 / n as f64).collect();
    g[n] = x1;
    g
}
