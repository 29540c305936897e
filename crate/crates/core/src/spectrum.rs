//! Band edges, the band/gap partition of the λ-axis, Bloch dispersion and
//! decay rates, and the band-edge eigenfunctions.
//!
//! Periodic eigenvalues `ν_n` solve `D(λ) = 2`, semi-periodic eigenvalues
//! `μ_n` solve `D(λ) = -2`. They interlace as
//!
//! ```text
//! ν0 < μ0 ≤ μ1 < ν1 ≤ ν2 < μ2 ≤ μ3 < ν3 ≤ ν4 < …
//! ```
//!
//! Bands are the open intervals `(ν0, μ0)`, `(μ1, ν1)`, `(ν2, μ2)`, … where
//! `|D| < 2`. Gap `k` is the closed interval between band `k` and band
//! `k + 1`: `[μk, μk+1]` (semi-periodic kind) for even `k`, `[νk, νk+1]`
//! (periodic kind) for odd `k`. A gap whose width collapses below
//! [`DEGENERACY_RTOL`]` · max(1, |λ|)` is flagged degenerate.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coeffs::PeriodicCoefficients;
use crate::error::{invalid_arg, HillError, Result};
use crate::propagate::{discriminant, monodromy, propagate, solve_ivp, uniform_grid, SolutionSamples};
use crate::roots::{bisect, golden_max};

/// Gaps narrower than this (relative to `max(1, |λ|)`) are degenerate.
pub const DEGENERACY_RTOL: f64 = 1e-8;

/// `|D| - 2` below this counts as sitting on a band edge when computing β.
pub const EDGE_SNAP: f64 = 1e-14;

/// Default number of grid intervals used to sample edge eigenfunctions.
pub const EDGE_GRID: usize = 2048;

/// Which eigenvalue problem on one cell an edge belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapKind {
    /// `y(a) = -y(0)`; edges `μ_n`, `D = -2`.
    SemiPeriodic,
    /// `y(a) = y(0)`; edges `ν_n`, `D = 2`.
    Periodic,
}

impl GapKind {
    /// Kind of gap `k`.
    pub fn of_gap(k: usize) -> GapKind {
        if k.is_multiple_of(2) {
            GapKind::SemiPeriodic
        } else {
            GapKind::Periodic
        }
    }

    /// The Floquet multiplier on the edges, `±1`.
    pub fn sign(self) -> f64 {
        match self {
            GapKind::SemiPeriodic => -1.0,
            GapKind::Periodic => 1.0,
        }
    }
}

/// A band edge: `ν_n` or `μ_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum EdgeId {
    Nu(usize),
    Mu(usize),
}

impl EdgeId {
    pub fn kind(self) -> GapKind {
        match self {
            EdgeId::Nu(_) => GapKind::Periodic,
            EdgeId::Mu(_) => GapKind::SemiPeriodic,
        }
    }

    pub fn index(self) -> usize {
        match self {
            EdgeId::Nu(n) | EdgeId::Mu(n) => n,
        }
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeId::Nu(n) => write!(f, "nu_{n}"),
            EdgeId::Mu(n) => write!(f, "mu_{n}"),
        }
    }
}

/// Open stability interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub index: usize,
    pub lower: f64,
    pub upper: f64,
}

impl Band {
    pub fn contains(&self, lambda: f64) -> bool {
        lambda > self.lower && lambda < self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Whether `D` falls from `2` to `-2` across this band.
    pub fn descending(&self) -> bool {
        // band 0 starts at ν0 (D = 2); even bands start on a ν edge.
        self.index.is_multiple_of(2)
    }
}

/// Closed conditional-instability interval between two bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub index: usize,
    pub kind: GapKind,
    pub lower: f64,
    pub upper: f64,
    pub degenerate: bool,
}

impl Gap {
    pub fn contains(&self, lambda: f64) -> bool {
        lambda >= self.lower && lambda <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn lower_edge(&self) -> EdgeId {
        match self.kind {
            GapKind::SemiPeriodic => EdgeId::Mu(self.index),
            GapKind::Periodic => EdgeId::Nu(self.index),
        }
    }

    pub fn upper_edge(&self) -> EdgeId {
        match self.kind {
            GapKind::SemiPeriodic => EdgeId::Mu(self.index + 1),
            GapKind::Periodic => EdgeId::Nu(self.index + 1),
        }
    }
}

/// Periodic and semi-periodic eigenvalues up through some number of gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandEdges {
    /// `ν0, ν1, ν2, …`
    pub nu: Vec<f64>,
    /// `μ0, μ1, …`
    pub mu: Vec<f64>,
    /// One flag per gap.
    pub degenerate: Vec<bool>,
}

/// Where a λ value falls relative to the computed edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// `(-∞, ν0]`, the unbounded conditional-instability interval.
    BelowSpectrum,
    Band(usize),
    Gap(usize),
    /// Past the last computed edge.
    Beyond,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::BelowSpectrum => write!(f, "(-inf, nu_0]"),
            Location::Band(k) => write!(f, "band {k}"),
            Location::Gap(k) => write!(f, "gap {k}"),
            Location::Beyond => write!(f, "the region above the computed edges"),
        }
    }
}

impl BandEdges {
    pub fn n_gaps(&self) -> usize {
        self.degenerate.len()
    }

    pub fn edge(&self, id: EdgeId) -> Option<f64> {
        match id {
            EdgeId::Nu(n) => self.nu.get(n).copied(),
            EdgeId::Mu(n) => self.mu.get(n).copied(),
        }
    }

    pub fn gap(&self, k: usize) -> Option<Gap> {
        if k >= self.n_gaps() {
            return None;
        }
        let kind = GapKind::of_gap(k);
        let (lo, hi) = match kind {
            GapKind::SemiPeriodic => (self.mu[k], self.mu[k + 1]),
            GapKind::Periodic => (self.nu[k], self.nu[k + 1]),
        };
        Some(Gap {
            index: k,
            kind,
            lower: lo,
            upper: hi,
            degenerate: self.degenerate[k],
        })
    }

    /// Band `k` needs gap `k` for its upper edge.
    pub fn band(&self, k: usize) -> Option<Band> {
        let upper = self.gap(k)?.lower;
        let lower = if k == 0 { self.nu[0] } else { self.gap(k - 1)?.upper };
        Some(Band { index: k, lower, upper })
    }

    pub fn locate(&self, lambda: f64) -> Location {
        if lambda <= self.nu[0] {
            Location::BelowSpectrum
        } else {
            self.partition().locate(lambda)
        }
    }

    pub fn partition(&self) -> SpectralPartition {
        let n = self.n_gaps();
        SpectralPartition {
            bands: (0..n).filter_map(|k| self.band(k)).collect(),
            gaps: (0..n).filter_map(|k| self.gap(k)).collect(),
        }
    }

    /// All edges in increasing order with their labels.
    pub fn ordered(&self) -> Vec<(EdgeId, f64)> {
        let mut out = vec![(EdgeId::Nu(0), self.nu[0])];
        for k in 0..self.n_gaps() {
            let g = self.gap(k).expect("gap in range");
            out.push((g.lower_edge(), g.lower));
            out.push((g.upper_edge(), g.upper));
        }
        out
    }

    /// Checks `ν0 < μ0 ≤ μ1 < ν1 ≤ ν2 < …` on the computed edges.
    pub fn interlacing_holds(&self) -> bool {
        let chain = self.ordered();
        chain.windows(2).enumerate().all(|(i, w)| {
            // odd positions open a gap (non-strict), even positions close it
            if i % 2 == 1 {
                w[0].1 <= w[1].1
            } else {
                w[0].1 < w[1].1
            }
        })
    }
}

/// Bands and gaps tiling `(ν0, λ_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralPartition {
    pub bands: Vec<Band>,
    pub gaps: Vec<Gap>,
}

impl SpectralPartition {
    pub fn locate(&self, lambda: f64) -> Location {
        let Some(first) = self.bands.first() else {
            return Location::Beyond;
        };
        if lambda <= first.lower {
            return Location::BelowSpectrum;
        }
        for (b, g) in self.bands.iter().zip(&self.gaps) {
            if b.contains(lambda) {
                return Location::Band(b.index);
            }
            if g.contains(lambda) {
                return Location::Gap(g.index);
            }
        }
        Location::Beyond
    }
}

/// Band-edge scan stopping rule.
enum Stop {
    Gaps(usize),
    Lambda(f64),
}

struct Scanner<'a> {
    coeffs: &'a PeriodicCoefficients,
    step0: f64,
    lambda_low: f64,
    ell: f64,
}

impl Scanner<'_> {
    fn d(&self, lambda: f64) -> Result<f64> {
        discriminant(self.coeffs, lambda)
    }

    fn step(&self, lambda: f64) -> f64 {
        let scale = PI / self.ell;
        let n = ((lambda - self.lambda_low).max(0.0)).sqrt() / scale;
        self.step0 * n.max(1.0)
    }

    /// Edge between `lo` and `hi` where `σ·D - 2` changes sign.
    fn edge(&self, sigma: f64, lo: f64, hi: f64) -> Result<f64> {
        let f = |l: f64| Ok(sigma * self.d(l)? - 2.0);
        bisect(f, lo, hi, f(lo)?, f(hi)?, 0.0)
    }

    /// Refines a gap hidden between band samples `lo < mid < hi` around a
    /// sampled extremum of `D`.
    fn hidden_gap(&self, lo: f64, hi: f64, sigma: f64) -> Result<Option<(f64, f64)>> {
        let xtol = 1e-9 * lo.abs().max(1.0);
        let (x_star, peak) = golden_max(|l| Ok(sigma * self.d(l)?), lo, hi, xtol)?;
        if peak < 2.0 - 1e-6 {
            return Err(HillError::Numerical(format!(
                "discriminant extremum {} inside a band near lambda = {x_star}",
                sigma * peak
            )));
        }
        if peak > 2.0 {
            let left = self.edge(sigma, lo, x_star)?;
            let right = self.edge(sigma, x_star, hi)?;
            return Ok(Some((left, right)));
        }
        // Double root. The one-cell Dirichlet eigenvalue sits on it; m12
        // crosses zero there linearly, which pins it far better than the peak.
        let m12 = |l: f64| Ok(monodromy(self.coeffs, l, 0.0)?.m12);
        let (f_lo, f_hi) = (m12(lo)?, m12(hi)?);
        let x = if f_lo.signum() != f_hi.signum() {
            bisect(m12, lo, hi, f_lo, f_hi, 0.0)?
        } else {
            x_star
        };
        Ok(Some((x, x)))
    }

    fn exhausted(&self, cap: f64, n_want: usize, nu0: Option<f64>, gaps: &[(f64, f64)]) -> HillError {
        HillError::ScanExhausted {
            lambda_max: cap,
            gaps_found: gaps.len(),
            gaps_requested: n_want,
            found: nu0
                .into_iter()
                .chain(gaps.iter().flat_map(|&(a, b)| [a, b]))
                .collect(),
        }
    }

    /// Returns `ν0` and the `(lower, upper)` edges of each gap found.
    fn run(&self, stop: Stop) -> Result<(f64, Vec<(f64, f64)>)> {
        let (_, q_hi) = self.coeffs.q_over_s_bounds();
        let unit = (PI / self.ell).powi(2);
        let (n_want, lambda_stop, cap) = match stop {
            Stop::Gaps(n) => (n, f64::INFINITY, q_hi.max(0.0) + 1.0 + 4.0 * (n as f64 + 2.0).powi(2) * unit),
            Stop::Lambda(l) => (usize::MAX, l, 2.0 * l.abs() + q_hi.abs() + 100.0 * unit),
        };

        // ν0: first downward crossing of D = 2.
        let mut l_prev = self.lambda_low;
        let mut l = l_prev;
        let mut d;
        loop {
            l += self.step(l);
            d = self.d(l)?;
            if d < 2.0 {
                break;
            }
            if l > cap {
                return Err(self.exhausted(cap, n_want, None, &[]));
            }
            l_prev = l;
        }
        let nu0 = self.edge(1.0, l_prev, l)?;
        let mut gaps: Vec<(f64, f64)> = Vec::new();

        // the last in-band samples (λ, D), oldest first, at most three
        let mut band_tail: Vec<(f64, f64)> = vec![(l, d)];
        while gaps.len() < n_want {
            // the band holding lambda_stop needs the gap above it
            if gaps.last().is_some_and(|g| g.0 > lambda_stop) {
                break;
            }
            if l > cap {
                return Err(self.exhausted(cap, n_want, Some(nu0), &gaps));
            }
            let l_next = l + self.step(l);
            let d_next = self.d(l_next)?;
            if d_next.abs() < 2.0 {
                band_tail.push((l_next, d_next));
                if band_tail.len() > 3 {
                    band_tail.remove(0);
                }
                if let [a, b, c] = band_tail[..] {
                    if (b.1 - a.1) * (c.1 - b.1) < 0.0 {
                        let sigma = if b.1 > a.1 { 1.0 } else { -1.0 };
                        if let Some(gap) = self.hidden_gap(a.0, c.0, sigma)? {
                            self.push_gap(&mut gaps, gap, sigma)?;
                        }
                        band_tail = vec![b, c];
                    }
                }
                l = l_next;
                continue;
            }

            // Left a band: walk the out-of-band run to its end.
            let sigma = d_next.signum();
            let (l_in, _) = *band_tail.last().expect("in-band sample");
            let lower = self.edge(sigma, l_in, l_next)?;
            let mut l_out = l_next;
            let (l_back, d_back) = loop {
                let mut l2 = l_out + self.step(l_out);
                let mut d2 = self.d(l2)?;
                // a band narrower than the step: D reappears beyond ±2 with the other sign
                let mut depth = 0;
                while d2.signum() != sigma && d2.abs() >= 2.0 {
                    if depth > 40 {
                        return Err(HillError::Numerical(format!(
                            "could not resolve a band between {l_out} and {l2}"
                        )));
                    }
                    l2 = 0.5 * (l_out + l2);
                    d2 = self.d(l2)?;
                    depth += 1;
                }
                if d2.abs() < 2.0 {
                    break (l2, d2);
                }
                l_out = l2;
                if l_out > cap {
                    return Err(self.exhausted(cap, n_want, Some(nu0), &gaps));
                }
            };
            let upper = self.edge(sigma, l_out, l_back)?;
            self.push_gap(&mut gaps, (lower, upper), sigma)?;
            band_tail = vec![(l_back, d_back)];
            l = l_back;
        }
        Ok((nu0, gaps))
    }

    fn push_gap(&self, gaps: &mut Vec<(f64, f64)>, gap: (f64, f64), sigma: f64) -> Result<()> {
        let k = gaps.len();
        if GapKind::of_gap(k).sign() != sigma {
            return Err(HillError::Numerical(format!(
                "gap {k} near lambda = {} has the wrong kind; an edge was missed",
                gap.0
            )));
        }
        gaps.push(gap);
        Ok(())
    }
}

fn scanner(coeffs: &PeriodicCoefficients) -> Result<Scanner<'_>> {
    let a = coeffs.period();
    let step0 = 0.25f64.min((PI / a).powi(2) / 8.0);
    let (q_lo, _) = coeffs.q_over_s_bounds();
    let mut lambda_low = q_lo - 1.0;
    // below min(q/s) solutions do not oscillate and D > 2; make sure of it
    let mut widen = 1.0;
    while discriminant(coeffs, lambda_low)? < 2.0 {
        widen *= 2.0;
        lambda_low -= widen;
        if widen > 1e12 {
            return Err(HillError::Numerical("no lower bound with D > 2".into()));
        }
    }
    Ok(Scanner {
        coeffs,
        step0,
        lambda_low,
        ell: coeffs.optical_length(),
    })
}

fn assemble_edges(nu0: f64, gaps: &[(f64, f64)]) -> BandEdges {
    let mut nu = vec![nu0];
    let mut mu = Vec::new();
    let mut degenerate = Vec::with_capacity(gaps.len());
    for (k, &(lo, hi)) in gaps.iter().enumerate() {
        match GapKind::of_gap(k) {
            GapKind::SemiPeriodic => mu.extend([lo, hi]),
            GapKind::Periodic => nu.extend([lo, hi]),
        }
        degenerate.push(hi - lo < DEGENERACY_RTOL * lo.abs().max(1.0));
    }
    BandEdges { nu, mu, degenerate }
}

/// Locates `ν0` and the edges of the first `n_gaps` gaps.
pub fn find_band_edges(coeffs: &PeriodicCoefficients, n_gaps: usize) -> Result<BandEdges> {
    if n_gaps == 0 {
        return Err(invalid_arg("n_gaps", "must be at least 1"));
    }
    let s = scanner(coeffs)?;
    let (nu0, gaps) = s.run(Stop::Gaps(n_gaps))?;
    Ok(assemble_edges(nu0, &gaps))
}

/// Locates every edge below `lambda_max` (gaps straddling it included).
pub fn find_band_edges_below(coeffs: &PeriodicCoefficients, lambda_max: f64) -> Result<BandEdges> {
    let s = scanner(coeffs)?;
    let (nu0, gaps) = s.run(Stop::Lambda(lambda_max))?;
    Ok(assemble_edges(nu0, &gaps))
}

fn location_of(coeffs: &PeriodicCoefficients, lambda: f64) -> String {
    match find_band_edges_below(coeffs, lambda) {
        Ok(edges) => match edges.locate(lambda) {
            Location::Beyond => "an unresolved interval".to_string(),
            loc => loc.to_string(),
        },
        Err(_) => "an unresolved interval".to_string(),
    }
}

/// Bloch wavenumber `α = arccos(D/2)/a ∈ (0, π/a)` inside a band.
pub fn dispersion_alpha(coeffs: &PeriodicCoefficients, lambda: f64) -> Result<f64> {
    let d = discriminant(coeffs, lambda)?;
    if d.abs() < 2.0 {
        Ok((d / 2.0).acos() / coeffs.period())
    } else {
        Err(HillError::NotInBand {
            lambda,
            location: location_of(coeffs, lambda),
        })
    }
}

/// Decay rate `β = arccosh(|D|/2)/a ≥ 0` in a gap; zero on an edge.
pub fn decay_beta(coeffs: &PeriodicCoefficients, lambda: f64) -> Result<f64> {
    let d = discriminant(coeffs, lambda)?.abs();
    if d >= 2.0 + EDGE_SNAP {
        Ok((d / 2.0).acosh() / coeffs.period())
    } else if d >= 2.0 - DEGENERACY_RTOL {
        Ok(0.0)
    } else {
        Err(HillError::NotInGap {
            lambda,
            location: location_of(coeffs, lambda),
        })
    }
}

/// A periodic (`ζ_n`) or semi-periodic (`ξ_n`) eigenfunction on `[0, a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeEigenfunction {
    pub edge: EdgeId,
    pub lambda: f64,
    pub kind: GapKind,
    /// Normalised to `max |y| = 1`.
    pub samples: SolutionSamples,
    /// Zeros in `[0, a)`, increasing.
    pub zeros: Vec<f64>,
}

impl EdgeEigenfunction {
    pub fn zero_count(&self) -> usize {
        self.zeros.len()
    }
}

/// Zeros in `[start, end)` of a sampled solution, refined by bisection.
pub(crate) fn sampled_zeros(
    coeffs: &PeriodicCoefficients,
    samples: &SolutionSamples,
    end: f64,
) -> Result<Vec<f64>> {
    let g = &samples.grid;
    let y = &samples.values_y;
    let mut zeros = Vec::new();
    for i in 0..g.len() {
        if g[i] >= end {
            break;
        }
        if y[i] == 0.0 {
            zeros.push(g[i]);
            continue;
        }
        if i + 1 < g.len() && y[i + 1] != 0.0 && y[i].signum() != y[i + 1].signum() {
            let state = samples.state(i);
            let x0 = g[i];
            let f = |x: f64| Ok(propagate(coeffs, samples.lambda, x0, x)?.apply(state)[0]);
            let z = bisect(f, x0, g[i + 1], y[i], y[i + 1], 1e-13 * x0.abs().max(1.0))?;
            if z < end {
                zeros.push(z);
            }
        }
    }
    Ok(zeros)
}

/// Zeros closer than two grid cells suggest the grid is too coarse.
fn unresolved(zeros: &[f64], h: f64) -> bool {
    zeros.windows(2).any(|w| w[1] - w[0] < 2.0 * h)
}

/// The (semi-)periodic eigenfunction(s) at a computed edge.
///
/// Degenerate edges have a two-dimensional eigenspace and return two
/// independent eigenfunctions; all others return one.
pub fn edge_eigenfunction(
    coeffs: &PeriodicCoefficients,
    edges: &BandEdges,
    id: EdgeId,
) -> Result<Vec<EdgeEigenfunction>> {
    let lambda = edges
        .edge(id)
        .ok_or_else(|| invalid_arg("edge", format!("{id} was not computed")))?;
    let kind = id.kind();
    let sigma = kind.sign();
    let m = monodromy(coeffs, lambda, 0.0)?;
    let residual = (m.trace() - 2.0 * sigma).abs();
    if residual > 1e-6 {
        return Err(HillError::StaleEdge {
            lambda,
            target: 2.0 * sigma,
            residual,
        });
    }
    // ν0 bounds no gap from above; every other edge belongs to gap index-1 or index
    let gap_of_edge = match id {
        EdgeId::Nu(0) => None,
        _ => {
            let n = id.index();
            let k = if GapKind::of_gap(n) == kind { n } else { n - 1 };
            edges.gap(k)
        }
    };
    let degenerate = gap_of_edge.is_some_and(|g| g.degenerate);

    let initial: Vec<[f64; 2]> = if degenerate {
        vec![[1.0, 0.0], [0.0, 1.0]]
    } else {
        let v1 = [m.m12, sigma - m.m11];
        let v2 = [sigma - m.m22, m.m21];
        let n1 = v1[0].hypot(v1[1]);
        let n2 = v2[0].hypot(v2[1]);
        let (v, n) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
        if n == 0.0 {
            // M = σI to rounding even though the gap was not flagged
            vec![[1.0, 0.0], [0.0, 1.0]]
        } else {
            vec![[v[0] / n, v[1] / n]]
        }
    };

    let a = coeffs.period();
    initial
        .into_iter()
        .map(|v| {
            let mut n = EDGE_GRID;
            loop {
                let grid = uniform_grid(0.0, a, n);
                let mut samples = solve_ivp(coeffs, lambda, 0.0, v[0], v[1], &grid)?;
                let zeros = sampled_zeros(coeffs, &samples, a)?;
                if unresolved(&zeros, a / n as f64) && n < 16 * EDGE_GRID {
                    n *= 2;
                    continue;
                }
                let scale = samples.max_abs_y();
                if scale > 0.0 {
                    samples.values_y.iter_mut().for_each(|y| *y /= scale);
                    samples.values_py.iter_mut().for_each(|y| *y /= scale);
                    samples.basis_coefficients = [samples.basis_coefficients[0] / scale, samples.basis_coefficients[1] / scale];
                }
                return Ok(EdgeEigenfunction {
                    edge: id,
                    lambda,
                    kind,
                    samples,
                    zeros,
                });
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kp() -> PeriodicCoefficients {
        PeriodicCoefficients::kronig_penney(1.0, 10.0, 0.5).unwrap()
    }

    #[test]
    fn free_particle_edges_are_squares_of_n_pi() {
        let c = PeriodicCoefficients::free_particle(1.0).unwrap();
        let e = find_band_edges(&c, 2).unwrap();
        let pi2 = PI * PI;
        assert!(e.nu[0].abs() < 1e-12, "{}", e.nu[0]);
        assert_eq!(e.mu.len(), 2);
        assert_eq!(e.nu.len(), 3);
        for m in &e.mu {
            assert!((m - pi2).abs() < 1e-10 * pi2, "{m}");
        }
        for n in &e.nu[1..] {
            assert!((n - 4.0 * pi2).abs() < 1e-10 * 4.0 * pi2, "{n}");
        }
        assert_eq!(e.degenerate, vec![true, true]);
        assert!(e.interlacing_holds());
    }

    #[test]
    fn constant_shift_translates_edges() {
        let free = find_band_edges(&PeriodicCoefficients::free_particle(1.0).unwrap(), 3).unwrap();
        let shifted = find_band_edges(&PeriodicCoefficients::constant_shift(1.0, 3.0).unwrap(), 3).unwrap();
        for (a, b) in free.ordered().iter().zip(shifted.ordered()) {
            assert_eq!(a.0, b.0);
            assert!((b.1 - a.1 - 3.0).abs() < 1e-9, "{a:?} {b:?}");
        }
    }

    #[test]
    fn kronig_penney_edges_hit_plus_minus_two() {
        let c = kp();
        let e = find_band_edges(&c, 3).unwrap();
        assert!(e.interlacing_holds());
        assert_eq!(e.degenerate, vec![false, false, false]);
        for (id, l) in e.ordered() {
            let d = discriminant(&c, l).unwrap();
            assert!((d - 2.0 * id.kind().sign()).abs() < 1e-8, "{id}: D = {d}");
        }
        // coarse values from an independent dense scan of the closed form
        assert!((e.nu[0] - 4.4851).abs() < 1e-3);
        assert!((e.mu[0] - 11.5572).abs() < 1e-3);
        assert!((e.mu[1] - 17.9068).abs() < 1e-3);
        assert!((e.nu[1] - 44.3199).abs() < 1e-3);
        assert!((e.nu[2] - 44.9465).abs() < 1e-3);
    }

    #[test]
    fn zero_gaps_rejected() {
        assert!(find_band_edges(&kp(), 0).is_err());
    }

    #[test]
    fn alpha_and_beta_free_particle() {
        let c = PeriodicCoefficients::free_particle(1.0).unwrap();
        assert!((dispersion_alpha(&c, (PI / 2.0).powi(2)).unwrap() - PI / 2.0).abs() < 1e-14);
        assert!((dispersion_alpha(&c, (PI / 4.0).powi(2)).unwrap() - PI / 4.0).abs() < 1e-14);
        assert!((decay_beta(&c, -1.0).unwrap() - 1.0).abs() < 1e-14);
        let err = dispersion_alpha(&c, -1.0).unwrap_err();
        assert!(err.to_string().contains("(-inf, nu_0]"), "{err}");
        let err = decay_beta(&c, 1.0).unwrap_err();
        assert!(err.to_string().contains("band 0"), "{err}");
    }

    #[test]
    fn beta_vanishes_on_edges() {
        let c = kp();
        let e = find_band_edges(&c, 2).unwrap();
        assert_eq!(decay_beta(&c, e.nu[0]).unwrap(), 0.0);
        assert_eq!(decay_beta(&c, e.mu[0]).unwrap(), 0.0);
        let f = PeriodicCoefficients::free_particle(1.0).unwrap();
        assert_eq!(decay_beta(&f, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn out_of_band_alpha_names_the_gap() {
        let c = kp();
        let err = dispersion_alpha(&c, 15.0).unwrap_err();
        assert!(err.to_string().contains("gap 0"), "{err}");
    }

    #[test]
    fn partition_locates() {
        let e = find_band_edges(&kp(), 2).unwrap();
        let p = e.partition();
        assert_eq!(p.locate(0.0), Location::BelowSpectrum);
        assert_eq!(p.locate(8.0), Location::Band(0));
        assert_eq!(p.locate(15.0), Location::Gap(0));
        assert_eq!(p.locate(30.0), Location::Band(1));
        assert_eq!(p.locate(44.5), Location::Gap(1));
        assert_eq!(p.locate(60.0), Location::Beyond);
    }

    #[test]
    fn degenerate_edge_has_two_eigenfunctions() {
        let c = PeriodicCoefficients::free_particle(1.0).unwrap();
        let e = find_band_edges(&c, 1).unwrap();
        let fns = edge_eigenfunction(&c, &e, EdgeId::Mu(0)).unwrap();
        assert_eq!(fns.len(), 2);
        for f in &fns {
            assert_eq!(f.zero_count(), 1, "{:?}", f.zeros);
        }
        // cos(πx) vanishes at 1/2, sin(πx) at 0
        assert!((fns[0].zeros[0] - 0.5).abs() < 1e-10);
        assert!(fns[1].zeros[0].abs() < 1e-10);
    }

    #[test]
    fn kronig_penney_xi_zeros_interlace() {
        let c = kp();
        let e = find_band_edges(&c, 1).unwrap();
        let xi0 = edge_eigenfunction(&c, &e, EdgeId::Mu(0)).unwrap();
        let xi1 = edge_eigenfunction(&c, &e, EdgeId::Mu(1)).unwrap();
        assert_eq!((xi0.len(), xi1.len()), (1, 1));
        assert_eq!(xi0[0].zero_count(), 1);
        assert_eq!(xi1[0].zero_count(), 1);
        let z0 = xi0[0].zeros[0];
        let z1 = xi1[0].zeros[0];
        // strictly between consecutive zeros z0 and z0 + a of ξ0
        let rel = (z1 - z0).rem_euclid(1.0);
        assert!(rel > 1e-6 && rel < 1.0 - 1e-6);
        // semi-periodicity of the samples
        for f in [&xi0[0], &xi1[0]] {
            let n = f.samples.len() - 1;
            assert!((f.samples.values_y[n] + f.samples.values_y[0]).abs() < 1e-8);
            assert!((f.samples.values_py[n] + f.samples.values_py[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn stale_edge_is_rejected() {
        let c = kp();
        let mut e = find_band_edges(&c, 1).unwrap();
        e.mu[0] += 0.5;
        assert!(matches!(
            edge_eigenfunction(&c, &e, EdgeId::Mu(0)),
            Err(HillError::StaleEdge { .. })
        ));
    }
}
