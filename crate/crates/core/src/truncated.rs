//! The Dirichlet problem on `[τ, τ + N·a]`.
//!
//! Its eigenvalues split into two families:
//!
//! * **band states**: inside band `m` there are exactly `N - 1` eigenvalues,
//!   fixed by `α(Λ_j)·N·a = jπ`, i.e. `D(Λ_j) = 2·cos(jπ/N)`. They depend on
//!   the length `N·a` only, never on `τ`.
//! * **gap states**: inside every finite gap there is exactly one eigenvalue,
//!   fixed by `y(τ) = y(τ + a) = 0`. It can move with `τ` but does not depend
//!   on `N`. Repeating the one-cell condition `N` times gives the full
//!   boundary condition.
//!
//! The boundary-vanishing solution of a gap state is a Floquet solution,
//! `y(x + a) = ρ·y(x)`. `|ρ| < 1` puts its weight at the left end,
//! `|ρ| > 1` at the right end, and `ρ = ±1` means `τ` is a zero of a
//! band-edge eigenfunction and the state sits on the edge itself.

use std::cmp::Ordering;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::PeriodicCoefficients;
use crate::error::{invalid_arg, HillError, Result};
use crate::propagate::{discriminant, monodromy, solve_ivp, solve_terminal, uniform_grid, SolutionSamples};
use crate::roots::bisect;
use crate::spectrum::{find_band_edges, Band, BandEdges, EdgeId, Gap, GapKind};

/// `||ρ| - 1|` below this is reported as a band-edge state.
pub const EDGE_MULTIPLIER_TOL: f64 = 1e-6;

/// Points in the gap-state pre-scan.
pub const GAP_PRESCAN: usize = 64;

/// Default samples per cell for truncated eigenfunctions.
pub const DEFAULT_GRID_PER_CELL: usize = 256;

/// Endpoint residual (relative to `max |y|`) tolerated by [`eigenfunction`].
pub const ENDPOINT_TOL: f64 = 1e-6;

/// Where and how long the truncation is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationConfig {
    pub tau: f64,
    pub n_cells: usize,
}

impl TruncationConfig {
    pub fn new(tau: f64, n_cells: usize) -> Result<Self> {
        if !tau.is_finite() {
            return Err(invalid_arg("tau", "must be finite"));
        }
        if n_cells == 0 {
            return Err(invalid_arg("n_cells", "must be at least 1"));
        }
        Ok(TruncationConfig { tau, n_cells })
    }

    /// `L = N·a`.
    pub fn length(&self, coeffs: &PeriodicCoefficients) -> f64 {
        self.n_cells as f64 * coeffs.period()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandState {
    pub band_index: usize,
    pub j: usize,
    pub lambda: f64,
}

/// How a gap state sits in the truncated interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapSubtype {
    /// `|ρ| < 1`: concentrated near `τ`.
    SurfaceLeft,
    /// `|ρ| > 1`: concentrated near `τ + L`.
    SurfaceRight,
    /// `ρ = +1`: a periodic band-edge eigenfunction.
    BandEdgePeriodic,
    /// `ρ = -1`: a semi-periodic band-edge eigenfunction.
    BandEdgeSemiPeriodic,
    /// Zero-width gap; `Λ` is the double edge for every `τ`.
    DegenerateGap,
}

impl GapSubtype {
    pub fn is_surface(self) -> bool {
        matches!(self, GapSubtype::SurfaceLeft | GapSubtype::SurfaceRight)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GapSubtype::SurfaceLeft => "surface_left",
            GapSubtype::SurfaceRight => "surface_right",
            GapSubtype::BandEdgePeriodic => "band_edge_periodic",
            GapSubtype::BandEdgeSemiPeriodic => "band_edge_semi_periodic",
            GapSubtype::DegenerateGap => "degenerate_gap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapState {
    pub gap_index: usize,
    pub kind: GapKind,
    pub tau: f64,
    pub lambda: f64,
    /// `(p·y')(τ + a) / (p·y')(τ)` for the solution with `y(τ) = 0`.
    pub multiplier_rho: f64,
    pub subtype: GapSubtype,
}

impl GapState {
    /// `ln |ρ| / a`, signed: negative for left-localised states.
    pub fn signed_decay(&self, period: f64) -> f64 {
        self.multiplier_rho.abs().ln() / period
    }
}

/// One entry of the merged, λ-sorted spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpectrumEntry {
    Band(BandState),
    Gap(GapState),
}

impl SpectrumEntry {
    pub fn lambda(&self) -> f64 {
        match self {
            SpectrumEntry::Band(b) => b.lambda,
            SpectrumEntry::Gap(g) => g.lambda,
        }
    }

    fn type_rank(&self) -> u8 {
        match self {
            SpectrumEntry::Band(_) => 0,
            SpectrumEntry::Gap(_) => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSpectrum {
    pub config: TruncationConfig,
    pub band_states: Vec<BandState>,
    pub gap_states: Vec<GapState>,
    /// Both families sorted by `(λ, type)`.
    pub merged: Vec<SpectrumEntry>,
}

impl TruncatedSpectrum {
    pub fn lambdas(&self) -> Vec<f64> {
        self.merged.iter().map(SpectrumEntry::lambda).collect()
    }

    pub fn len(&self) -> usize {
        self.merged.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merged.is_empty()
    }
}

/// The `N - 1` band states of `band`, in order of `j`.
///
/// `λ` increases with `j` on bands where `D` falls (even bands) and
/// decreases on the others.
pub fn band_states(coeffs: &PeriodicCoefficients, band: &Band, n_cells: usize) -> Result<Vec<BandState>> {
    if n_cells == 0 {
        return Err(invalid_arg("n_cells", "must be at least 1"));
    }
    let (lo, hi) = (band.lower, band.upper);
    let d_lo = discriminant(coeffs, lo)?;
    let d_hi = discriminant(coeffs, hi)?;
    (1..n_cells)
        .into_par_iter()
        .map(|j| {
            let target = 2.0 * (j as f64 * PI / n_cells as f64).cos();
            let f = |l: f64| Ok(discriminant(coeffs, l)? - target);
            let lambda = bisect(f, lo, hi, d_lo - target, d_hi - target, 0.0).map_err(|e| match e {
                HillError::NotBracketed { lo, hi, what } => HillError::NotBracketed {
                    lo,
                    hi,
                    what: format!("band {} state j = {j}: {what}", band.index),
                },
                other => other,
            })?;
            Ok(BandState {
                band_index: band.index,
                j,
                lambda,
            })
        })
        .collect()
}

fn classify_multiplier(kind: GapKind, rho: f64) -> GapSubtype {
    if (rho.abs() - 1.0).abs() < EDGE_MULTIPLIER_TOL {
        match kind {
            GapKind::Periodic => GapSubtype::BandEdgePeriodic,
            GapKind::SemiPeriodic => GapSubtype::BandEdgeSemiPeriodic,
        }
    } else if rho.abs() < 1.0 {
        GapSubtype::SurfaceLeft
    } else {
        GapSubtype::SurfaceRight
    }
}

/// The single eigenvalue in `gap` for truncation point `tau`.
///
/// Roots `y(τ + a; λ)` of the solution with `y(τ) = 0`, `(p·y')(τ) = 1` on
/// the closed gap: a [`GAP_PRESCAN`]-point scan, refined on anomalies, then
/// bisection to machine precision.
pub fn gap_state(coeffs: &PeriodicCoefficients, gap: &Gap, tau: f64) -> Result<GapState> {
    if !tau.is_finite() {
        return Err(invalid_arg("tau", "must be finite"));
    }
    let sigma = gap.kind.sign();
    if gap.degenerate {
        return Ok(GapState {
            gap_index: gap.index,
            kind: gap.kind,
            tau,
            lambda: gap.lower,
            multiplier_rho: sigma,
            subtype: GapSubtype::DegenerateGap,
        });
    }
    let g = |l: f64| Ok(monodromy(coeffs, l, tau)?.m12);
    let (lo, hi) = (gap.lower, gap.upper);

    let mut n = GAP_PRESCAN;
    let lambda = 'search: loop {
        let xs: Vec<f64> = uniform_grid(lo, hi, n - 1);
        let gs = xs.iter().map(|&x| g(x)).collect::<Result<Vec<f64>>>()?;
        let scale = gs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut brackets = Vec::new();
        let mut exact = Vec::new();
        for i in 0..xs.len() {
            if gs[i] == 0.0 {
                exact.push(xs[i]);
            } else if i + 1 < xs.len() && gs[i + 1] != 0.0 && gs[i].signum() != gs[i + 1].signum() {
                brackets.push(i);
            }
        }
        match (brackets.len(), exact.len()) {
            (1, 0) => {
                let i = brackets[0];
                break 'search bisect(g, xs[i], xs[i + 1], gs[i], gs[i + 1], 0.0)?;
            }
            (0, 1) => break 'search exact[0],
            (0, 0) => {
                // no interior crossing: the root sits on an edge
                let (edge, ge) = if gs[0].abs() <= gs[xs.len() - 1].abs() {
                    (lo, gs[0])
                } else {
                    (hi, gs[xs.len() - 1])
                };
                if ge.abs() <= 1e-6 * scale {
                    break 'search edge;
                }
            }
            _ => {}
        }
        if n >= GAP_PRESCAN * 16 {
            return Err(HillError::GapRootAnomaly {
                gap: gap.index,
                tau,
                reason: format!(
                    "{} sign changes and {} exact zeros after refinement to {n} points; \
                     exactly one root is required",
                    brackets.len(),
                    exact.len()
                ),
            });
        }
        n *= 4;
    };

    let rho = monodromy(coeffs, lambda, tau)?.m22;
    Ok(GapState {
        gap_index: gap.index,
        kind: gap.kind,
        tau,
        lambda,
        multiplier_rho: rho,
        subtype: classify_multiplier(gap.kind, rho),
    })
}

fn sort_entries(entries: &mut [SpectrumEntry]) {
    entries.sort_by(|a, b| {
        a.lambda()
            .partial_cmp(&b.lambda())
            .unwrap_or(Ordering::Equal)
            .then(a.type_rank().cmp(&b.type_rank()))
    });
}

/// Band states for bands `0..n_bands` and the gap states between them.
pub fn classify_spectrum(
    coeffs: &PeriodicCoefficients,
    config: &TruncationConfig,
    n_bands: usize,
) -> Result<TruncatedSpectrum> {
    if n_bands == 0 {
        return Err(invalid_arg("n_bands", "must be at least 1"));
    }
    let edges = find_band_edges(coeffs, n_bands)?;
    classify_with_edges(coeffs, &edges, config, n_bands)
}

/// [`classify_spectrum`] on precomputed edges (at least `n_bands` gaps).
pub fn classify_with_edges(
    coeffs: &PeriodicCoefficients,
    edges: &BandEdges,
    config: &TruncationConfig,
    n_bands: usize,
) -> Result<TruncatedSpectrum> {
    if n_bands == 0 || edges.n_gaps() < n_bands {
        return Err(invalid_arg(
            "n_bands",
            format!("need 1 ≤ n_bands ≤ {} computed gaps, got {n_bands}", edges.n_gaps()),
        ));
    }
    let mut band_list = Vec::new();
    for k in 0..n_bands {
        let band = edges.band(k).expect("band below computed gap");
        let states = band_states(coeffs, &band, config.n_cells)?;
        if states.len() != config.n_cells - 1 || states.iter().any(|s| !band.contains(s.lambda)) {
            return Err(HillError::Numerical(format!(
                "band {k}: expected {} band states strictly inside ({}, {})",
                config.n_cells - 1,
                band.lower,
                band.upper
            )));
        }
        band_list.extend(states);
    }
    let gap_list = (0..n_bands - 1)
        .into_par_iter()
        .map(|k| gap_state(coeffs, &edges.gap(k).expect("gap in range"), config.tau))
        .collect::<Result<Vec<_>>>()?;
    let mut merged: Vec<SpectrumEntry> = band_list
        .iter()
        .copied()
        .map(SpectrumEntry::Band)
        .chain(gap_list.iter().copied().map(SpectrumEntry::Gap))
        .collect();
    sort_entries(&mut merged);
    Ok(TruncatedSpectrum {
        config: *config,
        band_states: band_list,
        gap_states: gap_list,
        merged,
    })
}

/// A point in a τ-sweep where the gap state touches a band edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeTouch {
    pub tau: f64,
    pub lambda: f64,
    pub edge: EdgeId,
    pub multiplier_rho: f64,
    /// Subtype just before and just after the touch.
    pub from: GapSubtype,
    pub to: GapSubtype,
}

/// `Λ(τ)` over one period of truncation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauSweep {
    pub gap_index: usize,
    pub gap: Gap,
    pub tau_grid: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub rhos: Vec<f64>,
    pub subtypes: Vec<GapSubtype>,
    /// Completed ups and downs over the period.
    pub extrema_count: usize,
    pub touches: Vec<EdgeTouch>,
}

impl TauSweep {
    /// Smallest `Λ` seen on the grid or at a refined edge touch.
    pub fn lambda_min(&self) -> f64 {
        self.lambdas
            .iter()
            .copied()
            .chain(self.touches.iter().map(|t| t.lambda))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambdas
            .iter()
            .copied()
            .chain(self.touches.iter().map(|t| t.lambda))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Completed ups and downs of a periodic sequence whose last sample repeats
/// the first. Differences smaller than `flat` are ignored.
pub fn count_ups_and_downs(values: &[f64], flat: f64) -> usize {
    let signs: Vec<f64> = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| d.abs() > flat)
        .map(f64::signum)
        .collect();
    if signs.len() < 2 {
        return 0;
    }
    let changes = signs
        .iter()
        .zip(signs.iter().cycle().skip(1))
        .filter(|(a, b)| a != b)
        .count();
    changes / 2
}

/// Evaluates the gap state at `n_points` equally spaced `τ` in `[τ0, τ0 + a]`
/// and refines every edge touch by bisection on `ln |ρ(τ)|`.
pub fn tau_sweep(coeffs: &PeriodicCoefficients, gap: &Gap, tau0: f64, n_points: usize) -> Result<TauSweep> {
    if n_points < 64 {
        return Err(invalid_arg("n_points", format!("must be at least 64, got {n_points}")));
    }
    let a = coeffs.period();
    let tau_grid = uniform_grid(tau0, tau0 + a, n_points - 1);
    let states = tau_grid
        .par_iter()
        .map(|&t| gap_state(coeffs, gap, t))
        .collect::<Result<Vec<_>>>()?;
    let lambdas: Vec<f64> = states.iter().map(|s| s.lambda).collect();
    let rhos: Vec<f64> = states.iter().map(|s| s.multiplier_rho).collect();
    let subtypes: Vec<GapSubtype> = states.iter().map(|s| s.subtype).collect();

    let extrema_count = if gap.degenerate {
        0
    } else {
        count_ups_and_downs(&lambdas, 1e-9 * gap.width())
    };

    let mut touches = Vec::new();
    if !gap.degenerate {
        let log_rho = |t: f64| Ok(gap_state(coeffs, gap, t)?.multiplier_rho.abs().ln());
        let logs: Vec<f64> = rhos.iter().map(|r| r.abs().ln()).collect();
        let brackets: Vec<(usize, Option<f64>)> = (0..n_points - 1)
            .filter_map(|i| {
                if logs[i] == 0.0 {
                    Some((i, Some(tau_grid[i])))
                } else if logs[i + 1] != 0.0 && logs[i].signum() != logs[i + 1].signum() {
                    Some((i, None))
                } else {
                    None
                }
            })
            .collect();
        touches = brackets
            .par_iter()
            .map(|&(i, exact)| {
                let t = match exact {
                    Some(t) => t,
                    None => bisect(log_rho, tau_grid[i], tau_grid[i + 1], logs[i], logs[i + 1], 0.0)?,
                };
                let s = gap_state(coeffs, gap, t)?;
                let edge = if (s.lambda - gap.lower).abs() <= (s.lambda - gap.upper).abs() {
                    gap.lower_edge()
                } else {
                    gap.upper_edge()
                };
                // an exact hit on sample i takes its "before" from the previous sample
                let from = match (exact, i) {
                    (None, _) => subtypes[i],
                    (Some(_), 0) => subtypes[n_points - 2],
                    (Some(_), _) => subtypes[i - 1],
                };
                Ok(EdgeTouch {
                    tau: t,
                    lambda: s.lambda,
                    edge,
                    multiplier_rho: s.multiplier_rho,
                    from,
                    to: subtypes[i + 1],
                })
            })
            .collect::<Result<Vec<_>>>()?;
    }

    Ok(TauSweep {
        gap_index: gap.index,
        gap: *gap,
        tau_grid,
        lambdas,
        rhos,
        subtypes,
        extrema_count,
        touches,
    })
}

/// A sampled, normalised eigenfunction of the truncated problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedEigenfunction {
    /// Normalised so that `∫ s·y² dx = 1` (composite trapezoid).
    pub samples: SolutionSamples,
    /// Share of `∫ s·y²` in `[τ, τ + a]`.
    pub first_cell_mass: f64,
    /// Share of `∫ s·y²` in `[τ + L - a, τ + L]`.
    pub last_cell_mass: f64,
    /// `|y|` at the far end relative to `max |y|`.
    pub endpoint_residual: f64,
    /// True when the solution was integrated from `τ + L` towards `τ`.
    pub integrated_backward: bool,
}

fn trapezoid_mass(coeffs: &PeriodicCoefficients, x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| {
            let s0 = coeffs.evaluate(xw[0]).s;
            let s1 = coeffs.evaluate(xw[1]).s;
            0.5 * (xw[1] - xw[0]) * (s0 * yw[0] * yw[0] + s1 * yw[1] * yw[1])
        })
        .sum()
}

/// Samples the eigenfunction for eigenvalue `lambda` on
/// `N·grid_per_cell` intervals.
///
/// Starts from the vanishing end whose integration direction is stable:
/// forward from `τ` unless the one-cell multiplier of the solution vanishing
/// at `τ` is below one in modulus, in which case it integrates back from
/// `τ + L`. Either way the result is the same eigenfunction up to scale.
pub fn eigenfunction(
    coeffs: &PeriodicCoefficients,
    lambda: f64,
    config: &TruncationConfig,
    grid_per_cell: usize,
) -> Result<TruncatedEigenfunction> {
    if grid_per_cell < 2 {
        return Err(invalid_arg("grid_per_cell", "must be at least 2"));
    }
    let n = config.n_cells;
    let tau = config.tau;
    let len = config.length(coeffs);
    let grid = uniform_grid(tau, tau + len, n * grid_per_cell);
    let m = monodromy(coeffs, lambda, tau)?;
    let backward = m.trace().abs() > 2.0 && m.m22.abs() < 1.0;
    let mut samples = if backward {
        solve_terminal(coeffs, lambda, &grid, 0.0, 1.0)?
    } else {
        solve_ivp(coeffs, lambda, tau, 0.0, 1.0, &grid)?
    };
    let amp = samples.max_abs_y();
    let far = if backward { samples.values_y[0] } else { *samples.values_y.last().unwrap() };
    let endpoint_residual = if amp > 0.0 { far.abs() / amp } else { f64::INFINITY };
    if !(endpoint_residual < ENDPOINT_TOL) {
        return Err(HillError::EndpointResidual {
            residual: endpoint_residual,
            tolerance: ENDPOINT_TOL,
        });
    }

    let total = trapezoid_mass(coeffs, &grid, &samples.values_y);
    let norm = total.sqrt();
    for v in samples.values_y.iter_mut().chain(samples.values_py.iter_mut()) {
        *v /= norm;
    }
    samples.basis_coefficients = [samples.basis_coefficients[0] / norm, samples.basis_coefficients[1] / norm];
    let cell = grid_per_cell;
    let total_n = grid.len() - 1;
    let first = trapezoid_mass(coeffs, &grid[..=cell], &samples.values_y[..=cell]);
    let last = trapezoid_mass(coeffs, &grid[total_n - cell..], &samples.values_y[total_n - cell..]);
    Ok(TruncatedEigenfunction {
        samples,
        first_cell_mass: first,
        last_cell_mass: last,
        endpoint_residual,
        integrated_backward: backward,
    })
}
