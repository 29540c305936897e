//! Finite-difference cross-check of the truncated spectrum.
//!
//! The operator `-(p·y')' + q·y = λ·s·y` is discretised with the usual
//! three-point stencil. Each coefficient enters through exact integrals:
//! `p` as the harmonic mean over `[x_i, x_{i+1}]`, `q` and `s` as averages
//! over the dual cell `[x_i - h/2, x_i + h/2]`. This keeps the scheme
//! symmetric and second order across jumps without snapping breakpoints
//! to nodes.
//!
//! Eigenvalues come from Sturm-sequence inertia counts and bisection, so the
//! number of eigenvalues below a cap is exact.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::PeriodicCoefficients;
use crate::error::{invalid_arg, Result};
use crate::spectrum::{find_band_edges, BandEdges};
use crate::truncated::{classify_with_edges, TruncatedSpectrum, TruncationConfig};

/// Pivots smaller than this are nudged off zero before division.
const PIVOT_FLOOR: f64 = 1e-300;

/// Interior points per cell used when no grid size is given.
pub const DEFAULT_POINTS_PER_CELL: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Dirichlet,
    Periodic,
    Antiperiodic,
}

/// Symmetric tridiagonal stiffness and diagonal mass on a uniform grid.
///
/// For Dirichlet problems the unknowns are the `M` interior nodes and
/// `h = L/(M+1)`. For (anti)periodic problems the unknowns are `M` nodes
/// starting at `τ`, `h = L/M`, and the last node couples back to the first
/// with sign `±1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    pub n_points: usize,
    pub diag: Vec<f64>,
    /// `offdiag[i]` couples nodes `i` and `i+1`; for wrapped problems the
    /// final entry couples the last node with the first, sign included.
    pub offdiag: Vec<f64>,
    pub mass_diag: Vec<f64>,
    pub boundary_kind: BoundaryKind,
    pub tau: f64,
    pub length: f64,
    pub h: f64,
    // mass-scaled copy, A = S^{-1/2} K S^{-1/2}
    a_diag: Vec<f64>,
    a_off: Vec<f64>,
}

/// Builds the discrete operator on `[τ, τ + n_cells·a]` with `m` unknowns.
pub fn assemble(
    coeffs: &PeriodicCoefficients,
    tau: f64,
    n_cells: usize,
    m: usize,
    boundary_kind: BoundaryKind,
) -> Result<DiscreteOperator> {
    if !tau.is_finite() {
        return Err(invalid_arg("tau", "must be finite"));
    }
    if n_cells == 0 {
        return Err(invalid_arg("n_cells", "must be at least 1"));
    }
    let wrapped = boundary_kind != BoundaryKind::Dirichlet;
    if m == 0 || (wrapped && m < 3) {
        return Err(invalid_arg(
            "gridsize",
            format!("{m} points is too few for a {boundary_kind:?} grid"),
        ));
    }
    let length = n_cells as f64 * coeffs.period();
    let h = if wrapped { length / m as f64 } else { length / (m + 1) as f64 };
    let offset = if wrapped { 0 } else { 1 };
    let node = |i: usize| tau + (i + offset) as f64 * h;

    // k_{i+1/2}/h on the link to the right of unknown i; Dirichlet problems
    // also need the link left of unknown 0.
    let link = |lo: f64, hi: f64| 1.0 / coeffs.integrals(lo, hi).inv_p;
    let left_link = if wrapped {
        None
    } else {
        Some(link(tau, node(0)))
    };
    let right: Vec<f64> = (0..m)
        .map(|i| {
            let hi = if i + 1 == m { tau + length } else { node(i + 1) };
            link(node(i), hi)
        })
        .collect();

    let mut diag = Vec::with_capacity(m);
    let mut mass_diag = Vec::with_capacity(m);
    for i in 0..m {
        let x = node(i);
        let dual = coeffs.integrals(x - 0.5 * h, x + 0.5 * h);
        let left = match (i, left_link) {
            (0, Some(l)) => l,
            (0, None) => right[m - 1],
            _ => right[i - 1],
        };
        diag.push(left + right[i] + dual.q);
        mass_diag.push(dual.s);
    }
    let sign = match boundary_kind {
        BoundaryKind::Antiperiodic => -1.0,
        _ => 1.0,
    };
    let offdiag: Vec<f64> = if wrapped {
        (0..m)
            .map(|i| if i + 1 == m { -sign * right[i] } else { -right[i] })
            .collect()
    } else {
        right[..m - 1].iter().map(|k| -k).collect()
    };

    let inv_sqrt: Vec<f64> = mass_diag.iter().map(|s| 1.0 / s.sqrt()).collect();
    let a_diag = diag.iter().zip(&inv_sqrt).map(|(d, w)| d * w * w).collect();
    let a_off = offdiag
        .iter()
        .enumerate()
        .map(|(i, e)| e * inv_sqrt[i] * inv_sqrt[(i + 1) % m])
        .collect();

    Ok(DiscreteOperator {
        n_points: m,
        diag,
        offdiag,
        mass_diag,
        boundary_kind,
        tau,
        length,
        h,
        a_diag,
        a_off,
    })
}

fn floor_pivot(d: f64) -> f64 {
    if d.abs() < PIVOT_FLOOR {
        -PIVOT_FLOOR
    } else {
        d
    }
}

impl DiscreteOperator {
    fn wrapped(&self) -> bool {
        self.boundary_kind != BoundaryKind::Dirichlet
    }

    /// Number of eigenvalues strictly below `sigma` (inertia of `K - σS`).
    ///
    /// Wrapped grids eliminate node 0 last. An exactly double eigenvalue
    /// whose eigenvector vanishes there is then only resolved to about
    /// `sqrt(ε)` relative.
    pub fn count_below(&self, sigma: f64) -> usize {
        if !self.wrapped() {
            let mut count = 0;
            let mut d = 1.0;
            for i in 0..self.n_points {
                let e2 = if i == 0 { 0.0 } else { self.a_off[i - 1] * self.a_off[i - 1] };
                d = floor_pivot(self.a_diag[i] - sigma - e2 / d);
                if d < 0.0 {
                    count += 1;
                }
            }
            return count;
        }
        // Border node 0 is eliminated last: inertia(T - σ) plus the sign of
        // the Schur complement c - bᵀ(T - σ)⁻¹b.
        let m = self.n_points;
        let t = m - 1;
        let mut count = 0;
        let mut d = vec![0.0; t];
        let mut w = vec![0.0; t];
        let mut b = vec![0.0; t];
        b[0] += self.a_off[0];
        b[t - 1] += self.a_off[m - 1];
        for k in 0..t {
            let i = k + 1;
            let (e2, l) = if k == 0 {
                (0.0, 0.0)
            } else {
                let e = self.a_off[i - 1];
                (e * e, e / d[k - 1])
            };
            d[k] = floor_pivot(self.a_diag[i] - sigma - if k == 0 { 0.0 } else { e2 / d[k - 1] });
            if d[k] < 0.0 {
                count += 1;
            }
            w[k] = if k == 0 { b[0] } else { b[k] - l * w[k - 1] };
        }
        // back substitution for z = (T - σ)⁻¹ b, accumulating bᵀz
        let mut z_next = 0.0;
        let mut btz = 0.0;
        for k in (0..t).rev() {
            let z = if k + 1 == t {
                w[k] / d[k]
            } else {
                w[k] / d[k] - self.a_off[k + 1] / d[k] * z_next
            };
            btz += b[k] * z;
            z_next = z;
        }
        if self.a_diag[0] - sigma - btz < 0.0 {
            count += 1;
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let m = self.n_points;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..m {
            let left = if i > 0 {
                self.a_off[i - 1].abs()
            } else if self.wrapped() {
                self.a_off[m - 1].abs()
            } else {
                0.0
            };
            let right = if i < self.a_off.len() { self.a_off[i].abs() } else { 0.0 };
            lo = lo.min(self.a_diag[i] - left - right);
            hi = hi.max(self.a_diag[i] + left + right);
        }
        (lo, hi)
    }

    /// The `k`-th eigenvalue (0-based) by bisection on the inertia count.
    fn kth(&self, k: usize, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// All eigenvalues below `cap`, ascending.
    pub fn eigenvalues_below(&self, cap: f64) -> Vec<f64> {
        let n = self.count_below(cap);
        let (lo, _) = self.gershgorin();
        let lo = lo.min(cap) - 1.0;
        (0..n).into_par_iter().map(|k| self.kth(k, lo, cap)).collect()
    }

    /// The `n` smallest eigenvalues, ascending.
    pub fn lowest_eigenvalues(&self, n: usize) -> Vec<f64> {
        let n = n.min(self.n_points);
        let (lo, hi) = self.gershgorin();
        let (lo, hi) = (lo - 1.0, hi + 1.0);
        (0..n).into_par_iter().map(|k| self.kth(k, lo, hi)).collect()
    }
}

/// Unknown count for the grid with exactly half the spacing.
pub fn refined_points(m: usize, boundary_kind: BoundaryKind) -> usize {
    match boundary_kind {
        BoundaryKind::Dirichlet => 2 * m + 1,
        _ => 2 * m,
    }
}

/// `(4·fine - coarse)/3`, paired in order; the result has the shorter length.
pub fn richardson(coarse: &[f64], fine: &[f64]) -> Vec<f64> {
    coarse
        .iter()
        .zip(fine)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect()
}

/// Eigenvalues below `cap` on the grid with `m` unknowns, optionally
/// Richardson-extrapolated against the grid with half the spacing.
///
/// The count is the inertia of the finest grid used.
pub fn oracle_eigenvalues(
    coeffs: &PeriodicCoefficients,
    tau: f64,
    n_cells: usize,
    m: usize,
    boundary_kind: BoundaryKind,
    cap: f64,
    extrapolate: bool,
) -> Result<Vec<f64>> {
    let coarse = assemble(coeffs, tau, n_cells, m, boundary_kind)?;
    if !extrapolate {
        return Ok(coarse.eigenvalues_below(cap));
    }
    let fine = assemble(coeffs, tau, n_cells, refined_points(m, boundary_kind), boundary_kind)?;
    let fine_vals = fine.eigenvalues_below(cap);
    let coarse_vals = coarse.lowest_eigenvalues(fine_vals.len());
    Ok(richardson(&coarse_vals, &fine_vals))
}

/// The `n` lowest eigenvalues, optionally Richardson-extrapolated.
pub fn oracle_lowest(
    coeffs: &PeriodicCoefficients,
    tau: f64,
    n_cells: usize,
    m: usize,
    boundary_kind: BoundaryKind,
    n: usize,
    extrapolate: bool,
) -> Result<Vec<f64>> {
    let coarse = assemble(coeffs, tau, n_cells, m, boundary_kind)?.lowest_eigenvalues(n);
    if !extrapolate {
        return Ok(coarse);
    }
    let fine = assemble(coeffs, tau, n_cells, refined_points(m, boundary_kind), boundary_kind)?.lowest_eigenvalues(n);
    Ok(richardson(&coarse, &fine))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedState {
    pub predicted: f64,
    pub oracle: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub status: Status,
    pub predicted_count: usize,
    pub oracle_count: usize,
    pub matches: Vec<MatchedState>,
    pub worst_rel_err: f64,
    pub unmatched_predicted: Vec<f64>,
    pub unmatched_oracle: Vec<f64>,
    pub rel_tol: f64,
    /// Why the comparison failed, if it did.
    pub reason: Option<String>,
}

fn rel_err(predicted: f64, oracle: f64) -> f64 {
    (predicted - oracle).abs() / predicted.abs().max(f64::MIN_POSITIVE)
}

/// One-to-one matching of two eigenvalue lists.
///
/// Equal-length lists are paired in sorted order. Otherwise pairs are taken
/// greedily by smallest relative distance and the leftovers are reported.
pub fn compare(oracle_vals: &[f64], predicted: &[f64], rel_tol: f64) -> ComparisonReport {
    let mut o: Vec<f64> = oracle_vals.to_vec();
    let mut p: Vec<f64> = predicted.to_vec();
    o.sort_by(f64::total_cmp);
    p.sort_by(f64::total_cmp);

    let mut matches = Vec::new();
    let mut unmatched_predicted = Vec::new();
    let mut unmatched_oracle = Vec::new();
    if o.len() == p.len() {
        matches = p
            .iter()
            .zip(&o)
            .map(|(&pv, &ov)| MatchedState {
                predicted: pv,
                oracle: ov,
                rel_err: rel_err(pv, ov),
            })
            .collect();
    } else {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(p.len() * o.len());
        for (i, &pv) in p.iter().enumerate() {
            for (j, &ov) in o.iter().enumerate() {
                pairs.push((rel_err(pv, ov), i, j));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut used_p = vec![false; p.len()];
        let mut used_o = vec![false; o.len()];
        for (e, i, j) in pairs {
            if !used_p[i] && !used_o[j] {
                used_p[i] = true;
                used_o[j] = true;
                matches.push(MatchedState {
                    predicted: p[i],
                    oracle: o[j],
                    rel_err: e,
                });
            }
        }
        matches.sort_by(|a, b| a.predicted.total_cmp(&b.predicted));
        unmatched_predicted = p.iter().zip(&used_p).filter(|(_, u)| !**u).map(|(v, _)| *v).collect();
        unmatched_oracle = o.iter().zip(&used_o).filter(|(_, u)| !**u).map(|(v, _)| *v).collect();
    }

    let worst_rel_err = matches.iter().map(|m| m.rel_err).fold(0.0, f64::max);
    let reason = if o.len() != p.len() {
        Some(format!(
            "count mismatch: {} predicted, {} oracle; unmatched predicted {:?}, unmatched oracle {:?}",
            p.len(),
            o.len(),
            unmatched_predicted,
            unmatched_oracle
        ))
    } else if !(worst_rel_err < rel_tol) {
        Some(format!("worst relative error {worst_rel_err:e} is not below {rel_tol:e}"))
    } else {
        None
    };
    ComparisonReport {
        status: if reason.is_none() { Status::Pass } else { Status::Fail },
        predicted_count: p.len(),
        oracle_count: o.len(),
        matches,
        worst_rel_err,
        unmatched_predicted,
        unmatched_oracle,
        rel_tol,
        reason,
    }
}

/// [`compare`] against every state of a truncated spectrum.
pub fn compare_spectrum(oracle_vals: &[f64], predicted: &TruncatedSpectrum, rel_tol: f64) -> ComparisonReport {
    compare(oracle_vals, &predicted.lambdas(), rel_tol)
}

/// A full predicted-versus-oracle run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub config: TruncationConfig,
    pub n_bands: usize,
    pub gridsize: usize,
    pub extrapolated: bool,
    /// Every oracle eigenvalue below this is expected to match a prediction.
    pub cap: f64,
    pub predicted: TruncatedSpectrum,
    pub oracle: Vec<f64>,
    pub report: ComparisonReport,
}

/// Cap just above the top band state of band `n_bands - 1`: halfway to the
/// band's upper edge, so no gap state of the next gap can fall below it.
pub fn spectrum_cap(edges: &BandEdges, spectrum: &TruncatedSpectrum, n_bands: usize) -> f64 {
    let band = edges.band(n_bands - 1).expect("band was classified");
    let top = spectrum
        .band_states
        .iter()
        .filter(|s| s.band_index == band.index)
        .map(|s| s.lambda)
        .fold(band.lower, f64::max);
    0.5 * (top + band.upper)
}

/// Classifies bands `0..n_bands` and compares against the Dirichlet oracle
/// with `gridsize` interior points (at least 64 per cell).
pub fn oracle_check(
    coeffs: &PeriodicCoefficients,
    config: &TruncationConfig,
    n_bands: usize,
    gridsize: usize,
    extrapolate: bool,
    rel_tol: f64,
) -> Result<OracleCheck> {
    if n_bands == 0 {
        return Err(invalid_arg("n_bands", "must be at least 1"));
    }
    if gridsize < 64 * config.n_cells {
        return Err(invalid_arg(
            "gridsize",
            format!("need at least 64 points per cell ({}), got {gridsize}", 64 * config.n_cells),
        ));
    }
    let edges = find_band_edges(coeffs, n_bands)?;
    let predicted = classify_with_edges(coeffs, &edges, config, n_bands)?;
    let cap = spectrum_cap(&edges, &predicted, n_bands);
    let oracle = oracle_eigenvalues(
        coeffs,
        config.tau,
        config.n_cells,
        gridsize,
        BoundaryKind::Dirichlet,
        cap,
        extrapolate,
    )?;
    let report = compare_spectrum(&oracle, &predicted, rel_tol);
    Ok(OracleCheck {
        config: *config,
        n_bands,
        gridsize,
        extrapolated: extrapolate,
        cap,
        predicted,
        oracle,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn textbook_laplacian() {
        let c = PeriodicCoefficients::free_particle(1.0).unwrap();
        let op = assemble(&c, 0.0, 1, 4, BoundaryKind::Dirichlet).unwrap();
        let h: f64 = 0.2;
        let vals = op.eigenvalues_below(1e6);
        assert_eq!(vals.len(), 4);
        for (k, v) in vals.iter().enumerate() {
            let exact = (2.0 - 2.0 * ((k + 1) as f64 * PI / 5.0).cos()) / (h * h);
            assert!((v - exact).abs() < 1e-12 * exact, "{v} vs {exact}");
        }
        assert!(op.mass_diag.iter().all(|&m| m > 0.0));
    }

    #[test]
    fn empty_below_smallest() {
        let c = PeriodicCoefficients::free_particle(1.0).unwrap();
        let op = assemble(&c, 0.0, 1, 4, BoundaryKind::Dirichlet).unwrap();
        assert!(op.eigenvalues_below(1.0).is_empty());
    }

    #[test]
    fn periodic_free_particle() {
        // periodic spectrum of the discrete ring: (2 - 2cos(2πk/M))/h², double except k = 0
        let c = PeriodicCoefficients::free_particle(1.0).unwrap();
        let m = 16;
        let op = assemble(&c, 0.0, 1, m, BoundaryKind::Periodic).unwrap();
        let h = 1.0 / m as f64;
        let vals = op.lowest_eigenvalues(5);
        let ring = |k: f64| (2.0 - 2.0 * (2.0 * PI * k / m as f64).cos()) / (h * h);
        let expect = [0.0, ring(1.0), ring(1.0), ring(2.0), ring(2.0)];
        for (v, e) in vals.iter().zip(expect) {
            assert!((v - e).abs() < 1e-6 * e.max(1.0), "{vals:?}");
        }
        let anti = assemble(&c, 0.0, 1, m, BoundaryKind::Antiperiodic).unwrap();
        let vals = anti.lowest_eigenvalues(2);
        let e = (2.0 - 2.0 * (PI / m as f64).cos()) / (h * h);
        assert!((vals[0] - e).abs() < 1e-9 * e && (vals[1] - e).abs() < 1e-9 * e, "{vals:?}");
    }

    #[test]
    fn wrapped_needs_three_points() {
        let c = PeriodicCoefficients::free_particle(1.0).unwrap();
        assert!(assemble(&c, 0.0, 1, 2, BoundaryKind::Periodic).is_err());
        assert!(assemble(&c, 0.0, 0, 8, BoundaryKind::Dirichlet).is_err());
    }

    #[test]
    fn richardson_free_particle() {
        let c = PeriodicCoefficients::free_particle(1.0).unwrap();
        let vals = oracle_eigenvalues(&c, 0.0, 4, 4096, BoundaryKind::Dirichlet, 6.0, true).unwrap();
        let exact: Vec<f64> = (1..=3).map(|j| (j as f64 * PI / 4.0).powi(2)).collect();
        let r = compare(&vals, &exact, 1e-6);
        assert_eq!(r.status, Status::Pass, "{r:?}");
    }

    #[test]
    fn identical_lists_pass() {
        let v = [1.0, 2.0, 3.5];
        let r = compare(&v, &v, 1e-12);
        assert_eq!(r.status, Status::Pass);
        assert_eq!(r.worst_rel_err, 0.0);
    }

    #[test]
    fn deleted_state_fails() {
        let r = compare(&[1.0, 2.0, 3.0], &[1.0, 3.0], 1e-6);
        assert_eq!(r.status, Status::Fail);
        assert_eq!(r.unmatched_oracle, vec![2.0]);
        assert!(r.reason.unwrap().starts_with("count mismatch"));
    }

    #[test]
    fn second_order_convergence() {
        let c = PeriodicCoefficients::kronig_penney(1.0, 10.0, 0.5).unwrap();
        let edges = find_band_edges(&c, 1).unwrap();
        let exact = crate::truncated::band_states(&c, &edges.band(0).unwrap(), 4).unwrap();
        let err = |m: usize| {
            let v = assemble(&c, 0.0, 4, m, BoundaryKind::Dirichlet).unwrap().lowest_eigenvalues(1)[0];
            (v - exact[0].lambda).abs()
        };
        let ratio = err(255) / err(511);
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    }
}
