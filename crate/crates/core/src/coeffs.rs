//! Periodic coefficient triples `(p, q, s)` for
//!
//! ```text
//! (p(x) y'(x))' + (λ s(x) - q(x)) y(x) = 0
//! ```
//!
//! All models share one period `a`. Evaluation reduces `x` into `[0, a)`
//! before looking anything up, so a coefficient triple is periodic by
//! construction rather than by the care of each model.
//!
//! Piecewise-constant models (`FreeParticle`, `ConstantShift`,
//! `KronigPenney`, `PiecewiseConstant`) carry explicit breakpoints so that
//! the propagator can switch closed-form branches exactly at segment
//! boundaries. `Mathieu` is smooth and has no breakpoints.
//!
//! `p` is required to be strictly positive. `PiecewiseConstant` also lets
//! `p` jump between segments, which goes beyond a continuous `p`; the state
//! `(y, p·y')` stays continuous across such jumps.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{HillError, Result};

/// Number of uniformly spaced points used by [`validate`] in addition to
/// every segment breakpoint.
pub const VALIDATION_SAMPLES: usize = 4096;

/// Relative tolerance on `Σ widths = a` for piecewise-constant models.
const TILING_RTOL: f64 = 1e-12;

/// One constant-coefficient segment of a [`Model::PiecewiseConstant`] cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub width: f64,
    pub p: f64,
    pub q: f64,
    pub s: f64,
}

impl Segment {
    pub fn new(width: f64, p: f64, q: f64, s: f64) -> Self {
        Segment { width, p, q, s }
    }
}

/// The shape of one period of the coefficients.
///
/// Unless stated otherwise `p ≡ 1` and `s ≡ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    /// `q ≡ 0`.
    FreeParticle,
    /// `q ≡ v0`.
    ConstantShift { v0: f64 },
    /// `q = barrier_height` on `[0, barrier_width)`, zero on the rest of the cell.
    KronigPenney {
        barrier_height: f64,
        barrier_width: f64,
    },
    /// `q = amplitude · cos(2πx / a)`.
    Mathieu { amplitude: f64 },
    /// Consecutive segments starting at `x = 0`; widths must sum to `a`.
    PiecewiseConstant { segments: Vec<Segment> },
}

/// Coefficient values at a single point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientValues {
    pub p: f64,
    pub q: f64,
    pub s: f64,
}

/// Constant piece of a piecewise-constant cell, in cell-local coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Piece {
    pub start: f64,
    pub end: f64,
    pub values: CoefficientValues,
}

/// What [`validate`] observed while checking a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Witnessed lower bound of `s(x)`.
    pub s_min: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    /// Segment breakpoints inside `[0, a)`, empty for smooth models.
    pub breakpoints: Vec<f64>,
    pub samples_checked: usize,
}

/// A validated periodic coefficient triple. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicCoefficients {
    period: f64,
    model: Model,
    s_min: f64,
    pieces: Option<Vec<Piece>>,
    report: ValidationReport,
}

fn reject(msg: impl Into<String>) -> HillError {
    HillError::InvalidCoefficients(msg.into())
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(reject(format!("{name} is not finite ({v})")))
    }
}

/// Constant pieces for the piecewise-constant models, `None` for smooth ones.
fn build_pieces(period: f64, model: &Model) -> Result<Option<Vec<Piece>>> {
    let unit = |q: f64| CoefficientValues { p: 1.0, q, s: 1.0 };
    let pieces = match model {
        Model::FreeParticle => vec![Piece {
            start: 0.0,
            end: period,
            values: unit(0.0),
        }],
        Model::ConstantShift { v0 } => {
            finite("v0", *v0)?;
            vec![Piece {
                start: 0.0,
                end: period,
                values: unit(*v0),
            }]
        }
        Model::KronigPenney {
            barrier_height,
            barrier_width,
        } => {
            finite("barrier_height", *barrier_height)?;
            finite("barrier_width", *barrier_width)?;
            if *barrier_width < 0.0 || *barrier_width > period {
                return Err(reject(format!(
                    "barrier_width {barrier_width} must lie in [0, {period}]"
                )));
            }
            let mut v = Vec::with_capacity(2);
            if *barrier_width > 0.0 {
                v.push(Piece {
                    start: 0.0,
                    end: *barrier_width,
                    values: unit(*barrier_height),
                });
            }
            if *barrier_width < period {
                v.push(Piece {
                    start: *barrier_width,
                    end: period,
                    values: unit(0.0),
                });
            }
            v
        }
        Model::Mathieu { amplitude } => {
            finite("amplitude", *amplitude)?;
            return Ok(None);
        }
        Model::PiecewiseConstant { segments } => {
            if segments.is_empty() {
                return Err(reject("empty segment list"));
            }
            let mut v = Vec::with_capacity(segments.len());
            let mut start = 0.0;
            for (i, seg) in segments.iter().enumerate() {
                finite("segment width", seg.width)?;
                finite("segment p", seg.p)?;
                finite("segment q", seg.q)?;
                finite("segment s", seg.s)?;
                if seg.width <= 0.0 {
                    return Err(reject(format!("segment {i} has non-positive width {}", seg.width)));
                }
                if seg.p == 0.0 {
                    return Err(reject(format!("p vanishes on segment {i}")));
                }
                if seg.p < 0.0 {
                    return Err(reject(format!("p is negative on segment {i} (p = {})", seg.p)));
                }
                if seg.s <= 0.0 {
                    return Err(reject(format!(
                        "s is not bounded below by a positive constant on segment {i} (s = {})",
                        seg.s
                    )));
                }
                let end = start + seg.width;
                v.push(Piece {
                    start,
                    end,
                    values: CoefficientValues {
                        p: seg.p,
                        q: seg.q,
                        s: seg.s,
                    },
                });
                start = end;
            }
            if (start - period).abs() > TILING_RTOL * period {
                return Err(reject(format!(
                    "segments do not tile the period: widths sum to {start}, period is {period}"
                )));
            }
            // Pin the last end to the period so reduction never falls off the cell.
            if let Some(last) = v.last_mut() {
                last.end = period;
            }
            v
        }
    };
    Ok(Some(pieces))
}

fn reduce(period: f64, x: f64) -> f64 {
    let r = x.rem_euclid(period);
    // rem_euclid can round up to `period` for tiny negative x.
    if r >= period {
        0.0
    } else {
        r
    }
}

fn piece_index(pieces: &[Piece], local: f64) -> usize {
    pieces
        .partition_point(|p| p.start <= local)
        .saturating_sub(1)
}

fn eval_raw(period: f64, model: &Model, pieces: Option<&[Piece]>, x: f64) -> CoefficientValues {
    let local = reduce(period, x);
    match (model, pieces) {
        (Model::Mathieu { amplitude }, _) => CoefficientValues {
            p: 1.0,
            q: amplitude * (2.0 * PI * local / period).cos(),
            s: 1.0,
        },
        (_, Some(pieces)) => pieces[piece_index(pieces, local)].values,
        (_, None) => unreachable!("piecewise models always carry pieces"),
    }
}

/// Checks the hypotheses on a candidate `(period, model)` pair.
///
/// Accepts iff `p > 0` and `s ≥ s_min > 0` on a dense grid plus every
/// segment breakpoint, the period is positive and piecewise segments tile
/// the period exactly.
pub fn validate(period: f64, model: &Model) -> Result<ValidationReport> {
    if !period.is_finite() || period <= 0.0 {
        return Err(reject(format!("period must be positive and finite, got {period}")));
    }
    let pieces = build_pieces(period, model)?;

    let mut xs: Vec<f64> = (0..VALIDATION_SAMPLES)
        .map(|i| period * i as f64 / VALIDATION_SAMPLES as f64)
        .collect();
    let mut breakpoints = Vec::new();
    if let Some(pieces) = &pieces {
        for piece in pieces {
            breakpoints.push(piece.start);
            xs.push(piece.start);
            // the left limit of the breakpoint belongs to the previous piece
            xs.push(0.5 * (piece.start + piece.end));
        }
    }

    let mut report = ValidationReport {
        s_min: f64::INFINITY,
        p_min: f64::INFINITY,
        p_max: f64::NEG_INFINITY,
        q_min: f64::INFINITY,
        q_max: f64::NEG_INFINITY,
        breakpoints,
        samples_checked: xs.len(),
    };
    for &x in &xs {
        let c = eval_raw(period, model, pieces.as_deref(), x);
        if c.p == 0.0 {
            return Err(reject(format!("p vanishes at x = {x}")));
        }
        if c.p < 0.0 {
            return Err(reject(format!("p is negative at x = {x}")));
        }
        report.s_min = report.s_min.min(c.s);
        report.p_min = report.p_min.min(c.p);
        report.p_max = report.p_max.max(c.p);
        report.q_min = report.q_min.min(c.q);
        report.q_max = report.q_max.max(c.q);
    }
    if report.s_min <= 0.0 {
        return Err(reject(format!(
            "s is not bounded below by a positive constant (min s = {})",
            report.s_min
        )));
    }
    // Mathieu extremes are known in closed form; the grid may miss them slightly.
    if let Model::Mathieu { amplitude } = model {
        report.q_min = -amplitude.abs();
        report.q_max = amplitude.abs();
    }
    Ok(report)
}

/// Integrals of `1/p`, `q` and `s` over an interval.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoefficientIntegrals {
    pub inv_p: f64,
    pub q: f64,
    pub s: f64,
}

impl PeriodicCoefficients {
    /// Validates and builds a coefficient triple.
    pub fn new(period: f64, model: Model) -> Result<Self> {
        let report = validate(period, &model)?;
        let pieces = build_pieces(period, &model)?;
        Ok(PeriodicCoefficients {
            period,
            model,
            s_min: report.s_min,
            pieces,
            report,
        })
    }

    pub fn free_particle(period: f64) -> Result<Self> {
        Self::new(period, Model::FreeParticle)
    }

    pub fn constant_shift(period: f64, v0: f64) -> Result<Self> {
        Self::new(period, Model::ConstantShift { v0 })
    }

    pub fn kronig_penney(period: f64, barrier_height: f64, barrier_width: f64) -> Result<Self> {
        Self::new(
            period,
            Model::KronigPenney {
                barrier_height,
                barrier_width,
            },
        )
    }

    pub fn mathieu(period: f64, amplitude: f64) -> Result<Self> {
        Self::new(period, Model::Mathieu { amplitude })
    }

    pub fn piecewise_constant(period: f64, segments: Vec<Segment>) -> Result<Self> {
        Self::new(period, Model::PiecewiseConstant { segments })
    }

    #[inline]
    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    /// Coefficient values at `x`, reduced into `[0, a)` first.
    #[inline]
    pub fn evaluate(&self, x: f64) -> CoefficientValues {
        eval_raw(self.period, &self.model, self.pieces.as_deref(), x)
    }

    /// True for models that propagate with closed-form segment matrices.
    pub fn is_piecewise_constant(&self) -> bool {
        self.pieces.is_some()
    }

    /// Bounds of `q/s` over one period.
    pub fn q_over_s_bounds(&self) -> (f64, f64) {
        match &self.pieces {
            Some(pieces) => pieces.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), pc| {
                let r = pc.values.q / pc.values.s;
                (lo.min(r), hi.max(r))
            }),
            None => (self.report.q_min, self.report.q_max),
        }
    }

    /// `∫₀ᵃ √(s/p) dx`, the length that sets the asymptotic spacing of band edges.
    pub fn optical_length(&self) -> f64 {
        match &self.pieces {
            Some(pieces) => pieces
                .iter()
                .map(|pc| (pc.end - pc.start) * (pc.values.s / pc.values.p).sqrt())
                .sum(),
            None => self.period,
        }
    }

    /// Calls `f(x_lo, x_hi, values)` for every maximal constant sub-interval of
    /// `[x0, x1]`. Only meaningful for piecewise-constant models.
    pub(crate) fn for_each_piece<E>(
        &self,
        x0: f64,
        x1: f64,
        mut f: impl FnMut(f64, f64, &CoefficientValues) -> std::result::Result<(), E>,
    ) -> std::result::Result<(), E> {
        let pieces = self.pieces.as_deref().expect("piecewise-constant model");
        let a = self.period;
        let mut x = x0;
        let mut cell = (x / a).floor();
        let mut local = x - cell * a;
        if local < 0.0 {
            cell -= 1.0;
            local = x - cell * a;
        } else if local >= a {
            cell += 1.0;
            local = x - cell * a;
        }
        let mut idx = piece_index(pieces, local.clamp(0.0, a));
        while x < x1 {
            let mut next = cell * a + pieces[idx].end;
            let slack = 1e-14 * x.abs().max(a);
            if next - x <= slack {
                idx += 1;
                if idx == pieces.len() {
                    idx = 0;
                    cell += 1.0;
                }
                next = cell * a + pieces[idx].end;
            }
            let xb = next.min(x1);
            if xb > x {
                f(x, xb, &pieces[idx].values)?;
            }
            x = xb;
        }
        Ok(())
    }

    /// Exact integrals of `1/p`, `q` and `s` over `[lo, hi]` (`lo ≤ hi`).
    pub fn integrals(&self, lo: f64, hi: f64) -> CoefficientIntegrals {
        let mut acc = CoefficientIntegrals::default();
        if hi <= lo {
            return acc;
        }
        match &self.model {
            Model::Mathieu { amplitude } => {
                let k = 2.0 * PI / self.period;
                // integrate the reduced-coordinate cosine; the antiderivative is periodic
                let w = hi - lo;
                let q = amplitude * ((k * hi).sin() - (k * lo).sin()) / k;
                acc.inv_p = w;
                acc.s = w;
                acc.q = q;
            }
            _ => {
                let _ = self.for_each_piece::<()>(lo, hi, |xa, xb, v| {
                    let w = xb - xa;
                    acc.inv_p += w / v.p;
                    acc.q += w * v.q;
                    acc.s += w * v.s;
                    Ok(())
                });
            }
        }
        acc
    }
}
