use hill::coeffs::PeriodicCoefficients;
use hill::oracle::{oracle_check, Status};
use hill::propagate::discriminant;
use hill::spectrum::{find_band_edges, EdgeId, GapKind};
use hill::truncated::{
    band_states, classify_spectrum, eigenfunction, gap_state, tau_sweep, GapSubtype, SpectrumEntry, TruncationConfig,
};
use rayon::prelude::*;
use serde_json::json;

use crate::output::{float, Artifact, Csv, Meta};
use crate::CliError;

fn check(ok: bool, field: &str, reason: impl Into<String>) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Validation(format!("argument `--{field}`: {}", reason.into())))
    }
}

fn kind_name(kind: GapKind) -> &'static str {
    match kind {
        GapKind::Periodic => "periodic",
        GapKind::SemiPeriodic => "semi_periodic",
    }
}

pub fn validate(coeffs: &PeriodicCoefficients) -> Result<Artifact, CliError> {
    let r = coeffs.report();
    let mut csv = Csv::new(&["field", "value"]);
    csv.row(&["period".to_string(), float(coeffs.period())]);
    csv.row(&["s_min".to_string(), float(r.s_min)]);
    csv.row(&["p_min".to_string(), float(r.p_min)]);
    csv.row(&["p_max".to_string(), float(r.p_max)]);
    csv.row(&["q_min".to_string(), float(r.q_min)]);
    csv.row(&["q_max".to_string(), float(r.q_max)]);
    csv.row(&["breakpoints".to_string(), r.breakpoints.len().to_string()]);
    csv.row(&["samples_checked".to_string(), r.samples_checked.to_string()]);
    let summary = format!(
        "model is valid: period {}, p in [{}, {}], q in [{}, {}], s >= {}, {} breakpoint(s)",
        coeffs.period(),
        r.p_min,
        r.p_max,
        r.q_min,
        r.q_max,
        r.s_min,
        r.breakpoints.len()
    );
    Ok(Artifact::new(
        csv,
        Meta::new("validate", coeffs, json!({})),
        json!({ "report": r }),
        summary,
    ))
}

pub fn discriminant_scan(
    coeffs: &PeriodicCoefficients,
    lmin: f64,
    lmax: f64,
    points: usize,
) -> Result<Artifact, CliError> {
    check(lmin.is_finite(), "lmin", "must be finite")?;
    check(lmax.is_finite(), "lmax", "must be finite")?;
    check(lmin < lmax, "lmax", format!("must exceed --lmin ({lmin})"))?;
    check(points >= 2, "points", "must be at least 2")?;
    let step = (lmax - lmin) / (points - 1) as f64;
    let lambdas: Vec<f64> = (0..points)
        .map(|i| if i + 1 == points { lmax } else { lmin + i as f64 * step })
        .collect();
    let values = lambdas
        .par_iter()
        .map(|&l| discriminant(coeffs, l))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut csv = Csv::new(&["lambda", "D"]);
    let mut rows = Vec::with_capacity(points);
    let mut stable = 0;
    for (l, d) in lambdas.iter().zip(&values) {
        csv.row(&[float(*l), float(*d)]);
        rows.push(json!({ "lambda": l, "D": d }));
        if d.abs() < 2.0 {
            stable += 1;
        }
    }
    let summary = format!("{points} samples of D on [{lmin}, {lmax}], {stable} inside bands (|D| < 2)");
    Ok(Artifact::new(
        csv,
        Meta::new("discriminant-scan", coeffs, json!({ "lmin": lmin, "lmax": lmax, "points": points })),
        json!({ "samples": rows }),
        summary,
    ))
}

pub fn band_edges(coeffs: &PeriodicCoefficients, gaps: usize) -> Result<Artifact, CliError> {
    check(gaps >= 1, "gaps", "must be at least 1")?;
    let edges = find_band_edges(coeffs, gaps)?;
    let mut csv = Csv::new(&["index", "kind", "lambda", "degenerate"]);
    let mut rows = Vec::new();
    for (id, lambda) in edges.ordered() {
        let (kind, index) = match id {
            EdgeId::Nu(n) => ("nu", n),
            EdgeId::Mu(n) => ("mu", n),
        };
        // ν0 bounds no finite gap; every other edge belongs to gap ⌊(n+1)/2⌋ of its kind
        let degenerate = match id {
            EdgeId::Nu(0) => false,
            EdgeId::Nu(n) => edges.degenerate.get(2 * ((n - 1) / 2) + 1).copied().unwrap_or(false),
            EdgeId::Mu(n) => edges.degenerate.get(2 * (n / 2)).copied().unwrap_or(false),
        };
        csv.row(&[index.to_string(), kind.to_string(), float(lambda), degenerate.to_string()]);
        rows.push(json!({ "index": index, "kind": kind, "lambda": lambda, "degenerate": degenerate }));
    }
    let partition = edges.partition();
    let summary = format!(
        "{} edge(s) through gap {}: {} band(s), {} gap(s), {} degenerate; interlacing {}",
        rows.len(),
        gaps - 1,
        partition.bands.len(),
        partition.gaps.len(),
        edges.degenerate.iter().filter(|d| **d).count(),
        if edges.interlacing_holds() { "holds" } else { "VIOLATED" }
    );
    Ok(Artifact::new(
        csv,
        Meta::new("band-edges", coeffs, json!({ "gaps": gaps })),
        json!({ "edges": rows, "bands": partition.bands, "gaps": partition.gaps }),
        summary,
    ))
}

pub fn band_states_cmd(coeffs: &PeriodicCoefficients, band: usize, cells: usize) -> Result<Artifact, CliError> {
    check(cells >= 1, "cells", "must be at least 1")?;
    let edges = find_band_edges(coeffs, band + 1)?;
    let b = edges.band(band).expect("band below the last computed gap");
    let states = band_states(coeffs, &b, cells)?;
    let mut csv = Csv::new(&["j", "lambda"]);
    for s in &states {
        csv.row(&[s.j.to_string(), float(s.lambda)]);
    }
    let summary = format!(
        "band {band} = ({}, {}): {} band state(s) for N = {cells}",
        b.lower,
        b.upper,
        states.len()
    );
    Ok(Artifact::new(
        csv,
        Meta::new("band-states", coeffs, json!({ "band": band, "cells": cells })),
        json!({ "band": b, "states": states }),
        summary,
    ))
}

pub fn gap_states_cmd(coeffs: &PeriodicCoefficients, gap: usize, taus: &[f64]) -> Result<Artifact, CliError> {
    check(!taus.is_empty(), "tau", "give at least one value")?;
    check(taus.iter().all(|t| t.is_finite()), "tau", "must be finite")?;
    let edges = find_band_edges(coeffs, gap + 1)?;
    let g = edges.gap(gap).expect("gap was computed");
    let states = taus
        .par_iter()
        .map(|&t| gap_state(coeffs, &g, t))
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = Csv::new(&["tau", "lambda", "rho", "subtype"]);
    for s in &states {
        csv.row(&[float(s.tau), float(s.lambda), float(s.multiplier_rho), s.subtype.as_str().to_string()]);
    }
    let summary = states
        .iter()
        .map(|s| format!("tau {}: Lambda = {} ({}, rho = {})", s.tau, s.lambda, s.subtype.as_str(), s.multiplier_rho))
        .collect::<Vec<_>>()
        .join("\n");
    let summary = format!(
        "gap {gap} [{}, {}] ({}{}):\n{summary}",
        g.lower,
        g.upper,
        kind_name(g.kind),
        if g.degenerate { ", degenerate" } else { "" }
    );
    Ok(Artifact::new(
        csv,
        Meta::new("gap-states", coeffs, json!({ "gap": gap, "tau": taus })),
        json!({ "gap": g, "states": states }),
        summary,
    ))
}

pub fn spectrum_cmd(coeffs: &PeriodicCoefficients, tau: f64, cells: usize, bands: usize) -> Result<Artifact, CliError> {
    check(tau.is_finite(), "tau", "must be finite")?;
    check(cells >= 1, "cells", "must be at least 1")?;
    check(bands >= 1, "bands", "must be at least 1")?;
    let cfg = TruncationConfig::new(tau, cells)?;
    let sp = classify_spectrum(coeffs, &cfg, bands)?;
    let mut csv = Csv::new(&["lambda", "type", "band_or_gap_index", "j_or_subtype", "rho_or_blank"]);
    for e in &sp.merged {
        match e {
            SpectrumEntry::Band(b) => csv.row(&[
                float(b.lambda),
                "band".into(),
                b.band_index.to_string(),
                b.j.to_string(),
                String::new(),
            ]),
            SpectrumEntry::Gap(g) => csv.row(&[
                float(g.lambda),
                "gap".into(),
                g.gap_index.to_string(),
                g.subtype.as_str().to_string(),
                float(g.multiplier_rho),
            ]),
        }
    }
    let summary = format!(
        "tau = {tau}, N = {cells}: {} band state(s) in {bands} band(s), {} gap state(s) [{}]",
        sp.band_states.len(),
        sp.gap_states.len(),
        sp.gap_states.iter().map(|g| g.subtype.as_str()).collect::<Vec<_>>().join(", ")
    );
    Ok(Artifact::new(
        csv,
        Meta::new("spectrum", coeffs, json!({ "tau": tau, "cells": cells, "bands": bands })),
        json!({ "states": sp.merged }),
        summary,
    ))
}

pub fn tau_sweep_cmd(coeffs: &PeriodicCoefficients, gap: usize, points: usize, tau0: f64) -> Result<Artifact, CliError> {
    check(points >= 64, "points", "must be at least 64")?;
    check(tau0.is_finite(), "tau0", "must be finite")?;
    let edges = find_band_edges(coeffs, gap + 1)?;
    let g = edges.gap(gap).expect("gap was computed");
    let sweep = tau_sweep(coeffs, &g, tau0, points)?;
    let mut csv = Csv::new(&["tau", "lambda", "subtype"]);
    for i in 0..sweep.tau_grid.len() {
        csv.row(&[float(sweep.tau_grid[i]), float(sweep.lambdas[i]), sweep.subtypes[i].as_str().to_string()]);
    }
    let touches = sweep
        .touches
        .iter()
        .map(|t| format!("{} at tau = {}", t.edge, t.tau))
        .collect::<Vec<_>>();
    let summary = format!(
        "gap {gap} [{}, {}]: {} up(s) and down(s) over one period, Lambda in [{}, {}]; edge touches: {}",
        g.lower,
        g.upper,
        sweep.extrema_count,
        sweep.lambda_min(),
        sweep.lambda_max(),
        if touches.is_empty() { "none".to_string() } else { touches.join(", ") }
    );
    let samples: Vec<_> = (0..sweep.tau_grid.len())
        .map(|i| {
            json!({
                "tau": sweep.tau_grid[i],
                "lambda": sweep.lambdas[i],
                "rho": sweep.rhos[i],
                "subtype": sweep.subtypes[i],
            })
        })
        .collect();
    Ok(Artifact::new(
        csv,
        Meta::new("tau-sweep", coeffs, json!({ "gap": gap, "points": points, "tau0": tau0 })),
        json!({
            "gap": g,
            "extrema_count": sweep.extrema_count,
            "samples": samples,
            "touches": sweep.touches,
        }),
        summary,
    ))
}

pub fn eigenfunction_cmd(
    coeffs: &PeriodicCoefficients,
    lambda: f64,
    tau: f64,
    cells: usize,
    grid_per_cell: usize,
) -> Result<Artifact, CliError> {
    check(lambda.is_finite(), "lambda", "must be finite")?;
    check(tau.is_finite(), "tau", "must be finite")?;
    check(cells >= 1, "cells", "must be at least 1")?;
    check(grid_per_cell >= 2, "grid-per-cell", "must be at least 2")?;
    let cfg = TruncationConfig::new(tau, cells)?;
    let ef = eigenfunction(coeffs, lambda, &cfg, grid_per_cell)?;
    let s = &ef.samples;
    let mut csv = Csv::new(&["x", "y", "py"]);
    for i in 0..s.len() {
        csv.row(&[float(s.grid[i]), float(s.values_y[i]), float(s.values_py[i])]);
    }
    let summary = format!(
        "lambda = {lambda} on [{tau}, {}]: endpoint residual {:.3e}, mass in first cell {:.6}, last cell {:.6}",
        tau + cfg.length(coeffs),
        ef.endpoint_residual,
        ef.first_cell_mass,
        ef.last_cell_mass
    );
    Ok(Artifact::new(
        csv,
        Meta::new(
            "eigenfunction",
            coeffs,
            json!({ "lambda": lambda, "tau": tau, "cells": cells, "grid_per_cell": grid_per_cell }),
        ),
        json!({
            "endpoint_residual": ef.endpoint_residual,
            "first_cell_mass": ef.first_cell_mass,
            "last_cell_mass": ef.last_cell_mass,
            "integrated_backward": ef.integrated_backward,
            "samples": { "x": s.grid, "y": s.values_y, "py": s.values_py },
        }),
        summary,
    ))
}

pub struct OracleArgs {
    pub tau: f64,
    pub cells: usize,
    pub bands: usize,
    pub gridsize: usize,
    pub richardson: bool,
    pub rel_tol: f64,
}

pub fn oracle_check_cmd(coeffs: &PeriodicCoefficients, args: &OracleArgs) -> Result<Artifact, CliError> {
    check(args.tau.is_finite(), "tau", "must be finite")?;
    check(args.cells >= 1, "cells", "must be at least 1")?;
    check(args.bands >= 1, "bands", "must be at least 1")?;
    check(
        args.gridsize >= 64 * args.cells,
        "gridsize",
        format!("need at least 64 points per cell ({})", 64 * args.cells),
    )?;
    check(args.rel_tol > 0.0, "rel-tol", "must be positive")?;
    let cfg = TruncationConfig::new(args.tau, args.cells)?;
    let run = oracle_check(coeffs, &cfg, args.bands, args.gridsize, args.richardson, args.rel_tol)?;
    let r = &run.report;
    let mut csv = Csv::new(&["predicted", "oracle", "rel_err"]);
    for m in &r.matches {
        csv.row(&[float(m.predicted), float(m.oracle), float(m.rel_err)]);
    }
    for p in &r.unmatched_predicted {
        csv.row(&[float(*p), String::new(), String::new()]);
    }
    for o in &r.unmatched_oracle {
        csv.row(&[String::new(), float(*o), String::new()]);
    }
    let status = match r.status {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
    };
    let surface = run.predicted.gap_states.iter().filter(|g| g.subtype.is_surface()).count();
    let edge_states = run
        .predicted
        .gap_states
        .iter()
        .filter(|g| matches!(g.subtype, GapSubtype::BandEdgePeriodic | GapSubtype::BandEdgeSemiPeriodic))
        .count();
    let mut summary = format!(
        "{status}: {} predicted vs {} oracle eigenvalues below {} ({} band, {surface} surface, {edge_states} band-edge \
         gap state(s)); worst relative error {:.3e} (tolerance {:e})",
        r.predicted_count,
        r.oracle_count,
        run.cap,
        run.predicted.band_states.len(),
        r.worst_rel_err,
        r.rel_tol
    );
    if let Some(reason) = &r.reason {
        summary.push('\n');
        summary.push_str(reason);
    }
    let mut artifact = Artifact::new(
        csv,
        Meta::new(
            "oracle-check",
            coeffs,
            json!({
                "tau": args.tau,
                "cells": args.cells,
                "bands": args.bands,
                "gridsize": args.gridsize,
                "richardson": args.richardson,
                "rel_tol": args.rel_tol,
            }),
        ),
        json!({
            "status": status,
            "worst_rel_err": r.worst_rel_err,
            "cap": run.cap,
            "predicted_count": r.predicted_count,
            "oracle_count": r.oracle_count,
            "matches": r.matches,
            "unmatched_predicted": r.unmatched_predicted,
            "unmatched_oracle": r.unmatched_oracle,
            "reason": r.reason,
        }),
        summary,
    );
    artifact.oracle_failed = r.status == Status::Fail;
    Ok(artifact)
}
