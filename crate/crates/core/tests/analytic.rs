mod common;

use common::{kp, kp_discriminant, kp_edges, kp_transfer, rel};
use hill::oracle::{oracle_lowest, BoundaryKind};
use hill::propagate::{discriminant, propagate, solve_ivp, uniform_grid};
use hill::spectrum::{decay_beta, dispersion_alpha, find_band_edges};

#[test]
fn kronig_penney_two_segment_product() {
    let c = kp();
    let t = propagate(&c, 5.0, 0.0, 1.0).unwrap();
    let exact = kp_transfer(5.0, 1.0);
    let got = [[t.m11, t.m12], [t.m21, t.m22]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((got[i][j] - exact[i][j]).abs() < 1e-10, "{got:?} vs {exact:?}");
        }
    }
}

#[test]
fn kronig_penney_ivp_samples() {
    let c = kp();
    let grid = uniform_grid(0.0, 1.0, 10);
    let s = solve_ivp(&c, 5.0, 0.0, 0.0, 1.0, &grid).unwrap();
    for (i, &x) in grid.iter().enumerate() {
        let m = kp_transfer(5.0, x);
        assert!((s.values_y[i] - m[0][1]).abs() < 1e-10, "x = {x}");
        assert!((s.values_py[i] - m[1][1]).abs() < 1e-10, "x = {x}");
    }
}

#[test]
fn kronig_penney_edges_match_analytic_scan() {
    let c = kp();
    let e = find_band_edges(&c, 3).unwrap();
    let computed = e.ordered();
    let analytic = kp_edges(e.mu[3] + 1.0);
    assert_eq!(computed.len(), analytic.len());
    for ((id, l), (la, target)) in computed.iter().zip(&analytic) {
        assert_eq!(id.kind().sign(), target.signum(), "{id}");
        assert!(rel(*l, *la) < 1e-10, "{id}: {l} vs {la}");
    }
}

#[test]
fn kronig_penney_edges_match_fd_oracle() {
    let c = kp();
    let e = find_band_edges(&c, 2).unwrap();
    let anti = oracle_lowest(&c, 0.0, 1, 4000, BoundaryKind::Antiperiodic, 2, true).unwrap();
    let per = oracle_lowest(&c, 0.0, 1, 4000, BoundaryKind::Periodic, 3, true).unwrap();
    for (fd, mu) in anti.iter().zip(&e.mu[..2]) {
        assert!((fd - mu).abs() / mu < 1e-4, "{fd} vs {mu}");
    }
    for (fd, nu) in per.iter().zip(&e.nu[..3]) {
        assert!((fd - nu).abs() / nu < 1e-4, "{fd} vs {nu}");
    }
}

#[test]
fn kronig_penney_alpha_and_beta() {
    let c = kp();
    let e = find_band_edges(&c, 1).unwrap();
    let band = e.band(0).unwrap();
    let mid = 0.5 * (band.lower + band.upper);
    let alpha = dispersion_alpha(&c, mid).unwrap();
    assert!((alpha - (kp_discriminant(mid) / 2.0).acos()).abs() < 1e-10);

    let gap = e.gap(0).unwrap();
    let mid = 0.5 * (gap.lower + gap.upper);
    let beta = decay_beta(&c, mid).unwrap();
    assert!((beta - (kp_discriminant(mid).abs() / 2.0).acosh()).abs() < 1e-10);
    assert!((discriminant(&c, mid).unwrap() - kp_discriminant(mid)).abs() < 1e-10);
}
