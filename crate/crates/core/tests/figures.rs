//! Spot values from the published curves.

mod common;

use common::*;
use gecodes::bounds::{bound_matrixpower, gallager_bound, rare_bound, CodeParams, RhoMode};
use gecodes::markov::{stationary, ChannelParams};

fn fig2_params(n: usize) -> ChannelParams {
    ChannelParams::new(N_ALPHA / n as f64, N_BETA / n as f64, EPS_G, EPS_B).unwrap()
}

#[test]
fn gallager_curve_first_point() {
    let code = CodeParams::from_bits(50, 0.25).unwrap();
    let r = gallager_bound(&fig2_params(50), &code, RhoMode::PerTransition).unwrap();
    assert!(rel_err(r.averaged, 0.000624627) < 0.02, "{}", r.averaged);
}

#[test]
fn rare_curve_points() {
    for (n, rate, want) in [(50, 0.25, 0.000792121), (100, 0.5, 0.0776962)] {
        let code = CodeParams::from_bits(n, rate).unwrap();
        let r = rare_bound(N_ALPHA, N_BETA, EPS_G, EPS_B, &code, RhoMode::PerTransition).unwrap();
        assert!(rel_err(r.averaged, want) < 0.02, "N={n} R={rate}: {}", r.averaged);
    }
}

#[test]
fn per_entry_rho_is_what_the_curves_use() {
    // One shared rho is looser, and visibly so at this point.
    let code = CodeParams::from_bits(100, 0.5).unwrap();
    let params = fig2_params(100);
    let per = gallager_bound(&params, &code, RhoMode::PerTransition).unwrap();
    let shared = gallager_bound(&params, &code, RhoMode::Averaged).unwrap();
    assert!(rel_err(per.averaged, 0.0734126) < 0.02);
    assert!(shared.averaged > per.averaged);
}

#[test]
fn averaged_value_is_stationary_mixture() {
    let code = CodeParams::from_bits(75, 0.4).unwrap();
    let params = fig2_params(75);
    let r = gallager_bound(&params, &code, RhoMode::Averaged).unwrap();
    let t = bound_matrixpower(&params, &code, r.rho_star[0][0]);
    let (pg, pb) = stationary(&params).unwrap();
    let want = pg * (t[0][0] + t[0][1]) + pb * (t[1][0] + t[1][1]);
    assert!(rel_err(r.averaged, want) < 1e-12);
}
