use std::f64::consts::PI;
use std::sync::Arc;

use lyapunov_core::arrow::{mb_expectation, mf_expectation, ArrowOperator};
use lyapunov_core::hardy::{forward_component, mf_expectation_oracle, tail_density, HardyOracle};
use lyapunov_core::mtransform::mf_expectation_via_m;
use lyapunov_core::spectral::{ChannelState, MINUS, PLUS};
use lyapunov_core::states::{
    exponential_mf, exponential_profile, gaussian_packet, oracle_grid, random_grid, random_smooth_state,
    GaussianPacketParams,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn oracle_state() -> ChannelState {
    exponential_profile(Arc::new(oracle_grid(4096).unwrap())).unwrap()
}

#[test]
fn forward_component_values() {
    let psi = oracle_state();
    assert!(forward_component(&psi, 0.5).iter().all(|f| *f == Complex64::new(0.0, 0.0)));
    let at_origin = forward_component(&psi, -1e-300)[0];
    assert!((at_origin.norm() - 2f64.sqrt() / (2.0 * PI)).abs() < 1e-6);
    // |√2/(2π(1 - iτ))| at τ = -1
    assert!((forward_component(&psi, -1.0)[0].norm() - 1.0 / (2.0 * PI)).abs() < 1e-6);
}

#[test]
fn tail_density_values() {
    let psi = oracle_state();
    for tau in [0.0, -0.5, -1.0, -4.0] {
        let exact = 1.0 / (PI * (1.0 + tau * tau));
        assert!((tail_density(&psi, tau) - exact).abs() < 1e-5);
    }
    let zero = ChannelState::zero(Arc::clone(psi.grid()), &["0"], 1.0).unwrap();
    assert_eq!(tail_density(&zero, -1.0), 0.0);
    assert_eq!(mf_expectation_oracle(&zero, 0.0).unwrap(), 0.0);
}

#[test]
fn oracle_closed_form() {
    let psi = oracle_state();
    for t in [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0] {
        assert!((mf_expectation_oracle(&psi, t).unwrap() - exponential_mf(t)).abs() < 1e-5, "{t}");
    }
    assert!(mf_expectation_oracle(&psi, 100.0).unwrap() < 4e-3);
}

#[test]
fn long_time_limit_recovers_the_norm() {
    // 1 - ⟨M_F(t)⟩ = arctan(1/|t|)/π for t < 0; 3.2e-5 at t = -1e4
    let psi = oracle_state();
    let value = HardyOracle::new(&psi).mf(-1e4).unwrap();
    assert!((value - psi.norm_sq()).abs() < 1e-4, "{value}");
    let at_hundred = HardyOracle::new(&psi).mf(-100.0).unwrap();
    assert!((1.0 - at_hundred - (0.01f64).atan() / PI).abs() < 1e-6);
}

#[test]
fn sum_of_moduli_not_modulus_of_sum() {
    // Channels with different profiles: Σ|f_j|² and |Σ f_j|² give different
    // traces and only the first matches the direct kernel.
    let grid = Arc::new(random_grid(4096).unwrap());
    let psi = random_smooth_state(Arc::clone(&grid), &[PLUS, MINUS], 5).unwrap();
    let oracle = HardyOracle::new(&psi);
    for t in [-0.5, 0.0, 0.7] {
        let direct = mf_expectation(&psi, t).unwrap();
        assert!((oracle.mf(t).unwrap() - direct).abs() < 5e-4);
    }
    let coherent: Vec<Complex64> = psi
        .channel(0)
        .iter()
        .zip(psi.channel(1))
        .map(|(a, b)| a + b)
        .collect();
    let merged = ChannelState::new(Arc::clone(&grid), vec!["0".into()], vec![coherent], 1.0).unwrap();
    let wrong = HardyOracle::new(&merged).mf(0.0).unwrap();
    assert!((wrong - mf_expectation(&psi, 0.0).unwrap()).abs() > 1e-2);
}

#[test]
fn derivative_identity() {
    let p = GaussianPacketParams::default();
    let psi = gaussian_packet(&p, Arc::new(p.default_grid(4096).unwrap())).unwrap();
    let op = ArrowOperator::for_state(&psi);
    let oracle = HardyOracle::new(&psi);
    let h = 1e-4;
    for t in [-0.3, -0.05, 0.0, 0.05, 0.3] {
        let slope = (op.mf(&psi, t + h).unwrap() - op.mf(&psi, t - h).unwrap()) / (2.0 * h);
        assert!((slope + oracle.transform_density(-t)).abs() < 1e-3, "{t}");
    }
}

#[test]
fn trace_matches_pointwise() {
    let psi = oracle_state();
    let oracle = HardyOracle::new(&psi);
    let times = [-1.5, -0.2, 0.0, 0.9];
    let trace = oracle.trace(&times).unwrap();
    for (t, v) in times.iter().zip(&trace) {
        assert!((oracle.mf(*t).unwrap() - v).abs() < 1e-7);
    }
}

#[test]
fn backward_operator_against_oracle() {
    let psi = oracle_state();
    for t in [-1.0, 0.3] {
        let mb = mb_expectation(&psi, t).unwrap();
        assert!((mb - (1.0 - mf_expectation_oracle(&psi, t).unwrap())).abs() < 2e-4);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn three_methods_agree(seed in any::<u64>(), t in -3.0f64..3.0) {
        let grid = Arc::new(random_grid(4096).unwrap());
        let psi = random_smooth_state(grid, &[PLUS, MINUS], seed).unwrap();
        let direct = mf_expectation(&psi, t).unwrap();
        let oracle = mf_expectation_oracle(&psi, t).unwrap();
        let via_m = mf_expectation_via_m(&psi, t).unwrap();
        prop_assert!((direct - oracle).abs() < 5e-4);
        prop_assert!((direct - via_m).abs() < 1e-3);
        prop_assert!((oracle - via_m).abs() < 1e-3);
    }

    #[test]
    fn oracle_is_monotone(seed in any::<u64>()) {
        let grid = Arc::new(random_grid(1024).unwrap());
        let psi = random_smooth_state(grid, &[PLUS, MINUS], seed).unwrap();
        let times: Vec<f64> = (0..13).map(|k| -3.0 + 0.5 * k as f64).collect();
        let trace = HardyOracle::new(&psi).trace(&times).unwrap();
        prop_assert!(trace.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(trace.iter().all(|&v| v >= 0.0));
    }
}
