use std::sync::Arc;

use lyapunov_core::arrow::{
    completeness_defect, lyapunov_trace, mb_expectation, mf_expectation, mpc_commutator_defect, ArrowOperator,
    Orientation, SingularKernel, MONOTONICITY_TOLERANCE,
};
use lyapunov_core::spectral::{ChannelState, EnergyGrid, MINUS, PLUS};
use lyapunov_core::states::{
    evolve, exponential_mf, exponential_profile, oracle_grid, random_grid, random_smooth_state,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn grid(n: usize) -> Arc<EnergyGrid> {
    Arc::new(random_grid(n).unwrap())
}

fn random(g: &Arc<EnergyGrid>, seed: u64) -> ChannelState {
    random_smooth_state(Arc::clone(g), &[PLUS, MINUS], seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn completeness_is_exact(seed in any::<u64>(), t in -20.0f64..20.0) {
        let g = grid(1024);
        let psi = random(&g, seed);
        prop_assert!(completeness_defect(&psi, t).unwrap() < 1e-12);
    }

    #[test]
    fn form_is_hermitian_and_quadratic(seed in any::<u64>(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let g = grid(512);
        let k = SingularKernel::new(Arc::clone(&g), Orientation::Forward);
        let u = random(&g, seed);
        let v = random(&g, seed ^ 0x9e37_79b9);
        let a = Complex64::new(re, im);
        let q = |s: &ChannelState| k.state_form(s).unwrap();
        let qu = q(&u);
        prop_assert!(qu.im.abs() < 1e-12);
        let scaled = q(&u.map_amplitudes(|_, _, x| a * x));
        prop_assert!((scaled - a.norm_sqr() * qu).norm() < 1e-11 * (1.0 + a.norm_sqr()));
        let sum = u.map_amplitudes(|j, i, x| x + v.channel(j)[i]);
        let diff = u.map_amplitudes(|j, i, x| x - v.channel(j)[i]);
        let parallelogram = q(&sum) + q(&diff) - 2.0 * qu - 2.0 * q(&v);
        prop_assert!(parallelogram.norm() < 1e-11);
    }

    #[test]
    fn expectation_stays_in_unit_interval(seed in any::<u64>(), t in -50.0f64..50.0) {
        let g = grid(1024);
        let psi = random(&g, seed);
        let mf = mf_expectation(&psi, t).unwrap();
        prop_assert!((-1e-8..=1.0 + 1e-8).contains(&mf), "{}", mf);
    }

    #[test]
    fn trace_does_not_rise(seed in any::<u64>()) {
        let g = grid(2048);
        let psi = random(&g, seed);
        let times: Vec<f64> = (0..201).map(|k| -5.0 + 0.05 * k as f64).collect();
        let trace = lyapunov_trace(&psi, &times).unwrap();
        prop_assert!(trace.is_monotone(), "{:?}", trace.violations);
        prop_assert!(trace.max_step() <= MONOTONICITY_TOLERANCE);
    }

    #[test]
    fn channels_add(seed in any::<u64>(), t in -3.0f64..3.0) {
        let g = grid(1024);
        let psi = random(&g, seed);
        let op = ArrowOperator::new(Arc::clone(&g));
        let whole = op.mf(&psi, t).unwrap();
        let parts = op.mf(&psi.restrict_to_channel(0), t).unwrap() + op.mf(&psi.restrict_to_channel(1), t).unwrap();
        prop_assert!((whole - parts).abs() < 1e-12);
    }

    #[test]
    fn rate_is_non_negative(seed in any::<u64>()) {
        let g = grid(1024);
        let (rate, _) = mpc_commutator_defect(&random(&g, seed)).unwrap();
        prop_assert!(rate >= -1e-10);
    }
}

#[test]
fn closed_form_trace() {
    let psi = exponential_profile(Arc::new(oracle_grid(4096).unwrap())).unwrap();
    let times: Vec<f64> = (0..21).map(|k| -2.0 + 0.2 * k as f64).collect();
    let trace = lyapunov_trace(&psi, &times).unwrap();
    for (t, (mf, mb)) in times.iter().zip(trace.mf_values.iter().zip(&trace.mb_values)) {
        assert!((mf - exponential_mf(*t)).abs() < 2e-4);
        assert!((mb - (1.0 - exponential_mf(*t))).abs() < 2e-4);
    }
    assert!((mb_expectation(&psi, 1.0).unwrap() - 0.75).abs() < 2e-4);
    assert!(mb_expectation(&psi, -100.0).unwrap() < 5e-3);
}

#[test]
fn rate_matches_closed_form_slope() {
    let psi = exponential_profile(Arc::new(oracle_grid(4096).unwrap())).unwrap();
    let (rate, _) = mpc_commutator_defect(&psi).unwrap();
    assert!((rate - 1.0 / std::f64::consts::PI).abs() < 1e-3);
    // -d⟨M_F⟩/dt by central difference
    let h = 1e-4;
    let slope = (mf_expectation(&psi, -h).unwrap() - mf_expectation(&psi, h).unwrap()) / (2.0 * h);
    assert!((rate - slope).abs() < 1e-6);
}

#[test]
fn rate_commutes_with_nothing_on_small_grids() {
    let g = Arc::new(EnergyGrid::logarithmic(1e-2, 10.0, 64).unwrap());
    assert!(ArrowOperator::new(g).noncommutativity() > 1e-3);
}

#[test]
fn zero_state() {
    let g = grid(256);
    let zero = ChannelState::zero(Arc::clone(&g), &[PLUS, MINUS], 1.0).unwrap();
    assert_eq!(mf_expectation(&zero, 0.4).unwrap(), 0.0);
    assert_eq!(mb_expectation(&zero, 0.4).unwrap(), 0.0);
    assert_eq!(completeness_defect(&zero, 1.0).unwrap(), 0.0);
    assert_eq!(mpc_commutator_defect(&zero).unwrap().0, 0.0);
}

#[test]
fn corrupted_generator_is_caught() {
    let g = grid(512);
    let psi = random(&g, 3);
    let op = ArrowOperator::new(Arc::clone(&g)).with_corrupted_forward(1.5);
    assert!(op.completeness_defect(&psi, 0.0).unwrap() > 1e-6);
    assert!(op.mf(&psi, 0.0).is_err());
}

#[test]
fn trace_rejects_unordered_times() {
    let g = grid(256);
    let psi = random(&g, 1);
    assert!(lyapunov_trace(&psi, &[0.0, 0.0]).is_err());
    assert!(lyapunov_trace(&psi, &[]).unwrap().is_empty());
}

#[test]
fn evolution_preserves_the_completeness_split() {
    let g = grid(1024);
    let psi = random(&g, 11);
    for t in [-1.0, 0.0, 2.5] {
        let state = evolve(&psi, t);
        let op = ArrowOperator::new(Arc::clone(&g));
        let sum = op.mf(&state, 0.0).unwrap() + op.mb(&state, 0.0).unwrap();
        assert!((sum - 1.0).abs() < 1e-12);
    }
}
