use std::f64::consts::PI;
use std::sync::Arc;

use lyapunov_core::mtransform::{
    backward_running_probability, dm_dnu, eigen_grid, eigen_residual, eigenfunction, from_m_representation,
    m_of_nu, mf_expectation_via_m, nu_of_m, one_minus_m_of_nu, to_m_representation, MGrid,
};
use lyapunov_core::spectral::{inner_product, ChannelState, EnergyGrid, MINUS, PLUS};
use lyapunov_core::states::{
    evolve, exponential_profile, gaussian_packet, oracle_grid, random_grid, random_smooth_state,
    GaussianPacketParams,
};
use lyapunov_core::Error;
use proptest::prelude::*;

fn oracle_state() -> ChannelState {
    exponential_profile(Arc::new(oracle_grid(4096).unwrap())).unwrap()
}

fn packet(n: usize) -> ChannelState {
    let p = GaussianPacketParams::default();
    gaussian_packet(&p, Arc::new(p.default_grid(n).unwrap())).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn m_and_nu_are_inverse(m in 1e-6f64..(1.0 - 1e-6)) {
        let nu = nu_of_m(m);
        prop_assert!((m_of_nu(nu) - m).abs() < 1e-12);
        prop_assert!((one_minus_m_of_nu(nu) - (1.0 - m)).abs() < 1e-12);
        prop_assert!(nu_of_m(m * 0.99) > nu);
        let h = 1e-6;
        let numeric = (m_of_nu(nu + h) - m_of_nu(nu - h)) / (2.0 * h);
        prop_assert!((dm_dnu(nu) + numeric).abs() < 1e-6);
    }

    #[test]
    fn transform_preserves_inner_products(a in any::<u64>(), b in any::<u64>(), t in -2.0f64..2.0) {
        let grid = Arc::new(random_grid(1024).unwrap());
        let phi = random_smooth_state(Arc::clone(&grid), &[PLUS, MINUS], a).unwrap();
        let psi = evolve(&random_smooth_state(Arc::clone(&grid), &[PLUS, MINUS], b).unwrap(), t);
        let mgrid = MGrid::for_grid(&grid).unwrap();
        let x = to_m_representation(&phi, &mgrid).unwrap();
        let y = to_m_representation(&psi, &mgrid).unwrap();
        prop_assert!((x.norm_sq() - phi.norm_sq()).abs() < 1e-6);
        prop_assert!((x.inner_product(&y).unwrap() - inner_product(&phi, &psi).unwrap()).norm() < 1e-6);
    }
}

#[test]
fn fft_matches_direct_sums() {
    let psi = oracle_state();
    let fft = MGrid::for_grid(psi.grid()).unwrap();
    let nodes = fft.nu_nodes();
    let (lo, hi) = (nodes[1500], nodes[2600]);
    let direct = MGrid::uniform(lo, hi, 1101).unwrap();
    let a = to_m_representation(&psi, &fft).unwrap();
    let b = to_m_representation(&psi, &direct).unwrap();
    for k in 0..1101 {
        assert!((a.nu_amplitudes(0)[1500 + k] - b.nu_amplitudes(0)[k]).norm() < 1e-9);
    }
}

#[test]
fn exponential_density_closed_form() {
    // |Γ(1/2 + iν)|² = π / cosh(πν) gives |ψ(m)|² = 1/(π√(m(1-m)))
    let psi = oracle_state();
    let mgrid = MGrid::for_grid(psi.grid()).unwrap();
    let dist = to_m_representation(&psi, &mgrid).unwrap();
    let m = mgrid.m_nodes();
    let mut seen = 0;
    for k in 0..m.len() {
        if (0.05..=0.95).contains(&m[k]) {
            let exact = 1.0 / (PI * (m[k] * (1.0 - m[k])).sqrt());
            assert!((dist.m_density(0, k) - exact).abs() < 1e-4);
            seen += 1;
        }
    }
    assert!(seen >= 4);
    // dense sup-norm through direct sums
    let dense = MGrid::over_m(0.05, 0.95, 400).unwrap();
    let dist = to_m_representation(&psi, &dense).unwrap();
    for (k, m) in dense.m_nodes().iter().enumerate() {
        let exact = 1.0 / (PI * (m * (1.0 - m)).sqrt());
        assert!((dist.m_density(0, k) - exact).abs() < 1e-4, "{m}");
    }
    let dist = to_m_representation(&psi, &mgrid).unwrap();
    assert!((dist.norm_sq() - 1.0).abs() < 1e-6);
    assert!((dist.first_moment() - 0.5).abs() < 1e-4);
}

#[test]
fn spectral_expectation_matches_closed_form() {
    let psi = oracle_state();
    for t in [-1.0, 0.0, 1.0] {
        let exact = 0.5 - (t as f64).atan() / PI;
        assert!((mf_expectation_via_m(&psi, t).unwrap() - exact).abs() < 2e-4);
    }
}

#[test]
fn round_trips() {
    for psi in [oracle_state(), packet(4096)] {
        let mgrid = MGrid::for_grid(psi.grid()).unwrap();
        let back = from_m_representation(&to_m_representation(&psi, &mgrid).unwrap(), Arc::clone(psi.grid())).unwrap();
        for j in 0..psi.channel_count() {
            for i in psi.grid().interior_range() {
                assert!((psi.channel(j)[i] - back.channel(j)[i]).norm() < 1e-6);
            }
        }
    }
}

#[test]
fn inverse_needs_the_conjugate_grid() {
    let psi = oracle_state();
    let dist = to_m_representation(&psi, &MGrid::over_m(0.1, 0.9, 64).unwrap()).unwrap();
    assert_eq!(from_m_representation(&dist, Arc::clone(psi.grid())).unwrap_err(), Error::GridMismatch);
    let linear = Arc::new(EnergyGrid::linear(0.1, 5.0, 64).unwrap());
    let state = ChannelState::from_fn(linear, &["0"], 1.0, |_, e| (-e).exp().into()).unwrap();
    assert_eq!(MGrid::for_grid(state.grid()).unwrap_err(), Error::NotLogarithmic);
}

#[test]
fn eigenfunctions_satisfy_the_eigenvalue_equation() {
    let coarse = Arc::new(eigen_grid(4096).unwrap());
    let fine = Arc::new(eigen_grid(8192).unwrap());
    for m in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let a = eigen_residual(m, &coarse).unwrap();
        let b = eigen_residual(m, &fine).unwrap();
        assert!(a < 1e-2, "{m}: {a}");
        assert!(b < a, "{m}: {b} vs {a}");
    }
    assert!(eigenfunction(0.0, 1.0).is_err());
    assert!(eigenfunction(1.0, 1.0).is_err());
}

#[test]
fn mass_moves_to_small_m() {
    let psi = packet(4096);
    let mgrid = MGrid::for_grid(psi.grid()).unwrap();
    let means: Vec<f64> = [-0.3, -0.05, 0.0, 0.05, 0.3]
        .iter()
        .map(|&t| to_m_representation(&evolve(&psi, t), &mgrid).unwrap().mean_m())
        .collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
}

#[test]
fn some_probability_runs_backwards() {
    let psi = packet(4096);
    let p = backward_running_probability(&psi, (0.4, 0.6), (0.7, 0.9), 0.05).unwrap();
    assert!(p > 1e-6 && p < 1.0, "{p}");
    assert!(backward_running_probability(&psi, (0.7, 0.9), (0.4, 0.6), 0.05).is_err());
}
