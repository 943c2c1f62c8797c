//! The invariant suite run by `lyapunov check`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use lyapunov_core::arrow::ArrowOperator;
use lyapunov_core::galapon::{
    discretize_symmetric, galapon_scale, galapon_t, lyapunov_violation_witness, proportionality_defect,
};
use lyapunov_core::hardy::{forward_component, HardyOracle};
use lyapunov_core::mtransform::{
    backward_running_probability, eigen_grid, eigen_residual, from_m_representation, mf_expectation_via_m,
    to_m_representation, MGrid,
};
use lyapunov_core::scattering::{asymptotic_overlap, delta_model, equivalence_defect};
use lyapunov_core::spectral::{energy_to_momentum, ChannelState, EnergyGrid, MINUS, PLUS};
use lyapunov_core::states::{
    evolve, exponential_mf, exponential_profile, gaussian_momentum_state, gaussian_packet, oracle_grid,
    random_grid, random_smooth_state, GaussianPacketParams,
};
use lyapunov_core::spectral::momentum_to_energy;
use num_complex::Complex64;

type Outcome = lyapunov_core::Result<Measured>;

/// Deliberate defects for exercising the failure path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Scales one off-diagonal of the forward generator so that it is no
    /// longer antisymmetric.
    KernelAntisymmetry,
}

impl FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "kernel-antisymmetry" => Ok(Fault::KernelAntisymmetry),
            other => Err(format!("unknown fault {other:?}, expected kernel-antisymmetry")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Context {
    seed: u64,
    fault: Option<Fault>,
}

impl Context {
    fn arrow(&self, grid: &Arc<EnergyGrid>) -> ArrowOperator {
        let op = ArrowOperator::new(Arc::clone(grid));
        match self.fault {
            Some(Fault::KernelAntisymmetry) => op.with_corrupted_forward(1.5),
            None => op,
        }
    }

    fn random(&self, grid: &Arc<EnergyGrid>, k: u64) -> lyapunov_core::Result<ChannelState> {
        random_smooth_state(Arc::clone(grid), &[PLUS, MINUS], self.seed.wrapping_mul(1_000_003).wrapping_add(k))
    }
}

/// A measured quantity and the bound it must satisfy.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Bound {
    Below(f64),
    Above(f64),
    Holds(bool),
}

#[derive(Debug, Clone, Copy)]
struct Measured {
    value: f64,
    bound: Bound,
}

fn below(value: f64, limit: f64) -> Measured {
    Measured {
        value,
        bound: Bound::Below(limit),
    }
}

fn above(value: f64, limit: f64) -> Measured {
    Measured {
        value,
        bound: Bound::Above(limit),
    }
}

fn holds(ok: bool, value: f64) -> Measured {
    Measured {
        value,
        bound: Bound::Holds(ok),
    }
}

struct Check {
    module: &'static str,
    name: &'static str,
    run: fn(&Context) -> Outcome,
}

const CHECKS: &[Check] = &[
    Check { module: "spectral_core", name: "log_quadrature", run: log_quadrature },
    Check { module: "spectral_core", name: "momentum_round_trip", run: momentum_round_trip },
    Check { module: "states", name: "gaussian_norm", run: gaussian_norm },
    Check { module: "states", name: "exponential_norm", run: exponential_norm },
    Check { module: "states", name: "evolution_unitary", run: evolution_unitary },
    Check { module: "arrow_operator", name: "completeness_defect", run: completeness },
    Check { module: "arrow_operator", name: "monotonicity", run: monotonicity },
    Check { module: "arrow_operator", name: "bounds", run: bounds },
    Check { module: "arrow_operator", name: "channel_additivity", run: channel_additivity },
    Check { module: "arrow_operator", name: "exponential_trace", run: exponential_trace },
    Check { module: "arrow_operator", name: "gaussian_trace", run: gaussian_trace },
    Check { module: "arrow_operator", name: "mpc_rate", run: mpc_rate },
    Check { module: "arrow_operator", name: "mpc_noncommutativity", run: mpc_noncommutativity },
    Check { module: "hardy_oracle", name: "forward_support", run: forward_support },
    Check { module: "hardy_oracle", name: "oracle_closed_form", run: oracle_closed_form },
    Check { module: "hardy_oracle", name: "oracle_agreement", run: oracle_agreement },
    Check { module: "hardy_oracle", name: "derivative_identity", run: derivative_identity },
    Check { module: "m_transform", name: "exponential_density", run: exponential_density },
    Check { module: "m_transform", name: "parseval", run: parseval },
    Check { module: "m_transform", name: "round_trip", run: round_trip },
    Check { module: "m_transform", name: "eigen_residual", run: eigen_refinement },
    Check { module: "m_transform", name: "mass_shift", run: mass_shift },
    Check { module: "m_transform", name: "backward_running", run: backward_running },
    Check { module: "scattering_equiv", name: "s_matrix_unitarity", run: s_matrix_unitarity },
    Check { module: "scattering_equiv", name: "equivalence_defect", run: equivalence },
    Check { module: "scattering_equiv", name: "asymptotic_overlap", run: overlap },
    Check { module: "galapon_bridge", name: "two_level_witness", run: two_level_witness },
    Check { module: "galapon_bridge", name: "non_monotone_flag", run: non_monotone_flag },
    Check { module: "galapon_bridge", name: "proportionality", run: proportionality },
    Check { module: "galapon_bridge", name: "hermiticity", run: galapon_hermiticity },
];

/// Names of the modules covered by the suite.
pub fn modules() -> Vec<&'static str> {
    let mut m: Vec<&str> = CHECKS.iter().map(|c| c.module).collect();
    m.dedup();
    m
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub module: &'static str,
    pub name: &'static str,
    pub passed: bool,
    /// Measured value and bound, or the error that stopped the check.
    pub detail: String,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failed(&self) -> Vec<&CheckOutcome> {
        self.outcomes.iter().filter(|o| !o.passed).collect()
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<6} {:<18} {:<22} {:>9}  detail", "status", "module", "check", "seconds")?;
        for o in &self.outcomes {
            writeln!(
                f,
                "{:<6} {:<18} {:<22} {:>9.3}  {}",
                if o.passed { "PASS" } else { "FAIL" },
                o.module,
                o.name,
                o.elapsed.as_secs_f64(),
                o.detail
            )?;
        }
        let failed = self.failed().len();
        write!(f, "{} checks, {} failed", self.outcomes.len(), failed)
    }
}

/// Runs every check whose module starts with `filter` or whose name equals
/// it. An unmatched filter is an error.
pub fn run_checks(filter: Option<&str>, seed: u64, fault: Option<Fault>) -> Result<CheckReport, String> {
    let selected: Vec<&Check> = CHECKS
        .iter()
        .filter(|c| filter.map_or(true, |f| c.module.starts_with(f) || c.name == f))
        .collect();
    if selected.is_empty() {
        return Err(format!(
            "filter: {:?} matches no check; modules are {}",
            filter.unwrap_or_default(),
            modules().join(", ")
        ));
    }
    let ctx = Context { seed, fault };
    let outcomes = selected
        .into_iter()
        .map(|c| {
            let start = Instant::now();
            let (passed, detail) = match (c.run)(&ctx) {
                Ok(m) => judge(m),
                Err(e) => (false, format!("error: {e}")),
            };
            CheckOutcome {
                module: c.module,
                name: c.name,
                passed,
                detail,
                elapsed: start.elapsed(),
            }
        })
        .collect();
    Ok(CheckReport { outcomes })
}

fn judge(m: Measured) -> (bool, String) {
    match m.bound {
        Bound::Below(limit) => (m.value < limit, format!("{:.3e} < {:.1e}", m.value, limit)),
        Bound::Above(limit) => (m.value > limit, format!("{:.3e} > {:.1e}", m.value, limit)),
        Bound::Holds(ok) => (ok, format!("value {:.3e}", m.value)),
    }
}

fn gaussian(n: usize) -> lyapunov_core::Result<ChannelState> {
    let p = GaussianPacketParams::default();
    gaussian_packet(&p, Arc::new(p.default_grid(n)?))
}

fn exponential(n: usize) -> lyapunov_core::Result<ChannelState> {
    exponential_profile(Arc::new(oracle_grid(n)?))
}

fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| a + (b - a) * k as f64 / (count - 1) as f64).collect()
}

fn log_quadrature(_: &Context) -> Outcome {
    let grid = oracle_grid(4096)?;
    Ok(below((grid.integrate(|e| (-e).exp()) - 1.0).abs(), 1e-6))
}

fn momentum_round_trip(_: &Context) -> Outcome {
    let p = GaussianPacketParams::default();
    let state = gaussian_momentum_state(&p, Arc::new(p.default_grid(2048)?))?;
    let back = energy_to_momentum(&momentum_to_energy(&state)?)?;
    let worst = state
        .positive()
        .iter()
        .chain(state.negative())
        .zip(back.positive().iter().chain(back.negative()))
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(below(worst, 1e-12))
}

fn gaussian_norm(_: &Context) -> Outcome {
    Ok(below((gaussian(4096)?.norm_sq() - 1.0).abs(), 1e-8))
}

fn exponential_norm(_: &Context) -> Outcome {
    Ok(below((exponential(4096)?.norm_sq() - 1.0).abs(), 1e-8))
}

fn evolution_unitary(ctx: &Context) -> Outcome {
    let grid = Arc::new(random_grid(1024)?);
    let psi = ctx.random(&grid, 0)?;
    Ok(below((evolve(&psi, 0.3).norm_sq() - psi.norm_sq()).abs(), 1e-14))
}

fn completeness(ctx: &Context) -> Outcome {
    let grid = Arc::new(random_grid(2048)?);
    let op = ctx.arrow(&grid);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let psi = ctx.random(&grid, k)?;
        for t in [-2.0, -0.5, 0.0, 0.5, 2.0] {
            worst = worst.max(op.completeness_defect(&psi, t)?);
        }
    }
    Ok(below(worst, 1e-12))
}

/// Largest rise and the extreme values of `⟨M_F⟩` over 100 random states.
fn random_traces(ctx: &Context) -> lyapunov_core::Result<(f64, f64, f64)> {
    let grid = Arc::new(random_grid(2048)?);
    let op = ctx.arrow(&grid);
    let times = linspace(-5.0, 5.0, 201);
    let (mut rise, mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..100 {
        let psi = ctx.random(&grid, k)?;
        let trace = op.trace(&psi, &times)?;
        rise = rise.max(trace.max_step());
        for &v in &trace.mf_values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    Ok((rise, lo, hi))
}

fn monotonicity(ctx: &Context) -> Outcome {
    let (rise, _, _) = random_traces(ctx)?;
    Ok(holds(rise <= 1e-9, rise))
}

fn bounds(ctx: &Context) -> Outcome {
    let (_, lo, hi) = random_traces(ctx)?;
    let excess = (-lo).max(hi - 1.0);
    Ok(below(excess, 1e-8))
}

fn channel_additivity(ctx: &Context) -> Outcome {
    let grid = Arc::new(random_grid(2048)?);
    let op = ctx.arrow(&grid);
    let psi = ctx.random(&grid, 7)?;
    let mut worst: f64 = 0.0;
    for t in [-1.0, 0.0, 1.0] {
        let whole = op.mf(&psi, t)?;
        let parts = op.mf(&psi.restrict_to_channel(0), t)? + op.mf(&psi.restrict_to_channel(1), t)?;
        worst = worst.max((whole - parts).abs());
    }
    Ok(below(worst, 1e-12))
}

fn exponential_trace(ctx: &Context) -> Outcome {
    let psi = exponential(4096)?;
    let times = linspace(-2.0, 2.0, 21);
    let trace = ctx.arrow(psi.grid()).trace(&psi, &times)?;
    let worst = times
        .iter()
        .zip(&trace.mf_values)
        .map(|(&t, v)| (v - exponential_mf(t)).abs())
        .fold(0.0, f64::max);
    Ok(below(worst, 2e-4))
}

fn gaussian_trace(ctx: &Context) -> Outcome {
    let psi = gaussian(4096)?;
    let times = linspace(-0.5, 0.5, 201);
    let trace = ctx.arrow(psi.grid()).trace(&psi, &times)?;
    let strict = trace.mf_values.windows(2).all(|w| w[1] < w[0]);
    let centre = trace.mf_values[100];
    Ok(holds(strict && trace.is_monotone() && (centre - 0.5).abs() <= 1e-3, centre))
}

fn mpc_rate(ctx: &Context) -> Outcome {
    let psi = exponential(4096)?;
    let rate = ctx.arrow(psi.grid()).mpc_rate(&psi)?;
    Ok(below((rate - 1.0 / PI).abs(), 1e-3))
}

fn mpc_noncommutativity(ctx: &Context) -> Outcome {
    let grid = Arc::new(EnergyGrid::logarithmic(1e-2, 10.0, 64)?);
    Ok(above(ctx.arrow(&grid).noncommutativity(), 1e-3))
}

fn forward_support(_: &Context) -> Outcome {
    let psi = exponential(1024)?;
    let f = forward_component(&psi, 0.5);
    let worst = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(holds(worst == 0.0, worst))
}

fn oracle_closed_form(_: &Context) -> Outcome {
    let psi = exponential(4096)?;
    let times = linspace(-2.0, 2.0, 21);
    let values = HardyOracle::new(&psi).trace(&times)?;
    let worst = times
        .iter()
        .zip(&values)
        .map(|(&t, v)| (v - exponential_mf(t)).abs())
        .fold(0.0, f64::max);
    Ok(below(worst, 1e-5))
}

/// Pairwise spread of direct, oracle and m-space values.
fn triangulate(psi: &ChannelState, times: &[f64]) -> lyapunov_core::Result<f64> {
    let direct = ArrowOperator::for_state(psi).trace(psi, times)?;
    let oracle = HardyOracle::new(psi).trace(times)?;
    let mut worst: f64 = 0.0;
    for (k, &t) in times.iter().enumerate() {
        let via_m = mf_expectation_via_m(psi, t)?;
        let d = direct.mf_values[k];
        worst = worst.max((d - oracle[k]).abs()).max((d - via_m).abs()).max((oracle[k] - via_m).abs());
    }
    Ok(worst)
}

fn oracle_agreement(ctx: &Context) -> Outcome {
    let times = linspace(-3.0, 3.0, 11);
    // The gaussian needs 8192 nodes: at |t| = 3 its phases are undersampled
    // on the 4096-node grid.
    let mut worst = triangulate(&exponential(4096)?, &times)?.max(triangulate(&gaussian(8192)?, &times)?);
    let grid = Arc::new(random_grid(4096)?);
    for k in 0..20 {
        worst = worst.max(triangulate(&ctx.random(&grid, 100 + k)?, &times)?);
    }
    Ok(below(worst, 5e-4))
}

fn derivative_identity(ctx: &Context) -> Outcome {
    let psi = gaussian(4096)?;
    let op = ctx.arrow(psi.grid());
    let oracle = HardyOracle::new(&psi);
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for t in [-0.3, -0.05, 0.0, 0.05, 0.3] {
        let slope = (op.mf(&psi, t + h)? - op.mf(&psi, t - h)?) / (2.0 * h);
        worst = worst.max((slope + oracle.transform_density(-t)).abs());
    }
    Ok(below(worst, 1e-3))
}

fn exponential_density(_: &Context) -> Outcome {
    let psi = exponential(4096)?;
    let mut worst: f64 = 0.0;
    for mgrid in [MGrid::for_grid(psi.grid())?, MGrid::over_m(0.05, 0.95, 400)?] {
        let dist = to_m_representation(&psi, &mgrid)?;
        let m = mgrid.m_nodes();
        for k in (0..m.len()).filter(|&k| (0.05..=0.95).contains(&m[k])) {
            worst = worst.max((dist.m_density(0, k) - 1.0 / (PI * (m[k] * (1.0 - m[k])).sqrt())).abs());
        }
    }
    Ok(below(worst, 1e-4))
}

fn parseval(_: &Context) -> Outcome {
    let psi = exponential(4096)?;
    let dist = to_m_representation(&psi, &MGrid::for_grid(psi.grid())?)?;
    Ok(below((dist.norm_sq() - psi.norm_sq()).abs(), 1e-6))
}

fn round_trip(_: &Context) -> Outcome {
    let mut worst: f64 = 0.0;
    for psi in [exponential(4096)?, gaussian(4096)?] {
        let dist = to_m_representation(&psi, &MGrid::for_grid(psi.grid())?)?;
        let back = from_m_representation(&dist, Arc::clone(psi.grid()))?;
        for j in 0..psi.channel_count() {
            for i in psi.grid().interior_range() {
                worst = worst.max((psi.channel(j)[i] - back.channel(j)[i]).norm());
            }
        }
    }
    Ok(below(worst, 1e-6))
}

fn eigen_refinement(_: &Context) -> Outcome {
    let coarse = Arc::new(eigen_grid(4096)?);
    let fine = Arc::new(eigen_grid(8192)?);
    let mut worst: f64 = 0.0;
    let mut refines = true;
    for m in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let a = eigen_residual(m, &coarse)?;
        let b = eigen_residual(m, &fine)?;
        worst = worst.max(a);
        refines &= b < a;
    }
    Ok(holds(refines && worst < 1e-2, worst))
}

fn mass_shift(_: &Context) -> Outcome {
    let psi = gaussian(4096)?;
    let mgrid = MGrid::for_grid(psi.grid())?;
    let early = to_m_representation(&evolve(&psi, -0.3), &mgrid)?.mean_m();
    let late = to_m_representation(&evolve(&psi, 0.3), &mgrid)?.mean_m();
    Ok(holds(late < early, early - late))
}

fn backward_running(_: &Context) -> Outcome {
    let psi = gaussian(4096)?;
    Ok(above(backward_running_probability(&psi, (0.4, 0.6), (0.7, 0.9), 0.05)?, 1e-6))
}

fn s_matrix_unitarity(_: &Context) -> Outcome {
    let mut worst: f64 = 0.0;
    for lambda in [0.0, 0.5, 1.0, 2.0, 10.0] {
        let model = delta_model(lambda, 1.0)?;
        for k in 0..=400 {
            worst = worst.max(model.unitarity_defect(0.125 * k as f64));
        }
    }
    Ok(below(worst, 1e-14))
}

fn equivalence(_: &Context) -> Outcome {
    let psi = gaussian(4096)?;
    let times = linspace(-0.5, 0.5, 21);
    let mut worst: f64 = 0.0;
    let mut free_exact = true;
    for lambda in [0.0, 1.0, 2.0] {
        let d = equivalence_defect(&psi, &delta_model(lambda, 1.0)?, &times)?.max();
        if lambda == 0.0 {
            free_exact = d == 0.0;
        }
        worst = worst.max(d);
    }
    Ok(holds(free_exact && worst < 1e-10, worst))
}

fn overlap(_: &Context) -> Outcome {
    let psi = gaussian(4096)?;
    let mut least: f64 = 1.0;
    for lambda in [0.0, 1.0, 2.0] {
        least = least.min(asymptotic_overlap(&psi, &delta_model(lambda, 1.0)?, -50.0)?);
    }
    Ok(above(least, 0.99))
}

fn two_level(times: &[f64]) -> lyapunov_core::Result<lyapunov_core::galapon::WitnessTrace> {
    let t = galapon_t(&[0.0, 1.0])?;
    let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    lyapunov_violation_witness(&t, &[a, a], times)
}

fn two_level_witness(_: &Context) -> Outcome {
    let times = linspace(0.0, 2.0 * PI, 201);
    let trace = two_level(&times)?;
    let worst = times
        .iter()
        .zip(&trace.values)
        .map(|(t, v)| (v + t.sin()).abs())
        .fold(0.0, f64::max);
    Ok(below(worst, 1e-12))
}

fn non_monotone_flag(_: &Context) -> Outcome {
    let trace = two_level(&linspace(0.0, 2.0 * PI, 201))?;
    Ok(holds(trace.non_monotone, trace.max_imaginary))
}

fn proportionality(_: &Context) -> Outcome {
    let mut worst: f64 = 0.0;
    for (lo, hi, n) in [(0.5, 3.0, 40), (0.25, 10.0, 64), (1.0, 2.0, 17)] {
        let grid = EnergyGrid::linear(lo, hi, n)?;
        let a = discretize_symmetric(&grid);
        let b = galapon_t(grid.nodes())?;
        worst = worst.max(proportionality_defect(&a, &b, galapon_scale(&grid)?)?);
    }
    Ok(below(worst, 1e-12))
}

fn galapon_hermiticity(_: &Context) -> Outcome {
    let grid = EnergyGrid::logarithmic(1e-3, 50.0, 128)?;
    let a = discretize_symmetric(&grid).hermiticity_defect();
    let b = galapon_t(&[0.0, 0.7, 1.9, 4.0])?.hermiticity_defect();
    Ok(below(a.max(b), 1e-14))
}
