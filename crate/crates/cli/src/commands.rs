//! CSV emitters for the `trace`, `frames`, `equiv` and `galapon` commands.
//!
//! Every file opens with `# config: <json>` holding the resolved config. Each
//! table follows a `# block: <name>` line and starts with a column header.

use std::fmt::Write as _;
use std::sync::Arc;

use lyapunov_core::arrow::{ArrowOperator, Orientation, SingularKernel};
use lyapunov_core::galapon::{galapon_t, lyapunov_violation_witness};
use lyapunov_core::hardy::HardyOracle;
use lyapunov_core::mtransform::{to_m_representation, MGrid};
use lyapunov_core::scattering::{asymptotic_overlap, delta_model, equivalence_defect, position_frames};
use lyapunov_core::states::evolve;
use num_complex::Complex64;

use crate::config::{Experiment, Resolved};
use crate::CliError;

/// Agreement required between the emitted `⟨M_F⟩` and the m-block moment.
pub const MOMENT_TOLERANCE: f64 = 1e-3;
/// Allowed deviation of `∫|ψ(x, t)|² dx` from the state norm.
pub const POSITION_NORM_TOLERANCE: f64 = 1e-6;
/// Largest admissible equivalence defect.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-10;
/// m-range of the emitted m-density.
pub const M_RANGE: (f64, f64) = (0.005, 0.995);

/// File contents plus the invariants that failed while producing them.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub text: String,
    pub failures: Vec<String>,
}

impl Report {
    fn new(resolved_json: &str) -> Self {
        Self {
            text: format!("# config: {resolved_json}\n"),
            failures: Vec::new(),
        }
    }

    fn block(&mut self, name: &str, header: &str) {
        let _ = writeln!(self.text, "# block: {name}");
        self.text.push_str(header);
        self.text.push('\n');
    }

    fn row(&mut self, values: &[f64]) {
        for (k, v) in values.iter().enumerate() {
            if k > 0 {
                self.text.push(',');
            }
            let _ = write!(self.text, "{v:e}");
        }
        self.text.push('\n');
    }

    /// `Err(Invariant)` if anything failed.
    pub fn into_result(self) -> Result<String, (String, CliError)> {
        if self.failures.is_empty() {
            Ok(self.text)
        } else {
            let reason = self.failures.join("; ");
            Err((self.text, CliError::Invariant(reason)))
        }
    }
}

/// `t,mf,mb,mf_oracle` over the configured window.
pub fn cmd_trace(run: &Resolved) -> Result<Report, CliError> {
    let config = &run.config;
    let times = config.times();
    let op = ArrowOperator::for_state(&run.state);
    let trace = op.trace(&run.state, &times)?;
    let oracle = HardyOracle::new(&run.state).trace(&times)?;
    let mut out = Report::new(&config.to_json());
    out.block("trace", "t,mf,mb,mf_oracle");
    for k in 0..times.len() {
        out.row(&[times[k], trace.mf_values[k], trace.mb_values[k], oracle[k]]);
    }
    for v in &trace.violations {
        out.failures.push(format!(
            "monotonicity: mf rises by {:e} at t = {:e}",
            v.increase, times[v.index]
        ));
    }
    Ok(out)
}

/// Per frame time: a summary row, `|ψ(x, t)|²` over `x` and
/// `|ψ₊(m, t) + ψ₋(m, t)|²` over `m`.
pub fn cmd_frames(run: &Resolved) -> Result<Report, CliError> {
    let config = &run.config;
    if config.experiment != Experiment::Gaussian {
        return Err(CliError::Config(
            "experiment: frames need the two-channel gaussian packet".into(),
        ));
    }
    let grid = run.grid();
    let conjugate = MGrid::for_grid(grid).map_err(|_| {
        CliError::Config("spacing: frames need a logarithmic grid".into())
    })?;
    let display = MGrid::over_m(M_RANGE.0, M_RANGE.1, config.m_grid_size)?;
    let kernel = SingularKernel::new(Arc::clone(grid), Orientation::Forward);
    let free = delta_model(0.0, run.state.mass())?;
    let norm = run.state.norm_sq();

    let mut out = Report::new(&config.to_json());
    let mut tables = String::new();
    out.block("summary", "t,mf,m_moment,mean_m,x_norm");
    for &t in &config.frame_times {
        let state = evolve(&run.state, t);
        let mf = kernel.expectation(&state)?;
        let full = to_m_representation(&state, &conjugate)?;
        let moment = full.first_moment();
        let frames = position_frames(&run.state, &free, t)?;
        let dx = frames.x[1] - frames.x[0];
        let x_norm: f64 = frames.free.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx;
        out.row(&[t, mf, moment, full.mean_m(), x_norm]);
        if (moment - mf).abs() > MOMENT_TOLERANCE {
            out.failures
                .push(format!("frames: m moment {moment:e} differs from mf {mf:e} at t = {t:e}"));
        }
        if (x_norm - norm).abs() > POSITION_NORM_TOLERANCE {
            out.failures
                .push(format!("frames: position norm {x_norm:e} at t = {t:e}"));
        }

        let mut frame = Report::default();
        frame.block(&format!("position t={t:e}"), "x,density");
        for (x, v) in frames.x.iter().zip(&frames.free) {
            frame.row(&[*x, v.norm_sqr()]);
        }
        let shown = to_m_representation(&state, &display)?;
        frame.block(&format!("m t={t:e}"), "m,density");
        let m = display.m_nodes();
        for k in (0..m.len()).rev() {
            frame.row(&[m[k], shown.combined_m_density(k)]);
        }
        tables.push_str(&frame.text);
    }
    out.text.push_str(&tables);
    Ok(out)
}

/// `lambda,mf_defect,m_defect,overlap` for each configured coupling.
pub fn cmd_equiv(run: &Resolved) -> Result<Report, CliError> {
    let config = &run.config;
    if config.experiment != Experiment::Gaussian {
        return Err(CliError::Config(
            "experiment: equiv needs the two-channel gaussian packet".into(),
        ));
    }
    if !run.grid().is_logarithmic() {
        return Err(CliError::Config("spacing: equiv needs a logarithmic grid".into()));
    }
    let times = config.times();
    let mut out = Report::new(&config.to_json());
    out.block("equivalence", "lambda,mf_defect,m_defect,overlap");
    for &lambda in &config.couplings {
        let model = delta_model(lambda, config.mass)?;
        let defect = equivalence_defect(&run.state, &model, &times)?;
        let overlap = asymptotic_overlap(&run.state, &model, config.overlap_time)?;
        out.row(&[lambda, defect.mf, defect.m_distribution, overlap]);
        if defect.max() >= EQUIVALENCE_TOLERANCE {
            out.failures
                .push(format!("equivalence: defect {:e} at lambda = {lambda:e}", defect.max()));
        }
    }
    Ok(out)
}

/// `⟨T(t)⟩` for the equal superposition of the configured levels.
pub fn cmd_galapon(config: &crate::RunConfig) -> Result<Report, CliError> {
    config.validate()?;
    let energies = &config.galapon_energies;
    let operator = galapon_t(energies)?;
    let amplitude = Complex64::new(1.0 / (energies.len() as f64).sqrt(), 0.0);
    let state = vec![amplitude; energies.len()];
    let times = config.galapon_times();
    let trace = lyapunov_violation_witness(&operator, &state, &times)?;
    let mut out = Report::new(&config.to_json());
    out.block("witness", "t,t_expectation");
    for (t, v) in times.iter().zip(&trace.values) {
        out.row(&[*t, *v]);
    }
    out.block("summary", "non_monotone,max_imaginary,hermiticity_defect");
    out.row(&[
        if trace.non_monotone { 1.0 } else { 0.0 },
        trace.max_imaginary,
        operator.hermiticity_defect(),
    ]);
    Ok(out)
}
