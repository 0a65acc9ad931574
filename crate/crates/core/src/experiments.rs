//! Seeded, configuration-driven reproductions of the four studies plus the
//! constant-information convergence suite and a single-run entry point.
//!
//! Defaults equal the published parameter choices. Every runner is a pure
//! function of (params, seed): instances and replications draw from
//! per-index ChaCha streams, so parallel execution is order-independent and
//! outputs are bit-identical across thread counts.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{AgentSpec, CharacteristicFn, SigmoidFn};
use crate::analysis::{count_reversals, mean_ci, monotone_violation, phase_ratio, SweepSummary};
use crate::dynamics::{
    chatter_quantum, classify_rest_point, integrate, IntegratorConfig, RestPointKind,
    RestPointReport, Trajectory,
};
use crate::error::{Error, Result};
use crate::export::McInstanceRow;
use crate::lmsr::{MarketState, PriceSimplex};
use crate::signals::{integrate_lorenz, LorenzForm, LorenzParams, LorenzTrace, Signal};

pub const SCHEMA_VERSION: u32 = 1;

const TAU: f64 = std::f64::consts::TAU;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Top-level experiment configuration document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(flatten)]
    pub experiment: ExperimentKind,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
                config.schema_version
            )));
        }
        config.experiment.validate()?;
        Ok(config)
    }

    pub fn kind_name(&self) -> &'static str {
        self.experiment.kind_name()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ExperimentKind {
    ConstantInfoSuite(ConstantInfoParams),
    LorenzDemo(LorenzDemoParams),
    IntervalTracking(IntervalTrackingParams),
    LagSweep(LagSweepParams),
    MultiAssetMc(MultiAssetMcParams),
    Simulate(SimulateParams),
}

impl ExperimentKind {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ExperimentKind::ConstantInfoSuite(_) => "constant_info_suite",
            ExperimentKind::LorenzDemo(_) => "lorenz_demo",
            ExperimentKind::IntervalTracking(_) => "interval_tracking",
            ExperimentKind::LagSweep(_) => "lag_sweep",
            ExperimentKind::MultiAssetMc(_) => "multi_asset_mc",
            ExperimentKind::Simulate(_) => "simulate",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ExperimentKind::ConstantInfoSuite(p) => p.validate(),
            ExperimentKind::LorenzDemo(p) => p.validate(),
            ExperimentKind::IntervalTracking(p) => p.validate(),
            ExperimentKind::LagSweep(p) => p.validate(),
            ExperimentKind::MultiAssetMc(p) => p.validate(),
            ExperimentKind::Simulate(p) => p.validate(),
        }
    }
}

fn check_config(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::config(msg.to_string()))
    }
}

fn check_common(beta: f64, epsilon: f64, t_end: f64, record_stride: usize) -> Result<()> {
    check_config(beta > 0.0 && beta.is_finite(), "beta must be positive")?;
    check_config(
        epsilon > 0.0 && epsilon.is_finite(),
        "epsilon must be positive",
    )?;
    check_config(t_end > 0.0 && t_end.is_finite(), "t_end must be positive")?;
    check_config(record_stride >= 1, "record_stride must be at least 1")
}

/// Random binary markets with constant valuations, integrated to rest and
/// classified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantInfoParams {
    pub instances: usize,
    pub max_class_size: usize,
    pub l_lo: f64,
    pub l_hi: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub t_end: f64,
    pub record_stride: usize,
    pub convergence_window: f64,
    pub convergence_tol: f64,
}

impl Default for ConstantInfoParams {
    fn default() -> Self {
        Self {
            instances: 1000,
            max_class_size: 10,
            l_lo: -5.0,
            l_hi: 5.0,
            beta: 0.01,
            epsilon: 0.01,
            t_end: 5000.0,
            record_stride: 1,
            convergence_window: 100.0,
            convergence_tol: 1e-6,
        }
    }
}

impl ConstantInfoParams {
    pub fn validate(&self) -> Result<()> {
        check_common(self.beta, self.epsilon, self.t_end, self.record_stride)?;
        check_config(self.instances >= 1, "instances must be at least 1")?;
        check_config(
            self.max_class_size >= 1,
            "max_class_size must be at least 1",
        )?;
        check_config(self.l_lo < self.l_hi, "l_lo must be below l_hi")?;
        check_config(
            self.convergence_window >= 10.0 * self.epsilon,
            "convergence_window must be at least 10 * epsilon",
        )
    }

    fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            epsilon: self.epsilon,
            t_end: self.t_end,
            record_stride: self.record_stride,
            convergence_window: self.convergence_window,
            convergence_tol: self.convergence_tol,
            record_drift: false,
            record_signal: false,
        }
    }
}

/// Market tracking of two nearby Lorenz solutions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LorenzDemoParams {
    pub beta: f64,
    pub epsilon: f64,
    pub t_end: f64,
    pub record_stride: usize,
    pub ic_a: [f64; 3],
    pub ic_b: [f64; 3],
    pub lorenz: LorenzParams,
}

impl Default for LorenzDemoParams {
    fn default() -> Self {
        Self {
            beta: 0.01,
            epsilon: 0.01,
            t_end: 4000.0,
            record_stride: 10,
            ic_a: [1.0, -1.0, 1.0],
            ic_b: [1.01, -1.0, 1.0],
            // The demo defaults to the conventional y-equation: the verbatim
            // grouping settles onto an equilibrium, which kills the sensitive
            // dependence the demo is about. Override `lorenz.form` to
            // "as_written" to integrate the equations exactly as printed.
            lorenz: LorenzParams {
                form: LorenzForm::TextbookY,
                ..LorenzParams::default()
            },
        }
    }
}

impl LorenzDemoParams {
    pub fn validate(&self) -> Result<()> {
        check_common(self.beta, self.epsilon, self.t_end, self.record_stride)?;
        check_config(self.lorenz.s != 0.0, "lorenz s must be nonzero")
    }
}

/// Random interval agents classifying a sinusoid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntervalTrackingParams {
    pub agents_per_class: usize,
    pub amplitude: f64,
    pub omega: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub t_end: f64,
    pub record_stride: usize,
}

impl Default for IntervalTrackingParams {
    fn default() -> Self {
        Self {
            agents_per_class: 25,
            amplitude: 1.0,
            omega: TAU / 25_000.0,
            beta: 0.01,
            epsilon: 0.01,
            t_end: 75_000.0,
            record_stride: 10,
        }
    }
}

impl IntervalTrackingParams {
    pub fn validate(&self) -> Result<()> {
        check_common(self.beta, self.epsilon, self.t_end, self.record_stride)?;
        check_config(
            self.agents_per_class >= 1,
            "agents_per_class must be at least 1",
        )?;
        check_config(self.omega > 0.0, "omega must be positive")?;
        check_config(self.amplitude > 0.0, "amplitude must be positive")
    }
}

/// The gain / price-sensitivity sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LagSweepParams {
    pub alphas: Vec<f64>,
    pub nus: Vec<i8>,
    pub replications: usize,
    pub agents_per_class: usize,
    pub amplitude: f64,
    pub omega: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub t_end: f64,
    pub record_stride: usize,
}

impl Default for LagSweepParams {
    fn default() -> Self {
        Self {
            alphas: (1..=15).map(|a| a as f64).collect(),
            nus: vec![-1, 0, 1],
            replications: 5,
            agents_per_class: 125,
            amplitude: 1.0,
            omega: TAU / 25_000.0,
            beta: 0.01,
            epsilon: 0.01,
            t_end: 75_000.0,
            record_stride: 10,
        }
    }
}

impl LagSweepParams {
    pub fn validate(&self) -> Result<()> {
        check_common(self.beta, self.epsilon, self.t_end, self.record_stride)?;
        check_config(!self.alphas.is_empty(), "alphas must be nonempty")?;
        check_config(
            self.alphas.iter().all(|&a| a >= 1.0),
            "every alpha must be at least 1",
        )?;
        check_config(!self.nus.is_empty(), "nus must be nonempty")?;
        check_config(
            self.nus.iter().all(|n| matches!(n, -1..=1)),
            "every nu must be in {-1, 0, 1}",
        )?;
        check_config(self.replications >= 2, "replications must be at least 2")?;
        check_config(
            self.agents_per_class >= 1,
            "agents_per_class must be at least 1",
        )?;
        check_config(self.omega > 0.0, "omega must be positive")?;
        // the phase measurement needs at least one whole period
        check_config(
            self.t_end * self.omega >= TAU * (1.0 - 1e-12),
            "t_end must cover at least one signal period",
        )
    }
}

/// The M-asset constant-information conjecture harness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiAssetMcParams {
    pub num_assets: usize,
    pub instances: usize,
    pub l_lo: f64,
    pub l_hi: f64,
    pub class_size_lo: usize,
    pub class_size_hi: usize,
    pub beta: f64,
    pub epsilon: f64,
    pub t_end: f64,
    pub record_stride: usize,
    pub convergence_window: f64,
    pub convergence_tol: f64,
}

impl Default for MultiAssetMcParams {
    fn default() -> Self {
        Self {
            num_assets: 3,
            instances: 3000,
            l_lo: -2.0,
            l_hi: 2.0,
            class_size_lo: 1,
            class_size_hi: 10,
            beta: 0.01,
            epsilon: 0.01,
            t_end: 5000.0,
            record_stride: 10,
            convergence_window: 100.0,
            convergence_tol: 1e-6,
        }
    }
}

impl MultiAssetMcParams {
    pub fn validate(&self) -> Result<()> {
        check_common(self.beta, self.epsilon, self.t_end, self.record_stride)?;
        check_config(self.num_assets >= 2, "num_assets must be at least 2")?;
        check_config(self.instances >= 1, "instances must be at least 1")?;
        check_config(self.l_lo < self.l_hi, "l_lo must be below l_hi")?;
        check_config(
            self.class_size_lo >= 1 && self.class_size_hi >= self.class_size_lo,
            "class sizes must satisfy 1 <= lo <= hi",
        )?;
        check_config(
            self.convergence_window >= 10.0 * self.epsilon,
            "convergence_window must be at least 10 * epsilon",
        )
    }

    fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            epsilon: self.epsilon,
            t_end: self.t_end,
            record_stride: self.record_stride,
            convergence_window: self.convergence_window,
            convergence_tol: self.convergence_tol,
            record_drift: false,
            record_signal: false,
        }
    }
}

/// Signal description for config files (runtime traces are built on demand).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SignalSpec {
    Constant {
        value: Vec<f64>,
    },
    Sinusoid {
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_omega")]
        omega: f64,
    },
    Lorenz {
        #[serde(default)]
        params: LorenzParams,
        ic: [f64; 3],
        /// Trace step; defaults to epsilon / 10.
        #[serde(default)]
        step: Option<f64>,
    },
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_omega() -> f64 {
    TAU / 25_000.0
}

impl SignalSpec {
    pub fn build(&self, t_end: f64, epsilon: f64) -> Result<Signal> {
        match self {
            SignalSpec::Constant { value } => {
                check_config(
                    value.iter().all(|v| v.is_finite()),
                    "constant signal values must be finite",
                )?;
                Ok(Signal::Constant(value.clone()))
            }
            SignalSpec::Sinusoid { amplitude, omega } => {
                check_config(*omega > 0.0, "omega must be positive")?;
                Ok(Signal::Sinusoid {
                    amplitude: *amplitude,
                    omega: *omega,
                })
            }
            SignalSpec::Lorenz { params, ic, step } => {
                let step = step.unwrap_or(epsilon / 10.0);
                Ok(Signal::Lorenz(integrate_lorenz(*ic, params, step, t_end)?))
            }
        }
    }
}

/// A single configured market run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateParams {
    pub beta: f64,
    pub epsilon: f64,
    pub t_end: f64,
    pub record_stride: usize,
    pub agents: Vec<AgentSpec>,
    pub signal: SignalSpec,
    /// Starting prices; uniform when omitted. Must be strictly interior.
    pub initial_prices: Option<Vec<f64>>,
    pub num_assets: usize,
    pub record_drift: bool,
    pub record_signal: bool,
    pub convergence_window: f64,
    pub convergence_tol: f64,
}

impl Default for SimulateParams {
    fn default() -> Self {
        Self {
            beta: 0.01,
            epsilon: 0.01,
            t_end: 5000.0,
            record_stride: 10,
            agents: Vec::new(),
            signal: SignalSpec::Constant { value: vec![] },
            initial_prices: None,
            num_assets: 2,
            record_drift: false,
            record_signal: true,
            convergence_window: 100.0,
            convergence_tol: 1e-6,
        }
    }
}

impl SimulateParams {
    pub fn validate(&self) -> Result<()> {
        check_common(self.beta, self.epsilon, self.t_end, self.record_stride)?;
        check_config(self.num_assets >= 2, "num_assets must be at least 2")?;
        if let Some(p) = &self.initial_prices {
            check_config(
                p.len() == self.num_assets,
                "initial_prices length must equal num_assets",
            )?;
        }
        for (i, a) in self.agents.iter().enumerate() {
            a.validate(self.num_assets)
                .map_err(|e| Error::config(format!("agent {i}: {e}")))?;
        }
        Ok(())
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            epsilon: self.epsilon,
            t_end: self.t_end,
            record_stride: self.record_stride,
            convergence_window: self.convergence_window,
            convergence_tol: self.convergence_tol,
            record_drift: self.record_drift,
            record_signal: self.record_signal,
        }
    }
}

// ---------------------------------------------------------------------------
// Runners
// ---------------------------------------------------------------------------

/// Sample `n` open intervals with endpoints uniform on (lo, hi), resampling
/// until a < b.
fn sample_intervals(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    (0..n)
        .map(|_| loop {
            let a = rng.random_range(lo..hi);
            let b = rng.random_range(lo..hi);
            if a < b {
                break (a, b);
            }
        })
        .collect()
}

fn interval_population(
    rng: &mut ChaCha8Rng,
    per_class: usize,
    gain: Option<(f64, i8)>,
) -> Vec<AgentSpec> {
    let mut agents = Vec::with_capacity(2 * per_class);
    let wrap = |a: f64, b: f64| -> CharacteristicFn {
        let base = CharacteristicFn::Interval { a, b };
        match gain {
            Some((alpha, nu)) => CharacteristicFn::Gained {
                base: Box::new(base),
                alpha,
                nu,
            },
            None => base,
        }
    };
    for (a, b) in sample_intervals(rng, per_class, 0.0, 1.0) {
        agents.push(AgentSpec {
            class: 1,
            characteristic: wrap(a, b),
        });
    }
    for (a, b) in sample_intervals(rng, per_class, -1.0, 0.0) {
        agents.push(AgentSpec {
            class: 0,
            characteristic: wrap(a, b),
        });
    }
    agents
}

pub struct LorenzDemoResult {
    pub runs: [Trajectory; 2],
    pub traces: [LorenzTrace; 2],
}

/// Two markets tracking two nearby Lorenz solutions through one agent per
/// class reading the first coordinate (class 1 with +x_1, class 0 with -x_1).
pub fn run_lorenz_demo(params: &LorenzDemoParams) -> Result<LorenzDemoResult> {
    params.validate()?;
    let sigma = SigmoidFn::logistic();
    let agents = vec![
        AgentSpec::new(1, CharacteristicFn::Coordinate { dim: 0, sign: 1 })?,
        AgentSpec::new(0, CharacteristicFn::Coordinate { dim: 0, sign: -1 })?,
    ];
    let config = IntegratorConfig {
        epsilon: params.epsilon,
        t_end: params.t_end,
        record_stride: params.record_stride,
        record_signal: true,
        ..Default::default()
    };
    let step = params.epsilon / 10.0;
    let run = |ic: [f64; 3]| -> Result<(Trajectory, LorenzTrace)> {
        let trace = integrate_lorenz(ic, &params.lorenz, step, params.t_end)?;
        let market = MarketState::symmetric(2, params.beta)?;
        let traj = integrate(
            &market,
            &agents,
            &Signal::Lorenz(trace.clone()),
            &sigma,
            &config,
        )?;
        Ok((traj, trace))
    };
    let (traj_a, trace_a) = run(params.ic_a)?;
    let (traj_b, trace_b) = run(params.ic_b)?;
    Ok(LorenzDemoResult {
        runs: [traj_a, traj_b],
        traces: [trace_a, trace_b],
    })
}

pub struct TrackingResult {
    pub trajectory: Trajectory,
    pub agents: Vec<AgentSpec>,
}

/// A market of random interval agents classifying A sin(omega t).
pub fn run_interval_tracking(params: &IntervalTrackingParams, seed: u64) -> Result<TrackingResult> {
    params.validate()?;
    let sigma = SigmoidFn::logistic();
    let mut rng = stream_rng(seed, 0);
    let agents = interval_population(&mut rng, params.agents_per_class, None);
    let market = MarketState::symmetric(2, params.beta)?;
    let config = IntegratorConfig {
        epsilon: params.epsilon,
        t_end: params.t_end,
        record_stride: params.record_stride,
        record_drift: true,
        record_signal: true,
        ..Default::default()
    };
    let signal = Signal::Sinusoid {
        amplitude: params.amplitude,
        omega: params.omega,
    };
    let trajectory = integrate(&market, &agents, &signal, &sigma, &config)?;
    Ok(TrackingResult { trajectory, agents })
}

pub struct LagSweepResult {
    pub rows: Vec<SweepSummary>,
    pub degenerate_total: usize,
}

/// Full (alpha, nu) sweep with seeded replications and re-randomized agent
/// intervals per replication.
pub fn run_lag_sweep(params: &LagSweepParams, seed: u64) -> Result<LagSweepResult> {
    params.validate()?;
    let sigma = SigmoidFn::logistic();
    let conditions: Vec<(f64, i8)> = params
        .alphas
        .iter()
        .flat_map(|&a| params.nus.iter().map(move |&nu| (a, nu)))
        .collect();
    let reps = params.replications;
    let config = IntegratorConfig {
        epsilon: params.epsilon,
        t_end: params.t_end,
        record_stride: params.record_stride,
        record_drift: false,
        record_signal: true,
        ..Default::default()
    };
    let signal = Signal::Sinusoid {
        amplitude: params.amplitude,
        omega: params.omega,
    };
    let dt = params.epsilon * params.record_stride as f64;

    let measurements: Vec<Option<f64>> = (0..conditions.len() * reps)
        .into_par_iter()
        .map(|idx| -> Result<Option<f64>> {
            let (alpha, nu) = conditions[idx / reps];
            let mut rng = stream_rng(seed, idx as u64);
            let agents = interval_population(&mut rng, params.agents_per_class, Some((alpha, nu)));
            let market = MarketState::symmetric(2, params.beta)?;
            let traj = integrate(&market, &agents, &signal, &sigma, &config)?;
            let p_series = traj.price_series(1);
            let x_series = traj.signal_series(0).expect("signal was recorded");
            match phase_ratio(&p_series, &x_series, dt, params.omega) {
                Ok(r) => Ok(Some(r)),
                Err(Error::DegenerateMeasurement(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(conditions.len());
    let mut degenerate_total = 0;
    for (c, &(alpha, nu)) in conditions.iter().enumerate() {
        let cell = &measurements[c * reps..(c + 1) * reps];
        let ratios: Vec<f64> = cell.iter().flatten().copied().collect();
        let degenerate = reps - ratios.len();
        degenerate_total += degenerate;
        let (mean, hw) = match ratios.len() {
            0 => (f64::NAN, f64::NAN),
            1 => (ratios[0], f64::NAN),
            _ => mean_ci(&ratios, 0.95)?,
        };
        rows.push(SweepSummary {
            alpha,
            nu,
            mean_phase_ratio: mean,
            ci_halfwidth: hw,
            n_reps: ratios.len(),
            degenerate_reps: degenerate,
        });
    }
    Ok(LagSweepResult {
        rows,
        degenerate_total,
    })
}

pub struct McResult {
    pub rows: Vec<McInstanceRow>,
    pub kind_counts: BTreeMap<String, usize>,
    pub oscillating: usize,
}

fn oscillates(traj: &Trajectory, t_end: f64, threshold: f64) -> bool {
    let times = traj.times();
    let start = times.iter().position(|&t| t >= 0.1 * t_end).unwrap_or(0);
    (0..traj.num_assets()).any(|j| {
        let series: Vec<f64> = (start..traj.len()).map(|k| traj.price_row(k)[j]).collect();
        count_reversals(&series, threshold) > 2
    })
}

/// Random constant-valuation M-asset markets: integrate, classify, and flag
/// oscillation.
pub fn run_multi_asset_mc(params: &MultiAssetMcParams, seed: u64) -> Result<McResult> {
    params.validate()?;
    let sigma = SigmoidFn::logistic();
    let m = params.num_assets;
    let config = params.integrator();

    let rows: Vec<McInstanceRow> = (0..params.instances)
        .into_par_iter()
        .map(|instance| -> Result<McInstanceRow> {
            let mut rng = stream_rng(seed, instance as u64);
            let sizes: Vec<usize> = (0..m)
                .map(|_| rng.random_range(params.class_size_lo..=params.class_size_hi))
                .collect();
            let mut agents = Vec::new();
            for (class, &size) in sizes.iter().enumerate() {
                for _ in 0..size {
                    agents.push(AgentSpec {
                        class,
                        characteristic: CharacteristicFn::ConstantBias {
                            level: rng.random_range(params.l_lo..params.l_hi),
                        },
                    });
                }
            }
            let market = MarketState::symmetric(m, params.beta)?;
            let traj = integrate(&market, &agents, &Signal::Constant(vec![]), &sigma, &config)?;
            let report = classify_rest_point(&traj, &agents, &[], params.beta, &sigma, &config)?;
            let n_max = sizes.iter().copied().max().unwrap_or(0);
            let threshold = (10.0 * params.convergence_tol)
                .max(2.0 * chatter_quantum(params.epsilon, params.beta, n_max));
            let oscillating = oscillates(&traj, params.t_end, threshold);
            Ok(McInstanceRow {
                instance,
                class_sizes: sizes,
                report,
                oscillating,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut kind_counts = BTreeMap::new();
    let mut oscillating = 0;
    for row in &rows {
        *kind_counts
            .entry(row.report.kind.name().to_string())
            .or_insert(0) += 1;
        oscillating += row.oscillating as usize;
    }
    Ok(McResult {
        rows,
        kind_counts,
        oscillating,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstantInfoRow {
    pub instance: usize,
    pub class_sizes: [usize; 2],
    pub report: RestPointReport,
    pub monotone_violation: f64,
    /// The per-step chatter quantum for this instance.
    pub violation_bound: f64,
}

pub struct ConstantInfoResult {
    pub rows: Vec<ConstantInfoRow>,
    pub kind_counts: BTreeMap<String, usize>,
    pub not_converged: usize,
    pub violations_within_bound: bool,
}

/// Random constant-information binary markets; classification plus the
/// monotonicity diagnostic for every instance.
pub fn run_constant_info_suite(
    params: &ConstantInfoParams,
    seed: u64,
) -> Result<ConstantInfoResult> {
    params.validate()?;
    let sigma = SigmoidFn::logistic();
    let config = params.integrator();

    let rows: Vec<ConstantInfoRow> = (0..params.instances)
        .into_par_iter()
        .map(|instance| -> Result<ConstantInfoRow> {
            let mut rng = stream_rng(seed, instance as u64);
            let c1 = rng.random_range(1..=params.max_class_size);
            let c0 = rng.random_range(1..=params.max_class_size);
            let mut agents = Vec::with_capacity(c1 + c0);
            for _ in 0..c1 {
                agents.push(AgentSpec {
                    class: 1,
                    characteristic: CharacteristicFn::ConstantBias {
                        level: rng.random_range(params.l_lo..params.l_hi),
                    },
                });
            }
            for _ in 0..c0 {
                agents.push(AgentSpec {
                    class: 0,
                    characteristic: CharacteristicFn::ConstantBias {
                        level: rng.random_range(params.l_lo..params.l_hi),
                    },
                });
            }
            let market = MarketState::symmetric(2, params.beta)?;
            let traj = integrate(&market, &agents, &Signal::Constant(vec![]), &sigma, &config)?;
            let report = classify_rest_point(&traj, &agents, &[], params.beta, &sigma, &config)?;
            let violation = monotone_violation(&traj.binary_prices());
            let bound = chatter_quantum(params.epsilon, params.beta, c0.max(c1));
            Ok(ConstantInfoRow {
                instance,
                class_sizes: [c0, c1],
                report,
                monotone_violation: violation,
                violation_bound: bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut kind_counts = BTreeMap::new();
    let mut not_converged = 0;
    let mut within = true;
    for row in &rows {
        *kind_counts
            .entry(row.report.kind.name().to_string())
            .or_insert(0) += 1;
        if row.report.kind == RestPointKind::NotConverged {
            not_converged += 1;
        }
        // tiny absolute slack for float roundoff at the bound itself
        if row.monotone_violation > row.violation_bound + 1e-15 {
            within = false;
        }
    }
    Ok(ConstantInfoResult {
        rows,
        kind_counts,
        not_converged,
        violations_within_bound: within,
    })
}

pub struct SimulateResult {
    pub trajectory: Trajectory,
}

/// One configured run.
pub fn run_simulate(params: &SimulateParams) -> Result<SimulateResult> {
    params.validate()?;
    let sigma = SigmoidFn::logistic();
    let market = match &params.initial_prices {
        Some(p) => MarketState::from_prices(&PriceSimplex::new(p.clone())?, params.beta)?,
        None => MarketState::symmetric(params.num_assets, params.beta)?,
    };
    let signal = params.signal.build(params.t_end, params.epsilon)?;
    let trajectory = integrate(
        &market,
        &params.agents,
        &signal,
        &sigma,
        &params.integrator(),
    )?;
    Ok(SimulateResult { trajectory })
}
