//! Market price dynamics: the binary and M-asset ODE right-hand sides, the
//! forward-Euler integrator that steps quantities (so prices stay on the
//! simplex by construction), and rest-point classification for
//! constant-information runs.
//!
//! The drift is integer valued and jumps, so trajectories can pin onto a
//! discontinuity (a sliding mode). A fixed-step integrator chatters around
//! such a surface with per-step amplitude at most `epsilon * beta * N / 4`;
//! classification works with tolerances scaled to that quantum rather than
//! trying to locate crossings exactly.

use serde::{Deserialize, Serialize};

use crate::agents::{
    binary_drift, class_sizes, drift_counts, AgentSpec, DriftEvaluator, SigmoidFn,
};
use crate::error::{Error, Result};
use crate::lmsr::{softmax_scaled_into, MarketState, PriceSimplex};
use crate::signals::Signal;

/// Integration and convergence-detection parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Euler step.
    pub epsilon: f64,
    /// Simulated horizon.
    pub t_end: f64,
    /// Record every this-many steps (the final step is always recorded).
    pub record_stride: usize,
    /// Width of the trailing window used to decide a run has settled.
    pub convergence_window: f64,
    /// Baseline position tolerance for settledness and classification.
    pub convergence_tol: f64,
    /// Record per-class drift counts alongside prices.
    pub record_drift: bool,
    /// Record the sampled signal alongside prices.
    pub record_signal: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            t_end: 5000.0,
            record_stride: 1,
            convergence_window: 100.0,
            convergence_tol: 1e-6,
            record_drift: false,
            record_signal: false,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !self.t_end.is_finite() || self.t_end <= 0.0 {
            return Err(Error::invalid(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("record_stride must be at least 1"));
        }
        if self.convergence_window < 10.0 * self.epsilon {
            return Err(Error::invalid(format!(
                "convergence_window {} must be at least 10 * epsilon = {}",
                self.convergence_window,
                10.0 * self.epsilon
            )));
        }
        if self.convergence_tol.is_nan() || self.convergence_tol <= 0.0 {
            return Err(Error::invalid("convergence_tol must be positive"));
        }
        Ok(())
    }
}

/// A recorded solution: times, price rows, and optionally drifts and signal
/// samples at the same instants.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    num_assets: usize,
    signal_dim: usize,
    times: Vec<f64>,
    prices: Vec<f64>,          // row-major, num_assets per row
    drifts: Option<Vec<i64>>,  // row-major, num_assets per row
    signals: Option<Vec<f64>>, // row-major, signal_dim per row
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn num_assets(&self) -> usize {
        self.num_assets
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn price_row(&self, k: usize) -> &[f64] {
        &self.prices[k * self.num_assets..(k + 1) * self.num_assets]
    }

    /// The recorded series of one asset's price.
    pub fn price_series(&self, asset: usize) -> Vec<f64> {
        assert!(asset < self.num_assets);
        self.prices
            .iter()
            .skip(asset)
            .step_by(self.num_assets)
            .copied()
            .collect()
    }

    /// Price of asset 1 over time, the scalar p of a binary market.
    pub fn binary_prices(&self) -> Vec<f64> {
        assert_eq!(
            self.num_assets, 2,
            "binary_prices needs a two-asset trajectory"
        );
        self.price_series(1)
    }

    pub fn drift_row(&self, k: usize) -> Option<&[i64]> {
        self.drifts
            .as_ref()
            .map(|d| &d[k * self.num_assets..(k + 1) * self.num_assets])
    }

    /// Net binary drift N(t) = counts_1 - counts_0, when drifts were recorded.
    pub fn binary_drift_series(&self) -> Option<Vec<i64>> {
        assert_eq!(self.num_assets, 2);
        self.drifts
            .as_ref()
            .map(|d| d.chunks_exact(2).map(|c| c[1] - c[0]).collect())
    }

    pub fn signal_dim(&self) -> usize {
        self.signal_dim
    }

    pub fn signal_row(&self, k: usize) -> Option<&[f64]> {
        if self.signal_dim == 0 {
            return None;
        }
        self.signals
            .as_ref()
            .map(|s| &s[k * self.signal_dim..(k + 1) * self.signal_dim])
    }

    /// Recorded series of one signal component.
    pub fn signal_series(&self, dim: usize) -> Option<Vec<f64>> {
        let signals = self.signals.as_ref()?;
        if dim >= self.signal_dim {
            return None;
        }
        Some(
            signals
                .iter()
                .skip(dim)
                .step_by(self.signal_dim)
                .copied()
                .collect(),
        )
    }

    pub fn last_prices(&self) -> &[f64] {
        self.price_row(self.len() - 1)
    }

    /// Time span covered by the recording.
    pub fn span(&self) -> f64 {
        self.times.last().unwrap_or(&0.0) - self.times.first().unwrap_or(&0.0)
    }
}

/// Binary right-hand side: beta * p * (1 - p) * N(x, p), with p the price of
/// asset 1.
pub fn rhs_binary(
    p: f64,
    x: &[f64],
    agents: &[AgentSpec],
    beta: f64,
    sigma: &SigmoidFn,
) -> Result<f64> {
    let simplex = PriceSimplex::binary(p)?;
    let counts = drift_counts(agents, x, &simplex, sigma)?;
    let n = binary_drift(&counts);
    Ok(beta * p * (1.0 - p) * n as f64)
}

/// M-asset right-hand side: dp_i = sum_j beta p_i p_j (qdot_i - qdot_j).
pub fn rhs_multi(
    p: &PriceSimplex,
    x: &[f64],
    agents: &[AgentSpec],
    beta: f64,
    sigma: &SigmoidFn,
) -> Result<Vec<f64>> {
    let counts = drift_counts(agents, x, p, sigma)?;
    let m = p.num_assets();
    let mut out = vec![0.0; m];
    for i in 0..m {
        let mut acc = 0.0;
        for j in 0..m {
            acc += beta * p.get(i) * p.get(j) * (counts[i] - counts[j]) as f64;
        }
        out[i] = acc;
    }
    Ok(out)
}

/// Forward-Euler integration of the quantity dynamics.
///
/// Each step adds `epsilon * counts_j` to q_j and recomputes prices from q,
/// so the price rows satisfy the simplex constraint by construction.
/// Quantities are recentred (mean subtracted; prices are invariant) whenever
/// max |beta q_j| exceeds 500, which keeps long non-converging runs finite.
pub fn integrate(
    market: &MarketState,
    agents: &[AgentSpec],
    signal: &Signal,
    sigma: &SigmoidFn,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    config.validate()?;
    let m = market.num_assets();
    let constant_x = match signal {
        Signal::Constant(v) => Some(v.as_slice()),
        _ => None,
    };
    let evaluator = DriftEvaluator::new(agents, m, sigma, constant_x)?;

    let eps = config.epsilon;
    let n_steps = (config.t_end / eps).round().max(1.0) as usize;
    let expected_records = n_steps / config.record_stride + 2;

    let mut state = market.clone();
    let mut prices = vec![0.0; m];
    let mut counts = vec![0i64; m];
    let mut x = vec![0.0; signal.dim()];

    let mut traj = Trajectory {
        num_assets: m,
        signal_dim: if config.record_signal {
            signal.dim()
        } else {
            0
        },
        times: Vec::with_capacity(expected_records),
        prices: Vec::with_capacity(expected_records * m),
        drifts: config
            .record_drift
            .then(|| Vec::with_capacity(expected_records * m)),
        signals: config
            .record_signal
            .then(|| Vec::with_capacity(expected_records * signal.dim())),
    };

    for step in 0..=n_steps {
        let t = step as f64 * eps;
        softmax_scaled_into(state.quantities(), state.beta(), &mut prices);
        signal.sample_into(t, &mut x)?;
        evaluator.counts_into(&x, &prices, sigma, &mut counts)?;

        if step % config.record_stride == 0 || step == n_steps {
            traj.times.push(t);
            traj.prices.extend_from_slice(&prices);
            if let Some(d) = traj.drifts.as_mut() {
                d.extend_from_slice(&counts);
            }
            if let Some(s) = traj.signals.as_mut() {
                s.extend_from_slice(&x);
            }
        }

        if step < n_steps {
            let beta = state.beta();
            let q = state.quantities_mut();
            for j in 0..m {
                q[j] += eps * counts[j] as f64;
            }
            if q.iter().any(|&v| (beta * v).abs() > 500.0) {
                state.recenter();
            }
            if state.quantities().iter().any(|v| !v.is_finite()) {
                return Err(Error::IntegrationFault {
                    step: step + 1,
                    reason: "market quantities became non-finite".to_string(),
                });
            }
        }
    }
    Ok(traj)
}

/// How a constant-information run ended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RestPointKind {
    /// Asymptotic approach to the vertex of `asset`.
    BoundaryAsymptote {
        asset: usize,
    },
    /// Pinned at an interior point where the drift is exactly zero.
    InteriorZeroDrift,
    /// Pinned on a drift discontinuity with inward flow on both sides.
    /// For M > 2 this covers any stalled off-vertex state with nonzero drift.
    SlidingMode,
    NotConverged,
}

impl RestPointKind {
    pub fn name(&self) -> &'static str {
        match self {
            RestPointKind::BoundaryAsymptote { .. } => "boundary_asymptote",
            RestPointKind::InteriorZeroDrift => "interior_zero_drift",
            RestPointKind::SlidingMode => "sliding_mode",
            RestPointKind::NotConverged => "not_converged",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestPointReport {
    #[serde(flatten)]
    pub kind: RestPointKind,
    /// Rest price for interior kinds (window mean of the recorded tail).
    pub p_star: Option<PriceSimplex>,
    /// Onset of the quiescent stretch, for kinds that settle in finite time.
    pub t_settle: Option<f64>,
}

/// Largest per-step price move the integrator can take: eps * beta * n / 4.
pub fn chatter_quantum(epsilon: f64, beta: f64, max_class_size: usize) -> f64 {
    0.25 * epsilon * beta * max_class_size as f64
}

struct WindowScan {
    /// First recorded time whose trailing window satisfies the stall
    /// criterion, minus the window width (the onset of quiescence).
    first_settle: Option<f64>,
    /// Whether the window ending at the final sample satisfies it.
    stalled_at_end: bool,
    /// Per-asset mean over the final window.
    tail_mean: Vec<f64>,
}

/// Rolling min/max stall scan over the recorded samples.
fn scan_windows(traj: &Trajectory, window: f64, stall_tol: f64) -> WindowScan {
    use std::collections::VecDeque;
    let n = traj.len();
    let m = traj.num_assets();
    let times = traj.times();
    let t0 = times[0];

    let mut maxq: Vec<VecDeque<usize>> = vec![VecDeque::new(); m];
    let mut minq: Vec<VecDeque<usize>> = vec![VecDeque::new(); m];
    let mut left = 0usize;
    let mut first_settle = None;
    let mut stalled_at_end = false;

    for k in 0..n {
        let row = traj.price_row(k);
        for j in 0..m {
            let q = &mut maxq[j];
            while let Some(&b) = q.back() {
                if traj.price_row(b)[j] <= row[j] {
                    q.pop_back();
                } else {
                    break;
                }
            }
            q.push_back(k);
            let q = &mut minq[j];
            while let Some(&b) = q.back() {
                if traj.price_row(b)[j] >= row[j] {
                    q.pop_back();
                } else {
                    break;
                }
            }
            q.push_back(k);
        }
        while times[left] < times[k] - window {
            left += 1;
            for j in 0..m {
                while maxq[j].front().is_some_and(|&f| f < left) {
                    maxq[j].pop_front();
                }
                while minq[j].front().is_some_and(|&f| f < left) {
                    minq[j].pop_front();
                }
            }
        }
        if times[k] - t0 >= window {
            let ok = (0..m).all(|j| {
                let hi = traj.price_row(*maxq[j].front().unwrap())[j];
                let lo = traj.price_row(*minq[j].front().unwrap())[j];
                hi - lo <= stall_tol
            });
            if ok && first_settle.is_none() {
                first_settle = Some((times[k] - window).max(0.0));
            }
            if k == n - 1 {
                stalled_at_end = ok;
            }
        }
    }

    // mean over the final window
    let t_last = times[n - 1];
    let mut tail_mean = vec![0.0; m];
    let mut count = 0usize;
    for k in (0..n).rev() {
        if times[k] < t_last - window {
            break;
        }
        for (acc, &p) in tail_mean.iter_mut().zip(traj.price_row(k)) {
            *acc += p;
        }
        count += 1;
    }
    for v in &mut tail_mean {
        *v /= count as f64;
    }

    WindowScan {
        first_settle,
        stalled_at_end,
        tail_mean,
    }
}

/// Classify the tail of a trajectory that was produced under constant
/// information `x`.
///
/// The stall tolerance is the larger of `convergence_tol` and twice the
/// chatter quantum, so sliding-mode chatter reads as settled while genuine
/// motion does not. For binary markets a pinned point is confirmed as a
/// sliding mode by probing the drift one tolerance below and above it.
pub fn classify_rest_point(
    traj: &Trajectory,
    agents: &[AgentSpec],
    x: &[f64],
    beta: f64,
    sigma: &SigmoidFn,
    config: &IntegratorConfig,
) -> Result<RestPointReport> {
    let window = config.convergence_window;
    if traj.len() < 2 || traj.span() < window {
        return Err(Error::invalid(format!(
            "trajectory spans {} which is shorter than the convergence window {window}",
            traj.span()
        )));
    }
    let m = traj.num_assets();
    let n_max = class_sizes(agents, m).into_iter().max().unwrap_or(0);
    let stall_tol = config
        .convergence_tol
        .max(2.0 * chatter_quantum(config.epsilon, beta, n_max));

    let scan = scan_windows(traj, window, stall_tol);
    let p_end = PriceSimplex::from_unchecked(traj.last_prices().to_vec());

    // 1. Boundary asymptote: at a vertex with the drift still favouring it.
    // The value comparison saturates at the vertex itself (no valuation can
    // exceed a price of 1), so probe the flow one tolerance inside.
    let j_star = (0..m)
        .max_by(|&a, &b| p_end.get(a).partial_cmp(&p_end.get(b)).unwrap())
        .unwrap();
    if 1.0 - p_end.get(j_star) <= stall_tol {
        let inset = stall_tol.max(config.convergence_tol);
        let probe: Vec<f64> = (0..m)
            .map(|j| {
                if j == j_star {
                    1.0 - inset
                } else {
                    inset / (m - 1) as f64
                }
            })
            .collect();
        let counts_probe = drift_counts(agents, x, &PriceSimplex::from_unchecked(probe), sigma)?;
        let toward = if m == 2 {
            let n = binary_drift(&counts_probe);
            (j_star == 1 && n > 0) || (j_star == 0 && n < 0)
        } else {
            let top = *counts_probe.iter().max().unwrap();
            let all_equal = counts_probe.iter().all(|&c| c == counts_probe[0]);
            counts_probe[j_star] == top && !all_equal
        };
        if toward {
            return Ok(RestPointReport {
                kind: RestPointKind::BoundaryAsymptote { asset: j_star },
                p_star: None,
                t_settle: None,
            });
        }
    }

    // 2. Still moving: not converged (yet).
    if !scan.stalled_at_end {
        return Ok(RestPointReport {
            kind: RestPointKind::NotConverged,
            p_star: None,
            t_settle: None,
        });
    }

    let p_tail = PriceSimplex::from_unchecked(scan.tail_mean.clone());
    let counts_tail = drift_counts(agents, x, &p_tail, sigma)?;

    // 3. Exact interior rest: all class drifts equal makes dp identically zero.
    if counts_tail.iter().all(|&c| c == counts_tail[0]) {
        return Ok(RestPointReport {
            kind: RestPointKind::InteriorZeroDrift,
            p_star: Some(p_tail),
            t_settle: scan.first_settle,
        });
    }

    // 4. Sliding mode. Binary: confirm opposite flow on both sides of the
    // pinned point.
    if m == 2 {
        let p1 = p_tail.binary_price();
        let lo = (p1 - stall_tol).clamp(0.0, 1.0);
        let hi = (p1 + stall_tol).clamp(0.0, 1.0);
        let n_lo = binary_drift(&drift_counts(agents, x, &PriceSimplex::binary(lo)?, sigma)?);
        let n_hi = binary_drift(&drift_counts(agents, x, &PriceSimplex::binary(hi)?, sigma)?);
        if n_lo > 0 && n_hi < 0 {
            return Ok(RestPointReport {
                kind: RestPointKind::SlidingMode,
                p_star: Some(p_tail),
                t_settle: scan.first_settle,
            });
        }
        return Ok(RestPointReport {
            kind: RestPointKind::NotConverged,
            p_star: None,
            t_settle: None,
        });
    }

    // M > 2: stalled away from every vertex with nonzero drift means the
    // state is pinned on a Filippov surface.
    Ok(RestPointReport {
        kind: RestPointKind::SlidingMode,
        p_star: Some(p_tail),
        t_settle: scan.first_settle,
    })
}
