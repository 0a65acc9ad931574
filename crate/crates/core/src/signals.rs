//! Exogenous information sources x(t): constants, sinusoids, and a
//! precomputed Lorenz trace.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which y-equation the Lorenz integrator uses.
///
/// `AsWritten` follows the source equations verbatim, with the unusual
/// x*(rho - z - y) grouping; that system settles onto a stable equilibrium
/// for the default parameters. `TextbookY` uses the conventional
/// x*(rho - z) - y, which is chaotic here and produces sensitive dependence
/// on initial conditions. Only the y-equation differs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LorenzForm {
    #[default]
    AsWritten,
    TextbookY,
}

/// Lorenz parameters. `sigma` and `alpha` here are the Lorenz coefficients,
/// unrelated to the agent sigmoid and gain; `s` uniformly rescales time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorenzParams {
    pub s: f64,
    pub sigma: f64,
    pub rho: f64,
    pub alpha: f64,
    #[serde(default)]
    pub form: LorenzForm,
}

impl Default for LorenzParams {
    /// s = 0.05, sigma = -3, rho = 26.5, alpha = 1.
    fn default() -> Self {
        Self {
            s: 0.05,
            sigma: -3.0,
            rho: 26.5,
            alpha: 1.0,
            form: LorenzForm::AsWritten,
        }
    }
}

/// Right-hand side of the (rescaled) Lorenz system.
pub fn lorenz_rhs(state: [f64; 3], params: &LorenzParams) -> [f64; 3] {
    let [x, y, z] = state;
    let LorenzParams {
        s,
        sigma,
        rho,
        alpha,
        form,
    } = *params;
    let dy = match form {
        LorenzForm::AsWritten => s * x * (rho - z - y),
        LorenzForm::TextbookY => s * (x * (rho - z) - y),
    };
    [s * sigma * (x - y), dy, s * (x * y - alpha * z)]
}

/// A dense fixed-step RK4 solution of the Lorenz system, sampled on a
/// uniform grid and queried by linear interpolation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorenzTrace {
    params: LorenzParams,
    ic: [f64; 3],
    step: f64,
    samples: Vec<[f64; 3]>,
}

/// Classical fixed-step fourth-order Runge-Kutta trace at spacing `step`,
/// covering [0, t_end].
pub fn integrate_lorenz(
    ic: [f64; 3],
    params: &LorenzParams,
    step: f64,
    t_end: f64,
) -> Result<LorenzTrace> {
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::invalid(format!(
            "lorenz step must be positive, got {step}"
        )));
    }
    if !t_end.is_finite() || t_end <= 0.0 {
        return Err(Error::invalid(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    let n = (t_end / step).ceil() as usize;
    let mut samples = Vec::with_capacity(n + 1);
    let mut v = ic;
    samples.push(v);
    for k in 0..n {
        let k1 = lorenz_rhs(v, params);
        let k2 = lorenz_rhs(add_scaled(v, k1, 0.5 * step), params);
        let k3 = lorenz_rhs(add_scaled(v, k2, 0.5 * step), params);
        let k4 = lorenz_rhs(add_scaled(v, k3, step), params);
        for i in 0..3 {
            v[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::IntegrationFault {
                step: k + 1,
                reason: "lorenz state became non-finite".to_string(),
            });
        }
        samples.push(v);
    }
    Ok(LorenzTrace {
        params: *params,
        ic,
        step,
        samples,
    })
}

fn add_scaled(v: [f64; 3], d: [f64; 3], h: f64) -> [f64; 3] {
    [v[0] + h * d[0], v[1] + h * d[1], v[2] + h * d[2]]
}

impl LorenzTrace {
    pub fn params(&self) -> &LorenzParams {
        &self.params
    }

    pub fn initial_condition(&self) -> [f64; 3] {
        self.ic
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Last time covered by the samples.
    pub fn horizon(&self) -> f64 {
        (self.samples.len() - 1) as f64 * self.step
    }

    pub fn samples(&self) -> &[[f64; 3]] {
        &self.samples
    }

    /// Linear interpolation of the trace at `t` in [0, horizon].
    pub fn at(&self, t: f64) -> Result<[f64; 3]> {
        if t < 0.0 || t > self.horizon() {
            return Err(Error::invalid(format!(
                "t = {t} outside the precomputed horizon [0, {}]",
                self.horizon()
            )));
        }
        let u = t / self.step;
        let k = (u.floor() as usize).min(self.samples.len() - 2);
        let frac = u - k as f64;
        let a = self.samples[k];
        let b = self.samples[k + 1];
        Ok([
            a[0] + frac * (b[0] - a[0]),
            a[1] + frac * (b[1] - a[1]),
            a[2] + frac * (b[2] - a[2]),
        ])
    }
}

/// An exogenous information source.
#[derive(Clone, Debug, PartialEq)]
pub enum Signal {
    Constant(Vec<f64>),
    /// Scalar A * sin(omega * t).
    Sinusoid {
        amplitude: f64,
        omega: f64,
    },
    Lorenz(LorenzTrace),
}

impl Signal {
    /// The sinusoid the driven experiments use: A = 1, omega = 2*pi/25000.
    pub fn default_sinusoid() -> Self {
        Signal::Sinusoid {
            amplitude: 1.0,
            omega: std::f64::consts::TAU / 25_000.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Signal::Constant(v) => v.len(),
            Signal::Sinusoid { .. } => 1,
            Signal::Lorenz(_) => 3,
        }
    }

    /// Sample x(t) into `out` (length must equal `dim()`).
    pub fn sample_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        if t < 0.0 {
            return Err(Error::invalid(format!(
                "sample time must be nonnegative, got {t}"
            )));
        }
        match self {
            Signal::Constant(v) => out.copy_from_slice(v),
            Signal::Sinusoid { amplitude, omega } => {
                out[0] = amplitude * (omega * t).sin();
            }
            Signal::Lorenz(trace) => out.copy_from_slice(&trace.at(t)?),
        }
        Ok(())
    }

    pub fn sample(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.sample_into(t, &mut out)?;
        Ok(out)
    }
}
