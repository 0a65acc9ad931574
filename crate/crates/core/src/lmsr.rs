//! Logarithmic market scoring rule pricing for a fixed universe of M >= 2 assets.
//!
//! Prices are the softmax of the outstanding share quantities scaled by the
//! liquidity factor `beta`; trade costs are differences of the log-sum-exp
//! potential. All exponentials go through max-subtraction so the math stays
//! finite for |beta * q| well beyond anything a long run can produce.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outstanding share quantities plus the liquidity factor.
///
/// Quantities are reals: the continuum model trades fractional shares.
#[derive(Clone, Debug, PartialEq)]
pub struct MarketState {
    q: Vec<f64>,
    beta: f64,
}

impl MarketState {
    pub fn new(q: Vec<f64>, beta: f64) -> Result<Self> {
        if q.len() < 2 {
            return Err(Error::invalid(format!(
                "market needs at least 2 assets, got {}",
                q.len()
            )));
        }
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::invalid(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("quantities must be finite"));
        }
        Ok(Self { q, beta })
    }

    /// Fresh market with all quantities zero (uniform prices).
    pub fn symmetric(num_assets: usize, beta: f64) -> Result<Self> {
        Self::new(vec![0.0; num_assets], beta)
    }

    /// Market whose spot prices equal `prices`: q_j = ln(p_j) / beta.
    ///
    /// Every price must be strictly interior so the log exists.
    pub fn from_prices(prices: &PriceSimplex, beta: f64) -> Result<Self> {
        if prices.as_slice().iter().any(|&p| p <= 0.0 || p >= 1.0) {
            return Err(Error::invalid(
                "from_prices requires strictly interior prices",
            ));
        }
        let q = prices.as_slice().iter().map(|p| p.ln() / beta).collect();
        Self::new(q, beta)
    }

    pub fn num_assets(&self) -> usize {
        self.q.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn quantities(&self) -> &[f64] {
        &self.q
    }

    /// The state after buying `dq >= 0` shares of `asset` (no sell-backs).
    pub fn with_purchase(&self, asset: usize, dq: f64) -> Self {
        assert!(asset < self.q.len(), "asset index out of range");
        assert!(dq >= 0.0, "dq must be nonnegative");
        let mut next = self.clone();
        next.q[asset] += dq;
        next
    }

    pub(crate) fn quantities_mut(&mut self) -> &mut [f64] {
        &mut self.q
    }

    /// Subtract the mean from q. Softmax prices are translation invariant, so
    /// this changes nothing observable; it keeps |beta * q| bounded on long runs.
    pub(crate) fn recenter(&mut self) {
        let mean = self.q.iter().sum::<f64>() / self.q.len() as f64;
        for v in &mut self.q {
            *v -= mean;
        }
    }
}

/// A price vector on the unit simplex; entries read as probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceSimplex {
    p: Vec<f64>,
}

/// Sum-to-one slack accepted when validating an externally supplied simplex.
pub const SIMPLEX_TOL: f64 = 1e-12;

impl PriceSimplex {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::invalid("price simplex needs at least 2 entries"));
        }
        if p.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::invalid("price entries must lie in [0, 1]"));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid(format!(
                "price entries must sum to 1 within {SIMPLEX_TOL}, got {sum}"
            )));
        }
        Ok(Self { p })
    }

    pub fn uniform(num_assets: usize) -> Self {
        Self {
            p: vec![1.0 / num_assets as f64; num_assets],
        }
    }

    /// Binary simplex (p_0, p_1) = (1 - p1, p1).
    pub fn binary(p1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p1) {
            return Err(Error::invalid(format!("p1 must lie in [0, 1], got {p1}")));
        }
        Ok(Self {
            p: vec![1.0 - p1, p1],
        })
    }

    pub(crate) fn from_unchecked(p: Vec<f64>) -> Self {
        Self { p }
    }

    pub fn num_assets(&self) -> usize {
        self.p.len()
    }

    pub fn get(&self, asset: usize) -> f64 {
        self.p[asset]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    /// Price of asset 1, the scalar p of a binary market.
    pub fn binary_price(&self) -> f64 {
        debug_assert_eq!(self.p.len(), 2);
        self.p[1]
    }
}

impl std::ops::Index<usize> for PriceSimplex {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.p[i]
    }
}

/// log(sum_j exp(v_j)) with max-subtraction.
fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Softmax of `beta * q` written into `out`.
pub(crate) fn softmax_scaled_into(q: &[f64], beta: f64, out: &mut [f64]) {
    debug_assert_eq!(q.len(), out.len());
    let m = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &qj) in out.iter_mut().zip(q) {
        let e = (beta * (qj - m)).exp();
        *o = e;
        sum += e;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// The LMSR potential C(q) = (1/beta) * log sum_j exp(beta * q_j).
///
/// Trade costs are differences of this potential.
pub fn cost_potential(state: &MarketState) -> f64 {
    let beta = state.beta();
    let scaled: Vec<f64> = state.quantities().iter().map(|&q| beta * q).collect();
    log_sum_exp(&scaled) / beta
}

/// Spot prices p_j = exp(beta q_j) / sum_k exp(beta q_k).
pub fn spot_prices(state: &MarketState) -> PriceSimplex {
    let mut p = vec![0.0; state.num_assets()];
    softmax_scaled_into(state.quantities(), state.beta(), &mut p);
    PriceSimplex::from_unchecked(p)
}

/// Cost of buying `dq >= 0` shares of `asset`: C(q + dq e_asset) - C(q).
pub fn trade_cost(state: &MarketState, asset: usize, dq: f64) -> f64 {
    let before = cost_potential(state);
    cost_potential(&state.with_purchase(asset, dq)) - before
}

/// The continuum model's one-share price: the spot price itself.
///
/// First-order in beta, |trade_cost(q, j, 1) - p_j| <= beta.
pub fn unit_cost_approx(state: &MarketState, asset: usize) -> f64 {
    assert!(asset < state.num_assets(), "asset index out of range");
    spot_prices(state).get(asset)
}
