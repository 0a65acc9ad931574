//! Agent populations: characteristic functions, valuations, purchase
//! decisions, and the aggregate drift counts that drive the market ODE.
//!
//! Each agent specializes in one asset class and buys one share whenever its
//! squashed valuation strictly exceeds the (approximate) share price. The
//! per-class purchase totals are the integer-valued drift that the dynamics
//! module integrates.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lmsr::PriceSimplex;

/// Closed catalogue of characteristic functions psi_i(x, p).
///
/// `Gained` wraps one of the plain variants with an input gain `alpha` and a
/// price-sensitivity sign `nu`; the price term uses the price of the agent's
/// own asset, measured against 1/2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum CharacteristicFn {
    /// psi = level, independent of information and price.
    ConstantBias { level: f64 },
    /// psi = sign * x[dim].
    Coordinate { dim: usize, sign: i8 },
    /// psi = +1 if a < x[0] < b, else -1 (open interval).
    Interval { a: f64, b: f64 },
    /// psi = alpha * (base(x) + nu * (p_own - 1/2)).
    Gained {
        base: Box<CharacteristicFn>,
        alpha: f64,
        nu: i8,
    },
}

impl CharacteristicFn {
    fn validate_inner(&self, nested: bool) -> Result<()> {
        match self {
            CharacteristicFn::ConstantBias { level } => {
                if !level.is_finite() {
                    return Err(Error::invalid("constant_bias level must be finite"));
                }
            }
            CharacteristicFn::Coordinate { sign, .. } => {
                if *sign != 1 && *sign != -1 {
                    return Err(Error::invalid(format!(
                        "coordinate sign must be +1 or -1, got {sign}"
                    )));
                }
            }
            CharacteristicFn::Interval { a, b } => {
                if a.is_nan() || b.is_nan() || a >= b {
                    return Err(Error::invalid(format!(
                        "interval must have a < b, got a={a} b={b}"
                    )));
                }
            }
            CharacteristicFn::Gained { base, alpha, nu } => {
                if nested {
                    return Err(Error::invalid("gained characteristics cannot nest"));
                }
                if !alpha.is_finite() || *alpha < 1.0 {
                    return Err(Error::invalid(format!(
                        "gain alpha must be >= 1, got {alpha}"
                    )));
                }
                if !matches!(nu, -1..=1) {
                    return Err(Error::invalid(format!(
                        "nu must be in {{-1, 0, 1}}, got {nu}"
                    )));
                }
                base.validate_inner(true)?;
            }
        }
        Ok(())
    }

    /// Interval endpoints, looking through a `Gained` wrapper.
    fn interval_bounds(&self) -> Option<(f64, f64)> {
        match self {
            CharacteristicFn::Interval { a, b } => Some((*a, *b)),
            CharacteristicFn::Gained { base, .. } => base.interval_bounds(),
            _ => None,
        }
    }
}

/// One agent: the asset class it buys plus its characteristic function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub class: usize,
    #[serde(flatten)]
    pub characteristic: CharacteristicFn,
}

impl AgentSpec {
    pub fn new(class: usize, characteristic: CharacteristicFn) -> Result<Self> {
        let spec = Self {
            class,
            characteristic,
        };
        spec.validate(usize::MAX)?;
        Ok(spec)
    }

    /// Check variant invariants plus the class-dependent interval ranges:
    /// class-1 intervals live in [0, 1], class-0 intervals in [-1, 0].
    pub fn validate(&self, num_assets: usize) -> Result<()> {
        self.characteristic.validate_inner(false)?;
        if num_assets != usize::MAX && self.class >= num_assets {
            return Err(Error::invalid(format!(
                "agent class {} out of range for {} assets",
                self.class, num_assets
            )));
        }
        if let Some((a, b)) = self.characteristic.interval_bounds() {
            match self.class {
                1 if !(a >= 0.0 && b <= 1.0) => {
                    return Err(Error::invalid(format!(
                        "class-1 interval must lie in [0, 1], got ({a}, {b})"
                    )));
                }
                0 if !(a >= -1.0 && b <= 0.0) => {
                    return Err(Error::invalid(format!(
                        "class-0 interval must lie in [-1, 0], got ({a}, {b})"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Validate a whole population against a market of `num_assets` assets.
pub fn validate_population(agents: &[AgentSpec], num_assets: usize) -> Result<()> {
    for (i, a) in agents.iter().enumerate() {
        a.validate(num_assets)
            .map_err(|e| Error::invalid(format!("agent {i}: {e}")))?;
    }
    Ok(())
}

type SigmoidImpl = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A named squashing map sigma: R -> [0, 1].
///
/// The default is the logistic sigmoid. Custom maps are accepted as long as
/// they pass a range and monotonicity check on a sample grid.
#[derive(Clone)]
pub struct SigmoidFn {
    name: String,
    f: SigmoidImpl,
}

impl SigmoidFn {
    pub fn logistic() -> Self {
        Self {
            name: "logistic".to_string(),
            f: Arc::new(|t| 1.0 / (1.0 + (-t).exp())),
        }
    }

    /// Wrap a user-supplied map after checking range [0,1] and monotone
    /// nondecreasing behaviour on a grid over [-50, 50].
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let mut prev = f(-50.0);
        let mut t = -50.0;
        while t <= 50.0 {
            let v = f(t);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!(
                    "sigmoid value {v} at {t} outside [0, 1]"
                )));
            }
            if v < prev {
                return Err(Error::invalid(format!("sigmoid decreases at {t}")));
            }
            prev = v;
            t += 0.25;
        }
        Ok(Self {
            name: name.into(),
            f: Arc::new(f),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        (self.f)(t)
    }
}

impl Default for SigmoidFn {
    fn default() -> Self {
        Self::logistic()
    }
}

impl std::fmt::Debug for SigmoidFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SigmoidFn")
            .field("name", &self.name)
            .finish()
    }
}

/// The gained form alpha * (base + nu * (p_own - 1/2)).
///
/// Shared by the generic evaluator and the per-class fast paths so both
/// produce bit-identical valuations.
#[inline]
fn apply_gain(alpha: f64, nu: i8, base: f64, own_price: f64) -> f64 {
    alpha * (base + f64::from(nu) * (own_price - 0.5))
}

#[inline]
fn interval_indicator(a: f64, b: f64, x0: f64) -> f64 {
    if a < x0 && x0 < b {
        1.0
    } else {
        -1.0
    }
}

/// Evaluate psi_i(x, p) for one agent.
pub fn eval_psi(agent: &AgentSpec, x: &[f64], p: &PriceSimplex) -> Result<f64> {
    eval_characteristic(&agent.characteristic, x, p.get(agent.class))
}

fn eval_characteristic(c: &CharacteristicFn, x: &[f64], own_price: f64) -> Result<f64> {
    match c {
        CharacteristicFn::ConstantBias { level } => Ok(*level),
        CharacteristicFn::Coordinate { dim, sign } => {
            let v = x.get(*dim).ok_or_else(|| {
                Error::invalid(format!(
                    "coordinate dim {dim} out of range for signal of dimension {}",
                    x.len()
                ))
            })?;
            Ok(f64::from(*sign) * v)
        }
        CharacteristicFn::Interval { a, b } => {
            let x0 = x
                .first()
                .ok_or_else(|| Error::invalid("interval characteristic needs a scalar signal"))?;
            Ok(interval_indicator(*a, *b, *x0))
        }
        CharacteristicFn::Gained { base, alpha, nu } => {
            let inner = eval_characteristic(base, x, own_price)?;
            Ok(apply_gain(*alpha, *nu, inner, own_price))
        }
    }
}

/// The purchase step: buy iff `value > price` strictly (H(0) = 0).
#[inline]
pub fn purchase_decision_value(value: f64, price: f64) -> bool {
    value > price
}

/// Whether one agent buys a share at information `x` and prices `p`,
/// with the one-share cost approximated by the agent's own spot price.
pub fn purchase_decision(
    agent: &AgentSpec,
    x: &[f64],
    p: &PriceSimplex,
    sigma: &SigmoidFn,
) -> Result<bool> {
    let psi = eval_psi(agent, x, p)?;
    Ok(purchase_decision_value(
        sigma.value(psi),
        p.get(agent.class),
    ))
}

/// Per-class purchase totals: entry j counts the class-j agents that buy.
pub fn drift_counts(
    agents: &[AgentSpec],
    x: &[f64],
    p: &PriceSimplex,
    sigma: &SigmoidFn,
) -> Result<Vec<i64>> {
    let mut counts = vec![0i64; p.num_assets()];
    for agent in agents {
        if agent.class >= counts.len() {
            return Err(Error::invalid(format!(
                "agent class {} out of range for {} assets",
                agent.class,
                counts.len()
            )));
        }
        if purchase_decision(agent, x, p, sigma)? {
            counts[agent.class] += 1;
        }
    }
    Ok(counts)
}

/// Binary net drift N = counts[1] - counts[0].
pub fn binary_drift(counts: &[i64]) -> i64 {
    debug_assert_eq!(counts.len(), 2);
    counts[1] - counts[0]
}

/// Per-class sizes |C_j|.
pub fn class_sizes(agents: &[AgentSpec], num_assets: usize) -> Vec<usize> {
    let mut sizes = vec![0usize; num_assets];
    for a in agents {
        if a.class < num_assets {
            sizes[a.class] += 1;
        }
    }
    sizes
}

// ---------------------------------------------------------------------------
// Drift evaluator
// ---------------------------------------------------------------------------

/// Precompiled drift computation for one population.
///
/// Recognizes two common per-class shapes and replaces the per-agent loop
/// with a cached-value or sorted-endpoint count; everything else falls back
/// to the generic loop. Fast paths evaluate the exact same floating-point
/// expressions as `drift_counts`, so the counts agree bit for bit.
pub struct DriftEvaluator {
    classes: Vec<ClassEval>,
    num_assets: usize,
}

enum ClassEval {
    Empty,
    /// sigma(psi) is constant: sorted cached valuations, count by rank.
    ConstValues {
        sorted: Vec<f64>,
    },
    /// All agents are interval-shaped with one shared (alpha, nu); psi takes
    /// just the two values given by the indicator, so two decisions plus a
    /// membership count settle the whole class.
    IntervalFamily {
        a_sorted: Vec<f64>,
        b_sorted: Vec<f64>,
        alpha: f64,
        nu: i8,
    },
    Generic {
        members: Vec<AgentSpec>,
    },
}

impl DriftEvaluator {
    /// Build for a population facing a market of `num_assets` assets.
    ///
    /// `constant_x`: the signal value when it is constant over the run, which
    /// lets x-dependent-but-constant valuations be cached too. Pass `None`
    /// for time-varying signals.
    pub fn new(
        agents: &[AgentSpec],
        num_assets: usize,
        sigma: &SigmoidFn,
        constant_x: Option<&[f64]>,
    ) -> Result<Self> {
        validate_population(agents, num_assets)?;
        let mut per_class: Vec<Vec<AgentSpec>> = vec![Vec::new(); num_assets];
        for a in agents {
            per_class[a.class].push(a.clone());
        }
        let classes = per_class
            .into_iter()
            .map(|members| Self::compile_class(members, sigma, constant_x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            classes,
            num_assets,
        })
    }

    fn compile_class(
        members: Vec<AgentSpec>,
        sigma: &SigmoidFn,
        constant_x: Option<&[f64]>,
    ) -> Result<ClassEval> {
        if members.is_empty() {
            return Ok(ClassEval::Empty);
        }

        // Price-independent characteristics under a constant signal cache to
        // one valuation per agent.
        let price_free = |c: &CharacteristicFn| {
            matches!(
                c,
                CharacteristicFn::ConstantBias { .. } | CharacteristicFn::Coordinate { .. }
            ) || matches!(c, CharacteristicFn::Gained { base, nu: 0, .. }
                    if matches!(**base, CharacteristicFn::ConstantBias { .. } | CharacteristicFn::Coordinate { .. }))
        };
        let const_psi = |c: &CharacteristicFn| {
            matches!(c, CharacteristicFn::ConstantBias { .. })
                || matches!(c, CharacteristicFn::Gained { base, nu: 0, .. }
                    if matches!(**base, CharacteristicFn::ConstantBias { .. }))
        };
        let cacheable = members.iter().all(|m| {
            const_psi(&m.characteristic) || (constant_x.is_some() && price_free(&m.characteristic))
        });
        if cacheable {
            let x = constant_x.unwrap_or(&[]);
            let mut sorted = members
                .iter()
                .map(|m| {
                    // the own-price argument is inert here (nu = 0 throughout);
                    // 0.5 zeroes the price term exactly
                    eval_characteristic(&m.characteristic, x, 0.5).map(|psi| sigma.value(psi))
                })
                .collect::<Result<Vec<f64>>>()?;
            sorted.sort_by(|u, v| u.partial_cmp(v).expect("sigmoid values are ordered"));
            return Ok(ClassEval::ConstValues { sorted });
        }

        // Interval family: every member an Interval, optionally behind one
        // shared Gained wrapper.
        let family_params = |c: &CharacteristicFn| -> Option<(f64, i8, f64, f64)> {
            match c {
                CharacteristicFn::Interval { a, b } => Some((1.0, 0, *a, *b)),
                CharacteristicFn::Gained { base, alpha, nu } => match **base {
                    CharacteristicFn::Interval { a, b } => Some((*alpha, *nu, a, b)),
                    _ => None,
                },
                _ => None,
            }
        };
        let params: Option<Vec<_>> = members
            .iter()
            .map(|m| family_params(&m.characteristic))
            .collect();
        if let Some(params) = params {
            let (alpha0, nu0, _, _) = params[0];
            if params
                .iter()
                .all(|&(al, nu, _, _)| al == alpha0 && nu == nu0)
            {
                let mut a_sorted: Vec<f64> = params.iter().map(|&(_, _, a, _)| a).collect();
                let mut b_sorted: Vec<f64> = params.iter().map(|&(_, _, _, b)| b).collect();
                a_sorted.sort_by(|u, v| u.partial_cmp(v).unwrap());
                b_sorted.sort_by(|u, v| u.partial_cmp(v).unwrap());
                return Ok(ClassEval::IntervalFamily {
                    a_sorted,
                    b_sorted,
                    alpha: alpha0,
                    nu: nu0,
                });
            }
        }

        Ok(ClassEval::Generic { members })
    }

    pub fn num_assets(&self) -> usize {
        self.num_assets
    }

    /// Largest class size (bounds |N| and the per-step price move).
    pub fn max_class_size(&self) -> usize {
        self.classes
            .iter()
            .map(|c| match c {
                ClassEval::Empty => 0,
                ClassEval::ConstValues { sorted } => sorted.len(),
                ClassEval::IntervalFamily { a_sorted, .. } => a_sorted.len(),
                ClassEval::Generic { members } => members.len(),
            })
            .max()
            .unwrap_or(0)
    }

    /// Drift counts at (x, prices), written into `counts`.
    pub fn counts_into(
        &self,
        x: &[f64],
        prices: &[f64],
        sigma: &SigmoidFn,
        counts: &mut [i64],
    ) -> Result<()> {
        debug_assert_eq!(prices.len(), self.num_assets);
        debug_assert_eq!(counts.len(), self.num_assets);
        for (class, eval) in self.classes.iter().enumerate() {
            let own = prices[class];
            counts[class] = match eval {
                ClassEval::Empty => 0,
                ClassEval::ConstValues { sorted } => {
                    // buyers have value strictly above the price
                    (sorted.len() - sorted.partition_point(|&v| v <= own)) as i64
                }
                ClassEval::IntervalFamily {
                    a_sorted,
                    b_sorted,
                    alpha,
                    nu,
                } => {
                    let x0 = *x.first().ok_or_else(|| {
                        Error::invalid("interval characteristic needs a scalar signal")
                    })?;
                    // #{a_i < x0 < b_i} = #{a_i < x0} - #{b_i <= x0}
                    let inside = (a_sorted.partition_point(|&a| a < x0)
                        - b_sorted.partition_point(|&b| b <= x0))
                        as i64;
                    let n = a_sorted.len() as i64;
                    let buy_in = purchase_decision_value(
                        sigma.value(apply_gain(*alpha, *nu, 1.0, own)),
                        own,
                    );
                    let buy_out = purchase_decision_value(
                        sigma.value(apply_gain(*alpha, *nu, -1.0, own)),
                        own,
                    );
                    (if buy_in { inside } else { 0 }) + (if buy_out { n - inside } else { 0 })
                }
                ClassEval::Generic { members } => {
                    let mut c = 0i64;
                    for m in members {
                        let psi = eval_characteristic(&m.characteristic, x, own)?;
                        if purchase_decision_value(sigma.value(psi), own) {
                            c += 1;
                        }
                    }
                    c
                }
            };
        }
        Ok(())
    }
}
