//! Self-check suite behind the CLI `validate` subcommand: randomized
//! spot-checks of the core pricing identities and dynamics invariants.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::agents::{AgentSpec, CharacteristicFn, SigmoidFn};
use crate::analysis::monotone_violation;
use crate::dynamics::{
    chatter_quantum, classify_rest_point, integrate, IntegratorConfig, RestPointKind,
};
use crate::lmsr::{spot_prices, trade_cost, MarketState};
use crate::signals::Signal;

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn random_state(rng: &mut ChaCha8Rng) -> MarketState {
    let m = rng.random_range(2..5);
    let beta = 10f64.powf(rng.random_range(-3.0..0.5));
    let q: Vec<f64> = (0..m).map(|_| rng.random_range(-20.0..20.0)).collect();
    MarketState::new(q, beta).unwrap()
}

/// Run the invariant suite. Deterministic for a fixed seed.
pub fn run_invariant_checks(seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // simplex: prices sum to one and stay in [0, 1]
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let s = random_state(&mut rng);
        let p = spot_prices(&s);
        let sum: f64 = p.as_slice().iter().sum();
        worst = worst.max((sum - 1.0).abs());
        if p.as_slice().iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            worst = f64::INFINITY;
        }
    }
    out.push(CheckResult {
        name: "simplex",
        passed: worst <= 1e-12,
        detail: format!("max |sum - 1| = {worst:.3e} over 1000 states"),
    });

    // path independence of trade costs
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let s = random_state(&mut rng);
        let asset = rng.random_range(0..s.num_assets());
        let a = rng.random_range(0.0..5.0);
        let b = rng.random_range(0.0..5.0);
        let whole = trade_cost(&s, asset, a + b);
        let split = trade_cost(&s, asset, a) + trade_cost(&s.with_purchase(asset, a), asset, b);
        worst = worst.max((whole - split).abs());
    }
    out.push(CheckResult {
        name: "path_independence",
        passed: worst <= 1e-12,
        detail: format!("max split mismatch = {worst:.3e} over 1000 cases"),
    });

    // translation invariance of prices
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let s = random_state(&mut rng);
        let shift = rng.random_range(-10.0..10.0);
        if (s.beta() * shift).abs() > 100.0 {
            continue;
        }
        let shifted =
            MarketState::new(s.quantities().iter().map(|q| q + shift).collect(), s.beta()).unwrap();
        let a = spot_prices(&s);
        let b = spot_prices(&shifted);
        for j in 0..s.num_assets() {
            worst = worst.max((a.get(j) - b.get(j)).abs());
        }
    }
    out.push(CheckResult {
        name: "translation_invariance",
        passed: worst <= 1e-12,
        detail: format!("max price shift = {worst:.3e} over 1000 cases"),
    });

    // small-beta one-share cost approximation
    let mut worst_ratio = 0.0f64;
    for &beta in &[0.1f64, 0.01, 0.001] {
        for _ in 0..300 {
            let p1: f64 = rng.random_range(0.01..0.99);
            let q1 = (p1 / (1.0 - p1)).ln() / beta;
            let s = MarketState::new(vec![0.0, q1], beta).unwrap();
            let p = spot_prices(&s);
            for asset in 0..2 {
                let err = (trade_cost(&s, asset, 1.0) - p.get(asset)).abs();
                worst_ratio = worst_ratio.max(err / beta);
            }
        }
    }
    out.push(CheckResult {
        name: "small_beta_cost",
        passed: worst_ratio <= 1.0,
        detail: format!("max |kappa(1) - p| / beta = {worst_ratio:.3}"),
    });

    // constant-information monotonicity within the chatter bound
    let sigma = SigmoidFn::logistic();
    let config = IntegratorConfig {
        t_end: 2000.0,
        ..Default::default()
    };
    let mut worst_excess = f64::NEG_INFINITY;
    let mut converged = true;
    for _ in 0..20 {
        let c1 = rng.random_range(1..=8usize);
        let c0 = rng.random_range(1..=8usize);
        let mut agents = Vec::new();
        for _ in 0..c1 {
            agents.push(AgentSpec {
                class: 1,
                characteristic: CharacteristicFn::ConstantBias {
                    level: rng.random_range(-5.0..5.0),
                },
            });
        }
        for _ in 0..c0 {
            agents.push(AgentSpec {
                class: 0,
                characteristic: CharacteristicFn::ConstantBias {
                    level: rng.random_range(-5.0..5.0),
                },
            });
        }
        let market = MarketState::symmetric(2, 0.01).unwrap();
        let traj = integrate(&market, &agents, &Signal::Constant(vec![]), &sigma, &config).unwrap();
        let bound = chatter_quantum(config.epsilon, 0.01, c0.max(c1));
        worst_excess = worst_excess.max(monotone_violation(&traj.binary_prices()) - bound);
        let report = classify_rest_point(&traj, &agents, &[], 0.01, &sigma, &config).unwrap();
        if report.kind == RestPointKind::NotConverged {
            converged = false;
        }
    }
    out.push(CheckResult {
        name: "monotonicity",
        passed: worst_excess <= 1e-15,
        detail: format!("max violation minus chatter bound = {worst_excess:.3e} over 20 runs"),
    });
    out.push(CheckResult {
        name: "constant_info_convergence",
        passed: converged,
        detail: "20 constant-information runs all classified as converged".to_string(),
    });

    // sliding-mode pinning at an engineered jump
    let logit = |p: f64| (p / (1.0 - p)).ln();
    let agents = vec![
        AgentSpec::new(1, CharacteristicFn::ConstantBias { level: logit(0.7) }).unwrap(),
        AgentSpec::new(0, CharacteristicFn::ConstantBias { level: logit(0.3) }).unwrap(),
    ];
    let market = MarketState::symmetric(2, 0.01).unwrap();
    let traj = integrate(&market, &agents, &Signal::Constant(vec![]), &sigma, &config).unwrap();
    let report = classify_rest_point(&traj, &agents, &[], 0.01, &sigma, &config).unwrap();
    let (passed, detail) = match (&report.kind, &report.p_star) {
        (RestPointKind::SlidingMode, Some(p)) => {
            let err = (p.binary_price() - 0.7).abs();
            (
                err <= 1e-3,
                format!("pinned at {:.6}, |error| = {err:.2e}", p.binary_price()),
            )
        }
        other => (false, format!("unexpected classification {other:?}")),
    };
    out.push(CheckResult {
        name: "sliding_mode_pinning",
        passed,
        detail,
    });

    out
}
