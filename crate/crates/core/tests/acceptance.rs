//! Acceptance suite: one test per criterion, each printing a pass line with
//! its runtime (run with `--nocapture` to see them).

use std::time::Instant;

use lmsr_market::agents::{AgentSpec, CharacteristicFn, SigmoidFn};
use lmsr_market::analysis::{dft_phase, mean_ci};
use lmsr_market::dynamics::{classify_rest_point, integrate, IntegratorConfig, RestPointKind};
use lmsr_market::experiments::{
    run_constant_info_suite, run_interval_tracking, run_lag_sweep, run_lorenz_demo,
    run_multi_asset_mc, ConstantInfoParams, IntervalTrackingParams, LagSweepParams,
    LorenzDemoParams, MultiAssetMcParams,
};
use lmsr_market::lmsr::{spot_prices, trade_cost, MarketState};
use lmsr_market::signals::Signal;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn pass(criterion: u32, start: Instant, detail: &str) {
    println!(
        "criterion {criterion:02} PASS ({:6.1}s)  {detail}",
        start.elapsed().as_secs_f64()
    );
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn bias(class: usize, level: f64) -> AgentSpec {
    AgentSpec::new(class, CharacteristicFn::ConstantBias { level }).unwrap()
}

fn total_variation(series: &[f64]) -> f64 {
    series.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

#[test]
fn criterion_01_lmsr_exactness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_path = 0.0f64;
    let mut worst_shift = 0.0f64;
    for _ in 0..10_000 {
        let m = rng.random_range(2..5);
        let beta = 10f64.powf(rng.random_range(-3.0..0.7));
        let q: Vec<f64> = (0..m).map(|_| rng.random_range(-15.0..15.0)).collect();
        let state = MarketState::new(q.clone(), beta).unwrap();

        let asset = rng.random_range(0..m);
        let a = rng.random_range(0.0..4.0);
        let b = rng.random_range(0.0..4.0);
        let whole = trade_cost(&state, asset, a + b);
        let split =
            trade_cost(&state, asset, a) + trade_cost(&state.with_purchase(asset, a), asset, b);
        worst_path = worst_path.max((whole - split).abs());

        let shift = rng.random_range(-10.0..10.0);
        if (beta * shift).abs() <= 100.0 {
            let shifted = MarketState::new(q.iter().map(|v| v + shift).collect(), beta).unwrap();
            let pa = spot_prices(&state);
            let pb = spot_prices(&shifted);
            for j in 0..m {
                worst_shift = worst_shift.max((pa.get(j) - pb.get(j)).abs());
            }
        }
    }
    assert!(
        worst_path <= 1e-12,
        "path independence worst error {worst_path:e}"
    );
    assert!(
        worst_shift <= 1e-12,
        "translation invariance worst error {worst_shift:e}"
    );
    pass(
        1,
        start,
        &format!("path independence {worst_path:.2e}, translation invariance {worst_shift:.2e} over 10^4 cases"),
    );
}

#[test]
fn criterion_02_small_beta_cost_approximation() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst = 0.0f64;
    for &beta in &[0.1f64, 0.01, 0.001] {
        for _ in 0..1000 {
            let p1: f64 = rng.random_range(0.01..0.99);
            let state = MarketState::new(vec![0.0, logit(p1) / beta], beta).unwrap();
            let prices = spot_prices(&state);
            for asset in 0..2 {
                let err = (trade_cost(&state, asset, 1.0) - prices.get(asset)).abs();
                assert!(
                    err <= beta,
                    "|kappa(1) - p| = {err:e} exceeds beta = {beta} at p1 = {p1}"
                );
                worst = worst.max(err / beta);
            }
        }
    }
    pass(
        2,
        start,
        &format!("max |kappa(1) - p| / beta = {worst:.3} over 3 x 10^3 cases"),
    );
}

#[test]
fn criterion_03_logistic_oracle() {
    let start = Instant::now();
    let market = MarketState::symmetric(2, 0.01).unwrap();
    let sigma = SigmoidFn::logistic();
    let agents = vec![bias(1, 100.0)];
    let config = IntegratorConfig {
        epsilon: 0.01,
        t_end: 1000.0,
        record_stride: 1,
        ..Default::default()
    };
    let traj = integrate(&market, &agents, &Signal::Constant(vec![]), &sigma, &config).unwrap();
    let mut worst = 0.0f64;
    for (k, &t) in traj.times().iter().enumerate() {
        let closed_form = 1.0 / (1.0 + (-0.01 * t).exp());
        worst = worst.max((traj.price_row(k)[1] - closed_form).abs());
    }
    assert!(worst <= 1e-3, "logistic deviation {worst:e}");
    pass(
        3,
        start,
        &format!("max deviation from closed-form logistic = {worst:.2e}"),
    );
}

#[test]
fn criterion_04_constant_information_convergence() {
    let start = Instant::now();
    let params = ConstantInfoParams::default(); // 1000 instances, t_end 5000
    let result = run_constant_info_suite(&params, 104).unwrap();
    assert_eq!(result.rows.len(), 1000);
    assert_eq!(
        result.not_converged, 0,
        "NotConverged instances: kinds {:?}",
        result.kind_counts
    );
    assert!(
        result.violations_within_bound,
        "monotone violation exceeded the chatter bound"
    );
    let worst_ratio = result
        .rows
        .iter()
        .map(|r| r.monotone_violation / r.violation_bound)
        .fold(0.0f64, f64::max);
    pass(
        4,
        start,
        &format!(
            "1000 runs converged, kinds {:?}, max violation/bound = {worst_ratio:.3}",
            result.kind_counts
        ),
    );
}

#[test]
fn criterion_05_sliding_mode_pinning() {
    let start = Instant::now();
    let sigma = SigmoidFn::logistic();
    // two engineered jump populations: N jumps +1 -> -1 at 0.7 and
    // +2 -> -3 at 0.6
    let populations: Vec<(Vec<AgentSpec>, f64)> = vec![
        (vec![bias(1, logit(0.7)), bias(0, logit(0.3))], 0.7),
        (
            vec![
                bias(1, logit(0.6)),
                bias(1, logit(0.6)),
                bias(0, logit(0.4)),
                bias(0, logit(0.4)),
                bias(0, logit(0.4)),
            ],
            0.6,
        ),
    ];
    let mut detail = String::new();
    for &(epsilon, tol) in &[(0.01, 1e-3), (0.001, 1e-4)] {
        for (agents, target) in &populations {
            let market = MarketState::symmetric(2, 0.01).unwrap();
            let config = IntegratorConfig {
                epsilon,
                t_end: 2000.0,
                record_stride: 1,
                ..Default::default()
            };
            let traj =
                integrate(&market, agents, &Signal::Constant(vec![]), &sigma, &config).unwrap();
            let report = classify_rest_point(&traj, agents, &[], 0.01, &sigma, &config).unwrap();
            assert_eq!(
                report.kind,
                RestPointKind::SlidingMode,
                "population at {target}"
            );
            let p_star = report.p_star.unwrap().binary_price();
            let err = (p_star - target).abs();
            assert!(
                err <= tol,
                "eps = {epsilon}: pinned at {p_star} vs {target}, error {err:e} > {tol:e}"
            );
            detail.push_str(&format!("eps={epsilon}: |err|={err:.1e}  "));
        }
    }
    pass(5, start, &detail);
}

/// Independent discrete-time simulator: the pre-limit recursion with exact
/// one-share trade costs, written against the raw pricing formulas.
mod discrete_oracle {
    pub struct RawMarket {
        pub q: Vec<f64>,
        pub beta: f64,
    }

    impl RawMarket {
        pub fn prices(&self) -> Vec<f64> {
            let e: Vec<f64> = self.q.iter().map(|&q| (self.beta * q).exp()).collect();
            let s: f64 = e.iter().sum();
            e.into_iter().map(|v| v / s).collect()
        }

        /// kappa_j(1) = (1/beta) ln( sum_k exp(beta q'_k) / sum_k exp(beta q_k) )
        pub fn kappa_one(&self, asset: usize) -> f64 {
            let s0: f64 = self.q.iter().map(|&q| (self.beta * q).exp()).sum();
            let s1 =
                s0 - (self.beta * self.q[asset]).exp() + (self.beta * (self.q[asset] + 1.0)).exp();
            (s1 / s0).ln() / self.beta
        }
    }

    pub fn sigmoid(t: f64) -> f64 {
        1.0 / (1.0 + (-t).exp())
    }
}

#[test]
fn criterion_06_discrete_oracle_equivalence() {
    let start = Instant::now();
    let beta = 0.01;
    let sigma = SigmoidFn::logistic();
    let steps = 1000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(106);

    let mut steps_compared = 0usize;
    let mut steps_total = 0usize;
    let mut disagreements = 0usize;
    let mut instances_diverged = 0usize;

    for _ in 0..100 {
        let c1 = rng.random_range(1..=10usize);
        let c0 = rng.random_range(1..=10usize);
        let mut pop: Vec<(usize, f64)> = Vec::new();
        for _ in 0..c1 {
            pop.push((1, rng.random_range(-5.0..5.0)));
        }
        for _ in 0..c0 {
            pop.push((0, rng.random_range(-5.0..5.0)));
        }
        let agents: Vec<AgentSpec> = pop.iter().map(|&(c, l)| bias(c, l)).collect();

        let market = MarketState::symmetric(2, beta).unwrap();
        let config = IntegratorConfig {
            epsilon: 1.0,
            t_end: steps as f64,
            record_stride: 1,
            record_drift: true,
            ..Default::default()
        };
        let traj = integrate(&market, &agents, &Signal::Constant(vec![]), &sigma, &config).unwrap();

        let mut oracle = discrete_oracle::RawMarket {
            q: vec![0.0, 0.0],
            beta,
        };
        let mut diverged = false;
        for k in 0..steps {
            steps_total += 1;
            if diverged {
                continue;
            }
            steps_compared += 1;
            let int_prices = traj.price_row(k);
            let or_prices = oracle.prices();
            for j in 0..2 {
                assert!(
                    (int_prices[j] - or_prices[j]).abs() <= 1e-12,
                    "price mismatch at step {k}"
                );
            }
            // oracle decisions use the exact one-share cost; the integrator
            // approximates it by the spot price
            let mut or_counts = [0i64; 2];
            let mut flip_within_bound = true;
            let mut any_flip = false;
            for &(class, level) in &pop {
                let value = discrete_oracle::sigmoid(level);
                let kappa = oracle.kappa_one(class);
                let exact = value > kappa;
                let approx = value > int_prices[class];
                if exact {
                    or_counts[class] += 1;
                }
                if exact != approx {
                    any_flip = true;
                    flip_within_bound &= (value - kappa).abs() <= beta;
                }
            }
            let int_counts = traj.drift_row(k).unwrap();
            if int_counts == or_counts {
                assert!(!any_flip || flip_within_bound);
                oracle.q[0] += or_counts[0] as f64;
                oracle.q[1] += or_counts[1] as f64;
            } else {
                assert!(
                    any_flip && flip_within_bound,
                    "decision mismatch without a near-threshold agent at step {k}"
                );
                disagreements += 1;
                instances_diverged += 1;
                diverged = true;
            }
        }
    }

    let compared_fraction = steps_compared as f64 / steps_total as f64;
    assert!(
        compared_fraction >= 0.5,
        "only {compared_fraction:.2} of steps were comparable"
    );
    pass(
        6,
        start,
        &format!(
            "step-for-step over {steps_compared}/{steps_total} steps; {disagreements} \
             near-threshold divergences ({instances_diverged}/100 instances), all within beta"
        ),
    );
}

#[test]
fn criterion_07_lorenz_demo_reproduction() {
    let start = Instant::now();
    let params = LorenzDemoParams::default();
    let result = run_lorenz_demo(&params).unwrap();

    // (a) prices stay in [0, 1]
    for run in &result.runs {
        for k in 0..run.len() {
            let p = run.price_row(k)[1];
            assert!((0.0..=1.0).contains(&p), "price {p} out of range");
        }
    }

    // (b) sensitive dependence: the two price curves separate
    let pa = result.runs[0].binary_prices();
    let pb = result.runs[1].binary_prices();
    let max_gap = pa
        .iter()
        .zip(&pb)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(max_gap > 0.1, "price curves separated by only {max_gap}");

    // (c) smoothing: total variation of p below that of sigma(x_1)
    let mut tv_detail = String::new();
    for run in &result.runs {
        let p = run.binary_prices();
        let squashed: Vec<f64> = run
            .signal_series(0)
            .unwrap()
            .iter()
            .map(|&x| 1.0 / (1.0 + (-x).exp()))
            .collect();
        let tv_p = total_variation(&p);
        let tv_x = total_variation(&squashed);
        assert!(
            tv_p < tv_x,
            "market did not smooth: TV(p) = {tv_p} vs TV(sigma(x1)) = {tv_x}"
        );
        tv_detail = format!("TV(p) = {tv_p:.1} < TV(sigma(x1)) = {tv_x:.1}");
    }
    pass(
        7,
        start,
        &format!("max separation = {max_gap:.3}, {tv_detail}"),
    );
}

#[test]
fn criterion_08_interval_tracking_reproduction() {
    let start = Instant::now();
    let seed = 108; // fixed seed, recorded here

    // five agents per class: plateaus (N = 0 stretches) cover > 1% of the run
    let small = IntervalTrackingParams {
        agents_per_class: 5,
        ..Default::default()
    };
    let result = run_interval_tracking(&small, seed).unwrap();
    let drifts = result.trajectory.binary_drift_series().unwrap();
    let plateau_fraction = drifts.iter().filter(|&&n| n == 0).count() as f64 / drifts.len() as f64;
    assert!(
        plateau_fraction > 0.01,
        "plateaus cover only {plateau_fraction:.4} of the horizon"
    );

    // twenty-five per class: price saturates near the valuation ceiling
    // sigma(1) when the signal peaks
    let big = IntervalTrackingParams {
        agents_per_class: 25,
        ..Default::default()
    };
    let result = run_interval_tracking(&big, seed).unwrap();
    let saturation = 1.0 / (1.0 + (-1.0f64).exp());
    let p = result.trajectory.binary_prices();
    let x = result.trajectory.signal_series(0).unwrap();
    let peak_price = p
        .iter()
        .zip(&x)
        .filter(|&(_, &xv)| xv >= 0.95)
        .map(|(&pv, _)| pv)
        .fold(0.0f64, f64::max);
    assert!(
        peak_price >= saturation - 0.05,
        "peak price {peak_price} below saturation {saturation} - 0.05"
    );
    pass(
        8,
        start,
        &format!(
            "plateau fraction = {plateau_fraction:.3}, peak price {peak_price:.3} vs saturation {saturation:.3} (seed {seed})"
        ),
    );
}

fn sweep_ratio(rows: &[lmsr_market::analysis::SweepSummary], alpha: f64, nu: i8) -> f64 {
    rows.iter()
        .find(|r| r.alpha == alpha && r.nu == nu)
        .unwrap()
        .mean_phase_ratio
}

#[test]
fn criterion_09_lag_sweep_ordering_full_scale() {
    let start = Instant::now();
    // the full published design: 15 alphas x 3 nus x 5 replications,
    // 125 agents per class
    let params = LagSweepParams::default();
    let result = run_lag_sweep(&params, 109).unwrap();
    assert_eq!(result.rows.len(), 45);
    assert_eq!(result.degenerate_total, 0);

    // the market always lags the information signal
    assert!(result.rows.iter().all(|r| r.mean_phase_ratio > 1.0));

    let mut ordered = 0;
    for &alpha in &params.alphas {
        if sweep_ratio(&result.rows, alpha, 1) > sweep_ratio(&result.rows, alpha, 0)
            && sweep_ratio(&result.rows, alpha, 0) > sweep_ratio(&result.rows, alpha, -1)
        {
            ordered += 1;
        }
    }
    assert!(
        ordered >= 12,
        "nu ordering held for only {ordered} of 15 alphas: {:?}",
        result.rows
    );

    // saturation: the nu = +1 curve grows more over the lower half of the
    // gain range than over the upper half
    let plus: Vec<f64> = params
        .alphas
        .iter()
        .map(|&a| sweep_ratio(&result.rows, a, 1))
        .collect();
    let mid = plus.len() / 2;
    let first_rise = plus[mid] - plus[0];
    let second_rise = plus[plus.len() - 1] - plus[mid];
    assert!(
        first_rise > second_rise,
        "nu=+1 growth did not saturate: {first_rise:.4} then {second_rise:.4}"
    );
    pass(
        9,
        start,
        &format!(
            "ordering held for {ordered}/15 alphas; nu=+1 rise {first_rise:.4} then {second_rise:.4}"
        ),
    );
}

#[test]
fn criterion_09_lag_sweep_ordering_reduced_scale() {
    let start = Instant::now();
    // reduced CI-scale sweep: 50 agents, 5 alphas, 3 replications; at this
    // sample size the per-alpha cells are noisy at small gain, so the
    // ordering is asserted in aggregate and per cell where the price
    // sensitivity has measurable effect (alpha >= 8)
    let params = LagSweepParams {
        alphas: vec![1.0, 4.0, 8.0, 11.0, 15.0],
        nus: vec![-1, 0, 1],
        replications: 3,
        agents_per_class: 25,
        ..Default::default()
    };
    let result = run_lag_sweep(&params, 109).unwrap();
    assert_eq!(result.rows.len(), 15);
    assert_eq!(result.degenerate_total, 0);
    assert!(result.rows.iter().all(|r| r.mean_phase_ratio > 1.0));

    let grid_mean = |nu: i8| -> f64 {
        params
            .alphas
            .iter()
            .map(|&a| sweep_ratio(&result.rows, a, nu))
            .sum::<f64>()
            / params.alphas.len() as f64
    };
    assert!(
        grid_mean(1) > grid_mean(0) && grid_mean(0) > grid_mean(-1),
        "aggregate ordering failed: {} / {} / {}",
        grid_mean(1),
        grid_mean(0),
        grid_mean(-1)
    );

    let mut ordered = 0;
    for &alpha in &params.alphas {
        let ok = sweep_ratio(&result.rows, alpha, 1) > sweep_ratio(&result.rows, alpha, 0)
            && sweep_ratio(&result.rows, alpha, 0) > sweep_ratio(&result.rows, alpha, -1);
        if ok {
            ordered += 1;
        }
        if alpha >= 8.0 {
            assert!(ok, "ordering failed at alpha = {alpha}: {:?}", result.rows);
        }
    }
    assert!(ordered >= 3, "ordering held for only {ordered} of 5 alphas");
    pass(
        9,
        start,
        &format!(
            "aggregate means {:.4} > {:.4} > {:.4}; per-alpha ordering {ordered}/5",
            grid_mean(1),
            grid_mean(0),
            grid_mean(-1)
        ),
    );
}

#[test]
fn criterion_10_multi_asset_conjecture_harness() {
    let start = Instant::now();
    let mut details = Vec::new();
    for &(l_lo, l_hi) in &[(-2.0, 2.0), (-5.0, 5.0)] {
        let params = MultiAssetMcParams {
            l_lo,
            l_hi,
            ..Default::default() // 3000 instances, M = 3
        };
        let result = run_multi_asset_mc(&params, 110).unwrap();
        assert_eq!(result.rows.len(), 3000);
        assert_eq!(
            result.oscillating, 0,
            "oscillation detector flagged instances for L in [{l_lo}, {l_hi}]"
        );
        details.push(format!(
            "L in [{l_lo},{l_hi}]: kinds {:?}",
            result.kind_counts
        ));
    }

    // binary instances reproduce the proven convergence result
    let binary = MultiAssetMcParams {
        num_assets: 2,
        instances: 300,
        l_lo: -5.0,
        l_hi: 5.0,
        ..Default::default()
    };
    let result = run_multi_asset_mc(&binary, 110).unwrap();
    let not_converged = result
        .rows
        .iter()
        .filter(|r| r.report.kind == RestPointKind::NotConverged)
        .count();
    assert_eq!(not_converged, 0);
    pass(
        10,
        start,
        &format!(
            "zero oscillations in 2 x 3000 instances; {}; M=2: 0/300 unconverged",
            details.join("; ")
        ),
    );
}

#[test]
fn criterion_11_analysis_oracles() {
    let start = Instant::now();
    // phase recovery within 1e-6 over whole-period windows
    let omega = std::f64::consts::TAU / 25_000.0;
    let dt = 0.5;
    let n = 150_000; // exactly 3 periods
    let mut worst = 0.0f64;
    for &injected in &[0.0, 0.1, 1.0, 2.5, 4.0] {
        let series: Vec<f64> = (0..n)
            .map(|k| 0.8 * (omega * k as f64 * dt - injected).sin() + 0.3)
            .collect();
        let r = dft_phase(&series, dt, omega).unwrap();
        worst = worst.max((r.lag() - injected).abs());
        assert!(
            (r.lag() - injected).abs() <= 1e-6,
            "lag {} vs injected {injected}",
            r.lag()
        );
    }

    // t-interval against a hand-computed value
    let (mean, hw) = mean_ci(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.95).unwrap();
    assert!((mean - 3.0).abs() <= 1e-12);
    assert!(
        (hw - 1.9632431614775607).abs() <= 1e-9,
        "halfwidth {hw} vs hand-computed 1.9632431614775607"
    );
    pass(
        11,
        start,
        &format!("max phase recovery error = {worst:.2e}; t-interval exact to 1e-9"),
    );
}
