//! Spectral phase-lag measurement and run diagnostics.
//!
//! Phase is measured by direct projection onto e^{-i omega t} over a whole
//! number of periods, so the driving tone sees no spectral leakage and no
//! window function is needed.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Amplitudes at or below this are treated as "no signal at omega".
pub const DEGENERATE_AMPLITUDE: f64 = 1e-12;

/// Single-frequency projection result.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseResult {
    /// Argument of the projection, in (-pi, pi]. A pure sin(omega t) measures
    /// -pi/2 under this convention; 0 is reported when the amplitude is 0.
    pub phase: f64,
    /// Amplitude of the tone (a pure A sin measures A).
    pub amplitude: f64,
    pub omega: f64,
}

impl PhaseResult {
    /// Lag behind the reference sin(omega t), wrapped to [0, 2*pi).
    pub fn lag(&self) -> f64 {
        (-std::f64::consts::FRAC_PI_2 - self.phase).rem_euclid(std::f64::consts::TAU)
    }

    /// Unwrapped phase magnitude pi/2 + lag, measured against sin(omega t).
    ///
    /// This is the quantity whose ratio across two series gives the phase
    /// ratio; it is at least pi/2, so the reference tone itself never makes
    /// the ratio degenerate.
    pub fn lag_phase(&self) -> f64 {
        std::f64::consts::FRAC_PI_2 + self.lag()
    }
}

/// Project a uniformly sampled series onto e^{-i omega t} at the single
/// frequency omega.
///
/// The series is truncated to the largest whole number of periods and its
/// mean over that stretch is removed before projection. Fails if even one
/// full period is not covered.
pub fn dft_phase(series: &[f64], dt: f64, omega: f64) -> Result<PhaseResult> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    if !omega.is_finite() || omega <= 0.0 {
        return Err(Error::invalid(format!(
            "omega must be positive, got {omega}"
        )));
    }
    let period = std::f64::consts::TAU / omega;
    let total = series.len() as f64 * dt;
    // tiny relative slack so an exact k-period window is not rounded down
    let whole_periods = (total / period * (1.0 + 1e-12)).floor();
    if whole_periods < 1.0 {
        return Err(Error::invalid(format!(
            "series covers {total} which is less than one period {period}"
        )));
    }
    let n = ((whole_periods * period / dt).round() as usize).min(series.len());
    let kept = &series[..n];
    let mean = kept.iter().sum::<f64>() / n as f64;

    let mut re = 0.0;
    let mut im = 0.0;
    let step = omega * dt;
    for (k, &y) in kept.iter().enumerate() {
        let (s, c) = (k as f64 * step).sin_cos();
        let v = y - mean;
        re += v * c;
        im -= v * s;
    }
    let amplitude = 2.0 * re.hypot(im) / n as f64;
    let phase = if amplitude <= DEGENERATE_AMPLITUDE {
        0.0
    } else {
        im.atan2(re)
    };
    Ok(PhaseResult {
        phase,
        amplitude,
        omega,
    })
}

/// Ratio of the unwrapped phases of two series at omega: how much further the
/// first series lags the reference tone than the second one does.
///
/// Both series must carry a measurable tone at omega.
pub fn phase_ratio(p_series: &[f64], x_series: &[f64], dt: f64, omega: f64) -> Result<f64> {
    if p_series.len() != x_series.len() {
        return Err(Error::invalid(format!(
            "series lengths differ: {} vs {}",
            p_series.len(),
            x_series.len()
        )));
    }
    let p = dft_phase(p_series, dt, omega)?;
    let x = dft_phase(x_series, dt, omega)?;
    if p.amplitude <= DEGENERATE_AMPLITUDE {
        return Err(Error::DegenerateMeasurement(format!(
            "price series has no content at omega = {omega}"
        )));
    }
    if x.amplitude <= DEGENERATE_AMPLITUDE {
        return Err(Error::DegenerateMeasurement(format!(
            "information series has no content at omega = {omega}"
        )));
    }
    Ok(p.lag_phase() / x.lag_phase())
}

/// Largest single counter-directional step, measured against the series' net
/// direction. Zero for a monotone series.
pub fn monotone_violation(series: &[f64]) -> f64 {
    if series.len() < 2 {
        return 0.0;
    }
    let dir = if series[series.len() - 1] >= series[0] {
        1.0
    } else {
        -1.0
    };
    series
        .windows(2)
        .map(|w| (-dir * (w[1] - w[0])).max(0.0))
        .fold(0.0, f64::max)
}

/// Count direction reversals whose peak-to-trough swing exceeds `threshold`.
///
/// Swings smaller than the threshold (integrator chatter) are ignored.
pub fn count_reversals(series: &[f64], threshold: f64) -> usize {
    let mut reversals = 0usize;
    let mut dir = 0i8;
    let mut extreme = match series.first() {
        Some(&v) => v,
        None => return 0,
    };
    for &v in &series[1..] {
        match dir {
            0 => {
                if (v - extreme).abs() > threshold {
                    dir = if v > extreme { 1 } else { -1 };
                    extreme = v;
                }
            }
            1 => {
                if v > extreme {
                    extreme = v;
                } else if extreme - v > threshold {
                    reversals += 1;
                    dir = -1;
                    extreme = v;
                }
            }
            _ => {
                if v < extreme {
                    extreme = v;
                } else if v - extreme > threshold {
                    reversals += 1;
                    dir = 1;
                    extreme = v;
                }
            }
        }
    }
    reversals
}

/// Student-t confidence interval on the mean: (mean, halfwidth).
pub fn mean_ci(samples: &[f64], confidence: f64) -> Result<(f64, f64)> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::invalid(format!(
            "confidence interval needs at least 2 samples, got {n}"
        )));
    }
    if !(0.0..1.0).contains(&confidence) {
        return Err(Error::invalid(format!(
            "confidence must lie in (0, 1), got {confidence}"
        )));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let var = samples.iter().map(|&v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let t = StudentsT::new(0.0, 1.0, nf - 1.0)
        .map_err(|e| Error::invalid(format!("t distribution: {e}")))?
        .inverse_cdf(0.5 + confidence / 2.0);
    Ok((mean, t * var.sqrt() / nf.sqrt()))
}

/// One cell of the gain/price-sensitivity sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub alpha: f64,
    pub nu: i8,
    pub mean_phase_ratio: f64,
    pub ci_halfwidth: f64,
    pub n_reps: usize,
    /// Replications excluded because a phase measurement was degenerate.
    pub degenerate_reps: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn sampled(f: impl Fn(f64) -> f64, dt: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| f(k as f64 * dt)).collect()
    }

    #[test]
    fn pure_sine_measures_minus_half_pi() {
        let omega = TAU / 100.0;
        let series = sampled(|t| (omega * t).sin(), 0.1, 3000); // 3 periods
        let r = dft_phase(&series, 0.1, omega).unwrap();
        assert_abs_diff_eq!(r.phase, -FRAC_PI_2, epsilon = 1e-9);
        assert_abs_diff_eq!(r.amplitude, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.lag(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.lag_phase(), FRAC_PI_2, epsilon = 1e-9);
    }

    #[test]
    fn shift_theorem() {
        let omega = TAU / 50.0;
        let phi0 = 0.3;
        let base = sampled(|t| (omega * t).sin(), 0.05, 5000); // 5 periods
        let shifted = sampled(|t| (omega * t - phi0).sin(), 0.05, 5000);
        let a = dft_phase(&base, 0.05, omega).unwrap();
        let b = dft_phase(&shifted, 0.05, omega).unwrap();
        assert_abs_diff_eq!(a.phase - b.phase, phi0, epsilon = 1e-9);
        assert_abs_diff_eq!(b.lag(), phi0, epsilon = 1e-9);
    }

    #[test]
    fn constant_series_has_zero_amplitude() {
        let series = vec![3.25; 1000];
        let r = dft_phase(&series, 1.0, TAU / 100.0).unwrap();
        assert_eq!(r.amplitude, 0.0);
        assert_eq!(r.phase, 0.0);
    }

    #[test]
    fn offset_invariance_and_amplitude_linearity() {
        let omega = TAU / 80.0;
        let s1 = sampled(|t| 0.7 * (omega * t - 0.9).sin(), 0.1, 2400);
        let s2 = sampled(|t| 5.0 + 0.7 * (omega * t - 0.9).sin(), 0.1, 2400);
        let s3 = sampled(|t| 2.1 * (omega * t - 0.9).sin(), 0.1, 2400);
        let r1 = dft_phase(&s1, 0.1, omega).unwrap();
        let r2 = dft_phase(&s2, 0.1, omega).unwrap();
        let r3 = dft_phase(&s3, 0.1, omega).unwrap();
        assert_abs_diff_eq!(r1.phase, r2.phase, epsilon = 1e-9);
        assert_abs_diff_eq!(r1.amplitude, r2.amplitude, epsilon = 1e-9);
        assert_abs_diff_eq!(r3.amplitude, 3.0 * r1.amplitude, epsilon = 1e-9);
    }

    #[test]
    fn truncation_to_whole_periods() {
        let omega = TAU / 100.0;
        // 2.6 periods recorded: only 2 are used, so a clean tone still
        // projects cleanly
        let series = sampled(|t| (omega * t - 0.4).sin(), 0.1, 2600);
        let r = dft_phase(&series, 0.1, omega).unwrap();
        assert_abs_diff_eq!(r.lag(), 0.4, epsilon = 1e-9);

        // less than one period is an error
        let short = sampled(|t| (omega * t).sin(), 0.1, 900);
        assert!(dft_phase(&short, 0.1, omega).is_err());
    }

    #[test]
    fn phase_ratio_identical_series_is_one() {
        let omega = TAU / 60.0;
        let series = sampled(|t| (omega * t - 0.7).sin(), 0.1, 1800);
        assert_eq!(phase_ratio(&series, &series, 0.1, omega).unwrap(), 1.0);
    }

    #[test]
    fn phase_ratio_extra_quarter_period() {
        let omega = TAU / 60.0;
        let lag_x = 0.5;
        let x = sampled(|t| (omega * t - lag_x).sin(), 0.01, 30_000);
        let p = sampled(|t| (omega * t - lag_x - FRAC_PI_2).sin(), 0.01, 30_000);
        let phi_x = dft_phase(&x, 0.01, omega).unwrap().lag_phase();
        let ratio = phase_ratio(&p, &x, 0.01, omega).unwrap();
        assert_abs_diff_eq!(ratio, (phi_x + FRAC_PI_2) / phi_x, epsilon = 1e-9);
        assert_abs_diff_eq!(phi_x, FRAC_PI_2 + lag_x, epsilon = 1e-9);
    }

    #[test]
    fn phase_ratio_rejects_degenerate_series() {
        let omega = TAU / 60.0;
        let x = sampled(|t| (omega * t).sin(), 0.1, 1800);
        let flat = vec![0.4; 1800];
        assert!(matches!(
            phase_ratio(&flat, &x, 0.1, omega),
            Err(Error::DegenerateMeasurement(_))
        ));
        assert!(matches!(
            phase_ratio(&x, &flat, 0.1, omega),
            Err(Error::DegenerateMeasurement(_))
        ));
    }

    #[test]
    fn lags_are_wrapped_to_one_turn() {
        let omega = TAU / 40.0;
        for lag in [0.0, 1.0, PI, 5.0, 6.2] {
            let s = sampled(|t| (omega * t - lag).sin(), 0.01, 20_000);
            let r = dft_phase(&s, 0.01, omega).unwrap();
            assert!((0.0..TAU).contains(&r.lag()));
            assert_abs_diff_eq!(r.lag(), lag.rem_euclid(TAU), epsilon = 1e-8);
        }
    }

    #[test]
    fn monotone_violation_cases() {
        assert_eq!(monotone_violation(&[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(monotone_violation(&[3.0, 2.0, 1.0]), 0.0);
        let dip = [0.0, 0.5, 0.5 - 1e-4, 1.0];
        assert_abs_diff_eq!(monotone_violation(&dip), 1e-4, epsilon = 1e-15);
        assert_eq!(monotone_violation(&[1.0, 1.0, 1.0]), 0.0);
        assert_eq!(monotone_violation(&[]), 0.0);
    }

    #[test]
    fn reversal_counting_filters_chatter() {
        // triangle wave with a small sawtooth riding on it: the sawtooth
        // flips direction every sample but its swings stay below 0.1
        let mut series = Vec::new();
        for cycle in 0..3 {
            for k in 0..100 {
                let base = if cycle % 2 == 0 {
                    k as f64
                } else {
                    100.0 - k as f64
                };
                series.push(base * 0.01 + if k % 2 == 0 { 0.02 } else { -0.02 });
            }
        }
        assert_eq!(count_reversals(&series, 0.1), 2);
        // with a threshold below the sawtooth everything counts
        assert!(count_reversals(&series, 1e-9) > 100);
        assert_eq!(count_reversals(&[0.0; 50], 1e-9), 0);
    }

    #[test]
    fn t_interval_matches_hand_computation() {
        let (mean, hw) = mean_ci(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.95).unwrap();
        assert_abs_diff_eq!(mean, 3.0, epsilon = 1e-12);
        // t_{0.975, 4} = 2.7764451, s = 1.5811388, hw = t * s / sqrt(5)
        assert_abs_diff_eq!(hw, 1.9632431614775607, epsilon = 1e-9);

        let (mean, hw) = mean_ci(&[2.5, 2.5, 2.5], 0.95).unwrap();
        assert_eq!(mean, 2.5);
        assert_eq!(hw, 0.0);

        let (mean, _) = mean_ci(&[0.0, 2.0], 0.9).unwrap();
        assert_eq!(mean, 1.0);

        assert!(mean_ci(&[1.0], 0.95).is_err());
        assert!(mean_ci(&[1.0, 2.0], 1.5).is_err());
    }
}
