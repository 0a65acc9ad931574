//! Plot-ready CSV writers, the run manifest, and gnuplot script emission.
//!
//! Numbers are written with 17 significant digits so every f64 round-trips.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::SweepSummary;
use crate::dynamics::{RestPointReport, Trajectory};
use crate::error::Result;
use crate::signals::LorenzTrace;

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Trajectory CSV: t, p_0..p_{M-1}, then N (binary) or n_0..n_{M-1} when
/// drifts were recorded, then x_0..x_{D-1} when the signal was recorded.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    let m = traj.num_assets();
    let mut header = vec!["t".to_string()];
    for j in 0..m {
        header.push(format!("p_{j}"));
    }
    let has_drift = traj.drift_row(0).is_some();
    if has_drift {
        if m == 2 {
            header.push("N".to_string());
        } else {
            for j in 0..m {
                header.push(format!("n_{j}"));
            }
        }
    }
    for d in 0..traj.signal_dim() {
        header.push(format!("x_{d}"));
    }
    writeln!(w, "{}", header.join(","))?;

    for k in 0..traj.len() {
        let mut row = vec![fmt(traj.times()[k])];
        row.extend(traj.price_row(k).iter().map(|&v| fmt(v)));
        if has_drift {
            let d = traj.drift_row(k).unwrap();
            if m == 2 {
                row.push((d[1] - d[0]).to_string());
            } else {
                row.extend(d.iter().map(|c| c.to_string()));
            }
        }
        if let Some(x) = traj.signal_row(k) {
            row.extend(x.iter().map(|&v| fmt(v)));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Lorenz trace CSV: t, x, y, z.
pub fn write_lorenz_csv<W: Write>(trace: &LorenzTrace, mut w: W) -> Result<()> {
    writeln!(w, "t,x,y,z")?;
    for (k, s) in trace.samples().iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{}",
            fmt(k as f64 * trace.step()),
            fmt(s[0]),
            fmt(s[1]),
            fmt(s[2])
        )?;
    }
    Ok(())
}

/// Sweep table CSV: alpha, nu, mean_ratio, ci_halfwidth, n_reps.
pub fn write_sweep_csv<W: Write>(rows: &[SweepSummary], mut w: W) -> Result<()> {
    writeln!(w, "alpha,nu,mean_ratio,ci_halfwidth,n_reps")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt(r.alpha),
            r.nu,
            fmt(r.mean_phase_ratio),
            fmt(r.ci_halfwidth),
            r.n_reps
        )?;
    }
    Ok(())
}

/// One classified instance of the Monte-Carlo conjecture harness.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct McInstanceRow {
    pub instance: usize,
    pub class_sizes: Vec<usize>,
    pub report: RestPointReport,
    pub oscillating: bool,
}

/// Conjecture-harness CSV: instance, class sizes, rest-point kind, p_star,
/// t_settle, oscillation flag.
pub fn write_mc_csv<W: Write>(rows: &[McInstanceRow], num_assets: usize, mut w: W) -> Result<()> {
    let mut header = vec!["instance".to_string()];
    for j in 0..num_assets {
        header.push(format!("c_{j}"));
    }
    header.push("kind".to_string());
    for j in 0..num_assets {
        header.push(format!("p_star_{j}"));
    }
    header.push("t_settle".to_string());
    header.push("oscillating".to_string());
    writeln!(w, "{}", header.join(","))?;

    for r in rows {
        let mut row = vec![r.instance.to_string()];
        row.extend(r.class_sizes.iter().map(|c| c.to_string()));
        row.push(match &r.report.kind {
            crate::dynamics::RestPointKind::BoundaryAsymptote { asset } => {
                format!("boundary_asymptote_{asset}")
            }
            other => other.name().to_string(),
        });
        match &r.report.p_star {
            Some(p) => row.extend(p.as_slice().iter().map(|&v| fmt(v))),
            None => row.extend(std::iter::repeat_n(String::new(), num_assets)),
        }
        row.push(r.report.t_settle.map(fmt).unwrap_or_default());
        row.push((r.oscillating as u8).to_string());
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Constant-information suite CSV: instance, class sizes, classification,
/// and the monotonicity diagnostic.
pub fn write_constant_info_csv<W: Write>(
    rows: &[crate::experiments::ConstantInfoRow],
    mut w: W,
) -> Result<()> {
    writeln!(
        w,
        "instance,c_0,c_1,kind,p_star,t_settle,monotone_violation,violation_bound"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.instance,
            r.class_sizes[0],
            r.class_sizes[1],
            r.report.kind.name(),
            r.report
                .p_star
                .as_ref()
                .map(|p| fmt(p.binary_price()))
                .unwrap_or_default(),
            r.report.t_settle.map(fmt).unwrap_or_default(),
            fmt(r.monotone_violation),
            fmt(r.violation_bound),
        )?;
    }
    Ok(())
}

/// Fixed description of the measurement conventions, echoed into every
/// manifest so runs stay comparable.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Conventions {
    pub phase_reference: String,
    pub phase_ratio: String,
    pub oscillation_detector: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            phase_reference: "phases are lags behind sin(omega*t), wrapped to [0, 2pi); \
                              a series' unwrapped phase is pi/2 + lag"
                .to_string(),
            phase_ratio: "ratio of unwrapped phases (pi/2 + lag_p) / (pi/2 + lag_x)".to_string(),
            oscillation_detector: "after a 10% burn-in, a coordinate oscillates if it has more \
                                   than 2 direction reversals whose swing exceeds \
                                   max(10*convergence_tol, 2*chatter_quantum)"
                .to_string(),
        }
    }
}

/// Everything needed to reproduce a run: the resolved config, the seed, and
/// the library version, plus the convention notes and produced files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub kind: String,
    pub seed: u64,
    pub library_version: String,
    pub config: serde_json::Value,
    pub conventions: Conventions,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Headline numbers for the run (kind counts, flags), when meaningful.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<serde_json::Value>,
}

impl RunManifest {
    pub fn new(kind: &str, seed: u64, config: serde_json::Value) -> Self {
        Self {
            schema_version: crate::experiments::SCHEMA_VERSION,
            kind: kind.to_string(),
            seed,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            conventions: Conventions::default(),
            outputs: Vec::new(),
            warnings: Vec::new(),
            summary: None,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }
}

/// Figure layouts the CLI can emit scripts for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// Overlay of x_1(t) and the two market prices.
    LorenzDemo,
    /// Information signal against the tracking market price.
    IntervalTracking,
    /// Phase ratio vs gain with error bars and a first-five-points line fit.
    LagSweep,
    /// Rest-point kind counts.
    MultiAssetMc,
    /// Plain price-vs-time plot.
    Trajectory,
}

impl PlotKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lorenz_demo" => Some(Self::LorenzDemo),
            "interval_tracking" => Some(Self::IntervalTracking),
            "lag_sweep" => Some(Self::LagSweep),
            "multi_asset_mc" => Some(Self::MultiAssetMc),
            "trajectory" => Some(Self::Trajectory),
            _ => None,
        }
    }
}

/// Emit a gnuplot script that plots the named CSVs. The script is plain text
/// data for an external tool; nothing here executes it.
pub fn plot_script(kind: PlotKind, csv_files: &[&str]) -> String {
    let mut s = String::new();
    s.push_str("# gnuplot script; run as: gnuplot <this file>\n");
    s.push_str("set datafile separator ','\n");
    s.push_str("set key outside\n");
    match kind {
        PlotKind::LorenzDemo => {
            s.push_str("set terminal pngcairo size 1200,800\nset output 'lorenz_demo.png'\n");
            s.push_str("set multiplot layout 2,1\n");
            s.push_str("set ylabel 'x_1(t)'\n");
            if csv_files.len() >= 4 {
                s.push_str(&format!(
                    "plot '{}' using 1:2 with lines title 'x_1 (ic A)', \\\n     '{}' using 1:2 with lines title 'x_1 (ic B)'\n",
                    csv_files[2], csv_files[3]
                ));
            } else {
                s.push_str("plot NaN title 'no data'\n");
            }
            s.push_str("set ylabel 'p(t)'\nset yrange [0:1]\nset xlabel 't'\n");
            if csv_files.len() >= 2 {
                s.push_str(&format!(
                    "plot '{}' using 1:3 with lines title 'p (ic A)', \\\n     '{}' using 1:3 with lines title 'p (ic B)'\n",
                    csv_files[0], csv_files[1]
                ));
            } else {
                s.push_str("plot NaN title 'no data'\n");
            }
            s.push_str("unset multiplot\n");
        }
        PlotKind::IntervalTracking => {
            s.push_str("set terminal pngcairo size 1200,500\nset output 'interval_tracking.png'\n");
            s.push_str("set xlabel 't'\nset yrange [-1.1:1.1]\n");
            if let Some(f) = csv_files.first() {
                s.push_str(&format!(
                    "plot '{f}' using 1:3 with lines title 'p(t)', \\\n     '{f}' using 1:5 with lines title 'x(t)'\n"
                ));
            } else {
                s.push_str("plot NaN title 'no data'\n");
            }
        }
        PlotKind::LagSweep => {
            s.push_str("set terminal pngcairo size 1000,700\nset output 'lag_sweep.png'\n");
            s.push_str("set xlabel 'input gain alpha'\nset ylabel 'phase ratio'\n");
            if let Some(f) = csv_files.first() {
                // one line-fit through the first five points of each nu curve
                s.push_str(&format!(
                    "f1(x) = a1*x + b1\nfit [1:5] f1(x) '{f}' using (column(2)==1 ? $1 : NaN):3 via a1,b1\n"
                ));
                s.push_str(&format!(
                    "f0(x) = a0*x + b0\nfit [1:5] f0(x) '{f}' using (column(2)==0 ? $1 : NaN):3 via a0,b0\n"
                ));
                s.push_str(&format!(
                    "fm(x) = am*x + bm\nfit [1:5] fm(x) '{f}' using (column(2)==-1 ? $1 : NaN):3 via am,bm\n"
                ));
                s.push_str(&format!(
                    "plot '{f}' using (column(2)==1 ? $1 : NaN):3:4 with yerrorlines title 'nu = +1', \\\n     '{f}' using (column(2)==0 ? $1 : NaN):3:4 with yerrorlines title 'nu = 0', \\\n     '{f}' using (column(2)==-1 ? $1 : NaN):3:4 with yerrorlines title 'nu = -1', \\\n     f1(x) dashtype 2 title 'fit (first 5, nu=+1)', \\\n     f0(x) dashtype 2 title 'fit (first 5, nu=0)', \\\n     fm(x) dashtype 2 title 'fit (first 5, nu=-1)'\n"
                ));
            } else {
                s.push_str("plot NaN title 'no data'\n");
            }
        }
        PlotKind::MultiAssetMc => {
            s.push_str("set terminal pngcairo size 900,600\nset output 'multi_asset_mc.png'\n");
            s.push_str("set style data histogram\nset style fill solid 0.7\n");
            s.push_str("set ylabel 'instances'\nset xlabel 'rest-point kind'\n");
            if let Some(f) = csv_files.first() {
                s.push_str("# pre-aggregate kind counts with any csv tool, or use smooth freq:\n");
                s.push_str(&format!(
                    "plot '{f}' using (0):(1) smooth freq with boxes notitle\n"
                ));
            } else {
                s.push_str("plot NaN title 'no data'\n");
            }
        }
        PlotKind::Trajectory => {
            s.push_str("set terminal pngcairo size 1000,500\nset output 'trajectory.png'\n");
            s.push_str("set xlabel 't'\nset ylabel 'p'\nset yrange [0:1]\n");
            if let Some(f) = csv_files.first() {
                s.push_str(&format!(
                    "plot '{f}' using 1:2 with lines title 'p_0', '{f}' using 1:3 with lines title 'p_1'\n"
                ));
            } else {
                s.push_str("plot NaN title 'no data'\n");
            }
        }
    }
    s
}
