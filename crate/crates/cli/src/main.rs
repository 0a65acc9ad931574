//! Command-line front end: experiment runners, single-run simulation, and
//! the validation suite. Every subcommand is a thin shell over the library;
//! identical configs and seeds give identical artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lmsr_market::error::Error;
use lmsr_market::experiments::{
    run_constant_info_suite, run_interval_tracking, run_lag_sweep, run_lorenz_demo,
    run_multi_asset_mc, run_simulate, ConstantInfoParams, ExperimentConfig, ExperimentKind,
    IntervalTrackingParams, LagSweepParams, LorenzDemoParams, MultiAssetMcParams, SimulateParams,
    SCHEMA_VERSION,
};
use lmsr_market::export::{
    plot_script, write_constant_info_csv, write_lorenz_csv, write_mc_csv, write_sweep_csv,
    write_trajectory_csv, PlotKind, RunManifest,
};
use lmsr_market::validation::run_invariant_checks;

#[derive(Parser)]
#[command(
    name = "lmsr-market",
    version,
    about = "Continuous-time LMSR option-market simulator and experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (JSON). Defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV tables, manifests, and plot scripts.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,

    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: machine parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Suppress the progress summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single configured market simulation.
    Simulate,
    /// Market tracking of two nearby Lorenz solutions.
    Lorenz,
    /// Random interval agents classifying a sinusoid.
    Track,
    /// The full gain / price-sensitivity phase-ratio sweep.
    LagSweep,
    /// Constant-information M-asset Monte-Carlo harness.
    MultiMc,
    /// Invariant suite plus (with --config) the constant-information suite.
    Validate,
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidInput(_) => 2,
        Error::IntegrationFault { .. } => 3,
        Error::DegenerateMeasurement(_) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // all parallelism lives below this boundary
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("{{\"error\":\"thread pool: {e}\",\"exit_code\":1}}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let code = exit_code_for(&e);
            let record = serde_json::json!({ "error": e.to_string(), "exit_code": code });
            eprintln!("{record}");
            ExitCode::from(code)
        }
    }
}

fn load_config(
    cli: &Cli,
    expect: &str,
    default_kind: ExperimentKind,
) -> Result<ExperimentConfig, Error> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            experiment: default_kind,
        },
    };
    if config.kind_name() != expect {
        return Err(Error::config(format!(
            "config kind '{}' does not match the '{expect}' subcommand",
            config.kind_name()
        )));
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

struct OutDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    fn create(dir: &Path) -> Result<Self, Error> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::config(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> Result<(), Error>,
    ) -> Result<(), Error> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        f(&mut w)?;
        w.flush()?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<(), Error> {
        self.write(name, |w| {
            w.write_all(text.as_bytes())?;
            Ok(())
        })
    }

    fn finish_manifest(&mut self, mut manifest: RunManifest) -> Result<(), Error> {
        manifest.outputs = self.written.clone();
        manifest.write(&self.dir.join("manifest.json"))?;
        self.written.push("manifest.json".to_string());
        Ok(())
    }
}

fn run(cli: &Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Simulate => cmd_simulate(cli),
        Command::Lorenz => cmd_lorenz(cli),
        Command::Track => cmd_track(cli),
        Command::LagSweep => cmd_lag_sweep(cli),
        Command::MultiMc => cmd_multi_mc(cli),
        Command::Validate => cmd_validate(cli),
    }
}

fn say(cli: &Cli, msg: &str) {
    if !cli.quiet {
        println!("{msg}");
    }
}

fn cmd_simulate(cli: &Cli) -> Result<u8, Error> {
    let config = load_config(
        cli,
        "simulate",
        ExperimentKind::Simulate(SimulateParams::default()),
    )?;
    let ExperimentKind::Simulate(params) = &config.experiment else {
        unreachable!()
    };
    let result = run_simulate(params)?;

    let mut out = OutDir::create(&cli.out)?;
    out.write("trajectory.csv", |w| {
        write_trajectory_csv(&result.trajectory, w)
    })?;
    out.write_text(
        "trajectory.gp",
        &plot_script(PlotKind::Trajectory, &["trajectory.csv"]),
    )?;
    out.finish_manifest(RunManifest::new(
        "simulate",
        config.seed,
        serde_json::to_value(&config)?,
    ))?;
    say(
        cli,
        &format!(
            "simulate: {} samples over t = [0, {}] -> {}",
            result.trajectory.len(),
            params.t_end,
            cli.out.display()
        ),
    );
    Ok(0)
}

fn cmd_lorenz(cli: &Cli) -> Result<u8, Error> {
    let config = load_config(
        cli,
        "lorenz_demo",
        ExperimentKind::LorenzDemo(LorenzDemoParams::default()),
    )?;
    let ExperimentKind::LorenzDemo(params) = &config.experiment else {
        unreachable!()
    };
    let result = run_lorenz_demo(params)?;

    let mut out = OutDir::create(&cli.out)?;
    out.write("market_a.csv", |w| write_trajectory_csv(&result.runs[0], w))?;
    out.write("market_b.csv", |w| write_trajectory_csv(&result.runs[1], w))?;
    out.write("lorenz_a.csv", |w| write_lorenz_csv(&result.traces[0], w))?;
    out.write("lorenz_b.csv", |w| write_lorenz_csv(&result.traces[1], w))?;
    out.write_text(
        "lorenz_demo.gp",
        &plot_script(
            PlotKind::LorenzDemo,
            &[
                "market_a.csv",
                "market_b.csv",
                "lorenz_a.csv",
                "lorenz_b.csv",
            ],
        ),
    )?;
    out.finish_manifest(RunManifest::new(
        "lorenz_demo",
        config.seed,
        serde_json::to_value(&config)?,
    ))?;

    let gap = result.runs[0]
        .binary_prices()
        .iter()
        .zip(result.runs[1].binary_prices())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    say(
        cli,
        &format!(
            "lorenz: max price separation between runs = {gap:.4} -> {}",
            cli.out.display()
        ),
    );
    Ok(0)
}

fn cmd_track(cli: &Cli) -> Result<u8, Error> {
    let config = load_config(
        cli,
        "interval_tracking",
        ExperimentKind::IntervalTracking(IntervalTrackingParams::default()),
    )?;
    let ExperimentKind::IntervalTracking(params) = &config.experiment else {
        unreachable!()
    };
    let result = run_interval_tracking(params, config.seed)?;

    let mut out = OutDir::create(&cli.out)?;
    out.write("trajectory.csv", |w| {
        write_trajectory_csv(&result.trajectory, w)
    })?;
    out.write("agents.json", |w| {
        serde_json::to_writer_pretty(w, &result.agents)?;
        Ok(())
    })?;
    out.write_text(
        "interval_tracking.gp",
        &plot_script(PlotKind::IntervalTracking, &["trajectory.csv"]),
    )?;
    out.finish_manifest(RunManifest::new(
        "interval_tracking",
        config.seed,
        serde_json::to_value(&config)?,
    ))?;
    say(
        cli,
        &format!(
            "track: {} agents, {} samples -> {}",
            result.agents.len(),
            result.trajectory.len(),
            cli.out.display()
        ),
    );
    Ok(0)
}

fn cmd_lag_sweep(cli: &Cli) -> Result<u8, Error> {
    let config = load_config(
        cli,
        "lag_sweep",
        ExperimentKind::LagSweep(LagSweepParams::default()),
    )?;
    let ExperimentKind::LagSweep(params) = &config.experiment else {
        unreachable!()
    };
    let result = run_lag_sweep(params, config.seed)?;

    let mut out = OutDir::create(&cli.out)?;
    out.write("sweep.csv", |w| write_sweep_csv(&result.rows, w))?;
    out.write_text(
        "lag_sweep.gp",
        &plot_script(PlotKind::LagSweep, &["sweep.csv"]),
    )?;
    let mut manifest = RunManifest::new("lag_sweep", config.seed, serde_json::to_value(&config)?);
    for row in &result.rows {
        if row.degenerate_reps > 0 {
            manifest.warnings.push(format!(
                "cell alpha={} nu={}: {} degenerate replication(s) excluded",
                row.alpha, row.nu, row.degenerate_reps
            ));
        }
    }
    out.finish_manifest(manifest)?;
    say(
        cli,
        &format!(
            "lag-sweep: {} cells, {} degenerate measurements -> {}",
            result.rows.len(),
            result.degenerate_total,
            cli.out.display()
        ),
    );
    Ok(0)
}

fn cmd_multi_mc(cli: &Cli) -> Result<u8, Error> {
    let config = load_config(
        cli,
        "multi_asset_mc",
        ExperimentKind::MultiAssetMc(MultiAssetMcParams::default()),
    )?;
    let ExperimentKind::MultiAssetMc(params) = &config.experiment else {
        unreachable!()
    };
    let result = run_multi_asset_mc(params, config.seed)?;

    let mut out = OutDir::create(&cli.out)?;
    out.write("instances.csv", |w| {
        write_mc_csv(&result.rows, params.num_assets, w)
    })?;
    out.write_text(
        "multi_asset_mc.gp",
        &plot_script(PlotKind::MultiAssetMc, &["instances.csv"]),
    )?;
    let mut manifest = RunManifest::new(
        "multi_asset_mc",
        config.seed,
        serde_json::to_value(&config)?,
    );
    manifest.summary = Some(serde_json::json!({
        "kind_counts": result.kind_counts,
        "oscillating": result.oscillating,
    }));
    out.finish_manifest(manifest)?;
    say(
        cli,
        &format!(
            "multi-mc: {} instances, kinds {:?}, oscillating = {} -> {}",
            result.rows.len(),
            result.kind_counts,
            result.oscillating,
            cli.out.display()
        ),
    );
    Ok(0)
}

fn cmd_validate(cli: &Cli) -> Result<u8, Error> {
    let config = load_config(
        cli,
        "constant_info_suite",
        // reduced instance count by default; configs can run the full suite
        ExperimentKind::ConstantInfoSuite(ConstantInfoParams {
            instances: 100,
            ..Default::default()
        }),
    )?;
    let ExperimentKind::ConstantInfoSuite(params) = &config.experiment else {
        unreachable!()
    };

    let mut rows = Vec::new();
    for check in run_invariant_checks(config.seed) {
        rows.push((check.name.to_string(), check.passed, check.detail));
    }

    let suite = run_constant_info_suite(params, config.seed)?;
    rows.push((
        "suite_convergence".to_string(),
        suite.not_converged == 0,
        format!(
            "{} instances, kinds {:?}, not_converged = {}",
            params.instances, suite.kind_counts, suite.not_converged
        ),
    ));
    rows.push((
        "suite_monotonicity".to_string(),
        suite.violations_within_bound,
        "per-instance monotone violation within the chatter bound".to_string(),
    ));

    let mut out = OutDir::create(&cli.out)?;
    out.write("constant_info.csv", |w| {
        write_constant_info_csv(&suite.rows, w)
    })?;
    out.finish_manifest(RunManifest::new(
        "constant_info_suite",
        config.seed,
        serde_json::to_value(&config)?,
    ))?;

    let mut all_passed = true;
    if !cli.quiet {
        println!("{:<28} {:<6} detail", "check", "status");
    }
    for (name, passed, detail) in &rows {
        all_passed &= passed;
        if !cli.quiet {
            println!(
                "{name:<28} {:<6} {detail}",
                if *passed { "PASS" } else { "FAIL" }
            );
        }
    }
    Ok(if all_passed { 0 } else { 1 })
}
