use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use beamfd::config::{self, Config, PRESET_NAMES};
use beamfd::diagnostics::monitored_run;
use beamfd::study::run_study;
use beamfd::{run, Error, ErrorCategory, KernelTables, Result};

#[derive(Parser)]
#[command(name = "beamfd", version, about = "Viscoelastic beam solver with memory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write the final solution and the time series.
    Solve(Common),
    /// Run the convergence ladder of the config's study section.
    Study(Common),
    /// Long-horizon run with the energy monitor; exits 3 on FAIL.
    Stability(Common),
    /// Dump the quadrature weights and kernel tail on the step grid.
    Weights(Common),
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct Common {
    /// JSON config file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset name (see `beamfd presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Dotted-path override such as `kernel.sigma=2` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Directory for output files; without it results go to stdout.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<(Config, Value)> {
        let mut value = match (&self.config, &self.preset) {
            (Some(path), _) => {
                let text = fs::read_to_string(path)?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
            (None, Some(name)) => config::preset(name).ok_or_else(|| {
                Error::Config(format!(
                    "unknown preset `{name}`; available: {}",
                    PRESET_NAMES.join(", ")
                ))
            })?,
            (None, None) => {
                return Err(Error::Config("pass --config PATH or --preset NAME".into()))
            }
        };
        for o in &self.overrides {
            config::apply_override(&mut value, o)?;
        }
        let cfg = Config::from_value(value)?;
        // Echo the config with defaults filled in.
        let echo = cfg.to_value();
        Ok((cfg, echo))
    }

    fn out_file(&self, name: &str) -> Result<Option<BufWriter<File>>> {
        match &self.out_dir {
            None => Ok(None),
            Some(dir) => {
                fs::create_dir_all(dir)?;
                Ok(Some(BufWriter::new(File::create(dir.join(name))?)))
            }
        }
    }
}

fn warn_about(cfg: &Config) -> Result<()> {
    for w in cfg.problem()?.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn solve(args: &Common) -> Result<()> {
    let (cfg, _) = args.load()?;
    warn_about(&cfg)?;
    let spec = cfg.problem()?;
    let (state, series) = run(&spec, cfg.grid()?, cfg.time.steps, &cfg.solver())?;
    match (args.out_file("solution.csv")?, args.out_file("timeseries.csv")?) {
        (Some(mut sol), Some(mut ts)) => {
            state.write_solution_csv(&mut sol)?;
            series.write_csv(&mut ts)?;
            sol.flush()?;
            ts.flush()?;
            let dir = args.out_dir.as_deref().unwrap_or(Path::new("."));
            println!(
                "wrote {} and {}",
                dir.join("solution.csv").display(),
                dir.join("timeseries.csv").display()
            );
        }
        _ => state.write_solution_csv(io::stdout().lock())?,
    }
    Ok(())
}

fn study(args: &Common) -> Result<()> {
    let (cfg, echo) = args.load()?;
    warn_about(&cfg)?;
    let report = run_study(&cfg.study_spec()?, echo)?;
    report.write_csv(io::stdout().lock())?;
    if let Some(mut f) = args.out_file("report.csv")? {
        report.write_csv(&mut f)?;
        f.flush()?;
    }
    if let Some(mut f) = args.out_file("report.json")? {
        report.write_json(&mut f)?;
        f.flush()?;
    }
    for cell in &report.cells {
        if let Some(msg) = &cell.failure {
            eprintln!("warning: cell {} failed: {msg}", cell.label);
        }
    }
    Ok(())
}

/// Returns whether both the monitor and the late-growth check passed.
fn stability(args: &Common) -> Result<bool> {
    let (cfg, _) = args.load()?;
    warn_about(&cfg)?;
    let spec = cfg.problem()?;
    spec.validate()?;
    let n = cfg.time.steps;
    let tables = Arc::new(KernelTables::new(spec.kernel, spec.horizon / n as f64, n)?);
    let st = &cfg.stability;
    let (report, series) = monitored_run(
        &spec,
        cfg.grid()?,
        n,
        &cfg.solver(),
        tables,
        st.safety,
        st.tail_fraction,
    )?;
    let tail_ok = report.tail_excess <= st.tail_tolerance;
    let mut out = serde_json::to_value(&report)?;
    out["tail_tolerance"] = json!(st.tail_tolerance);
    out["tail_ok"] = json!(tail_ok);
    println!("{}", serde_json::to_string_pretty(&out)?);
    if let Some(mut f) = args.out_file("stability.json")? {
        serde_json::to_writer_pretty(&mut f, &out)?;
        f.flush()?;
    }
    if let Some(mut f) = args.out_file("timeseries.csv")? {
        series.write_csv(&mut f)?;
        f.flush()?;
    }
    Ok(report.verdict.passed() && tail_ok)
}

fn weights(args: &Common) -> Result<()> {
    let (cfg, _) = args.load()?;
    let spec = cfg.problem()?;
    spec.validate()?;
    let n = cfg.time.steps;
    let dt = spec.horizon / n as f64;
    let tables = KernelTables::new(spec.kernel, dt, n)?;
    let write = |w: &mut dyn Write| -> Result<()> {
        writeln!(w, "k,t,omega,K")?;
        for k in 0..tables.len() {
            writeln!(
                w,
                "{k},{},{:e},{:e}",
                k as f64 * dt,
                tables.weight(k),
                tables.tail_at_step(k)
            )?;
        }
        Ok(())
    };
    match args.out_file("weights.csv")? {
        Some(mut f) => {
            write(&mut f)?;
            f.flush()?;
        }
        None => write(&mut io::stdout().lock())?,
    }
    eprintln!("K0 = {:e}, mu0 = {:e}, C0 = {:e}", tables.k0(), tables.mu0(), tables.c0());
    Ok(())
}

fn report_error(e: &Error) -> ExitCode {
    let category: ErrorCategory = e.category();
    let line = json!({ "error": { "category": category.as_str(), "message": e.to_string() } });
    eprintln!("{line}");
    ExitCode::from(category.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(a) => solve(a).map(|_| true),
        Command::Study(a) => study(a).map(|_| true),
        Command::Stability(a) => stability(a),
        Command::Weights(a) => weights(a).map(|_| true),
        Command::Presets => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(ErrorCategory::Numerical.exit_code() as u8),
        Err(e) => report_error(&e),
    }
}
