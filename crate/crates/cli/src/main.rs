use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use gptcast::decide::CesaroSettings;
use gptcast::scalar::{parse_scalar, to_f64};
use gptcast_cli::demos::{self, DEMOS};
use gptcast_cli::report::{self, ReportOptions};
use gptcast_cli::sweep::run_sweep;
use gptcast_cli::verify::verify_report;
use gptcast_cli::{run_scenario, CompositeChoice, RunOptions, Scenario, SweepConfig};

/// Decide distinguishability, cloning and broadcasting of states in polytopic
/// state spaces, with exact witnesses and certificates.
#[derive(Parser)]
#[command(name = "gptcast", version)]
struct Cli {
    /// Verify a saved report instead of running a command.
    #[arg(long, value_name = "REPORT")]
    verify: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Seed for sweep scenarios.
        #[arg(long)]
        seed: Option<u64>,
        /// Trial count for sweep scenarios.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Randomized cross-validation over builtin spaces.
    Sweep {
        /// Builtin space, e.g. square, classical:4, pentagon. Repeatable.
        #[arg(long = "space")]
        spaces: Vec<String>,
        /// State-set size. Repeatable.
        #[arg(long = "size")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// First trial index; with --trials 1 this replays a single trial.
        #[arg(long, default_value_t = 0)]
        start: usize,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Allowed gap between the Cesàro average and the exact compression.
        #[arg(long, value_name = "RATIONAL")]
        tolerance: Option<String>,
    },
    /// Run a builtin demo, or list them.
    Demo {
        name: Option<String>,
        /// Print the demo's scenario file instead of running it.
        #[arg(long)]
        print: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Re-validate a saved report by substitution.
    Verify { report: PathBuf },
}

#[derive(Args)]
struct Common {
    /// min, max or custom:<path>.
    #[arg(long)]
    composite: Option<String>,
    /// Write the machine-readable report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Allowed gap between the Cesàro average and the exact compression.
    #[arg(long, value_name = "RATIONAL")]
    tolerance: Option<String>,
    /// Include wall-clock timings in the report.
    #[arg(long)]
    timings: bool,
}

fn cesaro(tolerance: Option<&str>) -> anyhow::Result<CesaroSettings> {
    let mut settings = CesaroSettings::default();
    if let Some(t) = tolerance {
        let x = parse_scalar(t).with_context(|| format!("--tolerance: malformed rational \"{t}\""))?;
        if x <= gptcast::scalar::int(0) {
            bail!("--tolerance must be positive");
        }
        settings.agreement = to_f64(&x);
    }
    Ok(settings)
}

fn options(common: &Common) -> anyhow::Result<RunOptions> {
    Ok(RunOptions {
        composite: common.composite.as_deref().map(CompositeChoice::from_flag).transpose()?,
        cesaro: cesaro(common.tolerance.as_deref())?,
        report: ReportOptions { timings: common.timings },
        seed: None,
        trials: None,
    })
}

fn write_report(path: Option<&Path>, value: &serde_json::Value) -> anyhow::Result<()> {
    if let Some(p) = path {
        std::fs::write(p, report::to_bytes(value)).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn run_and_print(scenario: &Scenario, opts: &RunOptions, report_path: Option<&Path>) -> anyhow::Result<()> {
    let out = run_scenario(scenario, opts)?;
    emit(&out.summary);
    write_report(report_path, &out.report)?;
    if !out.consistent {
        eprintln!("warning: some cross-checks failed; see the report");
    }
    Ok(())
}

fn verify(path: &Path) -> anyhow::Result<bool> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let v = verify_report(&doc)?;
    emit(&v.render());
    emit(if v.passed() { "report verified\n" } else { "report FAILED verification\n" });
    Ok(v.passed())
}

fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    if let Some(path) = &cli.verify {
        return verify(path);
    }
    match cli.command {
        None => bail!("no command given; try --help"),
        Some(Command::Verify { report }) => verify(&report),
        Some(Command::Run { scenario, common, seed, trials }) => {
            let s = Scenario::load(&scenario).with_context(|| format!("in {}", scenario.display()))?;
            let mut opts = options(&common)?;
            opts.seed = seed;
            opts.trials = trials;
            run_and_print(&s, &opts, common.report.as_deref())?;
            Ok(true)
        }
        Some(Command::Sweep { spaces, sizes, trials, seed, start, report, tolerance }) => {
            let defaults = SweepConfig::default();
            let config = SweepConfig {
                spaces: if spaces.is_empty() { defaults.spaces } else { spaces },
                sizes: if sizes.is_empty() { defaults.sizes } else { sizes },
                trials,
                seed,
            };
            let settings = cesaro(tolerance.as_deref())?;
            let outcome = run_sweep(&config, start, &settings)?;
            emit(&outcome.table());
            write_report(report.as_deref(), &outcome.to_json(&settings))?;
            Ok(true)
        }
        Some(Command::Demo { name: None, .. }) => {
            for d in DEMOS {
                let s = d.scenario()?;
                emit(&format!("{:<26} {}\n", d.name, s.description.unwrap_or_default()));
            }
            Ok(true)
        }
        Some(Command::Demo { name: Some(name), print, common }) => {
            let demo = demos::find(&name).with_context(|| format!("unknown demo \"{name}\"; run `gptcast demo` for the list"))?;
            if print {
                emit(demo.toml);
                return Ok(true);
            }
            run_and_print(&demo.scenario()?, &options(&common)?, common.report.as_deref())?;
            Ok(true)
        }
    }
}

/// Writes to stdout; a reader that hung up early ends the process quietly.
fn emit(text: &str) {
    use std::io::Write;
    if let Err(e) = std::io::stdout().lock().write_all(text.as_bytes()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: writing output: {e}");
        std::process::exit(1);
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
