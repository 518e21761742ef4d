use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ct_lab::detectors::OutcomeKind;
use ct_lab::harness::{
    phase_diagram, run, threshold_report, verify_closed_form, write_convergence, write_phase_diagram,
    write_report_bundle, ConvergenceTable, ExperimentConfig, SystemKind, VerifySpec,
};
use ct_lab::Error;

#[derive(Parser)]
#[command(name = "ct-lab", version, about = "Critical-threshold laboratory for hyperbolic balance laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Regime, admissibility and pointwise verdicts for the configured data.
    ThresholdReport {
        #[command(flatten)]
        common: Common,
        /// Expected system family: ep, epa or relax.
        #[arg(long)]
        system: Option<String>,
    },
    /// Run one simulation and classify its outcome.
    Simulate(Common),
    /// Sweep one or two parameters and compare outcomes with the theory.
    PhaseDiagram(Common),
    /// Convergence table of the EP integrator against the closed form.
    VerifyClosedForm(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps; overrides `[sweep] jobs`.
    #[arg(long)]
    jobs: Option<usize>,
    /// Exit with status 3 when any outcome is indeterminate.
    #[arg(long)]
    strict: bool,
}

enum Failure {
    Validation(String),
    Indeterminate(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Other(e.to_string())
        }
    }
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf), Failure> {
    let cfg = ExperimentConfig::from_path(&common.config)?;
    let out = common.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    Ok((cfg, out))
}

fn check_system(cfg: &ExperimentConfig, expected: &str) -> Result<(), Failure> {
    let ok = match expected {
        "ep" => cfg.system == SystemKind::Ep,
        "epa" => cfg.system.is_alignment(),
        "relax" => cfg.system.is_relaxation(),
        other => return Err(Failure::Validation(format!("--system must be ep, epa or relax, got {other}"))),
    };
    if ok {
        Ok(())
    } else {
        Err(Failure::Validation(format!("--system {expected} does not match config system {}", cfg.system.as_str())))
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::ThresholdReport { common, system } => {
            let (cfg, out) = load(&common)?;
            if let Some(s) = system {
                check_system(&cfg, &s)?;
            }
            let report = threshold_report(&cfg)?;
            write_report_bundle(&cfg, &report, &out)?;
            print!("{}", report.to_key_values());
        }
        Command::Simulate(common) => {
            let (cfg, out) = load(&common)?;
            let summary = run(&cfg, &out)?;
            let o = &summary.outcome;
            println!("kind={}", o.kind);
            if let Some(t) = o.t_c {
                println!("t_c={t}");
            }
            if let Some(x) = o.x_c {
                println!("x_c={x}");
            }
            if !o.note.is_empty() {
                println!("note={}", o.note);
            }
            println!("out={}", out.display());
            if common.strict && o.kind == OutcomeKind::Indeterminate {
                return Err(Failure::Indeterminate(format!("indeterminate outcome: {}", o.note)));
            }
        }
        Command::PhaseDiagram(common) => {
            let (cfg, out) = load(&common)?;
            let pd = phase_diagram(&cfg, common.jobs)?;
            write_phase_diagram(&cfg, &pd, &out)?;
            let s = &pd.stats;
            println!("cells={}", s.cells);
            println!("compared={}", s.compared);
            println!("agreement={}", s.agreement());
            println!("agreement_outside_band={}", s.agreement_outside_band());
            println!("disagree_off_boundary={}", s.disagree_off_boundary);
            println!("indeterminate={}", s.indeterminate);
            println!("out={}", out.display());
            if common.strict && s.indeterminate > 0 {
                return Err(Failure::Indeterminate(format!("{} indeterminate cells", s.indeterminate)));
            }
        }
        Command::VerifyClosedForm(common) => {
            let (cfg, out) = load(&common)?;
            let spec = cfg.verify.clone().unwrap_or_else(|| VerifySpec {
                dts: vec![1e-2, 5e-3, 2.5e-3],
                points: vec![(2.0, 0.0)],
                horizon: 1.0,
            });
            let table = verify_closed_form(&spec.points, &spec.dts, spec.horizon)?;
            write_convergence(&table, &out)?;
            print_table(&table, &out);
        }
    }
    Ok(())
}

fn print_table(table: &ConvergenceTable, dir: &Path) {
    println!("rho0,g0,dt,error,order");
    for r in &table.rows {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3e}"));
        match r.excluded {
            Some(v) => println!("{},{},{},excluded ({v}),-", r.rho0, r.g0, r.dt),
            None => println!(
                "{},{},{},{},{}",
                r.rho0,
                r.g0,
                r.dt,
                opt(r.error),
                r.order.map_or("-".into(), |o| format!("{o:.3}"))
            ),
        }
    }
    println!("out={}", dir.display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Indeterminate(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
