//! `lgps`: run, sweep and classify scenario files.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lgps_core::lg::{joint_probability, k3, PairwisePlans};
use lgps_core::process::build_process_state;
use lgps_core::scenarios::rotated_measurement_plan;
use lgps_core::schema::{fmt_sig, load_scenario_file, Source};
use lgps_core::structure::classify;
use lgps_core::{Error, LGReport, LoadedScenario, DEFAULT_TOL};
use rayon::prelude::*;
use serde_json::json;

#[derive(Parser)]
#[command(name = "lgps", version, about = "Multitime statistics, Leggett-Garg K3 and process-state structure")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Joint probability table and LG report for the file's plan.
    Run(Common),
    /// K3 over a grid of rotation angles (two-qubit model files only).
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = -PI, allow_negative_numbers = true)]
        theta_min: f64,
        #[arg(long, default_value_t = PI, allow_negative_numbers = true)]
        theta_max: f64,
        #[arg(long, default_value_t = 181, value_parser = clap::value_parser!(u32).range(2..))]
        steps: u32,
        /// Index of the second-time basis; overrides the file's `k`.
        #[arg(long, allow_negative_numbers = true)]
        k: Option<i64>,
    },
    /// Quantum-classical structure report.
    Classify(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(value_name = "INPUT", required_unless_present = "input")]
    path: Option<PathBuf>,
    #[arg(long, conflicts_with = "path")]
    input: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Residual and LG tolerance; falls back to LGPS_TOL, then 1e-10.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

enum Failure {
    Core(Error),
    Input(String),
    Output(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(Error::Convention(_)) => 3,
            Failure::Core(
                Error::Schema { .. }
                | Error::Shape(_)
                | Error::Label(_)
                | Error::Domain(_)
                | Error::Usage(_)
                | Error::InvalidInstrument(_),
            )
            | Failure::Input(_) => 2,
            Failure::Core(_) | Failure::Output(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Input(m) | Failure::Output(m) => f.write_str(m),
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn tolerance(flag: Option<f64>) -> Outcome<f64> {
    let tol = match flag {
        Some(t) => t,
        None => match std::env::var("LGPS_TOL") {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| Failure::Input(format!("LGPS_TOL = {s:?} is not a number")))?,
            Err(_) => DEFAULT_TOL,
        },
    };
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Failure::Input(format!("tolerance must be positive, got {tol}")));
    }
    Ok(tol)
}

struct Prepared {
    loaded: LoadedScenario,
    out: Option<PathBuf>,
    format: Format,
    tol: f64,
}

fn prepare(c: &Common, default_format: Format) -> Outcome<Prepared> {
    let tol = tolerance(c.tol)?;
    if let Some(out) = &c.out {
        let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(Failure::Input(format!("output directory {} does not exist", parent.display())));
        }
    }
    let input = c.input.as_ref().or(c.path.as_ref()).expect("clap requires an input");
    Ok(Prepared {
        loaded: load_scenario_file(input, tol)?,
        out: c.out.clone(),
        format: c.format.unwrap_or(default_format),
        tol,
    })
}

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Output(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Conventions fixed by the two-qubit shorthand, echoed into run reports.
fn model_notes(l: &LoadedScenario) -> Vec<String> {
    match &l.source {
        Source::TwoQubit { k, .. } => vec![
            format!("second-time basis index k = {}", k.unwrap_or(1)),
            "phi+ ~ |+> + i(-1)^(k-1)|->, phi- ~ |-> + i(-1)^(k-1)|+>".into(),
            "time-1 to time-2 block at the half-pi angles is (Pi_phi+ + Pi_phi-)/2".into(),
        ],
        Source::General => Vec::new(),
    }
}

fn run(c: &Common) -> Outcome {
    let p = prepare(c, Format::Json)?;
    let plan = p.loaded.plan()?;
    let ps = build_process_state(&p.loaded.scenario)?;
    let table = joint_probability(&ps, &plan)?;
    let report: Option<LGReport> = match PairwisePlans::from_plan(&plan) {
        Ok(plans) => Some(k3(&ps, &plans, p.tol)?),
        Err(_) => None,
    };
    match &report {
        Some(r) => {
            println!("K3 = {}", fmt_sig(r.k3));
            println!("lg_satisfied = {}", r.lg_satisfied);
            if !r.dichotomic {
                println!("note: outcome values are not all +-1");
            }
        }
        None => println!("K3 not computed: the plan does not measure exactly three times"),
    }
    let Some(out) = &p.out else { return Ok(()) };
    match p.format {
        Format::Json => emit(
            Some(out),
            &pretty(&json!({
                "table": table.to_json(),
                "report": report,
                "notes": model_notes(&p.loaded),
            })),
        ),
        Format::Csv => {
            emit(Some(out), &table.to_csv())?;
            match &report {
                Some(r) => emit(
                    Some(&out.with_extension("report.json")),
                    &pretty(&serde_json::to_value(r).expect("reports serialize")),
                ),
                None => Ok(()),
            }
        }
    }
}

fn sweep(c: &Common, theta_min: f64, theta_max: f64, steps: u32, k_flag: Option<i64>) -> Outcome {
    let p = prepare(c, Format::Csv)?;
    let Source::TwoQubit { k: k_file, .. } = &p.loaded.source else {
        return Err(Failure::Core(Error::schema_missing("two_qubit_model")));
    };
    let k = k_flag.or(*k_file).unwrap_or(1);
    let n = steps as usize;
    let grid: Vec<f64> = (0..n)
        .map(|i| (theta_min * (n - 1 - i) as f64 + theta_max * i as f64) / (n - 1) as f64)
        .collect();
    let ps = build_process_state(&p.loaded.scenario)?;
    let rows: Vec<LGReport> = grid
        .par_iter()
        .map(|&th| {
            let plans = PairwisePlans::from_plan(&rotated_measurement_plan(th, k)?)?;
            k3(&ps, &plans, p.tol)
        })
        .collect::<Result<_, Error>>()?;
    let text = match p.format {
        Format::Csv => {
            let mut s = String::from("theta,C12,C23,C13,K3\n");
            for (th, r) in grid.iter().zip(&rows) {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt_sig(*th),
                    fmt_sig(r.c12),
                    fmt_sig(r.c23),
                    fmt_sig(r.c13),
                    fmt_sig(r.k3)
                ));
            }
            s
        }
        Format::Json => pretty(&json!(grid
            .iter()
            .zip(&rows)
            .map(|(th, r)| json!({"theta": th, "C12": r.c12, "C23": r.c23, "C13": r.c13, "K3": r.k3}))
            .collect::<Vec<_>>())),
    };
    emit(p.out.as_deref(), &text)
}

fn classify_cmd(c: &Common) -> Outcome {
    let p = prepare(c, Format::Json)?;
    if p.format == Format::Csv {
        return Err(Failure::Input("classify writes JSON only".into()));
    }
    let ps = build_process_state(&p.loaded.scenario)?;
    let report = classify(&ps, &p.loaded.classification_bases(), p.tol)?;
    emit(p.out.as_deref(), &pretty(&serde_json::to_value(&report).expect("reports serialize")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => run(c),
        Command::Sweep {
            common,
            theta_min,
            theta_max,
            steps,
            k,
        } => sweep(common, *theta_min, *theta_max, *steps, *k),
        Command::Classify(c) => classify_cmd(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
