use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use povmwalk::compiler::{preset_pair_mapping, preset_triple_mapping};
use povmwalk::qubit::{joint_povm_pair, joint_povm_triple, sharp_povm};
use povmwalk::{compile, compile_with_splitting, verify, PauliAxis, Povm};
use povmwalk_lab::formats::{compilation_to_json, povm_from_json};
use povmwalk_lab::{
    run_scenario, verify_external, Backend, LabError, NamedState, Result, ScenarioConfig, ScenarioKind,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "povmwalk", version, about = "Noisy joint qubit measurements on a simulated quantum walk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run a measurement scenario and emit a report.
    Run {
        #[arg(long, default_value = "pair-xy")]
        kind: ScenarioKind,
        /// Efficiency of the approximations (default: the largest allowed).
        #[arg(long)]
        eta: Option<f64>,
        /// Input state: a preset (x+, y-, psi, ...) or "x,y,z"; repeatable.
        #[arg(long = "state")]
        states: Vec<String>,
        /// Shots per setting; 0 uses exact probabilities.
        #[arg(long, default_value_t = 0)]
        shots: u64,
        #[arg(long, default_value_t = povmwalk_lab::sampling::DEFAULT_MC_RUNS)]
        mc_runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "analytic")]
        backend: Backend,
        /// Comma-separated relative efficiency per device outcome.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        efficiencies: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Compile a POVM into a walk program.
    Compile {
        /// POVM document to compile.
        #[arg(long = "in", conflicts_with = "family")]
        input: Option<PathBuf>,
        /// Built-in family instead of a file: pair-xy, pair-xz, pair-yz,
        /// triple, or sharp-x / sharp-y / sharp-z.
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        eta: Option<f64>,
        /// Split rank-2 elements into two rank-1 pieces.
        #[arg(long)]
        split_rank2: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-analyse measured distances or probabilities (CSV or JSON).
    VerifyData {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print published detector-position tables and state presets.
    Presets,
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn family_povm(name: &str, eta: Option<f64>) -> Result<Povm> {
    if let Some(axis) = name.strip_prefix("sharp-") {
        let axis = axis
            .chars()
            .next()
            .and_then(|c| PauliAxis::from_letter(c.to_ascii_uppercase()))
            .filter(|_| axis.len() == 1)
            .ok_or_else(|| LabError::Config(format!("unknown family {name:?}")))?;
        return Ok(sharp_povm(axis));
    }
    let kind: ScenarioKind = name.parse()?;
    let eta = eta.unwrap_or(kind.default_eta());
    Ok(match kind {
        ScenarioKind::Triple => joint_povm_triple(eta)?,
        ScenarioKind::VonNeumann => return Err(LabError::Config("von-neumann is not a joint family".into())),
        _ => joint_povm_pair(kind.axes()[0], kind.axes()[1], eta)?,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { kind, eta, states, shots, mc_runs, seed, backend, efficiencies, out, format } => {
            let mut config = ScenarioConfig::new(kind);
            if let Some(eta) = eta {
                config.eta = eta;
            }
            if !states.is_empty() {
                config.states = states.iter().map(|s| NamedState::parse(s)).collect::<Result<_>>()?;
            }
            config.shots = shots;
            config.mc_runs = mc_runs;
            config.seed = seed;
            config.backend = backend;
            config.efficiencies = efficiencies;
            let report = run_scenario(&config)?;
            match format {
                Format::Json => emit(out.as_ref(), &(report.to_json() + "\n")),
                Format::Csv => {
                    let mut buf = Vec::new();
                    report.write_csv(&mut buf)?;
                    emit(out.as_ref(), &String::from_utf8(buf).expect("CSV output is UTF-8"))
                }
            }
        }
        Command::Compile { input, family, eta, split_rank2, out } => {
            let target = match (input, family) {
                (Some(path), _) => povm_from_json(&fs::read_to_string(path)?)?,
                (None, Some(name)) => family_povm(&name, eta)?,
                (None, None) => return Err(LabError::Config("pass --in FILE or --family NAME".into())),
            };
            let result = if split_rank2 { compile_with_splitting(&target) } else { compile(&target) }
                .map_err(LabError::Compile)?;
            let check = verify(&result, &target, 100, 0);
            eprintln!(
                "compiled {} outcomes in {} iterations; residual {:.3e}, max deviation over {} states {:.3e}",
                target.len(),
                result.iterations(),
                result.residual_error,
                check.states,
                check.max_deviation
            );
            emit(out.as_ref(), &(compilation_to_json(&result) + "\n"))
        }
        Command::VerifyData { input, out } => {
            let report = verify_external(&input)?;
            for r in report.flagged() {
                eprintln!(
                    "warning: {}/{}: negative margin {:.4} ± {:.4}",
                    r.experiment, r.state, r.margin, r.margin_err
                );
            }
            emit(out.as_ref(), &(report.to_json() + "\n"))
        }
        Command::Presets => {
            let table = |t: Vec<(i64, povmwalk::OutcomeLabel)>| {
                t.into_iter().map(|(x, l)| json!({"position": x, "label": l.to_string()})).collect::<Vec<_>>()
            };
            let doc = json!({
                "pair_mapping": table(preset_pair_mapping()),
                "triple_mapping": table(preset_triple_mapping()),
                "states": NamedState::presets(),
                "note": "psi is a demonstration state, not a measured one",
            });
            emit(None, &(serde_json::to_string_pretty(&doc)? + "\n"))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
