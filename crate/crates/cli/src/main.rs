use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use imaginarity::assisted::{assisted_fidelity, assisted_fidelity_oracle, bloch_decompose};
use imaginarity::convert::{fidelity_with_probability, probability_with_fidelity, ConversionSpec};
use imaginarity::discrim::{play, Ancilla, DiscriminationGame, MeasurementConstraint, ProbeConstraint};
use imaginarity::measures::{chernoff_divergence, multi_copy_fidelity, MeasureReport};
use imaginarity::sdpbound::{bob_local_target, solve, Mode, SdpProblem, SolverOptions};
use imaginarity::Error;
use imaginarity_lab::experiment::{self, Experiment, ExperimentConfig, Format};
use imaginarity_lab::load;

#[derive(Parser)]
#[command(name = "imaginarity-lab", version, about = "Imaginarity measures, conversions, SDP bounds and discrimination games")]
struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format (experiments default to csv, other commands to json).
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Seed for randomized utilities (row spot checks, solver restarts).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Solver tolerance.
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Imaginarity measures of a state.
    Measures(MeasuresArgs),
    /// Assisted fidelity of imaginarity of a two-qubit state.
    Assisted(AssistedArgs),
    /// Assisted conversion probability or fidelity.
    Convert(ConvertArgs),
    /// SDP upper bound on assisted conversion fidelity.
    SdpBound(SdpArgs),
    /// Binary channel discrimination games.
    Discriminate(DiscriminateArgs),
    /// Parameter sweeps written as tables.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct MeasuresArgs {
    /// Registry name or JSON file.
    #[arg(long)]
    state: String,
    /// Also report the fidelity of imaginarity of this many copies.
    #[arg(long)]
    copies: Option<usize>,
}

#[derive(Args)]
struct AssistedArgs {
    #[arg(long)]
    state: String,
    /// Grid step in degrees for the brute-force POVM search.
    #[arg(long, default_value_t = 2.0)]
    oracle_grid: f64,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long, conflicts_with = "state", required_unless_present = "state")]
    alpha: Option<f64>,
    /// Bipartite pure input state.
    #[arg(long)]
    state: Option<String>,
    #[arg(long, conflicts_with = "target", required_unless_present = "target")]
    beta: Option<f64>,
    /// Bob's target state.
    #[arg(long)]
    target: Option<String>,
    #[arg(long, conflicts_with = "probability", required_unless_present = "probability")]
    fidelity: Option<f64>,
    #[arg(long)]
    probability: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Lqrcc,
    Lrcc,
}

#[derive(Args)]
struct SdpArgs {
    /// Bipartite input state.
    #[arg(long)]
    state: String,
    /// Pure target; a single-party target is placed on Bob's side.
    #[arg(long)]
    target: String,
    #[arg(long)]
    p: f64,
    #[arg(long, value_enum, default_value = "lqrcc")]
    mode: ModeArg,
    /// Also require the variable to be real (lrcc only).
    #[arg(long)]
    real: bool,
    #[arg(long, default_value_t = 50_000)]
    max_iter: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    #[value(name = "eq12")]
    RealBlindPair,
    #[value(name = "taskA")]
    TaskA,
    #[value(name = "taskB")]
    TaskB,
}

#[derive(Clone, Copy, ValueEnum)]
enum Constraint {
    Real,
    Any,
}

#[derive(Args)]
struct DiscriminateArgs {
    #[arg(long, value_enum)]
    task: Task,
    /// p for taskA, w for taskB.
    #[arg(long)]
    param: Option<f64>,
    #[arg(long, value_enum, default_value = "any")]
    constraint: Constraint,
    /// Probe with half of a maximally entangled pair.
    #[arg(long)]
    ancilla: bool,
    /// Grid step in degrees for probe and measurement searches.
    #[arg(long, default_value_t = 2.0)]
    grid: f64,
    /// Sweep the parameter as START:STOP:COUNT and emit (param, p_allowed, p_real).
    #[arg(long)]
    sweep: Option<String>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// fig2a_pure, fig2b_werner, fig3a, fig3b, measures, sdp_sweep or chernoff_scan.
    name: String,
    /// Comma-separated parameter grid; each experiment has a default.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// State for chernoff_scan.
    #[arg(long)]
    state: Option<String>,
}

enum Failure {
    Lib(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = std::result::Result<String, Failure>;

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn measures(cli: &Cli, a: &MeasuresArgs) -> Outcome {
    let rho = load(&a.state)?.into_density()?;
    let mut v = serde_json::to_value(MeasureReport::of(&rho)).expect("report serializes");
    v["chernoff"] = serde_json::to_value(chernoff_divergence(&rho)).expect("serializes");
    if let Some(n) = a.copies {
        v["copies"] = json!(n);
        v["multi_copy_fidelity"] = json!(multi_copy_fidelity(&rho, n)?);
    }
    Ok(render_object(cli, &v))
}

/// Single JSON objects; csv prints a header line and a value line.
fn render_object(cli: &Cli, v: &Value) -> String {
    match cli.format {
        Some(FormatArg::Csv) => {
            let obj = v.as_object().expect("object");
            let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
            let vals: Vec<String> = obj
                .values()
                .map(|x| match x {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect();
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&keys).expect("in-memory write");
            w.write_record(&vals).expect("in-memory write");
            String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
        }
        _ => json_text(v),
    }
}

fn assisted(cli: &Cli, a: &AssistedArgs) -> Outcome {
    let rho = load(&a.state)?.into_density()?;
    let st = bloch_decompose(&rho)?;
    let res = assisted_fidelity(&st);
    let oracle = assisted_fidelity_oracle(&st, a.oracle_grid)?;
    let v = json!({
        "closed_form": res.value,
        "oracle": oracle,
        "direction": res.optimal_direction,
        "branch": res.used_branch,
    });
    Ok(render_object(cli, &v))
}

fn convert(cli: &Cli, a: &ConvertArgs) -> Outcome {
    let alpha = match (a.alpha, &a.state) {
        (Some(x), _) => x,
        (None, Some(s)) => ConversionSpec::alpha_of(&load(s)?.into_pure()?)?,
        (None, None) => unreachable!("clap requires one of --alpha/--state"),
    };
    let beta = match (a.beta, &a.target) {
        (Some(x), _) => x,
        (None, Some(s)) => ConversionSpec::beta_of(&load(s)?.into_density()?)?,
        (None, None) => unreachable!("clap requires one of --beta/--target"),
    };
    let v = match (a.fidelity, a.probability) {
        (Some(f), _) => {
            let spec = ConversionSpec::new(alpha, beta, ConversionSpec::gamma_for_fidelity(f)?)?;
            let r = probability_with_fidelity(&spec);
            json!({"alpha": alpha, "beta": beta, "P_f": r.value, "branch": r.branch})
        }
        (None, Some(p)) => {
            let spec = ConversionSpec::new(alpha, beta, 0.0)?;
            let r = fidelity_with_probability(&spec, p)?;
            json!({"alpha": alpha, "beta": beta, "F_p": r.value, "branch": r.branch})
        }
        (None, None) => unreachable!("clap requires one of --fidelity/--probability"),
    };
    Ok(render_object(cli, &v))
}

fn sdp_bound(cli: &Cli, a: &SdpArgs) -> Outcome {
    let rho = load(&a.state)?.into_density()?;
    let mut target = load(&a.target)?.into_pure()?;
    if target.factors().len() == 1 {
        target = bob_local_target(&target, 2);
    }
    let mode = match a.mode {
        ModeArg::Lqrcc => Mode::Lqrcc,
        ModeArg::Lrcc => Mode::Lrcc,
    };
    let problem = SdpProblem::new(rho, target, a.p, mode)?.with_real_constraint(a.real);
    let opts = SolverOptions {
        tol: cli.tol,
        max_iter: a.max_iter,
        seed: Some(cli.seed),
    };
    let sol = solve(&problem, opts)?;
    let v = json!({"value": sol.value, "residuals": sol.residuals, "iterations": sol.iterations});
    Ok(json_text(&v))
}

fn game(task: Task, param: Option<f64>, probe: ProbeConstraint, meas: MeasurementConstraint) -> Result<DiscriminationGame, Error> {
    let need = || param.ok_or_else(|| Error::InvalidParameter("this task needs --param".into()));
    match task {
        Task::RealBlindPair => Ok(DiscriminationGame::real_blind_pair(probe, meas)),
        Task::TaskA => DiscriminationGame::task_a(need()?, probe, meas),
        Task::TaskB => DiscriminationGame::task_b(need()?, probe, meas),
    }
}

fn constraints(c: Constraint) -> (ProbeConstraint, MeasurementConstraint) {
    match c {
        Constraint::Any => (ProbeConstraint::Any, MeasurementConstraint::Any),
        Constraint::Real => (ProbeConstraint::Real, MeasurementConstraint::Real),
    }
}

fn parse_sweep(s: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::InvalidParameter(format!("sweep {s:?} is not START:STOP:COUNT"));
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, count] = parts.as_slice() else {
        return Err(bad());
    };
    let start: f64 = start.parse().map_err(|_| bad())?;
    let stop: f64 = stop.parse().map_err(|_| bad())?;
    let count: usize = count.parse().map_err(|_| bad())?;
    match count {
        0 => Err(bad()),
        1 => Ok(vec![start]),
        n => Ok((0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect()),
    }
}

fn discriminate(cli: &Cli, a: &DiscriminateArgs) -> Outcome {
    let ancilla = if a.ancilla { Ancilla::MaximallyEntangled } else { Ancilla::None };
    if let Some(sweep) = &a.sweep {
        let mut rows = Vec::new();
        for x in parse_sweep(sweep)? {
            let score = |c: Constraint| -> Result<f64, Error> {
                let (probe, meas) = constraints(c);
                Ok(play(&game(a.task, Some(x), probe, meas)?.with_ancilla(ancilla), a.grid)?.p_succ)
            };
            rows.push(vec![x, score(Constraint::Any)?, score(Constraint::Real)?]);
        }
        return Ok(match cli.format {
            Some(FormatArg::Json) => json_text(&json!({"columns": ["param", "p_allowed", "p_real"], "rows": rows})),
            _ => {
                let mut out = format!("# {} discriminate\nparam,p_allowed,p_real\n", experiment::SCHEMA);
                for r in rows {
                    out.push_str(&format!("{},{},{}\n", r[0], r[1], r[2]));
                }
                out
            }
        });
    }
    let (probe, meas) = constraints(a.constraint);
    let g = game(a.task, a.param, probe, meas)?.with_ancilla(ancilla);
    let r = play(&g, a.grid)?;
    let v = json!({"p_succ": r.p_succ, "probe_bloch": r.probe_bloch, "povm_angle": r.povm_angle});
    Ok(render_object(cli, &v))
}

fn run_experiment(cli: &Cli, a: &ExperimentArgs) -> Outcome {
    let exp: Experiment = a.name.parse()?;
    let mut cfg = ExperimentConfig::new(exp);
    cfg.tol = cli.tol;
    cfg.seed = cli.seed;
    if let Some(g) = &a.grid {
        cfg.grid = g.clone();
    }
    if let Some(s) = &a.state {
        cfg.state = Some(load(s)?.into_density()?);
    }
    let table = experiment::run(&cfg)?;
    experiment::spot_check(&cfg, &table)?;
    let format = match cli.format {
        Some(FormatArg::Json) => Format::Json,
        _ => Format::Csv,
    };
    Ok(experiment::render(&table, format))
}

fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Measures(a) => measures(&cli, a),
        Command::Assisted(a) => assisted(&cli, a),
        Command::Convert(a) => convert(&cli, a),
        Command::SdpBound(a) => sdp_bound(&cli, a),
        Command::Discriminate(a) => discriminate(&cli, a),
        Command::Experiment(a) => run_experiment(&cli, a),
    }
    .and_then(|text| emit(&cli, &text));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e @ Error::NotConverged { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
