//! Command-line front end for the simulator: random band-ratio sweeps,
//! the perturbed-Fourier study, the spin-rotation study, the simulation
//! and unitary-implementation drivers, and the closed-form cost models.
//! Results are emitted as CSV or JSON with a reproducibility header; see
//! the output module for the envelope rules.

mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde_json::json;

use output::{csv_table, deliver, read_with_path, render, Format, Payload};
use walksim_core::decompose::{cost_estimate, CostInputs, CostModel};
use walksim_core::ensembles::fourier_matrix;
use walksim_core::error::{Error, Result};
use walksim_core::experiments::{
    brk_qft_sweep, brk_random_sweep, implement_report, random_permutation_matrix, search_unitary,
    simulate_report, spin_rotation, spin_study, zero_matrix_report, BrkEnsemble, ImplMethod,
    SimMethod,
};
use walksim_core::oracle::OracleSet;
use walksim_core::rng::Tape;
use walksim_core::simulate::EstimatorModel;
use walksim_core::Matrix64;

#[derive(Parser)]
#[command(name = "walksim", version, about = "Quantum-walk simulation cost explorer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Band-ratio statistics over random matrix ensembles.
    BrkRandom(BrkRandomArgs),
    /// Band ratio of the perturbed Fourier encoding across sizes.
    BrkQft(BrkQftArgs),
    /// Entry moduli of the quarter-turn spin rotation exp(-i pi J_x / 2).
    SpinRotation(SpinRotationArgs),
    /// Run a Hamiltonian-simulation driver on a matrix file.
    Simulate(SimulateArgs),
    /// Implement a target unitary through the walk.
    Implement(ImplementArgs),
    /// Evaluate a closed-form query-cost model on explicit parameters.
    Cost(CostArgs),
}

/// Flags shared by every subcommand.
#[derive(Args)]
struct Common {
    /// Seed recorded in the output header and driving any randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for ensemble sweeps; library default when absent.
    #[arg(long)]
    threads: Option<usize>,
    /// Include the wall-clock duration in the output header. Off by
    /// default so reruns of the same configuration stay byte-identical.
    #[arg(long)]
    emit_duration: bool,
}

#[derive(Args)]
struct BrkRandomArgs {
    /// Matrix dimensions to sweep, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    /// Draws per dimension.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Random ensemble: hermitian or unitary_embedding.
    #[arg(long, default_value = "hermitian")]
    ensemble: BrkEnsemble,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BrkQftArgs {
    /// Transform sizes to sweep, comma separated; each at least 2.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SpinRotationArgs {
    /// Twice the total spin; any nonnegative integer (1 means J = 1/2).
    #[arg(long)]
    two_j: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SimulateArgs {
    /// Hamiltonian file: {"dim": n, "entries": [[re, im], ...]} row-major.
    #[arg(long)]
    matrix: PathBuf,
    /// Evolution time.
    #[arg(long)]
    t: f64,
    /// Trace-distance budget in (0, 1].
    #[arg(long)]
    eps: f64,
    /// Driver: theorem1, small_norm, or large_norm.
    #[arg(long)]
    method: SimMethod,
    /// Band-to-total norm ratio bound for the small-norm schedule;
    /// measured from the matrix when absent.
    #[arg(long)]
    zeta: Option<f64>,
    /// Phase-estimator outcome model: gaussian or exact_qpe.
    #[arg(long, default_value = "gaussian")]
    estimator: EstimatorModel,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["unitary", "target"])))]
struct ImplementArgs {
    /// Unitary file in the matrix JSON format; must be unitary to 1e-8.
    #[arg(long)]
    unitary: Option<PathBuf>,
    /// Builtin target: qft, permutation, search, or spin.
    #[arg(long)]
    target: Option<Builtin>,
    /// Dimension for the qft, permutation, and search builtins.
    #[arg(long)]
    n: Option<usize>,
    /// Marked index for the search builtin.
    #[arg(long)]
    marked: Option<usize>,
    /// Twice the total spin for the spin builtin.
    #[arg(long)]
    two_j: Option<u64>,
    /// Route: exact_walk, theorem1, or decomposed.
    #[arg(long)]
    method: ImplMethod,
    /// Trace-distance budget in (0, 1].
    #[arg(long)]
    eps: f64,
    /// Phase-estimator outcome model: gaussian or exact_qpe.
    #[arg(long, default_value = "gaussian")]
    estimator: EstimatorModel,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CostArgs {
    /// Cost model: t1, lem6, sm, t2, cor1, corr11, or exact.
    #[arg(long)]
    model: CostModel,
    /// Matrix dimension N.
    #[arg(long)]
    dim: usize,
    /// Sparseness bound D (nonzeros per row).
    #[arg(long)]
    degree: usize,
    /// Largest entry modulus bound.
    #[arg(long)]
    max_entry: f64,
    /// Spectral norm bound.
    #[arg(long)]
    spectral: f64,
    /// Induced 1-norm bound.
    #[arg(long)]
    one_norm: f64,
    /// Evolution time.
    #[arg(long)]
    t: f64,
    /// Error budget in (0, 1].
    #[arg(long)]
    eps: f64,
    /// Band-to-total norm ratio bound, where the model takes one.
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    common: Common,
}

/// Builtin implementation targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Builtin {
    Qft,
    Permutation,
    Search,
    Spin,
}

impl std::str::FromStr for Builtin {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qft" => Ok(Builtin::Qft),
            "permutation" => Ok(Builtin::Permutation),
            "search" => Ok(Builtin::Search),
            "spin" => Ok(Builtin::Spin),
            other => Err(Error::contract(format!(
                "unknown builtin '{other}'; expected qft, permutation, search, or spin"
            ))),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let started = Instant::now();
    let (common, config, payload) = match cli.command {
        Command::BrkRandom(a) => cmd_brk_random(a)?,
        Command::BrkQft(a) => cmd_brk_qft(a)?,
        Command::SpinRotation(a) => cmd_spin_rotation(a)?,
        Command::Simulate(a) => cmd_simulate(a)?,
        Command::Implement(a) => cmd_implement(a)?,
        Command::Cost(a) => cmd_cost(a)?,
    };
    let duration = common
        .emit_duration
        .then(|| started.elapsed().as_secs_f64());
    let text = render(&config, common.seed, duration, payload)?;
    deliver(&common.out, &text)
}

/// Configures the global worker pool before any parallel sweep runs.
fn set_threads(common: &Common) -> Result<()> {
    if let Some(k) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::contract(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn out_echo(out: &Option<PathBuf>) -> String {
    match out {
        Some(path) => format!(" --out {}", path.display()),
        None => String::new(),
    }
}

/// JSON is the only dialect with room for a nested report.
fn require_json(format: Format, what: &str) -> Result<()> {
    if format != Format::Json {
        return Err(Error::contract(format!(
            "{what} reports are emitted as json only"
        )));
    }
    Ok(())
}

fn join_usizes(xs: &[usize]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn cmd_brk_random(a: BrkRandomArgs) -> Result<(Common, String, Payload)> {
    set_threads(&a.common)?;
    let (rows, summary) =
        brk_random_sweep::<f64>(&a.dims, a.trials, a.ensemble, a.common.seed)?;
    let config = format!(
        "brk-random --dims {} --trials {} --ensemble {} --seed {}{} --format {}",
        join_usizes(&a.dims),
        a.trials,
        a.ensemble.token(),
        a.common.seed,
        out_echo(&a.common.out),
        a.format.token()
    );
    let payload = match a.format {
        Format::Json => Payload::Json(json!({ "rows": rows, "summary": summary })),
        Format::Csv => {
            let mut body = csv_table(
                "dim,trial,brk",
                rows.iter()
                    .map(|r| format!("{},{},{}", r.dim, r.trial, r.brk)),
            );
            body.push_str("\n# summary\n");
            body.push_str(&csv_table(
                "dim,max,mean",
                summary
                    .iter()
                    .map(|s| format!("{},{},{}", s.dim, s.max, s.mean)),
            ));
            Payload::Csv(body)
        }
    };
    Ok((a.common, config, payload))
}

fn cmd_brk_qft(a: BrkQftArgs) -> Result<(Common, String, Payload)> {
    set_threads(&a.common)?;
    if let Some(bad) = a.sizes.iter().find(|&&n| n < 2) {
        return Err(Error::precondition(format!(
            "transform sizes must be at least 2, got {bad}"
        )));
    }
    let (rows, slope) = brk_qft_sweep::<f64>(&a.sizes)?;
    let config = format!(
        "brk-qft --sizes {} --seed {}{} --format {}",
        join_usizes(&a.sizes),
        a.common.seed,
        out_echo(&a.common.out),
        a.format.token()
    );
    let payload = match a.format {
        Format::Json => Payload::Json(json!({ "rows": rows, "slope": slope })),
        Format::Csv => {
            let mut body = csv_table(
                "n,brk,brk_unperturbed,sqrt_2n",
                rows.iter().map(|r| {
                    format!("{},{},{},{}", r.n, r.brk, r.brk_unperturbed, r.sqrt_2n)
                }),
            );
            body.push_str(&format!("\n# slope: {slope}\n"));
            Payload::Csv(body)
        }
    };
    Ok((a.common, config, payload))
}

fn cmd_spin_rotation(a: SpinRotationArgs) -> Result<(Common, String, Payload)> {
    let study = spin_study::<f64>(a.two_j)?;
    let config = format!(
        "spin-rotation --two-j {} --seed {}{} --format {}",
        a.two_j,
        a.common.seed,
        out_echo(&a.common.out),
        a.format.token()
    );
    let payload = match a.format {
        Format::Json => Payload::Json(json!({
            "rows": study.rows,
            "max_entry": study.max_entry,
            "formula": study.formula,
            "unitarity_error": study.unitarity_error,
        })),
        Format::Csv => {
            let mut body = csv_table(
                "index,first_column,middle_column",
                study
                    .rows
                    .iter()
                    .map(|r| format!("{},{},{}", r.index, r.first_column, r.middle_column)),
            );
            body.push_str("\n# summary\n");
            body.push_str(&csv_table(
                "max_entry,formula,unitarity_error",
                [format!(
                    "{},{},{}",
                    study.max_entry, study.formula, study.unitarity_error
                )],
            ));
            Payload::Csv(body)
        }
    };
    Ok((a.common, config, payload))
}

fn cmd_simulate(a: SimulateArgs) -> Result<(Common, String, Payload)> {
    require_json(a.format, "simulation")?;
    set_threads(&a.common)?;
    let h = Matrix64::from_json(&read_with_path(&a.matrix)?)?;
    let report = if h.max_abs_entry() == 0.0 {
        zero_matrix_report::<f64>(h.dim(), a.t, a.eps)?
    } else {
        let set = OracleSet::from_matrix(h)?;
        simulate_report(&set, a.t, a.eps, a.method, a.zeta, a.estimator)?
    };
    let zeta_echo = match a.zeta {
        Some(z) => format!(" --zeta {z}"),
        None => String::new(),
    };
    let config = format!(
        "simulate --matrix {} --t {} --eps {} --method {}{} --estimator {} --seed {}{} --format {}",
        a.matrix.display(),
        a.t,
        a.eps,
        a.method.token(),
        zeta_echo,
        a.estimator.token(),
        a.common.seed,
        out_echo(&a.common.out),
        a.format.token()
    );
    let payload = Payload::Json(serde_json::to_value(&report)?);
    Ok((a.common, config, payload))
}

fn cmd_implement(a: ImplementArgs) -> Result<(Common, String, Payload)> {
    require_json(a.format, "implementation")?;
    set_threads(&a.common)?;
    let builtin_only = |flag: &str, used: bool| -> Result<()> {
        if used {
            return Err(Error::contract(format!(
                "{flag} does not apply to this target"
            )));
        }
        Ok(())
    };
    let need_n = || {
        a.n.ok_or_else(|| Error::contract("this builtin needs --n"))
    };
    let (u, source_echo) = match (&a.unitary, a.target) {
        (Some(path), None) => {
            builtin_only("--n", a.n.is_some())?;
            builtin_only("--marked", a.marked.is_some())?;
            builtin_only("--two-j", a.two_j.is_some())?;
            let u = Matrix64::from_json(&read_with_path(path)?)?;
            if !u.is_unitary(1e-8) {
                return Err(Error::precondition(format!(
                    "{} is not unitary within 1e-8",
                    path.display()
                )));
            }
            (u, format!("--unitary {}", path.display()))
        }
        (None, Some(builtin)) => match builtin {
            Builtin::Qft => {
                builtin_only("--marked", a.marked.is_some())?;
                builtin_only("--two-j", a.two_j.is_some())?;
                let n = need_n()?;
                (fourier_matrix::<f64>(n), format!("--target qft --n {n}"))
            }
            Builtin::Permutation => {
                builtin_only("--marked", a.marked.is_some())?;
                builtin_only("--two-j", a.two_j.is_some())?;
                let n = need_n()?;
                let mut tape = Tape::new(a.common.seed);
                (
                    random_permutation_matrix::<f64>(n, &mut tape)?,
                    format!("--target permutation --n {n}"),
                )
            }
            Builtin::Search => {
                builtin_only("--two-j", a.two_j.is_some())?;
                let n = need_n()?;
                let marked = a
                    .marked
                    .ok_or_else(|| Error::contract("the search builtin needs --marked"))?;
                (
                    search_unitary::<f64>(n, marked)?,
                    format!("--target search --n {n} --marked {marked}"),
                )
            }
            Builtin::Spin => {
                builtin_only("--n", a.n.is_some())?;
                builtin_only("--marked", a.marked.is_some())?;
                let two_j = a
                    .two_j
                    .ok_or_else(|| Error::contract("the spin builtin needs --two-j"))?;
                (
                    spin_rotation::<f64>(two_j)?,
                    format!("--target spin --two-j {two_j}"),
                )
            }
        },
        _ => unreachable!("clap enforces exactly one source"),
    };
    let report = implement_report(&u, a.eps, a.method, a.estimator)?;
    let config = format!(
        "implement {source_echo} --method {} --eps {} --estimator {} --seed {}{} --format {}",
        a.method.token(),
        a.eps,
        a.estimator.token(),
        a.common.seed,
        out_echo(&a.common.out),
        a.format.token()
    );
    let payload = Payload::Json(serde_json::to_value(&report)?);
    Ok((a.common, config, payload))
}

fn cmd_cost(a: CostArgs) -> Result<(Common, String, Payload)> {
    require_json(a.format, "cost")?;
    let inputs = CostInputs {
        dim: a.dim,
        degree: a.degree,
        max_entry: a.max_entry,
        spectral: a.spectral,
        one_norm: a.one_norm,
        t: a.t,
        eps: a.eps,
        zeta: a.zeta,
    };
    let est = cost_estimate(a.model, &inputs);
    let zeta_echo = match a.zeta {
        Some(z) => format!(" --zeta {z}"),
        None => String::new(),
    };
    let config = format!(
        "cost --model {} --dim {} --degree {} --max-entry {} --spectral {} --one-norm {} --t {} --eps {}{} --seed {}{} --format {}",
        a.model.token(),
        a.dim,
        a.degree,
        a.max_entry,
        a.spectral,
        a.one_norm,
        a.t,
        a.eps,
        zeta_echo,
        a.common.seed,
        out_echo(&a.common.out),
        a.format.token()
    );
    let payload = Payload::Json(json!({
        "model": a.model.token(),
        "predicted": est.predicted,
        "violated": est.violated,
    }));
    Ok((a.common, config, payload))
}
