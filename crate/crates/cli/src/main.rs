use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use tpl_core::allocate::{allocate_by_quantification, allocate_by_upper_bound, compare_utility, UTILITY_HEADER};
use tpl_core::correlate::{cycle_permutation, random_stochastic, smooth, strongest_matrix};
use tpl_core::io::{fmt_f64, load_matrix_csv, load_schedule_csv, write_matrix, write_schedule, write_trace};
use tpl_core::leakage::tpl_trace;
use tpl_core::lfp::loss_increment;
use tpl_core::release::{ingest_counts, release_sequence, write_release};
use tpl_core::supremum::{leakage_supremum, Supremum};
use tpl_core::{AdversaryModel, BudgetSchedule, Error, Horizon, TransitionMatrix};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "tpl", version, about = "Temporal privacy leakage under Markov correlations")]
struct Cli {
    /// RNG seed for every randomized step.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-step BPL, FPL and TPL for one user.
    Quantify {
        #[command(flatten)]
        model: ModelArgs,
        /// Budget used at every step (with --T).
        #[arg(long, conflicts_with = "schedule", required_unless_present = "schedule", requires = "horizon")]
        eps: Option<f64>,
        #[arg(long = "T", requires = "eps")]
        horizon: Option<usize>,
        /// Schedule CSV (`t,epsilon`) instead of --eps/--T.
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Supremum of leakage under a constant budget.
    Supremum {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        eps: f64,
    },
    /// Per-step budgets keeping TPL at most alpha.
    Allocate {
        #[arg(long, value_parser = ["2", "3"])]
        alg: String,
        #[arg(long)]
        alpha: f64,
        /// Horizon; the uniform schedule is written for this many steps.
        #[arg(long = "T")]
        horizon: usize,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes a transition matrix.
    Generate {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        /// Smoothing strength for `smoothed`.
        #[arg(long, default_value_t = 0.1)]
        s: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Laplace release of a counts CSV under a schedule.
    Release {
        #[arg(long)]
        counts: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean absolute noise of two schedules over a horizon.
    Utility {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long = "T")]
        horizon: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runtime of one loss evaluation on random matrices.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = (1..=15).map(|k| 10 * k).collect::<Vec<usize>>())]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 1.0, 2.0, 5.0, 10.0, 20.0])]
        alpha: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct ModelArgs {
    /// Backward transition matrix CSV.
    #[arg(long)]
    pb: Option<PathBuf>,
    /// Forward transition matrix CSV.
    #[arg(long)]
    pf: Option<PathBuf>,
}

impl ModelArgs {
    fn load(&self) -> Result<AdversaryModel, Error> {
        let pb = self.pb.as_ref().map(load_matrix_csv).transpose()?;
        let pf = self.pf.as_ref().map(load_matrix_csv).transpose()?;
        AdversaryModel::new("input", pb, pf)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Strongest,
    Smoothed,
    Random,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::StrongestCorrelation { .. } => 3,
        Error::StabilizationFailure { .. } => 4,
        Error::Io { .. } => 1,
        _ => 2,
    }
}

/// Writes `body` after a `#` provenance line, to `out` or stdout.
fn emit(out: Option<&Path>, seed: u64, body: &[u8]) -> Result<(), Error> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let header = format!("# tpl {VERSION} seed={seed} args: {}\n", args.join(" "));
    let write = |w: &mut dyn Write| -> io::Result<()> {
        w.write_all(header.as_bytes())?;
        w.write_all(body)?;
        w.flush()
    };
    match out {
        Some(path) => {
            let mut f = File::create(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
            write(&mut f).map_err(|e| Error::Io { path: path.into(), source: e })
        }
        None => write(&mut io::stdout().lock()).map_err(|e| Error::Io { path: "<stdout>".into(), source: e }),
    }
}

fn buffer_io(e: io::Error) -> Error {
    Error::Io { path: "<buffer>".into(), source: e }
}

fn run(cli: Cli) -> Result<(), Error> {
    let seed = cli.seed;
    let mut body = Vec::new();
    match cli.command {
        Command::Quantify { model, eps, horizon, schedule, out } => {
            let model = model.load()?;
            let steps = match (eps, horizon, schedule) {
                (_, _, Some(path)) => load_schedule_csv(path)?.steps().to_vec(),
                (Some(e), Some(t), None) => BudgetSchedule::uniform(e, Horizon::Finite(t))?.steps().to_vec(),
                _ => unreachable!("clap enforces --eps with --T, or --schedule"),
            };
            let trace = tpl_trace(&model, &steps)?;
            eprintln!("max tpl {}", trace.max_tpl());
            write_trace(&trace, &mut body).map_err(buffer_io)?;
            emit(out.as_deref(), seed, &body)
        }
        Command::Supremum { p, eps } => {
            let r = leakage_supremum(&load_matrix_csv(p)?, eps)?;
            let value = match r.kind {
                Supremum::Finite(v) => fmt_f64(v),
                Supremum::NotExist => "none".into(),
            };
            writeln!(body, "eps,case,q,d,supremum").map_err(buffer_io)?;
            writeln!(body, "{},{},{},{},{value}", fmt_f64(eps), r.case_id, fmt_f64(r.q), fmt_f64(r.d))
                .map_err(buffer_io)?;
            emit(None, seed, &body)
        }
        Command::Allocate { alg, alpha, horizon, model, out } => {
            let users = [model.load()?];
            let allocation = if alg == "2" {
                allocate_by_upper_bound(&users, alpha)?
            } else {
                allocate_by_quantification(&users, alpha, horizon)?
            };
            for u in &allocation.per_user {
                eprintln!(
                    "alpha_b {} alpha_f {} eps_b {} eps_f {} steps {}",
                    u.alpha_b, u.alpha_f, u.eps_b, u.eps_f, u.bisection_steps
                );
            }
            write_schedule(&allocation.schedule, Some(horizon), &mut body)?;
            emit(out.as_deref(), seed, &body)
        }
        Command::Generate { kind, n, s, out } => {
            let m: TransitionMatrix = match kind {
                Kind::Strongest => strongest_matrix(n, &cycle_permutation(n))?,
                Kind::Smoothed => smooth(&strongest_matrix(n, &cycle_permutation(n))?, s)?,
                Kind::Random => random_stochastic(n, seed)?,
            };
            write_matrix(&m, &mut body).map_err(buffer_io)?;
            emit(out.as_deref(), seed, &body)
        }
        Command::Release { counts, schedule, out } => {
            let file = File::open(&counts).map_err(|e| Error::Io { path: counts.clone(), source: e })?;
            let rows = ingest_counts(file)?;
            let snapshots = release_sequence(&rows, &load_schedule_csv(schedule)?, seed)?;
            write_release(&snapshots, &mut body).map_err(buffer_io)?;
            emit(out.as_deref(), seed, &body)
        }
        Command::Utility { a, b, horizon, trials, out } => {
            let cmp = compare_utility(&load_schedule_csv(a)?, &load_schedule_csv(b)?, horizon, trials, seed)?;
            writeln!(
                body,
                "{},a_{},b_{},a_{},b_{}",
                UTILITY_HEADER[0], UTILITY_HEADER[1], UTILITY_HEADER[1], UTILITY_HEADER[2], UTILITY_HEADER[2]
            )
            .map_err(buffer_io)?;
            for (x, y) in cmp.a.iter().zip(&cmp.b) {
                writeln!(
                    body,
                    "{},{},{},{},{}",
                    x.t,
                    fmt_f64(x.analytic_abs_noise),
                    fmt_f64(y.analytic_abs_noise),
                    fmt_f64(x.empirical_abs_noise),
                    fmt_f64(y.empirical_abs_noise)
                )
                .map_err(buffer_io)?;
            }
            eprintln!("a no worse at {} of {horizon} steps", cmp.a_no_worse_at().len());
            emit(out.as_deref(), seed, &body)
        }
        Command::Bench { n, alpha, reps, out } => {
            writeln!(body, "n,alpha,mean_runtime_ms").map_err(buffer_io)?;
            let reps = reps.max(1);
            for &size in &n {
                let matrices = (0..reps as u64)
                    .map(|r| random_stochastic(size, seed.wrapping_add(r)))
                    .collect::<Result<Vec<_>, _>>()?;
                for &a in &alpha {
                    let start = Instant::now();
                    for m in &matrices {
                        loss_increment(m, a)?;
                    }
                    let ms = start.elapsed().as_secs_f64() * 1e3 / reps as f64;
                    eprintln!("n={size} alpha={a}: {ms:.3} ms");
                    writeln!(body, "{size},{a},{ms}").map_err(buffer_io)?;
                }
            }
            emit(out.as_deref(), seed, &body)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
