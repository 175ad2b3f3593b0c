//! Command-line harness for the damped-qubit bottleneck experiment:
//! single traced runs, sweeps over the correlation index and the inverse
//! relevance weight, file-level e-projection, the divergence-sign probe,
//! and SVG rendering of emitted CSV tables.
//!
//! Exit codes: 0 success, 2 invariant violation, 3 non-convergence,
//! 4 I/O or parse error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gqab::bottleneck::IbProblem;
use gqab::channels::amplitude_damping_model;
use gqab::experiment::{
    inverse_beta_grid, run_single, sweep_beta, sweep_k, ExperimentConfig, SweepResult,
};
use gqab::io::{
    density_from_json, density_to_json, family_from_json, ib_trace_csv, parse_csv, read_file,
    sweep_csv, write_file,
};
use gqab::linop::DensityMatrix;
use gqab::mixture::e_project;
use gqab::plot::{render_svg, PlotSpec};
use gqab::solver::Termination;
use gqab::{Error, Result, SolverConfig};

#[derive(Parser)]
#[command(
    name = "gqab",
    version,
    about = "Alternating-minimization bottleneck solver and experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

/// Model and solver settings shared by the run, sweep, and probe verbs.
/// Defaults reproduce the damped-qubit study.
#[derive(Args, Clone)]
struct ModelArgs {
    /// Damping strength of the relevance channel.
    #[arg(long, default_value_t = 0.7)]
    lambda: f64,
    /// Mixing weight of the source's first qubit.
    #[arg(long, default_value_t = 0.3)]
    p: f64,
    /// Number of correlation indices; k ranges over 0..n.
    #[arg(long, default_value_t = 40)]
    n: usize,
    /// Correlation index of the initial state.
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// Compression weight.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Relevance weight.
    #[arg(long, default_value_t = 5.0)]
    beta: f64,
    /// Descent step weight; defaults to alpha, which certifies descent.
    #[arg(long)]
    gamma: Option<f64>,
    /// Seed of the ancilla-scrambling unitary.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Iteration cap of the outer loop.
    #[arg(long = "max-iter", default_value_t = 5000)]
    max_iter: usize,
    /// Relative objective-change tolerance of the stopping rule.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Initial memory state: "mixed", "ground", or a density JSON path.
    #[arg(long = "rho-t", default_value = "mixed")]
    rho_t: String,
}

impl ModelArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let rho_t = match self.rho_t.as_str() {
            "mixed" => None,
            "ground" => Some(DensityMatrix::pure(
                &[2],
                &[1.0.into(), 0.0.into()],
            )?),
            path => Some(density_from_json(&read_file(Path::new(path))?)?),
        };
        let cfg = ExperimentConfig {
            lambda: self.lambda,
            p: self.p,
            n: self.n,
            k: self.k,
            alpha: self.alpha,
            beta: self.beta,
            seed: self.seed,
            rho_t,
            solver: SolverConfig {
                gamma: self.gamma.unwrap_or(self.alpha),
                tol_obj: self.tol,
                max_iters: self.max_iter,
                ..SolverConfig::default()
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// CSV header comments carrying the full configuration.
    fn comments(&self, extra: &[String]) -> Vec<String> {
        let mut lines = vec![
            format!("lambda = {}", self.lambda),
            format!("p = {}", self.p),
            format!("n = {}", self.n),
            format!("k = {}", self.k),
            format!("alpha = {}", self.alpha),
            format!("beta = {}", self.beta),
            format!("gamma = {}", self.gamma.unwrap_or(self.alpha)),
            format!("seed = {}", self.seed),
            format!("max_iter = {}", self.max_iter),
            format!("tol = {}", self.tol),
            format!("rho_t = {}", self.rho_t),
        ];
        lines.extend_from_slice(extra);
        lines
    }
}

#[derive(Subcommand)]
enum Verb {
    /// One traced run from the configured initial state.
    Run {
        #[command(flatten)]
        model: ModelArgs,
        /// Trace CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One converged run per correlation index k = 0..n, shared scrambler.
    SweepK {
        #[command(flatten)]
        model: ModelArgs,
        /// Sweep CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One converged run per inverse relevance weight on an inclusive grid.
    SweepBeta {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "inv-beta-min", default_value_t = 0.11)]
        inv_beta_min: f64,
        #[arg(long = "inv-beta-max", default_value_t = 0.3)]
        inv_beta_max: f64,
        #[arg(long = "inv-beta-step", default_value_t = 0.01)]
        inv_beta_step: f64,
        /// Sweep CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Information projection of a state file onto a family file.
    Project {
        /// Mixture-family JSON.
        family: PathBuf,
        /// Density-matrix JSON to project.
        state: PathBuf,
        /// Projected density JSON destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Gradient-norm tolerance of the inner solver.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Inner iteration cap.
        #[arg(long = "max-iter", default_value_t = 10_000)]
        max_iter: usize,
    },
    /// Randomized search for negative values of the induced divergence.
    ProbeXmq {
        #[command(flatten)]
        model: ModelArgs,
        /// Number of seeded family pairs to evaluate.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Witness JSON destination; summary goes to stdout regardless.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a trace or sweep CSV as an SVG line chart.
    Plot {
        /// CSV produced by run, sweep-k, or sweep-beta.
        csv: PathBuf,
        /// X column; first column when absent.
        #[arg(long)]
        x: Option<String>,
        /// Y columns; second column when absent.
        #[arg(long, value_delimiter = ',')]
        y: Vec<String>,
        /// Chart title; CSV file name when absent.
        #[arg(long)]
        title: Option<String>,
        /// SVG destination.
        #[arg(long)]
        out: PathBuf,
    },
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Writes whatever a sweep completed, then reports the first failure if
/// one aborted it. Completed rows always reach the output.
fn finish_sweep(result: &SweepResult, comments: Vec<String>, out: &Option<PathBuf>) -> Result<u8> {
    emit(out, &sweep_csv(&result.rows, &comments))?;
    if let Some((param, err)) = &result.failure {
        eprintln!("error: sweep aborted at param = {param}: {err}");
        eprintln!("completed rows were flushed");
        return Ok(exit_code(err));
    }
    let stalled: Vec<f64> = result
        .rows
        .iter()
        .filter(|r| !r.converged)
        .map(|r| r.param)
        .collect();
    if !stalled.is_empty() {
        eprintln!("runs at params {stalled:?} hit the iteration cap");
        return Ok(3);
    }
    Ok(0)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. }
        | Error::Json { .. }
        | Error::CsvParse { .. }
        | Error::EmptyCsv
        | Error::UnknownColumn(_)
        | Error::Format { .. }
        | Error::BadParameter { .. } => 4,
        Error::ProjectionDidNotConverge { .. } => 3,
        _ => 2,
    }
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.verb {
        Verb::Run { model, out } => {
            let cfg = model.config()?;
            let run = run_single(&cfg)?;
            let csv = ib_trace_csv(&run.trace, &run.decompositions, &model.comments(&[]))?;
            emit(&out, &csv)?;
            eprintln!(
                "{} after {} iterations, objective {:.12e}",
                run.trace.termination,
                run.trace.iterations(),
                run.trace.final_objective()
            );
            if !run.trace.monotone {
                eprintln!("warning: descent certificate failed on some step; see the trace");
            }
            Ok(match run.trace.termination {
                Termination::Converged => 0,
                Termination::MaxIters => 3,
            })
        }
        Verb::SweepK { model, out } => {
            let cfg = model.config()?;
            let ks: Vec<usize> = (0..cfg.n).collect();
            let result = sweep_k(&cfg, &ks)?;
            finish_sweep(&result, model.comments(&["sweep = k".into()]), &out)
        }
        Verb::SweepBeta {
            model,
            inv_beta_min,
            inv_beta_max,
            inv_beta_step,
            out,
        } => {
            let cfg = model.config()?;
            let grid = inverse_beta_grid(inv_beta_min, inv_beta_max, inv_beta_step)?;
            let result = sweep_beta(&cfg, &grid)?;
            finish_sweep(&result, model.comments(&["sweep = inv_beta".into()]), &out)
        }
        Verb::Project {
            family,
            state,
            out,
            tol,
            max_iter,
        } => {
            let fam = family_from_json(&read_file(&family)?)?;
            let rho = density_from_json(&read_file(&state)?)?;
            let cfg = SolverConfig {
                tol_proj: tol,
                max_proj_iters: max_iter,
                ..SolverConfig::default()
            };
            let result = e_project(&rho, &fam, &cfg)?;
            emit(&out, &density_to_json(&result.projected))?;
            eprintln!(
                "projected in {} inner iterations, gradient norm {:.3e}",
                result.iterations, result.grad_norm
            );
            Ok(0)
        }
        Verb::ProbeXmq { model, trials, out } => {
            let (rho_x, channel) = amplitude_damping_model(model.lambda, model.p)?;
            let problem = IbProblem::new(rho_x, channel, model.alpha, model.beta, 2)?;
            let probe = problem.probe_min_divergence(trials, model.seed)?;
            println!("min_value = {:.17e}", probe.min_value);
            println!("finite_trials = {} of {trials}", probe.finite_trials);
            println!(
                "negative_found = {}",
                probe.min_value < 0.0 && probe.min_value.is_finite()
            );
            if let Some(path) = out {
                let witness = probe.witness.as_ref().map(|(a, b)| {
                    serde_json::json!({
                        "a": serde_json::from_str::<serde_json::Value>(&density_to_json(a))
                            .expect("valid json"),
                        "b": serde_json::from_str::<serde_json::Value>(&density_to_json(b))
                            .expect("valid json"),
                    })
                });
                let doc = serde_json::json!({
                    "min_value": probe.min_value,
                    "finite_trials": probe.finite_trials,
                    "witness": witness,
                });
                write_file(
                    &path,
                    &serde_json::to_string_pretty(&doc).expect("serializable"),
                )?;
            }
            Ok(0)
        }
        Verb::Plot {
            csv,
            x,
            y,
            title,
            out,
        } => {
            let table = parse_csv(&read_file(&csv)?)?;
            let x_column = x.unwrap_or_else(|| table.columns[0].clone());
            let y_columns = if y.is_empty() {
                vec![table
                    .columns
                    .get(1)
                    .cloned()
                    .ok_or_else(|| Error::UnknownColumn("second column".into()))?]
            } else {
                y
            };
            let spec = PlotSpec {
                x_column,
                y_columns,
                title: title.unwrap_or_else(|| {
                    csv.file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "chart".into())
                }),
            };
            let svg = render_svg(&table, &spec)?;
            write_file(&out, &svg)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 4,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
