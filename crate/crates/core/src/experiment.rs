//! Damped-qubit bottleneck experiment: model construction, the
//! correlation-indexed series of initial states, single traced runs, and
//! sweeps over the correlation index and the trade-off weight.
//!
//! The source is a two-qubit state [(1-p)|+><+| + p I/2] (x) I/2 and the
//! relevance channel damps the first qubit by `lambda` then discards the
//! second. Initial states are built by purifying the source, scrambling
//! the ancilla pair with a seeded Haar unitary, rotating the memory qubit
//! conditioned on one ancilla qubit by the angle 2 pi k / n, and tracing
//! the ancillas out. k = 0 gives the uncorrelated product state, which is
//! a fixed point of the iteration; larger k seeds correlations that let
//! the solver leave it.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::bottleneck::{IbDecomposition, IbProblem};
use crate::channels::{amplitude_damping_model, purify};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::linop::{DensityMatrix, OperatorMatrix};
use crate::random::haar_unitary;
use crate::solver::{run_observed, step, RunTrace, Termination};

/// Memory dimension of the damped-qubit model.
pub const DIM_T: usize = 2;

/// Everything a reproducible run needs besides output destinations.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    /// Damping strength of the relevance channel.
    pub lambda: f64,
    /// Mixing weight of the source's first qubit.
    pub p: f64,
    /// Number of initial-state indices; k ranges over 0..n.
    pub n: usize,
    /// Correlation index of the initial state.
    pub k: usize,
    /// Compression weight.
    pub alpha: f64,
    /// Relevance weight.
    pub beta: f64,
    /// Seed for the ancilla-scrambling unitary.
    pub seed: u64,
    /// Memory state blended into the initial purification; maximally
    /// mixed when absent.
    pub rho_t: Option<DensityMatrix>,
    /// Engine settings; `solver.gamma` plays the role of gamma and should
    /// default to alpha.
    pub solver: SolverConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            lambda: 0.7,
            p: 0.3,
            n: 40,
            k: 20,
            alpha: 1.0,
            beta: 5.0,
            seed: 1,
            rho_t: None,
            solver: SolverConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::BadParameter {
                name: "n",
                value: 0.0,
                range: "[1, inf)",
            });
        }
        if self.k >= self.n {
            return Err(Error::BadParameter {
                name: "k",
                value: self.k as f64,
                range: "[0, n)",
            });
        }
        if let Some(rho_t) = &self.rho_t {
            if rho_t.dims() != [DIM_T] {
                return Err(Error::DimMismatch {
                    left: rho_t.dims().to_vec(),
                    right: vec![DIM_T],
                });
            }
        }
        self.solver.validate()
    }

    /// The bottleneck instance this configuration describes.
    pub fn problem(&self) -> Result<IbProblem> {
        let (rho_x, channel) = amplitude_damping_model(self.lambda, self.p)?;
        IbProblem::new(rho_x, channel, self.alpha, self.beta, DIM_T)
    }

    /// The seeded ancilla scrambler shared by every run of one sweep.
    pub fn scrambler(&self) -> OperatorMatrix {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        haar_unitary(&[2, 2], &mut rng)
    }

    fn rho_t(&self) -> DensityMatrix {
        self.rho_t
            .clone()
            .unwrap_or_else(|| DensityMatrix::maximally_mixed(&[DIM_T]))
    }
}

/// Memory rotation by `theta` about the x axis.
fn rotation_x(theta: f64) -> OperatorMatrix {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    OperatorMatrix::from_fn(&[2], |i, j| {
        if i == j {
            Complex64::new(c, 0.0)
        } else {
            Complex64::new(0.0, -s)
        }
    })
}

/// Initial state with correlation index `k`: purify the source onto an
/// ancilla pair, scramble the ancillas with `u_rand`, rotate the memory
/// by 2 pi k / n conditioned on the second ancilla qubit, trace the
/// ancillas out. The source marginal is untouched by construction, so the
/// output lies in the constraint family for every k and scrambler.
pub fn initial_state(
    cfg: &ExperimentConfig,
    k: usize,
    u_rand: &OperatorMatrix,
) -> Result<DensityMatrix> {
    cfg.validate()?;
    if k >= cfg.n {
        return Err(Error::BadParameter {
            name: "k",
            value: k as f64,
            range: "[0, n)",
        });
    }
    if u_rand.dims() != [2, 2] {
        return Err(Error::DimMismatch {
            left: u_rand.dims().to_vec(),
            right: vec![2, 2],
        });
    }
    u_rand.require_unitary(1e-10)?;

    let (rho_x, _) = amplitude_damping_model(cfg.lambda, cfg.p)?;
    // Subsystem layout: (X1, X2, X1', X2', T).
    let pur = purify(&rho_x)?.state();
    let full = pur.tensor_with(&cfg.rho_t());

    let theta = 2.0 * std::f64::consts::PI * (k as f64) / (cfg.n as f64);
    let proj0 = OperatorMatrix::from_fn(&[2], |i, j| {
        if (i, j) == (0, 0) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let proj1 = OperatorMatrix::from_fn(&[2], |i, j| {
        if (i, j) == (1, 1) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let ident2 = OperatorMatrix::identity(&[2]);
    let controlled = &proj0.tensor(&ident2) + &proj1.tensor(&rotation_x(theta));

    let scramble = OperatorMatrix::identity(&[2, 2])
        .tensor(u_rand)
        .tensor(&ident2);
    let rotate = OperatorMatrix::identity(&[2, 2, 2]).tensor(&controlled);
    let evolved = full
        .as_operator()
        .conjugate_by(&scramble)?
        .conjugate_by(&rotate)?;
    let reduced = evolved.partial_trace(&[0, 1, 4])?;
    DensityMatrix::try_new(reduced)?.permuted(&[2, 0, 1])
}

/// A single run's full history plus the entropic split of every iterate.
pub struct ExperimentRun {
    pub trace: RunTrace,
    pub decompositions: Vec<IbDecomposition>,
}

/// One traced run from the configured initial state.
pub fn run_single(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    cfg.validate()?;
    let problem = cfg.problem()?;
    let init = initial_state(cfg, cfg.k, &cfg.scrambler())?;
    run_from(cfg, &problem, &init)
}

fn run_from(
    cfg: &ExperimentConfig,
    problem: &IbProblem,
    init: &DensityMatrix,
) -> Result<ExperimentRun> {
    let mut decompositions = Vec::new();
    let mut observe_err: Option<Error> = None;
    let trace = run_observed(problem, init, problem.family(), &cfg.solver, |_, state| {
        match problem.decompose(state) {
            Ok(d) => decompositions.push(d),
            Err(e) => {
                if observe_err.is_none() {
                    observe_err = Some(e);
                }
            }
        }
    })?;
    if let Some(e) = observe_err {
        return Err(e);
    }
    Ok(ExperimentRun {
        trace,
        decompositions,
    })
}

/// How far the converged state moves under one more update.
pub fn fixpoint_residual(
    cfg: &ExperimentConfig,
    problem: &IbProblem,
    state: &DensityMatrix,
) -> Result<f64> {
    let moved = step(problem, state, problem.family(), &cfg.solver)?;
    state.trace_distance(&moved)
}

/// One sweep entry.
#[derive(Clone, Copy, Debug)]
pub struct SweepRow {
    /// Swept parameter value: the correlation index or the inverse weight.
    pub param: f64,
    pub objective: f64,
    pub iters: usize,
    pub monotone: bool,
    pub fixpoint_residual: f64,
    /// Whether the run stopped on the objective tolerance rather than the
    /// iteration cap; not a CSV column, but callers report it.
    pub converged: bool,
}

/// Completed rows in sweep order, plus the first failure if the sweep
/// aborted; completed rows survive so callers can flush partial results.
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub failure: Option<(f64, Error)>,
}

fn sweep<P: Sync + Copy + Send>(
    params: &[P],
    param_value: impl Fn(P) -> f64 + Sync,
    one: impl Fn(P) -> Result<SweepRow> + Sync,
) -> SweepResult {
    let outcomes: Vec<(f64, Result<SweepRow>)> = params
        .par_iter()
        .map(|&p| (param_value(p), one(p)))
        .collect();
    let mut rows = Vec::new();
    let mut failure = None;
    for (param, outcome) in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(e) => {
                failure = Some((param, e));
                break;
            }
        }
    }
    SweepResult { rows, failure }
}

fn row_for(cfg: &ExperimentConfig, problem: &IbProblem, param: f64, init: &DensityMatrix) -> Result<SweepRow> {
    let run = run_from(cfg, problem, init)?;
    let residual = fixpoint_residual(cfg, problem, &run.trace.final_state)?;
    Ok(SweepRow {
        param,
        objective: run.trace.final_objective(),
        iters: run.trace.iterations(),
        monotone: run.trace.monotone,
        fixpoint_residual: residual,
        converged: matches!(run.trace.termination, Termination::Converged),
    })
}

/// One converged run per correlation index, sharing the seeded scrambler.
pub fn sweep_k(cfg: &ExperimentConfig, ks: &[usize]) -> Result<SweepResult> {
    cfg.validate()?;
    let problem = cfg.problem()?;
    let u_rand = cfg.scrambler();
    for &k in ks {
        if k >= cfg.n {
            return Err(Error::BadParameter {
                name: "k",
                value: k as f64,
                range: "[0, n)",
            });
        }
    }
    Ok(sweep(
        ks,
        |k| k as f64,
        |k| {
            let init = initial_state(cfg, k, &u_rand)?;
            row_for(cfg, &problem, k as f64, &init)
        },
    ))
}

/// One converged run per inverse relevance weight, at the configured k.
pub fn sweep_beta(cfg: &ExperimentConfig, inv_betas: &[f64]) -> Result<SweepResult> {
    cfg.validate()?;
    let u_rand = cfg.scrambler();
    for &ib in inv_betas {
        if !(ib.is_finite() && ib > 0.0) {
            return Err(Error::BadParameter {
                name: "inv_beta",
                value: ib,
                range: "(0, inf)",
            });
        }
    }
    Ok(sweep(
        inv_betas,
        |inv_beta| inv_beta,
        |inv_beta| {
            let beta_cfg = ExperimentConfig {
                beta: 1.0 / inv_beta,
                ..cfg.clone()
            };
            let problem = beta_cfg.problem()?;
            let init = initial_state(&beta_cfg, beta_cfg.k, &u_rand)?;
            row_for(&beta_cfg, &problem, inv_beta, &init)
        },
    ))
}

/// Inclusive arithmetic grid used for the inverse-weight sweep; endpoints
/// land exactly on multiples of `step` from `min`.
pub fn inverse_beta_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(min.is_finite() && min > 0.0) {
        return Err(Error::BadParameter {
            name: "inv_beta_min",
            value: min,
            range: "(0, inf)",
        });
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::BadParameter {
            name: "inv_beta_step",
            value: step,
            range: "(0, inf)",
        });
    }
    if !(max.is_finite() && max >= min) {
        return Err(Error::BadParameter {
            name: "inv_beta_max",
            value: max,
            range: "[inv_beta_min, inf)",
        });
    }
    let count = ((max - min) / step + 0.5).floor() as usize;
    Ok((0..=count).map(|i| min + step * i as f64).collect())
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::random::random_density;

    fn ground_memory() -> DensityMatrix {
        DensityMatrix::pure(
            &[DIM_T],
            &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        )
        .unwrap()
    }

    fn source() -> DensityMatrix {
        amplitude_damping_model(0.7, 0.3).unwrap().0
    }

    #[test]
    fn memory_rotation_at_pi_is_the_bit_flip() {
        let r = rotation_x(std::f64::consts::PI);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, -1.0)
                };
                assert!((r.matrix()[(i, j)] - want).norm() < 1e-15);
            }
        }
        r.require_unitary(1e-12).unwrap();
    }

    #[test]
    fn mixed_memory_initials_collapse_to_the_product() {
        // With the maximally mixed memory default, the conditional rotation
        // acts on a state it cannot imprint on: the traced output is the
        // plain product for every index and every scrambler.
        let product = DensityMatrix::maximally_mixed(&[DIM_T]).tensor_with(&source());
        for seed in [1_u64, 9, 4242] {
            let cfg = ExperimentConfig {
                seed,
                ..ExperimentConfig::default()
            };
            let u = cfg.scrambler();
            for k in [0_usize, 7, 20, 33] {
                let init = initial_state(&cfg, k, &u).unwrap();
                assert!(init.trace_distance(&product).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn ground_memory_initials_depend_on_the_index() {
        let cfg = ExperimentConfig {
            rho_t: Some(ground_memory()),
            ..ExperimentConfig::default()
        };
        let u = cfg.scrambler();
        let at = |k| initial_state(&cfg, k, &u).unwrap();
        let product = ground_memory().tensor_with(&source());
        assert!(at(0).trace_distance(&product).unwrap() < 1e-12);
        assert!(at(20).trace_distance(&at(0)).unwrap() > 1e-2);
        assert!(at(20).trace_distance(&at(10)).unwrap() > 1e-2);
    }

    #[test]
    fn index_zero_leaves_any_memory_untouched() {
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        for _ in 0..10 {
            let rho_t = random_density(&[DIM_T], 2, &mut rng);
            let cfg = ExperimentConfig {
                rho_t: Some(rho_t.clone()),
                seed: rng.random(),
                ..ExperimentConfig::default()
            };
            let init = initial_state(&cfg, 0, &cfg.scrambler()).unwrap();
            let product = rho_t.tensor_with(&source());
            assert!(init.trace_distance(&product).unwrap() < 1e-12);
        }
    }

    #[test]
    fn initial_states_sit_inside_the_constraint_family() {
        let mut rng = ChaCha12Rng::seed_from_u64(5150);
        let problem = ExperimentConfig::default().problem().unwrap();
        for trial in 0..40 {
            let rank = 1 + trial % 2;
            let cfg = ExperimentConfig {
                rho_t: Some(random_density(&[DIM_T], rank, &mut rng)),
                seed: rng.random(),
                k: rng.random_range(0..40),
                ..ExperimentConfig::default()
            };
            let init = initial_state(&cfg, cfg.k, &cfg.scrambler()).unwrap();
            assert_eq!(init.dims(), [2, 2, 2]);
            assert!(init.marginal(&[1, 2]).unwrap().trace_distance(&source()).unwrap() < 1e-12);
            assert!(problem.family().residual(&init).unwrap() < 1e-12);
        }
    }

    #[test]
    fn initial_state_rejects_bad_arguments() {
        let cfg = ExperimentConfig::default();
        let u = cfg.scrambler();
        assert!(matches!(
            initial_state(&cfg, 40, &u),
            Err(Error::BadParameter { name: "k", .. })
        ));
        let skew = OperatorMatrix::identity(&[2, 2]).scale(0.5);
        assert!(initial_state(&cfg, 3, &skew).is_err());
        let wrong_dims = OperatorMatrix::identity(&[4]);
        assert!(matches!(
            initial_state(&cfg, 3, &wrong_dims),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn config_validation_rejects_degenerate_shapes() {
        let ok = ExperimentConfig::default();
        ok.validate().unwrap();
        assert!(ExperimentConfig { n: 0, k: 0, ..ok.clone() }.validate().is_err());
        assert!(ExperimentConfig { k: 40, ..ok.clone() }.validate().is_err());
        assert!(ExperimentConfig {
            rho_t: Some(DensityMatrix::maximally_mixed(&[2, 2])),
            ..ok.clone()
        }
        .validate()
        .is_err());
        let mut bad_solver = ok.clone();
        bad_solver.solver.gamma = 0.0;
        assert!(bad_solver.validate().is_err());
    }

    #[test]
    fn default_run_settles_on_the_product_fixed_point() {
        let run = run_single(&ExperimentConfig::default()).unwrap();
        assert!(run.trace.monotone);
        assert!(run.trace.final_objective().abs() < 1e-9);
        assert_eq!(run.decompositions.len(), run.trace.records.len());
        let last = run.decompositions.last().unwrap();
        assert!(last.i_tx.abs() < 1e-9);
        assert!(last.i_ty.abs() < 1e-9);
    }

    #[test]
    fn single_point_weight_sweep_matches_a_direct_run() {
        let cfg = ExperimentConfig::default();
        let swept = sweep_beta(&cfg, &[0.2]).unwrap();
        assert!(swept.failure.is_none());
        assert_eq!(swept.rows.len(), 1);
        let row = swept.rows[0];
        let direct = run_single(&cfg).unwrap();
        assert_eq!(row.param, 0.2);
        assert_eq!(row.objective.to_bits(), direct.trace.final_objective().to_bits());
        assert_eq!(row.iters, direct.trace.iterations());
        assert!(row.monotone);
    }

    #[test]
    fn index_sweep_is_deterministic_and_keeps_order() {
        let cfg = ExperimentConfig::default();
        let ks = [0_usize, 10, 20];
        let first = sweep_k(&cfg, &ks).unwrap();
        let second = sweep_k(&cfg, &ks).unwrap();
        assert!(first.failure.is_none());
        assert_eq!(first.rows.len(), 3);
        for (a, b) in first.rows.iter().zip(&second.rows) {
            assert_eq!(a.param, b.param);
            assert_eq!(a.objective.to_bits(), b.objective.to_bits());
            assert_eq!(a.fixpoint_residual.to_bits(), b.fixpoint_residual.to_bits());
        }
        let params: Vec<f64> = first.rows.iter().map(|r| r.param).collect();
        assert_eq!(params, [0.0, 10.0, 20.0]);
        assert!(matches!(
            sweep_k(&cfg, &[41]),
            Err(Error::BadParameter { name: "k", .. })
        ));
    }

    #[test]
    fn inverse_weight_grid_hits_the_endpoints() {
        let grid = inverse_beta_grid(0.11, 0.3, 0.01).unwrap();
        assert_eq!(grid.len(), 20);
        assert!((grid[0] - 0.11).abs() < 1e-15);
        assert!((grid[19] - 0.30).abs() < 1e-12);
        for pair in grid.windows(2) {
            assert!((pair[1] - pair[0] - 0.01).abs() < 1e-12);
        }
        assert_eq!(inverse_beta_grid(0.2, 0.2, 0.05).unwrap(), vec![0.2]);
        assert!(inverse_beta_grid(0.0, 0.3, 0.01).is_err());
        assert!(inverse_beta_grid(0.3, 0.1, 0.01).is_err());
        assert!(inverse_beta_grid(0.1, 0.3, 0.0).is_err());
    }

    #[test]
    fn sweep_flushes_rows_before_the_first_failure() {
        // A ground-state memory at strong relevance weight drives the
        // iteration onto the clamp floor where the descent certificate
        // genuinely fails; the sweep must keep the benign row and report
        // the failing parameter.
        let cfg = ExperimentConfig {
            rho_t: Some(ground_memory()),
            ..ExperimentConfig::default()
        };
        let result = sweep_beta(&cfg, &[0.5, 0.1]).unwrap();
        assert_eq!(result.rows.len(), 1);
        assert_eq!(result.rows[0].param, 0.5);
        match result.failure {
            Some((param, Error::MonotonicityViolated { .. })) => {
                assert_eq!(param, 0.1)
            }
            other => panic!("expected a monotonicity failure, got {other:?}"),
        }
    }
}
