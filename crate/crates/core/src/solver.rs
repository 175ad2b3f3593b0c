//! Fixed-point iteration minimizing `Tr rho Omega[rho]` over a mixture
//! family.
//!
//! One outer step sends sigma to `Gamma[F[sigma]]`, where
//!
//! ```text
//! F[sigma] = exp(log sigma - Omega[sigma]/gamma) / kappa[sigma]
//! ```
//!
//! with kappa normalizing the trace, and Gamma is the information
//! projection onto the family. Whenever the functional obeys the dominance
//! condition
//!
//! ```text
//! D_Omega(rho||sigma) := Tr rho (Omega[rho] - Omega[sigma])
//!                     <= gamma D(rho||sigma)
//! ```
//!
//! between consecutive iterates, the objective cannot increase, and the
//! per-step progress bound gamma D(rho_t||rho_{t+1}) <= G(rho_t) -
//! G(rho_{t+1}) holds. The run records both as per-iteration diagnostics
//! instead of assuming them.

use crate::config::SolverConfig;
use crate::entropy::rel_entropy;
use crate::error::{Error, Result};
use crate::linop::{DensityMatrix, OperatorMatrix};
use crate::mixture::{e_project, e_project_from, MixtureFamily};

/// Largest imaginary residue tolerated in a trace that must be real.
pub const TOL_IMAG: f64 = 1e-10;
/// Hermiticity tolerance applied to functional outputs.
const TOL_OMEGA_HERM: f64 = 1e-10;
/// Slack in the per-step dominance check.
const TOL_MONO: f64 = 1e-12;
/// Objective increase treated as a violation when dominance held.
const TOL_OBJ_RISE: f64 = 1e-9;
/// Family membership tolerance required of initial points.
const TOL_FAMILY_PRE: f64 = 1e-8;
/// Consecutive small relative changes required before stopping.
const CONVERGENCE_WINDOW: usize = 3;

/// A functional `G(rho) = Tr rho Omega[rho]` described by its operator field.
pub trait ObjectiveFunctional {
    fn name(&self) -> &str;
    /// The Hermitian operator `Omega[rho]`.
    fn omega(&self, rho: &DensityMatrix) -> Result<OperatorMatrix>;
}

fn checked_omega<F: ObjectiveFunctional + ?Sized>(
    f: &F,
    rho: &DensityMatrix,
) -> Result<OperatorMatrix> {
    let om = f.omega(rho)?;
    om.require_hermitian(TOL_OMEGA_HERM)?;
    if om.dims() != rho.dims() {
        return Err(Error::DimMismatch {
            left: om.dims().to_vec(),
            right: rho.dims().to_vec(),
        });
    }
    Ok(om.symmetrize())
}

fn real_trace_product(rho: &DensityMatrix, om: &OperatorMatrix) -> Result<f64> {
    let t = rho.as_operator().hs_inner(om)?;
    if t.im.abs() > TOL_IMAG {
        return Err(Error::ImaginaryResidue(t.im.abs()));
    }
    Ok(t.re)
}

/// Objective value `G(rho) = Tr rho Omega[rho]`.
pub fn objective<F: ObjectiveFunctional + ?Sized>(f: &F, rho: &DensityMatrix) -> Result<f64> {
    let om = checked_omega(f, rho)?;
    real_trace_product(rho, &om)
}

/// Output of the fixed-point map before projection.
#[derive(Clone, Debug)]
pub struct F3Result {
    pub state: DensityMatrix,
    /// `log kappa[sigma] = log Tr exp(log sigma - Omega[sigma]/gamma)`.
    pub log_kappa: f64,
}

fn f3_given(
    sigma: &DensityMatrix,
    om: &OperatorMatrix,
    gamma: f64,
    eps_clamp: f64,
) -> Result<F3Result> {
    let exponent = &sigma.log_clamped(eps_clamp)? - &om.scale(1.0 / gamma);
    let (state, log_kappa) = exponent.exp_normalized()?;
    Ok(F3Result { state, log_kappa })
}

/// The fixed-point map `F[sigma] = exp(log sigma - Omega[sigma]/gamma)/kappa`.
pub fn f3<F: ObjectiveFunctional + ?Sized>(
    f: &F,
    sigma: &DensityMatrix,
    gamma: f64,
    eps_clamp: f64,
) -> Result<F3Result> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::BadParameter {
            name: "gamma",
            value: gamma,
            range: "(0, inf)",
        });
    }
    let om = checked_omega(f, sigma)?;
    f3_given(sigma, &om, gamma, eps_clamp)
}

/// Functional divergence `D_Omega(rho||sigma) = Tr rho (Omega[rho] - Omega[sigma])`.
pub fn d_omega<F: ObjectiveFunctional + ?Sized>(
    f: &F,
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
) -> Result<f64> {
    let om_rho = checked_omega(f, rho)?;
    let om_sigma = checked_omega(f, sigma)?;
    if om_rho.dims() != om_sigma.dims() {
        return Err(Error::DimMismatch {
            left: om_rho.dims().to_vec(),
            right: om_sigma.dims().to_vec(),
        });
    }
    Ok(real_trace_product(rho, &om_rho)? - real_trace_product(rho, &om_sigma)?)
}

/// Surrogate `J_gamma(rho, sigma) = gamma D(rho||sigma) + Tr rho Omega[sigma]`;
/// +infinity when the relative entropy diverges.
pub fn j_gamma<F: ObjectiveFunctional + ?Sized>(
    f: &F,
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    gamma: f64,
) -> Result<f64> {
    let d = rel_entropy(rho, sigma)?;
    if d.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let om = checked_omega(f, sigma)?;
    Ok(gamma * d + real_trace_product(rho, &om)?)
}

/// One outer update `Gamma[F[sigma]]`, cold-starting the projection.
pub fn step<F: ObjectiveFunctional + ?Sized>(
    f: &F,
    sigma: &DensityMatrix,
    fam: &MixtureFamily,
    cfg: &SolverConfig,
) -> Result<DensityMatrix> {
    cfg.validate()?;
    let residual = fam.residual(sigma)?;
    if residual > TOL_FAMILY_PRE {
        return Err(Error::OutsideFamily {
            residual,
            tol: TOL_FAMILY_PRE,
        });
    }
    let mapped = f3(f, sigma, cfg.gamma, cfg.eps_clamp)?;
    Ok(e_project(&mapped.state, fam, cfg)?.projected)
}

/// How a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// Relative objective change stayed below tolerance for the window.
    Converged,
    /// The iteration cap was reached first.
    MaxIters,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::Converged => write!(f, "converged"),
            Termination::MaxIters => write!(f, "max-iters"),
        }
    }
}

/// Per-iterate diagnostics; one record per visited state.
#[derive(Clone, Debug)]
pub struct IterRecord {
    /// 1-based iterate index.
    pub iter: usize,
    /// Objective at this iterate.
    pub objective: f64,
    /// Family constraint residual at this iterate.
    pub residual: f64,
    /// D(rho_t||rho_{t+1}); NaN on the final record, which has no successor.
    pub step_relent: f64,
    /// Projection descent steps spent producing the next iterate; zero on
    /// the final record.
    pub proj_iters: usize,
    /// Whether the dominance condition held on the step leaving this
    /// iterate; vacuously true on the final record.
    pub monotone_ok: bool,
}

/// Full history of a run.
#[derive(Clone, Debug)]
pub struct RunTrace {
    pub records: Vec<IterRecord>,
    pub final_state: DensityMatrix,
    pub termination: Termination,
    /// True when every step satisfied the dominance condition, so the
    /// descent guarantee applied end to end.
    pub monotone: bool,
}

impl RunTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_objective(&self) -> f64 {
        self.records.last().map(|r| r.objective).unwrap_or(f64::NAN)
    }
}

/// Iterate `rho -> Gamma[F[rho]]` from `rho_init` until the relative
/// objective change stays below `cfg.tol_obj` for three consecutive
/// iterations or `cfg.max_iters` iterates have been visited.
pub fn run<F: ObjectiveFunctional + ?Sized>(
    f: &F,
    rho_init: &DensityMatrix,
    fam: &MixtureFamily,
    cfg: &SolverConfig,
) -> Result<RunTrace> {
    run_observed(f, rho_init, fam, cfg, |_, _| {})
}

/// [`run`] with a per-iterate callback, invoked on every visited state in
/// order; callers use it to collect quantities the generic trace omits.
pub fn run_observed<F: ObjectiveFunctional + ?Sized>(
    f: &F,
    rho_init: &DensityMatrix,
    fam: &MixtureFamily,
    cfg: &SolverConfig,
    mut observe: impl FnMut(usize, &DensityMatrix),
) -> Result<RunTrace> {
    cfg.validate()?;
    let initial_residual = fam.residual(rho_init)?;
    if initial_residual > TOL_FAMILY_PRE {
        return Err(Error::OutsideFamily {
            residual: initial_residual,
            tol: TOL_FAMILY_PRE,
        });
    }

    let mut rho = rho_init.clone();
    let mut om = checked_omega(f, &rho)?;
    let mut g = real_trace_product(&rho, &om)?;
    let mut tau = vec![0.0; fam.len()];
    let mut records: Vec<IterRecord> = Vec::new();
    let mut streak = 0usize;
    let mut monotone = true;
    let mut termination = Termination::MaxIters;

    observe(1, &rho);
    for t in 1..cfg.max_iters {
        let mapped = f3_given(&rho, &om, cfg.gamma, cfg.eps_clamp)?;
        let proj = e_project_from(&mapped.state, fam, cfg, &tau)?;
        let next = proj.projected;
        let om_next = checked_omega(f, &next)?;
        let g_next = real_trace_product(&next, &om_next)?;

        let step_relent = rel_entropy(&rho, &next)?;
        let d_back = rel_entropy(&next, &rho)?;
        let dom = real_trace_product(&next, &om_next)? - real_trace_product(&next, &om)?;
        let monotone_ok = dom <= cfg.gamma * d_back + TOL_MONO;
        if monotone_ok && g_next > g + TOL_OBJ_RISE {
            return Err(Error::MonotonicityViolated {
                iteration: t,
                increase: g_next - g,
            });
        }
        monotone &= monotone_ok;

        records.push(IterRecord {
            iter: t,
            objective: g,
            residual: fam.residual(&rho)?,
            step_relent,
            proj_iters: proj.iterations,
            monotone_ok,
        });

        let rel_change = (g - g_next).abs() / g.abs().max(1.0);
        streak = if rel_change <= cfg.tol_obj { streak + 1 } else { 0 };

        rho = next;
        om = om_next;
        g = g_next;
        tau = proj.tau;
        observe(t + 1, &rho);

        if streak >= CONVERGENCE_WINDOW {
            termination = Termination::Converged;
            break;
        }
    }

    records.push(IterRecord {
        iter: records.len() + 1,
        objective: g,
        residual: fam.residual(&rho)?,
        step_relent: f64::NAN,
        proj_iters: 0,
        monotone_ok: true,
    });

    Ok(RunTrace {
        records,
        final_state: rho,
        termination,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{traceless_hermitian_basis, DEFAULT_EPS_CLAMP};
    use crate::random::{random_density, random_hermitian};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// Omega identically zero: every density is a fixed point.
    struct ZeroObjective;

    impl ObjectiveFunctional for ZeroObjective {
        fn name(&self) -> &str {
            "zero"
        }
        fn omega(&self, rho: &DensityMatrix) -> Result<OperatorMatrix> {
            Ok(OperatorMatrix::zeros(rho.dims()))
        }
    }

    /// Constant field Omega[rho] = H: the objective is linear in rho and
    /// D_Omega vanishes identically.
    struct ConstantObjective {
        h: OperatorMatrix,
    }

    impl ObjectiveFunctional for ConstantObjective {
        fn name(&self) -> &str {
            "constant"
        }
        fn omega(&self, _: &DensityMatrix) -> Result<OperatorMatrix> {
            Ok(self.h.clone())
        }
    }

    /// Omega[rho] = log rho - log ref, whose objective is D(rho||ref); its
    /// global minimum over any family is the projection of ref.
    struct RelativeEntropyObjective {
        reference: DensityMatrix,
    }

    impl ObjectiveFunctional for RelativeEntropyObjective {
        fn name(&self) -> &str {
            "relative-entropy"
        }
        fn omega(&self, rho: &DensityMatrix) -> Result<OperatorMatrix> {
            let log_rho = rho.log_clamped(DEFAULT_EPS_CLAMP)?;
            let log_ref = self.reference.log_clamped(DEFAULT_EPS_CLAMP)?;
            Ok(&log_rho - &log_ref)
        }
    }

    struct BrokenObjective;

    impl ObjectiveFunctional for BrokenObjective {
        fn name(&self) -> &str {
            "broken"
        }
        fn omega(&self, rho: &DensityMatrix) -> Result<OperatorMatrix> {
            Ok(OperatorMatrix::from_fn(rho.dims(), |i, j| {
                if i < j {
                    Complex64::new(0.0, 1.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }))
        }
    }

    fn toy_h() -> OperatorMatrix {
        OperatorMatrix::diagonal(&[2], &[0.0, 1.0]).unwrap()
    }

    #[test]
    fn zero_objective_is_fixed_by_the_map() {
        let mut rng = ChaCha12Rng::seed_from_u64(301);
        let cfg = SolverConfig::default();
        let full = random_density(&[2, 2], 4, &mut rng);
        let out = f3(&ZeroObjective, &full, 1.0, cfg.eps_clamp).unwrap();
        assert!(out.state.trace_distance(&full).unwrap() < 1e-10);
        assert!(out.log_kappa.abs() < 1e-10);

        // Rank-deficient states only move by the clamp floor.
        let low = random_density(&[2, 2], 2, &mut rng);
        let out = f3(&ZeroObjective, &low, 1.0, cfg.eps_clamp).unwrap();
        assert!(out.state.trace_distance(&low).unwrap() < 1e-10);

        assert!(objective(&ZeroObjective, &full).unwrap().abs() < 1e-15);

        let fam = MixtureFamily::trace_only(vec![2, 2]).unwrap();
        let next = step(&ZeroObjective, &full, &fam, &cfg).unwrap();
        assert!(next.trace_distance(&full).unwrap() < 1e-8);
    }

    #[test]
    fn constant_objective_follows_the_closed_form_recursion() {
        // H = diag(0, 1), gamma = 1, start I/2, trace-only family:
        // rho_t = diag(1, e^{1-t}) / (1 + e^{1-t}) and the objective is the
        // excited population e^{1-t}/(1 + e^{1-t}).
        let f = ConstantObjective { h: toy_h() };
        let fam = MixtureFamily::trace_only(vec![2]).unwrap();
        let cfg = SolverConfig {
            tol_obj: 1e-300,
            max_iters: 10,
            ..SolverConfig::default()
        };
        let mut states = Vec::new();
        let trace = run_observed(
            &f,
            &DensityMatrix::maximally_mixed(&[2]),
            &fam,
            &cfg,
            |_, rho| states.push(rho.clone()),
        )
        .unwrap();
        assert_eq!(trace.termination, Termination::MaxIters);
        assert_eq!(trace.records.len(), 10);
        assert!(trace.monotone);
        for (i, rec) in trace.records.iter().enumerate() {
            let t = (i + 1) as f64;
            let w = (1.0 - t).exp();
            let expect = w / (1.0 + w);
            assert!(
                (rec.objective - expect).abs() < 1e-12,
                "iterate {}: {} vs {}",
                rec.iter,
                rec.objective,
                expect
            );
            assert!(rec.monotone_ok);
            let top = states[i].matrix()[(0, 0)].re;
            assert!((top - 1.0 / (1.0 + w)).abs() < 1e-12);
        }
        // Progress bound gamma D(rho_t||rho_{t+1}) <= G_t - G_{t+1}.
        for pair in trace.records.windows(2) {
            let drop = pair[0].objective - pair[1].objective;
            assert!(cfg.gamma * pair[0].step_relent <= drop + 1e-9);
        }
        assert!(trace.records.last().unwrap().step_relent.is_nan());
    }

    #[test]
    fn constant_objective_converges_to_the_ground_state() {
        let f = ConstantObjective { h: toy_h() };
        let fam = MixtureFamily::trace_only(vec![2]).unwrap();
        let cfg = SolverConfig::default();
        let trace = run(&f, &DensityMatrix::maximally_mixed(&[2]), &fam, &cfg).unwrap();
        assert_eq!(trace.termination, Termination::Converged);
        assert!(trace.final_objective() < 1e-9);
        let ground = DensityMatrix::pure(&[2], &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])
            .unwrap();
        assert!(trace.final_state.trace_distance(&ground).unwrap() < 1e-4);

        // The limit is a fixed point of the update.
        let again = step(&f, &trace.final_state, &fam, &cfg).unwrap();
        assert!(trace.final_state.trace_distance(&again).unwrap() < 1e-6);
    }

    #[test]
    fn surrogate_identities_hold() {
        let mut rng = ChaCha12Rng::seed_from_u64(307);
        let cfg = SolverConfig::default();
        let basis = traceless_hermitian_basis(&[2, 2]);
        for trial in 0..20 {
            let fam = MixtureFamily::instantiated_at(
                basis.iter().take(2 + trial % 3).cloned().collect(),
                &random_density(&[2, 2], 4, &mut rng),
            )
            .unwrap();
            let sigma = crate::mixture::e_project(
                &random_density(&[2, 2], 4, &mut rng),
                &fam,
                &cfg,
            )
            .unwrap()
            .projected;
            let rho = crate::mixture::e_project(
                &random_density(&[2, 2], 4, &mut rng),
                &fam,
                &cfg,
            )
            .unwrap()
            .projected;

            let functionals: Vec<Box<dyn ObjectiveFunctional>> = vec![
                Box::new(ConstantObjective {
                    h: random_hermitian(&[2, 2], &mut rng),
                }),
                Box::new(RelativeEntropyObjective {
                    reference: random_density(&[2, 2], 4, &mut rng),
                }),
            ];
            for f in &functionals {
                let f = f.as_ref();
                let gamma = 1.0;
                // J at the diagonal recovers the objective.
                let jg = j_gamma(f, &rho, &rho, gamma).unwrap();
                assert!((jg - objective(f, &rho).unwrap()).abs() < 1e-9);

                // The projected map output minimizes J(., sigma) over the
                // family, with the explicit optimal value.
                let mapped = f3(f, &sigma, gamma, cfg.eps_clamp).unwrap();
                let star = crate::mixture::e_project(&mapped.state, &fam, &cfg)
                    .unwrap()
                    .projected;
                let j_star = j_gamma(f, &star, &sigma, gamma).unwrap();
                let explicit = gamma * rel_entropy(&star, &mapped.state).unwrap()
                    - gamma * mapped.log_kappa;
                assert!(
                    (j_star - explicit).abs() < 1e-7,
                    "optimal value formula: {j_star} vs {explicit}"
                );
                let j_rho = j_gamma(f, &rho, &sigma, gamma).unwrap();
                assert!(j_rho >= j_star - 1e-9);
                // Excess above the optimum is exactly the divergence from
                // the minimizer.
                let excess = gamma * rel_entropy(&rho, &star).unwrap();
                assert!(
                    (j_rho - j_star - excess).abs() < 1e-7,
                    "decomposition: {} vs {}",
                    j_rho - j_star,
                    excess
                );
            }
        }
    }

    #[test]
    fn d_omega_vanishes_on_the_diagonal_and_for_constants() {
        let mut rng = ChaCha12Rng::seed_from_u64(311);
        let rho = random_density(&[2], 2, &mut rng);
        let sigma = random_density(&[2], 2, &mut rng);
        let f = ConstantObjective {
            h: random_hermitian(&[2], &mut rng),
        };
        assert!(d_omega(&f, &rho, &sigma).unwrap().abs() < 1e-12);
        let g = RelativeEntropyObjective {
            reference: random_density(&[2], 2, &mut rng),
        };
        assert!(d_omega(&g, &rho, &rho).unwrap().abs() < 1e-12);
        // For the relative-entropy field, D_Omega(rho||sigma) = D(rho||sigma).
        let dom = d_omega(&g, &rho, &sigma).unwrap();
        let d = rel_entropy(&rho, &sigma).unwrap();
        assert!((dom - d).abs() < 1e-9);
    }

    #[test]
    fn engine_reaches_the_projection_of_the_reference() {
        // With Omega[rho] = log rho - log ref the objective is D(rho||ref),
        // whose family optimum is the information projection of ref; an
        // independent end-to-end oracle for the engine.
        let mut rng = ChaCha12Rng::seed_from_u64(313);
        let cfg = SolverConfig::default();
        let basis = traceless_hermitian_basis(&[2, 2]);
        let fam = MixtureFamily::instantiated_at(
            basis.iter().take(3).cloned().collect(),
            &random_density(&[2, 2], 4, &mut rng),
        )
        .unwrap();
        let reference = random_density(&[2, 2], 4, &mut rng);
        let f = RelativeEntropyObjective {
            reference: reference.clone(),
        };
        let start = crate::mixture::e_project(&random_density(&[2, 2], 4, &mut rng), &fam, &cfg)
            .unwrap()
            .projected;
        let trace = run(&f, &start, &fam, &cfg).unwrap();
        assert_eq!(trace.termination, Termination::Converged);
        assert!(trace.monotone);

        let target = crate::mixture::e_project(&reference, &fam, &cfg)
            .unwrap()
            .projected;
        assert!(
            trace.final_state.trace_distance(&target).unwrap() < 1e-6,
            "distance to projection {}",
            trace.final_state.trace_distance(&target).unwrap()
        );
        // Objective never increases along the recorded trace.
        for pair in trace.records.windows(2) {
            assert!(pair[1].objective <= pair[0].objective + 1e-9);
        }
    }

    #[test]
    fn run_rejects_out_of_family_starts() {
        let f = ZeroObjective;
        let fam = MixtureFamily::new(
            vec![2],
            vec![(OperatorMatrix::diagonal(&[2], &[1.0, -1.0]).unwrap(), 0.5)],
        )
        .unwrap();
        let err = run(
            &f,
            &DensityMatrix::maximally_mixed(&[2]),
            &fam,
            &SolverConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::OutsideFamily { .. }));
    }

    #[test]
    fn non_hermitian_functional_outputs_are_rejected() {
        let rho = DensityMatrix::maximally_mixed(&[2]);
        assert!(matches!(
            objective(&BrokenObjective, &rho),
            Err(Error::NotHermitian { .. })
        ));
    }
}
