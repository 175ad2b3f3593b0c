//! Mixture families of density matrices and the information projection
//! onto them.
//!
//! A mixture family pins the expectation values of finitely many Hermitian
//! constraint operators: M = { rho : Tr rho H_i = a_i, Tr rho = 1 }. The
//! member of M closest to a reference state rho in relative entropy
//! D(.||rho) is an exponential tilt C exp(log rho + sum_j tau_j H_j). Its
//! multipliers minimize the convex dual
//!
//!   psi(tau) = log Tr exp(log rho + sum_j tau_j H_j) - sum_j tau_j a_j,
//!
//! whose gradient components are exactly the constraint residuals of the
//! tilted state, so the inner stopping rule doubles as a feasibility
//! certificate. The minimizer is found by gradient descent with
//! Barzilai-Borwein trial steps and a backtracking line search. Steps are
//! accepted on sufficient psi decrease against a short non-monotone window
//! or, once psi differences fall under f64 resolution, on sufficient
//! gradient-norm decrease; with plain Armijo acceptance the iteration
//! stalls near the optimum because the required psi decrease of order
//! |grad|^2 is unrepresentable next to psi itself.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::DMatrix;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::linop::{DensityMatrix, OperatorMatrix, TOL_HERM};

/// Armijo sufficient-decrease fraction for the dual line search.
const ARMIJO_C: f64 = 1e-4;
/// Line-search shrink factor.
const ARMIJO_SHRINK: f64 = 0.5;
/// Smallest line-search step before declaring a stall.
const MIN_STEP: f64 = 1e-18;
/// Fractional gradient-norm decrease per unit step that also accepts a
/// line-search candidate.
const GRAD_DECREASE: f64 = 1e-4;
/// Number of recent dual values the non-monotone Armijo test compares
/// against; Barzilai-Borwein steps need not decrease psi every iteration.
const NONMONOTONE_WINDOW: usize = 8;
/// Clamp range for the Barzilai-Borwein trial step.
const BB_STEP_MIN: f64 = 1e-10;
const BB_STEP_MAX: f64 = 1e8;
/// Relative eigenvalue floor below which the constraint Gram matrix is
/// treated as singular.
const GRAM_RCOND_MIN: f64 = 1e-12;

/// Linear expectation constraints defining a mixture family.
#[derive(Clone, Debug)]
pub struct MixtureFamily {
    dims: Vec<usize>,
    constraints: Vec<(OperatorMatrix, f64)>,
    gram_cond: f64,
}

impl MixtureFamily {
    /// Family { rho : Tr rho H_i = a_i } from (H_i, a_i) pairs. The H_i
    /// must be Hermitian and linearly independent.
    pub fn new(dims: Vec<usize>, constraints: Vec<(OperatorMatrix, f64)>) -> Result<Self> {
        crate::linop::product_dim(&dims)?;
        for (h, a) in &constraints {
            if h.dims() != dims {
                return Err(Error::DimMismatch {
                    left: h.dims().to_vec(),
                    right: dims.clone(),
                });
            }
            h.require_hermitian(TOL_HERM)?;
            if !a.is_finite() {
                return Err(Error::BadParameter {
                    name: "a",
                    value: *a,
                    range: "finite",
                });
            }
        }
        let gram_cond = gram_condition(&constraints)?;
        Ok(MixtureFamily {
            dims,
            constraints,
            gram_cond,
        })
    }

    /// Family with no moment constraints; only normalization remains and
    /// the projection is the identity on density matrices.
    pub fn trace_only(dims: Vec<usize>) -> Result<Self> {
        MixtureFamily::new(dims, Vec::new())
    }

    /// Family through `rho`: targets are the moments of `rho` itself.
    pub fn instantiated_at(ops: Vec<OperatorMatrix>, rho: &DensityMatrix) -> Result<Self> {
        let mut constraints = Vec::with_capacity(ops.len());
        for h in ops {
            if h.dims() != rho.dims() {
                return Err(Error::DimMismatch {
                    left: h.dims().to_vec(),
                    right: rho.dims().to_vec(),
                });
            }
            let target = rho.as_operator().hs_inner(&h)?.re;
            constraints.push((h, target));
        }
        MixtureFamily::new(rho.dims().to_vec(), constraints)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn constraints(&self) -> &[(OperatorMatrix, f64)] {
        &self.constraints
    }

    /// Condition number of the constraint Gram matrix; a conditioning
    /// diagnostic for near-dependent constraint sets.
    pub fn gram_condition_number(&self) -> f64 {
        self.gram_cond
    }

    /// Largest moment violation max_i |Tr rho H_i - a_i|.
    pub fn residual(&self, rho: &DensityMatrix) -> Result<f64> {
        if rho.dims() != self.dims {
            return Err(Error::DimMismatch {
                left: rho.dims().to_vec(),
                right: self.dims.clone(),
            });
        }
        let mut worst = 0.0f64;
        for (h, a) in &self.constraints {
            worst = worst.max((rho.as_operator().hs_inner(h)?.re - a).abs());
        }
        Ok(worst)
    }

    pub fn contains(&self, rho: &DensityMatrix, tol: f64) -> Result<bool> {
        Ok(self.residual(rho)? <= tol)
    }
}

fn gram_condition(constraints: &[(OperatorMatrix, f64)]) -> Result<f64> {
    let k = constraints.len();
    if k == 0 {
        return Ok(1.0);
    }
    let mut gram = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let g = constraints[i].0.hs_inner(&constraints[j].0)?.re;
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let eig = SymmetricEigen::new(gram);
    let lmax = eig.eigenvalues.iter().copied().fold(f64::MIN, f64::max);
    let lmin = eig.eigenvalues.iter().copied().fold(f64::MAX, f64::min);
    if !(lmin > lmax * GRAM_RCOND_MIN && lmax > 0.0) {
        return Err(Error::DependentConstraints(if lmin > 0.0 {
            lmax / lmin
        } else {
            f64::INFINITY
        }));
    }
    Ok(lmax / lmin)
}

/// Result of an information projection.
#[derive(Clone, Debug)]
pub struct ProjectionResult {
    /// The projected state C exp(log rho + sum_j tau_j H_j).
    pub projected: DensityMatrix,
    /// Multipliers at the dual optimum.
    pub tau: Vec<f64>,
    /// Descent steps spent in the dual.
    pub iterations: usize,
    /// Final sup-norm of the dual gradient, which equals the largest
    /// moment violation of `projected`.
    pub grad_norm: f64,
}

struct DualEval {
    psi: f64,
    grad: Vec<f64>,
    grad_norm: f64,
    tilted: DensityMatrix,
}

fn eval_dual(a: &OperatorMatrix, fam: &MixtureFamily, tau: &[f64]) -> Result<DualEval> {
    let mut m = a.clone();
    for (j, (h, _)) in fam.constraints.iter().enumerate() {
        m = &m + &h.scale(tau[j]);
    }
    let eig = m.eig_hermitian()?;
    let top = *eig.values.last().expect("non-empty spectrum");
    let weights: Vec<f64> = eig.values.iter().map(|&v| (v - top).exp()).collect();
    let z: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|&w| w / z).collect();
    let tilted = DensityMatrix::normalized_from(eig.recombine(&probs))?;

    let mut psi = top + z.ln();
    let mut grad = Vec::with_capacity(fam.len());
    for (j, (h, target)) in fam.constraints.iter().enumerate() {
        psi -= tau[j] * target;
        grad.push(tilted.as_operator().hs_inner(h)?.re - target);
    }
    let grad_norm = sup_norm(&grad);
    Ok(DualEval {
        psi,
        grad,
        grad_norm,
        tilted,
    })
}

fn check_dual_args(a: &OperatorMatrix, fam: &MixtureFamily, tau: &[f64]) -> Result<()> {
    if a.dims() != fam.dims() {
        return Err(Error::DimMismatch {
            left: a.dims().to_vec(),
            right: fam.dims().to_vec(),
        });
    }
    if tau.len() != fam.len() {
        return Err(Error::BadParameter {
            name: "tau",
            value: tau.len() as f64,
            range: "one multiplier per constraint",
        });
    }
    for &t in tau {
        if !t.is_finite() {
            return Err(Error::BadParameter {
                name: "tau",
                value: t,
                range: "finite",
            });
        }
    }
    a.require_hermitian(TOL_HERM)
}

/// Dual value psi(tau) = log Tr exp(A + sum_j tau_j H_j) - sum_j tau_j a_j.
pub fn log_partition(a: &OperatorMatrix, fam: &MixtureFamily, tau: &[f64]) -> Result<f64> {
    check_dual_args(a, fam, tau)?;
    Ok(eval_dual(a, fam, tau)?.psi)
}

/// Exact dual gradient: component j is the moment violation
/// Tr omega(tau) H_j - a_j of the tilted state omega(tau).
pub fn log_partition_grad(
    a: &OperatorMatrix,
    fam: &MixtureFamily,
    tau: &[f64],
) -> Result<Vec<f64>> {
    check_dual_args(a, fam, tau)?;
    Ok(eval_dual(a, fam, tau)?.grad)
}

/// Information projection of `rho` onto the family, minimizing
/// D(sigma||rho) over members sigma. Cold-started at tau = 0.
pub fn e_project(
    rho: &DensityMatrix,
    fam: &MixtureFamily,
    cfg: &SolverConfig,
) -> Result<ProjectionResult> {
    e_project_from(rho, fam, cfg, &vec![0.0; fam.len()])
}

/// Projection warm-started from a caller-supplied multiplier guess; the
/// outer solver reuses the previous iteration's optimum.
pub fn e_project_from(
    rho: &DensityMatrix,
    fam: &MixtureFamily,
    cfg: &SolverConfig,
    tau0: &[f64],
) -> Result<ProjectionResult> {
    cfg.validate()?;
    if rho.dims() != fam.dims() {
        return Err(Error::DimMismatch {
            left: rho.dims().to_vec(),
            right: fam.dims().to_vec(),
        });
    }
    if fam.is_empty() {
        return Ok(ProjectionResult {
            projected: rho.clone(),
            tau: Vec::new(),
            iterations: 0,
            grad_norm: 0.0,
        });
    }
    let a = rho.log_clamped(cfg.eps_clamp)?;
    check_dual_args(&a, fam, tau0)?;

    let mut tau = tau0.to_vec();
    let mut cur = eval_dual(&a, fam, &tau)?;
    let mut psi_window = vec![cur.psi];
    let mut trial_step = 1.0f64;
    for iteration in 0..cfg.max_proj_iters {
        if cur.grad_norm <= cfg.tol_proj {
            return Ok(ProjectionResult {
                projected: cur.tilted,
                tau,
                iterations: iteration,
                grad_norm: cur.grad_norm,
            });
        }

        let slope: f64 = -cur.grad.iter().map(|g| g * g).sum::<f64>();
        let psi_ref = psi_window.iter().copied().fold(f64::MIN, f64::max);

        let mut t = trial_step;
        loop {
            let candidate: Vec<f64> = tau
                .iter()
                .zip(cur.grad.iter())
                .map(|(&x, &g)| x - t * g)
                .collect();
            if candidate.iter().all(|x| x.is_finite()) {
                let next = eval_dual(&a, fam, &candidate)?;
                // Near the optimum the psi decrease of order |grad|^2 is
                // unrepresentable next to psi, so a sufficient drop of the
                // gradient norm also accepts; non-finite psi fails both.
                let psi_ok = next.psi <= psi_ref + ARMIJO_C * t * slope;
                let grad_ok =
                    next.grad_norm <= (1.0 - GRAD_DECREASE * t.min(1.0)) * cur.grad_norm;
                if psi_ok || grad_ok {
                    // Barzilai-Borwein trial step for the next iteration,
                    // from the secant pair of the accepted move.
                    let ss: f64 = cur.grad.iter().map(|g| (t * g) * (t * g)).sum();
                    let sy: f64 = cur
                        .grad
                        .iter()
                        .zip(next.grad.iter())
                        .map(|(g0, g1)| (-t * g0) * (g1 - g0))
                        .sum();
                    trial_step = if sy > 0.0 && ss.is_finite() {
                        (ss / sy).clamp(BB_STEP_MIN, BB_STEP_MAX)
                    } else {
                        1.0
                    };
                    tau = candidate;
                    cur = next;
                    psi_window.push(cur.psi);
                    if psi_window.len() > NONMONOTONE_WINDOW {
                        psi_window.remove(0);
                    }
                    break;
                }
            }
            t *= ARMIJO_SHRINK;
            if t < MIN_STEP {
                return Err(Error::ProjectionDidNotConverge {
                    iterations: iteration,
                    grad_norm: cur.grad_norm,
                    tol: cfg.tol_proj,
                    best_tau: tau,
                });
            }
        }
    }
    Err(Error::ProjectionDidNotConverge {
        iterations: cfg.max_proj_iters,
        grad_norm: cur.grad_norm,
        tol: cfg.tol_proj,
        best_tau: tau,
    })
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}
