//! Von Neumann entropy, quantum relative entropy and mutual information.
//!
//! Relative entropy works in the joint eigenbases: with spectral
//! decompositions rho = sum_i p_i |r_i><r_i| and sigma = sum_j s_j |s_j><s_j|,
//!
//!   D(rho||sigma) = sum_i p_i ln p_i - sum_{i,j} p_i |<r_i|s_j>|^2 ln s_j,
//!
//! which is +infinity exactly when rho carries weight outside the support
//! of sigma.

use crate::error::{Error, Result};
use crate::linop::{DensityMatrix, DEFAULT_EPS_CLAMP};

/// Rho-weight a sigma-null eigenvector may carry before the relative
/// entropy is declared infinite rather than round-off.
const SUPPORT_WEIGHT_TOL: f64 = 1e-10;

/// Von Neumann entropy in nats. Non-positive eigenvalues (round-off
/// negatives are bounded by the density-matrix validation) contribute zero.
pub fn von_neumann(rho: &DensityMatrix) -> f64 {
    let eig = rho.eig_hermitian().expect("validated density matrix");
    -eig.values
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Quantum relative entropy D(rho||sigma) in nats; +infinity on support
/// mismatch beyond round-off.
pub fn rel_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dims() != sigma.dims() {
        return Err(Error::DimMismatch {
            left: rho.dims().to_vec(),
            right: sigma.dims().to_vec(),
        });
    }
    let er = rho.eig_hermitian()?;
    let es = sigma.eig_hermitian()?;
    let d = er.values.len();

    // overlap[i][j] = |<r_i|s_j>|^2
    let mut overlap = vec![vec![0.0f64; d]; d];
    for i in 0..d {
        let ri = er.vectors.column(i);
        for j in 0..d {
            overlap[i][j] = ri.dotc(&es.vectors.column(j)).norm_sqr();
        }
    }

    // Weight of rho on the numerical null space of sigma decides between
    // "+infinity" and "ignore as round-off".
    let mut null_weight = 0.0f64;
    for j in 0..d {
        if es.values[j] < DEFAULT_EPS_CLAMP {
            for i in 0..d {
                if er.values[i] > 0.0 {
                    null_weight += er.values[i] * overlap[i][j];
                }
            }
        }
    }
    if null_weight > SUPPORT_WEIGHT_TOL {
        return Ok(f64::INFINITY);
    }

    let mut acc = 0.0f64;
    for i in 0..d {
        let p = er.values[i];
        if p <= 0.0 {
            continue;
        }
        acc += p * p.ln();
        for j in 0..d {
            let s = es.values[j];
            if s < DEFAULT_EPS_CLAMP {
                continue; // negligible weight, treated as support round-off
            }
            acc -= p * overlap[i][j] * s.ln();
        }
    }
    Ok(acc)
}

/// Mutual information between the subsystem group `split` and its
/// complement, as the relative entropy from the joint state to the product
/// of its marginals.
pub fn mutual_info(rho: &DensityMatrix, split: &[usize]) -> Result<f64> {
    let n = rho.dims().len();
    let mut a: Vec<usize> = split.to_vec();
    a.sort_unstable();
    a.dedup();
    for &i in &a {
        if i >= n {
            return Err(Error::BadSubsystemIndex { index: i, count: n });
        }
    }
    let b: Vec<usize> = (0..n).filter(|i| !a.contains(i)).collect();
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySplit);
    }
    let order: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
    let joint = rho.permuted(&order)?;
    let product = rho.marginal(&a)?.tensor_with(&rho.marginal(&b)?);
    rel_entropy(&joint, &product)
}
