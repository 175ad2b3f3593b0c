//! Seeded sampling of Haar unitaries, random channels and random states.

use nalgebra::linalg::QR;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::linop::{product_dim, CMatrix, DensityMatrix, OperatorMatrix};

/// Matrix of iid standard complex Gaussians.
pub fn complex_gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

/// Columns of the thin QR factor of a Gaussian matrix, with the R diagonal
/// phases absorbed so the distribution is invariant under left and right
/// unitary rotation. Requires rows >= cols; returns a matrix with
/// orthonormal columns.
fn haar_isometry(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    assert!(rows >= cols, "an isometry cannot widen the space");
    let g = complex_gaussian(rows, cols, rng);
    let qr = QR::new(g);
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..rows {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-distributed unitary on the given subsystems.
pub fn haar_unitary(dims: &[usize], rng: &mut impl Rng) -> OperatorMatrix {
    let d = product_dim(dims).expect("valid dims");
    OperatorMatrix::new(dims.to_vec(), haar_isometry(d, d, rng)).expect("square by construction")
}

/// Random density matrix G G^dag / Tr with a d x rank Gaussian factor, so
/// `rank` bounds the number of nonzero eigenvalues.
pub fn random_density(dims: &[usize], rank: usize, rng: &mut impl Rng) -> DensityMatrix {
    let d = product_dim(dims).expect("valid dims");
    let rank = rank.clamp(1, d);
    let g = complex_gaussian(d, rank, rng);
    let psd = &g * g.adjoint();
    DensityMatrix::normalized_from(
        OperatorMatrix::new(dims.to_vec(), psd).expect("square by construction"),
    )
    .expect("Gram matrices are positive semidefinite")
}

/// Random Hermitian operator with Gaussian entries.
pub fn random_hermitian(dims: &[usize], rng: &mut impl Rng) -> OperatorMatrix {
    let d = product_dim(dims).expect("valid dims");
    let g = complex_gaussian(d, d, rng);
    OperatorMatrix::new(dims.to_vec(), g)
        .expect("square by construction")
        .symmetrize()
}

/// Channel drawn by restricting a Haar-random isometry into
/// output (x) environment; `env_dim` Kraus operators are read off as the
/// environment-indexed blocks.
pub fn haar_channel(
    in_dims: &[usize],
    out_dims: &[usize],
    env_dim: usize,
    rng: &mut impl Rng,
) -> Result<KrausChannel> {
    let din = product_dim(in_dims)?;
    let dout = product_dim(out_dims)?;
    if env_dim == 0 {
        return Err(Error::BadParameter {
            name: "env_dim",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    if dout * env_dim < din {
        return Err(Error::BadParameter {
            name: "env_dim",
            value: env_dim as f64,
            range: "out_dim * env_dim >= in_dim",
        });
    }
    let v = haar_isometry(dout * env_dim, din, rng);
    let kraus: Vec<CMatrix> = (0..env_dim)
        .map(|e| CMatrix::from_fn(dout, din, |o, i| v[(o * env_dim + e, i)]))
        .collect();
    KrausChannel::new(in_dims.to_vec(), out_dims.to_vec(), kraus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn haar_unitaries_are_unitary_and_seeded() {
        let mut rng = ChaCha12Rng::seed_from_u64(101);
        for _ in 0..20 {
            let u = haar_unitary(&[2, 2], &mut rng);
            assert!(u.unitary_defect() < 1e-12);
        }
        let a = haar_unitary(&[3], &mut ChaCha12Rng::seed_from_u64(5));
        let b = haar_unitary(&[3], &mut ChaCha12Rng::seed_from_u64(5));
        assert_eq!(a.matrix(), b.matrix());
        let c = haar_unitary(&[3], &mut ChaCha12Rng::seed_from_u64(6));
        assert!((a.matrix() - c.matrix()).norm() > 1e-3);
    }

    #[test]
    fn random_densities_respect_rank_bound() {
        let mut rng = ChaCha12Rng::seed_from_u64(103);
        let rho = random_density(&[2, 2], 2, &mut rng);
        let eig = rho.eig_hermitian().unwrap();
        assert!(eig.values[0].abs() < 1e-12);
        assert!(eig.values[1].abs() < 1e-12);
        assert!(eig.values[3] > 1e-6);

        let full = random_density(&[2, 2], 4, &mut rng);
        assert!(full.eig_hermitian().unwrap().values[0] > 1e-9);
    }

    #[test]
    fn haar_channels_are_trace_preserving_for_any_environment() {
        let mut rng = ChaCha12Rng::seed_from_u64(107);
        for env in [2usize, 3, 8] {
            let ch = haar_channel(&[2, 2], &[2], env, &mut rng).unwrap();
            assert_eq!(ch.kraus_ops().len(), env);
        }
        // Widening channels admit a single Kraus operator.
        assert!(haar_channel(&[2], &[2, 2], 1, &mut rng).is_ok());
        // Environment too small to embed the input space, or empty.
        assert!(matches!(
            haar_channel(&[2, 2], &[2], 0, &mut rng),
            Err(Error::BadParameter { .. })
        ));
        assert!(matches!(
            haar_channel(&[2, 2], &[2], 1, &mut rng),
            Err(Error::BadParameter { .. })
        ));
    }
}
