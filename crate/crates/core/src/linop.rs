//! Multipartite operators and Hermitian matrix calculus.
//!
//! An [`OperatorMatrix`] is a square complex matrix tagged with the list of
//! subsystem dimensions whose product equals its side. The tag makes tensor
//! products, partial traces and subsystem permutations self-checking.
//! [`DensityMatrix`] is a validated wrapper: Hermitian, positive
//! semidefinite within tolerance, unit trace.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Entrywise tolerance for treating a matrix as Hermitian.
pub const TOL_HERM: f64 = 1e-12;
/// Most negative eigenvalue a density matrix may carry.
pub const TOL_PSD: f64 = 1e-10;
/// Allowed deviation of a density-matrix trace from one.
pub const TOL_TRACE: f64 = 1e-10;
/// Default eigenvalue floor for operator logarithms.
pub const DEFAULT_EPS_CLAMP: f64 = 1e-12;
/// Most negative eigenvalue [`OperatorMatrix::log_clamped`] accepts.
pub const TOL_LOG_NEG: f64 = 1e-8;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) fn product_dim(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.iter().any(|&d| d == 0) {
        return Err(Error::BadDims(dims.to_vec()));
    }
    Ok(dims.iter().product())
}

/// Row-major strides of a mixed-radix index over `dims`.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![0usize; dims.len()];
    let mut acc = 1usize;
    for i in (0..dims.len()).rev() {
        s[i] = acc;
        acc *= dims[i];
    }
    s
}

/// Square complex matrix on a tensor product of subsystems.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    dims: Vec<usize>,
    mat: CMatrix,
}

impl OperatorMatrix {
    pub fn new(dims: Vec<usize>, mat: CMatrix) -> Result<Self> {
        let d = product_dim(&dims)?;
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::ShapeMismatch {
                side: mat.nrows().max(mat.ncols()),
                expected: d,
                dims,
            });
        }
        Ok(OperatorMatrix { dims, mat })
    }

    /// Zero operator. Panics on invalid `dims`; use [`OperatorMatrix::new`]
    /// when the dimensions are untrusted.
    pub fn zeros(dims: &[usize]) -> Self {
        let d = product_dim(dims).expect("valid dims");
        OperatorMatrix {
            dims: dims.to_vec(),
            mat: CMatrix::zeros(d, d),
        }
    }

    /// Identity operator. Panics on invalid `dims`.
    pub fn identity(dims: &[usize]) -> Self {
        let d = product_dim(dims).expect("valid dims");
        OperatorMatrix {
            dims: dims.to_vec(),
            mat: CMatrix::identity(d, d),
        }
    }

    /// Entrywise construction. Panics on invalid `dims`.
    pub fn from_fn(dims: &[usize], f: impl Fn(usize, usize) -> Complex64) -> Self {
        let d = product_dim(dims).expect("valid dims");
        OperatorMatrix {
            dims: dims.to_vec(),
            mat: CMatrix::from_fn(d, d, f),
        }
    }

    /// Real diagonal operator with the given entries.
    pub fn diagonal(dims: &[usize], entries: &[f64]) -> Result<Self> {
        let d = product_dim(dims)?;
        if entries.len() != d {
            return Err(Error::ShapeMismatch {
                side: entries.len(),
                expected: d,
                dims: dims.to_vec(),
            });
        }
        Ok(OperatorMatrix::from_fn(dims, |i, j| {
            if i == j {
                Complex64::new(entries[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total Hilbert-space dimension (product of subsystem dimensions).
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// Reinterpret the subsystem grouping without touching entries.
    pub fn with_dims(&self, dims: Vec<usize>) -> Result<Self> {
        OperatorMatrix::new(dims, self.mat.clone())
    }

    pub fn dagger(&self) -> Self {
        OperatorMatrix {
            dims: self.dims.clone(),
            mat: self.mat.adjoint(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        OperatorMatrix {
            dims: self.dims.clone(),
            mat: &self.mat * Complex64::new(s, 0.0),
        }
    }

    /// Hilbert-Schmidt inner product Tr(A^dag B).
    pub fn hs_inner(&self, other: &Self) -> Result<Complex64> {
        self.check_same_dims(other)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.mat.iter().zip(other.mat.iter()) {
            acc += a.conj() * b;
        }
        Ok(acc)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from Hermitian symmetry.
    pub fn herm_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                let delta = (self.mat[(i, j)] - self.mat[(j, i)].conj()).norm();
                worst = worst.max(delta);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.herm_defect() <= tol
    }

    pub fn require_hermitian(&self, tol: f64) -> Result<()> {
        let defect = self.herm_defect();
        if defect > tol {
            return Err(Error::NotHermitian {
                max_asymmetry: defect,
                tol,
            });
        }
        Ok(())
    }

    /// Hermitian part (A + A^dag)/2.
    pub fn symmetrize(&self) -> Self {
        OperatorMatrix {
            dims: self.dims.clone(),
            mat: (&self.mat + self.mat.adjoint()) * Complex64::new(0.5, 0.0),
        }
    }

    /// Largest entrywise deviation of U^dag U from the identity.
    pub fn unitary_defect(&self) -> f64 {
        let d = self.dim();
        let gram = self.mat.adjoint() * &self.mat;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    pub fn require_unitary(&self, tol: f64) -> Result<()> {
        let defect = self.unitary_defect();
        if defect > tol {
            return Err(Error::NotUnitary(defect));
        }
        Ok(())
    }

    /// U A U^dag for a same-sized U.
    pub fn conjugate_by(&self, u: &Self) -> Result<Self> {
        self.check_same_dims(u)?;
        Ok(OperatorMatrix {
            dims: self.dims.clone(),
            mat: &u.mat * &self.mat * u.mat.adjoint(),
        })
    }

    /// Kronecker product; subsystem lists concatenate.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        OperatorMatrix {
            dims,
            mat: self.mat.kronecker(&other.mat),
        }
    }

    fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimMismatch {
                left: self.dims.clone(),
                right: other.dims.clone(),
            });
        }
        Ok(())
    }

    fn check_subsystems(&self, subs: &[usize]) -> Result<()> {
        for &i in subs {
            if i >= self.dims.len() {
                return Err(Error::BadSubsystemIndex {
                    index: i,
                    count: self.dims.len(),
                });
            }
        }
        Ok(())
    }

    /// Trace out every subsystem not listed in `keep`. The kept subsystems
    /// retain their original relative order; duplicates in `keep` are ignored.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::EmptySelection);
        }
        self.check_subsystems(keep)?;
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let n = self.dims.len();
        let traced: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
        let full_stride = strides(&self.dims);

        let kept_dims: Vec<usize> = keep.iter().map(|&i| self.dims[i]).collect();
        let dk: usize = kept_dims.iter().product();
        let dt: usize = traced.iter().map(|&i| self.dims[i]).product();

        // Offset of each kept (resp. traced) multi-index inside the full
        // flat index; a full index is one kept offset plus one traced offset.
        let offsets = |subs: &[usize], count: usize| -> Vec<usize> {
            let sub_dims: Vec<usize> = subs.iter().map(|&i| self.dims[i]).collect();
            let sub_stride = strides(&sub_dims);
            (0..count)
                .map(|flat| {
                    subs.iter()
                        .enumerate()
                        .map(|(j, &orig)| (flat / sub_stride[j] % sub_dims[j]) * full_stride[orig])
                        .sum()
                })
                .collect()
        };
        let keep_off = offsets(&keep, dk);
        let trace_off = offsets(&traced, dt);

        let mut out = CMatrix::zeros(dk, dk);
        for a in 0..dk {
            for b in 0..dk {
                let mut acc = Complex64::new(0.0, 0.0);
                for &t in &trace_off {
                    acc += self.mat[(keep_off[a] + t, keep_off[b] + t)];
                }
                out[(a, b)] = acc;
            }
        }
        OperatorMatrix::new(kept_dims, out)
    }

    /// Reorder subsystems: new subsystem `j` is old subsystem `order[j]`.
    pub fn permute(&self, order: &[usize]) -> Result<Self> {
        let n = self.dims.len();
        let mut seen = vec![false; n];
        if order.len() != n {
            return Err(Error::NotPermutation(order.to_vec()));
        }
        for &i in order {
            if i >= n || seen[i] {
                return Err(Error::NotPermutation(order.to_vec()));
            }
            seen[i] = true;
        }
        let new_dims: Vec<usize> = order.iter().map(|&i| self.dims[i]).collect();
        let old_stride = strides(&self.dims);
        let new_stride = strides(&new_dims);
        let d = self.dim();
        let old_of: Vec<usize> = (0..d)
            .map(|a| {
                (0..n)
                    .map(|j| (a / new_stride[j] % new_dims[j]) * old_stride[order[j]])
                    .sum()
            })
            .collect();
        let mat = CMatrix::from_fn(d, d, |i, j| self.mat[(old_of[i], old_of[j])]);
        OperatorMatrix::new(new_dims, mat)
    }

    /// Eigendecomposition of a Hermitian operator, eigenvalues ascending.
    pub fn eig_hermitian(&self) -> Result<EigH> {
        self.require_hermitian(TOL_HERM)?;
        let sym = self.symmetrize();
        let se = SymmetricEigen::new(sym.mat);
        let n = se.eigenvalues.len();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
        let values: Vec<f64> = idx.iter().map(|&i| se.eigenvalues[i]).collect();
        let vectors = CMatrix::from_fn(n, n, |r, c| se.eigenvectors[(r, idx[c])]);
        Ok(EigH {
            dims: self.dims.clone(),
            values,
            vectors,
        })
    }

    /// Apply a real scalar function to the eigenvalues of a Hermitian
    /// operator. Rejects eigenvalues where `f` is not finite.
    pub fn func_hermitian(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let eig = self.eig_hermitian()?;
        let mut vals = Vec::with_capacity(eig.values.len());
        for &v in &eig.values {
            let fv = f(v);
            if !fv.is_finite() {
                return Err(Error::UndefinedAtEigenvalue(v));
            }
            vals.push(fv);
        }
        Ok(eig.recombine(&vals).symmetrize())
    }

    /// Operator logarithm with eigenvalues floored at `eps` to absorb
    /// round-off zeros. Eigenvalues below the negativity tolerance reject.
    pub fn log_clamped(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::BadParameter {
                name: "eps_clamp",
                value: eps,
                range: "(0, inf)",
            });
        }
        let eig = self.eig_hermitian()?;
        if let Some(&low) = eig.values.first() {
            if low < -TOL_LOG_NEG {
                return Err(Error::NotPositiveSemidefinite(low));
            }
        }
        let vals: Vec<f64> = eig.values.iter().map(|&v| v.max(eps).ln()).collect();
        Ok(eig.recombine(&vals).symmetrize())
    }

    /// Operator exponential of a Hermitian matrix.
    pub fn exp_herm(&self) -> Result<Self> {
        self.func_hermitian(f64::exp)
    }

    /// exp(A)/Tr exp(A) together with log Tr exp(A), computed with the
    /// largest eigenvalue shifted out so the exponentials cannot overflow.
    pub fn exp_normalized(&self) -> Result<(DensityMatrix, f64)> {
        let eig = self.eig_hermitian()?;
        let top = *eig.values.last().expect("non-empty spectrum");
        let weights: Vec<f64> = eig.values.iter().map(|&v| (v - top).exp()).collect();
        let z: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|&w| w / z).collect();
        let state = DensityMatrix::normalized_from(eig.recombine(&probs))?;
        Ok((state, top + z.ln()))
    }
}

impl std::ops::Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dims, rhs.dims, "operator addition needs equal dims");
        OperatorMatrix {
            dims: self.dims.clone(),
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl std::ops::Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dims, rhs.dims, "operator subtraction needs equal dims");
        OperatorMatrix {
            dims: self.dims.clone(),
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl std::ops::Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dims, rhs.dims, "operator product needs equal dims");
        OperatorMatrix {
            dims: self.dims.clone(),
            mat: &self.mat * &rhs.mat,
        }
    }
}

impl std::ops::Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        self.scale(-1.0)
    }
}

/// Sorted eigensystem of a Hermitian operator.
pub struct EigH {
    dims: Vec<usize>,
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Matching eigenvectors as columns of a unitary.
    pub vectors: CMatrix,
}

impl EigH {
    /// Rebuild V diag(vals) V^dag on the original subsystem layout.
    pub fn recombine(&self, vals: &[f64]) -> OperatorMatrix {
        assert_eq!(vals.len(), self.values.len());
        let diag = CMatrix::from_diagonal(&CVector::from_iterator(
            vals.len(),
            vals.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        OperatorMatrix {
            dims: self.dims.clone(),
            mat: &self.vectors * diag * self.vectors.adjoint(),
        }
    }
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: OperatorMatrix,
}

impl DensityMatrix {
    /// Validate Hermiticity, positivity and unit trace.
    pub fn try_new(op: OperatorMatrix) -> Result<Self> {
        op.require_hermitian(TOL_HERM)?;
        let eig = op.eig_hermitian()?;
        if let Some(&low) = eig.values.first() {
            if low < -TOL_PSD {
                return Err(Error::NotPositiveSemidefinite(low));
            }
        }
        let tr = op.trace();
        let defect = (tr - Complex64::new(1.0, 0.0)).norm();
        if defect > TOL_TRACE {
            return Err(Error::NotUnitTrace(defect));
        }
        Ok(DensityMatrix { op })
    }

    /// Symmetrize and rescale to unit trace, then validate positivity.
    /// Intended for algorithm outputs that are densities up to round-off.
    pub fn normalized_from(op: OperatorMatrix) -> Result<Self> {
        let sym = op.symmetrize();
        let tr = sym.trace().re;
        if !(tr > 0.0) {
            return Err(Error::NotUnitTrace((tr - 1.0).abs()));
        }
        let scaled = sym.scale(1.0 / tr);
        let eig = scaled.eig_hermitian()?;
        if let Some(&low) = eig.values.first() {
            if low < -TOL_PSD {
                return Err(Error::NotPositiveSemidefinite(low));
            }
        }
        Ok(DensityMatrix { op: scaled })
    }

    /// Rank-one state from an unnormalized amplitude vector.
    pub fn pure(dims: &[usize], amplitudes: &[Complex64]) -> Result<Self> {
        let d = product_dim(dims)?;
        if amplitudes.len() != d {
            return Err(Error::ShapeMismatch {
                side: amplitudes.len(),
                expected: d,
                dims: dims.to_vec(),
            });
        }
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm2 <= 0.0 {
            return Err(Error::ZeroVector);
        }
        let scale = 1.0 / norm2;
        let op = OperatorMatrix::from_fn(dims, |i, j| amplitudes[i] * amplitudes[j].conj() * scale);
        Ok(DensityMatrix { op })
    }

    pub fn maximally_mixed(dims: &[usize]) -> Self {
        let id = OperatorMatrix::identity(dims);
        let d = id.dim() as f64;
        DensityMatrix {
            op: id.scale(1.0 / d),
        }
    }

    pub fn as_operator(&self) -> &OperatorMatrix {
        &self.op
    }

    pub fn into_operator(self) -> OperatorMatrix {
        self.op
    }

    /// Reduced state on the kept subsystems.
    pub fn marginal(&self, keep: &[usize]) -> Result<DensityMatrix> {
        DensityMatrix::normalized_from(self.op.partial_trace(keep)?)
    }

    /// Product state on the concatenated subsystems. Exact, no revalidation.
    pub fn tensor_with(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            op: self.op.tensor(&other.op),
        }
    }

    /// Subsystem relabeling; conjugation by a permutation unitary keeps
    /// every density-matrix invariant.
    pub fn permuted(&self, order: &[usize]) -> Result<DensityMatrix> {
        Ok(DensityMatrix {
            op: self.op.permute(order)?,
        })
    }

    /// Half the trace norm of the difference.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        self.op.check_same_dims(&other.op)?;
        let diff = &self.op - &other.op;
        let eig = diff.eig_hermitian()?;
        Ok(0.5 * eig.values.iter().map(|v| v.abs()).sum::<f64>())
    }
}

impl std::ops::Deref for DensityMatrix {
    type Target = OperatorMatrix;
    fn deref(&self) -> &OperatorMatrix {
        &self.op
    }
}

/// Hilbert-Schmidt orthogonal basis of traceless Hermitian operators on the
/// given subsystems: symmetric and antisymmetric pair matrices plus diagonal
/// ladder matrices, every element with squared norm 2. Spans the tangent
/// directions of trace-normalized Hermitian perturbations.
pub fn traceless_hermitian_basis(dims: &[usize]) -> Vec<OperatorMatrix> {
    let d = product_dim(dims).expect("valid dims");
    let mut basis = Vec::with_capacity(d * d - 1);
    let zero = Complex64::new(0.0, 0.0);
    for j in 0..d {
        for k in (j + 1)..d {
            basis.push(OperatorMatrix::from_fn(dims, |r, c| {
                if (r, c) == (j, k) || (r, c) == (k, j) {
                    Complex64::new(1.0, 0.0)
                } else {
                    zero
                }
            }));
            basis.push(OperatorMatrix::from_fn(dims, |r, c| {
                if (r, c) == (j, k) {
                    Complex64::new(0.0, -1.0)
                } else if (r, c) == (k, j) {
                    Complex64::new(0.0, 1.0)
                } else {
                    zero
                }
            }));
        }
    }
    for l in 1..d {
        let scale = (2.0 / (l as f64 * (l + 1) as f64)).sqrt();
        basis.push(OperatorMatrix::from_fn(dims, |r, c| {
            if r != c {
                zero
            } else if r < l {
                Complex64::new(scale, 0.0)
            } else if r == l {
                Complex64::new(-(l as f64) * scale, 0.0)
            } else {
                zero
            }
        }));
    }
    basis
}
