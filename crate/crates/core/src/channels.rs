//! Quantum channels in Kraus form, purification, and channel-state duality.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linop::{product_dim, CMatrix, CVector, DensityMatrix, OperatorMatrix};

/// Entrywise tolerance on sum K^dag K = I.
pub const TOL_TP: f64 = 1e-10;

/// Completely positive trace-preserving map between multipartite spaces.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    in_dims: Vec<usize>,
    out_dims: Vec<usize>,
    kraus: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(in_dims: Vec<usize>, out_dims: Vec<usize>, kraus: Vec<CMatrix>) -> Result<Self> {
        let din = product_dim(&in_dims)?;
        let dout = product_dim(&out_dims)?;
        if kraus.is_empty() {
            return Err(Error::NotTracePreserving(1.0));
        }
        for (index, k) in kraus.iter().enumerate() {
            if k.nrows() != dout || k.ncols() != din {
                return Err(Error::BadKrausShape {
                    index,
                    rows: k.nrows(),
                    cols: k.ncols(),
                    out: dout,
                    inp: din,
                });
            }
        }
        let mut gram = CMatrix::zeros(din, din);
        for k in &kraus {
            gram += k.adjoint() * k;
        }
        let mut defect = 0.0f64;
        for i in 0..din {
            for j in 0..din {
                let target = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((gram[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        if defect > TOL_TP {
            return Err(Error::NotTracePreserving(defect));
        }
        Ok(KrausChannel {
            in_dims,
            out_dims,
            kraus,
        })
    }

    pub fn identity(dims: &[usize]) -> Self {
        let d = product_dim(dims).expect("valid dims");
        KrausChannel {
            in_dims: dims.to_vec(),
            out_dims: dims.to_vec(),
            kraus: vec![CMatrix::identity(d, d)],
        }
    }

    pub fn in_dims(&self) -> &[usize] {
        &self.in_dims
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    pub fn in_dim(&self) -> usize {
        self.in_dims.iter().product()
    }

    pub fn out_dim(&self) -> usize {
        self.out_dims.iter().product()
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// sum K A K^dag on an arbitrary operator.
    pub fn apply_op(&self, a: &OperatorMatrix) -> Result<OperatorMatrix> {
        if a.dims() != self.in_dims {
            return Err(Error::DimMismatch {
                left: a.dims().to_vec(),
                right: self.in_dims.clone(),
            });
        }
        let dout = self.out_dim();
        let mut out = CMatrix::zeros(dout, dout);
        for k in &self.kraus {
            out += k * a.matrix() * k.adjoint();
        }
        OperatorMatrix::new(self.out_dims.clone(), out)
    }

    /// Channel action on a state; trace preservation keeps it a density.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::normalized_from(self.apply_op(rho.as_operator())?)
    }

    /// Adjoint (Heisenberg) action sum K^dag B K, mapping observables on
    /// the output space back to the input space.
    pub fn adjoint_apply(&self, b: &OperatorMatrix) -> Result<OperatorMatrix> {
        if b.dims() != self.out_dims {
            return Err(Error::DimMismatch {
                left: b.dims().to_vec(),
                right: self.out_dims.clone(),
            });
        }
        let din = self.in_dim();
        let mut out = CMatrix::zeros(din, din);
        for k in &self.kraus {
            out += k.adjoint() * b.matrix() * k;
        }
        OperatorMatrix::new(self.in_dims.clone(), out)
    }

    /// id (x) channel, acting trivially on the prepended subsystems.
    pub fn extend_identity(&self, left_dims: &[usize]) -> Result<KrausChannel> {
        let dl = product_dim(left_dims)?;
        let id = CMatrix::identity(dl, dl);
        let kraus: Vec<CMatrix> = self.kraus.iter().map(|k| id.kronecker(k)).collect();
        let mut in_dims = left_dims.to_vec();
        in_dims.extend_from_slice(&self.in_dims);
        let mut out_dims = left_dims.to_vec();
        out_dims.extend_from_slice(&self.out_dims);
        KrausChannel::new(in_dims, out_dims, kraus)
    }
}

/// Pure state on system plus an ancilla copy whose system marginal is a
/// prescribed density matrix.
#[derive(Clone, Debug)]
pub struct Purification {
    amplitudes: CVector,
    sys_dims: Vec<usize>,
    anc_dims: Vec<usize>,
}

impl Purification {
    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn sys_dims(&self) -> &[usize] {
        &self.sys_dims
    }

    pub fn anc_dims(&self) -> &[usize] {
        &self.anc_dims
    }

    /// |phi><phi| on the system ++ ancilla subsystems.
    pub fn state(&self) -> DensityMatrix {
        let mut dims = self.sys_dims.clone();
        dims.extend_from_slice(&self.anc_dims);
        let amps: Vec<Complex64> = self.amplitudes.iter().copied().collect();
        DensityMatrix::pure(&dims, &amps).expect("purification amplitudes are normalized")
    }
}

/// Spectral purification |phi> = sum_a sqrt(lambda_a) |v_a> (x) |a> with the
/// ancilla a dimension-matched copy of the system and eigenvalues taken in
/// descending order, so rank deficiency concentrates on leading ancilla
/// levels and a pure input purifies to itself tensor |0>.
pub fn purify(rho: &DensityMatrix) -> Result<Purification> {
    let eig = rho.eig_hermitian()?;
    let d = eig.values.len();
    let mut amplitudes = CVector::zeros(d * d);
    for a in 0..d {
        let lam = eig.values[d - 1 - a].max(0.0).sqrt();
        if lam == 0.0 {
            continue;
        }
        let v = eig.vectors.column(d - 1 - a);
        for s in 0..d {
            amplitudes[s * d + a] = v[s] * lam;
        }
    }
    Ok(Purification {
        amplitudes,
        sys_dims: rho.dims().to_vec(),
        anc_dims: rho.dims().to_vec(),
    })
}

/// State over (system, channel output) obtained by purifying `rho` and
/// sending the ancilla through the channel. Its system marginal is exactly
/// `rho` by trace preservation.
pub fn channel_to_state(ch: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if ch.in_dims() != rho.dims() {
        return Err(Error::DimMismatch {
            left: ch.in_dims().to_vec(),
            right: rho.dims().to_vec(),
        });
    }
    let pur = purify(rho)?;
    let extended = ch.extend_identity(rho.dims())?;
    extended.apply(&pur.state())
}

/// Source state and decohering channel of the damped-qubit model.
///
/// The source on two qubits is [(1-p)|+><+| + p I/2] (x) I/2; the channel
/// sends the pair through an amplitude damper of strength `lambda` on the
/// first qubit, then discards the second, mapping two qubits to one.
pub fn amplitude_damping_model(lambda: f64, p: f64) -> Result<(DensityMatrix, KrausChannel)> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::BadParameter {
            name: "lambda",
            value: lambda,
            range: "[0, 1]",
        });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::BadParameter {
            name: "p",
            value: p,
            range: "[0, 1]",
        });
    }

    let half_coherence = (1.0 - p) / 2.0;
    let first = OperatorMatrix::from_fn(&[2], |i, j| {
        if i == j {
            Complex64::new(0.5, 0.0)
        } else {
            Complex64::new(half_coherence, 0.0)
        }
    });
    let rho_x = DensityMatrix::try_new(first.tensor(&OperatorMatrix::identity(&[2]).scale(0.5)))?;

    // Kraus operators of (damp (x) id) followed by tracing out the second
    // qubit: rows index the surviving qubit, columns the input pair.
    let s = (1.0 - lambda).sqrt();
    let r = lambda.sqrt();
    let z = Complex64::new(0.0, 0.0);
    let e = |v: f64| Complex64::new(v, 0.0);
    let kraus = vec![
        CMatrix::from_row_slice(2, 4, &[e(1.0), z, z, z, z, z, e(s), z]),
        CMatrix::from_row_slice(2, 4, &[z, e(1.0), z, z, z, z, z, e(s)]),
        CMatrix::from_row_slice(2, 4, &[z, z, e(r), z, z, z, z, z]),
        CMatrix::from_row_slice(2, 4, &[z, z, z, e(r), z, z, z, z]),
    ];
    let channel = KrausChannel::new(vec![2, 2], vec![2], kraus)?;
    Ok((rho_x, channel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::rel_entropy;
    use crate::random::{haar_channel, random_density};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_channel_is_a_fixed_point() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let rho = random_density(&[2, 2], 4, &mut rng);
        let id = KrausChannel::identity(&[2, 2]);
        let out = id.apply(&rho).unwrap();
        assert!(out.trace_distance(&rho).unwrap() < 1e-12);
    }

    #[test]
    fn rejects_non_trace_preserving_sets() {
        let k = CMatrix::identity(2, 2) * Complex64::new(0.5, 0.0);
        assert!(matches!(
            KrausChannel::new(vec![2], vec![2], vec![k]),
            Err(Error::NotTracePreserving(_))
        ));
        let bad_shape = CMatrix::identity(3, 2);
        assert!(matches!(
            KrausChannel::new(vec![2], vec![2], vec![bad_shape]),
            Err(Error::BadKrausShape { .. })
        ));
    }

    #[test]
    fn channels_preserve_trace_and_positivity() {
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        for trial in 0..50 {
            let env = 2 + trial % 4;
            let ch = haar_channel(&[2, 2], &[2], env, &mut rng).unwrap();
            let rho = random_density(&[2, 2], 4, &mut rng);
            let out = ch.apply(&rho).unwrap();
            // apply() normalizes; verify the raw map was already unit trace.
            let raw = ch.apply_op(rho.as_operator()).unwrap();
            assert!((raw.trace().re - 1.0).abs() < 1e-12);
            assert!(out.eig_hermitian().unwrap().values[0] > -1e-12);
        }
    }

    #[test]
    fn adjoint_is_unital_and_dual_to_the_channel() {
        let mut rng = ChaCha12Rng::seed_from_u64(47);
        for trial in 0..100 {
            let env = 1 + trial % 3;
            let ch = haar_channel(&[2], &[3], env, &mut rng).unwrap();
            let id_out = OperatorMatrix::identity(&[3]);
            let back = ch.adjoint_apply(&id_out).unwrap();
            assert!((&back - &OperatorMatrix::identity(&[2])).max_abs_entry() < 1e-12);

            // Tr[ch(rho) B] = Tr[rho ch^dag(B)]
            let rho = random_density(&[2], 2, &mut rng);
            let b = crate::random::random_hermitian(&[3], &mut rng);
            let lhs = ch.apply_op(rho.as_operator()).unwrap().hs_inner(&b).unwrap();
            let rhs = ch
                .adjoint_apply(&b)
                .unwrap()
                .hs_inner(rho.as_operator())
                .unwrap()
                .conj();
            assert!((lhs - rhs).norm() < 1e-11, "duality defect {}", (lhs - rhs).norm());
        }
    }

    #[test]
    fn extend_identity_acts_locally() {
        let mut rng = ChaCha12Rng::seed_from_u64(53);
        let ch = haar_channel(&[2], &[2], 2, &mut rng).unwrap();
        let ext = ch.extend_identity(&[3]).unwrap();
        assert_eq!(ext.in_dims(), &[3, 2]);
        assert_eq!(ext.out_dims(), &[3, 2]);

        let a = random_density(&[3], 3, &mut rng);
        let b = random_density(&[2], 2, &mut rng);
        let out = ext.apply(&a.tensor_with(&b)).unwrap();
        let expect = a.tensor_with(&ch.apply(&b).unwrap());
        assert!(out.trace_distance(&expect).unwrap() < 1e-11);

        // Untouched marginal survives on correlated inputs too.
        let joint = random_density(&[3, 2], 6, &mut rng);
        let out = ext.apply(&joint).unwrap();
        let before = joint.marginal(&[0]).unwrap();
        let after = out.marginal(&[0]).unwrap();
        assert!(before.trace_distance(&after).unwrap() < 1e-11);
    }

    #[test]
    fn rel_entropy_contracts_under_channels() {
        let mut rng = ChaCha12Rng::seed_from_u64(59);
        for trial in 0..100 {
            let env = 2 + trial % 4;
            let ch = haar_channel(&[2, 2], &[2], env, &mut rng).unwrap();
            let rho = random_density(&[2, 2], 4, &mut rng);
            let sigma = random_density(&[2, 2], 4, &mut rng);
            let before = rel_entropy(&rho, &sigma).unwrap();
            let after =
                rel_entropy(&ch.apply(&rho).unwrap(), &ch.apply(&sigma).unwrap()).unwrap();
            assert!(
                after <= before + 1e-9,
                "processing increased divergence: {after} > {before}"
            );
        }
    }

    #[test]
    fn purification_reproduces_the_marginal() {
        let mut rng = ChaCha12Rng::seed_from_u64(61);
        for rank in 1..=4 {
            let rho = random_density(&[2, 2], rank, &mut rng);
            let pur = purify(&rho).unwrap();
            let full = pur.state();
            assert_eq!(full.dims(), &[2, 2, 2, 2]);
            let back = full.marginal(&[0, 1]).unwrap();
            assert!(back.trace_distance(&rho).unwrap() < 1e-10);
        }

        // A pure input purifies to itself tensor the first ancilla level.
        let psi = DensityMatrix::pure(&[2], &[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let pur = purify(&psi).unwrap();
        let anc = pur.state().marginal(&[1]).unwrap();
        let ground = DensityMatrix::pure(&[2], &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(anc.trace_distance(&ground).unwrap() < 1e-10);

        // Maximally mixed input: ancilla marginal is also maximally mixed.
        let mixed = DensityMatrix::maximally_mixed(&[2]);
        let pur = purify(&mixed).unwrap();
        let anc = pur.state().marginal(&[1]).unwrap();
        assert!(anc.trace_distance(&mixed).unwrap() < 1e-12);
    }

    #[test]
    fn channel_state_duality_keeps_the_source_marginal() {
        let mut rng = ChaCha12Rng::seed_from_u64(67);
        let rho = random_density(&[2, 2], 4, &mut rng);

        let id = KrausChannel::identity(&[2, 2]);
        let dual = channel_to_state(&id, &rho).unwrap();
        let pur = purify(&rho).unwrap();
        assert!(dual.trace_distance(&pur.state()).unwrap() < 1e-11);

        for trial in 0..10 {
            let ch = haar_channel(&[2, 2], &[2], 2 + trial % 4, &mut rng).unwrap();
            let sigma = channel_to_state(&ch, &rho).unwrap();
            assert_eq!(sigma.dims(), &[2, 2, 2]);
            let marg = sigma.marginal(&[0, 1]).unwrap();
            assert!(marg.trace_distance(&rho).unwrap() < 1e-10);
        }
    }

    #[test]
    fn damping_model_matches_hand_calculations() {
        let (rho_x, ch) = amplitude_damping_model(0.7, 0.3).unwrap();
        assert_eq!(rho_x.dims(), &[2, 2]);
        assert_eq!(ch.in_dims(), &[2, 2]);
        assert_eq!(ch.out_dims(), &[2]);

        // First-factor spectrum {(1+(1-p))/2, (1-(1-p))/2} = {0.85, 0.15}.
        let first = rho_x.marginal(&[0]).unwrap();
        let eig = first.eig_hermitian().unwrap();
        assert!((eig.values[0] - 0.15).abs() < 1e-12);
        assert!((eig.values[1] - 0.85).abs() < 1e-12);
        let second = rho_x.marginal(&[1]).unwrap();
        assert!(second
            .trace_distance(&DensityMatrix::maximally_mixed(&[2]))
            .unwrap()
            < 1e-12);

        // Full damping of an excited first qubit lands in the ground state.
        let (_, full) = amplitude_damping_model(1.0, 0.3).unwrap();
        let excited = DensityMatrix::pure(&[2], &[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let input = excited.tensor_with(&DensityMatrix::maximally_mixed(&[2]));
        let out = full.apply(&input).unwrap();
        let ground = DensityMatrix::pure(&[2], &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(out.trace_distance(&ground).unwrap() < 1e-12);

        // Partial damping of the same input: diag(lambda, 1 - lambda).
        let out = ch.apply(&input).unwrap();
        assert!((out.matrix()[(0, 0)].re - 0.7).abs() < 1e-12);
        assert!((out.matrix()[(1, 1)].re - 0.3).abs() < 1e-12);

        // The lambda = 0 channel is plain discarding of the second qubit.
        let (_, none) = amplitude_damping_model(0.0, 0.3).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(71);
        let joint = random_density(&[2, 2], 4, &mut rng);
        let out = none.apply(&joint).unwrap();
        let marg = joint.marginal(&[0]).unwrap();
        assert!(out.trace_distance(&marg).unwrap() < 1e-11);

        assert!(amplitude_damping_model(1.5, 0.3).is_err());
        assert!(amplitude_damping_model(0.7, -0.1).is_err());
    }

    #[test]
    fn damping_kraus_set_agrees_with_two_stage_oracle() {
        // Oracle: apply damp (x) id on the pair as 4x4 Kraus operators, then
        // trace out the second qubit.
        let lambda = 0.7f64;
        let s = (1.0 - lambda).sqrt();
        let r = lambda.sqrt();
        let z = c(0.0, 0.0);
        let k1 = CMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), z, z, c(s, 0.0)],
        );
        let k2 = CMatrix::from_row_slice(2, 2, &[z, c(r, 0.0), z, z]);
        let id = CMatrix::identity(2, 2);
        let pair = KrausChannel::new(
            vec![2, 2],
            vec![2, 2],
            vec![k1.kronecker(&id), k2.kronecker(&id)],
        )
        .unwrap();

        let (_, ch) = amplitude_damping_model(lambda, 0.3).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(73);
        for _ in 0..20 {
            let rho = random_density(&[2, 2], 4, &mut rng);
            let expect = pair.apply(&rho).unwrap().marginal(&[0]).unwrap();
            let got = ch.apply(&rho).unwrap();
            assert!(got.trace_distance(&expect).unwrap() < 1e-11);
        }
    }
}
