//! Kraus and Choi representations of channels, real operations, the imbit
//! dilation and quantum-real states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{
    herm_eigvals, kron, partial_trace, partial_transpose, pauli, CMat, DensityMatrix, C64, ONE, REAL_TOL,
};

/// Tolerance on Σ K†K for trace preservation and sub-normalization.
pub const COMPLETENESS_TOL: f64 = 1e-10;
/// Tolerance for the T_{BB'} invariance check on Choi matrices.
pub const CHOI_SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KrausJson", into = "KrausJson")]
pub struct KrausChannel {
    kraus: Vec<CMat>,
    trace_preserving: bool,
}

#[derive(Serialize, Deserialize)]
struct KrausJson {
    kraus: Vec<CMat>,
    trace_preserving: bool,
}

impl TryFrom<KrausJson> for KrausChannel {
    type Error = Error;
    fn try_from(j: KrausJson) -> Result<Self> {
        KrausChannel::new(j.kraus, j.trace_preserving)
    }
}

impl From<KrausChannel> for KrausJson {
    fn from(ch: KrausChannel) -> Self {
        KrausJson {
            kraus: ch.kraus,
            trace_preserving: ch.trace_preserving,
        }
    }
}

impl KrausChannel {
    /// Validates Σ K†K = I (`trace_preserving`) or Σ K†K ≤ I.
    pub fn new(kraus: Vec<CMat>, trace_preserving: bool) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidChannel("no Kraus operators".into()))?;
        let d = first.dim();
        if let Some(bad) = kraus.iter().find(|k| k.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.dim(),
            });
        }
        let gram = completeness(&kraus);
        if trace_preserving {
            let dev = gram.max_abs_diff(&CMat::identity(d));
            if dev > COMPLETENESS_TOL {
                return Err(Error::InvalidChannel(format!(
                    "sum of K^dag K deviates from identity by {dev:e}"
                )));
            }
        } else {
            let top = herm_eigvals(&gram)?[0];
            if top > 1.0 + COMPLETENESS_TOL {
                return Err(Error::InvalidChannel(format!(
                    "sum of K^dag K has eigenvalue {top} above 1"
                )));
            }
        }
        Ok(KrausChannel {
            kraus,
            trace_preserving,
        })
    }

    pub fn identity(dim: usize) -> Self {
        KrausChannel {
            kraus: vec![CMat::identity(dim)],
            trace_preserving: true,
        }
    }

    /// ρ ↦ UρU† for a unitary U.
    pub fn unitary(u: CMat) -> Result<Self> {
        Self::new(vec![u], true)
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].dim()
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    /// True iff every Kraus entry in this representation is real.
    pub fn is_real(&self) -> bool {
        self.kraus.iter().all(|k| k.is_real(REAL_TOL))
    }

    /// Σ K ρ K†
    pub fn apply(&self, rho: &CMat) -> Result<CMat> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rho.dim(),
            });
        }
        let mut out = CMat::zeros(self.dim());
        for k in &self.kraus {
            out += &rho.conjugate_by(k);
        }
        Ok(out)
    }

    /// Applies a trace-preserving channel to a density matrix.
    pub fn apply_density(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if !self.trace_preserving {
            return Err(Error::InvalidChannel(
                "sub-normalized channel output is not a density matrix".into(),
            ));
        }
        DensityMatrix::from_numeric(self.apply(rho.mat())?, rho.factors().to_vec())
    }

    /// Σ_{jk} |j⟩⟨k| ⊗ Λ(|j⟩⟨k|), divided by the input dimension if `normalized`.
    pub fn choi(&self, normalized: bool) -> ChoiMatrix {
        let d = self.dim();
        let omega = CMat::from_fn(d * d, |r, c| {
            let (r0, r1) = (r / d, r % d);
            let (c0, c1) = (c / d, c % d);
            if r0 == r1 && c0 == c1 {
                ONE
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let mut mat = CMat::zeros(d * d);
        for k in &self.kraus {
            mat += &omega.conjugate_by(&kron(&CMat::identity(d), k));
        }
        if normalized {
            mat = mat.scale_re(1.0 / d as f64);
        }
        ChoiMatrix {
            mat,
            d_in: d,
            d_out: d,
            normalized,
        }
    }

    /// `self` after `first`: Kraus operators K_i L_j.
    pub fn compose(&self, first: &KrausChannel) -> Result<KrausChannel> {
        if self.dim() != first.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: first.dim(),
            });
        }
        let kraus = self
            .kraus
            .iter()
            .flat_map(|k| first.kraus.iter().map(move |l| k.matmul(l)))
            .collect();
        Self::new(kraus, self.trace_preserving && first.trace_preserving)
    }

    /// Λ_A ⊗ Λ_B acting on the joint space.
    pub fn tensor(&self, other: &KrausChannel) -> KrausChannel {
        let kraus = self
            .kraus
            .iter()
            .flat_map(|k| other.kraus.iter().map(move |l| kron(k, l)))
            .collect();
        KrausChannel {
            kraus,
            trace_preserving: self.trace_preserving && other.trace_preserving,
        }
    }
}

fn completeness(kraus: &[CMat]) -> CMat {
    let mut gram = CMat::zeros(kraus[0].dim());
    for k in kraus {
        gram += &k.adjoint().matmul(k);
    }
    gram
}

/// Choi operator on (input ⊗ output).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChoiMatrix {
    pub mat: CMat,
    pub d_in: usize,
    pub d_out: usize,
    pub normalized: bool,
}

impl ChoiMatrix {
    pub fn factors(&self) -> [usize; 2] {
        [self.d_in, self.d_out]
    }
}

/// Λ(ρ) = d_A tr_A[(ρᵀ ⊗ I) N] for a normalized Choi matrix N.
pub fn apply_via_choi(choi: &ChoiMatrix, rho: &CMat) -> Result<CMat> {
    if !choi.normalized {
        return Err(Error::NormalizationMismatch);
    }
    if rho.dim() != choi.d_in {
        return Err(Error::DimensionMismatch {
            expected: choi.d_in,
            found: rho.dim(),
        });
    }
    let lifted = kron(&rho.transpose(), &CMat::identity(choi.d_out));
    let reduced = partial_trace(&lifted.matmul(&choi.mat), &choi.factors(), &[1])?;
    Ok(reduced.scale_re(choi.d_in as f64))
}

/// Real channel on (system ⊗ imbit) with Kraus operators
/// K ⊗ |+̂⟩⟨+̂| + K* ⊗ |−̂⟩⟨−̂| = Re K ⊗ I + Im K ⊗ iσ_y.
pub fn imbit_dilation(ch: &KrausChannel) -> KrausChannel {
    let i2 = CMat::identity(2);
    let j = pauli(2).scale(C64::new(0.0, 1.0)).real_part();
    let kraus = ch
        .kraus
        .iter()
        .map(|k| {
            let re = k.real_part();
            let im = CMat::from_fn(k.dim(), |r, c| C64::new(k[(r, c)].im, 0.0));
            &kron(&re, &i2) + &kron(&im, &j)
        })
        .collect();
    KrausChannel {
        kraus,
        trace_preserving: ch.trace_preserving,
    }
}

/// Whether the Choi matrix of Λ_A ⊗ Λ_B is invariant under partial transpose
/// of Bob's input and output. Refuses a non-real `ch_b`.
pub fn lqrcc_choi_invariance_check(ch_a: &KrausChannel, ch_b: &KrausChannel) -> Result<bool> {
    if !ch_b.is_real() {
        return Err(Error::NotReal);
    }
    let (da, db) = (ch_a.dim(), ch_b.dim());
    // choi() orders the joint space as (A, B, A', B').
    let gamma = ch_a.tensor(ch_b).choi(false).mat;
    let factors = [da, db, da, db];
    let pt = partial_transpose(&gamma, &factors, &[1, 3])?;
    Ok(pt.max_abs_diff(&gamma) <= CHOI_SYMMETRY_TOL)
}

/// Σ_j p_j ρ_j^A ⊗ σ_j^B with every σ_j^B real.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QRState {
    terms: Vec<(f64, DensityMatrix, DensityMatrix)>,
}

impl QRState {
    pub fn new(terms: Vec<(f64, DensityMatrix, DensityMatrix)>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("quantum-real state needs at least one term".into()))?;
        let (da, db) = (first.1.dim(), first.2.dim());
        let mut total = 0.0;
        for (p, a, b) in &terms {
            if *p < 0.0 {
                return Err(Error::InvalidParameter(format!("negative weight {p}")));
            }
            if a.dim() != da || b.dim() != db {
                return Err(Error::DimensionMismatch {
                    expected: da * db,
                    found: a.dim() * b.dim(),
                });
            }
            if !b.is_real() {
                return Err(Error::NotReal);
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("weights sum to {total}")));
        }
        Ok(QRState { terms })
    }

    pub fn terms(&self) -> &[(f64, DensityMatrix, DensityMatrix)] {
        &self.terms
    }
}

pub fn qr_state_density(s: &QRState) -> DensityMatrix {
    let (_, a0, b0) = &s.terms[0];
    let mut factors = a0.factors().to_vec();
    factors.extend_from_slice(b0.factors());
    let mut acc = CMat::zeros(a0.dim() * b0.dim());
    for (p, a, b) in &s.terms {
        acc += &kron(a.mat(), b.mat()).scale_re(*p);
    }
    DensityMatrix::from_numeric(acc, factors).expect("mixture of product states")
}

fn scaled(m: CMat, w: f64) -> CMat {
    m.scale_re(w.sqrt())
}

/// ρ ↦ ½(ρ + σ_xσ_z ρ σ_zσ_x)
pub fn mix_identity_xz() -> KrausChannel {
    let xz = pauli(1).matmul(&pauli(3));
    KrausChannel::new(vec![scaled(CMat::identity(2), 0.5), scaled(xz, 0.5)], true)
        .expect("valid channel")
}

/// ρ ↦ ½(σ_x ρ σ_x + σ_z ρ σ_z)
pub fn mix_x_z() -> KrausChannel {
    KrausChannel::new(vec![scaled(pauli(1), 0.5), scaled(pauli(3), 0.5)], true).expect("valid channel")
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} outside [0, 1]")))
    }
}

/// ρ ↦ pρ + (1−p) σ_xσ_z ρ σ_zσ_x
pub fn task_a_channel(p: f64) -> Result<KrausChannel> {
    check_unit("p", p)?;
    let xz = pauli(1).matmul(&pauli(3));
    KrausChannel::new(vec![scaled(CMat::identity(2), p), scaled(xz, 1.0 - p)], true)
}

/// ρ ↦ wρ + (1−w) I/2, written with real Kraus operators
/// √w I and √((1−w)/2) |i⟩⟨j|.
pub fn task_b_channel(w: f64) -> Result<KrausChannel> {
    check_unit("w", w)?;
    let mut kraus = vec![scaled(CMat::identity(2), w)];
    for i in 0..2 {
        for j in 0..2 {
            let mut e = CMat::zeros(2);
            e[(i, j)] = ONE;
            kraus.push(scaled(e, (1.0 - w) / 2.0));
        }
    }
    KrausChannel::new(kraus, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::geometric_measure;
    use crate::qmat::PureState;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &CMat, b: &CMat, tol: f64) {
        let d = a.max_abs_diff(b);
        assert!(d <= tol, "difference {d:e}\n{a:?}\n{b:?}");
    }

    #[test]
    fn realness_of_representations() {
        assert!(KrausChannel::identity(2).is_real());
        assert!(!KrausChannel::unitary(pauli(2)).unwrap().is_real());
        assert!(mix_x_z().is_real());
        assert!(mix_identity_xz().is_real());
        assert!(task_a_channel(0.3).unwrap().is_real());
        assert!(task_b_channel(0.4).unwrap().is_real());
    }

    #[test]
    fn rejects_bad_channels() {
        assert!(KrausChannel::new(vec![], true).is_err());
        assert!(KrausChannel::new(vec![CMat::identity(2).scale_re(2.0)], false).is_err());
        assert!(KrausChannel::new(vec![CMat::identity(2).scale_re(0.5)], true).is_err());
        assert!(KrausChannel::new(vec![CMat::identity(2).scale_re(0.5)], false).is_ok());
        assert!(KrausChannel::new(vec![CMat::identity(2), CMat::identity(3)], false).is_err());
        assert!(task_a_channel(1.2).is_err());
    }

    #[test]
    fn mix_identity_xz_outputs() {
        let n = mix_identity_xz();
        let real = DensityMatrix::qubit_bloch([0.3, 0.0, -0.6]).unwrap();
        close(&n.apply(real.mat()).unwrap(), &CMat::identity(2).scale_re(0.5), 1e-12);
        let plus = PureState::imbit_plus().projector();
        close(&n.apply(&plus).unwrap(), &plus, 1e-12);
        let rho = DensityMatrix::qubit_bloch([0.1, 0.2, 0.3]).unwrap();
        close(&KrausChannel::identity(2).apply(rho.mat()).unwrap(), rho.mat(), 0.0);
    }

    #[test]
    fn choi_examples() {
        let id = KrausChannel::identity(2).choi(true);
        close(&id.mat, &PureState::phi_plus().projector(), 1e-12);
        let n = mix_identity_xz().choi(true).mat;
        let expect_n = (&PureState::phi_plus().projector() + &PureState::psi_minus().projector()).scale_re(0.5);
        close(&n, &expect_n, 1e-12);
        let m = mix_x_z().choi(true).mat;
        let expect_m = (&PureState::phi_minus().projector() + &PureState::psi_plus().projector()).scale_re(0.5);
        close(&m, &expect_m, 1e-12);
    }

    #[test]
    fn choi_of_trace_preserving_has_identity_marginal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ch = random::channel(&mut rng, 3, 2);
        let c = ch.choi(false);
        let marginal = partial_trace(&c.mat, &c.factors(), &[0]).unwrap();
        close(&marginal, &CMat::identity(3), 1e-10);
        assert!(herm_eigvals(&c.mat).unwrap().last().unwrap() > &-1e-10);
    }

    #[test]
    fn apply_via_choi_examples() {
        let plus = PureState::imbit_plus().projector();
        let minus = PureState::imbit_minus().projector();
        close(&apply_via_choi(&mix_identity_xz().choi(true), &plus).unwrap(), &plus, 1e-12);
        close(&apply_via_choi(&mix_x_z().choi(true), &plus).unwrap(), &minus, 1e-12);
        assert!(matches!(
            apply_via_choi(&mix_x_z().choi(false), &plus),
            Err(Error::NormalizationMismatch)
        ));
    }

    #[test]
    fn choi_round_trip_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in [2, 3] {
            for _ in 0..100 {
                let ch = random::channel(&mut rng, d, 3);
                let rho = random::density(&mut rng, &[d]);
                let direct = ch.apply(rho.mat()).unwrap();
                let via = apply_via_choi(&ch.choi(true), rho.mat()).unwrap();
                close(&direct, &via, 1e-11);
            }
        }
    }

    #[test]
    fn real_channels_commute_with_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let ch = random::real_channel(&mut rng, 3, 2);
            assert!(ch.is_real());
            let rho = random::density(&mut rng, &[3]);
            let a = ch.apply(&rho.mat().transpose()).unwrap();
            let b = ch.apply(rho.mat()).unwrap().transpose();
            close(&a, &b, 1e-12);
        }
    }

    #[test]
    fn composition_of_real_channels_is_real() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random::real_channel(&mut rng, 2, 2);
        let b = random::real_channel(&mut rng, 2, 3);
        let c = a.compose(&b).unwrap();
        assert!(c.is_real());
        assert!(c.is_trace_preserving());
    }

    fn check_dilation(ch: &KrausChannel, rng: &mut ChaCha8Rng) {
        let dil = imbit_dilation(ch);
        assert!(dil.is_real());
        let plus = PureState::imbit_plus().projector();
        for _ in 0..10 {
            let rho = random::density(rng, &[ch.dim()]);
            let out = dil.apply(&kron(rho.mat(), &plus)).unwrap();
            let expect = kron(&ch.apply(rho.mat()).unwrap(), &plus);
            close(&out, &expect, 1e-12);
        }
    }

    #[test]
    fn dilation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        check_dilation(&KrausChannel::identity(2), &mut rng);
        check_dilation(&KrausChannel::unitary(pauli(2)).unwrap(), &mut rng);

        // Λ₊ prepares |+̂⟩ from anything.
        let v = PureState::imbit_plus();
        let a = v.amplitudes();
        let prep = KrausChannel::new(
            (0..2)
                .map(|k| CMat::from_fn(2, |r, c| if c == k { a[r] } else { C64::new(0.0, 0.0) }))
                .collect(),
            true,
        )
        .unwrap();
        check_dilation(&prep, &mut rng);
        let zero_sigma = PureState::basis(2, 0).density().kron(&DensityMatrix::qubit_bloch([0.2, 0.0, 0.5]).unwrap());
        assert!(geometric_measure(&zero_sigma) < geometric_measure(&v.density()));
    }

    #[test]
    fn dilation_preserves_completeness() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let tp = random::channel(&mut rng, 3, 2);
        assert!(imbit_dilation(&tp).is_trace_preserving());
        let gram = completeness(imbit_dilation(&tp).kraus());
        close(&gram, &CMat::identity(6), 1e-10);
        let sub = random::subnormalized_channel(&mut rng, 2, 3, 0.7);
        let gram = completeness(imbit_dilation(&sub).kraus());
        assert!(herm_eigvals(&gram).unwrap()[0] <= 1.0 + 1e-10);
    }

    #[test]
    fn lqrcc_invariance_examples() {
        let id = KrausChannel::identity(2);
        assert!(lqrcc_choi_invariance_check(&id, &id).unwrap());
        let y = KrausChannel::unitary(pauli(2)).unwrap();
        assert!(lqrcc_choi_invariance_check(&y, &mix_x_z()).unwrap());
        assert!(matches!(lqrcc_choi_invariance_check(&id, &y), Err(Error::NotReal)));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random::channel(&mut rng, 2, 2);
        let b = random::real_channel(&mut rng, 2, 2);
        assert!(lqrcc_choi_invariance_check(&a, &b).unwrap());
    }

    #[test]
    fn quantum_real_states() {
        let zero = PureState::basis(2, 0).density();
        let one = PureState::basis(2, 1).density();
        let mixed = DensityMatrix::maximally_mixed(vec![2]);
        let single = QRState::new(vec![(1.0, zero.clone(), mixed.clone())]).unwrap();
        close(qr_state_density(&single).mat(), &kron(zero.mat(), mixed.mat()), 0.0);

        let s = QRState::new(vec![(0.5, zero.clone(), mixed.clone()), (0.5, one.clone(), zero.clone())]).unwrap();
        let rho = qr_state_density(&s);
        let expect = CMat::diag(&[0.25, 0.25, 0.5, 0.0]);
        close(rho.mat(), &expect, 1e-15);
        assert!(rho.partial_trace(&[1]).unwrap().is_real());

        let imag = PureState::imbit_plus().density();
        assert!(matches!(QRState::new(vec![(1.0, zero, imag)]), Err(Error::NotReal)));
    }

    #[test]
    fn named_task_channels() {
        let dep = task_b_channel(0.0).unwrap();
        let rho = DensityMatrix::qubit_bloch([0.3, -0.4, 0.5]).unwrap();
        close(&dep.apply(rho.mat()).unwrap(), &CMat::identity(2).scale_re(0.5), 1e-12);
        let half = task_a_channel(0.5).unwrap();
        close(&half.apply(rho.mat()).unwrap(), &mix_identity_xz().apply(rho.mat()).unwrap(), 1e-12);
    }

    #[test]
    fn channel_json_round_trip() {
        let ch = mix_x_z();
        let text = serde_json::to_string(&ch).unwrap();
        assert!(text.contains("\"kraus\"") && text.contains("\"trace_preserving\":true"));
        let back: KrausChannel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, ch);
    }
}
