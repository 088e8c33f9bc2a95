//! Dense complex matrices and the quantum-state primitives built on them.
//!
//! Tensor products use a big-endian factor order: the leftmost factor is the
//! slowest-varying index of a basis label.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Hermiticity tolerance for validated density matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Trace tolerance for validated density matrices.
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted as "numerically non-negative".
pub const PSD_TOL: f64 = 1e-10;
/// Entries with imaginary part at most this are treated as real.
pub const REAL_TOL: f64 = 1e-12;

const JACOBI_REL_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 64;
/// Spectral functions treat eigenvalues at or below this as exact zeros.
pub const ZERO_EIGENVALUE: f64 = 1e-14;

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMat {
    dim: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        CMat {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        CMat { dim, data }
    }

    /// Builds a matrix from row-major entries. Panics unless `data.len()` is a square.
    pub fn from_vec(data: Vec<C64>) -> Self {
        let dim = (data.len() as f64).sqrt().round() as usize;
        assert_eq!(dim * dim, data.len(), "CMat::from_vec needs a square number of entries");
        CMat { dim, data }
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), dim * dim);
        CMat {
            dim,
            data: entries.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// |v⟩⟨v|
    pub fn outer(v: &[C64]) -> Self {
        let n = v.len();
        Self::from_fn(n, |r, c| v[r] * v[c].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        CMat {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Entrywise real part.
    pub fn real_part(&self) -> Self {
        CMat {
            dim: self.dim,
            data: self.data.iter().map(|z| C64::new(z.re, 0.0)).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn scale(&self, k: C64) -> Self {
        CMat {
            dim: self.dim,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    pub fn scale_re(&self, k: f64) -> Self {
        CMat {
            dim: self.dim,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.max_imag() <= tol
    }

    /// max |M − M†|
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.data[r * n + c] - self.data[c * n + r].conj()).norm());
            }
        }
        worst
    }

    /// (M + M†)/2
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |r, c| (self[(r, c)] + self[(c, r)].conj()) * 0.5)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// tr(A†B)
    pub fn inner(&self, other: &CMat) -> C64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// tr(A B) without forming the product.
    pub fn trace_product(&self, other: &CMat) -> C64 {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = ZERO;
        for r in 0..n {
            for c in 0..n {
                acc += self.data[r * n + c] * other.data[c * n + r];
            }
        }
        acc
    }

    pub fn matmul(&self, other: &CMat) -> Self {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out[r * n..(r + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        CMat { dim: n, data: out }
    }

    /// A X A†
    pub fn conjugate_by(&self, a: &CMat) -> Self {
        a.matmul(self).matmul(&a.adjoint())
    }

    pub fn apply_to(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        let n = self.dim;
        (0..n)
            .map(|r| (0..n).map(|c| self.data[r * n + c] * v[c]).sum())
            .collect()
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

impl Add<&CMat> for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim);
        CMat {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub<&CMat> for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim);
        CMat {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<&CMat> for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        self.matmul(rhs)
    }
}

impl Mul<f64> for &CMat {
    type Output = CMat;
    fn mul(self, k: f64) -> CMat {
        self.scale_re(k)
    }
}

impl Neg for &CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        self.scale_re(-1.0)
    }
}

impl AddAssign<&CMat> for CMat {
    fn add_assign(&mut self, rhs: &CMat) {
        assert_eq!(self.dim, rhs.dim);
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat({}x{})", self.dim, self.dim)?;
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|c| {
                    let z = self[(r, c)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Pauli matrix by index: 0 = I, 1 = σx, 2 = σy, 3 = σz.
pub fn pauli(k: usize) -> CMat {
    let o = ZERO;
    let l = ONE;
    match k {
        0 => CMat::identity(2),
        1 => CMat::from_vec(vec![o, l, l, o]),
        2 => CMat::from_vec(vec![o, -I, I, o]),
        3 => CMat::from_vec(vec![l, o, o, -l]),
        _ => panic!("pauli index {k} out of range"),
    }
}

/// Qubit operator ½(I + r·σ).
pub fn bloch_to_density(r: [f64; 3]) -> CMat {
    let mut m = CMat::identity(2);
    for (k, &x) in r.iter().enumerate() {
        m += &pauli(k + 1).scale_re(x);
    }
    m.scale_re(0.5)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (na, nb) = (a.dim, b.dim);
    let n = na * nb;
    let mut out = vec![ZERO; n * n];
    for ar in 0..na {
        for ac in 0..na {
            let x = a.data[ar * na + ac];
            if x == ZERO {
                continue;
            }
            for br in 0..nb {
                let row = (ar * nb + br) * n + ac * nb;
                for bc in 0..nb {
                    out[row + bc] = x * b.data[br * nb + bc];
                }
            }
        }
    }
    CMat { dim: n, data: out }
}

pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| x * y))
        .collect()
}

fn check_factors(dim: usize, factors: &[usize]) -> Result<()> {
    if factors.is_empty() || factors.contains(&0) || factors.iter().product::<usize>() != dim {
        return Err(Error::BadFactors {
            factors: factors.to_vec(),
            dim,
        });
    }
    Ok(())
}

fn check_indices(indices: &[usize], count: usize) -> Result<()> {
    match indices.iter().find(|&&i| i >= count) {
        Some(&index) => Err(Error::IndexOutOfRange { index, count }),
        None => Ok(()),
    }
}

/// Splits a flat index into big-endian digits.
fn digits(mut idx: usize, factors: &[usize], out: &mut [usize]) {
    for (slot, &f) in out.iter_mut().zip(factors).rev() {
        *slot = idx % f;
        idx /= f;
    }
}

fn compose(ds: &[usize], factors: &[usize]) -> usize {
    ds.iter().zip(factors).fold(0, |acc, (&d, &f)| acc * f + d)
}

/// Traces out every factor not listed in `keep`. The kept factors retain
/// their original relative order.
pub fn partial_trace(m: &CMat, factors: &[usize], keep: &[usize]) -> Result<CMat> {
    check_factors(m.dim, factors)?;
    check_indices(keep, factors.len())?;
    let kept: Vec<usize> = (0..factors.len()).filter(|i| keep.contains(i)).collect();
    let kept_factors: Vec<usize> = kept.iter().map(|&i| factors[i]).collect();
    let traced: Vec<usize> = (0..factors.len()).filter(|i| !keep.contains(i)).collect();
    let out_dim: usize = kept_factors.iter().product();
    let mut out = CMat::zeros(out_dim);

    let n = m.dim;
    let k = factors.len();
    let mut rd = vec![0; k];
    let mut cd = vec![0; k];
    let mut kr = vec![0; kept.len()];
    let mut kc = vec![0; kept.len()];
    for r in 0..n {
        digits(r, factors, &mut rd);
        for c in 0..n {
            digits(c, factors, &mut cd);
            if traced.iter().any(|&t| rd[t] != cd[t]) {
                continue;
            }
            for (j, &i) in kept.iter().enumerate() {
                kr[j] = rd[i];
                kc[j] = cd[i];
            }
            let (orow, ocol) = (compose(&kr, &kept_factors), compose(&kc, &kept_factors));
            out.data[orow * out_dim + ocol] += m.data[r * n + c];
        }
    }
    Ok(out)
}

/// Transposes the listed tensor factors only.
pub fn partial_transpose(m: &CMat, factors: &[usize], which: &[usize]) -> Result<CMat> {
    check_factors(m.dim, factors)?;
    check_indices(which, factors.len())?;
    let n = m.dim;
    let k = factors.len();
    let mut out = CMat::zeros(n);
    let mut rd = vec![0; k];
    let mut cd = vec![0; k];
    for r in 0..n {
        for c in 0..n {
            digits(r, factors, &mut rd);
            digits(c, factors, &mut cd);
            for &w in which {
                std::mem::swap(&mut rd[w], &mut cd[w]);
            }
            out.data[compose(&rd, factors) * n + compose(&cd, factors)] = m.data[r * n + c];
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix; eigenvalues sorted descending,
/// eigenvectors stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct EigSpectrum {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl EigSpectrum {
    /// V diag(f(λ)) V†
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        let mut out = CMat::zeros(n);
        for (k, &w) in fv.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for r in 0..n {
                let a = v[(r, k)] * w;
                for c in 0..n {
                    out.data[r * n + c] += a * v[(c, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> CMat {
        self.map(|l| l)
    }

    pub fn column(&self, k: usize) -> Vec<C64> {
        (0..self.values.len()).map(|r| self.vectors[(r, k)]).collect()
    }
}

fn check_hermitian(m: &CMat) -> Result<()> {
    let err = m.hermiticity_error();
    if err > 1e-10 * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian(err));
    }
    Ok(())
}

/// Cyclic complex Jacobi. Each rotation first removes the phase of the
/// pivot, then applies a real Givens rotation.
fn jacobi(m: &CMat, want_vectors: bool) -> (Vec<f64>, Option<Vec<C64>>) {
    let n = m.dim;
    let mut a = m.hermitian_part().data;
    let mut v = if want_vectors { Some(CMat::identity(n).data) } else { None };
    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let target = JACOBI_REL_TOL * scale;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q].norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let mag = apq.norm();
                if mag <= f64::MIN_POSITIVE || mag <= 1e-18 * target {
                    continue;
                }
                let phase = apq / mag;
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let jpp = C64::new(c, 0.0);
                let jpq = C64::new(s, 0.0);
                let jqp = phase.conj() * (-s);
                let jqq = phase.conj() * c;

                // A <- A J
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * jpp + akq * jqp;
                    a[k * n + q] = akp * jpq + akq * jqq;
                }
                // A <- J† A
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = jpp.conj() * apk + jqp.conj() * aqk;
                    a[q * n + k] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                a[p * n + q] = ZERO;
                a[q * n + p] = ZERO;
                a[p * n + p].im = 0.0;
                a[q * n + q].im = 0.0;

                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = vkp * jpp + vkq * jqp;
                        v[k * n + q] = vkp * jpq + vkq * jqq;
                    }
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i].re).collect(), v)
}

pub fn herm_eig(m: &CMat) -> Result<EigSpectrum> {
    check_hermitian(m)?;
    let n = m.dim;
    let (vals, vecs) = jacobi(m, true);
    let vecs = vecs.expect("vectors requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| vals[y].total_cmp(&vals[x]));
    let values = order.iter().map(|&k| vals[k]).collect();
    let vectors = CMat::from_fn(n, |r, c| vecs[r * n + order[c]]);
    Ok(EigSpectrum { values, vectors })
}

/// Eigenvalues only, sorted descending.
pub fn herm_eigvals(m: &CMat) -> Result<Vec<f64>> {
    check_hermitian(m)?;
    let (mut vals, _) = jacobi(m, false);
    vals.sort_by(|x, y| y.total_cmp(x));
    Ok(vals)
}

/// Sum of singular values.
pub fn trace_norm(m: &CMat) -> f64 {
    if m.hermiticity_error() <= HERMITIAN_TOL * m.max_abs().max(1.0) {
        let (vals, _) = jacobi(m, false);
        vals.iter().map(|l| l.abs()).sum()
    } else {
        let gram = m.adjoint().matmul(m);
        let (vals, _) = jacobi(&gram, false);
        vals.iter().map(|l| l.max(0.0).sqrt()).sum()
    }
}

/// Square root of a positive semidefinite matrix; eigenvalues at rounding
/// level (including small negatives) are clamped to zero.
pub fn sqrt_psd(m: &CMat) -> Result<CMat> {
    Ok(herm_eig(m)?.map(|l| if l <= ZERO_EIGENVALUE { 0.0 } else { l.sqrt() }))
}

/// tr √M for a PSD matrix, with the same clamping as [`sqrt_psd`].
pub fn sqrt_trace_psd(m: &CMat) -> Result<f64> {
    Ok(herm_eigvals(m)?
        .iter()
        .map(|&l| if l <= ZERO_EIGENVALUE { 0.0 } else { l.sqrt() })
        .sum())
}

/// Spectral power M^s of a PSD matrix with the convention 0^s = 0 for every
/// s, including s = 0.
pub fn power_psd(m: &CMat, s: f64) -> Result<CMat> {
    Ok(herm_eig(m)?.map(|l| if l <= ZERO_EIGENVALUE { 0.0 } else { l.powf(s) }))
}

/// Uhlmann fidelity [tr(√σ ρ √σ)^{1/2}]² for PSD operators of equal dimension.
pub fn fidelity_mat(rho: &CMat, sigma: &CMat) -> Result<f64> {
    if rho.dim != sigma.dim {
        return Err(Error::DimensionMismatch {
            expected: rho.dim,
            found: sigma.dim,
        });
    }
    let root = sqrt_psd(sigma)?;
    let t = sqrt_trace_psd(&rho.conjugate_by(&root))?;
    Ok(t * t)
}

pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(fidelity_mat(&rho.mat, &sigma.mat)?.clamp(0.0, 1.0))
}

/// Positive unit-trace Hermitian matrix over a declared tensor factorization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityJson", into = "DensityJson")]
pub struct DensityMatrix {
    mat: CMat,
    factors: Vec<usize>,
}

impl DensityMatrix {
    pub fn new(mat: CMat, factors: Vec<usize>) -> Result<Self> {
        check_factors(mat.dim, &factors)?;
        let herm = mat.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = mat.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let vals = herm_eigvals(&mat)?;
        let min = vals.last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(DensityMatrix { mat, factors })
    }

    /// Single-factor density matrix.
    pub fn from_mat(mat: CMat) -> Result<Self> {
        let d = mat.dim;
        Self::new(mat, vec![d])
    }

    /// Symmetrizes away rounding asymmetry before validating. Used for
    /// outputs of channels and reductions.
    pub fn from_numeric(mat: CMat, factors: Vec<usize>) -> Result<Self> {
        Self::new(mat.hermitian_part(), factors)
    }

    pub fn maximally_mixed(factors: Vec<usize>) -> Self {
        let d: usize = factors.iter().product();
        DensityMatrix {
            mat: CMat::identity(d).scale_re(1.0 / d as f64),
            factors,
        }
    }

    pub fn qubit_bloch(r: [f64; 3]) -> Result<Self> {
        Self::new(bloch_to_density(r), vec![2])
    }

    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    pub fn into_mat(self) -> CMat {
        self.mat
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.mat.dim
    }

    pub fn transpose(&self) -> Self {
        DensityMatrix {
            mat: self.mat.transpose(),
            factors: self.factors.clone(),
        }
    }

    /// True iff every entry has |imag| ≤ 1e-12.
    pub fn is_real(&self) -> bool {
        self.mat.is_real(REAL_TOL)
    }

    pub fn kron(&self, other: &DensityMatrix) -> Self {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        DensityMatrix {
            mat: kron(&self.mat, &other.mat),
            factors,
        }
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let m = partial_trace(&self.mat, &self.factors, keep)?;
        let factors = (0..self.factors.len())
            .filter(|i| keep.contains(i))
            .map(|i| self.factors[i])
            .collect();
        Ok(DensityMatrix {
            mat: m.hermitian_part(),
            factors,
        })
    }

    /// Convex combination Σ wᵢ ρᵢ; weights must be non-negative and sum to 1.
    pub fn mixture(terms: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let mut acc = CMat::zeros(first.1.dim());
        for (w, rho) in terms {
            if *w < 0.0 {
                return Err(Error::InvalidParameter(format!("negative weight {w}")));
            }
            if rho.dim() != acc.dim {
                return Err(Error::DimensionMismatch {
                    expected: acc.dim,
                    found: rho.dim(),
                });
            }
            acc += &rho.mat.scale_re(*w);
        }
        Self::new(acc, first.1.factors.clone())
    }
}

/// Normalized state vector over a tensor factorization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PureJson", into = "PureJson")]
pub struct PureState {
    amplitudes: Vec<C64>,
    factors: Vec<usize>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>, factors: Vec<usize>) -> Result<Self> {
        check_factors(amplitudes.len(), &factors)?;
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("state norm {norm} differs from 1")));
        }
        Ok(PureState { amplitudes, factors })
    }

    /// Normalizes `amplitudes` before construction.
    pub fn normalized(amplitudes: Vec<C64>, factors: Vec<usize>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Self::new(amplitudes.iter().map(|z| z / norm).collect(), factors)
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amps = vec![ZERO; dim];
        amps[k] = ONE;
        PureState {
            amplitudes: amps,
            factors: vec![dim],
        }
    }

    /// (|0⟩ + i|1⟩)/√2
    pub fn imbit_plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        PureState {
            amplitudes: vec![C64::new(h, 0.0), C64::new(0.0, h)],
            factors: vec![2],
        }
    }

    /// (|0⟩ − i|1⟩)/√2
    pub fn imbit_minus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        PureState {
            amplitudes: vec![C64::new(h, 0.0), C64::new(0.0, -h)],
            factors: vec![2],
        }
    }

    fn bell(a: [f64; 4]) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        PureState {
            amplitudes: a.iter().map(|&x| C64::new(x * h, 0.0)).collect(),
            factors: vec![2, 2],
        }
    }

    pub fn phi_plus() -> Self {
        Self::bell([1.0, 0.0, 0.0, 1.0])
    }

    pub fn phi_minus() -> Self {
        Self::bell([1.0, 0.0, 0.0, -1.0])
    }

    pub fn psi_plus() -> Self {
        Self::bell([0.0, 1.0, 1.0, 0.0])
    }

    pub fn psi_minus() -> Self {
        Self::bell([0.0, 1.0, -1.0, 0.0])
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn conj(&self) -> Self {
        PureState {
            amplitudes: self.amplitudes.iter().map(|z| z.conj()).collect(),
            factors: self.factors.clone(),
        }
    }

    /// ⟨self|other⟩
    pub fn overlap(&self, other: &PureState) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn kron(&self, other: &PureState) -> Self {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        PureState {
            amplitudes: kron_vec(&self.amplitudes, &other.amplitudes),
            factors,
        }
    }

    pub fn projector(&self) -> CMat {
        CMat::outer(&self.amplitudes)
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            mat: self.projector().hermitian_part(),
            factors: self.factors.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CMatJson {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl From<&CMat> for CMatJson {
    fn from(m: &CMat) -> Self {
        let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.dim)
                .map(|r| (0..m.dim).map(|c| f(&m[(r, c)])).collect())
                .collect()
        };
        CMatJson {
            dim: m.dim,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

impl TryFrom<CMatJson> for CMat {
    type Error = String;
    fn try_from(j: CMatJson) -> std::result::Result<Self, String> {
        let n = j.dim;
        let ok = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if n == 0 || !ok(&j.re) || !ok(&j.im) {
            return Err(format!("matrix rows do not match dim {n}"));
        }
        Ok(CMat::from_fn(n, |r, c| C64::new(j.re[r][c], j.im[r][c])))
    }
}

impl Serialize for CMat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CMatJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        CMat::try_from(CMatJson::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct DensityJson {
    #[serde(flatten)]
    mat: CMatJson,
    factors: Vec<usize>,
}

impl From<DensityMatrix> for DensityJson {
    fn from(d: DensityMatrix) -> Self {
        DensityJson {
            mat: CMatJson::from(&d.mat),
            factors: d.factors,
        }
    }
}

impl TryFrom<DensityJson> for DensityMatrix {
    type Error = String;
    fn try_from(j: DensityJson) -> std::result::Result<Self, String> {
        let mat = CMat::try_from(j.mat)?;
        DensityMatrix::new(mat, j.factors).map_err(|e| e.to_string())
    }
}

#[derive(Serialize, Deserialize)]
struct PureJson {
    re: Vec<f64>,
    im: Vec<f64>,
    factors: Vec<usize>,
}

impl From<PureState> for PureJson {
    fn from(p: PureState) -> Self {
        PureJson {
            re: p.amplitudes.iter().map(|z| z.re).collect(),
            im: p.amplitudes.iter().map(|z| z.im).collect(),
            factors: p.factors,
        }
    }
}

impl TryFrom<PureJson> for PureState {
    type Error = String;
    fn try_from(j: PureJson) -> std::result::Result<Self, String> {
        if j.re.len() != j.im.len() {
            return Err("re/im length mismatch".into());
        }
        let amps = j.re.iter().zip(&j.im).map(|(&r, &i)| C64::new(r, i)).collect();
        PureState::new(amps, j.factors).map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn proj(k: usize) -> CMat {
        PureState::basis(2, k).projector()
    }

    #[test]
    fn kron_identities() {
        assert_eq!(kron(&CMat::identity(2), &CMat::identity(2)), CMat::identity(4));
        assert_eq!(kron(&proj(0), &proj(1)), CMat::diag(&[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn kron_sigma_x_sigma_z() {
        let m = kron(&pauli(1), &pauli(3));
        let mut expected = CMat::zeros(4);
        expected[(0, 2)] = ONE;
        expected[(1, 3)] = -ONE;
        expected[(2, 0)] = ONE;
        expected[(3, 1)] = -ONE;
        assert_eq!(m, expected);
    }

    #[test]
    fn big_endian_ordering() {
        // |1⟩ ⊗ |0⟩ is basis label 2 when the left factor varies slowest
        let v = kron_vec(PureState::basis(2, 1).amplitudes(), PureState::basis(2, 0).amplitudes());
        assert_eq!(v[2], ONE);
        let m = kron(&proj(1), &proj(0));
        assert_eq!(m[(2, 2)], ONE);
    }

    #[test]
    fn partial_trace_examples() {
        let phi = PureState::phi_plus().projector();
        let half = CMat::identity(2).scale_re(0.5);
        assert!(partial_trace(&phi, &[2, 2], &[1]).unwrap().max_abs_diff(&half) < 1e-15);

        let rho = bloch_to_density([0.1, 0.2, 0.3]);
        let sigma = bloch_to_density([-0.5, 0.0, 0.4]);
        let prod = kron(&rho, &sigma);
        assert!(partial_trace(&prod, &[2, 2], &[0]).unwrap().max_abs_diff(&rho) < 1e-15);
        assert!(partial_trace(&prod, &[2, 2], &[1]).unwrap().max_abs_diff(&sigma) < 1e-15);

        // Werner p = 0.7 marginal
        let w = &phi.scale_re(0.7) + &CMat::identity(4).scale_re(0.3 / 4.0);
        assert!(partial_trace(&w, &[2, 2], &[1]).unwrap().max_abs_diff(&half) < 1e-15);
    }

    #[test]
    fn partial_trace_errors() {
        let m = CMat::identity(4);
        assert!(matches!(
            partial_trace(&m, &[2, 2], &[2]),
            Err(Error::IndexOutOfRange { index: 2, count: 2 })
        ));
        assert!(matches!(partial_trace(&m, &[2, 3], &[0]), Err(Error::BadFactors { .. })));
        assert!(matches!(
            partial_transpose(&m, &[2, 2], &[5]),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn partial_trace_over_everything_is_trace() {
        let m = kron(&bloch_to_density([0.3, 0.1, -0.2]), &bloch_to_density([0.0, 0.6, 0.1]));
        let t = partial_trace(&m, &[2, 2], &[]).unwrap();
        assert_eq!(t.dim(), 1);
        assert!((t[(0, 0)] - m.trace()).norm() < 1e-12);
    }

    #[test]
    fn partial_transpose_examples() {
        let m = kron(&bloch_to_density([0.3, 0.4, -0.2]), &bloch_to_density([0.1, 0.6, 0.1]));
        let twice = partial_transpose(&partial_transpose(&m, &[2, 2], &[1]).unwrap(), &[2, 2], &[1]).unwrap();
        assert_eq!(twice, m);
        assert_eq!(partial_transpose(&m, &[2, 2], &[0, 1]).unwrap(), m.transpose());

        let phi = PureState::phi_plus().projector();
        let pt = partial_transpose(&phi, &[2, 2], &[1]).unwrap();
        let vals = herm_eigvals(&pt).unwrap();
        assert_abs_diff_eq!(vals[3], -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn eigen_examples() {
        let vals = herm_eigvals(&pauli(2)).unwrap();
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[1], -1.0, epsilon = 1e-14);

        let vals = herm_eigvals(&CMat::identity(2).scale_re(0.5)).unwrap();
        assert_eq!(vals, vec![0.5, 0.5]);

        // (I + 0.6σy)/2 has Bloch length 0.6: eigenvalues (1 ± 0.6)/2
        let vals = herm_eigvals(&bloch_to_density([0.0, 0.6, 0.0])).unwrap();
        assert_abs_diff_eq!(vals[0], 0.8, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[1], 0.2, epsilon = 1e-14);
    }

    #[test]
    fn eigen_rejects_non_hermitian() {
        let mut m = CMat::identity(2);
        m[(0, 1)] = ONE;
        assert!(matches!(herm_eig(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eigen_reconstructs_complex_matrix() {
        let m = CMat::from_fn(5, |r, c| {
            let x = (r * 7 + c * 3) as f64;
            
            C64::new((x * 0.37).sin(), (x * 0.11).cos() * if r == c { 0.0 } else { 1.0 })
        });
        let h = m.hermitian_part();
        let eig = herm_eig(&h).unwrap();
        assert!(eig.reconstruct().max_abs_diff(&h) < 1e-12);
        assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        let vtv = eig.vectors.adjoint().matmul(&eig.vectors);
        assert!(vtv.max_abs_diff(&CMat::identity(5)) < 1e-12);
    }

    #[test]
    fn trace_norm_examples() {
        assert_eq!(trace_norm(&CMat::zeros(3)), 0.0);
        assert_abs_diff_eq!(trace_norm(&pauli(2)), 2.0, epsilon = 1e-14);

        let t = std::f64::consts::PI / 8.0;
        let psi = PureState::new(vec![C64::new(t.cos(), 0.0), C64::new(0.0, t.sin())], vec![2]).unwrap();
        let rho = psi.projector();
        assert_abs_diff_eq!(trace_norm(&(&rho - &rho.transpose())), 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn trace_norm_non_hermitian() {
        // singular values of [[0, 2], [0, 0]] are (2, 0)
        let mut m = CMat::zeros(2);
        m[(0, 1)] = C64::new(2.0, 0.0);
        assert_abs_diff_eq!(trace_norm(&m), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let rho = DensityMatrix::qubit_bloch([0.2, -0.3, 0.5]).unwrap();
        assert_abs_diff_eq!(fidelity(&rho, &rho).unwrap(), 1.0, epsilon = 1e-12);
        let zero = PureState::basis(2, 0).density();
        let one = PureState::basis(2, 1).density();
        assert_abs_diff_eq!(fidelity(&zero, &one).unwrap(), 0.0, epsilon = 1e-14);
        let mixed = DensityMatrix::maximally_mixed(vec![2]);
        assert_abs_diff_eq!(
            fidelity(&PureState::imbit_plus().density(), &mixed).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert!(matches!(
            fidelity(&zero, &DensityMatrix::maximally_mixed(vec![3])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::from_mat(CMat::identity(2)).is_err());
        assert!(DensityMatrix::from_mat(CMat::diag(&[1.2, -0.2])).is_err());
        let mut m = CMat::identity(2).scale_re(0.5);
        m[(0, 1)] = C64::new(0.0, 0.1);
        assert!(DensityMatrix::from_mat(m).is_err());
        assert!(DensityMatrix::new(CMat::identity(4).scale_re(0.25), vec![2, 3]).is_err());
    }

    #[test]
    fn power_uses_zero_to_the_zero_is_zero() {
        let p = PureState::basis(2, 0).projector();
        let p0 = power_psd(&p, 0.0).unwrap();
        assert!(p0.max_abs_diff(&p) < 1e-14);
    }

    #[test]
    fn json_layout() {
        let rho = DensityMatrix::qubit_bloch([0.0, 0.5, 0.0]).unwrap();
        let v: serde_json::Value = serde_json::to_value(&rho).unwrap();
        assert_eq!(v["dim"], 2);
        assert_eq!(v["factors"], serde_json::json!([2]));
        assert_eq!(v["im"][1][0], 0.25);
        let back: DensityMatrix = serde_json::from_value(v).unwrap();
        assert_eq!(back, rho);

        let bad = serde_json::json!({"dim": 2, "re": [[1.0, 0.0], [0.0, 1.0]], "im": [[0.0, 0.0], [0.0, 0.0]], "factors": [2]});
        assert!(serde_json::from_value::<DensityMatrix>(bad).is_err());
    }
}
