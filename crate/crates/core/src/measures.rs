//! Scalar imaginarity quantifiers: fidelity of imaginarity, robustness,
//! geometric measure, concurrence, multi-copy fidelity and the Chernoff
//! exponent between ρ and ρᵀ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{
    self, herm_eigvals, kron, power_psd, sqrt_psd, sqrt_trace_psd, trace_norm, CMat, DensityMatrix, ZERO_EIGENVALUE,
};

/// Largest matrix dimension `multi_copy_fidelity` will build.
pub const MULTI_COPY_DIM_LIMIT: usize = 512;

/// Below this, tr√(ρρᵀ) is reported as an infinite Chernoff divergence.
const CHERNOFF_ZERO: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub fidelity_of_imaginarity: f64,
    pub robustness: f64,
    pub geometric: f64,
    pub concurrence: f64,
}

impl MeasureReport {
    pub fn of(rho: &DensityMatrix) -> Self {
        MeasureReport {
            fidelity_of_imaginarity: fidelity_of_imaginarity(rho),
            robustness: robustness_of_imaginarity(rho),
            geometric: geometric_measure(rho),
            concurrence: concurrence_of_imaginarity(rho),
        }
    }
}

/// ‖ρ − ρᵀ‖₁
fn antisymmetric_norm(m: &CMat) -> f64 {
    trace_norm(&(m - &m.transpose()))
}

/// F_I(ρ) = ½ + ¼‖ρ − ρᵀ‖₁
pub fn fidelity_of_imaginarity(rho: &DensityMatrix) -> f64 {
    0.5 + 0.25 * antisymmetric_norm(rho.mat())
}

/// ‖ρ − ρᵀ‖₁ / 2
pub fn robustness_of_imaginarity(rho: &DensityMatrix) -> f64 {
    0.5 * antisymmetric_norm(rho.mat())
}

/// tr[(√ρ ρᵀ √ρ)^{1/2}], which equals tr√(ρρᵀ).
fn root_overlap(rho: &CMat) -> f64 {
    let root = sqrt_psd(rho).expect("density matrices are Hermitian");
    sqrt_trace_psd(&rho.transpose().conjugate_by(&root)).expect("sandwich is Hermitian")
}

/// 𝓘_g(ρ) = (1 − √F(ρ, ρᵀ))/2
pub fn geometric_measure(rho: &DensityMatrix) -> f64 {
    if rho.is_real() {
        return 0.0;
    }
    let sqrt_f = root_overlap(rho.mat()).clamp(0.0, 1.0);
    (1.0 - sqrt_f) / 2.0
}

/// 𝓘_c(ρ) = max{0, λ₁ − Σ_{j>1} λ_j}, λ the descending spectrum of (√ρ ρᵀ √ρ)^{1/2}.
pub fn concurrence_of_imaginarity(rho: &DensityMatrix) -> f64 {
    let root = sqrt_psd(rho.mat()).expect("density matrices are Hermitian");
    let sandwich = rho.mat().transpose().conjugate_by(&root);
    let lambdas: Vec<f64> = herm_eigvals(&sandwich)
        .expect("sandwich is Hermitian")
        .iter()
        .map(|&l| if l <= ZERO_EIGENVALUE { 0.0 } else { l.sqrt() })
        .collect();
    let (first, rest) = lambdas.split_first().expect("non-empty spectrum");
    (first - rest.iter().sum::<f64>()).clamp(0.0, 1.0)
}

/// F_I(ρ^{⊗n}) through the trace norm of ρ^{⊗n} − (ρᵀ)^{⊗n}.
pub fn multi_copy_fidelity(rho: &DensityMatrix, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("copy count must be positive".into()));
    }
    let d = rho.dim();
    let total = d
        .checked_pow(n as u32)
        .filter(|&t| t <= MULTI_COPY_DIM_LIMIT)
        .ok_or(Error::BudgetExceeded {
            dim: d.saturating_pow(n as u32),
            limit: MULTI_COPY_DIM_LIMIT,
        })?;
    debug_assert!(total <= MULTI_COPY_DIM_LIMIT);
    let m = rho.mat();
    let mt = m.transpose();
    let mut a = m.clone();
    let mut b = mt.clone();
    for _ in 1..n {
        a = kron(&a, m);
        b = kron(&b, &mt);
    }
    Ok(0.5 + 0.25 * trace_norm(&(&a - &b)))
}

/// Quantum Chernoff divergence χ(ρ, ρᵀ) = −ln tr√(ρρᵀ), which may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Chernoff {
    Finite(f64),
    Infinite,
}

impl Chernoff {
    pub fn value(self) -> f64 {
        match self {
            Chernoff::Finite(v) => v,
            Chernoff::Infinite => f64::INFINITY,
        }
    }
}

impl Serialize for Chernoff {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Chernoff::Finite(v) => s.serialize_f64(*v),
            Chernoff::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Chernoff {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Chernoff::Finite(v)),
            Raw::Text(t) if t == "inf" => Ok(Chernoff::Infinite),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("unexpected chernoff value {t:?}"))),
        }
    }
}

pub fn chernoff_divergence(rho: &DensityMatrix) -> Chernoff {
    if rho.is_real() {
        return Chernoff::Finite(0.0);
    }
    let t = root_overlap(rho.mat());
    if t <= CHERNOFF_ZERO {
        Chernoff::Infinite
    } else {
        Chernoff::Finite((-t.min(1.0).ln()).max(0.0))
    }
}

/// tr(ρ^s (ρᵀ)^{1−s}) on `grid` equally spaced points of [0, 1].
pub fn chernoff_s_scan(rho: &DensityMatrix, grid: usize) -> Result<Vec<(f64, f64)>> {
    if grid < 2 {
        return Err(Error::InvalidParameter("s-grid needs at least two points".into()));
    }
    (0..grid)
        .map(|k| {
            let s = k as f64 / (grid - 1) as f64;
            Ok((s, chernoff_objective(rho, s)?))
        })
        .collect()
}

/// tr(ρ^s (ρᵀ)^{1−s}) for s ∈ [0, 1], with 0⁰ taken as 0.
pub fn chernoff_objective(rho: &DensityMatrix, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("s = {s} outside [0, 1]")));
    }
    let m = rho.mat();
    let left = power_psd(m, s)?;
    // (ρᵀ)^{1−s} = (ρ^{1−s})ᵀ
    let right = power_psd(m, 1.0 - s)?.transpose();
    Ok(left.trace_product(&right).re)
}

/// Closed form F_I(|ψ⟩⟨ψ|^{⊗n}) = ½ + ½√(1 − |⟨ψ*|ψ⟩|^{2n}).
pub fn pure_multi_copy_fidelity(psi: &qmat::PureState, n: usize) -> f64 {
    let overlap = psi.conj().overlap(psi).norm();
    0.5 + 0.5 * (1.0 - overlap.powi(2 * n as i32)).max(0.0).sqrt()
}
