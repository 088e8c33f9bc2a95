//! Conversion of pure states into target states: the single-party
//! stochastic law and the assisted probability/fidelity trade-off.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::measures::{concurrence_of_imaginarity, geometric_measure};
use crate::qmat::{DensityMatrix, PureState};

const CLAMP_SLACK: f64 = 1e-12;

/// Angles parameterizing an assisted conversion:
/// sin²α = (1 − 𝓘_c(ρ^B))/2, sin²β = 𝓘_g(σ^B), cos²γ = f.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConversionSpec {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

fn check_angle(name: &str, v: f64) -> Result<()> {
    if (0.0..=FRAC_PI_2).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} outside [0, pi/2]")))
    }
}

/// arcsin √x with x clamped into [0, 1] when it strays by at most the slack.
fn asin_sqrt(x: f64) -> Result<f64> {
    if !(-CLAMP_SLACK..=1.0 + CLAMP_SLACK).contains(&x) {
        return Err(Error::InvalidParameter(format!("{x} is not a squared sine")));
    }
    Ok(x.clamp(0.0, 1.0).sqrt().asin())
}

impl ConversionSpec {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        check_angle("alpha", alpha)?;
        check_angle("beta", beta)?;
        check_angle("gamma", gamma)?;
        Ok(ConversionSpec { alpha, beta, gamma })
    }

    /// γ = arccos √f.
    pub fn gamma_for_fidelity(f: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::InvalidParameter(format!("fidelity {f} outside [0, 1]")));
        }
        Ok(f.sqrt().acos())
    }

    pub fn alpha_of(psi_ab: &PureState) -> Result<f64> {
        let rho_b = bob_marginal(psi_ab)?;
        asin_sqrt((1.0 - concurrence_of_imaginarity(&rho_b)) / 2.0)
    }

    pub fn beta_of(sigma_b: &DensityMatrix) -> Result<f64> {
        asin_sqrt(geometric_measure(sigma_b))
    }

    pub fn from_states(psi_ab: &PureState, sigma_b: &DensityMatrix, fidelity: f64) -> Result<Self> {
        Self::new(
            Self::alpha_of(psi_ab)?,
            Self::beta_of(sigma_b)?,
            Self::gamma_for_fidelity(fidelity)?,
        )
    }
}

fn bob_marginal(psi_ab: &PureState) -> Result<DensityMatrix> {
    if psi_ab.factors().len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "expected a bipartite state, got factors {:?}",
            psi_ab.factors()
        )));
    }
    psi_ab.density().partial_trace(&[1])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConversionBranch {
    /// The target is reached with certainty (or with fidelity 1).
    Deterministic,
    /// The closed-form trade-off is active.
    TradeOff,
    /// Real target: free, value 1 by convention.
    RealTarget,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConversionResult {
    pub value: f64,
    pub branch: ConversionBranch,
}

/// min{𝓘_g(ψ)/𝓘_g(ρ), 1}, and 1 for a real target.
pub fn single_party_probability(psi: &PureState, rho: &DensityMatrix) -> Result<f64> {
    if psi.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            found: rho.dim(),
        });
    }
    let target = geometric_measure(rho);
    if target == 0.0 {
        return Ok(1.0);
    }
    Ok((geometric_measure(&psi.density()) / target).min(1.0))
}

/// Optimal probability that Bob ends with `sigma_b` when Alice assists,
/// starting from the bipartite pure state `psi_ab`.
pub fn assisted_probability(psi_ab: &PureState, sigma_b: &DensityMatrix) -> Result<ConversionResult> {
    let spec = ConversionSpec::from_states(psi_ab, sigma_b, 1.0)?;
    Ok(probability_with_fidelity(&spec))
}

/// 1 if α − β + γ ≥ 0, else sin²α / sin²(β − γ).
pub fn probability_with_fidelity(spec: &ConversionSpec) -> ConversionResult {
    if spec.beta == 0.0 {
        return ConversionResult {
            value: 1.0,
            branch: ConversionBranch::RealTarget,
        };
    }
    if spec.alpha - spec.beta + spec.gamma >= 0.0 {
        return ConversionResult {
            value: 1.0,
            branch: ConversionBranch::Deterministic,
        };
    }
    let value = (spec.alpha.sin().powi(2) / (spec.beta - spec.gamma).sin().powi(2)).min(1.0);
    ConversionResult {
        value,
        branch: ConversionBranch::TradeOff,
    }
}

/// 1 if p ≤ sin²α/sin²β, else cos²[β − arcsin(sin α / √p)]. `gamma` is ignored.
pub fn fidelity_with_probability(spec: &ConversionSpec, p: f64) -> Result<ConversionResult> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("probability {p} outside (0, 1]")));
    }
    if spec.beta == 0.0 {
        return Ok(ConversionResult {
            value: 1.0,
            branch: ConversionBranch::RealTarget,
        });
    }
    let sa = spec.alpha.sin();
    if p <= sa * sa / spec.beta.sin().powi(2) {
        return Ok(ConversionResult {
            value: 1.0,
            branch: ConversionBranch::Deterministic,
        });
    }
    let inner = asin_sqrt(sa * sa / p)?;
    Ok(ConversionResult {
        value: (spec.beta - inner).cos().powi(2),
        branch: ConversionBranch::TradeOff,
    })
}
