//! Assisted imaginarity distillation on two qubits: Alice measures and
//! tells Bob the outcome, Bob keeps a state as close to |+̂⟩ as possible.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::qmat::{herm_eigvals, kron, pauli, CMat, DensityMatrix, PureState, C64};

/// Local Bloch vectors and correlation matrix E_kl = tr(σ_k ⊗ σ_l ρ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitBloch {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub e: [[f64; 3]; 3],
}

fn dot(u: &[f64; 3], v: &[f64; 3]) -> f64 {
    u.iter().zip(v).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64; 3]) -> f64 {
    dot(v, v).sqrt()
}

impl TwoQubitBloch {
    pub fn new(a: [f64; 3], b: [f64; 3], e: [[f64; 3]; 3]) -> Result<Self> {
        if norm(&a) > 1.0 + 1e-10 || norm(&b) > 1.0 + 1e-10 {
            return Err(Error::InvalidState("local Bloch vector longer than 1".into()));
        }
        let s = TwoQubitBloch { a, b, e };
        let min = *herm_eigvals(&s.to_matrix())?.last().expect("4 eigenvalues");
        if min < -1e-8 {
            return Err(Error::InvalidState(format!("reconstruction has eigenvalue {min:e}")));
        }
        Ok(s)
    }

    /// s = (E₁₂, E₂₂, E₃₂): correlations with Bob's y axis.
    pub fn s(&self) -> [f64; 3] {
        [self.e[0][1], self.e[1][1], self.e[2][1]]
    }

    /// ¼(I⊗I + Σ a_k σ_k⊗I + Σ b_l I⊗σ_l + Σ E_kl σ_k⊗σ_l)
    pub fn to_matrix(&self) -> CMat {
        let mut m = CMat::identity(4);
        for k in 0..3 {
            m += &kron(&pauli(k + 1), &pauli(0)).scale_re(self.a[k]);
            m += &kron(&pauli(0), &pauli(k + 1)).scale_re(self.b[k]);
            for l in 0..3 {
                m += &kron(&pauli(k + 1), &pauli(l + 1)).scale_re(self.e[k][l]);
            }
        }
        m.scale_re(0.25)
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        DensityMatrix::from_numeric(self.to_matrix(), vec![2, 2])
    }
}

pub fn bloch_decompose(rho: &DensityMatrix) -> Result<TwoQubitBloch> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.dim(),
        });
    }
    let coef = |k: usize, l: usize| kron(&pauli(k), &pauli(l)).trace_product(rho.mat()).re;
    let mut out = TwoQubitBloch {
        a: [0.0; 3],
        b: [0.0; 3],
        e: [[0.0; 3]; 3],
    };
    for k in 0..3 {
        out.a[k] = coef(k + 1, 0);
        out.b[k] = coef(0, k + 1);
        for l in 0..3 {
            out.e[k][l] = coef(k + 1, l + 1);
        }
    }
    Ok(out)
}

/// M = q(I + α·σ)
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitPovmElement {
    pub q: f64,
    pub alpha: [f64; 3],
}

impl QubitPovmElement {
    pub fn new(q: f64, alpha: [f64; 3]) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) || norm(&alpha) > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!("POVM element q={q}, |alpha|={}", norm(&alpha))));
        }
        Ok(QubitPovmElement { q, alpha })
    }

    pub fn matrix(&self) -> CMat {
        let mut m = CMat::identity(2);
        for k in 0..3 {
            m += &pauli(k + 1).scale_re(self.alpha[k]);
        }
        m.scale_re(self.q)
    }
}

/// Checks Σq_n = 1 and Σ q_n α_n = 0.
pub fn is_complete_povm(elems: &[QubitPovmElement]) -> bool {
    let q: f64 = elems.iter().map(|m| m.q).sum();
    let mut first = [0.0; 3];
    for m in elems {
        for k in 0..3 {
            first[k] += m.q * m.alpha[k];
        }
    }
    (q - 1.0).abs() <= 1e-10 && norm(&first) <= 1e-10
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    LocalB2,
    CorrelationS,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssistedResult {
    pub value: f64,
    pub optimal_direction: Option<[f64; 3]>,
    pub used_branch: Branch,
}

/// F_a = ½(1 + max{|b₂|, |s|}). Ties report the local branch.
pub fn assisted_fidelity(state: &TwoQubitBloch) -> AssistedResult {
    let b2 = state.b[1].abs();
    let s = state.s();
    let sn = norm(&s);
    if sn > b2 {
        AssistedResult {
            value: 0.5 * (1.0 + sn),
            optimal_direction: Some([s[0] / sn, s[1] / sn, s[2] / sn]),
            used_branch: Branch::CorrelationS,
        }
    } else {
        AssistedResult {
            value: 0.5 * (1.0 + b2),
            optimal_direction: None,
            used_branch: Branch::LocalB2,
        }
    }
}

/// Outcome probability q(1 + a·α) and Bob's conditional Bloch vector
/// (b + Eᵀα)/(1 + a·α).
pub fn alice_measurement_update(state: &TwoQubitBloch, elem: &QubitPovmElement) -> Result<(f64, [f64; 3])> {
    let denom = 1.0 + dot(&state.a, &elem.alpha);
    let prob = elem.q * denom;
    if prob <= 1e-15 {
        return Err(Error::ZeroProbability);
    }
    let mut bob = [0.0; 3];
    for (l, out) in bob.iter_mut().enumerate() {
        let et_alpha: f64 = (0..3).map(|k| state.e[k][l] * elem.alpha[k]).sum();
        *out = (state.b[l] + et_alpha) / denom;
    }
    Ok((prob, bob))
}

/// Brute-force search over two-element POVMs on Alice's side. Bob's
/// branch states come straight from the reconstructed density matrix, so
/// this does not share code with the closed form.
pub fn assisted_fidelity_oracle(state: &TwoQubitBloch, grid_deg: f64) -> Result<f64> {
    if !(grid_deg > 0.0 && grid_deg <= 10.0) {
        return Err(Error::InvalidParameter(format!("grid step {grid_deg} outside (0, 10]")));
    }
    let rho = state.to_matrix();
    let step = grid_deg.to_radians();
    let n_theta = (PI / step).round() as usize;
    let n_phi = (2.0 * PI / step).round() as usize;

    // Unnormalized Bob state tr_A[(M ⊗ I)ρ] for M = c(I + v·σ).
    let branch = |c: f64, v: [f64; 3]| -> f64 {
        let m = QubitPovmElement { q: c, alpha: v }.matrix();
        let mut s = [[C64::new(0.0, 0.0); 2]; 2];
        for (i, row) in s.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                for x in 0..2 {
                    for y in 0..2 {
                        *entry += m[(y, x)] * rho[(2 * x + i, 2 * y + j)];
                    }
                }
            }
        }
        // p·F_I(σ/p) = ½ tr σ + ¼‖σ − σᵀ‖₁ and ‖σ − σᵀ‖₁ = 2|σ₀₁ − σ₁₀|.
        0.5 * (s[0][0] + s[1][1]).re + 0.5 * (s[0][1] - s[1][0]).norm()
    };

    let mut best = f64::NEG_INFINITY;
    for qi in 1..=9 {
        let q = qi as f64 / 10.0;
        let len = ((1.0 - q) / q).min(1.0);
        for ti in 0..=n_theta {
            let theta = ti as f64 * step;
            let phis = if ti == 0 || ti == n_theta { 1 } else { n_phi };
            for pj in 0..phis {
                let phi = pj as f64 * step;
                let dir = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
                let a0 = dir.map(|x| x * len);
                let a1 = a0.map(|x| -q * x / (1.0 - q));
                let v = branch(q, a0) + branch(1.0 - q, a1);
                best = best.max(v);
            }
        }
    }
    Ok(best)
}

/// Alice's projective basis and Bob's outcome-conditioned real corrections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub alice_basis: [[f64; 3]; 2],
    pub bob_corrections: [CMat; 2],
}

/// Alice measures along ±s/|s|. Bob keeps outcome 0 and applies σ_z on
/// outcome 1, which flips the sign of his y component.
pub fn optimal_protocol(state: &TwoQubitBloch) -> Result<Protocol> {
    let res = assisted_fidelity(state);
    let dir = match res.optimal_direction {
        Some(d) => d,
        None => return Err(Error::NoAssistanceNeeded),
    };
    Ok(Protocol {
        alice_basis: [dir, dir.map(|x| -x)],
        bob_corrections: [CMat::identity(2), pauli(3)],
    })
}

/// Average fidelity of Bob's corrected states with |+̂⟩.
pub fn execute_protocol(rho: &DensityMatrix, protocol: &Protocol) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.dim(),
        });
    }
    let target = PureState::imbit_plus().projector();
    let mut total = 0.0;
    for (dir, fix) in protocol.alice_basis.iter().zip(&protocol.bob_corrections) {
        let proj = QubitPovmElement { q: 0.5, alpha: *dir }.matrix();
        let lifted = kron(&proj, &CMat::identity(2));
        let post = lifted.matmul(rho.mat()).matmul(&lifted);
        let bob = crate::qmat::partial_trace(&post, &[2, 2], &[1])?.conjugate_by(fix);
        total += bob.trace_product(&target).re;
    }
    Ok(total)
}
