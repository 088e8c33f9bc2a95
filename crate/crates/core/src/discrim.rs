//! Binary channel discrimination with and without a maximally entangled
//! ancilla, under realness restrictions on probes and measurements.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::channels::{apply_via_choi, mix_x_z, mix_identity_xz, task_a_channel, task_b_channel, ChoiMatrix, KrausChannel};
use crate::error::{Error, Result};
use crate::qmat::{herm_eig, kron, pauli, trace_norm, CMat, DensityMatrix, PureState, C64, REAL_TOL};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeConstraint {
    Real,
    Any,
    Fixed(DensityMatrix),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementConstraint {
    Real,
    Any,
    Fixed(Vec<CMat>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ancilla {
    None,
    MaximallyEntangled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationGame {
    channels: Vec<(f64, KrausChannel)>,
    pub probe: ProbeConstraint,
    pub measurement: MeasurementConstraint,
    pub ancilla: Ancilla,
}

impl DiscriminationGame {
    pub fn new(
        channels: Vec<(f64, KrausChannel)>,
        probe: ProbeConstraint,
        measurement: MeasurementConstraint,
        ancilla: Ancilla,
    ) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::InvalidParameter("game needs channels".into()))?;
        let d = first.1.dim();
        let mut total = 0.0;
        for (p, ch) in &channels {
            if *p < 0.0 {
                return Err(Error::InvalidParameter(format!("negative prior {p}")));
            }
            if ch.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: ch.dim(),
                });
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("priors sum to {total}")));
        }
        Ok(DiscriminationGame {
            channels,
            probe,
            measurement,
            ancilla,
        })
    }

    fn binary(first: KrausChannel, second: KrausChannel, probe: ProbeConstraint, measurement: MeasurementConstraint) -> Self {
        Self::new(vec![(0.5, first), (0.5, second)], probe, measurement, Ancilla::None).expect("built-in game")
    }

    /// ½(ρ + σ_xσ_z ρ σ_zσ_x) against ½(σ_x ρ σ_x + σ_z ρ σ_z).
    pub fn real_blind_pair(probe: ProbeConstraint, measurement: MeasurementConstraint) -> Self {
        Self::binary(mix_identity_xz(), mix_x_z(), probe, measurement)
    }

    /// pρ + (1−p) σ_xσ_z ρ σ_zσ_x against ½(σ_x ρ σ_x + σ_z ρ σ_z).
    pub fn task_a(p: f64, probe: ProbeConstraint, measurement: MeasurementConstraint) -> Result<Self> {
        Ok(Self::binary(task_a_channel(p)?, mix_x_z(), probe, measurement))
    }

    /// wρ + (1−w) I/2 against ½(σ_x ρ σ_x + σ_z ρ σ_z).
    pub fn task_b(w: f64, probe: ProbeConstraint, measurement: MeasurementConstraint) -> Result<Self> {
        Ok(Self::binary(task_b_channel(w)?, mix_x_z(), probe, measurement))
    }

    pub fn with_ancilla(mut self, ancilla: Ancilla) -> Self {
        self.ancilla = ancilla;
        self
    }

    pub fn channels(&self) -> &[(f64, KrausChannel)] {
        &self.channels
    }

    fn pair(&self) -> Result<[(f64, &KrausChannel); 2]> {
        match self.channels.as_slice() {
            [(p1, c1), (p2, c2)] => Ok([(*p1, c1), (*p2, c2)]),
            _ => Err(Error::InvalidParameter(format!(
                "only binary games are supported, got {} channels",
                self.channels.len()
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameResult {
    pub p_succ: f64,
    pub best_probe: DensityMatrix,
    pub best_povm: Vec<CMat>,
    /// Bloch vector of the probe for ancilla-free qubit games.
    pub probe_bloch: Option<[f64; 3]>,
    /// Angle θ of the real projector cos θ|0⟩ + sin θ|1⟩ when the real grid was used.
    pub povm_angle: Option<f64>,
}

/// Σ_j p_j tr[M_j Λ_j(ρ)]
pub fn success_probability(channels: &[(f64, KrausChannel)], probe: &CMat, povm: &[CMat]) -> Result<f64> {
    if povm.len() != channels.len() {
        return Err(Error::InvalidParameter("one POVM element per channel required".into()));
    }
    let mut total = 0.0;
    for ((p, ch), m) in channels.iter().zip(povm) {
        total += p * m.trace_product(&ch.apply(probe)?).re;
    }
    Ok(total)
}

/// Projector onto the strictly positive eigenspace of a Hermitian matrix.
fn positive_projector(delta: &CMat) -> Result<CMat> {
    Ok(herm_eig(&delta.hermitian_part())?.map(|l| if l > 0.0 { 1.0 } else { 0.0 }))
}

fn helstrom_povm(delta: &CMat) -> Result<Vec<CMat>> {
    let plus = positive_projector(delta)?;
    let rest = &CMat::identity(delta.dim()) - &plus;
    Ok(vec![plus, rest])
}

fn real_projector(theta: f64) -> CMat {
    let (c, s) = (theta.cos(), theta.sin());
    CMat::from_real(2, &[c * c, c * s, c * s, s * s])
}

fn sphere_grid(step_deg: f64) -> Vec<[f64; 3]> {
    let step = step_deg.to_radians();
    let n_theta = (PI / step).round() as usize;
    let n_phi = (2.0 * PI / step).round() as usize;
    let mut out = Vec::new();
    for ti in 0..=n_theta {
        let theta = ti as f64 * PI / n_theta as f64;
        let phis = if ti == 0 || ti == n_theta { 1 } else { n_phi };
        for pj in 0..phis {
            let phi = pj as f64 * 2.0 * PI / n_phi as f64;
            out.push([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]);
        }
    }
    out
}

const DISK_RADII: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Bloch vectors with zero y-component on a polar grid of the x–z disk.
pub fn real_disk_grid(step_deg: f64) -> Vec<[f64; 3]> {
    let n = (360.0 / step_deg).round() as usize;
    let mut out = vec![[0.0; 3]];
    for &r in &DISK_RADII[1..] {
        for k in 0..n {
            let t = k as f64 * 2.0 * PI / n as f64;
            out.push([r * t.cos(), 0.0, r * t.sin()]);
        }
    }
    out
}

fn bloch_of(rho: &CMat) -> [f64; 3] {
    [1, 2, 3].map(|k| pauli(k).trace_product(rho).re)
}

struct Candidate {
    p: f64,
    povm: Vec<CMat>,
    angle: Option<f64>,
}

fn best_measurement(
    game: &DiscriminationGame,
    pair: &[(f64, &KrausChannel); 2],
    probe: &CMat,
    grid_deg: f64,
) -> Result<Candidate> {
    let out1 = pair[0].1.apply(probe)?.scale_re(pair[0].0);
    let out2 = pair[1].1.apply(probe)?.scale_re(pair[1].0);
    let delta = &out1 - &out2;
    let p2 = out2.trace().re;
    match &game.measurement {
        MeasurementConstraint::Any => {
            let p = 0.5 * (out1.trace().re + p2 + trace_norm(&delta.hermitian_part()));
            Ok(Candidate {
                p,
                povm: helstrom_povm(&delta)?,
                angle: None,
            })
        }
        MeasurementConstraint::Fixed(povm) => {
            let p = success_probability(&game.channels, probe, povm)?;
            Ok(Candidate {
                p,
                povm: povm.clone(),
                angle: None,
            })
        }
        MeasurementConstraint::Real => {
            // Trivial POVMs: always guess one channel.
            let p1 = out1.trace().re;
            let mut best = if p1 >= p2 {
                Candidate {
                    p: p1,
                    povm: vec![CMat::identity(2), CMat::zeros(2)],
                    angle: None,
                }
            } else {
                Candidate {
                    p: p2,
                    povm: vec![CMat::zeros(2), CMat::identity(2)],
                    angle: None,
                }
            };
            let step = grid_deg / 2.0;
            let n = (180.0 / step).round() as usize;
            for k in 0..n {
                let theta = k as f64 * PI / n as f64;
                let m1 = real_projector(theta);
                let p = p2 + m1.trace_product(&delta).re;
                if p > best.p + 1e-15 {
                    let m2 = &CMat::identity(2) - &m1;
                    best = Candidate {
                        p,
                        povm: vec![m1, m2],
                        angle: Some(theta),
                    };
                }
            }
            Ok(best)
        }
    }
}

fn check_grid(grid_deg: f64) -> Result<()> {
    if grid_deg > 0.0 && grid_deg <= 45.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("grid step {grid_deg} outside (0, 45]")))
    }
}

/// Ancilla-free game on qubit channels: probes and measurements searched
/// on grids (or Helstrom where unconstrained). Games with an ancilla are
/// passed on to [`play_with_ancilla`].
pub fn play(game: &DiscriminationGame, grid_deg: f64) -> Result<GameResult> {
    let pair = game.pair()?;
    if game.ancilla == Ancilla::MaximallyEntangled {
        return play_with_ancilla(game);
    }
    if pair[0].1.dim() != 2 {
        return Err(Error::InvalidParameter("ancilla-free games are implemented for qubits".into()));
    }
    check_grid(grid_deg)?;
    let probes: Vec<CMat> = match &game.probe {
        ProbeConstraint::Any => sphere_grid(grid_deg).into_iter().map(crate::qmat::bloch_to_density).collect(),
        ProbeConstraint::Real => real_disk_grid(grid_deg).into_iter().map(crate::qmat::bloch_to_density).collect(),
        ProbeConstraint::Fixed(rho) => {
            if rho.dim() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    found: rho.dim(),
                });
            }
            vec![rho.mat().clone()]
        }
    };
    let mut best: Option<(Candidate, CMat)> = None;
    for probe in probes {
        let cand = best_measurement(game, &pair, &probe, grid_deg)?;
        if best.as_ref().is_none_or(|(b, _)| cand.p > b.p + 1e-15) {
            best = Some((cand, probe));
        }
    }
    let (cand, probe) = best.expect("at least one probe");
    Ok(GameResult {
        p_succ: cand.p,
        probe_bloch: Some(bloch_of(&probe)),
        best_probe: DensityMatrix::from_numeric(probe, vec![2])?,
        best_povm: cand.povm,
        povm_angle: cand.angle,
    })
}

/// Game with probe |φ⁺⟩ on (ancilla ⊗ system); the outputs are the
/// normalized Choi matrices. Real measurements use the positive part of
/// Re Δ, which is optimal because real symmetric effects only see Re Δ.
pub fn play_with_ancilla(game: &DiscriminationGame) -> Result<GameResult> {
    let pair = game.pair()?;
    let d = pair[0].1.dim();
    let c1 = pair[0].1.choi(true).mat.scale_re(pair[0].0);
    let c2 = pair[1].1.choi(true).mat.scale_re(pair[1].0);
    let delta = &c1 - &c2;
    let povm = match &game.measurement {
        MeasurementConstraint::Any => helstrom_povm(&delta)?,
        MeasurementConstraint::Real => helstrom_povm(&delta.real_part())?,
        MeasurementConstraint::Fixed(povm) => povm.clone(),
    };
    if povm.len() != 2 || povm.iter().any(|m| m.dim() != d * d) {
        return Err(Error::InvalidParameter("ancilla game needs two POVM elements on the joint space".into()));
    }
    let p_succ = povm[0].trace_product(&c1).re + povm[1].trace_product(&c2).re;
    let probe = maximally_entangled(d);
    Ok(GameResult {
        p_succ,
        best_probe: probe.density(),
        best_povm: povm,
        probe_bloch: None,
        povm_angle: None,
    })
}

fn maximally_entangled(d: usize) -> PureState {
    let amps = (0..d * d)
        .map(|k| if k / d == k % d { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
        .collect();
    PureState::normalized(amps, vec![d, d]).expect("non-zero")
}

/// M₁ = (I⊗I − σ_y⊗σ_y)/2, M₂ = (I⊗I + σ_y⊗σ_y)/2. Both are real.
pub fn yy_parity_povm() -> Vec<CMat> {
    let yy = kron(&pauli(2), &pauli(2));
    let id = CMat::identity(4);
    vec![(&id - &yy).scale_re(0.5), (&id + &yy).scale_re(0.5)]
}

/// Both sides of an equality checked numerically, plus whether all inputs were real.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalencePair {
    pub lhs: f64,
    pub rhs: f64,
    pub real_inputs: bool,
}

/// tr[E Λ(ρ)] against d_A tr[(ρᵀ ⊗ E) N] with N the normalized Choi matrix.
pub fn choi_equivalence_forward(ch: &KrausChannel, probe: &CMat, effect: &CMat) -> Result<EquivalencePair> {
    let lhs = effect.trace_product(&ch.apply(probe)?).re;
    let n = ch.choi(true);
    let rhs = n.d_in as f64 * kron(&probe.transpose(), effect).trace_product(&n.mat).re;
    Ok(EquivalencePair {
        lhs,
        rhs,
        real_inputs: ch.is_real() && probe.is_real(REAL_TOL) && effect.is_real(REAL_TOL),
    })
}

/// tr[(E ⊗ F) N] against tr[F′ Λ(ρᵀ)] with ρ = E/tr E and F′ = (tr E/d_A) F.
pub fn choi_equivalence_reverse(choi: &ChoiMatrix, effect_a: &CMat, effect_b: &CMat) -> Result<EquivalencePair> {
    let tr_e = effect_a.trace().re;
    if tr_e.abs() <= 1e-15 {
        return Err(Error::InvalidParameter("effect on A must be non-zero".into()));
    }
    let lhs = kron(effect_a, effect_b).trace_product(&choi.mat).re;
    let rho = effect_a.scale_re(1.0 / tr_e);
    let f_prime = effect_b.scale_re(tr_e / choi.d_in as f64);
    let rhs = f_prime.trace_product(&apply_via_choi(choi, &rho.transpose())?).re;
    Ok(EquivalencePair {
        lhs,
        rhs,
        real_inputs: choi.mat.is_real(REAL_TOL) && effect_a.is_real(REAL_TOL) && effect_b.is_real(REAL_TOL),
    })
}

/// Whether every real probe and real effect on the grid assigns the same
/// probability tr[E Λ(ρ)] under both (normalized, qubit) Choi matrices.
pub fn real_product_blind(first: &ChoiMatrix, second: &ChoiMatrix, grid_deg: f64) -> Result<bool> {
    check_grid(grid_deg)?;
    if first.d_in != 2 || second.d_in != 2 {
        return Err(Error::InvalidParameter("blindness check is implemented for qubit channels".into()));
    }
    let mut effects = vec![CMat::identity(2)];
    let n = (180.0 / grid_deg).round() as usize;
    effects.extend((0..n).map(|k| real_projector(k as f64 * PI / n as f64)));
    for bloch in real_disk_grid(grid_deg) {
        let rho = crate::qmat::bloch_to_density(bloch);
        let a = apply_via_choi(first, &rho)?;
        let b = apply_via_choi(second, &rho)?;
        for e in &effects {
            if (e.trace_product(&a) - e.trace_product(&b)).norm() > 1e-10 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Negates the σ_y⊗σ_y component of the channel's normalized Choi matrix
/// and checks that real probes with real effects cannot tell the difference.
pub fn real_restriction_blindness_check(ch: &KrausChannel, grid_deg: f64) -> Result<bool> {
    if !ch.is_real() {
        return Err(Error::NotReal);
    }
    if ch.dim() != 2 {
        return Err(Error::InvalidParameter("blindness check is implemented for qubit channels".into()));
    }
    let choi = ch.choi(true);
    let yy = kron(&pauli(2), &pauli(2));
    let coef = yy.trace_product(&choi.mat).re;
    let flipped = ChoiMatrix {
        mat: &choi.mat - &yy.scale_re(coef / 2.0),
        ..choi.clone()
    };
    real_product_blind(&choi, &flipped, grid_deg)
}
