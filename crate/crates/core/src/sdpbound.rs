//! Semidefinite upper bound on the fidelity reachable from ρ^{AB} towards a
//! target |ψ⟩^{A'B'} with success probability p, when Bob is restricted to
//! real operations (and optionally Alice too).
//!
//! The variable X lives on A⊗B⊗A'⊗B' and plays the role of the Choi matrix
//! of the (sub-normalized) bipartite operation.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{herm_eigvals, kron, partial_trace, partial_transpose, CMat, DensityMatrix, PureState, C64, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Bob real, Alice arbitrary, classical communication.
    Lqrcc,
    /// Both parties real.
    Lrcc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub rho_ab: DensityMatrix,
    pub target: PureState,
    pub p: f64,
    pub mode: Mode,
    /// Additionally require X to be real (only meaningful with `Mode::Lrcc`).
    #[serde(default)]
    pub impose_real: bool,
}

impl SdpProblem {
    pub fn new(rho_ab: DensityMatrix, target: PureState, p: f64, mode: Mode) -> Result<Self> {
        if rho_ab.factors().len() != 2 {
            return Err(Error::InvalidParameter("input state must be bipartite".into()));
        }
        if target.factors().len() != 2 {
            return Err(Error::InvalidParameter(
                "target must be bipartite; lift Bob-local targets with bob_local_target".into(),
            ));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParameter(format!("probability {p} outside (0, 1]")));
        }
        Ok(SdpProblem {
            rho_ab,
            target,
            p,
            mode,
            impose_real: false,
        })
    }

    pub fn with_real_constraint(mut self, on: bool) -> Self {
        self.impose_real = on;
        self
    }

    /// [d_A, d_B, d_A', d_B']
    pub fn factors(&self) -> [usize; 4] {
        let a = self.rho_ab.factors();
        let t = self.target.factors();
        [a[0], a[1], t[0], t[1]]
    }
}

/// |0⟩ ⊗ |ψ⟩ with a `d_a_out`-dimensional register for Alice.
pub fn bob_local_target(psi_b: &PureState, d_a_out: usize) -> PureState {
    let zero = PureState::basis(d_a_out, 0);
    let amps = crate::qmat::kron_vec(zero.amplitudes(), psi_b.amplitudes());
    PureState::new(amps, vec![d_a_out, psi_b.dim()]).expect("product of unit vectors")
}

/// Feasibility residuals of a candidate X. `psd_min_eig` is the smallest
/// eigenvalue (feasible when ≥ −tol); the others are feasible when ≤ tol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub psd_min_eig: f64,
    pub pt_symmetry: f64,
    pub trace_cap: f64,
    pub probability_affine: f64,
}

impl Residuals {
    pub fn within(&self, tol: f64) -> bool {
        self.psd_min_eig >= -tol && self.pt_symmetry <= tol && self.trace_cap <= tol && self.probability_affine <= tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub x: CMat,
    pub value: f64,
    pub residuals: Residuals,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Seeds a random starting point; `None` starts from zero.
    pub seed: Option<u64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-7,
            max_iter: 50_000,
            seed: None,
        }
    }
}

/// The program in the form the solver works with.
#[derive(Clone, Debug)]
pub struct Program {
    factors: [usize; 4],
    p: f64,
    /// ρᵀ ⊗ |ψ⟩⟨ψ|
    objective: CMat,
    /// ρᵀ ⊗ I
    probability: CMat,
    /// Factor sets whose partial transpose must leave X fixed.
    symmetries: Vec<Vec<usize>>,
    real: bool,
    /// Orthonormal Hermitian basis on A⊗B and its lift E ⊗ I to the full space.
    basis: Vec<CMat>,
    lifted: Vec<CMat>,
    gram_pinv: DMatrix<f64>,
}

impl Program {
    pub fn dim(&self) -> usize {
        self.factors.iter().product()
    }

    pub fn factors(&self) -> [usize; 4] {
        self.factors
    }

    pub fn affine_equalities(&self) -> usize {
        1
    }

    pub fn operator_caps(&self) -> usize {
        1
    }

    pub fn symmetries(&self) -> &[Vec<usize>] {
        &self.symmetries
    }

    pub fn objective(&self) -> &CMat {
        &self.objective
    }

    fn d_in(&self) -> usize {
        self.factors[0] * self.factors[1]
    }

    /// Orthogonal projection onto the symmetry-fixed subspace: the average
    /// over the group generated by the partial transposes (and conjugation).
    fn project_symmetric(&self, x: &CMat) -> CMat {
        let mut orbit = vec![x.clone()];
        for which in &self.symmetries {
            let images: Vec<CMat> = orbit
                .iter()
                .map(|m| partial_transpose(m, &self.factors, which).expect("factors checked"))
                .collect();
            orbit.extend(images);
        }
        if self.real {
            let images: Vec<CMat> = orbit.iter().map(CMat::conj).collect();
            orbit.extend(images);
        }
        let mut acc = CMat::zeros(x.dim());
        for m in &orbit {
            acc += m;
        }
        acc.scale_re(1.0 / orbit.len() as f64)
    }

    /// Values of the linear constraint map: ⟨E_k, tr_{A'B'}X + Y⟩ and ⟨ρᵀ⊗I, X⟩.
    fn constraint_values(&self, x: &CMat, y: &CMat) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .lifted
            .iter()
            .zip(&self.basis)
            .map(|(l, e)| l.inner(x).re + e.inner(y).re)
            .collect();
        out.push(self.probability.inner(x).re);
        out
    }

    fn constraint_targets(&self) -> Vec<f64> {
        let id = CMat::identity(self.d_in());
        let mut out: Vec<f64> = self.basis.iter().map(|e| e.inner(&id).re).collect();
        out.push(self.p);
        out
    }

    /// Euclidean projection of (X, Y) onto the affine set: X symmetric,
    /// tr_{A'B'}X + Y = I and ⟨ρᵀ⊗I, X⟩ = p.
    fn project_affine(&self, x: &CMat, y: &CMat) -> (CMat, CMat) {
        let mut x = self.project_symmetric(x);
        let mut y = y.hermitian_part();
        let values = self.constraint_values(&x, &y);
        let targets = self.constraint_targets();
        let r = nalgebra::DVector::from_iterator(values.len(), values.iter().zip(&targets).map(|(v, t)| v - t));
        let lambda = &self.gram_pinv * r;
        let n = self.basis.len();
        let mut dx = self.probability.scale_re(lambda[n]);
        let mut dy = CMat::zeros(y.dim());
        for k in 0..n {
            dx += &self.lifted[k].scale_re(lambda[k]);
            dy += &self.basis[k].scale_re(lambda[k]);
        }
        x = &x - &self.project_symmetric(&dx);
        y = &y - &dy;
        (x, y)
    }
}

/// Orthonormal basis of d×d Hermitian matrices under Re tr(A†B).
fn hermitian_basis(d: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(d * d);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        let mut m = CMat::zeros(d);
        m[(i, i)] = ONE;
        out.push(m);
    }
    for i in 0..d {
        for j in i + 1..d {
            let mut s = CMat::zeros(d);
            s[(i, j)] = C64::new(h, 0.0);
            s[(j, i)] = C64::new(h, 0.0);
            out.push(s);
            let mut a = CMat::zeros(d);
            a[(i, j)] = C64::new(0.0, -h);
            a[(j, i)] = C64::new(0.0, h);
            out.push(a);
        }
    }
    out
}

pub fn assemble(problem: &SdpProblem) -> Result<Program> {
    let factors = problem.factors();
    let [da, db, _, _] = factors;
    if problem.rho_ab.dim() != da * db {
        return Err(Error::DimensionMismatch {
            expected: da * db,
            found: problem.rho_ab.dim(),
        });
    }
    let d_out = factors[2] * factors[3];
    let rho_t = problem.rho_ab.mat().transpose();
    let objective = kron(&rho_t, &problem.target.projector());
    let probability = kron(&rho_t, &CMat::identity(d_out));
    let mut symmetries = vec![vec![1, 3]];
    if problem.mode == Mode::Lrcc {
        symmetries.push(vec![0, 2]);
    }
    let basis = hermitian_basis(da * db);
    let lifted: Vec<CMat> = basis.iter().map(|e| kron(e, &CMat::identity(d_out))).collect();
    let mut program = Program {
        factors,
        p: problem.p,
        objective,
        probability,
        symmetries,
        real: problem.impose_real && problem.mode == Mode::Lrcc,
        basis,
        lifted,
        gram_pinv: DMatrix::zeros(0, 0),
    };

    // Gram matrix of the constraint map restricted to the symmetric subspace.
    let n = program.basis.len();
    let mut rows: Vec<&CMat> = program.lifted.iter().collect();
    rows.push(&program.probability);
    let projected: Vec<CMat> = rows.iter().map(|a| program.project_symmetric(a)).collect();
    let mut gram = DMatrix::<f64>::zeros(n + 1, n + 1);
    for k in 0..=n {
        for l in 0..=n {
            gram[(k, l)] = rows[k].inner(&projected[l]).re;
            if k < n && l < n && k == l {
                gram[(k, l)] += 1.0;
            }
        }
    }
    program.gram_pinv = gram
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::InvalidParameter(format!("constraint Gram matrix: {e}")))?;
    Ok(program)
}

fn to_nalgebra(m: &CMat) -> DMatrix<C64> {
    let n = m.dim();
    DMatrix::from_fn(n, n, |r, c| m[(r, c)])
}

/// Projection onto the PSD cone, also returning the smallest eigenvalue of the input.
fn project_psd(m: &CMat) -> (CMat, f64) {
    let n = m.dim();
    let eig = SymmetricEigen::new(to_nalgebra(&m.hermitian_part()));
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let mut out = CMat::zeros(n);
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l <= 0.0 {
            continue;
        }
        let v: Vec<C64> = (0..n).map(|r| eig.eigenvectors[(r, k)]).collect();
        out += &CMat::outer(&v).scale_re(l);
    }
    (out, min)
}

fn min_eig_fast(m: &CMat) -> f64 {
    SymmetricEigen::new(to_nalgebra(&m.hermitian_part()))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn random_psd(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> CMat {
    let g = CMat::from_fn(d, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let m = g.matmul(&g.adjoint());
    let tr = m.trace().re;
    m.scale_re(scale / tr)
}

const RELAXATION: f64 = 1.6;
const CHECK_EVERY: usize = 10;
const ADAPT_EVERY: usize = 100;

/// ADMM between the affine set and the PSD cone on the pair (X, Y), where Y
/// is the slack of the operator cap tr_{A'B'}X ⪯ I.
pub fn solve(problem: &SdpProblem, opts: SolverOptions) -> Result<SdpSolution> {
    let prog = assemble(problem)?;
    let dx = prog.dim();
    let dy = prog.d_in();
    let c = &prog.objective;

    let (mut wx, mut wy) = match opts.seed {
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (random_psd(&mut rng, dx, 1.0), random_psd(&mut rng, dy, 1.0))
        }
        None => (CMat::zeros(dx), CMat::zeros(dy)),
    };
    let mut ux = CMat::zeros(dx);
    let mut uy = CMat::zeros(dy);
    let mut sigma = 1.0;
    let mut last = None;

    for it in 1..=opts.max_iter {
        let (zx, zy) = prog.project_affine(&(&(&wx - &ux) + &c.scale_re(1.0 / sigma)), &(&wy - &uy));
        let rx = &zx.scale_re(RELAXATION) + &wx.scale_re(1.0 - RELAXATION);
        let ry = &zy.scale_re(RELAXATION) + &wy.scale_re(1.0 - RELAXATION);
        let (nwx, _) = project_psd(&(&rx + &ux));
        let (nwy, _) = project_psd(&(&ry + &uy));
        ux = &(&ux + &rx) - &nwx;
        uy = &(&uy + &ry) - &nwy;
        let dual = sigma * ((&nwx - &wx).frobenius_norm().powi(2) + (&nwy - &wy).frobenius_norm().powi(2)).sqrt();
        let primal = ((&zx - &nwx).frobenius_norm().powi(2) + (&zy - &nwy).frobenius_norm().powi(2)).sqrt();
        wx = nwx;
        wy = nwy;

        if it % ADAPT_EVERY == 0 {
            if primal > 10.0 * dual {
                sigma *= 2.0;
                ux = ux.scale_re(0.5);
                uy = uy.scale_re(0.5);
            } else if dual > 10.0 * primal {
                sigma *= 0.5;
                ux = ux.scale_re(2.0);
                uy = uy.scale_re(2.0);
            }
        }

        if it % CHECK_EVERY == 0 || it == opts.max_iter {
            // Only the cone conditions can be violated at z.
            let psd = min_eig_fast(&zx);
            let cap = -min_eig_fast(&zy);
            let feasible = psd >= -opts.tol && cap <= opts.tol;
            last = Some(zx.clone());
            if feasible && dual <= opts.tol && primal <= opts.tol {
                return Ok(finish(problem, &prog, zx, it));
            }
        }
    }
    let x = last.unwrap_or_else(|| CMat::zeros(dx));
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        residuals: verify(&x, problem)?,
    })
}

fn finish(problem: &SdpProblem, prog: &Program, x: CMat, iterations: usize) -> SdpSolution {
    let residuals = verify(&x, problem).expect("problem already assembled");
    let value = prog.objective.inner(&x).re / problem.p;
    SdpSolution {
        x,
        value,
        residuals,
        iterations,
    }
}

/// Recomputes the four feasibility residuals of a candidate X directly
/// from the constraint definitions.
pub fn verify(x: &CMat, problem: &SdpProblem) -> Result<Residuals> {
    let factors = problem.factors();
    let dim: usize = factors.iter().product();
    if x.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: x.dim(),
        });
    }
    let herm = x.hermitian_part();
    let psd_min_eig = *herm_eigvals(&herm)?.last().expect("non-empty");

    let mut pt_symmetry = x.hermiticity_error();
    pt_symmetry = pt_symmetry.max(partial_transpose(x, &factors, &[1, 3])?.max_abs_diff(x));
    if problem.mode == Mode::Lrcc {
        pt_symmetry = pt_symmetry.max(partial_transpose(x, &factors, &[0, 2])?.max_abs_diff(x));
        if problem.impose_real {
            pt_symmetry = pt_symmetry.max(x.max_imag());
        }
    }

    let d_in = factors[0] * factors[1];
    let d_out = factors[2] * factors[3];
    let reduced = partial_trace(&herm, &[d_in, d_out], &[0])?;
    let trace_cap = herm_eigvals(&(&reduced - &CMat::identity(d_in)))?[0];

    let rho_t = problem.rho_ab.mat().transpose();
    let weight = kron(&rho_t, &CMat::identity(d_out)).trace_product(x);
    let probability_affine = (weight - C64::new(problem.p, 0.0)).norm();

    Ok(Residuals {
        psd_min_eig,
        pt_symmetry,
        trace_cap,
        probability_affine,
    })
}

/// Choi matrix Σ|i⟩⟨j| ⊗ |i⟩⟨j| of the identity channel on a d-dimensional space.
pub fn identity_choi(d: usize) -> CMat {
    CMat::from_fn(d * d, |r, c| {
        if r / d == r % d && c / d == c % d {
            ONE
        } else {
            ZERO
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convert::{fidelity_with_probability, ConversionSpec};
    use crate::random;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn assembly_bookkeeping() {
        let rho = DensityMatrix::maximally_mixed(vec![2, 2]);
        let target = bob_local_target(&PureState::imbit_plus(), 2);
        assert_eq!(target.factors(), &[2, 2]);
        assert_abs_diff_eq!(target.amplitudes()[1].im, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        let prob = SdpProblem::new(rho, target, 1.0, Mode::Lqrcc).unwrap();
        let prog = assemble(&prob).unwrap();
        assert_eq!(prog.dim(), 16);
        assert_eq!(prog.affine_equalities(), 1);
        assert_eq!(prog.operator_caps(), 1);
        assert_eq!(prog.symmetries(), &[vec![1, 3]]);
        let lrcc = SdpProblem { mode: Mode::Lrcc, ..prob };
        assert_eq!(assemble(&lrcc).unwrap().symmetries().len(), 2);
    }

    #[test]
    fn verify_examples() {
        let psi = PureState::phi_plus();
        let prob = SdpProblem::new(psi.density(), psi.clone(), 1.0, Mode::Lrcc).unwrap();
        let zero = verify(&CMat::zeros(16), &prob).unwrap();
        assert_eq!(zero.psd_min_eig, 0.0);
        assert_eq!(zero.pt_symmetry, 0.0);
        assert!(zero.trace_cap <= 0.0);
        assert_abs_diff_eq!(zero.probability_affine, 1.0, epsilon = 1e-15);

        let id = identity_choi(4);
        let r = verify(&id, &prob).unwrap();
        assert!(r.within(1e-12), "{r:?}");
        assert_abs_diff_eq!(prog_value(&prob, &id), 1.0, epsilon = 1e-12);
    }

    fn prog_value(prob: &SdpProblem, x: &CMat) -> f64 {
        assemble(prob).unwrap().objective().inner(x).re / prob.p
    }

    #[test]
    fn identity_instance_reaches_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = random::pure(&mut rng, &[2, 2]);
        let prob = SdpProblem::new(psi.density(), psi, 1.0, Mode::Lqrcc).unwrap();
        let sol = solve(&prob, opts()).unwrap();
        assert!(sol.value >= 1.0 - 1e-5, "{}", sol.value);
        assert!(sol.residuals.within(1e-7), "{:?}", sol.residuals);
    }

    #[test]
    fn real_product_cannot_create_an_imbit() {
        let rho = DensityMatrix::qubit_bloch([0.3, 0.0, 0.5])
            .unwrap()
            .kron(&DensityMatrix::qubit_bloch([-0.2, 0.0, 0.6]).unwrap());
        let target = bob_local_target(&PureState::imbit_plus(), 2);
        let prob = SdpProblem::new(rho, target, 1.0, Mode::Lqrcc).unwrap();
        let sol = solve(&prob, opts()).unwrap();
        assert!(sol.value <= 0.5 + 1e-4, "{}", sol.value);
    }

    #[test]
    fn residuals_match_independent_verification() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random::density(&mut rng, &[2, 2]);
        let target = bob_local_target(&PureState::imbit_plus(), 2);
        let prob = SdpProblem::new(rho, target, 0.7, Mode::Lqrcc).unwrap();
        let sol = solve(&prob, opts()).unwrap();
        let again = verify(&sol.x, &prob).unwrap();
        assert!(sol.residuals.within(1e-7));
        assert_abs_diff_eq!(again.psd_min_eig, sol.residuals.psd_min_eig, epsilon = 1e-9);
        assert_abs_diff_eq!(again.trace_cap, sol.residuals.trace_cap, epsilon = 1e-9);
        assert_abs_diff_eq!(again.pt_symmetry, sol.residuals.pt_symmetry, epsilon = 1e-9);
        assert_abs_diff_eq!(again.probability_affine, sol.residuals.probability_affine, epsilon = 1e-9);
    }

    #[test]
    fn restart_agreement_and_mode_ordering() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..3 {
            let rho = random::density(&mut rng, &[2, 2]);
            let target = bob_local_target(&random::pure(&mut rng, &[2]), 2);
            let prob = SdpProblem::new(rho, target, 1.0, Mode::Lqrcc).unwrap();
            let a = solve(&prob, SolverOptions { seed: Some(1), ..opts() }).unwrap();
            let b = solve(&prob, SolverOptions { seed: Some(2), ..opts() }).unwrap();
            assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-6);
            let lrcc = solve(&SdpProblem { mode: Mode::Lrcc, ..prob }, opts()).unwrap();
            assert!(lrcc.value <= a.value + 1e-6, "{} > {}", lrcc.value, a.value);
        }
    }

    #[test]
    fn dominates_closed_form_conversion() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let psi = random::pure(&mut rng, &[2, 2]);
            let sigma = random::pure(&mut rng, &[2]);
            let spec = ConversionSpec::from_states(&psi, &sigma.density(), 1.0).unwrap();
            let closed = fidelity_with_probability(&spec, 1.0).unwrap().value;
            let prob = SdpProblem::new(psi.density(), bob_local_target(&sigma, 2), 1.0, Mode::Lqrcc).unwrap();
            let sol = solve(&prob, opts()).unwrap();
            assert!(sol.value >= closed - 1e-4, "{} < {}", sol.value, closed);
        }
    }

    #[test]
    fn real_flag_adds_a_constraint() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random::density(&mut rng, &[2, 2]);
        let target = bob_local_target(&PureState::imbit_plus(), 2);
        let base = SdpProblem::new(rho, target, 1.0, Mode::Lrcc).unwrap();
        let plain = solve(&base, opts()).unwrap();
        let real = solve(&base.clone().with_real_constraint(true), opts()).unwrap();
        assert!(real.x.max_imag() <= 1e-7);
        assert!(real.value <= plain.value + 1e-6);
    }
}
