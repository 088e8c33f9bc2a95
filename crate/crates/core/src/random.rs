//! Seeded random generators for states, unitaries and channels.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channels::KrausChannel;
use crate::qmat::{CMat, DensityMatrix, PureState, C64};

fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn ginibre(rng: &mut impl Rng, dim: usize) -> CMat {
    CMat::from_fn(dim, |_, _| C64::new(gaussian(rng), gaussian(rng)))
}

/// Hilbert–Schmidt random density matrix (full rank almost surely).
pub fn density(rng: &mut impl Rng, factors: &[usize]) -> DensityMatrix {
    let d: usize = factors.iter().product();
    let g = ginibre(rng, d);
    let m = g.matmul(&g.adjoint());
    let tr = m.trace().re;
    DensityMatrix::from_numeric(m.scale_re(1.0 / tr), factors.to_vec())
        .expect("G G† / tr is a density matrix")
}

/// Random real symmetric density matrix.
pub fn real_density(rng: &mut impl Rng, factors: &[usize]) -> DensityMatrix {
    let d: usize = factors.iter().product();
    let g = CMat::from_fn(d, |_, _| C64::new(gaussian(rng), 0.0));
    let m = g.matmul(&g.transpose());
    let tr = m.trace().re;
    DensityMatrix::new(m.scale_re(1.0 / tr), factors.to_vec()).expect("real PSD with unit trace")
}

pub fn pure(rng: &mut impl Rng, factors: &[usize]) -> PureState {
    let d: usize = factors.iter().product();
    let v: Vec<C64> = (0..d).map(|_| C64::new(gaussian(rng), gaussian(rng))).collect();
    PureState::normalized(v, factors.to_vec()).expect("non-zero gaussian vector")
}

pub fn real_pure(rng: &mut impl Rng, factors: &[usize]) -> PureState {
    let d: usize = factors.iter().product();
    let v: Vec<C64> = (0..d).map(|_| C64::new(gaussian(rng), 0.0)).collect();
    PureState::normalized(v, factors.to_vec()).expect("non-zero gaussian vector")
}

/// Modified Gram–Schmidt on the columns of `m`.
fn orthonormalize(m: &CMat) -> CMat {
    let n = m.dim();
    let mut cols: Vec<Vec<C64>> = (0..n).map(|c| (0..n).map(|r| m[(r, c)]).collect()).collect();
    for k in 0..n {
        for j in 0..k {
            let proj: C64 = (0..n).map(|r| cols[j][r].conj() * cols[k][r]).sum();
            for r in 0..n {
                let v = cols[j][r];
                cols[k][r] -= proj * v;
            }
        }
        let norm = cols[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut cols[k] {
            *z /= norm;
        }
    }
    CMat::from_fn(n, |r, c| cols[c][r])
}

pub fn unitary(rng: &mut impl Rng, dim: usize) -> CMat {
    orthonormalize(&ginibre(rng, dim))
}

pub fn orthogonal(rng: &mut impl Rng, dim: usize) -> CMat {
    orthonormalize(&CMat::from_fn(dim, |_, _| C64::new(gaussian(rng), 0.0)))
}

/// Stacks `count` Ginibre blocks into an isometry and slices it into Kraus
/// operators, giving a trace-preserving channel.
fn isometry_blocks(rng: &mut impl Rng, dim: usize, count: usize, real: bool) -> Vec<CMat> {
    let total = dim * count;
    let mut cols: Vec<Vec<C64>> = (0..dim)
        .map(|_| {
            (0..total)
                .map(|_| C64::new(gaussian(rng), if real { 0.0 } else { gaussian(rng) }))
                .collect()
        })
        .collect();
    for k in 0..dim {
        for j in 0..k {
            let proj: C64 = (0..total).map(|r| cols[j][r].conj() * cols[k][r]).sum();
            for r in 0..total {
                let v = cols[j][r];
                cols[k][r] -= proj * v;
            }
        }
        let norm = cols[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut cols[k] {
            *z /= norm;
        }
    }
    (0..count)
        .map(|b| CMat::from_fn(dim, |r, c| cols[c][b * dim + r]))
        .collect()
}

/// Random trace-preserving channel with `count` Kraus operators.
pub fn channel(rng: &mut impl Rng, dim: usize, count: usize) -> KrausChannel {
    KrausChannel::new(isometry_blocks(rng, dim, count, false), true).expect("isometry slices are TP")
}

/// Random trace-preserving channel with real Kraus operators.
pub fn real_channel(rng: &mut impl Rng, dim: usize, count: usize) -> KrausChannel {
    KrausChannel::new(isometry_blocks(rng, dim, count, true), true).expect("isometry slices are TP")
}

/// Random trace-non-increasing channel: a TP channel with every Kraus
/// operator scaled by √`shrink`.
pub fn subnormalized_channel(rng: &mut impl Rng, dim: usize, count: usize, shrink: f64) -> KrausChannel {
    let ks = isometry_blocks(rng, dim, count, false)
        .into_iter()
        .map(|k| k.scale_re(shrink.sqrt()))
        .collect();
    KrausChannel::new(ks, false).expect("scaled isometry is sub-normalized")
}
