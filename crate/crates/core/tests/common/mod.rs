#![allow(dead_code)]

use std::f64::consts::FRAC_1_SQRT_2;

use eurcut::polytope::HalfSpace;
use eurcut::quantum::{HermitianMatrix, Povm, PureState, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn random_state(d: usize, rng: &mut ChaCha20Rng) -> PureState {
    let amps: Vec<C64> = (0..d)
        .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    PureState::from_slice(&amps).unwrap()
}

pub fn random_hermitian(d: usize, rng: &mut ChaCha20Rng) -> HermitianMatrix {
    let a = DMatrix::<C64>::from_fn(d, d, |_, _| {
        C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    HermitianMatrix::new((&a + a.adjoint()) * C64::new(0.5, 0.0)).unwrap()
}

/// Random orthonormal basis from the eigenvectors of a random Hermitian matrix.
pub fn random_basis(d: usize, rng: &mut ChaCha20Rng) -> Vec<PureState> {
    let h = random_hermitian(d, rng);
    let eig = nalgebra::SymmetricEigen::new(h.into_matrix());
    (0..d)
        .map(|k| PureState::new(eig.eigenvectors.column(k).into_owned()).unwrap())
        .collect()
}

pub fn random_distribution(m: usize, rng: &mut ChaCha20Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

pub fn z_basis() -> Vec<PureState> {
    vec![PureState::basis(2, 0), PureState::basis(2, 1)]
}

pub fn x_basis() -> Vec<PureState> {
    let s = FRAC_1_SQRT_2;
    vec![
        PureState::from_real(&[s, s]).unwrap(),
        PureState::from_real(&[s, -s]).unwrap(),
    ]
}

pub fn xz_povm() -> Povm {
    eurcut::quantum::combine_povms(&[
        Povm::from_basis(&z_basis()).unwrap(),
        Povm::from_basis(&x_basis()).unwrap(),
    ])
    .unwrap()
}

/// A bounded H-representation: random unit normals, plus the `±e_i` box
/// when `boxed`, with offsets in `[0.5, 1.5]` so the origin is interior.
pub fn random_hrep(r: usize, n: usize, boxed: bool, rng: &mut ChaCha20Rng) -> Vec<HalfSpace> {
    let mut out = Vec::new();
    if boxed {
        for i in 0..r {
            for sign in [1.0, -1.0] {
                let mut a = vec![0.0; r];
                a[i] = sign;
                out.push(HalfSpace::new(a, rng.random_range(0.5..1.5)).unwrap());
            }
        }
    }
    while out.len() < n {
        let a: Vec<f64> = (0..r).map(|_| StandardNormal.sample(rng)).collect();
        if let Some(h) = HalfSpace::new(a, rng.random_range(0.5..1.5)) {
            out.push(h);
        }
    }
    out
}

/// Highly degenerate H-representation: integer normals in `{-1, 0, 1}^r`
/// with unit offsets (cubes, cross-polytopes and their intersections).
pub fn lattice_hrep(r: usize, n: usize, rng: &mut ChaCha20Rng) -> Vec<HalfSpace> {
    let mut out = Vec::new();
    for i in 0..r {
        for sign in [1.0, -1.0] {
            let mut a = vec![0.0; r];
            a[i] = sign;
            out.push(HalfSpace::new(a, 1.0).unwrap());
        }
    }
    let n = n.min(3usize.pow(r as u32) - 1);
    while out.len() < n {
        let a: Vec<f64> = (0..r).map(|_| rng.random_range(-1i32..=1) as f64).collect();
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        if let Some(h) = HalfSpace::new(a, norm.max(1.0)) {
            if !out.iter().any(|e: &HalfSpace| e.normal() == h.normal()) {
                out.push(h);
            }
        }
    }
    out
}

pub fn same_point_sets(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    let close = |x: &Vec<f64>, y: &Vec<f64>| x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt() <= tol;
    a.len() == b.len()
        && a.iter().all(|x| b.iter().any(|y| close(x, y)))
        && b.iter().all(|y| a.iter().any(|x| close(x, y)))
}
