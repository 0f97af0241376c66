//! Slow reference implementations used to check the solver and the
//! vertex engine. Neither uses gradients nor the incremental machinery.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::entropy::EntropySpec;
use crate::error::{Error, Result};
use crate::polytope::HalfSpace;
use crate::quantum::{probabilities, Povm, PureState, C64};

pub const MAX_ORACLE_DIM: usize = 6;
pub const MIN_SAMPLES: usize = 1000;
/// Number of best samples that are locally refined.
const REFINED_STARTS: usize = 8;
const INITIAL_STEP: f64 = 0.1;
const FINAL_STEP: f64 = 1e-9;
const RELATIVE_IMPROVEMENT: f64 = 1e-10;
const FEASIBILITY_TOL: f64 = 1e-8;
const DEDUP_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Smallest entropy found; an upper bound on the true minimum.
    pub h_estimate: f64,
    pub best_state: PureState,
    pub best_probabilities: Vec<f64>,
    pub samples: usize,
    pub refinement_steps: usize,
}

fn entropy_of(povm: &Povm, spec: &EntropySpec, coords: &[f64]) -> f64 {
    let d = coords.len() / 2;
    let amps: Vec<C64> = (0..d).map(|i| C64::new(coords[2 * i], coords[2 * i + 1])).collect();
    match PureState::from_slice(&amps) {
        Ok(state) => spec.value_clamped(&probabilities(povm, &state).expect("dimension checked")),
        Err(_) => f64::INFINITY,
    }
}

fn to_state(coords: &[f64]) -> PureState {
    let amps: Vec<C64> = coords.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
    PureState::from_slice(&amps)
        .expect("nonzero coordinates")
        .canonical_phase()
}

/// Minimum entropy over `samples` Haar-random pure states, then a
/// derivative-free pattern search from the best few: coordinate moves on the
/// real and imaginary parts plus random directions, halving the step once a
/// sweep improves by less than `1e-10` relative.
pub fn brute_force_min_entropy(povm: &Povm, spec: &EntropySpec, samples: usize, seed: u64) -> Result<OracleResult> {
    let d = povm.dim();
    if d > MAX_ORACLE_DIM {
        return Err(Error::DimensionTooLarge {
            dim: d,
            cap: MAX_ORACLE_DIM,
        });
    }
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidConfig(format!(
            "oracle needs at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let n = 2 * d;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let gaussian = |rng: &mut ChaCha20Rng| -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(rng)).collect() };

    let mut pool: Vec<(f64, Vec<f64>)> = (0..samples)
        .map(|_| {
            let x = gaussian(&mut rng);
            (entropy_of(povm, spec, &x), x)
        })
        .collect();
    // Basis states are cheap candidates that random sampling rarely hits.
    for i in 0..d {
        let mut x = vec![0.0; n];
        x[2 * i] = 1.0;
        pool.push((entropy_of(povm, spec, &x), x));
    }
    pool.sort_by(|a, b| a.0.total_cmp(&b.0));
    pool.truncate(REFINED_STARTS);

    let mut steps = 0usize;
    let mut best = pool[0].clone();
    for (mut h, mut x) in pool {
        let mut step = INITIAL_STEP;
        while step > FINAL_STEP {
            let before = h;
            let mut directions: Vec<Vec<f64>> = (0..n)
                .map(|k| {
                    let mut e = vec![0.0; n];
                    e[k] = 1.0;
                    e
                })
                .collect();
            for _ in 0..n {
                let v = gaussian(&mut rng);
                let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
                directions.push(v.iter().map(|t| t / norm).collect());
            }
            for dir in &directions {
                for sign in [1.0, -1.0] {
                    let trial: Vec<f64> = x.iter().zip(dir).map(|(a, b)| a + sign * step * b).collect();
                    let ht = entropy_of(povm, spec, &trial);
                    steps += 1;
                    if ht < h {
                        let norm = trial.iter().map(|t| t * t).sum::<f64>().sqrt();
                        x = trial.iter().map(|t| t / norm).collect();
                        h = ht;
                    }
                }
            }
            if before - h <= RELATIVE_IMPROVEMENT * before.abs().max(1e-300) {
                step *= 0.5;
            }
        }
        if h < best.0 {
            best = (h, x);
        }
    }

    let state = to_state(&best.1);
    let p = probabilities(povm, &state)?;
    Ok(OracleResult {
        h_estimate: best.0,
        best_state: state,
        best_probabilities: p,
        samples,
        refinement_steps: steps,
    })
}

/// Vertices of `{z : ⟨a_i, z⟩ <= b_i}` by solving every `r`-subset of
/// constraints as equalities and keeping the feasible solutions.
pub fn brute_force_vertices(halfspaces: &[HalfSpace], r: usize) -> Result<Vec<Vec<f64>>> {
    if r == 0 || r > MAX_ORACLE_DIM {
        return Err(Error::InvalidConfig(format!(
            "brute-force vertices need 1 <= r <= {MAX_ORACLE_DIM}"
        )));
    }
    if let Some(h) = halfspaces.iter().find(|h| h.normal().len() != r) {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: h.normal().len(),
        });
    }
    let a = DMatrix::from_fn(halfspaces.len(), r, |i, j| halfspaces[i].normal()[j]);
    if is_unbounded(&a) {
        return Err(Error::Unbounded);
    }

    let mut out: Vec<Vec<f64>> = Vec::new();
    for subset in (0..halfspaces.len()).combinations(r) {
        let sys = DMatrix::from_fn(r, r, |i, j| a[(subset[i], j)]);
        let rhs = DVector::from_fn(r, |i, _| halfspaces[subset[i]].offset());
        let svd = sys.clone().svd(false, false);
        let smin = svd.singular_values.min();
        if smin < 1e-10 * svd.singular_values.max().max(1.0) {
            continue;
        }
        let Some(z) = sys.lu().solve(&rhs) else { continue };
        let z: Vec<f64> = z.iter().copied().collect();
        if halfspaces.iter().all(|h| h.slack(&z) >= -FEASIBILITY_TOL) && !out.iter().any(|v| dist(v, &z) <= DEDUP_TOL) {
            out.push(z);
        }
    }
    Ok(out)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Whether `{y : A y <= 0}` contains a nonzero direction. With full column
/// rank the cone is pointed, so it is nontrivial exactly when one of its
/// extreme rays (null directions of `r - 1` rows) satisfies every row.
fn is_unbounded(a: &DMatrix<f64>) -> bool {
    let (n, r) = a.shape();
    if n < r || a.clone().svd(false, false).rank(1e-10) < r {
        return true;
    }
    if r == 1 {
        let (pos, neg) = (
            a.column(0).iter().any(|&x| x > 0.0),
            a.column(0).iter().any(|&x| x < 0.0),
        );
        return !(pos && neg);
    }
    for subset in (0..n).combinations(r - 1) {
        let sub = DMatrix::from_fn(r - 1, r, |i, j| a[(subset[i], j)]);
        if sub.clone().svd(false, false).rank(1e-10) < r - 1 {
            continue;
        }
        let y = null_direction(&sub);
        for sign in [1.0, -1.0] {
            let dir = &y * sign;
            if (a * &dir).iter().all(|&x| x <= 1e-12) {
                return true;
            }
        }
    }
    false
}

/// Unit vector spanning the null space of a full-rank `(r-1) × r` matrix,
/// via generalized cross product (cofactor expansion).
fn null_direction(m: &DMatrix<f64>) -> DVector<f64> {
    let r = m.ncols();
    let mut y = DVector::zeros(r);
    for k in 0..r {
        let minor = m.clone().remove_column(k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        y[k] = sign * minor.determinant();
    }
    let norm = y.norm();
    y / norm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hs(n: &[f64], b: f64) -> HalfSpace {
        HalfSpace::new(n.to_vec(), b).unwrap()
    }

    #[test]
    fn square_and_simplex() {
        let square = [
            hs(&[1.0, 0.0], 1.0),
            hs(&[-1.0, 0.0], 0.0),
            hs(&[0.0, 1.0], 1.0),
            hs(&[0.0, -1.0], 0.0),
        ];
        assert_eq!(brute_force_vertices(&square, 2).unwrap().len(), 4);
        let simplex = [
            hs(&[1.0, 1.0, 1.0], 1.0),
            hs(&[-1.0, 0.0, 0.0], 0.0),
            hs(&[0.0, -1.0, 0.0], 0.0),
            hs(&[0.0, 0.0, -1.0], 0.0),
        ];
        assert_eq!(brute_force_vertices(&simplex, 3).unwrap().len(), 4);
    }

    #[test]
    fn unbounded_systems() {
        let wedge = [hs(&[1.0, 0.0], 1.0), hs(&[0.0, 1.0], 1.0)];
        assert_eq!(brute_force_vertices(&wedge, 2).unwrap_err(), Error::Unbounded);
        let strip = [hs(&[1.0, 0.0], 1.0), hs(&[-1.0, 0.0], 1.0), hs(&[0.0, 1.0], 1.0)];
        assert_eq!(brute_force_vertices(&strip, 2).unwrap_err(), Error::Unbounded);
    }

    #[test]
    fn oracle_finds_eigenstate() {
        let z = Povm::from_basis(&[PureState::basis(2, 0), PureState::basis(2, 1)]).unwrap();
        let res = brute_force_min_entropy(&z, &EntropySpec::shannon(), 1000, 3).unwrap();
        assert!(res.h_estimate.abs() < 1e-9);
    }

    #[test]
    fn oracle_caps() {
        let povm = crate::quantum::random_haar_povm(7, 2, 0).unwrap();
        assert!(matches!(
            brute_force_min_entropy(&povm, &EntropySpec::shannon(), 1000, 0),
            Err(Error::DimensionTooLarge { dim: 7, cap: 6 })
        ));
        let small = crate::quantum::random_haar_povm(2, 2, 0).unwrap();
        assert!(brute_force_min_entropy(&small, &EntropySpec::shannon(), 10, 0).is_err());
    }
}
