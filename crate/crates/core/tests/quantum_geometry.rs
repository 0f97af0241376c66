mod common;

use common::*;
use eurcut::applications::{build_family_bases, combined_povm, MeasurementFamily};
use eurcut::gell_mann::gell_mann_basis;
use eurcut::geometry::{build_affine_model, support_function, DEFAULT_RANK_TOLERANCE};
use eurcut::quantum::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn residual(h: &HermitianMatrix, pair: &Eigenpair) -> f64 {
    let v = pair.vector.amplitudes();
    (h.matrix() * v - v * C64::new(pair.value, 0.0)).norm()
}

fn identity_deviation(povm: &Povm) -> f64 {
    let d = povm.dim();
    let mut sum = DMatrix::<C64>::zeros(d, d);
    for e in povm.elements() {
        sum += e.matrix();
    }
    (sum - DMatrix::<C64>::identity(d, d)).norm()
}

#[test]
fn gell_mann_d5_invariants() {
    let b = gell_mann_basis(5);
    assert_eq!(b.generators.len(), 24);
    for (i, p) in b.generators.iter().enumerate() {
        assert!(p.trace().abs() <= 1e-12);
        for (j, q) in b.generators.iter().enumerate() {
            let target = if i == j { 2.0 } else { 0.0 };
            assert!((p.trace_product(q) - target).abs() <= 1e-10);
        }
    }
}

#[test]
fn m2_combination_sums_to_identity() {
    let bases = build_family_bases(MeasurementFamily::M2, &[0.7]).unwrap();
    let povm = combined_povm(&bases).unwrap();
    assert_eq!(povm.len(), 6);
    assert!(identity_deviation(&povm) <= 1e-12);
}

#[test]
fn large_random_hermitian_residuals() {
    let mut rng = rng(100);
    let h = random_hermitian(100, &mut rng);
    let top = max_eigen(&h).unwrap();
    let bottom = min_eigen(&h).unwrap();
    assert!(residual(&h, &top) <= 1e-9 * (1.0 + top.value.abs()));
    assert!(residual(&h, &bottom) <= 1e-9 * (1.0 + bottom.value.abs()));
}

#[test]
fn haar_d100_has_rank_at_most_three() {
    let povm = random_haar_povm(100, 4, 1).unwrap();
    let model = build_affine_model(&povm, DEFAULT_RANK_TOLERANCE).unwrap();
    assert!(model.reduced_rank() <= 3);
}

#[test]
fn haar_small_is_valid_and_deterministic() {
    let a = random_haar_povm(2, 2, 7).unwrap();
    let b = random_haar_povm(2, 2, 7).unwrap();
    assert_eq!(a, b);
    assert!(validate_povm(a.elements().to_vec()).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn povm_invariants(d in 2usize..6, m in 2usize..7, seed in any::<u64>()) {
        let povm = random_haar_povm(d, m, seed).unwrap();
        for e in povm.elements() {
            prop_assert!(eigenvalues(e).unwrap()[0] >= -1e-10);
        }
        prop_assert!(identity_deviation(&povm) <= 1e-10);
        let mut rng = rng(seed);
        let p = probabilities(&povm, &random_state(d, &mut rng)).unwrap();
        prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn combined_trace_sum(d in 2usize..5, n in 1usize..4, seed in any::<u64>()) {
        let povms: Vec<Povm> = (0..n).map(|k| random_haar_povm(d, 2 + k, seed.wrapping_add(k as u64)).unwrap()).collect();
        let e = combine_povms(&povms).unwrap();
        let total: f64 = e.elements().iter().map(|x| x.trace()).sum();
        prop_assert!((total - d as f64).abs() <= 1e-10);
    }

    #[test]
    fn eigen_residuals_and_duality(d in 2usize..12, seed in any::<u64>()) {
        let mut rng = rng(seed);
        let h = random_hermitian(d, &mut rng);
        let top = max_eigen(&h).unwrap();
        let bottom = min_eigen(&h).unwrap();
        prop_assert!(residual(&h, &top) <= 1e-9 * (1.0 + top.value.abs()));
        prop_assert!(residual(&h, &bottom) <= 1e-9 * (1.0 + bottom.value.abs()));
        let neg = max_eigen(&h.scaled(-1.0)).unwrap();
        prop_assert!((bottom.value + neg.value).abs() <= 1e-10);
    }

    #[test]
    fn affine_model_invariants(d in 2usize..5, m in 2usize..7, seed in any::<u64>()) {
        let povm = random_haar_povm(d, m, seed).unwrap();
        let model = build_affine_model(&povm, DEFAULT_RANK_TOLERANCE).unwrap();
        let q = model.basis();
        let r = model.reduced_rank();
        prop_assert!(r <= (m - 1).min(d * d - 1));
        let gram = q.transpose() * q;
        prop_assert!((gram - DMatrix::<f64>::identity(r, r)).norm() <= 1e-10);
        let s = model.center();
        prop_assert!((s.sum() - 1.0).abs() <= 1e-10);
        for (i, e) in povm.elements().iter().enumerate() {
            prop_assert!((s[i] - e.trace() / d as f64).abs() <= 1e-12);
        }
        let mm = model.bloch_map().unwrap();
        for c in 0..mm.ncols() {
            prop_assert!(mm.column(c).sum().abs() <= 1e-10);
        }
        let proj = DMatrix::<f64>::identity(m, m) - q * q.transpose();
        prop_assert!((proj * mm).norm() <= 1e-8 * mm.norm());

        let mut rng = rng(seed ^ 1);
        let psi = random_state(d, &mut rng);
        let p = probabilities(&povm, &psi).unwrap();
        let back = model.z_to_probability(&model.state_to_z(&psi).unwrap());
        for (a, b) in p.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
        let z: Vec<f64> = (0..r).map(|k| (k as f64 + 1.0) * 0.37).collect();
        prop_assert!((model.z_to_probability(&z).iter().sum::<f64>() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn support_function_is_sublinear_and_supporting(d in 2usize..5, m in 2usize..6, seed in any::<u64>()) {
        let povm = random_haar_povm(d, m, seed).unwrap();
        let mut rng = rng(seed);
        let u: Vec<f64> = random_distribution(m, &mut rng).iter().map(|x| x - 0.3).collect();
        let v: Vec<f64> = random_distribution(m, &mut rng).iter().map(|x| 0.2 - x).collect();
        let sum: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        let su = support_function(&povm, &u).unwrap();
        let sv = support_function(&povm, &v).unwrap().value;
        prop_assert!(support_function(&povm, &sum).unwrap().value <= su.value + sv + 1e-9);
        let scaled: Vec<f64> = u.iter().map(|x| 2.5 * x).collect();
        prop_assert!((support_function(&povm, &scaled).unwrap().value - 2.5 * su.value).abs() <= 1e-9);
        let p_max = probabilities(&povm, &su.maximizer).unwrap();
        let attained: f64 = u.iter().zip(&p_max).map(|(a, b)| a * b).sum();
        prop_assert!((attained - su.value).abs() <= 1e-9);
        for _ in 0..20 {
            let p = probabilities(&povm, &random_state(d, &mut rng)).unwrap();
            let inner: f64 = u.iter().zip(&p).map(|(a, b)| a * b).sum();
            prop_assert!(inner <= su.value + 1e-9);
        }
    }
}
