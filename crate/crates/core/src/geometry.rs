//! Affine model of the quantum probability space.
//!
//! Outcome probabilities of any state are `p = s + M r`, where `s` is the
//! distribution of the maximally mixed state, `r` the Bloch vector and
//! `M_μν = Tr[E_μ π_ν] / 2`. The column space of `M` is spanned by the first
//! `r = rank(M)` left singular vectors `Q`, so every attainable `p` is
//! `s + Q z` for a reduced coordinate `z ∈ R^r`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::gell_mann::generators;
use crate::quantum::{max_eigen, probabilities, Povm, PureState};

/// Singular values below `tol * σ_max` count as zero.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-10;

/// `M` is materialized while it has at most this many columns (`d² - 1`).
pub const MATERIALIZE_LIMIT: usize = 1_000_000;

/// The Gram route squares singular values, so relative noise in `σ` is
/// about `sqrt(ε_machine)`; rank cutoffs below this floor are meaningless there.
const GRAM_RANK_FLOOR: f64 = 1e-7;

/// How the left singular vectors of `M` are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelRoute {
    /// Materialize `M` and take its SVD.
    Svd,
    /// Eigendecompose `M Mᵀ`, computed from `Tr[E_μ E_ν]` without forming `M`.
    Gram,
}

#[derive(Debug, Clone)]
pub struct AffineModel {
    povm: Povm,
    center: DVector<f64>,
    bloch_map: Option<DMatrix<f64>>,
    basis: DMatrix<f64>,
    singular_values: Vec<f64>,
}

/// `s_μ = Tr[E_μ] / d`
pub fn center_probabilities(povm: &Povm) -> Vec<f64> {
    let d = povm.dim() as f64;
    povm.elements().iter().map(|e| e.trace() / d).collect()
}

/// `M_μν = Tr[E_μ π_ν] / 2`, an `m × (d² - 1)` matrix.
pub fn bloch_map(povm: &Povm) -> DMatrix<f64> {
    let gens = generators(povm.dim());
    let elements = povm.elements();
    DMatrix::from_fn(elements.len(), gens.len(), |mu, nu| {
        0.5 * gens[nu].trace_with(elements[mu].matrix())
    })
}

/// Builds the affine model, choosing the SVD route while `M` fits in
/// [`MATERIALIZE_LIMIT`] columns.
pub fn build_affine_model(povm: &Povm, tol_rank: f64) -> Result<AffineModel> {
    let d = povm.dim();
    let route = if d * d - 1 <= MATERIALIZE_LIMIT {
        ModelRoute::Svd
    } else {
        ModelRoute::Gram
    };
    build_affine_model_via(povm, tol_rank, route)
}

pub fn build_affine_model_via(povm: &Povm, tol_rank: f64, route: ModelRoute) -> Result<AffineModel> {
    if tol_rank.is_nan() || tol_rank <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "rank tolerance must be positive, got {tol_rank}"
        )));
    }
    let m = povm.len();
    let center = DVector::from_vec(center_probabilities(povm));

    let (left, sigma, bloch) = match route {
        ModelRoute::Svd => {
            // nalgebra's SVD loses accuracy on these rank-deficient matrices,
            // so the decomposition goes through faer.
            let mm = bloch_map(povm);
            let fm = faer::Mat::<f64>::from_fn(mm.nrows(), mm.ncols(), |i, j| mm[(i, j)]);
            let svd = fm
                .thin_svd()
                .map_err(|e| Error::ConvergenceFailure(format!("SVD of M: {e:?}")))?;
            let (u, sv) = (svd.U(), svd.S().column_vector());
            let left = DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]);
            let sigma: Vec<f64> = (0..sv.nrows()).map(|i| sv[i]).collect();
            (left, sigma, Some(mm))
        }
        ModelRoute::Gram => {
            let d = povm.dim() as f64;
            let els = povm.elements();
            let gram = DMatrix::from_fn(m, m, |a, b| {
                0.5 * (els[a].trace_product(&els[b]) - els[a].trace() * els[b].trace() / d)
            });
            let eig = SymmetricEigen::new(gram);
            let sigma = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
            (eig.eigenvectors, sigma, None)
        }
    };

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));
    let sigma_max = order.first().map(|&i| sigma[i]).unwrap_or(0.0);
    let cutoff = match route {
        ModelRoute::Svd => tol_rank,
        ModelRoute::Gram => tol_rank.max(GRAM_RANK_FLOOR),
    } * sigma_max;
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&i| sigma_max > 0.0 && sigma[i] > cutoff && sigma[i] > 1e-14)
        .collect();
    if kept.is_empty() {
        return Err(Error::DegenerateMeasurement);
    }

    let mut basis = DMatrix::zeros(m, kept.len());
    for (col, &i) in kept.iter().enumerate() {
        let mut v = left.column(i).into_owned();
        // Sign convention: the largest-magnitude entry (first on ties) is positive.
        let mut lead = 0;
        for (k, x) in v.iter().enumerate() {
            if x.abs() > v[lead].abs() + 1e-12 {
                lead = k;
            }
        }
        if v[lead] < 0.0 {
            v = -v;
        }
        basis.set_column(col, &v);
    }

    Ok(AffineModel {
        povm: povm.clone(),
        center,
        bloch_map: bloch,
        basis,
        singular_values: kept.iter().map(|&i| sigma[i]).collect(),
    })
}

impl AffineModel {
    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    /// `s`
    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    /// `Q`, an `m × r` matrix with orthonormal columns.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// `M`, when materialized.
    pub fn bloch_map(&self) -> Option<&DMatrix<f64>> {
        self.bloch_map.as_ref()
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn reduced_rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn outcomes(&self) -> usize {
        self.basis.nrows()
    }

    /// `p(z) = s + Q z`. No positivity is implied: `z` may lie outside the
    /// feasible set.
    pub fn z_to_probability(&self, z: &[f64]) -> Vec<f64> {
        let p = &self.center + &self.basis * DVector::from_column_slice(z);
        p.iter().copied().collect()
    }

    /// `Qᵀ (p - s)`
    pub fn probability_to_z(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.outcomes() {
            return Err(Error::DimensionMismatch {
                expected: self.outcomes(),
                found: p.len(),
            });
        }
        let diff = DVector::from_column_slice(p) - &self.center;
        Ok((self.basis.transpose() * diff).iter().copied().collect())
    }

    pub fn state_to_z(&self, state: &PureState) -> Result<Vec<f64>> {
        self.probability_to_z(&probabilities(&self.povm, state)?)
    }
}

/// `σ_P(u)` together with a state attaining it.
#[derive(Debug, Clone)]
pub struct SupportEvaluation {
    pub direction: Vec<f64>,
    pub value: f64,
    pub maximizer: PureState,
}

/// `σ_P(u) = λ_max(Σ u_i E_i)`
pub fn support_function(povm: &Povm, u: &[f64]) -> Result<SupportEvaluation> {
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidConfig("support direction must be finite".into()));
    }
    let top = max_eigen(&povm.observable(u)?)?;
    Ok(SupportEvaluation {
        direction: u.to_vec(),
        value: top.value,
        maximizer: top.vector,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{combine_povms, spectral_range, HermitianMatrix};

    fn z_basis() -> Povm {
        Povm::from_basis(&[PureState::basis(2, 0), PureState::basis(2, 1)]).unwrap()
    }

    fn x_basis() -> Povm {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Povm::from_basis(&[
            PureState::from_real(&[s, s]).unwrap(),
            PureState::from_real(&[s, -s]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn trivial_povm_is_degenerate() {
        let half = HermitianMatrix::identity(2).scaled(0.5);
        let povm = crate::quantum::validate_povm(vec![half.clone(), half]).unwrap();
        assert_eq!(center_probabilities(&povm), vec![0.5, 0.5]);
        assert_eq!(
            build_affine_model(&povm, DEFAULT_RANK_TOLERANCE).unwrap_err(),
            Error::DegenerateMeasurement
        );
    }

    #[test]
    fn z_basis_has_rank_one() {
        let model = build_affine_model(&z_basis(), DEFAULT_RANK_TOLERANCE).unwrap();
        assert_eq!(model.reduced_rank(), 1);
        assert_eq!(model.center().as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn combined_xz_has_rank_two() {
        let e = combine_povms(&[z_basis(), x_basis()]).unwrap();
        let model = build_affine_model(&e, DEFAULT_RANK_TOLERANCE).unwrap();
        assert_eq!(model.reduced_rank(), 2);
        for s in model.center().iter() {
            assert!((s - 0.25).abs() < 1e-15);
        }
        assert_eq!(model.z_to_probability(&[0.0, 0.0]), model.center().as_slice());
    }

    #[test]
    fn gram_route_matches_svd_route() {
        for seed in 0..5 {
            let povm = crate::quantum::random_haar_povm(3, 5, seed).unwrap();
            let a = build_affine_model_via(&povm, 1e-10, ModelRoute::Svd).unwrap();
            let b = build_affine_model_via(&povm, 1e-10, ModelRoute::Gram).unwrap();
            assert_eq!(a.reduced_rank(), b.reduced_rank());
            for (x, y) in a.singular_values().iter().zip(b.singular_values()) {
                assert!(
                    (x - y).abs() < 1e-10,
                    "{:?} {:?}",
                    a.singular_values(),
                    b.singular_values()
                );
            }
            let pa = a.basis() * a.basis().transpose();
            let pb = b.basis() * b.basis().transpose();
            assert!((pa - pb).norm() < 1e-8);
        }
    }

    #[test]
    fn support_function_examples() {
        let povm = crate::quantum::random_haar_povm(3, 4, 5).unwrap();
        for i in 0..4 {
            let mut u = vec![0.0; 4];
            u[i] = 1.0;
            let (lo, hi) = spectral_range(&povm.elements()[i]).unwrap();
            assert!((support_function(&povm, &u).unwrap().value - hi).abs() < 1e-12);
            u[i] = -1.0;
            assert!((support_function(&povm, &u).unwrap().value + lo).abs() < 1e-12);
        }
        let ones = support_function(&povm, &[1.0; 4]).unwrap();
        assert!((ones.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_on_projection() {
        let model = build_affine_model(&z_basis(), DEFAULT_RANK_TOLERANCE).unwrap();
        assert!(matches!(
            model.probability_to_z(&[1.0, 0.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(model.state_to_z(&PureState::basis(3, 0)).is_err());
    }
}
