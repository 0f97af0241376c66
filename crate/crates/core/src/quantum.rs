//! Dense Hermitian linear algebra, pure states and POVMs.
//!
//! Everything here is a plain immutable value. Matrices are stored as
//! `nalgebra` dense complex matrices; the only spectral primitive is the dense
//! Hermitian eigendecomposition behind [`max_eigen`] and [`min_eigen`].

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Input asymmetry tolerated (and removed) when building a [`HermitianMatrix`].
pub const HERMITIAN_TOL: f64 = 1e-8;
/// Smallest eigenvalue accepted for a POVM element.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Frobenius tolerance on `sum(E) - I`.
pub const COMPLETENESS_TOL: f64 = 1e-10;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_SWEEPS: usize = 10_000;

/// A square complex matrix equal to its own conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(DMatrix<C64>);

impl HermitianMatrix {
    /// Symmetrizes `m` as `(m + m†)/2`.
    ///
    /// Inputs whose asymmetry exceeds [`HERMITIAN_TOL`] are rejected rather than
    /// silently projected.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let adj = m.adjoint();
        let asymmetry = (&m - &adj).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if asymmetry > HERMITIAN_TOL {
            return Err(Error::NotHermitian { asymmetry });
        }
        Ok(Self::symmetrized(m))
    }

    fn symmetrized(m: DMatrix<C64>) -> Self {
        let adj = m.adjoint();
        Self((m + adj) * C64::new(0.5, 0.0))
    }

    pub fn from_real(m: DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|x| C64::new(x, 0.0)))
    }

    pub fn identity(d: usize) -> Self {
        Self(DMatrix::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        Self(DMatrix::zeros(d, d))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let d = values.len();
        Self(DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    /// `|ψ⟩⟨ψ|`
    pub fn projector(state: &PureState) -> Self {
        let v = state.amplitudes();
        Self::symmetrized(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.diagonal().iter().map(|c| c.re).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(&self.0 * C64::new(factor, 0.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self(&self.0 + &other.0))
    }

    /// `⟨ψ|H|ψ⟩`, real by hermiticity.
    pub fn expectation(&self, state: &PureState) -> Result<f64> {
        check_dim(self.dim(), state.dim())?;
        let v = state.amplitudes();
        Ok(v.dotc(&(&self.0 * v)).re)
    }

    /// `Tr[self · other]`
    pub fn trace_product(&self, other: &Self) -> f64 {
        // Tr[AB] = Σ_ij A_ij B_ji = Σ_ij A_ij conj(B_ij) for Hermitian B.
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a * b.conj()).re).sum()
    }

    /// Frobenius distance to another matrix of the same dimension.
    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        (&self.0 - &other.0).norm()
    }
}

/// A unit-norm vector in `C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState(DVector<C64>);

impl PureState {
    /// Normalizes `amplitudes`; fails on a (numerically) zero vector.
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm.is_nan() || norm <= 1e-300 || !norm.is_finite() {
            return Err(Error::ZeroState);
        }
        Ok(Self(amplitudes / C64::new(norm, 0.0)))
    }

    pub fn from_slice(amplitudes: &[C64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(amplitudes))
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(DVector::from_iterator(
            amplitudes.len(),
            amplitudes.iter().map(|&x| C64::new(x, 0.0)),
        ))
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.0
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Self) -> C64 {
        self.0.dotc(&other.0)
    }

    /// Global phase fixed so that the first component with modulus above
    /// `1e-10` is real and positive.
    pub fn canonical_phase(mut self) -> Self {
        if let Some(c) = self.0.iter().find(|c| c.norm() > 1e-10).copied() {
            let phase = c.conj() / c.norm();
            self.0 *= phase;
        }
        self
    }
}

/// An eigenvalue with a unit eigenvector.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: PureState,
}

fn eigen_decompose(h: &HermitianMatrix) -> Result<SymmetricEigen<C64, nalgebra::Dyn>> {
    if h.0.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::ConvergenceFailure("non-finite matrix entry".into()));
    }
    SymmetricEigen::try_new(h.0.clone(), EIGEN_EPS, EIGEN_MAX_SWEEPS)
        .ok_or_else(|| Error::ConvergenceFailure("symmetric QR iteration limit".into()))
}

fn extremal_eigen(h: &HermitianMatrix, largest: bool) -> Result<Eigenpair> {
    let eig = eigen_decompose(h)?;
    // Lowest index wins ties so the choice is reproducible.
    let mut best = 0;
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        let better = if largest {
            v > eig.eigenvalues[best]
        } else {
            v < eig.eigenvalues[best]
        };
        if better {
            best = i;
        }
    }
    let value = eig.eigenvalues[best];
    let vector = PureState::new(eig.eigenvectors.column(best).into_owned())?.canonical_phase();

    let residual = (&h.0 * vector.amplitudes() - vector.amplitudes() * C64::new(value, 0.0)).norm();
    if residual > 1e-9 * (1.0 + value.abs()) {
        return Err(Error::ConvergenceFailure(format!(
            "eigenpair residual {residual:e} for eigenvalue {value}"
        )));
    }
    Ok(Eigenpair { value, vector })
}

/// Largest eigenvalue and a unit eigenvector.
pub fn max_eigen(h: &HermitianMatrix) -> Result<Eigenpair> {
    extremal_eigen(h, true)
}

/// Smallest eigenvalue and a unit eigenvector (the ground state).
pub fn min_eigen(h: &HermitianMatrix) -> Result<Eigenpair> {
    extremal_eigen(h, false)
}

/// All eigenvalues in ascending order.
pub fn eigenvalues(h: &HermitianMatrix) -> Result<Vec<f64>> {
    let mut values: Vec<f64> = eigen_decompose(h)?.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// `(λ_min, λ_max)`
pub fn spectral_range(h: &HermitianMatrix) -> Result<(f64, f64)> {
    let values = eigenvalues(h)?;
    Ok((values[0], values[values.len() - 1]))
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// A validated POVM: positive semi-definite elements summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<HermitianMatrix>,
}

impl Povm {
    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[HermitianMatrix] {
        &self.elements
    }

    /// Rank-one projectors onto an orthonormal basis. Orthonormality itself is
    /// enforced by the completeness check.
    pub fn from_basis(basis: &[PureState]) -> Result<Self> {
        validate_povm(basis.iter().map(HermitianMatrix::projector).collect())
    }

    /// `Ω(u) = Σ u_i E_i`
    pub fn observable(&self, weights: &[f64]) -> Result<HermitianMatrix> {
        check_dim(self.len(), weights.len())?;
        let d = self.dim();
        let mut acc = DMatrix::<C64>::zeros(d, d);
        for (e, &w) in self.elements.iter().zip(weights) {
            if w != 0.0 {
                acc += &e.0 * C64::new(w, 0.0);
            }
        }
        Ok(HermitianMatrix::symmetrized(acc))
    }

    /// Returns a copy with the elements reordered by `order`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            elements: order.iter().map(|&i| self.elements[i].clone()).collect(),
        }
    }
}

/// Checks the POVM conditions after symmetrizing each element.
pub fn validate_povm(elements: Vec<HermitianMatrix>) -> Result<Povm> {
    let first = elements.first().ok_or(Error::Empty("POVM elements"))?;
    let d = first.dim();
    for e in &elements {
        check_dim(d, e.dim())?;
    }
    if elements.len() < 2 {
        return Err(Error::TooFewOutcomes(elements.len()));
    }
    let elements: Vec<HermitianMatrix> = elements
        .into_iter()
        .map(|e| HermitianMatrix::symmetrized(e.0))
        .collect();

    for (index, e) in elements.iter().enumerate() {
        let (lo, _) = spectral_range(e)?;
        if lo < -POSITIVITY_TOL {
            return Err(Error::NotPositive {
                index,
                min_eigenvalue: lo,
            });
        }
    }
    let mut sum = DMatrix::<C64>::zeros(d, d);
    for e in &elements {
        sum += &e.0;
    }
    let deviation = (sum - DMatrix::<C64>::identity(d, d)).norm();
    if deviation.is_nan() || deviation > COMPLETENESS_TOL {
        return Err(Error::NotComplete { deviation });
    }
    Ok(Povm { elements })
}

/// The effective POVM of `N` measurements: every element scaled by `1/N`,
/// concatenated in input order.
pub fn combine_povms(povms: &[Povm]) -> Result<Povm> {
    let first = povms.first().ok_or(Error::Empty("measurement list"))?;
    let d = first.dim();
    for p in povms {
        check_dim(d, p.dim())?;
    }
    if povms.len() == 1 {
        return Ok(first.clone());
    }
    let scale = 1.0 / povms.len() as f64;
    let elements = povms
        .iter()
        .flat_map(|p| p.elements.iter().map(|e| e.scaled(scale)))
        .collect();
    Ok(Povm { elements })
}

/// Born-rule outcome probabilities `⟨ψ|E_μ|ψ⟩`, clamped to `[0, 1]`.
pub fn probabilities(povm: &Povm, state: &PureState) -> Result<Vec<f64>> {
    check_dim(povm.dim(), state.dim())?;
    povm.elements
        .iter()
        .map(|e| e.expectation(state).map(|p| p.clamp(0.0, 1.0)))
        .collect()
}

/// Random POVM from the Ginibre construction.
///
/// Draws `m` complex `d×d` matrices `A_i` with i.i.d. standard complex normal
/// entries (real and imaginary parts `N(0, 1/2)`), forms `G_i = A_i A_i†` and
/// `S = Σ G_i`, and returns `E_i = S^{-1/2} G_i S^{-1/2}`.
///
/// The generator is ChaCha20 seeded with `seed`; entries are drawn matrix by
/// matrix in column-major order, real part first.
pub fn random_haar_povm(d: usize, m: usize, seed: u64) -> Result<Povm> {
    if d < 1 {
        return Err(Error::Empty("Hilbert space"));
    }
    if m < 2 {
        return Err(Error::TooFewOutcomes(m));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let grams: Vec<DMatrix<C64>> = (0..m)
        .map(|_| {
            let a = DMatrix::<C64>::from_fn(d, d, |_, _| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                C64::new(re * scale, im * scale)
            });
            &a * a.adjoint()
        })
        .collect();

    let mut total = DMatrix::<C64>::zeros(d, d);
    for g in &grams {
        total += g;
    }
    let total = HermitianMatrix::symmetrized(total);
    let eig = eigen_decompose(&total)?;
    let inv_sqrt = DVector::from_iterator(d, eig.eigenvalues.iter().map(|&l| C64::new(1.0 / l.sqrt(), 0.0)));
    let v = &eig.eigenvectors;
    let s_inv_sqrt = v * DMatrix::from_diagonal(&inv_sqrt) * v.adjoint();

    let elements = grams
        .into_iter()
        .map(|g| HermitianMatrix::symmetrized(&s_inv_sqrt * g * &s_inv_sqrt))
        .collect();
    validate_povm(elements)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

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
    fn projective_and_trivial_povms_validate() {
        assert_eq!(z_basis().len(), 2);
        let half = HermitianMatrix::identity(2).scaled(0.5);
        assert!(validate_povm(vec![half.clone(), half]).is_ok());
    }

    #[test]
    fn duplicate_projector_is_incomplete() {
        let p = HermitianMatrix::projector(&PureState::basis(2, 0));
        let err = validate_povm(vec![p.clone(), p]).unwrap_err();
        assert!(matches!(err, Error::NotComplete { .. }));
    }

    #[test]
    fn negative_element_rejected() {
        let a = HermitianMatrix::diagonal(&[1.5, 1.0]);
        let b = HermitianMatrix::diagonal(&[-0.5, 0.0]);
        let err = validate_povm(vec![a, b]).unwrap_err();
        assert!(matches!(err, Error::NotPositive { index: 1, .. }));
    }

    #[test]
    fn mixed_dimensions_rejected() {
        let err = validate_povm(vec![HermitianMatrix::identity(2), HermitianMatrix::zeros(3)]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        let err = combine_povms(&[z_basis(), random_haar_povm(3, 2, 0).unwrap()]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn small_asymmetry_is_symmetrized_large_is_rejected() {
        let mut m = DMatrix::<C64>::identity(2, 2);
        m[(0, 1)] = c(1e-12, 0.0);
        let h = HermitianMatrix::new(m.clone()).unwrap();
        assert_eq!(h.matrix()[(0, 1)], h.matrix()[(1, 0)].conj());
        m[(0, 1)] = c(1e-3, 0.0);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn combine_single_is_identity() {
        let z = z_basis();
        assert_eq!(combine_povms(std::slice::from_ref(&z)).unwrap(), z);
    }

    #[test]
    fn combine_scales_and_concatenates() {
        let e = combine_povms(&[z_basis(), x_basis()]).unwrap();
        assert_eq!(e.len(), 4);
        for el in e.elements() {
            assert!((el.trace() - 0.5).abs() < 1e-12);
        }
        assert_eq!(
            e.elements()[0],
            z_basis().elements()[0].scaled(0.5),
            "order follows the input"
        );
    }

    #[test]
    fn born_rule_examples() {
        let p = probabilities(&z_basis(), &PureState::basis(2, 0)).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);
        let e = combine_povms(&[x_basis(), z_basis()]).unwrap();
        let p = probabilities(&e, &PureState::basis(2, 0)).unwrap();
        let expected = [0.25, 0.25, 0.5, 0.0];
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn eigen_examples() {
        let h = HermitianMatrix::diagonal(&[1.0, 3.0, 2.0]);
        let top = max_eigen(&h).unwrap();
        assert!((top.value - 3.0).abs() < 1e-12);
        assert!((top.vector.amplitudes()[1].norm() - 1.0).abs() < 1e-12);
        let bottom = min_eigen(&h).unwrap();
        assert!((bottom.value - 1.0).abs() < 1e-12);
        assert!((bottom.vector.amplitudes()[0].norm() - 1.0).abs() < 1e-12);

        let sx = HermitianMatrix::from_real(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let top = max_eigen(&sx).unwrap();
        assert!((top.value - 1.0).abs() < 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((top.vector.amplitudes()[0] - c(s, 0.0)).norm() < 1e-12);
        assert!((top.vector.amplitudes()[1] - c(s, 0.0)).norm() < 1e-12);

        let sz = HermitianMatrix::diagonal(&[1.0, -1.0]);
        let g = min_eigen(&sz).unwrap();
        assert!((g.value + 1.0).abs() < 1e-12);
        assert!((g.vector.amplitudes()[1].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn haar_povm_is_deterministic_and_valid() {
        let a = random_haar_povm(2, 2, 7).unwrap();
        let b = random_haar_povm(2, 2, 7).unwrap();
        assert_eq!(a, b);
        assert!(validate_povm(a.elements().to_vec()).is_ok());
        assert_ne!(a, random_haar_povm(2, 2, 8).unwrap());
    }

    #[test]
    fn canonical_phase_makes_leading_component_real() {
        let s = PureState::from_slice(&[c(0.0, 0.0), c(0.0, -1.0), c(0.5, 0.5)])
            .unwrap()
            .canonical_phase();
        let lead = s.amplitudes()[1];
        assert!(lead.im.abs() < 1e-15 && lead.re > 0.0);
    }
}
