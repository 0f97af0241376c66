//! Generalized Gell-Mann generators of SU(d).
//!
//! Ordering is fixed: all symmetric generators `S_jk` for `j < k` in
//! lexicographic order, then the antisymmetric `A_jk` in the same order, then
//! the diagonal `D_l` for `l = 1..d`. With this convention `d = 2` yields
//! `(σx, σy, σz)`.
//!
//! * `S_jk = |j⟩⟨k| + |k⟩⟨j|`
//! * `A_jk = -i|j⟩⟨k| + i|k⟩⟨j|`
//! * `D_l = sqrt(2 / (l (l+1))) (Σ_{j<l} |j⟩⟨j| - l |l⟩⟨l|)`
//!
//! All satisfy `Tr[π_μ π_ν] = 2 δ_μν`.

use nalgebra::DMatrix;

use crate::quantum::{HermitianMatrix, C64};

/// One generator, stored by structure rather than as a dense matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Symmetric(usize, usize),
    Antisymmetric(usize, usize),
    Diagonal(usize),
}

impl Generator {
    /// `Tr[E π]` for a Hermitian `E`, touching at most `d` entries.
    pub fn trace_with(&self, e: &DMatrix<C64>) -> f64 {
        match *self {
            // E_kj + E_jk = 2 Re E_jk
            Generator::Symmetric(j, k) => 2.0 * e[(j, k)].re,
            // i (E_jk - E_kj) = -2 Im E_jk
            Generator::Antisymmetric(j, k) => -2.0 * e[(j, k)].im,
            Generator::Diagonal(l) => {
                let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
                let head: f64 = (0..l).map(|j| e[(j, j)].re).sum();
                norm * (head - l as f64 * e[(l, l)].re)
            }
        }
    }

    pub fn to_matrix(&self, d: usize) -> HermitianMatrix {
        let mut m = DMatrix::<C64>::zeros(d, d);
        match *self {
            Generator::Symmetric(j, k) => {
                m[(j, k)] = C64::new(1.0, 0.0);
                m[(k, j)] = C64::new(1.0, 0.0);
            }
            Generator::Antisymmetric(j, k) => {
                m[(j, k)] = C64::new(0.0, -1.0);
                m[(k, j)] = C64::new(0.0, 1.0);
            }
            Generator::Diagonal(l) => {
                let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
                for j in 0..l {
                    m[(j, j)] = C64::new(norm, 0.0);
                }
                m[(l, l)] = C64::new(-norm * l as f64, 0.0);
            }
        }
        HermitianMatrix::new(m).expect("generator is Hermitian by construction")
    }
}

/// The `d² - 1` generator descriptors in the documented order.
pub fn generators(d: usize) -> Vec<Generator> {
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|j| (j + 1..d).map(move |k| (j, k))).collect();
    pairs
        .iter()
        .map(|&(j, k)| Generator::Symmetric(j, k))
        .chain(pairs.iter().map(|&(j, k)| Generator::Antisymmetric(j, k)))
        .chain((1..d).map(Generator::Diagonal))
        .collect()
}

/// Dense generator matrices.
#[derive(Debug, Clone)]
pub struct GeneratorBasis {
    pub dim: usize,
    pub generators: Vec<HermitianMatrix>,
}

/// Dense generalized Gell-Mann basis. Intended for small `d`; the affine
/// model uses [`generators`] directly.
pub fn gell_mann_basis(d: usize) -> GeneratorBasis {
    assert!(d >= 2, "SU(d) generators need d >= 2");
    GeneratorBasis {
        dim: d,
        generators: generators(d).iter().map(|g| g.to_matrix(d)).collect(),
    }
}
