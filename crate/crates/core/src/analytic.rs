//! Closed-form two-basis bounds on the Shannon entropy sum.

use crate::error::{Error, Result};
use crate::quantum::PureState;

const ORTHONORMAL_TOL: f64 = 1e-10;

/// Largest and second-largest squared overlaps between two bases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapData {
    pub c: f64,
    pub c2: f64,
    /// `(1 + √c) / 2`
    pub b: f64,
}

impl OverlapData {
    pub fn new(c: f64, c2: f64) -> Self {
        Self {
            c,
            c2,
            b: (1.0 + c.sqrt()) / 2.0,
        }
    }
}

/// Value of a refined bound; `degenerate` is set when `c2 = 0` and the
/// Maassen–Uffink value was returned instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedBound {
    pub value: f64,
    pub degenerate: bool,
}

pub fn check_orthonormal(basis: &[PureState]) -> Result<()> {
    let mut worst: f64 = 0.0;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a.inner(b).norm() - target).abs());
        }
    }
    if basis.is_empty() || basis.len() != basis[0].dim() || worst > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal { deviation: worst });
    }
    Ok(())
}

/// `c` is the largest of the `d²` values `|⟨a_i|b_j⟩|²`; `c2` the second
/// element of the same multiset sorted in descending order, so ties give
/// `c2 = c`.
pub fn overlaps(a: &[PureState], b: &[PureState]) -> Result<OverlapData> {
    check_orthonormal(a)?;
    check_orthonormal(b)?;
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let mut values: Vec<f64> = a
        .iter()
        .flat_map(|x| b.iter().map(move |y| x.inner(y).norm_sqr()))
        .collect();
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(OverlapData::new(values[0], values[1]))
}

/// `-ln c`
pub fn mu_bound(ov: &OverlapData) -> f64 {
    -ov.c.ln()
}

/// `ln(1/c) + ½(1 - √c) ln(c/c2)`
pub fn cp_bound(ov: &OverlapData) -> RefinedBound {
    if ov.c2 <= 0.0 {
        return degenerate(ov);
    }
    RefinedBound {
        value: -ov.c.ln() + 0.5 * (1.0 - ov.c.sqrt()) * (ov.c / ov.c2).ln(),
        degenerate: false,
    }
}

/// `ln(1/c) - ln(b² + (c2/c)(1 - b²))`
pub fn rpz_bound(ov: &OverlapData) -> RefinedBound {
    if ov.c2 <= 0.0 {
        return degenerate(ov);
    }
    let b2 = ov.b * ov.b;
    RefinedBound {
        value: -ov.c.ln() - (b2 + ov.c2 / ov.c * (1.0 - b2)).ln(),
        degenerate: false,
    }
}

fn degenerate(ov: &OverlapData) -> RefinedBound {
    RefinedBound {
        value: mu_bound(ov),
        degenerate: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

    fn z() -> Vec<PureState> {
        vec![PureState::basis(2, 0), PureState::basis(2, 1)]
    }

    fn x() -> Vec<PureState> {
        let s = FRAC_1_SQRT_2;
        vec![
            PureState::from_real(&[s, s]).unwrap(),
            PureState::from_real(&[s, -s]).unwrap(),
        ]
    }

    #[test]
    fn identical_bases() {
        let ov = overlaps(&z(), &z()).unwrap();
        assert_eq!((ov.c, ov.c2), (1.0, 1.0));
        assert_eq!(mu_bound(&ov), 0.0);
        assert_eq!(cp_bound(&ov).value, 0.0);
        assert!(rpz_bound(&ov).value.abs() < 1e-15);
    }

    #[test]
    fn qubit_mubs() {
        let ov = overlaps(&z(), &x()).unwrap();
        assert!((ov.c - 0.5).abs() < 1e-15 && (ov.c2 - 0.5).abs() < 1e-15);
        for q in [mu_bound(&ov), cp_bound(&ov).value, rpz_bound(&ov).value] {
            assert!((q - LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn qutrit_mu_value() {
        assert!((mu_bound(&OverlapData::new(1.0 / 3.0, 1.0 / 3.0)) - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn zero_second_overlap_falls_back() {
        let ov = OverlapData::new(0.8, 0.0);
        let cp = cp_bound(&ov);
        assert!(cp.degenerate);
        assert_eq!(cp.value, mu_bound(&ov));
        assert!(rpz_bound(&ov).degenerate);
    }

    #[test]
    fn rejects_non_orthonormal() {
        let bad = vec![PureState::basis(2, 0), PureState::from_real(&[1.0, 1.0]).unwrap()];
        assert!(matches!(overlaps(&bad, &z()), Err(Error::NotOrthonormal { .. })));
    }
}
