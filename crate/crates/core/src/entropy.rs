//! Shannon, Tsallis and Rényi entropies (in nats) with gradients, and the
//! conversion from the minimal entropy of an effective POVM to uncertainty
//! bounds for the original measurements.

use crate::error::{Error, Result};

pub const DEFAULT_CLAMP_EPSILON: f64 = 1e-12;

/// Tolerated negative mass per component before a distribution is rejected.
const NEGATIVE_TOL: f64 = 1e-10;
/// Tolerated deviation of the total mass from one.
const NORMALIZATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntropyFamily {
    Shannon,
    Tsallis(f64),
    Renyi(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropySpec {
    pub family: EntropyFamily,
    /// Floor applied to probabilities before differentiation.
    pub clamp_epsilon: f64,
}

impl EntropySpec {
    pub fn shannon() -> Self {
        Self {
            family: EntropyFamily::Shannon,
            clamp_epsilon: DEFAULT_CLAMP_EPSILON,
        }
    }

    pub fn tsallis(alpha: f64) -> Result<Self> {
        Self::new(EntropyFamily::Tsallis(alpha), DEFAULT_CLAMP_EPSILON)
    }

    pub fn renyi(alpha: f64) -> Result<Self> {
        Self::new(EntropyFamily::Renyi(alpha), DEFAULT_CLAMP_EPSILON)
    }

    pub fn new(family: EntropyFamily, clamp_epsilon: f64) -> Result<Self> {
        if let EntropyFamily::Tsallis(a) | EntropyFamily::Renyi(a) = family {
            if a.is_nan() || a <= 0.0 || !a.is_finite() || a == 1.0 {
                return Err(Error::InvalidEntropy(format!(
                    "alpha must lie in (0,1) or (1,inf), got {a}"
                )));
            }
        }
        if !(clamp_epsilon > 0.0 && clamp_epsilon <= 1e-6) {
            return Err(Error::InvalidEntropy(format!(
                "clamp epsilon must lie in (0, 1e-6], got {clamp_epsilon}"
            )));
        }
        Ok(Self { family, clamp_epsilon })
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.family {
            EntropyFamily::Shannon => None,
            EntropyFamily::Tsallis(a) | EntropyFamily::Renyi(a) => Some(a),
        }
    }

    /// Entropy of a probability vector. Entries down to `-1e-10` are treated
    /// as zero; the total must be within `1e-8` of one.
    pub fn value(&self, p: &[f64]) -> Result<f64> {
        check_distribution(p)?;
        Ok(self.value_clamped(p))
    }

    /// Entropy with negative entries clamped to zero and no normalization
    /// check. Used on polytope vertices, which may leave the simplex.
    pub fn value_clamped(&self, p: &[f64]) -> f64 {
        match self.family {
            EntropyFamily::Shannon => -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>(),
            EntropyFamily::Tsallis(a) => (power_sum(p, a) - 1.0) / (1.0 - a),
            EntropyFamily::Renyi(a) => power_sum(p, a).ln() / (1.0 - a),
        }
    }

    /// Componentwise gradient, with every entry floored at `clamp_epsilon`.
    pub fn gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        check_distribution(p)?;
        Ok(self.gradient_clamped(p))
    }

    pub fn gradient_clamped(&self, p: &[f64]) -> Vec<f64> {
        let floored = p.iter().map(|&x| x.max(self.clamp_epsilon));
        match self.family {
            EntropyFamily::Shannon => floored.map(|x| -(1.0 + x.ln())).collect(),
            EntropyFamily::Tsallis(a) => floored.map(|x| a * x.powf(a - 1.0) / (1.0 - a)).collect(),
            EntropyFamily::Renyi(a) => {
                let total: f64 = p.iter().map(|&x| x.max(self.clamp_epsilon).powf(a)).sum();
                floored.map(|x| a * x.powf(a - 1.0) / ((1.0 - a) * total)).collect()
            }
        }
    }

    /// The concave function the solver actually minimizes. Rényi entropy is
    /// not concave for `α > 1`, so Rényi runs minimize the Tsallis entropy of
    /// the same order; the two are related by a strictly increasing map.
    pub fn objective(&self) -> Self {
        match self.family {
            EntropyFamily::Renyi(a) => Self {
                family: EntropyFamily::Tsallis(a),
                ..*self
            },
            _ => *self,
        }
    }

    /// Maps a value of [`EntropySpec::objective`] back to this family:
    /// `H^R = ln(1 + (1-α) H^T) / (1-α)`.
    pub fn from_objective(&self, value: f64) -> f64 {
        match self.family {
            EntropyFamily::Renyi(a) => {
                let arg = 1.0 + (1.0 - a) * value;
                arg.max(f64::MIN_POSITIVE).ln() / (1.0 - a)
            }
            _ => value,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            EntropyFamily::Shannon => "shannon",
            EntropyFamily::Tsallis(_) => "tsallis",
            EntropyFamily::Renyi(_) => "renyi",
        }
    }

    /// Whether the values carry a logarithmic unit (nats vs bits).
    pub fn is_logarithmic(&self) -> bool {
        !matches!(self.family, EntropyFamily::Tsallis(_))
    }
}

fn power_sum(p: &[f64], a: f64) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| x.powf(a)).sum()
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution("empty vector".into()));
    }
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < -NEGATIVE_TOL) {
        return Err(Error::InvalidDistribution(format!("entry {x}")));
    }
    let total: f64 = p.iter().map(|x| x.max(0.0)).sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidDistribution(format!("total mass {total}")));
    }
    Ok(())
}

/// Uncertainty bounds derived from the minimal entropy `h(E)` of the
/// effective POVM built from `n_measurements` measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EurBounds {
    pub h_min: f64,
    pub n_measurements: usize,
    pub alpha: Option<f64>,
    /// Bound on `Σ_i H^T_α(p_i)`; Tsallis runs only.
    pub q_tsallis: Option<f64>,
    /// Bound on the Rényi entropy of the concatenated distribution; Rényi runs only.
    pub q_renyi: Option<f64>,
    /// Bound on `Σ_i H(p_i)`; Shannon runs only.
    pub q_shannon_sum: Option<f64>,
}

impl EurBounds {
    /// The bound that matches the entropy family of the run.
    pub fn headline(&self) -> f64 {
        self.q_tsallis
            .or(self.q_renyi)
            .or(self.q_shannon_sum)
            .expect("exactly one family-specific bound is set")
    }
}

/// `q^T = N^α h - (N - N^α)/(1-α)`, `q^R = h`, and the Shannon limit
/// `q = N h - N ln N`.
pub fn eur_bounds_from_hmin(h_min: f64, n: usize, spec: &EntropySpec) -> EurBounds {
    let nf = n as f64;
    let mut out = EurBounds {
        h_min,
        n_measurements: n,
        alpha: spec.alpha(),
        q_tsallis: None,
        q_renyi: None,
        q_shannon_sum: None,
    };
    match spec.family {
        EntropyFamily::Shannon => out.q_shannon_sum = Some(nf * h_min - nf * nf.ln()),
        EntropyFamily::Tsallis(a) => {
            let na = nf.powf(a);
            out.q_tsallis = Some(na * h_min - (nf - na) / (1.0 - a));
        }
        EntropyFamily::Renyi(_) => out.q_renyi = Some(h_min),
    }
    out
}

/// `|Σ_i H^T_α(p_i) - (N^α H^T_α(q) - (N - N^α)/(1-α))|` where `q` is the
/// scaled concatenation of the `p_i`.
pub fn tsallis_concat_identity_check(distributions: &[Vec<f64>], alpha: f64) -> Result<f64> {
    let spec = EntropySpec::tsallis(alpha)?;
    let n = distributions.len();
    if n == 0 {
        return Err(Error::Empty("distribution list"));
    }
    let mut sum = 0.0;
    for p in distributions {
        sum += spec.value(p)?;
    }
    let scale = 1.0 / n as f64;
    let concat: Vec<f64> = distributions.iter().flatten().map(|x| x * scale).collect();
    let combined = spec.value(&concat)?;
    let rhs = eur_bounds_from_hmin(combined, n, &spec).q_tsallis.expect("tsallis run");
    Ok((sum - rhs).abs())
}
