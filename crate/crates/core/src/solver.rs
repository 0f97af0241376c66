//! Outer-approximation solver for the minimal entropy of a POVM.
//!
//! Each round enumerates the vertices of the current polytope, takes the
//! entropy-minimizing vertex as a lower bound, evaluates the ground state of
//! `Ω(∇H)` there as an upper bound, and cuts the vertex off with the
//! supporting half-space in direction `-∇H`.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::entropy::EntropySpec;
use crate::error::{Error, Result};
use crate::geometry::{build_affine_model, AffineModel, DEFAULT_RANK_TOLERANCE};
use crate::polytope::{initial_polytope, CutOutcome, HalfSpace, Polytope, DEFAULT_VERTEX_LIMIT};
use crate::quantum::{max_eigen, min_eigen, probabilities, Povm, PureState};

/// A cut whose violation at the current vertex is below this is useless.
pub const STALL_VIOLATION: f64 = 1e-12;
/// Minimal improvement of the best lower bound that counts as progress.
pub const STALL_IMPROVEMENT: f64 = 1e-14;
/// Consecutive non-improving rounds before the run is declared stalled.
pub const STALL_WINDOW: usize = 10;
/// A round only counts as non-improving when its cut also removes less than
/// this; symmetric problems keep `h_minus` flat for many productive rounds.
pub const STAGNANT_CUT_DEPTH: f64 = 1e-9;

const SIMPLEX_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub use_pair_constraints: bool,
    pub vertex_limit: usize,
    pub entropy: EntropySpec,
    pub rank_tolerance: f64,
    /// Number of random directions probed for extra upper bounds; 0 disables.
    pub multi_start: usize,
    pub seed: u64,
    pub stall_window: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            max_iterations: 500,
            use_pair_constraints: true,
            vertex_limit: DEFAULT_VERTEX_LIMIT,
            entropy: EntropySpec::shannon(),
            rank_tolerance: DEFAULT_RANK_TOLERANCE,
            multi_start: 0,
            seed: 0,
            stall_window: STALL_WINDOW,
        }
    }
}

impl SolverConfig {
    pub fn with_entropy(entropy: EntropySpec) -> Self {
        Self {
            entropy,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon <= 0.0 || !self.epsilon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if self.vertex_limit == 0 {
            return Err(Error::InvalidConfig("vertex_limit must be at least 1".into()));
        }
        if self.stall_window == 0 {
            return Err(Error::InvalidConfig("stall_window must be at least 1".into()));
        }
        if self.rank_tolerance.is_nan() || self.rank_tolerance <= 0.0 {
            return Err(Error::InvalidConfig("rank_tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Gap reached epsilon.
    Converged,
    /// Reduced rank 0: the entropy is state independent and known exactly.
    Exact,
    MaxIterations,
    /// The cut no longer separates, or the lower bound stopped improving.
    Stalled,
}

impl Termination {
    pub fn is_converged(self) -> bool {
        matches!(self, Termination::Converged | Termination::Exact)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::Exact => "exact",
            Termination::MaxIterations => "max_iterations",
            Termination::Stalled => "stalled",
        }
    }
}

/// One round of the loop. Entropies are in the family of the run.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub index: usize,
    /// Minimum over the vertices of this round's polytope.
    pub h_minus: f64,
    /// Entropy of this round's ground state.
    pub h_plus: f64,
    /// `h_plus - h_minus`
    pub gap: f64,
    pub best_h_minus: f64,
    pub best_h_plus: f64,
    pub optimal_vertex_z: Vec<f64>,
    pub witness_probabilities: Vec<f64>,
    /// Unit normal of the cut added after this round.
    pub cut_normal: Option<Vec<f64>>,
    pub cut_offset: Option<f64>,
    /// How far the vertex lies outside the new cut (normalized).
    pub cut_violation: Option<f64>,
    pub vertex_count: usize,
}

#[derive(Debug, Clone)]
pub struct BoundCertificate {
    pub config: SolverConfig,
    pub iterations: Vec<IterationRecord>,
    pub final_h_minus: f64,
    pub final_h_plus: f64,
    pub converged: bool,
    pub termination: Termination,
    pub witness_state: PureState,
    pub witness_probabilities: Vec<f64>,
    pub reduced_rank: usize,
    pub halfspace_count: usize,
}

impl BoundCertificate {
    pub fn gap(&self) -> f64 {
        self.final_h_plus - self.final_h_minus
    }

    pub fn vertex_count_max(&self) -> usize {
        self.iterations.iter().map(|r| r.vertex_count).max().unwrap_or(0)
    }
}

/// Probabilities at a polytope point, with rounding-level negatives set to
/// zero and renormalized only when the mass drifted by more than `1e-8`.
pub fn clamped_probabilities(model: &AffineModel, z: &[f64]) -> Vec<f64> {
    let mut p: Vec<f64> = model.z_to_probability(z).into_iter().map(|x| x.max(0.0)).collect();
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL && total > 0.0 {
        p.iter_mut().for_each(|x| *x /= total);
    }
    p
}

/// Vertex of minimal entropy, lowest index on ties.
pub fn lower_bound_step(poly: &mut Polytope, model: &AffineModel, spec: &EntropySpec) -> Result<(Vec<f64>, f64)> {
    let vertices = poly.enumerate_vertices()?;
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in vertices.iter().enumerate() {
        let h = spec.value_clamped(&clamped_probabilities(model, v.point()));
        if best.is_none_or(|(_, b)| h < b) {
            best = Some((i, h));
        }
    }
    let (i, h) = best.ok_or(Error::Unbounded)?;
    Ok((vertices[i].point().to_vec(), h))
}

/// Ground state of `Ω(∇H(p(z_star)))` and the entropy of its distribution.
pub fn upper_bound_step(model: &AffineModel, z_star: &[f64], spec: &EntropySpec) -> Result<(PureState, f64)> {
    let g = spec.gradient_clamped(&clamped_probabilities(model, z_star));
    let ground = min_eigen(&model.povm().observable(&g)?)?;
    let p = probabilities(model.povm(), &ground.vector)?;
    Ok((ground.vector, spec.value_clamped(&p)))
}

/// Supporting half-space `-(gᵀQ) z <= λ_max(-Ω(g)) + gᵀs`.
pub fn gradient_cut(model: &AffineModel, g: &[f64]) -> Result<Option<HalfSpace>> {
    let neg: Vec<f64> = g.iter().map(|x| -x).collect();
    let h_val = max_eigen(&model.povm().observable(&neg)?)?.value;
    let q = model.basis();
    let normal: Vec<f64> = (0..q.ncols())
        .map(|c| -(0..q.nrows()).map(|i| g[i] * q[(i, c)]).sum::<f64>())
        .collect();
    let gs: f64 = g.iter().zip(model.center().iter()).map(|(a, b)| a * b).sum();
    Ok(HalfSpace::new(normal, h_val + gs))
}

/// Brackets `h(E) = min_ψ H(p(ψ))`.
pub fn minimize_entropy(povm: &Povm, config: &SolverConfig) -> Result<BoundCertificate> {
    Ok(solve(povm, config)?.0)
}

/// As [`minimize_entropy`], also returning the final polytope (`None` when
/// the reduced rank is 0).
pub fn solve(povm: &Povm, config: &SolverConfig) -> Result<(BoundCertificate, Option<Polytope>)> {
    config.validate()?;
    let target = config.entropy;
    let objective = target.objective();

    let model = match build_affine_model(povm, config.rank_tolerance) {
        Ok(m) => m,
        Err(Error::DegenerateMeasurement) => return Ok((exact_certificate(povm, config)?, None)),
        Err(e) => return Err(e),
    };
    let mut poly = initial_polytope(&model, config.use_pair_constraints)?.with_vertex_limit(config.vertex_limit);

    let mut best_minus = f64::NEG_INFINITY;
    let mut best_plus = f64::INFINITY;
    let mut witness: Option<(PureState, Vec<f64>)> = None;
    let offer =
        |state: PureState, h: f64, best_plus: &mut f64, witness: &mut Option<(PureState, Vec<f64>)>| -> Result<()> {
            if h < *best_plus {
                *best_plus = h;
                let p = probabilities(povm, &state)?;
                *witness = Some((state, p));
            }
            Ok(())
        };

    if config.multi_start > 0 {
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        for _ in 0..config.multi_start {
            let u: Vec<f64> = (0..povm.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let state = min_eigen(&povm.observable(&u)?)?.vector;
            let h = objective.value_clamped(&probabilities(povm, &state)?);
            offer(state, h, &mut best_plus, &mut witness)?;
        }
    }

    let mut records = Vec::new();
    let mut stagnant = 0usize;
    let mut termination = Termination::MaxIterations;
    for index in 0..config.max_iterations {
        let (z_star, h_minus) = lower_bound_step(&mut poly, &model, &objective)?;
        let vertex_count = poly.enumerate_vertices()?.len();
        let (state, h_plus) = upper_bound_step(&model, &z_star, &objective)?;
        offer(state, h_plus, &mut best_plus, &mut witness)?;

        let improved = best_minus == f64::NEG_INFINITY || h_minus > best_minus + STALL_IMPROVEMENT;
        // Rounding in p = s + Qz can put a vertex value a few ulps above an
        // attained one; an attained value always caps the lower bound.
        best_minus = best_minus.max(h_minus).min(best_plus);
        let (lo, hi) = (target.from_objective(best_minus), target.from_objective(best_plus));
        let mut record = IterationRecord {
            index,
            h_minus: target.from_objective(h_minus),
            h_plus: target.from_objective(h_plus),
            gap: target.from_objective(h_plus) - target.from_objective(h_minus),
            best_h_minus: lo,
            best_h_plus: hi,
            optimal_vertex_z: z_star.clone(),
            witness_probabilities: witness.as_ref().map(|w| w.1.clone()).unwrap_or_default(),
            cut_normal: None,
            cut_offset: None,
            cut_violation: None,
            vertex_count,
        };

        if hi - lo <= config.epsilon {
            records.push(record);
            termination = Termination::Converged;
            break;
        }
        if stagnant >= config.stall_window {
            records.push(record);
            termination = Termination::Stalled;
            break;
        }

        let g = objective.gradient_clamped(&clamped_probabilities(&model, &z_star));
        let Some(cut) = gradient_cut(&model, &g)? else {
            records.push(record);
            termination = Termination::Stalled;
            break;
        };
        let violation = -cut.slack(&z_star);
        record.cut_normal = Some(cut.normal().to_vec());
        record.cut_offset = Some(cut.offset());
        record.cut_violation = Some(violation);
        records.push(record);
        if violation < STALL_VIOLATION || poly.add_cut(cut)? == CutOutcome::Duplicate {
            termination = Termination::Stalled;
            break;
        }
        if improved || violation >= STAGNANT_CUT_DEPTH {
            stagnant = 0;
        } else {
            stagnant += 1;
        }
    }

    let (witness_state, witness_probabilities) = witness.expect("at least one upper bound evaluated");
    let cert = BoundCertificate {
        config: *config,
        iterations: records,
        final_h_minus: target.from_objective(best_minus),
        final_h_plus: target.from_objective(best_plus),
        converged: termination.is_converged(),
        termination,
        witness_state,
        witness_probabilities,
        reduced_rank: model.reduced_rank(),
        halfspace_count: poly.halfspaces().len(),
    };
    Ok((cert, Some(poly)))
}

fn exact_certificate(povm: &Povm, config: &SolverConfig) -> Result<BoundCertificate> {
    let state = PureState::basis(povm.dim(), 0);
    let p = probabilities(povm, &state)?;
    let h = config.entropy.value_clamped(&p);
    Ok(BoundCertificate {
        config: *config,
        iterations: Vec::new(),
        final_h_minus: h,
        final_h_plus: h,
        converged: true,
        termination: Termination::Exact,
        witness_state: state,
        witness_probabilities: p,
        reduced_rank: 0,
        halfspace_count: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{combine_povms, HermitianMatrix};
    use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

    fn z_basis() -> Povm {
        Povm::from_basis(&[PureState::basis(2, 0), PureState::basis(2, 1)]).unwrap()
    }

    fn x_basis() -> Povm {
        let s = FRAC_1_SQRT_2;
        Povm::from_basis(&[
            PureState::from_real(&[s, s]).unwrap(),
            PureState::from_real(&[s, -s]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn single_pvm_has_zero_entropy() {
        let cert = minimize_entropy(&z_basis(), &SolverConfig::default()).unwrap();
        assert!(cert.converged);
        assert_eq!(cert.iterations.len(), 1);
        assert!(cert.final_h_minus.abs() < 1e-9 && cert.final_h_plus.abs() < 1e-9);
        let p = &cert.witness_probabilities;
        assert!((p[0] - 1.0).abs() < 1e-9 || (p[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn qubit_mub_shannon() {
        let e = combine_povms(&[z_basis(), x_basis()]).unwrap();
        let cert = minimize_entropy(&e, &SolverConfig::default()).unwrap();
        assert!(cert.converged, "{:?}", cert.termination);
        let h = 1.5 * LN_2;
        assert!(cert.final_h_minus <= h + 1e-9 && h <= cert.final_h_plus + 1e-9);
        assert!(cert.gap() <= 1e-6);
        for r in &cert.iterations {
            assert!(r.h_minus <= r.h_plus + 1e-9);
            assert!((r.gap - (r.h_plus - r.h_minus)).abs() < 1e-15);
        }
    }

    #[test]
    fn trivial_povm_is_exact() {
        let half = HermitianMatrix::identity(2).scaled(0.5);
        let povm = crate::quantum::validate_povm(vec![half.clone(), half]).unwrap();
        let cert = minimize_entropy(&povm, &SolverConfig::default()).unwrap();
        assert_eq!(cert.termination, Termination::Exact);
        assert!((cert.final_h_minus - LN_2).abs() < 1e-15);
        assert_eq!(cert.gap(), 0.0);
    }

    #[test]
    fn best_bounds_are_monotone() {
        let povm = crate::quantum::random_haar_povm(3, 4, 2).unwrap();
        let cert = minimize_entropy(&povm, &SolverConfig::default()).unwrap();
        for w in cert.iterations.windows(2) {
            assert!(w[1].best_h_minus >= w[0].best_h_minus);
            assert!(w[1].best_h_plus <= w[0].best_h_plus);
        }
        let last = cert.iterations.last().unwrap();
        assert_eq!(last.best_h_minus, cert.final_h_minus);
        assert_eq!(last.best_h_plus, cert.final_h_plus);
        let max_minus = cert.iterations.iter().map(|r| r.h_minus).fold(f64::MIN, f64::max);
        assert_eq!(max_minus, cert.final_h_minus);
    }

    #[test]
    fn lower_bound_tie_breaks_to_lowest_index() {
        let e = combine_povms(&[z_basis(), x_basis()]).unwrap();
        let model = build_affine_model(&e, DEFAULT_RANK_TOLERANCE).unwrap();
        let mut poly = initial_polytope(&model, false).unwrap();
        let (z, h) = lower_bound_step(&mut poly, &model, &EntropySpec::shannon()).unwrap();
        let verts = poly.vertices().unwrap();
        let spec = EntropySpec::shannon();
        let values: Vec<f64> = verts
            .iter()
            .map(|v| spec.value_clamped(&clamped_probabilities(&model, v)))
            .collect();
        let first = values.iter().position(|&v| v == h).unwrap();
        assert_eq!(verts[first], z);
        assert!(values.iter().all(|&v| v >= h));
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = SolverConfig {
            epsilon: 0.0,
            ..SolverConfig::default()
        };
        assert!(matches!(
            minimize_entropy(&z_basis(), &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }
}
