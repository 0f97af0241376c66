//! Qutrit measurement families, parameter sweeps and steering thresholds.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::analytic::{cp_bound, mu_bound, overlaps, rpz_bound};
use crate::entropy::{eur_bounds_from_hmin, EntropySpec};
use crate::error::{Error, Result};
use crate::quantum::{combine_povms, Povm, PureState, C64};
use crate::solver::{minimize_entropy, BoundCertificate, SolverConfig, Termination};

/// Two qutrit bases (`M2`, parameter `θ`) or three (`M3`, parameters `a, φ`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementFamily {
    M2,
    M3,
}

impl MeasurementFamily {
    pub fn dim(self) -> usize {
        3
    }

    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            MeasurementFamily::M2 => &["theta"],
            MeasurementFamily::M3 => &["a", "phi"],
        }
    }

    pub fn measurement_count(self) -> usize {
        match self {
            MeasurementFamily::M2 => 2,
            MeasurementFamily::M3 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MeasurementFamily::M2 => "M2",
            MeasurementFamily::M3 => "M3",
        }
    }

    /// 61 values of `θ` spanning `[0, π]` for `M2`; a 31 × 31 grid with
    /// `a ∈ [0, 1]` and `φ = 2πk/31` for `M3`.
    pub fn default_grid(self) -> Vec<Vec<f64>> {
        match self {
            MeasurementFamily::M2 => linspace(0.0, PI, 61).into_iter().map(|t| vec![t]).collect(),
            MeasurementFamily::M3 => {
                let phis: Vec<f64> = (0..31).map(|k| TAU * k as f64 / 31.0).collect();
                linspace(0.0, 1.0, 31)
                    .into_iter()
                    .flat_map(|a| phis.iter().map(move |&phi| vec![a, phi]))
                    .collect()
            }
        }
    }
}

impl std::str::FromStr for MeasurementFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "M2" => Ok(MeasurementFamily::M2),
            "M3" => Ok(MeasurementFamily::M3),
            other => Err(Error::InvalidConfig(format!("unknown measurement family {other:?}"))),
        }
    }
}

/// `n` evenly spaced values from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| start + (end - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn in_range(name: &'static str, value: f64, lo: f64, hi: f64, closed: bool, range: &'static str) -> Result<()> {
    let ok = value >= lo && if closed { value <= hi } else { value < hi };
    if ok {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value, range })
    }
}

fn real_state(v: &[f64]) -> PureState {
    PureState::from_real(v).expect("nonzero").canonical_phase()
}

/// The bases of a family at one parameter point, each vector with its first
/// nonzero component real and positive.
pub fn build_family_bases(family: MeasurementFamily, point: &[f64]) -> Result<Vec<Vec<PureState>>> {
    let expected = family.parameter_names().len();
    if point.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: point.len(),
        });
    }
    match family {
        MeasurementFamily::M2 => {
            let theta = point[0];
            in_range("theta", theta, 0.0, TAU, false, "[0, 2π)")?;
            let (s, c) = theta.sin_cos();
            let first = vec![
                real_state(&[1.0, 0.0, 0.0]),
                real_state(&[0.0, c, -s]),
                real_state(&[0.0, s, c]),
            ];
            let (r2, r3) = (2f64.sqrt(), 3f64.sqrt());
            let second = vec![
                real_state(&[r2, r3, 1.0]),
                real_state(&[r2, 0.0, -2.0]),
                real_state(&[r2, -r3, 1.0]),
            ];
            Ok(vec![first, second])
        }
        MeasurementFamily::M3 => {
            let (a, phi) = (point[0], point[1]);
            in_range("a", a, 0.0, 1.0, true, "[0, 1]")?;
            in_range("phi", phi, 0.0, TAU, false, "[0, 2π)")?;
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let computational = (0..3).map(|i| PureState::basis(3, i)).collect();
            let second = vec![
                real_state(&[h, 0.0, -h]),
                real_state(&[0.0, 1.0, 0.0]),
                real_state(&[h, 0.0, h]),
            ];
            let phase = C64::from_polar(1.0, phi);
            let (sa, sb) = (a.sqrt(), (1.0 - a).sqrt());
            let zero = C64::new(0.0, 0.0);
            let third = vec![
                PureState::from_slice(&[C64::new(sa, 0.0), phase * sb, zero])?.canonical_phase(),
                PureState::from_slice(&[C64::new(sb, 0.0), -phase * sa, zero])?.canonical_phase(),
                PureState::basis(3, 2),
            ];
            Ok(vec![computational, second, third])
        }
    }
}

/// The effective POVM of a list of bases.
pub fn combined_povm(bases: &[Vec<PureState>]) -> Result<Povm> {
    let pvms = bases.iter().map(|b| Povm::from_basis(b)).collect::<Result<Vec<_>>>()?;
    combine_povms(&pvms)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticBounds {
    pub c: f64,
    pub c2: f64,
    pub q_mu: f64,
    pub q_cp: f64,
    pub q_rpz: f64,
    /// Set when `c2 = 0` and the refined bounds fell back to `q_mu`.
    pub degenerate: bool,
}

pub fn analytic_bounds(a: &[PureState], b: &[PureState]) -> Result<AnalyticBounds> {
    let ov = overlaps(a, b)?;
    let (cp, rpz) = (cp_bound(&ov), rpz_bound(&ov));
    Ok(AnalyticBounds {
        c: ov.c,
        c2: ov.c2,
        q_mu: mu_bound(&ov),
        q_cp: cp.value,
        q_rpz: rpz.value,
        degenerate: cp.degenerate || rpz.degenerate,
    })
}

/// Certificate summary for one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointBounds {
    /// The family-specific uncertainty bound computed from the certified
    /// lower bound `h_minus`.
    pub q_optimal: f64,
    /// The same bound computed from `h_plus`; the optimum lies in between.
    pub q_upper: f64,
    pub h_minus: f64,
    pub h_plus: f64,
    pub gap: f64,
    pub iterations: usize,
    pub vertex_count_max: usize,
    pub converged: bool,
    pub termination: Termination,
    pub analytic: Option<AnalyticBounds>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub parameters: Vec<f64>,
    /// Per-point failures are kept as messages so the sweep can continue.
    pub outcome: std::result::Result<PointBounds, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub family: MeasurementFamily,
    pub entropy: EntropySpec,
    pub points: Vec<SweepPoint>,
}

/// Solves one grid point and converts the certificate into uncertainty bounds.
pub fn solve_point(
    family: MeasurementFamily,
    point: &[f64],
    config: &SolverConfig,
) -> Result<(PointBounds, BoundCertificate)> {
    let bases = build_family_bases(family, point)?;
    let povm = combined_povm(&bases)?;
    let cert = minimize_entropy(&povm, config)?;
    let n = bases.len();
    let lower = eur_bounds_from_hmin(cert.final_h_minus, n, &config.entropy);
    let upper = eur_bounds_from_hmin(cert.final_h_plus, n, &config.entropy);
    let analytic = if n == 2 {
        Some(analytic_bounds(&bases[0], &bases[1])?)
    } else {
        None
    };
    let bounds = PointBounds {
        q_optimal: lower.headline(),
        q_upper: upper.headline(),
        h_minus: cert.final_h_minus,
        h_plus: cert.final_h_plus,
        gap: cert.gap(),
        iterations: cert.iterations.len(),
        vertex_count_max: cert.vertex_count_max(),
        converged: cert.converged,
        termination: cert.termination,
        analytic,
    };
    Ok((bounds, cert))
}

/// Runs every grid point (in parallel); results keep the grid order.
pub fn sweep_bounds(family: MeasurementFamily, grid: &[Vec<f64>], config: &SolverConfig) -> Result<SweepResult> {
    config.validate()?;
    let points = grid
        .par_iter()
        .map(|p| SweepPoint {
            parameters: p.clone(),
            outcome: solve_point(family, p, config).map(|r| r.0).map_err(|e| e.to_string()),
        })
        .collect();
    Ok(SweepResult {
        family,
        entropy: config.entropy,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringThreshold {
    pub eta: f64,
    /// The square-root argument left `[0, 1]` and was clamped.
    pub clamped: bool,
}

/// `η = sqrt(1 - d q / (N (d - 1)))` for a Tsallis-2 bound `q`.
pub fn steering_threshold(q_tsallis_2: f64, n: usize, d: usize) -> SteeringThreshold {
    let arg = 1.0 - d as f64 * q_tsallis_2 / (n as f64 * (d as f64 - 1.0));
    let clamped_arg = arg.clamp(0.0, 1.0);
    SteeringThreshold {
        eta: clamped_arg.sqrt(),
        clamped: clamped_arg != arg,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringPoint {
    pub parameters: Vec<f64>,
    pub outcome: std::result::Result<SteeringValues, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringValues {
    pub q_tsallis_2: f64,
    pub threshold: SteeringThreshold,
    pub gap: f64,
    pub converged: bool,
    /// Threshold from a caller-supplied reference bound at this point.
    pub reference: Option<(f64, SteeringThreshold)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringResult {
    pub family: MeasurementFamily,
    pub alpha: f64,
    pub n_measurements: usize,
    pub dim: usize,
    pub points: Vec<SteeringPoint>,
}

/// Steering thresholds from optimal Tsallis-2 bounds. The entropy in
/// `config` is replaced by Tsallis with `α = 2`.
pub fn steering_sweep(
    family: MeasurementFamily,
    grid: &[Vec<f64>],
    config: &SolverConfig,
    reference_q: Option<&[f64]>,
) -> Result<SteeringResult> {
    if let Some(r) = reference_q {
        if r.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: r.len(),
            });
        }
    }
    let config = SolverConfig {
        entropy: EntropySpec::tsallis(2.0)?,
        ..*config
    };
    let (n, d) = (family.measurement_count(), family.dim());
    let sweep = sweep_bounds(family, grid, &config)?;
    let points = sweep
        .points
        .into_iter()
        .enumerate()
        .map(|(i, sp)| SteeringPoint {
            parameters: sp.parameters,
            outcome: sp.outcome.map(|b| SteeringValues {
                q_tsallis_2: b.q_optimal,
                threshold: steering_threshold(b.q_optimal, n, d),
                gap: b.gap,
                converged: b.converged,
                reference: reference_q.map(|r| (r[i], steering_threshold(r[i], n, d))),
            }),
        })
        .collect();
    Ok(SteeringResult {
        family,
        alpha: 2.0,
        n_measurements: n,
        dim: d,
        points,
    })
}
