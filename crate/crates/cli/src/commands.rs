use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use eurcut::applications::{
    analytic_bounds, linspace, steering_sweep, sweep_bounds, MeasurementFamily, SteeringResult, SweepResult,
};
use eurcut::entropy::{eur_bounds_from_hmin, EntropyFamily, EntropySpec, DEFAULT_CLAMP_EPSILON};
use eurcut::oracle::brute_force_min_entropy;
use eurcut::polytope::DEFAULT_VERTEX_LIMIT;
use eurcut::quantum::{combine_povms, random_haar_povm, Povm};
use eurcut::solver::{solve, BoundCertificate, SolverConfig, STALL_WINDOW};
use serde_json::{json, Value};

use crate::spec::{canonical_digest, digest_text, state_json, SpecFile, SCHEMA_VERSION};

/// Exit status of a completed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    Unconverged,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Converged => 0,
            Status::Unconverged => 2,
        }
    }

    fn from_flag(converged: bool) -> Self {
        if converged {
            Status::Converged
        } else {
            Status::Unconverged
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "eurcut",
    version,
    about = "Certified bounds on the minimal entropy of quantum measurements",
    long_about = "Certified bounds on the minimal entropy of quantum measurements.\n\n\
        Exit codes: 0 converged, 2 valid bounds that did not reach the requested gap, 1 error."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bracket the minimal entropy of the effective POVM of a spec file.
    Bound(BoundArgs),
    /// Compare the optimal Shannon bound with the MU, CP and RPZ bounds for two bases.
    Compare(CompareArgs),
    /// Solve a measurement family over a parameter grid (CSV and JSON).
    Sweep(SweepArgs),
    /// Steering visibility thresholds from optimal Tsallis-2 bounds (CSV and JSON).
    Steering(SteeringArgs),
    /// Write a Haar-random POVM as a spec file.
    RandomPovm(RandomPovmArgs),
    /// Sampling-based upper estimate of the minimal entropy.
    #[command(hide = true)]
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EntropyKind {
    Shannon,
    Tsallis,
    Renyi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    M2,
    M3,
}

impl From<FamilyArg> for MeasurementFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::M2 => MeasurementFamily::M2,
            FamilyArg::M3 => MeasurementFamily::M3,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EntropyArgs {
    /// Entropy family.
    #[arg(long, value_enum, default_value_t = EntropyKind::Shannon)]
    pub entropy: EntropyKind,
    /// Order α for Tsallis and Rényi entropies (α > 0, α ≠ 1).
    #[arg(long)]
    pub alpha: Option<f64>,
}

impl EntropyArgs {
    pub fn spec(&self) -> Result<EntropySpec> {
        let family = match (self.entropy, self.alpha) {
            (EntropyKind::Shannon, None) => EntropyFamily::Shannon,
            (EntropyKind::Shannon, Some(_)) => bail!("--alpha does not apply to the Shannon entropy"),
            (_, None) => bail!("--alpha is required for Tsallis and Rényi entropies"),
            (EntropyKind::Tsallis, Some(a)) => EntropyFamily::Tsallis(a),
            (EntropyKind::Renyi, Some(a)) => EntropyFamily::Renyi(a),
        };
        Ok(EntropySpec::new(family, DEFAULT_CLAMP_EPSILON)?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Target gap between the certified lower and upper bounds.
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    /// Maximum number of cutting-plane iterations.
    #[arg(long = "max-iter", default_value_t = 500)]
    pub max_iter: usize,
    /// Add pairwise spectral constraints to the initial polytope (default).
    #[arg(long, overrides_with = "no_pairs")]
    pub pairs: bool,
    /// Use only the per-element box constraints.
    #[arg(long = "no-pairs", overrides_with = "pairs")]
    pub no_pairs: bool,
    /// Relative singular-value cutoff for the reduced rank.
    #[arg(long = "rank-tol", default_value_t = 1e-10)]
    pub rank_tol: f64,
    /// Abort when the polytope has more vertices than this.
    #[arg(long = "vertex-limit", default_value_t = DEFAULT_VERTEX_LIMIT)]
    pub vertex_limit: usize,
    /// Random directions probed for extra upper bounds (0 disables).
    #[arg(long = "multi-start", default_value_t = 0)]
    pub multi_start: usize,
    /// Seed for every random choice (multi-start directions).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report logarithmic entropies in bits instead of nats.
    #[arg(long)]
    pub bits: bool,
    /// Include wall-clock timing in the JSON output (makes it non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

impl SolverArgs {
    pub fn config(&self, entropy: EntropySpec) -> SolverConfig {
        SolverConfig {
            epsilon: self.epsilon,
            max_iterations: self.max_iter,
            use_pair_constraints: !self.no_pairs,
            vertex_limit: self.vertex_limit,
            entropy,
            rank_tolerance: self.rank_tol,
            multi_start: self.multi_start,
            seed: self.seed,
            stall_window: STALL_WINDOW,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    /// Measurement spec file (JSON).
    pub input: PathBuf,
    #[command(flatten)]
    pub entropy: EntropyArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write the result here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Write one JSON line per iteration to this file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the final polytope (H and V representation) to this file.
    #[arg(long = "dump-polytope")]
    pub dump_polytope: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Spec file with exactly two basis-type measurements.
    pub input: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// Points per parameter axis (default 61 θ values for M2, 31 × 31 for M3).
    #[arg(long = "grid-size")]
    pub grid_size: Option<usize>,
    /// Worker threads (default: number of logical cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl GridArgs {
    pub fn grid(&self) -> Result<Vec<Vec<f64>>> {
        let family: MeasurementFamily = self.family.into();
        let Some(n) = self.grid_size else {
            return Ok(family.default_grid());
        };
        if n == 0 {
            bail!("--grid-size must be positive");
        }
        Ok(match family {
            MeasurementFamily::M2 => linspace(0.0, std::f64::consts::PI, n)
                .into_iter()
                .map(|t| vec![t])
                .collect(),
            MeasurementFamily::M3 => {
                let phis: Vec<f64> = (0..n).map(|k| std::f64::consts::TAU * k as f64 / n as f64).collect();
                linspace(0.0, 1.0, n)
                    .into_iter()
                    .flat_map(|a| phis.iter().map(move |&p| vec![a, p]))
                    .collect()
            }
        })
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(j) = self.jobs {
            if j == 0 {
                bail!("--jobs must be positive");
            }
            builder = builder.num_threads(j);
        }
        Ok(builder.build()?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub entropy: EntropyArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// CSV output path; the JSON result goes next to it with a .json extension.
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SteeringArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// CSV with a `q` column (one row per grid point) of reference Tsallis-2 bounds.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// CSV output path; the JSON result goes next to it with a .json extension.
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RandomPovmArgs {
    /// Hilbert-space dimension.
    #[arg(long)]
    pub dim: usize,
    /// Number of outcomes.
    #[arg(long)]
    pub outcomes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub entropy: EntropyArgs,
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Bound(a) => cmd_bound(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Steering(a) => cmd_steering(&a),
        Command::RandomPovm(a) => cmd_random_povm(&a),
        Command::Oracle(a) => cmd_oracle(&a),
    }
}

/// Display scaling: nats to bits for logarithmic entropies when requested.
struct Units {
    scale: f64,
    name: &'static str,
}

impl Units {
    fn new(spec: &EntropySpec, bits: bool) -> Self {
        match (spec.is_logarithmic(), bits) {
            (false, _) => Units {
                scale: 1.0,
                name: "dimensionless",
            },
            (true, false) => Units {
                scale: 1.0,
                name: "nats",
            },
            (true, true) => Units {
                scale: 1.0 / std::f64::consts::LN_2,
                name: "bits",
            },
        }
    }

    fn v(&self, x: f64) -> f64 {
        x * self.scale
    }
}

fn entropy_json(spec: &EntropySpec, units: &Units) -> Value {
    json!({ "family": spec.name(), "alpha": spec.alpha(), "unit": units.name })
}

fn solver_json(c: &SolverConfig) -> Value {
    json!({
        "epsilon": c.epsilon,
        "max_iterations": c.max_iterations,
        "use_pair_constraints": c.use_pair_constraints,
        "rank_tolerance": c.rank_tolerance,
        "vertex_limit": c.vertex_limit,
        "multi_start": c.multi_start,
        "stall_window": c.stall_window,
    })
}

fn eur_kind(spec: &EntropySpec) -> &'static str {
    match spec.family {
        EntropyFamily::Shannon => "shannon_sum",
        EntropyFamily::Tsallis(_) => "tsallis",
        EntropyFamily::Renyi(_) => "renyi",
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json serializes") + "\n"
}

fn certificate_json(cert: &BoundCertificate, n: usize, units: &Units) -> Value {
    let spec = cert.config.entropy;
    let lo = eur_bounds_from_hmin(cert.final_h_minus, n, &spec).headline();
    let hi = eur_bounds_from_hmin(cert.final_h_plus, n, &spec).headline();
    json!({
        "bounds": {
            "h_minus": units.v(cert.final_h_minus),
            "h_plus": units.v(cert.final_h_plus),
            "gap": units.v(cert.gap()),
        },
        "eur": {
            "kind": eur_kind(&spec),
            "n_measurements": n,
            "q_lower": units.v(lo),
            "q_upper": units.v(hi),
        },
        "status": {
            "converged": cert.converged,
            "termination": cert.termination.as_str(),
            "iterations": cert.iterations.len(),
            "vertex_count_max": cert.vertex_count_max(),
            "halfspaces": cert.halfspace_count,
        },
        "witness": {
            "state": state_json(&cert.witness_state),
            "probabilities": cert.witness_probabilities,
        },
    })
}

fn merge(base: &mut Value, extra: Value) {
    if let (Value::Object(b), Value::Object(e)) = (base, extra) {
        b.extend(e);
    }
}

fn load(path: &Path) -> Result<(SpecFile, String, Vec<Povm>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = SpecFile::parse(&text).with_context(|| format!("in {}", path.display()))?;
    let digest = digest_text(&text)?;
    let povms = spec.povms()?;
    Ok((spec, digest, povms))
}

pub fn cmd_bound(a: &BoundArgs) -> Result<Status> {
    let start = Instant::now();
    let entropy = a.entropy.spec()?;
    let config = a.solver.config(entropy);
    let (spec, digest, povms) = load(&a.input)?;
    let effective = combine_povms(&povms)?;
    let (cert, poly) = solve(&effective, &config)?;
    let units = Units::new(&entropy, a.solver.bits);

    let mut out = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "bound",
        "input_digest": digest,
        "entropy": entropy_json(&entropy, &units),
        "solver": solver_json(&config),
        "seed": config.seed,
        "problem": {
            "dim": spec.dim,
            "measurements": povms.len(),
            "outcomes": effective.len(),
            "reduced_rank": cert.reduced_rank,
        },
    });
    merge(&mut out, certificate_json(&cert, povms.len(), &units));

    if let Some(path) = &a.trace {
        let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        for r in &cert.iterations {
            let line = json!({
                "index": r.index,
                "h_minus": units.v(r.h_minus),
                "h_plus": units.v(r.h_plus),
                "gap": units.v(r.gap),
                "best_h_minus": units.v(r.best_h_minus),
                "best_h_plus": units.v(r.best_h_plus),
                "vertex_count": r.vertex_count,
                "optimal_vertex_z": r.optimal_vertex_z,
                "witness_probabilities": r.witness_probabilities,
                "cut_normal": r.cut_normal,
                "cut_offset": r.cut_offset,
                "cut_violation": r.cut_violation,
            });
            writeln!(w, "{}", serde_json::to_string(&line)?)?;
        }
        w.flush()?;
    }
    if let Some(path) = &a.dump_polytope {
        let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        match poly {
            Some(mut p) => p.dump(&mut w)?,
            None => writeln!(w, "# reduced rank 0: no polytope")?,
        }
        w.flush()?;
    }
    if a.solver.timing {
        out["timing"] = json!({ "seconds": start.elapsed().as_secs_f64() });
    }
    write_text(a.output.as_deref(), &pretty(&out))?;
    Ok(Status::from_flag(cert.converged))
}

pub fn cmd_compare(a: &CompareArgs) -> Result<Status> {
    let start = Instant::now();
    let entropy = EntropySpec::shannon();
    let config = a.solver.config(entropy);
    let (spec, digest, povms) = load(&a.input)?;
    let bases = match spec.bases()? {
        Some(b) if b.len() == 2 => b,
        _ => bail!("NotBases: compare needs exactly two basis-type measurements"),
    };
    let analytic = analytic_bounds(&bases[0], &bases[1])?;
    let effective = combine_povms(&povms)?;
    let (cert, _) = solve(&effective, &config)?;
    let units = Units::new(&entropy, a.solver.bits);
    let q_lo = eur_bounds_from_hmin(cert.final_h_minus, 2, &entropy).headline();
    let q_hi = eur_bounds_from_hmin(cert.final_h_plus, 2, &entropy).headline();
    let max_analytic = analytic.q_mu.max(analytic.q_cp).max(analytic.q_rpz);
    let slack = q_hi - q_lo;

    let mut out = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "compare",
        "input_digest": digest,
        "entropy": entropy_json(&entropy, &units),
        "solver": solver_json(&config),
        "seed": config.seed,
        "problem": {
            "dim": spec.dim,
            "measurements": 2,
            "outcomes": effective.len(),
            "reduced_rank": cert.reduced_rank,
        },
        "overlaps": { "c": analytic.c, "c2": analytic.c2, "degenerate": analytic.degenerate },
        "comparison": {
            "q_mu": units.v(analytic.q_mu),
            "q_cp": units.v(analytic.q_cp),
            "q_rpz": units.v(analytic.q_rpz),
            "q_optimal": units.v(q_lo),
            "q_optimal_upper": units.v(q_hi),
        },
        "dominance": {
            "max_analytic": units.v(max_analytic),
            "margin": units.v(q_lo - max_analytic),
            "tolerance": units.v(slack),
            "holds": q_lo >= max_analytic - slack - 1e-12,
        },
    });
    merge(&mut out, certificate_json(&cert, 2, &units));
    if a.solver.timing {
        out["timing"] = json!({ "seconds": start.elapsed().as_secs_f64() });
    }
    write_text(a.output.as_deref(), &pretty(&out))?;
    Ok(Status::from_flag(cert.converged))
}

fn json_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn named(family: MeasurementFamily, point: &[f64]) -> Value {
    let mut m = serde_json::Map::new();
    for (k, v) in family.parameter_names().iter().zip(point) {
        m.insert((*k).to_string(), json!(v));
    }
    Value::Object(m)
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<Status> {
    let start = Instant::now();
    let entropy = a.entropy.spec()?;
    let config = a.solver.config(entropy);
    let family: MeasurementFamily = a.grid.family.into();
    let grid = a.grid.grid()?;
    let units = Units::new(&entropy, a.solver.bits);
    let result = a.grid.pool()?.install(|| sweep_bounds(family, &grid, &config))?;
    write_sweep_csv(&a.output, &result, &units)?;

    let params = json!({
        "family": family.name(),
        "grid": grid,
        "entropy": entropy_json(&entropy, &units),
        "solver": solver_json(&config),
    });
    let points: Vec<Value> = result
        .points
        .iter()
        .map(|p| {
            let mut v = json!({ "parameters": named(family, &p.parameters) });
            match &p.outcome {
                Ok(b) => merge(
                    &mut v,
                    json!({
                        "q_optimal": units.v(b.q_optimal),
                        "q_upper": units.v(b.q_upper),
                        "h_minus": units.v(b.h_minus),
                        "h_plus": units.v(b.h_plus),
                        "gap": units.v(b.gap),
                        "iterations": b.iterations,
                        "vertex_count_max": b.vertex_count_max,
                        "converged": b.converged,
                        "termination": b.termination.as_str(),
                        "analytic": b.analytic.map(|x| json!({
                            "c": x.c,
                            "c2": x.c2,
                            "q_mu": units.v(x.q_mu),
                            "q_cp": units.v(x.q_cp),
                            "q_rpz": units.v(x.q_rpz),
                            "degenerate": x.degenerate,
                        })),
                        "error": null,
                    }),
                ),
                Err(e) => merge(&mut v, json!({ "converged": false, "error": e })),
            }
            v
        })
        .collect();
    let converged = result
        .points
        .iter()
        .filter(|p| p.outcome.as_ref().is_ok_and(|b| b.converged))
        .count();
    let failed = result.points.iter().filter(|p| p.outcome.is_err()).count();
    let mut out = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "sweep",
        "input_digest": canonical_digest(&params),
        "family": family.name(),
        "parameter_names": family.parameter_names(),
        "entropy": entropy_json(&entropy, &units),
        "solver": solver_json(&config),
        "seed": config.seed,
        "points": points,
        "summary": { "points": result.points.len(), "converged": converged, "failed": failed },
    });
    if a.solver.timing {
        out["timing"] = json!({ "seconds": start.elapsed().as_secs_f64() });
    }
    write_text(Some(&json_path(&a.output)), &pretty(&out))?;
    Ok(Status::from_flag(converged == result.points.len()))
}

fn write_sweep_csv(path: &Path, result: &SweepResult, units: &Units) -> Result<()> {
    let family = result.family;
    let two_basis = family.measurement_count() == 2;
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let mut header: Vec<&str> = family.parameter_names().to_vec();
    header.extend(["q_optimal", "q_upper", "gap"]);
    if two_basis {
        header.extend(["q_mu", "q_cp", "q_rpz"]);
    }
    header.extend(["iterations", "vertex_count_max", "converged", "termination", "error"]);
    w.write_record(&header)?;
    for p in &result.points {
        let mut row: Vec<String> = p.parameters.iter().map(|&x| fmt(x)).collect();
        match &p.outcome {
            Ok(b) => {
                row.extend([fmt(units.v(b.q_optimal)), fmt(units.v(b.q_upper)), fmt(units.v(b.gap))]);
                if two_basis {
                    let a = b.analytic.ok_or_else(|| anyhow!("missing analytic bounds"))?;
                    row.extend([fmt(units.v(a.q_mu)), fmt(units.v(a.q_cp)), fmt(units.v(a.q_rpz))]);
                }
                row.extend([
                    b.iterations.to_string(),
                    b.vertex_count_max.to_string(),
                    b.converged.to_string(),
                    b.termination.as_str().to_string(),
                    String::new(),
                ]);
            }
            Err(e) => {
                let blanks = if two_basis { 8 } else { 5 };
                row.extend(std::iter::repeat_n(String::new(), blanks));
                row.extend(["false".to_string(), String::new(), e.clone()]);
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_reference(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let col = r
        .headers()?
        .iter()
        .position(|h| h.trim() == "q")
        .ok_or_else(|| anyhow!("{}: no `q` column", path.display()))?;
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let field = rec.get(col).unwrap_or("").trim();
            field
                .parse::<f64>()
                .with_context(|| format!("{}: row {}: bad q value {field:?}", path.display(), i + 2))
        })
        .collect()
}

pub fn cmd_steering(a: &SteeringArgs) -> Result<Status> {
    let start = Instant::now();
    let entropy = EntropySpec::tsallis(2.0)?;
    let config = a.solver.config(entropy);
    let family: MeasurementFamily = a.grid.family.into();
    let grid = a.grid.grid()?;
    let reference = a.reference.as_deref().map(read_reference).transpose()?;
    let result = a
        .grid
        .pool()?
        .install(|| steering_sweep(family, &grid, &config, reference.as_deref()))?;
    write_steering_csv(&a.output, &result, reference.is_some())?;

    let params = json!({
        "family": family.name(),
        "grid": grid,
        "solver": solver_json(&config),
        "reference": reference,
    });
    let points: Vec<Value> = result
        .points
        .iter()
        .map(|p| {
            let mut v = json!({ "parameters": named(family, &p.parameters) });
            match &p.outcome {
                Ok(s) => merge(
                    &mut v,
                    json!({
                        "q_tsallis_2": s.q_tsallis_2,
                        "eta_threshold": s.threshold.eta,
                        "clamped": s.threshold.clamped,
                        "gap": s.gap,
                        "converged": s.converged,
                        "reference": s.reference.map(|(q, t)| json!({
                            "q": q, "eta_threshold": t.eta, "clamped": t.clamped,
                        })),
                        "error": null,
                    }),
                ),
                Err(e) => merge(&mut v, json!({ "converged": false, "error": e })),
            }
            v
        })
        .collect();
    let converged = result
        .points
        .iter()
        .filter(|p| p.outcome.as_ref().is_ok_and(|s| s.converged))
        .count();
    let mut out = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "steering",
        "input_digest": canonical_digest(&params),
        "family": family.name(),
        "parameter_names": family.parameter_names(),
        "alpha": result.alpha,
        "n_measurements": result.n_measurements,
        "dim": result.dim,
        "solver": solver_json(&config),
        "seed": config.seed,
        "points": points,
        "summary": {
            "points": result.points.len(),
            "converged": converged,
            "failed": result.points.iter().filter(|p| p.outcome.is_err()).count(),
        },
    });
    if a.solver.timing {
        out["timing"] = json!({ "seconds": start.elapsed().as_secs_f64() });
    }
    write_text(Some(&json_path(&a.output)), &pretty(&out))?;
    Ok(Status::from_flag(converged == result.points.len()))
}

fn write_steering_csv(path: &Path, result: &SteeringResult, with_reference: bool) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let mut header: Vec<&str> = result.family.parameter_names().to_vec();
    header.extend(["q_tsallis_2", "eta_threshold", "clamped", "gap", "converged"]);
    if with_reference {
        header.extend(["reference_q", "reference_eta_threshold"]);
    }
    header.push("error");
    w.write_record(&header)?;
    for p in &result.points {
        let mut row: Vec<String> = p.parameters.iter().map(|&x| fmt(x)).collect();
        match &p.outcome {
            Ok(s) => {
                row.extend([
                    fmt(s.q_tsallis_2),
                    fmt(s.threshold.eta),
                    s.threshold.clamped.to_string(),
                    fmt(s.gap),
                    s.converged.to_string(),
                ]);
                if let Some((q, t)) = s.reference {
                    row.extend([fmt(q), fmt(t.eta)]);
                }
                row.push(String::new());
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), 4));
                row.push("false".into());
                if with_reference {
                    row.extend([String::new(), String::new()]);
                }
                row.push(e.clone());
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_random_povm(a: &RandomPovmArgs) -> Result<Status> {
    if a.dim < 2 || a.outcomes < 2 {
        bail!("--dim and --outcomes must both be at least 2");
    }
    let povm = random_haar_povm(a.dim, a.outcomes, a.seed)?;
    let description = format!(
        "Haar-random POVM (Ginibre construction, ChaCha20): dim={} outcomes={} seed={}",
        a.dim, a.outcomes, a.seed
    );
    let spec = SpecFile::from_povm(&povm, Some(description));
    write_text(Some(&a.output), &spec.to_json())?;
    Ok(Status::Converged)
}

pub fn cmd_oracle(a: &OracleArgs) -> Result<Status> {
    let entropy = a.entropy.spec()?;
    let (_, digest, povms) = load(&a.input)?;
    let effective = combine_povms(&povms)?;
    let res = brute_force_min_entropy(&effective, &entropy, a.samples, a.seed)?;
    let out = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "oracle",
        "input_digest": digest,
        "entropy": { "family": entropy.name(), "alpha": entropy.alpha(), "unit": if entropy.is_logarithmic() { "nats" } else { "dimensionless" } },
        "seed": a.seed,
        "samples": res.samples,
        "refinement_steps": res.refinement_steps,
        "h_estimate": res.h_estimate,
        "eur_upper": eur_bounds_from_hmin(res.h_estimate, povms.len(), &entropy).headline(),
        "best_state": state_json(&res.best_state),
        "best_probabilities": res.best_probabilities,
    });
    write_text(a.output.as_deref(), &pretty(&out))?;
    Ok(Status::Converged)
}
