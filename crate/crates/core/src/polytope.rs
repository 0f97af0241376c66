//! Outer-approximating polytopes in reduced coordinates.
//!
//! A [`Polytope`] keeps its H-representation together with a cached
//! V-representation maintained by the double-description method. The cache is
//! built once over the homogenized cone `{(x0, z) : b x0 - a·z >= 0, x0 >= 0}`
//! and afterwards each new cut is inserted incrementally: vertices strictly
//! violating the cut are dropped and new vertices are generated on the cut
//! hyperplane from every adjacent kept/dropped pair. Two generators are
//! adjacent when their common active constraints have rank `r - 1`, which also
//! covers degenerate vertices with more than `r` active constraints.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::geometry::AffineModel;
use crate::quantum::spectral_range;

/// Slack below which a constraint counts as active.
pub const ACTIVE_TOL: f64 = 1e-9;
/// Vertices closer than this are merged.
pub const DEDUP_TOL: f64 = 1e-8;
/// Angular and offset tolerance for rejecting a repeated cut.
pub const DUPLICATE_TOL: f64 = 1e-10;
pub const DEFAULT_VERTEX_LIMIT: usize = 1_000_000;

const RANK_TOL: f64 = 1e-9;
/// Homogeneous coordinate below which a generator is a ray, not a vertex.
const RAY_TOL: f64 = 1e-9;
/// Index used for the `x0 >= 0` row in active sets.
const HOMOGENIZING_ROW: u32 = u32::MAX;
/// Initial constraints with a normal shorter than this are dropped.
const NOISE_NORMAL: f64 = 1e-9;

/// `⟨normal, z⟩ <= offset` with a unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    normal: Vec<f64>,
    offset: f64,
}

impl HalfSpace {
    /// Normalizes the constraint; `None` for a zero or non-finite normal.
    pub fn new(normal: Vec<f64>, offset: f64) -> Option<Self> {
        let norm = dot(&normal, &normal).sqrt();
        if norm.is_nan() || norm <= 1e-14 || !norm.is_finite() || !offset.is_finite() {
            return None;
        }
        Some(Self {
            normal: normal.iter().map(|x| x / norm).collect(),
            offset: offset / norm,
        })
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `offset - ⟨normal, z⟩`; negative when `z` violates the constraint.
    pub fn slack(&self, z: &[f64]) -> f64 {
        self.offset - dot(&self.normal, z)
    }

    fn same_as(&self, other: &Self) -> bool {
        let angular = self
            .normal
            .iter()
            .zip(&other.normal)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        angular <= DUPLICATE_TOL && (self.offset - other.offset).abs() <= DUPLICATE_TOL
    }

    /// Homogeneous row `(b, -a)`.
    fn row(&self) -> Vec<f64> {
        std::iter::once(self.offset)
            .chain(self.normal.iter().map(|x| -x))
            .collect()
    }
}

/// A cached vertex and the indices of the half-spaces active at it.
#[derive(Debug, Clone)]
pub struct Vertex {
    y: Vec<f64>,
    active: Vec<u32>,
}

impl Vertex {
    pub fn point(&self) -> &[f64] {
        &self.y[1..]
    }

    pub fn active_constraints(&self) -> impl Iterator<Item = usize> + '_ {
        self.active
            .iter()
            .filter(|&&i| i != HOMOGENIZING_ROW)
            .map(|&i| i as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutOutcome {
    Added,
    Duplicate,
}

/// Diagnostics from vertex enumeration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EnumerationStats {
    /// Adjacent pairs whose combination vanished numerically and was skipped.
    pub degenerate_skips: usize,
    /// Full (non-incremental) enumerations performed.
    pub rebuilds: usize,
    /// Cuts inserted incrementally.
    pub incremental_updates: usize,
}

#[derive(Debug, Clone)]
pub struct Polytope {
    dim: usize,
    halfspaces: Vec<HalfSpace>,
    rows: Vec<Vec<f64>>,
    generators: Vec<Vertex>,
    /// Number of leading half-spaces reflected in `generators`.
    processed: usize,
    has_cache: bool,
    vertex_limit: usize,
    stats: EnumerationStats,
}

impl Polytope {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            halfspaces: Vec::new(),
            rows: Vec::new(),
            generators: Vec::new(),
            processed: 0,
            has_cache: false,
            vertex_limit: DEFAULT_VERTEX_LIMIT,
            stats: EnumerationStats::default(),
        }
    }

    pub fn from_halfspaces(dim: usize, halfspaces: impl IntoIterator<Item = HalfSpace>) -> Result<Self> {
        let mut poly = Self::new(dim);
        for h in halfspaces {
            poly.push(h)?;
        }
        Ok(poly)
    }

    pub fn with_vertex_limit(mut self, limit: usize) -> Self {
        self.vertex_limit = limit;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfspaces(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    pub fn stats(&self) -> EnumerationStats {
        self.stats
    }

    pub fn vertex_cache_valid(&self) -> bool {
        self.has_cache && self.processed == self.halfspaces.len()
    }

    fn push(&mut self, h: HalfSpace) -> Result<()> {
        if h.normal.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: h.normal.len(),
            });
        }
        self.rows.push(h.row());
        self.halfspaces.push(h);
        Ok(())
    }

    /// Appends a cut unless an equivalent one is already present. The vertex
    /// cache is updated lazily by the next [`Polytope::enumerate_vertices`].
    pub fn add_cut(&mut self, h: HalfSpace) -> Result<CutOutcome> {
        if self.halfspaces.iter().any(|e| e.same_as(&h)) {
            return Ok(CutOutcome::Duplicate);
        }
        self.push(h)?;
        Ok(CutOutcome::Added)
    }

    /// All vertices, deduplicated at [`DEDUP_TOL`].
    pub fn enumerate_vertices(&mut self) -> Result<&[Vertex]> {
        if !self.has_cache {
            self.rebuild()?;
        }
        while self.processed < self.halfspaces.len() {
            let idx = self.processed;
            self.insert_row(idx)?;
            self.processed += 1;
            self.stats.incremental_updates += 1;
            self.check_bounded()?;
        }
        Ok(&self.generators)
    }

    /// Vertex coordinates as owned vectors.
    pub fn vertices(&mut self) -> Result<Vec<Vec<f64>>> {
        Ok(self.enumerate_vertices()?.iter().map(|v| v.point().to_vec()).collect())
    }

    /// Drops the cache and enumerates from scratch.
    pub fn rebuild(&mut self) -> Result<()> {
        self.has_cache = false;
        self.generators.clear();
        self.processed = 0;
        self.stats.rebuilds += 1;

        let n = self.halfspaces.len();
        let width = self.dim + 1;
        let mut homogenizing = vec![0.0; width];
        homogenizing[0] = 1.0;

        // Greedy choice of `dim + 1` independent rows, x0 >= 0 first.
        let mut chosen: Vec<u32> = vec![HOMOGENIZING_ROW];
        let mut basis_rows: Vec<Vec<f64>> = vec![homogenizing.clone()];
        let mut echelon = Echelon::new(width);
        echelon.try_add(&homogenizing);
        for i in 0..n {
            if chosen.len() == width {
                break;
            }
            if echelon.try_add(&self.rows[i]) {
                chosen.push(i as u32);
                basis_rows.push(self.rows[i].clone());
            }
        }
        if chosen.len() < width {
            return Err(Error::Unbounded);
        }

        // Extreme rays of {y : B y >= 0} are the columns of B^{-1}.
        let inverse = invert(&basis_rows).ok_or(Error::Unbounded)?;
        self.generators = (0..width)
            .map(|j| {
                let y: Vec<f64> = (0..width).map(|k| inverse[k][j]).collect();
                let active = chosen
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != j)
                    .map(|(_, &c)| c)
                    .collect();
                let mut v = Vertex { y, active };
                normalize_generator(&mut v.y);
                sort_active(&mut v.active);
                v
            })
            .collect();

        for i in 0..n {
            if chosen.contains(&(i as u32)) {
                continue;
            }
            self.insert_row(i)?;
        }
        self.processed = n;
        self.has_cache = true;
        self.check_bounded()
    }

    fn check_bounded(&self) -> Result<()> {
        if self.generators.iter().any(|g| g.y[0] <= RAY_TOL) {
            return Err(Error::Unbounded);
        }
        Ok(())
    }

    fn row_value(&self, row: u32, y: &[f64]) -> f64 {
        if row == HOMOGENIZING_ROW {
            y[0]
        } else {
            dot(&self.rows[row as usize], y)
        }
    }

    /// One double-description step for half-space `index`.
    fn insert_row(&mut self, index: usize) -> Result<()> {
        let row_id = index as u32;
        let values: Vec<f64> = self.generators.iter().map(|g| self.row_value(row_id, &g.y)).collect();

        let mut positive = Vec::new();
        let mut negative = Vec::new();
        let mut zero = Vec::new();
        for (k, &v) in values.iter().enumerate() {
            if v > ACTIVE_TOL {
                positive.push(k);
            } else if v < -ACTIVE_TOL {
                negative.push(k);
            } else {
                zero.push(k);
            }
        }

        if negative.is_empty() {
            for &k in &zero {
                self.generators[k].active.push(row_id);
                sort_active(&mut self.generators[k].active);
            }
            return Ok(());
        }

        let needed = self.dim.saturating_sub(1);
        let mut created: Vec<Vertex> = Vec::new();
        for (p, q) in self.candidate_pairs(&positive, &negative, needed) {
            let common = intersect(&self.generators[p].active, &self.generators[q].active);
            if common.len() < needed || !self.has_rank(&common, needed) {
                continue;
            }
            let (vp, vq) = (values[p], values[q]);
            let gp = &self.generators[p].y;
            let gq = &self.generators[q].y;
            let mut y: Vec<f64> = gp.iter().zip(gq).map(|(a, b)| vp * b - vq * a).collect();
            if !normalize_generator(&mut y) {
                self.stats.degenerate_skips += 1;
                continue;
            }
            let mut active = common;
            active.push(row_id);
            sort_active(&mut active);
            merge_or_push(&mut created, Vertex { y, active });
        }

        // New vertices lie on the cut, so only zero-class vertices can coincide.
        for k in &zero {
            self.generators[*k].active.push(row_id);
            sort_active(&mut self.generators[*k].active);
        }
        let mut on_cut: Vec<Vertex> = zero.iter().map(|&k| self.generators[k].clone()).collect();
        let zero_count = on_cut.len();
        for v in created {
            merge_or_push(&mut on_cut, v);
        }

        let mut is_kept = vec![false; self.generators.len()];
        for &k in positive.iter().chain(&zero) {
            is_kept[k] = true;
        }
        let mut kept: Vec<Vertex> = Vec::with_capacity(positive.len() + on_cut.len());
        let mut zero_iter = on_cut.iter();
        for (k, g) in std::mem::take(&mut self.generators).into_iter().enumerate() {
            if is_kept[k] {
                if values[k].abs() <= ACTIVE_TOL {
                    // Merged duplicates may have widened the active set.
                    kept.push(zero_iter.next().expect("zero vertex").clone());
                } else {
                    kept.push(g);
                }
            }
        }
        kept.extend(on_cut.into_iter().skip(zero_count));
        if kept.len() > self.vertex_limit {
            return Err(Error::AbortTooManyVertices {
                limit: self.vertex_limit,
            });
        }
        self.generators = kept;
        Ok(())
    }

    /// Pairs `(p, q)` sharing at least `needed` active rows, in `(p, q)`
    /// order. Positive generators are indexed by row so each negative one
    /// only visits generators it shares a constraint with.
    fn candidate_pairs(&self, positive: &[usize], negative: &[usize], needed: usize) -> Vec<(usize, usize)> {
        if needed == 0 {
            return positive
                .iter()
                .flat_map(|&p| negative.iter().map(move |&q| (p, q)))
                .collect();
        }
        let slot = |row: u32| {
            if row == HOMOGENIZING_ROW {
                self.rows.len()
            } else {
                row as usize
            }
        };
        let mut by_row: Vec<Vec<usize>> = vec![Vec::new(); self.rows.len() + 1];
        for &p in positive {
            for &row in &self.generators[p].active {
                by_row[slot(row)].push(p);
            }
        }
        let mut shared = vec![0usize; self.generators.len()];
        let mut touched = Vec::new();
        let mut pairs = Vec::new();
        for &q in negative {
            for &row in &self.generators[q].active {
                for &p in &by_row[slot(row)] {
                    if shared[p] == 0 {
                        touched.push(p);
                    }
                    shared[p] += 1;
                }
            }
            for &p in &touched {
                if shared[p] >= needed {
                    pairs.push((p, q));
                }
                shared[p] = 0;
            }
            touched.clear();
        }
        pairs.sort_unstable();
        pairs
    }

    fn has_rank(&self, rows: &[u32], needed: usize) -> bool {
        if needed == 0 {
            return true;
        }
        let mut echelon = Echelon::new(self.dim + 1);
        let mut rank = 0;
        for &r in rows {
            let row = if r == HOMOGENIZING_ROW {
                let mut h = vec![0.0; self.dim + 1];
                h[0] = 1.0;
                h
            } else {
                self.rows[r as usize].clone()
            };
            if echelon.try_add(&row) {
                rank += 1;
                if rank >= needed {
                    return true;
                }
            }
        }
        false
    }

    /// Plain-text dump: one `H` line per constraint (`a_1 .. a_r <= b`), then
    /// one `V` line per vertex.
    pub fn dump<W: Write>(&mut self, out: &mut W) -> io::Result<()> {
        writeln!(out, "# dim {}", self.dim)?;
        for h in &self.halfspaces {
            let coeffs: Vec<String> = h.normal.iter().map(|x| format!("{x:.17e}")).collect();
            writeln!(out, "H {} <= {:.17e}", coeffs.join(" "), h.offset)?;
        }
        let vertices = self.vertices().map_err(|e| io::Error::other(e.to_string()))?;
        for v in vertices {
            let coords: Vec<String> = v.iter().map(|x| format!("{x:.17e}")).collect();
            writeln!(out, "V {}", coords.join(" "))?;
        }
        Ok(())
    }
}

fn merge_or_push(list: &mut Vec<Vertex>, v: Vertex) {
    for existing in list.iter_mut() {
        if distance(&existing.y, &v.y) <= DEDUP_TOL {
            let mut merged = existing.active.clone();
            merged.extend_from_slice(&v.active);
            sort_active(&mut merged);
            existing.active = merged;
            return;
        }
    }
    list.push(v);
}

/// Scales a vertex to `x0 = 1` and a ray to unit norm. Returns `false` for a
/// numerically vanishing generator.
fn normalize_generator(y: &mut [f64]) -> bool {
    let norm = dot(y, y).sqrt();
    if norm.is_nan() || norm <= 1e-300 || !norm.is_finite() {
        return false;
    }
    if y[0] / norm > RAY_TOL {
        let x0 = y[0];
        y.iter_mut().for_each(|x| *x /= x0);
    } else {
        y.iter_mut().for_each(|x| *x /= norm);
        y[0] = y[0].max(0.0);
    }
    true
}

fn sort_active(active: &mut Vec<u32>) {
    active.sort_unstable();
    active.dedup();
}

fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Incremental row echelon form used for rank tests.
struct Echelon {
    width: usize,
    rows: Vec<(usize, Vec<f64>)>,
}

impl Echelon {
    fn new(width: usize) -> Self {
        Self {
            width,
            rows: Vec::new(),
        }
    }

    /// Reduces `row` against the stored rows; keeps it if independent.
    fn try_add(&mut self, row: &[f64]) -> bool {
        let scale = dot(row, row).sqrt();
        if scale.is_nan() || scale <= 0.0 {
            return false;
        }
        let mut r: Vec<f64> = row.iter().map(|x| x / scale).collect();
        for (pivot, stored) in &self.rows {
            let f = r[*pivot];
            if f != 0.0 {
                r.iter_mut().zip(stored).for_each(|(x, s)| *x -= f * s);
            }
        }
        let (pivot, &max) = r
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("non-empty row");
        if max.abs() <= RANK_TOL {
            return false;
        }
        r.iter_mut().for_each(|x| *x /= max);
        // Keep the stored rows fully reduced in the new pivot column.
        for (_, stored) in self.rows.iter_mut() {
            let f = stored[pivot];
            if f != 0.0 {
                stored.iter_mut().zip(&r).for_each(|(s, x)| *s -= f * x);
            }
        }
        debug_assert!(self.rows.len() < self.width);
        self.rows.push((pivot, r));
        true
    }
}

/// Gauss-Jordan inverse with partial pivoting.
fn invert(rows: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = rows.len();
    let mut a: Vec<Vec<f64>> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut ext = r.clone();
            ext.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            ext
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        let p = a[col][col];
        a[col].iter_mut().for_each(|x| *x /= p);
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    let pivot_row = a[col].clone();
                    a[r].iter_mut().zip(&pivot_row).for_each(|(x, s)| *x -= f * s);
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Spectral box constraints `λ_min(E_i) <= p_i <= λ_max(E_i)` and, with
/// `use_pairs`, the same limits for every `p_i + p_j`, expressed in reduced
/// coordinates. Constraints whose normal vanishes (state-independent outcome
/// sums) are omitted.
pub fn initial_polytope(model: &AffineModel, use_pairs: bool) -> Result<Polytope> {
    let r = model.reduced_rank();
    if r == 0 {
        return Err(Error::DegenerateMeasurement);
    }
    let povm = model.povm();
    let q = model.basis();
    let s = model.center();
    let m = povm.len();
    let q_row = |i: usize| -> Vec<f64> { q.row(i).iter().copied().collect() };

    let mut poly = Polytope::new(r);
    let mut push_pair = |normal: Vec<f64>, lo: f64, hi: f64, shift: f64| -> Result<()> {
        // Rows of Q are O(1); a tiny combination is rounding noise of a
        // state-independent sum and would give a meaningless direction.
        if dot(&normal, &normal).sqrt() < NOISE_NORMAL {
            return Ok(());
        }
        let neg: Vec<f64> = normal.iter().map(|x| -x).collect();
        if let Some(h) = HalfSpace::new(normal, hi - shift) {
            poly.add_cut(h)?;
        }
        if let Some(h) = HalfSpace::new(neg, -lo + shift) {
            poly.add_cut(h)?;
        }
        Ok(())
    };

    for i in 0..m {
        let (lo, hi) = spectral_range(&povm.elements()[i])?;
        push_pair(q_row(i), lo, hi, s[i])?;
    }
    if use_pairs {
        for i in 0..m {
            for j in i + 1..m {
                let sum = povm.elements()[i].add(&povm.elements()[j])?;
                let (lo, hi) = spectral_range(&sum)?;
                let normal: Vec<f64> = q_row(i).iter().zip(q_row(j)).map(|(a, b)| a + b).collect();
                push_pair(normal, lo, hi, s[i] + s[j])?;
            }
        }
    }
    poly.enumerate_vertices()?;
    Ok(poly)
}
