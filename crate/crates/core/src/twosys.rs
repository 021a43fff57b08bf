//! The two-transformation system over `(y, ω)`: fair-bit configurations
//! on `Z²`, the fibre permutation `π_y` exchanging the two key-cell lists,
//! the rearrangement `Ψ_{π_y}`, exact intersection probabilities along the
//! epochs, and the recurrence counterexample with its certificate.
//!
//! A view is built from the key set truncated at `N_cap`. That truncated
//! key set is finite and fully known, so the resulting `π` is a genuine
//! permutation of `Z²` computed exactly; every quantity at `n ≤ N_cap`
//! depends only on it, and anything beyond `N_cap` is a horizon error.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::cocycle::{self, Evaluator};
use crate::error::{Error, Result};
use crate::mixer::{derive_seed, domain, mix};
use crate::polyrange::{self, unpack, EpochSchedule, IntPolynomial, PolyContext, RangeRecord, Walk};
use crate::report::{fmt_float, Table};
use crate::stats;

pub type Cell = (i64, i64);

pub const ORIGIN: Cell = (0, 0);

/// Fair bits on `Z²`, a pure function of `(seed, cell)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OmegaConfig {
    pub seed: u64,
}

impl OmegaConfig {
    pub fn new(seed: u64) -> Self {
        OmegaConfig { seed }
    }

    #[inline]
    pub fn bit(&self, c: Cell) -> u8 {
        (mix(self.seed, domain::OMEGA, &[c.0 as u64, c.1 as u64]) & 1) as u8
    }
}

pub fn omega_bit(cfg: &OmegaConfig, c: Cell) -> u8 {
    cfg.bit(c)
}

/// Position of `c` in the fixed order of `Z²`: origin first, then rings of
/// growing `L∞` radius, each ring lexicographic in `(x, y)`.
pub fn ring_index(c: Cell) -> u128 {
    let (x, y) = (c.0 as i128, c.1 as i128);
    let r = x.abs().max(y.abs());
    if r == 0 {
        return 0;
    }
    let base = (2 * r - 1) * (2 * r - 1);
    let side = 2 * r + 1;
    let o = if x == -r {
        y + r
    } else if x < r {
        side + 2 * (x + r - 1) + (y == r) as i128
    } else {
        side + 2 * (2 * r - 1) + (y + r)
    };
    (base + o) as u128
}

fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// Inverse of [`ring_index`].
pub fn ring_cell(g: u128) -> Cell {
    if g == 0 {
        return ORIGIN;
    }
    let r = ((isqrt(g) + 1) / 2) as i128;
    let o = g as i128 - (2 * r - 1) * (2 * r - 1);
    let side = 2 * r + 1;
    let (x, y) = if o < side {
        (-r, o - r)
    } else if o < side + 2 * (2 * r - 1) {
        let q = o - side;
        (-r + 1 + q / 2, if q % 2 == 0 { -r } else { r })
    } else {
        (r, o - side - 2 * (2 * r - 1) - r)
    };
    (x as i64, y as i64)
}

/// The `index`-th cell (1-based) of `Z² \ (excluded ∪ {origin})` in ring
/// order. `excluded` holds sorted, distinct, nonzero ring indices.
pub fn complement_enumerate(excluded: &[u128], index: u128) -> Result<Cell> {
    if index == 0 {
        return Err(Error::Param("complement enumeration is 1-based".into()));
    }
    debug_assert!(excluded.windows(2).all(|w| w[0] < w[1]));
    // least fixed point of g = index + #{e ≤ g}
    let mut g = index;
    loop {
        let next = index + excluded.partition_point(|&e| e <= g) as u128;
        if next == g {
            return Ok(ring_cell(g));
        }
        g = next;
    }
}

/// Rank (1-based) of a non-excluded, non-origin cell among the complement.
fn complement_rank(excluded: &[u128], g: u128) -> u128 {
    g - excluded.partition_point(|&e| e <= g) as u128
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// `π_y = π_{p₁,y} ∘ π_{p₂,y}⁻¹` on the key set `𝒦_y ∩ [1, N_cap]`.
#[derive(Debug, Clone)]
pub struct PermutationView {
    n_cap: u64,
    keys: Vec<u64>,
    /// `S_{p_1(n)}`, `S_{p_2(n)}` for `n = 1..=N_cap`, packed.
    a: Vec<i128>,
    b: Vec<i128>,
    s1: Vec<Cell>,
    s2: Vec<Cell>,
    s1_pos: HashMap<Cell, usize>,
    s2_pos: HashMap<Cell, usize>,
    ex1: Vec<u128>,
    ex2: Vec<u128>,
}

fn cell_of(key: i128) -> Cell {
    unpack(key)
}

impl PermutationView {
    /// View of one trajectory from its two range records.
    pub fn new(r1: &RangeRecord, r2: &RangeRecord, epochs: &EpochSchedule, n_cap: u64) -> Result<Self> {
        let keys = polyrange::key_set(r1, r2, epochs, n_cap)?;
        Self::from_parts(r1.points[..n_cap as usize].to_vec(), r2.points[..n_cap as usize].to_vec(), keys)
    }

    /// View from explicit point lists and key indices (1-based). Key cells
    /// must be distinct and nonzero within each list.
    pub fn from_parts(a: Vec<i128>, b: Vec<i128>, keys: Vec<u64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Input("point lists differ in length".into()));
        }
        let n_cap = a.len() as u64;
        let mut s1 = Vec::with_capacity(keys.len());
        let mut s2 = Vec::with_capacity(keys.len());
        let mut s1_pos = HashMap::with_capacity(keys.len());
        let mut s2_pos = HashMap::with_capacity(keys.len());
        for (i, &n) in keys.iter().enumerate() {
            if n == 0 || n > n_cap || (i > 0 && keys[i - 1] >= n) {
                return Err(Error::Input("keys must be ascending within 1..=N_cap".into()));
            }
            let (c1, c2) = (cell_of(a[n as usize - 1]), cell_of(b[n as usize - 1]));
            if c1 == ORIGIN || c2 == ORIGIN || s1_pos.insert(c1, i).is_some() || s2_pos.insert(c2, i).is_some() {
                return Err(Error::Input(format!("key {n} repeats a key cell or hits the origin")));
            }
            s1.push(c1);
            s2.push(c2);
        }
        let mut ex1: Vec<u128> = s1.iter().map(|&c| ring_index(c)).collect();
        let mut ex2: Vec<u128> = s2.iter().map(|&c| ring_index(c)).collect();
        ex1.sort_unstable();
        ex2.sort_unstable();
        Ok(PermutationView { n_cap, keys, a, b, s1, s2, s1_pos, s2_pos, ex1, ex2 })
    }

    pub fn n_cap(&self) -> u64 {
        self.n_cap
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    pub fn is_key(&self, n: u64) -> bool {
        self.keys.binary_search(&n).is_ok()
    }

    /// `(S_{p₁(n)}, S_{p₂(n)})`; `n = 0` gives the origin twice.
    pub fn cells_at(&self, n: u64) -> Result<(Cell, Cell)> {
        if n == 0 {
            return Ok((ORIGIN, ORIGIN));
        }
        if n > self.n_cap {
            return Err(Error::Horizon(format!("n={n} beyond N_cap={}", self.n_cap)));
        }
        Ok((cell_of(self.a[n as usize - 1]), cell_of(self.b[n as usize - 1])))
    }

    /// Key cells of list `j ∈ {1, 2}`.
    pub fn key_cells(&self, j: usize) -> &[Cell] {
        if j == 1 {
            &self.s1
        } else {
            &self.s2
        }
    }

    /// Index of `c` under `π_{p_j,y}⁻¹`: 0 for the origin, `i ≥ 1` for the
    /// `i`-th key cell, `−rank` for complement cells.
    fn index_in(&self, j: usize, c: Cell) -> i128 {
        if c == ORIGIN {
            return 0;
        }
        let (pos, ex) = if j == 1 { (&self.s1_pos, &self.ex1) } else { (&self.s2_pos, &self.ex2) };
        match pos.get(&c) {
            Some(&i) => i as i128 + 1,
            None => -(complement_rank(ex, ring_index(c)) as i128),
        }
    }

    /// `π_{p_j,y}(i)`.
    fn cell_in(&self, j: usize, i: i128) -> Cell {
        let (s, ex) = if j == 1 { (&self.s1, &self.ex1) } else { (&self.s2, &self.ex2) };
        if i == 0 {
            ORIGIN
        } else if i > 0 {
            s[i as usize - 1]
        } else {
            complement_enumerate(ex, i.unsigned_abs()).expect("rank is positive")
        }
    }

    pub fn pi_apply(&self, c: Cell, dir: Direction) -> Cell {
        match dir {
            Direction::Forward => self.cell_in(1, self.index_in(2, c)),
            Direction::Inverse => self.cell_in(2, self.index_in(1, c)),
        }
    }

    /// Position `m` (1-based key index) if `c` is a key cell of list 2.
    pub fn key_of_s2(&self, c: Cell) -> Option<u64> {
        self.s2_pos.get(&c).map(|&i| self.keys[i])
    }

    pub fn key_of_s1(&self, c: Cell) -> Option<u64> {
        self.s1_pos.get(&c).map(|&i| self.keys[i])
    }

    /// `(Ψ ω)(c) = ω(π c) ⊕ [c ∈ S(2)]` (origin fixed, `π` fixes it too).
    pub fn psi_forward<F: Fn(Cell) -> u8>(&self, omega: F, c: Cell) -> u8 {
        let flip = self.s2_pos.contains_key(&c) as u8;
        omega(self.pi_apply(c, Direction::Forward)) ^ flip
    }

    /// `(Ψ⁻¹ η)(c) = η(π⁻¹ c) ⊕ [c ∈ S(1)]`.
    pub fn psi_inverse<F: Fn(Cell) -> u8>(&self, eta: F, c: Cell) -> u8 {
        let flip = self.s1_pos.contains_key(&c) as u8;
        eta(self.pi_apply(c, Direction::Inverse)) ^ flip
    }
}

pub fn pi_apply(view: &PermutationView, c: Cell, dir: Direction) -> Cell {
    view.pi_apply(c, dir)
}

pub fn psi_value(view: &PermutationView, cfg: &OmegaConfig, c: Cell, dir: Direction) -> u8 {
    match dir {
        Direction::Forward => view.psi_forward(|x| cfg.bit(x), c),
        Direction::Inverse => view.psi_inverse(|x| cfg.bit(x), c),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairTag {
    KeyFlipHit,
    IndependentCells,
    SameCellNoflip,
    FlipCollision,
}

impl PairTag {
    pub fn as_str(self) -> &'static str {
        match self {
            PairTag::KeyFlipHit => "key_flip_hit",
            PairTag::IndependentCells => "independent_cells",
            PairTag::SameCellNoflip => "same_cell_noflip",
            PairTag::FlipCollision => "flip_collision",
        }
    }

    pub fn value(self) -> f64 {
        match self {
            PairTag::KeyFlipHit | PairTag::FlipCollision => 0.0,
            PairTag::IndependentCells => 0.25,
            PairTag::SameCellNoflip => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairProb {
    pub value: f64,
    pub tag: PairTag,
}

/// `ν(ω(a) = 0 and (Ψ ω)(b) = 0)` with `a = S_{p₁(n)}`, `b = S_{p₂(n)}`.
pub fn pair_probability(view: &PermutationView, n: u64) -> Result<PairProb> {
    let (a, b) = view.cells_at(n)?;
    // (Ψ ω)(b) = ω(c) ⊕ flip
    let (c, flip_key) = if b == ORIGIN {
        (b, None)
    } else if let Some(m) = view.key_of_s2(b) {
        (view.pi_apply(b, Direction::Forward), Some(m))
    } else {
        (view.pi_apply(b, Direction::Forward), None)
    };
    let tag = match (c == a, flip_key) {
        (false, _) => PairTag::IndependentCells,
        (true, None) => PairTag::SameCellNoflip,
        (true, Some(m)) if m == n => PairTag::KeyFlipHit,
        (true, Some(_)) => PairTag::FlipCollision,
    };
    Ok(PairProb { value: tag.value(), tag })
}

/// `ν`-frequency of the pair event over `seeds` configurations, evaluated
/// through [`PermutationView::psi_forward`] rather than the case analysis.
pub fn pair_probability_mc(view: &PermutationView, n: u64, seeds: u64, master: u64) -> Result<f64> {
    let (a, b) = view.cells_at(n)?;
    let hits = (0..seeds)
        .filter(|&s| {
            let cfg = OmegaConfig::new(derive_seed(master, s));
            cfg.bit(a) == 0 && view.psi_forward(|x| cfg.bit(x), b) == 0
        })
        .count();
    Ok(hits as f64 / seeds as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceRow {
    pub k: usize,
    pub n_k: u128,
    pub a_n: f64,
    pub se_n: f64,
    pub m_k: u128,
    pub a_m: f64,
    pub se_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    pub rows: Vec<DivergenceRow>,
    pub tag_counts: Vec<(PairTag, u64)>,
}

impl DivergenceReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["k", "N_k", "A_N", "M_k", "A_M", "stderr"]);
        for r in &self.rows {
            t.push(vec![
                r.k.to_string(),
                r.n_k.to_string(),
                fmt_float(r.a_n),
                r.m_k.to_string(),
                fmt_float(r.a_m),
                fmt_float(r.se_n.max(r.se_m)),
            ]);
        }
        t
    }

    pub fn row(&self, k: usize) -> Option<&DivergenceRow> {
        self.rows.iter().find(|r| r.k == k)
    }
}

/// Builds the view of the `i`-th sampled trajectory for `(p₁, p₂)`.
pub fn model_view(
    p1: &IntPolynomial,
    p2: &IntPolynomial,
    epochs: &EpochSchedule,
    n_cap: u64,
    seed: u64,
    i: u64,
    tol_l2sq: f64,
) -> Result<PermutationView> {
    let horizon = p1.time(n_cap as u128)?.max(p2.time(n_cap as u128)?);
    let t = polyrange::model_trajectory(seed, i, 2, horizon, tol_l2sq)?;
    let mut ev = Evaluator::new(&t);
    let r1 = polyrange::range_profile(&mut ev, p1, n_cap)?;
    let r2 = if p2 == p1 { r1.clone() } else { polyrange::range_profile(&mut ev, p2, n_cap)? };
    PermutationView::new(&r1, &r2, epochs, n_cap)
}

/// Per-view prefix sums `Σ_{n<N} pair_probability(n)` for every epoch end.
pub fn view_averages(view: &PermutationView, epochs: &EpochSchedule) -> Result<(Vec<f64>, Vec<f64>, HashMap<PairTag, u64>)> {
    let last = *epochs.m.last().unwrap() as u64;
    let mut tags = HashMap::new();
    let mut prefix = Vec::with_capacity(last as usize + 1);
    let mut acc = 0.0;
    prefix.push(0.0);
    for n in 0..last {
        let pp = pair_probability(view, n)?;
        *tags.entry(pp.tag).or_insert(0) += 1;
        acc += pp.value;
        prefix.push(acc);
    }
    let avg = |x: u128| prefix[x as usize] / x as f64;
    Ok((epochs.n.iter().map(|&x| avg(x)).collect(), epochs.m.iter().map(|&x| avg(x)).collect(), tags))
}

pub fn divergence_averages(
    p1: &IntPolynomial,
    p2: &IntPolynomial,
    epochs: &EpochSchedule,
    y_samples: usize,
    master_seed: u64,
    tol_l2sq: f64,
) -> Result<DivergenceReport> {
    polyrange::validate_poly(p1, PolyContext::Deg2Plus)?;
    polyrange::validate_poly(p2, PolyContext::Deg2Plus)?;
    if y_samples == 0 {
        return Err(Error::Param("need at least one trajectory".into()));
    }
    let n_cap = *epochs.m.last().unwrap() as u64;
    let per = (0..y_samples as u64)
        .into_par_iter()
        .map(|i| {
            let view = model_view(p1, p2, epochs, n_cap, master_seed, i, tol_l2sq)?;
            view_averages(&view, epochs)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(epochs.depth());
    for k in 0..epochs.depth() {
        let an: Vec<f64> = per.iter().map(|p| p.0[k]).collect();
        let am: Vec<f64> = per.iter().map(|p| p.1[k]).collect();
        let (a_n, se_n) = stats::mean_se(&an);
        let (a_m, se_m) = stats::mean_se(&am);
        rows.push(DivergenceRow { k: k + 1, n_k: epochs.n[k], a_n, se_n, m_k: epochs.m[k], a_m, se_m });
    }
    let mut totals: HashMap<PairTag, u64> = HashMap::new();
    for p in &per {
        for (&t, &c) in &p.2 {
            *totals.entry(t).or_insert(0) += c;
        }
    }
    let mut tag_counts: Vec<(PairTag, u64)> = totals.into_iter().collect();
    tag_counts.sort_by_key(|t| t.0.as_str());
    Ok(DivergenceReport { rows, tag_counts })
}

/// The walk `t ↦ S_{s+t} − S_s`, i.e. the orbit read from time `s`.
pub struct ShiftedWalk<'a, W: Walk + ?Sized> {
    base: &'a mut W,
    shift: u128,
    origin: Vec<i64>,
}

impl<'a, W: Walk + ?Sized> ShiftedWalk<'a, W> {
    pub fn new(base: &'a mut W, shift: u128) -> Result<Self> {
        let origin = base.at(shift)?;
        Ok(ShiftedWalk { base, shift, origin })
    }
}

impl<W: Walk + ?Sized> Walk for ShiftedWalk<'_, W> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn horizon(&self) -> u128 {
        self.base.horizon().saturating_sub(self.shift)
    }

    fn at(&mut self, t: u128) -> Result<Vec<i64>> {
        let v = self.base.at(self.shift + t)?;
        Ok(v.iter().zip(&self.origin).map(|(a, b)| a - b).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    /// `S_{p(n)} = 0`.
    Origin(u64),
    /// `S_{p(n)} = S_{p(j)}` with `j < n`.
    Repeat { j: u64, n: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Membership {
    pub member: bool,
    pub first_violation: Option<Violation>,
    pub horizon_n: u64,
    /// `S_{p(n)}`, `n = 1..=horizon_n`, packed (the flip set when a member).
    pub points: Vec<i128>,
}

/// Finite-horizon test of the pairwise-distinct, origin-avoiding property.
pub fn cp_membership<W: Walk + ?Sized>(walk: &mut W, p: &IntPolynomial, horizon_n: u64) -> Result<Membership> {
    let rec = polyrange::range_profile(walk, p, horizon_n)?;
    let mut first = None;
    for n in 1..=horizon_n {
        let key = rec.point(n);
        if key == 0 {
            first = Some(Violation::Origin(n));
            break;
        }
        let j = rec.index[&key];
        if j < n {
            first = Some(Violation::Repeat { j, n });
            break;
        }
    }
    Ok(Membership { member: first.is_none(), first_violation: first, horizon_n, points: rec.points })
}

pub fn monomial_poly(l: i128, d: u32) -> Result<IntPolynomial> {
    if d < 3 || l < 1 {
        return Err(Error::Param("recurrence polynomials are L·n^d with L ≥ 1, d ≥ 3".into()));
    }
    Ok(IntPolynomial::monomial(l, d as usize))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TripleTag {
    /// `y` passes: `S^{p(n)}` reads the flipped cell, contradiction.
    FlippedCell,
    /// `y` fails and `S_{p(n)}` is the origin.
    OriginCell,
    /// `y` fails; two distinct fair cells.
    IndependentCells,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TripleStatus {
    Exact { value: f64, tag: TripleTag, base_member: bool, shifted_member: bool },
    Indeterminate,
}

/// `ν(ω(0) = 0, ω(a) = 0, (S^{p(n)}-cell) = 0)` for one base trajectory,
/// `a = S_{p(n)}`, with membership of `y` and its `p(n)`-shift checked up
/// to `horizon_n`. The base walk must reach `p(n) + p(horizon_n)`.
pub fn triple_probability<W: Walk + ?Sized>(
    walk: &mut W,
    p: &IntPolynomial,
    n: u64,
    horizon_n: u64,
) -> Result<TripleStatus> {
    if n == 0 || n > horizon_n {
        return Ok(TripleStatus::Indeterminate);
    }
    let base = cp_membership(walk, p, horizon_n)?;
    let shift = p.time(n as u128)?;
    let shifted = cp_membership(&mut ShiftedWalk::new(walk, shift)?, p, horizon_n)?;
    let a = base.points[n as usize - 1];
    let (value, tag) = if base.member {
        (0.0, TripleTag::FlippedCell)
    } else if a == 0 {
        (0.5, TripleTag::OriginCell)
    } else {
        (0.25, TripleTag::IndependentCells)
    };
    Ok(TripleStatus::Exact { value, tag, base_member: base.member, shifted_member: shifted.member })
}

/// Monte Carlo of the triple event with explicit flip sets: `Ψ_y` flips
/// `{S_{p(m)}(y)}` when `y` passes, `Ψ_{y'}` likewise for the shift.
pub fn triple_probability_mc<W: Walk + ?Sized>(
    walk: &mut W,
    p: &IntPolynomial,
    n: u64,
    horizon_n: u64,
    seeds: u64,
    master: u64,
) -> Result<f64> {
    let base = cp_membership(walk, p, horizon_n)?;
    let shift = p.time(n as u128)?;
    let shifted = cp_membership(&mut ShiftedWalk::new(walk, shift)?, p, horizon_n)?;
    let flips = |m: &Membership| -> std::collections::HashSet<i128> {
        if m.member {
            m.points.iter().copied().collect()
        } else {
            Default::default()
        }
    };
    let (fy, fy2) = (flips(&base), flips(&shifted));
    let a = base.points[n as usize - 1];
    let ac = unpack(a);
    let hits = (0..seeds)
        .filter(|&s| {
            let cfg = OmegaConfig::new(derive_seed(master, s));
            let w0 = cfg.bit(ORIGIN);
            let wa = cfg.bit(ac);
            // (Ψ_y ω)(a), shifted to the origin, then Ψ_{y'}⁻¹ at the origin
            let psi_a = wa ^ fy.contains(&a) as u8;
            let s_cell = psi_a ^ fy2.contains(&0) as u8;
            w0 == 0 && wa == 0 && s_cell == 0
        })
        .count();
    Ok(hits as f64 / seeds as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpCertificate {
    pub l: i128,
    pub d: u32,
    pub beta: f64,
    pub horizon: u64,
    pub samples: usize,
    pub empirical: f64,
    pub sampling_error: f64,
    pub tail_bound: f64,
    pub lower_bound: f64,
}

/// Largest `n` of the grid `2^0..2^BETA_LOG_MAX` used to measure `β`.
pub const BETA_LOG_MAX: u32 = 10;

/// Truncation tolerance for the `β` laws; the dropped-layer bound enters
/// the inflation, so it must be small.
pub const BETA_TOL: f64 = 1e-9;

/// `β ≥ n · sup_x P(S_n = x)` on the grid, each component inflated by its
/// trimmed mass and by `P(dropped layers ≠ 0) ≤ E R²`.
pub fn measure_beta() -> Result<f64> {
    let ns: Vec<u128> = (0..=BETA_LOG_MAX).map(|e| 1u128 << e).collect();
    let vals = ns
        .par_iter()
        .map(|&n| {
            let (law, residual) = cocycle::exact_law_s(n, BETA_TOL)?;
            let pmax = law.max_prob() + law.defect() + residual;
            Ok(n as f64 * pmax * pmax)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// `Σ_{m>H} Σ_{t=1}^{m−1} 1/(m² + t³)`, exact up to `m = m1` and bounded
/// beyond by `∫ dt/(m² + t³) ≤ c₃ m^{−4/3}`, `c₃ = 2π/(3√3)`.
pub fn pair_tail_series(h: u64, m1: u64) -> f64 {
    let m1 = m1.max(h + 1);
    let mut exact = 0.0;
    for m in h + 1..=m1 {
        let m2 = (m * m) as f64;
        // smallest terms first
        for t in (1..m).rev() {
            let tf = t as f64;
            exact += 1.0 / (m2 + tf * tf * tf);
        }
    }
    let c3 = 2.0 * std::f64::consts::PI / (3.0 * 3f64.sqrt());
    exact + 3.0 * c3 * (m1 as f64).powf(-1.0 / 3.0)
}

/// `Σ_{n>H} 1/n^d ≤ 1/((d−1) H^{d−1})`.
pub fn origin_tail_series(h: u64, d: u32) -> f64 {
    1.0 / ((d as f64 - 1.0) * (h as f64).powi(d as i32 - 1))
}

pub const TAIL_EXACT_M: u64 = 10_000;

pub fn cp_tail_bound(beta: f64, l: i128, d: u32, h: u64) -> f64 {
    beta / l as f64 * (pair_tail_series(h, TAIL_EXACT_M) + origin_tail_series(h, d))
}

pub fn cp_certificate(l: i128, d: u32, horizon_n: u64, samples: usize, seed: u64, tol_l2sq: f64) -> Result<CpCertificate> {
    let p = monomial_poly(l, d)?;
    if samples == 0 {
        return Err(Error::Param("need at least one trajectory".into()));
    }
    let horizon = p.time(horizon_n as u128)?;
    let members = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let t = polyrange::model_trajectory(seed, i, 2, horizon, tol_l2sq)?;
            Ok(cp_membership(&mut Evaluator::new(&t), &p, horizon_n)?.member)
        })
        .collect::<Result<Vec<bool>>>()?;
    let hits = members.iter().filter(|&&m| m).count() as u64;
    let empirical = hits as f64 / samples as f64;
    let cp = stats::clopper_pearson_lower(hits, samples as u64, 0.95);
    let beta = measure_beta()?;
    let tail_bound = cp_tail_bound(beta, l, d, horizon_n);
    Ok(CpCertificate {
        l,
        d,
        beta,
        horizon: horizon_n,
        samples,
        empirical,
        sampling_error: empirical - cp,
        tail_bound,
        lower_bound: cp - tail_bound,
    })
}

/// Cylinder `[z]_F`: cells with prescribed bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cylinder {
    pub cells: Vec<Cell>,
    pub bits: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CylinderCheck {
    pub cylinder: Cylinder,
    pub frequency: f64,
    pub expected: f64,
    pub sigma: f64,
    pub pass: bool,
}

/// Frequency of `{Ψ ω ∈ [z]_F}` over `seeds` configurations.
pub fn cylinder_frequency(view: &PermutationView, cyl: &Cylinder, seeds: u64, master: u64, width: f64) -> CylinderCheck {
    // π and the flip pattern do not depend on ω
    let resolved: Vec<(Cell, u8)> = cyl
        .cells
        .iter()
        .map(|&c| (view.pi_apply(c, Direction::Forward), view.key_of_s2(c).is_some() as u8))
        .collect();
    let hits = (0..seeds)
        .into_par_iter()
        .filter(|&s| {
            let cfg = OmegaConfig::new(derive_seed(master, s));
            resolved.iter().zip(&cyl.bits).all(|(&(c, f), &z)| (cfg.bit(c) ^ f) == z)
        })
        .count();
    let expected = 0.5f64.powi(cyl.cells.len() as i32);
    let sigma = stats::binomial_sigma(expected, seeds);
    let frequency = hits as f64 / seeds as f64;
    CylinderCheck { cylinder: cyl.clone(), frequency, expected, sigma, pass: (frequency - expected).abs() <= width * sigma }
}

pub fn pair_table(view: &PermutationView, ns: &[u64]) -> Result<Table> {
    let mut t = Table::new(&["n", "pair_prob", "tag"]);
    for &n in ns {
        let pp = pair_probability(view, n)?;
        t.push(vec![n.to_string(), fmt_float(pp.value), pp.tag.as_str().into()]);
    }
    Ok(t)
}
