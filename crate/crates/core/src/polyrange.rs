//! The cocycle read at polynomial times: ranges `R_N^{(p)}`, first-visit
//! sets `K^{(p)}`, the full-orbit range `A_N`, growth inequalities for
//! polynomials, and the epoch set `J` with key sets.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::cocycle::{Evaluator, LayerTrajectory};
use crate::error::{Error, Result};
use crate::mixer::derive_seed;
use crate::report::{fmt_float, Table};
use crate::stats;

/// Integer polynomial, constant term first, no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntPolynomial {
    coeffs: Vec<i128>,
}

impl IntPolynomial {
    pub fn new(mut coeffs: Vec<i128>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0);
        }
        IntPolynomial { coeffs }
    }

    /// `c · n^d`.
    pub fn monomial(c: i128, d: usize) -> Self {
        let mut v = vec![0; d + 1];
        v[d] = c;
        Self::new(v)
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> i128 {
        *self.coeffs.last().unwrap()
    }

    /// Exact evaluation; overflow of `i128` is an error.
    pub fn eval(&self, n: i128) -> Result<i128> {
        let mut acc: i128 = 0;
        for &c in self.coeffs.iter().rev() {
            acc = acc
                .checked_mul(n)
                .and_then(|a| a.checked_add(c))
                .ok_or_else(|| Error::Overflow(format!("{self} at n={n}")))?;
        }
        Ok(acc)
    }

    /// `p(n)` as a time index: must be non-negative.
    pub fn time(&self, n: u128) -> Result<u128> {
        let v = self.eval(i128::try_from(n).map_err(|_| Error::Overflow("index".into()))?)?;
        u128::try_from(v).map_err(|_| Error::Param(format!("{self} is negative at n={n}")))
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0 && !(self.coeffs.len() == 1) {
                continue;
            }
            if !first {
                write!(f, "{}", if c < 0 { "-" } else { "+" })?;
            } else if c < 0 {
                write!(f, "-")?;
            }
            first = false;
            let a = c.unsigned_abs();
            match i {
                0 => write!(f, "{a}")?,
                _ => {
                    if a != 1 {
                        write!(f, "{a}*")?;
                    }
                    if i == 1 {
                        write!(f, "n")?;
                    } else {
                        write!(f, "n^{i}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl FromStr for IntPolynomial {
    type Err = Error;

    /// Accepts sums of terms `c`, `c*n`, `n^k`, `c*n^k` (the `*` optional).
    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(Error::Poly("empty polynomial".into()));
        }
        let bad = |why: &str| Error::Poly(format!("cannot parse `{s}`: {why}"));
        let mut coeffs: Vec<i128> = Vec::new();
        let b = s.as_bytes();
        let mut i = 0;
        while i < b.len() {
            let mut sign = 1i128;
            if b[i] == b'+' || b[i] == b'-' {
                if b[i] == b'-' {
                    sign = -1;
                }
                i += 1;
            } else if i > 0 {
                return Err(bad("expected + or -"));
            }
            let start = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            let coef: Option<i128> = if i > start {
                Some(s[start..i].parse().map_err(|_| bad("coefficient out of range"))?)
            } else {
                None
            };
            if i < b.len() && b[i] == b'*' {
                if coef.is_none() {
                    return Err(bad("`*` without a coefficient"));
                }
                i += 1;
                if i >= b.len() || b[i] != b'n' {
                    return Err(bad("expected `n` after `*`"));
                }
            }
            let mut deg = 0usize;
            if i < b.len() && b[i] == b'n' {
                i += 1;
                deg = 1;
                if i < b.len() && b[i] == b'^' {
                    i += 1;
                    let ds = i;
                    while i < b.len() && b[i].is_ascii_digit() {
                        i += 1;
                    }
                    if ds == i {
                        return Err(bad("missing exponent"));
                    }
                    deg = s[ds..i].parse().map_err(|_| bad("exponent out of range"))?;
                    if deg > 64 {
                        return Err(bad("exponent above 64"));
                    }
                }
            } else if coef.is_none() {
                return Err(bad("empty term"));
            }
            let c = sign * coef.unwrap_or(1);
            if coeffs.len() <= deg {
                coeffs.resize(deg + 1, 0);
            }
            coeffs[deg] = coeffs[deg].checked_add(c).ok_or_else(|| bad("coefficient overflow"))?;
        }
        Ok(IntPolynomial::new(coeffs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyContext {
    /// Degree ≥ 2, positive leading coefficient, `p(1) ≥ 1`, strictly
    /// increasing on `n ≥ 1`.
    Deg2Plus,
    Any,
}

pub fn validate_poly(p: &IntPolynomial, ctx: PolyContext) -> Result<()> {
    if ctx == PolyContext::Any {
        return Ok(());
    }
    if p.degree() < 2 {
        return Err(Error::Poly(format!("`{p}` has degree {} (need ≥ 2)", p.degree())));
    }
    if p.leading() <= 0 {
        return Err(Error::Poly(format!(
            "`{p}` has non-positive leading coefficient (use the inverse maps instead)"
        )));
    }
    if p.eval(1)? < 1 {
        return Err(Error::Poly(format!("`{p}` is below 1 at n=1")));
    }
    // p(n+1) − p(n) has positive leading coefficient; past the Cauchy root
    // bound of that difference it stays positive, so checking up to it suffices
    let diff = difference(p)?;
    let lead = diff.leading() as f64;
    let bound = 1.0 + diff.coeffs().iter().map(|&c| (c as f64 / lead).abs()).fold(0.0, f64::max);
    let upto = (bound.ceil() as i128).clamp(1, 1 << 20);
    for n in 1..=upto {
        if diff.eval(n)? <= 0 {
            return Err(Error::Poly(format!("`{p}` is not increasing at n={n}")));
        }
    }
    Ok(())
}

/// `p(n + 1) − p(n)` as a polynomial.
fn difference(p: &IntPolynomial) -> Result<IntPolynomial> {
    let d = p.degree();
    let mut out = vec![0i128; d.max(1)];
    // (n+1)^i = Σ_j C(i, j) n^j
    for (i, &c) in p.coeffs().iter().enumerate() {
        let mut binom: i128 = 1;
        for j in 0..i {
            // binom = C(i, j)
            let term = c.checked_mul(binom).ok_or_else(|| Error::Overflow("difference".into()))?;
            out[j] += term;
            binom = binom * (i - j) as i128 / (j + 1) as i128;
        }
    }
    Ok(IntPolynomial::new(out))
}

/// A `Z^D`-valued walk `t ↦ S_t` readable at arbitrary times.
pub trait Walk {
    fn dim(&self) -> usize;
    fn horizon(&self) -> u128;
    fn at(&mut self, t: u128) -> Result<Vec<i64>>;
}

impl Walk for Evaluator {
    fn dim(&self) -> usize {
        self.trajectory().dim
    }

    fn horizon(&self) -> u128 {
        self.trajectory().horizon
    }

    fn at(&mut self, t: u128) -> Result<Vec<i64>> {
        self.cocycle_at(t)
    }
}

/// Walk given by a closure, for injected test paths.
pub struct FnWalk<F> {
    dim: usize,
    horizon: u128,
    f: F,
}

impl<F: FnMut(u128) -> Vec<i64>> FnWalk<F> {
    pub fn new(dim: usize, horizon: u128, f: F) -> Self {
        FnWalk { dim, horizon, f }
    }
}

impl<F: FnMut(u128) -> Vec<i64>> Walk for FnWalk<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn horizon(&self) -> u128 {
        self.horizon
    }

    fn at(&mut self, t: u128) -> Result<Vec<i64>> {
        if t > self.horizon {
            return Err(Error::Horizon(format!("time {t} beyond horizon {}", self.horizon)));
        }
        Ok((self.f)(t))
    }
}

/// The constant walk at the origin.
pub fn zero_walk(dim: usize, horizon: u128) -> FnWalk<impl FnMut(u128) -> Vec<i64>> {
    FnWalk::new(dim, horizon, move |_| vec![0; dim])
}

/// Packs a point of `Z¹` or `Z²` into one collision-free key.
pub fn pack(x: &[i64]) -> Result<i128> {
    match x {
        [a] => Ok((*a as i128) << 64),
        [a, b] => Ok(((*a as i128) << 64) | (*b as u64 as i128)),
        _ => Err(Error::Param(format!("point keys support D ≤ 2, got D = {}", x.len()))),
    }
}

pub fn unpack(key: i128) -> (i64, i64) {
    ((key >> 64) as i64, key as u64 as i64)
}

/// `S_{p(n)}`, `n = 1..=N`, with first-visit bookkeeping.
#[derive(Debug, Clone, Default)]
pub struct RangeRecord {
    /// `points[n − 1] = S_{p(n)}`, packed.
    pub points: Vec<i128>,
    /// `sizes[n − 1] = |R_n^{(p)}|`.
    pub sizes: Vec<u64>,
    /// `first[n − 1]` iff `n ∈ K^{(p)}`.
    pub first: Vec<bool>,
    /// Point → smallest `n` with `S_{p(n)}` equal to it.
    pub index: HashMap<i128, u64>,
}

impl RangeRecord {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `K^{(p)} ∩ [1, N]`, ascending.
    pub fn key_indices(&self) -> Vec<u64> {
        (1..=self.first.len() as u64).filter(|&n| self.first[n as usize - 1]).collect()
    }

    pub fn in_k(&self, n: u64) -> bool {
        n >= 1 && (n as usize) <= self.first.len() && self.first[n as usize - 1]
    }

    pub fn point(&self, n: u64) -> i128 {
        self.points[n as usize - 1]
    }

    /// `|K ∩ [0, n]|` for `n ≤ N`.
    pub fn key_count(&self, n: u64) -> u64 {
        self.first[..n as usize].iter().filter(|&&b| b).count() as u64
    }
}

pub fn range_profile<W: Walk + ?Sized>(walk: &mut W, p: &IntPolynomial, n_max: u64) -> Result<RangeRecord> {
    let mut rec = RangeRecord {
        points: Vec::with_capacity(n_max as usize),
        sizes: Vec::with_capacity(n_max as usize),
        first: Vec::with_capacity(n_max as usize),
        index: HashMap::with_capacity(n_max as usize),
    };
    if n_max > 0 {
        let t = p.time(n_max as u128)?;
        if t > walk.horizon() {
            return Err(Error::Horizon(format!("{p} at N={n_max} is {t}, beyond horizon {}", walk.horizon())));
        }
    }
    let origin = 0i128;
    for n in 1..=n_max {
        let key = pack(&walk.at(p.time(n as u128)?)?)?;
        let fresh = !rec.index.contains_key(&key);
        if fresh {
            rec.index.insert(key, n);
        }
        rec.points.push(key);
        rec.first.push(fresh && key != origin);
        rec.sizes.push(rec.index.len() as u64);
    }
    Ok(rec)
}

/// `|A_n|` for `n = 1..=N`: distinct values among `S_0, …, S_{n−1}`.
pub fn full_range_profile<W: Walk + ?Sized>(walk: &mut W, n_max: u64) -> Result<Vec<u64>> {
    if n_max as u128 > walk.horizon() + 1 {
        return Err(Error::Horizon(format!("A_N needs S up to {}, horizon {}", n_max - 1, walk.horizon())));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n_max as usize);
    for m in 0..n_max {
        seen.insert(pack(&walk.at(m as u128)?)?);
        out.push(seen.len() as u64);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeMomentRow {
    pub n: u64,
    /// `mean |R_n| / n` and its standard error.
    pub mean_ratio: f64,
    pub mean_se: f64,
    /// `Var |R_n| / n^{3/2}`.
    pub var_scaled: f64,
    /// `(1 − mean/n) √n`.
    pub k_fit: f64,
}

/// Trajectory seeds `derive_seed(seed, i)` with horizon `p(max n)`.
pub fn model_trajectory(seed: u64, i: u64, dim: usize, horizon: u128, tol_l2sq: f64) -> Result<LayerTrajectory> {
    LayerTrajectory::new(derive_seed(seed, i), dim, horizon, tol_l2sq)
}

pub fn range_moments_mc(
    p: &IntPolynomial,
    n_grid: &[u64],
    samples: usize,
    seed: u64,
    tol_l2sq: f64,
) -> Result<Vec<RangeMomentRow>> {
    if samples < 30 {
        return Err(Error::Param("range moments need at least 30 samples".into()));
    }
    let n_max = *n_grid.iter().max().ok_or_else(|| Error::Param("empty grid".into()))?;
    let horizon = p.time(n_max as u128)?;
    let per: Vec<Vec<u64>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let t = model_trajectory(seed, i, 2, horizon, tol_l2sq)?;
            let rec = range_profile(&mut Evaluator::new(&t), p, n_max)?;
            Ok(n_grid.iter().map(|&n| rec.sizes[n as usize - 1]).collect())
        })
        .collect::<Result<_>>()?;
    Ok(n_grid
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let xs: Vec<f64> = per.iter().map(|r| r[j] as f64).collect();
            let (m, se) = stats::mean_se(&xs);
            let nf = n as f64;
            RangeMomentRow {
                n,
                mean_ratio: m / nf,
                mean_se: se / nf,
                var_scaled: stats::sample_var(&xs) / nf.powf(1.5),
                k_fit: (1.0 - m / nf) * nf.sqrt(),
            }
        })
        .collect())
}

pub fn range_table(rows: &[RangeMomentRow]) -> Table {
    let mut t = Table::new(&["n", "mean_ratio", "mean_se", "var_scaled", "k_fit"]);
    for r in rows {
        t.push(vec![
            r.n.to_string(),
            fmt_float(r.mean_ratio),
            fmt_float(r.mean_se),
            fmt_float(r.var_scaled),
            fmt_float(r.k_fit),
        ]);
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthCheck {
    /// `min (p(n) − p(k)) / (n + (n − k)²)` over `1 ≤ k < n ≤ n_max`.
    pub gamma_fit: f64,
    pub worst: (u64, u64),
    pub pass: bool,
}

/// Exhaustive check of `p(n) − p(k) ≥ γ (n + (n − k)²)`.
pub fn growth_claims_check(p: &IntPolynomial, gamma: f64, n_max: u64) -> Result<GrowthCheck> {
    if p.degree() < 2 {
        return Err(Error::Poly(format!("`{p}` has degree below 2")));
    }
    let vals: Vec<i128> = (0..=n_max).map(|n| p.eval(n as i128)).collect::<Result<_>>()?;
    let mut best = (f64::INFINITY, (0, 0));
    for n in 2..=n_max {
        for k in 1..n {
            let r = (vals[n as usize] - vals[k as usize]) as f64 / (n + (n - k) * (n - k)) as f64;
            if r < best.0 {
                best = (r, (n, k));
            }
        }
    }
    Ok(GrowthCheck { gamma_fit: best.0, worst: best.1, pass: best.0 >= gamma })
}

/// Exhaustive check of `L(n^d − k^d) ≥ L(n² + (n − k)³)`; returns the
/// first counterexample if any.
pub fn claim2_check(d: u32, l: i128, n_max: u64) -> Result<Option<(u64, u64)>> {
    if d < 3 {
        return Err(Error::Param("the cubic growth claim needs d ≥ 3".into()));
    }
    let p = IntPolynomial::monomial(l, d as usize);
    let vals: Vec<i128> = (0..=n_max).map(|n| p.eval(n as i128)).collect::<Result<_>>()?;
    for n in 2..=n_max {
        for k in 1..n {
            let (ni, ti) = (n as i128, (n - k) as i128);
            let rhs = l
                .checked_mul(ni * ni + ti * ti * ti)
                .ok_or_else(|| Error::Overflow("claim rhs".into()))?;
            if vals[n as usize] - vals[k as usize] < rhs {
                return Ok(Some((n, k)));
            }
        }
    }
    Ok(None)
}

/// Epochs `(N_k, M_k]` of the set `J`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochSchedule {
    pub n: Vec<u128>,
    pub m: Vec<u128>,
}

pub const EPOCH_GUARD: usize = 24;

pub fn build_epochs(c1: u128, c2: u128, depth: usize) -> Result<EpochSchedule> {
    if c1 < 2 || c2 < 2 {
        return Err(Error::Param("epoch multipliers must be ≥ 2".into()));
    }
    if depth == 0 || depth > EPOCH_GUARD {
        return Err(Error::Param(format!("epoch depth must lie in 1..={EPOCH_GUARD}")));
    }
    let ovf = || Error::Overflow("epoch recurrence".into());
    let mut n = vec![32u128];
    let mut m = Vec::with_capacity(depth);
    for k in 1..=depth as u128 {
        let nk = *n.last().unwrap();
        let mk = nk.checked_mul(k * c1).ok_or_else(ovf)?;
        m.push(mk);
        if (k as usize) < depth {
            n.push(mk.checked_mul(k * c2).ok_or_else(ovf)?);
        }
    }
    let e = EpochSchedule { n, m };
    e.check()?;
    Ok(e)
}

impl EpochSchedule {
    pub fn depth(&self) -> usize {
        self.n.len()
    }

    fn check(&self) -> Result<()> {
        for k in 0..self.depth() {
            if self.n[k] >= self.m[k] || (k + 1 < self.depth() && self.m[k] >= self.n[k + 1]) {
                return Err(Error::Param("epochs must interleave N_k < M_k < N_{k+1}".into()));
            }
        }
        // ratios compared exactly by cross-multiplication
        for k in 1..self.depth() {
            if self.m[k] * self.n[k - 1] <= self.m[k - 1] * self.n[k] {
                return Err(Error::Param(format!("M_k/N_k not increasing at k={}", k + 1)));
            }
            if k + 1 < self.depth() && self.n[k + 1] * self.m[k - 1] <= self.n[k] * self.m[k] {
                return Err(Error::Param(format!("N_{{k+1}}/M_k not increasing at k={}", k + 1)));
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: u128) -> bool {
        self.n.iter().zip(&self.m).any(|(&a, &b)| x > a && x <= b)
    }

    /// `|J ∩ [0, x]|`.
    pub fn count_upto(&self, x: u128) -> u128 {
        self.n.iter().zip(&self.m).map(|(&a, &b)| if x <= a { 0 } else { x.min(b) - a }).sum()
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["k", "N_k", "M_k"]);
        for k in 0..self.depth() {
            t.push(vec![(k + 1).to_string(), self.n[k].to_string(), self.m[k].to_string()]);
        }
        t
    }
}

/// `𝒦_y ∩ [1, N]` from the two range records.
pub fn key_set(r1: &RangeRecord, r2: &RangeRecord, epochs: &EpochSchedule, n_max: u64) -> Result<Vec<u64>> {
    if (r1.len() as u64) < n_max || (r2.len() as u64) < n_max {
        return Err(Error::Horizon(format!("range records shorter than N={n_max}")));
    }
    Ok((1..=n_max).filter(|&n| r1.in_k(n) && r2.in_k(n) && epochs.contains(n as u128)).collect())
}
