//! Exact probability mass functions on integer intervals.
//!
//! A [`LatticeDist`] is a dense mass vector starting at `offset` plus a
//! `defect`: mass deliberately dropped by [`tail_truncate`]. Every operation
//! keeps `Σ mass + defect` equal to the input total up to rounding, so gap
//! reports can carry a certified defect term.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Direct convolution is used while `nnz(a)·|b|` stays below this.
pub const DEFAULT_FFT_THRESHOLD: usize = 1 << 22;

/// Relative level below which FFT convolution outputs are treated as zero.
pub const FFT_NOISE: f64 = 1e-14;

/// Hard cap on the length of any mass vector.
pub const MAX_SUPPORT: usize = 1 << 27;

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDist {
    offset: i64,
    mass: Vec<f64>,
    defect: f64,
}

impl LatticeDist {
    /// Builds a law, trimming exact zeros at both ends. An all-zero vector
    /// collapses to a zero-mass point at `offset` (only reachable through
    /// degenerate input).
    pub fn new(offset: i64, mass: Vec<f64>, defect: f64) -> Result<Self> {
        if mass.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || !(defect >= 0.0) {
            return Err(Error::Input("masses must be finite and non-negative".into()));
        }
        Ok(Self::from_parts(offset, mass, defect))
    }

    fn from_parts(offset: i64, mut mass: Vec<f64>, defect: f64) -> Self {
        let lo = mass.iter().position(|&p| p != 0.0);
        match lo {
            None => LatticeDist { offset, mass: vec![0.0], defect },
            Some(lo) => {
                let hi = mass.iter().rposition(|&p| p != 0.0).unwrap();
                mass.truncate(hi + 1);
                mass.drain(..lo);
                LatticeDist { offset: offset + lo as i64, mass, defect }
            }
        }
    }

    pub fn point(x: i64) -> Self {
        LatticeDist { offset: x, mass: vec![1.0], defect: 0.0 }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn defect(&self) -> f64 {
        self.defect
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Inclusive support bounds.
    pub fn support(&self) -> (i64, i64) {
        (self.offset, self.offset + self.mass.len() as i64 - 1)
    }

    pub fn prob(&self, x: i64) -> f64 {
        let i = x - self.offset;
        if i < 0 || i as usize >= self.mass.len() {
            0.0
        } else {
            self.mass[i as usize]
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn nnz(&self) -> usize {
        self.mass.iter().filter(|&&p| p != 0.0).count()
    }

    pub fn max_prob(&self) -> f64 {
        self.mass.iter().copied().fold(0.0, f64::max)
    }

    /// Total variation distance `½ Σ |P(x) − Q(x)|` over the retained masses.
    pub fn tv(&self, other: &LatticeDist) -> f64 {
        let lo = self.offset.min(other.offset);
        let hi = self.support().1.max(other.support().1);
        0.5 * (lo..=hi).map(|x| (self.prob(x) - other.prob(x)).abs()).sum::<f64>()
    }

    /// Law of `w·X`.
    pub fn dilate(&self, w: i64) -> Result<Self> {
        if w == 0 {
            return Ok(LatticeDist { offset: 0, mass: vec![self.total_mass()], defect: self.defect });
        }
        if w < 0 {
            let mut m = self.mass.clone();
            m.reverse();
            let r = LatticeDist { offset: -self.support().1, mass: m, defect: self.defect };
            return r.dilate(-w);
        }
        let wu = w as usize;
        let new_len = (self.mass.len() - 1)
            .checked_mul(wu)
            .and_then(|x| x.checked_add(1))
            .filter(|&x| x <= MAX_SUPPORT)
            .ok_or_else(|| Error::Support(format!("dilation by {w} exceeds support guard; tail_truncate first")))?;
        let mut m = vec![0.0; new_len];
        for (i, &p) in self.mass.iter().enumerate() {
            m[i * wu] = p;
        }
        Ok(LatticeDist { offset: self.offset * w, mass: m, defect: self.defect })
    }
}

/// `P(±w) = α²/2`, `P(0) = 1 − α²`.
pub fn ternary_law(alpha_sq: f64, weight: i64) -> Result<LatticeDist> {
    check_alpha(alpha_sq)?;
    if weight == 0 {
        return Ok(LatticeDist::point(0));
    }
    let w = weight.unsigned_abs() as usize;
    let mut m = vec![0.0; 2 * w + 1];
    m[0] = alpha_sq / 2.0;
    m[w] = 1.0 - alpha_sq;
    m[2 * w] = alpha_sq / 2.0;
    Ok(LatticeDist { offset: -(w as i64), mass: m, defect: 0.0 })
}

/// Law of `w·(X − Y)` with `X, Y` independent ternary variables.
pub fn centered_pair_law(alpha_sq: f64, weight: i64) -> Result<LatticeDist> {
    check_alpha(alpha_sq)?;
    if weight == 0 {
        return Ok(LatticeDist::point(0));
    }
    let q = alpha_sq / 2.0;
    let r = 1.0 - alpha_sq;
    let base = LatticeDist {
        offset: -2,
        mass: vec![q * q, 2.0 * q * r, r * r + 2.0 * q * q, 2.0 * q * r, q * q],
        defect: 0.0,
    };
    base.dilate(weight.abs())
}

fn check_alpha(alpha_sq: f64) -> Result<()> {
    if !(alpha_sq > 0.0 && alpha_sq <= 1.0) {
        return Err(Error::Param(format!("alpha_sq={alpha_sq} outside (0, 1]")));
    }
    Ok(())
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

fn out_len(a: &LatticeDist, b: &LatticeDist) -> Result<usize> {
    let n = a.mass.len() + b.mass.len() - 1;
    if n > MAX_SUPPORT {
        return Err(Error::Support(format!(
            "convolution support {n} exceeds guard {MAX_SUPPORT}; tail_truncate the operands"
        )));
    }
    Ok(n)
}

/// Schoolbook convolution, iterating over the nonzeros of the sparser
/// operand in index order.
pub fn convolve_direct(a: &LatticeDist, b: &LatticeDist) -> Result<LatticeDist> {
    let n = out_len(a, b)?;
    let (s, d) = if a.nnz() * b.len() <= b.nnz() * a.len() { (a, b) } else { (b, a) };
    let mut out = vec![0.0; n];
    for (i, &p) in s.mass.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (o, &q) in out[i..i + d.mass.len()].iter_mut().zip(&d.mass) {
            *o += p * q;
        }
    }
    Ok(LatticeDist::from_parts(a.offset + b.offset, out, a.defect + b.defect))
}

/// Transform convolution. Both real inputs ride in one complex FFT; the
/// result is clamped at zero and rescaled to the exact product mass so the
/// mass ledger stays closed.
pub fn convolve_fft(a: &LatticeDist, b: &LatticeDist) -> Result<LatticeDist> {
    let n = out_len(a, b)?;
    let size = n.next_power_of_two();
    let mut z: Vec<Complex64> = (0..size)
        .map(|i| Complex64::new(*a.mass.get(i).unwrap_or(&0.0), *b.mass.get(i).unwrap_or(&0.0)))
        .collect();
    plan(size, false).process(&mut z);
    let mut c = vec![Complex64::new(0.0, 0.0); size];
    for k in 0..size {
        let zk = z[k];
        let zr = z[(size - k) % size].conj();
        let fa = (zk + zr) * 0.5;
        let fb = (zk - zr) * Complex64::new(0.0, -0.5);
        c[k] = fa * fb;
    }
    plan(size, true).process(&mut c);
    let scale = 1.0 / size as f64;
    let mut out: Vec<f64> = c[..n].iter().map(|v| (v.re * scale).max(0.0)).collect();
    let target = a.total_mass() * b.total_mass();
    let got: f64 = out.iter().sum();
    if got > 0.0 {
        let r = target / got;
        out.iter_mut().for_each(|v| *v *= r);
    }
    // round-off floor: entries this small are noise, and keeping their
    // positive half biases high moments; the dropped mass goes to the defect
    let floor = FFT_NOISE * out.iter().cloned().fold(0.0, f64::max);
    let mut dropped = 0.0;
    for v in out.iter_mut() {
        if *v < floor {
            dropped += *v;
            *v = 0.0;
        }
    }
    Ok(LatticeDist::from_parts(a.offset + b.offset, out, a.defect + b.defect + dropped))
}

pub fn convolve_with(a: &LatticeDist, b: &LatticeDist, fft_threshold: usize) -> Result<LatticeDist> {
    let cost = (a.nnz() * b.len()).min(b.nnz() * a.len());
    if cost <= fft_threshold {
        convolve_direct(a, b)
    } else {
        convolve_fft(a, b)
    }
}

pub fn convolve(a: &LatticeDist, b: &LatticeDist) -> Result<LatticeDist> {
    convolve_with(a, b, DEFAULT_FFT_THRESHOLD)
}

/// Drops at most `eps/2` of mass from each tail, charging it to the defect.
pub fn tail_truncate(d: &LatticeDist, eps: f64) -> LatticeDist {
    if eps <= 0.0 || d.mass.len() <= 1 {
        return d.clone();
    }
    let budget = eps / 2.0;
    let m = &d.mass;
    let mut lo = 0;
    let mut cut_lo = 0.0;
    while lo + 1 < m.len() && cut_lo + m[lo] <= budget {
        cut_lo += m[lo];
        lo += 1;
    }
    let mut hi = m.len() - 1;
    let mut cut_hi = 0.0;
    while hi > lo && cut_hi + m[hi] <= budget {
        cut_hi += m[hi];
        hi -= 1;
    }
    LatticeDist::from_parts(d.offset + lo as i64, m[lo..=hi].to_vec(), d.defect + cut_lo + cut_hi)
}

/// `m`-fold self-convolution by binary powering, trimming after every step.
pub fn power(d: &LatticeDist, m: u128, eps: f64) -> Result<LatticeDist> {
    let mut acc = LatticeDist::point(0);
    let mut base = d.clone();
    let mut e = m;
    while e > 0 {
        if e & 1 == 1 {
            acc = tail_truncate(&convolve(&acc, &base)?, eps);
        }
        e >>= 1;
        if e > 0 {
            base = tail_truncate(&convolve(&base, &base)?, eps);
        }
    }
    Ok(acc)
}

/// Balanced pairwise reduction of a list of laws.
pub fn convolve_all(mut laws: Vec<LatticeDist>, eps: f64) -> Result<LatticeDist> {
    if laws.is_empty() {
        return Ok(LatticeDist::point(0));
    }
    while laws.len() > 1 {
        let mut next = Vec::with_capacity(laws.len().div_ceil(2));
        let mut it = laws.chunks(2);
        for pair in &mut it {
            if pair.len() == 2 {
                next.push(tail_truncate(&convolve(&pair[0], &pair[1])?, eps));
            } else {
                next.push(pair[0].clone());
            }
        }
        laws = next;
    }
    Ok(laws.pop().unwrap())
}

/// Mean and variance under the retained (normalised) mass.
pub fn moments(d: &LatticeDist) -> (f64, f64) {
    let tot = d.total_mass();
    if tot == 0.0 {
        return (0.0, 0.0);
    }
    let mean = d
        .mass
        .iter()
        .enumerate()
        .map(|(i, p)| p * (d.offset + i as i64) as f64)
        .sum::<f64>()
        / tot;
    let var = d
        .mass
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let x = (d.offset + i as i64) as f64 - mean;
            p * x * x
        })
        .sum::<f64>()
        / tot;
    (mean, var)
}

pub fn char_fn(d: &LatticeDist, t: f64) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (i, &p) in d.mass.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let a = t * (d.offset + i as i64) as f64;
        re += p * a.cos();
        im += p * a.sin();
    }
    Complex64::new(re, im)
}

/// Independent coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductDist {
    pub components: Vec<LatticeDist>,
}

impl ProductDist {
    pub fn new(components: Vec<LatticeDist>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Param("product law needs at least one component".into()));
        }
        Ok(ProductDist { components })
    }

    pub fn iid(d: LatticeDist, dim: usize) -> Result<Self> {
        Self::new(vec![d; dim])
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn prob(&self, x: &[i64]) -> f64 {
        self.components.iter().zip(x).map(|(c, &xi)| c.prob(xi)).product()
    }

    /// Upper bound on total mass missing from the product.
    pub fn defect(&self) -> f64 {
        self.components.iter().map(|c| c.defect()).sum()
    }

    pub fn max_prob(&self) -> f64 {
        self.components.iter().map(|c| c.max_prob()).product()
    }
}

/// 1-D Gaussian lattice density with variance `v`.
pub fn gauss(x: i64, v: f64) -> f64 {
    let x = x as f64;
    (-x * x / (2.0 * v)).exp() / (2.0 * PI * v).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    /// `sup_x n^{D/2} |P(x) − G_n(x)|` over the evaluated box.
    pub gap: f64,
    /// `n^{D/2} · Σ defects`: how far trimming could move the gap.
    pub defect_bound: f64,
    pub argmax: Vec<i64>,
}

fn axis_range(c: &LatticeDist, radius: i64) -> (i64, i64) {
    let (lo, hi) = c.support();
    (lo.min(-radius), hi.max(radius))
}

fn gauss_radius(n: u64, sigma_sq: f64, dim: usize) -> i64 {
    (8.0 * (n as f64 * sigma_sq * dim as f64).sqrt()).ceil() as i64
}

/// LCLT discrepancy against the isotropic Gaussian with per-coordinate
/// variance `nσ²`, evaluated on the product of per-axis ranges covering
/// both the support and an `8√(nσ²D)` box.
pub fn sup_lclt_gap(d: &ProductDist, n: u64, sigma_sq: f64) -> GapReport {
    let dim = d.dim();
    let v = n as f64 * sigma_sq;
    let s = (n as f64).sqrt();
    let radius = gauss_radius(n, sigma_sq, dim);
    let axes: Vec<(i64, Vec<f64>, Vec<f64>)> = d
        .components
        .iter()
        .map(|c| {
            let (lo, hi) = axis_range(c, radius);
            let p: Vec<f64> = (lo..=hi).map(|x| s * c.prob(x)).collect();
            let g: Vec<f64> = (lo..=hi).map(|x| s * gauss(x, v)).collect();
            (lo, p, g)
        })
        .collect();
    let mut best = (0.0f64, vec![0i64; dim]);
    let mut idx = vec![0usize; dim];
    // odometer over the last axis fastest; partial products for the rest
    loop {
        let mut pp = 1.0;
        let mut gg = 1.0;
        for a in 0..dim - 1 {
            pp *= axes[a].1[idx[a]];
            gg *= axes[a].2[idx[a]];
        }
        let last = &axes[dim - 1];
        for j in 0..last.1.len() {
            let val = (pp * last.1[j] - gg * last.2[j]).abs();
            if val > best.0 {
                idx[dim - 1] = j;
                best = (val, idx.iter().zip(&axes).map(|(&i, ax)| ax.0 + i as i64).collect());
            }
        }
        let mut a = dim as isize - 2;
        loop {
            if a < 0 {
                let defect_bound = (n as f64).powf(dim as f64 / 2.0) * d.defect();
                return GapReport { gap: best.0, defect_bound, argmax: best.1 };
            }
            let au = a as usize;
            idx[au] += 1;
            if idx[au] < axes[au].1.len() {
                break;
            }
            idx[au] = 0;
            a -= 1;
        }
    }
}

/// The product-difference bound `|Πz − Πy| ≤ Σ C^{m−1}|z_i − y_i|` for
/// `|z_i|, |y_i| ≤ C`.
pub fn triangle_bound(z: &[f64], y: &[f64], c: f64) -> f64 {
    let m = z.len() as i32;
    z.iter().zip(y).map(|(a, b)| c.powi(m - 1) * (a - b).abs()).sum()
}

/// Gap bound for a product law assembled from per-component 1-D gaps via
/// [`triangle_bound`]; dominates [`sup_lclt_gap`].
pub fn triangle_gap_bound(d: &ProductDist, n: u64, sigma_sq: f64) -> f64 {
    let dim = d.dim();
    let s = (n as f64).sqrt();
    let v = n as f64 * sigma_sq;
    let radius = gauss_radius(n, sigma_sq, dim);
    let mut c = s * gauss(0, v);
    let mut gaps = Vec::with_capacity(dim);
    for comp in &d.components {
        let (lo, hi) = axis_range(comp, radius);
        let mut g = 0.0f64;
        for x in lo..=hi {
            g = g.max(s * (comp.prob(x) - gauss(x, v)).abs());
        }
        c = c.max(s * comp.max_prob());
        gaps.push(g);
    }
    gaps.iter().map(|g| c.powi(dim as i32 - 1) * g).sum()
}

/// CSV with a `# defect=` comment line, then `x,p` rows.
pub fn write_csv<W: Write>(d: &LatticeDist, mut w: W) -> Result<()> {
    writeln!(w, "# defect={:e}", d.defect)?;
    writeln!(w, "x,p")?;
    for (i, p) in d.mass.iter().enumerate() {
        writeln!(w, "{},{:e}", d.offset + i as i64, p)?;
    }
    Ok(())
}

pub fn read_csv<R: Read>(mut r: R) -> Result<LatticeDist> {
    let mut s = String::new();
    r.read_to_string(&mut s)?;
    let mut defect = 0.0;
    let mut rows: Vec<(i64, f64)> = Vec::new();
    for line in s.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("# defect=") {
            defect = rest.parse().map_err(|_| Error::Input(format!("bad defect line: {line}")))?;
            continue;
        }
        if line.is_empty() || line.starts_with('#') || line == "x,p" {
            continue;
        }
        let (x, p) = line
            .split_once(',')
            .ok_or_else(|| Error::Input(format!("bad row: {line}")))?;
        let x: i64 = x.trim().parse().map_err(|_| Error::Input(format!("bad x: {line}")))?;
        let p: f64 = p.trim().parse().map_err(|_| Error::Input(format!("bad p: {line}")))?;
        rows.push((x, p));
    }
    if rows.is_empty() {
        return Err(Error::Input("empty distribution".into()));
    }
    rows.sort_by_key(|r| r.0);
    let lo = rows[0].0;
    let hi = rows[rows.len() - 1].0;
    let mut m = vec![0.0; (hi - lo + 1) as usize];
    for (x, p) in rows {
        m[(x - lo) as usize] += p;
    }
    LatticeDist::new(lo, m, defect)
}

/// Binary layout, little-endian: `offset: i64`, `length: u64`,
/// `length × f64` masses, `defect: f64`.
pub fn write_binary<W: Write>(d: &LatticeDist, mut w: W) -> Result<()> {
    w.write_all(&d.offset.to_le_bytes())?;
    w.write_all(&(d.mass.len() as u64).to_le_bytes())?;
    for p in &d.mass {
        w.write_all(&p.to_le_bytes())?;
    }
    w.write_all(&d.defect.to_le_bytes())?;
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<LatticeDist> {
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let offset = i64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let len = u64::from_le_bytes(b8) as usize;
    if len == 0 || len > MAX_SUPPORT {
        return Err(Error::Input(format!("bad length {len}")));
    }
    let mut m = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut b8)?;
        m.push(f64::from_le_bytes(b8));
    }
    r.read_exact(&mut b8)?;
    let defect = f64::from_le_bytes(b8);
    LatticeDist::new(offset, m, defect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ternary_examples() {
        let t = ternary_law(1.0 / 32.0, 1).unwrap();
        assert_eq!(t.prob(1), 1.0 / 64.0);
        assert_eq!(t.prob(-1), 1.0 / 64.0);
        assert_eq!(t.prob(0), 31.0 / 32.0);
        assert_eq!(ternary_law(1.0 / 32.0, 0).unwrap(), LatticeDist::point(0));
        let t5 = ternary_law(0.25, 5).unwrap();
        assert_eq!(t5.support(), (-5, 5));
        assert_eq!(t5.prob(5), 0.125);
        assert_eq!(t5.nnz(), 3);
        assert!(ternary_law(0.0, 1).is_err());
        assert!(ternary_law(1.5, 1).is_err());
    }

    #[test]
    fn pair_law_examples() {
        let c = centered_pair_law(1.0 / 32.0, 4).unwrap();
        assert_relative_eq!(c.prob(8), 1.0 / 4096.0, max_relative = 1e-15);
        assert_relative_eq!(c.prob(-4), 31.0 / 1024.0, max_relative = 1e-15);
        assert_relative_eq!(c.prob(0), 1923.0 / 2048.0, max_relative = 1e-15);
        let (m, v) = moments(&c);
        assert!(m.abs() < 1e-15);
        assert_relative_eq!(v, 1.0, max_relative = 1e-13);
    }

    #[test]
    fn coin_convolution() {
        let coin = LatticeDist::new(-1, vec![0.5, 0.0, 0.5], 0.0).unwrap();
        let c = convolve(&coin, &coin).unwrap();
        assert_eq!(c.prob(-2), 0.25);
        assert_eq!(c.prob(0), 0.5);
        assert_eq!(c.prob(2), 0.25);
        assert_eq!(convolve(&LatticeDist::point(0), &coin).unwrap(), coin);
    }

    #[test]
    fn point_mass_gap() {
        let d = ProductDist::iid(LatticeDist::point(0), 1).unwrap();
        let sigma_sq = 2.0 * std::f64::consts::LN_2.powi(2);
        let g = sup_lclt_gap(&d, 1, sigma_sq);
        assert!((g.gap - 0.59301).abs() < 5e-5, "{}", g.gap);
        assert!((g.gap - (1.0 - 1.0 / (2.0 * std::f64::consts::PI * sigma_sq).sqrt())).abs() < 1e-15);
        assert_eq!(g.argmax, vec![0]);
    }

    #[test]
    fn char_fn_pair_closed_form() {
        let a2 = 0.3;
        let c = centered_pair_law(a2, 1).unwrap();
        for t in [0.1, 0.7, 2.0, 3.1] {
            let psi = char_fn(&c, t);
            let cf = (1.0 - a2 + a2 * f64::cos(t)).powi(2);
            assert!((psi.re - cf).abs() < 1e-12);
            assert!(psi.im.abs() < 1e-12);
        }
        assert_eq!(char_fn(&LatticeDist::point(0), 1.3).re, 1.0);
    }

    #[test]
    fn truncate_accounting() {
        let t = ternary_law(0.5, 1).unwrap();
        let p = power(&t, 400, 0.0).unwrap();
        assert_eq!(tail_truncate(&p, 0.0), p);
        let q = tail_truncate(&p, 1e-12);
        assert!(q.len() < p.len());
        assert!(q.defect() <= 1e-12);
        assert!((q.total_mass() + q.defect() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn io_round_trip() {
        let d = tail_truncate(&power(&ternary_law(0.2, 3).unwrap(), 7, 0.0).unwrap(), 1e-9);
        let mut buf = Vec::new();
        write_binary(&d, &mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 8 + 8 * d.len() + 8);
        assert_eq!(read_binary(&buf[..]).unwrap(), d);
        let mut csv = Vec::new();
        write_csv(&d, &mut csv).unwrap();
        assert_eq!(read_csv(&csv[..]).unwrap(), d);
    }
}
