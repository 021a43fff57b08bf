//! The layered cocycle `S_n(F)` on a seeded trajectory, its decomposition
//! into regime sums, and the exact laws of `U(F, n)` and truncated `S_n(F)`.
//!
//! A trajectory fixes a seed, a dimension, a horizon and a truncation level
//! `K_max`; component `i` uses layers `f̄_k⁽ⁱ⁾`, `k ≤ K_max`. All layer
//! coordinates are independent (see [`crate::layers`]).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lattice::{self, LatticeDist, ProductDist};
use crate::layers::{self, BlockCache, LayerSpec, Window};
use crate::schedule::{self, ceil_log2, index_sets, p_of, LinSeg, Regime};

/// Trim budget applied after every convolution when assembling laws.
pub const CONV_EPS: f64 = 1e-14;

/// Trimming budget for the law of `U`: its rare far jumps carry enough
/// second moment that `CONV_EPS` visibly lowers the variance.
pub const U_EPS: f64 = 1e-20;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrajectory {
    pub seed: u64,
    pub dim: usize,
    pub k_max: u32,
    /// Certified `L²` bound of the dropped layers, per component.
    pub residual_bound: f64,
    /// Largest time index the trajectory may be read at.
    pub horizon: u128,
    /// Orbit shift: time 0 of this trajectory is time `origin` of the seed's
    /// base orbit.
    pub origin: u128,
}

impl LayerTrajectory {
    pub fn new(seed: u64, dim: usize, horizon: u128, tol_l2sq: f64) -> Result<Self> {
        let t = schedule::truncation_level(horizon.max(2), tol_l2sq)?;
        Self::with_k_max(seed, dim, horizon, t.k_max)
    }

    pub fn with_k_max(seed: u64, dim: usize, horizon: u128, k_max: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Param("dimension must be positive".into()));
        }
        let need = ceil_log2(horizon.max(2)).max(1);
        if k_max < need || k_max > schedule::K_GUARD {
            return Err(Error::Param(format!(
                "k_max={k_max} must lie in {need}..={} for horizon {horizon}",
                schedule::K_GUARD
            )));
        }
        Ok(LayerTrajectory {
            seed,
            dim,
            k_max,
            residual_bound: schedule::residual_bound(horizon.max(2), k_max),
            horizon,
            origin: 0,
        })
    }

    /// The same orbit read from time `s` on.
    pub fn shifted(&self, s: u128) -> Result<Self> {
        if s > self.horizon {
            return Err(Error::Horizon(format!("shift {s} beyond horizon {}", self.horizon)));
        }
        Ok(LayerTrajectory { horizon: self.horizon - s, origin: self.origin + s, ..self.clone() })
    }

    fn check(&self, k: u32, comp: usize) -> Result<()> {
        if k == 0 || k > self.k_max {
            return Err(Error::Param(format!("layer {k} outside 1..={} (truncated)", self.k_max)));
        }
        if comp == 0 || comp > self.dim {
            return Err(Error::Param(format!("component {comp} outside 1..={}", self.dim)));
        }
        Ok(())
    }

    /// `f̄_k⁽ⁱ⁾∘T^j` (component `comp` is 1-based).
    pub fn layer_value(&self, k: u32, comp: usize, j: u128) -> Result<i8> {
        self.layer_value_at(k, comp, false, j)
    }

    /// Base (`mirror = false`) or mirror (`d_k + j`) coordinate.
    pub fn layer_value_at(&self, k: u32, comp: usize, mirror: bool, j: u128) -> Result<i8> {
        self.check(k, comp)?;
        let spec = LayerSpec::new(k);
        let (region, pos) = spec.address(mirror, self.origin + j);
        Ok(layers::value_at(self.seed, &spec, comp as u32, region, pos))
    }
}

enum Reader {
    Prefix { base: Window, mirror: Window },
    Scan(BlockCache),
}

/// Materialised read access to a trajectory over `[0, horizon]`.
///
/// Sparse layers are stored as sorted nonzero lists with prefix sums over
/// the two windows a time-`n` sum can touch; dense layers with short mirror
/// offsets are summed on the fly from their (few) blocks instead.
pub struct Evaluator {
    traj: LayerTrajectory,
    specs: Vec<LayerSpec>,
    readers: Vec<Vec<Reader>>,
}

fn use_scan(spec: &LayerSpec, horizon: u128) -> bool {
    if spec.k > schedule::K_D_U128 {
        return false;
    }
    let span = (1u128 << spec.d_log2) + spec.p;
    span as f64 * spec.alpha_sq <= 128.0 && spec.alpha_sq * (horizon + spec.p) as f64 > 4096.0
}

impl Evaluator {
    pub fn new(traj: &LayerTrajectory) -> Self {
        Self::build(traj, false)
    }

    /// Evaluator that never materialises windows; cheapest for one or two
    /// reads per trajectory.
    pub fn scanning(traj: &LayerTrajectory) -> Self {
        Self::build(traj, true)
    }

    fn build(traj: &LayerTrajectory, all_scan: bool) -> Self {
        let specs: Vec<LayerSpec> = (1..=traj.k_max).map(LayerSpec::new).collect();
        let mut readers = Vec::with_capacity(traj.dim);
        for comp in 1..=traj.dim as u32 {
            let mut row = Vec::with_capacity(specs.len());
            for spec in &specs {
                if all_scan || use_scan(spec, traj.horizon) {
                    row.push(Reader::Scan(BlockCache::default()));
                } else {
                    let len = traj.horizon + spec.p - 1;
                    let (rb, pb) = spec.address(false, traj.origin);
                    let (rm, pm) = spec.address(true, traj.origin);
                    row.push(Reader::Prefix {
                        base: Window::build(traj.seed, spec, comp, rb, pb, len.max(1)),
                        mirror: Window::build(traj.seed, spec, comp, rm, pm, len.max(1)),
                    });
                }
            }
            readers.push(row);
        }
        Evaluator { traj: traj.clone(), specs, readers }
    }

    pub fn trajectory(&self) -> &LayerTrajectory {
        &self.traj
    }

    /// Weighted sum of layer `(comp, k)` over one run (component 1-based).
    pub fn seg_sum(&mut self, comp: usize, k: u32, seg: &LinSeg) -> Result<i128> {
        self.traj.check(k, comp)?;
        if seg.len == 0 {
            return Ok(0);
        }
        let spec = &self.specs[k as usize - 1];
        let (region, pos) = spec.address(seg.mirror, self.traj.origin + seg.start);
        match &mut self.readers[comp - 1][k as usize - 1] {
            Reader::Prefix { base, mirror } => {
                let w = if seg.mirror { mirror } else { base };
                if w.region() != region || !w.covers(pos, seg.len) {
                    return Err(Error::Horizon(format!(
                        "run at {} (+{}) outside the materialised window of layer {k}",
                        seg.start, seg.len
                    )));
                }
                Ok(w.run_sum(pos, seg.len, seg.first, seg.step))
            }
            Reader::Scan(cache) => {
                Ok(cache.run_sum(self.traj.seed, spec, comp as u32, region, pos, seg.len, seg.first, seg.step))
            }
        }
    }

    fn is_scan(&self, comp: usize, k: u32) -> bool {
        matches!(self.readers[comp - 1][k as usize - 1], Reader::Scan(_))
    }

    /// `S_n(f_k⁽ⁱ⁾)`.
    pub fn layer_sum(&mut self, comp: usize, k: u32, n: u128) -> Result<i128> {
        self.check_n(n)?;
        let segs = if self.is_scan(comp, k) {
            schedule::net_weight_profile(n, k)
        } else {
            schedule::profile_pair(n, k)
        };
        let mut acc = 0;
        for s in &segs {
            acc += self.seg_sum(comp, k, s)?;
        }
        Ok(acc)
    }

    fn check_n(&self, n: u128) -> Result<()> {
        if n > self.traj.horizon {
            return Err(Error::Horizon(format!("time {n} beyond horizon {}", self.traj.horizon)));
        }
        Ok(())
    }

    pub fn cocycle_at(&mut self, n: u128) -> Result<Vec<i64>> {
        self.check_n(n)?;
        let mut out = Vec::with_capacity(self.traj.dim);
        for comp in 1..=self.traj.dim {
            let mut acc = 0i128;
            for k in 1..=self.traj.k_max {
                acc += self.layer_sum(comp, k, n)?;
            }
            out.push(i64::try_from(acc).map_err(|_| Error::Overflow("cocycle value".into()))?);
        }
        Ok(out)
    }

    /// `p_l · Σ_{j=lo}^{n−1} (X_l(j) − X_l(d_l + j))`; zero for an empty range.
    fn plateau(&mut self, comp: usize, l: u32, lo: u128, n: u128) -> Result<i128> {
        if lo >= n {
            return Ok(0);
        }
        let p = p_of(l) as i128;
        let len = n - lo;
        let b = self.seg_sum(comp, l, &LinSeg { mirror: false, start: lo, len, first: 1, step: 0 })?;
        let m = self.seg_sum(comp, l, &LinSeg { mirror: true, start: lo, len, first: 1, step: 0 })?;
        Ok(p * (b - m))
    }

    /// `B_l − U^{d_l} B_l`.
    fn b_term(&mut self, comp: usize, l: u32, n: u128) -> Result<i128> {
        self.plateau(comp, l, p_of(l) - 1, n)
    }

    /// `V_k = Σ_{i=2^k}^{n−1} [p_k(…f̄_k…) + p_{k+1}(…f̄_{k+1}…)]`.
    fn v_term(&mut self, comp: usize, k: u32, n: u128) -> Result<i128> {
        let lo = 1u128 << k;
        Ok(self.plateau(comp, k, lo, n)? + self.plateau(comp, k + 1, lo, n)?)
    }

    /// `A_k + C_k − U^{d_k}(A_k + C_k)`.
    fn edge_term(&mut self, comp: usize, k: u32, n: u128) -> Result<i128> {
        let p = p_of(k);
        let mut acc = 0;
        for (mirror, sign) in [(false, 1i128), (true, -1)] {
            let a = LinSeg { mirror, start: 0, len: p - 1, first: 1, step: 1 };
            let c = LinSeg { mirror, start: n, len: p - 1, first: p as i128 - 1, step: -1 };
            acc += sign * (self.seg_sum(comp, k, &a)? + self.seg_sum(comp, k, &c)?);
        }
        Ok(acc)
    }

    pub fn decompose(&mut self, n: u128) -> Result<DecompositionReport> {
        if n < 2 {
            return Err(Error::Param("decomposition needs n ≥ 2".into()));
        }
        self.check_n(n)?;
        let sets = index_sets(n, self.traj.k_max);
        let need = sets.i_full.iter().map(|k| k + 1).max().unwrap_or(0);
        if need > self.traj.k_max {
            return Err(Error::Param(format!("layer {need} needed but truncated at {}", self.traj.k_max)));
        }
        let extra = sets.extra();
        let remark_k = schedule::log2_even(n);
        let mut r = DecompositionReport::zeros(n, self.traj.dim);
        for c in 1..=self.traj.dim {
            let i = c - 1;
            let mut s = 0;
            let (mut z_sm, mut y_hat, mut z_la) = (0, 0, 0);
            for k in 1..=self.traj.k_max {
                let v = self.layer_sum(c, k, n)?;
                s += v;
                match schedule::regime(n, k) {
                    Regime::Small => z_sm += v,
                    Regime::Medium => y_hat += v,
                    Regime::Large => z_la += v,
                }
            }
            let mut w = 0;
            let mut z_script = 0;
            for &k in &sets.medium {
                w += self.b_term(c, k, n)?;
                z_script += self.edge_term(c, k, n)?;
            }
            let mut u = 0;
            for &k in &sets.i_hat {
                u += self.v_term(c, k, n)?;
            }
            let mut v_extra = 0;
            for &k in &extra {
                v_extra += self.v_term(c, k, n)?;
            }
            let mut u_full = 0;
            for &k in &sets.i_full {
                u_full += self.v_term(c, k, n)?;
            }
            let v_remark = match remark_k {
                Some(k) => self.v_term(c, k, n)?,
                None => 0,
            };

            // the three-term display for E_n
            let mut e_display = 0;
            for &k in &sets.i_hat {
                e_display += self.point_pair(c, k, p_of(k) - 1)?;
            }
            if let Some(k) = (2..schedule::K_GUARD).step_by(2).find(|&k| {
                !schedule::lt_d(n, k) && schedule::lt_d(n, k + 1)
            }) {
                e_display += self.b_term(c, k + 1, n)?;
            }
            if let Some(k) = (2..schedule::K_GUARD)
                .step_by(2)
                .take_while(|&k| p_of(k) < n)
                .find(|&k| n == p_of(k + 1))
            {
                e_display += self.b_term(c, k, n)?;
            }

            // every term of W − U, enumerated layer by layer
            let mut e_full = 0;
            for &k in &sets.i_hat {
                e_full += self.point_pair(c, k, p_of(k) - 1)?;
                e_full -= self.plateau(c, k + 1, 1u128 << k, 1u128 << (k + 1))?;
            }
            for &l in &sets.medium {
                let paired = if l % 2 == 0 { sets.i_hat.contains(&l) } else { sets.i_hat.contains(&(l - 1)) };
                if !paired {
                    e_full += self.b_term(c, l, n)?;
                }
            }

            let cast = |x: i128| i64::try_from(x).map_err(|_| Error::Overflow("decomposition term".into()));
            r.s_n[i] = cast(s)?;
            r.z_sm[i] = cast(z_sm)?;
            r.y_hat[i] = cast(y_hat)?;
            r.z_la[i] = cast(z_la)?;
            r.w[i] = cast(w)?;
            r.u[i] = cast(u)?;
            r.e[i] = cast(w - u)?;
            r.e_display[i] = cast(e_display)?;
            r.e_full[i] = cast(e_full)?;
            r.z_script[i] = cast(z_script)?;
            r.v_extra[i] = cast(v_extra)?;
            r.v_remark[i] = cast(v_remark)?;
            r.u_full[i] = cast(u_full)?;
        }
        Ok(r)
    }

    /// `p_k (X_k(j) − X_k(d_k + j))`.
    fn point_pair(&mut self, comp: usize, k: u32, j: u128) -> Result<i128> {
        let p = p_of(k) as i128;
        let b = self.seg_sum(comp, k, &LinSeg { mirror: false, start: j, len: 1, first: 1, step: 0 })?;
        let m = self.seg_sum(comp, k, &LinSeg { mirror: true, start: j, len: 1, first: 1, step: 0 })?;
        Ok(p * (b - m))
    }

    /// `U(F, n)` alone.
    pub fn u_at(&mut self, n: u128) -> Result<Vec<i64>> {
        self.check_n(n)?;
        let ks = schedule::i_hat(n);
        let mut out = Vec::with_capacity(self.traj.dim);
        for c in 1..=self.traj.dim {
            let mut acc = 0;
            for &k in &ks {
                acc += self.v_term(c, k, n)?;
            }
            out.push(i64::try_from(acc).map_err(|_| Error::Overflow("U value".into()))?);
        }
        Ok(out)
    }
}

/// Every partial sum of the regime decomposition at one `(trajectory, n)`.
///
/// `e = w − u`. `e_display` evaluates the three-term closed form for `W − U`
/// (boundary layer term of each `k ∈ Î_n`, the unpaired odd layer when
/// `d_k ≤ n < d_{k+1}`, the unpaired even layer when `n = p_{k+1}`);
/// `e_full` enumerates `W − U` layer by layer and additionally carries the
/// odd-layer coordinates `2^k ≤ i < 2^{k+1}` that `U` reads but `W` does not,
/// and every unpaired even medium layer. `v_extra` is `Σ V_k` over
/// `I_n \ Î_n`; `v_remark` is `V_{log(n−1)}` when `log(n−1)` is even,
/// else zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionReport {
    pub n: u128,
    pub s_n: Vec<i64>,
    pub z_sm: Vec<i64>,
    pub y_hat: Vec<i64>,
    pub z_la: Vec<i64>,
    pub w: Vec<i64>,
    pub u: Vec<i64>,
    pub e: Vec<i64>,
    pub e_display: Vec<i64>,
    pub e_full: Vec<i64>,
    pub z_script: Vec<i64>,
    pub v_extra: Vec<i64>,
    pub v_remark: Vec<i64>,
    /// `Σ_{k ∈ I_n} V_k`, summed independently of `u`.
    pub u_full: Vec<i64>,
}

impl DecompositionReport {
    fn zeros(n: u128, dim: usize) -> Self {
        let z = vec![0; dim];
        DecompositionReport {
            n,
            s_n: z.clone(),
            z_sm: z.clone(),
            y_hat: z.clone(),
            z_la: z.clone(),
            w: z.clone(),
            u: z.clone(),
            e: z.clone(),
            e_display: z.clone(),
            e_full: z.clone(),
            z_script: z.clone(),
            v_extra: z.clone(),
            v_remark: z.clone(),
            u_full: z,
        }
    }

    /// The structural identities that hold by construction.
    pub fn identities_hold(&self) -> bool {
        (0..self.s_n.len()).all(|i| {
            self.s_n[i] == self.z_sm[i] + self.y_hat[i] + self.z_la[i]
                && self.y_hat[i] == self.w[i] + self.z_script[i]
                && self.w[i] == self.u[i] + self.e[i]
                && self.u[i] + self.v_extra[i] == self.u_full[i]
        })
    }

    pub fn display_matches(&self) -> bool {
        self.e == self.e_display
    }

    pub fn full_matches(&self) -> bool {
        self.e == self.e_full
    }
}

/// `S_n(F)` from scratch on one trajectory.
pub fn cocycle_at(traj: &LayerTrajectory, n: u128) -> Result<Vec<i64>> {
    Evaluator::scanning(traj).cocycle_at(n)
}

pub fn decompose(traj: &LayerTrajectory, n: u128) -> Result<DecompositionReport> {
    Evaluator::scanning(traj).decompose(n)
}

/// `Σ_{k∈Î_n} (n − 2^k)·2·(1/(k log k) + 1/((k+1) log(k+1)))`.
pub fn variance_u_closed_form(n: u128) -> f64 {
    let g = |k: u32| {
        let kf = k as f64;
        1.0 / (kf * kf.log2())
    };
    schedule::i_hat(n)
        .iter()
        .map(|&k| (n - (1u128 << k)) as f64 * 2.0 * (g(k) + g(k + 1)))
        .sum()
}

/// One component of the exact law of `U(f, n)`.
pub fn exact_law_u(n: u128) -> Result<LatticeDist> {
    if n < 2 {
        return Err(Error::Param("U(f, n) needs n ≥ 2".into()));
    }
    let mut parts = Vec::new();
    for k in schedule::i_hat(n) {
        let copies = n - (1u128 << k);
        for l in [k, k + 1] {
            let pair = lattice::centered_pair_law(schedule::alpha_sq_of(l), 1)?;
            let pw = lattice::power(&pair, copies, U_EPS)?;
            parts.push(pw.dilate(p_of(l) as i64)?);
        }
    }
    lattice::convolve_all(parts, U_EPS)
}

pub fn exact_dist_u(n: u128, dim: usize) -> Result<ProductDist> {
    ProductDist::iid(exact_law_u(n)?, dim)
}

/// Multiplicity of each `|c_j|` in the net weight profile of layer `k`.
pub fn weight_multiplicities(n: u128, k: u32) -> BTreeMap<u128, u128> {
    let mut out = BTreeMap::new();
    for s in schedule::net_weight_profile(n, k) {
        if s.step == 0 {
            if s.first != 0 {
                *out.entry(s.first.unsigned_abs()).or_insert(0) += s.len;
            }
        } else {
            for q in 0..s.len {
                let v = s.value(q);
                if v != 0 {
                    *out.entry(v.unsigned_abs()).or_insert(0) += 1;
                }
            }
        }
    }
    out
}

/// One component of the law of `S_n(f_k)`.
pub fn exact_law_layer(n: u128, k: u32) -> Result<LatticeDist> {
    let a2 = schedule::alpha_sq_of(k);
    let unit = lattice::ternary_law(a2, 1)?;
    let mut acc = LatticeDist::point(0);
    for (w, m) in weight_multiplicities(n, k) {
        let wi = i64::try_from(w).map_err(|_| Error::Support(format!("weight {w} too large")))?;
        let part = lattice::power(&unit, m, CONV_EPS)?.dilate(wi)?;
        acc = lattice::tail_truncate(&lattice::convolve(&acc, &part)?, CONV_EPS);
    }
    Ok(acc)
}

/// One component of the law of the truncated `S_n(f)`, with the per-component
/// `L²` certificate of the dropped layers.
pub fn exact_law_s(n: u128, tol_l2sq: f64) -> Result<(LatticeDist, f64)> {
    let t = schedule::truncation_level(n.max(2), tol_l2sq)?;
    let mut parts = Vec::with_capacity(t.k_max as usize);
    for k in 1..=t.k_max {
        parts.push(exact_law_layer(n, k)?);
    }
    Ok((lattice::convolve_all(parts, CONV_EPS)?, t.residual_bound))
}

pub fn exact_dist_s(n: u128, dim: usize, tol_l2sq: f64) -> Result<(ProductDist, f64)> {
    let (law, rb) = exact_law_s(n, tol_l2sq)?;
    Ok((ProductDist::iid(law, dim)?, rb))
}

/// `Var S_n(f)` of the truncated model, per component, from the profile.
pub fn variance_s_exact(n: u128, k_max: u32) -> f64 {
    (1..=k_max)
        .map(|k| {
            let a2 = schedule::alpha_sq_of(k);
            weight_multiplicities(n, k)
                .iter()
                .map(|(&w, &m)| (w as f64).powi(2) * m as f64)
                .sum::<f64>()
                * a2
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn u_examples() {
        assert!((variance_u_closed_form(10) - 8.5237).abs() < 5e-5);
        assert_eq!(variance_u_closed_form(17), 0.0);
        let u10 = exact_law_u(10).unwrap();
        let (lo, hi) = u10.support();
        assert!(lo >= -156 && hi <= 156);
        let (_, v) = lattice::moments(&u10);
        assert!((v - variance_u_closed_form(10)).abs() / v < 1e-9);
        assert_eq!(exact_law_u(17).unwrap(), LatticeDist::point(0));
    }

    #[test]
    fn s_at_one() {
        let (law, _) = exact_law_s(1, 0.01).unwrap();
        let k_max = schedule::truncation_level(2, 0.01).unwrap().k_max;
        // k = 1 overlaps its mirror (d_1 = 2 < p_1 = 3): c = 1,1,0,−1,−1
        let want: f64 = 4.0 * 0.25
            + (2..=k_max).map(|k| 2.0 * p_of(k) as f64 * schedule::alpha_sq_of(k)).sum::<f64>();
        let (m, v) = lattice::moments(&law);
        assert!(m.abs() < 1e-12);
        assert!((v - want).abs() / want < 1e-9, "{v} vs {want}");
    }

    #[test]
    fn zero_time() {
        let t = LayerTrajectory::new(3, 2, 100, 0.01).unwrap();
        assert_eq!(cocycle_at(&t, 0).unwrap(), vec![0, 0]);
        assert!(cocycle_at(&t, 101).is_err());
        assert!(t.layer_value(t.k_max + 1, 1, 0).is_err());
    }
}
