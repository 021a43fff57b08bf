//! The layer schedule: block lengths `p_k`, mirror offsets `d_k = 2^(k²)`,
//! layer intensities `α_k²`, the regime index sets at time `n`, and the
//! weight profiles describing how `S_n(f_k)` loads each coordinate.
//!
//! All logarithms are base 2. Positions and times are `u128`; `d_k` is kept
//! as its exponent `k²` because it leaves `u128` from `k = 12` on.

use crate::error::{Error, Result};

/// Largest layer index any routine will touch.
pub const K_GUARD: u32 = 60;

/// Largest `k` for which `d_k` fits in a `u128`.
pub const K_D_U128: u32 = 11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub k: u32,
    pub p: u128,
    /// `d_k = 2^d_log2`.
    pub d_log2: u32,
    pub alpha_sq: f64,
}

impl Params {
    /// `d_k` when representable.
    pub fn d(&self) -> Option<u128> {
        if self.d_log2 < 128 {
            Some(1u128 << self.d_log2)
        } else {
            None
        }
    }

    /// `p_k² α_k²`; equals `1/(k log k)` for `k ≥ 2`.
    pub fn p_sq_alpha_sq(&self) -> f64 {
        if self.k == 1 {
            9.0 / 4.0
        } else {
            1.0 / (self.k as f64 * (self.k as f64).log2())
        }
    }
}

fn check_k(k: u32) -> Result<()> {
    if k == 0 || k > K_GUARD {
        return Err(Error::Param(format!("layer index k={k} outside 1..={K_GUARD}")));
    }
    Ok(())
}

/// `p_k`: `2^k` for even `k`, `2^k + 1` for odd `k`.
pub fn p_of(k: u32) -> u128 {
    debug_assert!((1..=64).contains(&k));
    if k % 2 == 0 {
        1u128 << k
    } else {
        (1u128 << k) + 1
    }
}

/// `α_k²`; exactly `1/4` at `k = 1`.
pub fn alpha_sq_of(k: u32) -> f64 {
    if k == 1 {
        return 0.25;
    }
    let p = p_of(k) as f64;
    1.0 / (p * p * k as f64 * (k as f64).log2())
}

pub fn params(k: u32) -> Result<Params> {
    check_k(k)?;
    Ok(Params {
        k,
        p: p_of(k),
        d_log2: k * k,
        alpha_sq: alpha_sq_of(k),
    })
}

/// `n < d_k` without materialising `d_k`.
pub fn lt_d(n: u128, k: u32) -> bool {
    k * k >= 128 || n < (1u128 << (k * k))
}

/// Regime of layer `k` at time `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `d_k ≤ n` (and `n > p_k`): both trapezoids overlap and telescope.
    Small,
    /// `p_k < n < d_k`.
    Medium,
    /// `n ≤ p_k`.
    Large,
}

pub fn regime(n: u128, k: u32) -> Regime {
    if n <= p_of(k) {
        Regime::Large
    } else if lt_d(n, k) {
        Regime::Medium
    } else {
        Regime::Small
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSets {
    pub n: u128,
    pub k_max: u32,
    pub small: Vec<u32>,
    pub medium: Vec<u32>,
    pub large: Vec<u32>,
    /// Even `k` with `p_{k+1} < n < d_k`.
    pub i_hat: Vec<u32>,
    /// Even `k` with `p_k < n < d_k`.
    pub i_full: Vec<u32>,
}

impl IndexSets {
    /// `i_full \ i_hat`.
    pub fn extra(&self) -> Vec<u32> {
        self.i_full
            .iter()
            .copied()
            .filter(|k| !self.i_hat.contains(k))
            .collect()
    }
}

/// Even `k` with `p_{k+1} < n < d_k`. Independent of any truncation.
pub fn i_hat(n: u128) -> Vec<u32> {
    (2..K_GUARD)
        .step_by(2)
        .take_while(|&k| p_of(k + 1) < n)
        .filter(|&k| lt_d(n, k))
        .collect()
}

/// Even `k` with `p_k < n < d_k`.
pub fn i_full(n: u128) -> Vec<u32> {
    (2..=K_GUARD)
        .step_by(2)
        .take_while(|&k| p_of(k) < n)
        .filter(|&k| lt_d(n, k))
        .collect()
}

pub fn index_sets(n: u128, k_max: u32) -> IndexSets {
    let mut small = Vec::new();
    let mut medium = Vec::new();
    let mut large = Vec::new();
    for k in 1..=k_max.min(K_GUARD) {
        match regime(n, k) {
            Regime::Small => small.push(k),
            Regime::Medium => medium.push(k),
            Regime::Large => large.push(k),
        }
    }
    IndexSets {
        n,
        k_max,
        small,
        medium,
        large,
        i_hat: i_hat(n),
        i_full: i_full(n),
    }
}

/// `Some(k)` when `n − 1 = 2^k` with `k` even and positive.
pub fn log2_even(n: u128) -> Option<u32> {
    let m = n.checked_sub(1)?;
    if m.is_power_of_two() {
        let k = m.trailing_zeros();
        if k >= 2 && k % 2 == 0 {
            return Some(k);
        }
    }
    None
}

/// Number of windows `[m, m + p_k)`, `m < n`, containing coordinate `j`.
pub fn trapezoid_weight(j: u128, n: u128, k: u32) -> u128 {
    window_count(j, n, p_of(k))
}

pub(crate) fn window_count(j: u128, n: u128, p: u128) -> u128 {
    if n == 0 || j > n + p - 2 {
        return 0;
    }
    let hi = j.min(n - 1);
    let lo = j.saturating_sub(p - 1);
    hi - lo + 1
}

/// Linear run of a weight profile: coordinate `start + q` carries
/// `first + step·q` for `q < len`. Mirror runs are offset by `d_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinSeg {
    pub mirror: bool,
    pub start: u128,
    pub len: u128,
    pub first: i128,
    pub step: i128,
}

impl LinSeg {
    pub fn value(&self, q: u128) -> i128 {
        self.first + self.step * q as i128
    }

    pub fn sum(&self) -> i128 {
        let l = self.len as i128;
        self.first * l + self.step * l * (l - 1) / 2
    }
}

/// The three linear pieces of the window-count trapezoid for `(n, p)`.
pub fn trapezoid(n: u128, p: u128, sign: i128, mirror: bool) -> Vec<LinSeg> {
    if n == 0 {
        return Vec::new();
    }
    let a = n.min(p);
    let b = n.max(p);
    let e = n + p - 1;
    let mut out = Vec::with_capacity(3);
    let mut push = |start: u128, len: u128, first: i128, step: i128| {
        if len > 0 {
            out.push(LinSeg {
                mirror,
                start,
                len,
                first: sign * first,
                step: sign * step,
            });
        }
    };
    push(0, a, 1, 1);
    push(a, b - a, a as i128, 0);
    push(b, e - b, a as i128 - 1, -1);
    out
}

/// The positive trapezoid (base) and the negative one (mirror) as separate
/// runs; valid for every `(n, k)` since mirror runs are addressed through
/// `d_k`.
pub fn profile_pair(n: u128, k: u32) -> Vec<LinSeg> {
    let p = p_of(k);
    let mut v = trapezoid(n, p, 1, false);
    v.extend(trapezoid(n, p, -1, true));
    v
}

/// Net weight profile `c_j = w_j − w_{j−d_k}` as linear runs. When the two
/// trapezoids overlap (only possible for `k ≤ 11`) the runs are merged on
/// absolute coordinates and zero runs dropped; otherwise it equals
/// [`profile_pair`].
pub fn net_weight_profile(n: u128, k: u32) -> Vec<LinSeg> {
    let p = p_of(k);
    if n == 0 {
        return Vec::new();
    }
    let e = n + p - 1;
    if k <= K_D_U128 && (1u128 << (k * k)) < e {
        let d = 1u128 << (k * k);
        let c = |j: u128| -> i128 {
            let w = window_count(j, n, p) as i128;
            let m = if j >= d { window_count(j - d, n, p) as i128 } else { 0 };
            w - m
        };
        let a = n.min(p);
        let b = n.max(p);
        let mut bps = vec![0, a, b, e, d, d + a, d + b, d + e];
        bps.sort_unstable();
        bps.dedup();
        let mut out = Vec::new();
        for w in bps.windows(2) {
            let (x0, x1) = (w[0], w[1]);
            let len = x1 - x0;
            let first = c(x0);
            let step = if len > 1 { c(x0 + 1) - first } else { 0 };
            if first == 0 && step == 0 {
                continue;
            }
            out.push(LinSeg { mirror: false, start: x0, len, first, step });
        }
        out
    } else {
        profile_pair(n, k)
    }
}

/// Expands a profile into `(absolute position, weight)` pairs; test helper
/// for small `k` only.
pub fn expand_profile(segs: &[LinSeg], k: u32) -> Vec<(u128, i128)> {
    let d = 1u128 << (k * k);
    let mut out = Vec::new();
    for s in segs {
        let base = if s.mirror { d } else { 0 };
        for q in 0..s.len {
            out.push((base + s.start + q, s.value(q)));
        }
    }
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub k_max: u32,
    pub residual_bound: f64,
}

pub(crate) fn ceil_log2(t: u128) -> u32 {
    if t <= 1 {
        0
    } else {
        128 - (t - 1).leading_zeros()
    }
}

/// Certified bound on `Σ_{k>K} ‖S_T(f_k)‖₂²` for one component:
/// `8T² / (2^K (K+1) log(K+1))`. Needs `K ≥ ⌈log T⌉` so every dropped layer
/// is in the large regime.
pub fn residual_bound(t: u128, k: u32) -> f64 {
    let t = t as f64;
    let kk = (k + 1) as f64;
    8.0 * t * t / (2f64.powi(k as i32) * kk * kk.log2())
}

pub fn truncation_level(t: u128, tol_l2sq: f64) -> Result<Truncation> {
    if t < 2 {
        return Err(Error::Param(format!("truncation horizon T={t} must be ≥ 2")));
    }
    if !(tol_l2sq > 0.0) {
        return Err(Error::Param("tolerance must be positive".into()));
    }
    let start = ceil_log2(t).max(1);
    for k in start..=K_GUARD {
        let rb = residual_bound(t, k);
        if rb <= tol_l2sq {
            return Ok(Truncation { k_max: k, residual_bound: rb });
        }
    }
    Err(Error::Param(format!(
        "tolerance {tol_l2sq} unreachable for T={t} within k ≤ {K_GUARD}"
    )))
}

/// Dimension holder; every schedule quantity is computed on demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub dim: usize,
}

impl Schedule {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Param("dimension must be positive".into()));
        }
        Ok(Schedule { dim })
    }

    pub fn params(&self, k: u32) -> Result<Params> {
        params(k)
    }

    pub fn index_sets(&self, n: u128, k_max: u32) -> IndexSets {
        index_sets(n, k_max)
    }
}
