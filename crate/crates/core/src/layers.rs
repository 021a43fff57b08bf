//! Seeded layer variables `f̄_k⁽ⁱ⁾∘Tʲ ∈ {−1, 0, 1}`, i.i.d. over every
//! coordinate with `P(±1) = α_k²/2`.
//!
//! Coordinates are grouped into aligned blocks of `2^b_k` positions with
//! `b_k ≈ log(16/α_k²)`, so a block holds about 16 nonzeros. For a block
//! the generator draws
//!
//! 1. the nonzero count `c ~ Binomial(2^b, α²)` by CDF inversion of one
//!    mixer uniform,
//! 2. `c` distinct offsets by repeated mixer draws with duplicate rejection,
//! 3. a fair sign per accepted offset.
//!
//! Conditional on `c` the offsets form a uniform `c`-subset, so every
//! coordinate is an independent Bernoulli(α²) with a fair sign. Reading a
//! sparse layer costs `O(α²·window + blocks)` instead of one hash per
//! coordinate, which is what makes horizons of `10⁸` and mirror offsets of
//! `2^(k²)` affordable.
//!
//! Addresses: for `k ≤ 11` a coordinate is its absolute index (region 0);
//! for `k ≥ 12` mirror coordinates `d_k + o` live in region 1 at offset `o`.

use crate::mixer::{domain, mix, unit};
use crate::schedule::{self, K_D_U128};

/// Target mean number of nonzeros per block.
const BLOCK_MEAN: f64 = 16.0;
const MAX_BLOCK_BITS: u32 = 120;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    pub k: u32,
    pub p: u128,
    pub d_log2: u32,
    pub alpha_sq: f64,
    pub block_bits: u32,
    p_zero: f64,
    odds: f64,
}

impl LayerSpec {
    pub fn new(k: u32) -> Self {
        let a2 = schedule::alpha_sq_of(k);
        let b = ((BLOCK_MEAN / a2).log2().ceil() as u32).clamp(4, MAX_BLOCK_BITS);
        let size = 2f64.powi(b as i32);
        LayerSpec {
            k,
            p: schedule::p_of(k),
            d_log2: k * k,
            alpha_sq: a2,
            block_bits: b,
            p_zero: (size * (-a2).ln_1p()).exp(),
            odds: a2 / (1.0 - a2),
        }
    }

    pub fn block_size(&self) -> u128 {
        1u128 << self.block_bits
    }

    /// Canonical `(region, position)` of base (`mirror = false`) or mirror
    /// coordinate `offset`.
    #[inline]
    pub fn address(&self, mirror: bool, offset: u128) -> (u64, u128) {
        if self.k <= K_D_U128 {
            let d = 1u128 << self.d_log2;
            (0, if mirror { d + offset } else { offset })
        } else {
            (mirror as u64, offset)
        }
    }

    fn count(&self, u: f64) -> u64 {
        let size = 2f64.powi(self.block_bits as i32);
        let mean = size * self.alpha_sq;
        let mut x = 0u64;
        let mut pmf = self.p_zero;
        let mut cdf = pmf;
        while u >= cdf {
            let xf = x as f64;
            if xf >= size {
                break;
            }
            pmf *= (size - xf) / (xf + 1.0) * self.odds;
            x += 1;
            cdf += pmf;
            if pmf < 1e-300 && xf > mean {
                break;
            }
        }
        x
    }
}

/// Nonzeros of block `blk` as `(position, sign)`, ascending by position.
pub fn block_nonzeros(seed: u64, spec: &LayerSpec, comp: u32, region: u64, blk: u128, out: &mut Vec<(u128, i8)>) {
    out.clear();
    let key = |tag: u64| {
        mix(
            seed,
            domain::LAYER,
            &[spec.k as u64, comp as u64, region, (blk >> 64) as u64, blk as u64, tag],
        )
    };
    let c = spec.count(unit(key(0)));
    let b = spec.block_bits;
    let base = blk << b;
    let mut attempt = 0u64;
    while (out.len() as u64) < c {
        attempt += 1;
        let h = key(attempt);
        let (off, sign) = if b <= 62 {
            ((h >> (64 - b)) as u128, h & 1)
        } else {
            let h2 = key((1 << 40) | attempt);
            let wide = ((h as u128) << 64) | h2 as u128;
            (wide >> (128 - b), key((1 << 41) | attempt) & 1)
        };
        let pos = base + off;
        if out.iter().any(|e| e.0 == pos) {
            continue;
        }
        out.push((pos, if sign == 1 { 1 } else { -1 }));
    }
    out.sort_unstable_by_key(|e| e.0);
}

/// Value at one canonical address; pure in `(seed, k, comp, address)`.
pub fn value_at(seed: u64, spec: &LayerSpec, comp: u32, region: u64, pos: u128) -> i8 {
    let mut buf = Vec::new();
    block_nonzeros(seed, spec, comp, region, pos >> spec.block_bits, &mut buf);
    buf.binary_search_by_key(&pos, |e| e.0).map_or(0, |i| buf[i].1)
}

/// Calls `f(position, sign)` for every nonzero in `[lo, lo + len)`.
pub fn for_each_nonzero<F: FnMut(u128, i8)>(
    seed: u64,
    spec: &LayerSpec,
    comp: u32,
    region: u64,
    lo: u128,
    len: u128,
    mut f: F,
) {
    if len == 0 {
        return;
    }
    let hi = lo + len;
    let b = spec.block_bits;
    let mut buf = Vec::new();
    for blk in (lo >> b)..=((hi - 1) >> b) {
        block_nonzeros(seed, spec, comp, region, blk, &mut buf);
        for &(pos, s) in &buf {
            if pos >= lo && pos < hi {
                f(pos, s);
            }
        }
    }
}

/// Materialised nonzeros of one address window with prefix sums, answering
/// weighted linear-run sums in `O(log n)`.
#[derive(Debug, Clone)]
pub struct Window {
    region: u64,
    lo: u128,
    len: u128,
    rel: Vec<u128>,
    pv: Vec<i64>,
    pjv: Vec<i128>,
}

impl Window {
    pub fn build(seed: u64, spec: &LayerSpec, comp: u32, region: u64, lo: u128, len: u128) -> Self {
        let mut rel = Vec::new();
        let mut pv = vec![0i64];
        let mut pjv = vec![0i128];
        for_each_nonzero(seed, spec, comp, region, lo, len, |pos, s| {
            let r = pos - lo;
            rel.push(r);
            pv.push(pv.last().unwrap() + s as i64);
            pjv.push(pjv.last().unwrap() + s as i128 * r as i128);
        });
        Window { region, lo, len, rel, pv, pjv }
    }

    pub fn region(&self) -> u64 {
        self.region
    }

    pub fn nnz(&self) -> usize {
        self.rel.len()
    }

    pub fn covers(&self, pos: u128, len: u128) -> bool {
        pos >= self.lo && pos + len <= self.lo + self.len
    }

    /// `Σ_{q<len} (first + step·q)·X(pos + q)`; the run must be covered.
    pub fn run_sum(&self, pos: u128, len: u128, first: i128, step: i128) -> i128 {
        debug_assert!(self.covers(pos, len));
        let a = pos - self.lo;
        let i0 = self.rel.partition_point(|&r| r < a);
        let i1 = self.rel.partition_point(|&r| r < a + len);
        let sv = (self.pv[i1] - self.pv[i0]) as i128;
        let sjv = self.pjv[i1] - self.pjv[i0];
        (first - step * a as i128) * sv + step * sjv
    }
}

/// Small most-recently-used cache of generated blocks for on-the-fly sums.
#[derive(Debug, Clone, Default)]
pub struct BlockCache {
    slots: Vec<(u64, u128, Vec<(u128, i8)>)>,
}

const CACHE_SLOTS: usize = 4;

impl BlockCache {
    fn get(&mut self, seed: u64, spec: &LayerSpec, comp: u32, region: u64, blk: u128) -> &[(u128, i8)] {
        if let Some(i) = self.slots.iter().position(|s| s.0 == region && s.1 == blk) {
            let s = self.slots.remove(i);
            self.slots.push(s);
        } else {
            let mut v = if self.slots.len() >= CACHE_SLOTS {
                self.slots.remove(0).2
            } else {
                Vec::new()
            };
            block_nonzeros(seed, spec, comp, region, blk, &mut v);
            self.slots.push((region, blk, v));
        }
        &self.slots.last().unwrap().2
    }

    /// Same contract as [`Window::run_sum`], generating blocks on demand.
    pub fn run_sum(
        &mut self,
        seed: u64,
        spec: &LayerSpec,
        comp: u32,
        region: u64,
        pos: u128,
        len: u128,
        first: i128,
        step: i128,
    ) -> i128 {
        if len == 0 {
            return 0;
        }
        let b = spec.block_bits;
        let hi = pos + len;
        let mut acc = 0i128;
        for blk in (pos >> b)..=((hi - 1) >> b) {
            for &(x, s) in self.get(seed, spec, comp, region, blk) {
                if x >= pos && x < hi {
                    acc += s as i128 * (first + step * (x - pos) as i128);
                }
            }
        }
        acc
    }
}
