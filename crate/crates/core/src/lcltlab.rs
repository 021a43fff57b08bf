//! LCLT experiments: discrepancy curves for `U(F, n)` and truncated
//! `S_n(F)`, characteristic-function regime fits, the junk-term variance,
//! the perturbation-transfer harness and small-ball probabilities.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::cocycle::{self, Evaluator, LayerTrajectory};
use crate::error::{Error, Result};
use crate::lattice::{self, GapReport, LatticeDist, ProductDist};
use crate::mixer::derive_seed;
use crate::report::{fmt_float, Table};
use crate::schedule::{self, p_of};
use crate::stats;

/// Limiting variance per coordinate, `2 (ln 2)²`.
pub const SIGMA_SQ: f64 = 2.0 * std::f64::consts::LN_2 * std::f64::consts::LN_2;

/// Default `L²` tolerance of the dropped layers.
pub const DEFAULT_TOL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    UExact,
    SExact,
    SMonteCarlo,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::UExact => "u-exact",
            Source::SExact => "s-exact",
            Source::SMonteCarlo => "s-montecarlo",
        }
    }
}

impl std::str::FromStr for Source {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u-exact" => Ok(Source::UExact),
            "s-exact" => Ok(Source::SExact),
            "s-montecarlo" => Ok(Source::SMonteCarlo),
            _ => Err(Error::Param(format!("unknown source `{s}` (u-exact, s-exact, s-montecarlo)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub n: u128,
    pub gap: f64,
    pub defect_bound: f64,
    /// `Var / (n σ²)` of the first coordinate.
    pub variance_ratio: f64,
    pub source: Source,
    /// Certified `L²` bound of dropped layers (0 for `U`).
    pub residual_l2sq: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiscrepancyCurve {
    pub rows: Vec<CurveRow>,
}

impl DiscrepancyCurve {
    pub fn gaps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.gap).collect()
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["n", "gap", "defect", "variance_ratio", "source"]);
        for r in &self.rows {
            t.push(vec![
                r.n.to_string(),
                fmt_float(r.gap),
                fmt_float(r.defect_bound),
                fmt_float(r.variance_ratio),
                r.source.as_str().into(),
            ]);
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveConfig {
    pub dim: usize,
    pub mc_samples: usize,
    pub seed: u64,
    pub tol_l2sq: f64,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig { dim: 1, mc_samples: 100_000, seed: 1, tol_l2sq: DEFAULT_TOL }
    }
}

pub fn discrepancy_curve(ns: &[u128], source: Source, cfg: &CurveConfig) -> Result<DiscrepancyCurve> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Param("ns must be nonempty and strictly increasing".into()));
    }
    if source == Source::SMonteCarlo && cfg.mc_samples < 10_000 {
        return Err(Error::Param("Monte Carlo curves need at least 10⁴ samples".into()));
    }
    let rows = ns
        .par_iter()
        .map(|&n| curve_row(n, source, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscrepancyCurve { rows })
}

fn curve_row(n: u128, source: Source, cfg: &CurveConfig) -> Result<CurveRow> {
    let nu = u64::try_from(n).map_err(|_| Error::Param("n too large".into()))?;
    let scale = n as f64 * SIGMA_SQ;
    match source {
        Source::UExact | Source::SExact => {
            let (d, residual) = if source == Source::UExact {
                (cocycle::exact_dist_u(n, cfg.dim)?, 0.0)
            } else {
                cocycle::exact_dist_s(n, cfg.dim, cfg.tol_l2sq)?
            };
            let g = lattice::sup_lclt_gap(&d, nu, SIGMA_SQ);
            let (_, v) = lattice::moments(&d.components[0]);
            Ok(CurveRow {
                n,
                gap: g.gap,
                defect_bound: g.defect_bound,
                variance_ratio: v / scale,
                source,
                residual_l2sq: residual,
            })
        }
        Source::SMonteCarlo => {
            let traj = LayerTrajectory::new(0, cfg.dim, n, cfg.tol_l2sq)?;
            let xs = sample_cocycle(n, cfg.dim, cfg.mc_samples, cfg.seed, cfg.tol_l2sq)?;
            let g = empirical_gap(&xs, nu, SIGMA_SQ);
            let first: Vec<f64> = xs.iter().map(|x| x[0] as f64).collect();
            Ok(CurveRow {
                n,
                gap: g.gap,
                defect_bound: 0.0,
                variance_ratio: stats::sample_var(&first) / scale,
                source,
                residual_l2sq: traj.residual_bound,
            })
        }
    }
}

/// `S_n(F)` on `samples` trajectories seeded `derive_seed(seed, i)`.
pub fn sample_cocycle(n: u128, dim: usize, samples: usize, seed: u64, tol_l2sq: f64) -> Result<Vec<Vec<i64>>> {
    (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let t = LayerTrajectory::new(derive_seed(seed, i), dim, n, tol_l2sq)?;
            Evaluator::scanning(&t).cocycle_at(n)
        })
        .collect()
}

/// Gap of an empirical law: sup over the sample support and the Gaussian
/// box of `n^{D/2} |P̂(x) − G_n(x)|`.
pub fn empirical_gap(xs: &[Vec<i64>], n: u64, sigma_sq: f64) -> GapReport {
    let dim = xs.first().map_or(1, |x| x.len());
    let total = xs.len() as f64;
    let mut hist: HashMap<&[i64], u64> = HashMap::new();
    for x in xs {
        *hist.entry(x.as_slice()).or_insert(0) += 1;
    }
    let v = n as f64 * sigma_sq;
    let scale = (n as f64).powf(dim as f64 / 2.0);
    let g = |x: &[i64]| x.iter().map(|&c| lattice::gauss(c, v)).product::<f64>();
    let p = |x: &[i64]| hist.get(x).map_or(0.0, |&c| c as f64 / total);
    let mut best = (0.0f64, vec![0i64; dim]);
    let mut consider = |x: &[i64]| {
        let val = scale * (p(x) - g(x)).abs();
        if val > best.0 {
            best = (val, x.to_vec());
        }
    };
    for x in hist.keys() {
        consider(x);
    }
    let r = (8.0 * (v * dim as f64).sqrt()).ceil() as i64;
    let mut x = vec![-r; dim];
    'box_loop: loop {
        consider(&x);
        for a in (0..dim).rev() {
            x[a] += 1;
            if x[a] <= r {
                continue 'box_loop;
            }
            x[a] = -r;
        }
        break;
    }
    GapReport { gap: best.0, defect_bound: 0.0, argmax: best.1 }
}

/// Exact truncated law against a Monte Carlo histogram at one `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct McCrossCheck {
    pub n: u128,
    pub gap_exact: f64,
    pub gap_mc: f64,
    /// `n^{D/2} √(p(1−p)/N)` at the exact argmax.
    pub sigma: f64,
    pub tv: f64,
    pub pass: bool,
}

pub fn mc_cross_check(n: u128, dim: usize, samples: usize, seed: u64, tol_l2sq: f64) -> Result<McCrossCheck> {
    let nu = n as u64;
    let (d, _) = cocycle::exact_dist_s(n, dim, tol_l2sq)?;
    let ge = lattice::sup_lclt_gap(&d, nu, SIGMA_SQ);
    let xs = sample_cocycle(n, dim, samples, seed, tol_l2sq)?;
    let gm = empirical_gap(&xs, nu, SIGMA_SQ);
    let pstar = d.prob(&ge.argmax);
    let sigma = (nu as f64).powf(dim as f64 / 2.0) * stats::binomial_sigma(pstar, samples as u64);
    let mut hist: HashMap<&[i64], u64> = HashMap::new();
    for x in &xs {
        *hist.entry(x.as_slice()).or_insert(0) += 1;
    }
    // TV over the sample support plus exact mass missed by the samples
    let mut seen = 0.0;
    let mut acc = 0.0;
    for (x, &c) in &hist {
        let p = d.prob(x);
        seen += p;
        acc += (c as f64 / samples as f64 - p).abs();
    }
    let tv = 0.5 * (acc + (1.0 - d.defect() - seen).max(0.0));
    Ok(McCrossCheck {
        n,
        gap_exact: ge.gap,
        gap_mc: gm.gap,
        sigma,
        tv,
        pass: (ge.gap - gm.gap).abs() <= 3.0 * sigma,
    })
}

/// Fitted constants of the two characteristic-function regimes of `U(f, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharFnCheck {
    pub n: u128,
    /// `false` when `Î_n` is empty (the law is a point mass).
    pub applicable: bool,
    pub l_fit: f64,
    pub c_fit: f64,
    pub psi_at_zero: f64,
    pub pass: bool,
}

pub const CHARFN_GRID: usize = 512;

pub fn charfn_regime_check(n: u128) -> Result<CharFnCheck> {
    if n < 16 {
        return Err(Error::Param("charfn regime check needs n ≥ 16".into()));
    }
    let law = cocycle::exact_law_u(n)?;
    let psi_at_zero = lattice::char_fn(&law, 0.0).norm();
    if schedule::i_hat(n).is_empty() {
        return Ok(CharFnCheck { n, applicable: false, l_fit: f64::NAN, c_fit: f64::NAN, psi_at_zero, pass: false });
    }
    let nf = n as f64;
    let sn = nf.sqrt();
    let q = nf.powf(0.25);
    let psi = |x: f64| lattice::char_fn(&law, x / sn).norm();
    let m = CHARFN_GRID as f64;
    // |ψ(x/√n)| ≤ 2 exp(−L x²) on 0 < |x| ≤ n^{1/4} (ψ is even)
    let l_fit = (1..=CHARFN_GRID)
        .map(|i| {
            let x = q * i as f64 / m;
            -(psi(x) / 2.0).ln() / (x * x)
        })
        .fold(f64::INFINITY, f64::min);
    // |ψ(x/√n)| ≤ 2 exp(−c n^{1/4}) on n^{1/4} ≤ x ≤ π√n
    let hi = std::f64::consts::PI * sn;
    let c_fit = (0..CHARFN_GRID)
        .map(|i| {
            let x = q + (hi - q) * i as f64 / (m - 1.0);
            -(psi(x) / 2.0).ln() / q
        })
        .fold(f64::INFINITY, f64::min);
    Ok(CharFnCheck { n, applicable: true, l_fit, c_fit, psi_at_zero, pass: l_fit > 0.0 && c_fit > 0.0 })
}

/// Exact variance of the junk term `V_{log(n−1)}`, the nominal closed form
/// (`p_{k+1}` replaced by `n`), and the bound `8/log n`.
#[derive(Debug, Clone, PartialEq)]
pub struct JunkCheck {
    pub n: u128,
    pub var_exact: f64,
    pub var_nominal: f64,
    pub bound: f64,
    pub pass: bool,
}

pub fn junk_variance_check(n: u128) -> Result<JunkCheck> {
    if n < 3 {
        return Err(Error::Param("junk variance needs n ≥ 3".into()));
    }
    let bound = 8.0 / (n as f64).log2();
    let Some(k) = schedule::log2_even(n) else {
        return Ok(JunkCheck { n, var_exact: 0.0, var_nominal: 0.0, bound, pass: true });
    };
    // V_k with n − 2^k = 1 coordinate pair per layer
    let a = lattice::centered_pair_law(schedule::alpha_sq_of(k), p_of(k) as i64)?;
    let b = lattice::centered_pair_law(schedule::alpha_sq_of(k + 1), p_of(k + 1) as i64)?;
    let (_, var_exact) = lattice::moments(&lattice::convolve(&a, &b)?);
    let nf = n as f64;
    let var_nominal =
        2.0 * ((nf - 1.0).powi(2) * schedule::alpha_sq_of(k) + nf * nf * schedule::alpha_sq_of(k + 1));
    Ok(JunkCheck { n, var_exact, var_nominal, bound, pass: var_exact <= bound && var_nominal <= bound })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferRow {
    pub n: u128,
    pub gap_y: f64,
    pub gap_x: f64,
    pub z_second_moment: f64,
    /// `E‖Z‖² · √log n / n`.
    pub certificate_ratio: f64,
}

impl TransferRow {
    pub fn diff(&self) -> f64 {
        (self.gap_x - self.gap_y).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub rows: Vec<TransferRow>,
    pub certificate_ok: bool,
    /// `|gap(X) − gap(Y)|` at the largest `n` below that at the smallest.
    pub pass: bool,
}

/// `Z_n = w (X − Y)` with `α² = 1/4`, `w = ⌊n^{1/4}⌋`: `E Z² = √n / 2`-ish.
pub fn shaped_z(n: u128) -> Result<LatticeDist> {
    let w = (n as f64).powf(0.25).floor() as i64;
    lattice::centered_pair_law(0.25, w)
}

/// Runs the transfer harness on one-dimensional families. The certificate
/// `E Z_n² ≤ C n / √log n` is checked with `cert_c` and flagged, not enforced.
pub fn transfer_check<Y, Z>(y_family: Y, z_family: Z, ns: &[u128], cert_c: f64) -> Result<TransferReport>
where
    Y: Fn(u128) -> Result<LatticeDist> + Sync,
    Z: Fn(u128) -> Result<LatticeDist> + Sync,
{
    if ns.len() < 2 {
        return Err(Error::Param("transfer grid needs at least two n".into()));
    }
    let rows = ns
        .par_iter()
        .map(|&n| {
            let nu = n as u64;
            let y = y_family(n)?;
            let z = z_family(n)?;
            let (mz, vz) = lattice::moments(&z);
            let x = lattice::convolve(&y, &z)?;
            let gy = lattice::sup_lclt_gap(&ProductDist::iid(y, 1)?, nu, SIGMA_SQ).gap;
            let gx = lattice::sup_lclt_gap(&ProductDist::iid(x, 1)?, nu, SIGMA_SQ).gap;
            let second = vz + mz * mz;
            let nf = n as f64;
            Ok(TransferRow {
                n,
                gap_y: gy,
                gap_x: gx,
                z_second_moment: second,
                certificate_ratio: second * nf.log2().max(1.0).sqrt() / nf,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let certificate_ok = rows.iter().all(|r| r.certificate_ratio <= cert_c);
    let pass = rows.last().unwrap().diff() < rows[0].diff();
    Ok(TransferReport { rows, certificate_ok, pass })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallBallRow {
    pub n: u128,
    pub r: u64,
    /// `n · P(‖S_n‖_∞ ≤ r)`.
    pub value: f64,
    /// `(2r + 2)^D / (2πσ²)^{D/2}`.
    pub bound: f64,
    pub margin: f64,
}

pub fn small_ball_check(ns: &[u128], r: u64, dim: usize, tol_l2sq: f64) -> Result<Vec<SmallBallRow>> {
    ns.par_iter()
        .map(|&n| {
            let (law, _) = cocycle::exact_law_s(n, tol_l2sq)?;
            let ri = r as i64;
            let p1: f64 = (-ri..=ri).map(|x| law.prob(x)).sum();
            let d = dim as f64;
            let value = (n as f64).powf(d / 2.0) * p1.powi(dim as i32);
            let bound = (2.0 * r as f64 + 2.0).powf(d) / (2.0 * std::f64::consts::PI * SIGMA_SQ).powf(d / 2.0);
            Ok(SmallBallRow { n, r, value, bound, margin: bound - value })
        })
        .collect()
}

/// Monte Carlo `E‖S_n(F) − U(F, n)‖² · √log n / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct L2Row {
    pub n: u128,
    pub scaled_mean: f64,
    pub scaled_se: f64,
}

pub fn l2_error_scaling(ns: &[u128], dim: usize, samples: usize, seed: u64, tol_l2sq: f64) -> Result<Vec<L2Row>> {
    let mut out = Vec::with_capacity(ns.len());
    for (idx, &n) in ns.iter().enumerate() {
        let base = derive_seed(seed, idx as u64);
        let vals = (0..samples as u64)
            .into_par_iter()
            .map(|i| {
                let t = LayerTrajectory::new(derive_seed(base, i), dim, n, tol_l2sq)?;
                let mut ev = Evaluator::scanning(&t);
                let s = ev.cocycle_at(n)?;
                let u = ev.u_at(n)?;
                Ok(s.iter().zip(&u).map(|(a, b)| ((a - b) as f64).powi(2)).sum::<f64>())
            })
            .collect::<Result<Vec<f64>>>()?;
        let nf = n as f64;
        let scale = nf.log2().sqrt() / nf;
        let (m, se) = stats::mean_se(&vals);
        out.push(L2Row { n, scaled_mean: m * scale, scaled_se: se * scale });
    }
    Ok(out)
}
