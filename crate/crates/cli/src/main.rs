//! Batch front end: one subcommand per experiment family, CSV/JSON reports
//! with a `# seed=… config=…` header, machine-readable errors on stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cocyclab_core::report::{fmt_float, Table};
use cocyclab_core::{cocycle, lcltlab, polyrange, twosys, Error};

#[derive(Parser, Debug)]
#[command(name = "cocyclab", version, about = "Numerical laboratory for a layered lattice cocycle")]
struct Cli {
    /// Master seed recorded in every output header.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Lattice dimension D for experiments that take one.
    #[arg(long, global = true, default_value_t = 1)]
    dim: usize,
    /// Output directory; reports go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `key=value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Evaluate the experiment's acceptance condition; exit 4 if it fails.
    #[arg(long, global = true)]
    check: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// LCLT discrepancy curve.
    Lclt(LcltArgs),
    /// Regime decomposition of S_n(F) on one trajectory per n.
    Decomp(DecompArgs),
    /// Range density at polynomial times.
    Range(RangeArgs),
    /// Cesàro averages of the pair probability along the epochs.
    Diverge(DivergeArgs),
    /// Recurrence counterexample certificate.
    Recur(RecurArgs),
    /// Gap transfer under a small perturbation.
    Transfer(TransferArgs),
    /// Exhaustive growth claims for polynomial times.
    Claims(ClaimsArgs),
    /// Characteristic-function regime fits for U(f, n).
    Charfn(CharfnArgs),
    /// Small-ball values n^{D/2} P(|S_n| ≤ r).
    Smallball(SmallballArgs),
}

#[derive(Args, Debug, Serialize)]
struct LcltArgs {
    #[arg(long, default_value = "u-exact")]
    source: String,
    #[arg(long, value_delimiter = ',', default_value = "64,256,1024,4096")]
    ns: Vec<u128>,
    #[arg(long, default_value_t = 100_000)]
    mc_samples: usize,
    #[arg(long, default_value_t = lcltlab::DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct DecompArgs {
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    ns: Vec<u128>,
    #[arg(long, default_value_t = lcltlab::DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct RangeArgs {
    #[arg(long, default_value = "n^2")]
    p: String,
    #[arg(long, value_delimiter = ',', default_value = "250,500,1000,2000,4000")]
    ns: Vec<u64>,
    #[arg(long, default_value_t = 30)]
    samples: usize,
    #[arg(long, default_value_t = lcltlab::DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct DivergeArgs {
    #[arg(long, default_value = "n^2")]
    p1: String,
    #[arg(long, default_value = "n^2")]
    p2: String,
    /// `c1,c2,depth`.
    #[arg(long, value_delimiter = ',', default_value = "2,2,3")]
    epochs: Vec<u128>,
    #[arg(long, default_value_t = 30)]
    samples: usize,
    #[arg(long, default_value_t = lcltlab::DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct RecurArgs {
    #[arg(long = "L", default_value_t = 100)]
    l: i128,
    #[arg(long, default_value_t = 3)]
    d: u32,
    #[arg(long, default_value_t = 50)]
    horizon: u64,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = lcltlab::DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct TransferArgs {
    #[arg(long, value_delimiter = ',', default_value = "256,1024,4096")]
    ns: Vec<u128>,
    /// Constant of the `E Z² ≤ C n / √log n` certificate (flagged only).
    #[arg(long, default_value_t = 1.0)]
    cert_c: f64,
}

#[derive(Args, Debug, Serialize)]
struct ClaimsArgs {
    #[arg(long, default_value = "n^2")]
    p: String,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 500)]
    n_max: u64,
    #[arg(long, value_delimiter = ',', default_value = "3,4,5")]
    ds: Vec<u32>,
    #[arg(long = "L", default_value_t = 1)]
    l: i128,
}

#[derive(Args, Debug, Serialize)]
struct CharfnArgs {
    #[arg(long, value_delimiter = ',', default_value = "256,1024,4096")]
    ns: Vec<u128>,
}

#[derive(Args, Debug, Serialize)]
struct SmallballArgs {
    #[arg(long, value_delimiter = ',', default_value = "64,256,1024,4096")]
    ns: Vec<u128>,
    #[arg(long, default_value_t = 1)]
    r: u64,
    #[arg(long, default_value_t = lcltlab::DEFAULT_TOL)]
    tol: f64,
}

enum Failure {
    Run(Error),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Output sink: a directory or stdout, plus the shared header.
struct Sink {
    out: Option<PathBuf>,
    header: String,
}

impl Sink {
    fn new<A: Serialize>(cli: &Cli, args: &A) -> Result<Self, Error> {
        let config = serde_json::to_string(args).map_err(|e| Error::Input(e.to_string()))?;
        if let Some(dir) = &cli.out {
            std::fs::create_dir_all(dir)?;
        }
        Ok(Sink { out: cli.out.clone(), header: format!("seed={} dim={} config={config}", cli.seed, cli.dim) })
    }

    fn emit(&self, name: &str, body: &str) -> Result<(), Error> {
        match &self.out {
            Some(dir) => std::fs::write(dir.join(name), body)?,
            None => print!("{body}"),
        }
        Ok(())
    }

    fn csv(&self, name: &str, t: &Table) -> Result<(), Error> {
        self.emit(name, &t.to_csv(&self.header))
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), Error> {
        #[derive(Serialize)]
        struct Wrapped<'a, T> {
            header: &'a str,
            report: &'a T,
        }
        let s = serde_json::to_string_pretty(&Wrapped { header: &self.header, report: value })
            .map_err(|e| Error::Input(e.to_string()))?;
        self.emit(name, &(s + "\n"))
    }
}

fn check(cli: &Cli, ok: bool, what: impl FnOnce() -> String) -> Outcome {
    if cli.check && !ok {
        Err(Failure::Check(what()))
    } else {
        Ok(())
    }
}

fn poly(s: &str) -> Result<polyrange::IntPolynomial, Error> {
    let p: polyrange::IntPolynomial = s.parse()?;
    polyrange::validate_poly(&p, polyrange::PolyContext::Deg2Plus)?;
    Ok(p)
}

fn lclt(cli: &Cli, a: &LcltArgs) -> Outcome {
    let sink = Sink::new(cli, a)?;
    let source: lcltlab::Source = a.source.parse()?;
    let cfg = lcltlab::CurveConfig { dim: cli.dim, mc_samples: a.mc_samples, seed: cli.seed, tol_l2sq: a.tol };
    let c = lcltlab::discrepancy_curve(&a.ns, source, &cfg)?;
    sink.csv("lclt.csv", &c.table())?;
    let g = c.gaps();
    let inversions = g.windows(2).filter(|w| w[1] > w[0]).count();
    let ok = g.len() >= 2 && g[g.len() - 1] < g[0] && g.iter().all(|&x| x > 0.0) && inversions <= 1;
    check(cli, ok, || format!("gaps {g:?}"))
}

fn decomp(cli: &Cli, a: &DecompArgs) -> Outcome {
    let sink = Sink::new(cli, a)?;
    let mut t = Table::new(&[
        "n", "comp", "s_n", "z_sm", "y_hat", "z_la", "w", "u", "e", "e_display", "e_full", "z_script", "identities",
    ]);
    let mut all = true;
    for (i, &n) in a.ns.iter().enumerate() {
        let traj = cocycle::LayerTrajectory::new(
            cocyclab_core::mixer::derive_seed(cli.seed, i as u64),
            cli.dim,
            n.max(1),
            a.tol,
        )?;
        let r = cocycle::decompose(&traj, n)?;
        let ok = r.identities_hold();
        all &= ok;
        for c in 0..cli.dim {
            let cols = [&r.s_n, &r.z_sm, &r.y_hat, &r.z_la, &r.w, &r.u, &r.e, &r.e_display, &r.e_full, &r.z_script];
            let mut row = vec![n.to_string(), c.to_string()];
            row.extend(cols.iter().map(|v| v[c].to_string()));
            row.push(ok.to_string());
            t.push(row);
        }
    }
    sink.csv("decomp.csv", &t)?;
    check(cli, all, || "decomposition identities fail".into())
}

fn range(cli: &Cli, a: &RangeArgs) -> Outcome {
    let sink = Sink::new(cli, a)?;
    let p = poly(&a.p)?;
    let rows = polyrange::range_moments_mc(&p, &a.ns, a.samples, cli.seed, a.tol)?;
    sink.csv("range.csv", &polyrange::range_table(&rows))?;
    let (first, last) = (rows[0].mean_ratio, rows[rows.len() - 1].mean_ratio);
    check(cli, last > first && last > 0.85, || format!("mean ratio {first} → {last}"))
}

fn diverge(cli: &Cli, a: &DivergeArgs) -> Outcome {
    let sink = Sink::new(cli, a)?;
    let (p1, p2) = (poly(&a.p1)?, poly(&a.p2)?);
    let [c1, c2, depth] = a.epochs[..] else {
        return Err(Error::Param("--epochs takes c1,c2,depth".into()).into());
    };
    let e = polyrange::build_epochs(c1, c2, depth as usize)?;
    let r = twosys::divergence_averages(&p1, &p2, &e, a.samples, cli.seed, a.tol)?;
    sink.csv("divergence.csv", &r.table())?;
    let ok = match (r.row(2), r.row(3)) {
        (Some(r2), Some(r3)) => r2.a_n - r2.a_m >= 0.05 && r3.a_m < r2.a_m,
        _ => false,
    };
    check(cli, ok, || "divergence thresholds not met (needs depth ≥ 3)".into())
}

fn recur(cli: &Cli, a: &RecurArgs) -> Outcome {
    let sink = Sink::new(cli, a)?;
    let cert = twosys::cp_certificate(a.l, a.d, a.horizon, a.samples, cli.seed, a.tol)?;
    sink.json("recur.json", &cert)?;
    check(cli, cert.lower_bound >= 0.9, || format!("lower bound {}", cert.lower_bound))
}

fn transfer(cli: &Cli, a: &TransferArgs) -> Outcome {
    let sink = Sink::new(cli, a)?;
    let r = lcltlab::transfer_check(cocycle::exact_law_u, lcltlab::shaped_z, &a.ns, a.cert_c)?;
    let mut t = Table::new(&["n", "gap_y", "gap_x", "z_second_moment", "certificate_ratio"]);
    for row in &r.rows {
        t.push(vec![
            row.n.to_string(),
            fmt_float(row.gap_y),
            fmt_float(row.gap_x),
            fmt_float(row.z_second_moment),
            fmt_float(row.certificate_ratio),
        ]);
    }
    sink.csv("transfer.csv", &t)?;
    check(cli, r.pass, || "gap difference does not shrink".into())
}

#[derive(Serialize)]
struct ClaimsReport {
    gamma_fit: f64,
    worst: (u64, u64),
    simple_bound: bool,
    cubic: Vec<CubicClaim>,
}

#[derive(Serialize)]
struct CubicClaim {
    d: u32,
    counterexample: Option<(u64, u64)>,
}

fn claims(cli: &Cli, a: &ClaimsArgs) -> Outcome {
    let sink = Sink::new(cli, a)?;
    let p = poly(&a.p)?;
    let g = polyrange::growth_claims_check(&p, a.gamma, a.n_max)?;
    let cubic = a
        .ds
        .iter()
        .map(|&d| Ok(CubicClaim { d, counterexample: polyrange::claim2_check(d, a.l, a.n_max)? }))
        .collect::<Result<Vec<_>, Error>>()?;
    let ok = g.pass && cubic.iter().all(|c| c.counterexample.is_none());
    let rep = ClaimsReport { gamma_fit: g.gamma_fit, worst: g.worst, simple_bound: g.pass, cubic };
    sink.json("claims.json", &rep)?;
    check(cli, ok, || "growth claim counterexample".into())
}

fn charfn(cli: &Cli, a: &CharfnArgs) -> Outcome {
    let sink = Sink::new(cli, a)?;
    let mut t = Table::new(&["n", "applicable", "l_fit", "c_fit", "psi_at_zero", "pass"]);
    let mut all = true;
    for &n in &a.ns {
        let c = lcltlab::charfn_regime_check(n)?;
        all &= c.pass;
        t.push(vec![
            n.to_string(),
            c.applicable.to_string(),
            fmt_float(c.l_fit),
            fmt_float(c.c_fit),
            fmt_float(c.psi_at_zero),
            c.pass.to_string(),
        ]);
    }
    sink.csv("charfn.csv", &t)?;
    check(cli, all, || "characteristic-function fit not positive".into())
}

fn smallball(cli: &Cli, a: &SmallballArgs) -> Outcome {
    let sink = Sink::new(cli, a)?;
    let rows = lcltlab::small_ball_check(&a.ns, a.r, cli.dim, a.tol)?;
    let mut t = Table::new(&["n", "r", "value", "bound", "margin"]);
    for r in &rows {
        t.push(vec![r.n.to_string(), r.r.to_string(), fmt_float(r.value), fmt_float(r.bound), fmt_float(r.margin)]);
    }
    sink.csv("smallball.csv", &t)?;
    check(cli, rows.iter().all(|r| r.margin >= 0.0), || "small-ball bound exceeded".into())
}

/// Appends `--key value` for every config entry not given on the command line.
fn expand_config(mut argv: Vec<String>) -> Result<Vec<String>, Error> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            path = argv.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text = std::fs::read_to_string(Path::new(&path))?;
    let given = |k: &str| argv.iter().any(|a| a == &format!("--{k}") || a.starts_with(&format!("--{k}=")));
    let mut extra = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Input(format!("{path}:{}: expected key=value", ln + 1)))?;
        let (k, v) = (k.trim().replace('_', "-"), v.trim());
        if k == "config" || given(&k) {
            continue;
        }
        match (k.as_str(), v) {
            ("check", "true") => extra.push("--check".to_string()),
            ("check", "false") => {}
            _ => extra.extend([format!("--{k}"), v.to_string()]),
        }
    }
    argv.extend(extra);
    Ok(argv)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Param(_) | Error::Poly(_) | Error::Input(_) | Error::Io(_) => 2,
        Error::Horizon(_) | Error::Support(_) | Error::Overflow(_) => 3,
    }
}

fn report_error(e: &Error) -> ExitCode {
    let j = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
    eprintln!("{j}");
    ExitCode::from(exit_code(e))
}

fn main() -> ExitCode {
    let argv = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => return report_error(&e),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match &cli.cmd {
        Command::Lclt(a) => lclt(&cli, a),
        Command::Decomp(a) => decomp(&cli, a),
        Command::Range(a) => range(&cli, a),
        Command::Diverge(a) => diverge(&cli, a),
        Command::Recur(a) => recur(&cli, a),
        Command::Transfer(a) => transfer(&cli, a),
        Command::Claims(a) => claims(&cli, a),
        Command::Charfn(a) => charfn(&cli, a),
        Command::Smallball(a) => smallball(&cli, a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Run(e)) => report_error(&e),
        Err(Failure::Check(msg)) => {
            eprintln!("{}", serde_json::json!({ "error": "check", "message": msg }));
            ExitCode::from(4)
        }
    }
}
