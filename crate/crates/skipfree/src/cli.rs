//! The `skipfree` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use skipfree_core::chain::{reference_measure, stationary, validate};
use skipfree_core::cutoff::CutoffOptions;
use skipfree_core::ergodicity::bounds_table;
use skipfree_core::fluctuation::{downward_pgf, overshoot_law, two_sided_pgf};
use skipfree_core::passage::{downward_law, hitting_law, upward_law};
use skipfree_core::potential::{fqe_bundle, green, green_via_fqe, hitting_pgf, regular_boundary_pgf, FqEBundle};
use skipfree_core::simulate::{HittingSampler, SimConfig};
use skipfree_core::spectral::{eigendecompose, mc_class_check, min_rescaled_kappa, normality_defects, s_class_check, siegmund_bd};
use skipfree_core::{linalg, Boundary, ChainSpec, GeometricMixture, HittingSpec, Measure};

use crate::error::{CliError, CliResult};
use crate::format::{write_json, Cell, Fmt, Format, Table};
use crate::io::{load_chain, read_chain_file, read_family, LoadedChain};
use crate::parallel;

#[derive(Debug, Parser)]
#[command(name = "skipfree", version, about = "Potential kernels, passage laws and mixing diagnostics for upward skip-free chains")]
pub struct Cli {
    /// chain file (JSON)
    #[arg(long, global = true)]
    pub chain: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    /// significant digits in the output
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=17))]
    pub precision: Option<u8>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the chain file and list every violation
    Validate,
    /// Green kernel and the FqE functions at one q
    Potential(PotentialArgs),
    /// Passage-time laws: pgf values, pmf tables, mixture form, overshoot
    Passage(PassageArgs),
    /// Eigenvalues, κ(Λ), Riesz constants and class verdicts
    Spectrum(SpectrumArgs),
    /// Convergence bounds table
    Bounds(BoundsArgs),
    /// Separation cutoff diagnostics over a family of chains
    Cutoff(CutoffArgs),
    /// Monte-Carlo hitting and overshoot tables
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct PotentialArgs {
    #[arg(long)]
    pub q: f64,
    /// reference point 𝔬 (default: lowest state)
    #[arg(long = "ref")]
    pub ref_point: Option<i64>,
    /// killing levels b for H^{b]} and κ^{b]} (default: all)
    #[arg(long, value_delimiter = ',')]
    pub cutoffs: Option<Vec<i64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Law {
    Pgf,
    Pmf,
    Overshoot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Rep {
    Table,
    Mixture,
}

#[derive(Debug, Args)]
pub struct PassageArgs {
    #[arg(long)]
    pub from: i64,
    /// a=3 (or 3), b]=1 (or 1]), corridor=b,a, return=a
    #[arg(long)]
    pub to: Target,
    #[arg(long, value_enum, default_value = "pmf")]
    pub law: Law,
    /// q values for --law pgf
    #[arg(long, value_delimiter = ',')]
    pub q: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub n_max: u64,
    #[arg(long, value_enum, default_value = "table")]
    pub rep: Rep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Mc,
    S,
    Normal,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// fail with exit code 1 unless the chain is in the class
    #[arg(long, value_enum)]
    pub check: Option<Check>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = 5)]
    pub n_max: u32,
}

#[derive(Debug, Args)]
pub struct CutoffArgs {
    /// list of chains or a generator such as {"kind":"bd","p_up":0.7,"sizes":[8,16,32,64]}
    #[arg(long)]
    pub family: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    pub eps: f64,
    /// required last/first ratio of t_n θ̄_n
    #[arg(long, default_value_t = 4.0)]
    pub growth_factor: f64,
    /// keep members outside the monotone similarity class
    #[arg(long)]
    pub allow_non_sm: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimLaw {
    Hitting,
    Overshoot,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub paths: u64,
    #[arg(long, default_value_t = 1000)]
    pub horizon: u64,
    #[arg(long)]
    pub from: i64,
    #[arg(long)]
    pub to: Target,
    #[arg(long, value_enum, default_value = "hitting")]
    pub law: SimLaw,
}

/// Target set of a passage time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Target(pub HittingSpec);

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let int = |t: &str| t.trim().parse::<i64>().map_err(|_| format!("{t:?} is not a state"));
        let s = s.trim();
        let (key, val) = match s.split_once('=') {
            Some((k, v)) => (k.trim(), v),
            None if s.ends_with(']') => ("b]", &s[..s.len() - 1]),
            None if s.contains(',') => ("corridor", s),
            None => ("a", s),
        };
        let hs = match key {
            "a" => HittingSpec::Point(int(val)?),
            "b]" | "b" => HittingSpec::LowerSet(int(val)?),
            "return" => HittingSpec::Return(int(val)?),
            "corridor" => {
                let inner = val.trim().trim_start_matches('(').trim_end_matches(')');
                let (b, a) = inner.split_once(',').ok_or("corridor needs b,a")?;
                HittingSpec::TwoSided { b: int(b)?, a: int(a)? }
            }
            other => return Err(format!("unknown target kind {other:?}; use a=, b]=, corridor= or return=")),
        };
        Ok(Target(hs))
    }
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "skipfree: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let fmt = cli.precision.map(|d| Fmt::new(d as usize)).unwrap_or_default();
    let emit = Emit { format: cli.format, fmt };
    match &cli.command {
        Command::Validate => cmd_validate(cli, emit, out),
        Command::Potential(a) => cmd_potential(&chain(cli)?, a, emit, out),
        Command::Passage(a) => cmd_passage(&chain(cli)?, a, emit, out),
        Command::Spectrum(a) => cmd_spectrum(&chain(cli)?, a, emit, out),
        Command::Bounds(a) => cmd_bounds(&chain(cli)?, a, emit, out, err),
        Command::Cutoff(a) => cmd_cutoff(a, emit, out, err),
        Command::Simulate(a) => cmd_simulate(&chain(cli)?, a, emit, out, err),
    }
}

#[derive(Debug, Clone, Copy)]
struct Emit {
    format: Format,
    fmt: Fmt,
}

impl Emit {
    /// The table as CSV, or as JSON under `key` next to `extra`.
    fn table(&self, t: &Table, key: &str, extra: Map<String, Value>, out: &mut dyn Write) -> CliResult<()> {
        match self.format {
            Format::Csv => t.write_csv(&self.fmt, out),
            Format::Json => {
                let mut m = extra;
                m.insert(key.into(), t.to_json(&self.fmt));
                write_json(&Value::Object(m), out)
            }
        }
    }
}

fn chain(cli: &Cli) -> CliResult<LoadedChain> {
    let path = cli.chain.as_ref().ok_or_else(|| CliError::Input("--chain is required for this command".into()))?;
    load_chain(path)
}

/// π from the file when given, otherwise the reference measure of the chain.
fn measure(c: &LoadedChain) -> CliResult<Measure> {
    match &c.pi {
        Some(m) => Ok(m.clone()),
        None => Ok(reference_measure(&c.spec)?),
    }
}

fn cmd_validate(cli: &Cli, emit: Emit, out: &mut dyn Write) -> CliResult<()> {
    let path = cli.chain.as_ref().ok_or_else(|| CliError::Input("--chain is required".into()))?;
    let file = read_chain_file(path)?;
    let spec = file.to_spec()?;
    file.measure()?;
    let report = validate(&spec);
    let lines: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
    let mut t = Table::new(&["violation"]);
    for l in &lines {
        t.push(vec![l.as_str().into()]);
    }
    let mut extra = Map::new();
    extra.insert("pass".into(), report.pass().into());
    extra.insert("states".into(), spec.len().into());
    emit.table(&t, "violations", extra, out)?;
    if report.pass() {
        Ok(())
    } else {
        Err(CliError::Validation(lines))
    }
}

fn cmd_potential(c: &LoadedChain, a: &PotentialArgs, emit: Emit, out: &mut dyn Write) -> CliResult<()> {
    let spec = &c.spec;
    let pi = measure(c)?;
    let f = emit.fmt;
    let g = green(spec, &pi, a.q)?;
    let cutoffs = a.cutoffs.clone().unwrap_or_else(|| FqEBundle::all_cutoffs(spec));
    let bundle = fqe_bundle(spec, &pi, a.q, a.ref_point.unwrap_or(spec.lo()), &cutoffs)?;
    // the rebuild needs every cutoff and an absorbing or killing top
    let gap = if spec.top() == Boundary::Regular {
        None
    } else {
        let all = FqEBundle::all_cutoffs(spec);
        let full = if cutoffs == all { bundle.clone() } else { fqe_bundle(spec, &pi, a.q, bundle.ref_point, &all)? };
        let rebuilt = green_via_fqe(&full)?;
        Some(linalg::max_abs(&(&g.g - &rebuilt.g)) / linalg::max_abs(&g.g))
    };
    let labels: Vec<i64> = (0..bundle.h.len()).map(|i| bundle.lo + i as i64).collect();

    match emit.format {
        Format::Csv => {
            let mut t = Table::new(&["quantity", "b", "x", "y", "value"]);
            let n = spec.len();
            for i in 0..n {
                for j in 0..n {
                    let (x, y) = (spec.label(i), spec.label(j));
                    t.push(vec!["G".into(), Cell::Empty, x.into(), y.into(), g.g[(i, j)].into()]);
                }
            }
            for (i, &x) in labels.iter().enumerate() {
                t.push(vec!["H".into(), Cell::Empty, x.into(), Cell::Empty, bundle.h[i].into()]);
            }
            for (i, &x) in labels.iter().enumerate() {
                t.push(vec!["H_hat".into(), Cell::Empty, x.into(), Cell::Empty, bundle.h_hat[i].into()]);
            }
            for (&b, v) in &bundle.h_killed {
                for (i, &x) in labels.iter().enumerate() {
                    t.push(vec!["H_killed".into(), b.into(), x.into(), Cell::Empty, v[i].into()]);
                }
            }
            for (&b, &k) in &bundle.kappa {
                t.push(vec!["kappa".into(), b.into(), Cell::Empty, Cell::Empty, k.into()]);
            }
            t.push(vec!["C".into(), Cell::Empty, Cell::Empty, Cell::Empty, bundle.c.into()]);
            t.push(vec!["reconstruction_gap".into(), Cell::Empty, Cell::Empty, Cell::Empty, gap.into()]);
            t.write_csv(&f, out)
        }
        Format::Json => {
            let rows: Vec<Value> = (0..spec.len()).map(|i| f.values(&g.g.row(i).iter().copied().collect::<Vec<_>>())).collect();
            let keyed = |m: &std::collections::BTreeMap<i64, Vec<f64>>| -> Value {
                Value::Object(m.iter().map(|(b, v)| (b.to_string(), f.values(v))).collect())
            };
            let v = json!({
                "q": f.value(a.q),
                "lo": spec.lo(),
                "pi": f.values(pi.values().as_slice()),
                "green": rows,
                "green_residual": f.value(g.residual),
                "fqe": {
                    "ref_point": bundle.ref_point,
                    "top": bundle.top,
                    "cemetery": bundle.cemetery,
                    "proxy": bundle.proxy,
                    "states": labels,
                    "c": f.value(bundle.c),
                    "h": f.values(&bundle.h),
                    "h_hat": f.values(&bundle.h_hat),
                    "h_killed": keyed(&bundle.h_killed),
                    "kappa": Value::Object(bundle.kappa.iter().map(|(b, k)| (b.to_string(), f.value(*k))).collect()),
                },
                "reconstruction_gap": f.opt(gap),
            });
            write_json(&v, out)
        }
    }
}

/// Mixture form of a first-passage law and the name of the route that produced it.
fn passage_mixture(spec: &ChainSpec, x: i64, hs: HittingSpec) -> CliResult<(GeometricMixture, &'static str)> {
    let regular = spec.top() == Boundary::Regular;
    Ok(match hs {
        HittingSpec::Point(a) if x <= a => (upward_law(spec, x, a)?, "upward-determinant"),
        HittingSpec::Point(_) | HittingSpec::LowerSet(_) if !regular => (downward_law(spec, x, hs)?, "downward-determinant"),
        _ => (hitting_law(spec, hs, x)?, "cramer"),
    })
}

/// E_x(q^T) through the structural formula, and the route used.
fn passage_pgf(spec: &ChainSpec, pi: &Measure, x: i64, hs: HittingSpec, q: f64) -> CliResult<(f64, &'static str)> {
    let regular = spec.top() == Boundary::Regular;
    Ok(match hs {
        HittingSpec::LowerSet(b) if !regular => (downward_pgf(spec, pi, q, x, b)?.pgf_value, "fqe-killed-kernel"),
        HittingSpec::TwoSided { b, a } if !regular => (two_sided_pgf(spec, pi, q, x, b, a)?.pgf_value, "fqe-killed-kernel"),
        HittingSpec::Point(b) if regular && x > b => (regular_boundary_pgf(spec, pi, q, x, b)?, "fqe-regular-top"),
        _ => {
            let (m, route) = passage_mixture(spec, x, hs)?;
            (m.pgf(q), route)
        }
    })
}

fn complex_json(f: &Fmt, re: f64, im: f64) -> Value {
    json!({ "re": f.value(re), "im": f.value(im) })
}

fn mixture_json(f: &Fmt, m: &GeometricMixture, route: &str) -> Value {
    let cf = m.coefficients();
    let nodes: Vec<Value> = m
        .nodes
        .iter()
        .enumerate()
        .map(|(k, z)| {
            json!({
                "node": complex_json(f, z.re, z.im),
                "multiplicity": m.multiplicities[k],
                "pgf_coefficients": m.pgf_coeffs[k].iter().map(|c| complex_json(f, c.re, c.im)).collect::<Vec<_>>(),
                "coefficients": cf[k].iter().map(|c| complex_json(f, c.re, c.im)).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "route": route,
        "shift": m.shift,
        "defect": f.value(m.defect),
        "atoms": m.atoms.iter().map(|c| complex_json(f, c.re, c.im)).collect::<Vec<_>>(),
        "nodes": nodes,
    })
}

fn cmd_passage(c: &LoadedChain, a: &PassageArgs, emit: Emit, out: &mut dyn Write) -> CliResult<()> {
    let spec = &c.spec;
    let hs = a.to.0;
    let x = a.from;
    spec.idx(x)?;
    let f = emit.fmt;
    match a.law {
        Law::Pmf => {
            let (m, route) = passage_mixture(spec, x, hs)?;
            if a.rep == Rep::Mixture {
                return write_json(&mixture_json(&f, &m, route), out);
            }
            let mut t = Table::new(&["n", "pmf", "cdf"]);
            let mut acc = 0.0;
            for n in 0..=a.n_max {
                let p = m.pmf_at(n as i64);
                acc += p;
                t.push(vec![n.into(), p.into(), acc.into()]);
            }
            let mut extra = Map::new();
            extra.insert("route".into(), route.into());
            extra.insert("defect".into(), f.value(m.defect));
            emit.table(&t, "rows", extra, out)
        }
        Law::Pgf => {
            if a.q.is_empty() {
                return Err(CliError::Input("--law pgf needs --q".into()));
            }
            let pi = measure(c)?;
            let mut t = Table::new(&["q", "pgf", "oracle", "abs_diff", "route"]);
            for &q in &a.q {
                let (v, route) = passage_pgf(spec, &pi, x, hs, q)?;
                let oracle = hitting_pgf(spec, hs, q, x)?;
                t.push(vec![q.into(), v.into(), oracle.into(), (v - oracle).abs().into(), route.into()]);
            }
            emit.table(&t, "rows", Map::new(), out)
        }
        Law::Overshoot => {
            let HittingSpec::LowerSet(b) = hs else {
                return Err(CliError::Input("--law overshoot needs a b]= target".into()));
            };
            let o = overshoot_law(spec, x, b)?;
            let mut t = Table::new(&["k", "prob"]);
            for (i, p) in o.law.iter().enumerate() {
                t.push(vec![(o.lo + i as i64).into(), (*p).into()]);
            }
            let mut extra = Map::new();
            extra.insert("total".into(), f.value(o.total()));
            emit.table(&t, "rows", extra, out)
        }
    }
}

/// Commutator ‖PP̂ − P̂P‖ below this counts as normal.
const NORMAL_TOL: f64 = 1e-10;

fn cmd_spectrum(c: &LoadedChain, a: &SpectrumArgs, emit: Emit, out: &mut dyn Write) -> CliResult<()> {
    let spec = &c.spec;
    let pi = measure(c)?;
    let f = emit.fmt;
    let sd = eigendecompose(spec, &pi)?;
    let s_class = s_class_check(spec);
    let mc = mc_class_check(spec, &pi).ok();
    let normal = normality_defects(spec, &pi).ok();

    match emit.format {
        Format::Csv => {
            let mut t = Table::new(&["k", "re", "im", "modulus"]);
            for (k, z) in sd.eigenvalues.iter().enumerate() {
                t.push(vec![k.into(), z.re.into(), z.im.into(), z.norm().into()]);
            }
            t.write_csv(&f, out)?;
        }
        Format::Json => {
            let basis = sd.basis.as_ref();
            let v = json!({
                "states": spec.len(),
                "pi": f.values(pi.values().as_slice()),
                "eigenvalues": sd.eigenvalues.iter().map(|z| complex_json(&f, z.re, z.im)).collect::<Vec<_>>(),
                "lambda_star": f.value(sd.lambda_star()),
                "real_distinct": sd.real_distinct,
                "min_gap": f.value(sd.min_gap),
                "kappa": f.opt(sd.kappa()),
                "kappa_min": f.opt(min_rescaled_kappa(&sd)),
                "riesz_a": f.opt(basis.map(|b| b.riesz_a)),
                "riesz_b": f.opt(basis.map(|b| b.riesz_b)),
                "eigen_residual": f.opt(basis.map(|b| b.eigen_residual)),
                "biorth_residual": f.opt(basis.map(|b| b.biorth_residual)),
                "diagnostic": sd.diagnostic,
                "checks": {
                    "s": s_class,
                    "mc": mc.map(|m| json!({
                        "monotone": m.monotone,
                        "strictly_monotone": m.strictly_monotone,
                        "restricted_upward_jump": m.restricted_upward_jump,
                        "lazy_siegmund_dual": m.lazy_siegmund_dual,
                        "in_mc": m.in_mc,
                        "in_mc_plus": m.in_mc_plus,
                    })),
                    "normal": normal.map(|(comm, asym)| json!({
                        "commutator": f.value(comm),
                        "asymmetry": f.value(asym),
                        "normal": comm < NORMAL_TOL,
                    })),
                },
            });
            write_json(&v, out)?;
        }
    }
    let failed = match a.check {
        None => None,
        Some(Check::S) => (!s_class).then_some("spectrum is not real and simple"),
        Some(Check::Mc) => (!mc.map(|m| m.in_mc).unwrap_or(false)).then_some("not in the monotone class"),
        Some(Check::Normal) => (!normal.map(|(cm, _)| cm < NORMAL_TOL).unwrap_or(false)).then_some("P is not normal in ℓ²(π)"),
    };
    match failed {
        Some(m) => Err(CliError::CheckFailed(m.into())),
        None => Ok(()),
    }
}

fn cmd_bounds(c: &LoadedChain, a: &BoundsArgs, emit: Emit, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let spec = &c.spec;
    let pi = match &c.pi {
        Some(m) => m.clone(),
        None => stationary(spec)?,
    };
    let f = emit.fmt;
    let tb = bounds_table(spec, &pi, a.n_max)?;
    let mut t = Table::new(&[
        "n",
        "exact_norm",
        "sim_bound",
        "rev_bound",
        "lower",
        "piecewise_bound",
        "tv_exact",
        "tv_bound",
        "tv_fill",
    ]);
    for r in &tb.rows {
        t.push(vec![
            (r.n as i64).into(),
            r.exact_norm.into(),
            r.sim_bound.into(),
            r.rev_bound.into(),
            r.lower.into(),
            r.piecewise_bound.into(),
            r.tv_exact.into(),
            r.tv_bound.into(),
            r.tv_fill.into(),
        ]);
    }
    if let Some(n) = &tb.notice {
        let _ = writeln!(err, "note: {n}");
    }
    let mut extra = Map::new();
    extra.insert("pi".into(), f.values(&tb.pi));
    extra.insert("pi_min".into(), f.value(tb.pi_min));
    extra.insert("lambda_star".into(), f.value(tb.lambda_star));
    extra.insert("sigma_star".into(), f.value(tb.sigma_star));
    extra.insert("kappa".into(), f.opt(tb.kappa));
    extra.insert("kappa_min".into(), f.opt(tb.kappa_min));
    // condition number of the birth-death conjugate; null outside the monotone class
    let conj = siegmund_bd(spec, &pi).ok().and_then(|d| {
        let pq = stationary(&d.q).ok()?;
        eigendecompose(&d.q, &pq).ok()?.kappa()
    });
    extra.insert("kappa_conjugate".into(), f.opt(conj));
    extra.insert("n_star".into(), tb.n_star.into());
    extra.insert("sing_thompson".into(), tb.sing_thompson.into());
    extra.insert("max_diagonal".into(), f.value(tb.max_diagonal));
    extra.insert("notice".into(), tb.notice.clone().into());
    emit.table(&t, "rows", extra, out)
}

fn cmd_cutoff(a: &CutoffArgs, emit: Emit, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    if !(a.eps > 0.0 && a.eps < 1.0) {
        return Err(skipfree_core::Error::Domain("ε must lie in (0, 1)").into());
    }
    let members = read_family(&a.family)?.members()?;
    let opts = CutoffOptions { growth_factor: a.growth_factor, allow_non_sm: a.allow_non_sm };
    let fam = parallel::family(&parallel::pool(), &members, a.eps, opts);
    let f = emit.fmt;
    for (i, why) in &fam.excluded {
        let _ = writeln!(err, "note: member {i} excluded: {why}");
    }
    let mut t = Table::new(&[
        "member",
        "states",
        "t_n",
        "t_n_matrix",
        "theta_min",
        "theta_star",
        "rho_sq",
        "product",
        "window_center",
        "window_width",
        "ts_from0",
        "ts",
        "eigcompare",
        "lower_bound",
        "chebyshev",
        "kappa",
        "lp_product",
        "verdict",
    ]);
    for (i, r) in &fam.reports {
        let (_, from0, all) = r.ts_eps[0];
        t.push(vec![
            (*i).into(),
            r.states.into(),
            r.t_n.into(),
            r.t_n_matrix.into(),
            r.theta_min.into(),
            r.theta_star.into(),
            r.rho_sq.into(),
            r.product.into(),
            r.window.0.into(),
            r.window.1.into(),
            from0.into(),
            all.into(),
            r.eigcompare_holds.into(),
            r.lower_bound_holds.into(),
            r.chebyshev_holds.into(),
            r.kappa.into(),
            r.lp_product.into(),
            fam.verdict.as_str().into(),
        ]);
    }
    let mut extra = Map::new();
    extra.insert("verdict".into(), fam.verdict.as_str().into());
    extra.insert("eps".into(), f.value(a.eps));
    extra.insert("growth_factor".into(), f.value(a.growth_factor));
    extra.insert("sup_kappa".into(), f.opt(fam.sup_kappa));
    extra.insert(
        "excluded".into(),
        Value::Array(fam.excluded.iter().map(|(i, w)| json!({"member": i, "reason": w})).collect()),
    );
    emit.table(&t, "members", extra, out)
}

fn cmd_simulate(c: &LoadedChain, a: &SimulateArgs, emit: Emit, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let cfg = SimConfig { seed: a.seed, paths: a.paths, horizon: a.horizon, start: a.from };
    let (sampler, key) = match (a.law, a.to.0) {
        (SimLaw::Hitting, hs) => (HittingSampler::hitting(&c.spec, hs, cfg)?, "n"),
        (SimLaw::Overshoot, HittingSpec::LowerSet(b)) => (HittingSampler::overshoot(&c.spec, b, cfg)?, "k"),
        (SimLaw::Overshoot, _) => return Err(CliError::Input("--law overshoot needs a b]= target".into())),
    };
    let law = parallel::simulate(&parallel::pool(), &sampler);
    let rows = law.rows();
    // drop the empty tail past the last observed bin
    let keep = rows.iter().rposition(|r| r.count > 0).map_or(0, |i| i + 1);
    let mut t = Table::new(&[key, "count", "freq", "lo95", "hi95"]);
    for r in &rows[..keep] {
        t.push(vec![r.value.into(), r.count.into(), r.freq.into(), r.lo95.into(), r.hi95.into()]);
    }
    if law.killed + law.censored > 0 {
        let _ = writeln!(err, "note: {} of {} paths killed, {} censored at the horizon", law.killed, law.paths, law.censored);
    }
    let mut extra = Map::new();
    extra.insert("seed".into(), a.seed.into());
    extra.insert("paths".into(), law.paths.into());
    extra.insert("horizon".into(), a.horizon.into());
    extra.insert("killed".into(), law.killed.into());
    extra.insert("censored".into(), law.censored.into());
    emit.table(&t, "rows", extra, out)
}
