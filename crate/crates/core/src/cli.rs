//! Command-line front end.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::cache::OrbitCache;
use crate::config::RunConfig;
use crate::empirical::empirical_lyapunov_spectrum_seeded;
use crate::error::Error;
use crate::inducing::{
    first_return_scheme, gibbs_branch_weights, induce_potential, induced_pressure, project_measure,
    truncate_and_pressure,
};
use crate::maps::{MapSpec, Potential};
use crate::numeric::linspace;
use crate::output::{num, svg_plot, write_file, write_json, write_table, Table};
use crate::pressure::{
    detect_phase_transitions, evaluate_grid, Method, PotentialFamily, PressureCurve, PressureEngine,
};
use crate::spectra::{
    dimension_spectrum, lyapunov_spectrum, parametric_dimension_spectrum, unbounded_domain_report, ExtReal,
    TemperatureCurve, TemperatureEvaluator, TemperatureOptions, TemperatureSolver,
};
use crate::verify::{failing_ids, run_suite, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "thermoform", version, about = "Pressure, spectra and inducing schemes for full-branch interval maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    /// Run configuration (TOML); defaults are used when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (a hint; results do not depend on it).
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// Write an SVG plot next to each table.
    #[arg(long, global = true)]
    pub plot: bool,
    /// Mirror every CSV as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Print the default configuration and exit.
    #[arg(long)]
    pub print_defaults: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Pressure curve and kink report.
    Pressure,
    /// Lyapunov spectrum.
    Lyapunov,
    /// Temperature function.
    Temperature,
    /// Dimension spectrum.
    Dimension,
    /// First-return inducing scheme, induced pressure and truncation.
    Induce,
    /// Orbit-based level-set dimension estimates.
    Empirical,
    /// Run verification criteria C1 to C10.
    Verify,
}

impl Command {
    pub fn id(self) -> &'static str {
        match self {
            Command::Pressure => "pressure",
            Command::Lyapunov => "lyapunov",
            Command::Temperature => "temperature",
            Command::Dimension => "dimension",
            Command::Induce => "induce",
            Command::Empirical => "empirical",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Warning {
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub task: &'static str,
    pub wall_time_s: f64,
    pub warnings: Vec<Warning>,
    pub artifacts: Vec<PathBuf>,
    /// Extra `#`-prefixed report lines (kinks, verification table).
    pub lines: Vec<String>,
    pub exit_code: i32,
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    json: bool,
    plot: bool,
    report: RunReport,
}

impl Ctx {
    fn warn(&mut self, code: &'static str, message: impl Into<String>) {
        self.report.warnings.push(Warning {
            code,
            message: message.into(),
        });
    }

    fn table(&mut self, stem: &str, t: &Table) -> anyhow::Result<()> {
        let paths = write_table(&self.out, stem, t, self.json)?;
        self.report.artifacts.extend(paths);
        Ok(())
    }

    fn plot(&mut self, stem: &str, title: &str, xl: &str, yl: &str, pts: &[(f64, f64)]) -> anyhow::Result<()> {
        if self.plot {
            let p = self.out.join(format!("{stem}.svg"));
            write_file(&p, svg_plot(title, xl, yl, pts).as_bytes())?;
            self.report.artifacts.push(p);
        }
        Ok(())
    }

    fn engine(&mut self, map: &MapSpec, base: &Potential, method: Method) -> Result<PressureEngine, Error> {
        let opts = self.cfg.pressure_options();
        match method {
            Method::PeriodicOrbit { period } if self.cfg.cache.enabled => {
                let cache = OrbitCache::new(&self.cfg.cache.dir);
                let (orbits, hit) = cache.orbits(map, period, opts.budget, opts.periodic_tol)?;
                if hit {
                    self.warn("cache_hit", format!("periodic orbits of period {period} loaded from cache"));
                }
                PressureEngine::from_orbits(map, base, period, &orbits)
            }
            m => PressureEngine::with_options(map, base, m, opts),
        }
    }
}

/// Parses `args` and runs; returns the process exit code. Messages go to
/// stdout and stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(report) => {
            for l in &report.lines {
                println!("{l}");
            }
            for w in &report.warnings {
                println!("#warning {} {}", w.code, w.message);
            }
            for a in &report.artifacts {
                println!("#artifact {}", a.display());
            }
            report.exit_code
        }
        Err(RunError::Config(e)) => {
            eprintln!("config error: {e:#}");
            EXIT_CONFIG
        }
        Err(RunError::Compute(e)) => {
            eprintln!("error: {e:#}");
            EXIT_PARTIAL
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(anyhow::Error),
    Compute(anyhow::Error),
}

pub fn run(cli: &Cli) -> Result<RunReport, RunError> {
    if cli.print_defaults {
        print!("{}", RunConfig::default().to_toml());
        return Ok(RunReport {
            task: "print-defaults",
            wall_time_s: 0.0,
            warnings: vec![],
            artifacts: vec![],
            lines: vec![],
            exit_code: EXIT_OK,
        });
    }
    let command = cli
        .command
        .ok_or_else(|| RunError::Config(anyhow!("no subcommand given; see --help")))?;
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(RunConfig::default()),
    }
    .map_err(RunError::Config)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(RunError::Config(anyhow!("--workers must be positive")));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| RunError::Compute(anyhow!("thread pool: {e}")))?;
    let mut ctx = Ctx {
        out: cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone()),
        json: cli.json || cfg.output.json,
        plot: cli.plot || cfg.output.plot,
        cfg,
        report: RunReport {
            task: command.id(),
            wall_time_s: 0.0,
            warnings: vec![],
            artifacts: vec![],
            lines: vec![],
            exit_code: EXIT_OK,
        },
    };
    let start = Instant::now();
    let res = pool.install(|| match command {
        Command::Pressure => cmd_pressure(&mut ctx),
        Command::Lyapunov => cmd_lyapunov(&mut ctx),
        Command::Temperature => cmd_temperature(&mut ctx).map(|_| ()),
        Command::Dimension => cmd_dimension(&mut ctx),
        Command::Induce => cmd_induce(&mut ctx),
        Command::Empirical => cmd_empirical(&mut ctx),
        Command::Verify => cmd_verify(&mut ctx),
    });
    ctx.report.wall_time_s = start.elapsed().as_secs_f64();
    res.map_err(RunError::Compute)?;
    if ctx.json {
        let p = ctx.out.join(format!("{}_report.json", command.id()));
        write_json(&p, &ctx.report).map_err(|e| RunError::Compute(e.into()))?;
    }
    Ok(ctx.report)
}

fn cmd_pressure(ctx: &mut Ctx) -> anyhow::Result<()> {
    let task = ctx.cfg.task.pressure.clone();
    let map = ctx.cfg.build_map()?;
    let base = ctx.cfg.build_potential(&map)?;
    let family = match task.parameter {
        crate::pressure::Parameter::T => PotentialFamily::in_t(base, task.fixed),
        crate::pressure::Parameter::Q => PotentialFamily::in_q(base, task.fixed),
    };
    let engine = ctx.engine(&map, &family.base, task.method)?;
    let grid = task.grid.values();
    let results = evaluate_grid(&engine, &family, &grid);
    let name = family.parameter.name();
    let failures = results.iter().filter(|r| r.is_err()).count();
    if failures > 0 {
        let mut t = Table::new(&[name, "pressure", "status"]);
        for (x, r) in grid.iter().zip(&results) {
            match r {
                Ok(v) => t.push(vec![num(*x), num(*v), "ok".into()]),
                Err(e) => t.push(vec![num(*x), String::new(), e.root().to_string()]),
            }
        }
        ctx.table("pressure", &t)?;
        ctx.warn("per_point_failure", format!("{failures} of {} grid points failed", grid.len()));
        ctx.report.exit_code = EXIT_PARTIAL;
        return Ok(());
    }
    let values: Vec<f64> = results.into_iter().map(|r| r.expect("checked")).collect();
    let fam = family.clone();
    let eval: crate::pressure::Evaluator = std::sync::Arc::new(move |x| {
        let (t, q) = fam.tq(x);
        engine.eval(t, q)
    });
    let curve = PressureCurve::from_samples(family.parameter, grid.clone(), values, task.method, Some(eval))?;
    let report = detect_phase_transitions(&curve, task.slope_gap_tol);
    let mut t = Table::new(&[name, "pressure", "left_slope", "right_slope"]);
    for (i, x) in grid.iter().enumerate() {
        t.push(vec![
            num(*x),
            num(curve.values[i]),
            num(curve.left_slopes[i]),
            num(curve.right_slopes[i]),
        ]);
    }
    ctx.table("pressure", &t)?;
    let mut text = String::new();
    for k in &report.kinks {
        let line = format!(
            "#kink location={} left_slope={} right_slope={} gap={}",
            num(k.location),
            num(k.left_slope),
            num(k.right_slope),
            num(k.gap)
        );
        text.push_str(&line);
        text.push('\n');
        ctx.report.lines.push(line);
    }
    if let Some(tp) = report.t_plus_estimate {
        let line = format!("#t_plus {}", num(tp));
        text.push_str(&line);
        text.push('\n');
        ctx.report.lines.push(line);
    }
    let p = ctx.out.join("pressure_kinks.txt");
    write_file(&p, text.as_bytes())?;
    ctx.report.artifacts.push(p);
    let pts: Vec<(f64, f64)> = grid.iter().copied().zip(curve.values.iter().copied()).collect();
    ctx.plot("pressure", "pressure", name, "P", &pts)
}

fn geometric_curve(ctx: &mut Ctx, map: &MapSpec, grid: &[f64], method: Method, tol: f64) -> anyhow::Result<PressureCurve> {
    let family = PotentialFamily::geometric(map.branch_count());
    let engine = ctx.engine(map, &family.base, method)?;
    let mut curve = crate::pressure::curve_from_engine(engine, &family, grid)?;
    curve.transition_report = detect_phase_transitions(&curve, tol);
    Ok(curve)
}

fn cmd_lyapunov(ctx: &mut Ctx) -> anyhow::Result<()> {
    let task = ctx.cfg.task.lyapunov.clone();
    let map = ctx.cfg.build_map()?;
    let curve = geometric_curve(ctx, &map, &task.t_grid.values(), task.method, task.slope_gap_tol)?;
    let (lo, hi) = curve.slope_range();
    let lambdas = match &task.lambda_grid {
        Some(g) => g.values(),
        None if hi - lo <= 1e-9 * hi.abs().max(1.0) => vec![0.5 * (lo + hi)],
        None => {
            let m = 0.02 * (hi - lo);
            linspace(lo + m, hi - m, task.points.max(2))
        }
    };
    let spec = lyapunov_spectrum(&curve, &lambdas)?;
    let mut t = Table::new(&["lambda", "L", "argmin_t", "attained", "flag"]);
    for (i, l) in lambdas.iter().enumerate() {
        let p = &spec.provenance[i];
        t.push(vec![
            num(*l),
            num(spec.values[i]),
            num(p.argmin),
            p.attained.to_string(),
            if p.verified { String::new() } else { "lower_bound_only".into() },
        ]);
    }
    ctx.table("lyapunov", &t)?;
    if !spec.domain.lower_verified {
        ctx.warn(
            "lower_bound_only",
            "exponents below the transition slope carry a lower bound only",
        );
    }
    let unattained = spec.provenance.iter().filter(|p| !p.attained).count();
    if unattained > 0 {
        ctx.warn("argmin_at_grid_end", format!("{unattained} minimizers sit at an end of the t grid"));
    }
    let pts: Vec<(f64, f64)> = lambdas.iter().copied().zip(spec.values.iter().copied()).collect();
    ctx.plot("lyapunov", "Lyapunov spectrum", "lambda", "L", &pts)
}

/// Temperature at every grid point; `None` when some point failed (the
/// partial table is written either way).
fn cmd_temperature(ctx: &mut Ctx) -> anyhow::Result<Option<TemperatureCurve>> {
    let task = ctx.cfg.task.temperature.clone();
    let map = ctx.cfg.build_map()?;
    let phi = ctx.cfg.build_potential(&map)?;
    let engine = ctx.engine(&map, &phi, task.method)?;
    let solver = TemperatureSolver::from_engine(
        engine,
        TemperatureOptions {
            bracket: (task.bracket[0], task.bracket[1]),
            ..TemperatureOptions::default()
        },
    )?;
    let q = task.q_grid.values();
    let results: Vec<Result<ExtReal, Error>> = {
        use rayon::prelude::*;
        q.par_iter().map(|&x| solver.solve(x)).collect()
    };
    let failures = results.iter().filter(|r| r.is_err()).count();
    if failures > 0 {
        let mut t = Table::new(&["q", "T", "status"]);
        for (x, r) in q.iter().zip(&results) {
            match r {
                Ok(v) => t.push(vec![num(*x), ext(*v), "ok".into()]),
                Err(e) => t.push(vec![num(*x), String::new(), e.root().to_string()]),
            }
        }
        ctx.table("temperature", &t)?;
        ctx.warn("per_point_failure", format!("{failures} of {} grid points failed", q.len()));
        ctx.report.exit_code = EXIT_PARTIAL;
        return Ok(None);
    }
    let values: Vec<ExtReal> = results.into_iter().map(|r| r.expect("checked")).collect();
    let eval: TemperatureEvaluator = std::sync::Arc::new(move |x| solver.solve(x));
    let curve = TemperatureCurve::from_values(q.clone(), values, Some(eval))?;
    let mut t = Table::new(&["q", "T", "dT", "flag"]);
    for (i, x) in q.iter().enumerate() {
        let v = curve.t_values[i];
        let outside = curve.q_minus.is_some_and(|m| *x < m) || curve.q_plus.is_some_and(|p| *x > p);
        let flag = if v.is_infinite() {
            "infinite"
        } else if outside {
            "unverified"
        } else {
            ""
        };
        t.push(vec![
            num(*x),
            ext(v),
            curve.derivative_estimates[i].map(num).unwrap_or_default(),
            flag.into(),
        ]);
    }
    ctx.table("temperature", &t)?;
    if curve.infinite_transition_at_zero {
        ctx.warn("infinite_temperature", "temperature is infinite for some q < 0");
    }
    if curve.q_minus.is_some() || curve.q_plus.is_some() {
        ctx.warn(
            "unverified_q",
            format!(
                "linear tails outside ({}, {})",
                curve.q_minus.map(num).unwrap_or("-".into()),
                curve.q_plus.map(num).unwrap_or("-".into())
            ),
        );
    }
    let pts: Vec<(f64, f64)> = q
        .iter()
        .zip(&curve.t_values)
        .filter_map(|(x, v)| v.finite().map(|y| (*x, y)))
        .collect();
    ctx.plot("temperature", "temperature function", "q", "T", &pts)?;
    Ok(Some(curve))
}

fn ext(v: ExtReal) -> String {
    match v {
        ExtReal::Finite(x) => num(x),
        ExtReal::Infinite => "inf".into(),
    }
}

fn cmd_dimension(ctx: &mut Ctx) -> anyhow::Result<()> {
    let Some(curve) = cmd_temperature(ctx)? else {
        return Ok(());
    };
    let task = ctx.cfg.task.dimension.clone();
    let (lo, hi) = curve.dimension_window()?;
    let alphas = match &task.alpha_grid {
        Some(g) => g.values(),
        None if hi - lo <= 1e-9 * hi.abs().max(1.0) => vec![0.5 * (lo + hi)],
        None => linspace(lo, hi, task.points.max(2)),
    };
    let spec = dimension_spectrum(&curve, &alphas)?;
    let mut t = Table::new(&["alpha", "D", "argmin_q", "attained", "flag"]);
    for (i, a) in alphas.iter().enumerate() {
        let p = &spec.provenance[i];
        let outside = curve.q_minus.is_some_and(|m| p.argmin < m) || curve.q_plus.is_some_and(|q| p.argmin > q);
        t.push(vec![
            num(*a),
            num(spec.values[i]),
            num(p.argmin),
            p.attained.to_string(),
            if outside { "unverified".into() } else { String::new() },
        ]);
    }
    ctx.table("dimension", &t)?;
    let par = parametric_dimension_spectrum(&curve);
    let mut pt = Table::new(&["alpha", "D"]);
    for (a, d) in &par {
        pt.push(vec![num(*a), num(*d)]);
    }
    ctx.table("dimension_parametric", &pt)?;
    if curve.infinite_transition_at_zero {
        let r = unbounded_domain_report(&curve)?;
        ctx.warn(
            "unbounded_domain",
            format!("alpha_c={} D={} beyond alpha_c", num(r.alpha_c), num(r.dimension_beyond)),
        );
    }
    let pts: Vec<(f64, f64)> = alphas.iter().copied().zip(spec.values.iter().copied()).collect();
    ctx.plot("dimension", "dimension spectrum", "alpha", "D", &pts)
}

fn cmd_induce(ctx: &mut Ctx) -> anyhow::Result<()> {
    let task = ctx.cfg.task.induce.clone();
    let map = ctx.cfg.build_map()?;
    let scheme = first_return_scheme(&map, ctx.cfg.induce_base(), task.max_time, task.max_branches)?;
    let mut st = Table::new(&["tau", "word", "domain_lo", "domain_hi", "log_deriv"]);
    for b in &scheme.branches {
        st.push(vec![
            b.inducing_time.to_string(),
            crate::cache::encode_word(&b.word),
            num(b.domain.lo),
            num(b.domain.hi),
            num(b.log_deriv),
        ]);
    }
    ctx.table("scheme", &st)?;
    if scheme.complete_mass < 1.0 - 1e-12 {
        ctx.warn(
            "incomplete_scheme",
            format!("branches cover {} of the base", num(scheme.complete_mass)),
        );
    }
    let ts = task.t_grid.values();
    let method = ctx.cfg.task.pressure.method;
    let family = PotentialFamily::geometric(map.branch_count());
    let engine = ctx.engine(&map, &family.base, method)?;
    let mut it = Table::new(&["t", "pressure", "induced_pressure", "entropy", "lyapunov", "dimension", "status"]);
    let mut failures = 0;
    for &t in &ts {
        let row = (|| -> Result<Vec<String>, Error> {
            let p = engine.eval(t, 0.0)?;
            let phi = induce_potential(&scheme, &Potential::geometric(t))?;
            let ip = induced_pressure(&scheme, &phi, p)?;
            let w = gibbs_branch_weights(&scheme, &phi, p)?;
            let mu = project_measure(&scheme, &w, Some(&phi))?;
            Ok(vec![
                num(t),
                num(p),
                num(ip),
                num(mu.entropy),
                num(mu.lyapunov),
                num(mu.dimension()),
                "ok".into(),
            ])
        })();
        match row {
            Ok(r) => it.push(r),
            Err(e) => {
                failures += 1;
                let mut r = vec![num(t)];
                r.extend(std::iter::repeat_n(String::new(), 5));
                r.push(e.root().to_string());
                it.push(r);
            }
        }
    }
    ctx.table("induced", &it)?;
    let (tmin, tmax) = ts.iter().fold((1.0f64, 1.0f64), |(a, b), &t| (a.min(t), b.max(t)));
    let curve = crate::pressure::curve_from_engine(engine, &family, &linspace(tmin - 1.0, tmax + 1.0, 9))?;
    let mut tt = Table::new(&["n", "t", "p_n", "p", "delta"]);
    for &n in &task.truncations {
        match truncate_and_pressure(&scheme, n, &ts, &curve) {
            Ok(r) => {
                for (i, t) in ts.iter().enumerate() {
                    tt.push(vec![n.to_string(), num(*t), num(r.p_n_values[i]), num(r.p_values[i]), num(r.delta)]);
                }
            }
            Err(e) => {
                failures += 1;
                ctx.warn("truncation_failed", format!("N={n}: {}", e.root()));
            }
        }
    }
    ctx.table("truncation", &tt)?;
    if failures > 0 {
        ctx.warn("per_point_failure", format!("{failures} evaluations failed"));
        ctx.report.exit_code = EXIT_PARTIAL;
    }
    Ok(())
}

fn cmd_empirical(ctx: &mut Ctx) -> anyhow::Result<()> {
    let task = ctx.cfg.task.empirical.clone();
    let map = ctx.cfg.build_map()?;
    let est = empirical_lyapunov_spectrum_seeded(&map, task.starts, task.n, &task.bins, task.seed)?;
    let mut t = Table::new(&["bin_center", "count", "dim_estimate", "fit_r2"]);
    for i in 0..est.bin_centers.len() {
        t.push(vec![
            num(est.bin_centers[i]),
            est.final_counts[i].to_string(),
            num(est.dim_estimates[i]),
            num(est.fit_r2[i]),
        ]);
        if est.unreliable[i] {
            ctx.warn(
                "unreliable_bin",
                format!("bin {} has fit r2 {}", num(est.bin_centers[i]), num(est.fit_r2[i])),
            );
        }
    }
    ctx.table("empirical", &t)?;
    let pts: Vec<(f64, f64)> = est
        .bin_centers
        .iter()
        .copied()
        .zip(est.dim_estimates.iter().copied())
        .collect();
    ctx.plot("empirical", "level-set dimension estimates", "lambda", "dim", &pts)
}

fn cmd_verify(ctx: &mut Ctx) -> anyhow::Result<()> {
    let opts = VerifyOptions {
        slope_gap_tol: ctx.cfg.task.verify.slope_gap_tol,
    };
    let results = run_suite(&opts);
    let mut t = Table::new(&["criterion", "name", "status", "detail"]);
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        ctx.report
            .lines
            .push(format!("{:<4} {:<5} {:<30} {:>7.2}s  {}", r.id, status, r.name, r.seconds, r.detail));
        t.push(vec![r.id.clone(), r.name.clone(), status.into(), r.detail.clone()]);
    }
    ctx.table("verify", &t)?;
    let failing = failing_ids(&results);
    if !failing.is_empty() {
        eprintln!("failing criteria: {}", failing.join(" "));
        ctx.report.lines.push(format!("#failed {}", failing.join(" ")));
        ctx.report.exit_code = EXIT_VERIFY;
    }
    Ok(())
}
