use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context, Result};

use fraclog::inequalities::run_corpus;
use fraclog::io::{read_dump, write_dump, write_field_csv, write_metadata};
use fraclog::model::{penalized_energy, PenalizationRegion};
use fraclog::semiclassics::{check_origin_recovery, fit_decay_exponent, locate_maximum, run_sweep};
use fraclog::solver::{solve_limiting, solve_penalized, InitialGuess, SolveResult, SolverConfig};
use fraclog::{Field, Grid};

use crate::config::{self, ConfigError, LoadedConfig};

/// Run outcome, turned into the process exit status by `main`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Nonconvergence or, for `verify`, at least one violation.
    NumericalFailure,
}

pub struct Common {
    pub config: LoadedConfig,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub command: &'static str,
}

struct Experiment {
    dir: PathBuf,
}

impl Experiment {
    fn create(common: &Common) -> Result<Self> {
        let dir = common.config.config.output_dir(common.out.as_deref())?;
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("config.toml"), &common.config.text)?;
        let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        write_metadata(
            &dir.join("manifest.txt"),
            &[
                kv("command", common.command),
                kv("config_source", common.config.path.display()),
                kv("seed", common.seed),
                kv("code_version", env!("CARGO_PKG_VERSION")),
                kv("os", std::env::consts::OS),
                kv("arch", std::env::consts::ARCH),
                kv("unix_time", stamp),
            ],
        )?;
        Ok(Self { dir })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

fn kv(k: &str, v: impl std::fmt::Display) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn describe_guess(g: &InitialGuess) -> String {
    match g {
        InitialGuess::Auto => "auto".into(),
        InitialGuess::GaussonAt {
            center,
            width,
            amplitude,
        } => format!("gausson_at center={center:?} width={width} amplitude={amplitude}"),
        InitialGuess::Field(f) if f.is_zero() => "field (zero)".into(),
        InitialGuess::Field(_) => "field".into(),
    }
}

fn result_entries(r: &SolveResult, solver: &SolverConfig) -> Vec<(String, String)> {
    vec![
        kv("energy", format!("{:e}", r.energy)),
        kv("residual_relative", format!("{:e}", r.residual_relative)),
        kv("iterations", r.iterations),
        kv("converged", r.converged),
        kv("termination", format!("{:?}", r.termination)),
        kv("min_value", format!("{:e}", r.min_value)),
        kv("degenerate", r.solution.is_zero()),
        kv("shift", format!("{:e}", r.shift)),
        kv("time_step", solver.time_step),
        kv("tolerance", solver.tolerance),
        kv("initial_guess", describe_guess(&solver.initial_guess)),
    ]
}

fn persist_field(exp: &Experiment, common: &Common, stem: &str, f: &Field, s: f64, eps: f64) -> Result<()> {
    let cfg = &common.config.config;
    if cfg.wants("dump") {
        write_dump(&exp.path(&format!("{stem}.flog")), f, s, eps)?;
    }
    if cfg.wants("csv") {
        write_field_csv(&exp.path(&format!("{stem}.csv")), f)?;
    }
    Ok(())
}

pub fn solve(common: &Common) -> Result<Outcome> {
    let cfg = &common.config.config;
    let params = cfg.model()?;
    let solver = cfg.solver(params.grid())?;
    let exp = Experiment::create(common)?;
    let result = solve_penalized(&params, &solver)?;
    let parts = penalized_energy(&result.solution, &params)?;
    persist_field(&exp, common, "solution", &result.solution, params.order().value(), params.epsilon())?;
    let mut meta = vec![kv("epsilon", params.epsilon()), kv("s", params.order().value())];
    meta.extend(result_entries(&result, &solver));
    meta.push(kv("phi", format!("{:e}", parts.phi)));
    meta.push(kv("psi", format!("{:e}", parts.psi)));
    write_metadata(&exp.path("solution.txt"), &meta)?;
    println!(
        "solve: converged = {}, iterations = {}, energy = {:e}, residual = {:e}, min = {:e}",
        result.converged, result.iterations, result.energy, result.residual_relative, result.min_value
    );
    Ok(if result.converged {
        Outcome::Success
    } else {
        Outcome::NumericalFailure
    })
}

pub fn sweep(common: &Common) -> Result<Outcome> {
    let cfg = &common.config.config;
    let sweep = cfg.sweep()?;
    let exp = Experiment::create(common)?;
    let report = run_sweep(&sweep)?;
    report.write_csv(&exp.path("sweep.csv"))?;
    if cfg.wants("dump") {
        let s = sweep.base.order().value();
        for (k, (row, u)) in report.rows.iter().zip(&report.solutions).enumerate() {
            write_dump(&exp.path(&format!("sweep_{k}.flog")), u, s, row.epsilon)?;
        }
    }
    for row in &report.rows {
        println!(
            "sweep: ε = {:e}, x_ε = {:?}, c/ε^N = {:e}, converged = {}, iterations = {}",
            row.epsilon, row.x_eps, row.c_eps_scaled, row.converged, row.iterations
        );
    }
    println!("sweep: C at x* = {:e}", report.summary.c_at_xstar);
    let all = report.rows.iter().all(|r| r.converged) && report.summary.limiting_converged;
    Ok(if all {
        Outcome::Success
    } else {
        Outcome::NumericalFailure
    })
}

pub fn limit(common: &Common, lambdas: &[f64], s_override: Option<f64>) -> Result<Outcome> {
    let cfg = &common.config.config;
    if lambdas.is_empty() {
        return Err(anyhow!(ConfigError("limit: at least one λ is required".into())));
    }
    if let Some(l) = lambdas.iter().find(|&&l| !(l > -1.0)) {
        return Err(anyhow!(ConfigError(format!("limit: λ = {l} must exceed -1"))));
    }
    let order = match s_override {
        Some(s) => fraclog::FractionalOrder::new(s).map_err(|e| anyhow!(ConfigError(format!("--s: {e}"))))?,
        None => cfg.order()?,
    };
    let grid = cfg.grid()?;
    let solver = cfg.solver(&grid)?;
    let exp = Experiment::create(common)?;
    let mut csv = String::from("lambda,C_lambda,residual,converged\n");
    let mut all = true;
    for (k, &lambda) in lambdas.iter().enumerate() {
        let (r, c) = solve_limiting(lambda, order, &grid, &solver)?;
        all &= r.converged;
        let _ = writeln!(csv, "{lambda},{c:e},{:e},{}", r.residual_relative, u8::from(r.converged));
        persist_field(&exp, common, &format!("limit_{k}"), &r.solution, order.value(), 1.0)?;
        let mut meta = vec![kv("lambda", lambda), kv("s", order.value()), kv("C_lambda", format!("{c:e}"))];
        meta.extend(result_entries(&r, &solver));
        write_metadata(&exp.path(&format!("limit_{k}.txt")), &meta)?;
        println!("limit: λ = {lambda}, C = {c:e}, converged = {}", r.converged);
    }
    fs::write(exp.path("limit.csv"), csv)?;
    Ok(if all {
        Outcome::Success
    } else {
        Outcome::NumericalFailure
    })
}

pub fn verify(common: &Common) -> Result<Outcome> {
    let corpus = common.config.config.corpus(common.seed)?;
    let exp = Experiment::create(common)?;
    let report = run_corpus(&corpus)?;
    if report.records.is_empty() {
        return Err(anyhow!(ConfigError("verify: corpus produced no checks".into())));
    }
    report.write_csv(&exp.path("verify.csv"))?;
    let violations = report.violations();
    println!("verify: {} checks, {violations} violations", report.records.len());
    Ok(if violations == 0 {
        Outcome::Success
    } else {
        Outcome::NumericalFailure
    })
}

pub fn analyze(common: &Common, dump: &Path) -> Result<Outcome> {
    let cfg = &common.config.config;
    let (u, header) = read_dump(dump).with_context(|| format!("reading {}", dump.display()))?;
    let (region, _) = cfg.region()?;
    check_region_fits(&region, u.grid())?;
    let exp = Experiment::create(common)?;
    let x = locate_maximum(&u)?;
    let recovery = check_origin_recovery(&u, &region);
    let mut meta = vec![
        kv("dump", dump.display()),
        kv("epsilon", header.epsilon),
        kv("s", header.order),
        kv("x_max", format!("{x:?}")),
        kv("origin_recovered", recovery.recovered),
        kv("recovery_margin", format!("{:e}", recovery.margin)),
    ];
    match &cfg.sweep {
        Some(sw) => {
            let window = (sw.window[0] * header.epsilon, sw.window[1] * header.epsilon);
            match fit_decay_exponent(&u, &x, window) {
                Ok(fit) => {
                    meta.push(kv("decay_slope", format!("{:e}", fit.slope)));
                    meta.push(kv("decay_fit_residual", format!("{:e}", fit.fit_residual)));
                    meta.push(kv("decay_nodes_used", fit.used));
                    meta.push(kv("decay_nodes_excluded", fit.excluded));
                }
                Err(e) => meta.push(kv("decay_error", e)),
            }
        }
        None => meta.push(kv("decay_error", "no sweep.window in config")),
    }
    write_metadata(&exp.path("analysis.txt"), &meta)?;
    for (k, v) in &meta {
        println!("{k} = {v}");
    }
    Ok(Outcome::Success)
}

fn check_region_fits(region: &PenalizationRegion, grid: &Grid) -> Result<()> {
    region
        .check_fits(grid)
        .map_err(|e| anyhow!(ConfigError(format!("region: {e}"))))
}

pub fn load(path: &Path, strict: bool) -> Result<LoadedConfig> {
    config::load(path, strict)
}
