//! TOML experiment configuration and its conversion to library types.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Result};
use serde::Deserialize;

use fraclog::inequalities::{Check, CorpusConfig, FieldKind, Suite};
use fraclog::model::{ModelParams, PenalizationRegion, PotentialSpec, Shape, WellPolicy};
use fraclog::semiclassics::SweepConfig;
use fraclog::solver::{InitialGuess, SolverConfig};
use fraclog::{FractionalOrder, Grid};

/// Raised for anything the user can fix in the config file; maps to exit 1.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(path: &str, msg: impl std::fmt::Display) -> anyhow::Error {
    anyhow!(ConfigError(format!("{path}: {msg}")))
}

#[derive(Debug, Clone, Deserialize)]
pub struct ExperimentConfig {
    pub epsilon: Option<f64>,
    pub grid: GridSection,
    pub order: OrderSection,
    pub potential: Option<PotentialSection>,
    pub region: Option<RegionSection>,
    #[serde(default)]
    pub solver: SolverSection,
    pub sweep: Option<SweepSection>,
    pub verify: Option<VerifySection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
pub struct GridSection {
    pub dim: usize,
    #[serde(rename = "L")]
    pub half_extent: f64,
    #[serde(rename = "M")]
    pub points: usize,
}

#[derive(Debug, Clone, Deserialize)]
pub struct OrderSection {
    pub s: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct PotentialSection {
    pub family: String,
    pub lambda: Option<f64>,
    pub center: Option<Vec<f64>>,
    pub curvature: Option<f64>,
    pub cap: Option<f64>,
    pub radius: Option<f64>,
    pub depth: Option<f64>,
    pub centers: Option<Vec<Vec<f64>>>,
    pub depths: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ShapeSection {
    pub shape: String,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
    pub center: Option<Vec<f64>>,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RegionSection {
    pub lambda_set: ShapeSection,
    pub outer_set: ShapeSection,
    /// Accept `inf_Λ(V+1) = inf_{U∖Λ}(V+1)`, for flat potentials.
    #[serde(default)]
    pub allow_flat: bool,
}

#[derive(Debug, Clone, Deserialize)]
pub struct InitialSection {
    pub kind: String,
    pub center: Option<Vec<f64>>,
    pub width: Option<f64>,
    pub amplitude: Option<f64>,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct SolverSection {
    pub dt: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub shift: Option<f64>,
    pub adaptive_shift: Option<bool>,
    pub ray_projection: Option<bool>,
    pub initial: Option<InitialSection>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct LimitingGridSection {
    #[serde(rename = "L")]
    pub half_extent: f64,
    #[serde(rename = "M")]
    pub points: usize,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SweepSection {
    pub epsilons: Vec<f64>,
    pub window: [f64; 2],
    #[serde(default = "yes")]
    pub warm_start: bool,
    pub limiting_grid: Option<LimitingGridSection>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
pub struct CheckGridSection {
    pub dim: usize,
    #[serde(rename = "L")]
    pub half_extent: f64,
    #[serde(rename = "M")]
    pub points: usize,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TestFieldSection {
    pub kind: String,
    pub count: Option<usize>,
    pub max_mode: Option<usize>,
    pub decay: Option<f64>,
    pub center: Option<Vec<f64>>,
    pub width: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct VerifySection {
    pub checks: Vec<String>,
    /// Number of seeds, counted up from `--seed`.
    pub seeds: u64,
    pub gn_exponents: Option<Vec<f64>>,
    pub log_sobolev_a: Option<Vec<f64>>,
    pub gn_grid: Option<CheckGridSection>,
    pub log_sobolev_grid: Option<CheckGridSection>,
    pub hardy_grid: Option<CheckGridSection>,
    pub field: Option<TestFieldSection>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct OutputSection {
    pub directory: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: None,
            formats: default_formats(),
        }
    }
}

fn default_formats() -> Vec<String> {
    vec!["dump".into(), "csv".into()]
}

/// Parsed config together with its source text.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub text: String,
    pub path: PathBuf,
}

pub fn load(path: &Path, strict: bool) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow!(ConfigError(format!("cannot read {}: {e}", path.display()))))?;
    let config = parse(&text, strict)?;
    Ok(LoadedConfig {
        config,
        text,
        path: path.to_path_buf(),
    })
}

pub fn parse(text: &str, strict: bool) -> Result<ExperimentConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| anyhow!(ConfigError(format!("config: {e}"))))?;
    let mut unknown = Vec::new();
    let config: ExperimentConfig = serde_ignored::deserialize(de, |p| unknown.push(p.to_string()))
        .map_err(|e| anyhow!(ConfigError(format!("config: {e}"))))?;
    if strict && !unknown.is_empty() {
        bail!(ConfigError(format!("unknown config keys: {}", unknown.join(", "))));
    }
    config.validate_formats()?;
    Ok(config)
}

fn allow_only(path: &str, family: &str, present: &[(&str, bool)], allowed: &[&str]) -> Result<()> {
    for (key, is_set) in present {
        if *is_set && !allowed.contains(key) {
            return Err(config_err(&format!("{path}.{key}"), format!("not a parameter of '{family}'")));
        }
    }
    Ok(())
}

fn need<T: Clone>(path: &str, key: &str, v: &Option<T>) -> Result<T> {
    v.clone().ok_or_else(|| config_err(&format!("{path}.{key}"), "missing"))
}

impl ExperimentConfig {
    fn validate_formats(&self) -> Result<()> {
        for f in &self.output.formats {
            if f != "dump" && f != "csv" {
                return Err(config_err("output.formats", format!("unknown format '{f}' (dump, csv)")));
            }
        }
        Ok(())
    }

    pub fn wants(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = &self.grid;
        Grid::new(g.dim, g.half_extent, g.points).map_err(|e| config_err("grid", e))
    }

    pub fn order(&self) -> Result<FractionalOrder> {
        FractionalOrder::new(self.order.s).map_err(|e| config_err("order.s", e))
    }

    pub fn potential(&self) -> Result<PotentialSpec> {
        let p = self
            .potential
            .as_ref()
            .ok_or_else(|| config_err("potential", "section missing"))?;
        let path = "potential";
        let present = [
            ("lambda", p.lambda.is_some()),
            ("center", p.center.is_some()),
            ("curvature", p.curvature.is_some()),
            ("cap", p.cap.is_some()),
            ("radius", p.radius.is_some()),
            ("depth", p.depth.is_some()),
            ("centers", p.centers.is_some()),
            ("depths", p.depths.is_some()),
        ];
        let spec = match p.family.as_str() {
            "constant" => {
                allow_only(path, &p.family, &present, &["lambda"])?;
                PotentialSpec::Constant(need(path, "lambda", &p.lambda)?)
            }
            "quadratic_well" => {
                allow_only(path, &p.family, &present, &["center", "curvature", "cap"])?;
                PotentialSpec::QuadraticWell {
                    center: need(path, "center", &p.center)?,
                    curvature: need(path, "curvature", &p.curvature)?,
                    cap: need(path, "cap", &p.cap)?,
                }
            }
            "compact_well" => {
                allow_only(path, &p.family, &present, &["center", "radius", "depth"])?;
                PotentialSpec::CompactWell {
                    center: need(path, "center", &p.center)?,
                    radius: need(path, "radius", &p.radius)?,
                    depth: need(path, "depth", &p.depth)?,
                }
            }
            "double_well" => {
                allow_only(path, &p.family, &present, &["centers", "depths", "cap"])?;
                let centers = need(path, "centers", &p.centers)?;
                let depths = need(path, "depths", &p.depths)?;
                if centers.len() != 2 || depths.len() != 2 {
                    return Err(config_err("potential", "double_well needs exactly two centers and two depths"));
                }
                PotentialSpec::DoubleWell {
                    centers: [centers[0].clone(), centers[1].clone()],
                    depths: [depths[0], depths[1]],
                    cap: need(path, "cap", &p.cap)?,
                }
            }
            other => {
                return Err(config_err(
                    "potential.family",
                    format!("unknown family '{other}' (constant, quadratic_well, compact_well, double_well)"),
                ))
            }
        };
        Ok(spec)
    }

    fn shape(path: &str, s: &ShapeSection) -> Result<Shape> {
        let present = [
            ("lo", s.lo.is_some()),
            ("hi", s.hi.is_some()),
            ("center", s.center.is_some()),
            ("radius", s.radius.is_some()),
        ];
        match s.shape.as_str() {
            "box" => {
                allow_only(path, "box", &present, &["lo", "hi"])?;
                Ok(Shape::Box {
                    lo: need(path, "lo", &s.lo)?,
                    hi: need(path, "hi", &s.hi)?,
                })
            }
            "ball" => {
                allow_only(path, "ball", &present, &["center", "radius"])?;
                Ok(Shape::Ball {
                    center: need(path, "center", &s.center)?,
                    radius: need(path, "radius", &s.radius)?,
                })
            }
            other => Err(config_err(&format!("{path}.shape"), format!("unknown shape '{other}' (box, ball)"))),
        }
    }

    pub fn region(&self) -> Result<(PenalizationRegion, WellPolicy)> {
        let r = self.region.as_ref().ok_or_else(|| config_err("region", "section missing"))?;
        let lambda = Self::shape("region.lambda_set", &r.lambda_set)?;
        let outer = Self::shape("region.outer_set", &r.outer_set)?;
        let region = PenalizationRegion::new(lambda, outer).map_err(|e| config_err("region", e))?;
        let policy = if r.allow_flat {
            WellPolicy::AllowFlat
        } else {
            WellPolicy::Strict
        };
        Ok((region, policy))
    }

    /// Model at `epsilon` (top-level key, default 1).
    pub fn model(&self) -> Result<ModelParams> {
        let grid = self.grid()?;
        let order = self.order()?;
        let potential = self.potential()?;
        let (region, policy) = self.region()?;
        let eps = self.epsilon.unwrap_or(1.0);
        ModelParams::with_policy(eps, order, potential, region, &grid, policy).map_err(|e| config_err("model", e))
    }

    pub fn solver(&self, grid: &Grid) -> Result<SolverConfig> {
        let s = &self.solver;
        let mut cfg = SolverConfig::default();
        if let Some(dt) = s.dt {
            cfg.time_step = dt;
        }
        if let Some(tol) = s.tol {
            cfg.tolerance = tol;
        }
        if let Some(m) = s.max_iter {
            cfg.max_iterations = m;
        }
        cfg.implicit_shift = s.shift;
        if let Some(a) = s.adaptive_shift {
            cfg.adaptive_shift = a;
        }
        if let Some(r) = s.ray_projection {
            cfg.ray_projection = r;
        }
        if let Some(init) = &s.initial {
            cfg.initial_guess = Self::initial(init, grid)?;
        }
        cfg.validate().map_err(|e| config_err("solver", e))?;
        Ok(cfg)
    }

    fn initial(init: &InitialSection, grid: &Grid) -> Result<InitialGuess> {
        let path = "solver.initial";
        let present = [
            ("center", init.center.is_some()),
            ("width", init.width.is_some()),
            ("amplitude", init.amplitude.is_some()),
            ("path", init.path.is_some()),
        ];
        match init.kind.as_str() {
            "auto" => {
                allow_only(path, "auto", &present, &[])?;
                Ok(InitialGuess::Auto)
            }
            "gausson_at" => {
                allow_only(path, "gausson_at", &present, &["center", "width", "amplitude"])?;
                Ok(InitialGuess::GaussonAt {
                    center: need(path, "center", &init.center)?,
                    width: need(path, "width", &init.width)?,
                    amplitude: need(path, "amplitude", &init.amplitude)?,
                })
            }
            "zero" => {
                allow_only(path, "zero", &present, &[])?;
                Ok(InitialGuess::Field(fraclog::Field::zeros(grid)))
            }
            "dump" => {
                allow_only(path, "dump", &present, &["path"])?;
                let p = need(path, "path", &init.path)?;
                let (field, _) = fraclog::io::read_dump(&p).map_err(|e| config_err(path, e))?;
                if !field.grid().same_as(grid) {
                    return Err(config_err(path, "dumped field lives on a different grid"));
                }
                Ok(InitialGuess::Field(field))
            }
            other => Err(config_err(
                &format!("{path}.kind"),
                format!("unknown initial guess '{other}' (auto, gausson_at, zero, dump)"),
            )),
        }
    }

    pub fn sweep(&self) -> Result<SweepConfig> {
        let sw = self.sweep.as_ref().ok_or_else(|| config_err("sweep", "section missing"))?;
        let base = self.model()?;
        let solver = self.solver(base.grid())?;
        let dim = base.grid().dim();
        let mut cfg = SweepConfig::new(base, sw.epsilons.clone(), (sw.window[0], sw.window[1]))
            .map_err(|e| config_err("sweep", e))?;
        cfg.solver = solver;
        cfg.warm_start = sw.warm_start;
        if let Some(lg) = &sw.limiting_grid {
            cfg.limiting_grid =
                Grid::new(dim, lg.half_extent, lg.points).map_err(|e| config_err("sweep.limiting_grid", e))?;
        }
        cfg.validate().map_err(|e| config_err("sweep", e))?;
        Ok(cfg)
    }

    pub fn corpus(&self, first_seed: u64) -> Result<CorpusConfig> {
        let v = self.verify.as_ref().ok_or_else(|| config_err("verify", "section missing"))?;
        if v.seeds == 0 {
            return Err(config_err("verify.seeds", "empty corpus: at least one seed is required"));
        }
        if v.checks.is_empty() {
            return Err(config_err("verify.checks", "empty corpus: at least one check is required"));
        }
        let order = self.order()?;
        let kind = match &v.field {
            None => FieldKind::BumpMixture { count: 3 },
            Some(f) => Self::field_kind(f)?,
        };
        let check_grid = |key: &str, g: &Option<CheckGridSection>, default: (usize, f64, usize)| -> Result<Grid> {
            let (dim, l, m) = g.as_ref().map_or(default, |g| (g.dim, g.half_extent, g.points));
            Grid::new(dim, l, m).map_err(|e| config_err(&format!("verify.{key}"), e))
        };
        let seeds: Vec<u64> = (first_seed..first_seed + v.seeds).collect();
        let mut suites = Vec::new();
        for name in &v.checks {
            let suite = match name.as_str() {
                "gagliardo_nirenberg" => {
                    let grid = check_grid("gn_grid", &v.gn_grid, (2, 10.0, 128))?;
                    let exponents = v.gn_exponents.clone().unwrap_or_else(|| vec![2.0, 2.5, 3.0, 3.5, 4.0]);
                    let crit = fraclog::inequalities::critical_exponent(grid.dim(), order);
                    for &q in &exponents {
                        match crit {
                            None => {
                                return Err(config_err(
                                    "verify.gn_grid",
                                    format!("inadmissible: Gagliardo–Nirenberg needs N > 2s (N = {})", grid.dim()),
                                ))
                            }
                            Some(c) if !(2.0..=c).contains(&q) => {
                                return Err(config_err(
                                    "verify.gn_exponents",
                                    format!("inadmissible exponent q = {q} outside [2, {c}]"),
                                ))
                            }
                            _ => {}
                        }
                    }
                    Suite {
                        check: Check::GagliardoNirenberg { exponents },
                        grid,
                        order,
                        kind: kind.clone(),
                    }
                }
                "log_sobolev" => {
                    let grid = check_grid("log_sobolev_grid", &v.log_sobolev_grid, (1, 20.0, 1024))?;
                    let a_values = v.log_sobolev_a.clone().unwrap_or_else(|| vec![0.25, 0.5, 1.0, 2.0, 4.0]);
                    if let Some(a) = a_values.iter().find(|&&a| !(a > 0.0)) {
                        return Err(config_err("verify.log_sobolev_a", format!("a = {a} must be positive")));
                    }
                    Suite {
                        check: Check::LogSobolev { a_values },
                        grid,
                        order,
                        kind: kind.clone(),
                    }
                }
                "hardy" => {
                    let grid = check_grid("hardy_grid", &v.hardy_grid, (2, 10.0, 128))?;
                    if fraclog::inequalities::critical_exponent(grid.dim(), order).is_none() {
                        return Err(config_err(
                            "verify.hardy_grid",
                            format!("inadmissible: Hardy needs N > 2s (N = {})", grid.dim()),
                        ));
                    }
                    Suite {
                        check: Check::Hardy,
                        grid,
                        order,
                        kind: kind.clone(),
                    }
                }
                other => {
                    return Err(config_err(
                        "verify.checks",
                        format!("unknown check '{other}' (gagliardo_nirenberg, log_sobolev, hardy)"),
                    ))
                }
            };
            suites.push(suite);
        }
        Ok(CorpusConfig { seeds, suites })
    }

    fn field_kind(f: &TestFieldSection) -> Result<FieldKind> {
        let path = "verify.field";
        let present = [
            ("count", f.count.is_some()),
            ("max_mode", f.max_mode.is_some()),
            ("decay", f.decay.is_some()),
            ("center", f.center.is_some()),
            ("width", f.width.is_some()),
        ];
        match f.kind.as_str() {
            "bump_mixture" => {
                allow_only(path, "bump_mixture", &present, &["count"])?;
                Ok(FieldKind::BumpMixture {
                    count: need(path, "count", &f.count)?,
                })
            }
            "gaussian_bump" => {
                allow_only(path, "gaussian_bump", &present, &["center", "width"])?;
                Ok(FieldKind::GaussianBump {
                    center: need(path, "center", &f.center)?,
                    width: need(path, "width", &f.width)?,
                })
            }
            "band_limited_random" => {
                allow_only(path, "band_limited_random", &present, &["max_mode", "decay"])?;
                Ok(FieldKind::BandLimitedRandom {
                    max_mode: need(path, "max_mode", &f.max_mode)?,
                    decay: need(path, "decay", &f.decay)?,
                })
            }
            other => Err(config_err(
                &format!("{path}.kind"),
                format!("unknown field kind '{other}' (bump_mixture, gaussian_bump, band_limited_random)"),
            )),
        }
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> Result<PathBuf> {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output.directory.clone())
            .ok_or_else(|| config_err("output.directory", "missing (or pass --out)"))
    }
}

/// Keeps the context chain but lets `main` find the config classification.
pub fn is_config_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| c.downcast_ref::<ConfigError>().is_some())
}
