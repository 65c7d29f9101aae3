//! Line-oriented run configuration.
//!
//! The grammar is deliberately tiny: `[section]` headers, `key = value`
//! pairs, `#` comment lines, blank lines ignored. Sections are `model`,
//! `solver`, `sweep`, `search`, and `output`.
//!
//! ```text
//! [model]
//! preset = tcr          # pnf | vdp | tcr | fet | counterexample
//! alpha = 0.5           # any model parameter by name
//!
//! [solver]
//! rtol = 1e-10
//! atol = 1e-12
//! samples = 512
//! settle_horizon = 2000
//! warm_settle_horizon = 50
//! max_period = 200
//! settle_gap_tol = 1e-6
//! shoot_tol = 1e-10
//! max_newton = 25
//! timeout_s = 30        # 0 disables the per-solve wall clock budget
//!
//! [sweep]
//! grid = alpha 0.1:2.0:11      # linspace; repeat `grid` per axis, last
//! grid = beta 0.1,0.5,2.0      # axis varies fastest; or a value list
//! warm_start = true
//!
//! [search]
//! free = c0             # repeat per free parameter
//! start = 1.7           # repeat, parallel to `free`
//! budget = 200
//! diameter_tol = 1e-4
//! initial_step = 0.1
//! lambda_threshold = 1e-6
//! upsilon_threshold = 1e-2
//!
//! [output]
//! dir = out
//! prefix = run
//! ```

use std::path::PathBuf;
use std::time::Duration;

use floqsym_core::pipeline::PipelineConfig;
use floqsym_core::search::SearchConfig;
use floqsym_core::Model;

/// Configuration failures map to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> CResult<T> {
    Err(ConfigError(msg.into()))
}

/// Fully resolved run settings (file + command-line overrides applied).
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: Model,
    pub pipeline: PipelineConfig,
    pub warm_start: bool,
    /// Sweep axes in declaration order; the last varies fastest.
    pub sweep_axes: Vec<(String, Vec<f64>)>,
    pub search_free: Vec<String>,
    pub search_start: Vec<f64>,
    pub search_budget: usize,
    pub search_diameter_tol: f64,
    pub search_initial_step: f64,
    pub search_lambda_threshold: f64,
    pub search_upsilon_threshold: f64,
    pub out_dir: PathBuf,
    pub prefix: String,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let search = SearchConfig::default();
        RunConfig {
            model: Model::preset("pnf").expect("built-in preset"),
            pipeline: PipelineConfig::default(),
            warm_start: true,
            sweep_axes: Vec::new(),
            search_free: Vec::new(),
            search_start: Vec::new(),
            search_budget: search.budget,
            search_diameter_tol: search.diameter_tol,
            search_initial_step: search.initial_step,
            search_lambda_threshold: search.lambda_threshold,
            search_upsilon_threshold: search.upsilon_threshold,
            out_dir: PathBuf::from("out"),
            prefix: "run".to_string(),
            jobs: 0,
        }
    }
}

impl RunConfig {
    /// Parse the config text and apply overrides in order: `--preset`, then
    /// `--set key=value` pairs, then `--out`/`--jobs`.
    pub fn resolve(
        text: &str,
        preset_override: Option<&str>,
        sets: &[String],
        out_override: Option<PathBuf>,
        jobs_override: Option<usize>,
    ) -> CResult<(RunConfig, Vec<String>)> {
        let mut entries = parse_entries(text)?;
        if let Some(p) = preset_override {
            // Replace any preset coming from the file.
            entries.retain(|(sec, key, _)| !(sec == "model" && key == "preset"));
            entries.insert(0, ("model".into(), "preset".into(), p.to_string()));
        }
        for s in sets {
            let Some((key, value)) = s.split_once('=') else {
                return err(format!("--set expects key=value, got '{s}'"));
            };
            let (section, key) = match key.trim().split_once('.') {
                Some((sec, k)) => (sec.trim().to_string(), k.trim().to_string()),
                None => ("model".to_string(), key.trim().to_string()),
            };
            entries.push((section, key, value.trim().to_string()));
        }

        let mut cfg = RunConfig::default();
        let mut preset_seen = false;
        let mut model_params: Vec<(String, String)> = Vec::new();

        // The preset must be fixed before model parameters apply.
        for (section, key, value) in &entries {
            if section == "model" && key == "preset" {
                cfg.model = Model::preset(value).map_err(|e| ConfigError(e.to_string()))?;
                preset_seen = true;
            }
        }
        if !preset_seen {
            return err("missing required key: model.preset");
        }

        for (section, key, value) in &entries {
            match section.as_str() {
                "model" => {
                    if key != "preset" {
                        model_params.push((key.clone(), value.clone()));
                    }
                }
                "solver" => apply_solver(&mut cfg, key, value)?,
                "sweep" => apply_sweep(&mut cfg, key, value)?,
                "search" => apply_search(&mut cfg, key, value)?,
                "output" => match key.as_str() {
                    "dir" => cfg.out_dir = PathBuf::from(value),
                    "prefix" => cfg.prefix = value.clone(),
                    other => return err(format!("unknown key output.{other}")),
                },
                other => return err(format!("unknown section [{other}]")),
            }
        }

        let mut warnings = Vec::new();
        for (key, value) in &model_params {
            cfg.model
                .set(key, value)
                .map_err(|e| ConfigError(e.to_string()))?;
            if let (Some(range), Some(v)) = (cfg.model.validity_range(key), cfg.model.get(key)) {
                if v < range.0 || v > range.1 {
                    warnings.push(format!(
                        "model.{key} = {v} is outside the documented range [{}, {}]",
                        range.0, range.1
                    ));
                }
            }
        }
        for (name, grid) in &cfg.sweep_axes {
            if cfg.model.get(name).is_none() && !cfg.model.param_names().contains(name) {
                return err(format!("sweep axis '{name}' is not a parameter of model '{}'", cfg.model.id()));
            }
            if let Some(range) = cfg.model.validity_range(name) {
                let out_of_range = grid.iter().any(|v| *v < range.0 || *v > range.1);
                if out_of_range {
                    warnings.push(format!(
                        "sweep grid for '{name}' leaves the documented range [{}, {}]",
                        range.0, range.1
                    ));
                }
            }
        }
        if cfg.search_free.len() != cfg.search_start.len() {
            return err(format!(
                "search.free lists {} parameters but search.start has {} values",
                cfg.search_free.len(),
                cfg.search_start.len()
            ));
        }
        // Invalid parameter values are a config problem, not a solver one.
        cfg.model.field().map_err(|e| ConfigError(e.to_string()))?;

        if let Some(dir) = out_override {
            cfg.out_dir = dir;
        }
        if let Some(jobs) = jobs_override {
            cfg.jobs = jobs;
        }
        Ok((cfg, warnings))
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            pipeline: self.pipeline,
            budget: self.search_budget,
            diameter_tol: self.search_diameter_tol,
            initial_step: self.search_initial_step,
            lambda_threshold: self.search_lambda_threshold,
            upsilon_threshold: self.search_upsilon_threshold,
        }
    }

    /// Resolved key-value lines, echoed verbatim into every artifact so runs
    /// are self-describing.
    pub fn echo_lines(&self) -> Vec<String> {
        let f = |v: f64| format!("{v:.16e}");
        let mut lines = vec![format!("model.preset = {}", self.model.id())];
        for name in self.model.param_names() {
            if let Some(v) = self.model.get(&name) {
                lines.push(format!("model.{name} = {}", f(v)));
            }
        }
        lines.push(format!("solver.rtol = {}", f(self.pipeline.tol.rel)));
        lines.push(format!("solver.atol = {}", f(self.pipeline.tol.abs)));
        lines.push(format!("solver.samples = {}", self.pipeline.samples));
        lines.push(format!("solver.settle_horizon = {}", f(self.pipeline.settle_horizon)));
        lines.push(format!("solver.warm_settle_horizon = {}", f(self.pipeline.warm_settle_horizon)));
        lines.push(format!("solver.max_period = {}", f(self.pipeline.max_period)));
        lines.push(format!("solver.settle_gap_tol = {}", f(self.pipeline.settle_gap_tol)));
        lines.push(format!("solver.shoot_tol = {}", f(self.pipeline.shoot_tol)));
        lines.push(format!("solver.max_newton = {}", self.pipeline.max_newton));
        lines.push(format!(
            "solver.timeout_s = {}",
            f(self.pipeline.timeout.map(|d| d.as_secs_f64()).unwrap_or(0.0))
        ));
        for (name, grid) in &self.sweep_axes {
            let vals: Vec<String> = grid.iter().map(|v| f(*v)).collect();
            lines.push(format!("sweep.grid = {name} {}", vals.join(",")));
        }
        if !self.sweep_axes.is_empty() {
            lines.push(format!("sweep.warm_start = {}", self.warm_start));
        }
        if !self.search_free.is_empty() {
            for name in &self.search_free {
                lines.push(format!("search.free = {name}"));
            }
            for v in &self.search_start {
                lines.push(format!("search.start = {}", f(*v)));
            }
            lines.push(format!("search.budget = {}", self.search_budget));
            lines.push(format!("search.diameter_tol = {}", f(self.search_diameter_tol)));
            lines.push(format!("search.initial_step = {}", f(self.search_initial_step)));
            lines.push(format!("search.lambda_threshold = {}", f(self.search_lambda_threshold)));
            lines.push(format!("search.upsilon_threshold = {}", f(self.search_upsilon_threshold)));
        }
        lines.push(format!("output.dir = {}", self.out_dir.display()));
        lines.push(format!("output.prefix = {}", self.prefix));
        lines
    }
}

fn parse_entries(text: &str) -> CResult<Vec<(String, String, String)>> {
    let mut entries = Vec::new();
    let mut section = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return err(format!("line {}: expected 'key = value', got '{line}'", lineno + 1));
        };
        if section.is_empty() {
            return err(format!("line {}: key before any [section]", lineno + 1));
        }
        entries.push((section.clone(), key.trim().to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

fn parse_f64(section: &str, key: &str, value: &str) -> CResult<f64> {
    value
        .parse()
        .map_err(|_| ConfigError(format!("{section}.{key}: '{value}' is not a number")))
}

fn parse_usize(section: &str, key: &str, value: &str) -> CResult<usize> {
    value
        .parse()
        .map_err(|_| ConfigError(format!("{section}.{key}: '{value}' is not an integer")))
}

fn parse_bool(section: &str, key: &str, value: &str) -> CResult<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => err(format!("{section}.{key}: '{value}' is not a boolean")),
    }
}

fn apply_solver(cfg: &mut RunConfig, key: &str, value: &str) -> CResult<()> {
    match key {
        "rtol" => cfg.pipeline.tol.rel = parse_f64("solver", key, value)?,
        "atol" => cfg.pipeline.tol.abs = parse_f64("solver", key, value)?,
        "samples" => cfg.pipeline.samples = parse_usize("solver", key, value)?,
        "settle_horizon" => cfg.pipeline.settle_horizon = parse_f64("solver", key, value)?,
        "warm_settle_horizon" => {
            cfg.pipeline.warm_settle_horizon = parse_f64("solver", key, value)?
        }
        "max_period" => cfg.pipeline.max_period = parse_f64("solver", key, value)?,
        "settle_gap_tol" => cfg.pipeline.settle_gap_tol = parse_f64("solver", key, value)?,
        "shoot_tol" => cfg.pipeline.shoot_tol = parse_f64("solver", key, value)?,
        "max_newton" => cfg.pipeline.max_newton = parse_usize("solver", key, value)?,
        "timeout_s" => {
            let secs = parse_f64("solver", key, value)?;
            cfg.pipeline.timeout =
                if secs > 0.0 { Some(Duration::from_secs_f64(secs)) } else { None };
        }
        other => return err(format!("unknown key solver.{other}")),
    }
    Ok(())
}

fn apply_sweep(cfg: &mut RunConfig, key: &str, value: &str) -> CResult<()> {
    match key {
        "grid" => {
            let Some((name, spec)) = value.split_once(char::is_whitespace) else {
                return err(format!("sweep.grid expects '<param> <spec>', got '{value}'"));
            };
            let grid = parse_grid_spec(spec.trim())?;
            cfg.sweep_axes.push((name.trim().to_string(), grid));
        }
        "warm_start" => cfg.warm_start = parse_bool("sweep", key, value)?,
        other => return err(format!("unknown key sweep.{other}")),
    }
    Ok(())
}

/// `a:b:n` for n points from a to b inclusive, or a comma-separated list.
fn parse_grid_spec(spec: &str) -> CResult<Vec<f64>> {
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return err(format!("grid spec '{spec}' must be start:stop:count"));
        }
        let start = parse_f64("sweep", "grid", parts[0])?;
        let stop = parse_f64("sweep", "grid", parts[1])?;
        let count = parse_usize("sweep", "grid", parts[2])?;
        if count == 0 {
            return err("grid spec needs at least one point");
        }
        if count == 1 {
            return Ok(vec![start]);
        }
        let step = (stop - start) / (count - 1) as f64;
        return Ok((0..count).map(|i| start + step * i as f64).collect());
    }
    let vals: CResult<Vec<f64>> =
        spec.split(',').map(|v| parse_f64("sweep", "grid", v.trim())).collect();
    let vals = vals?;
    if vals.is_empty() {
        return err("grid spec needs at least one point");
    }
    Ok(vals)
}

fn apply_search(cfg: &mut RunConfig, key: &str, value: &str) -> CResult<()> {
    match key {
        "free" => cfg.search_free.push(value.to_string()),
        "start" => cfg.search_start.push(parse_f64("search", key, value)?),
        "budget" => cfg.search_budget = parse_usize("search", key, value)?,
        "diameter_tol" => cfg.search_diameter_tol = parse_f64("search", key, value)?,
        "initial_step" => cfg.search_initial_step = parse_f64("search", key, value)?,
        "lambda_threshold" => cfg.search_lambda_threshold = parse_f64("search", key, value)?,
        "upsilon_threshold" => cfg.search_upsilon_threshold = parse_f64("search", key, value)?,
        other => return err(format!("unknown key search.{other}")),
    }
    Ok(())
}
