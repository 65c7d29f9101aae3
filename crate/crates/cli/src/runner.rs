//! Command dispatch: run the requested analysis, write artifacts, print a
//! one-line summary, and map failures onto stable exit codes.

use std::path::PathBuf;
use std::sync::atomic::AtomicBool;

use serde::Serialize;

use floqsym_core::pipeline::{analyze, solve_model_orbit};
use floqsym_core::search::find_symmetry;
use floqsym_core::sweep::{correlate, sweep, SweepConfig, SweepTable};

use crate::config::RunConfig;
use crate::{csvio, svg};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Pss,
    Floquet,
    Measures,
    Sweep,
    Search,
}

#[derive(Debug)]
enum RunError {
    Config(String),
    Solver(floqsym_core::Error),
    Plot(String),
    Io(std::io::Error),
}

impl RunError {
    fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Solver(_) | RunError::Plot(_) => EXIT_SOLVER,
            RunError::Io(_) => EXIT_IO,
        }
    }

    fn describe(&self) -> String {
        match self {
            RunError::Config(m) => format!("config error: {m}"),
            RunError::Solver(e) => format!("solver error [{}]: {e}", e.category()),
            RunError::Plot(m) => format!("plot error: {m}"),
            RunError::Io(e) => format!("io error: {e}"),
        }
    }
}

impl From<floqsym_core::Error> for RunError {
    fn from(e: floqsym_core::Error) -> Self {
        RunError::Solver(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

struct Writer<'a> {
    dir: PathBuf,
    prefix: &'a str,
    written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self, RunError> {
        std::fs::create_dir_all(&cfg.out_dir)?;
        Ok(Writer { dir: cfg.out_dir.clone(), prefix: &cfg.prefix, written: Vec::new() })
    }

    fn write(&mut self, suffix: &str, contents: &str) -> Result<(), RunError> {
        let path = self.dir.join(format!("{}_{suffix}", self.prefix));
        std::fs::write(&path, contents)?;
        self.written.push(path);
        Ok(())
    }
}

/// Execute a command against a resolved config. Returns a process exit code.
pub fn run(command: Command, cfg: &RunConfig, cancel: &AtomicBool) -> i32 {
    match dispatch(command, cfg, cancel) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("floqsym: {}", e.describe());
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, cfg: &RunConfig, cancel: &AtomicBool) -> Result<i32, RunError> {
    match command {
        Command::Pss => run_pss(cfg),
        Command::Floquet => run_floquet(cfg),
        Command::Measures => run_measures(cfg),
        Command::Sweep => run_sweep(cfg, cancel),
        Command::Search => run_search(cfg),
    }
}

fn run_pss(cfg: &RunConfig) -> Result<i32, RunError> {
    let orbit = solve_model_orbit(&cfg.model, None, &cfg.pipeline)?;
    let echo = cfg.echo_lines();
    let mut w = Writer::new(cfg)?;
    w.write("orbit.csv", &csvio::orbit_csv(&orbit, &echo))?;
    w.write(
        "orbit_xy.svg",
        &svg::orbit(&orbit, (0, 1, None), &format!("{} limit cycle", cfg.model.id()), &echo)
            .map_err(RunError::Plot)?,
    )?;
    if orbit.dim() >= 3 {
        w.write(
            "orbit_xy3.svg",
            &svg::orbit(&orbit, (0, 1, Some(2)), &format!("{} cycle, third-axis depth", cfg.model.id()), &echo)
                .map_err(RunError::Plot)?,
        )?;
    }
    if orbit.dim() >= 4 {
        w.write(
            "orbit_xy4.svg",
            &svg::orbit(&orbit, (0, 1, Some(3)), &format!("{} cycle, fourth-axis depth", cfg.model.id()), &echo)
                .map_err(RunError::Plot)?,
        )?;
    }
    println!(
        "model={} period={:.12e} residual={:.3e} samples={}",
        cfg.model.id(),
        orbit.period,
        orbit.residual,
        orbit.num_samples()
    );
    Ok(EXIT_OK)
}

fn run_floquet(cfg: &RunConfig) -> Result<i32, RunError> {
    let a = analyze(&cfg.model, &cfg.pipeline)?;
    let echo = cfg.echo_lines();
    let mut w = Writer::new(cfg)?;
    w.write("floquet.csv", &csvio::floquet_csv(&a.decomposition, &echo))?;
    let lams: Vec<String> = a
        .decomposition
        .multipliers
        .iter()
        .map(|l| format!("{:.9e}{:+.9e}j", l.re, l.im))
        .collect();
    println!(
        "model={} period={:.12e} multipliers=[{}] biorthogonality_defect={:.3e}",
        cfg.model.id(),
        a.orbit.period,
        lams.join(", "),
        a.decomposition.biorthogonality_defect()
    );
    Ok(EXIT_OK)
}

fn run_measures(cfg: &RunConfig) -> Result<i32, RunError> {
    let a = analyze(&cfg.model, &cfg.pipeline)?;
    let echo = cfg.echo_lines();
    let mut w = Writer::new(cfg)?;
    w.write("measures.csv", &csvio::measures_csv(&a.measures, &a.orbit, &echo))?;
    w.write("theta.csv", &csvio::theta_csv(&a.measures, &echo))?;
    println!(
        "model={} lambda={:.12e} upsilon={:.12e} lambda_db={:.6} upsilon_db={:.6}",
        cfg.model.id(),
        a.measures.lambda,
        a.measures.upsilon,
        a.measures.lambda_db,
        a.measures.upsilon_db
    );
    Ok(EXIT_OK)
}

fn run_sweep(cfg: &RunConfig, cancel: &AtomicBool) -> Result<i32, RunError> {
    if cfg.sweep_axes.is_empty() {
        return Err(RunError::Config("sweep command needs [sweep] grid axes".into()));
    }
    let sweep_cfg = SweepConfig { pipeline: cfg.pipeline, jobs: cfg.jobs, warm_start: cfg.warm_start };
    let table = sweep(&cfg.model, &cfg.sweep_axes, &sweep_cfg, Some(cancel))?;
    let echo = cfg.echo_lines();
    let truncated = table.rows.iter().any(|r| r.status == "cancelled");

    let mut w = Writer::new(cfg)?;
    let mut table_csv = csvio::sweep_table_csv(&table, &echo);
    if truncated {
        table_csv.push_str("# truncated: cancelled\n");
    }
    w.write("table.csv", &table_csv)?;

    if table.param_names.len() == 2 {
        w.write(
            "lambda_db.csv",
            &csvio::grid_csv(&table, |r| r.lambda_db, "lambda_db", &echo)
                .map_err(|e| RunError::Config(e.0))?,
        )?;
        w.write(
            "upsilon_db.csv",
            &csvio::grid_csv(&table, |r| r.upsilon_db, "upsilon_db", &echo)
                .map_err(|e| RunError::Config(e.0))?,
        )?;
        if !truncated {
            let (ylab, xlab) = (&table.param_names[0], &table.param_names[1]);
            for (name, pick) in [
                ("lambda_db", Box::new(|r: &floqsym_core::sweep::SweepRow| r.lambda_db)
                    as Box<dyn Fn(&floqsym_core::sweep::SweepRow) -> Option<f64>>),
                ("upsilon_db", Box::new(|r: &floqsym_core::sweep::SweepRow| r.upsilon_db)),
            ] {
                let cells: Vec<Option<f64>> = table.rows.iter().map(|r| pick(r)).collect();
                let plot = svg::heatmap(
                    &table.grids[0],
                    &table.grids[1],
                    &cells,
                    &format!("{} {name} sweep", table.model_id),
                    ylab,
                    xlab,
                    &echo,
                )
                .map_err(RunError::Plot)?;
                w.write(&format!("{name}.svg"), &plot)?;
            }
        }
    }

    let summary = match correlate(&table) {
        Ok((r, points)) => {
            w.write("scatter.csv", &csvio::scatter_csv(&points, &echo))?;
            let plot = svg::scatter(
                &points,
                &format!("{}: lambda vs upsilon (r = {r:.4})", table.model_id),
                &echo,
            )
            .map_err(RunError::Plot)?;
            w.write("scatter.svg", &plot)?;
            format!("pearson_r={r:.6}")
        }
        Err(e) => format!("pearson_r=unavailable ({})", e.category()),
    };

    println!(
        "model={} rows={} ok={} {} artifacts={}",
        table.model_id,
        table.rows.len(),
        table.success_count(),
        summary,
        w.written.len()
    );
    if truncated {
        eprintln!("floqsym: sweep cancelled; partial table carries a truncation marker");
        return Ok(EXIT_SOLVER);
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct IterationRecord<'a> {
    iteration: usize,
    evaluations: usize,
    best_lambda: f64,
    best_params: &'a [f64],
    diameter: f64,
}

#[derive(Serialize)]
struct ResultRecord<'a> {
    result: ResultBody<'a>,
}

#[derive(Serialize)]
struct ResultBody<'a> {
    params: &'a [f64],
    lambda_min: f64,
    upsilon: f64,
    evaluations: usize,
    converged: bool,
    false_positive: bool,
}

/// One JSON record per simplex iteration, then the final result record.
pub fn search_jsonl(res: &floqsym_core::SearchResult) -> String {
    let mut log = String::new();
    for it in &res.history {
        let record = IterationRecord {
            iteration: it.iteration,
            evaluations: it.evaluations,
            best_lambda: it.best_lambda,
            best_params: &it.best_params,
            diameter: it.diameter,
        };
        log.push_str(&serde_json::to_string(&record).expect("serializable record"));
        log.push('\n');
    }
    let final_record = ResultRecord {
        result: ResultBody {
            params: &res.params,
            lambda_min: res.lambda_min,
            upsilon: res.upsilon,
            evaluations: res.evaluations,
            converged: res.converged,
            false_positive: res.false_positive,
        },
    };
    log.push_str(&serde_json::to_string(&final_record).expect("serializable record"));
    log.push('\n');
    log
}

fn run_search(cfg: &RunConfig) -> Result<i32, RunError> {
    if cfg.search_free.is_empty() {
        return Err(RunError::Config("search command needs [search] free/start entries".into()));
    }
    let res = find_symmetry(&cfg.model, &cfg.search_free, &cfg.search_start, &cfg.search_config())?;
    let log = search_jsonl(&res);

    let mut w = Writer::new(cfg)?;
    w.write("search.jsonl", &log)?;

    let argmin: Vec<String> = cfg
        .search_free
        .iter()
        .zip(&res.params)
        .map(|(n, v)| format!("{n}={v:.9e}"))
        .collect();
    println!(
        "model={} argmin=[{}] lambda_min={:.12e} upsilon={:.12e} evaluations={} converged={} false_positive={}",
        cfg.model.id(),
        argmin.join(", "),
        res.lambda_min,
        res.upsilon,
        res.evaluations,
        res.converged,
        res.false_positive
    );
    Ok(EXIT_OK)
}

/// Convenience used by tests: run a sweep exactly as the CLI does and return
/// the table alongside the bytes of the main CSV artifact.
pub fn sweep_with_artifacts(
    cfg: &RunConfig,
    cancel: &AtomicBool,
) -> floqsym_core::Result<(SweepTable, String)> {
    let sweep_cfg = SweepConfig { pipeline: cfg.pipeline, jobs: cfg.jobs, warm_start: cfg.warm_start };
    let table = sweep(&cfg.model, &cfg.sweep_axes, &sweep_cfg, Some(cancel))?;
    let csv = csvio::sweep_table_csv(&table, &cfg.echo_lines());
    Ok((table, csv))
}
