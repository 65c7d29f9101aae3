//! Parameter sweeps over rectangular grids, with warm starting along the
//! fastest-varying axis and Pearson correlation of the dB measures.

use std::sync::atomic::{AtomicBool, Ordering};

use nalgebra::DVector;
use rayon::prelude::*;

use crate::measures::DB_FLOOR;
use crate::models::Model;
use crate::pipeline::{analyze_from, PipelineConfig};
use crate::{Error, Result};

/// One grid point's outcome. Failures keep their row with a status code and
/// empty measures.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Swept parameter values, in axis order.
    pub values: Vec<f64>,
    /// "ok" or the error category of the failed stage.
    pub status: String,
    pub lambda: Option<f64>,
    pub upsilon: Option<f64>,
    pub lambda_db: Option<f64>,
    pub upsilon_db: Option<f64>,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Grid sweep results; row order is row-major over the axes with the last
/// axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub model_id: String,
    pub param_names: Vec<String>,
    pub grids: Vec<Vec<f64>>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn success_count(&self) -> usize {
        self.rows.iter().filter(|r| r.is_ok()).count()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepConfig {
    pub pipeline: PipelineConfig,
    /// Worker threads; 0 picks the rayon default.
    pub jobs: usize,
    /// Reuse the neighbouring solution along the fastest axis as the settle
    /// start.
    pub warm_start: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { pipeline: PipelineConfig::default(), jobs: 0, warm_start: true }
    }
}

/// Run the full pipeline at every grid point.
///
/// Work is split into chains (fixed outer-axis values); chains run in
/// parallel on a bounded pool while each chain walks its fastest-axis points
/// sequentially, warm-starting from the previous success. Results merge by
/// grid index, so the table is deterministic regardless of scheduling. An
/// optional cancel flag stops chains between points; unreached points are
/// recorded with status "cancelled".
pub fn sweep(
    model: &Model,
    axes: &[(String, Vec<f64>)],
    cfg: &SweepConfig,
    cancel: Option<&AtomicBool>,
) -> Result<SweepTable> {
    if axes.is_empty() {
        return Err(Error::Domain("sweep needs at least one axis".into()));
    }
    for (name, grid) in axes {
        if grid.is_empty() {
            return Err(Error::Domain(format!("sweep axis '{name}' has an empty grid")));
        }
        // Fail fast on unknown parameter names.
        model.clone().set_value(name, grid[0])?;
    }

    let chain_axis = axes.len() - 1;
    let chain_len = axes[chain_axis].1.len();
    let outer: Vec<Vec<usize>> = outer_indices(axes);

    let run_chain = |outer_idx: &Vec<usize>| -> Vec<SweepRow> {
        let mut rows = Vec::with_capacity(chain_len);
        let mut warm: Option<DVector<f64>> = None;
        for k in 0..chain_len {
            if cancel.map(|c| c.load(Ordering::Relaxed)).unwrap_or(false) {
                let values = point_values(axes, outer_idx, k);
                rows.push(failed_row(values, "cancelled"));
                continue;
            }
            let values = point_values(axes, outer_idx, k);
            let mut point_model = model.clone();
            let mut bad_param = None;
            for ((name, _), v) in axes.iter().zip(&values) {
                if point_model.set_value(name, *v).is_err() {
                    bad_param = Some(name.clone());
                }
            }
            if let Some(name) = bad_param {
                rows.push(failed_row(values, &format!("invalid_param:{name}")));
                continue;
            }

            let warm_attempt = if cfg.warm_start { warm.as_ref() } else { None };
            let result = match warm_attempt {
                Some(anchor) => analyze_from(&point_model, Some(anchor), &cfg.pipeline)
                    .or_else(|_| analyze_from(&point_model, None, &cfg.pipeline)),
                None => analyze_from(&point_model, None, &cfg.pipeline),
            };
            match result {
                Ok(a) => {
                    warm = Some(a.orbit.anchor.clone());
                    rows.push(SweepRow {
                        values,
                        status: "ok".into(),
                        lambda: Some(a.measures.lambda),
                        upsilon: Some(a.measures.upsilon),
                        lambda_db: Some(a.measures.lambda_db),
                        upsilon_db: Some(a.measures.upsilon_db),
                    });
                }
                Err(e) => {
                    warm = None;
                    rows.push(failed_row(values, e.category()));
                }
            }
        }
        rows
    };

    let chunks: Vec<Vec<SweepRow>> = if cfg.jobs == 1 {
        outer.iter().map(run_chain).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::SearchFailed(format!("worker pool: {e}")))?;
        pool.install(|| outer.par_iter().map(run_chain).collect())
    };

    Ok(SweepTable {
        model_id: model.id().to_string(),
        param_names: axes.iter().map(|(n, _)| n.clone()).collect(),
        grids: axes.iter().map(|(_, g)| g.clone()).collect(),
        rows: chunks.into_iter().flatten().collect(),
    })
}

fn failed_row(values: Vec<f64>, status: &str) -> SweepRow {
    SweepRow {
        values,
        status: status.to_string(),
        lambda: None,
        upsilon: None,
        lambda_db: None,
        upsilon_db: None,
    }
}

/// All outer-axis index combinations in row-major order.
fn outer_indices(axes: &[(String, Vec<f64>)]) -> Vec<Vec<usize>> {
    let outer_dims: Vec<usize> = axes[..axes.len() - 1].iter().map(|(_, g)| g.len()).collect();
    let count: usize = outer_dims.iter().product::<usize>().max(1);
    let mut out = Vec::with_capacity(count);
    for mut flat in 0..count {
        let mut idx = vec![0usize; outer_dims.len()];
        for d in (0..outer_dims.len()).rev() {
            idx[d] = flat % outer_dims[d];
            flat /= outer_dims[d];
        }
        out.push(idx);
    }
    out
}

fn point_values(axes: &[(String, Vec<f64>)], outer_idx: &[usize], chain_pos: usize) -> Vec<f64> {
    let mut values: Vec<f64> = outer_idx
        .iter()
        .enumerate()
        .map(|(d, &i)| axes[d].1[i])
        .collect();
    values.push(axes[axes.len() - 1].1[chain_pos]);
    values
}

/// Pearson correlation of Λ_dB against Υ_dB over successful, non-floored
/// rows, plus the scatter points themselves.
pub fn correlate(table: &SweepTable) -> Result<(f64, Vec<(f64, f64)>)> {
    let scatter: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter(|r| r.is_ok())
        .filter_map(|r| match (r.lambda_db, r.upsilon_db) {
            (Some(l), Some(u)) if l > DB_FLOOR && u > DB_FLOOR => Some((l, u)),
            _ => None,
        })
        .collect();
    if scatter.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "correlation needs at least 3 usable rows, have {}",
            scatter.len()
        )));
    }
    let n = scatter.len() as f64;
    let (mx, my) = scatter.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (mx / n, my / n);
    let (mut sxx, mut syy, mut sxy) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in &scatter {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InsufficientData("zero variance in dB measures".into()));
    }
    Ok((sxy / (sxx * syy).sqrt(), scatter))
}
