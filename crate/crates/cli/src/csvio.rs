//! CSV emission and parsing with a pinned byte format: `#`-prefixed config
//! echo block, one header row, comma separators, LF line endings, floats at
//! 17 significant digits. Failure rows keep their status code and leave the
//! measure cells empty.

use std::fmt::Write as _;

use floqsym_core::sweep::{SweepRow, SweepTable};
use floqsym_core::PeriodicOrbit;

use crate::config::ConfigError;

/// 17 significant digits: round-trips f64 exactly through decimal.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn echo_block(title: &str, echo: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {title}");
    for line in echo {
        let _ = writeln!(out, "# {line}");
    }
    out
}

/// Full sweep table: swept parameters, status, measures.
pub fn sweep_table_csv(table: &SweepTable, echo: &[String]) -> String {
    let mut out = echo_block("floqsym sweep table", echo);
    let mut header = table.param_names.join(",");
    header.push_str(",status,lambda,upsilon,lambda_db,upsilon_db");
    let _ = writeln!(out, "{header}");
    for row in &table.rows {
        let mut cells: Vec<String> = row.values.iter().map(|v| fmt_f64(*v)).collect();
        cells.push(row.status.clone());
        for v in [row.lambda, row.upsilon, row.lambda_db, row.upsilon_db] {
            cells.push(v.map(fmt_f64).unwrap_or_default());
        }
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Parse a sweep-table CSV back into a [`SweepTable`]; the inverse of
/// [`sweep_table_csv`] (grids are recovered from the row values in first
/// appearance order, the model id from the echo block).
pub fn parse_sweep_table_csv(text: &str) -> Result<SweepTable, ConfigError> {
    let mut model_id = String::new();
    let mut lines = text.lines().filter(|l| {
        if let Some(rest) = l.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("model.preset = ") {
                model_id = v.trim().to_string();
            }
            false
        } else {
            !l.trim().is_empty()
        }
    });
    let header = lines
        .next()
        .ok_or_else(|| ConfigError("sweep CSV has no header row".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let status_col = cols
        .iter()
        .position(|c| *c == "status")
        .ok_or_else(|| ConfigError("sweep CSV header lacks a status column".into()))?;
    let param_names: Vec<String> = cols[..status_col].iter().map(|s| s.to_string()).collect();
    if cols.len() != status_col + 5 {
        return Err(ConfigError("sweep CSV header has unexpected trailing columns".into()));
    }

    let parse_cell = |cell: &str| -> Result<Option<f64>, ConfigError> {
        if cell.is_empty() {
            Ok(None)
        } else {
            cell.parse::<f64>()
                .map(Some)
                .map_err(|_| ConfigError(format!("bad float cell '{cell}'")))
        }
    };

    let mut rows = Vec::new();
    let mut grids: Vec<Vec<f64>> = vec![Vec::new(); param_names.len()];
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols.len() {
            return Err(ConfigError(format!("row has {} cells, expected {}", cells.len(), cols.len())));
        }
        let mut values = Vec::with_capacity(param_names.len());
        for (d, cell) in cells[..status_col].iter().enumerate() {
            let v = cell
                .parse::<f64>()
                .map_err(|_| ConfigError(format!("bad parameter cell '{cell}'")))?;
            values.push(v);
            if !grids[d].contains(&v) {
                grids[d].push(v);
            }
        }
        rows.push(SweepRow {
            values,
            status: cells[status_col].to_string(),
            lambda: parse_cell(cells[status_col + 1])?,
            upsilon: parse_cell(cells[status_col + 2])?,
            lambda_db: parse_cell(cells[status_col + 3])?,
            upsilon_db: parse_cell(cells[status_col + 4])?,
        });
    }
    Ok(SweepTable { model_id, param_names, grids, rows })
}

/// Contour data for one dB measure of a 2-axis sweep, as a matrix CSV: the
/// first column holds the slow-axis values, the header row the fast-axis
/// values. Failed cells are empty.
pub fn grid_csv(
    table: &SweepTable,
    value_of: impl Fn(&SweepRow) -> Option<f64>,
    measure_name: &str,
    echo: &[String],
) -> Result<String, ConfigError> {
    if table.param_names.len() != 2 {
        return Err(ConfigError(format!(
            "contour data needs a 2-axis sweep, this one has {}",
            table.param_names.len()
        )));
    }
    let (rows_n, cols_n) = (table.grids[0].len(), table.grids[1].len());
    let mut out = echo_block(&format!("floqsym contour data: {measure_name}"), echo);
    let mut header = format!("{}\\{}", table.param_names[0], table.param_names[1]);
    for v in &table.grids[1] {
        header.push(',');
        header.push_str(&fmt_f64(*v));
    }
    let _ = writeln!(out, "{header}");
    for i in 0..rows_n {
        let mut cells = vec![fmt_f64(table.grids[0][i])];
        for j in 0..cols_n {
            let row = &table.rows[i * cols_n + j];
            cells.push(value_of(row).map(fmt_f64).unwrap_or_default());
        }
        let _ = writeln!(out, "{}", cells.join(","));
    }
    Ok(out)
}

/// Scatter points (Λ_dB, Υ_dB) of the successful non-floored rows.
pub fn scatter_csv(points: &[(f64, f64)], echo: &[String]) -> String {
    let mut out = echo_block("floqsym measure scatter", echo);
    let _ = writeln!(out, "lambda_db,upsilon_db");
    for (l, u) in points {
        let _ = writeln!(out, "{},{}", fmt_f64(*l), fmt_f64(*u));
    }
    out
}

/// Orbit samples on the τ grid.
pub fn orbit_csv(orbit: &PeriodicOrbit, echo: &[String]) -> String {
    let mut out = echo_block("floqsym periodic orbit", echo);
    let n = orbit.dim();
    let mut header = String::from("tau");
    for i in 1..=n {
        let _ = write!(header, ",x{i}");
    }
    let _ = writeln!(out, "{header}");
    for (tau, s) in orbit.taus().iter().zip(&orbit.samples) {
        let mut cells = vec![fmt_f64(*tau)];
        cells.extend(s.iter().map(|v| fmt_f64(*v)));
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Floquet multipliers and exponents.
pub fn floquet_csv(dec: &floqsym_core::FloquetDecomposition, echo: &[String]) -> String {
    let mut out = echo_block("floqsym floquet multipliers", echo);
    let _ = writeln!(out, "mode,multiplier_re,multiplier_im,multiplier_abs,exponent_re,exponent_im");
    for (i, (lam, mu)) in dec.multipliers.iter().zip(&dec.exponents).enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            i + 1,
            fmt_f64(lam.re),
            fmt_f64(lam.im),
            fmt_f64(lam.norm()),
            fmt_f64(mu.re),
            fmt_f64(mu.im)
        );
    }
    out
}

/// Scalar results of a single-point analysis.
pub fn measures_csv(
    measures: &floqsym_core::MeasurePair,
    orbit: &PeriodicOrbit,
    echo: &[String],
) -> String {
    let mut out = echo_block("floqsym measures", echo);
    let _ = writeln!(out, "key,value");
    let _ = writeln!(out, "lambda,{}", fmt_f64(measures.lambda));
    let _ = writeln!(out, "upsilon,{}", fmt_f64(measures.upsilon));
    let _ = writeln!(out, "lambda_db,{}", fmt_f64(measures.lambda_db));
    let _ = writeln!(out, "upsilon_db,{}", fmt_f64(measures.upsilon_db));
    let _ = writeln!(out, "period,{}", fmt_f64(orbit.period));
    let _ = writeln!(out, "residual,{}", fmt_f64(orbit.residual));
    out
}

/// Pairwise angle table Θ (radians), square matrix over realized modes.
pub fn theta_csv(measures: &floqsym_core::MeasurePair, echo: &[String]) -> String {
    let mut out = echo_block("floqsym mode angle table", echo);
    let n = measures.theta_table.nrows();
    let header: Vec<String> = (1..=n).map(|i| format!("u{i}")).collect();
    let _ = writeln!(out, "mode,{}", header.join(","));
    for i in 0..n {
        let mut cells = vec![format!("u{}", i + 1)];
        for j in 0..n {
            cells.push(fmt_f64(measures.theta_table[(i, j)]));
        }
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_table() -> SweepTable {
        SweepTable {
            model_id: "counterexample".into(),
            param_names: vec!["mu".into(), "kappa".into()],
            grids: vec![vec![0.4, 0.6], vec![0.0, 0.3]],
            rows: vec![
                SweepRow {
                    values: vec![0.4, 0.0],
                    status: "ok".into(),
                    lambda: Some(1.25e-13),
                    upsilon: Some(3.5e-7),
                    lambda_db: Some(-129.0),
                    upsilon_db: Some(-64.5),
                },
                SweepRow {
                    values: vec![0.4, 0.3],
                    status: "newton_divergence".into(),
                    lambda: None,
                    upsilon: None,
                    lambda_db: None,
                    upsilon_db: None,
                },
                SweepRow {
                    values: vec![0.6, 0.0],
                    status: "ok".into(),
                    lambda: Some(2.0e-13),
                    upsilon: Some(4.0e-7),
                    lambda_db: Some(-127.0),
                    upsilon_db: Some(-63.9),
                },
                SweepRow {
                    values: vec![0.6, 0.3],
                    status: "ok".into(),
                    lambda: Some(3.0e-13),
                    upsilon: Some(0.5),
                    lambda_db: Some(-125.2),
                    upsilon_db: Some(-3.0),
                },
            ],
        }
    }

    #[test]
    fn sweep_csv_round_trips_value_exactly() {
        let table = tiny_table();
        let echo = vec!["model.preset = counterexample".to_string()];
        let text = sweep_table_csv(&table, &echo);
        let parsed = parse_sweep_table_csv(&text).unwrap();
        assert_eq!(parsed, table);
    }

    #[test]
    fn failure_rows_have_empty_measure_cells() {
        let text = sweep_table_csv(&tiny_table(), &[]);
        let line = text.lines().find(|l| l.contains("newton_divergence")).unwrap();
        assert!(line.ends_with("newton_divergence,,,,"));
    }

    #[test]
    fn header_only_for_empty_tables() {
        let mut table = tiny_table();
        table.rows.clear();
        let text = sweep_table_csv(&table, &[]);
        let data_lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data_lines, vec!["mu,kappa,status,lambda,upsilon,lambda_db,upsilon_db"]);
    }

    #[test]
    fn line_endings_are_bare_lf() {
        let text = sweep_table_csv(&tiny_table(), &["a = b".to_string()]);
        assert!(!text.contains('\r'));
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn grid_csv_shapes_the_matrix() {
        let table = tiny_table();
        let text = grid_csv(&table, |r| r.lambda_db, "lambda_db", &[]).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 3); // header + 2 slow-axis rows
        assert!(rows[0].starts_with("mu\\kappa,"));
        // The failed cell is empty.
        assert!(rows[1].ends_with(','));
    }

    #[test]
    fn seventeen_digit_floats_round_trip() {
        for v in [1.0 / 3.0, 2.0_f64.sqrt(), -1.2345678901234567e-89, 6.283185307179586] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{s}");
        }
    }
}
