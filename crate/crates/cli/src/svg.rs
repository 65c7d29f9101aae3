//! Self-contained deterministic SVG plots: filled heatmaps of 2-D sweeps on
//! a dB color scale, measure scatter plots, and orbit projections. No
//! plotting dependency, identical bytes for identical inputs.

use std::fmt::Write as _;

use floqsym_core::PeriodicOrbit;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 540.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 90.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

// Sampled viridis control points, dark-to-bright.
const COLORMAP: [(f64, f64, f64); 9] = [
    (0.267, 0.005, 0.329),
    (0.281, 0.155, 0.469),
    (0.244, 0.290, 0.538),
    (0.191, 0.407, 0.556),
    (0.148, 0.512, 0.556),
    (0.128, 0.615, 0.534),
    (0.208, 0.719, 0.473),
    (0.459, 0.814, 0.335),
    (0.993, 0.906, 0.144),
];

fn color_at(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (COLORMAP.len() - 1) as f64;
    let i = (t as usize).min(COLORMAP.len() - 2);
    let f = t - i as f64;
    let lerp = |a: f64, b: f64| a + f * (b - a);
    let (r, g, b) = (
        lerp(COLORMAP[i].0, COLORMAP[i + 1].0),
        lerp(COLORMAP[i].1, COLORMAP[i + 1].1),
        lerp(COLORMAP[i].2, COLORMAP[i + 1].2),
    );
    format!("#{:02x}{:02x}{:02x}", (r * 255.0) as u8, (g * 255.0) as u8, (b * 255.0) as u8)
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1000.0 || v.abs() < 0.01 {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn header(title: &str, echo: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, "<!--");
    for line in echo {
        let _ = writeln!(out, "{}", line.replace("--", "- -"));
    }
    let _ = writeln!(out, "-->");
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>"#,
        WIDTH / 2.0
    );
    out
}

fn axes_labels(out: &mut String, xlabel: &str, ylabel: &str) {
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{xlabel}</text>"#,
        MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) / 2.0,
        HEIGHT - 12.0
    );
    let cy = MARGIN_T + (HEIGHT - MARGIN_T - MARGIN_B) / 2.0;
    let _ = writeln!(
        out,
        r#"<text x="18" y="{cy}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {cy})">{ylabel}</text>"#
    );
}

/// Pad a possibly degenerate [min, max] range so it always has extent.
fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = lo.abs().max(1.0) * 0.5;
        (lo - pad, hi + pad)
    }
}

/// Cell edges for a monotone grid: midpoints between neighbours, end cells
/// mirrored.
fn edges(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    if n == 1 {
        let (lo, hi) = padded(grid[0], grid[0]);
        return vec![lo, hi];
    }
    let mut e = Vec::with_capacity(n + 1);
    e.push(grid[0] - (grid[1] - grid[0]) / 2.0);
    for i in 1..n {
        e.push((grid[i - 1] + grid[i]) / 2.0);
    }
    e.push(grid[n - 1] + (grid[n - 1] - grid[n - 2]) / 2.0);
    e
}

/// Filled heatmap of a 2-axis sweep measure. `cells` is row-major over
/// (slow axis y, fast axis x); `None` cells (failed points) render grey.
pub fn heatmap(
    grid_y: &[f64],
    grid_x: &[f64],
    cells: &[Option<f64>],
    title: &str,
    ylabel: &str,
    xlabel: &str,
    echo: &[String],
) -> Result<String, String> {
    if grid_x.is_empty() || grid_y.is_empty() || cells.len() != grid_x.len() * grid_y.len() {
        return Err("heatmap needs a non-empty grid matching the cell count".into());
    }
    let finite: Vec<f64> = cells.iter().flatten().copied().collect();
    if finite.is_empty() {
        return Err("heatmap has no successful cells".into());
    }
    let (vmin, vmax) = padded(
        finite.iter().copied().fold(f64::INFINITY, f64::min),
        finite.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );

    let ex = edges(grid_x);
    let ey = edges(grid_y);
    let (x0, x1) = (ex[0], ex[ex.len() - 1]);
    let (y0, y1) = (ey[0], ey[ey.len() - 1]);
    let px = |v: f64| MARGIN_L + (v - x0) / (x1 - x0) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |v: f64| HEIGHT - MARGIN_B - (v - y0) / (y1 - y0) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut out = header(title, echo);
    for (i, _) in grid_y.iter().enumerate() {
        for (j, _) in grid_x.iter().enumerate() {
            let fill = match cells[i * grid_x.len() + j] {
                Some(v) => color_at((v - vmin) / (vmax - vmin)),
                None => "#cccccc".to_string(),
            };
            let (rx0, rx1) = (px(ex[j]), px(ex[j + 1]));
            let (ry0, ry1) = (py(ey[i + 1]), py(ey[i]));
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
                fmt(rx0),
                fmt(ry0),
                fmt(rx1 - rx0),
                fmt(ry1 - ry0)
            );
        }
    }

    // Frame and ticks.
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        fmt(MARGIN_L),
        fmt(MARGIN_T),
        fmt(WIDTH - MARGIN_L - MARGIN_R),
        fmt(HEIGHT - MARGIN_T - MARGIN_B)
    );
    for k in 0..=4 {
        let tx = x0 + (x1 - x0) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            fmt(px(tx)),
            fmt(HEIGHT - MARGIN_B + 16.0),
            fmt_tick(tx)
        );
        let ty = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            fmt(MARGIN_L - 6.0),
            fmt(py(ty) + 4.0),
            fmt_tick(ty)
        );
    }
    axes_labels(&mut out, xlabel, ylabel);

    // Colorbar.
    let bar_x = WIDTH - MARGIN_R + 22.0;
    let bar_h = HEIGHT - MARGIN_T - MARGIN_B;
    let strips = 64;
    for s in 0..strips {
        let t = s as f64 / (strips - 1) as f64;
        let y = HEIGHT - MARGIN_B - bar_h * (s + 1) as f64 / strips as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="16" height="{}" fill="{}"/>"#,
            fmt(bar_x),
            fmt(y),
            fmt(bar_h / strips as f64 + 0.5),
            color_at(t)
        );
    }
    for (t, v) in [(0.0, vmin), (0.5, (vmin + vmax) / 2.0), (1.0, vmax)] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{} dB</text>"#,
            fmt(bar_x + 20.0),
            fmt(HEIGHT - MARGIN_B - bar_h * t + 4.0),
            fmt_tick(v)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Scatter of (Λ_dB, Υ_dB) points: Υ on the x axis, Λ on the y axis.
pub fn scatter(points: &[(f64, f64)], title: &str, echo: &[String]) -> Result<String, String> {
    if points.is_empty() {
        return Err("scatter has no points".into());
    }
    let (xmin, xmax) = padded(
        points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    );
    let (ymin, ymax) = padded(
        points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    );
    let px = |v: f64| MARGIN_L + (v - xmin) / (xmax - xmin) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |v: f64| HEIGHT - MARGIN_B - (v - ymin) / (ymax - ymin) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut out = header(title, echo);
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        fmt(MARGIN_L),
        fmt(MARGIN_T),
        fmt(WIDTH - MARGIN_L - MARGIN_R),
        fmt(HEIGHT - MARGIN_T - MARGIN_B)
    );
    for k in 0..=4 {
        let tx = xmin + (xmax - xmin) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            fmt(px(tx)),
            fmt(HEIGHT - MARGIN_B + 16.0),
            fmt_tick(tx)
        );
        let ty = ymin + (ymax - ymin) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            fmt(MARGIN_L - 6.0),
            fmt(py(ty) + 4.0),
            fmt_tick(ty)
        );
    }
    for (l, u) in points {
        let _ = writeln!(
            out,
            r##"<circle cx="{}" cy="{}" r="3.2" fill="#1f5f8b" fill-opacity="0.75"/>"##,
            fmt(px(*u)),
            fmt(py(*l))
        );
    }
    axes_labels(&mut out, "upsilon [dB]", "lambda [dB]");
    out.push_str("</svg>\n");
    Ok(out)
}

/// Orbit projection. With two axes this is a plane curve; a third axis is
/// folded in by a cabinet projection so mode deflections off the plane stay
/// visible.
pub fn orbit(
    orbit: &PeriodicOrbit,
    axes: (usize, usize, Option<usize>),
    title: &str,
    echo: &[String],
) -> Result<String, String> {
    if orbit.samples.is_empty() {
        return Err("orbit has no samples".into());
    }
    let n = orbit.dim();
    let (ax, ay, az) = axes;
    if ax >= n || ay >= n || az.map(|a| a >= n).unwrap_or(false) {
        return Err(format!("projection axes out of range for dimension {n}"));
    }
    let (ca, sa) = (std::f64::consts::FRAC_PI_6.cos() * 0.5, std::f64::consts::FRAC_PI_6.sin() * 0.5);
    let project = |s: &nalgebra::DVector<f64>| -> (f64, f64) {
        let z = az.map(|a| s[a]).unwrap_or(0.0);
        (s[ax] + ca * z, s[ay] + sa * z)
    };
    let pts: Vec<(f64, f64)> = orbit.samples.iter().map(project).collect();
    let (xmin, xmax) = padded(
        pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    );
    let (ymin, ymax) = padded(
        pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    );
    // Equal scale on both axes.
    let span = (xmax - xmin).max(ymax - ymin);
    let (xc, yc) = ((xmin + xmax) / 2.0, (ymin + ymax) / 2.0);
    let plot = (WIDTH - MARGIN_L - MARGIN_R).min(HEIGHT - MARGIN_T - MARGIN_B);
    let px = |v: f64| MARGIN_L + ((v - xc) / span + 0.5) * plot;
    let py = |v: f64| MARGIN_T + plot - ((v - yc) / span + 0.5) * plot;

    let mut out = header(title, echo);
    let mut path = String::new();
    for (i, (x, y)) in pts.iter().enumerate() {
        let _ = write!(path, "{}{},{} ", if i == 0 { "M" } else { "L" }, fmt(px(*x)), fmt(py(*y)));
    }
    path.push('Z');
    let _ = writeln!(out, r##"<path d="{path}" fill="none" stroke="#b03030" stroke-width="1.4"/>"##);
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        fmt(MARGIN_L),
        fmt(MARGIN_T),
        fmt(plot),
        fmt(plot)
    );
    let axis_label = |a: usize| format!("x{}", a + 1);
    let xl = match az {
        Some(a) => format!("{} (+ {} depth)", axis_label(ax), axis_label(a)),
        None => axis_label(ax),
    };
    axes_labels(&mut out, &xl, &axis_label(ay));
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn circle() -> PeriodicOrbit {
        let n = 64;
        let samples: Vec<DVector<f64>> = (0..n)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                DVector::from_vec(vec![t.cos(), t.sin()])
            })
            .collect();
        PeriodicOrbit {
            anchor: samples[0].clone(),
            period: std::f64::consts::TAU,
            derivs: samples.clone(),
            samples,
            residual: 0.0,
        }
    }

    #[test]
    fn heatmap_renders_cells_and_missing_values() {
        let cells = vec![Some(-10.0), Some(-20.0), None, Some(-40.0), Some(-50.0), Some(-60.0)];
        let svg = heatmap(&[1.0, 2.0], &[0.1, 0.2, 0.3], &cells, "t", "y", "x", &[]).unwrap();
        assert!(svg.contains("#cccccc"));
        assert_eq!(svg.matches("<rect").count(), 6 + 2 + 64); // cells + frames + colorbar
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn heatmap_rejects_empty_data() {
        assert!(heatmap(&[], &[], &[], "t", "y", "x", &[]).is_err());
        assert!(heatmap(&[1.0], &[1.0], &[None], "t", "y", "x", &[]).is_err());
    }

    #[test]
    fn single_point_scatter_renders_one_marker() {
        let svg = scatter(&[(-42.0, -17.0)], "one point", &[]).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
    }

    #[test]
    fn orbit_projection_closes_the_path() {
        let svg = orbit(&circle(), (0, 1, None), "circle", &[]).unwrap();
        assert!(svg.contains("Z\""));
        assert!(svg.matches('L').count() >= 63);
    }

    #[test]
    fn identical_inputs_give_identical_bytes() {
        let a = scatter(&[(-1.0, -2.0), (-3.0, -4.0)], "det", &["k = v".into()]).unwrap();
        let b = scatter(&[(-1.0, -2.0), (-3.0, -4.0)], "det", &["k = v".into()]).unwrap();
        assert_eq!(a, b);
    }
}
