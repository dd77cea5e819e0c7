//! CSV tables and SVG log-log charts for rate studies.

use super::{RateTable, StudyMode};
use crate::Result;
use std::fmt::Write as _;
use std::path::Path;

/// Fixed CSV schema; the slope columns carry the fitted and guaranteed
/// exponent of the scalar L² error, repeated on every row.
pub const CSV_HEADER: &str = "level,h,p_s,p_v,ndof,err_u_l2,err_grad_u_l2,err_phi_l2,err_div_phi_l2,err_phi_n_l2,err_b,slope_fit,slope_pred";

pub fn csv_string(table: &RateTable) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (i, row) in table.rows.iter().enumerate() {
        let level = match table.mode {
            StudyMode::HRefinement => i,
            StudyMode::PElevation => table.xs[i] as usize,
        };
        let _ = writeln!(
            out,
            "{},{:.12e},{},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.6},{:.6}",
            level,
            row.h,
            row.p_s,
            row.p_v,
            row.ndof,
            row.err_u_l2,
            row.err_grad_u,
            row.err_phi_l2,
            row.err_div_phi,
            row.err_phi_n,
            row.err_b,
            table.fitted.u,
            table.predicted.u,
        );
    }
    out
}

pub fn write_csv(table: &RateTable, path: &Path) -> Result<()> {
    std::fs::write(path, csv_string(table))?;
    Ok(())
}

/// One chart per tracked norm. Series: measured data with markers, the
/// least-squares fit over the fit window, and a reference line with the
/// guaranteed slope anchored at the finest point.
pub fn svg_string(table: &RateTable, norm: &str) -> String {
    let (ys, predicted): (Vec<f64>, f64) = match norm {
        "err_u_l2" => (
            table.rows.iter().map(|r| r.err_u_l2).collect(),
            table.predicted.u,
        ),
        "err_grad_u_l2" => (
            table.rows.iter().map(|r| r.err_grad_u).collect(),
            table.predicted.grad_u,
        ),
        "err_phi_l2" => (
            table.rows.iter().map(|r| r.err_phi_l2).collect(),
            table.predicted.phi,
        ),
        "err_div_phi_l2" => (
            table.rows.iter().map(|r| r.err_div_phi).collect(),
            table.predicted.div_phi,
        ),
        "err_phi_n_l2" => (
            table.rows.iter().map(|r| r.err_phi_n).collect(),
            table.predicted.phi_n,
        ),
        "err_b" => (
            table.rows.iter().map(|r| r.err_b).collect(),
            table.predicted.div_phi,
        ),
        other => panic!("unknown norm column `{other}`"),
    };
    let xs = &table.xs;
    let (w, h) = (640.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 30.0, 50.0);
    let lx: Vec<f64> = xs.iter().map(|x| x.log10()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.max(1e-300).log10()).collect();
    let pad = 0.15;
    let (x0, x1) = span(&lx, pad);
    let (y0, y1) = span(&ly, pad);
    let to_px = |lx: f64| ml + (lx - x0) / (x1 - x0) * (w - ml - mr);
    let to_py = |ly: f64| h - mb - (ly - y0) / (y1 - y0) * (h - mb - mt);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(
        svg,
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        w - ml - mr,
        h - mt - mb
    );
    let xlabel = match table.mode {
        StudyMode::HRefinement => "h",
        StudyMode::PElevation => "p",
    };
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">log10 {xlabel}</text>",
        (ml + w - mr) / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">log10 {norm}</text>",
        (mt + h - mb) / 2.0,
        (mt + h - mb) / 2.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">{norm}: fitted slope {:.3}, guaranteed {:.3}</text>",
        (ml + w - mr) / 2.0,
        slope_for(table, norm),
        predicted
    );
    // axis ticks at integer powers of ten
    for k in (x0.floor() as i64)..=(x1.ceil() as i64) {
        let px = to_px(k as f64);
        if px >= ml && px <= w - mr {
            let _ = writeln!(
                svg,
                "<line x1=\"{px}\" y1=\"{}\" x2=\"{px}\" y2=\"{}\" stroke=\"gray\" stroke-dasharray=\"3 3\"/>",
                mt,
                h - mb
            );
            let _ = writeln!(
                svg,
                "<text x=\"{px}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">1e{k}</text>",
                h - mb + 16.0
            );
        }
    }
    for k in (y0.floor() as i64)..=(y1.ceil() as i64) {
        let py = to_py(k as f64);
        if py >= mt && py <= h - mb {
            let _ = writeln!(
                svg,
                "<line x1=\"{ml}\" y1=\"{py}\" x2=\"{}\" y2=\"{py}\" stroke=\"gray\" stroke-dasharray=\"3 3\"/>",
                w - mr
            );
            let _ = writeln!(
                svg,
                "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">1e{k}</text>",
                ml - 6.0,
                py + 4.0
            );
        }
    }
    // data series
    let pts: Vec<String> = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| format!("{:.2},{:.2}", to_px(*x), to_py(*y)))
        .collect();
    let _ = writeln!(
        svg,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"crimson\" stroke-width=\"2\"/>",
        pts.join(" ")
    );
    for (x, y) in lx.iter().zip(&ly) {
        let _ = writeln!(
            svg,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"crimson\"/>",
            to_px(*x),
            to_py(*y)
        );
    }
    // least-squares fit over the fit window
    let wlen = table.fit_window.min(lx.len());
    if wlen >= 2 {
        // the slope is invariant under the log base, so it applies
        // directly in log10 coordinates
        let (slope, _) = super::fit_loglog(xs, &ys, wlen);
        let (sx, sy) = (lx[lx.len() - wlen], ly[ly.len() - wlen]);
        let ex = lx[lx.len() - 1];
        let fit_line = [(sx, sy), (ex, sy + slope * (ex - sx))];
        let _ = writeln!(
            svg,
            "<polyline points=\"{:.2},{:.2} {:.2},{:.2}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>",
            to_px(fit_line[0].0),
            to_py(fit_line[0].1),
            to_px(fit_line[1].0),
            to_py(fit_line[1].1)
        );
    }
    // guaranteed-slope reference through the finest point, offset upwards
    if predicted.is_finite() {
        let sign = match table.mode {
            StudyMode::HRefinement => 1.0,
            StudyMode::PElevation => -1.0,
        };
        let (ex, ey) = (lx[lx.len() - 1], ly[ly.len() - 1] + 0.2);
        let (sx0, _) = (lx[0], ly[0]);
        let sy0 = ey + sign * predicted * (sx0 - ex);
        let _ = writeln!(
            svg,
            "<polyline points=\"{:.2},{:.2} {:.2},{:.2}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>",
            to_px(sx0),
            to_py(sy0),
            to_px(ex),
            to_py(ey)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn slope_for(table: &RateTable, norm: &str) -> f64 {
    match norm {
        "err_u_l2" => table.fitted.u,
        "err_grad_u_l2" => table.fitted.grad_u,
        "err_phi_l2" => table.fitted.phi,
        "err_div_phi_l2" => table.fitted.div_phi,
        "err_phi_n_l2" => table.fitted.phi_n,
        _ => table.fitted.b,
    }
}

fn span(vals: &[f64], pad: f64) -> (f64, f64) {
    let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
    let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
    let d = (hi - lo).max(1e-6);
    (lo - pad * d, hi + pad * d)
}

pub const NORM_COLUMNS: [&str; 6] = [
    "err_u_l2",
    "err_grad_u_l2",
    "err_phi_l2",
    "err_div_phi_l2",
    "err_phi_n_l2",
    "err_b",
];

pub fn write_svg(table: &RateTable, norm: &str, path: &Path) -> Result<()> {
    std::fs::write(path, svg_string(table, norm))?;
    Ok(())
}

/// Write the CSV and one SVG per norm into a directory, under a study stem.
pub fn emit_outputs(table: &RateTable, dir: &Path, stem: &str) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let csv = dir.join(format!("{stem}.csv"));
    write_csv(table, &csv)?;
    written.push(csv);
    for norm in NORM_COLUMNS {
        let path = dir.join(format!("{stem}_{norm}.svg"));
        write_svg(table, norm, &path)?;
        written.push(path);
    }
    Ok(written)
}
