//! SVG figures for one trajectory.

use std::path::{Path, PathBuf};

use plotters::prelude::*;
use rampc_core::harness::TrajectoryLog;
use rampc_core::tube_mpc::Limits;

type Res<T> = Result<T, Box<dyn std::error::Error>>;

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(23, 190, 207),
];

struct Series {
    name: String,
    pts: Vec<(f64, f64)>,
}

fn range(series: &[Series], extra: &[f64]) -> (f64, f64) {
    let vals = series.iter().flat_map(|s| s.pts.iter().map(|p| p.1)).chain(extra.iter().copied());
    let (lo, hi) = vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    let pad = ((hi - lo) * 0.08).max(1e-6);
    (lo - pad, hi + pad)
}

/// Line chart with optional horizontal bands `(lo, hi)` shaded.
fn line_chart(path: &Path, title: &str, ylabel: &str, t_end: f64, series: &[Series], bands: &[(f64, f64)]) -> Res<()> {
    let root = SVGBackend::new(path, (900, 420)).into_drawing_area();
    root.fill(&WHITE)?;
    let lims: Vec<f64> = bands.iter().flat_map(|b| [b.0, b.1]).collect();
    let (y0, y1) = range(series, &lims);
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(56)
        .build_cartesian_2d(0.0..t_end.max(1e-3), y0..y1)?;
    chart.configure_mesh().x_desc("t (s)").y_desc(ylabel).draw()?;
    for (lo, hi) in bands {
        let c = RGBColor(120, 120, 120);
        chart.draw_series(LineSeries::new([(0.0, *lo), (t_end, *lo)], c.stroke_width(1)))?;
        chart.draw_series(LineSeries::new([(0.0, *hi), (t_end, *hi)], c.stroke_width(1)))?;
    }
    for (i, s) in series.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        let pts: Vec<_> = s.pts.iter().copied().filter(|p| p.1.is_finite()).collect();
        chart
            .draw_series(LineSeries::new(pts, c.stroke_width(2)))?
            .label(s.name.clone())
            .legend(move |(x, y)| PathElement::new([(x, y), (x + 16, y)], c.stroke_width(2)));
    }
    chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw()?;
    root.present()?;
    Ok(())
}

fn params_chart(path: &Path, log: &TrajectoryLog, t_end: f64) -> Res<()> {
    let root = SVGBackend::new(path, (900, 780)).into_drawing_area();
    root.fill(&WHITE)?;
    let panels = root.split_evenly((3, 1));
    let names = ["stiffness", "viscous", "arm"];
    for (i, area) in panels.iter().enumerate() {
        let col = |f: &dyn Fn(&rampc_core::harness::LogRow) -> f64| -> Vec<(f64, f64)> {
            log.rows.iter().map(|r| (r.t, f(r))).filter(|p| p.1.is_finite()).collect()
        };
        let truth = col(&|r| r.rho_true[i]);
        let hat = col(&|r| r.rho_hat[i]);
        let lo = col(&|r| r.lo[i]);
        let hi = col(&|r| r.hi[i]);
        let all = [
            Series { name: String::new(), pts: truth.clone() },
            Series { name: String::new(), pts: hat.clone() },
            Series { name: String::new(), pts: lo.clone() },
            Series { name: String::new(), pts: hi.clone() },
        ];
        let (y0, y1) = range(&all, &[]);
        let mut chart = ChartBuilder::on(area)
            .caption(names[i], ("sans-serif", 16))
            .margin(8)
            .x_label_area_size(30)
            .y_label_area_size(50)
            .build_cartesian_2d(0.0..t_end.max(1e-3), y0..y1)?;
        chart.configure_mesh().x_desc("t (s)").draw()?;
        if !lo.is_empty() && lo.len() == hi.len() {
            let mut poly: Vec<(f64, f64)> = hi.clone();
            poly.extend(lo.iter().rev().copied());
            chart.draw_series(std::iter::once(Polygon::new(poly, PALETTE[0].mix(0.18).filled())))?;
        }
        chart
            .draw_series(LineSeries::new(truth, BLACK.stroke_width(2)))?
            .label("true")
            .legend(|(x, y)| PathElement::new([(x, y), (x + 16, y)], BLACK.stroke_width(2)));
        chart
            .draw_series(LineSeries::new(hat, PALETTE[1].stroke_width(2)))?
            .label("estimate")
            .legend(|(x, y)| PathElement::new([(x, y), (x + 16, y)], PALETTE[1].stroke_width(2)));
        chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw()?;
    }
    root.present()?;
    Ok(())
}

/// Writes `state.svg`, `wrench.svg`, `params.svg` and `width.svg` into `dir`.
pub fn emit_plots(log: &TrajectoryLog, limits: &Limits, dir: &Path) -> Res<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let t_end = log.rows.last().map(|r| r.t).unwrap_or(0.0);
    let tag = log.controller.name();
    let mut out = Vec::new();

    let p = dir.join("state.svg");
    let st = [
        Series { name: "theta (rad)".into(), pts: log.rows.iter().map(|r| (r.t, r.x[0])).collect() },
        Series { name: "theta_dot (rad/s)".into(), pts: log.rows.iter().map(|r| (r.t, r.x[1])).collect() },
    ];
    let bands = [(limits.theta[0], limits.theta[1]), (limits.theta_dot[0], limits.theta_dot[1])];
    line_chart(&p, &format!("{tag}: state"), "state", t_end, &st, &bands)?;
    out.push(p);

    let p = dir.join("wrench.svg");
    let labels = ["f_x", "f_y", "f_z", "tau_x", "tau_y", "tau_z"];
    let mut ws: Vec<Series> = (0..6)
        .map(|j| Series { name: labels[j].into(), pts: log.rows.iter().map(|r| (r.t, r.u[j])).collect() })
        .collect();
    ws.push(Series { name: "tau_h".into(), pts: log.rows.iter().map(|r| (r.t, r.tau_h)).collect() });
    let hb: Vec<(f64, f64)> = limits.hinge_torque.map(|b| vec![(-b, b)]).unwrap_or_default();
    line_chart(&p, &format!("{tag}: wrench"), "N, N*m", t_end, &ws, &hb)?;
    out.push(p);

    let p = dir.join("params.svg");
    params_chart(&p, log, t_end)?;
    out.push(p);

    let p = dir.join("width.svg");
    let w = [Series { name: "total width".into(), pts: log.rows.iter().map(|r| (r.t, r.set_width())).collect() }];
    line_chart(&p, &format!("{tag}: parameter set width"), "sum(hi - lo)", t_end, &w, &[])?;
    out.push(p);
    Ok(out)
}
