//! CSV logs and comparison tables.

use std::io::Write;
use std::path::Path;

use rampc_core::harness::{metrics, TrajectoryLog};

pub const CSV_HEADER: &str = "k,t,theta,theta_dot,u1,u2,u3,u4,u5,u6,tau_h,rho1_true,rho2_true,rho3_true,rho1_hat,rho2_hat,rho3_hat,rho1_lo,rho1_hi,rho2_lo,rho2_hi,rho3_lo,rho3_hi,feasible,viol_algo,viol_hw,cost,solve_ms";

fn b(v: bool) -> String {
    if v { "1" } else { "0" }.to_string()
}

pub fn write_csv_to<W: Write>(log: &TrajectoryLog, w: W) -> csv::Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(CSV_HEADER.split(','))?;
    for r in &log.rows {
        let mut rec: Vec<String> = vec![r.k.to_string(), r.t.to_string(), r.x[0].to_string(), r.x[1].to_string()];
        rec.extend(r.u.iter().map(|v| v.to_string()));
        rec.push(r.tau_h.to_string());
        rec.extend(r.rho_true.iter().map(|v| v.to_string()));
        rec.extend(r.rho_hat.iter().map(|v| v.to_string()));
        for i in 0..3 {
            rec.push(r.lo[i].to_string());
            rec.push(r.hi[i].to_string());
        }
        rec.extend([b(r.feasible), b(r.viol_algo), b(r.viol_hw), r.cost.to_string(), r.solve_ms.to_string()]);
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_csv(log: &TrajectoryLog, path: &Path) -> csv::Result<()> {
    write_csv_to(log, std::fs::File::create(path)?)
}

/// Per-controller means over a batch.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub controller: String,
    pub runs: usize,
    pub completed: usize,
    pub e_x: f64,
    pub e_rho_avg: f64,
    pub settling_s: f64,
    pub viol_algo: usize,
    pub viol_hw: usize,
    pub mean_solve_ms: f64,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// One row per controller, in first-seen order.
pub fn compare_report(logs: &[TrajectoryLog]) -> Vec<ReportRow> {
    let mut order: Vec<_> = Vec::new();
    for l in logs {
        if !order.contains(&l.controller) {
            order.push(l.controller);
        }
    }
    order
        .into_iter()
        .map(|c| {
            let group: Vec<_> = logs.iter().filter(|l| l.controller == c).collect();
            let ms: Vec<_> = group.iter().map(|l| metrics(l)).collect();
            ReportRow {
                controller: c.name().to_string(),
                runs: group.len(),
                completed: group.iter().filter(|l| l.status.is_ok()).count(),
                e_x: mean(ms.iter().map(|m| m.e_x)),
                e_rho_avg: mean(ms.iter().map(|m| m.e_rho_avg)),
                settling_s: mean(ms.iter().map(|m| m.settling_time.unwrap_or(f64::NAN))),
                viol_algo: ms.iter().map(|m| m.viol_algo).sum(),
                viol_hw: ms.iter().map(|m| m.viol_hw).sum(),
                mean_solve_ms: mean(ms.iter().map(|m| m.mean_solve_ms)),
            }
        })
        .collect()
}

pub fn write_report<W: Write>(rows: &[ReportRow], w: W) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "controller",
        "runs",
        "completed",
        "e_x",
        "e_rho_avg",
        "settling_s",
        "viol_algo",
        "viol_hw",
        "mean_solve_ms",
    ])?;
    for r in rows {
        wr.write_record([
            r.controller.clone(),
            r.runs.to_string(),
            r.completed.to_string(),
            format!("{:.6}", r.e_x),
            format!("{:.6}", r.e_rho_avg),
            format!("{:.3}", r.settling_s),
            r.viol_algo.to_string(),
            r.viol_hw.to_string(),
            format!("{:.3}", r.mean_solve_ms),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
