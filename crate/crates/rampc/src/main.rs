use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rampc::backends::Backend;
use rampc::config::{load_config, ConfigError};
use rampc::output::{compare_report, write_csv, write_report};
use rampc::plots::emit_plots;
use rampc::sim::{run_batch, run_one};
use rampc::verify::run_checks;
use rampc_core::harness::{metrics, ControllerKind, RunStatus, Scenario};
use rampc_core::tube_mpc::{validate_gain, TerminalSet};

#[derive(Parser)]
#[command(name = "rampc", version, about = "Robust adaptive tube MPC simulator for a jammed hinge")]
struct Cli {
    /// LP backend.
    #[arg(long, value_enum, global = true, default_value = "clarabel")]
    backend: Backend,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Rampc,
    Ampc0,
    Pid,
    Adaptive,
}

impl From<Kind> for ControllerKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Rampc => ControllerKind::Rampc,
            Kind::Ampc0 => ControllerKind::Ampc0,
            Kind::Pid => ControllerKind::Pid,
            Kind::Adaptive => ControllerKind::Adaptive,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one controller and write `log.csv` plus SVG plots.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        controller: Kind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Overrides `steps` from the config.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every controller over seeds `0..n` and write a metrics table.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-loop self-check on the default scenario.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        seeds: usize,
    },
    /// Print offline quantities: f̄, w̄, terminal data and the gain report.
    Precompute {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<rampc_core::tube_mpc::ConfigError> for Failure {
    fn from(e: rampc_core::tube_mpc::ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn io<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Run(e.to_string())
}

fn cmd_run(cfg: Scenario, kind: ControllerKind, seed: u64, out: &Path, backend: Backend) -> Result<(), Failure> {
    std::fs::create_dir_all(out).map_err(io)?;
    let log = run_one(&cfg, kind, seed, backend)?;
    write_csv(&log, &out.join("log.csv")).map_err(io)?;
    emit_plots(&log, &cfg.algorithm, out).map_err(io)?;
    let m = metrics(&log);
    println!(
        "{kind} seed {seed}: {} steps, e_x {:.4}, mean e_rho {:.4}, settling {}, violations {}/{}, mean solve {:.2} ms",
        log.rows.len(),
        m.e_x,
        m.e_rho_avg,
        m.settling_time.map(|t| format!("{t:.2} s")).unwrap_or_else(|| "n/a".into()),
        m.viol_algo,
        m.viol_hw,
        m.mean_solve_ms
    );
    match log.status {
        RunStatus::Completed => Ok(()),
        RunStatus::Infeasible { k } => Err(Failure::Run(format!("infeasible at step {k}"))),
        RunStatus::Halted { k } => Err(Failure::Run(format!("hardware limit exceeded at step {k}"))),
        RunStatus::Failed { k, reason } => Err(Failure::Run(format!("failed at step {k}: {reason}"))),
    }
}

fn cmd_compare(cfg: Scenario, seeds: usize, out: &Path, backend: Backend) -> Result<(), Failure> {
    std::fs::create_dir_all(out).map_err(io)?;
    let seeds: Vec<u64> = (0..seeds as u64).collect();
    let kinds = ControllerKind::ALL;
    let logs = run_batch(&cfg, &kinds, &seeds, backend)?;
    for l in &logs {
        let dir = out.join(format!("{}_{}", l.controller, l.seed));
        std::fs::create_dir_all(&dir).map_err(io)?;
        write_csv(l, &dir.join("log.csv")).map_err(io)?;
    }
    let rows = compare_report(&logs);
    write_report(&rows, std::fs::File::create(out.join("report.csv")).map_err(io)?).map_err(io)?;
    write_report(&rows, std::io::stdout()).map_err(io)?;
    Ok(())
}

fn cmd_precompute(cfg: Scenario) -> Result<(), Failure> {
    let ctl = cfg.controller(ControllerKind::Rampc)?;
    let sb = ctl.support_bounds().map_err(|e| Failure::Config(e.to_string()))?;
    println!("w_bar per template row: {:?}", sb.wbar);
    for (row, f) in ctl.zrows.iter().zip(&sb.fbar) {
        println!("f_bar {:?}/{:?} <= {}: {:.6} {:.6}", row.f, row.g0, row.b, f[0], f[1]);
    }
    match &ctl.terminal {
        TerminalSet::Invariant { set, .. } => {
            println!(
                "terminal: invariant polygon, {} vertices, {} iterations, area {:.5}",
                set.polygon.vertices.len(),
                set.iterations,
                set.polygon.area()
            );
        }
        TerminalSet::Scaled { theta_bar } => println!("terminal: scaled template, theta_bar {theta_bar:.6}"),
    }
    match ctl.terminal_scale() {
        Ok(t) => println!("template scale theta_bar: {t:.6}"),
        Err(e) => println!("template scale theta_bar: none ({e})"),
    }
    let g = validate_gain(&ctl.model, &ctl.cfg.gain, &ctl.prior).map_err(|e| Failure::Config(e.to_string()))?;
    println!(
        "gain: worst spectral radius {:.6} at rho {:?} -> {}",
        g.worst_radius,
        g.worst_rho,
        if g.stable { "stable" } else { "not stable" }
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run { config, controller, seed, steps, out } => load_config(&config).map_err(Failure::from).and_then(|mut c| {
            if let Some(s) = steps {
                if s == 0 {
                    return Err(Failure::Config("invalid field `steps`".into()));
                }
                c.steps = s;
            }
            cmd_run(c, controller.into(), seed, &out, cli.backend)
        }),
        Cmd::Compare { config, seeds, out } => load_config(&config).map_err(Failure::from).and_then(|c| {
            let n = seeds.unwrap_or(c.seeds);
            cmd_compare(c, n, &out, cli.backend)
        }),
        Cmd::Verify { config, seeds } => {
            let cfg = match config {
                Some(p) => load_config(&p).map_err(Failure::from),
                None => Ok(Scenario::default()),
            };
            cfg.and_then(|c| {
                let seeds: Vec<u64> = (0..seeds as u64).collect();
                let checks = run_checks(&c, &seeds, cli.backend).map_err(|e| Failure::Config(e.to_string()))?;
                let mut ok = true;
                for ch in &checks {
                    println!("{} {}: {}", if ch.pass { "PASS" } else { "FAIL" }, ch.name, ch.detail);
                    ok &= ch.pass;
                }
                if ok {
                    Ok(())
                } else {
                    Err(Failure::Run("verification failed".into()))
                }
            })
        }
        Cmd::Precompute { config } => load_config(&config).map_err(Failure::from).and_then(cmd_precompute),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
    }
}
