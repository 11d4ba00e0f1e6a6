//! `memsx` command line: reads a JSON config, runs one computation and
//! writes CSV/JSON results.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 bad command line or config,
//! 3 solver failure, 4 touchdown of the classical force.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use memsx_core::dynamics::{simulate, Termination};
use memsx_core::forces::{
    force_membrane, force_robin, force_transmission, test_field, validate_shape_derivative,
};
use memsx_core::limits::{aspect_ratio_study, thin_plate_study, LimitTable, ThinPlateScaling};
use memsx_core::potential::{self, PotentialModel};
use memsx_core::steady::{bifurcation_diagram, pull_in_dynamic, pull_in_steady, steady_solve, PullInReport};
use memsx_core::Error;
use rayon::prelude::*;
use serde::Serialize;

use config::{Config, Setup, Study};
use output::{write_json, Cell, Csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Potential,
    Force,
    Simulate,
    Steady,
    Pullin,
    Bifurcate,
    Limits,
}

#[derive(Debug, Parser)]
#[command(name = "memsx", version, about = "Dimensionless MEMS laboratory")]
struct Cli {
    command: Command,
    /// Config file (JSON).
    config: Option<PathBuf>,
    #[arg(long = "config", value_name = "PATH")]
    config_flag: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for independent rows.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Overrides `model.params.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug)]
pub enum Failure {
    Io(std::io::Error),
    Config(String),
    Solver(Error),
    /// Touchdown of the classical model; outputs were written.
    Touchdown(f64),
    /// Steady solve did not converge; outputs were written.
    NotConverged,
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Solver(_) | Failure::NotConverged => 3,
            Failure::Touchdown(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Io(e) => write!(f, "i/o error: {e}"),
            Failure::Config(m) => write!(f, "{m}"),
            Failure::Solver(e) => write!(f, "{e}"),
            Failure::Touchdown(t) => write!(f, "touchdown at t = {t}; the classical force is singular there"),
            Failure::NotConverged => write!(f, "steady solve did not converge"),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::InvalidProfile(_) | Error::InvalidBracket { .. } => {
                Failure::Config(e.to_string())
            }
            other => Failure::Solver(other),
        }
    }
}

/// Runs one invocation and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("memsx: {f}");
            f.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let path = match (&cli.config, &cli.config_flag) {
        (Some(_), Some(_)) => return Err(Failure::Config("config given twice".into())),
        (Some(p), None) | (None, Some(p)) => p,
        (None, None) => return Err(Failure::Config("no config file given".into())),
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = config::parse(&text).map_err(Failure::Config)?;
    if let Some(seed) = cli.seed {
        cfg.model.params.seed = seed;
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Config(format!("--jobs: {e}")))?;
    let setup = cfg.setup()?;
    let ctx = Context {
        cfg: &cfg,
        s: &setup,
        hash: cfg.hash(),
        out: &out,
    };
    pool.install(|| match cli.command {
        Command::Potential => ctx.potential(),
        Command::Force => ctx.force(),
        Command::Simulate => ctx.simulate(),
        Command::Steady => ctx.steady(),
        Command::Pullin => ctx.pullin(),
        Command::Bifurcate => ctx.bifurcate(),
        Command::Limits => ctx.limits(),
    })
}

struct Context<'a> {
    cfg: &'a Config,
    s: &'a Setup,
    hash: String,
    out: &'a Path,
}

impl Context<'_> {
    fn csv(&self, columns: &[&str]) -> Csv {
        Csv::new(&self.hash, &[], columns)
    }

    fn model(&self) -> PotentialModel {
        self.cfg.model.potential
    }

    fn potential(&self) -> Result<(), Failure> {
        let s = self.s;
        let sol = potential::solve(self.model(), &s.initial, &s.profile, &s.params, &s.grid)?;
        let mut csv = self.csv(&["x", "z", "layer", "psi"]);
        for p in sol.samples() {
            csv.row([p.x.into(), p.z.into(), Cell::I(p.layer as u64), p.psi.into()]);
        }
        csv.write(self.out, "field.csv")?;
        #[derive(Serialize)]
        struct Summary {
            energy: f64,
            psi_min: f64,
            psi_max: f64,
            iterations: usize,
            residual: f64,
        }
        let (psi_min, psi_max) = sol.min_max();
        write_json(
            self.out,
            "potential.json",
            &Summary {
                energy: sol.energy,
                psi_min,
                psi_max,
                iterations: sol.iterations,
                residual: sol.residual,
            },
            &self.hash,
        )?;
        println!("energy {:.16e}", sol.energy);
        Ok(())
    }

    fn force(&self) -> Result<(), Failure> {
        let s = self.s;
        let (u, p, g) = (&s.initial, &s.params, &s.grid);
        let model = self.model();
        let sol = potential::solve(model, u, &s.profile, p, g)?;
        let f = match model {
            PotentialModel::Transmission => force_transmission(&sol, u, &s.profile, p)?,
            PotentialModel::Membrane => force_membrane(&sol, u, p)?,
            PotentialModel::Robin => force_robin(&sol, u, &s.profile, p)?,
        };
        let mut csv = self.csv(&["x", "g"]);
        for (x, v) in g.xs().into_iter().zip(&f.values) {
            csv.row([x.into(), (*v).into()]);
        }
        csv.write(self.out, "force.csv")?;
        let check = self.cfg.model.shape_check;
        let reports = (0..check.fields)
            .into_par_iter()
            .map(|k| {
                let v = test_field(g, p.seed, k);
                validate_shape_derivative(u, &v, model, &s.profile, p, g, check.step)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut csv = self.csv(&["field", "analytic", "fd", "fd_forward", "fd_backward", "rel_err"]);
        for (k, r) in reports.iter().enumerate() {
            csv.row([
                k.into(),
                r.analytic.into(),
                r.fd.into(),
                r.fd_forward.into(),
                r.fd_backward.into(),
                r.rel_err.into(),
            ]);
        }
        csv.write(self.out, "shape_derivative.csv")?;
        let worst = reports.iter().map(|r| r.rel_err).fold(0.0, f64::max);
        println!("worst shape-derivative relative error {worst:.3e}");
        Ok(())
    }

    fn simulate(&self) -> Result<(), Failure> {
        let s = self.s;
        let force = self.cfg.force_model(s)?;
        let init = self.cfg.initial_state(s);
        let tr = simulate(&init, &force, &s.params, &s.grid, &self.cfg.dynamics.stepping)?;
        let mut csv = self.csv(&["t", "min_u", "e_m", "e_e_scaled", "total", "zipped_count"]);
        for r in &tr.ledger {
            csv.row([
                r.t.into(),
                r.min_u.into(),
                r.e_m.into(),
                r.e_e_scaled.into(),
                r.total.into(),
                r.zipped_count.into(),
            ]);
        }
        csv.write(self.out, "trajectory.csv")?;
        if self.cfg.output.snapshots {
            let xs = s.grid.xs();
            let mut csv = self.csv(&["t", "x", "u"]);
            for (t, snap) in tr.times.iter().zip(&tr.snapshots) {
                for (x, u) in xs.iter().zip(snap) {
                    csv.row([(*t).into(), (*x).into(), (*u).into()]);
                }
            }
            csv.write(self.out, "snapshots.csv")?;
        }
        println!(
            "{} steps, t = {:.6}, min u = {:.6}, {:?}",
            tr.steps,
            tr.final_state.t,
            tr.final_state.min_u(),
            tr.termination
        );
        match (tr.termination, tr.touchdown_time) {
            (Termination::Touchdown, Some(t)) => Err(Failure::Touchdown(t)),
            _ => Ok(()),
        }
    }

    fn steady(&self) -> Result<(), Failure> {
        let s = self.s;
        let force = self.cfg.force_model(s)?;
        let opts = &self.cfg.dynamics.steady;
        let r = steady_solve(s.params.lambda, &force, &s.params, &s.grid, s.initial.values(), opts)?;
        let mut csv = self.csv(&["x", "u", "active"]);
        for ((x, u), a) in s.grid.xs().into_iter().zip(&r.u).zip(&r.active) {
            csv.row([x.into(), (*u).into(), (*a).into()]);
        }
        csv.write(self.out, "steady.csv")?;
        #[derive(Serialize)]
        struct Summary {
            lambda: f64,
            converged: bool,
            iterations: usize,
            residual: f64,
            min_u: f64,
            zipped_count: usize,
        }
        write_json(
            self.out,
            "steady.json",
            &Summary {
                lambda: s.params.lambda,
                converged: r.converged,
                iterations: r.iterations,
                residual: r.residual,
                min_u: r.min_u(),
                zipped_count: r.zipped_count(opts.contact_tol),
            },
            &self.hash,
        )?;
        println!("converged {} after {} iterations, min u = {:.6}", r.converged, r.iterations, r.min_u());
        if r.converged {
            Ok(())
        } else {
            Err(Failure::NotConverged)
        }
    }

    fn pullin(&self) -> Result<(), Failure> {
        let s = self.s;
        let force = self.cfg.force_model(s)?;
        let opts = &self.cfg.dynamics.pullin;
        let (a, b) = rayon::join(
            || pull_in_steady(&force, &s.params, &s.grid, opts),
            || pull_in_dynamic(&force, &s.params, &s.grid, opts),
        );
        let report = PullInReport::new(a?, b?);
        write_json(self.out, "pullin.json", &report, &self.hash)?;
        println!(
            "lambda* steady {:.6}, dynamic {:.6}, gap {:.2e}",
            report.lambda_star_steady, report.lambda_star_dynamic, report.gap
        );
        Ok(())
    }

    fn bifurcate(&self) -> Result<(), Failure> {
        let s = self.s;
        let force = self.cfg.force_model(s)?;
        let lambdas = self.cfg.dynamics.sweep.lambdas();
        let t = bifurcation_diagram(&force, &s.params, &s.grid, &lambdas, &self.cfg.dynamics.steady)?;
        let mut csv = self.csv(&[
            "lambda",
            "max_abs_u",
            "min_u",
            "energy",
            "converged",
            "zipped_count",
            "iterations",
        ]);
        for r in &t.rows {
            csv.row([
                r.lambda.into(),
                r.max_abs_u.into(),
                r.min_u.into(),
                r.energy.into(),
                r.converged.into(),
                r.zipped_count.into(),
                r.iterations.into(),
            ]);
        }
        csv.write(self.out, "bifurcation.csv")?;
        let converged = t.rows.iter().filter(|r| r.converged).count();
        println!("{converged} of {} rows converged", t.rows.len());
        Ok(())
    }

    fn limits(&self) -> Result<(), Failure> {
        let s = self.s;
        let lim = &self.cfg.geometry.limits;
        let seq = &lim.sequence;
        // validates the whole sequence before the rows fan out
        if seq.is_empty() || seq.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Failure::Config("geometry.limits.sequence must be nonempty and strictly decreasing".into()));
        }
        let row = |v: f64| {
            let one = [v];
            let t = match lim.study {
                Study::ThinPlateO1 => {
                    thin_plate_study(&s.initial, &s.profile, ThinPlateScaling::O1, &one, &s.params, &s.grid)
                }
                Study::ThinPlateOd => {
                    thin_plate_study(&s.initial, &s.profile, ThinPlateScaling::Od, &one, &s.params, &s.grid)
                }
                Study::AspectRatio => {
                    aspect_ratio_study(&s.initial, &s.profile, self.model(), &one, &s.params, &s.grid)
                }
            }?;
            Ok::<_, Error>(t.rows[0])
        };
        let rows = seq.par_iter().map(|&v| row(v)).collect::<Result<Vec<_>, _>>()?;
        let table = LimitTable::with_orders(rows, 10.0 * s.params.tol_linear);
        let g = &s.grid;
        let grid_line = format!("grid n_x={} n_z1={} n_z2={}", g.n_x, g.n_z1, g.n_z2);
        let parameter = if lim.study == Study::AspectRatio { "eps" } else { "delta" };
        let mut csv = Csv::new(
            &self.hash,
            &[grid_line],
            &[parameter, "energy", "limit", "gap", "order", "n_x", "n_z1", "n_z2"],
        );
        for r in &table.rows {
            csv.row([
                r.parameter.into(),
                r.energy.into(),
                r.limit.into(),
                r.gap.into(),
                r.order.into(),
                r.n_x.into(),
                r.n_z1.into(),
                r.n_z2.into(),
            ]);
        }
        csv.write(self.out, "limits.csv")?;
        println!("orders {:?}", table.orders());
        Ok(())
    }
}
