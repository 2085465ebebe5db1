//! Batch front-end: every computation in the library as a subcommand with
//! JSON configuration in and CSV on standard output.
//!
//! Exit codes: 0 success, 2 config-parse failure, 3 domain-validation
//! failure, 4 numerical failure. Diagnostics go to standard error; commands
//! never write files.

// Validations use negated comparisons on purpose: they reject NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use drawdown_occupation::exits::{
    down_exit_laplace, exit_report, gerber_shiu_density, h_function, up_exit_laplace,
};
use drawdown_occupation::mc::estimate_exit_laplace;
use drawdown_occupation::{Error, OmegaScaleGrid};

#[derive(Parser)]
#[command(
    name = "drawdown-occupation",
    about = "Laplace transforms of weighted occupation times of the drawdown of a Levy surplus process",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: String,
    /// Override the mesh spacing from the configuration.
    #[arg(long)]
    mesh: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Classical scale functions W, W', Z on the mesh for a constant rate q.
    Scale(Common),
    /// Full omega-scale triangle with partials and dual residuals.
    OmegaScale(Common),
    /// Up/down exit Laplace transforms for one (x, b, c) configuration.
    Exit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        b: f64,
        /// Lower barrier (default 0).
        #[arg(long, default_value_t = 0.0)]
        c: f64,
    },
    /// Gerber-Shiu density samples on a (z, y) lattice.
    GerberShiu {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        b: f64,
        /// Extra constant discount rate folded into the weight.
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = 20)]
        z_points: usize,
        #[arg(long, default_value_t = 20)]
        y_points: usize,
        #[arg(long, default_value_t = 3.0)]
        y_max: f64,
    },
    /// Monte Carlo cross-validation of the exit transforms.
    McValidate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 100_000)]
        paths: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Euler step for the Brownian engine (a second run at dt/4 is
        /// always emitted for that engine).
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
    },
    /// Sweep x over the mesh and emit (x, up, down) rows for plotting.
    Table {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 0.0)]
        c: f64,
    },
}

/// 12 significant digits, the documented CSV float format.
fn fmt(v: f64) -> String {
    format!("{v:.11e}")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Parse(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Domain(_) | Error::Config(_) => ExitCode::from(3),
                Error::Numerical(_) => ExitCode::from(4),
            }
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(4)
        }
    }
}

enum Failure {
    Parse(String),
    Core(Error),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    match cli.command {
        Command::Scale(common) => {
            let (cfg, mesh) = load_common(&common)?;
            let model = cfg.model()?;
            let q = cfg.constant_q()?;
            let se = drawdown_occupation::ScaleEval::new(model, q)?;
            // A constant weight gives the plain mesh over [0, x_max].
            let grid_mesh = drawdown_occupation::mesh::Mesh::build(
                &drawdown_occupation::WeightFunction::constant(q)?,
                cfg.numerics.x_max,
                mesh,
            )?;
            writeln!(out, "x,W,Wprime,Z")?;
            for i in 0..grid_mesh.len() {
                let x = grid_mesh.node(i);
                writeln!(
                    out,
                    "{},{},{},{}",
                    fmt(x),
                    fmt(se.eval_w(x)),
                    fmt(se.w_prime_right(x)),
                    fmt(se.eval_z(x))
                )?;
            }
        }
        Command::OmegaScale(common) => {
            let (cfg, mesh) = load_common(&common)?;
            let grid =
                OmegaScaleGrid::solve(cfg.model()?, &cfg.weight()?, cfg.numerics.x_max, mesh)?;
            writeln!(out, "x,y,W_omega,W2,Zhat,Zhat1,Zhat2,dual_residual")?;
            // Column-major (fixed y, ascending x), so the cumulative Zhat
            // integrals update in O(1) per node.
            let m = grid.mesh();
            let w0 = grid.scale0().w_at_zero();
            for j in 0..m.len() {
                let y = m.node(j);
                let mut zhat = 1.0;
                let mut zhat2 = -m.node_omega(j) * w0;
                for i in j..m.len() {
                    let x = m.node(i);
                    if i > j {
                        let half = 0.5 * m.width(i - 1) * m.cell_omega(i - 1);
                        zhat += half * (grid.value_at(i - 1, j) + grid.value_at(i, j));
                        zhat2 += half * (grid.partial_w2_at(i - 1, j) + grid.partial_w2_at(i, j));
                    }
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{},{}",
                        fmt(x),
                        fmt(y),
                        fmt(grid.value_at(i, j)),
                        fmt(grid.partial_w2_at(i, j)),
                        fmt(zhat),
                        fmt(m.node_omega(i) * grid.value_at(i, j)),
                        fmt(zhat2),
                        fmt(grid.dual_residual_at(i, j))
                    )?;
                }
            }
        }
        Command::Exit { common, x, b, c } => {
            let (cfg, mesh) = load_common(&common)?;
            let rep = exit_report(cfg.model()?, &cfg.weight()?, x, b, c, mesh)?;
            if rep.dual_residual > 1e-4 {
                eprintln!(
                    "warning: dual-equation residual {:.3e} above the 1e-4 alarm threshold; refine the mesh",
                    rep.dual_residual
                );
            }
            writeln!(out, "x,b,c,up,down,residual")?;
            writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt(rep.x),
                fmt(rep.b),
                fmt(rep.c),
                fmt(rep.up),
                fmt(rep.down),
                fmt(rep.dual_residual)
            )?;
        }
        Command::GerberShiu {
            common,
            x,
            b,
            delta,
            z_points,
            y_points,
            y_max,
        } => {
            let (cfg, mesh) = load_common(&common)?;
            if z_points == 0 || y_points == 0 || !(y_max > 0.0) {
                return Err(Failure::Core(Error::domain(
                    "gerber-shiu needs positive z-points, y-points and y-max",
                )));
            }
            let model = cfg.model()?;
            let shifted = cfg.weight()?.plus_constant(delta)?;
            let grid = OmegaScaleGrid::solve(model, &shifted, b, mesh)?;
            let h = h_function(&grid)?;
            writeln!(out, "z,y,density")?;
            for zi in 1..=z_points {
                let z = b * zi as f64 / (z_points + 1) as f64;
                for yi in 1..=y_points {
                    let y = y_max * yi as f64 / y_points as f64;
                    let d = gerber_shiu_density(&grid, &h, x, z, y, b)?;
                    writeln!(out, "{},{},{}", fmt(d.z_snapped), fmt(y), fmt(d.value))?;
                }
            }
        }
        Command::McValidate {
            common,
            x,
            b,
            paths,
            seed,
            dt,
        } => {
            let (cfg, mesh) = load_common(&common)?;
            let model = cfg.model()?;
            let weight = cfg.weight()?;
            let grid = OmegaScaleGrid::solve(model, &weight, b, mesh)?;
            let h = h_function(&grid)?;
            let analytic_up = up_exit_laplace(&h, x, b)?;
            let analytic_down = down_exit_laplace(&grid, &h, x, b)?;

            writeln!(
                out,
                "engine,n,mean_up,se_up,mean_down,se_down,analytic_up,analytic_down,z_up,z_down"
            )?;
            let runs: Vec<Option<f64>> = if model.is_bounded_variation() {
                vec![None]
            } else {
                // Euler validation mode: the nominal step and a dt/4 check.
                vec![Some(dt), Some(dt / 4.0)]
            };
            for run_dt in runs {
                let (up, down) = estimate_exit_laplace(model, &weight, x, b, paths, seed, run_dt)?;
                let engine = match up.engine {
                    drawdown_occupation::Engine::ExactCl => "exact_cl",
                    drawdown_occupation::Engine::EulerBrownian => "euler_brownian",
                };
                writeln!(
                    out,
                    "{engine},{paths},{},{},{},{},{},{},{},{}",
                    fmt(up.mean),
                    fmt(up.stderr),
                    fmt(down.mean),
                    fmt(down.stderr),
                    fmt(analytic_up),
                    fmt(analytic_down),
                    fmt((up.mean - analytic_up) / up.stderr),
                    fmt((down.mean - analytic_down) / down.stderr)
                )?;
            }
        }
        Command::Table { common, b, c } => {
            let (cfg, mesh) = load_common(&common)?;
            let model = cfg.model()?;
            let weight = cfg.weight()?;
            if !(b > c) {
                return Err(Failure::Core(Error::domain(format!(
                    "table needs b > c, got b={b}, c={c}"
                ))));
            }
            let grid = OmegaScaleGrid::solve(model, &weight, b - c, mesh)?;
            let h = h_function(&grid)?;
            writeln!(out, "x,up,down")?;
            for i in 0..grid.mesh().len() {
                let v = grid.mesh().node(i);
                let up = up_exit_laplace(&h, v, b - c)?;
                let down = down_exit_laplace(&grid, &h, v, b - c)?;
                writeln!(out, "{},{},{}", fmt(c + v), fmt(up), fmt(down))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn load_common(common: &Common) -> Result<(config::RunConfig, f64), Failure> {
    let cfg = config::load(&common.config).map_err(Failure::Parse)?;
    let mesh = common.mesh.unwrap_or(cfg.numerics.mesh);
    Ok((cfg, mesh))
}
