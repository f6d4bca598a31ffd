mod commands;
mod error;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::Context;
use crate::error::{CliError, CliResult};

/// Axisymmetric steady Euler flows with velocity orthogonal to the pressure gradient.
#[derive(Debug, Parser)]
#[command(name = "gavriflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Scenario JSON with the constants, grid and tolerance.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Series or Taylor order, depending on the command.
    #[arg(long, global = true)]
    pub order: Option<usize>,
    /// Grid step override.
    #[arg(long, global = true)]
    pub step: Option<f64>,
    /// Tolerance override.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Plot length of a unit velocity vector.
    #[arg(long, global = true, default_value_t = 0.25)]
    pub glyph_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FlowKind {
    Even,
    Odd,
    Torus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    E1,
    E2,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the profile ODEs and report the validity interval.
    Profiles {
        /// Requested pressure range, as LO,HI.
        #[arg(long, value_parser = parse_pair, default_value = "-1.0,10.0", allow_hyphen_values = true)]
        p_range: (f64, f64),
        /// Also write the exact rational series for β and γ.
        #[arg(long)]
        series: bool,
    },
    /// Exact rational series for β(α) and γ(α).
    Series,
    /// Solve for the generatrix graph r = f(p, z), optionally reconstructing the field.
    Solve {
        /// Reconstruct the velocity field with this r spacing.
        #[arg(long)]
        field_step: Option<f64>,
        /// Radial range of the field grid, as LO,HI.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        r_range: Option<(f64, f64)>,
        /// z window of the field grid, as LO,HI.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        z_window: Option<(f64, f64)>,
        /// Pressure window kept in the field, as LO,HI.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        p_window: Option<(f64, f64)>,
    },
    /// The periodic example: nine generatrices with velocity glyphs.
    Fig1 {
        /// Upper end of the search for the loss of curvature at the stations.
        #[arg(long, default_value_t = 1.5)]
        pc_search: f64,
    },
    /// Isobars around the pressure minimum.
    Fig2,
    /// Sample the three-dimensional flow generated by the Taylor data.
    Torus {
        /// Half extent of the Cartesian box in x and y.
        #[arg(long, default_value_t = 1.4)]
        extent: f64,
        /// Half height of the box.
        #[arg(long, default_value_t = 0.6)]
        height: f64,
    },
    /// Localize a flow with a smooth pressure bump and sample it.
    Localize {
        #[arg(long, value_enum, default_value_t = FlowKind::Even)]
        flow: FlowKind,
        /// Number of rotating coordinate pairs of the explicit examples.
        #[arg(long, default_value_t = 1)]
        n_half: usize,
        /// Axial speed of the odd-dimensional example.
        #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
        a: f64,
        /// Bump centre in pressure.
        #[arg(long, allow_negative_numbers = true)]
        p0: Option<f64>,
        /// Bump half width in pressure.
        #[arg(long)]
        delta: Option<f64>,
        /// Bump band in ψ for the torus flow, as LO,HI.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        psi_band: Option<(f64, f64)>,
        /// Half extent of the sampling box.
        #[arg(long, default_value_t = 1.5)]
        extent: f64,
    },
    /// Section integral of the localized torus flow over a tilted plane.
    PlaneSection {
        /// Height of the plane on the axis.
        #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
        z0: f64,
        /// Tilt of the plane normal from the axis, in degrees.
        #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
        tilt: f64,
        /// ψ of the isobar whose section is integrated.
        #[arg(long, default_value_t = 0.09)]
        psi_level: f64,
        /// Bump band in ψ, as LO,HI.
        #[arg(long, value_parser = parse_pair, default_value = "0.01,0.12", allow_hyphen_values = true)]
        psi_band: (f64, f64),
        /// In-plane direction ξ.
        #[arg(long, value_enum, default_value_t = Direction::E1)]
        xi: Direction,
        /// Grid points per side of the plane grid.
        #[arg(long, default_value_t = 201)]
        n: usize,
        /// Half extent of the plane grid.
        #[arg(long, default_value_t = 1.4)]
        extent: f64,
        /// Also run the grid refined this many times (n → 2n − 1).
        #[arg(long, default_value_t = 0)]
        refine: usize,
    },
    /// Residual report for field CSV files, with slopes across successive files.
    Verify {
        /// Field files, coarsest first; each should halve the step of the previous one.
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Render a generatrix or isoline CSV as SVG.
    Plot { file: PathBuf },
}

/// "LO,HI" as a pair of numbers.
fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got {s:?}"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    let pair = (num(a)?, num(b)?);
    if !(pair.0 < pair.1) {
        return Err(format!("expected LO < HI, got {s:?}"));
    }
    Ok(pair)
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("GAVRIFLOW_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("GAVRIFLOW_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(format!("cannot configure {n} worker threads: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    let ctx = Context::new(cli.global)?;
    match cli.command {
        Command::Profiles { p_range, series } => commands::basic::profiles(&ctx, p_range, series),
        Command::Series => commands::basic::series(&ctx),
        Command::Solve { field_step, r_range, z_window, p_window } => {
            commands::basic::solve(&ctx, field_step, r_range, z_window, p_window)
        }
        Command::Fig1 { pc_search } => commands::figures::fig1(&ctx, pc_search),
        Command::Fig2 => commands::figures::fig2(&ctx),
        Command::Plot { file } => commands::figures::plot(&ctx, &file),
        Command::Torus { extent, height } => commands::flows::torus(&ctx, extent, height),
        Command::Localize { flow, n_half, a, p0, delta, psi_band, extent } => {
            let opts = commands::flows::LocalizeOptions { flow, n_half, a, p0, delta, psi_band, extent };
            commands::flows::localize(&ctx, &opts)
        }
        Command::PlaneSection { z0, tilt, psi_level, psi_band, xi, n, extent, refine } => {
            let opts = commands::flows::SectionOptions { z0, tilt, psi_level, psi_band, xi, n, extent, refine };
            commands::flows::plane_section(&ctx, &opts)
        }
        Command::Verify { files } => commands::verify::verify(&ctx, &files),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gavriflow: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
