use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod error;
mod output;

use config::ConfigFile;
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "trustgame", version, about = "Trust game with seller reputation: equilibria, dynamics, basins and market simulation")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Seller error rate
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// Buyer assignment error rate
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Benefit-to-price ratio
    #[arg(long, global = true)]
    pub r: Option<f64>,
    /// Weight of image scoring in the reputation norm
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write output here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// key = value file; flags override its entries
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ClassifyArgs {
    /// Integration time limit for classification
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Distance at which a state counts as converged
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Eps,
    Theta,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Three,
    Four,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodArg {
    Adaptive,
    Rk4,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitArg {
    Half,
    AllG,
    AllB,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderArg {
    Shuffled,
    Sequential,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Equilibria and stability at one parameter point (JSON)
    Equilibrium {
        #[arg(long)]
        singular_tol: Option<f64>,
    },
    /// Buy share at the cooperative equilibrium over a 2-d grid (CSV)
    Y1starGrid {
        /// First grid axis; the other parameter is held at its flag value
        #[arg(long, value_enum)]
        axis: Option<Axis>,
        #[arg(long)]
        axis_min: Option<f64>,
        #[arg(long)]
        axis_max: Option<f64>,
        #[arg(long)]
        axis_steps: Option<usize>,
        #[arg(long)]
        r_min: Option<f64>,
        #[arg(long)]
        r_max: Option<f64>,
        #[arg(long)]
        r_steps: Option<usize>,
    },
    /// Critical benefit ratio as a function of theta (CSV)
    ThresholdCurve {
        #[arg(long)]
        theta_min: Option<f64>,
        #[arg(long)]
        theta_max: Option<f64>,
        #[arg(long)]
        theta_steps: Option<usize>,
    },
    /// Integrate the replicator dynamics from one initial state (CSV)
    Trajectory {
        /// Buyer mix y1,y2,y3,y4 (Buy, Disc, AntiDisc, NoBuy)
        #[arg(long, value_delimiter = ',')]
        y: Option<Vec<f64>>,
        /// Fraction of cooperating sellers
        #[arg(long)]
        x: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        /// Output interval; every accepted step if omitted
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// Step size for rk4
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        rtol: Option<f64>,
        #[arg(long)]
        atol: Option<f64>,
        /// Seller adaptation rate relative to buyers
        #[arg(long)]
        seller_rate: Option<f64>,
    },
    /// Monte Carlo volume of the cooperative basin, at a point or over an (r, theta) grid (CSV)
    Basin {
        #[arg(long, value_enum)]
        space: Option<Space>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        r_min: Option<f64>,
        #[arg(long)]
        r_max: Option<f64>,
        #[arg(long)]
        r_steps: Option<usize>,
        #[arg(long)]
        theta_min: Option<f64>,
        #[arg(long)]
        theta_max: Option<f64>,
        #[arg(long)]
        theta_steps: Option<usize>,
        #[command(flatten)]
        classify: ClassifyArgs,
    },
    /// Basin boundary along seller-fraction fibers of the three-strategy prism (CSV)
    BoundaryScan {
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        probes: Option<usize>,
        #[arg(long)]
        x_tol: Option<f64>,
        #[command(flatten)]
        classify: ClassifyArgs,
    },
    /// Agent-based market compared with the closed forms (JSON)
    Oracle {
        #[arg(long)]
        buyers: Option<usize>,
        #[arg(long)]
        sellers: Option<usize>,
        /// Scored games per seller
        #[arg(long)]
        rounds: Option<usize>,
        /// Unscored rounds before scoring; defaults to --rounds
        #[arg(long)]
        warmup: Option<usize>,
        /// Buyer mix y1,y2,y3,y4; defaults to the cooperative equilibrium
        #[arg(long, value_delimiter = ',')]
        mix: Option<Vec<f64>>,
        #[arg(long)]
        x: Option<f64>,
        #[arg(long, value_enum)]
        init: Option<InitArg>,
        #[arg(long, value_enum)]
        order: Option<OrderArg>,
        /// Also rerun from all-G and all-B reputations and compare
        #[arg(long)]
        burnin: bool,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.common.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let ctx = commands::Context::new(&cli.common, cfg)?;
    let text = match cli.command {
        Command::Equilibrium { singular_tol } => commands::equilibrium(&ctx, singular_tol)?,
        Command::Y1starGrid {
            axis,
            axis_min,
            axis_max,
            axis_steps,
            r_min,
            r_max,
            r_steps,
        } => commands::y1star_grid(&ctx, axis, [axis_min, axis_max], axis_steps, [r_min, r_max], r_steps)?,
        Command::ThresholdCurve {
            theta_min,
            theta_max,
            theta_steps,
        } => commands::threshold_curve(&ctx, [theta_min, theta_max], theta_steps)?,
        Command::Trajectory {
            y,
            x,
            horizon,
            dt,
            method,
            step,
            rtol,
            atol,
            seller_rate,
        } => commands::trajectory(
            &ctx,
            commands::TrajectoryArgs {
                y,
                x,
                horizon,
                dt,
                method,
                step,
                rtol,
                atol,
                seller_rate,
            },
        )?,
        Command::Basin {
            space,
            samples,
            r_min,
            r_max,
            r_steps,
            theta_min,
            theta_max,
            theta_steps,
            classify,
        } => commands::basin(
            &ctx,
            space,
            samples,
            ([r_min, r_max], r_steps),
            ([theta_min, theta_max], theta_steps),
            &classify,
        )?,
        Command::BoundaryScan {
            resolution,
            probes,
            x_tol,
            classify,
        } => commands::boundary_scan(&ctx, resolution, probes, x_tol, &classify)?,
        Command::Oracle {
            buyers,
            sellers,
            rounds,
            warmup,
            mix,
            x,
            init,
            order,
            burnin,
        } => commands::oracle(
            &ctx,
            commands::OracleArgs {
                buyers,
                sellers,
                rounds,
                warmup,
                mix,
                x,
                init,
                order,
                burnin,
            },
        )?,
    };
    output::emit(ctx.out.as_deref(), &text.body)?;
    match text.failure {
        Some(msg) => Err(CliError::Numerical(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("trustgame: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
