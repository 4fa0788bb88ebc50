use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;

use trustgame::basin::{basin_volume, boundary_scan as scan, ScanOpts, StateSpace, DEFAULT_SAMPLES};
use trustgame::dynamics::{integrate as run_integrate, ClassifyOpts, IntegrationOpts, Method};
use trustgame::equilibrium::{
    cooperative_equilibrium, equilibrium_report, existence_threshold_r, DEFAULT_SINGULAR_TOL,
};
use trustgame::oracle::{
    agreement_z, compare_with_closed_form, reputation_burnin_check, simulate_market, Comparison,
    EmpiricalReport, InitialReputation, MarketConfig, MatchOrder,
};
use trustgame::{BuyerMix, GameParams, PopulationState};

use crate::config::ConfigFile;
use crate::error::CliError;
use crate::output::{json_document, num, Csv, Metadata};
use crate::{Axis, ClassifyArgs, Common, InitArg, MethodArg, OrderArg, Space};

pub const DEFAULT_MU: f64 = 0.02;
pub const DEFAULT_EPS: f64 = 0.1;
pub const DEFAULT_R: f64 = 0.15;
pub const DEFAULT_THETA: f64 = 1.0;
pub const DEFAULT_SEED: u64 = 1;

pub struct Rendered {
    pub body: String,
    /// Set when output was produced but part of the computation failed.
    pub failure: Option<String>,
}

impl From<String> for Rendered {
    fn from(body: String) -> Self {
        Self { body, failure: None }
    }
}

pub struct Context {
    pub cfg: ConfigFile,
    pub mu: f64,
    pub eps: f64,
    pub r: f64,
    pub theta: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Context {
    pub fn new(common: &Common, cfg: ConfigFile) -> Result<Self, CliError> {
        Ok(Self {
            mu: cfg.pick(common.mu, "mu", DEFAULT_MU)?,
            eps: cfg.pick(common.eps, "eps", DEFAULT_EPS)?,
            r: cfg.pick(common.r, "r", DEFAULT_R)?,
            theta: cfg.pick(common.theta, "theta", DEFAULT_THETA)?,
            seed: cfg.pick(common.seed, "seed", DEFAULT_SEED)?,
            out: cfg.pick_opt(common.out.clone(), "out")?,
            cfg,
        })
    }

    fn params(&self) -> Result<GameParams, CliError> {
        Ok(GameParams::new(self.mu, self.eps, self.r, self.theta)?)
    }

    fn pick<T: std::str::FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        self.cfg.pick(flag, key, default)
    }

    fn pick_opt<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        self.cfg.pick_opt(flag, key)
    }

    fn pick_enum<E: ValueEnum>(&self, flag: Option<E>, key: &str, default: E) -> Result<E, CliError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.cfg.pick_opt::<String>(None, key)? {
            None => Ok(default),
            Some(s) => E::from_str(&s, true).map_err(|_| CliError::Invalid(format!("config key {key}: unknown value {s:?}"))),
        }
    }

    fn pick_list(&self, flag: Option<Vec<f64>>, key: &str) -> Result<Option<[f64; 4]>, CliError> {
        let list = match flag {
            Some(v) => v,
            None => match self.cfg.pick_opt::<String>(None, key)? {
                None => return Ok(None),
                Some(s) => s
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| CliError::Invalid(format!("{key}: expected four comma-separated numbers")))?,
            },
        };
        let arr: [f64; 4] = list
            .try_into()
            .map_err(|_| CliError::Invalid(format!("{key}: expected four comma-separated numbers")))?;
        Ok(Some(arr))
    }

    fn metadata(&self, command: &'static str) -> Metadata {
        Metadata::new(command)
            .with("mu", num(self.mu))
            .with("eps", num(self.eps))
            .with("r", num(self.r))
            .with("theta", num(self.theta))
    }

    fn classify_opts(&self, a: &ClassifyArgs) -> Result<ClassifyOpts, CliError> {
        let d = ClassifyOpts::default();
        let opts = ClassifyOpts {
            tol: self.pick(a.tol, "tol", d.tol)?,
            t_max: self.pick(a.t_max, "t-max", d.t_max)?,
            integration: IntegrationOpts {
                rtol: self.pick(a.rtol, "rtol", d.integration.rtol)?,
                atol: self.pick(a.atol, "atol", d.integration.atol)?,
                ..d.integration
            },
        };
        if !(opts.tol > 0.0 && opts.t_max > 0.0 && opts.t_max.is_finite()) {
            return Err(CliError::Invalid("tol and t-max must be positive".into()));
        }
        opts.integration.validate()?;
        Ok(opts)
    }
}

fn with_classify(meta: Metadata, o: &ClassifyOpts) -> Metadata {
    meta.with("tol", num(o.tol))
        .with("t_max", num(o.t_max))
        .with("rtol", num(o.integration.rtol))
        .with("atol", num(o.integration.atol))
}

/// `steps` evenly spaced values from `min` to `max` inclusive.
pub fn linspace(name: &str, min: f64, max: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if steps == 0 {
        return Err(CliError::Invalid(format!("{name}: steps must be at least 1")));
    }
    if !(min.is_finite() && max.is_finite() && min <= max) {
        return Err(CliError::Invalid(format!("{name}: need finite min <= max, got {min}..{max}")));
    }
    if steps == 1 {
        return Ok(vec![min]);
    }
    let h = (max - min) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| if i == steps - 1 { max } else { min + i as f64 * h })
        .collect())
}

#[derive(Serialize)]
struct EquilibriumDoc {
    report: trustgame::equilibrium::EquilibriumReport,
}

pub fn equilibrium(ctx: &Context, singular_tol: Option<f64>) -> Result<Rendered, CliError> {
    let p = ctx.params()?;
    let tol = ctx.pick(singular_tol, "singular-tol", DEFAULT_SINGULAR_TOL)?;
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(CliError::Invalid("singular-tol must be non-negative".into()));
    }
    let meta = ctx.metadata("equilibrium").with("singular_tol", num(tol));
    let doc = EquilibriumDoc {
        report: equilibrium_report(&p, tol),
    };
    Ok(json_document(&meta, doc)?.into())
}

pub fn y1star_grid(
    ctx: &Context,
    axis: Option<Axis>,
    axis_range: [Option<f64>; 2],
    axis_steps: Option<usize>,
    r_range: [Option<f64>; 2],
    r_steps: Option<usize>,
) -> Result<Rendered, CliError> {
    let axis = ctx.pick_enum(axis, "axis", Axis::Theta)?;
    let (name, lo, hi, n) = match axis {
        Axis::Eps => ("eps", 0.01, 0.49, 49),
        Axis::Theta => ("theta", 0.0, 1.0, 51),
    };
    let a_vals = linspace(
        "axis",
        ctx.pick(axis_range[0], "axis-min", lo)?,
        ctx.pick(axis_range[1], "axis-max", hi)?,
        ctx.pick(axis_steps, "axis-steps", n)?,
    )?;
    let r_vals = linspace(
        "r",
        ctx.pick(r_range[0], "r-min", 0.01)?,
        ctx.pick(r_range[1], "r-max", 0.99)?,
        ctx.pick(r_steps, "r-steps", 99)?,
    )?;
    let mut meta = Metadata::new("y1star-grid")
        .with("axis1", name)
        .with("axis2", "r")
        .with("mu", num(ctx.mu));
    meta = match axis {
        Axis::Eps => meta.with("theta", num(ctx.theta)),
        Axis::Theta => meta.with("eps", num(ctx.eps)),
    };
    let mut csv = Csv::new(&meta, &["axis1", "axis2", "y1_star"]);
    for &a in &a_vals {
        for &r in &r_vals {
            let p = match axis {
                Axis::Eps => GameParams::new(ctx.mu, a, r, ctx.theta)?,
                Axis::Theta => GameParams::new(ctx.mu, ctx.eps, r, a)?,
            };
            let y1 = cooperative_equilibrium(&p).map_or(0.0, |e| e.y1);
            csv.row(&[num(a), num(r), num(y1)]);
        }
    }
    Ok(csv.finish().into())
}

pub fn threshold_curve(
    ctx: &Context,
    range: [Option<f64>; 2],
    steps: Option<usize>,
) -> Result<Rendered, CliError> {
    let thetas = linspace(
        "theta",
        ctx.pick(range[0], "theta-min", 0.0)?,
        ctx.pick(range[1], "theta-max", 1.0)?,
        ctx.pick(steps, "theta-steps", 101)?,
    )?;
    // validate the fixed parameters and every theta through the model
    for &t in &thetas {
        GameParams::new(ctx.mu, ctx.eps, 0.5, t)?;
    }
    let meta = Metadata::new("threshold-curve")
        .with("mu", num(ctx.mu))
        .with("eps", num(ctx.eps));
    let mut csv = Csv::new(&meta, &["theta", "r_crit"]);
    for t in thetas {
        csv.row(&[num(t), num(existence_threshold_r(ctx.mu, ctx.eps, t))]);
    }
    Ok(csv.finish().into())
}

pub struct TrajectoryArgs {
    pub y: Option<Vec<f64>>,
    pub x: Option<f64>,
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    pub method: Option<MethodArg>,
    pub step: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub seller_rate: Option<f64>,
}

pub fn trajectory(ctx: &Context, a: TrajectoryArgs) -> Result<Rendered, CliError> {
    let p = ctx.params()?;
    let y = ctx.pick_list(a.y, "y")?.unwrap_or([0.25; 4]);
    let s0 = PopulationState::new(BuyerMix::new(y)?, ctx.pick(a.x, "x", 0.5)?)?;
    let horizon = ctx.pick(a.horizon, "horizon", 1000.0)?;
    let d = IntegrationOpts::default();
    let method = match ctx.pick_enum(a.method, "method", MethodArg::Adaptive)? {
        MethodArg::Adaptive => Method::Adaptive,
        MethodArg::Rk4 => Method::FixedRk4 {
            step: ctx.pick(a.step, "step", 0.01)?,
        },
    };
    let opts = IntegrationOpts {
        method,
        rtol: ctx.pick(a.rtol, "rtol", d.rtol)?,
        atol: ctx.pick(a.atol, "atol", d.atol)?,
        seller_rate: ctx.pick(a.seller_rate, "seller-rate", d.seller_rate)?,
        output_interval: ctx.pick_opt(a.dt, "dt")?,
        ..d
    };
    let traj = run_integrate(&p, &s0, horizon, &opts)?;
    let mut meta = ctx
        .metadata("trajectory")
        .with("y0", y.map(num).join(" "))
        .with("x0", num(s0.x))
        .with("horizon", num(horizon))
        .with("seller_rate", num(opts.seller_rate));
    meta = match opts.method {
        Method::Adaptive => meta
            .with("method", "adaptive")
            .with("rtol", num(opts.rtol))
            .with("atol", num(opts.atol)),
        Method::FixedRk4 { step } => meta.with("method", "rk4").with("step", num(step)),
    };
    meta = meta.with("outcome", format!("{:?}", traj.outcome));
    let mut csv = Csv::new(&meta, &["t", "y1", "y2", "y3", "y4", "x"]);
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![num(*t)];
        row.extend(s.to_array().iter().map(|v| num(*v)));
        csv.row(&row);
    }
    Ok(csv.finish().into())
}

type Range = ([Option<f64>; 2], Option<usize>);

/// The scalar value unless a step count is given, in which case a grid
/// over `[min, max]` (defaulting to the parameter's whole range).
fn axis_values(ctx: &Context, name: &str, scalar: f64, range: Range, full: (f64, f64)) -> Result<Vec<f64>, CliError> {
    match ctx.pick_opt(range.1, &format!("{name}-steps"))? {
        None => Ok(vec![scalar]),
        Some(steps) => linspace(
            name,
            ctx.pick(range.0[0], &format!("{name}-min"), full.0)?,
            ctx.pick(range.0[1], &format!("{name}-max"), full.1)?,
            steps,
        ),
    }
}

pub fn basin(
    ctx: &Context,
    space: Option<Space>,
    samples: Option<usize>,
    r_range: Range,
    theta_range: Range,
    classify: &ClassifyArgs,
) -> Result<Rendered, CliError> {
    let space = match ctx.pick_enum(space, "space", Space::Three)? {
        Space::Three => StateSpace::ThreeStrategy,
        Space::Four => StateSpace::FourStrategy,
    };
    let n = ctx.pick(samples, "samples", DEFAULT_SAMPLES)?;
    let opts = ctx.classify_opts(classify)?;
    let rs = axis_values(ctx, "r", ctx.r, r_range, (0.1, 0.9))?;
    let thetas = axis_values(ctx, "theta", ctx.theta, theta_range, (0.0, 1.0))?;
    let cells: Vec<GameParams> = rs
        .iter()
        .flat_map(|&r| thetas.iter().map(move |&t| (r, t)))
        .map(|(r, t)| GameParams::new(ctx.mu, ctx.eps, r, t))
        .collect::<Result<_, _>>()?;
    let meta = with_classify(
        Metadata::new("basin")
            .with("mu", num(ctx.mu))
            .with("eps", num(ctx.eps))
            .with("space", format!("{space:?}"))
            .with("samples", n)
            .with("seed", ctx.seed),
        &opts,
    );
    let mut csv = Csv::new(&meta, &["r", "theta", "volume", "stderr", "n_unclassified", "seed"]);
    let mut empty = Vec::new();
    for p in cells {
        let est = basin_volume(&p, space, n, ctx.seed, &opts)?;
        if est.volume.is_nan() {
            empty.push(format!("r={} theta={}", num(p.r()), num(p.theta())));
        }
        csv.row(&[
            num(p.r()),
            num(p.theta()),
            num(est.volume),
            num(est.stderr),
            est.n_unclassified.to_string(),
            est.seed.to_string(),
        ]);
    }
    Ok(Rendered {
        body: csv.finish(),
        failure: (!empty.is_empty()).then(|| format!("no sample classified at {}", empty.join(", "))),
    })
}

pub fn boundary_scan(
    ctx: &Context,
    resolution: Option<usize>,
    probes: Option<usize>,
    x_tol: Option<f64>,
    classify: &ClassifyArgs,
) -> Result<Rendered, CliError> {
    let p = ctx.params()?;
    let d = ScanOpts::default();
    let opts = ScanOpts {
        probes: ctx.pick(probes, "probes", d.probes)?,
        x_tol: ctx.pick(x_tol, "x-tol", d.x_tol)?,
        classify: ctx.classify_opts(classify)?,
    };
    let resolution = ctx.pick(resolution, "resolution", 10)?;
    let result = scan(&p, resolution, &opts)?;
    let meta = with_classify(
        ctx.metadata("boundary-scan")
            .with("resolution", resolution)
            .with("probes", opts.probes)
            .with("x_tol", num(opts.x_tol)),
        &opts.classify,
    );
    let mut csv = Csv::new(&meta, &["y1", "y2", "y4", "boundary_x", "status"]);
    for c in &result.cells {
        csv.row(&[
            num(c.y1),
            num(c.y2),
            num(c.y4),
            c.status.boundary_x().map(num).unwrap_or_default(),
            c.status.label().to_string(),
        ]);
    }
    Ok(csv.finish().into())
}

pub struct OracleArgs {
    pub buyers: Option<usize>,
    pub sellers: Option<usize>,
    pub rounds: Option<usize>,
    pub warmup: Option<usize>,
    pub mix: Option<Vec<f64>>,
    pub x: Option<f64>,
    pub init: Option<InitArg>,
    pub order: Option<OrderArg>,
    pub burnin: bool,
}

#[derive(Serialize)]
struct Agreement {
    quantity: String,
    z: f64,
}

#[derive(Serialize)]
struct Burnin {
    all_g: EmpiricalReport,
    all_b: EmpiricalReport,
    agreement: Vec<Agreement>,
    max_abs_z: f64,
}

#[derive(Serialize)]
struct OracleDoc {
    config: MarketConfig,
    report: EmpiricalReport,
    comparison: Vec<Comparison>,
    max_abs_z: f64,
    regime_warning: bool,
    burnin: Option<Burnin>,
}

fn max_abs(zs: impl Iterator<Item = f64>) -> f64 {
    zs.fold(0.0, |m, z| m.max(z.abs()))
}

pub fn oracle(ctx: &Context, a: OracleArgs) -> Result<Rendered, CliError> {
    let p = ctx.params()?;
    let eq = cooperative_equilibrium(&p).map(|e| e.state());
    let mix = match ctx.pick_list(a.mix, "mix")? {
        Some(y) => BuyerMix::new(y)?,
        None => eq.map_or_else(BuyerMix::uniform, |s| s.mix),
    };
    let x = ctx.pick_opt(a.x, "x")?.or(eq.map(|s| s.x)).unwrap_or(0.5);
    let rounds = ctx.pick(a.rounds, "rounds", 1000)?;
    let mut cfg = MarketConfig::new(
        ctx.pick(a.buyers, "buyers", 1000)?,
        ctx.pick(a.sellers, "sellers", 1000)?,
        rounds,
        p,
        mix,
        x,
        ctx.seed,
    )?;
    cfg.warmup_rounds = ctx.pick(a.warmup, "warmup", rounds)?;
    cfg.init = match ctx.pick_enum(a.init, "init", InitArg::Half)? {
        InitArg::Half => InitialReputation::Half,
        InitArg::AllG => InitialReputation::AllG,
        InitArg::AllB => InitialReputation::AllB,
    };
    cfg.order = match ctx.pick_enum(a.order, "order", OrderArg::Shuffled)? {
        OrderArg::Shuffled => MatchOrder::Shuffled,
        OrderArg::Sequential => MatchOrder::Sequential,
    };
    let burnin_flag = a.burnin || ctx.pick(None, "burnin", false)?;

    let report = simulate_market(&cfg)?;
    let comparison = compare_with_closed_form(&p, &report);
    let burnin = if burnin_flag {
        let (all_g, all_b) = reputation_burnin_check(&cfg, InitialReputation::AllG, InitialReputation::AllB)?;
        let agreement: Vec<Agreement> = agreement_z(&all_g, &all_b)
            .into_iter()
            .map(|(quantity, z)| Agreement { quantity, z })
            .collect();
        Some(Burnin {
            max_abs_z: max_abs(agreement.iter().map(|a| a.z)),
            all_g,
            all_b,
            agreement,
        })
    } else {
        None
    };
    let meta = ctx.metadata("oracle").with("seed", ctx.seed);
    let doc = OracleDoc {
        config: cfg,
        max_abs_z: max_abs(comparison.iter().map(|c| c.z)),
        regime_warning: report.regime_warning,
        report,
        comparison,
        burnin,
    };
    Ok(json_document(&meta, doc)?.into())
}
