//! Monte Carlo volume of the cooperative basin and bisection scans of the
//! basin boundary in the three-strategy prism.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::dynamics::{classify_with_targets, ClassifyOpts, Outcome, Targets};
use crate::error::DomainError;
use crate::model::{BuyerMix, GameParams, PopulationState};

pub const DEFAULT_SAMPLES: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StateSpace {
    /// Buy, Disc and NoBuy buyers (AntiDisc absent).
    ThreeStrategy,
    FourStrategy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasinEstimate {
    pub volume: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub n_cooperative: usize,
    pub n_unclassified: usize,
    pub seed: u64,
    pub space: StateSpace,
}

/// Uniform draw from the state space: a flat Dirichlet buyer mix and an
/// independent uniform seller fraction.
pub fn sample_state<R: Rng + ?Sized>(rng: &mut R, space: StateSpace) -> PopulationState {
    let mut y = [0.0f64; 4];
    loop {
        for (i, v) in y.iter_mut().enumerate() {
            *v = if space == StateSpace::ThreeStrategy && i == 2 {
                0.0
            } else {
                rng.sample(Exp1)
            };
        }
        if y.iter().sum::<f64>() > 0.0 {
            break;
        }
    }
    let mix = BuyerMix::project(y).expect("positive weights");
    PopulationState {
        mix,
        x: rng.random::<f64>(),
    }
}

/// Generator for sample `index` of a run seeded with `seed`; independent of
/// how samples are distributed over workers.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn classify_indexed(
    p: &GameParams,
    targets: &Targets,
    space: StateSpace,
    seed: u64,
    opts: &ClassifyOpts,
    i: usize,
) -> Outcome {
    let s0 = sample_state(&mut sample_rng(seed, i as u64), space);
    classify_with_targets(p, targets, &s0, opts)
}

fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

pub fn basin_volume(
    p: &GameParams,
    space: StateSpace,
    n_samples: usize,
    seed: u64,
    opts: &ClassifyOpts,
) -> Result<BasinEstimate, DomainError> {
    if n_samples == 0 {
        return Err(DomainError::Option("n_samples must be at least 1".into()));
    }
    opts.integration.validate()?;
    let targets = Targets::new(p);
    let outcomes = map_indices(n_samples, |i| classify_indexed(p, &targets, space, seed, opts, i));
    let n_cooperative = outcomes.iter().filter(|o| **o == Outcome::Cooperative).count();
    let n_uncooperative = outcomes.iter().filter(|o| **o == Outcome::Uncooperative).count();
    let classified = n_cooperative + n_uncooperative;
    let (volume, stderr) = if classified == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let v = n_cooperative as f64 / classified as f64;
        (v, (v * (1.0 - v) / classified as f64).sqrt())
    };
    Ok(BasinEstimate {
        volume,
        stderr,
        n_samples,
        n_cooperative,
        n_unclassified: n_samples - classified,
        seed,
        space,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanOpts {
    /// Evenly spaced seller fractions probed along each fiber.
    pub probes: usize,
    /// Width of the final bracket around the boundary.
    pub x_tol: f64,
    pub classify: ClassifyOpts,
}

impl Default for ScanOpts {
    fn default() -> Self {
        Self {
            probes: 16,
            x_tol: 1e-3,
            classify: ClassifyOpts::default(),
        }
    }
}

/// What a fiber `{(y1, y2, 0, y4, x) : 0 < x < 1}` looks like.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FiberStatus {
    /// Uncooperative below `x`, cooperative above.
    Boundary { x: f64 },
    AllCooperative,
    AllUncooperative,
    /// Outcomes along the fiber are not ordered Uncooperative → Cooperative.
    NonMonotone,
    /// Some probe did not reach either attractor.
    Unclassified,
}

impl FiberStatus {
    pub fn boundary_x(&self) -> Option<f64> {
        match self {
            FiberStatus::Boundary { x } => Some(*x),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            FiberStatus::Boundary { .. } => "boundary",
            FiberStatus::AllCooperative => "all_cooperative",
            FiberStatus::AllUncooperative => "all_uncooperative",
            FiberStatus::NonMonotone => "non_monotone",
            FiberStatus::Unclassified => "unclassified",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryCell {
    pub y1: f64,
    pub y2: f64,
    pub y4: f64,
    pub status: FiberStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryScan {
    pub resolution: usize,
    pub cells: Vec<BoundaryCell>,
}

impl BoundaryScan {
    pub fn boundary_values(&self) -> Vec<f64> {
        self.cells.iter().filter_map(|c| c.status.boundary_x()).collect()
    }
}

/// Centroids of the upward triangles of a `resolution`-fold subdivision
/// of the (Buy, Disc, NoBuy) triangle.
pub fn scan_cells(resolution: usize) -> Vec<[f64; 3]> {
    let n = resolution as f64;
    let mut out = Vec::with_capacity(resolution * (resolution + 1) / 2);
    for i in 0..resolution {
        for j in 0..resolution - i {
            let k = resolution - 1 - i - j;
            out.push([
                (i as f64 + 1.0 / 3.0) / n,
                (j as f64 + 1.0 / 3.0) / n,
                (k as f64 + 1.0 / 3.0) / n,
            ]);
        }
    }
    out
}

fn scan_fiber(p: &GameParams, targets: &Targets, y: [f64; 3], opts: &ScanOpts) -> FiberStatus {
    let mix = BuyerMix::project([y[0], y[1], 0.0, y[2]]).expect("interior point");
    let classify = |x: f64| classify_with_targets(p, targets, &PopulationState { mix, x }, &opts.classify);
    let m = opts.probes;
    let xs: Vec<f64> = (0..m).map(|k| (k as f64 + 0.5) / m as f64).collect();
    let outcomes: Vec<Outcome> = xs.iter().map(|&x| classify(x)).collect();
    if outcomes.iter().any(|o| matches!(o, Outcome::Unclassified(_))) {
        return FiberStatus::Unclassified;
    }
    let first_coop = match outcomes.iter().position(|o| *o == Outcome::Cooperative) {
        None => return FiberStatus::AllUncooperative,
        Some(0) => {
            return if outcomes.iter().all(|o| *o == Outcome::Cooperative) {
                FiberStatus::AllCooperative
            } else {
                FiberStatus::NonMonotone
            }
        }
        Some(k) => k,
    };
    if outcomes[first_coop..].iter().any(|o| *o != Outcome::Cooperative) {
        return FiberStatus::NonMonotone;
    }
    let (mut lo, mut hi) = (xs[first_coop - 1], xs[first_coop]);
    while hi - lo > opts.x_tol {
        let mid = 0.5 * (lo + hi);
        match classify(mid) {
            Outcome::Cooperative => hi = mid,
            Outcome::Uncooperative => lo = mid,
            Outcome::Unclassified(_) => return FiberStatus::Unclassified,
        }
    }
    FiberStatus::Boundary { x: 0.5 * (lo + hi) }
}

pub fn boundary_scan(
    p: &GameParams,
    resolution: usize,
    opts: &ScanOpts,
) -> Result<BoundaryScan, DomainError> {
    if resolution < 2 {
        return Err(DomainError::Option("resolution must be at least 2".into()));
    }
    if opts.probes < 2 || !(opts.x_tol > 0.0) {
        return Err(DomainError::Option("scan needs at least 2 probes and x_tol > 0".into()));
    }
    opts.classify.integration.validate()?;
    let targets = Targets::new(p);
    let cells = scan_cells(resolution);
    let status = map_indices(cells.len(), |i| scan_fiber(p, &targets, cells[i], opts));
    Ok(BoundaryScan {
        resolution,
        cells: cells
            .iter()
            .zip(status)
            .map(|(y, status)| BoundaryCell {
                y1: y[0],
                y2: y[1],
                y4: y[2],
                status,
            })
            .collect(),
    })
}
