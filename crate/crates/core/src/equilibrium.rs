//! Location, existence and linear stability of the three equilibrium types.

use serde::Serialize;

use crate::model::{scoring_weights, BuyerMix, BuyerStrategy, GameParams, PopulationState};

/// Default tolerance on the singular-equilibrium residual.
pub const DEFAULT_SINGULAR_TOL: f64 = 1e-9;

/// Interior fixed point mixing Buy and Disc buyers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoopEquilibrium {
    pub y1: f64,
    pub y2: f64,
    pub x: f64,
    /// Mean probability of buying from a B seller at the equilibrium.
    pub bb_star: f64,
}

impl CoopEquilibrium {
    pub fn state(&self) -> PopulationState {
        PopulationState {
            mix: BuyerMix::project([self.y1, self.y2, 0.0, 0.0])
                .expect("y1 + y2 = 1"),
            x: self.x,
        }
    }
}

/// Jacobian of the Buy–Disc face dynamics in `(b̄B, x)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub jacobian: [[f64; 2]; 2],
    pub trace: f64,
    pub det: f64,
    pub stable: bool,
    /// `(1 - mu) / r`
    pub condition_lhs: f64,
    /// `c2`
    pub condition_rhs: f64,
}

impl StabilityReport {
    /// Routh–Hurwitz test on the evaluated Jacobian.
    pub fn trace_det_stable(&self) -> bool {
        self.trace < 0.0 && self.det > 0.0
    }
}

/// Pure Disc buyers with any seller mix in `[x_lo, x_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularEquilibrium {
    pub x_lo: f64,
    pub x_hi: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UncooperativeRecord {
    pub state: PopulationState,
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CooperativeRecord {
    pub equilibrium: CoopEquilibrium,
    pub stability: StabilityReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub params: GameParams,
    pub uncooperative: UncooperativeRecord,
    pub cooperative: Option<CooperativeRecord>,
    pub singular: Option<SingularEquilibrium>,
    pub singular_residual: f64,
    pub r_crit: f64,
}

/// NoBuy buyers facing defecting sellers.
pub fn uncooperative_equilibrium() -> PopulationState {
    PopulationState {
        mix: BuyerMix::vertex(BuyerStrategy::NoBuy),
        x: 0.0,
    }
}

// μ(1−ε) + (1−μ)ε: buy-weighted B-assignment rate of a C seller facing pure Disc.
#[inline]
fn threshold_numerator(mu: f64, eps: f64) -> f64 {
    mu * (1.0 - eps) + (1.0 - mu) * eps
}

#[inline]
fn threshold_denominator(mu: f64, eps: f64, theta: f64) -> f64 {
    let c1 = theta * (1.0 - mu) + (1.0 - theta) * mu;
    let c2 = 1.0 - c1;
    c1 * (1.0 - eps) + c2 * eps
}

/// Critical `r` above which the cooperative equilibrium exists.
pub fn existence_threshold_r(mu: f64, eps: f64, theta: f64) -> f64 {
    threshold_numerator(mu, eps) / threshold_denominator(mu, eps, theta)
}

/// Smallest fraction of image scorers that admits the cooperative
/// equilibrium at payoff `r`; `None` if even `theta = 1` is not enough.
///
/// The denominator of the existence condition is affine in `theta` with
/// slope `(1 - 2mu)(1 - 2eps) > 0`, so the boundary is solved directly.
pub fn threshold_theta(mu: f64, eps: f64, r: f64) -> Option<f64> {
    let num = threshold_numerator(mu, eps);
    let slope = (1.0 - 2.0 * mu) * (1.0 - 2.0 * eps);
    let theta = num * (1.0 - r) / (r * slope);
    (theta < 1.0).then_some(theta.max(0.0))
}

/// The Buy–Disc fixed point regardless of whether it lies inside the
/// simplex. `y1` is outside `[0, 1]` when the equilibrium does not exist.
pub fn buy_disc_fixed_point(p: &GameParams) -> CoopEquilibrium {
    let w = scoring_weights(p);
    let (mu, eps, r) = (p.mu(), p.eps(), p.r());
    let bb_star = (r * w.c1 - mu) * (1.0 - eps) / (1.0 - mu - r * w.c2);
    let y1 = (bb_star - eps) / (1.0 - 2.0 * eps);
    CoopEquilibrium {
        y1,
        y2: 1.0 - y1,
        x: w.c1 / (w.c1 + mu),
        bb_star,
    }
}

pub fn cooperative_exists(p: &GameParams) -> bool {
    p.r() > existence_threshold_r(p.mu(), p.eps(), p.theta())
}

pub fn cooperative_equilibrium(p: &GameParams) -> Option<CoopEquilibrium> {
    if !cooperative_exists(p) {
        return None;
    }
    let eq = buy_disc_fixed_point(p);
    // Rounding right at the boundary can put y1 a hair below zero.
    (eq.y1 >= 0.0 && eq.y1 <= 1.0).then_some(eq)
}

pub fn coop_stability(p: &GameParams, eq: &CoopEquilibrium) -> StabilityReport {
    let w = scoring_weights(p);
    let (mu, eps, r) = (p.mu(), p.eps(), p.r());
    let (c1, c2) = (w.c1, w.c2);
    let (bb, x) = (eq.bb_star, eq.x);

    let den_c = mu * (1.0 - eps) + (1.0 - mu) * bb;
    let den_d = c1 * (1.0 - eps) + c2 * bb;
    let buyer_pref = (bb - eps) * (1.0 - eps) * (1.0 - eps - bb);
    let seller_pref = x * (1.0 - x) * (1.0 - eps) * bb;

    let j11 = buyer_pref
        * (-r * x * mu * (1.0 - mu) / (den_c * den_c) + (1.0 - x) * c1 * c2 / (den_d * den_d));
    let j12 = buyer_pref * (r * mu / den_c + c1 / den_d);
    let j21 = seller_pref * (-r * (1.0 - mu) / (den_c * den_c) + c2 / (den_d * den_d));
    let j22 = 0.0;

    let condition_lhs = (1.0 - mu) / r;
    StabilityReport {
        jacobian: [[j11, j12], [j21, j22]],
        trace: j11 + j22,
        det: j11 * j22 - j12 * j21,
        stable: condition_lhs > c2,
        condition_lhs,
        condition_rhs: c2,
    }
}

/// Distance of the parameters from the singular manifold.
pub fn singular_residual(p: &GameParams) -> f64 {
    let (mu, eps) = (p.mu(), p.eps());
    p.r() / threshold_numerator(mu, eps) - 1.0 / threshold_denominator(mu, eps, p.theta())
}

pub fn singular_equilibrium(p: &GameParams, tol: f64) -> Option<SingularEquilibrium> {
    let residual = singular_residual(p);
    if residual.abs() > tol {
        return None;
    }
    let w = scoring_weights(p);
    let mu = p.mu();
    Some(SingularEquilibrium {
        x_lo: w.c2 / (1.0 - mu + w.c2),
        x_hi: w.c1 / (mu + w.c1),
        residual,
    })
}

pub fn equilibrium_report(p: &GameParams, singular_tol: f64) -> EquilibriumReport {
    let cooperative = cooperative_equilibrium(p).map(|eq| CooperativeRecord {
        equilibrium: eq,
        stability: coop_stability(p, &eq),
    });
    EquilibriumReport {
        params: *p,
        uncooperative: UncooperativeRecord {
            state: uncooperative_equilibrium(),
            strict: true,
        },
        cooperative,
        singular: singular_equilibrium(p, singular_tol),
        singular_residual: singular_residual(p),
        r_crit: existence_threshold_r(p.mu(), p.eps(), p.theta()),
    }
}
