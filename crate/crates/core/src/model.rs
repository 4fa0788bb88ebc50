//! Game parameters, buyer strategies and the aggregate buy probabilities
//! shared by every other module.

use serde::Serialize;

use crate::error::DomainError;

/// Tolerance on `Σ yᵢ = 1` when a buyer mix is constructed.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Model parameters.
///
/// * `mu`: assignment-error rate, `0 < mu < 1/2`
/// * `eps`: implementation-error rate, `0 < eps < 1/2`
/// * `r`: payoff of a cooperative transaction, `0 < r < 1`
/// * `theta`: fraction of image scorers, `0 <= theta <= 1`
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GameParams {
    mu: f64,
    eps: f64,
    r: f64,
    theta: f64,
}

impl GameParams {
    pub fn new(mu: f64, eps: f64, r: f64, theta: f64) -> Result<Self, DomainError> {
        for (name, v) in [("mu", mu), ("eps", eps), ("r", r), ("theta", theta)] {
            if !v.is_finite() {
                return Err(DomainError::NotFinite { name });
            }
        }
        if !(mu > 0.0 && mu < 0.5) {
            return Err(DomainError::Mu(mu));
        }
        if !(eps > 0.0 && eps < 0.5) {
            return Err(DomainError::Eps(eps));
        }
        if !(r > 0.0 && r < 1.0) {
            return Err(DomainError::R(r));
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(DomainError::Theta(theta));
        }
        Ok(Self { mu, eps, r, theta })
    }

    #[inline]
    pub fn mu(&self) -> f64 {
        self.mu
    }

    #[inline]
    pub fn eps(&self) -> f64 {
        self.eps
    }

    #[inline]
    pub fn r(&self) -> f64 {
        self.r
    }

    #[inline]
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn with_r(&self, r: f64) -> Result<Self, DomainError> {
        Self::new(self.mu, self.eps, r, self.theta)
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self, DomainError> {
        Self::new(self.mu, self.eps, self.r, theta)
    }
}

/// Checks raw numbers against the parameter domains.
pub fn validate_params(mu: f64, eps: f64, r: f64, theta: f64) -> Result<GameParams, DomainError> {
    GameParams::new(mu, eps, r, theta)
}

/// Buyer strategies, indexed 1..=4 in the usual order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BuyerStrategy {
    Buy,
    Disc,
    AntiDisc,
    NoBuy,
}

impl BuyerStrategy {
    pub const ALL: [BuyerStrategy; 4] = [
        BuyerStrategy::Buy,
        BuyerStrategy::Disc,
        BuyerStrategy::AntiDisc,
        BuyerStrategy::NoBuy,
    ];

    /// Zero-based position in [`BuyerStrategy::ALL`] and in mix vectors.
    #[inline]
    pub fn index(self) -> usize {
        match self {
            BuyerStrategy::Buy => 0,
            BuyerStrategy::Disc => 1,
            BuyerStrategy::AntiDisc => 2,
            BuyerStrategy::NoBuy => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BuyerStrategy::Buy => "Buy",
            BuyerStrategy::Disc => "Disc",
            BuyerStrategy::AntiDisc => "AntiDisc",
            BuyerStrategy::NoBuy => "NoBuy",
        }
    }
}

/// Probabilities `(bG, bB)` of buying from a good and a bad seller.
#[inline]
pub fn strategy_probs(s: BuyerStrategy, eps: f64) -> (f64, f64) {
    let hi = 1.0 - eps;
    match s {
        BuyerStrategy::Buy => (hi, hi),
        BuyerStrategy::Disc => (hi, eps),
        BuyerStrategy::AntiDisc => (eps, hi),
        BuyerStrategy::NoBuy => (eps, eps),
    }
}

/// Fractions of the four buyer strategies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BuyerMix([f64; 4]);

impl BuyerMix {
    /// Accepts `y` if every entry is non-negative and the sum is within
    /// [`SIMPLEX_TOL`] of one; the stored mix is renormalized.
    pub fn new(y: [f64; 4]) -> Result<Self, DomainError> {
        if y.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(DomainError::Mix(y));
        }
        let sum: f64 = y.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(DomainError::Mix(y));
        }
        Ok(Self(y.map(|v| v / sum)))
    }

    pub fn vertex(s: BuyerStrategy) -> Self {
        let mut y = [0.0; 4];
        y[s.index()] = 1.0;
        Self(y)
    }

    pub fn uniform() -> Self {
        Self([0.25; 4])
    }

    /// Clamps negative entries to zero and rescales onto the simplex.
    /// Returns `None` when nothing positive is left.
    pub fn project(y: [f64; 4]) -> Option<Self> {
        let y = y.map(|v| if v.is_finite() && v > 0.0 { v } else { 0.0 });
        let sum: f64 = y.iter().sum();
        (sum > 0.0).then(|| Self(y.map(|v| v / sum)))
    }

    #[inline]
    pub fn fractions(&self) -> &[f64; 4] {
        &self.0
    }

    #[inline]
    pub fn get(&self, s: BuyerStrategy) -> f64 {
        self.0[s.index()]
    }
}

/// Seller cooperator fraction together with the buyer mix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PopulationState {
    pub mix: BuyerMix,
    pub x: f64,
}

impl PopulationState {
    pub fn new(mix: BuyerMix, x: f64) -> Result<Self, DomainError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(DomainError::SellerFraction(x));
        }
        Ok(Self { mix, x })
    }

    /// Packs the state as `[y1, y2, y3, y4, x]`.
    pub fn to_array(&self) -> [f64; 5] {
        let y = self.mix.fractions();
        [y[0], y[1], y[2], y[3], self.x]
    }

    /// Max-norm distance between two states.
    pub fn distance(&self, other: &PopulationState) -> f64 {
        let a = self.to_array();
        let b = other.to_array();
        a.iter()
            .zip(b.iter())
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max)
    }
}

/// Reputation-assignment weights averaged over scorer types.
///
/// `c1` is the probability that a defecting seller is assigned G when it
/// is not assigned B by mistake, `c2 = 1 - c1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoringWeights {
    pub c1: f64,
    pub c2: f64,
}

pub fn scoring_weights(p: &GameParams) -> ScoringWeights {
    let (mu, theta) = (p.mu(), p.theta());
    let c1 = theta * (1.0 - mu) + (1.0 - theta) * mu;
    ScoringWeights { c1, c2: 1.0 - c1 }
}

/// Population-averaged probabilities of buying from a G and a B seller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BuyProbs {
    pub bg: f64,
    pub bb: f64,
}

pub fn mean_buy_probs(mix: &BuyerMix, eps: f64) -> BuyProbs {
    let [y1, y2, y3, y4] = *mix.fractions();
    mean_buy_probs_raw(&[y1, y2, y3, y4], eps)
}

#[inline]
pub(crate) fn mean_buy_probs_raw(y: &[f64; 4], eps: f64) -> BuyProbs {
    let hi = 1.0 - eps;
    BuyProbs {
        bg: hi * (y[0] + y[1]) + eps * (y[2] + y[3]),
        bb: hi * (y[0] + y[2]) + eps * (y[1] + y[3]),
    }
}
