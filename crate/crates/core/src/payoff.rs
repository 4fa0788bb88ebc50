//! Closed-form mean-field payoffs.
//!
//! A seller's public reputation follows a two-state Markov chain whose
//! stationary distribution gives the long-run fraction of games the seller
//! spends as G. Averaging the per-game payoffs over that distribution gives
//! the buyer and seller payoffs used by the equilibrium and dynamics modules.

use serde::Serialize;

use crate::model::{
    mean_buy_probs, scoring_weights, strategy_probs, BuyProbs, BuyerStrategy, GameParams,
    PopulationState,
};

/// Stationary probability of holding a G reputation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReputationStats {
    pub rho_c: f64,
    pub rho_d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SellerType {
    C,
    D,
}

/// Row-stochastic transition matrix over `[G, B]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionMatrix(pub [[f64; 2]; 2]);

impl TransitionMatrix {
    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.0[from][to]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SellerPayoffs {
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PayoffProfile {
    /// Indexed like [`BuyerStrategy::ALL`].
    pub buyer: [f64; 4],
    pub seller_c: f64,
    pub seller_d: f64,
    pub buyer_mean: f64,
}

// Denominators of the C-seller and D-seller stationary distributions.
#[inline]
fn denominators(p: &GameParams, bp: &BuyProbs) -> (f64, f64) {
    let w = scoring_weights(p);
    let mu = p.mu();
    (
        mu * bp.bg + (1.0 - mu) * bp.bb,
        w.c1 * bp.bg + w.c2 * bp.bb,
    )
}

pub fn stationary_reputations(p: &GameParams, bp: &BuyProbs) -> ReputationStats {
    let w = scoring_weights(p);
    let (den_c, den_d) = denominators(p, bp);
    ReputationStats {
        rho_c: (1.0 - p.mu()) * bp.bb / den_c,
        rho_d: w.c2 * bp.bb / den_d,
    }
}

/// One-game transition matrix of a seller's reputation.
///
/// A seller keeps its state when the matched buyer does not buy; after a
/// purchase a C seller is assigned G with probability `1 - mu`, a D seller
/// with probability `c2`.
pub fn reputation_transition_matrix(
    p: &GameParams,
    bp: &BuyProbs,
    seller: SellerType,
) -> TransitionMatrix {
    let (to_g, to_b) = match seller {
        SellerType::C => (1.0 - p.mu(), p.mu()),
        SellerType::D => {
            let w = scoring_weights(p);
            (w.c2, w.c1)
        }
    };
    TransitionMatrix([
        [to_g * bp.bg + (1.0 - bp.bg), to_b * bp.bg],
        [to_g * bp.bb, to_b * bp.bb + (1.0 - bp.bb)],
    ])
}

/// Coefficients `(a, b)` such that a buyer buying with probabilities
/// `(bG, bB)` earns `a·bG + b·bB`.
#[inline]
pub fn buyer_payoff_coefficients(p: &GameParams, x: f64, bp: &BuyProbs) -> (f64, f64) {
    let w = scoring_weights(p);
    let (mu, r) = (p.mu(), p.r());
    let (den_c, den_d) = denominators(p, bp);
    let gain = r * x / den_c;
    let loss = (1.0 - x) / den_d;
    (
        gain * (1.0 - mu) * bp.bb - loss * w.c2 * bp.bb,
        gain * mu * bp.bg - loss * w.c1 * bp.bg,
    )
}

pub fn buyer_payoff(p: &GameParams, x: f64, bp: &BuyProbs, s: BuyerStrategy) -> f64 {
    let (a, b) = buyer_payoff_coefficients(p, x, bp);
    let (bg, bb) = strategy_probs(s, p.eps());
    a * bg + b * bb
}

pub fn seller_payoffs(p: &GameParams, bp: &BuyProbs) -> SellerPayoffs {
    let (den_c, den_d) = denominators(p, bp);
    let prod = bp.bg * bp.bb;
    SellerPayoffs {
        c: p.r() * prod / den_c,
        d: prod / den_d,
    }
}

pub fn payoff_profile(p: &GameParams, state: &PopulationState) -> PayoffProfile {
    let bp = mean_buy_probs(&state.mix, p.eps());
    let (a, b) = buyer_payoff_coefficients(p, state.x, &bp);
    let buyer = BuyerStrategy::ALL.map(|s| {
        let (bg, bb) = strategy_probs(s, p.eps());
        a * bg + b * bb
    });
    let buyer_mean = buyer
        .iter()
        .zip(state.mix.fractions())
        .map(|(pay, y)| pay * y)
        .sum();
    let sp = seller_payoffs(p, &bp);
    PayoffProfile {
        buyer,
        seller_c: sp.c,
        seller_d: sp.d,
        buyer_mean,
    }
}
