//! Evolutionary analysis of the buyer–seller trust game in which sellers
//! carry a public reputation assigned by buyers.
//!
//! * [`model`]: parameters, strategies, aggregate buy probabilities
//! * [`payoff`]: stationary reputations and closed-form payoffs
//! * [`equilibrium`]: uncooperative, cooperative and singular equilibria
//! * [`dynamics`]: replicator vector field, integrator, limit classification
//! * [`basin`]: Monte Carlo basin volumes and boundary scans
//! * [`oracle`]: agent-based market simulation

pub mod basin;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod model;
pub mod oracle;
pub mod payoff;

pub use error::{DomainError, DynamicsError};
pub use model::{
    mean_buy_probs, scoring_weights, strategy_probs, validate_params, BuyProbs, BuyerMix,
    BuyerStrategy, GameParams, PopulationState, ScoringWeights,
};
