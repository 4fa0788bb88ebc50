//! Finite-population market simulation.
//!
//! Sellers carry a public binary reputation. Every round each seller is
//! matched with a uniformly random buyer, who buys with the probability
//! its strategy assigns to the seller's current reputation. After a
//! purchase the buyer re-scores the seller according to its norm, with
//! assignment errors. Long-run per-game payoffs and reputation fractions
//! are compared against the closed forms in [`crate::payoff`].

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::DomainError;
use crate::model::{mean_buy_probs, strategy_probs, BuyerMix, BuyerStrategy, GameParams, PopulationState};
use crate::payoff::{payoff_profile, stationary_reputations};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InitialReputation {
    /// Independent fair coin per seller.
    Half,
    AllG,
    AllB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MatchOrder {
    /// Fresh uniformly random seller order every round.
    Shuffled,
    /// Sellers always play in index order.
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarketConfig {
    pub n_buyers: usize,
    pub n_sellers: usize,
    /// Scored games per seller.
    pub t_rounds: usize,
    /// Unscored rounds played before scoring starts, so that reported
    /// averages are not dominated by the initial reputations.
    pub warmup_rounds: usize,
    pub params: GameParams,
    pub mix: BuyerMix,
    pub x: f64,
    pub seed: u64,
    pub init: InitialReputation,
    pub order: MatchOrder,
}

impl MarketConfig {
    pub fn new(
        n_buyers: usize,
        n_sellers: usize,
        t_rounds: usize,
        params: GameParams,
        mix: BuyerMix,
        x: f64,
        seed: u64,
    ) -> Result<Self, DomainError> {
        let cfg = Self {
            n_buyers,
            n_sellers,
            t_rounds,
            warmup_rounds: t_rounds,
            params,
            mix,
            x,
            seed,
            init: InitialReputation::Half,
            order: MatchOrder::Shuffled,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if self.n_buyers == 0 || self.n_sellers == 0 || self.t_rounds == 0 {
            return Err(DomainError::Option(
                "buyer, seller and round counts must be at least 1".into(),
            ));
        }
        PopulationState::new(self.mix, self.x)?;
        Ok(())
    }

    /// Repeated buyer–seller pairs stop being negligible once `T` is no
    /// longer small against the number of buyers.
    pub fn regime_warning(&self) -> bool {
        self.t_rounds * 10 >= self.n_buyers
    }
}

/// Mean with its standard error, over `n` agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalReport {
    /// Payoff per game participated, by buyer strategy; `None` when no
    /// buyer of that strategy played.
    pub buyer: [Option<Estimate>; 4],
    /// Payoff per game played.
    pub seller_c: Option<Estimate>,
    pub seller_d: Option<Estimate>,
    /// Share of scored games in which the seller held a G reputation,
    /// averaged over sellers of each type.
    pub rho_c: Option<Estimate>,
    pub rho_d: Option<Estimate>,
    /// Fraction of sellers holding a G reputation at the end of the run.
    pub rho_c_final: Option<Estimate>,
    pub rho_d_final: Option<Estimate>,
    /// Composition actually simulated after rounding to whole agents.
    pub realized_mix: [f64; 4],
    pub realized_x: f64,
    pub regime_warning: bool,
}

/// Largest-remainder rounding of `weights · n` to whole counts summing to `n`.
fn allocate(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut left = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

struct Buyer {
    strategy: BuyerStrategy,
    image_scorer: bool,
    bg: f64,
    bb: f64,
}

fn mean_and_se(values: &[f64]) -> Option<Estimate> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        f64::NAN
    };
    Some(Estimate { mean, stderr, n })
}

/// Ratio estimate `Σ payoff / Σ games` over independent units, with a
/// delta-method standard error for sampling stratified by `strata`.
fn ratio_estimate(payoffs: &[f64], games: &[f64], strata: &[std::ops::Range<usize>]) -> Option<Estimate> {
    let (sp, sg): (f64, f64) = (payoffs.iter().sum(), games.iter().sum());
    if sg == 0.0 {
        return None;
    }
    let mean = sp / sg;
    let mut var = 0.0;
    for range in strata {
        let n = range.len();
        if n < 2 {
            continue;
        }
        let resid: Vec<f64> = range.clone().map(|i| payoffs[i] - mean * games[i]).collect();
        let m = resid.iter().sum::<f64>() / n as f64;
        let ss: f64 = resid.iter().map(|e| (e - m).powi(2)).sum();
        var += ss * n as f64 / (n - 1) as f64;
    }
    Some(Estimate {
        mean,
        stderr: var.sqrt() / sg,
        n: payoffs.len(),
    })
}

fn proportion(hits: usize, n: usize) -> Option<Estimate> {
    (n > 0).then(|| {
        let m = hits as f64 / n as f64;
        Estimate {
            mean: m,
            stderr: (m * (1.0 - m) / n as f64).sqrt(),
            n,
        }
    })
}

pub fn simulate_market(cfg: &MarketConfig) -> Result<EmpiricalReport, DomainError> {
    cfg.validate()?;
    let p = &cfg.params;
    let (mu, eps, r) = (p.mu(), p.eps(), p.r());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let strategy_counts = allocate(cfg.n_buyers, cfg.mix.fractions());
    let mut buyers = Vec::with_capacity(cfg.n_buyers);
    for (s, &count) in BuyerStrategy::ALL.iter().zip(&strategy_counts) {
        let n_image = allocate(count, &[p.theta(), 1.0 - p.theta()])[0];
        let (bg, bb) = strategy_probs(*s, eps);
        for k in 0..count {
            buyers.push(Buyer {
                strategy: *s,
                image_scorer: k < n_image,
                bg,
                bb,
            });
        }
    }
    // C sellers occupy indices 0..n_c.
    let n_c = allocate(cfg.n_sellers, &[cfg.x, 1.0 - cfg.x])[0];
    let cooperator: Vec<bool> = (0..cfg.n_sellers).map(|i| i < n_c).collect();
    let mut good: Vec<bool> = (0..cfg.n_sellers)
        .map(|_| match cfg.init {
            InitialReputation::Half => rng.random::<bool>(),
            InitialReputation::AllG => true,
            InitialReputation::AllB => false,
        })
        .collect();

    // Buyer payoffs are accumulated per seller: sellers' reputation chains
    // are independent of each other, buyers sharing a seller are not.
    let mut pay_by_seller = vec![[0.0f64; 4]; cfg.n_sellers];
    let mut games_by_seller = vec![[0.0f64; 4]; cfg.n_sellers];
    let mut seller_pay = vec![0.0f64; cfg.n_sellers];
    let mut good_rounds = vec![0usize; cfg.n_sellers];
    let mut order: Vec<usize> = (0..cfg.n_sellers).collect();

    for round in 0..cfg.warmup_rounds + cfg.t_rounds {
        let scored = round >= cfg.warmup_rounds;
        if cfg.order == MatchOrder::Shuffled {
            order.shuffle(&mut rng);
        }
        for &s in &order {
            let buyer = &buyers[rng.random_range(0..cfg.n_buyers)];
            let k = buyer.strategy.index();
            if scored {
                games_by_seller[s][k] += 1.0;
                good_rounds[s] += good[s] as usize;
            }
            let prob = if good[s] { buyer.bg } else { buyer.bb };
            if rng.random::<f64>() >= prob {
                continue;
            }
            let shipped = cooperator[s];
            if scored {
                let (to_buyer, to_seller) = if shipped { (r, r) } else { (-1.0, 1.0) };
                pay_by_seller[s][k] += to_buyer;
                seller_pay[s] += to_seller;
            }
            let intended_good = !buyer.image_scorer || shipped;
            let mistaken = rng.random::<f64>() < mu;
            good[s] = intended_good != mistaken;
        }
    }

    let t = cfg.t_rounds as f64;
    let n_d = cfg.n_sellers - n_c;
    let strata = [(0..n_c), (n_c..cfg.n_sellers)];
    let buyer = BuyerStrategy::ALL.map(|st| {
        let k = st.index();
        let pay: Vec<f64> = pay_by_seller.iter().map(|v| v[k]).collect();
        let games: Vec<f64> = games_by_seller.iter().map(|v| v[k]).collect();
        ratio_estimate(&pay, &games, &strata).map(|e| Estimate {
            n: strategy_counts[k],
            ..e
        })
    });
    let per_seller = |range: std::ops::Range<usize>, v: &dyn Fn(usize) -> f64| -> Vec<f64> {
        range.map(v).collect()
    };
    let payoff = |i: usize| seller_pay[i] / t;
    let good_share = |i: usize| good_rounds[i] as f64 / t;
    let good_count = |range: std::ops::Range<usize>| range.filter(|&i| good[i]).count();
    Ok(EmpiricalReport {
        buyer,
        seller_c: mean_and_se(&per_seller(0..n_c, &payoff)),
        seller_d: mean_and_se(&per_seller(n_c..cfg.n_sellers, &payoff)),
        rho_c: mean_and_se(&per_seller(0..n_c, &good_share)),
        rho_d: mean_and_se(&per_seller(n_c..cfg.n_sellers, &good_share)),
        rho_c_final: proportion(good_count(0..n_c), n_c),
        rho_d_final: proportion(good_count(n_c..cfg.n_sellers), n_d),
        realized_mix: std::array::from_fn(|i| strategy_counts[i] as f64 / cfg.n_buyers as f64),
        realized_x: n_c as f64 / cfg.n_sellers as f64,
        regime_warning: cfg.regime_warning(),
    })
}

/// Runs the same market twice from two reputation initializations, on
/// independent random streams.
pub fn reputation_burnin_check(
    cfg: &MarketConfig,
    first: InitialReputation,
    second: InitialReputation,
) -> Result<(EmpiricalReport, EmpiricalReport), DomainError> {
    let a = MarketConfig { init: first, ..*cfg };
    let b = MarketConfig {
        init: second,
        seed: cfg.seed ^ 0x9E37_79B9_7F4A_7C15,
        ..*cfg
    };
    Ok((simulate_market(&a)?, simulate_market(&b)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub quantity: String,
    pub empirical: f64,
    pub stderr: f64,
    pub analytic: f64,
    pub z: f64,
}

impl Comparison {
    fn new(quantity: impl Into<String>, est: &Estimate, analytic: f64) -> Self {
        let diff = est.mean - analytic;
        let z = if diff == 0.0 { 0.0 } else { diff / est.stderr };
        Self {
            quantity: quantity.into(),
            empirical: est.mean,
            stderr: est.stderr,
            analytic,
            z,
        }
    }
}

/// Side-by-side comparison with the closed forms, evaluated at the
/// composition that was actually simulated.
pub fn compare_with_closed_form(params: &GameParams, report: &EmpiricalReport) -> Vec<Comparison> {
    let mix = BuyerMix::project(report.realized_mix).expect("at least one buyer");
    let state = PopulationState { mix, x: report.realized_x };
    let profile = payoff_profile(params, &state);
    let rep = stationary_reputations(params, &mean_buy_probs(&mix, params.eps()));
    let mut out = Vec::new();
    for s in BuyerStrategy::ALL {
        if let Some(est) = &report.buyer[s.index()] {
            out.push(Comparison::new(format!("buyer_{}", s.name()), est, profile.buyer[s.index()]));
        }
    }
    let rows = [
        ("seller_C", &report.seller_c, profile.seller_c),
        ("seller_D", &report.seller_d, profile.seller_d),
        ("rho_C", &report.rho_c, rep.rho_c),
        ("rho_D", &report.rho_d, rep.rho_d),
    ];
    for (name, est, analytic) in rows {
        if let Some(est) = est {
            out.push(Comparison::new(name, est, analytic));
        }
    }
    out
}

/// `|a − b| / sqrt(se_a² + se_b²)` for each estimate present in both runs.
pub fn agreement_z(a: &EmpiricalReport, b: &EmpiricalReport) -> Vec<(String, f64)> {
    let pairs = BuyerStrategy::ALL
        .iter()
        .map(|s| (format!("buyer_{}", s.name()), a.buyer[s.index()], b.buyer[s.index()]))
        .chain([
            ("seller_C".to_string(), a.seller_c, b.seller_c),
            ("seller_D".to_string(), a.seller_d, b.seller_d),
        ]);
    pairs
        .filter_map(|(name, x, y)| {
            let (x, y) = (x?, y?);
            let se = (x.stderr.powi(2) + y.stderr.powi(2)).sqrt();
            let d = (x.mean - y.mean).abs();
            Some((name, if d == 0.0 { 0.0 } else { d / se }))
        })
        .collect()
}
