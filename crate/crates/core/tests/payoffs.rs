use proptest::prelude::*;

use trustgame::payoff::{
    buyer_payoff, payoff_profile, reputation_transition_matrix, seller_payoffs, stationary_reputations,
    SellerType,
};
use trustgame::{
    mean_buy_probs, scoring_weights, strategy_probs, BuyProbs, BuyerMix, BuyerStrategy, GameParams,
    PopulationState,
};

fn params() -> impl Strategy<Value = GameParams> {
    (1e-4..0.49f64, 1e-4..0.49f64, 1e-3..0.999f64, 0.0..=1.0f64)
        .prop_map(|(mu, eps, r, theta)| GameParams::new(mu, eps, r, theta).unwrap())
}

fn mix() -> impl Strategy<Value = BuyerMix> {
    prop::array::uniform4(0.0..1.0f64)
        .prop_filter("some mass", |y| y.iter().sum::<f64>() > 1e-3)
        .prop_map(|y| BuyerMix::project(y).unwrap())
}

/// Reputation chain built directly from the game rules: a buyer buys from a
/// G seller with probability `bg`, from a B seller with `bb`, and after a
/// purchase the seller is marked G with probability `to_g`.
fn rule_chain(bp: &BuyProbs, to_g: f64) -> [[f64; 2]; 2] {
    [
        [1.0 - bp.bg + bp.bg * to_g, bp.bg * (1.0 - to_g)],
        [bp.bb * to_g, 1.0 - bp.bb + bp.bb * (1.0 - to_g)],
    ]
}

/// Stationary G-probability by repeated squaring of the chain. Rows are
/// renormalized after each squaring, which otherwise doubles their drift.
fn stationary_by_powers(m: [[f64; 2]; 2]) -> f64 {
    let mut a = m;
    for _ in 0..64 {
        a = [
            [
                a[0][0] * a[0][0] + a[0][1] * a[1][0],
                a[0][0] * a[0][1] + a[0][1] * a[1][1],
            ],
            [
                a[1][0] * a[0][0] + a[1][1] * a[1][0],
                a[1][0] * a[0][1] + a[1][1] * a[1][1],
            ],
        ];
        for row in a.iter_mut() {
            let sum = row[0] + row[1];
            row[0] /= sum;
            row[1] /= sum;
        }
    }
    0.5 * (a[0][0] + a[1][0])
}

/// `(rho_c, rho_d)` from the rules, without any closed form.
fn rule_reputations(p: &GameParams, bp: &BuyProbs) -> (f64, f64) {
    let theta = p.theta();
    let mu = p.mu();
    // image scorers mark a shipping seller G w.p. 1 − μ and a defector w.p. μ;
    // indifferent scorers mark anyone G w.p. 1 − μ
    let c_to_g = 1.0 - mu;
    let d_to_g = theta * mu + (1.0 - theta) * (1.0 - mu);
    (
        stationary_by_powers(rule_chain(bp, c_to_g)),
        stationary_by_powers(rule_chain(bp, d_to_g)),
    )
}

#[test]
fn scoring_weights_limits() {
    let p = GameParams::new(0.02, 0.1, 0.5, 1.0).unwrap();
    let w = scoring_weights(&p);
    assert!((w.c1 - 0.98).abs() < 1e-15 && (w.c2 - 0.02).abs() < 1e-15);
    let w = scoring_weights(&p.with_theta(0.0).unwrap());
    assert!((w.c1 - 0.02).abs() < 1e-15 && (w.c2 - 0.98).abs() < 1e-15);
}

#[test]
fn base_point_reputations_from_the_chain() {
    let p = GameParams::new(0.02, 0.1, 0.15, 1.0).unwrap();
    let mix = BuyerMix::new([0.0212, 0.9788, 0.0, 0.0]).unwrap();
    let bp = mean_buy_probs(&mix, 0.1);
    let rho = stationary_reputations(&p, &bp);
    let (c, d) = rule_reputations(&p, &bp);
    assert!((rho.rho_c - c).abs() < 1e-12);
    assert!((rho.rho_d - d).abs() < 1e-12);
    assert!(rho.rho_c > 0.85 && rho.rho_d < 0.01);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn weights_sum_to_one(p in params()) {
        let w = scoring_weights(&p);
        prop_assert!((w.c1 + w.c2 - 1.0).abs() <= 1e-15);
        prop_assert!(w.c1 >= p.mu() - 1e-15 && w.c1 <= 1.0 - p.mu() + 1e-15);
    }

    #[test]
    fn buy_probs_are_the_mix_average(m in mix(), eps in 1e-4..0.49f64) {
        let bp = mean_buy_probs(&m, eps);
        let (mut bg, mut bb) = (0.0, 0.0);
        for s in BuyerStrategy::ALL {
            let (g, b) = strategy_probs(s, eps);
            bg += m.get(s) * g;
            bb += m.get(s) * b;
        }
        prop_assert!((bp.bg - bg).abs() < 1e-15 && (bp.bb - bb).abs() < 1e-15);
        prop_assert!(bp.bg >= eps - 1e-15 && bp.bg <= 1.0 - eps + 1e-15);
    }

    #[test]
    fn reputations_match_the_rule_chain(p in params(), m in mix()) {
        let bp = mean_buy_probs(&m, p.eps());
        let rho = stationary_reputations(&p, &bp);
        let (c, d) = rule_reputations(&p, &bp);
        prop_assert!((rho.rho_c - c).abs() < 1e-10, "{} vs {}", rho.rho_c, c);
        prop_assert!((rho.rho_d - d).abs() < 1e-10, "{} vs {}", rho.rho_d, d);
    }

    #[test]
    fn library_matrix_is_the_rule_chain(p in params(), m in mix()) {
        let bp = mean_buy_probs(&m, p.eps());
        let w = scoring_weights(&p);
        for (seller, to_g) in [(SellerType::C, 1.0 - p.mu()), (SellerType::D, w.c2)] {
            let lib = reputation_transition_matrix(&p, &bp, seller);
            let rules = rule_chain(&bp, to_g);
            for i in 0..2 {
                prop_assert!((lib.0[i][0] + lib.0[i][1] - 1.0).abs() < 1e-15);
                for j in 0..2 {
                    prop_assert!((lib.get(i, j) - rules[i][j]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn image_scoring_separates_reputations(p in params(), m in mix()) {
        let bp = mean_buy_probs(&m, p.eps());
        let rho = stationary_reputations(&p, &bp);
        prop_assert!((0.0..=1.0).contains(&rho.rho_c) && (0.0..=1.0).contains(&rho.rho_d));
        if p.theta() == 0.0 {
            prop_assert!((rho.rho_c - rho.rho_d).abs() < 1e-14);
        } else if p.theta() > 1e-6 {
            prop_assert!(rho.rho_c > rho.rho_d);
        }
    }

    #[test]
    fn buyer_payoff_from_first_principles(p in params(), m in mix(), x in 0.0..=1.0f64) {
        // a buyer meets a C seller w.p. x; it then buys at bG or bB depending
        // on the seller's reputation and earns r, or loses 1 against a D seller
        let bp = mean_buy_probs(&m, p.eps());
        let (rc, rd) = rule_reputations(&p, &bp);
        for s in BuyerStrategy::ALL {
            let (g, b) = strategy_probs(s, p.eps());
            let expected = x * p.r() * (rc * g + (1.0 - rc) * b) - (1.0 - x) * (rd * g + (1.0 - rd) * b);
            let got = buyer_payoff(&p, x, &bp, s);
            prop_assert!((got - expected).abs() < 1e-10, "{:?}: {} vs {}", s, got, expected);
        }
    }

    #[test]
    fn seller_payoffs_from_first_principles(p in params(), m in mix()) {
        let bp = mean_buy_probs(&m, p.eps());
        let (rc, rd) = rule_reputations(&p, &bp);
        let sp = seller_payoffs(&p, &bp);
        prop_assert!((sp.c - p.r() * (rc * bp.bg + (1.0 - rc) * bp.bb)).abs() < 1e-10);
        prop_assert!((sp.d - (rd * bp.bg + (1.0 - rd) * bp.bb)).abs() < 1e-10);
    }

    #[test]
    fn buyer_payoff_is_affine_in_x(p in params(), m in mix(), x in 0.0..=1.0f64) {
        let bp = mean_buy_probs(&m, p.eps());
        for s in BuyerStrategy::ALL {
            let lo = buyer_payoff(&p, 0.0, &bp, s);
            let hi = buyer_payoff(&p, 1.0, &bp, s);
            let mid = buyer_payoff(&p, x, &bp, s);
            prop_assert!((mid - ((1.0 - x) * lo + x * hi)).abs() < 1e-12);
        }
    }

    #[test]
    fn buyer_payoff_is_linear_in_buy_probs(p in params(), m in mix(), x in 0.0..=1.0f64) {
        // a strategy's payoff only depends on (bG, bB), so the four pure
        // payoffs satisfy P(Buy) + P(NoBuy) = P(Disc) + P(AntiDisc)
        let bp = mean_buy_probs(&m, p.eps());
        let f = |s| buyer_payoff(&p, x, &bp, s);
        let lhs = f(BuyerStrategy::Buy) + f(BuyerStrategy::NoBuy);
        let rhs = f(BuyerStrategy::Disc) + f(BuyerStrategy::AntiDisc);
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn seller_advantage_ignores_x(p in params(), m in mix(), x1 in 0.0..=1.0f64, x2 in 0.0..=1.0f64) {
        let a = payoff_profile(&p, &PopulationState { mix: m, x: x1 });
        let b = payoff_profile(&p, &PopulationState { mix: m, x: x2 });
        prop_assert_eq!(a.seller_c - a.seller_d, b.seller_c - b.seller_d);
    }

    #[test]
    fn mean_buyer_payoff_is_mix_weighted(p in params(), m in mix(), x in 0.0..=1.0f64) {
        let prof = payoff_profile(&p, &PopulationState { mix: m, x });
        let mean: f64 = BuyerStrategy::ALL.iter().map(|s| m.get(*s) * prof.buyer[s.index()]).sum();
        prop_assert!((prof.buyer_mean - mean).abs() < 1e-14);
    }
}
