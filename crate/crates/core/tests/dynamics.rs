use proptest::prelude::*;

use trustgame::dynamics::{
    classify_limit, integrate, replicator_rhs, replicator_rhs_with_rate, ClassifyOpts, IntegrationOpts,
    Outcome,
};
use trustgame::equilibrium::{cooperative_equilibrium, uncooperative_equilibrium};
use trustgame::payoff::payoff_profile;
use trustgame::{BuyerMix, BuyerStrategy, GameParams, PopulationState};

fn base() -> GameParams {
    GameParams::new(0.02, 0.1, 0.15, 1.0).unwrap()
}

fn params() -> impl Strategy<Value = GameParams> {
    (1e-3..0.45f64, 1e-3..0.45f64, 1e-2..0.99f64, 0.0..=1.0f64)
        .prop_map(|(mu, eps, r, theta)| GameParams::new(mu, eps, r, theta).unwrap())
}

fn interior_state() -> impl Strategy<Value = PopulationState> {
    (prop::array::uniform4(0.01..1.0f64), 0.01..0.99f64)
        .prop_map(|(y, x)| PopulationState::new(BuyerMix::project(y).unwrap(), x).unwrap())
}

#[test]
fn rhs_is_the_replicator_equation() {
    let p = GameParams::new(0.07, 0.2, 0.55, 0.4).unwrap();
    let s = PopulationState::new(BuyerMix::new([0.1, 0.4, 0.2, 0.3]).unwrap(), 0.35).unwrap();
    let prof = payoff_profile(&p, &s);
    let d = replicator_rhs(&p, &s);
    for st in BuyerStrategy::ALL {
        let i = st.index();
        let expected = s.mix.get(st) * (prof.buyer[i] - prof.buyer_mean);
        assert!((d.dy[i] - expected).abs() < 1e-14);
    }
    let expected_dx = s.x * (1.0 - s.x) * (prof.seller_c - prof.seller_d);
    assert!((d.dx - expected_dx).abs() < 1e-14);
}

#[test]
fn base_point_has_both_outcomes() {
    let p = base();
    let o = ClassifyOpts::default();
    let mostly_disc = BuyerMix::new([0.1, 0.8, 0.0, 0.1]).unwrap();
    let hi = PopulationState::new(mostly_disc, 0.95).unwrap();
    let lo = PopulationState::new(BuyerMix::new([0.1, 0.1, 0.0, 0.8]).unwrap(), 0.05).unwrap();
    assert_eq!(classify_limit(&p, &hi, &o), Outcome::Cooperative);
    assert_eq!(classify_limit(&p, &lo, &o), Outcome::Uncooperative);
}

#[test]
fn buy_corner_with_honest_sellers_is_not_a_trap() {
    // all buyers unconditional and all sellers cooperative is unstable to
    // defection; trajectories passing close to it must still be classified
    let p = GameParams::new(0.02, 0.1, 0.6, 1.0).unwrap();
    let s = PopulationState::new(BuyerMix::new([0.186, 0.065, 0.507, 0.242]).unwrap(), 0.284).unwrap();
    let o = classify_limit(&p, &s, &ClassifyOpts::default());
    assert!(matches!(o, Outcome::Cooperative | Outcome::Uncooperative), "{o:?}");
}

#[test]
fn seller_rate_does_not_change_the_limit() {
    let p = base();
    let s = PopulationState::new(BuyerMix::new([0.1, 0.8, 0.0, 0.1]).unwrap(), 0.9).unwrap();
    for rate in [0.5, 1.0, 2.0] {
        let opts = ClassifyOpts {
            integration: IntegrationOpts {
                seller_rate: rate,
                ..Default::default()
            },
            ..Default::default()
        };
        assert_eq!(classify_limit(&p, &s, &opts), Outcome::Cooperative);
    }
}

#[test]
fn trajectory_stays_on_the_state_space() {
    let p = GameParams::new(0.05, 0.1, 0.5, 0.8).unwrap();
    let s = PopulationState::new(BuyerMix::uniform(), 0.5).unwrap();
    let tr = integrate(&p, &s, 500.0, &IntegrationOpts::default()).unwrap();
    assert!(tr.max_simplex_drift < 1e-9);
    for st in &tr.states {
        assert!(st.mix.fractions().iter().all(|v| *v >= 0.0));
        assert!((st.mix.fractions().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&st.x));
    }
}

#[test]
fn rejects_bad_options() {
    let p = base();
    let s = uncooperative_equilibrium();
    assert!(integrate(&p, &s, -1.0, &IntegrationOpts::default()).is_err());
    let bad = IntegrationOpts {
        rtol: 0.0,
        ..Default::default()
    };
    assert!(integrate(&p, &s, 1.0, &bad).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn faces_are_invariant(p in params(), s in interior_state(), k in 0usize..4) {
        let mut y = *s.mix.fractions();
        y[k] = 0.0;
        let s0 = PopulationState::new(BuyerMix::project(y).unwrap(), s.x).unwrap();
        let tr = integrate(&p, &s0, 50.0, &IntegrationOpts::default()).unwrap();
        prop_assert!(tr.states.iter().all(|st| st.mix.fractions()[k] == 0.0));
        for x in [0.0, 1.0] {
            let s1 = PopulationState { x, ..s0 };
            let tr = integrate(&p, &s1, 50.0, &IntegrationOpts::default()).unwrap();
            prop_assert!(tr.states.iter().all(|st| st.x == x));
        }
    }

    #[test]
    fn seller_drift_sign_ignores_x(p in params(), s in interior_state(), x2 in 0.01..0.99f64) {
        let a = replicator_rhs(&p, &s).dx;
        let b = replicator_rhs(&p, &PopulationState { x: x2, ..s }).dx;
        prop_assert!(a.signum() == b.signum() || a.abs() < 1e-15 || b.abs() < 1e-15);
    }

    #[test]
    fn rate_scales_only_the_seller_equation(p in params(), s in interior_state(), rate in 0.1..10.0f64) {
        let a = replicator_rhs(&p, &s);
        let b = replicator_rhs_with_rate(&p, &s, rate);
        prop_assert_eq!(a.dy, b.dy);
        prop_assert!((b.dx - rate * a.dx).abs() <= 1e-14 * (rate * a.dx).abs());
    }

    #[test]
    fn integration_is_deterministic(p in params(), s in interior_state()) {
        let a = integrate(&p, &s, 20.0, &IntegrationOpts::default()).unwrap();
        let b = integrate(&p, &s, 20.0, &IntegrationOpts::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn no_image_scorers_means_sellers_defect(mu in 1e-3..0.45f64, eps in 1e-3..0.45f64, r in 1e-2..0.99f64, s in interior_state()) {
        let p = GameParams::new(mu, eps, r, 0.0).unwrap();
        prop_assert!(replicator_rhs(&p, &s).dx < 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn small_kicks_return_to_the_cooperative_point(
        kick in prop::array::uniform4(-1.0..1.0f64),
        kx in -1.0..1.0f64,
    ) {
        let p = GameParams::new(0.02, 0.1, 0.5, 1.0).unwrap();
        let eq = cooperative_equilibrium(&p).unwrap();
        let y = [eq.y1 + 1e-3 * kick[0], eq.y2 + 1e-3 * kick[1], 1e-3 * kick[2].abs(), 1e-3 * kick[3].abs()];
        let s = PopulationState::new(BuyerMix::project(y).unwrap(), eq.x + 1e-3 * kx).unwrap();
        prop_assert_eq!(classify_limit(&p, &s, &ClassifyOpts::default()), Outcome::Cooperative);
    }

    #[test]
    fn small_kicks_return_to_the_uncooperative_point(kick in prop::array::uniform4(0.0..1.0f64), kx in 0.0..1.0f64) {
        let p = GameParams::new(0.02, 0.1, 0.5, 1.0).unwrap();
        let y = [1e-3 * kick[0], 1e-3 * kick[1], 1e-3 * kick[2], 1.0];
        let s = PopulationState::new(BuyerMix::project(y).unwrap(), 1e-3 * kx).unwrap();
        prop_assert_eq!(classify_limit(&p, &s, &ClassifyOpts::default()), Outcome::Uncooperative);
    }
}
