//! Two-population replicator dynamics, an embedded Runge–Kutta integrator
//! and classification of where a trajectory ends up.

use serde::Serialize;

use crate::equilibrium::{cooperative_equilibrium, uncooperative_equilibrium};
use crate::error::{DomainError, DynamicsError};
use crate::model::{scoring_weights, BuyerMix, BuyerStrategy, GameParams, PopulationState};

/// Time derivative of a population state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Derivative {
    pub dy: [f64; 4],
    pub dx: f64,
}

impl Derivative {
    pub fn max_abs(&self) -> f64 {
        self.dy.iter().fold(self.dx.abs(), |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UnclassifiedReason {
    Timeout,
    StepFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Cooperative,
    Uncooperative,
    Unclassified(UnclassifiedReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Method {
    /// Dormand–Prince 5(4) with error control.
    Adaptive,
    /// Classical fourth-order Runge–Kutta with a constant step.
    FixedRk4 { step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationOpts {
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Seller adaptation rate relative to the buyers'.
    pub seller_rate: f64,
    /// Record states at multiples of this interval; `None` records every
    /// accepted step.
    pub output_interval: Option<f64>,
}

impl Default for IntegrationOpts {
    fn default() -> Self {
        Self {
            method: Method::Adaptive,
            rtol: 1e-8,
            atol: 1e-10,
            h_init: 1e-2,
            h_min: 1e-12,
            h_max: 100.0,
            seller_rate: 1.0,
            output_interval: None,
        }
    }
}

impl IntegrationOpts {
    pub fn validate(&self) -> Result<(), DomainError> {
        let bad = |m: &str| Err(DomainError::Option(m.to_string()));
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.h_min > 0.0 && self.h_init >= self.h_min && self.h_max >= self.h_init) {
            return bad("step bounds must satisfy 0 < h_min <= h_init <= h_max");
        }
        if !(self.seller_rate > 0.0 && self.seller_rate.is_finite()) {
            return bad("seller_rate must be positive");
        }
        if let Method::FixedRk4 { step } = self.method {
            if !(step > 0.0 && step.is_finite()) {
                return bad("fixed step must be positive");
            }
        }
        if let Some(dt) = self.output_interval {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad("output interval must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifyOpts {
    /// Max-norm distance at which a state counts as having reached an attractor.
    pub tol: f64,
    pub t_max: f64,
    pub integration: IntegrationOpts,
}

impl Default for ClassifyOpts {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            t_max: 1e5,
            integration: IntegrationOpts::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PopulationState>,
    pub outcome: Outcome,
    /// Largest `|Σ yᵢ − 1|` seen on an accepted step before re-projection.
    pub max_simplex_drift: f64,
}

/// Vector field with the parameter-only quantities precomputed.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Field {
    mu: f64,
    eps: f64,
    r: f64,
    c1: f64,
    c2: f64,
    seller_rate: f64,
}

impl Field {
    pub(crate) fn new(p: &GameParams, seller_rate: f64) -> Self {
        let w = scoring_weights(p);
        Self {
            mu: p.mu(),
            eps: p.eps(),
            r: p.r(),
            c1: w.c1,
            c2: w.c2,
            seller_rate,
        }
    }

    /// `s` is `[y1, y2, y3, y4, x, 1 - x]`; carrying `1 - x` separately keeps
    /// its precision when `x` is within rounding of 1.
    #[inline]
    pub(crate) fn eval(&self, s: &[f64; 6]) -> [f64; 6] {
        let (eps, hi) = (self.eps, 1.0 - self.eps);
        let [y1, y2, y3, y4, x, z] = *s;
        let bg = hi * (y1 + y2) + eps * (y3 + y4);
        let bb = hi * (y1 + y3) + eps * (y2 + y4);
        let den_c = self.mu * bg + (1.0 - self.mu) * bb;
        let den_d = self.c1 * bg + self.c2 * bb;
        let gain = self.r * x / den_c;
        let loss = z / den_d;
        // buyer payoff = a·bG + b·bB
        let a = (gain * (1.0 - self.mu) - loss * self.c2) * bb;
        let b = (gain * self.mu - loss * self.c1) * bg;
        let pay = [a * hi + b * hi, a * hi + b * eps, a * eps + b * hi, a * eps + b * eps];
        let mean = y1 * pay[0] + y2 * pay[1] + y3 * pay[2] + y4 * pay[3];
        let dx = self.seller_rate * x * z * bg * bb * (self.r / den_c - 1.0 / den_d);
        [
            y1 * (pay[0] - mean),
            y2 * (pay[1] - mean),
            y3 * (pay[2] - mean),
            y4 * (pay[3] - mean),
            dx,
            -dx,
        ]
    }
}

pub fn replicator_rhs(p: &GameParams, s: &PopulationState) -> Derivative {
    replicator_rhs_with_rate(p, s, 1.0)
}

pub fn replicator_rhs_with_rate(p: &GameParams, s: &PopulationState, seller_rate: f64) -> Derivative {
    let d = Field::new(p, seller_rate).eval(&extend(&s.to_array()));
    Derivative {
        dy: [d[0], d[1], d[2], d[3]],
        dx: d[4],
    }
}

#[inline]
fn extend(s: &[f64; 5]) -> [f64; 6] {
    [s[0], s[1], s[2], s[3], s[4], 1.0 - s[4]]
}

#[inline]
fn axpy(s: &[f64; 6], h: f64, terms: &[(f64, &[f64; 6])]) -> [f64; 6] {
    let mut out = *s;
    for (c, k) in terms {
        for i in 0..6 {
            out[i] += h * c * k[i];
        }
    }
    out
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Stepper state shared by [`integrate`] and [`classify_limit`].
struct Stepper<'a> {
    field: Field,
    opts: &'a IntegrationOpts,
    t: f64,
    s: [f64; 6],
    h: f64,
    max_drift: f64,
}

impl<'a> Stepper<'a> {
    fn new(p: &GameParams, s0: &PopulationState, opts: &'a IntegrationOpts) -> Self {
        let h = match opts.method {
            Method::Adaptive => opts.h_init,
            Method::FixedRk4 { step } => step,
        };
        Self {
            field: Field::new(p, opts.seller_rate),
            opts,
            t: 0.0,
            s: extend(&s0.to_array()),
            h,
            max_drift: 0.0,
        }
    }

    /// Advances by one accepted step no longer than `limit`.
    fn step(&mut self, limit: f64) -> Result<(), DynamicsError> {
        match self.opts.method {
            Method::FixedRk4 { step } => {
                let h = step.min(limit);
                let f = &self.field;
                let k1 = f.eval(&self.s);
                let k2 = f.eval(&axpy(&self.s, h, &[(0.5, &k1)]));
                let k3 = f.eval(&axpy(&self.s, h, &[(0.5, &k2)]));
                let k4 = f.eval(&axpy(&self.s, h, &[(1.0, &k3)]));
                let next = axpy(
                    &self.s,
                    h,
                    &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)],
                );
                if next.iter().any(|v| !v.is_finite()) {
                    return Err(DynamicsError::NonFinite { t: self.t, step });
                }
                self.accept(h, next);
                Ok(())
            }
            Method::Adaptive => loop {
                let h = self.h.min(limit);
                let (next, err) = self.dopri(h);
                if err <= 1.0 {
                    self.accept(h, next);
                    let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    // Only a step shortened by `limit` keeps the old proposal.
                    if h == self.h || h * grow > self.h {
                        self.h = (h * grow).min(self.opts.h_max);
                    }
                    return Ok(());
                }
                let shrink = (0.9 * err.powf(-0.25)).clamp(0.1, 0.9);
                self.h = h * shrink;
                if self.h < self.opts.h_min {
                    return Err(DynamicsError::StepFailure {
                        t: self.t,
                        h_min: self.opts.h_min,
                    });
                }
            },
        }
    }

    fn dopri(&self, h: f64) -> ([f64; 6], f64) {
        let f = &self.field;
        let s = &self.s;
        let k1 = f.eval(s);
        let k2 = f.eval(&axpy(s, h, &[(A21, &k1)]));
        let k3 = f.eval(&axpy(s, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f.eval(&axpy(s, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f.eval(&axpy(s, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f.eval(&axpy(
            s,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ));
        let next = axpy(s, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f.eval(&next);
        let mut err = 0.0f64;
        for i in 0..6 {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = self.opts.atol + self.opts.rtol * s[i].abs().max(next[i].abs());
            err = err.max((e / scale).abs());
        }
        if !err.is_finite() {
            err = f64::INFINITY;
        }
        (next, err)
    }

    fn accept(&mut self, h: f64, mut next: [f64; 6]) {
        let sum: f64 = next[..4].iter().sum();
        self.max_drift = self.max_drift.max((sum - 1.0).abs());
        project(&mut next);
        self.s = next;
        self.t += h;
    }

    fn state(&self) -> PopulationState {
        PopulationState {
            mix: BuyerMix::project([self.s[0], self.s[1], self.s[2], self.s[3]])
                .unwrap_or(BuyerMix::vertex(BuyerStrategy::NoBuy)),
            x: self.s[4],
        }
    }
}

/// Clamps onto the state space: negative fractions to zero, the buyer mix
/// rescaled to sum to one, `x` into `[0, 1]`. Whichever of `x` and `1 - x`
/// is smaller is kept and the other recomputed from it.
#[inline]
fn project(s: &mut [f64; 6]) {
    let mut sum = 0.0;
    for v in s[..4].iter_mut() {
        if !(*v > 0.0) {
            *v = 0.0;
        }
        sum += *v;
    }
    if sum > 0.0 {
        for v in s[..4].iter_mut() {
            *v /= sum;
        }
    }
    let (x, z) = (s[4].clamp(0.0, 1.0), s[5].clamp(0.0, 1.0));
    if x <= z {
        s[4] = x;
        s[5] = 1.0 - x;
    } else {
        s[4] = 1.0 - z;
        s[5] = z;
    }
}

/// Attractor targets for a parameter set.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Targets {
    coop: Option<[f64; 5]>,
    uncoop: [f64; 5],
}

impl Targets {
    pub(crate) fn new(p: &GameParams) -> Self {
        Self {
            coop: cooperative_equilibrium(p).map(|eq| eq.state().to_array()),
            uncoop: uncooperative_equilibrium().to_array(),
        }
    }

    #[inline]
    fn classify(&self, s: &[f64; 6], tol: f64) -> Option<Outcome> {
        let dist = |t: &[f64; 5]| s[..5].iter().zip(t).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if dist(&self.uncoop) < tol {
            return Some(Outcome::Uncooperative);
        }
        match &self.coop {
            Some(c) if dist(c) < tol => Some(Outcome::Cooperative),
            _ => None,
        }
    }
}

pub fn integrate(
    p: &GameParams,
    s0: &PopulationState,
    horizon: f64,
    opts: &IntegrationOpts,
) -> Result<Trajectory, DynamicsError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(DomainError::Option(format!("horizon must be positive, got {horizon}")).into());
    }
    opts.validate()?;
    let mut st = Stepper::new(p, s0, opts);
    let mut times = vec![0.0];
    let mut states = vec![st.state()];
    let mut next_out = opts.output_interval;
    let mut k = 1u64;
    while st.t < horizon {
        let mut limit = horizon - st.t;
        if let Some(t_out) = next_out {
            limit = limit.min(t_out - st.t);
        }
        st.step(limit)?;
        match (next_out, opts.output_interval) {
            (Some(t_out), Some(dt)) => {
                if st.t >= t_out - 1e-12 * t_out.max(1.0) {
                    st.t = t_out;
                    times.push(st.t);
                    states.push(st.state());
                    k += 1;
                    next_out = Some((k as f64 * dt).min(horizon));
                }
            }
            _ => {
                times.push(st.t);
                states.push(st.state());
            }
        }
        if horizon - st.t <= 1e-12 * horizon {
            break;
        }
    }
    if *times.last().unwrap() < horizon {
        st.t = horizon;
        times.push(horizon);
        states.push(st.state());
    }
    let outcome = Targets::new(p)
        .classify(&st.s, ClassifyOpts::default().tol)
        .unwrap_or(Outcome::Unclassified(UnclassifiedReason::Timeout));
    Ok(Trajectory {
        times,
        states,
        outcome,
        max_simplex_drift: st.max_drift,
    })
}

pub fn classify_limit(p: &GameParams, s0: &PopulationState, opts: &ClassifyOpts) -> Outcome {
    classify_with_targets(p, &Targets::new(p), s0, opts)
}

pub(crate) fn classify_with_targets(
    p: &GameParams,
    targets: &Targets,
    s0: &PopulationState,
    opts: &ClassifyOpts,
) -> Outcome {
    let mut st = Stepper::new(p, s0, &opts.integration);
    loop {
        if let Some(o) = targets.classify(&st.s, opts.tol) {
            return o;
        }
        if st.t >= opts.t_max {
            return Outcome::Unclassified(UnclassifiedReason::Timeout);
        }
        if st.step(f64::INFINITY).is_err() {
            return Outcome::Unclassified(UnclassifiedReason::StepFailure);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::cooperative_equilibrium;

    fn base() -> GameParams {
        GameParams::new(0.02, 0.1, 0.15, 1.0).unwrap()
    }

    fn state(y: [f64; 4], x: f64) -> PopulationState {
        PopulationState::new(BuyerMix::new(y).unwrap(), x).unwrap()
    }

    #[test]
    fn vertices_are_fixed_points() {
        let p = base();
        for s in BuyerStrategy::ALL {
            for x in [0.0, 1.0] {
                let d = replicator_rhs(&p, &PopulationState::new(BuyerMix::vertex(s), x).unwrap());
                assert_eq!(d.max_abs(), 0.0);
            }
        }
    }

    #[test]
    fn cooperative_point_is_fixed() {
        let p = base();
        let eq = cooperative_equilibrium(&p).unwrap();
        assert!(replicator_rhs(&p, &eq.state()).max_abs() < 1e-10);
    }

    #[test]
    fn sellers_defect_without_image_scorers() {
        let p = GameParams::new(0.02, 0.1, 0.9, 0.0).unwrap();
        for y in [[0.25; 4], [0.1, 0.6, 0.1, 0.2], [0.9, 0.05, 0.0, 0.05]] {
            for x in [0.01, 0.5, 0.99] {
                assert!(replicator_rhs(&p, &state(y, x)).dx < 0.0);
            }
        }
    }

    #[test]
    fn derivative_conserves_simplex() {
        let p = GameParams::new(0.13, 0.27, 0.61, 0.42).unwrap();
        let d = replicator_rhs(&p, &state([0.1, 0.2, 0.3, 0.4], 0.37));
        assert!(d.dy.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn uncooperative_vertex_stays_put() {
        let tr = integrate(&base(), &uncooperative_equilibrium(), 50.0, &IntegrationOpts::default()).unwrap();
        assert!(tr.states.iter().all(|s| *s == uncooperative_equilibrium()));
        assert_eq!(tr.outcome, Outcome::Uncooperative);
    }

    #[test]
    fn output_grid_is_respected() {
        let opts = IntegrationOpts {
            output_interval: Some(0.5),
            ..Default::default()
        };
        let tr = integrate(&base(), &state([0.3, 0.3, 0.0, 0.4], 0.8), 3.0, &opts).unwrap();
        assert_eq!(tr.times.len(), 7);
        for (k, t) in tr.times.iter().enumerate() {
            assert!((t - 0.5 * k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_step_matches_adaptive() {
        let p = base();
        let s0 = state([0.3, 0.3, 0.1, 0.3], 0.7);
        let a = integrate(&p, &s0, 20.0, &IntegrationOpts::default()).unwrap();
        let f = integrate(
            &p,
            &s0,
            20.0,
            &IntegrationOpts {
                method: Method::FixedRk4 { step: 0.01 },
                ..Default::default()
            },
        )
        .unwrap();
        assert!(a.states.last().unwrap().distance(f.states.last().unwrap()) < 1e-8);
    }

    #[test]
    fn immediate_classification() {
        let p = base();
        let eq = cooperative_equilibrium(&p).unwrap().state();
        assert_eq!(classify_limit(&p, &eq, &ClassifyOpts::default()), Outcome::Cooperative);
        let opts = ClassifyOpts {
            t_max: 0.0,
            ..Default::default()
        };
        assert_eq!(classify_limit(&p, &uncooperative_equilibrium(), &opts), Outcome::Uncooperative);
    }

    #[test]
    fn step_failure_is_reported() {
        let opts = IntegrationOpts {
            rtol: 1e-300,
            atol: 1e-300,
            h_init: 1e-3,
            h_min: 1e-4,
            ..Default::default()
        };
        let s0 = state([0.3, 0.3, 0.1, 0.3], 0.7);
        let err = integrate(&base(), &s0, 1.0, &opts).unwrap_err();
        assert!(matches!(err, DynamicsError::StepFailure { .. }));
        let c = ClassifyOpts {
            integration: opts,
            ..Default::default()
        };
        assert_eq!(
            classify_limit(&base(), &s0, &c),
            Outcome::Unclassified(UnclassifiedReason::StepFailure)
        );
    }

    #[test]
    fn oversized_fixed_step_is_an_error() {
        let opts = IntegrationOpts {
            method: Method::FixedRk4 { step: 1e308 },
            ..Default::default()
        };
        let s0 = state([0.25; 4], 0.5);
        let err = integrate(&base(), &s0, 1e308, &opts).unwrap_err();
        assert!(matches!(err, DynamicsError::NonFinite { .. }));
    }
}
