//! Browser bindings for the static demo page in `www/`.
//!
//! Each export is a thin wrapper over a plain function in [`demo`] so the
//! numbers can be checked natively.

use wasm_bindgen::prelude::*;

pub mod demo {
    use serde_json::json;
    use trustgame::dynamics::{integrate, IntegrationOpts};
    use trustgame::equilibrium::{
        cooperative_equilibrium, equilibrium_report, existence_threshold_r, threshold_theta,
        DEFAULT_SINGULAR_TOL,
    };
    use trustgame::{BuyerMix, GameParams, PopulationState};

    /// Equilibrium report plus the threshold curve r_crit(theta) on
    /// `curve_points` evenly spaced theta values, as a JSON string.
    pub fn explore(mu: f64, eps: f64, r: f64, theta: f64, curve_points: usize) -> Result<String, String> {
        let p = GameParams::new(mu, eps, r, theta).map_err(|e| e.to_string())?;
        let n = curve_points.max(2);
        let curve: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                [t, existence_threshold_r(mu, eps, t)]
            })
            .collect();
        let doc = json!({
            "report": equilibrium_report(&p, DEFAULT_SINGULAR_TOL),
            "theta_star": threshold_theta(mu, eps, r),
            "curve": curve,
        });
        Ok(doc.to_string())
    }

    /// Rows of `[t, y1, y2, y3, y4, x]` at `points` evenly spaced times,
    /// flattened.
    #[allow(clippy::too_many_arguments)]
    pub fn trajectory(
        mu: f64,
        eps: f64,
        r: f64,
        theta: f64,
        y: [f64; 4],
        x: f64,
        horizon: f64,
        points: usize,
    ) -> Result<Vec<f64>, String> {
        let p = GameParams::new(mu, eps, r, theta).map_err(|e| e.to_string())?;
        let mix = BuyerMix::project(y).ok_or("buyer shares must be non-negative and not all zero")?;
        let s0 = PopulationState::new(mix, x).map_err(|e| e.to_string())?;
        let opts = IntegrationOpts {
            output_interval: Some(horizon / points.max(1) as f64),
            ..Default::default()
        };
        let traj = integrate(&p, &s0, horizon, &opts).map_err(|e| e.to_string())?;
        let mut out = Vec::with_capacity(traj.times.len() * 6);
        for (t, s) in traj.times.iter().zip(&traj.states) {
            out.push(*t);
            out.extend_from_slice(&s.to_array());
        }
        Ok(out)
    }

    /// Buy share at the cooperative equilibrium over a theta × r grid,
    /// row-major with theta varying slowest; 0 where it does not exist.
    /// Both axes run over the open unit interval at cell centres.
    pub fn y1_heatmap(mu: f64, eps: f64, n_theta: usize, n_r: usize) -> Result<Vec<f64>, String> {
        GameParams::new(mu, eps, 0.5, 1.0).map_err(|e| e.to_string())?;
        let centre = |i: usize, n: usize| (i as f64 + 0.5) / n as f64;
        let mut out = Vec::with_capacity(n_theta * n_r);
        for i in 0..n_theta {
            for j in 0..n_r {
                let p = GameParams::new(mu, eps, centre(j, n_r), centre(i, n_theta)).map_err(|e| e.to_string())?;
                out.push(cooperative_equilibrium(&p).map_or(0.0, |e| e.y1));
            }
        }
        Ok(out)
    }
}

fn js_err(msg: String) -> JsError {
    JsError::new(&msg)
}

#[wasm_bindgen]
pub fn explore(mu: f64, eps: f64, r: f64, theta: f64, curve_points: usize) -> Result<String, JsError> {
    demo::explore(mu, eps, r, theta, curve_points).map_err(js_err)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn trajectory(
    mu: f64,
    eps: f64,
    r: f64,
    theta: f64,
    y1: f64,
    y2: f64,
    y3: f64,
    y4: f64,
    x: f64,
    horizon: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    demo::trajectory(mu, eps, r, theta, [y1, y2, y3, y4], x, horizon, points).map_err(js_err)
}

#[wasm_bindgen]
pub fn y1_heatmap(mu: f64, eps: f64, n_theta: usize, n_r: usize) -> Result<Vec<f64>, JsError> {
    demo::y1_heatmap(mu, eps, n_theta, n_r).map_err(js_err)
}
