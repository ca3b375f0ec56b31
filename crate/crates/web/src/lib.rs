//! WebAssembly bindings for a static demo page. Every export returns a
//! JSON string; the plain functions underneath are testable natively.

use serde::Serialize;
use spnn_core::analysis::{layer_stats, RandomWeights};
use spnn_core::device::{output_insertion_loss, output_leak_power_mw, MziParams, PhasePair};
use spnn_core::numerics::{mw_to_dbm, Rng};
use spnn_core::propagation::interference_trials;
use wasm_bindgen::prelude::*;

const MAX_PORTS: usize = 32;
const MAX_TRIALS: usize = 200_000;

#[derive(Debug, PartialEq, Serialize)]
pub struct DevicePoint {
    pub theta: f64,
    pub il_o1_db: f64,
    pub il_o2_db: f64,
    pub xp_o1_dbm: f64,
    pub xp_o2_dbm: f64,
}

fn params(alpha_l_db: f64, xb_db: f64, xc_db: f64) -> Result<MziParams, String> {
    let p = MziParams {
        alpha_l_db,
        xb_db,
        xc_db,
        ..MziParams::default()
    };
    p.validate().map_err(|e| e.to_string())?;
    Ok(p)
}

/// Single-MZI IL and mean leak power per output over `points` values of θ.
pub fn device_sweep(
    points: usize,
    alpha_l_db: f64,
    xb_db: f64,
    xc_db: f64,
    seed: u64,
) -> Result<Vec<DevicePoint>, String> {
    if !(2..=1001).contains(&points) {
        return Err("points must lie in [2, 1001]".into());
    }
    let p = params(alpha_l_db, xb_db, xc_db)?;
    let mut rng = Rng::new(seed);
    Ok((0..points)
        .map(|k| {
            let ph = PhasePair::new(std::f64::consts::PI * k as f64 / (points - 1) as f64, 0.0);
            let (il_o1_db, il_o2_db) = output_insertion_loss(&p, ph);
            let (x1, x2) = output_leak_power_mw(&p, ph, 1.0, 2000, &mut rng);
            DevicePoint {
                theta: ph.theta,
                il_o1_db,
                il_o2_db,
                xp_o1_dbm: mw_to_dbm(x1),
                xp_o2_dbm: mw_to_dbm(x2),
            }
        })
        .collect())
}

#[derive(Debug, PartialEq, Serialize)]
pub struct LayerSummary {
    pub n: usize,
    pub il_avg_db: f64,
    pub il_worst_db: f64,
    pub xp_avg_dbm: f64,
    pub xp_worst_dbm: f64,
    /// Per-port median IL (dB).
    pub il_median_db: Vec<f64>,
    /// Per-port mean crosstalk (dBm).
    pub xp_mean_dbm: Vec<f64>,
}

/// Layer statistics over random Gaussian weight matrices at 0 dBm per port.
pub fn layer_summary(
    n: usize,
    matrices: usize,
    trials: usize,
    alpha_l_db: f64,
    seed: u64,
) -> Result<LayerSummary, String> {
    if !(2..=MAX_PORTS).contains(&n) || matrices == 0 || matrices > 500 || trials == 0 || trials > 20_000 {
        return Err(format!(
            "need 2 <= n <= {MAX_PORTS}, 1..=500 matrices, 1..=20000 trials"
        ));
    }
    let p = params(alpha_l_db, MziParams::default().xb_db, MziParams::default().xc_db)?;
    let s = layer_stats(
        n,
        matrices,
        trials,
        &p,
        RandomWeights::RealGaussian,
        0.0,
        &Rng::new(seed),
    )
    .map_err(|e| e.to_string())?;
    Ok(LayerSummary {
        n,
        il_avg_db: s.il_avg_db,
        il_worst_db: s.il_worst_db,
        xp_avg_dbm: s.xp_avg_dbm,
        xp_worst_dbm: s.xp_worst_dbm,
        il_median_db: s.il.iter().map(|q| q.median).collect(),
        xp_mean_dbm: s.xp.iter().map(|q| mw_to_dbm(q.mean)).collect(),
    })
}

#[derive(Debug, PartialEq, Serialize)]
pub struct Interference {
    pub trials: usize,
    pub mean_mw: f64,
    pub min_mw: f64,
    pub max_mw: f64,
    /// Histogram of received power over `[min, max]`.
    pub bins: Vec<usize>,
}

/// Received-power distribution of one port with random leak phases.
pub fn interference(
    signal_mw: f64,
    leaks_mw: &[f64],
    trials: usize,
    bins: usize,
    seed: u64,
) -> Result<Interference, String> {
    if !(signal_mw >= 0.0) || leaks_mw.iter().any(|l| !(*l >= 0.0)) {
        return Err("powers must be finite and >= 0".into());
    }
    if !(1..=MAX_TRIALS).contains(&trials) || !(1..=200).contains(&bins) {
        return Err(format!("need 1..={MAX_TRIALS} trials and 1..=200 bins"));
    }
    let amps: Vec<f64> = leaks_mw.iter().map(|p| p.sqrt()).collect();
    let (received, _) = interference_trials(&amps, signal_mw.sqrt(), trials, &mut Rng::new(seed));
    let min = received.iter().copied().fold(f64::INFINITY, f64::min);
    let max = received.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut hist = vec![0; bins];
    let width = (max - min) / bins as f64;
    for r in &received {
        let k = if width > 0.0 { ((r - min) / width) as usize } else { 0 };
        hist[k.min(bins - 1)] += 1;
    }
    Ok(Interference {
        trials,
        mean_mw: received.iter().sum::<f64>() / trials as f64,
        min_mw: min,
        max_mw: max,
        bins: hist,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.map(|v| serde_json::to_string(&v).expect("plain data serializes"))
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = deviceSweep)]
pub fn device_sweep_js(points: usize, alpha_l_db: f64, xb_db: f64, xc_db: f64, seed: u64) -> Result<String, JsError> {
    to_js(device_sweep(points, alpha_l_db, xb_db, xc_db, seed))
}

#[wasm_bindgen(js_name = layerStats)]
pub fn layer_stats_js(n: usize, matrices: usize, trials: usize, alpha_l_db: f64, seed: u64) -> Result<String, JsError> {
    to_js(layer_summary(n, matrices, trials, alpha_l_db, seed))
}

#[wasm_bindgen(js_name = interference)]
pub fn interference_js(
    signal_mw: f64,
    leaks_mw: Vec<f64>,
    trials: usize,
    bins: usize,
    seed: u64,
) -> Result<String, JsError> {
    to_js(interference(signal_mw, &leaks_mw, trials, bins, seed))
}
