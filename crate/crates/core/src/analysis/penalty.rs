//! Laser power needed so every detector still sees its sensitivity.
//!
//! At a launch power `P` (mW per input port) a port receives signal `g·P`
//! and crosstalk `c·P`, where `g` and `c` are measured at the reference
//! launch. Requiring the signal to clear the sensitivity plus the
//! crosstalk, `g·P ≥ S + c·P`, gives `P = S / (g − c)`; in dB that is
//! `S_PD + IL − 10·log10(1 − c/g)`. The port is infeasible when `c ≥ g`:
//! crosstalk then grows as fast as the signal and no launch power helps.

use serde::Serialize;

use super::stats::{port_statistics, Quantity};
use crate::error::{Error, Result};
use crate::numerics::{db_to_power, dbm_to_mw, mw_to_dbm};
use crate::propagation::{NetworkSpec, PropagationResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyMode {
    /// Phase-averaged crosstalk power, ports averaged in mW.
    Average,
    /// All leaked fields aligned, worst port.
    Worst,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PenaltyComponents {
    pub il_db: Vec<f64>,
    /// Crosstalk power at the reference launch (dBm).
    pub xp_dbm: Vec<f64>,
    /// Gain needed to undo the Σ normalization, summed over layers.
    pub sigma_deficit_db: f64,
    pub sensitivity_dbm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PenaltyReport {
    pub mode: PenaltyMode,
    /// Per-port laser power (dBm per input); `+inf` where infeasible.
    pub per_port_penalty_dbm: Vec<f64>,
    pub infeasible: Vec<bool>,
    pub avg_dbm: f64,
    pub worst_dbm: f64,
    pub components: PenaltyComponents,
}

/// Closed-form minimal launch power for one port.
pub fn required_launch_dbm(sensitivity_dbm: f64, il_db: f64, xt_ratio: f64) -> f64 {
    if !(xt_ratio < 1.0) {
        return f64::INFINITY;
    }
    sensitivity_dbm + il_db - 10.0 * (1.0 - xt_ratio).log10()
}

/// Crosstalk power per port under `mode`, at the result's launch (mW).
fn crosstalk_mw(result: &PropagationResult, mode: PenaltyMode) -> Vec<f64> {
    match mode {
        PenaltyMode::Average => result.xp_mw(),
        PenaltyMode::Worst => result
            .port_amplitudes()
            .iter()
            .map(|a| a.iter().sum::<f64>().powi(2))
            .collect(),
    }
}

pub fn power_penalty(spec: &NetworkSpec, result: &PropagationResult, mode: PenaltyMode) -> Result<PenaltyReport> {
    let n = result.signal.len();
    if n == 0 {
        return Err(Error::Empty("propagation result"));
    }
    let launch_mw = dbm_to_mw(spec.input_power_dbm);
    let xt = crosstalk_mw(result, mode);
    let mut per_port = Vec::with_capacity(n);
    let mut infeasible = Vec::with_capacity(n);
    for k in 0..n {
        let il = result.per_port_il_db[k];
        let g = db_to_power(il);
        let ratio = if g > 0.0 { xt[k] / launch_mw / g } else { f64::INFINITY };
        let p = required_launch_dbm(spec.photodetector_sensitivity_dbm, il, ratio);
        infeasible.push(!p.is_finite());
        per_port.push(p);
    }
    let (avg_dbm, worst_dbm) = port_statistics(&per_port, Quantity::PowerDbm)?;
    Ok(PenaltyReport {
        mode,
        per_port_penalty_dbm: per_port,
        infeasible,
        avg_dbm,
        worst_dbm,
        components: PenaltyComponents {
            il_db: result.per_port_il_db.clone(),
            xp_dbm: xt.into_iter().map(mw_to_dbm).collect(),
            sigma_deficit_db: spec.total_sigma_deficit_db(),
            sensitivity_dbm: spec.photodetector_sensitivity_dbm,
        },
    })
}
