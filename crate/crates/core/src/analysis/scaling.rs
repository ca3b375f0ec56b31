//! Layer- and network-level loss/crosstalk statistics over ensembles of
//! random weight matrices.

use serde::{Deserialize, Serialize};

use super::penalty::{power_penalty, PenaltyMode};
use super::stats::{port_statistics, Quantity};
use crate::device::MziParams;
use crate::error::{Error, Result};
use crate::mesh::{compile_layer, LayerLayout};
use crate::numerics::{mw_to_dbm, random_gaussian_matrix, ComplexMatrix, Rng, C64};
use crate::propagation::{
    interference_trials, layer_metrics, network_cascade, uniform_launch, CrosstalkDraw, NetworkDraw, NetworkSpec,
    PortSamples,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomWeights {
    /// i.i.d. real N(0, 1) entries.
    #[default]
    RealGaussian,
    /// i.i.d. complex entries with N(0, 1/2) real and imaginary parts.
    ComplexGaussian,
}

impl RandomWeights {
    pub fn sample(self, n: usize, rng: &mut Rng) -> ComplexMatrix {
        match self {
            Self::RealGaussian => random_gaussian_matrix(n, rng),
            Self::ComplexGaussian => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                ComplexMatrix::from_fn(n, n, |_, _| {
                    C64::new(rng.standard_normal() * s, rng.standard_normal() * s)
                })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerStats {
    pub n: usize,
    pub matrices: usize,
    pub trials: usize,
    /// Per output port, over matrices (dB, OIU only).
    pub il: Vec<PortSamples>,
    pub il_avg_db: f64,
    pub il_worst_db: f64,
    /// Per output port, resolved crosstalk power over matrices and phase
    /// trials (mW).
    pub xp: Vec<PortSamples>,
    /// Phase-averaged crosstalk, ports and matrices averaged in mW.
    pub xp_avg_dbm: f64,
    /// All leaks of the worst port in phase.
    pub xp_worst_dbm: f64,
    /// Largest crosstalk power seen in any phase trial.
    pub xp_trial_max_dbm: f64,
    pub sigma_deficit_avg_db: f64,
}

/// Single-layer study without gain or NAU loss at `launch_dbm` per port.
pub fn layer_stats(
    n: usize,
    matrices: usize,
    trials: usize,
    p: &MziParams,
    weights: RandomWeights,
    launch_dbm: f64,
    rng: &Rng,
) -> Result<LayerStats> {
    if n < 2 {
        return Err(Error::invalid("n", format!("need at least 2 ports, got {n}")));
    }
    if matrices == 0 || trials == 0 {
        return Err(Error::Empty("matrices/trials"));
    }
    let x = uniform_launch(n, launch_dbm);
    let mut il = vec![Vec::with_capacity(matrices); n];
    let mut xp = vec![Vec::with_capacity(matrices * trials); n];
    let (mut xp_sum, mut xp_worst, mut xp_trial_max, mut deficit) = (0.0, 0.0f64, 0.0f64, 0.0);
    for i in 0..matrices {
        let mut wr = rng.split(2 * i as u64);
        let layout = compile_layer(&weights.sample(n, &mut wr), 0.0, 0.0)?;
        deficit += layout.sigma_stage.deficit_db();
        let r = layer_metrics(&layout, p, &x, CrosstalkDraw::Sample(&mut wr))?;
        let amps = r.port_amplitudes();
        let sig: Vec<f64> = r.signal.iter().map(|z| z.norm()).collect();
        let mc_rng = rng.split(2 * i as u64 + 1);
        for k in 0..n {
            il[k].push(r.per_port_il_db[k]);
            xp_sum += amps[k].iter().map(|a| a * a).sum::<f64>();
            xp_worst = xp_worst.max(amps[k].iter().sum::<f64>().powi(2));
            let (_, trials_k) = interference_trials(&amps[k], sig[k], trials, &mut mc_rng.split(k as u64));
            xp_trial_max = trials_k.iter().copied().fold(xp_trial_max, f64::max);
            xp[k].extend(trials_k);
        }
    }
    let all_il: Vec<f64> = il.iter().flatten().copied().collect();
    let (il_avg_db, il_worst_db) = port_statistics(&all_il, Quantity::LossDb)?;
    Ok(LayerStats {
        n,
        matrices,
        trials,
        il: il.into_iter().map(PortSamples::from_samples).collect(),
        il_avg_db,
        il_worst_db,
        xp: xp.into_iter().map(PortSamples::from_samples).collect(),
        xp_avg_dbm: mw_to_dbm(xp_sum / (n * matrices) as f64),
        xp_worst_dbm: mw_to_dbm(xp_worst),
        xp_trial_max_dbm: mw_to_dbm(xp_trial_max),
        sigma_deficit_avg_db: deficit / matrices as f64,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkStudy {
    pub n: usize,
    pub m: usize,
    pub networks: usize,
    pub params: MziParams,
    pub weights: RandomWeights,
    pub gain_db: f64,
    pub nau_loss_db: f64,
    pub launch_dbm: f64,
    pub sensitivity_dbm: f64,
}

impl NetworkStudy {
    pub fn new(n: usize, m: usize, networks: usize) -> Self {
        Self {
            n,
            m,
            networks,
            params: MziParams::default(),
            weights: RandomWeights::default(),
            gain_db: 17.0,
            nau_loss_db: 1.0,
            launch_dbm: 0.0,
            sensitivity_dbm: -11.7,
        }
    }

    /// Random network `index` of the study; depends only on `rng` and `index`.
    pub fn sample_network(&self, index: usize, rng: &Rng) -> Result<NetworkSpec> {
        let mut wr = rng.split(2 * index as u64);
        let layers = (0..self.m)
            .map(|_| compile_layer(&self.weights.sample(self.n, &mut wr), self.gain_db, self.nau_loss_db))
            .collect::<Result<Vec<LayerLayout>>>()?;
        let mut spec = NetworkSpec::new(layers, self.params.clone());
        spec.input_power_dbm = self.launch_dbm;
        spec.photodetector_sensitivity_dbm = self.sensitivity_dbm;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetworkStats {
    pub n: usize,
    pub m: usize,
    pub networks: usize,
    pub mzi_count: usize,
    /// Network IL including gain and NAU loss.
    pub avg_il_db: f64,
    pub worst_il_db: f64,
    /// Same IL with every layer's gain and NAU loss taken back out.
    pub avg_il_no_gain_db: f64,
    pub avg_xp_dbm: f64,
    pub worst_xp_dbm: f64,
    /// Port average in mW; `+inf` as soon as one port is infeasible.
    pub avg_penalty_dbm: f64,
    /// Port average over ports with a finite average-mode launch power.
    pub avg_penalty_feasible_dbm: f64,
    pub worst_penalty_dbm: f64,
    pub ports: usize,
    /// Ports (over all networks) with no finite launch power.
    pub infeasible_avg_ports: usize,
    pub infeasible_worst_ports: usize,
    pub sigma_deficit_avg_db: f64,
}

pub fn network_stats(study: &NetworkStudy, rng: &Rng) -> Result<NetworkStats> {
    if study.m == 0 || study.networks == 0 {
        return Err(Error::Empty("layers/networks"));
    }
    let x = uniform_launch(study.n, study.launch_dbm);
    let (mut il, mut xp, mut pen_avg, mut pen_worst) = (vec![], vec![], vec![], vec![]);
    let (mut xp_worst, mut deficit, mut mzi_count) = (f64::NEG_INFINITY, 0.0, 0);
    for i in 0..study.networks {
        let spec = study.sample_network(i, rng)?;
        mzi_count = spec.mzi_count();
        deficit += spec.total_sigma_deficit_db();
        let mut xr = rng.split(2 * i as u64 + 1);
        let r = network_cascade(&spec, &x, NetworkDraw::Sample(&mut xr))?;
        let avg = power_penalty(&spec, &r, PenaltyMode::Average)?;
        let worst = power_penalty(&spec, &r, PenaltyMode::Worst)?;
        il.extend_from_slice(&r.per_port_il_db);
        xp.extend(r.xp_mw().into_iter().map(mw_to_dbm));
        xp_worst = worst.components.xp_dbm.iter().copied().fold(xp_worst, f64::max);
        pen_avg.extend(avg.per_port_penalty_dbm);
        pen_worst.extend(worst.per_port_penalty_dbm);
    }
    let (avg_il_db, worst_il_db) = port_statistics(&il, Quantity::LossDb)?;
    let (avg_xp_dbm, _) = port_statistics(&xp, Quantity::PowerDbm)?;
    let (avg_penalty_dbm, _) = port_statistics(&pen_avg, Quantity::PowerDbm)?;
    let feasible: Vec<f64> = pen_avg.iter().copied().filter(|p| p.is_finite()).collect();
    let avg_penalty_feasible_dbm = match feasible.is_empty() {
        true => f64::NAN,
        false => port_statistics(&feasible, Quantity::PowerDbm)?.0,
    };
    let (_, worst_penalty_dbm) = port_statistics(&pen_worst, Quantity::PowerDbm)?;
    Ok(NetworkStats {
        n: study.n,
        m: study.m,
        networks: study.networks,
        mzi_count,
        avg_il_db,
        worst_il_db,
        avg_il_no_gain_db: avg_il_db + study.m as f64 * (study.gain_db - study.nau_loss_db),
        avg_xp_dbm,
        worst_xp_dbm: xp_worst,
        avg_penalty_dbm,
        avg_penalty_feasible_dbm,
        worst_penalty_dbm,
        ports: pen_avg.len(),
        infeasible_avg_ports: pen_avg.iter().filter(|p| !p.is_finite()).count(),
        infeasible_worst_ports: pen_worst.iter().filter(|p| !p.is_finite()).count(),
        sigma_deficit_avg_db: deficit / study.networks as f64,
    })
}
