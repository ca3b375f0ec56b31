//! Field propagation through compiled layers with first-order coherent
//! crosstalk tracking.
//!
//! Every two-port MZI splits its routed field into a signal part and a
//! leaked part. The leaked field travels the rest of the network in lossy
//! mode without generating further leaks, and is kept as a complex field
//! on every output port. Its phase relative to the signal is resolved
//! statistically at the measurement point (see [`monte_carlo_interference`]).

mod montecarlo;
mod network;

use serde::{Deserialize, Serialize};

pub use montecarlo::{interfere_port, interference_trials, monte_carlo_interference, InterferenceStats, PortSamples};
pub use network::{network_cascade, NetworkDraw, NetworkSpec};

use crate::device::{crosstalk_coefficient, leak_factors, mzi_transfer, MziParams, Transfer2};
use crate::error::{Error, Result};
use crate::mesh::{group_columns, LayerLayout, MziPlacement, Role};
use crate::numerics::{db_to_field, mw_to_dbm, power_ratio_to_loss_db, ComplexMatrix, Rng, C64, ZERO};

/// Complex field amplitudes (sqrt(mW)) on the waveguides.
pub type FieldVector = Vec<C64>;

/// Leaks from attenuators in the Σ stage are dropped: one port of each is
/// terminated.
pub const SUPPRESS_DIAGONAL_CROSSTALK: bool = true;

/// Crosstalk fields do not leak again downstream.
pub const CROSSTALK_ORDER: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Zero-dB losses, the reference path.
    Ideal,
    /// Full device losses on every placement.
    Lossy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resample {
    /// Fresh crosstalk coefficients on every forward pass.
    PerCall,
    /// Coefficients drawn once per layout and reused.
    Frozen,
}

/// Where crosstalk coefficients come from during a pass.
pub enum CrosstalkDraw<'a> {
    /// The θ-dependent mean, no randomness.
    Mean,
    /// Fresh Gaussian draws.
    Sample(&'a mut Rng),
    /// Pre-drawn coefficients (dB) indexed by placement order, see
    /// [`FrozenCrosstalk`].
    Frozen(&'a FrozenCrosstalk),
}

/// Crosstalk coefficients drawn once per layout.
#[derive(Clone, Debug, PartialEq)]
pub struct FrozenCrosstalk {
    pub x_db: Vec<f64>,
}

impl FrozenCrosstalk {
    pub fn draw(layout: &LayerLayout, p: &MziParams, rng: &mut Rng) -> Self {
        Self {
            x_db: layout
                .placements()
                .map(|pl| crosstalk_coefficient(p, pl.phases.theta, Some(rng)))
                .collect(),
        }
    }
}

impl CrosstalkDraw<'_> {
    fn coefficient(&mut self, p: &MziParams, index: usize, theta: f64) -> f64 {
        match self {
            CrosstalkDraw::Mean => crosstalk_coefficient(p, theta, None),
            CrosstalkDraw::Sample(rng) => crosstalk_coefficient(p, theta, Some(rng)),
            CrosstalkDraw::Frozen(f) => f.x_db[index],
        }
    }
}

/// A first-order leaked field observed at one output port.
#[derive(Clone, Debug, PartialEq)]
pub struct CrosstalkComponent {
    /// (layer index, placement index within the layer).
    pub source: (usize, usize),
    /// Field magnitude at the port, sqrt(mW); includes all downstream loss
    /// and gain.
    pub amplitude: f64,
    pub port: usize,
    /// Phase assigned at interference time; `None` until resolved.
    pub rho: Option<f64>,
}

/// A leaked field on all output ports.
#[derive(Clone, Debug, PartialEq)]
pub struct LeakField {
    pub source: (usize, usize),
    pub field: FieldVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropagationResult {
    pub signal: FieldVector,
    pub leaks: Vec<LeakField>,
    /// Per-port loss (dB) of the signal against the ideal lossless path.
    pub per_port_il_db: Vec<f64>,
    /// Per-port crosstalk power (dBm) averaged over the crosstalk phases,
    /// i.e. the incoherent sum of component powers.
    pub per_port_xp_dbm: Vec<f64>,
}

impl PropagationResult {
    fn new(signal: FieldVector, leaks: Vec<LeakField>, ideal: &[C64]) -> Self {
        let n = signal.len();
        let per_port_il_db = signal
            .iter()
            .zip(ideal)
            .map(|(s, i)| loss_against(s.norm_sqr(), i.norm_sqr()))
            .collect();
        let mut xp = vec![0.0; n];
        for leak in &leaks {
            for (acc, z) in xp.iter_mut().zip(&leak.field) {
                *acc += z.norm_sqr();
            }
        }
        Self {
            signal,
            leaks,
            per_port_il_db,
            per_port_xp_dbm: xp.into_iter().map(mw_to_dbm).collect(),
        }
    }

    pub fn components(&self) -> Vec<CrosstalkComponent> {
        let mut out = Vec::new();
        for leak in &self.leaks {
            for (port, z) in leak.field.iter().enumerate() {
                let amplitude = z.norm();
                if amplitude > 0.0 {
                    out.push(CrosstalkComponent {
                        source: leak.source,
                        amplitude,
                        port,
                        rho: None,
                    });
                }
            }
        }
        out
    }

    /// Component magnitudes grouped by output port.
    pub fn port_amplitudes(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); self.signal.len()];
        for leak in &self.leaks {
            for (port, z) in leak.field.iter().enumerate() {
                let a = z.norm();
                if a > 0.0 {
                    out[port].push(a);
                }
            }
        }
        out
    }

    /// Crosstalk power per port (mW) averaged over phases.
    pub fn xp_mw(&self) -> Vec<f64> {
        self.port_amplitudes()
            .iter()
            .map(|a| a.iter().map(|x| x * x).sum())
            .collect()
    }
}

/// Loss (dB) of `actual` power relative to `reference` power.
pub(crate) fn loss_against(actual: f64, reference: f64) -> f64 {
    if reference <= 0.0 {
        if actual <= 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        power_ratio_to_loss_db(actual / reference)
    }
}

#[derive(Clone, Debug)]
enum Op {
    Mzi {
        row: usize,
        index: usize,
        theta: f64,
        t: Transfer2,
    },
    Attenuator {
        row: usize,
        t: C64,
    },
}

/// A layer lowered to per-column transfer operations for one parameter set.
#[derive(Clone, Debug)]
pub struct LayerPath {
    n: usize,
    columns: Vec<Vec<Op>>,
    screen: Vec<C64>,
    /// Field factor of OGU gain and NAU loss.
    gain_field: f64,
}

impl LayerPath {
    pub fn new(layout: &LayerLayout, p: &MziParams, mode: Mode) -> Result<Self> {
        let params = match mode {
            Mode::Ideal => MziParams::lossless(),
            Mode::Lossy => p.clone(),
        };
        let all: Vec<MziPlacement> = layout.placements().copied().collect();
        group_columns(&all, layout.n)?;
        let mut order: Vec<usize> = (0..all.len()).collect();
        order.sort_by_key(|&i| (all[i].column, all[i].top_row));
        let mut columns: Vec<Vec<Op>> = Vec::new();
        let mut current = None;
        for index in order {
            let pl = &all[index];
            if current != Some(pl.column) {
                current = Some(pl.column);
                columns.push(Vec::new());
            }
            let t = mzi_transfer(&params, pl.phases);
            let op = match pl.role {
                Role::Diagonal => Op::Attenuator {
                    row: pl.top_row,
                    t: t.0[0][0],
                },
                _ => Op::Mzi {
                    row: pl.top_row,
                    index,
                    theta: pl.phases.theta,
                    t,
                },
            };
            columns.last_mut().expect("column pushed").push(op);
        }
        Ok(Self {
            n: layout.n,
            columns,
            screen: layout.phase_screen.iter().map(|ph| C64::from_polar(1.0, *ph)).collect(),
            gain_field: db_to_field(layout.nau_loss_db - layout.gain_db),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check(&self, x: &[C64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::dims(format!("field of length {}", self.n), x.len()));
        }
        Ok(())
    }

    /// Propagates `x` from column `start` to the output, without leaks.
    fn run_from(&self, x: &mut [C64], start: usize) {
        for col in &self.columns[start..] {
            for op in col {
                apply(op, x);
            }
        }
        for (z, d) in x.iter_mut().zip(&self.screen) {
            *z *= d;
        }
    }

    /// OIU only: no gain, no NAU loss.
    pub fn propagate(&self, x: &[C64]) -> Result<FieldVector> {
        self.check(x)?;
        let mut y = x.to_vec();
        self.run_from(&mut y, 0);
        Ok(y)
    }

    /// OIU followed by gain and NAU loss.
    pub fn propagate_with_gain(&self, x: &[C64]) -> Result<FieldVector> {
        let mut y = self.propagate(x)?;
        y.iter_mut().for_each(|z| *z *= self.gain_field);
        Ok(y)
    }

    /// OIU pass emitting first-order leaks. Returns the signal and the
    /// leaked fields at the OIU output (no gain applied).
    pub fn propagate_leaky(
        &self,
        x: &[C64],
        p: &MziParams,
        layer: usize,
        draw: &mut CrosstalkDraw<'_>,
    ) -> Result<(FieldVector, Vec<LeakField>)> {
        self.check(x)?;
        let mut sig = x.to_vec();
        let mut leaks = Vec::new();
        let xtalk = p.has_crosstalk();
        for (c, col) in self.columns.iter().enumerate() {
            for op in col {
                match *op {
                    Op::Mzi {
                        row,
                        index,
                        theta,
                        ref t,
                    } if xtalk => {
                        let routed = t.apply([sig[row], sig[row + 1]]);
                        let x_db = draw.coefficient(p, index, theta);
                        let (ks, kl) = leak_factors(p.leak_model, x_db);
                        sig[row] = routed[0] * ks;
                        sig[row + 1] = routed[1] * ks;
                        if kl > 0.0 && (routed[0] != ZERO || routed[1] != ZERO) {
                            let mut field = vec![ZERO; self.n];
                            field[row] = routed[1] * kl;
                            field[row + 1] = routed[0] * kl;
                            self.run_from(&mut field, c + 1);
                            leaks.push(LeakField {
                                source: (layer, index),
                                field,
                            });
                        }
                    }
                    _ => apply(op, &mut sig),
                }
            }
        }
        for (z, d) in sig.iter_mut().zip(&self.screen) {
            *z *= d;
        }
        Ok((sig, leaks))
    }

    /// Full transfer matrix of the OIU (no gain).
    pub fn transfer(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.n, self.n);
        for c in 0..self.n {
            let mut e = vec![ZERO; self.n];
            e[c] = C64::new(1.0, 0.0);
            self.run_from(&mut e, 0);
            m.set_column(c, &e);
        }
        m
    }

    pub fn gain_field(&self) -> f64 {
        self.gain_field
    }
}

fn apply(op: &Op, x: &mut [C64]) {
    match *op {
        Op::Mzi { row, ref t, .. } => {
            let y = t.apply([x[row], x[row + 1]]);
            x[row] = y[0];
            x[row + 1] = y[1];
        }
        Op::Attenuator { row, t, .. } => x[row] *= t,
    }
}

/// OIU-only propagation (no gain, no NAU).
pub fn propagate_signal(layout: &LayerLayout, p: &MziParams, x: &[C64], mode: Mode) -> Result<FieldVector> {
    LayerPath::new(layout, p, mode)?.propagate(x)
}

/// OIU pass with first-order crosstalk; no gain or NAU loss.
pub fn propagate_with_crosstalk(
    layout: &LayerLayout,
    p: &MziParams,
    x: &[C64],
    mut draw: CrosstalkDraw<'_>,
) -> Result<PropagationResult> {
    let lossy = LayerPath::new(layout, p, Mode::Lossy)?;
    let ideal = LayerPath::new(layout, p, Mode::Ideal)?.propagate(x)?;
    let (signal, leaks) = lossy.propagate_leaky(x, p, 0, &mut draw)?;
    Ok(PropagationResult::new(signal, leaks, &ideal))
}

/// As [`propagate_with_crosstalk`], then the layer's gain and NAU loss
/// applied to the signal and every leaked field.
pub fn layer_metrics(
    layout: &LayerLayout,
    p: &MziParams,
    x: &[C64],
    draw: CrosstalkDraw<'_>,
) -> Result<PropagationResult> {
    let r = propagate_with_crosstalk(layout, p, x, draw)?;
    let g = db_to_field(layout.nau_loss_db - layout.gain_db);
    let ideal: Vec<C64> = LayerPath::new(layout, p, Mode::Ideal)?.propagate(x)?;
    let signal: FieldVector = r.signal.iter().map(|z| z * g).collect();
    let leaks = r
        .leaks
        .into_iter()
        .map(|l| LeakField {
            source: l.source,
            field: l.field.iter().map(|z| z * g).collect(),
        })
        .collect();
    Ok(PropagationResult::new(signal, leaks, &ideal))
}

/// Equal power `power_dbm` on every port, zero phase.
pub fn uniform_launch(n: usize, power_dbm: f64) -> FieldVector {
    let a = crate::numerics::dbm_to_mw(power_dbm).sqrt();
    vec![C64::new(a, 0.0); n]
}
