//! Statistical resolution of coherent crosstalk phases.
//!
//! Each trial assigns every leaked component an independent phase
//! ρ ~ U[0, 2π) relative to the signal and records the received power
//! `|A_s + Σ A_k e^{jρ_k}|²` and the crosstalk-only power
//! `|Σ A_k e^{jρ_k}|²`. Phases are drawn on a 2^16-point grid through a
//! precomputed table, which keeps the inner loop free of trigonometry.

use std::sync::OnceLock;

use serde::Serialize;

use crate::numerics::{Rng, C64};

const PHASE_BITS: u32 = 16;
const PHASE_POINTS: usize = 1 << PHASE_BITS;

fn phase_table() -> &'static [C64] {
    static TABLE: OnceLock<Vec<C64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..PHASE_POINTS)
            .map(|k| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / PHASE_POINTS as f64))
            .collect()
    })
}

/// Five-number summary plus mean, in mW.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PortSamples {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

impl PortSamples {
    pub fn from_samples(mut xs: Vec<f64>) -> Self {
        assert!(!xs.is_empty());
        xs.sort_by(f64::total_cmp);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        Self {
            min: xs[0],
            q1: quantile(&xs, 0.25),
            median: quantile(&xs, 0.5),
            q3: quantile(&xs, 0.75),
            max: xs[xs.len() - 1],
            mean,
        }
    }
}

/// Linear-interpolated quantile of sorted data.
pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterferenceStats {
    pub trials: usize,
    /// Signal power without crosstalk (mW).
    pub signal_mw: f64,
    pub received: PortSamples,
    pub crosstalk: PortSamples,
}

/// Raw per-trial `(received, crosstalk)` powers on one port.
pub fn interference_trials(components: &[f64], signal: f64, trials: usize, rng: &mut Rng) -> (Vec<f64>, Vec<f64>) {
    let table = phase_table();
    let mut received = Vec::with_capacity(trials);
    let mut crosstalk = Vec::with_capacity(trials);
    let shift = u64::BITS - PHASE_BITS;
    for _ in 0..trials {
        let mut acc = C64::new(0.0, 0.0);
        let mut bits = 0u64;
        let mut left = 0u32;
        for &a in components {
            if left == 0 {
                bits = rng.next_u64();
                left = u64::BITS / PHASE_BITS;
            }
            let idx = (bits >> shift) as usize;
            bits <<= PHASE_BITS;
            left -= 1;
            acc += table[idx] * a;
        }
        crosstalk.push(acc.norm_sqr());
        received.push((acc + signal).norm_sqr());
    }
    (received, crosstalk)
}

/// Resolves crosstalk phases on one port.
pub fn interfere_port(components: &[f64], signal: f64, trials: usize, rng: &mut Rng) -> InterferenceStats {
    assert!(trials >= 1, "at least one trial");
    let (received, crosstalk) = interference_trials(components, signal, trials, rng);
    InterferenceStats {
        trials,
        signal_mw: signal * signal,
        received: PortSamples::from_samples(received),
        crosstalk: PortSamples::from_samples(crosstalk),
    }
}

/// Per-port interference statistics. Port `k` uses the child stream
/// `rng.split(k)`, so results do not depend on evaluation order.
pub fn monte_carlo_interference(
    port_components: &[Vec<f64>],
    signal: &[f64],
    trials: usize,
    rng: &Rng,
) -> Vec<InterferenceStats> {
    assert_eq!(port_components.len(), signal.len());
    port_components
        .iter()
        .zip(signal)
        .enumerate()
        .map(|(k, (comps, &s))| interfere_port(comps, s, trials, &mut rng.split(k as u64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_components_means_signal_only() {
        let s = interfere_port(&[], 0.5, 100, &mut Rng::new(1));
        assert_eq!(s.received.min, 0.25);
        assert_eq!(s.received.max, 0.25);
        assert_eq!(s.crosstalk.max, 0.0);
    }

    #[test]
    fn single_component_expectation() {
        // E|A_s + A_x e^{jρ}|² = |A_s|² + |A_x|² for uniform ρ.
        let (a_s, a_x) = (1.0, 0.3);
        let s = interfere_port(&[a_x], a_s, 100_000, &mut Rng::new(2));
        let want = a_s * a_s + a_x * a_x;
        assert!(((s.received.mean - want) / want).abs() < 0.01);
        let destructive = (a_s - a_x) * (a_s - a_x);
        assert!(s.received.min >= destructive - 1e-12);
        assert!(s.received.min - destructive < 1e-3);
        assert!((s.crosstalk.mean - a_x * a_x).abs() < 1e-12);
    }

    #[test]
    fn many_components_incoherent_mean() {
        let comps: Vec<f64> = (1..=40).map(|k| 0.01 * k as f64).collect();
        let want: f64 = comps.iter().map(|a| a * a).sum();
        let s = interfere_port(&comps, 0.0, 20_000, &mut Rng::new(3));
        assert!(((s.crosstalk.mean - want) / want).abs() < 0.03);
        let bound: f64 = comps.iter().sum::<f64>().powi(2);
        assert!(s.crosstalk.max <= bound);
    }

    #[test]
    fn port_streams_are_order_independent() {
        let comps = vec![vec![0.1, 0.2], vec![0.3]];
        let rng = Rng::new(4);
        let all = monte_carlo_interference(&comps, &[1.0, 1.0], 500, &rng);
        let second = interfere_port(&comps[1], 1.0, 500, &mut rng.split(1));
        assert_eq!(all[1], second);
    }
}
