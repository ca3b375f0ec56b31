//! Complex-valued MLP used as the ideal reference model, and its trainer.
//!
//! Gradients are Wirtinger cogradients `∂L/∂W*`; for a real loss the
//! steepest-descent direction in (Re W, Im W) is `2·∂L/∂W*`.

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureDataset;
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, Rng, C64, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Activation {
    /// `f(z) = z·max(0, 1 − b/|z|)`: shrinks the magnitude by `b`, keeps
    /// the phase.
    Threshold {
        bias: f64,
    },
    Identity,
}

impl Activation {
    pub fn apply(self, z: C64) -> C64 {
        match self {
            Self::Identity => z,
            Self::Threshold { bias } => {
                let r = z.norm();
                if r <= bias {
                    ZERO
                } else {
                    z * (1.0 - bias / r)
                }
            }
        }
    }

    /// `∂L/∂z*` from `∂L/∂f*` (`L` real).
    fn backward(self, z: C64, g: C64) -> C64 {
        match self {
            Self::Identity => g,
            Self::Threshold { bias } => {
                let r = z.norm();
                if r <= bias {
                    return ZERO;
                }
                // ∂f/∂z = 1 − b/(2r), ∂f/∂z* = b z²/(2r³)
                let df_dz = 1.0 - bias / (2.0 * r);
                let df_dzc = z * z * (bias / (2.0 * r * r * r));
                g.conj() * df_dzc + g * df_dz
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMlp {
    pub weights: Vec<ComplexMatrix>,
    pub activation: Activation,
    /// Logits are `readout_scale · |y_k|²`.
    pub readout_scale: f64,
}

impl ComplexMlp {
    pub fn random(n: usize, m: usize, activation: Activation, rng: &mut Rng) -> Self {
        let s = (1.0 / n as f64).sqrt();
        let weights = (0..m)
            .map(|_| ComplexMatrix::from_fn(n, n, |_, _| C64::new(rng.standard_normal(), rng.standard_normal()) * s))
            .collect();
        Self {
            weights,
            activation,
            readout_scale: 10.0,
        }
    }

    pub fn n(&self) -> usize {
        self.weights[0].rows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.weights.first().ok_or(Error::Empty("model layers"))?.rows();
        for w in &self.weights {
            if w.rows() != n || w.cols() != n {
                return Err(Error::dims(
                    format!("{n}x{n} weights"),
                    format!("{}x{}", w.rows(), w.cols()),
                ));
            }
        }
        Ok(())
    }

    /// Pre-activation fields of every layer.
    fn trace(&self, x: &[C64]) -> Vec<Vec<C64>> {
        let mut zs = Vec::with_capacity(self.weights.len());
        let mut h = x.to_vec();
        for (m, w) in self.weights.iter().enumerate() {
            let z = w.mul_vec(&h).expect("validated shapes");
            if m + 1 < self.weights.len() {
                h = z.iter().map(|v| self.activation.apply(*v)).collect();
            }
            zs.push(z);
        }
        zs
    }

    /// Output-port fields.
    pub fn forward(&self, x: &[C64]) -> Vec<C64> {
        self.trace(x).pop().expect("at least one layer")
    }

    pub fn predict(&self, x: &[C64]) -> usize {
        argmax_power(&self.forward(x))
    }

    fn logits(&self, y: &[C64]) -> Vec<f64> {
        y.iter().map(|v| self.readout_scale * v.norm_sqr()).collect()
    }

    /// Cross-entropy of one sample and `∂L/∂W*` for every layer.
    pub fn loss_and_grad(&self, x: &[C64], label: usize) -> (f64, Vec<ComplexMatrix>) {
        let zs = self.trace(x);
        let y = zs.last().expect("at least one layer");
        let logits = self.logits(y);
        let p = softmax(&logits);
        let loss = -p[label].max(f64::MIN_POSITIVE).ln();
        // ∂L/∂y* = (p − onehot)·β·y
        let mut g: Vec<C64> = y
            .iter()
            .enumerate()
            .map(|(k, v)| *v * ((p[k] - f64::from(k == label)) * self.readout_scale))
            .collect();
        let mut grads = vec![ComplexMatrix::zeros(1, 1); self.weights.len()];
        for m in (0..self.weights.len()).rev() {
            let h: Vec<C64> = if m == 0 {
                x.to_vec()
            } else {
                zs[m - 1].iter().map(|v| self.activation.apply(*v)).collect()
            };
            let n = self.weights[m].rows();
            grads[m] = ComplexMatrix::from_fn(n, h.len(), |r, c| g[r] * h[c].conj());
            if m > 0 {
                let gh = self.weights[m].adjoint().mul_vec(&g).expect("validated shapes");
                g = gh
                    .iter()
                    .zip(&zs[m - 1])
                    .map(|(gv, z)| self.activation.backward(*z, *gv))
                    .collect();
            }
        }
        (loss, grads)
    }

    pub fn loss(&self, x: &[C64], label: usize) -> f64 {
        let p = softmax(&self.logits(&self.forward(x)));
        -p[label].max(f64::MIN_POSITIVE).ln()
    }

    pub fn accuracy(&self, ds: &FeatureDataset) -> f64 {
        let hits = ds
            .features
            .iter()
            .zip(&ds.labels)
            .filter(|(x, l)| self.predict(x) == **l)
            .count();
        100.0 * hits as f64 / ds.len() as f64
    }
}

/// Index of the largest output power; the first port wins ties.
pub fn argmax_power(y: &[C64]) -> usize {
    let mut best = 0;
    for (k, v) in y.iter().enumerate() {
        if v.norm_sqr() > y[best].norm_sqr() {
            best = k;
        }
    }
    best
}

fn softmax(l: &[f64]) -> Vec<f64> {
    let mx = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = l.iter().map(|v| (v - mx).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub activation: Activation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 150,
            batch_size: 32,
            learning_rate: 0.01,
            activation: Activation::Threshold { bias: 0.3 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainReport {
    /// Mean training loss per epoch.
    pub loss_curve: Vec<f64>,
    pub train_accuracy_pct: f64,
    /// Final loss below the initial loss.
    pub converged: bool,
}

struct Adam {
    m: Vec<ComplexMatrix>,
    v: Vec<Vec<f64>>,
    t: i32,
}

/// Trains an `m`-layer, `n`-port model with Adam on minibatches.
pub fn train_reference(
    n: usize,
    m: usize,
    ds: &FeatureDataset,
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<(ComplexMlp, TrainReport)> {
    if ds.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if ds.n_features() != n {
        return Err(Error::dims(format!("{n} features"), ds.n_features()));
    }
    if ds.classes > n {
        return Err(Error::invalid(
            "classes",
            format!("{} classes exceed {n} output ports", ds.classes),
        ));
    }
    if cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) {
        return Err(Error::invalid("train", "batch_size and learning_rate must be positive"));
    }
    let mut model = ComplexMlp::random(n, m, cfg.activation, rng);
    let initial = mean_loss(&model, ds);
    let mut adam = Adam {
        m: model
            .weights
            .iter()
            .map(|w| ComplexMatrix::zeros(w.rows(), w.cols()))
            .collect(),
        v: model
            .weights
            .iter()
            .map(|w| vec![0.0; w.rows() * w.cols() * 2])
            .collect(),
        t: 0,
    };
    let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut acc: Vec<ComplexMatrix> = model
                .weights
                .iter()
                .map(|w| ComplexMatrix::zeros(w.rows(), w.cols()))
                .collect();
            for &i in batch {
                let (l, g) = model.loss_and_grad(&ds.features[i], ds.labels[i]);
                total += l;
                for (a, gi) in acc.iter_mut().zip(&g) {
                    a.add_assign(gi)?;
                }
            }
            adam.t += 1;
            let scale = 2.0 / batch.len() as f64;
            let c1 = 1.0 - b1.powi(adam.t);
            let c2 = 1.0 - b2.powi(adam.t);
            for (layer, g) in acc.iter().enumerate() {
                let w = &mut model.weights[layer];
                let (rows, cols) = (w.rows(), w.cols());
                for r in 0..rows {
                    for c in 0..cols {
                        let grad = g[(r, c)] * scale;
                        let mm = &mut adam.m[layer][(r, c)];
                        *mm = *mm * b1 + grad * (1.0 - b1);
                        let vi = 2 * (r * cols + c);
                        let vv = &mut adam.v[layer];
                        vv[vi] = vv[vi] * b2 + grad.re * grad.re * (1.0 - b2);
                        vv[vi + 1] = vv[vi + 1] * b2 + grad.im * grad.im * (1.0 - b2);
                        let mh = *mm / c1;
                        let step = C64::new(
                            mh.re / ((vv[vi] / c2).sqrt() + eps),
                            mh.im / ((vv[vi + 1] / c2).sqrt() + eps),
                        );
                        w[(r, c)] -= step * cfg.learning_rate;
                    }
                }
            }
        }
        let epoch_loss = total / ds.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::Degenerate(format!("training diverged, loss curve {curve:?}")));
        }
        curve.push(epoch_loss);
    }
    let last = curve.last().copied().unwrap_or(initial);
    let report = TrainReport {
        converged: last < initial,
        train_accuracy_pct: model.accuracy(ds),
        loss_curve: curve,
    };
    Ok((model, report))
}

fn mean_loss(model: &ComplexMlp, ds: &FeatureDataset) -> f64 {
    ds.features
        .iter()
        .zip(&ds.labels)
        .map(|(x, l)| model.loss(x, *l))
        .sum::<f64>()
        / ds.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Provenance;

    fn toy(n: usize, count: usize, rng: &mut Rng) -> FeatureDataset {
        // Two classes: energy on port 0 vs port 1, with noise.
        let mut features = vec![];
        let mut labels = vec![];
        for i in 0..count {
            let label = i % 2;
            let mut f: Vec<C64> = (0..n)
                .map(|_| C64::new(rng.standard_normal(), rng.standard_normal()) * 0.1)
                .collect();
            f[label] += C64::new(1.0, 0.0);
            let norm = crate::numerics::vec_norm(&f);
            features.push(f.into_iter().map(|z| z / norm).collect());
            labels.push(label);
        }
        FeatureDataset {
            degenerate: vec![false; count],
            features,
            labels,
            classes: 2,
            provenance: Provenance {
                images_sha256: String::new(),
                labels_sha256: String::new(),
                featurizer: "toy".into(),
                n_features: n,
                classes: 2,
            },
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = Rng::new(21);
        let model = ComplexMlp::random(5, 3, Activation::Threshold { bias: 0.05 }, &mut rng);
        let x: Vec<C64> = (0..5)
            .map(|_| C64::new(rng.standard_normal(), rng.standard_normal()))
            .collect();
        let (_, grads) = model.loss_and_grad(&x, 2);
        let h = 1e-6;
        let mut checked = 0;
        while checked < 100 {
            let layer = rng.below(3);
            let (r, c) = (rng.below(5), rng.below(5));
            let imag = rng.below(2) == 1;
            let delta = if imag { C64::new(0.0, h) } else { C64::new(h, 0.0) };
            let mut plus = model.clone();
            plus.weights[layer][(r, c)] += delta;
            let mut minus = model.clone();
            minus.weights[layer][(r, c)] -= delta;
            let fd = (plus.loss(&x, 2) - minus.loss(&x, 2)) / (2.0 * h);
            let g = grads[layer][(r, c)] * 2.0;
            let an = if imag { g.im } else { g.re };
            let tol = 1e-4 * an.abs().max(fd.abs()).max(1e-3);
            assert!(
                (an - fd).abs() < tol,
                "layer {layer} ({r},{c}) imag={imag}: {an} vs {fd}"
            );
            checked += 1;
        }
    }

    #[test]
    fn separable_toy_is_learned() {
        let mut rng = Rng::new(22);
        let ds = toy(4, 200, &mut rng);
        let cfg = TrainConfig {
            epochs: 60,
            ..TrainConfig::default()
        };
        let (model, report) = train_reference(4, 1, &ds, &cfg, &mut rng).unwrap();
        assert!(report.converged);
        assert!(model.accuracy(&ds) >= 99.0, "{}", model.accuracy(&ds));
    }

    #[test]
    fn zero_epochs_reports_untrained_model() {
        let mut rng = Rng::new(23);
        let ds = toy(4, 100, &mut rng);
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let (_, report) = train_reference(4, 1, &ds, &cfg, &mut rng).unwrap();
        assert!(report.loss_curve.is_empty());
        assert!(!report.converged);
    }
}
