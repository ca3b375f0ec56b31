//! Compact model of a lossy 2x2 MZI multiplier with θ-dependent
//! statistical crosstalk.
//!
//! The transfer matrix is `T = T_DC2 · T_θ · T_DC1 · T_φ`, where each
//! directional coupler carries the coupler loss, the θ arm carries the
//! metal absorption of its heater plus propagation loss, the reference arm
//! carries propagation loss only, and the φ shifter on input I1 adds a
//! second heater absorption. dB values are turned into field factors with
//! [`db_to_field`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{db_to_field, db_to_ratio, power_ratio_to_loss_db, ComplexMatrix, Rng, C64, J, ZERO};

/// How the crosstalk coefficient scales the signal and leaked fields.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakModel {
    /// Fields scaled by `sqrt(1 - X)` and `sqrt(X)`: leaked power is `X`
    /// times the routed power.
    #[default]
    PowerSplit,
    /// Fields scaled by `(1 - X)` and `X` literally (leaked power ~ `X^2`).
    LiteralAmplitude,
}

/// Device-level loss and crosstalk parameters. Losses in dB, crosstalk
/// coefficients in dB (negative).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MziParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub alpha_l_db: f64,
    pub alpha_m_db: f64,
    pub alpha_p_db_per_cm: f64,
    pub l_mzi_um: f64,
    pub xb_db: f64,
    pub xc_db: f64,
    pub xtalk_sigma_frac: f64,
    pub leak_model: LeakModel,
}

impl Default for MziParams {
    fn default() -> Self {
        Self {
            kappa1: 0.5,
            kappa2: 0.5,
            alpha_l_db: 0.1,
            alpha_m_db: 0.2,
            alpha_p_db_per_cm: 2.0,
            l_mzi_um: 300.0,
            xb_db: -25.0,
            xc_db: -18.0,
            xtalk_sigma_frac: 0.05,
            leak_model: LeakModel::PowerSplit,
        }
    }
}

impl MziParams {
    /// Ideal 3-dB couplers, no loss; crosstalk coefficients unchanged.
    pub fn lossless() -> Self {
        Self {
            alpha_l_db: 0.0,
            alpha_m_db: 0.0,
            alpha_p_db_per_cm: 0.0,
            ..Self::default()
        }
    }

    /// Same parameters with crosstalk removed (`X = -inf dB`).
    pub fn without_crosstalk(&self) -> Self {
        Self {
            xb_db: f64::NEG_INFINITY,
            xc_db: f64::NEG_INFINITY,
            ..self.clone()
        }
    }

    /// Propagation loss of one MZI in dB.
    pub fn propagation_db(&self) -> f64 {
        self.alpha_p_db_per_cm * self.l_mzi_um * 1e-4
    }

    pub fn has_crosstalk(&self) -> bool {
        self.xc_db > f64::NEG_INFINITY || self.xb_db > f64::NEG_INFINITY
    }

    pub fn validate(&self) -> Result<()> {
        for (name, k) in [("kappa1", self.kappa1), ("kappa2", self.kappa2)] {
            if !(0.0..=1.0).contains(&k) {
                return Err(Error::invalid(name, format!("must lie in [0, 1], got {k}")));
            }
        }
        for (name, v) in [
            ("alpha_l_db", self.alpha_l_db),
            ("alpha_m_db", self.alpha_m_db),
            ("alpha_p_db_per_cm", self.alpha_p_db_per_cm),
            ("l_mzi_um", self.l_mzi_um),
            ("xtalk_sigma_frac", self.xtalk_sigma_frac),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(self.xb_db <= 0.0) || !(self.xc_db <= 0.0) {
            return Err(Error::invalid("xb_db/xc_db", "crosstalk coefficients must be <= 0 dB"));
        }
        if self.xb_db > self.xc_db {
            return Err(Error::invalid(
                "xb_db",
                format!(
                    "bar-state crosstalk {} dB must not exceed cross-state crosstalk {} dB",
                    self.xb_db, self.xc_db
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePair {
    pub theta: f64,
    pub phi: f64,
}

impl PhasePair {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn bar() -> Self {
        Self::new(PI, 0.0)
    }

    pub fn cross() -> Self {
        Self::new(0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=PI).contains(&self.theta) {
            return Err(Error::invalid(
                "theta",
                format!("must lie in [0, pi], got {}", self.theta),
            ));
        }
        if !(0.0..=2.0 * PI).contains(&self.phi) {
            return Err(Error::invalid("phi", format!("must lie in [0, 2pi], got {}", self.phi)));
        }
        Ok(())
    }
}

/// 2x2 transfer matrix in row-major order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transfer2(pub [[C64; 2]; 2]);

impl Transfer2 {
    pub fn apply(&self, x: [C64; 2]) -> [C64; 2] {
        let t = &self.0;
        [t[0][0] * x[0] + t[0][1] * x[1], t[1][0] * x[0] + t[1][1] * x[1]]
    }

    pub fn mul(&self, rhs: &Transfer2) -> Transfer2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Transfer2(out)
    }

    /// Rows exchanged: the routing seen by leaked light.
    pub fn swapped(&self) -> Transfer2 {
        Transfer2([self.0[1], self.0[0]])
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_rows(&[self.0[0].to_vec(), self.0[1].to_vec()]).expect("2x2 finite")
    }
}

fn coupler(kappa: f64, field_loss: f64) -> Transfer2 {
    let t = C64::new(field_loss * (1.0 - kappa).sqrt(), 0.0);
    let k = J * field_loss * kappa.sqrt();
    Transfer2([[t, k], [k, t]])
}

/// Loss-aware MZI transfer matrix.
pub fn mzi_transfer(p: &MziParams, ph: PhasePair) -> Transfer2 {
    let a_l = db_to_field(p.alpha_l_db);
    let a_m = db_to_field(p.alpha_m_db);
    let a_p = db_to_field(p.propagation_db());
    let t_dc1 = coupler(p.kappa1, a_l);
    let t_dc2 = coupler(p.kappa2, a_l);
    let t_theta = Transfer2([[C64::from_polar(a_p * a_m, ph.theta), ZERO], [ZERO, C64::new(a_p, 0.0)]]);
    let t_phi = Transfer2([[C64::from_polar(a_m, ph.phi), ZERO], [ZERO, C64::new(1.0, 0.0)]]);
    t_dc2.mul(&t_theta).mul(&t_dc1).mul(&t_phi)
}

pub fn mzi_transfer_matrix(p: &MziParams, ph: PhasePair) -> ComplexMatrix {
    mzi_transfer(p, ph).to_matrix()
}

/// Losses (dB) seen on O1 and O2 when a unit field enters `in_port`
/// (1 or 2). A port with no delivered power reports `+inf`.
pub fn port_insertion_loss(p: &MziParams, ph: PhasePair, in_port: usize) -> Result<(f64, f64)> {
    let x = match in_port {
        1 => [C64::new(1.0, 0.0), ZERO],
        2 => [ZERO, C64::new(1.0, 0.0)],
        _ => return Err(Error::invalid("in_port", format!("must be 1 or 2, got {in_port}"))),
    };
    let o = mzi_transfer(p, ph).apply(x);
    Ok((
        power_ratio_to_loss_db(o[0].norm_sqr()),
        power_ratio_to_loss_db(o[1].norm_sqr()),
    ))
}

/// Per-output insertion loss with both inputs carrying equal, mutually
/// incoherent power: the power collected on each output relative to the
/// lossless device, which delivers exactly the launched per-port power to
/// every output at any phase setting.
pub fn output_insertion_loss(p: &MziParams, ph: PhasePair) -> (f64, f64) {
    let t = mzi_transfer(p, ph).0;
    let row = |r: usize| t[r][0].norm_sqr() + t[r][1].norm_sqr();
    (power_ratio_to_loss_db(row(0)), power_ratio_to_loss_db(row(1)))
}

/// Mean crosstalk coefficient (dB), linear in θ between the cross-state
/// value at θ=0 and the bar-state value at θ=π.
pub fn crosstalk_mean_db(p: &MziParams, theta: f64) -> f64 {
    if p.xb_db == f64::NEG_INFINITY || p.xc_db == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    (p.xb_db - p.xc_db) / PI * theta + p.xc_db
}

/// Crosstalk coefficient in dB. Without an rng the mean is returned;
/// otherwise a Gaussian draw around it with std `sigma_frac * |mean|`,
/// redrawn while above 0 dB.
pub fn crosstalk_coefficient(p: &MziParams, theta: f64, rng: Option<&mut Rng>) -> f64 {
    let mu = crosstalk_mean_db(p, theta);
    let sigma = p.xtalk_sigma_frac * mu.abs();
    match rng {
        Some(rng) if mu.is_finite() && sigma > 0.0 => loop {
            let x = mu + sigma * rng.standard_normal();
            if x <= 0.0 {
                break x;
            }
        },
        _ => mu,
    }
}

/// Signal and leak field factors for a crosstalk coefficient `x_db`.
pub fn leak_factors(model: LeakModel, x_db: f64) -> (f64, f64) {
    let x = db_to_ratio(x_db);
    match model {
        LeakModel::PowerSplit => ((1.0 - x).sqrt(), x.sqrt()),
        LeakModel::LiteralAmplitude => (1.0 - x, x),
    }
}

/// Crosstalk-injected MZI: returns `(signal, leak)` where the leak uses the
/// row-swapped transfer matrix.
pub fn mzi_with_crosstalk(p: &MziParams, ph: PhasePair, inputs: [C64; 2], x_db: f64) -> ([C64; 2], [C64; 2]) {
    let t = mzi_transfer(p, ph);
    let routed = t.apply(inputs);
    let (ks, kl) = leak_factors(p.leak_model, x_db);
    ([routed[0] * ks, routed[1] * ks], [routed[1] * kl, routed[0] * kl])
}

/// As [`mzi_with_crosstalk`] with the coefficient drawn from the θ model.
pub fn mzi_with_sampled_crosstalk(
    p: &MziParams,
    ph: PhasePair,
    inputs: [C64; 2],
    rng: Option<&mut Rng>,
) -> ([C64; 2], [C64; 2]) {
    let x_db = crosstalk_coefficient(p, ph.theta, rng);
    mzi_with_crosstalk(p, ph, inputs, x_db)
}

/// Mean leaked power (mW) on O1 and O2 over `draws` coefficient draws,
/// with `launch_mw` on each input and the two inputs mutually incoherent.
pub fn output_leak_power_mw(p: &MziParams, ph: PhasePair, launch_mw: f64, draws: usize, rng: &mut Rng) -> (f64, f64) {
    let t = mzi_transfer(p, ph).0;
    let routed = |r: usize| launch_mw * (t[r][0].norm_sqr() + t[r][1].norm_sqr());
    let mean_leak = (0..draws.max(1))
        .map(|_| {
            leak_factors(p.leak_model, crosstalk_coefficient(p, ph.theta, Some(&mut *rng)))
                .1
                .powi(2)
        })
        .sum::<f64>()
        / draws.max(1) as f64;
    (mean_leak * routed(1), mean_leak * routed(0))
}
