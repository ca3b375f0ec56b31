//! Inference accuracy of a trained model mapped onto lossy MZI hardware.
//!
//! Each layer is compiled to a mesh realizing `W / s_max`; its amplifier
//! is set to exactly `s_max`, so the lossless hardware reproduces the
//! reference model and device losses go uncompensated. With crosstalk on,
//! every leaked field reaches the layer output with a uniformly random
//! phase before the activation (or the output detectors).

use serde::Serialize;

use super::model::{argmax_power, ComplexMlp};
use crate::dataset::FeatureDataset;
use crate::device::MziParams;
use crate::error::{Error, Result};
use crate::mesh::{compile_layer, LayerLayout};
use crate::numerics::{sample, ComplexMatrix, Distribution, Rng, C64};
use crate::propagation::{CrosstalkDraw, FrozenCrosstalk, LayerPath, Mode, Resample};

/// Compiles every layer with the amplifier gain equal to the Σ deficit and
/// no NAU loss.
pub fn compile_model(model: &ComplexMlp) -> Result<Vec<LayerLayout>> {
    model.validate()?;
    model
        .weights
        .iter()
        .map(|w| {
            let mut l = compile_layer(w, 0.0, 0.0)?;
            l.gain_db = l.sigma_stage.deficit_db();
            Ok(l)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccuracyResult {
    pub accuracy_pct: f64,
    pub n_samples: usize,
    pub params: MziParams,
    pub crosstalk: bool,
    pub seed: u64,
}

/// A model lowered onto hardware for one parameter set.
struct Hardware<'a> {
    model: &'a ComplexMlp,
    paths: Vec<LayerPath>,
    /// Gain-scaled lossy transfers, used when crosstalk is off.
    transfers: Vec<ComplexMatrix>,
    frozen: Option<Vec<FrozenCrosstalk>>,
    params: MziParams,
}

impl<'a> Hardware<'a> {
    fn new(
        model: &'a ComplexMlp,
        layouts: &[LayerLayout],
        p: &MziParams,
        resample: Resample,
        rng: &Rng,
    ) -> Result<Self> {
        if layouts.len() != model.weights.len() {
            return Err(Error::dims(model.weights.len(), layouts.len()));
        }
        p.validate()?;
        let paths = layouts
            .iter()
            .map(|l| LayerPath::new(l, p, Mode::Lossy))
            .collect::<Result<Vec<_>>>()?;
        let transfers = paths
            .iter()
            .map(|path| path.transfer().scale(C64::new(path.gain_field(), 0.0)))
            .collect();
        let frozen = (p.has_crosstalk() && resample == Resample::Frozen).then(|| {
            let mut fr = rng.split(u64::MAX);
            layouts.iter().map(|l| FrozenCrosstalk::draw(l, p, &mut fr)).collect()
        });
        Ok(Self {
            model,
            paths,
            transfers,
            frozen,
            params: p.clone(),
        })
    }

    fn forward(&self, x: &[C64], rng: &mut Rng) -> Result<Vec<C64>> {
        let last = self.paths.len() - 1;
        let mut h = x.to_vec();
        for m in 0..self.paths.len() {
            let mut y = if self.params.has_crosstalk() {
                let path = &self.paths[m];
                let mut draw = match &self.frozen {
                    Some(f) => CrosstalkDraw::Frozen(&f[m]),
                    None => CrosstalkDraw::Sample(&mut *rng),
                };
                let (mut sig, leaks) = path.propagate_leaky(&h, &self.params, m, &mut draw)?;
                for leak in &leaks {
                    for (s, z) in sig.iter_mut().zip(&leak.field) {
                        let a = z.norm();
                        if a > 0.0 {
                            let rho = 2.0 * std::f64::consts::PI * rng.uniform01();
                            *s += C64::from_polar(a, rho);
                        }
                    }
                }
                let g = path.gain_field();
                sig.iter_mut().for_each(|z| *z *= g);
                sig
            } else {
                self.transfers[m].mul_vec(&h)?
            };
            if m < last {
                y.iter_mut().for_each(|z| *z = self.model.activation.apply(*z));
            }
            h = y;
        }
        Ok(h)
    }
}

/// Accuracy (%) over `ds`. Sample `i` draws its phases from `rng.split(i)`,
/// so results are reproducible for a fixed seed.
pub fn accuracy_eval(
    model: &ComplexMlp,
    layouts: &[LayerLayout],
    ds: &FeatureDataset,
    p: &MziParams,
    resample: Resample,
    rng: &Rng,
) -> Result<AccuracyResult> {
    if ds.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let hw = Hardware::new(model, layouts, p, resample, rng)?;
    let mut hits = 0;
    for (i, (x, &label)) in ds.features.iter().zip(&ds.labels).enumerate() {
        let y = hw.forward(x, &mut rng.split(i as u64))?;
        if argmax_power(&y) == label {
            hits += 1;
        }
    }
    Ok(AccuracyResult {
        accuracy_pct: 100.0 * hits as f64 / ds.len() as f64,
        n_samples: ds.len(),
        params: p.clone(),
        crosstalk: p.has_crosstalk(),
        seed: rng.seed(),
    })
}

/// The three loss mechanisms varied in accuracy studies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossAxis {
    /// Directional-coupler loss (dB per coupler).
    AlphaL,
    /// Phase-shifter metal absorption (dB).
    AlphaM,
    /// Propagation loss per MZI, `α_p · l_MZI` (dB).
    AlphaProp,
}

impl LossAxis {
    pub const ALL: [LossAxis; 3] = [LossAxis::AlphaL, LossAxis::AlphaM, LossAxis::AlphaProp];

    /// Expected range (dB) of each mechanism.
    pub fn expected_range(self) -> (f64, f64) {
        match self {
            Self::AlphaL => (0.1, 0.4),
            Self::AlphaM => (0.1, 0.3),
            Self::AlphaProp => (0.03, 0.12),
        }
    }
}

/// One point in loss space (all dB; propagation as loss per MZI).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LossPoint {
    pub alpha_l_db: f64,
    pub alpha_m_db: f64,
    pub alpha_prop_db: f64,
}

impl LossPoint {
    pub const ZERO: LossPoint = LossPoint {
        alpha_l_db: 0.0,
        alpha_m_db: 0.0,
        alpha_prop_db: 0.0,
    };

    pub fn minimum_expected() -> Self {
        Self {
            alpha_l_db: LossAxis::AlphaL.expected_range().0,
            alpha_m_db: LossAxis::AlphaM.expected_range().0,
            alpha_prop_db: LossAxis::AlphaProp.expected_range().0,
        }
    }

    pub fn get(&self, axis: LossAxis) -> f64 {
        match axis {
            LossAxis::AlphaL => self.alpha_l_db,
            LossAxis::AlphaM => self.alpha_m_db,
            LossAxis::AlphaProp => self.alpha_prop_db,
        }
    }

    pub fn with(mut self, axis: LossAxis, v: f64) -> Self {
        match axis {
            LossAxis::AlphaL => self.alpha_l_db = v,
            LossAxis::AlphaM => self.alpha_m_db = v,
            LossAxis::AlphaProp => self.alpha_prop_db = v,
        }
        self
    }

    /// `base` with these losses; the propagation loss is converted back
    /// to dB/cm using the base MZI length.
    pub fn apply(&self, base: &MziParams) -> MziParams {
        MziParams {
            alpha_l_db: self.alpha_l_db,
            alpha_m_db: self.alpha_m_db,
            alpha_p_db_per_cm: self.alpha_prop_db / (base.l_mzi_um * 1e-4),
            ..base.clone()
        }
    }
}

/// Shared inputs of the accuracy studies.
pub struct AccuracyStudy<'a> {
    pub model: &'a ComplexMlp,
    pub layouts: &'a [LayerLayout],
    pub data: &'a FeatureDataset,
    /// Geometry, couplers and crosstalk settings; losses are overridden.
    pub base: MziParams,
    pub resample: Resample,
}

impl AccuracyStudy<'_> {
    pub fn eval(&self, losses: LossPoint, crosstalk: bool, rng: &Rng) -> Result<AccuracyResult> {
        let mut p = losses.apply(&self.base);
        if !crosstalk {
            p = p.without_crosstalk();
        }
        accuracy_eval(self.model, self.layouts, self.data, &p, self.resample, rng)
    }

    /// One accuracy per grid value of `axis`, other losses at 0 dB,
    /// crosstalk off.
    pub fn loss_sweep(&self, axis: LossAxis, grid: &[f64], rng: &Rng) -> Result<Vec<(f64, AccuracyResult)>> {
        grid.iter()
            .map(|&v| Ok((v, self.eval(LossPoint::ZERO.with(axis, v), false, rng)?)))
            .collect()
    }

    /// `n` loss instances from location-shifted half-normals
    /// (`loc` = minimum expected, `3σ` = maximum expected), crosstalk off.
    pub fn joint_loss_sample(&self, n: usize, sigma_scale: f64, rng: &Rng) -> Result<Vec<(LossPoint, f64)>> {
        let mut draw = rng.split(0);
        (0..n)
            .map(|i| {
                let mut pt = LossPoint::ZERO;
                for axis in LossAxis::ALL {
                    let (lo, hi) = axis.expected_range();
                    let dist = Distribution::HalfNormal {
                        loc: lo,
                        sigma: sigma_scale * hi / 3.0,
                    };
                    pt = pt.with(axis, sample(&mut draw, dist)?);
                }
                let acc = self.eval(pt, false, &rng.split(1 + i as u64))?.accuracy_pct;
                Ok((pt, acc))
            })
            .collect()
    }

    /// Accuracy matrix over `(X_B, X_C)` with losses at `losses`; cells with
    /// `X_B > X_C` are `None`.
    pub fn crosstalk_grid(
        &self,
        xb_grid: &[f64],
        xc_grid: &[f64],
        losses: LossPoint,
        rng: &Rng,
    ) -> Result<Vec<Vec<Option<f64>>>> {
        let mut out = Vec::with_capacity(xb_grid.len());
        for &xb in xb_grid {
            let mut row = Vec::with_capacity(xc_grid.len());
            for &xc in xc_grid {
                if xb > xc {
                    row.push(None);
                    continue;
                }
                let mut p = losses.apply(&self.base);
                p.xb_db = xb;
                p.xc_db = xc;
                let r = accuracy_eval(self.model, self.layouts, self.data, &p, self.resample, rng)?;
                row.push(Some(r.accuracy_pct));
            }
            out.push(row);
        }
        Ok(out)
    }
}

/// Result of [`AccuracyStudy::tolerance_search`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToleranceReport {
    pub nominal_pct: f64,
    pub max_drop_pct: f64,
    /// Upper corner of the searched box (lower corner is zero loss).
    pub box_upper: LossPoint,
    /// Largest tolerable value of each loss alone.
    pub axis_max: LossPoint,
    /// `(α_L, largest tolerable α_m)` with no propagation loss.
    pub curve: Vec<(f64, f64)>,
    /// Uniform samples of the box that meet the bound.
    pub accepted: Vec<LossPoint>,
    pub sampled: usize,
}

const BISECTION_STEPS: usize = 20;

impl AccuracyStudy<'_> {
    /// Largest `t` in `[0, hi]` with `ok(t)`, assuming `ok` is monotone.
    fn bisect(&self, hi: f64, mut ok: impl FnMut(f64) -> Result<bool>) -> Result<f64> {
        if ok(hi)? {
            return Ok(hi);
        }
        if !ok(0.0)? {
            return Ok(0.0);
        }
        let (mut lo, mut hi) = (0.0, hi);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if ok(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// Loss values whose accuracy drop stays within `max_drop_pct`
    /// (crosstalk off).
    pub fn tolerance_search(
        &self,
        max_drop_pct: f64,
        box_upper: LossPoint,
        curve_points: usize,
        samples: usize,
        rng: &Rng,
    ) -> Result<ToleranceReport> {
        if !(max_drop_pct >= 0.0) {
            return Err(Error::invalid(
                "max_drop_pct",
                format!("must be >= 0, got {max_drop_pct}"),
            ));
        }
        let nominal = self.eval(LossPoint::ZERO, false, rng)?.accuracy_pct;
        let within =
            |pt: LossPoint| -> Result<bool> { Ok(nominal - self.eval(pt, false, rng)?.accuracy_pct <= max_drop_pct) };
        let mut axis_max = LossPoint::ZERO;
        for axis in LossAxis::ALL {
            let v = self.bisect(box_upper.get(axis), |t| within(LossPoint::ZERO.with(axis, t)))?;
            axis_max = axis_max.with(axis, v);
        }
        let mut curve = Vec::with_capacity(curve_points);
        for k in 0..curve_points {
            let al = box_upper.alpha_l_db * k as f64 / (curve_points.max(2) - 1) as f64;
            let base = LossPoint::ZERO.with(LossAxis::AlphaL, al);
            let am = self.bisect(box_upper.alpha_m_db, |t| within(base.with(LossAxis::AlphaM, t)))?;
            curve.push((al, am));
        }
        let mut draw = rng.split(0);
        let mut accepted = Vec::new();
        for _ in 0..samples {
            let pt = LossPoint {
                alpha_l_db: box_upper.alpha_l_db * draw.uniform01(),
                alpha_m_db: box_upper.alpha_m_db * draw.uniform01(),
                alpha_prop_db: box_upper.alpha_prop_db * draw.uniform01(),
            };
            if within(pt)? {
                accepted.push(pt);
            }
        }
        Ok(ToleranceReport {
            nominal_pct: nominal,
            max_drop_pct,
            box_upper,
            axis_max,
            curve,
            accepted,
            sampled: samples,
        })
    }
}
