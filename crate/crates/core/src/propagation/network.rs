use super::{CrosstalkDraw, FieldVector, FrozenCrosstalk, LayerPath, LeakField, Mode, PropagationResult};
use crate::device::MziParams;
use crate::error::{Error, Result};
use crate::mesh::LayerLayout;
use crate::numerics::{Rng, C64};

#[derive(Clone, Debug)]
pub struct NetworkSpec {
    pub layers: Vec<LayerLayout>,
    pub params: MziParams,
    /// Launch power per input port (dBm).
    pub input_power_dbm: f64,
    pub photodetector_sensitivity_dbm: f64,
}

impl NetworkSpec {
    pub fn new(layers: Vec<LayerLayout>, params: MziParams) -> Self {
        Self {
            layers,
            params,
            input_power_dbm: 0.0,
            photodetector_sensitivity_dbm: -11.7,
        }
    }

    pub fn n(&self) -> usize {
        self.layers.first().map_or(0, |l| l.n)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.layers.is_empty() {
            return Err(Error::Empty("network layers"));
        }
        if let Some(bad) = self.layers.iter().find(|l| l.n != n) {
            return Err(Error::dims(format!("{n} ports per layer"), bad.n));
        }
        self.params.validate()
    }

    pub fn total_sigma_deficit_db(&self) -> f64 {
        self.layers.iter().map(|l| l.sigma_stage.deficit_db()).sum()
    }

    pub fn mzi_count(&self) -> usize {
        self.layers.iter().map(LayerLayout::mzi_count).sum()
    }
}

/// Crosstalk coefficient source for a whole network.
pub enum NetworkDraw<'a> {
    Mean,
    Sample(&'a mut Rng),
    /// One frozen table per layer.
    Frozen(&'a [FrozenCrosstalk]),
}

/// Cascades the layers: each layer's signal (with gain and NAU loss) feeds
/// the next; leaks born in a layer traverse all later layers in lossy mode,
/// receiving every traversed layer's gain, without leaking again. Loss is
/// reported against the ideal cascade without gain.
pub fn network_cascade(spec: &NetworkSpec, x: &[C64], mut draw: NetworkDraw<'_>) -> Result<PropagationResult> {
    spec.validate()?;
    if let NetworkDraw::Frozen(f) = &draw {
        if f.len() != spec.layers.len() {
            return Err(Error::dims(spec.layers.len(), f.len()));
        }
    }
    let p = &spec.params;
    let mut signal: FieldVector = x.to_vec();
    let mut ideal: FieldVector = x.to_vec();
    let mut leaks: Vec<LeakField> = Vec::new();
    for (m, layout) in spec.layers.iter().enumerate() {
        let lossy = LayerPath::new(layout, p, Mode::Lossy)?;
        let reference = LayerPath::new(layout, p, Mode::Ideal)?;
        let mut layer_draw = match &mut draw {
            NetworkDraw::Mean => CrosstalkDraw::Mean,
            NetworkDraw::Sample(rng) => CrosstalkDraw::Sample(rng),
            NetworkDraw::Frozen(f) => CrosstalkDraw::Frozen(&f[m]),
        };
        for leak in leaks.iter_mut() {
            leak.field = lossy.propagate(&leak.field)?;
        }
        let (sig, born) = lossy.propagate_leaky(&signal, p, m, &mut layer_draw)?;
        signal = sig;
        leaks.extend(born);
        let g = lossy.gain_field();
        signal.iter_mut().for_each(|z| *z *= g);
        for leak in leaks.iter_mut() {
            leak.field.iter_mut().for_each(|z| *z *= g);
        }
        ideal = reference.propagate(&ideal)?;
    }
    Ok(PropagationResult::new(signal, leaks, &ideal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::compile_layer;
    use crate::numerics::{db_to_field, random_gaussian_matrix, vec_norm, ComplexMatrix};
    use crate::propagation::uniform_launch;

    #[test]
    fn lossless_identity_layers_only_apply_gain() {
        let layers: Vec<_> = (0..3)
            .map(|_| compile_layer(&ComplexMatrix::identity(4), 17.0, 1.0).unwrap())
            .collect();
        let spec = NetworkSpec::new(layers, MziParams::lossless().without_crosstalk());
        let x: Vec<C64> = (0..4).map(|k| C64::new(k as f64 + 1.0, 0.5)).collect();
        let r = network_cascade(&spec, &x, NetworkDraw::Mean).unwrap();
        let g = db_to_field(-16.0 * 3.0);
        for (y, xi) in r.signal.iter().zip(&x) {
            assert!((y.norm() - xi.norm() * g).abs() < 1e-9);
        }
        assert!(r.leaks.is_empty());
    }

    #[test]
    fn first_order_power_bound() {
        let mut rng = Rng::new(3);
        let layers: Vec<_> = (0..2)
            .map(|_| compile_layer(&random_gaussian_matrix(6, &mut rng), 17.0, 1.0).unwrap())
            .collect();
        let spec = NetworkSpec::new(layers, MziParams::default());
        let x = uniform_launch(6, 0.0);
        let r = network_cascade(&spec, &x, NetworkDraw::Sample(&mut rng)).unwrap();
        let total = vec_norm(&r.signal).powi(2) + r.xp_mw().iter().sum::<f64>();
        let bound = vec_norm(&x).powi(2) * 10f64.powf(3.2);
        assert!(total <= bound, "{total} > {bound}");
        assert_eq!(r.leaks.len(), 2 * 6 * 5);
    }

    #[test]
    fn seeded_cascade_is_reproducible() {
        let mut rng = Rng::new(4);
        let layers: Vec<_> = (0..2)
            .map(|_| compile_layer(&random_gaussian_matrix(4, &mut rng), 17.0, 1.0).unwrap())
            .collect();
        let spec = NetworkSpec::new(layers, MziParams::default());
        let x = uniform_launch(4, 0.0);
        let a = network_cascade(&spec, &x, NetworkDraw::Sample(&mut Rng::new(9))).unwrap();
        let b = network_cascade(&spec, &x, NetworkDraw::Sample(&mut Rng::new(9))).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mismatched_layers_rejected() {
        let layers = vec![
            compile_layer(&ComplexMatrix::identity(4), 0.0, 0.0).unwrap(),
            compile_layer(&ComplexMatrix::identity(3), 0.0, 0.0).unwrap(),
        ];
        let spec = NetworkSpec::new(layers, MziParams::default());
        assert!(network_cascade(&spec, &uniform_launch(4, 0.0), NetworkDraw::Mean).is_err());
    }
}
