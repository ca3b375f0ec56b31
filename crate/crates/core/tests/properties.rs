//! Property tests against independent oracles.

use std::f64::consts::PI;

use proptest::prelude::*;
use spnn_core::device::{mzi_transfer_matrix, mzi_with_crosstalk, LeakModel, MziParams, PhasePair};
use spnn_core::mesh::{clements_decompose, clements_reconstruct, compile_layer, Role};
use spnn_core::numerics::{
    fft2d, random_gaussian_matrix, random_unitary, svd, unitarity_residual, vec_norm, ComplexMatrix, Rng, C64,
};
use spnn_core::propagation::{
    interfere_port, layer_metrics, network_cascade, uniform_launch, CrosstalkDraw, LayerPath, Mode, NetworkDraw,
    NetworkSpec,
};

fn c64() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn triple_loop(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.rows(), b.cols(), |i, j| {
        (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum()
    })
}

/// Direct O(N^4) 2-D DFT with the negative-exponent convention.
fn direct_dft(img: &[Vec<f64>], side: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(side, side, |u, v| {
        let mut acc = C64::new(0.0, 0.0);
        for (r, row) in img.iter().enumerate() {
            for (c, &x) in row.iter().enumerate() {
                let ang = -2.0 * PI * ((u * r) as f64 / side as f64 + (v * c) as f64 / side as f64);
                acc += C64::from_polar(x, ang);
            }
        }
        acc
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn power_split_conserves_power(theta in 0.0..PI, phi in 0.0..2.0 * PI, x_db in -40.0..-3.0f64,
                                   a in c64(), b in c64()) {
        let p = MziParams { leak_model: LeakModel::PowerSplit, ..MziParams::default() };
        let routed = mzi_transfer_matrix(&p, PhasePair::new(theta, phi)).mul_vec(&[a, b]).unwrap();
        let (sig, leak) = mzi_with_crosstalk(&p, PhasePair::new(theta, phi), [a, b], x_db);
        let before: f64 = routed.iter().map(|z| z.norm_sqr()).sum();
        let after: f64 = sig.iter().chain(&leak).map(|z| z.norm_sqr()).sum();
        prop_assert!((before - after).abs() <= 1e-12);
    }

    #[test]
    fn lossless_mzi_is_unitary(theta in 0.0..PI, phi in 0.0..2.0 * PI) {
        let t = mzi_transfer_matrix(&MziParams::lossless(), PhasePair::new(theta, phi));
        prop_assert!(unitarity_residual(&t) < 1e-12);
    }

    #[test]
    fn lossy_mzi_never_gains(theta in 0.0..PI, phi in 0.0..2.0 * PI, a in c64(), b in c64()) {
        let out = mzi_transfer_matrix(&MziParams::default(), PhasePair::new(theta, phi)).mul_vec(&[a, b]).unwrap();
        prop_assert!(vec_norm(&out) <= vec_norm(&[a, b]) + 1e-15);
    }

    #[test]
    fn clements_reconstructs_unitary(n in 2usize..10, seed in any::<u64>()) {
        let u = random_unitary(n, &mut Rng::new(seed));
        let d = clements_decompose(&u, Role::UnitaryU).unwrap();
        prop_assert_eq!(d.placements.len(), n * (n - 1) / 2);
        for pl in &d.placements {
            prop_assert!((0.0..=PI).contains(&pl.phases.theta));
            prop_assert!((0.0..=2.0 * PI).contains(&pl.phases.phi));
        }
        let r = clements_reconstruct(&d.placements, n, &d.phase_screen).unwrap();
        prop_assert!(r.max_abs_diff(&u) < 1e-10);
        prop_assert!(unitarity_residual(&r) < 1e-10);
    }

    #[test]
    fn lossless_mesh_path_is_unitary_up_to_sigma(n in 2usize..9, seed in any::<u64>()) {
        let u = random_unitary(n, &mut Rng::new(seed));
        let layout = compile_layer(&u, 0.0, 0.0).unwrap();
        let t = LayerPath::new(&layout, &MziParams::lossless(), Mode::Lossy).unwrap().transfer();
        prop_assert!(unitarity_residual(&t) < 1e-10);
        prop_assert_eq!(layout.mzi_count(), n * (n - 1) + n);
    }

    #[test]
    fn svd_matches_triple_loop(n in 1usize..9, seed in any::<u64>()) {
        let w = random_gaussian_matrix(n, &mut Rng::new(seed));
        let s = svd(&w).unwrap();
        let sig = ComplexMatrix::diagonal(&s.s.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>());
        let rebuilt = triple_loop(&triple_loop(&s.u, &sig), &s.vh);
        prop_assert!(rebuilt.max_abs_diff(&w) < 1e-10 * (1.0 + w.max_abs()));
        prop_assert!(unitarity_residual(&s.u) < 1e-10 && unitarity_residual(&s.vh) < 1e-10);
        prop_assert!(s.s.windows(2).all(|p| p[0] >= p[1]) && s.s.iter().all(|&v| v >= 0.0));
        let m = w.matmul(&w).unwrap();
        prop_assert!(m.max_abs_diff(&triple_loop(&w, &w)) < 1e-12 * (1.0 + m.max_abs()));
    }

    #[test]
    fn fft_matches_direct_dft(rows in 1usize..9, cols in 1usize..9, seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let img: Vec<Vec<f64>> = (0..rows).map(|_| (0..cols).map(|_| rng.uniform01()).collect()).collect();
        let f = fft2d(&img).unwrap();
        let side = rows.max(cols).next_power_of_two();
        prop_assert!(f.max_abs_diff(&direct_dft(&img, side)) < 1e-10);
    }

    #[test]
    fn propagation_never_exceeds_launch(n in 2usize..8, seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let layout = compile_layer(&random_gaussian_matrix(n, &mut rng), 0.0, 0.0).unwrap();
        let x = uniform_launch(n, 0.0);
        let r = layer_metrics(&layout, &MziParams::default(), &x, CrosstalkDraw::Sample(&mut rng)).unwrap();
        let total: f64 = r.signal.iter().map(|z| z.norm_sqr()).sum::<f64>() + r.xp_mw().iter().sum::<f64>();
        prop_assert!(total <= n as f64 * (1.0 + 1e-12));
    }

    #[test]
    fn network_first_order_bound(n in 2usize..6, m in 1usize..4, seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let layers = (0..m).map(|_| compile_layer(&random_gaussian_matrix(n, &mut rng), 17.0, 1.0).unwrap()).collect();
        let spec = NetworkSpec::new(layers, MziParams::default());
        let r = network_cascade(&spec, &uniform_launch(n, 0.0), NetworkDraw::Sample(&mut rng)).unwrap();
        let total: f64 = r.signal.iter().map(|z| z.norm_sqr()).sum::<f64>() + r.xp_mw().iter().sum::<f64>();
        prop_assert!(total <= n as f64 * 10f64.powf(1.6 * m as f64) * (1.0 + 1e-12));
    }

    #[test]
    fn uniform_losses_scale_the_lossless_mzi(theta in 0.0..PI, phi in 0.0..2.0 * PI, al in 0.0..1.0f64, ap in 0.0..5.0f64) {
        let p = MziParams { alpha_l_db: al, alpha_m_db: 0.0, alpha_p_db_per_cm: ap, ..MziParams::default() };
        let ph = PhasePair::new(theta, phi);
        let k = 10f64.powf(-(2.0 * al + p.propagation_db()) / 20.0);
        let expect = mzi_transfer_matrix(&MziParams::lossless(), ph).scale(C64::new(k, 0.0));
        prop_assert!(mzi_transfer_matrix(&p, ph).max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn same_seed_same_bits(seed in any::<u64>(), stream in any::<u64>()) {
        let mut a = Rng::new(seed).split(stream);
        let mut b = Rng::new(seed).split(stream);
        let xs: Vec<u64> = (0..16).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..16).map(|_| b.next_u64()).collect();
        prop_assert_eq!(xs, ys);
    }
}

#[test]
fn interference_expectation_single_component() {
    let (a_s, a_x) = (1.0, 0.3);
    let stats = interfere_port(&[a_x], a_s, 100_000, &mut Rng::new(9));
    let expect = a_s * a_s + a_x * a_x;
    assert!(
        (stats.received.mean - expect).abs() / expect < 0.01,
        "{}",
        stats.received.mean
    );
    assert!(stats.received.min >= (a_s - a_x).powi(2) - 1e-12);
    assert!(stats.received.min < (a_s - a_x).powi(2) + 1e-3);
}

#[test]
fn cascade_is_byte_reproducible() {
    let run = || {
        let mut rng = Rng::new(77);
        let layers = (0..2)
            .map(|_| compile_layer(&random_gaussian_matrix(6, &mut rng), 17.0, 1.0).unwrap())
            .collect();
        let spec = NetworkSpec::new(layers, MziParams::default());
        let r = network_cascade(&spec, &uniform_launch(6, 0.0), NetworkDraw::Sample(&mut rng)).unwrap();
        serde_json::to_vec(&(&r.per_port_il_db, r.xp_mw())).unwrap()
    };
    assert_eq!(run(), run());
}
