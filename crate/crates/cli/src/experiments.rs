//! One function per experiment, each returning named tables and JSON blobs.

use std::f64::consts::PI;

use clap::ValueEnum;
use spnn_core::analysis::{
    compile_model, layer_stats, network_stats, power_penalty, train_reference, AccuracyStudy, ComplexMlp, LossAxis,
    LossPoint, NetworkStudy, PenaltyMode, TrainConfig,
};
use spnn_core::dataset::{ingest_idx, packaged_digits, FeatureDataset};
use spnn_core::device::{output_insertion_loss, output_leak_power_mw, PhasePair};
use spnn_core::mesh::{compile_layer, LayoutDocument};
use spnn_core::numerics::{dbm_to_mw, mw_to_dbm, ComplexMatrix, Rng};
use spnn_core::propagation::{network_cascade, uniform_launch, NetworkDraw, NetworkSpec, PortSamples};

use crate::config::{ExperimentConfig, WeightSource};
use crate::table::{Cell, Table};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    DeviceSweep,
    LayerStats,
    NetworkStats,
    PowerPenalty,
    Compile,
    Train,
    Accuracy,
    LossSweep,
    JointSample,
    Tolerance,
    XtalkGrid,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::DeviceSweep => "device-sweep",
            Self::LayerStats => "layer-stats",
            Self::NetworkStats => "network-stats",
            Self::PowerPenalty => "power-penalty",
            Self::Compile => "compile",
            Self::Train => "train",
            Self::Accuracy => "accuracy",
            Self::LossSweep => "loss-sweep",
            Self::JointSample => "joint-sample",
            Self::Tolerance => "tolerance",
            Self::XtalkGrid => "xtalk-grid",
        }
    }
}

#[derive(Debug, Default)]
pub struct Artifacts {
    pub tables: Vec<(String, Table)>,
    pub json: Vec<(String, String)>,
    /// Short human-readable lines for stdout.
    pub summary: Vec<String>,
}

impl Artifacts {
    fn table(&mut self, name: &str, t: Table) {
        self.tables.push((name.to_string(), t));
    }
}

pub fn run_experiment(exp: Experiment, cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    cfg.validate()?;
    if let Some(declared) = &cfg.experiment {
        if declared != exp.name() {
            return Err(CliError::config(
                "experiment",
                format!("config is for `{declared}` but `{}` was requested", exp.name()),
            ));
        }
    }
    match exp {
        Experiment::DeviceSweep => device_sweep(cfg),
        Experiment::LayerStats => layer(cfg),
        Experiment::NetworkStats => network(cfg),
        Experiment::PowerPenalty => penalty(cfg),
        Experiment::Compile => compile(cfg),
        Experiment::Train => train(cfg),
        Experiment::Accuracy => accuracy(cfg),
        Experiment::LossSweep => loss_sweep(cfg),
        Experiment::JointSample => joint_sample(cfg),
        Experiment::Tolerance => tolerance(cfg),
        Experiment::XtalkGrid => xtalk_grid(cfg),
    }
}

fn device_sweep(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let p = cfg.params();
    let mut rng = Rng::new(cfg.seed);
    let mut t = Table::new(&["theta", "il_o1_db", "il_o2_db", "xp_o1_dbm", "xp_o2_dbm"]);
    let steps = (cfg.theta_points - 1).max(1) as f64;
    for k in 0..cfg.theta_points {
        let ph = PhasePair::new(PI * k as f64 / steps, 0.0);
        let (il1, il2) = output_insertion_loss(&p, ph);
        let (x1, x2) = output_leak_power_mw(&p, ph, dbm_to_mw(cfg.launch_power_dbm), cfg.trials, &mut rng);
        t.push(vec![
            ph.theta.into(),
            il1.into(),
            il2.into(),
            mw_to_dbm(x1).into(),
            mw_to_dbm(x2).into(),
        ]);
    }
    let mut a = Artifacts::default();
    a.summary.push(format!("{} theta points", cfg.theta_points));
    a.table("device-sweep", t);
    Ok(a)
}

fn five_numbers(s: &PortSamples, map: impl Fn(f64) -> f64) -> Vec<Cell> {
    [s.min, s.q1, s.median, s.q3, s.max, s.mean]
        .into_iter()
        .map(|v| map(v).into())
        .collect()
}

fn random_only(cfg: &ExperimentConfig, what: &str) -> Result<spnn_core::analysis::RandomWeights, CliError> {
    match &cfg.weights {
        WeightSource::Random { distribution } => Ok(*distribution),
        WeightSource::File { .. } => Err(CliError::config(
            "weights",
            format!("{what} is an ensemble study and needs random weights"),
        )),
    }
}

fn layer(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let dist = random_only(cfg, "layer-stats")?;
    let s = layer_stats(
        cfg.n,
        cfg.matrices,
        cfg.trials,
        &cfg.params(),
        dist,
        cfg.launch_power_dbm,
        &Rng::new(cfg.seed),
    )?;
    let stat_cols = ["min", "q1", "median", "q3", "max", "mean"];
    let mut header = vec!["port".to_string()];
    header.extend(stat_cols.iter().map(|c| format!("il_{c}_db")));
    header.extend(stat_cols.iter().map(|c| format!("xp_{c}_dbm")));
    let mut per_port = Table { header, rows: vec![] };
    for (k, (il, xp)) in s.il.iter().zip(&s.xp).enumerate() {
        let mut row = vec![Cell::from(k)];
        row.extend(five_numbers(il, |v| v));
        row.extend(five_numbers(xp, mw_to_dbm));
        per_port.push(row);
    }
    let mut summary = Table::new(&[
        "n",
        "matrices",
        "trials",
        "il_avg_db",
        "il_worst_db",
        "xp_avg_dbm",
        "xp_worst_dbm",
        "xp_trial_max_dbm",
        "sigma_deficit_avg_db",
    ]);
    summary.push(vec![
        s.n.into(),
        s.matrices.into(),
        s.trials.into(),
        s.il_avg_db.into(),
        s.il_worst_db.into(),
        s.xp_avg_dbm.into(),
        s.xp_worst_dbm.into(),
        s.xp_trial_max_dbm.into(),
        s.sigma_deficit_avg_db.into(),
    ]);
    let mut a = Artifacts::default();
    a.summary.push(format!(
        "IL avg {:.2} dB worst {:.2} dB; XP avg {:.2} dBm worst {:.2} dBm",
        s.il_avg_db, s.il_worst_db, s.xp_avg_dbm, s.xp_worst_dbm
    ));
    a.table("layer-stats", per_port);
    a.table("layer-stats-summary", summary);
    Ok(a)
}

fn study(cfg: &ExperimentConfig, n: usize, m: usize) -> Result<NetworkStudy, CliError> {
    Ok(NetworkStudy {
        params: cfg.params(),
        weights: random_only(cfg, "this experiment")?,
        gain_db: cfg.gain_db,
        nau_loss_db: cfg.nau_loss_db,
        launch_dbm: cfg.launch_power_dbm,
        sensitivity_dbm: cfg.sensitivity_dbm,
        ..NetworkStudy::new(n, m, cfg.networks)
    })
}

fn network(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let mut t = Table::new(&[
        "n",
        "m",
        "networks",
        "mzi_count",
        "avg_il_db",
        "worst_il_db",
        "avg_il_no_gain_db",
        "avg_xp_dbm",
        "worst_xp_dbm",
        "avg_penalty_dbm",
        "avg_penalty_feasible_dbm",
        "worst_penalty_dbm",
        "ports",
        "infeasible_avg_ports",
        "infeasible_worst_ports",
        "sigma_deficit_avg_db",
    ]);
    let rng = Rng::new(cfg.seed);
    for &n in &cfg.n_grid {
        for &m in &cfg.m_grid {
            let s = network_stats(&study(cfg, n, m)?, &rng)?;
            t.push(vec![
                n.into(),
                m.into(),
                s.networks.into(),
                s.mzi_count.into(),
                s.avg_il_db.into(),
                s.worst_il_db.into(),
                s.avg_il_no_gain_db.into(),
                s.avg_xp_dbm.into(),
                s.worst_xp_dbm.into(),
                s.avg_penalty_dbm.into(),
                s.avg_penalty_feasible_dbm.into(),
                s.worst_penalty_dbm.into(),
                s.ports.into(),
                s.infeasible_avg_ports.into(),
                s.infeasible_worst_ports.into(),
                s.sigma_deficit_avg_db.into(),
            ]);
        }
    }
    let mut a = Artifacts::default();
    a.summary.push(format!("{} grid rows", t.rows.len()));
    a.table("network-stats", t);
    Ok(a)
}

fn load_weights(path: &std::path::Path) -> Result<Vec<ComplexMatrix>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::config("weights.path", format!("{}: {e}", path.display())))
}

/// Networks to study: `networks` random draws, or the single file network.
fn networks(cfg: &ExperimentConfig) -> Result<Vec<(NetworkSpec, Rng)>, CliError> {
    let rng = Rng::new(cfg.seed);
    match &cfg.weights {
        WeightSource::File { path } => {
            let layers = load_weights(path)?
                .iter()
                .map(|w| compile_layer(w, cfg.gain_db, cfg.nau_loss_db))
                .collect::<spnn_core::Result<Vec<_>>>()?;
            let mut spec = NetworkSpec::new(layers, cfg.params());
            spec.input_power_dbm = cfg.launch_power_dbm;
            spec.photodetector_sensitivity_dbm = cfg.sensitivity_dbm;
            Ok(vec![(spec, rng.split(1))])
        }
        WeightSource::Random { .. } => {
            let st = study(cfg, cfg.n, cfg.m)?;
            (0..cfg.networks)
                .map(|i| Ok((st.sample_network(i, &rng)?, rng.split(2 * i as u64 + 1))))
                .collect()
        }
    }
}

fn penalty(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let mut t = Table::new(&[
        "network",
        "port",
        "il_db",
        "xp_avg_dbm",
        "xp_worst_dbm",
        "penalty_avg_dbm",
        "penalty_worst_dbm",
        "sensitivity_dbm",
        "sigma_deficit_db",
    ]);
    let mut avg_all = vec![];
    for (i, (spec, mut rng)) in networks(cfg)?.into_iter().enumerate() {
        let r = network_cascade(
            &spec,
            &uniform_launch(spec.n(), spec.input_power_dbm),
            NetworkDraw::Sample(&mut rng),
        )?;
        let avg = power_penalty(&spec, &r, PenaltyMode::Average)?;
        let worst = power_penalty(&spec, &r, PenaltyMode::Worst)?;
        for k in 0..spec.n() {
            t.push(vec![
                i.into(),
                k.into(),
                avg.components.il_db[k].into(),
                avg.components.xp_dbm[k].into(),
                worst.components.xp_dbm[k].into(),
                avg.per_port_penalty_dbm[k].into(),
                worst.per_port_penalty_dbm[k].into(),
                avg.components.sensitivity_dbm.into(),
                avg.components.sigma_deficit_db.into(),
            ]);
        }
        avg_all.extend(avg.per_port_penalty_dbm);
    }
    let infeasible = avg_all.iter().filter(|p| !p.is_finite()).count();
    let mut a = Artifacts::default();
    a.summary.push(format!(
        "{} ports, {infeasible} without a finite average-mode launch power",
        avg_all.len()
    ));
    a.table("power-penalty", t);
    Ok(a)
}

fn compile(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let docs: Vec<LayoutDocument> = networks(cfg)?
        .swap_remove(0)
        .0
        .layers
        .iter()
        .map(LayoutDocument::from_layout)
        .collect();
    let mut t = Table::new(&["layer", "column", "rows", "theta", "phi", "role"]);
    for (l, d) in docs.iter().enumerate() {
        for (c, col) in d.columns.iter().enumerate() {
            for p in &col.placements {
                let rows: Vec<String> = p.rows.iter().map(usize::to_string).collect();
                let role = serde_json::to_value(p.role).expect("role serializes");
                t.push(vec![
                    l.into(),
                    c.into(),
                    rows.join(" ").into(),
                    p.theta.into(),
                    p.phi.into(),
                    role.as_str().unwrap_or_default().into(),
                ]);
            }
        }
    }
    let mut a = Artifacts::default();
    a.summary
        .push(format!("{} layers, {} placements", docs.len(), t.rows.len()));
    a.json.push((
        "layout".into(),
        serde_json::to_string_pretty(&docs).expect("layout serializes") + "\n",
    ));
    a.table("placements", t);
    Ok(a)
}

fn dataset(cfg: &ExperimentConfig) -> Result<FeatureDataset, CliError> {
    let raw = match (&cfg.images, &cfg.labels) {
        (Some(i), Some(l)) => ingest_idx(i, l)?,
        _ => packaged_digits(),
    };
    Ok(FeatureDataset::from_images(&raw, cfg.n, cfg.classes)?)
}

struct Prepared {
    model: ComplexMlp,
    train: FeatureDataset,
    test: FeatureDataset,
    report: Option<spnn_core::analysis::TrainReport>,
}

/// Splits the dataset with stream 0 of the seed and either loads the model
/// or trains one with stream 1.
fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, CliError> {
    let rng = Rng::new(cfg.seed);
    let (train, test) = dataset(cfg)?.split(cfg.train_fraction, &mut rng.split(0))?;
    let (model, report) = match &cfg.model {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.clone(),
                source: e,
            })?;
            let model: ComplexMlp = serde_json::from_str(&text)
                .map_err(|e| CliError::config("model", format!("{}: {e}", path.display())))?;
            model.validate()?;
            if model.n() != cfg.n {
                return Err(CliError::config(
                    "n",
                    format!("model has {} ports, config says {}", model.n(), cfg.n),
                ));
            }
            (model, None)
        }
        None => {
            let tc = TrainConfig {
                epochs: cfg.epochs,
                batch_size: cfg.batch_size,
                learning_rate: cfg.learning_rate,
                activation: cfg.activation(),
            };
            let (model, report) = train_reference(cfg.n, cfg.m, &train, &tc, &mut rng.split(1))?;
            (model, Some(report))
        }
    };
    Ok(Prepared {
        model,
        train,
        test,
        report,
    })
}

fn with_study<T>(
    cfg: &ExperimentConfig,
    f: impl FnOnce(&AccuracyStudy, &Prepared) -> Result<T, CliError>,
) -> Result<T, CliError> {
    let prep = prepare(cfg)?;
    let layouts = compile_model(&prep.model)?;
    let st = AccuracyStudy {
        model: &prep.model,
        layouts: &layouts,
        data: &prep.test,
        base: cfg.params(),
        resample: cfg.resample,
    };
    f(&st, &prep)
}

fn eval_rng(cfg: &ExperimentConfig) -> Rng {
    Rng::new(cfg.seed).split(2)
}

fn train(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    if cfg.model.is_some() {
        return Err(CliError::config(
            "model",
            "train produces a model; drop the `model` key",
        ));
    }
    let prep = prepare(cfg)?;
    let report = prep.report.expect("trained");
    let mut curve = Table::new(&["epoch", "loss"]);
    for (e, l) in report.loss_curve.iter().enumerate() {
        curve.push(vec![(e + 1).into(), (*l).into()]);
    }
    let test_pct = prep.model.accuracy(&prep.test);
    let mut summary = Table::new(&[
        "train_accuracy_pct",
        "test_accuracy_pct",
        "train_samples",
        "test_samples",
        "converged",
    ]);
    summary.push(vec![
        report.train_accuracy_pct.into(),
        test_pct.into(),
        prep.train.len().into(),
        prep.test.len().into(),
        report.converged.into(),
    ]);
    let mut a = Artifacts::default();
    a.summary.push(format!(
        "train {:.2}% test {:.2}% converged {}",
        report.train_accuracy_pct, test_pct, report.converged
    ));
    a.json.push((
        "model".into(),
        serde_json::to_string(&prep.model).expect("model serializes") + "\n",
    ));
    a.json.push((
        "dataset".into(),
        serde_json::to_string_pretty(&prep.test.provenance).expect("provenance serializes") + "\n",
    ));
    a.table("loss-curve", curve);
    a.table("train-summary", summary);
    Ok(a)
}

fn accuracy(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    with_study(cfg, |st, prep| {
        let losses = LossPoint {
            alpha_l_db: cfg.alpha_l_db,
            alpha_m_db: cfg.alpha_m_db,
            alpha_prop_db: cfg.alpha_p_db_per_cm * cfg.l_mzi_um * 1e-4,
        };
        let r = st.eval(losses, cfg.crosstalk, &eval_rng(cfg))?;
        let nominal = prep.model.accuracy(&prep.test);
        let mut t = Table::new(&[
            "accuracy_pct",
            "nominal_pct",
            "n_samples",
            "crosstalk",
            "alpha_L_db",
            "alpha_m_db",
            "alpha_p_db_per_cm",
            "xB_db",
            "xC_db",
            "seed",
        ]);
        t.push(vec![
            r.accuracy_pct.into(),
            nominal.into(),
            r.n_samples.into(),
            r.crosstalk.into(),
            r.params.alpha_l_db.into(),
            r.params.alpha_m_db.into(),
            r.params.alpha_p_db_per_cm.into(),
            r.params.xb_db.into(),
            r.params.xc_db.into(),
            cfg.seed.into(),
        ]);
        let mut a = Artifacts::default();
        a.summary
            .push(format!("accuracy {:.2}% (ideal model {nominal:.2}%)", r.accuracy_pct));
        a.table("accuracy", t);
        Ok(a)
    })
}

fn axis_name(axis: LossAxis) -> String {
    serde_json::to_value(axis)
        .expect("axis serializes")
        .as_str()
        .unwrap_or_default()
        .to_string()
}

fn loss_sweep(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    with_study(cfg, |st, _| {
        let mut t = Table::new(&["axis", "value_db", "accuracy_pct"]);
        for &axis in &cfg.sweep_axes {
            let hi = axis.expected_range().1;
            let steps = (cfg.sweep_points - 1).max(1) as f64;
            let grid: Vec<f64> = (0..cfg.sweep_points).map(|k| hi * k as f64 / steps).collect();
            for (v, r) in st.loss_sweep(axis, &grid, &eval_rng(cfg))? {
                t.push(vec![axis_name(axis).into(), v.into(), r.accuracy_pct.into()]);
            }
        }
        let mut a = Artifacts::default();
        a.summary.push(format!("{} sweep points", t.rows.len()));
        a.table("loss-sweep", t);
        Ok(a)
    })
}

fn joint_sample(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    with_study(cfg, |st, _| {
        let pts = st.joint_loss_sample(cfg.joint_instances, cfg.joint_sigma_scale, &eval_rng(cfg))?;
        let mut t = Table::new(&["instance", "alpha_L_db", "alpha_m_db", "alpha_prop_db", "accuracy_pct"]);
        for (i, (p, acc)) in pts.iter().enumerate() {
            t.push(vec![
                i.into(),
                p.alpha_l_db.into(),
                p.alpha_m_db.into(),
                p.alpha_prop_db.into(),
                (*acc).into(),
            ]);
        }
        let below = pts.iter().filter(|(_, a)| *a < 20.0).count();
        let above = pts.iter().filter(|(_, a)| *a > 70.0).count();
        let mut a = Artifacts::default();
        a.summary
            .push(format!("{} instances: {below} below 20%, {above} above 70%", pts.len()));
        a.table("joint-sample", t);
        Ok(a)
    })
}

fn tolerance(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    with_study(cfg, |st, _| {
        let upper = LossPoint {
            alpha_l_db: LossAxis::AlphaL.expected_range().1,
            alpha_m_db: LossAxis::AlphaM.expected_range().1,
            alpha_prop_db: LossAxis::AlphaProp.expected_range().1,
        };
        let r = st.tolerance_search(
            cfg.max_drop_pct,
            upper,
            cfg.tolerance_curve_points,
            cfg.tolerance_samples,
            &eval_rng(cfg),
        )?;
        let mut t = Table::new(&["kind", "alpha_L_db", "alpha_m_db", "alpha_prop_db"]);
        for axis in LossAxis::ALL {
            let p = LossPoint::ZERO.with(axis, r.axis_max.get(axis));
            t.push(vec![
                format!("axis_max_{}", axis_name(axis)).into(),
                p.alpha_l_db.into(),
                p.alpha_m_db.into(),
                p.alpha_prop_db.into(),
            ]);
        }
        for &(al, am) in &r.curve {
            t.push(vec!["curve".into(), al.into(), am.into(), 0.0.into()]);
        }
        for p in &r.accepted {
            t.push(vec![
                "accepted".into(),
                p.alpha_l_db.into(),
                p.alpha_m_db.into(),
                p.alpha_prop_db.into(),
            ]);
        }
        let mut a = Artifacts::default();
        a.summary.push(format!(
            "nominal {:.2}%, {}/{} sampled points within {}% drop",
            r.nominal_pct,
            r.accepted.len(),
            r.sampled,
            r.max_drop_pct
        ));
        a.table("tolerance", t);
        Ok(a)
    })
}

fn xtalk_grid(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    with_study(cfg, |st, _| {
        let grid = st.crosstalk_grid(
            &cfg.xb_grid,
            &cfg.xc_grid,
            LossPoint::minimum_expected(),
            &eval_rng(cfg),
        )?;
        let mut t = Table::new(&["xB_db", "xC_db", "accuracy_pct"]);
        for (i, row) in grid.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                if let Some(acc) = cell {
                    t.push(vec![cfg.xb_grid[i].into(), cfg.xc_grid[j].into(), (*acc).into()]);
                }
            }
        }
        let mut a = Artifacts::default();
        a.summary.push(format!("{} valid (xB <= xC) cells", t.rows.len()));
        a.table("xtalk-grid", t);
        Ok(a)
    })
}
