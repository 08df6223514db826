use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::scenario::*;
use super::{schema, write_distribution_csv, write_distribution_json, write_json, write_plot_csv, write_table_csv, ComplexDto};
use crate::cv::{
    ccr_from_joint, conditional_brackets, conditional_from_char_fn, joint_from_char_fns, joint_kd_cv,
    momentum_amplitudes, MeasurementOrder, WaveFunction,
};
use crate::distribution::PseudoDistribution;
use crate::error::{Error, Result};
use crate::moments::{correlation_matrix, correlation_tensor, moment_vector_orders};
use crate::oracle::{kd_conditional, kd_joint, kd_npoint, reconstruct_state};
use crate::photonics::{
    ccr_from_experiments, run_reconstruction, Analyzer, ExperimentConfig, ExperimentResult, Quadrature,
};
use crate::quantum::QuantumState;
use crate::reconstruct::{
    conditional_from_moments_with, joint_from_correlations_with, npoint_from_correlations_with, ReconstructOptions,
    Reconstruction,
};

/// What a run should produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Reconstruction from weak data, for the discrete and CV kinds.
    Reconstruct,
    /// Direct quantum-mechanical ground truth only.
    Oracle,
    /// Shot-level simulation of the optical experiment.
    Experiment,
    /// Commutator witness.
    Ccr,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Reconstruct => "reconstruct",
            Mode::Oracle => "oracle",
            Mode::Experiment => "experiment",
            Mode::Ccr => "ccr",
        }
    }

    fn accepts(self, s: &Scenario) -> bool {
        use Scenario::*;
        match self {
            Mode::Reconstruct => {
                matches!(s, DiscreteConditional(_) | DiscreteJoint(_) | DiscreteNpoint(_) | CvConditional(_) | CvJoint(_))
            }
            Mode::Oracle => true,
            Mode::Experiment => matches!(s, Experiment(_)),
            Mode::Ccr => matches!(s, Ccr(_)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Write the oracle next to the reconstruction and diff them.
    pub emit_oracle: bool,
    /// Overrides the scenario seed of simulated runs.
    pub seed: Option<u64>,
    /// Tolerance of the reconstruction-vs-oracle check.
    pub tol: f64,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self { out_dir: out_dir.into(), emit_oracle: false, seed: None, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub kind: &'static str,
    pub artifacts: Vec<PathBuf>,
    pub diagnostics: Value,
}

struct Artifacts<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl Artifacts<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn distribution(&mut self, stem: &str, d: &PseudoDistribution) -> Result<()> {
        write_distribution_json(&self.path(&format!("{stem}.json")), d)?;
        write_distribution_csv(&self.path(&format!("{stem}.csv")), d)
    }

    fn plot(&mut self, name: &str, d: &PseudoDistribution) -> Result<()> {
        write_plot_csv(&self.path(name), d)
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<()> {
        write_json(&self.path(name), v)
    }
}

/// Executes a scenario and writes its artifacts into `options.out_dir`.
pub fn run(scenario: &Scenario, mode: Mode, options: &RunOptions) -> Result<RunSummary> {
    if !mode.accepts(scenario) {
        return Err(schema("kind", format!("`{}` scenarios cannot be run by `{}`", scenario.kind(), mode.as_str())));
    }
    if !(options.tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be non-negative, got {}", options.tol)));
    }
    std::fs::create_dir_all(&options.out_dir).map_err(|e| Error::Io(format!("{}: {e}", options.out_dir.display())))?;
    let mut out = Artifacts { dir: &options.out_dir, written: Vec::new() };
    let mut diagnostics = match (mode, scenario) {
        (Mode::Oracle, Scenario::Experiment(s)) => experiment_oracle(s, &mut out)?,
        (Mode::Oracle, Scenario::Ccr(s)) => ccr_exact(&s.grid, &s.state, &mut out)?,
        (Mode::Oracle, s) => {
            let oracle = oracle_of(s)?;
            out.distribution("oracle", &oracle)?;
            out.plot("plot.csv", &oracle)?;
            summary(&oracle)
        }
        (Mode::Experiment, Scenario::Experiment(s)) => experiment(s, options, &mut out)?,
        (Mode::Ccr, Scenario::Ccr(s)) => match &s.experiment {
            None => ccr_exact(&s.grid, &s.state, &mut out)?,
            Some(e) => ccr_experiment(s, e, options, &mut out)?,
        },
        (_, s) => {
            let (dist, mut diag) = reconstruct(s)?;
            out.distribution("distribution", &dist)?;
            out.plot("plot.csv", &dist)?;
            if options.emit_oracle {
                let oracle = oracle_of(s)?;
                out.distribution("oracle", &oracle)?;
                let err = dist.max_abs_diff(&oracle)?;
                diag["oracle_check"] = json!({ "max_abs_diff": err, "tol": options.tol, "pass": err <= options.tol });
            }
            diag
        }
    };
    diagnostics["kind"] = json!(scenario.kind());
    diagnostics["mode"] = json!(mode.as_str());
    out.json("diagnostics.json", &diagnostics)?;
    Ok(RunSummary { kind: scenario.kind(), artifacts: out.written, diagnostics })
}

fn summary(d: &PseudoDistribution) -> Value {
    json!({
        "shape": d.shape(),
        "ordering": d.ordering,
        "total": ComplexDto::from(d.total()),
        "normalization_error": d.normalization_error(),
        "nonclassical": d.is_nonclassical(1e-12),
    })
}

fn with_report(r: &Reconstruction) -> Value {
    let mut v = summary(&r.distribution);
    v["report"] = json!({
        "normalization_error": r.report.normalization_error,
        "condition": r.report.condition,
        "least_squares": r.report.least_squares,
        "renormalized": r.report.renormalized,
    });
    v
}

fn pure(state: &StateSpec) -> Result<QuantumState> {
    match state.load()? {
        LoadedState::Pure(s) => Ok(s),
        LoadedState::Mixed(_) => Err(schema("state", "a pure state is required")),
    }
}

fn reconstruct(s: &Scenario) -> Result<(PseudoDistribution, Value)> {
    match s {
        Scenario::DiscreteConditional(s) => {
            let (a, b) = s.observables()?;
            let (a, b) = (a.build("a")?, b.build("b")?);
            let psi = pure(&s.state)?;
            let phi = QuantumState::eigenstate(&b, s.post_selection);
            let mv = moment_vector_orders(&a, &psi, &phi, s.orders.unwrap_or(a.dim()), s.floor)?;
            let r = conditional_from_moments_with(&a, &mv, &ReconstructOptions { renormalize: s.renormalize })?;
            let mut diag = with_report(&r);
            diag["moments"] = json!(mv.values.iter().map(|&z| ComplexDto::from(z)).collect::<Vec<_>>());
            Ok((r.distribution, diag))
        }
        Scenario::DiscreteJoint(s) => {
            let (a, b) = (s.a.build("a")?, s.b.build("b")?);
            let rho = s.state.load()?.density();
            let c = correlation_matrix(&a, &b, &rho)?;
            let r = joint_from_correlations_with(&a, &b, &c, &ReconstructOptions { renormalize: s.renormalize })?;
            let mut diag = with_report(&r);
            // the reconstruction is conj(K); the state comes back from K itself
            let back = reconstruct_state(&r.distribution.conj(), &a, &b)?;
            diag["state_roundtrip_error"] = json!((back.matrix() - rho.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max));
            Ok((r.distribution, diag))
        }
        Scenario::DiscreteNpoint(s) => {
            let obs = build_list(&s.observables)?;
            let psi = pure(&s.state)?;
            let c = correlation_tensor(&obs, &psi)?;
            let r = npoint_from_correlations_with(&obs, &c, &ReconstructOptions { renormalize: s.renormalize })?;
            Ok((r.distribution.clone(), with_report(&r)))
        }
        Scenario::CvConditional(s) => {
            let g = s.grid.build()?;
            let w = s.state.load(&g)?;
            let order = s.order.into();
            let q = conditional_from_char_fn(&w, order, s.pixel, s.floor)?;
            let mut diag = summary(&q);
            diag["postselection_probability"] = json!(postselection_density(&w, order)[s.pixel] * spacing(&w, order));
            diag["edge_amplitude"] = json!(w.edge_amplitude());
            Ok((q, diag))
        }
        Scenario::CvJoint(s) => {
            let g = s.grid.build()?;
            let w = s.state.load(&g)?;
            let (k, skipped) = joint_from_char_fns(&w, s.order.into(), s.floor)?;
            let mut diag = summary(&k);
            diag["skipped_pixels"] = json!(skipped);
            diag["ccr_witness"] = json!(ComplexDto::from(ccr_from_joint(&k)?));
            Ok((k, diag))
        }
        _ => unreachable!("mode check admits only reconstructable kinds"),
    }
}

fn build_list(list: &[ObservableDto]) -> Result<Vec<crate::quantum::ObservableSpec>> {
    list.iter().enumerate().map(|(i, o)| o.build(&format!("observables[{i}]"))).collect()
}

fn postselection_density(w: &WaveFunction, order: MeasurementOrder) -> Vec<f64> {
    match order {
        MeasurementOrder::XThenP => momentum_amplitudes(w.grid(), w.samples()).iter().map(|z| z.norm_sqr()).collect(),
        MeasurementOrder::PThenX => w.samples().iter().map(|z| z.norm_sqr()).collect(),
    }
}

fn spacing(w: &WaveFunction, order: MeasurementOrder) -> f64 {
    match order {
        MeasurementOrder::XThenP => w.grid().dp(),
        MeasurementOrder::PThenX => w.grid().dx(),
    }
}

/// Ground truth in the same conjugation convention as the matching reconstruction.
fn oracle_of(s: &Scenario) -> Result<PseudoDistribution> {
    match s {
        Scenario::DiscreteConditional(s) => {
            let (a, b) = s.observables()?;
            kd_conditional(&pure(&s.state)?, &a.build("a")?, &b.build("b")?, s.post_selection, s.floor)
        }
        Scenario::DiscreteJoint(s) => {
            Ok(kd_joint(&s.state.load()?.density(), &s.a.build("a")?, &s.b.build("b")?)?.conj())
        }
        Scenario::DiscreteNpoint(s) => kd_npoint(&pure(&s.state)?, &build_list(&s.observables)?),
        Scenario::CvConditional(s) => {
            let g = s.grid.build()?;
            conditional_brackets(&s.state.load(&g)?, s.order.into(), s.pixel)
        }
        Scenario::CvJoint(s) => {
            let g = s.grid.build()?;
            joint_kd_cv(&s.state.load(&g)?, s.order.into())
        }
        _ => unreachable!("experiment and ccr oracles are handled separately"),
    }
}

fn experiment_config(s: &ExperimentScenario, seed: Option<u64>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(s.order.into(), s.epsilon);
    cfg.shots = s.shots;
    cfg.seed = seed.unwrap_or(s.seed);
    cfg.shards = s.shards;
    cfg.count_floor = s.count_floor;
    cfg.probability_floor = s.probability_floor;
    cfg.pixels = s.pixels.clone();
    cfg.joint = s.joint;
    cfg.keep_histograms = s.histograms;
    cfg
}

fn axis_names(order: MeasurementOrder) -> (&'static str, &'static str) {
    // (conditioning axis, reconstructed axis)
    match order {
        MeasurementOrder::XThenP => ("p", "x"),
        MeasurementOrder::PThenX => ("x", "p"),
    }
}

fn conditional_rows(pixels: &[usize], qs: &[PseudoDistribution], se: Option<&[f64]>) -> Vec<Vec<f64>> {
    let mut rows = Vec::new();
    for (i, (&px, q)) in pixels.iter().zip(qs).enumerate() {
        let cond = q.conditioning.as_ref().map_or(f64::NAN, |c| c.value);
        for (y, z) in q.coords[0].iter().zip(q.values.data()) {
            let mut row = vec![px as f64, cond, *y, z.re, z.im];
            if let Some(se) = se {
                row.push(se[i]);
            }
            rows.push(row);
        }
    }
    rows
}

fn experiment(s: &ExperimentScenario, options: &RunOptions, out: &mut Artifacts) -> Result<Value> {
    let g = s.grid.build()?;
    let w = s.state.load(&g)?;
    let cfg = experiment_config(s, options.seed);
    let r = run_reconstruction(&w, &cfg)?;
    write_experiment(&r, cfg.order, out)?;
    let d = &r.diagnostics;
    let mut diag = json!({
        "seed": cfg.seed,
        "epsilon": cfg.epsilon,
        "shots_per_setting": cfg.shots,
        "settings": d.parameters.len() * 4,
        "total_shots": d.total_shots,
        "undetected": d.undetected,
        "reconstructed_pixels": d.reconstructed,
        "skipped_pixels": d.skipped,
        "skipped_mass": d.skipped_mass,
        "conditional_se": r.conditional_se,
        "char_fn_se": d.char_fn_se,
    });
    if let Some(k) = &r.joint {
        diag["joint"] = summary(k);
    }
    if options.emit_oracle {
        let oracles = r
            .diagnostics
            .reconstructed
            .iter()
            .map(|&px| conditional_brackets(&w, cfg.order, px))
            .collect::<Result<Vec<_>>>()?;
        let (c, a) = axis_names(cfg.order);
        write_table_csv(&out.path("oracle_conditionals.csv"), &["pixel", c, a, "re", "im"], conditional_rows(&d.reconstructed, &oracles, None))?;
        // largest deviation in units of the combined standard error (0 in analytic mode)
        let mut worst_abs: f64 = 0.0;
        let mut worst_z: f64 = 0.0;
        for ((q, o), &se) in r.conditionals.iter().zip(&oracles).zip(&r.conditional_se) {
            let err = q.max_abs_diff(o)?;
            worst_abs = worst_abs.max(err);
            if se > 0.0 {
                worst_z = worst_z.max(err / se);
            }
        }
        diag["oracle_check"] = json!({
            "max_abs_diff": worst_abs,
            "max_standardized_diff": worst_z,
            "tol": options.tol,
            "pass": worst_abs <= options.tol,
        });
        if r.joint.is_some() {
            out.distribution("oracle_joint", &joint_kd_cv(&w, cfg.order)?)?;
        }
    }
    Ok(diag)
}

fn write_experiment(r: &ExperimentResult, order: MeasurementOrder, out: &mut Artifacts) -> Result<()> {
    let d = &r.diagnostics;
    let (c, a) = axis_names(order);
    write_table_csv(
        &out.path("conditionals.csv"),
        &["pixel", c, a, "re", "im", "se"],
        conditional_rows(&d.reconstructed, &r.conditionals, Some(&r.conditional_se)),
    )?;
    let mut rows = Vec::new();
    for z in &r.char_fns {
        for (j, &k) in d.parameters.iter().enumerate() {
            rows.push(vec![z.pixel as f64, k, z.values[j].re, z.values[j].im, z.se_re[j], z.se_im[j]]);
        }
    }
    write_table_csv(&out.path("char_fn.csv"), &["pixel", "k", "re", "im", "se_re", "se_im"], rows)?;
    write_table_csv(
        &out.path("rates.csv"),
        &["pixel", "rate"],
        d.postselection_rates.iter().enumerate().map(|(px, &rate)| vec![px as f64, rate]),
    )?;
    if let Some(k) = &r.joint {
        out.distribution("joint", k)?;
        out.plot("plot.csv", k)?;
    }
    if !r.histograms.is_empty() {
        let mut rows = Vec::new();
        for h in &r.histograms {
            let q = match h.quadrature {
                Quadrature::Cos => 0.0,
                Quadrature::Sin => 1.0,
            };
            let an = match h.analyzer {
                Analyzer::HorizontalVertical => 0.0,
                Analyzer::Diagonal => 1.0,
                Analyzer::Circular => 2.0,
            };
            for px in 0..h.histogram.pixels() {
                let base = [h.sweep_index as f64, h.parameter, q, an, px as f64];
                rows.push([&base[..], &[1.0, h.histogram.plus(px) as f64]].concat());
                rows.push([&base[..], &[-1.0, h.histogram.minus(px) as f64]].concat());
            }
        }
        write_table_csv(
            &out.path("histograms.csv"),
            &["sweep_index", "k", "quadrature", "analyzer", "pixel", "outcome", "count"],
            rows,
        )?;
    }
    Ok(())
}

fn experiment_oracle(s: &ExperimentScenario, out: &mut Artifacts) -> Result<Value> {
    let g = s.grid.build()?;
    let w = s.state.load(&g)?;
    let order = s.order.into();
    let density = postselection_density(&w, order);
    let h = spacing(&w, order);
    let pixels: Vec<usize> = match &s.pixels {
        Some(p) => p.clone(),
        None => (0..g.points()).filter(|&px| density[px] * h > s.probability_floor).collect(),
    };
    let qs = pixels.iter().map(|&px| conditional_brackets(&w, order, px)).collect::<Result<Vec<_>>>()?;
    let (c, a) = axis_names(order);
    write_table_csv(&out.path("oracle_conditionals.csv"), &["pixel", c, a, "re", "im"], conditional_rows(&pixels, &qs, None))?;
    let k = joint_kd_cv(&w, order)?;
    out.distribution("oracle_joint", &k)?;
    Ok(json!({ "pixels": pixels, "joint": summary(&k) }))
}

fn ccr_exact(grid: &GridSpec, state: &CvStateSpec, out: &mut Artifacts) -> Result<Value> {
    let g = grid.build()?;
    let w = state.load(&g)?;
    let k = joint_kd_cv(&w, MeasurementOrder::XThenP)?;
    let kt = joint_kd_cv(&w, MeasurementOrder::PThenX)?;
    out.distribution("joint_x_then_p", &k)?;
    out.distribution("joint_p_then_x", &kt)?;
    let witness = ccr_from_joint(&kt)?;
    let expected = num_complex::Complex64::new(0.0, g.hbar());
    Ok(json!({
        "source": "exact",
        "witness": ComplexDto::from(witness),
        "expected": ComplexDto::from(expected),
        "deviation": (witness - expected).norm(),
        "edge_amplitude": w.edge_amplitude(),
    }))
}

fn ccr_experiment(s: &CcrScenario, e: &CcrExperiment, options: &RunOptions, out: &mut Artifacts) -> Result<Value> {
    let g = s.grid.build()?;
    let w = s.state.load(&g)?;
    let seed = options.seed.unwrap_or(e.seed);
    let runs = [MeasurementOrder::XThenP, MeasurementOrder::PThenX]
        .into_iter()
        .map(|order| {
            let mut cfg = ExperimentConfig::new(order, e.epsilon);
            cfg.shots = e.shots;
            cfg.seed = seed;
            cfg.shards = e.shards;
            cfg.count_floor = e.count_floor;
            cfg.joint = true;
            run_reconstruction(&w, &cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let est = ccr_from_experiments(&runs[0], &runs[1])?;
    if let (Some(k), Some(kt)) = (&runs[0].joint, &runs[1].joint) {
        out.distribution("joint_x_then_p", k)?;
        out.distribution("joint_p_then_x", kt)?;
    }
    let expected = num_complex::Complex64::new(0.0, g.hbar());
    let deviation = (est.witness - expected).norm();
    Ok(json!({
        "source": "experiment",
        "seed": seed,
        "epsilon": e.epsilon,
        "shots_per_setting": e.shots,
        "witness": ComplexDto::from(est.witness),
        "witness_se": est.se,
        "expected": ComplexDto::from(expected),
        "deviation": deviation,
        "standardized_deviation": if est.se > 0.0 { json!(deviation / est.se) } else { Value::Null },
    }))
}
