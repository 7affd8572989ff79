//! Declarative experiments: one TOML file describes one run, and a run emits a
//! JSON summary, CSV series and field snapshots into its output directory.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::chart::{self, max_stable_dt, pcf_rhs, step_flow, StepOptions};
use crate::cone::{class_trajectory, kahler_tau_star, tau_star, ConeProblem, Curve, Extended};
use crate::conventions::Conventions;
use crate::error::{Error, Result};
use crate::field::{HermitianField, C64};
use crate::genkahler::{run_twisted_flow, SplitPotential, TwistedOptions};
use crate::grf::{coupled_run, gauge_equivalence_check_with, lambda_lowest, trigonometric_state, LambdaOptions};
use crate::grid::{ChartGrid, Spectral};
use crate::homogeneous::flow::{collapse_profile, soliton_identity_defect, FlowOptions};
use crate::homogeneous::{
    blowdown, build_model, classify_asymptotics, distance_to_ray, fit_exponential_decay, integrate_with, invariant_gauge_defect, invariant_pcf_rhs_with,
    InvariantMetric, ModelName, SingularityType,
};
use crate::io::{write_csv, Snapshot};
use crate::ode::OdeOptions;
use crate::potential::{flat_distance, metric_from_alpha, random_modes, run_potential_flow, PotentialForm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    TorusPcf,
    PotentialPcf,
    Homogeneous,
    GrfCoupled,
    TwistedMa,
    Cone,
    FixedpointChecks,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    /// Points per axis; powers of two, at least 8.
    #[serde(default = "default_n")]
    pub n: [usize; 4],
    /// Time step; defaults to the CFL bound for grid flows.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
}

fn default_n() -> [usize; 4] {
    [8; 4]
}

fn default_cfl() -> f64 {
    StepOptions::default().cfl
}

impl Default for GridBlock {
    fn default() -> Self {
        Self { n: default_n(), dt: None, cfl: default_cfl() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceBlock {
    /// Fixed-point right-hand-side norms.
    pub residual: f64,
    /// Agreement of the three right-hand-side formulations.
    pub cross_check: f64,
    /// Gauge-equivalence defect.
    pub gauge: f64,
    /// Final distance to a flat metric.
    pub flat: f64,
    /// `|det W − 1|`.
    pub det_w: f64,
    /// Relative gap between measured `dF/dt` and the monotonicity integrand.
    pub rate: f64,
    pub ode_rtol: f64,
    pub ode_atol: f64,
}

impl Default for ToleranceBlock {
    fn default() -> Self {
        Self { residual: 1e-10, cross_check: 1e-5, gauge: 1e-5, flat: 1e-4, det_w: 1e-7, rate: 0.1, ode_rtol: 1e-10, ode_atol: 1e-12 }
    }
}

/// Geometry parameters; which fields are required depends on the experiment.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Geometry {
    pub model: Option<String>,
    pub initial: Option<[f64; 4]>,
    pub t_end: Option<f64>,
    pub normalized: bool,
    pub blowdown_scales: Vec<f64>,
    pub amplitude: Option<f64>,
    pub max_mode: Option<i32>,
    pub epsilon: Option<f64>,
    pub curves: Vec<Curve>,
    pub gamma_pairing: Option<f64>,
    pub c1_polarization: Option<f64>,
    /// Deliberately wrong `d^c` sign, for negative controls.
    pub flip_dc_sign: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    /// Output subdirectory under the output root; defaults to the config name.
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub tolerance: ToleranceBlock,
    #[serde(default)]
    pub geometry: Geometry,
}

fn config_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), message: message.into() }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_error(path, format!("must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(s).map_err(|e| config_error("", e.to_string().trim().to_string()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(if path == "." { "" } else { &path }, e.into_inner().to_string().trim().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn conventions(&self) -> Conventions {
        if self.geometry.flip_dc_sign {
            Conventions::flipped()
        } else {
            Conventions::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerance;
        for (name, v) in [
            ("residual", t.residual),
            ("cross_check", t.cross_check),
            ("gauge", t.gauge),
            ("flat", t.flat),
            ("det_w", t.det_w),
            ("rate", t.rate),
            ("ode_rtol", t.ode_rtol),
            ("ode_atol", t.ode_atol),
        ] {
            positive(&format!("tolerance.{name}"), v)?;
        }
        positive("grid.cfl", self.grid.cfl)?;
        if let Some(dt) = self.grid.dt {
            positive("grid.dt", dt)?;
        }
        for (a, &n) in self.grid.n.iter().enumerate() {
            if n < 8 || !n.is_power_of_two() {
                return Err(config_error(&format!("grid.n[{a}]"), format!("must be a power of two >= 8, got {n}")));
            }
        }
        let g = &self.geometry;
        if let Some(v) = g.t_end {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(config_error("geometry.t_end", format!("must be non-negative and finite, got {v}")));
            }
        }
        for (name, v) in [("amplitude", g.amplitude), ("epsilon", g.epsilon), ("gamma_pairing", g.gamma_pairing)] {
            if let Some(v) = v {
                positive(&format!("geometry.{name}"), v)?;
            }
        }
        if let Some(m) = g.max_mode {
            if m < 1 {
                return Err(config_error("geometry.max_mode", format!("must be at least 1, got {m}")));
            }
        }
        for (i, &s) in g.blowdown_scales.iter().enumerate() {
            positive(&format!("geometry.blowdown_scales[{i}]"), s)?;
        }
        match self.experiment {
            ExperimentKind::Homogeneous => {
                let name = g.model.as_deref().ok_or_else(|| config_error("geometry.model", "required for homogeneous experiments"))?;
                name.parse::<ModelName>().map_err(|e| config_error("geometry.model", e.to_string()))?;
                if let Some(p) = g.initial {
                    InvariantMetric::new(p).map_err(|e| config_error("geometry.initial", e.to_string()))?;
                }
            }
            ExperimentKind::Cone => {
                for (i, c) in g.curves.iter().enumerate() {
                    positive(&format!("geometry.curves[{i}].area"), c.area)?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn grid(&self) -> Result<ChartGrid> {
        ChartGrid::new(self.grid.n, [2.0 * PI; 4])
    }

    fn step_options(&self) -> StepOptions {
        StepOptions { cfl: self.grid.cfl, ..StepOptions::default() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The statement this check certifies.
    pub anchor: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Pass,
    CriterionFailure,
    Singularity,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub status: RunStatus,
    pub verdict: String,
    pub checks: Vec<Check>,
    /// Measured quantities: residuals, fitted rates, classifications.
    pub values: BTreeMap<String, Value>,
    /// Diagnostics of a halted run.
    pub singularity: Option<String>,
    pub artifacts: Vec<String>,
}

struct Recorder<'a> {
    dir: &'a Path,
    checks: Vec<Check>,
    values: BTreeMap<String, Value>,
    artifacts: Vec<String>,
    verdict: String,
}

impl Recorder<'_> {
    /// Records a check that passes when `value <= tolerance`.
    fn check(&mut self, name: &str, anchor: &str, value: f64, tolerance: f64) {
        self.checks.push(Check { name: name.into(), anchor: anchor.into(), value, tolerance, passed: value <= tolerance });
    }

    fn value(&mut self, key: &str, v: impl Serialize) {
        self.values.insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        write_csv(&self.dir.join(name), header, rows)?;
        self.artifacts.push(name.into());
        Ok(())
    }

    fn snapshot(&mut self, name: &str, snap: &Snapshot) -> Result<()> {
        snap.write(&self.dir.join(name))?;
        self.artifacts.push(name.into());
        Ok(())
    }
}

/// Runs an experiment and writes its artifacts into `dir`. A singularity
/// halts the run but still produces a summary with the diagnostics.
pub fn run(config: &ExperimentConfig, dir: &Path) -> Result<Summary> {
    config.validate()?;
    std::fs::create_dir_all(dir)?;
    let mut rec = Recorder { dir, checks: Vec::new(), values: BTreeMap::new(), artifacts: Vec::new(), verdict: String::new() };
    let result = match config.experiment {
        ExperimentKind::TorusPcf => torus_pcf(config, &mut rec),
        ExperimentKind::PotentialPcf => potential_pcf(config, &mut rec),
        ExperimentKind::Homogeneous => homogeneous(config, &mut rec),
        ExperimentKind::GrfCoupled => grf_coupled(config, &mut rec),
        ExperimentKind::TwistedMa => twisted_ma(config, &mut rec),
        ExperimentKind::Cone => cone(config, &mut rec),
        ExperimentKind::FixedpointChecks => fixedpoint_checks(config, &mut rec),
    };
    let singularity = match result {
        Ok(()) => None,
        Err(e @ (Error::Singularity { .. } | Error::Degenerate { .. } | Error::TypeChange { .. })) => Some(e.to_string()),
        Err(e) => return Err(e),
    };
    let status = if singularity.is_some() {
        RunStatus::Singularity
    } else if rec.checks.iter().all(|c| c.passed) {
        RunStatus::Pass
    } else {
        RunStatus::CriterionFailure
    };
    if let Some(s) = &singularity {
        rec.verdict = format!("halted: {s}");
    }
    rec.artifacts.push("summary.json".into());
    let summary = Summary {
        experiment: config.experiment,
        seed: config.seed,
        status,
        verdict: rec.verdict,
        checks: rec.checks,
        values: rec.values,
        singularity,
        artifacts: rec.artifacts,
    };
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

fn time_step(config: &ExperimentConfig, grid: &ChartGrid) -> f64 {
    let limit = max_stable_dt(grid, &config.step_options());
    config.grid.dt.unwrap_or(limit)
}

fn torus_pcf(config: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let g = &config.geometry;
    let grid = config.grid()?;
    let s = Spectral::new(&grid);
    let modes = random_modes(config.seed, g.amplitude.unwrap_or(0.2), g.max_mode.unwrap_or(1));
    let w0 = metric_from_alpha(&PotentialForm::from_modes(&grid, &modes)?, &s)?;
    let (_, cross) = pcf_rhs(&w0, &s)?;
    rec.check("formulation_agreement", "the three forms of the pluriclosed flow right-hand side agree", cross.max(), config.tolerance.cross_check);
    rec.value("cross_check", &cross);
    let t_end = g.t_end.unwrap_or(1.0);
    let dt = time_step(config, &grid);
    let steps = (t_end / dt).ceil() as usize;
    let dt = if steps > 0 { t_end / steps as f64 } else { dt };
    let reference_volume = w0.determinant().iter().sum::<f64>() / w0.len() as f64;
    let conv = config.conventions();
    let opts = config.step_options();
    let mut w = w0.clone();
    let mut rows = Vec::new();
    let row = |w: &HermitianField, t: f64| -> Vec<f64> {
        let rate = chart::flow_rate(w, &s, &conv);
        vec![t, w.min_eigenvalue().0, rate.sup_norm(), flat_distance(w, reference_volume)]
    };
    rows.push(row(&w, 0.0));
    let mut outcome = Ok(());
    for i in 0..steps {
        match step_flow(&w, dt, &s, &opts, i as f64 * dt) {
            Ok(next) => w = next,
            Err(e) => {
                outcome = Err(e);
                break;
            }
        }
        rows.push(row(&w, (i + 1) as f64 * dt));
    }
    rec.csv("series.csv", &["t", "min_eigenvalue", "rate_sup", "flat_distance"], &rows)?;
    rec.snapshot("initial.pcfsnap", &Snapshot::from_hermitian(&w0).with_meta("t", 0.0))?;
    rec.snapshot("final.pcfsnap", &Snapshot::from_hermitian(&w).with_meta("t", rows.last().map_or(0.0, |r| r[0])))?;
    rec.value("dt", dt);
    rec.value("final_flat_distance", rows.last().map_or(f64::NAN, |r| r[3]));
    outcome?;
    rec.verdict = format!("formulations agree to {:.1e}; flow ran to t = {t_end}", cross.max());
    Ok(())
}

fn potential_pcf(config: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let g = &config.geometry;
    let grid = config.grid()?;
    let s = Spectral::new(&grid);
    let eps = g.epsilon.unwrap_or(0.2);
    let mut a0 = PotentialForm::from_fn(&grid, |x| [C64::from_polar(eps, x[3]), C64::new(0.0, 0.0)]);
    if let Some(amp) = g.amplitude {
        let extra = PotentialForm::from_modes(&grid, &random_modes(config.seed, amp, g.max_mode.unwrap_or(1)))?;
        for c in 0..2 {
            for (x, y) in a0.alpha[c].iter_mut().zip(&extra.alpha[c]) {
                *x += y;
            }
        }
    }
    let t_end = g.t_end.unwrap_or(20.0);
    let dt = time_step(config, &grid);
    let steps = ((t_end / dt).ceil() as usize).max(1);
    let dt = t_end / steps as f64;
    let sample_every = (steps / 100).max(1);
    let run = run_potential_flow(&a0, t_end, dt, sample_every, &s)?;
    let rows: Vec<Vec<f64>> = run.samples.iter().map(|x| vec![x.t, x.flat_distance, x.det_w_defect, x.torsion_l2, x.min_eigenvalue]).collect();
    rec.csv("series.csv", &["t", "flat_distance", "det_w_defect", "torsion_l2", "min_eigenvalue"], &rows)?;
    let last = run.samples.last().expect("at least one sample");
    let det = run.samples.iter().map(|x| x.det_w_defect).fold(0.0, f64::max);
    let tail: Vec<&_> = run.samples.iter().filter(|x| x.t >= 0.5 * t_end).collect();
    let increases = tail.windows(2).filter(|w| w[1].flat_distance > w[0].flat_distance).count();
    let (times, dist): (Vec<f64>, Vec<f64>) = tail.iter().map(|x| (x.t, x.flat_distance)).unzip();
    if let Ok((rate, r2)) = fit_exponential_decay(&times, &dist) {
        rec.value("flat_distance_decay_rate", rate);
        rec.value("flat_distance_fit_r2", r2);
    }
    rec.check("flat_distance", "pluriclosed flow on the torus converges to a flat Kähler metric", last.flat_distance, config.tolerance.flat);
    rec.check("det_w", "the generalized metric has det W = 1", det, config.tolerance.det_w);
    rec.check("tail_increases", "the flat distance decreases monotonically in the tail", increases as f64, 0.0);
    rec.value("dt", dt);
    rec.snapshot("final_metric.pcfsnap", &Snapshot::from_hermitian(&metric_from_alpha(&run.final_alpha, &s)?).with_meta("t", t_end))?;
    let mut alpha = Snapshot::new(&grid).with_meta("t", t_end);
    alpha.push_complex("alpha_1", run.final_alpha.alpha[0].clone());
    alpha.push_complex("alpha_2", run.final_alpha.alpha[1].clone());
    rec.snapshot("final_alpha.pcfsnap", &alpha)?;
    rec.verdict = format!("flat distance {:.2e} at t = {t_end}", last.flat_distance);
    Ok(())
}

fn collapse_label(bounded: usize) -> &'static str {
    match bounded {
        0 => "point collapse",
        1 => "circle collapse",
        _ => "no collapse",
    }
}

fn homogeneous(config: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let g = &config.geometry;
    let name: ModelName = g.model.as_deref().unwrap_or_default().parse()?;
    let model = build_model(name)?;
    let m0 = InvariantMetric::new(g.initial.unwrap_or([1.5, 1.0, 0.2, 0.1]))?;
    let t_end = g.t_end.unwrap_or(2000.0);
    let opts = FlowOptions {
        ode: OdeOptions { rtol: config.tolerance.ode_rtol, atol: config.tolerance.ode_atol, ..OdeOptions::default() },
        normalized: g.normalized,
        conventions: config.conventions(),
        ..FlowOptions::default()
    };
    let traj = integrate_with(&model, &m0, t_end, &opts)?;
    let rows: Vec<Vec<f64>> = (0..traj.times.len())
        .map(|k| {
            let p = traj.states[k].params;
            vec![traj.times[k], p[0], p[1], p[2], p[3], traj.curvature[k], traj.volume[k], traj.eigenvalues[k].0, traj.eigenvalues[k].1]
        })
        .collect();
    rec.csv("trajectory.csv", &["t", "h11", "h22", "re_h12", "im_h12", "rm_norm", "volume", "eig_min", "eig_max"], &rows)?;
    rec.value("model", name.as_str());
    rec.value("final_metric", traj.last().params);
    if let Some(h) = &traj.halted {
        return Err(Error::Singularity { time: traj.t_end(), reason: h.clone() });
    }
    let (gauge, _) = invariant_gauge_defect(&model, &m0, &config.conventions())?;
    rec.value("gauge_defect_initial", gauge);
    if name == ModelName::Hopf {
        let (times, dist): (Vec<f64>, Vec<f64>) = traj
            .times
            .iter()
            .zip(&traj.states)
            .map(|(&t, m)| (t, distance_to_ray(m, &InvariantMetric::diagonal(1.0, 1.0))))
            .filter(|&(_, d)| d > 1e-7 && d < 1e-2)
            .unzip();
        if let Ok((rate, r2)) = fit_exponential_decay(&times, &dist) {
            rec.value("hopf_ray_decay_rate", rate);
            rec.value("hopf_ray_fit_r2", r2);
            if rate > 0.0 && r2 > 0.99 {
                rec.verdict = format!("converges exponentially to the Hopf ray (rate {rate:.3})");
            }
        }
        let fixed = InvariantMetric::diagonal(1.0, 1.0);
        let r = invariant_pcf_rhs_with(&model, &fixed, &config.conventions())?;
        rec.check("hopf_rhs", "the Hopf metric is a fixed point of pluriclosed flow", r.iter().map(|x| x * x).sum::<f64>().sqrt(), config.tolerance.residual);
    }
    if traj.t_end() < 100.0 {
        if rec.verdict.is_empty() {
            rec.verdict = format!("integrated to t = {}; too short to classify", traj.t_end());
        }
        rec.value("collapse", collapse_profile(&traj));
        return Ok(());
    }
    let class = classify_asymptotics(&traj)?;
    let label = match class.kind {
        SingularityType::InfiniteIII => format!("type III, {}", collapse_label(class.collapse.bounded_directions)),
        SingularityType::InfiniteIIb if name == ModelName::Hopf => "type IIb, converges to the Hopf ray".into(),
        SingularityType::InfiniteIIb => "type IIb".into(),
        SingularityType::FiniteTimeI => "finite-time singularity".into(),
        SingularityType::Inconclusive => "inconclusive".into(),
    };
    rec.value("classification", &class);
    let scales: Vec<f64> = if g.blowdown_scales.is_empty() { vec![t_end / 20.0, t_end / 2.0] } else { g.blowdown_scales.clone() };
    let scales: Vec<f64> = scales.into_iter().filter(|&s| 2.0 * s <= traj.t_end()).collect();
    if !g.normalized && !scales.is_empty() {
        let samples = blowdown(&traj, &scales)?;
        let rows: Vec<Vec<f64>> = samples.iter().map(|b| [vec![b.s], b.metric.params.to_vec(), b.increment.to_vec(), vec![b.defect]].concat()).collect();
        rec.csv(
            "blowdown.csv",
            &["s", "h11", "h22", "re_h12", "im_h12", "inc_h11", "inc_h22", "inc_re_h12", "inc_im_h12", "defect"],
            &rows,
        )?;
        let defects: Vec<f64> = scales.iter().map(|&s| soliton_identity_defect(&model, &traj, s)).collect::<Result<_>>()?;
        rec.value("blowdown", &samples);
        rec.value("soliton_identity_defect", defects);
    }
    if rec.verdict.is_empty() {
        rec.verdict = label;
    }
    Ok(())
}

fn grf_coupled(config: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let g = &config.geometry;
    let grid = config.grid()?;
    let (g0, h0) = trigonometric_state(&grid, g.epsilon.unwrap_or(0.2));
    let t_end = g.t_end.unwrap_or(0.4);
    let dt = config.grid.dt.unwrap_or(0.02);
    let lambda = lambda_lowest(&g0, &h0, &LambdaOptions::default())?;
    rec.value("lambda_initial", lambda.lambda);
    let samples = coupled_run(&g0, &h0, &vec![grid.volume().ln(); grid.len()], t_end, dt, 1)?;
    let rows: Vec<Vec<f64>> = samples.iter().map(|x| vec![x.t, x.f_value, x.integrand, x.mass]).collect();
    rec.csv("monotonicity.csv", &["t", "F", "integrand", "weighted_mass"], &rows)?;
    let slack = 1e-3 * (dt + grid.min_spacing().powi(2));
    let (mut drop, mut gap) = (0.0f64, 0.0f64);
    for w in samples.windows(2) {
        drop = drop.max(w[0].f_value - w[1].f_value);
        let measured = (w[1].f_value - w[0].f_value) / (w[1].t - w[0].t);
        let predicted = 0.5 * (w[0].integrand + w[1].integrand);
        gap = gap.max((measured - predicted).abs() / predicted.abs());
    }
    rec.check("f_decrease", "F is monotone nondecreasing along the coupled flow", drop, slack);
    rec.check("rate_gap", "dF/dt equals the monotonicity integrand", gap, config.tolerance.rate);
    rec.verdict = format!("F rose from {:.6} to {:.6}", samples[0].f_value, samples.last().expect("samples").f_value);
    Ok(())
}

fn twisted_ma(config: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let g = &config.geometry;
    let grid = config.grid()?;
    let s = Spectral::new(&grid);
    let amp = g.amplitude.unwrap_or(0.15);
    let s0 = SplitPotential::from_fn(&grid, |x| amp * (x[0].sin() + (x[1] - x[2]).cos() - x[3].sin()));
    let t_end = g.t_end.unwrap_or(4.0);
    let dt = time_step(config, &grid).min(0.05);
    let steps = ((t_end / dt).ceil() as usize).max(1);
    let dt = t_end / steps as f64;
    let run = run_twisted_flow(&s0, t_end, &TwistedOptions { dt, sample_every: (steps / 50).max(1), check_every: 5 }, &s)?;
    let rows: Vec<Vec<f64>> = run.samples.iter().map(|x| vec![x.t, x.metric_deviation, x.oscillation, x.consistency.unwrap_or(f64::NAN)]).collect();
    rec.csv("series.csv", &["t", "metric_deviation", "oscillation", "tensor_consistency"], &rows)?;
    let (times, dev): (Vec<f64>, Vec<f64>) = run.samples.iter().map(|x| (x.t, x.metric_deviation)).unzip();
    if let Ok((rate, r2)) = fit_exponential_decay(&times, &dev) {
        rec.value("deviation_decay_rate", rate);
        rec.value("deviation_fit_r2", r2);
    }
    rec.check("tensor_consistency", "the scalar flow induces the pluriclosed flow of its metric", run.max_consistency(), config.tolerance.cross_check);
    let mut snap = Snapshot::new(&grid).with_meta("t", t_end);
    snap.push_real("f", run.potential.f.clone());
    rec.snapshot("final_potential.pcfsnap", &snap)?;
    rec.verdict = format!("metric deviation {:.2e} at t = {t_end}", dev.last().copied().unwrap_or(f64::NAN));
    Ok(())
}

fn cone(config: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let g = &config.geometry;
    let p = ConeProblem { curves: g.curves.clone(), gamma_pairing: g.gamma_pairing, c1_polarization: g.c1_polarization };
    let tau = if p.is_kahler() {
        let k = kahler_tau_star(&p)?;
        rec.value("incomplete", k.incomplete);
        k.value
    } else {
        tau_star(&p)?
    };
    rec.value("tau_star", tau);
    let horizon = match tau {
        Extended::Finite(x) => x,
        Extended::Infinite => g.t_end.unwrap_or(10.0),
    };
    let rows: Vec<Vec<f64>> = (0..=50)
        .map(|i| {
            let t = horizon * i as f64 / 50.0;
            class_trajectory(&p, t).map(|c| [vec![t], c.curves].concat())
        })
        .collect::<Result<_>>()?;
    let names: Vec<String> = p.curves.iter().map(|c| format!("area_{}", c.name)).collect();
    let header: Vec<&str> = std::iter::once("t").chain(names.iter().map(String::as_str)).collect();
    rec.csv("class_trajectory.csv", &header, &rows)?;
    rec.verdict = format!("tau* = {tau}");
    Ok(())
}

fn fixedpoint_checks(config: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let conv = config.conventions();
    let grid = config.grid()?;
    let s = Spectral::new(&grid);
    let flat = HermitianField::identity(&grid);
    let flat_rhs = chart::flow_rate(&flat, &s, &conv).sup_norm();
    rec.check("flat_torus_rhs", "the flat torus is a fixed point", flat_rhs, config.tolerance.residual);
    let hopf = build_model(ModelName::Hopf)?;
    let r = invariant_pcf_rhs_with(&hopf, &InvariantMetric::diagonal(1.0, 1.0), &conv)?;
    rec.check("hopf_rhs", "the Hopf metric is a fixed point of pluriclosed flow", r.iter().map(|x| x * x).sum::<f64>().sqrt(), config.tolerance.residual);
    let g = &config.geometry;
    let modes = random_modes(config.seed, g.amplitude.unwrap_or(0.2), g.max_mode.unwrap_or(1));
    let w = metric_from_alpha(&PotentialForm::from_modes(&grid, &modes)?, &s)?;
    let report = gauge_equivalence_check_with(&w, &s, &conv)?;
    rec.check("gauge_equivalence", "pluriclosed flow is generalized Ricci flow up to the Lee-field gauge", report.defect, config.tolerance.gauge);
    rec.value("gauge_report", &report);
    let failed = rec.checks.iter().filter(|c| !c.passed).count();
    rec.verdict = if failed == 0 { "all fixed-point checks below tolerance".into() } else { format!("{failed} fixed-point checks above tolerance") };
    Ok(())
}

/// Structure data and basic invariants of a homogeneous model.
pub fn describe_model(name: ModelName) -> Result<Value> {
    let model = build_model(name)?;
    let mut brackets = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            let terms: Vec<String> = (0..4)
                .filter(|&k| model.c[i][j][k] != 0.0)
                .map(|k| format!("{}e{k}", model.c[i][j][k]))
                .collect();
            if !terms.is_empty() {
                brackets.push(format!("[e{i},e{j}] = {}", terms.join(" + ")));
            }
        }
    }
    let unit = InvariantMetric::diagonal(1.0, 1.0);
    let conv = Conventions::default();
    let (gauge, lie) = invariant_gauge_defect(&model, &unit, &conv)?;
    Ok(json!({
        "model": name.as_str(),
        "brackets": brackets,
        "complex_structure": "J e0 = e1, J e2 = e3",
        "jacobi_defect": model.jacobi_defect(),
        "nijenhuis_defect": model.nijenhuis_defect(),
        "rhs_at_unit_metric": invariant_pcf_rhs_with(&model, &unit, &conv)?,
        "gauge_defect_at_unit_metric": gauge,
        "lee_lie_derivative_at_unit_metric": lie,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let d = std::env::temp_dir().join(format!("pcf-experiment-{name}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&d);
        d
    }

    #[test]
    fn validation_reports_field_paths() {
        let err = ExperimentConfig::from_toml_str("experiment = \"cone\"\n[tolerance]\nflat = -1.0\n").unwrap_err();
        assert!(matches!(&err, Error::Config { path, .. } if path == "tolerance.flat"), "{err}");
        let err = ExperimentConfig::from_toml_str("experiment = \"homogeneous\"\n").unwrap_err();
        assert!(matches!(&err, Error::Config { path, .. } if path == "geometry.model"), "{err}");
        let err = ExperimentConfig::from_toml_str("experiment = \"cone\"\n[grid]\nn = [8, 8, 12, 8]\n").unwrap_err();
        assert!(matches!(&err, Error::Config { path, .. } if path == "grid.n[2]"), "{err}");
        let err = ExperimentConfig::from_toml_str("experiment = \"cone\"\n[geometry]\ncurvs = []\n").unwrap_err();
        assert!(matches!(&err, Error::Config { path, .. } if path.starts_with("geometry")), "{err}");
        let err = ExperimentConfig::from_toml_str("experiment = \"torus\"\n").unwrap_err();
        assert!(matches!(&err, Error::Config { path, .. } if path == "experiment"), "{err}");
    }

    #[test]
    fn cone_exceptional_curve() {
        let cfg = ExperimentConfig::from_toml_str(
            "experiment = \"cone\"\n[geometry]\ngamma_pairing = 1.0\ncurves = [{ name = \"E\", self_intersection = -1, canonical_degree = -1, area = 2.5 }]\n",
        )
        .unwrap();
        let dir = tmp("cone");
        let s = run(&cfg, &dir).unwrap();
        assert_eq!(s.values["tau_star"], json!(2.5));
        assert_eq!(s.status, RunStatus::Pass);
        assert!(dir.join("class_trajectory.csv").exists() && dir.join("summary.json").exists());
    }

    #[test]
    fn homogeneous_sol0_verdict() {
        let cfg = ExperimentConfig::from_toml_str("experiment = \"homogeneous\"\n[geometry]\nmodel = \"Sol0_4\"\nt_end = 2000.0\n").unwrap();
        let s = run(&cfg, &tmp("sol0")).unwrap();
        assert_eq!(s.verdict, "type III, circle collapse");
    }

    #[test]
    fn fixedpoint_checks_pass_and_flipped_sign_fails() {
        let cfg = ExperimentConfig::from_toml_str("experiment = \"fixedpoint_checks\"\n").unwrap();
        let s = run(&cfg, &tmp("fixed")).unwrap();
        assert_eq!(s.status, RunStatus::Pass, "{:?}", s.checks);
        let names: Vec<&str> = s.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["flat_torus_rhs", "hopf_rhs", "gauge_equivalence"]);
        let cfg = ExperimentConfig::from_toml_str("experiment = \"fixedpoint_checks\"\n[geometry]\nflip_dc_sign = true\n").unwrap();
        let s = run(&cfg, &tmp("flipped")).unwrap();
        assert_eq!(s.status, RunStatus::CriterionFailure);
    }

    #[test]
    fn reruns_are_bit_identical() {
        let cfg = ExperimentConfig::from_toml_str("experiment = \"torus_pcf\"\nseed = 3\n[geometry]\nt_end = 0.1\n").unwrap();
        let (a, b) = (tmp("rerun-a"), tmp("rerun-b"));
        run(&cfg, &a).unwrap();
        run(&cfg, &b).unwrap();
        for f in ["series.csv", "summary.json", "final.pcfsnap"] {
            assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
        }
    }

    #[test]
    fn singularity_keeps_diagnostics() {
        let cfg = ExperimentConfig::from_toml_str("experiment = \"homogeneous\"\n[geometry]\nmodel = \"Hopf\"\nt_end = 50.0\nflip_dc_sign = true\n").unwrap();
        let dir = tmp("flipped-hopf");
        let s = run(&cfg, &dir).unwrap();
        assert_eq!(s.status, RunStatus::Singularity, "{}", s.verdict);
        assert!(s.singularity.is_some() && dir.join("trajectory.csv").exists());
    }

    #[test]
    fn describe_lists_brackets() {
        let d = describe_model(ModelName::Nil3xR).unwrap();
        assert_eq!(d["brackets"], json!(["[e0,e1] = 1e2"]));
        assert!(d["jacobi_defect"].as_f64().unwrap() < 1e-14);
    }
}
