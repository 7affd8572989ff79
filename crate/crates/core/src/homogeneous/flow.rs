//! Integration of the invariant pluriclosed-flow ODE, asymptotic
//! classification, collapse profiles and blowdown limits.

use serde::{Deserialize, Serialize};

use super::algebra::{invariant_pcf_rhs_with, Invariant, InvariantMetric};
use super::lie::{LieModel, ModelName};
use crate::conventions::Conventions;
use crate::error::{Error, Result};
use crate::ode::{dopri5, OdeOptions, Stop};

#[derive(Clone, Copy, Debug)]
pub struct FlowOptions {
    pub ode: OdeOptions,
    /// Halt when the smallest metric eigenvalue drops below this.
    pub min_eigenvalue: f64,
    /// Halt when `|Rm|` exceeds this.
    pub max_curvature: f64,
    /// Integrate `ĝ = g/(1+t)` instead of `g`.
    pub normalized: bool,
    pub conventions: Conventions,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            ode: OdeOptions::default(),
            min_eigenvalue: 1e-8,
            max_curvature: 1e8,
            normalized: false,
            conventions: Conventions::default(),
        }
    }
}

/// Accepted steps of an invariant flow. `states` hold `g` (or `g/(1+t)` when
/// normalized); `curvature` always refers to the unnormalized metric.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub model: ModelName,
    pub normalized: bool,
    pub times: Vec<f64>,
    pub states: Vec<InvariantMetric>,
    pub rates: Vec<[f64; 4]>,
    pub curvature: Vec<f64>,
    pub volume: Vec<f64>,
    pub eigenvalues: Vec<(f64, f64)>,
    /// `None` when the run reached `t_end`.
    pub halted: Option<String>,
}

impl Trajectory {
    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn last(&self) -> &InvariantMetric {
        self.states.last().unwrap()
    }

    /// Unnormalized metric at sample `k`.
    pub fn metric(&self, k: usize) -> InvariantMetric {
        if self.normalized {
            self.states[k].scaled(1.0 + self.times[k])
        } else {
            self.states[k]
        }
    }

    /// Cubic Hermite interpolation of the stored (possibly normalized) state.
    pub fn at(&self, t: f64) -> Result<InvariantMetric> {
        let n = self.times.len();
        if !(t >= self.times[0] && t <= self.times[n - 1]) {
            return Err(Error::Parameter(format!("time {t} outside trajectory")));
        }
        let k = match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        if n == 1 {
            return Ok(self.states[0]);
        }
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (h00, h10, h01, h11) = (
            2.0 * s.powi(3) - 3.0 * s * s + 1.0,
            s.powi(3) - 2.0 * s * s + s,
            -2.0 * s.powi(3) + 3.0 * s * s,
            s.powi(3) - s * s,
        );
        let (y0, y1) = (&self.states[k].params, &self.states[k + 1].params);
        let (d0, d1) = (&self.rates[k], &self.rates[k + 1]);
        Ok(InvariantMetric { params: std::array::from_fn(|i| h00 * y0[i] + h10 * h * d0[i] + h01 * y1[i] + h11 * h * d1[i]) })
    }

    /// Unnormalized metric at time `t`.
    pub fn metric_at(&self, t: f64) -> Result<InvariantMetric> {
        let m = self.at(t)?;
        Ok(if self.normalized { m.scaled(1.0 + t) } else { m })
    }
}

fn rate(model: &LieModel, y: &[f64], t: f64, opts: &FlowOptions) -> Result<[f64; 4]> {
    let m = InvariantMetric { params: [y[0], y[1], y[2], y[3]] };
    let r = invariant_pcf_rhs_with(model, &m, &opts.conventions)?;
    if opts.normalized {
        // the rate is invariant under scaling, so dĝ/dt = (rhs(ĝ) − ĝ)/(1+t)
        Ok(std::array::from_fn(|i| (r[i] - y[i]) / (1.0 + t)))
    } else {
        Ok(r)
    }
}

/// Integrates the invariant pluriclosed flow from `m0` up to `t_end`.
pub fn integrate(model: &LieModel, m0: &InvariantMetric, t_end: f64, normalized: bool) -> Result<Trajectory> {
    integrate_with(model, m0, t_end, &FlowOptions { normalized, ..Default::default() })
}

pub fn integrate_with(model: &LieModel, m0: &InvariantMetric, t_end: f64, opts: &FlowOptions) -> Result<Trajectory> {
    m0.validate()?;
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::Parameter(format!("t_end must be positive and finite, got {t_end}")));
    }
    let mut traj = Trajectory {
        model: model.name,
        normalized: opts.normalized,
        times: vec![],
        states: vec![],
        rates: vec![],
        curvature: vec![],
        volume: vec![],
        eigenvalues: vec![],
        halted: None,
    };
    let mut failure: Option<Error> = None;
    let observe = |t: f64, y: &[f64]| -> Option<String> {
        let m = InvariantMetric { params: [y[0], y[1], y[2], y[3]] };
        let scale = if opts.normalized { 1.0 + t } else { 1.0 };
        let ev = m.eigenvalues();
        let (l0, l1) = (ev.0 * scale, ev.1 * scale);
        if !(l0 > opts.min_eigenvalue) {
            return Some(format!("metric eigenvalue {l0:.3e} below {:.1e} at t = {t}", opts.min_eigenvalue));
        }
        let full = m.scaled(scale);
        let rm = match Invariant::new(model, full.riemannian(), &opts.conventions) {
            Ok(inv) => inv.rm_norm(),
            Err(e) => return Some(e.to_string()),
        };
        if rm > opts.max_curvature {
            return Some(format!("|Rm| = {rm:.3e} above {:.1e} at t = {t}", opts.max_curvature));
        }
        let r = match rate(model, y, t, opts) {
            Ok(r) => r,
            Err(e) => return Some(e.to_string()),
        };
        traj.times.push(t);
        traj.states.push(m);
        traj.rates.push(r);
        traj.curvature.push(rm);
        traj.volume.push(l0 * l1);
        traj.eigenvalues.push((l0, l1));
        None
    };
    let f = |t: f64, y: &[f64]| -> Result<Vec<f64>> {
        match rate(model, y, t, opts) {
            Ok(r) => Ok(r.to_vec()),
            Err(e) => {
                failure.get_or_insert(e);
                Err(Error::Singularity { time: t, reason: "metric left the positive cone".into() })
            }
        }
    };
    match dopri5(f, 0.0, &m0.params, t_end, &opts.ode, observe) {
        Ok(Stop::Finished) => {}
        Ok(Stop::Halted(r)) => traj.halted = Some(r),
        Err(Error::Singularity { time, reason }) => {
            traj.halted = Some(match failure {
                Some(e) => format!("{e} near t = {time}"),
                None => reason,
            })
        }
        Err(e) => return Err(e),
    }
    Ok(traj)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingularityType {
    #[serde(rename = "finite_time_I")]
    FiniteTimeI,
    #[serde(rename = "infinite_IIb")]
    InfiniteIIb,
    #[serde(rename = "infinite_III")]
    InfiniteIII,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl std::fmt::Display for SingularityType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::FiniteTimeI => "finite_time_I",
            Self::InfiniteIIb => "infinite_IIb",
            Self::InfiniteIII => "infinite_III",
            Self::Inconclusive => "inconclusive",
        })
    }
}

/// `ĝ = g/t` at the final time, in the fixed frame.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CollapseProfile {
    pub time: f64,
    /// `ĝ(e_i, e_i)` for the four real frame directions.
    pub real_diagonal: [f64; 4],
    /// `ĥ` entries on the two complex frame directions.
    pub complex_diagonal: [f64; 2],
    /// Eigenvalues of `ĥ`, ascending.
    pub eigenvalues: (f64, f64),
    /// Complex frame directions with `ĥ` above [`BOUNDED_THRESHOLD`].
    pub bounded_directions: usize,
}

/// Rescaled entries above this count as not collapsing.
pub const BOUNDED_THRESHOLD: f64 = 0.1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Classification {
    pub kind: SingularityType,
    /// `|Rm|·t` at the final time.
    pub statistic_end: f64,
    /// Maximum of `|Rm|·t` over the last decade of time.
    pub statistic_max: f64,
    pub collapse: CollapseProfile,
}

pub const IIB_THRESHOLD: f64 = 1e3;
pub const III_THRESHOLD: f64 = 1e2;

pub fn collapse_profile(traj: &Trajectory) -> CollapseProfile {
    let k = traj.times.len() - 1;
    let t = traj.times[k];
    let m = traj.metric(k).scaled(1.0 / t.max(f64::MIN_POSITIVE));
    let g = m.riemannian();
    let p = m.params;
    CollapseProfile {
        time: t,
        real_diagonal: std::array::from_fn(|i| g[(i, i)]),
        complex_diagonal: [p[0], p[1]],
        eigenvalues: m.eigenvalues(),
        bounded_directions: [p[0], p[1]].iter().filter(|&&x| x > BOUNDED_THRESHOLD).count(),
    }
}

/// Classifies by `|Rm|·t` over `[t_end/10, t_end]`.
pub fn classify_asymptotics(traj: &Trajectory) -> Result<Classification> {
    let t_end = traj.t_end();
    let collapse = collapse_profile(traj);
    let stats: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.curvature)
        .filter(|(&t, _)| t >= t_end / 10.0)
        .map(|(&t, &r)| (t, r * t))
        .collect();
    let statistic_end = traj.curvature.last().unwrap() * t_end;
    let statistic_max = stats.iter().map(|s| s.1).fold(0.0, f64::max);
    if traj.halted.is_some() {
        return Ok(Classification { kind: SingularityType::FiniteTimeI, statistic_end, statistic_max, collapse });
    }
    if t_end < 100.0 {
        return Err(Error::Precondition(format!("trajectory too short for classification (t_end = {t_end} < 100)")));
    }
    let start = stats.first().map(|s| s.1).unwrap_or(0.0);
    let kind = if statistic_end > IIB_THRESHOLD && statistic_end > start {
        SingularityType::InfiniteIIb
    } else if statistic_max <= III_THRESHOLD {
        SingularityType::InfiniteIII
    } else {
        SingularityType::Inconclusive
    };
    Ok(Classification { kind, statistic_end, statistic_max, collapse })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlowdownSample {
    pub s: f64,
    /// `s^{-1} g(s)`.
    pub metric: InvariantMetric,
    /// `(g(2s) − g(s))/s`, the blowdown limit estimate free of the initial offset.
    pub increment: [f64; 4],
    /// `|g(2s)/s − 2 g(s)/s| / |g(s)/s|`; zero when the flow is static and the
    /// blowdown is the zero metric.
    pub defect: f64,
}

fn norm4(p: &[f64; 4]) -> f64 {
    p.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Rescaled metrics `s^{-1} g(s t)` at `t = 1` and their self-similarity
/// defect; needs the trajectory to reach `2 max(s)`.
pub fn blowdown(traj: &Trajectory, s_list: &[f64]) -> Result<Vec<BlowdownSample>> {
    if traj.halted.is_some() {
        return Err(Error::Precondition("blowdown needs an infinite-time trajectory".into()));
    }
    s_list
        .iter()
        .map(|&s| {
            if !(s > 0.0) || 2.0 * s > traj.t_end() {
                return Err(Error::Precondition(format!("blowdown scale {s} needs the trajectory up to {}", 2.0 * s)));
            }
            let g1 = traj.metric_at(s)?.scaled(1.0 / s);
            let g2 = traj.metric_at(2.0 * s)?.scaled(1.0 / s);
            let increment: [f64; 4] = std::array::from_fn(|i| g2.params[i] - g1.params[i]);
            let diff: [f64; 4] = std::array::from_fn(|i| g2.params[i] - 2.0 * g1.params[i]);
            let defect = if norm4(&increment) <= 1e-12 * norm4(&g1.params) { 0.0 } else { norm4(&diff) / norm4(&g1.params) };
            Ok(BlowdownSample { s, metric: g1, increment, defect })
        })
        .collect()
}

/// Expanding-soliton identity `g̃₁ = rhs(t g̃₁)` at scale `s`: the blowdown
/// increment against the scale-invariant rate at `g(2s)`, relative.
pub fn soliton_identity_defect(model: &LieModel, traj: &Trajectory, s: f64) -> Result<f64> {
    let sample = blowdown(traj, &[s])?.remove(0);
    let r = invariant_pcf_rhs_with(model, &traj.metric_at(2.0 * s)?, &Conventions::default())?;
    let d: [f64; 4] = std::array::from_fn(|i| r[i] - sample.increment[i]);
    let n = norm4(&sample.increment);
    if n == 0.0 {
        return Ok(norm4(&r));
    }
    Ok(norm4(&d) / n)
}

/// Scale-invariant distance to the ray of metrics proportional to `reference`.
pub fn distance_to_ray(m: &InvariantMetric, reference: &InvariantMetric) -> f64 {
    let dot: f64 = (0..4).map(|i| m.params[i] * reference.params[i]).sum();
    let rr: f64 = reference.params.iter().map(|x| x * x).sum();
    let mm: f64 = m.params.iter().map(|x| x * x).sum();
    let lam = dot / rr;
    let res: f64 = (0..4).map(|i| (m.params[i] - lam * reference.params[i]).powi(2)).sum();
    (res / mm).sqrt()
}

/// Least-squares fit `log y = c0 − rate·t`; returns `(rate, R²)`.
pub fn fit_exponential_decay(times: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = times.iter().zip(values).filter(|(_, &v)| v > 0.0).map(|(&t, &v)| (t, v.ln())).collect();
    if pts.len() < 3 {
        return Err(Error::Parameter("too few positive samples for an exponential fit".into()));
    }
    let n = pts.len() as f64;
    let (mt, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok((-slope, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogeneous::lie::build_model;

    #[test]
    fn torus_is_constant() {
        let m = build_model(ModelName::Torus).unwrap();
        let m0 = InvariantMetric::new([1.2, 0.9, 0.1, 0.2]).unwrap();
        let tr = integrate(&m, &m0, 10.0, false).unwrap();
        assert!(tr.halted.is_none());
        assert_eq!(tr.last().params, m0.params);
    }

    #[test]
    fn hermite_interpolation_is_accurate() {
        let m = build_model(ModelName::Sol0_4).unwrap();
        let tr = integrate(&m, &InvariantMetric::diagonal(1.0, 1.0), 5.0, false).unwrap();
        let fine = integrate(&m, &InvariantMetric::diagonal(1.0, 1.0), 2.345, false).unwrap();
        let a = tr.at(2.345).unwrap();
        let b = fine.last();
        for i in 0..4 {
            assert!((a.params[i] - b.params[i]).abs() < 1e-5, "{a:?} {b:?}");
        }
    }

    #[test]
    fn normalized_matches_unnormalized() {
        let m = build_model(ModelName::Nil3xR).unwrap();
        let m0 = InvariantMetric::new([1.0, 2.0, 0.3, 0.0]).unwrap();
        let a = integrate(&m, &m0, 20.0, false).unwrap();
        let b = integrate(&m, &m0, 20.0, true).unwrap();
        let (x, y) = (a.metric_at(20.0).unwrap(), b.metric_at(20.0).unwrap());
        for i in 0..4 {
            assert!((x.params[i] - y.params[i]).abs() < 1e-6 * (1.0 + x.params[i].abs()), "{x:?} {y:?}");
        }
    }

    #[test]
    fn exponential_fit_recovers_rate() {
        let t: Vec<f64> = (0..20).map(|k| k as f64 * 0.5).collect();
        let v: Vec<f64> = t.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        let (r, r2) = fit_exponential_decay(&t, &v).unwrap();
        assert!((r - 0.7).abs() < 1e-12 && r2 > 0.999999);
    }

    #[test]
    fn blowdown_rejects_short_runs() {
        let m = build_model(ModelName::Torus).unwrap();
        let tr = integrate(&m, &InvariantMetric::diagonal(1.0, 1.0), 10.0, false).unwrap();
        assert!(blowdown(&tr, &[100.0]).is_err());
    }

    #[test]
    fn static_blowdown_is_self_similar() {
        let m = build_model(ModelName::Torus).unwrap();
        let tr = integrate(&m, &InvariantMetric::diagonal(1.0, 2.0), 100.0, false).unwrap();
        let b = blowdown(&tr, &[10.0, 50.0]).unwrap();
        assert!(b.iter().all(|x| x.defect == 0.0 && x.metric.params[0] <= 0.1));
    }

    #[test]
    fn sol0_blowdown_defect_decreases() {
        let m = build_model(ModelName::Sol0_4).unwrap();
        let tr = integrate(&m, &InvariantMetric::new([1.5, 1.0, 0.2, 0.1]).unwrap(), 2000.0, false).unwrap();
        let b = blowdown(&tr, &[10.0, 100.0, 1000.0]).unwrap();
        assert!(b[0].defect > b[1].defect && b[1].defect > b[2].defect && b[2].defect < 1e-3);
        assert!((b[2].increment[1] - 6.0).abs() < 1e-5);
    }
}
