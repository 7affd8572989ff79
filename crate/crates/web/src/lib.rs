//! Browser bindings. Each export takes plain numbers or JSON and returns JSON,
//! so the page stays a thin form around the core crate.

use pcf_core::cone::{kahler_tau_star, tau_star, ConeProblem, Extended};
use pcf_core::conventions::Conventions;
use pcf_core::homogeneous::flow::FlowOptions;
use pcf_core::homogeneous::{build_model, distance_to_ray, fit_exponential_decay, integrate_with, invariant_gauge_defect, invariant_pcf_rhs_with, InvariantMetric, ModelName};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn extended(v: Extended) -> Value {
    match v {
        Extended::Finite(x) => json!(x),
        Extended::Infinite => json!("infinity"),
    }
}

/// Formal existence time for a cone problem given as JSON.
pub fn existence_time(problem: &str) -> Result<Value, String> {
    let p: ConeProblem = serde_json::from_str(problem).map_err(|e| e.to_string())?;
    if p.is_kahler() {
        let k = kahler_tau_star(&p).map_err(|e| e.to_string())?;
        Ok(json!({ "tau_star": extended(k.value), "incomplete": k.incomplete }))
    } else {
        Ok(json!({ "tau_star": extended(tau_star(&p).map_err(|e| e.to_string())?) }))
    }
}

/// Flow velocity of a left-invariant metric `(h11, h22, re h12, im h12)`.
pub fn invariant_rate(model: &str, params: [f64; 4]) -> Result<Value, String> {
    let name: ModelName = model.parse().map_err(|e: pcf_core::error::Error| e.to_string())?;
    let model = build_model(name).map_err(|e| e.to_string())?;
    let m = InvariantMetric::new(params).map_err(|e| e.to_string())?;
    let conv = Conventions::default();
    let rhs = invariant_pcf_rhs_with(&model, &m, &conv).map_err(|e| e.to_string())?;
    let (gauge, _) = invariant_gauge_defect(&model, &m, &conv).map_err(|e| e.to_string())?;
    Ok(json!({ "model": name.as_str(), "rhs": rhs, "gauge_defect": gauge }))
}

/// Integrates the Hopf model and fits the decay of the distance to the Hopf ray.
pub fn hopf_approach(params: [f64; 4], t_end: f64) -> Result<Value, String> {
    let model = build_model(ModelName::Hopf).map_err(|e| e.to_string())?;
    let m0 = InvariantMetric::new(params).map_err(|e| e.to_string())?;
    let traj = integrate_with(&model, &m0, t_end, &FlowOptions::default()).map_err(|e| e.to_string())?;
    let ray = InvariantMetric::diagonal(1.0, 1.0);
    let dist: Vec<f64> = traj.states.iter().map(|m| distance_to_ray(m, &ray)).collect();
    let (t, d): (Vec<f64>, Vec<f64>) = traj.times.iter().zip(&dist).filter(|&(_, &d)| d > 1e-7 && d < 1e-2).map(|(&t, &d)| (t, d)).unzip();
    let fit = fit_exponential_decay(&t, &d).ok();
    Ok(json!({
        "times": traj.times,
        "distance": dist,
        "rate": fit.map(|f| f.0),
        "r2": fit.map(|f| f.1),
        "halted": traj.halted,
    }))
}

fn js(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = existenceTime)]
pub fn existence_time_js(problem: &str) -> Result<String, JsValue> {
    js(existence_time(problem))
}

#[wasm_bindgen(js_name = invariantRate)]
pub fn invariant_rate_js(model: &str, h11: f64, h22: f64, re12: f64, im12: f64) -> Result<String, JsValue> {
    js(invariant_rate(model, [h11, h22, re12, im12]))
}

#[wasm_bindgen(js_name = hopfApproach)]
pub fn hopf_approach_js(h11: f64, h22: f64, re12: f64, im12: f64, t_end: f64) -> Result<String, JsValue> {
    js(hopf_approach([h11, h22, re12, im12], t_end))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exceptional_curve_time_is_its_area() {
        let v = existence_time(r#"{"curves":[{"name":"E","self_intersection":-1,"canonical_degree":-1,"area":2.5}],"gamma_pairing":1.0}"#).unwrap();
        assert_eq!(v["tau_star"], json!(2.5));
        assert!(existence_time("{").is_err());
    }

    #[test]
    fn hopf_metric_is_static() {
        let v = invariant_rate("Hopf", [1.0, 1.0, 0.0, 0.0]).unwrap();
        let rhs: Vec<f64> = serde_json::from_value(v["rhs"].clone()).unwrap();
        assert!(rhs.iter().all(|x| x.abs() < 1e-12));
        assert!(invariant_rate("nope", [1.0, 1.0, 0.0, 0.0]).is_err());
        assert!(invariant_rate("Hopf", [1.0, -1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn hopf_approach_decays() {
        let v = hopf_approach([1.3, 0.8, 0.1, -0.05], 12.0).unwrap();
        assert!(v["rate"].as_f64().unwrap() > 0.0);
        assert!(v["r2"].as_f64().unwrap() > 0.99);
    }
}
