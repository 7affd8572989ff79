//! Formal existence time from divisor data: the Aeppli class moves as
//! `[ω_t] = [ω₀] − t c₁`, and `τ*` is the first time a negative curve loses area.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub name: String,
    /// `D·D`.
    pub self_intersection: i64,
    /// `K·D`.
    pub canonical_degree: i64,
    /// `∫_D ω₀`.
    pub area: f64,
}

impl Curve {
    /// `∫_D c₁ = −K·D`.
    pub fn c1_pairing(&self) -> f64 {
        -(self.canonical_degree as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeProblem {
    pub curves: Vec<Curve>,
    /// `∫ ω₀ ∧ γ₀`; absent for Kähler problems.
    #[serde(default)]
    pub gamma_pairing: Option<f64>,
    /// `∫ c₁ ∧ ω₀`, used only to flag incomplete Kähler data.
    #[serde(default)]
    pub c1_polarization: Option<f64>,
}

/// A value in `[0, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Extended {
    Finite(f64),
    #[serde(with = "infinity")]
    Infinite,
}

mod infinity {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("inf")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "inf" {
            Ok(())
        } else {
            Err(serde::de::Error::custom(format!("expected \"inf\", got {s:?}")))
        }
    }
}

impl Extended {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Extended::Infinite)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Extended::Finite(x) => *x,
            Extended::Infinite => f64::INFINITY,
        }
    }

    fn min(self, other: Extended) -> Extended {
        match (self, other) {
            (Extended::Infinite, x) | (x, Extended::Infinite) => x,
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a.min(b)),
        }
    }
}

impl std::fmt::Display for Extended {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Extended::Finite(x) => write!(f, "{x}"),
            Extended::Infinite => f.write_str("inf"),
        }
    }
}

impl ConeProblem {
    pub fn kahler(curves: Vec<Curve>) -> Self {
        Self { curves, gamma_pairing: None, c1_polarization: None }
    }

    pub fn is_kahler(&self) -> bool {
        self.gamma_pairing.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.curves {
            if !(c.area > 0.0) || !c.area.is_finite() {
                return Err(Error::Parameter(format!("curve {}: area must be positive, got {}", c.name, c.area)));
            }
        }
        if let Some(g) = self.gamma_pairing {
            if !(g > 0.0) || !g.is_finite() {
                return Err(Error::Parameter(format!("gamma pairing must be positive, got {g}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassPairings {
    pub t: f64,
    /// `∫_D ω_t = area + t K·D`, in curve order.
    pub curves: Vec<f64>,
    /// `∫ ω_t ∧ γ₀`, constant because `c₁` pairs to zero with `γ₀`.
    pub gamma_pairing: Option<f64>,
}

pub fn class_trajectory(p: &ConeProblem, t: f64) -> Result<ClassPairings> {
    if !(t >= 0.0) {
        return Err(Error::Parameter(format!("time must be non-negative, got {t}")));
    }
    Ok(ClassPairings {
        t,
        curves: p.curves.iter().map(|c| c.area - t * c.c1_pairing()).collect(),
        gamma_pairing: p.gamma_pairing,
    })
}

fn binding_time(c: &Curve) -> Extended {
    if c.canonical_degree < 0 {
        Extended::Finite(c.area / c.c1_pairing())
    } else {
        Extended::Infinite
    }
}

/// First time a curve with `D² < 0` reaches zero area.
pub fn tau_star(p: &ConeProblem) -> Result<Extended> {
    p.validate()?;
    Ok(p.curves.iter().filter(|c| c.self_intersection < 0).map(binding_time).fold(Extended::Infinite, Extended::min))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KahlerTauStar {
    pub value: Extended,
    /// Set when no constraint binds although `c₁` pairs positively with the
    /// polarization, so the supplied generators cannot be the full cone.
    pub incomplete: bool,
}

/// `sup{t | [ω₀] − t c₁ ∈ K}` over the supplied constraints; an upper bound
/// on the true value when the list misses generators.
pub fn kahler_tau_star(p: &ConeProblem) -> Result<KahlerTauStar> {
    p.validate()?;
    if !p.is_kahler() {
        return Err(Error::Precondition("kahler_tau_star needs a problem without gamma pairing".into()));
    }
    let value = p.curves.iter().map(binding_time).fold(Extended::Infinite, Extended::min);
    let incomplete = value.is_infinite() && p.c1_polarization.is_some_and(|c| c > 0.0);
    Ok(KahlerTauStar { value, incomplete })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn curve(d2: i64, kd: i64, area: f64) -> Curve {
        Curve { name: format!("D({d2},{kd})"), self_intersection: d2, canonical_degree: kd, area }
    }

    fn problem(curves: Vec<Curve>) -> ConeProblem {
        ConeProblem { curves, gamma_pairing: Some(1.0), c1_polarization: None }
    }

    #[test]
    fn exceptional_curve() {
        let p = problem(vec![curve(-1, -1, 3.0)]);
        assert_eq!(tau_star(&p).unwrap(), Extended::Finite(3.0));
        assert_eq!(class_trajectory(&p, 1.25).unwrap().curves, vec![1.75]);
        assert_eq!(class_trajectory(&p, 0.0).unwrap().curves, vec![3.0]);
    }

    #[test]
    fn class_vii_and_nef_canonical_are_immortal() {
        // on class VII⁺ surfaces adjunction with c₁² = −b₂ gives K·D ≥ 0
        let vii = problem(vec![curve(-2, 0, 1.0), curve(-3, 1, 0.5), curve(-1, 1, 2.0)]);
        assert!(tau_star(&vii).unwrap().is_infinite());
        let general = problem(vec![curve(-2, 0, 1.0), curve(2, 4, 5.0)]);
        assert!(tau_star(&general).unwrap().is_infinite());
        assert!(tau_star(&problem(vec![])).unwrap().is_infinite());
    }

    #[test]
    fn kahler_cases() {
        let fano = ConeProblem::kahler(vec![curve(1, -1, 2.0)]);
        assert_eq!(kahler_tau_star(&fano).unwrap(), KahlerTauStar { value: Extended::Finite(2.0), incomplete: false });
        let flat = ConeProblem::kahler(vec![curve(0, 0, 2.0)]);
        assert!(kahler_tau_star(&flat).unwrap().value.is_infinite());
        let empty = ConeProblem { c1_polarization: Some(1.0), ..ConeProblem::kahler(vec![]) };
        assert_eq!(kahler_tau_star(&empty).unwrap(), KahlerTauStar { value: Extended::Infinite, incomplete: true });
        assert!(kahler_tau_star(&problem(vec![])).is_err());
    }

    #[test]
    fn validation() {
        assert!(tau_star(&problem(vec![curve(-1, -1, 0.0)])).is_err());
        let bad = ConeProblem { gamma_pairing: Some(-1.0), ..problem(vec![]) };
        assert!(tau_star(&bad).is_err());
        assert!(class_trajectory(&bad, -1.0).is_err());
    }

    #[test]
    fn extended_serializes_infinity() {
        assert_eq!(serde_json::to_string(&Extended::Infinite).unwrap(), "\"inf\"");
        assert_eq!(serde_json::from_str::<Extended>("2.5").unwrap(), Extended::Finite(2.5));
        assert_eq!(serde_json::from_str::<Extended>("\"inf\"").unwrap(), Extended::Infinite);
    }

    fn arb_curve() -> impl Strategy<Value = Curve> {
        (-4i64..4, -3i64..4, 0.01f64..10.0).prop_map(|(d, k, a)| curve(d, k, a))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn homogeneous_in_areas(curves in prop::collection::vec(arb_curve(), 0..6), lam in 0.1f64..10.0) {
            let p = problem(curves.clone());
            let q = problem(curves.into_iter().map(|c| Curve { area: c.area * lam, ..c }).collect());
            match (tau_star(&p).unwrap(), tau_star(&q).unwrap()) {
                (Extended::Finite(a), Extended::Finite(b)) => prop_assert!((b - lam * a).abs() <= 1e-12 * b.abs().max(1.0)),
                (a, b) => prop_assert!(a.is_infinite() && b.is_infinite()),
            }
        }

        #[test]
        fn more_curves_never_increase(curves in prop::collection::vec(arb_curve(), 0..6), extra in arb_curve()) {
            let a = tau_star(&problem(curves.clone())).unwrap().to_f64();
            let mut more = curves;
            more.push(extra);
            prop_assert!(tau_star(&problem(more)).unwrap().to_f64() <= a);
        }

        #[test]
        fn pairings_positive_before_tau_star(curves in prop::collection::vec(arb_curve(), 0..6), frac in 0.0f64..1.0) {
            let p = problem(curves);
            let tau = tau_star(&p).unwrap();
            let negative: Vec<usize> = (0..p.curves.len()).filter(|&i| p.curves[i].self_intersection < 0).collect();
            let t = match tau { Extended::Finite(x) => frac * x, Extended::Infinite => frac * 1e6 };
            let at = class_trajectory(&p, t).unwrap();
            prop_assert!(negative.iter().all(|&i| at.curves[i] > 0.0));
            if let Extended::Finite(x) = tau {
                let end = class_trajectory(&p, x).unwrap();
                prop_assert!(negative.iter().any(|&i| end.curves[i].abs() <= 1e-12 * p.curves[i].area.max(1.0)));
            }
        }
    }
}
