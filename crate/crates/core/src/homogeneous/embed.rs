//! Chart-embedding oracle: realizes an invariant metric in holomorphic
//! coordinates on a periodic box and evaluates the flow with the chart
//! backend at the box center.

use std::f64::consts::PI;

use nalgebra::Matrix4;

use super::algebra::InvariantMetric;
use super::lie::ModelName;
use crate::chart::{rhs_bismut, MetricJet};
use crate::conventions::Conventions;
use crate::error::{Error, Result};
use crate::field::{hermitian_from_riemannian, hermitian_to_channels, HermitianField};
use crate::grid::{ChartGrid, Spectral};

/// Half-width parameter of the periodized coordinate `v0 + s sin(x/s)`.
pub const BOX_SCALE: f64 = 0.25;

/// Coframe `Θ(v)` with `e^a = Θ_{aμ} dv^μ` in holomorphic coordinates `v`
/// adapted to the model, together with the center and the varying axes.
struct Embedding {
    center: [f64; 4],
    varying: [bool; 4],
    coframe: fn(&[f64; 4]) -> Matrix4<f64>,
}

fn embedding(name: ModelName) -> Option<Embedding> {
    match name {
        ModelName::R4 | ModelName::Torus => Some(Embedding { center: [0.0; 4], varying: [false; 4], coframe: |_| Matrix4::identity() }),
        // q = e^{-2t} = −2 Y2
        ModelName::Sol0_4 => Some(Embedding {
            center: [0.0, 0.0, 0.0, -0.5],
            varying: [false, false, false, true],
            coframe: |v| {
                let q = -2.0 * v[3];
                Matrix4::from_diagonal(&nalgebra::Vector4::new(q.sqrt(), q.sqrt(), 1.0 / q, 1.0 / q))
            },
        }),
        // e^2 + i e^3 = dz2 + (i/2) z̄1 dz1
        ModelName::Nil3xR => Some(Embedding {
            center: [0.0; 4],
            varying: [true, true, false, false],
            coframe: |v| {
                let mut t = Matrix4::identity();
                t[(2, 0)] = 0.5 * v[1];
                t[(2, 1)] = -0.5 * v[0];
                t[(3, 0)] = 0.5 * v[0];
                t[(3, 1)] = 0.5 * v[1];
                t
            },
        }),
        // e^0 = dX/X, e^1 = dY/X on the affine group
        ModelName::H2xR2 => Some(Embedding {
            center: [1.0, 0.0, 0.0, 0.0],
            varying: [true, false, false, false],
            coframe: |v| Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0 / v[0], 1.0 / v[0], 1.0, 1.0)),
        }),
        ModelName::H2xH2 => Some(Embedding {
            center: [1.0, 0.0, 1.0, 0.0],
            varying: [true, false, true, false],
            coframe: |v| Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0 / v[0], 1.0 / v[0], 1.0 / v[2], 1.0 / v[2])),
        }),
        ModelName::Hopf | ModelName::Sol1_4 | ModelName::Sol1_4Prime | ModelName::Sl2xR => None,
    }
}

/// Whether [`chart_oracle_rhs`] supports the model.
pub fn has_chart_oracle(name: ModelName) -> bool {
    embedding(name).is_some()
}

/// Invariant flow rate computed by the chart backend on a periodic box with
/// `n` points along the axes on which the embedded metric varies.
pub fn chart_oracle_rhs(name: ModelName, m: &InvariantMetric, n: usize, conv: &Conventions) -> Result<[f64; 4]> {
    m.validate()?;
    let emb = embedding(name).ok_or(Error::UnsupportedModel(format!("{name} has no chart embedding")))?;
    let nn: [usize; 4] = std::array::from_fn(|a| if emb.varying[a] { n } else { 8 });
    let grid = ChartGrid::new(nn, [2.0 * PI * BOX_SCALE; 4])?;
    let g_frame = m.riemannian();
    let w = HermitianField::from_fn(&grid, |x| {
        let v: [f64; 4] = std::array::from_fn(|a| emb.center[a] + BOX_SCALE * (x[a] / BOX_SCALE).sin());
        let theta = (emb.coframe)(&v);
        hermitian_from_riemannian(&(theta.transpose() * g_frame * theta))
    });
    let diff = Spectral::new(&grid);
    let jet = MetricJet::new(&w, &diff, false);
    let rate = rhs_bismut(&jet, &diff, conv);
    // the coframe is the identity at the center, grid index 0
    let theta0 = (emb.coframe)(&emb.center);
    debug_assert!((theta0 - Matrix4::identity()).abs().max() < 1e-15);
    Ok(hermitian_to_channels(&rate.at(0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogeneous::algebra::invariant_pcf_rhs;
    use crate::homogeneous::lie::build_model;

    #[test]
    fn sol0_unit_metric_matches_oracle() {
        let m = InvariantMetric::diagonal(1.0, 1.0);
        let alg = invariant_pcf_rhs(&build_model(ModelName::Sol0_4).unwrap(), &m).unwrap();
        let num = chart_oracle_rhs(ModelName::Sol0_4, &m, 64, &Conventions::default()).unwrap();
        for i in 0..4 {
            assert!((alg[i] - num[i]).abs() < 1e-6, "{alg:?} {num:?}");
        }
    }

    #[test]
    fn embedded_models_match_oracle() {
        let m = InvariantMetric::new([1.3, 0.8, 0.2, -0.15]).unwrap();
        for name in [ModelName::Sol0_4, ModelName::Nil3xR, ModelName::H2xR2, ModelName::Torus] {
            let alg = invariant_pcf_rhs(&build_model(name).unwrap(), &m).unwrap();
            let num = chart_oracle_rhs(name, &m, 64, &Conventions::default()).unwrap();
            for i in 0..4 {
                assert!((alg[i] - num[i]).abs() < 1e-6, "{name}: {alg:?} {num:?}");
            }
        }
    }

    #[test]
    fn unsupported_models_are_reported() {
        assert!(chart_oracle_rhs(ModelName::Hopf, &InvariantMetric::diagonal(1.0, 1.0), 16, &Conventions::default()).is_err());
    }
}
