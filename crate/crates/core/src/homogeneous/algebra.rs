//! Left-invariant geometry from structure constants: Koszul formula,
//! curvature, torsion and the algebraic pluriclosed-flow right-hand side.

use nalgebra::{Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use super::lie::LieModel;
use crate::conventions::Conventions;
use crate::error::{Error, Result};
use crate::field::{hermitian_eigenvalues, hermitian_from_form, hermitian_to_channels, riemannian_from_channels, C64};
use crate::geometry::{self, T3, ZERO3};

/// Left-invariant J-Hermitian metric `h = [[a, c], [c̄, b]]` in the frame
/// `(e0, e2)` of (1,0) directions; `params = (a, b, Re c, Im c)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantMetric {
    pub params: [f64; 4],
}

impl InvariantMetric {
    pub fn new(params: [f64; 4]) -> Result<Self> {
        let m = Self { params };
        m.validate()?;
        Ok(m)
    }

    pub fn diagonal(a: f64, b: f64) -> Self {
        Self { params: [a, b, 0.0, 0.0] }
    }

    pub fn riemannian(&self) -> Matrix4<f64> {
        riemannian_from_channels(&self.params)
    }

    pub fn hermitian(&self) -> Matrix2<C64> {
        crate::field::channels_to_hermitian(&self.params)
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        hermitian_eigenvalues(&self.hermitian())
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parameter("non-finite metric parameter".into()));
        }
        let l = self.eigenvalues().0;
        if !(l > 0.0) {
            return Err(Error::Degenerate { index: 0, min_eigenvalue: l });
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { params: self.params.map(|x| x * s) }
    }
}

/// Precomputed invariant geometry of one metric on one model.
pub struct Invariant<'a> {
    pub model: &'a LieModel,
    pub g: Matrix4<f64>,
    pub ginv: Matrix4<f64>,
    /// `gam[i][j][k]`: `k`-component of `∇_{e_i} e_j` (Levi-Civita).
    pub gam: T3,
    pub omega: Matrix4<f64>,
    pub h: T3,
}

impl<'a> Invariant<'a> {
    pub fn new(model: &'a LieModel, g: Matrix4<f64>, conv: &Conventions) -> Result<Self> {
        let ginv = g.try_inverse().ok_or_else(|| Error::Degenerate { index: 0, min_eigenvalue: 0.0 })?;
        let c = &model.c;
        let ip = |u: &[f64; 4], w: usize| -> f64 { (0..4).map(|p| u[p] * g[(p, w)]).sum() };
        // Koszul: ⟨∇_i e_j, e_k⟩ = ½(⟨[e_i,e_j],e_k⟩ − ⟨[e_j,e_k],e_i⟩ + ⟨[e_k,e_i],e_j⟩)
        let mut low = ZERO3;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    low[i][j][k] = 0.5 * (ip(&c[i][j], k) - ip(&c[j][k], i) + ip(&c[k][i], j));
                }
            }
        }
        let gam = geometry::raise_last(&low, &ginv);
        let omega = model.j.transpose() * g;
        // dω(X,Y,Z) = −ω([X,Y],Z) − ω([Y,Z],X) − ω([Z,X],Y)
        let om = |u: &[f64; 4], w: usize| -> f64 { (0..4).map(|p| u[p] * omega[(p, w)]).sum() };
        let mut dw = ZERO3;
        for a in 0..4 {
            for b in 0..4 {
                for d in 0..4 {
                    dw[a][b][d] = -(om(&c[a][b], d) + om(&c[b][d], a) + om(&c[d][a], b));
                }
            }
        }
        let h = geometry::minus_j_action(&dw, conv.dc_sign);
        Ok(Self { model, g, ginv, gam, omega, h })
    }

    fn bracket(&self, i: usize, j: usize) -> [f64; 4] {
        self.model.c[i][j]
    }

    /// Riemann tensor `r[i][j][k][l] = ⟨R(e_i,e_j)e_k, e_l⟩`.
    pub fn riemann(&self) -> [[[[f64; 4]; 4]; 4]; 4] {
        let gam = &self.gam;
        let mut r = [[[[0.0; 4]; 4]; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let br = self.bracket(i, j);
                for k in 0..4 {
                    // R(e_i,e_j)e_k = ∇_i∇_j e_k − ∇_j∇_i e_k − ∇_[e_i,e_j] e_k
                    let mut v = [0.0; 4];
                    for m in 0..4 {
                        for l in 0..4 {
                            v[l] += gam[j][k][m] * gam[i][m][l] - gam[i][k][m] * gam[j][m][l];
                        }
                        for l in 0..4 {
                            v[l] -= br[m] * gam[m][k][l];
                        }
                    }
                    for l in 0..4 {
                        r[i][j][k][l] = (0..4).map(|p| v[p] * self.g[(p, l)]).sum();
                    }
                }
            }
        }
        r
    }

    /// `|Rm|` with all indices raised.
    pub fn rm_norm(&self) -> f64 {
        let r = self.riemann();
        let gi = &self.ginv;
        let mut total = 0.0;
        // raise index by index
        let mut up = r;
        for slot in 0..4 {
            let src = up;
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        for l in 0..4 {
                            let idx = [i, j, k, l];
                            let mut s = 0.0;
                            for p in 0..4 {
                                let mut q = idx;
                                q[slot] = p;
                                s += gi[(idx[slot], p)] * src[q[0]][q[1]][q[2]][q[3]];
                            }
                            up[i][j][k][l] = s;
                        }
                    }
                }
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        total += r[i][j][k][l] * up[i][j][k][l];
                    }
                }
            }
        }
        total.max(0.0).sqrt()
    }

    /// `Rc(e_j, e_k) = Σ_i ⟨R(e_i,e_j)e_k, e^i⟩`.
    pub fn ricci(&self) -> Matrix4<f64> {
        let r = self.riemann();
        Matrix4::from_fn(|j, k| {
            let mut s = 0.0;
            for i in 0..4 {
                for l in 0..4 {
                    s += self.ginv[(i, l)] * r[i][j][k][l];
                }
            }
            s
        })
    }

    pub fn h_squared(&self) -> (Matrix4<f64>, f64) {
        geometry::h_squared(&self.h, &self.ginv)
    }

    /// `b_i = ½ tr(J ∇^B_{e_i})`.
    pub fn bismut_potential(&self) -> [f64; 4] {
        let low = geometry::raise_last(&self.gam, &self.g);
        let gb = geometry::bismut_christoffel(&low, &self.h, &self.ginv);
        // general J (not only the standard table)
        std::array::from_fn(|a| {
            let mut s = 0.0;
            for c in 0..4 {
                for d in 0..4 {
                    s += self.model.j[(d, c)] * gb[a][d][c];
                }
            }
            0.5 * s
        })
    }

    /// Bismut Ricci form `ρ_B = db`, `db(e_i,e_j) = −b([e_i,e_j])`.
    pub fn bismut_ricci(&self) -> Matrix4<f64> {
        let b = self.bismut_potential();
        Matrix4::from_fn(|i, j| -(0..4).map(|k| self.model.c[i][j][k] * b[k]).sum::<f64>())
    }

    /// `∇H` as `nh[x][a][b][c] = (∇_{e_x} H)(e_a,e_b,e_c)`.
    fn nabla_h(&self) -> [T3; 4] {
        let mut out = [ZERO3; 4];
        for x in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        let mut s = 0.0;
                        for m in 0..4 {
                            s += self.gam[x][a][m] * self.h[m][b][c] + self.gam[x][b][m] * self.h[a][m][c] + self.gam[x][c][m] * self.h[a][b][m];
                        }
                        out[x][a][b][c] = -s;
                    }
                }
            }
        }
        out
    }

    /// `(d^*H)_{bc} = −G^{xa} (∇_x H)_{abc}`.
    pub fn codifferential_h(&self) -> Matrix4<f64> {
        let nh = self.nabla_h();
        Matrix4::from_fn(|b, c| -(0..4).flat_map(|x| (0..4).map(move |a| (x, a))).map(|(x, a)| self.ginv[(x, a)] * nh[x][a][b][c]).sum::<f64>())
    }

    /// Lee form `θ = −⋆H` (see [`geometry::lee_from_torsion`]).
    pub fn lee_form(&self) -> [f64; 4] {
        geometry::lee_from_torsion(&self.h, &self.g, &self.ginv)
    }

    /// `(L_{X} g)(e_a, e_b) = g(∇_a X, e_b) + g(e_a, ∇_b X)` for invariant `X`.
    pub fn lie_derivative_metric(&self, x: &[f64; 4]) -> Matrix4<f64> {
        let nab: [[f64; 4]; 4] = std::array::from_fn(|a| std::array::from_fn(|l| (0..4).map(|m| x[m] * self.gam[a][m][l]).sum()));
        Matrix4::from_fn(|a, b| (0..4).map(|l| nab[a][l] * self.g[(l, b)] + nab[b][l] * self.g[(l, a)]).sum())
    }

    /// Lee vector `θ♯`.
    pub fn lee_vector(&self) -> [f64; 4] {
        let t = self.lee_form();
        std::array::from_fn(|a| (0..4).map(|b| self.ginv[(a, b)] * t[b]).sum())
    }

    /// Components of `dH` on the basis 4-vector `(e0,e1,e2,e3)`.
    pub fn dh_top(&self) -> f64 {
        // dH(X0..X3) = Σ_{i<j} (−1)^{i+j} H([Xi,Xj], X_rest)
        let mut s = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                let rest: Vec<usize> = (0..4).filter(|&k| k != i && k != j).collect();
                let br = self.bracket(i, j);
                let v: f64 = (0..4).map(|m| br[m] * self.h[m][rest[0]][rest[1]]).sum();
                s += if (i + j) % 2 == 0 { v } else { -v };
            }
        }
        s
    }
}

/// Pluriclosed-flow rate of the parameters, `−ρ_B^{1,1}` projected to the
/// J-Hermitian parameter space.
pub fn invariant_pcf_rhs(model: &LieModel, m: &InvariantMetric) -> Result<[f64; 4]> {
    invariant_pcf_rhs_with(model, m, &Conventions::default())
}

pub fn invariant_pcf_rhs_with(model: &LieModel, m: &InvariantMetric, conv: &Conventions) -> Result<[f64; 4]> {
    m.validate()?;
    let inv = Invariant::new(model, m.riemannian(), conv)?;
    let rho = inv.bismut_ricci();
    let phi = -geometry::project_11(&rho);
    Ok(hermitian_to_channels(&hermitian_from_form(&phi)))
}

/// Generalized Ricci flow metric rate `−2Rc + ½H²` for an invariant metric
/// with `H = d^c ω`.
pub fn invariant_grf_metric_rate(model: &LieModel, g: &Matrix4<f64>, conv: &Conventions) -> Result<Matrix4<f64>> {
    let inv = Invariant::new(model, *g, conv)?;
    Ok(-2.0 * inv.ricci() + 0.5 * inv.h_squared().0)
}

/// Residuals `(Rc − ¼H², d^*H)` with `f = 0`.
pub fn invariant_soliton_residual(model: &LieModel, g: &Matrix4<f64>, conv: &Conventions) -> Result<(Matrix4<f64>, Matrix4<f64>)> {
    let inv = Invariant::new(model, *g, conv)?;
    Ok((inv.ricci() - 0.25 * inv.h_squared().0, inv.codifferential_h()))
}

/// `sup |2 ∂_t g_PCF − (−2Rc + ½H² − L_{θ♯} g)|` on an invariant metric.
pub fn invariant_gauge_defect(model: &LieModel, m: &InvariantMetric, conv: &Conventions) -> Result<(f64, f64)> {
    let inv = Invariant::new(model, m.riemannian(), conv)?;
    let rate = riemannian_from_channels(&invariant_pcf_rhs_with(model, m, conv)?);
    let lie = inv.lie_derivative_metric(&inv.lee_vector());
    let rhs = -2.0 * inv.ricci() + 0.5 * inv.h_squared().0 - lie;
    Ok(((2.0 * rate - rhs).abs().max(), lie.abs().max()))
}

/// `R − |H|²/12` for an invariant metric.
pub fn invariant_scalar_potential(model: &LieModel, g: &Matrix4<f64>, conv: &Conventions) -> Result<f64> {
    let inv = Invariant::new(model, *g, conv)?;
    let r = (inv.ginv * inv.ricci()).trace();
    Ok(r - inv.h_squared().1 / 12.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogeneous::lie::{build_model, ModelName};

    #[test]
    fn flat_models_are_static() {
        for name in [ModelName::R4, ModelName::Torus] {
            let m = build_model(name).unwrap();
            let r = invariant_pcf_rhs(&m, &InvariantMetric::new([1.3, 0.7, 0.2, -0.1]).unwrap()).unwrap();
            assert!(r.iter().all(|x| x.abs() < 1e-15));
        }
    }

    #[test]
    fn hopf_is_fixed() {
        let m = build_model(ModelName::Hopf).unwrap();
        for s in [0.5, 1.0, 3.0] {
            let r = invariant_pcf_rhs(&m, &InvariantMetric::diagonal(s, s)).unwrap();
            assert!(r.iter().all(|x| x.abs() < 1e-12), "{r:?}");
        }
    }

    #[test]
    fn hopf_torsion_is_twice_volume() {
        let m = build_model(ModelName::Hopf).unwrap();
        let inv = Invariant::new(&m, Matrix4::identity(), &Conventions::default()).unwrap();
        assert!((inv.h[0][1][2].abs() - 2.0).abs() < 1e-12);
        assert!(inv.h[0][1][3].abs() < 1e-12);
    }

    #[test]
    fn round_sphere_ricci() {
        let m = build_model(ModelName::Hopf).unwrap();
        let inv = Invariant::new(&m, Matrix4::identity(), &Conventions::default()).unwrap();
        // [e_i,e_j] = 2 e_k is the unit S³: Rc = 2 on the sphere directions
        let rc = inv.ricci();
        assert!((rc[(0, 0)] - 2.0).abs() < 1e-12 && rc[(3, 3)].abs() < 1e-12);
    }

    #[test]
    fn flipped_sign_moves_hopf() {
        let m = build_model(ModelName::Hopf).unwrap();
        let r = invariant_pcf_rhs_with(&m, &InvariantMetric::diagonal(1.0, 1.0), &Conventions::flipped()).unwrap();
        assert!((r[0] + 4.0).abs() < 1e-12 && r[1].abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn gauge_identity_on_every_model() {
        let p = InvariantMetric::new([1.4, 0.8, 0.15, -0.05]).unwrap();
        let mut checked = 0;
        for name in ModelName::ALL {
            let m = build_model(name).unwrap();
            let inv = Invariant::new(&m, p.riemannian(), &Conventions::default()).unwrap();
            if inv.dh_top().abs() > 1e-12 {
                // off-diagonal metrics on the product of hyperbolic planes are not pluriclosed
                assert_eq!(name, ModelName::H2xH2);
                continue;
            }
            let (d, _) = invariant_gauge_defect(&m, &p, &Conventions::default()).unwrap();
            assert!(d < 1e-11, "{name}: {d}");
            checked += 1;
        }
        assert_eq!(checked, ModelName::ALL.len() - 1);
    }
}
