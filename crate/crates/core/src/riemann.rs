//! Riemannian fields on chart grids: symmetric 2-tensors, 3-forms and the
//! differential operators the generalized Ricci flow needs.

use nalgebra::Matrix4;

use crate::chart::{compress3, expand3};
use crate::field::HermitianField;
use crate::geometry::{self, PointJet, T3};
use crate::grid::{sym_index, ChartGrid, Differentiator};

/// Symmetric 4×4 tensor field stored as ten channels in [`sym_index`] order.
#[derive(Clone, Debug)]
pub struct SymField {
    pub grid: ChartGrid,
    pub c: [Vec<f64>; 10],
}

impl SymField {
    pub fn zeros(grid: &ChartGrid) -> Self {
        Self { grid: grid.clone(), c: std::array::from_fn(|_| vec![0.0; grid.len()]) }
    }

    pub fn from_fn(grid: &ChartGrid, f: impl Fn([f64; 4]) -> Matrix4<f64>) -> Self {
        let mut out = Self::zeros(grid);
        for k in 0..grid.len() {
            out.set(k, &f(grid.coords(k)));
        }
        out
    }

    pub fn from_hermitian(w: &HermitianField) -> Self {
        let mut out = Self::zeros(&w.grid);
        for k in 0..w.len() {
            out.set(k, &w.riemannian(k));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.c[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn at(&self, k: usize) -> Matrix4<f64> {
        Matrix4::from_fn(|a, b| self.c[sym_index(a, b)][k])
    }

    pub fn set(&mut self, k: usize, m: &Matrix4<f64>) {
        for a in 0..4 {
            for b in a..4 {
                self.c[sym_index(a, b)][k] = 0.5 * (m[(a, b)] + m[(b, a)]);
            }
        }
    }

    pub fn axpy(&self, s: f64, other: &SymField) -> SymField {
        let mut out = self.clone();
        for i in 0..10 {
            for (o, x) in out.c[i].iter_mut().zip(&other.c[i]) {
                *o += s * x;
            }
        }
        out
    }

    /// Sup over points of the Frobenius norm of the difference.
    pub fn sup_distance(&self, other: &SymField) -> f64 {
        (0..self.len()).map(|k| (self.at(k) - other.at(k)).norm()).fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.len()).map(|k| self.at(k).norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        (0..self.len())
            .map(|k| self.at(k).symmetric_eigenvalues().min())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Anything that yields pointwise metric jets.
pub trait JetSource {
    fn len(&self) -> usize;
    fn point(&self, k: usize) -> PointJet;
}

impl JetSource for crate::chart::MetricJet {
    fn len(&self) -> usize {
        crate::chart::MetricJet::len(self)
    }
    fn point(&self, k: usize) -> PointJet {
        crate::chart::MetricJet::point(self, k)
    }
}

impl JetSource for SymJet {
    fn len(&self) -> usize {
        SymJet::len(self)
    }
    fn point(&self, k: usize) -> PointJet {
        SymJet::point(self, k)
    }
}

/// Jets of a general Riemannian metric.
pub struct SymJet {
    g: SymField,
    dg: Vec<[Vec<f64>; 4]>,
    ddg: Option<Vec<Vec<Vec<f64>>>>,
}

impl SymJet {
    pub fn new(g: &SymField, diff: &dyn Differentiator, second: bool) -> Self {
        let mut dg = Vec::with_capacity(10);
        let mut ddg = Vec::with_capacity(10);
        for i in 0..10 {
            let (d, dd) = diff.jet_of(&g.c[i], second);
            dg.push(d);
            if let Some(dd) = dd {
                ddg.push(dd);
            }
        }
        Self { g: g.clone(), dg, ddg: second.then_some(ddg) }
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, k: usize) -> PointJet {
        let g = self.g.at(k);
        let dg = std::array::from_fn(|a| Matrix4::from_fn(|p, q| self.dg[sym_index(p, q)][a][k]));
        let ddg = self.ddg.as_ref().map(|dd| {
            Box::new(std::array::from_fn(|a| {
                std::array::from_fn(|b| {
                    let s = sym_index(a, b);
                    Matrix4::from_fn(|p, q| dd[sym_index(p, q)][s][k])
                })
            }))
        });
        PointJet { g, dg, ddg }
    }
}

/// A field of 3-forms stored as four compressed channels (see [`compress3`]).
#[derive(Clone, Debug)]
pub struct ThreeForm {
    pub c: [Vec<f64>; 4],
}

impl ThreeForm {
    pub fn zeros(n: usize) -> Self {
        Self { c: std::array::from_fn(|_| vec![0.0; n]) }
    }

    pub fn at(&self, k: usize) -> T3 {
        expand3(&[self.c[0][k], self.c[1][k], self.c[2][k], self.c[3][k]])
    }

    pub fn set(&mut self, k: usize, h: &T3) {
        let v = compress3(h);
        for i in 0..4 {
            self.c[i][k] = v[i];
        }
    }

    pub fn axpy(&self, s: f64, o: &ThreeForm) -> ThreeForm {
        let mut out = self.clone();
        for i in 0..4 {
            for (a, b) in out.c[i].iter_mut().zip(&o.c[i]) {
                *a += s * b;
            }
        }
        out
    }

    pub fn sup_norm(&self) -> f64 {
        self.c.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Exterior derivative of a field of 2-forms (given as six channels indexed by
/// pairs `(a<b)`), returned as a compressed 3-form.
pub fn exterior_two_forms(beta: &[[Vec<f64>; 4]; 4], diff: &dyn Differentiator) -> ThreeForm {
    let n = beta[0][1].len();
    // d_a β_{bc}
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let grads: Vec<((usize, usize), [Vec<f64>; 4])> = pairs.iter().map(|&(b, c)| ((b, c), diff.gradient(&beta[b][c]))).collect();
    let dpart = |a: usize, b: usize, c: usize, k: usize| -> f64 {
        let (p, q, s) = if b < c { (b, c, 1.0) } else { (c, b, -1.0) };
        let g = &grads.iter().find(|(bc, _)| *bc == (p, q)).expect("pair present").1;
        s * g[a][k]
    };
    let triples = [(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)];
    let mut out = ThreeForm::zeros(n);
    for (d, &(a, b, c)) in triples.iter().enumerate() {
        for k in 0..n {
            out.c[d][k] = dpart(a, b, c, k) + dpart(b, c, a, k) + dpart(c, a, b, k);
        }
    }
    out
}

/// Codifferential of a 3-form, `(d^*H)^{bc} = −(1/√G) ∂_a(√G H^{abc})`, lowered.
/// Returned as a full antisymmetric matrix per point.
pub fn codifferential_three_form(g: &SymField, h: &ThreeForm, diff: &dyn Differentiator) -> Vec<Matrix4<f64>> {
    let n = g.len();
    // densities D^{abc} = √G H^{abc}, only a < b < c needed up to sign; store per (a, b, c) triple
    let triples = [(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)];
    let mut dens: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::with_capacity(n));
    let mut vol = Vec::with_capacity(n);
    for k in 0..n {
        let gk = g.at(k);
        let gi = gk.try_inverse().expect("positive metric");
        let up = geometry::raise_all(&h.at(k), &gi);
        let v = gk.determinant().sqrt();
        vol.push(v);
        for (d, &(a, b, c)) in triples.iter().enumerate() {
            dens[d].push(v * up[a][b][c]);
        }
    }
    let grads: [[Vec<f64>; 4]; 4] = std::array::from_fn(|d| diff.gradient(&dens[d]));
    (0..n)
        .map(|k| {
            let mut div = Matrix4::zeros();
            for (d, &(a, b, c)) in triples.iter().enumerate() {
                // contributions of D^{abc} and its permutations to Σ_x ∂_x D^{x y z}
                let perms = [(a, b, c, 1.0), (b, c, a, 1.0), (c, a, b, 1.0), (b, a, c, -1.0), (a, c, b, -1.0), (c, b, a, -1.0)];
                for &(x, y, z, s) in perms.iter() {
                    div[(y, z)] += s * grads[d][x][k];
                }
            }
            let up = -div / vol[k];
            let gk = g.at(k);
            gk * up * gk
        })
        .collect()
}

/// Splits antisymmetric matrices into six pair channels `[b][c]` (`b < c`).
pub fn pair_channels(m: &[Matrix4<f64>]) -> [[Vec<f64>; 4]; 4] {
    let mut out: [[Vec<f64>; 4]; 4] = Default::default();
    for b in 0..4 {
        for c in b + 1..4 {
            out[b][c] = m.iter().map(|x| x[(b, c)]).collect();
        }
    }
    out
}

/// Lie derivative of the metric along the dual of a 1-form field:
/// `(L_{θ♯} G)_{ab} = ∇_a θ_b + ∇_b θ_a`.
pub fn lie_derivative_metric(jets: &dyn JetSource, theta: &[Vec<f64>; 4], diff: &dyn Differentiator) -> Vec<Matrix4<f64>> {
    let grads: [[Vec<f64>; 4]; 4] = std::array::from_fn(|b| diff.gradient(&theta[b]));
    (0..jets.len())
        .map(|k| {
            let p = &jets.point(k);
            let gi = p.g.try_inverse().expect("positive metric");
            let gam = geometry::raise_last(&geometry::christoffel_lower(p), &gi);
            Matrix4::from_fn(|a, b| {
                let mut s = grads[b][a][k] + grads[a][b][k];
                for c in 0..4 {
                    s -= 2.0 * gam[a][b][c] * theta[c][k];
                }
                s
            })
        })
        .collect()
}

/// Hessian `∇²f` of a scalar at every point.
pub fn hessian_field(jet: &dyn JetSource, f: &[f64], diff: &dyn Differentiator) -> (Vec<Matrix4<f64>>, [Vec<f64>; 4]) {
    let (d, dd) = diff.jet_of(f, true);
    let dd = dd.expect("second derivatives requested");
    let out = (0..jet.len())
        .map(|k| {
            let p = jet.point(k);
            let gi = p.g.try_inverse().expect("positive metric");
            let gam = geometry::raise_last(&geometry::christoffel_lower(&p), &gi);
            Matrix4::from_fn(|a, b| {
                let mut s = dd[sym_index(a, b)][k];
                for c in 0..4 {
                    s -= gam[a][b][c] * d[c][k];
                }
                s
            })
        })
        .collect();
    (out, d)
}
