//! Pointwise Riemannian and Hermitian tensor algebra from metric jets.
//!
//! Everything here works at a single point, given the real metric `G` and its
//! first (and optionally second) coordinate derivatives. The grid layer feeds
//! spectral jets; the oracle feeds finite-difference jets.

use nalgebra::{Matrix2, Matrix4};

use crate::conventions::{j_matrix, Conventions};
use crate::field::{hermitian_from_riemannian, C64};

pub type T3 = [[[f64; 4]; 4]; 4];

pub const ZERO3: T3 = [[[0.0; 4]; 4]; 4];

/// Image of the frame under `J`: `J e_a = JSIGN[a] · e_{JPERM[a]}`.
pub const JPERM: [usize; 4] = [1, 0, 3, 2];
pub const JSIGN: [f64; 4] = [1.0, -1.0, 1.0, -1.0];

#[derive(Clone, Debug)]
pub struct PointJet {
    pub g: Matrix4<f64>,
    pub dg: [Matrix4<f64>; 4],
    pub ddg: Option<Box<[[Matrix4<f64>; 4]; 4]>>,
}

/// `Γ_{ab,c} = ⟨∇_a e_b, e_c⟩`.
pub fn christoffel_lower(jet: &PointJet) -> T3 {
    let mut out = ZERO3;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                out[a][b][c] = 0.5 * (jet.dg[a][(b, c)] + jet.dg[b][(a, c)] - jet.dg[c][(a, b)]);
            }
        }
    }
    out
}

/// Raises the last index: `out[a][b][c] = G^{cd} t[a][b][d]`.
pub fn raise_last(t: &T3, ginv: &Matrix4<f64>) -> T3 {
    let mut out = ZERO3;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                let mut s = 0.0;
                for d in 0..4 {
                    s += ginv[(c, d)] * t[a][b][d];
                }
                out[a][b][c] = s;
            }
        }
    }
    out
}

/// `∂_a ω` with `ω = Jᵀ G`.
pub fn omega_derivatives(jet: &PointJet) -> [Matrix4<f64>; 4] {
    let jt = j_matrix().transpose();
    std::array::from_fn(|a| jt * jet.dg[a])
}

/// Exterior derivative of a 2-form given its partials `dw[a] = ∂_a w`.
pub fn exterior_of_two_form(dw: &[Matrix4<f64>; 4]) -> T3 {
    let mut out = ZERO3;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                out[a][b][c] = dw[a][(b, c)] + dw[b][(c, a)] + dw[c][(a, b)];
            }
        }
    }
    out
}

/// `−s · t(J·,J·,J·)` for a 3-form `t`; with `s = +1` this is `d^c` applied to
/// the 2-form whose exterior derivative is `t`.
pub fn minus_j_action(t: &T3, s: f64) -> T3 {
    let mut out = ZERO3;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                out[a][b][c] = -s * JSIGN[a] * JSIGN[b] * JSIGN[c] * t[JPERM[a]][JPERM[b]][JPERM[c]];
            }
        }
    }
    out
}

/// Bismut torsion `H = d^c ω`.
pub fn torsion_form(jet: &PointJet, conv: &Conventions) -> T3 {
    minus_j_action(&exterior_of_two_form(&omega_derivatives(jet)), conv.dc_sign)
}

/// Component `(dH)_{0123}` of the exterior derivative of `H`; needs second derivatives.
pub fn dh_top(jet: &PointJet, conv: &Conventions) -> f64 {
    let ddg = jet.ddg.as_ref().expect("second derivatives required");
    let jt = j_matrix().transpose();
    // ∂_a H_{bcd}
    let dh = |a: usize, b: usize, c: usize, d: usize| -> f64 {
        let dw: [Matrix4<f64>; 4] = std::array::from_fn(|e| jt * ddg[a][e]);
        let (pb, pc, pd) = (JPERM[b], JPERM[c], JPERM[d]);
        let ddw = dw[pb][(pc, pd)] + dw[pc][(pd, pb)] + dw[pd][(pb, pc)];
        -conv.dc_sign * JSIGN[b] * JSIGN[c] * JSIGN[d] * ddw
    };
    dh(0, 1, 2, 3) - dh(1, 0, 2, 3) + dh(2, 0, 1, 3) - dh(3, 0, 1, 2)
}

/// Bismut connection coefficients `out[a][b][c] = Γ^{B,c}_{ab}` for
/// `∇^B_a e_b = Γ^{B,c}_{ab} e_c`.
pub fn bismut_christoffel(gl: &T3, h: &T3, ginv: &Matrix4<f64>) -> T3 {
    let mut low = ZERO3;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                low[a][b][c] = gl[a][b][c] - 0.5 * h[a][b][c];
            }
        }
    }
    raise_last(&low, ginv)
}

/// `b_a = ½ tr(J Γ^B_a)`; its exterior derivative is the Bismut Ricci form.
pub fn bismut_potential(gb: &T3) -> [f64; 4] {
    std::array::from_fn(|a| {
        // tr(J M) with M[c][d] = Γ^c_{ad}; (J M)_{dd} = Σ_c J[d][c] M[c][d]
        let mut s = 0.0;
        for c in 0..4 {
            // J[d][c] is nonzero only for d = JPERM[c], with value JSIGN[c]
            s += JSIGN[c] * gb[a][JPERM[c]][c];
        }
        0.5 * s
    })
}

/// Lowers `t` from `t[a][b][c] = Γ^c_{ab}` style back to fully covariant.
pub fn lower_last(t: &T3, g: &Matrix4<f64>) -> T3 {
    raise_last(t, g)
}

/// Ricci tensor from a second-order jet.
pub fn ricci(jet: &PointJet, ginv: &Matrix4<f64>) -> Matrix4<f64> {
    let ddg = jet.ddg.as_ref().expect("second derivatives required");
    let gl = christoffel_lower(jet);
    let gam = raise_last(&gl, ginv);
    // dgam[e][a][b][c] = ∂_e Γ^c_{ab}
    let mut dgam = [ZERO3; 4];
    for e in 0..4 {
        let mut dlow = ZERO3;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    dlow[a][b][c] = 0.5 * (ddg[e][a][(b, c)] + ddg[e][b][(a, c)] - ddg[e][c][(a, b)]);
                }
            }
        }
        // ∂_e G^{cd} = −G^{cp} ∂_e G_{pq} G^{qd}
        let dginv = -(ginv * jet.dg[e] * ginv);
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let mut s = 0.0;
                    for d in 0..4 {
                        s += ginv[(c, d)] * dlow[a][b][d] + dginv[(c, d)] * gl[a][b][d];
                    }
                    dgam[e][a][b][c] = s;
                }
            }
        }
    }
    let mut rc = Matrix4::zeros();
    for b in 0..4 {
        for d in b..4 {
            let mut s = 0.0;
            for a in 0..4 {
                s += dgam[a][b][d][a] - dgam[d][b][a][a];
                for e in 0..4 {
                    s += gam[a][e][a] * gam[b][d][e] - gam[d][e][a] * gam[b][a][e];
                }
            }
            rc[(b, d)] = s;
            rc[(d, b)] = s;
        }
    }
    rc
}

/// Raises all three indices of a 3-tensor.
pub fn raise_all(t: &T3, ginv: &Matrix4<f64>) -> T3 {
    let mut s1 = ZERO3;
    let mut s2 = ZERO3;
    let mut s3 = ZERO3;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                s1[a][b][c] = (0..4).map(|p| ginv[(a, p)] * t[p][b][c]).sum();
            }
        }
    }
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                s2[a][b][c] = (0..4).map(|p| ginv[(b, p)] * s1[a][p][c]).sum();
            }
        }
    }
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                s3[a][b][c] = (0..4).map(|p| ginv[(c, p)] * s2[a][b][p]).sum();
            }
        }
    }
    s3
}

/// `(H²)_{ij} = H_{ipq} H_j^{pq}` and `|H|² = H_{pqr} H^{pqr}`.
pub fn h_squared(h: &T3, ginv: &Matrix4<f64>) -> (Matrix4<f64>, f64) {
    let up = raise_all(h, ginv);
    // H_j^{pq}: raise last two of h
    let mut mixed = ZERO3;
    for j in 0..4 {
        for p in 0..4 {
            for q in 0..4 {
                let mut s = 0.0;
                for r in 0..4 {
                    for t in 0..4 {
                        s += ginv[(p, r)] * ginv[(q, t)] * h[j][r][t];
                    }
                }
                mixed[j][p][q] = s;
            }
        }
    }
    let mut h2 = Matrix4::zeros();
    let mut full = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let mut s = 0.0;
            for p in 0..4 {
                for q in 0..4 {
                    s += h[i][p][q] * mixed[j][p][q];
                }
            }
            h2[(i, j)] = s;
        }
    }
    for p in 0..4 {
        for q in 0..4 {
            for r in 0..4 {
                full += h[p][q][r] * up[p][q][r];
            }
        }
    }
    (h2, full)
}

/// Levi-Civita symbol on four indices.
pub fn levi_civita(a: usize, b: usize, c: usize, d: usize) -> f64 {
    let p = [a, b, c, d];
    for i in 0..4 {
        for j in i + 1..4 {
            if p[i] == p[j] {
                return 0.0;
            }
        }
    }
    let mut sign = 1.0;
    for i in 0..4 {
        for j in i + 1..4 {
            if p[i] > p[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Hodge star of a 3-form in dimension 4 with orientation `dx0∧dx1∧dx2∧dx3`
/// (the complex orientation).
pub fn star3(h: &T3, g: &Matrix4<f64>, ginv: &Matrix4<f64>) -> [f64; 4] {
    let up = raise_all(h, ginv);
    let vol = g.determinant().sqrt();
    std::array::from_fn(|d| {
        let mut s = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let e = levi_civita(a, b, c, d);
                    if e != 0.0 {
                        s += up[a][b][c] * e;
                    }
                }
            }
        }
        vol * s / 6.0
    })
}

/// Lee form as the Hodge dual of the torsion: `θ = −⋆H` for `H = d^c ω` in our
/// conventions (the sign is that of the convention flag).
pub fn lee_from_torsion(h: &T3, g: &Matrix4<f64>, ginv: &Matrix4<f64>) -> [f64; 4] {
    star3(h, g, ginv).map(|x| -x)
}

/// Lee form from `dω = θ ∧ ω`, solved as a linear system. Independent of
/// [`star3`]; used to pin down orientation.
pub fn lee_form(domega: &T3, omega: &Matrix4<f64>) -> [f64; 4] {
    // (θ∧ω)_{abc} = θ_a ω_{bc} + θ_b ω_{ca} + θ_c ω_{ab}
    let triples = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)];
    let mut m = Matrix4::zeros();
    let mut rhs = nalgebra::Vector4::zeros();
    for (r, &(a, b, c)) in triples.iter().enumerate() {
        m[(r, a)] += omega[(b, c)];
        m[(r, b)] += omega[(c, a)];
        m[(r, c)] += omega[(a, b)];
        rhs[r] = domega[a][b][c];
    }
    let x = m.lu().solve(&rhs).unwrap_or_else(nalgebra::Vector4::zeros);
    [x[0], x[1], x[2], x[3]]
}

/// Real codifferential of a 2-form, pointwise: `(δw)_b = −G^{ac} ∇_c w_{ab}`.
pub fn codifferential_two_form(w: &Matrix4<f64>, dw: &[Matrix4<f64>; 4], gam: &T3, ginv: &Matrix4<f64>) -> [f64; 4] {
    std::array::from_fn(|b| {
        let mut s = 0.0;
        for a in 0..4 {
            for c in 0..4 {
                if ginv[(a, c)] == 0.0 {
                    continue;
                }
                let mut nab = dw[c][(a, b)];
                for d in 0..4 {
                    nab -= gam[c][a][d] * w[(d, b)] + gam[c][b][d] * w[(a, d)];
                }
                s += ginv[(a, c)] * nab;
            }
        }
        -s
    })
}

/// (1,1) part of a real 2-form: `½(Φ + JᵀΦJ)`.
pub fn project_11(phi: &Matrix4<f64>) -> Matrix4<f64> {
    let j = j_matrix();
    0.5 * (phi + j.transpose() * phi * j)
}

/// Complex derivative data `∂_k h` and `∂_k ∂_l̄ h` at a point.
pub struct ComplexJet {
    pub h: Matrix2<C64>,
    /// `dh[k] = ∂_k h`
    pub dh: [Matrix2<C64>; 2],
    /// `dhb[l] = ∂_l̄ h`
    pub dhb: [Matrix2<C64>; 2],
    /// `ddh[k][l] = ∂_k ∂_l̄ h`
    pub ddh: [[Matrix2<C64>; 2]; 2],
}

impl ComplexJet {
    pub fn from_point(jet: &PointJet) -> Self {
        let ddg = jet.ddg.as_ref().expect("second derivatives required");
        let h = hermitian_from_riemannian(&jet.g);
        let rd: [Matrix2<C64>; 4] = std::array::from_fn(|a| hermitian_from_riemannian(&jet.dg[a]));
        let i = C64::new(0.0, 1.0);
        let dh = std::array::from_fn(|k| (rd[2 * k] - rd[2 * k + 1] * i) * C64::new(0.5, 0.0));
        let dhb = std::array::from_fn(|k| (rd[2 * k] + rd[2 * k + 1] * i) * C64::new(0.5, 0.0));
        let rdd = |a: usize, b: usize| hermitian_from_riemannian(&ddg[a][b]);
        let ddh = std::array::from_fn(|k| {
            std::array::from_fn(|l| {
                let (x, y, u, v) = (2 * k, 2 * k + 1, 2 * l, 2 * l + 1);
                (rdd(x, u) + rdd(y, v) + (rdd(x, v) - rdd(y, u)) * i) * C64::new(0.25, 0.0)
            })
        });
        Self { h, dh, dhb, ddh }
    }
}

/// `g^{k l̄}` as a plain array: `ginv_c[k][l]` with `Σ_l g_{m l̄} g^{k l̄} = δ`.
fn inverse_upper(h: &Matrix2<C64>) -> [[C64; 2]; 2] {
    let hinv = h.try_inverse().expect("degenerate Hermitian metric");
    std::array::from_fn(|k| std::array::from_fn(|l| hinv[(l, k)]))
}

/// Chern torsion `T_{i k p̄} = ∂_i g_{k p̄} − ∂_k g_{i p̄}`, indexed `[i][k][p]`.
pub fn chern_torsion_point(cj: &ComplexJet) -> [[[C64; 2]; 2]; 2] {
    std::array::from_fn(|i| std::array::from_fn(|k| std::array::from_fn(|p| cj.dh[i][(k, p)] - cj.dh[k][(i, p)])))
}

/// `S_{i j̄} = g^{k l̄} Ω_{k l̄ i j̄}` with Chern curvature
/// `Ω_{k l̄ i j̄} = −∂_k∂_l̄ g_{i j̄} + g^{p q̄} ∂_k g_{i q̄} ∂_l̄ g_{p j̄}`.
pub fn chern_s(cj: &ComplexJet) -> Matrix2<C64> {
    let gu = inverse_upper(&cj.h);
    let mut s = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..2 {
                for l in 0..2 {
                    let mut om = -cj.ddh[k][l][(i, j)];
                    for p in 0..2 {
                        for q in 0..2 {
                            om += gu[p][q] * cj.dh[k][(i, q)] * cj.dhb[l][(p, j)];
                        }
                    }
                    acc += gu[k][l] * om;
                }
            }
            s[(i, j)] = acc;
        }
    }
    s
}

/// `Q¹_{i j̄} = g^{k l̄} g^{q p̄} T_{i k p̄} conj(T_{j l q̄})`: each barred lower index
/// is contracted against an unbarred one.
pub fn chern_q1(cj: &ComplexJet) -> Matrix2<C64> {
    let gu = inverse_upper(&cj.h);
    let t = chern_torsion_point(cj);
    let mut q = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..2 {
                for l in 0..2 {
                    for p in 0..2 {
                        for qq in 0..2 {
                            acc += gu[k][l] * gu[qq][p] * t[i][k][p] * t[j][l][qq].conj();
                        }
                    }
                }
            }
            q[(i, j)] = acc;
        }
    }
    q
}

/// `∂_k ∂_l̄ log det h`, pointwise.
pub fn ddbar_log_det(cj: &ComplexJet) -> Matrix2<C64> {
    let hinv = cj.h.try_inverse().expect("degenerate Hermitian metric");
    Matrix2::from_fn(|k, l| {
        let a = (hinv * cj.ddh[k][l]).trace();
        let b = (hinv * cj.dh[k] * hinv * cj.dhb[l]).trace();
        a - b
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levi_civita_signs() {
        assert_eq!(levi_civita(0, 1, 2, 3), 1.0);
        assert_eq!(levi_civita(1, 0, 2, 3), -1.0);
        assert_eq!(levi_civita(1, 2, 3, 0), -1.0);
        assert_eq!(levi_civita(0, 0, 2, 3), 0.0);
    }

    #[test]
    fn j_tables_match_matrix() {
        let j = j_matrix();
        for a in 0..4 {
            assert_eq!(j[(JPERM[a], a)], JSIGN[a]);
        }
    }

    #[test]
    fn flat_jet_is_torsion_free() {
        let jet = PointJet { g: Matrix4::identity(), dg: [Matrix4::zeros(); 4], ddg: Some(Box::new([[Matrix4::zeros(); 4]; 4])) };
        let h = torsion_form(&jet, &Conventions::default());
        assert!(h.iter().flatten().flatten().all(|&x| x == 0.0));
        assert_eq!(ricci(&jet, &Matrix4::identity()), Matrix4::zeros());
    }
}
