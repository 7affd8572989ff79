//! Four-dimensional real Lie algebras with integrable complex structures.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::conventions::j_matrix;
use crate::error::{Error, Result};
use crate::geometry::{T3, ZERO3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelName {
    R4,
    Torus,
    Hopf,
    Nil3xR,
    Sol0_4,
    Sol1_4,
    Sol1_4Prime,
    Sl2xR,
    H2xR2,
    H2xH2,
}

impl ModelName {
    pub const ALL: [ModelName; 10] = [
        ModelName::R4,
        ModelName::Torus,
        ModelName::Hopf,
        ModelName::Nil3xR,
        ModelName::Sol0_4,
        ModelName::Sol1_4,
        ModelName::Sol1_4Prime,
        ModelName::Sl2xR,
        ModelName::H2xR2,
        ModelName::H2xH2,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelName::R4 => "R4",
            ModelName::Torus => "torus",
            ModelName::Hopf => "Hopf",
            ModelName::Nil3xR => "Nil3xR",
            ModelName::Sol0_4 => "Sol0_4",
            ModelName::Sol1_4 => "Sol1_4",
            ModelName::Sol1_4Prime => "Sol1_4_prime",
            ModelName::Sl2xR => "SL2tilde_xR",
            ModelName::H2xR2 => "H2xR2",
            ModelName::H2xH2 => "H2xH2",
        }
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace(['-', ' '], "_");
        ModelName::ALL
            .into_iter()
            .find(|m| m.as_str().to_ascii_lowercase() == norm)
            .or(match norm.as_str() {
                "hopf_su2_r" | "su2xr" => Some(ModelName::Hopf),
                "sl2xr" | "sl2_r" => Some(ModelName::Sl2xR),
                "sol1_4'" => Some(ModelName::Sol1_4Prime),
                _ => None,
            })
            .ok_or_else(|| Error::UnsupportedModel(s.to_string()))
    }
}

/// Structure constants `c[i][j][k] = c^k_{ij}` (so `[e_i, e_j] = c^k_{ij} e_k`)
/// and a complex structure, standard in the chosen basis.
#[derive(Clone, Debug)]
pub struct LieModel {
    pub name: ModelName,
    pub c: T3,
    pub j: Matrix4<f64>,
}

fn brackets(list: &[((usize, usize), &[(usize, f64)])]) -> T3 {
    let mut c = ZERO3;
    for &((i, j), v) in list {
        for &(k, x) in v {
            c[i][j][k] += x;
            c[j][i][k] -= x;
        }
    }
    c
}

impl LieModel {
    pub fn bracket(&self, x: &[f64; 4], y: &[f64; 4]) -> [f64; 4] {
        std::array::from_fn(|k| {
            let mut s = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    s += x[i] * y[j] * self.c[i][j][k];
                }
            }
            s
        })
    }

    /// Largest violation of the Jacobi identity on basis triples.
    pub fn jacobi_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..4 {
            for b in 0..4 {
                for d in 0..4 {
                    for m in 0..4 {
                        let mut s = 0.0;
                        for e in 0..4 {
                            s += self.c[a][b][e] * self.c[e][d][m] + self.c[b][d][e] * self.c[e][a][m] + self.c[d][a][e] * self.c[e][b][m];
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// Largest component of the Nijenhuis tensor
    /// `N(X,Y) = [JX,JY] − J[JX,Y] − J[X,JY] − [X,Y]` on basis pairs.
    pub fn nijenhuis_defect(&self) -> f64 {
        let col = |a: usize| -> [f64; 4] { std::array::from_fn(|i| self.j[(i, a)]) };
        let japply = |v: &[f64; 4]| -> [f64; 4] { std::array::from_fn(|i| (0..4).map(|k| self.j[(i, k)] * v[k]).sum()) };
        let mut worst = 0.0f64;
        for a in 0..4 {
            for b in 0..4 {
                let ea: [f64; 4] = std::array::from_fn(|i| (i == a) as u8 as f64);
                let eb: [f64; 4] = std::array::from_fn(|i| (i == b) as u8 as f64);
                let t1 = self.bracket(&col(a), &col(b));
                let t2 = japply(&self.bracket(&col(a), &eb));
                let t3 = japply(&self.bracket(&ea, &col(b)));
                let t4 = self.bracket(&ea, &eb);
                for i in 0..4 {
                    worst = worst.max((t1[i] - t2[i] - t3[i] - t4[i]).abs());
                }
            }
        }
        worst
    }

    pub fn is_unimodular(&self) -> bool {
        (0..4).all(|i| (0..4).map(|k| self.c[i][k][k]).sum::<f64>().abs() < 1e-12)
    }

    pub fn validate(&self) -> Result<()> {
        if self.jacobi_defect() > 1e-12 {
            return Err(Error::Parameter(format!("{}: Jacobi identity fails", self.name)));
        }
        if (self.j * self.j + Matrix4::identity()).norm() > 1e-12 {
            return Err(Error::Parameter(format!("{}: J² ≠ −1", self.name)));
        }
        if self.nijenhuis_defect() > 1e-12 {
            return Err(Error::Parameter(format!("{}: J is not integrable", self.name)));
        }
        Ok(())
    }
}

/// Candidate bases for the Sol⁴₁ algebra `[X,A] = A, [X,B] = −B, [B,A] = C`,
/// written in the order `(e0,e1,e2,e3)` with `J e0 = e1`, `J e2 = e3`. Each
/// entry lists which of `X, A, B, C` sits at each slot and a sign.
const SOL1_CANDIDATES: [[(usize, f64); 4]; 4] = [
    [(0, 1.0), (1, 1.0), (2, 1.0), (3, 1.0)],
    [(1, 1.0), (0, 1.0), (2, 1.0), (3, -1.0)],
    [(0, 1.0), (2, 1.0), (1, 1.0), (3, 1.0)],
    [(2, 1.0), (0, 1.0), (1, 1.0), (3, -1.0)],
];

fn sol1_in_basis(choice: &[(usize, f64); 4]) -> T3 {
    // abstract algebra on (X, A, B, C) = (0, 1, 2, 3)
    let abs = brackets(&[((0, 1), &[(1, 1.0)]), ((0, 2), &[(2, -1.0)]), ((2, 1), &[(3, 1.0)])]);
    // e_s = sign_s · v_{idx_s}; express brackets in the e basis
    let mut pos = [0usize; 4];
    let mut sign = [0.0; 4];
    for (s, &(idx, sg)) in choice.iter().enumerate() {
        pos[idx] = s;
        sign[idx] = sg;
    }
    let mut c = ZERO3;
    for (s, &(i, si)) in choice.iter().enumerate() {
        for (t, &(j, sj)) in choice.iter().enumerate() {
            for k in 0..4 {
                let v = abs[i][j][k];
                if v != 0.0 {
                    // [e_s, e_t] = si sj v · v_k = si sj v sign_k · e_{pos_k}
                    c[s][t][pos[k]] += si * sj * v * sign[k];
                }
            }
        }
    }
    c
}

/// Admissible Sol⁴₁ bases, in candidate order; the Nijenhuis checker decides.
pub fn sol1_admissible() -> Vec<T3> {
    SOL1_CANDIDATES
        .iter()
        .map(sol1_in_basis)
        .filter(|c| LieModel { name: ModelName::Sol1_4, c: *c, j: j_matrix() }.nijenhuis_defect() < 1e-12)
        .collect()
}

pub fn build_model(name: ModelName) -> Result<LieModel> {
    let c = match name {
        ModelName::R4 | ModelName::Torus => ZERO3,
        ModelName::Hopf => brackets(&[((0, 1), &[(2, 2.0)]), ((1, 2), &[(0, 2.0)]), ((2, 0), &[(1, 2.0)])]),
        ModelName::Nil3xR => brackets(&[((0, 1), &[(2, 1.0)])]),
        ModelName::Sol0_4 => brackets(&[((3, 0), &[(0, 1.0)]), ((3, 1), &[(1, 1.0)]), ((3, 2), &[(2, -2.0)])]),
        ModelName::Sl2xR => brackets(&[((0, 1), &[(2, -2.0)]), ((1, 2), &[(0, 2.0)]), ((2, 0), &[(1, 2.0)])]),
        ModelName::H2xR2 => brackets(&[((0, 1), &[(1, 1.0)])]),
        ModelName::H2xH2 => brackets(&[((0, 1), &[(1, 1.0)]), ((2, 3), &[(3, 1.0)])]),
        ModelName::Sol1_4 | ModelName::Sol1_4Prime => {
            let adm = sol1_admissible();
            let idx = if name == ModelName::Sol1_4 { 0 } else { 1 };
            *adm.get(idx).ok_or_else(|| Error::UnsupportedModel(format!("{name}: no admissible complex structure")))?
        }
    };
    let m = LieModel { name, c, j: j_matrix() };
    m.validate()?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_model_is_valid() {
        for name in ModelName::ALL {
            let m = build_model(name).unwrap();
            assert!(m.jacobi_defect() < 1e-12, "{name}");
            assert!(m.nijenhuis_defect() < 1e-12, "{name}");
        }
    }

    #[test]
    fn sol0_brackets() {
        let m = build_model(ModelName::Sol0_4).unwrap();
        assert_eq!(m.c[3][0][0], 1.0);
        assert_eq!(m.c[3][1][1], 1.0);
        assert_eq!(m.c[3][2][2], -2.0);
        assert!(m.is_unimodular());
    }

    #[test]
    fn sol1_has_two_admissible_structures() {
        assert!(sol1_admissible().len() >= 2);
    }

    #[test]
    fn parse_names() {
        assert_eq!("sol0_4".parse::<ModelName>().unwrap(), ModelName::Sol0_4);
        assert_eq!("SL2tilde_xR".parse::<ModelName>().unwrap(), ModelName::Sl2xR);
        assert!("E8".parse::<ModelName>().is_err());
    }

    #[test]
    fn nijenhuis_detects_bad_structure() {
        // J pairing e0 with e2 on the Heisenberg algebra is not integrable
        let mut m = build_model(ModelName::Nil3xR).unwrap();
        let mut j = Matrix4::zeros();
        j[(2, 0)] = 1.0;
        j[(0, 2)] = -1.0;
        j[(3, 1)] = 1.0;
        j[(1, 3)] = -1.0;
        m.j = j;
        assert!(m.nijenhuis_defect() > 0.1);
    }
}
