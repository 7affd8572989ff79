//! Frozen sign conventions.
//!
//! Real coordinates are `x0..x3` with `z1 = x0 + i x1`, `z2 = x2 + i x3`, so
//! `J e0 = e1`, `J e2 = e3`. The Kähler form is `ω(X,Y) = g(JX,Y)`, which is
//! positive on the standard orientation (`ω = dx0∧dx1 + dx2∧dx3` for the flat
//! metric). The torsion 3-form is `H = d^c ω` with `d^c = i(∂̄ − ∂)`, which on
//! 3-forms equals `−dω(J·,J·,J·)`. With these choices the Bismut connection is
//! `⟨∇^B_X Y, Z⟩ = ⟨∇_X Y, Z⟩ − ½ H(X,Y,Z)`.

use nalgebra::Matrix4;

/// Complex structure on `R^4` in the frame `(e0,e1,e2,e3)`; column `a` is `J e_a`.
pub fn j_matrix() -> Matrix4<f64> {
    let mut j = Matrix4::zeros();
    j[(1, 0)] = 1.0;
    j[(0, 1)] = -1.0;
    j[(3, 2)] = 1.0;
    j[(2, 3)] = -1.0;
    j
}

/// Convention switches. The only knob is the sign in front of `d^c`; flipping it
/// is the deliberate fault used by the negative control.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conventions {
    pub dc_sign: f64,
}

impl Default for Conventions {
    fn default() -> Self {
        Self { dc_sign: 1.0 }
    }
}

impl Conventions {
    pub fn flipped() -> Self {
        Self { dc_sign: -1.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j_squares_to_minus_one() {
        let j = j_matrix();
        assert_eq!(j * j, -Matrix4::identity());
        assert_eq!(j.transpose(), -j);
    }
}
