//! Lattice, dual lattice, folding sublattice, and rational-edge vector algebra.
//!
//! Conventions: the cell is spanned by `u1` and `u2 = -R* u1` where `R*` is the
//! 2π/3 rotation matrix; duals satisfy `k_i · u_j = 2π δ_ij`. A rational edge
//! in direction `w1 = a1 u1 + b1 u2` comes with a Bézout partner `w2` and the
//! dual pair `l1`, `l2` with `w_m · l_j = 2π δ_mj`.

use crate::vec2::{Mat2, Vec2};
use std::f64::consts::PI;
use thiserror::Error;

/// 2π/3 rotation used throughout: columns (-1/2, √3/2) and (-√3/2, -1/2).
pub fn r_star() -> Mat2 {
    let s = 3.0_f64.sqrt() / 2.0;
    Mat2::new(-0.5, -s, s, -0.5)
}

/// π/3 rotation used for the sixfold eigenstate classification.
pub fn r_tilde_star() -> Mat2 {
    let s = 3.0_f64.sqrt() / 2.0;
    Mat2::new(0.5, s, -s, 0.5)
}

/// Rotation constants: the 2π/3 matrix and τ = e^{2πi/3}.
#[derive(Debug, Clone, Copy)]
pub struct RotationData {
    pub r_star: Mat2,
    pub tau: num_complex::Complex64,
}

impl RotationData {
    pub fn new() -> Self {
        RotationData {
            r_star: r_star(),
            tau: num_complex::Complex64::from_polar(1.0, 2.0 * PI / 3.0),
        }
    }
}

impl Default for RotationData {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("lattice vector u1 must be nonzero")]
    ZeroVector,
    #[error("edge indices ({0}, {1}) are not coprime")]
    NonCoprime(i64, i64),
}

/// Primitive cell basis with its duals.
#[derive(Debug, Clone, Copy)]
pub struct LatticeBasis {
    pub u1: Vec2,
    pub u2: Vec2,
    pub k1: Vec2,
    pub k2: Vec2,
    pub cell_area: f64,
}

impl LatticeBasis {
    /// Dual-lattice vector `m k1 + n k2`.
    pub fn dual_index(&self, m: i64, n: i64) -> Vec2 {
        self.k1 * (m as f64) + self.k2 * (n as f64)
    }
}

/// Build the cell basis from `u1`, with `u2 = -R* u1` and biorthogonal duals.
pub fn build_lattice(u1: Vec2) -> Result<LatticeBasis, LatticeError> {
    if u1.norm_sq() == 0.0 {
        return Err(LatticeError::ZeroVector);
    }
    let u2 = -r_star().apply(u1);
    let det = u1.det(u2);
    // k1 = 2π J u2 / det, k2 = -2π J u1 / det with J the quarter turn.
    let k1 = u2.perp() * (-2.0 * PI / det);
    let k2 = u1.perp() * (2.0 * PI / det);
    Ok(LatticeBasis {
        u1,
        u2,
        k1,
        k2,
        cell_area: det.abs(),
    })
}

/// The smaller folding periods `v1 = (2u1 - u2)/3`, `v2 = (u1 + u2)/3` and
/// their duals `q1 = k1 - k2`, `q2 = k1 + 2 k2`.
#[derive(Debug, Clone, Copy)]
pub struct FoldingBasis {
    pub v1: Vec2,
    pub v2: Vec2,
    pub q1: Vec2,
    pub q2: Vec2,
}

pub fn folding_vectors(lat: &LatticeBasis) -> FoldingBasis {
    let v1 = (lat.u1 * 2.0 - lat.u2) * (1.0 / 3.0);
    let v2 = (lat.u1 + lat.u2) * (1.0 / 3.0);
    let q1 = lat.k1 - lat.k2;
    let q2 = lat.k1 + lat.k2 * 2.0;
    FoldingBasis { v1, v2, q1, q2 }
}

/// Rational edge data: `w1` is the edge direction, `l2` its dual direction,
/// and `l1_tilde` the component of `l1` orthogonal to `l2`.
#[derive(Debug, Clone, Copy)]
pub struct RationalEdge {
    pub a1: i64,
    pub b1: i64,
    pub a2: i64,
    pub b2: i64,
    pub w1: Vec2,
    pub w2: Vec2,
    pub l1: Vec2,
    pub l2: Vec2,
    pub l1_tilde: Vec2,
}

fn egcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a.abs(), a.signum(), 0)
    } else {
        let (g, x, y) = egcd(b, a.rem_euclid(b));
        (g, y, x - (a.div_euclid(b)) * y)
    }
}

/// Construct the edge frame for coprime `(a1, b1)`.
///
/// The Bézout partner `(a2, b2)` with `a1 b2 - a2 b1 = 1` is not unique; the
/// representative with smallest `|a2| + |b2|` is chosen (ties broken towards
/// smaller `a2`) so results are reproducible.
pub fn build_edge(lat: &LatticeBasis, a1: i64, b1: i64) -> Result<RationalEdge, LatticeError> {
    let (g, x, y) = egcd(a1, b1);
    if g != 1 {
        return Err(LatticeError::NonCoprime(a1, b1));
    }
    // a1*x + b1*y = 1, so (a2, b2) = (-y + t*a1, x + t*b1) for any integer t.
    let base_a2 = -y;
    let base_b2 = x;
    let span = base_a2.abs() + base_b2.abs() + 2;
    let mut best: Option<(i64, i64)> = None;
    for t in -span..=span {
        let a2 = base_a2 + t * a1;
        let b2 = base_b2 + t * b1;
        let cost = a2.abs() + b2.abs();
        let better = match best {
            None => true,
            Some((ba, bb)) => {
                let bc = ba.abs() + bb.abs();
                cost < bc || (cost == bc && a2 < ba)
            }
        };
        if better {
            best = Some((a2, b2));
        }
    }
    let (a2, b2) = best.unwrap();
    debug_assert_eq!(a1 * b2 - a2 * b1, 1);

    let fa = |c: i64| c as f64;
    let w1 = lat.u1 * fa(a1) + lat.u2 * fa(b1);
    let w2 = lat.u1 * fa(a2) + lat.u2 * fa(b2);
    let l1 = lat.k1 * fa(b2) - lat.k2 * fa(a2);
    let l2 = lat.k1 * (-fa(b1)) + lat.k2 * fa(a1);
    let l1_tilde = l1 - l2 * (l1.dot(l2) / l2.norm_sq());
    Ok(RationalEdge {
        a1,
        b1,
        a2,
        b2,
        w1,
        w2,
        l1,
        l2,
        l1_tilde,
    })
}

impl RationalEdge {
    /// Express a dual-lattice index pair over (k1, k2) in the (l1, l2) basis.
    /// The change of basis is unimodular: k1 = a1 l1 + a2 l2, k2 = b1 l1 + b2 l2.
    pub fn dual_to_edge_index(&self, m: i64, n: i64) -> (i64, i64) {
        (m * self.a1 + n * self.b1, m * self.a2 + n * self.b2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hex_u1() -> Vec2 {
        Vec2::new(3.0_f64.sqrt() / 2.0, 0.5)
    }

    #[test]
    fn duals_of_reference_cell() {
        let lat = build_lattice(hex_u1()).unwrap();
        let c = 4.0 * PI / 3.0_f64.sqrt();
        assert_relative_eq!(lat.k1.x, c * 0.5, max_relative = 1e-14);
        assert_relative_eq!(lat.k1.y, c * 3.0_f64.sqrt() / 2.0, max_relative = 1e-14);
        assert_relative_eq!(lat.k2.x, c * 0.5, max_relative = 1e-14);
        assert_relative_eq!(lat.k2.y, -c * 3.0_f64.sqrt() / 2.0, max_relative = 1e-14);
        assert_relative_eq!(lat.cell_area, 3.0_f64.sqrt() / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn biorthogonality() {
        let lat = build_lattice(Vec2::new(0.37, -1.21)).unwrap();
        assert_relative_eq!(lat.k1.dot(lat.u1), 2.0 * PI, max_relative = 1e-12);
        assert_relative_eq!(lat.k2.dot(lat.u2), 2.0 * PI, max_relative = 1e-12);
        assert!(lat.k1.dot(lat.u2).abs() < 1e-12);
        assert!(lat.k2.dot(lat.u1).abs() < 1e-12);
    }

    #[test]
    fn zero_u1_rejected() {
        assert!(matches!(build_lattice(Vec2::ZERO), Err(LatticeError::ZeroVector)));
    }

    #[test]
    fn rotation_has_order_three() {
        let r = r_star();
        let r3 = r.mul(r).mul(r);
        for (got, want) in [
            (r3.a, 1.0),
            (r3.b, 0.0),
            (r3.c, 0.0),
            (r3.d, 1.0),
        ] {
            assert!((got - want).abs() < 1e-14);
        }
        let v = Vec2::new(0.3, -0.9);
        let w = r.apply(r.apply(r.apply(v)));
        assert!((w - v).norm() < 1e-12 * v.norm().max(1.0));
    }

    #[test]
    fn folding_identities() {
        let lat = build_lattice(hex_u1()).unwrap();
        let f = folding_vectors(&lat);
        let v1_expect = (lat.u1 * 2.0 - lat.u2) * (1.0 / 3.0);
        assert!((f.v1 - v1_expect).norm() < 1e-14);
        // v1 + v2 = u1
        assert!((f.v1 + f.v2 - lat.u1).norm() < 1e-14);
        // dual pairing
        assert_relative_eq!(f.q1.dot(f.v1), 2.0 * PI, max_relative = 1e-12);
        assert_relative_eq!(f.q2.dot(f.v2), 2.0 * PI, max_relative = 1e-12);
        assert!(f.q1.dot(f.v2).abs() < 1e-12);
        assert!(f.q2.dot(f.v1).abs() < 1e-12);
    }

    #[test]
    fn edge_reference_directions() {
        let lat = build_lattice(hex_u1()).unwrap();
        let e = build_edge(&lat, 1, 0).unwrap();
        assert!((e.w1 - lat.u1).norm() < 1e-14);
        assert!((e.l2 - lat.k2).norm() < 1e-12);
        let e01 = build_edge(&lat, 0, 1).unwrap();
        assert!((e01.l2 + lat.k1).norm() < 1e-12);
    }

    #[test]
    fn edge_bezout_and_duality() {
        let lat = build_lattice(hex_u1()).unwrap();
        for (a1, b1) in [(1i64, 0i64), (0, 1), (2, 1), (3, -2), (-5, 3), (7, 4)] {
            let e = build_edge(&lat, a1, b1).unwrap();
            assert_eq!(e.a1 * e.b2 - e.a2 * e.b1, 1);
            assert_relative_eq!(e.w1.dot(e.l1), 2.0 * PI, max_relative = 1e-12);
            assert_relative_eq!(e.w2.dot(e.l2), 2.0 * PI, max_relative = 1e-12);
            assert!(e.w1.dot(e.l2).abs() < 1e-10);
            assert!(e.w2.dot(e.l1).abs() < 1e-10);
            // l1_tilde facts
            assert!(e.l1_tilde.dot(e.l2).abs() < 1e-9);
            assert_relative_eq!(e.l1_tilde.dot(e.w1), 2.0 * PI, max_relative = 1e-10);
        }
    }

    #[test]
    fn edge_rejects_non_coprime() {
        let lat = build_lattice(hex_u1()).unwrap();
        assert!(matches!(
            build_edge(&lat, 2, 4),
            Err(LatticeError::NonCoprime(2, 4))
        ));
    }

    #[test]
    fn dual_index_examples() {
        let lat = build_lattice(hex_u1()).unwrap();
        assert!(lat.dual_index(0, 0).norm() < 1e-15);
        assert!((lat.dual_index(1, 0) - lat.k1).norm() < 1e-15);
        let k11 = lat.dual_index(1, 1);
        let c = 4.0 * PI / 3.0_f64.sqrt();
        assert_relative_eq!(k11.x, c, max_relative = 1e-12);
        assert!(k11.y.abs() < 1e-12);
    }

    #[test]
    fn edge_index_change_of_basis() {
        let lat = build_lattice(hex_u1()).unwrap();
        for (a1, b1) in [(1i64, 0i64), (2, 1), (3, -2)] {
            let e = build_edge(&lat, a1, b1).unwrap();
            for (m, n) in [(1i64, 0i64), (0, 1), (2, -3), (-4, 5)] {
                let (p, r) = e.dual_to_edge_index(m, n);
                let direct = lat.dual_index(m, n);
                let via_edge = e.l1 * (p as f64) + e.l2 * (r as f64);
                assert!((direct - via_edge).norm() < 1e-9);
            }
        }
    }
}
