//! Doubly periodic potentials stored as Fourier coefficients over the dual
//! lattice, plus the symmetry tests that decide whether a potential has the
//! folded (small-period) structure or only the honeycomb symmetries.
//!
//! Coefficients live on the hexagonal index window {|m| ≤ M, |n| ≤ M,
//! |m - n| ≤ M}, which is closed under both the rotation index map and
//! negation. A square window is not rotation-closed, so truncating on it
//! would break the 2π/3 symmetry of an otherwise symmetric potential.

use crate::bessel::bessel_j1;
use crate::lattice::LatticeBasis;
use crate::vec2::Vec2;
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("max_index must be at least 1, got {0}")]
    MaxIndexTooSmall(i64),
    #[error("disks {0} and {1} overlap after periodic wrapping (distance {2:.6} < r1 + r2 = {3:.6})")]
    OverlappingDisks(usize, usize, f64, f64),
    #[error("dimer displacement r = {0} outside (0, 1/2)")]
    DimerOutOfRange(f64),
    #[error("potentials live on different lattices or windows")]
    LatticeMismatch,
    #[error("imaginary residual {0:.3e} in real-space evaluation; reality invariant broken")]
    ImaginaryResidual(f64),
}

/// One disk of the piecewise-constant family: constant `height` inside a disk
/// of radius `radius` centered at `center`, periodically repeated.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DiskSpec {
    pub center: Vec2,
    pub radius: f64,
    pub height: f64,
}

/// Real doubly periodic potential as complex Fourier coefficients V̂(m, n)
/// over dual-lattice indices K = m k1 + n k2, stored on the hexagonal window.
///
/// Reality V̂(-m, -n) = conj V̂(m, n) is enforced structurally: constructors
/// write a canonical half and mirror the conjugate exactly.
#[derive(Debug, Clone)]
pub struct FourierPotential {
    pub lattice: LatticeBasis,
    pub max_index: i64,
    data: Array2<Complex64>,
}

/// Index pair is inside the rotation-closed hexagonal window of extent `m_max`.
#[inline]
pub fn in_hex_window(m: i64, n: i64, m_max: i64) -> bool {
    m.abs() <= m_max && n.abs() <= m_max && (m - n).abs() <= m_max
}

/// Rotation acts on Fourier indices as (m, n) -> (-n, m - n); order three.
#[inline]
pub fn rotate_index(m: i64, n: i64) -> (i64, i64) {
    (-n, m - n)
}

impl FourierPotential {
    /// Build from a coefficient function evaluated on the canonical half of
    /// the window; the other half is filled with exact conjugates.
    pub fn from_fn(
        lattice: LatticeBasis,
        max_index: i64,
        mut f: impl FnMut(i64, i64) -> Complex64,
    ) -> Result<Self, PotentialError> {
        if max_index < 1 {
            return Err(PotentialError::MaxIndexTooSmall(max_index));
        }
        let side = (2 * max_index + 1) as usize;
        let mut data = Array2::zeros((side, side));
        let m_max = max_index;
        for m in 0..=m_max {
            for n in -m_max..=m_max {
                if !in_hex_window(m, n, m_max) {
                    continue;
                }
                // canonical half: m > 0, or m == 0 and n >= 0
                if m == 0 && n < 0 {
                    continue;
                }
                let mut c = f(m, n);
                if m == 0 && n == 0 {
                    c = Complex64::new(c.re, 0.0);
                }
                let (i, j) = Self::offset(m, n, m_max);
                data[(i, j)] = c;
                let (i2, j2) = Self::offset(-m, -n, m_max);
                data[(i2, j2)] = c.conj();
            }
        }
        Ok(FourierPotential {
            lattice,
            max_index,
            data,
        })
    }

    #[inline]
    fn offset(m: i64, n: i64, m_max: i64) -> (usize, usize) {
        ((m + m_max) as usize, (n + m_max) as usize)
    }

    /// Coefficient V̂(m, n); zero outside the stored window.
    #[inline]
    pub fn coeff(&self, m: i64, n: i64) -> Complex64 {
        if in_hex_window(m, n, self.max_index) {
            let (i, j) = Self::offset(m, n, self.max_index);
            self.data[(i, j)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Iterate over all stored (m, n, coefficient) triples in the hex window.
    pub fn iter_coeffs(&self) -> impl Iterator<Item = (i64, i64, Complex64)> + '_ {
        let m_max = self.max_index;
        (-m_max..=m_max).flat_map(move |m| {
            (-m_max..=m_max).filter_map(move |n| {
                if in_hex_window(m, n, m_max) {
                    Some((m, n, self.coeff(m, n)))
                } else {
                    None
                }
            })
        })
    }

    /// Frobenius norm of the coefficient table.
    pub fn coeff_norm(&self) -> f64 {
        self.iter_coeffs()
            .map(|(_, _, c)| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Real-space evaluation by the truncated Fourier sum. The imaginary part
    /// must cancel to below 1e-9; anything larger signals a broken reality
    /// invariant.
    pub fn eval_real(&self, x: Vec2) -> Result<f64, PotentialError> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, n, c) in self.iter_coeffs() {
            let k = self.lattice.dual_index(m, n);
            acc += c * Complex64::from_polar(1.0, k.dot(x));
        }
        if acc.im.abs() > 1e-9 {
            return Err(PotentialError::ImaginaryResidual(acc.im.abs()));
        }
        Ok(acc.re)
    }

    fn same_layout(&self, other: &Self) -> bool {
        self.max_index == other.max_index
            && (self.lattice.u1 - other.lattice.u1).norm() < 1e-12
            && (self.lattice.u2 - other.lattice.u2).norm() < 1e-12
    }
}

/// Wrap a point into the cell centered at the origin (coefficients in
/// (-1/2, 1/2] with respect to u1, u2).
fn wrap_to_cell(lat: &LatticeBasis, x: Vec2) -> Vec2 {
    let a = lat.k1.dot(x) / (2.0 * std::f64::consts::PI);
    let b = lat.k2.dot(x) / (2.0 * std::f64::consts::PI);
    let a = a - a.round();
    let b = b - b.round();
    lat.u1 * a + lat.u2 * b
}

fn check_disjoint(lat: &LatticeBasis, disks: &[DiskSpec]) -> Result<(), PotentialError> {
    for i in 0..disks.len() {
        for j in i..disks.len() {
            let rr = disks[i].radius + disks[j].radius;
            // Minimal periodic image distance.
            let d0 = disks[j].center - disks[i].center;
            let mut best = f64::INFINITY;
            for a in -1..=1 {
                for b in -1..=1 {
                    if i == j && a == 0 && b == 0 {
                        continue;
                    }
                    let d = wrap_to_cell(lat, d0) + lat.u1 * (a as f64) + lat.u2 * (b as f64);
                    best = best.min(d.norm());
                }
            }
            if i == j {
                // Self-overlap happens only if the disk is too large for the cell.
                if best < rr {
                    return Err(PotentialError::OverlappingDisks(i, j, best, rr));
                }
            } else if best < rr {
                return Err(PotentialError::OverlappingDisks(i, j, best, rr));
            }
        }
    }
    Ok(())
}

/// Fourier synthesis of `background` plus a union of disjoint disks.
///
/// For K ≠ 0 each disk contributes (h - background) e^{-i K·c} 2π r J₁(|K| r)
/// / (|K| |Ω|); the K = 0 coefficient is the cell average.
pub fn disk_union_potential(
    disks: &[DiskSpec],
    background: f64,
    lat: &LatticeBasis,
    max_index: i64,
) -> Result<FourierPotential, PotentialError> {
    check_disjoint(lat, disks)?;
    let area = lat.cell_area;
    FourierPotential::from_fn(*lat, max_index, |m, n| {
        if m == 0 && n == 0 {
            let mean: f64 = disks
                .iter()
                .map(|d| (d.height - background) * std::f64::consts::PI * d.radius * d.radius)
                .sum::<f64>()
                / area;
            return Complex64::new(background + mean, 0.0);
        }
        let k = lat.dual_index(m, n);
        let kn = k.norm();
        let mut acc = Complex64::new(0.0, 0.0);
        for d in disks {
            let amp = (d.height - background) * 2.0 * std::f64::consts::PI * d.radius
                * bessel_j1(kn * d.radius)
                / (kn * area);
            acc += Complex64::from_polar(1.0, -k.dot(d.center)) * amp;
        }
        acc
    })
}

/// Disk value and geometry of the dimer-rotation family: disks of value 10
/// and radius 0.1 in a 300 background.
pub const DIMER_DISK_HEIGHT: f64 = 10.0;
pub const DIMER_BACKGROUND: f64 = 300.0;
pub const DIMER_DISK_RADIUS: f64 = 0.1;

/// The six disk centers of the dimer-rotation construction: a dimer displaced
/// by ±(r/2) u3 from the cell center (u3 = u2 - u1), plus its two rotated
/// copies.
pub fn dimer_centers(r: f64, lat: &LatticeBasis) -> Vec<Vec2> {
    let c0 = (lat.u1 + lat.u2) * 0.5;
    let u3 = lat.u2 - lat.u1;
    let rot = crate::lattice::r_star();
    let mut centers = Vec::with_capacity(6);
    for sign in [1.0, -1.0] {
        let mut c = c0 + u3 * (0.5 * r * sign);
        for _ in 0..3 {
            centers.push(wrap_to_cell(lat, c));
            c = rot.apply(c);
        }
    }
    centers
}

/// Piecewise-constant six-disk potential built by rotating a dimer; the
/// displacement `r` tunes the structure through the folded configuration at
/// r = 1/3 (shrunk below, expanded above).
pub fn wu_hu_potential(
    r: f64,
    lat: &LatticeBasis,
    max_index: i64,
) -> Result<FourierPotential, PotentialError> {
    if !(r > 0.0 && r < 0.5) {
        return Err(PotentialError::DimerOutOfRange(r));
    }
    let disks: Vec<DiskSpec> = dimer_centers(r, lat)
        .into_iter()
        .map(|c| DiskSpec {
            center: c,
            radius: DIMER_DISK_RADIUS,
            height: DIMER_DISK_HEIGHT,
        })
        .collect();
    disk_union_potential(&disks, DIMER_BACKGROUND, lat, max_index)
}

/// Residuals of the symmetry tests, as relative coefficient-space L² norms.
#[derive(Debug, Clone, Serialize)]
pub struct SymmetryReport {
    /// Folding periodicity holds at the tolerance the report was built with.
    pub is_periodic_v: bool,
    /// Relative residual of coefficient invariance under the rotation index map.
    pub rotation_residual: f64,
    /// Relative residual of parity and time-reversal invariance combined.
    pub pt_residual: f64,
    /// Relative mass off the folding sublattice (m + n ≡ 0 mod 3).
    pub folding_residual: f64,
    /// Lowest folding-dual Fourier coefficient V̂(1, -1).
    pub q1_moment: Complex64,
}

pub const DEFAULT_Q1_TOL: f64 = 1e-8;

impl SymmetryReport {
    /// Full folded-structure test: all residuals at `tol` and a nonvanishing
    /// lowest folding coefficient.
    pub fn passes(&self, tol: f64, q1_tol: f64) -> bool {
        self.folding_residual <= tol
            && self.rotation_residual <= tol
            && self.pt_residual <= tol
            && self.q1_moment.norm() > q1_tol
    }
}

/// Index pair lies on the folding sublattice (coefficients of a v-periodic
/// potential are supported there).
#[inline]
pub fn on_folding_sublattice(m: i64, n: i64) -> bool {
    (m + n).rem_euclid(3) == 0
}

/// Test periodicity, rotation, and parity/time-reversal invariance of a
/// stored potential.
pub fn check_super_honeycomb(v: &FourierPotential, tol: f64) -> SymmetryReport {
    let norm = v.coeff_norm().max(f64::MIN_POSITIVE);
    let mut off_fold = 0.0;
    let mut rot = 0.0;
    let mut par = 0.0;
    let mut trev = 0.0;
    for (m, n, c) in v.iter_coeffs() {
        if !on_folding_sublattice(m, n) {
            off_fold += c.norm_sqr();
        }
        let (rm, rn) = rotate_index(m, n);
        rot += (v.coeff(rm, rn) - c).norm_sqr();
        par += (v.coeff(-m, -n) - c).norm_sqr();
        trev += (v.coeff(-m, -n).conj() - c).norm_sqr();
    }
    let folding_residual = off_fold.sqrt() / norm;
    let rotation_residual = rot.sqrt() / norm;
    let pt_residual = (par.sqrt() / norm).max(trev.sqrt() / norm);
    SymmetryReport {
        is_periodic_v: folding_residual <= tol,
        rotation_residual,
        pt_residual,
        folding_residual,
        q1_moment: v.coeff(1, -1),
    }
}

/// Difference of a deformed and a folded potential, projected onto the
/// component off the folding sublattice, i.e. the purely folding-breaking
/// part. The report describes the returned perturbation: its
/// `folding_residual` is the mass left on the sublattice (zero by
/// construction) and the rotation/PT residuals confirm it is still
/// honeycomb-symmetric.
pub fn split_perturbation(
    v_def: &FourierPotential,
    v_sym: &FourierPotential,
) -> Result<(FourierPotential, SymmetryReport), PotentialError> {
    if !v_def.same_layout(v_sym) {
        return Err(PotentialError::LatticeMismatch);
    }
    let w = FourierPotential::from_fn(v_def.lattice, v_def.max_index, |m, n| {
        if on_folding_sublattice(m, n) {
            Complex64::new(0.0, 0.0)
        } else {
            v_def.coeff(m, n) - v_sym.coeff(m, n)
        }
    })?;
    let mut report = check_super_honeycomb(&w, 0.0);
    // For the perturbation the folding number means the opposite thing:
    // residual mass ON the sublattice, which the projection removed exactly.
    let norm = w.coeff_norm().max(f64::MIN_POSITIVE);
    let on_mass: f64 = w
        .iter_coeffs()
        .filter(|&(m, n, _)| on_folding_sublattice(m, n))
        .map(|(_, _, c)| c.norm_sqr())
        .sum::<f64>()
        .sqrt()
        / norm;
    report.folding_residual = on_mass;
    report.is_periodic_v = on_mass == 0.0;
    Ok((w, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, folding_vectors};
    use approx::assert_relative_eq;

    fn hex_lat() -> LatticeBasis {
        build_lattice(Vec2::new(3.0_f64.sqrt() / 2.0, 0.5)).unwrap()
    }

    #[test]
    fn constant_background_only() {
        let lat = hex_lat();
        let v = disk_union_potential(&[], 300.0, &lat, 4).unwrap();
        assert_eq!(v.coeff(0, 0), Complex64::new(300.0, 0.0));
        for (m, n, c) in v.iter_coeffs() {
            if (m, n) != (0, 0) {
                assert_eq!(c, Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn single_disk_mean_value() {
        let lat = hex_lat();
        let d = DiskSpec {
            center: (lat.u1 + lat.u2) * 0.5,
            radius: 0.1,
            height: 10.0,
        };
        let v = disk_union_potential(&[d], 300.0, &lat, 4).unwrap();
        let expect = 300.0 - 290.0 * std::f64::consts::PI * 0.01 / (3.0_f64.sqrt() / 2.0);
        assert_relative_eq!(v.coeff(0, 0).re, expect, max_relative = 1e-13);
    }

    /// Disk-adapted quadrature of (1/|Ω|) ∫ e^{-iK·x} V(x) dx, independent of
    /// the Bessel closed form: radial Simpson x angular trapezoid per disk.
    fn quadrature_coeff(
        disks: &[DiskSpec],
        background: f64,
        lat: &LatticeBasis,
        m: i64,
        n: i64,
    ) -> Complex64 {
        let k = lat.dual_index(m, n);
        let area = lat.cell_area;
        let mut acc = if m == 0 && n == 0 {
            Complex64::new(background, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
        let nr = 512usize; // Simpson subintervals (even)
        let na = 512usize;
        for d in disks {
            let mut disk_int = Complex64::new(0.0, 0.0);
            for ir in 0..=nr {
                let rho = d.radius * ir as f64 / nr as f64;
                let w_simpson = if ir == 0 || ir == nr {
                    1.0
                } else if ir % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let mut ang = Complex64::new(0.0, 0.0);
                for ia in 0..na {
                    let th = 2.0 * std::f64::consts::PI * ia as f64 / na as f64;
                    let x = d.center + Vec2::new(rho * th.cos(), rho * th.sin());
                    ang += Complex64::from_polar(1.0, -k.dot(x));
                }
                ang *= 2.0 * std::f64::consts::PI / na as f64;
                disk_int += ang * rho * w_simpson;
            }
            disk_int *= d.radius / (3.0 * nr as f64);
            acc += disk_int * ((d.height - background) / area);
        }
        acc
    }

    #[test]
    fn matches_quadrature_oracle() {
        let lat = hex_lat();
        let disks = [
            DiskSpec {
                center: Vec2::new(0.1, 0.2),
                radius: 0.12,
                height: 40.0,
            },
            DiskSpec {
                center: Vec2::new(-0.3, 0.25),
                radius: 0.07,
                height: -15.0,
            },
        ];
        let v = disk_union_potential(&disks, 5.0, &lat, 6).unwrap();
        for (m, n) in [(0i64, 0i64), (1, 0), (0, 1), (2, -1), (3, 3), (-4, 2), (6, 6)] {
            let got = v.coeff(m, n);
            let want = quadrature_coeff(&disks, 5.0, &lat, m, n);
            assert!(
                (got - want).norm() < 1e-8,
                "({m},{n}): synthesis {got} vs quadrature {want}"
            );
        }
    }

    #[test]
    fn overlap_rejected() {
        let lat = hex_lat();
        let disks = [
            DiskSpec {
                center: Vec2::new(0.0, 0.0),
                radius: 0.2,
                height: 1.0,
            },
            DiskSpec {
                center: Vec2::new(0.25, 0.0),
                radius: 0.2,
                height: 1.0,
            },
        ];
        assert!(matches!(
            disk_union_potential(&disks, 0.0, &lat, 4),
            Err(PotentialError::OverlappingDisks(..))
        ));
    }

    #[test]
    fn eval_periodicity_and_center_value() {
        let lat = hex_lat();
        let v = wu_hu_potential(1.0 / 3.0, &lat, 12).unwrap();
        let x = Vec2::new(0.13, -0.41);
        let a = v.eval_real(x).unwrap();
        let b = v.eval_real(x + lat.u1).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-9);

        // At a disk center the truncated sum approaches the disk value;
        // truncation at index 40 leaves a few percent of the jump.
        let v40 = wu_hu_potential(1.0 / 3.0, &lat, 40).unwrap();
        let centers = dimer_centers(1.0 / 3.0, &lat);
        let val = v40.eval_real(centers[0]).unwrap();
        assert!(
            (val - DIMER_DISK_HEIGHT).abs() < 0.15 * (DIMER_BACKGROUND - DIMER_DISK_HEIGHT),
            "center value {val}"
        );
    }

    #[test]
    fn constant_potential_fails_super_honeycomb() {
        let lat = hex_lat();
        let v = disk_union_potential(&[], 300.0, &lat, 4).unwrap();
        let rep = check_super_honeycomb(&v, 1e-10);
        assert_eq!(rep.q1_moment, Complex64::new(0.0, 0.0));
        assert!(!rep.passes(1e-10, DEFAULT_Q1_TOL));
    }

    #[test]
    fn folded_dimer_potential_passes() {
        let lat = hex_lat();
        let v = wu_hu_potential(1.0 / 3.0, &lat, 12).unwrap();
        let rep = check_super_honeycomb(&v, 1e-10);
        assert!(rep.rotation_residual < 1e-10, "rot {}", rep.rotation_residual);
        assert!(rep.pt_residual < 1e-10, "pt {}", rep.pt_residual);
        assert!(rep.folding_residual < 1e-10, "fold {}", rep.folding_residual);
        assert!(rep.q1_moment.norm() > DEFAULT_Q1_TOL);
        assert!(rep.passes(1e-10, DEFAULT_Q1_TOL));
    }

    #[test]
    fn deformed_dimer_potential_breaks_folding_only() {
        let lat = hex_lat();
        let v = wu_hu_potential(1.1 / 3.0, &lat, 12).unwrap();
        let rep = check_super_honeycomb(&v, 1e-10);
        assert!(rep.folding_residual > 1e-4, "fold {}", rep.folding_residual);
        assert!(rep.rotation_residual < 1e-10);
        assert!(rep.pt_residual < 1e-10);
        assert!(!rep.is_periodic_v);
    }

    #[test]
    fn dimer_centers_form_regular_hexagon() {
        let lat = hex_lat();
        let r = 1.0 / 3.0;
        let centers = dimer_centers(r, &lat);
        assert_eq!(centers.len(), 6);
        // Wrapped around the origin, the six sites sit at radius (1 - r)/2
        // (|u3| = 1 here), sixty degrees apart; at r = 1/3 that radius is 1/3,
        // the folded spacing.
        let radius_expect = (1.0 - r) / 2.0;
        let mut angles: Vec<f64> = centers
            .iter()
            .map(|c| {
                assert_relative_eq!(c.norm(), radius_expect, max_relative = 1e-12);
                c.y.atan2(c.x)
            })
            .collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in angles.windows(2) {
            assert_relative_eq!(w[1] - w[0], std::f64::consts::PI / 3.0, epsilon = 1e-12);
        }
        // Folded structure: translating by v1 permutes the disk set.
        let f = folding_vectors(&lat);
        for c in &centers {
            let shifted = wrap_to_cell(&lat, *c + f.v1);
            let matched = centers.iter().any(|c2| (shifted - *c2).norm() < 1e-9);
            assert!(matched, "v1 translate of {c:?} not in disk set");
        }
    }

    #[test]
    fn split_removes_sublattice_and_keeps_symmetries() {
        let lat = hex_lat();
        let v_sym = wu_hu_potential(1.0 / 3.0, &lat, 12).unwrap();
        let v_def = wu_hu_potential(1.1 / 3.0, &lat, 12).unwrap();
        let (w, rep) = split_perturbation(&v_def, &v_sym).unwrap();
        assert!(rep.is_periodic_v);
        assert_eq!(rep.folding_residual, 0.0);
        assert!(rep.rotation_residual < 1e-10);
        assert!(rep.pt_residual < 1e-10);
        // Ŵ real (honeycomb parity + time reversal)
        for (_, _, c) in w.iter_coeffs() {
            assert!(c.im.abs() < 1e-12);
        }
        // w = 0 when the inputs coincide
        let (z, _) = split_perturbation(&v_sym, &v_sym).unwrap();
        assert_eq!(z.coeff_norm(), 0.0);
    }

    #[test]
    fn split_projection_idempotent() {
        let lat = hex_lat();
        let v_sym = wu_hu_potential(1.0 / 3.0, &lat, 10).unwrap();
        let v_def = wu_hu_potential(1.05 / 3.0, &lat, 10).unwrap();
        let (w, _) = split_perturbation(&v_def, &v_sym).unwrap();
        let zero = FourierPotential::from_fn(lat, 10, |_, _| Complex64::new(0.0, 0.0)).unwrap();
        let (w2, _) = split_perturbation(&w, &zero).unwrap();
        let diff: f64 = w
            .iter_coeffs()
            .map(|(m, n, c)| (c - w2.coeff(m, n)).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert_eq!(diff, 0.0);
    }

    #[test]
    fn lattice_mismatch_rejected() {
        let lat = hex_lat();
        let other = build_lattice(Vec2::new(1.0, 0.0)).unwrap();
        let a = wu_hu_potential(1.0 / 3.0, &lat, 8).unwrap();
        let b = wu_hu_potential(1.0 / 3.0, &other, 8).unwrap();
        assert!(matches!(
            split_perturbation(&a, &b),
            Err(PotentialError::LatticeMismatch)
        ));
    }
}
