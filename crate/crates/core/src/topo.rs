//! Local topological diagnostics at the Γ point: winding of the effective
//! off-diagonal symbol a₊(k; δ) on small loops, per-band Berry phases of the
//! 4x4 effective bifurcation matrix, the grading-operator identities that
//! separate first- from second-order symmetry classes, and the parity
//! classification of the perturbed Γ eigenstates.

use crate::bifurcation::{BifurcationCoefficients, BifurcationError};
use crate::bloch::{self, BlochError, PlaneWaveBasis};
use crate::linalg::{self, LinalgError};
use crate::potential::FourierPotential;
use crate::vec2::Vec2;
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TopoError {
    #[error("curve passes through the origin (min modulus {0:.3e})")]
    CurveThroughOrigin(f64),
    #[error("curve undersampled: adjacent phase step {0:.3} exceeds π/2")]
    Undersampled(f64),
    #[error("winding rounding residual {0:.3} exceeds 0.05")]
    NotInteger(f64),
    #[error("charges disagree between radii {0} and {1}; loop outside the asymptotic regime")]
    RadiusInconsistent(f64, f64),
    #[error("half-winding and Berry-phase charges disagree: {0:?} vs {1:?}")]
    OracleMismatch([i64; 4], [f64; 4]),
    #[error("parity expectation {0:.4} not within 0.01 of ±1")]
    ParityLeakage(f64),
    #[error("perturbed Γ quartet parity pattern is not two-by-two")]
    PatternBroken,
    #[error(transparent)]
    Bifurcation(#[from] BifurcationError),
    #[error(transparent)]
    Bloch(#[from] BlochError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Rotate the quartet phase freedom so the quadratic-form constant b0 is
/// real and positive; the velocity form keeps its (1, i) structure and
/// everything the charges depend on is otherwise gauge-invariant.
pub fn rotate_b_quad_real(bif: &BifurcationCoefficients) -> BifurcationCoefficients {
    let mut out = bif.clone();
    if out.b_quad.norm() == 0.0 {
        return out;
    }
    let phase = Complex64::from_polar(1.0, -out.b_quad.arg());
    out.b_quad *= phase;
    out.v_sharp[0] *= phase;
    out.v_sharp[1] *= phase;
    out.theta_sharp = out.v_sharp[0].arg();
    out
}

/// λ± = ±sqrt(4 |k·v♯|² + δ² c♯²).
pub fn lambda_plus(bif: &BifurcationCoefficients, k: Vec2, delta: f64) -> f64 {
    let kv = bif.v_sharp[0] * k.x + bif.v_sharp[1] * k.y;
    (4.0 * kv.norm_sqr() + delta * delta * bif.c_sharp * bif.c_sharp).sqrt()
}

/// Off-diagonal symbol of the upper pair:
/// a₊ = |2ik·v♯|² conj(b(k)) + (δc♯ - λ₊)² b(k).
pub fn a_plus(bif: &BifurcationCoefficients, k: Vec2, delta: f64) -> Complex64 {
    let kv = bif.v_sharp[0] * k.x + bif.v_sharp[1] * k.y;
    let b = bif.b_of(k);
    let lam = lambda_plus(bif, k, delta);
    b.conj() * (4.0 * kv.norm_sqr()) + b * (delta * bif.c_sharp - lam).powi(2)
}

/// Same symbol for the lower pair, built with λ₋ = -λ₊.
pub fn a_minus(bif: &BifurcationCoefficients, k: Vec2, delta: f64) -> Complex64 {
    let kv = bif.v_sharp[0] * k.x + bif.v_sharp[1] * k.y;
    let b = bif.b_of(k);
    let lam = -lambda_plus(bif, k, delta);
    b.conj() * (4.0 * kv.norm_sqr()) + b * (delta * bif.c_sharp - lam).powi(2)
}

/// Winding number of a closed complex curve from summed phase increments.
pub fn winding_number(samples: &[Complex64]) -> Result<i64, TopoError> {
    let min_mod = samples.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    if min_mod <= 0.0 {
        return Err(TopoError::CurveThroughOrigin(min_mod));
    }
    let mut total = 0.0f64;
    let n = samples.len();
    for i in 0..n {
        let a = samples[i];
        let b = samples[(i + 1) % n];
        let step = (b / a).arg();
        if step.abs() >= PI / 2.0 {
            return Err(TopoError::Undersampled(step.abs()));
        }
        total += step;
    }
    let w = total / (2.0 * PI);
    let rounded = w.round();
    if (w - rounded).abs() >= 0.05 {
        return Err(TopoError::NotInteger((w - rounded).abs()));
    }
    Ok(rounded as i64)
}

/// First-order effective matrix in the decoupled basis:
/// blocks [[∓δc♯, 2ik·v♯], [conj, ±δc♯]].
pub fn b1_tilde(bif: &BifurcationCoefficients, k: Vec2, delta: f64) -> Array2<Complex64> {
    let z = bif.two_ik_dot_v(k);
    let dc = Complex64::new(delta * bif.c_sharp, 0.0);
    let mut m = Array2::zeros((4, 4));
    m[(0, 0)] = -dc;
    m[(0, 1)] = z;
    m[(1, 0)] = z.conj();
    m[(1, 1)] = dc;
    m[(2, 2)] = dc;
    m[(2, 3)] = z;
    m[(3, 2)] = z.conj();
    m[(3, 3)] = -dc;
    m
}

/// Second-order effective matrix in the decoupled basis:
/// (m(k) - ||k||²) I plus b(k) on the anti-diagonal.
pub fn b2_tilde(bif: &BifurcationCoefficients, k: Vec2) -> Array2<Complex64> {
    let b = bif.b_of(k);
    let d = Complex64::new(bif.m_of(k) - k.norm_sq(), 0.0);
    let mut m = Array2::zeros((4, 4));
    for i in 0..4 {
        m[(i, i)] = d;
    }
    m[(0, 3)] = b;
    m[(1, 2)] = b.conj();
    m[(2, 1)] = b;
    m[(3, 0)] = b.conj();
    m
}

/// Per-band Berry phases of B̃1 + B̃2 around a loop of radius r.
///
/// A loop charge is an integer only relative to a section that is smooth on
/// the punctured disk and singular at the origin. That section pins the
/// eigenvector slot whose coefficient vanishes in the r -> 0 limit: the
/// third slot for the pair of bands with λ·sgn(δ c♯) > 0 and the fourth for
/// the other pair. With the pinned slot held real positive, the per-step
/// phase increments accumulate to the integer charge.
pub fn berry_phases(
    bif: &BifurcationCoefficients,
    delta: f64,
    radius: f64,
    n_samples: usize,
) -> Result<[f64; 4], TopoError> {
    let mut prev_vecs: Option<Array2<Complex64>> = None;
    let mut phases = [0.0f64; 4];
    let sign = (delta * bif.c_sharp).signum();
    for i in 0..=n_samples {
        let th = 2.0 * PI * i as f64 / n_samples as f64;
        let k = Vec2::new(th.cos(), th.sin()) * radius;
        let m = b1_tilde(bif, k, delta) + b2_tilde(bif, k);
        let (vals, raw) = linalg::eigh(&m)?;
        let mut vecs = raw;
        for c in 0..4 {
            let slot = if vals[c] * sign > 0.0 { 2 } else { 3 };
            let pivot = vecs[(slot, c)];
            if pivot.norm() < 1e-14 {
                return Err(TopoError::Undersampled(PI));
            }
            let ph = Complex64::from_polar(1.0, -pivot.arg());
            for r in 0..4 {
                vecs[(r, c)] *= ph;
            }
        }
        if let Some(prev) = &prev_vecs {
            // track bands by overlap with the previous frame
            let mut perm = [usize::MAX; 4];
            let mut used = [false; 4];
            for bnd in 0..4 {
                let pv = prev.column(bnd);
                let mut best = 0.0;
                let mut arg = 0;
                for cand in 0..4 {
                    if used[cand] {
                        continue;
                    }
                    let ov: Complex64 = pv
                        .iter()
                        .zip(vecs.column(cand).iter())
                        .map(|(a, b)| a.conj() * b)
                        .sum();
                    if ov.norm() > best {
                        best = ov.norm();
                        arg = cand;
                    }
                }
                used[arg] = true;
                perm[bnd] = arg;
            }
            let mut reordered = Array2::zeros((4, 4));
            for bnd in 0..4 {
                for r in 0..4 {
                    reordered[(r, bnd)] = vecs[(r, perm[bnd])];
                }
            }
            vecs = reordered;
            for bnd in 0..4 {
                let ov: Complex64 = prev
                    .column(bnd)
                    .iter()
                    .zip(vecs.column(bnd).iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                phases[bnd] += ov.arg();
            }
        }
        prev_vecs = Some(vecs);
    }
    Ok([
        phases[0] / (2.0 * PI),
        phases[1] / (2.0 * PI),
        phases[2] / (2.0 * PI),
        phases[3] / (2.0 * PI),
    ])
}

/// Charges of the four effective bands at Γ.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ChargeReport {
    /// (Π1, Π2, Π3, Π4): lower pair then upper pair
    pub pi: [i64; 4],
    /// winding of a₊ on the verification loop (upper pair uses a₊/2)
    pub winding_a_plus: i64,
    pub winding_a_minus: i64,
    pub sign_delta_c: i64,
    pub loop_radius: f64,
    /// direct Berry-phase integrals, for the oracle comparison
    pub berry: [f64; 4],
}

/// Effective local charges by half-winding of a±, cross-checked on two radii
/// and against the Berry-phase line integral.
pub fn local_charges(
    bif: &BifurcationCoefficients,
    delta: f64,
    radii: (f64, f64),
    n_samples: usize,
) -> Result<ChargeReport, TopoError> {
    assert!(delta != 0.0 && bif.c_sharp != 0.0 && bif.b_quad.norm() > 0.0);
    let gauged = rotate_b_quad_real(bif);
    let wind = |r: f64| -> Result<(i64, i64), TopoError> {
        let plus: Vec<Complex64> = (0..n_samples)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / n_samples as f64;
                a_plus(&gauged, Vec2::new(th.cos(), th.sin()) * r, delta)
            })
            .collect();
        let minus: Vec<Complex64> = (0..n_samples)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / n_samples as f64;
                a_minus(&gauged, Vec2::new(th.cos(), th.sin()) * r, delta)
            })
            .collect();
        Ok((winding_number(&plus)?, winding_number(&minus)?))
    };
    let (wp1, wm1) = wind(radii.0)?;
    let (wp2, wm2) = wind(radii.1)?;
    if wp1 != wp2 || wm1 != wm2 {
        return Err(TopoError::RadiusInconsistent(radii.0, radii.1));
    }
    let pi = [wm1 / 2, wm1 / 2, wp1 / 2, wp1 / 2];
    let berry = berry_phases(&gauged, delta, radii.0, n_samples)?;
    for j in 0..4 {
        if (berry[j] - pi[j] as f64).abs() > 0.05 {
            return Err(TopoError::OracleMismatch(pi, berry));
        }
    }
    Ok(ChargeReport {
        pi,
        winding_a_plus: wp1,
        winding_a_minus: wm1,
        sign_delta_c: (delta * bif.c_sharp).signum() as i64,
        loop_radius: radii.0,
        berry,
    })
}

/// First-order diagnostic: Berry charges of one 2x2 Dirac block
/// [[-δc♯, 2ik·v♯], [conj, δc♯]] are ±sgn(δ c♯); first order alone cannot
/// split the pair.
pub fn first_order_charges(
    bif: &BifurcationCoefficients,
    delta: f64,
    radius: f64,
    n_samples: usize,
) -> Result<(f64, f64), TopoError> {
    let mut phases = [0.0f64; 2];
    let mut prev: Option<Array2<Complex64>> = None;
    let sign = (delta * bif.c_sharp).signum();
    for i in 0..=n_samples {
        let th = 2.0 * PI * i as f64 / n_samples as f64;
        let k = Vec2::new(th.cos(), th.sin()) * radius;
        let z = bif.two_ik_dot_v(k);
        let dc = Complex64::new(delta * bif.c_sharp, 0.0);
        let mut m = Array2::zeros((2, 2));
        m[(0, 0)] = -dc;
        m[(0, 1)] = z;
        m[(1, 0)] = z.conj();
        m[(1, 1)] = dc;
        let (vals, mut vecs) = linalg::eigh(&m)?;
        // singular-section pinning: the slot vanishing at the origin is the
        // first for λ·sgn(δc♯) > 0, the second otherwise
        for c in 0..2 {
            let slot = if vals[c] * sign > 0.0 { 0 } else { 1 };
            let pivot = vecs[(slot, c)];
            if pivot.norm() < 1e-14 {
                return Err(TopoError::Undersampled(PI));
            }
            let ph = Complex64::from_polar(1.0, -pivot.arg());
            for r in 0..2 {
                vecs[(r, c)] *= ph;
            }
        }
        if let Some(p) = &prev {
            for bnd in 0..2 {
                let ov: Complex64 = p
                    .column(bnd)
                    .iter()
                    .zip(vecs.column(bnd).iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                phases[bnd] += ov.arg();
            }
        }
        prev = Some(vecs);
    }
    Ok((phases[0] / (2.0 * PI), phases[1] / (2.0 * PI)))
}

/// The 4x4 grading operator with G² = -I distinguishing the first- and
/// second-order symmetry classes.
pub fn grading_operator() -> Array2<Complex64> {
    let mut g = Array2::zeros((4, 4));
    g[(0, 3)] = Complex64::new(1.0, 0.0);
    g[(1, 2)] = Complex64::new(-1.0, 0.0);
    g[(2, 1)] = Complex64::new(1.0, 0.0);
    g[(3, 0)] = Complex64::new(-1.0, 0.0);
    g
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct GradingResiduals {
    /// max |G* B̃1(k) G - conj(B̃1(-k))|
    pub first_order: f64,
    /// max |G* B̃2°(k) G + conj(B̃2°(-k))| on the traceless part
    pub second_order: f64,
    /// the same identities with the roles swapped must fail
    pub negative_control: f64,
}

/// Verify the antiunitary grading identities. The comparison conjugates and
/// flips k (the operator represents an antiunitary symmetry), and the
/// second-order identity holds for the traceless part: the scalar
/// (m(k) - ||k||²) I piece is symmetry-inert.
pub fn grading_check(
    bif: &BifurcationCoefficients,
    delta: f64,
    k_samples: &[Vec2],
) -> GradingResiduals {
    let g = grading_operator();
    let mut first_order = 0.0f64;
    let mut second_order = 0.0f64;
    let mut negative_control = f64::INFINITY;
    let conj_mat =
        |m: &Array2<Complex64>| -> Array2<Complex64> { m.mapv(|x| x.conj()) };
    let sandwich = |m: &Array2<Complex64>| -> Array2<Complex64> {
        let gm = g.mapv(|x| x.conj()).t().dot(m).dot(&g);
        gm
    };
    for &k in k_samples {
        let b1k = b1_tilde(bif, k, delta);
        let b1mk = b1_tilde(bif, -k, delta);
        let r1 = &sandwich(&b1k) - &conj_mat(&b1mk);
        first_order = first_order.max(r1.iter().map(|x| x.norm()).fold(0.0, f64::max));

        let traceless = |m: &Array2<Complex64>| -> Array2<Complex64> {
            let tr = (m[(0, 0)] + m[(1, 1)] + m[(2, 2)] + m[(3, 3)]) / 4.0;
            let mut out = m.clone();
            for i in 0..4 {
                out[(i, i)] -= tr;
            }
            out
        };
        let b2k = traceless(&b2_tilde(bif, k));
        let b2mk = traceless(&b2_tilde(bif, -k));
        let r2 = &sandwich(&b2k) + &conj_mat(&b2mk);
        second_order = second_order.max(r2.iter().map(|x| x.norm()).fold(0.0, f64::max));

        // negative control: feeding B̃2 through the first-order identity
        let r_neg = &sandwich(&b2k) - &conj_mat(&b2mk);
        negative_control =
            negative_control.min(r_neg.iter().map(|x| x.norm()).fold(0.0, f64::max));
    }
    GradingResiduals {
        first_order,
        second_order,
        negative_control,
    }
}

/// Parity data of the four perturbed Γ eigenstates.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ParityReport {
    /// <ψ, Pψ> per state, ascending in energy
    pub parities: [f64; 4],
    /// sixfold-rotation labels l with R̃ eigenvalue e^{iπl/3}
    pub chi_labels: [usize; 4],
    /// the four perturbed energies
    pub energies: [f64; 4],
    /// upper pair parity sign (+1 even, -1 odd)
    pub upper_sign: i64,
    pub lower_sign: i64,
}

/// Solve H + δW at the Γ point and classify the four states nearest the
/// crossing by parity and sixfold-rotation label.
pub fn parity_classify(
    v: &FourierPotential,
    w: &FourierPotential,
    delta: f64,
    basis: &PlaneWaveBasis,
) -> Result<ParityReport, TopoError> {
    let q = bloch::find_quartet(v, basis, 1e-6)?;
    let h = bloch::assemble_bloch_perturbed(v, w, delta, Vec2::ZERO, basis)?;
    let (energies, vecs) = linalg::eigh(&h)?;
    let i0 = q.n_star;
    let mut parities = [0.0f64; 4];
    let mut chi_labels = [0usize; 4];
    let mut es = [0.0f64; 4];
    for j in 0..4 {
        let col: Array1<Complex64> = vecs.column(i0 + j).to_owned();
        let pcol = basis.parity(&col);
        let p = linalg::cdot(&col, &pcol).re;
        if (p.abs() - 1.0).abs() > 0.01 {
            return Err(TopoError::ParityLeakage(p));
        }
        parities[j] = p;
        let (rcol, _) = basis.rotate_sixfold(&col);
        let r_expect = linalg::cdot(&col, &rcol);
        let l = (r_expect.arg() / (PI / 3.0)).round().rem_euclid(6.0) as usize;
        chi_labels[j] = l;
        es[j] = energies[i0 + j];
    }
    // pair structure: lower two equal, upper two equal, pairs opposite
    if (parities[0] - parities[1]).abs() > 0.02
        || (parities[2] - parities[3]).abs() > 0.02
        || (parities[0] + parities[2]).abs() > 0.02
    {
        return Err(TopoError::PatternBroken);
    }
    Ok(ParityReport {
        parities,
        chi_labels,
        energies: es,
        upper_sign: parities[2].signum() as i64,
        lower_sign: parities[0].signum() as i64,
    })
}
