use superhc_core::bifurcation::{self, Resolvent};
use superhc_core::bloch::{self, PlaneWaveBasis};
use superhc_core::lattice::{build_edge, build_lattice};
use superhc_core::potential::{split_perturbation, wu_hu_potential};
use superhc_core::vec2::Vec2;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let lat = build_lattice(Vec2::new(3.0_f64.sqrt() / 2.0, 0.5)).unwrap();
    let v = wu_hu_potential(1.0 / 3.0, &lat, 26).unwrap();
    let v_def = wu_hu_potential(1.1 / 3.0, &lat, 26).unwrap();
    let (w, _) = split_perturbation(&v_def, &v).unwrap();
    let edge = build_edge(&lat, 1, 0).unwrap();
    let basis = PlaneWaveBasis::new(13);
    let q = bloch::find_quartet(&v, &basis, 1e-6).unwrap();
    let q = bloch::fix_gauge(&lat, &q, &edge).unwrap();
    println!("t setup+quartet: {:.2}s", t0.elapsed().as_secs_f64());
    println!("n_star={} E_D={:.9} spread={:.2e}", q.n_star, q.e_d, q.cluster_spread);
    let (bif, res) = bifurcation::compute_coefficients(&v, &w, &q).unwrap();
    println!("v_F = {:.9}  theta# = {:.6}", bif.v_f, bif.theta_sharp);
    println!("c# = {:.9}", bif.c_sharp);
    println!("m_form = {:?}", bif.m_form);
    println!("b_quad = {:.9} + {:.9}i  (fit res {:.2e})", bif.b_quad.re, bif.b_quad.im, bif.b_fit_residual);
    let l2 = edge.l2;
    let (m_l2, b_l2) = bifurcation::compute_m_b(&lat, &q, &res, l2).unwrap();
    println!("m(l2) = {:.9}   b(l2) = {:.9}+{:.9}i", m_l2, b_l2.re, b_l2.im);
    println!("|l2| = {:.6}  v_F|l2| = {:.6}", l2.norm(), bif.v_f * l2.norm());
    let kappa = bif.c_sharp.abs() / (bif.v_f * l2.norm());
    println!("kappa = |c#|/(v_F|l2|) = {:.6}", kappa);
    println!("Det[l1t, l2] = {:.6}", edge.l1_tilde.det(l2));
    // quick gap check
    let scan = bifurcation::gap_vs_delta(&v, &w, &q, &[0.01, 0.02, 0.04]).unwrap();
    println!("gap slope = {:.6}  vs 2|c#| = {:.6}", scan.slope, 2.0 * bif.c_sharp.abs());
    // edge-splitting ingredients (paper normalization ∫α² = 1/2):
    // b_edge = 2 Re(b1) <α, α''>, b1 = -b(l2); m0 terms with m1 = -m(l2)
    println!("Re b1 = Re(-b(l2)) = {:.6}", -b_l2.re);
    println!("t total: {:.2}s", t0.elapsed().as_secs_f64());
}
