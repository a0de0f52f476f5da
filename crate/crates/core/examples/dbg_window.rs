use superhc_core::bifurcation::{self, Resolvent};
use superhc_core::bloch::{self, PlaneWaveBasis};
use superhc_core::lattice::{build_edge, build_lattice};
use superhc_core::potential::{split_perturbation, wu_hu_potential};
use superhc_core::vec2::Vec2;

fn main() {
    let lat = build_lattice(Vec2::new(3.0_f64.sqrt() / 2.0, 0.5)).unwrap();
    let v = wu_hu_potential(1.0 / 3.0, &lat, 26).unwrap();
    let v_def = wu_hu_potential(1.1 / 3.0, &lat, 26).unwrap();
    let (w, _) = split_perturbation(&v_def, &v).unwrap();
    let edge = build_edge(&lat, 1, 0).unwrap();
    println!("window   dim   E_D         spread    v_F       c#        b(l2).re   m(l2)");
    for c in [4i64, 5, 6, 7, 9, 11, 13] {
        let basis = PlaneWaveBasis::new(c);
        let q = match bloch::find_quartet(&v, &basis, 1e-6) {
            Ok(q) => q,
            Err(e) => { println!("hex({c}): {e}"); continue; }
        };
        let q = bloch::fix_gauge(&lat, &q, &edge).unwrap();
        let (_, _, v_f, _) = bloch::compute_v_sharp(&lat, &q);
        let c_sh = bifurcation::compute_c_sharp(&q, &w).unwrap();
        let res = Resolvent::new(&v, &q).unwrap();
        let (ml2, bl2) = bifurcation::compute_m_b(&lat, &q, &res, edge.l2).unwrap();
        println!(
            "hex({c:2})  {:4}  {:.6}  {:.2e}  {:.6}  {:.6}  {:.5}  {:.5}",
            basis.dim, q.e_d, q.cluster_spread, v_f, c_sh, bl2.re, ml2
        );
    }
}
