use std::time::Instant;
use superhc_core::bifurcation;
use superhc_core::bloch;
use superhc_core::dirac::{self, DomainWall};
use superhc_core::lattice::{build_edge, build_lattice};
use superhc_core::potential::{split_perturbation, wu_hu_potential};
use superhc_core::ribbon::{self, WallProfile};
use superhc_core::vec2::Vec2;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let delta: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.10);
    let l_cells: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(48);
    let skel: i64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(5);

    let t0 = Instant::now();
    let lat = build_lattice(Vec2::new(3.0_f64.sqrt() / 2.0, 0.5)).unwrap();
    let v = wu_hu_potential(1.0 / 3.0, &lat, 26).unwrap();
    let v_def = wu_hu_potential(1.1 / 3.0, &lat, 26).unwrap();
    let (w, _) = split_perturbation(&v_def, &v).unwrap();
    let edge = build_edge(&lat, 1, 0).unwrap();

    // skeleton reference + effective-model prediction at the same window
    let q = ribbon::skeleton_reference(&v, skel).unwrap();
    let q = bloch::fix_gauge(&lat, &q, &edge).unwrap();
    let (bif, res) = bifurcation::compute_coefficients(&v, &w, &q).unwrap();
    let rate = bif.c_sharp.abs() / (bif.v_f * edge.l2.norm());
    let half_extent = (20.0 / rate) + 10.0;
    let zm = dirac::build_zero_mode(
        &DomainWall::Tanh { scale: 1.0 },
        bif.v_f,
        edge.l2.norm(),
        bif.c_sharp,
        4097,
        half_extent,
    )
    .unwrap();
    let eb = dirac::edge_bifurcation(&q, &w, &zm, &edge, &res, bif.c_sharp).unwrap();
    let sr = dirac::verify_quartet_structure(&q, &w, &edge, &res).unwrap();
    println!("structure: {sr:?}");
    println!("b1 {:?} b2 {:?} b3 {:?} b4 {:?} m1 {:.4} m4 {:.4}", eb.b1, eb.b2, eb.b3, eb.b4, eb.m1, eb.m4);
    println!("quads: kin {:.6} mix {:.6} eta2 {:.6}", eb.quad_kin, eb.quad_mix, eb.quad_eta2);
    println!(
        "skel hex({skel}): E_D {:.6}  c# {:.4}  vF {:.4}  b_edge {:.5}  m0 {:.5}",
        q.e_d, bif.c_sharp, bif.v_f, eb.b_edge, eb.m0
    );
    println!(
        "predicted in-gap: E_D + d^2*(-m0 +- b_edge) = {:.6} / {:.6} (splitting {:.5})",
        q.e_d + delta * delta * eb.e2.0,
        q.e_d + delta * delta * eb.e2.1,
        2.0 * eb.b_edge.abs() * delta * delta
    );

    let basis = ribbon::RibbonBasis::new(&lat, &edge, skel, l_cells);
    println!("ribbon dim {} (L={l_cells}, delta={delta})", basis.dim);
    let profile = WallProfile::Periodized(DomainWall::Tanh { scale: 1.0 });
    let dom = ribbon::RibbonDomain::new(edge, l_cells, 0.0).unwrap();
    let half = 3.0 * bif.c_sharp.abs() * delta;
    let t1 = Instant::now();
    let spec = ribbon::solve_edge(&v, &w, &profile, delta, &dom, &basis, (q.e_d - half, q.e_d + half)).unwrap();
    println!("solve time {:.1}s, {} states in window +-{half:.3}", t1.elapsed().as_secs_f64(), spec.energies.len());
    for j in 0..spec.energies.len() {
        let e = spec.energies[j];
        if (e - q.e_d).abs() < 1.2 * bif.c_sharp.abs() * delta {
            println!(
                "  E-E_D = {:+.6}  loc_wall {:.3} loc_anti {:.3}  {:?}",
                e - q.e_d,
                spec.loc_wall[j],
                spec.loc_anti[j],
                spec.class[j]
            );
        }
    }
    println!("total {:.1}s", t0.elapsed().as_secs_f64());
}
