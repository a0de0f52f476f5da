use superhc_core::bifurcation::{self};
use superhc_core::bloch;
use superhc_core::dirac::{self, DomainWall};
use superhc_core::lattice::{build_edge, build_lattice};
use superhc_core::linalg;
use superhc_core::potential::{split_perturbation, wu_hu_potential};
use superhc_core::ribbon::{self, WallProfile};
use superhc_core::vec2::Vec2;

fn main() {
    let lat = build_lattice(Vec2::new(3.0_f64.sqrt() / 2.0, 0.5)).unwrap();
    let v = wu_hu_potential(1.0 / 3.0, &lat, 26).unwrap();
    let v_def = wu_hu_potential(1.1 / 3.0, &lat, 26).unwrap();
    let (w, _) = split_perturbation(&v_def, &v).unwrap();
    let edge = build_edge(&lat, 1, 0).unwrap();
    let skel = 5i64;
    let q = ribbon::skeleton_reference(&v, skel).unwrap();
    let q = bloch::fix_gauge(&lat, &q, &edge).unwrap();
    let (bif, _res) = bifurcation::compute_coefficients(&v, &w, &q).unwrap();

    // bulk Γ second-order: mean of the 4 perturbed states vs -m4 δ²
    println!("bulk Γ quartet mean shift / δ² (expect ≈ -m4 = -2.916):");
    for delta in [0.05f64, 0.1, 0.15] {
        let h = bloch::assemble_bloch_perturbed(&v, &w, delta, Vec2::ZERO, &q.basis).unwrap();
        let e = linalg::eigvalsh(&h).unwrap();
        let mean = 0.25 * (e[q.n_star] + e[q.n_star + 1] + e[q.n_star + 2] + e[q.n_star + 3]);
        println!("  δ={delta}: mean-E_D = {:+.6} -> /δ² = {:+.4}", mean - q.e_d, (mean - q.e_d) / (delta * delta));
        // also the individual energies vs E_D ∓ c♯δ - (m4 ± b4)δ²
    }

    let profile = WallProfile::Periodized(DomainWall::Tanh { scale: 1.0 });
    println!("ribbon in-gap pair centers vs δ (δL = 9.6):");
    for (delta, l) in [(0.20f64, 48usize), (0.15, 64), (0.10, 96)] {
        let basis = ribbon::RibbonBasis::new(&lat, &edge, skel, l);
        let dom = ribbon::RibbonDomain::new(edge, l, 0.0).unwrap();
        let half = 3.0 * bif.c_sharp.abs() * delta;
        let t = std::time::Instant::now();
        let spec = ribbon::solve_edge(&v, &w, &profile, delta, &dom, &basis, (q.e_d - half, q.e_d + half)).unwrap();
        let gap: Vec<(f64, f64, f64)> = spec
            .energies
            .iter()
            .enumerate()
            .filter(|(_, e)| (**e - q.e_d).abs() < 0.75 * bif.c_sharp.abs() * delta)
            .map(|(j, e)| (*e - q.e_d, spec.loc_wall[j], spec.loc_anti[j]))
            .collect();
        println!("  δ={delta} L={l} dim={} ({:.0}s):", basis.dim, t.elapsed().as_secs_f64());
        for (e, lw, la) in &gap {
            println!("    E-E_D {:+.6}  loc w/a {:.3}/{:.3}", e, lw, la);
        }
        if gap.len() == 4 {
            let c1 = 0.5 * (gap[0].0 + gap[1].0);
            let c2 = 0.5 * (gap[2].0 + gap[3].0);
            println!(
                "    centers {:+.6} {:+.6}; split/δ² = {:.4}; mid/δ² = {:+.4}",
                c1, c2, (c2 - c1) / (delta * delta), 0.5 * (c1 + c2) / (delta * delta)
            );
        }
    }
    println!("model: 2|b_edge| = {:.4}; -m0 = {:+.4}", 0.807, -1.1396);
}
