use superhc_core::bifurcation;
use superhc_core::bloch;
use superhc_core::dirac::DomainWall;
use superhc_core::lattice::{build_edge, build_lattice};
use superhc_core::potential::{split_perturbation, wu_hu_potential};
use superhc_core::ribbon::{self, WallProfile};
use superhc_core::vec2::Vec2;

fn main() {
    let lat = build_lattice(Vec2::new(3.0_f64.sqrt() / 2.0, 0.5)).unwrap();
    let v = wu_hu_potential(1.0 / 3.0, &lat, 26).unwrap();
    let v_def = wu_hu_potential(1.1 / 3.0, &lat, 26).unwrap();
    let (w, _) = split_perturbation(&v_def, &v).unwrap();
    let edge = build_edge(&lat, 1, 0).unwrap();
    let delta = 0.15f64;
    let unpruned = std::env::args().nth(1).map(|a| a == "unpruned").unwrap_or(false);
    for (skel, l) in [(5i64, 64usize), (6, 48), (6, 80)] {
        let q = ribbon::skeleton_reference(&v, skel).unwrap();
        let q = bloch::fix_gauge(&lat, &q, &edge).unwrap();
        let (bif, _) = bifurcation::compute_coefficients(&v, &w, &q).unwrap();
        let profile = WallProfile::Periodized(DomainWall::Tanh { scale: 1.0 });
        let basis = if unpruned {
            ribbon::RibbonBasis::new_unpruned(&lat, &edge, skel, l)
        } else {
            ribbon::RibbonBasis::new(&lat, &edge, skel, l)
        };
        let dom = ribbon::RibbonDomain::new(edge, l, 0.0).unwrap();
        let half = 3.0 * bif.c_sharp.abs() * delta;
        let t = std::time::Instant::now();
        let spec = ribbon::solve_edge(&v, &w, &profile, delta, &dom, &basis, (q.e_d - half, q.e_d + half)).unwrap();
        let gap: Vec<f64> = spec
            .energies
            .iter()
            .filter(|e| (**e - q.e_d).abs() < 0.75 * bif.c_sharp.abs() * delta)
            .map(|e| *e - q.e_d)
            .collect();
        if gap.len() == 4 {
            let c1 = 0.5 * (gap[0] + gap[1]);
            let c2 = 0.5 * (gap[2] + gap[3]);
            println!(
                "skel {skel} L {l:3} dim {:5} ({:3.0}s): split/δ²={:.4} mid/δ²={:+.4}  pairsplits {:.5} {:.5}",
                basis.dim, t.elapsed().as_secs_f64(),
                (c2 - c1) / (delta * delta),
                0.5 * (c1 + c2) / (delta * delta),
                gap[1] - gap[0], gap[3] - gap[2]
            );
        } else {
            println!("skel {skel} L {l}: {} gap states", gap.len());
        }
    }
}
