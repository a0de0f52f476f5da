use ndarray::Array2;
use num_complex::Complex64;
use superhc_core::bifurcation::BifurcationCoefficients;
use superhc_core::linalg;
use superhc_core::topo::{a_minus, a_plus, b1_tilde, b2_tilde, rotate_b_quad_real, winding_number};
use superhc_core::vec2::Vec2;
use std::f64::consts::PI;

fn berry_pivot(
    bif: &BifurcationCoefficients,
    delta: f64,
    radius: f64,
    n: usize,
    pivot: &dyn Fn(&Array2<Complex64>, usize) -> Complex64,
) -> [f64; 4] {
    let mut prev: Option<Array2<Complex64>> = None;
    let mut phases = [0.0f64; 4];
    for i in 0..=n {
        let th = 2.0 * PI * i as f64 / n as f64;
        let k = Vec2::new(th.cos(), th.sin()) * radius;
        let m = b1_tilde(bif, k, delta) + b2_tilde(bif, k);
        let (_, mut vecs) = linalg::eigh(&m).unwrap();
        for c in 0..4 {
            let pv = pivot(&vecs, c);
            let ph = Complex64::from_polar(1.0, -pv.arg());
            for r in 0..4 { vecs[(r, c)] *= ph; }
        }
        if let Some(p) = &prev {
            let mut perm = [usize::MAX; 4];
            let mut used = [false; 4];
            for b in 0..4 {
                let (mut best, mut am) = (0.0, 0);
                for cand in 0..4 {
                    if used[cand] { continue; }
                    let ov: Complex64 = p.column(b).iter().zip(vecs.column(cand).iter()).map(|(a, b)| a.conj() * b).sum();
                    if ov.norm() > best { best = ov.norm(); am = cand; }
                }
                used[am] = true; perm[b] = am;
            }
            let mut re = Array2::zeros((4, 4));
            for b in 0..4 { for r in 0..4 { re[(r, b)] = vecs[(r, perm[b])]; } }
            vecs = re;
            for b in 0..4 {
                let ov: Complex64 = p.column(b).iter().zip(vecs.column(b).iter()).map(|(a, b)| a.conj() * b).sum();
                phases[b] += ov.arg();
            }
        }
        prev = Some(vecs);
    }
    [phases[0]/(2.0*PI), phases[1]/(2.0*PI), phases[2]/(2.0*PI), phases[3]/(2.0*PI)]
}

fn main() {
    let vf = 2.0;
    let th = 0.37;
    let e = Complex64::from_polar(1.0, th);
    for (cs, delta) in [(1.3f64, 0.05f64), (1.3, -0.05), (-1.3, 0.05)] {
        let bif = BifurcationCoefficients {
            v_sharp: [e * (vf / 2.0), e * Complex64::i() * (vf / 2.0)],
            v_f: vf, theta_sharp: th, c_sharp: cs,
            m_form: [[0.4, 0.0], [0.0, 0.4]],
            b_quad: Complex64::new(0.8, 0.45), b_fit_residual: 0.0,
        };
        let g = rotate_b_quad_real(&bif);
        let r = 0.01;
        let wp = winding_number(&(0..720).map(|i| { let t = 2.0*PI*i as f64/720.0; a_plus(&g, Vec2::new(t.cos(), t.sin())*r, delta)}).collect::<Vec<_>>()).unwrap();
        let wm = winding_number(&(0..720).map(|i| { let t = 2.0*PI*i as f64/720.0; a_minus(&g, Vec2::new(t.cos(), t.sin())*r, delta)}).collect::<Vec<_>>()).unwrap();
        println!("cs={cs} delta={delta}: W(a+)={wp} W(a-)={wm} -> pi = [{},{},{},{}]", wm/2, wm/2, wp/2, wp/2);
        let pivots: Vec<(&str, Box<dyn Fn(&Array2<Complex64>, usize) -> Complex64>)> = vec![
            ("c0", Box::new(|v: &Array2<Complex64>, c: usize| v[(0, c)])),
            ("c1", Box::new(|v: &Array2<Complex64>, c: usize| v[(1, c)])),
            ("c2", Box::new(|v: &Array2<Complex64>, c: usize| v[(2, c)])),
            ("c3", Box::new(|v: &Array2<Complex64>, c: usize| v[(3, c)])),
            ("c1+c2", Box::new(|v: &Array2<Complex64>, c: usize| v[(1, c)] + v[(2, c)])),
        ];
        for (name, p) in &pivots {
            let b = berry_pivot(&g, delta, r, 1440, p.as_ref());
            println!("   pivot {name}: [{:+.3}, {:+.3}, {:+.3}, {:+.3}]", b[0], b[1], b[2], b[3]);
        }
    }
}
