use superhc_core::dirac::{double_wall_levels, DomainWall};

fn main() {
    let vf = 4.5255;
    let l2n = 7.2552;
    let cs = 4.8808;
    let a = vf * l2n;
    // periodized double wall: up at 0, down at Z/2, via image sum
    let eta_per = |zeta: f64, z: f64, sigma: f64| -> f64 {
        let mut acc = -1.0;
        for n in -6i32..=6 {
            let zz = zeta - n as f64 * z;
            acc += ((zz) / sigma).tanh() - ((zz - 0.5 * z) / sigma).tanh();
        }
        acc
    };
    println!("deltaL   Z        in-gap levels of D(0) (x delta gives energy)");
    for delta_l in [8.0f64, 11.0, 14.0, 16.0, 20.0] {
        let z = 2.0 * std::f64::consts::PI * delta_l;
        let n = 1400usize;
        let h = z / n as f64;
        let eu: Vec<f64> = (0..n).map(|i| eta_per(h * i as f64, z, 1.0)).collect();
        let ev: Vec<f64> = (0..n).map(|i| eta_per(h * (i as f64 + 0.5), z, 1.0)).collect();
        let levels = double_wall_levels(a, cs, &eu, &ev, z, 4).unwrap();
        println!("{delta_l:5.1}  {z:7.2}  {levels:?}");
    }
    let _ = DomainWall::Sharp;
}
