//! Bessel function of the first kind, order one.
//!
//! Two regimes: the power series for small arguments (no cancellation below
//! x ≈ 9), and periodic-trapezoid quadrature of the integral representation
//! J₁(x) = (1/π) ∫₀^π cos(θ - x sin θ) dθ for the rest. The integrand extends
//! to an even 2π-periodic analytic function, so the trapezoid rule converges
//! exponentially; the node count grows linearly with x.

const SERIES_CUTOFF: f64 = 9.0;

/// J₁(x), absolute accuracy better than 1e-12 on [0, 200].
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let val = if ax < SERIES_CUTOFF {
        j1_series(ax)
    } else {
        j1_integral(ax)
    };
    if x < 0.0 {
        -val
    } else {
        val
    }
}

fn j1_series(x: f64) -> f64 {
    // J1(x) = sum_m (-1)^m / (m! (m+1)!) (x/2)^{2m+1}
    let h = 0.5 * x;
    let h2 = h * h;
    let mut term = h;
    let mut sum = h;
    let mut m = 1u32;
    while m < 60 {
        let mf = m as f64;
        term *= -h2 / (mf * (mf + 1.0));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-30) {
            break;
        }
        m += 1;
    }
    sum
}

fn j1_integral(x: f64) -> f64 {
    // Node count: the integrand has Fourier content up to ~x; pad generously.
    let n = (4.0 * (x + 30.0)).ceil() as usize;
    let n = n.next_multiple_of(16);
    let h = std::f64::consts::PI / n as f64;
    // Trapezoid over [0, π]; the endpoint integrand values are cos(0) = 1 and
    // cos(π - x sin π) = -1, so the endpoint pair cancels.
    let mut sum = 0.0;
    for i in 1..n {
        let theta = i as f64 * h;
        sum += (theta - x * theta.sin()).cos();
    }
    sum * h / std::f64::consts::PI
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values frozen from 30-digit arbitrary-precision evaluation.
    const REFERENCE: &[(f64, f64)] = &[
        (0.1, 0.0499375260362420003),
        (0.5, 0.242268457674873886),
        (1.0, 0.440050585744933516),
        (2.0, 0.576724807756873387),
        (3.831705970207512, 1.17363028227286397e-16),
        (5.0, -0.327579137591465222),
        (8.9, 0.255902371443975854),
        (9.1, 0.232430745005856479),
        (12.0, -0.223447104490627612),
        (25.0, -0.125350249580289905),
        (50.0, -0.0975118281251751377),
        (100.0, -0.077145352014112158),
        (150.0, -0.0651451636577273603),
        (199.5, -0.0403713123605196744),
    ];

    #[test]
    fn matches_reference_to_1e12() {
        for &(x, want) in REFERENCE {
            let got = bessel_j1(x);
            assert!(
                (got - want).abs() < 1e-12,
                "J1({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn zero_and_oddness() {
        assert_eq!(bessel_j1(0.0), 0.0);
        for &x in &[0.3, 2.7, 15.0, 80.0] {
            assert!((bessel_j1(-x) + bessel_j1(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn regimes_agree_at_crossover() {
        for &x in &[8.5, 8.8, 9.0, 9.2, 9.5] {
            let s = j1_series(x);
            let q = j1_integral(x);
            assert!((s - q).abs() < 1e-12, "x={x}: series {s} vs quad {q}");
        }
    }
}
