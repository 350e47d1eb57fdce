//! Small special-function helpers shared by the potential catalog and the
//! distortion fields.

use num_complex::Complex64;

/// `e^{-1/x}` for `x > 0`, zero otherwise.
pub fn smooth_step_base(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

fn smooth_step_base_derivative(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp() / (x * x)
    } else {
        0.0
    }
}

/// Smooth plateau: 1 on `[0, 1]`, 0 on `[2, ∞)`, even in `t`.
pub fn plateau(t: f64) -> f64 {
    let t = t.abs();
    if t <= 1.0 {
        return 1.0;
    }
    if t >= 2.0 {
        return 0.0;
    }
    let a = smooth_step_base(2.0 - t);
    let b = smooth_step_base(t - 1.0);
    a / (a + b)
}

/// Derivative of [`plateau`] with respect to `t`.
pub fn plateau_derivative(t: f64) -> f64 {
    let s = t.abs();
    if s <= 1.0 || s >= 2.0 {
        return 0.0;
    }
    let a = smooth_step_base(2.0 - s);
    let b = smooth_step_base(s - 1.0);
    let da = -smooth_step_base_derivative(2.0 - s);
    let db = smooth_step_base_derivative(s - 1.0);
    let d = (da * b - a * db) / ((a + b) * (a + b));
    if t < 0.0 {
        -d
    } else {
        d
    }
}

const BERNOULLI_2J: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Hurwitz zeta `Σ_{k≥0} (a+k)^{-s}` for integer `s ≥ 2` and complex `a`
/// with `Re a` large (≳ 10), by Euler–Maclaurin after a few explicit terms.
pub fn hurwitz_zeta(s: u32, a: Complex64) -> Complex64 {
    let shift = 8usize;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..shift {
        sum += (a + k as f64).powi(-(s as i32));
    }
    let b = a + shift as f64;
    let sf = s as f64;
    sum += b.powi(1 - s as i32) / (sf - 1.0);
    sum += b.powi(-(s as i32)) * 0.5;
    // rising factorial s(s+1)...(s+2j-2) / (2j)!
    let mut coeff = sf / 2.0;
    let mut power = b.powi(-(s as i32) - 1);
    let inv_b2 = b.powi(-2);
    for (j, bern) in BERNOULLI_2J.iter().enumerate() {
        let term = power * (bern * coeff);
        sum += term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
        let j = j as f64 + 1.0;
        coeff *= (sf + 2.0 * j - 1.0) * (sf + 2.0 * j) / ((2.0 * j + 1.0) * (2.0 * j + 2.0));
        power *= inv_b2;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_shape() {
        assert_eq!(plateau(0.3), 1.0);
        assert_eq!(plateau(-1.0), 1.0);
        assert_eq!(plateau(2.5), 0.0);
        assert!((plateau(1.5) - 0.5).abs() < 1e-15);
        for i in 1..100 {
            let t = 1.0 + i as f64 / 100.0;
            assert!(plateau(t) <= plateau(t - 0.01));
        }
    }

    #[test]
    fn plateau_derivative_matches_differences() {
        for &t in &[1.1, 1.37, 1.5, 1.8, 1.95, -1.3] {
            let fd = (plateau(t + 1e-6) - plateau(t - 1e-6)) / 2e-6;
            assert!((fd - plateau_derivative(t)).abs() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn hurwitz_matches_riemann_values_and_recurrence() {
        let pi2 = std::f64::consts::PI.powi(2);
        let partial2: f64 = (1..17).map(|k| (k as f64).powi(-2)).sum();
        let partial4: f64 = (1..17).map(|k| (k as f64).powi(-4)).sum();
        let a = Complex64::new(17.0, 0.0);
        assert!((hurwitz_zeta(2, a).re - (pi2 / 6.0 - partial2)).abs() < 1e-15);
        assert!((hurwitz_zeta(4, a).re - (pi2 * pi2 / 90.0 - partial4)).abs() < 1e-15);
        let a = Complex64::new(16.3, -0.8);
        for s in [2u32, 4, 6] {
            let diff = hurwitz_zeta(s, a) - hurwitz_zeta(s, a + 1.0);
            let want = a.powi(-(s as i32));
            assert!((diff - want).norm() < 1e-13 * want.norm(), "s={s}");
        }
    }
}
