//! Modified Bessel functions I0, I1, K0, K1 for small positive arguments.
//!
//! Primary evaluation is by power series (the arguments needed here stay
//! below ~2, where the series converge in at most ~25 terms). A second,
//! algorithmically independent evaluation by quadrature of the integral
//! representations backs the series in tests.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// I0(x) = Σ (x²/4)^k / (k!)²
pub fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=40 {
        term *= q / ((k * k) as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// I1(x) = (x/2) Σ (x²/4)^k / (k! (k+1)!)
pub fn bessel_i1(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=40 {
        term *= q / ((k * (k + 1)) as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    0.5 * x * sum
}

/// K0(x) = -(ln(x/2) + γ) I0(x) + Σ_{k≥1} (x²/4)^k / (k!)² H_k
pub fn bessel_k0(x: f64) -> f64 {
    assert!(x > 0.0);
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut h = 0.0;
    let mut sum = 0.0;
    for k in 1..=40 {
        term *= q / ((k * k) as f64);
        h += 1.0 / k as f64;
        let add = term * h;
        sum += add;
        if add < 1e-18 * (sum.abs() + 1.0) {
            break;
        }
    }
    -((x / 2.0).ln() + EULER_GAMMA) * bessel_i0(x) + sum
}

/// K1(x) = (ln(x/2) + γ) I1(x) + 1/x
///         - (x/4) Σ_{k≥0} (H_k + H_{k+1}) (x²/4)^k / (k! (k+1)!)
pub fn bessel_k1(x: f64) -> f64 {
    assert!(x > 0.0);
    let q = x * x / 4.0;
    let mut term = 1.0; // (x²/4)^k / (k! (k+1)!)
    let mut hk = 0.0;
    let mut hk1 = 1.0;
    let mut sum = term * (hk + hk1);
    for k in 1..=40 {
        term *= q / ((k * (k + 1)) as f64);
        hk += 1.0 / k as f64;
        hk1 += 1.0 / (k + 1) as f64;
        let add = term * (hk + hk1);
        sum += add;
        if add < 1e-18 * (sum.abs() + 1.0) {
            break;
        }
    }
    ((x / 2.0).ln() + EULER_GAMMA) * bessel_i1(x) + 1.0 / x - 0.25 * x * sum
}

/// Independent evaluation of I0 and I1 through
/// I_n(x) = (1/π) ∫_0^π e^{x cos θ} cos(nθ) dθ, by composite Gauss rules.
pub fn bessel_i_by_quadrature(n: usize, x: f64) -> f64 {
    let rule = crate::quadrature::edge_rule(23).expect("valid degree");
    let panels = 40;
    let mut total = 0.0;
    for p in 0..panels {
        let a = std::f64::consts::PI * p as f64 / panels as f64;
        let b = std::f64::consts::PI * (p + 1) as f64 / panels as f64;
        for (q, w) in rule.points.iter().zip(&rule.weights) {
            let theta = a + (b - a) * q[0];
            total += w * (b - a) * (x * theta.cos()).exp() * (n as f64 * theta).cos();
        }
    }
    total / std::f64::consts::PI
}

/// Independent evaluation of K0 and K1 through
/// K_n(x) = ∫_0^∞ e^{-x cosh t} cosh(n t) dt, truncated where the
/// integrand underflows.
pub fn bessel_k_by_quadrature(n: usize, x: f64) -> f64 {
    assert!(x > 0.0);
    let t_max = (745.0 / x).acosh();
    let rule = crate::quadrature::edge_rule(23).expect("valid degree");
    let panels = 80;
    let mut total = 0.0;
    for p in 0..panels {
        let a = t_max * p as f64 / panels as f64;
        let b = t_max * (p + 1) as f64 / panels as f64;
        for (q, w) in rule.points.iter().zip(&rule.weights) {
            let t = a + (b - a) * q[0];
            total += w * (b - a) * (-x * t.cosh()).exp() * (n as f64 * t).cosh();
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values_at_one() {
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-15);
        assert!((bessel_i1(1.0) - 0.565_159_103_992_485).abs() < 1e-15);
        assert!((bessel_k0(1.0) - 0.421_024_438_240_708_3).abs() < 1e-14);
        assert!((bessel_k1(1.0) - 0.601_907_230_197_234_6).abs() < 1e-14);
    }

    #[test]
    fn series_matches_integral_representation() {
        // sample the working range [0, sqrt(2)]
        for k in 0..=20 {
            let x = 0.02 + (2f64.sqrt() - 0.02) * k as f64 / 20.0;
            let i0 = bessel_i0(x);
            let i1 = bessel_i1(x);
            assert!(
                (i0 - bessel_i_by_quadrature(0, x)).abs() < 1e-12 * i0,
                "I0({x})"
            );
            assert!(
                (i1 - bessel_i_by_quadrature(1, x)).abs() < 1e-12 * i0,
                "I1({x})"
            );
            let k0 = bessel_k0(x);
            let k1 = bessel_k1(x);
            assert!(
                (k0 - bessel_k_by_quadrature(0, x)).abs() < 1e-12 * k0.max(1.0),
                "K0({x})"
            );
            assert!(
                (k1 - bessel_k_by_quadrature(1, x)).abs() < 1e-12 * k1.max(1.0),
                "K1({x})"
            );
        }
    }

    #[test]
    fn wronskian_identity() {
        // I0(x) K1(x) + I1(x) K0(x) = 1/x
        for &x in &[0.1, 0.5, 1.0, 1.4] {
            let w = bessel_i0(x) * bessel_k1(x) + bessel_i1(x) * bessel_k0(x);
            assert!((w - 1.0 / x).abs() < 1e-13, "x = {x}: {w}");
        }
    }
}
