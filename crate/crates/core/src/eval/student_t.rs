//! Student-t tail probabilities from first principles.
//!
//! `P(|T| > t)` for df degrees of freedom equals the regularized incomplete
//! beta `I_x(df/2, 1/2)` at `x = df/(df + t²)`, evaluated with a Lanczos
//! log-gamma and a modified-Lentz continued fraction. Worst-case absolute
//! error across the df/t ranges used here is well under 1e-8.

/// Lanczos approximation, g = 7, 9 coefficients.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

pub fn ln_gamma(z: f64) -> f64 {
    assert!(z > 0.0, "ln_gamma needs a positive argument, got {z}");
    if z < 0.5 {
        // Reflection keeps the series in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const FPMIN: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=300 {
        let mf = m as f64;
        let m2 = 2.0 * mf;
        let aa = mf * (b - mf) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + mf) * (qab + mf) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "beta parameters must be positive");
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front =
        (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp();
    // The continued fraction converges fast only below the mean; use the
    // symmetry I_x(a,b) = 1 − I_{1−x}(b,a) on the other side.
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Two-sided p-value `P(|T| > t)` for a Student-t with `df` degrees of
/// freedom. `t = 0` gives exactly 1, infinite `t` gives exactly 0.
pub fn two_sided_p(t: f64, df: f64) -> f64 {
    assert!(df > 0.0, "degrees of freedom must be positive, got {df}");
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
}

/// Student-t CDF. `cdf(0.0, df)` is exactly 0.5.
pub fn cdf(t: f64, df: f64) -> f64 {
    let half_tail = two_sided_p(t, df) / 2.0;
    if t >= 0.0 {
        1.0 - half_tail
    } else {
        half_tail
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_matches_factorials_and_half_integers() {
        for (z, expected) in [
            (1.0, 0.0),
            (2.0, 0.0),
            (5.0, 24.0f64.ln()),
            (11.0, 3_628_800.0f64.ln()),
            (0.5, std::f64::consts::PI.sqrt().ln()),
        ] {
            assert!((ln_gamma(z) - expected).abs() < 1e-12, "lnΓ({z})");
        }
    }

    #[test]
    fn classic_t_table_values() {
        // (df, t, two-sided p) from standard tables.
        for (df, t, p) in [
            (10.0, 2.228, 0.05),
            (5.0, 2.571, 0.05),
            (30.0, 2.042, 0.05),
            (10.0, 3.169, 0.01),
            (1.0, 12.706, 0.05),
        ] {
            let got = two_sided_p(t, df);
            assert!((got - p).abs() < 1e-3, "df={df} t={t}: {got} vs {p}");
        }
    }

    #[test]
    fn cauchy_case_is_analytic() {
        // df = 1 is Cauchy: P(|T| > 1) = 0.5 and P(|T| > tan(3π/8)) = 0.25.
        assert!((two_sided_p(1.0, 1.0) - 0.5).abs() < 1e-10);
        let q75 = (3.0 * std::f64::consts::PI / 8.0).tan();
        assert!((two_sided_p(q75, 1.0) - 0.25).abs() < 1e-10);
    }

    #[test]
    fn cdf_at_zero_is_exactly_half() {
        for df in 1..=30 {
            assert_eq!(cdf(0.0, df as f64), 0.5);
        }
    }

    #[test]
    fn cdf_is_monotone_and_symmetric() {
        let df = 7.0;
        let mut last = 0.0;
        for i in -40..=40 {
            let t = i as f64 * 0.25;
            let c = cdf(t, df);
            assert!(c >= last, "cdf not monotone at t={t}");
            assert!((cdf(-t, df) - (1.0 - c)).abs() < 1e-12);
            last = c;
        }
    }

    #[test]
    fn extreme_t_underflows_to_zero_not_negative() {
        let p = two_sided_p(100.0, 20.0);
        assert!(p >= 0.0 && p < 1e-20);
        assert_eq!(two_sided_p(f64::INFINITY, 5.0), 0.0);
    }
}
