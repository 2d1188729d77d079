//! Sample moments and the Student-t quantile used for replication
//! confidence intervals.

use crate::scalar::Scalar;

/// Sample mean. NaN for an empty slice.
pub fn mean<T: Scalar>(xs: &[T]) -> T {
    match T::from_usize(xs.len()) {
        Some(n) if !xs.is_empty() => xs.iter().copied().sum::<T>() / n,
        _ => T::nan(),
    }
}

/// Sample standard deviation with the n-1 denominator. NaN below 2 samples.
pub fn sample_std<T: Scalar>(xs: &[T]) -> T {
    if xs.len() < 2 {
        return T::nan();
    }
    let m = mean(xs);
    let ss = xs.iter().map(|&x| (x - m) * (x - m)).sum::<T>();
    (ss / T::from_usize(xs.len() - 1).unwrap()).sqrt()
}

/// Half-width of a two-sided 95% confidence interval for the mean of `xs`.
pub fn ci_half_width_95<T: Scalar>(xs: &[T]) -> T {
    if xs.len() < 2 {
        return T::nan();
    }
    let t = T::from_f64_lossy(t_quantile_975((xs.len() - 1) as u32));
    t * sample_std(xs) / T::from_usize(xs.len()).unwrap().sqrt()
}

/// 0.975 quantile of the Student-t distribution with `df` degrees of freedom.
///
/// Inverts the tail probability `I_x(df/2, 1/2) = 0.05` of the regularized
/// incomplete beta function by bisection, then maps back to the t scale.
pub fn t_quantile_975(df: u32) -> f64 {
    assert!(df >= 1, "degrees of freedom must be at least 1");
    let a = f64::from(df) / 2.0;
    // betai(a, 1/2, x) is the two-sided tail mass P(|T| >= t) at x = df/(df+t^2),
    // increasing in x, so bisect for the x giving mass 0.05.
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if betai(a, 0.5, mid) < 0.05 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    (f64::from(df) * (1.0 - x) / x).sqrt()
}

/// Regularized incomplete beta function I_x(a, b).
fn betai(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // The continued fraction converges fast only on one side of the mean.
    if x < (a + 1.0) / (a + b + 2.0) {
        front * betacf(a, b, x) / a
    } else {
        1.0 - front * betacf(b, a, 1.0 - x) / b
    }
}

/// Continued fraction for the incomplete beta, modified Lentz iteration.
fn betacf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 3e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
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

/// Natural log of the gamma function, Lanczos approximation (g = 7, n = 9).
fn ln_gamma(z: f64) -> f64 {
    // Published coefficients, quoted beyond f64 precision.
    #[allow(clippy::excessive_precision)]
    const COEF: [f64; 9] = [
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
    if z < 0.5 {
        // Reflection keeps the approximation on its valid half-line.
        std::f64::consts::PI.ln() - (std::f64::consts::PI * z).sin().ln() - ln_gamma(1.0 - z)
    } else {
        let z = z - 1.0;
        let mut x = COEF[0];
        for (i, &c) in COEF.iter().enumerate().skip(1) {
            x += c / (z + i as f64);
        }
        let t = z + 7.5;
        0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
    }
}
