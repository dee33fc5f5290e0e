use super::gamma::ln_gamma_unchecked;
use crate::error::{Error, Result};

const CF_MAX_ITER: usize = 10_000;
const CF_EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

fn check_shape(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
        return Err(Error::domain(format!(
            "beta shape parameters must be positive and finite, got a={a}, b={b}"
        )));
    }
    Ok(())
}

/// ln B(a, b).
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    check_shape(a, b)?;
    Ok(ln_beta_unchecked(a, b))
}

fn ln_beta_unchecked(a: f64, b: f64) -> f64 {
    ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(a + b)
}

/// Beta(a, b) density at `y`.
pub fn beta_pdf(y: f64, a: f64, b: f64) -> Result<f64> {
    check_shape(a, b)?;
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::domain(format!("beta_pdf requires y in [0,1], got {y}")));
    }
    Ok(pdf_unchecked(y, a, b, ln_beta_unchecked(a, b)))
}

fn pdf_unchecked(y: f64, a: f64, b: f64, lnb: f64) -> f64 {
    if y <= 0.0 || y >= 1.0 {
        let at_zero = y <= 0.0;
        let shape = if at_zero { a } else { b };
        return match shape.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => (-lnb).exp(),
            _ => 0.0,
        };
    }
    ((a - 1.0) * y.ln() + (b - 1.0) * (-y).ln_1p() - lnb).exp()
}

/// Regularized incomplete beta function I_y(a, b), the Beta(a, b) CDF.
pub fn beta_cdf(y: f64, a: f64, b: f64) -> Result<f64> {
    check_shape(a, b)?;
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::domain(format!("beta_cdf requires y in [0,1], got {y}")));
    }
    Ok(cdf_unchecked(y, a, b, ln_beta_unchecked(a, b)))
}

fn cdf_unchecked(y: f64, a: f64, b: f64, lnb: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if y >= 1.0 {
        return 1.0;
    }
    let ln_front = a * y.ln() + b * (-y).ln_1p() - lnb;
    if y < (a + 1.0) / (a + b + 2.0) {
        (ln_front.exp() * continued_fraction(y, a, b) / a).clamp(0.0, 1.0)
    } else {
        (1.0 - ln_front.exp() * continued_fraction(1.0 - y, b, a) / b).clamp(0.0, 1.0)
    }
}

// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn continued_fraction(y: f64, a: f64, b: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * y / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * y / ((qam + m2) * (a + m2));
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
        let aa = -(a + m) * (qab + m) * y / ((a + m2) * (qap + m2));
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
        if (del - 1.0).abs() <= CF_EPS {
            break;
        }
    }
    h
}

/// Inverse of [`beta_cdf`] in its first argument.
///
/// Safeguarded Newton iteration on a shrinking bracket; falls back to
/// (geometric, near the origin) bisection whenever a step leaves it.
pub fn beta_quantile(p: f64, a: f64, b: f64) -> Result<f64> {
    check_shape(a, b)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("beta_quantile requires p in [0,1], got {p}")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    let lnb = ln_beta_unchecked(a, b);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut x = initial_guess(p, a, b, lnb);
    for _ in 0..400 {
        let f = cdf_unchecked(x, a, b, lnb) - p;
        if f == 0.0 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let dens = pdf_unchecked(x, a, b, lnb);
        let mut next = if dens > 0.0 && dens.is_finite() { x - f / dens } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = if lo == 0.0 && hi < 1e-3 {
                (hi * TINY.max(hi * 1e-12)).sqrt()
            } else {
                0.5 * (lo + hi)
            };
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE)
            || hi - lo <= 4.0 * f64::EPSILON * hi
        {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

fn initial_guess(p: f64, a: f64, b: f64, lnb: f64) -> f64 {
    // Tail power-law approximations for small a or b, otherwise the mean.
    let lower = ((p * a).ln() + lnb) / a;
    let upper = ((1.0 - p) * b).ln() + lnb;
    let guess = if lower.is_finite() && lower.exp() < 0.5 * a / (a + b) {
        lower.exp()
    } else if upper.is_finite() && (upper / b).exp() < 0.5 * b / (a + b) {
        1.0 - (upper / b).exp()
    } else {
        a / (a + b)
    };
    guess.clamp(1e-300, 1.0 - f64::EPSILON)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial_tail(y: f64, a: u32, b: u32) -> f64 {
        // I_y(a, b) = P(Bin(a+b-1, y) >= a) for integer shapes.
        let n = a + b - 1;
        let choose = |n: u32, k: u32| -> f64 { (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64) };
        (a..=n)
            .map(|k| choose(n, k) * y.powi(k as i32) * (1.0 - y).powi((n - k) as i32))
            .sum()
    }

    #[test]
    fn cdf_trivial_values() {
        assert!((beta_cdf(0.5, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((beta_cdf(0.5, 2.0, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(beta_cdf(0.0, 2.0, 3.0).unwrap(), 0.0);
        assert_eq!(beta_cdf(1.0, 2.0, 3.0).unwrap(), 1.0);
    }

    #[test]
    fn cdf_matches_binomial_sum() {
        let oracle = binomial_tail(0.4, 2, 3);
        assert!((oracle - 0.5248).abs() < 1e-14);
        assert!((beta_cdf(0.4, 2.0, 3.0).unwrap() - oracle).abs() < 1e-12);
        for &(a, b) in &[(1, 7), (3, 3), (5, 12), (20, 9)] {
            for i in 1..20 {
                let y = i as f64 / 20.0;
                let got = beta_cdf(y, a as f64, b as f64).unwrap();
                assert!((got - binomial_tail(y, a, b)).abs() < 1e-12, "y={y} a={a} b={b}");
            }
        }
    }

    #[test]
    fn cdf_against_high_precision_values() {
        let cases = [
            (0.1, 0.5, 0.5, 0.204_832_764_699_133_451_65),
            (0.3, 33.3, 66.7, 0.245_875_751_171_596_085_93),
            (0.02, 0.3, 7.0, 0.592_097_505_592_797_483_64),
            (0.7, 150.0, 60.0, 0.317_354_777_144_580_950_2),
            (0.5, 1e-3, 2.0, 0.999_806_746_536_947_748_18),
        ];
        for (y, a, b, want) in cases {
            let got = beta_cdf(y, a, b).unwrap();
            assert!((got - want).abs() < 1e-12, "I_{y}({a},{b}) = {got} vs {want}");
        }
    }

    #[test]
    fn quantile_values_and_roundtrip() {
        assert!((beta_quantile(0.5, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((beta_quantile(0.5248, 2.0, 3.0).unwrap() - 0.4).abs() < 1e-10);
        assert_eq!(beta_quantile(0.0, 2.0, 3.0).unwrap(), 0.0);
        assert_eq!(beta_quantile(1.0, 2.0, 3.0).unwrap(), 1.0);
        for &(a, b) in &[(2.0, 8.0), (5.0, 5.0), (0.4, 3.0), (6.0, 1.4)] {
            for i in 1..=9 {
                let y = i as f64 / 10.0;
                let p = beta_cdf(y, a, b).unwrap();
                let back = beta_quantile(p, a, b).unwrap();
                assert!((back - y).abs() < 1e-8, "a={a} b={b} y={y} back={back}");
            }
        }
    }

    #[test]
    fn quantile_hits_tiny_tails() {
        for &(p, a, b) in &[(1e-10, 0.5, 2.0), (1e-12, 2.0, 8.0), (1.0 - 1e-9, 3.0, 2.0)] {
            let y = beta_quantile(p, a, b).unwrap();
            let back = beta_cdf(y, a, b).unwrap();
            assert!((back - p).abs() < 1e-10, "p={p} a={a} b={b} y={y} back={back}");
        }
    }

    #[test]
    fn domain_errors() {
        assert!(beta_cdf(1.5, 1.0, 1.0).is_err());
        assert!(beta_cdf(0.5, 0.0, 1.0).is_err());
        assert!(beta_quantile(-0.1, 1.0, 1.0).is_err());
        assert!(beta_quantile(0.5, 1.0, f64::NAN).is_err());
    }
}
