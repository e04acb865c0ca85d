use num_complex::Complex64;

use super::accel::{euler_transform, levin_u};
use super::gamma::ln_gamma;
use super::lerch::lerch_phi;
use super::{check_finite, is_nonpositive_integer, Accelerator, SeriesAccuracy, SeriesValue};
use crate::sum::NeumaierC;
use crate::{Error, Result};

/// Gauss hypergeometric function `2F1(a, b; c; z)` for `|z| <= 1`.
///
/// The family `2F1(1, b; b+1; z) = b Phi(z, 1, b)` that the closed-form
/// energies use is routed to [`lerch_phi`] under [`Accelerator::Auto`].
pub fn gauss_2f1(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    z: Complex64,
    acc: &SeriesAccuracy,
) -> Result<SeriesValue> {
    acc.check()?;
    for (v, name) in [(a, "a"), (b, "b"), (c, "c"), (z, "z")] {
        check_finite(v, name)?;
    }
    let one = Complex64::new(1.0, 0.0);
    let polynomial = is_nonpositive_integer(a) || is_nonpositive_integer(b);
    if is_nonpositive_integer(c) && !polynomial {
        return Err(Error::domain(format!("2F1 lower parameter c = {c}")));
    }
    if z.norm() == 0.0 {
        return Ok(SeriesValue::exact(one));
    }
    if polynomial {
        let degree = [a, b]
            .iter()
            .filter(|p| is_nonpositive_integer(**p))
            .map(|p| (-p.re) as usize)
            .min()
            .unwrap_or(0);
        let mut sum = NeumaierC::new();
        let mut t = one;
        for n in 0..=degree {
            sum.add(t);
            t *= (a + n as f64) * (b + n as f64) / ((c + n as f64) * (n as f64 + 1.0)) * z;
        }
        return Ok(SeriesValue {
            value: sum.value(),
            error: sum.rounding_bound(),
            terms: degree + 1,
        });
    }
    let r = z.norm();
    if r > 1.0 + 4.0 * f64::EPSILON {
        return Err(Error::domain(format!("2F1 argument |z| = {r} > 1")));
    }
    if acc.accelerator == Accelerator::Auto {
        if a == one && c == b + 1.0 {
            return Ok(lerch_phi(z, 1.0, b, acc)?.scaled(b));
        }
        if b == one && c == a + 1.0 {
            return Ok(lerch_phi(z, 1.0, a, acc)?.scaled(a));
        }
    }
    if z == one {
        let e = c - a - b;
        if e.re <= 0.0 {
            return Err(Error::domain("2F1 diverges at z = 1 when Re(c-a-b) <= 0"));
        }
        let lg = ln_gamma(c)? + ln_gamma(e)? - ln_gamma(c - a)? - ln_gamma(c - b)?;
        return Ok(SeriesValue::exact(lg.exp()));
    }

    let ratio = move |n: usize| {
        let nf = n as f64;
        (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z
    };
    if r <= 0.9 || acc.accelerator == Accelerator::None {
        return direct(ratio, r, (c - a - b).re, acc);
    }

    let levin = || {
        let mut n = 0usize;
        let mut t = one;
        let mut next = || {
            let out = t;
            t *= ratio(n);
            n += 1;
            out
        };
        levin_u(&mut next, acc.abs_tol, acc.max_terms)
    };
    let euler = || {
        let mut n = 0usize;
        let mut cn = one;
        let mut coef = || {
            let out = cn;
            let nf = n as f64;
            cn *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0));
            n += 1;
            out
        };
        euler_transform(&mut coef, z, acc.abs_tol, acc.max_terms)
    };
    match acc.accelerator {
        Accelerator::LevinU => levin(),
        Accelerator::Euler => euler(),
        _ => levin()
            .or_else(|_| euler())
            .or_else(|e| if r < 1.0 { direct(ratio, r, (c - a - b).re, acc) } else { Err(e) }),
    }
}

fn direct(
    ratio: impl Fn(usize) -> Complex64,
    r: f64,
    excess: f64,
    acc: &SeriesAccuracy,
) -> Result<SeriesValue> {
    let mut sum = NeumaierC::new();
    let mut t = Complex64::new(1.0, 0.0);
    let mut bound = f64::INFINITY;
    for n in 0..acc.max_terms {
        sum.add(t);
        let q = ratio(n);
        t *= q;
        let tn = t.norm();
        let qn = q.norm();
        // bound the remainder once the term ratio has settled below one
        bound = if r < 1.0 && n > 4 && qn < 1.0 {
            let qmax = qn.max(r);
            if qmax < 1.0 {
                tn / (1.0 - qmax)
            } else {
                f64::INFINITY
            }
        } else if r >= 1.0 && excess > 0.0 && n > 4 {
            // terms decay like n^(-1-excess)
            tn * (n as f64 + 1.0) / excess
        } else {
            f64::INFINITY
        };
        if bound <= 0.5 * acc.abs_tol {
            return Ok(SeriesValue {
                value: sum.value(),
                error: bound + sum.rounding_bound(),
                terms: n + 1,
            });
        }
    }
    Err(Error::NoConvergence {
        terms: acc.max_terms,
        error: bound,
        wanted: acc.abs_tol,
    })
}

/// Incomplete beta function `B(z; a, b) = int_0^z t^(a-1) (1-t)^(b-1) dt`
/// on the principal branch of `z^a`, via
/// `B(z; a, b) = z^a / a * 2F1(a, 1-b; a+1; z)`.
pub fn inc_beta(
    z: Complex64,
    a: Complex64,
    b: Complex64,
    acc: &SeriesAccuracy,
) -> Result<SeriesValue> {
    acc.check()?;
    for (v, name) in [(a, "a"), (b, "b"), (z, "z")] {
        check_finite(v, name)?;
    }
    if is_nonpositive_integer(a) {
        return Err(Error::PoleOnPath(format!("incomplete beta with a = {a}")));
    }
    if z.norm() == 0.0 {
        if a.re > 0.0 {
            return Ok(SeriesValue::exact(Complex64::new(0.0, 0.0)));
        }
        return Err(Error::domain("incomplete beta at z = 0 needs Re(a) > 0"));
    }
    let one = Complex64::new(1.0, 0.0);
    if z == one && b.re <= 0.0 {
        return Err(Error::domain("incomplete beta diverges at z = 1 when Re(b) <= 0"));
    }
    let za = (a * z.ln()).exp();
    let f = gauss_2f1(a, one - b, a + 1.0, z, acc)?;
    Ok(f.scaled(za / a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn degenerate_identity() {
        let v = gauss_2f1(c(1.0, 0.0), c(0.7, 0.2), c(0.7, 0.2), c(0.3, 0.0), &SeriesAccuracy::with_tol(1e-15))
            .unwrap();
        assert!((v.value - c(1.0 / 0.7, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn log_case_all_accelerators() {
        for accel in [Accelerator::Auto, Accelerator::None, Accelerator::LevinU, Accelerator::Euler] {
            let acc = SeriesAccuracy {
                accelerator: accel,
                ..SeriesAccuracy::with_tol(1e-15)
            };
            let v = gauss_2f1(c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(0.5, 0.0), &acc).unwrap();
            assert!((v.value.re - 2.0 * 2f64.ln()).abs() < 1e-12, "{accel:?}");
        }
    }

    #[test]
    fn gauss_at_one() {
        // 2F1(1,1;3;1) = Gamma(3)Gamma(1)/(Gamma(2)Gamma(2)) = 2
        let v = gauss_2f1(c(1.0, 0.0), c(1.0, 0.0), c(3.0, 0.0), c(1.0, 0.0), &SeriesAccuracy::with_tol(1e-15))
            .unwrap();
        assert!((v.value.re - 2.0).abs() < 1e-13);
        let e = gauss_2f1(c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), &SeriesAccuracy::with_tol(1e-15));
        assert!(matches!(e, Err(Error::DomainError(_))));
    }

    #[test]
    fn polynomial_terminates() {
        // 2F1(-2, b; c; z) = 1 - 2bz/c + b(b+1)z^2/(c(c+1))
        let v = gauss_2f1(c(-2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0), c(0.9, 0.0), &SeriesAccuracy::with_tol(1e-15))
            .unwrap();
        let want = 1.0 - 2.0 * 3.0 * 0.9 / 4.0 + 3.0 * 4.0 * 0.81 / 20.0;
        assert!((v.value.re - want).abs() < 1e-15);
    }

    #[test]
    fn beta_simple_cases() {
        let acc = SeriesAccuracy::with_tol(1e-15);
        let v = inc_beta(c(0.5, 0.0), c(1.0, 0.0), c(0.0, 0.0), &acc).unwrap();
        assert!((v.value.re - 2f64.ln()).abs() < 1e-14);
        let v = inc_beta(c(0.0, 0.0), c(2.0, 0.0), c(0.5, 0.0), &acc).unwrap();
        assert_eq!(v.value, c(0.0, 0.0));
        // B(z; 2, 1) = z^2 / 2
        let v = inc_beta(c(0.4, 0.3), c(2.0, 0.0), c(1.0, 0.0), &acc).unwrap();
        assert!((v.value - c(0.4, 0.3) * c(0.4, 0.3) / 2.0).norm() < 1e-15);
    }
}
