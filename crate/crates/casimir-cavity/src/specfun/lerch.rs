use num_complex::Complex64;

use super::accel::{euler_transform, levin_u};
use super::{check_finite, is_nonpositive_integer, Accelerator, SeriesAccuracy, SeriesValue};
use crate::sum::NeumaierC;
use crate::{Error, Result};

// B_2k / (2k)! for k = 1..10
const BERNOULLI_OVER_FACT: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
    43867.0 / 5109094217170944000.0,
    -174611.0 / 802857662698291200000.0,
];

/// `w^(-s)` on the principal branch.
#[inline]
fn pow_neg(w: Complex64, s: f64) -> Complex64 {
    if s == 1.0 {
        w.inv()
    } else if s == 2.0 {
        (w * w).inv()
    } else {
        (-s * w.ln()).exp()
    }
}

/// Lerch transcendent `Phi(z, s, a) = sum_{n>=0} z^n / (n+a)^s`, `|z| <= 1`.
///
/// `(n+a)^s` uses the principal branch. On and near the unit circle the
/// default accelerator splits off a directly summed head and expands the
/// remainder `z^N Phi(z, s, N+a)` asymptotically in `1/(N+a)`.
pub fn lerch_phi(z: Complex64, s: f64, a: Complex64, acc: &SeriesAccuracy) -> Result<SeriesValue> {
    acc.check()?;
    check_finite(z, "Lerch argument z")?;
    check_finite(a, "Lerch parameter a")?;
    if !s.is_finite() {
        return Err(Error::domain("Lerch order s is not finite"));
    }
    if is_nonpositive_integer(a) {
        return Err(Error::PoleOnPath(format!("Lerch parameter a = {a}")));
    }
    let r = z.norm();
    if r > 1.0 + 4.0 * f64::EPSILON {
        return Err(Error::domain(format!("Lerch argument |z| = {r} > 1")));
    }
    if r == 0.0 {
        return Ok(SeriesValue::exact(pow_neg(a, s)));
    }
    if z == Complex64::new(1.0, 0.0) {
        if s <= 1.0 {
            return Err(Error::domain("Lerch transcendent diverges at z = 1 for s <= 1"));
        }
        return hurwitz_zeta(s, a, acc);
    }
    if r <= 0.5 {
        return direct(z, s, a, acc);
    }
    match acc.accelerator {
        Accelerator::None => direct(z, s, a, acc),
        Accelerator::Auto => tail_expansion(z, s, a, acc),
        Accelerator::LevinU => {
            let mut n = 0usize;
            let mut zn = Complex64::new(1.0, 0.0);
            let mut next = || {
                let t = zn * pow_neg(a + n as f64, s);
                zn *= z;
                n += 1;
                t
            };
            levin_u(&mut next, acc.abs_tol, acc.max_terms)
        }
        Accelerator::Euler => {
            let mut n = 0usize;
            let mut coef = || {
                let c = pow_neg(a + n as f64, s);
                n += 1;
                c
            };
            euler_transform(&mut coef, z, acc.abs_tol, acc.max_terms)
        }
    }
}

fn direct(z: Complex64, s: f64, a: Complex64, acc: &SeriesAccuracy) -> Result<SeriesValue> {
    let r = z.norm();
    let mut sum = NeumaierC::new();
    let mut zn = Complex64::new(1.0, 0.0);
    let mut bound = f64::INFINITY;
    for n in 0..acc.max_terms {
        sum.add(zn * pow_neg(a + n as f64, s));
        zn *= z;
        let wn = a + (n + 1) as f64;
        if wn.re <= 0.0 {
            continue;
        }
        let rn = zn.norm();
        let mag = wn.norm().powf(-s);
        bound = if r < 1.0 {
            let q = if s >= 0.0 {
                r
            } else {
                r * ((wn + 1.0).norm() / wn.norm()).powf(-s)
            };
            if q < 1.0 {
                rn * mag / (1.0 - q)
            } else {
                f64::INFINITY
            }
        } else if s > 1.0 {
            mag + wn.re.powf(1.0 - s) / (s - 1.0)
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

fn tail_expansion(z: Complex64, s: f64, a: Complex64, acc: &SeriesAccuracy) -> Result<SeriesValue> {
    let logz = z.ln();
    // radius of convergence of 1/(1 - z e^-t) around t = 0
    let rho = logz.norm();
    let one = Complex64::new(1.0, 0.0);
    let h0 = one - z;

    let mut target = 36.0;
    let mut last_err = f64::INFINITY;
    let mut last_terms = 0;
    while target <= 600.0 {
        let need_re = (target / rho).max(1.0);
        let n0 = (need_re - a.re).ceil().max(0.0);
        if n0 >= acc.max_terms as f64 {
            break;
        }
        let big_n = n0 as usize;

        let mut head = NeumaierC::new();
        let mut zn = one;
        for n in 0..big_n {
            if n % 32 == 0 {
                zn = (logz * n as f64).exp();
            }
            head.add(zn * pow_neg(a + n as f64, s));
            zn *= z;
        }
        let z_big = (logz * big_n as f64).exp();
        let w = a + big_n as f64;
        let winv = w.inv();

        // Taylor coefficients of 1/(1 - z e^-t)
        let mut h = vec![h0];
        let mut e = vec![h0.inv()];
        let mut p = pow_neg(w, s);
        let mut tail = NeumaierC::new();
        let mut prev = f64::INFINITY;
        let mut best_pair = f64::INFINITY;
        let mut converged = None;
        let mut fact = 1.0;
        for m in 0..200usize {
            if m > 0 {
                fact *= m as f64;
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                h.push(-z * (sign / fact));
                let mut acc_e = Complex64::new(0.0, 0.0);
                for k in 1..=m {
                    acc_e += h[k] * e[m - k];
                }
                e.push(-acc_e / h0);
                p *= (s + (m - 1) as f64) * winv;
            }
            let term = e[m] * p;
            let tn = term.norm();
            tail.add(term);
            // some coefficients vanish identically (z = -1), so judge
            // convergence and divergence on pairs of consecutive terms
            let pair = tn + prev;
            if m > 0 && pair * z_big.norm() <= 0.25 * acc.abs_tol {
                converged = Some(2.0 * pair * z_big.norm());
                break;
            }
            if m > 3 && pair > best_pair {
                last_err = best_pair * z_big.norm();
                break;
            }
            if m > 0 {
                best_pair = best_pair.min(pair);
            }
            prev = tn;
        }
        last_terms = big_n;
        if let Some(err) = converged {
            let t = tail.value();
            let value = head.value() + z_big * t;
            let rounding = head.rounding_bound()
                + tail.rounding_bound()
                + 8.0 * f64::EPSILON * (1.0 + big_n as f64 * f64::EPSILON) * (z_big * t).norm();
            return Ok(SeriesValue {
                value,
                error: err + rounding,
                terms: big_n + e.len(),
            });
        }
        target *= 2.0;
    }
    Err(Error::NoConvergence {
        terms: last_terms.max(acc.max_terms.min(last_terms + 1)),
        error: last_err,
        wanted: acc.abs_tol,
    })
}

/// Hurwitz zeta `zeta(s, a) = sum_{n>=0} (n+a)^-s` for real `s > 1`,
/// by Euler-Maclaurin summation.
pub fn hurwitz_zeta(s: f64, a: Complex64, acc: &SeriesAccuracy) -> Result<SeriesValue> {
    if !(s > 1.0) {
        return Err(Error::domain("Hurwitz zeta needs s > 1"));
    }
    if is_nonpositive_integer(a) {
        return Err(Error::PoleOnPath(format!("Hurwitz zeta at a = {a}")));
    }
    let mut big_n = 0usize;
    while (a + big_n as f64).re < 20.0 || (a + big_n as f64).norm() < 20.0 {
        big_n += 1;
        if big_n > acc.max_terms {
            return Err(Error::NoConvergence {
                terms: big_n,
                error: f64::INFINITY,
                wanted: acc.abs_tol,
            });
        }
    }
    let mut sum = NeumaierC::new();
    for n in 0..big_n {
        sum.add(pow_neg(a + n as f64, s));
    }
    let w = a + big_n as f64;
    let winv = w.inv();
    let ws = pow_neg(w, s);
    sum.add(ws * w / (s - 1.0));
    sum.add(0.5 * ws);
    // (s)_{2k-1} w^{-s-2k+1}
    let mut p = ws * s * winv;
    let mut last = 0.0;
    for (k, b) in BERNOULLI_OVER_FACT.iter().enumerate() {
        let term = *b * p;
        sum.add(term);
        last = term.norm();
        let kk = (k + 1) as f64;
        p *= (s + 2.0 * kk - 1.0) * (s + 2.0 * kk) * winv * winv;
    }
    Ok(SeriesValue {
        value: sum.value(),
        error: last + sum.rounding_bound(),
        terms: big_n + BERNOULLI_OVER_FACT.len(),
    })
}
