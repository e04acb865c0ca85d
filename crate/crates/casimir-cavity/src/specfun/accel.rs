//! Sequence transformations for slowly convergent series.

use num_complex::Complex64;

use super::SeriesValue;
use crate::{Error, Result};

// Beyond this order the binomial weights cost more digits than the
// transformation gains in double precision.
const LEVIN_MAX_ORDER: usize = 60;

/// Levin's u transform of `sum_n a_n`, terms supplied in order by `next`.
///
/// Uses `omega_n = (n + 1) a_n` as remainder estimate. The error estimate
/// is the difference of consecutive transforms plus a rounding term for
/// the alternating binomial weights.
pub fn levin_u(
    next: &mut dyn FnMut() -> Complex64,
    abs_tol: f64,
    max_terms: usize,
) -> Result<SeriesValue> {
    let beta = 1.0;
    let kmax = max_terms.min(LEVIN_MAX_ORDER);
    let mut partial = Vec::with_capacity(kmax + 1);
    let mut omega = Vec::with_capacity(kmax + 1);
    let mut s = Complex64::new(0.0, 0.0);
    let mut best: Option<SeriesValue> = None;
    let mut prev: Option<Complex64> = None;

    for k in 0..=kmax {
        let a = next();
        s += a;
        partial.push(s);
        omega.push((beta + k as f64) * a);
        if k == 0 {
            continue;
        }

        let kf = k as f64;
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = Complex64::new(0.0, 0.0);
        let mut num_abs = 0.0;
        let mut den_abs = 0.0;
        let mut binom = 1.0;
        for j in 0..=k {
            let jf = j as f64;
            let w = ((beta + jf) / (beta + kf)).powi(k as i32 - 1);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let c = sign * binom * w;
            binom = binom * (kf - jf) / (jf + 1.0);
            if omega[j].norm() == 0.0 {
                continue;
            }
            let inv = omega[j].inv();
            num += c * partial[j] * inv;
            den += c * inv;
            num_abs += (c * partial[j] * inv).norm();
            den_abs += (c * inv).norm();
        }
        if den.norm() == 0.0 {
            continue;
        }
        let t = num / den;
        let rounding = 4.0 * f64::EPSILON * (num_abs + t.norm() * den_abs) / den.norm();
        if let Some(p) = prev {
            let err = (t - p).norm() + rounding;
            let cand = SeriesValue {
                value: t,
                error: err,
                terms: k + 1,
            };
            if best.map_or(true, |b| err < b.error) {
                best = Some(cand);
            }
            if err <= abs_tol {
                return Ok(cand);
            }
        }
        prev = Some(t);
    }
    match best {
        Some(b) => Err(Error::NoConvergence {
            terms: b.terms,
            error: b.error,
            wanted: abs_tol,
        }),
        None => Err(Error::NoConvergence {
            terms: kmax,
            error: f64::INFINITY,
            wanted: abs_tol,
        }),
    }
}

/// Euler's transform of the power series `sum_n c_n z^n`, coefficients
/// supplied in order by `coef`.
///
/// Uses `sum_n c_n z^n = 1/(1-z) sum_k (z/(1-z))^k Delta^k c_0` with forward
/// differences. Useful when `|z/(1-z)|` is comfortably below one.
pub fn euler_transform(
    coef: &mut dyn FnMut() -> Complex64,
    z: Complex64,
    abs_tol: f64,
    max_terms: usize,
) -> Result<SeriesValue> {
    let one = Complex64::new(1.0, 0.0);
    if (one - z).norm() == 0.0 {
        return Err(Error::domain("Euler transform at z = 1"));
    }
    let pre = (one - z).inv();
    let q = z * pre;
    let mut diag: Vec<Complex64> = Vec::new();
    let mut qk = one;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut cmax: f64 = 0.0;
    let mut rounding = 0.0;
    let mut last = f64::INFINITY;
    let mut growing = 0;

    for k in 0..max_terms.max(1) {
        let v = coef();
        cmax = cmax.max(v.norm());
        let mut new = Vec::with_capacity(diag.len() + 1);
        new.push(v);
        for i in 1..=diag.len() {
            let d = new[i - 1] - diag[i - 1];
            new.push(d);
        }
        diag = new;
        // diag[i] is the i-th backward difference ending at c_k, so
        // diag[k] is the forward difference Delta^k c_0
        let term = pre * qk * diag[k];
        sum += term;
        rounding += f64::EPSILON * 2f64.powi(k as i32) * cmax * qk.norm() * pre.norm();
        let tn = term.norm();
        let err = tn + rounding;
        if tn <= 0.25 * abs_tol && err <= abs_tol {
            return Ok(SeriesValue {
                value: sum,
                error: err + 4.0 * f64::EPSILON * sum.norm(),
                terms: k + 1,
            });
        }
        if tn > last {
            growing += 1;
            if growing > 3 {
                break;
            }
        } else {
            growing = 0;
        }
        last = tn;
        qk *= q;
    }
    Err(Error::NoConvergence {
        terms: diag.len(),
        error: last + rounding,
        wanted: abs_tol,
    })
}
