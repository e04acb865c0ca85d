use std::f64::consts::PI;

use num_complex::Complex64;

use super::is_nonpositive_integer;
use crate::sum::{Neumaier, NeumaierC};
use crate::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

// B_2, B_4, ..., B_20
const BERNOULLI: [f64; 10] = [
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

// Below this modulus the argument is shifted up before the asymptotic
// series is used; 18 leaves the B_20 term near 1e-24.
const ASYMPTOTIC_RADIUS: f64 = 18.0;

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn cot_pi(z: Complex64) -> Complex64 {
    let r = Complex64::new(z.re - z.re.round(), z.im);
    let t = (PI * r).tan();
    t.inv()
}

fn sin_pi(z: Complex64) -> Complex64 {
    let k = z.re.round();
    let r = Complex64::new(z.re - k, z.im);
    let s = (PI * r).sin();
    if (k as i64).rem_euclid(2) == 0 {
        s
    } else {
        -s
    }
}

/// `psi^(n)(z)`, the n-th derivative of the digamma function.
pub fn polygamma(n: u32, z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::domain("polygamma argument is not finite"));
    }
    if is_nonpositive_integer(z) {
        return Err(Error::PoleOnPath(format!("polygamma({n}) at {z}")));
    }
    if n <= 1 && z.re < -8.0 {
        let w = Complex64::new(1.0, 0.0) - z;
        let v = polygamma(n, w)?;
        return Ok(if n == 0 {
            v - PI * cot_pi(z)
        } else {
            let s = sin_pi(z);
            -v + PI * PI / (s * s)
        });
    }

    let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
    let nfact = factorial(n);
    let mut shift = NeumaierC::new();
    let mut w = z;
    while w.norm() < ASYMPTOTIC_RADIUS || w.re < 0.5 * ASYMPTOTIC_RADIUS {
        let inv = w.inv();
        if n == 0 {
            shift.add(-inv);
        } else {
            shift.add(sign * nfact * inv.powu(n + 1));
        }
        w += 1.0;
    }

    let inv = w.inv();
    let inv2 = inv * inv;
    let asym = if n == 0 {
        let mut acc = NeumaierC::new();
        acc.add(w.ln());
        acc.add(-0.5 * inv);
        let mut p = inv2;
        for (k, b) in BERNOULLI.iter().enumerate() {
            let two_k = 2.0 * (k as f64 + 1.0);
            acc.add(-(*b / two_k) * p);
            p *= inv2;
        }
        acc.value()
    } else {
        let mut acc = NeumaierC::new();
        let inv_n = inv.powu(n);
        acc.add(factorial(n - 1) * inv_n);
        acc.add(0.5 * nfact * inv_n * inv);
        // B_2k (2k+n-1)! / (2k)! / w^(2k+n)
        let mut p = inv_n * inv2;
        for (k, b) in BERNOULLI.iter().enumerate() {
            let two_k = 2 * (k as u32 + 1);
            let ratio: f64 = ((two_k + 1)..=(two_k + n - 1)).map(f64::from).product();
            acc.add(*b * ratio * p);
            p *= inv2;
        }
        sign * acc.value()
    };
    Ok(asym + shift.value())
}

pub fn digamma(z: Complex64) -> Result<Complex64> {
    polygamma(0, z)
}

/// A logarithm of the gamma function. The imaginary part is not reduced to
/// the principal branch; `exp` of the result is `Gamma(z)`.
pub fn ln_gamma(z: Complex64) -> Result<Complex64> {
    if is_nonpositive_integer(z) {
        return Err(Error::PoleOnPath(format!("gamma at {z}")));
    }
    if z.re < 0.5 {
        let w = Complex64::new(1.0, 0.0) - z;
        return Ok(Complex64::new(PI.ln(), 0.0) - sin_pi(z).ln() - ln_gamma(w)?);
    }
    let mut shift = NeumaierC::new();
    let mut w = z;
    while w.norm() < ASYMPTOTIC_RADIUS {
        shift.add(w.ln());
        w += 1.0;
    }
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut acc = NeumaierC::new();
    acc.add((w - 0.5) * w.ln());
    acc.add(-w);
    acc.add(Complex64::new(0.5 * (2.0 * PI).ln(), 0.0));
    let mut p = inv;
    for (k, b) in BERNOULLI.iter().enumerate() {
        let two_k = 2.0 * (k as f64 + 1.0);
        acc.add((*b / (two_k * (two_k - 1.0))) * p);
        p *= inv2;
    }
    Ok(acc.value() - shift.value())
}

/// Generalized harmonic number `H(x) = x sum_k 1/(k(x+k)) = psi(x+1) + gamma`.
pub fn gen_harmonic(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain("gen_harmonic argument is not finite"));
    }
    if x.fract() == 0.0 {
        if x <= -1.0 {
            return Err(Error::PoleOnPath(format!("gen_harmonic at {x}")));
        }
        if x <= 100_000.0 {
            let n = x as u64;
            return Ok((1..=n).map(|k| 1.0 / k as f64).collect::<Neumaier>().value());
        }
    }
    let psi = polygamma(0, Complex64::new(x + 1.0, 0.0))?;
    Ok(psi.re + EULER_GAMMA)
}

/// Rising factorial `(p)_n = p (p+1) ... (p+n-1)`.
pub fn pochhammer(p: Complex64, n: u32) -> Complex64 {
    (0..n).fold(Complex64::new(1.0, 0.0), |acc, k| acc * (p + k as f64))
}
