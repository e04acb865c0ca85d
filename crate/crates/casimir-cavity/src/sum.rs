//! Compensated accumulation and trigonometric helpers with exact zeros.

use num_complex::Complex64;

/// Neumaier's variant of Kahan summation. Addition order is the caller's
/// order, so a fixed loop order gives bit-identical results.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
    abs: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.abs += x.abs();
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Sum of absolute values of everything added so far.
    pub fn abs_sum(&self) -> f64 {
        self.abs
    }

    /// A generous bound on the accumulated rounding error.
    pub fn rounding_bound(&self) -> f64 {
        4.0 * f64::EPSILON * self.abs
    }
}

impl Extend<f64> for Neumaier {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

impl FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::new();
        acc.extend(iter);
        acc
    }
}

/// Complex counterpart of [`Neumaier`], compensating each component.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierC {
    re: Neumaier,
    im: Neumaier,
}

impl NeumaierC {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }

    pub fn rounding_bound(&self) -> f64 {
        self.re.rounding_bound().hypot(self.im.rounding_bound())
    }
}

/// Compensated sum of a slice in index order.
pub fn neumaier_sum(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<Neumaier>().value()
}

/// `sin(pi x)`, exactly zero at integers.
pub fn sinpi(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    let mut y = x % 2.0;
    if y > 1.0 {
        y -= 2.0;
    } else if y < -1.0 {
        y += 2.0;
    }
    let sign = if y < 0.0 { -1.0 } else { 1.0 };
    let mut a = y.abs();
    if a > 0.5 {
        a = 1.0 - a;
    }
    if a == 0.0 {
        return 0.0;
    }
    let v = if a <= 0.25 {
        (std::f64::consts::PI * a).sin()
    } else {
        (std::f64::consts::PI * (0.5 - a)).cos()
    };
    sign * v
}

/// `cos(pi x)`, exactly zero at half-integers.
pub fn cospi(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    let mut r = x.abs() % 2.0;
    if r > 1.0 {
        r = 2.0 - r;
    }
    let (sign, a) = if r > 0.5 { (-1.0, 1.0 - r) } else { (1.0, r) };
    if a == 0.5 {
        return 0.0;
    }
    let v = if a <= 0.25 {
        (std::f64::consts::PI * a).cos()
    } else {
        (std::f64::consts::PI * (0.5 - a)).sin()
    };
    sign * v
}

/// `(j * r) mod 2` with the rounding error of the product folded back in,
/// so that phases stay accurate for large mode numbers.
#[inline]
pub fn phase(j: u64, r: f64) -> f64 {
    let jf = j as f64;
    let t = jf * r;
    let e = jf.mul_add(r, -t);
    (t % 2.0) + e
}

/// `sin(pi j r)` for mode `j` at relative position `r = x/L`.
#[inline]
pub fn sin_mode(j: u64, r: f64) -> f64 {
    sinpi(phase(j, r))
}

/// `cos(pi j r)` for mode `j` at relative position `r = x/L`.
#[inline]
pub fn cos_mode(j: u64, r: f64) -> f64 {
    cospi(phase(j, r))
}

/// `sin(pi p / q)` computed from the exact integer residue of `p` mod `2q`.
pub fn sinpi_ratio(p: u64, q: u64) -> f64 {
    let m = (p % (2 * q)) as f64;
    sinpi(m / q as f64)
}

/// `cot(pi p / q)` for `q` not dividing `p`.
pub fn cotpi_ratio(p: u64, q: u64) -> f64 {
    let m = p % q;
    let y = m as f64 / q as f64;
    // cot is pi-periodic; fold to (-1/2, 1/2] for accuracy
    let y = if y > 0.5 { y - 1.0 } else { y };
    cospi(y) / sinpi(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancellation() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(neumaier_sum(&xs), 2.0);
    }

    #[test]
    fn exact_zeros() {
        for k in -6..=6 {
            assert_eq!(sinpi(k as f64), 0.0);
            assert_eq!(cospi(k as f64 + 0.5), 0.0);
        }
        assert_eq!(sin_mode(1_000_000, 0.5), 0.0);
        assert_eq!(cos_mode(7, 0.5), 0.0);
    }

    #[test]
    fn agrees_with_libm() {
        for i in 0..1000 {
            let x = -7.3 + 0.0171 * i as f64;
            assert!((sinpi(x) - (std::f64::consts::PI * x).sin()).abs() < 1e-14);
            assert!((cospi(x) - (std::f64::consts::PI * x).cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn ratio_helpers() {
        assert!((sinpi_ratio(1, 6) - 0.5).abs() < 1e-16);
        assert!((cotpi_ratio(1, 4) - 1.0).abs() < 1e-15);
        assert!((cotpi_ratio(3, 4) + 1.0).abs() < 1e-15);
        assert_eq!(sinpi_ratio(10, 5), 0.0);
    }
}
