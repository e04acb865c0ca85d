//! Truncated mode sums with error-bounded remainders.
//!
//! Bare sums have the form `sum_j g_j P_j` where `g` is completely monotone
//! with known digamma tails and `P_j` is `s_j^2` or `sin(2 pi j r)`. Their
//! remainder splits into a non-oscillating part, summed exactly, and an
//! oscillating part `sum_{j>J} z^j g_j` with `z = exp(2 pi i r)`, summed by
//! repeated summation by parts:
//!
//! `sum_{i>=0} g_{n+i} z^i = 1/(1-z) sum_{m<k} (z/(1-z))^m Delta^m g_n + R_k`,
//! `|R_k| <= |1-z|^-k |Delta^(k-1) g_n|`.
//!
//! Smeared sums decay fast enough that the remainder is only bounded, by the
//! integral of a decreasing envelope.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::model::{Boundary, TailPolicy};
use crate::specfun::polygamma;
use crate::sum::{cospi, phase, sinpi, Neumaier};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Outcome {
    pub value: f64,
    pub error: f64,
    pub modes: u64,
}

impl Outcome {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            error: 0.0,
            modes: 0,
        }
    }

    pub fn scaled(self, k: f64) -> Self {
        Self {
            value: self.value * k,
            error: self.error * k.abs(),
            modes: self.modes,
        }
    }
}

/// Where to stop a mode sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Stop {
    /// Grow the cutoff until the remainder bound meets the tolerance.
    Adaptive { abs_tol: f64, rel_tol: f64, max_modes: u64 },
    /// Sum exactly this many modes. Used so that finite-difference stencils
    /// see one smooth function of the parameters.
    Fixed(u64),
}

/// Completely monotone mode kernels with parameter `c = L Omega / pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Kernel {
    /// `1 / (j (j + c))`
    InvJJc(f64),
    /// `1 / (j + c)^2`
    InvJc2(f64),
    /// `1 / (j + c)`
    InvJc(f64),
}

/// `Delta^k [1/(j+a)]` at `x = j + a`: `(-1)^k k! / prod_{i<=k} (x+i)`.
fn shifted_inverse_diffs(x: f64, kmax: usize) -> Vec<f64> {
    let mut d = Vec::with_capacity(kmax + 1);
    let mut v = 1.0 / x;
    d.push(v);
    for k in 1..=kmax {
        v *= -(k as f64) / (x + k as f64);
        d.push(v);
    }
    d
}

fn binomial_row(m: usize) -> Vec<f64> {
    let mut row = vec![1.0; m + 1];
    for k in 1..m {
        row[k] = row[k - 1] * (m - k + 1) as f64 / k as f64;
    }
    row
}

impl Kernel {
    #[inline]
    pub fn g(&self, j: f64) -> f64 {
        match *self {
            Kernel::InvJJc(c) => 1.0 / (j * (j + c)),
            Kernel::InvJc2(c) => 1.0 / ((j + c) * (j + c)),
            Kernel::InvJc(c) => 1.0 / (j + c),
        }
    }

    /// Forward differences `Delta^m g` at `n` for `m = 0..=kmax`, from
    /// exact product formulas (Leibniz rule), so nothing cancels.
    pub fn diffs(&self, n: f64, kmax: usize) -> Vec<f64> {
        match *self {
            Kernel::InvJc(c) => shifted_inverse_diffs(n + c, kmax),
            Kernel::InvJJc(c) | Kernel::InvJc2(c) => {
                let a = if matches!(self, Kernel::InvJJc(_)) { 0.0 } else { c };
                // u = 1/(j+a), v = 1/(j+c); Delta^m(uv)_n = sum_k C(m,k) Delta^k u_n Delta^(m-k) v_(n+k)
                let du = shifted_inverse_diffs(n + a, kmax);
                let dv: Vec<Vec<f64>> =
                    (0..=kmax).map(|k| shifted_inverse_diffs(n + c + k as f64, kmax - k)).collect();
                (0..=kmax)
                    .map(|m| {
                        let binom = binomial_row(m);
                        (0..=m).map(|k| binom[k] * du[k] * dv[k][m - k]).sum()
                    })
                    .collect()
            }
        }
    }

    /// `sum_{j>=n} g_j`, or `None` if it diverges.
    pub fn tail_sum(&self, n: f64) -> Result<Option<f64>> {
        let z = |x: f64| Complex64::new(x, 0.0);
        Ok(match *self {
            Kernel::InvJc(_) => None,
            Kernel::InvJc2(c) => Some(polygamma(1, z(n + c))?.re),
            Kernel::InvJJc(c) => {
                // (psi(n+c) - psi(n)) / c, via Taylor in c when c is small
                if c < 1.0 {
                    let mut acc = Neumaier::new();
                    let mut ck = 1.0;
                    let mut fact = 1.0;
                    for k in 1..=40u32 {
                        fact *= k as f64;
                        let t = polygamma(k, z(n))?.re * ck / fact;
                        acc.add(t);
                        if t.abs() < 1e-18 * acc.value().abs() {
                            break;
                        }
                        ck *= c;
                    }
                    Some(acc.value())
                } else {
                    Some((polygamma(0, z(n + c))?.re - polygamma(0, z(n))?.re) / c)
                }
            }
        })
    }

    fn is_summable(&self) -> bool {
        !matches!(self, Kernel::InvJc(_))
    }
}

/// The position-dependent factor multiplying the kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Pattern {
    /// `s_j(r)^2` for the given boundary.
    Square(Boundary),
    /// `sin(2 pi j r)`.
    Sin2,
}

impl Pattern {
    #[inline]
    pub fn at(&self, j: u64, r: f64) -> f64 {
        match *self {
            Pattern::Square(b) => {
                let s = b.mode(j, r);
                s * s
            }
            Pattern::Sin2 => sinpi(phase(j, 2.0 * r)),
        }
    }
}

/// `exp(2 pi i r)` and `1 - exp(2 pi i r)` without cancellation.
fn unit_phase(r: f64) -> (Complex64, Complex64) {
    let z = Complex64::new(cospi(2.0 * r), sinpi(2.0 * r));
    let s = sinpi(r);
    let w = Complex64::new(2.0 * s * s, -sinpi(2.0 * r));
    (z, w)
}

const ABEL_MAX_ORDER: usize = 40;

/// Estimate and bound of `sum_{j>=n} z^j g_j`.
fn oscillating_tail(kernel: &Kernel, n: u64, r: f64) -> Result<(Complex64, f64)> {
    let (_, w) = unit_phase(r);
    if w.norm() == 0.0 {
        return Ok(match kernel.tail_sum(n as f64)? {
            Some(t) => (Complex64::new(t, 0.0), 0.0),
            None => (Complex64::new(f64::INFINITY, 0.0), f64::INFINITY),
        });
    }
    let d = kernel.diffs(n as f64, ABEL_MAX_ORDER);
    Ok(abel_tail(&d, &vec![0.0; d.len()], n, r))
}

/// Summation by parts, `k` times: with `d[m] = Delta^m g_n`, the remainder
/// after `k` terms is at most `|Delta^(k-1) g_n| / |1 - z|^k` when the
/// differences keep one sign. `noise[m]` is the rounding error in `d[m]`.
/// Returns the estimate at the order with the smallest bound. `z != 1`.
fn abel_tail(d: &[f64], noise: &[f64], n: u64, r: f64) -> (Complex64, f64) {
    let (z, w) = unit_phase(r);
    let wn = w.norm();
    let zn = Complex64::new(cospi(phase(n, 2.0 * r)), sinpi(phase(n, 2.0 * r)));
    let q = z / w;
    let lead = zn / w;
    let mut best = (Complex64::new(0.0, 0.0), f64::INFINITY);
    let mut est = Complex64::new(0.0, 0.0);
    let mut qm = Complex64::new(1.0, 0.0);
    let mut wk = 1.0;
    for k in 1..=d.len() {
        est += lead * qm * d[k - 1];
        qm *= q;
        wk /= wn;
        let spread: f64 = (0..k).map(|m| noise[m] / wn.powi(m as i32 + 1)).sum();
        let bound = wk * d[k - 1].abs() + spread;
        if bound < best.1 {
            best = (est, bound);
        } else if k > 2 && bound > 4.0 * best.1 {
            break;
        }
    }
    best
}

/// Remainder `sum_{j>J} g_j P_j`: estimate and bound.
fn bare_tail(kernel: &Kernel, pattern: Pattern, r: f64, big_j: u64, policy: TailPolicy) -> Result<(f64, f64)> {
    let n = big_j + 1;
    match (policy, pattern) {
        (TailPolicy::AveragedTail, Pattern::Square(b)) => {
            let avg = kernel
                .tail_sum(n as f64)?
                .ok_or_else(|| Error::domain("averaged tail of a divergent kernel"))?;
            let (osc, bound) = oscillating_tail(kernel, n, r)?;
            let est = 0.5 * avg - 0.5 * b.sigma() * osc.re;
            Ok((est, 0.5 * bound + 4.0 * f64::EPSILON * avg.abs()))
        }
        (TailPolicy::AveragedTail, Pattern::Sin2) => {
            let (osc, bound) = oscillating_tail(kernel, n, r)?;
            if bound.is_infinite() {
                // z = 1, every sin(2 pi j r) vanishes
                return Ok((0.0, 0.0));
            }
            Ok((osc.im, bound))
        }
        (TailPolicy::IntegralBound, Pattern::Square(_)) => {
            let t = kernel
                .tail_sum(n as f64)?
                .ok_or_else(|| Error::domain("integral bound of a divergent kernel"))?;
            Ok((0.0, t))
        }
        (TailPolicy::IntegralBound, Pattern::Sin2) => {
            // Dirichlet test: partial sums of z^j are at most 2 / |1 - z|
            let (_, w) = unit_phase(r);
            if w.norm() == 0.0 {
                return Ok((0.0, 0.0));
            }
            Ok((0.0, 2.0 * kernel.g(n as f64) / w.norm()))
        }
    }
}

fn pattern_vanishes(pattern: Pattern, r: f64) -> bool {
    let at_wall = r.fract() == 0.0;
    match pattern {
        Pattern::Square(Boundary::Dirichlet) => at_wall,
        Pattern::Square(Boundary::Neumann) => false,
        Pattern::Sin2 => at_wall || (2.0 * r).fract() == 0.0,
    }
}

const FIRST_CHECKPOINT: u64 = 16;

/// `sum_{j>=1} g_j P_j(r)` for a completely monotone kernel.
pub(crate) fn bare_sum(kernel: Kernel, pattern: Pattern, r: f64, stop: Stop, policy: TailPolicy) -> Result<Outcome> {
    if pattern_vanishes(pattern, r) {
        return Ok(Outcome::zero());
    }
    if policy == TailPolicy::IntegralBound && !kernel.is_summable() && matches!(pattern, Pattern::Square(_)) {
        return Err(Error::domain("kernel is not absolutely summable"));
    }
    let mut acc = Neumaier::new();
    let mut j = 0u64;
    let mut next = match stop {
        Stop::Fixed(n) => n,
        Stop::Adaptive { max_modes, .. } => FIRST_CHECKPOINT.min(max_modes),
    };
    loop {
        while j < next {
            j += 1;
            acc.add(kernel.g(j as f64) * pattern.at(j, r));
        }
        let (est, bound) = bare_tail(&kernel, pattern, r, j, policy)?;
        let value = acc.value() + est;
        let error = bound + acc.rounding_bound() + 4.0 * f64::EPSILON * est.abs();
        match stop {
            Stop::Fixed(_) => {
                return Ok(Outcome {
                    value,
                    error,
                    modes: j,
                })
            }
            Stop::Adaptive {
                abs_tol,
                rel_tol,
                max_modes,
            } => {
                if bound <= abs_tol.max(rel_tol * value.abs()) {
                    return Ok(Outcome {
                        value,
                        error,
                        modes: j,
                    });
                }
                if j >= max_modes {
                    return Err(Error::NoConvergence {
                        terms: j as usize,
                        error: bound,
                        wanted: abs_tol.max(rel_tol * value.abs()),
                    });
                }
                next = (2 * j).min(max_modes);
            }
        }
    }
}

fn gauss_legendre_32() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = 32usize;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    })
}

/// `int_J^inf env(t) dt` via `t = J/u`.
pub(crate) fn envelope_integral(env: &dyn Fn(f64) -> f64, big_j: f64) -> f64 {
    let mut acc = Neumaier::new();
    for &(x, w) in gauss_legendre_32() {
        let u = 0.5 * (x + 1.0);
        let t = big_j / u;
        acc.add(0.5 * w * env(t) * big_j / (u * u));
    }
    acc.value()
}

/// `sum_{j>=1} term(j)` where `|term(t)| <= env(t)` and `env` decreases for
/// `t >= j_min`.
pub(crate) fn enveloped_sum(
    term: &dyn Fn(u64) -> f64,
    env: &dyn Fn(f64) -> f64,
    j_min: f64,
    stop: Stop,
) -> Result<Outcome> {
    let mut acc = Neumaier::new();
    let mut j = 0u64;
    let mut next = match stop {
        Stop::Fixed(n) => n,
        Stop::Adaptive { max_modes, .. } => 64.min(max_modes),
    };
    loop {
        while j < next {
            j += 1;
            acc.add(term(j));
        }
        let value = acc.value();
        let bound = if (j as f64) >= j_min {
            // margin over the quadrature error of the smooth integrand
            1.02 * envelope_integral(env, j as f64)
        } else {
            f64::INFINITY
        };
        let error = bound + acc.rounding_bound();
        match stop {
            Stop::Fixed(_) => {
                return Ok(Outcome {
                    value,
                    error,
                    modes: j,
                })
            }
            Stop::Adaptive {
                abs_tol,
                rel_tol,
                max_modes,
            } => {
                if bound <= abs_tol.max(rel_tol * value.abs()) {
                    return Ok(Outcome {
                        value,
                        error,
                        modes: j,
                    });
                }
                if j >= max_modes {
                    return Err(Error::NoConvergence {
                        terms: j as usize,
                        error: bound,
                        wanted: abs_tol.max(rel_tol * value.abs()),
                    });
                }
                next = (2 * j).min(max_modes);
            }
        }
    }
}

/// Orders of summation by parts used for smeared oscillating tails. The
/// differences are taken numerically, so high orders drown in rounding.
const SMEARED_ABEL_ORDER: usize = 3;

/// `sum_{j>=1} g(j) sin(2 pi j r)` where `g` is positive with differences of
/// fixed sign up to order three for `t >= j_min`.
pub(crate) fn oscillating_sum(g: &dyn Fn(f64) -> f64, r: f64, j_min: f64, stop: Stop) -> Result<Outcome> {
    if pattern_vanishes(Pattern::Sin2, r) {
        return Ok(Outcome::zero());
    }
    let mut acc = Neumaier::new();
    let mut j = 0u64;
    let mut next = match stop {
        Stop::Fixed(n) => n,
        Stop::Adaptive { max_modes, .. } => 64.min(max_modes),
    };
    loop {
        while j < next {
            j += 1;
            acc.add(g(j as f64) * sinpi(phase(j, 2.0 * r)));
        }
        let (est, bound) = if (j as f64) >= j_min {
            let n = j + 1;
            let mut row: Vec<f64> = (0..SMEARED_ABEL_ORDER as u64).map(|i| g((n + i) as f64)).collect();
            let scale = row[0].abs();
            let mut diffs = vec![row[0]];
            let mut noise = vec![0.0];
            for m in 1..SMEARED_ABEL_ORDER {
                row = row.windows(2).map(|w| w[1] - w[0]).collect();
                diffs.push(row[0]);
                noise.push(4.0 * f64::EPSILON * scale * (1u64 << m) as f64);
            }
            let (t, b) = abel_tail(&diffs, &noise, n, r);
            (t.im, b)
        } else {
            (0.0, f64::INFINITY)
        };
        let value = acc.value() + est;
        let error = bound + acc.rounding_bound() + 4.0 * f64::EPSILON * est.abs();
        match stop {
            Stop::Fixed(_) => {
                return Ok(Outcome {
                    value,
                    error,
                    modes: j,
                })
            }
            Stop::Adaptive {
                abs_tol,
                rel_tol,
                max_modes,
            } => {
                if bound <= abs_tol.max(rel_tol * value.abs()) {
                    return Ok(Outcome {
                        value,
                        error,
                        modes: j,
                    });
                }
                if j >= max_modes {
                    return Err(Error::NoConvergence {
                        terms: j as usize,
                        error: bound,
                        wanted: abs_tol.max(rel_tol * value.abs()),
                    });
                }
                next = (2 * j).min(max_modes);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(kernel: Kernel, pattern: Pattern, r: f64, n: u64) -> f64 {
        (1..=n).map(|j| kernel.g(j as f64) * pattern.at(j, r)).collect::<Neumaier>().value()
    }

    #[test]
    fn diffs_match_direct_differences() {
        for kernel in [Kernel::InvJJc(2.0), Kernel::InvJc2(0.7), Kernel::InvJc(3.0)] {
            let d = kernel.diffs(10.0, 4);
            let g: Vec<f64> = (10..15).map(|j| kernel.g(j as f64)).collect();
            let d1 = g[1] - g[0];
            let d2 = g[2] - 2.0 * g[1] + g[0];
            assert!((d[1] - d1).abs() < 1e-12 * d1.abs());
            assert!((d[2] - d2).abs() < 1e-9 * d2.abs());
        }
    }

    #[test]
    fn tail_sums() {
        let t = Kernel::InvJJc(1.0).tail_sum(1.0).unwrap().unwrap();
        assert!((t - 1.0).abs() < 1e-14);
        let t = Kernel::InvJJc(0.25).tail_sum(5.0).unwrap().unwrap();
        let want: f64 = (5..2_000_000).map(|j| 1.0 / (j as f64 * (j as f64 + 0.25))).sum::<f64>() + 1.0 / 2_000_000.0;
        assert!((t - want).abs() < 1e-12);
    }

    #[test]
    fn averaged_tail_beats_brute_force() {
        let n = 4_000_000;
        for (kernel, pattern, r) in [
            (Kernel::InvJJc(2.0), Pattern::Square(Boundary::Dirichlet), 0.3),
            (Kernel::InvJJc(2.0), Pattern::Square(Boundary::Neumann), 0.5),
            (Kernel::InvJc2(2.0), Pattern::Square(Boundary::Dirichlet), 0.17),
            (Kernel::InvJc(2.0), Pattern::Sin2, 0.1),
        ] {
            let stop = Stop::Adaptive {
                abs_tol: 1e-15,
                rel_tol: 1e-13,
                max_modes: 1 << 20,
            };
            let v = bare_sum(kernel, pattern, r, stop, TailPolicy::AveragedTail).unwrap();
            let b = brute(kernel, pattern, r, n);
            let (est, _) = bare_tail(&kernel, pattern, r, n, TailPolicy::AveragedTail).unwrap();
            assert!((v.value - (b + est)).abs() < 1e-12, "{kernel:?} {pattern:?}");
            assert!(v.modes < 10_000);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let s: f64 = gauss_legendre_32().iter().map(|&(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-14);
    }
}
