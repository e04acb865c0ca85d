//! Special functions for the closed-form energies.
//!
//! All routines take and return [`Complex64`]. Series-based ones report
//! an estimated absolute error together with the value in a
//! [`SeriesValue`].
//!
//! The Lerch transcendent is written `Phi(z, s, a)`; its third argument is
//! called `a` here rather than `alpha` so it cannot be confused with the
//! diamagnetic weight of the coupling model.

mod accel;
mod gamma;
mod hyper;
mod lerch;

pub use accel::{euler_transform, levin_u};
pub use gamma::{digamma, gen_harmonic, ln_gamma, pochhammer, polygamma, EULER_GAMMA};
pub use hyper::{gauss_2f1, inc_beta};
pub use lerch::{hurwitz_zeta, lerch_phi};

pub use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// How slowly convergent series are summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Accelerator {
    /// Plain partial sums.
    None,
    /// Levin's u transform of the partial sums.
    LevinU,
    /// Euler's transform in powers of `z/(1-z)`.
    Euler,
    /// Pick per function: the asymptotic tail expansion for the Lerch
    /// transcendent (and everything that reduces to it), Levin u with an
    /// Euler fallback otherwise.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesAccuracy {
    pub abs_tol: f64,
    pub max_terms: usize,
    pub accelerator: Accelerator,
}

impl Default for SeriesAccuracy {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            max_terms: 1_000_000,
            accelerator: Accelerator::Auto,
        }
    }
}

impl SeriesAccuracy {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }

    pub(crate) fn check(&self) -> crate::Result<()> {
        if !(self.abs_tol > 0.0) || self.max_terms == 0 {
            return Err(crate::Error::invalid(
                "series accuracy needs abs_tol > 0 and max_terms >= 1",
            ));
        }
        Ok(())
    }
}

/// A series result with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: Complex64,
    pub error: f64,
    pub terms: usize,
}

impl SeriesValue {
    pub(crate) fn exact(value: Complex64) -> Self {
        Self {
            value,
            error: 4.0 * f64::EPSILON * value.norm(),
            terms: 1,
        }
    }

    pub(crate) fn scaled(self, k: Complex64) -> Self {
        Self {
            value: self.value * k,
            error: self.error * k.norm() + 2.0 * f64::EPSILON * (self.value * k).norm(),
            terms: self.terms,
        }
    }
}

pub(crate) fn is_nonpositive_integer(a: Complex64) -> bool {
    a.im == 0.0 && a.re <= 0.0 && a.re.fract() == 0.0
}

pub(crate) fn check_finite(v: Complex64, what: &str) -> crate::Result<Complex64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(crate::Error::domain(format!("{what} is not finite")))
    }
}
