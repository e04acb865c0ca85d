//! Configuration types and unit conventions.
//!
//! Natural units throughout (`hbar = c = 1`). With the cavity length as the
//! unit of length, energies come out in `1/L` and forces in `1/L^2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `hbar * c` in J m.
pub const HBAR_C: f64 = 3.161_526_77e-26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Field vanishes on the walls, modes `sin(pi j x / L)`.
    Dirichlet,
    /// Normal derivative vanishes, modes `cos(pi j x / L)`. The `j = 0`
    /// zero mode is left out of every sum.
    Neumann,
}

impl Boundary {
    /// Mode function at relative position `r = x/L`.
    #[inline]
    pub fn mode(self, j: u64, r: f64) -> f64 {
        match self {
            Boundary::Dirichlet => crate::sum::sin_mode(j, r),
            Boundary::Neumann => crate::sum::cos_mode(j, r),
        }
    }

    /// `+1` for Dirichlet, `-1` for Neumann: `s_j^2 = (1 - sigma cos(2 pi j r)) / 2`
    /// and `d(s_j^2)/dx = sigma (pi j / L) sin(2 pi j r)`.
    #[inline]
    pub fn sigma(self) -> f64 {
        match self {
            Boundary::Dirichlet => 1.0,
            Boundary::Neumann => -1.0,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Boundary::Dirichlet => Boundary::Neumann,
            Boundary::Neumann => Boundary::Dirichlet,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavitySpec {
    pub length: f64,
    pub boundary: Boundary,
}

impl CavitySpec {
    pub fn new(length: f64, boundary: Boundary) -> Result<Self> {
        let c = Self { length, boundary };
        c.check()?;
        Ok(c)
    }

    pub fn dirichlet(length: f64) -> Self {
        Self {
            length,
            boundary: Boundary::Dirichlet,
        }
    }

    pub fn neumann(length: f64) -> Self {
        Self {
            length,
            boundary: Boundary::Neumann,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::invalid(format!("cavity length must be > 0, got {}", self.length)));
        }
        Ok(())
    }

    /// `omega_j = k_j = pi j / L`.
    pub fn omega(&self, j: u64) -> f64 {
        PI * j as f64 / self.length
    }

    pub fn with_length(self, length: f64) -> Self {
        Self { length, ..self }
    }
}

/// A two-level atom: position, gap, coupling strength and size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub x: f64,
    pub omega: f64,
    pub lambda: f64,
    pub a0: f64,
}

impl AtomSpec {
    pub fn new(x: f64, omega: f64, lambda: f64, a0: f64) -> Self {
        Self { x, omega, lambda, a0 }
    }

    pub fn at(self, x: f64) -> Self {
        Self { x, ..self }
    }

    pub fn check(&self, cavity: &CavitySpec) -> Result<()> {
        cavity.check()?;
        if !(self.x >= 0.0 && self.x <= cavity.length) {
            return Err(Error::invalid(format!(
                "atom position {} outside [0, {}]",
                self.x, cavity.length
            )));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::invalid(format!("gap Omega must be > 0, got {}", self.omega)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("coupling lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.a0 >= 0.0 && self.a0.is_finite()) {
            return Err(Error::invalid(format!("radius a0 must be >= 0, got {}", self.a0)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKind {
    /// Linear point coupling, no field self-interaction.
    BarePoint,
    /// Lorentzian-smeared coupling plus the `alpha`-weighted `phi^2` term.
    SmearedDiamagnetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingModel {
    pub kind: CouplingKind,
    /// Weight of the diamagnetic term. Ignored for [`CouplingKind::BarePoint`].
    pub alpha: f64,
}

impl CouplingModel {
    pub fn bare() -> Self {
        Self {
            kind: CouplingKind::BarePoint,
            alpha: 0.0,
        }
    }

    pub fn smeared(alpha: f64) -> Self {
        Self {
            kind: CouplingKind::SmearedDiamagnetic,
            alpha,
        }
    }

    pub fn is_bare(&self) -> bool {
        self.kind == CouplingKind::BarePoint
    }

    pub fn check(&self, atom: &AtomSpec) -> Result<()> {
        if self.kind == CouplingKind::SmearedDiamagnetic {
            if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
                return Err(Error::invalid(format!("alpha must be >= 0, got {}", self.alpha)));
            }
            if atom.a0 == 0.0 {
                return Err(Error::domain(
                    "smeared coupling needs a0 > 0: the phi^2 term diverges for a point atom",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailPolicy {
    /// Bound the remainder by the integral of the term envelope.
    IntegralBound,
    /// Add the remainder of the mode sum with `s_j^2` replaced by its
    /// average, plus an error-bounded estimate of the oscillating part.
    AveragedTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    pub rel_tol: f64,
    /// Absolute tolerance; `None` means `1e-14 * lambda^2`.
    pub abs_tol: Option<f64>,
    pub max_modes: u64,
    /// `None` picks averaged tails for bare sums and integral bounds for
    /// smeared ones.
    pub tail_policy: Option<TailPolicy>,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: None,
            max_modes: 10_000_000,
            tail_policy: None,
        }
    }
}

impl SeriesControl {
    pub fn check(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid("rel_tol must be > 0"));
        }
        if let Some(a) = self.abs_tol {
            if !(a > 0.0) {
                return Err(Error::invalid("abs_tol must be > 0"));
            }
        }
        if self.max_modes == 0 {
            return Err(Error::invalid("max_modes must be >= 1"));
        }
        Ok(())
    }

    pub fn abs_tol_for(&self, lambda: f64) -> f64 {
        self.abs_tol
            .unwrap_or_else(|| (1e-14 * lambda * lambda).max(f64::MIN_POSITIVE))
    }

    pub fn tail_for(&self, model: &CouplingModel) -> TailPolicy {
        self.tail_policy.unwrap_or(if model.is_bare() {
            TailPolicy::AveragedTail
        } else {
            TailPolicy::IntegralBound
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyPath {
    Series,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyResult {
    /// Energy shift in units of `1/L`.
    pub value: f64,
    pub error_bound: f64,
    pub modes_used: u64,
    pub path: EnergyPath,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Per-mode weight of the Lorentzian atomic profile,
/// `f_j = 2 / ((a0 pi j / L)^2 + 1)`.
pub fn mode_weight(j: u64, length: f64, a0: f64) -> f64 {
    let t = a0 * PI * j as f64 / length;
    2.0 / (t * t + 1.0)
}

/// `|<2s|p|1s>| = 4 sqrt(2) / (27 a0)` for a hydrogenic atom of Bohr radius
/// `a0`. Useful for translating a physical diamagnetic weight into `alpha`.
pub fn momentum_matrix_element_1s2s(a0: f64) -> Result<f64> {
    if !(a0 > 0.0) {
        return Err(Error::domain("matrix element needs a0 > 0"));
    }
    Ok(4.0 * std::f64::consts::SQRT_2 / (27.0 * a0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Energy,
    Force,
}

/// Natural-unit value to SI: joules for energies, newtons for forces, for a
/// cavity of length `l_meters`.
pub fn to_si(value: f64, unit: Unit, l_meters: f64) -> Result<f64> {
    if !(l_meters > 0.0) {
        return Err(Error::invalid("L in meters must be > 0"));
    }
    Ok(match unit {
        Unit::Energy => value * HBAR_C / l_meters,
        Unit::Force => value * HBAR_C / (l_meters * l_meters),
    })
}
