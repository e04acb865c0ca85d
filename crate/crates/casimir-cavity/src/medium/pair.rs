//! Fourth-order interaction of two atoms in a Dirichlet cavity, bare
//! coupling.
//!
//! The double series over modes `(j, l)` is summed diagonal by diagonal,
//! `D(d) = sum_{j + l = d}`, and cut off smoothly: `S(M)` weights `D(d)` by
//! a step that is flat up to `d = M/2` and falls to zero at `d = M` with all
//! derivatives continuous. The oscillating parts of the remainder then die
//! off faster than any power of `M`, and the smooth part is a series in
//! `1/M`. Two Richardson steps along a doubling ladder remove its `1/M`
//! and `1/M^2` terms; the change of the extrapolated value between rungs
//! is the reported error.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::force::{fd_derivative, Constraint, ForceMethod, ForceResult, FD_STEP};
use crate::model::{AtomSpec, Boundary, CavitySpec, EnergyPath, EnergyResult};
use crate::sum::{phase, sinpi, Neumaier};
use crate::{Error, Result};

/// Two atoms sharing gap and coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub x_a: f64,
    pub x_b: f64,
    pub omega: f64,
    pub lambda: f64,
}

impl PairSpec {
    pub fn new(x_a: f64, x_b: f64, omega: f64, lambda: f64) -> Self {
        Self { x_a, x_b, omega, lambda }
    }

    pub fn from_atom(atom: &AtomSpec, x_a: f64, x_b: f64) -> Self {
        Self::new(x_a, x_b, atom.omega, atom.lambda)
    }

    pub fn swapped(self) -> Self {
        Self {
            x_a: self.x_b,
            x_b: self.x_a,
            ..self
        }
    }

    pub fn check(&self, cavity: &CavitySpec) -> Result<()> {
        cavity.check()?;
        if cavity.boundary != Boundary::Dirichlet {
            return Err(Error::domain("pair interaction is only available for a Dirichlet cavity"));
        }
        for x in [self.x_a, self.x_b] {
            if !(x >= 0.0 && x <= cavity.length) {
                return Err(Error::invalid(format!("atom position {x} outside [0, {}]", cavity.length)));
            }
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::invalid(format!("gap Omega must be > 0, got {}", self.omega)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("coupling lambda must be >= 0, got {}", self.lambda)));
        }
        Ok(())
    }

    fn at_wall(&self, l: f64) -> bool {
        [self.x_a, self.x_b].iter().any(|&x| x == 0.0 || x == l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairControl {
    pub rel_tol: f64,
    /// Absolute tolerance; `None` means `1e-9 lambda^4 L` for energies and
    /// `1e-9 lambda^4` for forces.
    pub abs_tol: Option<f64>,
    pub max_order: u64,
    /// Extrapolate from cutoffs `M`, `M/2` and `M/4` for this `M` instead of
    /// climbing the ladder.
    pub fixed_order: Option<u64>,
}

impl Default for PairControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: None,
            max_order: 16_384,
            fixed_order: None,
        }
    }
}

const FIRST_ORDER: u64 = 128;

impl PairControl {
    pub fn check(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::invalid(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol)));
        }
        if let Some(a) = self.abs_tol {
            if !(a > 0.0) {
                return Err(Error::invalid(format!("abs_tol must be > 0, got {a}")));
            }
        }
        if self.max_order < FIRST_ORDER {
            return Err(Error::invalid(format!("max_order must be at least {FIRST_ORDER}")));
        }
        if let Some(m) = self.fixed_order {
            if m < 16 {
                return Err(Error::invalid("fixed_order must be at least 16"));
            }
        }
        Ok(())
    }
}

/// `sin(pi j x / L)` for `j = 0..=m`.
fn sines(x: f64, l: f64, m: u64) -> Vec<f64> {
    let r = x / l;
    (0..=m).map(|j| sinpi(phase(j, r))).collect()
}

/// Mode sines of both atoms and the scalars the addends need.
struct Frame {
    l: f64,
    lo: f64,
    lam4: f64,
    sa: Vec<f64>,
    sb: Vec<f64>,
}

impl Frame {
    fn new(cavity: &CavitySpec, pair: &PairSpec, m: u64) -> Self {
        let l = cavity.length;
        Self {
            l,
            lo: l * pair.omega,
            lam4: pair.lambda.powi(4),
            sa: sines(pair.x_a, l, m),
            sb: sines(pair.x_b, l, m),
        }
    }

    /// Energy addend for modes `(j, l)`.
    fn energy(&self, j: usize, k: usize) -> f64 {
        let (l, lo) = (self.l, self.lo);
        let (jf, kf) = (j as f64, k as f64);
        let (aj, bj, ak, bk) = (self.sa[j], self.sb[j], self.sa[k], self.sb[k]);
        let pre = -self.lam4 * l * l
            / (PI.powi(3) * jf * kf * (lo / l) * (jf + kf) * (PI * jf + lo).powi(2) * (PI * kf + lo));
        let cross = 2.0 * (2.0 * PI * lo * (jf + 2.0 * kf) + PI * PI * jf * (jf + kf) + 2.0 * lo * lo) * aj * bj * ak * bk;
        let near = PI * jf + 3.0 * PI * kf + 2.0 * lo;
        let far = 2.0 * PI * (jf + kf);
        let sq = lo * aj * aj * (near * ak * ak + far * bk * bk) + lo * bj * bj * (far * ak * ak + near * bk * bk);
        pre * (cross + sq)
    }

    /// Fixed-ratio wall force addend for modes `(j, l)`.
    fn force(&self, j: usize, k: usize) -> f64 {
        let (l, lo) = (self.l, self.lo);
        let (jf, kf) = (j as f64, k as f64);
        let (aj, bj, ak, bk) = (self.sa[j], self.sb[j], self.sa[k], self.sb[k]);
        let pre = self.lam4 * l
            / (PI.powi(3) * jf * kf * (lo / l) * (jf + kf) * (PI * jf + lo).powi(3) * (PI * kf + lo).powi(2));
        let p2 = PI * PI;
        let same = p2 * lo * (2.0 * jf * jf + 15.0 * jf * kf + 3.0 * kf * kf)
            + 2.0 * PI * lo * lo * (3.0 * jf + 2.0 * kf)
            + 3.0 * PI.powi(3) * jf * kf * (jf + 3.0 * kf)
            + 2.0 * lo.powi(3);
        let other = 2.0 * p2 * (jf + kf) * (lo * (2.0 * jf + kf) + 3.0 * PI * jf * kf);
        let sq = lo * aj * aj * (ak * ak * same + bk * bk * other) + lo * bj * bj * (bk * bk * same + ak * ak * other);
        let cross = 2.0
            * aj
            * bj
            * ak
            * bk
            * (p2 * lo * lo * (3.0 * jf * jf + 17.0 * jf * kf + 4.0 * kf * kf)
                + 2.0 * PI.powi(4) * jf * jf * kf * (jf + kf)
                + 2.0 * PI * lo.powi(3) * (3.0 * jf + 2.0 * kf)
                + PI.powi(3) * jf * lo * (jf + 3.0 * kf) * (jf + 4.0 * kf)
                + 2.0 * lo.powi(4));
        pre * (sq + cross)
    }
}

/// Diagonal sums `D(d) = sum_{j + l = d} t(j, l)` for `d` in `from..=to`,
/// each summed in increasing `j`.
fn diagonals(frame: &Frame, from: u64, to: u64, addend: fn(&Frame, usize, usize) -> f64) -> Vec<f64> {
    (from..=to)
        .into_par_iter()
        .map(|d| {
            let d = d as usize;
            let acc: Neumaier = (1..d).map(|j| addend(frame, j, d - j)).collect();
            acc.value()
        })
        .collect()
}

struct Ladder {
    value: f64,
    error: f64,
    order: u64,
}

/// Smooth step: 1 on `[0, 1/2]`, 0 from 1 on.
fn cutoff(t: f64) -> f64 {
    if t <= 0.5 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let fall = (-1.0 / (1.0 - t)).exp();
        let rise = (-1.0 / (t - 0.5)).exp();
        fall / (fall + rise)
    }
}

/// `S(M)` from the diagonal sums `diag[d]`.
fn smoothed(diag: &[f64], m: u64) -> f64 {
    let mf = m as f64;
    let acc: Neumaier = (2..=m as usize).map(|d| diag[d] * cutoff(d as f64 / mf)).collect();
    acc.value()
}

fn climb(
    cavity: &CavitySpec,
    pair: &PairSpec,
    ctl: &PairControl,
    abs_tol: f64,
    addend: fn(&Frame, usize, usize) -> f64,
) -> Result<Ladder> {
    let top = ctl.fixed_order.unwrap_or(ctl.max_order);
    let frame = Frame::new(cavity, pair, top);
    // diagonal sums, extended as the ladder climbs
    let mut diag = vec![0.0, 0.0];
    let extend = |to: u64, diag: &mut Vec<f64>| {
        let from = diag.len() as u64;
        if to >= from {
            diag.extend(diagonals(&frame, from, to, addend));
        }
    };
    let rich = |m: u64, diag: &Vec<f64>| {
        let s = |k: u64| smoothed(diag, m / k);
        let (r1, r2) = (2.0 * s(1) - s(2), 2.0 * s(2) - s(4));
        (4.0 * r1 - r2) / 3.0
    };
    if let Some(m) = ctl.fixed_order {
        extend(m, &mut diag);
        let value = rich(m, &diag);
        return Ok(Ladder {
            value,
            error: (value - rich(m / 2, &diag)).abs(),
            order: m,
        });
    }
    let mut m = FIRST_ORDER;
    extend(m, &mut diag);
    let mut prev = rich(m, &diag);
    loop {
        let next = 2 * m;
        if next > top {
            return Err(Error::NoConvergence {
                terms: m as usize,
                error: f64::NAN,
                wanted: abs_tol.max(ctl.rel_tol * prev.abs()),
            });
        }
        extend(next, &mut diag);
        let value = rich(next, &diag);
        let error = (value - prev).abs();
        if error <= abs_tol.max(ctl.rel_tol * value.abs()) {
            return Ok(Ladder {
                value,
                error,
                order: next,
            });
        }
        prev = value;
        m = next;
    }
}

fn climb_checked(
    cavity: &CavitySpec,
    pair: &PairSpec,
    ctl: &PairControl,
    abs_tol: f64,
    addend: fn(&Frame, usize, usize) -> f64,
) -> Result<Ladder> {
    climb(cavity, pair, ctl, abs_tol, addend).map_err(|e| match e {
        Error::NoConvergence { terms, wanted, .. } => {
            // report the last rung's change as the achieved error
            let last = PairControl {
                fixed_order: Some(terms as u64),
                ..*ctl
            };
            let error = climb(cavity, pair, &last, abs_tol, addend).map(|l| l.error).unwrap_or(f64::NAN);
            Error::NoConvergence { terms, error, wanted }
        }
        other => other,
    })
}

/// Fourth-order interaction energy of the pair.
pub fn pair_energy_4th(cavity: &CavitySpec, pair: &PairSpec, ctl: &PairControl) -> Result<EnergyResult> {
    pair.check(cavity)?;
    ctl.check()?;
    if pair.lambda == 0.0 || pair.at_wall(cavity.length) {
        return Ok(EnergyResult {
            value: 0.0,
            error_bound: 0.0,
            modes_used: 0,
            path: EnergyPath::Series,
            warnings: Vec::new(),
        });
    }
    let abs_tol = ctl.abs_tol.unwrap_or(1e-9 * pair.lambda.powi(4) * cavity.length);
    let out = climb_checked(cavity, pair, ctl, abs_tol, Frame::energy)?;
    Ok(EnergyResult {
        value: out.value,
        error_bound: out.error,
        modes_used: out.order,
        path: EnergyPath::Series,
        warnings: Vec::new(),
    })
}

fn zero_force(constraint: Constraint, method: ForceMethod) -> ForceResult {
    ForceResult {
        value: 0.0,
        error_bound: 0.0,
        constraint,
        method,
        modes_used: 0,
        suspect: false,
        derived_extension: false,
        analytic_value: None,
        fd_value: None,
        warnings: Vec::new(),
    }
}

/// `-dE/dL` of the pair energy with both `x_a/L` and `x_b/L` held fixed.
pub fn pair_wall_force_fixed_ratio(cavity: &CavitySpec, pair: &PairSpec, ctl: &PairControl) -> Result<ForceResult> {
    pair.check(cavity)?;
    ctl.check()?;
    if pair.lambda == 0.0 || pair.at_wall(cavity.length) {
        return Ok(zero_force(Constraint::FixedRatio, ForceMethod::Analytic));
    }
    let abs_tol = ctl.abs_tol.unwrap_or(1e-9 * pair.lambda.powi(4));
    let out = climb_checked(cavity, pair, ctl, abs_tol, Frame::force)?;
    Ok(ForceResult {
        value: out.value,
        error_bound: out.error,
        modes_used: out.order,
        ..zero_force(Constraint::FixedRatio, ForceMethod::Analytic)
    })
}

/// Finite difference of [`pair_energy_4th`] in `L`, with every stencil point
/// at the order the centre needed.
pub fn pair_wall_force_fd(
    cavity: &CavitySpec,
    pair: &PairSpec,
    ctl: &PairControl,
    constraint: Constraint,
) -> Result<ForceResult> {
    if constraint == Constraint::AtomPosition {
        return Err(Error::invalid("pair force is a wall force"));
    }
    let centre = pair_energy_4th(cavity, pair, ctl)?;
    if centre.modes_used == 0 {
        return Ok(zero_force(constraint, ForceMethod::Fd));
    }
    let fixed = PairControl {
        fixed_order: Some(centre.modes_used),
        ..*ctl
    };
    let l = cavity.length;
    let (ra, rb) = (pair.x_a / l, pair.x_b / l);
    let energy = |dl: f64| -> Result<f64> {
        let cav = cavity.with_length(l + dl);
        let p = match constraint {
            Constraint::FixedRatio => PairSpec {
                x_a: ra * (l + dl),
                x_b: rb * (l + dl),
                ..*pair
            },
            _ => *pair,
        };
        Ok(pair_energy_4th(&cav, &p, &fixed)?.value)
    };
    let (d, err) = fd_derivative(&energy, FD_STEP * l, centre.value.abs())?;
    Ok(ForceResult {
        value: -d,
        error_bound: err + 8.0 * centre.error_bound / l,
        modes_used: centre.modes_used,
        fd_value: Some(-d),
        ..zero_force(constraint, ForceMethod::Fd)
    })
}

/// Pair wall force: the analytic series at fixed ratio, otherwise the
/// finite difference.
pub fn pair_wall_force(
    cavity: &CavitySpec,
    pair: &PairSpec,
    ctl: &PairControl,
    constraint: Constraint,
) -> Result<ForceResult> {
    match constraint {
        Constraint::FixedRatio => pair_wall_force_fixed_ratio(cavity, pair, ctl),
        Constraint::FixedPosition => pair_wall_force_fd(cavity, pair, ctl, constraint),
        Constraint::AtomPosition => Err(Error::invalid("pair force is a wall force")),
    }
}
