//! Forces on the walls and on the atom.
//!
//! Wall forces are `-dE/dL`, positive when they push the walls apart, under
//! one of two constraints: the atom keeps its relative position `x/L`, or it
//! keeps its distance `x` from the wall at 0 while the wall at `L` moves.
//! The atom force is `-dE/dx`, positive towards larger `x`.
//!
//! The two wall forces are related by `F_x = F_{x/L} - (x/L) F_atom`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::energy::{beta_param, c_param, energy_series, energy_series_at, smeared_j_min, stop_for};
use crate::model::{AtomSpec, Boundary, CavitySpec, CouplingKind, CouplingModel, SeriesControl};
use crate::series::{bare_sum, enveloped_sum, oscillating_sum, Kernel, Outcome, Pattern};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    FixedRatio,
    FixedPosition,
    AtomPosition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceMethod {
    Analytic,
    Fd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceResult {
    /// Force in units of `1/L^2`.
    pub value: f64,
    pub error_bound: f64,
    pub constraint: Constraint,
    pub method: ForceMethod,
    pub modes_used: u64,
    /// The analytic series disagreed with the finite difference of the
    /// energy; `value` is the finite difference and `analytic_value` keeps
    /// the analytic number.
    pub suspect: bool,
    /// Not one of the published formulas: obtained by applying the same
    /// differentiation to the Neumann energy.
    pub derived_extension: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ForceResult {
    fn analytic(out: Outcome, constraint: Constraint) -> Self {
        Self {
            value: out.value,
            error_bound: out.error,
            constraint,
            method: ForceMethod::Analytic,
            modes_used: out.modes,
            suspect: false,
            derived_extension: false,
            analytic_value: None,
            fd_value: None,
            warnings: Vec::new(),
        }
    }
}

/// Relative finite-difference step, `h = FD_STEP * L`.
pub const FD_STEP: f64 = 1e-6;

/// Relative tolerance for accepting an analytic force against its finite
/// difference.
pub const FD_AGREEMENT: f64 = 1e-6;

fn check_inputs(cavity: &CavitySpec, atom: &AtomSpec, model: &CouplingModel, ctl: &SeriesControl) -> Result<()> {
    atom.check(cavity)?;
    model.check(atom)?;
    ctl.check()
}

/// Force tolerance derived from the energy tolerance: energies are in `1/L`
/// and forces in `1/L^2`.
fn force_tol(ctl: &SeriesControl, atom: &AtomSpec, cavity: &CavitySpec) -> f64 {
    ctl.abs_tol_for(atom.lambda) / cavity.length
}

fn zero(constraint: Constraint) -> ForceResult {
    ForceResult::analytic(Outcome::zero(), constraint)
}

/// `sum_j sin(2 pi j r) / (j + c)` for the bare atom force.
///
/// The sum jumps by `pi` at the walls. There it is replaced by its limit
/// from inside the cavity, `+pi/2` at `r = 0` and `-pi/2` at `r = 1`.
fn bare_sin_sum(cavity: &CavitySpec, atom: &AtomSpec, ctl: &SeriesControl, tol: f64) -> Result<Outcome> {
    let r = atom.x / cavity.length;
    if r == 0.0 || r == 1.0 {
        return Ok(Outcome {
            value: if r == 0.0 { FRAC_PI_2 } else { -FRAC_PI_2 },
            error: 0.0,
            modes: 0,
        });
    }
    bare_sum(
        Kernel::InvJc(c_param(cavity, atom)),
        Pattern::Sin2,
        r,
        stop_for(ctl, tol, None),
        ctl.tail_for(&CouplingModel::bare()),
    )
}


/// Smeared `alpha = 1` fixed-ratio series `sum_j b_j` with
/// `b_j = 4 lambda^2 L^3 (L^3 Omega - pi^2 a0^2 j^2 (4 pi j + 3 L Omega)) s_j^2
///        / (Omega (pi^2 a0^2 j^2 + L^2)^3 (pi j + L Omega)^2)`.
fn smeared_ratio_series(cavity: &CavitySpec, atom: &AtomSpec, ctl: &SeriesControl, tol: f64) -> Result<Outcome> {
    let l = cavity.length;
    let (a0, om, lam2) = (atom.a0, atom.omega, atom.lambda * atom.lambda);
    let r = atom.x / l;
    let b = cavity.boundary;
    let coef = move |t: f64, signed: bool| {
        let q = PI * PI * a0 * a0 * t * t;
        let poly = if signed {
            l.powi(3) * om - q * (4.0 * PI * t + 3.0 * l * om)
        } else {
            l.powi(3) * om + q * (4.0 * PI * t + 3.0 * l * om)
        };
        4.0 * lam2 * l.powi(3) * poly / (om * (q + l * l).powi(3) * (PI * t + l * om).powi(2))
    };
    let term = |j: u64| {
        let s = b.mode(j, r);
        coef(j as f64, true) * s * s
    };
    let env = |t: f64| coef(t, false);
    enveloped_sum(&term, &env, smeared_j_min(cavity, atom), stop_for(ctl, tol, None))
}

/// `sum_j lambda^2 f_j^2 pi j x sin(2 pi j r) / (Omega L^2 (pi j + L Omega))`.
fn smeared_position_series(cavity: &CavitySpec, atom: &AtomSpec, ctl: &SeriesControl, tol: f64) -> Result<Outcome> {
    let l = cavity.length;
    let (x, om, lam2) = (atom.x, atom.omega, atom.lambda * atom.lambda);
    let r = x / l;
    let beta = beta_param(cavity, atom);
    let coef = move |t: f64| {
        let f = 2.0 / ((t / beta).powi(2) + 1.0);
        lam2 * f * f * PI * t * x / (om * l * l * (PI * t + l * om))
    };
    oscillating_sum(&coef, r, smeared_j_min(cavity, atom), stop_for(ctl, tol, None))
}

/// Smeared atom force, any `alpha`:
/// `F = -sigma lambda^2 sum_j f_j^2 sin(2 pi j r) (alpha / (Omega L) - 1 / (pi j + L Omega))`.
fn smeared_atom_series(
    cavity: &CavitySpec,
    atom: &AtomSpec,
    alpha: f64,
    ctl: &SeriesControl,
    tol: f64,
) -> Result<Outcome> {
    let l = cavity.length;
    let (om, lam2) = (atom.omega, atom.lambda * atom.lambda);
    let r = atom.x / l;
    let beta = beta_param(cavity, atom);
    let sigma = cavity.boundary.sigma();
    let weight = move |t: f64| {
        let f = 2.0 / ((t / beta).powi(2) + 1.0);
        lam2 * f * f
    };
    let direct = move |t: f64| weight(t) / (PI * t + l * om);
    let stop = stop_for(ctl, 0.5 * tol, None);
    let j_min = smeared_j_min(cavity, atom);
    let mut out = oscillating_sum(&direct, r, j_min, stop)?.scaled(sigma);
    if alpha != 0.0 {
        let dia = oscillating_sum(&weight, r, j_min, stop)?.scaled(-sigma * alpha / (om * l));
        out = Outcome {
            value: out.value + dia.value,
            error: out.error + dia.error,
            modes: out.modes.max(dia.modes),
        };
    }
    Ok(out)
}

fn needs_fd(model: &CouplingModel) -> bool {
    model.kind == CouplingKind::SmearedDiamagnetic && model.alpha != 1.0
}

fn fd_fallback(
    cavity: &CavitySpec,
    atom: &AtomSpec,
    model: &CouplingModel,
    ctl: &SeriesControl,
    constraint: Constraint,
) -> Result<ForceResult> {
    let mut res = fd_force(cavity, atom, model, ctl, constraint)?;
    res.warnings.push(format!(
        "no analytic wall force for smeared coupling with alpha = {}; finite difference used",
        model.alpha
    ));
    Ok(res)
}

/// `-dE/dL` with `x/L` held fixed.
pub fn wall_force_fixed_ratio(
    cavity: &CavitySpec,
    atom: &AtomSpec,
    model: &CouplingModel,
    ctl: &SeriesControl,
) -> Result<ForceResult> {
    check_inputs(cavity, atom, model, ctl)?;
    if atom.lambda == 0.0 {
        return Ok(zero(Constraint::FixedRatio));
    }
    if needs_fd(model) {
        return fd_fallback(cavity, atom, model, ctl, Constraint::FixedRatio);
    }
    let tol = force_tol(ctl, atom, cavity);
    let out = ratio_outcome(cavity, atom, model, ctl, tol)?;
    let mut res = ForceResult::analytic(out, Constraint::FixedRatio);
    res.derived_extension = cavity.boundary == Boundary::Neumann;
    Ok(res)
}

fn ratio_outcome(
    cavity: &CavitySpec,
    atom: &AtomSpec,
    model: &CouplingModel,
    ctl: &SeriesControl,
    tol: f64,
) -> Result<Outcome> {
    match model.kind {
        CouplingKind::BarePoint => {
            // lambda^2 sum s_j^2 / (pi j + L Omega)^2
            let pre = atom.lambda * atom.lambda / (PI * PI);
            let out = bare_sum(
                Kernel::InvJc2(c_param(cavity, atom)),
                Pattern::Square(cavity.boundary),
                atom.x / cavity.length,
                stop_for(ctl, tol / pre, None),
                ctl.tail_for(model),
            )?;
            Ok(out.scaled(pre))
        }
        CouplingKind::SmearedDiamagnetic => smeared_ratio_series(cavity, atom, ctl, tol),
    }
}

/// `-dE/dL` with `x` held fixed: the force on the wall at `L`.
pub fn wall_force_fixed_position(
    cavity: &CavitySpec,
    atom: &AtomSpec,
    model: &CouplingModel,
    ctl: &SeriesControl,
) -> Result<ForceResult> {
    fixed_position_impl(cavity, atom, model, ctl, 1.0)
}

/// Fixed-position force with the sign of the second series multiplied by
/// `flip`. Only the validation suite uses `flip = -1`, to check that the
/// finite-difference comparison catches a wrong sign.
pub(crate) fn fixed_position_impl(
    cavity: &CavitySpec,
    atom: &AtomSpec,
    model: &CouplingModel,
    ctl: &SeriesControl,
    flip: f64,
) -> Result<ForceResult> {
    check_inputs(cavity, atom, model, ctl)?;
    if atom.lambda == 0.0 {
        return Ok(zero(Constraint::FixedPosition));
    }
    if needs_fd(model) {
        return fd_fallback(cavity, atom, model, ctl, Constraint::FixedPosition);
    }
    let tol = force_tol(ctl, atom, cavity);
    let ratio = ratio_outcome(cavity, atom, model, ctl, 0.5 * tol)?;
    let sigma = cavity.boundary.sigma();
    let r = atom.x / cavity.length;
    let second = match model.kind {
        CouplingKind::BarePoint => {
            // F_x = F_{x/L} - sigma sum lambda^2 x sin(2 pi j r) / ((pi j + L Omega) L)
            let pre = atom.lambda * atom.lambda * r / PI;
            if pre == 0.0 {
                Outcome::zero()
            } else {
                bare_sin_sum(cavity, atom, ctl, 0.5 * tol / pre)?.scaled(-sigma * pre)
            }
        }
        CouplingKind::SmearedDiamagnetic => {
            // F_x = F_{x/L} + sigma sum lambda^2 f_j^2 pi j x sin(2 pi j r) / (Omega L^2 (pi j + L Omega))
            smeared_position_series(cavity, atom, ctl, 0.5 * tol)?.scaled(sigma)
        }
    };
    let out = Outcome {
        value: ratio.value + flip * second.value,
        error: ratio.error + second.error,
        modes: ratio.modes.max(second.modes),
    };
    let mut res = ForceResult::analytic(out, Constraint::FixedPosition);
    res.derived_extension = cavity.boundary == Boundary::Neumann;
    Ok(res)
}

/// `-dE/dx`, the force on the atom.
pub fn atom_force(
    cavity: &CavitySpec,
    atom: &AtomSpec,
    model: &CouplingModel,
    ctl: &SeriesControl,
) -> Result<ForceResult> {
    check_inputs(cavity, atom, model, ctl)?;
    if atom.lambda == 0.0 {
        return Ok(zero(Constraint::AtomPosition));
    }
    let tol = force_tol(ctl, atom, cavity);
    let out = match model.kind {
        CouplingKind::BarePoint => {
            // (sigma lambda^2 / pi) sum sin(2 pi j r) / (j + c)
            let pre = cavity.boundary.sigma() * atom.lambda * atom.lambda / PI;
            bare_sin_sum(cavity, atom, ctl, tol / pre.abs())?.scaled(pre)
        }
        CouplingKind::SmearedDiamagnetic => smeared_atom_series(cavity, atom, model.alpha, ctl, tol)?,
    };
    Ok(ForceResult::analytic(out, Constraint::AtomPosition))
}

/// Analytic force for any constraint.
pub fn force(
    cavity: &CavitySpec,
    atom: &AtomSpec,
    model: &CouplingModel,
    ctl: &SeriesControl,
    constraint: Constraint,
) -> Result<ForceResult> {
    match constraint {
        Constraint::FixedRatio => wall_force_fixed_ratio(cavity, atom, model, ctl),
        Constraint::FixedPosition => wall_force_fixed_position(cavity, atom, model, ctl),
        Constraint::AtomPosition => atom_force(cavity, atom, model, ctl),
    }
}

/// Fourth-order central difference `f'(0)` from `f(+-h)`, `f(+-2h)`.
fn stencil(f: &dyn Fn(f64) -> Result<f64>, h: f64) -> Result<f64> {
    let (m2, m1, p1, p2) = (f(-2.0 * h)?, f(-h)?, f(h)?, f(2.0 * h)?);
    Ok((m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h))
}

/// Derivative by a fourth-order central stencil at steps `h` and `2h`; the
/// error estimate is their difference plus a rounding term.
pub(crate) fn fd_derivative(f: &dyn Fn(f64) -> Result<f64>, h: f64, scale: f64) -> Result<(f64, f64)> {
    let d1 = stencil(f, h)?;
    let d2 = stencil(f, 2.0 * h)?;
    let rounding = 4.0 * f64::EPSILON * scale / h;
    Ok((d1, (d1 - d2).abs() + rounding))
}

/// The energy as a function of position, continued evenly through the
/// walls (mode functions squared are even about 0 and L).
fn reflect(x: f64, l: f64) -> f64 {
    if x < 0.0 {
        -x
    } else if x > l {
        2.0 * l - x
    } else {
        x
    }
}

/// Whether the widest stencil of [`fd_force`] puts the atom outside the
/// cavity, where the energy has a kink.
fn stencil_crosses_wall(cavity: &CavitySpec, atom: &AtomSpec, constraint: Constraint) -> bool {
    let reach = 4.0 * FD_STEP * cavity.length;
    match constraint {
        Constraint::FixedRatio => false,
        Constraint::FixedPosition => atom.x > cavity.length - reach,
        Constraint::AtomPosition => atom.x < reach || atom.x > cavity.length - reach,
    }
}

/// Force as the finite difference of [`energy_series`] under `constraint`.
///
/// Every stencil point sums the same number of modes, the cutoff chosen
/// by an adaptive evaluation at the centre.
pub fn fd_force(
    cavity: &CavitySpec,
    atom: &AtomSpec,
    model: &CouplingModel,
    ctl: &SeriesControl,
    constraint: Constraint,
) -> Result<ForceResult> {
    check_inputs(cavity, atom, model, ctl)?;
    let (centre, parts) = energy_series(cavity, atom, model, ctl)?;
    let n = Some(centre.modes_used);
    let l = cavity.length;
    let h = FD_STEP * l;
    let energy = |cav: CavitySpec, x: f64| -> Result<f64> {
        Ok(energy_series_at(&cav, &atom.at(x), model, ctl, n)?.0.value)
    };
    let r = atom.x / l;
    // the smeared total cancels between two much larger pieces
    let scale = centre.value.abs() + parts.e1_phi2.abs() + parts.e2_udw.abs();
    let (d, err) = match constraint {
        Constraint::FixedRatio => {
            let f = |dl: f64| energy(cavity.with_length(l + dl), r * (l + dl));
            fd_derivative(&f, h, scale)?
        }
        Constraint::FixedPosition => {
            let f = |dl: f64| {
                let cav = cavity.with_length(l + dl);
                energy(cav, reflect(atom.x, l + dl))
            };
            fd_derivative(&f, h, scale)?
        }
        Constraint::AtomPosition => {
            let f = |dx: f64| energy(*cavity, reflect(atom.x + dx, l));
            fd_derivative(&f, h, scale)?
        }
    };
    let mut warnings = centre.warnings;
    if stencil_crosses_wall(cavity, atom, constraint) {
        warnings.push("finite-difference stencil reaches past a wall; the energy is continued evenly".into());
    }
    Ok(ForceResult {
        value: -d,
        // the truncated sum is smooth in L and x; its remainder varies on
        // the scale of the cavity, so its derivative is of order bound / L
        error_bound: err + 8.0 * centre.error_bound / l,
        constraint,
        method: ForceMethod::Fd,
        modes_used: centre.modes_used,
        suspect: false,
        derived_extension: constraint != Constraint::AtomPosition && cavity.boundary == Boundary::Neumann,
        analytic_value: None,
        fd_value: Some(-d),
        warnings,
    })
}

/// Analytic force cross-checked against [`fd_force`]. On disagreement the
/// finite difference becomes the reported value and the result is marked
/// `suspect`; both numbers are kept. Within the stencil width of a wall the
/// check is skipped with a warning.
pub fn force_checked(
    cavity: &CavitySpec,
    atom: &AtomSpec,
    model: &CouplingModel,
    ctl: &SeriesControl,
    constraint: Constraint,
) -> Result<ForceResult> {
    let mut analytic = force(cavity, atom, model, ctl, constraint)?;
    if analytic.method == ForceMethod::Fd {
        return Ok(analytic);
    }
    if stencil_crosses_wall(cavity, atom, constraint) {
        analytic
            .warnings
            .push("no finite-difference check this close to the wall".into());
        return Ok(analytic);
    }
    let fd = fd_force(cavity, atom, model, ctl, constraint)?;
    Ok(reconcile(analytic, fd))
}

pub(crate) fn reconcile(analytic: ForceResult, fd: ForceResult) -> ForceResult {
    let diff = (analytic.value - fd.value).abs();
    let allowed = FD_AGREEMENT * fd.value.abs().max(analytic.value.abs()) + fd.error_bound + analytic.error_bound;
    let mut out = analytic.clone();
    out.fd_value = Some(fd.value);
    out.analytic_value = Some(analytic.value);
    if diff > allowed {
        out.suspect = true;
        out.value = fd.value;
        out.error_bound = fd.error_bound;
        out.method = ForceMethod::Fd;
        out.warnings.push(format!(
            "analytic series {:.6e} disagrees with finite difference {:.6e}",
            analytic.value, fd.value
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSweep {
    pub points: Vec<(f64, ForceResult)>,
    /// First sign change of the force along the sweep, by linear
    /// interpolation between the bracketing grid points.
    pub alpha_star: Option<f64>,
}

/// Atom force of the smeared model for each `alpha`.
pub fn alpha_sweep(cavity: &CavitySpec, atom: &AtomSpec, ctl: &SeriesControl, alphas: &[f64]) -> Result<AlphaSweep> {
    if alphas.is_empty() {
        return Err(Error::invalid("alpha sweep needs at least one alpha"));
    }
    if !(atom.a0 > 0.0) {
        return Err(Error::domain("alpha sweep needs a0 > 0"));
    }
    let points = alphas
        .iter()
        .map(|&a| Ok((a, atom_force(cavity, atom, &CouplingModel::smeared(a), ctl)?)))
        .collect::<Result<Vec<_>>>()?;
    let alpha_star = points.windows(2).find_map(|w| {
        let ((a0, f0), (a1, f1)) = (&w[0], &w[1]);
        let (f0, f1) = (f0.value, f1.value);
        if f0 == 0.0 {
            Some(*a0)
        } else if f0.signum() != f1.signum() && f1 != 0.0 {
            Some(a0 + (a1 - a0) * f0 / (f0 - f1))
        } else {
            None
        }
    });
    Ok(AlphaSweep { points, alpha_star })
}

/// Zero of the atom force in `alpha` by bisection on `[lo, hi]`.
pub fn alpha_star_bisect(
    cavity: &CavitySpec,
    atom: &AtomSpec,
    ctl: &SeriesControl,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    let f = |a: f64| -> Result<f64> { Ok(atom_force(cavity, atom, &CouplingModel::smeared(a), ctl)?.value) };
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a)?, f(b)?);
    if fa.signum() == fb.signum() {
        return Err(Error::domain("atom force has the same sign at both ends"));
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}
