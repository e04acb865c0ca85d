//! Second-order energy shifts: mode sums and closed forms.
//!
//! With `c = L Omega / pi`, `r = x/L` and `s_j = sin(pi j r)` (Dirichlet) or
//! `cos(pi j r)` (Neumann):
//!
//! * bare point coupling: `E = -(lambda^2 L / pi^2) sum_j s_j^2 / (j (j + c))`
//! * smeared coupling: `e2 = -lambda^2 sum_j f_j^2 s_j^2 / ((omega_j + Omega) omega_j L)`,
//!   `e1 = lambda^2 sum_j f_j^2 s_j^2 / (Omega omega_j L)`, `E = e2 + alpha e1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::model::{
    AtomSpec, Boundary, CavitySpec, CouplingKind, CouplingModel, EnergyPath, EnergyResult,
    SeriesControl, TailPolicy,
};
use crate::series::{bare_sum, enveloped_sum, Kernel, Pattern, Stop};
use crate::specfun::{
    gauss_2f1, gen_harmonic, inc_beta, lerch_phi, polygamma, SeriesAccuracy, SeriesValue,
};
use crate::sum::{cospi, sinpi, NeumaierC};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// Paramagnetic (linear coupling) piece.
    pub e2_udw: f64,
    /// Diamagnetic (`phi^2`) piece before weighting by `alpha`.
    pub e1_phi2: f64,
    pub total: f64,
}

/// Per-mode pieces of the smeared energy: `(e2_j, e1_j, combined_j)` where
/// `combined_j = lambda^2 f_j^2 s_j^2 / (Omega L (Omega + omega_j))` is the
/// `alpha = 1` sum written as one fraction.
pub fn smeared_terms(j: u64, cavity: &CavitySpec, atom: &AtomSpec) -> (f64, f64, f64) {
    let l = cavity.length;
    let r = atom.x / l;
    let s = cavity.boundary.mode(j, r);
    let fw = crate::model::mode_weight(j, l, atom.a0);
    let w = cavity.omega(j);
    let k = atom.lambda * atom.lambda * fw * fw * s * s;
    (
        -k / ((w + atom.omega) * w * l),
        k / (atom.omega * w * l),
        k / (atom.omega * l * (atom.omega + w)),
    )
}

pub(crate) fn c_param(cavity: &CavitySpec, atom: &AtomSpec) -> f64 {
    cavity.length * atom.omega / PI
}

/// `beta = L / (pi a0)`, the mode number where the smearing sets in.
pub(crate) fn beta_param(cavity: &CavitySpec, atom: &AtomSpec) -> f64 {
    cavity.length / (PI * atom.a0)
}

/// Smallest cutoff at which smeared envelopes are monotone and smooth enough
/// for the quadrature bound.
pub(crate) fn smeared_j_min(cavity: &CavitySpec, atom: &AtomSpec) -> f64 {
    (4.0 * beta_param(cavity, atom)).max(64.0 + 4.0 * c_param(cavity, atom))
}

pub(crate) fn stop_for(ctl: &SeriesControl, abs_tol: f64, fixed: Option<u64>) -> Stop {
    match fixed {
        Some(n) => Stop::Fixed(n),
        None => Stop::Adaptive {
            abs_tol,
            rel_tol: ctl.rel_tol,
            max_modes: ctl.max_modes,
        },
    }
}

fn smeared_warning(ctl: &SeriesControl) -> Vec<String> {
    if ctl.tail_policy == Some(TailPolicy::AveragedTail) {
        vec!["averaged tail is only available for bare sums; used the integral bound".into()]
    } else {
        Vec::new()
    }
}

/// Energy shift by direct mode summation.
pub fn energy_series(
    cavity: &CavitySpec,
    atom: &AtomSpec,
    model: &CouplingModel,
    ctl: &SeriesControl,
) -> Result<(EnergyResult, EnergyBreakdown)> {
    energy_series_at(cavity, atom, model, ctl, None)
}

/// As [`energy_series`], optionally with a fixed mode cutoff.
pub(crate) fn energy_series_at(
    cavity: &CavitySpec,
    atom: &AtomSpec,
    model: &CouplingModel,
    ctl: &SeriesControl,
    fixed: Option<u64>,
) -> Result<(EnergyResult, EnergyBreakdown)> {
    atom.check(cavity)?;
    model.check(atom)?;
    ctl.check()?;
    let abs_tol = ctl.abs_tol_for(atom.lambda);
    let lam2 = atom.lambda * atom.lambda;
    let l = cavity.length;
    let r = atom.x / l;
    if lam2 == 0.0 {
        let res = EnergyResult {
            value: 0.0,
            error_bound: 0.0,
            modes_used: 0,
            path: EnergyPath::Series,
            warnings: Vec::new(),
        };
        let zero = EnergyBreakdown {
            e2_udw: 0.0,
            e1_phi2: 0.0,
            total: 0.0,
        };
        return Ok((res, zero));
    }

    match model.kind {
        CouplingKind::BarePoint => {
            let pre = -lam2 * l / (PI * PI);
            let stop = stop_for(ctl, abs_tol / pre.abs(), fixed);
            let out = bare_sum(
                Kernel::InvJJc(c_param(cavity, atom)),
                Pattern::Square(cavity.boundary),
                r,
                stop,
                ctl.tail_for(model),
            )?
            .scaled(pre);
            let res = EnergyResult {
                value: out.value,
                error_bound: out.error,
                modes_used: out.modes,
                path: EnergyPath::Series,
                warnings: Vec::new(),
            };
            let bd = EnergyBreakdown {
                e2_udw: out.value,
                e1_phi2: 0.0,
                total: out.value,
            };
            Ok((res, bd))
        }
        CouplingKind::SmearedDiamagnetic => {
            let alpha = model.alpha;
            let beta = beta_param(cavity, atom);
            let om = atom.omega;
            let term = |j: u64| {
                let (e2, e1, comb) = smeared_terms(j, cavity, atom);
                if alpha == 1.0 {
                    comb
                } else {
                    e2 + alpha * e1
                }
            };
            let weight2 = move |t: f64| {
                let f = 2.0 / ((t / beta).powi(2) + 1.0);
                f * f
            };
            let env = |t: f64| {
                let w = PI * t / l;
                let k = lam2 * weight2(t);
                if alpha == 1.0 {
                    k / (om * l * (om + w))
                } else {
                    k / ((w + om) * w * l) + alpha * k / (om * w * l)
                }
            };
            let stop = stop_for(ctl, abs_tol, fixed);
            let j_min = smeared_j_min(cavity, atom);
            let total = enveloped_sum(&term, &env, j_min, stop)?;
            let n = Stop::Fixed(total.modes);
            let e2 = enveloped_sum(&|j| smeared_terms(j, cavity, atom).0, &env, j_min, n)?;
            let e1 = enveloped_sum(&|j| smeared_terms(j, cavity, atom).1, &env, j_min, n)?;
            let res = EnergyResult {
                value: total.value,
                error_bound: total.error,
                modes_used: total.modes,
                path: EnergyPath::Series,
                warnings: smeared_warning(ctl),
            };
            let bd = EnergyBreakdown {
                e2_udw: e2.value,
                e1_phi2: e1.value,
                total: total.value,
            };
            Ok((res, bd))
        }
    }
}

/// Accumulates `coef * value` pieces of a closed form with their errors.
struct Assembly {
    sum: NeumaierC,
    err: f64,
    scale: f64,
}

impl Assembly {
    fn new() -> Self {
        Self {
            sum: NeumaierC::new(),
            err: 0.0,
            scale: 0.0,
        }
    }

    fn add(&mut self, coef: Complex64, v: SeriesValue) {
        let t = coef * v.value;
        self.sum.add(t);
        self.err += coef.norm() * v.error;
        self.scale += t.norm();
    }

    fn add_exact(&mut self, t: Complex64) {
        self.sum.add(t);
        self.scale += t.norm();
    }

    fn finish(&self) -> (Complex64, f64) {
        (
            self.sum.value(),
            self.err + 8.0 * f64::EPSILON * self.scale,
        )
    }
}

fn real_part(v: Complex64, err: f64, modes: u64) -> Result<EnergyResult> {
    if !(v.im.abs() < 1e-9 * v.re.abs() + 1e-14) {
        return Err(Error::ImaginaryResidue {
            real: v.re,
            imag: v.im,
        });
    }
    Ok(EnergyResult {
        value: v.re,
        error_bound: err,
        modes_used: modes,
        path: EnergyPath::ClosedForm,
        warnings: Vec::new(),
    })
}

fn closed_form_accuracy() -> SeriesAccuracy {
    SeriesAccuracy::with_tol(1e-15)
}

fn unit(r: f64) -> (Complex64, Complex64) {
    let z = Complex64::new(cospi(2.0 * r), sinpi(2.0 * r));
    (z, z.conj())
}

/// Which printed variant of the bare Neumann closed form to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum NeumannSign {
    Corrected,
    AsPrinted,
}

fn bare_closed_raw(
    cavity: &CavitySpec,
    atom: &AtomSpec,
    neumann: Option<NeumannSign>,
) -> Result<(Complex64, f64, u64)> {
    let l = cavity.length;
    let r = atom.x / l;
    let c = c_param(cavity, atom);
    let acc = closed_form_accuracy();
    let (z, zb) = unit(r);
    let h = gen_harmonic(c)?;
    let a = lerch_phi(z, 1.0, Complex64::new(c + 1.0, 0.0), &acc)?;
    let b = lerch_phi(zb, 1.0, Complex64::new(c + 1.0, 0.0), &acc)?;
    // log(2 - 2 cos(2 pi r)) = 2 log(2 |sin(pi r)|)
    let lg = 2.0 * (2.0 * sinpi(r).abs()).ln();
    let (sa, sb, sl) = match neumann {
        None => (1.0, 1.0, 1.0),
        Some(NeumannSign::Corrected) => (-1.0, -1.0, -1.0),
        Some(NeumannSign::AsPrinted) => (-1.0, 1.0, -1.0),
    };
    let mut asm = Assembly::new();
    asm.add_exact(Complex64::new(2.0 * h, 0.0));
    asm.add(sa * z, a);
    asm.add(sb * zb, b);
    asm.add_exact(Complex64::new(sl * lg, 0.0));
    let pre = -atom.lambda * atom.lambda / (4.0 * PI * atom.omega);
    let (v, e) = asm.finish();
    Ok((v * pre, e * pre.abs(), (a.terms + b.terms) as u64))
}

fn bare_closed(cavity: &CavitySpec, atom: &AtomSpec, neumann: Option<NeumannSign>) -> Result<EnergyResult> {
    let (v, e, n) = bare_closed_raw(cavity, atom, neumann)?;
    real_part(v, e, n)
}

struct SmearedPieces {
    z: Complex64,
    zb: Complex64,
    ib: Complex64,
    c: f64,
    w: f64,
    acc: SeriesAccuracy,
    terms: usize,
}

impl SmearedPieces {
    fn new(cavity: &CavitySpec, atom: &AtomSpec) -> Self {
        let (z, zb) = unit(atom.x / cavity.length);
        Self {
            z,
            zb,
            ib: Complex64::new(0.0, beta_param(cavity, atom)),
            c: c_param(cavity, atom),
            w: atom.a0 * atom.omega,
            acc: closed_form_accuracy(),
            terms: 0,
        }
    }

    fn f2(&mut self, b: Complex64, arg: Complex64) -> Result<SeriesValue> {
        let v = gauss_2f1(Complex64::new(1.0, 0.0), b, b + 1.0, arg, &self.acc)?;
        self.terms += v.terms;
        Ok(v)
    }

    fn phi2(&mut self, arg: Complex64, a: Complex64) -> Result<SeriesValue> {
        let v = lerch_phi(arg, 2.0, a, &self.acc)?;
        self.terms += v.terms;
        Ok(v)
    }

    fn beta_fn(&mut self) -> Result<SeriesValue> {
        let v = inc_beta(
            self.z,
            Complex64::new(self.c + 1.0, 0.0),
            Complex64::new(0.0, 0.0),
            &self.acc,
        )?;
        self.terms += v.terms;
        Ok(v)
    }

    /// `z^p` on the principal branch.
    fn zpow(&self, p: f64) -> Complex64 {
        (self.z.ln() * p).exp()
    }
}

fn psi(n: u32, z: Complex64) -> Result<SeriesValue> {
    Ok(SeriesValue {
        value: polygamma(n, z)?,
        error: 1e-15 * (1.0 + z.norm().ln().abs()),
        terms: 1,
    })
}

fn smeared_dirichlet_closed(cavity: &CavitySpec, atom: &AtomSpec) -> Result<EnergyResult> {
    let l = cavity.length;
    let a0 = atom.a0;
    let om = atom.omega;
    let i = Complex64::new(0.0, 1.0);
    let one = Complex64::new(1.0, 0.0);
    let mut p = SmearedPieces::new(cavity, atom);
    let (z, zb, ib, c) = (p.z, p.zb, p.ib, p.c);
    let w = Complex64::new(p.w, 0.0);
    let d = (p.w * p.w + 1.0).powi(2);

    let mut asm = Assembly::new();
    // pi^2 / ((w^2+1)^2 z) * inner
    let outer = Complex64::new(PI * PI / d, 0.0) / z;
    let k1 = a0 * (w + i).powu(2) * (w - 2.0 * i) / Complex64::new(-l, PI * a0);
    let k2 = -a0 * (w - i).powu(2) * (w + 2.0 * i) / Complex64::new(l, PI * a0);
    let f1b = p.f2(ib + 1.0, zb)?;
    let f1z = p.f2(ib + 1.0, z)?;
    let f2b = p.f2(one - ib, zb)?;
    let f2z = p.f2(one - ib, z)?;
    let f3b = p.f2(Complex64::new(c + 1.0, 0.0), zb)?;
    let bb = p.beta_fn()?;
    asm.add(outer * k1, f1b);
    asm.add(outer * k1 * z * z, f1z);
    asm.add(outer * k2, f2b);
    asm.add(outer * k2 * z * z, f2z);
    asm.add(outer * (-4.0 / (l * om + PI)), f3b);
    asm.add(outer * (-4.0 / PI) * p.zpow(1.0 - c), bb);

    asm.add(Complex64::new(-8.0 * PI / d, 0.0), psi(0, Complex64::new(c + 1.0, 0.0))?);
    let wm = w - i;
    let wp = w + i;
    let l1 = p.phi2(zb, ib + 1.0)?;
    let l2 = p.phi2(zb, one - ib)?;
    let l3 = p.phi2(z, ib + 1.0)?;
    let l4 = p.phi2(z, one - ib)?;
    asm.add(l / (a0 * wm * z), l1);
    asm.add(l / (a0 * wp * z), l2);
    asm.add(l * z / (a0 * wm), l3);
    asm.add(l * z / (a0 * wp), l4);
    asm.add(PI * (-4.0 - 2.0 * i * w) / (wm * wm), psi(0, ib + 1.0)?);
    asm.add(2.0 * i * PI * (w + 2.0 * i) / (wp * wp), psi(0, one - ib)?);
    asm.add(-2.0 * l / (a0 * wm), psi(1, ib + 1.0)?);
    asm.add(-2.0 * l / (a0 * wp), psi(1, one - ib)?);

    let pre = atom.lambda * atom.lambda / (4.0 * PI * PI * om);
    let (v, e) = asm.finish();
    real_part(v * pre, e * pre, p.terms as u64)
}

fn smeared_neumann_closed(cavity: &CavitySpec, atom: &AtomSpec) -> Result<EnergyResult> {
    let l = cavity.length;
    let a0 = atom.a0;
    let om = atom.omega;
    let i = Complex64::new(0.0, 1.0);
    let one = Complex64::new(1.0, 0.0);
    let mut p = SmearedPieces::new(cavity, atom);
    let (z, zb, ib, c) = (p.z, p.zb, p.ib, p.c);
    let w = Complex64::new(p.w, 0.0);
    let wp = w + i;
    let wm = w - i;

    // everything inside the big bracket is multiplied by z
    let mut asm = Assembly::new();
    asm.add(z * (-2.0 * i * PI * a0) * (w.powu(3) + 3.0 * w + 2.0 * i), psi(0, ib + 1.0)?);
    asm.add(z * 2.0 * PI * a0 * (2.0 + i * w * (w * w + 3.0)), psi(0, one - ib)?);
    asm.add(z * (-l) * wp * wm * wm * z, p.phi2(z, one - ib)?);
    asm.add(z * (-l) * wp * wp * wm * z, p.phi2(z, ib + 1.0)?);

    let inner = Complex64::new(PI * PI * a0, 0.0) / z;
    let k1 = a0 * (2.0 + i * w) * wp * wp / Complex64::new(PI * a0, l);
    let k2 = a0 * wm * wm * (w + 2.0 * i) / Complex64::new(l, PI * a0);
    let f1b = p.f2(ib + 1.0, zb)?;
    let f1z = p.f2(ib + 1.0, z)?;
    let f2b = p.f2(one - ib, zb)?;
    let f2z = p.f2(one - ib, z)?;
    let f3b = p.f2(Complex64::new(c + 1.0, 0.0), zb)?;
    asm.add(z * inner * k1, f1b);
    asm.add(z * inner * k1 * z * z, f1z);
    asm.add(z * inner * k2, f2b);
    asm.add(z * inner * k2 * z * z, f2z);
    asm.add(z * inner * (4.0 / (l * om + PI)), f3b);
    let bb = p.beta_fn()?;
    asm.add(z * 4.0 * PI * a0 * p.zpow(-c), bb);
    asm.add(z * (-2.0 * l) * wp * wm * wm, psi(1, one - ib)?);
    asm.add(z * (-2.0 * l) * wp * wp * wm, psi(1, ib + 1.0)?);
    asm.add(z * (-8.0 * PI * a0), psi(0, Complex64::new(c + 1.0, 0.0))?);

    asm.add(-l * wp * wm * wm, p.phi2(zb, one - ib)?);
    asm.add(-l * wp * wp * wm, p.phi2(zb, ib + 1.0)?);

    let d = PI * a0 * a0 * om * om + PI;
    let pre = Complex64::new(atom.lambda * atom.lambda / (4.0 * a0 * om * d * d), 0.0) / z;
    let (v, e) = asm.finish();
    real_part(v * pre, e * pre.norm(), p.terms as u64)
}

/// Energy shift from the closed-form special-function expressions.
///
/// Available for the bare coupling (both boundaries) and for the smeared
/// coupling at `alpha = 1`. Walls are excluded: the expressions are
/// singular there even though the energy is finite.
pub fn energy_closed_form(
    cavity: &CavitySpec,
    atom: &AtomSpec,
    model: &CouplingModel,
) -> Result<EnergyResult> {
    atom.check(cavity)?;
    model.check(atom)?;
    let r = atom.x / cavity.length;
    if r == 0.0 || r == 1.0 {
        return Err(Error::domain("closed forms are singular at the walls"));
    }
    match (model.kind, cavity.boundary) {
        (CouplingKind::BarePoint, Boundary::Dirichlet) => bare_closed(cavity, atom, None),
        (CouplingKind::BarePoint, Boundary::Neumann) => {
            bare_closed(cavity, atom, Some(NeumannSign::Corrected))
        }
        (CouplingKind::SmearedDiamagnetic, b) => {
            if model.alpha != 1.0 {
                return Err(Error::domain(
                    "smeared closed forms exist only for alpha = 1; use the series",
                ));
            }
            match b {
                Boundary::Dirichlet => smeared_dirichlet_closed(cavity, atom),
                Boundary::Neumann => smeared_neumann_closed(cavity, atom),
            }
        }
    }
}

/// The bare Neumann closed form with the sign pattern
/// `2H - z Phi(z) + conj(z) Phi(conj z) - log(...)` found in the literature.
/// It disagrees with the mode sum; [`energy_closed_form`] uses
/// `2H - z Phi(z) - conj(z) Phi(conj z) - log(...)`. Returned without the
/// realness check so the discrepancy can be reported.
pub fn neumann_bare_closed_form_as_printed(cavity: &CavitySpec, atom: &AtomSpec) -> Result<Complex64> {
    atom.check(cavity)?;
    let r = atom.x / cavity.length;
    if r == 0.0 || r == 1.0 {
        return Err(Error::domain("closed forms are singular at the walls"));
    }
    Ok(bare_closed_raw(cavity, atom, Some(NeumannSign::AsPrinted))?.0)
}

/// `E_D(x) + E_N(x)` from the mode sums.
pub fn boundary_sum_rule(
    cavity_d: &CavitySpec,
    cavity_n: &CavitySpec,
    atom: &AtomSpec,
    model: &CouplingModel,
    ctl: &SeriesControl,
) -> Result<f64> {
    if cavity_d.boundary != Boundary::Dirichlet || cavity_n.boundary != Boundary::Neumann {
        return Err(Error::invalid("sum rule needs one Dirichlet and one Neumann cavity"));
    }
    if cavity_d.length != cavity_n.length {
        return Err(Error::invalid("sum rule needs equal cavity lengths"));
    }
    let (ed, _) = energy_series(cavity_d, atom, model, ctl)?;
    let (en, _) = energy_series(cavity_n, atom, model, ctl)?;
    Ok(ed.value + en.value)
}

/// The position-independent value of [`boundary_sum_rule`]: the mode sum
/// with `s_j^2` replaced by one. For the bare coupling this is
/// `-lambda^2 H(L Omega / pi) / (pi Omega)`.
pub fn sum_rule_value(
    cavity: &CavitySpec,
    atom: &AtomSpec,
    model: &CouplingModel,
    ctl: &SeriesControl,
) -> Result<f64> {
    atom.check(cavity)?;
    model.check(atom)?;
    let lam2 = atom.lambda * atom.lambda;
    match model.kind {
        CouplingKind::BarePoint => {
            Ok(-lam2 * gen_harmonic(c_param(cavity, atom))? / (PI * atom.omega))
        }
        CouplingKind::SmearedDiamagnetic => {
            // any position with s^2 = 1 for Neumann: the wall
            let wall = atom.at(0.0);
            let neumann = CavitySpec::neumann(cavity.length);
            let (e, _) = energy_series(&neumann, &wall, model, ctl)?;
            Ok(e.value)
        }
    }
}
