//! Uniform placements `x_n = L n / M`, `n = 1..M-1`, summed over atoms in
//! closed form.
//!
//! Two lattice identities do the work. For `M` not dividing `j`,
//! `sum_n sin^2(pi j n / M) = M/2` and `sum_n (n/M) sin(2 pi j n / M) = -cot(pi j / M) / 2`;
//! when `M | j` the first is 0 and the second vanishes. With cosines the
//! first becomes `M/2 - 1 + (M/2) [M | j]`.
//!
//! For even `M` the sites on one side of the middle are a half-cavity row.
//! Mirror symmetry gives their `s_j^2` sum as half of the full lattice minus
//! the middle atom. Their position-weighted sine sum is
//! `cot(pi j / M) / 4` (odd `j`) or `-cot(pi j / M) / 4` (even `j`) on the left,
//! and `-3 cot / 4` or `-cot / 4` on the right.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::energy::{beta_param, c_param, smeared_j_min, stop_for};
use crate::model::{AtomSpec, Boundary, CavitySpec, SeriesControl};
use crate::series::{enveloped_sum, Kernel, Outcome, Stop};
use crate::specfun::polygamma;
use crate::sum::{cotpi_ratio, Neumaier};
use crate::{Error, Result};

/// Largest `M` for which the cotangent sum is evaluated exactly.
pub(crate) const EXACT_COT_MAX: u64 = 1 << 20;

/// Which sites `n = 1..M-1` of the lattice carry atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Sites {
    All,
    /// `n < M/2`, for even `M`.
    Left,
    /// `n > M/2`, for even `M`.
    Right,
}

impl Sites {
    /// `(s, w_odd, w_even)`: the position-weighted sine sum over the sites is
    /// `s w_j cot(pi j / M)`.
    fn position_weights(self) -> (f64, f64, f64) {
        match self {
            Sites::All => (-0.5, 1.0, 1.0),
            Sites::Left => (0.25, 1.0, -1.0),
            Sites::Right => (-0.25, 3.0, 1.0),
        }
    }
}

fn psi(n: u32, x: f64) -> Result<f64> {
    Ok(polygamma(n, Complex64::new(x, 0.0))?.re)
}

/// `sum_n s_j(r_n)^2 ... ` folded against mode coefficients: given
/// `all = sum_j a_j` and `every_m = sum_k a_{kM}`, returns `sum_j a_j sum_n s_j(r_n)^2`.
fn fold(boundary: Boundary, m: u64, all: f64, every_m: f64) -> f64 {
    let half = 0.5 * m as f64;
    match boundary {
        Boundary::Dirichlet => half * (all - every_m),
        Boundary::Neumann => (half - 1.0) * all + half * every_m,
    }
}

/// Rounding slack on [`fold`].
fn fold_error(m: u64, all: f64, every_m: f64, err_all: f64, err_m: f64) -> f64 {
    let half = 0.5 * m as f64;
    half * (err_all + err_m) + 8.0 * f64::EPSILON * half * (all.abs() + every_m.abs())
}

/// A mode sum `sum_j a_j` with its `every M` and `every 2` parts.
#[derive(Clone, Copy)]
struct Parts {
    all: f64,
    every_m: f64,
    every_2: f64,
    err_all: f64,
    err_m: f64,
    err_2: f64,
}

/// [`fold`] over the chosen sites; one side is half of the full lattice
/// without its middle atom.
fn fold_sites(boundary: Boundary, m: u64, sites: Sites, p: Parts) -> (f64, f64) {
    let full = fold(boundary, m, p.all, p.every_m);
    let full_err = fold_error(m, p.all, p.every_m, p.err_all, p.err_m);
    if sites == Sites::All {
        return (full, full_err);
    }
    let mid = fold(boundary, 2, p.all, p.every_2);
    let mid_err = fold_error(2, p.all, p.every_2, p.err_all, p.err_2);
    (0.5 * (full - mid), 0.5 * (full_err + mid_err) + 4.0 * f64::EPSILON * (full.abs() + mid.abs()))
}

/// `T(M) = sum_{j >= 1, M does not divide j} w_j cot(pi j / M) / (j + c)`
/// with `w_j` either `w_odd` or `w_even`. Unequal weights need an even `M`
/// no larger than [`EXACT_COT_MAX`].
pub(crate) fn cot_harmonic(m: u64, c: f64, w_odd: f64, w_even: f64) -> Result<(f64, f64)> {
    if m < 2 {
        return Ok((0.0, 0.0));
    }
    let mf = m as f64;
    let parity = w_odd != w_even;
    if parity && (m % 2 == 1 || m > EXACT_COT_MAX) {
        return Err(Error::invalid(format!("parity-weighted cotangent sum needs an even M up to {EXACT_COT_MAX}, not {m}")));
    }
    if m <= EXACT_COT_MAX {
        // pair r with M - r; cot changes sign
        let top = (m - 1) / 2;
        let terms: Vec<f64> = (1..=top)
            .into_par_iter()
            .map(|r| -> Result<f64> {
                let rf = r as f64;
                let d = psi(0, (rf + c) / mf)? - psi(0, (mf - rf + c) / mf)?;
                let w = if r % 2 == 1 { w_odd } else { w_even };
                Ok(w * cotpi_ratio(r, m) * d)
            })
            .collect::<Result<Vec<_>>>()?;
        let acc: Neumaier = terms.into_iter().collect();
        let value = -acc.value() / mf;
        return Ok((value, 8.0 * acc.rounding_bound() / mf));
    }
    // large M: pi (M-1)(M-2)/(6M) - (c M / pi) [zeta(2)/c - H(c)/c^2 - sum_k 1/(k^2 M^2 (k M + c))]
    let h = Kernel::InvJJc(c).tail_sum(1.0)?.ok_or_else(|| Error::domain("harmonic number"))?;
    let q = PI * PI / (6.0 * c) - h / c;
    let mut tail = Neumaier::new();
    for k in 1..=64u64 {
        let kf = k as f64;
        tail.add(1.0 / (kf * kf * mf * mf * (kf * mf + c)));
    }
    let value = PI * (mf - 1.0) * (mf - 2.0) / (6.0 * mf) - c * mf / PI * (q - tail.value());
    let bound = c * (PI / 3.0) * (mf.ln() + psi(0, 1.0 + c)?.abs() + 3.0) / mf;
    Ok((w_odd * value, w_odd.abs() * (bound + 8.0 * f64::EPSILON * value.abs())))
}

/// Bare coupling: `(sum over atoms of the wall force, error)`.
pub(crate) fn bare_wall_force(
    cavity: &CavitySpec,
    atom: &AtomSpec,
    m: u64,
    sites: Sites,
    fixed_position: bool,
) -> Result<(f64, f64)> {
    let c = c_param(cavity, atom);
    let lam2 = atom.lambda * atom.lambda;
    let mf = m as f64;
    let all = psi(1, 1.0 + c)?;
    let every_m = psi(1, 1.0 + c / mf)? / (mf * mf);
    let every_2 = psi(1, 1.0 + c / 2.0)? / 4.0;
    let eps = 4.0 * f64::EPSILON;
    let parts = Parts {
        all,
        every_m,
        every_2,
        err_all: eps * all,
        err_m: eps * every_m,
        err_2: eps * every_2,
    };
    let pre = lam2 / (PI * PI);
    let (v, e) = fold_sites(cavity.boundary, m, sites, parts);
    let (mut value, mut error) = (pre * v, pre * e);
    if fixed_position {
        let (scale, w_odd, w_even) = sites.position_weights();
        let (t, te) = cot_harmonic(m, c, w_odd, w_even)?;
        let k = -scale * cavity.boundary.sigma() * lam2 / PI;
        value += k * t;
        error += k.abs() * te;
    }
    Ok((value, error))
}

/// Bare coupling: sum over atoms of the energy shift.
pub(crate) fn bare_energy(cavity: &CavitySpec, atom: &AtomSpec, m: u64, sites: Sites) -> Result<(f64, f64)> {
    let c = c_param(cavity, atom);
    let mf = m as f64;
    let tail = |c: f64| -> Result<f64> {
        Kernel::InvJJc(c).tail_sum(1.0)?.ok_or_else(|| Error::domain("harmonic number"))
    };
    let all = tail(c)?;
    let every_m = tail(c / mf)? / (mf * mf);
    let every_2 = tail(c / 2.0)? / 4.0;
    let eps = 8.0 * f64::EPSILON;
    let parts = Parts {
        all,
        every_m,
        every_2,
        err_all: eps * all,
        err_m: eps * every_m,
        err_2: eps * every_2,
    };
    let pre = -atom.lambda * atom.lambda * cavity.length / (PI * PI);
    let (v, e) = fold_sites(cavity.boundary, m, sites, parts);
    Ok((pre * v, pre.abs() * e))
}

/// `sum_j a_j sum_n s_j(r_n)^2` for a coefficient `a` bounded by `env`.
pub(crate) fn folded_series(
    boundary: Boundary,
    m: u64,
    sites: Sites,
    a: &dyn Fn(f64) -> f64,
    env: &dyn Fn(f64) -> f64,
    j_min: f64,
    stop: Stop,
) -> Result<Outcome> {
    let every = |step: u64| {
        let sf = step as f64;
        enveloped_sum(&|k| a((k * step) as f64), &|t| env(t * sf), j_min / sf, stop)
    };
    let all = enveloped_sum(&|j| a(j as f64), env, j_min, stop)?;
    let every_m = every(m)?;
    let every_2 = if sites == Sites::All { Outcome::zero() } else { every(2)? };
    let parts = Parts {
        all: all.value,
        every_m: every_m.value,
        every_2: every_2.value,
        err_all: all.error,
        err_m: every_m.error,
        err_2: every_2.error,
    };
    let (value, error) = fold_sites(boundary, m, sites, parts);
    Ok(Outcome {
        value,
        error,
        modes: all.modes,
    })
}

/// `C = sum_{j >= 1, M does not divide j} w_j h_j cot(pi j / M)` for positive
/// `h` decreasing beyond `j_min`, with `w_j` either `w_odd` or `w_even`.
///
/// The weighted cotangents are `M`-periodic with zero sum over a period
/// (`M` is even when the weights differ), so their partial sums over any
/// run of modes stay below `max|w| (2M/pi)(1 + ln M)`. Abel summation then
/// bounds the remainder past `J` by that times `h(J + 1)`.
pub(crate) fn cot_weighted(
    h: &dyn Fn(f64) -> f64,
    m: u64,
    (w_odd, w_even): (f64, f64),
    j_min: f64,
    stop: Stop,
) -> Result<Outcome> {
    if m < 2 {
        return Ok(Outcome::zero());
    }
    if w_odd != w_even && m % 2 == 1 {
        return Err(Error::invalid("parity-weighted cotangent sum needs an even M"));
    }
    let mf = m as f64;
    let period = w_odd.abs().max(w_even.abs()) * 2.0 * mf / PI * (1.0 + mf.ln());
    let mut acc = Neumaier::new();
    let mut j = 0u64;
    let mut next = match stop {
        Stop::Fixed(n) => n,
        Stop::Adaptive { max_modes, .. } => 64u64.max(j_min.ceil() as u64).min(max_modes),
    };
    loop {
        while j < next {
            j += 1;
            if j % m != 0 {
                let w = if j % 2 == 1 { w_odd } else { w_even };
                acc.add(w * h(j as f64) * cotpi_ratio(j, m));
            }
        }
        let n = (j + 1) as f64;
        let bound = if n >= j_min {
            period * h(n)
        } else {
            f64::INFINITY
        };
        let value = acc.value();
        let out = Outcome {
            value,
            error: bound + acc.rounding_bound(),
            modes: j,
        };
        match stop {
            Stop::Fixed(_) => return Ok(out),
            Stop::Adaptive {
                abs_tol,
                rel_tol,
                max_modes,
            } => {
                let wanted = abs_tol.max(rel_tol * value.abs());
                if bound <= wanted {
                    return Ok(out);
                }
                if j >= max_modes {
                    return Err(Error::NoConvergence {
                        terms: j as usize,
                        error: bound,
                        wanted,
                    });
                }
                next = (2 * j).min(max_modes);
            }
        }
    }
}

/// Smeared coupling with `alpha = 1`: sum over atoms of the wall force.
pub(crate) fn smeared_wall_force(
    cavity: &CavitySpec,
    atom: &AtomSpec,
    m: u64,
    sites: Sites,
    fixed_position: bool,
    ctl: &SeriesControl,
    tol: f64,
) -> Result<Outcome> {
    let l = cavity.length;
    let (a0, om, lam2) = (atom.a0, atom.omega, atom.lambda * atom.lambda);
    let coef = move |t: f64, signed: bool| {
        let q = PI * PI * a0 * a0 * t * t;
        let poly = if signed {
            l.powi(3) * om - q * (4.0 * PI * t + 3.0 * l * om)
        } else {
            l.powi(3) * om + q * (4.0 * PI * t + 3.0 * l * om)
        };
        4.0 * lam2 * l.powi(3) * poly / (om * (q + l * l).powi(3) * (PI * t + l * om).powi(2))
    };
    let j_min = smeared_j_min(cavity, atom);
    let ratio = folded_series(
        cavity.boundary,
        m,
        sites,
        &|t| coef(t, true),
        &|t| coef(t, false),
        j_min,
        stop_for(ctl, 0.5 * tol, None),
    )?;
    if !fixed_position {
        return Ok(ratio);
    }
    let beta = beta_param(cavity, atom);
    let h = move |t: f64| {
        let f = 2.0 / ((t / beta).powi(2) + 1.0);
        lam2 * f * f * PI * t / (om * l * (PI * t + l * om))
    };
    let sigma = cavity.boundary.sigma();
    let (scale, w_odd, w_even) = sites.position_weights();
    let extra = cot_weighted(&h, m, (w_odd, w_even), j_min, stop_for(ctl, tol, None))?.scaled(scale * sigma);
    Ok(Outcome {
        value: ratio.value + extra.value,
        error: ratio.error + extra.error,
        modes: ratio.modes.max(extra.modes),
    })
}

/// Smeared coupling: sum over atoms of the energy shift.
pub(crate) fn smeared_energy(
    cavity: &CavitySpec,
    atom: &AtomSpec,
    alpha: f64,
    m: u64,
    sites: Sites,
    ctl: &SeriesControl,
    tol: f64,
) -> Result<Outcome> {
    let l = cavity.length;
    let (om, lam2) = (atom.omega, atom.lambda * atom.lambda);
    let beta = beta_param(cavity, atom);
    let k = move |t: f64| {
        let f = 2.0 / ((t / beta).powi(2) + 1.0);
        lam2 * f * f
    };
    let a = move |t: f64| {
        let w = PI * t / l;
        if alpha == 1.0 {
            k(t) / (om * l * (om + w))
        } else {
            -k(t) / ((w + om) * w * l) + alpha * k(t) / (om * w * l)
        }
    };
    let env = move |t: f64| {
        let w = PI * t / l;
        k(t) / ((w + om) * w * l) + alpha.abs() * k(t) / (om * w * l)
    };
    folded_series(cavity.boundary, m, sites, &a, &env, smeared_j_min(cavity, atom), stop_for(ctl, tol, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::energy_series;
    use crate::force::{wall_force_fixed_position, wall_force_fixed_ratio};
    use crate::model::CouplingModel;

    fn atom() -> AtomSpec {
        AtomSpec::new(0.5, 2.0 * PI, 1e-4, 1e-3)
    }

    fn per_atom<F: Fn(&AtomSpec) -> f64 + Sync>(m: u64, sites: Sites, f: F) -> f64 {
        let ns: Vec<u64> = match sites {
            Sites::All => (1..m).collect(),
            Sites::Left => (1..m / 2).collect(),
            Sites::Right => (m / 2 + 1..m).collect(),
        };
        let parts: Vec<f64> = ns.par_iter().map(|&n| f(&atom().at(n as f64 / m as f64))).collect();
        parts.into_iter().collect::<Neumaier>().value()
    }

    fn wall_force(cav: &CavitySpec, a: &AtomSpec, model: &CouplingModel, fixed_position: bool) -> f64 {
        let ctl = SeriesControl::default();
        if fixed_position {
            wall_force_fixed_position(cav, a, model, &ctl).unwrap().value
        } else {
            wall_force_fixed_ratio(cav, a, model, &ctl).unwrap().value
        }
    }

    const LAYOUTS: [(u64, Sites); 3] = [(41, Sites::All), (16, Sites::Left), (16, Sites::Right)];

    #[test]
    fn cot_harmonic_matches_direct_sum() {
        // cot terms pair up as j and M - j; sum enough periods to see the limit
        for (m, w_odd, w_even) in [(7u64, 1.0, 1.0), (8, 1.0, -1.0), (8, 3.0, 1.0)] {
            let c = 2.0;
            let (t, err) = cot_harmonic(m, c, w_odd, w_even).unwrap();
            let mut direct = Neumaier::new();
            for j in 1..=(m * 2_000_000) {
                if j % m != 0 {
                    let w = if j % 2 == 1 { w_odd } else { w_even };
                    direct.add(w / ((PI * j as f64 / m as f64).tan() * (j as f64 + c)));
                }
            }
            assert!((t - direct.value()).abs() < 1e-5 + err, "{t} vs {}", direct.value());
        }
        assert!(cot_harmonic(7, 2.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn bare_lattice_matches_atoms() {
        let ctl = SeriesControl::default();
        let bare = CouplingModel::bare();
        for cav in [CavitySpec::dirichlet(1.0), CavitySpec::neumann(1.0)] {
            for (m, sites) in LAYOUTS {
                let (e, _) = bare_energy(&cav, &atom(), m, sites).unwrap();
                let e_atoms = per_atom(m, sites, |a| energy_series(&cav, a, &bare, &ctl).unwrap().0.value);
                assert!((e - e_atoms).abs() < 1e-11 * e.abs(), "{sites:?}: {e} vs {e_atoms}");
                for fixed_position in [false, true] {
                    let (f, _) = bare_wall_force(&cav, &atom(), m, sites, fixed_position).unwrap();
                    let f_atoms = per_atom(m, sites, |a| wall_force(&cav, a, &bare, fixed_position));
                    assert!((f - f_atoms).abs() < 1e-10 * f.abs(), "{sites:?} {fixed_position}: {f} vs {f_atoms}");
                }
            }
        }
    }

    #[test]
    fn smeared_lattice_matches_atoms() {
        let ctl = SeriesControl::default();
        let model = CouplingModel::smeared(1.0);
        let tol = 1e-22;
        for cav in [CavitySpec::dirichlet(1.0), CavitySpec::neumann(1.0)] {
            for (m, sites) in [(17, Sites::All), (10, Sites::Left), (10, Sites::Right)] {
                let e = smeared_energy(&cav, &atom(), 1.0, m, sites, &ctl, tol).unwrap();
                let e_atoms = per_atom(m, sites, |a| energy_series(&cav, a, &model, &ctl).unwrap().0.value);
                assert!((e.value - e_atoms).abs() < 1e-10 * e_atoms.abs(), "{sites:?}: {} vs {e_atoms}", e.value);
                for fixed_position in [false, true] {
                    let f = smeared_wall_force(&cav, &atom(), m, sites, fixed_position, &ctl, tol).unwrap();
                    let f_atoms = per_atom(m, sites, |a| wall_force(&cav, a, &model, fixed_position));
                    assert!(
                        (f.value - f_atoms).abs() < 1e-9 * f_atoms.abs(),
                        "{sites:?} {fixed_position}: {} vs {f_atoms}",
                        f.value
                    );
                }
            }
        }
    }

    #[test]
    fn two_smeared_atoms_converge() {
        let cav = CavitySpec::dirichlet(1.0);
        let ctl = SeriesControl::default();
        let f = smeared_wall_force(&cav, &atom(), 3, Sites::All, true, &ctl, 3e-22).unwrap();
        let f_atoms = per_atom(3, Sites::All, |a| wall_force(&cav, a, &CouplingModel::smeared(1.0), true));
        assert!((f.value - f_atoms).abs() < 1e-9 * f_atoms.abs(), "{} vs {f_atoms}", f.value);
        assert!(f.error < 1e-9 * f_atoms.abs());
    }
}
