//! Media of many atoms, the critical atom number, and the fourth-order
//! pair interaction.
//!
//! At second order the atoms do not see each other, so medium energies and
//! forces are sums of single-atom values. Uniform and half-cavity rows
//! go through the lattice sums in closed form instead of atom by atom.

mod lattice;
mod pair;

use lattice::{Sites, EXACT_COT_MAX};

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::energy_series;
use crate::force::{force, Constraint, ForceMethod, ForceResult};
use crate::model::{AtomSpec, Boundary, CavitySpec, CouplingKind, CouplingModel, EnergyPath, EnergyResult, SeriesControl};
use crate::sum::Neumaier;
use crate::{Error, Result};

pub use pair::{pair_energy_4th, pair_wall_force, pair_wall_force_fd, pair_wall_force_fixed_ratio, PairControl, PairSpec};

/// Uniform media with more atoms than this use the lattice sums.
pub const LATTICE_MIN_ATOMS: u64 = 1024;

/// `N lambda^2` above which the pairwise picture is flagged.
pub const PWS_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Placement {
    /// `x_n = L n / (N + 1)`, `n = 1..N`.
    Uniform { n: u64 },
    /// `x_n = (L/2) n / (N + 1)`: a uniform row squeezed into the left half.
    LeftHalf { n: u64 },
    /// `x_n = L/2 + (L/2) n / (N + 1)`.
    RightHalf { n: u64 },
    Explicit { positions: Vec<f64> },
}

/// Identical atoms (`x` of the template is ignored) at the given places.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediumSpec {
    pub atom: AtomSpec,
    pub placement: Placement,
}

impl MediumSpec {
    pub fn uniform(atom: AtomSpec, n: u64) -> Self {
        Self {
            atom,
            placement: Placement::Uniform { n },
        }
    }

    pub fn left_half(atom: AtomSpec, n: u64) -> Self {
        Self {
            atom,
            placement: Placement::LeftHalf { n },
        }
    }

    pub fn right_half(atom: AtomSpec, n: u64) -> Self {
        Self {
            atom,
            placement: Placement::RightHalf { n },
        }
    }

    pub fn explicit(atom: AtomSpec, positions: Vec<f64>) -> Self {
        Self {
            atom,
            placement: Placement::Explicit { positions },
        }
    }

    pub fn len(&self) -> u64 {
        match &self.placement {
            Placement::Uniform { n } | Placement::LeftHalf { n } | Placement::RightHalf { n } => *n,
            Placement::Explicit { positions } => positions.len() as u64,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of atom `i` (from 0).
    pub fn position(&self, i: u64, length: f64) -> f64 {
        match &self.placement {
            Placement::Uniform { n } => length * (i + 1) as f64 / (*n + 1) as f64,
            Placement::LeftHalf { n } => 0.5 * length * (i + 1) as f64 / (*n + 1) as f64,
            Placement::RightHalf { n } => 0.5 * length + 0.5 * length * (i + 1) as f64 / (*n + 1) as f64,
            Placement::Explicit { positions } => positions[i as usize],
        }
    }

    /// The atoms one by one. Allocates `N` entries.
    pub fn atoms(&self, length: f64) -> Vec<AtomSpec> {
        (0..self.len()).map(|i| self.atom.at(self.position(i, length))).collect()
    }

    /// Every position reflected through the middle of the cavity.
    pub fn mirrored(&self, length: f64) -> Self {
        match &self.placement {
            Placement::Uniform { .. } => self.clone(),
            Placement::LeftHalf { n } => Self::right_half(self.atom, *n),
            Placement::RightHalf { n } => Self::left_half(self.atom, *n),
            Placement::Explicit { positions } => {
                Self::explicit(self.atom, positions.iter().map(|x| length - x).collect())
            }
        }
    }

    pub fn check(&self, cavity: &CavitySpec) -> Result<()> {
        self.atom.at(0.5 * cavity.length).check(cavity)?;
        if let Placement::Explicit { positions } = &self.placement {
            if let Some(x) = positions.iter().find(|&&x| !(x > 0.0 && x < cavity.length)) {
                return Err(Error::invalid(format!(
                    "medium atom at {x} is not strictly inside (0, {})",
                    cavity.length
                )));
            }
        }
        Ok(())
    }

    /// Set when `N lambda^2` reaches [`PWS_LIMIT`].
    pub fn pws_warning(&self) -> Option<String> {
        let nl2 = self.len() as f64 * self.atom.lambda * self.atom.lambda;
        (nl2 >= PWS_LIMIT).then(|| {
            format!("N lambda^2 = {nl2:.3e}: many-body terms beyond pairs are no longer negligible")
        })
    }

    /// Lattice period and occupied sites when the folded sums apply. Smeared
    /// media fold at any size since a single smeared series is already
    /// costly. Bare half rows stop where the exact cotangent sum does.
    fn lattice(&self, kind: CouplingKind) -> Option<(u64, Sites)> {
        let smeared = kind == CouplingKind::SmearedDiamagnetic;
        let half = |n: u64, sites| {
            let m = 2 * (n + 1);
            let fold = smeared || (n > LATTICE_MIN_ATOMS && m <= EXACT_COT_MAX);
            fold.then_some((m, sites))
        };
        match self.placement {
            Placement::Uniform { n } if n > LATTICE_MIN_ATOMS || (n > 1 && smeared) => Some((n + 1, Sites::All)),
            Placement::LeftHalf { n } if n > 0 => half(n, Sites::Left),
            Placement::RightHalf { n } if n > 0 => half(n, Sites::Right),
            _ => None,
        }
    }
}

fn push_unique(warnings: &mut Vec<String>, w: String) {
    if !warnings.contains(&w) {
        warnings.push(w);
    }
}

/// Sum of the single-atom energy shifts.
pub fn medium_energy(
    cavity: &CavitySpec,
    medium: &MediumSpec,
    model: &CouplingModel,
    ctl: &SeriesControl,
) -> Result<EnergyResult> {
    medium.check(cavity)?;
    model.check(&medium.atom)?;
    ctl.check()?;
    let mut warnings: Vec<String> = medium.pws_warning().into_iter().collect();
    if medium.is_empty() {
        return Ok(EnergyResult {
            value: 0.0,
            error_bound: 0.0,
            modes_used: 0,
            path: EnergyPath::Series,
            warnings,
        });
    }
    if let Some((m, sites)) = medium.lattice(model.kind) {
        let tol = ctl.abs_tol_for(medium.atom.lambda) * m as f64;
        let (value, error, modes) = match model.kind {
            CouplingKind::BarePoint => {
                let (v, e) = lattice::bare_energy(cavity, &medium.atom, m, sites)?;
                (v, e, 0)
            }
            CouplingKind::SmearedDiamagnetic => {
                let out = lattice::smeared_energy(cavity, &medium.atom, model.alpha, m, sites, ctl, tol)?;
                (out.value, out.error, out.modes)
            }
        };
        return Ok(EnergyResult {
            value,
            error_bound: error,
            modes_used: modes,
            path: EnergyPath::Series,
            warnings,
        });
    }
    let parts = medium
        .atoms(cavity.length)
        .par_iter()
        .map(|a| energy_series(cavity, a, model, ctl).map(|r| r.0))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = Neumaier::new();
    let mut error = 0.0;
    let mut modes = 0;
    for p in parts {
        acc.add(p.value);
        error += p.error_bound;
        modes = modes.max(p.modes_used);
        for w in p.warnings {
            push_unique(&mut warnings, w);
        }
    }
    Ok(EnergyResult {
        value: acc.value(),
        error_bound: error + acc.rounding_bound(),
        modes_used: modes,
        path: EnergyPath::Series,
        warnings,
    })
}

/// Sum of the single-atom wall forces under `constraint`.
pub fn medium_wall_force(
    cavity: &CavitySpec,
    medium: &MediumSpec,
    model: &CouplingModel,
    ctl: &SeriesControl,
    constraint: Constraint,
) -> Result<ForceResult> {
    medium.check(cavity)?;
    model.check(&medium.atom)?;
    ctl.check()?;
    if constraint == Constraint::AtomPosition {
        return Err(Error::invalid("a medium wall force needs the fixed_ratio or fixed_position constraint"));
    }
    let fixed_position = constraint == Constraint::FixedPosition;
    let mut res = ForceResult {
        value: 0.0,
        error_bound: 0.0,
        constraint,
        method: ForceMethod::Analytic,
        modes_used: 0,
        suspect: false,
        derived_extension: cavity.boundary == Boundary::Neumann,
        analytic_value: None,
        fd_value: None,
        warnings: medium.pws_warning().into_iter().collect(),
    };
    if medium.is_empty() || medium.atom.lambda == 0.0 {
        return Ok(res);
    }
    let lattice_ok = model.kind == CouplingKind::BarePoint || model.alpha == 1.0;
    match medium.lattice(model.kind) {
        Some((m, sites)) if lattice_ok => {
            let (value, error, modes) = match model.kind {
                CouplingKind::BarePoint => {
                    let (v, e) = lattice::bare_wall_force(cavity, &medium.atom, m, sites, fixed_position)?;
                    (v, e, 0)
                }
                CouplingKind::SmearedDiamagnetic => {
                    let tol = ctl.abs_tol_for(medium.atom.lambda) / cavity.length * m as f64;
                    let out = lattice::smeared_wall_force(cavity, &medium.atom, m, sites, fixed_position, ctl, tol)?;
                    (out.value, out.error, out.modes)
                }
            };
            res.value = value;
            res.error_bound = error;
            res.modes_used = modes;
        }
        _ => {
            let parts = medium
                .atoms(cavity.length)
                .par_iter()
                .map(|a| force(cavity, a, model, ctl, constraint))
                .collect::<Result<Vec<_>>>()?;
            let mut acc = Neumaier::new();
            for p in parts {
                acc.add(p.value);
                res.error_bound += p.error_bound;
                res.modes_used = res.modes_used.max(p.modes_used);
                if p.method == ForceMethod::Fd {
                    res.method = ForceMethod::Fd;
                }
                for w in p.warnings {
                    push_unique(&mut res.warnings, w);
                }
            }
            res.value = acc.value();
            res.error_bound += acc.rounding_bound();
        }
    }
    Ok(res)
}

/// Casimir force between the empty cavity's walls, `-pi / (24 L^2)`.
pub fn empty_casimir_force(length: f64) -> f64 {
    -PI / (24.0 * length * length)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CriticalOptions {
    /// Add the fourth-order force of every pair of atoms. Only feasible for
    /// small media.
    pub include_pairs: bool,
    pub pair_control: Option<PairControl>,
}

/// Pair forces are summed over `N (N - 1) / 2` pairs; beyond this many
/// atoms the scan refuses.
pub const PAIR_SCAN_MAX_ATOMS: u64 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalResult {
    /// Interpolated crossing of the total wall force through zero.
    pub n_star: f64,
    /// Consecutive atom numbers with the sign change between them.
    pub bracket: (u64, u64),
    /// Sampled `(N, medium force + empty-cavity force)`, increasing in `N`.
    pub table: Vec<(u64, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Sample points for the scan: every `N` up to 32, then eight per octave,
/// always ending at `n_max`.
pub fn scan_grid(n_max: u64) -> Vec<u64> {
    let mut grid: Vec<u64> = (1..=n_max.min(32)).collect();
    let mut x = 32.0f64;
    loop {
        x *= 2f64.powf(0.125);
        let n = x.round() as u64;
        if n >= n_max {
            break;
        }
        if grid.last().is_some_and(|&l| n > l) {
            grid.push(n);
        }
    }
    if grid.last().is_some_and(|&l| l < n_max) {
        grid.push(n_max);
    }
    grid
}

/// Smallest uniform medium whose wall force overcomes the empty-cavity
/// attraction.
///
/// The total force `medium + empty` is sampled on [`scan_grid`]; the first
/// sign change is narrowed by bisection to consecutive `N` and `N*` is
/// interpolated linearly between them. A sign change between two grid
/// points that reverts before the next one is not seen.
pub fn critical_atom_number(
    cavity: &CavitySpec,
    atom: &AtomSpec,
    model: &CouplingModel,
    ctl: &SeriesControl,
    constraint: Constraint,
    n_max: u64,
) -> Result<CriticalResult> {
    critical_atom_number_with(cavity, atom, model, ctl, constraint, n_max, &CriticalOptions::default())
}

pub fn critical_atom_number_with(
    cavity: &CavitySpec,
    atom: &AtomSpec,
    model: &CouplingModel,
    ctl: &SeriesControl,
    constraint: Constraint,
    n_max: u64,
    opts: &CriticalOptions,
) -> Result<CriticalResult> {
    if n_max < 1 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    if constraint == Constraint::AtomPosition {
        return Err(Error::invalid("critical atom number needs a wall-force constraint"));
    }
    if opts.include_pairs && n_max > PAIR_SCAN_MAX_ATOMS {
        return Err(Error::invalid(format!(
            "pair forces limit the critical scan to {PAIR_SCAN_MAX_ATOMS} atoms, not {n_max}"
        )));
    }
    let empty = empty_casimir_force(cavity.length);
    let total = |n: u64| -> Result<f64> {
        let medium = MediumSpec::uniform(*atom, n);
        let mut f = medium_wall_force(cavity, &medium, model, ctl, constraint)?.value + empty;
        if opts.include_pairs {
            f += pair_sum(cavity, &medium, opts.pair_control.unwrap_or_default(), constraint)?;
        }
        Ok(f)
    };
    let grid = scan_grid(n_max);
    let values = grid.par_iter().map(|&n| total(n)).collect::<Result<Vec<_>>>()?;
    let table: Vec<(u64, f64)> = grid.into_iter().zip(values).collect();
    let mut warnings = Vec::new();
    if opts.include_pairs {
        warnings.push("fourth-order pair forces included".into());
    }

    // N = 0 is the empty cavity
    let mut prev = (0u64, empty);
    let mut bracket = None;
    for &(n, f) in &table {
        if (f >= 0.0) != (prev.1 >= 0.0) {
            bracket = Some((prev, (n, f)));
            break;
        }
        prev = (n, f);
    }
    let ((mut lo, mut flo), (mut hi, mut fhi)) = bracket.ok_or(Error::NoCrossing { n_max })?;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let fm = total(mid)?;
        if (fm >= 0.0) == (flo >= 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    let n_star = lo as f64 + flo / (flo - fhi);
    if let Some(w) = MediumSpec::uniform(*atom, hi).pws_warning() {
        warnings.push(w);
    }
    Ok(CriticalResult {
        n_star,
        bracket: (lo, hi),
        table,
        warnings,
    })
}

/// Sum of the pair wall forces over every pair in the medium.
fn pair_sum(cavity: &CavitySpec, medium: &MediumSpec, ctl: PairControl, constraint: Constraint) -> Result<f64> {
    let n = medium.len();
    if n > PAIR_SCAN_MAX_ATOMS {
        return Err(Error::invalid(format!(
            "pair forces over {n} atoms ({} pairs) are out of reach; the limit is {PAIR_SCAN_MAX_ATOMS} atoms",
            n * (n - 1) / 2
        )));
    }
    let xs: Vec<f64> = (0..n).map(|i| medium.position(i, cavity.length)).collect();
    let pairs: Vec<(usize, usize)> = (0..xs.len()).flat_map(|a| (a + 1..xs.len()).map(move |b| (a, b))).collect();
    let forces = pairs
        .par_iter()
        .map(|&(a, b)| {
            let p = PairSpec::from_atom(&medium.atom, xs[a], xs[b]);
            pair_wall_force(cavity, &p, &ctl, constraint).map(|f| f.value)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(forces.into_iter().collect::<Neumaier>().value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom() -> AtomSpec {
        AtomSpec::new(0.5, 2.0 * PI, 1e-4, 1e-3)
    }

    fn ctl() -> SeriesControl {
        SeriesControl::default()
    }

    #[test]
    fn empty_medium() {
        let cav = CavitySpec::dirichlet(1.0);
        let m = MediumSpec::uniform(atom(), 0);
        assert_eq!(medium_energy(&cav, &m, &CouplingModel::bare(), &ctl()).unwrap().value, 0.0);
        let f = medium_wall_force(&cav, &m, &CouplingModel::bare(), &ctl(), Constraint::FixedRatio).unwrap();
        assert_eq!(f.value, 0.0);
    }

    #[test]
    fn one_atom_is_the_single_atom_energy() {
        let cav = CavitySpec::neumann(1.0);
        let model = CouplingModel::smeared(1.0);
        let m = MediumSpec::uniform(atom(), 1);
        let single = energy_series(&cav, &atom(), &model, &ctl()).unwrap().0;
        assert_eq!(medium_energy(&cav, &m, &model, &ctl()).unwrap().value, single.value);
    }

    #[test]
    fn uniform_positions() {
        let m = MediumSpec::uniform(atom(), 3);
        let xs: Vec<f64> = m.atoms(2.0).iter().map(|a| a.x).collect();
        assert_eq!(xs, vec![0.5, 1.0, 1.5]);
    }

    #[test]
    fn small_smeared_lattice_matches_explicit_atoms() {
        let cav = CavitySpec::neumann(1.0);
        let model = CouplingModel::smeared(1.0);
        let uniform = MediumSpec::uniform(atom(), 3);
        let explicit = MediumSpec::explicit(atom(), vec![0.25, 0.5, 0.75]);
        let e = medium_energy(&cav, &uniform, &model, &ctl()).unwrap();
        let e_atoms = medium_energy(&cav, &explicit, &model, &ctl()).unwrap();
        assert!((e.value - e_atoms.value).abs() <= e.error_bound + e_atoms.error_bound);
        for c in [Constraint::FixedRatio, Constraint::FixedPosition] {
            let f = medium_wall_force(&cav, &uniform, &model, &ctl(), c).unwrap();
            let f_atoms = medium_wall_force(&cav, &explicit, &model, &ctl(), c).unwrap();
            assert!((f.value - f_atoms.value).abs() <= f.error_bound + f_atoms.error_bound, "{c:?}");
        }
    }

    #[test]
    fn half_rows_match_explicit_atoms() {
        let cav = CavitySpec::dirichlet(2.0);
        let model = CouplingModel::smeared(1.0);
        for half in [MediumSpec::left_half(atom(), 4), MediumSpec::right_half(atom(), 4)] {
            let explicit = MediumSpec::explicit(atom(), (0..4).map(|i| half.position(i, 2.0)).collect());
            let e = medium_energy(&cav, &half, &model, &ctl()).unwrap();
            let e_atoms = medium_energy(&cav, &explicit, &model, &ctl()).unwrap();
            assert!((e.value - e_atoms.value).abs() <= e.error_bound + e_atoms.error_bound);
            for c in [Constraint::FixedRatio, Constraint::FixedPosition] {
                let f = medium_wall_force(&cav, &half, &model, &ctl(), c).unwrap();
                let f_atoms = medium_wall_force(&cav, &explicit, &model, &ctl(), c).unwrap();
                assert!((f.value - f_atoms.value).abs() <= f.error_bound + f_atoms.error_bound, "{c:?}");
            }
        }
        let left = MediumSpec::left_half(atom(), 3);
        assert_eq!(left.mirrored(1.0), MediumSpec::right_half(atom(), 3));
        assert_eq!(left.position(2, 1.0), 0.375);
        assert_eq!(left.mirrored(1.0).position(0, 1.0), 0.625);
    }

    #[test]
    fn explicit_positions_must_be_inside() {
        let cav = CavitySpec::dirichlet(1.0);
        let m = MediumSpec::explicit(atom(), vec![0.2, 1.0]);
        assert!(medium_energy(&cav, &m, &CouplingModel::bare(), &ctl()).is_err());
    }

    #[test]
    fn smeared_medium_pulls_the_walls_in() {
        let cav = CavitySpec::dirichlet(1.0);
        let m = MediumSpec::uniform(atom(), 10);
        let f = medium_wall_force(&cav, &m, &CouplingModel::smeared(1.0), &ctl(), Constraint::FixedRatio).unwrap();
        assert!(f.value < 0.0);
    }

    #[test]
    fn pws_flag() {
        let mut a = atom();
        a.lambda = 0.1;
        assert!(MediumSpec::uniform(a, 1).pws_warning().is_some());
        assert!(MediumSpec::uniform(atom(), 1000).pws_warning().is_none());
    }

    #[test]
    fn casimir_force_scales_as_inverse_square() {
        assert!((empty_casimir_force(1.0) + 0.130_899_69).abs() < 1e-8);
        assert_eq!(empty_casimir_force(2.0), -PI / 96.0);
    }

    #[test]
    fn scan_grid_shape() {
        assert!(scan_grid(0).is_empty());
        assert_eq!(scan_grid(5), vec![1, 2, 3, 4, 5]);
        let g = scan_grid(1_000_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*g.last().unwrap(), 1_000_000);
        assert!(g.len() < 32 + 8 * 16 + 2);
    }

    #[test]
    fn no_crossing_without_coupling() {
        let cav = CavitySpec::dirichlet(1.0);
        let mut a = atom();
        a.lambda = 0.0;
        let r = critical_atom_number(&cav, &a, &CouplingModel::bare(), &ctl(), Constraint::FixedRatio, 1000);
        assert_eq!(r.unwrap_err(), Error::NoCrossing { n_max: 1000 });
    }

    #[test]
    fn smeared_medium_never_crosses() {
        let cav = CavitySpec::dirichlet(1.0);
        let r = critical_atom_number(&cav, &atom(), &CouplingModel::smeared(1.0), &ctl(), Constraint::FixedRatio, 5000);
        assert!(matches!(r, Err(Error::NoCrossing { .. })));
    }

    #[test]
    fn stronger_coupling_needs_fewer_atoms() {
        let cav = CavitySpec::dirichlet(1.0);
        let mut a = atom();
        a.lambda = 0.01;
        let model = CouplingModel::bare();
        let one = critical_atom_number(&cav, &a, &model, &ctl(), Constraint::FixedRatio, 1 << 40).unwrap();
        a.lambda = 0.02;
        let two = critical_atom_number(&cav, &a, &model, &ctl(), Constraint::FixedRatio, 1 << 40).unwrap();
        assert!(two.n_star < one.n_star);
        assert!(one.bracket.1 == one.bracket.0 + 1);
        assert!(one.n_star >= one.bracket.0 as f64 && one.n_star <= one.bracket.1 as f64);
    }

    #[test]
    fn pair_scan_is_limited() {
        let cav = CavitySpec::dirichlet(1.0);
        let opts = CriticalOptions {
            include_pairs: true,
            pair_control: None,
        };
        let r = critical_atom_number_with(&cav, &atom(), &CouplingModel::bare(), &ctl(), Constraint::FixedRatio, 1000, &opts);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }
}
