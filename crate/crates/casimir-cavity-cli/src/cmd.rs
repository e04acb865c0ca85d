//! The subcommands. Each returns what to write plus an exit status.

use anyhow::{anyhow, bail, Context as _};
use casimir_cavity::force::{alpha_star_bisect, force_checked, Constraint, ForceMethod, ForceResult};
use casimir_cavity::medium::{
    critical_atom_number_with, empty_casimir_force, medium_wall_force, pair_wall_force, scan_grid,
    CriticalOptions, MediumSpec, PairControl, PairSpec,
};
use casimir_cavity::model::{to_si, Unit};
use casimir_cavity::validate::{self, Fault, ValidateOptions};
use casimir_cavity::{
    energy::{energy_closed_form, energy_series},
    AtomSpec, Boundary, CavitySpec, CouplingModel, EnergyResult, Error, SeriesControl,
};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::output::{Cell, Emit, Table};
use crate::params::{parse_count, parse_grid, parse_real, parse_reals, split_list, Config, Echo, Num};
use crate::{BoundaryArg, CouplingArg, Global};

/// Exit status when some rows could not be computed.
const NUMERICAL_FAILURE: u8 = 3;
const VALIDATION_FAILURE: u8 = 1;

/// Media up to this size get a row for every `N`; larger ones are sampled
/// on the critical-scan grid.
const DENSE_TABLE_MAX: u64 = 1000;

pub struct Context {
    cfg: Config,
    ctl: SeriesControl,
    echo: Echo,
}

impl Context {
    pub fn new(g: &Global) -> anyhow::Result<Self> {
        let cfg = match &g.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        let mut ctl = SeriesControl::default();
        let mut echo = Echo::default();
        if let Some(v) = pick(&g.rel_tol, &cfg.rel_tol)? {
            ctl.rel_tol = v;
        }
        if let Some(v) = pick(&g.abs_tol, &cfg.abs_tol)? {
            ctl.abs_tol = Some(v);
            echo.set("abs_tol", v);
        }
        if let Some(v) = g.max_modes.as_deref().map(parse_count).transpose()? {
            ctl.max_modes = v;
        } else if let Some(n) = &cfg.max_modes {
            ctl.max_modes = parse_count(&n.value()?.to_string())?;
        }
        ctl.check()?;
        echo.set("rel_tol", ctl.rel_tol);
        echo.set("max_modes", ctl.max_modes);
        Ok(Self { cfg, ctl, echo })
    }
}

/// Flag value if given, else the config value.
fn pick(flag: &Option<String>, cfg: &Option<Num>) -> anyhow::Result<Option<f64>> {
    match (flag, cfg) {
        (Some(s), _) => Ok(Some(parse_real(s)?)),
        (None, Some(n)) => Ok(Some(n.value()?)),
        (None, None) => Ok(None),
    }
}

#[derive(Args)]
pub struct Physics {
    #[arg(long, value_enum)]
    boundary: Option<BoundaryArg>,
    #[arg(long, value_enum)]
    coupling: Option<CouplingArg>,
    /// Diamagnetic weight of the smeared coupling [default: 1].
    #[arg(long)]
    alpha: Option<String>,
    /// Cavity length in natural units [default: 1].
    #[arg(long = "L")]
    length: Option<String>,
    /// Atomic gap, e.g. `2pi`. A comma list gives one curve per value
    /// [default: 2pi].
    #[arg(long = "Omega")]
    omega: Option<String>,
    /// Coupling strength [default: 1e-4].
    #[arg(long)]
    lambda: Option<String>,
    /// Atomic radius of the smeared profile [default: 1e-3].
    #[arg(long)]
    a0: Option<String>,
}

struct Phys {
    cavity: CavitySpec,
    model: CouplingModel,
    omegas: Vec<f64>,
    lambda: f64,
    a0: f64,
}

impl Phys {
    fn atom(&self, omega: f64, x: f64) -> AtomSpec {
        AtomSpec::new(x, omega, self.lambda, self.a0)
    }

    fn length(&self) -> f64 {
        self.cavity.length
    }
}

fn boundary_from(s: &str) -> anyhow::Result<Boundary> {
    match s {
        "dirichlet" => Ok(Boundary::Dirichlet),
        "neumann" => Ok(Boundary::Neumann),
        _ => bail!("boundary {s:?}: expected dirichlet or neumann"),
    }
}

fn smeared_from(s: &str) -> anyhow::Result<bool> {
    match s {
        "bare" | "bare_point" => Ok(false),
        "smeared" | "smeared_diamagnetic" => Ok(true),
        _ => bail!("coupling {s:?}: expected bare or smeared"),
    }
}

impl Physics {
    /// `force_smeared` overrides the coupling choice (alpha sweeps).
    fn resolve(&self, ctx: &Context, echo: &mut Echo, force_smeared: bool) -> anyhow::Result<Phys> {
        let cfg = &ctx.cfg;
        let length = pick(&self.length, &cfg.length)?.unwrap_or(1.0);
        let boundary = match (self.boundary, &cfg.boundary) {
            (Some(BoundaryArg::Dirichlet), _) => Boundary::Dirichlet,
            (Some(BoundaryArg::Neumann), _) => Boundary::Neumann,
            (None, Some(s)) => boundary_from(s)?,
            (None, None) => Boundary::Dirichlet,
        };
        let smeared = force_smeared
            || match (self.coupling, &cfg.coupling) {
                (Some(c), _) => c == CouplingArg::Smeared,
                (None, Some(s)) => smeared_from(s)?,
                (None, None) => false,
            };
        let alpha = pick(&self.alpha, &cfg.alpha)?.unwrap_or(1.0);
        let omegas = match (&self.omega, &cfg.omega) {
            (Some(s), _) => parse_reals(s)?,
            (None, Some(n)) => vec![n.value()?],
            (None, None) => vec![2.0 * std::f64::consts::PI],
        };
        let lambda = pick(&self.lambda, &cfg.lambda)?.unwrap_or(1e-4);
        let a0 = pick(&self.a0, &cfg.a0)?.unwrap_or(1e-3);
        let cavity = CavitySpec::new(length, boundary)?;
        let model = if smeared { CouplingModel::smeared(alpha) } else { CouplingModel::bare() };

        echo.set("L", length);
        echo.set("boundary", if boundary == Boundary::Dirichlet { "dirichlet" } else { "neumann" });
        echo.set("coupling", if smeared { "smeared" } else { "bare" });
        if smeared {
            echo.set("a0", a0);
            if !force_smeared {
                echo.set("alpha", alpha);
            }
        }
        echo.set("Omega", if omegas.len() == 1 { json!(omegas[0]) } else { json!(omegas) });
        echo.set("lambda", lambda);
        Ok(Phys {
            cavity,
            model,
            omegas,
            lambda,
            a0,
        })
    }
}

fn constraint_from(s: &str) -> anyhow::Result<Constraint> {
    match s {
        "fixed-ratio" => Ok(Constraint::FixedRatio),
        "fixed-position" => Ok(Constraint::FixedPosition),
        "atom" => Ok(Constraint::AtomPosition),
        _ => bail!("constraint {s:?}: expected fixed-ratio, fixed-position or atom"),
    }
}

fn constraint_name(c: Constraint) -> &'static str {
    match c {
        Constraint::FixedRatio => "fixed-ratio",
        Constraint::FixedPosition => "fixed-position",
        Constraint::AtomPosition => "atom",
    }
}

fn constraints(s: &str) -> anyhow::Result<Vec<Constraint>> {
    split_list(s).into_iter().map(constraint_from).collect()
}

fn method_name(m: ForceMethod) -> &'static str {
    match m {
        ForceMethod::Analytic => "analytic",
        ForceMethod::Fd => "fd",
    }
}

/// Deduplicated warnings in first-seen order.
#[derive(Default)]
struct Warnings(Vec<String>);

impl Warnings {
    fn add(&mut self, w: impl Into<String>) {
        let w = w.into();
        if !self.0.contains(&w) {
            self.0.push(w);
        }
    }
}

fn x_grid(flag: &Option<String>, ctx: &Context, length: f64, default: &str) -> anyhow::Result<Vec<f64>> {
    match (flag, &ctx.cfg.x_d) {
        (Some(s), _) => parse_grid(s, 0.0, length),
        (None, Some(x)) => Ok(vec![x.value()?]),
        (None, None) => parse_grid(default, 0.0, length),
    }
}

fn key_columns<'a>(multi: &[(&'a str, bool)], rest: &[&'a str]) -> Vec<&'a str> {
    multi.iter().filter(|(_, m)| *m).map(|(c, _)| *c).chain(rest.iter().copied()).collect()
}

#[derive(Args)]
pub struct EnergyArgs {
    #[command(flatten)]
    physics: Physics,
    /// Point count across [0, L] or a bracketed list of positions
    /// [default: 201].
    #[arg(long = "x-grid")]
    x_grid: Option<String>,
    #[arg(long, value_enum, default_value = "series")]
    path: PathArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathArg {
    Series,
    ClosedForm,
}

pub fn energy(a: &EnergyArgs, ctx: &Context) -> anyhow::Result<(Emit, u8)> {
    let mut echo = ctx.echo.clone();
    let p = a.physics.resolve(ctx, &mut echo, false)?;
    let xs = x_grid(&a.x_grid, ctx, p.length(), "201")?;
    echo.set("x_grid", json!(xs));
    echo.set("path", if a.path == PathArg::Series { "series" } else { "closed_form" });

    let multi = p.omegas.len() > 1;
    let mut table = Table::new(&key_columns(&[("Omega", multi)], &["x_d", "energy", "error_bound", "path"]));
    let mut warnings = Warnings::default();
    let mut failures = 0;
    for &omega in &p.omegas {
        let rows: Vec<(f64, Result<EnergyResult, Error>)> = xs
            .par_iter()
            .map(|&x| {
                let atom = p.atom(omega, x);
                let r = match a.path {
                    PathArg::Series => energy_series(&p.cavity, &atom, &p.model, &ctx.ctl).map(|r| r.0),
                    PathArg::ClosedForm => energy_closed_form(&p.cavity, &atom, &p.model),
                };
                (x, r)
            })
            .collect();
        for (x, r) in rows {
            let mut row: Vec<Cell> = Vec::new();
            if multi {
                row.push(omega.into());
            }
            row.push(x.into());
            match r {
                Ok(e) => {
                    e.warnings.iter().for_each(|w| warnings.add(w.clone()));
                    row.extend([e.value.into(), e.error_bound.into(), path_name(&e).into()]);
                }
                Err(err) => {
                    failures += 1;
                    warnings.add(format!("Omega = {omega}, x_d = {x}: {err}"));
                    row.extend([f64::NAN.into(), f64::NAN.into(), "none".into()]);
                }
            }
            table.rows.push(row);
        }
    }
    finish("energy", table, echo, Map::new(), warnings, failures)
}

fn path_name(e: &EnergyResult) -> &'static str {
    match e.path {
        casimir_cavity::EnergyPath::Series => "series",
        casimir_cavity::EnergyPath::ClosedForm => "closed_form",
    }
}

fn finish(
    command: &'static str,
    table: Table,
    echo: Echo,
    results: Map<String, Value>,
    warnings: Warnings,
    failures: usize,
) -> anyhow::Result<(Emit, u8)> {
    let body = table.render(command, &echo, &[])?;
    let code = if failures > 0 { NUMERICAL_FAILURE } else { 0 };
    Ok((
        Emit {
            command,
            body,
            echo,
            results,
            warnings: warnings.0,
        },
        code,
    ))
}

#[derive(Args)]
pub struct ForceArgs {
    #[command(flatten)]
    physics: Physics,
    /// fixed-ratio, fixed-position or atom; a comma list gives one curve
    /// per constraint.
    #[arg(long, default_value = "fixed-ratio")]
    constraint: String,
    #[arg(long, value_enum, default_value = "x")]
    sweep: SweepArg,
    /// Positions for `--sweep x`: a point count across [0, L] or a list
    /// [default: 101].
    #[arg(long = "x-grid")]
    x_grid: Option<String>,
    /// Atom position for `--sweep alpha`.
    #[arg(long = "x-d")]
    x_d: Option<String>,
    /// Values for `--sweep alpha`: a point count across [0, 1] or a list.
    #[arg(long = "alpha-grid", default_value = "101")]
    alpha_grid: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepArg {
    X,
    Alpha,
}

pub fn force(a: &ForceArgs, ctx: &Context) -> anyhow::Result<(Emit, u8)> {
    let mut echo = ctx.echo.clone();
    let by_alpha = a.sweep == SweepArg::Alpha;
    let p = a.physics.resolve(ctx, &mut echo, by_alpha)?;
    let cons = constraints(&a.constraint)?;
    echo.set("constraint", json!(cons.iter().map(|c| constraint_name(*c)).collect::<Vec<_>>()));
    echo.set("sweep", if by_alpha { "alpha" } else { "x" });

    // (sweep value, atom x, model) per row
    let points: Vec<(f64, f64, CouplingModel)> = if by_alpha {
        if a.x_grid.is_some() {
            bail!("--sweep alpha takes --alpha-grid, not --x-grid");
        }
        let x = match (&a.x_d, &ctx.cfg.x_d) {
            (Some(s), _) => parse_real(s)?,
            (None, Some(n)) => n.value()?,
            (None, None) => bail!("--sweep alpha needs the atom position --x-d"),
        };
        let alphas = parse_grid(&a.alpha_grid, 0.0, 1.0)?;
        echo.set("x_d", x);
        echo.set("alpha_grid", json!(alphas));
        alphas.iter().map(|&al| (al, x, CouplingModel::smeared(al))).collect()
    } else {
        let xs = x_grid(&a.x_grid, ctx, p.length(), "101")?;
        echo.set("x_grid", json!(xs));
        xs.iter().map(|&x| (x, x, p.model)).collect()
    };

    let multi_o = p.omegas.len() > 1;
    let multi_c = cons.len() > 1;
    let var = if by_alpha { "alpha" } else { "x_d" };
    let mut table = Table::new(&key_columns(
        &[("Omega", multi_o), ("constraint", multi_c)],
        &[var, "force", "error_bound", "method", "suspect"],
    ));
    let mut warnings = Warnings::default();
    let mut results = Map::new();
    let mut failures = 0;
    for &omega in &p.omegas {
        for &c in &cons {
            let rows: Vec<Result<ForceResult, Error>> = points
                .par_iter()
                .map(|&(_, x, model)| force_checked(&p.cavity, &p.atom(omega, x), &model, &ctx.ctl, c))
                .collect();
            let mut curve = Vec::with_capacity(rows.len());
            for (&(v, _, _), r) in points.iter().zip(rows) {
                let mut row: Vec<Cell> = Vec::new();
                if multi_o {
                    row.push(omega.into());
                }
                if multi_c {
                    row.push(constraint_name(c).into());
                }
                row.push(v.into());
                match r {
                    Ok(f) => {
                        f.warnings.iter().for_each(|w| warnings.add(w.clone()));
                        if f.derived_extension {
                            warnings.add("Neumann wall forces are derived by differentiating the energy, not published formulas");
                        }
                        curve.push((v, f.value));
                        row.extend([
                            f.value.into(),
                            f.error_bound.into(),
                            method_name(f.method).into(),
                            f.suspect.into(),
                        ]);
                    }
                    Err(err) => {
                        failures += 1;
                        warnings.add(format!("Omega = {omega}, {var} = {v}: {err}"));
                        row.extend([f64::NAN.into(), f64::NAN.into(), "none".into(), false.into()]);
                    }
                }
                table.rows.push(row);
            }
            if by_alpha {
                let key = format!("alpha_star/Omega={omega}/{}", constraint_name(c));
                let atom = p.atom(omega, points.first().map_or(0.0, |q| q.1));
                results.insert(key, alpha_star(&p, &atom, c, &curve, &ctx.ctl)?);
            }
        }
    }
    finish("force", table, echo, results, warnings, failures)
}

/// First sign change along an alpha sweep: interpolated, and refined by
/// bisection for the atom force.
fn alpha_star(p: &Phys, atom: &AtomSpec, c: Constraint, curve: &[(f64, f64)], ctl: &SeriesControl) -> anyhow::Result<Value> {
    let changes: Vec<(f64, f64)> = curve
        .windows(2)
        .filter(|w| w[0].1.signum() != w[1].1.signum())
        .map(|w| (w[0].0, w[1].0))
        .collect();
    let Some(&(lo, hi)) = changes.first() else {
        return Ok(json!({ "sign_changes": 0 }));
    };
    let (f0, f1) = (
        curve.iter().find(|q| q.0 == lo).map_or(0.0, |q| q.1),
        curve.iter().find(|q| q.0 == hi).map_or(0.0, |q| q.1),
    );
    let interp = lo + (hi - lo) * f0 / (f0 - f1);
    let mut out = json!({ "sign_changes": changes.len(), "bracket": [lo, hi], "interpolated": interp });
    if c == Constraint::AtomPosition {
        let refined = alpha_star_bisect(&p.cavity, atom, ctl, lo, hi, 1e-12)?;
        out["bisection"] = json!(refined);
    }
    Ok(out)
}

#[derive(Args)]
pub struct MediumArgs {
    #[command(flatten)]
    physics: Physics,
    /// Largest atom number in the table. Up to 1000 every N gets a row,
    /// beyond that N is sampled eight times per octave.
    #[arg(long = "N-max")]
    n_max: Option<String>,
    /// uniform, left-half, right-half or a bracketed list of positions; a
    /// comma list gives one table block per placement.
    #[arg(long, default_value = "uniform")]
    placement: String,
    /// fixed-ratio or fixed-position; a comma list gives one block each.
    #[arg(long, default_value = "fixed-ratio")]
    constraint: String,
    /// Forces in newtons for a cavity of physical length --L-meters.
    #[arg(long)]
    si: bool,
    #[arg(long = "L-meters")]
    l_meters: Option<String>,
    /// Locate the atom number where the wall force cancels the empty-cavity
    /// Casimir force (uniform placement, up to --N-max).
    #[arg(long = "find-critical")]
    find_critical: bool,
    /// Add the fourth-order force of every pair to the critical scan.
    #[arg(long = "include-pairs")]
    include_pairs: bool,
    /// Fourth-order force of two atoms instead of a medium table.
    #[arg(long)]
    pair: bool,
    /// With --pair: atoms at L/2 -/+ d/2 for separations d = i L / n,
    /// i = 0..n-1.
    #[arg(long = "symmetric-sweep")]
    symmetric_sweep: bool,
    #[arg(long = "sweep-points", default_value_t = 25)]
    sweep_points: usize,
}

enum PlacementArg {
    Uniform,
    LeftHalf,
    RightHalf,
    List(Vec<f64>),
}

impl PlacementArg {
    fn parse(s: &str) -> anyhow::Result<Self> {
        Ok(match s {
            "uniform" => Self::Uniform,
            "left-half" => Self::LeftHalf,
            "right-half" => Self::RightHalf,
            s if s.starts_with('[') => Self::List(parse_grid(s, 0.0, 1.0)?),
            _ => bail!("placement {s:?}: expected uniform, left-half, right-half or [x1,x2,...]"),
        })
    }

    fn name(&self) -> String {
        match self {
            Self::Uniform => "uniform".into(),
            Self::LeftHalf => "left-half".into(),
            Self::RightHalf => "right-half".into(),
            Self::List(xs) => format!("{xs:?}"),
        }
    }

    /// `N` atoms; halves are uniform rows of `N` atoms squeezed into one
    /// half of the cavity.
    fn medium(&self, atom: AtomSpec, n: u64) -> MediumSpec {
        match self {
            Self::Uniform => MediumSpec::uniform(atom, n),
            Self::LeftHalf => MediumSpec::left_half(atom, n),
            Self::RightHalf => MediumSpec::right_half(atom, n),
            Self::List(xs) => MediumSpec::explicit(atom, xs.clone()),
        }
    }
}

fn n_rows(n_max: u64) -> Vec<u64> {
    if n_max <= DENSE_TABLE_MAX {
        (1..=n_max).collect()
    } else {
        scan_grid(n_max)
    }
}

pub fn medium(a: &MediumArgs, ctx: &Context) -> anyhow::Result<(Emit, u8)> {
    let mut echo = ctx.echo.clone();
    let p = a.physics.resolve(ctx, &mut echo, false)?;
    let cons = constraints(&a.constraint)?;
    if cons.contains(&Constraint::AtomPosition) {
        bail!("medium forces are wall forces: use fixed-ratio or fixed-position");
    }
    echo.set("constraint", json!(cons.iter().map(|c| constraint_name(*c)).collect::<Vec<_>>()));

    // natural force units are 1/L^2 with L in the unit the length is given in
    let scale = if a.si {
        let lm = a
            .l_meters
            .as_deref()
            .map(parse_real)
            .transpose()?
            .ok_or_else(|| anyhow!("--si needs --L-meters"))?;
        echo.set("si", true);
        echo.set("L_meters", lm);
        to_si(1.0, Unit::Force, lm / p.length())?
    } else {
        if a.l_meters.is_some() {
            bail!("--L-meters only applies with --si");
        }
        1.0
    };

    if a.pair {
        return pair_sweep(a, &p, &cons, scale, echo);
    }
    if a.symmetric_sweep {
        bail!("--symmetric-sweep needs --pair");
    }

    let n_max = a
        .n_max
        .as_deref()
        .map(parse_count)
        .transpose()?
        .ok_or_else(|| anyhow!("medium tables need --N-max"))?;
    let placements = split_list(&a.placement)
        .into_iter()
        .map(PlacementArg::parse)
        .collect::<anyhow::Result<Vec<_>>>()?;
    for pl in &placements {
        if let PlacementArg::List(xs) = pl {
            if let Some(x) = xs.iter().find(|&&x| !(x > 0.0 && x < p.length())) {
                bail!("placement {}: atom at {x} is not strictly inside (0, {})", pl.name(), p.length());
            }
        }
    }
    echo.set("N_max", n_max);
    echo.set("placement", json!(placements.iter().map(|q| q.name()).collect::<Vec<_>>()));
    if a.find_critical {
        echo.set("find_critical", true);
        if a.include_pairs {
            echo.set("include_pairs", true);
        }
    }

    let multi_o = p.omegas.len() > 1;
    let multi_p = placements.len() > 1;
    let multi_c = cons.len() > 1;
    let mut table = Table::new(&key_columns(
        &[("Omega", multi_o), ("placement", multi_p), ("constraint", multi_c)],
        &["N", "force", "error_bound", "casimir_force", "total_force"],
    ));
    let casimir = empty_casimir_force(p.length()) * scale;
    let mut warnings = Warnings::default();
    let mut results = Map::new();
    let mut failures = 0;
    let mut largest_pws = None;
    for &omega in &p.omegas {
        let template = p.atom(omega, 0.5 * p.length());
        for pl in &placements {
            let ns = match pl {
                PlacementArg::List(xs) => vec![xs.len() as u64],
                _ => n_rows(n_max),
            };
            for &c in &cons {
                let rows: Vec<(Result<ForceResult, Error>, Option<String>)> = ns
                    .par_iter()
                    .map(|&n| {
                        let m = pl.medium(template, n);
                        (medium_wall_force(&p.cavity, &m, &p.model, &ctx.ctl, c), m.pws_warning())
                    })
                    .collect();
                for (&n, (r, pws)) in ns.iter().zip(rows) {
                    // reported once below, for the largest medium
                    if pws.is_some() {
                        largest_pws = pws.clone();
                    }
                    let mut row: Vec<Cell> = Vec::new();
                    if multi_o {
                        row.push(omega.into());
                    }
                    if multi_p {
                        row.push(pl.name().as_str().into());
                    }
                    if multi_c {
                        row.push(constraint_name(c).into());
                    }
                    row.push(n.into());
                    match r {
                        Ok(f) => {
                            f.warnings.iter().filter(|&w| Some(w) != pws.as_ref()).for_each(|w| warnings.add(w.clone()));
                            let v = f.value * scale;
                            row.extend([v.into(), (f.error_bound * scale).into(), casimir.into(), (v + casimir).into()]);
                        }
                        Err(err) => {
                            failures += 1;
                            warnings.add(format!("N = {n}: {err}"));
                            row.extend([f64::NAN.into(), f64::NAN.into(), casimir.into(), f64::NAN.into()]);
                        }
                    }
                    table.rows.push(row);
                }
            }
        }
        if let Some(w) = largest_pws.take() {
            warnings.add(w);
        }
        if n_max == 0 {
            results.insert("medium_force".into(), json!(0.0));
        }
        if a.find_critical && n_max > 0 {
            if !placements.iter().any(|q| matches!(q, PlacementArg::Uniform)) {
                warnings.add("--find-critical uses uniform placement");
            }
            let opts = CriticalOptions {
                include_pairs: a.include_pairs,
                pair_control: None,
            };
            for &c in &cons {
                let key = if multi_o {
                    format!("critical/Omega={omega}/{}", constraint_name(c))
                } else {
                    format!("critical/{}", constraint_name(c))
                };
                let v = match critical_atom_number_with(&p.cavity, &template, &p.model, &ctx.ctl, c, n_max, &opts) {
                    Ok(r) => {
                        r.warnings.iter().for_each(|w| warnings.add(w.clone()));
                        json!({ "n_star": r.n_star, "bracket": [r.bracket.0, r.bracket.1] })
                    }
                    Err(e @ Error::NoCrossing { .. }) => {
                        warnings.add(format!("{}: {e}", constraint_name(c)));
                        json!({ "error": "NoCrossing", "detail": e.to_string() })
                    }
                    Err(e) => return Err(e).context("critical atom number"),
                };
                results.insert(key, v);
            }
        }
    }
    let mut emit = finish("medium", table, echo, results, warnings, failures)?;
    if a.si {
        emit.0.body = [b"# forces in newtons\n".as_slice(), &emit.0.body].concat();
    }
    Ok(emit)
}

fn pair_sweep(
    a: &MediumArgs,
    p: &Phys,
    cons: &[Constraint],
    scale: f64,
    mut echo: Echo,
) -> anyhow::Result<(Emit, u8)> {
    if !a.symmetric_sweep {
        bail!("--pair supports the --symmetric-sweep geometry");
    }
    if a.sweep_points == 0 {
        bail!("--sweep-points must be at least 1");
    }
    let l = p.length();
    let ds: Vec<f64> = (0..a.sweep_points).map(|i| l * i as f64 / a.sweep_points as f64).collect();
    echo.set("pair", "symmetric-sweep");
    echo.set("separations", json!(ds));

    let multi_o = p.omegas.len() > 1;
    let multi_c = cons.len() > 1;
    let mut table = Table::new(&key_columns(
        &[("Omega", multi_o), ("constraint", multi_c)],
        &["separation", "x_a", "x_b", "force", "error_bound", "method"],
    ));
    let ctl = PairControl::default();
    let mut warnings = Warnings::default();
    let mut failures = 0;
    for &omega in &p.omegas {
        for &c in cons {
            let rows: Vec<Result<ForceResult, Error>> = ds
                .par_iter()
                .map(|&d| {
                    let pair = PairSpec::new(0.5 * (l - d), 0.5 * (l + d), omega, p.lambda);
                    pair_wall_force(&p.cavity, &pair, &ctl, c)
                })
                .collect();
            for (&d, r) in ds.iter().zip(rows) {
                let mut row: Vec<Cell> = Vec::new();
                if multi_o {
                    row.push(omega.into());
                }
                if multi_c {
                    row.push(constraint_name(c).into());
                }
                row.extend([d.into(), (0.5 * (l - d)).into(), (0.5 * (l + d)).into()]);
                match r {
                    Ok(f) => {
                        f.warnings.iter().for_each(|w| warnings.add(w.clone()));
                        row.extend([(f.value * scale).into(), (f.error_bound * scale).into(), method_name(f.method).into()]);
                    }
                    Err(err) => {
                        failures += 1;
                        warnings.add(format!("separation {d}: {err}"));
                        row.extend([f64::NAN.into(), f64::NAN.into(), "none".into()]);
                    }
                }
                table.rows.push(row);
            }
        }
    }
    finish("medium", table, echo, Map::new(), warnings, failures)
}

#[derive(Args)]
pub struct ValidateArgs {
    /// Seed of the random parameter sets.
    #[arg(long, default_value_t = ValidateOptions::default().seed)]
    seed: u64,
    /// Random parameter sets per randomized check.
    #[arg(long, default_value_t = 10)]
    samples: usize,
    /// Exit with status 1 when any check fails.
    #[arg(long)]
    strict: bool,
    #[arg(long = "inject-fault", value_enum, hide = true)]
    inject_fault: Option<FaultArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FaultArg {
    FixedPositionSign,
}

pub fn validate(a: &ValidateArgs, ctx: &Context) -> anyhow::Result<(Emit, u8)> {
    let mut echo = ctx.echo.clone();
    echo.set("seed", a.seed);
    echo.set("samples", a.samples as u64);
    echo.set("strict", a.strict);
    let fault = a.inject_fault.map(|FaultArg::FixedPositionSign| Fault::FixedPositionSign);
    if fault.is_some() {
        echo.set("inject_fault", "fixed-position-sign");
    }
    let report = validate::run(&ValidateOptions {
        seed: a.seed,
        samples: a.samples,
        control: ctx.ctl,
        fault,
    });
    let mut body = serde_json::to_string_pretty(&report)?;
    body.push('\n');
    let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    let mut results = Map::new();
    results.insert("passed".into(), json!(report.passed));
    results.insert("failed_checks".into(), json!(failed));
    let warnings = failed.iter().map(|n| format!("check failed: {n}")).collect();
    let code = if a.strict && !report.passed { VALIDATION_FAILURE } else { 0 };
    Ok((
        Emit {
            command: "validate",
            body: body.into_bytes(),
            echo,
            results,
            warnings,
        },
        code,
    ))
}

#[derive(Args)]
pub struct ConvertArgs {
    /// Natural-unit values, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    value: String,
    #[arg(long, value_enum)]
    unit: UnitArg,
    /// Physical cavity length in meters.
    #[arg(long = "L-meters")]
    l_meters: String,
    /// Cavity length in the natural unit the values refer to.
    #[arg(long = "L", default_value = "1")]
    length: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitArg {
    Energy,
    Force,
}

pub fn convert(a: &ConvertArgs, ctx: &Context) -> anyhow::Result<(Emit, u8)> {
    let mut echo = ctx.echo.clone();
    let values = parse_reals(&a.value)?;
    let lm = parse_real(&a.l_meters)?;
    let length = parse_real(&a.length)?;
    if !(length > 0.0) {
        bail!("--L must be > 0");
    }
    let (unit, si_name) = match a.unit {
        UnitArg::Energy => (Unit::Energy, "J"),
        UnitArg::Force => (Unit::Force, "N"),
    };
    echo.set("unit", if unit == Unit::Energy { "energy" } else { "force" });
    echo.set("L", length);
    echo.set("L_meters", lm);
    let mut table = Table::new(&["value", "si_value", "si_unit"]);
    for v in values {
        table.rows.push(vec![v.into(), to_si(v, unit, lm / length)?.into(), si_name.into()]);
    }
    finish("convert", table, echo, Map::new(), Warnings::default(), 0)
}
