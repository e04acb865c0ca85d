//! Acceptance criteria 1 to 8, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`) so the lines are printed on
//! every run: `cargo test -p casimir-cavity --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use casimir_cavity::energy::{boundary_sum_rule, energy_closed_form, energy_series, sum_rule_value};
use casimir_cavity::force::{alpha_sweep, fd_force, force, force_checked, Constraint, ForceMethod};
use casimir_cavity::medium::{
    critical_atom_number, empty_casimir_force, medium_energy, medium_wall_force, pair_wall_force,
    pair_wall_force_fd, MediumSpec, PairControl, PairSpec,
};
use casimir_cavity::specfun::{
    digamma, gauss_2f1, gen_harmonic, inc_beta, lerch_phi, Accelerator, Complex64, SeriesAccuracy, EULER_GAMMA,
};
use casimir_cavity::sum::Neumaier;
use casimir_cavity::{AtomSpec, Boundary, CavitySpec, CouplingModel, SeriesControl};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn cavity(rng: &mut ChaCha8Rng, boundary: Boundary) -> CavitySpec {
    CavitySpec {
        length: rng.random_range(0.5..2.0),
        boundary,
    }
}

/// `L Omega / pi` in `[1, 8]`, `x / L` in `[0.05, 0.95]`, `a0 / L` in
/// `[1e-3, 2e-2]`.
fn atom(rng: &mut ChaCha8Rng, cav: &CavitySpec) -> AtomSpec {
    let l = cav.length;
    AtomSpec {
        x: l * rng.random_range(0.05..0.95),
        omega: PI * rng.random_range(1.0..8.0) / l,
        lambda: 10f64.powf(rng.random_range(-5.0..-3.0)),
        a0: l * 10f64.powf(rng.random_range(-3.0..-1.7)),
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn closed_form_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ctl = SeriesControl::default();
    let cases = [
        ("dirichlet bare", Boundary::Dirichlet, CouplingModel::bare()),
        ("dirichlet smeared", Boundary::Dirichlet, CouplingModel::smeared(1.0)),
        ("neumann bare", Boundary::Neumann, CouplingModel::bare()),
        ("neumann smeared", Boundary::Neumann, CouplingModel::smeared(1.0)),
    ];
    let mut worst = (0.0, "");
    for (name, boundary, model) in cases {
        for _ in 0..20 {
            let cav = cavity(&mut rng, boundary);
            let a = atom(&mut rng, &cav);
            let s = match energy_series(&cav, &a, &model, &ctl) {
                Ok((s, _)) => s.value,
                Err(e) => return outcome(false, format!("{name}: series failed: {e}")),
            };
            let c = match energy_closed_form(&cav, &a, &model) {
                Ok(c) => c.value,
                Err(e) => return outcome(false, format!("{name}: closed form failed: {e}")),
            };
            let r = (s - c).abs() / s.abs();
            if r > worst.0 {
                worst = (r, name);
            }
        }
    }
    let t = secs(start.elapsed());
    outcome(
        worst.0 < 1e-8 && t < 10.0,
        format!("80 sets, worst relative gap {:.2e} ({}), {t:.1} s", worst.0, worst.1),
    )
}

fn sum_rule() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ctl = SeriesControl::default();
    let bare = CouplingModel::bare();
    let mut worst_spread: f64 = 0.0;
    let mut worst_value: f64 = 0.0;
    for _ in 0..5 {
        let d = cavity(&mut rng, Boundary::Dirichlet);
        let n = CavitySpec::neumann(d.length);
        let template = atom(&mut rng, &d);
        let sums = (0..20)
            .map(|_| boundary_sum_rule(&d, &n, &template.at(d.length * rng.random_range(0.01..0.99)), &bare, &ctl))
            .collect::<Result<Vec<_>, _>>();
        let sums = match sums {
            Ok(s) => s,
            Err(e) => return outcome(false, e.to_string()),
        };
        let mean = sums.iter().sum::<f64>() / sums.len() as f64;
        let var = sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / sums.len() as f64;
        worst_spread = worst_spread.max(var.sqrt() / mean.abs());
        let lam2 = template.lambda * template.lambda;
        let c = d.length * template.omega / PI;
        let want = -lam2 * gen_harmonic(c).unwrap() / (PI * template.omega);
        worst_value = worst_value.max(rel(mean, want));
    }
    // L Omega / pi = 1: H(1) = 1 and the value is -lambda^2 / pi^2 in units of 1/L
    let cav = CavitySpec::dirichlet(1.0);
    let unit = AtomSpec::new(0.3, PI, 1e-4, 0.0);
    let h1 = gen_harmonic(1.0).unwrap();
    let v = sum_rule_value(&cav, &unit, &bare, &ctl).unwrap();
    let at_one = rel(v, -1e-8 / (PI * PI));
    let series = boundary_sum_rule(&cav, &CavitySpec::neumann(1.0), &unit, &bare, &ctl).unwrap();
    let series_gap = rel(series, -1e-8 / (PI * PI));
    outcome(
        worst_spread < 1e-10 && worst_value < 1e-10 && h1 == 1.0 && at_one < 1e-15 && series_gap < 1e-10,
        format!(
            "spread/|mean| {worst_spread:.2e}, value gap {worst_value:.2e}; at L Omega/pi = 1: H = {h1}, closed gap {at_one:.1e}, series gap {series_gap:.1e}"
        ),
    )
}

fn casimir_force() -> Outcome {
    let f = empty_casimir_force(1.0);
    outcome((f + 0.130_899_69).abs() < 1e-7, format!("F_C(L = 1) = {f:.10}"))
}

fn force_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ctl = SeriesControl::default();
    let mut worst = (0.0, String::new());
    let mut suspects = 0;
    let mut combos = 0;
    for boundary in [Boundary::Dirichlet, Boundary::Neumann] {
        for (mname, model) in [("bare", CouplingModel::bare()), ("smeared", CouplingModel::smeared(1.0))] {
            for constraint in [Constraint::FixedRatio, Constraint::FixedPosition, Constraint::AtomPosition] {
                combos += 1;
                for _ in 0..10 {
                    let cav = cavity(&mut rng, boundary);
                    let a = atom(&mut rng, &cav);
                    let what = format!("{boundary:?} {mname} {constraint:?} at x/L = {:.3}", a.x / cav.length);
                    let (an, fd) = match (force(&cav, &a, &model, &ctl, constraint), fd_force(&cav, &a, &model, &ctl, constraint)) {
                        (Ok(an), Ok(fd)) => (an, fd),
                        (Err(e), _) | (_, Err(e)) => return outcome(false, format!("{what}: {e}")),
                    };
                    // the finite difference carries its own rounding bound
                    let gap = ((an.value - fd.value).abs() - fd.error_bound - an.error_bound).max(0.0)
                        / an.value.abs().max(fd.value.abs());
                    if gap > worst.0 {
                        worst = (gap, what.clone());
                    }
                    let checked = match force_checked(&cav, &a, &model, &ctl, constraint) {
                        Ok(c) => c,
                        Err(e) => return outcome(false, format!("{what}: {e}")),
                    };
                    if checked.suspect {
                        suspects += 1;
                        let backed = checked.method == ForceMethod::Fd && checked.fd_value == Some(fd.value);
                        if !backed {
                            return outcome(false, format!("{what}: suspect without a finite-difference result"));
                        }
                    }
                }
            }
        }
    }
    outcome(
        worst.0 <= 1e-6,
        format!(
            "{combos} combinations x 10 sets, worst excess {:.2e}{}, {suspects} suspect",
            worst.0,
            if worst.0 > 0.0 { format!(" ({})", worst.1) } else { String::new() }
        ),
    )
}

fn signs() -> Outcome {
    let start = Instant::now();
    let ctl = SeriesControl::default();
    let bare = CouplingModel::bare();
    let smeared = CouplingModel::smeared(1.0);
    let atom = AtomSpec::new(0.5, 2.0 * PI, 1e-4, 1e-3);
    let d = CavitySpec::dirichlet(1.0);
    let n = CavitySpec::neumann(1.0);
    // 21 points with L/2 at index 10 and the walls at the ends
    let xs: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let energies = |cav: &CavitySpec, m: &CouplingModel| -> Vec<f64> {
        xs.iter().map(|&x| energy_series(cav, &atom.at(x), m, &ctl).unwrap().0.value).collect()
    };
    let inner = |v: &[f64]| v[1..v.len() - 1].to_vec();
    let mid = 9;
    let mut failures = Vec::new();

    let ed = energies(&d, &bare);
    let edi = inner(&ed);
    if !(ed[0] == 0.0 && ed[20] == 0.0 && edi.iter().all(|&e| e < 0.0) && edi.iter().all(|&e| e >= edi[mid])) {
        failures.push("dirichlet bare: zeros at the walls, minimum at L/2");
    }
    let es = inner(&energies(&d, &smeared));
    if !(es.iter().all(|&e| e > 0.0) && es.iter().all(|&e| e <= es[mid])) {
        failures.push("dirichlet smeared: positive, maximum at L/2");
    }
    // Neumann: the position dependence mirrors Dirichlet
    let en = inner(&energies(&n, &bare));
    let ens = inner(&energies(&n, &smeared));
    if !(en.iter().all(|&e| e <= en[mid]) && ens.iter().all(|&e| e >= ens[mid])) {
        failures.push("neumann: extremum at L/2 inverted");
    }

    let grid: Vec<f64> = (1..=20).map(|i| (i as f64 - 0.5) / 20.0).collect();
    let ratio = |m: &CouplingModel| -> Vec<f64> {
        grid.iter()
            .map(|&x| force(&d, &atom.at(x), m, &ctl, Constraint::FixedRatio).unwrap().value)
            .collect()
    };
    if !ratio(&bare).iter().all(|&f| f >= 0.0) {
        failures.push("bare fixed-ratio force >= 0");
    }
    if !ratio(&smeared).iter().all(|&f| f <= 0.0) {
        failures.push("smeared fixed-ratio force <= 0");
    }

    let alphas: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let sweep = alpha_sweep(&d, &atom.at(0.1), &ctl, &alphas).unwrap();
    let changes = sweep
        .points
        .windows(2)
        .filter(|w| (w[0].1.value > 0.0) != (w[1].1.value > 0.0))
        .count();
    if changes != 1 {
        failures.push("atom force at x/L = 0.1 changes sign once in alpha");
    }
    let t = secs(start.elapsed());
    if t >= 30.0 {
        failures.push("runtime under 30 s");
    }
    let detail = if failures.is_empty() {
        format!(
            "7 patterns hold, alpha* ~ {:.4}, {t:.1} s",
            sweep.alpha_star.unwrap_or(f64::NAN)
        )
    } else {
        format!("violated: {}; {t:.1} s", failures.join("; "))
    };
    outcome(failures.is_empty(), detail)
}

fn fig6_oracle(key: &str) -> f64 {
    let v: serde_json::Value = serde_json::from_str(include_str!("oracles/values.json")).unwrap();
    v["medium"][format!("fig6_{key}")]["n_star"].as_f64().unwrap()
}

fn medium() -> Outcome {
    let ctl = SeriesControl::default();
    let cav = CavitySpec::dirichlet(1.0);
    let bare = CouplingModel::bare();
    let atom = AtomSpec::new(0.5, 2.0 * PI, 1e-4, 0.0);
    let mut parts = Vec::new();

    let xs = [0.07, 0.21, 0.38, 0.5, 0.66, 0.81, 0.97];
    let total = medium_energy(&cav, &MediumSpec::explicit(atom, xs.to_vec()), &bare, &ctl).unwrap().value;
    let single: Neumaier = xs
        .iter()
        .map(|&x| energy_series(&cav, &atom.at(x), &bare, &ctl).unwrap().0.value)
        .collect();
    let additivity = rel(total, single.value());
    let additive = additivity <= 8.0 * f64::EPSILON;
    parts.push(format!("additivity {additivity:.1e}"));

    // least-squares line through F(N), N = 1..100
    let fs: Vec<(f64, f64)> = (1..=100u64)
        .map(|n| {
            let f = medium_wall_force(&cav, &MediumSpec::uniform(atom, n), &bare, &ctl, Constraint::FixedRatio).unwrap();
            (n as f64, f.value)
        })
        .collect();
    let k = fs.len() as f64;
    let (sx, sy) = fs.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / k, sy / k);
    let sxx: f64 = fs.iter().map(|&(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = fs.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let scale = fs.iter().map(|&(_, y)| y.abs()).fold(0.0, f64::max);
    let affine_gap = fs
        .iter()
        .map(|&(x, y)| (y - (my + slope * (x - mx))).abs() / scale)
        .fold(0.0, f64::max);
    let affine = affine_gap <= 1e-6;
    parts.push(format!("affine residual {affine_gap:.2e}"));

    let fig6 = AtomSpec::new(0.5, 2.0 * PI, 2.0 * PI * 1e-6, 0.0);
    let mut critical = true;
    for (key, c) in [("ratio", Constraint::FixedRatio), ("position", Constraint::FixedPosition)] {
        match critical_atom_number(&cav, &fig6, &bare, &ctl, c, 200_000_000_000) {
            Ok(r) => {
                let gap = (r.n_star - fig6_oracle(key)).abs();
                critical &= gap < 1.0;
                parts.push(format!("N*_{key} = {:.2} (oracle gap {gap:.1e})", r.n_star));
            }
            Err(e) => {
                critical = false;
                parts.push(format!("{key}: {e}"));
            }
        }
    }
    outcome(additive && affine && critical, parts.join(", "))
}

fn fourth_order() -> Outcome {
    let cav = CavitySpec::dirichlet(1.0);
    let (omega, lambda) = (2.0 * PI, 1e-4);
    let ctl = PairControl::default();
    let mut min_force = f64::INFINITY;
    for constraint in [Constraint::FixedRatio, Constraint::FixedPosition] {
        for i in 0..25 {
            let d = i as f64 / 25.0;
            let p = PairSpec::new((1.0 - d) / 2.0, (1.0 + d) / 2.0, omega, lambda);
            match pair_wall_force(&cav, &p, &ctl, constraint) {
                Ok(f) => min_force = min_force.min(f.value),
                Err(e) => return outcome(false, format!("pair sweep at d = {d}: {e}")),
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let p = PairSpec::new(rng.random_range(0.05..0.95), rng.random_range(0.05..0.95), omega, lambda);
        let an = pair_wall_force(&cav, &p, &ctl, Constraint::FixedRatio);
        let fd = pair_wall_force_fd(&cav, &p, &ctl, Constraint::FixedRatio);
        match (an, fd) {
            (Ok(a), Ok(f)) => worst = worst.max(rel(a.value, f.value)),
            (Err(e), _) | (_, Err(e)) => return outcome(false, e.to_string()),
        }
    }
    outcome(
        min_force > 0.0 && worst < 1e-5,
        format!("smallest sweep force {min_force:.3e}, worst analytic/FD gap {worst:.2e}"),
    )
}

fn specfun() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut identity: f64 = 0.0;
    let acc = SeriesAccuracy::with_tol(1e-14);
    let one = Complex64::new(1.0, 0.0);
    for _ in 0..100 {
        let z = Complex64::from_polar(1.0, rng.random_range(0.01..2.0 * PI - 0.01));
        let a = Complex64::new(rng.random_range(0.5..20.0), rng.random_range(-400.0..400.0));
        let s = if rng.random_bool(0.5) { 1.0 } else { 2.0 };
        let v = lerch_phi(z, s, a, &acc).unwrap();
        let w = lerch_phi(z.conj(), s, a.conj(), &acc).unwrap();
        identity = identity.max(((v.value - w.value.conj()).norm() - v.error - w.error).max(0.0) / v.value.norm());

        // 2F1(1, b; b + 1; z) = b Phi(z, 1, b), through the general series
        let b = Complex64::new(rng.random_range(0.5..5.0), rng.random_range(-5.0..5.0));
        let zi = z * rng.random_range(0.1..0.85);
        let general = SeriesAccuracy {
            accelerator: Accelerator::None,
            ..acc
        };
        let f = gauss_2f1(one, b, b + 1.0, zi, &general).unwrap();
        let p = lerch_phi(zi, 1.0, b, &acc).unwrap();
        identity = identity.max(((f.value - b * p.value).norm() - f.error - b.norm() * p.error).max(0.0) / f.value.norm());

        let q = Complex64::new(rng.random_range(-20.0..20.0), rng.random_range(-50.0..50.0));
        if q.norm() > 0.1 {
            let lhs = digamma(q + 1.0).unwrap();
            let rhs = digamma(q).unwrap() + 1.0 / q;
            identity = identity.max((lhs - rhs).norm() / lhs.norm().max(1.0) / 1e2);
        }
        let x = rng.random_range(0.0..50.0);
        let h = gen_harmonic(x).unwrap();
        let psi = digamma(Complex64::new(x + 1.0, 0.0)).unwrap().re + EULER_GAMMA;
        identity = identity.max((h - psi).abs() / h.abs().max(1.0) / 1e2);
    }
    let identities = identity <= 1e-12;

    // reported error against a tighter re-evaluation
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let loose = SeriesAccuracy::with_tol(1e-8);
    let tight = SeriesAccuracy::with_tol(1e-15);
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..100 {
        let z = Complex64::from_polar(1.0, rng.random_range(0.01..2.0 * PI - 0.01));
        let a = Complex64::new(rng.random_range(0.5..20.0), rng.random_range(-400.0..400.0));
        let s = if rng.random_bool(0.5) { 1.0 } else { 2.0 };
        let (v, r) = (lerch_phi(z, s, a, &loose).unwrap(), lerch_phi(z, s, a, &tight).unwrap());
        worst_ratio = worst_ratio.max((v.value - r.value).norm() / (v.error + r.error));

        let b = 1.0 / (PI * 10f64.powf(rng.random_range(-3.0..-1.0)));
        let ib = Complex64::new(1.0, b);
        let (v, r) = (gauss_2f1(one, ib, ib + 1.0, z, &loose).unwrap(), gauss_2f1(one, ib, ib + 1.0, z, &tight).unwrap());
        worst_ratio = worst_ratio.max((v.value - r.value).norm() / (v.error + r.error));

        let c = rng.random_range(1.0..8.0);
        let p = Complex64::new(c + 1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let (v, r) = (inc_beta(z, p, zero, &loose).unwrap(), inc_beta(z, p, zero, &tight).unwrap());
        worst_ratio = worst_ratio.max((v.value - r.value).norm() / (v.error + r.error));
    }
    let bounds = worst_ratio <= 1.0;
    outcome(
        identities && bounds,
        format!("worst identity residual {identity:.1e} (tol 1e-12), worst |error| / bound {worst_ratio:.2e} over 300 evaluations"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("closed-form equivalence", closed_form_equivalence),
        ("boundary sum rule", sum_rule),
        ("empty-cavity Casimir force", casimir_force),
        ("force / energy consistency", force_consistency),
        ("sign structure", signs),
        ("medium", medium),
        ("fourth order", fourth_order),
        ("special functions", specfun),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        if !o.passed {
            failed += 1;
        }
        println!(
            "{} criterion {} ({name}): {} [{:.1} s]",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            secs(t.elapsed())
        );
    }
    let total = secs(start.elapsed());
    println!("acceptance: {}/8 passed in {total:.1} s", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
