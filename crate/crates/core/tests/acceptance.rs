//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::f64::consts::FRAC_PI_6;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use equiaffine::expr::{parse, Expr};
use equiaffine::generator::{generate, improper_sphere_phi, GeneratorInput, Preset};
use equiaffine::grid::{GridSpec, SurfaceGrid};
use equiaffine::invariants::{
    analyze, h_form, residual_gauge, run_ladder, AnalysisOptions, SurfaceSource, SurfaceType, L12_MISMATCH_TOL,
};
use equiaffine::io::grid_to_obj;
use equiaffine::linalg::Vec3;
use equiaffine::frames::SurfaceJet;
use equiaffine::stencil::linspace;
use equiaffine::verify::{
    cross_check_closed_form, normals_constant, verify_flat_minimal, verify_grid, verify_mc_normal_form, VerifyOptions,
    ANALYTIC_TOL,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x5eed_a11e;
const RK_STEP: f64 = 1e-3;

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn(&Fixtures) -> Outcome);

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn expr(src: &str) -> Expr {
    parse(src).expect("fixed expression")
}

fn components(src: &str) -> [Expr; 3] {
    let p: Vec<Expr> = src.split(';').map(expr).collect();
    [p[0].clone(), p[1].clone(), p[2].clone()]
}

fn gen(ell: &str, f: &str, spec: GridSpec) -> Result<SurfaceGrid, String> {
    let input = GeneratorInput::new(parse(ell).map_err(err)?, parse(f).map_err(err)?, spec, RK_STEP).map_err(err)?;
    generate(&input).map_err(err)
}

fn obj_ok(grid: &SurfaceGrid) -> Result<bool, String> {
    let (v, f) = common::obj_counts(&grid_to_obj(grid).map_err(err)?)?;
    Ok(v == grid.nu() * grid.nv() && f == 2 * (grid.nu() - 1) * (grid.nv() - 1))
}

/// Surfaces shared between criteria.
struct Fixtures {
    cubic: SurfaceGrid,
    cosh: SurfaceGrid,
    cos: SurfaceGrid,
    figure: SurfaceGrid,
    random: Vec<(String, String, SurfaceGrid)>,
    random_elapsed: Duration,
}

fn fixtures() -> Result<Fixtures, String> {
    let wide = GridSpec::new((-1.0, 1.0), (-1.0, 1.0), 11, 401).map_err(err)?;
    let narrow = GridSpec::new((-1.0, 1.0), (-0.5, 0.5), 9, 321).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let pairs: Vec<(String, String)> = (0..20)
        .map(|_| (common::random_coefficient(&mut rng), common::random_coefficient(&mut rng)))
        .collect();
    let t = Instant::now();
    let random = pairs
        .into_iter()
        .map(|(ell, f)| gen(&ell, &f, narrow).map(|g| (ell, f, g)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Fixtures {
        cubic: gen("0", "6", GridSpec::square(-1.0, 1.0, 41).map_err(err)?)?,
        cosh: gen("9", "0", wide)?,
        cos: gen("-9", "0", wide)?,
        figure: gen("9", "32*sin(8*v)", GridSpec::new((-1.0, 1.0), (-0.5, 0.5), 9, 401).map_err(err)?)?,
        random,
        random_elapsed: t.elapsed(),
    })
}

fn saddle_exactness(_: &Fixtures) -> Outcome {
    let comps = components("u;v;u*v");
    let axis = linspace(-1.0, 1.0, 50);
    let t = Instant::now();
    let a = analyze(
        SurfaceSource::Analytic {
            components: &comps,
            u: &axis,
            v: &axis,
        },
        &AnalysisOptions::default(),
    )
    .map_err(err)?;
    let elapsed = t.elapsed();
    let all_hyperbolic = a.count(SurfaceType::Hyperbolic) == a.reports.len();
    let h_err = a
        .reports
        .iter()
        .map(|r| r.h.h11.abs().max((r.h.h12 - 1.0).abs()).max(r.h.h22.abs()))
        .fold(0.0, f64::max);
    let k = a.max_abs_k().map_or(f64::NAN, |x| x.0);
    let h = a.max_abs_h().map_or(f64::NAN, |x| x.0);
    let normals: Vec<Vec3> = a.reports.iter().filter_map(|r| r.affine_normal).collect();
    let (improper, dev) = normals_constant(&normals, 0, ANALYTIC_TOL);
    let spec = GridSpec::square(-1.0, 1.0, 50).map_err(err)?;
    let mesh = obj_ok(&SurfaceGrid::sample(&spec, |u, v| Ok(Vec3::new(u, v, u * v))).map_err(err)?)?;
    let passed = all_hyperbolic
        && h_err <= 1e-12
        && k <= 1e-12
        && h <= 1e-12
        && normals.len() == 2500
        && improper
        && elapsed < Duration::from_secs(1)
        && mesh;
    Ok((
        passed,
        format!(
            "hyperbolic {all_hyperbolic}, |h-(0,1,0)| {h_err:.1e}, max|K| {k:.1e}, max|H| {h:.1e}, \
             improper sphere {improper} (normal spread {dev:.1e}), {:.0} ms on 50x50, OBJ {mesh}",
            elapsed.as_secs_f64() * 1e3
        ),
    ))
}

fn cubic_example(fx: &Fixtures) -> Outcome {
    let comps = components("u+3*v^2; v; u*v+v^3");
    let g = &fx.cubic;
    let mut worst = 0.0f64;
    for iv in 0..g.nv() {
        for iu in 0..g.nu() {
            let (u, v) = (g.u[iu], g.v[iv]);
            let want = Vec3::new(
                comps[0].eval(u, v).map_err(err)?,
                comps[1].eval(u, v).map_err(err)?,
                comps[2].eval(u, v).map_err(err)?,
            );
            worst = worst.max((g.point(iu, iv) - want).max_abs());
        }
    }
    let mesh = obj_ok(g)?;
    Ok((worst <= 1e-9 && mesh, format!("max deviation {worst:.2e} on 41x41, OBJ {mesh}")))
}

fn cosh_example(fx: &Fixtures) -> Outcome {
    let preset = Preset::from_name("cosh", Some(3.0), None).map_err(err)?;
    let spec = GridSpec::new((-1.0, 1.0), (-1.0, 1.0), 11, 401).map_err(err)?;
    let e1 = cross_check_closed_form(&preset, &spec, RK_STEP).map_err(err)?.max_deviation;
    let e2 = cross_check_closed_form(&preset, &spec, RK_STEP / 2.0).map_err(err)?.max_deviation;
    let ratio = e1 / e2;
    let mesh = obj_ok(&fx.cosh)?;
    Ok((
        e1 <= 1e-6 && (12.0..=20.0).contains(&ratio) && mesh,
        format!("deviation {e1:.2e} at step 1e-3, {e2:.2e} at 5e-4, ratio {ratio:.2}, OBJ {mesh}"),
    ))
}

fn cos_example(fx: &Fixtures) -> Outcome {
    let preset = Preset::from_name("cos", Some(3.0), None).map_err(err)?;
    let spec = GridSpec::new((-1.0, 1.0), (-1.0, 1.0), 11, 401).map_err(err)?;
    let dev = cross_check_closed_form(&preset, &spec, RK_STEP).map_err(err)?.max_deviation;
    let at = GridSpec::new((0.0, 1.0), (0.0, FRAC_PI_6), 2, 2).map_err(err)?;
    let want = Vec3::new(0.0, FRAC_PI_6, 1.0 / 3.0);
    let closed = (preset.grid(&at, RK_STEP).map_err(err)?.point(1, 1) - want).max_abs();
    let ode = (gen("-9", "0", at)?.point(1, 1) - want).max_abs();
    let mesh = obj_ok(&fx.cos)?;
    Ok((
        dev <= 1e-6 && closed <= 1e-6 && ode <= 1e-6 && mesh,
        format!("deviation {dev:.2e}; at (1, pi/6): closed form off by {closed:.1e}, ODE off by {ode:.1e}; OBJ {mesh}"),
    ))
}

fn random_pairs_end_to_end(fx: &Fixtures) -> Outcome {
    let t = Instant::now();
    let mut failures = Vec::new();
    let (mut k, mut h) = (0.0f64, 0.0f64);
    for (ell, f, g) in &fx.random {
        let (records, a) = verify_flat_minimal(SurfaceSource::Grid(g), 1e-5, &AnalysisOptions::default()).map_err(err)?;
        if !records.iter().all(|r| r.passed) {
            failures.push(format!("l = {ell}, f = {f}"));
        }
        k = k.max(a.max_abs_k().map_or(f64::INFINITY, |x| x.0));
        h = h.max(a.max_abs_h().map_or(f64::INFINITY, |x| x.0));
    }
    let elapsed = fx.random_elapsed + t.elapsed();
    Ok((
        failures.is_empty() && elapsed < Duration::from_secs(60),
        format!(
            "{}/20 pairs pass, max|K| {k:.1e}, max|H| {h:.1e}, {:.1} s{}",
            20 - failures.len(),
            elapsed.as_secs_f64(),
            if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join("; ")) }
        ),
    ))
}

fn mc_normal_form(fx: &Fixtures) -> Outcome {
    let mut cases: Vec<(String, String, &SurfaceGrid)> = vec![
        ("0".into(), "6".into(), &fx.cubic),
        ("9".into(), "0".into(), &fx.cosh),
        ("-9".into(), "0".into(), &fx.cos),
        ("9".into(), "32*sin(8*v)".into(), &fx.figure),
    ];
    cases.extend(fx.random.iter().map(|(l, f, g)| (l.clone(), f.clone(), g)));
    let mut worst = (0.0f64, String::new());
    let mut failed = Vec::new();
    for (ell, f, g) in &cases {
        let rec = verify_mc_normal_form(g, &expr(ell), &expr(f), 1e-6).map_err(err)?;
        let r = rec.max_residual.unwrap_or(f64::INFINITY);
        if r > worst.0 {
            worst = (r, rec.worst.and_then(|w| w.entry).unwrap_or_default());
        }
        if !rec.passed {
            failed.push(format!("l = {ell}, f = {f}: {}", rec.detail.unwrap_or_default()));
        }
    }
    Ok((
        failed.is_empty(),
        format!(
            "{} surfaces, worst entry residual {:.2e} ({}){}",
            cases.len(),
            worst.0,
            worst.1,
            if failed.is_empty() { String::new() } else { format!("; failing: {}", failed.join("; ")) }
        ),
    ))
}

fn equiaffine_invariance(fx: &Fixtures) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 7);
    let spec = GridSpec::new((-1.0, 1.0), (-0.5, 0.5), 9, 81).map_err(err)?;
    let (mut dk, mut dh) = (0.0f64, 0.0f64);
    let mut changed = Vec::new();
    for (ell, f, _) in fx.random.iter().take(5) {
        let g = gen(ell, f, spec)?;
        let a = common::random_sl3(&mut rng);
        let b = common::random_translation(&mut rng);
        let moved = g.transformed(&a, &b);
        let opts = VerifyOptions {
            ell: Some(expr(ell)),
            f: Some(expr(f)),
            ..VerifyOptions::default()
        };
        let (r0, a0) = verify_grid(&g, &opts).map_err(err)?;
        let (r1, a1) = verify_grid(&moved, &opts).map_err(err)?;
        for (c0, c1) in r0.checks.iter().zip(&r1.checks) {
            if c0.name != c1.name || c0.passed != c1.passed {
                changed.push(format!("{} on l = {ell}", c0.name));
            }
        }
        if r0.checks.len() != r1.checks.len() || a0.affine_computed() != a1.affine_computed() {
            changed.push(format!("report shape on l = {ell}"));
        }
        for (p, q) in a0.reports.iter().zip(&a1.reports) {
            let diff = |x: Option<f64>, y: Option<f64>| match (x, y) {
                (Some(x), Some(y)) => (x - y).abs(),
                (None, None) => 0.0,
                _ => f64::INFINITY,
            };
            dk = dk.max(diff(p.k_aff, q.k_aff));
            dh = dh.max(diff(p.h_aff, q.h_aff));
        }
    }
    Ok((
        changed.is_empty() && dk <= 1e-7 && dh <= 1e-7,
        format!(
            "5 surfaces x random SL(3)+translation: max|dK| {dk:.1e}, max|dH| {dh:.1e}, verdict changes {}",
            if changed.is_empty() { "none".to_string() } else { changed.join(", ") }
        ),
    ))
}

fn improper_sphere_graph(fx: &Fixtures) -> Outcome {
    let phi = improper_sphere_phi(&fx.cubic, 1e-12).map_err(err)?;
    let worst = fx
        .cubic
        .v
        .iter()
        .zip(&phi)
        .map(|(v, p)| (p + 2.0 * v.powi(3)).abs())
        .fold(0.0, f64::max);
    Ok((worst <= 1e-9, format!("z - xy independent of u within 1e-12, max|phi + 2v^3| {worst:.1e}")))
}

fn ell_action(_: &Fixtures) -> Outcome {
    let surfaces = [
        ("cosh ruling", "u*cosh(3*v); v; u*sinh(3*v)/3"),
        ("swapped", "v*cosh(3*u); -u; v*sinh(3*u)/3"),
        (
            "hyperboloid",
            "cos((u+v)/2)/cos((u-v)/2); sin((u+v)/2)/cos((u-v)/2); sin((u-v)/2)/cos((u-v)/2)",
        ),
    ];
    let points = [(0.3, -0.2), (-0.4, 0.5), (0.1, 0.1)];
    let mut worst = 0.0f64;
    let mut seen = [0.0f64; 3];
    for (_, src) in surfaces {
        let comps = components(src);
        for (u, v) in points {
            let jet = SurfaceJet::from_exprs(&comps, u, v).map_err(err)?;
            let h = h_form(&jet).map_err(err)?;
            if h.h11.abs().max(h.h22.abs()) > 1e-9 * h.h12.abs().max(1.0) {
                return Err(format!("{src} is not in asymptotic coordinates at ({u}, {v})"));
            }
            let ladder = run_ladder(&jet, &h, L12_MISMATCH_TOL).map_err(err)?;
            let l = ladder.l;
            seen = [seen[0].max(l.l11.abs()), seen[1].max(l.l12.abs()), seen[2].max(l.l22.abs())];
            for lambda in [0.3, -0.3, 1.0, -1.0] {
                let t = ladder.l_after_gauge(&residual_gauge(lambda, 1.0, 1.0), L12_MISMATCH_TOL).map_err(err)?;
                let e = (2.0 * lambda).exp();
                worst = worst
                    .max((t.l11 - e * l.l11).abs())
                    .max((t.l12 - l.l12).abs())
                    .max((t.l22 - l.l22 / e).abs());
            }
        }
    }
    let exercised = seen.iter().all(|s| *s > 1e-3);
    Ok((
        worst <= 1e-8 && exercised,
        format!(
            "max deviation from the scaling law {worst:.1e}; max |l11|, |l12|, |l22| exercised: {:.2}, {:.2}, {:.2}",
            seen[0], seen[1], seen[2]
        ),
    ))
}

fn mutation_sensitivity(fx: &Fixtures) -> Outcome {
    let mut cases: Vec<(&str, &SurfaceGrid)> = vec![("cubic", &fx.cubic), ("cosh", &fx.cosh), ("figure", &fx.figure)];
    cases.extend(fx.random.iter().take(5).map(|(_, _, g)| ("random", g)));
    let forced = AnalysisOptions {
        asymptotic_tol: Some(f64::INFINITY),
        l12_mismatch_tol: f64::INFINITY,
        ..AnalysisOptions::default()
    };
    let mut problems = Vec::new();
    let mut min_forced = f64::INFINITY;
    for (name, g) in &cases {
        let (clean, _) = verify_flat_minimal(SurfaceSource::Grid(g), 1e-5, &AnalysisOptions::default()).map_err(err)?;
        if !clean.iter().all(|r| r.passed) {
            problems.push(format!("{name} fails before mutation"));
        }
        let mut bent = (*g).clone();
        for iv in 0..bent.nv() {
            for iu in 0..bent.nu() {
                let k = bent.index(iu, iv);
                bent.points[k].0[2] += 1e-3 * (5.0 * bent.u[iu]).cos() * (5.0 * bent.v[iv]).cos();
            }
        }
        let (after, _) = verify_flat_minimal(SurfaceSource::Grid(&bent), 1e-5, &AnalysisOptions::default()).map_err(err)?;
        if after.iter().all(|r| r.passed) {
            problems.push(format!("{name} still passes after mutation"));
        }
        let a = analyze(SurfaceSource::Grid(&bent), &forced).map_err(err)?;
        let kh = a.max_abs_k().map_or(0.0, |x| x.0).max(a.max_abs_h().map_or(0.0, |x| x.0));
        min_forced = min_forced.min(kh);
    }
    Ok((
        problems.is_empty() && min_forced > 1e-5,
        format!(
            "{} surfaces fail after mutation; with the asymptotic guard disabled max(|K|, |H|) is still >= {min_forced:.1e}{}",
            cases.len(),
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join(", ")) }
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("saddle exactness", saddle_exactness),
        ("l = 0, f = 6 example", cubic_example),
        ("l = 9 cosh example", cosh_example),
        ("l = -9 cos example", cos_example),
        ("random flat-minimal pairs", random_pairs_end_to_end),
        ("Maurer-Cartan normal form", mc_normal_form),
        ("equiaffine invariance", equiaffine_invariance),
        ("improper sphere graph", improper_sphere_graph),
        ("l-action scaling law", ell_action),
        ("mutation sensitivity", mutation_sensitivity),
    ];
    let fx = match fixtures() {
        Ok(fx) => fx,
        Err(e) => {
            println!("acceptance fixtures failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut all = true;
    for (n, (title, check)) in criteria.iter().enumerate() {
        let (passed, summary) = check(&fx).unwrap_or_else(|e| (false, format!("error: {e}")));
        all &= passed;
        println!("criterion {:>2} {} {title}: {summary}", n + 1, if passed { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {}", if all { "all criteria pass" } else { "FAILED" });
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
