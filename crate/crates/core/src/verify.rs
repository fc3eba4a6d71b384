//! Checks certifying that a surface is hyperbolic, affine flat, affine
//! minimal and ruled, and that a stored frame field is in normal form.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::generator::{generate, Preset};
use crate::grid::{GridSpec, SurfaceGrid};
use crate::invariants::{analyze, Analysis, AnalysisOptions, SurfaceSource, SurfaceType};
use crate::linalg::{Mat3, Vec3};

/// Default tolerance for identities that hold exactly in analytic mode.
pub const ANALYTIC_TOL: f64 = 1e-9;
/// Default tolerance for ODE output against closed forms and for the frame normal form.
pub const ODE_TOL: f64 = 1e-6;
/// Default tolerance for finite-difference analysis of sampled grids.
pub const GRID_TOL: f64 = 1e-5;
/// Default tolerance for linearity along the rulings.
pub const RULED_TOL: f64 = 1e-12;

/// Grid location of the largest residual of a check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstPoint {
    pub iu: usize,
    pub iv: usize,
    pub u: f64,
    pub v: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// `None` when the quantity could not be computed.
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst: Option<WorstPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckRecord {
    fn measured(name: &str, residual: f64, tolerance: f64, worst: Option<WorstPoint>) -> Self {
        CheckRecord {
            name: name.to_string(),
            max_residual: Some(residual),
            tolerance,
            passed: residual <= tolerance,
            worst,
            detail: None,
        }
    }

    fn failed(name: &str, tolerance: f64, detail: String) -> Self {
        CheckRecord {
            name: name.to_string(),
            max_residual: None,
            tolerance,
            passed: false,
            worst: None,
            detail: Some(detail),
        }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub checks: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn new(checks: Vec<CheckRecord>) -> Self {
        VerificationReport {
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = CheckRecord>) {
        self.checks.extend(checks);
        self.passed = self.checks.iter().all(|c| c.passed);
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<22} {:>13} {:>10}  {:<6}  worst / detail", "check", "max residual", "tolerance", "result")?;
        for c in &self.checks {
            let residual = c.max_residual.map_or("-".to_string(), |r| format!("{r:.3e}"));
            let mut tail = Vec::new();
            if let Some(w) = &c.worst {
                let entry = w.entry.as_deref().map(|e| format!(" {e}")).unwrap_or_default();
                tail.push(format!("(u, v) = ({}, {}) [{}, {}]{entry}", w.u, w.v, w.iu, w.iv));
            }
            if let Some(d) = &c.detail {
                tail.push(d.clone());
            }
            writeln!(
                f,
                "{:<22} {:>13} {:>10.1e}  {:<6}  {}",
                c.name,
                residual,
                c.tolerance,
                if c.passed { "PASS" } else { "FAIL" },
                tail.join("; ")
            )?;
        }
        write!(f, "overall: {}", if self.passed { "PASS" } else { "FAIL" })
    }
}

fn worst_in(analysis: &Analysis, k: usize) -> WorstPoint {
    let r = &analysis.reports[k];
    WorstPoint {
        iu: r.iu,
        iv: r.iv,
        u: r.u,
        v: r.v,
        entry: None,
    }
}

/// Records `hyperbolic`, `asymptotic`, `flat` and `minimal` for an analysis.
pub fn flat_minimal_records(analysis: &Analysis, tol: f64, asymptotic_tol: f64) -> Vec<CheckRecord> {
    let total = analysis.reports.len();
    let bad = total - analysis.count(SurfaceType::Hyperbolic);
    let mut hyperbolic = CheckRecord::measured("hyperbolic", bad as f64, 0.0, None).with_detail(format!(
        "{} elliptic, {} degenerate of {total} points",
        analysis.count(SurfaceType::Elliptic),
        analysis.count(SurfaceType::Degenerate)
    ));
    if let Some(k) = analysis.reports.iter().position(|r| r.surface_type != SurfaceType::Hyperbolic) {
        hyperbolic.worst = Some(worst_in(analysis, k));
    }
    let mut out = vec![hyperbolic];

    if let Some(asym) = analysis.asymptotic {
        let worst = &analysis.reports[asym.worst];
        let ratio = worst.h.h11.abs().max(worst.h.h22.abs()) / worst.h.h12.abs().max(1.0);
        out.push(CheckRecord::measured("asymptotic", ratio, asymptotic_tol, Some(worst_in(analysis, asym.worst))));
    }

    match &analysis.skipped {
        Some(reason) => {
            out.push(CheckRecord::failed("flat", tol, reason.clone()));
            out.push(CheckRecord::failed("minimal", tol, reason.clone()));
        }
        None => {
            let (k, ik) = analysis.max_abs_k().unwrap_or((0.0, 0));
            let (h, ih) = analysis.max_abs_h().unwrap_or((0.0, 0));
            out.push(CheckRecord::measured("flat", k, tol, Some(worst_in(analysis, ik))));
            out.push(CheckRecord::measured("minimal", h, tol, Some(worst_in(analysis, ih))));
        }
    }
    out
}

/// Runs the invariant analysis and checks `K_aff ≡ 0`, `H_aff ≡ 0` and hyperbolicity.
pub fn verify_flat_minimal(source: SurfaceSource<'_>, tol: f64, opts: &AnalysisOptions) -> Result<(Vec<CheckRecord>, Analysis)> {
    let analysis = analyze(source, opts)?;
    let records = flat_minimal_records(&analysis, tol, opts.asymptotic_tol_for(analysis.mode));
    Ok((records, analysis))
}

const ENTRY_FORMS: [[&str; 3]; 3] = [["w11", "w12", "w13"], ["w21", "w22", "w23"], ["w31", "w32", "w33"]];

/// Expected `(A_u, A_v)` of the generated frame at `(u, v)`.
pub fn normal_form(u: f64, ell: f64, f: f64) -> (Mat3, Mat3) {
    let mut a_u = Mat3::zero();
    a_u.0[2][1] = 1.0;
    let mut a_v = Mat3::zero();
    a_v.0[2][0] = 1.0;
    a_v.0[0][2] = ell;
    a_v.0[0][1] = u * ell + f;
    (a_u, a_v)
}

/// Compares all 18 Maurer–Cartan entries of the stored frames with the normal form.
///
/// A match certifies `k1 = k2 = k4 = 0` and `k3 = u ℓ + f`.
pub fn verify_mc_normal_form(grid: &SurfaceGrid, ell: &Expr, f: &Expr, tol: f64) -> Result<CheckRecord> {
    let frames = grid
        .frame_grid()
        .ok_or_else(|| Error::InvalidInput("grid has no stored frames".into()))?;
    let mc = frames.mc_coefficients()?;
    let nu = grid.nu();
    let coeffs: Vec<(f64, f64)> = grid
        .v
        .iter()
        .map(|&v| Ok((ell.eval(0.0, v)?, f.eval(0.0, v)?)))
        .collect::<Result<_>>()?;

    let mut entry_max = [[[0.0f64; 3]; 3]; 2];
    let mut worst: Option<(f64, usize, usize, usize, usize)> = None;
    for (k, m) in mc.iter().enumerate() {
        let (iu, iv) = (k % nu, k / nu);
        let (l, fv) = coeffs[iv];
        let (eu, ev) = normal_form(grid.u[iu], l, fv);
        for (d, (got, want)) in [(m.a_u, eu), (m.a_v, ev)].iter().enumerate() {
            for i in 0..3 {
                for j in 0..3 {
                    let r = (got.0[i][j] - want.0[i][j]).abs();
                    let r = if r.is_nan() { f64::INFINITY } else { r };
                    entry_max[d][i][j] = entry_max[d][i][j].max(r);
                    if worst.is_none_or(|w| r > w.0) {
                        worst = Some((r, k, d, i, j));
                    }
                }
            }
        }
    }
    let entry_name = |d: usize, i: usize, j: usize| {
        format!("A_{}[{},{}] ({})", ["u", "v"][d], i + 1, j + 1, ENTRY_FORMS[i][j])
    };
    let (residual, k, d, i, j) = worst.unwrap_or((0.0, 0, 0, 0, 0));
    let mut rec = CheckRecord::measured(
        "mc_normal_form",
        residual,
        tol,
        Some(WorstPoint {
            iu: k % nu,
            iv: k / nu,
            u: grid.u[k % nu],
            v: grid.v[k / nu],
            entry: Some(entry_name(d, i, j)),
        }),
    );
    let offending: Vec<String> = (0..2)
        .flat_map(|d| (0..3).flat_map(move |i| (0..3).map(move |j| (d, i, j))))
        .filter(|&(d, i, j)| !(entry_max[d][i][j] <= tol))
        .map(|(d, i, j)| format!("{} off by {:.2e}", entry_name(d, i, j), entry_max[d][i][j]))
        .collect();
    if !offending.is_empty() {
        rec = rec.with_detail(format!("offending entries: {}", offending.join(", ")));
    }
    Ok(rec)
}

/// Second differences along `u`: zero exactly when every `u`-curve is a straight line.
///
/// On uneven nodes the residual is twice the gap to the chord, which equals
/// `|x(u+Δ) − 2x(u) + x(u−Δ)|` on even ones.
pub fn verify_ruled(grid: &SurfaceGrid, tol: f64) -> Result<CheckRecord> {
    grid.validate()?;
    let nu = grid.nu();
    if nu < 3 {
        return Err(Error::InvalidInput(format!("ruledness needs at least 3 nodes along u, got {nu}")));
    }
    let (residual, worst) = (0..grid.nv())
        .into_par_iter()
        .flat_map_iter(|iv| (1..nu - 1).map(move |iu| (iu, iv)))
        .map(|(iu, iv)| {
            let (u0, u1, u2) = (grid.u[iu - 1], grid.u[iu], grid.u[iu + 1]);
            let t = (u1 - u0) / (u2 - u0);
            let chord = grid.point(iu - 1, iv).scale(1.0 - t) + grid.point(iu + 1, iv).scale(t);
            ((chord - grid.point(iu, iv)).max_abs() * 2.0, (iu, iv))
        })
        .reduce(|| (0.0, (0, 0)), max_with_index);
    Ok(CheckRecord::measured(
        "ruled",
        residual,
        tol,
        Some(WorstPoint {
            iu: worst.0,
            iv: worst.1,
            u: grid.u[worst.0],
            v: grid.v[worst.1],
            entry: None,
        }),
    ))
}

fn max_with_index<T: Ord + Copy>(a: (f64, T), b: (f64, T)) -> (f64, T) {
    // Ties go to the smaller index so the reduction is deterministic.
    match a.0.total_cmp(&b.0) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => {
            if a.1 <= b.1 {
                a
            } else {
                b
            }
        }
    }
}

/// Outcome of the improper-sphere test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImproperSphere {
    pub detected: bool,
    /// `max |e3 − e3(reference)|`.
    pub max_deviation: f64,
    /// `max |ℓ(v)|` over the grid, when `ℓ` is known.
    pub max_ell: Option<f64>,
    /// Whether the normal test agrees with `ℓ ≡ 0`, when `ℓ` is known.
    pub consistent: Option<bool>,
}

impl ImproperSphere {
    /// Passes unless the normal test contradicts the known `ℓ`.
    pub fn record(&self, tol: f64) -> CheckRecord {
        let verdict = if self.detected { "improper affine sphere" } else { "not an improper affine sphere" };
        let agreement = match (self.consistent, self.max_ell) {
            (Some(true), Some(l)) => format!(", consistent with max|l| = {l:.2e}"),
            (Some(false), Some(l)) => format!(", contradicts max|l| = {l:.2e}"),
            _ => String::new(),
        };
        CheckRecord {
            name: "improper_sphere".into(),
            max_residual: Some(self.max_deviation),
            tolerance: tol,
            passed: self.consistent.unwrap_or(true),
            worst: None,
            detail: Some(format!("{verdict}{agreement}")),
        }
    }
}

/// Whether all normals equal the one at `reference` within `tol`.
pub fn normals_constant(normals: &[Vec3], reference: usize, tol: f64) -> (bool, f64) {
    let r = normals[reference];
    let dev = normals.iter().map(|n| (*n - r).max_abs()).fold(0.0, f64::max);
    (dev <= tol, dev)
}

/// Tests whether `e3` is constant over the grid, referenced at the node nearest `(0, 0)`.
pub fn detect_improper_sphere(grid: &SurfaceGrid, ell: Option<&Expr>, tol: f64) -> Result<ImproperSphere> {
    let frames = grid
        .frames
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("grid has no stored frames".into()))?;
    let nearest = |axis: &[f64]| {
        axis.iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map_or(0, |(i, _)| i)
    };
    let reference = grid.index(nearest(&grid.u), nearest(&grid.v));
    let (detected, max_deviation) = normals_constant(&frames.e3, reference, tol);
    let max_ell = match ell {
        Some(e) => Some(
            grid.v
                .iter()
                .map(|&v| e.eval(0.0, v).map(f64::abs))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .fold(0.0, f64::max),
        ),
        None => None,
    };
    Ok(ImproperSphere {
        detected,
        max_deviation,
        max_ell,
        consistent: max_ell.map(|l| (l <= tol) == detected),
    })
}

/// Largest pointwise gap between the ODE and closed-form versions of a preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub preset: String,
    pub max_deviation: f64,
    pub worst: WorstPoint,
    /// Largest gap between the stored frames.
    pub max_frame_deviation: f64,
}

pub fn cross_check_closed_form(preset: &Preset, spec: &GridSpec, rk_step: f64) -> Result<CrossCheck> {
    let ode = generate(&preset.generator_input(*spec, rk_step)?)?;
    let closed = preset.grid(spec, rk_step)?;
    let (max_deviation, k) = ode
        .points
        .iter()
        .zip(&closed.points)
        .enumerate()
        .map(|(k, (a, b))| ((*a - *b).max_abs(), k))
        .fold((0.0, 0), max_with_index);
    let (fa, fb) = (ode.frames.as_ref(), closed.frames.as_ref());
    let max_frame_deviation = match (fa, fb) {
        (Some(fa), Some(fb)) => [(&fa.e1, &fb.e1), (&fa.e2, &fb.e2), (&fa.e3, &fb.e3)]
            .iter()
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(p, q)| (*p - *q).max_abs()))
            .fold(0.0, f64::max),
        _ => 0.0,
    };
    let nu = ode.nu();
    Ok(CrossCheck {
        preset: preset.name().to_string(),
        max_deviation,
        worst: WorstPoint {
            iu: k % nu,
            iv: k / nu,
            u: ode.u[k % nu],
            v: ode.v[k / nu],
            entry: None,
        },
        max_frame_deviation,
    })
}

/// Tolerances and optional known coefficients for [`verify_grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub tol: f64,
    pub mc_tol: f64,
    pub ruled_tol: f64,
    pub improper_tol: f64,
    pub ell: Option<Expr>,
    pub f: Option<Expr>,
    pub analysis: AnalysisOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            tol: GRID_TOL,
            mc_tol: ODE_TOL,
            ruled_tol: RULED_TOL,
            improper_tol: ANALYTIC_TOL,
            ell: None,
            f: None,
            analysis: AnalysisOptions::default(),
        }
    }
}

/// Every check that applies to a sampled grid.
///
/// The normal-form check runs only when both `ℓ` and `f` are given and the
/// grid stores frames.
pub fn verify_grid(grid: &SurfaceGrid, opts: &VerifyOptions) -> Result<(VerificationReport, Analysis)> {
    let (records, analysis) = verify_flat_minimal(SurfaceSource::Grid(grid), opts.tol, &opts.analysis)?;
    let mut report = VerificationReport::new(records);
    report.extend([verify_ruled(grid, opts.ruled_tol)?]);
    if grid.frames.is_some() {
        if let (Some(ell), Some(f)) = (&opts.ell, &opts.f) {
            report.extend([verify_mc_normal_form(grid, ell, f, opts.mc_tol)?]);
        }
        let sphere = detect_improper_sphere(grid, opts.ell.as_ref(), opts.improper_tol)?;
        report.extend([sphere.record(opts.improper_tol)]);
    }
    Ok((report, analysis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::generator::GeneratorInput;
    use crate::stencil::linspace;

    fn gen(ell: &str, f: &str, spec: GridSpec) -> SurfaceGrid {
        generate(&GeneratorInput::new(parse(ell).unwrap(), parse(f).unwrap(), spec, 1e-3).unwrap()).unwrap()
    }

    #[test]
    fn saddle_analytic_flat_minimal() {
        let comps = [parse("u").unwrap(), parse("v").unwrap(), parse("u*v").unwrap()];
        let axis = linspace(-1.0, 1.0, 9);
        let (recs, _) = verify_flat_minimal(
            SurfaceSource::Analytic {
                components: &comps,
                u: &axis,
                v: &axis,
            },
            ANALYTIC_TOL,
            &AnalysisOptions::default(),
        )
        .unwrap();
        assert!(recs.iter().all(|r| r.passed), "{recs:?}");
    }

    #[test]
    fn paraboloid_fails_as_elliptic() {
        let comps = [parse("u").unwrap(), parse("v").unwrap(), parse("u^2+v^2").unwrap()];
        let axis = linspace(-1.0, 1.0, 5);
        let (recs, _) = verify_flat_minimal(
            SurfaceSource::Analytic {
                components: &comps,
                u: &axis,
                v: &axis,
            },
            ANALYTIC_TOL,
            &AnalysisOptions::default(),
        )
        .unwrap();
        let flat = recs.iter().find(|r| r.name == "flat").unwrap();
        assert!(!flat.passed);
        assert!(flat.detail.as_ref().unwrap().contains("elliptic"));
    }

    #[test]
    fn normal_form_entries() {
        let spec = GridSpec::new((-1.0, 1.0), (-0.5, 0.5), 5, 101).unwrap();
        let g = gen("0", "6", spec);
        let rec = verify_mc_normal_form(&g, &parse("0").unwrap(), &parse("6").unwrap(), 1e-6).unwrap();
        assert!(rec.passed, "{rec:?}");
        let mc = g.frame_grid().unwrap().mc_coefficients().unwrap();
        assert!((mc[37].a_v.0[0][1] - 6.0).abs() < 1e-9);
        // wrong f is caught at the w12 entry
        let rec = verify_mc_normal_form(&g, &parse("0").unwrap(), &parse("5").unwrap(), 1e-6).unwrap();
        assert!(!rec.passed);
        assert!(rec.detail.unwrap().contains("A_v[1,2]"));
    }

    #[test]
    fn gauge_perturbed_frames_fail() {
        let spec = GridSpec::new((-1.0, 1.0), (-0.5, 0.5), 5, 101).unwrap();
        let mut g = gen("9", "0", spec);
        let fr = g.frames.as_mut().unwrap();
        let (s, t) = (0.3f64.exp(), (-0.3f64).exp());
        fr.e1.iter_mut().for_each(|e| *e = e.scale(s));
        fr.e2.iter_mut().for_each(|e| *e = e.scale(t));
        let rec = verify_mc_normal_form(&g, &parse("9").unwrap(), &parse("0").unwrap(), 1e-6).unwrap();
        assert!(!rec.passed);
        let detail = rec.detail.unwrap();
        assert!(detail.contains("A_u[3,2]") && detail.contains("A_v[3,1]"), "{detail}");
    }

    #[test]
    fn ruledness() {
        let spec = GridSpec::square(-1.0, 1.0, 9).unwrap();
        assert!(verify_ruled(&gen("sin(v)", "v^2", spec), RULED_TOL).unwrap().passed);
        let cosh = Preset::from_name("cosh", Some(3.0), None).unwrap().grid(&spec, 1e-3).unwrap();
        assert!(verify_ruled(&cosh, RULED_TOL).unwrap().passed);
        let para = SurfaceGrid::sample(&spec, |u, v| Ok(Vec3::new(u, v, u * u + v * v))).unwrap();
        let rec = verify_ruled(&para, RULED_TOL).unwrap();
        assert!(!rec.passed);
        assert!(rec.worst.is_some());
    }

    #[test]
    fn improper_sphere_detection() {
        let spec = GridSpec::square(-1.0, 1.0, 7).unwrap();
        let cases = [("0", "6", true), ("9", "0", false), ("v", "0", false)];
        for (ell, f, want) in cases {
            let g = gen(ell, f, spec);
            let r = detect_improper_sphere(&g, Some(&parse(ell).unwrap()), ANALYTIC_TOL).unwrap();
            assert_eq!(r.detected, want, "{ell}");
            assert_eq!(r.consistent, Some(true));
        }
    }

    #[test]
    fn cross_checks() {
        let spec = GridSpec::new((-1.0, 1.0), (-1.0, 1.0), 11, 41).unwrap();
        let saddle = cross_check_closed_form(&Preset::Saddle, &spec, 0.05).unwrap();
        assert!(saddle.max_deviation <= 1e-12);
        for name in ["cosh", "cos"] {
            let p = Preset::from_name(name, Some(3.0), None).unwrap();
            let c = cross_check_closed_form(&p, &spec, 1e-3).unwrap();
            assert!(c.max_deviation <= 1e-6, "{name}: {}", c.max_deviation);
        }
    }

    #[test]
    fn report_table() {
        let report = VerificationReport::new(vec![
            CheckRecord::measured("flat", 1e-12, 1e-5, None),
            CheckRecord::failed("minimal", 1e-5, "not computed".into()),
        ]);
        assert!(!report.passed);
        let text = report.to_string();
        assert!(text.contains("FAIL") && text.contains("not computed") && text.ends_with("overall: FAIL"));
    }
}
