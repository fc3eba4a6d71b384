//! The frame adaptation ladder and the equiaffine invariants it produces.
//!
//! Starting from the 0-adapted frame `(x_u, x_v, n/|n|²)` the ladder
//!
//! 1. reads the symmetric form `h_ij` from `ω³ᵢ = h_ij ωʲ` and classifies
//!    the point by the sign of `det h`;
//! 2. in asymptotic coordinates (`h11 = h22 = 0`), rescales the frame by
//!    `diag(h12^{-1/4}, h12^{-1/4}, h12^{1/2})` so that `ω³₁ = ω²` and
//!    `ω³₂ = ω¹`;
//! 3. shears `e3` by `r1 e1 + r2 e2` so that `ω³₃ = 0`;
//! 4. reads `ℓ_ij` from `ω¹₃ = ℓ12 ω¹ + ℓ22 ω²`, `ω²₃ = ℓ11 ω¹ + ℓ12 ω²`.
//!
//! The affine mean curvature is `ℓ12`, the affine normal is the final `e3`,
//! and the affine Gauss curvature follows from the Lorentzian metric
//! `2√h12 du dv`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Dual4, Expr};
use crate::frames::{gauge_transform, mc_coefficients, mc_jets, Coframe, MCCoefficients, SurfaceJet};
use crate::grid::{SurfaceGrid, MIN_ANALYSIS_POINTS};
use crate::linalg::{Mat3, Vec3};
use crate::stencil::AxisStencils;

/// Relative threshold on `det h` below which a point is degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Largest accepted gap between the two reads of `ℓ12`.
pub const L12_MISMATCH_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HForm {
    pub h11: f64,
    pub h12: f64,
    pub h22: f64,
}

impl HForm {
    pub fn det(&self) -> f64 {
        self.h11 * self.h22 - self.h12 * self.h12
    }

    pub fn scale(&self) -> f64 {
        self.h11.abs().max(self.h12.abs()).max(self.h22.abs()).max(1.0)
    }

    /// The `GL(2)` action `h ↦ (det B) Bᵀ h B`.
    pub fn acted_on_by(&self, b: [[f64; 2]; 2]) -> HForm {
        let h = [[self.h11, self.h12], [self.h12, self.h22]];
        let det_b = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        acc += b[k][i] * h[k][l] * b[l][j];
                    }
                }
                *cell = det_b * acc;
            }
        }
        HForm {
            h11: out[0][0],
            h12: 0.5 * (out[0][1] + out[1][0]),
            h22: out[1][1],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceType {
    Elliptic,
    Hyperbolic,
    Degenerate,
}

impl SurfaceType {
    pub fn as_str(self) -> &'static str {
        match self {
            SurfaceType::Elliptic => "elliptic",
            SurfaceType::Hyperbolic => "hyperbolic",
            SurfaceType::Degenerate => "degenerate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LForm {
    pub l11: f64,
    pub l12: f64,
    pub l22: f64,
    /// Gap between the two independent reads of `ℓ12`.
    pub mismatch: f64,
}

/// `h12 = det[x_u, x_v, x_uv]` as a jet (valid to order 2 from an order-4 surface jet).
pub fn h12_jet(jet: &SurfaceJet) -> Dual4 {
    let x_u = jet.x_u();
    let x_v = jet.x_v();
    let x_uv = x_u.map(|c| c.dv());
    Mat3::from_cols(x_u, x_v, x_uv).det()
}

/// `h_ij = det[x_u, x_v, x_ij]`.
pub fn h_form(jet: &SurfaceJet) -> Result<HForm> {
    let (x_u, x_v) = (jet.partial(1, 0), jet.partial(0, 1));
    let n = x_u.cross(&x_v);
    if !(n.norm() >= crate::frames::DEGENERATE_TANGENT) {
        return Err(Error::DegenerateTangent { norm: n.norm() });
    }
    Ok(HForm {
        h11: n.dot(&jet.partial(2, 0)),
        h12: n.dot(&jet.partial(1, 1)),
        h22: n.dot(&jet.partial(0, 2)),
    })
}

/// Reads `h` from Maurer–Cartan coefficients of any 0-adapted frame.
///
/// Returns the form built from `ω³₁` together with the `h21` read from
/// `ω³₂`; the two off-diagonal reads agree for a genuine frame field.
pub fn h_from_mc(mc: &MCCoefficients, coframe: &Coframe) -> (HForm, f64) {
    let [h11, h12] = coframe.decompose(mc.a_u.0[2][0], mc.a_v.0[2][0]);
    let [h21, h22] = coframe.decompose(mc.a_u.0[2][1], mc.a_v.0[2][1]);
    (HForm { h11, h12, h22 }, h21)
}

/// Sign of `det h` against `±tol·scale²`.
pub fn classify(h: &HForm, tol: f64) -> SurfaceType {
    let det = h.det();
    let thresh = tol * h.scale() * h.scale();
    if det > thresh {
        SurfaceType::Elliptic
    } else if det < -thresh {
        SurfaceType::Hyperbolic
    } else {
        SurfaceType::Degenerate
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticCheck {
    pub asymptotic: bool,
    pub max_h11: f64,
    pub max_h22: f64,
    /// Index of the point with the largest `max(|h11|, |h22|)`.
    pub worst: usize,
}

/// Coordinates are asymptotic when `max(|h11|, |h22|) ≤ tol·max(1, |h12|)` everywhere.
pub fn check_asymptotic(hs: &[HForm], tol: f64) -> AsymptoticCheck {
    let mut check = AsymptoticCheck {
        asymptotic: true,
        max_h11: 0.0,
        max_h22: 0.0,
        worst: 0,
    };
    let mut worst_ratio = -1.0;
    for (k, h) in hs.iter().enumerate() {
        check.max_h11 = check.max_h11.max(h.h11.abs());
        check.max_h22 = check.max_h22.max(h.h22.abs());
        let ratio = h.h11.abs().max(h.h22.abs()) / h.h12.abs().max(1.0);
        if ratio > worst_ratio {
            worst_ratio = ratio;
            check.worst = k;
        }
        if !(ratio <= tol) {
            check.asymptotic = false;
        }
    }
    check
}

/// Gauge taking the 0-adapted frame to a 1-adapted one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OneAdaptedGauge {
    pub gauge: Mat3<Dual4>,
    /// The `(e1, e2, e3) → (e2, e1, −e3)` relabel was applied because `h12 < 0`.
    pub relabeled: bool,
}

/// `g = diag(h12^{-1/4}, h12^{-1/4}, h12^{1/2})`, preceded by the relabel when `h12 < 0`.
pub fn one_adapted_frame(jet: &SurfaceJet, h: &HForm) -> Result<OneAdaptedGauge> {
    let mut h12 = h12_jet(jet);
    let relabeled = h.h12 < 0.0;
    if relabeled {
        h12 = -h12;
    }
    if !(h12.value() > 0.0) {
        return Err(Error::NonPositiveH12 { h12: h12.value() });
    }
    let quarter = h12.powf(-0.25);
    let scale = Mat3::diag(quarter, quarter, h12.sqrt());
    let gauge = if relabeled {
        let (o, z) = (Dual4::constant(1.0), Dual4::constant(0.0));
        let swap = Mat3([[z, o, z], [o, z, z], [z, z, -o]]);
        swap * scale
    } else {
        scale
    };
    Ok(OneAdaptedGauge { gauge, relabeled })
}

/// Unipotent gauge `[[1,0,r1],[0,1,r2],[0,0,1]]` killing `ω³₃`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoAdaptedGauge {
    pub gauge: Mat3<Dual4>,
    pub r1: f64,
    pub r2: f64,
}

/// Solves `ω³₃ + r1 ω³₁ + r2 ω³₂ = 0` pointwise for a 1-adapted jet frame.
///
/// On a 1-adapted frame `ω³₁ = ω²` and `ω³₂ = ω¹`, so this is the usual
/// `ω³₃ + r2 ω¹ + r1 ω² = 0`.
pub fn two_adapted_frame(frame: &Mat3<Dual4>) -> Result<TwoAdaptedGauge> {
    let (a_u, a_v) = mc_jets(frame)?;
    // Treat (ω³₁, ω³₂) as a coframe and decompose −ω³₃ against it.
    let forms = Coframe {
        on_u: [a_u.0[2][0], a_u.0[2][1]],
        on_v: [a_v.0[2][0], a_v.0[2][1]],
    };
    let [r1, r2] = forms.decompose(-a_u.0[2][2], -a_v.0[2][2]);
    let (o, z) = (Dual4::constant(1.0), Dual4::constant(0.0));
    let gauge = Mat3([[o, z, r1], [z, o, r2], [z, z, o]]);
    Ok(TwoAdaptedGauge {
        gauge,
        r1: r1.value(),
        r2: r2.value(),
    })
}

/// Reads `ℓ_ij` from the Maurer–Cartan coefficients of a 2-adapted frame.
pub fn l_form(mc: &MCCoefficients, coframe: &Coframe, tol: f64) -> Result<LForm> {
    let [l12_a, l22] = coframe.decompose(mc.a_u.0[0][2], mc.a_v.0[0][2]);
    let [l11, l12_b] = coframe.decompose(mc.a_u.0[1][2], mc.a_v.0[1][2]);
    let mismatch = (l12_a - l12_b).abs();
    if !(mismatch <= tol) {
        return Err(Error::InconsistentL12 { mismatch });
    }
    Ok(LForm {
        l11,
        l12: 0.5 * (l12_a + l12_b),
        l22,
        mismatch,
    })
}

/// `H_aff = ℓ12`.
pub fn mean_curvature(l: &LForm) -> f64 {
    l.l12
}

/// `K_aff = −h12^{-1/2} ∂²(log √h12)/∂u∂v` from an order ≥ 2 jet of `h12`.
pub fn gauss_curvature(h12: &Dual4) -> Result<f64> {
    if !(h12.value() > 0.0) {
        return Err(Error::NonPositiveH12 { h12: h12.value() });
    }
    if h12.order() < 2 {
        return Err(Error::InvalidInput("h12 jet must carry second derivatives".into()));
    }
    let log_root = h12.ln() * 0.5;
    Ok(-log_root.partial(1, 1) / h12.value().sqrt())
}

/// Grid-mode `K_aff`: fourth-order differences of `log √h12` (one-sided at the edges).
pub fn gauss_curvature_grid(u: &[f64], v: &[f64], h12: &[f64]) -> Result<Vec<f64>> {
    let (nu, nv) = (u.len(), v.len());
    for (axis, n) in [("u", nu), ("v", nv)] {
        if n < MIN_ANALYSIS_POINTS {
            return Err(Error::GridTooCoarse {
                axis,
                points: n,
                needed: MIN_ANALYSIS_POINTS,
            });
        }
    }
    if h12.len() != nu * nv {
        return Err(Error::InvalidInput("h12 field does not match the grid".into()));
    }
    if let Some(bad) = h12.iter().find(|h| !(**h > 0.0)) {
        return Err(Error::NonPositiveH12 { h12: *bad });
    }
    let w: Vec<f64> = h12.iter().map(|h| 0.5 * h.ln()).collect();
    let su = AxisStencils::new(u, 1).expect("axis length checked");
    let sv = AxisStencils::new(v, 1).expect("axis length checked");
    let mut w_u = vec![0.0; nu * nv];
    for iv in 0..nv {
        for iu in 0..nu {
            w_u[iv * nu + iu] = su.get(iu, 1).apply_with(|k| w[iv * nu + k]);
        }
    }
    let mut k = vec![0.0; nu * nv];
    for iv in 0..nv {
        for iu in 0..nu {
            let w_uv = sv.get(iv, 1).apply_with(|kv| w_u[kv * nu + iu]);
            k[iv * nu + iu] = -w_uv / h12[iv * nu + iu].sqrt();
        }
    }
    Ok(k)
}

/// The affine normal: `e3` of a 2-adapted frame.
pub fn affine_normal(frame: &Mat3) -> Vec3 {
    frame.col(2)
}

/// Everything the ladder produces at one point of an asymptotic hyperbolic patch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ladder {
    pub zero: Mat3<Dual4>,
    pub one: Mat3<Dual4>,
    pub two: Mat3<Dual4>,
    pub relabeled: bool,
    pub r: (f64, f64),
    pub mc_two: MCCoefficients,
    pub l: LForm,
    pub h12: Dual4,
    pub x_u: Vec3,
    pub x_v: Vec3,
}

impl Ladder {
    /// Re-reads `ℓ` after a constant gauge change of the 2-adapted frame field.
    pub fn l_after_gauge(&self, g: &Mat3, l12_tol: f64) -> Result<LForm> {
        let frame = gauge_transform(&self.two, &g.map(Dual4::constant))?;
        let mc = mc_coefficients(&frame)?;
        let coframe = Coframe::of(&frame.values(), &self.x_u, &self.x_v);
        l_form(&mc, &coframe, l12_tol)
    }
}

/// `diag(ε1 e^λ, ε2 e^{−λ}, ε1 ε2)`, which keeps a 2-adapted frame 2-adapted.
pub fn residual_gauge(lambda: f64, eps1: f64, eps2: f64) -> Mat3 {
    Mat3::diag(eps1 * lambda.exp(), eps2 * (-lambda).exp(), eps1 * eps2)
}

/// Runs steps 1–4 of the ladder at one point.
pub fn run_ladder(jet: &SurfaceJet, h: &HForm, l12_tol: f64) -> Result<Ladder> {
    let zero = jet.zero_adapted_frame()?;
    let one_gauge = one_adapted_frame(jet, h)?;
    let one = gauge_transform(&zero, &one_gauge.gauge)?;
    let two_gauge = two_adapted_frame(&one)?;
    let two = gauge_transform(&one, &two_gauge.gauge)?;
    let mc_two = mc_coefficients(&two)?;
    let coframe = Coframe::of(&two.values(), &jet.partial(1, 0), &jet.partial(0, 1));
    let l = l_form(&mc_two, &coframe, l12_tol)?;
    Ok(Ladder {
        zero,
        one,
        two,
        relabeled: one_gauge.relabeled,
        r: (two_gauge.r1, two_gauge.r2),
        mc_two,
        l,
        h12: h12_jet(jet),
        x_u: jet.partial(1, 0),
        x_v: jet.partial(0, 1),
    })
}

/// Where the surface comes from.
#[derive(Clone, Copy, Debug)]
pub enum SurfaceSource<'a> {
    /// Component expressions evaluated with exact jets on the given axes.
    Analytic {
        components: &'a [Expr; 3],
        u: &'a [f64],
        v: &'a [f64],
    },
    /// A sampled grid differentiated with finite differences.
    Grid(&'a SurfaceGrid),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Analytic,
    Grid,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalysisOptions {
    pub degeneracy_tol: f64,
    /// `None` picks 1e-9 in analytic mode and 1e-4 in grid mode.
    pub asymptotic_tol: Option<f64>,
    pub l12_mismatch_tol: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            degeneracy_tol: DEGENERACY_TOL,
            asymptotic_tol: None,
            l12_mismatch_tol: L12_MISMATCH_TOL,
        }
    }
}

impl AnalysisOptions {
    pub fn asymptotic_tol_for(&self, mode: Mode) -> f64 {
        self.asymptotic_tol.unwrap_or(match mode {
            Mode::Analytic => 1e-9,
            Mode::Grid => 1e-4,
        })
    }
}

/// Per-point invariants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub iu: usize,
    pub iv: usize,
    pub u: f64,
    pub v: f64,
    pub h: HForm,
    #[serde(rename = "type")]
    pub surface_type: SurfaceType,
    pub k_aff: Option<f64>,
    pub h_aff: Option<f64>,
    pub l: Option<LForm>,
    pub affine_normal: Option<Vec3>,
}

/// Which branch of the flat–minimal normal form the `ℓ` values fall in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LBranch {
    /// `ℓ ≡ 0`: improper affine sphere.
    ImproperSphere,
    /// `ℓ11 ≡ 0`, `ℓ22 ≢ 0`.
    L11Vanishes,
    /// `ℓ22 ≡ 0`, `ℓ11 ≢ 0`; the `u`/`v` roles are swapped.
    L22Vanishes,
    /// Neither diagonal entry vanishes identically.
    Neither,
}

/// Result of [`analyze`].
#[derive(Clone, Debug, PartialEq)]
pub struct Analysis {
    pub mode: Mode,
    pub nu: usize,
    pub nv: usize,
    pub reports: Vec<InvariantReport>,
    pub asymptotic: Option<AsymptoticCheck>,
    /// Why the affine steps were skipped, if they were.
    pub skipped: Option<String>,
}

impl Analysis {
    pub fn affine_computed(&self) -> bool {
        self.skipped.is_none()
    }

    pub fn count(&self, t: SurfaceType) -> usize {
        self.reports.iter().filter(|r| r.surface_type == t).count()
    }

    pub fn max_abs_k(&self) -> Option<(f64, usize)> {
        max_abs_by(&self.reports, |r| r.k_aff)
    }

    pub fn max_abs_h(&self) -> Option<(f64, usize)> {
        max_abs_by(&self.reports, |r| r.h_aff)
    }

    pub fn branch(&self, tol: f64) -> Option<LBranch> {
        let l11 = max_abs_by(&self.reports, |r| r.l.map(|l| l.l11))?.0;
        let l22 = max_abs_by(&self.reports, |r| r.l.map(|l| l.l22))?.0;
        Some(match (l11 <= tol, l22 <= tol) {
            (true, true) => LBranch::ImproperSphere,
            (true, false) => LBranch::L11Vanishes,
            (false, true) => LBranch::L22Vanishes,
            (false, false) => LBranch::Neither,
        })
    }
}

fn max_abs_by(reports: &[InvariantReport], f: impl Fn(&InvariantReport) -> Option<f64>) -> Option<(f64, usize)> {
    reports
        .iter()
        .enumerate()
        .filter_map(|(k, r)| f(r).map(|x| (x.abs(), k)))
        .fold(None, |best, (x, k)| match best {
            Some((b, _)) if b >= x => best,
            _ => Some((x, k)),
        })
}

/// Runs the full ladder over every grid point.
///
/// Classification is always reported. The affine steps run only when every
/// point is hyperbolic and the coordinates are asymptotic; otherwise
/// [`Analysis::skipped`] says why.
pub fn analyze(source: SurfaceSource<'_>, opts: &AnalysisOptions) -> Result<Analysis> {
    let (mode, u, v, jets): (Mode, &[f64], &[f64], Vec<SurfaceJet>) = match source {
        SurfaceSource::Analytic { components, u, v } => {
            let nu = u.len();
            let jets = (0..u.len() * v.len())
                .into_par_iter()
                .map(|k| SurfaceJet::from_exprs(components, u[k % nu], v[k / nu]))
                .collect::<Result<Vec<_>>>()?;
            (Mode::Analytic, u, v, jets)
        }
        SurfaceSource::Grid(grid) => {
            grid.validate()?;
            (Mode::Grid, &grid.u, &grid.v, grid.jets()?)
        }
    };
    let nu = u.len();
    let hs = jets.par_iter().map(h_form).collect::<Result<Vec<_>>>()?;
    let mut reports: Vec<InvariantReport> = hs
        .iter()
        .enumerate()
        .map(|(k, h)| InvariantReport {
            iu: k % nu,
            iv: k / nu,
            u: u[k % nu],
            v: v[k / nu],
            h: *h,
            surface_type: classify(h, opts.degeneracy_tol),
            k_aff: None,
            h_aff: None,
            l: None,
            affine_normal: None,
        })
        .collect();
    let mut analysis = Analysis {
        mode,
        nu,
        nv: v.len(),
        reports: Vec::new(),
        asymptotic: None,
        skipped: None,
    };

    if let Some(r) = reports.iter().find(|r| r.surface_type != SurfaceType::Hyperbolic) {
        let bad = reports.iter().filter(|r| r.surface_type != SurfaceType::Hyperbolic).count();
        analysis.skipped = Some(format!(
            "surface is not hyperbolic at {bad} of {} points (first: {} at (u, v) = ({}, {}))",
            reports.len(),
            r.surface_type.as_str(),
            r.u,
            r.v
        ));
        analysis.reports = reports;
        return Ok(analysis);
    }

    let asym = check_asymptotic(&hs, opts.asymptotic_tol_for(mode));
    analysis.asymptotic = Some(asym);
    if !asym.asymptotic {
        let r = &reports[asym.worst];
        analysis.skipped = Some(format!(
            "coordinates are not asymptotic: max|h11| = {:e}, max|h22| = {:e} (worst at (u, v) = ({}, {}))",
            asym.max_h11, asym.max_h22, r.u, r.v
        ));
        analysis.reports = reports;
        return Ok(analysis);
    }

    let ladders = jets
        .par_iter()
        .zip(hs.par_iter())
        .map(|(jet, h)| run_ladder(jet, h, opts.l12_mismatch_tol))
        .collect::<Result<Vec<_>>>()?;

    let ks: Vec<f64> = match mode {
        Mode::Analytic => ladders
            .iter()
            .map(|l| gauss_curvature(&if l.relabeled { -l.h12 } else { l.h12 }))
            .collect::<Result<_>>()?,
        Mode::Grid => {
            let h12: Vec<f64> = hs.iter().map(|h| h.h12.abs()).collect();
            gauss_curvature_grid(u, v, &h12)?
        }
    };

    for ((rep, ladder), k) in reports.iter_mut().zip(&ladders).zip(ks) {
        rep.l = Some(ladder.l);
        rep.h_aff = Some(mean_curvature(&ladder.l));
        rep.k_aff = Some(k);
        rep.affine_normal = Some(affine_normal(&ladder.two.values()));
    }
    analysis.reports = reports;
    Ok(analysis)
}
