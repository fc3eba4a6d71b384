//! Hyperbolic affine-flat, affine-minimal surfaces from two functions `ℓ(v)`, `f(v)`.
//!
//! The profile `x̄, ē1, ē2, ē3` solves
//!
//! ```text
//! x̄′ = ē2,   ē1′ = ē3,   ē2′ = f ē1,   ē3′ = ℓ ē1
//! ```
//!
//! from `x̄ = 0`, `ē = I` at `v = 0`, and the surface is swept by the lines
//! `x(u, v) = u ē1(v) + x̄(v)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::grid::{GridFrames, GridMeta, GridSpec, PresetInfo, SurfaceGrid};
use crate::linalg::{Mat3, Vec3};
use crate::ode::integrate_to;

pub const DEFAULT_RK_STEP: f64 = 1e-3;

/// Tool identifier stamped into generated grid metadata.
pub fn generated_by() -> String {
    format!("equiaffine {}", env!("CARGO_PKG_VERSION"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorInput {
    pub ell: Expr,
    pub f: Expr,
    pub spec: GridSpec,
    pub rk_step: f64,
}

impl GeneratorInput {
    pub fn new(ell: Expr, f: Expr, spec: GridSpec, rk_step: f64) -> Result<Self> {
        let input = GeneratorInput { ell, f, spec, rk_step };
        input.validate()?;
        Ok(input)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if !(self.rk_step > 0.0 && self.rk_step.is_finite()) {
            return Err(Error::InvalidInput(format!("rk_step must be positive, got {}", self.rk_step)));
        }
        for (name, e) in [("ell", &self.ell), ("f", &self.f)] {
            if e.mentions(Var::U) {
                return Err(Error::InvalidInput(format!("{name} must be a function of v alone, got `{e}`")));
            }
        }
        Ok(())
    }
}

/// Profile functions at one value of `v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileState {
    pub x: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    pub e3: Vec3,
}

impl ProfileState {
    pub fn initial() -> Self {
        ProfileState {
            x: Vec3::zero(),
            e1: Vec3::new(1.0, 0.0, 0.0),
            e2: Vec3::new(0.0, 1.0, 0.0),
            e3: Vec3::new(0.0, 0.0, 1.0),
        }
    }

    fn to_array(self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for (k, w) in [self.x, self.e1, self.e2, self.e3].iter().enumerate() {
            out[3 * k..3 * k + 3].copy_from_slice(&w.0);
        }
        out
    }

    fn from_array(y: &[f64; 12]) -> Self {
        let w = |k: usize| Vec3::new(y[3 * k], y[3 * k + 1], y[3 * k + 2]);
        ProfileState {
            x: w(0),
            e1: w(1),
            e2: w(2),
            e3: w(3),
        }
    }

    pub fn frame(&self) -> Mat3 {
        Mat3::from_cols(self.e1, self.e2, self.e3)
    }
}

/// The profile sampled at the grid values of `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub v: Vec<f64>,
    pub states: Vec<ProfileState>,
}

/// Integrates the profile system with fixed-step RK4 outward from `v = 0`.
pub fn integrate_profile(input: &GeneratorInput) -> Result<Profile> {
    input.validate()?;
    let v = input.spec.v_values();
    let (ell, f) = (&input.ell, &input.f);
    let rhs = |t: f64, y: &[f64; 12]| -> Result<[f64; 12]> {
        let (l, fv) = (ell.eval(0.0, t)?, f.eval(0.0, t)?);
        let s = ProfileState::from_array(y);
        Ok(ProfileState {
            x: s.e2,
            e1: s.e3,
            e2: s.e1.scale(fv),
            e3: s.e1.scale(l),
        }
        .to_array())
    };
    let ys = integrate_to(rhs, 0.0, ProfileState::initial().to_array(), &v, input.rk_step)?;
    Ok(Profile {
        v,
        states: ys.iter().map(ProfileState::from_array).collect(),
    })
}

/// Sweeps the rulings `x = u ē1 + x̄` and stores the frame `(ē1, u ē3 + ē2, ē3)`.
pub fn extend_ruled(profile: &Profile, u: &[f64]) -> SurfaceGrid {
    let rows: Vec<Vec<(Vec3, Vec3)>> = profile
        .states
        .par_iter()
        .map(|s| u.iter().map(|&uu| (s.e1.scale(uu) + s.x, s.e3.scale(uu) + s.e2)).collect())
        .collect();
    let n = u.len() * profile.v.len();
    let mut points = Vec::with_capacity(n);
    let mut frames = GridFrames {
        e1: Vec::with_capacity(n),
        e2: Vec::with_capacity(n),
        e3: Vec::with_capacity(n),
    };
    for (s, row) in profile.states.iter().zip(rows) {
        for (p, e2) in row {
            points.push(p);
            frames.e1.push(s.e1);
            frames.e2.push(e2);
            frames.e3.push(s.e3);
        }
    }
    SurfaceGrid {
        u: u.to_vec(),
        v: profile.v.clone(),
        points,
        frames: Some(frames),
        meta: GridMeta::default(),
    }
}

/// Integrates the profile and sweeps the rulings over the input grid.
pub fn generate(input: &GeneratorInput) -> Result<SurfaceGrid> {
    let profile = integrate_profile(input)?;
    let mut grid = extend_ruled(&profile, &input.spec.u_values());
    grid.meta = GridMeta {
        ell: Some(input.ell.to_string()),
        f: Some(input.f.to_string()),
        presets: None,
        rk_step: Some(input.rk_step),
        generated_by: generated_by(),
    };
    Ok(grid)
}

/// Closed-form members of the family.
#[derive(Clone, Debug, PartialEq)]
pub enum Preset {
    /// `(u, v, uv)`: `ℓ = f = 0`.
    Saddle,
    /// `(u + 3v², v, uv + v³)`: `ℓ = 0`, `f = 6`.
    Cubic,
    /// `(u + F, v, uv + G)` with `F″ = f`, `G″ = v f`: `ℓ = 0`.
    Sphere { f: Expr },
    /// `(u cosh av + F, v, u sinh(av)/a + G)`: `ℓ = a²`.
    Cosh { a: f64, f: Expr },
    /// `(u cos av + F, v, u sin(av)/a + G)`: `ℓ = −a²`.
    Cos { a: f64, f: Expr },
}

impl Preset {
    pub const NAMES: [&'static str; 5] = ["saddle", "cubic", "sphere", "cosh", "cos"];

    pub fn from_name(name: &str, a: Option<f64>, f: Option<Expr>) -> Result<Self> {
        let need_a = || match a {
            Some(a) if a != 0.0 && a.is_finite() => Ok(a),
            Some(a) => Err(Error::InvalidInput(format!("preset `{name}` needs a nonzero a, got {a}"))),
            None => Err(Error::InvalidInput(format!("preset `{name}` needs the parameter a"))),
        };
        let f = match f {
            Some(f) if f.mentions(Var::U) => {
                return Err(Error::InvalidInput(format!("f must be a function of v alone, got `{f}`")))
            }
            f => f,
        };
        let preset = match name {
            "saddle" | "cubic" if f.is_some() => {
                return Err(Error::InvalidInput(format!("preset `{name}` takes no f; use `sphere`")))
            }
            "saddle" => Preset::Saddle,
            "cubic" => Preset::Cubic,
            "sphere" => Preset::Sphere {
                f: f.unwrap_or(Expr::constant(0.0)),
            },
            "cosh" => Preset::Cosh {
                a: need_a()?,
                f: f.unwrap_or(Expr::constant(0.0)),
            },
            "cos" => Preset::Cos {
                a: need_a()?,
                f: f.unwrap_or(Expr::constant(0.0)),
            },
            other => return Err(Error::UnknownPreset(other.to_string())),
        };
        Ok(preset)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Saddle => "saddle",
            Preset::Cubic => "cubic",
            Preset::Sphere { .. } => "sphere",
            Preset::Cosh { .. } => "cosh",
            Preset::Cos { .. } => "cos",
        }
    }

    pub fn ell(&self) -> Expr {
        match self {
            Preset::Saddle | Preset::Cubic | Preset::Sphere { .. } => Expr::constant(0.0),
            Preset::Cosh { a, .. } => Expr::constant(a * a),
            Preset::Cos { a, .. } => Expr::constant(-a * a),
        }
    }

    pub fn f(&self) -> Expr {
        match self {
            Preset::Saddle => Expr::constant(0.0),
            Preset::Cubic => Expr::constant(6.0),
            Preset::Sphere { f } | Preset::Cosh { f, .. } | Preset::Cos { f, .. } => f.clone(),
        }
    }

    pub fn info(&self) -> PresetInfo {
        PresetInfo {
            name: self.name().to_string(),
            a: match self {
                Preset::Cosh { a, .. } | Preset::Cos { a, .. } => Some(*a),
                _ => None,
            },
            f: match self {
                Preset::Sphere { f } | Preset::Cosh { f, .. } | Preset::Cos { f, .. } => Some(f.to_string()),
                _ => None,
            },
        }
    }

    /// The ruling direction `ē1(v)` and its derivative `ē3(v)`.
    fn ruling(&self, v: f64) -> (Vec3, Vec3) {
        match self {
            Preset::Saddle | Preset::Cubic | Preset::Sphere { .. } => (Vec3::new(1.0, 0.0, v), Vec3::new(0.0, 0.0, 1.0)),
            Preset::Cosh { a, .. } => {
                let (c, s) = ((a * v).cosh(), (a * v).sinh());
                (Vec3::new(c, 0.0, s / a), Vec3::new(a * s, 0.0, c))
            }
            Preset::Cos { a, .. } => {
                let (c, s) = ((a * v).cos(), (a * v).sin());
                (Vec3::new(c, 0.0, s / a), Vec3::new(-a * s, 0.0, c))
            }
        }
    }

    /// `(F, F′, G, G′)` at each `v`: closed form for the fixed presets, RK4 quadrature otherwise.
    fn quadratures(&self, v: &[f64], rk_step: f64) -> Result<Vec<[f64; 4]>> {
        match self {
            Preset::Saddle => Ok(vec![[0.0; 4]; v.len()]),
            Preset::Cubic => Ok(v.iter().map(|&v| [3.0 * v * v, 6.0 * v, v.powi(3), 3.0 * v * v]).collect()),
            Preset::Sphere { f } | Preset::Cosh { f, .. } | Preset::Cos { f, .. } => {
                if *f == Expr::constant(0.0) {
                    return Ok(vec![[0.0; 4]; v.len()]);
                }
                let rhs = |t: f64, y: &[f64; 4]| -> Result<[f64; 4]> {
                    let fv = f.eval(0.0, t)?;
                    let (e1, _) = self.ruling(t);
                    Ok([y[1], fv * e1[0], y[3], fv * e1[2]])
                };
                integrate_to(rhs, 0.0, [0.0; 4], v, rk_step)
            }
        }
    }

    /// Evaluates the closed-form parametrization and its frame on a grid.
    pub fn grid(&self, spec: &GridSpec, rk_step: f64) -> Result<SurfaceGrid> {
        spec.validate()?;
        let (u, v) = (spec.u_values(), spec.v_values());
        let quad = self.quadratures(&v, rk_step)?;
        let n = u.len() * v.len();
        let mut points = Vec::with_capacity(n);
        let mut frames = GridFrames {
            e1: Vec::with_capacity(n),
            e2: Vec::with_capacity(n),
            e3: Vec::with_capacity(n),
        };
        for (&vv, q) in v.iter().zip(&quad) {
            let (e1, e3) = self.ruling(vv);
            let e2_bar = Vec3::new(q[1], 1.0, q[3]);
            for &uu in &u {
                points.push(Vec3::new(uu * e1[0] + q[0], vv, uu * e1[2] + q[2]));
                frames.e1.push(e1);
                frames.e2.push(e3.scale(uu) + e2_bar);
                frames.e3.push(e3);
            }
        }
        let grid = SurfaceGrid {
            u,
            v,
            points,
            frames: Some(frames),
            meta: GridMeta {
                ell: Some(self.ell().to_string()),
                f: Some(self.f().to_string()),
                presets: Some(self.info()),
                rk_step: Some(rk_step),
                generated_by: generated_by(),
            },
        };
        if let Some(k) = grid.points.iter().position(|p| !p.is_finite()) {
            return Err(Error::Divergence { v: grid.v[k / grid.nu()] });
        }
        Ok(grid)
    }

    /// The same surface through the ODE generator.
    pub fn generator_input(&self, spec: GridSpec, rk_step: f64) -> Result<GeneratorInput> {
        GeneratorInput::new(self.ell(), self.f(), spec, rk_step)
    }
}

/// Evaluates a named preset on a grid.
pub fn closed_form_preset(name: &str, a: Option<f64>, f: Option<Expr>, spec: &GridSpec, rk_step: f64) -> Result<SurfaceGrid> {
    Preset::from_name(name, a, f)?.grid(spec, rk_step)
}

/// `Φ(v) = z − xy` sampled per `v` row, after checking it does not depend on `u`.
pub fn improper_sphere_phi(grid: &SurfaceGrid, tol: f64) -> Result<Vec<f64>> {
    grid.validate()?;
    let mut phi = Vec::with_capacity(grid.nv());
    for iv in 0..grid.nv() {
        let row: Vec<f64> = (0..grid.nu())
            .map(|iu| {
                let p = grid.point(iu, iv);
                p[2] - p[0] * p[1]
            })
            .collect();
        let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(hi - lo <= tol) {
            return Err(Error::NotImproperSphere {
                spread: hi - lo,
                v: grid.v[iv],
            });
        }
        phi.push(row[0]);
    }
    Ok(phi)
}
