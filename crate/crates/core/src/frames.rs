//! Unimodular frames along a parametrized surface and their pulled-back
//! Maurer–Cartan coefficients.
//!
//! A frame field `E(u, v)` holds the frame vectors `e1, e2, e3` as columns.
//! Its Maurer–Cartan coefficient matrices are defined by
//! `∂ᵤE = E·A_u` and `∂ᵥE = E·A_v`, so entry `(i, j)` of `A_u` is the
//! connection form `ωⁱⱼ` evaluated on `∂/∂u`.
//!
//! Two representations are supported. In analytic mode the frame is a matrix
//! of [`Dual4`] jets and derivatives are exact. In grid mode frames are
//! sampled on a rectangular `(u, v)` grid and differentiated with
//! fourth-order finite differences.

use crate::error::{Error, Result};
use crate::expr::{Dual4, Expr, MAX_ORDER};
use crate::linalg::{Mat3, Scalar, Vec3};
use crate::stencil::AxisStencils;

/// Below this `|x_u × x_v|` the tangent plane is treated as degenerate.
pub const DEGENERATE_TANGENT: f64 = 1e-12;

/// Frames whose condition number exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Tolerance on `|det g − 1|` for gauge matrices.
pub const GAUGE_DET_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnimodularFrame {
    pub e1: Vec3,
    pub e2: Vec3,
    pub e3: Vec3,
}

impl UnimodularFrame {
    pub fn matrix(&self) -> Mat3 {
        Mat3::from_cols(self.e1, self.e2, self.e3)
    }

    pub fn det(&self) -> f64 {
        self.matrix().det()
    }
}

/// Completes `(x_u, x_v)` to a unimodular frame with `e3 = n / |n|²`, `n = x_u × x_v`.
pub fn complete_unimodular(x_u: Vec3, x_v: Vec3) -> Result<UnimodularFrame> {
    let m = complete_unimodular_matrix(&x_u, &x_v)?;
    Ok(UnimodularFrame {
        e1: m.col(0),
        e2: m.col(1),
        e3: m.col(2),
    })
}

/// [`complete_unimodular`] over any scalar, returning the frame matrix.
pub fn complete_unimodular_matrix<T: Scalar>(x_u: &Vec3<T>, x_v: &Vec3<T>) -> Result<Mat3<T>> {
    let n = x_u.cross(x_v);
    let norm = n.values().norm();
    if !(norm >= DEGENERATE_TANGENT) {
        return Err(Error::DegenerateTangent { norm });
    }
    let inv = T::one() / n.dot(&n);
    Ok(Mat3::from_cols(*x_u, *x_v, n.scale(inv)))
}

/// Pulled-back Maurer–Cartan coefficients at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MCCoefficients {
    pub a_u: Mat3,
    pub a_v: Mat3,
}

impl MCCoefficients {
    /// `max(|tr A_u|, |tr A_v|)`.
    pub fn trace_residual(&self) -> f64 {
        self.a_u.trace().abs().max(self.a_v.trace().abs())
    }

    /// Constant gauge action `A ↦ g⁻¹ A g`.
    pub fn conjugated(&self, g: &Mat3) -> Result<MCCoefficients> {
        let g_inv = checked_inverse(g)?;
        Ok(MCCoefficients {
            a_u: g_inv * self.a_u * *g,
            a_v: g_inv * self.a_v * *g,
        })
    }
}

/// Inverse with a condition-number guard.
pub fn checked_inverse(m: &Mat3) -> Result<Mat3> {
    let det = m.det();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::SingularFrame { cond: f64::INFINITY });
    }
    let inv = m.inverse_unchecked();
    let cond = m.frobenius() * inv.frobenius();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularFrame { cond });
    }
    Ok(inv)
}

fn checked_inverse_jet(e: &Mat3<Dual4>) -> Result<Mat3<Dual4>> {
    checked_inverse(&e.values())?;
    Ok(e.inverse_unchecked())
}

/// `A_u = E⁻¹∂ᵤE` and `A_v = E⁻¹∂ᵥE` as jets, valid to one order less than `E`.
pub fn mc_jets(e: &Mat3<Dual4>) -> Result<(Mat3<Dual4>, Mat3<Dual4>)> {
    let inv = checked_inverse_jet(e)?;
    Ok((inv * e.du(), inv * e.dv()))
}

/// Maurer–Cartan coefficients of a jet frame field at its base point.
pub fn mc_coefficients(e: &Mat3<Dual4>) -> Result<MCCoefficients> {
    let inv = checked_inverse(&e.values())?;
    Ok(MCCoefficients {
        a_u: inv * e.du().values(),
        a_v: inv * e.dv().values(),
    })
}

/// `∂ᵥA_u − ∂ᵤA_v + A_v A_u − A_u A_v`, which vanishes for any genuine frame field.
pub fn structure_residual(a_u: &Mat3<Dual4>, a_v: &Mat3<Dual4>) -> Mat3 {
    let (au, av) = (a_u.values(), a_v.values());
    a_u.dv().values() - a_v.du().values() + av * au - au * av
}

/// Gauge change `Ẽ = E·g` with `det g = 1`; jets carry the product rule.
pub fn gauge_transform(e: &Mat3<Dual4>, g: &Mat3<Dual4>) -> Result<Mat3<Dual4>> {
    let det = g.values().det();
    if !((det - 1.0).abs() <= GAUGE_DET_TOL) {
        return Err(Error::NonUnimodularGauge { det });
    }
    Ok(*e * *g)
}

/// Coefficients of the dual forms `ω¹, ω²` on `∂/∂u` and `∂/∂v`.
///
/// From `dx = e_i ωⁱ`, the column `E⁻¹x_u` lists `ωⁱ(∂/∂u)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coframe<T = f64> {
    /// `[ω¹(∂u), ω²(∂u)]`
    pub on_u: [T; 2],
    /// `[ω¹(∂v), ω²(∂v)]`
    pub on_v: [T; 2],
}

impl<T: Scalar> Coframe<T> {
    pub fn of(e: &Mat3<T>, x_u: &Vec3<T>, x_v: &Vec3<T>) -> Self {
        let inv = e.inverse_unchecked();
        let (wu, wv) = (inv.mul_vec(x_u), inv.mul_vec(x_v));
        Coframe {
            on_u: [wu[0], wu[1]],
            on_v: [wv[0], wv[1]],
        }
    }

    /// Solves `α = c₁ω¹ + c₂ω²` for a 1-form given by its values on `∂u`, `∂v`.
    pub fn decompose(&self, alpha_u: T, alpha_v: T) -> [T; 2] {
        let det = self.on_u[0] * self.on_v[1] - self.on_u[1] * self.on_v[0];
        let c1 = (alpha_u * self.on_v[1] - alpha_v * self.on_u[1]) / det;
        let c2 = (self.on_u[0] * alpha_v - self.on_v[0] * alpha_u) / det;
        [c1, c2]
    }

    pub fn values(&self) -> Coframe<f64> {
        Coframe {
            on_u: self.on_u.map(|x| x.value()),
            on_v: self.on_v.map(|x| x.value()),
        }
    }
}

/// Jet of a parametrization `x(u, v)` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceJet {
    pub x: Vec3<Dual4>,
}

impl SurfaceJet {
    /// Analytic jet from three component expressions.
    pub fn from_exprs(components: &[Expr; 3], u: f64, v: f64) -> Result<Self> {
        let uj = Dual4::var_u(u, MAX_ORDER);
        let vj = Dual4::var_v(v, MAX_ORDER);
        let mut x = Vec3([Dual4::default(); 3]);
        for (k, e) in components.iter().enumerate() {
            x[k] = e.jet_at(&uj, &vj)?;
        }
        Ok(SurfaceJet { x })
    }

    pub fn point(&self) -> Vec3 {
        self.x.values()
    }

    pub fn x_u(&self) -> Vec3<Dual4> {
        self.x.map(|c| c.du())
    }

    pub fn x_v(&self) -> Vec3<Dual4> {
        self.x.map(|c| c.dv())
    }

    /// The value of `∂ᵤⁱ∂ᵥʲ x`.
    pub fn partial(&self, i: usize, j: usize) -> Vec3 {
        self.x.map(|c| c.partial(i, j))
    }

    pub fn is_regular(&self) -> bool {
        self.partial(1, 0).cross(&self.partial(0, 1)).norm() >= DEGENERATE_TANGENT
    }

    /// The 0-adapted frame `(x_u, x_v, n/|n|²)` as a jet field (order 3).
    pub fn zero_adapted_frame(&self) -> Result<Mat3<Dual4>> {
        complete_unimodular_matrix(&self.x_u(), &self.x_v())
    }
}

/// Frames sampled on a rectangular grid, stored v-outer, u-inner.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameGrid {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub frames: Vec<Mat3>,
}

impl FrameGrid {
    pub fn at(&self, iu: usize, iv: usize) -> &Mat3 {
        &self.frames[iv * self.u.len() + iu]
    }

    /// Maurer–Cartan coefficients at every node via fourth-order differences.
    pub fn mc_coefficients(&self) -> Result<Vec<MCCoefficients>> {
        let (nu, nv) = (self.u.len(), self.v.len());
        if self.frames.len() != nu * nv {
            return Err(Error::InvalidInput(format!(
                "frame grid holds {} frames, expected {nu}×{nv}",
                self.frames.len()
            )));
        }
        let su = AxisStencils::new(&self.u, 1).ok_or(Error::GridTooCoarse {
            axis: "u",
            points: nu,
            needed: 2,
        })?;
        let sv = AxisStencils::new(&self.v, 1).ok_or(Error::GridTooCoarse {
            axis: "v",
            points: nv,
            needed: 2,
        })?;
        let mut out = Vec::with_capacity(nu * nv);
        for iv in 0..nv {
            for iu in 0..nu {
                let (stu, stv) = (su.get(iu, 1), sv.get(iv, 1));
                let mut du = Mat3::zero();
                let mut dv = Mat3::zero();
                for r in 0..3 {
                    for c in 0..3 {
                        du.0[r][c] = stu.apply_with(|k| self.at(k, iv).0[r][c]);
                        dv.0[r][c] = stv.apply_with(|k| self.at(iu, k).0[r][c]);
                    }
                }
                let inv = checked_inverse(self.at(iu, iv))?;
                out.push(MCCoefficients {
                    a_u: inv * du,
                    a_v: inv * dv,
                });
            }
        }
        Ok(out)
    }
}
