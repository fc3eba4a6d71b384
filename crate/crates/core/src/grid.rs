//! Sampled surfaces on rectangular `(u, v)` grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Dual4, MAX_ORDER};
use crate::frames::{FrameGrid, SurfaceJet};
use crate::linalg::{Mat3, Vec3};
use crate::stencil::{linspace, AxisStencils};

/// Minimum nodes per direction for grid-mode differential analysis.
pub const MIN_ANALYSIS_POINTS: usize = 5;

/// Rectangular parameter grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub u_range: (f64, f64),
    pub v_range: (f64, f64),
    pub nu: usize,
    pub nv: usize,
}

impl GridSpec {
    pub fn new(u_range: (f64, f64), v_range: (f64, f64), nu: usize, nv: usize) -> Result<Self> {
        let spec = GridSpec {
            u_range,
            v_range,
            nu,
            nv,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// A square grid `[lo, hi]²` with `n` nodes per side.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new((lo, hi), (lo, hi), n, n)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("u", self.u_range), ("v", self.v_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidInput(format!("{name} range [{lo}, {hi}] is empty or not finite")));
            }
        }
        if self.nu < 2 || self.nv < 2 {
            return Err(Error::InvalidInput(format!(
                "grid needs at least 2 nodes per direction, got {}×{}",
                self.nu, self.nv
            )));
        }
        Ok(())
    }

    pub fn u_values(&self) -> Vec<f64> {
        linspace(self.u_range.0, self.u_range.1, self.nu)
    }

    pub fn v_values(&self) -> Vec<f64> {
        linspace(self.v_range.0, self.v_range.1, self.nv)
    }
}

/// Frame vectors stored alongside a grid, same layout as the points.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFrames {
    pub e1: Vec<Vec3>,
    pub e2: Vec<Vec3>,
    pub e3: Vec<Vec3>,
}

/// Description of a closed-form preset that produced a grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PresetInfo {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    #[serde(default)]
    pub ell: Option<String>,
    #[serde(default)]
    pub f: Option<String>,
    #[serde(default)]
    pub presets: Option<PresetInfo>,
    #[serde(default)]
    pub rk_step: Option<f64>,
    #[serde(default)]
    pub generated_by: String,
}

/// A sampled parametrization `x(u, v)`, stored v-outer, u-inner.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceGrid {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub points: Vec<Vec3>,
    pub frames: Option<GridFrames>,
    pub meta: GridMeta,
}

impl SurfaceGrid {
    pub fn nu(&self) -> usize {
        self.u.len()
    }

    pub fn nv(&self) -> usize {
        self.v.len()
    }

    #[inline]
    pub fn index(&self, iu: usize, iv: usize) -> usize {
        iv * self.u.len() + iu
    }

    pub fn point(&self, iu: usize, iv: usize) -> Vec3 {
        self.points[self.index(iu, iv)]
    }

    /// Samples a closed-form map on the grid.
    pub fn sample(spec: &GridSpec, mut f: impl FnMut(f64, f64) -> Result<Vec3>) -> Result<Self> {
        spec.validate()?;
        let (u, v) = (spec.u_values(), spec.v_values());
        let mut points = Vec::with_capacity(u.len() * v.len());
        for &vv in &v {
            for &uu in &u {
                points.push(f(uu, vv)?);
            }
        }
        Ok(SurfaceGrid {
            u,
            v,
            points,
            frames: None,
            meta: GridMeta::default(),
        })
    }

    /// Checks shapes, finiteness and strictly increasing axes.
    pub fn validate(&self) -> Result<()> {
        let n = self.nu() * self.nv();
        if self.nu() < 2 || self.nv() < 2 {
            return Err(Error::Format(format!("grid is {}×{}, need at least 2×2", self.nu(), self.nv())));
        }
        for (name, axis) in [("u", &self.u), ("v", &self.v)] {
            if axis.iter().any(|x| !x.is_finite()) || axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Format(format!("{name} axis must be finite and strictly increasing")));
            }
        }
        if self.points.len() != n {
            return Err(Error::Format(format!("{} points for a {}×{} grid", self.points.len(), self.nu(), self.nv())));
        }
        if let Some(fr) = &self.frames {
            if fr.e1.len() != n || fr.e2.len() != n || fr.e3.len() != n {
                return Err(Error::Format("frame arrays do not match the point grid".into()));
            }
            let all = fr.e1.iter().chain(&fr.e2).chain(&fr.e3);
            if all.into_iter().any(|p| !p.is_finite()) {
                return Err(Error::Format("non-finite frame vector".into()));
            }
        }
        if self.points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Format("non-finite point".into()));
        }
        Ok(())
    }

    pub fn frame_grid(&self) -> Option<FrameGrid> {
        let fr = self.frames.as_ref()?;
        let frames = (0..self.points.len())
            .map(|k| Mat3::from_cols(fr.e1[k], fr.e2[k], fr.e3[k]))
            .collect();
        Some(FrameGrid {
            u: self.u.clone(),
            v: self.v.clone(),
            frames,
        })
    }

    /// Image under the equiaffine map `x ↦ A x + b`; frames map by `A`.
    pub fn transformed(&self, a: &Mat3, b: &Vec3) -> SurfaceGrid {
        let mut out = self.clone();
        for p in out.points.iter_mut() {
            *p = a.mul_vec(p) + *b;
        }
        if let Some(fr) = out.frames.as_mut() {
            for e in fr.e1.iter_mut().chain(fr.e2.iter_mut()).chain(fr.e3.iter_mut()) {
                *e = a.mul_vec(e);
            }
        }
        out
    }

    /// Finite-difference estimate of the order-4 jet of `x` at every node.
    pub fn jets(&self) -> Result<Vec<SurfaceJet>> {
        for (axis, n) in [("u", self.nu()), ("v", self.nv())] {
            if n < MIN_ANALYSIS_POINTS {
                return Err(Error::GridTooCoarse {
                    axis,
                    points: n,
                    needed: MIN_ANALYSIS_POINTS,
                });
            }
        }
        let su = AxisStencils::new(&self.u, MAX_ORDER).expect("axis length checked");
        let sv = AxisStencils::new(&self.v, MAX_ORDER).expect("axis length checked");
        let mut out = Vec::with_capacity(self.points.len());
        for iv in 0..self.nv() {
            for iu in 0..self.nu() {
                let mut comps = [Dual4::default(); 3];
                for (c, comp) in comps.iter_mut().enumerate() {
                    *comp = Dual4::from_partials(MAX_ORDER, |i, j| {
                        if i + j == 0 {
                            return self.point(iu, iv)[c];
                        }
                        let (stu, stv) = (su.get(iu, i), sv.get(iv, j));
                        stv.apply_with(|kv| stu.apply_with(|ku| self.point(ku, kv)[c]))
                    });
                }
                out.push(SurfaceJet { x: Vec3(comps) });
            }
        }
        Ok(out)
    }
}
