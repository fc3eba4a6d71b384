use thiserror::Error;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("degenerate tangent plane: |x_u × x_v| = {norm:e}")]
    DegenerateTangent { norm: f64 },

    #[error("singular frame matrix (condition number {cond:e})")]
    SingularFrame { cond: f64 },

    #[error("gauge is not unimodular: det = {det}")]
    NonUnimodularGauge { det: f64 },

    #[error("h12 = {h12} is not positive after the frame relabel")]
    NonPositiveH12 { h12: f64 },

    #[error("the two reads of l12 disagree by {mismatch:e}; the frame is not 2-adapted")]
    InconsistentL12 { mismatch: f64 },

    #[error("grid too coarse: {points} points along {axis}, need at least {needed}")]
    GridTooCoarse {
        axis: &'static str,
        points: usize,
        needed: usize,
    },

    #[error("integration diverged at v = {v}")]
    Divergence { v: f64 },

    #[error("z - xy depends on u (spread {spread:e} at v = {v}); the surface is not an improper affine sphere graph")]
    NotImproperSphere { spread: f64, v: f64 },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("malformed grid file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
