#![allow(dead_code)]

use equiaffine::linalg::{Mat3, Vec3};
use rand::Rng;

/// A random member of {cubic polynomials, a·sin(bv), a·cosh(bv)} with coefficients in [−3, 3].
pub fn random_coefficient(rng: &mut impl Rng) -> String {
    let mut c = || rng.random_range(-3.0..=3.0f64);
    match c().abs() as u32 % 3 {
        0 => format!("({:.4}) + ({:.4})*v + ({:.4})*v^2 + ({:.4})*v^3", c(), c(), c(), c()),
        1 => format!("({:.4})*sin(({:.4})*v)", c(), c()),
        _ => format!("({:.4})*cosh(({:.4})*v)", c(), c()),
    }
}

/// Entries drawn from [−2, 2], rescaled to determinant one.
///
/// Draws with |det| < 0.5 are rejected to keep the rescaled entries bounded.
pub fn random_sl3(rng: &mut impl Rng) -> Mat3 {
    loop {
        let m = Mat3(std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-2.0..=2.0))));
        let det = m.det();
        if det.abs() >= 0.5 {
            let s = det.cbrt();
            return m.map(|x| x / s);
        }
    }
}

pub fn random_translation(rng: &mut impl Rng) -> Vec3 {
    Vec3::new(rng.random_range(-2.0..=2.0), rng.random_range(-2.0..=2.0), rng.random_range(-2.0..=2.0))
}

/// Vertex and face counts of an OBJ text, or an error if an index is out of range.
pub fn obj_counts(text: &str) -> Result<(usize, usize), String> {
    let vertices = text.lines().filter(|l| l.starts_with("v ")).count();
    let mut faces = 0;
    for l in text.lines().filter(|l| l.starts_with("f ")) {
        for idx in l.split_whitespace().skip(1) {
            let i: usize = idx.parse().map_err(|e| format!("{l}: {e}"))?;
            if i == 0 || i > vertices {
                return Err(format!("face index {i} out of range in `{l}`"));
            }
        }
        faces += 1;
    }
    Ok((vertices, faces))
}
