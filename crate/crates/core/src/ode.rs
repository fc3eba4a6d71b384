//! Fixed-step classical Runge–Kutta integration on `ℝᴺ`.

use crate::error::{Error, Result};

/// One classical RK4 step of size `h` from `(t, y)`.
pub fn rk4_step<const N: usize>(
    rhs: &mut impl FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    t: f64,
    y: &[f64; N],
    h: f64,
) -> Result<[f64; N]> {
    let shifted = |y: &[f64; N], k: &[f64; N], s: f64| -> [f64; N] { std::array::from_fn(|i| y[i] + s * k[i]) };
    let k1 = rhs(t, y)?;
    let k2 = rhs(t + 0.5 * h, &shifted(y, &k1, 0.5 * h))?;
    let k3 = rhs(t + 0.5 * h, &shifted(y, &k2, 0.5 * h))?;
    let k4 = rhs(t + h, &shifted(y, &k3, h))?;
    Ok(std::array::from_fn(|i| {
        y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    }))
}

/// Number of equal substeps of size at most `step` covering `span`.
pub fn substeps(span: f64, step: f64) -> usize {
    // Guards against ratios like 50.000000000000004 turning into 51.
    let ratio = span.abs() / step;
    ((ratio * (1.0 - 1e-12)).ceil() as usize).max(1)
}

/// Integrates from `(t0, y0)` and returns the state at every target.
///
/// Targets on each side of `t0` are visited outward from `t0`, each reached
/// exactly by equal substeps no longer than `step`. The output is in the
/// order of `targets`.
pub fn integrate_to<const N: usize>(
    mut rhs: impl FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    t0: f64,
    y0: [f64; N],
    targets: &[f64],
    step: f64,
) -> Result<Vec<[f64; N]>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidInput(format!("integration step must be positive, got {step}")));
    }
    let mut out = vec![y0; targets.len()];
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by(|&a, &b| targets[a].total_cmp(&targets[b]));
    let split = order.partition_point(|&k| targets[k] < t0);
    let (below, above) = order.split_at(split);

    for side in [above.iter().collect::<Vec<_>>(), below.iter().rev().collect()] {
        let (mut t, mut y) = (t0, y0);
        for &k in side {
            let target = targets[k];
            if target != t {
                let n = substeps(target - t, step);
                let h = (target - t) / n as f64;
                for s in 0..n {
                    let ts = t + s as f64 * h;
                    y = rk4_step(&mut rhs, ts, &y, h)?;
                    if y.iter().any(|c| !c.is_finite()) {
                        return Err(Error::Divergence { v: ts + h });
                    }
                }
                t = target;
            }
            out[k] = y;
        }
    }
    Ok(out)
}
