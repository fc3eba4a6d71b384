//! Finite-difference stencils on (possibly non-uniform) 1-D node sets.
//!
//! Weights come from Fornberg's recursion. Interior nodes use centered
//! windows; near the ends the window slides inward so every node keeps
//! fourth-order accuracy when enough nodes exist.

/// Target order of accuracy for every stencil.
pub const ACCURACY: usize = 4;

/// Finite-difference weights for derivative orders `0..=max_deriv` at `x0`.
///
/// Returns `w[k][j]`, the weight of node `j` in the `k`-th derivative.
pub fn fornberg_weights(x0: f64, nodes: &[f64], max_deriv: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_deriv + 1];
    if n == 0 {
        return c;
    }
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(max_deriv);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// A derivative stencil anchored at `start` in the node array.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil {
    pub start: usize,
    pub weights: Vec<f64>,
}

impl Stencil {
    pub fn apply(&self, values: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(&values[self.start..])
            .map(|(w, y)| w * y)
            .sum()
    }

    /// Applies the stencil to values fetched through `at(index)`.
    pub fn apply_with(&self, mut at: impl FnMut(usize) -> f64) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * at(self.start + k))
            .sum()
    }
}

/// Stencil for the `deriv`-th derivative at node `i`.
///
/// Returns `None` when fewer than `deriv + 1` nodes exist.
pub fn stencil(nodes: &[f64], i: usize, deriv: usize) -> Option<Stencil> {
    let n = nodes.len();
    if n < deriv + 1 {
        return None;
    }
    if deriv == 0 {
        return Some(Stencil {
            start: i,
            weights: vec![1.0],
        });
    }
    // Symmetric windows gain one order for free when the derivative is even.
    let central = 2 * deriv.div_ceil(2) + ACCURACY - 1;
    let half = central / 2;
    let (start, len) = if i >= half && i + half < n {
        (i - half, central)
    } else {
        let len = (deriv + ACCURACY).min(n);
        let start = i.saturating_sub(len / 2).min(n - len);
        (start, len)
    };
    let w = fornberg_weights(nodes[i], &nodes[start..start + len], deriv);
    Some(Stencil {
        start,
        weights: w[deriv].clone(),
    })
}

/// Precomputed stencils for derivative orders `0..=max_deriv` at every node of an axis.
#[derive(Clone, Debug)]
pub struct AxisStencils {
    table: Vec<Vec<Stencil>>,
}

impl AxisStencils {
    pub fn new(nodes: &[f64], max_deriv: usize) -> Option<Self> {
        let table = (0..nodes.len())
            .map(|i| (0..=max_deriv).map(|d| stencil(nodes, i, d)).collect::<Option<Vec<_>>>())
            .collect::<Option<Vec<_>>>()?;
        Some(AxisStencils { table })
    }

    pub fn get(&self, i: usize, deriv: usize) -> &Stencil {
        &self.table[i][deriv]
    }
}

/// Evenly spaced nodes from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|k| if k == n - 1 { hi } else { lo + step * k as f64 })
                .collect()
        }
    }
}
