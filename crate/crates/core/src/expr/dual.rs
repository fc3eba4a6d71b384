//! Truncated bivariate Taylor jets in `(u, v)`.
//!
//! A [`Dual4`] stores the Taylor coefficients `∂ᵤⁱ∂ᵥʲ f / (i! j!)` for every
//! `i + j ≤ 4`. Products are truncated convolutions of the coefficient arrays,
//! which is exactly the Leibniz rule written in the Taylor basis. Elementary
//! functions are applied by composing their univariate Taylor series with the
//! nilpotent part of the argument.
//!
//! Each jet also records the total order up to which its coefficients are
//! meaningful. Differentiating a jet lowers that order by one, and binary
//! operations keep the smaller order of the two operands.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Highest total derivative order carried by a jet.
pub const MAX_ORDER: usize = 4;

/// Number of coefficients for all `(i, j)` with `i + j ≤ MAX_ORDER`.
pub const JET_LEN: usize = (MAX_ORDER + 1) * (MAX_ORDER + 2) / 2;

const FACTORIAL: [f64; MAX_ORDER + 1] = [1.0, 1.0, 2.0, 6.0, 24.0];

#[inline]
const fn slot(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

/// Value and all mixed `(u, v)` partial derivatives up to total order four.
#[derive(Clone, Copy, PartialEq)]
pub struct Dual4 {
    order: u8,
    coeffs: [f64; JET_LEN],
}

impl Dual4 {
    /// A constant; every derivative slot is zero.
    pub fn constant(value: f64) -> Self {
        let mut coeffs = [0.0; JET_LEN];
        coeffs[0] = value;
        Dual4 {
            order: MAX_ORDER as u8,
            coeffs,
        }
    }

    /// The coordinate function `u`, seeded at `u0`.
    pub fn var_u(u0: f64, order: usize) -> Self {
        let mut jet = Self::constant(u0).truncated(order);
        if order >= 1 {
            jet.coeffs[slot(1, 0)] = 1.0;
        }
        jet
    }

    /// The coordinate function `v`, seeded at `v0`.
    pub fn var_v(v0: f64, order: usize) -> Self {
        let mut jet = Self::constant(v0).truncated(order);
        if order >= 1 {
            jet.coeffs[slot(0, 1)] = 1.0;
        }
        jet
    }

    /// Builds a jet from its partial derivatives `∂ᵤⁱ∂ᵥʲ f`.
    pub fn from_partials(order: usize, mut partial: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut coeffs = [0.0; JET_LEN];
        for d in 0..=order {
            for j in 0..=d {
                let i = d - j;
                coeffs[slot(i, j)] = partial(i, j) / (FACTORIAL[i] * FACTORIAL[j]);
            }
        }
        Dual4 {
            order: order as u8,
            coeffs,
        }
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Total order up to which the derivative slots are valid.
    pub fn order(&self) -> usize {
        self.order as usize
    }

    /// Taylor coefficient of `uⁱvʲ`.
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        assert!(i + j <= MAX_ORDER, "partial ({i},{j}) exceeds jet order");
        if i + j > self.order() {
            0.0
        } else {
            self.coeffs[slot(i, j)]
        }
    }

    /// The mixed partial `∂ᵤⁱ∂ᵥʲ f`. Slots above [`Dual4::order`] read as zero.
    pub fn partial(&self, i: usize, j: usize) -> f64 {
        self.coeff(i, j) * FACTORIAL[i] * FACTORIAL[j]
    }

    /// Drops every coefficient above `order`.
    pub fn truncated(mut self, order: usize) -> Self {
        let order = order.min(self.order());
        for d in (order + 1)..=MAX_ORDER {
            for j in 0..=d {
                self.coeffs[slot(d - j, j)] = 0.0;
            }
        }
        self.order = order as u8;
        self
    }

    /// `∂/∂u` of the jet; the result is valid to one order less.
    pub fn du(&self) -> Self {
        self.shift(1, 0)
    }

    /// `∂/∂v` of the jet; the result is valid to one order less.
    pub fn dv(&self) -> Self {
        self.shift(0, 1)
    }

    fn shift(&self, di: usize, dj: usize) -> Self {
        if self.order == 0 {
            // Nothing is known about the derivative of a bare value.
            return Dual4 {
                order: 0,
                coeffs: [0.0; JET_LEN],
            };
        }
        let order = self.order() - 1;
        let mut coeffs = [0.0; JET_LEN];
        for d in 0..=order {
            for j in 0..=d {
                let i = d - j;
                let (si, sj) = (i + di, j + dj);
                let factor = if di == 1 { si as f64 } else { sj as f64 };
                coeffs[slot(i, j)] = factor * self.coeffs[slot(si, sj)];
            }
        }
        Dual4 {
            order: order as u8,
            coeffs,
        }
    }

    /// Applies a function given its derivatives `f⁽ᵏ⁾(x₀)` at `x₀ = self.value()`.
    pub fn compose(&self, derivs: [f64; MAX_ORDER + 1]) -> Self {
        let order = self.order();
        let mut nil = *self;
        nil.coeffs[0] = 0.0;
        let mut out = Self::constant(derivs[0]).truncated(order);
        let mut power = Self::constant(1.0).truncated(order);
        for (k, dk) in derivs.iter().enumerate().take(order + 1).skip(1) {
            power *= nil;
            out += power * (dk / FACTORIAL[k]);
        }
        out
    }

    pub fn recip(&self) -> Self {
        let x = self.value();
        let r = 1.0 / x;
        self.compose([r, -r * r, 2.0 * r.powi(3), -6.0 * r.powi(4), 24.0 * r.powi(5)])
    }

    pub fn sqrt(&self) -> Self {
        let x = self.value();
        let s = x.sqrt();
        self.compose([
            s,
            0.5 / s,
            -0.25 / (s * x),
            0.375 / (s * x * x),
            -0.9375 / (s * x * x * x),
        ])
    }

    pub fn ln(&self) -> Self {
        let x = self.value();
        let r = 1.0 / x;
        self.compose([x.ln(), r, -r * r, 2.0 * r.powi(3), -6.0 * r.powi(4)])
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose([e; MAX_ORDER + 1])
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c, s])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s, c])
    }

    pub fn sinh(&self) -> Self {
        let (sh, ch) = (self.value().sinh(), self.value().cosh());
        self.compose([sh, ch, sh, ch, sh])
    }

    pub fn cosh(&self) -> Self {
        let (sh, ch) = (self.value().sinh(), self.value().cosh());
        self.compose([ch, sh, ch, sh, ch])
    }

    /// Real power `x^p`; the value must be positive.
    pub fn powf(&self, p: f64) -> Self {
        let x = self.value();
        let mut derivs = [0.0; MAX_ORDER + 1];
        let mut falling = 1.0;
        for (k, d) in derivs.iter_mut().enumerate() {
            *d = falling * x.powf(p - k as f64);
            falling *= p - k as f64;
        }
        self.compose(derivs)
    }

    /// Integer power by repeated multiplication; negative powers go through [`Dual4::recip`].
    pub fn powi(&self, n: i32) -> Self {
        let base = if n < 0 { self.recip() } else { *self };
        let mut acc = Self::constant(1.0).truncated(self.order());
        let mut sq = base;
        let mut e = n.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc *= sq;
            }
            e >>= 1;
            if e > 0 {
                sq = sq * sq;
            }
        }
        acc
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

impl Default for Dual4 {
    fn default() -> Self {
        Self::constant(0.0)
    }
}

impl From<f64> for Dual4 {
    fn from(value: f64) -> Self {
        Self::constant(value)
    }
}

impl fmt::Debug for Dual4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("Dual4");
        s.field("order", &self.order);
        s.field("value", &self.value());
        let mut partials = Vec::new();
        for d in 1..=self.order() {
            for j in 0..=d {
                partials.push(((d - j, j), self.partial(d - j, j)));
            }
        }
        s.field("partials", &partials).finish()
    }
}

impl Add for Dual4 {
    type Output = Dual4;
    fn add(self, rhs: Dual4) -> Dual4 {
        let order = self.order.min(rhs.order);
        let mut coeffs = [0.0; JET_LEN];
        for (k, c) in coeffs.iter_mut().enumerate().take(slot(0, order as usize) + 1) {
            *c = self.coeffs[k] + rhs.coeffs[k];
        }
        Dual4 { order, coeffs }
    }
}

impl Sub for Dual4 {
    type Output = Dual4;
    fn sub(self, rhs: Dual4) -> Dual4 {
        self + (-rhs)
    }
}

impl Neg for Dual4 {
    type Output = Dual4;
    fn neg(mut self) -> Dual4 {
        for c in self.coeffs.iter_mut() {
            *c = -*c;
        }
        self
    }
}

impl Mul for Dual4 {
    type Output = Dual4;
    fn mul(self, rhs: Dual4) -> Dual4 {
        let order = self.order.min(rhs.order) as usize;
        let mut coeffs = [0.0; JET_LEN];
        for d in 0..=order {
            for j in 0..=d {
                let i = d - j;
                let mut acc = 0.0;
                for a in 0..=i {
                    for b in 0..=j {
                        acc += self.coeffs[slot(a, b)] * rhs.coeffs[slot(i - a, j - b)];
                    }
                }
                coeffs[slot(i, j)] = acc;
            }
        }
        Dual4 {
            order: order as u8,
            coeffs,
        }
    }
}

impl Div for Dual4 {
    type Output = Dual4;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Dual4) -> Dual4 {
        self * rhs.recip()
    }
}

impl Mul<f64> for Dual4 {
    type Output = Dual4;
    fn mul(mut self, rhs: f64) -> Dual4 {
        for c in self.coeffs.iter_mut() {
            *c *= rhs;
        }
        self
    }
}

impl Add<f64> for Dual4 {
    type Output = Dual4;
    fn add(mut self, rhs: f64) -> Dual4 {
        self.coeffs[0] += rhs;
        self
    }
}

impl AddAssign for Dual4 {
    fn add_assign(&mut self, rhs: Dual4) {
        *self = *self + rhs;
    }
}

impl SubAssign for Dual4 {
    fn sub_assign(&mut self, rhs: Dual4) {
        *self = *self - rhs;
    }
}

impl MulAssign for Dual4 {
    fn mul_assign(&mut self, rhs: Dual4) {
        *self = *self * rhs;
    }
}
