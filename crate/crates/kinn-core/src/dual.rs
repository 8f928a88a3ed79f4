//! First-order dual numbers carrying a value and its derivative with respect
//! to the scalar time input.
//!
//! Every intermediate quantity in a surrogate evaluation is a `Dual`, so the
//! exact time derivative of the output falls out of a single forward pass.

use core::ops::{Add, Mul, Neg, Sub};

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual {
    /// Value.
    pub v: f64,
    /// Tangent: d(value)/dt.
    pub d: f64,
}

impl Dual {
    pub const ZERO: Dual = Dual { v: 0.0, d: 0.0 };

    /// A constant: zero tangent.
    #[inline(always)]
    pub fn constant(v: f64) -> Dual {
        Dual { v, d: 0.0 }
    }

    /// The time variable itself: unit tangent.
    #[inline(always)]
    pub fn time(t: f64) -> Dual {
        Dual { v: t, d: 1.0 }
    }

    #[inline(always)]
    pub fn tanh(self) -> Dual {
        let y = math::tanh(self.v);
        Dual {
            v: y,
            d: (1.0 - y * y) * self.d,
        }
    }

    /// swish(x) = x·σ(x), with σ the logistic sigmoid.
    #[inline(always)]
    pub fn swish(self) -> Dual {
        let s = math::sigmoid(self.v);
        Dual {
            v: self.v * s,
            d: (s + self.v * s * (1.0 - s)) * self.d,
        }
    }

    #[inline(always)]
    pub fn exp(self) -> Dual {
        let y = math::exp(self.v);
        Dual {
            v: y,
            d: y * self.d,
        }
    }

    /// sin²(x); periodic, used by the hypersphere normalization operator.
    #[inline(always)]
    pub fn sin_sq(self) -> Dual {
        let s = math::sin(self.v);
        Dual {
            v: s * s,
            d: 2.0 * s * math::cos(self.v) * self.d,
        }
    }

    /// Integer power with non-negative exponent (mass-action orders are 0..=2).
    #[inline(always)]
    pub fn powi(self, n: u32) -> Dual {
        match n {
            0 => Dual::constant(1.0),
            1 => self,
            2 => self * self,
            _ => {
                let vp = math::powi(self.v, n as i32 - 1);
                Dual {
                    v: vp * self.v,
                    d: n as f64 * vp * self.d,
                }
            }
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline(always)]
    fn add(self, rhs: Dual) -> Dual {
        Dual {
            v: self.v + rhs.v,
            d: self.d + rhs.d,
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline(always)]
    fn sub(self, rhs: Dual) -> Dual {
        Dual {
            v: self.v - rhs.v,
            d: self.d - rhs.d,
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline(always)]
    fn mul(self, rhs: Dual) -> Dual {
        Dual {
            v: self.v * rhs.v,
            d: self.v * rhs.d + self.d * rhs.v,
        }
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    #[inline(always)]
    fn mul(self, rhs: f64) -> Dual {
        Dual {
            v: self.v * rhs,
            d: self.d * rhs,
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline(always)]
    fn neg(self) -> Dual {
        Dual {
            v: -self.v,
            d: -self.d,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn elementary_tangents_match_finite_differences() {
        let x = 0.37;
        let h = 1e-6;
        let cases: [(fn(Dual) -> Dual, fn(f64) -> f64); 4] = [
            (Dual::tanh, |x| math::tanh(x)),
            (Dual::swish, |x| x * math::sigmoid(x)),
            (Dual::exp, |x| math::exp(x)),
            (Dual::sin_sq, |x| math::sin(x) * math::sin(x)),
        ];
        for (dual_f, scalar_f) in cases {
            let got = dual_f(Dual::time(x)).d;
            let want = central_diff(scalar_f, x, h);
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn product_rule() {
        let a = Dual { v: 2.0, d: 3.0 };
        let b = Dual { v: -1.5, d: 0.5 };
        let p = a * b;
        assert_eq!(p.v, -3.0);
        assert_eq!(p.d, 2.0 * 0.5 + 3.0 * -1.5);
    }
}
