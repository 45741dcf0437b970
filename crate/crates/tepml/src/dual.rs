//! Forward-mode dual numbers over complex scalars.
//!
//! `Dual<T>` carries a value and a 3-vector of first derivatives. Nesting
//! (`Dual<Dual<C64>>`) gives mixed second derivatives with respect to two
//! independent sets of seeds, which is how the double-layer kernel gets its
//! target-point gradient.

use num_complex::Complex64 as C64;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Complex-like scalar that can flow through the kernel formulas.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    fn constant(c: C64) -> Self;
    fn scale(self, c: C64) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn recip(self) -> Self;
    fn value(&self) -> C64;

    fn zero() -> Self {
        Self::constant(C64::new(0.0, 0.0))
    }
}

impl Scalar for C64 {
    #[inline]
    fn constant(c: C64) -> Self {
        c
    }
    #[inline]
    fn scale(self, c: C64) -> Self {
        self * c
    }
    #[inline]
    fn exp(self) -> Self {
        C64::exp(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        C64::sqrt(self)
    }
    #[inline]
    fn recip(self) -> Self {
        self.inv()
    }
    #[inline]
    fn value(&self) -> C64 {
        *self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T> {
    pub v: T,
    pub d: [T; 3],
}

impl<T: Scalar> Dual<T> {
    pub fn new(v: T, d: [T; 3]) -> Self {
        Self { v, d }
    }

    /// Independent variable along `axis` with derivative `seed`.
    pub fn variable(v: T, axis: usize, seed: T) -> Self {
        let mut d = [T::zero(); 3];
        d[axis] = seed;
        Self { v, d }
    }

    #[inline]
    fn chain(self, v: T, dv: T) -> Self {
        Self {
            v,
            d: [self.d[0] * dv, self.d[1] * dv, self.d[2] * dv],
        }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            d: [self.d[0] + o.d[0], self.d[1] + o.d[1], self.d[2] + o.d[2]],
        }
    }
}

impl<T: Scalar> AddAssign for Dual<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self {
            v: self.v - o.v,
            d: [self.d[0] - o.d[0], self.d[1] - o.d[1], self.d[2] - o.d[2]],
        }
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self {
            v: -self.v,
            d: [-self.d[0], -self.d[1], -self.d[2]],
        }
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            d: [
                self.d[0] * o.v + self.v * o.d[0],
                self.d[1] * o.v + self.v * o.d[1],
                self.d[2] * o.v + self.v * o.d[2],
            ],
        }
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    #[inline]
    fn constant(c: C64) -> Self {
        Self {
            v: T::constant(c),
            d: [T::zero(); 3],
        }
    }
    #[inline]
    fn scale(self, c: C64) -> Self {
        Self {
            v: self.v.scale(c),
            d: [self.d[0].scale(c), self.d[1].scale(c), self.d[2].scale(c)],
        }
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        let ds = (s + s).recip();
        self.chain(s, ds)
    }
    #[inline]
    fn recip(self) -> Self {
        let r = self.v.recip();
        self.chain(r, -(r * r))
    }
    #[inline]
    fn value(&self) -> C64 {
        self.v.value()
    }
}
