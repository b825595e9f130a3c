//! Closed real intervals with outward widening after every operation.

use std::fmt;

use super::arith::Arith;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

fn down<T: Real>(v: T) -> T {
    if v.is_infinite() {
        return v;
    }
    v - (v.abs() * T::epsilon() + T::min_positive_value())
}

fn up<T: Real>(v: T) -> T {
    if v.is_infinite() {
        return v;
    }
    v + (v.abs() * T::epsilon() + T::min_positive_value())
}

/// Product with the convention `0 * inf = 0`.
fn mulx<T: Real>(a: T, b: T) -> T {
    if a == T::zero() || b == T::zero() {
        T::zero()
    } else {
        a * b
    }
}

impl<T: Real> Interval<T> {
    pub fn new(lo: T, hi: T) -> Self {
        debug_assert!(!(lo > hi), "inverted interval");
        Interval { lo, hi }
    }

    pub fn point(v: T) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn entire() -> Self {
        Interval {
            lo: T::neg_infinity(),
            hi: T::infinity(),
        }
    }

    fn widened(lo: T, hi: T) -> Self {
        Interval {
            lo: down(lo),
            hi: up(hi),
        }
    }

    pub fn contains(&self, v: T) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(T::zero())
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn mid(&self) -> T {
        if self.lo.is_infinite() || self.hi.is_infinite() {
            if self.lo.is_infinite() && self.hi.is_infinite() {
                return T::zero();
            }
            return if self.lo.is_infinite() { self.hi } else { self.lo };
        }
        self.lo + (self.hi - self.lo) * T::lit(0.5)
    }

    pub fn hull(&self, o: &Self) -> Self {
        Interval {
            lo: self.lo.min(o.lo),
            hi: self.hi.max(o.hi),
        }
    }

    /// Intersection; `None` when disjoint.
    pub fn intersect(&self, o: &Self) -> Option<Self> {
        let lo = self.lo.max(o.lo);
        let hi = self.hi.min(o.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn mag(&self) -> T {
        self.lo.abs().max(self.hi.abs())
    }

    /// Splits at the midpoint.
    pub fn bisect(&self) -> (Self, Self) {
        let m = self.mid();
        (Interval { lo: self.lo, hi: m }, Interval { lo: m, hi: self.hi })
    }

    /// Sign of the interval: 1 if non-negative, -1 if non-positive, 0 otherwise.
    pub fn sign(&self) -> i8 {
        if self.lo >= T::zero() {
            1
        } else if self.hi <= T::zero() {
            -1
        } else {
            0
        }
    }

    fn trig(&self, peak: f64) -> Self {
        // Range of sin over the interval shifted so that maxima sit at
        // `peak + 2k pi` and minima at `peak + pi + 2k pi`.
        let two_pi = 2.0 * std::f64::consts::PI;
        let (lo, hi) = (self.lo.as_f64(), self.hi.as_f64());
        if !(hi - lo < two_pi) || !lo.is_finite() || !hi.is_finite() {
            return Interval::new(-T::one(), T::one());
        }
        let has = |p: f64| {
            let k = ((lo - p) / two_pi).ceil();
            p + k * two_pi <= hi
        };
        let f = |v: T| {
            if peak == 0.0 {
                v.cos()
            } else {
                v.sin()
            }
        };
        let (a, b) = (f(self.lo), f(self.hi));
        let mut out = Self::widened(a.min(b), a.max(b));
        if has(peak) {
            out.hi = T::one();
        }
        if has(peak + std::f64::consts::PI) {
            out.lo = -T::one();
        }
        out.lo = out.lo.max(-T::one());
        out.hi = out.hi.min(T::one());
        out
    }
}

impl<T: Real> fmt::Display for Interval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl<T: Real> Arith for Interval<T> {
    fn constant(v: f64) -> Self {
        let t = T::lit(v);
        if t.as_f64() == v {
            Interval::point(t)
        } else {
            Self::widened(t, t)
        }
    }

    fn add(&self, o: &Self) -> Self {
        Self::widened(self.lo + o.lo, self.hi + o.hi)
    }

    fn sub(&self, o: &Self) -> Self {
        Self::widened(self.lo - o.hi, self.hi - o.lo)
    }

    fn mul(&self, o: &Self) -> Self {
        let p = [
            mulx(self.lo, o.lo),
            mulx(self.lo, o.hi),
            mulx(self.hi, o.lo),
            mulx(self.hi, o.hi),
        ];
        let lo = p.iter().fold(T::infinity(), |m, &v| m.min(v));
        let hi = p.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
        Self::widened(lo, hi)
    }

    fn div(&self, o: &Self) -> Result<Self, &'static str> {
        if o.contains_zero() {
            return Err("division by an interval containing zero");
        }
        let inv = Self::widened(T::one() / o.hi, T::one() / o.lo);
        Ok(self.mul(&inv))
    }

    fn neg(&self) -> Self {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    fn powi(&self, k: i32) -> Result<Self, &'static str> {
        if k == 0 {
            return Ok(Interval::point(T::one()));
        }
        if k < 0 {
            let p = self.powi(-k)?;
            return Interval::point(T::one()).div(&p);
        }
        let (a, b) = (self.lo.powi(k), self.hi.powi(k));
        Ok(if k % 2 == 1 || self.lo >= T::zero() {
            Self::widened(a, b)
        } else if self.hi <= T::zero() {
            Self::widened(b, a)
        } else {
            Interval {
                lo: T::zero(),
                hi: up(a.max(b)),
            }
        })
    }

    fn powf(&self, e: &Self) -> Result<Self, &'static str> {
        if e.lo == e.hi {
            let p = e.lo;
            if p >= T::zero() {
                if self.lo < T::zero() {
                    return Err("non-integer power of a possibly negative base");
                }
                return Ok(Self::widened(self.lo.powf(p), self.hi.powf(p)));
            }
            if self.lo <= T::zero() {
                return Err("negative power of a base that may vanish");
            }
            return Ok(Self::widened(self.hi.powf(p), self.lo.powf(p)));
        }
        if self.lo <= T::zero() {
            return Err("variable power of a base that may vanish");
        }
        let ln = Self::widened(self.lo.ln(), self.hi.ln());
        Ok(e.mul(&ln).exp())
    }

    fn exp(&self) -> Self {
        let lo = down(self.lo.exp()).max(T::zero());
        Interval {
            lo,
            hi: up(self.hi.exp()),
        }
    }

    fn sin(&self) -> Self {
        self.trig(std::f64::consts::FRAC_PI_2)
    }

    fn cos(&self) -> Self {
        self.trig(0.0)
    }

    fn abs(&self) -> Self {
        if self.lo >= T::zero() {
            *self
        } else if self.hi <= T::zero() {
            self.neg()
        } else {
            Interval {
                lo: T::zero(),
                hi: self.mag(),
            }
        }
    }

    /// Encloses the square root over the non-negative part of the interval.
    fn sqrt(&self) -> Result<Self, &'static str> {
        if self.hi < T::zero() {
            return Err("square root of a negative interval");
        }
        let lo = down(self.lo.max(T::zero()).sqrt()).max(T::zero());
        Ok(Interval {
            lo,
            hi: up(self.hi.sqrt()),
        })
    }

    fn min(&self, o: &Self) -> Self {
        Interval {
            lo: self.lo.min(o.lo),
            hi: self.hi.min(o.hi),
        }
    }

    fn max(&self, o: &Self) -> Self {
        Interval {
            lo: self.lo.max(o.lo),
            hi: self.hi.max(o.hi),
        }
    }

    fn is_valid(&self) -> bool {
        !self.lo.is_nan() && !self.hi.is_nan()
    }
}
