//! Forward-mode differentiation over intervals: each value carries interval
//! enclosures of its partial derivatives with respect to the seeded
//! variables. Non-smooth points (abs, min, max at ties) use the convex hull
//! of the one-sided derivatives.

use super::arith::Arith;
use super::interval::Interval;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct IDual<T> {
    pub v: Interval<T>,
    /// Partial derivatives; missing trailing entries are zero.
    pub d: Vec<Interval<T>>,
}

impl<T: Real> IDual<T> {
    pub fn constant_interval(v: Interval<T>) -> Self {
        IDual { v, d: Vec::new() }
    }

    /// Variable number `k` of `count` ranging over `v`.
    pub fn variable(v: Interval<T>, k: usize, count: usize) -> Self {
        let mut d = vec![Interval::point(T::zero()); count];
        d[k] = Interval::point(T::one());
        IDual { v, d }
    }

    pub fn deriv(&self, k: usize) -> Interval<T> {
        self.d.get(k).copied().unwrap_or(Interval::point(T::zero()))
    }

    fn zip(&self, o: &Self, f: impl Fn(Interval<T>, Interval<T>) -> Interval<T>) -> Vec<Interval<T>> {
        let n = self.d.len().max(o.d.len());
        (0..n).map(|k| f(self.deriv(k), o.deriv(k))).collect()
    }

    fn scale(&self, s: &Interval<T>) -> Vec<Interval<T>> {
        self.d.iter().map(|d| d.mul(s)).collect()
    }

    fn hull(&self, o: &Self, v: Interval<T>) -> Self {
        IDual {
            v,
            d: self.zip(o, |a, b| a.hull(&b)),
        }
    }
}

impl<T: Real> Arith for IDual<T> {
    fn constant(v: f64) -> Self {
        IDual::constant_interval(Interval::constant(v))
    }

    fn add(&self, o: &Self) -> Self {
        IDual {
            v: self.v.add(&o.v),
            d: self.zip(o, |a, b| a.add(&b)),
        }
    }

    fn sub(&self, o: &Self) -> Self {
        IDual {
            v: self.v.sub(&o.v),
            d: self.zip(o, |a, b| a.sub(&b)),
        }
    }

    fn mul(&self, o: &Self) -> Self {
        IDual {
            v: self.v.mul(&o.v),
            d: self.zip(o, |a, b| a.mul(&o.v).add(&b.mul(&self.v))),
        }
    }

    fn div(&self, o: &Self) -> Result<Self, &'static str> {
        let v = self.v.div(&o.v)?;
        let den = o.v.powi(2)?;
        let d = self
            .zip(o, |a, b| a.mul(&o.v).sub(&b.mul(&self.v)))
            .into_iter()
            .map(|a| a.div(&den))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(IDual { v, d })
    }

    fn neg(&self) -> Self {
        IDual {
            v: self.v.neg(),
            d: self.d.iter().map(|d| d.neg()).collect(),
        }
    }

    fn powi(&self, k: i32) -> Result<Self, &'static str> {
        if k == 0 {
            return Ok(IDual::constant(1.0));
        }
        let v = self.v.powi(k)?;
        let f = self.v.powi(k - 1)?.mul(&Interval::constant(k as f64));
        Ok(IDual { v, d: self.scale(&f) })
    }

    fn powf(&self, e: &Self) -> Result<Self, &'static str> {
        let v = self.v.powf(&e.v)?;
        if e.d.iter().all(|d| d.lo == T::zero() && d.hi == T::zero()) && e.v.lo == e.v.hi {
            // Constant exponent: p * x^(p-1) * dx.
            let pm1 = e.v.sub(&Interval::point(T::one()));
            let f = self.v.powf(&pm1)?.mul(&e.v);
            return Ok(IDual { v, d: self.scale(&f) });
        }
        if self.v.lo <= T::zero() {
            return Err("variable power of a base that may vanish");
        }
        let ln = Interval::new(self.v.lo.ln(), self.v.hi.ln());
        // d(a^b) = a^b (b' ln a + b a' / a).
        let d = (0..self.d.len().max(e.d.len()))
            .map(|k| {
                let t = e.deriv(k).mul(&ln).add(&e.v.mul(&self.deriv(k)).div(&self.v)?);
                Ok(v.mul(&t))
            })
            .collect::<Result<Vec<_>, &'static str>>()?;
        Ok(IDual { v, d })
    }

    fn exp(&self) -> Self {
        let v = self.v.exp();
        IDual { v, d: self.scale(&v) }
    }

    fn sin(&self) -> Self {
        IDual {
            v: self.v.sin(),
            d: self.scale(&self.v.cos()),
        }
    }

    fn cos(&self) -> Self {
        IDual {
            v: self.v.cos(),
            d: self.scale(&self.v.sin().neg()),
        }
    }

    fn abs(&self) -> Self {
        // A sign-definite argument makes `abs` the identity or its negation
        // on the whole box.
        let s = if self.v.lo >= T::zero() {
            Interval::point(T::one())
        } else if self.v.hi <= T::zero() {
            Interval::point(-T::one())
        } else {
            Interval::new(-T::one(), T::one())
        };
        IDual {
            v: self.v.abs(),
            d: self.scale(&s),
        }
    }

    fn sqrt(&self) -> Result<Self, &'static str> {
        let v = self.v.sqrt()?;
        if v.lo <= T::zero() {
            let d = self
                .d
                .iter()
                .map(|d| {
                    if d.lo == T::zero() && d.hi == T::zero() {
                        *d
                    } else {
                        Interval::entire()
                    }
                })
                .collect();
            return Ok(IDual { v, d });
        }
        let f = Interval::point(T::one()).div(&v.mul(&Interval::constant(2.0)))?;
        Ok(IDual { v, d: self.scale(&f) })
    }

    fn min(&self, o: &Self) -> Self {
        let v = self.v.min(&o.v);
        if self.v.hi <= o.v.lo {
            IDual { v, d: self.d.clone() }
        } else if o.v.hi <= self.v.lo {
            IDual { v, d: o.d.clone() }
        } else {
            self.hull(o, v)
        }
    }

    fn max(&self, o: &Self) -> Self {
        let v = self.v.max(&o.v);
        if self.v.lo >= o.v.hi {
            IDual { v, d: self.d.clone() }
        } else if o.v.lo >= self.v.hi {
            IDual { v, d: o.d.clone() }
        } else {
            self.hull(o, v)
        }
    }

    fn is_valid(&self) -> bool {
        self.v.is_valid() && self.d.iter().all(|d| d.is_valid())
    }
}
