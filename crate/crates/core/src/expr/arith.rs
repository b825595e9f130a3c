use crate::scalar::Real;

/// Number-like values the evaluator can run on: plain scalars, intervals and
/// interval dual numbers. Errors carry a short reason.
pub trait Arith: Clone + Sized {
    fn constant(v: f64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Result<Self, &'static str>;
    fn neg(&self) -> Self;
    fn powi(&self, k: i32) -> Result<Self, &'static str>;
    fn powf(&self, e: &Self) -> Result<Self, &'static str>;
    fn exp(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn abs(&self) -> Self;
    fn sqrt(&self) -> Result<Self, &'static str>;
    fn min(&self, o: &Self) -> Self;
    fn max(&self, o: &Self) -> Self;
    /// False when the value is NaN or infinite.
    fn is_valid(&self) -> bool;
}

/// Plain scalar wrapper so that `Real` types can run through the evaluator.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Scalar<T>(pub T);

impl<T: Real> Arith for Scalar<T> {
    fn constant(v: f64) -> Self {
        Scalar(T::lit(v))
    }
    fn add(&self, o: &Self) -> Self {
        Scalar(self.0 + o.0)
    }
    fn sub(&self, o: &Self) -> Self {
        Scalar(self.0 - o.0)
    }
    fn mul(&self, o: &Self) -> Self {
        Scalar(self.0 * o.0)
    }
    fn div(&self, o: &Self) -> Result<Self, &'static str> {
        if o.0 == T::zero() {
            Err("division by zero")
        } else {
            Ok(Scalar(self.0 / o.0))
        }
    }
    fn neg(&self) -> Self {
        Scalar(-self.0)
    }
    fn powi(&self, k: i32) -> Result<Self, &'static str> {
        if k < 0 && self.0 == T::zero() {
            Err("negative power of zero")
        } else {
            Ok(Scalar(self.0.powi(k)))
        }
    }
    fn powf(&self, e: &Self) -> Result<Self, &'static str> {
        if self.0 < T::zero() {
            Err("non-integer power of a negative number")
        } else if self.0 == T::zero() && e.0 < T::zero() {
            Err("negative power of zero")
        } else {
            Ok(Scalar(self.0.powf(e.0)))
        }
    }
    fn exp(&self) -> Self {
        Scalar(self.0.exp())
    }
    fn sin(&self) -> Self {
        Scalar(self.0.sin())
    }
    fn cos(&self) -> Self {
        Scalar(self.0.cos())
    }
    fn abs(&self) -> Self {
        Scalar(self.0.abs())
    }
    fn sqrt(&self) -> Result<Self, &'static str> {
        if self.0 < T::zero() {
            Err("square root of a negative number")
        } else {
            Ok(Scalar(self.0.sqrt()))
        }
    }
    fn min(&self, o: &Self) -> Self {
        Scalar(self.0.min(o.0))
    }
    fn max(&self, o: &Self) -> Self {
        Scalar(self.0.max(o.0))
    }
    fn is_valid(&self) -> bool {
        self.0.is_finite()
    }
}
