use serde::{Deserialize, Serialize};

/// Odd power nonlinearity `f(t) = |t|^{p-2} t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub p: f64,
}

impl Nonlinearity {
    pub fn new(p: f64) -> Self {
        Nonlinearity { p }
    }

    #[inline]
    pub fn f(&self, t: f64) -> f64 {
        if self.p == 3.0 {
            return t.abs() * t;
        }
        t.abs().powf(self.p - 2.0) * t
    }

    /// Primitive `F(t) = |t|^p / p`.
    #[inline]
    pub fn big_f(&self, t: f64) -> f64 {
        if self.p == 3.0 {
            return t.abs() * t * t / 3.0;
        }
        t.abs().powf(self.p) / self.p
    }

    #[inline]
    pub fn f_prime(&self, t: f64) -> f64 {
        if self.p == 3.0 {
            return 2.0 * t.abs();
        }
        (self.p - 1.0) * t.abs().powf(self.p - 2.0)
    }

    /// Hölder exponent of `f'`.
    pub fn sigma(&self) -> f64 {
        (self.p - 2.0).min(1.0)
    }
}
