//! Root-of-unity arithmetic.
//!
//! The deformation parameter is the principal root `q = exp(iπ/(k+1))`, so
//! `q^(k+1) = -1` and `q²` generates a cyclic group of order `k+1`. Two
//! q-number conventions appear throughout the crate:
//!
//! * symmetric: `[n] = (q^n - q^-n)/(q - q^-1) = sin(nπ/(k+1))/sin(π/(k+1))`
//! * box: `[n] = (q^(2n) - 1)/(q² - 1) = q^(n-1)·[n]_sym`

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default residual tolerance for equality checks on complex scalars.
pub const DEFAULT_TOL: f64 = 1e-10;

/// The integer `k` together with the principal root `q` satisfying `q^(k+1) = -1`.
#[derive(Debug, Clone, Copy)]
pub struct RootData {
    k: u32,
    q: Complex64,
    q2: Complex64,
}

impl PartialEq for RootData {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k
    }
}

impl Eq for RootData {}

/// Builds the root data for `q^(k+1) = -1`. `k = 0` is rejected because it
/// leaves a one-state space with no ladder operators.
pub fn q_root(k: u32) -> Result<RootData> {
    RootData::new(k)
}

impl RootData {
    pub fn new(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidK(k));
        }
        let theta = PI / f64::from(k + 1);
        Ok(Self {
            k,
            q: Complex64::from_polar(1.0, theta),
            q2: Complex64::from_polar(1.0, 2.0 * theta),
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Fock dimension `k + 1`.
    pub fn dim(&self) -> usize {
        self.k as usize + 1
    }

    pub fn q(&self) -> Complex64 {
        self.q
    }

    pub fn q2(&self) -> Complex64 {
        self.q2
    }

    /// `q^e`, evaluated from the reduced angle so that large exponents stay exact.
    pub fn q_pow(&self, e: i64) -> Complex64 {
        let period = 2 * (i64::from(self.k) + 1);
        let r = e.rem_euclid(period);
        Complex64::from_polar(1.0, PI * r as f64 / (f64::from(self.k) + 1.0))
    }

    /// `q^(e/2)` with the principal branch, used for `q^(±N/2)`.
    pub fn q_half_pow(&self, e: i64) -> Complex64 {
        let period = 4 * (i64::from(self.k) + 1);
        let r = e.rem_euclid(period);
        Complex64::from_polar(1.0, PI * r as f64 / (2.0 * (f64::from(self.k) + 1.0)))
    }

    /// Symmetric q-number `[n]_q`; real for this choice of root.
    pub fn num_sym(&self, n: u32) -> f64 {
        let theta = PI / f64::from(self.k + 1);
        let v = (f64::from(n) * theta).sin() / theta.sin();
        // sin(mπ) is ~1e-16 rather than 0 in floating point
        if v.abs() < 1e-14 {
            0.0
        } else {
            v
        }
    }

    /// Box q-number `[n] = (q^(2n) - 1)/(q² - 1)`.
    pub fn num_box(&self, n: u32) -> Complex64 {
        let num = self.q_pow(2 * i64::from(n)) - 1.0;
        let v = num / (self.q2 - 1.0);
        if v.norm() < 1e-14 {
            Complex64::new(0.0, 0.0)
        } else {
            v
        }
    }

    /// `[n]_sym! = [1][2]…[n]`, empty product 1.
    pub fn factorial_sym(&self, n: u32) -> f64 {
        (1..=n).map(|j| self.num_sym(j)).product()
    }

    /// `[n]_box! = [1][2]…[n]` in the box convention.
    pub fn factorial_box(&self, n: u32) -> Complex64 {
        (1..=n).fold(Complex64::new(1.0, 0.0), |acc, j| acc * self.num_box(j))
    }
}

pub fn q_num_sym(n: u32, r: &RootData) -> Complex64 {
    Complex64::new(r.num_sym(n), 0.0)
}

pub fn q_num_box(n: u32, r: &RootData) -> Complex64 {
    r.num_box(n)
}

pub fn q_factorial_sym(n: u32, r: &RootData) -> Complex64 {
    Complex64::new(r.factorial_sym(n), 0.0)
}

pub fn q_factorial_box(n: u32, r: &RootData) -> Complex64 {
    r.factorial_box(n)
}
