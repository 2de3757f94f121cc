//! Nilpotent generalized-Grassmann algebra over time slices.
//!
//! Every slice `i` carries a pair `z̄(t_i)`, `z(t_i)` with `z^(k+1) = z̄^(k+1) = 0`.
//! Two exchange rules are supported:
//!
//! * [`Variant::FullyCommuting`]: all variables commute; the deformation lives
//!   in the derivative `∂̄ z̄ - q² z̄ ∂̄ = 1`.
//! * [`Variant::QCommuting`]: `z(t_i) z̄(t_j) = q² z̄(t_j) z(t_i)`, z̄'s commute
//!   among themselves and so do the z's. At `k = 1` this is the anticommuting
//!   rule `z z̄ + z̄ z = 0` between different variables.
//!
//! Monomials are stored canonically as `z̄_0^m0 z̄_1^m1 … z_0^n0 z_1^n1 …`.
//! Moving a block of z's with total degree `a` to the right of a block of z̄'s
//! with total degree `b` multiplies the coefficient by `q^(2ab)`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qnum::RootData;

/// Coefficients below this modulus are dropped.
pub const PRUNE_TOL: f64 = 1e-14;

pub const DEFAULT_SLICE_CAP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[serde(rename = "commuting")]
    FullyCommuting,
    #[serde(rename = "qcommuting")]
    QCommuting,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::FullyCommuting => f.write_str("commuting"),
            Variant::QCommuting => f.write_str("qcommuting"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceAlgebra {
    pub variant: Variant,
    pub root: RootData,
    /// Apply the q-exchange also between `z(t_i)` and `z̄(t_i)` of the same slice.
    pub same_slice_exchange: bool,
    pub slice_cap: usize,
}

impl SliceAlgebra {
    pub fn new(variant: Variant, root: RootData) -> Self {
        Self {
            variant,
            root,
            same_slice_exchange: true,
            slice_cap: DEFAULT_SLICE_CAP,
        }
    }

    pub fn fully_commuting(root: RootData) -> Self {
        Self::new(Variant::FullyCommuting, root)
    }

    pub fn q_commuting(root: RootData) -> Self {
        Self::new(Variant::QCommuting, root)
    }

    pub fn with_same_slice_exchange(mut self, on: bool) -> Self {
        self.same_slice_exchange = on;
        self
    }

    pub fn with_slice_cap(mut self, cap: usize) -> Self {
        self.slice_cap = cap;
        self
    }

    pub fn k(&self) -> u32 {
        self.root.k()
    }

    /// Exponent `e` such that `A·B = q^(2e) · canonical(A∪B)` for canonical
    /// monomials `A`, `B`.
    fn exchange_count(&self, left: &Monomial, right: &Monomial) -> i64 {
        if self.variant == Variant::FullyCommuting {
            return 0;
        }
        let mut count = 0i64;
        for (i, &[_, n]) in left.0.iter().enumerate() {
            if n == 0 {
                continue;
            }
            for (j, &[m, _]) in right.0.iter().enumerate() {
                if i == j && !self.same_slice_exchange {
                    continue;
                }
                count += i64::from(n) * i64::from(m);
            }
        }
        count
    }

    /// Weight of `∫ dz̄ dz` on the canonical monomial `z̄^k z^k`.
    ///
    /// The integral is normalized on `z^k z̄^k` to `[k]_sym!`; reordering to
    /// the canonical `z̄^k z^k` costs `q^(-2k²)` in the q-commuting variant.
    pub fn integration_weight(&self) -> Complex64 {
        let k = self.k();
        let fact = Complex64::new(self.root.factorial_sym(k), 0.0);
        match self.variant {
            Variant::QCommuting if self.same_slice_exchange => {
                fact * self.root.q_pow(-2 * i64::from(k) * i64::from(k))
            }
            _ => fact,
        }
    }
}

/// Per-slice exponents `[m_i, n_i]` of `z̄(t_i)^m_i` and `z(t_i)^n_i`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(pub Vec<[u32; 2]>);

impl Monomial {
    pub fn one(slices: usize) -> Self {
        Monomial(vec![[0, 0]; slices])
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&[m, n]| m == 0 && n == 0)
    }

    pub fn slices(&self) -> usize {
        self.0.len()
    }
}

/// Serialized coefficient: `{ "exponents": [[m,n],...], "re": x, "im": y }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRecord {
    pub exponents: Vec<[u32; 2]>,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NilPoly {
    algebra: SliceAlgebra,
    slices: usize,
    terms: BTreeMap<Monomial, Complex64>,
}

impl NilPoly {
    pub fn zero(algebra: SliceAlgebra, slices: usize) -> Result<Self> {
        if slices > algebra.slice_cap {
            return Err(Error::TooManySlices {
                requested: slices,
                cap: algebra.slice_cap,
            });
        }
        Ok(Self {
            algebra,
            slices,
            terms: BTreeMap::new(),
        })
    }

    pub fn constant(algebra: SliceAlgebra, slices: usize, c: Complex64) -> Result<Self> {
        let mut p = Self::zero(algebra, slices)?;
        p.insert(Monomial::one(slices), c);
        Ok(p)
    }

    pub fn one(algebra: SliceAlgebra, slices: usize) -> Result<Self> {
        Self::constant(algebra, slices, Complex64::new(1.0, 0.0))
    }

    /// Single canonical term; exponents above `k` give the zero polynomial.
    pub fn monomial(algebra: SliceAlgebra, exponents: Vec<[u32; 2]>, c: Complex64) -> Result<Self> {
        let mut p = Self::zero(algebra, exponents.len())?;
        let k = algebra.k();
        if exponents.iter().all(|&[m, n]| m <= k && n <= k) {
            p.insert(Monomial(exponents), c);
        }
        Ok(p)
    }

    /// `z̄(t_slice)^power`.
    pub fn zbar(algebra: SliceAlgebra, slices: usize, slice: usize, power: u32) -> Result<Self> {
        check_slice(slice, slices)?;
        let mut e = vec![[0, 0]; slices];
        e[slice][0] = power;
        Self::monomial(algebra, e, Complex64::new(1.0, 0.0))
    }

    /// `z(t_slice)^power`.
    pub fn z(algebra: SliceAlgebra, slices: usize, slice: usize, power: u32) -> Result<Self> {
        check_slice(slice, slices)?;
        let mut e = vec![[0, 0]; slices];
        e[slice][1] = power;
        Self::monomial(algebra, e, Complex64::new(1.0, 0.0))
    }

    /// `Σ_j coeffs[j] · z̄(t_out)^j z(t_in)^j`, the diagonal functions of `z̄ z`
    /// used for measures, identity kernels and effective Hamiltonians.
    pub fn diagonal(
        algebra: SliceAlgebra,
        slices: usize,
        out_slice: usize,
        in_slice: usize,
        coeffs: &[Complex64],
    ) -> Result<Self> {
        check_slice(out_slice, slices)?;
        check_slice(in_slice, slices)?;
        let mut p = Self::zero(algebra, slices)?;
        for (j, &c) in coeffs.iter().enumerate() {
            if j as u32 > algebra.k() {
                break;
            }
            let mut e = vec![[0, 0]; slices];
            e[out_slice][0] = j as u32;
            e[in_slice][1] = j as u32;
            p.insert(Monomial(e), c);
        }
        Ok(p)
    }

    pub fn algebra(&self) -> &SliceAlgebra {
        &self.algebra
    }

    pub fn slices(&self) -> usize {
        self.slices
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exponents: &[[u32; 2]]) -> Complex64 {
        self.terms
            .get(&Monomial(exponents.to_vec()))
            .copied()
            .unwrap_or_default()
    }

    pub fn constant_term(&self) -> Complex64 {
        self.terms
            .get(&Monomial::one(self.slices))
            .copied()
            .unwrap_or_default()
    }

    /// Coefficients of `z̄(t_out)^j z(t_in)^j` for `j = 0..=k`.
    pub fn diagonal_coeffs(&self, out_slice: usize, in_slice: usize) -> Vec<Complex64> {
        (0..=self.algebra.k())
            .map(|j| {
                let mut e = vec![[0, 0]; self.slices];
                e[out_slice][0] = j;
                e[in_slice][1] = j;
                self.coefficient(&e)
            })
            .collect()
    }

    fn insert(&mut self, m: Monomial, c: Complex64) {
        let v = *self.terms.get(&m).unwrap_or(&Complex64::default()) + c;
        if v.norm() < PRUNE_TOL {
            self.terms.remove(&m);
        } else {
            self.terms.insert(m, v);
        }
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.algebra != other.algebra {
            return Err(Error::AlgebraMismatch);
        }
        if self.slices != other.slices {
            return Err(Error::SliceCountMismatch(self.slices, other.slices));
        }
        Ok(())
    }

    fn with_terms(&self, terms: BTreeMap<Monomial, Complex64>) -> Self {
        let terms = terms
            .into_iter()
            .filter(|(_, c)| c.norm() >= PRUNE_TOL)
            .collect();
        Self {
            algebra: self.algebra,
            slices: self.slices,
            terms,
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            *terms.entry(m.clone()).or_default() += c;
        }
        Ok(self.with_terms(terms))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.with_terms(self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect())
    }

    /// Product reduced to canonical form.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let k = self.algebra.k();
        let mut terms: BTreeMap<Monomial, Complex64> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            'pair: for (mb, cb) in &other.terms {
                let mut e = Vec::with_capacity(self.slices);
                for (&[m1, n1], &[m2, n2]) in ma.0.iter().zip(&mb.0) {
                    let (m, n) = (m1 + m2, n1 + n2);
                    if m > k || n > k {
                        continue 'pair;
                    }
                    e.push([m, n]);
                }
                let phase = self
                    .algebra
                    .root
                    .q_pow(2 * self.algebra.exchange_count(ma, mb));
                *terms.entry(Monomial(e)).or_default() += ca * cb * phase;
            }
        }
        Ok(self.with_terms(terms))
    }

    fn split_constant(&self) -> (Complex64, Self) {
        let c = self.constant_term();
        let mut nil = self.clone();
        nil.terms.remove(&Monomial::one(self.slices));
        (c, nil)
    }

    /// `Σ_j coeffs(j) · N^j`; terminates once `N^j` vanishes.
    fn series(&self, nil: &Self, coeff: impl Fn(u32) -> Complex64) -> Result<Self> {
        let mut acc = Self::constant(self.algebra, self.slices, coeff(0))?;
        let mut power = Self::one(self.algebra, self.slices)?;
        let bound = 2 * self.slices as u32 * self.algebra.k() + 1;
        for j in 1..=bound {
            power = power.mul(nil)?;
            if power.is_zero() {
                return Ok(acc);
            }
            acc = acc.checked_add(&power.scale(coeff(j)))?;
        }
        Err(Error::NotConverged("nilpotent series"))
    }

    pub fn exp(&self) -> Result<Self> {
        let (c, nil) = self.split_constant();
        let mut fact = 1.0f64;
        let mut facts = vec![1.0f64];
        for j in 1..=(2 * self.slices as u32 * self.algebra.k() + 1) {
            fact *= f64::from(j);
            facts.push(fact);
        }
        let series = self.series(&nil, |j| Complex64::new(1.0 / facts[j as usize], 0.0))?;
        Ok(series.scale(c.exp()))
    }

    pub fn log(&self) -> Result<Self> {
        let (c, nil) = self.split_constant();
        if (c - 1.0).norm() > 1e-12 {
            return Err(Error::LogConstantTerm { re: c.re, im: c.im });
        }
        self.series(&nil, |j| {
            if j == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                Complex64::new(sign / f64::from(j), 0.0)
            }
        })
    }

    pub fn inv(&self) -> Result<Self> {
        let (c, nil) = self.split_constant();
        if c.norm() < PRUNE_TOL {
            return Err(Error::ZeroConstantTerm);
        }
        let ci = c.inv();
        self.series(&nil, |j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            ci.powu(j + 1) * sign
        })
    }

    /// Deformed derivative on one slice: `∂̄ z̄^m = [m]_box z̄^(m-1)` when
    /// `conjugated`, and `∂ z^n = [n]_box z^(n-1)` otherwise.
    ///
    /// Acts on the stored coefficient of each canonical monomial; in the
    /// q-commuting variant this is only meaningful on a single slice.
    pub fn q_derivative(&self, slice: usize, conjugated: bool) -> Result<Self> {
        check_slice(slice, self.slices)?;
        let idx = usize::from(!conjugated);
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let p = m.0[slice][idx];
            if p == 0 {
                continue;
            }
            let mut e = m.clone();
            e.0[slice][idx] = p - 1;
            *terms.entry(e).or_default() += c * self.algebra.root.num_box(p);
        }
        Ok(self.with_terms(terms))
    }

    /// `∫ dz̄(t_slice) dz(t_slice)`: keeps terms saturating `z̄^k z^k` on the
    /// slice, scaled by [`SliceAlgebra::integration_weight`].
    pub fn integrate(&self, slice: usize) -> Result<Self> {
        check_slice(slice, self.slices)?;
        let k = self.algebra.k();
        let w = self.algebra.integration_weight();
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            if m.0[slice] == [k, k] {
                let mut e = m.clone();
                e.0[slice] = [0, 0];
                *terms.entry(e).or_default() += c * w;
            }
        }
        Ok(self.with_terms(terms))
    }

    /// Relabels slice `i` as `map[i]` in a polynomial over `slices` slices.
    /// `map` must be strictly increasing so canonical order is preserved.
    pub fn embed(&self, slices: usize, map: &[usize]) -> Result<Self> {
        if map.len() != self.slices {
            return Err(Error::DimensionMismatch {
                expected: self.slices,
                got: map.len(),
            });
        }
        if map.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("slice embedding must be increasing".into()));
        }
        if let Some(&last) = map.last() {
            check_slice(last, slices)?;
        }
        let mut out = Self::zero(self.algebra, slices)?;
        for (m, c) in &self.terms {
            let mut e = vec![[0, 0]; slices];
            for (i, &x) in m.0.iter().enumerate() {
                e[map[i]] = x;
            }
            out.terms.insert(Monomial(e), *c);
        }
        Ok(out)
    }

    /// BF conjugation `ψ(z̄) ↦ ψ̄(z)` for functions of the z̄'s only.
    pub fn bar(&self) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            if m.0.iter().any(|&[_, n]| n != 0) {
                return Err(Error::NotAntiholomorphic);
            }
            let e = m.0.iter().map(|&[mm, _]| [0, mm]).collect();
            terms.insert(Monomial(e), c.conj());
        }
        Ok(self.with_terms(terms))
    }

    /// Largest coefficient difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self
            .checked_sub(other)?
            .terms
            .values()
            .fold(0.0, |acc, c| acc.max(c.norm())))
    }

    pub fn to_records(&self) -> Vec<CoefficientRecord> {
        self.terms
            .iter()
            .map(|(m, c)| CoefficientRecord {
                exponents: m.0.clone(),
                re: c.re,
                im: c.im,
            })
            .collect()
    }

    pub fn from_records(algebra: SliceAlgebra, records: &[CoefficientRecord]) -> Result<Self> {
        let slices = records.first().map_or(0, |r| r.exponents.len());
        let mut p = Self::zero(algebra, slices)?;
        for r in records {
            if r.exponents.len() != slices {
                return Err(Error::SliceCountMismatch(slices, r.exponents.len()));
            }
            let k = algebra.k();
            if r.exponents.iter().any(|&[m, n]| m > k || n > k) {
                continue;
            }
            p.insert(Monomial(r.exponents.clone()), Complex64::new(r.re, r.im));
        }
        Ok(p)
    }
}

fn check_slice(index: usize, slices: usize) -> Result<()> {
    if index >= slices {
        Err(Error::SliceOutOfRange { index, slices })
    } else {
        Ok(())
    }
}

pub fn nil_mul(p: &NilPoly, q: &NilPoly) -> Result<NilPoly> {
    p.mul(q)
}

pub fn nil_exp(p: &NilPoly) -> Result<NilPoly> {
    p.exp()
}

pub fn nil_log(p: &NilPoly) -> Result<NilPoly> {
    p.log()
}

pub fn nil_inv(p: &NilPoly) -> Result<NilPoly> {
    p.inv()
}

pub fn q_derivative(p: &NilPoly, slice: usize, conjugated: bool) -> Result<NilPoly> {
    p.q_derivative(slice, conjugated)
}

pub fn berezin_integrate(p: &NilPoly, slice: usize) -> Result<NilPoly> {
    p.integrate(slice)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qnum::q_root;

    const TOL: f64 = 1e-12;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn alg(variant: Variant, k: u32) -> SliceAlgebra {
        SliceAlgebra::new(variant, q_root(k).unwrap())
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < TOL
    }

    #[test]
    fn ordered_product_is_canonical() {
        for v in [Variant::FullyCommuting, Variant::QCommuting] {
            let a = alg(v, 2);
            let zb = NilPoly::zbar(a, 1, 0, 1).unwrap();
            let z = NilPoly::z(a, 1, 0, 1).unwrap();
            let p = zb.mul(&z).unwrap();
            assert_eq!(p.len(), 1);
            assert!(close(p.coefficient(&[[1, 1]]), c(1.0, 0.0)));
        }
    }

    #[test]
    fn exchange_picks_up_q_squared() {
        let a = alg(Variant::QCommuting, 2);
        let q2 = a.root.q2();
        let zb = NilPoly::zbar(a, 1, 0, 1).unwrap();
        let z = NilPoly::z(a, 1, 0, 1).unwrap();
        assert!(close(z.mul(&zb).unwrap().coefficient(&[[1, 1]]), q2));
        let x = zb.mul(&z).unwrap();
        assert!(close(x.mul(&x).unwrap().coefficient(&[[2, 2]]), q2));

        let f = alg(Variant::FullyCommuting, 2);
        let x = NilPoly::diagonal(f, 1, 0, 0, &[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(close(
            x.mul(&x).unwrap().coefficient(&[[2, 2]]),
            c(1.0, 0.0)
        ));
    }

    #[test]
    fn nilpotent_overflow_vanishes() {
        for v in [Variant::FullyCommuting, Variant::QCommuting] {
            let a = alg(v, 2);
            let zb2 = NilPoly::zbar(a, 1, 0, 2).unwrap();
            let zb = NilPoly::zbar(a, 1, 0, 1).unwrap();
            assert!(zb2.mul(&zb).unwrap().is_zero());
            assert!(NilPoly::z(a, 1, 0, 3).unwrap().is_zero());
        }
    }

    #[test]
    fn fermionic_slices_anticommute() {
        // z z̄ + z̄ z = 0 within and across slices, z̄'s commute across slices
        let a = alg(Variant::QCommuting, 1);
        for i in 0..2 {
            for j in 0..2 {
                let z = NilPoly::z(a, 2, i, 1).unwrap();
                let zb = NilPoly::zbar(a, 2, j, 1).unwrap();
                let anti = z
                    .mul(&zb)
                    .unwrap()
                    .checked_add(&zb.mul(&z).unwrap())
                    .unwrap();
                assert!(anti.is_zero(), "i={i} j={j}");
            }
        }
        let z0 = NilPoly::zbar(a, 2, 0, 1).unwrap();
        let z1 = NilPoly::zbar(a, 2, 1, 1).unwrap();
        let d = z0
            .mul(&z1)
            .unwrap()
            .max_abs_diff(&z1.mul(&z0).unwrap())
            .unwrap();
        assert_eq!(d, 0.0);
        let w0 = NilPoly::z(a, 2, 0, 1).unwrap();
        let w1 = NilPoly::z(a, 2, 1, 1).unwrap();
        assert_eq!(
            w0.mul(&w1)
                .unwrap()
                .max_abs_diff(&w1.mul(&w0).unwrap())
                .unwrap(),
            0.0
        );
        // z² = z̄² = 0
        assert!(w0.mul(&w0).unwrap().is_zero());
    }

    #[test]
    fn same_slice_toggle() {
        let a = alg(Variant::QCommuting, 2).with_same_slice_exchange(false);
        let zb = NilPoly::zbar(a, 2, 0, 1).unwrap();
        let z0 = NilPoly::z(a, 2, 0, 1).unwrap();
        let z1 = NilPoly::z(a, 2, 1, 1).unwrap();
        assert!(close(
            z0.mul(&zb).unwrap().coefficient(&[[1, 1], [0, 0]]),
            c(1.0, 0.0)
        ));
        assert!(close(
            z1.mul(&zb).unwrap().coefficient(&[[1, 0], [0, 1]]),
            a.root.q2()
        ));
    }

    #[test]
    fn mismatched_operands() {
        let a = alg(Variant::QCommuting, 2);
        let b = alg(Variant::FullyCommuting, 2);
        let p = NilPoly::one(a, 1).unwrap();
        assert_eq!(
            p.mul(&NilPoly::one(b, 1).unwrap()),
            Err(Error::AlgebraMismatch)
        );
        assert_eq!(
            p.mul(&NilPoly::one(a, 2).unwrap()),
            Err(Error::SliceCountMismatch(1, 2))
        );
        assert!(NilPoly::zero(a.with_slice_cap(3), 4).is_err());
        assert!(NilPoly::zbar(a, 2, 2, 1).is_err());
    }

    #[test]
    fn exp_commuting() {
        let a = alg(Variant::FullyCommuting, 2);
        let (x, y) = (c(0.3, -1.2), c(2.0, 0.7));
        let p = NilPoly::diagonal(a, 1, 0, 0, &[c(0.0, 0.0), x, y]).unwrap();
        let e = p.exp().unwrap();
        let coeffs = e.diagonal_coeffs(0, 0);
        assert!(close(coeffs[0], c(1.0, 0.0)));
        assert!(close(coeffs[1], x));
        assert!(close(coeffs[2], y + x * x / 2.0));
        assert_eq!(e.len(), 3);
    }

    #[test]
    fn exp_q_commuting() {
        let a = alg(Variant::QCommuting, 2);
        let x = c(0.3, -1.2);
        let p = NilPoly::diagonal(a, 1, 0, 0, &[c(0.0, 0.0), x]).unwrap();
        let coeffs = p.exp().unwrap().diagonal_coeffs(0, 0);
        assert!(close(coeffs[1], x));
        assert!(close(coeffs[2], a.root.q2() * x * x / 2.0));
    }

    #[test]
    fn exp_with_constant() {
        let a = alg(Variant::FullyCommuting, 1);
        let p = NilPoly::diagonal(a, 1, 0, 0, &[c(0.5, 0.2), c(1.0, 0.0)]).unwrap();
        let coeffs = p.exp().unwrap().diagonal_coeffs(0, 0);
        let e = c(0.5, 0.2).exp();
        assert!(close(coeffs[0], e));
        assert!(close(coeffs[1], e));
    }

    #[test]
    fn fermionic_measure_inverse() {
        for v in [Variant::FullyCommuting, Variant::QCommuting] {
            let a = alg(v, 1);
            let p = NilPoly::diagonal(a, 1, 0, 0, &[c(1.0, 0.0), c(-2.0, 0.0)]).unwrap();
            let inv = p.inv().unwrap();
            let want = NilPoly::diagonal(a, 1, 0, 0, &[c(1.0, 0.0), c(2.0, 0.0)]).unwrap();
            assert!(inv.max_abs_diff(&want).unwrap() < TOL);
        }
    }

    #[test]
    fn series_errors() {
        let a = alg(Variant::FullyCommuting, 2);
        let nil = NilPoly::zbar(a, 1, 0, 1).unwrap();
        assert_eq!(nil.inv(), Err(Error::ZeroConstantTerm));
        let two = NilPoly::constant(a, 1, c(2.0, 0.0)).unwrap();
        assert!(matches!(two.log(), Err(Error::LogConstantTerm { .. })));
    }

    #[test]
    fn derivative_values() {
        let a = alg(Variant::FullyCommuting, 2);
        let zb = NilPoly::zbar(a, 1, 0, 1).unwrap();
        let d = zb.q_derivative(0, true).unwrap();
        assert!(close(d.constant_term(), c(1.0, 0.0)));
        let zb2 = NilPoly::zbar(a, 1, 0, 2).unwrap();
        let d2 = zb2.q_derivative(0, true).unwrap();
        assert!(close(d2.coefficient(&[[1, 0]]), a.root.q()));
        assert!(NilPoly::one(a, 1)
            .unwrap()
            .q_derivative(0, true)
            .unwrap()
            .is_zero());
        let z2 = NilPoly::z(a, 1, 0, 2).unwrap();
        assert!(close(
            z2.q_derivative(0, false).unwrap().coefficient(&[[0, 1]]),
            a.root.q()
        ));
    }

    #[test]
    fn derivative_satisfies_deformed_relation() {
        // (∂̄ z̄ - q² z̄ ∂̄) ψ = ψ on the whole function space
        for k in 1..=5 {
            let a = alg(Variant::FullyCommuting, k);
            let zb = NilPoly::zbar(a, 1, 0, 1).unwrap();
            for n in 0..=k {
                let psi = NilPoly::zbar(a, 1, 0, n).unwrap();
                let first = zb.mul(&psi).unwrap().q_derivative(0, true).unwrap();
                let second = zb.mul(&psi.q_derivative(0, true).unwrap()).unwrap();
                let lhs = first.checked_sub(&second.scale(a.root.q2())).unwrap();
                assert!(lhs.max_abs_diff(&psi).unwrap() < TOL, "k={k} n={n}");
            }
        }
        // k = 1: ∂̄ z̄ + z̄ ∂̄ = 1
        let a = alg(Variant::FullyCommuting, 1);
        assert!(close(a.root.q2(), c(-1.0, 0.0)));
    }

    #[test]
    fn integration_rules() {
        let q1 = alg(Variant::QCommuting, 1);
        let p = NilPoly::monomial(q1, vec![[1, 1]], c(3.0, 0.0)).unwrap();
        assert!(close(p.integrate(0).unwrap().constant_term(), c(-3.0, 0.0)));

        let q2 = alg(Variant::QCommuting, 2);
        let p = NilPoly::monomial(q2, vec![[2, 2]], c(1.0, 0.0)).unwrap();
        let want = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI / 3.0);
        assert!(close(p.integrate(0).unwrap().constant_term(), want));

        for v in [Variant::FullyCommuting, Variant::QCommuting] {
            for k in 1..=4 {
                let a = alg(v, k);
                assert!(NilPoly::one(a, 1).unwrap().integrate(0).unwrap().is_zero());
                let below = NilPoly::monomial(a, vec![[k, k - 1]], c(1.0, 0.0)).unwrap();
                assert!(below.integrate(0).unwrap().is_zero());
            }
        }
        let f = alg(Variant::FullyCommuting, 3);
        let p = NilPoly::monomial(f, vec![[3, 3], [1, 0]], c(1.0, 0.0)).unwrap();
        let r = p.integrate(0).unwrap();
        assert!(close(r.coefficient(&[[0, 0], [1, 0]]), c(2f64.sqrt(), 0.0)));
    }

    #[test]
    fn written_order_of_integrand_matches_weight() {
        // ∫ z^k z̄^k = [k]_sym! once the integrand is canonicalized
        for k in 1..=4 {
            let a = alg(Variant::QCommuting, k);
            let zk = NilPoly::z(a, 1, 0, k).unwrap();
            let zbk = NilPoly::zbar(a, 1, 0, k).unwrap();
            let v = zk.mul(&zbk).unwrap().integrate(0).unwrap().constant_term();
            assert!(close(v, c(a.root.factorial_sym(k), 0.0)), "k={k}");
        }
    }

    #[test]
    fn embed_and_bar() {
        let a = alg(Variant::QCommuting, 2);
        let p = NilPoly::monomial(a, vec![[1, 0], [0, 2]], c(1.0, 2.0)).unwrap();
        let e = p.embed(3, &[0, 2]).unwrap();
        assert!(close(e.coefficient(&[[1, 0], [0, 0], [0, 2]]), c(1.0, 2.0)));
        assert!(p.embed(3, &[2, 0]).is_err());
        let f = NilPoly::zbar(a, 1, 0, 2).unwrap().scale(c(0.0, 1.0));
        let b = f.bar().unwrap();
        assert!(close(b.coefficient(&[[0, 2]]), c(0.0, -1.0)));
        assert_eq!(b.bar(), Err(Error::NotAntiholomorphic));
    }

    #[test]
    fn records_round_trip() {
        let a = alg(Variant::QCommuting, 2);
        let p = NilPoly::diagonal(a, 2, 0, 1, &[c(1.0, 0.0), c(0.5, -0.25), c(0.0, 3.0)]).unwrap();
        let json = serde_json::to_string(&p.to_records()).unwrap();
        assert!(json.contains("\"exponents\":[[1,0],[0,1]]"));
        let back: Vec<CoefficientRecord> = serde_json::from_str(&json).unwrap();
        assert_eq!(NilPoly::from_records(a, &back).unwrap(), p);
    }
}
