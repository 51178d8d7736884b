//! Sparse polynomials in `q`, `p` and (optionally) a formal `ħ`, with the
//! Moyal star product evaluated as its terminating bidifferential series.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Num, Zero};
use serde::{Deserialize, Serialize};

/// Real scalar field the coefficients live over.
pub trait Scalar: Num + Clone + Debug + Neg<Output = Self> {
    fn from_i64(v: i64) -> Self;

    fn ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }
}

impl Scalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
}

impl Scalar for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
}

/// `ħ^h q^q p^p`. Field order makes the derived `Ord` group by `ħ` power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Monomial {
    pub h: u32,
    pub q: u32,
    pub p: u32,
}

impl Monomial {
    pub const ONE: Monomial = Monomial { h: 0, q: 0, p: 0 };

    pub fn qp(q: u32, p: u32) -> Self {
        Monomial { h: 0, q, p }
    }

    pub fn degree(&self) -> u32 {
        self.q + self.p
    }
}

/// Sparse polynomial with complex coefficients; zero coefficients are never
/// stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T: Scalar> {
    terms: BTreeMap<Monomial, Complex<T>>,
}

impl<T: Scalar> Default for Poly<T> {
    fn default() -> Self {
        Poly {
            terms: BTreeMap::new(),
        }
    }
}

fn falling(n: u32, k: u32) -> i64 {
    (0..k).map(|i| (n - i) as i64).product()
}

fn factorial(n: u32) -> i64 {
    (1..=n as i64).product()
}

/// `i^n`
fn i_pow<T: Scalar>(n: u32) -> Complex<T> {
    match n % 4 {
        0 => Complex::new(T::one(), T::zero()),
        1 => Complex::new(T::zero(), T::one()),
        2 => Complex::new(-T::one(), T::zero()),
        _ => Complex::new(T::zero(), -T::one()),
    }
}

impl<T: Scalar> Poly<T> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex<T>) -> Self {
        Self::monomial(Monomial::ONE, c)
    }

    pub fn monomial(m: Monomial, c: Complex<T>) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Complex<T>)>) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Complex<T>) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(Complex::zero);
        *entry = entry.clone() + c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Complex<T>)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: Monomial) -> Complex<T> {
        self.terms.get(&m).cloned().unwrap_or_else(Complex::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree in `q, p` (ignores `ħ`); 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Lowest power of `ħ` present, `None` for the zero polynomial.
    pub fn min_hbar_power(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.h).min()
    }

    pub fn scale(&self, c: &Complex<T>) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, v)| (*m, v.clone() * c.clone())))
    }

    /// Multiply by `ħ^k` formally.
    pub fn shift_hbar(&self, k: i32) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, v)| {
            let h = m.h as i32 + k;
            assert!(h >= 0, "negative power of hbar");
            (Monomial { h: h as u32, ..*m }, v.clone())
        }))
    }

    /// Drop every term carrying a positive power of `ħ`.
    pub fn at_hbar_zero(&self) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|(m, _)| m.h == 0)
                .map(|(m, v)| (*m, v.clone())),
        )
    }

    pub fn dq(&self) -> Self {
        self.derivative(1, 0)
    }

    pub fn dp(&self) -> Self {
        self.derivative(0, 1)
    }

    /// `∂_q^a ∂_p^b`
    pub fn derivative(&self, a: u32, b: u32) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|(m, _)| m.q >= a && m.p >= b)
                .map(|(m, v)| {
                    let f = T::from_i64(falling(m.q, a) * falling(m.p, b));
                    (
                        Monomial {
                            h: m.h,
                            q: m.q - a,
                            p: m.p - b,
                        },
                        v.clone() * Complex::new(f, T::zero()),
                    )
                }),
        )
    }

    /// Pointwise (commutative) product.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = Monomial {
                    h: ma.h + mb.h,
                    q: ma.q + mb.q,
                    p: ma.p + mb.p,
                };
                out.add_term(m, ca.clone() * cb.clone());
            }
        }
        out
    }

    /// Star product `f exp((iħ/2)(∂⃖_q ∂⃗_p − ∂⃖_p ∂⃗_q)) g`.
    ///
    /// `hbar_power(n)` supplies the factor standing in for `ħ^n`: a numeric
    /// value and a formal exponent increment.
    pub(crate) fn star_with(&self, other: &Self, hbar_power: impl Fn(u32) -> (T, u32)) -> Self {
        let mut out = Self::zero();
        for (mf, cf) in &self.terms {
            for (mg, cg) in &other.terms {
                let base = cf.clone() * cg.clone();
                let top = mf.degree().min(mg.degree());
                for n in 0..=top {
                    let (hval, hinc) = hbar_power(n);
                    for k in 0..=n {
                        let l = n - k;
                        if mf.q < l || mf.p < k || mg.q < k || mg.p < l {
                            continue;
                        }
                        let num = falling(mf.q, l)
                            * falling(mf.p, k)
                            * falling(mg.q, k)
                            * falling(mg.p, l);
                        let den = (1i64 << n) * factorial(k) * factorial(l);
                        let mut r = T::ratio(num, den) * hval.clone();
                        if k % 2 == 1 {
                            r = -r;
                        }
                        let c = base.clone() * i_pow::<T>(n) * Complex::new(r, T::zero());
                        let m = Monomial {
                            h: mf.h + mg.h + hinc,
                            q: mf.q - l + mg.q - k,
                            p: mf.p - k + mg.p - l,
                        };
                        out.add_term(m, c);
                    }
                }
            }
        }
        out
    }

    /// `{f, g}_PB = ∂_q f ∂_p g − ∂_p f ∂_q g`
    pub fn poisson(&self, other: &Self) -> Self {
        &self.dq().mul(&other.dp()) - &self.dp().mul(&other.dq())
    }

    /// Evaluate at a numeric `(ħ, q, p)`.
    pub fn eval(&self, hbar: T, q: T, p: T) -> Complex<T> {
        let pow = |x: &T, k: u32| (0..k).fold(T::one(), |acc, _| acc * x.clone());
        self.terms.iter().fold(Complex::zero(), |acc, (m, c)| {
            acc + c.clone() * Complex::new(pow(&hbar, m.h) * pow(&q, m.q) * pow(&p, m.p), T::zero())
        })
    }
}

impl<'a, T: Scalar> Add for &'a Poly<T> {
    type Output = Poly<T>;

    fn add(self, rhs: Self) -> Poly<T> {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, c.clone());
        }
        out
    }
}

impl<'a, T: Scalar> Sub for &'a Poly<T> {
    type Output = Poly<T>;

    fn sub(self, rhs: Self) -> Poly<T> {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, -c.clone());
        }
        out
    }
}

impl<T: Scalar> Neg for Poly<T> {
    type Output = Poly<T>;

    fn neg(self) -> Poly<T> {
        Poly::from_terms(self.terms.into_iter().map(|(m, c)| (m, -c)))
    }
}
