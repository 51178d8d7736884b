use std::fmt;

use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::poly::{Monomial, Poly};
use crate::error::{domain, Error, Result};

/// Phase-space symplectic form. The only supported convention is
/// `ω^{qp} = +1`, so that `{q, p}_PB = {q, p}_MB = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymplecticConvention {
    pub omega: [[i8; 2]; 2],
}

impl SymplecticConvention {
    pub const CANONICAL: SymplecticConvention = SymplecticConvention {
        omega: [[0, 1], [-1, 0]],
    };
}

impl Default for SymplecticConvention {
    fn default() -> Self {
        Self::CANONICAL
    }
}

/// Polynomial phase-space symbol `Σ c_ab q^a p^b` at a fixed numeric `ħ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySymbol {
    poly: Poly<f64>,
    hbar: f64,
}

impl PolySymbol {
    pub fn new(
        terms: impl IntoIterator<Item = ((u32, u32), Complex64)>,
        hbar: f64,
    ) -> Result<Self> {
        if !(hbar >= 0.0) || !hbar.is_finite() {
            return domain(format!("hbar = {hbar} must be finite and nonnegative"));
        }
        let poly = Poly::from_terms(terms.into_iter().map(|((a, b), c)| (Monomial::qp(a, b), c)));
        Ok(PolySymbol { poly, hbar })
    }

    pub fn constant(c: Complex64, hbar: f64) -> Result<Self> {
        Self::new([((0, 0), c)], hbar)
    }

    pub fn q(hbar: f64) -> Result<Self> {
        Self::new([((1, 0), Complex64::one())], hbar)
    }

    pub fn p(hbar: f64) -> Result<Self> {
        Self::new([((0, 1), Complex64::one())], hbar)
    }

    /// `c q^a p^b`
    pub fn term(c: f64, a: u32, b: u32, hbar: f64) -> Result<Self> {
        Self::new([((a, b), Complex64::new(c, 0.0))], hbar)
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn degree(&self) -> u32 {
        self.poly.degree()
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    pub fn coeff(&self, a: u32, b: u32) -> Complex64 {
        self.poly.coeff(Monomial::qp(a, b))
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), Complex64)> + '_ {
        self.poly.terms().map(|(m, c)| ((m.q, m.p), *c))
    }

    pub fn eval(&self, q: f64, p: f64) -> Complex64 {
        self.poly.eval(0.0, q, p)
    }

    fn same_hbar(&self, other: &Self) -> Result<()> {
        if self.hbar != other.hbar {
            return domain(format!(
                "operands carry different hbar ({} vs {})",
                self.hbar, other.hbar
            ));
        }
        Ok(())
    }

    fn with_poly(&self, poly: Poly<f64>) -> Self {
        PolySymbol {
            poly,
            hbar: self.hbar,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_hbar(other)?;
        Ok(self.with_poly(&self.poly + &other.poly))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_hbar(other)?;
        Ok(self.with_poly(&self.poly - &other.poly))
    }

    /// Pointwise product `fg`.
    pub fn pointwise(&self, other: &Self) -> Result<Self> {
        self.same_hbar(other)?;
        Ok(self.with_poly(self.poly.mul(&other.poly)))
    }

    /// Max-norm distance between coefficient vectors.
    pub fn distance(&self, other: &Self) -> f64 {
        (&self.poly - &other.poly)
            .terms()
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max)
    }

    /// Convert to the exact formal-`ħ` algebra. Floats convert exactly.
    pub fn to_formal(&self) -> FormalSymbol {
        let exact = |x: f64| BigRational::from_float(x).expect("finite coefficient");
        FormalSymbol(Poly::from_terms(
            self.poly
                .terms()
                .map(|(m, c)| (*m, Complex::new(exact(c.re), exact(c.im)))),
        ))
    }
}

/// `f ⋆ g`, the symbol of the operator product.
pub fn star_product(f: &PolySymbol, g: &PolySymbol) -> Result<PolySymbol> {
    f.same_hbar(g)?;
    let hbar = f.hbar;
    Ok(f.with_poly(f.poly.star_with(&g.poly, |n| (hbar.powi(n as i32), 0))))
}

/// `{f, g}_MB = (f ⋆ g − g ⋆ f) / (iħ)`
pub fn moyal_bracket(f: &PolySymbol, g: &PolySymbol) -> Result<PolySymbol> {
    f.same_hbar(g)?;
    if !(f.hbar > 0.0) {
        return domain("the Moyal bracket needs hbar > 0");
    }
    let diff = &star_product(f, g)?.poly - &star_product(g, f)?.poly;
    let inv = Complex64::new(0.0, -1.0 / f.hbar);
    Ok(f.with_poly(diff.scale(&inv)))
}

/// `{f, g}_PB = ∂_q f ∂_p g − ∂_p f ∂_q g`
pub fn poisson_bracket(f: &PolySymbol, g: &PolySymbol) -> Result<PolySymbol> {
    f.same_hbar(g)?;
    Ok(f.with_poly(f.poly.poisson(&g.poly)))
}

/// Polynomial in `q, p` and a formal `ħ` with exact complex-rational
/// coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FormalSymbol(pub Poly<BigRational>);

impl FormalSymbol {
    /// Integer-coefficient symbol `Σ (re + i im) q^a p^b`, no `ħ` dependence.
    pub fn from_integer_terms(terms: impl IntoIterator<Item = ((u32, u32), (i64, i64))>) -> Self {
        let r = |v: i64| BigRational::from_integer(v.into());
        FormalSymbol(Poly::from_terms(terms.into_iter().map(
            |((a, b), (re, im))| (Monomial::qp(a, b), Complex::new(r(re), r(im))),
        )))
    }

    pub fn star(&self, other: &Self) -> Self {
        FormalSymbol(self.0.star_with(&other.0, |n| (BigRational::one(), n)))
    }

    pub fn pointwise(&self, other: &Self) -> Self {
        FormalSymbol(self.0.mul(&other.0))
    }

    pub fn moyal(&self, other: &Self) -> Self {
        let diff = &self.star(other).0 - &other.star(self).0;
        // the ħ^0 parts cancel, so dividing by ħ is a shift
        let minus_i = Complex::new(BigRational::zero(), -BigRational::one());
        FormalSymbol(diff.shift_hbar(-1).scale(&minus_i))
    }

    pub fn poisson(&self, other: &Self) -> Self {
        FormalSymbol(self.0.poisson(&other.0))
    }

    pub fn at_hbar_zero(&self) -> Self {
        FormalSymbol(self.0.at_hbar_zero())
    }

    /// Substitute a numeric `ħ`.
    pub fn to_numeric(&self, hbar: f64) -> Result<PolySymbol> {
        let f = |x: &BigRational| x.to_f64().unwrap_or(f64::NAN);
        let mut terms: Vec<((u32, u32), Complex64)> = Vec::new();
        for (m, c) in self.0.terms() {
            let scale = hbar.powi(m.h as i32);
            terms.push((
                (m.q, m.p),
                Complex64::new(f(&c.re) * scale, f(&c.im) * scale),
            ));
        }
        PolySymbol::new(terms, hbar)
    }
}

/// Lowest power of `ħ` in a defect; `Infinite` when the defect vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectOrder {
    Finite(u32),
    Infinite,
}

impl DefectOrder {
    fn of(p: &FormalSymbol) -> Self {
        p.0.min_hbar_power()
            .map_or(DefectOrder::Infinite, DefectOrder::Finite)
    }

    pub fn at_least(&self, k: u32) -> bool {
        match self {
            DefectOrder::Finite(n) => *n >= k,
            DefectOrder::Infinite => true,
        }
    }
}

impl fmt::Display for DefectOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DefectOrder::Finite(n) => write!(f, "{n}"),
            DefectOrder::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionOrders {
    pub star_defect_order: DefectOrder,
    pub moyal_defect_order: DefectOrder,
}

impl ExpansionOrders {
    /// `f ⋆ g = fg + O(ħ)` and `{f,g}_MB = {f,g}_PB + O(ħ²)`.
    pub fn holds(&self) -> bool {
        self.star_defect_order.at_least(1) && self.moyal_defect_order.at_least(2)
    }
}

/// Lowest `ħ` orders of `f ⋆ g − fg` and `{f,g}_MB − {f,g}_PB`, computed in
/// exact formal-`ħ` arithmetic.
pub fn hbar_expansion_check(f: &FormalSymbol, g: &FormalSymbol) -> Result<ExpansionOrders> {
    if f.0.degree() == 0 || g.0.degree() == 0 {
        return Err(Error::Domain(
            "expansion check needs nonconstant symbols".into(),
        ));
    }
    let star_defect = FormalSymbol(&f.star(g).0 - &f.pointwise(g).0);
    let moyal_defect = FormalSymbol(&f.moyal(g).0 - &f.poisson(g).0);
    Ok(ExpansionOrders {
        star_defect_order: DefectOrder::of(&star_defect),
        moyal_defect_order: DefectOrder::of(&moyal_defect),
    })
}
