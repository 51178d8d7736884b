//! Weyl–Wigner–Moyal calculus restricted to polynomial symbols, where the
//! star-product series terminates and every identity can be checked exactly.

mod pairing;
mod poly;
mod symbol;
mod text;

pub use pairing::{pairing, CoherentState};
pub use poly::{Monomial, Poly, Scalar};
pub use symbol::{
    hbar_expansion_check, moyal_bracket, poisson_bracket, star_product, DefectOrder,
    ExpansionOrders, FormalSymbol, PolySymbol, SymplecticConvention,
};
