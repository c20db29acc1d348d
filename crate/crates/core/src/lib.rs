//! Exact-arithmetic conditional convex analysis on finite probability spaces.
//!
//! Conditional polars and bipolars, evenly-convexity decisions via strict
//! separation, and certified dual representations of conditionally evenly
//! quasiconvex regular maps, all over exact rationals.

pub mod dual;
pub mod lp;
pub mod polar;
pub mod quasi;
pub mod rat;
pub mod sets;
pub mod space;

pub use rat::{ExtRat, Rat};
pub use space::{
    cond_exp, cond_norm, concat, pairing, ExtendedGRV, FiniteSpace, GMeasurableRV, GSet,
    NormExponent, RandomVariable, SpaceError,
};
