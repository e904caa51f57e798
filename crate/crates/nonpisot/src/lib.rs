//! Computational toolkit for the binary inflation rule 0 -> 0111, 1 -> 0
//! whose inflation multiplier is the non-Pisot number lambda = (1 + sqrt(13))/2,
//! the larger root of x^2 = x + 3.
//!
//! The crate provides exact arithmetic in Z[lambda] and Q(lambda), generation
//! of geometric inflation point sets, the exact renormalisation of pair
//! correlation functions, the Fourier matrix cocycle with its Lyapunov
//! exponents, and the numerical distribution function of the (singular
//! continuous) diffraction measure.

pub mod algebra;
pub mod cocycle;
pub mod config;
pub mod correlation;
pub mod diffraction;
pub mod inflation;
pub mod mat;
pub mod verify;
