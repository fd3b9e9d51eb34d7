//! Numerical toolkit for epsilon-nets of smooth functions: an expression
//! language with symbolic derivatives, exact power scales, sharp seminorm
//! estimation, regularity classification and mollification.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod expr;
pub mod fit;
pub mod jet;
pub mod mollify;
pub mod nets;
pub mod quadrature;
pub mod regularity;
pub mod scalar;
pub mod scale;

pub type Rational = num_rational::Rational64;
pub type PowerScaleF64 = scale::PowerScale<f64>;
pub type GaussLegendreF64 = quadrature::GaussLegendre<f64>;
