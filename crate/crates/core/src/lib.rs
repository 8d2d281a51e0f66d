//! Quadrilateral geometry mapping and a compatible thin-plate element.
//!
//! The geometry, quadrature and element layers are generic over the scalar
//! type (`f32` or `f64`). Assembly, eigensolution and the command-line layer
//! work in `f64`.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli_io;
pub mod dense;
pub mod error;
pub mod mapping;
pub mod modal;
pub mod plate_element;
pub mod quadrature;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Quad = mapping::QuadGeometry<f64>;
pub type Quad32 = mapping::QuadGeometry<f32>;
pub type Scheme = mapping::MappingScheme<f64>;
pub type Scheme32 = mapping::MappingScheme<f32>;
pub type Rule = quadrature::GaussRule<f64>;
pub type Material = plate_element::PlateMaterial<f64>;
pub type Material32 = plate_element::PlateMaterial<f32>;
