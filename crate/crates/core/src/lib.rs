pub mod base;
pub mod error;
pub mod fatigue;
pub mod input;
pub mod model;
pub mod quadrature;
pub mod special;
pub mod transform;
pub mod series;
pub mod moments;
pub mod order;
pub mod info;
pub mod inference;
