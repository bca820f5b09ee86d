//! Sunflower-free families, slice-rank tensors and their bounds.

pub mod bounds;
pub mod exactnum;
pub mod search;
pub mod setsys;
pub mod tensor;

pub use setsys::{AnyFamily, BinaryFamily, DFamily, DVector, Family, Point, Setting, SubsetVector};
