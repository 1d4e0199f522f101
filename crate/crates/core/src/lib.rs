//! Approximation algorithms for Red-Blue Set Cover, Minimum k-Union and monotone minimum
//! satisfying assignment on layered circuits, with exact oracles and instance generators.

// LP formulations index several parallel arrays by the same id.
#![allow(clippy::needless_range_loop)]

pub mod bench;
pub mod circuit;
pub mod error;
pub mod generators;
pub mod instance;
pub mod lp;
pub mod mmsa4;
pub mod mmsa_rec;
pub mod oracles;
pub mod rbsc;
pub mod reduction;
pub mod setcover;
pub mod util;

pub use error::{Error, Result};
