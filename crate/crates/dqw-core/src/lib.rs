//! Exact symbolic kernels for deformation quantization computations.
//!
//! Everything here is exact: Gaussian rationals with formal square roots,
//! Laurent windows in the formal parameter `h`, Novikov exponentials
//! `E[c] = exp(c/(i*h))`, truncated Weyl algebras with the Moyal product,
//! flat-chart Fedosov calculus, Koszul/twisted-De-Rham Ext computations, the
//! algebraic metaplectic representation, bar-complex group actions up to
//! inner automorphisms, oscillatory modules, and theta sections on the torus.
//! No floating point is used anywhere.

pub mod error;
pub mod scalar;
pub mod hbar;
pub mod novikov;
pub mod weyl;
pub mod forms;
pub mod poly;
pub mod koszul;
pub mod meta;
pub mod bar;
pub mod ainfty;
pub mod instances;
pub mod osc;
pub mod theta;
pub mod parse;
pub mod report;
pub mod suite;

pub use error::{CoreError, Result};
pub use hbar::HbarLaurent;
pub use novikov::{NovikovElement, Valuation};
pub use scalar::{rat, rat_int, Gaussian, Rational, ScalarExt};
pub use weyl::{WeylElement, WeylMono};
