//! Exact computations of levels of DG modules over cochain algebras of spheres.

pub mod algebra;
pub mod cli;
pub mod emss;
pub mod error;
pub mod field;
pub mod graded;
pub mod linalg;
pub mod module;
pub mod rational;
pub mod resolve;
pub mod spheres;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fields-and-complexes.md")]
    mod fields_and_complexes {}
    #[doc = include_str!("../../../book/src/algebras-and-modules.md")]
    mod algebras_and_modules {}
    #[doc = include_str!("../../../book/src/resolutions.md")]
    mod resolutions {}
    #[doc = include_str!("../../../book/src/molecules.md")]
    mod molecules {}
    #[doc = include_str!("../../../book/src/bundles.md")]
    mod bundles {}
    #[doc = include_str!("../../../book/src/spectral-sequence.md")]
    mod spectral_sequence {}
    #[doc = include_str!("../../../book/src/rational-models.md")]
    mod rational_models {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}
