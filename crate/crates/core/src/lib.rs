//! Common fixed points of commuting map pairs on cone metric spaces.
//!
//! The crate models a cone metric space (distances valued in an ordered
//! cone), checks a map pair `(S, T)` against the contraction conditions of
//! Jungck, Kannan, Chatterjea, Zamfirescu and weak-contraction type, and
//! runs the Jungck iteration `T x_{n+1} = S x_n` to the common fixed point
//! with certified residuals. Finite instances come with an exhaustive
//! oracle.

pub mod cli;
pub mod cone;
pub mod cone_metric;
pub mod contraction;
pub mod error;
pub mod finite_oracle;
pub mod maps;
pub mod solver;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/cones.md")]
    mod cones {}
    #[doc = include_str!("../../../book/src/cone-metrics.md")]
    mod cone_metrics {}
    #[doc = include_str!("../../../book/src/maps.md")]
    mod maps {}
    #[doc = include_str!("../../../book/src/contractions.md")]
    mod contractions {}
    #[doc = include_str!("../../../book/src/jungck.md")]
    mod jungck {}
    #[doc = include_str!("../../../book/src/finite-oracle.md")]
    mod finite_oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
