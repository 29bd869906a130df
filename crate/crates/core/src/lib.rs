//! Optimal transport on the roto-translation group SE(2).

pub mod error;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod lifting;
pub mod oracles;
pub mod ot;
pub mod se2;

pub use error::{Error, Result};
pub use grid::{GridMeasure, Se2Grid};
pub use kernel::GibbsKernel;
pub use se2::{GroupElement, MetricParams};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/group.md")]
    mod group {}
    #[doc = include_str!("../../../book/src/grid.md")]
    mod grid {}
    #[doc = include_str!("../../../book/src/transport.md")]
    mod transport {}
    #[doc = include_str!("../../../book/src/barycenters.md")]
    mod barycenters {}
    #[doc = include_str!("../../../book/src/flows.md")]
    mod flows {}
    #[doc = include_str!("../../../book/src/lifting.md")]
    mod lifting {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
