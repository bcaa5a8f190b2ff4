pub mod channel;
pub mod cli;
pub mod driver;
pub mod energy;
pub mod error;
pub mod model;
pub mod report;
pub mod sca;
pub mod solver;
pub mod subproblems;
pub mod sweep;
pub mod tradeoff;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/channel.md")]
    struct Channel;
    #[doc = include_str!("../../../book/src/energy.md")]
    struct Energy;
    #[doc = include_str!("../../../book/src/surrogates.md")]
    struct Surrogates;
    #[doc = include_str!("../../../book/src/solver.md")]
    struct Solver;
    #[doc = include_str!("../../../book/src/optimizer.md")]
    struct Optimizer;
    #[doc = include_str!("../../../book/src/outputs.md")]
    struct Outputs;
}
