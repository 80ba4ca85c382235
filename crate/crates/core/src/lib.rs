//! Heterogeneous best-response dynamics in binary aggregate games.
//!
//! A continuum of agents with private outside options `θ ~ P` chooses
//! between `I` (payoff `F(x̄)`) and `O` (payoff `θ`). The crate finds
//! aggregate equilibria, integrates standard and tempered best response
//! dynamics on a type grid, certifies distributional critical masses and
//! analyses escapes from equilibria that are stable only in aggregate.

pub mod composition;
pub mod config;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod flows;
pub mod game;
pub mod numeric;
pub mod output;
pub mod run;
pub mod stability;

pub use composition::{BayesianStrategy, TypeGrid};
pub use dynamics::{IntegrateOptions, RevisionProtocol, Tempering, Trajectory};
pub use equilibria::{EquilibriumReport, Stability};
pub use error::{Error, Result};
pub use game::{Action, AggregateGame, TypeDistribution};
