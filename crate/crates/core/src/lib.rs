//! Exact event-driven simulation of the two-type Moran model in which every
//! individual carries a quenched resampling rate, together with the
//! diagnostics needed to watch the type-1 measure collapse onto the line
//! `{s * P}` and the total mass behave like a Fisher-Wright diffusion with
//! diffusion constant `1/D = sum_k mu_k / r_k`.
//!
//! Module map:
//!
//! * [`rate_law`]: the countable-support rate law `P`, its moments and the
//!   tail/moment conditions.
//! * [`disorder`]: one quenched draw of `N` rates, aggregated into classes.
//! * [`engine`]: the class-aggregated jump process in scaled time `t = tau/N`.
//! * [`observables`]: projections, the Lyapunov function, the triangle terms
//!   and the occupation-measure distance.
//! * [`fw`]: the reference Fisher-Wright diffusion and comparison statistics.
//! * [`seeding`]: deterministic per-replica random streams.

// `!(x > 0.0)` guards are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod disorder;
pub mod engine;
mod error;
pub mod fenwick;
pub mod fw;
pub mod observables;
pub mod rate_law;
pub mod seeding;

pub use disorder::{Class, Environment};
pub use engine::{InitRule, Outcome, PathRecord, PopulationState, SimEvent};
pub use error::{Error, Result};
pub use fw::DiffusionSpec;
pub use rate_law::{ConditionReport, Family, RateLaw};
pub use seeding::Stream;
