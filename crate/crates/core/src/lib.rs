//! Meta distribution of the conditional coverage probability (CCP) for
//! downlink NOMA in Poisson cellular networks.
//!
//! Two UE placement schemes are covered: E-NOMA (users anywhere in the
//! Voronoi cell) and C-NOMA (users restricted to the in-disk of radius ρ/2).
//! The crate provides closed-form and integral moments of the CCP, the
//! beta moment-matched meta distribution, a Monte Carlo network simulator
//! that serves as an independent oracle, and a small rate-constrained
//! resource allocation search.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cnoma;
pub mod enoma;
pub mod error;
pub mod metadist;
pub mod model;
pub mod moments;
pub mod quad;
pub mod ra;
pub mod simulator;
pub mod specfun;
pub mod sum;

pub use error::{Error, Result};
pub use metadist::{build_md, BetaMd, MetaDistribution};
pub use model::{effective_alloc, Allocation, EffectiveAlloc, NetworkParams, Scheme};
pub use moments::{moment, MomentMethod};
