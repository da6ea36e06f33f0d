//! Thompson-sampling selection among candidate active-learning algorithms.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem, the command line or threads lives in the companion `tailor`
//! crate.
//!
//! Layout:
//!
//! * [`domain`] – labels, pools, the labeled/unlabeled partition and the
//!   per-round selection trace.
//! * [`rewards`] – class-diversity, multi-label search and domain weight vectors.
//! * [`posterior`] – Beta / Dirichlet arm posteriors and confidence diagnostics.
//! * [`policies`] – TAILOR, random meta, linear contextual Thompson sampling and
//!   the UCB diagnostic policy.
//! * [`candidates`] – iterative active-learning selectors (uncertainty, search,
//!   BADGE-style k-means++).
//! * [`model`] – linear softmax / sigmoid classifier retrained every round.
//! * [`simenv`] – pure bandit instances and synthetic imbalanced pools.
//! * [`metrics`] – mAP, balanced accuracy, imbalance ratios, regret curves.
//! * [`runner`] – the round loop, trials and aggregation.
#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN fails parameter checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod candidates;
pub mod domain;
mod error;
pub mod linalg;
pub mod math;
pub mod metrics;
pub mod model;
pub mod policies;
pub mod posterior;
pub mod rewards;
pub mod rng;
pub mod runner;
pub mod sampling;
pub mod simenv;

pub use error::{Error, Result};
