//! Tail indices of distributions on countable alphabets.
//!
//! For a distribution {p_k} and sample size n, ζ_{1,n} = Σ p_k(1−p_k)^n is the
//! expected probability of the letters missing from an iid sample of size n,
//! and t_n = n·ζ_{1,n}. The limit behaviour of t_n sorts distributions into
//! domains 0, 1, 2 and a transient class; this crate computes t_n with
//! certified truncation error, classifies distributions, checks dominance
//! between them, and estimates ζ_{1,v} from samples.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod classify;
pub mod dist;
pub mod dominance;
pub mod error;
pub mod estimate;
pub mod special;
pub mod tail_index;
mod util;

pub use classify::{classify_analytic, classify_numeric, Domain, DomainVerdict, Thresholds};
pub use dist::{make_distribution, Bracket, Distribution, FamilyKind, FamilySpec};
pub use dominance::{dominates, DominanceConfig, DominanceReport, DominanceVerdict};
pub use error::{Error, Result};
pub use tail_index::{tn, zeta1, IndexValue, SampleSize};
