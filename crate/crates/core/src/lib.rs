//! Controlled-direct, natural-direct and natural-indirect probabilities of
//! causation (PNS, PN, PS) for causal mediation analysis.
//!
//! The crate is organised bottom-up:
//!
//! - [`order`] and [`dataset`]: totally ordered values, intervals, evidence
//!   and the immutable observational table.
//! - [`ecdf`]: empirical conditional CDFs, the mediator pmf and the mediation
//!   functional `rho`, behind the [`CdfSource`] trait.
//! - [`identify`]: the identification formulas, generic over any
//!   [`CdfSource`] (empirical or analytic).
//! - [`oracle`]: structural causal models with a monotone threshold coupling,
//!   exact and Monte Carlo counterfactual ground truth.
//! - [`uncertainty`]: percentile bootstrap.
//! - [`verify`]: the reference simulation study and randomized SCM generators
//!   used by the `verify` command and the acceptance suite.

pub mod dataset;
pub mod ecdf;
pub mod error;
pub mod identify;
pub mod oracle;
pub mod order;
pub mod uncertainty;
pub mod verify;

pub use dataset::{Dataset, Schema};
pub use ecdf::{CdfModel, CdfSource};
pub use error::{Error, Result};
pub use identify::{CaseFlag, CdEvidenceTerms, EvidenceTerms, PnsTriple};
pub use oracle::{Method, Mechanism, Scm, ScmSpec, TruthReport};
pub use order::{Cut, Evidence, Interval, OrderedValue, Query};
pub use uncertainty::{BootstrapConfig, CiResult, Estimand, Target};
