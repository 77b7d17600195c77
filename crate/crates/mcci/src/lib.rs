//! Conservative Monte Carlo confidence bounds and intervals by test inversion.
//!
//! A Monte Carlo test that counts how many replicate statistics beat the observed
//! one (with a +1 correction) has guaranteed level for any number of replicates.
//! Inverting that test — collecting every parameter value the test fails to
//! reject — yields a confidence set with guaranteed coverage, **provided the same
//! frozen set of draws is reused for every hypothesized value**. This crate
//! implements that construction end to end:
//!
//! * [`rng`] — deterministic SHA-256 counter-mode byte source (plus a faster
//!   non-cryptographic option), unbiased integer sampling, random signs, and
//!   random treatment assignments.
//! * [`pvalues`] — the conservative P-value estimators (plus-one, importance
//!   weighted, fixed-subset, weighted-assignment) and the Bonferroni two-sided
//!   combination.
//! * [`shift`] — one-sample symmetric-shift and two-sample constant-shift
//!   models with O(1)-per-replicate statistic updates and frozen-draw builders.
//! * [`invert`] — modified bisection that turns a monotone or quasiconcave
//!   P-value function into conservative lower/upper bounds and two-sided
//!   intervals.
//! * [`oracle`] — exact full-group enumeration (all 2ⁿ sign vectors or all
//!   C(n,m) assignments) and exact breakpoint scans used to verify the search.
//! * [`coverage`] — simulation harness checking empirical coverage and P-value
//!   sub-uniformity.
//! * [`cli`] — the `mcci` command line (`ci`, `test`, `oracle`, `coverage`)
//!   with CSV ingestion and machine-readable JSON output.
//!
//! Each capability has a runnable example:
//!
//! ```text
//! cargo run --example one_sample_ci
//! cargo run --example two_sample_ci
//! cargo run --example exact_enumeration
//! cargo run --example pvalue_curve
//! cargo run --example importance_weights
//! cargo run --example coverage_check
//! cargo run --example custom_search
//! ```
//!
//! Everything downstream of a seed is a pure function of (data, seed, config):
//! rerunning with the same inputs reproduces results bit for bit, and worker
//! thread counts never change any number.

pub mod cli;
pub mod coverage;
pub mod invert;
pub mod oracle;
pub mod pvalues;
pub mod rng;
pub mod shift;
