//! Inversion of a family of conservative tests into confidence bounds.
//!
//! The confidence set for a shift is `{eta : p(eta) >= alpha}`. For monotone
//! P-value functions its boundary is found by geometric bracketing followed by
//! bisection; for quasiconcave functions the set is an interval and both
//! endpoints are found the same way, starting from an accepted point.
//!
//! Every returned endpoint is conservative: the search maintains a bracket
//! `(a, b)` with `p(a) < alpha <= p(b)` (reject side / accept side), shrinks
//! it below the caller's resolution `e`, and returns the *rejected* end, so
//! the reported set always contains the exact one. A two-sided interval is
//! therefore at most `2e` longer than the exact inversion.

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::pvalues::{PValueError, PValueFn, Shape};

/// Parameters of the endpoint search.
#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    /// Rejection threshold: the confidence level is `1 - alpha`.
    pub alpha: f64,
    /// Final bracket width; endpoints are within `e` of the exact boundary.
    pub e: f64,
    /// Starting value, typically the point estimate.
    pub eta0: f64,
    /// Initial bracketing step, typically the data range.
    pub delta0: f64,
    /// Doublings allowed before a direction is declared unbounded.
    pub max_doublings: u32,
}

impl SearchConfig {
    pub fn new(alpha: f64, e: f64, eta0: f64, delta0: f64) -> Self {
        SearchConfig {
            alpha,
            e,
            eta0,
            delta0,
            max_doublings: 60,
        }
    }

    fn validate(&self) -> Result<(), InvertError> {
        let bad = |reason| Err(InvertError::BadConfig { reason });
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie strictly between 0 and 1");
        }
        if !(self.e > 0.0 && self.e.is_finite()) {
            return bad("resolution e must be positive and finite");
        }
        if !self.eta0.is_finite() {
            return bad("eta0 must be finite");
        }
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return bad("delta0 must be positive and finite");
        }
        if self.max_doublings == 0 {
            return bad("max_doublings must be at least 1");
        }
        Ok(())
    }
}

/// Non-fatal conditions the search reports alongside its result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnostic {
    /// No rejection found toward -inf: the lower endpoint is -inf.
    UnboundedBelow,
    /// No rejection found toward +inf: the upper endpoint is +inf.
    UnboundedAbove,
    /// The P-value function's shape is declared Unknown; the search ran
    /// anyway and its result is only as good as the shape assumption.
    ShapeUnverified,
}

#[derive(Debug, Error)]
pub enum InvertError {
    #[error("invalid search configuration: {reason}")]
    BadConfig { reason: &'static str },
    #[error(
        "alpha = {alpha} is at or below the smallest attainable P-value {floor}: \
         with these draws the achievable confidence level is capped at N/(N+1) = {cap}; \
         increase the number of replicates or raise alpha"
    )]
    AlphaBelowFloor { alpha: f64, floor: f64, cap: f64 },
    #[error(
        "no confidence interval: the starting value eta0 = {eta0} is already rejected \
         (p = {p} < alpha = {alpha}); the acceptance region, if any, was not located"
    )]
    EtaZeroRejected { eta0: f64, p: f64, alpha: f64 },
    #[error(
        "no accepted parameter value found within {doublings} doublings of {delta0} \
         around eta0 = {eta0}; the confidence set may be empty or far from eta0"
    )]
    NoAcceptableEta {
        eta0: f64,
        delta0: f64,
        doublings: u32,
    },
    #[error("{side} bound search needs a {need:?} P-value function, got {got:?}")]
    ShapeMismatch {
        side: &'static str,
        need: Shape,
        got: Shape,
    },
    #[error(transparent)]
    Combine(#[from] PValueError),
}

/// One endpoint plus the work it took.
#[derive(Debug, Clone)]
pub struct BoundResult {
    pub value: f64,
    /// Total P-value evaluations, bracketing plus bisection.
    pub evaluations: usize,
    /// Evaluations spent locating a sign change (includes the probe at eta0).
    pub bracket_evaluations: usize,
    pub bisect_evaluations: usize,
    pub diagnostics: Vec<Diagnostic>,
}

/// Two-sided interval plus the work it took.
#[derive(Debug, Clone)]
pub struct IntervalResult {
    pub lower: f64,
    pub upper: f64,
    pub p_at_eta0: f64,
    pub evaluations: usize,
    pub diagnostics: Vec<Diagnostic>,
}

/// Which side a one-sided bound (or a full interval) refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Lower,
    Upper,
    TwoSided,
}

/// Which two-sided construction is in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// Two one-sided tests at alpha/2 each (Bonferroni).
    Bonferroni,
    /// Single test on the absolute statistic.
    Abs,
}

fn serialize_bound<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

/// A finished confidence statement with everything needed to reproduce it.
/// Infinite endpoints serialize as the strings `"inf"` / `"-inf"` because
/// JSON has no literal for them.
#[derive(Debug, Clone, Serialize)]
pub struct ConfidenceResult {
    #[serde(serialize_with = "serialize_bound")]
    pub lower: f64,
    #[serde(serialize_with = "serialize_bound")]
    pub upper: f64,
    pub alpha: f64,
    pub e: f64,
    #[serde(rename = "N")]
    pub n_replicates: usize,
    pub seed: String,
    pub side: Side,
    pub convention: Option<Convention>,
    pub p_at_eta0: f64,
    pub evaluations: usize,
    pub diagnostics: Vec<Diagnostic>,
}

fn floor_guard(p: &PValueFn, alpha: f64) -> Result<(), InvertError> {
    let floor = p.floor();
    // floor >= 1 means no replicates at all: every direction is unbounded,
    // which the search reports through diagnostics rather than an error
    if alpha <= floor && floor < 1.0 {
        return Err(InvertError::AlphaBelowFloor {
            alpha,
            floor,
            cap: 1.0 - floor,
        });
    }
    Ok(())
}

fn bisect_lower(p: &PValueFn, alpha: f64, e: f64, a: &mut f64, b: &mut f64, evals: &mut usize) {
    // invariant: p(a) < alpha <= p(b), a < b
    while *b - *a > e {
        let mid = *a + (*b - *a) / 2.0;
        if !(mid > *a && mid < *b) {
            break;
        }
        *evals += 1;
        if p.evaluate(mid) < alpha {
            *a = mid;
        } else {
            *b = mid;
        }
    }
}

fn bisect_upper(p: &PValueFn, alpha: f64, e: f64, a: &mut f64, b: &mut f64, evals: &mut usize) {
    // invariant: p(a) >= alpha > p(b), a < b
    while *b - *a > e {
        let mid = *a + (*b - *a) / 2.0;
        if !(mid > *a && mid < *b) {
            break;
        }
        *evals += 1;
        if p.evaluate(mid) < alpha {
            *b = mid;
        } else {
            *a = mid;
        }
    }
}

enum Hunt {
    Found(f64),
    Exhausted,
}

/// Double away from eta0 in `direction` (+1/-1) until `p` crosses to the
/// `want_accept` side of alpha. Returns the first probe on that side.
fn hunt(
    p: &PValueFn,
    cfg: &SearchConfig,
    direction: f64,
    want_accept: bool,
    evals: &mut usize,
) -> Hunt {
    let mut delta = cfg.delta0;
    let mut eta_star = cfg.eta0 + direction * delta;
    let mut doublings = 0u32;
    loop {
        if !eta_star.is_finite() || doublings >= cfg.max_doublings {
            return Hunt::Exhausted;
        }
        *evals += 1;
        let accepted = p.evaluate(eta_star) >= cfg.alpha;
        if accepted == want_accept {
            return Hunt::Found(eta_star);
        }
        delta *= 2.0;
        eta_star += direction * delta;
        doublings += 1;
    }
}

fn shape_check(
    p: &PValueFn,
    need: Shape,
    side: &'static str,
    diagnostics: &mut Vec<Diagnostic>,
) -> Result<(), InvertError> {
    match p.shape() {
        s if s == need => Ok(()),
        Shape::Unknown => {
            diagnostics.push(Diagnostic::ShapeUnverified);
            Ok(())
        }
        got => Err(InvertError::ShapeMismatch { side, need, got }),
    }
}

/// Greatest eta provably outside the confidence set from below, for a
/// nondecreasing P-value function: `p(result) < alpha <= p(result + e')`
/// for some `e' <= e`. Returns -inf (with a diagnostic) when no rejection
/// exists toward -inf; errors when not even an accepted value is found.
pub fn lower_bound(p: &PValueFn, cfg: &SearchConfig) -> Result<BoundResult, InvertError> {
    cfg.validate()?;
    floor_guard(p, cfg.alpha)?;
    let mut diagnostics = Vec::new();
    shape_check(p, Shape::Nondecreasing, "lower", &mut diagnostics)?;

    let mut bracket_evals = 1usize;
    let p0 = p.evaluate(cfg.eta0);
    let (mut a, mut b);
    if p0 >= cfg.alpha {
        b = cfg.eta0;
        match hunt(p, cfg, -1.0, false, &mut bracket_evals) {
            Hunt::Found(eta) => a = eta,
            Hunt::Exhausted => {
                diagnostics.push(Diagnostic::UnboundedBelow);
                return Ok(BoundResult {
                    value: f64::NEG_INFINITY,
                    evaluations: bracket_evals,
                    bracket_evaluations: bracket_evals,
                    bisect_evaluations: 0,
                    diagnostics,
                });
            }
        }
    } else {
        a = cfg.eta0;
        match hunt(p, cfg, 1.0, true, &mut bracket_evals) {
            Hunt::Found(eta) => b = eta,
            Hunt::Exhausted => {
                return Err(InvertError::NoAcceptableEta {
                    eta0: cfg.eta0,
                    delta0: cfg.delta0,
                    doublings: cfg.max_doublings,
                })
            }
        }
    }
    let mut bisect_evals = 0usize;
    bisect_lower(p, cfg.alpha, cfg.e, &mut a, &mut b, &mut bisect_evals);
    Ok(BoundResult {
        value: a,
        evaluations: bracket_evals + bisect_evals,
        bracket_evaluations: bracket_evals,
        bisect_evaluations: bisect_evals,
        diagnostics,
    })
}

/// Mirror image of [`lower_bound`] for a nonincreasing P-value function:
/// `p(result - e') >= alpha > p(result)`.
pub fn upper_bound(p: &PValueFn, cfg: &SearchConfig) -> Result<BoundResult, InvertError> {
    cfg.validate()?;
    floor_guard(p, cfg.alpha)?;
    let mut diagnostics = Vec::new();
    shape_check(p, Shape::Nonincreasing, "upper", &mut diagnostics)?;

    let mut bracket_evals = 1usize;
    let p0 = p.evaluate(cfg.eta0);
    let (mut a, mut b);
    if p0 >= cfg.alpha {
        a = cfg.eta0;
        match hunt(p, cfg, 1.0, false, &mut bracket_evals) {
            Hunt::Found(eta) => b = eta,
            Hunt::Exhausted => {
                diagnostics.push(Diagnostic::UnboundedAbove);
                return Ok(BoundResult {
                    value: f64::INFINITY,
                    evaluations: bracket_evals,
                    bracket_evaluations: bracket_evals,
                    bisect_evaluations: 0,
                    diagnostics,
                });
            }
        }
    } else {
        b = cfg.eta0;
        match hunt(p, cfg, -1.0, true, &mut bracket_evals) {
            Hunt::Found(eta) => a = eta,
            Hunt::Exhausted => {
                return Err(InvertError::NoAcceptableEta {
                    eta0: cfg.eta0,
                    delta0: cfg.delta0,
                    doublings: cfg.max_doublings,
                })
            }
        }
    }
    let mut bisect_evals = 0usize;
    bisect_upper(p, cfg.alpha, cfg.e, &mut a, &mut b, &mut bisect_evals);
    Ok(BoundResult {
        value: b,
        evaluations: bracket_evals + bisect_evals,
        bracket_evaluations: bracket_evals,
        bisect_evaluations: bisect_evals,
        diagnostics,
    })
}

/// Both endpoints of `{eta : p(eta) >= alpha}` for a quasiconcave P-value
/// function, searched outward from an accepted eta0. The combined interval
/// is at most `2e` longer than the exact inversion.
pub fn quasiconcave_interval(
    p: &PValueFn,
    cfg: &SearchConfig,
) -> Result<IntervalResult, InvertError> {
    cfg.validate()?;
    floor_guard(p, cfg.alpha)?;
    let mut diagnostics = Vec::new();
    match p.shape() {
        // any monotone function is quasiconcave; one side will simply
        // come back unbounded
        Shape::Quasiconcave | Shape::Nondecreasing | Shape::Nonincreasing => {}
        Shape::Unknown => diagnostics.push(Diagnostic::ShapeUnverified),
    }

    let mut evals = 1usize;
    let p0 = p.evaluate(cfg.eta0);
    if p0 < cfg.alpha {
        return Err(InvertError::EtaZeroRejected {
            eta0: cfg.eta0,
            p: p0,
            alpha: cfg.alpha,
        });
    }

    // lower endpoint: eta0 is accepted, probe leftward
    let lower = match hunt(p, cfg, -1.0, false, &mut evals) {
        Hunt::Found(eta) => {
            let (mut a, mut b) = (eta, cfg.eta0);
            bisect_lower(p, cfg.alpha, cfg.e, &mut a, &mut b, &mut evals);
            a
        }
        Hunt::Exhausted => {
            diagnostics.push(Diagnostic::UnboundedBelow);
            f64::NEG_INFINITY
        }
    };

    // upper endpoint: probe rightward
    let upper = match hunt(p, cfg, 1.0, false, &mut evals) {
        Hunt::Found(eta) => {
            let (mut a, mut b) = (cfg.eta0, eta);
            bisect_upper(p, cfg.alpha, cfg.e, &mut a, &mut b, &mut evals);
            b
        }
        Hunt::Exhausted => {
            diagnostics.push(Diagnostic::UnboundedAbove);
            f64::INFINITY
        }
    };

    Ok(IntervalResult {
        lower,
        upper,
        p_at_eta0: p0,
        evaluations: evals,
        diagnostics,
    })
}

/// Bonferroni two-sided interval from two monotone one-sided P-value
/// functions evaluated on the same frozen draws.
pub fn two_sided_interval(
    p_up: PValueFn,
    p_lo: PValueFn,
    cfg: &SearchConfig,
) -> Result<IntervalResult, InvertError> {
    let combined = crate::pvalues::two_sided(p_up, p_lo)?;
    quasiconcave_interval(&combined, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn step_at(c: f64) -> PValueFn {
        PValueFn::new(Shape::Nondecreasing, 0.01, move |eta| {
            if eta >= c {
                1.0
            } else {
                0.01
            }
        })
    }

    fn tent() -> PValueFn {
        PValueFn::new(Shape::Quasiconcave, 0.0, |eta: f64| (1.0 - eta.abs()).max(0.0))
    }

    fn cfg(alpha: f64, e: f64, eta0: f64, delta0: f64) -> SearchConfig {
        SearchConfig::new(alpha, e, eta0, delta0)
    }

    #[test]
    fn lower_bound_lands_within_e_below_a_step() {
        let p = step_at(3.0);
        let c = cfg(0.05, 1e-6, 5.0, 1.0);
        let r = lower_bound(&p, &c).unwrap();
        assert!(r.value < 3.0, "returned endpoint must be rejected");
        assert!(3.0 - r.value <= 1e-6, "endpoint {} too far below 3", r.value);
        assert!(r.diagnostics.is_empty());
        assert_eq!(r.evaluations, r.bracket_evaluations + r.bisect_evaluations);
    }

    #[test]
    fn upper_bound_mirrors() {
        let p = PValueFn::new(Shape::Nonincreasing, 0.01, |eta: f64| {
            if eta <= 3.0 {
                1.0
            } else {
                0.01
            }
        });
        let c = cfg(0.05, 1e-6, 0.0, 1.0);
        let r = upper_bound(&p, &c).unwrap();
        assert!(r.value > 3.0);
        assert!(r.value - 3.0 <= 1e-6);
    }

    #[test]
    fn always_accepting_function_is_unbounded_with_diagnostics() {
        let ones = PValueFn::new(Shape::Nondecreasing, 1.0, |_| 1.0);
        let c = cfg(0.05, 1e-8, 0.0, 1.0);
        let r = lower_bound(&ones, &c).unwrap();
        assert_eq!(r.value, f64::NEG_INFINITY);
        assert_eq!(r.diagnostics, vec![Diagnostic::UnboundedBelow]);

        let ones_dec = PValueFn::new(Shape::Nonincreasing, 1.0, |_| 1.0);
        let r = upper_bound(&ones_dec, &c).unwrap();
        assert_eq!(r.value, f64::INFINITY);
        assert_eq!(r.diagnostics, vec![Diagnostic::UnboundedAbove]);

        let flat = PValueFn::new(Shape::Quasiconcave, 1.0, |_| 1.0);
        let r = quasiconcave_interval(&flat, &c).unwrap();
        assert_eq!((r.lower, r.upper), (f64::NEG_INFINITY, f64::INFINITY));
        assert_eq!(r.p_at_eta0, 1.0);
        assert!(r.diagnostics.contains(&Diagnostic::UnboundedBelow));
        assert!(r.diagnostics.contains(&Diagnostic::UnboundedAbove));
    }

    #[test]
    fn tent_interval_finds_both_crossings() {
        let e = 1e-9;
        let r = quasiconcave_interval(&tent(), &cfg(0.5, e, 0.0, 1.0)).unwrap();
        // exact level set is [-0.5, 0.5]; returned endpoints sit just outside
        assert!(r.lower <= -0.5 && r.lower >= -0.5 - 2.0 * e);
        assert!(r.upper >= 0.5 && r.upper <= 0.5 + 2.0 * e);
        assert!(r.diagnostics.is_empty());
    }

    #[test]
    fn interval_length_within_2e_of_exact() {
        for e in [1e-3, 1e-6, 1e-9] {
            let r = quasiconcave_interval(&tent(), &cfg(0.5, e, 0.0, 1.0)).unwrap();
            let exact = 1.0;
            let len = r.upper - r.lower;
            assert!(len >= exact, "interval must contain the exact level set");
            assert!(len <= exact + 2.0 * e, "length {len} exceeds exact + 2e");
        }
    }

    #[test]
    fn rejected_starting_point_is_an_error() {
        let err = quasiconcave_interval(&tent(), &cfg(0.5, 1e-8, 5.0, 1.0)).unwrap_err();
        match err {
            InvertError::EtaZeroRejected { eta0, p, alpha } => {
                assert_eq!(eta0, 5.0);
                assert_eq!(p, 0.0);
                assert_eq!(alpha, 0.5);
            }
            other => panic!("expected EtaZeroRejected, got {other:?}"),
        }
    }

    #[test]
    fn alpha_at_or_below_floor_is_an_error_naming_the_cap() {
        // nine replicates: plus-one floor 1/10, cap N/(N+1) = 0.9
        let p = PValueFn::new(Shape::Nondecreasing, 0.1, |eta: f64| {
            (0.1f64).max((eta / 10.0).min(1.0))
        });
        let err = lower_bound(&p, &cfg(0.05, 1e-8, 5.0, 1.0)).unwrap_err();
        match &err {
            InvertError::AlphaBelowFloor { alpha, floor, cap } => {
                assert_eq!(*alpha, 0.05);
                assert_eq!(*floor, 0.1);
                assert!((cap - 0.9).abs() < 1e-15);
            }
            other => panic!("expected AlphaBelowFloor, got {other:?}"),
        }
        assert!(err.to_string().contains("N/(N+1)"));
        // alpha exactly at the floor is equally unreachable
        assert!(matches!(
            lower_bound(&p, &cfg(0.1, 1e-8, 5.0, 1.0)),
            Err(InvertError::AlphaBelowFloor { .. })
        ));
    }

    #[test]
    fn constant_rejection_reports_no_acceptable_eta() {
        let p = PValueFn::new(Shape::Nondecreasing, 0.001, |_| 0.001);
        let err = lower_bound(&p, &cfg(0.05, 1e-8, 0.0, 1.0)).unwrap_err();
        assert!(matches!(err, InvertError::NoAcceptableEta { .. }));
    }

    #[test]
    fn wrong_shape_is_rejected_and_unknown_is_flagged() {
        let dec = PValueFn::new(Shape::Nonincreasing, 0.0, |eta: f64| (-eta).exp().min(1.0));
        assert!(matches!(
            lower_bound(&dec, &cfg(0.05, 1e-8, 0.0, 1.0)),
            Err(InvertError::ShapeMismatch { .. })
        ));

        let unknown = PValueFn::new(Shape::Unknown, 0.01, |eta: f64| {
            if eta >= 3.0 {
                1.0
            } else {
                0.01
            }
        });
        let r = lower_bound(&unknown, &cfg(0.05, 1e-6, 5.0, 1.0)).unwrap();
        assert!(r.diagnostics.contains(&Diagnostic::ShapeUnverified));
        assert!(3.0 - r.value <= 1e-6 && r.value < 3.0);
    }

    #[test]
    fn evaluation_count_tracks_the_doubling_plus_bisection_budget() {
        // step at 3, start at 0 (rejected): probes 1 then 3 bracket the edge,
        // bisection halves (0,3) until below e = 2^-20
        let p = step_at(3.0);
        let e = (2.0f64).powi(-20);
        let r = lower_bound(&p, &cfg(0.05, e, 0.0, 1.0)).unwrap();
        assert_eq!(r.bracket_evaluations, 3); // eta0, 1, 3
        let max_bisect = (3.0f64 / e).log2().ceil() as usize;
        assert!(
            r.bisect_evaluations <= max_bisect,
            "bisection took {} evals, budget {max_bisect}",
            r.bisect_evaluations
        );
        assert!(3.0 - r.value <= e && r.value < 3.0);
    }

    #[test]
    fn tiny_resolution_terminates_via_midpoint_exhaustion() {
        // e far below f64 spacing near the boundary: loop must still end
        let p = step_at(3.0);
        let r = lower_bound(&p, &cfg(0.05, 1e-300, 5.0, 1.0)).unwrap();
        assert!(r.value < 3.0);
        assert!(3.0 - r.value <= 1e-12);
    }

    #[test]
    fn intervals_nest_as_alpha_grows() {
        let e = 1e-9;
        let mut last: Option<(f64, f64)> = None;
        for alpha in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let r = quasiconcave_interval(&tent(), &cfg(alpha, e, 0.0, 1.0)).unwrap();
            if let Some((pl, pu)) = last {
                // nesting up to endpoint resolution
                assert!(r.lower >= pl - e);
                assert!(r.upper <= pu + e);
            }
            last = Some((r.lower, r.upper));
        }
    }

    #[test]
    fn two_sided_interval_combines_monotone_pieces() {
        let up = PValueFn::new(Shape::Nondecreasing, 0.0, |eta: f64| {
            (eta / 4.0 + 0.5).clamp(0.0, 1.0)
        });
        let lo = PValueFn::new(Shape::Nonincreasing, 0.0, |eta: f64| {
            (-eta / 4.0 + 0.5).clamp(0.0, 1.0)
        });
        // combined p = min(1, 2 min(up, lo)); p >= 0.5 iff |eta| <= 1
        let r = two_sided_interval(up, lo, &cfg(0.5, 1e-9, 0.0, 1.0)).unwrap();
        assert!((r.lower + 1.0).abs() <= 1e-8);
        assert!((r.upper - 1.0).abs() <= 1e-8);

        let bad = PValueFn::new(Shape::Nonincreasing, 0.0, |_| 0.5);
        let also_bad = PValueFn::new(Shape::Nonincreasing, 0.0, |_| 0.5);
        assert!(matches!(
            two_sided_interval(bad, also_bad, &cfg(0.5, 1e-9, 0.0, 1.0)),
            Err(InvertError::Combine(_))
        ));
    }

    #[test]
    fn config_validation_rejects_nonsense() {
        let p = step_at(0.0);
        for bad in [
            cfg(0.0, 1e-8, 0.0, 1.0),
            cfg(1.0, 1e-8, 0.0, 1.0),
            cfg(0.05, 0.0, 0.0, 1.0),
            cfg(0.05, f64::NAN, 0.0, 1.0),
            cfg(0.05, 1e-8, f64::INFINITY, 1.0),
            cfg(0.05, 1e-8, 0.0, 0.0),
            cfg(0.05, 1e-8, 0.0, -2.0),
        ] {
            assert!(matches!(
                lower_bound(&p, &bad),
                Err(InvertError::BadConfig { .. })
            ));
        }
    }

    #[test]
    fn infinite_endpoints_serialize_as_strings() {
        let r = ConfidenceResult {
            lower: f64::NEG_INFINITY,
            upper: 2.5,
            alpha: 0.05,
            e: 1e-8,
            n_replicates: 100,
            seed: "abc".to_string(),
            side: Side::TwoSided,
            convention: Some(Convention::Bonferroni),
            p_at_eta0: 1.0,
            evaluations: 42,
            diagnostics: vec![Diagnostic::UnboundedBelow],
        };
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"lower\":\"-inf\""));
        assert!(json.contains("\"upper\":2.5"));
        assert!(json.contains("\"N\":100"));
        assert!(json.contains("\"side\":\"two-sided\""));
        assert!(json.contains("\"convention\":\"bonferroni\""));
        assert!(json.contains("\"diagnostics\":[\"unbounded_below\"]"));
    }

    proptest! {
        #[test]
        fn lower_bound_brackets_the_boundary(
            c in -100.0f64..100.0,
            s in 0.05f64..10.0,
            alpha in 0.02f64..0.9,
            eta0 in -120.0f64..120.0,
            delta0 in 0.1f64..10.0,
        ) {
            let p = PValueFn::new(Shape::Nondecreasing, 0.0, move |eta: f64| {
                1.0 / (1.0 + (-(eta - c) / s).exp())
            });
            let e = 1e-7;
            let r = lower_bound(&p, &cfg(alpha, e, eta0, delta0)).unwrap();
            prop_assert!(r.value.is_finite());
            prop_assert!(p.evaluate(r.value) < alpha);
            prop_assert!(p.evaluate(r.value + 2.0 * e) >= alpha);
        }

        #[test]
        fn upper_bound_brackets_the_boundary(
            c in -100.0f64..100.0,
            s in 0.05f64..10.0,
            alpha in 0.02f64..0.9,
            eta0 in -120.0f64..120.0,
            delta0 in 0.1f64..10.0,
        ) {
            let p = PValueFn::new(Shape::Nonincreasing, 0.0, move |eta: f64| {
                1.0 / (1.0 + ((eta - c) / s).exp())
            });
            let e = 1e-7;
            let r = upper_bound(&p, &cfg(alpha, e, eta0, delta0)).unwrap();
            prop_assert!(r.value.is_finite());
            prop_assert!(p.evaluate(r.value) < alpha);
            prop_assert!(p.evaluate(r.value - 2.0 * e) >= alpha);
        }

        #[test]
        fn quasiconcave_interval_traps_the_level_set(
            center in -50.0f64..50.0,
            width in 0.5f64..20.0,
            alpha in 0.05f64..0.95,
        ) {
            let p = PValueFn::new(Shape::Quasiconcave, 0.0, move |eta: f64| {
                (1.0 - ((eta - center) / width).abs()).max(0.0)
            });
            let e = 1e-7;
            let r = quasiconcave_interval(&p, &cfg(alpha, e, center, width)).unwrap();
            // exact set is center ± width(1 - alpha)
            let half = width * (1.0 - alpha);
            prop_assert!(r.lower <= center - half + 1e-9);
            prop_assert!(r.lower >= center - half - 2.0 * e);
            prop_assert!(r.upper >= center + half - 1e-9);
            prop_assert!(r.upper <= center + half + 2.0 * e);
        }
    }
}
