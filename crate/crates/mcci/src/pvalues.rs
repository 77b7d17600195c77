//! Conservative Monte Carlo P-value estimators over a frozen set of replicates.
//!
//! Every estimator here is conservative by construction: under the null the
//! probability that it falls at or below `p` is at most `p`, for any number of
//! replicates. Two conventions make that work:
//!
//! * ties count against rejection — all indicator comparisons are weak
//!   (`>=` for the upper tail, `<=` for the lower), with exact f64 comparison
//!   and no epsilon;
//! * the observed datum competes: the plus-one estimators add it to numerator
//!   and denominator, and the fixed-subset scheme requires the identity
//!   rearrangement in the subset.
//!
//! A [`FrozenDraws`] value holds one realization of the auxiliary randomness.
//! Reusing the same instance for every hypothesized parameter value is what
//! lets inverted tests form genuine confidence sets, so the draws are
//! immutable after construction.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::shift::ReplicateSummary;

#[derive(Debug, Error, PartialEq)]
pub enum PValueError {
    #[error("self-normalized weighted P-value undefined: all weights are zero")]
    DegenerateWeights,
    #[error("fixed-subset P-value requires at least one subset element")]
    EmptySubset,
    #[error("assignment probabilities must be strictly positive and finite")]
    NonpositiveProbability,
    #[error("two-sided combination needs a nondecreasing upper-tail and a nonincreasing lower-tail P-value function, got {up:?} and {lo:?}")]
    ShapeMismatch { up: Shape, lo: Shape },
}

/// Tail a one-sided kernel counts toward. Ties always count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Upper,
    Lower,
}

/// Test orientation at the model level. The two-sided variants exist only for
/// shift models that can supply both one-sided P-values (Bonferroni) or an
/// absolute-value statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    Upper,
    Lower,
    TwoSidedBonferroni,
    TwoSidedAbs,
}

/// Declared shape of a P-value function of the hypothesized parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Nondecreasing,
    Nonincreasing,
    Quasiconcave,
    Unknown,
}

/// How the frozen replicates were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Replicate statistics simulated directly from a null or proposal law.
    Simulation,
    /// Random sample (with replacement) from an invariance group.
    PermutationSample,
    /// Caller-fixed subset of group elements applied after one random anchor.
    PermutationFixedSubset,
    /// Re-randomized treatment assignments from the experiment's own design.
    RandomizationSample,
}

/// Importance weights for simulation draws: one per replicate plus the weight
/// of the observed datum.
#[derive(Debug, Clone)]
pub struct DrawWeights {
    pub observed: f64,
    pub replicates: Vec<f64>,
}

/// One realization of the auxiliary randomness: N replicate summaries, the
/// observed summary they are compared against, and the provenance needed to
/// reproduce them. Immutable after construction — every P-value for every
/// hypothesized value must come from the same instance.
#[derive(Debug, Clone)]
pub struct FrozenDraws {
    observed: ReplicateSummary,
    replicates: Vec<ReplicateSummary>,
    seed: Vec<u8>,
    scheme: Scheme,
    weights: Option<DrawWeights>,
    /// Raw treatment masks, kept only when a statistic without an O(1)
    /// update rule (e.g. Studentized) will need full recomputation.
    masks: Option<Vec<Vec<u8>>>,
}

impl FrozenDraws {
    pub fn new(
        observed: ReplicateSummary,
        replicates: Vec<ReplicateSummary>,
        seed: &[u8],
        scheme: Scheme,
        weights: Option<DrawWeights>,
    ) -> Self {
        if let Some(w) = &weights {
            assert_eq!(
                w.replicates.len(),
                replicates.len(),
                "need one weight per replicate"
            );
            assert!(
                w.observed.is_finite() && w.observed >= 0.0,
                "observed weight must be finite and nonnegative"
            );
            assert!(
                w.replicates.iter().all(|v| v.is_finite() && *v >= 0.0),
                "replicate weights must be finite and nonnegative"
            );
        }
        FrozenDraws {
            observed,
            replicates,
            seed: seed.to_vec(),
            scheme,
            weights,
            masks: None,
        }
    }

    pub(crate) fn with_masks(mut self, masks: Vec<Vec<u8>>) -> Self {
        assert_eq!(masks.len(), self.replicates.len());
        self.masks = Some(masks);
        self
    }

    /// Number of replicates N.
    pub fn len(&self) -> usize {
        self.replicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replicates.is_empty()
    }

    pub fn observed(&self) -> &ReplicateSummary {
        &self.observed
    }

    pub fn replicates(&self) -> &[ReplicateSummary] {
        &self.replicates
    }

    pub fn seed(&self) -> &[u8] {
        &self.seed
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn weights(&self) -> Option<&DrawWeights> {
        self.weights.as_ref()
    }

    /// Raw treatment masks (one byte per unit, 1 = treated), present only
    /// when the draws were frozen with assignments kept.
    pub fn masks(&self) -> Option<&[Vec<u8>]> {
        self.masks.as_deref()
    }
}

fn beats(t_obs: f64, t: f64, dir: Direction) -> bool {
    match dir {
        Direction::Upper => t >= t_obs,
        Direction::Lower => t <= t_obs,
    }
}

/// Plus-one estimator: `p = (1 + #{j : replicate beats observed}) / (1 + N)`.
/// Valid for direct simulation and for uniform random samples from a group,
/// with or without replacement. Never below `1/(1+N)`.
pub fn p_plus_one(t_obs: f64, t_reps: &[f64], dir: Direction) -> f64 {
    let hits = t_reps.iter().filter(|&&t| beats(t_obs, t, dir)).count();
    (1 + hits) as f64 / (1 + t_reps.len()) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightVariant {
    /// Numerator of importance weights over the fixed denominator `1 + N`;
    /// can exceed 1 with heavy weights, so the result is clipped.
    FixedDenominator,
    /// Numerator over the realized total weight.
    SelfNormalized,
}

/// Importance-weighted estimator for simulation draws from a proposal law.
/// The observed datum's weight always enters the numerator (its statistic
/// ties itself). Weighted sums accumulate in index order so results do not
/// depend on thread count.
pub fn p_weighted(
    t_obs: f64,
    t_reps: &[f64],
    w_obs: f64,
    w_reps: &[f64],
    variant: WeightVariant,
    dir: Direction,
) -> Result<f64, PValueError> {
    assert_eq!(t_reps.len(), w_reps.len(), "need one weight per replicate");
    let mut num = w_obs;
    for (t, w) in t_reps.iter().zip(w_reps) {
        if beats(t_obs, *t, dir) {
            num += w;
        }
    }
    match variant {
        WeightVariant::FixedDenominator => {
            Ok((num / (1 + t_reps.len()) as f64).clamp(0.0, 1.0))
        }
        WeightVariant::SelfNormalized => {
            let mut den = w_obs;
            for w in w_reps {
                den += w;
            }
            if den == 0.0 {
                return Err(PValueError::DegenerateWeights);
            }
            Ok((num / den).clamp(0.0, 1.0))
        }
    }
}

/// Fixed-subset permutation estimator: plain fraction `#{j : beats} / N`,
/// no +1 correction. Sound only because the freezer anchors the comparison at
/// the randomly transformed data and requires the identity in the subset, so
/// one replicate always ties and `p >= 1/N`. Zero is reachable only through
/// caller-supplied statistics that violate that setup.
pub fn p_fixed_subset(t_obs: f64, t_reps: &[f64], dir: Direction) -> Result<f64, PValueError> {
    if t_reps.is_empty() {
        return Err(PValueError::EmptySubset);
    }
    let hits = t_reps.iter().filter(|&&t| beats(t_obs, t, dir)).count();
    Ok(hits as f64 / t_reps.len() as f64)
}

/// Weighted-assignment estimator for randomization tests with known,
/// strictly positive selection probabilities. The observed assignment is the
/// `j = 0` term in both sums and always ties itself, so
/// `p >= prob_obs / total > 0`.
pub fn p_weighted_assignments(
    t_obs: f64,
    t_reps: &[f64],
    probs: &[f64],
    prob_obs: f64,
    dir: Direction,
) -> Result<f64, PValueError> {
    assert_eq!(t_reps.len(), probs.len(), "need one probability per replicate");
    if !(prob_obs > 0.0 && prob_obs.is_finite())
        || probs.iter().any(|&p| !(p > 0.0 && p.is_finite()))
    {
        return Err(PValueError::NonpositiveProbability);
    }
    let mut num = prob_obs;
    let mut den = prob_obs;
    for (t, p) in t_reps.iter().zip(probs) {
        den += p;
        if beats(t_obs, *t, dir) {
            num += p;
        }
    }
    Ok((num / den).clamp(0.0, 1.0))
}

/// A deterministic map from the hypothesized parameter to a P-value, with its
/// declared shape and its smallest attainable value (the floor determines
/// which confidence levels are reachable at all).
#[derive(Clone)]
pub struct PValueFn {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    shape: Shape,
    floor: f64,
}

impl PValueFn {
    pub fn new(shape: Shape, floor: f64, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        PValueFn {
            eval: Arc::new(eval),
            shape,
            floor,
        }
    }

    pub fn evaluate(&self, eta: f64) -> f64 {
        (self.eval)(eta)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Smallest value the function can attain over all inputs. `1/(1+N)` for
    /// plus-one estimators; 1 when there are no replicates at all.
    pub fn floor(&self) -> f64 {
        self.floor
    }
}

impl fmt::Debug for PValueFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PValueFn")
            .field("shape", &self.shape)
            .field("floor", &self.floor)
            .finish()
    }
}

/// Bonferroni combination of two one-sided P-value functions evaluated on
/// the same frozen draws: `eta -> min(1, 2 min(p_up, p_lo))`. Conservative
/// under arbitrary dependence, and quasiconcave when the inputs are monotone
/// in opposite directions.
pub fn two_sided(p_up: PValueFn, p_lo: PValueFn) -> Result<PValueFn, PValueError> {
    if p_up.shape() != Shape::Nondecreasing || p_lo.shape() != Shape::Nonincreasing {
        return Err(PValueError::ShapeMismatch {
            up: p_up.shape(),
            lo: p_lo.shape(),
        });
    }
    let floor = (2.0 * p_up.floor().min(p_lo.floor())).min(1.0);
    Ok(PValueFn::new(Shape::Quasiconcave, floor, move |eta| {
        (2.0 * p_up.evaluate(eta).min(p_lo.evaluate(eta))).min(1.0)
    }))
}
