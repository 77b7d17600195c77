//! Shift models: one-sample symmetric location and two-sample constant
//! treatment effect, with O(1)-per-replicate statistic evaluation.
//!
//! Testing `theta = eta` transforms the data, recomputes every replicate
//! statistic, and compares. For the statistics used here that recomputation
//! collapses to two stored numbers per replicate:
//!
//! * one-sample, `T = sum of signed differences from eta`: a sign vector's
//!   statistic is `t0 - eta * adj` with `t0 = Σ σ_j x_j`, `adj = Σ σ_j`;
//!   the observed data is the all-plus vector, `adj = n`.
//! * two-sample, `T = difference in group means`: a re-assignment moving
//!   `Δ` originally-treated units to control has statistic
//!   `t0 + eta * adj` with `adj = Δ(1/m + 1/(n-m)) >= 0`; the observed
//!   assignment has `Δ = 0`, so its statistic never depends on `eta`.
//!
//! Because the `eta` coefficients have fixed sign (`n - Σσ_j >= 0`, `Δ >= 0`),
//! every replicate's upper-tail indicator is nondecreasing in `eta`, which
//! makes the one-sided P-value functions monotone — the property the interval
//! search relies on.

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::pvalues::{
    p_fixed_subset, p_plus_one, p_weighted, p_weighted_assignments, Direction, DrawWeights,
    FrozenDraws, PValueFn, Scheme, Shape, Tail, WeightVariant,
};
use crate::rng::{SeededGenerator, SignVector};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("one-sample data needs at least one value")]
    EmptyData,
    #[error("data values must be finite")]
    NonfiniteData,
    #[error("two-sample data needs 0 < m < n, got m={m}, n={n}")]
    DegenerateGroups { n: usize, m: usize },
    #[error("estimator {estimator:?} cannot be applied to draws with scheme {scheme:?}")]
    IncompatibleEstimator { estimator: Estimator, scheme: Scheme },
    #[error("draws carry no weights, required by estimator {estimator:?}")]
    MissingWeights { estimator: Estimator },
    #[error("weights are degenerate for estimator {estimator:?} (zero or nonpositive where positive mass is required)")]
    DegenerateWeights { estimator: Estimator },
    #[error("the Studentized statistic is only defined for the two-sample model")]
    UnsupportedStatistic,
    #[error("Studentized evaluation needs draws frozen with kept assignments")]
    MissingAssignments,
    #[error("fixed-subset draws require the identity rearrangement in the subset")]
    MissingIdentity,
    #[error("subset sign vectors must have length {n} with entries ±1")]
    BadSubsetElement { n: usize },
}

/// Which shift model a dataset belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    OneSample,
    TwoSample,
}

/// IID sample from a distribution symmetric about the unknown shift.
#[derive(Debug, Clone)]
pub struct OneSampleData {
    x: Vec<f64>,
}

impl OneSampleData {
    pub fn new(x: Vec<f64>) -> Result<Self, ModelError> {
        if x.is_empty() {
            return Err(ModelError::EmptyData);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonfiniteData);
        }
        Ok(OneSampleData { x })
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        false // guaranteed nonempty by construction
    }

    pub fn mean(&self) -> f64 {
        self.x.iter().sum::<f64>() / self.x.len() as f64
    }

    /// Summary of the observed data: the identity sign vector.
    pub fn observed_summary(&self) -> ReplicateSummary {
        ReplicateSummary {
            t0: self.x.iter().sum(),
            adj: self.x.len() as f64,
        }
    }
}

/// Responses in canonical order: the first `m` units are the treated group.
#[derive(Debug, Clone)]
pub struct TwoSampleData {
    w: Vec<f64>,
    m: usize,
}

impl TwoSampleData {
    pub fn new(w: Vec<f64>, m: usize) -> Result<Self, ModelError> {
        let n = w.len();
        if m == 0 || m >= n {
            return Err(ModelError::DegenerateGroups { n, m });
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonfiniteData);
        }
        Ok(TwoSampleData { w, m })
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn diff_means(&self) -> f64 {
        let st: f64 = self.w[..self.m].iter().sum();
        let sc: f64 = self.w[self.m..].iter().sum();
        st / self.m as f64 - sc / (self.n() - self.m) as f64
    }

    /// Summary of the observed assignment: zero swaps, statistic constant in eta.
    pub fn observed_summary(&self) -> ReplicateSummary {
        ReplicateSummary {
            t0: self.diff_means(),
            adj: 0.0,
        }
    }
}

/// Either model's dataset, for interfaces that work with both.
#[derive(Debug, Clone)]
pub enum Data {
    One(OneSampleData),
    Two(TwoSampleData),
}

impl Data {
    pub fn model(&self) -> Model {
        match self {
            Data::One(_) => Model::OneSample,
            Data::Two(_) => Model::TwoSample,
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            Data::One(d) => d.values(),
            Data::Two(d) => d.values(),
        }
    }
}

/// Everything a replicate rearrangement contributes to the statistic at any
/// hypothesized shift: its statistic at zero and its eta coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateSummary {
    pub t0: f64,
    pub adj: f64,
}

/// Replicate statistic at `eta` for the one-sample model.
pub fn one_sample_stat(summary: &ReplicateSummary, eta: f64) -> f64 {
    summary.t0 - eta * summary.adj
}

/// Replicate statistic at `eta` for the two-sample model.
pub fn two_sample_stat(summary: &ReplicateSummary, eta: f64) -> f64 {
    summary.t0 + eta * summary.adj
}

fn stat_at(model: Model, summary: &ReplicateSummary, eta: f64) -> f64 {
    match model {
        Model::OneSample => one_sample_stat(summary, eta),
        Model::TwoSample => two_sample_stat(summary, eta),
    }
}

pub(crate) fn summary_from_signs(x: &[f64], sigma: &[i8]) -> ReplicateSummary {
    let mut t0 = 0.0;
    let mut adj = 0.0;
    for (xi, s) in x.iter().zip(sigma) {
        t0 += f64::from(*s) * xi;
        adj += f64::from(*s);
    }
    ReplicateSummary { t0, adj }
}

pub(crate) fn summary_from_labels(w: &[f64], m: usize, labels: &[u8]) -> ReplicateSummary {
    let n = w.len();
    let mut sum_t = 0.0;
    let mut sum_c = 0.0;
    let mut kept = 0usize;
    for i in 0..n {
        if labels[i] == 1 {
            sum_t += w[i];
            if i < m {
                kept += 1;
            }
        } else {
            sum_c += w[i];
        }
    }
    let delta = (m - kept) as f64;
    ReplicateSummary {
        t0: sum_t / m as f64 - sum_c / (n - m) as f64,
        adj: delta * (1.0 / m as f64 + 1.0 / (n - m) as f64),
    }
}

/// Freeze N random sign vectors for the one-sample model. Replicate `j` draws
/// from substream `j`, so results are identical however the loop is scheduled.
pub fn one_sample_freeze(
    data: &OneSampleData,
    n_replicates: usize,
    gen: &SeededGenerator,
) -> FrozenDraws {
    let x = data.values();
    let replicates: Vec<ReplicateSummary> = (0..n_replicates)
        .into_par_iter()
        .map(|j| {
            let sigma = gen.substream(j as u64).random_signs(x.len());
            summary_from_signs(x, &sigma.0)
        })
        .collect();
    FrozenDraws::new(
        data.observed_summary(),
        replicates,
        gen.seed(),
        Scheme::PermutationSample,
        None,
    )
}

/// Freeze N random re-assignments for the two-sample model (uniform design,
/// sampled with replacement across replicates).
pub fn two_sample_freeze(
    data: &TwoSampleData,
    n_replicates: usize,
    gen: &SeededGenerator,
) -> FrozenDraws {
    freeze_two_sample(data, n_replicates, gen, false)
}

/// Like [`two_sample_freeze`], additionally keeping each raw assignment so
/// statistics without an O(1) update rule (Studentized) can recompute.
pub fn two_sample_freeze_with_assignments(
    data: &TwoSampleData,
    n_replicates: usize,
    gen: &SeededGenerator,
) -> FrozenDraws {
    freeze_two_sample(data, n_replicates, gen, true)
}

fn freeze_two_sample(
    data: &TwoSampleData,
    n_replicates: usize,
    gen: &SeededGenerator,
    keep_masks: bool,
) -> FrozenDraws {
    let (w, m, n) = (data.values(), data.m(), data.n());
    let drawn: Vec<(ReplicateSummary, Vec<u8>)> = (0..n_replicates)
        .into_par_iter()
        .map(|j| {
            let a = gen
                .substream(j as u64)
                .random_assignment(n, m)
                .expect("sizes validated at construction");
            let summary = summary_from_labels(w, m, &a.labels);
            (summary, if keep_masks { a.labels } else { Vec::new() })
        })
        .collect();
    let (replicates, masks): (Vec<_>, Vec<_>) = drawn.into_iter().unzip();
    // uniform design: selection probabilities are all equal, recorded as
    // relative weight 1 (only ratios matter to the estimator)
    let weights = DrawWeights {
        observed: 1.0,
        replicates: vec![1.0; n_replicates],
    };
    let draws = FrozenDraws::new(
        data.observed_summary(),
        replicates,
        gen.seed(),
        Scheme::RandomizationSample,
        Some(weights),
    );
    if keep_masks {
        draws.with_masks(masks)
    } else {
        draws
    }
}

/// Freeze a caller-fixed subset of sign rearrangements. One random anchor
/// flip is drawn; the comparison target is the anchored data and replicate
/// `j` applies `subset[j]` on top of the anchor. The subset must contain the
/// identity so the observed configuration competes and `p >= 1/N`.
pub fn one_sample_freeze_fixed_subset(
    data: &OneSampleData,
    subset: &[Vec<i8>],
    gen: &SeededGenerator,
) -> Result<FrozenDraws, ModelError> {
    let x = data.values();
    let n = x.len();
    for s in subset {
        if s.len() != n || s.iter().any(|&v| v != 1 && v != -1) {
            return Err(ModelError::BadSubsetElement { n });
        }
    }
    if !subset.iter().any(|s| s.iter().all(|&v| v == 1)) {
        return Err(ModelError::MissingIdentity);
    }
    let anchor: SignVector = gen.substream(0).random_signs(n);
    let observed = summary_from_signs(x, &anchor.0);
    let replicates = subset
        .iter()
        .map(|s| {
            let composite: Vec<i8> = s.iter().zip(&anchor.0).map(|(a, b)| a * b).collect();
            summary_from_signs(x, &composite)
        })
        .collect();
    Ok(FrozenDraws::new(
        observed,
        replicates,
        gen.seed(),
        Scheme::PermutationFixedSubset,
        None,
    ))
}

/// Which conservative P-value estimator to apply to the frozen statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    PlusOne,
    WeightedFixedDenominator,
    WeightedSelfNormalized,
    FixedSubset,
    WeightedAssignments,
}

fn check_compatible(estimator: Estimator, draws: &FrozenDraws) -> Result<(), ModelError> {
    let scheme = draws.scheme();
    let ok = match estimator {
        Estimator::PlusOne => matches!(
            scheme,
            Scheme::Simulation | Scheme::PermutationSample | Scheme::RandomizationSample
        ),
        Estimator::WeightedFixedDenominator | Estimator::WeightedSelfNormalized => {
            scheme == Scheme::Simulation
        }
        Estimator::FixedSubset => scheme == Scheme::PermutationFixedSubset,
        Estimator::WeightedAssignments => scheme == Scheme::RandomizationSample,
    };
    if !ok {
        return Err(ModelError::IncompatibleEstimator { estimator, scheme });
    }
    match estimator {
        Estimator::WeightedFixedDenominator
        | Estimator::WeightedSelfNormalized
        | Estimator::WeightedAssignments => {
            let w = draws
                .weights()
                .ok_or(ModelError::MissingWeights { estimator })?;
            let total = w.observed + w.replicates.iter().sum::<f64>();
            let degenerate = match estimator {
                Estimator::WeightedSelfNormalized => total == 0.0,
                Estimator::WeightedAssignments => {
                    !(w.observed > 0.0) || w.replicates.iter().any(|&p| !(p > 0.0))
                }
                _ => false,
            };
            if degenerate {
                return Err(ModelError::DegenerateWeights { estimator });
            }
        }
        Estimator::FixedSubset => {
            if draws.is_empty() {
                return Err(ModelError::IncompatibleEstimator { estimator, scheme });
            }
        }
        Estimator::PlusOne => {}
    }
    Ok(())
}

fn estimator_floor(estimator: Estimator, draws: &FrozenDraws) -> f64 {
    let n = draws.len() as f64;
    match estimator {
        Estimator::PlusOne => 1.0 / (n + 1.0),
        Estimator::WeightedFixedDenominator => {
            let w = draws.weights().expect("checked");
            (w.observed / (n + 1.0)).min(1.0)
        }
        Estimator::WeightedSelfNormalized | Estimator::WeightedAssignments => {
            let w = draws.weights().expect("checked");
            let total = w.observed + w.replicates.iter().sum::<f64>();
            (w.observed / total).min(1.0)
        }
        // the identity element always ties the anchored observed statistic
        Estimator::FixedSubset => 1.0 / n,
    }
}

fn apply_estimator(
    estimator: Estimator,
    draws: &FrozenDraws,
    t_obs: f64,
    t: &[f64],
    dir: Direction,
) -> f64 {
    match estimator {
        Estimator::PlusOne => p_plus_one(t_obs, t, dir),
        Estimator::WeightedFixedDenominator | Estimator::WeightedSelfNormalized => {
            let w = draws.weights().expect("checked at construction");
            let variant = if estimator == Estimator::WeightedFixedDenominator {
                WeightVariant::FixedDenominator
            } else {
                WeightVariant::SelfNormalized
            };
            p_weighted(t_obs, t, w.observed, &w.replicates, variant, dir)
                .expect("degenerate weights rejected at construction")
        }
        Estimator::FixedSubset => {
            p_fixed_subset(t_obs, t, dir).expect("empty subset rejected at construction")
        }
        Estimator::WeightedAssignments => {
            let w = draws.weights().expect("checked at construction");
            p_weighted_assignments(t_obs, t, &w.replicates, w.observed, dir)
                .expect("nonpositive probabilities rejected at construction")
        }
    }
}

fn one_sided_fn(
    model: Model,
    draws: Arc<FrozenDraws>,
    dir: Direction,
    estimator: Estimator,
) -> PValueFn {
    let shape = match dir {
        Direction::Upper => Shape::Nondecreasing,
        Direction::Lower => Shape::Nonincreasing,
    };
    let floor = estimator_floor(estimator, &draws);
    PValueFn::new(shape, floor, move |eta| {
        let t_obs = stat_at(model, draws.observed(), eta);
        let t: Vec<f64> = draws
            .replicates()
            .iter()
            .map(|s| stat_at(model, s, eta))
            .collect();
        apply_estimator(estimator, &draws, t_obs, &t, dir)
    })
}

/// |T| route. Statistics are put in the effect-removed parametrization so the
/// comparison is |linear_j(eta)| >= |linear_obs(eta)| with |slope_j| bounded
/// by the observed slope; each replicate's acceptance region is then an
/// interval containing the sample estimate, making the P-value quasiconcave.
fn abs_fn(model: Model, draws: Arc<FrozenDraws>, estimator: Estimator) -> PValueFn {
    let shape = if draws.scheme() == Scheme::PermutationFixedSubset {
        // anchored subsets can have replicate slopes beyond the anchor's
        Shape::Unknown
    } else {
        Shape::Quasiconcave
    };
    let floor = estimator_floor(estimator, &draws);
    let abs_linear = move |s: &ReplicateSummary, eta: f64| -> f64 {
        match model {
            Model::OneSample => (s.t0 - eta * s.adj).abs(),
            Model::TwoSample => (s.t0 + eta * (s.adj - 1.0)).abs(),
        }
    };
    PValueFn::new(shape, floor, move |eta| {
        let t_obs = abs_linear(draws.observed(), eta);
        let t: Vec<f64> = draws
            .replicates()
            .iter()
            .map(|s| abs_linear(s, eta))
            .collect();
        apply_estimator(estimator, &draws, t_obs, &t, Direction::Upper)
    })
}

/// Build the P-value function for a tail over one frozen set of draws. The
/// same draws serve every `eta` and, for two-sided tails, both directions.
pub fn make_pvalue_fn(
    data: &Data,
    draws: &Arc<FrozenDraws>,
    tail: Tail,
    estimator: Estimator,
) -> Result<PValueFn, ModelError> {
    check_compatible(estimator, draws)?;
    let model = data.model();
    match tail {
        Tail::Upper => Ok(one_sided_fn(model, Arc::clone(draws), Direction::Upper, estimator)),
        Tail::Lower => Ok(one_sided_fn(model, Arc::clone(draws), Direction::Lower, estimator)),
        Tail::TwoSidedBonferroni => {
            let up = one_sided_fn(model, Arc::clone(draws), Direction::Upper, estimator);
            let lo = one_sided_fn(model, Arc::clone(draws), Direction::Lower, estimator);
            Ok(crate::pvalues::two_sided(up, lo).expect("one-sided shapes are monotone"))
        }
        Tail::TwoSidedAbs => Ok(abs_fn(model, Arc::clone(draws), estimator)),
    }
}

/// Welch t statistic (unequal variances, sample variances with ddof 1).
/// Zero denominator maps to 0 or ±inf by the numerator's sign so weak-tie
/// comparisons stay well defined.
pub fn welch_t(a: &[f64], b: &[f64]) -> f64 {
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let denom = (va / a.len() as f64 + vb / b.len() as f64).sqrt();
    let num = ma - mb;
    if denom == 0.0 {
        if num == 0.0 {
            return 0.0;
        }
        return num.signum() * f64::INFINITY;
    }
    num / denom
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// P-value function for the two-sample Studentized (Welch) statistic. No
/// O(1) update exists, so every evaluation recomputes from the kept
/// assignments on the effect-removed data. No monotonicity proof is
/// available either: shapes are declared `Unknown` and the interval search
/// reports that it proceeded unverified.
pub fn make_pvalue_fn_studentized(
    data: &Data,
    draws: &Arc<FrozenDraws>,
    tail: Tail,
) -> Result<PValueFn, ModelError> {
    let two = match data {
        Data::Two(d) => d,
        Data::One(_) => return Err(ModelError::UnsupportedStatistic),
    };
    if draws.masks().is_none() {
        return Err(ModelError::MissingAssignments);
    }
    let (w, m, n) = (two.values().to_vec(), two.m(), two.n());
    let t_obs = welch_t(&w[..m], &w[m..]); // constant in eta
    let floor = 1.0 / (draws.len() as f64 + 1.0);

    let stats_at = {
        let draws = Arc::clone(draws);
        let w = w.clone();
        move |eta: f64| -> Vec<f64> {
            // z is the effect-removed sample; a replicate's treated group is
            // {z_i + eta}, whose mean shifts by eta and variance is unchanged
            let z: Vec<f64> = w
                .iter()
                .enumerate()
                .map(|(i, &v)| if i < m { v - eta } else { v })
                .collect();
            draws
                .masks()
                .expect("checked above")
                .iter()
                .map(|mask| {
                    let mut t_vals = Vec::with_capacity(m);
                    let mut c_vals = Vec::with_capacity(n - m);
                    for (zi, &lab) in z.iter().zip(mask) {
                        if lab == 1 {
                            t_vals.push(*zi);
                        } else {
                            c_vals.push(*zi);
                        }
                    }
                    let (mt, vt) = mean_var(&t_vals);
                    let (mc, vc) = mean_var(&c_vals);
                    let denom = (vt / m as f64 + vc / (n - m) as f64).sqrt();
                    let num = mt + eta - mc;
                    if denom == 0.0 {
                        if num == 0.0 {
                            0.0
                        } else {
                            num.signum() * f64::INFINITY
                        }
                    } else {
                        num / denom
                    }
                })
                .collect()
        }
    };

    let build_one_sided = |dir: Direction| {
        let stats_at = stats_at.clone();
        PValueFn::new(Shape::Unknown, floor, move |eta| {
            p_plus_one(t_obs, &stats_at(eta), dir)
        })
    };

    match tail {
        Tail::Upper => Ok(build_one_sided(Direction::Upper)),
        Tail::Lower => Ok(build_one_sided(Direction::Lower)),
        Tail::TwoSidedBonferroni => {
            let up = build_one_sided(Direction::Upper);
            let lo = build_one_sided(Direction::Lower);
            Ok(PValueFn::new(Shape::Unknown, (2.0 * floor).min(1.0), move |eta| {
                (2.0 * up.evaluate(eta).min(lo.evaluate(eta))).min(1.0)
            }))
        }
        Tail::TwoSidedAbs => Ok(PValueFn::new(Shape::Unknown, floor, move |eta| {
            let t = stats_at(eta);
            let abs: Vec<f64> = t.iter().map(|v| v.abs()).collect();
            p_plus_one(t_obs.abs(), &abs, Direction::Upper)
        })),
    }
}

/// A parametric family of bijections indexed by the shift: testing
/// `theta = eta` applies the inverse map and tests zero on the result.
#[derive(Clone, Copy)]
pub struct ShiftFamily {
    pub forward: fn(f64, f64) -> f64,
    pub inverse: fn(f64, f64) -> f64,
}

/// The location family `x -> x + eta`.
pub fn location_family() -> ShiftFamily {
    ShiftFamily {
        forward: |x, eta| x + eta,
        inverse: |x, eta| x - eta,
    }
}

/// Apply the family's inverse componentwise: the transformed data is what a
/// test of zero sees when the hypothesis is `theta = eta`.
pub fn shift_transform(family: &ShiftFamily, data: &[f64], eta: f64) -> Vec<f64> {
    data.iter().map(|&x| (family.inverse)(x, eta)).collect()
}

/// Default initial trial value for the interval search: the point estimate.
pub fn default_eta0(data: &Data) -> f64 {
    match data {
        Data::One(d) => d.mean(),
        Data::Two(d) => d.diff_means(),
    }
}

/// Default initial step: the data range, falling back to 1 when degenerate.
pub fn default_delta0(data: &Data) -> f64 {
    let values = data.values();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let range = hi - lo;
    if range > 0.0 {
        range
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub const DARWIN: [f64; 15] = [
        49.0, -67.0, 8.0, 6.0, 16.0, 23.0, 28.0, 41.0, 14.0, 29.0, 56.0, 24.0, 75.0, 60.0, -48.0,
    ];

    const FIG1_W: [f64; 10] = [5.0, 6.0, 7.0, 8.0, 9.0, 0.0, 1.0, 2.0, 3.0, 4.0];

    fn fig1() -> TwoSampleData {
        TwoSampleData::new(FIG1_W.to_vec(), 5).unwrap()
    }

    /// Direct recomputation of the one-sample statistic: flip signs of the
    /// centered data, re-add the shift, sum the differences from the shift.
    fn brute_one_sample(x: &[f64], sigma: &[i8], eta: f64) -> f64 {
        x.iter()
            .zip(sigma)
            .map(|(xi, &s)| f64::from(s) * (xi - eta))
            .sum()
    }

    /// Direct recomputation of the two-sample statistic: re-treated control
    /// units gain the shift, re-controlled treated units lose it.
    fn brute_two_sample(w: &[f64], m: usize, labels: &[u8], eta: f64) -> f64 {
        let n = w.len();
        let mut st = 0.0;
        let mut sc = 0.0;
        for i in 0..n {
            let originally_treated = i < m;
            if labels[i] == 1 {
                st += w[i] + if originally_treated { 0.0 } else { eta };
            } else {
                sc += w[i] - if originally_treated { eta } else { 0.0 };
            }
        }
        st / m as f64 - sc / (n - m) as f64
    }

    #[test]
    fn one_sample_stat_matches_hand_example() {
        // x=(1,2,3), signs (+,-,+): t0 = 1-2+3 = 2, adj = 1
        let s = summary_from_signs(&[1.0, 2.0, 3.0], &[1, -1, 1]);
        assert_eq!(s, ReplicateSummary { t0: 2.0, adj: 1.0 });
        assert_eq!(one_sample_stat(&s, 0.0), 2.0);
        assert_eq!(one_sample_stat(&s, 5.0), -3.0);
        assert_eq!(brute_one_sample(&[1.0, 2.0, 3.0], &[1, -1, 1], 5.0), -3.0);
    }

    #[test]
    fn identity_signs_tie_the_observed_statistic_everywhere() {
        let data = OneSampleData::new(DARWIN.to_vec()).unwrap();
        let id = summary_from_signs(data.values(), &[1; 15]);
        let obs = data.observed_summary();
        assert_eq!(id, obs);
        for eta in [-10.0, 0.0, 3.5, 100.0] {
            assert_eq!(one_sample_stat(&id, eta), one_sample_stat(&obs, eta));
        }
    }

    #[test]
    fn darwin_observed_sum_is_314() {
        let data = OneSampleData::new(DARWIN.to_vec()).unwrap();
        assert_eq!(data.observed_summary().t0, 314.0);
        assert_eq!(data.observed_summary().adj, 15.0);
    }

    #[test]
    fn two_sample_original_assignment_summary() {
        let data = fig1();
        let labels = [1u8, 1, 1, 1, 1, 0, 0, 0, 0, 0];
        let s = summary_from_labels(data.values(), 5, &labels);
        assert_eq!(s.t0, 5.0);
        assert_eq!(s.adj, 0.0);
        assert_eq!(data.observed_summary().t0, 5.0);
    }

    #[test]
    fn two_sample_swap_example_both_routes_agree() {
        // swap the units holding values 5 and 0: one treated unit moved out
        let data = fig1();
        let labels = [0u8, 1, 1, 1, 1, 1, 0, 0, 0, 0];
        let s = summary_from_labels(data.values(), 5, &labels);
        assert_eq!(s.t0, 3.0);
        assert_eq!(s.adj, 0.4);
        let shortcut = two_sample_stat(&s, 1.0);
        let brute = brute_two_sample(data.values(), 5, &labels, 1.0);
        assert!((shortcut - 3.4).abs() < 1e-12);
        assert!((brute - 3.4).abs() < 1e-12);
        assert!((shortcut - brute).abs() < 1e-12);
    }

    #[test]
    fn observed_two_sample_statistic_ignores_eta() {
        let data = fig1();
        let obs = data.observed_summary();
        for eta in [-100.0, -1.0, 0.0, 2.5, 1e6] {
            assert_eq!(two_sample_stat(&obs, eta), 5.0);
        }
    }

    #[test]
    fn freeze_is_deterministic_and_matches_direct_recomputation() {
        let data = OneSampleData::new(DARWIN.to_vec()).unwrap();
        let gen = SeededGenerator::new(b"freeze-test");
        let a = one_sample_freeze(&data, 50, &gen);
        let b = one_sample_freeze(&data, 50, &gen);
        assert_eq!(a.replicates(), b.replicates());
        for (j, s) in a.replicates().iter().enumerate() {
            let sigma = gen.substream(j as u64).random_signs(15);
            let direct = summary_from_signs(data.values(), &sigma.0);
            assert_eq!(*s, direct);
        }
    }

    #[test]
    fn two_sample_freeze_summaries_match_masks() {
        let data = fig1();
        let gen = SeededGenerator::new(b"freeze-two");
        let draws = two_sample_freeze_with_assignments(&data, 40, &gen);
        let masks = draws.masks().unwrap();
        for (s, mask) in draws.replicates().iter().zip(masks) {
            assert_eq!(*s, summary_from_labels(data.values(), 5, mask));
            for eta in [-2.0, 0.0, 1.5] {
                let brute = brute_two_sample(data.values(), 5, mask, eta);
                assert!((two_sample_stat(s, eta) - brute).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn empty_draws_give_unit_pvalue_everywhere() {
        let data = Data::One(OneSampleData::new(DARWIN.to_vec()).unwrap());
        let gen = SeededGenerator::new(b"n0");
        let draws = Arc::new(one_sample_freeze(
            match &data {
                Data::One(d) => d,
                _ => unreachable!(),
            },
            0,
            &gen,
        ));
        for tail in [Tail::Upper, Tail::Lower, Tail::TwoSidedBonferroni, Tail::TwoSidedAbs] {
            let p = make_pvalue_fn(&data, &draws, tail, Estimator::PlusOne).unwrap();
            assert_eq!(p.floor(), 1.0);
            for eta in [-50.0, 0.0, 21.0] {
                assert_eq!(p.evaluate(eta), 1.0);
            }
        }
    }

    #[test]
    fn upper_tail_pvalue_is_nondecreasing_on_a_grid() {
        // two-sample on the maximally separated groups
        let data = Data::Two(fig1());
        let gen = SeededGenerator::new(b"grid-two");
        let draws = Arc::new(two_sample_freeze(fig1_ref(&data), 300, &gen));
        let p = make_pvalue_fn(&data, &draws, Tail::Upper, Estimator::PlusOne).unwrap();
        assert!(p.evaluate(-10.0) <= p.evaluate(0.0));
        assert!(p.evaluate(0.0) <= p.evaluate(10.0));
        let mut last = 0.0;
        for i in 0..=80 {
            let eta = -12.0 + i as f64 * 0.3;
            let v = p.evaluate(eta);
            assert!(v >= last, "p({eta}) = {v} dropped below {last}");
            last = v;
        }

        let darwin = Data::One(OneSampleData::new(DARWIN.to_vec()).unwrap());
        let gen = SeededGenerator::new(b"grid-one");
        let draws = Arc::new(one_sample_freeze(
            match &darwin {
                Data::One(d) => d,
                _ => unreachable!(),
            },
            300,
            &gen,
        ));
        let p = make_pvalue_fn(&darwin, &draws, Tail::Upper, Estimator::PlusOne).unwrap();
        let mut last = 0.0;
        for eta in (-100..=100).map(|k| k as f64) {
            let v = p.evaluate(eta);
            assert!(v >= last);
            last = v;
        }
    }

    fn fig1_ref(data: &Data) -> &TwoSampleData {
        match data {
            Data::Two(d) => d,
            _ => unreachable!(),
        }
    }

    #[test]
    fn estimator_scheme_compatibility_is_enforced() {
        let data = Data::Two(fig1());
        let gen = SeededGenerator::new(b"compat");
        let draws = Arc::new(two_sample_freeze(fig1_ref(&data), 10, &gen));
        assert!(make_pvalue_fn(&data, &draws, Tail::Upper, Estimator::FixedSubset).is_err());
        assert!(make_pvalue_fn(&data, &draws, Tail::Upper, Estimator::WeightedSelfNormalized).is_err());
        assert!(make_pvalue_fn(&data, &draws, Tail::Upper, Estimator::WeightedAssignments).is_ok());
        assert!(make_pvalue_fn(&data, &draws, Tail::Upper, Estimator::PlusOne).is_ok());
    }

    #[test]
    fn weighted_assignments_match_plus_one_under_uniform_design() {
        let data = Data::Two(fig1());
        let gen = SeededGenerator::new(b"uniform-design");
        let draws = Arc::new(two_sample_freeze(fig1_ref(&data), 101, &gen));
        let a = make_pvalue_fn(&data, &draws, Tail::TwoSidedBonferroni, Estimator::PlusOne).unwrap();
        let b = make_pvalue_fn(&data, &draws, Tail::TwoSidedBonferroni, Estimator::WeightedAssignments)
            .unwrap();
        for eta in [-4.0, 0.0, 3.0, 5.0, 8.5] {
            assert_eq!(a.evaluate(eta).to_bits(), b.evaluate(eta).to_bits());
        }
    }

    #[test]
    fn fixed_subset_identity_only_gives_unit_pvalue() {
        let data = OneSampleData::new(vec![3.0, -1.0, 4.0]).unwrap();
        let gen = SeededGenerator::new(b"subset-id");
        let draws = Arc::new(
            one_sample_freeze_fixed_subset(&data, &[vec![1, 1, 1]], &gen).unwrap(),
        );
        let p = make_pvalue_fn(
            &Data::One(data),
            &draws,
            Tail::Upper,
            Estimator::FixedSubset,
        )
        .unwrap();
        for eta in [-3.0, 0.0, 2.0] {
            assert_eq!(p.evaluate(eta), 1.0);
        }
    }

    #[test]
    fn fixed_subset_requires_identity_and_valid_elements() {
        let data = OneSampleData::new(vec![1.0, 2.0]).unwrap();
        let gen = SeededGenerator::new(b"subset-bad");
        assert_eq!(
            one_sample_freeze_fixed_subset(&data, &[vec![-1, 1]], &gen).unwrap_err(),
            ModelError::MissingIdentity
        );
        assert_eq!(
            one_sample_freeze_fixed_subset(&data, &[vec![1, 1, 1]], &gen).unwrap_err(),
            ModelError::BadSubsetElement { n: 2 }
        );
    }

    #[test]
    fn fixed_subset_pvalue_respects_its_floor() {
        let data = OneSampleData::new(vec![1.5, -2.0, 0.5, 3.0]).unwrap();
        let subset: Vec<Vec<i8>> = vec![
            vec![1, 1, 1, 1],
            vec![-1, 1, 1, 1],
            vec![1, -1, 1, 1],
            vec![-1, -1, 1, 1],
        ];
        let gen = SeededGenerator::new(b"subset-floor");
        let draws = Arc::new(one_sample_freeze_fixed_subset(&data, &subset, &gen).unwrap());
        let p = make_pvalue_fn(
            &Data::One(data),
            &draws,
            Tail::Upper,
            Estimator::FixedSubset,
        )
        .unwrap();
        for eta in [-6.0, -1.0, 0.0, 0.75, 4.0] {
            let v = p.evaluate(eta);
            assert!(v >= 0.25 && v <= 1.0, "p({eta}) = {v} outside [1/N, 1]");
        }
    }

    #[test]
    fn studentized_runs_for_two_sample_only() {
        let one = Data::One(OneSampleData::new(vec![1.0, 2.0]).unwrap());
        let two = Data::Two(fig1());
        let gen = SeededGenerator::new(b"studentized");
        let draws = Arc::new(two_sample_freeze_with_assignments(fig1_ref(&two), 60, &gen));
        assert_eq!(
            make_pvalue_fn_studentized(&one, &draws, Tail::Upper).unwrap_err(),
            ModelError::UnsupportedStatistic
        );
        let plain = Arc::new(two_sample_freeze(fig1_ref(&two), 60, &gen));
        assert_eq!(
            make_pvalue_fn_studentized(&two, &plain, Tail::Upper).unwrap_err(),
            ModelError::MissingAssignments
        );
        let p = make_pvalue_fn_studentized(&two, &draws, Tail::TwoSidedBonferroni).unwrap();
        assert_eq!(p.shape(), Shape::Unknown);
        for eta in [-2.0, 0.0, 5.0, 9.0] {
            let v = p.evaluate(eta);
            assert!((0.0..=1.0).contains(&v));
            // purity
            assert_eq!(v.to_bits(), p.evaluate(eta).to_bits());
        }
    }

    #[test]
    fn welch_t_matches_hand_computation() {
        // a = (1,2,3): mean 2, var 1; b = (0,0): mean 0, var 0
        let t = welch_t(&[1.0, 2.0, 3.0], &[0.0, 0.0]);
        assert!((t - 2.0 / (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(welch_t(&[1.0, 1.0], &[1.0, 1.0]), 0.0);
        assert_eq!(welch_t(&[2.0, 2.0], &[1.0, 1.0]), f64::INFINITY);
    }

    #[test]
    fn shift_transform_examples() {
        let family = location_family();
        assert_eq!(shift_transform(&family, &[1.0, 2.0], 0.0), vec![1.0, 2.0]);
        assert_eq!(shift_transform(&family, &[1.0, 2.0], 3.0), vec![-2.0, -1.0]);
    }

    #[test]
    fn default_search_values() {
        let one = Data::One(OneSampleData::new(DARWIN.to_vec()).unwrap());
        assert!((default_eta0(&one) - 314.0 / 15.0).abs() < 1e-12);
        assert_eq!(default_delta0(&one), 75.0 - (-67.0));
        let flat = Data::One(OneSampleData::new(vec![2.0, 2.0, 2.0]).unwrap());
        assert_eq!(default_delta0(&flat), 1.0);
        let two = Data::Two(fig1());
        assert_eq!(default_eta0(&two), 5.0);
        assert_eq!(default_delta0(&two), 9.0);
    }

    proptest! {
        #[test]
        fn one_sample_coefficients_bounded_with_parity(
            seed in any::<u64>(),
            x in prop::collection::vec(-100.0f64..100.0, 1..20),
        ) {
            let n = x.len();
            let mut g = SeededGenerator::new(&seed.to_be_bytes());
            let sigma = g.random_signs(n);
            let s = summary_from_signs(&x, &sigma.0);
            prop_assert!(s.adj.abs() <= n as f64);
            // n - sum(sigma) is always even
            prop_assert_eq!(((n as f64 - s.adj) as i64) % 2, 0);
        }

        #[test]
        fn two_sample_coefficient_nonnegative_and_bounded(
            seed in any::<u64>(),
            n in 3usize..20,
            mfrac in 0.0f64..1.0,
            base in -50.0f64..50.0,
        ) {
            let m = 1 + ((n - 2) as f64 * mfrac) as usize;
            let w: Vec<f64> = (0..n).map(|i| base + i as f64).collect();
            let mut g = SeededGenerator::new(&seed.to_be_bytes());
            let a = g.random_assignment(n, m).unwrap();
            let s = summary_from_labels(&w, m, &a.labels);
            let cap = m.min(n - m) as f64 * (1.0 / m as f64 + 1.0 / (n - m) as f64);
            prop_assert!(s.adj >= 0.0);
            prop_assert!(s.adj <= cap + 1e-12);
        }

        #[test]
        fn shortcut_matches_brute_force_one_sample(
            seed in any::<u64>(),
            x in prop::collection::vec(-100.0f64..100.0, 1..15),
            eta in -200.0f64..200.0,
        ) {
            let mut g = SeededGenerator::new(&seed.to_be_bytes());
            let sigma = g.random_signs(x.len());
            let s = summary_from_signs(&x, &sigma.0);
            let scale: f64 = x.iter().map(|v| v.abs()).sum::<f64>() + eta.abs() * x.len() as f64;
            let tol = 8.0 * f64::EPSILON * scale.max(1.0);
            prop_assert!((one_sample_stat(&s, eta) - brute_one_sample(&x, &sigma.0, eta)).abs() <= tol);
        }

        #[test]
        fn shortcut_matches_brute_force_two_sample(
            seed in any::<u64>(),
            n in 4usize..16,
            mfrac in 0.0f64..1.0,
            eta in -50.0f64..50.0,
        ) {
            let m = 1 + ((n - 2) as f64 * mfrac) as usize;
            let mut g = SeededGenerator::new(&seed.to_be_bytes());
            let w: Vec<f64> = (0..n).map(|_| g.uniform_f64() * 40.0 - 20.0).collect();
            let a = g.random_assignment(n, m).unwrap();
            let s = summary_from_labels(&w, m, &a.labels);
            let scale: f64 = w.iter().map(|v| v.abs()).sum::<f64>() + eta.abs() * n as f64;
            let tol = 8.0 * f64::EPSILON * scale.max(1.0);
            prop_assert!((two_sample_stat(&s, eta) - brute_two_sample(&w, m, &a.labels, eta)).abs() <= tol);
        }

        #[test]
        fn location_round_trip_is_tight(x in -1e6f64..1e6, eta in -1e6f64..1e6) {
            let family = location_family();
            let back = (family.inverse)((family.forward)(x, eta), eta);
            let scale = x.abs().max(eta.abs()).max(1.0);
            prop_assert!((back - x).abs() <= scale / (1u64 << 40) as f64);
        }
    }
}
