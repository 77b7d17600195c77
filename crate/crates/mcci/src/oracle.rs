//! Exact references: full-group enumeration and breakpoint scans.
//!
//! For data small enough to enumerate every sign flip (one-sample) or every
//! treatment assignment (two-sample), the test inversion has a closed form.
//! Each group element's acceptance condition is linear in the hypothesized
//! shift, so it contributes one breakpoint (monotone tails) or one acceptance
//! interval (absolute-statistic tail), and the P-value at any shift is a
//! prefix sum over sorted breakpoints. Confidence endpoints are then exact
//! breakpoint values — no bisection, no resolution parameter.
//!
//! The same machinery applied to one frozen set of Monte Carlo replicates
//! (with the plus-one mass for the observed data) yields the exact inversion
//! of the estimated P-value function, which the bisection search must agree
//! with up to its resolution `e`. That cross-check is the main correctness
//! instrument for the search code.
//!
//! Numerics: masses are handled as integer counts whenever the design is
//! uniform, so threshold comparisons reduce to single f64 divisions — the
//! same arithmetic the plus-one estimator performs. Elements whose statistic
//! ties the observed one at every shift (the identity, and for replicate
//! scans the observed datum itself) are kept in a separate always-counted
//! bucket rather than given a breakpoint.

use thiserror::Error;

use crate::invert::{Convention, Side};
use crate::pvalues::{FrozenDraws, Scheme, Tail};
use crate::shift::Data;

/// Largest group that will be enumerated.
pub const MAX_GROUP_SIZE: u128 = 1 << 25;
/// Largest replicate count a breakpoint scan will accept.
pub const MAX_SCAN_REPLICATES: usize = 1 << 20;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("group too large to enumerate (cap is 2^25 elements)")]
    TooLarge,
    #[error("explicit probabilities must match the group size, be strictly positive, and sum to 1")]
    BadProbabilities,
    #[error("group index does not match the data's model, or its dimensions are degenerate")]
    KindMismatch,
    #[error("alpha must lie strictly between 0 and 1, got {alpha}")]
    BadAlpha { alpha: f64 },
    /// Defensive: for shift models every element's acceptance region
    /// contains the point estimate, so the set always holds at least one
    /// breakpoint. Reported rather than panicking if that invariant breaks.
    #[error("the confidence set is empty at alpha = {alpha}")]
    EmptyConfidenceSet { alpha: f64 },
    #[error("breakpoint scan supports at most 2^20 replicates, got {n}")]
    TooManyReplicates { n: usize },
    #[error("breakpoint scan requires draws from a group or randomization sample (scheme {scheme:?} has no monotone breakpoint structure)")]
    UnsupportedScheme { scheme: Scheme },
}

/// Which invariance group to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    /// All 2^n sign flips of an n-vector.
    Signs { n: usize },
    /// All C(n, m) assignments of m treated units among n.
    Assignments { n: usize, m: usize },
}

/// Selection probabilities over the group, in enumeration order.
#[derive(Debug, Clone)]
pub enum GroupProbs {
    Uniform,
    Explicit(Vec<f64>),
}

/// A validated, enumerable group. Enumeration order is lexicographic:
/// signs run per position with -1 before +1 (the identity is last);
/// assignments run over treated-position sets in lexicographic order
/// (the observed assignment {0..m-1} is first).
#[derive(Debug, Clone)]
pub struct FullGroupIndex {
    kind: GroupKind,
    probs: GroupProbs,
    size: u128,
}

fn binomial_capped(n: usize, m: usize) -> Result<u128, OracleError> {
    if m > n {
        return Ok(0);
    }
    let m = m.min(n - m);
    let mut c: u128 = 1;
    for k in 1..=m {
        // exact at every step: C(n, k) = C(n, k-1) * (n - k + 1) / k
        c = c * (n as u128 - k as u128 + 1) / k as u128;
        if c > MAX_GROUP_SIZE {
            return Err(OracleError::TooLarge);
        }
    }
    Ok(c)
}

impl FullGroupIndex {
    pub fn new(kind: GroupKind, probs: GroupProbs) -> Result<Self, OracleError> {
        let size = match kind {
            GroupKind::Signs { n } => {
                if n == 0 {
                    return Err(OracleError::KindMismatch);
                }
                if n > 25 {
                    return Err(OracleError::TooLarge); // 2^n would exceed the cap
                }
                1u128 << n
            }
            GroupKind::Assignments { n, m } => {
                if m == 0 || m >= n {
                    return Err(OracleError::KindMismatch);
                }
                binomial_capped(n, m)?
            }
        };
        if size > MAX_GROUP_SIZE {
            return Err(OracleError::TooLarge);
        }
        if let GroupProbs::Explicit(p) = &probs {
            if p.len() as u128 != size || p.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(OracleError::BadProbabilities);
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > (2.0f64).powi(-40) {
                return Err(OracleError::BadProbabilities);
            }
        }
        Ok(FullGroupIndex { kind, probs, size })
    }

    /// Uniform group matching the data's model.
    pub fn for_data(data: &Data) -> Result<Self, OracleError> {
        let kind = match data {
            Data::One(d) => GroupKind::Signs { n: d.len() },
            Data::Two(d) => GroupKind::Assignments {
                n: d.n(),
                m: d.m(),
            },
        };
        Self::new(kind, GroupProbs::Uniform)
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn size(&self) -> u128 {
        self.size
    }
}

fn check_kind(data: &Data, index: &FullGroupIndex) -> Result<(), OracleError> {
    let ok = match (data, index.kind) {
        (Data::One(d), GroupKind::Signs { n }) => n == d.len(),
        (Data::Two(d), GroupKind::Assignments { n, m }) => n == d.n() && m == d.m(),
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(OracleError::KindMismatch)
    }
}

fn check_alpha(alpha: f64) -> Result<(), OracleError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(OracleError::BadAlpha { alpha })
    }
}

/// Visit every sign vector as `(index, t0, adj)` with `t0 = sum of signed
/// values`, `adj = sum of signs`. Position `k` takes the sign of bit
/// `n-1-k` of the index (0 means -1), so index `2^n - 1` is the identity.
fn for_each_sign_element(x: &[f64], mut f: impl FnMut(usize, f64, f64)) {
    let n = x.len();
    let size = 1u128 << n;
    for i in 0..size {
        let mut t0 = 0.0;
        let mut adj = 0.0;
        for (k, &xk) in x.iter().enumerate() {
            let s = if (i >> (n - 1 - k)) & 1 == 1 { 1.0 } else { -1.0 };
            t0 += s * xk;
            adj += s;
        }
        f(i as usize, t0, adj);
    }
}

/// Visit every assignment as `(index, sum_treated, sum_control, kept)` where
/// `kept` counts originally-treated units still treated. Treated-position
/// sets advance lexicographically; sums update incrementally from the suffix
/// that changed.
fn for_each_assignment_element(
    w: &[f64],
    m: usize,
    mut f: impl FnMut(usize, f64, f64, usize),
) {
    let n = w.len();
    let mut c: Vec<usize> = (0..m).collect();
    let mut sum_t: f64 = w[..m].iter().sum();
    let mut sum_c: f64 = w[m..].iter().sum();
    let mut kept = m;
    let mut idx = 0usize;
    loop {
        f(idx, sum_t, sum_c, kept);
        idx += 1;
        let mut found = usize::MAX;
        let mut i = m;
        while i > 0 {
            i -= 1;
            if c[i] != i + n - m {
                found = i;
                break;
            }
        }
        if found == usize::MAX {
            return;
        }
        for &cj in &c[found..] {
            sum_t -= w[cj];
            sum_c += w[cj];
            if cj < m {
                kept -= 1;
            }
        }
        c[found] += 1;
        for j in found + 1..m {
            c[j] = c[j - 1] + 1;
        }
        for &cj in &c[found..] {
            sum_t += w[cj];
            sum_c -= w[cj];
            if cj < m {
                kept += 1;
            }
        }
    }
}

/// One element's contribution to the monotone tails: either a breakpoint
/// (indicator `eta >= beta` for the upper tail, `eta <= beta` for the lower)
/// or an everywhere-tie.
enum MonotoneEvent {
    Breakpoint(f64),
    Always,
}

/// One element's contribution to the absolute-statistic tail: the closed set
/// of shifts where it beats the observed statistic.
enum AbsEvent {
    Interval(f64, f64),
    RayUp(f64),   // [start, +inf)
    RayDown(f64), // (-inf, end]
    Always,
}

/// Monotone-tail event for a sign element against observed totals
/// `(t0_x, adj_x = n)`.
fn sign_monotone_event(t0: f64, adj: f64, t0_x: f64, n: usize) -> MonotoneEvent {
    let d = n as f64 - adj; // exact: both are small integers in f64
    if d == 0.0 {
        MonotoneEvent::Always // only the identity, which ties bitwise
    } else {
        MonotoneEvent::Breakpoint((t0_x - t0) / d)
    }
}

/// Monotone-tail event for an assignment element, in the rescaled
/// parametrization `S = (n-m) * sum_t - m * sum_c` whose eta coefficient
/// `delta * n` is an exact integer.
fn assignment_monotone_event(
    sum_t: f64,
    sum_c: f64,
    kept: usize,
    s_x: f64,
    n: usize,
    m: usize,
) -> MonotoneEvent {
    let delta = (m - kept) as f64;
    if delta == 0.0 {
        MonotoneEvent::Always // only the observed assignment
    } else {
        let s_g = (n - m) as f64 * sum_t - m as f64 * sum_c;
        MonotoneEvent::Breakpoint((s_x - s_g) / (delta * n as f64))
    }
}

/// Solve `|a_i + eta * a_s| >= |b_i + eta * b_s|` for eta, given
/// `|a_s| <= |b_s|`, by factoring the squared difference into
/// `(A - B)(A + B) >= 0`. The factor slopes `a_s - b_s` and `a_s + b_s`
/// never have the same strict sign, so the solution is an interval, a ray,
/// everything, or (defensively) nothing.
fn abs_event(a_i: f64, a_s: f64, b_i: f64, b_s: f64) -> AbsEvent {
    let (s1, i1) = (a_s - b_s, a_i - b_i);
    let (s2, i2) = (a_s + b_s, a_i + b_i);
    // ray from one linear factor when the other is a constant of sign `c`
    let ray = |c: f64, slope: f64, intercept: f64| -> AbsEvent {
        if c == 0.0 {
            return AbsEvent::Always;
        }
        let root = -intercept / slope;
        if (c > 0.0) == (slope > 0.0) {
            AbsEvent::RayUp(root)
        } else {
            AbsEvent::RayDown(root)
        }
    };
    match (s1 == 0.0, s2 == 0.0) {
        (true, true) => {
            if i1 * i2 >= 0.0 {
                AbsEvent::Always
            } else {
                AbsEvent::Interval(f64::NAN, f64::NAN) // unreachable for shift models
            }
        }
        (true, false) => ray(i1, s2, i2),
        (false, true) => ray(i2, s1, i1),
        (false, false) => {
            let r1 = -i1 / s1;
            let r2 = -i2 / s2;
            AbsEvent::Interval(r1.min(r2), r1.max(r2))
        }
    }
}

/// Absolute-tail event for a sign element: replicate linear
/// `t0 - eta * adj` against observed `t0_x - eta * n`.
fn sign_abs_event(t0: f64, adj: f64, t0_x: f64, n: usize) -> AbsEvent {
    abs_event(t0, -adj, t0_x, -(n as f64))
}

/// Absolute-tail event for an assignment element in the rescaled,
/// effect-removed parametrization: replicate `S_g + eta*(delta*n - m(n-m))`
/// against observed `S_x - eta * m(n-m)`; all eta coefficients are exact
/// integers, so the factor orientation is decided exactly.
fn assignment_abs_event(
    sum_t: f64,
    sum_c: f64,
    kept: usize,
    s_x: f64,
    n: usize,
    m: usize,
) -> AbsEvent {
    let mnm = (m * (n - m)) as f64;
    let delta_n = ((m - kept) * n) as f64;
    let s_g = (n - m) as f64 * sum_t - m as f64 * sum_c;
    abs_event(s_g, delta_n - mnm, s_x, -mnm)
}

enum SetEdge {
    Unbounded,
    At(f64),
    Empty,
}

/// Sorted breakpoints plus an always-tying bucket, with mass kept as exact
/// counts (uniform designs, replicate scans) or explicit weights.
enum StepCurve {
    Counts {
        betas: Vec<f64>,
        always: u64,
        size: u64,
    },
    Weights {
        betas: Vec<f64>,
        /// prefix[i] = always-mass + mass of betas[..i]
        prefix: Vec<f64>,
        /// suffix[i] = always-mass + mass of betas[i..]
        suffix: Vec<f64>,
    },
}

impl StepCurve {
    fn from_counts(mut betas: Vec<f64>, always: u64, size: u64) -> Self {
        betas.sort_unstable_by(f64::total_cmp);
        StepCurve::Counts { betas, always, size }
    }

    fn from_weights(mut events: Vec<(f64, f64)>, always_mass: f64) -> Self {
        events.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let betas: Vec<f64> = events.iter().map(|e| e.0).collect();
        let mut prefix = Vec::with_capacity(events.len() + 1);
        let mut acc = always_mass;
        prefix.push(acc);
        for e in &events {
            acc += e.1;
            prefix.push(acc);
        }
        let mut suffix = vec![0.0; events.len() + 1];
        let mut acc = always_mass;
        suffix[events.len()] = acc;
        for i in (0..events.len()).rev() {
            acc += events[i].1;
            suffix[i] = acc;
        }
        StepCurve::Weights { betas, prefix, suffix }
    }

    /// Upper-tail P-value: mass of breakpoints at or below eta, plus ties.
    fn upper_p(&self, eta: f64) -> f64 {
        match self {
            StepCurve::Counts { betas, always, size } => {
                let k = betas.partition_point(|&b| b <= eta);
                (always + k as u64) as f64 / *size as f64
            }
            StepCurve::Weights { betas, prefix, .. } => {
                let k = betas.partition_point(|&b| b <= eta);
                prefix[k]
            }
        }
    }

    /// Lower-tail P-value: mass of breakpoints at or above eta, plus ties.
    fn lower_p(&self, eta: f64) -> f64 {
        match self {
            StepCurve::Counts { betas, always, size } => {
                let k = betas.partition_point(|&b| b < eta);
                (always + (betas.len() - k) as u64) as f64 / *size as f64
            }
            StepCurve::Weights { betas, suffix, .. } => {
                let k = betas.partition_point(|&b| b < eta);
                suffix[k]
            }
        }
    }

    /// Least eta with `upper_p(eta) >= need`: the lower confidence endpoint.
    fn lower_set_start(&self, need: f64) -> SetEdge {
        match self {
            StepCurve::Counts { betas, always, size } => {
                let p_of = |c: u64| (always + c) as f64 / *size as f64;
                if p_of(0) >= need {
                    return SetEdge::Unbounded;
                }
                let len = betas.len() as u64;
                if len == 0 || p_of(len) < need {
                    return SetEdge::Empty;
                }
                // smallest count c >= 1 with p_of(c) >= need
                let (mut lo, mut hi) = (1u64, len);
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    if p_of(mid) >= need {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                SetEdge::At(betas[(lo - 1) as usize])
            }
            StepCurve::Weights { betas, prefix, .. } => {
                if prefix[0] >= need {
                    return SetEdge::Unbounded;
                }
                let k = prefix.partition_point(|&p| p < need);
                if k > betas.len() {
                    SetEdge::Empty
                } else {
                    SetEdge::At(betas[k - 1])
                }
            }
        }
    }

    /// Greatest eta with `lower_p(eta) >= need`: the upper confidence endpoint.
    fn upper_set_end(&self, need: f64) -> SetEdge {
        match self {
            StepCurve::Counts { betas, always, size } => {
                let p_of = |c: u64| (always + c) as f64 / *size as f64;
                if p_of(0) >= need {
                    return SetEdge::Unbounded;
                }
                let len = betas.len() as u64;
                if len == 0 || p_of(len) < need {
                    return SetEdge::Empty;
                }
                let (mut lo, mut hi) = (1u64, len);
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    if p_of(mid) >= need {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                SetEdge::At(betas[betas.len() - lo as usize])
            }
            StepCurve::Weights { betas, suffix, .. } => {
                if suffix[betas.len()] >= need {
                    return SetEdge::Unbounded;
                }
                // greatest start index k with suffix[k] >= need
                let k = suffix.partition_point(|&s| s >= need);
                if k == 0 {
                    SetEdge::Empty
                } else {
                    SetEdge::At(betas[k - 1])
                }
            }
        }
    }
}

// Count and weight variants of the absolute-tail curve share their event
// classification through a common accumulator.
struct AbsAccum {
    starts: Vec<(f64, f64)>,
    ends: Vec<(f64, f64)>,
    always: f64,
    left_rays: f64,
    right_rays: f64,
}

impl AbsAccum {
    fn new() -> Self {
        AbsAccum {
            starts: Vec::new(),
            ends: Vec::new(),
            always: 0.0,
            left_rays: 0.0,
            right_rays: 0.0,
        }
    }

    fn push(&mut self, ev: AbsEvent, mass: f64) {
        match ev {
            AbsEvent::Always => self.always += mass,
            AbsEvent::Interval(s, e) => {
                if s.is_nan() {
                    return; // empty acceptance: contributes nowhere
                }
                self.starts.push((s, mass));
                self.ends.push((e, mass));
            }
            AbsEvent::RayUp(s) => {
                self.starts.push((s, mass));
                self.right_rays += mass;
            }
            AbsEvent::RayDown(e) => {
                self.ends.push((e, mass));
                self.left_rays += mass;
            }
        }
    }
}

struct AbsEvents {
    starts: Vec<(f64, f64)>, // sorted by position
    ends: Vec<(f64, f64)>,   // sorted by position
    base: f64,               // coverage as eta -> -inf: always + left rays
    tail: f64,               // coverage as eta -> +inf: always + right rays
}

impl AbsEvents {
    fn from_accum(mut acc: AbsAccum) -> Self {
        acc.starts.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        acc.ends.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        AbsEvents {
            base: acc.always + acc.left_rays,
            tail: acc.always + acc.right_rays,
            starts: acc.starts,
            ends: acc.ends,
        }
    }

    /// Coverage at a point: everything started at or before eta minus
    /// everything ended strictly before it, plus the always bucket. Rays
    /// down to -inf have no start event, hence the base offset.
    fn p(&self, eta: f64) -> f64 {
        let started: f64 = self
            .starts
            .iter()
            .take_while(|e| e.0 <= eta)
            .map(|e| e.1)
            .sum();
        let ended: f64 = self
            .ends
            .iter()
            .take_while(|e| e.0 < eta)
            .map(|e| e.1)
            .sum();
        self.base + started - ended
    }

    /// Endpoints of `{eta : coverage >= need}` via a single sweep. The set is
    /// an interval because every element's acceptance region contains the
    /// point estimate.
    fn level_set(&self, need: f64) -> (SetEdge, SetEdge) {
        let left_unbounded = self.base >= need;
        let right_unbounded = self.tail >= need;
        let mut running = self.base;
        let (mut si, mut ei) = (0usize, 0usize);
        let (mut first, mut last) = (None, None);
        while si < self.starts.len() || ei < self.ends.len() {
            let pos = match (self.starts.get(si), self.ends.get(ei)) {
                (Some(s), Some(e)) => s.0.min(e.0),
                (Some(s), None) => s.0,
                (None, Some(e)) => e.0,
                (None, None) => break,
            };
            while si < self.starts.len() && self.starts[si].0 == pos {
                running += self.starts[si].1;
                si += 1;
            }
            if running >= need {
                if first.is_none() {
                    first = Some(pos);
                }
                last = Some(pos);
            }
            while ei < self.ends.len() && self.ends[ei].0 == pos {
                running -= self.ends[ei].1;
                ei += 1;
            }
        }
        let lower = if left_unbounded {
            SetEdge::Unbounded
        } else {
            match first {
                Some(v) => SetEdge::At(v),
                None => SetEdge::Empty,
            }
        };
        let upper = if right_unbounded {
            SetEdge::Unbounded
        } else {
            match last {
                Some(v) => SetEdge::At(v),
                None => SetEdge::Empty,
            }
        };
        (lower, upper)
    }
}

/// Count-mass variant of [`AbsEvents`]: same sweep, division-at-the-end
/// arithmetic identical to the plus-one estimator's.
struct AbsCounts {
    starts: Vec<f64>,
    ends: Vec<f64>,
    base: u64,
    tail: u64,
    size: u64,
}

impl AbsCounts {
    fn from_accum(acc: AbsAccum, size: u64) -> Self {
        // masses were pushed as exact 1.0 counts
        let mut starts: Vec<f64> = acc.starts.iter().map(|e| e.0).collect();
        let mut ends: Vec<f64> = acc.ends.iter().map(|e| e.0).collect();
        starts.sort_unstable_by(f64::total_cmp);
        ends.sort_unstable_by(f64::total_cmp);
        AbsCounts {
            base: (acc.always + acc.left_rays) as u64,
            tail: (acc.always + acc.right_rays) as u64,
            starts,
            ends,
            size,
        }
    }

    fn p(&self, eta: f64) -> f64 {
        let started = self.starts.partition_point(|&s| s <= eta) as u64;
        let ended = self.ends.partition_point(|&e| e < eta) as u64;
        (self.base + started - ended) as f64 / self.size as f64
    }

    fn level_set(&self, need: f64) -> (SetEdge, SetEdge) {
        let size = self.size as f64;
        let qualifies = |count: u64| count as f64 / size >= need;
        let left_unbounded = qualifies(self.base);
        let right_unbounded = qualifies(self.tail);
        let mut running = self.base;
        let (mut si, mut ei) = (0usize, 0usize);
        let (mut first, mut last) = (None, None);
        while si < self.starts.len() || ei < self.ends.len() {
            let pos = match (self.starts.get(si), self.ends.get(ei)) {
                (Some(&s), Some(&e)) => s.min(e),
                (Some(&s), None) => s,
                (None, Some(&e)) => e,
                (None, None) => break,
            };
            while si < self.starts.len() && self.starts[si] == pos {
                running += 1;
                si += 1;
            }
            if qualifies(running) {
                if first.is_none() {
                    first = Some(pos);
                }
                last = Some(pos);
            }
            while ei < self.ends.len() && self.ends[ei] == pos {
                running -= 1;
                ei += 1;
            }
        }
        let lower = if left_unbounded {
            SetEdge::Unbounded
        } else {
            match first {
                Some(v) => SetEdge::At(v),
                None => SetEdge::Empty,
            }
        };
        let upper = if right_unbounded {
            SetEdge::Unbounded
        } else {
            match last {
                Some(v) => SetEdge::At(v),
                None => SetEdge::Empty,
            }
        };
        (lower, upper)
    }
}

/// Observed rescaled total for the two-sample breakpoint algebra, computed
/// with the same floating-point operation order as the enumerator's first
/// element so the observed assignment classifies as an exact tie.
fn observed_scaled(w: &[f64], m: usize) -> f64 {
    let n = w.len();
    let sum_t: f64 = w[..m].iter().sum();
    let sum_c: f64 = w[m..].iter().sum();
    (n - m) as f64 * sum_t - m as f64 * sum_c
}

fn build_monotone_full(data: &Data, index: &FullGroupIndex) -> StepCurve {
    match data {
        Data::One(d) => {
            let x = d.values();
            let n = x.len();
            let t0_x: f64 = x.iter().sum();
            match &index.probs {
                GroupProbs::Uniform => {
                    let mut betas = Vec::with_capacity(index.size as usize);
                    let mut always = 0u64;
                    for_each_sign_element(x, |_, t0, adj| {
                        match sign_monotone_event(t0, adj, t0_x, n) {
                            MonotoneEvent::Breakpoint(b) => betas.push(b),
                            MonotoneEvent::Always => always += 1,
                        }
                    });
                    StepCurve::from_counts(betas, always, index.size as u64)
                }
                GroupProbs::Explicit(p) => {
                    let mut events = Vec::with_capacity(p.len());
                    let mut always_mass = 0.0;
                    for_each_sign_element(x, |i, t0, adj| {
                        match sign_monotone_event(t0, adj, t0_x, n) {
                            MonotoneEvent::Breakpoint(b) => events.push((b, p[i])),
                            MonotoneEvent::Always => always_mass += p[i],
                        }
                    });
                    StepCurve::from_weights(events, always_mass)
                }
            }
        }
        Data::Two(d) => {
            let (w, m, n) = (d.values(), d.m(), d.n());
            let s_x = observed_scaled(w, m);
            match &index.probs {
                GroupProbs::Uniform => {
                    let mut betas = Vec::with_capacity(index.size as usize);
                    let mut always = 0u64;
                    for_each_assignment_element(w, m, |_, st, sc, kept| {
                        match assignment_monotone_event(st, sc, kept, s_x, n, m) {
                            MonotoneEvent::Breakpoint(b) => betas.push(b),
                            MonotoneEvent::Always => always += 1,
                        }
                    });
                    StepCurve::from_counts(betas, always, index.size as u64)
                }
                GroupProbs::Explicit(p) => {
                    let mut events = Vec::with_capacity(p.len());
                    let mut always_mass = 0.0;
                    for_each_assignment_element(w, m, |i, st, sc, kept| {
                        match assignment_monotone_event(st, sc, kept, s_x, n, m) {
                            MonotoneEvent::Breakpoint(b) => events.push((b, p[i])),
                            MonotoneEvent::Always => always_mass += p[i],
                        }
                    });
                    StepCurve::from_weights(events, always_mass)
                }
            }
        }
    }
}

enum AbsAny {
    Counts(AbsCounts),
    Weights(AbsEvents),
}

impl AbsAny {
    fn p(&self, eta: f64) -> f64 {
        match self {
            AbsAny::Counts(c) => c.p(eta),
            AbsAny::Weights(w) => w.p(eta),
        }
    }

    fn level_set(&self, need: f64) -> (SetEdge, SetEdge) {
        match self {
            AbsAny::Counts(c) => c.level_set(need),
            AbsAny::Weights(w) => w.level_set(need),
        }
    }
}

fn build_abs_full(data: &Data, index: &FullGroupIndex) -> AbsAny {
    let mut acc = AbsAccum::new();
    match data {
        Data::One(d) => {
            let x = d.values();
            let n = x.len();
            let t0_x: f64 = x.iter().sum();
            match &index.probs {
                GroupProbs::Uniform => {
                    for_each_sign_element(x, |_, t0, adj| {
                        acc.push(sign_abs_event(t0, adj, t0_x, n), 1.0);
                    });
                    return AbsAny::Counts(AbsCounts::from_accum(acc, index.size as u64));
                }
                GroupProbs::Explicit(p) => {
                    for_each_sign_element(x, |i, t0, adj| {
                        acc.push(sign_abs_event(t0, adj, t0_x, n), p[i]);
                    });
                }
            }
        }
        Data::Two(d) => {
            let (w, m, n) = (d.values(), d.m(), d.n());
            let s_x = observed_scaled(w, m);
            match &index.probs {
                GroupProbs::Uniform => {
                    for_each_assignment_element(w, m, |_, st, sc, kept| {
                        acc.push(assignment_abs_event(st, sc, kept, s_x, n, m), 1.0);
                    });
                    return AbsAny::Counts(AbsCounts::from_accum(acc, index.size as u64));
                }
                GroupProbs::Explicit(p) => {
                    for_each_assignment_element(w, m, |i, st, sc, kept| {
                        acc.push(assignment_abs_event(st, sc, kept, s_x, n, m), p[i]);
                    });
                }
            }
        }
    }
    AbsAny::Weights(AbsEvents::from_accum(acc))
}

/// Exact P-value at one shift by enumerating the whole group. All four tails
/// supported; two-sided Bonferroni doubles the smaller one-sided value.
pub fn full_group_pvalue(
    data: &Data,
    eta: f64,
    tail: Tail,
    index: &FullGroupIndex,
) -> Result<f64, OracleError> {
    check_kind(data, index)?;
    match tail {
        Tail::Upper | Tail::Lower | Tail::TwoSidedBonferroni => {
            let curve = build_monotone_full(data, index);
            Ok(match tail {
                Tail::Upper => curve.upper_p(eta),
                Tail::Lower => curve.lower_p(eta),
                _ => (2.0 * curve.upper_p(eta).min(curve.lower_p(eta))).min(1.0),
            })
        }
        Tail::TwoSidedAbs => Ok(build_abs_full(data, index).p(eta)),
    }
}

/// An exactly-inverted confidence set.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleInterval {
    pub lower: f64,
    pub upper: f64,
    /// Finite endpoints are attained (the set is closed); infinite ones are not.
    pub lower_closed: bool,
    pub upper_closed: bool,
    pub alpha: f64,
    pub side: Side,
    pub convention: Convention,
}

fn assemble_interval(
    lower: SetEdge,
    upper: SetEdge,
    alpha: f64,
    side: Side,
    convention: Convention,
) -> Result<OracleInterval, OracleError> {
    let (lo, lo_closed) = match lower {
        SetEdge::Unbounded => (f64::NEG_INFINITY, false),
        SetEdge::At(v) => (v, true),
        SetEdge::Empty => return Err(OracleError::EmptyConfidenceSet { alpha }),
    };
    let (hi, hi_closed) = match upper {
        SetEdge::Unbounded => (f64::INFINITY, false),
        SetEdge::At(v) => (v, true),
        SetEdge::Empty => return Err(OracleError::EmptyConfidenceSet { alpha }),
    };
    if lo > hi {
        return Err(OracleError::EmptyConfidenceSet { alpha });
    }
    Ok(OracleInterval {
        lower: lo,
        upper: hi,
        lower_closed: lo_closed,
        upper_closed: hi_closed,
        alpha,
        side,
        convention,
    })
}

/// Exact confidence set endpoints from full-group enumeration. Endpoints are
/// breakpoint values themselves — no search resolution is involved. The
/// convention only matters for `Side::TwoSided`.
pub fn full_group_interval(
    data: &Data,
    alpha: f64,
    side: Side,
    convention: Convention,
    index: &FullGroupIndex,
) -> Result<OracleInterval, OracleError> {
    check_kind(data, index)?;
    check_alpha(alpha)?;
    match (side, convention) {
        (Side::Lower, _) => {
            let curve = build_monotone_full(data, index);
            let l = curve.lower_set_start(alpha);
            assemble_interval(l, SetEdge::Unbounded, alpha, side, convention)
        }
        (Side::Upper, _) => {
            let curve = build_monotone_full(data, index);
            let u = curve.upper_set_end(alpha);
            assemble_interval(SetEdge::Unbounded, u, alpha, side, convention)
        }
        (Side::TwoSided, Convention::Bonferroni) => {
            let curve = build_monotone_full(data, index);
            let need = alpha * 0.5; // exact halving
            let l = curve.lower_set_start(need);
            let u = curve.upper_set_end(need);
            assemble_interval(l, u, alpha, side, convention)
        }
        (Side::TwoSided, Convention::Abs) => {
            let curve = build_abs_full(data, index);
            let (l, u) = curve.level_set(alpha);
            assemble_interval(l, u, alpha, side, convention)
        }
    }
}

/// A monotone-tail breakpoint attributed to the replicate that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    pub eta: f64,
    /// Index into `draws.replicates()`.
    pub source: usize,
}

fn scan_guard(data: &Data, draws: &FrozenDraws) -> Result<(), OracleError> {
    if draws.len() > MAX_SCAN_REPLICATES {
        return Err(OracleError::TooManyReplicates { n: draws.len() });
    }
    let scheme_ok = matches!(
        (data, draws.scheme()),
        (Data::One(_), Scheme::PermutationSample) | (Data::Two(_), Scheme::RandomizationSample)
    );
    if !scheme_ok {
        return Err(OracleError::UnsupportedScheme {
            scheme: draws.scheme(),
        });
    }
    Ok(())
}

/// Monotone-tail breakpoints of one frozen replicate set, for callers that
/// want the raw step positions. Replicates that tie the observed statistic
/// at every shift (redrawn identity elements) produce no breakpoint.
pub fn replicate_breakpoints(
    data: &Data,
    draws: &FrozenDraws,
) -> Result<Vec<Breakpoint>, OracleError> {
    scan_guard(data, draws)?;
    let obs = draws.observed();
    let mut out = Vec::with_capacity(draws.len());
    match data {
        Data::One(_) => {
            for (j, r) in draws.replicates().iter().enumerate() {
                let d = obs.adj - r.adj; // n - sum of signs, exact
                if d != 0.0 {
                    out.push(Breakpoint {
                        eta: (obs.t0 - r.t0) / d,
                        source: j,
                    });
                }
            }
        }
        Data::Two(_) => {
            for (j, r) in draws.replicates().iter().enumerate() {
                if r.adj != 0.0 {
                    out.push(Breakpoint {
                        eta: (obs.t0 - r.t0) / r.adj,
                        source: j,
                    });
                }
            }
        }
    }
    Ok(out)
}

fn build_monotone_scan(data: &Data, draws: &FrozenDraws) -> StepCurve {
    // plus-one semantics: the observed datum is one always-tying element of
    // a population of size N + 1
    let mut always = 1u64;
    let mut betas = Vec::with_capacity(draws.len());
    let obs = draws.observed();
    match data {
        Data::One(_) => {
            for r in draws.replicates() {
                let d = obs.adj - r.adj;
                if d == 0.0 {
                    always += 1; // redrawn identity: ties bitwise at every eta
                } else {
                    betas.push((obs.t0 - r.t0) / d);
                }
            }
        }
        Data::Two(_) => {
            for r in draws.replicates() {
                if r.adj == 0.0 {
                    always += 1; // redrawn observed assignment
                } else {
                    betas.push((obs.t0 - r.t0) / r.adj);
                }
            }
        }
    }
    StepCurve::from_counts(betas, always, draws.len() as u64 + 1)
}

fn build_abs_scan(data: &Data, draws: &FrozenDraws) -> AbsCounts {
    let mut acc = AbsAccum::new();
    acc.push(AbsEvent::Always, 1.0); // the observed datum ties itself
    let obs = draws.observed();
    match data {
        Data::One(_) => {
            // replicate |t0 - eta*adj| vs observed |t0_x - eta*n|
            for r in draws.replicates() {
                acc.push(abs_event(r.t0, -r.adj, obs.t0, -obs.adj), 1.0);
            }
        }
        Data::Two(_) => {
            // effect-removed: |t0 + eta*(adj-1)| vs |t0_x - eta|; adj <= 2
            // mathematically, clamp the rounding fuzz so the (A+B) factor
            // slope never turns positive
            for r in draws.replicates() {
                let s2 = (r.adj - 2.0).min(0.0);
                let a_slope = s2 + 1.0; // adj - 1, clamped to <= 1
                acc.push(abs_event(r.t0, a_slope, obs.t0, -1.0), 1.0);
            }
        }
    }
    AbsCounts::from_accum(acc, draws.len() as u64 + 1)
}

/// Exact inversion of the plus-one estimated P-value over one frozen
/// replicate set: endpoints are breakpoint values of the estimated step
/// function. The bisection search over the same draws must land within its
/// resolution `e` of these endpoints. With no replicates every shift is
/// accepted and the result is the whole line.
pub fn breakpoint_scan_interval(
    data: &Data,
    draws: &FrozenDraws,
    alpha: f64,
    side: Side,
    convention: Convention,
) -> Result<OracleInterval, OracleError> {
    check_alpha(alpha)?;
    scan_guard(data, draws)?;
    match (side, convention) {
        (Side::Lower, _) => {
            let curve = build_monotone_scan(data, draws);
            let l = curve.lower_set_start(alpha);
            assemble_interval(l, SetEdge::Unbounded, alpha, side, convention)
        }
        (Side::Upper, _) => {
            let curve = build_monotone_scan(data, draws);
            let u = curve.upper_set_end(alpha);
            assemble_interval(SetEdge::Unbounded, u, alpha, side, convention)
        }
        (Side::TwoSided, Convention::Bonferroni) => {
            let curve = build_monotone_scan(data, draws);
            let need = alpha * 0.5;
            let l = curve.lower_set_start(need);
            let u = curve.upper_set_end(need);
            assemble_interval(l, u, alpha, side, convention)
        }
        (Side::TwoSided, Convention::Abs) => {
            let curve = build_abs_scan(data, draws);
            let (l, u) = curve.level_set(alpha);
            assemble_interval(l, u, alpha, side, convention)
        }
    }
}
