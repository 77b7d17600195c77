//! Simulation harness validating the conservativeness guarantees end to end.
//!
//! Each replication draws a synthetic dataset with a known true shift,
//! freezes one set of Monte Carlo replicates, inverts the two-sided test,
//! and records whether the interval captured the truth. The guarantee under
//! test is one-directional: empirical coverage may exceed the nominal level
//! (these intervals are conservative, often markedly so for coarse designs)
//! but must not fall below `1 - alpha` beyond binomial noise.
//!
//! A companion check looks at the P-value itself: at the true parameter the
//! estimated P-value must be stochastically no smaller than uniform, i.e.
//! its CDF at `t` stays at or below `t` up to sampling error. Swapping the
//! estimator kernel for a deliberately anti-conservative one (strict
//! inequality, no plus-one correction) must make that check fail — a
//! negative control guarding against a harness that passes vacuously.
//!
//! Reproducibility: replication `r` derives its generator from
//! `base_seed || r` (big-endian). Data are drawn from that generator's root
//! stream; the freezer takes its replicates from numbered substreams, so
//! data and replicate draws never share bytes, and results do not depend on
//! thread count.

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::invert::{quasiconcave_interval, InvertError, SearchConfig};
use crate::pvalues::{p_plus_one, Direction, Tail};
use crate::rng::{GeneratorKind, SeededGenerator};
use crate::shift::{
    default_delta0, default_eta0, make_pvalue_fn, one_sample_freeze, one_sample_stat,
    two_sample_freeze, two_sample_stat, Data, Estimator, Model, ModelError, OneSampleData,
    TwoSampleData,
};

#[derive(Debug, Error)]
pub enum CoverageError {
    #[error("bad coverage configuration: {reason}")]
    BadConfig { reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Invert(#[from] InvertError),
}

/// Noise law for synthetic data, always centered at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    /// Uniform on `[-scale, scale]`: continuous, essentially tie-free.
    UniformSymmetric,
    /// `±scale` with equal probability: heavy ties, exercising the
    /// weak-inequality side of the estimators.
    TwoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Noise {
    pub kind: NoiseKind,
    pub scale: f64,
}

impl Noise {
    pub fn uniform(scale: f64) -> Self {
        Noise {
            kind: NoiseKind::UniformSymmetric,
            scale,
        }
    }

    pub fn two_point(scale: f64) -> Self {
        Noise {
            kind: NoiseKind::TwoPoint,
            scale,
        }
    }

    fn draw(&self, gen: &mut SeededGenerator) -> f64 {
        match self.kind {
            NoiseKind::UniformSymmetric => (2.0 * gen.uniform_f64() - 1.0) * self.scale,
            NoiseKind::TwoPoint => {
                if gen.uniform_below(2) == 1 {
                    self.scale
                } else {
                    -self.scale
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoverageConfig {
    pub model: Model,
    pub theta_true: f64,
    /// Total sample size.
    pub n: usize,
    /// Treated-group size; ignored by the one-sample model.
    pub m: usize,
    pub noise: Noise,
    /// Number of simulated datasets.
    pub replications: usize,
    pub alpha: f64,
    /// Monte Carlo replicates frozen per dataset.
    pub n_replicates: usize,
    pub base_seed: Vec<u8>,
    /// Endpoint resolution handed to the interval search.
    pub tolerance: f64,
    pub generator: GeneratorKind,
}

impl CoverageConfig {
    pub fn one_sample(
        theta_true: f64,
        n: usize,
        noise: Noise,
        replications: usize,
        alpha: f64,
        n_replicates: usize,
        base_seed: &[u8],
    ) -> Self {
        CoverageConfig {
            model: Model::OneSample,
            theta_true,
            n,
            m: 0,
            noise,
            replications,
            alpha,
            n_replicates,
            base_seed: base_seed.to_vec(),
            tolerance: 1e-6,
            generator: GeneratorKind::Sha256Counter,
        }
    }

    pub fn two_sample(
        theta_true: f64,
        n: usize,
        m: usize,
        noise: Noise,
        replications: usize,
        alpha: f64,
        n_replicates: usize,
        base_seed: &[u8],
    ) -> Self {
        CoverageConfig {
            model: Model::TwoSample,
            m,
            ..Self::one_sample(theta_true, n, noise, replications, alpha, n_replicates, base_seed)
        }
    }

    fn validate(&self) -> Result<(), CoverageError> {
        let bad = |reason: &str| {
            Err(CoverageError::BadConfig {
                reason: reason.to_string(),
            })
        };
        if !self.theta_true.is_finite() {
            return bad("theta_true must be finite");
        }
        if self.n == 0 {
            return bad("n must be positive");
        }
        if self.model == Model::TwoSample && !(self.m > 0 && self.m < self.n) {
            return bad("two-sample designs need 0 < m < n");
        }
        if !(self.noise.scale > 0.0 && self.noise.scale.is_finite()) {
            return bad("noise scale must be positive and finite");
        }
        if self.replications == 0 {
            return bad("replications must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie strictly between 0 and 1");
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return bad("tolerance must be positive and finite");
        }
        Ok(())
    }
}

/// Outcome of a coverage experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub replications: usize,
    pub covered: usize,
    pub empirical_coverage: f64,
    /// `sqrt(alpha * (1 - alpha) / replications)`.
    pub binomial_se: f64,
    /// Mean interval length over replications with two finite endpoints;
    /// NaN when every interval was unbounded.
    pub mean_finite_length: f64,
    /// Replications where at least one endpoint was infinite.
    pub unbounded: usize,
    /// Replications where the point estimate itself was rejected; counted
    /// as uncovered.
    pub degenerate: usize,
    pub alpha: f64,
}

impl CoverageReport {
    /// The guarantee under test: coverage no more than three binomial
    /// standard errors below nominal. Exceeding nominal is expected.
    pub fn conservative(&self) -> bool {
        self.empirical_coverage >= 1.0 - self.alpha - 3.0 * self.binomial_se
    }
}

struct RepOutcome {
    covered: bool,
    finite_length: Option<f64>,
    unbounded: bool,
    degenerate: bool,
}

fn rep_generator(cfg: &CoverageConfig, r: usize) -> SeededGenerator {
    let mut seed = cfg.base_seed.clone();
    seed.extend_from_slice(&(r as u64).to_be_bytes());
    SeededGenerator::with_kind(&seed, cfg.generator)
}

fn draw_data(cfg: &CoverageConfig, gen: &mut SeededGenerator) -> Data {
    match cfg.model {
        Model::OneSample => {
            let x: Vec<f64> = (0..cfg.n)
                .map(|_| cfg.theta_true + cfg.noise.draw(gen))
                .collect();
            Data::One(OneSampleData::new(x).expect("synthetic data is finite and nonempty"))
        }
        Model::TwoSample => {
            let mut w = Vec::with_capacity(cfg.n);
            for _ in 0..cfg.m {
                w.push(cfg.theta_true + cfg.noise.draw(gen));
            }
            for _ in cfg.m..cfg.n {
                w.push(cfg.noise.draw(gen));
            }
            Data::Two(TwoSampleData::new(w, cfg.m).expect("dimensions validated upfront"))
        }
    }
}

fn freeze(data: &Data, n_replicates: usize, gen: &SeededGenerator) -> crate::pvalues::FrozenDraws {
    match data {
        Data::One(d) => one_sample_freeze(d, n_replicates, gen),
        Data::Two(d) => two_sample_freeze(d, n_replicates, gen),
    }
}

fn run_one(cfg: &CoverageConfig, r: usize) -> Result<RepOutcome, CoverageError> {
    let mut gen = rep_generator(cfg, r);
    let data = draw_data(cfg, &mut gen);
    let draws = Arc::new(freeze(&data, cfg.n_replicates, &gen));
    let p = make_pvalue_fn(&data, &draws, Tail::TwoSidedBonferroni, Estimator::PlusOne)?;
    let search = SearchConfig::new(
        cfg.alpha,
        cfg.tolerance,
        default_eta0(&data),
        default_delta0(&data),
    );
    match quasiconcave_interval(&p, &search) {
        Ok(res) => {
            let covered = res.lower <= cfg.theta_true && cfg.theta_true <= res.upper;
            let unbounded = !(res.lower.is_finite() && res.upper.is_finite());
            Ok(RepOutcome {
                covered,
                finite_length: (!unbounded).then(|| res.upper - res.lower),
                unbounded,
                degenerate: false,
            })
        }
        // the estimate itself was rejected: no interval, counted against
        // coverage rather than silently dropped
        Err(InvertError::EtaZeroRejected { .. }) => Ok(RepOutcome {
            covered: false,
            finite_length: None,
            unbounded: false,
            degenerate: true,
        }),
        Err(e) => Err(e.into()),
    }
}

/// Run the coverage experiment described by `cfg`. Replications execute in
/// parallel; results are reduced in replication order, so reports are
/// identical across thread counts.
pub fn run_coverage(cfg: &CoverageConfig) -> Result<CoverageReport, CoverageError> {
    cfg.validate()?;
    let outcomes: Vec<RepOutcome> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_one(cfg, r))
        .collect::<Result<_, _>>()?;
    let r = cfg.replications;
    let covered = outcomes.iter().filter(|o| o.covered).count();
    let unbounded = outcomes.iter().filter(|o| o.unbounded).count();
    let degenerate = outcomes.iter().filter(|o| o.degenerate).count();
    let finite: Vec<f64> = outcomes.iter().filter_map(|o| o.finite_length).collect();
    let mean_finite_length = if finite.is_empty() {
        f64::NAN
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    Ok(CoverageReport {
        replications: r,
        covered,
        empirical_coverage: covered as f64 / r as f64,
        binomial_se: (cfg.alpha * (1.0 - cfg.alpha) / r as f64).sqrt(),
        mean_finite_length,
        unbounded,
        degenerate,
        alpha: cfg.alpha,
    })
}

/// CDF checkpoints for the sub-uniformity diagnostic.
pub const SUBUNIFORMITY_THRESHOLDS: [f64; 5] = [0.01, 0.05, 0.1, 0.25, 0.5];

#[derive(Debug, Clone, PartialEq)]
pub struct SubuniformityRow {
    pub threshold: f64,
    /// Fraction of replications with P-value at or below the threshold.
    pub empirical_cdf: f64,
    /// `threshold + 4 * sqrt(threshold * (1 - threshold) / replications)`.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubuniformityReport {
    pub replications: usize,
    pub rows: Vec<SubuniformityRow>,
}

impl SubuniformityReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Sub-uniformity of the upper-tail P-value at the true parameter, using
/// the plus-one estimator the rest of the crate relies on.
pub fn run_subuniformity(cfg: &CoverageConfig) -> Result<SubuniformityReport, CoverageError> {
    run_subuniformity_with_kernel(cfg, |t_obs, t_reps| {
        p_plus_one(t_obs, t_reps, Direction::Upper)
    })
}

/// Same experiment with a caller-supplied P-value kernel mapping
/// `(observed statistic, replicate statistics)` to a P-value, both evaluated
/// at the true parameter. Exists so tests can inject a broken kernel and
/// confirm the diagnostic actually rejects it.
pub fn run_subuniformity_with_kernel(
    cfg: &CoverageConfig,
    kernel: impl Fn(f64, &[f64]) -> f64 + Sync,
) -> Result<SubuniformityReport, CoverageError> {
    cfg.validate()?;
    let ps: Vec<f64> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| -> Result<f64, CoverageError> {
            let mut gen = rep_generator(cfg, r);
            let data = draw_data(cfg, &mut gen);
            let draws = freeze(&data, cfg.n_replicates, &gen);
            let stat = |s: &crate::shift::ReplicateSummary| match cfg.model {
                Model::OneSample => one_sample_stat(s, cfg.theta_true),
                Model::TwoSample => two_sample_stat(s, cfg.theta_true),
            };
            let t_obs = stat(draws.observed());
            let t_reps: Vec<f64> = draws.replicates().iter().map(stat).collect();
            Ok(kernel(t_obs, &t_reps))
        })
        .collect::<Result<_, _>>()?;
    let rows = SUBUNIFORMITY_THRESHOLDS
        .iter()
        .map(|&t| {
            let cdf = ps.iter().filter(|&&p| p <= t).count() as f64 / ps.len() as f64;
            let bound = t + 4.0 * (t * (1.0 - t) / cfg.replications as f64).sqrt();
            SubuniformityRow {
                threshold: t,
                empirical_cdf: cdf,
                bound,
                pass: cdf <= bound,
            }
        })
        .collect();
    Ok(SubuniformityReport {
        replications: cfg.replications,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_replicates_cover_trivially() {
        // with no Monte Carlo replicates every shift is accepted: the
        // interval is the whole line, which covers anything
        let cfg = CoverageConfig::one_sample(2.0, 8, Noise::uniform(1.0), 20, 0.1, 0, b"cov-n0");
        let rep = run_coverage(&cfg).unwrap();
        assert_eq!(rep.covered, 20);
        assert_eq!(rep.empirical_coverage, 1.0);
        assert_eq!(rep.unbounded, 20);
        assert!(rep.mean_finite_length.is_nan());
    }

    #[test]
    fn alpha_at_the_floor_is_an_error() {
        // N = 9 caps attainable P-values at 1/10 = alpha: nothing can be
        // rejected, so the experiment refuses to run
        let cfg = CoverageConfig::one_sample(0.0, 8, Noise::uniform(1.0), 5, 0.1, 9, b"cov-floor");
        let err = run_coverage(&cfg).unwrap_err();
        assert!(matches!(
            err,
            CoverageError::Invert(InvertError::AlphaBelowFloor { .. })
        ));
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg =
            CoverageConfig::one_sample(1.0, 10, Noise::uniform(2.0), 40, 0.1, 99, b"cov-det");
        let a = run_coverage(&cfg).unwrap();
        let b = run_coverage(&cfg).unwrap();
        assert_eq!(a, b);
        let sub_a = run_subuniformity(&cfg).unwrap();
        let sub_b = run_subuniformity(&cfg).unwrap();
        assert_eq!(sub_a, sub_b);
    }

    #[test]
    fn fast_generator_variant_is_deterministic_too() {
        let mut cfg =
            CoverageConfig::one_sample(1.0, 10, Noise::uniform(2.0), 30, 0.1, 99, b"cov-fast");
        cfg.generator = GeneratorKind::Fast;
        let a = run_coverage(&cfg).unwrap();
        let b = run_coverage(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.conservative());
    }

    #[test]
    fn one_sample_coverage_is_conservative() {
        let cfg =
            CoverageConfig::one_sample(2.0, 10, Noise::uniform(1.0), 2000, 0.1, 200, b"cov-one");
        let rep = run_coverage(&cfg).unwrap();
        assert!(
            rep.conservative(),
            "coverage {} fell below {} - 3 * {}",
            rep.empirical_coverage,
            1.0 - rep.alpha,
            rep.binomial_se
        );
        assert_eq!(rep.replications, 2000);
        assert!(rep.mean_finite_length > 0.0);
    }

    #[test]
    fn tied_noise_coverage_is_conservative() {
        // two-point noise makes ties ubiquitous; weak inequalities must keep
        // the intervals conservative rather than shrinking them
        let cfg =
            CoverageConfig::one_sample(0.0, 10, Noise::two_point(1.0), 1000, 0.1, 99, b"cov-tp");
        let rep = run_coverage(&cfg).unwrap();
        assert!(rep.conservative(), "coverage {}", rep.empirical_coverage);
    }

    #[test]
    fn two_sample_subuniformity_passes() {
        let cfg = CoverageConfig::two_sample(
            1.0,
            10,
            5,
            Noise::uniform(1.0),
            2000,
            0.1,
            99,
            b"cov-sub",
        );
        let rep = run_subuniformity(&cfg).unwrap();
        assert!(rep.all_pass(), "rows: {:?}", rep.rows);
    }

    #[test]
    fn strict_no_plus_one_kernel_fails_the_negative_control() {
        // two-point noise on five observations produces massive ties; the
        // correct estimator stays sub-uniform while the strict-inequality,
        // no-plus-one kernel concentrates P-values near zero and must be
        // caught at the 0.01 checkpoint
        let cfg =
            CoverageConfig::one_sample(0.0, 5, Noise::two_point(1.0), 2000, 0.1, 99, b"cov-neg");
        let good = run_subuniformity(&cfg).unwrap();
        assert!(good.rows[0].pass, "plus-one kernel: {:?}", good.rows[0]);
        let bad = run_subuniformity_with_kernel(&cfg, |t_obs, t_reps| {
            let hits = t_reps.iter().filter(|&&t| t > t_obs).count();
            hits as f64 / t_reps.len() as f64
        })
        .unwrap();
        assert!(
            !bad.rows[0].pass,
            "anti-conservative kernel slipped through: {:?}",
            bad.rows[0]
        );
    }

    #[test]
    fn config_validation_rejects_nonsense() {
        let base = CoverageConfig::one_sample(0.0, 8, Noise::uniform(1.0), 10, 0.1, 99, b"v");
        let cases: Vec<CoverageConfig> = vec![
            CoverageConfig {
                theta_true: f64::NAN,
                ..base.clone()
            },
            CoverageConfig {
                n: 0,
                ..base.clone()
            },
            CoverageConfig {
                noise: Noise::uniform(-1.0),
                ..base.clone()
            },
            CoverageConfig {
                replications: 0,
                ..base.clone()
            },
            CoverageConfig {
                alpha: 1.0,
                ..base.clone()
            },
            CoverageConfig {
                tolerance: 0.0,
                ..base.clone()
            },
            CoverageConfig {
                model: Model::TwoSample,
                m: 0,
                ..base.clone()
            },
            CoverageConfig {
                model: Model::TwoSample,
                m: 8,
                ..base.clone()
            },
        ];
        for bad in cases {
            assert!(
                matches!(run_coverage(&bad), Err(CoverageError::BadConfig { .. })),
                "accepted: {bad:?}"
            );
        }
    }
}
