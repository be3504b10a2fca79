//! Attack-quality evaluation: KL to the target (closed form for NIG, between
//! Laplace approximations otherwise), posterior summaries, rounding gaps and
//! cross-model evaluation of a fixed `w`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::attacks::{AttackProblem, Backend};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{chol_logdet, cholesky};
use crate::model::{Model, ParamVector};
use crate::models::NigParams;
use crate::rng::RngSeed;
use crate::samplers::{
    laplace_approx, sample_nig_exact, sample_posterior, GaussianApprox, HmcConfig, SampleBatch,
};
use crate::targets::Target;
use crate::weights::WeightVector;

/// `KL(p ‖ q)` between multivariate normals.
pub fn gaussian_kl(p: &GaussianApprox, q: &GaussianApprox) -> Result<f64> {
    let d = p.dim();
    if q.dim() != d {
        return Err(Error::invalid(format!(
            "dimensions differ: {d} vs {}",
            q.dim()
        )));
    }
    let cp = cholesky(&p.cov, "Σ_p")?;
    let cq = cholesky(&q.cov, "Σ_q")?;
    let trace = cq.solve(&p.cov).trace();
    let dm = &q.mean - &p.mean;
    let quad = dm.dot(&cq.solve(&dm));
    Ok((0.5 * (trace + quad - d as f64 + chol_logdet(&cq) - chol_logdet(&cp))).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlMethod {
    ExactNig,
    Laplace,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlValue {
    pub value: Option<f64>,
    pub method: KlMethod,
}

/// Which summaries to compute from posterior draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SummarySpec {
    /// parameter names; empty means every parameter
    pub params: Vec<String>,
    /// report `P(θ < t)` for each threshold
    pub thresholds: Vec<f64>,
    /// equal-tailed credible interval levels
    pub levels: Vec<f64>,
}

impl Default for SummarySpec {
    fn default() -> Self {
        Self {
            params: Vec::new(),
            thresholds: vec![0.0],
            levels: vec![0.95],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailProb {
    pub threshold: f64,
    pub prob_below: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub tails: Vec<TailProb>,
    pub intervals: Vec<Interval>,
}

/// Linear-interpolation quantile of sorted values.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-parameter mean, sd, tail probabilities and credible intervals.
pub fn posterior_summaries(
    batch: &SampleBatch,
    names: &[String],
    spec: &SummarySpec,
) -> Result<BTreeMap<String, Summary>> {
    if batch.is_empty() {
        return Err(Error::invalid("cannot summarize an empty batch"));
    }
    if names.len() != batch.dim() {
        return Err(Error::invalid(format!(
            "{} names for {} parameters",
            names.len(),
            batch.dim()
        )));
    }
    if let Some(l) = spec.levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(Error::invalid(format!("credible level {l} outside (0, 1)")));
    }
    let wanted: Vec<usize> = if spec.params.is_empty() {
        (0..names.len()).collect()
    } else {
        spec.params
            .iter()
            .map(|p| {
                names.iter().position(|n| n == p).ok_or_else(|| {
                    Error::invalid(format!(
                        "unknown parameter '{p}'; known: {}",
                        names.join(", ")
                    ))
                })
            })
            .collect::<Result<_>>()?
    };
    let s = batch.len() as f64;
    let mut out = BTreeMap::new();
    for j in wanted {
        let col = batch.thetas.column(j);
        let mut sorted: Vec<f64> = col.iter().copied().collect();
        sorted.sort_by(f64::total_cmp);
        let mean = sorted.iter().sum::<f64>() / s;
        let var = if batch.len() > 1 {
            sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (s - 1.0)
        } else {
            0.0
        };
        let tails = spec
            .thresholds
            .iter()
            .map(|&t| TailProb {
                threshold: t,
                prob_below: sorted.partition_point(|&v| v < t) as f64 / s,
            })
            .collect();
        let intervals = spec
            .levels
            .iter()
            .map(|&l| Interval {
                level: l,
                lower: quantile(&sorted, 0.5 * (1.0 - l)),
                upper: quantile(&sorted, 0.5 * (1.0 + l)),
            })
            .collect();
        out.insert(
            names[j].clone(),
            Summary {
                mean,
                sd: var.sqrt(),
                tails,
                intervals,
            },
        );
    }
    Ok(out)
}

/// Closed-form marginal of one β coordinate under an NIG distribution: a
/// Student-t with `2a` degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NigMarginal {
    pub mean: f64,
    pub sd: f64,
    /// `√(Λ⁻¹)ⱼⱼ`
    pub sqrt_scale: f64,
    pub prob_below_zero: f64,
}

pub fn nig_marginals(params: &NigParams) -> Result<Vec<NigMarginal>> {
    let s = params.scale_matrix()?;
    let sd = params.beta_sd()?;
    let df = 2.0 * params.a;
    (0..params.dim())
        .map(|j| {
            let scale = (params.b / params.a * s[(j, j)]).sqrt();
            let t = StudentsT::new(params.mu[j], scale, df)
                .map_err(|e| Error::Domain(e.to_string()))?;
            Ok(NigMarginal {
                mean: params.mu[j],
                sd: sd[j],
                sqrt_scale: s[(j, j)].sqrt(),
                prob_below_zero: t.cdf(0.0),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundingGap {
    pub kl_before: f64,
    pub kl_after: f64,
    pub kl_method: KlMethod,
    /// coordinates differing by more than `1e−6`
    pub l0_dist: usize,
    pub l2_dist: f64,
}

const L0_TOL: f64 = 1e-6;

/// KL at the relaxed and rounded points plus their distances.
pub fn rounding_gap(
    problem: &AttackProblem,
    relaxed: &WeightVector,
    rounded: &WeightVector,
) -> Result<RoundingGap> {
    relaxed.check_len(problem.n())?;
    rounded.check_len(problem.n())?;
    let before = kl_to_target(problem, relaxed)?;
    let after = kl_to_target(problem, rounded)?;
    let diff: Vec<f64> = relaxed
        .as_slice()
        .iter()
        .zip(rounded.as_slice())
        .map(|(a, b)| a - b)
        .collect();
    Ok(RoundingGap {
        kl_before: before.value.unwrap_or(f64::NAN),
        kl_after: after.value.unwrap_or(f64::NAN),
        kl_method: after.method,
        l0_dist: diff.iter().filter(|d| d.abs() > L0_TOL).count(),
        l2_dist: diff.iter().map(|d| d * d).sum::<f64>().sqrt(),
    })
}

/// `KL(π_A ‖ π_w)`: exact for NIG model and target, Laplace-vs-Laplace
/// otherwise.
pub fn kl_to_target(problem: &AttackProblem, w: &WeightVector) -> Result<KlValue> {
    if let Some(r) = problem.exact_objective(w) {
        return Ok(KlValue {
            value: Some(r?),
            method: KlMethod::ExactNig,
        });
    }
    let model = problem.model.as_ref();
    let init = ParamVector::new(model.initial_point(&problem.data))?;
    let target = match problem.target.gaussian() {
        Some(g) => g.clone(),
        None => problem.target.laplace(init.as_slice())?,
    };
    let tainted = laplace_approx(model, &problem.data, w, &init)?;
    Ok(KlValue {
        value: Some(gaussian_kl(&target, &tainted)?),
        method: KlMethod::Laplace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManipulationStats {
    pub deletions: f64,
    pub replications: f64,
    pub fraction_of_data: f64,
}

impl ManipulationStats {
    pub fn of(w: &WeightVector) -> Self {
        let (mut del, mut rep) = (0.0, 0.0);
        for &v in w.as_slice() {
            if v < 1.0 {
                del += 1.0 - v;
            } else {
                rep += v - 1.0;
            }
        }
        let changed = w
            .as_slice()
            .iter()
            .filter(|v| (**v - 1.0).abs() > L0_TOL)
            .count();
        Self {
            deletions: del,
            replications: rep,
            fraction_of_data: changed as f64 / w.len().max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub samples: usize,
    pub seed: RngSeed,
    pub summaries: SummarySpec,
    /// sampler for non-conjugate models; warmup and chains are taken from
    /// here, the draw count from `samples`
    pub hmc: HmcConfig,
    /// summarize draws from the Laplace approximation instead of HMC
    pub use_laplace: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            samples: 4000,
            seed: RngSeed::new(0, 0xe7a1),
            summaries: SummarySpec::default(),
            hmc: HmcConfig::default(),
            use_laplace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub kl_to_target: KlValue,
    pub summaries: BTreeMap<String, Summary>,
    /// closed-form β marginals when the model is conjugate NIG
    pub nig_marginals: Option<BTreeMap<String, NigMarginal>>,
    pub rounding_gap: Option<RoundingGap>,
    pub manipulation_stats: ManipulationStats,
}

fn draws(problem: &AttackProblem, w: &WeightVector, cfg: &EvalConfig) -> Result<SampleBatch> {
    let model = problem.model.as_ref();
    if let Some(nig) = model.as_nig() {
        return sample_nig_exact(&nig.posterior(&problem.data, w)?, cfg.samples, cfg.seed);
    }
    let use_laplace = cfg.use_laplace || matches!(problem.backend, Backend::Laplace);
    if use_laplace {
        let init = ParamVector::new(model.initial_point(&problem.data))?;
        return laplace_approx(model, &problem.data, w, &init)?.sample(cfg.samples, cfg.seed);
    }
    let hmc = HmcConfig {
        samples: cfg.samples,
        seed: cfg.seed,
        ..cfg.hmc.clone()
    };
    sample_posterior(model, &problem.data, w, &hmc, None)
}

/// Evaluates `w` on `problem`; `relaxed` adds the rounding-gap record.
pub fn evaluate(
    problem: &AttackProblem,
    w: &WeightVector,
    relaxed: Option<&WeightVector>,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    w.check_len(problem.n())?;
    let kl = kl_to_target(problem, w)?;
    let batch = draws(problem, w, cfg)?;
    let names = problem.model.param_names();
    let summaries = posterior_summaries(&batch, &names, &cfg.summaries)?;
    let nig_marginals = match problem.model.as_nig() {
        Some(nig) => {
            let m = nig_marginals(&nig.posterior(&problem.data, w)?)?;
            Some(names.iter().cloned().zip(m).collect())
        }
        None => None,
    };
    let rounding_gap = relaxed.map(|r| rounding_gap(problem, r, w)).transpose()?;
    Ok(EvalReport {
        model: problem.model.name().to_string(),
        kl_to_target: kl,
        summaries,
        nig_marginals,
        rounding_gap,
        manipulation_stats: ManipulationStats::of(w),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossEvalEntry {
    pub model: String,
    pub report: Option<EvalReport>,
    pub error: Option<String>,
}

/// Builds the target for an alternate model on the same data.
pub type TargetBuilder<'a> = dyn Fn(&Arc<dyn Model>, &Dataset) -> Result<Target> + 'a;

/// Re-evaluates a fixed `w` under alternate models, each with its own target
/// from `target_builder`. Failures are recorded per model.
pub fn cross_evaluate(
    w: &WeightVector,
    alternate_models: &[Arc<dyn Model>],
    data: &Dataset,
    target_builder: &TargetBuilder,
    backend: &Backend,
    cfg: &EvalConfig,
) -> Vec<CrossEvalEntry> {
    alternate_models
        .iter()
        .map(|m| {
            let out = target_builder(m, data)
                .and_then(|t| AttackProblem::new(m.clone(), data.clone(), t, backend.clone()))
                .and_then(|p| evaluate(&p, w, None, cfg));
            match out {
                Ok(r) => CrossEvalEntry {
                    model: m.name().to_string(),
                    report: Some(r),
                    error: None,
                },
                Err(e) => CrossEvalEntry {
                    model: m.name().to_string(),
                    report: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Mean of a named parameter from a report, preferring the closed form.
pub fn reported_mean(report: &EvalReport, name: &str) -> Option<f64> {
    report
        .nig_marginals
        .as_ref()
        .and_then(|m| m.get(name).map(|v| v.mean))
        .or_else(|| report.summaries.get(name).map(|s| s.mean))
}

#[cfg(test)]
mod tests {
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    use super::*;
    use crate::models::{gen_synthetic_regression, nig_kl, NigLinReg, SyntheticRegressionSpec};
    use crate::targets::nig_mean_shift_target;

    fn gauss(mean: &[f64], cov: &[f64]) -> GaussianApprox {
        let d = mean.len();
        GaussianApprox::new(
            DVector::from_column_slice(mean),
            DMatrix::from_row_slice(d, d, cov),
        )
        .unwrap()
    }

    #[test]
    fn gaussian_kl_identities() {
        let p = gauss(&[0.3, -1.0], &[1.0, 0.2, 0.2, 0.5]);
        assert!(gaussian_kl(&p, &p).unwrap().abs() < 1e-12);
        let kl = gaussian_kl(&gauss(&[0.0], &[1.0]), &gauss(&[1.0], &[1.0])).unwrap();
        assert!((kl - 0.5).abs() < 1e-12);
        assert!(gaussian_kl(&p, &gauss(&[0.0], &[1.0])).is_err());
    }

    #[test]
    fn gaussian_kl_matches_monte_carlo() {
        let mut rng = RngSeed::new(17, 0).rng();
        let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        let b = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        let p = GaussianApprox::new(
            DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0)),
            &a * a.transpose() + DMatrix::identity(3, 3) * 0.5,
        )
        .unwrap();
        let q = GaussianApprox::new(
            DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0)),
            &b * b.transpose() + DMatrix::identity(3, 3) * 0.5,
        )
        .unwrap();
        let draws = p.sample(1_000_000, RngSeed::new(18, 0)).unwrap();
        let vals: Vec<f64> = draws
            .thetas
            .row_iter()
            .map(|r| {
                let t: Vec<f64> = r.iter().copied().collect();
                p.log_density(&t).unwrap() - q.log_density(&t).unwrap()
            })
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let exact = gaussian_kl(&p, &q).unwrap();
        assert!(
            (mean - exact).abs() < 4.0 * sd / n.sqrt(),
            "mc {mean} exact {exact}"
        );
    }

    proptest! {
        #[test]
        fn gaussian_kl_positive_off_diagonal(shift in 0.01f64..2.0, scale in 1.05f64..3.0) {
            let p = gauss(&[0.0, 0.0], &[1.0, 0.3, 0.3, 1.0]);
            let q = gauss(&[shift, 0.0], &[scale, 0.3, 0.3, 1.0]);
            prop_assert!(gaussian_kl(&p, &q).unwrap() > 0.0);
        }
    }

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("t{j}")).collect()
    }

    #[test]
    fn constant_samples() {
        let batch = SampleBatch::iid(DMatrix::from_element(50, 1, 2.5));
        let s = posterior_summaries(&batch, &names(1), &SummarySpec::default()).unwrap();
        let t0 = &s["t0"];
        assert_eq!(t0.sd, 0.0);
        assert_eq!(t0.tails[0].prob_below, 0.0);
        assert_eq!(t0.intervals[0].lower, 2.5);
    }

    #[test]
    fn symmetric_samples_and_normal_intervals() {
        let g = gauss(&[0.0], &[1.0]);
        let batch = g.sample(100_000, RngSeed::new(5, 1)).unwrap();
        let s = &posterior_summaries(&batch, &names(1), &SummarySpec::default()).unwrap()["t0"];
        assert!((s.tails[0].prob_below - 0.5).abs() < 4.0 * (0.25f64 / 1e5).sqrt());
        // sd of a sample quantile: √(p(1−p)/n) / φ(z)
        let q_sd = (0.025f64 * 0.975 / 1e5).sqrt() / 0.058_440_944;
        assert!((s.intervals[0].lower + 1.959_964).abs() < 4.0 * q_sd);
        assert!((s.intervals[0].upper - 1.959_964).abs() < 4.0 * q_sd);
    }

    #[test]
    fn unknown_parameter_is_rejected() {
        let batch = SampleBatch::iid(DMatrix::from_element(5, 2, 1.0));
        let spec = SummarySpec {
            params: vec!["nope".into()],
            ..Default::default()
        };
        assert!(matches!(
            posterior_summaries(&batch, &names(2), &spec),
            Err(Error::InvalidArgument(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn summaries_are_permutation_invariant(seed in 0u64..10_000) {
            let mut rng = RngSeed::new(seed, 0).rng();
            let vals: Vec<f64> = (0..101).map(|_| rng.random_range(-3.0..3.0)).collect();
            let mut shuffled = vals.clone();
            shuffled.shuffle(&mut rng);
            let a = posterior_summaries(&SampleBatch::iid(DMatrix::from_column_slice(101, 1, &vals)), &names(1), &SummarySpec::default()).unwrap();
            let b = posterior_summaries(&SampleBatch::iid(DMatrix::from_column_slice(101, 1, &shuffled)), &names(1), &SummarySpec::default()).unwrap();
            let (a, b) = (&a["t0"], &b["t0"]);
            prop_assert!((a.mean - b.mean).abs() < 1e-12 && (a.sd - b.sd).abs() < 1e-12);
            prop_assert_eq!(a.tails[0].prob_below, b.tails[0].prob_below);
            prop_assert_eq!(&a.intervals, &b.intervals);
        }

        #[test]
        fn manipulation_stats_sum_to_l1(counts in proptest::collection::vec(0u32..4, 1..20)) {
            let w = WeightVector::from_counts(&counts);
            let m = ManipulationStats::of(&w);
            prop_assert!((m.deletions + m.replications - w.manipulations()).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&m.fraction_of_data));
        }
    }

    fn nig_problem(precision: f64) -> AttackProblem {
        let data = gen_synthetic_regression(&SyntheticRegressionSpec::default()).unwrap();
        let model =
            NigLinReg::new(NigParams::isotropic(2, precision, 2.0, 2.0).unwrap(), true).unwrap();
        let post = model.posterior(&data, &WeightVector::ones(100)).unwrap();
        let target = nig_mean_shift_target(&post, 1, 0.0).unwrap();
        AttackProblem::new(Arc::new(model), data, target, Backend::NigSampler).unwrap()
    }

    #[test]
    fn rounding_gap_matches_direct_kl() {
        let p = nig_problem(0.01);
        let mut relaxed = vec![1.0; 100];
        relaxed[3] = 1.7;
        relaxed[10] = 0.4;
        let relaxed = WeightVector::new(relaxed).unwrap();
        let mut rounded = vec![1.0; 100];
        rounded[3] = 2.0;
        let rounded = WeightVector::integral(rounded).unwrap();
        let gap = rounding_gap(&p, &relaxed, &rounded).unwrap();
        let nig = p.model.as_nig().unwrap();
        let target = p.target.nig().unwrap();
        let direct =
            |w: &WeightVector| nig_kl(target, &nig.posterior(&p.data, w).unwrap()).unwrap();
        assert_eq!(gap.kl_before, direct(&relaxed));
        assert_eq!(gap.kl_after, direct(&rounded));
        assert_eq!(gap.l0_dist, 2);
        assert!((gap.l2_dist - (0.09f64 + 0.36).sqrt()).abs() < 1e-12);

        let same = rounding_gap(&p, &rounded, &rounded).unwrap();
        assert_eq!((same.l0_dist, same.l2_dist), (0, 0.0));
        assert_eq!(same.kl_before, same.kl_after);
    }

    #[test]
    fn nig_tail_probability_matches_draws() {
        let p = nig_problem(0.01);
        let post = p
            .model
            .as_nig()
            .unwrap()
            .posterior(&p.data, &WeightVector::ones(100))
            .unwrap();
        let mut shifted = post.clone();
        shifted.mu[1] = 0.02;
        let m = nig_marginals(&shifted).unwrap();
        let batch = sample_nig_exact(&shifted, 200_000, RngSeed::new(9, 0)).unwrap();
        let frac = batch.thetas.column(1).iter().filter(|v| **v < 0.0).count() as f64 / 2e5;
        let pr = m[1].prob_below_zero;
        assert!((frac - pr).abs() < 4.0 * (pr * (1.0 - pr) / 2e5).sqrt());
        let sd_mc = {
            let c = batch.thetas.column(1);
            let mu = c.mean();
            (c.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (2e5 - 1.0)).sqrt()
        };
        assert!((sd_mc / m[1].sd - 1.0).abs() < 0.02);
    }

    #[test]
    fn cross_evaluation() {
        let p = nig_problem(0.01);
        let mut w = vec![1.0; 100];
        // delete rows that pull the slope up the most
        let x = p.data.x().column(0).clone_owned();
        let y = p.data.y().unwrap().clone_owned();
        let mut order: Vec<usize> = (0..100).collect();
        order.sort_by(|&a, &b| (x[b] * y[b]).total_cmp(&(x[a] * y[a])));
        for &i in &order[..15] {
            w[i] = 0.0;
        }
        let w = WeightVector::integral(w).unwrap();
        let cfg = EvalConfig::default();
        let primary = evaluate(&p, &w, None, &cfg).unwrap();
        let builder = |m: &Arc<dyn Model>, d: &Dataset| -> Result<Target> {
            let post = m
                .as_nig()
                .unwrap()
                .posterior(d, &WeightVector::ones(d.n()))?;
            nig_mean_shift_target(&post, 1, 0.0)
        };
        let same: Vec<Arc<dyn Model>> = vec![p.model.clone()];
        let out = cross_evaluate(&w, &same, &p.data, &builder, &p.backend, &cfg);
        assert_eq!(out[0].report.as_ref().unwrap(), &primary);
        assert!(cross_evaluate(&w, &[], &p.data, &builder, &p.backend, &cfg).is_empty());

        let shift = |prec: f64| {
            let q = nig_problem(prec);
            let base = reported_mean(
                &evaluate(&q, &WeightVector::ones(100), None, &cfg).unwrap(),
                "beta[1]",
            )
            .unwrap();
            let attacked =
                reported_mean(&evaluate(&q, &w, None, &cfg).unwrap(), "beta[1]").unwrap();
            base - attacked
        };
        let (loose, tight) = (shift(0.01), shift(100.0));
        assert!(
            loose > 0.0 && tight.abs() < loose,
            "loose {loose} tight {tight}"
        );
    }
}
