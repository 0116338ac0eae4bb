//! Replicated Monte Carlo experiments: sample, normalize, estimate cumulants,
//! and compare against the limit law of the configured regime.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cumulants::{empirical_cumulants, CumulantEstimate};
use crate::error::{Error, Result};
use crate::gof::{default_ecf_grid, ecf_sup_distance, ks_distance};
use crate::lattice::{LatticeSampler, SampleConfig, TailEstimate};
use crate::perturbations::PerturbationSpec;
use crate::rng::Stream;
use crate::test_functions::TestFunction;
use crate::theory::{
    class2_limit_cumulant, cumulant_at_r, limit_variance_d2, mean_prediction, normalizer, slow_limit_variance,
    stable_scale, variance_asymptotic, variance_exact, Class2Method, Normalizer, Prediction, Regime,
};

/// Limit law whose characteristic function the samples are compared to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum EcfTarget {
    GaussianLimit { variance: f64 },
    /// `exp(-(scale |t|)^α)`.
    StableLimit { alpha: f64, scale: f64 },
    /// `exp(Σ_m κ_m (2πit)^m / m!)` from cumulants `κ_1, κ_2, …`.
    ClassIiLimit { cumulants: Vec<f64> },
}

impl EcfTarget {
    pub fn cf(&self, t: f64) -> Complex64 {
        match self {
            EcfTarget::GaussianLimit { variance } => Complex64::new((-2.0 * PI * PI * variance * t * t).exp(), 0.0),
            EcfTarget::StableLimit { alpha, scale } => Complex64::new((-(scale * t.abs()).powf(*alpha)).exp(), 0.0),
            EcfTarget::ClassIiLimit { cumulants } => {
                let z = Complex64::new(0.0, 2.0 * PI * t);
                let mut term = Complex64::new(1.0, 0.0);
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, k) in cumulants.iter().enumerate() {
                    term = term * z / (i + 1) as f64;
                    acc += term * k;
                }
                acc.exp()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            EcfTarget::GaussianLimit { variance } => *variance >= 0.0,
            EcfTarget::StableLimit { alpha, scale } => *alpha > 0.0 && *alpha <= 2.0 && *scale >= 0.0,
            EcfTarget::ClassIiLimit { cumulants } => !cumulants.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid ECF target {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GofConfig {
    #[serde(default = "yes")]
    pub ks_enabled: bool,
    #[serde(default = "default_ecf_grid")]
    pub ecf_grid: Vec<f64>,
    /// Derived from the regime when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ecf_target: Option<EcfTarget>,
}

fn yes() -> bool {
    true
}

impl Default for GofConfig {
    fn default() -> Self {
        GofConfig { ks_enabled: true, ecf_grid: default_ecf_grid(), ecf_target: None }
    }
}

impl GofConfig {
    fn validate(&self) -> Result<()> {
        if self.ecf_grid.is_empty() || !self.ecf_grid.iter().all(|&t| t > 0.0 && t.is_finite()) {
            return Err(Error::invalid("ECF grid must be nonempty and strictly positive"));
        }
        if let Some(t) = &self.ecf_target {
            t.validate()?;
        }
        Ok(())
    }
}

/// How raw statistics are scaled after centering at `r^d ∫ f`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Normalization {
    /// The regime's theoretical scale.
    #[default]
    Theory,
    /// One over the empirical standard deviation.
    EmpiricalStd,
    Fixed { scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub sample: SampleConfig,
    pub regime: Regime,
    pub replicates: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub gof: GofConfig,
    #[serde(default)]
    pub normalization: Normalization,
    /// Scales for an optional variance scan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn new(sample: SampleConfig, regime: Regime, replicates: u64, master_seed: u64) -> Self {
        ExperimentConfig {
            name: None,
            sample,
            regime,
            replicates,
            master_seed,
            gof: GofConfig::default(),
            normalization: Normalization::Theory,
            scan: None,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn with_normalization(mut self, n: Normalization) -> Self {
        self.normalization = n;
        self
    }

    pub fn with_gof(mut self, gof: GofConfig) -> Self {
        self.gof = gof;
        self
    }

    pub fn with_scan(mut self, rs: Vec<f64>) -> Self {
        self.scan = Some(rs);
        self
    }

    /// Checks the regime hypotheses and every parameter without sampling.
    pub fn validate(&self) -> Result<()> {
        self.sample.validate()?;
        self.regime.check(&self.sample.spec)?;
        if self.replicates == 0 {
            return Err(Error::invalid("replicates must be positive"));
        }
        self.gof.validate()?;
        if let Normalization::Fixed { scale } = self.normalization {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::invalid(format!("fixed scale must be positive, got {scale}")));
            }
        }
        if let Some(rs) = &self.scan {
            if rs.is_empty() || !rs.windows(2).all(|w| w[1] > w[0]) || !(rs[0] > 0.0) {
                return Err(Error::invalid("scan scales must be positive and strictly increasing"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub count: u64,
    pub mean: f64,
    pub variance: f64,
}

impl SampleSummary {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let variance = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        SampleSummary { count: xs.len() as u64, mean, variance }
    }

    pub fn std_error_of_mean(&self) -> f64 {
        (self.variance / self.count as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub ks_distance: Option<f64>,
    pub ecf_sup_distance: Option<f64>,
    pub ecf_target: Option<EcfTarget>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub r: f64,
    pub empirical_variance: f64,
    pub std_error: f64,
    pub exact_variance: Option<f64>,
    /// `r² P̂[|ξ| ≥ η r]`.
    pub tail_proxy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub normalizer: Normalizer,
    pub tail: TailEstimate,
    pub summary: SampleSummary,
    pub cumulants: Vec<CumulantEstimate>,
    pub predictions: Vec<Prediction>,
    pub gof: GofResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<Vec<ScanPoint>>,
    /// Normalized statistics in replicate order.
    #[serde(skip)]
    pub samples: Vec<f64>,
}

/// Raw statistics for replicates `0..n`, in replicate order.
pub fn sample_replicates(sampler: &LatticeSampler, master_seed: u64, n: u64) -> Vec<f64> {
    (0..n).into_par_iter().map(|i| sampler.sample_replicate(master_seed, i)).collect()
}

/// `(T⁰, T¹)` pairs with shared perturbations, in replicate order.
pub fn sample_pairs(sampler: &LatticeSampler, master_seed: u64, n: u64) -> Vec<(f64, f64)> {
    (0..n).into_par_iter().map(|i| sampler.sample_pair(master_seed, i)).collect()
}

fn max_cumulant_order(n: usize) -> usize {
    (1..=4).rev().find(|&m| n >= 10 << m).unwrap_or(0)
}

/// Cumulants of orders up to four, as many as the sample size allows.
pub fn cumulants_up_to_four(xs: &[f64]) -> Result<Vec<CumulantEstimate>> {
    match max_cumulant_order(xs.len()) {
        0 => Ok(Vec::new()),
        m => empirical_cumulants(xs, m),
    }
}

fn keep_supported(p: Result<Prediction>) -> Result<Option<Prediction>> {
    match p {
        Ok(p) => Ok(Some(p)),
        Err(Error::Unsupported(_)) | Err(Error::Expansion(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Theory values relevant to the experiment's regime.
pub fn regime_predictions(cfg: &ExperimentConfig) -> Result<Vec<Prediction>> {
    let s = &cfg.sample;
    let (f, spec, r) = (&s.f, &s.spec, s.r);
    let mut out = vec![mean_prediction(f, r)];
    out.extend(keep_supported(variance_exact(f, spec, r, None))?);
    if spec.is_degenerate() {
        return Ok(out);
    }
    if let Some(e) = cfg.regime.check(spec)? {
        out.extend(keep_supported(variance_asymptotic(f, &e, r))?);
    }
    match cfg.regime {
        Regime::GaussianD2Bounded => out.push(limit_variance_d2(f, spec)?),
        Regime::Stable => {
            let e = spec.expansion()?;
            out.push(stable_scale(f, e.alpha, e.c)?);
        }
        Regime::ClassII => {
            let e = spec.expansion()?;
            for m in [2, 4] {
                out.extend(keep_supported(class2_limit_cumulant(f, e.c, m, Class2Method::ClosedForm))?.or(
                    keep_supported(class2_limit_cumulant(f, e.c, m, Class2Method::Quadrature))?,
                ));
                out.extend(keep_supported(cumulant_at_r(f, spec, m, r))?);
            }
        }
        _ => {}
    }
    Ok(out)
}

/// The regime's limit law for the normalized statistic, when it has one.
pub fn regime_target(cfg: &ExperimentConfig) -> Result<Option<EcfTarget>> {
    let s = &cfg.sample;
    let (f, spec) = (&s.f, &s.spec);
    if spec.is_degenerate() {
        return Ok(None);
    }
    Ok(match (cfg.normalization, cfg.regime) {
        (Normalization::EmpiricalStd, _) => Some(EcfTarget::GaussianLimit { variance: 1.0 }),
        (_, Regime::GaussianD3 | Regime::GaussianD2Unbounded) => Some(EcfTarget::GaussianLimit { variance: 1.0 }),
        (_, Regime::GaussianD2Bounded) => {
            let v = limit_variance_d2(f, spec)?.value;
            Some(EcfTarget::GaussianLimit { variance: fixed_rescale(cfg.normalization).powi(2) * v })
        }
        (_, Regime::GaussianSlow) => {
            let e = spec.expansion()?;
            let v = slow_limit_variance(f, &e)?.exact;
            Some(EcfTarget::GaussianLimit { variance: v })
        }
        (_, Regime::Stable) => {
            let e = spec.expansion()?;
            Some(EcfTarget::StableLimit { alpha: e.alpha, scale: stable_scale(f, e.alpha, e.c)?.value })
        }
        (_, Regime::ClassII) => {
            let e = spec.expansion()?;
            let mut ks = vec![0.0];
            for m in 2..=6 {
                let k = match class2_limit_cumulant(f, e.c, m, Class2Method::ClosedForm) {
                    Ok(p) => p.value,
                    Err(_) => class2_limit_cumulant(f, e.c, m, Class2Method::Quadrature)?.value,
                };
                ks.push(k);
            }
            Some(EcfTarget::ClassIiLimit { cumulants: ks })
        }
    })
}

fn fixed_rescale(n: Normalization) -> f64 {
    match n {
        Normalization::Fixed { scale } => scale,
        _ => 1.0,
    }
}

/// Runs `cfg.replicates` independent replicates and evaluates the regime's
/// predictions and goodness-of-fit distances. Deterministic in
/// `cfg.master_seed` regardless of the thread count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let sampler = LatticeSampler::new(cfg.sample.clone())?;
    let s = &cfg.sample;
    let raw = sample_replicates(&sampler, cfg.master_seed, cfg.replicates);

    let norm = if s.spec.is_degenerate() {
        Normalizer { center: mean_prediction(&s.f, s.r).value, scale: 1.0 }
    } else {
        normalizer(cfg.regime, &s.spec, &s.f, s.r)?
    };
    let norm = match cfg.normalization {
        Normalization::Theory => norm,
        Normalization::Fixed { scale } => Normalizer { center: norm.center, scale },
        Normalization::EmpiricalStd => {
            let v = SampleSummary::of(&raw).variance;
            if !(v > 0.0) {
                return Err(Error::invalid("empirical variance vanishes; cannot normalize"));
            }
            Normalizer { center: norm.center, scale: v.powf(-0.5) }
        }
    };
    let samples: Vec<f64> = raw.iter().map(|&t| norm.apply(t)).collect();
    let summary = SampleSummary::of(&samples);
    let cumulants = cumulants_up_to_four(&samples)?;
    let predictions = regime_predictions(cfg)?;

    let target = match &cfg.gof.ecf_target {
        Some(t) => Some(t.clone()),
        None => regime_target(cfg)?,
    };
    let ks = match (&target, cfg.gof.ks_enabled) {
        (Some(EcfTarget::GaussianLimit { variance }), true) if *variance > 0.0 => {
            Some(ks_distance(&samples, 0.0, *variance)?)
        }
        _ => None,
    };
    let ecf = match &target {
        Some(t) => Some(ecf_sup_distance(&samples, |x| t.cf(x), &cfg.gof.ecf_grid)?),
        None => None,
    };
    let scan = match &cfg.scan {
        Some(rs) => Some(variance_scan(cfg, rs)?),
        None => None,
    };
    Ok(ExperimentResult {
        config: cfg.clone(),
        normalizer: norm,
        tail: sampler.tail(),
        summary,
        cumulants,
        predictions,
        gof: GofResult { ks_distance: ks, ecf_sup_distance: ecf, ecf_target: target },
        scan,
        samples,
    })
}

/// Smallest `η` such that the autocorrelation of `f` along the first axis
/// stays below half its peak for `|x| ≥ η/2`.
pub fn riemann_lebesgue_eta(f: &TestFunction) -> Result<f64> {
    let d = f.dimension();
    let at = |x: f64| {
        let mut v = vec![0.0; d];
        v[0] = x;
        f.autocorrelation(&v)
    };
    let peak = at(0.0)?;
    if peak == 0.0 {
        return Err(Error::invalid("null test function has no Riemann-Lebesgue scale"));
    }
    let reach = 2.0 * f.support_radius();
    let steps = 2000;
    let mut last_above = 0.0;
    for i in 0..=steps {
        let x = reach * i as f64 / steps as f64;
        if at(x)?.abs() > peak / 2.0 {
            last_above = x;
        }
    }
    Ok(2.0 * (last_above + reach / steps as f64))
}

/// Empirical and exact variance across scales `rs`, with the tail proxy
/// `r² P̂[|ξ| ≥ η r]`.
pub fn variance_scan(cfg: &ExperimentConfig, rs: &[f64]) -> Result<Vec<ScanPoint>> {
    if rs.is_empty() || !rs.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::invalid("scan scales must be strictly increasing"));
    }
    let spec = &cfg.sample.spec;
    let eta = match riemann_lebesgue_eta(&cfg.sample.f) {
        Ok(e) => Some(e),
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };
    let norms = perturbation_norms(spec, cfg.replicates.max(100_000), cfg.master_seed);
    let mut out = Vec::with_capacity(rs.len());
    for &r in rs {
        let sc = cfg.sample.clone().with_r(r);
        let sampler = LatticeSampler::new(sc)?;
        let xs = sample_replicates(&sampler, cfg.master_seed, cfg.replicates);
        let (empirical_variance, std_error) = match cumulants_up_to_four(&xs)?.get(1) {
            Some(k2) => (k2.value, k2.std_error),
            None => (SampleSummary::of(&xs).variance, f64::NAN),
        };
        let exact = keep_supported(variance_exact(&cfg.sample.f, spec, r, None))?.map(|p| p.value);
        let tail_proxy = eta.map(|e| {
            let hits = norms.iter().filter(|&&n| n >= e * r).count();
            r * r * hits as f64 / norms.len() as f64
        });
        out.push(ScanPoint { r, empirical_variance, std_error, exact_variance: exact, tail_proxy });
    }
    Ok(out)
}

fn perturbation_norms(spec: &PerturbationSpec, n: u64, seed: u64) -> Vec<f64> {
    let mut stream = Stream::auxiliary(seed, u64::MAX);
    let mut buf = vec![0.0; spec.dimension()];
    (0..n)
        .map(|_| {
            spec.sample_into(&mut stream, &mut buf);
            buf.iter().map(|v| v * v).sum::<f64>().sqrt()
        })
        .collect()
}

/// Summary of matched non-stationary/stationary replicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryComparison {
    pub replicates: u64,
    /// `mean (T⁰ - T¹)²`.
    pub mean_sq_diff: f64,
    pub variance_t0: f64,
    /// `mean T¹ - r^d ∫ f` and its standard error.
    pub stationary_bias: f64,
    pub stationary_bias_se: f64,
}

pub fn stationary_comparison(sample: &SampleConfig, replicates: u64, master_seed: u64) -> Result<StationaryComparison> {
    if replicates < 2 {
        return Err(Error::InsufficientSamples { required: 2, got: replicates as usize });
    }
    let sampler = LatticeSampler::new(sample.clone())?;
    let pairs = sample_pairs(&sampler, master_seed, replicates);
    let center = mean_prediction(&sample.f, sample.r).value;
    let n = replicates as f64;
    let mean_sq_diff = pairs.iter().map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n;
    let t0: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let t1: Vec<f64> = pairs.iter().map(|p| p.1 - center).collect();
    let s1 = SampleSummary::of(&t1);
    Ok(StationaryComparison {
        replicates,
        mean_sq_diff,
        variance_t0: SampleSummary::of(&t0).variance,
        stationary_bias: s1.mean,
        stationary_bias_se: s1.std_error_of_mean(),
    })
}

/// `r^{-1} Σ_{x∈Z} |f'(x/r)|^α` (d = 1), summed until the terms vanish.
pub fn riemann_sum_deriv_power(f: &TestFunction, alpha: f64, r: f64) -> Result<f64> {
    if f.dimension() != 1 {
        return Err(Error::invalid("Riemann sum of |f'|^α needs d = 1"));
    }
    let reach = (f.support_radius() * r).ceil() as i64;
    let mut total = 0.0;
    for x in -reach..=reach {
        total += f.deriv(&[x as f64 / r], 0)?.abs().powf(alpha);
    }
    Ok(total / r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::TruncationPolicy;

    fn bump(d: usize) -> TestFunction {
        TestFunction::gaussian_bump(1.0, d).unwrap()
    }

    #[test]
    fn point_mass_baseline() {
        let spec = PerturbationSpec::point_mass(vec![0.0]).unwrap();
        let sc = SampleConfig::new(12.0, spec, bump(1)).unwrap();
        let cfg = ExperimentConfig::new(sc, Regime::ClassII, 200, 1);
        let res = run_experiment(&cfg).unwrap();
        assert!(res.samples.iter().all(|v| v.abs() < 1e-8));
        assert!(res.cumulants[1].value.abs() < 1e-15);
        assert!(res.gof.ecf_target.is_none());
    }

    #[test]
    fn determinism_across_thread_counts() {
        let spec = PerturbationSpec::cauchy(1.0 / (2.0 * PI), 1).unwrap();
        let sc = SampleConfig::new(20.0, spec, bump(1)).unwrap();
        let cfg = ExperimentConfig::new(sc, Regime::ClassII, 400, 99);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| run_experiment(&cfg)).unwrap();
        let b = three.install(|| run_experiment(&cfg)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.samples.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn theory_normalization_gives_unit_variance_in_d3() {
        let spec = PerturbationSpec::gaussian(1.0, 3).unwrap();
        let sc = SampleConfig::new(4.0, spec, bump(3)).unwrap().with_truncation(TruncationPolicy::fixed(6.0, 1e-4));
        let cfg = ExperimentConfig::new(sc, Regime::GaussianD3, 2000, 5);
        let res = run_experiment(&cfg).unwrap();
        let k2 = res.cumulants[1];
        assert!((k2.value - 1.0).abs() < 3.0 * k2.std_error + 0.01, "{k2:?}");
        assert!(res.summary.mean.abs() < 4.0 * res.summary.std_error_of_mean());
    }

    #[test]
    fn stationary_centering_is_exact() {
        for (d, r) in [(1usize, 7.0), (2, 5.0)] {
            let spec = PerturbationSpec::gaussian(0.5, d).unwrap();
            let sc = SampleConfig::new(r, spec, bump(d)).unwrap().stationary(true);
            let cmp = stationary_comparison(&sc, 3000, 11).unwrap();
            assert!(cmp.stationary_bias.abs() < 3.0 * cmp.stationary_bias_se, "{cmp:?}");
        }
    }

    #[test]
    fn riemann_sum_examples() {
        let f = bump(1);
        let exact = f.lp_norm_of_deriv(1.5).unwrap();
        let s = riemann_sum_deriv_power(&f, 1.5, 100.0).unwrap();
        assert!(((s - exact) / exact).abs() < 0.01);
    }

    #[test]
    fn eta_for_gaussian_bump() {
        // Autocorrelation ∝ e^{-x²/2}: half peak at x = √(2 ln 2).
        let eta = riemann_lebesgue_eta(&bump(1)).unwrap();
        let want = 2.0 * (2.0 * 2f64.ln()).sqrt();
        assert!((eta - want).abs() < 0.02, "{eta}");
    }

    #[test]
    fn scan_examples() {
        let spec = PerturbationSpec::point_mass(vec![0.0]).unwrap();
        let sc = SampleConfig::new(5.0, spec, bump(1)).unwrap();
        let cfg = ExperimentConfig::new(sc, Regime::ClassII, 200, 3);
        for p in variance_scan(&cfg, &[5.0, 10.0]).unwrap() {
            assert_eq!(p.empirical_variance, 0.0);
            assert_eq!(p.exact_variance, Some(0.0));
        }

        let spec = PerturbationSpec::cauchy(1.0, 2).unwrap();
        let sc = SampleConfig::new(4.0, spec, bump(2)).unwrap();
        let cfg = ExperimentConfig::new(sc, Regime::GaussianD2Unbounded, 2000, 4);
        for p in variance_scan(&cfg, &[2.0, 4.0, 8.0]).unwrap() {
            let exact = p.exact_variance.unwrap();
            assert!((p.empirical_variance - exact).abs() < 3.0 * p.std_error, "{p:?}");
            assert!(p.tail_proxy.unwrap() > 0.0);
        }

        let spec = PerturbationSpec::gaussian(1.0, 3).unwrap();
        let f = bump(3);
        let v: Vec<f64> = [10.0, 20.0, 40.0].iter().map(|&r| variance_exact(&f, &spec, r, None).unwrap().value).collect();
        assert!(v[1] / v[0] >= 1.9 && v[2] / v[1] >= 1.9);
    }

    #[test]
    fn validation_errors() {
        let spec = PerturbationSpec::gaussian(1.0, 3).unwrap();
        let sc = SampleConfig::new(4.0, spec, bump(3)).unwrap();
        let cfg = ExperimentConfig::new(sc.clone(), Regime::GaussianD2Bounded, 10, 0);
        assert!(matches!(cfg.validate(), Err(Error::Hypothesis { item: 2, .. })));
        let mut cfg = ExperimentConfig::new(sc, Regime::GaussianD3, 10, 0);
        cfg.gof.ecf_grid = vec![];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn class_ii_target_cf_matches_gaussian_when_only_k2() {
        let t = EcfTarget::ClassIiLimit { cumulants: vec![0.0, 0.3] };
        let g = EcfTarget::GaussianLimit { variance: 0.3 };
        for x in [0.1, 0.5, 1.3] {
            assert!((t.cf(x) - g.cf(x)).norm() < 1e-14);
        }
    }

    #[test]
    fn config_serde_round_trip() {
        let spec = PerturbationSpec::sym_stable(1.5, 1.0, 1).unwrap();
        let sc = SampleConfig::new(30.0, spec, bump(1)).unwrap();
        let cfg = ExperimentConfig::new(sc, Regime::Stable, 10, 7)
            .named("x")
            .with_normalization(Normalization::Fixed { scale: 2.0 })
            .with_scan(vec![10.0, 20.0]);
        let s = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cfg);
    }
}
