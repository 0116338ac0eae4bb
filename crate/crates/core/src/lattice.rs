//! Realizations of the perturbed lattice and the linear statistic
//! `T_r(f) = Σ_x f((x + ξ_x [+ U]) / r)`.
//!
//! Sites inside the sup-norm window `|x|_∞ ≤ W` are perturbed and summed
//! exactly. In one dimension, laws with a closed-form distribution function
//! can also be sampled exactly beyond the window: a far site matters only if
//! it lands near the origin, which is a rare event that is simulated directly
//! with geometric skipping over dyadic shells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturbations::{AbsMoment, Family, PerturbationSpec};
use crate::rng::Stream;
use crate::test_functions::{Shape, TestFunction};

pub const DEFAULT_POINT_BUDGET: u64 = 100_000_000;
pub const DEFAULT_TAIL_TOL: f64 = 1e-6;

/// Grid used when optimizing the split between "ξ is small" and "ξ is large"
/// in the tail bound.
const THETA_STEPS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TruncationMode {
    /// Window `|x|_∞ ≤ k·r`.
    FixedMultiple { k: f64 },
    /// Window `|x|_∞ ≤ k·r^gamma`.
    PowerLaw { gamma: f64, k: f64 },
}

fn default_budget() -> u64 {
    DEFAULT_POINT_BUDGET
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    #[serde(flatten)]
    pub mode: TruncationMode,
    pub tail_tol: f64,
    /// When false the tail estimate is only reported, never enforced.
    #[serde(default = "yes")]
    pub enforce: bool,
    #[serde(default = "default_budget")]
    pub point_budget: u64,
}

impl TruncationPolicy {
    pub fn fixed(k: f64, tail_tol: f64) -> Self {
        TruncationPolicy {
            mode: TruncationMode::FixedMultiple { k },
            tail_tol,
            enforce: true,
            point_budget: DEFAULT_POINT_BUDGET,
        }
    }

    pub fn power_law(gamma: f64, k: f64, tail_tol: f64) -> Self {
        TruncationPolicy {
            mode: TruncationMode::PowerLaw { gamma, k },
            tail_tol,
            enforce: true,
            point_budget: DEFAULT_POINT_BUDGET,
        }
    }

    pub fn report_only(mut self) -> Self {
        self.enforce = false;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.point_budget = budget;
        self
    }

    /// Default policy for a law at scale `r`.
    ///
    /// Light tails use `8r`. One-dimensional laws with `1 < α < 2` use the
    /// `k r^γ` window with γ from [`choose_gamma`] (clipped to 1.5); Cauchy in
    /// one dimension uses `8r` plus exact far-field sampling. Heavy tails in
    /// higher dimension use `32r` and only report their tail estimate.
    pub fn default_for(spec: &PerturbationSpec) -> Self {
        let d = spec.dimension();
        if !spec.is_heavy_tailed() {
            return Self::fixed(8.0, DEFAULT_TAIL_TOL);
        }
        if d >= 2 {
            return Self::fixed(32.0, DEFAULT_TAIL_TOL).report_only();
        }
        let alpha = spec.tail_index();
        match choose_gamma(alpha) {
            Ok(choice) => Self::power_law(choice.gamma.min(1.5), 16.0, 0.05),
            Err(_) if far_field_supported(spec) => Self::fixed(8.0, DEFAULT_TAIL_TOL),
            Err(_) => Self::fixed(32.0, DEFAULT_TAIL_TOL).report_only(),
        }
    }

    /// Half-width `W` of the window `|x|_∞ ≤ W` at scale `r`.
    pub fn half_width(&self, r: f64) -> f64 {
        let w = match self.mode {
            TruncationMode::FixedMultiple { k } => k * r,
            TruncationMode::PowerLaw { gamma, k } => k * r.powf(gamma),
        };
        w.floor().max(0.0)
    }

    fn validate(&self) -> Result<()> {
        let (k, gamma) = match self.mode {
            TruncationMode::FixedMultiple { k } => (k, 1.0),
            TruncationMode::PowerLaw { gamma, k } => (k, gamma),
        };
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::invalid(format!("window multiple must be positive, got {k}")));
        }
        if !(gamma >= 1.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("window exponent must be >= 1, got {gamma}")));
        }
        if !(self.tail_tol > 0.0) {
            return Err(Error::invalid("tail_tol must be positive"));
        }
        Ok(())
    }
}

/// Whether sites beyond the window are sampled exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FarField {
    /// On for heavy-tailed one-dimensional laws that support it.
    #[default]
    Auto,
    On,
    Off,
}

fn far_field_supported(spec: &PerturbationSpec) -> bool {
    spec.dimension() == 1
        && spec.coordinate_survival(1.0).is_some()
        && spec.interval_mass_1d(0.0, 1.0).is_some()
        && spec.density_1d(0.0).is_some()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SampleConfigRecord", into = "SampleConfigRecord")]
pub struct SampleConfig {
    pub dimension: usize,
    pub r: f64,
    pub spec: PerturbationSpec,
    pub f: TestFunction,
    /// Include the common uniform shift `U` on `[-1/2, 1/2]^d`.
    pub stationary: bool,
    pub truncation: TruncationPolicy,
    pub far_field: FarField,
}

/// Serialized form of [`SampleConfig`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfigRecord {
    pub dimension: usize,
    pub r: f64,
    pub perturbation: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_expansion: Option<crate::perturbations::ExpansionInfo>,
    pub test_function: Shape,
    #[serde(default)]
    pub stationary: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationPolicy>,
    #[serde(default)]
    pub far_field: FarField,
}

impl TryFrom<SampleConfigRecord> for SampleConfig {
    type Error = Error;

    fn try_from(rec: SampleConfigRecord) -> Result<Self> {
        let mut spec = PerturbationSpec::new(rec.perturbation, rec.dimension)?;
        if let Some(info) = rec.declared_expansion {
            spec = spec.with_declared_expansion(info)?;
        }
        let f = TestFunction::new(rec.test_function, rec.dimension)?;
        let mut cfg = SampleConfig::new(rec.r, spec, f)?;
        cfg.stationary = rec.stationary;
        cfg.far_field = rec.far_field;
        if let Some(t) = rec.truncation {
            t.validate()?;
            cfg.truncation = t;
        }
        Ok(cfg)
    }
}

impl From<SampleConfig> for SampleConfigRecord {
    fn from(cfg: SampleConfig) -> Self {
        let declared = cfg.spec.declared_expansion();
        SampleConfigRecord {
            dimension: cfg.dimension,
            r: cfg.r,
            perturbation: cfg.spec.family().clone(),
            declared_expansion: declared,
            test_function: cfg.f.shape().clone(),
            stationary: cfg.stationary,
            truncation: Some(cfg.truncation),
            far_field: cfg.far_field,
        }
    }
}

impl SampleConfig {
    /// Non-stationary configuration with the default truncation for `spec`.
    pub fn new(r: f64, spec: PerturbationSpec, f: TestFunction) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid(format!("scale r must be positive, got {r}")));
        }
        if spec.dimension() != f.dimension() {
            return Err(Error::DimensionMismatch { expected: spec.dimension(), got: f.dimension() });
        }
        Ok(SampleConfig {
            dimension: spec.dimension(),
            r,
            truncation: TruncationPolicy::default_for(&spec),
            spec,
            f,
            stationary: false,
            far_field: FarField::Auto,
        })
    }

    pub fn with_truncation(mut self, t: TruncationPolicy) -> Self {
        self.truncation = t;
        self
    }

    pub fn stationary(mut self, yes: bool) -> Self {
        self.stationary = yes;
        self
    }

    pub fn with_far_field(mut self, mode: FarField) -> Self {
        self.far_field = mode;
        self
    }

    pub fn with_r(mut self, r: f64) -> Self {
        self.r = r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::invalid(format!("scale r must be positive, got {}", self.r)));
        }
        if self.spec.dimension() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, got: self.spec.dimension() });
        }
        if self.f.dimension() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, got: self.f.dimension() });
        }
        self.truncation.validate()
    }

    pub fn half_width(&self) -> f64 {
        self.truncation.half_width(self.r)
    }

    /// Lattice points per replicate inside the window.
    pub fn window_points(&self) -> f64 {
        (2.0 * self.half_width() + 1.0).powi(self.dimension as i32)
    }

    fn far_field_enabled(&self) -> bool {
        match self.far_field {
            FarField::On => true,
            FarField::Off => false,
            FarField::Auto => self.spec.is_heavy_tailed() && far_field_supported(&self.spec),
        }
    }
}

/// Which bound produced a tail estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    /// Split on the size of ξ (Markov or exact survival) plus decay of f.
    Split,
    /// Density of ξ near the origin times the mass of f.
    Density,
    /// Residual after exact far-field sampling.
    FarField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub bound: f64,
    pub method: TailMethod,
}

#[derive(Debug, Clone)]
struct Shell {
    /// Sites with `lo < |x| ≤ hi`.
    lo: f64,
    hi: f64,
    /// Landing probability of the innermost site, an upper bound over the shell.
    q: f64,
}

#[derive(Debug, Clone)]
struct FarPlan {
    /// Landing interval `[-landing, landing]`.
    landing: f64,
    /// Explicit window half-width, at least twice the landing radius.
    inner: f64,
    shells: Vec<Shell>,
}

/// A validated configuration ready to draw replicates.
#[derive(Debug, Clone)]
pub struct LatticeSampler {
    cfg: SampleConfig,
    half_width: i64,
    inv_r: f64,
    far: Option<FarPlan>,
    tail: TailEstimate,
}

impl LatticeSampler {
    pub fn new(cfg: SampleConfig) -> Result<Self> {
        cfg.validate()?;
        let (far, tail) = if cfg.far_field_enabled() {
            if !far_field_supported(&cfg.spec) {
                return Err(Error::Unsupported(
                    "far-field sampling needs d = 1 and a closed-form distribution function".into(),
                ));
            }
            let (plan, tail) = plan_far_field(&cfg)?;
            (Some(plan), tail)
        } else {
            (None, window_tail(&cfg))
        };
        if cfg.truncation.enforce && !(tail.bound <= cfg.truncation.tail_tol) {
            return Err(Error::TailTolerance { estimate: tail.bound, tolerance: cfg.truncation.tail_tol });
        }
        let half_width = far.as_ref().map_or(cfg.half_width(), |p| p.inner);
        let points = (2.0 * half_width + 1.0).powi(cfg.dimension as i32);
        let budget = cfg.truncation.point_budget;
        if !(points <= budget as f64) {
            return Err(Error::PointBudget {
                required: points.min(u64::MAX as f64) as u64,
                budget,
            });
        }
        let half_width = half_width as i64;
        let inv_r = 1.0 / cfg.r;
        Ok(LatticeSampler { cfg, half_width, inv_r, far, tail })
    }

    pub fn config(&self) -> &SampleConfig {
        &self.cfg
    }

    pub fn tail(&self) -> TailEstimate {
        self.tail
    }

    /// Sites perturbed explicitly per replicate.
    pub fn inner_half_width(&self) -> i64 {
        self.half_width
    }

    /// One draw of the statistic; the shift `U` (if stationary) is the first
    /// draw taken from `stream`.
    pub fn sample(&self, stream: &mut Stream) -> f64 {
        let d = self.cfg.dimension;
        let mut shift = vec![0.0; d];
        if self.cfg.stationary {
            for s in shift.iter_mut() {
                *s = stream.uniform() - 0.5;
            }
        }
        let mut out = [0.0];
        self.accumulate(stream, &[&shift], &mut out);
        out[0]
    }

    /// Replicate `index` under `master_seed`: perturbations come from the
    /// replicate stream and the shift from its auxiliary stream, so the
    /// stationary and non-stationary variants share ξ.
    pub fn sample_replicate(&self, master_seed: u64, index: u64) -> f64 {
        let shift = self.replicate_shift(master_seed, index);
        let mut out = [0.0];
        self.accumulate(&mut Stream::new(master_seed, index), &[&shift], &mut out);
        out[0]
    }

    /// `(T⁰, T¹)` for replicate `index` with shared perturbations.
    pub fn sample_pair(&self, master_seed: u64, index: u64) -> (f64, f64) {
        let d = self.cfg.dimension;
        let zero = vec![0.0; d];
        let mut aux = Stream::auxiliary(master_seed, index);
        let shift: Vec<f64> = (0..d).map(|_| aux.uniform() - 0.5).collect();
        let mut out = [0.0, 0.0];
        self.accumulate(&mut Stream::new(master_seed, index), &[&zero, &shift], &mut out);
        (out[0], out[1])
    }

    fn replicate_shift(&self, master_seed: u64, index: u64) -> Vec<f64> {
        let d = self.cfg.dimension;
        if self.cfg.stationary {
            let mut aux = Stream::auxiliary(master_seed, index);
            (0..d).map(|_| aux.uniform() - 0.5).collect()
        } else {
            vec![0.0; d]
        }
    }

    /// Adds `Σ f((x + ξ_x + s)/r)` to `out[j]` for each shift `s = shifts[j]`,
    /// with one shared draw of ξ.
    fn accumulate(&self, stream: &mut Stream, shifts: &[&[f64]], out: &mut [f64]) {
        let d = self.cfg.dimension;
        let w = self.half_width;
        let spec = &self.cfg.spec;
        let f = &self.cfg.f;
        let inv_r = self.inv_r;
        let mut idx = vec![0i64; d];
        let mut xi = vec![0.0; d];
        let mut y = vec![0.0; d];
        // Sites are visited shell by shell from the origin, so a larger
        // window extends the draws of a smaller one on the same stream.
        for n in 0..=w {
            visit_shell(n, &mut idx, |x| {
                spec.sample_into(stream, &mut xi);
                for (s, o) in shifts.iter().zip(out.iter_mut()) {
                    for i in 0..d {
                        y[i] = (x[i] as f64 + xi[i] + s[i]) * inv_r;
                    }
                    *o += f.eval(&y);
                }
            });
        }
        if let Some(plan) = &self.far {
            self.far_field(plan, stream, shifts, out);
        }
    }

    fn far_field(&self, plan: &FarPlan, stream: &mut Stream, shifts: &[&[f64]], out: &mut [f64]) {
        let spec = &self.cfg.spec;
        let f = &self.cfg.f;
        let a = plan.landing;
        for shell in &plan.shells {
            let log_keep = (-shell.q).ln_1p();
            for sign in [1.0, -1.0] {
                let mut pos = shell.lo;
                loop {
                    // Failures before the next success of a Bernoulli(q) chain.
                    let skip = (stream.open01().ln() / log_keep).floor();
                    pos += skip + 1.0;
                    if !(pos <= shell.hi) {
                        break;
                    }
                    let x = sign * pos;
                    let p = spec.interval_mass_1d(-a - x, a - x).expect("far field needs CDF");
                    if stream.uniform() * shell.q >= p {
                        continue;
                    }
                    // Landing point x + ξ given that it falls in [-a, a].
                    let peak = spec.density_1d(pos - a).expect("far field needs density");
                    let y = loop {
                        let y = a * (2.0 * stream.uniform() - 1.0);
                        let dens = spec.density_1d(y - x).expect("far field needs density");
                        if stream.uniform() * peak < dens {
                            break y;
                        }
                    };
                    for (s, o) in shifts.iter().zip(out.iter_mut()) {
                        *o += f.eval(&[(y + s[0]) * self.inv_r]);
                    }
                }
            }
        }
    }
}

/// Calls `visit` on every `x ∈ Z^d` with `|x|_∞ = n`, in a fixed order.
fn visit_shell(n: i64, idx: &mut [i64], mut visit: impl FnMut(&[i64])) {
    let d = idx.len();
    if n == 0 {
        idx.fill(0);
        visit(idx);
        return;
    }
    let head = d - 1;
    idx[..head].fill(-n);
    loop {
        if idx[..head].iter().any(|v| v.abs() == n) {
            for last in -n..=n {
                idx[head] = last;
                visit(idx);
            }
        } else {
            idx[head] = -n;
            visit(idx);
            idx[head] = n;
            visit(idx);
        }
        let mut i = head;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < n {
                idx[i] += 1;
                break;
            }
            idx[i] = -n;
        }
    }
}

/// `Σ_x f((x + ξ_x [+ U]) / r)` for one realization drawn from `stream`.
pub fn sample_statistic(cfg: &SampleConfig, stream: &mut Stream) -> Result<f64> {
    Ok(LatticeSampler::new(cfg.clone())?.sample(stream))
}

/// Upper bound on `E|Σ_{unsampled sites} f((x + ξ_x)/r)|`.
pub fn estimate_tail(cfg: &SampleConfig) -> Result<TailEstimate> {
    cfg.validate()?;
    if cfg.far_field_enabled() && far_field_supported(&cfg.spec) {
        Ok(plan_far_field(cfg)?.1)
    } else {
        Ok(window_tail(cfg))
    }
}

/// Lattice points `z ∈ Z^d + y` with `n ≤ |z|_∞ < n + 1`, bounded uniformly in `y`.
fn shifted_shell_count(n: f64, d: i32) -> f64 {
    (2.0 * n + 3.0).powi(d) - (2.0 * n - 1.0).max(0.0).powi(d)
}

/// Lattice points with `|x|_∞ = n`.
fn shell_count(n: f64, d: i32) -> f64 {
    if n == 0.0 {
        1.0
    } else {
        (2.0 * n + 1.0).powi(d) - (2.0 * n - 1.0).powi(d)
    }
}

/// `sup_y Σ_x |f((x + y)/r)| 1[|x + y|_∞ ≥ a]`.
fn landing_overflow(f: &TestFunction, r: f64, a: f64, d: i32) -> f64 {
    let mut total = 0.0;
    let mut n = a.floor().max(0.0);
    loop {
        let env = f.envelope(n / r);
        if env < 1e-300 || (total > 0.0 && shifted_shell_count(n, d) * env < 1e-17 * total) {
            break;
        }
        total += shifted_shell_count(n, d) * env;
        n += 1.0;
    }
    total
}

struct TailLaw<'a> {
    spec: &'a PerturbationSpec,
    moments: Vec<(f64, f64)>,
}

impl<'a> TailLaw<'a> {
    fn new(spec: &'a PerturbationSpec) -> Self {
        let idx = spec.tail_index();
        let betas: Vec<f64> = if idx.is_finite() {
            (1..=24).map(|j| idx * j as f64 / 25.0).collect()
        } else {
            (1..=120).map(|j| 0.5 * j as f64).collect()
        };
        let moments = betas
            .into_iter()
            .filter_map(|b| match spec.sup_norm_moment_bound(b) {
                AbsMoment::Finite(m) if m.is_finite() => Some((b, m)),
                _ => None,
            })
            .collect();
        TailLaw { spec, moments }
    }

    /// Upper bound on `P(|ξ|_∞ > t)`.
    fn sup_survival(&self, t: f64) -> f64 {
        let mut best = 1.0f64;
        if let Some(p) = self.spec.sup_norm_survival(t) {
            best = best.min(p);
        }
        if t > 0.0 {
            for &(b, m) in &self.moments {
                best = best.min(m / t.powf(b));
            }
        }
        best
    }

    /// Upper bound on `P(|ξ_1| > t)` for one coordinate.
    fn coordinate_survival(&self, t: f64) -> f64 {
        let mut best = 1.0f64;
        if let Some(p) = self.spec.coordinate_survival(t) {
            best = best.min(p);
        }
        if t > 0.0 {
            for &(b, _) in &self.moments {
                if let AbsMoment::Finite(m) = self.spec.coordinate_moment_exact(b) {
                    best = best.min(m / t.powf(b));
                }
            }
        }
        best
    }

    /// `min_{β>d} M_β 2^β Σ_{n>N} |shell(n)| n^{-β}`, summing the Markov tail
    /// `P(|ξ|_∞ > n/2)` over all shells beyond `N`.
    fn markov_remainder(&self, big_n: f64, d: i32) -> f64 {
        let df = d as f64;
        let mut best = f64::INFINITY;
        for &(b, m) in &self.moments {
            if b > df + 1e-9 {
                let v = m * 2f64.powf(b) * 2.0 * df * 3f64.powi(d - 1) * big_n.powf(df - b) / (b - df);
                best = best.min(v);
            }
        }
        best
    }
}

/// Tail bound for a plain window (no far field): the better of the split
/// bound and, for product laws with unimodal marginals, the density bound.
fn window_tail(cfg: &SampleConfig) -> TailEstimate {
    let split = split_bound(cfg);
    let density = density_bound(cfg);
    if density < split {
        TailEstimate { bound: density, method: TailMethod::Density }
    } else {
        TailEstimate { bound: split, method: TailMethod::Split }
    }
}

fn split_bound(cfg: &SampleConfig) -> f64 {
    let f = &cfg.f;
    let r = cfg.r;
    let d = cfg.dimension as i32;
    let w = cfg.half_width();
    let sup = f.sup_norm();
    if sup == 0.0 {
        return 0.0;
    }
    let law = TailLaw::new(&cfg.spec);
    let stop = w.max((2.0 * r * f.envelope_cutoff()).ceil());
    let mut total = 0.0;
    let mut n = w + 1.0;
    while n <= stop {
        let mut best = f64::INFINITY;
        for j in 1..=THETA_STEPS {
            let theta = j as f64 / THETA_STEPS as f64;
            let v = f.envelope(theta * n / r) + sup * law.sup_survival((1.0 - theta) * n);
            best = best.min(v);
        }
        total += shell_count(n, d) * best;
        n += 1.0;
    }
    // Beyond `stop`, envelope(n / 2r) underflows and only the Markov part remains.
    let rest = if law.sup_survival(stop / 2.0) == 0.0 {
        0.0
    } else {
        sup * law.markov_remainder(stop, d)
    };
    total + rest
}

fn density_bound(cfg: &SampleConfig) -> f64 {
    let spec = &cfg.spec;
    let Some(pmax) = spec.coordinate_density_max() else {
        return f64::INFINITY;
    };
    let f = &cfg.f;
    let r = cfg.r;
    let d = cfg.dimension as i32;
    let w = cfg.half_width();
    let law = TailLaw::new(spec);
    let mass = r.powi(d) * f.l1_norm() * d as f64 * (1.0 + pmax).powi(d - 1);
    let mut best = f64::INFINITY;
    let steps = (4.0 * f.envelope_cutoff()).ceil() as usize;
    for j in 1..=steps {
        let a = 0.25 * j as f64 * r;
        if a >= w {
            break;
        }
        let v = landing_overflow(f, r, a, d) + mass * law.coordinate_survival(w - a);
        best = best.min(v);
    }
    best
}

/// Chooses the landing radius and the outer edge of the far field, and
/// returns the plan with its residual bound.
fn plan_far_field(cfg: &SampleConfig) -> Result<(FarPlan, TailEstimate)> {
    let spec = &cfg.spec;
    let f = &cfg.f;
    let r = cfg.r;
    let tol = cfg.truncation.tail_tol;
    let sup = f.sup_norm();
    // Smallest landing radius whose overflow fits in half the budget, widened
    // by one so that the stationary shift is covered.
    let mut a = 0.25 * r;
    let mut overflow = landing_overflow(f, r, a, 1);
    while overflow > 0.5 * tol && a < r * f.envelope_cutoff() {
        a += 0.25 * r;
        overflow = landing_overflow(f, r, a, 1);
    }
    let landing = a + 1.0;
    let inner = cfg.half_width().max((2.0 * landing).ceil());
    let survival = |t: f64| spec.coordinate_survival(t).expect("closed-form survival");
    let residual = |edge: f64| sup * (2.0 * landing + 1.0) * survival(edge - landing);
    let mut shells = Vec::new();
    let mut lo = inner;
    while residual(lo) > 0.5 * tol {
        if shells.len() >= 200 {
            return Err(Error::TailTolerance { estimate: residual(lo), tolerance: tol });
        }
        let hi = 2.0 * lo;
        let q = spec
            .interval_mass_1d(lo + 1.0 - landing, lo + 1.0 + landing)
            .expect("closed-form interval mass");
        shells.push(Shell { lo, hi, q });
        lo = hi;
    }
    let bound = overflow + residual(lo);
    Ok((FarPlan { landing, inner, shells }, TailEstimate { bound, method: TailMethod::FarField }))
}

/// Parameters `(γ, p, β)` meeting the four constraints
/// `1 + 1/p < α`, `γ + (α-1)/α < 1 + 1/p`, `1 < β < α`, `(α-1)/α < γ(β-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaChoice {
    pub gamma: f64,
    pub p: f64,
    pub beta: f64,
}

impl GammaChoice {
    pub fn satisfies(&self, alpha: f64) -> bool {
        let GammaChoice { gamma, p, beta } = *self;
        let s = (alpha - 1.0) / alpha;
        gamma > 1.0
            && p > 1.0
            && 1.0 + 1.0 / p < alpha
            && gamma + s < 1.0 + 1.0 / p
            && 1.0 < beta
            && beta < alpha
            && s < gamma * (beta - 1.0)
    }
}

pub fn choose_gamma(alpha: f64) -> Result<GammaChoice> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::invalid(format!("choose_gamma needs 1 < alpha <= 2, got {alpha}")));
    }
    let eps = 0.5 * (1.0 / alpha + 1.0);
    let p = 1.0 / (eps * (alpha - 1.0));
    let gamma_hi = 1.0 / alpha + eps * (alpha - 1.0);
    let gamma = 0.5 * (1.0 + gamma_hi);
    let beta_lo = 1.0 + (alpha - 1.0) / (alpha * gamma);
    let beta = 0.5 * (beta_lo + alpha);
    Ok(GammaChoice { gamma, p, beta })
}
