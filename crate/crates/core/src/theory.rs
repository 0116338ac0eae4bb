//! Closed-form and quadrature predictions for the moments and limit laws of
//! the linear statistic.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cumulants::{for_each_partition_shape, partition_weight};
use crate::error::{Error, Result};
use crate::perturbations::{ExpansionInfo, Family, PerturbationSpec};
use crate::quadrature::{integrate_even, integrate_line, integrate_with_breaks, Quad};
use crate::test_functions::{line_integral_1d, radial_integral, Shape, TestFunction};

const DEFAULT_RELATIVE_TOL: f64 = 1e-8;
const NESTED_MAX_ORDER: usize = 4;
const CLASS2_MAX_ORDER: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictionKind {
    Mean,
    VarianceExact { r: f64 },
    VarianceAsymptotic { r: f64 },
    LimitVarianceD2,
    StableScale,
    ClassIICumulant { m: usize },
    CumulantAtR { m: usize, r: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    #[serde(flatten)]
    pub kind: PredictionKind,
    pub value: f64,
    pub method: String,
    /// Absolute error bound reported by the numerical method.
    pub tolerance: f64,
}

impl Prediction {
    fn new(kind: PredictionKind, value: f64, method: impl Into<String>, tolerance: f64) -> Self {
        Prediction { kind, value, method: method.into(), tolerance }
    }
}

/// `r^d ∫ f`.
pub fn mean_prediction(f: &TestFunction, r: f64) -> Prediction {
    let d = f.dimension() as i32;
    Prediction::new(PredictionKind::Mean, r.powi(d) * f.integral(), "closed form", 0.0)
}

fn check_dims(f: &TestFunction, spec: &PerturbationSpec) -> Result<()> {
    if f.dimension() != spec.dimension() {
        return Err(Error::DimensionMismatch { expected: f.dimension(), got: spec.dimension() });
    }
    Ok(())
}

fn check_r(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("scale r must be positive and finite, got {r}")))
    }
}

/// `∫ |F_i|² w` for coordinate factor `i` of a separable `f`.
fn factor_integral(f: &TestFunction, axis: usize, w: impl Fn(f64) -> f64, tol: f64) -> Result<Quad> {
    integrate_even(|x| f.factor_fourier_abs2(axis, x).expect("separable") * w(x), f.fourier_scale(), tol)
}

fn is_isotropic(spec: &PerturbationSpec) -> bool {
    matches!(spec.family(), Family::Gaussian { .. } | Family::IsotropicStable { .. })
        || spec.dimension() == 1
}

/// `Var T_r⁰ = r^d ∫ |F[f](x)|² (1 - |φ(x/r)|²) dx`, to absolute tolerance
/// `tol` (default `1e-8 r^d`).
pub fn variance_exact(
    f: &TestFunction,
    spec: &PerturbationSpec,
    r: f64,
    tol: Option<f64>,
) -> Result<Prediction> {
    check_dims(f, spec)?;
    check_r(r)?;
    let d = f.dimension();
    let vol = r.powi(d as i32);
    let kind = PredictionKind::VarianceExact { r };
    if spec.is_degenerate() || f.is_null() {
        return Ok(Prediction::new(kind, 0.0, "degenerate", 0.0));
    }
    let tol = tol.unwrap_or(DEFAULT_RELATIVE_TOL * vol);
    let itol = tol / vol;

    if d == 1 {
        let q = line_integral_1d(f, |x| spec.coordinate_one_minus_abs2(x / r), itol)?;
        return Ok(Prediction::new(kind, vol * q.value, "gk21 line", vol * q.abs_error));
    }
    if f.is_separable() && spec.coordinate_factor_available() {
        // ∏A - ∏(A - B) = Σ_i B_i ∏_{j<i}(A_j - B_j) ∏_{j>i} A_j, every term ≥ 0.
        let share = itol / (2.0 * d as f64);
        let mut a = Vec::with_capacity(d);
        let mut b = Vec::with_capacity(d);
        let mut err = 0.0;
        let same = f.identical_factors();
        for i in 0..d {
            if same && i > 0 {
                a.push(a[0]);
                b.push(b[0]);
                continue;
            }
            let qa = factor_integral(f, i, |_| 1.0, share)?;
            let qb = factor_integral(f, i, |x| spec.coordinate_one_minus_abs2(x / r), share)?;
            err += qa.abs_error + qb.abs_error;
            a.push(qa.value);
            b.push(qb.value);
        }
        let mut total = 0.0;
        for i in 0..d {
            let before: f64 = (0..i).map(|j| a[j] - b[j]).product();
            let after: f64 = (i + 1..d).map(|j| a[j]).product();
            total += b[i] * before * after;
        }
        let amax = a.iter().fold(0.0f64, |m, v| m.max(*v));
        let bound = err * amax.powi(d as i32 - 1).max(1.0);
        return Ok(Prediction::new(kind, vol * total, "separable gk21", vol * bound));
    }
    if is_isotropic(spec) {
        if let Some(q) = radial_integral(f, |rho| spec.coordinate_one_minus_abs2(rho / r), itol)? {
            return Ok(Prediction::new(kind, vol * q.value, "radial gk21", vol * q.abs_error));
        }
    }
    Err(Error::Unsupported(
        "exact variance needs d = 1, a separable f with i.i.d. coordinates, or a radial f with an isotropic law"
            .into(),
    ))
}

/// `J_α = ∫ |F[f](x)|² |x|^α dx`.
pub fn fourier_moment(f: &TestFunction, alpha: f64, tol: f64) -> Result<Quad> {
    if f.dimension() == 1 {
        return line_integral_1d(f, |x| x.abs().powf(alpha), tol);
    }
    if let Some(q) = radial_integral(f, |rho| rho.powf(alpha), tol)? {
        return Ok(q);
    }
    if f.is_separable() && alpha == 2.0 {
        let d = f.dimension();
        let share = tol / (2.0 * d as f64);
        let mut a = Vec::with_capacity(d);
        let mut m = Vec::with_capacity(d);
        for i in 0..d {
            a.push(factor_integral(f, i, |_| 1.0, share)?);
            m.push(factor_integral(f, i, |x| x * x, share)?);
        }
        let mut value = 0.0;
        let mut err = 0.0;
        for i in 0..d {
            let rest: f64 = (0..d).filter(|&j| j != i).map(|j| a[j].value).product();
            value += m[i].value * rest;
            err += (m[i].abs_error + a.iter().map(|q| q.abs_error).sum::<f64>()) * rest.max(1.0);
        }
        return Ok(Quad { value, abs_error: err, evals: 0 });
    }
    Err(Error::Unsupported("fourier moment of a non-radial f in d >= 2 with alpha != 2".into()))
}

/// `c2 ℓ(1/r) r^{d-α} J_α`, the leading-order variance under
/// `1 - |φ(x)|² ≈ c2 ℓ(|x|) |x|^α`.
pub fn variance_asymptotic(f: &TestFunction, expansion: &ExpansionInfo, r: f64) -> Result<Prediction> {
    check_r(r)?;
    let d = f.dimension() as f64;
    let scale = expansion.c2 * expansion.l_family.eval(1.0 / r) * r.powf(d - expansion.alpha);
    let q = fourier_moment(f, expansion.alpha, 1e-12)?;
    Ok(Prediction::new(
        PredictionKind::VarianceAsymptotic { r },
        scale * q.value,
        "fourier moment gk21",
        scale * q.abs_error,
    ))
}

/// Limit variance in `d = 2` for laws with a finite second moment:
/// `½ ∫ |F[f](x)|² E|2π(ξ - ξ')·x|² dx = 4π² v J_2` for i.i.d. coordinates
/// with variance `v`.
pub fn limit_variance_d2(f: &TestFunction, spec: &PerturbationSpec) -> Result<Prediction> {
    check_dims(f, spec)?;
    if spec.dimension() != 2 {
        return Err(Error::Hypothesis { item: 2, reason: format!("requires d = 2, got d = {}", spec.dimension()) });
    }
    if !spec.has_finite_second_moment() {
        return Err(Error::Hypothesis {
            item: 2,
            reason: "requires E|ξ|² < ∞; the variance is unbounded otherwise".into(),
        });
    }
    let v = spec.coordinate_variance().ok_or_else(|| Error::Unsupported("no per-coordinate variance".into()))?;
    if v == 0.0 {
        return Ok(Prediction::new(PredictionKind::LimitVarianceD2, 0.0, "degenerate", 0.0));
    }
    let q = fourier_moment(f, 2.0, 1e-12)?;
    let k = 4.0 * PI * PI * v;
    Ok(Prediction::new(PredictionKind::LimitVarianceD2, k * q.value, "fourier moment gk21", k * q.abs_error))
}

/// Limiting variances under the slow-decay normalization: the stated value
/// `c J_α` and the value `c2 J_α` that the exact variance formula gives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowLimitVariance {
    pub stated: f64,
    pub exact: f64,
}

pub fn slow_limit_variance(f: &TestFunction, expansion: &ExpansionInfo) -> Result<SlowLimitVariance> {
    let j = fourier_moment(f, expansion.alpha, 1e-12)?.value;
    Ok(SlowLimitVariance { stated: expansion.c * j, exact: expansion.c2 * j })
}

/// `(c ∫ |f'|^α)^{1/α}`, the scale of the stable limit.
pub fn stable_scale(f: &TestFunction, alpha: f64, c: f64) -> Result<Prediction> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::Hypothesis { item: 6, reason: format!("requires 1 < α ≤ 2, got α = {alpha}") });
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("c must be finite and nonnegative, got {c}")));
    }
    let norm = f.lp_norm_of_deriv(alpha)?;
    let value = (c * norm).powf(1.0 / alpha);
    let tol = if value > 0.0 { value * 1e-10 / (alpha * norm.max(1e-300)) } else { 0.0 };
    Ok(Prediction::new(PredictionKind::StableScale, value, "gk21", tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class2Method {
    /// Closed-form Gaussian integrals (Gaussian bumps only).
    ClosedForm,
    /// One-dimensional quadrature of `∫|y| F[f^k](y) conj(F[f^{m-k}](y)) dy`.
    Quadrature,
    /// Iterated quadrature over the full constrained integral (`m ≤ 4`).
    Nested,
}

impl fmt::Display for Class2Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Class2Method::ClosedForm => "closed form",
            Class2Method::Quadrature => "single-block quadrature",
            Class2Method::Nested => "nested quadrature",
        };
        f.write_str(s)
    }
}

fn check_class2(f: &TestFunction, c: f64, m: usize) -> Result<()> {
    if f.dimension() != 1 {
        return Err(Error::Hypothesis { item: 5, reason: format!("requires d = 1, got d = {}", f.dimension()) });
    }
    if !(2..=CLASS2_MAX_ORDER).contains(&m) {
        return Err(Error::invalid(format!("cumulant order must lie in 2..={CLASS2_MAX_ORDER}, got {m}")));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("c must be finite and nonnegative, got {c}")));
    }
    Ok(())
}

/// Limit of `κ_m(T_r⁰)` when `d = α = 1` and `1 - φ(x) ≈ c|x|`:
/// `-c Σ_π w(π) Σ_{B∈π} ∫_{Σy=0} |y_B| Π_{B'} F[f^{|B'|}](y_{B'})`.
pub fn class2_limit_cumulant(f: &TestFunction, c: f64, m: usize, method: Class2Method) -> Result<Prediction> {
    check_class2(f, c, m)?;
    let kind = PredictionKind::ClassIICumulant { m };
    match method {
        Class2Method::ClosedForm => {
            if !matches!(f.shape(), Shape::GaussianBump { .. }) {
                return Err(Error::Unsupported("closed form needs a Gaussian bump".into()));
            }
            // For f = e^{-a x²} the single-block integral is √(k(m-k))/(π m).
            let mf = m as f64;
            let single = |k: usize| ((k * (m - k)) as f64).sqrt() / (PI * mf);
            let value = -c * shape_sum(m, |sizes| sizes.iter().map(|&k| single(k)).sum())?;
            Ok(Prediction::new(kind, value, method.to_string(), 1e-14 * value.abs().max(1e-300)))
        }
        Class2Method::Quadrature => {
            let mut single = BTreeMap::new();
            let mut err = 0.0;
            for k in 1..m {
                if single.contains_key(&k.min(m - k)) {
                    continue;
                }
                let q = integrate_line(
                    |y| {
                        let a = f.fourier_of_power(k as u32, y).unwrap_or_default();
                        let b = f.fourier_of_power((m - k) as u32, y).unwrap_or_default();
                        y.abs() * (a * b.conj()).re
                    },
                    f.fourier_scale() * (m as f64).sqrt(),
                    1e-12,
                )?;
                err += q.abs_error;
                single.insert(k.min(m - k), q.value);
            }
            let mut weight_abs = 0.0;
            let value = -c
                * shape_sum(m, |sizes| {
                    weight_abs += sizes.len() as f64;
                    sizes.iter().filter(|&&k| k < m).map(|&k| single[&k.min(m - k)]).sum()
                })?;
            Ok(Prediction::new(kind, value, method.to_string(), c * err * weight_abs))
        }
        Class2Method::Nested => {
            let (value, err) = nested_partition_sum(f, m, |ys| ys.iter().map(|y| y.abs()).sum(), 1e-8)?;
            Ok(Prediction::new(kind, -c * value, method.to_string(), c * err))
        }
    }
}

/// `κ_m(T_r⁰)` at finite `r` in `d = 1` by nested quadrature of the exact
/// Fourier representation (aliased frequencies `Σy = rk`, `k ≠ 0`, omitted).
/// Needs `log φ` in closed form (Gaussian, Cauchy, symmetric stable).
pub fn cumulant_at_r(f: &TestFunction, spec: &PerturbationSpec, m: usize, r: f64) -> Result<Prediction> {
    check_dims(f, spec)?;
    check_r(r)?;
    check_class2(f, 0.0, m)?;
    let psi: Box<dyn Fn(f64) -> f64> = match *spec.family() {
        Family::Gaussian { sigma } => Box::new(move |t: f64| 2.0 * PI * PI * sigma * sigma * t * t),
        Family::Cauchy { scale } => Box::new(move |t: f64| 2.0 * PI * scale * t.abs()),
        Family::SymStable { alpha, gamma } => Box::new(move |t: f64| gamma * (2.0 * PI * t.abs()).powf(alpha)),
        _ => return Err(Error::Unsupported("cumulant_at_r needs a Gaussian, Cauchy or symmetric stable law".into())),
    };
    let (value, err) =
        nested_partition_sum(f, m, |ys| r * (-ys.iter().map(|&y| psi(y / r)).sum::<f64>()).exp_m1(), 1e-8)?;
    Ok(Prediction::new(PredictionKind::CumulantAtR { m, r }, value, "nested quadrature", err))
}

/// `Σ_π w(π) g(block sizes of π)`.
fn shape_sum(m: usize, mut g: impl FnMut(&[usize]) -> f64) -> Result<f64> {
    let mut total = 0.0;
    for_each_partition_shape(m, |sizes| total += partition_weight(sizes.len()) as f64 * g(sizes))?;
    Ok(total)
}

/// `Σ_π w(π) ∫_{Σy=0} W(y) Π_j F[f^{|B_j|}](y_j)`, each distinct block-size
/// multiset integrated once by iterated quadrature.
fn nested_partition_sum(
    f: &TestFunction,
    m: usize,
    weight: impl Fn(&[f64]) -> f64,
    tol: f64,
) -> Result<(f64, f64)> {
    if m > NESTED_MAX_ORDER {
        return Err(Error::Unsupported(format!("nested quadrature is limited to m <= {NESTED_MAX_ORDER}")));
    }
    let powers: Vec<TestFunction> = (1..=m as u32)
        .map(|k| f.power(k).ok_or_else(|| Error::Unsupported("nested quadrature needs closed-form powers of f".into())))
        .collect::<Result<_>>()?;
    let mut counts: BTreeMap<Vec<usize>, i128> = BTreeMap::new();
    for_each_partition_shape(m, |sizes| {
        let mut key = sizes.to_vec();
        key.sort_unstable();
        *counts.entry(key).or_insert(0) += partition_weight(sizes.len());
    })?;
    let half = 6.0 * (powers[m - 1].fourier_scale() * PI / 2.0).max(1.0);
    let mut total = 0.0;
    let mut err = 0.0;
    for (sizes, w) in counts {
        if w == 0 {
            continue;
        }
        let g: Vec<&TestFunction> = sizes.iter().map(|&k| &powers[k - 1]).collect();
        let (v, e) = constrained_integral(&g, &weight, half, tol)?;
        total += w as f64 * v;
        err += (w as f64).abs() * e;
    }
    Ok((total, err))
}

/// `∫ W(y) Π_j F[g_j](y_j)` over `y_1 + … + y_n = 0`, parametrized by partial
/// sums `x_j = y_1 + … + y_j` in `[-L, L]^{n-1}`.
fn constrained_integral(
    g: &[&TestFunction],
    weight: &dyn Fn(&[f64]) -> f64,
    half: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let n = g.len();
    let gv = |j: usize, y: f64| g[j].fourier(&[y]).re;
    if n == 1 {
        return Ok((gv(0, 0.0) * weight(&[0.0]), 0.0));
    }
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let mut xs = vec![0.0; n + 1];
    let mut ys = vec![0.0; n];
    let total_err = RefCell::new(0.0);

    fn level(
        j: usize,
        n: usize,
        xs: &mut Vec<f64>,
        ys: &mut Vec<f64>,
        gv: &dyn Fn(usize, f64) -> f64,
        weight: &dyn Fn(&[f64]) -> f64,
        half: f64,
        tol: f64,
        failure: &RefCell<Option<Error>>,
        total_err: &RefCell<f64>,
    ) -> f64 {
        let prev = xs[j - 1];
        let breaks = [prev, 0.0];
        let inner_tol = tol / (2.0 * half);
        let res = integrate_with_breaks(
            |x| {
                if failure.borrow().is_some() {
                    return 0.0;
                }
                xs[j] = x;
                let gj = gv(j - 1, x - prev);
                if gj == 0.0 {
                    return 0.0;
                }
                ys[j - 1] = x - prev;
                if j == n - 1 {
                    ys[n - 1] = -x;
                    gj * gv(n - 1, -x) * weight(ys)
                } else {
                    gj * level(j + 1, n, xs, ys, gv, weight, half, inner_tol, failure, total_err)
                }
            },
            -half,
            half,
            &breaks,
            tol,
        );
        match res {
            Ok(q) => {
                if j == 1 {
                    *total_err.borrow_mut() += q.abs_error;
                }
                q.value
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    }

    let value = level(1, n, &mut xs, &mut ys, &gv, weight, half, tol, &failure, &total_err);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    // Inner levels each contribute at most their tolerance times the domain length.
    let err = total_err.into_inner() + tol * (n - 2) as f64;
    Ok((value, err))
}

/// The six limit regimes, numbered as items 1–6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RegimeRepr", into = "RegimeRepr")]
pub enum Regime {
    /// `d ≥ 3`: Gaussian after variance normalization.
    GaussianD3,
    /// `d = 2`, finite second moment: Gaussian without normalization.
    GaussianD2Bounded,
    /// `d = 2`, infinite second moment: Gaussian along a subsequence.
    GaussianD2Unbounded,
    /// Slowly decaying characteristic function: Gaussian at rate `r^{(d-α)/2}`.
    GaussianSlow,
    /// `d = α = 1`, finite `c`: non-Gaussian limit with all moments.
    ClassII,
    /// `d = 1`, `1 < α ≤ 2`: stable limit.
    Stable,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RegimeRepr {
    Item(u8),
    Name(String),
}

impl TryFrom<RegimeRepr> for Regime {
    type Error = String;

    fn try_from(v: RegimeRepr) -> std::result::Result<Self, String> {
        match v {
            RegimeRepr::Item(i) => Regime::from_item(i).ok_or_else(|| format!("regime item must be 1..=6, got {i}")),
            RegimeRepr::Name(s) => Regime::ALL
                .into_iter()
                .find(|r| r.name() == s)
                .ok_or_else(|| format!("unknown regime `{s}`")),
        }
    }
}

impl From<Regime> for RegimeRepr {
    fn from(r: Regime) -> Self {
        RegimeRepr::Name(r.name().to_string())
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (item {})", self.name(), self.item())
    }
}

impl Regime {
    pub const ALL: [Regime; 6] = [
        Regime::GaussianD3,
        Regime::GaussianD2Bounded,
        Regime::GaussianD2Unbounded,
        Regime::GaussianSlow,
        Regime::ClassII,
        Regime::Stable,
    ];

    pub fn item(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_item(i: u8) -> Option<Self> {
        Regime::ALL.get((i as usize).checked_sub(1)?).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::GaussianD3 => "gaussian_d3",
            Regime::GaussianD2Bounded => "gaussian_d2_bounded",
            Regime::GaussianD2Unbounded => "gaussian_d2_unbounded",
            Regime::GaussianSlow => "gaussian_slow",
            Regime::ClassII => "class_ii",
            Regime::Stable => "stable",
        }
    }

    fn reject(self, reason: impl Into<String>) -> Error {
        Error::Hypothesis { item: self.item(), reason: reason.into() }
    }

    /// Checks that `spec` satisfies the regime's hypotheses and returns the
    /// expansion when the regime uses one. Point masses are accepted by the
    /// unnormalized regimes (2 and 5) as deterministic baselines.
    pub fn check(self, spec: &PerturbationSpec) -> Result<Option<ExpansionInfo>> {
        let d = spec.dimension();
        let need_dim = |ok: bool, want: &str| {
            if ok {
                Ok(())
            } else {
                Err(self.reject(format!("dimension mismatch: requires {want}, got d = {d}")))
            }
        };
        match self {
            Regime::GaussianD3 => need_dim(d >= 3, "d ≥ 3")?,
            Regime::GaussianD2Bounded | Regime::GaussianD2Unbounded => need_dim(d == 2, "d = 2")?,
            Regime::GaussianSlow => {}
            Regime::ClassII | Regime::Stable => need_dim(d == 1, "d = 1")?,
        }
        if spec.is_degenerate() {
            return match self {
                Regime::GaussianD2Bounded | Regime::ClassII => Ok(None),
                _ => Err(self.reject("perturbations must not be a.s. constant")),
            };
        }
        match self {
            Regime::GaussianD3 => Ok(None),
            Regime::GaussianD2Bounded => {
                if spec.has_finite_second_moment() {
                    Ok(None)
                } else {
                    Err(self.reject("requires E|ξ|² < ∞"))
                }
            }
            Regime::GaussianD2Unbounded => {
                if spec.has_finite_second_moment() {
                    Err(self.reject("requires E|ξ|^ν = ∞ for some 0 < ν < 2"))
                } else {
                    Ok(None)
                }
            }
            Regime::GaussianSlow => {
                let e = spec.expansion().map_err(|e| self.reject(format!("needs 1 - φ ≈ ℓ|x|^α: {e}")))?;
                let bounded = e.l_family.is_bounded();
                let ok = d >= 2 || e.alpha < 1.0 || (e.alpha == 1.0 && !bounded);
                if ok {
                    Ok(Some(e))
                } else {
                    Err(self.reject(format!(
                        "requires d ≥ 2, or d = 1 with α < 1 or α = 1 and c = ∞ (got α = {})",
                        e.alpha
                    )))
                }
            }
            Regime::ClassII => {
                let e = spec.expansion().map_err(|e| self.reject(format!("needs 1 - φ ≈ c|x|: {e}")))?;
                if e.alpha == 1.0 && e.l_family == crate::perturbations::LFamily::Const && e.c > 0.0 {
                    Ok(Some(e))
                } else {
                    Err(self.reject(format!("requires α = 1 and c ∈ (0,∞) (got α = {})", e.alpha)))
                }
            }
            Regime::Stable => {
                let e = spec.expansion().map_err(|e| self.reject(format!("needs 1 - φ ≈ c|x|^α: {e}")))?;
                if e.alpha > 1.0 && e.alpha <= 2.0 && e.l_family == crate::perturbations::LFamily::Const && e.c > 0.0 {
                    Ok(Some(e))
                } else {
                    Err(self.reject(format!("requires 1 < α ≤ 2 and c ∈ (0,∞) (got α = {})", e.alpha)))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub center: f64,
    pub scale: f64,
}

impl Normalizer {
    pub fn apply(&self, t: f64) -> f64 {
        self.scale * (t - self.center)
    }
}

/// Centering `r^d ∫ f` and the regime's scale factor.
pub fn normalizer(regime: Regime, spec: &PerturbationSpec, f: &TestFunction, r: f64) -> Result<Normalizer> {
    check_dims(f, spec)?;
    check_r(r)?;
    let expansion = regime.check(spec)?;
    let center = mean_prediction(f, r).value;
    let d = spec.dimension() as f64;
    let scale = match regime {
        Regime::GaussianD3 | Regime::GaussianD2Unbounded => {
            let v = variance_exact(f, spec, r, None)?.value;
            if !(v > 0.0) {
                return Err(regime.reject("variance vanishes; normalization undefined"));
            }
            v.powf(-0.5)
        }
        Regime::GaussianD2Bounded | Regime::ClassII => 1.0,
        Regime::GaussianSlow => {
            let e = expansion.expect("checked");
            e.l_family.eval(1.0 / r).powf(-0.5) * r.powf((e.alpha - d) / 2.0)
        }
        Regime::Stable => {
            let e = expansion.expect("checked");
            r.powf((e.alpha - 1.0) / e.alpha)
        }
    };
    Ok(Normalizer { center, scale })
}

/// Scale-only form of [`normalizer`] for a given expansion, without a law.
pub fn normalizer_scale(regime: Regime, expansion: &ExpansionInfo, d: usize, r: f64) -> Result<f64> {
    match regime {
        Regime::GaussianSlow => Ok(expansion.l_family.eval(1.0 / r).powf(-0.5) * r.powf((expansion.alpha - d as f64) / 2.0)),
        Regime::Stable => {
            if !(expansion.alpha > 1.0 && expansion.alpha <= 2.0) {
                return Err(regime.reject(format!("requires 1 < α ≤ 2 (got α = {})", expansion.alpha)));
            }
            Ok(r.powf((expansion.alpha - 1.0) / expansion.alpha))
        }
        Regime::GaussianD2Bounded | Regime::ClassII => Ok(1.0),
        _ => Err(Error::invalid("variance-normalized regimes need the law; use normalizer")),
    }
}
