//! Perturbation laws for the lattice sites.
//!
//! Characteristic functions use the `φ(t) = E[exp(2πi t·X)]` convention
//! throughout, including the empirical characteristic function helpers.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use libm::erfc;
use libm::tgamma as gamma;

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Cauchy scale giving `1 - φ(t) ~ |t|` at the origin.
pub const UNIT_CAUCHY_SCALE: f64 = 1.0 / (2.0 * PI);

fn default_cauchy_scale() -> f64 {
    UNIT_CAUCHY_SCALE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    Gaussian { sigma: f64 },
    UniformCube { half_width: f64 },
    Laplace { scale: f64 },
    Cauchy {
        #[serde(default = "default_cauchy_scale")]
        scale: f64,
    },
    SymStable { alpha: f64, gamma: f64 },
    IsotropicStable { alpha: f64, gamma: f64 },
    PointMass { value: Vec<f64> },
}

/// Slowly varying factor `ℓ` in `1 - φ(x) ≈ c ℓ(|x|) |x|^α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LFamily {
    Const,
    LogPower { p: f64 },
}

impl LFamily {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            LFamily::Const => 1.0,
            LFamily::LogPower { p } => t.ln().abs().powf(p),
        }
    }

    /// `ℓ` has a finite limit at zero.
    pub fn is_bounded(&self) -> bool {
        match *self {
            LFamily::Const => true,
            LFamily::LogPower { p } => p <= 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionInfo {
    pub alpha: f64,
    /// Coefficient of `1 - φ`.
    pub c: f64,
    /// Coefficient of `1 - |φ|²`.
    pub c2: f64,
    pub l_family: LFamily,
}

impl ExpansionInfo {
    pub fn new(alpha: f64, c: f64, c2: f64, l_family: LFamily) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::invalid(format!("expansion exponent must be positive, got {alpha}")));
        }
        if alpha > 2.0 {
            // Only the degenerate law X ≡ 0 has 1 - φ = o(|x|²).
            return Err(Error::invalid(format!(
                "expansion exponent {alpha} > 2 is impossible for a nondegenerate law"
            )));
        }
        if !(c >= 0.0) || !(c2 >= 0.0) {
            return Err(Error::invalid("expansion coefficients must be nonnegative"));
        }
        Ok(ExpansionInfo { alpha, c, c2, l_family })
    }

    /// `c ℓ(t)`, the full slowly varying factor.
    pub fn l_value(&self, t: f64) -> f64 {
        self.c * self.l_family.eval(t)
    }
}

/// `E|X|^μ`, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AbsMoment {
    Finite(f64),
    Infinite,
}

impl AbsMoment {
    pub fn finite(self) -> Option<f64> {
        match self {
            AbsMoment::Finite(v) => Some(v),
            AbsMoment::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    family: Family,
    dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    declared: Option<ExpansionInfo>,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn stable_index(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("stability index must lie in (0, 2], got {alpha}")))
    }
}

impl PerturbationSpec {
    pub fn new(family: Family, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        match &family {
            Family::Gaussian { sigma } => positive("sigma", *sigma)?,
            Family::UniformCube { half_width } => positive("half_width", *half_width)?,
            Family::Laplace { scale } | Family::Cauchy { scale } => positive("scale", *scale)?,
            Family::SymStable { alpha, gamma } => {
                stable_index(*alpha)?;
                positive("gamma", *gamma)?;
            }
            Family::IsotropicStable { alpha, gamma } => {
                stable_index(*alpha)?;
                positive("gamma", *gamma)?;
                if dimension == 1 {
                    return Err(Error::invalid(
                        "isotropic_stable needs d >= 2; use sym_stable in one dimension",
                    ));
                }
            }
            Family::PointMass { value } => {
                if value.len() != dimension {
                    return Err(Error::DimensionMismatch { expected: dimension, got: value.len() });
                }
                if value.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("point mass location must be finite"));
                }
            }
        }
        Ok(PerturbationSpec { family, dimension, declared: None })
    }

    pub fn gaussian(sigma: f64, dimension: usize) -> Result<Self> {
        Self::new(Family::Gaussian { sigma }, dimension)
    }

    pub fn cauchy(scale: f64, dimension: usize) -> Result<Self> {
        Self::new(Family::Cauchy { scale }, dimension)
    }

    pub fn sym_stable(alpha: f64, gamma: f64, dimension: usize) -> Result<Self> {
        Self::new(Family::SymStable { alpha, gamma }, dimension)
    }

    pub fn point_mass(value: Vec<f64>) -> Result<Self> {
        let d = value.len();
        Self::new(Family::PointMass { value }, d)
    }

    /// Attaches user-declared expansion metadata (e.g. a log-perturbed law).
    /// It overrides the built-in expansion for all theory computations.
    pub fn with_declared_expansion(mut self, info: ExpansionInfo) -> Result<Self> {
        let info = ExpansionInfo::new(info.alpha, info.c, info.c2, info.l_family)?;
        self.declared = Some(info);
        Ok(self)
    }

    pub fn declared_expansion(&self) -> Option<ExpansionInfo> {
        self.declared
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self.family, Family::PointMass { .. })
    }

    pub fn is_symmetric(&self) -> bool {
        match &self.family {
            Family::PointMass { value } => value.iter().all(|&v| v == 0.0),
            _ => true,
        }
    }

    /// Tail index: `E|ξ|^μ < ∞` exactly when `μ < tail_index()`.
    pub fn tail_index(&self) -> f64 {
        match self.family {
            Family::Cauchy { .. } => 1.0,
            Family::SymStable { alpha, .. } | Family::IsotropicStable { alpha, .. } if alpha < 2.0 => alpha,
            _ => f64::INFINITY,
        }
    }

    pub fn is_heavy_tailed(&self) -> bool {
        self.tail_index() <= 2.0
    }

    pub fn has_finite_second_moment(&self) -> bool {
        self.tail_index() > 2.0
    }

    /// Per-coordinate variance for laws with finite second moment.
    pub fn coordinate_variance(&self) -> Option<f64> {
        match &self.family {
            Family::Gaussian { sigma } => Some(sigma * sigma),
            Family::UniformCube { half_width } => Some(half_width * half_width / 3.0),
            Family::Laplace { scale } => Some(2.0 * scale * scale),
            Family::SymStable { alpha, gamma } | Family::IsotropicStable { alpha, gamma } if *alpha == 2.0 => {
                Some(2.0 * gamma)
            }
            Family::PointMass { .. } => Some(0.0),
            _ => None,
        }
    }

    // ---------------------------------------------------------------- sampling

    /// Draws `n` independent perturbation vectors.
    pub fn sample(&self, n: usize, stream: &mut Stream) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                let mut v = vec![0.0; self.dimension];
                self.sample_into(stream, &mut v);
                v
            })
            .collect()
    }

    /// Writes one draw into `out` (length = dimension).
    #[inline]
    pub fn sample_into(&self, stream: &mut Stream, out: &mut [f64]) {
        match &self.family {
            Family::Gaussian { sigma } => {
                for o in out.iter_mut() {
                    let z: f64 = stream.sample(StandardNormal);
                    *o = sigma * z;
                }
            }
            Family::UniformCube { half_width } => {
                for o in out.iter_mut() {
                    *o = half_width * (2.0 * stream.uniform() - 1.0);
                }
            }
            Family::Laplace { scale } => {
                for o in out.iter_mut() {
                    let u = stream.open01() - 0.5;
                    *o = -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln();
                }
            }
            Family::Cauchy { scale } => {
                for o in out.iter_mut() {
                    *o = scale * (PI * (stream.open01() - 0.5)).tan();
                }
            }
            Family::SymStable { alpha, gamma } => {
                let s = gamma.powf(1.0 / alpha);
                for o in out.iter_mut() {
                    *o = s * standard_sym_stable(*alpha, stream);
                }
            }
            Family::IsotropicStable { alpha, gamma } => {
                // Sub-Gaussian representation: sqrt(2A)·G with A positive
                // (α/2)-stable, E exp(-sA) = exp(-s^{α/2}).
                let a = positive_stable(alpha / 2.0, stream);
                let s = gamma.powf(1.0 / alpha) * (2.0 * a).sqrt();
                for o in out.iter_mut() {
                    let z: f64 = stream.sample(StandardNormal);
                    *o = s * z;
                }
            }
            Family::PointMass { value } => out.copy_from_slice(value),
        }
    }

    // ---------------------------------------------------------- characteristic

    /// `φ(t) = E[exp(2πi t·X)]` in closed form.
    pub fn char_fn(&self, t: &[f64]) -> Complex64 {
        debug_assert_eq!(t.len(), self.dimension);
        match &self.family {
            Family::Gaussian { sigma } => {
                Complex64::new((-2.0 * PI * PI * sigma * sigma * norm2(t)).exp(), 0.0)
            }
            Family::UniformCube { half_width } => {
                Complex64::new(t.iter().map(|&ti| sinc(2.0 * PI * half_width * ti)).product(), 0.0)
            }
            Family::Laplace { scale } => Complex64::new(
                t.iter()
                    .map(|&ti| 1.0 / (1.0 + 4.0 * PI * PI * scale * scale * ti * ti))
                    .product(),
                0.0,
            ),
            Family::Cauchy { scale } => {
                let l1: f64 = t.iter().map(|v| v.abs()).sum();
                Complex64::new((-2.0 * PI * scale * l1).exp(), 0.0)
            }
            Family::SymStable { alpha, gamma } => {
                let s: f64 = t.iter().map(|&ti| (2.0 * PI * ti.abs()).powf(*alpha)).sum();
                Complex64::new((-gamma * s).exp(), 0.0)
            }
            Family::IsotropicStable { alpha, gamma } => {
                Complex64::new((-gamma * (2.0 * PI * norm2(t).sqrt()).powf(*alpha)).exp(), 0.0)
            }
            Family::PointMass { value } => {
                let phase = 2.0 * PI * t.iter().zip(value).map(|(a, b)| a * b).sum::<f64>();
                Complex64::from_polar(1.0, phase)
            }
        }
    }

    /// `1 - |φ(t)|²`, computed without cancellation near the origin.
    pub fn one_minus_abs2(&self, t: &[f64]) -> f64 {
        match &self.family {
            Family::Gaussian { sigma } => -(-4.0 * PI * PI * sigma * sigma * norm2(t)).exp_m1(),
            Family::Cauchy { scale } => {
                let l1: f64 = t.iter().map(|v| v.abs()).sum();
                -(-4.0 * PI * scale * l1).exp_m1()
            }
            Family::SymStable { alpha, gamma } => {
                let s: f64 = t.iter().map(|&ti| (2.0 * PI * ti.abs()).powf(*alpha)).sum();
                -(-2.0 * gamma * s).exp_m1()
            }
            Family::IsotropicStable { alpha, gamma } => {
                -(-2.0 * gamma * (2.0 * PI * norm2(t).sqrt()).powf(*alpha)).exp_m1()
            }
            Family::PointMass { .. } => 0.0,
            Family::UniformCube { .. } | Family::Laplace { .. } => {
                if self.dimension == 1 {
                    self.coordinate_one_minus_abs2(t[0])
                } else {
                    // 1 - Π(1 - u_i) with u_i = 1 - |φ_1(t_i)|².
                    let log_keep: f64 =
                        t.iter().map(|&ti| (-self.coordinate_one_minus_abs2(ti)).ln_1p()).sum();
                    -log_keep.exp_m1()
                }
            }
        }
    }

    /// Coordinate factor of `1 - |φ|²` for laws with i.i.d. coordinates.
    /// Returns `None` for laws that do not factorise.
    pub fn coordinate_factor_available(&self) -> bool {
        !matches!(self.family, Family::IsotropicStable { .. } | Family::PointMass { .. })
    }

    /// `1 - |φ₁(t)|²` for a single coordinate.
    pub fn coordinate_one_minus_abs2(&self, t: f64) -> f64 {
        match &self.family {
            Family::Gaussian { sigma } => -(-4.0 * PI * PI * sigma * sigma * t * t).exp_m1(),
            Family::UniformCube { half_width } => {
                let x = 2.0 * PI * half_width * t;
                if x.abs() < 1e-4 {
                    let x2 = x * x;
                    // 1 - sinc² = x²/3 - 2x⁴/45 + ...
                    x2 / 3.0 - 2.0 * x2 * x2 / 45.0
                } else {
                    1.0 - sinc(x).powi(2)
                }
            }
            Family::Laplace { scale } => {
                let q = 4.0 * PI * PI * scale * scale * t * t;
                // 1 - 1/(1+q)² = q(2+q)/(1+q)²
                q * (2.0 + q) / ((1.0 + q) * (1.0 + q))
            }
            Family::Cauchy { scale } => -(-4.0 * PI * scale * t.abs()).exp_m1(),
            Family::SymStable { alpha, gamma } => {
                -(-2.0 * gamma * (2.0 * PI * t.abs()).powf(*alpha)).exp_m1()
            }
            Family::IsotropicStable { .. } | Family::PointMass { .. } => {
                let mut v = vec![0.0; self.dimension];
                v[0] = t;
                self.one_minus_abs2(&v)
            }
        }
    }

    // ---------------------------------------------------------------- expansion

    /// Small-argument expansion `(α, c, c2, ℓ)` of `1 - φ`.
    pub fn expansion(&self) -> Result<ExpansionInfo> {
        if let Some(info) = self.declared {
            return Ok(info);
        }
        let d = self.dimension;
        let two_pi = 2.0 * PI;
        let (alpha, c) = match &self.family {
            Family::PointMass { .. } => {
                return Err(Error::Expansion("point mass has no nontrivial expansion".into()))
            }
            Family::Gaussian { sigma } => (2.0, 2.0 * PI * PI * sigma * sigma),
            Family::UniformCube { half_width } => (2.0, 2.0 * PI * PI * half_width * half_width / 3.0),
            Family::Laplace { scale } => (2.0, 4.0 * PI * PI * scale * scale),
            Family::Cauchy { scale } => {
                if d > 1 {
                    return Err(anisotropic());
                }
                (1.0, two_pi * scale)
            }
            Family::SymStable { alpha, gamma } => {
                if d > 1 && *alpha < 2.0 {
                    return Err(anisotropic());
                }
                (*alpha, gamma * two_pi.powf(*alpha))
            }
            Family::IsotropicStable { alpha, gamma } => (*alpha, gamma * two_pi.powf(*alpha)),
        };
        ExpansionInfo::new(alpha, c, 2.0 * c, LFamily::Const)
    }

    // ------------------------------------------------------------------ moments

    /// Monte Carlo estimate of `E|ξ|^μ` (Euclidean norm); `Infinite` when the
    /// moment does not exist.
    pub fn moment_abs(&self, mu: f64, n: usize, stream: &mut Stream) -> AbsMoment {
        if mu >= self.tail_index() {
            return AbsMoment::Infinite;
        }
        let mut buf = vec![0.0; self.dimension];
        let mut acc = 0.0;
        for _ in 0..n {
            self.sample_into(stream, &mut buf);
            acc += norm2(&buf).sqrt().powf(mu);
        }
        AbsMoment::Finite(acc / n as f64)
    }

    /// Closed-form `E|ξ_1|^μ` for one coordinate (Euclidean norm for the
    /// isotropic family).
    pub fn coordinate_moment_exact(&self, mu: f64) -> AbsMoment {
        if mu >= self.tail_index() {
            return AbsMoment::Infinite;
        }
        let v = match &self.family {
            Family::Gaussian { sigma } => {
                sigma.powf(mu) * 2f64.powf(mu / 2.0) * gamma((mu + 1.0) / 2.0) / PI.sqrt()
            }
            Family::UniformCube { half_width } => half_width.powf(mu) / (mu + 1.0),
            Family::Laplace { scale } => scale.powf(mu) * gamma(mu + 1.0),
            Family::Cauchy { scale } => scale.powf(mu) / (PI * mu / 2.0).cos(),
            Family::SymStable { alpha, gamma: g } => {
                g.powf(mu / alpha) * stable_abs_moment(*alpha, mu, 1)
            }
            Family::IsotropicStable { alpha, gamma: g } => {
                g.powf(mu / alpha) * stable_abs_moment(*alpha, mu, self.dimension)
            }
            Family::PointMass { value } => value.iter().fold(0.0f64, |m, v| m.max(v.abs())).powf(mu),
        };
        AbsMoment::Finite(v)
    }

    /// Upper bound on `E|ξ|_∞^μ`.
    pub fn sup_norm_moment_bound(&self, mu: f64) -> AbsMoment {
        match self.coordinate_moment_exact(mu) {
            AbsMoment::Infinite => AbsMoment::Infinite,
            AbsMoment::Finite(m) => match self.family {
                // |ξ|_∞ ≤ |ξ|_2 and the isotropic moment is already Euclidean.
                Family::IsotropicStable { .. } | Family::PointMass { .. } => AbsMoment::Finite(m),
                _ => AbsMoment::Finite(self.dimension as f64 * m),
            },
        }
    }

    /// `P(|ξ_1| > t)` in closed form where available.
    pub fn coordinate_survival(&self, t: f64) -> Option<f64> {
        if t <= 0.0 {
            return Some(1.0);
        }
        match &self.family {
            Family::Gaussian { sigma } => Some(erfc(t / (sigma * std::f64::consts::SQRT_2))),
            Family::UniformCube { half_width } => Some((1.0 - t / half_width).max(0.0)),
            Family::Laplace { scale } => Some((-t / scale).exp()),
            Family::Cauchy { scale } => Some(2.0 / PI * (scale / t).atan()),
            Family::SymStable { alpha, .. } if *alpha == 2.0 => {
                let sd = self.coordinate_variance().expect("alpha = 2").sqrt();
                Some(erfc(t / (sd * std::f64::consts::SQRT_2)))
            }
            Family::PointMass { value } => {
                Some(if value.iter().any(|v| v.abs() > t) { 1.0 } else { 0.0 })
            }
            _ => None,
        }
    }

    /// Upper bound on `P(|ξ|_∞ > t)` from closed-form survival, if available.
    pub fn sup_norm_survival(&self, t: f64) -> Option<f64> {
        if let Family::PointMass { value } = &self.family {
            return Some(if value.iter().any(|v| v.abs() > t) { 1.0 } else { 0.0 });
        }
        let s = self.coordinate_survival(t)?;
        Some((1.0 - (1.0 - s).powi(self.dimension as i32)).clamp(0.0, 1.0))
    }

    /// Maximum of the one-coordinate marginal density, for product laws whose
    /// marginals are symmetric and unimodal. `None` for laws without a
    /// density or without product structure.
    pub fn coordinate_density_max(&self) -> Option<f64> {
        match &self.family {
            Family::Gaussian { sigma } => Some(1.0 / (sigma * (2.0 * PI).sqrt())),
            Family::UniformCube { half_width } => Some(0.5 / half_width),
            Family::Laplace { scale } => Some(0.5 / scale),
            Family::Cauchy { scale } => Some(1.0 / (PI * scale)),
            Family::SymStable { alpha, gamma: g } => {
                Some(gamma(1.0 + 1.0 / alpha) / (PI * g.powf(1.0 / alpha)))
            }
            Family::IsotropicStable { .. } | Family::PointMass { .. } => None,
        }
    }

    /// One-dimensional density (d = 1 laws with closed forms).
    pub fn density_1d(&self, x: f64) -> Option<f64> {
        if self.dimension != 1 {
            return None;
        }
        match &self.family {
            Family::Gaussian { sigma } => {
                Some((-0.5 * (x / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt()))
            }
            Family::Laplace { scale } => Some((-x.abs() / scale).exp() / (2.0 * scale)),
            Family::Cauchy { scale } => Some(scale / (PI * (scale * scale + x * x))),
            Family::UniformCube { half_width } => {
                Some(if x.abs() <= *half_width { 0.5 / half_width } else { 0.0 })
            }
            _ => None,
        }
    }

    /// `P(lo ≤ ξ ≤ hi)` for d = 1, accurate far in the tails.
    pub fn interval_mass_1d(&self, lo: f64, hi: f64) -> Option<f64> {
        if self.dimension != 1 || hi <= lo {
            return if self.dimension == 1 { Some(0.0) } else { None };
        }
        // Reduce to the upper tail by symmetry so both ends share a sign.
        if hi <= 0.0 {
            return self.interval_mass_1d(-hi, -lo);
        }
        if lo < 0.0 {
            let a = self.interval_mass_1d(0.0, -lo)?;
            let b = self.interval_mass_1d(0.0, hi)?;
            return Some(a + b);
        }
        // Now 0 ≤ lo < hi.
        match &self.family {
            Family::Cauchy { scale } => {
                // atan(hi/s) - atan(lo/s) = atan(s(hi-lo) / (s² + lo·hi))
                Some((scale * (hi - lo)).atan2(scale * scale + lo * hi) / PI)
            }
            Family::Laplace { scale } => {
                Some(0.5 * ((-lo / scale).exp() - (-hi / scale).exp()))
            }
            Family::Gaussian { sigma } => {
                let k = sigma * std::f64::consts::SQRT_2;
                Some(0.5 * (erfc(lo / k) - erfc(hi / k)))
            }
            Family::UniformCube { half_width } => {
                let h = *half_width;
                Some(((hi.min(h) - lo.min(h)) / (2.0 * h)).max(0.0))
            }
            _ => None,
        }
    }
}

fn anisotropic() -> Error {
    Error::Expansion("anisotropic: expansion not of the form c|x|^alpha".into())
}

#[inline]
fn norm2(t: &[f64]) -> f64 {
    t.iter().map(|v| v * v).sum()
}

#[inline]
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `E|Z|^p` for the standard symmetric stable vector in `R^d` with
/// `E exp(i u·Z) = exp(-|u|^α)`.
fn stable_abs_moment(alpha: f64, p: f64, d: usize) -> f64 {
    if alpha == 2.0 {
        // Z = sqrt(2)·G in every dimension.
        let dh = d as f64 / 2.0;
        return 2f64.powf(p) * gamma(dh + p / 2.0) / gamma(dh);
    }
    let dh = d as f64 / 2.0;
    2f64.powf(p) * gamma(dh + p / 2.0) * gamma(1.0 - p / alpha) / (gamma(dh) * gamma(1.0 - p / 2.0))
}

/// Chambers–Mallows–Stuck draw with `E exp(iuZ) = exp(-|u|^α)`.
#[inline]
pub(crate) fn standard_sym_stable(alpha: f64, stream: &mut Stream) -> f64 {
    let v = PI * (stream.open01() - 0.5);
    if alpha == 1.0 {
        return v.tan();
    }
    let w = stream.std_exp();
    if alpha == 2.0 {
        return 2.0 * v.sin() * w.sqrt();
    }
    let cos_v = v.cos();
    (alpha * v).sin() / cos_v.powf(1.0 / alpha) * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Kanter's representation of the positive ρ-stable law with Laplace
/// transform `exp(-s^ρ)`, `0 < ρ ≤ 1`.
pub(crate) fn positive_stable(rho: f64, stream: &mut Stream) -> f64 {
    if rho >= 1.0 {
        return 1.0;
    }
    let u = PI * stream.open01();
    let e = stream.std_exp();
    (rho * u).sin() / u.sin().powf(1.0 / rho) * (((1.0 - rho) * u).sin() / e).powf((1.0 - rho) / rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn families(d: usize) -> Vec<PerturbationSpec> {
        let mut v = vec![
            PerturbationSpec::gaussian(0.7, d).unwrap(),
            PerturbationSpec::new(Family::UniformCube { half_width: 0.5 }, d).unwrap(),
            PerturbationSpec::new(Family::Laplace { scale: 0.3 }, d).unwrap(),
            PerturbationSpec::cauchy(UNIT_CAUCHY_SCALE, d).unwrap(),
            PerturbationSpec::sym_stable(1.5, 1.0, d).unwrap(),
            PerturbationSpec::sym_stable(0.8, 0.5, d).unwrap(),
            PerturbationSpec::point_mass(vec![0.3; d]).unwrap(),
        ];
        if d >= 2 {
            v.push(PerturbationSpec::new(Family::IsotropicStable { alpha: 1.2, gamma: 0.7 }, d).unwrap());
        }
        v
    }

    #[test]
    fn point_mass_samples_are_constant() {
        let spec = PerturbationSpec::point_mass(vec![0.0]).unwrap();
        let draws = spec.sample(3, &mut Stream::new(1, 0));
        assert_eq!(draws, vec![vec![0.0]; 3]);
    }

    #[test]
    fn isotropic_stable_rejected_in_one_dimension() {
        let err = PerturbationSpec::new(Family::IsotropicStable { alpha: 1.5, gamma: 1.0 }, 1);
        assert!(err.is_err());
    }

    #[test]
    fn declared_exponent_above_two_rejected() {
        let spec = PerturbationSpec::gaussian(1.0, 1).unwrap();
        let bad = ExpansionInfo { alpha: 2.5, c: 1.0, c2: 2.0, l_family: LFamily::Const };
        assert!(spec.clone().with_declared_expansion(bad).is_err());
        let ok = ExpansionInfo { alpha: 2.0, c: 1.0, c2: 2.0, l_family: LFamily::LogPower { p: 1.0 } };
        let spec = spec.with_declared_expansion(ok).unwrap();
        assert_eq!(spec.expansion().unwrap().l_family, LFamily::LogPower { p: 1.0 });
        assert!(PerturbationSpec::sym_stable(2.1, 1.0, 1).is_err());
    }

    #[test]
    fn char_fn_examples() {
        for spec in families(2) {
            assert!((spec.char_fn(&[0.0, 0.0]) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
        let c = PerturbationSpec::cauchy(UNIT_CAUCHY_SCALE, 1).unwrap();
        assert!((c.char_fn(&[1.0]).re - (-1.0f64).exp()).abs() < 1e-15);
        let g = PerturbationSpec::gaussian(1.0, 2).unwrap();
        let v = g.char_fn(&[1.0, 0.0]).re;
        assert!((v - (-2.0 * PI * PI).exp()).abs() < 1e-22);
        assert!((v - 2.675e-9).abs() < 1e-12);
    }

    #[test]
    fn char_fn_bounded_and_hermitian() {
        let mut s = Stream::new(5, 0);
        for d in 1..=3 {
            for spec in families(d) {
                for _ in 0..1000 {
                    let t: Vec<f64> = (0..d).map(|_| 6.0 * (s.uniform() - 0.5)).collect();
                    let neg: Vec<f64> = t.iter().map(|v| -v).collect();
                    let p = spec.char_fn(&t);
                    assert!(p.norm() <= 1.0 + 1e-15);
                    assert!((spec.char_fn(&neg) - p.conj()).norm() < 1e-15);
                    if spec.is_symmetric() {
                        assert_eq!(p.im, 0.0);
                    }
                    let direct = 1.0 - p.norm_sqr();
                    assert!((spec.one_minus_abs2(&t) - direct).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn expansion_examples() {
        let c = PerturbationSpec::cauchy(UNIT_CAUCHY_SCALE, 1).unwrap().expansion().unwrap();
        assert_eq!(c.alpha, 1.0);
        assert!((c.c - 1.0).abs() < 1e-15 && (c.c2 - 2.0).abs() < 1e-15);
        let g = PerturbationSpec::gaussian(1.0, 2).unwrap().expansion().unwrap();
        assert_eq!(g.alpha, 2.0);
        assert!((g.c - 2.0 * PI * PI).abs() < 1e-12);
        let s = PerturbationSpec::sym_stable(1.5, 1.0, 1).unwrap().expansion().unwrap();
        assert!((s.c - 15.749_609_945_722_419).abs() < 1e-9);
        assert!(PerturbationSpec::point_mass(vec![0.0]).unwrap().expansion().is_err());
        let aniso = PerturbationSpec::sym_stable(1.5, 1.0, 2).unwrap().expansion().unwrap_err();
        assert!(aniso.to_string().contains("anisotropic"));
        assert!(PerturbationSpec::cauchy(1.0, 2).unwrap().expansion().is_err());
    }

    #[test]
    fn expansion_matches_char_fn_near_origin() {
        for d in 1..=3 {
            for spec in families(d) {
                let Ok(info) = spec.expansion() else { continue };
                let mut t = vec![0.0; d];
                t[0] = 1e-4;
                let ratio = (1.0 - spec.char_fn(&t).re) / (info.c * 1e-4f64.powf(info.alpha));
                assert!((ratio - 1.0).abs() < 0.01, "{spec:?}: {ratio}");
                let ratio2 = spec.one_minus_abs2(&t) / (info.c2 * 1e-4f64.powf(info.alpha));
                assert!((ratio2 - 1.0).abs() < 0.01, "{spec:?}: {ratio2}");
            }
        }
    }

    #[test]
    fn moment_abs_examples() {
        let g = PerturbationSpec::gaussian(1.0, 1).unwrap();
        let m = g.moment_abs(2.0, 1_000_000, &mut Stream::new(11, 0)).finite().unwrap();
        assert!((m - 1.0).abs() < 0.02, "{m}");
        let c = PerturbationSpec::cauchy(1.0, 1).unwrap();
        assert_eq!(c.moment_abs(1.0, 10, &mut Stream::new(11, 1)), AbsMoment::Infinite);
        let half = c.moment_abs(0.5, 1_000_000, &mut Stream::new(11, 2)).finite().unwrap();
        assert!((half / 2f64.sqrt() - 1.0).abs() < 0.03, "{half}");
        // Closed form agrees with the numerical integral of |x|^0.5 / (π(1+x²)).
        let quad = crate::quadrature::integrate_to_infinity(
            |x: f64| 2.0 * x.sqrt() / (PI * (1.0 + x * x)),
            0.0,
            1.0,
            1e-6,
        );
        let exact = c.coordinate_moment_exact(0.5).finite().unwrap();
        assert!((exact - 2f64.sqrt()).abs() < 1e-12);
        if let Ok(q) = quad {
            assert!((q.value - exact).abs() < 1e-3);
        }
    }

    #[test]
    fn closed_form_moments_match_monte_carlo() {
        let specs = [
            PerturbationSpec::gaussian(0.7, 1).unwrap(),
            PerturbationSpec::new(Family::Laplace { scale: 0.3 }, 1).unwrap(),
            PerturbationSpec::new(Family::UniformCube { half_width: 0.5 }, 1).unwrap(),
            PerturbationSpec::sym_stable(1.5, 1.0, 1).unwrap(),
            PerturbationSpec::new(Family::IsotropicStable { alpha: 1.5, gamma: 1.0 }, 2).unwrap(),
        ];
        for (i, spec) in specs.iter().enumerate() {
            let mu = 0.6;
            let mc = spec.moment_abs(mu, 400_000, &mut Stream::new(3, i as u64)).finite().unwrap();
            let exact = spec.coordinate_moment_exact(mu).finite().unwrap();
            assert!((mc / exact - 1.0).abs() < 0.02, "{spec:?}: {mc} vs {exact}");
        }
    }

    #[test]
    fn gaussian_sampler_moments() {
        let g = PerturbationSpec::gaussian(1.0, 1).unwrap();
        let mut s = Stream::new(21, 0);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| g.sample(1, &mut s)[0][0]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 4e-3, "{mean}");
        assert!((var - 1.0).abs() < 0.01, "{var}");
    }

    fn ecf(spec: &PerturbationSpec, xs: &[Vec<f64>], t: &[f64]) -> Complex64 {
        let _ = spec;
        let mut acc = Complex64::new(0.0, 0.0);
        for x in xs {
            let ph = 2.0 * PI * t.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            acc += Complex64::from_polar(1.0, ph);
        }
        acc / xs.len() as f64
    }

    #[test]
    fn sym_stable_ecf_at_unit_frequency() {
        let spec = PerturbationSpec::sym_stable(1.5, 1.0, 1).unwrap();
        let xs = spec.sample(1_000_000, &mut Stream::new(4, 0));
        // Standard convention E exp(iuX) at u = 1, i.e. t = 1/(2π).
        let v = ecf(&spec, &xs, &[1.0 / (2.0 * PI)]);
        assert!((v.re - (-1.0f64).exp()).abs() < 0.01, "{v}");
    }

    #[test]
    fn empirical_char_fn_matches_closed_form() {
        let n = 100_000;
        let tol = 3.0 * (1.0 / n as f64).sqrt();
        for d in 1..=2 {
            for (i, spec) in families(d).iter().enumerate() {
                let xs = spec.sample(n, &mut Stream::new(99, (10 * d + i) as u64));
                for k in 0..20 {
                    let mut t = vec![0.0; d];
                    t[0] = 0.05 + 0.1 * k as f64;
                    if d == 2 {
                        t[1] = 0.03 * k as f64;
                    }
                    let diff = (ecf(spec, &xs, &t) - spec.char_fn(&t)).norm();
                    assert!(diff < tol, "{spec:?} t={t:?}: {diff}");
                }
            }
        }
    }

    #[test]
    fn stable_at_two_is_gaussian() {
        let st = PerturbationSpec::sym_stable(2.0, 0.3, 1).unwrap();
        let ga = PerturbationSpec::gaussian((2.0f64 * 0.3).sqrt(), 1).unwrap();
        for k in 0..50 {
            let t = [0.03 * k as f64];
            assert!((st.char_fn(&t) - ga.char_fn(&t)).norm() < 1e-14);
        }
        let n = 100_000;
        let mut a: Vec<f64> = st.sample(n, &mut Stream::new(8, 0)).into_iter().map(|v| v[0]).collect();
        let mut b: Vec<f64> = ga.sample(n, &mut Stream::new(8, 1)).into_iter().map(|v| v[0]).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        // Two-sample KS distance by merge.
        let (mut i, mut j, mut dmax) = (0usize, 0usize, 0.0f64);
        while i < n && j < n {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            dmax = dmax.max((i as f64 - j as f64).abs() / n as f64);
        }
        assert!(dmax < 0.01, "{dmax}");
    }

    #[test]
    fn density_max_matches_char_fn_inversion() {
        // p(0) = ∫ φ(t) dt in the 2π convention.
        for spec in families(1) {
            if matches!(spec.family(), Family::UniformCube { .. } | Family::Laplace { .. }) {
                continue;
            }
            let Some(pmax) = spec.coordinate_density_max() else { continue };
            let q = crate::quadrature::integrate_even(|t| spec.char_fn(&[t]).re, 1.0, 1e-10);
            if let Ok(q) = q {
                assert!((q.value - pmax).abs() < 1e-6 * pmax.max(1.0), "{spec:?}: {} vs {pmax}", q.value);
            }
        }
    }

    #[test]
    fn interval_mass_far_tail() {
        let c = PerturbationSpec::cauchy(UNIT_CAUCHY_SCALE, 1).unwrap();
        let x = 1e9;
        let m = c.interval_mass_1d(x - 10.0, x + 10.0).unwrap();
        let approx = 20.0 * c.density_1d(x).unwrap();
        assert!((m / approx - 1.0).abs() < 1e-6);
        let whole = c.interval_mass_1d(-1e12, 1e12).unwrap();
        assert!((whole - 1.0).abs() < 1e-12);
        let g = PerturbationSpec::gaussian(1.0, 1).unwrap();
        let m = g.interval_mass_1d(-1.0, 1.0).unwrap();
        assert!((m - 0.682_689_492_137_086).abs() < 1e-12, "{m}");
    }
}
