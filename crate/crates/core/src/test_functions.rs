//! Schwartz test functions with closed-form derivatives and Fourier transforms.
//!
//! Fourier transforms use `F[f](k) = ∫ f(x) exp(2πi k·x) dx`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use libm::tgamma as gamma;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_even, integrate_line};

/// Values of `f` below this fraction of its sup norm are treated as zero when
/// sizing support radii.
pub const NEGLIGIBLE: f64 = 1e-18;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A user-supplied function. It is assumed to vanish (below [`NEGLIGIBLE`]
/// relative to `sup`) outside the sup-norm ball of radius `support_radius`.
#[derive(Clone)]
pub struct Tabulated {
    pub name: String,
    pub func: ScalarFn,
    pub support_radius: f64,
    pub sup: f64,
}

impl Tabulated {
    pub fn new(
        name: impl Into<String>,
        support_radius: f64,
        sup: f64,
        func: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Tabulated { name: name.into(), func: Arc::new(func), support_radius, sup }
    }

    pub fn zero() -> Self {
        Tabulated::new("zero", 0.0, 0.0, |_| 0.0)
    }
}

impl fmt::Debug for Tabulated {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tabulated")
            .field("name", &self.name)
            .field("support_radius", &self.support_radius)
            .finish()
    }
}

impl PartialEq for Tabulated {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.func, &other.func)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "f", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// `exp(-a|x|²)`
    GaussianBump { a: f64 },
    /// `x₁^k exp(-|x|²)`
    HermiteGaussian { k: u32 },
    #[serde(skip)]
    Tabulated(Tabulated),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    shape: Shape,
    dimension: usize,
}

/// One coordinate factor of a separable function, `f(x) = Π g_i(x_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Factor {
    /// `exp(-a t²)`
    Gauss(f64),
    /// `t^k exp(-t²)`
    Hermite(u32),
}

impl Factor {
    fn value(self, t: f64) -> f64 {
        match self {
            Factor::Gauss(a) => (-a * t * t).exp(),
            Factor::Hermite(k) => t.powi(k as i32) * (-t * t).exp(),
        }
    }

    fn d1(self, t: f64) -> f64 {
        match self {
            Factor::Gauss(a) => -2.0 * a * t * (-a * t * t).exp(),
            Factor::Hermite(k) => {
                let k = k as i32;
                let lead = if k >= 1 { k as f64 * t.powi(k - 1) } else { 0.0 };
                (lead - 2.0 * t.powi(k + 1)) * (-t * t).exp()
            }
        }
    }

    fn d2(self, t: f64) -> f64 {
        match self {
            Factor::Gauss(a) => (4.0 * a * a * t * t - 2.0 * a) * (-a * t * t).exp(),
            Factor::Hermite(k) => {
                let k = k as i32;
                let kf = k as f64;
                let lead = if k >= 2 { kf * (kf - 1.0) * t.powi(k - 2) } else { 0.0 };
                (lead - 2.0 * (2.0 * kf + 1.0) * t.powi(k) + 4.0 * t.powi(k + 2)) * (-t * t).exp()
            }
        }
    }

    fn fourier(self, xi: f64) -> Complex64 {
        match self {
            Factor::Gauss(a) => Complex64::new((PI / a).sqrt() * (-PI * PI * xi * xi / a).exp(), 0.0),
            Factor::Hermite(k) => {
                // F[t^k e^{-t²}](ξ) = √π (i/2)^k H_k(πξ) e^{-π²ξ²}
                let h = hermite_phys(k, PI * xi);
                let mag = PI.sqrt() * 0.5f64.powi(k as i32) * h * (-PI * PI * xi * xi).exp();
                Complex64::new(mag, 0.0) * Complex64::i().powu(k)
            }
        }
    }

    fn integral(self) -> f64 {
        match self {
            Factor::Gauss(a) => (PI / a).sqrt(),
            Factor::Hermite(k) if k % 2 == 1 => 0.0,
            Factor::Hermite(k) => gamma((k as f64 + 1.0) / 2.0),
        }
    }

    fn abs_integral(self) -> f64 {
        match self {
            Factor::Gauss(a) => (PI / a).sqrt(),
            Factor::Hermite(k) => gamma((k as f64 + 1.0) / 2.0),
        }
    }

    fn sup(self) -> f64 {
        match self {
            Factor::Gauss(_) => 1.0,
            Factor::Hermite(0) => 1.0,
            Factor::Hermite(k) => {
                let h = k as f64 / 2.0;
                h.powf(h) * (-h).exp()
            }
        }
    }
}

/// Physicists' Hermite polynomial by the three-term recurrence.
fn hermite_phys(k: u32, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    if k == 0 {
        return h0;
    }
    for n in 1..k {
        let h2 = 2.0 * x * h1 - 2.0 * n as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

impl TestFunction {
    pub fn new(shape: Shape, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        match &shape {
            Shape::GaussianBump { a } if !(*a > 0.0 && a.is_finite()) => {
                return Err(Error::invalid(format!("gaussian_bump needs a > 0, got {a}")))
            }
            Shape::HermiteGaussian { k } if *k > 12 => {
                return Err(Error::invalid(format!("hermite_gaussian order {k} exceeds 12")))
            }
            Shape::Tabulated(t) if !(t.support_radius >= 0.0 && t.sup >= 0.0) => {
                return Err(Error::invalid("tabulated function needs nonnegative radius and sup"))
            }
            _ => {}
        }
        Ok(TestFunction { shape, dimension })
    }

    pub fn gaussian_bump(a: f64, dimension: usize) -> Result<Self> {
        Self::new(Shape::GaussianBump { a }, dimension)
    }

    pub fn hermite_gaussian(k: u32, dimension: usize) -> Result<Self> {
        Self::new(Shape::HermiteGaussian { k }, dimension)
    }

    pub fn tabulated(t: Tabulated, dimension: usize) -> Result<Self> {
        Self::new(Shape::Tabulated(t), dimension)
    }

    pub fn zero(dimension: usize) -> Result<Self> {
        Self::tabulated(Tabulated::zero(), dimension)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn is_null(&self) -> bool {
        matches!(&self.shape, Shape::Tabulated(t) if t.sup == 0.0)
    }

    fn factor(&self, axis: usize) -> Option<Factor> {
        match self.shape {
            Shape::GaussianBump { a } => Some(Factor::Gauss(a)),
            Shape::HermiteGaussian { k } => Some(if axis == 0 { Factor::Hermite(k) } else { Factor::Gauss(1.0) }),
            Shape::Tabulated(_) => None,
        }
    }

    pub fn is_separable(&self) -> bool {
        self.factor(0).is_some()
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.shape, Shape::GaussianBump { .. })
            || matches!(self.shape, Shape::HermiteGaussian { k: 0 })
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dimension {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dimension, got: x.len() })
        }
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis < self.dimension {
            Ok(())
        } else {
            Err(Error::invalid(format!("axis {axis} out of range for dimension {}", self.dimension)))
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::GaussianBump { a } => (-a * x.iter().map(|v| v * v).sum::<f64>()).exp(),
            Shape::HermiteGaussian { k } => {
                x[0].powi(*k as i32) * (-x.iter().map(|v| v * v).sum::<f64>()).exp()
            }
            Shape::Tabulated(t) => (t.func)(x),
        }
    }

    pub fn deriv(&self, x: &[f64], axis: usize) -> Result<f64> {
        self.check_dim(x)?;
        self.check_axis(axis)?;
        if let Shape::Tabulated(t) = &self.shape {
            return Ok(central_difference(|y| (t.func)(y), x, axis));
        }
        Ok((0..self.dimension)
            .map(|i| {
                let g = self.factor(i).expect("separable");
                if i == axis { g.d1(x[i]) } else { g.value(x[i]) }
            })
            .product())
    }

    pub fn deriv2(&self, x: &[f64], axis1: usize, axis2: usize) -> Result<f64> {
        self.check_dim(x)?;
        self.check_axis(axis1)?;
        self.check_axis(axis2)?;
        if let Shape::Tabulated(t) = &self.shape {
            let h = 1e-4;
            let mut y = x.to_vec();
            y[axis2] += h;
            let up = central_difference(|z| (t.func)(z), &y, axis1);
            y[axis2] -= 2.0 * h;
            let dn = central_difference(|z| (t.func)(z), &y, axis1);
            return Ok((up - dn) / (2.0 * h));
        }
        Ok((0..self.dimension)
            .map(|i| {
                let g = self.factor(i).expect("separable");
                let order = (i == axis1) as u8 + (i == axis2) as u8;
                match order {
                    0 => g.value(x[i]),
                    1 => g.d1(x[i]),
                    _ => g.d2(x[i]),
                }
            })
            .product())
    }

    /// `F[f](k)`. Tabulated functions fall back to quadrature (d = 1 only;
    /// other dimensions return NaN).
    pub fn fourier(&self, k: &[f64]) -> Complex64 {
        if let Shape::Tabulated(t) = &self.shape {
            if self.dimension != 1 || t.sup == 0.0 {
                return Complex64::new(if t.sup == 0.0 { 0.0 } else { f64::NAN }, 0.0);
            }
            return numeric_fourier_1d(|x| (t.func)(&[x]), t.support_radius, k[0])
                .unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        }
        (0..self.dimension).map(|i| self.factor(i).expect("separable").fourier(k[i])).product()
    }

    /// `|F[f](k)|²` for one coordinate factor of a separable function.
    pub(crate) fn factor_fourier_abs2(&self, axis: usize, xi: f64) -> Option<f64> {
        self.factor(axis).map(|g| g.fourier(xi).norm_sqr())
    }

    /// Whether every coordinate factor is the same function.
    pub(crate) fn identical_factors(&self) -> bool {
        match self.shape {
            Shape::GaussianBump { .. } => true,
            Shape::HermiteGaussian { k } => k == 0 || self.dimension == 1,
            Shape::Tabulated(_) => self.dimension == 1,
        }
    }

    /// Radial profile of `|F[f]|²` for radial functions.
    pub(crate) fn radial_fourier_abs2(&self, rho: f64) -> Option<f64> {
        match self.shape {
            Shape::GaussianBump { a } => {
                let d = self.dimension as f64;
                Some((PI / a).powf(d) * (-2.0 * PI * PI * rho * rho / a).exp())
            }
            Shape::HermiteGaussian { k: 0 } => {
                let d = self.dimension as f64;
                Some(PI.powf(d) * (-2.0 * PI * PI * rho * rho).exp())
            }
            _ => None,
        }
    }

    /// Length scale on which `|F[f]|²` decays.
    pub(crate) fn fourier_scale(&self) -> f64 {
        match self.shape {
            Shape::GaussianBump { a } => a.sqrt() / PI,
            Shape::HermiteGaussian { k } => (1.0 + (k as f64).sqrt()) / PI,
            Shape::Tabulated(_) => 1.0,
        }
    }

    /// `∫ f`.
    pub fn integral(&self) -> f64 {
        match &self.shape {
            Shape::Tabulated(t) => {
                if t.sup == 0.0 {
                    0.0
                } else if self.dimension == 1 {
                    let r = t.support_radius;
                    integrate(|x| (t.func)(&[x]), -r, r, 1e-10).map(|q| q.value).unwrap_or(f64::NAN)
                } else {
                    f64::NAN
                }
            }
            _ => (0..self.dimension).map(|i| self.factor(i).expect("separable").integral()).product(),
        }
    }

    /// `∫ |f|`.
    pub fn l1_norm(&self) -> f64 {
        match &self.shape {
            Shape::Tabulated(t) => {
                // Crude but valid: sup times the support volume.
                t.sup * (2.0 * t.support_radius).powi(self.dimension as i32)
            }
            _ => (0..self.dimension).map(|i| self.factor(i).expect("separable").abs_integral()).product(),
        }
    }

    /// `sup |f|`.
    pub fn sup_norm(&self) -> f64 {
        match &self.shape {
            Shape::Tabulated(t) => t.sup,
            _ => (0..self.dimension).map(|i| self.factor(i).expect("separable").sup()).product(),
        }
    }

    /// Non-increasing envelope: `envelope(t) ≥ |f(y)|` whenever `|y|_∞ ≥ t`.
    pub fn envelope(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match &self.shape {
            Shape::GaussianBump { a } => (-a * t * t).exp(),
            Shape::HermiteGaussian { k } => {
                // |y₁|^k e^{-|y|²} ≤ (sup of s^k e^{-s²/2}) · e^{-t²/2}
                let h = *k as f64;
                let c = if *k == 0 { 1.0 } else { h.powf(h / 2.0) * (-h / 2.0).exp() };
                let bound = c * (-t * t / 2.0).exp();
                bound.min(self.sup_norm())
            }
            Shape::Tabulated(tab) => {
                if t > tab.support_radius {
                    NEGLIGIBLE * tab.sup
                } else {
                    tab.sup
                }
            }
        }
    }

    /// Smallest `t` with `envelope(t) ≤ NEGLIGIBLE · sup|f|`.
    pub fn support_radius(&self) -> f64 {
        match &self.shape {
            Shape::GaussianBump { a } => (-NEGLIGIBLE.ln() / a).sqrt(),
            Shape::Tabulated(t) => t.support_radius,
            Shape::HermiteGaussian { .. } => {
                let target = NEGLIGIBLE * self.sup_norm();
                let mut t = 1.0;
                while self.envelope(t) > target {
                    t += 0.25;
                }
                t
            }
        }
    }

    /// Point beyond which the envelope underflows to zero in `f64`.
    pub fn envelope_cutoff(&self) -> f64 {
        match &self.shape {
            Shape::GaussianBump { a } => (746.0 / a).sqrt(),
            Shape::HermiteGaussian { k } => (2.0 * (746.0 + 2.0 * *k as f64)).sqrt(),
            Shape::Tabulated(t) => t.support_radius,
        }
    }

    /// `f^k`, when it stays in the closed-form family.
    pub fn power(&self, k: u32) -> Option<TestFunction> {
        match self.shape {
            Shape::GaussianBump { a } => TestFunction::gaussian_bump(a * k as f64, self.dimension).ok(),
            _ => None,
        }
    }

    /// `F[f^k](y)` in one dimension, numerically when no closed form exists.
    pub fn fourier_of_power(&self, k: u32, y: f64) -> Result<Complex64> {
        if self.dimension != 1 {
            return Err(Error::Unsupported("powers of f are handled in one dimension".into()));
        }
        if let Some(p) = self.power(k) {
            return Ok(p.fourier(&[y]));
        }
        let r = self.support_radius();
        numeric_fourier_1d(|x| self.eval(&[x]).powi(k as i32), r, y)
    }

    /// `∫ |f'|^p` (d = 1), adaptive quadrature to absolute tolerance 1e-10.
    pub fn lp_norm_of_deriv(&self, p: f64) -> Result<f64> {
        if self.dimension != 1 {
            return Err(Error::invalid("lp_norm_of_deriv needs d = 1"));
        }
        if !(p >= 1.0) {
            return Err(Error::invalid(format!("need p >= 1, got {p}")));
        }
        let g = |x: f64| self.deriv(&[x], 0).expect("d = 1").abs().powf(p);
        let r = self.support_radius();
        // f' changes sign at its critical points; adaptive bisection handles
        // the resulting |·|^p kinks, but splitting at 0 covers the common case.
        let q = crate::quadrature::integrate_with_breaks(g, -r, r, &[0.0], 1e-10)?;
        Ok(q.value)
    }

    /// Autocorrelation `∫ f(y) f(y + x) dy`, equal to `F[|F[f]|²](x)`.
    pub fn autocorrelation(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        match self.shape {
            Shape::GaussianBump { a } => {
                let d = self.dimension as f64;
                let n2: f64 = x.iter().map(|v| v * v).sum();
                Ok((PI / (2.0 * a)).powf(d / 2.0) * (-a * n2 / 2.0).exp())
            }
            _ if self.dimension == 1 => {
                let r = self.support_radius();
                let q = integrate(|y| self.eval(&[y]) * self.eval(&[y + x[0]]), -r, r, 1e-12)?;
                Ok(q.value)
            }
            _ => Err(Error::Unsupported("autocorrelation of a non-radial function in d >= 2".into())),
        }
    }
}

fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], axis: usize) -> f64 {
    let h = 1e-5 * (1.0 + x[axis].abs());
    let mut y = x.to_vec();
    y[axis] = x[axis] + h;
    let up = f(&y);
    y[axis] = x[axis] - h;
    let dn = f(&y);
    (up - dn) / (2.0 * h)
}

/// `∫_{-R}^{R} g(x) exp(2πi k x) dx` by adaptive quadrature on panels short
/// enough to resolve the oscillation.
pub(crate) fn numeric_fourier_1d(g: impl Fn(f64) -> f64, radius: f64, k: f64) -> Result<Complex64> {
    if radius == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let panels = ((2.0 * radius * k.abs()).ceil() as usize).clamp(1, 10_000);
    let width = 2.0 * radius / panels as f64;
    let tol = 1e-12 / panels as f64;
    let mut re = 0.0;
    let mut im = 0.0;
    for j in 0..panels {
        let a = -radius + j as f64 * width;
        let b = a + width;
        re += integrate(|x| g(x) * (2.0 * PI * k * x).cos(), a, b, tol)?.value;
        im += integrate(|x| g(x) * (2.0 * PI * k * x).sin(), a, b, tol)?.value;
    }
    Ok(Complex64::new(re, im))
}

/// `∫_{R^d} |F[f]|² w(|x|) dx`, reduced to one-dimensional quadrature when
/// `f` is radial. Used by the variance formulas.
pub(crate) fn radial_integral(
    f: &TestFunction,
    weight: impl Fn(f64) -> f64,
    tol: f64,
) -> Result<Option<crate::quadrature::Quad>> {
    if f.radial_fourier_abs2(0.0).is_none() {
        return Ok(None);
    }
    let d = f.dimension();
    let surface = 2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0);
    let g = |rho: f64| {
        surface * f.radial_fourier_abs2(rho).expect("radial") * weight(rho) * rho.powi(d as i32 - 1)
    };
    let q = crate::quadrature::integrate_to_infinity(g, 0.0, f.fourier_scale(), tol)?;
    Ok(Some(q))
}

/// `∫_R |F[f](x)|² w(x) dx` for d = 1 with an even weight.
pub(crate) fn line_integral_1d(
    f: &TestFunction,
    weight: impl Fn(f64) -> f64,
    tol: f64,
) -> Result<crate::quadrature::Quad> {
    let scale = f.fourier_scale();
    if f.factor(0).is_some() {
        integrate_even(|x| f.factor_fourier_abs2(0, x).expect("separable") * weight(x), scale, tol)
    } else {
        integrate_line(|x| f.fourier(&[x]).norm_sqr() * weight(x), scale, tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn builtins(d: usize) -> Vec<TestFunction> {
        vec![
            TestFunction::gaussian_bump(1.0, d).unwrap(),
            TestFunction::gaussian_bump(0.4, d).unwrap(),
            TestFunction::hermite_gaussian(0, d).unwrap(),
            TestFunction::hermite_gaussian(1, d).unwrap(),
            TestFunction::hermite_gaussian(2, d).unwrap(),
            TestFunction::hermite_gaussian(3, d).unwrap(),
        ]
    }

    #[test]
    fn eval_examples() {
        let f = TestFunction::gaussian_bump(1.0, 1).unwrap();
        assert_eq!(f.eval(&[0.0]), 1.0);
        assert!((f.deriv(&[1.0], 0).unwrap() + 2.0 / 1f64.exp()).abs() < 1e-15);
        assert!((f.deriv(&[1.0], 0).unwrap() + 0.73576).abs() < 1e-5);
        let f2 = TestFunction::gaussian_bump(1.0, 2).unwrap();
        let v = f2.eval(&[6.0, 8.0]);
        assert!((v / (-100f64).exp() - 1.0).abs() < 1e-12);
        assert!((v - 3.72e-44).abs() < 1e-46);
        assert!(f.deriv(&[1.0], 1).is_err());
    }

    #[test]
    fn fourier_examples() {
        let f = TestFunction::gaussian_bump(1.0, 1).unwrap();
        assert!((f.fourier(&[0.0]).re - PI.sqrt()).abs() < 1e-15);
        assert!((f.fourier(&[1.0]).re - PI.sqrt() * (-PI * PI).exp()).abs() < 1e-18);
        assert!((f.fourier(&[1.0]).re - 9.1676e-5).abs() < 1e-8);
        let f2 = TestFunction::gaussian_bump(1.0, 2).unwrap();
        assert!((f2.fourier(&[0.0, 0.0]).re - PI).abs() < 1e-14);
    }

    #[test]
    fn integral_and_lp_norm_examples() {
        let f = TestFunction::gaussian_bump(1.0, 1).unwrap();
        assert!((f.integral() - PI.sqrt()).abs() < 1e-15);
        // ∫ 4x² e^{-2x²} dx = √(π/2)
        let two = f.lp_norm_of_deriv(2.0).unwrap();
        assert!((two - (PI / 2.0).sqrt()).abs() < 1e-10, "{two}");
        // ∫ |2x e^{-x²}|^p dx = 2^p Γ((p+1)/2) / p^{(p+1)/2}
        let p = 1.5f64;
        let closed = 2f64.powf(p) * gamma((p + 1.0) / 2.0) / p.powf((p + 1.0) / 2.0);
        let q = f.lp_norm_of_deriv(p).unwrap();
        assert!((q - closed).abs() < 1e-9, "{q} vs {closed}");
        assert!((q - 1.5443).abs() < 1e-4);
        assert!(TestFunction::gaussian_bump(1.0, 2).unwrap().lp_norm_of_deriv(2.0).is_err());
    }

    #[test]
    fn zero_function() {
        let z = TestFunction::zero(2).unwrap();
        assert!(z.is_null());
        assert_eq!(z.eval(&[0.3, 0.1]), 0.0);
        assert_eq!(z.integral(), 0.0);
    }

    #[test]
    fn fourier_matches_direct_quadrature() {
        for f in builtins(1) {
            for j in 0..20 {
                let k = -1.5 + 0.15 * j as f64;
                let direct = numeric_fourier_1d(|x| f.eval(&[x]), 12.0, k).unwrap();
                let closed = f.fourier(&[k]);
                assert!((direct - closed).norm() < 1e-8, "{f:?} k={k}: {direct} vs {closed}");
            }
        }
        // Separable product in two dimensions against iterated transforms.
        for f in builtins(2) {
            for j in 0..20 {
                let k = [0.1 * j as f64 - 1.0, 0.05 * j as f64];
                let g0 = TestFunction::new(
                    match f.shape() {
                        Shape::GaussianBump { a } => Shape::GaussianBump { a: *a },
                        Shape::HermiteGaussian { k } => Shape::HermiteGaussian { k: *k },
                        _ => unreachable!(),
                    },
                    1,
                )
                .unwrap();
                let g1 = match f.shape() {
                    Shape::GaussianBump { a } => TestFunction::gaussian_bump(*a, 1).unwrap(),
                    _ => TestFunction::gaussian_bump(1.0, 1).unwrap(),
                };
                let d0 = numeric_fourier_1d(|x| g0.eval(&[x]), 12.0, k[0]).unwrap();
                let d1 = numeric_fourier_1d(|x| g1.eval(&[x]), 12.0, k[1]).unwrap();
                assert!((d0 * d1 - f.fourier(&k)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn plancherel() {
        for f in builtins(1) {
            let r = f.support_radius();
            let lhs = integrate(|x| f.eval(&[x]).powi(2), -r, r, 1e-12).unwrap().value;
            let rhs = integrate_line(|k| f.fourier(&[k]).norm_sqr(), 0.5, 1e-12).unwrap().value;
            assert!((lhs - rhs).abs() < 1e-8, "{f:?}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut s = Stream::new(17, 0);
        for d in 1..=3 {
            for f in builtins(d) {
                for _ in 0..100 {
                    let x: Vec<f64> = (0..d).map(|_| 4.0 * s.uniform() - 2.0).collect();
                    for axis in 0..d {
                        let exact = f.deriv(&x, axis).unwrap();
                        let fd = central_difference(|y| f.eval(y), &x, axis);
                        assert!((exact - fd).abs() <= 1e-6 * exact.abs().max(1e-3), "{f:?} {x:?}");
                        for axis2 in 0..d {
                            let exact2 = f.deriv2(&x, axis, axis2).unwrap();
                            let fd2 = central_difference(|y| f.deriv(y, axis2).unwrap(), &x, axis);
                            assert!((exact2 - fd2).abs() <= 1e-6 * exact2.abs().max(1e-3));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rapid_decay() {
        for d in 1..=2 {
            for f in builtins(d) {
                let mut x = vec![0.0; d];
                for r in [10.0f64, 12.0, 20.0] {
                    x[0] = r;
                    assert!(r.powi(8) * f.eval(&x).abs() < 1e-6);
                    x[0] = 0.0;
                    x[d - 1] = r;
                    assert!(r.powi(8) * f.eval(&x).abs() < 1e-6);
                }
            }
        }
        let f = TestFunction::gaussian_bump(1.0, 1).unwrap();
        assert!(5f64.powi(8) * f.fourier(&[5.0]).norm() < 1e-6);
    }

    #[test]
    fn envelope_dominates() {
        let mut s = Stream::new(2, 0);
        for d in 1..=3 {
            for f in builtins(d) {
                for _ in 0..2000 {
                    let x: Vec<f64> = (0..d).map(|_| 12.0 * s.uniform() - 6.0).collect();
                    let sup = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    assert!(f.eval(&x).abs() <= f.envelope(sup) * (1.0 + 1e-12));
                }
                let r = f.support_radius();
                assert!(f.envelope(r) <= NEGLIGIBLE * f.sup_norm() * 1.0001);
            }
        }
    }

    #[test]
    fn autocorrelation_matches_quadrature() {
        let f = TestFunction::gaussian_bump(1.0, 1).unwrap();
        let h = TestFunction::tabulated(Tabulated::new("g", 7.0, 1.0, |x| (-x[0] * x[0]).exp()), 1).unwrap();
        for x in [0.0, 0.4, 1.3] {
            let a = f.autocorrelation(&[x]).unwrap();
            let b = h.autocorrelation(&[x]).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }
}
