//! Compactly supported test sources with closed-form Fourier transforms.
//!
//! Transform convention: `f_hat(xi) = (2 pi)^{-3/2} \int f(x) e^{-i xi.x} dx`.
//! Gaussian components are cut off at the support radius; the transform of the
//! untruncated Gaussian is used as the closed form. Since `|c| + 6 sigma <= R` the
//! difference is of order `|A| sigma^3 e^{-18}`; `SourceModel::truncation_floor`
//! gives a rigorous bound that oracle comparisons add to their tolerance.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::QuadratureSpec;
use crate::quadrature::GaussLegendre;
use crate::special::{sinc, sph_bessel_scaled};
use crate::Vec3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    /// `exp(-|y - c|^2 / (2 sigma^2))`
    Gaussian { sigma: f64 },
    /// `(1 - |y - c|^2 / r^2)^m` on the ball of radius r around c
    PolynomialBump { radius: f64, m: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawComponent", into = "RawComponent")]
pub struct SourceComponent {
    pub shape: Shape,
    pub center: Vec3,
    pub amplitude: Complex64,
}

#[derive(Serialize, Deserialize)]
struct RawComponent {
    kind: String,
    center: [f64; 3],
    amplitude: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    m: Option<u32>,
}

impl TryFrom<RawComponent> for SourceComponent {
    type Error = String;

    fn try_from(raw: RawComponent) -> std::result::Result<Self, String> {
        let shape = match raw.kind.as_str() {
            "gaussian" => Shape::Gaussian {
                sigma: raw.sigma.ok_or("gaussian component needs sigma")?,
            },
            "polynomial_bump" => Shape::PolynomialBump {
                radius: raw.radius.ok_or("polynomial_bump needs radius")?,
                m: raw.m.ok_or("polynomial_bump needs m")?,
            },
            other => return Err(format!("unknown component kind '{other}'")),
        };
        Ok(Self {
            shape,
            center: Vec3::from(raw.center),
            amplitude: Complex64::new(raw.amplitude[0], raw.amplitude[1]),
        })
    }
}

impl From<SourceComponent> for RawComponent {
    fn from(c: SourceComponent) -> Self {
        let (kind, sigma, radius, m) = match c.shape {
            Shape::Gaussian { sigma } => ("gaussian", Some(sigma), None, None),
            Shape::PolynomialBump { radius, m } => ("polynomial_bump", None, Some(radius), Some(m)),
        };
        Self {
            kind: kind.to_string(),
            center: [c.center.x, c.center.y, c.center.z],
            amplitude: [c.amplitude.re, c.amplitude.im],
            sigma,
            radius,
            m,
        }
    }
}

impl SourceComponent {
    pub fn gaussian(center: Vec3, amplitude: Complex64, sigma: f64) -> Self {
        Self {
            shape: Shape::Gaussian { sigma },
            center,
            amplitude,
        }
    }

    pub fn bump(center: Vec3, amplitude: Complex64, radius: f64, m: u32) -> Self {
        Self {
            shape: Shape::PolynomialBump { radius, m },
            center,
            amplitude,
        }
    }

    /// Radius of the ball around the center that must fit inside B(0, R).
    pub fn reach(&self) -> f64 {
        match self.shape {
            Shape::Gaussian { sigma } => 6.0 * sigma,
            Shape::PolynomialBump { radius, .. } => radius,
        }
    }

    fn profile(&self, d2: f64) -> f64 {
        match self.shape {
            Shape::Gaussian { sigma } => (-0.5 * d2 / (sigma * sigma)).exp(),
            Shape::PolynomialBump { radius, m } => {
                let t = 1.0 - d2 / (radius * radius);
                if t <= 0.0 {
                    0.0
                } else {
                    t.powi(m as i32)
                }
            }
        }
    }

    pub fn eval(&self, y: &Vec3) -> Complex64 {
        self.amplitude * self.profile((y - self.center).norm_squared())
    }

    /// Radial part of the transform: `f_hat(xi) = A e^{-i xi.c} g(|xi|)`.
    pub fn radial_transform(&self, r: f64) -> f64 {
        match self.shape {
            Shape::Gaussian { sigma } => sigma.powi(3) * (-0.5 * sigma * sigma * r * r).exp(),
            Shape::PolynomialBump { radius, m } => {
                let mut fact = 1.0;
                for k in 1..=m {
                    fact *= k as f64;
                }
                radius.powi(3)
                    * 2f64.powi(m as i32)
                    * fact
                    * (2.0 / PI).sqrt()
                    * sph_bessel_scaled(m + 1, radius * r)
            }
        }
    }

    pub fn fourier(&self, xi: &Vec3) -> Complex64 {
        let phase = Complex64::from_polar(1.0, -xi.dot(&self.center));
        self.amplitude * phase * self.radial_transform(xi.norm())
    }

    /// Closed-form L^p norm for p in {1, 2}, ignoring truncation.
    pub fn lp_norm(&self, p: u32) -> f64 {
        let a = self.amplitude.norm();
        match self.shape {
            Shape::Gaussian { sigma } => {
                let pf = p as f64;
                a * (2.0 * PI * sigma * sigma / pf).powf(1.5 / pf)
            }
            Shape::PolynomialBump { radius, m } => {
                // 4 pi r^3 \int_0^1 (1 - t^2)^q t^2 dt with q = m p
                let q = m * p;
                let mut beta = 1.0 / 3.0;
                for j in 1..=q {
                    beta *= 2.0 * j as f64 / (2.0 * j as f64 + 3.0);
                }
                (a.powi(p as i32) * 4.0 * PI * radius.powi(3) * beta).powf(1.0 / p as f64)
            }
        }
    }
}

/// Source `f = sum of components`, supported in B(0, R).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    #[serde(rename = "R")]
    support_radius: f64,
    components: Vec<SourceComponent>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceNorms {
    pub l1: f64,
    pub l2: f64,
    pub h_minus_1: f64,
    /// Largest integer s with f in H^s; `None` for infinitely smooth sources.
    pub sobolev_order_bound: Option<u32>,
}

impl SourceModel {
    pub fn new(support_radius: f64, components: Vec<SourceComponent>) -> Result<Self> {
        let model = Self {
            support_radius,
            components,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn empty(support_radius: f64) -> Self {
        Self {
            support_radius,
            components: Vec::new(),
        }
    }

    /// Unit-amplitude Gaussian centered at the origin.
    pub fn centered_gaussian(sigma: f64, support_radius: f64) -> Result<Self> {
        Self::new(
            support_radius,
            vec![SourceComponent::gaussian(
                Vec3::zeros(),
                Complex64::new(1.0, 0.0),
                sigma,
            )],
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.support_radius >= 1.0) || !self.support_radius.is_finite() {
            return Err(Error::InvalidInput(format!(
                "support radius must be finite and >= 1, got {}",
                self.support_radius
            )));
        }
        for (i, c) in self.components.iter().enumerate() {
            let ok = match c.shape {
                Shape::Gaussian { sigma } => sigma > 0.0 && sigma.is_finite(),
                Shape::PolynomialBump { radius, m } => radius > 0.0 && radius.is_finite() && m >= 1,
            };
            if !ok || !c.amplitude.re.is_finite() || !c.amplitude.im.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "component {i} has invalid parameters"
                )));
            }
            if c.center.norm() + c.reach() > self.support_radius * (1.0 + 1e-12) {
                return Err(Error::InvalidInput(format!(
                    "component {i} reaches |c| + {:.4} = {:.4} beyond R = {}",
                    c.reach(),
                    c.center.norm() + c.reach(),
                    self.support_radius
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("source model serializes")
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn components(&self) -> &[SourceComponent] {
        &self.components
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Multiply every amplitude by `s`.
    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for c in &mut out.components {
            c.amplitude *= s;
        }
        out
    }

    /// Shift every component center by `c`; fails if the support leaves B(0, R).
    pub fn translated(&self, shift: &Vec3) -> Result<Self> {
        let mut out = self.clone();
        for c in &mut out.components {
            c.center += shift;
        }
        out.validate()?;
        Ok(out)
    }

    /// Whether every component is real-valued.
    pub fn is_real(&self) -> bool {
        self.components.iter().all(|c| c.amplitude.im == 0.0)
    }

    /// Upper bound on `|f_hat - closed form|` caused by cutting Gaussians at `|y| = R`:
    /// the Gaussian mass outside the ball of radius `R - |c|` around each center.
    pub fn truncation_floor(&self) -> f64 {
        self.components
            .iter()
            .filter_map(|c| match c.shape {
                Shape::Gaussian { sigma } => {
                    let t = (self.support_radius - c.center.norm()) / sigma;
                    let tail =
                        (-0.5 * t * t).exp() * ((2.0 / PI).sqrt() * t + (2.0 / PI).sqrt() / t);
                    Some(c.amplitude.norm() * sigma.powi(3) * tail)
                }
                Shape::PolynomialBump { .. } => None,
            })
            .sum()
    }

    /// `truncation_floor` in far-field units.
    pub fn far_field_floor(&self) -> f64 {
        (2.0 * PI).powf(1.5) * self.truncation_floor()
    }

    /// Pointwise evaluation; exactly zero for `|y| >= R`.
    pub fn eval(&self, y: &Vec3) -> Complex64 {
        if y.norm() >= self.support_radius {
            return Complex64::new(0.0, 0.0);
        }
        self.components.iter().map(|c| c.eval(y)).sum()
    }

    pub fn closed_form_fourier(&self, xi: &Vec3) -> Complex64 {
        self.components.iter().map(|c| c.fourier(xi)).sum()
    }

    /// `\int_{S^2} |f_hat(r theta)|^2 d theta`, exact angular reduction of the mixture.
    pub fn shell_energy(&self, r: f64) -> f64 {
        let g: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.radial_transform(r))
            .collect();
        let mut acc = 0.0;
        for (i, ci) in self.components.iter().enumerate() {
            acc += ci.amplitude.norm_sqr() * g[i] * g[i];
            for (j, cj) in self.components.iter().enumerate().skip(i + 1) {
                let cross = (ci.amplitude * cj.amplitude.conj()).re;
                let d = (ci.center - cj.center).norm();
                acc += 2.0 * cross * g[i] * g[j] * sinc(r * d);
            }
        }
        4.0 * PI * acc
    }

    pub fn sobolev_order_bound(&self) -> Option<u32> {
        self.components
            .iter()
            .filter_map(|c| match c.shape {
                Shape::Gaussian { .. } => None,
                Shape::PolynomialBump { m, .. } => Some(m),
            })
            .min()
    }

    fn disjoint_supports(&self) -> bool {
        for (i, a) in self.components.iter().enumerate() {
            for b in self.components.iter().skip(i + 1) {
                if (a.center - b.center).norm() < a.reach() + b.reach() {
                    return false;
                }
            }
        }
        true
    }

    /// `(L1, L2)` by tensor quadrature on the cube `[-R, R]^3`.
    pub fn lp_by_quadrature(&self, n: usize) -> (f64, f64) {
        use rayon::prelude::*;
        let gl = GaussLegendre::new(n);
        let (x, w) = gl.mapped(-self.support_radius, self.support_radius);
        let (l1, l2) = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut a1 = 0.0;
                let mut a2 = 0.0;
                for j in 0..n {
                    for i in 0..n {
                        let v = self.eval(&Vec3::new(x[i], x[j], x[k])).norm();
                        let wt = w[i] * w[j] * w[k];
                        a1 += wt * v;
                        a2 += wt * v * v;
                    }
                }
                (a1, a2)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        (l1, l2.sqrt())
    }

    /// `\int w(|xi|) |f_hat(xi)|^2 d xi` over `|xi| >= s`, using the shell energy.
    pub fn weighted_tail<W: Fn(f64) -> f64>(&self, s: f64, weight: W) -> f64 {
        crate::spectral::radial_tail(s, 32, |r| weight(r) * r * r * self.shell_energy(r))
    }
}

/// L1 and L2 by quadrature (refined once), H^{-1} by the radial Fourier integral.
pub fn source_norms(model: &SourceModel, quad: &QuadratureSpec) -> Result<SourceNorms> {
    quad.validate()?;
    if model.is_empty() {
        return Ok(SourceNorms {
            l1: 0.0,
            l2: 0.0,
            h_minus_1: 0.0,
            sobolev_order_bound: None,
        });
    }
    let (l1, l2) = if model.components.len() == 1 || model.disjoint_supports() {
        let l1 = model.components.iter().map(|c| c.lp_norm(1)).sum();
        let l2 = model
            .components
            .iter()
            .map(|c| c.lp_norm(2).powi(2))
            .sum::<f64>()
            .sqrt();
        (l1, l2)
    } else {
        let n = quad.points_per_axis;
        let (a1, a2) = model.lp_by_quadrature(n);
        let (b1, b2) = model.lp_by_quadrature(2 * n);
        let d1 = (a1 - b1).abs() / b1.max(1e-300);
        let d2 = (a2 - b2).abs() / b2.max(1e-300);
        if d1 > 1e-4 || d2 > 1e-4 {
            return Err(Error::QuadratureUnderResolved(format!(
                "norm refinement {n} -> {} changed L1 by {d1:.2e}, L2 by {d2:.2e}",
                2 * n
            )));
        }
        (b1, b2)
    };
    let h_minus_1 = model.weighted_tail(0.0, |r| 1.0 / (1.0 + r * r)).sqrt();
    Ok(SourceNorms {
        l1,
        l2,
        h_minus_1: h_minus_1.min(l2),
        sobolev_order_bound: model.sobolev_order_bound(),
    })
}
