//! Fourier-domain quantities: cone samples, the split integrals I1/I2, the
//! harmonic-measure lower bound, the frequency cutoff and the stability bounds.

use std::f64::consts::PI;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::FarFieldDataset;
use crate::harness::StabilityRecord;
use crate::quadrature::{ChartFrame, CompositeRule, GaussLegendre, SphereRule};
use crate::source_models::{Shape, SourceModel};
use crate::{fmt_f64, Vec3};

/// `(2 pi)^{-3/2}`, the factor between far-field values and `f_hat`.
pub fn spectral_factor() -> f64 {
    (2.0 * PI).powf(-1.5)
}

/// Anything that can evaluate `f_hat`.
pub trait FourierOracle: Sync {
    fn fourier(&self, xi: &Vec3) -> Complex64;

    /// `\int_{S^2} |f_hat(r theta)|^2 d theta` when known in closed form.
    fn shell_energy(&self, _r: f64) -> Option<f64> {
        None
    }
}

impl FourierOracle for SourceModel {
    fn fourier(&self, xi: &Vec3) -> Complex64 {
        self.closed_form_fourier(xi)
    }

    fn shell_energy(&self, r: f64) -> Option<f64> {
        Some(SourceModel::shell_energy(self, r))
    }
}

impl<F: Fn(&Vec3) -> Complex64 + Sync> FourierOracle for F {
    fn fourier(&self, xi: &Vec3) -> Complex64 {
        self(xi)
    }
}

/// Radial Gauss-Legendre density and the angular rule used when the oracle
/// has no closed-form shell energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialQuadrature {
    pub nodes_per_unit: usize,
    pub angular_degree: usize,
}

impl Default for RadialQuadrature {
    fn default() -> Self {
        Self {
            nodes_per_unit: 32,
            angular_degree: 64,
        }
    }
}

fn shell(oracle: &dyn FourierOracle, r: f64, rule: &SphereRule) -> f64 {
    if let Some(e) = oracle.shell_energy(r) {
        return e;
    }
    rule.directions
        .iter()
        .zip(&rule.weights)
        .map(|(d, w)| w * oracle.fourier(&(d * r)).norm_sqr())
        .sum()
}

/// `I1(s) = \int_{|xi| <= s} |f_hat|^2`.
pub fn i1(s: f64, oracle: &dyn FourierOracle, rq: &RadialQuadrature) -> f64 {
    if !(s > 0.0) {
        return 0.0;
    }
    let rule = SphereRule::product_gauss(rq.angular_degree, ChartFrame::around(&Vec3::z()));
    CompositeRule::new(0.0, s, rq.nodes_per_unit).integrate(|r| r * r * shell(oracle, r, &rule))
}

/// `I2(s) = \int_{|xi| > s} |f_hat|^2`, truncated where the integrand is negligible.
pub fn i2(s: f64, oracle: &dyn FourierOracle, rq: &RadialQuadrature) -> f64 {
    let rule = SphereRule::product_gauss(rq.angular_degree, ChartFrame::around(&Vec3::z()));
    radial_tail(s.max(0.0), rq.nodes_per_unit, |r| {
        r * r * shell(oracle, r, &rule)
    })
}

/// `\int_s^\infty g(r) dr` for a nonnegative integrand, on intervals of doubling
/// width until the integrand drops below 1e-16 of its peak or the contributions
/// become negligible.
pub fn radial_tail<G: Fn(f64) -> f64>(s: f64, nodes_per_unit: usize, g: G) -> f64 {
    let mut a = s;
    let mut width = s.max(1.0);
    let mut total = 0.0;
    let mut peak: f64 = 0.0;
    let mut quiet = 0;
    while a < 1e4 {
        let rule = CompositeRule::new(a, a + width, nodes_per_unit);
        let mut part = 0.0;
        let mut local_max: f64 = 0.0;
        for (r, w) in rule.nodes.iter().zip(&rule.weights) {
            let v = g(*r);
            part += w * v;
            local_max = local_max.max(v.abs());
        }
        total += part;
        peak = peak.max(local_max);
        if local_max <= 1e-16 * peak || part.abs() <= 1e-12 * total.abs() {
            quiet += 1;
            if quiet >= 2 {
                break;
            }
        } else {
            quiet = 0;
        }
        a += width;
        width *= 2.0;
    }
    total
}

/// `I1(k)` at complex `k`, available for single-Gaussian sources where
/// `|f_hat|^2` continues analytically in the radius.
pub fn i1_complex(model: &SourceModel, k: Complex64) -> Result<Complex64> {
    let [c] = model.components() else {
        return Err(Error::Unsupported(
            "complex I1 needs a single-Gaussian source".into(),
        ));
    };
    let Shape::Gaussian { sigma } = c.shape else {
        return Err(Error::Unsupported(
            "complex I1 needs a single-Gaussian source".into(),
        ));
    };
    let amp2 = c.amplitude.norm_sqr();
    let s2 = sigma * sigma;
    let gl = GaussLegendre::new(64);
    let (t, w) = gl.mapped(0.0, 1.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for (ti, wi) in t.iter().zip(&w) {
        let l = k * *ti;
        acc += l * l * (-s2 * l * l).exp() * *wi;
    }
    Ok(acc * k * (4.0 * PI * amp2 * s2 * s2 * s2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    FromDataset,
    FromOracle,
    FromContinuation,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::FromDataset => "from_dataset",
            Provenance::FromOracle => "from_oracle",
            Provenance::FromContinuation => "from_continuation",
        }
    }
}

/// Values of `f_hat` at points `xi`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSamples {
    pub points: Vec<Vec3>,
    pub values: Vec<Complex64>,
    pub provenance: Provenance,
}

impl SpectralSamples {
    pub fn from_oracle(points: Vec<Vec3>, oracle: &dyn FourierOracle) -> Self {
        use rayon::prelude::*;
        let values = points.par_iter().map(|p| oracle.fourier(p)).collect();
        Self {
            points,
            values,
            provenance: Provenance::FromOracle,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        writeln!(out, "xi_x,xi_y,xi_z,re,im,provenance")?;
        for (p, v) in self.points.iter().zip(&self.values) {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_f64(p.x),
                fmt_f64(p.y),
                fmt_f64(p.z),
                fmt_f64(v.re),
                fmt_f64(v.im),
                self.provenance.as_str()
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `f_hat(k x_hat) = (2 pi)^{-3/2} u_inf(x_hat, k)` for every dataset entry.
pub fn fourier_on_cone(dataset: &FarFieldDataset) -> Result<SpectralSamples> {
    if dataset.values.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let c = spectral_factor();
    let mut points = Vec::with_capacity(dataset.values.len());
    let mut values = Vec::with_capacity(dataset.values.len());
    for (d, x) in dataset.directions.iter().enumerate() {
        for (j, k) in dataset.wavenumbers.iter().enumerate() {
            points.push(x * *k);
            values.push(dataset.value(d, j) * c);
        }
    }
    Ok(SpectralSamples {
        points,
        values,
        provenance: Provenance::FromDataset,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicMeasureBound {
    #[serde(rename = "K")]
    pub k_max: f64,
}

/// Piecewise lower bound on the harmonic measure: 1/2 below `2^{1/4} K`,
/// `((k/K)^4 - 1)^{-1/2} / pi` above, and the larger branch at the junction.
pub fn harmonic_measure_lb(hmb: &HarmonicMeasureBound, k: f64) -> Result<f64> {
    let big_k = hmb.k_max;
    if !(big_k > 0.0) || !(k > big_k) {
        return Err(Error::OutOfDomain(format!(
            "need k > K > 0, got k = {k}, K = {big_k}"
        )));
    }
    let junction = 2f64.powf(0.25) * big_k;
    let far = || 1.0 / (PI * ((k / big_k).powi(4) - 1.0).sqrt());
    Ok(if k < junction {
        0.5
    } else if k > junction {
        far()
    } else {
        far().max(0.5)
    })
}

/// `J(k) = e^{-2 (R + 1) k} I1(k)` on the real axis.
pub fn sector_j(k: f64, i1_value: f64, radius: f64) -> f64 {
    (-2.0 * (radius + 1.0) * k).exp() * i1_value
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffCase {
    /// `s` grows like `|ln eps|^{1/4}`
    LogBranch,
    /// `s = K`
    Band,
}

/// Cutoff radius from `ln(eps)`, usable when `eps` itself underflows.
pub fn cutoff_s_ln(k_max: f64, ln_eps: f64, alpha: f64, radius: f64) -> Result<(f64, CutoffCase)> {
    if !(ln_eps < -1.0) {
        return Err(Error::EpsTooLarge(ln_eps.exp()));
    }
    if !(k_max > 1.0) {
        return Err(Error::OutOfDomain(format!("K must exceed 1, got {k_max}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OutOfDomain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let l4 = (-ln_eps).powf(0.25);
    let geo = 4.0 * PI * (radius + 1.0);
    let threshold = 2f64.powf(0.25) * k_max.cbrt() * geo.cbrt() / alpha.cbrt();
    if l4 > threshold {
        Ok((
            alpha.cbrt() / geo.cbrt() * k_max.powf(2.0 / 3.0) * l4,
            CutoffCase::LogBranch,
        ))
    } else {
        Ok((k_max, CutoffCase::Band))
    }
}

pub fn cutoff_s(k_max: f64, eps: f64, alpha: f64, radius: f64) -> Result<(f64, CutoffCase)> {
    if !(eps > 0.0) || eps >= (-1f64).exp() {
        return Err(Error::EpsTooLarge(eps));
    }
    cutoff_s_ln(k_max, eps.ln(), alpha, radius)
}

/// Parameters of the two-term stability bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub alpha: f64,
    #[serde(rename = "C")]
    pub c: f64,
    /// Bound on the `H^{2n+1}` norm of the source.
    #[serde(rename = "M")]
    pub m: f64,
    /// `L^2` norm of the source.
    #[serde(rename = "M0")]
    pub m0: f64,
    pub n: u32,
    #[serde(rename = "R")]
    pub radius: f64,
}

impl BoundParams {
    fn check(&self, k_max: f64, ln_eps: f64) -> Result<()> {
        if !(ln_eps < -1.0) {
            return Err(Error::EpsTooLarge(ln_eps.exp()));
        }
        if !(k_max > 1.0) {
            return Err(Error::OutOfDomain(format!("K must exceed 1, got {k_max}")));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::OutOfDomain(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `L^2` error against the first bound
    L2,
    /// `H^{-1}` error against the second bound
    Hm1,
}

/// `ln` of the bracketed two-term expression (without `C`).
fn ln_terms(kind: BoundKind, p: &BoundParams, alpha: f64, k_max: f64, ln_eps: f64) -> f64 {
    let hoelder = 3.0 * k_max.ln() + 2.0 * k_max * (1.0 - alpha) + 2.0 * alpha * ln_eps;
    let abs_ln = -ln_eps;
    let log_term = match kind {
        BoundKind::L2 => {
            2.0 * p.m.ln()
                - (4.0 * p.n as f64 - 3.0) * ((2.0 / 3.0) * k_max.ln() + 0.25 * abs_ln.ln())
        }
        BoundKind::Hm1 => 2.0 * p.m0.ln() - (4.0 / 3.0) * k_max.ln() - 0.5 * abs_ln.ln(),
    };
    let hi = hoelder.max(log_term);
    hi + ((hoelder - hi).exp() + (log_term - hi).exp()).ln()
}

pub fn bound_value_ln(
    kind: BoundKind,
    params: &BoundParams,
    k_max: f64,
    ln_eps: f64,
) -> Result<f64> {
    params.check(k_max, ln_eps)?;
    Ok(params.c * ln_terms(kind, params, params.alpha, k_max, ln_eps).exp())
}

/// `C [K^3 e^{2K(1-alpha)} eps^{2 alpha} + M^2 / (K^{2/3} |ln eps|^{1/4})^{4n-3}]`
pub fn bound_thm1(params: &BoundParams, k_max: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::EpsTooLarge(eps));
    }
    bound_value_ln(BoundKind::L2, params, k_max, eps.ln())
}

/// `C [K^3 e^{2K(1-alpha)} eps^{2 alpha} + M0^2 / (K^{4/3} |ln eps|^{1/2})]`
pub fn bound_thm2(params: &BoundParams, k_max: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::EpsTooLarge(eps));
    }
    bound_value_ln(BoundKind::Hm1, params, k_max, eps.ln())
}

/// Fitted bound parameters with fit diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundFit {
    pub params: BoundParams,
    /// `C` of the least-squares fit in log space, before majorization.
    pub c_least_squares: f64,
    pub rms_log_residual: f64,
    /// Smallest `ln(bound / err^2)` over the fitted records (zero after majorization).
    pub min_log_slack: f64,
    pub records_used: usize,
}

/// Fit `(ln C, alpha)` by least squares in log space, then raise `C` to the smallest
/// value for which the bound majorizes every squared error. Errors are taken from
/// the records according to `kinds`; all kinds share one `(C, alpha)`.
pub fn bound_fit(
    records: &[StabilityRecord],
    template: &BoundParams,
    kinds: &[BoundKind],
) -> Result<BoundFit> {
    let usable: Vec<&StabilityRecord> = records
        .iter()
        .filter(|r| r.status == "ok" && r.eps > 0.0 && r.eps < (-1f64).exp() && r.k_max > 1.0)
        .collect();
    if usable.len() < 5 {
        return Err(Error::InsufficientRecords(format!(
            "{} usable records",
            usable.len()
        )));
    }
    let lo = usable.iter().map(|r| r.eps).fold(f64::INFINITY, f64::min);
    let hi = usable.iter().map(|r| r.eps).fold(0.0, f64::max);
    if hi / lo < 100.0 * (1.0 - 1e-9) {
        return Err(Error::InsufficientRecords(format!(
            "eps spans only {:.2} decades",
            (hi / lo).log10()
        )));
    }
    // (kind, K, ln eps, ln err^2)
    let mut points = Vec::new();
    for r in &usable {
        for &kind in kinds {
            let e = match kind {
                BoundKind::L2 => r.err_l2,
                BoundKind::Hm1 => r.err_hm1,
            };
            points.push((kind, r.k_max, r.eps.ln(), 2.0 * e.ln()));
        }
    }
    if points.iter().any(|p| !p.3.is_finite()) {
        return Err(Error::FitOutOfRange { alpha: 1.0 });
    }
    let objective = |alpha: f64| -> (f64, f64) {
        let d: Vec<f64> = points
            .iter()
            .map(|(kind, k, le, lerr)| lerr - ln_terms(*kind, template, alpha, *k, *le))
            .collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / d.len() as f64;
        (var, mean)
    };
    let grid = 2000;
    let (mut best, mut best_val) = (0.5, f64::INFINITY);
    for i in 0..=grid {
        let a = 1e-6 + (1.0 - 2e-6) * i as f64 / grid as f64;
        let v = objective(a).0;
        if v < best_val {
            best_val = v;
            best = a;
        }
    }
    let step = 1.0 / grid as f64;
    let (mut a, mut b) = ((best - step).max(1e-9), (best + step).min(1.0 - 1e-9));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if objective(x1).0 <= objective(x2).0 {
            b = x2;
        } else {
            a = x1;
        }
        if b - a < 1e-13 {
            break;
        }
    }
    let alpha = 0.5 * (a + b);
    if !(1e-3..=1.0 - 1e-3).contains(&alpha) {
        return Err(Error::FitOutOfRange { alpha });
    }
    let (var, mean) = objective(alpha);
    let ln_c_major = points
        .iter()
        .map(|(kind, k, le, lerr)| lerr - ln_terms(*kind, template, alpha, *k, *le))
        .fold(f64::NEG_INFINITY, f64::max);
    let params = BoundParams {
        alpha,
        c: ln_c_major.exp(),
        ..*template
    };
    Ok(BoundFit {
        params,
        c_least_squares: mean.exp(),
        rms_log_residual: var.sqrt(),
        min_log_slack: 0.0,
        records_used: usable.len(),
    })
}
