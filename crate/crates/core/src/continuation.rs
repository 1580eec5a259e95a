//! Analytic continuation of far-field data in the wavenumber and in the
//! observation direction, with Hoelder-type certificates.
//!
//! Both continuations fit a polynomial whose coefficients carry a Gaussian prior
//! matched to the Taylor bound of an entire function of exponential type:
//! `u_inf(x_hat0, a s)` has `|c_j| <= |f|_{L1} (a R)^j / j!`, and the chart
//! representation `H(theta, phi)` has `|c_beta| <= |f|_{L1} (4 k R)^{|beta|} / beta!`.

use std::f64::consts::PI;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt_f64;
use crate::polyfit::{ln_factorial, FitOutcome, FitPlan};
use crate::quadrature::ChartFrame;
use crate::Vec3;

/// Smallest maximizer of `(2k)^n / n!` over `n >= 0`, with the maximal value.
pub fn n0_with_value(k: f64) -> (usize, f64) {
    let x = 2.0 * k;
    let mut t = 1.0;
    let mut best = (0, 1.0);
    let limit = (4.0 * k).ceil() as usize + 10;
    for n in 1..=limit {
        t *= x / n as f64;
        if t > best.1 {
            best = (n, t);
        }
    }
    best
}

pub fn n0_of_k(k: f64) -> usize {
    n0_with_value(k).0
}

/// `max{(2k)^{n0} / n0!, 1} |f|_{L1}`
pub fn m2_const(k: f64, f_l1: f64) -> f64 {
    n0_with_value(k).1.max(1.0) * f_l1
}

/// Cell construction on (-1, 1) for a data interval `(lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellGridBound {
    pub n_cells: usize,
    pub j0: usize,
    pub overlap: f64,
    /// `|J| = overlap / rho`
    pub j_len: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub gamma: f64,
    pub delta1: f64,
    #[serde(rename = "N")]
    pub n_const: f64,
}

/// Cells `I_j = [s_j - rho/5, s_j + rho/5)` with `s_j = -1 + (2j - 1) rho / 5`,
/// `L = 6 / |J|`, `gamma = ln(8/7) / ln(8L/7)` and `delta1 = ln(8/7) / 2`.
pub fn cell_grid_bound(rho: f64, lo: f64, hi: f64) -> Result<CellGridBound> {
    if !(rho > 0.0) || !(hi > lo) {
        return Err(Error::OutOfDomain(format!(
            "need rho > 0 and lo < hi, got {rho}, ({lo}, {hi})"
        )));
    }
    let n_cells = ((5.0 / rho).round() as usize).max(1);
    let mut best = (0, 0.0);
    for j in 1..=n_cells {
        let s = -1.0 + (2.0 * j as f64 - 1.0) * rho / 5.0;
        let ov = (hi.min(s + rho / 5.0) - lo.max(s - rho / 5.0)).max(0.0);
        if ov > best.1 * (1.0 + 1e-12) + 1e-300 {
            best = (j, ov);
        }
    }
    if best.1 <= 1e-15 {
        return Err(Error::DegenerateOverlap);
    }
    let j_len = best.1 / rho;
    let l = 6.0 / j_len;
    let ln87 = (8.0f64 / 7.0).ln();
    let gamma = ln87 / (8.0 * l / 7.0).ln();
    let delta1 = 0.5 * ln87;
    let ln_l = l.ln();
    let n_const =
        2.0 * delta1.powf(-gamma) * ln_l.powf(gamma) + ln87.powf(gamma) * ln_l.powf(-gamma);
    Ok(CellGridBound {
        n_cells,
        j0: best.0,
        overlap: best.1,
        j_len,
        l,
        gamma,
        delta1,
        n_const,
    })
}

/// `(N, gamma)` for a data interval of the given length starting at -1.
pub fn cell_grid_gamma(rho: f64, interval_length: f64) -> Result<(f64, f64)> {
    if !(interval_length > 0.0 && interval_length <= 2.0) {
        return Err(Error::OutOfDomain(format!(
            "interval length must lie in (0, 2], got {interval_length}"
        )));
    }
    let l = cell_grid_bound(rho, -1.0, -1.0 + interval_length)?;
    Ok((l.n_const, l.gamma))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizationSpec {
    /// Sup-norm bound of the data noise.
    pub noise_level: f64,
    /// Noise width floor relative to the data sup.
    pub relative_floor: f64,
    /// Discrepancy factor on the residual RMS.
    pub tau: f64,
    pub max_degree: Option<usize>,
    pub fixed_degree: Option<usize>,
    /// `None` uses the problem default: full prior in the wavenumber,
    /// discrepancy in angle.
    #[serde(default)]
    pub degree_rule: Option<DegreeRule>,
    /// The source is known to be real, so `u(-k) = conj u(k)`; the wavenumber
    /// fit then also uses the reflected samples on `(-K, 0)`.
    #[serde(default)]
    pub conjugate_reflection: bool,
}

/// How the polynomial degree is chosen when it is not fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeRule {
    /// MAP fit at the largest admissible degree; the prior does the truncation.
    FullPrior,
    /// Smallest degree whose residual RMS is within `tau * sigma`.
    Discrepancy,
}

impl DegreeRule {
    pub(crate) fn fit(
        self,
        plan: &FitPlan,
        y: &[Complex64],
        fixed: Option<usize>,
        tau: f64,
    ) -> FitOutcome {
        match (fixed, self) {
            (Some(d), _) => plan.fit_degree(y, d),
            (None, DegreeRule::FullPrior) => plan.fit_degree(y, plan.max_degree()),
            (None, DegreeRule::Discrepancy) => plan.fit_discrepancy(y, tau),
        }
    }
}

impl Default for RegularizationSpec {
    fn default() -> Self {
        Self {
            noise_level: 0.0,
            relative_floor: 1e-8,
            tau: 1.5,
            max_degree: None,
            fixed_degree: None,
            degree_rule: None,
            conjugate_reflection: false,
        }
    }
}

impl RegularizationSpec {
    pub fn with_noise(noise_level: f64) -> Self {
        Self {
            noise_level,
            ..Self::default()
        }
    }

    fn sigma(&self, sup: f64) -> f64 {
        (self.noise_level / 2f64.sqrt()).max(self.relative_floor * sup)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SamplePoint {
    Wavenumber(f64),
    Angles { theta: f64, phi: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryCertificate {
    pub grid: CellGridBound,
    /// `e |g| ln L <= ln(8/7) - delta1` with `|g| = sup / (2 B)`
    pub feasible: bool,
    pub bound: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderCertificate {
    pub sup_small: f64,
    pub sup_large: f64,
    pub a_priori_bound: f64,
    pub gamma: f64,
    /// `B^{1 - gamma} sup_small^gamma - sup_large`
    pub slack: f64,
    pub theory: Option<TheoryCertificate>,
    pub flags: Vec<String>,
}

impl HolderCertificate {
    pub fn passed(&self) -> bool {
        self.slack >= 0.0 && self.theory.as_ref().is_none_or(|t| t.slack >= 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationResult {
    pub extended: Vec<(SamplePoint, Complex64)>,
    pub gamma_emp: f64,
    pub certificate: HolderCertificate,
    pub degree: usize,
    pub residual_rms: f64,
    pub noise_sigma: f64,
}

impl ContinuationResult {
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut out = std::io::BufWriter::new(fs::File::create(dir.join(format!("{stem}.csv")))?);
        match self.extended.first().map(|p| p.0) {
            Some(SamplePoint::Angles { .. }) => writeln!(out, "theta,phi,re,im")?,
            _ => writeln!(out, "k,re,im")?,
        }
        for (p, v) in &self.extended {
            match p {
                SamplePoint::Wavenumber(k) => {
                    writeln!(out, "{},{},{}", fmt_f64(*k), fmt_f64(v.re), fmt_f64(v.im))?
                }
                SamplePoint::Angles { theta, phi } => writeln!(
                    out,
                    "{},{},{},{}",
                    fmt_f64(*theta),
                    fmt_f64(*phi),
                    fmt_f64(v.re),
                    fmt_f64(v.im)
                )?,
            }
        }
        out.flush()?;
        #[derive(Serialize)]
        struct Cert<'a> {
            gamma_emp: f64,
            degree: usize,
            residual_rms: f64,
            noise_sigma: f64,
            passed: bool,
            certificate: &'a HolderCertificate,
        }
        let cert = Cert {
            gamma_emp: self.gamma_emp,
            degree: self.degree,
            residual_rms: self.residual_rms,
            noise_sigma: self.noise_sigma,
            passed: self.certificate.passed(),
            certificate: &self.certificate,
        };
        fs::write(
            dir.join(format!("{stem}_certificate.json")),
            serde_json::to_string_pretty(&cert)?,
        )?;
        Ok(())
    }
}

/// Largest admissible Hoelder exponent `ln(large/B) / ln(small/B)`, clamped to
/// `[0.001, 0.999]` and rounded down to a multiple of 1e-6.
fn holder(sup_small: f64, sup_large: f64, bound: f64, flags: &mut Vec<String>) -> (f64, f64) {
    if sup_large == 0.0 {
        flags.push("zero_extension".into());
        return (0.999, 0.0);
    }
    let raw = (sup_large / bound).ln() / (sup_small / bound).ln();
    let mut g = if raw.is_finite() { raw } else { 0.0 };
    if g < 0.001 {
        flags.push(format!("gamma_clamped_low({raw:.3e})"));
        g = 0.001;
    } else if g > 0.999 {
        flags.push(format!("gamma_clamped_high({raw:.6})"));
        g = 0.999;
    }
    g = (g * 1e6).floor() / 1e6;
    let slack = bound.powf(1.0 - g) * sup_small.powf(g) - sup_large;
    (g, slack)
}

fn zero_result(extended: Vec<(SamplePoint, Complex64)>, bound: f64) -> ContinuationResult {
    let mut flags = Vec::new();
    let (gamma, slack) = holder(0.0, 0.0, bound, &mut flags);
    ContinuationResult {
        extended,
        gamma_emp: gamma,
        certificate: HolderCertificate {
            sup_small: 0.0,
            sup_large: 0.0,
            a_priori_bound: bound,
            gamma,
            slack,
            theory: None,
            flags,
        },
        degree: 0,
        residual_rms: 0.0,
        noise_sigma: 0.0,
    }
}

/// Data `u_inf(x_hat0, k)` on `(0, K)` to be continued onto `(-a, a)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KContinuationProblem {
    pub x0_hat: Vec3,
    pub samples: Vec<(f64, Complex64)>,
    #[serde(rename = "K")]
    pub k_max: f64,
    pub a: f64,
    /// `e^a |f|_{L1}`
    #[serde(rename = "M3")]
    pub m3: f64,
    /// `1 / R`
    pub rho: f64,
}

impl KContinuationProblem {
    pub fn new(
        x0_hat: Vec3,
        samples: Vec<(f64, Complex64)>,
        k_max: f64,
        a: f64,
        f_l1: f64,
        radius: f64,
    ) -> Self {
        Self {
            x0_hat,
            samples,
            k_max,
            a,
            m3: a.exp() * f_l1,
            rho: 1.0 / radius,
        }
    }
}

pub fn continue_in_k(
    problem: &KContinuationProblem,
    target_grid: &[f64],
    reg: &RegularizationSpec,
) -> Result<ContinuationResult> {
    let p = problem;
    if !(p.a >= 2.0 * p.k_max && p.a >= 1.0) {
        return Err(Error::InvalidInput(format!(
            "a = {} must be >= max(2K, 1) with K = {}",
            p.a, p.k_max
        )));
    }
    if !(p.rho > 0.0 && p.m3 > 0.0) {
        return Err(Error::InvalidInput("rho and M3 must be positive".into()));
    }
    if p.samples.len() < 2 {
        return Err(Error::UnderSampled(format!("{} samples", p.samples.len())));
    }
    if p.samples.windows(2).any(|w| w[0].0 >= w[1].0)
        || p.samples.iter().any(|s| !(s.0 > 0.0 && s.0 < p.k_max))
    {
        return Err(Error::InvalidInput(
            "samples must be sorted in (0, K)".into(),
        ));
    }
    let max_gap = p
        .samples
        .windows(2)
        .map(|w| w[1].0 - w[0].0)
        .fold(p.samples[0].0, f64::max);
    if max_gap >= p.rho * p.a / 4.0 {
        return Err(Error::UnderSampled(format!(
            "largest wavenumber gap {max_gap:.4} exceeds rho a / 4 = {:.4}",
            p.rho * p.a / 4.0
        )));
    }
    if let Some(t) = target_grid.iter().find(|t| !(t.abs() < p.a)) {
        return Err(Error::OutOfDomain(format!("target {t} is outside (-a, a)")));
    }
    let sup_small = p.samples.iter().map(|s| s.1.norm()).fold(0.0, f64::max);
    if sup_small > p.m3 {
        return Err(Error::BoundViolated {
            sup: sup_small,
            bound: p.m3,
        });
    }

    if sup_small == 0.0 {
        let extended = target_grid
            .iter()
            .map(|&t| (SamplePoint::Wavenumber(t), Complex64::new(0.0, 0.0)))
            .collect();
        return Ok(zero_result(extended, p.m3));
    }

    let tau = p.a / p.rho;
    let ln_l1 = p.m3.ln() - p.a;
    let ln_cap = (1e-14f64).ln() + p.a;
    let mut max_deg = reg.max_degree.unwrap_or(60);
    for j in 1..=max_deg {
        if j as f64 > tau && j as f64 * tau.ln() - ln_factorial(j) < ln_cap {
            max_deg = j;
            break;
        }
    }
    if let Some(d) = reg.fixed_degree {
        max_deg = d;
    }
    let mut s: Vec<f64> = p.samples.iter().map(|x| x.0 / p.a).collect();
    let mut y: Vec<Complex64> = p.samples.iter().map(|x| x.1).collect();
    if reg.conjugate_reflection {
        s.extend(p.samples.iter().map(|x| -x.0 / p.a));
        y.extend(p.samples.iter().map(|x| x.1.conj()));
    }
    let mut design = DMatrix::zeros(s.len(), max_deg + 1);
    for (i, si) in s.iter().enumerate() {
        let mut pw = 1.0;
        for j in 0..=max_deg {
            design[(i, j)] = pw;
            pw *= si;
        }
    }
    let widths: Vec<f64> = (0..=max_deg)
        .map(|j| (ln_l1 + j as f64 * tau.ln() - ln_factorial(j)).exp())
        .collect();
    let sigma = reg.sigma(sup_small).max(1e-300);
    let plan = FitPlan::new(design, widths, (1..=max_deg + 1).collect(), sigma);
    let out =
        reg.degree_rule
            .unwrap_or(DegreeRule::FullPrior)
            .fit(&plan, &y, reg.fixed_degree, reg.tau);
    let eval = |t: f64| -> Complex64 {
        let x = t / p.a;
        out.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
    };
    let extended: Vec<(SamplePoint, Complex64)> = target_grid
        .iter()
        .map(|&t| (SamplePoint::Wavenumber(t), eval(t)))
        .collect();
    let sup_large = extended.iter().map(|e| e.1.norm()).fold(0.0, f64::max);

    let mut flags = Vec::new();
    let (gamma, slack) = holder(sup_small, sup_large, p.m3, &mut flags);
    // theory check on I = (0, K / (2a)) in the rescaled variable
    let grid = cell_grid_bound(p.rho, 0.0, p.k_max / (2.0 * p.a))?;
    let sup_i = p
        .samples
        .iter()
        .filter(|x| x.0 < 0.5 * p.k_max)
        .map(|x| x.1.norm())
        .fold(0.0, f64::max);
    let g_norm = sup_small / (2.0 * p.m3);
    let feasible = std::f64::consts::E * g_norm * grid.l.ln() <= (8.0f64 / 7.0).ln() - grid.delta1;
    if !feasible {
        flags.push("a_priori_bound_too_small".into());
    }
    let bound = grid.n_const * sup_i.powf(grid.gamma) * p.m3.powf(1.0 - grid.gamma);
    let theory = TheoryCertificate {
        grid,
        feasible,
        bound,
        slack: bound - sup_large,
    };
    Ok(ContinuationResult {
        extended,
        gamma_emp: gamma,
        certificate: HolderCertificate {
            sup_small,
            sup_large,
            a_priori_bound: p.m3,
            gamma,
            slack,
            theory: Some(theory),
            flags,
        },
        degree: out.degree,
        residual_rms: out.residual_rms,
        noise_sigma: sigma,
    })
}

/// Rectangle `(theta1, theta2) x (phi1, phi2)` in chart coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub theta: (f64, f64),
    pub phi: (f64, f64),
}

impl Patch {
    /// Square patch of half-width `h` around the chart origin.
    pub fn centered(h: f64) -> Self {
        Self {
            theta: (-h, h),
            phi: (-h, h),
        }
    }

    pub fn contains(&self, theta: f64, phi: f64) -> bool {
        let tol = 1e-12;
        theta >= self.theta.0 - tol
            && theta <= self.theta.1 + tol
            && phi >= self.phi.0 - tol
            && phi <= self.phi.1 + tol
    }

    pub fn area(&self) -> f64 {
        (self.theta.1 - self.theta.0) * (self.phi.1 - self.phi.0)
    }

    fn valid_chart(&self) -> bool {
        self.theta.0 < self.theta.1
            && self.phi.0 < self.phi.1
            && self.theta.0 > -PI
            && self.theta.1 < PI
            && self.phi.0 > -0.5 * PI
            && self.phi.1 < 0.5 * PI
    }

    /// Distance from this patch to the boundary of `outer` (negative if not inside).
    pub fn margin_in(&self, outer: &Patch) -> f64 {
        [
            self.theta.0 - outer.theta.0,
            outer.theta.1 - self.theta.1,
            self.phi.0 - outer.phi.0,
            outer.phi.1 - self.phi.1,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }
}

/// Samples of `H(theta, phi) = u_inf(chart(theta, phi), k)` on `E`, to be continued onto `Omega`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleContinuationProblem {
    pub k: f64,
    pub frame: ChartFrame,
    pub patch_small: Patch,
    pub patch_large: Patch,
    pub samples: Vec<((f64, f64), Complex64)>,
    #[serde(rename = "M2")]
    pub m2: f64,
    /// `1 / (2R)`
    pub rho: f64,
}

impl AngleContinuationProblem {
    /// Coordinates in `frame` for every direction, with the matching values.
    pub fn from_directions(
        k: f64,
        frame: ChartFrame,
        directions: &[Vec3],
        values: &[Complex64],
        patch_large: Patch,
        f_l1: f64,
        radius: f64,
    ) -> Self {
        let samples: Vec<((f64, f64), Complex64)> = directions
            .iter()
            .zip(values)
            .map(|(d, v)| (frame.inverse(d), *v))
            .collect();
        let mut e = Patch {
            theta: (f64::INFINITY, f64::NEG_INFINITY),
            phi: (f64::INFINITY, f64::NEG_INFINITY),
        };
        for ((t, p), _) in &samples {
            e.theta = (e.theta.0.min(*t), e.theta.1.max(*t));
            e.phi = (e.phi.0.min(*p), e.phi.1.max(*p));
        }
        Self {
            k,
            frame,
            patch_small: e,
            patch_large,
            samples,
            m2: m2_const(k, f_l1),
            rho: 1.0 / (2.0 * radius),
        }
    }
}

pub fn continue_in_angle(
    problem: &AngleContinuationProblem,
    target_grid: &[(f64, f64)],
    reg: &RegularizationSpec,
) -> Result<ContinuationResult> {
    let p = problem;
    let (e, om) = (&p.patch_small, &p.patch_large);
    if !e.valid_chart() || !om.valid_chart() {
        return Err(Error::InvalidInput(
            "patches must be nondegenerate and avoid the chart singularities".into(),
        ));
    }
    let d0 = e.margin_in(om);
    if !(d0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "small patch is not inside the large one (margin {d0:.3e})"
        )));
    }
    if !(p.k > 0.0 && p.m2 > 0.0 && p.rho > 0.0) {
        return Err(Error::InvalidInput("k, M2 and rho must be positive".into()));
    }
    if p.samples.len() < 3 {
        return Err(Error::UnderSampled(format!("{} samples", p.samples.len())));
    }
    if let Some(s) = p.samples.iter().find(|s| !e.contains(s.0 .0, s.0 .1)) {
        return Err(Error::InvalidInput(format!(
            "sample at {:?} lies outside the small patch",
            s.0
        )));
    }
    if let Some(t) = target_grid.iter().find(|t| !om.contains(t.0, t.1)) {
        return Err(Error::OutOfDomain(format!(
            "target {t:?} lies outside the large patch"
        )));
    }
    // fill distance over probes in the ellipse inscribed in E; cap-shaped data
    // leaves the corners of its bounding rectangle empty
    let probes = 12;
    let mut fill: f64 = 0.0;
    for a in 0..=probes {
        for b in 0..=probes {
            let (u, v) = (
                2.0 * a as f64 / probes as f64 - 1.0,
                2.0 * b as f64 / probes as f64 - 1.0,
            );
            if u * u + v * v > 1.0 + 1e-12 {
                continue;
            }
            let t = 0.5 * (e.theta.0 + e.theta.1) + 0.5 * (e.theta.1 - e.theta.0) * u;
            let q = 0.5 * (e.phi.0 + e.phi.1) + 0.5 * (e.phi.1 - e.phi.0) * v;
            let dmin = p
                .samples
                .iter()
                .map(|s| ((s.0 .0 - t).powi(2) + (s.0 .1 - q).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            fill = fill.max(dmin);
        }
    }
    if fill > p.rho / 4.0 {
        return Err(Error::UnderSampled(format!(
            "fill distance {fill:.4} exceeds rho / 4 = {:.4}",
            p.rho / 4.0
        )));
    }
    let sup_small = p.samples.iter().map(|s| s.1.norm()).fold(0.0, f64::max);
    let bound = 2.0 * p.m2;
    if sup_small > bound {
        return Err(Error::BoundViolated {
            sup: sup_small,
            bound,
        });
    }

    if sup_small == 0.0 {
        let extended = target_grid
            .iter()
            .map(|&(t, q)| {
                (
                    SamplePoint::Angles { theta: t, phi: q },
                    Complex64::new(0.0, 0.0),
                )
            })
            .collect();
        return Ok(zero_result(extended, bound));
    }

    let (tc, pc) = (0.5 * (e.theta.0 + e.theta.1), 0.5 * (e.phi.0 + e.phi.1));
    let (ht, hp) = (0.5 * (e.theta.1 - e.theta.0), 0.5 * (e.phi.1 - e.phi.0));
    let tau = 2.0 * p.k / p.rho;
    let f_l1 = p.m2 / n0_with_value(p.k).1.max(1.0);
    let h = ht.max(hp);
    let mut max_deg = reg.max_degree.unwrap_or(20);
    for d in 1..=max_deg {
        if d as f64 * (tau * h).ln() - ln_factorial(d) < (1e-14f64).ln() && d as f64 > tau * h {
            max_deg = d;
            break;
        }
    }
    if let Some(d) = reg.fixed_degree {
        max_deg = d;
    }
    let exps: Vec<(usize, usize)> = (0..=max_deg)
        .flat_map(|d| (0..=d).rev().map(move |i| (i, d - i)))
        .collect();
    let cols_for_degree: Vec<usize> = (0..=max_deg).map(|d| (d + 1) * (d + 2) / 2).collect();
    let basis = |t: f64, q: f64| -> Vec<f64> {
        let u = (t - tc) / ht;
        let v = (q - pc) / hp;
        exps.iter()
            .map(|&(i, j)| u.powi(i as i32) * v.powi(j as i32))
            .collect()
    };
    let mut design = DMatrix::zeros(p.samples.len(), exps.len());
    for (r, s) in p.samples.iter().enumerate() {
        for (c, b) in basis(s.0 .0, s.0 .1).into_iter().enumerate() {
            design[(r, c)] = b;
        }
    }
    let widths: Vec<f64> = exps
        .iter()
        .map(|&(i, j)| {
            (f_l1.ln() + (i + j) as f64 * tau.ln() + i as f64 * ht.ln() + j as f64 * hp.ln()
                - ln_factorial(i)
                - ln_factorial(j))
            .exp()
        })
        .collect();
    let sigma = reg.sigma(sup_small).max(1e-300);
    let y: Vec<Complex64> = p.samples.iter().map(|s| s.1).collect();
    let plan = FitPlan::new(design, widths, cols_for_degree, sigma);
    let out = reg.degree_rule.unwrap_or(DegreeRule::Discrepancy).fit(
        &plan,
        &y,
        reg.fixed_degree,
        reg.tau,
    );
    let extended: Vec<(SamplePoint, Complex64)> = target_grid
        .iter()
        .map(|&(t, q)| {
            let v = basis(t, q)
                .iter()
                .zip(&out.coeffs)
                .map(|(b, c)| c * *b)
                .sum::<Complex64>();
            (SamplePoint::Angles { theta: t, phi: q }, v)
        })
        .collect();
    let sup_large = extended.iter().map(|e| e.1.norm()).fold(0.0, f64::max);
    let mut flags = Vec::new();
    let (gamma, slack) = holder(sup_small, sup_large, bound, &mut flags);
    Ok(ContinuationResult {
        extended,
        gamma_emp: gamma,
        certificate: HolderCertificate {
            sup_small,
            sup_large,
            a_priori_bound: bound,
            gamma,
            slack,
            theory: None,
            flags,
        },
        degree: out.degree,
        residual_rms: out.residual_rms,
        noise_sigma: sigma,
    })
}

/// Chart half-width of the square inscribed in the cap of chordal radius `delta`.
pub fn inscribed_half_width(delta: f64) -> f64 {
    (1.0 - 0.5 * delta * delta).max(-1.0).sqrt().min(1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n0_examples() {
        assert_eq!(n0_of_k(0.25), 0);
        assert_eq!(n0_of_k(1.25), 2);
        assert_eq!(n0_of_k(2.0), 3);
        assert_eq!(m2_const(0.25, 1.0), 1.0);
        assert!((m2_const(2.0, 2.0) - 64.0 / 3.0).abs() < 1e-12);
        assert_eq!(m2_const(3.0, 0.0), 0.0);
    }

    #[test]
    fn cell_grid_single_cell_example() {
        let rho = 0.5;
        let (_, gamma) = cell_grid_gamma(rho, 2.0 * rho / 5.0).unwrap();
        let l = cell_grid_bound(rho, -1.0, -1.0 + 2.0 * rho / 5.0).unwrap();
        assert!((l.l - 15.0).abs() < 1e-12);
        let expected = (8.0f64 / 7.0).ln() / (120.0f64 / 7.0).ln();
        assert!((gamma - expected).abs() < 1e-14);
        assert!((gamma - 0.0470).abs() < 1e-4);
    }

    #[test]
    fn cell_grid_degenerate_overlap() {
        assert!(matches!(
            cell_grid_bound(0.5, 1.5, 1.7),
            Err(Error::DegenerateOverlap)
        ));
    }

    #[test]
    fn inscribed_square_fits_in_cap() {
        let h = inscribed_half_width(0.3);
        let frame = ChartFrame::around(&Vec3::x());
        let corner = frame.chart(h, h);
        assert!((corner - Vec3::x()).norm() < 0.3);
        assert!((corner - Vec3::x()).norm() > 0.29);
    }
}
