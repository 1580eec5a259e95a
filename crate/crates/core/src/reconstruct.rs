//! Source recovery: truncated Fourier inversion, the continuation pipeline,
//! a Tikhonov baseline, and Fourier-domain error metrics.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::continuation::{AngleContinuationProblem, DegreeRule, Patch, RegularizationSpec};
use crate::error::{Error, Result};
use crate::forward::{sup_norm, FarFieldDataset};
use crate::polyfit::{ln_factorial, FitPlan};
use crate::quadrature::{ChartFrame, CompositeRule, SphereRule};
use crate::source_models::SourceModel;
use crate::spectral::{
    bound_thm1, bound_thm2, cutoff_s, spectral_factor, BoundParams, CutoffCase, FourierOracle,
    Provenance, SpectralSamples,
};
use crate::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_per_axis: usize,
}

impl GridSpec {
    pub fn new(n_per_axis: usize) -> Result<Self> {
        if n_per_axis < 16 {
            return Err(Error::InvalidInput(format!(
                "n_per_axis must be >= 16, got {n_per_axis}"
            )));
        }
        Ok(Self { n_per_axis })
    }
}

/// Complex voxel values at the cell centers of `[-R, R]^3`, x-fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid {
    pub radius: f64,
    pub n_per_axis: usize,
    pub values: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct VoxelSidecar {
    extent: [f64; 2],
    n_per_axis: usize,
    ordering: String,
    dtype: String,
    data: String,
}

impl VoxelGrid {
    pub fn zeros(radius: f64, n_per_axis: usize) -> Self {
        Self {
            radius,
            n_per_axis,
            values: vec![Complex64::new(0.0, 0.0); n_per_axis.pow(3)],
        }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.radius / self.n_per_axis as f64
    }

    pub fn axis(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n_per_axis)
            .map(|i| -self.radius + (i as f64 + 0.5) * h)
            .collect()
    }

    /// Truth sampled at the voxel centers.
    pub fn sample(model: &SourceModel, radius: f64, n_per_axis: usize) -> Self {
        let mut g = Self::zeros(radius, n_per_axis);
        let ax = g.axis();
        let n = n_per_axis;
        g.values.par_iter_mut().enumerate().for_each(|(idx, v)| {
            let (i, j, k) = (idx % n, (idx / n) % n, idx / (n * n));
            *v = model.eval(&Vec3::new(ax[i], ax[j], ax[k]));
        });
        g
    }

    /// Discrete L2 norm `(h^3 sum |v|^2)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.spacing().powi(3) * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// `<stem>.bin` (little-endian re/im f64 pairs) and `<stem>.json` sidecar.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut bytes = Vec::with_capacity(self.values.len() * 16);
        for v in &self.values {
            bytes.extend_from_slice(&v.re.to_le_bytes());
            bytes.extend_from_slice(&v.im.to_le_bytes());
        }
        let data = format!("{stem}.bin");
        fs::write(dir.join(&data), bytes)?;
        let side = VoxelSidecar {
            extent: [-self.radius, self.radius],
            n_per_axis: self.n_per_axis,
            ordering: "x-fastest".into(),
            dtype: "complex128-le".into(),
            data,
        };
        fs::write(
            dir.join(format!("{stem}.json")),
            serde_json::to_string_pretty(&side)?,
        )?;
        Ok(())
    }

    pub fn read(sidecar: &Path) -> Result<Self> {
        let side: VoxelSidecar = serde_json::from_str(&fs::read_to_string(sidecar)?)?;
        let base = sidecar.parent().unwrap_or_else(|| Path::new("."));
        let bytes = fs::read(base.join(&side.data))?;
        let n = side.n_per_axis;
        if bytes.len() != n.pow(3) * 16 {
            return Err(Error::InvalidInput("voxel file has the wrong size".into()));
        }
        let values = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                Complex64::new(re, im)
            })
            .collect();
        Ok(Self {
            radius: side.extent[1],
            n_per_axis: n,
            values,
        })
    }
}

/// Points and weights of a quadrature on the ball `|xi| <= s`.
#[derive(Clone, Debug)]
pub struct BallQuadrature {
    pub s: f64,
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
    /// angular exactness degree on the outermost shell
    pub outer_degree: usize,
}

impl BallQuadrature {
    /// Radial Gauss-Legendre times a product sphere rule whose degree grows
    /// with the radius as `r (R_src + sqrt(3) R_grid) + 8`.
    pub fn for_inversion(
        s: f64,
        source_radius: f64,
        grid_radius: f64,
        nodes_per_unit: usize,
    ) -> Self {
        let radial = CompositeRule::new(0.0, s, nodes_per_unit);
        let frame = ChartFrame::around(&Vec3::z());
        let band = source_radius + 3f64.sqrt() * grid_radius;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut outer_degree = 0;
        for (r, wr) in radial.nodes.iter().zip(&radial.weights) {
            let degree = (r * band).ceil() as usize + 8;
            outer_degree = outer_degree.max(degree);
            let rule = SphereRule::product_gauss(degree, frame);
            for (d, wd) in rule.directions.iter().zip(&rule.weights) {
                points.push(d * *r);
                weights.push(wr * r * r * wd);
            }
        }
        Self {
            s,
            points,
            weights,
            outer_degree,
        }
    }

    /// One sphere rule shared by every radial node.
    pub fn with_sphere_rule(s: f64, nodes_per_unit: usize, rule: &SphereRule) -> Self {
        let radial = CompositeRule::new(0.0, s, nodes_per_unit);
        let mut points = Vec::with_capacity(radial.nodes.len() * rule.len());
        let mut weights = Vec::with_capacity(radial.nodes.len() * rule.len());
        for (d, wd) in rule.directions.iter().zip(&rule.weights) {
            for (r, wr) in radial.nodes.iter().zip(&radial.weights) {
                points.push(d * *r);
                weights.push(wr * r * r * wd);
            }
        }
        Self {
            s,
            points,
            weights,
            outer_degree: rule.degree,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn oracle_samples(&self, oracle: &dyn FourierOracle) -> SpectralSamples {
        SpectralSamples::from_oracle(self.points.clone(), oracle)
    }
}

/// `(2 pi)^{-3/2} sum_q w_q f_hat(xi_q) e^{i xi_q.x}` at every voxel center.
pub fn reconstruct_truncated_fourier(
    samples: &SpectralSamples,
    ball: &BallQuadrature,
    grid: &GridSpec,
    grid_radius: f64,
) -> Result<VoxelGrid> {
    if samples.len() != ball.len() {
        return Err(Error::InsufficientCoverage(format!(
            "{} samples for {} quadrature nodes",
            samples.len(),
            ball.len()
        )));
    }
    let tol = 1e-9 * ball.s.max(1.0);
    if let Some(i) = (0..ball.len()).find(|&i| (samples.points[i] - ball.points[i]).norm() > tol) {
        return Err(Error::InsufficientCoverage(format!(
            "sample {i} is not at its quadrature node"
        )));
    }
    let need = (ball.s * 3f64.sqrt() * grid_radius).ceil() as usize;
    if ball.outer_degree < need {
        return Err(Error::InsufficientCoverage(format!(
            "angular degree {} on the outer shell is below the grid bandwidth {need}",
            ball.outer_degree
        )));
    }
    let weighted: Vec<Complex64> = samples
        .values
        .iter()
        .zip(&ball.weights)
        .map(|(v, w)| v * (w * spectral_factor()))
        .collect();
    Ok(inverse_sum(
        &ball.points,
        &weighted,
        grid.n_per_axis,
        grid_radius,
    ))
}

/// `sum_q c_q e^{i xi_q.x}` at voxel centers, parallel over z-slabs.
fn inverse_sum(points: &[Vec3], coeffs: &[Complex64], n: usize, radius: f64) -> VoxelGrid {
    let mut grid = VoxelGrid::zeros(radius, n);
    let ax = grid.axis();
    let h = grid.spacing();
    let x0 = ax[0];
    let chunk = 2048;
    let mut ex = vec![Complex64::new(0.0, 0.0); chunk * n];
    let mut ey = vec![Complex64::new(0.0, 0.0); chunk * n];
    let mut ez = vec![Complex64::new(0.0, 0.0); chunk * n];
    let active: Vec<usize> = (0..points.len())
        .filter(|&q| coeffs[q].norm_sqr() > 0.0)
        .collect();
    for block in active.chunks(chunk) {
        let fill = |dst: &mut [Complex64], comp: usize| {
            dst.par_chunks_mut(n)
                .zip(block.par_iter())
                .for_each(|(row, &q)| {
                    let t = points[q][comp];
                    let step = Complex64::from_polar(1.0, t * h);
                    let mut cur = Complex64::from_polar(1.0, t * x0);
                    for (i, r) in row.iter_mut().enumerate() {
                        if i % 16 == 0 {
                            cur = Complex64::from_polar(1.0, t * (x0 + i as f64 * h));
                        }
                        *r = cur;
                        cur *= step;
                    }
                });
        };
        fill(&mut ex[..block.len() * n], 0);
        fill(&mut ey[..block.len() * n], 1);
        fill(&mut ez[..block.len() * n], 2);
        grid.values
            .par_chunks_mut(n * n)
            .enumerate()
            .for_each(|(k, slab)| {
                for (b, &q) in block.iter().enumerate() {
                    let cz = coeffs[q] * ez[b * n + k];
                    let exq = &ex[b * n..(b + 1) * n];
                    for j in 0..n {
                        let cyz = cz * ey[b * n + j];
                        let row = &mut slab[j * n..(j + 1) * n];
                        for (r, e) in row.iter_mut().zip(exq) {
                            *r += cyz * e;
                        }
                    }
                }
            });
    }
    grid
}

/// `(err_l2, err_hm1)` of a voxel grid against a source with closed-form transform.
///
/// The grid transform is its discrete Fourier sum, evaluated by a zero-padded FFT
/// on the lattice `2 pi Z^3 / (4 n h)` inside the Nyquist ball `|xi| <= pi / h`;
/// beyond the ball the truth's own energy is added by a radial integral.
/// Padding by 4 keeps the aliasing of the `H^{-1}` weight's long-range kernel small.
pub fn error_metrics(grid: &VoxelGrid, truth: &SourceModel) -> (f64, f64) {
    let n = grid.n_per_axis;
    let m = 4 * n;
    let h = grid.spacing();
    let mut data = vec![Complex64::new(0.0, 0.0); m * m * m];
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                data[(k * m + j) * m + i] = grid.values[(k * n + j) * n + i];
            }
        }
    }
    fft3(&mut data, m);
    let dxi = 2.0 * PI / (m as f64 * h);
    let nyq = PI / h;
    let x0 = grid.axis()[0];
    let scale = spectral_factor() * h.powi(3);
    let freq = |p: usize| -> f64 {
        let p = p as i64;
        let p = if p >= m as i64 / 2 { p - m as i64 } else { p };
        p as f64 * dxi
    };
    let (l2, hm1) = (0..m)
        .into_par_iter()
        .map(|c| {
            let mut a = 0.0;
            let mut b = 0.0;
            let zc = freq(c);
            for bj in 0..m {
                let yb = freq(bj);
                for ai in 0..m {
                    let xa = freq(ai);
                    let xi = Vec3::new(xa, yb, zc);
                    let r2 = xi.norm_squared();
                    if r2 > nyq * nyq {
                        continue;
                    }
                    let phase = Complex64::from_polar(1.0, -(xa + yb + zc) * x0);
                    let d = data[(c * m + bj) * m + ai] * phase * scale
                        - truth.closed_form_fourier(&xi);
                    let e = d.norm_sqr();
                    a += e;
                    b += e / (1.0 + r2);
                }
            }
            (a, b)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1));
    let vol = dxi.powi(3);
    let tail_l2 = truth.weighted_tail(nyq, |_| 1.0);
    let tail_hm1 = truth.weighted_tail(nyq, |r| 1.0 / (1.0 + r * r));
    ((l2 * vol + tail_l2).sqrt(), (hm1 * vol + tail_hm1).sqrt())
}

fn fft3(data: &mut [Complex64], m: usize) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    // x lines are contiguous
    data.par_chunks_mut(m).for_each(|line| fft.process(line));
    // y lines within each z slab
    data.par_chunks_mut(m * m).for_each(|slab| {
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for i in 0..m {
            for j in 0..m {
                buf[j] = slab[j * m + i];
            }
            fft.process(&mut buf);
            for j in 0..m {
                slab[j * m + i] = buf[j];
            }
        }
    });
    // z lines
    let mut col = vec![Complex64::new(0.0, 0.0); m * m * m];
    for k in 0..m {
        for ji in 0..m * m {
            col[ji * m + k] = data[k * m * m + ji];
        }
    }
    col.par_chunks_mut(m).for_each(|line| fft.process(line));
    for k in 0..m {
        for ji in 0..m * m {
            data[k * m * m + ji] = col[ji * m + k];
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    TruncatedFourier,
    TikhonovLs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    #[serde(skip)]
    pub grid: Option<VoxelGrid>,
    pub cutoff_s: f64,
    pub cutoff_case: CutoffCase,
    pub err_l2: Option<f64>,
    pub err_hm1: Option<f64>,
    pub method: Method,
    pub bound_thm1_value: Option<f64>,
    pub bound_thm2_value: Option<f64>,
    /// Median angular fit degree over the wavenumber shells.
    pub angle_degree: usize,
}

/// Settings of the angle-then-wavenumber continuation pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Support radius assumed for the unknown source.
    #[serde(rename = "R")]
    pub radius: f64,
    /// Exponent used for the cutoff radius.
    pub alpha: f64,
    /// A-priori bound on `|f|_{L1}`; defaults to twice the data sup.
    pub f_l1_bound: Option<f64>,
    /// Radial Gauss-Legendre nodes per unit for the inversion.
    pub radial_nodes_per_unit: usize,
    /// Extra angular degree on top of `s (1 + sqrt 3) R`.
    pub angular_extra: usize,
    pub tau: f64,
    pub relative_floor: f64,
    /// Degree rule of the per-direction wavenumber fits. By default the
    /// discrepancy rule while `s <= K` and the full prior when `s > K`.
    pub degree_rule: Option<DegreeRule>,
    /// Parameters for evaluating the two bounds; `C` and `alpha` are taken from here.
    pub bound: Option<BoundParams>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            radius: 1.0,
            alpha: 0.5,
            f_l1_bound: None,
            radial_nodes_per_unit: 8,
            angular_extra: 8,
            tau: 1.5,
            relative_floor: 1e-8,
            degree_rule: None,
            bound: None,
        }
    }
}

/// Angle continuation per wavenumber shell onto a full-sphere product rule,
/// wavenumber continuation per direction onto radial nodes in `[0, s]`, then
/// truncated Fourier inversion.
pub fn reconstruct_pipeline(
    dataset: &FarFieldDataset,
    cfg: &PipelineConfig,
    grid: &GridSpec,
    truth: Option<&SourceModel>,
) -> Result<ReconstructionResult> {
    let ext = extend_spectrum(dataset, cfg)?;
    let voxels = reconstruct_truncated_fourier(&ext.samples, &ext.ball, grid, cfg.radius)?;
    let (err_l2, err_hm1) = match truth {
        Some(t) => {
            let (a, b) = error_metrics(&voxels, t);
            (Some(a), Some(b))
        }
        None => (None, None),
    };
    let (b1, b2) = match &cfg.bound {
        Some(p) => (
            bound_thm1(p, dataset.k_max, ext.eps).ok(),
            bound_thm2(p, dataset.k_max, ext.eps).ok(),
        ),
        None => (None, None),
    };
    Ok(ReconstructionResult {
        grid: Some(voxels),
        cutoff_s: ext.cutoff_s,
        cutoff_case: ext.cutoff_case,
        err_l2,
        err_hm1,
        method: Method::TruncatedFourier,
        bound_thm1_value: b1,
        bound_thm2_value: b2,
        angle_degree: ext.angle_degree,
    })
}

/// Continued spectrum on the inversion ball.
#[derive(Clone, Debug)]
pub struct ExtendedSpectrum {
    pub samples: SpectralSamples,
    pub ball: BallQuadrature,
    pub cutoff_s: f64,
    pub cutoff_case: CutoffCase,
    /// Noise level used for the cutoff (machine epsilon for clean data).
    pub eps: f64,
    pub angle_degree: usize,
}

/// The two continuation stages of the pipeline: `f_hat` on the nodes of the
/// ball quadrature of radius `s`.
pub fn extend_spectrum(
    dataset: &FarFieldDataset,
    cfg: &PipelineConfig,
) -> Result<ExtendedSpectrum> {
    dataset.validate()?;
    let big_k = dataset.k_max;
    let radius = cfg.radius;
    let eps = if dataset.noise_level > 0.0 {
        dataset.noise_level
    } else {
        f64::EPSILON
    };
    let (s, case) = cutoff_s(big_k, eps, cfg.alpha, radius)?;
    let sup = sup_norm(dataset)?;
    let f_l1 = cfg.f_l1_bound.unwrap_or(2.0 * sup);

    let frame = ChartFrame::around(&dataset.aperture.x0_hat);
    let degree = (s * (1.0 + 3f64.sqrt()) * radius).ceil() as usize + cfg.angular_extra;
    let rule = SphereRule::product_gauss(degree, frame);
    let n_dirs = rule.len();
    let nf = dataset.n_freqs();
    let dtheta = 2.0 * PI / (degree + 1) as f64;
    let phi_max = rule.angles.iter().map(|a| a.1.abs()).fold(0.0, f64::max);
    let omega = Patch {
        theta: (-PI + 0.25 * dtheta, PI - 0.25 * dtheta),
        phi: (
            -(phi_max + 0.5 * (0.5 * PI - phi_max)),
            phi_max + 0.5 * (0.5 * PI - phi_max),
        ),
    };
    let reg = RegularizationSpec {
        noise_level: dataset.noise_level,
        relative_floor: cfg.relative_floor,
        tau: cfg.tau,
        max_degree: None,
        fixed_degree: None,
        degree_rule: None,
        conjugate_reflection: false,
    };

    // per shell: values at every rule direction
    let shells: Vec<(Vec<Complex64>, usize)> = (0..nf)
        .into_par_iter()
        .map(|j| -> Result<(Vec<Complex64>, usize)> {
            let k = dataset.wavenumbers[j];
            let values: Vec<Complex64> =
                (0..dataset.n_dirs()).map(|d| dataset.value(d, j)).collect();
            if values.iter().all(|v| v.norm() == 0.0) {
                return Ok((vec![Complex64::new(0.0, 0.0); n_dirs], 0));
            }
            let problem = AngleContinuationProblem::from_directions(
                k,
                frame,
                &dataset.directions,
                &values,
                omega,
                f_l1,
                radius,
            );
            let problem = widen_degenerate(problem, &omega);
            let res = crate::continuation::continue_in_angle(&problem, &rule.angles, &reg)?;
            Ok((res.extended.into_iter().map(|e| e.1).collect(), res.degree))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut degrees: Vec<usize> = shells.iter().map(|s| s.1).collect();
    degrees.sort_unstable();
    let angle_degree = degrees[degrees.len() / 2];

    // wavenumber continuation along each direction
    let radial = CompositeRule::new(0.0, s, cfg.radial_nodes_per_unit);
    let a = (2.0 * big_k).max(2.0 * s).max(1.0);
    let tau_k = a * radius;
    let max_deg = {
        let mut d = 60;
        for j in 1..=60usize {
            if j as f64 > tau_k && j as f64 * tau_k.ln() - ln_factorial(j) < (1e-14f64).ln() + a {
                d = j;
                break;
            }
        }
        d
    };
    let mut design = DMatrix::zeros(nf, max_deg + 1);
    for (i, k) in dataset.wavenumbers.iter().enumerate() {
        let x = k / a;
        for c in 0..=max_deg {
            design[(i, c)] = x.powi(c as i32);
        }
    }
    let widths: Vec<f64> = (0..=max_deg)
        .map(|c| (f_l1.max(1e-300).ln() + c as f64 * tau_k.ln() - ln_factorial(c)).exp())
        .collect();
    let sigma = reg_sigma(&reg, sup);
    let plan = FitPlan::new(design, widths, (1..=max_deg + 1).collect(), sigma);
    let radial_rule = cfg.degree_rule.unwrap_or(if s <= big_k {
        DegreeRule::Discrepancy
    } else {
        DegreeRule::FullPrior
    });
    let factor = spectral_factor();
    let radial_values: Vec<Vec<Complex64>> = (0..n_dirs)
        .into_par_iter()
        .map(|d| {
            let y: Vec<Complex64> = shells.iter().map(|s| s.0[d]).collect();
            if y.iter().all(|v| v.norm() == 0.0) {
                return vec![Complex64::new(0.0, 0.0); radial.nodes.len()];
            }
            let out = radial_rule.fit(&plan, &y, None, cfg.tau);
            radial
                .nodes
                .iter()
                .map(|r| {
                    let x = r / a;
                    out.coeffs
                        .iter()
                        .rev()
                        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
                        * factor
                })
                .collect()
        })
        .collect();

    let ball = BallQuadrature::with_sphere_rule(s, cfg.radial_nodes_per_unit, &rule);
    let mut values = Vec::with_capacity(ball.len());
    for row in &radial_values {
        values.extend_from_slice(row);
    }
    let samples = SpectralSamples {
        points: ball.points.clone(),
        values,
        provenance: Provenance::FromContinuation,
    };
    Ok(ExtendedSpectrum {
        samples,
        ball,
        cutoff_s: s,
        cutoff_case: case,
        eps,
        angle_degree,
    })
}

fn reg_sigma(reg: &RegularizationSpec, sup: f64) -> f64 {
    (reg.noise_level / 2f64.sqrt())
        .max(reg.relative_floor * sup)
        .max(1e-300)
}

// a single data direction gives a degenerate bounding patch; pad it
fn widen_degenerate(mut p: AngleContinuationProblem, omega: &Patch) -> AngleContinuationProblem {
    let min_w = 1e-6;
    if p.patch_small.theta.1 - p.patch_small.theta.0 < min_w {
        p.patch_small.theta = (p.patch_small.theta.0 - min_w, p.patch_small.theta.1 + min_w);
    }
    if p.patch_small.phi.1 - p.patch_small.phi.0 < min_w {
        p.patch_small.phi = (p.patch_small.phi.0 - min_w, p.patch_small.phi.1 + min_w);
    }
    debug_assert!(p.patch_small.margin_in(omega) > 0.0);
    p
}

/// Matrix-free Tikhonov solution of `min |A v - y|^2 + lambda |v|^2` with
/// `A[d, j] = h^3 e^{-i k_d x_hat_d . x_j}`, solved in the data space:
/// `v = A^* (A A^* + lambda I)^{-1} y` by conjugate gradients.
pub fn reconstruct_tikhonov(
    dataset: &FarFieldDataset,
    grid: &GridSpec,
    radius: f64,
    lambda: f64,
) -> Result<VoxelGrid> {
    Ok(tikhonov_solve(dataset, grid, radius, lambda)?.0)
}

/// Tikhonov solution together with the CG iteration count.
pub fn tikhonov_solve(
    dataset: &FarFieldDataset,
    grid: &GridSpec,
    radius: f64,
    lambda: f64,
) -> Result<(VoxelGrid, usize)> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    let n = grid.n_per_axis;
    let mut out = VoxelGrid::zeros(radius, n);
    let ax = out.axis();
    let h = out.spacing();
    let h3 = h.powi(3);
    let q: Vec<Vec3> = dataset
        .directions
        .iter()
        .flat_map(|d| dataset.wavenumbers.iter().map(move |k| d * *k))
        .collect();
    let y = &dataset.values;
    let m = q.len();
    if y.iter().all(|v| v.norm() == 0.0) {
        return Ok((out, 0));
    }
    // Gram matrix G = A A^*, separable across axes
    let dirichlet = |t: f64| -> f64 { ax.iter().map(|x| (t * x).cos()).sum::<f64>() };
    let gram: Vec<Complex64> = (0..m)
        .into_par_iter()
        .flat_map_iter(|d| {
            let q = &q;
            (0..m).map(move |e| {
                let dq = q[d] - q[e];
                Complex64::new(
                    h3 * h3 * dirichlet(dq.x) * dirichlet(dq.y) * dirichlet(dq.z),
                    0.0,
                )
            })
        })
        .collect();
    let apply = |x: &[Complex64]| -> Vec<Complex64> {
        gram.par_chunks(m)
            .zip(x.par_iter())
            .map(|(row, xd)| row.iter().zip(x).map(|(g, v)| g * v).sum::<Complex64>() + xd * lambda)
            .collect()
    };
    let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    };
    let ynorm = dot(y, y).re.sqrt();
    let mut z = vec![Complex64::new(0.0, 0.0); m];
    let mut r = y.clone();
    let mut p = r.clone();
    let mut rr = dot(&r, &r).re;
    let max_iter = 10_000;
    let mut iters = 0;
    while iters < max_iter && rr.sqrt() > 1e-8 * ynorm {
        let ap = apply(&p);
        let pap = dot(&p, &ap).re;
        if !(pap > 0.0) || !pap.is_finite() {
            return Err(Error::SolverStalled {
                iterations: iters,
                residual: rr.sqrt() / ynorm,
            });
        }
        let alpha = rr / pap;
        for i in 0..m {
            z[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        let rr_new = dot(&r, &r).re;
        let beta = rr_new / rr;
        for i in 0..m {
            p[i] = r[i] + p[i] * beta;
        }
        rr = rr_new;
        iters += 1;
    }
    let rel = rr.sqrt() / ynorm;
    if rel > 1e-4 {
        return Err(Error::SolverStalled {
            iterations: iters,
            residual: rel,
        });
    }
    // v = A^* z
    let coeffs: Vec<Complex64> = z.iter().map(|c| c * h3).collect();
    let back = inverse_sum(&q, &coeffs, n, radius);
    out.values = back.values;
    Ok((out, iters))
}

/// `|A v - y|^2 + lambda |v|^2` for the Tikhonov discretization.
pub fn tikhonov_objective(dataset: &FarFieldDataset, grid: &VoxelGrid, lambda: f64) -> f64 {
    let ax = grid.axis();
    let n = grid.n_per_axis;
    let h3 = grid.spacing().powi(3);
    let mut total = 0.0;
    for (d, x) in dataset.directions.iter().enumerate() {
        for (j, k) in dataset.wavenumbers.iter().enumerate() {
            let q = x * *k;
            let ex: Vec<Complex64> = ax
                .iter()
                .map(|t| Complex64::from_polar(1.0, -q.x * t))
                .collect();
            let ey: Vec<Complex64> = ax
                .iter()
                .map(|t| Complex64::from_polar(1.0, -q.y * t))
                .collect();
            let ez: Vec<Complex64> = ax
                .iter()
                .map(|t| Complex64::from_polar(1.0, -q.z * t))
                .collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..n {
                for b in 0..n {
                    let row = &grid.values[(c * n + b) * n..(c * n + b + 1) * n];
                    let s: Complex64 = row.iter().zip(&ex).map(|(v, e)| v * e).sum();
                    acc += s * ey[b] * ez[c];
                }
            }
            total += (acc * h3 - dataset.value(d, j)).norm_sqr();
        }
    }
    total + lambda * grid.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec_minimum() {
        assert!(GridSpec::new(8).is_err());
        assert!(GridSpec::new(16).is_ok());
    }

    #[test]
    fn voxel_round_trip() {
        let dir = std::env::temp_dir().join(format!("helio_voxel_{}", std::process::id()));
        let mut g = VoxelGrid::zeros(1.0, 16);
        g.values[5] = Complex64::new(1.5, -2.0);
        g.write(&dir, "v").unwrap();
        let back = VoxelGrid::read(&dir.join("v.json")).unwrap();
        assert_eq!(back, g);
        fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn zero_grid_error_is_truth_norm() {
        let truth = SourceModel::centered_gaussian(0.2, 1.2).unwrap();
        let g = VoxelGrid::zeros(1.2, 16);
        let (l2, hm1) = error_metrics(&g, &truth);
        let c = truth.components()[0];
        assert!(
            (l2 - c.lp_norm(2)).abs() < 1e-4 * l2,
            "{l2} {}",
            c.lp_norm(2)
        );
        assert!(hm1 <= l2);
    }

    #[test]
    fn sampled_truth_has_small_error() {
        let truth = SourceModel::centered_gaussian(0.2, 1.2).unwrap();
        let g = VoxelGrid::sample(&truth, 1.2, 32);
        let (l2, hm1) = error_metrics(&g, &truth);
        let norm = truth.components()[0].lp_norm(2);
        assert!(l2 < 1e-3 * norm, "floor {l2}");
        assert!(hm1 <= l2);
    }
}
