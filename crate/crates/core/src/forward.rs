//! Far-field patterns, radiated fields and noisy limited-aperture datasets.
//!
//! `u_inf(x_hat, k) = \int e^{-i k x_hat.y} f(y) dy = (2 pi)^{3/2} f_hat(k x_hat)`.

use std::f64::consts::PI;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{fibonacci_cap, GaussLegendre};
use crate::source_models::SourceModel;
use crate::{fmt_f64, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureScheme {
    TensorGaussLegendre,
}

/// Tensor Gauss-Legendre rule on the cube `[-R, R]^3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: QuadratureScheme,
    pub points_per_axis: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::new(64)
    }
}

impl QuadratureSpec {
    pub fn new(points_per_axis: usize) -> Self {
        Self {
            scheme: QuadratureScheme::TensorGaussLegendre,
            points_per_axis,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points_per_axis < 8 || self.points_per_axis % 2 == 1 {
            return Err(Error::InvalidInput(format!(
                "points_per_axis must be even and >= 8, got {}",
                self.points_per_axis
            )));
        }
        Ok(())
    }

    /// Largest wavenumber the rule resolves on a cube of half-width `r`.
    pub fn max_wavenumber(&self, r: f64) -> f64 {
        (self.points_per_axis as f64 - 4.0) * PI / (2.0 * r)
    }
}

/// Cached quadrature samples `w_i w_j w_k f(y_ijk)` of a source.
#[derive(Clone, Debug)]
pub struct FarFieldOperator {
    quad: QuadratureSpec,
    radius: f64,
    nodes: Vec<f64>,
    weighted: Vec<Complex64>,
}

impl FarFieldOperator {
    pub fn new(model: &SourceModel, quad: &QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        let n = quad.points_per_axis;
        let radius = model.support_radius();
        let (nodes, w) = GaussLegendre::new(n).mapped(-radius, radius);
        let weighted: Vec<Complex64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|k| {
                let nodes = &nodes;
                let w = &w;
                (0..n * n).map(move |ij| {
                    let (i, j) = (ij % n, ij / n);
                    let y = Vec3::new(nodes[i], nodes[j], nodes[k]);
                    model.eval(&y) * (w[i] * w[j] * w[k])
                })
            })
            .collect();
        Ok(Self {
            quad: *quad,
            radius,
            nodes,
            weighted,
        })
    }

    fn guard(&self, k: f64) -> Result<()> {
        let need = 4.0 + 2.0 * k * self.radius / PI;
        if (self.quad.points_per_axis as f64) < need {
            return Err(Error::QuadratureUnderResolved(format!(
                "k R = {:.3} needs at least {} points per axis, have {}",
                k * self.radius,
                need.ceil(),
                self.quad.points_per_axis
            )));
        }
        Ok(())
    }

    pub fn far_field(&self, x_hat: &Vec3, k: f64) -> Result<Complex64> {
        if !(k >= 0.0) {
            return Err(Error::OutOfDomain(format!(
                "wavenumber must be >= 0, got {k}"
            )));
        }
        if (x_hat.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "direction has norm {}",
                x_hat.norm()
            )));
        }
        self.guard(k)?;
        let n = self.nodes.len();
        let phase = |c: f64| -> Vec<Complex64> {
            self.nodes
                .iter()
                .map(|y| Complex64::from_polar(1.0, -k * c * y))
                .collect()
        };
        let (px, py, pz) = (phase(x_hat.x), phase(x_hat.y), phase(x_hat.z));
        let mut total = Complex64::new(0.0, 0.0);
        for (c, pzc) in pz.iter().enumerate() {
            let mut plane = Complex64::new(0.0, 0.0);
            for (b, pyb) in py.iter().enumerate() {
                let row = &self.weighted[(c * n + b) * n..(c * n + b + 1) * n];
                let s: Complex64 = row.iter().zip(&px).map(|(w, p)| w * p).sum();
                plane += s * pyb;
            }
            total += plane * pzc;
        }
        Ok(total)
    }

    pub fn radiated_field(&self, x: &Vec3, k: f64) -> Result<Complex64> {
        if x.norm() <= self.radius {
            return Err(Error::EvaluationInsideSupport {
                norm: x.norm(),
                radius: self.radius,
            });
        }
        if !(k > 0.0) {
            return Err(Error::OutOfDomain(format!(
                "wavenumber must be > 0, got {k}"
            )));
        }
        self.guard(k)?;
        let n = self.nodes.len();
        let total = (0..n)
            .into_par_iter()
            .map(|c| {
                let mut acc = Complex64::new(0.0, 0.0);
                for b in 0..n {
                    for a in 0..n {
                        let w = self.weighted[(c * n + b) * n + a];
                        if w.re == 0.0 && w.im == 0.0 {
                            continue;
                        }
                        let y = Vec3::new(self.nodes[a], self.nodes[b], self.nodes[c]);
                        let d = (x - y).norm();
                        acc += w * Complex64::from_polar(1.0 / (4.0 * PI * d), k * d);
                    }
                }
                acc
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        Ok(total)
    }
}

pub fn far_field(
    model: &SourceModel,
    x_hat: &Vec3,
    k: f64,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    FarFieldOperator::new(model, quad)?.far_field(x_hat, k)
}

pub fn radiated_field(
    model: &SourceModel,
    x: &Vec3,
    k: f64,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    if x.norm() <= model.support_radius() {
        return Err(Error::EvaluationInsideSupport {
            norm: x.norm(),
            radius: model.support_radius(),
        });
    }
    FarFieldOperator::new(model, quad)?.radiated_field(x, k)
}

/// Observation cap `{x : |x - x0_hat| < delta}` on the unit sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aperture {
    pub x0_hat: Vec3,
    pub delta: f64,
}

impl Aperture {
    pub fn new(x0: Vec3, delta: f64) -> Result<Self> {
        let norm = x0.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidInput(
                "aperture center must be a nonzero vector".into(),
            ));
        }
        if !(delta > 0.0 && delta < 2.0) {
            return Err(Error::InvalidInput(format!(
                "aperture delta must lie in (0, 2), got {delta}"
            )));
        }
        Ok(Self {
            x0_hat: x0 / norm,
            delta,
        })
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        (x - self.x0_hat).norm() < self.delta
    }

    /// Angular radius of the cap.
    pub fn half_angle(&self) -> f64 {
        2.0 * (0.5 * self.delta).asin()
    }
}

/// Far-field samples on directions x wavenumbers, stored direction-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FarFieldDataset {
    pub aperture: Aperture,
    pub k_max: f64,
    pub directions: Vec<Vec3>,
    pub wavenumbers: Vec<f64>,
    pub values: Vec<Complex64>,
    pub noise_level: f64,
    pub rng_seed: u64,
}

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    aperture: Aperture,
    #[serde(rename = "K")]
    k_max: f64,
    noise_level: f64,
    rng_seed: u64,
    n_dirs: usize,
    n_freqs: usize,
    values: String,
}

impl FarFieldDataset {
    pub fn n_dirs(&self) -> usize {
        self.directions.len()
    }

    pub fn n_freqs(&self) -> usize {
        self.wavenumbers.len()
    }

    pub fn value(&self, dir: usize, freq: usize) -> Complex64 {
        self.values[dir * self.wavenumbers.len() + freq]
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.directions.len() * self.wavenumbers.len() {
            return Err(Error::InvalidInput("value table has the wrong size".into()));
        }
        if !(self.k_max > 1.0) {
            return Err(Error::InvalidInput(format!(
                "K must exceed 1, got {}",
                self.k_max
            )));
        }
        for d in &self.directions {
            if (d.norm() - 1.0).abs() > 1e-12 || !self.aperture.contains(d) {
                return Err(Error::InvalidInput(format!(
                    "direction {d:?} is not in the aperture"
                )));
            }
        }
        if self
            .wavenumbers
            .iter()
            .any(|&k| !(k > 0.0 && k < self.k_max))
            || self.wavenumbers.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidInput(
                "wavenumbers must be increasing in (0, K)".into(),
            ));
        }
        Ok(())
    }

    /// Same grid with every value multiplied by `s`.
    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Write `<stem>.json` (header) and `<stem>.csv` (value table).
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        let csv_name = format!("{stem}.csv");
        let header = DatasetHeader {
            aperture: self.aperture,
            k_max: self.k_max,
            noise_level: self.noise_level,
            rng_seed: self.rng_seed,
            n_dirs: self.n_dirs(),
            n_freqs: self.n_freqs(),
            values: csv_name.clone(),
        };
        fs::write(
            dir.join(format!("{stem}.json")),
            serde_json::to_string_pretty(&header)?,
        )?;
        let mut out = std::io::BufWriter::new(fs::File::create(dir.join(csv_name))?);
        writeln!(out, "dir_x,dir_y,dir_z,k,re,im")?;
        for (d, x) in self.directions.iter().enumerate() {
            for (j, k) in self.wavenumbers.iter().enumerate() {
                let v = self.value(d, j);
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    fmt_f64(x.x),
                    fmt_f64(x.y),
                    fmt_f64(x.z),
                    fmt_f64(*k),
                    fmt_f64(v.re),
                    fmt_f64(v.im)
                )?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Read a dataset from its JSON header path.
    pub fn read(header_path: &Path) -> Result<Self> {
        let header: DatasetHeader = serde_json::from_str(&fs::read_to_string(header_path)?)?;
        let base = header_path.parent().unwrap_or_else(|| Path::new("."));
        let text = fs::read_to_string(base.join(&header.values))?;
        let mut rows = Vec::new();
        for (line_no, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let fields: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let fields =
                fields.map_err(|e| Error::InvalidInput(format!("line {}: {e}", line_no + 1)))?;
            if fields.len() != 6 {
                return Err(Error::InvalidInput(format!(
                    "line {}: expected 6 columns",
                    line_no + 1
                )));
            }
            rows.push(fields);
        }
        let (nd, nf) = (header.n_dirs, header.n_freqs);
        if rows.len() != nd * nf {
            return Err(Error::InvalidInput(format!(
                "expected {} rows, found {}",
                nd * nf,
                rows.len()
            )));
        }
        let directions = (0..nd)
            .map(|d| Vec3::new(rows[d * nf][0], rows[d * nf][1], rows[d * nf][2]))
            .collect();
        let wavenumbers = (0..nf).map(|j| rows[j][3]).collect();
        let values = rows.iter().map(|r| Complex64::new(r[4], r[5])).collect();
        let ds = Self {
            aperture: header.aperture,
            k_max: header.k_max,
            directions,
            wavenumbers,
            values,
            noise_level: header.noise_level,
            rng_seed: header.rng_seed,
        };
        ds.validate()?;
        Ok(ds)
    }
}

/// Wavenumber grid `K/n, ..., ` uniform on `[K/n, K)` with `n` points.
pub fn wavenumber_grid(k_max: f64, n_freqs: usize) -> Vec<f64> {
    let k0 = k_max / n_freqs as f64;
    (0..n_freqs)
        .map(|j| k0 + j as f64 * (k_max - k0) / n_freqs as f64)
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub fn synthesize_dataset(
    model: &SourceModel,
    aperture: &Aperture,
    k_max: f64,
    n_dirs: usize,
    n_freqs: usize,
    noise_level: f64,
    rng_seed: u64,
    quad: &QuadratureSpec,
) -> Result<FarFieldDataset> {
    if n_dirs < 1 || n_freqs < 2 {
        return Err(Error::InvalidInput(format!(
            "need n_dirs >= 1 and n_freqs >= 2, got {n_dirs} and {n_freqs}"
        )));
    }
    if !(k_max > 1.0) {
        return Err(Error::InvalidInput(format!("K must exceed 1, got {k_max}")));
    }
    if !(noise_level >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "noise level must be >= 0, got {noise_level}"
        )));
    }
    let op = FarFieldOperator::new(model, quad)?;
    let directions = fibonacci_cap(&aperture.x0_hat, aperture.delta, n_dirs);
    let wavenumbers = wavenumber_grid(k_max, n_freqs);
    let rows: Result<Vec<Vec<Complex64>>> = directions
        .par_iter()
        .map(|d| wavenumbers.iter().map(|&k| op.far_field(d, k)).collect())
        .collect();
    let mut values: Vec<Complex64> = rows?.into_iter().flatten().collect();
    if noise_level > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        for v in &mut values {
            let u: f64 = rng.gen();
            let t: f64 = rng.gen();
            *v += Complex64::from_polar(noise_level * u.sqrt(), 2.0 * PI * t);
        }
    }
    Ok(FarFieldDataset {
        aperture: *aperture,
        k_max,
        directions,
        wavenumbers,
        values,
        noise_level,
        rng_seed,
    })
}

pub fn sup_norm(dataset: &FarFieldDataset) -> Result<f64> {
    if dataset.values.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(dataset.values.iter().map(|v| v.norm()).fold(0.0, f64::max))
}
