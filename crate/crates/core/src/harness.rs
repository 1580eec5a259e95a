//! Sweeps over (K, eps, delta), record files and reports.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::continuation::{
    cell_grid_gamma, continue_in_angle, continue_in_k, inscribed_half_width,
    AngleContinuationProblem, KContinuationProblem, Patch, RegularizationSpec,
};
use crate::error::{Error, Result};
use crate::forward::{sup_norm, synthesize_dataset, Aperture, FarFieldDataset, QuadratureSpec};
use crate::quadrature::ChartFrame;
use crate::reconstruct::{reconstruct_pipeline, GridSpec, PipelineConfig};
use crate::source_models::{source_norms, SourceModel};
use crate::spectral::{bound_fit, bound_thm1, bound_thm2, BoundFit, BoundKind, BoundParams};
use crate::{fmt_f64, Vec3};

pub const RECORD_HEADER: &str =
    "K,eps,delta,err_l2,err_hm1,cutoff_s,bound1,bound2,gamma_k,gamma_angle,status,wall_s";

/// One sweep cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRecord {
    #[serde(rename = "K")]
    pub k_max: f64,
    pub eps: f64,
    pub delta: f64,
    pub err_l2: f64,
    pub err_hm1: f64,
    pub cutoff_s: f64,
    pub bound1: f64,
    pub bound2: f64,
    pub gamma_k: f64,
    pub gamma_angle: f64,
    pub status: String,
    pub wall_s: f64,
}

impl StabilityRecord {
    fn failed(k_max: f64, eps: f64, delta: f64, err: &Error) -> Self {
        Self {
            k_max,
            eps,
            delta,
            err_l2: 0.0,
            err_hm1: 0.0,
            cutoff_s: 0.0,
            bound1: 0.0,
            bound2: 0.0,
            gamma_k: 0.0,
            gamma_angle: 0.0,
            status: format!("error: {err}").replace([',', '\n'], ";"),
            wall_s: 0.0,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(self.k_max),
            fmt_f64(self.eps),
            fmt_f64(self.delta),
            fmt_f64(self.err_l2),
            fmt_f64(self.err_hm1),
            fmt_f64(self.cutoff_s),
            fmt_f64(self.bound1),
            fmt_f64(self.bound2),
            fmt_f64(self.gamma_k),
            fmt_f64(self.gamma_angle),
            self.status,
            fmt_f64(self.wall_s)
        )
    }

    pub fn from_csv_row(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(Error::InvalidInput(format!(
                "record row has {} fields",
                f.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            f[i].trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("field {i}: {e}")))
        };
        Ok(Self {
            k_max: num(0)?,
            eps: num(1)?,
            delta: num(2)?,
            err_l2: num(3)?,
            err_hm1: num(4)?,
            cutoff_s: num(5)?,
            bound1: num(6)?,
            bound2: num(7)?,
            gamma_k: num(8)?,
            gamma_angle: num(9)?,
            status: f[10].to_string(),
            wall_s: num(11)?,
        })
    }
}

pub fn write_records(path: &Path, records: &[StabilityRecord]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{RECORD_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<StabilityRecord>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == RECORD_HEADER => {}
        _ => {
            return Err(Error::InvalidInput(
                "records file lacks the expected header".into(),
            ))
        }
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(StabilityRecord::from_csv_row)
        .collect()
}

fn default_x0() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}
fn default_n_dirs() -> usize {
    64
}
fn default_n_freqs() -> usize {
    24
}
fn default_grid() -> GridSpec {
    GridSpec { n_per_axis: 24 }
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_sobolev_n() -> u32 {
    1
}

/// Sweep description, read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: SourceModel,
    #[serde(rename = "K_list")]
    pub k_list: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub delta_list: Vec<f64>,
    #[serde(default = "default_x0")]
    pub x0_hat: [f64; 3],
    #[serde(default = "default_n_dirs")]
    pub n_dirs: usize,
    #[serde(default = "default_n_freqs")]
    pub n_freqs: usize,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    /// Constant `C` of the evaluated bounds.
    #[serde(default = "one")]
    pub bound_c: f64,
    /// Sobolev index `n` of the first bound (class `H^{2n+1}`).
    #[serde(default = "default_sobolev_n")]
    pub bound_n: u32,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Measure wall time per cell; off by default so record files are reproducible.
    #[serde(default)]
    pub record_wall_time: bool,
}

fn one() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// The shipped default configuration.
    pub fn default_config() -> Self {
        Self::from_json(include_str!("../configs/default.json")).expect("shipped config is valid")
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        if self.k_list.is_empty() || self.eps_list.is_empty() || self.delta_list.is_empty() {
            return Err(Error::InvalidInput(
                "K_list, eps_list and delta_list must be nonempty".into(),
            ));
        }
        if let Some(k) = self.k_list.iter().find(|k| !(**k > 1.0)) {
            return Err(Error::InvalidInput(format!(
                "every K must exceed 1, got {k}"
            )));
        }
        if let Some(e) = self
            .eps_list
            .iter()
            .find(|e| !(**e >= 0.0 && **e < (-1f64).exp()))
        {
            return Err(Error::InvalidInput(format!(
                "every eps must lie in [0, 1/e), got {e}"
            )));
        }
        if let Some(d) = self.delta_list.iter().find(|d| !(**d > 0.0 && **d < 2.0)) {
            return Err(Error::InvalidInput(format!(
                "every delta must lie in (0, 2), got {d}"
            )));
        }
        self.quadrature.validate()?;
        GridSpec::new(self.grid.n_per_axis)?;
        if let Some(m) = self.source.sobolev_order_bound() {
            if m < 2 * self.bound_n + 1 {
                return Err(Error::InvalidInput(format!(
                    "source lies in H^{m} only; the first bound needs H^{}",
                    2 * self.bound_n + 1
                )));
            }
        }
        Ok(())
    }

    /// Cells sorted by (K, eps, delta).
    pub fn cells(&self) -> Vec<(f64, f64, f64)> {
        let mut ks = self.k_list.clone();
        let mut es = self.eps_list.clone();
        let mut ds = self.delta_list.clone();
        for v in [&mut ks, &mut es, &mut ds] {
            v.sort_by(|a, b| a.total_cmp(b));
            v.dedup();
        }
        let mut out = Vec::new();
        for &k in &ks {
            for &e in &es {
                for &d in &ds {
                    out.push((k, e, d));
                }
            }
        }
        out
    }

    /// Bound parameters with `M = |f|_{H^{2n+1}}` and `M0 = |f|_{L2}` of the source.
    pub fn bound_template(&self) -> Result<BoundParams> {
        let norms = source_norms(&self.source, &self.quadrature)?;
        let n = self.bound_n;
        let order = (2 * n + 1) as i32;
        let m = self
            .source
            .weighted_tail(0.0, |r| (1.0 + r * r).powi(order))
            .sqrt()
            .max(f64::MIN_POSITIVE);
        Ok(BoundParams {
            alpha: self.pipeline.alpha,
            c: self.bound_c,
            m,
            m0: norms.l2.max(f64::MIN_POSITIVE),
            n,
            radius: self.source.support_radius(),
        })
    }

    fn pipeline_for_source(&self) -> PipelineConfig {
        let mut p = self.pipeline.clone();
        p.radius = self.source.support_radius();
        p
    }
}

/// Empirical Hoelder exponents of a dataset: wavenumber continuation along the
/// sampled direction closest to `x0_hat` onto `(-2K, 2K)`, and angle continuation
/// of the middle shell onto the square inscribed in the cap of radius `min(2 delta, 1.9)`.
pub fn dataset_gammas(ds: &FarFieldDataset, radius: f64, f_l1: f64) -> Result<(f64, f64)> {
    let x0 = ds.aperture.x0_hat;
    let nearest = (0..ds.n_dirs())
        .min_by(|&a, &b| {
            (ds.directions[a] - x0)
                .norm()
                .total_cmp(&(ds.directions[b] - x0).norm())
        })
        .ok_or(Error::EmptyDataset)?;
    let a = 2.0 * ds.k_max;
    let samples: Vec<_> = ds
        .wavenumbers
        .iter()
        .enumerate()
        .map(|(j, k)| (*k, ds.value(nearest, j)))
        .collect();
    let problem =
        KContinuationProblem::new(ds.directions[nearest], samples, ds.k_max, a, f_l1, radius);
    let targets: Vec<f64> = (0..201)
        .map(|i| -a + 2.0 * a * (i as f64 + 0.5) / 201.0)
        .collect();
    let reg = RegularizationSpec::with_noise(ds.noise_level);
    let gk = continue_in_k(&problem, &targets, &reg)?.gamma_emp;

    let j = ds.n_freqs() / 2;
    let frame = ChartFrame::around(&x0);
    let values: Vec<_> = (0..ds.n_dirs()).map(|d| ds.value(d, j)).collect();
    let delta1 = (2.0 * ds.aperture.delta).min(1.9);
    let omega = Patch::centered(inscribed_half_width(delta1));
    let problem = AngleContinuationProblem::from_directions(
        ds.wavenumbers[j],
        frame,
        &ds.directions,
        &values,
        omega,
        f_l1,
        radius,
    );
    let h = omega.theta.1;
    let targets: Vec<(f64, f64)> = (0..15)
        .flat_map(|a| {
            (0..15).map(move |b| {
                (
                    -h + 2.0 * h * a as f64 / 14.0,
                    -h + 2.0 * h * b as f64 / 14.0,
                )
            })
        })
        .collect();
    let ga = continue_in_angle(&problem, &targets, &reg)?.gamma_emp;
    Ok((gk, ga))
}

fn run_cell(
    cfg: &ExperimentConfig,
    template: &BoundParams,
    idx: usize,
    cell: (f64, f64, f64),
) -> StabilityRecord {
    let (k_max, eps, delta) = cell;
    let start = Instant::now();
    let run = || -> Result<StabilityRecord> {
        let aperture = Aperture::new(Vec3::from(cfg.x0_hat), delta)?;
        let seed = cfg
            .rng_seed
            .wrapping_add((idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let ds = synthesize_dataset(
            &cfg.source,
            &aperture,
            k_max,
            cfg.n_dirs,
            cfg.n_freqs,
            eps,
            seed,
            &cfg.quadrature,
        )?;
        let pipe = cfg.pipeline_for_source();
        let res = reconstruct_pipeline(&ds, &pipe, &cfg.grid, Some(&cfg.source))?;
        let eps_eff = if eps > 0.0 { eps } else { f64::EPSILON };
        let b1 = bound_thm1(template, k_max, eps_eff)?;
        let b2 = bound_thm2(template, k_max, eps_eff)?;
        let sup = sup_norm(&ds)?;
        let (gk, ga) = if sup > 0.0 {
            let f_l1 = pipe.f_l1_bound.unwrap_or(2.0 * sup);
            dataset_gammas(&ds, pipe.radius, f_l1)?
        } else {
            (0.999, 0.999)
        };
        Ok(StabilityRecord {
            k_max,
            eps,
            delta,
            err_l2: res.err_l2.unwrap_or(0.0),
            err_hm1: res.err_hm1.unwrap_or(0.0),
            cutoff_s: res.cutoff_s,
            bound1: b1,
            bound2: b2,
            gamma_k: gk,
            gamma_angle: ga,
            status: "ok".into(),
            wall_s: 0.0,
        })
    };
    let mut rec = run().unwrap_or_else(|e| StabilityRecord::failed(k_max, eps, delta, &e));
    if cfg.record_wall_time {
        rec.wall_s = start.elapsed().as_secs_f64();
    }
    rec
}

/// Run every (K, eps, delta) cell. Cells run on the rayon pool; rows are written
/// to `records_path` in sorted order as soon as all earlier rows are done.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    records_path: Option<&Path>,
) -> Result<Vec<StabilityRecord>> {
    cfg.validate()?;
    let template = cfg.bound_template()?;
    let cells = cfg.cells();
    let mut writer = match records_path {
        Some(p) => {
            if let Some(dir) = p.parent() {
                fs::create_dir_all(dir)?;
            }
            let mut w = std::io::BufWriter::new(fs::File::create(p)?);
            writeln!(w, "{RECORD_HEADER}")?;
            w.flush()?;
            Some(w)
        }
        None => None,
    };
    let (tx, rx) = mpsc::channel::<(usize, StabilityRecord)>();
    let mut done: Vec<Option<StabilityRecord>> = vec![None; cells.len()];
    let mut next = 0;
    let mut io_result: Result<()> = Ok(());
    rayon::in_place_scope(|scope| {
        for (idx, cell) in cells.iter().enumerate() {
            let tx = tx.clone();
            let template = &template;
            scope.spawn(move |_| {
                let rec = run_cell(cfg, template, idx, *cell);
                let _ = tx.send((idx, rec));
            });
        }
        drop(tx);
        for (idx, rec) in rx.iter() {
            done[idx] = Some(rec);
            while next < done.len() && done[next].is_some() {
                if let (Some(w), Some(r)) = (writer.as_mut(), done[next].as_ref()) {
                    if io_result.is_ok() {
                        io_result = writeln!(w, "{}", r.csv_row())
                            .and_then(|_| w.flush())
                            .map_err(Error::from);
                    }
                }
                next += 1;
            }
        }
    });
    io_result?;
    Ok(done
        .into_iter()
        .map(|r| r.expect("every cell reports"))
        .collect())
}

/// Files written by `report`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub n_records: usize,
    pub fit: Option<BoundFit>,
    pub fit_status: String,
    pub degenerate_plots: Vec<String>,
    pub majorized: Option<bool>,
}

/// CSV table, fitted-bound overlay and SVG log-log plots.
pub fn report(
    records: &[StabilityRecord],
    template: Option<&BoundParams>,
    out_dir: &Path,
) -> Result<ReportSummary> {
    if records.is_empty() {
        return Err(Error::InvalidInput(
            "report needs at least one record".into(),
        ));
    }
    fs::create_dir_all(out_dir)?;
    write_records(&out_dir.join("records.csv"), records)?;

    let (fit, fit_status) = match template {
        None => (None, "skipped: no bound template".to_string()),
        Some(t) => match bound_fit(records, t, &[BoundKind::L2, BoundKind::Hm1]) {
            Ok(f) => (Some(f), "ok".to_string()),
            Err(e @ Error::InsufficientRecords(_)) => (None, format!("skipped: {e}")),
            Err(e) => (None, format!("failed: {e}")),
        },
    };
    let mut majorized = None;
    {
        let mut out = std::io::BufWriter::new(fs::File::create(out_dir.join("overlay.csv"))?);
        writeln!(
            out,
            "K,eps,delta,err_l2_sq,err_hm1_sq,fit_bound1,fit_bound2"
        )?;
        let mut all = true;
        for r in records {
            let (f1, f2) = match &fit {
                Some(f) if r.eps > 0.0 => (
                    bound_thm1(&f.params, r.k_max, r.eps).unwrap_or(f64::NAN),
                    bound_thm2(&f.params, r.k_max, r.eps).unwrap_or(f64::NAN),
                ),
                _ => (f64::NAN, f64::NAN),
            };
            if fit.is_some() && r.status == "ok" && r.eps > 0.0 {
                all &=
                    r.err_l2.powi(2) <= f1 * (1.0 + 1e-9) && r.err_hm1.powi(2) <= f2 * (1.0 + 1e-9);
            }
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fmt_f64(r.k_max),
                fmt_f64(r.eps),
                fmt_f64(r.delta),
                fmt_f64(r.err_l2.powi(2)),
                fmt_f64(r.err_hm1.powi(2)),
                fmt_f64(f1),
                fmt_f64(f2)
            )?;
        }
        out.flush()?;
        if fit.is_some() {
            majorized = Some(all);
        }
    }

    let mut degenerate = Vec::new();
    let ok: Vec<&StabilityRecord> = records.iter().filter(|r| r.status == "ok").collect();
    // error vs eps, one series per K
    let mut by_k: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    let mut by_eps: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    for r in &ok {
        by_k.entry(r.k_max.to_bits())
            .or_default()
            .push((r.eps, r.err_hm1));
        by_eps
            .entry(r.eps.to_bits())
            .or_default()
            .push((r.k_max, r.err_hm1));
    }
    let series =
        |m: BTreeMap<u64, Vec<(f64, f64)>>, label: &str| -> Vec<(String, Vec<(f64, f64)>)> {
            m.into_iter()
                .map(|(k, mut v)| {
                    v.sort_by(|a, b| a.0.total_cmp(&b.0));
                    (format!("{label}={}", f64::from_bits(k)), v)
                })
                .collect()
        };
    let plots = [
        (
            "err_vs_eps.svg",
            "H^-1 error vs eps",
            "eps",
            series(by_k, "K"),
        ),
        (
            "err_vs_k.svg",
            "H^-1 error vs K",
            "K",
            series(by_eps, "eps"),
        ),
    ];
    for (file, title, xl, s) in plots {
        let (svg, degen) = svg_loglog(title, xl, "err_hm1", &s);
        fs::write(out_dir.join(file), svg)?;
        if degen {
            degenerate.push(file.to_string());
        }
    }
    // gamma vs K/a: sweep points at K/a = 1/2 and the cell-grid exponent curve
    let mut gamma_series = vec![(
        "gamma_k (sweep, a = 2K)".to_string(),
        ok.iter()
            .map(|r| (0.5, r.gamma_k))
            .filter(|p| p.1 > 0.0)
            .collect::<Vec<_>>(),
    )];
    if let Some(r0) = ok.first() {
        let _ = r0;
        let rho = 1.0 / template.map(|t| t.radius).unwrap_or(1.0);
        let curve: Vec<(f64, f64)> = (1..=20)
            .filter_map(|i| {
                let ratio = 0.5 * i as f64 / 20.0;
                cell_grid_gamma(rho, ratio.min(2.0 * rho / 5.0))
                    .ok()
                    .map(|g| (ratio, g.1))
            })
            .collect();
        gamma_series.push(("cell-grid gamma".to_string(), curve));
    }
    let (svg, degen) = svg_loglog("gamma vs K/a", "K/a", "gamma", &gamma_series);
    fs::write(out_dir.join("gamma_vs_k_over_a.svg"), svg)?;
    if degen
        || gamma_series[0]
            .1
            .iter()
            .map(|p| p.0.to_bits())
            .collect::<std::collections::BTreeSet<_>>()
            .len()
            < 2
    {
        degenerate.push("gamma_vs_k_over_a.svg".to_string());
    }

    let summary = ReportSummary {
        n_records: records.len(),
        fit,
        fit_status,
        degenerate_plots: degenerate,
        majorized,
    };
    fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(summary)
}

/// Minimal log-log line plot. Returns the SVG text and whether the data is
/// degenerate (fewer than two distinct positive points in every series).
pub fn svg_loglog(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> (String, bool) {
    let (w, h, pad) = (640.0, 420.0, 60.0);
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.1.iter().copied())
        .filter(|p| p.0 > 0.0 && p.1 > 0.0 && p.0.is_finite() && p.1.is_finite())
        .collect();
    let degenerate = series
        .iter()
        .all(|s| s.1.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).count() < 2);
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        w / 2.0,
        xml_escape(title)
    ));
    if pts.is_empty() {
        svg.push_str("<text x=\"320\" y=\"210\" text-anchor=\"middle\" font-family=\"sans-serif\">no data</text>\n</svg>\n");
        return (svg, true);
    }
    let lx: Vec<f64> = pts.iter().map(|p| p.0.log10()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.log10()).collect();
    let span = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo < 1e-9 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo - 0.05 * (hi - lo), hi + 0.05 * (hi - lo))
        }
    };
    let (x0, x1) = span(&lx);
    let (y0, y1) = span(&ly);
    let px = |x: f64| pad + (x.log10() - x0) / (x1 - x0) * (w - 2.0 * pad);
    let py = |y: f64| h - pad - (y.log10() - y0) / (y1 - y0) * (h - 2.0 * pad);
    svg.push_str(&format!(
        "<rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        w - 2.0 * pad,
        h - 2.0 * pad
    ));
    for (lo, hi, vertical) in [(x0, x1, true), (y0, y1, false)] {
        let mut e = lo.ceil() as i32;
        while (e as f64) <= hi {
            let v = 10f64.powi(e);
            if vertical {
                svg.push_str(&format!(
                    "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">1e{e}</text>\n",
                    px(v),
                    h - pad + 16.0
                ));
            } else {
                svg.push_str(&format!(
                    "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e{e}</text>\n",
                    pad - 4.0,
                    py(v) + 4.0
                ));
            }
            e += 1;
        }
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
        w / 2.0,
        h - 12.0,
        xml_escape(xlabel)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
        h / 2.0,
        h / 2.0,
        xml_escape(ylabel)
    ));
    let colors = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf",
    ];
    for (i, (name, s)) in series.iter().enumerate() {
        let color = colors[i % colors.len()];
        let good: Vec<&(f64, f64)> = s.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).collect();
        let path: Vec<String> = good
            .iter()
            .map(|p| format!("{:.2},{:.2}", px(p.0), py(p.1)))
            .collect();
        if path.len() > 1 {
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                path.join(" ")
            ));
        }
        for p in &good {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                px(p.0),
                py(p.1)
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{}</text>\n",
            w - pad + 4.0 - 120.0,
            pad + 14.0 * (i as f64 + 1.0),
            xml_escape(name)
        ));
    }
    svg.push_str("</svg>\n");
    (svg, degenerate)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_row_round_trip() {
        let r = StabilityRecord {
            k_max: 4.0,
            eps: 1e-4,
            delta: 0.5,
            err_l2: 0.1,
            err_hm1: 0.01,
            cutoff_s: 4.0,
            bound1: 2.0,
            bound2: 3.0,
            gamma_k: 0.2,
            gamma_angle: 0.3,
            status: "ok".into(),
            wall_s: 0.0,
        };
        let back = StabilityRecord::from_csv_row(&r.csv_row()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn default_config_parses() {
        let cfg = ExperimentConfig::default_config();
        assert!(!cfg.cells().is_empty());
    }

    #[test]
    fn degenerate_plot_flag() {
        let (_, d) = svg_loglog("t", "x", "y", &[("a".into(), vec![(1.0, 1.0)])]);
        assert!(d);
        let (svg, d) = svg_loglog(
            "t",
            "x",
            "y",
            &[("a".into(), vec![(1.0, 1.0), (10.0, 0.1)])],
        );
        assert!(!d && svg.contains("polyline"));
    }
}
