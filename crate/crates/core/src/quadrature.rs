//! Gauss-Legendre rules, composite radial rules and sphere rules.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::Vec3;

/// Gauss-Legendre nodes and weights on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n
            let theta = PI * (i as f64 + 0.75) / (nf + 0.5);
            let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped affinely onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let x = self.nodes.iter().map(|t| mid + half * t).collect();
        let w = self.weights.iter().map(|w| half * w).collect();
        (x, w)
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * f(mid + half * t))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre rule on [a, b] built from 8-point panels.
#[derive(Clone, Debug)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

pub const PANEL_ORDER: usize = 8;

impl CompositeRule {
    /// About `nodes_per_unit` nodes per unit length, at least one panel.
    pub fn new(a: f64, b: f64, nodes_per_unit: usize) -> Self {
        let panels = (((b - a) * nodes_per_unit as f64) / PANEL_ORDER as f64)
            .ceil()
            .max(1.0) as usize;
        Self::with_panels(a, b, panels)
    }

    pub fn with_panels(a: f64, b: f64, panels: usize) -> Self {
        let gl = GaussLegendre::new(PANEL_ORDER);
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * PANEL_ORDER);
        let mut weights = Vec::with_capacity(panels * PANEL_ORDER);
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let (x, w) = gl.mapped(lo, lo + h);
            nodes.extend(x);
            weights.extend(w);
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(*x))
            .sum()
    }
}

/// Orthonormal frame used for the (theta, phi) chart around a pole direction.
///
/// `chart(theta, phi) = cos(phi) (cos(theta) e0 + sin(theta) e1) + sin(phi) e2`,
/// so `(0, 0)` maps to `e0` and the chart singularities sit at `phi = +-pi/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartFrame {
    pub e0: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
}

impl ChartFrame {
    pub fn around(x0: &Vec3) -> Self {
        let e0 = x0.normalize();
        // helper axis least aligned with e0
        let abs = e0.abs();
        let helper = if abs.x <= abs.y && abs.x <= abs.z {
            Vec3::x()
        } else if abs.y <= abs.z {
            Vec3::y()
        } else {
            Vec3::z()
        };
        let e2 = e0.cross(&helper).normalize();
        let e1 = e2.cross(&e0);
        Self { e0, e1, e2 }
    }

    pub fn chart(&self, theta: f64, phi: f64) -> Vec3 {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        self.e0 * (cp * ct) + self.e1 * (cp * st) + self.e2 * sp
    }

    pub fn inverse(&self, x: &Vec3) -> (f64, f64) {
        let a = x.dot(&self.e0);
        let b = x.dot(&self.e1);
        let c = x.dot(&self.e2).clamp(-1.0, 1.0);
        (b.atan2(a), c.asin())
    }
}

/// Product rule on the unit sphere: Gauss-Legendre in sin(phi), uniform in theta.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub directions: Vec<Vec3>,
    pub weights: Vec<f64>,
    /// Chart coordinates (theta, phi) of each direction in `frame`.
    pub angles: Vec<(f64, f64)>,
    pub frame: ChartFrame,
    pub degree: usize,
}

impl SphereRule {
    /// Exact for spherical polynomials of degree <= `degree`.
    pub fn product_gauss(degree: usize, frame: ChartFrame) -> Self {
        let n_lat = degree / 2 + 1;
        let n_lon = degree + 1;
        let gl = GaussLegendre::new(n_lat);
        let dtheta = 2.0 * PI / n_lon as f64;
        let mut directions = Vec::with_capacity(n_lat * n_lon);
        let mut weights = Vec::with_capacity(n_lat * n_lon);
        let mut angles = Vec::with_capacity(n_lat * n_lon);
        for (z, wz) in gl.nodes.iter().zip(&gl.weights) {
            let phi = z.asin();
            for j in 0..n_lon {
                let theta = -PI + (j as f64 + 0.5) * dtheta;
                directions.push(frame.chart(theta, phi));
                weights.push(wz * dtheta);
                angles.push((theta, phi));
            }
        }
        Self {
            directions,
            weights,
            angles,
            frame,
            degree,
        }
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

/// Fibonacci-spiral points on the cap `{x : |x - x0| < delta}`.
pub fn fibonacci_cap(x0: &Vec3, delta: f64, n: usize) -> Vec<Vec3> {
    let frame = ChartFrame::around(x0);
    let cos_beta = (1.0 - 0.5 * delta * delta).max(-1.0);
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (1.0 - cos_beta) * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let (s, c) = (golden * i as f64).sin_cos();
            (frame.e0 * z + frame.e1 * (r * c) + frame.e2 * (r * s)).normalize()
        })
        .collect()
}

/// Fibonacci-spiral points on the whole sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let (s, c) = (golden * i as f64).sin_cos();
            Vec3::new(r * c, r * s, z)
        })
        .collect()
}
