//! Polynomial least squares with a Gaussian prior on the coefficients.
//!
//! Coefficient `c_j` gets prior width `w_j` and the data noise has width `sigma`,
//! so the fit minimizes `|B c - y|^2 / sigma^2 + sum |c_j / w_j|^2`. The degree is
//! the smallest one whose residual RMS drops below `tau * sigma`.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;

struct Solver {
    cols: usize,
    // columns of U, singular filter s/(s^2+1), columns of V
    u: DMatrix<f64>,
    filter: Vec<f64>,
    v: DMatrix<f64>,
}

/// Design matrix with degree-graded columns and cached factorizations.
pub struct FitPlan {
    design: DMatrix<f64>,
    widths: Vec<f64>,
    /// number of leading columns used by degree `d`
    cols_for_degree: Vec<usize>,
    sigma: f64,
    solvers: Vec<OnceLock<Solver>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOutcome {
    pub coeffs: Vec<Complex64>,
    pub degree: usize,
    pub residual_rms: f64,
}

impl FitPlan {
    pub fn new(
        design: DMatrix<f64>,
        widths: Vec<f64>,
        cols_for_degree: Vec<usize>,
        sigma: f64,
    ) -> Self {
        assert_eq!(design.ncols(), widths.len());
        assert!(cols_for_degree.iter().all(|&c| c <= widths.len()));
        assert!(sigma > 0.0);
        let solvers = (0..cols_for_degree.len())
            .map(|_| OnceLock::new())
            .collect();
        Self {
            design,
            widths,
            cols_for_degree,
            sigma,
            solvers,
        }
    }

    pub fn max_degree(&self) -> usize {
        self.cols_for_degree.len() - 1
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn solver(&self, degree: usize) -> &Solver {
        self.solvers[degree].get_or_init(|| {
            let cols = self.cols_for_degree[degree];
            let n = self.design.nrows();
            let mut a = DMatrix::<f64>::zeros(n, cols);
            for j in 0..cols {
                let s = self.widths[j] / self.sigma;
                for i in 0..n {
                    a[(i, j)] = self.design[(i, j)] * s;
                }
            }
            let svd = a.svd(true, true);
            let u = svd.u.expect("left singular vectors");
            let v = svd.v_t.expect("right singular vectors").transpose();
            let filter = svd
                .singular_values
                .iter()
                .map(|s| s / (s * s + 1.0))
                .collect();
            Solver { cols, u, filter, v }
        })
    }

    /// MAP coefficients at a fixed degree.
    pub fn fit_degree(&self, y: &[Complex64], degree: usize) -> FitOutcome {
        let n = self.design.nrows();
        assert_eq!(y.len(), n);
        let s = self.solver(degree);
        let rank = s.filter.len();
        let mut t = vec![Complex64::new(0.0, 0.0); rank];
        for (r, tr) in t.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, yi) in y.iter().enumerate() {
                acc += yi * s.u[(i, r)];
            }
            *tr = acc * (s.filter[r] / self.sigma);
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); s.cols];
        for (j, cj) in coeffs.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (r, tr) in t.iter().enumerate() {
                acc += tr * s.v[(j, r)];
            }
            *cj = acc * self.widths[j];
        }
        let mut ss = 0.0;
        for (i, yi) in y.iter().enumerate() {
            let mut fit = Complex64::new(0.0, 0.0);
            for (j, cj) in coeffs.iter().enumerate() {
                fit += cj * self.design[(i, j)];
            }
            ss += (fit - yi).norm_sqr();
        }
        FitOutcome {
            coeffs,
            degree,
            residual_rms: (ss / n.max(1) as f64).sqrt(),
        }
    }

    /// Smallest degree whose residual RMS is at most `tau * sigma`, else the largest.
    pub fn fit_discrepancy(&self, y: &[Complex64], tau: f64) -> FitOutcome {
        let mut last = None;
        for d in 0..=self.max_degree() {
            let out = self.fit_degree(y, d);
            if out.residual_rms <= tau * self.sigma {
                return out;
            }
            last = Some(out);
        }
        last.expect("plan has at least one degree")
    }
}

/// `ln(n!)` by summation, exact enough for prior widths.
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomial_plan(xs: &[f64], deg: usize, width: f64, sigma: f64) -> FitPlan {
        let mut design = DMatrix::zeros(xs.len(), deg + 1);
        for (i, x) in xs.iter().enumerate() {
            for j in 0..=deg {
                design[(i, j)] = x.powi(j as i32);
            }
        }
        FitPlan::new(design, vec![width; deg + 1], (1..=deg + 1).collect(), sigma)
    }

    #[test]
    fn recovers_quadratic_with_weak_prior() {
        let xs: Vec<f64> = (0..20).map(|i| -1.0 + 0.1 * i as f64).collect();
        let y: Vec<Complex64> = xs
            .iter()
            .map(|x| Complex64::new(1.0 - 2.0 * x + 0.5 * x * x, x * x))
            .collect();
        let plan = monomial_plan(&xs, 6, 1e6, 1e-10);
        let out = plan.fit_discrepancy(&y, 1.5);
        assert_eq!(out.degree, 2);
        assert!((out.coeffs[1].re + 2.0).abs() < 1e-8);
        assert!((out.coeffs[2].im - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_data_gives_zero_fit() {
        let xs = [0.1, 0.2, 0.3];
        let plan = monomial_plan(&xs, 3, 1.0, 1e-3);
        let out = plan.fit_discrepancy(&[Complex64::new(0.0, 0.0); 3], 1.5);
        assert!(out.coeffs.iter().all(|c| c.norm() == 0.0));
        assert_eq!(out.degree, 0);
    }

    #[test]
    fn strong_prior_shrinks_toward_zero() {
        let xs = [0.0, 0.5, 1.0];
        let y = [Complex64::new(1.0, 0.0); 3];
        let weak = monomial_plan(&xs, 0, 1e3, 0.1).fit_degree(&y, 0);
        let strong = monomial_plan(&xs, 0, 1e-3, 0.1).fit_degree(&y, 0);
        assert!((weak.coeffs[0].re - 1.0).abs() < 1e-4);
        assert!(strong.coeffs[0].norm() < 1e-3);
    }
}
