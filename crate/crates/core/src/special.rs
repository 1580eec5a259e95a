//! Spherical Bessel functions of the first kind.

/// `j_0(x) = sin(x)/x`, continuous at 0.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// `j_n(z) / z^n` for z >= 0. Finite at z = 0 where it equals `1/(2n+1)!!`.
pub fn sph_bessel_scaled(n: u32, z: f64) -> f64 {
    let z = z.abs();
    if z < 2.0 {
        return series_scaled(n, z);
    }
    sph_bessel(n, z) / z.powi(n as i32)
}

/// `j_n(z)` for z >= 0.
pub fn sph_bessel(n: u32, z: f64) -> f64 {
    let z = z.abs();
    if z < 2.0 {
        return series_scaled(n, z) * z.powi(n as i32);
    }
    let nf = n as f64;
    if z >= nf {
        // upward recurrence is stable once z exceeds the order
        let mut j0 = z.sin() / z;
        if n == 0 {
            return j0;
        }
        let mut j1 = z.sin() / (z * z) - z.cos() / z;
        for l in 1..n {
            let j2 = (2.0 * l as f64 + 1.0) / z * j1 - j0;
            j0 = j1;
            j1 = j2;
        }
        j1
    } else {
        // Miller's downward recurrence normalized by j_0
        let start = n as usize + 20 + z as usize;
        let mut jp1 = 0.0;
        let mut j = 1e-300;
        let mut out = 0.0;
        for l in (0..=start).rev() {
            let jm1 = (2.0 * l as f64 + 1.0) / z * j - jp1;
            if l == n as usize {
                out = j;
            }
            jp1 = j;
            j = jm1;
            if j.abs() > 1e250 {
                let s = 1e-250;
                j *= s;
                jp1 *= s;
                out *= s;
            }
        }
        // after the loop jp1 holds the unnormalized j_0
        out * (z.sin() / z) / jp1
    }
}

fn series_scaled(n: u32, z: f64) -> f64 {
    let mut df = 1.0;
    for k in 1..=n {
        df *= (2 * k + 1) as f64;
    }
    let x = -0.5 * z * z;
    let mut term = 1.0 / df;
    let mut sum = term;
    let two_n = 2.0 * n as f64;
    for k in 0..60 {
        let kf = k as f64;
        term *= x / ((kf + 1.0) * (two_n + 2.0 * kf + 3.0));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j_closed(n: u32, z: f64) -> f64 {
        let (s, c) = z.sin_cos();
        match n {
            0 => s / z,
            1 => s / (z * z) - c / z,
            2 => (3.0 / (z * z) - 1.0) * s / z - 3.0 * c / (z * z),
            3 => (15.0 / z.powi(3) - 6.0 / z) * s / z - (15.0 / (z * z) - 1.0) * c / z,
            _ => unreachable!(),
        }
    }

    #[test]
    fn matches_closed_forms() {
        for n in 0..=3 {
            for &z in &[0.5, 1.9, 2.1, 3.0, 7.5, 20.0, 55.0] {
                let a = sph_bessel(n, z);
                let b = j_closed(n, z);
                assert!(
                    (a - b).abs() < 1e-12 * (1.0 + b.abs()),
                    "n={n} z={z} {a} {b}"
                );
            }
        }
    }

    #[test]
    fn scaled_is_smooth_at_origin() {
        assert!((sph_bessel_scaled(3, 0.0) - 1.0 / 105.0).abs() < 1e-16);
        let a = sph_bessel_scaled(3, 1.999_999);
        let b = sph_bessel_scaled(3, 2.000_001);
        assert!((a - b).abs() < 1e-8, "{a} {b}");
    }

    #[test]
    fn miller_branch_agrees_with_series_region() {
        // z in [2, n) uses the downward recurrence
        let z = 3.0;
        let a = sph_bessel(6, z);
        let b = series_scaled(6, z) * z.powi(6);
        assert!((a - b).abs() < 1e-13 * b.abs());
    }
}
