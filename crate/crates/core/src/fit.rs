//! Small least-squares helpers for slope and decay-exponent fits.

use crate::error::{Error, Result};

/// Ordinary least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms: f64,
    pub points: usize,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::DegenerateFit(format!("length mismatch {} vs {}", x.len(), y.len())));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::DegenerateFit(format!("need at least 2 points, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 || !sxx.is_finite() {
        return Err(Error::DegenerateFit("abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        rms: (rss / nf).sqrt(),
        points: n,
    })
}

/// Algebraic decay fit `v(n) ~ C n^{-exponent}` that ignores values at or below a noise floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `+inf` when the series drops to the floor (faster than any power).
    pub exponent: f64,
    pub superalgebraic: bool,
    /// Exponent fitted on the points above the floor, when enough of them exist.
    pub pre_floor_exponent: Option<f64>,
    pub points_used: usize,
}

/// Values at or below this level are treated as round-off.
pub const NOISE_FLOOR: f64 = 1e-14;

/// Fits `log v` against `log n` on the points with `v > floor`.
///
/// If any point reaches the floor the series is reported as super-algebraic
/// with exponent `+inf`.
pub fn decay_exponent(ns: &[f64], values: &[f64], floor: f64) -> Result<DecayFit> {
    if ns.len() != values.len() {
        return Err(Error::DegenerateFit("length mismatch".into()));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut hit_floor = false;
    for (&n, &v) in ns.iter().zip(values) {
        if v.abs() > floor && n > 0.0 {
            x.push(n.ln());
            y.push(v.abs().ln());
        } else {
            hit_floor = true;
        }
    }
    if hit_floor {
        let pre_floor = if x.len() >= 3 { Some(-fit_line(&x, &y)?.slope) } else { None };
        return Ok(DecayFit {
            exponent: f64::INFINITY,
            superalgebraic: true,
            pre_floor_exponent: pre_floor,
            points_used: x.len(),
        });
    }
    let fit = fit_line(&x, &y)?;
    Ok(DecayFit {
        exponent: -fit.slope,
        superalgebraic: false,
        pre_floor_exponent: None,
        points_used: x.len(),
    })
}

/// `n` log-spaced integers (deduplicated) in `[lo, hi]`.
pub fn log_spaced(lo: usize, hi: usize, n: usize) -> Vec<usize> {
    let lo = lo.max(1);
    if n < 2 || hi <= lo {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp().round() as usize)
        .collect();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14);
        assert!((f.intercept - 2.0).abs() < 1e-14);
        assert!(f.rms < 1e-14);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_line(&[1.0], &[1.0]).is_err());
        assert!(fit_line(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn power_law_exponent() {
        let ns: Vec<f64> = (1..50).map(|i| (i * 10) as f64).collect();
        let v: Vec<f64> = ns.iter().map(|n| 3.0 * n.powf(-0.75)).collect();
        let f = decay_exponent(&ns, &v, NOISE_FLOOR).unwrap();
        assert!((f.exponent - 0.75).abs() < 1e-12);
        assert!(!f.superalgebraic);
    }

    #[test]
    fn floor_means_superalgebraic() {
        let ns: Vec<f64> = (1..20).map(|i| (i * 10) as f64).collect();
        let v: Vec<f64> = ns.iter().map(|n| (-n).exp()).collect();
        let f = decay_exponent(&ns, &v, NOISE_FLOOR).unwrap();
        assert!(f.superalgebraic);
        assert_eq!(f.exponent, f64::INFINITY);
        assert!(f.pre_floor_exponent.unwrap() > 1.0);
    }

    #[test]
    fn log_spacing() {
        let v = log_spaced(100, 2000, 20);
        assert_eq!(v[0], 100);
        assert_eq!(*v.last().unwrap(), 2000);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }
}
