//! Generalized Gaussians `H_{2mu}(beta; x) = (1/2pi) int e^{ixu} e^{-beta u^{2mu}} du`
//! and their tail integrals `E_{2mu}(beta; x) = int_x^inf H_{2mu}(beta; y) dy`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::quad::integrate;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub mu: u32,
    pub beta: Complex64,
}

impl KernelSpec {
    pub fn new(mu: u32, beta: Complex64) -> Result<Self> {
        if mu == 0 {
            return Err(Error::InvalidParameter {
                name: "mu",
                reason: "must be a positive integer".into(),
            });
        }
        if !(beta.re > 0.0) || !beta.im.is_finite() {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: format!("real part must be positive, got {beta}"),
            });
        }
        Ok(Self { mu, beta })
    }

    pub fn real(mu: u32, beta: f64) -> Result<Self> {
        Self::new(mu, Complex64::new(beta, 0.0))
    }

    fn closed_form(&self) -> bool {
        self.mu == 1 && self.beta.im == 0.0
    }

    /// Upper limit where `exp(-Re(beta) u^{2mu})` drops below `1e-16`.
    fn cutoff(&self) -> f64 {
        (16.0 * 10f64.ln() / self.beta.re).powf(1.0 / (2 * self.mu) as f64)
    }

    fn weight(&self, u: f64) -> Complex64 {
        (-self.beta * u.powi(2 * self.mu as i32)).exp()
    }
}

/// Internal absolute tolerance of every quadrature.
const QUAD_TOL: f64 = 1e-12;

fn panels(k: &KernelSpec, x: f64) -> (f64, usize) {
    let u = k.cutoff();
    (u, 8 + (u * x.abs() / PI).ceil() as usize)
}

fn complex_integral(k: &KernelSpec, x: f64, g: impl Fn(f64) -> f64) -> Result<Complex64> {
    let (u_max, n) = panels(k, x);
    let re = integrate(|u| g(u) * k.weight(u).re, 0.0, u_max, QUAD_TOL, n)?;
    let im = if k.beta.im == 0.0 {
        0.0
    } else {
        integrate(|u| g(u) * k.weight(u).im, 0.0, u_max, QUAD_TOL, n)?
    };
    Ok(Complex64::new(re, im))
}

/// `H_{2mu}` by quadrature of `(1/pi) int_0^U cos(xu) e^{-beta u^{2mu}} du`.
pub fn h2mu_quad(k: &KernelSpec, x: f64) -> Result<Complex64> {
    Ok(complex_integral(k, x, |u| (x * u).cos())? / PI)
}

/// `m`-th derivative of `H_{2mu}` in `x`, by differentiating under the integral.
pub fn h2mu_deriv_quad(k: &KernelSpec, m: u32, x: f64) -> Result<Complex64> {
    let trig = move |u: f64| {
        let t = x * u;
        let d = match m % 4 {
            0 => t.cos(),
            1 => -t.sin(),
            2 => -t.cos(),
            _ => t.sin(),
        };
        u.powi(m as i32) * d
    };
    Ok(complex_integral(k, x, trig)? / PI)
}

/// `E_{2mu}` by quadrature of `1/2 - (1/pi) int_0^U sin(xu)/u e^{-beta u^{2mu}} du`.
pub fn e2mu_quad(k: &KernelSpec, x: f64) -> Result<Complex64> {
    if x == 0.0 {
        return Ok(Complex64::new(0.5, 0.0));
    }
    let sinc = move |u: f64| if u == 0.0 { x } else { (x * u).sin() / u };
    Ok(Complex64::new(0.5, 0.0) - complex_integral(k, x, sinc)? / PI)
}

fn real_part(z: Complex64, k: &KernelSpec) -> Result<f64> {
    if k.beta.im == 0.0 && z.im.abs() >= 1e-10 {
        return Err(Error::Quadrature { estimate: z.im.abs() });
    }
    Ok(z.re)
}

/// `H_{2mu}(beta; x)`; closed form `exp(-x^2/(4 beta))/sqrt(4 pi beta)` for `mu = 1`, real `beta`.
pub fn h2mu(k: &KernelSpec, x: f64) -> Result<f64> {
    if k.closed_form() {
        let b = k.beta.re;
        return Ok((-x * x / (4.0 * b)).exp() / (4.0 * PI * b).sqrt());
    }
    real_part(h2mu_quad(k, x)?, k)
}

/// `E_{2mu}(beta; x)`; `erfc(x/(2 sqrt(beta)))/2` for `mu = 1`, real `beta`.
pub fn e2mu(k: &KernelSpec, x: f64) -> Result<f64> {
    if k.closed_form() {
        return Ok(0.5 * libm::erfc(x / (2.0 * k.beta.re.sqrt())));
    }
    real_part(e2mu_quad(k, x)?, k)
}

/// Quantity whose decay is checked by [`kernel_bound_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundTarget {
    /// `|d^m H / dx^m|` at `|x|`.
    HDerivative(u32),
    /// `|E(x)|` for `x > 0` and `|1 - E(-x)|`, which coincide by symmetry.
    ETail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelBoundReport {
    /// `2mu/(2mu-1)`.
    pub theta: f64,
    /// Fitted `c` and `C` of `C exp(-c |x|^theta)` on the running envelope.
    pub c: f64,
    pub prefactor: f64,
    /// Largest `log(envelope / fitted bound)` over the grid.
    pub max_excess: f64,
    /// Exponent that best fits the envelope when it is left free.
    pub fitted_theta: f64,
    pub points: usize,
    pub pass: bool,
}

/// Fits `|target(x)| <= C exp(-c |x|^{2mu/(2mu-1)})` on the positive part of the grid.
pub fn kernel_bound_check(k: &KernelSpec, target: BoundTarget, x_grid: &[f64]) -> Result<KernelBoundReport> {
    let mut xs: Vec<f64> = x_grid.iter().map(|x| x.abs()).filter(|x| *x > 0.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut ys = Vec::with_capacity(xs.len());
    for &x in &xs {
        let y = match target {
            BoundTarget::HDerivative(0) => h2mu(k, x)?.abs(),
            BoundTarget::HDerivative(m) => h2mu_deriv_quad(k, m, x)?.norm(),
            BoundTarget::ETail => e2mu(k, x)?.abs(),
        };
        ys.push(y);
    }
    // running envelope from the right, above the quadrature noise
    let mut env = vec![0.0; ys.len()];
    let mut run: f64 = 0.0;
    for i in (0..ys.len()).rev() {
        run = run.max(ys[i]);
        env[i] = run;
    }
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(&env)
        .filter(|(_, e)| **e > 1e-11)
        .map(|(x, e)| (*x, e.ln()))
        .collect();
    let theta = 2.0 * k.mu as f64 / (2.0 * k.mu as f64 - 1.0);
    if pts.len() < 4 {
        return Err(Error::DegenerateFit(format!("{} usable kernel samples", pts.len())));
    }
    let fit_for = |th: f64| {
        let x: Vec<f64> = pts.iter().map(|p| p.0.powf(th)).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        fit_line(&x, &y)
    };
    let f = fit_for(theta)?;
    let c = -f.slope;
    let max_excess = pts
        .iter()
        .map(|(x, ly)| ly - (f.intercept - c * x.powf(theta)))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut best = (theta, f.rms);
    let mut th = 1.0;
    while th <= 3.0 + 1e-12 {
        if let Ok(g) = fit_for(th) {
            if g.rms < best.1 {
                best = (th, g.rms);
            }
        }
        th += 0.005;
    }
    Ok(KernelBoundReport {
        theta,
        c,
        prefactor: f.intercept.exp(),
        max_excess,
        fitted_theta: best.0,
        points: pts.len(),
        pass: c > 0.0 && max_excess <= 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gaussian_peak() {
        let k = KernelSpec::real(1, 0.25).unwrap();
        assert!((h2mu(&k, 0.0).unwrap() - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert!((h2mu(&k, 0.0).unwrap() - 0.564_189_583_5).abs() < 1e-10);
    }

    #[test]
    fn quartic_peak_is_gamma_ratio() {
        // (1/pi) int_0^inf e^{-u^4} du = Gamma(5/4)/pi
        let k = KernelSpec::real(2, 1.0).unwrap();
        let expected = statrs::function::gamma::gamma(1.25) / PI;
        assert!((h2mu(&k, 0.0).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let k = KernelSpec::real(1, 0.275).unwrap();
        for i in -20..=20 {
            let x = i as f64;
            assert!((h2mu(&k, x).unwrap() - h2mu_quad(&k, x).unwrap().re).abs() < 1e-10);
            assert!((e2mu(&k, x).unwrap() - e2mu_quad(&k, x).unwrap().re).abs() < 1e-10);
        }
    }

    #[test]
    fn e_identities() {
        for k in [
            KernelSpec::real(1, 0.275).unwrap(),
            KernelSpec::real(2, 1.0).unwrap(),
            KernelSpec::real(3, 0.5).unwrap(),
        ] {
            assert!((e2mu(&k, 0.0).unwrap() - 0.5).abs() < 1e-10);
            for i in 0..=40 {
                let x = -10.0 + 0.5 * i as f64;
                let s = e2mu(&k, x).unwrap() + e2mu(&k, -x).unwrap();
                assert!((s - 1.0).abs() < 2e-10);
            }
        }
        let k = KernelSpec::real(1, 0.275).unwrap();
        assert!((e2mu(&k, -20.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complex_beta_supported() {
        let k = KernelSpec::new(1, Complex64::new(0.3, 0.1)).unwrap();
        let z = h2mu_quad(&k, 0.7).unwrap();
        // closed form with complex beta
        let b = k.beta;
        let exact = (-(0.7 * 0.7) / (4.0 * b)).exp() / (4.0 * PI * b).sqrt();
        assert!((z - exact).norm() < 1e-10);
    }

    #[test]
    fn invalid_kernel() {
        assert!(KernelSpec::real(1, 0.0).is_err());
        assert!(KernelSpec::real(0, 1.0).is_err());
    }

    #[test]
    fn gaussian_bound() {
        let k = KernelSpec::real(1, 0.275).unwrap();
        let xs: Vec<f64> = (1..=40).map(|i| 0.25 * i as f64).collect();
        let r = kernel_bound_check(&k, BoundTarget::HDerivative(0), &xs).unwrap();
        assert!(r.pass);
        assert_eq!(r.theta, 2.0);
        assert!((r.c - 1.0 / (4.0 * 0.275)).abs() < 1e-6);
        let r = kernel_bound_check(&k, BoundTarget::ETail, &xs).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn quartic_derivative_exponent() {
        let k = KernelSpec::real(2, 1.0).unwrap();
        let xs: Vec<f64> = (4..=60).map(|i| 0.25 * i as f64).collect();
        let r = kernel_bound_check(&k, BoundTarget::HDerivative(1), &xs).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.fitted_theta - 4.0 / 3.0).abs() < 0.2, "{r:?}");
    }

    proptest! {
        #[test]
        fn h_is_even(x in -15.0f64..15.0, mu in 1u32..4, b in 0.1f64..2.0) {
            let k = KernelSpec::real(mu, b).unwrap();
            prop_assert!((h2mu(&k, x).unwrap() - h2mu(&k, -x).unwrap()).abs() < 1e-12);
        }
    }
}
