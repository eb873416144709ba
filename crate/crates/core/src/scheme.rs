//! Conservative one-step explicit schemes
//! `(N u)_j = u_j - nu (F(u_{j-p+1..j+q}) - F(u_{j-p..j+q-1}))`
//! and the modified Lax-Friedrichs instance used for Burgers shocks.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result, SeqIndex};
use crate::seq::TailedSeq;

/// Margin by which user state bounds are shrunk to form the admissible interval.
pub const STATE_MARGIN: f64 = 1e-9;

/// Default number of sampled states for consistency and CFL checks.
pub const DEFAULT_SAMPLES: usize = 1001;

pub type Flux = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Numerical flux `F(nu; u_{-p}, ..., u_{q-1})`.
pub type NumFlux = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct SchemeSpec {
    p: usize,
    q: usize,
    nu: f64,
    flux: Flux,
    flux_derivative: Flux,
    numerical_flux: NumFlux,
    state_lo: f64,
    state_hi: f64,
    name: String,
}

impl fmt::Debug for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SchemeSpec")
            .field("name", &self.name)
            .field("p", &self.p)
            .field("q", &self.q)
            .field("nu", &self.nu)
            .field("state_lo", &self.state_lo)
            .field("state_hi", &self.state_hi)
            .finish()
    }
}

impl SchemeSpec {
    /// `state_lo`/`state_hi` are the user bounds; the stored interval is shrunk by [`STATE_MARGIN`].
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        p: usize,
        q: usize,
        nu: f64,
        flux: Flux,
        flux_derivative: Flux,
        numerical_flux: NumFlux,
        state_lo: f64,
        state_hi: f64,
    ) -> Result<Self> {
        if p < 1 || q < 1 {
            return Err(Error::InvalidParameter {
                name: "stencil",
                reason: format!("p and q must be at least 1, got ({p}, {q})"),
            });
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "nu",
                reason: format!("must be positive, got {nu}"),
            });
        }
        let (lo, hi) = (state_lo + STATE_MARGIN, state_hi - STATE_MARGIN);
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter {
                name: "state bounds",
                reason: format!("need state_lo < state_hi, got ({state_lo}, {state_hi})"),
            });
        }
        Ok(Self {
            p,
            q,
            nu,
            flux,
            flux_derivative,
            numerical_flux,
            state_lo: lo,
            state_hi: hi,
            name: name.into(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn p(&self) -> usize {
        self.p
    }
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    /// Admissible closed interval (already shrunk).
    pub fn bounds(&self) -> (f64, f64) {
        (self.state_lo, self.state_hi)
    }

    pub fn f(&self, u: f64) -> f64 {
        (self.flux)(u)
    }

    pub fn f_prime(&self, u: f64) -> f64 {
        (self.flux_derivative)(u)
    }

    /// `F(nu; states)` with `states.len() == p + q`.
    pub fn num_flux(&self, states: &[f64]) -> f64 {
        debug_assert_eq!(states.len(), self.p + self.q);
        (self.numerical_flux)(self.nu, states)
    }

    pub fn contains(&self, u: f64) -> bool {
        u >= self.state_lo && u <= self.state_hi
    }

    fn check_state(&self, index: SeqIndex, u: f64) -> Result<()> {
        if self.contains(u) {
            Ok(())
        } else {
            Err(Error::StateEscaped {
                index,
                value: u,
                lo: self.state_lo,
                hi: self.state_hi,
            })
        }
    }

    /// Rejects any sequence with an entry or a tail outside the admissible interval.
    pub fn check_seq(&self, u: &TailedSeq) -> Result<()> {
        self.check_state(SeqIndex::LeftTail, u.left_tail())?;
        self.check_state(SeqIndex::RightTail, u.right_tail())?;
        for (j, v) in u.iter() {
            self.check_state(SeqIndex::At(j), v)?;
        }
        Ok(())
    }

    fn samples(&self, n: usize) -> Vec<f64> {
        let n = n.max(2);
        let (lo, hi) = self.bounds();
        (0..n)
            .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect()
    }
}

/// Burgers flux `u^2/2` and its derivative.
pub fn burgers() -> (Flux, Flux) {
    (Arc::new(|u: f64| 0.5 * u * u), Arc::new(|u: f64| u))
}

/// Modified Lax-Friedrichs scheme `F(u_{-1}, u_0) = (f(u_{-1}) + f(u_0))/2 + D (u_{-1} - u_0)`.
pub fn make_mlf(nu: f64, d: f64, flux: Flux, flux_derivative: Flux, state_lo: f64, state_hi: f64) -> Result<SchemeSpec> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "D",
            reason: format!("must be positive, got {d}"),
        });
    }
    let f = flux.clone();
    let numerical_flux: NumFlux = Arc::new(move |_nu, s: &[f64]| 0.5 * (f(s[0]) + f(s[1])) + d * (s[0] - s[1]));
    SchemeSpec::new("mlf", 1, 1, nu, flux, flux_derivative, numerical_flux, state_lo, state_hi)
}

/// Reference Burgers scheme with `nu = 0.5`, `D = 0.8` on `(-1.5, 1.5)`.
pub fn reference_mlf() -> SchemeSpec {
    let (f, fp) = burgers();
    make_mlf(0.5, 0.8, f, fp, -1.5, 1.5).expect("valid reference parameters")
}

/// One step of the scheme. Tails are carried over unchanged.
pub fn evolve(s: &SchemeSpec, u: &TailedSeq) -> Result<TailedSeq> {
    s.check_seq(u)?;
    let Some((lo, hi)) = u.window() else {
        return Ok(u.clone());
    };
    let (p, q) = (s.p as i64, s.q as i64);
    let out_lo = lo - q;
    let out_hi = hi + p;
    // interface fluxes G_j = F(u_{j-p..j+q-1}) for j in out_lo..=out_hi+1
    let base = out_lo - p;
    let dense = u.dense(base, out_hi + q);
    let width = s.p + s.q;
    let n_if = (out_hi + 1 - out_lo + 1) as usize;
    let g: Vec<f64> = (0..n_if).map(|i| s.num_flux(&dense[i..i + width])).collect();
    let nu = s.nu;
    let values = (0..(out_hi - out_lo + 1) as usize)
        .map(|i| dense[i + s.p] - nu * (g[i + 1] - g[i]))
        .collect();
    Ok(TailedSeq::from_parts(out_lo, values, u.left_tail(), u.right_tail()).canonicalize())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub max_residual: f64,
    pub worst_state: f64,
    pub pass: bool,
}

/// `max |F(nu; u, ..., u) - f(u)|` over sampled admissible states.
pub fn check_consistency(s: &SchemeSpec, n_samples: usize) -> ConsistencyReport {
    let mut buf = vec![0.0; s.p + s.q];
    let mut max_residual = 0.0;
    let mut worst_state = s.state_lo;
    for u in s.samples(n_samples) {
        buf.fill(u);
        let r = (s.num_flux(&buf) - s.f(u)).abs();
        if r > max_residual || r.is_nan() {
            max_residual = r;
            worst_state = u;
        }
    }
    ConsistencyReport {
        max_residual,
        worst_state,
        pass: max_residual <= 1e-12,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CflReport {
    pub min_speed: f64,
    pub max_speed: f64,
    pub pass: bool,
}

/// Checks `-q < nu f'(u) < p` on sampled admissible states.
pub fn check_cfl(s: &SchemeSpec, n_samples: usize) -> CflReport {
    let speeds: Vec<f64> = s.samples(n_samples).into_iter().map(|u| s.nu * s.f_prime(u)).collect();
    let min_speed = speeds.iter().copied().fold(f64::INFINITY, f64::min);
    let max_speed = speeds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    CflReport {
        min_speed,
        max_speed,
        pass: -(s.q as f64) < min_speed && max_speed < s.p as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockPair {
    pub u_minus: f64,
    pub u_plus: f64,
    /// `f(u-) - f(u+)`
    pub rh_residual: f64,
    /// `f'(u+) < 0 < f'(u-)`
    pub lax_ok: bool,
}

pub fn shock_pair(s: &SchemeSpec, u_minus: f64, u_plus: f64) -> Result<ShockPair> {
    s.check_state(SeqIndex::LeftTail, u_minus)?;
    s.check_state(SeqIndex::RightTail, u_plus)?;
    Ok(ShockPair {
        u_minus,
        u_plus,
        rh_residual: s.f(u_minus) - s.f(u_plus),
        lax_ok: s.f_prime(u_plus) < 0.0 && 0.0 < s.f_prime(u_minus),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq::mass;
    use proptest::prelude::*;

    #[test]
    fn reference_parameters_are_admissible() {
        let s = reference_mlf();
        let d = 0.8;
        assert!(s.nu() < 2.0 * d * s.nu() && 2.0 * d * s.nu() < 1.0);
        assert!(check_consistency(&s, DEFAULT_SAMPLES).pass);
        let cfl = check_cfl(&s, DEFAULT_SAMPLES);
        assert!(cfl.pass);
        assert!((cfl.max_speed - 0.75).abs() < 1e-8);
    }

    #[test]
    fn consistency_exact_for_mlf() {
        assert_eq!(check_consistency(&reference_mlf(), DEFAULT_SAMPLES).max_residual, 0.0);
    }

    #[test]
    fn broken_flux_detected() {
        let (f, fp) = burgers();
        let f2 = f.clone();
        let broken: NumFlux = Arc::new(move |_, s: &[f64]| 0.5 * (f2(s[0]) + f2(s[1])) + 0.8 * (s[0] - s[1]) + 0.01);
        let s = SchemeSpec::new("broken", 1, 1, 0.5, f, fp, broken, -1.5, 1.5).unwrap();
        let r = check_consistency(&s, 101);
        assert!(!r.pass);
        assert!((r.max_residual - 0.01).abs() < 1e-14);
    }

    #[test]
    fn lax_friedrichs_coefficient_is_consistent() {
        let (f, fp) = burgers();
        let nu = 0.4;
        let s = make_mlf(nu, 1.0 / (2.0 * nu), f, fp, -1.0, 1.0).unwrap();
        assert!(check_consistency(&s, 257).pass);
    }

    #[test]
    fn cfl_cases() {
        let (f, fp) = burgers();
        let s = make_mlf(3.0, 0.1, f, fp, -1.5, 1.5).unwrap();
        assert!(!check_cfl(&s, DEFAULT_SAMPLES).pass);
        let zero: Flux = Arc::new(|_| 0.0);
        let s = make_mlf(50.0, 0.001, zero.clone(), zero, -1.5, 1.5).unwrap();
        assert!(check_cfl(&s, DEFAULT_SAMPLES).pass);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let (f, fp) = burgers();
        assert!(make_mlf(-1.0, 0.8, f.clone(), fp.clone(), -1.5, 1.5).is_err());
        assert!(make_mlf(0.5, 0.0, f, fp, -1.5, 1.5).is_err());
    }

    #[test]
    fn shock_pairs() {
        let s = reference_mlf();
        let sp = shock_pair(&s, 1.0, -1.0).unwrap();
        assert_eq!(sp.rh_residual, 0.0);
        assert!(sp.lax_ok);
        let sp = shock_pair(&s, 1.0, 0.5).unwrap();
        assert!((sp.rh_residual - 0.375).abs() < 1e-15);
        assert!(!sp.lax_ok);
        let sp = shock_pair(&s, 0.3, 0.3).unwrap();
        assert_eq!(sp.rh_residual, 0.0);
        assert!(!sp.lax_ok);
        assert!(shock_pair(&s, 2.0, -1.0).is_err());
    }

    #[test]
    fn hand_step() {
        let s = reference_mlf();
        let u = TailedSeq::new(0, vec![0.0], 1.0, -1.0).unwrap();
        let v = evolve(&s, &u).unwrap();
        // F(1,0) = 0.25 + 0.8 = 1.05, F(1,1) = 0.5 -> 1 - 0.5 (1.05 - 0.5)
        assert!((v.get(-1) - 0.725).abs() < 1e-15);
        assert!((v.get(1) + 0.725).abs() < 1e-15);
        // F(0,-1) = 0.25 + 0.8 = 1.05 on both interfaces of j = 0
        assert!(v.get(0).abs() < 1e-15);
    }

    #[test]
    fn constants_fixed() {
        let s = reference_mlf();
        let c = TailedSeq::constant(0.3);
        assert_eq!(evolve(&s, &c).unwrap(), c);
        let c = TailedSeq::new(-3, vec![0.3; 7], 0.3, 0.3).unwrap();
        assert_eq!(evolve(&s, &c).unwrap(), TailedSeq::constant(0.3));
    }

    #[test]
    fn escape_reported() {
        let s = reference_mlf();
        let u = TailedSeq::new(0, vec![1.6], 1.0, -1.0).unwrap();
        match evolve(&s, &u) {
            Err(Error::StateEscaped { index, .. }) => assert_eq!(index, SeqIndex::At(0)),
            other => panic!("unexpected {other:?}"),
        }
        let edge = TailedSeq::constant(1.5);
        assert!(evolve(&s, &edge).is_err());
    }

    proptest! {
        #[test]
        fn mass_and_finite_speed(vals in prop::collection::vec(-0.2f64..0.2, 1..20), off in -10i64..10) {
            let s = reference_mlf();
            let base = TailedSeq::new(0, vec![0.0], 1.0, -1.0).unwrap();
            let h = TailedSeq::compact(off, vals).unwrap();
            let u = base.add(&h);
            let v = evolve(&s, &u).unwrap();
            let nb = evolve(&s, &base).unwrap();
            let before = mass(&u.sub(&base)).unwrap();
            let after = mass(&v.sub(&nb)).unwrap();
            prop_assert!((before - after).abs() < 1e-12);
            let (lo, hi) = u.window().unwrap();
            let (vlo, vhi) = v.window().unwrap();
            prop_assert!(vlo >= lo - 1 && vhi <= hi + 1);
        }
    }
}
