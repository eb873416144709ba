//! Decay-rate conditions, parameter presets and the weighted-norm decay
//! experiment on zero-mass perturbations of a discrete shock profile.

pub mod bounds;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::profile::{identify_delta, ProfileFamily};
use crate::scheme::{evolve, SchemeSpec};
use crate::seq::{mass, weighted_norm, TailedSeq, WeightedNormSpec};

/// Tolerance used for the equality and inequality tests of condition (H).
const H_TOL: f64 = 1e-12;

/// Condition (H) on a triplet `(a, b, c)` of non-negative reals.
pub fn cond_h(a: f64, b: f64, c: f64) -> Result<bool> {
    if !(a >= 0.0 && b >= 0.0 && c >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "triplet",
            reason: format!("entries must be non-negative, got ({a}, {b}, {c})"),
        });
    }
    let d = b - c;
    Ok(if (a - 1.0).abs() <= H_TOL {
        d > H_TOL
    } else if a < 1.0 {
        1.0 - a <= d + H_TOL
    } else {
        d >= -H_TOL
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayParams {
    pub gamma1: f64,
    pub gamma_inf: f64,
    pub p1: f64,
    pub p_inf: f64,
    pub mu: u32,
    /// Weight of the space in which perturbations are measured.
    pub big_gamma: f64,
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
    pub c4: bool,
}

impl DecayParams {
    pub fn new(gamma1: f64, gamma_inf: f64, p1: f64, p_inf: f64, mu: u32) -> Result<Self> {
        for (name, v) in [("gamma1", gamma1), ("gamma_inf", gamma_inf), ("p1", p1), ("p_inf", p_inf)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and non-negative, got {v}"),
                });
            }
        }
        if mu == 0 {
            return Err(Error::InvalidParameter {
                name: "mu",
                reason: "must be positive".into(),
            });
        }
        let dp = Self {
            gamma1,
            gamma_inf,
            p1,
            p_inf,
            mu,
            big_gamma: 0.0,
            c1: false,
            c2: false,
            c3: false,
            c4: false,
        };
        Ok(check_conditions(&dp))
    }

    pub fn all_conditions(&self) -> bool {
        self.c1 && self.c2 && self.c3 && self.c4
    }
}

/// `max(p1 + gamma1, p_inf + gamma_inf - 1/2mu, p_inf, gamma_inf)`.
pub fn gamma_of(dp: &DecayParams) -> f64 {
    let h = 1.0 / (2.0 * dp.mu as f64);
    (dp.p1 + dp.gamma1)
        .max(dp.p_inf + dp.gamma_inf - h)
        .max(dp.p_inf)
        .max(dp.gamma_inf)
}

/// Recomputes `big_gamma` and the four condition flags.
pub fn check_conditions(dp: &DecayParams) -> DecayParams {
    let h = 1.0 / (2.0 * dp.mu as f64);
    let m = dp.gamma_inf.min(h);
    let ch = |a: f64, b: f64, c: f64| cond_h(a, b, c).unwrap_or(false);
    let (g1, gi, p1, pi) = (dp.gamma1, dp.gamma_inf, dp.p1, dp.p_inf);
    DecayParams {
        big_gamma: gamma_of(dp),
        c1: ch(p1 + pi, gi + h, p1),
        c2: ch(gi + h, p1 + pi, p1),
        c3: ch(p1 + pi, g1 + h + m, pi) || ch(2.0 * pi, gi + m, pi),
        c4: ch(g1 + h + m, p1 + pi, pi) || ch(gi + m, 2.0 * pi, pi),
        ..*dp
    }
}

/// The two parameter families, with their validity constraints on `p`.
pub fn preset(choice: u32, p: f64, mu: u32) -> Result<DecayParams> {
    if mu == 0 {
        return Err(Error::InvalidParameter {
            name: "mu",
            reason: "must be positive".into(),
        });
    }
    let h = 1.0 / (2.0 * mu as f64);
    let floor = 0.5 * (1.0 - 1.0 / mu as f64);
    match choice {
        1 => {
            let ok = if mu == 1 { p > floor } else { p >= floor };
            if !ok {
                return Err(Error::Precondition(format!(
                    "choice 1 needs p {} {floor} for mu = {mu}, got p = {p}",
                    if mu == 1 { ">" } else { ">=" }
                )));
            }
            DecayParams::new(p, p + h, p, p, mu)
        }
        2 => {
            let lb = floor.max(h);
            if !(p >= lb) {
                return Err(Error::Precondition(format!(
                    "choice 2 needs p >= {lb} for mu = {mu}, got p = {p}"
                )));
            }
            DecayParams::new(p, p, p, p + h, mu)
        }
        _ => Err(Error::InvalidParameter {
            name: "choice",
            reason: format!("must be 1 or 2, got {choice}"),
        }),
    }
}

/// `-1/(1+(1+J)^Gamma)` at `j = 0` and `+1/(1+(1+J)^Gamma)` at `j = J`.
pub fn make_hj(j: usize, big_gamma: f64) -> Result<TailedSeq> {
    if j < 1 {
        return Err(Error::InvalidParameter {
            name: "J",
            reason: "must be at least 1".into(),
        });
    }
    let a = 1.0 / (1.0 + (1.0 + j as f64).powf(big_gamma));
    TailedSeq::from_sparse(&[(0, -a), (j as i64, a)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub j_list: Vec<usize>,
    pub n_max: usize,
    /// Inclusive range of `n` used by the log-log regression.
    pub reg_window: (usize, usize),
    /// Refuse to run when one of the conditions fails.
    pub require_conditions: bool,
}

impl ExperimentConfig {
    /// `J = 1..=j_max`, regression on `[ceil(j_max/10), min(j_max, n_max)]`.
    pub fn new(j_max: usize, n_max: usize) -> Self {
        Self {
            j_list: (1..=j_max).collect(),
            n_max,
            reg_window: default_reg_window(j_max, n_max),
            require_conditions: true,
        }
    }
}

pub fn default_reg_window(j_max: usize, n_max: usize) -> (usize, usize) {
    (j_max.div_ceil(10).max(1), j_max.min(n_max).max(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The envelope is not finite on the regression window (e.g. a zero perturbation).
    Degenerate,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeResult {
    pub fitted: Option<f64>,
    pub target: f64,
    pub slack: f64,
    pub verdict: Verdict,
}

/// Allowed overshoot of the fitted l1 slope over its target.
pub const SLACK_L1: f64 = 0.1;
/// Allowed overshoot of the fitted sup slope over its target.
pub const SLACK_LINF: f64 = 0.15;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub label: usize,
    pub delta: f64,
    /// `||h||_{l1_Gamma}` of the initial perturbation.
    pub h_norm: f64,
    /// `(||h^n||_{l1_gamma1}, ||h^n||_{linf_gamma_inf})` for `n = 0..=n_max`.
    pub norms: Vec<(f64, f64)>,
    /// Largest `|mass(u^n - u) - mass(h)| / ((1+n) ||h||_1)`.
    pub mass_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub params: DecayParams,
    pub config: ExperimentConfig,
    pub trajectories: Vec<Trajectory>,
    /// `sup_J log(||h^n_J|| / ||h_J||_{l1_Gamma})` for `n = 0..=n_max`.
    pub envelope_l1: Vec<f64>,
    pub envelope_linf: Vec<f64>,
    pub slope_l1: SlopeResult,
    pub slope_linf: SlopeResult,
    pub max_mass_drift: f64,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.slope_l1.verdict == Verdict::Pass && self.slope_linf.verdict == Verdict::Pass
    }
}

fn march(
    s: &SchemeSpec,
    fam: &ProfileFamily,
    dp: &DecayParams,
    label: usize,
    h: &TailedSeq,
    n_max: usize,
) -> Result<Trajectory> {
    if h.sup_abs() == 0.0 {
        // the profile is stationary, so the trajectory is the profile itself
        return Ok(Trajectory {
            label,
            delta: 0.0,
            h_norm: 0.0,
            norms: vec![(0.0, 0.0); n_max + 1],
            mass_drift: 0.0,
        });
    }
    let ubar = &fam.reference().seq;
    let delta = identify_delta(fam, h)?;
    let target = if delta == 0.0 {
        ubar.clone()
    } else {
        fam.member_or_solve(delta)?.seq
    };
    let h_norm = weighted_norm(h, WeightedNormSpec::l1(dp.big_gamma))?;
    let h_mass = mass(h)?;
    let h_l1 = weighted_norm(h, WeightedNormSpec::l1(0.0))?;
    let n1 = WeightedNormSpec::l1(dp.gamma1);
    let ni = WeightedNormSpec::linf(dp.gamma_inf);
    let mut u = ubar.add(h);
    let mut norms = Vec::with_capacity(n_max + 1);
    let mut mass_drift: f64 = 0.0;
    for n in 0..=n_max {
        if n > 0 {
            u = evolve(s, &u)?;
        }
        let hn = u.sub(&target);
        norms.push((weighted_norm(&hn, n1)?, weighted_norm(&hn, ni)?));
        let drift = (mass(&u.sub(ubar))? - h_mass).abs();
        if h_l1 > 0.0 {
            mass_drift = mass_drift.max(drift / ((1.0 + n as f64) * h_l1));
        } else if drift > 0.0 {
            mass_drift = f64::INFINITY;
        }
    }
    Ok(Trajectory {
        label,
        delta,
        h_norm,
        norms,
        mass_drift,
    })
}

fn log_ratio(norm: f64, h_norm: f64) -> f64 {
    if norm == 0.0 || h_norm == 0.0 {
        f64::NEG_INFINITY
    } else {
        (norm / h_norm).ln()
    }
}

fn slope_on(env: &[f64], window: (usize, usize), target: f64, slack: f64) -> SlopeResult {
    let (lo, hi) = (window.0.max(1), window.1.min(env.len().saturating_sub(1)));
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut finite = hi > lo;
    for (n, &e) in env.iter().enumerate().take(hi + 1).skip(lo) {
        if !e.is_finite() {
            finite = false;
            break;
        }
        x.push((n as f64).ln());
        y.push(e);
    }
    let fitted = if finite { fit_line(&x, &y).ok().map(|f| f.slope) } else { None };
    let verdict = match fitted {
        None => Verdict::Degenerate,
        Some(s) if s <= target + slack => Verdict::Pass,
        Some(_) => Verdict::Fail,
    };
    SlopeResult {
        fitted,
        target,
        slack,
        verdict,
    }
}

/// Runs the experiment on an arbitrary labelled family of perturbations.
pub fn run_experiment_with(
    s: &SchemeSpec,
    fam: &ProfileFamily,
    dp: &DecayParams,
    perturbations: &[(usize, TailedSeq)],
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    let dp = check_conditions(dp);
    if cfg.require_conditions && !dp.all_conditions() {
        return Err(Error::Precondition(format!(
            "conditions not satisfied: C1={} C2={} C3={} C4={}",
            dp.c1, dp.c2, dp.c3, dp.c4
        )));
    }
    if cfg.n_max < 2 {
        return Err(Error::InvalidParameter {
            name: "n_max",
            reason: "must be at least 2".into(),
        });
    }
    #[cfg(feature = "parallel")]
    let runs: Vec<Result<Trajectory>> = perturbations
        .par_iter()
        .map(|(l, h)| march(s, fam, &dp, *l, h, cfg.n_max))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<Result<Trajectory>> = perturbations
        .iter()
        .map(|(l, h)| march(s, fam, &dp, *l, h, cfg.n_max))
        .collect();
    let trajectories = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let mut envelope_l1 = vec![f64::NEG_INFINITY; cfg.n_max + 1];
    let mut envelope_linf = vec![f64::NEG_INFINITY; cfg.n_max + 1];
    for t in &trajectories {
        for (n, &(a, b)) in t.norms.iter().enumerate() {
            envelope_l1[n] = envelope_l1[n].max(log_ratio(a, t.h_norm));
            envelope_linf[n] = envelope_linf[n].max(log_ratio(b, t.h_norm));
        }
    }
    let max_mass_drift = trajectories.iter().map(|t| t.mass_drift).fold(0.0, f64::max);
    Ok(ExperimentReport {
        slope_l1: slope_on(&envelope_l1, cfg.reg_window, -dp.p1, SLACK_L1),
        slope_linf: slope_on(&envelope_linf, cfg.reg_window, -dp.p_inf, SLACK_LINF),
        params: dp,
        config: cfg.clone(),
        trajectories,
        envelope_l1,
        envelope_linf,
        max_mass_drift,
    })
}

/// The experiment on the family `h_J`, `J` in `cfg.j_list`.
pub fn run_experiment(s: &SchemeSpec, fam: &ProfileFamily, dp: &DecayParams, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let dp = check_conditions(dp);
    let hs = cfg
        .j_list
        .iter()
        .map(|&j| Ok((j, make_hj(j, dp.big_gamma)?)))
        .collect::<Result<Vec<_>>>()?;
    run_experiment_with(s, fam, &dp, &hs, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{default_delta_grid, SolveOptions};
    use crate::scheme::{reference_mlf, shock_pair};
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn family() -> &'static ProfileFamily {
        static F: OnceLock<ProfileFamily> = OnceLock::new();
        F.get_or_init(|| {
            let s = reference_mlf();
            let sh = shock_pair(&s, 1.0, -1.0).unwrap();
            ProfileFamily::solve(&s, &sh, &default_delta_grid(), &SolveOptions::default()).unwrap()
        })
    }

    #[test]
    fn cond_h_examples() {
        assert!(cond_h(2.0, 1.5, 1.0).unwrap());
        assert!(!cond_h(1.0, 1.0, 1.0).unwrap());
        assert!(cond_h(0.5, 1.0, 0.5).unwrap());
        assert!(cond_h(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn presets_satisfy_conditions() {
        let d = preset(1, 1.0, 1).unwrap();
        assert_eq!((d.gamma1, d.gamma_inf, d.p1, d.p_inf), (1.0, 1.5, 1.0, 1.0));
        assert!(d.all_conditions());
        assert_eq!(d.big_gamma, 2.0);
        let d = preset(2, 1.0, 1).unwrap();
        assert_eq!((d.gamma1, d.gamma_inf, d.p1, d.p_inf), (1.0, 1.0, 1.0, 1.5));
        assert!(d.all_conditions());
        assert_eq!(d.big_gamma, 2.0);
        let d = preset(1, 0.3, 1).unwrap();
        assert!(d.all_conditions());
        assert!(preset(2, 0.3, 1).is_err());
        assert!(preset(1, 0.0, 1).is_err());
        assert!(preset(1, 0.0, 2).is_err());
        assert!(preset(1, 0.25, 2).is_ok());
    }

    #[test]
    fn zero_params() {
        let d = DecayParams::new(0.0, 0.0, 0.0, 0.0, 1).unwrap();
        assert!(!d.c1);
        assert_eq!(d.big_gamma, 0.0);
    }

    #[test]
    fn hj_examples() {
        let h = make_hj(1, 0.0).unwrap();
        assert_eq!(h.get(0), -0.5);
        assert_eq!(h.get(1), 0.5);
        let h = make_hj(10, 2.0).unwrap();
        assert!((h.get(10) - 1.0 / 122.0).abs() < 1e-17);
        assert!(make_hj(0, 1.0).is_err());
    }

    #[test]
    fn zero_perturbation_is_degenerate() {
        let s = reference_mlf();
        let dp = preset(1, 1.0, 1).unwrap();
        let cfg = ExperimentConfig::new(1, 20);
        let r = run_experiment_with(&s, family(), &dp, &[(1, TailedSeq::zero())], &cfg).unwrap();
        assert!(r.trajectories[0].norms.iter().all(|n| n.0 == 0.0 && n.1 == 0.0));
        assert_eq!(r.slope_l1.verdict, Verdict::Degenerate);
        assert_eq!(r.slope_linf.verdict, Verdict::Degenerate);
    }

    #[test]
    fn envelope_grows_with_j_list() {
        let s = reference_mlf();
        let dp = preset(1, 0.5, 1).unwrap();
        let small = run_experiment(&s, family(), &dp, &ExperimentConfig::new(4, 60)).unwrap();
        let mut cfg = ExperimentConfig::new(8, 60);
        cfg.reg_window = small.config.reg_window;
        let big = run_experiment(&s, family(), &dp, &cfg).unwrap();
        for n in 0..=60 {
            assert!(big.envelope_l1[n] >= small.envelope_l1[n]);
            assert!(big.envelope_linf[n] >= small.envelope_linf[n]);
        }
        assert!(big.max_mass_drift <= 1e-10);
    }

    #[test]
    fn zero_mass_perturbation_decays() {
        let s = reference_mlf();
        let dp = preset(1, 1.0, 1).unwrap();
        let cfg = ExperimentConfig::new(1, 128);
        let r = run_experiment_with(&s, family(), &dp, &[(7, make_hj(7, 2.0).unwrap())], &cfg).unwrap();
        let sup: Vec<f64> = [8, 16, 32, 64, 128].iter().map(|&n| r.trajectories[0].norms[n].1).collect();
        assert!(sup.windows(2).all(|w| w[1] < w[0]), "{sup:?}");
        assert!(sup[4] < 1e-8 * sup[0], "{sup:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn gamma_is_max(g1 in 0.0f64..3.0, gi in 0.0f64..3.0, p1 in 0.0f64..3.0, pi in 0.0f64..3.0, mu in 1u32..4) {
            let d = DecayParams::new(g1, gi, p1, pi, mu).unwrap();
            prop_assert!(d.big_gamma >= p1 + g1 && d.big_gamma >= pi && d.big_gamma >= gi);
            let h = 1.0 / (2.0 * mu as f64);
            prop_assert!(d.big_gamma >= pi + gi - h);
        }

        #[test]
        fn hj_normalized(j in 1usize..500, g in 0.0f64..4.0) {
            let h = make_hj(j, g).unwrap();
            prop_assert_eq!(mass(&h).unwrap(), 0.0);
            let n = weighted_norm(&h, WeightedNormSpec::l1(g)).unwrap();
            prop_assert!((n - 1.0).abs() < 1e-12);
        }
    }
}
