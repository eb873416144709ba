//! The quadratic remainder of the scheme about a profile, the Duhamel
//! reconstruction of a nonlinear trajectory and brute-force checks of the
//! bounds that the stability argument relies on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cond_h;
use crate::error::{Error, Result};
use crate::linop::{apply, linearize, BandedOp};
use crate::profile::{Profile, ProfileFamily};
use crate::scheme::{evolve, SchemeSpec};
use crate::seq::{shift, weighted_norm, TailedSeq, WeightedNormSpec};

/// Seed shared by every randomized check.
pub const SEED: u64 = 0x5EED;

/// Distance from the profile (tails included) to the edge of the state space.
pub fn state_radius(s: &SchemeSpec, u: &TailedSeq) -> f64 {
    let (lo, hi) = s.bounds();
    u.values()
        .iter()
        .chain([u.left_tail(), u.right_tail()].iter())
        .map(|&x| (x - lo).min(hi - x))
        .fold(f64::INFINITY, f64::min)
}

/// `Q_j = nu F(u+h)_j - nu F(u)_j - sum_k b_{j,k} h_{j+k}`, with `F_j` the flux
/// through the interface between `j-1` and `j`, for a caller-supplied
/// linearization `op` of the scheme about `u`.
pub fn q_remainder_with(s: &SchemeSpec, u: &TailedSeq, op: &BandedOp, h: &TailedSeq) -> Result<TailedSeq> {
    if !h.is_compact() {
        return Err(Error::NonSummable { left: h.left_tail(), right: h.right_tail() });
    }
    let r = state_radius(s, u);
    let norm = h.sup_abs();
    if norm >= r {
        return Err(Error::PerturbationTooLarge { norm, radius: r });
    }
    let Some((hl, hh)) = h.window() else {
        return Ok(TailedSeq::zero());
    };
    let (p, q) = (s.p() as i64, s.q() as i64);
    let (lo, hi) = (hl - q + 1, hh + p);
    let w = s.p() + s.q();
    let base = lo - p;
    let ud = u.dense(base, hi + q - 1);
    let hd = h.dense(base, hi + q - 1);
    let uh: Vec<f64> = ud.iter().zip(&hd).map(|(a, b)| a + b).collect();
    let nu = s.nu();
    let values = (0..(hi - lo + 1) as usize)
        .map(|i| {
            let j = lo + i as i64;
            let lin: f64 = (-p..q).map(|k| op.b(j, k) * hd[i + (k + p) as usize]).sum();
            nu * (s.num_flux(&uh[i..i + w]) - s.num_flux(&ud[i..i + w])) - lin
        })
        .collect();
    Ok(TailedSeq::compact(lo, values)?.canonicalize())
}

/// Quadratic remainder about a converged profile.
pub fn q_remainder(s: &SchemeSpec, pr: &Profile, h: &TailedSeq) -> Result<TailedSeq> {
    let op = linearize(s, pr)?;
    q_remainder_with(s, &pr.seq, &op, h)
}

/// `(Id - T) Q` with `(T Q)_j = Q_{j+1}`.
fn flux_difference(q: &TailedSeq) -> TailedSeq {
    q.sub(&shift(q))
}

/// `sup |N(u+h) - u - L h - (Id-T) Q(h)|`.
pub fn identity_residual(s: &SchemeSpec, pr: &Profile, h: &TailedSeq) -> Result<f64> {
    let op = linearize(s, pr)?;
    identity_residual_with(s, &pr.seq, &op, h)
}

fn identity_residual_with(s: &SchemeSpec, u: &TailedSeq, op: &BandedOp, h: &TailedSeq) -> Result<f64> {
    let q = q_remainder_with(s, u, op, h)?;
    let lhs = evolve(s, &u.add(h))?;
    let rhs = u.add(&apply(op, h)).add(&flux_difference(&q));
    Ok(lhs.sub(&rhs).sup_abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct InqReport {
    pub trials: usize,
    /// Largest `||Q||_{l1_{g1+ginf}} / (||h||_{l1_g1} ||h||_{linf_ginf})`.
    pub max_ratio_l1: f64,
    /// Largest `||Q||_{linf_{2 ginf}} / ||h||^2_{linf_ginf}`.
    pub max_ratio_linf: f64,
    /// Largest identity residual seen over the trials.
    pub max_identity_residual: f64,
    /// `(eps, ratio_l1, ratio_linf)` for `eps h` with a fixed `h`.
    pub scaling: Vec<(f64, f64, f64)>,
    pub pass: bool,
}

const SUPPORT: i64 = 20;

fn random_h(rng: &mut ChaCha8Rng, amp: f64) -> Result<TailedSeq> {
    let values = (0..2 * SUPPORT + 1).map(|_| rng.gen_range(-amp..=amp)).collect();
    TailedSeq::compact(-SUPPORT, values)
}

fn inq_ratios(s: &SchemeSpec, u: &TailedSeq, op: &BandedOp, h: &TailedSeq, g1: f64, gi: f64) -> Result<(f64, f64)> {
    let q = q_remainder_with(s, u, op, h)?;
    let h1 = weighted_norm(h, WeightedNormSpec::l1(g1))?;
    let hi = weighted_norm(h, WeightedNormSpec::linf(gi))?;
    let r1 = weighted_norm(&q, WeightedNormSpec::l1(g1 + gi))? / (h1 * hi);
    let r2 = weighted_norm(&q, WeightedNormSpec::linf(2.0 * gi))? / (hi * hi);
    Ok((r1, r2))
}

/// Random-trial check that the weighted remainder ratios stay bounded.
///
/// Perturbations are supported on `[-20, 20]` with entries uniform in
/// `[-R/4, R/4]`. The pass flag also asks that the ratios along `eps h`
/// settle as `eps -> 0`.
pub fn check_inq_bounds(s: &SchemeSpec, pr: &Profile, gamma1: f64, gamma_inf: f64, trials: usize) -> Result<InqReport> {
    check_inq_bounds_seeded(s, pr, gamma1, gamma_inf, trials, SEED)
}

pub fn check_inq_bounds_seeded(
    s: &SchemeSpec,
    pr: &Profile,
    gamma1: f64,
    gamma_inf: f64,
    trials: usize,
    seed: u64,
) -> Result<InqReport> {
    if trials < 10 {
        return Err(Error::InvalidParameter {
            name: "trials",
            reason: format!("need at least 10, got {trials}"),
        });
    }
    let op = linearize(s, pr)?;
    let u = &pr.seq;
    let amp = state_radius(s, u) / 4.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut m1, mut m2, mut mres) = (0.0f64, 0.0f64, 0.0f64);
    let mut first = None;
    let mut done = 0;
    while done < trials {
        let h = random_h(&mut rng, amp)?;
        if h.sup_abs() == 0.0 {
            continue;
        }
        let (r1, r2) = inq_ratios(s, u, &op, &h, gamma1, gamma_inf)?;
        m1 = m1.max(r1);
        m2 = m2.max(r2);
        mres = mres.max(identity_residual_with(s, u, &op, &h)?);
        first.get_or_insert(h);
        done += 1;
    }
    let h = first.expect("at least one trial");
    let scaling = [1.0, 0.1, 0.01, 1e-3]
        .iter()
        .map(|&e| inq_ratios(s, u, &op, &h.scale(e), gamma1, gamma_inf).map(|(a, b)| (e, a, b)))
        .collect::<Result<Vec<_>>>()?;
    let settled = |a: f64, b: f64| (a - b).abs() <= 0.05 * a.abs().max(b.abs());
    let n = scaling.len();
    let stable = settled(scaling[n - 2].1, scaling[n - 1].1) && settled(scaling[n - 2].2, scaling[n - 1].2);
    Ok(InqReport {
        trials,
        max_ratio_l1: m1,
        max_ratio_linf: m2,
        max_identity_residual: mres,
        pass: m1.is_finite() && m2.is_finite() && stable,
        scaling,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsumReport {
    pub triplet: (f64, f64, f64),
    pub n_max: usize,
    /// `sup_{n <= n_max} (n+2)^c S(n)`.
    pub sup: f64,
    /// Running sup at `n_max / 10`.
    pub sup_decade: f64,
    /// `sup / sup_decade - 1`.
    pub growth: f64,
    pub pass: bool,
}

/// Relative growth of the running sup over the last decade that still counts as settled.
pub const INSUM_GROWTH_TOL: f64 = 1e-3;

/// `S(n) = sum_{m=0}^{floor((n+1)/2)} (m+1)^-a (n+1-m)^-b`, summed directly.
pub fn insum_bound_check(a: f64, b: f64, c: f64, n_max: usize) -> Result<InsumReport> {
    if !cond_h(a, b, c)? {
        return Err(Error::ConditionH { a, b, c });
    }
    if n_max < 10 {
        return Err(Error::InvalidParameter {
            name: "n_max",
            reason: "must be at least 10".into(),
        });
    }
    // pa[i] = (i+1)^-a, pb[i] = i^-b for i >= 1
    let pa: Vec<f64> = (0..=n_max + 1).map(|i| ((i + 1) as f64).powf(-a)).collect();
    let pb: Vec<f64> = (0..=n_max + 1).map(|i| if i == 0 { 0.0 } else { (i as f64).powf(-b) }).collect();
    let mut sup = 0.0f64;
    let mut sup_decade = 0.0;
    let decade = n_max / 10;
    for n in 0..=n_max {
        let s: f64 = (0..=n.div_ceil(2)).map(|m| pa[m] * pb[n + 1 - m]).sum();
        sup = sup.max(((n + 2) as f64).powf(c) * s);
        if n == decade {
            sup_decade = sup;
        }
    }
    let growth = sup / sup_decade - 1.0;
    Ok(InsumReport {
        triplet: (a, b, c),
        n_max,
        sup,
        sup_decade,
        growth,
        pass: sup.is_finite() && growth < INSUM_GROWTH_TOL,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DuhamelReport {
    pub delta: f64,
    pub n_check: usize,
    /// `sup |h^n_direct - h^n_reconstructed|`.
    pub residual: f64,
    /// Largest `sup |(L^delta - L) h^m|` over the stored steps.
    pub max_operator_term: f64,
}

/// Marches `u^0 = u^delta + h` with the scheme and rebuilds `h^n = u^n - u^delta`
/// from the linear propagator about the reference profile and the sources
/// `(L^delta - L) h^m + (Id - T) Q^delta(h^m)`, each pushed forward separately.
pub fn duhamel_check(
    s: &SchemeSpec,
    fam: &ProfileFamily,
    delta: f64,
    h: &TailedSeq,
    n_check: usize,
    half_width: i64,
) -> Result<DuhamelReport> {
    if n_check == 0 || n_check > 100 {
        return Err(Error::InvalidParameter {
            name: "n_check",
            reason: format!("must lie in 1..=100, got {n_check}"),
        });
    }
    let pr = fam.member_or_solve(delta)?;
    let ubar = &pr.seq;
    let op_delta = linearize(s, &pr)?;
    let op_ref = linearize(s, fam.reference())?;
    let check_window = |x: &TailedSeq| -> Result<()> {
        if let Some((lo, hi)) = x.window() {
            if lo < -half_width || hi > half_width {
                return Err(Error::WindowOverflow { lo, hi, half_width });
            }
        }
        Ok(())
    };
    let mut u = ubar.add(h);
    let mut hs = Vec::with_capacity(n_check + 1);
    hs.push(h.clone());
    for _ in 0..n_check {
        u = evolve(s, &u)?;
        let hn = u.sub(ubar);
        check_window(&hn)?;
        hs.push(hn);
    }
    let push = |x: &TailedSeq, steps: usize| (0..steps).fold(x.clone(), |acc, _| apply(&op_ref, &acc));
    let mut rebuilt = push(&hs[0], n_check);
    let mut max_operator_term = 0.0f64;
    for (m, hm) in hs.iter().enumerate().take(n_check) {
        let op_term = apply(&op_delta, hm).sub(&apply(&op_ref, hm));
        max_operator_term = max_operator_term.max(op_term.sup_abs());
        let src = op_term.add(&flux_difference(&q_remainder_with(s, ubar, &op_delta, hm)?));
        rebuilt = rebuilt.add(&push(&src, n_check - 1 - m));
    }
    Ok(DuhamelReport {
        delta,
        n_check,
        residual: hs[n_check].sub(&rebuilt).sup_abs(),
        max_operator_term,
    })
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
    fn zero_h_gives_zero_q() {
        let s = reference_mlf();
        let q = q_remainder(&s, family().reference(), &TailedSeq::zero()).unwrap();
        assert_eq!(q.sup_abs(), 0.0);
        let q = q_remainder(&s, family().reference(), &TailedSeq::compact(0, vec![0.0; 3]).unwrap()).unwrap();
        assert_eq!(q.sup_abs(), 0.0);
    }

    #[test]
    fn radius_and_large_h() {
        let s = reference_mlf();
        let pr = family().reference();
        let r = state_radius(&s, &pr.seq);
        assert!((r - 0.5).abs() < 1e-6, "{r}");
        let h = TailedSeq::dirac(0).scale(r);
        assert!(matches!(q_remainder(&s, pr, &h), Err(Error::PerturbationTooLarge { .. })));
    }

    #[test]
    fn remainder_is_quadratic() {
        let s = reference_mlf();
        let pr = family().reference();
        let h = TailedSeq::from_sparse(&[(-2, 0.05), (0, -0.1), (3, 0.07)]).unwrap();
        let q1 = q_remainder(&s, pr, &h.scale(1e-2)).unwrap().sup_abs();
        let q2 = q_remainder(&s, pr, &h.scale(1e-3)).unwrap().sup_abs();
        let ratio = q1 / q2;
        assert!((ratio - 100.0).abs() < 1.0, "{ratio}");
    }

    #[test]
    fn identity_random() {
        let s = reference_mlf();
        let pr = family().reference();
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let amp = state_radius(&s, &pr.seq) / 4.0;
        for _ in 0..100 {
            let h = random_h(&mut rng, amp).unwrap();
            let r = identity_residual(&s, pr, &h).unwrap();
            assert!(r <= 1e-12, "{r}");
        }
    }

    #[test]
    fn inq_bounded() {
        let s = reference_mlf();
        let pr = family().reference();
        let a = check_inq_bounds(&s, pr, 1.0, 1.5, 100).unwrap();
        assert!(a.pass, "{a:?}");
        assert!(a.max_identity_residual <= 1e-12);
        let b = check_inq_bounds(&s, pr, 2.0, 1.5, 100).unwrap();
        assert!(b.pass, "{b:?}");
        assert!(b.max_ratio_l1 != a.max_ratio_l1);
        assert!(check_inq_bounds(&s, pr, 1.0, 1.0, 5).is_err());
    }

    #[test]
    fn inq_deterministic() {
        let s = reference_mlf();
        let pr = family().reference();
        let a = check_inq_bounds(&s, pr, 0.5, 0.5, 10).unwrap();
        let b = check_inq_bounds(&s, pr, 0.5, 0.5, 10).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn insum_examples() {
        let r = insum_bound_check(2.0, 2.0, 2.0, 10_000).unwrap();
        assert!(r.pass && r.sup.is_finite(), "{r:?}");
        let r = insum_bound_check(0.5, 1.0, 0.5, 10_000).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(matches!(insum_bound_check(1.0, 1.0, 1.0, 100), Err(Error::ConditionH { .. })));
    }

    #[test]
    fn insum_brute_force_small() {
        // S(0) = 1^-a 1^-b + 2^-a 0^-b is excluded; m ranges over 0..=0 for n = 0.
        let r = insum_bound_check(2.0, 2.0, 2.0, 10).unwrap();
        // n = 1: m in 0..=1, S = 1/4 + 1/4, (3)^2 * 0.5 = 4.5
        assert!((r.sup - 4.5).abs() < 1e-12, "{}", r.sup);
    }

    #[test]
    fn duhamel_single_step() {
        let s = reference_mlf();
        let h = TailedSeq::from_sparse(&[(0, 1e-3), (1, -5e-4)]).unwrap();
        let r = duhamel_check(&s, family(), 0.0, &h, 1, 200).unwrap();
        assert!(r.residual <= 1e-12, "{r:?}");
        assert_eq!(r.max_operator_term, 0.0);
    }

    #[test]
    fn duhamel_shifted_profile() {
        let s = reference_mlf();
        let h = TailedSeq::from_sparse(&[(-1, 1e-3), (2, -1e-3), (4, 5e-4)]).unwrap();
        let r = duhamel_check(&s, family(), 0.25, &h, 50, 400).unwrap();
        assert!(r.residual <= 1e-10, "{r:?}");
        assert!(r.max_operator_term > 0.0);
        assert!(duhamel_check(&s, family(), 0.25, &h, 0, 400).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn identity_holds(vals in proptest::collection::vec(-0.1f64..0.1, 1..12), off in -15i64..15) {
            let s = reference_mlf();
            let h = TailedSeq::compact(off, vals).unwrap();
            let r = identity_residual(&s, family().reference(), &h).unwrap();
            prop_assert!(r <= 1e-12);
        }
    }
}
