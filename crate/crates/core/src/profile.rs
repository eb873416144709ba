//! Stationary discrete shock profiles: fixed-point construction, the family
//! indexed by mass, and localization diagnostics.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::scheme::{evolve, SchemeSpec, ShockPair};
use crate::seq::{diff_seq, mass, TailedSeq};

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub seq: TailedSeq,
    pub delta: f64,
    /// `sup |N u - u|` of the returned sequence.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    /// Largest allowed `|j|` of the stored window.
    pub half_width: i64,
    pub max_steps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            half_width: 60,
            max_steps: 1_000_000,
        }
    }
}

/// Step datum of mass `delta` relative to the centred step: `u-` left of
/// `k = floor(delta/(u- - u+) + 1/2)`, `u+` right of it, and the value that
/// fixes the mass at `k`.
pub fn step_datum(shock: &ShockPair, delta: f64) -> TailedSeq {
    let jump = shock.u_minus - shock.u_plus;
    let mid = 0.5 * (shock.u_minus + shock.u_plus);
    let k = (delta / jump + 0.5).floor();
    let v = mid + delta - jump * k;
    TailedSeq::new(k as i64, vec![v], shock.u_minus, shock.u_plus).expect("finite datum")
}

fn check_shock(shock: &ShockPair) -> Result<()> {
    if !shock.lax_ok {
        return Err(Error::Precondition("shock does not satisfy the Lax condition".into()));
    }
    if shock.rh_residual.abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "Rankine-Hugoniot residual {} exceeds 1e-12",
            shock.rh_residual
        )));
    }
    Ok(())
}

pub fn solve_sdsp(s: &SchemeSpec, shock: &ShockPair, delta: f64, opts: &SolveOptions) -> Result<Profile> {
    solve_from(s, shock, delta, step_datum(shock, delta), opts)
}

/// Iterates the scheme from `init` until one step moves the sequence by at most `tol`.
pub fn solve_from(s: &SchemeSpec, shock: &ShockPair, delta: f64, init: TailedSeq, opts: &SolveOptions) -> Result<Profile> {
    check_shock(shock)?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must be positive, got {}", opts.tol),
        });
    }
    if init.left_tail() != shock.u_minus || init.right_tail() != shock.u_plus {
        return Err(Error::Precondition("initial datum tails differ from the shock states".into()));
    }
    let mut u = init;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_steps {
        let next = evolve(s, &u)?;
        residual = next.sub(&u).sup_abs();
        if residual <= opts.tol {
            return Ok(Profile {
                seq: u,
                delta,
                residual,
                iterations: it,
            });
        }
        if let Some((lo, hi)) = next.window() {
            if lo < -opts.half_width || hi > opts.half_width {
                return Err(Error::WindowOverflow {
                    lo,
                    hi,
                    half_width: opts.half_width,
                });
            }
        }
        u = next;
    }
    Err(Error::NoConvergence {
        steps: opts.max_steps,
        residual,
    })
}

/// Profiles solved on a grid of `delta` values, including the reference `delta = 0`.
#[derive(Debug, Clone)]
pub struct ProfileFamily {
    pub shock: ShockPair,
    pub scheme: SchemeSpec,
    pub opts: SolveOptions,
    members: Vec<Profile>,
    reference: usize,
}

/// `n` equispaced values on `[lo, hi]`.
pub fn delta_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Default grid: 17 points on `[-0.5, 0.5]`.
pub fn default_delta_grid() -> Vec<f64> {
    delta_grid(-0.5, 0.5, 17)
}

impl ProfileFamily {
    /// Solves every member; `0` is added to the grid when absent.
    pub fn solve(s: &SchemeSpec, shock: &ShockPair, deltas: &[f64], opts: &SolveOptions) -> Result<Self> {
        let mut grid: Vec<f64> = deltas.to_vec();
        if grid.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "delta_grid",
                reason: "non-finite entry".into(),
            });
        }
        if !grid.contains(&0.0) {
            grid.push(0.0);
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        #[cfg(feature = "parallel")]
        let solved: Vec<Result<Profile>> = grid.par_iter().map(|&d| solve_sdsp(s, shock, d, opts)).collect();
        #[cfg(not(feature = "parallel"))]
        let solved: Vec<Result<Profile>> = grid.iter().map(|&d| solve_sdsp(s, shock, d, opts)).collect();
        let members = solved.into_iter().collect::<Result<Vec<_>>>()?;
        Self::from_members(s.clone(), *shock, *opts, members)
    }

    /// Assembles a family from already solved profiles (sorted by `delta`).
    pub fn from_members(scheme: SchemeSpec, shock: ShockPair, opts: SolveOptions, mut members: Vec<Profile>) -> Result<Self> {
        members.sort_by(|a, b| a.delta.total_cmp(&b.delta));
        if members.windows(2).any(|w| w[0].delta >= w[1].delta) {
            return Err(Error::Precondition("family deltas must be strictly increasing".into()));
        }
        let reference = members
            .iter()
            .position(|m| m.delta == 0.0)
            .ok_or_else(|| Error::Precondition("family has no reference member delta = 0".into()))?;
        Ok(Self {
            shock,
            scheme,
            opts,
            members,
            reference,
        })
    }

    pub fn members(&self) -> &[Profile] {
        &self.members
    }

    pub fn reference(&self) -> &Profile {
        &self.members[self.reference]
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.delta).collect()
    }

    pub fn member(&self, delta: f64) -> Option<&Profile> {
        self.members.iter().find(|m| m.delta == delta)
    }

    /// Stored member or a freshly solved one.
    pub fn member_or_solve(&self, delta: f64) -> Result<Profile> {
        match self.member(delta) {
            Some(p) => Ok(p.clone()),
            None => solve_sdsp(&self.scheme, &self.shock, delta, &self.opts),
        }
    }

    /// Replaces the sequence of a member; used to build deliberately faulty families in tests.
    pub fn replace_member_seq(&mut self, delta: f64, seq: TailedSeq) -> Result<()> {
        let m = self
            .members
            .iter_mut()
            .find(|m| m.delta == delta)
            .ok_or(Error::UnsolvedMember { delta })?;
        m.seq = seq;
        Ok(())
    }
}

fn profile_mass(fam: &ProfileFamily, pr: &Profile) -> Result<f64> {
    mass(&diff_seq(&pr.seq, &fam.reference().seq))
}

/// `M(delta) = sum_j (u^delta_j - u_j)`. When `solve` is false, `delta` must be a member.
pub fn mass_function(fam: &ProfileFamily, delta: f64, solve: bool) -> Result<f64> {
    let pr = match fam.member(delta) {
        Some(p) => p.clone(),
        None if solve => fam.member_or_solve(delta)?,
        None => return Err(Error::UnsolvedMember { delta }),
    };
    profile_mass(fam, &pr)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideRate {
    /// Fitted `c` in `|u_j - u_tail| ~ C exp(-c |j|)`; `+inf` when nothing exceeds the floor.
    pub rate: f64,
    pub exp_rms: f64,
    pub alg_rms: f64,
    pub points: usize,
    /// True when the decay looks exponential and the rate is at least `1e-3`.
    pub exponential: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationFit {
    pub left: SideRate,
    pub right: SideRate,
}

impl LocalizationFit {
    pub fn ok(&self) -> bool {
        self.left.exponential && self.right.exponential
    }
}

const TAIL_FLOOR: f64 = 1e-14;

fn side_rate(seq: &TailedSeq, right: bool) -> Result<SideRate> {
    let tail = if right { seq.right_tail() } else { seq.left_tail() };
    let extent = match seq.window() {
        None => 0,
        Some((lo, hi)) => {
            if right {
                hi.max(0)
            } else {
                (-lo).max(0)
            }
        }
    };
    let start = (extent + 1) / 2;
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut lx = Vec::new();
    for m in start.max(1)..=extent {
        let j = if right { m } else { -m };
        let r = (seq.get(j) - tail).abs();
        if r > TAIL_FLOOR {
            x.push(m as f64);
            lx.push((m as f64).ln());
            y.push(r.ln());
        }
    }
    if x.is_empty() {
        return Ok(SideRate {
            rate: f64::INFINITY,
            exp_rms: 0.0,
            alg_rms: 0.0,
            points: 0,
            exponential: true,
        });
    }
    if x.len() < 8 {
        return Err(Error::DegenerateFit(format!(
            "{} usable tail points on the {} side, need 8",
            x.len(),
            if right { "right" } else { "left" }
        )));
    }
    let e = fit_line(&x, &y)?;
    let a = fit_line(&lx, &y)?;
    let rate = -e.slope;
    Ok(SideRate {
        rate,
        exp_rms: e.rms,
        alg_rms: a.rms,
        points: x.len(),
        exponential: e.slope < -1e-3 && e.rms <= a.rms,
    })
}

/// Exponential decay rates of the profile towards each tail, fitted over the
/// outer half of the stored window on each side.
pub fn localization_rates(pr: &Profile) -> Result<LocalizationFit> {
    Ok(LocalizationFit {
        left: side_rate(&pr.seq, false)?,
        right: side_rate(&pr.seq, true)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzReport {
    /// `(delta, sup_j |u^delta_j - u_j| / |delta|)` for every non-reference member.
    pub ratios: Vec<(f64, f64)>,
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// Fitted `C` and `c` of `sup_delta |u^delta_j - u_j|/|delta| <= C exp(-c|j|)`.
    pub fitted_c: f64,
    pub fitted_rate: f64,
    /// Members whose ratio collapses relative to the median.
    pub anomalies: Vec<f64>,
    pub pass: bool,
}

pub fn family_lipschitz_check(fam: &ProfileFamily) -> Result<LipschitzReport> {
    if fam.members().len() < 3 {
        return Err(Error::Precondition("need at least 3 family members".into()));
    }
    let reference = &fam.reference().seq;
    let mut ratios = Vec::new();
    let mut env: std::collections::BTreeMap<i64, f64> = std::collections::BTreeMap::new();
    for m in fam.members() {
        if m.delta == 0.0 {
            continue;
        }
        let d = diff_seq(&m.seq, reference);
        let ratio = d.sup_abs() / m.delta.abs();
        ratios.push((m.delta, ratio));
        for (j, v) in d.iter() {
            let e = env.entry(j).or_insert(0.0);
            *e = e.max(v.abs() / m.delta.abs());
        }
    }
    let mut sorted: Vec<f64> = ratios.iter().map(|r| r.1).collect();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let anomalies: Vec<f64> = ratios
        .iter()
        .filter(|(_, r)| !r.is_finite() || *r < 1e-3 * median || *r > 1e3 * median)
        .map(|r| r.0)
        .collect();
    let max_ratio = sorted.last().copied().unwrap_or(0.0);
    let min_ratio = sorted.first().copied().unwrap_or(0.0);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (&j, &v) in &env {
        if v > 1e-12 {
            x.push(j.unsigned_abs() as f64);
            y.push(v.ln());
        }
    }
    let (fitted_c, fitted_rate) = match fit_line(&x, &y) {
        Ok(f) => (f.intercept.exp(), -f.slope),
        Err(_) => (f64::NAN, f64::NAN),
    };
    let pass = anomalies.is_empty() && max_ratio.is_finite() && fitted_rate > 0.0;
    Ok(LipschitzReport {
        ratios,
        max_ratio,
        min_ratio,
        fitted_c,
        fitted_rate,
        anomalies,
        pass,
    })
}

/// Masses below this magnitude identify the reference profile directly.
pub const ZERO_MASS_TOL: f64 = 1e-13;

/// Finds `delta` with `M(delta) = mass(h)` by bracketing on the tabulated
/// masses and refining with regula falsi on re-solved profiles.
pub fn identify_delta(fam: &ProfileFamily, h: &TailedSeq) -> Result<f64> {
    let m = mass(h)?;
    if m.abs() <= ZERO_MASS_TOL {
        return Ok(0.0);
    }
    let table: Vec<(f64, f64)> = fam
        .members()
        .iter()
        .map(|p| Ok((p.delta, profile_mass(fam, p)?)))
        .collect::<Result<_>>()?;
    if table.windows(2).any(|w| w[1].1 <= w[0].1) {
        return Err(Error::Precondition("tabulated mass function is not increasing".into()));
    }
    let (lo, hi) = (table[0].1, table[table.len() - 1].1);
    if m < lo || m > hi {
        return Err(Error::OutsideFamilyRange { mass: m, lo, hi });
    }
    let i = table.partition_point(|e| e.1 < m);
    if i < table.len() && table[i].1 == m {
        return Ok(table[i].0);
    }
    let (mut a, mut b) = (table[i - 1], table[i]);
    let mut best = a;
    for _ in 0..40 {
        let d = a.0 + (m - a.1) * (b.0 - a.0) / (b.1 - a.1);
        let md = mass_function(fam, d, true)?;
        best = (d, md);
        if (md - m).abs() <= 1e-12 || (b.0 - a.0).abs() <= 1e-14 {
            return Ok(d);
        }
        if md < m {
            a = (d, md);
        } else {
            b = (d, md);
        }
    }
    Ok(best.0)
}
