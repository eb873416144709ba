//! Green's function of the linearized scheme, the eigenvector `V` of
//! eigenvalue one and the leading-order decomposition checks.

pub mod kernel;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fit::{decay_exponent, fit_line, DecayFit, NOISE_FLOOR};
use crate::linop::{apply, BandedOp, SymbolData};
use crate::profile::ProfileFamily;
use crate::seq::{diff_seq, mass, weighted_norm, TailedSeq, WeightedNormSpec};

pub use kernel::{e2mu, h2mu, KernelSpec};

/// `G(n, j0, .)`: the image of the Dirac mass at `j0` after `n` applications.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenColumn {
    pub n: usize,
    pub j0: i64,
    pub seq: TailedSeq,
}

pub fn green_column(op: &BandedOp, n: usize, j0: i64) -> GreenColumn {
    let mut g = TailedSeq::dirac(j0);
    for _ in 0..n {
        g = apply(op, &g);
    }
    GreenColumn { n, j0, seq: g }
}

/// Snapshots of one recursion at each time in `ns` (any order, duplicates allowed).
pub fn green_columns(op: &BandedOp, j0: i64, ns: &[usize]) -> Vec<GreenColumn> {
    let mut order: Vec<usize> = ns.to_vec();
    order.sort_unstable();
    order.dedup();
    let mut out = Vec::with_capacity(order.len());
    let mut g = TailedSeq::dirac(j0);
    let mut n = 0;
    for &target in &order {
        while n < target {
            g = apply(op, &g);
            n += 1;
        }
        out.push(GreenColumn {
            n,
            j0,
            seq: g.clone(),
        });
    }
    ns.iter()
        .map(|t| out[order.binary_search(t).unwrap()].clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenV {
    /// Eigenvector from inverse iteration, normalized to unit mass.
    pub seq: TailedSeq,
    /// Centered difference of the profile family in `delta`, same normalization.
    pub fd_seq: TailedSeq,
    pub cosine: f64,
    /// `sup |L V - V|`.
    pub eig_residual: f64,
    /// Fitted `c` in `|V_j| <= C exp(-c |j|)` (smaller of the two sides).
    pub decay_rate: f64,
}

/// Step in `delta` for the profile-derivative direction.
pub const FD_DELTA: f64 = 0.0625;

fn normalize_mass(v: &TailedSeq) -> Result<TailedSeq> {
    let m = mass(v)?;
    let scale = weighted_norm(v, WeightedNormSpec::l1(0.0))?;
    if m.abs() <= 1e-8 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Eigenvector(format!("sum of V vanishes ({m:e})")));
    }
    Ok(v.scale(1.0 / m))
}

fn cosine(a: &TailedSeq, b: &TailedSeq) -> f64 {
    let prod = a.zip_with(b, |x, y| x * y);
    let dot: f64 = prod.values().iter().sum();
    let na = a.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn exp_rate(v: &TailedSeq) -> f64 {
    let peak = v.sup_abs();
    let side = |sign: i64| {
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (j, val) in v.iter() {
            if j * sign >= 2 && val.abs() > 1e-13 * peak {
                x.push((j * sign) as f64);
                y.push(val.abs().ln());
            }
        }
        fit_line(&x, &y).map(|f| -f.slope).unwrap_or(f64::INFINITY)
    };
    side(1).min(side(-1))
}

/// Eigenvector of the eigenvalue one. Inverse iteration on the operator
/// truncated to `[-half_width, half_width]` gives the returned vector; the
/// centered profile difference `(u^{d} - u^{-d})/(2d)` must point the same way.
pub fn eigenvector_v(op: &BandedOp, fam: &ProfileFamily, half_width: i64) -> Result<EigenV> {
    let up = fam.member_or_solve(FD_DELTA)?;
    let um = fam.member_or_solve(-FD_DELTA)?;
    let fd = normalize_mass(&diff_seq(&up.seq, &um.seq).scale(0.5 / FD_DELTA))?;

    let lo = -half_width;
    let n = (2 * half_width + 1) as usize;
    let (p, q) = (op.p() as i64, op.q() as i64);
    const SHIFT: f64 = 1e-8;
    let m = DMatrix::from_fn(n, n, |r, c| {
        let j = lo + r as i64;
        let k = c as i64 - r as i64;
        let mut v = if (-p..=q).contains(&k) { op.a(j, k) } else { 0.0 };
        if r == c {
            v -= 1.0 + SHIFT;
        }
        v
    });
    let lu = m.lu();
    let mut x = DVector::from_iterator(n, (0..n).map(|i| fd.get(lo + i as i64)));
    for _ in 0..4 {
        x = lu
            .solve(&x)
            .ok_or_else(|| Error::Eigenvector("truncated operator minus identity is singular".into()))?;
        let s = x.norm();
        x /= s;
    }
    let inv = TailedSeq::compact(lo, x.iter().copied().collect())?.canonicalize();
    let v = normalize_mass(&inv)?.canonicalize();
    let cos = cosine(&v, &fd);
    if !(cos > 1.0 - 1e-6) {
        return Err(Error::Eigenvector(format!("construction methods disagree (cosine {cos})")));
    }
    let eig_residual = apply(op, &v).sub(&v).sup_abs();
    Ok(EigenV {
        decay_rate: exp_rate(&v),
        seq: v,
        fd_seq: fd,
        cosine: cos,
        eig_residual,
    })
}

/// Coefficient `E_{2mu}` of `V` in the leading term of `G(n, j0, .)`.
pub fn leading_coefficient(sym_minus: &SymbolData, sym_plus: &SymbolData, n: usize, j0: i64) -> Result<f64> {
    let (sym, sign) = if j0 >= 0 { (sym_plus, 1.0) } else { (sym_minus, -1.0) };
    let (Some(mu), Some(beta)) = (sym.mu, sym.beta) else {
        return Err(Error::Precondition("symbol has no diffusion order".into()));
    };
    let k = KernelSpec::new(mu, beta)?;
    if n == 0 {
        // the argument is +inf for j0 != 0
        return Ok(if j0 == 0 { 0.5 } else { 0.0 });
    }
    let nf = n as f64;
    let x = sign * (nf * sym.alpha + j0 as f64) / nf.powf(1.0 / (2 * mu) as f64);
    e2mu(&k, x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionRow {
    pub n: usize,
    pub e_factor: f64,
    pub linf: f64,
    pub l1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub j0: i64,
    pub rows: Vec<DecompositionRow>,
    /// Decay fit of the sup norm after dropping the first tenth of the times.
    pub fit: DecayFit,
}

/// Residual `G(n, j0, .) - E_{2mu}(beta; x_n) V` for each requested `n`.
pub fn decomposition_residual(
    op: &BandedOp,
    v: &EigenV,
    sym_minus: &SymbolData,
    sym_plus: &SymbolData,
    n_list: &[usize],
    j0: i64,
) -> Result<DecompositionReport> {
    if n_list.len() < 4 {
        return Err(Error::Precondition("need at least 4 times".into()));
    }
    let cols = green_columns(op, j0, n_list);
    let mut rows = Vec::with_capacity(cols.len());
    for col in &cols {
        let e = leading_coefficient(sym_minus, sym_plus, col.n, j0)?;
        let r = col.seq.sub(&v.seq.scale(e));
        rows.push(DecompositionRow {
            n: col.n,
            e_factor: e,
            linf: r.sup_abs(),
            l1: weighted_norm(&r, WeightedNormSpec::l1(0.0))?,
        });
    }
    let fit = fit_tail(&rows.iter().map(|r| (r.n, r.linf)).collect::<Vec<_>>())?;
    Ok(DecompositionReport { j0, rows, fit })
}

/// Floor-aware decay fit on the series with the first 10% of points dropped.
fn fit_tail(series: &[(usize, f64)]) -> Result<DecayFit> {
    let mut s = series.to_vec();
    s.sort_by_key(|e| e.0);
    let skip = s.len() / 10;
    let ns: Vec<f64> = s[skip..].iter().map(|e| e.0 as f64).collect();
    let vs: Vec<f64> = s[skip..].iter().map(|e| e.1).collect();
    decay_exponent(&ns, &vs, NOISE_FLOOR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeDecay {
    pub j0: i64,
    /// `(n, ||G(n,j0,.) - G(n,j0-1,.)||_1, mass)`.
    pub rows: Vec<(usize, f64, f64)>,
    pub fit: DecayFit,
}

/// `L^n (Id - T) delta_{j0} = G(n, j0, .) - G(n, j0 - 1, .)`.
pub fn derivative_decay(op: &BandedOp, j0: i64, n_list: &[usize]) -> Result<DerivativeDecay> {
    if n_list.len() < 4 {
        return Err(Error::Precondition("need at least 4 times".into()));
    }
    let a = green_columns(op, j0, n_list);
    let b = green_columns(op, j0 - 1, n_list);
    let mut rows = Vec::with_capacity(a.len());
    for (ga, gb) in a.iter().zip(&b) {
        let d = ga.seq.sub(&gb.seq);
        rows.push((ga.n, weighted_norm(&d, WeightedNormSpec::l1(0.0))?, mass(&d)?));
    }
    let fit = fit_tail(&rows.iter().map(|r| (r.0, r.1)).collect::<Vec<_>>())?;
    Ok(DerivativeDecay { j0, rows, fit })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupDecay {
    pub norms: Vec<WeightedNormSpec>,
    /// `series[i][n] = ||L^n h||` in the i-th norm, `n = 0..=n_max`.
    pub series: Vec<Vec<f64>>,
    /// Fits over `n in [n_max/10, n_max]`.
    pub fits: Vec<DecayFit>,
}

/// Targets `(Gamma - gamma, Gamma - gamma + min(gamma, 1/2mu))` for the l1 and sup decay of `L^n h`.
pub fn semigroup_targets(big_gamma: f64, gamma: f64, mu: u32) -> (f64, f64) {
    let half = 1.0 / (2.0 * mu as f64);
    (big_gamma - gamma, big_gamma - gamma + gamma.min(half))
}

pub fn semigroup_decay(
    op: &BandedOp,
    h: &TailedSeq,
    norms: &[WeightedNormSpec],
    n_max: usize,
    require_zero_mass: bool,
) -> Result<SemigroupDecay> {
    let m = mass(h)?;
    if require_zero_mass && m.abs() > 1e-10 {
        return Err(Error::Precondition(format!("perturbation has mass {m:e}, expected zero")));
    }
    let mut series = vec![Vec::with_capacity(n_max + 1); norms.len()];
    let mut x = h.clone();
    for n in 0..=n_max {
        if n > 0 {
            x = apply(op, &x);
        }
        for (i, spec) in norms.iter().enumerate() {
            series[i].push(weighted_norm(&x, *spec)?);
        }
    }
    let lo = (n_max / 10).max(1);
    let fits = series
        .iter()
        .map(|s| {
            let pts: Vec<(usize, f64)> = (lo..=n_max).map(|n| (n, s[n])).collect();
            let ns: Vec<f64> = pts.iter().map(|e| e.0 as f64).collect();
            let vs: Vec<f64> = pts.iter().map(|e| e.1).collect();
            decay_exponent(&ns, &vs, NOISE_FLOOR)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SemigroupDecay {
        norms: norms.to_vec(),
        series,
        fits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::log_spaced;
    use crate::linop::{limit_symbol, linearize, Side};
    use crate::profile::{default_delta_grid, SolveOptions};
    use crate::scheme::{reference_mlf, shock_pair};
    use std::sync::OnceLock;

    struct Setup {
        op: BandedOp,
        v: EigenV,
        sm: SymbolData,
        sp: SymbolData,
    }

    fn setup() -> &'static Setup {
        static S: OnceLock<Setup> = OnceLock::new();
        S.get_or_init(|| {
            let s = reference_mlf();
            let sh = shock_pair(&s, 1.0, -1.0).unwrap();
            let fam = ProfileFamily::solve(&s, &sh, &default_delta_grid(), &SolveOptions::default()).unwrap();
            let op = linearize(&s, fam.reference()).unwrap();
            let v = eigenvector_v(&op, &fam, 60).unwrap();
            let sm = limit_symbol(&s, 1.0, Side::Left).unwrap();
            let sp = limit_symbol(&s, -1.0, Side::Right).unwrap();
            Setup { op, v, sm, sp }
        })
    }

    #[test]
    fn column_zero_is_dirac() {
        let g = green_column(&setup().op, 0, 7);
        assert_eq!(g.seq, TailedSeq::dirac(7));
    }

    #[test]
    fn green_mass_and_support() {
        let op = &setup().op;
        for j0 in [-40i64, 0, 40] {
            let ns = [1usize, 5, 50, 300];
            for g in green_columns(op, j0, &ns) {
                let (lo, hi) = g.seq.window().unwrap();
                assert!(lo >= j0 - g.n as i64 && hi <= j0 + g.n as i64);
                assert!((mass(&g.seq).unwrap() - 1.0).abs() <= 1e-12 * (1.0 + g.n as f64));
            }
        }
    }

    #[test]
    fn eigenvector_properties() {
        let v = &setup().v;
        assert!(v.eig_residual <= 1e-10, "{}", v.eig_residual);
        assert!((mass(&v.seq).unwrap() - 1.0).abs() <= 1e-12);
        assert!(v.decay_rate > 0.0);
        assert!(v.cosine > 1.0 - 1e-6);
    }

    #[test]
    fn decomposition_decays() {
        let st = setup();
        let ns = log_spaced(100, 2000, 16);
        let r = decomposition_residual(&st.op, &st.v, &st.sm, &st.sp, &ns, 0).unwrap();
        assert!(r.fit.exponent >= 0.4, "{r:?}");
        assert!(r.rows.last().unwrap().linf < r.rows[0].linf.max(1e-14));
    }

    #[test]
    fn activation_time_for_offset_source() {
        let st = setup();
        let before = leading_coefficient(&st.sm, &st.sp, 40, 40).unwrap();
        let at = leading_coefficient(&st.sm, &st.sp, 80, 40).unwrap();
        let after = leading_coefficient(&st.sm, &st.sp, 200, 40).unwrap();
        assert!(before < 0.01);
        assert!((at - 0.5).abs() < 1e-12);
        assert!(after > 0.99);
    }

    #[test]
    fn perturbed_drift_is_worse() {
        let st = setup();
        let mut wrong = st.sp.clone();
        wrong.alpha *= 1.1;
        let ns: Vec<usize> = (140..=220).step_by(20).collect();
        let good = decomposition_residual(&st.op, &st.v, &st.sm, &st.sp, &ns, 40).unwrap();
        let bad = decomposition_residual(&st.op, &st.v, &st.sm, &wrong, &ns, 40).unwrap();
        for (g, b) in good.rows.iter().zip(&bad.rows) {
            assert!(g.linf < b.linf, "n = {}: {} vs {}", g.n, g.linf, b.linf);
        }
    }

    #[test]
    fn derivative_cases() {
        let op = &setup().op;
        let d = derivative_decay(op, 0, &[0, 1, 2, 3]).unwrap();
        assert_eq!(d.rows[0].1, 2.0);
        let ns = log_spaced(100, 2000, 12);
        let d = derivative_decay(op, 0, &ns).unwrap();
        assert!(d.fit.exponent >= 0.4);
        assert!(d.rows.iter().all(|r| r.2.abs() < 1e-12));
    }

    #[test]
    fn semigroup_cases() {
        let st = setup();
        let dipole = TailedSeq::from_sparse(&[(0, 1.0), (1, -1.0)]).unwrap();
        let (_, target) = semigroup_targets(1.0, 0.0, 1);
        assert_eq!(target, 1.0);
        let r = semigroup_decay(&st.op, &dipole, &[WeightedNormSpec::linf(0.0)], 400, true).unwrap();
        assert!(r.fits[0].exponent >= 0.8);

        let h = TailedSeq::from_sparse(&[(3, 0.5)]).unwrap();
        assert!(semigroup_decay(&st.op, &h, &[WeightedNormSpec::linf(0.0)], 10, true).is_err());
        let r = semigroup_decay(&st.op, &h, &[WeightedNormSpec::linf(0.0)], 600, false).unwrap();
        let limit = 0.5 * st.v.seq.sup_abs();
        assert!((r.series[0][600] - limit).abs() < 1e-6 * limit.max(1.0));

        let r = semigroup_decay(&st.op, &st.v.seq, &[WeightedNormSpec::l1(0.0)], 50, false).unwrap();
        assert!(r.series[0].iter().all(|x| (x - r.series[0][0]).abs() < 1e-9));
    }
}
