//! Linearization of a scheme about a profile, limiting symbols and the
//! hypothesis checks that rest on them.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result, SeqIndex};
use crate::profile::Profile;
use crate::scheme::SchemeSpec;
use crate::seq::TailedSeq;

/// Spatially varying banded operator `(L h)_j = sum_{k=-p}^{q} a_{j,k} h_{j+k}`
/// whose coefficients are constant outside a finite window.
///
/// The operator is stored through the flux derivatives `b_{j,k}`, `k = -p..q-1`;
/// the `a` table is assembled from them so that the column sums
/// `sum_k a_{j-k,k}` equal one by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedOp {
    p: usize,
    q: usize,
    lo: i64,
    rows: usize,
    b_var: Vec<f64>,
    a_var: Vec<f64>,
    b_left: Vec<f64>,
    b_right: Vec<f64>,
    a_left: Vec<f64>,
    a_right: Vec<f64>,
}

fn assemble_a(p: usize, q: usize, b_here: &[f64], b_next: &[f64]) -> Vec<f64> {
    let (pi, qi) = (p as i64, q as i64);
    (-pi..=qi)
        .map(|k| {
            let mut a = if k == 0 { 1.0 } else { 0.0 };
            if k < qi {
                a += b_here[(k + pi) as usize];
            }
            if k > -pi {
                a -= b_next[(k - 1 + pi) as usize];
            }
            a
        })
        .collect()
}

impl BandedOp {
    /// `b_var` holds `rows * (p+q)` entries for `j = lo..lo+rows`.
    pub fn from_b(p: usize, q: usize, lo: i64, b_var: Vec<f64>, b_left: Vec<f64>, b_right: Vec<f64>) -> Result<Self> {
        let w = p + q;
        if p < 1 || q < 1 || b_left.len() != w || b_right.len() != w || !b_var.len().is_multiple_of(w) {
            return Err(Error::InvalidParameter {
                name: "b",
                reason: format!("coefficient tables do not match the stencil (p, q) = ({p}, {q})"),
            });
        }
        let rows = b_var.len() / w;
        let mut op = Self {
            p,
            q,
            lo,
            rows,
            b_var,
            a_var: Vec::with_capacity(rows * (w + 1)),
            a_left: assemble_a(p, q, &b_left, &b_left),
            a_right: assemble_a(p, q, &b_right, &b_right),
            b_left,
            b_right,
        };
        for r in 0..rows {
            let j = lo + r as i64;
            let here: Vec<f64> = op.b_row(j).to_vec();
            let next: Vec<f64> = op.b_row(j + 1).to_vec();
            let a = assemble_a(p, q, &here, &next);
            op.a_var.extend(a);
        }
        Ok(op)
    }

    /// Spatially constant operator.
    pub fn constant(p: usize, q: usize, b: Vec<f64>) -> Result<Self> {
        Self::from_b(p, q, 0, Vec::new(), b.clone(), b)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Index range with stored (possibly varying) coefficients.
    pub fn window(&self) -> Option<(i64, i64)> {
        (self.rows > 0).then(|| (self.lo, self.lo + self.rows as i64 - 1))
    }

    fn b_row(&self, j: i64) -> &[f64] {
        let w = self.p + self.q;
        if j < self.lo {
            &self.b_left
        } else if j >= self.lo + self.rows as i64 {
            &self.b_right
        } else {
            let r = (j - self.lo) as usize;
            &self.b_var[r * w..(r + 1) * w]
        }
    }

    fn a_row(&self, j: i64) -> &[f64] {
        let w = self.p + self.q + 1;
        if j < self.lo {
            &self.a_left
        } else if j >= self.lo + self.rows as i64 {
            &self.a_right
        } else {
            let r = (j - self.lo) as usize;
            &self.a_var[r * w..(r + 1) * w]
        }
    }

    /// `b_{j,k}` for `k` in `-p..q-1`.
    pub fn b(&self, j: i64, k: i64) -> f64 {
        self.b_row(j)[(k + self.p as i64) as usize]
    }

    /// `a_{j,k}` for `k` in `-p..=q`.
    pub fn a(&self, j: i64, k: i64) -> f64 {
        self.a_row(j)[(k + self.p as i64) as usize]
    }

    /// Constant coefficients `a_k` on the left (`-inf`) or right (`+inf`).
    pub fn limit_a(&self, side: Side) -> &[f64] {
        match side {
            Side::Left => &self.a_left,
            Side::Right => &self.a_right,
        }
    }

    pub fn limit_b(&self, side: Side) -> &[f64] {
        match side {
            Side::Left => &self.b_left,
            Side::Right => &self.b_right,
        }
    }
}

/// Finite-difference step, `2^-20 ~ 9.5e-7`; a power of two keeps `x +- h` exact.
const FD_STEP: f64 = 1.0 / 1_048_576.0;

/// `d F / d states[i]` by central differences with one Richardson step.
fn flux_partial(s: &SchemeSpec, states: &mut [f64], i: usize) -> f64 {
    let x = states[i];
    let mut central = |h: f64| {
        states[i] = x + h;
        let fp = s.num_flux(states);
        states[i] = x - h;
        let fm = s.num_flux(states);
        states[i] = x;
        (fp - fm) / (2.0 * h)
    };
    let d1 = central(FD_STEP);
    let d2 = central(0.5 * FD_STEP);
    (4.0 * d2 - d1) / 3.0
}

/// `b_k = nu dF/du_k` at the argument list `states`.
fn b_at(s: &SchemeSpec, states: &mut [f64]) -> Vec<f64> {
    (0..states.len()).map(|i| s.nu() * flux_partial(s, states, i)).collect()
}

fn b_constant(s: &SchemeSpec, state: f64) -> Vec<f64> {
    let mut st = vec![state; s.p() + s.q()];
    b_at(s, &mut st)
}

/// Linearization about an arbitrary sequence (no convergence check).
pub fn linearize_seq(s: &SchemeSpec, u: &TailedSeq) -> Result<BandedOp> {
    s.check_seq(u)?;
    let (p, q) = (s.p() as i64, s.q() as i64);
    let wl = u.offset();
    let wh = wl + u.len() as i64 - 1;
    let lo = wl - q;
    let hi = wh + p;
    let mut b_var = Vec::with_capacity(((hi - lo + 1).max(0) as usize) * (s.p() + s.q()));
    let mut st = vec![0.0; s.p() + s.q()];
    for j in lo..=hi {
        for (i, x) in st.iter_mut().enumerate() {
            *x = u.get(j - p + i as i64);
        }
        b_var.extend(b_at(s, &mut st));
    }
    BandedOp::from_b(
        s.p(),
        s.q(),
        lo,
        b_var,
        b_constant(s, u.left_tail()),
        b_constant(s, u.right_tail()),
    )
}

/// Linearization `L^delta` about a converged profile.
pub fn linearize(s: &SchemeSpec, pr: &Profile) -> Result<BandedOp> {
    if !(pr.residual <= 1e-8) {
        return Err(Error::Precondition(format!(
            "profile not converged (residual {:e})",
            pr.residual
        )));
    }
    linearize_seq(s, &pr.seq)
}

/// Banded product `L h`. Tails map through the limit symbols at `kappa = 1`.
pub fn apply(op: &BandedOp, h: &TailedSeq) -> TailedSeq {
    let (p, q) = (op.p as i64, op.q as i64);
    let left = op.a_left.iter().sum::<f64>() * h.left_tail();
    let right = op.a_right.iter().sum::<f64>() * h.right_tail();
    let mut range = h.window().map(|(lo, hi)| (lo - q, hi + p));
    if !h.is_compact() {
        if let Some((olo, ohi)) = op.window() {
            let r = (olo - q, ohi + p);
            range = Some(match range {
                None => r,
                Some(a) => (a.0.min(r.0), a.1.max(r.1)),
            });
        }
        if range.is_none() && h.left_tail() != h.right_tail() {
            range = Some((h.offset() - q - 1, h.offset() + p));
        }
    }
    let Some((lo, hi)) = range else {
        return TailedSeq::from_parts(0, Vec::new(), left, right);
    };
    let dense = h.dense(lo - p, hi + q);
    let w = op.p + op.q + 1;
    let values = (0..(hi - lo + 1) as usize)
        .map(|i| {
            let a = op.a_row(lo + i as i64);
            let x = &dense[i..i + w];
            a.iter().zip(x).map(|(c, v)| c * v).sum()
        })
        .collect();
    TailedSeq::from_parts(lo, values, left, right)
}

/// `(A - B) h` for two operators with the same stencil.
pub fn op_difference_apply(op_a: &BandedOp, op_b: &BandedOp, h: &TailedSeq) -> Result<TailedSeq> {
    if op_a.p != op_b.p || op_a.q != op_b.q {
        return Err(Error::StencilMismatch {
            p_a: op_a.p,
            q_a: op_a.q,
            p_b: op_b.p,
            q_b: op_b.q,
        });
    }
    Ok(apply(op_a, h).sub(&apply(op_b, h)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Limiting symbol `F(kappa) = sum_k a_k kappa^k` on one side of the shock.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolData {
    pub side: Side,
    pub p: usize,
    pub q: usize,
    /// `a_k` for `k = -p..=q`.
    pub coeffs: Vec<f64>,
    /// `nu f'(state)`.
    pub alpha: f64,
    /// `-F'(1)`, which must agree with `alpha`.
    pub alpha_from_symbol: f64,
    pub mu: Option<u32>,
    pub beta: Option<Complex64>,
    pub dissipative: bool,
    pub unit_roots: Vec<Complex64>,
}

impl SymbolData {
    /// Symbol from raw coefficients; derived fields are left empty.
    pub fn from_coeffs(side: Side, p: usize, q: usize, coeffs: Vec<f64>, alpha: f64) -> Result<Self> {
        if coeffs.len() != p + q + 1 {
            return Err(Error::InvalidParameter {
                name: "coeffs",
                reason: format!("expected {} coefficients, got {}", p + q + 1, coeffs.len()),
            });
        }
        let alpha_from_symbol = -coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| (i as f64 - p as f64) * a)
            .sum::<f64>();
        Ok(Self {
            side,
            p,
            q,
            coeffs,
            alpha,
            alpha_from_symbol,
            mu: None,
            beta: None,
            dissipative: false,
            unit_roots: Vec::new(),
        })
    }

    pub fn eval(&self, kappa: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut pw = kappa.powi(-(self.p as i32));
        for &a in &self.coeffs {
            acc += a * pw;
            pw *= kappa;
        }
        acc
    }

    /// `F(e^{i xi})`.
    pub fn at_xi(&self, xi: f64) -> Complex64 {
        let p = self.p as f64;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, &a)| a * Complex64::from_polar(1.0, (i as f64 - p) * xi))
            .sum()
    }

    /// Fills the dissipativity flag, the diffusion order and coefficient, and the unit roots.
    pub fn analyze(mut self) -> Self {
        self.dissipative = check_dissipativity(&self, 4096).pass;
        if self.dissipative {
            if let Ok(d) = extract_diffusion(&self) {
                self.mu = Some(d.mu);
                self.beta = Some(d.beta);
            }
        }
        self.unit_roots = count_unit_roots(&self).map(|r| r.roots).unwrap_or_default();
        self
    }
}

/// Limit symbol of the scheme linearized at the constant `state`.
pub fn limit_symbol(s: &SchemeSpec, state: f64, side: Side) -> Result<SymbolData> {
    if !s.contains(state) {
        let (lo, hi) = s.bounds();
        return Err(Error::StateEscaped {
            index: match side {
                Side::Left => SeqIndex::LeftTail,
                Side::Right => SeqIndex::RightTail,
            },
            value: state,
            lo,
            hi,
        });
    }
    let b = b_constant(s, state);
    let a = assemble_a(s.p(), s.q(), &b, &b);
    Ok(SymbolData::from_coeffs(side, s.p(), s.q(), a, s.nu() * s.f_prime(state))?.analyze())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipativityReport {
    pub max_modulus: f64,
    pub worst_xi: f64,
    /// `|F(1)|`, which must be one.
    pub value_at_one: f64,
    pub pass: bool,
}

/// Samples `|F(e^{i xi})|` on a uniform grid of `[-pi, pi)` outside `|xi| < 1e-6`.
pub fn check_dissipativity(sym: &SymbolData, n_grid: usize) -> DissipativityReport {
    let n = n_grid.max(64);
    let mut max_modulus = 0.0;
    let mut worst_xi = 0.0;
    for i in 0..n {
        let xi = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / n as f64;
        if xi.abs() < 1e-6 {
            continue;
        }
        let m = sym.at_xi(xi).norm();
        if m > max_modulus || m.is_nan() {
            max_modulus = m;
            worst_xi = xi;
        }
    }
    let value_at_one = sym.at_xi(0.0).norm();
    DissipativityReport {
        max_modulus,
        worst_xi,
        value_at_one,
        pass: max_modulus < 1.0 - 1e-12 && (value_at_one - 1.0).abs() <= 1e-12,
    }
}

pub const MU_MAX: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diffusion {
    pub mu: u32,
    pub beta: Complex64,
    /// Relative residual of the accepted fit.
    pub rel_residual: f64,
}

pub fn extract_diffusion(sym: &SymbolData) -> Result<Diffusion> {
    extract_diffusion_from(sym.alpha, |xi| sym.at_xi(xi))
}

/// Diffusion order and coefficient from `log F(e^{i xi}) + i alpha xi ~ -beta xi^{2 mu}`.
///
/// For each candidate `mu` the function is fitted on 40 log-spaced `xi` in
/// `[1e-3, 1e-1]` by powers `t^{2mu}, ..., t^{2mu+6}` of `t = xi/0.1`; the
/// smallest `mu` whose fit is accurate with a non-vanishing leading
/// coefficient and `Re beta > 0` is accepted.
pub fn extract_diffusion_from(alpha: f64, symbol: impl Fn(f64) -> Complex64) -> Result<Diffusion> {
    const N: usize = 40;
    const EXTRA: usize = 6;
    const XI_MAX: f64 = 0.1;
    let xs: Vec<f64> = (0..N)
        .map(|i| (1e-3f64.ln() + (XI_MAX.ln() - 1e-3f64.ln()) * i as f64 / (N - 1) as f64).exp())
        .collect();
    let g: Vec<Complex64> = xs
        .iter()
        .map(|&xi| symbol(xi).ln() + Complex64::new(0.0, alpha * xi))
        .collect();
    let gmax = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let gnorm = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if gmax == 0.0 || !gmax.is_finite() {
        return Err(Error::NoDiffusiveOrder { mu_max: MU_MAX });
    }
    for mu in 1..=MU_MAX {
        let cols = EXTRA + 1;
        let m = DMatrix::from_fn(N, cols, |i, c| (xs[i] / XI_MAX).powi((2 * mu) as i32 + c as i32));
        let svd = m.clone().svd(true, true);
        let re = DVector::from_iterator(N, g.iter().map(|z| z.re));
        let im = DVector::from_iterator(N, g.iter().map(|z| z.im));
        let (Ok(cr), Ok(ci)) = (svd.solve(&re, 1e-14), svd.solve(&im, 1e-14)) else {
            continue;
        };
        let rr = &m * &cr - &re;
        let ri = &m * &ci - &im;
        let rel = (rr.norm_squared() + ri.norm_squared()).sqrt() / gnorm;
        let lead = Complex64::new(cr[0], ci[0]);
        let beta = -lead / XI_MAX.powi((2 * mu) as i32);
        if rel <= 1e-4 && lead.norm() >= 1e-6 * gmax && beta.re > 0.0 {
            return Ok(Diffusion {
                mu,
                beta,
                rel_residual: rel,
            });
        }
    }
    Err(Error::NoDiffusiveOrder { mu_max: MU_MAX })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypInvReport {
    pub min_abs: f64,
    /// Where the smallest band-edge coefficient sits, with its `k`.
    pub worst: (SeqIndex, i64),
    pub pass: bool,
}

/// Band-edge coefficients `a_{j,-p}`, `a_{j,q}` and their limits must stay away from zero.
pub fn check_hyp_inv(op: &BandedOp, sym_minus: &SymbolData, sym_plus: &SymbolData) -> HypInvReport {
    let (p, q) = (op.p as i64, op.q as i64);
    let mut min_abs = f64::INFINITY;
    let mut worst = (SeqIndex::LeftTail, -p);
    let mut visit = |v: f64, at: (SeqIndex, i64)| {
        if v.abs() < min_abs {
            min_abs = v.abs();
            worst = at;
        }
    };
    if let Some((lo, hi)) = op.window() {
        for j in lo..=hi {
            visit(op.a(j, -p), (SeqIndex::At(j), -p));
            visit(op.a(j, q), (SeqIndex::At(j), q));
        }
    }
    for (sym, idx) in [(sym_minus, SeqIndex::LeftTail), (sym_plus, SeqIndex::RightTail)] {
        visit(sym.coeffs[0], (idx, -(sym.p as i64)));
        visit(*sym.coeffs.last().unwrap(), (idx, sym.q as i64));
    }
    HypInvReport {
        min_abs,
        worst,
        pass: min_abs > 1e-12,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitRoots {
    pub roots: Vec<Complex64>,
    pub distinct: bool,
    pub contains_one: bool,
    pub pass: bool,
}

fn poly_eval(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    // Horner for value and derivative, coefficients in increasing degree
    let mut v = Complex64::new(0.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for &ci in c.iter().rev() {
        d = d * z + v;
        v = v * z + ci;
    }
    (v, d)
}

/// Roots of `kappa^p (F(kappa) - 1)`, a polynomial of degree `p + q`.
pub fn count_unit_roots(sym: &SymbolData) -> Result<UnitRoots> {
    let n = sym.p + sym.q;
    let mut c = sym.coeffs.clone();
    c[sym.p] -= 1.0;
    let lead = c[n];
    let scale = c.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if lead.abs() <= 1e-14 * scale.max(1e-300) {
        return Err(Error::Precondition("leading coefficient a_q vanishes".into()));
    }
    let companion = DMatrix::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -c[i] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let schur = nalgebra::linalg::Schur::try_new(companion, 1e-15, 10_000).ok_or(Error::RootFinder)?;
    let mut roots: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let (v, d) = poly_eval(&c, *r);
            if d.norm() == 0.0 {
                break;
            }
            let step = v / d;
            if !step.re.is_finite() || !step.im.is_finite() || step.norm() > 1e-6 * (1.0 + r.norm()) {
                break;
            }
            *r -= step;
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut distinct = true;
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            if (roots[i] - roots[j]).norm() <= 1e-8 {
                distinct = false;
            }
        }
        let (_, d) = poly_eval(&c, roots[i]);
        let mag = roots[i].norm().max(1.0).powi(n as i32);
        if d.norm() <= 1e-6 * scale * mag {
            distinct = false;
        }
    }
    let contains_one = roots.iter().any(|r| (r - 1.0).norm() <= 1e-8);
    Ok(UnitRoots {
        pass: distinct && contains_one && roots.len() == n && roots.iter().all(|r| r.norm() > 0.0),
        roots,
        distinct,
        contains_one,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeReport {
    /// Estimated dominant modulus on the complement of `V`.
    pub estimate: f64,
    pub iterations: usize,
}

/// Power iteration for the dominant modulus of the operator truncated to
/// `[-half_width, half_width]` (zero outside). With `v` given (normalized to
/// unit mass) each iterate is deflated by `x - (sum x) v`.
pub fn spectral_probe(op: &BandedOp, v: Option<&TailedSeq>, half_width: i64, iters: usize) -> Result<ProbeReport> {
    if half_width < 1 || iters < 16 {
        return Err(Error::InvalidParameter {
            name: "spectral_probe",
            reason: "need half_width >= 1 and iters >= 16".into(),
        });
    }
    let lo = -half_width;
    let n = (2 * half_width + 1) as usize;
    let vv: Option<Vec<f64>> = v.map(|v| (0..n).map(|i| v.get(lo + i as i64)).collect());
    let deflate = |x: &mut [f64]| {
        if let Some(vv) = &vv {
            let m: f64 = x.iter().sum();
            for (xi, vi) in x.iter_mut().zip(vv) {
                *xi -= m * vi;
            }
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    deflate(&mut x);
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nx = norm(&x);
    if nx == 0.0 {
        return Err(Error::Precondition("start vector vanishes after deflation".into()));
    }
    x.iter_mut().for_each(|v| *v /= nx);
    let (p, q) = (op.p as i64, op.q as i64);
    let mut logs = Vec::with_capacity(iters);
    let mut y = vec![0.0; n];
    for _ in 0..iters {
        for (i, yi) in y.iter_mut().enumerate() {
            let j = lo + i as i64;
            let mut acc = 0.0;
            for k in -p..=q {
                let idx = i as i64 + k;
                if idx >= 0 && (idx as usize) < n {
                    acc += op.a(j, k) * x[idx as usize];
                }
            }
            *yi = acc;
        }
        deflate(&mut y);
        let ny = norm(&y);
        if ny == 0.0 || !ny.is_finite() {
            return Ok(ProbeReport {
                estimate: 0.0,
                iterations: logs.len() + 1,
            });
        }
        logs.push(ny.ln());
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let a = mean(&logs[iters / 2..3 * iters / 4]).exp();
    let b = mean(&logs[3 * iters / 4..]).exp();
    if (a - b).abs() > 5e-3 * b.max(1e-300) {
        return Err(Error::ProbeStagnation { a, b });
    }
    Ok(ProbeReport {
        estimate: b,
        iterations: iters,
    })
}
