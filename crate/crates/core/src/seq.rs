//! Doubly-infinite real sequences stored as a finite window plus constant tails,
//! together with the polynomially weighted norms and mass functional used
//! throughout the crate.
//!
//! A [`TailedSeq`] with both tails equal to zero is *compact*; only compact
//! sequences have a mass or a weighted norm.

use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Absolute tolerance used when trimming window entries that equal the tail.
pub const TRIM_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct TailedSeq {
    offset: i64,
    values: Vec<f64>,
    left_tail: f64,
    right_tail: f64,
}

impl TailedSeq {
    pub fn new(offset: i64, values: Vec<f64>, left_tail: f64, right_tail: f64) -> Result<Self> {
        if !left_tail.is_finite() || !right_tail.is_finite() {
            return Err(Error::InvalidParameter {
                name: "tail",
                reason: format!("tails must be finite, got ({left_tail}, {right_tail})"),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: format!("non-finite entry at j={}", offset + pos as i64),
            });
        }
        Ok(Self {
            offset,
            values,
            left_tail,
            right_tail,
        })
    }

    /// Builds a sequence from already validated parts.
    pub(crate) fn from_parts(offset: i64, values: Vec<f64>, left_tail: f64, right_tail: f64) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self {
            offset,
            values,
            left_tail,
            right_tail,
        }
    }

    /// Compact sequence with the given window.
    pub fn compact(offset: i64, values: Vec<f64>) -> Result<Self> {
        Self::new(offset, values, 0.0, 0.0)
    }

    pub fn zero() -> Self {
        Self::from_parts(0, Vec::new(), 0.0, 0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::from_parts(0, Vec::new(), c, c)
    }

    /// Unit mass at `j0`.
    pub fn dirac(j0: i64) -> Self {
        Self::from_parts(j0, vec![1.0], 0.0, 0.0)
    }

    /// Compact sequence from sparse `(j, value)` pairs; repeated indices add up.
    pub fn from_sparse(entries: &[(i64, f64)]) -> Result<Self> {
        if entries.is_empty() {
            return Ok(Self::zero());
        }
        let lo = entries.iter().map(|e| e.0).min().unwrap();
        let hi = entries.iter().map(|e| e.0).max().unwrap();
        let mut values = vec![0.0; (hi - lo + 1) as usize];
        for &(j, v) in entries {
            values[(j - lo) as usize] += v;
        }
        Self::compact(lo, values)
    }

    /// Sequence defined by `f` on `lo..=hi` with the given tails.
    pub fn from_fn(lo: i64, hi: i64, left_tail: f64, right_tail: f64, f: impl Fn(i64) -> f64) -> Result<Self> {
        let values = if hi >= lo { (lo..=hi).map(f).collect() } else { Vec::new() };
        Self::new(lo, values, left_tail, right_tail)
    }

    #[inline]
    pub fn get(&self, j: i64) -> f64 {
        if j < self.offset {
            self.left_tail
        } else {
            let idx = (j - self.offset) as usize;
            if idx < self.values.len() {
                self.values[idx]
            } else {
                self.right_tail
            }
        }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn left_tail(&self) -> f64 {
        self.left_tail
    }

    pub fn right_tail(&self) -> f64 {
        self.right_tail
    }

    /// Inclusive index range of the stored window, `None` when nothing is stored.
    pub fn window(&self) -> Option<(i64, i64)> {
        if self.values.is_empty() {
            None
        } else {
            Some((self.offset, self.offset + self.values.len() as i64 - 1))
        }
    }

    pub fn is_compact(&self) -> bool {
        self.left_tail == 0.0 && self.right_tail == 0.0
    }

    /// Stored entries as `(j, value)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.offset + i as i64, v))
    }

    /// Largest absolute value over the window and the tails.
    pub fn sup_abs(&self) -> f64 {
        self.values
            .iter()
            .fold(self.left_tail.abs().max(self.right_tail.abs()), |m, v| m.max(v.abs()))
    }

    /// Drops window entries at either end lying within `tol` of the adjacent tail.
    pub fn trimmed(mut self, tol: f64) -> Self {
        let start = self
            .values
            .iter()
            .position(|v| (v - self.left_tail).abs() > tol)
            .unwrap_or(self.values.len());
        let end = self
            .values
            .iter()
            .rposition(|v| (v - self.right_tail).abs() > tol)
            .map_or(start, |e| (e + 1).max(start));
        if start > 0 || end < self.values.len() {
            self.values.truncate(end);
            self.values.drain(..start);
            self.offset += start as i64;
        }
        if self.values.is_empty() {
            self.offset = 0;
        }
        self
    }

    /// Trim with the crate-wide [`TRIM_TOL`].
    pub fn canonicalize(self) -> Self {
        self.trimmed(TRIM_TOL)
    }

    /// Pointwise combination over the union of both windows; tails combine too.
    pub fn zip_with(&self, other: &TailedSeq, f: impl Fn(f64, f64) -> f64) -> TailedSeq {
        let left = f(self.left_tail, other.left_tail);
        let right = f(self.right_tail, other.right_tail);
        let range = match (self.window(), other.window()) {
            (None, None) => None,
            (Some(a), None) => Some(a),
            (None, Some(b)) => Some(b),
            (Some(a), Some(b)) => Some((a.0.min(b.0), a.1.max(b.1))),
        };
        match range {
            None => TailedSeq::from_parts(0, Vec::new(), left, right),
            Some((lo, hi)) => {
                let values = (lo..=hi).map(|j| f(self.get(j), other.get(j))).collect();
                TailedSeq::from_parts(lo, values, left, right)
            }
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> TailedSeq {
        TailedSeq::from_parts(
            self.offset,
            self.values.iter().map(|&v| f(v)).collect(),
            f(self.left_tail),
            f(self.right_tail),
        )
    }

    pub fn scale(&self, c: f64) -> TailedSeq {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &TailedSeq) -> TailedSeq {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &TailedSeq) -> TailedSeq {
        self.zip_with(other, |a, b| a - b)
    }

    /// Restricts the window to `lo..=hi`; entries outside are replaced by the tails.
    pub fn clipped(&self, lo: i64, hi: i64) -> TailedSeq {
        let Some((a, b)) = self.window() else {
            return self.clone();
        };
        let (lo, hi) = (lo.max(a), hi.min(b));
        if hi < lo {
            return TailedSeq::from_parts(0, Vec::new(), self.left_tail, self.right_tail);
        }
        let values = (lo..=hi).map(|j| self.get(j)).collect();
        TailedSeq::from_parts(lo, values, self.left_tail, self.right_tail)
    }

    /// Dense copy of the entries on `lo..=hi`.
    pub fn dense(&self, lo: i64, hi: i64) -> Vec<f64> {
        (lo..=hi).map(|j| self.get(j)).collect()
    }

    /// Writes `j,value` rows preceded by a tail header comment.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# left_tail={} right_tail={}\nj,value\n",
            self.left_tail, self.right_tail
        );
        for (j, v) in self.iter() {
            let _ = writeln!(out, "{j},{v}");
        }
        out
    }

    pub fn from_csv(reader: impl BufRead) -> Result<Self> {
        let mut tails: Option<(f64, f64)> = None;
        let mut entries: Vec<(i64, f64)> = Vec::new();
        let mut seen_header = false;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut lt = None;
                let mut rt = None;
                for tok in rest.split_whitespace() {
                    if let Some(v) = tok.strip_prefix("left_tail=") {
                        lt = v.parse::<f64>().ok();
                    } else if let Some(v) = tok.strip_prefix("right_tail=") {
                        rt = v.parse::<f64>().ok();
                    }
                }
                if let (Some(l), Some(r)) = (lt, rt) {
                    tails = Some((l, r));
                }
                continue;
            }
            if !seen_header {
                if line != "j,value" {
                    return Err(Error::Parse(format!("line {}: expected header `j,value`", lineno + 1)));
                }
                seen_header = true;
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `j,value`", lineno + 1)))?;
            let j = a
                .trim()
                .parse::<i64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            let v = b
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            entries.push((j, v));
        }
        let (lt, rt) = tails.ok_or_else(|| Error::Parse("missing tail header comment".into()))?;
        if entries.is_empty() {
            return TailedSeq::new(0, Vec::new(), lt, rt);
        }
        let lo = entries[0].0;
        for (i, &(j, _)) in entries.iter().enumerate() {
            if j != lo + i as i64 {
                return Err(Error::Parse(format!("non-contiguous index {j}")));
            }
        }
        TailedSeq::new(lo, entries.into_iter().map(|e| e.1).collect(), lt, rt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormExponent {
    One,
    Inf,
}

/// Exponent and polynomial weight of an `l^r_gamma` norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedNormSpec {
    pub r: NormExponent,
    pub gamma: f64,
}

impl WeightedNormSpec {
    pub fn new(r: NormExponent, gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("weight must be finite and non-negative, got {gamma}"),
            });
        }
        Ok(Self { r, gamma })
    }

    pub fn l1(gamma: f64) -> Self {
        Self::new(NormExponent::One, gamma).expect("valid weight")
    }

    pub fn linf(gamma: f64) -> Self {
        Self::new(NormExponent::Inf, gamma).expect("valid weight")
    }
}

fn require_compact(h: &TailedSeq) -> Result<()> {
    if h.is_compact() {
        Ok(())
    } else {
        Err(Error::NonSummable {
            left: h.left_tail,
            right: h.right_tail,
        })
    }
}

#[inline]
fn weight(j: i64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        1.0
    } else {
        (1.0 + j.unsigned_abs() as f64).powf(gamma)
    }
}

/// `sum_j (1+|j|)^gamma |h_j|` for r = 1, `sup_j (1+|j|)^gamma |h_j|` for r = inf.
pub fn weighted_norm(h: &TailedSeq, spec: WeightedNormSpec) -> Result<f64> {
    require_compact(h)?;
    let terms = h.iter().map(|(j, v)| weight(j, spec.gamma) * v.abs());
    Ok(match spec.r {
        NormExponent::One => terms.sum(),
        NormExponent::Inf => terms.fold(0.0, f64::max),
    })
}

pub fn mass(h: &TailedSeq) -> Result<f64> {
    require_compact(h)?;
    Ok(h.values.iter().sum())
}

/// `(shift h)_j = h_{j+1}`.
pub fn shift(h: &TailedSeq) -> TailedSeq {
    let mut out = h.clone();
    if !out.values.is_empty() {
        out.offset -= 1;
    }
    out
}

/// Inverse of [`shift`]: `(unshift h)_j = h_{j-1}`.
pub fn unshift(h: &TailedSeq) -> TailedSeq {
    let mut out = h.clone();
    if !out.values.is_empty() {
        out.offset += 1;
    }
    out
}

/// Pointwise difference `a - b`, canonicalized.
pub fn diff_seq(a: &TailedSeq, b: &TailedSeq) -> TailedSeq {
    a.sub(b).canonicalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn step(left: f64, right: f64, at: i64) -> TailedSeq {
        // left of `at` is `left`, from `at` on is `right`
        TailedSeq::new(at, vec![right], left, right).unwrap()
    }

    #[test]
    fn dirac_norms() {
        let d = TailedSeq::dirac(0);
        for g in [0.0, 0.5, 3.0] {
            assert_eq!(weighted_norm(&d, WeightedNormSpec::l1(g)).unwrap(), 1.0);
        }
        assert_eq!(mass(&d).unwrap(), 1.0);
    }

    #[test]
    fn weighted_sup_at_one() {
        let h = TailedSeq::dirac(1);
        assert_eq!(weighted_norm(&h, WeightedNormSpec::linf(1.0)).unwrap(), 2.0);
    }

    #[test]
    fn nonzero_tails_rejected() {
        let c = TailedSeq::constant(1.0);
        assert!(matches!(
            weighted_norm(&c, WeightedNormSpec::l1(0.0)),
            Err(Error::NonSummable { .. })
        ));
        assert!(matches!(mass(&c), Err(Error::NonSummable { .. })));
    }

    #[test]
    fn antisymmetric_pair_has_zero_mass() {
        let h = TailedSeq::from_sparse(&[(0, -2.0), (5, 2.0)]).unwrap();
        assert_eq!(mass(&h).unwrap(), 0.0);
    }

    #[test]
    fn shift_moves_dirac_and_fixes_constants() {
        let s = shift(&TailedSeq::dirac(1));
        assert_eq!(s, TailedSeq::dirac(0));
        let c = TailedSeq::constant(3.5);
        assert_eq!(shift(&c), c);
    }

    #[test]
    fn diff_of_equal_sequences_is_zero() {
        let a = TailedSeq::new(-3, vec![1.0, 0.5, 0.0, -0.5], 1.0, -1.0).unwrap();
        let d = diff_seq(&a, &a);
        assert!(d.is_compact());
        assert!(d.is_empty());
    }

    #[test]
    fn shifted_steps_differ_by_mass_two() {
        // step(1,-1) at 0 minus the same step moved one cell right
        let a = step(1.0, -1.0, 0);
        let b = step(1.0, -1.0, 1);
        let d = diff_seq(&a, &b);
        assert!(d.is_compact());
        // hand evaluation: only j = 0 differs, by -1 - 1 = -2
        assert_eq!(d.window(), Some((0, 0)));
        assert_eq!(d.get(0), -2.0);
        assert_eq!(mass(&d).unwrap().abs(), 2.0);
    }

    #[test]
    fn trimming_respects_tails() {
        let s = TailedSeq::new(-2, vec![1.0 + 1e-15, 1.0, 0.3, -1.0, -1.0], 1.0, -1.0)
            .unwrap()
            .canonicalize();
        assert_eq!(s.window(), Some((0, 0)));
        assert_eq!(s.get(0), 0.3);
        assert_eq!(s.get(-5), 1.0);
        assert_eq!(s.get(7), -1.0);
    }

    #[test]
    fn csv_roundtrip() {
        let s = TailedSeq::new(-2, vec![0.9, 0.1, -0.7], 1.0, -1.0).unwrap();
        let text = s.to_csv();
        assert!(text.starts_with("# left_tail=1 right_tail=-1\nj,value\n"));
        let back = TailedSeq::from_csv(text.as_bytes()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn non_finite_values_rejected() {
        assert!(TailedSeq::compact(0, vec![f64::NAN]).is_err());
        assert!(WeightedNormSpec::new(NormExponent::One, -1.0).is_err());
    }

    fn compact_strategy() -> impl Strategy<Value = TailedSeq> {
        (-30i64..30, prop::collection::vec(-10.0f64..10.0, 0..40))
            .prop_map(|(o, v)| TailedSeq::compact(o, v).unwrap())
    }

    proptest! {
        #[test]
        fn norm_monotone_in_weight(h in compact_strategy(), g in 0.0f64..3.0, dg in 0.0f64..2.0) {
            for r in [NormExponent::One, NormExponent::Inf] {
                let lo = weighted_norm(&h, WeightedNormSpec::new(r, g).unwrap()).unwrap();
                let hi = weighted_norm(&h, WeightedNormSpec::new(r, g + dg).unwrap()).unwrap();
                prop_assert!(lo <= hi * (1.0 + 1e-14));
            }
        }

        #[test]
        fn sup_below_sum_and_mass_below_l1(h in compact_strategy(), g in 0.0f64..3.0) {
            let s = weighted_norm(&h, WeightedNormSpec::linf(g)).unwrap();
            let l1 = weighted_norm(&h, WeightedNormSpec::l1(g)).unwrap();
            prop_assert!(s <= l1 * (1.0 + 1e-14));
            let l10 = weighted_norm(&h, WeightedNormSpec::l1(0.0)).unwrap();
            prop_assert!(mass(&h).unwrap().abs() <= l10 * (1.0 + 1e-14));
        }

        #[test]
        fn shift_telescopes_and_inverts(h in compact_strategy()) {
            let d = h.sub(&shift(&h));
            prop_assert!(mass(&d).unwrap().abs() <= 1e-12 * (1.0 + weighted_norm(&h, WeightedNormSpec::l1(0.0)).unwrap()));
            prop_assert_eq!(unshift(&shift(&h)), h.clone());
            prop_assert_eq!(shift(&unshift(&h)), h);
        }
    }
}
