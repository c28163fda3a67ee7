use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::approx::CantorApprox;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval [{lo}, {hi}] is reversed");
        Interval { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

/// Canonical union of closed intervals: sorted, with strictly positive gaps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
    total_length: f64,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet::default()
    }

    /// Sorts and merges; touching or overlapping intervals are joined.
    pub fn from_intervals(iter: impl IntoIterator<Item = Interval>) -> Self {
        let mut raw: Vec<Interval> = iter.into_iter().collect();
        raw.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::with_capacity(raw.len());
        for iv in raw {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => merged.push(iv),
            }
        }
        Self::from_canonical(merged)
    }

    fn from_canonical(intervals: Vec<Interval>) -> Self {
        let total_length = intervals.iter().map(Interval::len).sum();
        IntervalSet {
            intervals,
            total_length,
        }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn bounds(&self) -> Option<Interval> {
        Some(Interval::new(self.intervals.first()?.lo, self.intervals.last()?.hi))
    }

    /// Whether `iv` lies inside a single component.
    pub fn covers(&self, iv: &Interval) -> bool {
        let idx = self.intervals.partition_point(|c| c.hi < iv.hi);
        self.intervals.get(idx).is_some_and(|c| c.contains(iv))
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        IntervalSet::from_intervals(self.intervals.iter().chain(&other.intervals).copied())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["lo", "hi"])?;
        for iv in &self.intervals {
            wr.write_record([iv.lo.to_string(), iv.hi.to_string()])?;
        }
        wr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut out = Vec::new();
        for rec in rd.deserialize() {
            let (lo, hi): (f64, f64) = rec?;
            if lo > hi {
                return Err(Error::InvalidArgument(format!("reversed interval [{lo}, {hi}]")));
            }
            out.push(Interval::new(lo, hi));
        }
        Ok(IntervalSet::from_intervals(out))
    }
}

/// `C_j` as a merged interval set. Adjacent cells are detected on the exact
/// numerators, so merging is free of rounding.
pub fn intervals(approx: &CantorApprox) -> IntervalSet {
    let d = approx.denominator() as f64;
    let mut runs: Vec<(u128, u128)> = Vec::new();
    for &n in approx.numerators() {
        match runs.last_mut() {
            Some((_, end)) if *end == n => *end = n + 1,
            _ => runs.push((n, n + 1)),
        }
    }
    IntervalSet::from_canonical(
        runs.into_iter()
            .map(|(s, e)| Interval::new(s as f64 / d, e as f64 / d))
            .collect(),
    )
}

/// `C_j(h)`: every cell inflated by `h` on both sides, then merged.
pub fn neighborhood(approx: &CantorApprox, h: f64) -> Result<IntervalSet> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("h must be positive, got {h}")));
    }
    let cell = approx.cell();
    Ok(IntervalSet::from_intervals(
        approx
            .points()
            .into_iter()
            .map(|b| Interval::new(b - h, b + cell + h)),
    ))
}

/// Lebesgue measure of `X xor Y` by a sweep over all endpoints.
pub fn symdiff_measure(x: &IntervalSet, y: &IntervalSet) -> f64 {
    // (position, +1 opening / -1 closing, which set)
    let mut events: Vec<(f64, i8, usize)> = Vec::with_capacity(2 * (x.len() + y.len()));
    for (set, s) in [x, y].into_iter().enumerate() {
        for iv in s.intervals() {
            events.push((iv.lo, 1, set));
            events.push((iv.hi, -1, set));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut depth = [0i32; 2];
    let mut prev = f64::NEG_INFINITY;
    let mut total = 0.0;
    for (pos, delta, set) in events {
        if (depth[0] > 0) != (depth[1] > 0) {
            total += pos - prev;
        }
        depth[set] += delta as i32;
        prev = pos;
    }
    total
}

impl IntervalSet {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::{Alphabet, EnsembleKind};
    use proptest::prelude::*;

    fn approx(base: u32, levels: &[&[u32]]) -> CantorApprox {
        let levels: Vec<_> = levels
            .iter()
            .map(|d| Alphabet::new(base, d.to_vec()).unwrap())
            .collect();
        CantorApprox::from_level_alphabets(EnsembleKind::II, &levels).unwrap()
    }

    fn set(v: &[(f64, f64)]) -> IntervalSet {
        IntervalSet::from_intervals(v.iter().map(|&(a, b)| Interval::new(a, b)))
    }

    #[test]
    fn middle_third_second_iterate() {
        let c = intervals(&approx(3, &[&[0, 2], &[0, 2]]));
        assert_eq!(c.len(), 4);
        assert!(c.intervals().iter().all(|iv| (iv.len() - 1.0 / 9.0).abs() < 1e-15));
        assert!((c.total_length() - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn adjacency_merges() {
        let full = intervals(&approx(4, &[&[0, 1, 2, 3]]));
        assert_eq!(full.intervals(), &[Interval::new(0.0, 1.0)]);
        let pair = intervals(&approx(3, &[&[0, 1]]));
        assert_eq!(pair.intervals(), &[Interval::new(0.0, 2.0 / 3.0)]);
    }

    #[test]
    fn neighborhood_examples() {
        let a = approx(3, &[&[0, 2]]);
        let n1 = neighborhood(&a, 0.1).unwrap();
        assert_eq!(n1.len(), 2);
        let iv = n1.intervals();
        assert!((iv[0].lo + 0.1).abs() < 1e-15 && (iv[0].hi - (1.0 / 3.0 + 0.1)).abs() < 1e-15);
        assert!((iv[1].lo - (2.0 / 3.0 - 0.1)).abs() < 1e-15 && (iv[1].hi - 1.1).abs() < 1e-15);

        let n2 = neighborhood(&a, 0.2).unwrap();
        assert_eq!(n2.len(), 1);
        assert!((n2.intervals()[0].lo + 0.2).abs() < 1e-15);
        assert!((n2.intervals()[0].hi - 1.2).abs() < 1e-15);

        assert!(neighborhood(&a, 0.0).is_err());
        assert!(neighborhood(&a, -1.0).is_err());
    }

    #[test]
    fn neighborhood_shrinks_to_the_iterate() {
        let a = approx(5, &[&[0, 3], &[1, 4], &[0, 2]]);
        let target = 8.0 / 125.0;
        let tiny = neighborhood(&a, 1e-12).unwrap();
        assert!((tiny.total_length() - target).abs() < 1e-10);
    }

    #[test]
    fn symdiff_examples() {
        let x = set(&[(0.0, 1.0)]);
        assert_eq!(symdiff_measure(&x, &x), 0.0);
        assert!((symdiff_measure(&x, &set(&[(0.0, 0.5)])) - 0.5).abs() < 1e-15);
        assert!((symdiff_measure(&set(&[(0.0, 1.0)]), &set(&[(2.0, 3.0)])) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn symdiff_against_neighborhood() {
        let a = approx(4, &[&[0, 2], &[1, 3], &[0, 3]]);
        let c = intervals(&a);
        for h in [1e-4, 1e-3, 1.0 / 64.0] {
            let n = neighborhood(&a, h).unwrap();
            let d = symdiff_measure(&c, &n);
            assert!(d <= 2.0 * 8.0 * h + 1e-12, "h={h}: {d}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let s = set(&[(0.0, 0.25), (0.5, 1.0 / 3.0 + 0.5)]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("lo,hi\n"));
        assert_eq!(IntervalSet::read_csv(buf.as_slice()).unwrap(), s);
    }

    fn arb_set() -> impl Strategy<Value = IntervalSet> {
        proptest::collection::vec((0.0f64..10.0, 0.0f64..2.0), 0..8)
            .prop_map(|v| IntervalSet::from_intervals(v.into_iter().map(|(a, l)| Interval::new(a, a + l))))
    }

    proptest! {
        #[test]
        fn canonical_form_invariants(s in arb_set()) {
            let iv = s.intervals();
            prop_assert!(iv.windows(2).all(|w| w[0].hi < w[1].lo));
            let sum: f64 = iv.iter().map(Interval::len).sum();
            prop_assert!((sum - s.total_length()).abs() <= 1e-12 * sum.max(1.0));
        }

        #[test]
        fn symdiff_is_a_metric(x in arb_set(), y in arb_set(), z in arb_set()) {
            let dxy = symdiff_measure(&x, &y);
            prop_assert!((dxy - symdiff_measure(&y, &x)).abs() <= 1e-12);
            prop_assert!(symdiff_measure(&x, &x).abs() <= 1e-12);
            prop_assert!(symdiff_measure(&x, &z) <= dxy + symdiff_measure(&y, &z) + 1e-12);
        }

        #[test]
        fn symdiff_matches_inclusion_exclusion(x in arb_set(), y in arb_set()) {
            // |X| + |Y| - 2|X n Y| via pairwise overlaps of disjoint components
            let mut inter = 0.0;
            for a in x.intervals() {
                for b in y.intervals() {
                    inter += (a.hi.min(b.hi) - a.lo.max(b.lo)).max(0.0);
                }
            }
            let expected = x.total_length() + y.total_length() - 2.0 * inter;
            prop_assert!((symdiff_measure(&x, &y) - expected).abs() <= 1e-12);
        }
    }
}
