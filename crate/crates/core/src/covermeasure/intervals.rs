use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Sorted, pairwise disjoint closed intervals of positive length.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalList {
    intervals: Vec<(f64, f64)>,
}

impl IntervalList {
    /// Normalises arbitrary intervals: sorts, merges overlaps and touching
    /// neighbours, drops empty ones.
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.iter().any(|&(a, b)| !(a.is_finite() && b.is_finite() && a <= b)) {
            return Err(invalid("intervals need finite endpoints with lo <= hi"));
        }
        intervals.retain(|&(a, b)| b > a);
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        Ok(Self::merge_sorted(intervals))
    }

    fn merge_sorted(intervals: Vec<(f64, f64)>) -> Self {
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (a, b) in intervals {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Self { intervals: out }
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, hi)])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// Index range of intervals meeting `(lo, hi)`.
    fn meeting(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let start = self.intervals.partition_point(|&(_, b)| b <= lo);
        let end = self.intervals.partition_point(|&(a, _)| a < hi);
        start..end.max(start)
    }

    /// `Leb(self ∩ [lo, hi])`.
    pub fn measure_in(&self, lo: f64, hi: f64) -> f64 {
        self.intervals[self.meeting(lo, hi)]
            .iter()
            .map(|&(a, b)| (b.min(hi) - a.max(lo)).max(0.0))
            .sum()
    }

    /// `self ∩ [lo, hi]`.
    pub fn clip(&self, lo: f64, hi: f64) -> IntervalList {
        let intervals = self.intervals[self.meeting(lo, hi)]
            .iter()
            .map(|&(a, b)| (a.max(lo), b.min(hi)))
            .filter(|(a, b)| b > a)
            .collect();
        Self { intervals }
    }

    pub fn intersect(&self, other: &IntervalList) -> IntervalList {
        let (x, y) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < x.len() && j < y.len() {
            let lo = x[i].0.max(y[j].0);
            let hi = x[i].1.min(y[j].1);
            if hi > lo {
                out.push((lo, hi));
            }
            if x[i].1 < y[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { intervals: out }
    }

    pub fn union(&self, other: &IntervalList) -> IntervalList {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        all.sort_by(|x, y| x.0.total_cmp(&y.0));
        Self::merge_sorted(all)
    }

    pub fn contains(&self, x: f64) -> bool {
        let i = self.intervals.partition_point(|&(_, b)| b < x);
        i < self.intervals.len() && self.intervals[i].0 <= x
    }

    /// Image under an increasing map.
    pub fn map_increasing(&self, f: impl Fn(f64) -> f64) -> IntervalList {
        Self::merge_sorted(self.intervals.iter().map(|&(a, b)| (f(a), f(b))).filter(|(a, b)| b > a).collect())
    }

    /// CSV with columns `lo,hi`.
    pub fn to_csv(&self) -> String {
        crate::io::csv_table(&["lo", "hi"], self.intervals.iter().map(|&(a, b)| vec![a, b]))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("lo,hi") => {}
            other => return Err(Error::Parse(format!("expected header lo,hi, got {other:?}"))),
        }
        let intervals = lines
            .map(|l| {
                let v = crate::io::parse_real_list(l)?;
                match v.as_slice() {
                    [a, b] => Ok((*a, *b)),
                    _ => Err(Error::Parse(format!("expected two columns in {l:?}"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(intervals)
    }
}

/// `Leb(set ∩ window) / Leb(window)`.
pub fn relative_measure_in_window(set: &IntervalList, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    if !(hi > lo) {
        return Err(invalid("window must have positive length"));
    }
    Ok((set.measure_in(lo, hi) / (hi - lo)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn relative_measure_examples() {
        let w = IntervalList::interval(0.0, 1.0).unwrap();
        assert_eq!(relative_measure_in_window(&w, (0.0, 1.0)).unwrap(), 1.0);
        let s = IntervalList::new(vec![(0.5, 0.75), (0.0, 0.25)]).unwrap();
        assert_eq!(relative_measure_in_window(&s, (0.0, 1.0)).unwrap(), 0.5);
        assert_eq!(relative_measure_in_window(&s, (0.3, 0.45)).unwrap(), 0.0);
        assert!(relative_measure_in_window(&s, (0.3, 0.3)).is_err());
    }

    #[test]
    fn normalisation_and_set_ops() {
        let s = IntervalList::new(vec![(0.2, 0.4), (0.0, 0.1), (0.1, 0.15), (0.3, 0.5), (0.7, 0.7)]).unwrap();
        assert_eq!(s.intervals(), &[(0.0, 0.15), (0.2, 0.5)]);
        let t = IntervalList::new(vec![(0.1, 0.3), (0.45, 0.9)]).unwrap();
        assert_eq!(s.intersect(&t).intervals(), &[(0.1, 0.15), (0.2, 0.3), (0.45, 0.5)]);
        assert_eq!(s.union(&t).intervals(), &[(0.0, 0.9)]);
        assert!(s.contains(0.15) && !s.contains(0.17));
        assert_eq!(s.clip(0.1, 0.3).intervals(), &[(0.1, 0.15), (0.2, 0.3)]);
        assert!(IntervalList::new(vec![(1.0, 0.0)]).is_err());
        let back = IntervalList::from_csv(&s.to_csv()).unwrap();
        assert_eq!(back, s);
    }

    fn arb_list() -> impl Strategy<Value = IntervalList> {
        proptest::collection::vec((0.0f64..1.0, 0.0f64..0.1), 0..30)
            .prop_map(|v| IntervalList::new(v.into_iter().map(|(a, l)| (a, a + l)).collect()).unwrap())
    }

    proptest! {
        #[test]
        fn inclusion_exclusion(a in arb_list(), b in arb_list()) {
            let lhs = a.union(&b).measure() + a.intersect(&b).measure();
            prop_assert!((lhs - a.measure() - b.measure()).abs() < 1e-12);
        }

        #[test]
        fn window_measure_matches_clip(a in arb_list(), lo in 0.0f64..1.0, len in 0.001f64..0.5) {
            let hi = lo + len;
            prop_assert!((a.measure_in(lo, hi) - a.clip(lo, hi).measure()).abs() < 1e-12);
            let r = relative_measure_in_window(&a, (lo, hi)).unwrap();
            prop_assert!((0.0..=1.0).contains(&r));
        }

        #[test]
        fn linear_pushforward_scales_measure(a in arb_list(), k in 0.1f64..10.0, c in -1.0f64..1.0) {
            let img = a.map_increasing(|x| k * x + c);
            prop_assert!((img.measure() - k * a.measure()).abs() < 1e-10);
        }
    }
}
