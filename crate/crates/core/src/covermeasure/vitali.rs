use serde::{Deserialize, Serialize};

use super::intervals::IntervalList;
use crate::error::{Error, Result};

/// The host-parameter footprint of a pre-ball: its time, centre and the
/// windows `W ⊂ V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverWindow {
    pub time: usize,
    pub center: f64,
    pub v: (f64, f64),
    pub w: (f64, f64),
}

impl CoverWindow {
    fn check(&self) -> Result<()> {
        let (v, w, c) = (self.v, self.w, self.center);
        if !(v.0 <= w.0 && w.0 <= c && c <= w.1 && w.1 <= v.1 && w.1 > w.0) {
            return Err(Error::InconsistentWindows(format!(
                "need V ⊇ W ∋ centre with |W| > 0, got V = {v:?}, W = {w:?}, centre {c}"
            )));
        }
        Ok(())
    }
}

fn overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.1.min(b.1) - a.0.max(b.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverSelection {
    /// Selected input indices in selection order.
    pub selected: Vec<usize>,
    /// Selected indices grouped by increasing time.
    pub groups: Vec<(usize, Vec<usize>)>,
    /// `min |W| / |V|` over the selection.
    pub gamma: f64,
    /// Selected `W`s pairwise disjoint (up to shared endpoints).
    pub disjoint: bool,
    /// For each input, a selected window of no larger time whose `W` meets
    /// the input's `W` and whose `V` contains it.
    pub cover_of: Vec<Option<usize>>,
}

impl CoverSelection {
    pub fn covers_all(&self) -> bool {
        self.cover_of.iter().all(Option::is_some)
    }

    pub fn union_w(&self, windows: &[CoverWindow]) -> IntervalList {
        union_of(self.selected.iter().map(|&i| windows[i].w))
    }

    pub fn union_v(&self, windows: &[CoverWindow]) -> IntervalList {
        union_of(self.selected.iter().map(|&i| windows[i].v))
    }

    /// Whether `x` lies in some selected `V`.
    pub fn covers_point(&self, windows: &[CoverWindow], x: f64) -> bool {
        self.selected
            .iter()
            .any(|&i| windows[i].v.0 <= x && x <= windows[i].v.1)
    }
}

pub(crate) fn union_of(it: impl Iterator<Item = (f64, f64)>) -> IntervalList {
    IntervalList::new(it.collect()).expect("windows are validated")
}

/// Greedy maximal disjoint selection.
///
/// Windows are visited by increasing time, then centre, then input index,
/// and kept when their `W` overlaps no kept `W` in positive length. The
/// covering property is then re-checked independently for every input with
/// containment tolerance `rel_tol * |V|`.
pub fn vitali_select(windows: &[CoverWindow], rel_tol: f64) -> Result<CoverSelection> {
    for w in windows {
        w.check()?;
    }
    let mut order: Vec<usize> = (0..windows.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&windows[a], &windows[b]);
        x.time
            .cmp(&y.time)
            .then(x.center.total_cmp(&y.center))
            .then(a.cmp(&b))
    });
    let mut selected: Vec<usize> = Vec::new();
    for &i in &order {
        if selected.iter().all(|&j| overlap(windows[i].w, windows[j].w) <= 0.0) {
            selected.push(i);
        }
    }

    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for &i in &selected {
        match groups.last_mut() {
            Some((t, g)) if *t == windows[i].time => g.push(i),
            _ => groups.push((windows[i].time, vec![i])),
        }
    }

    let mut by_lo: Vec<(f64, f64)> = selected.iter().map(|&i| windows[i].w).collect();
    by_lo.sort_by(|a, b| a.0.total_cmp(&b.0));
    let disjoint = by_lo.windows(2).all(|p| p[0].1 <= p[1].0);

    let cover_of = windows
        .iter()
        .enumerate()
        .map(|(i, wi)| {
            selected.iter().copied().find(|&j| {
                let s = &windows[j];
                let tol = rel_tol * (s.v.1 - s.v.0);
                s.time <= wi.time
                    && (j == i || overlap(wi.w, s.w) > 0.0)
                    && s.v.0 - tol <= wi.w.0
                    && wi.w.1 <= s.v.1 + tol
            })
        })
        .collect();

    let gamma = selected
        .iter()
        .map(|&i| (windows[i].w.1 - windows[i].w.0) / (windows[i].v.1 - windows[i].v.0))
        .fold(f64::INFINITY, f64::min);

    Ok(CoverSelection {
        selected,
        groups,
        gamma,
        disjoint,
        cover_of,
    })
}
