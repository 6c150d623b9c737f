//! Link streams: interval-stamped undirected links over a fixed node set.
//!
//! Activity intervals are half-open, `[alpha, omega)`. At a grid point the new
//! instantaneous graph takes effect, so the instantaneous graph is
//! right-continuous and constant on every `[t_k, t_{k+1})` of the
//! [`TemporalGrid`].

mod graph;
mod io;
mod snapshot;

pub use graph::StaticGraph;
pub use io::{load_contacts, parse_contacts, read_link_stream, write_link_stream};
pub use snapshot::{project_changepoints, read_snapshots, write_snapshots, SnapshotSequence};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One link `{u, v}` active on `[alpha, omega)`. Stored with `u < v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub alpha: f64,
    pub omega: f64,
    pub u: usize,
    pub v: usize,
}

impl Event {
    pub fn new(alpha: f64, omega: f64, u: usize, v: usize) -> Self {
        Event { alpha, omega, u, v }
    }

    pub fn duration(&self) -> f64 {
        self.omega - self.alpha
    }

    #[inline]
    pub fn is_active_at(&self, t: f64) -> bool {
        self.alpha <= t && t < self.omega
    }

    fn pair(&self) -> (usize, usize) {
        (self.u.min(self.v), self.u.max(self.v))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkStream {
    node_count: usize,
    t_max: f64,
    events: Vec<Event>,
}

impl LinkStream {
    /// Validates raw events, merges overlapping or touching intervals of the
    /// same pair and sorts by `(alpha, omega, u, v)`.
    pub fn new(
        node_count: usize,
        t_max: f64,
        raw_events: impl IntoIterator<Item = Event>,
    ) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::arg("node_count must be positive"));
        }
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::arg(format!("t_max must be positive and finite, got {t_max}")));
        }
        let mut events = Vec::new();
        for (index, e) in raw_events.into_iter().enumerate() {
            let bad = |reason: String| Error::InvalidEvent { index, reason };
            if !(e.alpha.is_finite() && e.omega.is_finite()) {
                return Err(bad("non-finite time".into()));
            }
            if e.alpha >= e.omega {
                return Err(bad(format!("alpha {} >= omega {}", e.alpha, e.omega)));
            }
            if e.alpha < 0.0 {
                return Err(bad(format!("alpha {} < 0", e.alpha)));
            }
            if e.omega > t_max {
                return Err(bad(format!("omega {} > t_max {t_max}", e.omega)));
            }
            if e.u == e.v {
                return Err(bad(format!("self-loop on node {}", e.u)));
            }
            if e.u >= node_count || e.v >= node_count {
                return Err(bad(format!("node id out of range for N={node_count}")));
            }
            let (u, v) = e.pair();
            events.push(Event { u, v, ..e });
        }
        Ok(LinkStream { node_count, t_max, events: merge_intervals(events) })
    }

    pub fn empty(node_count: usize, t_max: f64) -> Result<Self> {
        Self::new(node_count, t_max, std::iter::empty())
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Sorted distinct event endpoints plus `0` and `t_max`.
    pub fn temporal_grid(&self) -> TemporalGrid {
        let mut times = Vec::with_capacity(2 * self.events.len() + 2);
        times.push(0.0);
        times.push(self.t_max);
        for e in &self.events {
            times.push(e.alpha);
            times.push(e.omega);
        }
        times.sort_by(f64::total_cmp);
        times.dedup();
        TemporalGrid { times }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.t_max).contains(&t) {
            return Err(Error::OutOfDomain { t, t_max: self.t_max });
        }
        Ok(())
    }

    /// Graph of links active at `t`, with `alpha <= t < omega`.
    pub fn instantaneous_graph(&self, t: f64) -> Result<StaticGraph> {
        if !(0.0..self.t_max).contains(&t) {
            return Err(Error::OutOfDomain { t, t_max: self.t_max });
        }
        let edges = self.events.iter().filter(|e| e.is_active_at(t)).map(|e| (e.u, e.v));
        Ok(StaticGraph::from_edges(self.node_count, edges))
    }

    /// Footprint over the closed window `[a, b]`.
    ///
    /// Unweighted: an edge is present iff it is active at some `t` in the
    /// window. Weighted: each present edge carries the Lebesgue measure of its
    /// activity inside the window, which is 0 for a degenerate window `a == b`.
    pub fn footprint(&self, a: f64, b: f64, weighted: bool) -> Result<StaticGraph> {
        if a > b {
            return Err(Error::arg(format!("footprint window [{a}, {b}] is reversed")));
        }
        self.check_time(a)?;
        self.check_time(b)?;
        let mut acc: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
        for e in &self.events {
            // closed window meets [alpha, omega)
            if e.alpha <= b && e.omega > a {
                let overlap = (e.omega.min(b) - e.alpha.max(a)).max(0.0);
                *acc.entry((e.u, e.v)).or_insert(0.0) += overlap;
            }
        }
        let node_count = self.node_count;
        if weighted {
            let (edges, weights) = acc.into_iter().unzip();
            Ok(StaticGraph::with_weights(node_count, edges, weights))
        } else {
            Ok(StaticGraph::from_edges(node_count, acc.into_keys()))
        }
    }

    /// Edge set active somewhere in the half-open window `[a, b)`.
    pub(crate) fn active_pairs_half_open(&self, a: f64, b: f64) -> Vec<(usize, usize)> {
        let mut pairs: Vec<_> = self
            .events
            .iter()
            .filter(|e| e.alpha < b && e.omega > a)
            .map(|e| (e.u, e.v))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    /// Instantaneous graph on every grid interval, by a single sweep over the
    /// sorted endpoints. `grid` must be this stream's temporal grid.
    pub(crate) fn interval_graphs(&self, grid: &TemporalGrid) -> Vec<StaticGraph> {
        let mut ends: Vec<&Event> = self.events.iter().collect();
        ends.sort_by(|a, b| a.omega.total_cmp(&b.omega));
        let mut active = std::collections::BTreeSet::new();
        let (mut next_start, mut next_end) = (0, 0);
        let mut out = Vec::with_capacity(grid.interval_count());
        for k in 0..grid.interval_count() {
            let t = grid.times()[k];
            while next_end < ends.len() && ends[next_end].omega <= t {
                active.remove(&(ends[next_end].u, ends[next_end].v));
                next_end += 1;
            }
            while next_start < self.events.len() && self.events[next_start].alpha <= t {
                let e = &self.events[next_start];
                if e.omega > t {
                    active.insert((e.u, e.v));
                }
                next_start += 1;
            }
            out.push(StaticGraph::from_edges(self.node_count, active.iter().copied()));
        }
        out
    }

    /// Time reversal: `[alpha, omega)` becomes `[t_max - omega, t_max - alpha)`.
    ///
    /// The reflection is exact whenever the times are exactly representable
    /// differences (integers, dyadic rationals); otherwise a double reversal
    /// agrees with the original up to one rounding per endpoint.
    pub fn reversed(&self) -> LinkStream {
        let t_max = self.t_max;
        let mut events: Vec<Event> = self
            .events
            .iter()
            .map(|e| Event { alpha: t_max - e.omega, omega: t_max - e.alpha, ..*e })
            .collect();
        events.sort_by(event_order);
        LinkStream { node_count: self.node_count, t_max, events }
    }

    /// Binary snapshots of width `w` over `[s w, (s+1) w)`.
    pub fn aggregate_snapshots(&self, width: f64) -> Result<SnapshotSequence> {
        SnapshotSequence::aggregate(self, width)
    }

    /// Total activity `sum(omega - alpha)`.
    pub fn total_activity(&self) -> f64 {
        self.events.iter().map(Event::duration).sum()
    }
}

fn event_order(a: &Event, b: &Event) -> std::cmp::Ordering {
    a.alpha
        .total_cmp(&b.alpha)
        .then(a.omega.total_cmp(&b.omega))
        .then(a.u.cmp(&b.u))
        .then(a.v.cmp(&b.v))
}

/// Per pair, union of overlapping or touching intervals.
fn merge_intervals(mut events: Vec<Event>) -> Vec<Event> {
    events.sort_by(|a, b| a.pair().cmp(&b.pair()).then(a.alpha.total_cmp(&b.alpha)));
    let mut merged: Vec<Event> = Vec::with_capacity(events.len());
    for e in events {
        match merged.last_mut() {
            Some(last) if last.pair() == e.pair() && e.alpha <= last.omega => {
                last.omega = last.omega.max(e.omega);
            }
            _ => merged.push(e),
        }
    }
    merged.sort_by(event_order);
    merged
}

/// Ordered change times `0 = t_0 < ... < t_m = t_max` of a stream.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalGrid {
    times: Vec<f64>,
}

impl TemporalGrid {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of constant intervals `[t_k, t_{k+1})`.
    pub fn interval_count(&self) -> usize {
        self.times.len() - 1
    }

    pub fn interval(&self, k: usize) -> (f64, f64) {
        (self.times[k], self.times[k + 1])
    }

    /// Index `k` of the interval `[t_k, t_{k+1})` containing `t`; `t_max`
    /// maps to the last interval.
    pub fn locate(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&x| x <= t);
        k.saturating_sub(1).min(self.interval_count() - 1)
    }
}
