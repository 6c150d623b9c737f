use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use super::{Event, LinkStream};
use crate::error::{Error, Result};

/// Non-overlapping binary snapshots of a common width.
///
/// Snapshot `s` covers `[s w, (s+1) w)`. Each snapshot is kept as its sorted
/// edge list; [`SnapshotSequence::adjacency`] gives the dense 0/1 matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotSequence {
    width: f64,
    node_count: usize,
    snapshots: Vec<Vec<(usize, usize)>>,
}

impl SnapshotSequence {
    pub(crate) fn aggregate(stream: &LinkStream, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::arg(format!("snapshot width must be positive, got {width}")));
        }
        let count = (stream.t_max() / width).ceil() as usize;
        let t_max = stream.t_max();
        let snapshots = (0..count)
            .map(|s| {
                let a = s as f64 * width;
                let b = ((s + 1) as f64 * width).min(t_max);
                stream.active_pairs_half_open(a, b)
            })
            .collect();
        Ok(SnapshotSequence { width, node_count: stream.node_count(), snapshots })
    }

    /// Builds a sequence from per-snapshot edge lists, normalizing orientation.
    pub fn from_edge_lists(
        width: f64,
        node_count: usize,
        snapshots: Vec<Vec<(usize, usize)>>,
    ) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::arg(format!("snapshot width must be positive, got {width}")));
        }
        let snapshots = snapshots
            .into_iter()
            .enumerate()
            .map(|(s, edges)| {
                let mut out = Vec::with_capacity(edges.len());
                for (u, v) in edges {
                    if u == v || u >= node_count || v >= node_count {
                        return Err(Error::arg(format!("snapshot {s}: invalid edge ({u}, {v})")));
                    }
                    out.push((u.min(v), u.max(v)));
                }
                out.sort_unstable();
                out.dedup();
                Ok(out)
            })
            .collect::<Result<_>>()?;
        Ok(SnapshotSequence { width, node_count, snapshots })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn edges(&self, s: usize) -> &[(usize, usize)] {
        &self.snapshots[s]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[(usize, usize)]> {
        self.snapshots.iter().map(Vec::as_slice)
    }

    pub fn adjacency(&self, s: usize) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.node_count, self.node_count);
        for &(u, v) in &self.snapshots[s] {
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        a
    }

    /// Link stream where every snapshot edge is active on its whole slot.
    pub fn to_link_stream(&self) -> Result<LinkStream> {
        let t_max = self.len().max(1) as f64 * self.width;
        let events = self.snapshots.iter().enumerate().flat_map(|(s, edges)| {
            let a = s as f64 * self.width;
            let b = (s + 1) as f64 * self.width;
            edges.iter().map(move |&(u, v)| Event::new(a, b, u, v))
        });
        LinkStream::new(self.node_count, t_max, events)
    }
}

/// Maps continuous change times to snapshot indices `floor(τ / w)`, sorted and
/// deduplicated.
pub fn project_changepoints(times: &[f64], width: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = times.iter().map(|&t| (t / width).floor().max(0.0) as usize).collect();
    idx.sort_unstable();
    idx.dedup();
    idx
}

/// Dense CSV blocks, one per snapshot, separated by blank lines, preceded by
/// a `# w=<width>` comment.
pub fn write_snapshots<W: Write>(seq: &SnapshotSequence, mut out: W) -> Result<()> {
    writeln!(out, "# w={}", seq.width)?;
    let n = seq.node_count;
    for s in 0..seq.len() {
        if s > 0 {
            writeln!(out)?;
        }
        let a = seq.adjacency(s);
        for i in 0..n {
            let row: Vec<&str> = (0..n).map(|j| if a[(i, j)] != 0.0 { "1" } else { "0" }).collect();
            writeln!(out, "{}", row.join(","))?;
        }
    }
    Ok(())
}

pub fn read_snapshots<R: BufRead>(input: R) -> Result<SnapshotSequence> {
    let mut width = None;
    let mut blocks: Vec<Vec<Vec<u8>>> = vec![Vec::new()];
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(w) = comment.trim().strip_prefix("w=") {
                let w: f64 = w.trim().parse().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("bad width `{w}`"),
                })?;
                width = Some(w);
            }
            continue;
        }
        if trimmed.is_empty() {
            if !blocks.last().is_some_and(Vec::is_empty) {
                blocks.push(Vec::new());
            }
            continue;
        }
        let row = trimmed
            .split(',')
            .map(|c| match c.trim() {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                other => Err(Error::Parse { line: lineno, message: format!("non-binary entry `{other}`") }),
            })
            .collect::<Result<Vec<_>>>()?;
        blocks.last_mut().unwrap().push(row);
    }
    if blocks.last().is_some_and(Vec::is_empty) {
        blocks.pop();
    }
    let width = width.ok_or(Error::Parse { line: 1, message: "missing `# w=<width>` header".into() })?;
    let n = blocks.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(Error::Parse { line: 1, message: "no snapshots".into() });
    }
    let mut lists = Vec::with_capacity(blocks.len());
    for (s, block) in blocks.iter().enumerate() {
        let bad = |m: String| Error::Parse { line: 0, message: format!("snapshot {s}: {m}") };
        if block.len() != n || block.iter().any(|r| r.len() != n) {
            return Err(bad(format!("expected a {n}x{n} matrix")));
        }
        let mut edges = Vec::new();
        for i in 0..n {
            if block[i][i] != 0 {
                return Err(bad(format!("non-zero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                if block[i][j] != block[j][i] {
                    return Err(bad(format!("asymmetric entry ({i}, {j})")));
                }
                if block[i][j] == 1 {
                    edges.push((i, j));
                }
            }
        }
        lists.push(edges);
    }
    SnapshotSequence::from_edge_lists(width, n, lists)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkstream::tests::dyadic_stream;
    use proptest::prelude::*;

    fn cycle() -> LinkStream {
        LinkStream::new(
            3,
            3.0,
            [Event::new(0., 1., 0, 1), Event::new(1., 2., 1, 2), Event::new(2., 3., 0, 2)],
        )
        .unwrap()
    }

    #[test]
    fn aggregation_examples() {
        let s = cycle().aggregate_snapshots(1.0).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.edges(0), &[(0, 1)]);
        assert_eq!(s.edges(1), &[(1, 2)]);
        assert_eq!(s.edges(2), &[(0, 2)]);
        let s = cycle().aggregate_snapshots(3.0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.edges(0), &[(0, 1), (0, 2), (1, 2)]);
        let e = LinkStream::empty(4, 10.0).unwrap().aggregate_snapshots(4.0).unwrap();
        assert_eq!(e.len(), 3);
        assert!(e.iter().all(|x| x.is_empty()));
        assert!(cycle().aggregate_snapshots(0.0).is_err());
    }

    #[test]
    fn adjacency_is_symmetric_binary() {
        let s = cycle().aggregate_snapshots(3.0).unwrap();
        let a = s.adjacency(0);
        assert_eq!(a, a.transpose());
        assert!((0..3).all(|i| a[(i, i)] == 0.0));
        assert_eq!(a.sum(), 6.0);
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_changepoints(&[88.0], 4.0), vec![22]);
        assert_eq!(project_changepoints(&[0.0], 3.7), vec![0]);
        assert_eq!(project_changepoints(&[100.0, 200.0], 4.0), vec![25, 50]);
        assert_eq!(project_changepoints(&[9.0, 8.5], 4.0), vec![2]);
    }

    #[test]
    fn export_round_trip() {
        let s = cycle().aggregate_snapshots(1.0).unwrap();
        let mut buf = Vec::new();
        write_snapshots(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# w=1\n0,1,0\n1,0,0\n0,0,0\n\n"));
        assert_eq!(read_snapshots(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let text = "# w=2\n0,1\n0,0\n";
        assert!(read_snapshots(text.as_bytes()).is_err());
    }

    #[test]
    fn snapshot_stream_round_trip() {
        let s = cycle().aggregate_snapshots(1.0).unwrap();
        let back = s.to_link_stream().unwrap().aggregate_snapshots(1.0).unwrap();
        assert_eq!(back, s);
    }

    proptest! {
        #[test]
        fn snapshot_matches_half_open_footprint(s in dyadic_stream(), w in 1u32..4) {
            let w = w as f64;
            let seq = s.aggregate_snapshots(w).unwrap();
            prop_assert_eq!(seq.len(), (s.t_max() / w).ceil() as usize);
            for k in 0..seq.len() {
                let a = k as f64 * w;
                let b = ((k + 1) as f64 * w).min(s.t_max());
                // dyadic times on a 1/4 grid: the closed window up to b - 1/8 sees
                // exactly the events of [a, b)
                let fp = s.footprint(a, b - 0.125, false).unwrap();
                prop_assert_eq!(seq.edges(k), fp.edges());
            }
        }
    }
}
