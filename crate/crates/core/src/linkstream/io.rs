//! Text formats for link streams and raw contact records.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{Event, LinkStream};
use crate::error::{Error, Result};

/// Writes `alpha,omega,u,v` rows. A leading comment records the node count and
/// the time domain so a round trip preserves isolated nodes and `t_max`.
pub fn write_link_stream<W: Write>(stream: &LinkStream, mut out: W) -> Result<()> {
    writeln!(out, "# node_count={}, t_max={}", stream.node_count(), stream.t_max())?;
    writeln!(out, "alpha,omega,u,v")?;
    for e in stream.events() {
        writeln!(out, "{},{},{},{}", e.alpha, e.omega, e.u, e.v)?;
    }
    Ok(())
}

/// Reads the `alpha,omega,u,v` CSV. Without a `# node_count=..., t_max=...`
/// comment the node count is `max id + 1` and `t_max` the largest `omega`.
pub fn read_link_stream<R: BufRead>(input: R) -> Result<LinkStream> {
    let mut node_count: Option<usize> = None;
    let mut t_max: Option<f64> = None;
    let mut events = Vec::new();
    let mut seen_header = false;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            for kv in comment.split(',') {
                let Some((k, v)) = kv.split_once('=') else { continue };
                let bad = || Error::Parse { line: lineno, message: format!("bad value for `{}`", k.trim()) };
                match k.trim() {
                    "node_count" => node_count = Some(v.trim().parse().map_err(|_| bad())?),
                    "t_max" => t_max = Some(v.trim().parse().map_err(|_| bad())?),
                    _ => {}
                }
            }
            continue;
        }
        if !seen_header {
            seen_header = true;
            let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if cols == ["alpha", "omega", "u", "v"] {
                continue;
            }
            return Err(Error::Parse { line: lineno, message: "expected header `alpha,omega,u,v`".into() });
        }
        let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(Error::Parse { line: lineno, message: format!("expected 4 columns, got {}", cols.len()) });
        }
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse { line: lineno, message: format!("bad time `{s}`") })
        };
        let id = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Parse { line: lineno, message: format!("bad node id `{s}`") })
        };
        events.push(Event::new(num(cols[0])?, num(cols[1])?, id(cols[2])?, id(cols[3])?));
    }
    let n = node_count.unwrap_or_else(|| events.iter().map(|e| e.u.max(e.v) + 1).max().unwrap_or(1));
    let t = t_max.unwrap_or_else(|| events.iter().map(|e| e.omega).fold(0.0, f64::max));
    LinkStream::new(n, t, events)
}

/// Loads SocioPatterns-style contact records `t i j` (whitespace or comma
/// separated, extra columns ignored). Each record becomes the event
/// `[t, t + contact_duration)`; labels are compacted to `0..N` in sorted order
/// (numeric order when every label is an integer).
pub fn load_contacts(path: impl AsRef<Path>, contact_duration: f64) -> Result<LinkStream> {
    parse_contacts(BufReader::new(File::open(path)?), contact_duration)
}

pub fn parse_contacts<R: BufRead>(input: R, contact_duration: f64) -> Result<LinkStream> {
    if !(contact_duration.is_finite() && contact_duration > 0.0) {
        return Err(Error::arg(format!("contact duration must be positive, got {contact_duration}")));
    }
    let mut records: Vec<(f64, String, String)> = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> =
            trimmed.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        if records.is_empty() && cols.first() == Some(&"t") {
            continue;
        }
        if cols.len() < 3 {
            return Err(Error::Parse { line: lineno, message: format!("expected `t i j`, got `{trimmed}`") });
        }
        let t: f64 = cols[0]
            .parse()
            .map_err(|_| Error::Parse { line: lineno, message: format!("bad timestamp `{}`", cols[0]) })?;
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Parse { line: lineno, message: format!("negative or non-finite timestamp {t}") });
        }
        if cols[1] == cols[2] {
            return Err(Error::Parse { line: lineno, message: format!("self-contact on `{}`", cols[1]) });
        }
        records.push((t, cols[1].to_string(), cols[2].to_string()));
    }
    if records.is_empty() {
        return Err(Error::Parse { line: 0, message: "no records".into() });
    }
    let labels: BTreeSet<&str> = records.iter().flat_map(|(_, a, b)| [a.as_str(), b.as_str()]).collect();
    let mut labels: Vec<&str> = labels.into_iter().collect();
    if labels.iter().all(|l| l.parse::<i64>().is_ok()) {
        labels.sort_by_key(|l| l.parse::<i64>().unwrap());
    }
    let ids: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
    let index = |l: &str| ids[l];
    let events: Vec<Event> = records
        .iter()
        .map(|(t, a, b)| Event::new(*t, t + contact_duration, index(a), index(b)))
        .collect();
    let t_max = events.iter().map(|e| e.omega).fold(0.0, f64::max);
    LinkStream::new(labels.len(), t_max, events)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn link_stream_round_trip() {
        let s = LinkStream::new(5, 3.5, [Event::new(0.1, 1.3, 0, 1), Event::new(1.0, 2.0, 3, 1)]).unwrap();
        let mut buf = Vec::new();
        write_link_stream(&s, &mut buf).unwrap();
        assert_eq!(read_link_stream(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn link_stream_without_meta() {
        let text = "alpha,omega,u,v\n0,1,0,1\n1,2.5,1,2\n";
        let s = read_link_stream(text.as_bytes()).unwrap();
        assert_eq!(s.node_count(), 3);
        assert_eq!(s.t_max(), 2.5);
    }

    #[test]
    fn link_stream_errors() {
        assert!(matches!(read_link_stream("a,b\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
        let text = "alpha,omega,u,v\n0,1,0,1\n0,x,0,1\n";
        assert!(matches!(read_link_stream(text.as_bytes()), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn contacts_merge_touching_records() {
        let s = parse_contacts("0 A B\n20 A B\n".as_bytes(), 20.0).unwrap();
        assert_eq!(s.node_count(), 2);
        assert_eq!(s.events(), &[Event::new(0.0, 40.0, 0, 1)]);
    }

    #[test]
    fn contacts_compact_ids() {
        let s = parse_contacts("t,i,j\n0,17,3\n20,3,1200\n40,17,1200\n".as_bytes(), 20.0).unwrap();
        assert_eq!(s.node_count(), 3);
        // numeric sort: 3 -> 0, 17 -> 1, 1200 -> 2
        assert_eq!(s.events()[0], Event::new(0.0, 20.0, 0, 1));
        assert_eq!(s.events()[1], Event::new(20.0, 40.0, 0, 2));
    }

    #[test]
    fn contacts_errors() {
        let err = parse_contacts("".as_bytes(), 20.0).unwrap_err();
        assert!(err.to_string().contains("no records"));
        let err = parse_contacts("0 a b\n-5 a b\n".as_bytes(), 20.0).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_contacts("0 a\n".as_bytes(), 20.0).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(parse_contacts("0 a b\n".as_bytes(), 0.0).is_err());
    }
}
