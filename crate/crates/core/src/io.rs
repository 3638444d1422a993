//! Text formats.
//!
//! Graph: `n m`, then `m` lines `u v [w]` (weight defaults to 1).
//! Partition: one line `v cluster_id` per vertex.
//! Stream: `n`, then lines `+ u v` or `- u v`.
//!
//! Blank lines and lines starting with `#` are ignored on input.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Graph, Partition};
use crate::stream::{Op, StreamUpdate};

fn content_lines(s: &str) -> impl Iterator<Item = (usize, &str)> {
    s.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad {what} {tok:?}"),
    })
}

fn no_trailing<'a>(mut it: impl Iterator<Item = &'a str>, line: usize) -> Result<()> {
    match it.next() {
        None => Ok(()),
        Some(t) => Err(Error::Parse {
            line,
            msg: format!("unexpected token {t:?}"),
        }),
    }
}

pub fn parse_graph(s: &str) -> Result<Graph> {
    let mut lines = content_lines(s);
    let (hl, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty graph file".into(),
    })?;
    let mut t = header.split_whitespace();
    let n: usize = parse_num(t.next(), hl, "vertex count")?;
    let m: usize = parse_num(t.next(), hl, "edge count")?;
    no_trailing(t, hl)?;
    let mut g = Graph::new(n);
    let mut seen = 0;
    for (ln, l) in lines {
        let mut t = l.split_whitespace();
        let u: usize = parse_num(t.next(), ln, "endpoint")?;
        let v: usize = parse_num(t.next(), ln, "endpoint")?;
        let w: f64 = match t.next() {
            Some(tok) => parse_num(Some(tok), ln, "weight")?,
            None => 1.0,
        };
        no_trailing(t, ln)?;
        g.add_edge(u, v, w).map_err(|e| Error::Parse {
            line: ln,
            msg: e.to_string(),
        })?;
        seen += 1;
    }
    if seen != m {
        return Err(Error::Parse {
            line: hl,
            msg: format!("header declares {m} edges, found {seen}"),
        });
    }
    Ok(g)
}

/// Weights are written only when some edge is not of weight 1.
pub fn graph_to_string(g: &Graph) -> String {
    let weighted = !g.is_unweighted();
    let mut out = format!("{} {}\n", g.n(), g.num_edges());
    for e in g.edges() {
        if weighted {
            writeln!(out, "{} {} {}", e.u, e.v, e.w).unwrap();
        } else {
            writeln!(out, "{} {}", e.u, e.v).unwrap();
        }
    }
    out
}

pub fn parse_partition(s: &str) -> Result<Partition> {
    let mut pairs = Vec::new();
    for (ln, l) in content_lines(s) {
        let mut t = l.split_whitespace();
        let v: usize = parse_num(t.next(), ln, "vertex")?;
        let c: usize = parse_num(t.next(), ln, "cluster id")?;
        no_trailing(t, ln)?;
        pairs.push((ln, v, c));
    }
    let n = pairs.len();
    let mut labels = vec![usize::MAX; n];
    for (ln, v, c) in pairs {
        if v >= n {
            return Err(Error::Parse {
                line: ln,
                msg: format!("vertex {v} out of range for {n} lines"),
            });
        }
        if labels[v] != usize::MAX {
            return Err(Error::Parse {
                line: ln,
                msg: format!("vertex {v} listed twice"),
            });
        }
        labels[v] = c;
    }
    Ok(Partition::from_labels(&labels))
}

pub fn partition_to_string(p: &Partition) -> String {
    let mut out = String::new();
    for (v, c) in p.labels().into_iter().enumerate() {
        writeln!(out, "{v} {c}").unwrap();
    }
    out
}

pub fn parse_stream(s: &str) -> Result<(usize, Vec<StreamUpdate>)> {
    let mut lines = content_lines(s);
    let (hl, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty stream file".into(),
    })?;
    let mut t = header.split_whitespace();
    let n: usize = parse_num(t.next(), hl, "vertex count")?;
    no_trailing(t, hl)?;
    let mut ups = Vec::new();
    for (ln, l) in lines {
        let mut t = l.split_whitespace();
        let op = match t.next() {
            Some("+") => Op::Insert,
            Some("-") => Op::Delete,
            other => {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("expected + or -, got {other:?}"),
                })
            }
        };
        let u: usize = parse_num(t.next(), ln, "endpoint")?;
        let v: usize = parse_num(t.next(), ln, "endpoint")?;
        no_trailing(t, ln)?;
        if u >= n || v >= n || u == v {
            return Err(Error::Parse {
                line: ln,
                msg: format!("invalid edge {{{u},{v}}} for n = {n}"),
            });
        }
        ups.push(StreamUpdate { op, u, v });
    }
    Ok((n, ups))
}

pub fn stream_to_string(n: usize, updates: &[StreamUpdate]) -> String {
    let mut out = format!("{n}\n");
    for u in updates {
        let op = match u.op {
            Op::Insert => '+',
            Op::Delete => '-',
        };
        writeln!(out, "{op} {} {}", u.u, u.v).unwrap();
    }
    out
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_string(path: &Path, s: &str) -> Result<()> {
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_graph(path: &Path) -> Result<Graph> {
    parse_graph(&read_to_string(path)?)
}

pub fn write_graph(path: &Path, g: &Graph) -> Result<()> {
    write_string(path, &graph_to_string(g))
}

pub fn read_partition(path: &Path) -> Result<Partition> {
    parse_partition(&read_to_string(path)?)
}

pub fn write_partition(path: &Path, p: &Partition) -> Result<()> {
    write_string(path, &partition_to_string(p))
}

pub fn read_stream(path: &Path) -> Result<(usize, Vec<StreamUpdate>)> {
    parse_stream(&read_to_string(path)?)
}

pub fn write_stream(path: &Path, n: usize, updates: &[StreamUpdate]) -> Result<()> {
    write_string(path, &stream_to_string(n, updates))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_round_trip() {
        let g = Graph::from_edges(4, [(0, 1, 1.0), (2, 2, 0.5), (1, 3, 2.25)]).unwrap();
        let s = graph_to_string(&g);
        assert_eq!(s, "4 3\n0 1 1\n2 2 0.5\n1 3 2.25\n");
        assert_eq!(parse_graph(&s).unwrap(), g);
        let u = Graph::from_pairs(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(graph_to_string(&u), "3 2\n0 1\n1 2\n");
    }

    #[test]
    fn graph_errors() {
        assert!(parse_graph("").is_err());
        assert!(parse_graph("3 2\n0 1\n").is_err());
        assert!(parse_graph("3 1\n0 5\n").is_err());
        assert!(parse_graph("3 1\n0 1 -1\n").is_err());
        assert!(parse_graph("3 1\n0 1 1 1\n").is_err());
        assert!(parse_graph("# comment\n2 1\n\n0 1\n").is_ok());
    }

    #[test]
    fn partition_round_trip() {
        let p = Partition::from_labels(&[0, 1, 0, 2]);
        let s = partition_to_string(&p);
        assert_eq!(parse_partition(&s).unwrap(), p);
        assert!(parse_partition("0 0\n0 1\n").is_err());
        assert!(parse_partition("0 0\n5 1\n").is_err());
    }

    #[test]
    fn stream_round_trip() {
        let ups = vec![StreamUpdate::insert(0, 1), StreamUpdate::delete(1, 0)];
        let s = stream_to_string(3, &ups);
        assert_eq!(s, "3\n+ 0 1\n- 1 0\n");
        assert_eq!(parse_stream(&s).unwrap(), (3, ups));
        assert!(parse_stream("3\n* 0 1\n").is_err());
        assert!(parse_stream("3\n+ 1 1\n").is_err());
    }
}
