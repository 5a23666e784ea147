//! Text formats: edge lists, torus positions, weights and polar points.
//!
//! Edge lists start with a `#` header line carrying `n=<n>`, followed by one
//! `u v` line per edge with 1-based ids, `u < v`, in ascending order.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{GirgError, Result};
use crate::geometry::Positions;
use crate::graph::Graph;
use crate::hyperbolic::PolarPoint;
use crate::model::{Alpha, WeightSequence};

/// Fields of the `# girg ...` header line.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeListHeader {
    pub n: usize,
    pub d: usize,
    pub alpha: Alpha,
    pub beta: f64,
    pub seed: u64,
}

impl EdgeListHeader {
    pub fn line(&self) -> String {
        format!(
            "# girg n={} d={} alpha={} beta={} seed={}",
            self.n, self.d, self.alpha, self.beta, self.seed
        )
    }
}

pub fn write_edge_list<W: Write>(mut w: W, header_line: &str, g: &Graph) -> Result<()> {
    let mut buf = String::with_capacity(64 + 16 * g.num_edges());
    buf.push_str(header_line);
    buf.push('\n');
    for &(u, v) in g.edges() {
        writeln!(buf, "{} {}", u + 1, v + 1).expect("string write");
    }
    w.write_all(buf.as_bytes())?;
    Ok(())
}

fn bad(line_no: usize, msg: impl std::fmt::Display) -> GirgError {
    GirgError::corrupt(format!("line {line_no}: {msg}"))
}

/// Reads an edge list. The vertex count comes from an `n=` header token, or
/// else from the largest id.
pub fn read_edge_list<R: BufRead>(r: R) -> Result<Graph> {
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    let mut max_id = 0usize;
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            for tok in rest.split_whitespace() {
                if let Some(v) = tok.strip_prefix("n=") {
                    n = Some(v.parse().map_err(|_| bad(k + 1, "bad vertex count"))?);
                }
            }
            continue;
        }
        let mut it = t.split_whitespace();
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(bad(k + 1, "expected two vertex ids"));
        };
        let parse = |s: &str| -> Result<u32> {
            match s.parse::<u32>() {
                Ok(0) | Err(_) => Err(bad(k + 1, format!("invalid vertex id {s:?}"))),
                Ok(v) => Ok(v - 1),
            }
        };
        let (u, v) = (parse(a)?, parse(b)?);
        max_id = max_id.max(u.max(v) as usize + 1);
        edges.push((u, v));
    }
    let n = n.unwrap_or(max_id);
    Graph::from_edges(n, edges).map_err(|e| match e {
        GirgError::Usage(m) => GirgError::Corruption(m),
        other => other,
    })
}

fn write_rows<W: Write>(mut w: W, rows: impl Iterator<Item = String>) -> Result<()> {
    let mut buf = String::new();
    for r in rows {
        buf.push_str(&r);
        buf.push('\n');
    }
    w.write_all(buf.as_bytes())?;
    Ok(())
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// One point per line, coordinates separated by spaces.
pub fn write_positions<W: Write>(w: W, p: &Positions) -> Result<()> {
    write_rows(w, p.iter().map(join))
}

fn read_float_rows<R: BufRead>(r: R) -> Result<(usize, Vec<f64>)> {
    let mut width = None;
    let mut values = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let row: Vec<f64> = t
            .split_whitespace()
            .map(|s| s.parse::<f64>().map_err(|_| bad(k + 1, format!("invalid number {s:?}"))))
            .collect::<Result<_>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => return Err(bad(k + 1, "inconsistent column count")),
            _ => {}
        }
        values.extend(row);
    }
    Ok((width.unwrap_or(0), values))
}

pub fn read_positions<R: BufRead>(r: R) -> Result<Positions> {
    let (d, values) = read_float_rows(r)?;
    if values.is_empty() {
        return Err(GirgError::corrupt("no positions"));
    }
    Positions::new(d, values).map_err(|e| GirgError::corrupt(e.to_string()))
}

pub fn write_weights<W: Write>(w: W, ws: &WeightSequence) -> Result<()> {
    write_rows(w, ws.weights().iter().map(|x| x.to_string()))
}

pub fn read_weights<R: BufRead>(r: R) -> Result<WeightSequence> {
    let (width, values) = read_float_rows(r)?;
    if width != 1 {
        return Err(GirgError::corrupt("weights file needs one value per line"));
    }
    WeightSequence::new(values).map_err(|e| GirgError::corrupt(e.to_string()))
}

/// `r phi` per line.
pub fn write_polar<W: Write>(w: W, points: &[PolarPoint]) -> Result<()> {
    write_rows(w, points.iter().map(|p| format!("{} {}", p.r, p.phi)))
}

pub fn read_polar<R: BufRead>(r: R) -> Result<Vec<PolarPoint>> {
    let (width, values) = read_float_rows(r)?;
    if width != 2 {
        return Err(GirgError::corrupt("polar file needs `r phi` lines"));
    }
    values
        .chunks(2)
        .map(|c| PolarPoint::new(c[0], c[1]).map_err(|e| GirgError::corrupt(e.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::from_edges(5, [(0, 3), (1, 2), (2, 4)]).unwrap();
        let h = EdgeListHeader {
            n: 5,
            d: 2,
            alpha: Alpha::Infinite,
            beta: 2.5,
            seed: 7,
        };
        let mut out = Vec::new();
        write_edge_list(&mut out, &h.line(), &g).unwrap();
        let text = String::from_utf8(out.clone()).unwrap();
        assert_eq!(text, "# girg n=5 d=2 alpha=inf beta=2.5 seed=7\n1 4\n2 3\n3 5\n");
        assert_eq!(read_edge_list(&out[..]).unwrap(), g);
    }

    #[test]
    fn edge_list_errors() {
        assert!(matches!(read_edge_list(&b"1 0\n"[..]), Err(GirgError::Corruption(_))));
        assert!(matches!(read_edge_list(&b"1 2 3\n"[..]), Err(GirgError::Corruption(_))));
        assert!(matches!(read_edge_list(&b"1 1\n"[..]), Err(GirgError::Corruption(_))));
        assert!(matches!(read_edge_list(&b"# n=2\n1 3\n"[..]), Err(GirgError::Corruption(_))));
        assert_eq!(read_edge_list(&b"2 3\n"[..]).unwrap().n(), 3);
    }

    #[test]
    fn positions_round_trip_exactly() {
        let p = Positions::new(2, vec![0.1, 0.2, 1.0 / 3.0, 0.999999999999]).unwrap();
        let mut out = Vec::new();
        write_positions(&mut out, &p).unwrap();
        assert_eq!(read_positions(&out[..]).unwrap(), p);
        assert!(read_positions(&b"0.1 0.2\n0.3\n"[..]).is_err());
        assert!(read_positions(&b"1.5\n"[..]).is_err());
    }

    #[test]
    fn polar_and_weights_round_trip() {
        let pts = vec![PolarPoint::new(1.5, 0.25).unwrap(), PolarPoint::new(0.0, 6.0).unwrap()];
        let mut out = Vec::new();
        write_polar(&mut out, &pts).unwrap();
        assert_eq!(read_polar(&out[..]).unwrap(), pts);
        let ws = WeightSequence::new(vec![1.0, 2.5]).unwrap();
        let mut out = Vec::new();
        write_weights(&mut out, &ws).unwrap();
        assert_eq!(read_weights(&out[..]).unwrap(), ws);
    }
}
