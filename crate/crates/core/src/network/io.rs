//! Plain-text graph files.
//!
//! - Edge list: one `i j` pair per line, 1-based node ids.
//! - Edge covariances: `i j c11 c12 … cdd` per line, the `d×d` covariance in
//!   row-major order. Edges without a line fall back to a default covariance.
//! - Positions: one node per line, whitespace-separated coordinates.
//!
//! Blank lines and lines starting with `#` are ignored everywhere.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};

use super::SensorNetwork;
use crate::{Error, Result};

fn content_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(no, line)| match line {
        Err(e) => Some(Err(Error::from(e))),
        Ok(l) => {
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                None
            } else {
                Some(Ok((no + 1, t.to_string())))
            }
        }
    })
}

fn parse_node(tok: &str, line: usize) -> Result<usize> {
    let id: usize = tok
        .parse()
        .map_err(|_| Error::Config(format!("line {line}: invalid node id `{tok}`")))?;
    if id == 0 {
        return Err(Error::Config(format!("line {line}: node ids are 1-based")));
    }
    Ok(id - 1)
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse()
        .map_err(|_| Error::Config(format!("line {line}: invalid number `{tok}`")))
}

/// Read 1-based `i j` lines into 0-based pairs.
pub fn read_edge_list<R: BufRead>(reader: R) -> Result<Vec<(usize, usize)>> {
    content_lines(reader)
        .map(|l| {
            let (no, text) = l?;
            let toks: Vec<_> = text.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(Error::Config(format!("line {no}: expected `i j`")));
            }
            Ok((parse_node(toks[0], no)?, parse_node(toks[1], no)?))
        })
        .collect()
}

pub fn write_edge_list<W: Write>(mut w: W, edges: &[(usize, usize)]) -> Result<()> {
    for (a, b) in edges {
        writeln!(w, "{} {}", a + 1, b + 1)?;
    }
    Ok(())
}

/// Covariances keyed by the 0-based unordered pair `(min, max)`.
pub fn read_edge_covariances<R: BufRead>(
    reader: R,
    dim: usize,
) -> Result<HashMap<(usize, usize), DMatrix<f64>>> {
    let mut out = HashMap::new();
    for l in content_lines(reader) {
        let (no, text) = l?;
        let toks: Vec<_> = text.split_whitespace().collect();
        if toks.len() != 2 + dim * dim {
            return Err(Error::Config(format!(
                "line {no}: expected `i j` followed by {} covariance entries",
                dim * dim
            )));
        }
        let (i, j) = (parse_node(toks[0], no)?, parse_node(toks[1], no)?);
        let vals = toks[2..]
            .iter()
            .map(|t| parse_f64(t, no))
            .collect::<Result<Vec<_>>>()?;
        out.insert((i.min(j), i.max(j)), DMatrix::from_row_slice(dim, dim, &vals));
    }
    Ok(out)
}

pub fn read_positions<R: BufRead>(reader: R) -> Result<Vec<DVector<f64>>> {
    let pos = content_lines(reader)
        .map(|l| {
            let (no, text) = l?;
            let vals = text
                .split_whitespace()
                .map(|t| parse_f64(t, no))
                .collect::<Result<Vec<_>>>()?;
            Ok(DVector::from_vec(vals))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pos)
}

/// Assemble a network from parsed files; edges missing from `covs` get `default_cov`.
pub fn network_from_parts(
    positions: Vec<DVector<f64>>,
    edges: &[(usize, usize)],
    covs: &HashMap<(usize, usize), DMatrix<f64>>,
    default_cov: &DMatrix<f64>,
) -> Result<SensorNetwork> {
    let edge_cov = edges
        .iter()
        .map(|&(i, j)| covs.get(&(i.min(j), i.max(j))).unwrap_or(default_cov).clone())
        .collect();
    SensorNetwork::new(positions, edges, edge_cov)
}
