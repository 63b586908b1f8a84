use std::io::Write;

use serde::Serialize;

use super::EmpiricalMeasure;
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramCell {
    pub q_bin: usize,
    pub p_bin: usize,
    pub mass: f64,
}

/// Mass of each cell `[k/n_q, (k+1)/n_q) × [p_edges[j], p_edges[j+1])`.
/// Momenta outside the edges are dropped.
pub fn histogram(m: &EmpiricalMeasure<f64>, n_q: usize, p_edges: &[f64]) -> Vec<HistogramCell> {
    let n_p = p_edges.len().saturating_sub(1);
    let mut grid = vec![vec![0.0; n_p]; n_q];
    for c in m.components() {
        let j = match p_edges.windows(2).position(|e| c.momentum >= e[0] && c.momentum < e[1]) {
            Some(j) => j,
            None => continue,
        };
        if c.is_point() {
            let k = ((c.q_lo * n_q as f64) as usize).min(n_q - 1);
            grid[k][j] += c.weight;
            continue;
        }
        let len = c.q_hi - c.q_lo;
        for (k, row) in grid.iter_mut().enumerate() {
            let a = (k as f64 / n_q as f64).max(c.q_lo);
            let b = ((k + 1) as f64 / n_q as f64).min(c.q_hi);
            if b > a {
                row[j] += c.weight * (b - a) / len;
            }
        }
    }
    let mut out = Vec::with_capacity(n_q * n_p);
    for (k, row) in grid.into_iter().enumerate() {
        for (j, mass) in row.into_iter().enumerate() {
            out.push(HistogramCell { q_bin: k, p_bin: j, mass });
        }
    }
    out
}

pub fn write_histogram_csv<W: Write>(cells: &[HistogramCell], w: W) -> Result<()> {
    let mut cw = csv::Writer::from_writer(w);
    cw.write_record(["q_bin", "p_bin", "mass"])?;
    for c in cells {
        cw.write_record([c.q_bin.to_string(), c.p_bin.to_string(), format!("{:.16e}", c.mass)])?;
    }
    cw.flush()?;
    Ok(())
}
