use crate::error::{Error, Result};
use crate::vector::ModelVector;

/// Krum selection: each candidate is scored by the summed squared distance
/// to its `Q − b − 2` nearest other candidates, and the lowest score wins
/// (ties to the lowest index). Returns the winning index.
pub fn krum_select(candidates: &[ModelVector], assumed_faulty: usize) -> Result<usize> {
    let q = candidates.len();
    if q < assumed_faulty + 3 {
        return Err(Error::Config(format!(
            "krum needs Q - b - 2 >= 1 (Q = {q}, b = {assumed_faulty})"
        )));
    }
    let neighbours = q - assumed_faulty - 2;
    let mut dist = vec![0.0; q * q];
    for i in 0..q {
        for j in i + 1..q {
            let d = candidates[i].dist_sq(&candidates[j]);
            dist[i * q + j] = d;
            dist[j * q + i] = d;
        }
    }
    let mut best = 0;
    let mut best_score = f64::INFINITY;
    let mut row = Vec::with_capacity(q - 1);
    for i in 0..q {
        row.clear();
        row.extend((0..q).filter(|&j| j != i).map(|j| dist[i * q + j]));
        row.sort_by(f64::total_cmp);
        let score: f64 = row[..neighbours].iter().sum();
        if score < best_score {
            best = i;
            best_score = score;
        }
    }
    Ok(best)
}
