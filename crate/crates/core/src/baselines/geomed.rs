use crate::error::{Error, Result};
use crate::vector::ModelVector;

/// Distances below this are clamped in the Weiszfeld weights.
pub const WEISZFELD_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct GeoMedian {
    pub point: ModelVector,
    pub iterations: usize,
    /// `Σ‖xᵢ − y‖` at the start and after every iteration.
    pub objective_trace: Vec<f64>,
}

pub fn geomed_objective(points: &[ModelVector], y: &ModelVector) -> f64 {
    points.iter().map(|p| p.dist_sq(y).sqrt()).sum()
}

fn coordinate_median(points: &[ModelVector]) -> ModelVector {
    let d = points[0].dim();
    let mut col = Vec::with_capacity(points.len());
    let mut out = ModelVector::zeros(d);
    for i in 0..d {
        col.clear();
        col.extend(points.iter().map(|p| p[i]));
        col.sort_by(f64::total_cmp);
        let m = col.len() / 2;
        out[i] = if col.len() % 2 == 1 {
            col[m]
        } else {
            0.5 * (col[m - 1] + col[m])
        };
    }
    out
}

/// Regularized Weiszfeld iteration for the geometric median, started from the
/// coordinate-wise median. Stops when the step is shorter than `tol` or after
/// `max_iter` iterations.
pub fn geomed_weiszfeld(points: &[ModelVector], tol: f64, max_iter: usize) -> Result<GeoMedian> {
    if points.is_empty() {
        return Err(Error::Config("geometric median of an empty set".into()));
    }
    let d = points[0].dim();
    if let Some(p) = points.iter().find(|p| p.dim() != d) {
        return Err(Error::Dimension {
            expected: d,
            got: p.dim(),
        });
    }
    let mut y = coordinate_median(points);
    let mut trace = vec![geomed_objective(points, &y)];
    let mut iterations = 0;
    while iterations < max_iter {
        let mut num = ModelVector::zeros(d);
        let mut den = 0.0;
        for p in points {
            let w = 1.0 / p.dist_sq(&y).sqrt().max(WEISZFELD_EPS);
            num.axpy(w, p);
            den += w;
        }
        let next = num.scale(1.0 / den);
        let step = next.dist_sq(&y).sqrt();
        let obj = geomed_objective(points, &next);
        iterations += 1;
        // rounding can nudge the objective up at convergence; keep the better point
        if obj > trace[trace.len() - 1] {
            trace.push(trace[trace.len() - 1]);
            break;
        }
        y = next;
        trace.push(obj);
        if step < tol {
            break;
        }
    }
    Ok(GeoMedian {
        point: y,
        iterations,
        objective_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalars(xs: &[f64]) -> Vec<ModelVector> {
        xs.iter().map(|&x| ModelVector::from_vec(vec![x])).collect()
    }

    #[test]
    fn symmetric_scalars() {
        let m = geomed_weiszfeld(&scalars(&[-1.0, 0.0, 1.0]), 1e-12, 1000).unwrap();
        assert!(m.point[0].abs() < 1e-12);
    }

    #[test]
    fn repeated_point_dominates() {
        let m = geomed_weiszfeld(&scalars(&[0.0, 0.0, 5.0]), 1e-10, 1000).unwrap();
        assert!(m.point[0].abs() < 1e-9);
    }

    #[test]
    fn equilateral_triangle_centroid() {
        let h = 3f64.sqrt() / 2.0;
        let pts = vec![
            ModelVector::from_vec(vec![0.0, 0.0]),
            ModelVector::from_vec(vec![1.0, 0.0]),
            ModelVector::from_vec(vec![0.5, h]),
        ];
        let m = geomed_weiszfeld(&pts, 1e-13, 10_000).unwrap();
        assert!((m.point[0] - 0.5).abs() < 1e-9);
        assert!((m.point[1] - h / 3.0).abs() < 1e-9);
    }

    #[test]
    fn empty_set_rejected() {
        assert!(geomed_weiszfeld(&[], 1e-6, 10).is_err());
    }
}
