//! Small dense helpers: row-major matrices, symmetric eigenvalues, power
//! iteration, Gram-Schmidt.

/// `y = A x` for row-major `A` of shape `rows x cols`.
pub fn matvec(a: &[f64], cols: usize, x: &[f64]) -> Vec<f64> {
    a.chunks_exact(cols)
        .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
        .collect()
}

/// Eigenvalues of a symmetric `n x n` matrix by cyclic Jacobi rotations,
/// sorted ascending.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Largest eigenvalue of the PSD operator `apply` by power iteration.
pub fn power_iteration(dim: usize, apply: impl Fn(&[f64]) -> Vec<f64>, max_iter: usize) -> f64 {
    let mut x = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let y = apply(&x);
        let n = crate::vector::norm(&y);
        if n == 0.0 {
            return 0.0;
        }
        let next = n;
        x = y.into_iter().map(|v| v / n).collect();
        if (next - lambda).abs() <= 1e-13 * next {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Orthonormalizes the rows of a square matrix in place (modified Gram-Schmidt).
pub fn orthonormalize_rows(a: &mut [f64], n: usize) {
    for i in 0..n {
        for j in 0..i {
            let d: f64 = (0..n).map(|k| a[i * n + k] * a[j * n + k]).sum();
            for k in 0..n {
                a[i * n + k] -= d * a[j * n + k];
            }
        }
        let nrm = crate::vector::norm(&a[i * n..(i + 1) * n]);
        for k in 0..n {
            a[i * n + k] /= nrm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_on_known_matrix() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let ev = symmetric_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn power_iteration_matches_jacobi() {
        let a = [4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 1.0];
        let top = power_iteration(3, |x| matvec(&a, 3, x), 10_000);
        let ev = symmetric_eigenvalues(&a, 3);
        assert!((top - ev[2]).abs() < 1e-9);
    }
}
