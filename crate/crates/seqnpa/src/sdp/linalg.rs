//! Small dense linear-algebra helpers (LAPACK-backed, deterministic).

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, SVD, UPLO};

/// Symmetric eigendecomposition of `(a + a^T)/2`, eigenvalues ascending.
pub fn eigh_sym(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let s = (a + &a.t()) * 0.5;
    let (vals, vecs) = s.eigh(UPLO::Lower).expect("eigh failed");
    (vals, vecs)
}

/// Smallest eigenvalue of the symmetrized matrix.
pub fn min_eig(a: &Array2<f64>) -> f64 {
    let (vals, _) = eigh_sym(a);
    vals[0]
}

/// Largest singular value (spectral norm) of the symmetrized matrix.
pub fn sym_op_norm(a: &Array2<f64>) -> f64 {
    let (vals, _) = eigh_sym(a);
    vals.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
}

/// Euclidean projection onto the PSD cone: clip negative eigenvalues.
pub fn psd_project(a: &Array2<f64>) -> Array2<f64> {
    let (vals, vecs) = eigh_sym(a);
    if vals.iter().all(|&v| v >= 0.0) {
        return (a + &a.t()) * 0.5;
    }
    let clipped: Array1<f64> = vals.mapv(|v| v.max(0.0));
    let scaled = &vecs * &clipped; // scales columns
    let out = scaled.dot(&vecs.t());
    (&out + &out.t()) * 0.5
}

/// Thin SVD `a = u diag(s) vt`.
pub fn svd_thin(a: &Array2<f64>) -> (Array2<f64>, Array1<f64>, Array2<f64>) {
    // owned slices can carry degenerate strides the backend rejects
    let a = Array2::from_shape_vec(a.dim(), a.iter().cloned().collect())
        .expect("contiguous rebuild");
    let (u, s, vt) = a.svd(true, true).expect("svd failed");
    (u.unwrap(), s, vt.unwrap())
}

/// Numerical rank given singular values and a relative threshold.
pub fn rank_from_singular(s: &Array1<f64>, rel_tol: f64) -> usize {
    let top = s.iter().cloned().fold(0.0f64, f64::max);
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * top).count()
}

/// Preconditioned conjugate gradient for a symmetric positive semidefinite
/// operator; `b` must lie in the range. Returns the iteration count.
pub fn pcg<F>(
    apply: F,
    b: &[f64],
    x: &mut [f64],
    diag_precond: &[f64],
    rel_tol: f64,
    max_iters: usize,
) -> usize
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        x.fill(0.0);
        return 0;
    }
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z: Vec<f64> = r.iter().zip(diag_precond).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let tol2 = (rel_tol * bnorm) * (rel_tol * bnorm);
    let mut ap = vec![0.0; n];
    // on singular systems CG can stagnate and then drift in floating point;
    // keep the best iterate seen
    let mut best_x = x.to_vec();
    let mut best_rn2 = f64::INFINITY;
    for it in 0..max_iters {
        let rn2: f64 = r.iter().map(|v| v * v).sum();
        if rn2 < best_rn2 {
            best_rn2 = rn2;
            best_x.copy_from_slice(x);
        }
        if rn2 <= tol2 {
            return it;
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            x.copy_from_slice(&best_x);
            return it; // hit the null space; best iterate so far is returned
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag_precond[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rn2: f64 = r.iter().map(|v| v * v).sum();
    if rn2 > best_rn2 {
        x.copy_from_slice(&best_x);
    }
    max_iters
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn psd_projection_clips() {
        let a = array![[1.0, 0.0], [0.0, -2.0]];
        let p = psd_project(&a);
        assert!((p[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(p[(1, 1)].abs() < 1e-14);
        assert!(min_eig(&p) >= -1e-14);
    }

    #[test]
    fn pcg_solves_spd() {
        // simple SPD system
        let a = array![[4.0, 1.0, 0.0], [1.0, 3.0, 0.5], [0.0, 0.5, 2.0]];
        let b = vec![1.0, -2.0, 0.5];
        let mut x = vec![0.0; 3];
        let diag = vec![4.0, 3.0, 2.0];
        pcg(
            |v, out| {
                for i in 0..3 {
                    out[i] = (0..3).map(|j| a[(i, j)] * v[j]).sum();
                }
            },
            &b,
            &mut x,
            &diag,
            1e-12,
            100,
        );
        let mut ax = vec![0.0; 3];
        for i in 0..3 {
            ax[i] = (0..3).map(|j| a[(i, j)] * x[j]).sum();
        }
        for i in 0..3 {
            assert!((ax[i] - b[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn rank_threshold() {
        let s = array![10.0, 1.0, 1e-8];
        assert_eq!(rank_from_singular(&s, 1e-6), 2);
        assert_eq!(rank_from_singular(&s, 1e-10), 3);
    }
}
