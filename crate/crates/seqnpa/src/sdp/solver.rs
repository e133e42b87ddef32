//! Deterministic first-order solver for the entry-partition standard form.
//!
//! Consensus ADMM on
//!
//! ```text
//! minimize  -c.z   subject to  Az = b,  S(z) = X,  X >= 0
//! ```
//!
//! The z-step is an equality-constrained least-squares problem whose normal
//! matrix `S*S` is diagonal (the entry partition), so it reduces to one
//! projected solve with `A (S*S)^-1 A^T`, handled by warm-started, Jacobi
//! preconditioned conjugate gradients. The X-step is a dense PSD projection.
//! All operations are deterministic for fixed inputs.

use super::linalg::{pcg, psd_project};
use super::SdpProblem;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative primal/dual stopping tolerance.
    pub tol: f64,
    /// Outer iteration cap.
    pub max_iters: usize,
    /// Initial augmented-Lagrangian penalty.
    pub rho: f64,
    /// Over-relaxation factor in (1, 2).
    pub alpha: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-7, max_iters: 200_000, rho: 1.0, alpha: 1.6 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Solution {
    /// Objective at the returned variables.
    pub value: f64,
    /// Objective recomputed after re-projecting the returned matrix onto the
    /// affine constraints and clipping negative eigenvalues.
    pub certified_value: f64,
    pub z: Vec<f64>,
    #[serde(skip)]
    pub matrix: Array2<f64>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub eq_residual: f64,
    pub min_eig: f64,
    pub converged: bool,
}

/// Euclidean projection of `z` onto `{ Az = b }` via CG on `A A^T`.
fn project_affine(p: &SdpProblem, z: &[f64], tol: f64) -> Vec<f64> {
    let neq = p.rhs.len();
    let nv = p.nvars();
    let mut az = vec![0.0; neq];
    p.eq.matvec(z, &mut az);
    let resid: Vec<f64> = p.rhs.iter().zip(&az).map(|(b, a)| b - a).collect();
    // diag(A A^T)
    let mut diag = vec![0.0; neq];
    for r in 0..neq {
        let (_, vals) = p.eq.row(r);
        diag[r] = vals.iter().map(|v| v * v).sum::<f64>().max(1e-300);
    }
    let mut mu = vec![0.0; neq];
    pcg(
        |v, out| {
            let mut t = vec![0.0; nv];
            p.eq.rmatvec(v, &mut t);
            p.eq.matvec(&t, out);
        },
        &resid,
        &mut mu,
        &diag,
        tol,
        10 * neq.max(100),
    );
    let mut corr = vec![0.0; nv];
    p.eq.rmatvec(&mu, &mut corr);
    z.iter().zip(&corr).map(|(z, c)| z + c).collect()
}

/// Solve the problem. Deterministic; returns the best iterate even when the
/// iteration cap is hit (`converged = false`).
pub fn solve(p: &SdpProblem, opts: &SolverOptions) -> Result<Solution, String> {
    p.validate()?;
    let n = p.n;
    let nv = p.nvars();
    let neq = p.rhs.len();
    let counts = p.entry_counts();
    let c = &p.objective;
    // diag(G) with G = A M^-1 A^T, the CG preconditioner
    let mut gdiag = vec![0.0; neq];
    for r in 0..neq {
        let (cols, vals) = p.eq.row(r);
        let mut s = 0.0;
        for (ci, v) in cols.iter().zip(vals) {
            s += v * v / counts[*ci as usize];
        }
        gdiag[r] = s.max(1e-300);
    }
    let bnorm = p.rhs.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let cnorm = c.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);

    let mut rho = opts.rho;
    let alpha = opts.alpha;
    let mut z = vec![0.0; nv];
    let mut x = Array2::<f64>::eye(n); // strictly positive start
    let mut u = Array2::<f64>::zeros((n, n));
    let mut lambda = vec![0.0; neq];
    let mut g = vec![0.0; nv];
    let mut rhs_cg = vec![0.0; neq];
    let mut tmp_v = vec![0.0; nv];
    let (mut primal, mut dual, mut eqres) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;
    let mut converged = false;
    let mut prev_sz: Option<Array2<f64>> = None;

    for it in 0..opts.max_iters {
        iterations = it + 1;
        // --- z-step: minimize -c.z + rho/2 ||S(z) - (X - U)||^2 s.t. Az = b
        let v_mat = &x - &u;
        let sv = p.gather(&v_mat);
        for i in 0..nv {
            g[i] = sv[i] + c[i] / rho;
        }
        // rhs for lambda system: A M^-1 g - b
        for i in 0..nv {
            tmp_v[i] = g[i] / counts[i];
        }
        p.eq.matvec(&tmp_v, &mut rhs_cg);
        for r in 0..neq {
            rhs_cg[r] -= p.rhs[r];
        }
        let cg_tol = (opts.tol * 1e-2).clamp(1e-12, 1e-6);
        pcg(
            |v, out| {
                let mut t = vec![0.0; nv];
                p.eq.rmatvec(v, &mut t);
                for i in 0..nv {
                    t[i] /= counts[i];
                }
                p.eq.matvec(&t, out);
            },
            &rhs_cg,
            &mut lambda,
            &gdiag,
            cg_tol,
            2000,
        );
        p.eq.rmatvec(&lambda, &mut tmp_v);
        for i in 0..nv {
            z[i] = (g[i] - tmp_v[i]) / counts[i];
        }
        // --- X-step with over-relaxation
        let sz = p.matrix_from_vars(&z);
        let sz_relaxed = sz.mapv(|v| alpha * v) + x.mapv(|v| (1.0 - alpha) * v);
        let t_mat = &sz_relaxed + &u;
        let x_new = psd_project(&t_mat);
        // --- dual update
        u = &u + &(&sz_relaxed - &x_new);
        // --- residuals (unrelaxed primal)
        let pr_mat = &sz - &x_new;
        primal = pr_mat.iter().map(|v| v * v).sum::<f64>().sqrt()
            / x_new.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        dual = match &prev_sz {
            Some(prev) => {
                let d = (&sz - prev).mapv(|v| v * rho);
                d.iter().map(|v| v * v).sum::<f64>().sqrt() / cnorm
            }
            None => f64::INFINITY,
        };
        prev_sz = Some(sz);
        x = x_new;
        if it % 25 == 24 {
            let mut az = vec![0.0; neq];
            p.eq.matvec(&z, &mut az);
            eqres = az
                .iter()
                .zip(&p.rhs)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                / bnorm;
            if primal < opts.tol && dual < opts.tol && eqres < opts.tol {
                converged = true;
                break;
            }
            // residual balancing keeps the penalty in a useful range
            if primal > 10.0 * dual && dual.is_finite() {
                rho *= 2.0;
                u.mapv_inplace(|v| v / 2.0);
            } else if dual > 10.0 * primal {
                rho /= 2.0;
                u.mapv_inplace(|v| v * 2.0);
            }
        }
    }
    let value = c.iter().zip(&z).map(|(c, z)| c * z).sum();
    // certification pass: tight affine projection, then PSD clip, then
    // recompute the objective from the repaired matrix's entry averages; the
    // projection is kept only if it actually tightens the equality residual
    let z_aff = project_affine(p, &z, 1e-12);
    let eqnorm = |v: &[f64]| -> f64 {
        let mut az = vec![0.0; neq];
        p.eq.matvec(v, &mut az);
        az.iter().zip(&p.rhs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    };
    let z_aff = if eqnorm(&z_aff) < eqnorm(&z) { z_aff } else { z.clone() };
    let m_aff = p.matrix_from_vars(&z_aff);
    let m_psd = psd_project(&m_aff);
    let z_cert = p.vars_from_matrix(&m_psd);
    let certified_value = c.iter().zip(&z_cert).map(|(c, z)| c * z).sum();
    let min_eig = super::linalg::min_eig(&p.matrix_from_vars(&z));
    let matrix = p.matrix_from_vars(&z);
    Ok(Solution {
        value,
        certified_value,
        z,
        matrix,
        iterations,
        primal_residual: primal,
        dual_residual: dual,
        eq_residual: eqres,
        min_eig,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::CsrMatrix;

    /// max z_off subject to diag = 1: a 2x2 correlation matrix, optimum 1.
    #[test]
    fn tiny_correlation() {
        let p = SdpProblem {
            n: 2,
            var_entries: vec![vec![(0, 0)], vec![(1, 1)], vec![(0, 1), (1, 0)]],
            fixed_zero: vec![],
            eq: CsrMatrix {
                rows: 2,
                cols: 3,
                indptr: vec![0, 1, 2],
                indices: vec![0, 1],
                data: vec![1.0, 1.0],
            },
            rhs: vec![1.0, 1.0],
            objective: vec![0.0, 0.0, 1.0],
            var_labels: vec![],
        };
        let sol = solve(&p, &SolverOptions { tol: 1e-9, ..Default::default() }).unwrap();
        assert!(sol.converged);
        assert!((sol.value - 1.0).abs() < 1e-6, "value {}", sol.value);
        assert!((sol.certified_value - 1.0).abs() < 1e-6);
        assert!(sol.min_eig > -1e-7);
    }

    /// Fixed-zero off-diagonal forces the objective to zero.
    #[test]
    fn fixed_zero_respected() {
        let p = SdpProblem {
            n: 2,
            var_entries: vec![vec![(0, 0)], vec![(1, 1)]],
            fixed_zero: vec![(0, 1), (1, 0)],
            eq: CsrMatrix {
                rows: 2,
                cols: 2,
                indptr: vec![0, 1, 2],
                indices: vec![0, 1],
                data: vec![1.0, 1.0],
            },
            rhs: vec![1.0, 0.5],
            objective: vec![1.0, 0.0],
            var_labels: vec![],
        };
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-6);
        assert!(sol.matrix[(0, 1)].abs() < 1e-12);
    }
}
