//! Standard-form SDP data model shared by the assembler, the solver, and the
//! SDPA interop layer.
//!
//! Problem shape:
//!
//! ```text
//! maximize   objective . z
//! subject to eq z = rhs
//!            S(z) >= 0   (PSD), where S(z)[i,j] = z_v for (i,j) in var_entries[v]
//! ```
//!
//! Every matrix position is covered by exactly one variable or is fixed to
//! zero; this makes `S* S` diagonal with the per-variable entry counts, which
//! the solver exploits.

pub mod linalg;
pub mod sdpa;
pub mod solver;

use ndarray::Array2;

/// Compressed sparse row matrix; only products are needed.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub rows: usize,
    pub cols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<u32>,
    pub data: Vec<f64>,
}

impl CsrMatrix {
    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[a..b], &self.data[a..b])
    }

    /// `out = A x`
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            let mut s = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                s += v * x[*c as usize];
            }
            out[r] = s;
        }
    }

    /// `out = A^T x`
    pub fn rmatvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        out.fill(0.0);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            let xr = x[r];
            if xr != 0.0 {
                for (c, v) in cols.iter().zip(vals) {
                    out[*c as usize] += v * xr;
                }
            }
        }
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }
}

/// A structured SDP in the entry-partition standard form.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    /// Side length of the PSD matrix.
    pub n: usize,
    /// Matrix positions (full matrix, both symmetric halves) carried by each
    /// variable.
    pub var_entries: Vec<Vec<(u32, u32)>>,
    /// Positions fixed to zero (not covered by any variable).
    pub fixed_zero: Vec<(u32, u32)>,
    /// Equality constraint rows over the variables.
    pub eq: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Linear objective, to be maximized.
    pub objective: Vec<f64>,
    /// Optional human-readable variable names (not serialized to SDPA).
    pub var_labels: Vec<String>,
}

impl SdpProblem {
    pub fn nvars(&self) -> usize {
        self.var_entries.len()
    }

    /// Per-variable entry counts, the diagonal of `S* S`.
    pub fn entry_counts(&self) -> Vec<f64> {
        self.var_entries.iter().map(|e| e.len() as f64).collect()
    }

    /// Scatter variables into the structured matrix `S(z)`.
    pub fn matrix_from_vars(&self, z: &[f64]) -> Array2<f64> {
        assert_eq!(z.len(), self.nvars());
        let mut m = Array2::zeros((self.n, self.n));
        for (v, entries) in self.var_entries.iter().enumerate() {
            for &(i, j) in entries {
                m[(i as usize, j as usize)] = z[v];
            }
        }
        m
    }

    /// Adjoint scatter: per-variable sums of matrix entries, `S*(X)`.
    pub fn gather(&self, x: &Array2<f64>) -> Vec<f64> {
        let mut g = vec![0.0; self.nvars()];
        for (v, entries) in self.var_entries.iter().enumerate() {
            for &(i, j) in entries {
                g[v] += x[(i as usize, j as usize)];
            }
        }
        g
    }

    /// Per-variable entry averages of an arbitrary matrix (least-squares
    /// pull-back onto the structure).
    pub fn vars_from_matrix(&self, x: &Array2<f64>) -> Vec<f64> {
        let mut g = self.gather(x);
        for (v, entries) in self.var_entries.iter().enumerate() {
            g[v] /= entries.len() as f64;
        }
        g
    }

    /// Structural sanity: exact entry partition, consistent shapes, finite data.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.n;
        let mut covered = vec![false; n * n];
        let mut mark = |i: u32, j: u32| -> Result<(), String> {
            let (i, j) = (i as usize, j as usize);
            if i >= n || j >= n {
                return Err(format!("entry ({i},{j}) out of range for n={n}"));
            }
            if covered[i * n + j] {
                return Err(format!("entry ({i},{j}) covered twice"));
            }
            covered[i * n + j] = true;
            Ok(())
        };
        for entries in &self.var_entries {
            if entries.is_empty() {
                return Err("variable with no entries".into());
            }
            for &(i, j) in entries {
                mark(i, j)?;
            }
        }
        for &(i, j) in &self.fixed_zero {
            mark(i, j)?;
        }
        if covered.iter().any(|c| !c) {
            return Err("uncovered matrix entry".into());
        }
        // symmetry: each variable covers positions together with their transposes
        for (v, entries) in self.var_entries.iter().enumerate() {
            let set: std::collections::HashSet<(u32, u32)> = entries.iter().copied().collect();
            if !entries.iter().all(|&(i, j)| set.contains(&(j, i))) {
                return Err(format!("variable {v} is not transpose-closed"));
            }
        }
        if self.eq.rows != self.rhs.len() || self.eq.cols != self.nvars() {
            return Err("equality system shape mismatch".into());
        }
        if self.objective.len() != self.nvars() {
            return Err("objective length mismatch".into());
        }
        if self
            .eq
            .data
            .iter()
            .chain(&self.rhs)
            .chain(&self.objective)
            .any(|x| !x.is_finite())
        {
            return Err("non-finite problem data".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SdpProblem {
        // 2x2: diagonal shared variable, off-diagonal variable, eq: z0 = 1
        SdpProblem {
            n: 2,
            var_entries: vec![vec![(0, 0), (1, 1)], vec![(0, 1), (1, 0)]],
            fixed_zero: vec![],
            eq: CsrMatrix { rows: 1, cols: 2, indptr: vec![0, 1], indices: vec![0], data: vec![1.0] },
            rhs: vec![1.0],
            objective: vec![0.0, 1.0],
            var_labels: vec!["d".into(), "o".into()],
        }
    }

    #[test]
    fn scatter_gather() {
        let p = tiny();
        p.validate().unwrap();
        let m = p.matrix_from_vars(&[2.0, 3.0]);
        assert_eq!(m[(0, 0)], 2.0);
        assert_eq!(m[(1, 0)], 3.0);
        assert_eq!(p.gather(&m), vec![4.0, 6.0]);
        assert_eq!(p.vars_from_matrix(&m), vec![2.0, 3.0]);
    }

    #[test]
    fn csr_products() {
        let a = CsrMatrix {
            rows: 2,
            cols: 3,
            indptr: vec![0, 2, 3],
            indices: vec![0, 2, 1],
            data: vec![1.0, -1.0, 2.0],
        };
        let mut y = vec![0.0; 2];
        a.matvec(&[1.0, 2.0, 3.0], &mut y);
        assert_eq!(y, vec![-2.0, 4.0]);
        let mut z = vec![0.0; 3];
        a.rmatvec(&[1.0, 1.0], &mut z);
        assert_eq!(z, vec![1.0, 2.0, -1.0]);
    }

    #[test]
    fn validate_catches_gaps() {
        let mut p = tiny();
        p.var_entries[1].pop();
        assert!(p.validate().is_err());
    }
}
