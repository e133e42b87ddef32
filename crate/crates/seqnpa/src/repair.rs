//! Geometric repair of near-feasible moment matrices.
//!
//! Pipeline: (1) orthogonal projection onto the affine span of all structural
//! constraints (Hankel consistency, zero entries, linear rows) via a
//! pseudo-inverse of the stacked residual map; (2) mixing towards a strictly
//! feasible point with the smallest weight restoring positive
//! semidefiniteness; (3) renormalization of the leading entry.
//!
//! The feasible set lives inside a proper face of the PSD cone (completeness
//! rows force common null vectors on every feasible matrix), so "strictly
//! feasible" means positive definite *on that face*; `mu` below is the
//! smallest face-restricted eigenvalue, while the raw smallest eigenvalue of
//! any feasible matrix is zero.

use crate::hierarchy::{residual, residual_map_rows, ConstraintSystem, MomentIndex};
use crate::sdp::linalg::{eigh_sym, min_eig, svd_thin, sym_op_norm};
use crate::strategy::{random_strategy, uniform_classical_strategy};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

/// Dense residual map `E` (stacked structural rows over flattened matrix
/// entries) with its singular decomposition, supporting affine projection and
/// the pseudo-inverse operator-norm bound.
pub struct ResidualMap {
    pub nw: usize,
    rows: Vec<Vec<(u32, f64)>>,
    /// Right singular vectors of the retained spectrum, `nsq x rank`.
    v: Array2<f64>,
    /// Retained singular values, descending.
    pub sigma: Vec<f64>,
    /// Operator norm of the pseudo-inverse, `1/sigma_min`.
    pub pinv_op_norm: f64,
}

impl ResidualMap {
    /// Build and factor the map. Memory scales as `rows * nw^2` doubles; this
    /// is intended for the moderate instances the repair pipeline targets.
    pub fn new(idx: &MomentIndex, cs: &ConstraintSystem, rel_rank_tol: f64) -> Result<Self, String> {
        let nw = idx.nw();
        let nsq = nw * nw;
        let rows = residual_map_rows(idx, cs);
        if rows.len() * nsq > 300_000_000 {
            return Err(format!(
                "residual map is {} x {nsq}; too large to factor densely",
                rows.len()
            ));
        }
        let mut e = Array2::<f64>::zeros((rows.len(), nsq));
        for (r, row) in rows.iter().enumerate() {
            for &(c, x) in row {
                e[(r, c as usize)] = x;
            }
        }
        let (_, s, vt) = svd_thin(&e);
        let top = s.iter().cloned().fold(0.0f64, f64::max);
        let rank = s.iter().filter(|&&x| x > rel_rank_tol * top).count();
        let sigma: Vec<f64> = s.iter().take(rank).cloned().collect();
        let v = vt.slice(ndarray::s![..rank, ..]).t().to_owned();
        let pinv_op_norm = 1.0 / sigma[rank - 1];
        Ok(ResidualMap { nw, rows, v, sigma, pinv_op_norm })
    }

    /// Apply `E` to a (symmetrized) matrix; equals the structural residual
    /// stack up to the symmetric coefficient splitting.
    pub fn apply(&self, gamma: &Array2<f64>) -> Vec<f64> {
        let nw = self.nw;
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&(c, x)| {
                        let (i, j) = ((c as usize) / nw, (c as usize) % nw);
                        x * gamma[(i, j)]
                    })
                    .sum()
            })
            .collect()
    }

    /// Orthogonal projection onto `ker E`: subtract the row-space component.
    pub fn project_affine(&self, gamma: &Array2<f64>) -> Array2<f64> {
        let nw = self.nw;
        let flat: Array1<f64> = Array1::from_iter(gamma.iter().cloned());
        let coef = self.v.t().dot(&flat);
        let corr = self.v.dot(&coef);
        let mut out = gamma.clone();
        for i in 0..nw {
            for j in 0..nw {
                out[(i, j)] -= corr[i * nw + j];
            }
        }
        (&out + &out.t()) * 0.5
    }
}

/// A feasible matrix that is positive definite on the feasibility face.
#[derive(Clone, Debug)]
pub struct StrictFeasiblePoint {
    pub gamma: Array2<f64>,
    /// Smallest eigenvalue on the orthogonal complement of the common null
    /// space (the feasibility face).
    pub mu: f64,
    /// Raw smallest eigenvalue; structurally zero for every feasible matrix.
    pub raw_min_eig: f64,
    pub null_dim: usize,
    pub face_dim: usize,
    pub samples: usize,
    pub seed: u64,
    /// Mixing weights (random average, uniform classical).
    pub weights: (f64, f64),
}

/// Default dilation dimensions for sampling: twice the answer alphabet per
/// subsystem.
pub fn default_dims(answers: &[usize]) -> (usize, Vec<usize>) {
    (2 * answers[0], answers[1..].iter().map(|&a| 2 * a).collect())
}

/// Build a strictly feasible point by averaging seeded random strategy
/// moments and mixing 50/50 with the uniform classical strategy. Retries with
/// doubled sample counts if the face-restricted eigenvalue floor is not met.
pub fn strict_feasible(
    idx: &MomentIndex,
    samples: usize,
    seed: u64,
) -> Result<StrictFeasiblePoint, String> {
    let (d_sys, d_anc) = default_dims(&idx.n_answers);
    let nw = idx.nw();
    let classical =
        uniform_classical_strategy(&idx.n_answers, &idx.n_questions, d_sys, &d_anc)
            .moment_matrix(&idx.words, 0.0);
    let mut n_samples = samples.max(1);
    for _attempt in 0..3 {
        let mut avg = Array2::<f64>::zeros((nw, nw));
        for t in 0..n_samples {
            let s = random_strategy(
                &idx.n_answers,
                &idx.n_questions,
                d_sys,
                &d_anc,
                seed.wrapping_add(t as u64),
            );
            avg = avg + s.moment_matrix(&idx.words, 0.0);
        }
        avg.mapv_inplace(|v| v / n_samples as f64);
        let gamma = (&avg + &classical) * 0.5;
        let (vals, _) = eigh_sym(&gamma);
        let top = vals.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
        let null_dim = vals.iter().filter(|&&v| v < 1e-10 * top).count();
        let mu = vals[null_dim];
        if mu >= 1e-6 {
            return Ok(StrictFeasiblePoint {
                gamma,
                mu,
                raw_min_eig: vals[0],
                null_dim,
                face_dim: nw - null_dim,
                samples: n_samples,
                seed,
                weights: (0.5, 0.5),
            });
        }
        n_samples *= 2;
    }
    Err("could not reach the face-restricted eigenvalue floor; increase samples".into())
}

/// Mix towards the strict point with the smallest weight that restores
/// positive semidefiniteness: `t = delta / (mu + delta)` with
/// `delta = max(0, -lambda_min)`.
pub fn mix_to_psd(
    gamma: &Array2<f64>,
    strict: &StrictFeasiblePoint,
) -> (Array2<f64>, f64) {
    let lm = min_eig(gamma);
    let delta = (-lm).max(0.0);
    let t = delta / (strict.mu + delta);
    let mixed = gamma.mapv(|v| v * (1.0 - t)) + strict.gamma.mapv(|v| v * t);
    (mixed, t)
}

/// Rescale so the leading (identity-word) entry is exactly one. Refuses
/// matrices whose leading entry collapsed below one half.
pub fn renormalize(gamma: &Array2<f64>) -> Result<Array2<f64>, String> {
    let g00 = gamma[(0, 0)];
    if g00 <= 0.5 {
        return Err(format!("leading entry {g00} <= 1/2; repair input too degenerate"));
    }
    Ok(gamma.mapv(|v| v / g00))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepairReport {
    pub residual_before: f64,
    pub residual_after: f64,
    /// Spectral-norm distances moved per stage and in total.
    pub d_project: f64,
    pub d_mix: f64,
    pub d_renormalize: f64,
    pub d_total: f64,
    pub t_mix: f64,
    pub min_eig_input: f64,
    pub min_eig_projected: f64,
    pub min_eig_output: f64,
    /// `||E^+||_op`, and whether `d_project <= ||E^+||_op * ||E gamma||` held.
    pub pinv_op_norm: f64,
    pub projection_bound_ok: bool,
    /// Eigenvalue drifts stayed within stage distances (Weyl).
    pub weyl_ok: bool,
    /// Distance moved by a second repair pass on the output.
    pub idempotence_drift: f64,
}

fn repair_once(
    gamma: &Array2<f64>,
    emap: &ResidualMap,
    strict: &StrictFeasiblePoint,
    idx: &MomentIndex,
    cs: &ConstraintSystem,
) -> Result<(Array2<f64>, RepairReport), String> {
    let g00 = gamma[(0, 0)];
    if !(0.9..=1.1).contains(&g00) {
        return Err(format!("leading entry {g00} outside [0.9, 1.1]"));
    }
    if strict.raw_min_eig < -1e-8 {
        return Err(format!(
            "strict point is not PSD (min eig {:.2e})",
            strict.raw_min_eig
        ));
    }
    let (_, res_before) = residual(idx, cs, gamma);
    let evec = emap.apply(gamma);
    let enorm = evec.iter().map(|v| v * v).sum::<f64>().sqrt();
    let min_in = min_eig(gamma);
    let g1 = emap.project_affine(gamma);
    let d1 = sym_op_norm(&(gamma - &g1));
    let bound_ok = d1 <= emap.pinv_op_norm * enorm + 1e-9;
    let min_proj = min_eig(&g1);
    let (g2, t) = mix_to_psd(&g1, strict);
    let d2 = sym_op_norm(&(&g1 - &g2));
    let g3 = renormalize(&g2)?;
    let d3 = sym_op_norm(&(&g2 - &g3));
    let d_total = sym_op_norm(&(gamma - &g3));
    let min_out = min_eig(&g3);
    let (_, res_after) = residual(idx, cs, &g3);
    let min_mix = min_eig(&g2);
    let weyl_ok = (min_proj - min_in).abs() <= d1 + 1e-9
        && (min_mix - min_proj).abs() <= d2 + 1e-9
        && (min_out - min_mix).abs() <= d3 + 1e-9;
    let report = RepairReport {
        residual_before: res_before,
        residual_after: res_after,
        d_project: d1,
        d_mix: d2,
        d_renormalize: d3,
        d_total,
        t_mix: t,
        min_eig_input: min_in,
        min_eig_projected: min_proj,
        min_eig_output: min_out,
        pinv_op_norm: emap.pinv_op_norm,
        projection_bound_ok: bound_ok,
        weyl_ok,
        idempotence_drift: f64::NAN,
    };
    Ok((g3, report))
}

/// Run the full pipeline and measure idempotence with a second pass.
pub fn repair(
    gamma: &Array2<f64>,
    emap: &ResidualMap,
    strict: &StrictFeasiblePoint,
    idx: &MomentIndex,
    cs: &ConstraintSystem,
) -> Result<(Array2<f64>, RepairReport), String> {
    let (g3, mut report) = repair_once(gamma, emap, strict, idx, cs)?;
    let (_, second) = repair_once(&g3, emap, strict, idx, cs)?;
    report.idempotence_drift = second.d_total;
    Ok((g3, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game;
    use crate::hierarchy::{constraints, index_for_game, DEFAULT_MAX_WORDS};
    use crate::words::LevelScheme;

    fn setup() -> (MomentIndex, ConstraintSystem) {
        let idx = index_for_game(&game::chsh(), &LevelScheme::Full(1), DEFAULT_MAX_WORDS)
            .unwrap();
        let cs = constraints(&idx);
        (idx, cs)
    }

    #[test]
    fn strict_point_structure() {
        let (idx, cs) = setup();
        let sp = strict_feasible(&idx, 24, 100).unwrap();
        // known face of this instance: dimension 9 (the commuting span)
        assert_eq!(sp.face_dim, 9, "null {} of {}", sp.null_dim, idx.nw());
        assert!(sp.mu > 0.05, "mu {}", sp.mu);
        assert!(sp.raw_min_eig > -1e-12);
        let (_, norm) = residual(&idx, &cs, &sp.gamma);
        assert!(norm < 1e-10, "strict point residual {norm}");
    }

    #[test]
    fn projection_restores_feasibility() {
        let (idx, cs) = setup();
        let emap = ResidualMap::new(&idx, &cs, 1e-9).unwrap();
        let s = random_strategy(&[2, 2], &[2, 2], 4, &[4], 42);
        let gamma = s.moment_matrix(&idx.words, 1e-3);
        let (_, before) = residual(&idx, &cs, &gamma);
        assert!(before > 1e-5);
        let g1 = emap.project_affine(&gamma);
        let (_, after) = residual(&idx, &cs, &g1);
        assert!(after < 1e-10, "projected residual {after}");
    }

    #[test]
    fn full_pipeline() {
        let (idx, cs) = setup();
        let emap = ResidualMap::new(&idx, &cs, 1e-9).unwrap();
        let sp = strict_feasible(&idx, 24, 100).unwrap();
        let s = random_strategy(&[2, 2], &[2, 2], 4, &[4], 42);
        let gamma = s.moment_matrix(&idx.words, 1e-3);
        let (g3, rep) = repair(&gamma, &emap, &sp, &idx, &cs).unwrap();
        assert!(rep.residual_after < 1e-9, "residual {}", rep.residual_after);
        assert!(rep.min_eig_output > -1e-10);
        assert!((g3[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(rep.projection_bound_ok);
        assert!(rep.weyl_ok);
        assert!(rep.idempotence_drift <= 1e-9, "drift {}", rep.idempotence_drift);
    }

    #[test]
    fn preconditions_enforced() {
        let (idx, cs) = setup();
        let emap = ResidualMap::new(&idx, &cs, 1e-9).unwrap();
        let sp = strict_feasible(&idx, 8, 100).unwrap();
        let s = random_strategy(&[2, 2], &[2, 2], 4, &[4], 42);
        let mut gamma = s.moment_matrix(&idx.words, 0.0);
        gamma[(0, 0)] = 1.5;
        assert!(repair(&gamma, &emap, &sp, &idx, &cs).is_err());
    }
}
