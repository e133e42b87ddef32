//! Dilated sequential strategies and their moment matrices.
//!
//! The Hilbert space is `system ⊗ ancilla_2 ⊗ … ⊗ ancilla_k`. Party 1 measures
//! a POVM on the system at the end; party `j >= 2` applies a per-question
//! unitary `U_x^{(j)}` on `system ⊗ ancilla_2 ⊗ … ⊗ ancilla_j` followed by a
//! projective readout of its ancilla. In the non-signaling form the unitary
//! factors as `(I ⊗ V_x) W_j` with a question-independent coupler `W_j`; an
//! optional Hermitian generator per question turns this into the
//! `U_x exp(i eps G_x)` family used to dial in a controlled amount of
//! signaling.

use crate::game::Game;
use crate::words::{Letter, Word};
use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, QR, UPLO};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub type CMat = Array2<C64>;

fn dagger(a: &CMat) -> CMat {
    a.t().mapv(|v| v.conj())
}

/// Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij != C64::new(0.0, 0.0) {
                for p in 0..br {
                    for q in 0..bc {
                        out[(i * br + p, j * bc + q)] = aij * b[(p, q)];
                    }
                }
            }
        }
    }
    out
}

fn ceye(n: usize) -> CMat {
    Array2::eye(n).mapv(|v: f64| C64::new(v, 0.0))
}

fn gaussian_complex(n: usize, rng: &mut ChaCha20Rng) -> CMat {
    Array2::from_shape_fn((n, n), |_| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-random unitary via phase-fixed QR of a complex Ginibre matrix.
pub fn haar_unitary(n: usize, rng: &mut ChaCha20Rng) -> CMat {
    let z = gaussian_complex(n, rng).mapv(|v| v / C64::new(2f64.sqrt(), 0.0));
    let (q, r) = z.qr().expect("qr failed");
    let phases: Vec<C64> = (0..n).map(|i| r[(i, i)] / C64::new(r[(i, i)].norm(), 0.0)).collect();
    let mut q = q;
    for j in 0..n {
        for i in 0..n {
            q[(i, j)] *= phases[j];
        }
    }
    q
}

/// Wishart-distributed density matrix.
pub fn random_density(n: usize, rng: &mut ChaCha20Rng) -> CMat {
    let z = gaussian_complex(n, rng);
    let w = z.dot(&dagger(&z));
    let tr: f64 = (0..n).map(|i| w[(i, i)].re).sum();
    w.mapv(|v| v / C64::new(tr, 0.0))
}

/// Hermitian eigendecomposition with the correct eigenvalue/eigenvector
/// pairing for row-major complex arrays. The backend reads buffers in
/// column-major order, so a C-order Hermitian matrix is seen as its conjugate;
/// feeding the conjugate compensates.
pub fn eigh_herm(a: &CMat) -> (Array1<f64>, CMat) {
    let conj: CMat = a.mapv(|v| v.conj());
    conj.eigh(UPLO::Lower).expect("eigh failed")
}

/// `exp(i t G)` for Hermitian `G`.
pub fn exp_i_hermitian(g: &CMat, t: f64) -> CMat {
    let (vals, vecs): (Array1<f64>, CMat) = eigh_herm(g);
    let n = g.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        d[(i, i)] = C64::new(0.0, t * vals[i]).exp();
    }
    vecs.dot(&d).dot(&dagger(&vecs))
}

fn herm_sqrt(a: &CMat) -> CMat {
    let (vals, vecs): (Array1<f64>, CMat) = eigh_herm(a);
    let n = a.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        d[(i, i)] = C64::new(vals[i].max(0.0).sqrt(), 0.0);
    }
    vecs.dot(&d).dot(&dagger(&vecs))
}

/// Basis-partition projectors splitting dimension `d` into `parts` groups.
fn partition_projectors(d: usize, parts: usize) -> Vec<CMat> {
    (0..parts)
        .map(|a| {
            let mut p = Array2::zeros((d, d));
            for i in 0..d {
                if i * parts / d == a {
                    p[(i, i)] = C64::new(1.0, 0.0);
                }
            }
            p
        })
        .collect()
}

#[derive(Clone)]
pub struct DilatedStrategy {
    pub answers: Vec<usize>,
    pub questions: Vec<usize>,
    /// `[d_system, d_anc_2, ..., d_anc_k]`.
    pub dims: Vec<usize>,
    pub state: CMat,
    /// Party-1 POVM, `povm[x][a]` on the system.
    pub povm: Vec<Vec<CMat>>,
    /// Question-independent couplers `W_j` on `system..anc_j` (index `j-2`).
    pub couplers: Vec<CMat>,
    /// Per-question ancilla rotations `V_x` (index `j-2`, then `x`).
    pub rotations: Vec<Vec<CMat>>,
    /// Ancilla readout projectors (index `j-2`, then answer).
    pub projectors: Vec<Vec<CMat>>,
    /// Optional full per-question unitaries overriding `(I ⊗ V_x) W_j`.
    pub custom_unitaries: Vec<Option<Vec<CMat>>>,
    /// Optional Hermitian signaling generators per party and question.
    pub generators: Option<Vec<Vec<CMat>>>,
}

impl DilatedStrategy {
    pub fn parties(&self) -> usize {
        self.answers.len()
    }

    pub fn full_dim(&self) -> usize {
        self.dims.iter().product()
    }

    fn local_dim(&self, j: usize) -> usize {
        self.dims[..j].iter().product()
    }

    /// Dilation unitary of party `j` (2-based) for question `x` on
    /// `system..anc_j`; `eps` scales the signaling generator.
    pub fn unitary(&self, j: usize, x: usize, eps: f64) -> CMat {
        let base = match &self.custom_unitaries[j - 2] {
            Some(us) => us[x].clone(),
            None => {
                let nrest = self.local_dim(j) / self.dims[j - 1];
                kron(&ceye(nrest), &self.rotations[j - 2][x]).dot(&self.couplers[j - 2])
            }
        };
        match (&self.generators, eps) {
            (Some(gs), e) if e != 0.0 => base.dot(&exp_i_hermitian(&gs[j - 2][x], e)),
            _ => base,
        }
    }

    /// Heisenberg-picture operator of a letter, embedded in the full space.
    pub fn letter_operator(&self, letter: &Letter, eps: f64) -> CMat {
        let j = letter.level as usize;
        let mut f = self.povm[letter.questions[0] as usize][letter.answers[0] as usize].clone();
        for lev in 2..=j {
            let u = self.unitary(lev, letter.questions[lev - 1] as usize, eps);
            let p = &self.projectors[lev - 2][letter.answers[lev - 1] as usize];
            f = dagger(&u).dot(&kron(&f, p)).dot(&u);
        }
        let d = self.full_dim();
        if f.nrows() < d {
            f = kron(&f, &ceye(d / f.nrows()));
        }
        f
    }

    pub fn word_operator(&self, w: &Word, eps: f64) -> CMat {
        let d = self.full_dim();
        match w {
            Word::Zero => Array2::zeros((d, d)),
            Word::Mono(ls) => {
                let mut m = ceye(d);
                for l in ls {
                    m = m.dot(&self.letter_operator(l, eps));
                }
                m
            }
        }
    }

    /// Real part of the Gram matrix `tr(rho W_i^* W_j)` over the given words.
    /// The real part of a feasible Hermitian moment matrix is itself feasible
    /// (all constraint rows have real coefficients) and carries the same
    /// payoff, so only it is returned.
    pub fn moment_matrix(&self, words: &[Word], eps: f64) -> Array2<f64> {
        let d = self.full_dim();
        let sq = herm_sqrt(&self.state);
        let mut cache: HashMap<Letter, CMat> = HashMap::new();
        let mut ops: Vec<CMat> = Vec::with_capacity(words.len());
        for w in words {
            let op = match w {
                Word::Zero => Array2::zeros((d, d)),
                Word::Mono(ls) => {
                    let mut m = ceye(d);
                    for l in ls {
                        let lo = cache
                            .entry(l.clone())
                            .or_insert_with(|| self.letter_operator(l, eps));
                        m = m.dot(lo);
                    }
                    m
                }
            };
            ops.push(op.dot(&sq));
        }
        let n = words.len();
        let mut g = Array2::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let mut s = C64::new(0.0, 0.0);
                for (a, b) in ops[i].iter().zip(ops[j].iter()) {
                    s += a.conj() * b;
                }
                g[(i, j)] = s.re;
                g[(j, i)] = s.re;
            }
        }
        g
    }

    /// Outcome probability for a full answer/question tuple.
    pub fn probability(&self, answers: &[u16], questions: &[u16], eps: f64) -> f64 {
        let k = self.parties();
        let letter = Letter::new(k, answers.to_vec(), questions.to_vec());
        let op = self.letter_operator(&letter, eps);
        let mut s = C64::new(0.0, 0.0);
        for i in 0..op.nrows() {
            for j in 0..op.ncols() {
                s += self.state[(i, j)] * op[(j, i)];
            }
        }
        s.re
    }

    /// Expected payoff of the strategy in a game.
    pub fn score(&self, game: &Game, eps: f64) -> f64 {
        game.payoff_map()
            .iter()
            .map(|((ans, qs), c)| c * self.probability(ans, qs, eps))
            .sum()
    }

    /// Structural invariants: density state, POVM completeness, unitarity,
    /// projective ancilla readouts.
    pub fn validate(&self, tol: f64) -> Result<(), String> {
        let k = self.parties();
        if self.questions.len() != k || self.dims.len() != k {
            return Err("alphabet/dimension arity mismatch".into());
        }
        let d = self.full_dim();
        if self.state.dim() != (d, d) {
            return Err("state dimension mismatch".into());
        }
        let herm_dev: f64 = (&self.state - &dagger(&self.state))
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        if herm_dev > tol {
            return Err(format!("state is not Hermitian (dev {herm_dev:.2e})"));
        }
        let tr: f64 = (0..d).map(|i| self.state[(i, i)].re).sum();
        if (tr - 1.0).abs() > tol {
            return Err(format!("state trace {tr} != 1"));
        }
        let (vals, _): (Array1<f64>, CMat) = eigh_herm(&self.state);
        if vals[0] < -tol {
            return Err(format!("state has negative eigenvalue {}", vals[0]));
        }
        for x in 0..self.questions[0] {
            let mut s: CMat = Array2::zeros((self.dims[0], self.dims[0]));
            for a in 0..self.answers[0] {
                let m = &self.povm[x][a];
                let (mvals, _): (Array1<f64>, CMat) = eigh_herm(m);
                if mvals[0] < -tol {
                    return Err(format!("POVM element ({a}|{x}) not PSD"));
                }
                s = s + m;
            }
            let dev: f64 =
                (&s - &ceye(self.dims[0])).iter().map(|v| v.norm()).fold(0.0, f64::max);
            if dev > tol {
                return Err(format!("POVM for question {x} not complete (dev {dev:.2e})"));
            }
        }
        for j in 2..=k {
            for x in 0..self.questions[j - 1] {
                let u = self.unitary(j, x, 0.0);
                let n = u.nrows();
                let dev: f64 = (&dagger(&u).dot(&u) - &ceye(n))
                    .iter()
                    .map(|v| v.norm())
                    .fold(0.0, f64::max);
                if dev > tol {
                    return Err(format!("party {j} unitary for question {x} (dev {dev:.2e})"));
                }
            }
            let da = self.dims[j - 1];
            let mut s: CMat = Array2::zeros((da, da));
            for p in &self.projectors[j - 2] {
                let dev: f64 =
                    (&p.dot(p) - p).iter().map(|v| v.norm()).fold(0.0, f64::max);
                if dev > tol {
                    return Err(format!("party {j} readout is not projective (dev {dev:.2e})"));
                }
                s = s + p;
            }
            let dev: f64 = (&s - &ceye(da)).iter().map(|v| v.norm()).fold(0.0, f64::max);
            if dev > tol {
                return Err(format!("party {j} readout does not resolve identity (dev {dev:.2e})"));
            }
        }
        if let Some(gs) = &self.generators {
            for (ji, per_x) in gs.iter().enumerate() {
                for (x, g) in per_x.iter().enumerate() {
                    let dev: f64 =
                        (g - &dagger(g)).iter().map(|v| v.norm()).fold(0.0, f64::max);
                    if dev > tol {
                        return Err(format!(
                            "generator for party {} question {x} not Hermitian",
                            ji + 2
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Seeded random non-signaling strategy (Haar couplers/rotations/measurement
/// bases, Wishart state) with seeded Hermitian signaling generators for the
/// eps knob.
pub fn random_strategy(
    answers: &[usize],
    questions: &[usize],
    d_sys: usize,
    d_anc: &[usize],
    seed: u64,
) -> DilatedStrategy {
    let k = answers.len();
    assert_eq!(d_anc.len(), k - 1);
    assert!(d_sys >= answers[0], "system dimension below the answer count");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut dims = vec![d_sys];
    dims.extend_from_slice(d_anc);
    let full: usize = dims.iter().product();
    let state = random_density(full, &mut rng);
    let base = partition_projectors(d_sys, answers[0]);
    let mut povm = Vec::new();
    for _ in 0..questions[0] {
        let u = haar_unitary(d_sys, &mut rng);
        povm.push(base.iter().map(|p| dagger(&u).dot(p).dot(&u)).collect::<Vec<_>>());
    }
    let mut couplers = Vec::new();
    let mut rotations = Vec::new();
    let mut projectors = Vec::new();
    for j in 2..=k {
        let nloc: usize = dims[..j].iter().product();
        couplers.push(haar_unitary(nloc, &mut rng));
        rotations.push(
            (0..questions[j - 1]).map(|_| haar_unitary(dims[j - 1], &mut rng)).collect(),
        );
        projectors.push(partition_projectors(dims[j - 1], answers[j - 1]));
    }
    let generators = Some(
        (2..=k)
            .map(|j| {
                let nloc: usize = dims[..j].iter().product();
                (0..questions[j - 1])
                    .map(|_| {
                        let z = gaussian_complex(nloc, &mut rng);
                        (&z + &dagger(&z)).mapv(|v| v / C64::new(2.0, 0.0))
                    })
                    .collect()
            })
            .collect(),
    );
    DilatedStrategy {
        answers: answers.to_vec(),
        questions: questions.to_vec(),
        dims,
        state,
        povm,
        couplers,
        rotations,
        projectors,
        custom_unitaries: vec![None; k - 1],
        generators,
    }
}

/// The maximally mixed classical strategy: identity couplers and rotations,
/// basis-partition measurements, maximally mixed state.
pub fn uniform_classical_strategy(
    answers: &[usize],
    questions: &[usize],
    d_sys: usize,
    d_anc: &[usize],
) -> DilatedStrategy {
    let k = answers.len();
    let mut dims = vec![d_sys];
    dims.extend_from_slice(d_anc);
    let full: usize = dims.iter().product();
    let state = ceye(full).mapv(|v| v / C64::new(full as f64, 0.0));
    let base = partition_projectors(d_sys, answers[0]);
    let povm = vec![base; questions[0]];
    let mut couplers = Vec::new();
    let mut rotations = Vec::new();
    let mut projectors = Vec::new();
    for j in 2..=k {
        let nloc: usize = dims[..j].iter().product();
        couplers.push(ceye(nloc));
        rotations.push(vec![ceye(dims[j - 1]); questions[j - 1]]);
        projectors.push(partition_projectors(dims[j - 1], answers[j - 1]));
    }
    DilatedStrategy {
        answers: answers.to_vec(),
        questions: questions.to_vec(),
        dims,
        state,
        povm,
        couplers,
        rotations,
        projectors,
        custom_unitaries: vec![None; k - 1],
        generators: None,
    }
}

fn pauli_proj(theta: f64) -> Vec<CMat> {
    // projectors of cos(t) Z + sin(t) X
    let v0 = [(theta * 0.5).cos(), (theta * 0.5).sin()];
    let mut p0 = Array2::zeros((2, 2));
    for i in 0..2 {
        for j in 0..2 {
            p0[(i, j)] = C64::new(v0[i] * v0[j], 0.0);
        }
    }
    let p1 = &ceye(2) - &p0;
    vec![p0, p1]
}

fn controlled_copy(proj: &[CMat]) -> CMat {
    // sum_a P_a ⊗ X^a on qubit ⊗ qubit ancilla
    let x_pow: [CMat; 2] = [
        ceye(2),
        Array2::from_shape_vec(
            (2, 2),
            vec![
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        )
        .unwrap(),
    ];
    let mut u: CMat = Array2::zeros((4, 4));
    for a in 0..2 {
        u = u + kron(&proj[a], &x_pow[a]);
    }
    u
}

/// Tsirelson-optimal CHSH strategy: singlet-correlated qubits, party 1
/// measures at ±pi/4, party 2 reads out 0 / pi/2 via a controlled-copy
/// dilation. Score `cos^2(pi/8)`.
pub fn chsh_optimal() -> DilatedStrategy {
    use std::f64::consts::PI;
    let mut s = uniform_classical_strategy(&[2, 2], &[2, 2], 4, &[2]);
    // system = qubit_1 ⊗ qubit_2, state = |Phi+><Phi+| ⊗ |0><0| on the ancilla
    let mut phi = Array2::zeros((4, 4));
    for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
        phi[(i, j)] = C64::new(0.5, 0.0);
    }
    let mut anc0 = Array2::zeros((2, 2));
    anc0[(0, 0)] = C64::new(1.0, 0.0);
    s.state = kron(&phi, &anc0);
    let b0 = pauli_proj(PI / 4.0);
    let b1 = pauli_proj(-PI / 4.0);
    s.povm = vec![b0, b1]
        .into_iter()
        .map(|pr| pr.into_iter().map(|p| kron(&p, &ceye(2))).collect())
        .collect();
    let a0 = pauli_proj(0.0);
    let a1 = pauli_proj(PI / 2.0);
    let us: Vec<CMat> = [a0, a1]
        .iter()
        .map(|pr| {
            // acts on (qubit_1 ⊗ qubit_2) ⊗ anc: copy qubit 2 in the measurement basis
            kron(&ceye(2), &controlled_copy(pr))
        })
        .collect();
    s.custom_unitaries = vec![Some(us)];
    s
}

/// GHZ strategy attaining the algebraic maximum 4 of the Mermin functional:
/// state `(|000> + i|111>)/sqrt(2)`, question 0 -> X and 1 -> Y for all
/// parties, controlled-copy dilations for parties 2 and 3.
pub fn mermin3_ghz() -> DilatedStrategy {
    let mut s = uniform_classical_strategy(&[2, 2, 2], &[2, 2, 2], 8, &[2, 2]);
    // system = qubit_1 ⊗ qubit_2 ⊗ qubit_3
    let mut psi = Array1::<C64>::zeros(8);
    psi[0] = C64::new(1.0 / 2f64.sqrt(), 0.0);
    psi[7] = C64::new(0.0, 1.0 / 2f64.sqrt());
    let mut rho8: CMat = Array2::zeros((8, 8));
    for i in 0..8 {
        for j in 0..8 {
            rho8[(i, j)] = psi[i] * psi[j].conj();
        }
    }
    let mut anc0: CMat = Array2::zeros((2, 2));
    anc0[(0, 0)] = C64::new(1.0, 0.0);
    s.state = kron(&kron(&rho8, &anc0), &anc0);
    // X and Y eigenprojectors; answer 0 -> eigenvalue +1
    let xy_proj = |x: usize| -> Vec<CMat> {
        let obs: CMat = if x == 0 {
            Array2::from_shape_vec(
                (2, 2),
                vec![
                    C64::new(0.0, 0.0),
                    C64::new(1.0, 0.0),
                    C64::new(1.0, 0.0),
                    C64::new(0.0, 0.0),
                ],
            )
            .unwrap()
        } else {
            Array2::from_shape_vec(
                (2, 2),
                vec![
                    C64::new(0.0, 0.0),
                    C64::new(0.0, -1.0),
                    C64::new(0.0, 1.0),
                    C64::new(0.0, 0.0),
                ],
            )
            .unwrap()
        };
        let (vals, vecs): (Array1<f64>, CMat) = eigh_herm(&obs);
        let mut out = Vec::new();
        for a in 0..2 {
            // a=0 -> +1 eigenvector (largest), a=1 -> -1
            let col = if a == 0 {
                if vals[1] > vals[0] { 1 } else { 0 }
            } else if vals[1] > vals[0] {
                0
            } else {
                1
            };
            let mut p: CMat = Array2::zeros((2, 2));
            for i in 0..2 {
                for j in 0..2 {
                    p[(i, j)] = vecs[(i, col)] * vecs[(j, col)].conj();
                }
            }
            out.push(p);
        }
        out
    };
    s.povm = (0..2)
        .map(|x| {
            xy_proj(x).into_iter().map(|p| kron(&p, &ceye(4))).collect::<Vec<_>>()
        })
        .collect();
    // party 2 copies qubit 2 onto its ancilla: on (q1 q2 q3) ⊗ anc2, dim 16
    let u2: Vec<CMat> = (0..2)
        .map(|x| {
            let pr = xy_proj(x);
            let mut u: CMat = Array2::zeros((16, 16));
            for a in 0..2 {
                let flip: CMat = if a == 0 {
                    ceye(2)
                } else {
                    Array2::from_shape_vec(
                        (2, 2),
                        vec![
                            C64::new(0.0, 0.0),
                            C64::new(1.0, 0.0),
                            C64::new(1.0, 0.0),
                            C64::new(0.0, 0.0),
                        ],
                    )
                    .unwrap()
                };
                u = u + kron(&kron(&kron(&ceye(2), &pr[a]), &ceye(2)), &flip);
            }
            u
        })
        .collect();
    // party 3 copies qubit 3 onto its ancilla: on (q1 q2 q3) ⊗ anc2 ⊗ anc3, dim 32
    let u3: Vec<CMat> = (0..2)
        .map(|x| {
            let pr = xy_proj(x);
            let mut u: CMat = Array2::zeros((32, 32));
            for a in 0..2 {
                let flip: CMat = if a == 0 {
                    ceye(2)
                } else {
                    Array2::from_shape_vec(
                        (2, 2),
                        vec![
                            C64::new(0.0, 0.0),
                            C64::new(1.0, 0.0),
                            C64::new(1.0, 0.0),
                            C64::new(0.0, 0.0),
                        ],
                    )
                    .unwrap()
                };
                u = u + kron(&kron(&kron(&ceye(4), &pr[a]), &ceye(2)), &flip);
            }
            u
        })
        .collect();
    s.custom_unitaries = vec![Some(u2), Some(u3)];
    s
}

// ---------------------------------------------------------------------------
// serialization

#[derive(Serialize, Deserialize)]
struct MatData {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

fn mat_to_data(m: &CMat) -> MatData {
    MatData {
        rows: m.nrows(),
        cols: m.ncols(),
        re: m.iter().map(|v| v.re).collect(),
        im: m.iter().map(|v| v.im).collect(),
    }
}

fn data_to_mat(d: &MatData) -> Result<CMat, String> {
    if d.re.len() != d.rows * d.cols || d.im.len() != d.rows * d.cols {
        return Err("matrix data length mismatch".into());
    }
    Ok(Array2::from_shape_fn((d.rows, d.cols), |(i, j)| {
        C64::new(d.re[i * d.cols + j], d.im[i * d.cols + j])
    }))
}

#[derive(Serialize, Deserialize)]
struct StrategyData {
    answers: Vec<usize>,
    questions: Vec<usize>,
    dims: Vec<usize>,
    state: MatData,
    povm: Vec<Vec<MatData>>,
    couplers: Vec<MatData>,
    rotations: Vec<Vec<MatData>>,
    projectors: Vec<Vec<MatData>>,
    custom_unitaries: Vec<Option<Vec<MatData>>>,
    generators: Option<Vec<Vec<MatData>>>,
}

impl DilatedStrategy {
    pub fn to_json(&self) -> String {
        let d = StrategyData {
            answers: self.answers.clone(),
            questions: self.questions.clone(),
            dims: self.dims.clone(),
            state: mat_to_data(&self.state),
            povm: self.povm.iter().map(|xs| xs.iter().map(mat_to_data).collect()).collect(),
            couplers: self.couplers.iter().map(mat_to_data).collect(),
            rotations: self
                .rotations
                .iter()
                .map(|xs| xs.iter().map(mat_to_data).collect())
                .collect(),
            projectors: self
                .projectors
                .iter()
                .map(|xs| xs.iter().map(mat_to_data).collect())
                .collect(),
            custom_unitaries: self
                .custom_unitaries
                .iter()
                .map(|o| o.as_ref().map(|xs| xs.iter().map(mat_to_data).collect()))
                .collect(),
            generators: self
                .generators
                .as_ref()
                .map(|gs| gs.iter().map(|xs| xs.iter().map(mat_to_data).collect()).collect()),
        };
        serde_json::to_string(&d).expect("strategy serialization")
    }

    pub fn from_json(s: &str) -> Result<DilatedStrategy, String> {
        let d: StrategyData = serde_json::from_str(s).map_err(|e| e.to_string())?;
        let conv_vv = |vv: &Vec<Vec<MatData>>| -> Result<Vec<Vec<CMat>>, String> {
            vv.iter().map(|xs| xs.iter().map(data_to_mat).collect()).collect()
        };
        Ok(DilatedStrategy {
            answers: d.answers.clone(),
            questions: d.questions.clone(),
            dims: d.dims.clone(),
            state: data_to_mat(&d.state)?,
            povm: conv_vv(&d.povm)?,
            couplers: d.couplers.iter().map(data_to_mat).collect::<Result<_, _>>()?,
            rotations: conv_vv(&d.rotations)?,
            projectors: conv_vv(&d.projectors)?,
            custom_unitaries: d
                .custom_unitaries
                .iter()
                .map(|o| o.as_ref().map(|xs| xs.iter().map(data_to_mat).collect()).transpose())
                .collect::<Result<_, _>>()?,
            generators: d.generators.as_ref().map(conv_vv).transpose()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game;
    use crate::hierarchy::{constraints, index_for_game, residual, DEFAULT_MAX_WORDS};
    use crate::words::LevelScheme;

    #[test]
    fn random_strategy_is_valid_and_feasible() {
        let g = game::chsh();
        let idx = index_for_game(&g, &LevelScheme::Full(1), DEFAULT_MAX_WORDS).unwrap();
        let cs = constraints(&idx);
        let s = random_strategy(&[2, 2], &[2, 2], 4, &[4], 11);
        s.validate(1e-9).unwrap();
        let gamma = s.moment_matrix(&idx.words, 0.0);
        let (_, norm) = residual(&idx, &cs, &gamma);
        assert!(norm < 1e-10, "non-signaling strategy must satisfy the rows: {norm}");
        assert!((gamma[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(crate::sdp::linalg::min_eig(&gamma) > -1e-12);
    }

    #[test]
    fn eps_makes_it_signal() {
        let g = game::chsh();
        let idx = index_for_game(&g, &LevelScheme::Full(1), DEFAULT_MAX_WORDS).unwrap();
        let cs = constraints(&idx);
        let s = random_strategy(&[2, 2], &[2, 2], 4, &[4], 11);
        let gamma = s.moment_matrix(&idx.words, 1e-2);
        let (_, norm) = residual(&idx, &cs, &gamma);
        assert!(norm > 1e-5, "eps-perturbed strategy should violate rows: {norm}");
        assert!(norm < 1.0);
    }

    #[test]
    fn chsh_optimal_hits_tsirelson() {
        let s = chsh_optimal();
        s.validate(1e-10).unwrap();
        let score = s.score(&game::chsh(), 0.0);
        let expected = (std::f64::consts::PI / 8.0).cos().powi(2);
        assert!((score - expected).abs() < 1e-12, "score {score} vs {expected}");
    }

    #[test]
    fn ghz_hits_four() {
        let s = mermin3_ghz();
        s.validate(1e-10).unwrap();
        let score = s.score(&game::mermin3(), 0.0);
        assert!((score - 4.0).abs() < 1e-12, "score {score}");
    }

    #[test]
    fn serialization_round_trip() {
        let s = random_strategy(&[2, 2], &[2, 2], 4, &[4], 3);
        let s2 = DilatedStrategy::from_json(&s.to_json()).unwrap();
        s2.validate(1e-9).unwrap();
        let g = game::chsh();
        assert!((s.score(&g, 0.0) - s2.score(&g, 0.0)).abs() < 1e-14);
    }

    #[test]
    fn probabilities_normalize() {
        let s = random_strategy(&[2, 2, 2], &[2, 2, 2], 4, &[2, 2], 5);
        for qs in [[0u16, 0, 0], [1, 0, 1]] {
            let mut total = 0.0;
            for a in 0..2u16 {
                for b in 0..2u16 {
                    for c in 0..2u16 {
                        total += s.probability(&[a, b, c], &qs, 0.0);
                    }
                }
            }
            assert!((total - 1.0).abs() < 1e-10, "total {total}");
        }
    }
}
