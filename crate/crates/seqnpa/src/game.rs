//! k-partite nonlocal games.
//!
//! Party 1 is the final measurer; parties 2..k act earlier in the sequential
//! order (party k first). Answer/question tuples are always ordered with
//! party 1 in position 1.

use crate::words::Sym;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Hard cap on the number of deterministic classical strategies enumerated.
pub const CLASSICAL_ENUM_BOUND: f64 = 1e8;

/// One payoff term: the weight earned when the given answer tuple is produced
/// on the given question tuple (question priors, if any, are folded in).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PayoffTerm {
    pub answers: Vec<Sym>,
    pub questions: Vec<Sym>,
    pub coeff: f64,
}

/// A k-partite game: alphabets per party and a sparse payoff functional on
/// (answer tuple, question tuple) pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Game {
    pub name: String,
    /// Answer alphabet size per party (party 1 first).
    pub answers: Vec<usize>,
    /// Question alphabet size per party (party 1 first).
    pub questions: Vec<usize>,
    pub payoff: Vec<PayoffTerm>,
}

impl Game {
    pub fn parties(&self) -> usize {
        self.answers.len()
    }

    pub fn validate(&self) -> Result<(), String> {
        let k = self.answers.len();
        if k == 0 {
            return Err("game has no parties".into());
        }
        if self.questions.len() != k {
            return Err(format!(
                "answers list has {k} parties but questions list has {}",
                self.questions.len()
            ));
        }
        if self.answers.iter().chain(&self.questions).any(|&n| n == 0) {
            return Err("empty alphabet".into());
        }
        for t in &self.payoff {
            if t.answers.len() != k || t.questions.len() != k {
                return Err(format!("payoff term arity mismatch: {t:?}"));
            }
            for (j, (&a, &x)) in t.answers.iter().zip(&t.questions).enumerate() {
                if a as usize >= self.answers[j] || x as usize >= self.questions[j] {
                    return Err(format!("payoff term out of range: {t:?}"));
                }
            }
            if !t.coeff.is_finite() {
                return Err(format!("non-finite payoff coefficient: {t:?}"));
            }
        }
        Ok(())
    }

    /// Payoff as a map, accumulating duplicate terms.
    pub fn payoff_map(&self) -> HashMap<(Vec<Sym>, Vec<Sym>), f64> {
        let mut m = HashMap::new();
        for t in &self.payoff {
            *m.entry((t.answers.clone(), t.questions.clone())).or_insert(0.0) += t.coeff;
        }
        m.retain(|_, v| *v != 0.0);
        m
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("game serialization")
    }

    pub fn from_json(s: &str) -> Result<Game, String> {
        let g: Game = serde_json::from_str(s).map_err(|e| e.to_string())?;
        g.validate()?;
        Ok(g)
    }

    pub fn load(path: &std::path::Path) -> Result<Game, String> {
        let s = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_json(&s)
    }

    /// Exact optimum over deterministic classical strategies (shared randomness
    /// never helps a linear payoff). Returns the value and one optimal response
    /// table per party (`tables[j][x] = a`).
    pub fn classical_value(&self) -> Result<(f64, Vec<Vec<Sym>>), String> {
        self.validate()?;
        let k = self.parties();
        let mut total = 1f64;
        let mut counts = Vec::with_capacity(k);
        for j in 0..k {
            let c = (self.answers[j] as f64).powi(self.questions[j] as i32);
            counts.push(c);
            total *= c;
        }
        if total > CLASSICAL_ENUM_BOUND {
            return Err(format!(
                "classical enumeration size {total:.3e} exceeds bound {CLASSICAL_ENUM_BOUND:.0e}"
            ));
        }
        let counts: Vec<usize> = counts.iter().map(|&c| c as usize).collect();
        let terms = self.payoff_map();
        let mut best = f64::NEG_INFINITY;
        let mut best_tables = Vec::new();
        let mut strat = vec![0usize; k];
        loop {
            // decode response tables for this strategy index
            let tables: Vec<Vec<Sym>> = (0..k)
                .map(|j| {
                    let mut f = strat[j];
                    (0..self.questions[j])
                        .map(|_| {
                            let a = (f % self.answers[j]) as Sym;
                            f /= self.answers[j];
                            a
                        })
                        .collect()
                })
                .collect();
            let mut score = 0.0;
            for ((ans, qs), &c) in &terms {
                if (0..k).all(|j| tables[j][qs[j] as usize] == ans[j]) {
                    score += c;
                }
            }
            if score > best {
                best = score;
                best_tables = tables;
            }
            // next strategy (mixed radix increment)
            let mut j = 0;
            loop {
                if j == k {
                    return Ok((best, best_tables));
                }
                strat[j] += 1;
                if strat[j] < counts[j] {
                    break;
                }
                strat[j] = 0;
                j += 1;
            }
        }
    }
}

/// CHSH in probability normalization: payoff 1/4 on each question pair when
/// `a XOR b = x AND y`. Party 1 is the last measurer (named `b` here).
pub fn chsh() -> Game {
    let mut payoff = Vec::new();
    for a in 0..2u16 {
        for b in 0..2u16 {
            for x in 0..2u16 {
                for y in 0..2u16 {
                    if a ^ b == x & y {
                        payoff.push(PayoffTerm {
                            answers: vec![b, a],
                            questions: vec![y, x],
                            coeff: 0.25,
                        });
                    }
                }
            }
        }
    }
    Game { name: "chsh".into(), answers: vec![2, 2], questions: vec![2, 2], payoff }
}

/// CHSH in correlator normalization: `<A0B0> + <A0B1> + <A1B0> - <A1B1>`
/// expanded into the (answer, question) basis with outcome signs
/// `(-1)^(a+b)`. Classical maximum 2, quantum maximum `2 sqrt 2`.
pub fn chsh_corr() -> Game {
    let mut payoff = Vec::new();
    for a in 0..2u16 {
        for b in 0..2u16 {
            for x in 0..2u16 {
                for y in 0..2u16 {
                    let term = if x == 1 && y == 1 { -1.0 } else { 1.0 };
                    let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
                    payoff.push(PayoffTerm {
                        answers: vec![b, a],
                        questions: vec![y, x],
                        coeff: term * sign,
                    });
                }
            }
        }
    }
    Game { name: "chsh-corr".into(), answers: vec![2, 2], questions: vec![2, 2], payoff }
}

/// Tripartite Mermin functional `XXY + XYX + YXX - YYY` with outcome signs
/// `(-1)^(a+b+c)`; algebraic maximum 4, classical maximum 2.
pub fn mermin3() -> Game {
    let mut payoff = Vec::new();
    let terms: [(Vec<Sym>, f64); 4] = [
        (vec![1, 0, 0], 1.0),
        (vec![0, 1, 0], 1.0),
        (vec![0, 0, 1], 1.0),
        (vec![1, 1, 1], -1.0),
    ];
    for (qs, coeff) in terms {
        for a in 0..2u16 {
            for b in 0..2u16 {
                for c in 0..2u16 {
                    let sign = if (a + b + c) % 2 == 0 { 1.0 } else { -1.0 };
                    payoff.push(PayoffTerm {
                        answers: vec![a, b, c],
                        questions: qs.clone(),
                        coeff: coeff * sign,
                    });
                }
            }
        }
    }
    Game { name: "mermin3".into(), answers: vec![2, 2, 2], questions: vec![2, 2, 2], payoff }
}

/// Resolve a builtin game name or a path to a game file.
pub fn resolve(spec: &str) -> Result<Game, String> {
    match spec {
        "chsh" | "chsh-prob" => Ok(chsh()),
        "chsh-corr" => Ok(chsh_corr()),
        "mermin3" | "mermin3-corr" => Ok(mermin3()),
        path => Game::load(std::path::Path::new(path)),
    }
}
