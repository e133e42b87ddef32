//! Sequential moment hierarchy: word index, Hankel classes, linear constraint
//! rows, residuals, and assembly into a standard-form SDP.

use crate::game::Game;
use crate::sdp::{CsrMatrix, SdpProblem};
use crate::words::{
    adjoint, apply_hom, mul, scheme_words, tuples, LevelScheme, Letter, Sym, Word,
};
use std::collections::{BTreeSet, HashMap};

/// Default cap on the word-set size before assembly is refused.
pub const DEFAULT_MAX_WORDS: usize = 5000;

/// Index of the truncated moment matrix: enumerated words, Hankel classes
/// (keyed by the reduced word `adjoint(w) * v`), and the class of every entry.
#[derive(Clone, Debug)]
pub struct MomentIndex {
    pub parties: usize,
    pub n_answers: Vec<usize>,
    pub n_questions: Vec<usize>,
    pub scheme: LevelScheme,
    pub words: Vec<Word>,
    pub word_pos: HashMap<Word, usize>,
    /// Canonical word per class id (the zero class, if present, holds `Word::Zero`).
    pub class_words: Vec<Word>,
    pub class_of: HashMap<Word, u32>,
    /// Row-major `nw * nw` entry-to-class map.
    pub entry_class: Vec<u32>,
    /// Flat entry indices per class, in row-major discovery order.
    pub class_entries: Vec<Vec<u32>>,
    pub zero_class: Option<u32>,
    pub unit_class: u32,
}

impl MomentIndex {
    pub fn nw(&self) -> usize {
        self.words.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_words.len()
    }

    /// Representative matrix entry `(row, col)` of a class.
    pub fn class_rep(&self, class: u32) -> (usize, usize) {
        let e = self.class_entries[class as usize][0] as usize;
        (e / self.nw(), e % self.nw())
    }

    /// Class id of a word, if the word occurs in the matrix.
    pub fn class(&self, w: &Word) -> Option<u32> {
        self.class_of.get(w).copied()
    }
}

/// Build the moment index for alphabets `n_answers`/`n_questions` (one entry
/// per party, party 1 first) at the given level scheme.
pub fn moment_index(
    n_answers: &[usize],
    n_questions: &[usize],
    scheme: &LevelScheme,
    max_words: usize,
) -> Result<MomentIndex, String> {
    let k = n_answers.len();
    if k == 0 || n_questions.len() != k {
        return Err("alphabet lists empty or mismatched".into());
    }
    let words = scheme_words(k, scheme, n_answers, n_questions)?;
    if words.len() > max_words {
        return Err(format!(
            "word set size {} exceeds the limit {max_words}; refusing to assemble",
            words.len()
        ));
    }
    let nw = words.len();
    let word_pos: HashMap<Word, usize> =
        words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    let mut class_of: HashMap<Word, u32> = HashMap::new();
    let mut class_words: Vec<Word> = Vec::new();
    let mut class_entries: Vec<Vec<u32>> = Vec::new();
    let mut entry_class = vec![0u32; nw * nw];
    let adjoints: Vec<Word> = words.iter().map(adjoint).collect();
    for i in 0..nw {
        for j in 0..nw {
            let m = mul(&adjoints[i], &words[j]);
            let c = *class_of.entry(m.clone()).or_insert_with(|| {
                class_words.push(m.clone());
                class_entries.push(Vec::new());
                (class_words.len() - 1) as u32
            });
            entry_class[i * nw + j] = c;
            class_entries[c as usize].push((i * nw + j) as u32);
        }
    }
    let zero_class = class_of.get(&Word::Zero).copied();
    let unit_class = *class_of.get(&Word::identity()).ok_or("identity class missing")?;
    Ok(MomentIndex {
        parties: k,
        n_answers: n_answers.to_vec(),
        n_questions: n_questions.to_vec(),
        scheme: scheme.clone(),
        words,
        word_pos,
        class_words,
        class_of,
        entry_class,
        class_entries,
        zero_class,
        unit_class,
    })
}

/// Build the index matching a game's alphabets.
pub fn index_for_game(
    game: &Game,
    scheme: &LevelScheme,
    max_words: usize,
) -> Result<MomentIndex, String> {
    game.validate()?;
    moment_index(&game.answers, &game.questions, scheme, max_words)
}

/// Constraint-row families.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RowFamily {
    /// Bordered POVM completeness: `sum_a w* f_{a|x} v = w* v`.
    Completeness,
    /// Bordered marginal consistency of answer-prefix sums across questions.
    Marginal,
    /// Bordered instrument-average independence of the party-j question.
    NoSignaling,
}

/// One linear row `sum_i coeff_i * y_{class_i} = 0`, normalized so the
/// coefficient of the smallest class id is +1.
#[derive(Clone, Debug)]
pub struct Row {
    pub family: RowFamily,
    pub coeffs: Vec<(u32, f64)>,
}

/// The full linear constraint set for an index (normalization excluded).
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub rows: Vec<Row>,
    pub n_completeness: usize,
    pub n_marginal: usize,
    pub n_no_signaling: usize,
}

fn round9(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

/// Normalize a row (sorted by class id, leading coefficient +1) and return its
/// dedup key.
fn normalize_row(acc: &HashMap<u32, f64>) -> Option<(Vec<(u32, f64)>, Vec<(u32, i64)>)> {
    let mut items: Vec<(u32, f64)> =
        acc.iter().filter(|(_, &x)| x.abs() > 1e-12).map(|(&c, &x)| (c, x)).collect();
    if items.is_empty() {
        return None;
    }
    items.sort_by_key(|&(c, _)| c);
    let lead = items[0].1;
    let row: Vec<(u32, f64)> = items.iter().map(|&(c, x)| (c, round9(x / lead))).collect();
    let key: Vec<(u32, i64)> = row.iter().map(|&(c, x)| (c, (x * 1e9).round() as i64)).collect();
    Some((row, key))
}

struct RowCollector {
    seen: BTreeSet<Vec<(u32, i64)>>,
    rows: Vec<Row>,
}

impl RowCollector {
    fn new() -> Self {
        RowCollector { seen: BTreeSet::new(), rows: Vec::new() }
    }

    fn push(&mut self, family: RowFamily, acc: &HashMap<u32, f64>) {
        if let Some((coeffs, key)) = normalize_row(acc) {
            if self.seen.insert(key) {
                self.rows.push(Row { family, coeffs });
            }
        }
    }
}

/// Add `coeff` for the class of `m` to a row accumulator. Returns false when a
/// nonzero monomial has no class in the index (the row is then inexpressible).
fn add_term(idx: &MomentIndex, acc: &mut HashMap<u32, f64>, m: &Word, coeff: f64) -> bool {
    if m.is_zero() {
        return true;
    }
    match idx.class(m) {
        Some(c) => {
            *acc.entry(c).or_insert(0.0) += coeff;
            true
        }
        None => false,
    }
}

fn completeness_and_marginal_rows(idx: &MomentIndex, out: &mut RowCollector) {
    let k = idx.parties;
    let n = idx.scheme.base_degree();
    let q_tuples = tuples(&idx.n_questions);
    let a_tuples = tuples(&idx.n_answers);
    for w in &idx.words {
        let dw = w.degree().unwrap();
        let wa = adjoint(w);
        for v in &idx.words {
            let dv = v.degree().unwrap();
            if dw + dv + 1 > 2 * n {
                continue;
            }
            // completeness over every full question tuple
            for qs in &q_tuples {
                let mut acc = HashMap::new();
                let mut ok = true;
                for ans in &a_tuples {
                    let f = Word::Mono(vec![Letter::new(k, ans.clone(), qs.clone())]);
                    let m = mul(&mul(&wa, &f), v);
                    ok &= add_term(idx, &mut acc, &m, 1.0);
                }
                ok &= add_term(idx, &mut acc, &mul(&wa, v), -1.0);
                if ok {
                    out.push(RowFamily::Completeness, &acc);
                }
            }
            // marginal consistency: prefix-summed letters agree across prefix questions
            for l in 1..k {
                let suff_a = tuples(&idx.n_answers[l..]);
                let suff_x = tuples(&idx.n_questions[l..]);
                let pre_a = tuples(&idx.n_answers[..l]);
                let pre_x = tuples(&idx.n_questions[..l]);
                for sa in &suff_a {
                    for sx in &suff_x {
                        for qi in 0..pre_x.len() {
                            for qj in qi + 1..pre_x.len() {
                                let mut acc = HashMap::new();
                                let mut ok = true;
                                for ap in &pre_a {
                                    for (q, sign) in [(&pre_x[qi], 1.0), (&pre_x[qj], -1.0)] {
                                        let mut ans = ap.clone();
                                        ans.extend_from_slice(sa);
                                        let mut qs = q.clone();
                                        qs.extend_from_slice(sx);
                                        let f = Word::Mono(vec![Letter::new(k, ans, qs)]);
                                        let m = mul(&mul(&wa, &f), v);
                                        ok &= add_term(idx, &mut acc, &m, sign);
                                    }
                                }
                                if ok {
                                    out.push(RowFamily::Marginal, &acc);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

fn no_signaling_rows(idx: &MomentIndex, out: &mut RowCollector) {
    let k = idx.parties;
    let n = idx.scheme.base_degree();
    for j in 2..=k {
        let w_j = crate::words::enumerate_words(j, n, &idx.n_answers, &idx.n_questions);
        let w_jm1 = crate::words::enumerate_words(j - 1, n, &idx.n_answers, &idx.n_questions);
        let suff_a = tuples(&idx.n_answers[j..]);
        let suff_x = tuples(&idx.n_questions[j..]);
        for w in &w_j {
            let dw = w.degree().unwrap();
            let wa = adjoint(w);
            for v in &w_j {
                let dv = v.degree().unwrap();
                if dw + dv > 2 * n {
                    continue;
                }
                for r in &w_jm1 {
                    let dr = r.degree().unwrap();
                    if dw + dv + dr > 2 * n {
                        continue;
                    }
                    let ra = adjoint(r);
                    for s in &w_jm1 {
                        if dw + dv + dr + s.degree().unwrap() > 2 * n {
                            continue;
                        }
                        let rs = mul(&ra, s);
                        if rs.is_zero() {
                            continue;
                        }
                        for xj in 0..idx.n_questions[j - 1] {
                            for xpj in xj + 1..idx.n_questions[j - 1] {
                                for sa in &suff_a {
                                    for sx in &suff_x {
                                        let mut acc = HashMap::new();
                                        let mut ok = true;
                                        for aj in 0..idx.n_answers[j - 1] {
                                            for (xx, sign) in [(xj, 1.0), (xpj, -1.0)] {
                                                let mut m = mul(
                                                    &mul(&wa, &apply_hom(aj as Sym, xx as Sym, &rs)),
                                                    v,
                                                );
                                                for lev in j..k {
                                                    m = apply_hom(sa[lev - j], sx[lev - j], &m);
                                                }
                                                ok &= add_term(idx, &mut acc, &m, sign);
                                            }
                                        }
                                        if ok {
                                            out.push(RowFamily::NoSignaling, &acc);
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Generate the deduplicated constraint rows for an index.
pub fn constraints(idx: &MomentIndex) -> ConstraintSystem {
    let mut out = RowCollector::new();
    completeness_and_marginal_rows(idx, &mut out);
    no_signaling_rows(idx, &mut out);
    let mut rows = out.rows;
    // deterministic order: by family, then by coefficient list
    rows.sort_by(|a, b| {
        let fa = a.family as u8;
        let fb = b.family as u8;
        fa.cmp(&fb).then_with(|| {
            a.coeffs
                .iter()
                .map(|&(c, x)| (c, (x * 1e9).round() as i64))
                .cmp(b.coeffs.iter().map(|&(c, x)| (c, (x * 1e9).round() as i64)))
        })
    });
    let n_completeness = rows.iter().filter(|r| r.family == RowFamily::Completeness).count();
    let n_marginal = rows.iter().filter(|r| r.family == RowFamily::Marginal).count();
    let n_no_signaling = rows.iter().filter(|r| r.family == RowFamily::NoSignaling).count();
    ConstraintSystem { rows, n_completeness, n_marginal, n_no_signaling }
}

impl ConstraintSystem {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Human-readable dump: one row per line in terms of class words.
    pub fn describe(&self, idx: &MomentIndex) -> String {
        let mut s = String::new();
        for row in &self.rows {
            let fam = match row.family {
                RowFamily::Completeness => "completeness",
                RowFamily::Marginal => "marginal",
                RowFamily::NoSignaling => "no-signaling",
            };
            let terms: Vec<String> = row
                .coeffs
                .iter()
                .map(|&(c, x)| format!("{:+.9}*<{}>", x, idx.class_words[c as usize]))
                .collect();
            s.push_str(&format!("{fam}: {} = 0\n", terms.join(" ")));
        }
        s
    }
}

/// Sparse rows over flattened `nw*nw` matrix entries describing every linear
/// consequence the index imposes on a raw (not-yet-Hankel) matrix: per-class
/// consecutive-entry differences, zero-class entries, and the constraint rows
/// evaluated at class representatives. Coefficients are split symmetrically
/// across transposed positions.
pub fn residual_map_rows(idx: &MomentIndex, cs: &ConstraintSystem) -> Vec<Vec<(u32, f64)>> {
    let nw = idx.nw() as u32;
    let mut rows: Vec<Vec<(u32, f64)>> = Vec::new();
    let sym = |entries: &[(u32, f64)]| -> Vec<(u32, f64)> {
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for &(e, c) in entries {
            let (i, j) = (e / nw, e % nw);
            *acc.entry(i * nw + j).or_insert(0.0) += c / 2.0;
            *acc.entry(j * nw + i).or_insert(0.0) += c / 2.0;
        }
        let mut v: Vec<(u32, f64)> =
            acc.into_iter().filter(|&(_, c)| c.abs() > 1e-15).collect();
        v.sort_by_key(|&(e, _)| e);
        v
    };
    for (c, entries) in idx.class_entries.iter().enumerate() {
        if Some(c as u32) == idx.zero_class {
            for &e in entries {
                rows.push(sym(&[(e, 1.0)]));
            }
        } else {
            for t in 0..entries.len().saturating_sub(1) {
                rows.push(sym(&[(entries[t], 1.0), (entries[t + 1], -1.0)]));
            }
        }
    }
    for row in &cs.rows {
        let entries: Vec<(u32, f64)> = row
            .coeffs
            .iter()
            .map(|&(c, x)| (idx.class_entries[c as usize][0], x))
            .collect();
        rows.push(sym(&entries));
    }
    rows
}

/// Stacked violations of all structural constraints by a raw matrix `gamma`
/// (Hankel consistency, zero entries, and the linear rows at representative
/// entries), and the Euclidean norm of the stack. Normalization is *not*
/// included; check `gamma[(0, 0)] == 1` separately.
pub fn residual(
    idx: &MomentIndex,
    cs: &ConstraintSystem,
    gamma: &ndarray::Array2<f64>,
) -> (Vec<f64>, f64) {
    let nw = idx.nw();
    assert_eq!(gamma.shape(), [nw, nw], "matrix does not match the index");
    let flat = |e: u32| -> f64 {
        let (i, j) = ((e as usize) / nw, (e as usize) % nw);
        (gamma[(i, j)] + gamma[(j, i)]) / 2.0
    };
    let mut res = Vec::new();
    for (c, entries) in idx.class_entries.iter().enumerate() {
        if Some(c as u32) == idx.zero_class {
            for &e in entries {
                res.push(flat(e));
            }
        } else {
            for t in 0..entries.len().saturating_sub(1) {
                res.push(flat(entries[t]) - flat(entries[t + 1]));
            }
        }
    }
    for row in &cs.rows {
        let mut s = 0.0;
        for &(c, x) in &row.coeffs {
            s += x * flat(idx.class_entries[c as usize][0]);
        }
        res.push(s);
    }
    let norm = res.iter().map(|x| x * x).sum::<f64>().sqrt();
    (res, norm)
}

/// Map each class to its merged variable: a class and the class of its adjoint
/// word carry the same value on a symmetric matrix and share one variable.
pub fn merged_classes(idx: &MomentIndex) -> (Vec<Option<u32>>, usize) {
    let nc = idx.n_classes();
    let mut canon: Vec<Option<u32>> = vec![None; nc];
    let mut next = 0u32;
    let mut canon_id: HashMap<u32, u32> = HashMap::new();
    for c in 0..nc {
        if Some(c as u32) == idx.zero_class {
            continue;
        }
        let ca = idx
            .class(&adjoint(&idx.class_words[c]))
            .expect("class set closed under adjoints");
        let key = (c as u32).min(ca);
        let id = *canon_id.entry(key).or_insert_with(|| {
            let id = next;
            next += 1;
            id
        });
        canon[c] = Some(id);
    }
    (canon, next as usize)
}

/// Assemble the moment SDP for a game at this index: maximize the payoff over
/// matrices with the class/Hankel structure, the linear rows, normalization,
/// and positive semidefiniteness.
pub fn assemble(
    game: &Game,
    idx: &MomentIndex,
    cs: &ConstraintSystem,
) -> Result<SdpProblem, String> {
    if game.answers != idx.n_answers || game.questions != idx.n_questions {
        return Err("game alphabets do not match the index".into());
    }
    let (canon, nvars) = merged_classes(idx);
    let nw = idx.nw();
    let mut var_entries: Vec<Vec<(u32, u32)>> = vec![Vec::new(); nvars];
    let mut fixed_zero: Vec<(u32, u32)> = Vec::new();
    for i in 0..nw {
        for j in 0..nw {
            let c = idx.entry_class[i * nw + j] as usize;
            match canon[c] {
                Some(v) => var_entries[v as usize].push((i as u32, j as u32)),
                None => fixed_zero.push((i as u32, j as u32)),
            }
        }
    }
    // linear rows in merged variables, plus the normalization row
    let mut indptr = vec![0usize];
    let mut indices: Vec<u32> = Vec::new();
    let mut data: Vec<f64> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for row in &cs.rows {
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for &(c, x) in &row.coeffs {
            if let Some(v) = canon[c as usize] {
                *acc.entry(v).or_insert(0.0) += x;
            }
        }
        let mut items: Vec<(u32, f64)> =
            acc.into_iter().filter(|&(_, x)| x.abs() > 1e-12).collect();
        if items.is_empty() {
            continue;
        }
        items.sort_by_key(|&(v, _)| v);
        for (v, x) in items {
            indices.push(v);
            data.push(x);
        }
        indptr.push(indices.len());
        rhs.push(0.0);
    }
    let unit_var = canon[idx.unit_class as usize].expect("identity class is a variable");
    indices.push(unit_var);
    data.push(1.0);
    indptr.push(indices.len());
    rhs.push(1.0);
    let eq = CsrMatrix { rows: rhs.len(), cols: nvars, indptr, indices, data };
    // objective: payoff terms sit at full-level letter words
    let mut objective = vec![0.0; nvars];
    for ((ans, qs), coeff) in game.payoff_map() {
        let w = Word::Mono(vec![Letter::new(idx.parties, ans, qs)]);
        let c = idx
            .class(&w)
            .ok_or_else(|| format!("payoff word {w} is not indexed; raise the level"))?;
        let v = canon[c as usize].ok_or_else(|| format!("payoff word {w} collapses to zero"))?;
        objective[v as usize] += coeff;
    }
    let mut var_labels = vec![String::new(); nvars];
    for c in 0..idx.n_classes() {
        if let Some(v) = canon[c] {
            if var_labels[v as usize].is_empty() {
                var_labels[v as usize] = idx.class_words[c].to_string();
            }
        }
    }
    Ok(SdpProblem { n: nw, var_entries, fixed_zero, eq, rhs, objective, var_labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game;

    fn chsh_index(n: usize) -> MomentIndex {
        index_for_game(&game::chsh(), &LevelScheme::Full(n), DEFAULT_MAX_WORDS).unwrap()
    }

    #[test]
    fn chsh_level1_counts() {
        let idx = chsh_index(1);
        assert_eq!(idx.nw(), 17);
        assert_eq!(idx.n_classes(), 210);
        let cs = constraints(&idx);
        assert_eq!(cs.n_completeness + cs.n_marginal, 232);
        assert_eq!(cs.n_no_signaling, 140);
    }

    #[test]
    fn mermin_level1_counts() {
        let idx = index_for_game(&game::mermin3(), &LevelScheme::Full(1), DEFAULT_MAX_WORDS)
            .unwrap();
        assert_eq!(idx.nw(), 65);
        assert_eq!(idx.n_classes(), 3650);
        let cs = constraints(&idx);
        assert_eq!(cs.n_completeness + cs.n_marginal, 6064);
        assert_eq!(cs.n_no_signaling, 2816);
    }

    #[test]
    fn word_cap_is_enforced() {
        let err = index_for_game(&game::chsh(), &LevelScheme::Full(2), 100).unwrap_err();
        assert!(err.contains("exceeds"));
    }

    #[test]
    fn identity_moment_matrix_residual() {
        // uniform classical deterministic strategy embedded by hand: all-zero answers
        let idx = chsh_index(1);
        let cs = constraints(&idx);
        let nw = idx.nw();
        let mut gamma = ndarray::Array2::<f64>::zeros((nw, nw));
        for i in 0..nw {
            for j in 0..nw {
                let c = idx.entry_class[i * nw + j];
                if Some(c) == idx.zero_class {
                    continue;
                }
                // deterministic all-zero strategy: word value is 1 iff every
                // letter has all-zero answers
                let w = &idx.class_words[c as usize];
                let val = w
                    .letters()
                    .iter()
                    .all(|l| l.answers.iter().all(|&a| a == 0));
                gamma[(i, j)] = if val { 1.0 } else { 0.0 };
            }
        }
        let (_, norm) = residual(&idx, &cs, &gamma);
        assert!(norm < 1e-12, "deterministic strategy violates rows: {norm}");
        assert_eq!(gamma[(0, 0)], 1.0);
    }

    #[test]
    fn assemble_shapes() {
        let idx = chsh_index(1);
        let cs = constraints(&idx);
        let p = assemble(&game::chsh(), &idx, &cs).unwrap();
        assert_eq!(p.n, 17);
        // every entry is covered exactly once
        let covered: usize =
            p.var_entries.iter().map(|v| v.len()).sum::<usize>() + p.fixed_zero.len();
        assert_eq!(covered, 17 * 17);
        assert_eq!(*p.rhs.last().unwrap(), 1.0);
        assert!(p.objective.iter().any(|&x| x != 0.0));
    }
}
