//! Free *-algebra of sequential measurement words.
//!
//! A letter `f[a1..aj|x1..xj]` is a level-`j` projection labelled by answer and
//! question tuples for parties `1..j` (tuple position 1 is party 1, the final
//! measurer). Words are products of letters, kept in a canonical reduced form:
//! adjacent letters with identical question tuples merge when their answer
//! tuples agree and annihilate to zero otherwise. No other rewriting is
//! applied.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Symbol type for answers and questions.
pub type Sym = u16;

/// A single generator of the word algebra.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Letter {
    pub level: u8,
    pub answers: Vec<Sym>,
    pub questions: Vec<Sym>,
}

impl Letter {
    pub fn new(level: usize, answers: Vec<Sym>, questions: Vec<Sym>) -> Self {
        assert_eq!(answers.len(), level);
        assert_eq!(questions.len(), level);
        Letter { level: level as u8, answers, questions }
    }
}

/// A reduced word: either the zero element or a product of letters
/// (the empty product is the identity).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum Word {
    Zero,
    Mono(Vec<Letter>),
}

pub use Word::Zero;

impl Word {
    pub fn identity() -> Self {
        Word::Mono(Vec::new())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Word::Zero)
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Word::Mono(ls) if ls.is_empty())
    }

    /// Number of letters; zero has no degree.
    pub fn degree(&self) -> Option<usize> {
        match self {
            Word::Zero => None,
            Word::Mono(ls) => Some(ls.len()),
        }
    }

    pub fn letters(&self) -> &[Letter] {
        match self {
            Word::Zero => &[],
            Word::Mono(ls) => ls,
        }
    }
}

/// Reduce a letter sequence to canonical form.
pub fn reduce(letters: &[Letter]) -> Word {
    let mut out: Vec<Letter> = Vec::with_capacity(letters.len());
    for l in letters {
        if let Some(last) = out.last() {
            if last.level == l.level && last.questions == l.questions {
                if last.answers == l.answers {
                    continue; // projective merge: p^2 = p
                }
                return Word::Zero; // orthogonal projections annihilate
            }
        }
        out.push(l.clone());
    }
    Word::Mono(out)
}

/// Adjoint: reverse the letters (each letter is self-adjoint) and reduce.
pub fn adjoint(w: &Word) -> Word {
    match w {
        Word::Zero => Word::Zero,
        Word::Mono(ls) => {
            let rev: Vec<Letter> = ls.iter().rev().cloned().collect();
            reduce(&rev)
        }
    }
}

/// Product of two reduced words.
pub fn mul(w: &Word, v: &Word) -> Word {
    match (w, v) {
        (Word::Zero, _) | (_, Word::Zero) => Word::Zero,
        (Word::Mono(a), Word::Mono(b)) => {
            let mut ls = Vec::with_capacity(a.len() + b.len());
            ls.extend_from_slice(a);
            ls.extend_from_slice(b);
            reduce(&ls)
        }
    }
}

/// The embedding homomorphism `T_{a,x}` appending answer `a` and question `x`
/// (the next party's coordinates) to every letter, raising each level by one.
/// Reducedness is preserved: appending the same coordinate keeps distinct
/// question tuples distinct.
pub fn apply_hom(a: Sym, x: Sym, w: &Word) -> Word {
    match w {
        Word::Zero => Word::Zero,
        Word::Mono(ls) => Word::Mono(
            ls.iter()
                .map(|l| {
                    let mut ans = l.answers.clone();
                    let mut qs = l.questions.clone();
                    ans.push(a);
                    qs.push(x);
                    Letter { level: l.level + 1, answers: ans, questions: qs }
                })
                .collect(),
        ),
    }
}

/// Enumerate all mixed-radix tuples with the given radices, slowest digit first.
pub fn tuples(radices: &[usize]) -> Vec<Vec<Sym>> {
    let mut out = vec![Vec::new()];
    for &r in radices {
        let mut next = Vec::with_capacity(out.len() * r);
        for t in &out {
            for v in 0..r {
                let mut t2 = t.clone();
                t2.push(v as Sym);
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

/// All level-`j` letters for parties with answer alphabets `n_a` and question
/// alphabets `n_x` (lists over parties `1..k`), ordered by question tuple then
/// answer tuple.
pub fn letters_at(level: usize, n_a: &[usize], n_x: &[usize]) -> Vec<Letter> {
    let mut res = Vec::new();
    for qs in tuples(&n_x[..level]) {
        for ans in tuples(&n_a[..level]) {
            res.push(Letter::new(level, ans, qs.clone()));
        }
    }
    res
}

/// Word-set selection for the hierarchy.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub enum LevelScheme {
    /// All reduced level-`j` words of degree at most `n`.
    Full(usize),
    /// `Full(n)` plus extra hand-picked reduced words.
    Plus(usize, Vec<Word>),
}

impl LevelScheme {
    pub fn base_degree(&self) -> usize {
        match self {
            LevelScheme::Full(n) | LevelScheme::Plus(n, _) => *n,
        }
    }
}

/// All reduced words of degree `<= n` in the level-`level` letters, ordered by
/// degree then lexicographically on the letter sequence.
pub fn enumerate_words(level: usize, n: usize, n_a: &[usize], n_x: &[usize]) -> Vec<Word> {
    let lets = letters_at(level, n_a, n_x);
    let mut words = vec![Word::identity()];
    let mut frontier = vec![Word::identity()];
    for d in 0..n {
        let mut next = std::collections::BTreeSet::new();
        for w in &frontier {
            for l in &lets {
                let mut ls: Vec<Letter> = w.letters().to_vec();
                ls.push(l.clone());
                let r = reduce(&ls);
                if r.degree() == Some(d + 1) {
                    next.insert(r);
                }
            }
        }
        frontier = next.into_iter().collect();
        words.extend(frontier.iter().cloned());
    }
    words
}

/// Word set for a scheme: `Full(n)` enumeration, optionally augmented by extra
/// reduced words, globally ordered by degree then lexicographically.
pub fn scheme_words(
    level: usize,
    scheme: &LevelScheme,
    n_a: &[usize],
    n_x: &[usize],
) -> Result<Vec<Word>, String> {
    let base = enumerate_words(level, scheme.base_degree(), n_a, n_x);
    match scheme {
        LevelScheme::Full(_) => Ok(base),
        LevelScheme::Plus(_, extra) => {
            let mut set: std::collections::BTreeSet<(usize, Word)> =
                base.into_iter().map(|w| (w.degree().unwrap(), w)).collect();
            for w in extra {
                if w.is_zero() {
                    return Err("extra word is zero".into());
                }
                let red = reduce(w.letters());
                if &red != w {
                    return Err(format!("extra word {} is not reduced", format_word(w)));
                }
                for l in w.letters() {
                    if l.level as usize != level {
                        return Err(format!(
                            "extra word {} contains a letter of level {} (expected {})",
                            format_word(w),
                            l.level,
                            level
                        ));
                    }
                }
                set.insert((w.degree().unwrap(), w.clone()));
            }
            Ok(set.into_iter().map(|(_, w)| w).collect())
        }
    }
}

fn fmt_tuple(t: &[Sym]) -> String {
    if t.iter().all(|&v| v < 10) {
        t.iter().map(|v| v.to_string()).collect()
    } else {
        t.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
    }
}

/// Text form of a word: letters `f[a1..aj|x1..xj]` joined by `*`, `1` for the
/// identity, `0` for zero. Tuple components are digit-concatenated while all
/// symbols are below 10, comma-separated otherwise.
pub fn format_word(w: &Word) -> String {
    match w {
        Word::Zero => "0".to_string(),
        Word::Mono(ls) if ls.is_empty() => "1".to_string(),
        Word::Mono(ls) => ls
            .iter()
            .map(|l| format!("f[{}|{}]", fmt_tuple(&l.answers), fmt_tuple(&l.questions)))
            .collect::<Vec<_>>()
            .join("*"),
    }
}

fn parse_digits(s: &str) -> Result<Vec<Sym>, String> {
    s.chars()
        .map(|c| c.to_digit(10).map(|d| d as Sym).ok_or(format!("bad digit {c:?}")))
        .collect()
}

fn parse_commas(s: &str) -> Result<Vec<Sym>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<Sym>().map_err(|e| format!("bad symbol {p:?}: {e}")))
        .collect()
}

/// Parse an answer/question tuple pair. Digit concatenation is the preferred
/// reading; comma-separated components are used for symbols above 9. A
/// comma-free pair whose digit readings have mismatched lengths falls back to
/// one whole number per side.
fn parse_tuples(a: &str, x: &str) -> Result<(Vec<Sym>, Vec<Sym>), String> {
    if a.contains(',') || x.contains(',') {
        return Ok((parse_commas(a)?, parse_commas(x)?));
    }
    if let (Ok(ans), Ok(qs)) = (parse_digits(a), parse_digits(x)) {
        if ans.len() == qs.len() {
            return Ok((ans, qs));
        }
    }
    Ok((parse_commas(a)?, parse_commas(x)?))
}

/// Parse the text form produced by [`format_word`]. The result is reduced.
pub fn parse_word(s: &str) -> Result<Word, String> {
    let s = s.trim();
    if s == "0" {
        return Ok(Word::Zero);
    }
    if s == "1" {
        return Ok(Word::identity());
    }
    let mut letters = Vec::new();
    for part in s.split('*') {
        let part = part.trim();
        let inner = part
            .strip_prefix("f[")
            .and_then(|r| r.strip_suffix(']'))
            .ok_or(format!("bad letter {part:?}"))?;
        let (a, x) = inner.split_once('|').ok_or(format!("bad letter {part:?}"))?;
        let (answers, questions) = parse_tuples(a, x)?;
        if answers.len() != questions.len() || answers.is_empty() {
            return Err(format!("bad letter {part:?}"));
        }
        letters.push(Letter::new(answers.len(), answers, questions));
    }
    Ok(reduce(&letters))
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_word(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(level: usize, a: &[Sym], x: &[Sym]) -> Letter {
        Letter::new(level, a.to_vec(), x.to_vec())
    }

    #[test]
    fn merge_and_annihilate() {
        let p = l(1, &[0], &[0]);
        let q = l(1, &[1], &[0]);
        let r = l(1, &[0], &[1]);
        assert_eq!(reduce(&[p.clone(), p.clone()]), Word::Mono(vec![p.clone()]));
        assert_eq!(reduce(&[p.clone(), q.clone()]), Word::Zero);
        assert_eq!(
            reduce(&[p.clone(), r.clone()]).degree(),
            Some(2),
            "different questions never rewrite"
        );
        // merging exposes a new adjacency in one pass
        assert_eq!(reduce(&[p.clone(), p.clone(), q]), Word::Zero);
        let _ = r;
    }

    #[test]
    fn adjoint_involution() {
        let w = reduce(&[l(1, &[0], &[0]), l(1, &[1], &[1]), l(1, &[0], &[0])]);
        assert_eq!(adjoint(&adjoint(&w)), w);
        assert_eq!(adjoint(&Word::Zero), Word::Zero);
        assert_eq!(adjoint(&Word::identity()), Word::identity());
    }

    #[test]
    fn enumeration_counts_chsh() {
        // two parties, binary answers/questions: 16 level-2 letters, 17 words at degree 1
        let w1 = enumerate_words(2, 1, &[2, 2], &[2, 2]);
        assert_eq!(w1.len(), 17);
        let w2 = enumerate_words(2, 2, &[2, 2], &[2, 2]);
        assert_eq!(w2.len(), 209);
        // sorted by degree then lexicographically
        for pair in w2.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            assert!(
                a.degree() < b.degree() || (a.degree() == b.degree() && a < b),
                "order violated: {a} !< {b}"
            );
        }
    }

    #[test]
    fn enumeration_counts_tripartite() {
        let w = enumerate_words(3, 1, &[2, 2, 2], &[2, 2, 2]);
        assert_eq!(w.len(), 65);
    }

    #[test]
    fn hom_is_multiplicative() {
        let a = reduce(&[l(1, &[0], &[0]), l(1, &[1], &[1])]);
        let b = reduce(&[l(1, &[1], &[1]), l(1, &[0], &[0])]);
        let lhs = apply_hom(1, 0, &mul(&a, &b));
        let rhs = mul(&apply_hom(1, 0, &a), &apply_hom(1, 0, &b));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn text_round_trip() {
        let words = enumerate_words(2, 2, &[2, 2], &[2, 2]);
        for w in &words {
            assert_eq!(parse_word(&format_word(w)).unwrap(), *w);
        }
        assert_eq!(parse_word("0").unwrap(), Word::Zero);
        assert_eq!(parse_word("1").unwrap(), Word::identity());
        assert_eq!(format_word(&parse_word("f[01|10]*f[11|01]").unwrap()), "f[01|10]*f[11|01]");
        // wide alphabets use commas; mismatched digit readings fall back
        let w = Word::Mono(vec![l(1, &[11], &[3])]);
        assert_eq!(format_word(&w), "f[11|3]");
        assert_eq!(parse_word("f[11|3]").unwrap(), w);
        let wide = Word::Mono(vec![Letter::new(2, vec![11, 0], vec![0, 12])]);
        assert_eq!(format_word(&wide), "f[11,0|0,12]");
        assert_eq!(parse_word(&format_word(&wide)).unwrap(), wide);
    }

    #[test]
    fn scheme_plus_orders_and_validates() {
        let extra = vec![parse_word("f[00|00]*f[00|11]").unwrap()];
        let ws = scheme_words(2, &LevelScheme::Plus(1, extra), &[2, 2], &[2, 2]).unwrap();
        assert_eq!(ws.len(), 18);
        assert_eq!(ws.last().unwrap().degree(), Some(2));
        assert!(scheme_words(2, &LevelScheme::Plus(1, vec![Word::Zero]), &[2, 2], &[2, 2]).is_err());
    }
}
