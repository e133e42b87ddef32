//! SDPA sparse-format (.dat-s) export/import for the entry-partition problem.
//!
//! Mapping: SDPA asks for `min c.x` with `sum_i x_i F_i - F_0 >= 0`. We write
//! `c = -objective` (ours is maximized), block 1 of size `n` carrying the
//! structured PSD matrix (each variable's `F_i` is the 0/1 indicator of its
//! entries), and a diagonal block of size `2*neq` encoding every equality row
//! as a pair of opposite inequalities. Values are printed with 17 significant
//! digits so that `import(export(p))` reproduces the problem exactly and
//! re-export is byte-identical. Variable labels are not serialized.

use super::{CsrMatrix, SdpProblem};
use std::fmt::Write as _;

fn fmt_val(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Serialize to SDPA sparse text.
pub fn export(p: &SdpProblem) -> String {
    let m = p.nvars();
    let neq = p.rhs.len();
    let mut s = String::new();
    let _ = writeln!(s, "{m}");
    let _ = writeln!(s, "2");
    let _ = writeln!(s, "{} -{}", p.n, 2 * neq);
    let c_line: Vec<String> = p.objective.iter().map(|&v| fmt_val(-v)).collect();
    let _ = writeln!(s, "{}", c_line.join(" "));
    // F_0: only the diagonal block (rhs pairs), zeros omitted
    for (r, &b) in p.rhs.iter().enumerate() {
        if b != 0.0 {
            let _ = writeln!(s, "0 2 {} {} {}", 2 * r + 1, 2 * r + 1, fmt_val(b));
            let _ = writeln!(s, "0 2 {} {} {}", 2 * r + 2, 2 * r + 2, fmt_val(-b));
        }
    }
    // per-variable equality coefficients, gathered by column
    let mut var_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for r in 0..neq {
        let (cols, vals) = p.eq.row(r);
        for (c, v) in cols.iter().zip(vals) {
            var_rows[*c as usize].push((r, *v));
        }
    }
    for v in 0..m {
        for &(i, j) in &p.var_entries[v] {
            if i <= j {
                let _ = writeln!(s, "{} 1 {} {} {}", v + 1, i + 1, j + 1, fmt_val(1.0));
            }
        }
        for &(r, a) in &var_rows[v] {
            let _ = writeln!(s, "{} 2 {} {} {}", v + 1, 2 * r + 1, 2 * r + 1, fmt_val(a));
            let _ = writeln!(s, "{} 2 {} {} {}", v + 1, 2 * r + 2, 2 * r + 2, fmt_val(-a));
        }
    }
    s
}

/// Parse SDPA sparse text written by [`export`] (comment lines allowed).
pub fn import(text: &str) -> Result<SdpProblem, String> {
    let mut tokens: Vec<&str> = Vec::new();
    for line in text.lines() {
        let t = line.trim();
        if t.starts_with('*') || t.starts_with('"') {
            continue;
        }
        tokens.extend(t.split_whitespace());
    }
    let mut pos = 0usize;
    fn take<'a>(tokens: &[&'a str], pos: &mut usize, what: &str) -> Result<&'a str, String> {
        let t = tokens
            .get(*pos)
            .ok_or(format!("unexpected end of file reading {what}"))?;
        *pos += 1;
        Ok(t)
    }
    macro_rules! next {
        ($what:expr) => {
            take(&tokens, &mut pos, $what)
        };
    }
    let m: usize = next!("mDIM")?.parse().map_err(|e| format!("mDIM: {e}"))?;
    let nblock: usize = next!("nBLOCK")?.parse().map_err(|e| format!("nBLOCK: {e}"))?;
    if nblock != 2 {
        return Err(format!("expected 2 blocks, found {nblock}"));
    }
    let n: i64 = next!("block 1 size")?.parse().map_err(|e| format!("block 1: {e}"))?;
    let b2: i64 = next!("block 2 size")?.parse().map_err(|e| format!("block 2: {e}"))?;
    if n <= 0 || b2 >= 0 || (-b2) % 2 != 0 {
        return Err(format!("unsupported block structure {n} {b2}"));
    }
    let n = n as usize;
    let neq = (-b2 as usize) / 2;
    let mut objective = Vec::with_capacity(m);
    for i in 0..m {
        let v: f64 = next!("c")?.parse().map_err(|e| format!("c[{i}]: {e}"))?;
        objective.push(-v);
    }
    let mut var_entries: Vec<Vec<(u32, u32)>> = vec![Vec::new(); m];
    let mut rhs = vec![0.0; neq];
    // diag coefficients per (matno, row): (odd value, even value) for mirror checks
    let mut diag: Vec<std::collections::HashMap<usize, (Option<f64>, Option<f64>)>> =
        vec![Default::default(); m + 1];
    while pos < tokens.len() {
        let matno: usize = next!("matno")?.parse().map_err(|e| format!("matno: {e}"))?;
        let blk: usize = next!("block")?.parse().map_err(|e| format!("block: {e}"))?;
        let i: usize = next!("i")?.parse().map_err(|e| format!("i: {e}"))?;
        let j: usize = next!("j")?.parse().map_err(|e| format!("j: {e}"))?;
        let val: f64 = next!("value")?.parse().map_err(|e| format!("value: {e}"))?;
        if matno > m {
            return Err(format!("matrix index {matno} out of range"));
        }
        match blk {
            1 => {
                if matno == 0 {
                    return Err("nonzero F_0 entries in the PSD block are unsupported".into());
                }
                if i < 1 || j < 1 || i > n || j > n || i > j {
                    return Err(format!("bad PSD entry ({i},{j})"));
                }
                if val != 1.0 {
                    return Err(format!("PSD block coefficients must be 1, found {val}"));
                }
                let (a, b) = ((i - 1) as u32, (j - 1) as u32);
                var_entries[matno - 1].push((a, b));
                if a != b {
                    var_entries[matno - 1].push((b, a));
                }
            }
            2 => {
                if i != j || i < 1 || i > 2 * neq {
                    return Err(format!("bad diagonal entry ({i},{j})"));
                }
                let r = (i - 1) / 2;
                let slot = diag[matno].entry(r).or_insert((None, None));
                if i % 2 == 1 {
                    slot.0 = Some(val);
                } else {
                    slot.1 = Some(val);
                }
            }
            _ => return Err(format!("unknown block {blk}")),
        }
    }
    // assemble equality rows; every stored pair must mirror exactly
    let mut row_cols: Vec<Vec<(u32, f64)>> = vec![Vec::new(); neq];
    for (matno, entries) in diag.iter().enumerate() {
        for (&r, &(odd, even)) in entries {
            let a = odd.ok_or(format!("missing odd diagonal entry for row {r}"))?;
            let bneg = even.ok_or(format!("missing even diagonal entry for row {r}"))?;
            if (a + bneg).abs() > 1e-12 * a.abs().max(1.0) {
                return Err(format!("diagonal pair for row {r} does not mirror: {a} vs {bneg}"));
            }
            if matno == 0 {
                rhs[r] = a;
            } else {
                row_cols[r].push(((matno - 1) as u32, a));
            }
        }
    }
    let mut indptr = vec![0usize];
    let mut indices = Vec::new();
    let mut data = Vec::new();
    for cols in &mut row_cols {
        cols.sort_by_key(|&(c, _)| c);
        for &(c, v) in cols.iter() {
            indices.push(c);
            data.push(v);
        }
        indptr.push(indices.len());
    }
    let eq = CsrMatrix { rows: neq, cols: m, indptr, indices, data };
    // canonical entry order and the fixed-zero complement
    let mut covered = vec![false; n * n];
    for entries in &mut var_entries {
        entries.sort();
        entries.dedup();
        for &(i, j) in entries.iter() {
            let f = i as usize * n + j as usize;
            if covered[f] {
                return Err(format!("entry ({i},{j}) assigned to two variables"));
            }
            covered[f] = true;
        }
    }
    let mut fixed_zero = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if !covered[i * n + j] {
                fixed_zero.push((i as u32, j as u32));
            }
        }
    }
    let p = SdpProblem {
        n,
        var_entries,
        fixed_zero,
        eq,
        rhs,
        objective,
        var_labels: vec![String::new(); m],
    };
    p.validate()?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game;
    use crate::hierarchy::{assemble, constraints, index_for_game, DEFAULT_MAX_WORDS};
    use crate::words::LevelScheme;

    fn chsh_problem() -> SdpProblem {
        let g = game::chsh();
        let idx = index_for_game(&g, &LevelScheme::Full(1), DEFAULT_MAX_WORDS).unwrap();
        let cs = constraints(&idx);
        assemble(&g, &idx, &cs).unwrap()
    }

    #[test]
    fn round_trip_exact_and_byte_identical() {
        let p = chsh_problem();
        let text = export(&p);
        let q = import(&text).unwrap();
        assert_eq!(q.n, p.n);
        assert_eq!(q.var_entries, p.var_entries);
        assert_eq!(q.fixed_zero, p.fixed_zero);
        assert_eq!(q.eq, p.eq);
        assert_eq!(q.rhs, p.rhs);
        assert_eq!(q.objective, p.objective);
        assert_eq!(export(&q), text, "re-export must be byte-identical");
    }

    #[test]
    fn comments_are_skipped() {
        let p = chsh_problem();
        let text = format!("* a comment\n\"quoted\"\n{}", export(&p));
        assert!(import(&text).is_ok());
    }

    #[test]
    fn rejects_garbage() {
        assert!(import("3\n1\n4\n").is_err());
        assert!(import("").is_err());
    }
}
