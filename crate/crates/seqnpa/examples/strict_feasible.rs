//! Build a strictly feasible moment matrix for CHSH level 1 and inspect its
//! spectrum. "Strict" is relative to the feasibility face: the constraint rows
//! force a common null space on every feasible matrix, so the meaningful
//! quantity is the smallest eigenvalue on the orthogonal complement.

use seqnpa::game;
use seqnpa::hierarchy::{constraints, index_for_game, residual, DEFAULT_MAX_WORDS};
use seqnpa::repair::strict_feasible;
use seqnpa::sdp::linalg::eigh_sym;
use seqnpa::words::LevelScheme;

fn main() {
    let game = game::chsh();
    let idx = index_for_game(&game, &LevelScheme::Full(1), DEFAULT_MAX_WORDS).unwrap();
    let cs = constraints(&idx);
    let sp = strict_feasible(&idx, 24, 100).unwrap();
    let (_, res) = residual(&idx, &cs, &sp.gamma);
    println!(
        "averaged {} seeded strategies (seed {}), mixed {:?} with the uniform classical point",
        sp.samples, sp.seed, sp.weights
    );
    println!("structural residual {res:.3e}");
    println!(
        "null dim {} / face dim {} (of {} words); face-restricted min eig {:.6}",
        sp.null_dim,
        sp.face_dim,
        idx.nw(),
        sp.mu
    );
    let (vals, _) = eigh_sym(&sp.gamma);
    println!("spectrum (ascending): {:?}", vals.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>());
}
