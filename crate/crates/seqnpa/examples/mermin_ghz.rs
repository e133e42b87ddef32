//! Tripartite Mermin game: hierarchy value at level 1 versus the GHZ strategy
//! and the classical bound.

use seqnpa::certify::solve_game;
use seqnpa::game;
use seqnpa::sdp::solver::SolverOptions;
use seqnpa::strategy::mermin3_ghz;
use seqnpa::words::LevelScheme;

fn main() {
    let game = game::mermin3();
    let (classical, tables) = game.classical_value().expect("classical enumeration");
    println!("classical value {classical} (tables {tables:?})");

    let ghz = mermin3_ghz();
    ghz.validate(1e-9).expect("GHZ strategy invalid");
    println!("GHZ strategy score {:.12}", ghz.score(&game, 0.0));

    let t0 = std::time::Instant::now();
    let (idx, _, sol) =
        solve_game(&game, &LevelScheme::Full(1), &SolverOptions::default()).expect("solve");
    println!(
        "level 1: {} words, value {:.9} (certified {:.9}) in {:.1?}",
        idx.nw(),
        sol.value,
        sol.certified_value,
        t0.elapsed()
    );
}
