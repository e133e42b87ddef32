//! Solve CHSH at hierarchy levels 1 and 2 and compare with the Tsirelson
//! value cos^2(pi/8).

use seqnpa::certify::solve_game;
use seqnpa::game;
use seqnpa::sdp::solver::SolverOptions;
use seqnpa::words::LevelScheme;

fn main() {
    let game = game::chsh();
    let opts = SolverOptions::default();
    let tsirelson = (std::f64::consts::PI / 8.0).cos().powi(2);
    for level in 1..=2 {
        let t0 = std::time::Instant::now();
        let (idx, _, sol) =
            solve_game(&game, &LevelScheme::Full(level), &opts).expect("solve failed");
        println!(
            "level {level}: {} words, {} classes, value {:.12} (certified {:.12}), \
             {} iterations in {:.1?}",
            idx.nw(),
            idx.n_classes(),
            sol.value,
            sol.certified_value,
            sol.iterations,
            t0.elapsed()
        );
    }
    println!("tsirelson bound:  value {tsirelson:.12}");
}
