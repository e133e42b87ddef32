//! Dial the eps-signaling knob on a random dilated strategy and watch the
//! structural residual of its moment matrix grow linearly from zero.

use seqnpa::game;
use seqnpa::hierarchy::{constraints, index_for_game, residual, DEFAULT_MAX_WORDS};
use seqnpa::repair::default_dims;
use seqnpa::strategy::random_strategy;
use seqnpa::words::LevelScheme;

fn main() {
    let game = game::chsh();
    let idx = index_for_game(&game, &LevelScheme::Full(1), DEFAULT_MAX_WORDS).unwrap();
    let cs = constraints(&idx);
    let (d_sys, d_anc) = default_dims(&game.answers);
    let s = random_strategy(&game.answers, &game.questions, d_sys, &d_anc, 7);
    s.validate(1e-9).unwrap();
    println!("{:>9} {:>13} {:>14}", "eps", "residual", "score");
    for eps in [0.0, 1e-4, 1e-3, 1e-2, 1e-1] {
        let gamma = s.moment_matrix(&idx.words, eps);
        let (_, res) = residual(&idx, &cs, &gamma);
        println!("{eps:>9.1e} {res:>13.4e} {:>14.9}", s.score(&game, eps));
    }
}
