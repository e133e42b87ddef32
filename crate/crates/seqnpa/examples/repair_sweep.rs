//! Sweep the signaling strength of a perturbed CHSH strategy and repair each
//! near-feasible moment matrix, printing the distance-vs-eps table.

use seqnpa::game;
use seqnpa::hierarchy::{constraints, index_for_game, DEFAULT_MAX_WORDS};
use seqnpa::repair::{default_dims, repair, strict_feasible, ResidualMap};
use seqnpa::strategy::random_strategy;
use seqnpa::words::LevelScheme;

fn main() {
    let game = game::chsh();
    let idx = index_for_game(&game, &LevelScheme::Full(1), DEFAULT_MAX_WORDS).unwrap();
    let cs = constraints(&idx);
    let emap = ResidualMap::new(&idx, &cs, 1e-9).unwrap();
    let sp = strict_feasible(&idx, 24, 100).unwrap();
    println!(
        "strict point: face dim {} of {}, face-restricted min eig {:.4e}",
        sp.face_dim,
        idx.nw(),
        sp.mu
    );
    let (d_sys, d_anc) = default_dims(&game.answers);
    println!("{:>9} {:>13} {:>13} {:>10} {:>10}", "eps", "residual_in", "residual_out", "d_total", "t_mix");
    for eps in [1e-2, 1e-3, 1e-4] {
        let s = random_strategy(&game.answers, &game.questions, d_sys, &d_anc, 42);
        let gamma = s.moment_matrix(&idx.words, eps);
        let (_, rep) = repair(&gamma, &emap, &sp, &idx, &cs).unwrap();
        println!(
            "{eps:>9.1e} {:>13.4e} {:>13.4e} {:>10.4e} {:>10.4e}",
            rep.residual_before, rep.residual_after, rep.d_total, rep.t_mix
        );
        assert!(rep.projection_bound_ok && rep.weyl_ok);
    }
}
