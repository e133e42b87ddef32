//! Export the CHSH level-1 relaxation in sparse SDPA format, re-import it,
//! and verify the round trip is byte-identical.

use seqnpa::game;
use seqnpa::hierarchy::{assemble, constraints, index_for_game, DEFAULT_MAX_WORDS};
use seqnpa::sdp::sdpa;
use seqnpa::words::LevelScheme;

fn main() {
    let game = game::chsh();
    let idx = index_for_game(&game, &LevelScheme::Full(1), DEFAULT_MAX_WORDS).unwrap();
    let cs = constraints(&idx);
    let p = assemble(&game, &idx, &cs).unwrap();
    let text = sdpa::export(&p);
    println!(
        "{} variables, {} equalities, PSD block {}x{}, {} bytes",
        p.nvars(),
        p.rhs.len(),
        p.n,
        p.n,
        text.len()
    );
    let q = sdpa::import(&text).unwrap();
    assert_eq!(sdpa::export(&q), text, "round trip must be byte-identical");
    println!("round trip byte-identical");
    for line in text.lines().take(6) {
        println!("| {line}");
    }
}
