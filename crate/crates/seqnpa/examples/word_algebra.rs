//! Tour of the word algebra: letters, reduction, adjoints, the level-raising
//! homomorphism, and word enumeration.

use seqnpa::words::{
    adjoint, apply_hom, enumerate_words, format_word, mul, parse_word, Letter, Word,
};

fn main() {
    // bipartite binary letters at level 1 and 2
    let f = Word::Mono(vec![Letter::new(1, vec![0], vec![1])]);
    let g = Word::Mono(vec![Letter::new(2, vec![0, 1], vec![1, 0])]);
    println!("f = {}", format_word(&f));
    println!("g = {}", format_word(&g));
    println!("f*f = {} (projection merges)", format_word(&mul(&f, &f)));
    let f2 = Word::Mono(vec![Letter::new(1, vec![1], vec![1])]);
    println!("f*f' = {} (same question, different answer annihilates)", format_word(&mul(&f, &f2)));
    println!("(fg)^* = {}", format_word(&adjoint(&mul(&f, &g))));

    // the homomorphism sends level-j letters to level-(j+1) letters
    println!("hom_(1|0)(f) = {}", format_word(&apply_hom(1, 0, &f)));

    // enumeration sizes for CHSH
    for n in 1..=2 {
        let words = enumerate_words(2, n, &[2, 2], &[2, 2]);
        println!("level {n}: {} words", words.len());
    }

    // text round trip
    let w = mul(&f, &g);
    let s = format_word(&w);
    assert_eq!(format_word(&parse_word(&s).unwrap()), s);
    println!("parsed {s:?} back successfully");
}
