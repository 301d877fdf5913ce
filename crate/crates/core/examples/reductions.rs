//! Boolean formulas as Z_p arithmetic, and automaton runs as linear systems.
//!
//!     cargo run --example reductions

use cotlab::datagen::reduce::{reduce_automaton, reduce_boolean, Automaton, Formula};
use cotlab::equation::solve_direct;

fn main() -> cotlab::Result<()> {
    for text in ["¬1", "(1∨0)", "((¬0)∧(1∨0))"] {
        let f = Formula::parse(text)?;
        let e = reduce_boolean(&f, 11)?;
        println!("{text:<16} -> {:<40} = {} (truth {})", e.compact(), e.evaluate()?, f.eval() as u8);
    }
    let mut bad = 0;
    let all: Vec<Formula> = (0..=3).flat_map(Formula::enumerate).collect();
    for f in &all {
        bad += (reduce_boolean(f, 11)?.evaluate()? != f.eval() as u64) as usize;
    }
    println!("{} formulas up to 3 connectives, {bad} wrong\n", all.len());

    // Parity of the number of 1s.
    let a = Automaton::new(vec!['0', '1'], vec![vec![0, 1], vec![1, 0]], vec![false, true], 0)?;
    for w in ["", "1", "0110", "10101"] {
        let word: Vec<char> = w.chars().collect();
        let (sys, star) = reduce_automaton(&a, &word, 11)?;
        let x = solve_direct(&sys)?;
        println!("{w:>6}: {} unknowns, x* = {}, accepts = {}", sys.m, x[star], a.accepts(&word)?);
    }
    Ok(())
}
