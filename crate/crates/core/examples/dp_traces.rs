//! LIS, edit distance and CFG membership, each written as a DP trace and
//! checked against brute force.
//!
//!     cargo run --example dp_traces

use cotlab::dp::brute::{cfg_brute, ed_brute, lis_brute};
use cotlab::dp::cfg::{cfg_membership, cfg_sample, Cfg};
use cotlab::dp::ed::{ed_sample, ed_trace, EdCosts};
use cotlab::dp::lis::{lis_framework, lis_sample};

fn main() -> cotlab::Result<()> {
    let seq = [103, 107, 109, 112, 101, 103, 105, 107, 115, 109, 111, 113, 102];
    println!("{}", lis_sample(&seq).to_text());
    println!("framework {} / brute {}\n", lis_framework(&seq)?.answer, lis_brute(&seq)?);

    let (s1, s2): (Vec<char>, Vec<char>) = ("kitten".chars().collect(), "sitting".chars().collect());
    let c = EdCosts::EXPERIMENT;
    println!("{}", ed_sample(&s1, &s2, c).to_text());
    println!("framework {} / brute {}\n", ed_trace(&s1, &s2, c)?.answer, ed_brute(&s1, &s2, c)?);

    // Balanced a/b brackets, in the two-symbol canonical form.
    let g = Cfg::parse("S -> ε ; S -> A S ; A -> a B ; B -> S b")?;
    for w in ["aabb", "abab", "abba"] {
        let word: Vec<char> = w.chars().collect();
        let (ok, _) = cfg_membership(&g, &word)?;
        println!("{w}: {ok} (brute {})", cfg_brute(&g, &word)?);
    }
    let word: Vec<char> = "ab".chars().collect();
    println!("{}", cfg_sample(&g, &word)?.to_text());
    Ok(())
}
