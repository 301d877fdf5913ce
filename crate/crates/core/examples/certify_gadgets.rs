//! Numerical certification of every gadget at its formula-chosen scale.
//!
//!     cargo run --release --example certify_gadgets [eps]

use cotlab::nn::certify::{certify_all, certify_mult, LemmaConfig};

fn main() -> cotlab::Result<()> {
    let eps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1e-3);
    let cfg = LemmaConfig { eps, trials: 1000, seed: 1 };
    for r in certify_all(&cfg)? {
        println!("{r}");
    }
    println!("{}", certify_mult(5.0, 1e-2));
    Ok(())
}
