//! A transformer with hand-set weights that writes the arithmetic trace
//! token by token, plus a verification run over random prompts.
//!
//!     cargo run --release --example arithmetic_model

use cotlab::arith::lex;
use cotlab::constructed::arithmetic::{arithmetic_reference, build_arithmetic_model};
use cotlab::constructed::decode;
use cotlab::constructed::verify::{arithmetic_instances, verify};

fn main() -> cotlab::Result<()> {
    let m = build_arithmetic_model(32, 11, 0.25)?;
    println!("{}: {} layers, width {}, runs up to {} tokens", m.name, m.layers.len(), m.width(), m.max_len);
    for (l, layer) in m.layers.iter().enumerate() {
        let heads: Vec<&str> = layer.heads.iter().map(|h| h.name.as_str()).collect();
        println!("  L{}: heads {:?}, {} hidden units", l + 1, heads, layer.mlp.hidden());
    }

    let mut prompt = lex("1+5×(1−2)");
    prompt.push("=".into());
    let (out, _) = decode(&m, &m.encode(&prompt)?, m.max_len, None)?;
    println!("\n{} {}", prompt.join(" "), m.decode_ids(&out.output).join(" "));
    println!("smallest logit gap {:.3}", out.min_gap);

    let insts = arithmetic_instances(5, 11, 200, 1);
    let vocab = m.vocab.clone();
    let rep = verify(&m, &insts, Some(20), &move |t: &[String]| arithmetic_reference(t, &vocab, 11));
    println!("\n20-bit stream:\n{}", rep.render());
    Ok(())
}
