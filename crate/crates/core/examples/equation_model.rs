//! The hand-built Gaussian elimination transformer on a 3-unknown system.
//!
//!     cargo run --release --example equation_model

use cotlab::constructed::decode;
use cotlab::constructed::equation::{build_equation_model, equation_reference};
use cotlab::constructed::verify::{equation_instances, verify, Instance};
use cotlab::equation::LinearSystem;

fn main() -> cotlab::Result<()> {
    let m = build_equation_model(3, 11, 0.25)?;
    let (w, at) = m.max_weight();
    println!("{}: width {}, max |weight| {w:.3e} at {at}", m.name, m.width());

    let sys = LinearSystem::parse("2 x1 + 3 x2 + 3 x3 = 8 , 1 x1 + 7 x2 + 0 x3 = 0 , 0 x1 + 2 x2 + 1 x3 = 1 ,", 11)?;
    let inst = Instance::from_sample(&sys.trace()?);
    let (out, _) = decode(&m, &m.encode(&inst.prompt)?, m.max_len, None)?;
    let got = m.decode_ids(&out.output);
    for block in got.split(|t| t == "[SEP]") {
        println!("  {}", block.join(" "));
    }
    println!("matches oracle: {}", got == inst.expected);

    let rep = verify(&m, &equation_instances(3, 11, 50, 2), None, &|t: &[String]| equation_reference(t, 3));
    println!("\n{}", rep.render());
    Ok(())
}
