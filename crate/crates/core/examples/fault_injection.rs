//! Break one gadget on purpose and watch verification point at it.
//!
//!     cargo run --release --example fault_injection

use cotlab::constructed::arithmetic::{arithmetic_reference, build_arithmetic_model};
use cotlab::constructed::verify::{arithmetic_instances, verify};
use cotlab::constructed::Fault;

fn main() -> cotlab::Result<()> {
    let m = build_arithmetic_model(64, 11, 0.25)?;
    let insts = arithmetic_instances(7, 11, 100, 1);
    let vocab = m.vocab.clone();
    let reference = move |t: &[String]| arithmetic_reference(t, &vocab, 11);

    let mut faults = Vec::new();
    for (l, layer) in m.layers.iter().enumerate() {
        faults.extend(layer.heads.iter().map(|h| Fault::HeadLambda { layer: l + 1, head: h.name.clone() }));
        faults.extend(layer.parts.iter().map(|(p, _)| Fault::MlpLambda { layer: l + 1, part: p.clone() }));
    }
    for f in faults {
        let rep = verify(&m.with_fault(&f)?, &insts, None, &reference);
        let first = rep.divergences.first().and_then(|d| d.slots.first());
        let at = first.map_or(String::from("-"), |s| format!("L{} {} (got {}, want {})", s.layer, s.slot, s.got, s.want));
        println!("{:<50} {:>3}/{} wrong, first bad slot {at}", format!("{f:?}"), rep.mismatches, rep.trials);
    }
    Ok(())
}
