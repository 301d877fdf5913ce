use cotlab::constructed::arithmetic::{arithmetic_max_len, arithmetic_reference, build_arithmetic_model};
use cotlab::constructed::equation::{build_equation_model, equation_reference};
use cotlab::constructed::verify::{arithmetic_instances, compare_slots, equation_instances, verify, Instance};
use cotlab::constructed::{decode, forward_residual, Decoder, Expect, Fault, ModelSpec};
use cotlab::equation::LinearSystem;
use cotlab::nn::bundle::{read_bundle, write_bundle};
use cotlab::Error;

fn arith(n_max: usize) -> ModelSpec {
    build_arithmetic_model(n_max, 11, 0.25).unwrap()
}

fn run_arith(m: &ModelSpec, insts: &[Instance], quant: Option<u32>) -> cotlab::constructed::verify::VerifyReport {
    let vocab = m.vocab.clone();
    verify(m, insts, quant, &move |t: &[String]| arithmetic_reference(t, &vocab, 11))
}

fn full_tokens(inst: &Instance) -> Vec<String> {
    let mut t = inst.prompt.clone();
    t.extend(inst.expected[..inst.expected.len() - 1].iter().cloned());
    t
}

#[test]
fn residual_form_matches_incremental_decoder() {
    let m = arith(16);
    for inst in arithmetic_instances(5, 11, 20, 3) {
        let ids = m.encode(&full_tokens(&inst)).unwrap();
        let x = forward_residual(&m, &ids).unwrap();
        let mut dec = Decoder::new(&m, None);
        for &t in &ids {
            dec.push(t).unwrap();
        }
        for (i, row) in dec.rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                let w = x.get(i, c);
                assert!((v - w).abs() <= 1e-12 * (1.0 + v.abs()), "pos {i} col {c}: {v} vs {w}");
            }
        }
    }
}

#[test]
fn quantized_stream_still_exact() {
    let m = arith(32);
    let rep = run_arith(&m, &arithmetic_instances(5, 11, 100, 4), Some(20));
    assert!(rep.passed(), "{}", rep.render());
}

#[test]
fn weights_follow_the_degree_four_bound() {
    // The widest gadget imitates a ReLU over inputs as large as N^2 times a
    // fan-in of 8 N^2, so its first layer carries 8 N^4 / (sqrt(2 pi) e)
    // with N the longest run and e = 4e-9 times the error budget.
    for n_max in [32, 64] {
        let m = arith(n_max);
        let n = arithmetic_max_len(n_max) as f64;
        let formula = 8.0 * n.powi(4) / ((2.0 * std::f64::consts::PI).sqrt() * 1e-9);
        let (w, at) = m.max_weight();
        assert!(w <= m.weight_bound, "{w} at {at} above {}", m.weight_bound);
        assert!((m.weight_bound / formula - 1.0).abs() < 1e-9, "n_max {n_max}: {} vs {formula}", m.weight_bound);
    }
    assert_eq!(arithmetic_max_len(64), 1056);
    let w = arith(64).weight_bound;
    assert!((w / 3.968768e21 - 1.0).abs() < 1e-6, "{w}");
}

#[test]
fn bundle_round_trip_restores_the_model() {
    let a = arith(16);
    let mut bytes = Vec::new();
    write_bundle(&mut bytes, &a.named_weights()).unwrap();
    let items = read_bundle(bytes.as_slice()).unwrap();
    let mut b = build_arithmetic_model(16, 11, 0.1).unwrap();
    assert_ne!(b.named_weights(), a.named_weights());
    b.load_weights(&items).unwrap();
    assert_eq!(b.named_weights(), a.named_weights());
    let rep = run_arith(&b, &arithmetic_instances(5, 11, 30, 5), None);
    assert!(rep.passed(), "{}", rep.render());

    let mut e = build_equation_model(2, 5, 0.25).unwrap();
    assert!(e.load_weights(&items).is_err());
}

#[test]
fn mlp_fault_is_localized() {
    let m = arith(64).with_fault(&Fault::MlpLambda { layer: 1, part: "mult:n".into() }).unwrap();
    let rep = run_arith(&m, &arithmetic_instances(7, 11, 100, 1), None);
    assert!(rep.mismatches > 0);
    let d = &rep.divergences[0];
    assert!(!d.slots.is_empty(), "{}", rep.render());
    assert_eq!((d.slots[0].layer, d.slots[0].slot.as_str()), (1, "n"));

    assert!(arith(16).with_fault(&Fault::MlpLambda { layer: 9, part: "mult:n".into() }).is_err());
    assert!(arith(16).with_fault(&Fault::HeadLambda { layer: 1, head: "nope".into() }).is_err());
}

#[test]
fn head_lambda_fault_leaves_margins() {
    let m = arith(32);
    let name = m.layers[1].heads[0].name.clone();
    let f = m.with_fault(&Fault::HeadLambda { layer: 2, head: name }).unwrap();
    assert_eq!(f.layers[1].heads[0].head.lambda, m.layers[1].heads[0].head.lambda / 2.0);
    let rep = run_arith(&f, &arithmetic_instances(5, 11, 50, 6), None);
    assert_eq!(rep.mismatches, 0, "{}", rep.render());
}

#[test]
fn gap_checker_catches_shrunken_scores() {
    let mut m = arith(32);
    // Halving the query of the previous-token head halves every
    // non-matching score, closing the gap.
    assert_eq!(m.layers[1].heads[0].name, "prev");
    let h = &mut m.layers[1].heads[0].head;
    h.q = h.q.scale(0.5);
    let rep = run_arith(&m, &arithmetic_instances(5, 11, 10, 7), None);
    assert!(!rep.head_failures.is_empty());
    assert!(rep.head_failures.iter().all(|(_, h, _)| h == "L2.prev"), "{}", rep.render());
    assert!(!rep.passed());
}

#[test]
fn single_unknown_system() {
    let m = build_equation_model(1, 11, 0.25).unwrap();
    let sys = LinearSystem::parse("5 x1 = 3 ,", 11).unwrap();
    let inst = Instance::from_sample(&sys.trace().unwrap());
    let (out, _) = decode(&m, &m.encode(&inst.prompt).unwrap(), 64, None).unwrap();
    assert_eq!(m.decode_ids(&out.output), inst.expected);
    assert_eq!(inst.expected.join(" "), "x1 = 5 , <eos>");
}

#[test]
fn variable_count_slot_on_a_parsed_prompt() {
    let m = build_equation_model(3, 11, 0.25).unwrap();
    let sys = LinearSystem::parse("2 x1 + 3 x2 + 3 x3 = 8 , 1 x1 + 7 x2 + 0 x3 = 0 , 0 x1 + 2 x2 + 1 x3 = 1 ,", 11).unwrap();
    let inst = Instance::from_sample(&sys.trace().unwrap());
    let toks = full_tokens(&inst);
    let want = equation_reference(&toks, 3).unwrap();
    let last = inst.prompt.len() - 1;
    assert!(want[last].contains(&("n_var", Expect::Scalar(3.0))), "{:?}", want[last]);
    let mut dec = Decoder::new(&m, None);
    for t in m.encode(&toks).unwrap() {
        dec.push(t).unwrap();
    }
    for (i, row) in dec.rows.iter().enumerate() {
        assert!(compare_slots(&m, row, &want[i]).is_empty(), "position {}", i + 1);
    }
}

#[test]
fn length_limits() {
    let m = arith(8);
    let long: Vec<String> = "1 + 2 + 3 + 4 + 5 =".split(' ').map(String::from).collect();
    let ids = m.encode(&long).unwrap();
    assert!(matches!(decode(&m, &ids, 10, None), Err(Error::LengthExceeded { len: 10, max: 8 })));
    let mut dec = Decoder::new(&m, None);
    let one = m.token_id("1").unwrap();
    for _ in 0..m.max_len {
        dec.push(one).unwrap();
    }
    assert!(matches!(dec.push(one), Err(Error::LengthExceeded { .. })));
}

#[test]
fn equation_model_small_sweep() {
    let m = build_equation_model(2, 7, 0.25).unwrap();
    let rep = verify(&m, &equation_instances(2, 7, 40, 8), None, &|t: &[String]| equation_reference(t, 2));
    assert!(rep.passed(), "{}", rep.render());
    assert!(rep.min_gap >= 1.0 - 1e-6);
}
