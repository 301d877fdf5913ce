//! Five-layer model that writes the reduction trace of an arithmetic
//! expression over Z_p, one token at a time.
//!
//! Stream symbols per position `i`: `n` counts the `=` signs so far, `p` is
//! the position of the last one (0 if none) and `d = i - p`. A token's
//! *address* is `(n_prev, i - p_prev)`, read from the previous position, so
//! the `=` closing a segment is addressed as the segment's last cell.
//! Layer 3 reads the next five cells of the previous segment and looks up
//! whether they start the leftmost handle; layer 4 finds where the current
//! segment performed its reduction and how far the copy has to skip; layer
//! 5 copies the right cell, or emits the computed value.

use super::build::{add, scale, Builder, Lin, Precision};
use super::{Expect, ModelSpec, Reference};
use crate::arith::{find_handles, Op, Tok};
use crate::error::{Error, Result};
use crate::field::is_prime;
use crate::nn::tensor::{Matrix, SlotLayout};

pub const OPS: [&str; 4] = ["+", "−", "×", "÷"];

pub fn arithmetic_vocab(p: u64) -> Vec<String> {
    let mut v: Vec<String> = (0..p).map(|x| x.to_string()).collect();
    for s in OPS.iter().chain(&["(", ")", "=", "<eos>"]) {
        v.push(s.to_string());
    }
    v
}

/// Positions needed to run a prompt of at most `n_max` tokens (trailing
/// `=` included): every step shortens the expression by at least two.
pub fn arithmetic_max_len(n_max: usize) -> usize {
    let top = if n_max.is_multiple_of(2) { n_max - 1 } else { n_max - 2 };
    (0..=top / 2).map(|k| top - 2 * k + 1).sum()
}

/// Most `=` signs a run can contain.
pub fn arithmetic_max_eq(n_max: usize) -> usize {
    ((n_max - 1) / 2).max(1)
}

pub fn build_arithmetic_model(n_max: usize, p: u64, eps: f64) -> Result<ModelSpec> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if n_max < 4 {
        return Err(Error::Invalid(format!("n_max must be at least 4, got {n_max}")));
    }
    let prec = Precision::from_total(eps)?;
    let vocab = arithmetic_vocab(p);
    let nv = vocab.len();
    let id = |s: &str| vocab.iter().position(|v| v == s).unwrap();
    let (eq, lp, rp, eos) = (id("="), id("("), id(")"), id("<eos>"));
    let op_id = |o: Op| id(o.symbol());
    let max_len = arithmetic_max_len(n_max);
    let big_n = max_len as f64;
    let big_e = arithmetic_max_eq(n_max) as f64;
    let n2 = big_n * big_n;

    let mut layout = SlotLayout::new();
    layout.add("tok", nv, 1.0, "current token, one-hot");
    let pos_col = layout.add("pos", 1, big_n, "position, from 1");
    layout.add("one", 1, 1.0, "constant 1");
    let mut b = Builder::new(layout, max_len, prec);
    let one = b.v("one");
    let pos = b.v("pos");
    let tok = |b: &Builder, t: usize| b.at("tok", t);

    // Layer 1: count '=' and find the last one.
    b.mean("eq_frac", &[vec![]], &[vec![]], &[tok(&b, eq)], big_n, &[("frac", 1, 1.0, "share of '=' among positions 1..i")])?;
    b.copy(
        "last_eq",
        std::slice::from_ref(&one),
        &[add(&tok(&b, eq), &scale(&one, -1.0))],
        Some(&pos),
        std::slice::from_ref(&pos),
        1.0,
        big_n,
        &[("p_copy", 1, big_n, "position of the last '=' (meaningless before the first)")],
    )?;
    b.mlp_slots(&[
        ("n", 1, big_e, "number of '=' up to i"),
        ("pos_sq", 1, n2, "i squared"),
        ("p", 1, big_n, "position of the last '=', 0 if none"),
    ]);
    let frac = b.v("frac");
    b.mult(frac.clone(), scale(&pos, 1.0 / big_n), "n", big_n);
    b.mult(scale(&pos, 1.0 / big_n), scale(&pos, 1.0 / big_n), "pos_sq", n2);
    // Select p_copy when frac >= 1/N, else 0.
    let k_sel = 2.0 * n2;
    let t_sel = add(&scale(&frac, k_sel), &scale(&one, -k_sel / (2.0 * big_n)));
    let p_col = b.v("p");
    b.relu(vec![
        (add(&b.v("p_copy"), &t_sel), 0.0, p_col.clone()),
        (t_sel.clone(), 0.0, scale(&p_col, -1.0)),
    ]);
    b.end_layer()?;

    // Layer 2: read n and p from position i - 1.
    let (n, pos_sq, pp) = (b.v("n"), b.v("pos_sq"), b.v("p"));
    b.copy(
        "prev",
        &[pos.clone(), pos_sq.clone(), one.clone()],
        &[add(&scale(&pos, 2.0), &scale(&one, 2.0)), scale(&one, -1.0), add(&add(&scale(&one, -1.0), &scale(&pos, -2.0)), &scale(&pos_sq, -1.0))],
        None,
        &[n.clone(), pp.clone()],
        n2,
        n2,
        &[("n_prev", 1, big_e, "n at i - 1"), ("p_prev", 1, big_n, "p at i - 1")],
    )?;
    b.mlp_slots(&[
        ("n_sq", 1, big_e * big_e, "n squared"),
        ("d_sq", 1, n2, "(i - p) squared"),
        ("nh_sq", 1, big_e * big_e, "n_prev squared"),
        ("dh_sq", 1, n2, "(i - p_prev) squared"),
        ("g", 1, 1.0, "1 once the first '=' is reached"),
        ("is_d1", 1, 1.0, "1 when i - p = 1"),
        ("first", 1, 1.0, "1 at position 1"),
    ]);
    let d = add(&pos, &scale(&pp, -1.0));
    let (n_prev, p_prev) = (b.v("n_prev"), b.v("p_prev"));
    let dh = add(&pos, &scale(&p_prev, -1.0));
    b.mult(scale(&n, 1.0 / big_e), scale(&n, 1.0 / big_e), "n_sq", big_e * big_e);
    b.mult(scale(&d, 1.0 / big_n), scale(&d, 1.0 / big_n), "d_sq", n2);
    b.mult(scale(&n_prev, 1.0 / big_e), scale(&n_prev, 1.0 / big_e), "nh_sq", big_e * big_e);
    b.mult(scale(&dh, 1.0 / big_n), scale(&dh, 1.0 / big_n), "dh_sq", n2);
    let (g, is_d1, first) = (b.v("g"), b.v("is_d1"), b.v("first"));
    let neg_pos = scale(&pos, -1.0);
    b.relu(vec![
        (n.clone(), 0.0, g.clone()),
        (n.clone(), -1.0, scale(&g, -1.0)),
        (d.clone(), 0.0, is_d1.clone()),
        (d.clone(), -1.0, scale(&is_d1, -2.0)),
        (d.clone(), -2.0, is_d1.clone()),
        (neg_pos.clone(), 2.0, first.clone()),
        (neg_pos, 1.0, scale(&first, -1.0)),
    ]);
    b.end_layer()?;

    // Address key shared by layers 3 and 5: -(a - n_prev)^2 - (o - dh)^2.
    let (n_sq, d_sq, nh_sq, dh_sq) = (b.v("n_sq"), b.v("d_sq"), b.v("nh_sq"), b.v("dh_sq"));
    let key = vec![scale(&n_prev, 2.0), scale(&dh, 2.0), one.clone(), add(&scale(&nh_sq, -1.0), &scale(&dh_sq, -1.0))];
    // (n - 1)^2 as a linear form.
    let nm1_sq = add(&add(&n_sq, &scale(&n, -2.0)), &one);
    let tok_rows: Vec<Lin> = (0..nv).map(|t| tok(&b, t)).collect();

    // Layer 3: the five cells after offset d in the previous segment.
    let names: Vec<String> = (1..=5).map(|t| format!("c{t}")).collect();
    for t in 1..=5 {
        let tf = t as f64;
        let off = add(&d, &scale(&one, tf));
        let off_sq = add(&add(&d_sq, &scale(&d, 2.0 * tf)), &scale(&one, tf * tf));
        let q = vec![add(&n, &scale(&one, -1.0)), off, scale(&add(&nm1_sq, &off_sq), -1.0), one.clone()];
        let desc = format!("token at offset d + {t} of the previous segment");
        b.copy(&format!("cell{t}"), &q, &key, None, &tok_rows, n2, n2, &[(names[t - 1].as_str(), nv, 1.0, desc.as_str())])?;
    }
    b.mlp_slots(&[
        ("f", 1, 1.0, "1 where the leftmost handle starts right after i"),
        ("nsk", 1, 5.0, "cells skipped: 1, or 3 / 5 after a reduction"),
        ("outc", nv, 1.0, "value of the handle, one-hot"),
        ("cand", 1, 1.0, "1 at segment starts and at reductions"),
        ("eq1", 1, 1.0, "1 when the segment so far is one numeral"),
    ]);
    let c: Vec<Vec<Lin>> = std::iter::once("tok").chain(names.iter().map(String::as_str)).map(|s| (0..nv).map(|t| b.at(s, t)).collect()).collect();
    let sum = |cs: &[Lin], ids: &[usize]| ids.iter().fold(Vec::new(), |acc: Lin, &t| add(&acc, &cs[t]));
    let (f, nsk, cand) = (b.v("f"), b.v("nsk"), b.v("cand"));
    let nums: Vec<usize> = (0..p as usize).collect();
    let add_ops = [op_id(Op::Add), op_id(Op::Sub)];
    let mul_ops = [op_id(Op::Mul), op_id(Op::Div)];
    let mut units: Vec<(Lin, f64, Lin)> = Vec::new();
    for op in Op::ALL {
        let (s1, s2): (Vec<usize>, Vec<usize>) = if op.is_additive() {
            (vec![lp, eq], [add_ops.as_slice(), &[rp, eq]].concat())
        } else {
            ([&[lp, eq][..], &add_ops].concat(), [&add_ops[..], &mul_ops, &[rp, eq]].concat())
        };
        let s0_bracket: Vec<usize> = [&[lp, eq][..], &add_ops, &mul_ops].concat();
        for a in 0..p {
            for bv in 0..p {
                let Ok(val) = op.apply(a, bv, p) else { continue };
                let (ai, bi, oi) = (a as usize, bv as usize, op_id(op));
                let out_base = |skip: f64, at_eq: bool| {
                    let mut o = add(&add(&f, &scale(&nsk, skip)), &b.at("outc", val as usize));
                    if !at_eq {
                        o = add(&o, &cand);
                    }
                    o
                };
                // a op b, followed by a context that lets it go first.
                let body = [c[1][ai].clone(), c[2][oi].clone(), c[3][bi].clone(), sum(&c[4], &s2), g.clone()]
                    .iter()
                    .fold(Vec::new(), |acc: Lin, l| add(&acc, l));
                // ( a op b ) reduces together with its brackets.
                let body2 = [c[1][lp].clone(), c[2][ai].clone(), c[3][oi].clone(), c[4][bi].clone(), c[5][rp].clone(), g.clone()]
                    .iter()
                    .fold(Vec::new(), |acc: Lin, l| add(&acc, l));
                for at_eq in [true, false] {
                    let pick = |set: &[usize]| -> Vec<usize> { set.iter().copied().filter(|&t| (t == eq) == at_eq).collect() };
                    let s1p = pick(&s1);
                    if !s1p.is_empty() {
                        units.push((scale(&add(&body, &sum(&c[0], &s1p)), 2.0), -11.0, out_base(2.0, at_eq)));
                    }
                    let s0p = pick(&s0_bracket);
                    units.push((scale(&add(&body2, &sum(&c[0], &s0p)), 2.0), -13.0, out_base(4.0, at_eq)));
                }
            }
        }
    }
    units.push((one.clone(), 0.0, nsk.clone()));
    units.push((add(&scale(&c[0][eq], 2.0), &scale(&first, 2.0)), -1.0, cand.clone()));
    units.push((add(&is_d1, &sum(&c[0], &nums)), -1.0, b.v("eq1")));
    b.relu(units);
    b.end_layer()?;

    // Layer 4: leftmost reduction in the current segment, else its start.
    let r_span = big_n + 2.0;
    let m4 = big_n.max(big_e * big_e + 1.0);
    let c4 = m4 / (big_n + r_span);
    b.copy(
        "leftmost",
        &[n.clone(), n_sq.clone(), one.clone()],
        &[scale(&n, 2.0), scale(&one, -1.0), add(&add(&scale(&n_sq, -1.0), &scale(&one, -1.0)), &cand)],
        Some(&add(&scale(&pos, -1.0), &scale(&f, r_span))),
        &[pos.clone(), nsk.clone()],
        c4,
        m4,
        &[("hpos", 1, big_n, "position of that reduction"), ("shift", 1, 5.0, "its skip count")],
    )?;
    b.mlp_slots(&[("d_shift", 1, 5.0 * big_n, "d times shift"), ("shift_sq", 1, 25.0, "shift squared")]);
    let shift = b.v("shift");
    b.mult(scale(&d, 1.0 / big_n), scale(&shift, 0.2), "d_shift", 5.0 * big_n);
    b.mult(scale(&shift, 0.2), scale(&shift, 0.2), "shift_sq", 25.0);
    b.end_layer()?;

    // Layer 5: copy cell d + shift of the previous segment, or the value.
    let off = add(&d, &shift);
    let off_sq = add(&add(&d_sq, &scale(&b.v("d_shift"), 2.0)), &b.v("shift_sq"));
    let q = vec![add(&n, &scale(&one, -1.0)), off, scale(&add(&nm1_sq, &off_sq), -1.0), one.clone()];
    b.copy("copy", &q, &key, None, &tok_rows, n2, n2, &[("copy", nv, 1.0, "copied token, one-hot")])?;
    b.mlp_slots(&[("logits", nv, 1.0, "next-token scores")]);
    let kt = scale(&add(&add(&add(&f, &scale(&pos, -1.0)), &b.v("hpos")), &scale(&one, -0.5)), 2.0);
    let k2 = 2.0 * big_n + 2.0;
    let eq1 = b.v("eq1");
    let copy = |b: &Builder, t: usize| b.at("copy", t);
    let logit = |b: &Builder, t: usize| b.at("logits", t);
    let mut units: Vec<(Lin, f64, Lin)> = Vec::new();
    let neg_kt = scale(&kt, -1.0);
    let mut base_pos = Vec::new();
    let mut base_neg = Vec::new();
    for t in 0..nv {
        if t == eq || t == eos {
            continue;
        }
        if t < p as usize {
            units.push((add(&b.at("outc", t), &kt), 0.0, logit(&b, t)));
            base_pos.push((logit(&b, t)[0].0, -1.0));
        }
        units.push((add(&copy(&b, t), &neg_kt), 0.0, logit(&b, t)));
        base_neg.push((logit(&b, t)[0].0, -1.0));
    }
    units.push((kt.clone(), 0.0, base_pos));
    units.push((neg_kt.clone(), 0.0, base_neg));
    // '=' continues the trace; <eos> when the segment is a lone numeral.
    for (t, gate, bias) in [(eq, scale(&eq1, -k2), 0.0), (eos, scale(&eq1, k2), -k2)] {
        let pre = add(&neg_kt, &gate);
        units.push((add(&copy(&b, eq), &pre), bias, logit(&b, t)));
        units.push((pre, bias, scale(&logit(&b, t), -1.0)));
    }
    b.relu(units);
    b.end_layer()?;

    let weight_bound = b.weight_bound()?;
    let width = b.layout.width();
    let mut embed = Matrix::zeros(nv, 1 + nv + 1);
    for t in 0..nv {
        embed.set(t, t, 1.0);
        embed.set(t, nv + 1, 1.0);
    }
    let mut unembed = Matrix::zeros(nv, width);
    let lo = b.layout.slot("logits").start;
    for t in 0..nv {
        unembed.set(t, lo + t, 1.0);
    }
    b.layout.validate()?;
    Ok(ModelSpec {
        name: format!("arithmetic(p={p}, n_max={n_max})"),
        vocab,
        eos,
        embed,
        pos_col,
        layers: b.layers,
        layout: b.layout,
        unembed,
        unembed_bias: vec![0.0; nv],
        n_max,
        max_len,
        weight_bound,
    })
}

/// Symbolic values of the stream slots at every position of `tokens`,
/// computed from the token text and the reduction rules directly.
pub fn arithmetic_reference(tokens: &[String], vocab: &[String], p: u64) -> Result<Reference> {
    let id = |t: &str| {
        vocab.iter().position(|v| v == t).ok_or_else(|| Error::Invalid(format!("token {t:?} not in vocabulary")))
    };
    let mut segments: Vec<Vec<String>> = vec![Vec::new()];
    for t in tokens {
        if t == "=" {
            segments.push(Vec::new());
        } else {
            segments.last_mut().unwrap().push(t.clone());
        }
    }
    // Where each segment's successor reduces: (offset, skip, value).
    let mut plans = Vec::new();
    for seg in &segments {
        let body: Option<Vec<Tok>> = seg.iter().map(|t| Tok::parse_one(t, p)).collect();
        let plan = body.and_then(|body| {
            let h = *find_handles(&body).first()?;
            let (Tok::Num(a), Tok::Num(c)) = (body[h.start], body[h.start + 2]) else { return None };
            let v = h.op.apply(a, c, p).ok()?;
            let bracketed = h.start > 0 && body[h.start - 1] == Tok::LParen && body.get(h.start + 3) == Some(&Tok::RParen);
            Some(if bracketed { (h.start - 1, 5.0, v) } else { (h.start, 3.0, v) })
        });
        plans.push(plan);
    }
    let (mut n, mut last) = (0usize, 0usize);
    let (mut n_prev, mut p_prev) = (0usize, 0usize);
    let mut out = Vec::with_capacity(tokens.len());
    for (k, t) in tokens.iter().enumerate() {
        let i = k + 1;
        if t == "=" {
            n += 1;
            last = i;
        }
        let d = i - last;
        let fi = i as f64;
        let mut e: Vec<(&'static str, Expect)> = vec![
            ("frac", Expect::Scalar(n as f64 / fi)),
            ("n", Expect::Scalar(n as f64)),
            ("pos_sq", Expect::Scalar(fi * fi)),
            ("p", Expect::Scalar(last as f64)),
            ("n_prev", Expect::Scalar(n_prev as f64)),
            ("p_prev", Expect::Scalar(p_prev as f64)),
            ("n_sq", Expect::Scalar((n * n) as f64)),
            ("d_sq", Expect::Scalar((d * d) as f64)),
            ("nh_sq", Expect::Scalar((n_prev * n_prev) as f64)),
            ("dh_sq", Expect::Scalar(((i - p_prev) * (i - p_prev)) as f64)),
            ("g", Expect::Scalar((n >= 1) as u8 as f64)),
            ("is_d1", Expect::Scalar((d == 1) as u8 as f64)),
            ("first", Expect::Scalar((i == 1) as u8 as f64)),
        ];
        let is_num = Tok::parse_one(t, p).is_some_and(|x| matches!(x, Tok::Num(_)));
        e.push(("eq1", Expect::Scalar((d == 1 && is_num) as u8 as f64)));
        if n >= 1 {
            e.push(("p_copy", Expect::Scalar(last as f64)));
            let prev = &segments[n - 1];
            let cell = |o: usize| -> Option<Result<usize>> {
                match o {
                    0 => None,
                    o if o <= prev.len() => Some(id(&prev[o - 1])),
                    o if o == prev.len() + 1 => Some(id("=")),
                    _ => None,
                }
            };
            for (ti, name) in ["c1", "c2", "c3", "c4", "c5"].into_iter().enumerate() {
                if let Some(c) = cell(d + ti + 1) {
                    e.push((name, Expect::OneHot(c?)));
                }
            }
            let (mut hpos, mut shift) = (last as f64, 1.0);
            match plans[n - 1] {
                Some((at, skip, v)) if d <= at => {
                    let fire = d == at;
                    e.push(("f", Expect::Scalar(fire as u8 as f64)));
                    e.push(("cand", Expect::Scalar((fire || d == 0) as u8 as f64)));
                    e.push(("nsk", Expect::Scalar(if fire { skip } else { 1.0 })));
                    if fire {
                        e.push(("outc", Expect::OneHot(id(&v.to_string())?)));
                        hpos = fi;
                        shift = skip;
                    }
                }
                Some((at, skip, _)) => {
                    hpos = (last + at) as f64;
                    shift = skip;
                }
                None => {
                    e.push(("f", Expect::Scalar(0.0)));
                    e.push(("nsk", Expect::Scalar(1.0)));
                }
            }
            e.push(("hpos", Expect::Scalar(hpos)));
            e.push(("shift", Expect::Scalar(shift)));
            e.push(("d_shift", Expect::Scalar(d as f64 * shift)));
            e.push(("shift_sq", Expect::Scalar(shift * shift)));
            if let Some(c) = cell(d + shift as usize) {
                e.push(("copy", Expect::OneHot(c?)));
            }
        } else {
            e.push(("f", Expect::Scalar(0.0)));
            e.push(("cand", Expect::Scalar((i == 1) as u8 as f64)));
            e.push(("hpos", Expect::Scalar(1.0)));
            e.push(("shift", Expect::Scalar(1.0)));
        }
        out.push(e);
        n_prev = n;
        p_prev = last;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{lex, Expr};
    use crate::constructed::decode;

    fn run(model: &ModelSpec, text: &str) -> (Vec<String>, Vec<String>) {
        let e = Expr::parse(text, 11).unwrap();
        let want = e.trace().unwrap().sequence_tokens();
        let mut prompt: Vec<String> = e.body().iter().map(|t| t.to_string()).collect();
        prompt.push("=".into());
        let ids = model.encode(&prompt).unwrap();
        let (out, dec) = decode(model, &ids, model.max_len - ids.len(), None).unwrap();
        for (name, rep) in dec.check_heads() {
            assert!(rep.passed(), "{name}: {rep:?}");
        }
        let mut got = prompt;
        got.extend(model.decode_ids(&out.output));
        let mut want = want;
        want.push("<eos>".into());
        (got, want)
    }

    #[test]
    fn worked_trace() {
        let m = build_arithmetic_model(64, 11, 0.25).unwrap();
        for text in ["1 + 5 × ( 1 − 2 )", "3", "2 × 3", "( 4 ÷ 3 ) − 7 × ( 2 + 2 )"] {
            let (got, want) = run(&m, text);
            assert_eq!(got.join(" "), want.join(" "), "{text} {:?}", lex(text));
        }
    }

    #[test]
    fn random_prompts_and_slots() {
        use crate::constructed::verify::{arithmetic_instances, compare_slots, verify};
        use crate::constructed::Decoder;
        let m = build_arithmetic_model(64, 11, 0.25).unwrap();
        let insts = arithmetic_instances(7, 11, 500, 1);
        let r = |t: &[String]| arithmetic_reference(t, &m.vocab, 11);
        let rep = verify(&m, &insts, None, &r);
        assert!(rep.passed(), "{}", rep.render());
        for inst in insts.iter().take(40) {
            let mut toks = inst.prompt.clone();
            toks.extend(inst.expected[..inst.expected.len() - 1].iter().cloned());
            let mut dec = Decoder::new(&m, None);
            for t in m.encode(&toks).unwrap() {
                dec.push(t).unwrap();
            }
            let want = r(&toks).unwrap();
            for (i, row) in dec.rows.iter().enumerate() {
                let bad = compare_slots(&m, row, &want[i]);
                assert!(bad.is_empty(), "{} at {}: {bad:?}", toks.join(" "), i + 1);
            }
        }
    }
}
