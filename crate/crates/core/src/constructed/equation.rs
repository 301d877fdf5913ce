//! Four-layer model that writes the elimination trace of a linear system
//! over Z_p.
//!
//! All variables share one class id; they differ in a 3-vector
//! `l = (j, m^2 sin(2 pi j / m), m^2 cos(2 pi j / m))`. Small integers
//! (block, row, variable index) are also kept one-hot so later layers can
//! read squares and table entries linearly. Block `s` is written from block
//! `s - 1`: a coefficient at row `j`, column `c` is `S - R Q / P`, where
//! `P`, `Q` come from the pivot row `k` (columns `s` and `c`) and `R`, `S`
//! from the row that lands on `j` after the swap; the pivot row itself is
//! just `Q / P`.

use super::build::{add, scale, Builder, Lin, Precision};
use super::{Expect, ModelSpec, Reference};
use crate::equation::parse_var;
use crate::error::{Error, Result};
use crate::field::{is_prime, raw};
use crate::nn::tensor::{Matrix, SlotLayout};
use std::f64::consts::PI;

/// Non-numeral classes; numerals `0..p` come first.
pub const CLASSES: [&str; 6] = ["+", "=", ",", "[SEP]", "<eos>", "x"];

pub fn equation_vocab(p: u64, m_max: usize) -> Vec<String> {
    let mut v: Vec<String> = (0..p).map(|x| x.to_string()).collect();
    v.extend(CLASSES[..5].iter().map(|s| s.to_string()));
    v.extend((1..=m_max).map(|j| format!("x{j}")));
    v
}

/// Positions needed for a system with `m_max` unknowns, `<eos>` excluded.
pub fn equation_max_len(m_max: usize) -> usize {
    (m_max + 1) * (m_max * (3 * m_max + 2) + 1)
}

/// The output code of a token, also its unembedding row.
pub fn token_code(class: usize, n_class: usize, var: usize, m: usize) -> Vec<f64> {
    let mut w = vec![0.0; n_class + 3];
    w[class] = 1.0;
    let m2 = (m * m) as f64;
    let th = 2.0 * PI * var as f64 / m as f64;
    w[n_class] = var as f64;
    w[n_class + 1] = m2 * th.sin();
    w[n_class + 2] = m2 * th.cos();
    w
}

/// `w_t . code(t) - w_t . code(t')`, the margin of `t` over `t'` when the
/// model outputs `code(t)`.
pub fn unembedding_gap(a: &[f64], b: &[f64]) -> f64 {
    let d = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>();
    d(a, a) - d(a, b)
}

/// `[x == 0]` for integer `x`, times `w` into `out`; with gates, zero
/// unless every gate indicator is 1. `k` must exceed `|x| + 1`.
fn bump(x: &Lin, gates: &[Lin], k: f64, out: &Lin, w: f64) -> Vec<(Lin, f64, Lin)> {
    let g = gates.iter().fold(Vec::new(), |acc: Lin, l| add(&acc, l));
    let base = add(x, &scale(&g, k));
    let b0 = -k * gates.len() as f64;
    vec![
        (base.clone(), b0 + 1.0, scale(out, w)),
        (base.clone(), b0, scale(out, -2.0 * w)),
        (base, b0 - 1.0, scale(out, w)),
    ]
}

/// Fires with value 1 when all indicator forms are 1.
fn conj(conds: &[Lin], out: Lin) -> (Lin, f64, Lin) {
    let s = conds.iter().fold(Vec::new(), |acc: Lin, l| add(&acc, l));
    (scale(&s, 2.0), 1.0 - 2.0 * conds.len() as f64, out)
}

/// `y * g` for a 0/1 indicator form `g` and `|y| < k`.
fn gated(y: &Lin, g: &Lin, k: f64, out: &Lin) -> Vec<(Lin, f64, Lin)> {
    let kg = scale(g, k);
    vec![(add(y, &kg), -k, out.clone()), (add(&scale(y, -1.0), &kg), -k, scale(out, -1.0))]
}

pub fn build_equation_model(m_max: usize, p: u64, eps: f64) -> Result<ModelSpec> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if m_max < 1 {
        return Err(Error::Invalid("m_max must be at least 1".into()));
    }
    let prec = Precision::from_total(eps)?;
    let pu = p as usize;
    let vocab = equation_vocab(p, m_max);
    let nc = pu + CLASSES.len();
    let cls = |s: &str| pu + CLASSES.iter().position(|c| *c == s).unwrap();
    let (c_plus, c_eq, c_comma, c_sep, c_eos, c_x) = (cls("+"), cls("="), cls(","), cls("[SEP]"), cls("<eos>"), cls("x"));
    let mm = m_max as f64;
    let m2 = mm * mm;
    let max_len = equation_max_len(m_max);
    let big_n = max_len as f64;
    let n2 = big_n * big_n;
    let kg = 4.0 * mm + 8.0;

    let mut layout = SlotLayout::new();
    layout.add("tok", nc, 1.0, "token class, one-hot (variables share one class)");
    layout.add("var", 1, mm, "variable index, 0 for other tokens");
    layout.add("vs", 1, m2, "m^2 sin(2 pi var / m) for variables");
    layout.add("vc", 1, m2, "m^2 cos(2 pi var / m) for variables");
    let pos_col = layout.add("pos", 1, big_n, "position, from 1");
    layout.add("one", 1, 1.0, "constant 1");
    let mut b = Builder::new(layout, max_len, prec);
    let one = b.v("one");
    let pos = b.v("pos");
    let tok = |b: &Builder, c: usize| b.at("tok", c);
    let var = b.v("var");

    // Layer 1: separators so far, commas so far, number of unknowns.
    b.mean("sep_frac", &[vec![]], &[vec![]], &[tok(&b, c_sep)], big_n, &[("sep_frac", 1, 1.0, "share of [SEP] among 1..i")])?;
    b.mean("comma_frac", &[vec![]], &[vec![]], &[tok(&b, c_comma)], big_n, &[("comma_frac", 1, 1.0, "share of ',' among 1..i")])?;
    b.copy(
        "n_var",
        std::slice::from_ref(&one),
        &[add(&tok(&b, c_x), &scale(&one, -1.0))],
        Some(&var),
        std::slice::from_ref(&var),
        1.0,
        big_n.max(mm),
        &[("n_var", 1, mm, "largest variable index seen")],
    )?;
    b.mlp_slots(&[
        ("n_cot", 1, mm, "number of [SEP] up to i: the block being written"),
        ("n_comma", 1, big_n, "number of ',' up to i"),
        ("pos_sq", 1, n2, "i squared"),
        ("var_oh", m_max + 1, 1.0, "variable index one-hot (0 = none)"),
        ("m_oh", m_max, 1.0, "number of unknowns one-hot, from 1"),
        ("first", 1, 1.0, "1 at position 1"),
    ]);
    b.mult(b.v("sep_frac"), scale(&pos, 1.0 / big_n), "n_cot", big_n);
    b.mult(b.v("comma_frac"), scale(&pos, 1.0 / big_n), "n_comma", big_n);
    b.mult(scale(&pos, 1.0 / big_n), scale(&pos, 1.0 / big_n), "pos_sq", n2);
    let mut units = Vec::new();
    for v in 0..=m_max {
        units.extend(bump(&add(&var, &scale(&one, -(v as f64))), &[], 0.0, &b.at("var_oh", v), 1.0));
    }
    let n_var = b.v("n_var");
    for v in 1..=m_max {
        units.extend(bump(&add(&n_var, &scale(&one, -(v as f64))), &[], 0.0, &b.at("m_oh", v - 1), 1.0));
    }
    let first = b.v("first");
    units.push((scale(&pos, -1.0), 2.0, first.clone()));
    units.push((scale(&pos, -1.0), 1.0, scale(&first, -1.0)));
    b.relu(units);
    b.end_layer()?;

    // Layer 2: the two previous tokens and the commas before this block.
    let pos_sq = b.v("pos_sq");
    let var_oh_rows: Vec<Lin> = (0..=m_max).map(|v| b.at("var_oh", v)).collect();
    let tok_rows: Vec<Lin> = (0..nc).map(|c| tok(&b, c)).collect();
    let prev_vals: Vec<Lin> = tok_rows.iter().chain(&var_oh_rows).cloned().collect();
    for (name, back) in [("prev", 1.0), ("prev2", 2.0)] {
        let k = vec![
            add(&scale(&pos, 2.0), &scale(&one, 2.0 * back)),
            scale(&one, -1.0),
            add(&add(&scale(&one, -back * back), &scale(&pos, -2.0 * back)), &scale(&pos_sq, -1.0)),
        ];
        b.copy(
            name,
            &[pos.clone(), pos_sq.clone(), one.clone()],
            &k,
            None,
            &prev_vals,
            n2,
            n2,
            &[
                (&format!("{name}_tok"), nc, 1.0, "token class there, one-hot"),
                (&format!("{name}_var_oh"), m_max + 1, 1.0, "its variable index, one-hot"),
            ],
        )?;
    }
    b.copy(
        "block_start",
        std::slice::from_ref(&one),
        &[add(&add(&tok(&b, c_sep), &first), &scale(&one, -1.0))],
        Some(&pos),
        &[b.v("n_comma")],
        1.0,
        big_n,
        &[("c0", 1, big_n, "commas before the current block")],
    )?;
    b.mlp_slots(&[
        ("s_oh", m_max + 1, 1.0, "block index one-hot, from 0"),
        ("jn_oh", m_max + 1, 1.0, "row of the next token one-hot, from 1"),
        ("r_oh", m_max, 1.0, "row of this token one-hot, from 1"),
        ("fpiv", 1, 1.0, "1 at x_{b+1} of a row below the pivots with nonzero coefficient"),
        ("col", 1, mm + 1.0, "column this token addresses: var, or m + 1 at ','"),
        ("col_sq", 1, (mm + 1.0) * (mm + 1.0), "col squared"),
    ]);
    let n_cot = b.v("n_cot");
    let n_row = add(&b.v("n_comma"), &scale(&b.v("c0"), -1.0));
    let mut units = Vec::new();
    for s in 0..=m_max {
        units.extend(bump(&add(&n_cot, &scale(&one, -(s as f64))), &[], 0.0, &b.at("s_oh", s), 1.0));
    }
    for r in 1..=m_max + 1 {
        let x = add(&n_row, &scale(&one, 1.0 - r as f64));
        units.extend(bump(&x, &[], 0.0, &b.at("jn_oh", r - 1), 1.0));
    }
    let comma = tok(&b, c_comma);
    for r in 1..=m_max {
        let x = add(&add(&n_row, &scale(&comma, -1.0)), &scale(&one, 1.0 - r as f64));
        units.extend(bump(&x, &[], 0.0, &b.at("r_oh", r - 1), 1.0));
    }
    let nonzero_num: Lin = (1..pu).fold(Vec::new(), |acc, v| add(&acc, &b.at("prev_tok", v)));
    let not_plus = add(&one, &scale(&b.at("prev2_tok", c_plus), -1.0));
    let x = add(&add(&var, &scale(&n_cot, -1.0)), &scale(&one, -1.0));
    units.extend(bump(&x, &[nonzero_num, not_plus], kg, &b.v("fpiv"), 1.0));
    // col = var + [','] (m + 1), col_sq = var^2 + [','] (m + 1)^2.
    let (col, col_sq) = (b.v("col"), b.v("col_sq"));
    units.push((var.clone(), 0.0, col.clone()));
    units.extend(gated(&add(&n_var, &one), &comma, kg, &col));
    let var_sq: Lin = (1..=m_max).fold(Vec::new(), |acc, v| add(&acc, &scale(&b.at("var_oh", v), (v * v) as f64)));
    let mp1_sq: Lin = (1..=m_max).fold(Vec::new(), |acc, v| add(&acc, &scale(&b.at("m_oh", v - 1), ((v + 1) * (v + 1)) as f64)));
    units.push((var_sq, 0.0, col_sq.clone()));
    units.extend(gated(&mp1_sq, &comma, kg * kg, &col_sq));
    b.relu(units);
    b.end_layer()?;

    // Linear forms over one-hots.
    let lin_of = |b: &Builder, slot: &str, f: &dyn Fn(usize) -> f64| -> Lin {
        (0..b.layout.slot(slot).len).fold(Vec::new(), |acc, k| add(&acc, &scale(&b.at(slot, k), f(k))))
    };
    let s_lin = lin_of(&b, "s_oh", &|s| s as f64);
    let s_sq = lin_of(&b, "s_oh", &|s| (s * s) as f64);
    let sm1_sq = lin_of(&b, "s_oh", &|s| (s as f64 - 1.0).powi(2));
    let row_lin = lin_of(&b, "r_oh", &|r| (r + 1) as f64);
    let row_sq = lin_of(&b, "r_oh", &|r| ((r + 1) * (r + 1)) as f64);

    // Layer 3: pivot row of this step, then the next token's structure.
    let sm1 = add(&s_lin, &scale(&one, -1.0));
    b.copy(
        "pivot",
        &[sm1.clone(), scale(&add(&sm1_sq, &one), -1.0), one.clone()],
        &[scale(&s_lin, 2.0), one.clone(), add(&scale(&s_sq, -1.0), &b.v("fpiv"))],
        Some(&scale(&pos, -1.0)),
        &(0..m_max).map(|r| b.at("r_oh", r)).collect::<Vec<_>>(),
        1.0,
        big_n,
        &[("k_oh", m_max, 1.0, "pivot row of the step being written, one-hot")],
    )?;
    b.mlp_slots(&[
        ("next_cls", CLASSES.len(), 1.0, "class of the next token unless it is a numeral"),
        ("next_var_oh", m_max, 1.0, "index of the next variable, one-hot"),
        ("is_num", 1, 1.0, "next token is a numeral"),
        ("norm", 1, 1.0, "it belongs to the new pivot row"),
        ("elim", 1, 1.0, "it belongs to another row"),
        ("cn", 1, mm + 1.0, "its column"),
        ("cn_sq", 1, (mm + 1.0) * (mm + 1.0), "column squared"),
        ("rs", 1, mm, "old row holding its S and R"),
        ("rs_sq", 1, m2, "rs squared"),
    ]);
    let t = |b: &Builder, c: usize| tok(b, c);
    let pt = |b: &Builder, c: usize| b.at("prev_tok", c);
    let num_any = |b: &Builder, slot: &str| (0..pu).fold(Vec::new(), |acc, v| add(&acc, &b.at(slot, v)));
    let nxt = |b: &Builder, c: usize| b.at("next_cls", c - pu);
    let (s_oh, m_oh, jn_oh, k_oh) = (|s| ("s_oh", s), |m: usize| ("m_oh", m - 1), |j: usize| ("jn_oh", j - 1), |k: usize| ("k_oh", k - 1));
    let at = |b: &Builder, (slot, k): (&str, usize)| b.at(slot, k);
    let row_start = add(&t(&b, c_comma), &t(&b, c_sep));
    let mut units = Vec::new();
    // Numeral outputs: column c, row j, step s, pivot k.
    let num_unit = |b: &Builder, mut conds: Vec<Lin>, c: usize, j: usize, s: usize, k: usize| {
        conds.push(at(b, s_oh(s)));
        conds.push(at(b, jn_oh(j)));
        conds.push(at(b, k_oh(k)));
        let rs = if j == k { s } else { j };
        let mut out = add(&b.v("is_num"), &scale(&b.v("cn"), c as f64));
        out = add(&out, &scale(&b.v("cn_sq"), (c * c) as f64));
        if j == s {
            out = add(&out, &b.v("norm"));
        } else {
            out = add(&out, &b.v("elim"));
            out = add(&out, &add(&scale(&b.v("rs"), rs as f64), &scale(&b.v("rs_sq"), (rs * rs) as f64)));
        }
        conj(&conds, out)
    };
    for m in 1..=m_max {
        for s in 1..=m {
            // End of block.
            let end = if s < m { c_sep } else { c_eos };
            units.push(conj(&[t(&b, c_comma), at(&b, jn_oh(m + 1)), at(&b, m_oh(m)), at(&b, s_oh(s))], nxt(&b, end)));
            for j in 1..=m {
                if j <= s {
                    let out = add(&nxt(&b, c_x), &b.at("next_var_oh", j - 1));
                    units.push(conj(&[row_start.clone(), at(&b, m_oh(m)), at(&b, jn_oh(j)), at(&b, s_oh(s))], out));
                }
                for k in s..=m {
                    if j > s {
                        units.push(num_unit(&b, vec![row_start.clone(), at(&b, m_oh(m))], s + 1, j, s, k));
                    }
                    // Right-hand side after '='.
                    units.push(num_unit(&b, vec![t(&b, c_eq), at(&b, m_oh(m))], m + 1, j, s, k));
                    // Coefficient after '+', column max(prev var, s) + 1.
                    for pv in 1..m {
                        let c = pv.max(s) + 1;
                        if c <= m {
                            units.push(num_unit(&b, vec![t(&b, c_plus), b.at("prev_var_oh", pv), at(&b, m_oh(m))], c, j, s, k));
                        }
                    }
                }
            }
            // After a variable: '+' while columns remain, else '='.
            for v in 1..=m {
                let next = if v.max(s) < m { c_plus } else { c_eq };
                units.push(conj(&[t(&b, c_x), b.at("var_oh", v), at(&b, s_oh(s)), at(&b, m_oh(m))], nxt(&b, next)));
            }
        }
    }
    for s in 1..=m_max {
        // After a coefficient: its variable.
        for ppv in 1..=m_max {
            let c = ppv.max(s) + 1;
            if c <= m_max {
                let out = add(&nxt(&b, c_x), &b.at("next_var_oh", c - 1));
                units.push(conj(&[num_any(&b, "tok"), pt(&b, c_plus), b.at("prev2_var_oh", ppv), at(&b, s_oh(s))], out));
            }
        }
        if s < m_max {
            let out = add(&nxt(&b, c_x), &b.at("next_var_oh", s));
            units.push(conj(&[num_any(&b, "tok"), add(&pt(&b, c_comma), &pt(&b, c_sep)), at(&b, s_oh(s))], out));
        }
    }
    units.push(conj(&[num_any(&b, "tok"), pt(&b, c_eq)], nxt(&b, c_comma)));
    b.relu(units);
    b.end_layer()?;

    // Layer 4: fetch P, Q, R, S from the previous block, and the code of
    // the next variable.
    let blk_key = |b: &Builder| {
        vec![
            scale(&s_lin, 2.0),
            scale(&row_lin, 2.0),
            scale(&b.v("col"), 2.0),
            one.clone(),
            scale(&add(&add(&s_sq, &row_sq), &b.v("col_sq")), -1.0),
        ]
    };
    let k_lin = lin_of(&b, "k_oh", &|k| (k + 1) as f64);
    let k_sq = lin_of(&b, "k_oh", &|k| ((k + 1) * (k + 1)) as f64);
    let prev_num: Vec<Lin> = (0..pu).map(|v| b.at("prev_tok", v)).collect();
    let (rs, rs_sq, cn, cn_sq) = (b.v("rs"), b.v("rs_sq"), b.v("cn"), b.v("cn_sq"));
    let fetch = [("S", &rs, &rs_sq, &cn, &cn_sq), ("R", &rs, &rs_sq, &s_lin, &s_sq), ("Q", &k_lin, &k_sq, &cn, &cn_sq), ("P", &k_lin, &k_sq, &s_lin, &s_sq)];
    for (name, r, r_sq, c, c_sq) in fetch {
        let norm = add(&add(&sm1_sq, r_sq), c_sq);
        let q = vec![sm1.clone(), r.clone(), c.clone(), scale(&norm, -1.0), one.clone()];
        let desc = format!("coefficient {name} of the previous block, one-hot");
        b.copy(&format!("fetch_{name}"), &q, &blk_key(&b), None, &prev_num, n2, n2, &[(&format!("v{name}"), pu, 1.0, &desc)])?;
    }
    let vn = lin_of(&b, "next_var_oh", &|v| (v + 1) as f64);
    let vn_sq = lin_of(&b, "next_var_oh", &|v| ((v + 1) * (v + 1)) as f64);
    let var_sq = lin_of(&b, "var_oh", &|v| (v * v) as f64);
    b.copy(
        "var_code",
        &[vn, scale(&vn_sq, -1.0), one.clone()],
        &[scale(&var, 2.0), one.clone(), scale(&var_sq, -1.0)],
        None,
        &[var.clone(), b.v("vs"), b.v("vc")],
        n2,
        n2,
        &[("l_next", 3, m2, "l of the next variable (zero otherwise)")],
    )?;
    b.mlp_slots(&[("code", nc + 3, m2, "output code: class one-hot, then l")]);
    let code = |b: &Builder, k: usize| b.at("code", k);
    let mut units = Vec::new();
    let v = |b: &Builder, name: &str, x: u64| b.at(&format!("v{name}"), x as usize);
    for pv in 1..p {
        for q in 0..p {
            let qp = raw::div(q, pv, p).unwrap();
            units.push(conj(&[b.v("norm"), v(&b, "P", pv), v(&b, "Q", q)], code(&b, qp as usize)));
            for r in 0..p {
                for s in 0..p {
                    let val = raw::sub(s, raw::mul(r, qp, p), p);
                    units.push(conj(&[b.v("elim"), v(&b, "P", pv), v(&b, "Q", q), v(&b, "R", r), v(&b, "S", s)], code(&b, val as usize)));
                }
            }
        }
    }
    for (k, c) in [c_plus, c_eq, c_comma, c_sep, c_eos, c_x].into_iter().enumerate() {
        units.push((b.at("next_cls", k), 0.0, code(&b, c)));
    }
    let l = |b: &Builder, k: usize| b.at("l_next", k);
    units.push((l(&b, 0), 0.0, code(&b, nc)));
    units.push((l(&b, 1), 0.0, code(&b, nc + 1)));
    units.push((scale(&l(&b, 1), -1.0), 0.0, scale(&code(&b, nc + 1), -1.0)));
    // Non-variable tokens carry cos(0) = 1 in the last entry.
    let vc = add(&add(&l(&b, 2), &scale(&one, m2)), &scale(&b.at("next_cls", 5), -m2));
    units.push((vc.clone(), 0.0, code(&b, nc + 2)));
    units.push((scale(&vc, -1.0), 0.0, scale(&code(&b, nc + 2), -1.0)));
    b.relu(units);
    b.end_layer()?;

    let weight_bound = b.weight_bound()?;
    let width = b.layout.width();
    let nv = vocab.len();
    let d0 = nc + 5;
    let mut embed = Matrix::zeros(nv, d0);
    let mut unembed = Matrix::zeros(nv, width);
    let lo = b.layout.slot("code").start;
    for (t, name) in vocab.iter().enumerate() {
        let (class, j) = match parse_var(name) {
            Some(j) => (c_x, j),
            None => (t, 0),
        };
        let w = token_code(class, nc, j, m_max);
        embed.set(t, class, 1.0);
        if j > 0 {
            for k in 0..3 {
                embed.set(t, nc + k, w[nc + k]);
            }
        }
        embed.set(t, nc + 4, 1.0);
        for (k, x) in w.iter().enumerate() {
            unembed.set(t, lo + k, *x);
        }
    }
    b.layout.validate()?;
    Ok(ModelSpec {
        name: format!("equation(p={p}, m_max={m_max})"),
        eos: vocab.iter().position(|v| v == "<eos>").unwrap(),
        vocab,
        embed,
        pos_col,
        layers: b.layers,
        layout: b.layout,
        unembed,
        unembed_bias: vec![0.0; nv],
        n_max: equation_max_len(m_max),
        max_len,
        weight_bound,
    })
}

/// Expected slot values along a token sequence (prompt plus trace), read
/// off the text.
pub fn equation_reference(tokens: &[String], m_max: usize) -> Result<Reference> {
    let var_of = |t: &str| parse_var(t).unwrap_or(0);
    let is_num = |t: &str| t.chars().all(|c| c.is_ascii_digit());
    let prompt_end = tokens.iter().position(|t| t == "[SEP]").unwrap_or(tokens.len());
    let (mut n_cot, mut n_comma, mut n_var, mut c0) = (0usize, 0usize, 0usize, 0usize);
    let mut blocks: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    let mut rows: Vec<(usize, usize, bool)> = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        let v = var_of(t);
        n_var = n_var.max(v);
        match t.as_str() {
            "[SEP]" => {
                n_cot += 1;
                c0 = n_comma;
                blocks.push(Vec::new());
            }
            "," => n_comma += 1,
            _ => {}
        }
        let n_row = n_comma - c0;
        let row = n_row + 1 - (t == ",") as usize;
        let prev = |k: usize| if i >= k { tokens[i - k].as_str() } else { "" };
        let fpiv = v >= 1 && v == n_cot + 1 && is_num(prev(1)) && prev(1) != "0" && prev(2) != "+";
        if fpiv {
            blocks[n_cot].push((i, row));
        }
        rows.push((n_row, row, fpiv));
    }
    let mut out = Vec::with_capacity(tokens.len());
    let (mut n_cot, mut n_comma, mut n_var) = (0usize, 0usize, 0usize);
    for (i, t) in tokens.iter().enumerate() {
        let v = var_of(t);
        n_var = n_var.max(v);
        n_cot += (t == "[SEP]") as usize;
        n_comma += (t == ",") as usize;
        let (n_row, row, fpiv) = rows[i];
        let mut e: Vec<(&'static str, Expect)> = vec![
            ("n_cot", Expect::Scalar(n_cot as f64)),
            ("n_comma", Expect::Scalar(n_comma as f64)),
            ("pos_sq", Expect::Scalar(((i + 1) * (i + 1)) as f64)),
            ("var_oh", Expect::OneHot(v)),
            ("s_oh", Expect::OneHot(n_cot)),
            ("jn_oh", Expect::OneHot(n_row)),
            ("fpiv", Expect::Scalar(fpiv as u8 as f64)),
        ];
        if n_var > 0 {
            e.push(("n_var", Expect::Scalar(n_var as f64)));
            e.push(("m_oh", Expect::OneHot(n_var - 1)));
            let col = if t == "," { n_var + 1 } else { v };
            e.push(("col", Expect::Scalar(col as f64)));
            e.push(("col_sq", Expect::Scalar((col * col) as f64)));
        }
        if (1..=m_max).contains(&row) {
            e.push(("r_oh", Expect::OneHot(row - 1)));
        }
        if n_cot >= 1 {
            let (_, k) = *blocks[n_cot - 1].first().ok_or_else(|| Error::Invalid("block without a pivot".into()))?;
            e.push(("k_oh", Expect::OneHot(k - 1)));
        }
        if i >= prompt_end && i + 1 < tokens.len() {
            let next = tokens[i + 1].as_str();
            e.push(("is_num", Expect::Scalar(is_num(next) as u8 as f64)));
            if let Some(nv) = parse_var(next) {
                e.push(("next_var_oh", Expect::OneHot(nv - 1)));
                e.push(("next_cls", Expect::OneHot(5)));
            } else if let Some(c) = CLASSES.iter().position(|c| *c == next) {
                e.push(("next_cls", Expect::OneHot(c)));
            }
        }
        out.push(e);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructed::decode;
    use crate::equation::LinearSystem;

    #[test]
    fn worked_trace() {
        let m = build_equation_model(3, 11, 0.25).unwrap();
        let sys = LinearSystem::parse("2 x1 + 3 x2 + 3 x3 = 8 , 1 x1 + 7 x2 + 0 x3 = 0 , 0 x1 + 2 x2 + 1 x3 = 1 ,", 11).unwrap();
        let t = sys.trace().unwrap();
        let mut prompt = t.problem.clone();
        prompt.push("[SEP]".into());
        let ids = m.encode(&prompt).unwrap();
        let (out, dec) = decode(&m, &ids, m.max_len + 1 - ids.len(), None).unwrap();
        let got = m.decode_ids(&out.output).join(" ");
        let want: Vec<String> = t.steps.iter().map(|s| s.join(" ")).collect();
        assert_eq!(got, format!("{} <eos>", want.join(" [SEP] ")));
        for (name, rep) in dec.check_heads() {
            assert!(rep.passed(), "{name}: {rep:?}");
        }
    }

    #[test]
    fn random_systems_and_slots() {
        use crate::constructed::verify::{compare_slots, equation_instances, verify};
        use crate::constructed::Decoder;
        let m = build_equation_model(3, 5, 0.25).unwrap();
        let insts = equation_instances(3, 5, 100, 1);
        let r = |t: &[String]| equation_reference(t, 3);
        let rep = verify(&m, &insts, None, &r);
        assert!(rep.passed(), "{}", rep.render());
        for inst in insts.iter().take(30) {
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

    #[test]
    fn gap_bound() {
        for m in 2..=6usize {
            let nc = 11;
            let codes: Vec<Vec<f64>> = (0..nc)
                .map(|c| token_code(c, nc, 0, m))
                .take(nc - 1)
                .chain((1..=m).map(|j| token_code(nc - 1, nc, j, m)))
                .collect();
            let bound = 1.0 - (m * m) as f64 + (m as f64).powi(4) * (PI / m as f64).sin().powi(2);
            for (a, x) in codes.iter().enumerate() {
                for (b, y) in codes.iter().enumerate() {
                    if a != b {
                        let g = unembedding_gap(x, y);
                        assert!(g >= 1.0 - 1e-9, "m={m} {a} {b} {g}");
                        if a >= nc - 1 && b >= nc - 1 {
                            assert!(g >= bound - 1e-9);
                        }
                    }
                }
            }
        }
    }
}
