//! Decode many random prompts and compare against the oracle traces.

use super::{decode, Decoder, Expect, ModelSpec, Reference};
use crate::datagen::generators::{gen_arithmetic, gen_equation};
use crate::datagen::rng::{derive, SplitMix64};
use crate::error::Result;
use crate::nn::check::Violation;
use crate::sample::CotSample;
use std::fmt::Write as _;

/// A prompt and the continuation the oracle expects, `<eos>` included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub prompt: Vec<String>,
    pub expected: Vec<String>,
}

impl Instance {
    pub fn from_sample(s: &CotSample) -> Instance {
        let seq = s.sequence_tokens();
        let cut = s.problem.len() + 1;
        let mut expected = seq[cut..].to_vec();
        expected.push("<eos>".into());
        Instance { prompt: seq[..cut].to_vec(), expected }
    }
}

/// Operator counts uniform in `0..=max_ops`.
pub fn arithmetic_instances(max_ops: usize, p: u64, trials: usize, seed: u64) -> Vec<Instance> {
    (0..trials)
        .map(|i| {
            let mut rng = SplitMix64::new(derive(seed, i as u64));
            let ops = rng.index(max_ops + 1);
            let (e, _) = gen_arithmetic(&mut rng, ops, p);
            Instance::from_sample(&e.trace().expect("generated expressions are valid"))
        })
        .collect()
}

/// Variable counts uniform in `1..=max_vars`.
pub fn equation_instances(max_vars: usize, p: u64, trials: usize, seed: u64) -> Vec<Instance> {
    (0..trials)
        .map(|i| {
            let mut rng = SplitMix64::new(derive(seed, i as u64));
            let m = 1 + rng.index(max_vars);
            let sys = gen_equation(&mut rng, m, p);
            Instance::from_sample(&sys.trace().expect("generated systems are solvable"))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotDiff {
    pub layer: usize,
    pub slot: String,
    pub got: String,
    pub want: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    pub instance: usize,
    /// Index into the continuation.
    pub step: usize,
    pub got: String,
    pub want: String,
    /// Slots off their symbolic value at the position that produced the
    /// wrong token.
    pub slots: Vec<SlotDiff>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub model: String,
    pub trials: usize,
    pub mismatches: usize,
    pub answer_mismatches: usize,
    pub divergences: Vec<Divergence>,
    pub head_failures: Vec<(usize, String, Violation)>,
    pub errors: Vec<(usize, String)>,
    pub min_gap: f64,
    pub max_weight: f64,
    pub max_weight_at: String,
    pub weight_bound: f64,
    pub positions: usize,
}

impl VerifyReport {
    pub fn weights_ok(&self) -> bool {
        self.max_weight <= self.weight_bound
    }

    pub fn passed(&self) -> bool {
        self.mismatches == 0 && self.head_failures.is_empty() && self.errors.is_empty() && self.weights_ok()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model: {}", self.model);
        let _ = writeln!(s, "instances: {}  positions: {}", self.trials, self.positions);
        let _ = writeln!(s, "mismatches: {}  answer mismatches: {}", self.mismatches, self.answer_mismatches);
        let _ = writeln!(s, "head assumption failures: {}", self.head_failures.len());
        let _ = writeln!(s, "errors: {}", self.errors.len());
        let _ = writeln!(s, "min logit gap: {:.6}", self.min_gap);
        let _ = writeln!(s, "max |weight|: {:.6e} at {} (bound {:.6e})", self.max_weight, self.max_weight_at, self.weight_bound);
        for d in self.divergences.iter().take(10) {
            let _ = writeln!(s, "instance {} step {}: got {:?}, want {:?}", d.instance, d.step, d.got, d.want);
            for sd in &d.slots {
                let _ = writeln!(s, "  L{} {}: got {} want {}", sd.layer, sd.slot, sd.got, sd.want);
            }
        }
        for (i, h, v) in self.head_failures.iter().take(10) {
            let _ = writeln!(s, "instance {i} head {h}: {v:?}");
        }
        for (i, e) in self.errors.iter().take(10) {
            let _ = writeln!(s, "instance {i}: {e}");
        }
        let _ = writeln!(s, "result: {}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

/// Layer (1-based, 0 for the embedding) that writes column `col`.
pub fn layer_of(model: &ModelSpec, col: usize) -> usize {
    if col < model.embed.cols {
        return 0;
    }
    model.layers.iter().position(|l| col < l.mlp_in + l.mlp.d_out()).map_or(model.layers.len(), |k| k + 1)
}

/// Slots at `row` that are off their expected values.
pub fn compare_slots(model: &ModelSpec, row: &[f64], expect: &[(&'static str, Expect)]) -> Vec<SlotDiff> {
    let mut out = Vec::new();
    for &(name, e) in expect {
        let Some(slot) = model.layout.find(name) else { continue };
        let vals = &row[slot.range()];
        let layer = layer_of(model, slot.start);
        match e {
            Expect::Scalar(w) => {
                let tol = 1e-3 + 1e-7 * slot.bound;
                if (vals[0] - w).abs() > tol {
                    out.push(SlotDiff { layer, slot: name.into(), got: format!("{:.6}", vals[0]), want: format!("{w}") });
                }
            }
            Expect::OneHot(k) => {
                let bad = vals.iter().enumerate().any(|(j, v)| (v - (j == k) as u8 as f64).abs() > 1e-3);
                if bad {
                    let arg = super::argmax(vals);
                    let label = |j: usize| model.vocab.get(j).cloned().unwrap_or_else(|| j.to_string());
                    out.push(SlotDiff {
                        layer,
                        slot: name.into(),
                        got: format!("{} ({:.3})", label(arg), vals[arg]),
                        want: label(k),
                    });
                }
            }
        }
    }
    out
}

pub type RefFn<'a> = dyn Fn(&[String]) -> Result<Reference> + Sync + 'a;

struct Outcome {
    mismatch: bool,
    answer_mismatch: bool,
    divergence: Option<Divergence>,
    heads: Vec<(String, Violation)>,
    error: Option<String>,
    min_gap: f64,
    positions: usize,
}

fn last_answer(toks: &[String]) -> &[String] {
    let body = toks.strip_suffix(&["<eos>".to_string()]).unwrap_or(toks);
    let start = body.iter().rposition(|t| t == "=" || t == "[SEP]").map_or(0, |k| k + 1);
    &body[start..]
}

fn run_one(model: &ModelSpec, idx: usize, inst: &Instance, quant: Option<u32>, reference: &RefFn) -> Outcome {
    let mut o = Outcome {
        mismatch: true,
        answer_mismatch: true,
        divergence: None,
        heads: Vec::new(),
        error: None,
        min_gap: f64::INFINITY,
        positions: 0,
    };
    let ids = match model.encode(&inst.prompt) {
        Ok(ids) => ids,
        Err(e) => {
            o.error = Some(e.to_string());
            return o;
        }
    };
    let budget = inst.expected.len() + 4;
    let (dec, decoder) = match decode(model, &ids, budget, quant) {
        Ok(x) => x,
        Err(e) => {
            o.error = Some(e.to_string());
            return o;
        }
    };
    let got = model.decode_ids(&dec.output);
    o.positions = decoder.rows.len();
    o.min_gap = dec.min_gap;
    o.mismatch = got != inst.expected;
    o.answer_mismatch = last_answer(&got) != last_answer(&inst.expected) || got.last() != inst.expected.last();
    if o.mismatch {
        let step = got.iter().zip(&inst.expected).take_while(|(a, b)| a == b).count();
        o.divergence = Some(diagnose(model, idx, inst, &decoder, step, &got, reference));
    }
    for (name, rep) in decoder.check_heads() {
        if let Some(v) = rep.first_violation {
            o.heads.push((name, v));
        }
    }
    o
}

fn diagnose(model: &ModelSpec, idx: usize, inst: &Instance, dec: &Decoder, step: usize, got: &[String], reference: &RefFn) -> Divergence {
    let row = inst.prompt.len() + step - 1;
    let mut toks = inst.prompt.clone();
    toks.extend(inst.expected[..step].iter().cloned());
    let slots = match reference(&toks) {
        Ok(r) if row < dec.rows.len() => compare_slots(model, &dec.rows[row], &r[row]),
        _ => Vec::new(),
    };
    Divergence {
        instance: idx,
        step,
        got: got.get(step).cloned().unwrap_or_else(|| "(end)".into()),
        want: inst.expected.get(step).cloned().unwrap_or_else(|| "(end)".into()),
        slots,
    }
}

/// Decodes every instance (in parallel), compares with the oracle, runs
/// the head gap checks on every stream, and audits the weights.
pub fn verify(model: &ModelSpec, instances: &[Instance], quant: Option<u32>, reference: &RefFn) -> VerifyReport {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(instances.len().max(1));
    let chunk = instances.len().div_ceil(threads).max(1);
    let outcomes: Vec<Outcome> = std::thread::scope(|s| {
        let handles: Vec<_> = instances
            .chunks(chunk)
            .enumerate()
            .map(|(c, part)| {
                s.spawn(move || {
                    part.iter().enumerate().map(|(k, inst)| run_one(model, c * chunk + k, inst, quant, reference)).collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("verify worker panicked")).collect()
    });
    let (max_weight, max_weight_at) = model.max_weight();
    let mut rep = VerifyReport {
        model: model.name.clone(),
        trials: instances.len(),
        mismatches: 0,
        answer_mismatches: 0,
        divergences: Vec::new(),
        head_failures: Vec::new(),
        errors: Vec::new(),
        min_gap: f64::INFINITY,
        max_weight,
        max_weight_at,
        weight_bound: model.weight_bound,
        positions: 0,
    };
    for (i, o) in outcomes.into_iter().enumerate() {
        rep.mismatches += o.mismatch as usize;
        rep.answer_mismatches += o.answer_mismatch as usize;
        rep.divergences.extend(o.divergence);
        rep.head_failures.extend(o.heads.into_iter().map(|(h, v)| (i, h, v)));
        rep.errors.extend(o.error.map(|e| (i, e)));
        rep.min_gap = rep.min_gap.min(o.min_gap);
        rep.positions += o.positions;
    }
    rep
}
