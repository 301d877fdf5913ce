//! Hand-built transformers for arithmetic and linear equations, run by
//! greedy decoding.
//!
//! The stream is built by concatenation: the embedding fills the first
//! columns, each attention head and each MLP appends its own named slot, and
//! nothing is ever overwritten. [`forward_residual`] runs the same weights
//! in residual form to show the two agree.

pub mod arithmetic;
pub mod build;
pub mod equation;
pub mod verify;

use crate::error::{Error, Result};
use std::ops::Range;
use crate::nn::attention::{Head, HeadCache};
use crate::nn::check::{check_head, AssumptionReport};
use crate::nn::gadgets::GadgetParams;
use crate::nn::mlp::Mlp;
use crate::nn::quant::quantize_slice;
use crate::nn::tensor::{Matrix, SlotLayout};

/// A deliberate defect, to check that verification notices and localizes
/// it. Layers are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Fault {
    /// Halve the softmax scale of a head.
    HeadLambda { layer: usize, head: String },
    /// Halve the input scale `lambda` of an MLP gadget without touching its
    /// output scale.
    MlpLambda { layer: usize, part: String },
}

/// What a slot should hold at a position, for layerwise checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Expect {
    Scalar(f64),
    OneHot(usize),
}

/// Per position, the expected value of some slots.
pub type Reference = Vec<Vec<(&'static str, Expect)>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadKind {
    Copy,
    Mean,
}

#[derive(Debug, Clone)]
pub struct HeadSpec {
    pub name: String,
    pub kind: HeadKind,
    pub head: Head,
    pub params: GadgetParams,
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub heads: Vec<HeadSpec>,
    /// Stream width the heads read.
    pub attn_in: usize,
    pub mlp: Mlp,
    /// Stream width the MLP reads (`attn_in` plus head outputs).
    pub mlp_in: usize,
    /// Hidden units of each MLP gadget: `mult:<slot>` or `relu<k>`.
    pub parts: Vec<(String, Range<usize>)>,
}

impl Layer {
    pub fn attn_out(&self) -> usize {
        self.heads.iter().map(|h| h.head.d_out()).sum()
    }
}

#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub name: String,
    pub vocab: Vec<String>,
    pub eos: usize,
    /// Embedding row per token; the position column is filled in per step.
    pub embed: Matrix,
    pub pos_col: usize,
    pub layers: Vec<Layer>,
    pub layout: SlotLayout,
    /// Logits are `unembed * x + unembed_bias`.
    pub unembed: Matrix,
    pub unembed_bias: Vec<f64>,
    /// Longest prompt the construction is sized for.
    pub n_max: usize,
    /// Longest sequence (prompt plus generated tokens) it can run.
    pub max_len: usize,
    /// Largest weight magnitude allowed by the construction's formulas.
    pub weight_bound: f64,
}

impl ModelSpec {
    /// A copy of the model with `fault` applied.
    pub fn with_fault(&self, fault: &Fault) -> Result<ModelSpec> {
        let mut m = self.clone();
        fn layer_mut(m: &mut ModelSpec, l: usize) -> Result<&mut Layer> {
            let n = m.layers.len();
            m.layers.get_mut(l.wrapping_sub(1)).ok_or_else(|| Error::Invalid(format!("layer {l} not in 1..={n}")))
        }
        match fault {
            Fault::HeadLambda { layer, head } => {
                let ly = layer_mut(&mut m, *layer)?;
                let h = ly
                    .heads
                    .iter_mut()
                    .find(|h| &h.name == head)
                    .ok_or_else(|| Error::Invalid(format!("no head {head:?} in layer {layer}")))?;
                h.head.lambda /= 2.0;
            }
            Fault::MlpLambda { layer, part } => {
                let ly = layer_mut(&mut m, *layer)?;
                let (_, range) = ly
                    .parts
                    .iter()
                    .find(|(n, _)| n == part)
                    .cloned()
                    .ok_or_else(|| Error::Invalid(format!("no MLP part {part:?} in layer {layer}")))?;
                // Products scale their inputs by 1/lambda, ReLU imitations by lambda.
                let f = if part.starts_with("mult:") { 2.0 } else { 0.5 };
                let (mut w1, mut b1) = (ly.mlp.w1.clone(), ly.mlp.b1.clone());
                for r in range {
                    for c in 0..w1.cols {
                        w1.set(r, c, w1.get(r, c) * f);
                    }
                    b1[r] *= f;
                }
                ly.mlp = Mlp::new(w1, b1, ly.mlp.w2.clone())?;
            }
        }
        Ok(m)
    }

    pub fn token_id(&self, t: &str) -> Result<usize> {
        self.vocab
            .iter()
            .position(|v| v == t)
            .ok_or_else(|| Error::Invalid(format!("token {t:?} not in vocabulary")))
    }

    pub fn encode(&self, toks: &[String]) -> Result<Vec<usize>> {
        toks.iter().map(|t| self.token_id(t)).collect()
    }

    pub fn decode_ids(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| self.vocab[i].clone()).collect()
    }

    pub fn width(&self) -> usize {
        self.layout.width()
    }

    /// Every weight of the model with a stable name.
    pub fn named_weights(&self) -> Vec<(String, Matrix)> {
        let mut out = vec![("embed".to_string(), self.embed.clone())];
        for (l, layer) in self.layers.iter().enumerate() {
            for h in &layer.heads {
                let p = format!("L{}.{}", l + 1, h.name);
                out.push((format!("{p}.q"), h.head.q.clone()));
                out.push((format!("{p}.k"), h.head.k.clone()));
                out.push((format!("{p}.v"), h.head.v.clone()));
                if let Some(r) = &h.head.r {
                    out.push((format!("{p}.r"), Matrix::from_rows(std::slice::from_ref(r)).unwrap()));
                }
                out.push((format!("{p}.lambda_mu"), Matrix::from_rows(&[vec![h.head.lambda, h.head.mu]]).unwrap()));
            }
            out.push((format!("L{}.mlp.w1", l + 1), layer.mlp.w1.clone()));
            out.push((format!("L{}.mlp.b1", l + 1), Matrix::from_rows(std::slice::from_ref(&layer.mlp.b1)).unwrap()));
            out.push((format!("L{}.mlp.w2", l + 1), layer.mlp.w2.clone()));
        }
        out.push(("unembed".to_string(), self.unembed.clone()));
        out.push(("unembed_bias".to_string(), Matrix::from_rows(std::slice::from_ref(&self.unembed_bias)).unwrap()));
        out
    }

    /// Replace every weight with the same-named entry of `items` (as written
    /// by [`named_weights`](Self::named_weights)). The structure comes from
    /// `self`; names and shapes must all match.
    pub fn load_weights(&mut self, items: &[(String, Matrix)]) -> Result<()> {
        let map: std::collections::HashMap<&str, &Matrix> = items.iter().map(|(n, m)| (n.as_str(), m)).collect();
        for (name, want) in self.named_weights() {
            let got = map.get(name.as_str()).ok_or_else(|| Error::Invalid(format!("bundle lacks {name}")))?;
            if (got.rows, got.cols) != (want.rows, want.cols) {
                return Err(Error::DimensionMismatch(format!(
                    "{name}: bundle has {}x{}, model needs {}x{}",
                    got.rows, got.cols, want.rows, want.cols
                )));
            }
        }
        let get = |name: String| (*map[name.as_str()]).clone();
        self.embed = get("embed".into());
        for (l, layer) in self.layers.iter_mut().enumerate() {
            for h in &mut layer.heads {
                let p = format!("L{}.{}", l + 1, h.name);
                h.head.q = get(format!("{p}.q"));
                h.head.k = get(format!("{p}.k"));
                h.head.v = get(format!("{p}.v"));
                if h.head.r.is_some() {
                    h.head.r = Some(get(format!("{p}.r")).row(0).to_vec());
                }
                let lm = get(format!("{p}.lambda_mu"));
                (h.head.lambda, h.head.mu) = (lm.get(0, 0), lm.get(0, 1));
            }
            let w1 = get(format!("L{}.mlp.w1", l + 1));
            let b1 = get(format!("L{}.mlp.b1", l + 1)).row(0).to_vec();
            layer.mlp = Mlp::new(w1, b1, get(format!("L{}.mlp.w2", l + 1)))?;
        }
        self.unembed = get("unembed".into());
        self.unembed_bias = get("unembed_bias".into()).row(0).to_vec();
        Ok(())
    }

    /// Largest magnitude over all weights, and where it sits.
    pub fn max_weight(&self) -> (f64, String) {
        let mut best = (0.0, String::new());
        for (name, m) in self.named_weights() {
            let v = m.max_abs();
            if v > best.0 {
                best = (v, name);
            }
        }
        best
    }

    pub fn embed_row(&self, tok: usize, pos: usize) -> Vec<f64> {
        let mut row = self.embed.row(tok).to_vec();
        row[self.pos_col] = pos as f64;
        row
    }
}

/// Incremental forward pass that keeps per-head key/value caches.
pub struct Decoder<'m> {
    pub model: &'m ModelSpec,
    caches: Vec<Vec<HeadCache>>,
    /// Full stream row of every position so far.
    pub rows: Vec<Vec<f64>>,
    pub tokens: Vec<usize>,
    /// Mantissa bits kept after every layer, if set.
    pub quant_bits: Option<u32>,
}

impl<'m> Decoder<'m> {
    pub fn new(model: &'m ModelSpec, quant_bits: Option<u32>) -> Self {
        let caches = model.layers.iter().map(|l| vec![HeadCache::default(); l.heads.len()]).collect();
        Decoder { model, caches, rows: Vec::new(), tokens: Vec::new(), quant_bits }
    }

    pub fn push(&mut self, tok: usize) -> Result<()> {
        let pos = self.rows.len() + 1;
        if pos > self.model.max_len {
            return Err(Error::LengthExceeded { len: pos, max: self.model.max_len });
        }
        let mut row = self.model.embed_row(tok, pos);
        row.reserve(self.model.width() - row.len());
        for (l, layer) in self.model.layers.iter().enumerate() {
            let start = row.len();
            for (h, spec) in layer.heads.iter().enumerate() {
                let x = &row[..layer.attn_in];
                let cache = &mut self.caches[l][h];
                cache.push(&spec.head, x);
                let (o, _) = cache.attend(&spec.head, &spec.head.query(x));
                row.extend(o);
            }
            let mid = row.len();
            let y = layer.mlp.forward(&row[..layer.mlp_in])?;
            row.extend(y);
            if let Some(b) = self.quant_bits {
                quantize_slice(&mut row[start..], b);
            }
            debug_assert_eq!(mid, layer.mlp_in);
        }
        self.rows.push(row);
        self.tokens.push(tok);
        Ok(())
    }

    pub fn logits(&self) -> Vec<f64> {
        let x = self.rows.last().expect("at least one token");
        let mut z = self.model.unembed.apply(x).expect("unembedding width");
        for (v, b) in z.iter_mut().zip(&self.model.unembed_bias) {
            *v += b;
        }
        z
    }

    pub fn stream(&self) -> Matrix {
        let mut m = Matrix::zeros(0, self.model.width());
        for r in &self.rows {
            m.push_row(r);
        }
        m
    }

    /// Gap-condition report for every head over the positions so far.
    pub fn check_heads(&self) -> Vec<(String, AssumptionReport)> {
        let x = self.stream();
        let mut out = Vec::new();
        for (l, layer) in self.model.layers.iter().enumerate() {
            let xin = submatrix_cols(&x, layer.attn_in);
            for h in &layer.heads {
                out.push((format!("L{}.{}", l + 1, h.name), check_head(&xin, &h.head, h.params.rho, h.params.delta)));
            }
        }
        out
    }
}

fn submatrix_cols(x: &Matrix, cols: usize) -> Matrix {
    let mut m = Matrix::zeros(x.rows, cols);
    for i in 0..x.rows {
        m.row_mut(i).copy_from_slice(&x.row(i)[..cols]);
    }
    m
}

pub fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in z.iter().enumerate() {
        if *v > z[best] {
            best = i;
        }
    }
    best
}

/// Smallest difference between the winning logit and any other.
pub fn logit_gap(z: &[f64]) -> f64 {
    let w = argmax(z);
    z.iter().enumerate().filter(|(i, _)| *i != w).map(|(_, v)| z[w] - v).fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone)]
pub struct Decoded {
    pub prompt: Vec<usize>,
    pub output: Vec<usize>,
    /// Smallest logit gap over the generated steps.
    pub min_gap: f64,
}

/// Greedy decoding until `<eos>` or `max_steps` new tokens.
pub fn decode<'m>(model: &'m ModelSpec, prompt: &[usize], max_steps: usize, quant_bits: Option<u32>) -> Result<(Decoded, Decoder<'m>)> {
    if prompt.is_empty() {
        return Err(Error::Invalid("empty prompt".into()));
    }
    if prompt.len() > model.n_max {
        return Err(Error::LengthExceeded { len: prompt.len(), max: model.n_max });
    }
    let mut dec = Decoder::new(model, quant_bits);
    for &t in prompt {
        dec.push(t)?;
    }
    let mut output = Vec::new();
    let mut min_gap = f64::INFINITY;
    for _ in 0..max_steps {
        let z = dec.logits();
        min_gap = min_gap.min(logit_gap(&z));
        let t = argmax(&z);
        output.push(t);
        if t == model.eos {
            break;
        }
        dec.push(t)?;
    }
    Ok((Decoded { prompt: prompt.to_vec(), output, min_gap }, dec))
}

/// The same model run with a fixed-width residual stream: every block reads
/// the whole stream (weights zero-padded) and adds its output into its
/// reserved, initially zero, columns.
pub fn forward_residual(model: &ModelSpec, tokens: &[usize]) -> Result<Matrix> {
    let w = model.width();
    let n = tokens.len();
    let mut x = Matrix::zeros(n, w);
    for (i, &t) in tokens.iter().enumerate() {
        let e = model.embed_row(t, i + 1);
        x.row_mut(i)[..e.len()].copy_from_slice(&e);
    }
    for layer in &model.layers {
        let mut col = layer.attn_in;
        let mut delta = Matrix::zeros(n, w);
        for h in &layer.heads {
            let wide = Head {
                q: h.head.q.widen(w),
                k: h.head.k.widen(w),
                v: h.head.v.widen(w),
                r: h.head.r.as_ref().map(|r| {
                    let mut r = r.clone();
                    r.resize(w, 0.0);
                    r
                }),
                ..h.head.clone()
            };
            let o = crate::nn::attention::attention_forward(std::slice::from_ref(&wide), &x)?;
            for i in 0..n {
                for c in 0..o.cols {
                    delta.add_to(i, col + c, o.get(i, c));
                }
            }
            col += wide.d_out();
        }
        add_in_place(&mut x, &delta);
        let mlp = Mlp::new(layer.mlp.w1.widen(w), layer.mlp.b1.clone(), layer.mlp.w2.clone())?;
        let mut delta = Matrix::zeros(n, w);
        for i in 0..n {
            let y = mlp.forward(x.row(i))?;
            for (c, v) in y.into_iter().enumerate() {
                delta.add_to(i, layer.mlp_in + c, v);
            }
        }
        add_in_place(&mut x, &delta);
    }
    Ok(x)
}

fn add_in_place(x: &mut Matrix, d: &Matrix) {
    for (a, b) in x.data.iter_mut().zip(&d.data) {
        *a += b;
    }
}
