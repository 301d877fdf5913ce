//! Slot-wired assembly of layers from heads and gadgets.

use super::{HeadKind, HeadSpec, Layer};
use crate::error::{Error, Result};
use crate::nn::attention::Head;
use crate::nn::gadgets::{build_copy_head, build_mean_head, build_mult_mlp, build_relu_sim, GadgetParams};
use crate::nn::mlp::{Mlp, ReluNet};
use crate::nn::tensor::{Matrix, SlotLayout};

/// Linear form over stream columns.
pub type Lin = Vec<(usize, f64)>;

/// `a + b`, merging columns.
pub fn add(a: &Lin, b: &Lin) -> Lin {
    let mut out = a.clone();
    for &(c, w) in b {
        match out.iter_mut().find(|(oc, _)| *oc == c) {
            Some(e) => e.1 += w,
            None => out.push((c, w)),
        }
    }
    out.retain(|(_, w)| *w != 0.0);
    out
}

pub fn scale(a: &Lin, s: f64) -> Lin {
    a.iter().map(|&(c, w)| (c, w * s)).collect()
}

/// Weights above this lose too much precision in `f64` to be trusted.
pub const MAX_WEIGHT: f64 = 1e24;

/// Error budget split: attention copy error, multiplier `eps` on unit
/// inputs, and ReLU imitation error, all derived from the end-to-end `eps`.
#[derive(Debug, Clone, Copy)]
pub struct Precision {
    pub attn: f64,
    pub mult: f64,
    pub relu: f64,
}

impl Precision {
    pub fn from_total(eps: f64) -> Result<Precision> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::Invalid(format!("error budget must lie in (0, 0.5), got {eps}")));
        }
        Ok(Precision { attn: eps * 4e-12, mult: eps * 4e-5, relu: eps * 4e-9 })
    }
}

enum Part {
    Mult { a: Lin, b: Lin, out: usize, scale: f64, name: String },
    Relu(Vec<(Lin, f64, Lin)>),
}

pub struct Builder {
    pub layout: SlotLayout,
    pub layers: Vec<Layer>,
    pub n_max: usize,
    pub prec: Precision,
    heads: Vec<HeadSpec>,
    attn_in: usize,
    mlp_in: Option<usize>,
    parts: Vec<Part>,
    /// Largest weight each component is expected to carry, from its formula.
    pub bounds: Vec<(String, f64)>,
}

impl Builder {
    pub fn new(layout: SlotLayout, n_max: usize, prec: Precision) -> Builder {
        let w = layout.width();
        Builder { layout, layers: Vec::new(), n_max, prec, heads: Vec::new(), attn_in: w, mlp_in: None, parts: Vec::new(), bounds: Vec::new() }
    }

    /// Single column of a slot as a linear form.
    pub fn v(&self, name: &str) -> Lin {
        vec![(self.layout.col(name), 1.0)]
    }

    pub fn at(&self, name: &str, k: usize) -> Lin {
        let s = self.layout.slot(name);
        assert!(k < s.len, "{name}[{k}] out of range");
        vec![(s.start + k, 1.0)]
    }

    fn row(&self, lin: &Lin, width: usize) -> Vec<f64> {
        let mut r = vec![0.0; width];
        for &(c, w) in lin {
            assert!(c < width, "column {c} is not readable here (width {width})");
            r[c] += w;
        }
        r
    }

    fn mat(&self, rows: &[Lin], width: usize) -> Matrix {
        let rows: Vec<Vec<f64>> = rows.iter().map(|l| self.row(l, width)).collect();
        Matrix::from_rows(&rows).unwrap_or_else(|_| Matrix::zeros(0, width))
    }

    fn level(&self) -> usize {
        self.layers.len() + 1
    }

    /// COPY head; scores and priorities are multiplied by `c`, and `m`
    /// bounds the scaled entries. Outputs land in fresh slots.
    #[allow(clippy::too_many_arguments)]
    pub fn copy(&mut self, name: &str, q: &[Lin], k: &[Lin], r: Option<&Lin>, v: &[Lin], c: f64, m: f64, outs: &[(&str, usize, f64, &str)]) -> Result<()> {
        assert!(self.mlp_in.is_none(), "heads must come before the MLP");
        let w = self.attn_in;
        let q = self.mat(&q.iter().map(|l| scale(l, c)).collect::<Vec<_>>(), w);
        let k = self.mat(k, w);
        let r = r.map(|l| self.row(&scale(l, c), w));
        let v = self.mat(v, w);
        let delta = 0.9 * c;
        let params = GadgetParams { m, eps: self.prec.attn, delta, rho: delta * delta / (8.0 * m), n: self.n_max };
        let head = build_copy_head(q, k, v, r, &params)?;
        self.push_head(name, HeadKind::Copy, head, params, outs)
    }

    /// MEAN head over the positions whose score is zero.
    pub fn mean(&mut self, name: &str, q: &[Lin], k: &[Lin], v: &[Lin], m: f64, outs: &[(&str, usize, f64, &str)]) -> Result<()> {
        let w = self.attn_in;
        let (q, k, v) = (self.mat(q, w), self.mat(k, w), self.mat(v, w));
        let mut params = GadgetParams { m, eps: self.prec.attn, delta: 1.0, rho: 0.0, n: self.n_max };
        params.rho = params.mean_rho_max();
        let head = build_mean_head(q, k, v, &params)?;
        self.push_head(name, HeadKind::Mean, head, params, outs)
    }

    fn push_head(&mut self, name: &str, kind: HeadKind, head: Head, params: GadgetParams, outs: &[(&str, usize, f64, &str)]) -> Result<()> {
        let total: usize = outs.iter().map(|o| o.1).sum();
        if total != head.d_out() {
            return Err(Error::DimensionMismatch(format!("head {name} writes {} values into {total} columns", head.d_out())));
        }
        for &(s, len, bound, desc) in outs {
            self.layout.add(s, len, bound, desc);
        }
        self.bounds.push((format!("L{}.{name}", self.level()), head.max_abs_weight()));
        self.heads.push(HeadSpec { name: name.to_string(), kind, head, params });
        Ok(())
    }

    /// Ends the attention block and reserves the MLP output slots.
    pub fn mlp_slots(&mut self, outs: &[(&str, usize, f64, &str)]) {
        self.mlp_in = Some(self.layout.width());
        for &(s, len, bound, desc) in outs {
            self.layout.add(s, len, bound, desc);
        }
    }

    /// `out += scale * a * b`, with `a`, `b` known to lie in `[-1, 1]`.
    pub fn mult(&mut self, a: Lin, b: Lin, out: &str, scale: f64) {
        let name = format!("mult:{out}");
        let out = self.layout.col(out);
        self.parts.push(Part::Mult { a, b, out, scale, name });
    }

    /// A ReLU network imitated by one GeLU block; units are
    /// `(inputs, bias, outputs)` over stream columns.
    pub fn relu(&mut self, units: Vec<(Lin, f64, Lin)>) {
        self.parts.push(Part::Relu(units));
    }

    pub fn end_layer(&mut self) -> Result<()> {
        let mlp_in = self.mlp_in.take().unwrap_or(self.layout.width());
        let w = self.layout.width();
        let d_out = w - mlp_in;
        let level = self.level();
        let mut mlps = Vec::new();
        let mut parts = Vec::new();
        let mut h = 0;
        for (idx, part) in std::mem::take(&mut self.parts).into_iter().enumerate() {
            let (name, mlp) = match part {
                Part::Mult { a, b, out, scale, name } => {
                    let g = build_mult_mlp(1.0, self.prec.mult);
                    let input = self.mat(&[a, b], mlp_in);
                    let e = g.embed(&input, &[out - mlp_in], d_out)?;
                    let w2 = e.w2.scale(scale);
                    (name, Mlp::new(e.w1, e.b1, w2)?)
                }
                Part::Relu(units) => {
                    let mut net = ReluNet::new(mlp_in, d_out);
                    for (ins, b, outs) in &units {
                        let outs: Vec<(usize, f64)> = outs.iter().map(|&(c, w)| (c - mlp_in, w)).collect();
                        net.unit(ins, *b, &outs);
                    }
                    (format!("relu{idx}"), build_relu_sim(&net.to_mlp(), self.prec.relu))
                }
            };
            parts.push((name, h..h + mlp.hidden()));
            h += mlp.hidden();
            self.bounds.push((format!("L{level}.mlp.part{idx}"), mlp.max_abs_weight()));
            mlps.push(mlp);
        }
        let mlp = if mlps.is_empty() { Mlp::zeros(mlp_in, 0, d_out) } else { Mlp::concat(&mlps)? };
        let heads = std::mem::take(&mut self.heads);
        self.layers.push(Layer { heads, attn_in: self.attn_in, mlp, mlp_in, parts });
        self.attn_in = w;
        Ok(())
    }

    /// The recorded bound, after checking it against the precision limit.
    pub fn weight_bound(&self) -> Result<f64> {
        let b = self.bounds.iter().map(|(_, v)| *v).fold(0.0, f64::max);
        if b > MAX_WEIGHT {
            let (name, _) = self.bounds.iter().find(|(_, v)| *v == b).unwrap();
            return Err(Error::ParameterOverflow(format!("{name} needs weights up to {b:e}, above {MAX_WEIGHT:e}")));
        }
        Ok(b)
    }
}
