//! Numerical substrate: matrices, attention, GeLU MLPs and the gadgets
//! used by the constructed transformers.

pub mod attention;
pub mod bundle;
pub mod certify;
pub mod check;
pub mod gadgets;
pub mod mlp;
pub mod quant;
pub mod tensor;

pub use attention::{attention_forward, Head, HeadCache};
pub use check::{check_attention_assumption, AssumptionReport, Violation};
pub use gadgets::GadgetParams;
pub use mlp::{gelu, Mlp, ReluNet};
pub use quant::quantize;
pub use tensor::{Matrix, SlotLayout, TensorBundle};
