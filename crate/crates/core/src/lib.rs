//! Lossy compression for dense optical-flow fields.
//!
//! The encoder detects flow discontinuities, stores them as chain codes,
//! keeps a sparse regular grid of uniformly quantised flow vectors and
//! entropy-codes the lot. The decoder rebuilds the dense field with
//! homogeneous diffusion that is not allowed to cross the stored edges.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below name the instantiations the codec itself uses.

pub mod chain;
pub mod codec;
pub mod container;
pub mod detector;
pub mod edges;
pub mod entropy;
pub mod error;
pub mod flow_io;
pub mod inpaint;
pub mod mask;
pub mod quant;
mod scalar;

pub use chain::{ChainStream, StartElement, StartKind, Symbol};
pub use codec::{decode, encode, psnr, sweep, EncodeParams, ParamGrid, RatePoint};
pub use detector::{detect_edges, gaussian_smooth, DetectorParams};
pub use edges::EdgeSet;
pub use error::{Error, Result};
pub use flow_io::{read_flow, visualize, write_flow, FlowField, RgbImage};
pub use inpaint::{solve, InpaintProblem, SolverConfig};
pub use mask::{build_mask, MaskLayout, MaskSpec, Segment};
pub use quant::{channel_range, dequantise, quantise};
pub use scalar::Scalar;

/// Flow field at the precision of the `.flo` interchange format.
pub type Flow32 = FlowField<f32>;
/// Flow field used for intermediate processing.
pub type Flow64 = FlowField<f64>;
/// Inpainting problem solved in double precision, as the decoder does.
pub type InpaintProblem64 = InpaintProblem<f64>;
