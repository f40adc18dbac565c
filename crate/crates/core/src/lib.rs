//! Lossy compression of 3D mesh animations with truncated higher-order SVD.
//!
//! An animation of `K` vertices over `F` frames is a `K x 3 x F` tensor.
//! Encoding removes per-frame affine motion ([`rigid`]), decomposes the
//! normalised tensor ([`decomposition`]), picks the retained mode-1 and mode-3
//! ranks for a target compression ratio ([`search`]) and serialises the
//! truncated operator ([`codec`]). [`metrics`], [`pca`] and [`sweep`] provide
//! the evaluation harness.

pub mod codec;
pub mod decomposition;
pub mod error;
mod linalg;
pub mod mesh;
pub mod metrics;
pub mod pca;
pub mod rigid;
pub mod search;
pub mod sweep;
pub mod synth;
pub mod tensor;

pub use codec::{
    decode, encode, encode_with_ranks, load_animation, measured_cr, save_animation, total_cr,
    AnimationFormat, AnimationSequence, CompressedAnimation, EncodeOptions, Encoded, PlanOutcome,
    Precision, PreparedAnimation,
};
pub use decomposition::{hosvd, hosvd_economy, TruncatedTucker, TuckerOperator};
pub use error::{Error, Result};
pub use mesh::{Edge, Topology};
pub use metrics::{DistortionReport, Metric, MsdmContext};
pub use pca::{pca_compress, pca_compression_ratio, pca_reconstruct, PcaDecomposition, PcaModel};
pub use rigid::{estimate_rigid_motion, FrameTransform, RigidMotion, TransformSequence};
pub use search::{
    compression_ratio, diagonal_plan, enumerate_candidates, iterative_plan, space_savings,
    CandidateList, CompressionPlan, Strategy,
};
pub use sweep::{run_sweep, Method, SweepRow, SweepSpec};
pub use synth::{synthesize, SynthKind, SynthParams};
pub use tensor::{fold, Dims, Mode, Tensor3, UnfoldedMatrix};
