//! Shared fixtures for the benchmarks.

use tuckermesh::{synthesize, AnimationSequence, SynthKind, SynthParams};

/// Deterministic mixed-motion torus animation with `k` vertices and `frames` frames.
pub fn mixed_asset(k: usize, frames: usize) -> AnimationSequence {
    synthesize(&SynthParams::new(SynthKind::Mixed, k, frames)).expect("valid fixture parameters")
}

/// Vertex positions of frame `t` as point triples.
pub fn frame_points(anim: &AnimationSequence, t: usize) -> Vec<[f64; 3]> {
    tuckermesh::metrics::frame_points(anim.vertices().frame(t))
}
