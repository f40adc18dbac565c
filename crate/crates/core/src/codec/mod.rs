//! Encoding pipeline: rigid normalisation, HO-SVD, rank selection,
//! truncation and serialisation, plus the matching decoder.

pub mod animation;
pub mod container;

use std::sync::OnceLock;

use log::{debug, warn};
use nalgebra::DMatrix;

pub use animation::{load_animation, save_animation, AnimationFormat, AnimationSequence};
pub use container::{CompressedAnimation, Precision, HEADER_LEN};

use crate::decomposition::{hosvd_economy, TruncatedTucker, TuckerOperator};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, DistortionReport, Metric, MsdmContext};
use crate::rigid::{
    apply_inverse_transforms, estimate_rigid_motion, RigidMotion, TransformSequence,
};
use crate::search::{
    diagonal_plan, enumerate_candidates, iterative_plan, CandidateList, CompressionPlan, Strategy,
    DEFAULT_DELTA, DEFAULT_DEPTH, DEFAULT_SAMPLES,
};
use crate::tensor::Tensor3;

/// Smallest vertex count accepted by the encoder.
pub const MIN_VERTICES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EncodeOptions {
    /// Target compression ratio of the Tucker operator.
    pub target_cr: f64,
    pub strategy: Strategy,
    /// Distortion minimised by the iterative strategy.
    pub metric: Metric,
    pub precision: Precision,
    pub delta: f64,
    pub samples: usize,
    pub depth: usize,
}

impl EncodeOptions {
    pub fn new(target_cr: f64) -> Self {
        Self {
            target_cr,
            strategy: Strategy::Diagonal,
            metric: Metric::Mse,
            precision: Precision::Single,
            delta: DEFAULT_DELTA,
            samples: DEFAULT_SAMPLES,
            depth: DEFAULT_DEPTH,
        }
    }
}

/// Rank selection result.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanOutcome {
    pub plan: CompressionPlan,
    /// Distortion of the selected plan when the strategy evaluated it.
    pub error: Option<f64>,
    pub evaluations: usize,
}

#[derive(Clone, Debug)]
pub struct Encoded {
    pub container: CompressedAnimation,
    pub outcome: PlanOutcome,
    /// Frames whose motion could only be estimated as a translation.
    pub degenerate_frames: Vec<usize>,
}

/// An animation with its motion normalisation and decomposition computed,
/// ready to be truncated at any ranks.
pub struct PreparedAnimation<'a> {
    anim: &'a AnimationSequence,
    rigid: RigidMotion,
    tucker: TuckerOperator,
    msdm: OnceLock<MsdmContext>,
}

impl<'a> PreparedAnimation<'a> {
    pub fn new(anim: &'a AnimationSequence) -> Result<Self> {
        let k = anim.vertex_count();
        if k < MIN_VERTICES {
            return Err(Error::invalid(format!(
                "at least {MIN_VERTICES} vertices required, got {k}"
            )));
        }
        let rigid = estimate_rigid_motion(anim.vertices())?;
        if !rigid.degenerate_frames.is_empty() {
            warn!(
                "{}: {} frame(s) fell back to translation-only motion",
                anim.name,
                rigid.degenerate_frames.len()
            );
        }
        let tucker = hosvd_economy(&rigid.normalized)?;
        Ok(Self {
            anim,
            rigid,
            tucker,
            msdm: OnceLock::new(),
        })
    }

    pub fn animation(&self) -> &AnimationSequence {
        self.anim
    }

    pub fn rigid(&self) -> &RigidMotion {
        &self.rigid
    }

    pub fn tucker(&self) -> &TuckerOperator {
        &self.tucker
    }

    pub fn msdm_context(&self) -> &MsdmContext {
        self.msdm
            .get_or_init(|| MsdmContext::with_defaults(self.anim.topology().clone()))
    }

    pub fn truncate(&self, v: usize, f: usize) -> Result<TruncatedTucker> {
        self.tucker.truncate([v, 3, f])
    }

    /// Decoded animation at ranks `(v, f)`, without quantisation.
    pub fn reconstruct(&self, v: usize, f: usize) -> Result<Tensor3> {
        let x = self.truncate(v, f)?.reconstruct()?;
        apply_inverse_transforms(&x, &self.rigid.transforms)
    }

    pub fn report(&self, v: usize, f: usize, metric: Metric) -> Result<DistortionReport> {
        let t = self.reconstruct(v, f)?;
        self.report_for(&t, metric)
    }

    pub fn report_for(&self, reconstructed: &Tensor3, metric: Metric) -> Result<DistortionReport> {
        let msdm = (metric == Metric::Msdm).then(|| self.msdm_context());
        evaluate(metric, self.anim.vertices(), reconstructed, msdm)
    }

    pub fn error(&self, v: usize, f: usize, metric: Metric) -> Result<f64> {
        Ok(self.report(v, f, metric)?.aggregate)
    }

    /// Candidates for `target_cr`; an empty list is an unreachable target.
    pub fn candidates(&self, target_cr: f64, delta: f64) -> Result<CandidateList> {
        let [k, _, frames] = self.anim.vertices().dims();
        let list = enumerate_candidates(k, frames, target_cr, delta)?;
        if list.is_empty() {
            return Err(Error::UnreachableTarget {
                target: target_cr,
                delta,
            });
        }
        Ok(list)
    }

    pub fn plan(&self, opts: &EncodeOptions) -> Result<PlanOutcome> {
        let list = self.candidates(opts.target_cr, opts.delta)?;
        self.plan_from(&list, opts)
    }

    pub fn plan_from(&self, list: &CandidateList, opts: &EncodeOptions) -> Result<PlanOutcome> {
        match opts.strategy {
            Strategy::Diagonal => Ok(PlanOutcome {
                plan: diagonal_plan(list)?,
                error: None,
                evaluations: 0,
            }),
            Strategy::Iterative => {
                let out = iterative_plan(
                    list,
                    |v, f| self.error(v, f, opts.metric),
                    opts.samples,
                    opts.depth,
                )?;
                debug!(
                    "iterative search evaluated {} candidates",
                    out.evaluations.len()
                );
                Ok(PlanOutcome {
                    plan: out.plan,
                    error: Some(out.error),
                    evaluations: out.evaluations.len(),
                })
            }
            Strategy::Explicit => Err(Error::invalid("explicit plans carry their own ranks")),
        }
    }

    /// Builds the container for ranks `(v, f)`, rounding every value to
    /// `precision`.
    pub fn container(
        &self,
        v: usize,
        f: usize,
        strategy: Strategy,
        metric: Metric,
        precision: Precision,
    ) -> Result<CompressedAnimation> {
        let (core, factors) = self.truncate(v, f)?.into_parts();
        let q = |x: f64| precision.quantize(x);
        let factors = factors.map(|u: DMatrix<f64>| u.map(q));
        let core = Tensor3::from_vec(core.dims(), core.data().iter().map(|&x| q(x)).collect())?;
        let rows: Vec<[f64; 12]> = self
            .rigid
            .transforms
            .iter()
            .map(|t| t.to_row_major().map(q))
            .collect();
        let [k, _, frames] = self.anim.vertices().dims();
        Ok(CompressedAnimation {
            vertices: k,
            frames,
            precision,
            strategy,
            metric,
            operator: TruncatedTucker::new(core, factors)?,
            transforms: TransformSequence::from_row_major(&rows)?,
        })
    }
}

/// Compresses `anim` to the target ratio with the chosen strategy.
pub fn encode(anim: &AnimationSequence, opts: &EncodeOptions) -> Result<Encoded> {
    let prepared = PreparedAnimation::new(anim)?;
    let outcome = prepared.plan(opts)?;
    let container = prepared.container(
        outcome.plan.v,
        outcome.plan.f,
        outcome.plan.strategy,
        opts.metric,
        opts.precision,
    )?;
    Ok(Encoded {
        container,
        outcome,
        degenerate_frames: prepared.rigid.degenerate_frames.clone(),
    })
}

/// Compresses `anim` at caller-chosen ranks.
pub fn encode_with_ranks(
    anim: &AnimationSequence,
    v: usize,
    f: usize,
    precision: Precision,
) -> Result<Encoded> {
    let prepared = PreparedAnimation::new(anim)?;
    let [k, _, frames] = anim.vertices().dims();
    let plan = CompressionPlan::explicit(v, f, k, frames)?;
    let container = prepared.container(v, f, Strategy::Explicit, Metric::Mse, precision)?;
    Ok(Encoded {
        container,
        outcome: PlanOutcome {
            plan,
            error: None,
            evaluations: 0,
        },
        degenerate_frames: prepared.rigid.degenerate_frames.clone(),
    })
}

/// Reconstructs the `K x 3 x F` animation stored in `c`.
pub fn decode(c: &CompressedAnimation) -> Result<Tensor3> {
    let x = c.operator.reconstruct()?;
    apply_inverse_transforms(&x, &c.transforms)
}

/// Payload bytes, transforms included, over the raw size `K*F*3*d_s`.
pub fn measured_cr(c: &CompressedAnimation) -> f64 {
    c.payload_len() as f64 / (c.vertices * c.frames * 3 * c.precision.bytes()) as f64
}

/// Like [`measured_cr`] but counting the fixed header too.
pub fn total_cr(c: &CompressedAnimation) -> f64 {
    c.byte_len() as f64 / (c.vertices * c.frames * 3 * c.precision.bytes()) as f64
}
