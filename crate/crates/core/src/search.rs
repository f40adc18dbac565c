//! Storage cost model and selection of the retained ranks `(v, f)`.
//!
//! Only mode-1 (vertices) and mode-3 (frames) are truncated; mode-2 keeps all
//! `J` spatial components. A truncated operator stores
//! `v*K + J^2 + f*F + v*J*f` values against `K*F*J` for the raw animation.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default half-width of the accepted compression-ratio band.
pub const DEFAULT_DELTA: f64 = 0.002;
/// Default number of samples per refinement level of [`iterative_plan`].
pub const DEFAULT_SAMPLES: usize = 5;
/// Default refinement depth of [`iterative_plan`].
pub const DEFAULT_DEPTH: usize = 3;

/// Values stored per frame for its 3x4 affine transform.
pub const TRANSFORM_VALUES_PER_FRAME: usize = 12;

fn check_counts(counts: &[(&str, usize)]) -> Result<()> {
    for (name, c) in counts {
        if *c == 0 {
            return Err(Error::invalid(format!("{name} must be at least 1")));
        }
    }
    Ok(())
}

/// Number of values in a truncated operator with ranks `(v, J, f)`.
pub fn tucker_value_count(v: usize, f: usize, k: usize, frames: usize, j: usize) -> u64 {
    let (v, f, k, frames, j) = (v as u64, f as u64, k as u64, frames as u64, j as u64);
    v * k + j * j + f * frames + v * j * f
}

/// Compression ratio of a truncated operator relative to the raw tensor:
/// `(v*K + J^2 + f*F + v*J*f) / (K*F*J)`.
///
/// The per-frame transforms are not included, see [`transform_overhead`].
pub fn compression_ratio(v: usize, f: usize, k: usize, frames: usize, j: usize) -> Result<f64> {
    check_counts(&[("v", v), ("f", f), ("K", k), ("F", frames), ("J", j)])?;
    Ok(ratio_unchecked(v, f, k, frames, j))
}

#[inline]
fn ratio_unchecked(v: usize, f: usize, k: usize, frames: usize, j: usize) -> f64 {
    // Numerator and denominator are exact integers in f64 for any realistic
    // mesh, so the quotient is correctly rounded and monotone in v and f.
    tucker_value_count(v, f, k, frames, j) as f64 / (k as u64 * frames as u64 * j as u64) as f64
}

/// Ratio contributed by storing `12` values per frame: `12*F / (K*F*J)`.
pub fn transform_overhead(k: usize, frames: usize, j: usize) -> f64 {
    (TRANSFORM_VALUES_PER_FRAME * frames) as f64 / (k * frames * j) as f64
}

/// Space savings in percent, `(1 - cr) * 100`.
pub fn space_savings(cr: f64) -> f64 {
    (1.0 - cr) * 100.0
}

/// Inverse of [`space_savings`].
pub fn ratio_from_space_savings(ss: f64) -> f64 {
    1.0 - ss / 100.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    Diagonal,
    Iterative,
    /// Ranks given directly by the caller.
    Explicit,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Diagonal => "diagonal",
            Strategy::Iterative => "iterative",
            Strategy::Explicit => "explicit",
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Strategy::Diagonal => 0,
            Strategy::Iterative => 1,
            Strategy::Explicit => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Strategy::Diagonal),
            1 => Some(Strategy::Iterative),
            2 => Some(Strategy::Explicit),
            _ => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diagonal" => Ok(Strategy::Diagonal),
            "iterative" => Ok(Strategy::Iterative),
            "explicit" => Ok(Strategy::Explicit),
            other => Err(Error::invalid(format!("unknown strategy `{other}`"))),
        }
    }
}

/// Retained ranks chosen for a target compression ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompressionPlan {
    pub v: usize,
    pub f: usize,
    /// Vertices-to-frames ratio `v / f`.
    pub vtf: f64,
    pub target_cr: f64,
    /// Ratio actually reached by `(v, f)`, transforms excluded.
    pub achieved_cr: f64,
    pub strategy: Strategy,
}

impl CompressionPlan {
    /// A plan for caller-supplied ranks; the target is the achieved ratio.
    pub fn explicit(v: usize, f: usize, k: usize, frames: usize) -> Result<Self> {
        if v > k || f > frames {
            return Err(Error::invalid(format!(
                "ranks (v={v}, f={f}) exceed animation size (K={k}, F={frames})"
            )));
        }
        let cr = compression_ratio(v, f, k, frames, 3)?;
        Ok(Self::new(v, f, cr, cr, Strategy::Explicit))
    }

    fn new(v: usize, f: usize, target_cr: f64, achieved_cr: f64, strategy: Strategy) -> Self {
        Self {
            v,
            f,
            vtf: v as f64 / f as f64,
            target_cr,
            achieved_cr,
            strategy,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub v: usize,
    pub f: usize,
    pub cr: f64,
    /// `|cr - target|`.
    pub residual: f64,
}

/// Which rank is enumerated in full by [`enumerate_candidates`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DominantMode {
    /// `K > F`: one candidate per `v`.
    Vertices,
    /// `K <= F`: one candidate per `f`.
    Frames,
}

/// Rank pairs reaching a target ratio, one per value of the dominant rank,
/// sorted by that rank.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateList {
    pub pairs: Vec<Candidate>,
    pub vertices: usize,
    pub frames: usize,
    pub spatial: usize,
    pub target: f64,
    pub delta: f64,
    pub dominant: DominantMode,
}

impl CandidateList {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Best partner for a fixed `v` (or fixed `f`): minimises `|cr - target|`,
/// smallest partner on ties. `ratio` must be non-decreasing in the partner.
fn best_partner(
    max: usize,
    estimate: f64,
    ratio: impl Fn(usize) -> f64,
    target: f64,
) -> (usize, f64, f64) {
    let centre = if estimate.is_finite() {
        estimate.floor().clamp(1.0, max as f64) as usize
    } else {
        1
    };
    let lo = centre.saturating_sub(1).max(1);
    let hi = (centre + 2).min(max);
    let mut best = (0, f64::NAN, f64::INFINITY);
    for p in lo..=hi {
        let cr = ratio(p);
        let res = (cr - target).abs();
        if res < best.2 {
            best = (p, cr, res);
        }
    }
    best
}

/// Enumerates `(v, f)` pairs whose ratio lies within `delta` of `lambda`.
///
/// The dominant rank is `v` when `K > F` and `f` otherwise. For each of its
/// values the partner minimising `|cr - lambda|` is chosen (smallest on ties);
/// pairs whose best residual exceeds `delta` are dropped. An unreachable target
/// yields an empty list.
pub fn enumerate_candidates(
    k: usize,
    frames: usize,
    lambda: f64,
    delta: f64,
) -> Result<CandidateList> {
    enumerate_candidates_with_spatial(k, frames, 3, lambda, delta)
}

/// [`enumerate_candidates`] for an arbitrary spatial dimension `J`.
pub fn enumerate_candidates_with_spatial(
    k: usize,
    frames: usize,
    j: usize,
    lambda: f64,
    delta: f64,
) -> Result<CandidateList> {
    check_counts(&[("K", k), ("F", frames), ("J", j)])?;
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::invalid(format!(
            "target ratio must be positive, got {lambda}"
        )));
    }
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::invalid(format!(
            "tolerance must be non-negative, got {delta}"
        )));
    }
    let dominant = if k > frames {
        DominantMode::Vertices
    } else {
        DominantMode::Frames
    };
    let budget = lambda * (k * frames * j) as f64;
    let jj = (j * j) as f64;
    let mut pairs = Vec::new();
    match dominant {
        DominantMode::Vertices => {
            for v in 1..=k {
                // cr * K*F*J = v*K + J^2 + f*(F + v*J)
                let estimate = (budget - (v * k) as f64 - jj) / (frames + v * j) as f64;
                let (f, cr, residual) = best_partner(
                    frames,
                    estimate,
                    |f| ratio_unchecked(v, f, k, frames, j),
                    lambda,
                );
                if residual <= delta {
                    pairs.push(Candidate { v, f, cr, residual });
                }
            }
        }
        DominantMode::Frames => {
            for f in 1..=frames {
                let estimate = (budget - (f * frames) as f64 - jj) / (k + f * j) as f64;
                let (v, cr, residual) =
                    best_partner(k, estimate, |v| ratio_unchecked(v, f, k, frames, j), lambda);
                if residual <= delta {
                    pairs.push(Candidate { v, f, cr, residual });
                }
            }
        }
    }
    Ok(CandidateList {
        pairs,
        vertices: k,
        frames,
        spatial: j,
        target: lambda,
        delta,
        dominant,
    })
}

/// Picks the candidate with the most balanced relative retention,
/// minimising `|v/K - f/F|`; ties go to the smaller residual, then smaller
/// `v`, then smaller `f`.
pub fn diagonal_plan(candidates: &CandidateList) -> Result<CompressionPlan> {
    let (k, frames) = (candidates.vertices as u128, candidates.frames as u128);
    let best = candidates
        .pairs
        .iter()
        .min_by(|a, b| {
            // |v/K - f/F| * K*F, exact in integers.
            let da = (a.v as u128 * frames).abs_diff(a.f as u128 * k);
            let db = (b.v as u128 * frames).abs_diff(b.f as u128 * k);
            da.cmp(&db)
                .then(a.residual.total_cmp(&b.residual))
                .then(a.v.cmp(&b.v))
                .then(a.f.cmp(&b.f))
        })
        .ok_or(Error::EmptyCandidates)?;
    Ok(CompressionPlan::new(
        best.v,
        best.f,
        candidates.target,
        best.cr,
        Strategy::Diagonal,
    ))
}

/// Result of [`iterative_plan`].
#[derive(Clone, Debug, PartialEq)]
pub struct IterativeOutcome {
    pub plan: CompressionPlan,
    /// Error of the selected pair.
    pub error: f64,
    /// Every `(candidate index, error)` evaluated, in evaluation order.
    pub evaluations: Vec<(usize, f64)>,
}

/// Sampled recursive search for the candidate with the smallest error,
/// assuming the error is unimodal along the candidate list.
///
/// Each level evaluates up to `samples` not-yet-evaluated indices spread
/// uniformly over the current bracket (bracket ends that were already
/// evaluated are reused, not resampled), then narrows the bracket to the
/// neighbours of the best index seen inside it. The bracket starts as the
/// whole list and the search stops after `depth` refinements or once the
/// bracket is fully evaluated, so `error_fn` runs at most
/// `samples * (depth + 1)` times and never twice on the same pair. Ties are
/// resolved towards the lowest index.
pub fn iterative_plan<F>(
    candidates: &CandidateList,
    mut error_fn: F,
    samples: usize,
    depth: usize,
) -> Result<IterativeOutcome>
where
    F: FnMut(usize, usize) -> Result<f64>,
{
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if samples < 3 {
        return Err(Error::invalid(format!(
            "at least 3 samples required, got {samples}"
        )));
    }
    if depth < 1 {
        return Err(Error::invalid("refinement depth must be at least 1"));
    }
    let n = candidates.len();
    let mut errors: Vec<Option<f64>> = vec![None; n];
    let mut evaluations = Vec::new();
    let (mut lo, mut hi) = (0, n - 1);

    for _level in 0..=depth {
        let picks = sample_indices(lo, hi, samples, &errors);
        for i in picks {
            let c = &candidates.pairs[i];
            let e = error_fn(c.v, c.f).map_err(|source| Error::Evaluation {
                v: c.v,
                f: c.f,
                source: Box::new(source),
            })?;
            errors[i] = Some(e);
            evaluations.push((i, e));
        }

        // Best evaluated index within the bracket, lowest index on ties.
        let evaluated: Vec<usize> = (lo..=hi).filter(|&i| errors[i].is_some()).collect();
        let pos = argmin(evaluated.iter().map(|&i| errors[i].unwrap()));
        let new_lo = if pos == 0 {
            evaluated[0]
        } else {
            evaluated[pos - 1]
        };
        let new_hi = evaluated[(pos + 1).min(evaluated.len() - 1)];
        lo = new_lo;
        hi = new_hi;
        if (lo..=hi).all(|i| errors[i].is_some()) {
            break;
        }
    }

    let best = argmin(errors.iter().map(|e| e.unwrap_or(f64::INFINITY)));
    let c = candidates.pairs[best];
    Ok(IterativeOutcome {
        plan: CompressionPlan::new(c.v, c.f, candidates.target, c.cr, Strategy::Iterative),
        error: errors[best].expect("best index was evaluated"),
        evaluations,
    })
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if i == 0 || v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Up to `samples` unevaluated indices in `[lo, hi]`, spread uniformly over
/// the gap between the evaluated ends of the bracket.
fn sample_indices(lo: usize, hi: usize, samples: usize, errors: &[Option<f64>]) -> Vec<usize> {
    let open: Vec<usize> = (lo..=hi).filter(|&i| errors[i].is_none()).collect();
    if open.len() <= samples {
        return open;
    }
    // Place the samples evenly between the known points; an unevaluated end
    // is itself a sample position.
    let lo_known = errors[lo].is_some();
    let hi_known = errors[hi].is_some();
    let slots = samples + lo_known as usize + hi_known as usize;
    let span = (hi - lo) as f64;
    let mut picks: Vec<usize> = (0..slots)
        .map(|s| lo + (span * s as f64 / (slots - 1) as f64).round() as usize)
        .filter(|&i| errors[i].is_none())
        .collect();
    picks.dedup();
    picks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compression_ratio_arithmetic() {
        // 3030 vertices, 400 frames.
        let cr = compression_ratio(10, 10, 3030, 400, 3).unwrap();
        assert_eq!(cr, 34609.0 / 3636000.0);
        assert!((cr - 0.009518).abs() < 1e-6);
        assert_eq!(compression_ratio(1, 1, 1, 1, 3).unwrap(), 14.0 / 3.0);
        assert!(compression_ratio(0, 1, 10, 10, 3).is_err());
        assert!(compression_ratio(1, 0, 10, 10, 3).is_err());
    }

    #[test]
    fn compression_ratio_is_increasing() {
        for v in 1..20 {
            for f in 1..20 {
                let base = compression_ratio(v, f, 20, 20, 3).unwrap();
                assert!(compression_ratio(v + 1, f, 20, 20, 3).unwrap() > base);
                assert!(compression_ratio(v, f + 1, 20, 20, 3).unwrap() > base);
            }
        }
    }

    #[test]
    fn space_savings_values() {
        assert!((space_savings(0.05) - 95.0).abs() < 1e-12);
        assert_eq!(space_savings(1.0), 0.0);
        assert!((space_savings(0.012) - 98.8).abs() < 1e-12);
        assert!((ratio_from_space_savings(98.8) - 0.012).abs() < 1e-12);
    }

    fn brute_force(k: usize, frames: usize, lambda: f64, delta: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let by_v = k > frames;
        let (outer, inner) = if by_v { (k, frames) } else { (frames, k) };
        for a in 1..=outer {
            let mut best: Option<(usize, f64)> = None;
            for b in 1..=inner {
                let (v, f) = if by_v { (a, b) } else { (b, a) };
                let r = (compression_ratio(v, f, k, frames, 3).unwrap() - lambda).abs();
                if best.is_none_or(|(_, br)| r < br) {
                    best = Some((b, r));
                }
            }
            let (b, r) = best.unwrap();
            if r <= delta {
                out.push(if by_v { (a, b) } else { (b, a) });
            }
        }
        out
    }

    #[test]
    fn candidates_match_brute_force() {
        let list = enumerate_candidates(20, 10, 0.5, 0.05).unwrap();
        let got: Vec<_> = list.pairs.iter().map(|c| (c.v, c.f)).collect();
        assert_eq!(got, brute_force(20, 10, 0.5, 0.05));
        assert_eq!(list.dominant, DominantMode::Vertices);
        for (k, frames) in [(7, 31), (31, 7), (12, 12), (1, 9), (50, 3)] {
            for lambda in [0.05, 0.2, 0.37, 0.8, 1.3] {
                let list = enumerate_candidates(k, frames, lambda, 0.01).unwrap();
                let got: Vec<_> = list.pairs.iter().map(|c| (c.v, c.f)).collect();
                assert_eq!(
                    got,
                    brute_force(k, frames, lambda, 0.01),
                    "K={k} F={frames} l={lambda}"
                );
            }
        }
    }

    #[test]
    fn exact_grid_point_has_zero_residual() {
        let lambda = compression_ratio(5, 4, 40, 30, 3).unwrap();
        let list = enumerate_candidates(40, 30, lambda, 0.0).unwrap();
        assert!(list
            .pairs
            .iter()
            .any(|c| (c.v, c.f) == (5, 4) && c.residual == 0.0));
    }

    #[test]
    fn unreachable_target_is_empty() {
        let floor = compression_ratio(1, 1, 100, 50, 3).unwrap();
        let list = enumerate_candidates(100, 50, floor - 0.01, 0.002).unwrap();
        assert!(list.is_empty());
        assert!(matches!(diagonal_plan(&list), Err(Error::EmptyCandidates)));
        assert!(enumerate_candidates(100, 50, 0.0, 0.1).is_err());
        assert!(enumerate_candidates(100, 50, 0.1, -1.0).is_err());
    }

    #[test]
    fn diagonal_prefers_balanced_retention() {
        let list = enumerate_candidates(20, 10, 0.5, 0.05).unwrap();
        let plan = diagonal_plan(&list).unwrap();
        let key = |c: &Candidate| {
            (
                (c.v as f64 / 20.0 - c.f as f64 / 10.0).abs(),
                c.residual,
                c.v,
            )
        };
        let oracle = list
            .pairs
            .iter()
            .min_by(|a, b| key(a).partial_cmp(&key(b)).unwrap())
            .unwrap();
        assert_eq!((plan.v, plan.f), (oracle.v, oracle.f));
        assert_eq!(plan.vtf, plan.v as f64 / plan.f as f64);
        assert_eq!(plan.strategy, Strategy::Diagonal);

        let square = enumerate_candidates(30, 30, 0.3, 0.01).unwrap();
        let plan = diagonal_plan(&square).unwrap();
        let min_gap = square
            .pairs
            .iter()
            .map(|c| c.v.abs_diff(c.f))
            .min()
            .unwrap();
        assert_eq!(plan.v.abs_diff(plan.f), min_gap);
    }

    fn list_of(n: usize) -> CandidateList {
        CandidateList {
            pairs: (0..n)
                .map(|i| Candidate {
                    v: i + 1,
                    f: n - i,
                    cr: 0.5,
                    residual: 0.0,
                })
                .collect(),
            vertices: n,
            frames: n,
            spatial: 3,
            target: 0.5,
            delta: 0.0,
            dominant: DominantMode::Frames,
        }
    }

    #[test]
    fn iterative_finds_unimodal_minimum() {
        let list = list_of(40);
        for argmin in 0..40 {
            let profile = |v: usize, _f: usize| Ok(((v - 1) as f64 - argmin as f64).powi(2) + 1.0);
            let out = iterative_plan(&list, profile, 5, 3).unwrap();
            assert_eq!(out.plan.v - 1, argmin);
            assert!(out.evaluations.len() <= 5 * 3 + 5);
        }
    }

    #[test]
    fn iterative_constant_profile_takes_lowest_index() {
        let list = list_of(12);
        let out = iterative_plan(&list, |_, _| Ok(2.0), 5, 3).unwrap();
        assert_eq!(out.plan.v, 1);
        assert_eq!(out.error, 2.0);
    }

    #[test]
    fn iterative_short_list_evaluates_everything_once() {
        let list = list_of(4);
        let out = iterative_plan(&list, |v, _| Ok(v as f64), 5, 3).unwrap();
        let mut idx: Vec<_> = out.evaluations.iter().map(|e| e.0).collect();
        idx.sort();
        assert_eq!(idx, vec![0, 1, 2, 3]);
    }

    #[test]
    fn iterative_propagates_errors() {
        let list = list_of(10);
        let err = iterative_plan(
            &list,
            |v, f| {
                if v == 1 {
                    Err(Error::invalid("boom"))
                } else {
                    Ok((v + f) as f64)
                }
            },
            5,
            3,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Evaluation { v: 1, f: 10, .. }));
        assert!(iterative_plan(&list, |_, _| Ok(0.0), 2, 3).is_err());
    }
}
