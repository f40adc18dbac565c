//! Per-frame global affine motion: estimation, removal and restoration.
//!
//! Frame `i` is modelled as an affine image of frame 0, `v_i ~ A_i v_0 + b_i`.
//! The 3x4 matrix `[A_i | b_i]` is fitted by ordinary least squares over all
//! vertices, directly against frame 0. Normalised frames are
//! `x = A_i^{-1} (v - b_i)`, so every normalised frame lives in the coordinates
//! of frame 0 and frame 0 itself is left untouched.

use log::warn;
use nalgebra::{DMatrix, Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

/// Largest accepted condition number of the linear block.
pub const MAX_CONDITION: f64 = 1e10;

/// Relative singular-value floor below which frame-0 geometry is treated as
/// flat (coplanar or collinear vertices).
const DEGENERATE_GEOMETRY: f64 = 1e-9;

/// Affine map `v -> A v + b` on vertex positions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameTransform {
    linear: Matrix3<f64>,
    translation: Vector3<f64>,
    inverse: Matrix3<f64>,
}

fn condition_number(a: &Matrix3<f64>) -> f64 {
    let s = a.singular_values();
    let (max, min) = (s.max(), s.min());
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

impl FrameTransform {
    pub fn identity() -> Self {
        Self {
            linear: Matrix3::identity(),
            translation: Vector3::zeros(),
            inverse: Matrix3::identity(),
        }
    }

    pub fn translation_only(b: Vector3<f64>) -> Self {
        Self {
            translation: b,
            ..Self::identity()
        }
    }

    /// Builds `[A | b]`; `None` if an entry is non-finite or `A` is singular
    /// or worse conditioned than [`MAX_CONDITION`].
    pub fn new(linear: Matrix3<f64>, translation: Vector3<f64>) -> Option<Self> {
        if !linear
            .iter()
            .chain(translation.iter())
            .all(|x| x.is_finite())
        {
            return None;
        }
        if condition_number(&linear) > MAX_CONDITION {
            return None;
        }
        let inverse = linear.try_inverse()?;
        Some(Self {
            linear,
            translation,
            inverse,
        })
    }

    /// From the 12 entries of the 3x4 matrix in row-major order.
    pub fn from_row_major(m: &[f64; 12]) -> Option<Self> {
        let linear = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
        let translation = Vector3::new(m[3], m[7], m[11]);
        Self::new(linear, translation)
    }

    /// The 3x4 matrix `[A | b]` in row-major order.
    pub fn to_row_major(&self) -> [f64; 12] {
        let a = &self.linear;
        let b = &self.translation;
        [
            a[(0, 0)],
            a[(0, 1)],
            a[(0, 2)],
            b[0],
            a[(1, 0)],
            a[(1, 1)],
            a[(1, 2)],
            b[1],
            a[(2, 0)],
            a[(2, 1)],
            a[(2, 2)],
            b[2],
        ]
    }

    pub fn linear(&self) -> &Matrix3<f64> {
        &self.linear
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn condition_number(&self) -> f64 {
        condition_number(&self.linear)
    }

    pub fn is_identity(&self) -> bool {
        self.linear == Matrix3::identity() && self.translation == Vector3::zeros()
    }

    #[inline]
    pub fn apply(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.linear * p + self.translation
    }

    #[inline]
    pub fn apply_inverse(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.inverse * (p - self.translation)
    }
}

/// One transform per frame, frame 0 being the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformSequence {
    transforms: Vec<FrameTransform>,
}

impl TransformSequence {
    pub fn new(transforms: Vec<FrameTransform>) -> Result<Self> {
        match transforms.first() {
            None => return Err(Error::invalid("transform sequence is empty")),
            Some(t) if !t.is_identity() => {
                return Err(Error::invalid("first transform must be the identity"))
            }
            _ => {}
        }
        Ok(Self { transforms })
    }

    /// Parses `F` row-major 3x4 matrices, reporting the first frame whose
    /// linear block is not safely invertible.
    pub fn from_row_major(values: &[[f64; 12]]) -> Result<Self> {
        let transforms = values
            .iter()
            .enumerate()
            .map(|(frame, m)| {
                FrameTransform::from_row_major(m).ok_or_else(|| {
                    let linear =
                        Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
                    Error::SingularTransform {
                        frame,
                        condition: condition_number(&linear),
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(transforms)
    }

    pub fn identity(frames: usize) -> Self {
        Self {
            transforms: vec![FrameTransform::identity(); frames.max(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.transforms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transforms.is_empty()
    }

    pub fn get(&self, frame: usize) -> Option<&FrameTransform> {
        self.transforms.get(frame)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, FrameTransform> {
        self.transforms.iter()
    }
}

/// Output of [`estimate_rigid_motion`].
#[derive(Clone, Debug)]
pub struct RigidMotion {
    pub normalized: Tensor3,
    pub transforms: TransformSequence,
    /// Frames whose fit fell back to a pure translation.
    pub degenerate_frames: Vec<usize>,
}

fn check_animation_dims(t: &Tensor3) -> Result<()> {
    if t.dims()[1] != 3 {
        return Err(Error::DimensionMismatch {
            context: "animation tensor coordinates",
            expected: vec![3],
            actual: vec![t.dims()[1]],
        });
    }
    Ok(())
}

fn vertex(frame: &[f64], k: usize, i: usize) -> Vector3<f64> {
    Vector3::new(frame[i], frame[k + i], frame[2 * k + i])
}

fn centroid(frame: &[f64], k: usize) -> Vector3<f64> {
    (0..k).map(|i| vertex(frame, k, i)).sum::<Vector3<f64>>() / k as f64
}

/// Least-squares solver for `[v0 1] M = V_i`, shared by all frames.
struct AffineFitter {
    /// `4 x K` pseudo-inverse of the normalised homogeneous frame-0 matrix.
    pinv: DMatrix<f64>,
    center: Vector3<f64>,
    scale: f64,
}

impl AffineFitter {
    fn new(frame0: &[f64], k: usize) -> Option<Self> {
        if k < 4 {
            return None;
        }
        let center = centroid(frame0, k);
        let scale = ((0..k)
            .map(|i| (vertex(frame0, k, i) - center).norm_squared())
            .sum::<f64>()
            / k as f64)
            .sqrt();
        if scale.is_nan() || scale <= 0.0 {
            return None;
        }
        let h = DMatrix::from_fn(k, 4, |i, c| {
            if c == 3 {
                1.0
            } else {
                (frame0[c * k + i] - center[c]) / scale
            }
        });
        let svd = h.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin <= DEGENERATE_GEOMETRY * smax {
            return None;
        }
        let pinv = svd.pseudo_inverse(0.0).ok()?;
        Some(Self {
            pinv,
            center,
            scale,
        })
    }

    fn fit(&self, frame: &[f64], k: usize) -> Option<FrameTransform> {
        let target = DMatrix::from_column_slice(k, 3, frame);
        let m = &self.pinv * target;
        // Rows 0..3 hold A_s^T, row 3 holds b' for the normalised source.
        let a_s = Matrix3::from_fn(|r, c| m[(c, r)]);
        let b_s = Vector3::new(m[(3, 0)], m[(3, 1)], m[(3, 2)]);
        let linear = a_s / self.scale;
        let translation = b_s - linear * self.center;
        FrameTransform::new(linear, translation)
    }
}

/// Fits an affine transform from frame 0 to every frame of a `K x 3 x F`
/// animation and maps all frames back into frame-0 coordinates.
///
/// Flat frame-0 geometry (fewer than four affinely independent vertices) or a
/// singular fitted transform does not abort: the affected frames fall back to
/// the translation between centroids and are listed in
/// [`RigidMotion::degenerate_frames`].
pub fn estimate_rigid_motion(t: &Tensor3) -> Result<RigidMotion> {
    check_animation_dims(t)?;
    let [k, _, f] = t.dims();
    let frame0 = t.frame(0);
    let fitter = AffineFitter::new(frame0, k);
    let c0 = centroid(frame0, k);

    let fitted: Vec<(FrameTransform, bool)> = (0..f)
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                return (FrameTransform::identity(), false);
            }
            let frame = t.frame(i);
            match fitter.as_ref().and_then(|ft| ft.fit(frame, k)) {
                Some(tr) => (tr, false),
                None => (
                    FrameTransform::translation_only(centroid(frame, k) - c0),
                    true,
                ),
            }
        })
        .collect();

    let degenerate_frames: Vec<usize> = fitted
        .iter()
        .enumerate()
        .filter_map(|(i, (_, d))| d.then_some(i))
        .collect();
    if !degenerate_frames.is_empty() {
        warn!(
            "affine fit degenerate for {} frame(s); using translation only",
            degenerate_frames.len()
        );
    }

    let transforms = TransformSequence::new(fitted.into_iter().map(|(t, _)| t).collect())?;
    let normalized = map_frames(t, &transforms, |tr, p| tr.apply_inverse(p));
    Ok(RigidMotion {
        normalized,
        transforms,
        degenerate_frames,
    })
}

/// Maps normalised frames back to animation coordinates, `v = A_i x + b_i`.
pub fn apply_inverse_transforms(x: &Tensor3, transforms: &TransformSequence) -> Result<Tensor3> {
    check_animation_dims(x)?;
    if transforms.len() != x.dims()[2] {
        return Err(Error::DimensionMismatch {
            context: "transform count",
            expected: vec![x.dims()[2]],
            actual: vec![transforms.len()],
        });
    }
    Ok(map_frames(x, transforms, |tr, p| tr.apply(p)))
}

fn map_frames(
    t: &Tensor3,
    transforms: &TransformSequence,
    op: impl Fn(&FrameTransform, Vector3<f64>) -> Vector3<f64> + Sync,
) -> Tensor3 {
    let [k, _, _] = t.dims();
    let mut data = vec![0.0; t.len()];
    data.par_chunks_exact_mut(3 * k)
        .zip(transforms.transforms.par_iter())
        .enumerate()
        .for_each(|(i, (out, tr))| {
            let frame = t.frame(i);
            if tr.is_identity() {
                out.copy_from_slice(frame);
                return;
            }
            for v in 0..k {
                let p = op(tr, vertex(frame, k, v));
                out[v] = p[0];
                out[k + v] = p[1];
                out[2 * k + v] = p[2];
            }
        });
    Tensor3::from_parts(t.dims(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Unit};

    fn cloud(k: usize) -> Vec<Vector3<f64>> {
        (0..k)
            .map(|i| {
                let t = i as f64;
                Vector3::new(
                    (t * 0.7).sin() * 2.0,
                    (t * 1.3).cos(),
                    (t * 0.37).sin() + t * 0.01,
                )
            })
            .collect()
    }

    fn animation(frames: &[Vec<Vector3<f64>>]) -> Tensor3 {
        let k = frames[0].len();
        Tensor3::from_fn([k, 3, frames.len()], |i, j, f| frames[f][i][j]).unwrap()
    }

    fn rotation(axis: [f64; 3], angle: f64) -> Matrix3<f64> {
        Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::from(axis)), angle).into_inner()
    }

    #[test]
    fn static_animation_gives_identity() {
        let base = cloud(20);
        let t = animation(&[base.clone(), base.clone(), base]);
        let rm = estimate_rigid_motion(&t).unwrap();
        for tr in rm.transforms.iter() {
            assert!((tr.linear() - Matrix3::identity()).norm() < 1e-12);
            assert!(tr.translation().norm() < 1e-12);
        }
        assert!(t.relative_error(&rm.normalized).unwrap() < 1e-12);
        assert!(rm.degenerate_frames.is_empty());
    }

    #[test]
    fn recovers_known_rigid_motion() {
        let base = cloud(30);
        let motions = [
            (rotation([0.0, 0.0, 1.0], 0.4), Vector3::new(1.0, -2.0, 0.5)),
            (rotation([1.0, 1.0, 0.0], -1.1), Vector3::new(0.0, 3.0, 7.0)),
        ];
        let mut frames = vec![base.clone()];
        for (q, b) in &motions {
            frames.push(base.iter().map(|p| q * p + b).collect());
        }
        let t = animation(&frames);
        let rm = estimate_rigid_motion(&t).unwrap();
        for (i, (q, b)) in motions.iter().enumerate() {
            let tr = rm.transforms.get(i + 1).unwrap();
            assert!((tr.linear() - q).norm() < 1e-8);
            assert!((tr.translation() - b).norm() < 1e-8);
        }
        let x0 = rm.normalized.frame(0).to_vec();
        for f in 1..3 {
            let diff: f64 = rm
                .normalized
                .frame(f)
                .iter()
                .zip(&x0)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(diff < 1e-8);
        }
        let back = apply_inverse_transforms(&rm.normalized, &rm.transforms).unwrap();
        assert!(t.relative_error(&back).unwrap() <= 1e-9);
    }

    #[test]
    fn pure_translation_round_trip() {
        let x = animation(&[cloud(6), cloud(6)]);
        let seq = TransformSequence::new(vec![
            FrameTransform::identity(),
            FrameTransform::translation_only(Vector3::new(1.0, 2.0, 3.0)),
        ])
        .unwrap();
        let moved = apply_inverse_transforms(&x, &seq).unwrap();
        for i in 0..6 {
            assert_eq!(moved.get(i, 0, 1), x.get(i, 0, 1) + 1.0);
            assert_eq!(moved.get(i, 2, 1), x.get(i, 2, 1) + 3.0);
        }
        let identity = TransformSequence::identity(2);
        assert_eq!(apply_inverse_transforms(&x, &identity).unwrap(), x);
    }

    #[test]
    fn coplanar_geometry_falls_back_to_translation() {
        let base: Vec<Vector3<f64>> = (0..10)
            .map(|i| Vector3::new(i as f64, (i * i) as f64 * 0.1, 0.0))
            .collect();
        let shifted: Vec<_> = base
            .iter()
            .map(|p| p + Vector3::new(0.5, 0.0, 1.0))
            .collect();
        let t = animation(&[base, shifted]);
        let rm = estimate_rigid_motion(&t).unwrap();
        assert_eq!(rm.degenerate_frames, vec![1]);
        let tr = rm.transforms.get(1).unwrap();
        assert!((tr.translation() - Vector3::new(0.5, 0.0, 1.0)).norm() < 1e-12);
        let back = apply_inverse_transforms(&rm.normalized, &rm.transforms).unwrap();
        assert!(t.relative_error(&back).unwrap() < 1e-12);
    }

    #[test]
    fn singular_stored_transform_is_reported() {
        let mut m = FrameTransform::identity().to_row_major();
        let ok = m;
        m[10] = 0.0;
        let err = TransformSequence::from_row_major(&[ok, ok, m]).unwrap_err();
        assert!(matches!(err, Error::SingularTransform { frame: 2, .. }));
        assert!(TransformSequence::from_row_major(&[m]).is_err());
    }

    #[test]
    fn row_major_round_trip() {
        let tr = FrameTransform::new(
            rotation([0.2, 1.0, 0.3], 0.8) * 1.5,
            Vector3::new(1.0, 2.0, 3.0),
        )
        .unwrap();
        let back = FrameTransform::from_row_major(&tr.to_row_major()).unwrap();
        assert_eq!(back.to_row_major(), tr.to_row_major());
    }
}
