//! Deterministic synthetic animations on a triangulated torus.
//!
//! * `Rigid`: the base mesh under a random rotation and translation per frame.
//! * `LowRank`: a deformation with known multilinear rank `(r1, 3, r3)` once
//!   rigid motion is removed, then random rigid motion.
//! * `Bulge`: a bump travelling around the torus, no rigid motion.
//! * `Mixed`: bulge plus low-rank deformation plus rigid motion.
//!
//! Frame 0 is never moved, so it is the reference frame of the motion
//! normalisation.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix3, Quaternion, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::codec::AnimationSequence;
use crate::error::{Error, Result};
use crate::tensor::Tensor3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthKind {
    Rigid,
    LowRank,
    Bulge,
    Mixed,
}

impl SynthKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SynthKind::Rigid => "rigid",
            SynthKind::LowRank => "lowrank",
            SynthKind::Bulge => "bulge",
            SynthKind::Mixed => "mixed",
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rigid" => Ok(SynthKind::Rigid),
            "lowrank" => Ok(SynthKind::LowRank),
            "bulge" => Ok(SynthKind::Bulge),
            "mixed" => Ok(SynthKind::Mixed),
            other => Err(Error::invalid(format!("unknown synthetic kind `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthParams {
    pub kind: SynthKind,
    /// Vertex count; must factor as `a * b` with `a, b >= 3`.
    pub vertices: usize,
    pub frames: usize,
    /// Mode-1 rank of the normalised low-rank deformation.
    pub r1: usize,
    /// Mode-3 rank of the normalised low-rank deformation.
    pub r3: usize,
    /// Deformation size relative to the RMS coordinate of the base mesh.
    pub amplitude: f64,
    pub seed: u64,
}

impl SynthParams {
    pub fn new(kind: SynthKind, vertices: usize, frames: usize) -> Self {
        Self {
            kind,
            vertices,
            frames,
            r1: 4,
            r3: 3,
            amplitude: 0.1,
            seed: 0,
        }
    }
}

/// Grid size `(a, b)` with `a * b == k`, `3 <= a <= b`, `a` as large as possible.
fn torus_grid(k: usize) -> Result<(usize, usize)> {
    (3..=k.isqrt())
        .rev()
        .find(|a| k.is_multiple_of(*a) && k / a >= 3)
        .map(|a| (a, k / a))
        .ok_or_else(|| {
            Error::invalid(format!(
                "vertex count {k} is not a product a*b with a, b >= 3"
            ))
        })
}

struct Torus {
    points: DMatrix<f64>,
    normals: DMatrix<f64>,
    /// Major and minor angle per vertex.
    angles: Vec<(f64, f64)>,
    faces: Vec<Vec<usize>>,
}

fn torus(k: usize) -> Result<Torus> {
    let (a, b) = torus_grid(k)?;
    let (major, minor) = (1.0, 0.35);
    let mut points = DMatrix::zeros(k, 3);
    let mut normals = DMatrix::zeros(k, 3);
    let mut angles = Vec::with_capacity(k);
    let mut faces = Vec::with_capacity(2 * k);
    for i in 0..b {
        for j in 0..a {
            let idx = i * a + j;
            let (u, w) = (TAU * i as f64 / b as f64, TAU * j as f64 / a as f64);
            let ring = major + minor * w.cos();
            let p = [ring * u.cos(), ring * u.sin(), minor * w.sin()];
            let n = [w.cos() * u.cos(), w.cos() * u.sin(), w.sin()];
            for c in 0..3 {
                points[(idx, c)] = p[c];
                normals[(idx, c)] = n[c];
            }
            angles.push((u, w));
            let (i1, j1) = ((i + 1) % b, (j + 1) % a);
            let (p00, p01, p10, p11) = (idx, i * a + j1, i1 * a + j, i1 * a + j1);
            faces.push(vec![p00, p10, p11]);
            faces.push(vec![p00, p11, p01]);
        }
    }
    let mean = points.row_mean();
    for mut row in points.row_iter_mut() {
        row -= &mean;
    }
    Ok(Torus {
        points,
        normals,
        angles,
        faces,
    })
}

fn rms(m: &DMatrix<f64>) -> f64 {
    (m.norm_squared() / m.len() as f64).sqrt()
}

/// Orthonormal columns spanning `extra` after removing `span(fixed)`.
fn orthogonal_complement_basis(fixed: &DMatrix<f64>, extra: &DMatrix<f64>) -> DMatrix<f64> {
    let k = fixed.nrows();
    let mut all = DMatrix::zeros(k, fixed.ncols() + extra.ncols());
    all.columns_mut(0, fixed.ncols()).copy_from(fixed);
    all.columns_mut(fixed.ncols(), extra.ncols())
        .copy_from(extra);
    // Modified Gram-Schmidt, applied twice.
    let mut q: Vec<nalgebra::DVector<f64>> = Vec::new();
    for c in 0..all.ncols() {
        let mut x = all.column(c).clone_owned();
        for _ in 0..2 {
            for b in &q {
                let d = b.dot(&x);
                x.axpy(-d, b, 1.0);
            }
        }
        let n = x.norm();
        q.push(x / n);
    }
    DMatrix::from_columns(&q[fixed.ncols()..])
}

fn random_rigid(rng: &mut ChaCha8Rng) -> (Matrix3<f64>, Vector3<f64>) {
    let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let rot = UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3]));
    let t = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
    (*rot.to_rotation_matrix().matrix(), t)
}

fn check_params(p: &SynthParams) -> Result<()> {
    if p.frames == 0 {
        return Err(Error::invalid("frame count must be at least 1"));
    }
    if !p.amplitude.is_finite() || p.amplitude < 0.0 {
        return Err(Error::invalid("amplitude must be finite and non-negative"));
    }
    if matches!(p.kind, SynthKind::LowRank | SynthKind::Mixed) {
        let (r1, r3) = (p.r1, p.r3);
        let m = r1.saturating_sub(3);
        let valid = r1 >= 3
            && r3 >= 1
            && (r1 == 3) == (r3 == 1)
            && m <= 3 * (r3 - 1)
            && r3 - 1 <= 3 * m
            && r1 < p.vertices
            && r3 <= p.frames;
        if !valid {
            return Err(Error::invalid(format!(
                "ranks (r1={r1}, r3={r3}) are not realisable: need r1 >= 3, r1 == 3 exactly when r3 == 1, \
                 r1 - 3 <= 3(r3 - 1), r3 - 1 <= 3(r1 - 3), r1 < K and r3 <= F"
            )));
        }
    }
    Ok(())
}

/// Low-rank deformation `D_k` for every frame, `D_0 = 0`, orthogonal to the
/// affine span of the base mesh.
fn low_rank_deformation(base: &Torus, p: &SynthParams, rng: &mut ChaCha8Rng) -> Vec<DMatrix<f64>> {
    let (k, frames) = (p.vertices, p.frames);
    let m = p.r1 - 3;
    let c = p.r3 - 1;
    if m == 0 {
        return vec![DMatrix::zeros(k, 3); frames];
    }

    // Smooth spatial fields, then an orthonormal basis B orthogonal to [1 X0].
    let mut fields = DMatrix::zeros(k, m);
    for col in 0..m {
        let (fu, fw) = (rng.random_range(1..4) as f64, rng.random_range(0..3) as f64);
        let (pu, pw): (f64, f64) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
        for (i, &(u, w)) in base.angles.iter().enumerate() {
            fields[(i, col)] =
                (fu * u + pu).cos() * (fw * w + pw).cos() + 0.3 * ((col + 1) as f64 * u).sin();
        }
    }
    let mut fixed = DMatrix::from_element(k, 4, 1.0);
    fixed.columns_mut(1, 3).copy_from(&base.points);
    let basis = orthogonal_complement_basis(&fixed, &fields);

    // Mixing matrices Q_c (m x 3), orthonormal as vectors so mode-3 is
    // well conditioned.
    let raw = DMatrix::<f64>::from_fn(3 * m, c, |_, _| rng.sample(StandardNormal));
    let mixing = orthogonal_complement_basis(&DMatrix::zeros(3 * m, 0), &raw);

    // Temporal signals: orthonormalised powers of t, all zero at frame 0.
    let powers = DMatrix::from_fn(frames, c, |kf, i| {
        let t = if frames > 1 {
            kf as f64 / (frames - 1) as f64
        } else {
            0.0
        };
        t.powi(i as i32 + 1)
    });
    let temporal = orthogonal_complement_basis(&DMatrix::zeros(frames, 0), &powers);

    let shapes: Vec<DMatrix<f64>> = (0..c)
        .map(|i| &basis * DMatrix::from_column_slice(m, 3, mixing.column(i).as_slice()))
        .collect();
    (0..frames)
        .map(|kf| {
            let mut d = DMatrix::zeros(k, 3);
            for (i, s) in shapes.iter().enumerate() {
                d += s * temporal[(kf, i)];
            }
            d
        })
        .collect()
}

fn bulge_deformation(base: &Torus, frames: usize) -> Vec<DMatrix<f64>> {
    let width = 0.6f64;
    (0..frames)
        .map(|kf| {
            let centre = if frames > 1 {
                TAU * kf as f64 / frames as f64
            } else {
                0.0
            };
            let mut d = DMatrix::zeros(base.points.nrows(), 3);
            for (i, &(u, _)) in base.angles.iter().enumerate() {
                let du = (u - centre + TAU / 2.0).rem_euclid(TAU) - TAU / 2.0;
                let g = (-du * du / (2.0 * width * width)).exp();
                for c in 0..3 {
                    d[(i, c)] = g * base.normals[(i, c)];
                }
            }
            d
        })
        .collect()
}

fn scale_to(deformations: &mut [DMatrix<f64>], target_rms: f64) {
    let energy: f64 = deformations.iter().map(|d| d.norm_squared()).sum();
    let count: usize = deformations.iter().map(|d| d.len()).sum();
    let current = (energy / count as f64).sqrt();
    if current > 0.0 {
        for d in deformations {
            *d *= target_rms / current;
        }
    }
}

/// Generates the animation described by `p`; identical parameters give
/// bitwise-identical output.
pub fn synthesize(p: &SynthParams) -> Result<AnimationSequence> {
    check_params(p)?;
    let base = torus(p.vertices)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let (k, frames) = (p.vertices, p.frames);
    let scale = rms(&base.points);

    let mut frames_data: Vec<DMatrix<f64>> = vec![base.points.clone(); frames];
    let mut add = |defs: Vec<DMatrix<f64>>| {
        for (x, d) in frames_data.iter_mut().zip(defs) {
            *x += d;
        }
    };
    if matches!(p.kind, SynthKind::LowRank | SynthKind::Mixed) {
        let mut d = low_rank_deformation(&base, p, &mut rng);
        scale_to(&mut d, p.amplitude * scale);
        add(d);
    }
    if matches!(p.kind, SynthKind::Bulge | SynthKind::Mixed) {
        let mut d = bulge_deformation(&base, frames);
        scale_to(&mut d, p.amplitude * scale);
        add(d);
    }
    if matches!(
        p.kind,
        SynthKind::Rigid | SynthKind::LowRank | SynthKind::Mixed
    ) {
        for x in frames_data.iter_mut().skip(1) {
            let (rot, t) = random_rigid(&mut rng);
            let moved = &*x * rot.transpose();
            *x = DMatrix::from_fn(k, 3, |i, c| moved[(i, c)] + t[c]);
        }
    }

    let mut data = Vec::with_capacity(k * 3 * frames);
    for x in &frames_data {
        data.extend_from_slice(x.as_slice());
    }
    let name = format!("{}-{}", p.kind, p.seed);
    AnimationSequence::with_faces(name, Tensor3::from_vec([k, 3, frames], data)?, base.faces)
}
