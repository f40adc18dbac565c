//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tuckermesh::Tensor3;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, dims: [usize; 3]) -> Tensor3 {
    Tensor3::from_fn(dims, |_, _, _| rng.random_range(-1.0..1.0)).unwrap()
}

/// Singular values of `m`, descending, by one-sided Jacobi rotations.
pub fn jacobi_singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    // Work on the taller orientation so columns are the short side.
    let mut a = if m.nrows() >= m.ncols() {
        m.clone()
    } else {
        m.transpose()
    };
    let n = a.ncols();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..a.nrows() {
                    let (x, y) = (a[(i, p)], a[(i, q)]);
                    a[(i, p)] = c * x - s * y;
                    a[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Mode-`n` unfolding built by explicit index loops, columns ordered with
/// the lower remaining mode fastest.
pub fn unfold_by_loops(t: &Tensor3, mode: usize) -> DMatrix<f64> {
    let [i1, i2, i3] = t.dims();
    match mode {
        1 => DMatrix::from_fn(i1, i2 * i3, |r, c| t.get(r, c % i2, c / i2)),
        2 => DMatrix::from_fn(i2, i1 * i3, |r, c| t.get(c % i1, r, c / i1)),
        3 => DMatrix::from_fn(i3, i1 * i2, |r, c| t.get(c % i1, c / i1, r)),
        _ => unreachable!(),
    }
}

/// Largest `|<C_a, C_b>|` over distinct slices of a mode, over `||C||^2`.
pub fn slice_inner_product_defect(core: &Tensor3, mode: usize) -> f64 {
    let u = unfold_by_loops(core, mode);
    let total = u.norm_squared();
    if total == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for a in 0..u.nrows() {
        for b in (a + 1)..u.nrows() {
            worst = worst.max(u.row(a).dot(&u.row(b)).abs() / total);
        }
    }
    worst
}

/// Compression ratio from integer storage counts.
pub fn ratio_oracle(v: usize, f: usize, k: usize, frames: usize) -> f64 {
    let stored = (v * k + 9 + f * frames + 3 * v * f) as u64;
    stored as f64 / (k * frames * 3) as f64
}

/// Exhaustive scan: for every value of the dominant rank, the partner with
/// the smallest residual (smallest partner on ties), kept when within delta.
pub fn candidates_oracle(k: usize, frames: usize, lambda: f64, delta: f64) -> Vec<(usize, usize)> {
    let by_v = k > frames;
    let (outer, inner) = if by_v { (k, frames) } else { (frames, k) };
    let mut out = Vec::new();
    for a in 1..=outer {
        let mut best = (0, f64::INFINITY);
        for b in 1..=inner {
            let (v, f) = if by_v { (a, b) } else { (b, a) };
            let r = (ratio_oracle(v, f, k, frames) - lambda).abs();
            if r < best.1 {
                best = (b, r);
            }
        }
        if best.1 <= delta {
            out.push(if by_v { (a, best.0) } else { (best.0, a) });
        }
    }
    out
}

/// Brute-force Hausdorff distance over all point pairs.
pub fn hausdorff_oracle(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    let d = |p: &[f64; 3], q: &[f64; 3]| {
        ((p[0] - q[0]) * (p[0] - q[0])
            + (p[1] - q[1]) * (p[1] - q[1])
            + (p[2] - q[2]) * (p[2] - q[2]))
            .sqrt()
    };
    let directed = |x: &[[f64; 3]], y: &[[f64; 3]]| {
        x.iter()
            .map(|p| y.iter().map(|q| d(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Weakly decreasing then weakly increasing, with a unique minimum.
pub fn is_unimodal(values: &[f64]) -> bool {
    let Some(min) = values.iter().copied().reduce(f64::min) else {
        return false;
    };
    let at = values.iter().position(|&x| x == min).unwrap();
    values.iter().filter(|&&x| x == min).count() == 1
        && values[..=at].windows(2).all(|w| w[0] > w[1])
        && values[at..].windows(2).all(|w| w[0] < w[1])
}
