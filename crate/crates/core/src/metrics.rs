//! Distortion between an animation and its reconstruction.
//!
//! Per-frame values are aggregated over the animation as follows: MSE and
//! MSDM by the mean over frames, Hausdorff by the maximum. The aggregation
//! used is recorded in every [`DistortionReport`].

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::Topology;
use crate::tensor::Tensor3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Mse,
    Hausdorff,
    Msdm,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Mse, Metric::Hausdorff, Metric::Msdm];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Mse => "mse",
            Metric::Hausdorff => "hausdorff",
            Metric::Msdm => "msdm",
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Metric::Mse => 0,
            Metric::Hausdorff => 1,
            Metric::Msdm => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.tag() == tag)
    }

    pub fn aggregation(self) -> Aggregation {
        match self {
            Metric::Hausdorff => Aggregation::Max,
            Metric::Mse | Metric::Msdm => Aggregation::Mean,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown metric `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregation {
    Mean,
    Max,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::Mean => "mean",
            Aggregation::Max => "max",
        }
    }

    /// Aggregates in ascending frame order.
    pub fn apply(self, values: &[f64]) -> f64 {
        match self {
            Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregation::Max => values.iter().copied().fold(0.0, f64::max),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistortionReport {
    pub metric: Metric,
    pub per_frame: Vec<f64>,
    pub aggregate: f64,
    pub aggregation: Aggregation,
    /// Vertices left out of the measure because of degenerate geometry.
    pub excluded_vertices: Vec<usize>,
}

impl DistortionReport {
    fn new(metric: Metric, per_frame: Vec<f64>) -> Self {
        let aggregation = metric.aggregation();
        Self {
            metric,
            aggregate: aggregation.apply(&per_frame),
            per_frame,
            aggregation,
            excluded_vertices: Vec::new(),
        }
    }

    /// Appends `metric,frame,value` rows followed by the aggregate row.
    pub fn write_rows<W: Write>(&self, out: &mut csv::Writer<W>) -> Result<()> {
        for (k, v) in self.per_frame.iter().enumerate() {
            out.write_record([self.metric.as_str(), &k.to_string(), &format_value(*v)])?;
        }
        out.write_record([
            self.metric.as_str(),
            self.aggregation.as_str(),
            &format_value(self.aggregate),
        ])?;
        Ok(())
    }
}

/// Header of the CSV produced by [`write_reports`].
pub const REPORT_CSV_HEADER: [&str; 3] = ["metric", "frame", "value"];

/// Shortest representation that parses back to the same value.
pub(crate) fn format_value(v: f64) -> String {
    format!("{v:e}")
}

pub fn write_reports<W: Write>(reports: &[DistortionReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_CSV_HEADER)?;
    for r in reports {
        r.write_rows(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-frame mean squared coordinate error, mean over frames.
pub fn mse(original: &Tensor3, reconstructed: &Tensor3) -> Result<DistortionReport> {
    original.check_same_dims(reconstructed, "mse")?;
    let n = (original.dims()[0] * original.dims()[1]) as f64;
    let per_frame = original
        .frames()
        .zip(reconstructed.frames())
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n)
        .collect();
    Ok(DistortionReport::new(Metric::Mse, per_frame))
}

/// Vertex positions of a column-major `K x 3` frame.
pub fn frame_points(frame: &[f64]) -> Vec<[f64; 3]> {
    let k = frame.len() / 3;
    (0..k)
        .map(|i| [frame[i], frame[k + i], frame[2 * k + i]])
        .collect()
}

#[inline]
fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let (dx, dy, dz) = (a[0] - b[0], a[1] - b[1], a[2] - b[2]);
    dx * dx + dy * dy + dz * dz
}

/// Squared directed Hausdorff distance `max_a min_b |a - b|^2`.
///
/// The inner scan stops as soon as a point closer than the running maximum
/// is found, since `a` can then no longer raise it.
fn directed_hausdorff2(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    let mut cmax = 0.0f64;
    for p in a {
        let mut cmin = f64::INFINITY;
        for q in b {
            let d = dist2(p, q);
            if d < cmax {
                cmin = d;
                break;
            }
            if d < cmin {
                cmin = d;
            }
        }
        if cmin > cmax {
            cmax = cmin;
        }
    }
    cmax
}

/// Symmetric Hausdorff distance between two vertex sets.
pub fn hausdorff(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    Ok(directed_hausdorff2(a, b)
        .max(directed_hausdorff2(b, a))
        .sqrt())
}

/// Hausdorff distance per frame, maximum over frames.
pub fn hausdorff_report(original: &Tensor3, reconstructed: &Tensor3) -> Result<DistortionReport> {
    original.check_same_dims(reconstructed, "hausdorff")?;
    let frames: Vec<_> = original.frames().zip(reconstructed.frames()).collect();
    let per_frame = frames
        .par_iter()
        .map(|(a, b)| hausdorff(&frame_points(a), &frame_points(b)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DistortionReport::new(Metric::Hausdorff, per_frame))
}

/// Parameters of the curvature-statistics structural distortion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MsdmParams {
    /// Window radius in edge hops.
    pub hops: usize,
    /// Minkowski exponent of the window pooling.
    pub exponent: f64,
    /// Weights of the mean, deviation and structure terms.
    pub weights: [f64; 3],
}

impl Default for MsdmParams {
    fn default() -> Self {
        Self {
            hops: 2,
            exponent: 3.0,
            weights: [0.4, 0.4, 0.2],
        }
    }
}

/// Precomputed local windows for repeated MSDM evaluation on one topology.
#[derive(Clone, Debug)]
pub struct MsdmContext {
    topology: Topology,
    params: MsdmParams,
    window_offsets: Vec<usize>,
    window_members: Vec<u32>,
}

/// MSDM of one frame pair.
#[derive(Clone, Debug, PartialEq)]
pub struct MsdmFrame {
    pub value: f64,
    /// Window centres excluded because of degenerate geometry.
    pub excluded: Vec<usize>,
}

impl MsdmContext {
    pub fn new(topology: Topology, params: MsdmParams) -> Result<Self> {
        if params.exponent.is_nan() || params.exponent < 1.0 {
            return Err(Error::invalid("msdm exponent must be at least 1"));
        }
        Ok(Self::build(topology, params))
    }

    /// Context with [`MsdmParams::default`].
    pub fn with_defaults(topology: Topology) -> Self {
        Self::build(topology, MsdmParams::default())
    }

    fn build(topology: Topology, params: MsdmParams) -> Self {
        let mut window_offsets = vec![0];
        let mut window_members = Vec::new();
        for v in 0..topology.vertex_count() {
            window_members.extend(topology.ring(v, params.hops).into_iter().map(|u| u as u32));
            window_offsets.push(window_members.len());
        }
        Self {
            topology,
            params,
            window_offsets,
            window_members,
        }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    fn window(&self, v: usize) -> &[u32] {
        &self.window_members[self.window_offsets[v]..self.window_offsets[v + 1]]
    }

    /// Discrete mean curvature per vertex, `None` where undefined: the
    /// umbrella vector length relative to the mean squared edge length.
    fn curvature(&self, points: &[[f64; 3]], floor: f64) -> Vec<Option<f64>> {
        (0..points.len())
            .map(|v| {
                let deg = self.topology.degree(v);
                if deg == 0 {
                    return None;
                }
                let p = &points[v];
                let mut mean = [0.0; 3];
                let mut e2 = 0.0;
                for n in self.topology.neighbours(v) {
                    let q = &points[n];
                    for c in 0..3 {
                        mean[c] += q[c];
                    }
                    e2 += dist2(p, q);
                }
                let d = deg as f64;
                e2 /= d;
                if e2.is_nan() || e2 <= floor {
                    return None;
                }
                let lap = [mean[0] / d - p[0], mean[1] / d - p[1], mean[2] / d - p[2]];
                Some(2.0 * dist2(&lap, &[0.0; 3]).sqrt() / e2)
            })
            .collect()
    }

    /// Structural distortion between two frames sharing this topology.
    pub fn frame(&self, original: &[[f64; 3]], reconstructed: &[[f64; 3]]) -> Result<MsdmFrame> {
        let k = self.topology.vertex_count();
        if original.len() != k || reconstructed.len() != k {
            return Err(Error::TopologyMismatch(format!(
                "msdm topology has {k} vertices, frames have {} and {}",
                original.len(),
                reconstructed.len()
            )));
        }
        let scale = mean_edge_length2(&self.topology, original);
        let floor = scale * 1e-18;
        let cx = self.curvature(original, floor);
        let cy = self.curvature(reconstructed, floor);
        let mean_curv = {
            let valid: Vec<f64> = cx.iter().flatten().copied().collect();
            if valid.is_empty() {
                0.0
            } else {
                valid.iter().sum::<f64>() / valid.len() as f64
            }
        };
        let eps = 1e-9 * mean_curv.max(f64::MIN_POSITIVE);

        let [wl, wc, ws] = self.params.weights;
        let a = self.params.exponent;
        let mut excluded = Vec::new();
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for v in 0..k {
            if cx[v].is_none() || cy[v].is_none() {
                excluded.push(v);
                continue;
            }
            xs.clear();
            ys.clear();
            for &u in self.window(v) {
                if let (Some(x), Some(y)) = (cx[u as usize], cy[u as usize]) {
                    xs.push(x);
                    ys.push(y);
                }
            }
            let local = window_distortion(&xs, &ys, eps);
            sum += wl * local[0].powf(a) + wc * local[1].powf(a) + ws * local[2].powf(a);
            count += 1;
        }
        let value = if count == 0 {
            0.0
        } else {
            (sum / count as f64).powf(1.0 / a).clamp(0.0, 1.0)
        };
        Ok(MsdmFrame { value, excluded })
    }

    /// Per-frame MSDM, mean over frames.
    pub fn report(&self, original: &Tensor3, reconstructed: &Tensor3) -> Result<DistortionReport> {
        original.check_same_dims(reconstructed, "msdm")?;
        let frames: Vec<_> = original.frames().zip(reconstructed.frames()).collect();
        let results = frames
            .par_iter()
            .map(|(a, b)| self.frame(&frame_points(a), &frame_points(b)))
            .collect::<Result<Vec<_>>>()?;
        let mut excluded: Vec<usize> = results
            .iter()
            .flat_map(|r| r.excluded.iter().copied())
            .collect();
        excluded.sort_unstable();
        excluded.dedup();
        let mut report =
            DistortionReport::new(Metric::Msdm, results.into_iter().map(|r| r.value).collect());
        report.excluded_vertices = excluded;
        Ok(report)
    }
}

fn mean_edge_length2(topology: &Topology, points: &[[f64; 3]]) -> f64 {
    let edges = topology.edges();
    if edges.is_empty() {
        return 0.0;
    }
    edges
        .iter()
        .map(|e| dist2(&points[e.a()], &points[e.b()]))
        .sum::<f64>()
        / edges.len() as f64
}

/// Mean, deviation and structure differences of two curvature windows.
fn window_distortion(x: &[f64], y: &[f64], eps: f64) -> [f64; 3] {
    if x == y {
        return [0.0; 3];
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
        cxy += (a - mx) * (b - my);
    }
    let (sx, sy, sxy) = ((vx / n).sqrt(), (vy / n).sqrt(), cxy / n);

    let relative = |p: f64, q: f64| {
        let m = p.max(q);
        if m <= eps {
            0.0
        } else {
            (p - q).abs() / m
        }
    };
    let structure = match (sx <= eps, sy <= eps) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 1.0,
        (false, false) => ((sx * sy - sxy).abs() / (sx * sy)).min(1.0),
    };
    [relative(mx, my), relative(sx, sy), structure]
}

/// Convenience wrapper building a one-off [`MsdmContext`].
pub fn msdm(topology: &Topology, original: &[[f64; 3]], reconstructed: &[[f64; 3]]) -> Result<f64> {
    let ctx = MsdmContext::with_defaults(topology.clone());
    Ok(ctx.frame(original, reconstructed)?.value)
}

/// Computes `metric` between two animations; MSDM needs the edge topology.
pub fn evaluate(
    metric: Metric,
    original: &Tensor3,
    reconstructed: &Tensor3,
    msdm: Option<&MsdmContext>,
) -> Result<DistortionReport> {
    match metric {
        Metric::Mse => mse(original, reconstructed),
        Metric::Hausdorff => hausdorff_report(original, reconstructed),
        Metric::Msdm => match msdm {
            Some(ctx) => ctx.report(original, reconstructed),
            None => Err(Error::TopologyMismatch(
                "msdm requires the mesh edge set".into(),
            )),
        },
    }
}
