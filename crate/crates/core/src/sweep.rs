//! Rate-distortion sweeps over a grid of space-savings targets.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::codec::{AnimationSequence, EncodeOptions, PreparedAnimation};
use crate::error::{Error, Result};
use crate::metrics::{format_value, Metric};
use crate::pca::{pca_compression_ratio, pca_reconstruct, PcaDecomposition};
use crate::rigid::apply_inverse_transforms;
use crate::search::{
    ratio_from_space_savings, space_savings, Strategy, DEFAULT_DELTA, DEFAULT_DEPTH,
    DEFAULT_SAMPLES,
};

/// First line of every sweep CSV.
pub const SWEEP_SCHEMA: &str = "# tuckermesh-sweep v1";
pub const SWEEP_CSV_HEADER: [&str; 10] = [
    "asset",
    "method",
    "strategy",
    "target_ss",
    "achieved_ss",
    "v",
    "f",
    "metric",
    "value",
    "error",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Hosvd,
    Pca,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Hosvd => "hosvd",
            Method::Pca => "pca",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hosvd" => Ok(Method::Hosvd),
            "pca" => Ok(Method::Pca),
            other => Err(Error::invalid(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    /// Target space savings in percent, strictly increasing, in `[0, 100)`.
    pub ss_grid: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub metrics: Vec<Metric>,
    pub methods: Vec<Method>,
    pub delta: f64,
    pub samples: usize,
    pub depth: usize,
}

impl SweepSpec {
    pub fn new(ss_grid: Vec<f64>) -> Self {
        Self {
            ss_grid,
            strategies: vec![Strategy::Diagonal, Strategy::Iterative],
            metrics: vec![Metric::Mse],
            methods: vec![Method::Hosvd, Method::Pca],
            delta: DEFAULT_DELTA,
            samples: DEFAULT_SAMPLES,
            depth: DEFAULT_DEPTH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ss_grid.is_empty() {
            return Err(Error::invalid("space-savings grid is empty"));
        }
        if let Some(ss) = self.ss_grid.iter().find(|s| !(0.0..100.0).contains(*s)) {
            return Err(Error::invalid(format!(
                "space savings {ss} outside [0, 100)"
            )));
        }
        if self.ss_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "space-savings grid must be strictly increasing",
            ));
        }
        if self.metrics.is_empty() || self.methods.is_empty() {
            return Err(Error::invalid(
                "sweep needs at least one metric and one method",
            ));
        }
        if self.methods.contains(&Method::Hosvd) && self.strategies.is_empty() {
            return Err(Error::invalid("hosvd sweep needs at least one strategy"));
        }
        if self.strategies.contains(&Strategy::Explicit) {
            return Err(Error::invalid("explicit ranks cannot be swept"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub asset: String,
    pub method: Method,
    /// `None` for PCA.
    pub strategy: Option<Strategy>,
    pub target_ss: f64,
    pub achieved_ss: Option<f64>,
    /// Mode-1 rank; `None` for PCA.
    pub v: Option<usize>,
    /// Mode-3 rank, or the PCA component count.
    pub f: Option<usize>,
    pub metric: Metric,
    pub value: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(
        asset: &str,
        method: Method,
        strategy: Option<Strategy>,
        ss: f64,
        metric: Metric,
        e: &Error,
    ) -> Self {
        Self {
            asset: asset.to_owned(),
            method,
            strategy,
            target_ss: ss,
            achieved_ss: None,
            v: None,
            f: None,
            metric,
            value: None,
            error: Some(e.to_string()),
        }
    }

    fn sort_key(&self) -> (&str, Method, Option<Strategy>, f64, Metric) {
        (
            &self.asset,
            self.method,
            self.strategy,
            self.target_ss,
            self.metric,
        )
    }
}

fn strategy_rank(s: Option<Strategy>) -> u8 {
    s.map_or(0, |s| s.tag() + 1)
}

/// Largest component count whose ratio does not exceed `lambda`.
pub fn pca_components_for(lambda: f64, k: usize, frames: usize) -> Option<usize> {
    let max = frames.min(3 * k);
    (1..=max)
        .rev()
        .find(|&p| pca_compression_ratio(p, k, frames, 3).is_ok_and(|cr| cr <= lambda))
}

fn hosvd_rows(prepared: &PreparedAnimation, spec: &SweepSpec, ss: f64) -> Vec<SweepRow> {
    let asset = &prepared.animation().name;
    let lambda = ratio_from_space_savings(ss);
    let mut rows = Vec::new();
    let list = match prepared.candidates(lambda, spec.delta) {
        Ok(list) => list,
        Err(e) => {
            for &s in &spec.strategies {
                for &m in &spec.metrics {
                    rows.push(SweepRow::failed(asset, Method::Hosvd, Some(s), ss, m, &e));
                }
            }
            return rows;
        }
    };
    for &strategy in &spec.strategies {
        for &metric in &spec.metrics {
            let opts = EncodeOptions {
                strategy,
                metric,
                delta: spec.delta,
                samples: spec.samples,
                depth: spec.depth,
                ..EncodeOptions::new(lambda)
            };
            let result = prepared.plan_from(&list, &opts).and_then(|out| {
                let value = match out.error {
                    Some(e) => e,
                    None => prepared.error(out.plan.v, out.plan.f, metric)?,
                };
                Ok((out.plan, value))
            });
            rows.push(match result {
                Ok((plan, value)) => SweepRow {
                    asset: asset.clone(),
                    method: Method::Hosvd,
                    strategy: Some(strategy),
                    target_ss: ss,
                    achieved_ss: Some(space_savings(plan.achieved_cr)),
                    v: Some(plan.v),
                    f: Some(plan.f),
                    metric,
                    value: Some(value),
                    error: None,
                },
                Err(e) => SweepRow::failed(asset, Method::Hosvd, Some(strategy), ss, metric, &e),
            });
        }
    }
    rows
}

fn pca_rows(
    prepared: &PreparedAnimation,
    pca: &Result<PcaDecomposition>,
    spec: &SweepSpec,
    ss: f64,
) -> Vec<SweepRow> {
    let asset = &prepared.animation().name;
    let [k, _, frames] = prepared.animation().vertices().dims();
    let lambda = ratio_from_space_savings(ss);
    let result = (|| {
        let pca = pca
            .as_ref()
            .map_err(|e| Error::Decomposition(e.to_string()))?;
        let p = pca_components_for(lambda, k, frames).ok_or(Error::UnreachableTarget {
            target: lambda,
            delta: 0.0,
        })?;
        let x = pca_reconstruct(&pca.model(p)?, pca.dims())?;
        let t = apply_inverse_transforms(&x, &prepared.rigid().transforms)?;
        Ok((p, t))
    })();
    spec.metrics
        .iter()
        .map(|&metric| {
            let value = result
                .as_ref()
                .map_err(|e: &Error| Error::invalid(e.to_string()))
                .and_then(|(p, t)| Ok((*p, prepared.report_for(t, metric)?.aggregate)));
            match value {
                Ok((p, value)) => SweepRow {
                    asset: asset.clone(),
                    method: Method::Pca,
                    strategy: None,
                    target_ss: ss,
                    achieved_ss: Some(space_savings(
                        pca_compression_ratio(p, k, frames, 3).unwrap_or(f64::NAN),
                    )),
                    v: None,
                    f: Some(p),
                    metric,
                    value: Some(value),
                    error: None,
                },
                Err(e) => SweepRow::failed(asset, Method::Pca, None, ss, metric, &e),
            }
        })
        .collect()
}

/// Runs the sweep over every asset; failures at individual grid points are
/// reported as rows with an error message. Rows are sorted by asset,
/// method, strategy, target and metric.
pub fn run_sweep(assets: &[AnimationSequence], spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut rows: Vec<SweepRow> = assets
        .par_iter()
        .map(|anim| -> Result<Vec<SweepRow>> {
            let prepared = PreparedAnimation::new(anim)?;
            let pca = if spec.methods.contains(&Method::Pca) {
                Some(PcaDecomposition::new(&prepared.rigid().normalized))
            } else {
                None
            };
            let rows = spec
                .ss_grid
                .par_iter()
                .flat_map_iter(|&ss| {
                    let mut rows = Vec::new();
                    if spec.methods.contains(&Method::Hosvd) {
                        rows.extend(hosvd_rows(&prepared, spec, ss));
                    }
                    if let Some(pca) = &pca {
                        rows.extend(pca_rows(&prepared, pca, spec, ss));
                    }
                    rows
                })
                .collect();
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by(|a, b| {
        let (ka, kb) = (a.sort_key(), b.sort_key());
        ka.0.cmp(kb.0)
            .then(ka.1.cmp(&kb.1))
            .then(strategy_rank(ka.2).cmp(&strategy_rank(kb.2)))
            .then(ka.3.total_cmp(&kb.3))
            .then(ka.4.cmp(&kb.4))
    });
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    writeln!(out, "{SWEEP_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_CSV_HEADER)?;
    let opt = |x: Option<String>| x.unwrap_or_default();
    for r in rows {
        w.write_record([
            r.asset.clone(),
            r.method.as_str().to_owned(),
            opt(r.strategy.map(|s| s.as_str().to_owned())),
            r.target_ss.to_string(),
            opt(r.achieved_ss.map(format_value)),
            opt(r.v.map(|v| v.to_string())),
            opt(r.f.map(|f| f.to_string())),
            r.metric.as_str().to_owned(),
            opt(r.value.map(format_value)),
            opt(r.error.clone()),
        ])?;
    }
    w.flush()?;
    Ok(())
}
