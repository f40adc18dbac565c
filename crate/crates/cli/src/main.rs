//! `tuckermesh` command-line front end.
//!
//! Machine-readable output goes to standard output, diagnostics to standard
//! error. Exit codes: 0 success, 1 internal failure, 2 invalid input,
//! 3 infeasible compression target, 4 I/O failure.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use tuckermesh::codec::container::MAGIC;
use tuckermesh::metrics::{evaluate, REPORT_CSV_HEADER};
use tuckermesh::search::{ratio_from_space_savings, DEFAULT_DELTA, DEFAULT_DEPTH, DEFAULT_SAMPLES};
use tuckermesh::sweep::write_sweep_csv;
use tuckermesh::{
    decode, load_animation, measured_cr, run_sweep, save_animation, space_savings, synthesize,
    AnimationFormat, AnimationSequence, CompressedAnimation, EncodeOptions, Error, Method, Metric,
    MsdmContext, Precision, PreparedAnimation, Strategy, SweepSpec, SynthKind, SynthParams,
};

const EXIT_INTERNAL: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "tuckermesh",
    version,
    about = "HO-SVD compression of mesh animations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress an animation into a container.
    Compress(CompressArgs),
    /// Decode a container back into an animation.
    Decompress(DecompressArgs),
    /// Per-frame distortion between two animations, as CSV.
    Evaluate(EvaluateArgs),
    /// Rate-distortion sweep over a grid of space savings, as CSV.
    Sweep(SweepArgs),
    /// Sweep with both HO-SVD and PCA.
    Compare(SweepArgs),
    /// Generate a synthetic animation.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Obj,
    Raw,
}

impl From<Format> for AnimationFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Obj => AnimationFormat::ObjSequence,
            Format::Raw => AnimationFormat::Raw,
        }
    }
}

fn format_for(path: &Path, explicit: Option<Format>) -> AnimationFormat {
    explicit.map_or_else(|| AnimationFormat::detect(path), Into::into)
}

#[derive(Args)]
struct CompressArgs {
    /// Animation: a directory of OBJ frames or a raw file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    format: Option<Format>,
    #[arg(long)]
    output: PathBuf,
    /// Target compression ratio of the Tucker operator.
    #[arg(long, conflicts_with = "ss", required_unless_present = "ss")]
    cr: Option<f64>,
    /// Target space savings in percent.
    #[arg(long)]
    ss: Option<f64>,
    #[arg(long, default_value = "diagonal", value_parser = parse_strategy)]
    strategy: Strategy,
    /// Distortion minimised by the iterative strategy.
    #[arg(long, default_value = "mse")]
    metric: Metric,
    /// Bytes per stored value: 4 or 8.
    #[arg(long, default_value_t = 4)]
    ds: usize,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    depth: usize,
}

#[derive(Args)]
struct DecompressArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value = "raw")]
    format: Format,
    /// Animation whose connectivity is copied into the output.
    #[arg(long)]
    topology: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    original: PathBuf,
    /// Animation or container to compare against the original.
    #[arg(long)]
    reconstructed: PathBuf,
    #[arg(long)]
    format: Option<Format>,
    #[arg(long, value_delimiter = ',', default_value = "mse,hausdorff")]
    metrics: Vec<Metric>,
}

#[derive(Args)]
struct SweepArgs {
    /// One or more animations.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
    /// Target space savings in percent, strictly increasing.
    #[arg(long, value_delimiter = ',', required = true)]
    ss: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "diagonal,iterative", value_parser = parse_strategy)]
    strategies: Vec<Strategy>,
    #[arg(long, value_delimiter = ',', default_value = "mse")]
    metrics: Vec<Metric>,
    #[arg(long, value_delimiter = ',', default_value = "hosvd")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    depth: usize,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    kind: SynthKind,
    #[arg(long, default_value_t = 400)]
    vertices: usize,
    #[arg(long, default_value_t = 40)]
    frames: usize,
    #[arg(long, default_value_t = 4)]
    r1: usize,
    #[arg(long, default_value_t = 3)]
    r3: usize,
    #[arg(long, default_value_t = 0.1)]
    amplitude: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value = "raw")]
    format: Format,
}

fn parse_strategy(s: &str) -> Result<Strategy, Error> {
    match s.parse()? {
        Strategy::Explicit => Err(Error::InvalidArgument(
            "strategy must be diagonal or iterative".into(),
        )),
        other => Ok(other),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compress(a) => compress(a),
        Command::Decompress(a) => decompress(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Sweep(a) => sweep(a, false),
        Command::Compare(a) => sweep(a, true),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_infeasible() {
        EXIT_INFEASIBLE
    } else if e.is_io() || matches!(e, Error::Parse { .. } | Error::Format(_)) {
        EXIT_IO
    } else if matches!(
        e,
        Error::InvalidArgument(_)
            | Error::DimensionMismatch { .. }
            | Error::RankOutOfRange { .. }
            | Error::TopologyMismatch(_)
            | Error::NonFinite(_)
            | Error::EmptyPointSet
    ) {
        EXIT_INVALID
    } else {
        EXIT_INTERNAL
    }
}

fn stdout_flush(
    w: impl FnOnce(&mut dyn Write) -> tuckermesh::Result<()>,
) -> tuckermesh::Result<()> {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    w(&mut lock)?;
    lock.flush()?;
    Ok(())
}

fn compress(a: CompressArgs) -> tuckermesh::Result<ExitCode> {
    let precision = Precision::from_bytes(a.ds)
        .ok_or_else(|| Error::InvalidArgument(format!("--ds must be 4 or 8, got {}", a.ds)))?;
    let target_cr = match (a.cr, a.ss) {
        (Some(cr), _) => cr,
        (None, Some(ss)) if (0.0..100.0).contains(&ss) => ratio_from_space_savings(ss),
        (None, Some(ss)) => {
            return Err(Error::InvalidArgument(format!(
                "--ss must lie in [0, 100), got {ss}"
            )))
        }
        (None, None) => unreachable!("clap requires one of --cr and --ss"),
    };
    if !(target_cr.is_finite() && target_cr > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "compression ratio must be positive, got {target_cr}"
        )));
    }
    let anim = load_animation(&a.input, format_for(&a.input, a.format))?;
    let opts = EncodeOptions {
        strategy: a.strategy,
        metric: a.metric,
        precision,
        delta: a.delta,
        samples: a.samples,
        depth: a.depth,
        ..EncodeOptions::new(target_cr)
    };
    let prepared = PreparedAnimation::new(&anim)?;
    for frame in &prepared.rigid().degenerate_frames {
        warn!("frame {frame}: motion estimated as a translation only");
    }
    let outcome = prepared.plan(&opts)?;
    let plan = &outcome.plan;
    let container =
        prepared.container(plan.v, plan.f, plan.strategy, opts.metric, opts.precision)?;
    container.write(&a.output)?;
    let error = match outcome.error {
        Some(e) => e,
        None => prepared.error(plan.v, plan.f, opts.metric)?,
    };
    let measured = measured_cr(&container);
    let line = format!(
        "v={} f={} vtf={} strategy={} target_cr={:e} achieved_cr={:e} achieved_ss={:e} measured_cr={:e} measured_ss={:e} evaluations={} {}={:e}",
        plan.v,
        plan.f,
        plan.vtf,
        plan.strategy,
        plan.target_cr,
        plan.achieved_cr,
        space_savings(plan.achieved_cr),
        measured,
        space_savings(measured),
        outcome.evaluations,
        opts.metric,
        error,
    );
    println!("{line}");
    info!("wrote {}", a.output.display());
    Ok(ExitCode::SUCCESS)
}

fn decompress(a: DecompressArgs) -> tuckermesh::Result<ExitCode> {
    let c = CompressedAnimation::read(&a.input)?;
    let vertices = decode(&c)?;
    let anim = match a.topology {
        Some(path) => {
            let reference = load_animation(&path, AnimationFormat::detect(&path))?;
            if reference.vertex_count() != c.vertices {
                return Err(Error::TopologyMismatch(format!(
                    "{} has {} vertices, container has {}",
                    path.display(),
                    reference.vertex_count(),
                    c.vertices
                )));
            }
            if reference.faces().is_empty() {
                AnimationSequence::new(
                    &reference.name,
                    vertices,
                    reference.topology().edges().to_vec(),
                )?
            } else {
                AnimationSequence::with_faces(
                    &reference.name,
                    vertices,
                    reference.faces().to_vec(),
                )?
            }
        }
        None => AnimationSequence::new(stem(&a.input), vertices, Vec::new())?,
    };
    save_animation(&anim, &a.output, a.format.into())?;
    Ok(ExitCode::SUCCESS)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "animation".into())
}

fn is_container(path: &Path) -> bool {
    let mut magic = [0u8; 4];
    path.is_file()
        && File::open(path)
            .and_then(|mut f| f.read_exact(&mut magic))
            .is_ok()
        && magic == MAGIC
}

fn evaluate_cmd(a: EvaluateArgs) -> tuckermesh::Result<ExitCode> {
    let original = load_animation(&a.original, format_for(&a.original, a.format))?;
    let (recon, recon_topology) = if is_container(&a.reconstructed) {
        (decode(&CompressedAnimation::read(&a.reconstructed)?)?, None)
    } else {
        let r = load_animation(&a.reconstructed, format_for(&a.reconstructed, a.format))?;
        let topo = r.topology().clone();
        (r.vertices().clone(), Some(topo))
    };
    if recon.dims() != original.vertices().dims() {
        return Err(Error::DimensionMismatch {
            context: "evaluate",
            expected: original.vertices().dims().to_vec(),
            actual: recon.dims().to_vec(),
        });
    }

    let msdm = a.metrics.contains(&Metric::Msdm).then(|| {
        let topo = original.topology();
        if topo.edges().is_empty() {
            return Err(Error::TopologyMismatch(
                "original animation has no edges".into(),
            ));
        }
        if recon_topology.as_ref().is_some_and(|t| t != topo) {
            return Err(Error::TopologyMismatch(
                "edge sets of the two animations differ".into(),
            ));
        }
        MsdmContext::new(topo.clone(), Default::default())
    });

    let mut failure = None;
    stdout_flush(|out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(REPORT_CSV_HEADER)?;
        for &metric in &a.metrics {
            let ctx = match (metric, &msdm) {
                (Metric::Msdm, Some(Ok(ctx))) => Some(ctx),
                (Metric::Msdm, Some(Err(e))) => {
                    w.write_record([metric.as_str(), "error", &e.to_string()])?;
                    failure.get_or_insert(EXIT_INVALID);
                    continue;
                }
                _ => None,
            };
            match evaluate(metric, original.vertices(), &recon, ctx) {
                Ok(report) => {
                    if !report.excluded_vertices.is_empty() {
                        warn!(
                            "{metric}: {} degenerate vertices excluded",
                            report.excluded_vertices.len()
                        );
                    }
                    report.write_rows(&mut w)?;
                }
                Err(e) => {
                    w.write_record([metric.as_str(), "error", &e.to_string()])?;
                    failure.get_or_insert(exit_code(&e));
                }
            }
        }
        w.flush()?;
        Ok(())
    })?;
    Ok(match failure {
        Some(code) => {
            eprintln!("error: one or more metrics could not be evaluated");
            ExitCode::from(code)
        }
        None => ExitCode::SUCCESS,
    })
}

fn sweep(a: SweepArgs, compare: bool) -> tuckermesh::Result<ExitCode> {
    let mut spec = SweepSpec::new(a.ss);
    spec.strategies = a.strategies;
    spec.metrics = a.metrics;
    spec.methods = if compare {
        vec![Method::Hosvd, Method::Pca]
    } else {
        a.methods
    };
    spec.delta = a.delta;
    spec.samples = a.samples;
    spec.depth = a.depth;
    spec.validate()?;

    let assets = a
        .input
        .iter()
        .map(|p| load_animation(p, format_for(p, a.format)))
        .collect::<tuckermesh::Result<Vec<_>>>()?;
    let rows = run_sweep(&assets, &spec)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        warn!("{failed} of {} sweep points failed", rows.len());
    }
    match a.output {
        Some(path) => {
            let file = File::create(&path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            let mut out = BufWriter::new(file);
            write_sweep_csv(&rows, &mut out)?;
            out.flush().map_err(|source| Error::Io { path, source })?;
        }
        None => stdout_flush(|out| write_sweep_csv(&rows, out))?,
    }
    Ok(ExitCode::SUCCESS)
}

fn synth(a: SynthArgs) -> tuckermesh::Result<ExitCode> {
    let params = SynthParams {
        kind: a.kind,
        vertices: a.vertices,
        frames: a.frames,
        r1: a.r1,
        r3: a.r3,
        amplitude: a.amplitude,
        seed: a.seed,
    };
    let anim = synthesize(&params)?;
    save_animation(&anim, &a.output, a.format.into())?;
    Ok(ExitCode::SUCCESS)
}
