use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adaptive_udf::extract::{marching_cubes, IsoSpec};
use adaptive_udf::fixture::{self, FixtureKind};
use adaptive_udf::grid::read_dense_field;
use adaptive_udf::io::{read_mesh, read_point_cloud, write_mesh, write_point_cloud};
use adaptive_udf::metrics::evaluate;
use adaptive_udf::model::normalize_cloud;
use adaptive_udf::pipeline::{self, PipelineConfig};
use adaptive_udf::{Error, Stage};
use clap::{Args, Parser, Subcommand};

/// Curvature-adaptive unsigned distance field reconstruction.
#[derive(Parser)]
#[command(name = "audf", version)]
struct Cli {
    /// Plain `key = value` config file; command-line flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct a mesh from a point cloud.
    Reconstruct(PipelineArgs),
    /// Report curvature percentiles and the hot-vertex count.
    Curvature(PipelineArgs),
    /// Compare a mesh with a ground-truth cloud.
    Metrics(MetricsArgs),
    /// Run adaptive and baseline reconstructions and compare them.
    Bench(PipelineArgs),
    /// Write an analytic test cloud.
    MakeFixture(FixtureArgs),
    /// Extract a mesh from a dense field written by `reconstruct --field-out`.
    Extract(ExtractArgs),
}

/// Flags mirroring the pipeline configuration keys.
#[derive(Args, Default)]
struct PipelineArgs {
    #[arg(long)]
    input: Option<String>,
    /// xyz, ply, ply-binary or obj; inferred from the extension by default.
    #[arg(long)]
    input_format: Option<String>,
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    field_out: Option<String>,
    #[arg(long)]
    ground_truth: Option<String>,
    #[arg(long)]
    coarse_cells: Option<String>,
    #[arg(long)]
    margin_cells: Option<String>,
    #[arg(long)]
    r0: Option<String>,
    #[arg(long)]
    s_max: Option<String>,
    #[arg(long)]
    s_min: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    /// p10, p40, p60, p90 or an absolute σ.
    #[arg(long)]
    refine_threshold: Option<String>,
    /// p10, p40, p60, p90 or an absolute σ.
    #[arg(long)]
    resample_threshold: Option<String>,
    #[arg(long)]
    target_count: Option<String>,
    /// nearest or plane.
    #[arg(long)]
    estimator: Option<String>,
    #[arg(long)]
    far_cap: Option<String>,
    /// Iso offset, or `auto` for half a fine cell.
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    sample_count: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    baseline_mode: bool,
    #[arg(long)]
    workers: Option<String>,
}

impl PipelineArgs {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let pairs = [
            ("input", &self.input),
            ("input_format", &self.input_format),
            ("output", &self.output),
            ("field_out", &self.field_out),
            ("ground_truth", &self.ground_truth),
            ("coarse_cells", &self.coarse_cells),
            ("margin_cells", &self.margin_cells),
            ("r0", &self.r0),
            ("s_max", &self.s_max),
            ("s_min", &self.s_min),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("refine_threshold", &self.refine_threshold),
            ("resample_threshold", &self.resample_threshold),
            ("target_count", &self.target_count),
            ("estimator", &self.estimator),
            ("far_cap", &self.far_cap),
            ("epsilon", &self.epsilon),
            ("sample_count", &self.sample_count),
            ("seed", &self.seed),
            ("workers", &self.workers),
        ];
        let mut out: Vec<_> = pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect();
        if self.baseline_mode {
            out.push(("baseline_mode", "true"));
        }
        out
    }

    fn config(&self, file: Option<&Path>) -> Result<PipelineConfig, Error> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = file {
            cfg.apply_file(path)?;
        }
        for (k, v) in self.overrides() {
            cfg.set(k, v)?;
        }
        if cfg.input.as_os_str().is_empty() {
            return Err(Error::InvalidConfig("an input cloud is required (--input)".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct MetricsArgs {
    /// Reconstructed mesh (OBJ).
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    ground_truth: PathBuf,
    #[arg(long, default_value_t = adaptive_udf::metrics::DEFAULT_SAMPLE_COUNT)]
    sample_count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Measure in the files' own units instead of the ground truth's
    /// normalized frame.
    #[arg(long)]
    raw_units: bool,
    /// Also print the single-line record.
    #[arg(long)]
    record: bool,
}

#[derive(Args)]
struct FixtureArgs {
    /// sphere, cube, sheets or plane.
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 50_000)]
    count: usize,
    /// Sheet separation (sheets only).
    #[arg(long, default_value_t = 0.045)]
    gap: f64,
    /// Uniform offset amplitude along the surface normal.
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output cloud (.xyz, .ply or .obj).
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    field: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Iso offset; half a fine cell by default.
    #[arg(long)]
    epsilon: Option<f64>,
}

fn staged(stage: Stage) -> impl Fn(Error) -> Error {
    move |e| match e {
        e @ Error::AtStage { .. } => e,
        e => Error::AtStage {
            stage,
            source: Box::new(e),
        },
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let file = cli.config.as_deref();
    match cli.command {
        Command::Reconstruct(args) => {
            let cfg = args.config(file)?;
            let rec = pipeline::reconstruct(&cfg)?;
            print!("{}", rec.timing);
            println!("vertices={}", rec.mesh.vertices.len());
            println!("faces={}", rec.mesh.faces.len());
            println!("hot_vertices={}", rec.hot_vertices);
            if let Some(p) = rec.percentiles {
                println!("sigma_p10={}\nsigma_p40={}\nsigma_p60={}\nsigma_p90={}", p.p10, p.p40, p.p60, p.p90);
            }
            if let Some(gt) = &cfg.ground_truth {
                let gt = read_point_cloud(gt, None).map_err(staged(Stage::Read))?;
                print!("{}", pipeline::score(&rec, &gt, &cfg)?);
            }
        }
        Command::Curvature(args) => {
            let cfg = args.config(file)?;
            let cloud = read_point_cloud(&cfg.input, cfg.input_format).map_err(staged(Stage::Read))?;
            print!("{}", pipeline::curvature_summary(&cloud, &cfg)?);
        }
        Command::Bench(args) => {
            let cfg = args.config(file)?;
            print!("{}", pipeline::bench(&cfg)?);
        }
        Command::Metrics(args) => {
            let mesh = read_mesh(&args.mesh).map_err(staged(Stage::Read))?;
            let gt = read_point_cloud(&args.ground_truth, None).map_err(staged(Stage::Read))?;
            let unit = if args.raw_units {
                1.0
            } else {
                normalize_cloud(&gt).map_err(staged(Stage::Normalize))?.1.length_to_input(1.0)
            };
            let report =
                evaluate(&mesh, &gt, args.sample_count, args.seed, unit).map_err(staged(Stage::Metrics))?;
            print!("{report}");
            if args.record {
                println!("{}", report.to_record());
            }
        }
        Command::MakeFixture(args) => {
            let kind = match args.kind.parse()? {
                FixtureKind::Sheets { .. } => FixtureKind::Sheets { gap: args.gap },
                k => k,
            };
            let cloud = fixture::generate(kind, args.count, args.jitter, args.seed);
            write_point_cloud(&cloud, &args.output).map_err(staged(Stage::Write))?;
            println!("kind={kind}\npoints={}\noutput={}", cloud.len(), args.output.display());
        }
        Command::Extract(args) => {
            let (spec, field) = read_dense_field(&args.field).map_err(staged(Stage::Read))?;
            let iso = match args.epsilon {
                Some(e) => IsoSpec::new(e)?,
                None => IsoSpec::for_lattice(&spec),
            };
            let mesh = marching_cubes(&field, &spec, iso).map_err(staged(Stage::Extract))?;
            write_mesh(&mesh, &args.output).map_err(staged(Stage::Write))?;
            println!("vertices={}\nfaces={}", mesh.vertices.len(), mesh.faces.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                Error::AtStage { .. } => eprintln!("error: {e}"),
                other => eprintln!("error: config: {other}"),
            }
            ExitCode::FAILURE
        }
    }
}
