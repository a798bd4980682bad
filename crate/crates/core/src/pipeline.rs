//! End-to-end reconstruction: read, normalize, index, sample curvature on the
//! coarse lattice, refine, build patches, estimate, fill, extract, write.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::curvature::{curvature_field, CurvatureField, Percentiles};
use crate::error::{Error, Result, Stage, StageExt};
use crate::estimator::{estimate_far, EstimatorKind, DEFAULT_FAR_CAP};
use crate::extract::{marching_cubes, IsoSpec};
use crate::grid::{
    coarse_queries, hierarchical_fill, refine_with_parents, select_hot, write_dense_field,
    AdaptiveGrid, LatticeSpec, DEFAULT_COARSE_CELLS, DEFAULT_MARGIN_CELLS,
};
use crate::io::{read_point_cloud, write_mesh, CloudFileFormat};
use crate::metrics::{evaluate, MetricReport, DEFAULT_SAMPLE_COUNT};
use crate::model::{denormalize_mesh, normalize_cloud, NormalizationTransform, Point3, PointCloud, TriangleMesh};
use crate::patch::{build_patch, ResamplePolicy, DEFAULT_TARGET_COUNT};
use crate::pool::WorkerPool;
use crate::schedule::{RadiusSchedule, ScheduleParams};
use crate::spatial::SpatialIndex;

/// Queries handled per patch/estimate round; bounds live patch memory.
const CHUNK: usize = 16_384;

/// Chooses a σ threshold from the curvature percentiles or as a fixed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdSelector {
    P10,
    P40,
    P60,
    P90,
    Absolute(f64),
}

impl ThresholdSelector {
    pub fn resolve(self, p: &Percentiles) -> f64 {
        match self {
            Self::P10 => p.p10,
            Self::P40 => p.p40,
            Self::P60 => p.p60,
            Self::P90 => p.p90,
            Self::Absolute(v) => v,
        }
    }
}

impl FromStr for ThresholdSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p10" => Ok(Self::P10),
            "p40" => Ok(Self::P40),
            "p60" => Ok(Self::P60),
            "p90" => Ok(Self::P90),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Self::Absolute)
                .ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "threshold must be p10, p40, p60, p90 or a number, got '{other}'"
                    ))
                }),
        }
    }
}

impl fmt::Display for ThresholdSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::P10 => f.write_str("p10"),
            Self::P40 => f.write_str("p40"),
            Self::P60 => f.write_str("p60"),
            Self::P90 => f.write_str("p90"),
            Self::Absolute(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub input_format: Option<CloudFileFormat>,
    pub output: Option<PathBuf>,
    /// Optional dump of the filled field (see [`write_dense_field`]).
    pub field_out: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    pub coarse_cells: usize,
    pub margin_cells: usize,
    pub schedule: ScheduleParams,
    pub refine_threshold: ThresholdSelector,
    pub resample_threshold: ThresholdSelector,
    pub target_count: usize,
    pub estimator: EstimatorKind,
    pub far_cap: f64,
    /// Iso offset; `None` means half a fine cell.
    pub epsilon: Option<f64>,
    pub sample_count: usize,
    pub seed: u64,
    /// Uniform fine lattice with the fixed radius `r0`.
    pub baseline_mode: bool,
    /// 0 uses every available core.
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::new(),
            input_format: None,
            output: None,
            field_out: None,
            ground_truth: None,
            coarse_cells: DEFAULT_COARSE_CELLS,
            margin_cells: DEFAULT_MARGIN_CELLS,
            schedule: ScheduleParams::default(),
            refine_threshold: ThresholdSelector::P60,
            resample_threshold: ThresholdSelector::P60,
            target_count: DEFAULT_TARGET_COUNT,
            estimator: EstimatorKind::default(),
            far_cap: DEFAULT_FAR_CAP,
            epsilon: None,
            sample_count: DEFAULT_SAMPLE_COUNT,
            seed: 0,
            baseline_mode: false,
            workers: 0,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::InvalidConfig(format!("{key}: expected a boolean, got '{value}'"))),
    }
}

impl PipelineConfig {
    /// Sets one field by name; `-` and `_` are interchangeable in keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = key.trim().replace('-', "_");
        let v = value.trim();
        let path = || Some(PathBuf::from(v));
        match k.as_str() {
            "input" => self.input = PathBuf::from(v),
            "input_format" => self.input_format = Some(v.parse()?),
            "output" => self.output = path(),
            "field_out" => self.field_out = path(),
            "ground_truth" => self.ground_truth = path(),
            "coarse_cells" => self.coarse_cells = parse_num(&k, v)?,
            "margin_cells" => self.margin_cells = parse_num(&k, v)?,
            "r0" => self.schedule.r0 = parse_num(&k, v)?,
            "s_max" => self.schedule.s_max = parse_num(&k, v)?,
            "s_min" => self.schedule.s_min = parse_num(&k, v)?,
            "alpha" => self.schedule.alpha = parse_num(&k, v)?,
            "beta" => self.schedule.beta = parse_num(&k, v)?,
            "refine_threshold" => self.refine_threshold = v.parse()?,
            "resample_threshold" => self.resample_threshold = v.parse()?,
            "target_count" => self.target_count = parse_num(&k, v)?,
            "estimator" => self.estimator = v.parse()?,
            "far_cap" => self.far_cap = parse_num(&k, v)?,
            "epsilon" => {
                self.epsilon = match v {
                    "auto" => None,
                    _ => Some(parse_num(&k, v)?),
                }
            }
            "sample_count" => self.sample_count = parse_num(&k, v)?,
            "seed" => self.seed = parse_num(&k, v)?,
            "baseline_mode" => self.baseline_mode = parse_bool(&k, v)?,
            "workers" => self.workers = parse_num(&k, v)?,
            _ => return Err(Error::InvalidConfig(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::parse_line(i + 1, format!("expected key = value, found '{line}'"))
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        self.apply_text(&std::fs::read_to_string(path)?)
    }

    pub fn lattice(&self) -> Result<LatticeSpec> {
        LatticeSpec::new(self.coarse_cells, self.margin_cells)
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.lattice()?;
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.target_count == 0 {
            return bad("target_count must be positive".into());
        }
        if !(self.far_cap > 0.0 && self.far_cap.is_finite()) {
            return bad(format!("far_cap must be positive, got {}", self.far_cap));
        }
        if let Some(e) = self.epsilon {
            IsoSpec::new(e)?;
        }
        if self.sample_count == 0 {
            return bad("sample_count must be positive".into());
        }
        Ok(())
    }

    pub fn iso(&self, spec: &LatticeSpec) -> Result<IsoSpec> {
        match self.epsilon {
            Some(e) => IsoSpec::new(e),
            None => Ok(IsoSpec::for_lattice(spec)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TimingReport {
    /// Normalization, indexing, curvature, radius selection, refinement,
    /// extraction and resampling.
    pub patch_time: f64,
    /// Estimation plus fill interpolation.
    pub udf_time: f64,
    /// Marching cubes (reported separately, outside both totals above).
    pub extract_time: f64,
    pub evaluated_queries: usize,
    pub filled_queries: usize,
    pub total_fine_vertices: usize,
}

impl fmt::Display for TimingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "patch_time={:.6}", self.patch_time)?;
        writeln!(f, "udf_time={:.6}", self.udf_time)?;
        writeln!(f, "extract_time={:.6}", self.extract_time)?;
        writeln!(f, "evaluated_queries={}", self.evaluated_queries)?;
        writeln!(f, "filled_queries={}", self.filled_queries)?;
        writeln!(f, "total_fine_vertices={}", self.total_fine_vertices)
    }
}

/// Everything a reconstruction run produces.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// Mesh in the input frame.
    pub mesh: TriangleMesh,
    pub timing: TimingReport,
    pub transform: NormalizationTransform,
    pub lattice: LatticeSpec,
    /// Absent in baseline mode.
    pub percentiles: Option<Percentiles>,
    pub hot_vertices: usize,
    /// Filled field in the normalized frame, id order.
    pub field: Vec<f64>,
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// Reads `config.input`, reconstructs, and writes the mesh (and field) when
/// the corresponding paths are set.
pub fn reconstruct(config: &PipelineConfig) -> Result<Reconstruction> {
    config.validate()?;
    let cloud = read_point_cloud(&config.input, config.input_format).at(Stage::Read)?;
    let rec = reconstruct_cloud(&cloud, config)?;
    if let Some(out) = &config.output {
        write_mesh(&rec.mesh, out).at(Stage::Write)?;
    }
    if let Some(out) = &config.field_out {
        write_dense_field(out, &rec.lattice, &rec.field).at(Stage::Write)?;
    }
    Ok(rec)
}

/// In-memory reconstruction on the configured worker pool.
pub fn reconstruct_cloud(cloud: &PointCloud, config: &PipelineConfig) -> Result<Reconstruction> {
    config.validate()?;
    let pool = WorkerPool::new(config.workers)?;
    pool.install(|| run(cloud, config))
}

/// σ assigned to each evaluated fine vertex.
struct QueryPlan {
    ids: Vec<usize>,
    sigma: Vec<Option<f64>>,
}

fn coarse_slot(spec: &LatticeSpec, id: usize) -> usize {
    let m = spec.coarse_cells + 1;
    let [i, j, k] = spec.index(id);
    (i / 2 * m + j / 2) * m + k / 2
}

fn run(cloud: &PointCloud, config: &PipelineConfig) -> Result<Reconstruction> {
    let spec = config.lattice()?;
    let params = config.schedule;
    let mut patch_time = Duration::ZERO;
    let mut udf_time = Duration::ZERO;

    let t = Instant::now();
    let (norm, transform) = normalize_cloud(cloud).at(Stage::Normalize)?;
    let index = SpatialIndex::build(&norm).at(Stage::Index)?;
    let coarse = coarse_queries(&spec);

    let mut percentiles = None;
    let mut hot_vertices = 0;
    let (mut grid, plan, schedule) = if config.baseline_mode {
        let grid = AdaptiveGrid::uniform(spec);
        let ids = grid.evaluated_ids();
        let sigma = vec![None; ids.len()];
        (grid, QueryPlan { ids, sigma }, None)
    } else {
        let positions: Vec<Point3> = coarse.iter().map(|&(_, p)| p).collect();
        let field: CurvatureField =
            curvature_field(&norm, &index, &positions, params.r0).at(Stage::Curvature)?;
        let pct = field.percentiles;
        percentiles = Some(pct);
        let schedule = RadiusSchedule::new(pct, params).at(Stage::Curvature)?;
        // a zero threshold would mark every flat region hot
        let threshold = config.refine_threshold.resolve(&pct).max(1e-12);
        let hot = select_hot(&field, &coarse, threshold);
        hot_vertices = hot.len();
        let mut grid = AdaptiveGrid::new(spec);
        let mut added = refine_with_parents(&mut grid, &hot).at(Stage::Refine)?;
        added.sort_unstable();
        let ids = grid.evaluated_ids();
        let sigma = ids
            .iter()
            .map(|&id| {
                let parent = if spec.is_coarse(id) {
                    id
                } else {
                    let at = added
                        .binary_search_by_key(&id, |&(a, _)| a)
                        .expect("refined vertex has a parent");
                    added[at].1
                };
                field.sigma[coarse_slot(&spec, parent)]
            })
            .collect();
        (grid, QueryPlan { ids, sigma }, Some(schedule))
    };
    patch_time += t.elapsed();

    let policy_threshold = match percentiles {
        Some(p) => config.resample_threshold.resolve(&p),
        None => f64::INFINITY,
    };
    let policy = ResamplePolicy {
        target_count: config.target_count,
        curvature_threshold: policy_threshold,
        rng_seed: config.seed,
    };
    let estimator = config.estimator.estimator();

    let mut values = Vec::with_capacity(plan.ids.len());
    for (ids, sigmas) in plan.ids.chunks(CHUNK).zip(plan.sigma.chunks(CHUNK)) {
        let t = Instant::now();
        let patches: Vec<_> = ids
            .par_iter()
            .zip(sigmas.par_iter())
            .map(|(&id, &sigma)| {
                let q = spec.position(id);
                let (radius, s) = match (&schedule, sigma) {
                    (Some(sch), Some(s)) => (sch.radius(s), s),
                    _ => (params.r0, 0.0),
                };
                build_patch(&index, &norm, q, radius, s, &policy, id as u64)
            })
            .collect();
        patch_time += t.elapsed();

        let t = Instant::now();
        let chunk_values: Vec<f64> = patches
            .par_iter()
            .map(|p| {
                if p.is_empty() {
                    Ok(estimate_far(p.query, &index, config.far_cap))
                } else {
                    estimator.estimate(p.query, p)
                }
            })
            .collect::<Result<_>>()
            .at(Stage::Estimate)?;
        values.extend(chunk_values);
        udf_time += t.elapsed();
    }

    let t = Instant::now();
    for (&id, &v) in plan.ids.iter().zip(&values) {
        grid.set_value(id, v);
    }
    hierarchical_fill(&mut grid).at(Stage::Fill)?;
    udf_time += t.elapsed();

    let evaluated_queries = grid.evaluated_count();
    let filled_queries = grid.filled_count();

    let t = Instant::now();
    let iso = config.iso(&spec)?;
    let mesh = marching_cubes(grid.dense().at(Stage::Extract)?, &spec, iso).at(Stage::Extract)?;
    let extract_time = secs(t.elapsed());

    Ok(Reconstruction {
        mesh: denormalize_mesh(&mesh, &transform),
        timing: TimingReport {
            patch_time: secs(patch_time),
            udf_time: secs(udf_time),
            extract_time,
            evaluated_queries,
            filled_queries,
            total_fine_vertices: spec.total_fine_vertices(),
        },
        transform,
        lattice: spec,
        percentiles,
        hot_vertices,
        field: grid.into_values(),
    })
}

/// Metrics of a reconstruction against a ground-truth cloud in the input
/// frame; distances are reported in normalized units.
pub fn score(rec: &Reconstruction, ground_truth: &PointCloud, config: &PipelineConfig) -> Result<MetricReport> {
    let unit = rec.transform.length_to_input(1.0);
    evaluate(&rec.mesh, ground_truth, config.sample_count, config.seed, unit).at(Stage::Metrics)
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub adaptive: TimingReport,
    pub baseline: TimingReport,
    pub adaptive_metrics: MetricReport,
    pub baseline_metrics: MetricReport,
    /// Adaptive evaluated queries over baseline evaluated queries.
    pub query_ratio: f64,
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, t, m) in [
            ("adaptive", &self.adaptive, &self.adaptive_metrics),
            ("baseline", &self.baseline, &self.baseline_metrics),
        ] {
            for line in t.to_string().lines() {
                writeln!(f, "{name}.{line}")?;
            }
            for kv in m.to_record().split(' ') {
                writeln!(f, "{name}.{kv}")?;
            }
        }
        writeln!(f, "query_ratio={}", self.query_ratio)
    }
}

/// Runs the configuration in adaptive and baseline mode on the same cloud and
/// scores both against `ground_truth`.
pub fn bench_cloud(cloud: &PointCloud, ground_truth: &PointCloud, config: &PipelineConfig) -> Result<BenchReport> {
    let adaptive_cfg = PipelineConfig {
        baseline_mode: false,
        ..config.clone()
    };
    let baseline_cfg = PipelineConfig {
        baseline_mode: true,
        ..config.clone()
    };
    let a = reconstruct_cloud(cloud, &adaptive_cfg)?;
    let b = reconstruct_cloud(cloud, &baseline_cfg)?;
    let adaptive_metrics = score(&a, ground_truth, config)?;
    let baseline_metrics = score(&b, ground_truth, config)?;
    Ok(BenchReport {
        query_ratio: a.timing.evaluated_queries as f64 / b.timing.evaluated_queries as f64,
        adaptive: a.timing,
        baseline: b.timing,
        adaptive_metrics,
        baseline_metrics,
    })
}

/// File-based [`bench_cloud`]; the input doubles as ground truth when
/// `config.ground_truth` is unset.
pub fn bench(config: &PipelineConfig) -> Result<BenchReport> {
    config.validate()?;
    let cloud = read_point_cloud(&config.input, config.input_format).at(Stage::Read)?;
    let gt = match &config.ground_truth {
        Some(p) => read_point_cloud(p, None).at(Stage::Read)?,
        None => cloud.clone(),
    };
    bench_cloud(&cloud, &gt, config)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSummary {
    pub coarse_queries: usize,
    pub with_sigma: usize,
    pub percentiles: Percentiles,
    pub refine_threshold: f64,
    pub hot_vertices: usize,
}

impl fmt::Display for CurvatureSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "coarse_queries={}", self.coarse_queries)?;
        writeln!(f, "with_sigma={}", self.with_sigma)?;
        writeln!(f, "sigma_p10={}", self.percentiles.p10)?;
        writeln!(f, "sigma_p40={}", self.percentiles.p40)?;
        writeln!(f, "sigma_p60={}", self.percentiles.p60)?;
        writeln!(f, "sigma_p90={}", self.percentiles.p90)?;
        writeln!(f, "refine_threshold={}", self.refine_threshold)?;
        writeln!(f, "hot_vertices={}", self.hot_vertices)
    }
}

/// The curvature stage alone: σ percentiles over the coarse lattice and the
/// resulting hot-vertex count.
pub fn curvature_summary(cloud: &PointCloud, config: &PipelineConfig) -> Result<CurvatureSummary> {
    config.validate()?;
    let spec = config.lattice()?;
    WorkerPool::new(config.workers)?.install(|| {
        let (norm, _) = normalize_cloud(cloud).at(Stage::Normalize)?;
        let index = SpatialIndex::build(&norm).at(Stage::Index)?;
        let coarse = coarse_queries(&spec);
        let positions: Vec<Point3> = coarse.iter().map(|&(_, p)| p).collect();
        let field = curvature_field(&norm, &index, &positions, config.schedule.r0).at(Stage::Curvature)?;
        let threshold = config.refine_threshold.resolve(&field.percentiles).max(1e-12);
        Ok(CurvatureSummary {
            coarse_queries: coarse.len(),
            with_sigma: field.present().count(),
            percentiles: field.percentiles,
            refine_threshold: threshold,
            hot_vertices: select_hot(&field, &coarse, threshold).len(),
        })
    })
}
