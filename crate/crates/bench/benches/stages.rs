use std::hint::black_box;

use adaptive_udf::curvature::curvature_field;
use adaptive_udf::extract::{marching_cubes, IsoSpec};
use adaptive_udf::grid::{coarse_queries, hierarchical_fill, AdaptiveGrid, LatticeSpec};
use adaptive_udf::pipeline::{reconstruct_cloud, PipelineConfig};
use adaptive_udf::{Point3, SpatialIndex};
use adaptive_udf_bench::{sphere_cloud, sphere_udf};
use criterion::{criterion_group, criterion_main, Criterion};

fn spatial(c: &mut Criterion) {
    let cloud = sphere_cloud(50_000);
    c.bench_function("kdtree_build_50k", |b| b.iter(|| SpatialIndex::build(black_box(&cloud)).unwrap()));
    let index = SpatialIndex::build(&cloud).unwrap();
    let probes: Vec<Point3> = cloud.points.iter().step_by(50).map(|&p| p * 1.01).collect();
    c.bench_function("radius_query_r0_1k", |b| {
        let mut out = Vec::new();
        b.iter(|| {
            for &q in &probes {
                index.radius_query_into(q, 0.018, &mut out);
                black_box(out.len());
            }
        })
    });
    c.bench_function("nearest_1k", |b| b.iter(|| probes.iter().map(|&q| index.nearest(q).1).sum::<f64>()));
}

fn curvature(c: &mut Criterion) {
    let cloud = sphere_cloud(50_000);
    let index = SpatialIndex::build(&cloud).unwrap();
    let spec = LatticeSpec::new(32, 3).unwrap();
    let qs: Vec<Point3> = coarse_queries(&spec).into_iter().map(|(_, p)| p).collect();
    c.bench_function("curvature_field_coarse32", |b| {
        b.iter(|| curvature_field(&cloud, &index, black_box(&qs), 0.018).unwrap())
    });
}

fn fill_and_extract(c: &mut Criterion) {
    let spec = LatticeSpec::new(32, 3).unwrap();
    let udf = sphere_udf(&spec);
    c.bench_function("hierarchical_fill_coarse32", |b| {
        b.iter(|| {
            let mut grid = AdaptiveGrid::new(spec);
            for id in grid.evaluated_ids() {
                grid.set_value(id, udf[id]);
            }
            hierarchical_fill(&mut grid).unwrap();
            grid
        })
    });
    let iso = IsoSpec::for_lattice(&spec);
    c.bench_function("marching_cubes_coarse32", |b| b.iter(|| marching_cubes(black_box(&udf), &spec, iso).unwrap()));
}

fn pipeline(c: &mut Criterion) {
    let cloud = sphere_cloud(20_000);
    let mut group = c.benchmark_group("reconstruct_coarse24");
    group.sample_size(10);
    for baseline in [false, true] {
        let cfg = PipelineConfig {
            coarse_cells: 24,
            baseline_mode: baseline,
            ..PipelineConfig::default()
        };
        let name = if baseline { "baseline" } else { "adaptive" };
        group.bench_function(name, |b| b.iter(|| reconstruct_cloud(&cloud, &cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, spatial, curvature, fill_and_extract, pipeline);
criterion_main!(benches);
