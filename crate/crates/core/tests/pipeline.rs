use std::io::Cursor;

use tempent_core::baselines::{frobenius_signal, lad_scores, lad_signatures};
use tempent_core::diffusion::{load_store, save_store};
use tempent_core::entropy::{
    global_entropy, local_entropy_signals, read_signal, snapshot_entropy_signals, upper_bound, write_signal, GridMode,
};
use tempent_core::linkstream::{project_changepoints, read_link_stream, read_snapshots, write_link_stream, write_snapshots};
use tempent_core::segmentation::{hausdorff_score, segment_fixed_k};
use tempent_core::synth::{make_sample, merge_split_stream, BenchmarkParams, Family, MergeSplitPattern};
use tempent_core::{DiffusionModel, Direction, Distribution, KernelStore, Parallelism, Signal};

fn small_params() -> BenchmarkParams {
    BenchmarkParams { node_count: 40, t_max: 80.0, change_margin: 16.0, ..BenchmarkParams::default() }
}

#[test]
fn stream_and_snapshot_files_round_trip() {
    let sample = make_sample(Family::CommunityBench, &small_params(), 3).unwrap();
    let mut buf = Vec::new();
    write_link_stream(&sample.stream, &mut buf).unwrap();
    let back = read_link_stream(Cursor::new(&buf)).unwrap();
    assert_eq!(back, sample.stream);

    let seq = sample.stream.aggregate_snapshots(4.0).unwrap();
    let mut buf = Vec::new();
    write_snapshots(&seq, &mut buf).unwrap();
    let again = read_snapshots(Cursor::new(&buf)).unwrap();
    assert_eq!(again.len(), seq.len());
    for s in 0..seq.len() {
        assert_eq!(again.edges(s), seq.edges(s));
    }
}

#[test]
fn parallel_and_sequential_agree_bitwise() {
    let sample = make_sample(Family::ActivityBench, &small_params(), 11).unwrap();
    let seq = sample.stream.aggregate_snapshots(4.0).unwrap();
    let lambdas = [0.01, 0.1, 1.0];
    let a = snapshot_entropy_signals(&seq, &lambdas, 2.0, Direction::Forward, Parallelism::Sequential).unwrap();
    let b = snapshot_entropy_signals(&seq, &lambdas, 2.0, Direction::Forward, Parallelism::Rayon).unwrap();
    assert_eq!(a, b);

    let model_s = DiffusionModel::with_parallelism(&sample.stream, Direction::Backward, Parallelism::Sequential).unwrap();
    let model_r = DiffusionModel::with_parallelism(&sample.stream, Direction::Backward, Parallelism::Rayon).unwrap();
    let grid = GridMode::Uniform { step: 5.0 };
    let a = local_entropy_signals(&model_s, &lambdas, 10.0, grid, Parallelism::Sequential).unwrap();
    let b = local_entropy_signals(&model_r, &lambdas, 10.0, grid, Parallelism::Rayon).unwrap();
    assert_eq!(a, b);

    let la = lad_signatures(&seq, 4, Parallelism::Sequential).unwrap();
    let lb = lad_signatures(&seq, 4, Parallelism::Rayon).unwrap();
    assert_eq!(la, lb);
}

#[test]
fn entropy_detects_an_activity_change() {
    let sample = make_sample(Family::ActivityBench, &BenchmarkParams::default(), 5).unwrap();
    let seq = sample.stream.aggregate_snapshots(4.0).unwrap();
    let truth = project_changepoints(&sample.true_changepoints, 4.0);
    let signal = snapshot_entropy_signals(&seq, &[0.1], 2.0, Direction::Forward, Parallelism::default())
        .unwrap()
        .remove(0);
    let seg = segment_fixed_k(&Signal::new(signal.values).unwrap(), truth.len(), 2).unwrap();
    let d = hausdorff_score(&truth, &seg.breakpoints, seq.len()).unwrap();
    assert!(d <= 2.0, "truth {truth:?} found {:?}", seg.breakpoints);
}

#[test]
fn baselines_produce_one_value_per_position() {
    let sample = make_sample(Family::MultiBench, &small_params(), 8).unwrap();
    let seq = sample.stream.aggregate_snapshots(4.0).unwrap();
    let f = frobenius_signal(&seq, 2).unwrap();
    assert_eq!(f.values.len() + f.offset(), seq.len());
    let lad = lad_scores(&lad_signatures(&seq, 4, Parallelism::default()).unwrap(), 3).unwrap();
    assert!(lad.scores.iter().all(|z| (0.0..=1.0 + 1e-12).contains(z)));
}

#[test]
fn global_entropy_stays_under_the_footprint_bound() {
    let sample = merge_split_stream(MergeSplitPattern::B, 0.02, 9).unwrap();
    let model = DiffusionModel::new(&sample.stream, Direction::Forward).unwrap();
    let p0 = Distribution::uniform(sample.stream.node_count());
    for t in [50.0, 150.0, 300.0] {
        let h = global_entropy(&model, 1.0, t, &p0).unwrap();
        assert!(h <= upper_bound(&sample.stream, 0.0, t).unwrap() + 1e-9);
    }
}

#[test]
fn kernel_store_file_round_trip() {
    let sample = make_sample(Family::ActivityBench, &BenchmarkParams { node_count: 12, t_max: 30.0, change_margin: 5.0, ..BenchmarkParams::default() }, 1).unwrap();
    let model = DiffusionModel::new(&sample.stream, Direction::Forward).unwrap();
    let store = KernelStore::build(&model, 0.5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("kernels.bin");
    save_store(&store, &path).unwrap();
    assert_eq!(load_store(&path).unwrap(), store);
}

#[test]
fn signal_files_round_trip() {
    let sample = merge_split_stream(MergeSplitPattern::A, 0.02, 2).unwrap();
    let seq = sample.stream.aggregate_snapshots(10.0).unwrap();
    let s = snapshot_entropy_signals(&seq, &[0.3], 5.0, Direction::Backward, Parallelism::default()).unwrap().remove(0);
    let mut buf = Vec::new();
    write_signal(&s, &mut buf).unwrap();
    assert_eq!(read_signal(Cursor::new(&buf)).unwrap(), s);
}
