use dcftrack_core::evaluation::dataset::{format_ground_truth, parse_ground_truth_line};
use dcftrack_core::evaluation::protocol::{
    generate_sre_initializations, generate_tre_starts, run_reset_protocol_with, run_tracker, SequenceTracker,
};
use dcftrack_core::evaluation::report::{
    compare_results, read_results_csv, summarize, write_results_csv, write_summary_csv,
};
use dcftrack_core::evaluation::{
    center_error, compute_metrics, evaluate_sequence, iou, load_otb_sequence, render_synthetic, run_benchmark,
    write_otb_sequence, Protocol, SyntheticSpec,
};
use dcftrack_core::{BoundingBox, Error, GrayImage, Result, TrackerConfig, TrackerKind};

fn b(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
    BoundingBox::new(x, y, w, h).unwrap()
}

#[test]
fn iou_and_center_error_by_hand() {
    let a = b(0.0, 0.0, 4.0, 4.0);
    assert_eq!(iou(&a, &a), 1.0);
    // 2×4 overlap over 16 + 16 − 8
    assert!((iou(&a, &b(2.0, 0.0, 4.0, 4.0)) - 8.0 / 24.0).abs() < 1e-15);
    // touching edges do not overlap
    assert_eq!(iou(&a, &b(4.0, 0.0, 4.0, 4.0)), 0.0);
    assert_eq!(iou(&a, &b(10.0, 10.0, 1.0, 1.0)), 0.0);
    // nested box: 1/16
    assert!((iou(&a, &b(1.0, 1.0, 1.0, 1.0)) - 1.0 / 16.0).abs() < 1e-15);
    assert_eq!(center_error(&a, &b(3.0, 4.0, 4.0, 4.0)), 5.0);
}

#[test]
fn metric_thresholds_are_strict() {
    let gt = vec![b(0.0, 0.0, 10.0, 10.0); 2];
    // IoU exactly 0.5 and center error exactly 20 both miss
    let pred = vec![b(0.0, 0.0, 5.0, 10.0), b(20.0, 0.0, 10.0, 10.0)];
    let m = compute_metrics(&pred, &gt).unwrap();
    assert_eq!(m.ious[0], 0.5);
    assert_eq!(m.center_errors[1], 20.0);
    assert_eq!(m.op, 0.0);
    assert_eq!(m.dp, 0.5);
    assert_eq!(m.success_curve.len(), 21);
    assert_eq!(m.success_curve[0], 1.0);
    assert!(compute_metrics(&pred[..1], &gt).is_err());
}

/// Frozen at the first box; never moves.
struct Frozen(Option<BoundingBox>);

impl SequenceTracker for Frozen {
    fn initialize(&mut self, _: &GrayImage, bbox: BoundingBox) -> Result<()> {
        self.0 = Some(bbox);
        Ok(())
    }

    fn update(&mut self, _: &GrayImage) -> Result<BoundingBox> {
        self.0.ok_or_else(|| Error::InvalidState("not initialized".into()))
    }
}

#[test]
fn reset_protocol_skips_and_restarts() {
    let spec = SyntheticSpec::builtin("exit", 1).unwrap();
    let seq = render_synthetic(&spec).unwrap();
    let out = run_reset_protocol_with(&mut Frozen(None), &seq).unwrap();
    // target 20 px wide moving 1.9 px/frame: disjoint once 1.9·k ≥ 20
    let first_fail = (1..).find(|&k| 1.9 * k as f64 >= 20.0).unwrap();
    assert!(out.failures >= 1);
    assert_eq!(out.initializations[0], 0);
    assert_eq!(out.initializations[1], first_fail + 5);
    for k in first_fail + 1..first_fail + 5 {
        assert!(!out.evaluated.contains(&k));
    }
    let mean = out.overlaps.iter().sum::<f64>() / out.overlaps.len() as f64;
    assert!((out.mean_overlap - mean).abs() < 1e-15);
    assert_eq!(out.predictions.len(), out.evaluated.len());
}

#[test]
fn run_tracker_times_and_keeps_init_box() {
    let seq = render_synthetic(&SyntheticSpec::builtin("smoke", 1).unwrap()).unwrap();
    let out = run_tracker(&mut Frozen(None), &seq.frames, seq.ground_truth[0]).unwrap();
    assert_eq!(out.predictions.len(), seq.len());
    assert!(out.predictions.iter().all(|p| *p == seq.ground_truth[0]));
    assert!(out.fps() > 0.0);
}

#[test]
fn sre_and_tre_generators() {
    let gt = b(20.0, 30.0, 40.0, 10.0);
    let boxes = generate_sre_initializations(&gt);
    assert_eq!(boxes.len(), 12);
    let shifted = boxes.iter().filter(|x| x.width == 40.0 && x.height == 10.0).count();
    assert_eq!(shifted, 8);
    for x in &boxes[..8] {
        let (dx, dy) = ((x.x - gt.x).abs(), (x.y - gt.y).abs());
        assert!(dx == 0.0 || (dx - 4.0).abs() < 1e-12);
        assert!(dy == 0.0 || (dy - 1.0).abs() < 1e-12);
    }
    for (x, f) in boxes[8..].iter().zip([0.8, 0.9, 1.1, 1.2]) {
        assert!((x.width - 40.0 * f).abs() < 1e-12);
        let (cx, cy) = x.center();
        assert!((cx - 40.0).abs() < 1e-12 && (cy - 35.0).abs() < 1e-12);
    }
    assert_eq!(generate_tre_starts(100), (0..20).map(|i| 5 * i).collect::<Vec<_>>());
    assert_eq!(generate_tre_starts(7), (0..7).collect::<Vec<_>>());
    let s = generate_tre_starts(53);
    assert_eq!(s.len(), 20);
    assert!(s.windows(2).all(|w| w[0] < w[1]) && s[0] == 0 && *s.last().unwrap() < 53);
}

#[test]
fn synthetic_zoom_ground_truth() {
    let spec = SyntheticSpec::builtin("zoom", 1).unwrap();
    let seq = render_synthetic(&spec).unwrap();
    assert_eq!((seq.frames[0].width(), seq.frames[0].height(), seq.len()), (128, 128, 100));
    let g0 = seq.ground_truth[0];
    let g50 = seq.ground_truth[50];
    // linear zoom: 1 + 0.5·50/99
    let want = 1.0 + 0.5 * 50.0 / 99.0;
    assert!((g50.width - want * g0.width).abs() <= 1.0);
    assert!((spec.scale_at(99) - 1.5).abs() < 1e-15);

    let still = render_synthetic(&SyntheticSpec {
        noise: 0.0,
        ..SyntheticSpec::builtin("static", 2).unwrap()
    })
    .unwrap();
    assert!(still.frames.iter().all(|f| f == &still.frames[0]));
}

#[test]
fn synthetic_rendering_is_seeded() {
    let a = render_synthetic(&SyntheticSpec::builtin("pan", 3).unwrap()).unwrap();
    let b = render_synthetic(&SyntheticSpec::builtin("pan", 3).unwrap()).unwrap();
    let c = render_synthetic(&SyntheticSpec::builtin("pan", 4).unwrap()).unwrap();
    assert_eq!(a.frames, b.frames);
    assert_ne!(a.frames[0], c.frames[0]);
}

#[test]
fn spec_text_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec::builtin("occlusion", 5).unwrap();
    let path = dir.path().join("spec.txt");
    std::fs::write(&path, spec.to_text()).unwrap();
    let back = SyntheticSpec::load(&path).unwrap();
    assert_eq!(render_synthetic(&back).unwrap().frames, render_synthetic(&spec).unwrap().frames);
}

#[test]
fn otb_directory_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let seq = render_synthetic(&SyntheticSpec::builtin("smoke", 2).unwrap()).unwrap();
    write_otb_sequence(&seq, dir.path()).unwrap();
    let back = load_otb_sequence(dir.path()).unwrap();
    assert_eq!(back.ground_truth, seq.ground_truth);
    for (a, b) in back.frames.iter().zip(&seq.frames) {
        assert_eq!(a.to_luma8(), b.to_luma8());
    }
}

#[test]
fn ground_truth_lines_are_one_based() {
    let boxes = vec![b(0.0, 0.0, 10.0, 12.5), b(3.25, 4.0, 1.0, 2.0)];
    let text = format_ground_truth(&boxes);
    assert_eq!(text, "1,1,10,12.5\n4.25,5,1,2\n");
    let back: Vec<_> = text.lines().map(|l| parse_ground_truth_line(l).unwrap()).collect();
    assert_eq!(back, boxes);
}

#[test]
fn broken_datasets_are_ingestion_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_otb_sequence(dir.path()), Err(Error::Ingestion { .. })));
    let seq = render_synthetic(&SyntheticSpec::builtin("smoke", 1).unwrap()).unwrap();
    write_otb_sequence(&seq, dir.path()).unwrap();
    let gt = dir.path().join("groundtruth_rect.txt");
    std::fs::write(&gt, "1,2,3\n").unwrap();
    assert!(matches!(load_otb_sequence(dir.path()), Err(Error::Ingestion { .. })));
    std::fs::write(&gt, "1,1,4,4\n").unwrap();
    assert!(matches!(load_otb_sequence(dir.path()), Err(Error::Ingestion { .. })));
}

#[test]
fn benchmark_order_is_independent_of_threads() {
    let seqs: Vec<_> = ["smoke", "static"]
        .iter()
        .map(|n| {
            render_synthetic(&SyntheticSpec {
                frames: 6,
                ..SyntheticSpec::builtin(n, 1).unwrap()
            })
            .unwrap()
        })
        .collect();
    let trackers: Vec<_> = [TrackerKind::Translation, TrackerKind::Fdsst]
        .iter()
        .map(|&k| (k, TrackerConfig::for_kind(k)))
        .collect();
    let one = run_benchmark(&trackers, &seqs, Protocol::Plain, 1).unwrap();
    let four = run_benchmark(&trackers, &seqs, Protocol::Plain, 4).unwrap();
    let key = |r: &dcftrack_core::evaluation::SequenceResult| (r.sequence.clone(), r.tracker, r.metrics.ious.clone());
    assert_eq!(one.iter().map(key).collect::<Vec<_>>(), four.iter().map(key).collect::<Vec<_>>());
    assert_eq!(one[0].sequence, seqs[0].name);
    assert_eq!(one[1].tracker, TrackerKind::Fdsst);
}

#[test]
fn protocols_report_their_frame_counts() {
    let seq = render_synthetic(&SyntheticSpec {
        frames: 8,
        ..SyntheticSpec::builtin("static", 1).unwrap()
    })
    .unwrap();
    let cfg = TrackerConfig::for_kind(TrackerKind::Translation);
    let sre = evaluate_sequence(TrackerKind::Translation, &cfg, &seq, Protocol::Sre).unwrap();
    assert_eq!(sre.metrics.ious.len(), 12 * 8);
    let tre = evaluate_sequence(TrackerKind::Translation, &cfg, &seq, Protocol::Tre).unwrap();
    // fewer frames than segments: one restart per frame, lengths 8, 7, …, 1
    assert_eq!(tre.metrics.ious.len(), (1..=8).sum::<usize>());
    let reset = evaluate_sequence(TrackerKind::Translation, &cfg, &seq, Protocol::Reset).unwrap();
    assert_eq!(reset.metrics.failures, Some(0));
    assert!(reset.metrics.mean_overlap.unwrap() > 0.9);
}

#[test]
fn csv_reports_and_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let seq = render_synthetic(&SyntheticSpec {
        frames: 5,
        ..SyntheticSpec::builtin("static", 1).unwrap()
    })
    .unwrap();
    let cfg = TrackerConfig::for_kind(TrackerKind::Translation);
    let r = evaluate_sequence(TrackerKind::Translation, &cfg, &seq, Protocol::Plain).unwrap();
    let path = dir.path().join("results.csv");
    write_results_csv(std::slice::from_ref(&r), &path, false).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "sequence,tracker,OP,DP,AUC,FPS,failures,mean_overlap");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[1], "translation");
    assert_eq!(row[2], format!("{:.6}", r.metrics.op));
    assert_eq!(row[5], "");

    write_results_csv(std::slice::from_ref(&r), &path, true).unwrap();
    let rows = read_results_csv(&path).unwrap();
    assert!(rows[0].values["FPS"].unwrap() > 0.0);
    assert_eq!(rows[0].values["failures"], None);

    let mut after = rows.clone();
    after[0].values.insert("OP".into(), Some(0.25));
    let deltas = compare_results(&rows, &after);
    let op = deltas.iter().find(|d| d.metric == "OP").unwrap();
    assert!((op.delta().unwrap() - (0.25 - r.metrics.op)).abs() < 1e-6);
    assert!(deltas.iter().all(|d| d.metric != "failures"));

    let summary = summarize(&[r.clone(), r]);
    assert_eq!(summary.len(), 1);
    write_summary_csv(&summary, &dir.path().join("summary.csv"), false).unwrap();
}
