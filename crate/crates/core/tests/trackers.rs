use dcftrack_core::evaluation::{compute_metrics, render_synthetic, Sequence, SyntheticSpec};
use dcftrack_core::{init, BoundingBox, Error, GrayImage, TrackerConfig, TrackerKind};

fn builtin(name: &str) -> Sequence {
    render_synthetic(&SyntheticSpec::builtin(name, 1).unwrap()).unwrap()
}

/// A built-in sequence cut to `frames` frames; the joint trackers are slow.
fn shortened(name: &str, frames: usize) -> Sequence {
    let spec = SyntheticSpec {
        frames,
        ..SyntheticSpec::builtin(name, 1).unwrap()
    };
    render_synthetic(&spec).unwrap()
}

fn run(kind: TrackerKind, cfg: &TrackerConfig, seq: &Sequence) -> Vec<BoundingBox> {
    let mut h = init(kind, &seq.frames[0], seq.ground_truth[0], cfg).unwrap();
    let mut out = vec![seq.ground_truth[0]];
    for f in &seq.frames[1..] {
        out.push(h.track(f).unwrap().0);
    }
    out
}

fn mean_iou(pred: &[BoundingBox], seq: &Sequence) -> f64 {
    let m = compute_metrics(pred, &seq.ground_truth).unwrap();
    m.ious.iter().sum::<f64>() / m.ious.len() as f64
}

#[test]
fn every_kind_holds_a_static_target() {
    let seq = shortened("static", 8);
    for kind in TrackerKind::ALL {
        let pred = run(kind, &TrackerConfig::for_kind(kind), &seq);
        let iou = mean_iou(&pred, &seq);
        assert!(iou > 0.9, "{kind}: mean IoU {iou}");
    }
}

#[test]
fn every_kind_follows_a_panning_target() {
    let seq = shortened("pan", 25);
    for kind in TrackerKind::ALL {
        let pred = run(kind, &TrackerConfig::for_kind(kind), &seq);
        let m = compute_metrics(&pred, &seq.ground_truth).unwrap();
        assert!(m.dp > 0.95, "{kind}: DP {}", m.dp);
    }
}

#[test]
fn scale_trackers_follow_a_shrinking_target() {
    // the joint filter is slow, so it gets the same shrink over fewer frames
    for (kind, frames) in [(TrackerKind::Dsst, 0), (TrackerKind::Fdsst, 0), (TrackerKind::Joint, 30)] {
        let mut spec = SyntheticSpec::builtin("shrink", 1).unwrap();
        if frames > 0 {
            spec.frames = frames;
        }
        let seq = render_synthetic(&spec).unwrap();
        let last = seq.len() - 1;
        let cfg = TrackerConfig::for_kind(kind);
        let mut h = init(kind, &seq.frames[0], seq.ground_truth[0], &cfg).unwrap();
        for f in &seq.frames[1..] {
            h.track(f).unwrap();
        }
        let want = spec.scale_at(last) / spec.scale_at(0);
        let got = h.state().scale;
        assert!((got / want - 1.0).abs() < 0.1, "{kind}: scale {got} vs {want}");
    }
}

#[test]
fn tracking_is_deterministic() {
    let seq = shortened("smoke", 8);
    for kind in [TrackerKind::Fdsst, TrackerKind::IterativeJoint] {
        let cfg = TrackerConfig::for_kind(kind);
        assert_eq!(run(kind, &cfg, &seq), run(kind, &cfg, &seq));
    }
}

#[test]
fn estimates_stay_inside_the_frame() {
    let seq = builtin("exit");
    let (w, h) = (seq.frames[0].width() as f64, seq.frames[0].height() as f64);
    let kinds = [TrackerKind::Translation, TrackerKind::MultiResolution, TrackerKind::Joint, TrackerKind::Dsst, TrackerKind::Fdsst];
    for kind in kinds {
        let cfg = TrackerConfig::for_kind(kind);
        let mut handle = init(kind, &seq.frames[0], seq.ground_truth[0], &cfg).unwrap();
        for f in &seq.frames[1..] {
            handle.track(f).unwrap();
            let (cx, cy) = handle.state().position;
            assert!((0.0..=w).contains(&cx) && (0.0..=h).contains(&cy), "{kind}: ({cx}, {cy})");
            assert!(handle.state().scale > 0.0);
        }
    }
}

#[test]
fn diagnostics_describe_the_active_stages() {
    let seq = builtin("smoke");
    let cfg = TrackerConfig::for_kind(TrackerKind::Fdsst);
    let mut h = init(TrackerKind::Fdsst, &seq.frames[0], seq.ground_truth[0], &cfg).unwrap();
    let (_, d) = h.track(&seq.frames[1]).unwrap();
    assert_eq!(d.scale_scores.len(), cfg.interp_scales);
    let e = d.energy_retained.unwrap();
    assert!(e > 0.0 && e <= 1.0 + 1e-12);
    assert!(d.scale_bin.is_some() && d.scale_peak.is_some());

    let cfg = TrackerConfig::for_kind(TrackerKind::Translation);
    let mut h = init(TrackerKind::Translation, &seq.frames[0], seq.ground_truth[0], &cfg).unwrap();
    let (_, d) = h.track(&seq.frames[1]).unwrap();
    assert!(d.scale_bin.is_none() && d.energy_retained.is_none() && d.scale_scores.is_empty());

    let cfg = TrackerConfig::for_kind(TrackerKind::IterativeJoint);
    let mut h = init(TrackerKind::IterativeJoint, &seq.frames[0], seq.ground_truth[0], &cfg).unwrap();
    for f in &seq.frames[1..6] {
        let (_, d) = h.track(f).unwrap();
        assert!((1..=cfg.max_iterations).contains(&d.iterations));
    }
    assert_eq!(h.frames(), 6);
}

#[test]
fn invalid_inputs_are_rejected() {
    let frame = GrayImage::filled(64, 48, 0.0).unwrap();
    let cfg = TrackerConfig::for_kind(TrackerKind::Dsst);
    let outside = BoundingBox::new(70.0, 10.0, 10.0, 10.0).unwrap();
    assert!(matches!(init(TrackerKind::Dsst, &frame, outside, &cfg), Err(Error::InvalidArgument(_))));
    let tiny = BoundingBox::new(10.0, 10.0, 1.0, 1.0).unwrap();
    assert!(matches!(init(TrackerKind::Dsst, &frame, tiny, &cfg), Err(Error::InvalidArgument(_))));
    assert!(BoundingBox::new(0.0, 0.0, -1.0, 4.0).is_err());

    let mut bad = cfg.clone();
    bad.lambda = 0.0;
    let ok_box = BoundingBox::new(20.0, 10.0, 16.0, 12.0).unwrap();
    assert!(matches!(init(TrackerKind::Dsst, &frame, ok_box, &bad), Err(Error::InvalidArgument(_))));

    let mut h = init(TrackerKind::Dsst, &frame, ok_box, &cfg).unwrap();
    let other = GrayImage::filled(32, 48, 0.0).unwrap();
    assert!(matches!(h.track(&other), Err(Error::InvalidArgument(_))));
}

#[test]
fn blank_frames_do_not_produce_nan() {
    let frame = GrayImage::filled(64, 64, 0.0).unwrap();
    let b = BoundingBox::new(20.0, 20.0, 16.0, 16.0).unwrap();
    for kind in TrackerKind::ALL {
        let mut h = init(kind, &frame, b, &TrackerConfig::for_kind(kind)).unwrap();
        for _ in 0..3 {
            let (out, _) = h.track(&frame).unwrap();
            assert!(out.x.is_finite() && out.width.is_finite(), "{kind}");
        }
    }
}
