use tuckermesh::{
    decode, encode, encode_with_ranks, load_animation, measured_cr, run_sweep, save_animation,
    synthesize, AnimationFormat, CompressedAnimation, EncodeOptions, Method, Metric, Precision,
    PreparedAnimation, Strategy, SweepSpec, SynthKind, SynthParams,
};

fn asset(kind: SynthKind, k: usize, frames: usize, seed: u64) -> tuckermesh::AnimationSequence {
    let mut p = SynthParams::new(kind, k, frames);
    p.seed = seed;
    synthesize(&p).unwrap()
}

#[test]
fn rigid_asset_decodes_at_minimal_ranks() {
    let anim = asset(SynthKind::Rigid, 120, 25, 3);
    let enc = encode_with_ranks(&anim, 3, 1, Precision::Double).unwrap();
    let back = decode(&enc.container).unwrap();
    let err = anim.vertices().relative_error(&back).unwrap();
    assert!(err < 1e-9, "relative error {err}");
    assert!(enc.degenerate_frames.is_empty());
}

#[test]
fn lowrank_asset_decodes_at_its_ranks() {
    let anim = asset(SynthKind::LowRank, 144, 30, 8);
    let enc = encode_with_ranks(&anim, 4, 3, Precision::Double).unwrap();
    let back = decode(&enc.container).unwrap();
    assert!(anim.vertices().relative_error(&back).unwrap() < 1e-9);
    let under = encode_with_ranks(&anim, 3, 2, Precision::Double).unwrap();
    assert!(
        anim.vertices()
            .relative_error(&decode(&under.container).unwrap())
            .unwrap()
            > 1e-6
    );
}

#[test]
fn encoded_file_round_trips_through_disk() {
    let anim = asset(SynthKind::Mixed, 100, 20, 1);
    let mut opts = EncodeOptions::new(0.2);
    opts.delta = 0.01;
    let enc = encode(&anim, &opts).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.hsvz");
    enc.container.write(&path).unwrap();
    let back = CompressedAnimation::read(&path).unwrap();
    assert_eq!(back, enc.container);
    assert_eq!(decode(&back).unwrap(), decode(&enc.container).unwrap());
    assert!((enc.outcome.plan.achieved_cr - 0.2).abs() <= 0.01);
    assert!(measured_cr(&back) > enc.outcome.plan.achieved_cr);
}

#[test]
fn obj_and_raw_sequences_round_trip() {
    let anim = asset(SynthKind::Bulge, 36, 4, 0);
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("a.manm");
    save_animation(&anim, &raw, AnimationFormat::Raw).unwrap();
    let back = load_animation(&raw, AnimationFormat::detect(&raw)).unwrap();
    assert_eq!(back.vertices(), anim.vertices());
    assert_eq!(back.topology(), anim.topology());

    let objs = dir.path().join("seq");
    save_animation(&anim, &objs, AnimationFormat::ObjSequence).unwrap();
    let back = load_animation(&objs, AnimationFormat::detect(&objs)).unwrap();
    assert!(back.vertices().relative_error(anim.vertices()).unwrap() < 1e-12);
    assert_eq!(back.topology(), anim.topology());
}

#[test]
fn truncation_error_shrinks_with_nested_ranks() {
    let anim = asset(SynthKind::Bulge, 100, 24, 5);
    let prepared = PreparedAnimation::new(&anim).unwrap();
    let x = &prepared.rigid().normalized;
    let err = |v, f| {
        let y = prepared.truncate(v, f).unwrap().reconstruct().unwrap();
        x.difference(&y).unwrap().frobenius_norm()
    };
    for f in [1, 4, 12, 24] {
        let mut last = f64::INFINITY;
        for v in [1, 2, 5, 10, 30, 100] {
            let e = err(v, f);
            assert!(
                e <= last * (1.0 + 1e-12) + 1e-12,
                "v={v} f={f}: {e} > {last}"
            );
            last = e;
        }
    }
    assert!(err(100, 24) < 1e-10 * x.frobenius_norm());
}

#[test]
fn sweep_covers_every_cell() {
    let assets = [asset(SynthKind::Mixed, 100, 16, 2)];
    let mut spec = SweepSpec::new(vec![60.0, 80.0]);
    spec.metrics = vec![Metric::Mse, Metric::Hausdorff];
    let rows = run_sweep(&assets, &spec).unwrap();
    assert_eq!(rows.len(), 2 * 2 * (2 + 1));
    for row in &rows {
        assert!(row.error.is_none(), "{row:?}");
        assert_eq!(row.strategy.is_none(), row.method == Method::Pca);
    }
    let iterative = rows
        .iter()
        .filter(|r| r.strategy == Some(Strategy::Iterative) && r.metric == Metric::Mse);
    let diagonal = rows
        .iter()
        .filter(|r| r.strategy == Some(Strategy::Diagonal) && r.metric == Metric::Mse);
    for (it, di) in iterative.zip(diagonal) {
        assert_eq!(it.target_ss, di.target_ss);
        assert!(it.value.unwrap() <= di.value.unwrap() * (1.0 + 1e-12));
    }
}
