use std::collections::BTreeMap;
use std::path::Path;

use restorex_core::fixtures::{generate, FixtureSpec};
use restorex_core::monitor::{stage_quality, trajectory};
use restorex_core::{Decision, GuidancePolicy, PairingMode, SimilarityMode, SimilarityTable};

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn targets_are_hit() {
    let dir = tempfile::tempdir().unwrap();
    let spec = FixtureSpec {
        seed: 42,
        n_images: 10,
        n_stages: 2,
        phi_targets: Some(vec![0.2, 0.6]),
        ..Default::default()
    };
    let fx = generate(&spec, dir.path()).unwrap();
    let table = SimilarityTable::default_table(SimilarityMode::Grouped);
    for (entry, target) in fx.manifest.clone().resolve_paths(dir.path()).stages.iter().zip([0.2, 0.6]) {
        let q = stage_quality(entry, &table, PairingMode::PrimaryObject).unwrap();
        assert_eq!(q.n, 10);
        assert!((q.phi - target).abs() <= f64::EPSILON, "stage {} phi {}", q.stage_id, q.phi);
    }
}

#[test]
fn same_seed_same_bytes() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let spec = FixtureSpec::default();
    generate(&spec, a.path()).unwrap();
    generate(&spec, b.path()).unwrap();
    generate(&FixtureSpec { seed: 7, ..spec }, c.path()).unwrap();
    let (sa, sb, sc) = (snapshot(a.path()), snapshot(b.path()), snapshot(c.path()));
    assert!(sa.len() > 10);
    assert_eq!(sa, sb);
    assert_ne!(sa, sc);
}

#[test]
fn dip_then_recovery_flags_once() {
    let dir = tempfile::tempdir().unwrap();
    let spec = FixtureSpec {
        n_images: 100,
        phi_targets: Some(vec![0.11, 0.01, 0.01, 0.17, 0.48]),
        tensor_dims: (2, 4, 4),
        ..Default::default()
    };
    let fx = generate(&spec, dir.path()).unwrap();
    let manifest = restorex_core::StageManifest::load(&fx.manifest_path).unwrap();
    let table = SimilarityTable::load(&fx.similarity_path).unwrap();
    let policy = GuidancePolicy::from_json(&std::fs::read_to_string(&fx.policy_path).unwrap()).unwrap();
    let t = trajectory(&manifest, &table, &policy, PairingMode::PrimaryObject).unwrap();
    assert_eq!(
        t.decisions(),
        vec![Decision::Continue, Decision::Flag, Decision::Continue, Decision::Continue, Decision::Continue]
    );
    assert_eq!(t.rollback_to, None);
    for (phi, want) in t.phis().iter().zip([0.11, 0.01, 0.01, 0.17, 0.48]) {
        assert!((phi - want).abs() < 1e-12);
    }
    let att = t.stages[0].attention.as_ref().unwrap();
    assert_eq!(att.images, 100);
    assert!(att.mean_in_box.unwrap() > 0.0);
}
