use llpd::spectral::{run, ClusterConfig, Method, SINGLE_CLUSTER_LAMBDA_2};
use llpd::{generate, DatasetKind, Error, GeneratorSpec, LabeledPointCloud, PointCloud, NOISE};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn dataset(kind: DatasetKind, scale: f64) -> LabeledPointCloud {
    generate(&GeneratorSpec::new(kind).with_scale(scale)).unwrap()
}

#[test]
fn nine_gaussians_llpd() {
    let data = dataset(DatasetKind::NineGaussians, 1.0);
    let out = run(Method::Llpd, &data, &ClusterConfig::default()).unwrap();
    assert_eq!(out.report.k_hat, Some(9));
    assert!(out.report.oa.unwrap() >= 0.98, "{:?}", out.report.oa);
    assert!(!out.report.diagnostics.single_cluster);
    assert_eq!(out.report.diagnostics.eigensolver_converged, Some(true));
}

#[test]
fn nine_gaussians_euclidean() {
    let data = dataset(DatasetKind::NineGaussians, 1.0);
    let out = run(Method::Euclidean, &data, &ClusterConfig::default()).unwrap();
    assert!(out.report.oa.unwrap() >= 0.95, "{:?}", out.report.oa);
}

#[test]
fn labels_cover_exactly_the_survivors() {
    let data = dataset(DatasetKind::NineGaussians, 1.0);
    let out = run(Method::Llpd, &data, &ClusterConfig::default()).unwrap();
    assert_eq!(out.labels.len(), data.len());
    assert_eq!(out.labels.iter().filter(|&&l| l != NOISE).count(), out.report.n_kept);
    for &i in &out.denoise.removed_indices {
        assert_eq!(out.labels[i], NOISE);
    }
    assert!(out.labels.iter().all(|&l| l as usize <= out.report.k_used));
}

#[test]
fn fixed_k_skips_estimation() {
    let data = dataset(DatasetKind::NineGaussians, 1.0);
    let config = ClusterConfig {
        k: Some(4),
        ..ClusterConfig::default()
    };
    let out = run(Method::Llpd, &data, &config).unwrap();
    assert_eq!(out.report.k_hat, None);
    assert_eq!(out.report.k_used, 4);
    let mut used: Vec<_> = out.labels.iter().copied().filter(|&l| l != NOISE).collect();
    used.sort_unstable();
    used.dedup();
    assert_eq!(used, vec![1, 2, 3, 4]);
    // emitted count differs from the truth
    assert!(out.report.oa_emitted.is_some());
}

#[test]
fn euclidean_refuses_large_samples() {
    let data = dataset(DatasetKind::FourLines, 0.05);
    match run(Method::Euclidean, &data, &ClusterConfig::default()) {
        Err(Error::TooLarge { n, cutoff }) => assert!(n > cutoff),
        other => panic!("expected TooLarge, got {:?}", other.map(|o| o.report.n_kept)),
    }
}

#[test]
fn four_lines_denoising_keeps_the_lines() {
    let data = dataset(DatasetKind::FourLines, 0.05);
    let out = run(Method::Llpd, &data, &ClusterConfig::default()).unwrap();
    let kept = out.report.n_kept as f64 / data.len() as f64;
    assert!((0.789..=0.889).contains(&kept), "kept {kept}");
    assert_eq!(out.report.k_hat, Some(4));
    assert!(out.report.oa.unwrap() >= 0.99);
}

#[test]
fn one_tight_blob_is_flagged() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let normal = Normal::new(0.0, 0.1).unwrap();
    let points = PointCloud::new((0..1000).map(|_| normal.sample(&mut rng)).collect(), 2).unwrap();
    let data = LabeledPointCloud::new(points, vec![1; 500], 1).unwrap();
    let out = run(Method::Llpd, &data, &ClusterConfig::default()).unwrap();
    let lambda_2 = out.report.diagnostics.lambda_2.unwrap();
    assert!(lambda_2 > SINGLE_CLUSTER_LAMBDA_2, "lambda_2 = {lambda_2}");
    assert!(out.report.diagnostics.single_cluster);
}

#[test]
fn kmeans_uses_the_true_count() {
    let data = dataset(DatasetKind::NineGaussians, 1.0);
    let out = run(Method::Kmeans, &data, &ClusterConfig::default()).unwrap();
    assert_eq!(out.report.k_used, 9);
    assert!(out.sweep.is_none());
    assert_eq!(out.report.diagnostics.eigensolver_converged, None);
}

#[test]
fn report_json_keys() {
    let data = dataset(DatasetKind::NineGaussians, 1.0);
    let out = run(Method::Llpd, &data, &ClusterConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    out.report.save_json(&path).unwrap();
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    for key in ["params", "K_hat", "sigma_hat", "theta", "n", "N", "oa", "aa", "kappa", "diagnostics", "timings_ms", "schema_version"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["K_hat"], 9);
    assert_eq!(json["params"]["kNoise"], 20);
    let timings = json["timings_ms"].as_object().unwrap();
    assert!(timings.contains_key("sweep") && timings.contains_key("eigs"));
}

#[test]
fn runs_are_reproducible() {
    let data = dataset(DatasetKind::NineGaussians, 0.5);
    let a = run(Method::Llpd, &data, &ClusterConfig::default()).unwrap();
    let b = run(Method::Llpd, &data, &ClusterConfig::default()).unwrap();
    assert_eq!(a.labels, b.labels);
    assert_eq!(a.report.sigma_hat, b.report.sigma_hat);
}
