use confined_diffusion::harness::*;
use proptest::prelude::*;

fn bump(n: usize) -> Profile {
    let x: Vec<f64> = (0..n).map(|i| -0.5 + i as f64 / (n - 1) as f64).collect();
    let v = x.iter().map(|x| 1.0 + 0.4 * (6.0 * x).cos()).collect();
    Profile::new(x, v, None).unwrap()
}

#[test]
fn self_comparison_is_exact() {
    let p = bump(101);
    let r = compare_densities(&p, &p).unwrap();
    assert_eq!((r.rel_l2, r.linf, r.points), (0.0, 0.0, 101));
}

#[test]
fn offset_shows_up_in_linf() {
    let p = bump(101);
    let q = Profile::new(p.x.clone(), p.values.iter().map(|v| v + 0.01).collect(), None).unwrap();
    let r = compare_densities(&q, &p).unwrap();
    assert!((r.linf - 0.01).abs() < 1e-14);
    let norm = p.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((r.rel_l2 - 0.01 * (101f64).sqrt() / norm).abs() < 1e-12);
}

#[test]
fn disjoint_profiles_are_rejected() {
    let a = Profile::new(vec![-0.5, -0.3], vec![1.0, 1.0], None).unwrap();
    let b = Profile::new(vec![0.2, 0.4], vec![1.0, 1.0], None).unwrap();
    assert!(compare_densities(&a, &b).is_err());
    assert!(Profile::new(vec![0.0, 0.0], vec![1.0, 1.0], None).is_err());
}

#[test]
fn coarse_reference_is_interpolated() {
    // Linear profiles interpolate exactly, whichever side is finer.
    let line = |n: usize| {
        let x: Vec<f64> = (0..n).map(|i| -0.5 + i as f64 / (n - 1) as f64).collect();
        let v = x.iter().map(|x| 1.0 + x).collect();
        Profile::new(x, v, None).unwrap()
    };
    let r = compare_densities(&line(11), &line(201)).unwrap();
    assert!(r.rel_l2 < 1e-14 && r.points == 201);
}

#[test]
fn bin_averages_of_a_kinked_line() {
    let p = Profile::new(vec![-0.5, 0.1, 0.5], vec![0.0, 1.2, 1.4], None).unwrap();
    let b = p.bin_average(4).unwrap();
    // Exact cell means of the piecewise linear interpolant.
    let exact = [0.25, 0.75, (0.1 * 1.1 + 0.15 * 1.2375) / 0.25, 1.3375];
    for (v, e) in b.values.iter().zip(exact) {
        assert!((v - e).abs() < 1e-14, "{v} vs {e}");
    }
}

#[test]
fn spread_of_a_histogram() {
    let h = Profile::new(vec![0.0, 1.0, 2.0], vec![1.0, 3.0, 0.5], Some(vec![0.3, 0.4, 0.0])).unwrap();
    let (s, se) = binned_spread(&h);
    assert_eq!(s, 2.5);
    assert!((se - 0.4).abs() < 1e-15);
}

fn read_all(dir: &std::path::Path, names: &[&str]) -> Vec<Vec<u8>> {
    names.iter().map(|n| std::fs::read(dir.join(n)).unwrap()).collect()
}

#[test]
fn smoke_config_replays_byte_for_byte() {
    let cfg = bundled_config("smoke").unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_experiment(&cfg, Some(a.path())).unwrap();
    let rb = run_experiment(&cfg, Some(b.path())).unwrap();
    assert!(ra.passed(), "{}", ra.render());
    let files = ["pde_narrow.csv", "sde.csv"];
    assert_eq!(read_all(a.path(), &files), read_all(b.path(), &files));
    assert_eq!(ra.comparisons, rb.comparisons);
    let text = std::fs::read_to_string(a.path().join("report.txt")).unwrap();
    assert!(text.starts_with("experiment smoke\n") && text.ends_with("result PASS\n"));
    let sde = std::fs::read_to_string(a.path().join("sde.csv")).unwrap();
    assert_eq!(sde.lines().nth(1), Some("t,x,p,stderr"));
}

fn csv_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn replays(name: &str) {
    let cfg = bundled_config(name).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&cfg, Some(a.path())).unwrap();
    run_experiment(&cfg, Some(b.path())).unwrap();
    let (fa, fb) = (csv_bytes(a.path()), csv_bytes(b.path()));
    assert!(!fa.is_empty());
    assert_eq!(fa, fb, "{name}");
}

#[test]
fn fast_bundled_configs_replay() {
    for name in ["fig8", "ratchet_flux", "ratchet_profiles"] {
        replays(name);
    }
}

/// Includes the Monte Carlo configs; takes about a quarter of an hour.
#[test]
#[ignore]
fn every_bundled_config_replays() {
    for (name, _) in bundled_configs() {
        replays(name);
    }
}

#[test]
fn width_sweep_trends() {
    let text = r#"
name = "sweep"
experiment = "width_sweep"
h_values = [0.5, 1.0, 2.0, 4.0]
n = 30
phi = 0.05
times = [0.05]
grid = 101
"#;
    let cfg = ExperimentConfig::parse(text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let r = run_experiment(&cfg, Some(dir.path())).unwrap();
    for name in ["singlefile_distance_increasing", "bulk_distance_decreasing"] {
        assert!(r.check(name).unwrap().passed, "{}", r.render());
    }
    let sweep = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 2 + 4);
}

#[test]
fn ratchet_flux_config_runs() {
    let text = r#"
name = "flux"
experiment = "ratchet_flux"
gphi_values = [0.0, 0.5]
f0_values = [-2.0, 0.0, 2.0]
grid = 128
"#;
    let cfg = ExperimentConfig::parse(text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let r = run_experiment(&cfg, Some(dir.path())).unwrap();
    assert!(r.passed(), "{}", r.render());
    let csv = std::fs::read_to_string(dir.path().join("ratchet_flux.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 6);
}

#[test]
fn bad_configs_fail_before_running() {
    let bad = [
        "name = \"a\"\nexperiment = \"transient\"\nh = 3.0\nn = 10\n",
        "name = \"a\"\nexperiment = \"transient\"\nh = -1.0\nn = 10\neps = 0.01\n",
        "name = \"a\"\nexperiment = \"transient\"\nh = 3.0\nn = 10\neps = 0.01\nbc = \"open\"\n",
        "name = \"a\"\nexperiment = \"width_sweep\"\nn = 30\nphi = 0.05\n",
        "name = \"a\"\nexperiment = \"ratchet_profiles\"\ngphi_values = [0.0]\nf0_values = [1.0]\n",
        "name = \"a\"\nexperiment = \"mh_equilibrium\"\ncase = \"pp\"\nh = 1.0\nn = 5\neps = 0.001\n",
        "name = \"a\"\nexperiment = \"nonsense\"\n",
    ];
    for text in bad {
        assert!(ExperimentConfig::parse(text).is_err(), "{text}");
    }
    assert!(bundled_config("missing").is_err());
    assert_eq!(bundled_configs().len(), 7);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn comparison_is_scale_free(scale in 0.01f64..100.0, shift in -0.05f64..0.05) {
        let p = bump(51);
        let q = Profile::new(p.x.clone(), p.values.iter().map(|v| v + shift).collect(), None).unwrap();
        let scaled = |r: &Profile| Profile::new(r.x.clone(), r.values.iter().map(|v| v * scale).collect(), None).unwrap();
        let a = compare_densities(&q, &p).unwrap();
        let b = compare_densities(&scaled(&q), &scaled(&p)).unwrap();
        prop_assert!((a.rel_l2 - b.rel_l2).abs() <= 1e-12 * a.rel_l2.max(1.0));
        prop_assert!(a.rel_l2 >= 0.0 && a.linf >= 0.0);
    }

    #[test]
    fn bin_average_preserves_mass(n in 3usize..60, bins in 2usize..40) {
        let p = bump(n);
        let b = p.bin_average(bins).unwrap();
        let trap: f64 = p.x.windows(2).zip(p.values.windows(2)).map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1])).sum();
        let mass: f64 = b.values.iter().sum::<f64>() / bins as f64;
        prop_assert!((mass - trap).abs() < 1e-12);
    }
}
