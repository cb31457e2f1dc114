use aggregation_core::analysis::{
    beurling_scan, bound_audit, growth_exponent, kesten_bound_check, reference_dimensions, waiting_times, GrowthEntry,
    GrowthRecord,
};
use aggregation_core::io::{cluster_to_csv, parse_cluster_csv, parse_growth_csv, growth_to_csv, render_pgm};
use aggregation_core::lattice::{Cluster, Site};
use aggregation_core::{rng, run_simulation, Error, ModelConfig, ModelKind};

fn synthetic(n_max: u64, f: impl Fn(f64) -> f64) -> GrowthRecord {
    GrowthRecord::from_entries((1..=n_max).map(|n| GrowthEntry { n, rad: f(n as f64) }).collect()).unwrap()
}

#[test]
fn waiting_time_examples() {
    let lin = synthetic(50, |n| n - 1.0);
    for w in waiting_times(&lin) {
        assert_eq!(w.t, w.r + 1);
    }
    let sq = synthetic(400, f64::sqrt);
    for w in waiting_times(&sq) {
        assert_eq!(w.t, w.r * w.r);
    }
}

#[test]
fn waiting_times_and_radii_are_dual() {
    let run = run_simulation(&ModelConfig::new(ModelKind::Ballistic), 2, 3000, 5, 0).unwrap();
    let rec = &run.growth;
    let t = waiting_times(rec);
    for w in &t {
        // R(T(r)) >= r
        assert!(rec.entries()[(w.t - 1) as usize].rad >= w.r as f64);
    }
    for e in rec.entries().iter().filter(|e| e.rad >= 1.0) {
        // T(R(n)) <= n
        let r = e.rad.floor() as u64;
        assert!(t[(r - 1) as usize].t <= e.n);
    }
}

#[test]
fn exponent_examples() {
    let f = growth_exponent(&synthetic(20_000, f64::sqrt), 0.5).unwrap();
    assert!((f.alpha_hat - 0.5).abs() < 1e-6);
    assert!((f.delta_hat - 2.0).abs() < 1e-5);
    let f = growth_exponent(&synthetic(20_000, |n| n), 0.5).unwrap();
    assert!((f.alpha_hat - 1.0).abs() < 1e-9);
    assert!(matches!(
        growth_exponent(&synthetic(10, |n| n), 0.5),
        Err(Error::TooFewEntries { .. })
    ));
}

#[test]
fn kesten_example() {
    let k = kesten_bound_check(&synthetic(5000, |n| 2.0 * n.sqrt()), 1.0).unwrap();
    assert!((k.c_fit - 2.0).abs() < 1e-12);
}

#[test]
fn eden_scan_uses_exact_boundary_mass() {
    let config = ModelConfig::new(ModelKind::Eden);
    let run = run_simulation(&config, 2, 10_000, 3, 1000).unwrap();
    let checkpoints = run.checkpoint_clusters().unwrap();
    let mut r = rng::stream(3, "scan", 0);
    let scan = beurling_scan(&checkpoints, &config, 1, &mut r).unwrap();
    for (p, c) in scan.points.iter().zip(&checkpoints) {
        assert_eq!(p.max_mass, 1.0 / c.boundary().len() as f64);
    }
    // q_hat is minus the least-squares slope of ln(1/#boundary) on ln rad
    let xy: Vec<(f64, f64)> = checkpoints
        .iter()
        .map(|c| (c.radius().ln(), -(c.boundary().len() as f64).ln()))
        .collect();
    let k = xy.len() as f64;
    let (mx, my) = (xy.iter().map(|p| p.0).sum::<f64>() / k, xy.iter().map(|p| p.1).sum::<f64>() / k);
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    assert!((scan.q_hat + sxy / sxx).abs() < 1e-9, "{}", scan.q_hat);
    assert!(scan.q_hat > 0.5 && scan.q_hat < 2.0);
    assert!(beurling_scan(&checkpoints[..4], &config, 1, &mut r).is_err());
}

#[test]
fn audits_hold_on_examples_and_runs() {
    let a4: Vec<Site> = (0..=4).map(|k| Site::from([k, 0])).collect();
    let c = Cluster::from_attach_order(2, &a4).unwrap();
    assert_eq!(c.boundary().len(), 12);
    assert!(bound_audit(&c).all_pass());
    assert!(bound_audit(&Cluster::new(2).unwrap()).all_pass());
    for kind in ModelKind::ALL {
        let mut config = ModelConfig::new(kind);
        config.dla_accelerate = true;
        for dim in [2, 3] {
            let run = run_simulation(&config, dim, 1500, 8, 100).unwrap();
            for c in run.checkpoint_clusters().unwrap() {
                let a = bound_audit(&c);
                assert!(a.all_pass(), "{kind} d={dim}: {a:?}");
            }
        }
    }
}

#[test]
fn reference_dimension_annotations() {
    let dla = reference_dimensions(ModelKind::Dla, 2);
    assert!((dla[0].1 - 5.0 / 3.0).abs() < 1e-12);
    assert_eq!(reference_dimensions(ModelKind::Eden, 3)[0].1, 3.0);
}

#[test]
fn files_round_trip() {
    let run = run_simulation(&ModelConfig::new(ModelKind::Eden), 3, 200, 1, 0).unwrap();
    let text = cluster_to_csv(3, run.cluster.sites());
    assert_eq!(text.lines().count(), 201);
    let (dim, sites) = parse_cluster_csv(&text).unwrap();
    assert_eq!(Cluster::from_attach_order(dim, &sites).unwrap(), run.cluster);
    let g = parse_growth_csv(&growth_to_csv(&run.growth)).unwrap();
    assert_eq!(g.entries(), run.growth.entries());
}

#[test]
fn render_example() {
    let img = render_pgm(&[Site::origin(2)], false).unwrap();
    assert!(img.starts_with(b"P5\n3 3\n255\n"));
    assert_eq!(img[img.len() - 9 + 4], 0);
}
