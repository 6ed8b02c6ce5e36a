use std::path::Path;

use bathy_core::contour::Pose;
use bathy_core::geometry::{point_in_polygon, Point, Polygon};
use bathy_core::sim::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn plane(offset: f64, gx: f64, gy: f64) -> BathymetryField {
    BathymetryField::new(
        FieldKind::Plane(Plane { offset, gx, gy }),
        Some([-20.0, -20.0, 520.0, 520.0]),
    )
    .unwrap()
}

/// 120 m square over a plane deepening south; the 4.4 m contour runs along y = 60.
fn small() -> (MissionConfig, BathymetryField, Polygon) {
    let field = BathymetryField::new(
        FieldKind::Plane(Plane {
            offset: 6.8,
            gx: 0.0,
            gy: -0.04,
        }),
        Some([-20.0, -20.0, 140.0, 140.0]),
    )
    .unwrap();
    let poly = Polygon::rectangle(Point::new(0.0, 0.0), Point::new(120.0, 120.0)).unwrap();
    let cfg = MissionConfig {
        z_t: 4.4,
        start: [60.0, 100.0],
        seed: 7,
        ..MissionConfig::default()
    };
    (cfg, field, poly)
}

fn canonical() -> ResolvedScenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/canonical.toml");
    load_scenario(&path, &[]).unwrap()
}

fn dist_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.norm2()).clamp(0.0, 1.0);
    p.dist(a.lerp(b, t))
}

#[test]
fn plane_depth_formula() {
    let f = plane(5.0, 0.0, -0.01);
    assert!((true_depth(&f, Point::new(250.0, 350.0)).unwrap() - 1.5).abs() < 1e-12);
}

#[test]
fn bump_peak_adds_to_base() {
    let f = BathymetryField::new(
        FieldKind::GaussianSum {
            base: Plane {
                offset: 2.0,
                gx: 0.0,
                gy: 0.0,
            },
            bumps: vec![Bump {
                x: 10.0,
                y: 20.0,
                amplitude: 3.0,
                width: 7.0,
            }],
        },
        Some([0.0, 0.0, 100.0, 100.0]),
    )
    .unwrap();
    assert_eq!(true_depth(&f, Point::new(10.0, 20.0)).unwrap(), 5.0);
}

#[test]
fn grid_nodes_are_exact() {
    let values: Vec<f64> = (0..12).map(|k| 1.0 + 0.37 * k as f64).collect();
    let g = DepthGrid {
        origin: [10.0, -5.0],
        spacing: [2.0, 3.0],
        nx: 4,
        ny: 3,
        values: values.clone(),
    };
    let f = BathymetryField::new(FieldKind::Grid(g), None).unwrap();
    for j in 0..3 {
        for i in 0..4 {
            let p = Point::new(10.0 + 2.0 * i as f64, -5.0 + 3.0 * j as f64);
            assert_eq!(true_depth(&f, p).unwrap(), values[j * 4 + i]);
        }
    }
    // midpoint of a cell is the average of its corners
    let mid = true_depth(&f, Point::new(11.0, -3.5)).unwrap();
    assert!((mid - (values[0] + values[1] + values[4] + values[5]) / 4.0).abs() < 1e-12);
}

#[test]
fn outside_box_is_an_error() {
    let f = plane(5.0, 0.0, -0.01);
    assert!(matches!(
        true_depth(&f, Point::new(600.0, 0.0)),
        Err(SimError::OutOfField { .. })
    ));
}

#[test]
fn noiseless_sonar_is_exact() {
    let f = plane(5.0, 0.003, -0.01);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = Point::new(123.0, 321.0);
    assert_eq!(
        sonar_sample(&f, p, 0.0, &mut rng).unwrap(),
        true_depth(&f, p).unwrap()
    );
}

#[test]
fn sonar_noise_has_requested_spread() {
    let f = plane(5.0, 0.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = Point::new(100.0, 100.0);
    let s: Vec<f64> = (0..10_000)
        .map(|_| sonar_sample(&f, p, 0.115, &mut rng).unwrap() - 5.0)
        .collect();
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    let var = s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (s.len() - 1) as f64;
    assert!(
        (var.sqrt() / 0.115 - 1.0).abs() < 0.05,
        "std {}",
        var.sqrt()
    );
}

#[test]
fn sonar_is_seed_deterministic() {
    let f = plane(5.0, 0.0, 0.0);
    let draw = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..100)
            .map(|_| sonar_sample(&f, Point::new(1.0, 1.0), 0.2, &mut rng).unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(draw(5), draw(5));
    assert_ne!(draw(5), draw(6));
}

#[test]
fn vessel_examples() {
    let s = VesselState {
        pose: Pose::new(0.0, 0.0, 0.0),
        speed: 1.0,
        clock: 0.0,
    };
    let a = step_vessel(&s, 0.0, 1.0, 0.1);
    assert!((a.pose.y - 1.0).abs() < 1e-12 && a.pose.x.abs() < 1e-12);
    let b = step_vessel(&s, 1.0, 1.0, f64::INFINITY);
    assert!((b.pose.psi - 1.0).abs() < 1e-12);
    let c = step_vessel(&s, 1.0, 1.0, 0.25);
    assert!((c.pose.psi - 0.25).abs() < 1e-12);
}

#[test]
fn defaults_match_parameter_table() {
    let c = MissionConfig::default();
    assert_eq!((c.z_t, c.r, c.delta, c.psi_sd), (4.5, 5.0, 10.0, 0.0));
    assert_eq!(c.start, [250.0, 350.0]);
    assert_eq!(
        (c.speed, c.refit_period, c.control_rate, c.ema_half_life),
        (1.0, 30.0, 1.0, 5.0)
    );
    assert_eq!((c.init_duration, c.init_radius), (50.0, 5.0));
    assert_eq!(c.turn_rate(), f64::INFINITY);
    assert_eq!(c.ffcb().closure_radius(), 7.5);
}

#[test]
fn canonical_scenario_loads_and_overrides() {
    let base = canonical();
    assert_eq!(base.scenario.mission.z_t, 4.5);
    assert!(base.polygon.area() > 1.5e5);
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/canonical.toml");
    let ov = load_scenario(&path, &["z_t=4.0".into(), "field.base.offset=6.0".into()]).unwrap();
    assert_eq!(ov.scenario.mission.z_t, 4.0);
    match &ov.scenario.field.kind {
        FieldKind::GaussianSum { base, .. } => assert_eq!(base.offset, 6.0),
        k => panic!("unexpected field {k:?}"),
    }
    assert_ne!(ov.config_hash(), base.config_hash());
    assert_eq!(base.config_hash(), canonical().config_hash());
}

#[test]
fn bad_scenarios_are_rejected() {
    let dir = Path::new(".");
    let field = "[field]\nkind = \"plane\"\noffset = 3.0\nbounds = [0.0, 0.0, 10.0, 10.0]\n";
    let poly = "polygon = [[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]]\n";
    assert!(parse_scenario(&format!("{poly}{field}"), dir, &[]).is_ok());
    assert!(matches!(
        parse_scenario(&format!("{poly}{field}[mission]\nbogus = 1\n"), dir, &[]),
        Err(SimError::Config(_))
    ));
    assert!(matches!(
        parse_scenario(&format!("{poly}{field}"), dir, &["speed=-1".into()]),
        Err(SimError::Config(_))
    ));
    assert!(matches!(
        parse_scenario(&format!("polygon = \"missing.csv\"\n{field}"), dir, &[]),
        Err(SimError::Io(_))
    ));
}

#[test]
fn manifest_scenario_round_trips() {
    let sc = canonical();
    let dir = tempfile::tempdir().unwrap();
    let mut m = Manifest::new("run", Some(1), sc.config_hash());
    m.scenario = Some(sc.scenario.clone());
    m.write(dir.path()).unwrap();
    let back = load_scenario(&dir.path().join("manifest.json"), &[]).unwrap();
    assert_eq!(back.scenario, sc.scenario);
    assert_eq!(back.config_hash(), sc.config_hash());
}

#[test]
fn canonical_field_is_non_negative() {
    let sc = canonical();
    assert!(min_depth_on_lattice(&sc.scenario.field, 5.0).unwrap() >= 0.0);
    // the target contour meets the polygon on at least two edges
    let z_t = sc.scenario.mission.z_t;
    let crossed = sc
        .polygon
        .edges()
        .filter(|&(a, b)| {
            let n = 50;
            (0..n).any(|k| {
                let za =
                    true_depth(&sc.scenario.field, a.lerp(b, k as f64 / n as f64)).unwrap() - z_t;
                let zb = true_depth(&sc.scenario.field, a.lerp(b, (k + 1) as f64 / n as f64))
                    .unwrap()
                    - z_t;
                za * zb <= 0.0
            })
        })
        .count();
    assert!(crossed >= 2, "{crossed}");
}

#[test]
fn small_mission_invariants() {
    let (cfg, field, poly) = small();
    let log = run_mission(&cfg, &field, &poly).unwrap();

    assert!(log.b_cont_closed());
    assert!(log.closure_gap.unwrap() <= cfg.ffcb().closure_radius());
    assert!(log.b_cont.iter().all(|&p| point_in_polygon(p, &poly)));
    let traced = log.traced_polygon.as_ref().unwrap();
    let plan = log.plan.as_ref().unwrap();
    assert!(!plan.cells().is_empty());
    assert!(plan.points().iter().all(|&p| point_in_polygon(p, traced)));
    // the traced region is the deep side of y = 60
    assert!(
        (traced.area() - 120.0 * 60.0).abs() < 0.15 * 120.0 * 60.0,
        "{}",
        traced.area()
    );

    // one ping per tick plus the one at t = 0, strictly increasing in time
    assert_eq!(log.measurements.len(), log.poses.len());
    assert!(log.measurements.windows(2).all(|w| w[1].t > w[0].t));
    for (m, p) in log.measurements.iter().zip(&log.poses) {
        assert_eq!((m.t, m.x, m.y), (p.t, p.x, p.y));
        assert_eq!(m.depth, true_depth(&field, Point::new(m.x, m.y)).unwrap());
    }

    // refits start every period after the first fit, within a tick
    let init_end = log.init_end.unwrap();
    assert_eq!(log.hypers[0].t_start, init_end);
    for (k, h) in log.hypers.iter().enumerate() {
        let want = init_end + k as f64 * cfg.refit_period;
        assert!(
            (h.t_start - want).abs() <= cfg.dt() + 1e-9,
            "refit {k} at {}",
            h.t_start
        );
        assert!(h.t_applied >= h.t_start);
    }
    assert!(log.hypers.len() >= 2);

    // coverage stays within two steps of the planned route
    let pts = plan.points();
    let bound = 2.0 * cfg.speed / cfg.control_rate;
    for p in log.poses.iter().filter(|p| p.phase == Phase::Coverage) {
        let q = Point::new(p.x, p.y);
        let d = pts
            .windows(2)
            .map(|w| dist_to_segment(q, w[0], w[1]))
            .fold(f64::INFINITY, f64::min);
        assert!(d <= bound, "cross-track {d} at t = {}", p.t);
    }

    let u = log.uncertainty.unwrap();
    assert!(u.probes > 0 && u.mean_std < 0.1 * u.sigma_f);
}

#[test]
fn missions_are_deterministic() {
    let (mut cfg, field, poly) = small();
    cfg.sonar_noise = 0.05;
    cfg.max_turn_rate = Some(0.5);
    let a = run_mission(&cfg, &field, &poly).unwrap();
    let b = run_mission(&cfg, &field, &poly).unwrap();
    assert_eq!(a, b);
    cfg.seed += 1;
    let c = run_mission(&cfg, &field, &poly).unwrap();
    assert_ne!(a.measurements, c.measurements);
}

#[test]
fn faster_sonar_pings_between_ticks() {
    let (mut cfg, field, poly) = small();
    cfg.sonar_rate = 3.0;
    cfg.max_time = 60.0;
    let err = run_mission(&cfg, &field, &poly).unwrap_err();
    assert!(matches!(err.error, SimError::Timeout(_)));
    let log = err.log;
    assert_eq!(log.measurements.len(), 1 + 3 * (log.poses.len() - 1));
    assert!(log.measurements.windows(2).all(|w| w[1].t > w[0].t));
}

#[test]
fn start_outside_polygon_is_rejected() {
    let (mut cfg, field, poly) = small();
    cfg.start = [130.0, 60.0];
    let err = run_mission(&cfg, &field, &poly).unwrap_err();
    assert!(matches!(err.error, SimError::Config(_)));
    assert!(err.log.poses.is_empty());
}

#[test]
fn mission_log_writes_artifacts() {
    let (mut cfg, field, poly) = small();
    cfg.max_time = 200.0;
    let log = match run_mission(&cfg, &field, &poly) {
        Ok(l) => l,
        Err(a) => *a.log,
    };
    let dir = tempfile::tempdir().unwrap();
    let files = write_mission_log(dir.path(), &log).unwrap();
    for f in [
        "trace.csv",
        "measurements.csv",
        "hypers.csv",
        "b_cont.geojson",
        "controller.csv",
    ] {
        assert!(files.iter().any(|x| x == f), "{f}");
        assert!(dir.path().join(f).exists());
    }
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), log.poses.len() + 1);
}
