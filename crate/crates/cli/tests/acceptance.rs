//! End-to-end acceptance checks. Prints one PASS/FAIL line per check and
//! exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use sqt_core::bloch::{born_probability, purity, to_bloch};
use sqt_core::projection::{robinson_project, GeoPoint};
use sqt_core::reconstruction::{lr_reconstruct, mle_gradient, mle_objective, mle_reconstruct};
use sqt_core::scan::{compare_estimators, fibonacci_sphere, run_scan};
use sqt_core::seed::rng_from_seed;
use sqt_core::viz::{render_vfv, VfvStyle};
use sqt_core::{
    BlochVector, NoiseSpec, ReconstructionInput, ScanConfig, ScanResult, SolverOptions,
};
use sqt_oracles::{
    axes_for_case, central_difference, distance, lr_ball_qp, mle_grid_polish, noisy_observations,
    random_in_ball, random_unit, tetrahedral_axes, uniform_observations, Observation, Vec3,
};

type Check = fn() -> Result<String, String>;

fn sqt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqt"))
        .args(args)
        .env_remove("SQT_SEED")
        .env_remove("SQT_THREADS")
        .output()
        .expect("run sqt")
}

fn sqt_ok(args: &[&str]) -> Output {
    let out = sqt(args);
    assert!(
        out.status.success(),
        "sqt {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn global_max(study: &Value, label: &str) -> f64 {
    study["series"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["label"] == label)
        .unwrap_or_else(|| panic!("no series {label}"))["global_max_p99"]
        .as_f64()
        .unwrap()
}

fn check(cond: bool, detail: String) -> Result<String, String> {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn statistical_error_calibration() -> Result<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("study.json");
    let o = out.to_str().unwrap();
    sqt_ok(&[
        "study", "--mode", "error", "--shots", "20000", "--trials", "2000", "--seed", "1", "--out",
        o,
    ]);
    let study = read_json(&out);
    assert_eq!(
        study["series"][0]["per_state"].as_array().unwrap().len(),
        20
    );
    let (mle, lr) = (global_max(&study, "mle"), global_max(&study, "lr"));
    check(
        mle <= 0.02 && lr <= 0.02,
        format!("global max p99: mle {mle:.5}, lr {lr:.5} (limit 0.02)"),
    )
}

fn estimator_agreement() -> Result<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("study.json");
    let o = out.to_str().unwrap();
    sqt_ok(&[
        "study",
        "--mode",
        "agreement",
        "--shots",
        "20000",
        "--trials",
        "2000",
        "--seed",
        "2",
        "--out",
        o,
    ]);
    let d = global_max(&read_json(&out), "lr-mle");
    check(
        d <= 0.02,
        format!("p99 of | |a_LR| - |a_MLE| |: {d:.2e} (limit 0.02)"),
    )
}

fn scan(noise: NoiseSpec, delay_t: f64, seed: u64) -> ScanResult {
    run_scan(&ScanConfig {
        n_states: 200,
        shots: 20_000,
        noise,
        delay_t,
        master_seed: seed,
        ..ScanConfig::default()
    })
    .unwrap()
}

fn ideal_regime() -> Result<String, String> {
    let s = scan(NoiseSpec::ideal(), 0.0, 3);
    let mean = s.summary.mean_purity.unwrap();
    let doc = render_vfv(&s, &VfvStyle::default()).unwrap();
    check(
        mean >= 0.998 && doc.arrows == 0 && s.summary.excluded == 0,
        format!(
            "mean purity {mean:.5} (>= 0.998), arrows {} (0)",
            doc.arrows
        ),
    )
}

/// Depolarizing strength giving mean purity 0.972 for pure inputs.
fn depolarizing_for(target: f64) -> f64 {
    1.0 - (2.0 * target - 1.0).sqrt()
}

fn noisy_homogeneity() -> Result<String, String> {
    let s = scan(NoiseSpec::depolarizing(depolarizing_for(0.972)), 0.0, 4);
    let mean = s.summary.mean_purity.unwrap();
    let std = s.summary.std_purity.unwrap();
    let arrows = render_vfv(&s, &VfvStyle::default()).unwrap().arrows;
    check(
        std <= 0.005 && arrows == 0 && (mean - 0.972).abs() <= 0.002,
        format!("std purity {std:.5} (<= 0.005), arrows {arrows} (0), mean {mean:.5} (target 0.972 +- 0.002)"),
    )
}

/// Lattice-averaged purity after relaxation toward |0> then depolarization.
fn predicted_delay_purity(t: f64, t1: f64, t2: f64, p: f64) -> f64 {
    let states = fibonacci_sphere(200);
    let total: f64 = states
        .iter()
        .map(|&s| {
            let a = to_bloch(s);
            let (dt2, dt1) = ((-t / t2).exp(), (-t / t1).exp());
            let v = BlochVector::new(a.x * dt2, a.y * dt2, 1.0 - (1.0 - a.z) * dt1) * (1.0 - p);
            purity(v)
        })
        .sum();
    total / states.len() as f64
}

fn delay_trend() -> Result<String, String> {
    let (t1, t2, p) = (45_000.0, 60_000.0, depolarizing_for(0.972));
    let noise = NoiseSpec {
        depolarizing_p: p,
        t1: Some(t1),
        t2: Some(t2),
        ..NoiseSpec::default()
    };
    let mut means = Vec::new();
    let mut worst_gap = 0.0f64;
    for t in [0.0, 800.0, 1600.0] {
        let m = scan(noise, t, 5).summary.mean_purity.unwrap();
        worst_gap = worst_gap.max((m - predicted_delay_purity(t, t1, t2, p)).abs());
        means.push(m);
    }
    check(
        means[0] > means[1] && means[1] > means[2] && worst_gap <= 0.002,
        format!(
            "mean purity {:.4} > {:.4} > {:.4}; max deviation from model {worst_gap:.1e} (<= 0.002)",
            means[0], means[1], means[2]
        ),
    )
}

fn corruption_detector() -> Result<String, String> {
    let clean = compare_estimators(&scan(NoiseSpec::ideal(), 0.0, 6), 0.02).unwrap();
    let corrupted_noise = NoiseSpec {
        rot_error_scale: 0.08,
        ..NoiseSpec::default()
    };
    let corrupted = compare_estimators(&scan(corrupted_noise, 0.0, 6), 0.02).unwrap();
    let (c, d) = (clean.flagged_fraction, corrupted.flagged_fraction);
    check(
        c <= 0.01 && d > c,
        format!("flagged fraction: clean {c:.3} (<= 0.01), corrupted {d:.3}"),
    )
}

fn bv(a: Vec3) -> BlochVector {
    BlochVector::new(a[0], a[1], a[2])
}

fn arr(a: BlochVector) -> Vec3 {
    [a.x, a.y, a.z]
}

fn input_of(obs: &[Observation]) -> ReconstructionInput {
    ReconstructionInput::from_probabilities(obs.iter().map(|o| (bv(o.axis), o.p)), 20_000).unwrap()
}

fn oracle_equivalence() -> Result<String, String> {
    let mut rng = rng_from_seed(8001);
    let mut mle_gap = 0.0f64;
    for case in 0..50 {
        let obs = noisy_observations(&axes_for_case(case, &mut rng), &mut rng);
        let ours = mle_reconstruct(&input_of(&obs), &SolverOptions::default()).unwrap();
        mle_gap = mle_gap.max(distance(
            arr(ours.estimate),
            mle_grid_polish(&obs, 0.01, 200),
        ));
    }
    let mut lr_gap = 0.0f64;
    for case in 0..50 {
        let axes = axes_for_case(case, &mut rng);
        let obs = if case % 2 == 0 {
            noisy_observations(&axes, &mut rng)
        } else {
            uniform_observations(&axes, &mut rng)
        };
        let ours = lr_reconstruct(&input_of(&obs)).unwrap();
        lr_gap = lr_gap.max(distance(arr(ours.estimate), lr_ball_qp(&obs)));
    }
    let mut grad_gap = 0.0f64;
    for case in 0..100 {
        let input = input_of(&noisy_observations(
            &axes_for_case(case, &mut rng),
            &mut rng,
        ));
        let a = random_in_ball(&mut rng, 0.9);
        let analytic = arr(mle_gradient(bv(a), &input));
        let numeric = central_difference(|x| mle_objective(bv(x), &input), a, 1e-6);
        for i in 0..3 {
            grad_gap = grad_gap.max((analytic[i] - numeric[i]).abs());
        }
    }
    check(
        mle_gap <= 2e-3 && lr_gap <= 1e-9 && grad_gap <= 1e-5,
        format!("MLE vs grid {mle_gap:.1e} (2e-3), LR vs QP {lr_gap:.1e} (1e-9), gradient vs FD {grad_gap:.1e} (1e-5)"),
    )
}

fn exact_probability_consistency() -> Result<String, String> {
    let mut rng = rng_from_seed(8002);
    let axes = tetrahedral_axes();
    let (mut mle_gap, mut lr_gap) = (0.0f64, 0.0f64);
    for i in 0..25 {
        let a = bv(if i % 5 == 0 {
            random_unit(&mut rng)
        } else {
            random_in_ball(&mut rng, 1.0)
        });
        let pairs = axes
            .iter()
            .map(|&u| (bv(u), born_probability(a, bv(u)).unwrap()));
        let input = ReconstructionInput::from_probabilities(pairs, 20_000).unwrap();
        mle_gap = mle_gap.max(
            mle_reconstruct(&input, &SolverOptions::default())
                .unwrap()
                .estimate
                .distance(a),
        );
        lr_gap = lr_gap.max(lr_reconstruct(&input).unwrap().estimate.distance(a));
    }
    check(
        mle_gap <= 1e-6 && lr_gap <= 1e-12,
        format!("max error: MLE {mle_gap:.1e} (1e-6), LR {lr_gap:.1e} (1e-12)"),
    )
}

const TABLE_X: [f64; 19] = [
    1.0000, 0.9986, 0.9954, 0.9900, 0.9822, 0.9730, 0.9600, 0.9427, 0.9216, 0.8962, 0.8679, 0.8350,
    0.7986, 0.7597, 0.7186, 0.6732, 0.6213, 0.5722, 0.5322,
];
const TABLE_Y: [f64; 19] = [
    0.0000, 0.0620, 0.1240, 0.1860, 0.2480, 0.3100, 0.3720, 0.4340, 0.4958, 0.5571, 0.6176, 0.6769,
    0.7346, 0.7903, 0.8435, 0.8936, 0.9394, 0.9761, 1.0000,
];

fn projection_correctness() -> Result<String, String> {
    let mut knots = 0;
    for (i, (&tx, &ty)) in TABLE_X.iter().zip(&TABLE_Y).enumerate() {
        let lat = 5.0 * i as f64;
        for lon in [0.0, 90.0, -90.0, 180.0, -180.0f64] {
            for sign in [1.0, -1.0] {
                let p = robinson_project(GeoPoint::new(sign * lat, lon));
                let x = 0.8487 * tx * lon.to_radians();
                let y = 1.3523 * ty;
                if p.x != x || p.y != sign * y {
                    return Err(format!(
                        "knot lat {} lon {lon}: got ({}, {})",
                        sign * lat,
                        p.x,
                        p.y
                    ));
                }
                knots += 1;
            }
        }
    }
    let mut rng = rng_from_seed(8003);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let u = random_unit(&mut rng);
        let g = GeoPoint::new(u[2].asin().to_degrees(), u[1].atan2(u[0]).to_degrees());
        let p = robinson_project(g);
        let mirrored_lon = robinson_project(GeoPoint::new(g.latitude, -g.longitude));
        let mirrored_lat = robinson_project(GeoPoint::new(-g.latitude, g.longitude));
        worst = worst
            .max((p.x + mirrored_lon.x).abs())
            .max((p.y + mirrored_lat.y).abs());
    }
    check(
        worst <= 1e-12,
        format!("{knots} knot evaluations exact; max symmetry defect {worst:.1e} (1e-12)"),
    )
}

fn determinism() -> Result<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let noise = r#"{"rot_error_scale": 0.08, "depolarizing_p": 0.02}"#;
    for k in ["a", "b"] {
        sqt_ok(&[
            "scan",
            "--states",
            "200",
            "--shots",
            "20000",
            "--seed",
            "7",
            "--noise",
            noise,
            "--out",
            &p(&format!("scan-{k}.json")),
        ]);
        sqt_ok(&[
            "study",
            "--trials",
            "200",
            "--states",
            "5",
            "--seed",
            "7",
            "--out",
            &p(&format!("study-{k}.json")),
        ]);
        sqt_ok(&[
            "render",
            "--in",
            &p("scan-a.json"),
            "--out",
            &p(&format!("vfv-{k}.svg")),
        ]);
    }
    let mut identical = Vec::new();
    for (a, b) in [
        ("scan-a.json", "scan-b.json"),
        ("study-a.json", "study-b.json"),
        ("vfv-a.svg", "vfv-b.svg"),
    ] {
        let (x, y) = (std::fs::read(p(a)).unwrap(), std::fs::read(p(b)).unwrap());
        if x != y {
            return Err(format!("{a} and {b} differ"));
        }
        identical.push(format!("{a} ({} bytes)", x.len()));
    }
    let svg = std::fs::read_to_string(p("vfv-a.svg")).unwrap();
    check(
        svg.contains("class=\"arrow\""),
        format!("byte-identical reruns: {}", identical.join(", ")),
    )
}

fn main() {
    let checks: [(&str, Check); 10] = [
        (
            "statistical error calibration",
            statistical_error_calibration,
        ),
        ("estimator agreement", estimator_agreement),
        ("ideal-regime scan", ideal_regime),
        ("noisy-regime homogeneity", noisy_homogeneity),
        ("delay degradation trend", delay_trend),
        ("corruption detector", corruption_detector),
        ("oracle equivalence", oracle_equivalence),
        (
            "exact-probability consistency",
            exact_probability_consistency,
        ),
        ("projection correctness", projection_correctness),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, f)) in checks.iter().enumerate() {
        let started = std::time::Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("acceptance {:>2} PASS {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("acceptance {:>2} FAIL {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        checks.len() - failures
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
