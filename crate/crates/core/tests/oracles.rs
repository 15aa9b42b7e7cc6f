use sqt_core::reconstruction::{lr_reconstruct, mle_gradient, mle_objective, mle_reconstruct};
use sqt_core::seed::rng_from_seed;
use sqt_core::{BlochVector, ReconstructionInput, SolverOptions};
use sqt_oracles::{
    axes_for_case, central_difference, distance, lr_ball_qp, mle_grid_polish, noisy_observations,
    random_in_ball, uniform_observations, Observation, Vec3,
};

fn bv(a: Vec3) -> BlochVector {
    BlochVector::new(a[0], a[1], a[2])
}

fn arr(a: BlochVector) -> Vec3 {
    [a.x, a.y, a.z]
}

fn input_of(obs: &[Observation]) -> ReconstructionInput {
    ReconstructionInput::from_probabilities(obs.iter().map(|o| (bv(o.axis), o.p)), 1000).unwrap()
}

#[test]
fn mle_matches_grid_and_polish_oracle() {
    let mut rng = rng_from_seed(7001);
    let mut worst = 0.0f64;
    for case in 0..50 {
        let axes = axes_for_case(case, &mut rng);
        let obs = noisy_observations(&axes, &mut rng);
        let oracle = mle_grid_polish(&obs, 0.01, 200);
        let ours = mle_reconstruct(&input_of(&obs), &SolverOptions::default()).unwrap();
        let d = distance(arr(ours.estimate), oracle);
        worst = worst.max(d);
        assert!(
            d <= 2e-3,
            "case {case}: solver {:?} oracle {oracle:?}",
            ours.estimate
        );
    }
    println!("max MLE-oracle distance {worst:e}");
}

#[test]
fn lr_matches_ball_qp_oracle() {
    let mut rng = rng_from_seed(7002);
    for case in 0..200 {
        let axes = axes_for_case(case, &mut rng);
        let obs = if case % 2 == 0 {
            noisy_observations(&axes, &mut rng)
        } else {
            uniform_observations(&axes, &mut rng)
        };
        let oracle = lr_ball_qp(&obs);
        let ours = lr_reconstruct(&input_of(&obs)).unwrap();
        let d = distance(arr(ours.estimate), oracle);
        assert!(d <= 1e-9, "case {case}: {d:e}");
    }
}

#[test]
fn mle_objective_agrees_with_independent_likelihood() {
    let mut rng = rng_from_seed(7003);
    for case in 0..50 {
        let axes = axes_for_case(case, &mut rng);
        let obs = noisy_observations(&axes, &mut rng);
        let a = random_in_ball(&mut rng, 0.95);
        let ours = mle_objective(bv(a), &input_of(&obs));
        // ln(1 + a.u) = ln q + ln 2: the library drops the constant.
        let theirs =
            sqt_oracles::log_likelihood(&obs, a) + obs.len() as f64 * std::f64::consts::LN_2;
        assert!(
            (ours - theirs).abs() <= 1e-12 * theirs.abs().max(1.0),
            "{ours} vs {theirs}"
        );
    }
}

#[test]
fn mle_gradient_matches_central_differences() {
    let mut rng = rng_from_seed(7004);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let axes = axes_for_case(case, &mut rng);
        let obs = noisy_observations(&axes, &mut rng);
        let input = input_of(&obs);
        let a = random_in_ball(&mut rng, 0.9);
        let analytic = arr(mle_gradient(bv(a), &input));
        let numeric = central_difference(|x| mle_objective(bv(x), &input), a, 1e-6);
        for i in 0..3 {
            let err = (analytic[i] - numeric[i]).abs();
            worst = worst.max(err);
            assert!(
                err <= 1e-5,
                "case {case} component {i}: {analytic:?} vs {numeric:?}"
            );
        }
    }
    println!("max gradient error {worst:e}");
}

#[test]
fn oracle_axes_match_the_catalogs() {
    use sqt_core::measurement::{pauli_catalog, tetrahedral_catalog};
    for (ours, theirs) in [
        (tetrahedral_catalog(), sqt_oracles::tetrahedral_axes()),
        (pauli_catalog(), sqt_oracles::pauli_axes()),
    ] {
        for (b, u) in ours.bases.iter().zip(theirs) {
            assert!(distance(arr(b.axis), u) < 1e-15, "{}", b.id);
        }
    }
}
