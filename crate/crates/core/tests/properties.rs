//! Randomized properties across modules. Inputs come from a seeded RNG so
//! that proptest shrinks over seeds rather than over matrices.

use lgps_core::lg::{joint_probability, k3, k3_with_deviation, sequential_oracle, PairwisePlans};
use lgps_core::linalg::{frobenius, Basis};
use lgps_core::process::{build_process_state, total_probability, Evolution, Instrument, MeasurementPlan, Scenario};
use lgps_core::random;
use lgps_core::structure::{condition_residual, qc_projection, Condition, ConditionBases, QcPair};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scenario(r: &mut ChaCha8Rng, ds: usize, de: usize, n: usize) -> Scenario {
    Scenario::new(
        random::random_density(r, ds),
        random::random_density(r, de),
        Evolution::Unitaries((1..n).map(|_| random::haar_unitary(r, ds * de)).collect()),
    )
    .unwrap()
}

fn plan(r: &mut ChaCha8Rng, d: usize, n: usize) -> MeasurementPlan {
    MeasurementPlan::new(
        (0..n)
            .map(|_| {
                if r.random_bool(0.3) {
                    Instrument::Unmeasured
                } else {
                    let values = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
                    Instrument::projective(random::random_basis(r, d), values).unwrap()
                }
            })
            .collect(),
    )
    .unwrap()
}

fn dichotomic(bases: &[Basis]) -> MeasurementPlan {
    MeasurementPlan::new(bases.iter().map(|b| Instrument::dichotomic(b.clone()).unwrap()).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn process_state_matches_sequential_simulation(seed: u64, ds in 2usize..4, de in 1usize..3, n in 2usize..5) {
        let n = if ds == 3 { n.min(3) } else { n };
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let s = scenario(&mut r, ds, de, n);
        let p = plan(&mut r, ds, n);
        let ps = build_process_state(&s).unwrap();
        let a = joint_probability(&ps, &p).unwrap();
        let b = sequential_oracle(&s, &p).unwrap();
        for (x, y) in a.probabilities().iter().zip(b.probabilities()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        prop_assert!((a.total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn process_states_are_normalized_and_positive(seed: u64, ds in 1usize..4, de in 1usize..3, n in 2usize..4) {
        let n = if ds == 3 { 2 } else { n };
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let ps = build_process_state(&scenario(&mut r, ds, de, n)).unwrap();
        prop_assert!((total_probability(&ps).unwrap() - 1.0).abs() < 1e-10);
        prop_assert!(ps.is_hermitian(1e-10));
        prop_assert!(ps.min_eigenvalue() > -1e-10);
        prop_assert!((ps.trace() - (ds as f64).powi(n as i32 - 1)).abs() < 1e-8);
    }

    #[test]
    fn projection_is_idempotent_and_satisfies_its_pair(seed: u64, which in 0usize..4) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let ps = build_process_state(&scenario(&mut r, 2, 2, 3)).unwrap();
        let bases = ConditionBases::new(random::random_basis(&mut r, 2), random::random_basis(&mut r, 2));
        let pair = QcPair::ALL[which];
        let qc = qc_projection(&ps, pair, &bases).unwrap();
        let twice = qc_projection(&qc, pair, &bases).unwrap();
        prop_assert!(frobenius(&(qc.matrix() - twice.matrix())) < 1e-12);
        for cnd in [pair.first, pair.second] {
            prop_assert!(condition_residual(&qc, cnd, &bases).unwrap() < 1e-10);
        }
    }

    #[test]
    fn projected_states_obey_the_bound(seed: u64, which in 0usize..4) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let ps = build_process_state(&scenario(&mut r, 2, 2, 3)).unwrap();
        let b: Vec<Basis> = (0..3).map(|_| random::random_basis(&mut r, 2)).collect();
        let qc = qc_projection(&ps, QcPair::ALL[which], &ConditionBases::new(b[0].clone(), b[1].clone())).unwrap();
        let plans = PairwisePlans::from_plan(&dichotomic(&b)).unwrap();
        let rep = k3(&qc, &plans, 1e-10).unwrap();
        prop_assert!(rep.k3 <= 1.0 + 1e-10);
        prop_assert!(rep.lg_satisfied);
    }

    #[test]
    fn deviation_split_reconstructs_k3(seed: u64, which in 0usize..4) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let ps = build_process_state(&scenario(&mut r, 2, 2, 3)).unwrap();
        let b: Vec<Basis> = (0..3).map(|_| random::random_basis(&mut r, 2)).collect();
        let qc = qc_projection(&ps, QcPair::ALL[which], &ConditionBases::new(b[0].clone(), b[1].clone())).unwrap();
        let plans = PairwisePlans::from_plan(&dichotomic(&b)).unwrap();
        let rep = k3_with_deviation(&ps, &qc, &plans, 1e-10).unwrap();
        prop_assert!((rep.reconstructed_k3().unwrap() - rep.k3).abs() < 1e-10);
    }

    #[test]
    fn residuals_are_basis_relative(seed: u64) {
        // A state diagonal in one basis passes 1A there; the same process
        // seen through a rotated basis generally does not.
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let b = random::random_basis(&mut r, 2);
        let p = random::random_probabilities(&mut r, 2);
        let rho0 = b.projector(0) * lgps_core::linalg::c(p[0], 0.) + b.projector(1) * lgps_core::linalg::c(p[1], 0.);
        let s = Scenario::new(rho0, random::random_density(&mut r, 2),
            Evolution::Unitaries((0..2).map(|_| random::haar_unitary(&mut r, 4)).collect())).unwrap();
        let ps = build_process_state(&s).unwrap();
        let other = random::random_basis(&mut r, 2);
        prop_assert!(condition_residual(&ps, Condition::C1A, &ConditionBases::new(b, other.clone())).unwrap() < 1e-10);
    }
}
