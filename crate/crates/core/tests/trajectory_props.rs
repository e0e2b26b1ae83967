mod common;

use common::*;
use proptest::prelude::*;
use trajent::lindblad::OpenSystemModel;
use trajent::opalg::{vector_norm, ComplexMatrix, DensityMatrix};
use trajent::trajectory::{
    master_step, sme_increment, step_sme, step_sme_kraus, step_sse, InnovationPath,
};
use trajent::{Tolerances, C};

fn model(d: usize, eta: f64) -> impl Strategy<Value = OpenSystemModel<f64>> {
    (hermitian(d, 1.0), bounded(d, 1.0), bounded(d, 0.5))
        .prop_map(move |(h, l1, l2)| OpenSystemModel::new(h, vec![l1, l2], 0, eta).unwrap())
}

fn setup(eta: f64) -> impl Strategy<Value = (OpenSystemModel<f64>, DensityMatrix<f64>)> {
    dim().prop_flat_map(move |d| (model(d, eta), density(d, 0.0)))
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn increment_keeps_trace(
        (m, rho) in (0.0..=1.0f64).prop_flat_map(setup),
        z in -4.0..4.0f64,
        dt in 1e-5..1e-2f64,
    ) {
        let inc = sme_increment(rho.matrix(), &m, dt, z * dt.sqrt()).unwrap();
        let drift = (rho.matrix() + &inc).trace().re - 1.0;
        prop_assert!(drift.abs() <= 10.0 * dt * dt);
    }

    #[test]
    fn zero_efficiency_step_is_the_master_step((m, rho) in setup(0.0), dw in -0.1..0.1f64) {
        let a = step_sme(&rho, &m, 1e-3, dw).unwrap();
        let b = master_step(&rho, &m, 1e-3).unwrap();
        prop_assert!(a.matrix().max_abs_diff(b.matrix()) <= 1e-15);
    }

    #[test]
    fn kraus_step_yields_a_state(
        (m, rho) in (0.0..=1.0f64).prop_flat_map(setup),
        z in -4.0..4.0f64,
    ) {
        let dt = 1e-3;
        let (next, spec) = step_sme_kraus(&rho, &m, dt, z * dt.sqrt(), &Tolerances::default()).unwrap();
        prop_assert!((next.matrix().trace().re - 1.0).abs() <= 1e-12);
        prop_assert!(spec.min_eigenvalue() >= -1e-12);
        prop_assert!(next.matrix().asymmetry() <= 1e-12);
    }

    #[test]
    fn kraus_step_keeps_pure_states_pure(
        (h, l, psi) in dim().prop_flat_map(|d| (
            hermitian(d, 1.0),
            bounded(d, 1.0),
            prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), d),
        )),
        z in -4.0..4.0f64,
    ) {
        let psi: Vec<C<f64>> = psi.iter().map(|&(a, b)| C::new(a, b)).collect();
        prop_assume!(vector_norm(&psi) > 0.1);
        let m = OpenSystemModel::single(h, l, 1.0).unwrap();
        let rho = DensityMatrix::pure(&psi).unwrap();
        let dt = 1e-3;
        let tol = Tolerances { repair_tol: 1e-10, ..Tolerances::default() };
        let (next, _) = step_sme_kraus(&rho, &m, dt, z * dt.sqrt(), &tol).unwrap();
        prop_assert!((next.purity() - 1.0).abs() <= 1e-12);
        let sse = step_sse(&psi.iter().map(|x| x / vector_norm(&psi)).collect::<Vec<_>>(), &m, dt, z * dt.sqrt()).unwrap();
        prop_assert!((vector_norm(&sse) - 1.0).abs() <= 1e-12);
        let gap = next.matrix().max_abs_diff(&ComplexMatrix::outer(&sse, &sse));
        prop_assert!(gap <= 10.0 * dt.powf(1.5), "gap {gap:e}");
    }

    #[test]
    fn innovation_paths_are_reproducible(seed in any::<u64>(), traj in 0u64..1000, n in 2usize..64) {
        let a = InnovationPath::generate(seed, traj, 1e-3, 2 * n);
        prop_assert_eq!(&a, &InnovationPath::generate(seed, traj, 1e-3, 2 * n));
        let c = a.coarsen();
        prop_assert_eq!(c.len(), n);
        for (k, x) in c.increments.iter().enumerate() {
            prop_assert_eq!(*x, a.increments[2 * k] + a.increments[2 * k + 1]);
        }
        // a prefix does not depend on the path length
        let short = InnovationPath::generate(seed, traj, 1e-3, n);
        prop_assert_eq!(&short.increments[..], &a.increments[..n]);
    }
}
