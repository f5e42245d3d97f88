use proptest::prelude::*;

use negmc::algebra::assemble::link_parts;
use negmc::algebra::assemble_model;
use negmc::engine::{InitialState, RateTable, Trajectory};
use negmc::gauge::{gauge_residual, optimize_gauge};
use negmc::lattice::{Boundary, Lattice};
use negmc::model::ModelSpec;
use negmc::state::Configuration;

fn fields() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-1.0..1.0f64)
}

fn couplings() -> impl Strategy<Value = [[f64; 3]; 3]> {
    prop::array::uniform3(prop::array::uniform3(-1.0..1.0f64))
}

fn two_site(h: [[f64; 3]; 2], j: [[f64; 3]; 3], noise: [f64; 5], gamma: f64) -> ModelSpec {
    let mut spec = ModelSpec::empty(Lattice::chain(2, Boundary::Open).unwrap());
    spec.local_fields = h.to_vec();
    spec.pair_couplings[0] = j;
    spec.local_noise = vec![noise; 2];
    spec.gamma = gamma;
    spec
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn configuration_text_round_trip(states in prop::collection::vec(0usize..6, 1..40)) {
        let c = Configuration::from_indices(&states).unwrap();
        let back: Configuration = c.to_string().parse().unwrap();
        prop_assert_eq!(&back, &c);
        if states.len() <= 8 {
            prop_assert_eq!(Configuration::from_dense_index(states.len(), c.dense_index()).unwrap(), c);
        }
    }

    #[test]
    fn gauge_never_increases_negative_mass(
        h0 in fields(), h1 in fields(), j in couplings(),
        noise in prop::array::uniform5(0.0..1.0f64), gamma in 0.0..2.0f64,
    ) {
        let spec = two_site([h0, h1], j, noise, gamma);
        let (ham, n) = link_parts(&spec, 0).unwrap();
        let m = ham.add(&n);
        let out = optimize_gauge(&m).unwrap();
        prop_assert!(out.certified <= m.negative_mass() + 1e-9);
        prop_assert!((out.certified - out.objective).abs() < 1e-7 * (1.0 + m.absolute_mass()));
        prop_assert!(gauge_residual(&(&out.gauged.m - &m.m), 2).unwrap() < 1e-8);
    }

    #[test]
    fn signed_total_is_conserved(
        h0 in fields(), h1 in fields(), j in couplings(), seed in any::<u64>(),
    ) {
        let spec = two_site([h0, h1], j, [0.0; 5], 0.0);
        let table = RateTable::new(&assemble_model(&spec).unwrap()).unwrap();
        let init = InitialState::product("+z-x".parse().unwrap());
        let mut traj = Trajectory::new(&table, &["z0".parse().unwrap()], false).unwrap();
        traj.start(&init, seed, 0).unwrap();
        for _ in 0..300 {
            if traj.step().is_err() || traj.ensemble().omega() > 5_000 {
                break;
            }
            prop_assert_eq!(traj.ensemble().signed_total(), 1);
        }
        traj.check().unwrap();
    }
}
