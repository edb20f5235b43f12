//! Property tests for the invariants the library promises, run against
//! independent oracles (point sampling, brute-force enumeration).

use proptest::prelude::*;
use rand::Rng;
use reachverify::config::RunConfig;
use reachverify::datagen::{
    bv_feedback_control, experiment_rng, idm_acceleration, sample_system, FeedbackGains, IdmParams, ScenarioSpec,
};
use reachverify::dynamics::BicycleModel;
use reachverify::parallel::Execution;
use reachverify::reach::{deduce_step_interval, deduce_step_linearized, sample_successors, StepInput};
use reachverify::safety::{occupancy, polygons_intersect, OccupancyPolygon, VehicleShape};
use reachverify::sets::{Interval, IntervalBox};
use reachverify::surrogate::{build_model, OperatorConfig, ScopeVectorIn};

fn model() -> BicycleModel {
    RunConfig::default().bicycle_model()
}

fn input_from_seed(seed: u64) -> StepInput {
    let spec = ScenarioSpec::default();
    let sys = sample_system(&spec, &mut experiment_rng(seed, 0)).unwrap();
    StepInput::new(sys.vehicles[0].state.clone(), sys.control_for_step(0, 0), spec.dt)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn straight_motion_stays_on_axis(v in 1.0f64..10.0, steps in 1usize..20) {
        let m = model();
        let mut x = [0.0, 0.0, 0.0, v, 0.0, 0.0];
        for _ in 0..steps {
            x = m.step(&x, &[0.0, 0.0], 0.2).unwrap();
            prop_assert_eq!([x[1], x[2], x[4], x[5]], [0.0; 4]);
        }
    }

    #[test]
    fn dynamics_are_translation_invariant(seed in any::<u64>(), dx in -50.0f64..50.0, dy in -10.0f64..10.0) {
        let m = model();
        let inp = input_from_seed(seed);
        let x: [f64; 6] = std::array::from_fn(|i| inp.state.centers()[i]);
        let u = [inp.control.centers()[0], inp.control.centers()[1]];
        let a = m.step(&x, &u, 0.2).unwrap();
        let mut xs = x;
        xs[0] += dx;
        xs[1] += dy;
        let b = m.step(&xs, &u, 0.2).unwrap();
        prop_assert!((b[0] - a[0] - dx).abs() < 1e-9 && (b[1] - a[1] - dy).abs() < 1e-9);
        for i in 2..6 {
            prop_assert_eq!(a[i], b[i]);
        }
    }

    #[test]
    fn oracles_contain_sampled_successors(seed in any::<u64>()) {
        let m = model();
        let inp = input_from_seed(seed);
        let lin = deduce_step_linearized(&m, &inp).unwrap();
        let iv = deduce_step_interval(&m, &inp).unwrap();
        for p in sample_successors(&m, &inp, 2_000, seed, Execution::Sequential).unwrap() {
            prop_assert!(lin.contains(&p, 1e-9));
            prop_assert!(iv.contains(&p, 1e-9));
        }
    }

    #[test]
    fn oracles_are_deterministic(seed in any::<u64>()) {
        let m = model();
        let inp = input_from_seed(seed);
        prop_assert_eq!(deduce_step_linearized(&m, &inp).unwrap(), deduce_step_linearized(&m, &inp).unwrap());
        prop_assert_eq!(deduce_step_interval(&m, &inp).unwrap(), deduce_step_interval(&m, &inp).unwrap());
    }

    #[test]
    fn occupancy_grows_with_position_radii(
        c in prop::array::uniform2(-10.0f64..10.0),
        r in prop::array::uniform2(0.0f64..1.0),
        k in 1.0f64..3.0,
        th in -3.0f64..3.0,
        th_r in 0.0f64..0.7,
    ) {
        let shape = VehicleShape::default();
        let theta = Interval::from_center_radius(th, th_r);
        let small = IntervalBox::new(c.to_vec(), r.to_vec()).unwrap();
        let big = small.with_radii_scaled(k);
        let (a, b) = (occupancy(&small, theta, &shape).unwrap(), occupancy(&big, theta, &shape).unwrap());
        for i in 0..16 {
            let t = i as f64 * std::f64::consts::PI / 8.0;
            let d = [t.cos(), t.sin()];
            prop_assert!(b.support(d) >= a.support(d) - 1e-12);
        }
    }

    #[test]
    fn sat_has_no_false_negatives(seed in any::<u64>()) {
        let mut rng = experiment_rng(seed, 1);
        let square = |rng: &mut rand_chacha::ChaCha8Rng| {
            let (x, y, s) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.1..2.0));
            let t: f64 = rng.gen_range(0.0..1.5);
            let (c, sn) = (t.cos() * s, t.sin() * s);
            OccupancyPolygon::new(vec![[x, y], [x + c, y + sn], [x + c - sn, y + sn + c], [x - sn, y + c]])
        };
        let (p, q) = (square(&mut rng), square(&mut rng));
        let sat = polygons_intersect(&p, &q).unwrap();
        for _ in 0..2_000 {
            let (a, b) = (rng.gen::<f64>(), rng.gen::<f64>());
            let v = &p.vertices;
            let pt = [
                v[0][0] + a * (v[1][0] - v[0][0]) + b * (v[3][0] - v[0][0]),
                v[0][1] + a * (v[1][1] - v[0][1]) + b * (v[3][1] - v[0][1]),
            ];
            if q.contains(pt, 0.0) {
                prop_assert!(sat);
            }
        }
    }

    #[test]
    fn controllers_respect_actuator_bounds(
        v in 0.0f64..15.0,
        v_lead in 0.0f64..15.0,
        gap in 0.01f64..60.0,
        state in prop::array::uniform6(-5.0f64..5.0),
        y_t in -5.0f64..5.0,
    ) {
        let spec = ScenarioSpec::default();
        let a = idm_acceleration(&IdmParams::default(), v, Some((v_lead, gap)), (spec.u_min[0], spec.u_max[0])).unwrap();
        prop_assert!(a >= spec.u_min[0] && a <= spec.u_max[0]);
        let u = bv_feedback_control(&state, 6.0, y_t, &FeedbackGains::default(), &spec.u_min, &spec.u_max);
        prop_assert!(u.a_cc >= spec.u_min[0] && u.a_cc <= spec.u_max[0]);
        prop_assert!(u.delta_f >= spec.u_min[1] && u.delta_f <= spec.u_max[1]);
    }

    #[test]
    fn sampled_radii_stay_in_ranges(seed in any::<u64>()) {
        let spec = ScenarioSpec::default();
        let sys = sample_system(&spec, &mut experiment_rng(seed, 7)).unwrap();
        let ego = &sys.vehicles[0];
        for (i, (_, range)) in spec.variables()[..6].iter().enumerate() {
            prop_assert!(ego.state.centers()[i] >= range.center[0] && ego.state.centers()[i] <= range.center[1]);
            prop_assert!(ego.state.radii()[i] >= range.radius[0] && ego.state.radii()[i] <= range.radius[1]);
        }
        for (k, (_, range)) in spec.variables()[6..].iter().enumerate() {
            prop_assert!(ego.control.radii()[k] >= range.radius[0] && ego.control.radii()[k] <= range.radius[1]);
        }
    }

    #[test]
    fn surrogate_radii_are_never_negative(xs in prop::array::uniform16(-1e3f64..1e3)) {
        let m = build_model(&OperatorConfig::tiny(), 4).unwrap();
        let out = m.forward(&ScopeVectorIn(xs)).unwrap();
        for r in &out.0[6..] {
            prop_assert!(*r >= 0.0 && r.is_finite());
        }
    }
}

#[test]
fn linearized_is_tighter_than_interval() {
    let m = model();
    let (mut tighter, mut total) = (0, 0);
    for seed in 0..1000 {
        let inp = input_from_seed(seed);
        let lin = deduce_step_linearized(&m, &inp).unwrap();
        let iv = deduce_step_interval(&m, &inp).unwrap();
        for i in 0..6 {
            total += 1;
            // exact ties (the linear speed row) may differ in the last bits
            tighter += (lin.radii()[i] <= iv.radii()[i] * (1.0 + 1e-12)) as usize;
        }
    }
    let frac = tighter as f64 / total as f64;
    assert!(frac >= 0.95, "linearized tighter on {frac:.3} of dimensions");
}
