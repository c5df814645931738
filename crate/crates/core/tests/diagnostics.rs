use branchkit::diagnostics::{
    jensen_check, log_star, mann_kendall, martingale_trace, rest_term, x_log_star, SubtreeLaw, Trend,
};
use branchkit::genealogy::PointMeasure;
use branchkit::models::{simulate_discrete, MultitypeGw, SimulationCaps};
use branchkit::numerics::SampleSummary;
use branchkit::oracle::TinyModel;
use branchkit::semigroup::{eigen_triplet, EigenOptions, EigenTriplet, MatrixOperator};
use proptest::prelude::*;

fn setup(m: &MultitypeGw, r: u32) -> (MatrixOperator, EigenTriplet) {
    let op = MatrixOperator::from_mean_matrix(m.mean_matrix(), r).unwrap();
    let t = eigen_triplet(&op, EigenOptions::default()).unwrap();
    (op, t)
}

fn supercritical_law() -> impl Strategy<Value = Vec<f64>> {
    (0.0..0.4f64, 0.0..1.0f64, 0.1..1.0f64, 0.0..1.0f64).prop_map(|(p0, p1, p2, p3)| {
        let z = p1 + p2 + p3;
        vec![p0, (1.0 - p0) * p1 / z, (1.0 - p0) * p2 / z, (1.0 - p0) * p3 / z]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn increments_split_exactly(law in supercritical_law(), seed in any::<u64>(), f0 in -2.0..2.0f64) {
        let m = MultitypeGw::single_type(law).unwrap();
        prop_assume!(m.mean_matrix()[0][0] > 1.05);
        let (op, t) = setup(&m, 1);
        let f = vec![f0];
        let law = SubtreeLaw::for_model(&m, 1, &f, &[1.0], seed).unwrap();
        let traj = simulate_discrete(&m, &PointMeasure::dirac(0), 8, &SimulationCaps::default(), seed).unwrap();
        let tr = martingale_trace(&traj, &op, &t, &f, "f", &[1.0], &law).unwrap();
        prop_assert!(tr.split_error <= 1e-12, "split error {}", tr.split_error);
    }

    #[test]
    fn rest_term_routes_agree(seed in any::<u64>(), a in -2.0..2.0f64, b in -2.0..2.0f64, r in 1u32..=2) {
        let m = TinyModel::two_type().to_gw();
        let (op, t) = setup(&m, r);
        let traj = simulate_discrete(&m, &PointMeasure::dirac(1), 6, &SimulationCaps::default(), seed).unwrap();
        let rt = rest_term(&traj, &op, &t, &[a, b]).unwrap();
        prop_assert!(rt.max_rel_diff <= 1e-9, "gap {}", rt.max_rel_diff);
    }

    #[test]
    fn x_log_star_is_convex(x in 0.0..50.0f64, y in 0.0..50.0f64, w in 0.0..1.0f64) {
        let z = w * x + (1.0 - w) * y;
        let chord = w * x_log_star(x).unwrap() + (1.0 - w) * x_log_star(y).unwrap();
        prop_assert!(x_log_star(z).unwrap() <= chord + 1e-12 * (1.0 + chord.abs()));
    }

    #[test]
    fn log_star_is_non_decreasing(x in 0.0..100.0f64, d in 0.0..10.0f64) {
        prop_assert!(log_star(x).unwrap() <= log_star(x + d).unwrap());
    }
}

#[test]
fn increments_are_centred() {
    let m = TinyModel::two_type().to_gw();
    let (op, t) = setup(&m, 1);
    let f = vec![1.0, -0.5];
    let law = SubtreeLaw::for_model(&m, 1, &f, &[1.0, 1.0], 3).unwrap();
    let mut per_n = vec![Vec::new(); 6];
    for seed in 0..4000u64 {
        let traj = simulate_discrete(&m, &PointMeasure::dirac(0), 6, &SimulationCaps::default(), seed).unwrap();
        let tr = martingale_trace(&traj, &op, &t, &f, "f", &[1.0, 1.0], &law).unwrap();
        for (n, d) in tr.increments.iter().enumerate().skip(1) {
            per_n[n - 1].push(*d);
        }
    }
    for xs in &per_n {
        let s = SampleSummary::of(xs);
        assert!(s.within(0.0, 4.0), "{s:?}");
    }
}

#[test]
fn jensen_bound_on_sums() {
    let draws: Vec<Vec<f64>> = (0..5000u64)
        .map(|i| {
            let u = (i as f64 + 0.5) / 5000.0;
            vec![-u.ln(), 3.0 * u, 0.5]
        })
        .collect();
    let r = jensen_check(&draws).unwrap();
    assert!(r.holds && r.lhs <= r.rhs, "{r:?}");
}

#[test]
fn trend_detection() {
    let up: Vec<f64> = (0..30).map(|i| i as f64 + 0.3 * ((i * 7) % 5) as f64).collect();
    assert_eq!(mann_kendall(&up, 0.05).trend, Trend::Increasing);
    let flat: Vec<f64> = (0..30).map(|i| ((i * 13) % 7) as f64).collect();
    assert_eq!(mann_kendall(&flat, 0.05).trend, Trend::None);
}
