use branchkit::models::{
    BranchingDiffusion, CountLawSpec, FragmentLaw, GrowthFragmentation, HouseOfCards, ModelFamily, ModelSpec,
    ScalarFn,
};
use branchkit::semigroup::*;
use proptest::prelude::*;

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (f(lo) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn hoc_spec(alpha: ScalarFn) -> ModelSpec {
    ModelSpec::new(ModelFamily::HouseOfCards(HouseOfCards::with_alpha(alpha).unwrap()))
}

#[test]
fn house_of_cards_rate_and_harmonic_function() {
    let spec = hoc_spec(ScalarFn::Affine { intercept: 1.0, slope: -1.0 });
    let grid = default_grid(&spec, 1000).unwrap();
    let op = assemble(&spec, &grid, Step::Time(1.0), ExpMethod::Auto).unwrap();
    let t = eigen_triplet(&op, EigenOptions::default()).unwrap();
    // int_0^1 dx / (L + 1 - x) = log((L + 1) / L) = 1.
    let root = bisect(|l| ((l + 1.0) / l).ln() - 1.0, 1e-3, 10.0);
    assert!((root - 1.0 / (std::f64::consts::E - 1.0)).abs() < 1e-12);
    assert!((t.rate - root).abs() < 1e-3, "rate {} vs {root}", t.rate);
    assert!((t.lambda_per_unit() - t.rate.exp()).abs() < 1e-15);

    let shape: Vec<f64> = grid.nodes().iter().map(|x| 1.0 / (t.rate + 1.0 - x)).collect();
    let scale = t.gamma_of(&shape);
    let err = t
        .h
        .iter()
        .zip(&shape)
        .map(|(h, s)| (h - s / scale).abs() / (s / scale))
        .fold(0.0, f64::max);
    assert!(err < 0.01, "shape error {err}");

    // On the grid h_i (Lambda + alpha_i) is constant, so max h = c_h / (Lambda + min alpha).
    let c_h = t.h[0] * (t.rate + 1.0 - grid.nodes()[0]);
    let alpha_min = 1.0 - grid.nodes()[999];
    let hmax = weighted_norm(&t.h, &vec![1.0; 1000]);
    assert!((hmax - c_h / (t.rate + alpha_min)).abs() < 1e-10 * hmax);
}

#[test]
fn house_of_cards_exponential_routes_agree() {
    let spec = hoc_spec(ScalarFn::Sine { amplitude: 0.5, frequency: 3.0 });
    for n in [50, 200] {
        let grid = default_grid(&spec, n).unwrap();
        let a = assemble(&spec, &grid, Step::Time(1.5), ExpMethod::Uniformization).unwrap();
        let b = assemble(&spec, &grid, Step::Time(1.5), ExpMethod::ScalingSquaring).unwrap();
        assert_eq!(a.assembly(), Assembly::Uniformization);
        assert_eq!(b.assembly(), Assembly::ScalingSquaring);
        let diff = (a.matrix() - b.matrix()).amax() / b.matrix().amax();
        assert!(diff < 1e-9, "n={n} diff={diff}");
    }
}

#[test]
fn growth_fragmentation_identity_is_an_eigenfunction() {
    let m = GrowthFragmentation::new(ScalarFn::identity(), ScalarFn::constant(1.0), FragmentLaw::Uniform).unwrap();
    let family = ModelFamily::GrowthFragmentation(m);
    let grid = Grid::geometric(1e-3, 1e3, 2000).unwrap();
    let l = generator(&family, &grid).unwrap();
    let f = grid.sample(|x| x);
    let sf = l.exp_action(0.5, &f);
    let e = 0.5f64.exp();
    // Fragments below the grid and the reflecting top node perturb the ends;
    // the bottom error decays like 1 / x.
    for (i, &x) in grid.nodes().iter().enumerate() {
        if (1e-1..=1e2).contains(&x) {
            assert!((sf[i] - e * x).abs() <= 1e-3 * e * x, "x={x} {} vs {}", sf[i], e * x);
        }
    }
}

#[test]
fn branching_diffusion_ground_state() {
    let m = BranchingDiffusion::brownian(0.0, 1.0, 1.0, 6.0, CountLawSpec::fixed(2)).unwrap();
    let spec = ModelSpec::new(ModelFamily::BranchingDiffusion(m));
    let grid = default_grid(&spec, 100).unwrap();
    let op = assemble(&spec, &grid, Step::Time(0.5), ExpMethod::Auto).unwrap();
    let t = eigen_triplet(&op, EigenOptions::default()).unwrap();
    let expected = 6.0 - std::f64::consts::PI.powi(2) / 2.0;
    assert!((t.rate - expected).abs() < 0.01 * expected, "rate {}", t.rate);
    let s = grid.sample(|x| (std::f64::consts::PI * x).sin());
    let c = t.gamma_of(&s);
    let hmax = t.h.iter().cloned().fold(0.0, f64::max);
    let err = t.h.iter().zip(&s).map(|(h, s)| (h - s / c).abs()).fold(0.0, f64::max) / hmax;
    assert!(err < 0.02, "h error {err}");
}

#[test]
fn house_of_cards_boundary_case_is_polynomial() {
    // alpha = (4/3)(1 - x)^{1/4}: int 1 / alpha = 1, so Lambda = 0 and
    // a(t) ~ C t^{1-q} with q = 1 / beta - 1 = 3.
    let alpha = ScalarFn::AbsPower { coef: 4.0 / 3.0, center: 1.0, exponent: 0.25 };
    let spec = hoc_spec(alpha);
    let n = 1000;
    let grid = default_grid(&spec, n).unwrap();
    let op = assemble(&spec, &grid, Step::Time(1.0), ExpMethod::Auto).unwrap();
    let t = eigen_triplet(&op, EigenOptions::default()).unwrap();
    assert!(t.rate.abs() < 2e-3, "rate {}", t.rate);
    let rows: Vec<usize> = (0..n).filter(|&i| grid.nodes()[i] <= 0.5).collect();
    let p = contraction_profile(&op, &t, &vec![1.0; n], 8, Some(&rows)).unwrap();
    assert_eq!(p.fits.best, Regime::Polynomial, "{:?}", p.fits);
    let q = p.fits.polynomial.unwrap().q;
    assert!((q - 3.0).abs() <= 0.3, "q = {q}");
}

#[test]
fn multitype_profile_tail_bound_is_small() {
    let op = MatrixOperator::from_mean_matrix(&[vec![1.0, 2.0], vec![1.0, 0.0]], 1).unwrap();
    let t = eigen_triplet(&op, EigenOptions::default()).unwrap();
    let p = contraction_profile(&op, &t, &[1.0, 1.0], 20, None).unwrap();
    let s = series_check(&p);
    assert_eq!(s.verdict, SeriesVerdict::Summable);
    // Geometric tail with eta = 1/2: sum_{k > 20} a_k / k <= C 2^{-21} / 21 * 2.
    let c = p.fits.geometric.unwrap().c;
    let eps = 2.0 * c * 0.5f64.powi(21) / 21.0;
    assert!(s.tail_bound.unwrap() <= eps * 1.05);
}

fn hoc_fixture() -> (MatrixOperator, EigenTriplet, ContractionProfile) {
    let spec = hoc_spec(ScalarFn::Affine { intercept: 1.0, slope: -1.0 });
    let grid = default_grid(&spec, 60).unwrap();
    let op = assemble(&spec, &grid, Step::Time(0.5), ExpMethod::Auto).unwrap();
    let t = eigen_triplet(&op, EigenOptions::default()).unwrap();
    let vstar = grid.sample(|x| 1.0 + x);
    let p = contraction_profile(&op, &t, &vstar, 6, None).unwrap();
    (op, t, p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gamma_annihilates_t(f in prop::collection::vec(-10.0f64..10.0, 60)) {
        let (op, t, _) = hoc_fixture();
        let tf = apply_t(&op, &t, &f);
        let norm = f.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
        prop_assert!(t.gamma_of(&tf).abs() <= 1e-10 * norm.max(1.0));
    }

    #[test]
    fn profile_bounds_iterates(f in prop::collection::vec(-1.0f64..1.0, 60)) {
        let (op, t, p) = hoc_fixture();
        let fnorm = weighted_norm(&f, &p.vstar);
        let mut g = f.clone();
        for n in 1..=6 {
            g = apply_t(&op, &t, &g);
            prop_assert!(weighted_norm(&g, &p.vstar) <= p.a[n] * fnorm * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn random_positive_matrices_satisfy_residuals(
        entries in prop::collection::vec(0.01f64..1.0, 25)
    ) {
        let m: Vec<Vec<f64>> = entries.chunks(5).map(|r| r.to_vec()).collect();
        let op = MatrixOperator::from_mean_matrix(&m, 1).unwrap();
        let t = eigen_triplet(&op, EigenOptions::default()).unwrap();
        prop_assert!(t.gamma.iter().all(|g| *g >= 0.0));
        prop_assert!((t.gamma.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((t.gamma_of(&t.h) - 1.0).abs() < 1e-10);
        let kh = op.apply(&t.h);
        let hn = t.h.iter().cloned().fold(0.0, f64::max);
        let r = kh.iter().zip(&t.h).map(|(a, h)| (a - t.lambda * h).abs()).fold(0.0, f64::max);
        prop_assert!(r <= 1e-10 * t.lambda * hn * 1.01);
    }
}
