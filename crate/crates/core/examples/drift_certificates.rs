//! Lyapunov drift and k log k certificates for growth-fragmentation and diffusion models.
use branchkit::models::{check_drift, kloglk_bound, BranchingDiffusion, CountLawSpec, FragmentLaw, GrowthFragmentation, ScalarFn};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ladder: Vec<f64> = (0..=64).map(|i| 2f64.powf(i as f64 * 0.125)).collect();
    let square = ScalarFn::power(1.0, 2.0);
    let cases = [
        ("g = x, B = 1", GrowthFragmentation::new(ScalarFn::identity(), ScalarFn::constant(1.0), FragmentLaw::Uniform)?),
        ("g = x^2, B = x^3", GrowthFragmentation::new(square.clone(), ScalarFn::power(1.0, 3.0), FragmentLaw::Uniform)?),
    ];
    for (name, gf) in &cases {
        let r = check_drift(gf, &square, &square, &ladder, 100, 1)?;
        println!(
            "{name:<18} V = x^2: singleton sup {:.4} ({:?}), measure sup {:.4} ({:?})",
            r.singleton.sup, r.singleton.verdict, r.measure.sup, r.measure.verdict
        );
    }
    let bd = BranchingDiffusion::brownian(0.0, 1.0, 1.0, 2.5, CountLawSpec::fixed(2))?;
    let k = kloglk_bound(&bd, &[0.25, 0.5, 0.75]);
    println!("binary branching at rate 2.5: sup B sum k log k q_k = {:?} (2 ln 2 b0 = {:.6})", k.value, 5.0 * 2f64.ln());
    Ok(())
}
