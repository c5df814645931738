//! Exponential growth with uniform binary fission: Z_t(id) = x0 e^t on every path.
use branchkit::genealogy::{replicate_seed, PointMeasure};
use branchkit::models::{simulate_continuous, ContinuousOptions, FragmentLaw, GrowthFragmentation, ScalarFn, SimulationCaps};
use branchkit::oracle::alpha_p;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gf = GrowthFragmentation::new(ScalarFn::identity(), ScalarFn::constant(1.0), FragmentLaw::Uniform)?;
    let opts = ContinuousOptions { snapshot_times: Vec::new(), event_functional: Some(ScalarFn::identity()) };
    let caps = SimulationCaps { record_measures: false, ..SimulationCaps::default() };
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let t = simulate_continuous(&gf, &PointMeasure::dirac(1.0), 5.0, &caps, replicate_seed(1, i), &opts)?;
        let values = t.event_functionals.as_ref().expect("requested");
        for (e, z) in t.events.iter().zip(values) {
            worst = worst.max(((-e.time).exp() * z - 1.0).abs());
        }
        if i == 0 {
            println!("first path: {} fissions, final population {}", t.events.len(), t.final_measure.as_ref().map_or(0, |m| m.len()));
        }
    }
    println!("max |e^-t Z_t(id) - x0| over 200 paths = {worst:.2e}");
    for p in [1.5, 2.0, 3.0] {
        println!("alpha_{p} = {:.12}", alpha_p(&FragmentLaw::Uniform, p, 10_000)?);
    }
    Ok(())
}
