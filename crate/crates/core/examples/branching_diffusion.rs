//! Binary branching Brownian motion killed outside (0, 1).
use branchkit::diagnostics::continuous_martingale;
use branchkit::models::{BranchingDiffusion, CountLawSpec, ModelFamily, ModelSpec, SimulationCaps};
use branchkit::semigroup::{assemble, default_grid, eigen_triplet, EigenOptions, ExpMethod, Step};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bd = BranchingDiffusion::brownian(0.0, 1.0, 1.0, 6.0, CountLawSpec::fixed(2))?;
    let spec = ModelSpec::new(ModelFamily::BranchingDiffusion(bd.clone()));
    let grid = default_grid(&spec, 100)?;
    let op = assemble(&spec, &grid, Step::Time(0.5), ExpMethod::Auto)?;
    let t = eigen_triplet(&op, EigenOptions::default())?;
    println!("Lambda = {:.6}  (6 - pi^2/2 = {:.6})", t.rate, 6.0 - std::f64::consts::PI.powi(2) / 2.0);

    let times = [0.5, 1.0, 1.5, 2.0];
    let mc = continuous_martingale(&bd, &grid, &t, 0.5, &times, 2000, &SimulationCaps::default(), 7)?;
    println!("h(0.5) = {:.4}", mc.h_x0);
    for (time, s) in mc.times.iter().zip(&mc.summaries) {
        println!("t = {time:.1}  mean e^-Lambda t Z_t(h) = {:.4} +- {:.4}", s.mean, s.std_err);
    }
    Ok(())
}
