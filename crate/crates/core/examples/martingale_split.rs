//! Increments of the additive martingale, their truncation split and the rest term.
use branchkit::diagnostics::{martingale_trace, rest_term, SubtreeLaw};
use branchkit::genealogy::PointMeasure;
use branchkit::models::{simulate_discrete, SimulationCaps};
use branchkit::oracle::TinyModel;
use branchkit::semigroup::{eigen_triplet, EigenOptions, MatrixOperator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = TinyModel::two_type().to_gw();
    let op = MatrixOperator::from_mean_matrix(m.mean_matrix(), 1)?;
    let t = eigen_triplet(&op, EigenOptions::default())?;
    let f = [1.0, -0.5];
    let v = [1.0, 1.0];
    let law = SubtreeLaw::for_model(&m, 1, &f, &v, 0)?;
    let traj = simulate_discrete(&m, &PointMeasure::dirac(0), 10, &SimulationCaps::default(), 42)?;

    let tr = martingale_trace(&traj, &op, &t, &f, "f", &v, &law)?;
    println!(" n        X_n      Delta_n          A_n          B_n");
    for n in 0..tr.values.len() {
        println!("{n:>2} {:>10.5} {:>12.5e} {:>12.5e} {:>12.5e}", tr.values[n], tr.increments[n], tr.a[n], tr.b[n]);
    }
    println!("max |Delta - A - B| (relative) = {:.2e}", tr.split_error);

    let rt = rest_term(&traj, &op, &t, &f)?;
    println!("rest term R_n: {:?}", rt.residual);
    println!("max gap between the two routes = {:.2e}", rt.max_rel_diff);
    Ok(())
}
