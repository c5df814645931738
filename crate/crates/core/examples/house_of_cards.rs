//! House-of-cards mutation model with alpha(x) = 1 - x on a fine grid.
use branchkit::models::{HouseOfCards, ModelFamily, ModelSpec, ScalarFn};
use branchkit::oracle::root_find;
use branchkit::semigroup::{assemble, default_grid, eigen_triplet, EigenOptions, ExpMethod, Step};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hoc = HouseOfCards::with_alpha(ScalarFn::Affine { intercept: 1.0, slope: -1.0 })?;
    let spec = ModelSpec::new(ModelFamily::HouseOfCards(hoc));
    let grid = default_grid(&spec, 1000)?;
    let op = assemble(&spec, &grid, Step::Time(1.0), ExpMethod::Auto)?;
    let t = eigen_triplet(&op, EigenOptions::default())?;

    // int_0^1 dx / (Lambda + 1 - x) = 1
    let root = root_find(|l| ((l + 1.0) / l).ln() - 1.0, 1e-3, 10.0, 1e-15)?;
    println!("Lambda (grid)      = {:.9}", t.rate);
    println!("Lambda (bisection) = {root:.9}   1/(e-1) = {:.9}", 1.0 / (std::f64::consts::E - 1.0));

    let nodes = grid.nodes();
    let c = t.h[0] * (t.rate + 1.0 - nodes[0]);
    for i in [0, 250, 500, 750, 999] {
        let x = nodes[i];
        println!("x = {x:.4}  h = {:.6}  c/(Lambda + alpha) = {:.6}", t.h[i], c / (t.rate + 1.0 - x));
    }
    Ok(())
}
