//! Perron triplet and contraction profile of a two-type Galton-Watson mean matrix.
use branchkit::semigroup::{contraction_profile, eigen_triplet, series_check, EigenOptions, MatrixOperator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let op = MatrixOperator::from_mean_matrix(&[vec![1.0, 2.0], vec![1.0, 0.0]], 1)?;
    let t = eigen_triplet(&op, EigenOptions::default())?;
    println!("lambda = {:.12}", t.lambda);
    println!("h      = {:?}", t.h);
    println!("gamma  = {:?}  (gamma(h) = {:.3e})", t.gamma, t.gamma_of(&t.h));

    let p = contraction_profile(&op, &t, &[1.0, 1.0], 20, None)?;
    for (n, a) in p.a.iter().enumerate().take(8) {
        println!("a_{:<2} = {a:.6e}", n + 1);
    }
    if let Some(g) = p.fits.geometric {
        println!("geometric rate eta = {:.6}", g.eta);
    }
    println!("sum a_k / k: {:?}", series_check(&p).verdict);
    Ok(())
}
