//! Exhaustive enumeration against mean-matrix powers on the shipped tiny models.
use branchkit::oracle::{dense_perron, TinyModel};
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (name, m) in TinyModel::catalogue() {
        let k = m.n_types();
        let f: Vec<f64> = vec![1.0; k];
        let mut worst: f64 = 0.0;
        for n in 0..=4 {
            let mf = m.mean_power(&f, n);
            for x in 0..k {
                let e = m.exact_expectation(x, n, |c| c.iter().map(|c| *c as f64).sum())?;
                worst = worst.max((e.value - mf[x]).abs());
            }
        }
        let rows = m.mean_matrix();
        let dense = dense_perron(&DMatrix::from_fn(k, k, |i, j| rows[i][j]))?;
        println!("{name:<22} types {k}  lambda {:.6}  |E Z_n - M^n 1| <= {worst:.1e}", dense.triplet.lambda);
    }
    Ok(())
}
