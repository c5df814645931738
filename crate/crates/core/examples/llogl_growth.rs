//! Growth of I_n = sup_x E[Z_n log* Z_n] on a tiny two-type model.
use branchkit::diagnostics::{exact_llogl, lloglstat_discrete};
use branchkit::oracle::TinyModel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tiny = TinyModel::two_type();
    let m = tiny.to_gw();
    let ones = [1.0, 1.0];
    let steps: Vec<usize> = (1..=12).collect();
    let s = lloglstat_discrete(&m, &ones, &ones, &[0, 1], &steps, 4000, u64::MAX, 5)?;
    println!(" n       I_hat        se     exact");
    for (k, n) in steps.iter().enumerate() {
        let exact = if *n <= 4 { format!("{:.5}", exact_llogl(&tiny, &ones, &ones, *n)?.0) } else { String::new() };
        println!("{n:>2} {:>11.5} {:>9.5} {exact:>9}", s.i_hat[k], s.std_err[k]);
    }
    if let Some(fit) = s.slope(5.0, 12.0) {
        println!("slope of log I_n on [5, 12] = {:.4}, log lambda = {:.4}", fit.slope, 1.6f64.ln());
    }
    Ok(())
}
