//! Per-individual random streams keyed by Ulam-Harris labels.
use branchkit::genealogy::{LabelStream, UlamLabel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let u = UlamLabel::root().child(2)?.child(1)?;
    let mut a = LabelStream::new(7, u.clone());
    let first: Vec<f64> = (0..3).map(|_| a.uniform()).collect();
    let at = a.counter();
    let later = a.uniform();
    println!("label {u}: {first:?}");

    let mut replay = LabelStream::at(7, u.clone(), at);
    println!("replayed draw at counter {at}: {} == {later}", replay.uniform());

    let mut sibling = LabelStream::new(7, UlamLabel::root().child(2)?.child(2)?);
    println!("sibling stream starts with {}", sibling.uniform());
    Ok(())
}
