// Plugging a user-defined Chernoff function into the engine: the
// Crank–Nicolson map `(I − tA/2)^{-1}(I + tA/2)` is a second-order family.
//
// `cargo run --example custom_family`

use chernoff::engine::{check_family, convergence_sweep, ChernoffFamily, GeneratorSpec};
use chernoff::linalg::ComplexMatrix;
use chernoff::partitions::PartitionScheme;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let a = ComplexMatrix::from_real_rows(&[vec![-1.0, 2.0], vec![-2.0, -1.0]])?;
    let gen = GeneratorSpec::new(a.clone())?;
    let dim = a.rows();
    let family = ChernoffFamily::new(dim, "crank-nicolson", true, true, move |t| {
        let id = ComplexMatrix::identity(dim);
        let half = a.scale(0.5 * t);
        (&id - &half).solve(&(&id + &half))
    });
    let check = check_family(&family, &[0.0, 0.1, 0.5, 1.0])?;
    println!("{check:?}");

    let x = ComplexMatrix::basis_column(dim, 0);
    let report = convergence_sweep(
        &family,
        &gen,
        &PartitionScheme::Uniform,
        1.0,
        &[10, 100, 1000],
        &x,
    )?;
    print!("{}", report.to_csv());
    println!("fitted order {:.3}", report.fitted_order);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("example failed");
}
