// Resolvent products `Π (I − a_i t A)^{-1} x` converging to `e^{tA} x`.
//
// `cargo run --example implicit_euler`

use chernoff::engine::{convergence_sweep, make_implicit_euler_family, GeneratorSpec};
use chernoff::linalg::ComplexMatrix;
use chernoff::partitions::PartitionScheme;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // A damped oscillator with an extra decaying mode.
    let a = ComplexMatrix::from_real_rows(&[
        vec![-0.1, 1.0, 0.0],
        vec![-1.0, -0.1, 0.0],
        vec![0.0, 0.0, -2.0],
    ])?;
    let family = make_implicit_euler_family(&a)?;
    let gen = GeneratorSpec::new(a)?;
    let x = ComplexMatrix::column_real(&[1.0, 0.0, 1.0]);
    let ns = [10, 100, 1000];
    for scheme in [
        PartitionScheme::Uniform,
        PartitionScheme::PowerLaw { theta: 2.0 },
        PartitionScheme::Dirichlet {
            seed: 7,
            concentration: 1000.0,
        },
    ] {
        let report = convergence_sweep(&family, &gen, &scheme, 1.0, &ns, &x)?;
        println!(
            "{}: fitted order {:.3}",
            scheme.label(),
            report.fitted_order
        );
        print!("{}", report.to_csv());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("example failed");
}
