// Lie–Trotter splitting of a rotation and a damping that do not commute.
//
// `cargo run --example trotter_splitting`

use chernoff::engine::{
    commutativity_defect, convergence_sweep, make_trotter_family, GeneratorSpec,
};
use chernoff::linalg::ComplexMatrix;
use chernoff::partitions::PartitionScheme;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let a1 = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]])?;
    let a2 = ComplexMatrix::diag_real(&[-1.0, 0.0]);
    let fam = make_trotter_family(&a1, &a2)?;
    println!("commuting: {}", fam.declared_commuting());
    println!(
        "‖[V(0.3), V(0.7)]‖ = {:.3e}",
        commutativity_defect(&fam, 0.3, 0.7)?
    );

    let gen = GeneratorSpec::new(&a1 + &a2)?;
    let x = ComplexMatrix::basis_column(2, 0);
    let ns = [16, 64, 256, 1024];
    let uniform = convergence_sweep(&fam, &gen, &PartitionScheme::Uniform, 1.0, &ns, &x)?;
    let random = convergence_sweep(
        &fam,
        &gen,
        &PartitionScheme::Dirichlet {
            seed: 7,
            concentration: 1000.0,
        },
        1.0,
        &ns,
        &x,
    )?;
    println!("{:>6} {:>14} {:>14}", "n", "uniform", "dirichlet");
    for (u, r) in uniform.rows.iter().zip(&random.rows) {
        println!("{:>6} {:>14.6e} {:>14.6e}", u.n, u.error, r.error);
    }
    println!(
        "fitted orders: {:.3} / {:.3}",
        uniform.fitted_order, random.fitted_order
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("example failed");
}
