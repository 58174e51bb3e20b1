// The telescoping estimate between uniform and non-uniform products:
// `‖V(t/n)^n x − Π V(a_i t) x‖ ≤ Σ ‖(V(t/n) − V(a_i t)) x‖ ≤ rhs`.
//
// `cargo run --example lemma4_chain`

use chernoff::engine::{
    lemma4_chain, lemma4_trials, make_implicit_euler_family, GeneratorSpec, LEMMA4_SLACK,
};
use chernoff::linalg::ComplexMatrix;
use chernoff::partitions::{make_alternating, make_power_law};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let a = ComplexMatrix::diag_real(&[-1.0, -3.0]);
    let fam = make_implicit_euler_family(&a)?;
    let gen = GeneratorSpec::new(a)?;
    let x = ComplexMatrix::column_real(&[0.6, 0.8]);
    for n in [4, 40, 400] {
        for p in [make_alternating(n)?, make_power_law(n, 1.5)?] {
            let c = lemma4_chain(&fam, &gen, &p, 1.0, &x)?;
            println!(
                "n = {n:>3}: lhs {:.3e} <= mid {:.3e} <= rhs {:.3e}",
                c.lhs, c.mid, c.rhs
            );
            assert!(c.holds(LEMMA4_SLACK));
        }
    }
    let trials = lemma4_trials(100, 8, 7)?;
    let ok = trials
        .iter()
        .filter(|r| r.chain.holds(LEMMA4_SLACK))
        .count();
    println!("randomized: {ok} of {} chains hold", trials.len());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("example failed");
}
