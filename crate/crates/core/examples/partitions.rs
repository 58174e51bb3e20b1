// Weight rows, their metrics, and the scalar product `Π (1 + a_i t)`.
//
// `cargo run --example partitions`

use chernoff::partitions::{make_alternating, metrics, scalar_product, PartitionScheme};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let schemes = [
        PartitionScheme::Uniform,
        PartitionScheme::Alternating,
        PartitionScheme::PowerLaw { theta: 1.0 },
        PartitionScheme::Dirichlet {
            seed: 7,
            concentration: 1000.0,
        },
    ];
    let e = 1f64.exp();
    println!(
        "{:<40} {:>6} {:>12} {:>12} {:>12}",
        "scheme", "n", "max_weight", "l1_dev", "|prod - e|"
    );
    for scheme in &schemes {
        for n in [10, 100, 10_000] {
            let p = scheme.generate(n)?;
            let m = metrics(&p);
            let gap = (scalar_product(&p, 1.0) - e).abs();
            println!(
                "{:<40} {:>6} {:>12.4e} {:>12.4e} {:>12.4e}",
                scheme.label(),
                n,
                m.max_weight,
                m.l1_deviation,
                gap
            );
        }
    }

    // The alternating rows have vanishing max weight but stay a fixed L1
    // distance from the uniform row.
    let p = make_alternating(4)?;
    println!("\nalternating(4) = {:?}", p.weights());
    for n in [2, 20, 200, 2000] {
        let m = metrics(&make_alternating(n)?);
        assert!((m.l1_deviation - 0.5).abs() < 1e-12);
        println!("n = {n:>4}: l1_deviation = {:.15}", m.l1_deviation);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("example failed");
}
