// Repeated unsharp measurement of an observable: the measurement channel,
// its quadrature realization, and the Lindblad semigroup they approximate.
//
// `cargo run --example quantum_measurement`

use chernoff::linalg::ComplexMatrix;
use chernoff::partitions::PartitionScheme;
use chernoff::quantum::{
    choi_psd_check, quantum_sweep, sigma_z, ChannelVariant, DensityMatrix, MeasurementChannel,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let ch = MeasurementChannel::new(sigma_z(), 1.0)?;
    let rho = DensityMatrix::uniform_superposition(2)?;
    println!(
        "Choi min eigenvalue at t = 0.5: {:.3e}",
        choi_psd_check(&ch, 0.5)?
    );

    let ns = [4, 16, 64, 256];
    for variant in [
        ChannelVariant::Closed,
        ChannelVariant::Quadrature { nodes: 21 },
    ] {
        for scheme in [PartitionScheme::Uniform, PartitionScheme::Alternating] {
            let r = quantum_sweep(&ch, variant, &scheme, 1.0, &ns, &rho)?;
            println!("{} / {}", r.family, scheme.label());
            print!("{}", r.to_csv());
        }
    }

    // A three-level observable: the closed-form channel is exact on any grid.
    let l = ComplexMatrix::diag_real(&[-1.0, 0.0, 2.0]);
    let ch3 = MeasurementChannel::new(l, 0.5)?;
    let rho3 = DensityMatrix::uniform_superposition(3)?;
    let r = quantum_sweep(
        &ch3,
        ChannelVariant::Closed,
        &PartitionScheme::PowerLaw { theta: 3.0 },
        2.0,
        &[3, 30],
        &rho3,
    )?;
    print!("{}", r.to_csv());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("example failed");
}
