// `Σ √a_i ξ_i → N(0, 1)` for weighted sums of i.i.d. variables, through
// density-grid convolution and the smoothing operators `V_ξ`.
//
// `cargo run --example weighted_clt`

use chernoff::clt::{clt_sweep, density_on, ks_distance, GridSpec, NamedLaw};
use chernoff::partitions::PartitionScheme;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::default_grid();
    let gaussian = density_on(NamedLaw::Gaussian, grid)?;
    let ns = [4, 16, 64, 256];
    for law in [
        NamedLaw::UniformPmSqrt3,
        NamedLaw::Triangular,
        NamedLaw::BetaSymmetric,
    ] {
        let d0 = ks_distance(&density_on(law, grid)?, &gaussian)?;
        println!("{}: KS(ξ, N(0,1)) = {d0:.4e}", law.name());
        for scheme in [
            PartitionScheme::Uniform,
            PartitionScheme::Dirichlet {
                seed: 7,
                concentration: 1000.0,
            },
        ] {
            let r = clt_sweep(law, &scheme, 1.0, &ns, grid)?;
            println!("  {}", scheme.label());
            for row in &r.rows {
                println!(
                    "    n = {:>3}: KS {:.3e}  sup|ΠV f − T f| {:.3e}",
                    row.n, row.ks_distance, row.sup_error
                );
            }
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("example failed");
}
