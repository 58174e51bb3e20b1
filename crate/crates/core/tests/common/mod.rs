#![allow(dead_code)]

use chernoff::linalg::{ComplexMatrix, C64};
use chernoff::partitions::{Partition, PartitionScheme};
use chernoff::quantum::DensityMatrix;
use rand::Rng;

pub fn random_complex<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize) -> ComplexMatrix {
    random_complex(rng, dim, dim).hermitian_part()
}

pub fn random_density<R: Rng>(rng: &mut R, dim: usize) -> DensityMatrix {
    let b = random_complex(rng, dim, dim);
    let m = &b * &b.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m.scale(1.0 / tr)).expect("normalized PSD matrix")
}

/// A partition from a randomly chosen scheme, `n ∈ [1, max_n]`.
pub fn random_partition<R: Rng>(rng: &mut R, max_n: usize) -> Partition {
    let mut n = rng.random_range(1..=max_n);
    let scheme = match rng.random_range(0..4) {
        0 => PartitionScheme::Uniform,
        1 => {
            n += n % 2;
            PartitionScheme::Alternating
        }
        2 => PartitionScheme::PowerLaw {
            theta: rng.random_range(0.0..3.0),
        },
        _ => PartitionScheme::Dirichlet {
            seed: rng.random(),
            concentration: rng.random_range(0.5..1000.0),
        },
    };
    scheme.generate(n).expect("valid scheme parameters")
}
