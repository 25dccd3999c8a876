//! Fixtures shared by the benchmarks.

use weylab::quantize::Grid1D;
use weylab::symbols::{Coefficient, SymbolSpec};

pub const SIZES: [usize; 3] = [128, 256, 512];

/// Spacing 0.125 at every size, so hop offsets stay on the grid.
pub fn grid(points: usize) -> Grid1D {
    Grid1D::new(points as f64 / 16.0, points).expect("valid grid")
}

pub fn band_with_bump() -> SymbolSpec {
    SymbolSpec::sum(vec![
        SymbolSpec::gauss_xi(1.0, Coefficient::constant(1.0)),
        SymbolSpec::potential(Coefficient::gauss(1.0, 2.0, 2.0)),
    ])
}

/// Deterministic pseudo-random points in `[-1, 1)`.
pub fn points(n: usize, seed: u64) -> Vec<f64> {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..n)
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 52) as f64 - 1.0
        })
        .collect()
}
