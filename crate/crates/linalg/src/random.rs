//! Seeded random test matrices for the dense-vs-iterative oracle suite.

use crate::{SparseHermitian, TripletBuilder, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sparse random Hermitian matrix (about four off-diagonal entries per row)
/// shifted so that its Gershgorin lower bound is 1.
pub fn random_hermitian_spd(n: usize, seed: u64) -> SparseHermitian {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = TripletBuilder::new(n);
    for i in 0..n {
        for _ in 0..4 {
            let j = rng.gen_range(0..n);
            if j == i {
                continue;
            }
            let v = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            b.add_pair(i, j, v);
        }
    }
    for i in 0..n {
        b.add_diag(i, rng.gen::<f64>() * 4.0);
    }
    let m = b.build();
    let lo = m.gershgorin_lower();
    let mut b2 = TripletBuilder::new(n);
    for i in 0..n {
        let (cols, vals) = m.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i {
                b2.add_diag(i, v.re - lo + 1.0);
            } else if j > i {
                b2.add_pair(i, j, v);
            }
        }
    }
    b2.build()
}
