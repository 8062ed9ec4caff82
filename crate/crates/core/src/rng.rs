//! Seeded, hierarchically split random streams.
//!
//! Every random quantity in a run is drawn from a stream derived from the
//! master seed and a path of integer tags, e.g. `seed / DROP / 17 / TRIAL / 3`.
//! A stream therefore depends only on its path, never on scheduling, so the
//! same seed gives the same numbers on any thread count.

use std::f64::consts::FRAC_1_SQRT_2;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// The generator behind every stream.
pub type Stream = ChaCha8Rng;

/// Tag for large-scale drops.
pub const DROP: u64 = 0x01;
/// Tag for small-scale trials inside a drop.
pub const TRIAL: u64 = 0x02;
/// Tag for pilot-book draws.
pub const PILOTS: u64 = 0x03;
/// Tag for geometry statistics.
pub const GEOMETRY: u64 = 0x04;

/// A node in the seed tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedTree {
    key: u64,
}

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        Self { key: splitmix64(seed ^ 0x5151_5f51_5350_5349) }
    }

    /// Derives the child node `tag` of this node.
    pub fn child(&self, tag: u64) -> Self {
        Self {
            key: splitmix64(self.key.rotate_left(17) ^ splitmix64(tag.wrapping_add(0x9e37_79b9))),
        }
    }

    /// Shorthand for `child(a).child(b)`.
    pub fn path(&self, a: u64, b: u64) -> Self {
        self.child(a).child(b)
    }

    pub fn stream(&self) -> Stream {
        ChaCha8Rng::seed_from_u64(self.key)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One circularly-symmetric CN(0,1) sample: real and imaginary parts are
/// independent N(0, 1/2).
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// A `rows x cols` matrix of i.i.d. CN(0,1) entries, filled in row-major order.
pub fn complex_normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<Complex64> {
    Array2::from_shape_simple_fn((rows, cols), || complex_normal(rng))
}
