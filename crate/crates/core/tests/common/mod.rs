#![allow(dead_code)]

use lulu_core::GridImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random image with side lengths in `1..=max_side` and values in `lo..=hi`.
pub fn random_image(rng: &mut impl Rng, max_side: usize, lo: i64, hi: i64) -> GridImage {
    let w = rng.gen_range(1..=max_side);
    let h = rng.gen_range(1..=max_side);
    random_image_sized(rng, w, h, lo, hi)
}

pub fn random_image_sized(rng: &mut impl Rng, w: usize, h: usize, lo: i64, hi: i64) -> GridImage {
    let values = (0..w * h).map(|_| rng.gen_range(lo..=hi)).collect();
    GridImage::new(w, h, values, 0).unwrap()
}

pub fn spike(value: i64) -> GridImage {
    let mut f = GridImage::constant(3, 3, 0, 0).unwrap();
    f.set((1, 1), value);
    f
}

/// 4×4 zeros with 8 at (1,1) and 3 at (1,2).
pub fn two_pulse_image() -> GridImage {
    let mut f = GridImage::constant(4, 4, 0, 0).unwrap();
    f.set((1, 1), 8);
    f.set((1, 2), 3);
    f
}

/// 4×4 zeros with a two-pixel plateau of 3 at (1,1),(1,2).
pub fn plateau_image() -> GridImage {
    let mut f = GridImage::constant(4, 4, 0, 0).unwrap();
    f.set((1, 1), 3);
    f.set((1, 2), 3);
    f
}

/// Proptest images with sides in `1..=max_side`, values in `lo..=hi`,
/// zero padding.
pub fn image_strategy(
    max_side: usize,
    lo: i64,
    hi: i64,
) -> impl proptest::strategy::Strategy<Value = GridImage> {
    use proptest::prelude::*;
    (1..=max_side, 1..=max_side).prop_flat_map(move |(w, h)| {
        proptest::collection::vec(lo..=hi, w * h)
            .prop_map(move |values| GridImage::new(w, h, values, 0).unwrap())
    })
}
