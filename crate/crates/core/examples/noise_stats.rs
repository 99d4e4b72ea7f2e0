use std::time::Instant;

use lulu_core::dpt::{dpt_decompose, pulse_histogram};
use lulu_core::{Connectivity, GridImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(2024);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..300 * 400).map(|_| rng.gen_range(0..=255)).collect();
    let f = GridImage::new(400, 300, values, 0).unwrap();
    let t = Instant::now();
    let d = dpt_decompose(&f, &Connectivity::four(), None);
    let hist = pulse_histogram(&d);
    let total: usize = hist.iter().map(|h| h.1).sum();
    let small: usize = hist.iter().filter(|h| h.0 <= 20).map(|h| h.1).sum();
    let large: usize = hist.iter().filter(|h| h.0 > 100).map(|h| h.1).sum();
    println!(
        "seed {seed}: {total} pulses, <=20: {:.4}, >100: {:.4}, {:.2?}",
        small as f64 / total as f64,
        large as f64 / total as f64,
        t.elapsed()
    );
}
