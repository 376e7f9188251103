use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{GbrtError, MIN_TRAIN_SAMPLES};

/// Seeded random partition of `0..n` into update and validation indices.
/// The update part has `round(fraction * n)` entries; both parts are sorted.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), GbrtError> {
    if n < MIN_TRAIN_SAMPLES {
        return Err(GbrtError::TooFewSamples {
            got: n,
            need: MIN_TRAIN_SAMPLES,
        });
    }
    let n_update = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut update = perm[..n_update].to_vec();
    let mut validation = perm[n_update..].to_vec();
    update.sort_unstable();
    validation.sort_unstable();
    Ok((update, validation))
}

pub fn split_dataset<S: Clone>(samples: &[S], fraction: f64, seed: u64) -> Result<(Vec<S>, Vec<S>), GbrtError> {
    let (u, v) = split_indices(samples.len(), fraction, seed)?;
    Ok((
        u.iter().map(|&i| samples[i].clone()).collect(),
        v.iter().map(|&i| samples[i].clone()).collect(),
    ))
}
