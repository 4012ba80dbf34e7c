use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Matrix;

/// Uniform `(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.random_range(-a..a)).collect();
    Matrix::new(rows, cols, data).expect("sized above")
}

/// [`glorot_uniform`] from a fresh generator seeded with `seed`.
pub fn glorot_init(rows: usize, cols: usize, seed: u64) -> Matrix {
    glorot_uniform(rows, cols, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_and_reproducibility() {
        let m = glorot_init(1, 1, 9);
        assert!(m.item().abs() <= 3f64.sqrt());
        assert_eq!(glorot_init(4, 3, 5), glorot_init(4, 3, 5));
        assert_ne!(glorot_init(4, 3, 5), glorot_init(4, 3, 6));
    }

    #[test]
    fn mean_near_zero() {
        let m = glorot_init(1000, 1000, 1);
        let a = (6.0f64 / 2000.0).sqrt();
        let sigma = a / 3f64.sqrt();
        let mean = m.data().iter().sum::<f64>() / m.len() as f64;
        assert!(mean.abs() < 3.0 * sigma / 1000.0, "mean {mean}");
        assert!(m.data().iter().all(|v| v.abs() < a));
    }
}
