//! Vector kernels with a fixed reduction order.
//!
//! Reductions sum fixed-size blocks in parallel and then add the block sums
//! in index order, so results do not depend on the thread count.

use rayon::prelude::*;

const BLOCK: usize = 4096;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= BLOCK {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    let parts: Vec<f64> = a
        .par_chunks(BLOCK)
        .zip(b.par_chunks(BLOCK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    parts.iter().sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.par_chunks_mut(BLOCK).zip(x.par_chunks(BLOCK)).for_each(|(yc, xc)| {
        for (yi, xi) in yc.iter_mut().zip(xc) {
            *yi += alpha * xi;
        }
    });
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    x.par_chunks_mut(BLOCK).for_each(|c| c.iter_mut().for_each(|v| *v *= alpha));
}

pub fn copy(src: &[f64], dst: &mut [f64]) {
    dst.par_chunks_mut(BLOCK).zip(src.par_chunks(BLOCK)).for_each(|(d, s)| d.copy_from_slice(s));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_serial_and_is_repeatable() {
        let a: Vec<f64> = (0..20_000).map(|i| ((i * 37) % 101) as f64 * 0.013 - 0.5).collect();
        let b: Vec<f64> = (0..20_000).map(|i| ((i * 11) % 53) as f64 * 0.021 - 0.4).collect();
        let serial: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let d = dot(&a, &b);
        assert!((d - serial).abs() < 1e-9 * serial.abs().max(1.0));
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        assert_eq!(pool.install(|| dot(&a, &b)).to_bits(), d.to_bits());
    }

    #[test]
    fn axpy_scale() {
        let x = vec![1.0; 10_000];
        let mut y = vec![2.0; 10_000];
        axpy(0.5, &x, &mut y);
        scale(2.0, &mut y);
        assert!(y.iter().all(|&v| v == 5.0));
    }
}
