//! Square 2-d FFTs on row-major `R x R` buffers, index `i1 * R + i2`.
//!
//! `forward` is scaled by `1/R^2` so it returns Fourier coefficients of the
//! sampled function; `inverse` is unscaled and evaluates a trigonometric
//! polynomial on the grid. The `_band` variants skip the rows/columns that are
//! known to be zero (input) or are not needed (output) for fields truncated
//! to `|k_i| <= n`.

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

pub struct Fft2 {
    r: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

thread_local! {
    static CACHE: RefCell<HashMap<usize, Arc<Fft2>>> = RefCell::new(HashMap::new());
}

impl Fft2 {
    pub fn new(r: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            r,
            fwd: planner.plan_fft_forward(r),
            inv: planner.plan_fft_inverse(r),
        }
    }

    /// Per-thread cached plan for resolution `r`.
    pub fn shared(r: usize) -> Arc<Fft2> {
        CACHE.with(|c| {
            c.borrow_mut()
                .entry(r)
                .or_insert_with(|| Arc::new(Fft2::new(r)))
                .clone()
        })
    }

    pub fn resolution(&self) -> usize {
        self.r
    }

    /// Row indices holding wavenumbers `-n..=n`.
    pub fn band_indices(&self, n: usize) -> Vec<usize> {
        let r = self.r;
        let mut v: Vec<usize> = (0..=n).collect();
        v.extend((r - n)..r);
        v
    }

    fn columns(&self, data: &mut [C64], cols: &[usize], plan: &Arc<dyn Fft<f64>>) {
        let r = self.r;
        let mut buf = vec![C64::new(0.0, 0.0); r * cols.len()];
        for (c, &j) in cols.iter().enumerate() {
            for i in 0..r {
                buf[c * r + i] = data[i * r + j];
            }
        }
        plan.process(&mut buf);
        for (c, &j) in cols.iter().enumerate() {
            for i in 0..r {
                data[i * r + j] = buf[c * r + i];
            }
        }
    }

    fn rows(&self, data: &mut [C64], rows: &[usize], plan: &Arc<dyn Fft<f64>>) {
        let r = self.r;
        if rows.len() == r {
            plan.process(data);
        } else {
            let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            for &i in rows {
                plan.process_with_scratch(&mut data[i * r..(i + 1) * r], &mut scratch);
            }
        }
    }

    pub fn forward(&self, data: &mut [C64]) {
        let all: Vec<usize> = (0..self.r).collect();
        self.rows(data, &all, &self.fwd);
        self.columns(data, &all, &self.fwd);
        let s = 1.0 / (self.r * self.r) as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }

    pub fn inverse(&self, data: &mut [C64]) {
        let all: Vec<usize> = (0..self.r).collect();
        self.rows(data, &all, &self.inv);
        self.columns(data, &all, &self.inv);
    }

    /// Forward transform; only entries with both wavenumbers in `-n..=n` are valid afterwards.
    pub fn forward_band(&self, data: &mut [C64], n: usize) {
        let all: Vec<usize> = (0..self.r).collect();
        let band = self.band_indices(n);
        self.rows(data, &all, &self.fwd);
        self.columns(data, &band, &self.fwd);
        let r = self.r;
        let s = 1.0 / (r * r) as f64;
        for &i in &band {
            for &j in &band {
                data[i * r + j] *= s;
            }
        }
    }

    /// Inverse transform of data that is zero outside the `-n..=n` band.
    pub fn inverse_band(&self, data: &mut [C64], n: usize) {
        let all: Vec<usize> = (0..self.r).collect();
        let band = self.band_indices(n);
        self.rows(data, &band, &self.inv);
        self.columns(data, &all, &self.inv);
    }
}

/// Smallest 2,3,5-smooth integer `>= m`.
pub fn smooth_size(m: usize) -> usize {
    let mut k = m.max(1);
    loop {
        let mut x = k;
        for p in [2, 3, 5] {
            while x % p == 0 {
                x /= p;
            }
        }
        if x == 1 {
            return k;
        }
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(data: &[C64], r: usize, sign: f64) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); r * r];
        for k1 in 0..r {
            for k2 in 0..r {
                let mut s = C64::new(0.0, 0.0);
                for i1 in 0..r {
                    for i2 in 0..r {
                        let ph = sign * 2.0 * std::f64::consts::PI * ((k1 * i1 + k2 * i2) % r) as f64
                            / r as f64;
                        s += data[i1 * r + i2] * C64::from_polar(1.0, ph);
                    }
                }
                out[k1 * r + k2] = s;
            }
        }
        out
    }

    #[test]
    fn matches_direct_dft() {
        let r = 6;
        let mut g = crate::rng::SplitMix64::new(3);
        let data: Vec<C64> = (0..r * r).map(|_| C64::new(g.next_f64(), g.next_f64())).collect();
        let mut a = data.clone();
        Fft2::new(r).forward(&mut a);
        let b = naive(&data, r, -1.0);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y / (r * r) as f64).norm() < 1e-13);
        }
        let mut c = data.clone();
        Fft2::new(r).inverse(&mut c);
        let d = naive(&data, r, 1.0);
        for (x, y) in c.iter().zip(&d) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn band_variants_agree() {
        let r = 10;
        let n = 3;
        let f = Fft2::new(r);
        let band = f.band_indices(n);
        let mut g = crate::rng::SplitMix64::new(5);
        let mut spec = vec![C64::new(0.0, 0.0); r * r];
        for &i in &band {
            for &j in &band {
                spec[i * r + j] = C64::new(g.next_f64(), g.next_f64());
            }
        }
        let mut a = spec.clone();
        let mut b = spec.clone();
        f.inverse(&mut a);
        f.inverse_band(&mut b, n);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-12);
        }
        let mut c = a.clone();
        let mut d = a.clone();
        f.forward(&mut c);
        f.forward_band(&mut d, n);
        for &i in &band {
            for &j in &band {
                assert!((c[i * r + j] - d[i * r + j]).norm() < 1e-12);
                assert!((c[i * r + j] - spec[i * r + j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(97), 100);
        assert_eq!(smooth_size(25), 25);
        assert_eq!(smooth_size(7), 8);
    }
}
