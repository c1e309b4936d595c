//! Truncated Fourier fields on the unit torus `[0,1)^2`.
//!
//! A field is stored as the full `(2n+1)^2` lattice of complex coefficients
//! `c(k)`, `|k1|, |k2| <= n`, with `f(x) = sum_k c(k) exp(2 pi i k.x)`. Real
//! fields satisfy `c(-k) = conj(c(k))`. The Laplacian eigenvalue of mode `k`
//! is `4 pi^2 |k|^2`.

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::rng::SplitMix64;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

pub const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WaveIndex {
    pub k1: i64,
    pub k2: i64,
}

impl WaveIndex {
    pub const fn new(k1: i64, k2: i64) -> Self {
        Self { k1, k2 }
    }

    pub fn norm_sq(&self) -> i64 {
        self.k1 * self.k1 + self.k2 * self.k2
    }

    /// Laplacian eigenvalue `4 pi^2 |k|^2`.
    pub fn lambda(&self) -> f64 {
        FOUR_PI_SQ * self.norm_sq() as f64
    }

    pub fn neg(&self) -> Self {
        Self::new(-self.k1, -self.k2)
    }

    /// Representative half of the lattice: `k1 > 0`, or `k1 == 0 && k2 > 0`.
    pub fn in_half_lattice(&self) -> bool {
        self.k1 > 0 || (self.k1 == 0 && self.k2 > 0)
    }
}

/// Half-lattice modes of truncation `n` in lexicographic `(k1, k2)` order.
pub fn half_lattice(n: usize) -> Vec<WaveIndex> {
    let n = n as i64;
    let mut v = Vec::new();
    for k1 in 0..=n {
        for k2 in -n..=n {
            let k = WaveIndex::new(k1, k2);
            if k.in_half_lattice() {
                v.push(k);
            }
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    resolution: usize,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(resolution: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), resolution * resolution);
        Self { resolution, values }
    }

    pub fn from_fn(resolution: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let h = 1.0 / resolution as f64;
        let mut values = Vec::with_capacity(resolution * resolution);
        for i1 in 0..resolution {
            for i2 in 0..resolution {
                values.push(f(i1 as f64 * h, i2 as f64 * h));
            }
        }
        Self { resolution, values }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.values[i1 * self.resolution + i2]
    }

    /// Coordinates of node `i1 * R + i2`.
    pub fn node(&self, idx: usize) -> [f64; 2] {
        let r = self.resolution;
        [(idx / r) as f64 / r as f64, (idx % r) as f64 / r as f64]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Grid quadrature of `f^2`.
    pub fn l2_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    n_trunc: usize,
    coeffs: Vec<C64>,
    mean_zero: bool,
}

fn check_resolution(resolution: usize, n_trunc: usize) -> Result<()> {
    let needed = 2 * n_trunc + 1;
    if resolution < needed {
        return Err(Error::ResolutionTooSmall {
            resolution,
            n_trunc,
            needed,
        });
    }
    Ok(())
}

impl SpectralField {
    pub fn zeros(n_trunc: usize) -> Self {
        let s = 2 * n_trunc + 1;
        Self {
            n_trunc,
            coeffs: vec![C64::new(0.0, 0.0); s * s],
            mean_zero: true,
        }
    }

    /// Build from raw lattice coefficients; the mean-zero flag is inferred.
    pub fn from_coeffs(n_trunc: usize, coeffs: Vec<C64>) -> Self {
        let s = 2 * n_trunc + 1;
        assert_eq!(coeffs.len(), s * s);
        let mut f = Self {
            n_trunc,
            coeffs,
            mean_zero: false,
        };
        f.mean_zero = f.coeff(WaveIndex::new(0, 0)) == C64::new(0.0, 0.0);
        f
    }

    /// `amplitude * sin(2 pi k.x)`.
    pub fn sin_mode(n_trunc: usize, k: WaveIndex, amplitude: f64) -> Self {
        let mut f = Self::zeros(n_trunc);
        f.set_pair(k, C64::new(0.0, -amplitude / 2.0));
        f
    }

    /// `amplitude * cos(2 pi k.x)`.
    pub fn cos_mode(n_trunc: usize, k: WaveIndex, amplitude: f64) -> Self {
        let mut f = Self::zeros(n_trunc);
        if k.norm_sq() == 0 {
            f.set_mean(amplitude);
        } else {
            f.set_pair(k, C64::new(amplitude / 2.0, 0.0));
        }
        f
    }

    /// Seeded random real field: modes `0 < |k|^2 <= band^2` of the half
    /// lattice in lexicographic order get real and imaginary parts uniform on
    /// `[-1, 1)` from [`SplitMix64`]; the result is Hermitian-completed and
    /// normalized to unit L2 norm.
    pub fn random(n_trunc: usize, seed: u64, band: f64) -> Self {
        let mut g = SplitMix64::new(seed);
        let mut f = Self::zeros(n_trunc);
        for k in half_lattice(n_trunc) {
            if (k.norm_sq() as f64) <= band * band {
                let re = g.uniform(-1.0, 1.0);
                let im = g.uniform(-1.0, 1.0);
                f.set_pair(k, C64::new(re, im));
            }
        }
        let nrm = f.l2_sq().sqrt();
        if nrm > 0.0 {
            f.scale(1.0 / nrm);
        }
        f
    }

    pub fn n_trunc(&self) -> usize {
        self.n_trunc
    }

    pub fn side(&self) -> usize {
        2 * self.n_trunc + 1
    }

    pub fn is_mean_zero(&self) -> bool {
        self.mean_zero
    }

    pub fn contains(&self, k: WaveIndex) -> bool {
        let n = self.n_trunc as i64;
        k.k1.abs() <= n && k.k2.abs() <= n
    }

    pub fn index(&self, k: WaveIndex) -> usize {
        let n = self.n_trunc as i64;
        ((k.k1 + n) as usize) * self.side() + (k.k2 + n) as usize
    }

    pub fn wave(&self, idx: usize) -> WaveIndex {
        let n = self.n_trunc as i64;
        let s = self.side();
        WaveIndex::new((idx / s) as i64 - n, (idx % s) as i64 - n)
    }

    pub fn coeff(&self, k: WaveIndex) -> C64 {
        if self.contains(k) {
            self.coeffs[self.index(k)]
        } else {
            C64::new(0.0, 0.0)
        }
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    /// Set `c(k) = z` and `c(-k) = conj(z)`.
    pub fn set_pair(&mut self, k: WaveIndex, z: C64) {
        assert!(k.norm_sq() > 0, "use set_mean for the zero mode");
        let i = self.index(k);
        let j = self.index(k.neg());
        self.coeffs[i] = z;
        self.coeffs[j] = z.conj();
    }

    pub fn set_mean(&mut self, m: f64) {
        let i = self.index(WaveIndex::new(0, 0));
        self.coeffs[i] = C64::new(m, 0.0);
        self.mean_zero = m == 0.0;
    }

    pub fn mean(&self) -> f64 {
        self.coeff(WaveIndex::new(0, 0)).re
    }

    /// Copy with the zero mode removed.
    pub fn mean_removed(&self) -> Self {
        let mut f = self.clone();
        f.set_mean(0.0);
        f
    }

    /// Largest `|c(-k) - conj(c(k))|`.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| {
                let k = self.wave(i);
                (self.coeffs[self.index(k.neg())] - self.coeffs[i].conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Replace `c` by its Hermitian part so the field is exactly real.
    pub fn symmetrize(&mut self) {
        let old = self.coeffs.clone();
        for i in 0..old.len() {
            let k = self.wave(i);
            let j = self.index(k.neg());
            self.coeffs[i] = 0.5 * (old[i] + old[j].conj());
        }
        let z = self.index(WaveIndex::new(0, 0));
        self.mean_zero = self.coeffs[z] == C64::new(0.0, 0.0);
    }

    pub fn to_spectral(g: &GridField, n_trunc: usize, remove_mean: bool) -> Result<Self> {
        let r = g.resolution();
        check_resolution(r, n_trunc)?;
        let mut buf: Vec<C64> = g.values().iter().map(|&v| C64::new(v, 0.0)).collect();
        Fft2::shared(r).forward_band(&mut buf, n_trunc);
        let mut f = Self::from_band_buffer(&buf, r, n_trunc);
        f.symmetrize();
        if remove_mean {
            f.set_mean(0.0);
        }
        Ok(f)
    }

    pub fn to_grid(&self, resolution: usize) -> Result<GridField> {
        check_resolution(resolution, self.n_trunc)?;
        let mut buf = self.to_band_buffer(resolution);
        Fft2::shared(resolution).inverse_band(&mut buf, self.n_trunc);
        Ok(GridField::new(
            resolution,
            buf.into_iter().map(|z| z.re).collect(),
        ))
    }

    /// Scatter coefficients into an `R x R` FFT buffer (zero elsewhere).
    pub fn to_band_buffer(&self, r: usize) -> Vec<C64> {
        let mut buf = vec![C64::new(0.0, 0.0); r * r];
        self.scatter_into(&mut buf, r, |_, z| z);
        buf
    }

    /// Scatter `map(k, c(k))` into `buf` at wrapped lattice positions.
    pub fn scatter_into(&self, buf: &mut [C64], r: usize, map: impl Fn(WaveIndex, C64) -> C64) {
        let ri = r as i64;
        for (i, &z) in self.coeffs.iter().enumerate() {
            let k = self.wave(i);
            let p = (k.k1.rem_euclid(ri) * ri + k.k2.rem_euclid(ri)) as usize;
            buf[p] = map(k, z);
        }
    }

    /// Gather band coefficients from a forward-transformed buffer.
    pub fn from_band_buffer(buf: &[C64], r: usize, n_trunc: usize) -> Self {
        let mut f = Self::zeros(n_trunc);
        let ri = r as i64;
        for i in 0..f.coeffs.len() {
            let k = f.wave(i);
            f.coeffs[i] = buf[(k.k1.rem_euclid(ri) * ri + k.k2.rem_euclid(ri)) as usize];
        }
        let z = f.index(WaveIndex::new(0, 0));
        f.mean_zero = f.coeffs[z] == C64::new(0.0, 0.0);
        f
    }

    /// `sum_k (4 pi^2 |k|^2)^m |c(k)|^2`; the zero mode only enters for `m = 0`.
    pub fn sobolev_norm_sq(&self, m: i32) -> f64 {
        let mut s = 0.0;
        for (i, z) in self.coeffs.iter().enumerate() {
            let k = self.wave(i);
            if k.norm_sq() == 0 {
                if m == 0 {
                    s += z.norm_sqr();
                }
                continue;
            }
            s += k.lambda().powi(m) * z.norm_sqr();
        }
        s
    }

    pub fn l2_sq(&self) -> f64 {
        self.sobolev_norm_sq(0)
    }

    /// `||f - mean||^2`, summed directly over the nonzero modes.
    pub fn var_sq(&self) -> f64 {
        let mid = self.coeffs.len() / 2;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != mid)
            .map(|(_, z)| z.norm_sqr())
            .sum()
    }

    /// Orthogonal projection onto the span of the `K` lowest Laplacian
    /// eigenmodes of the mean-zero lattice, counted with multiplicity. The
    /// shell containing the `K`-th mode is kept whole; the zero mode is kept.
    pub fn project_low(&self, k_count: usize) -> Self {
        let cutoff = shell_cutoff(self.n_trunc, k_count);
        let mut f = self.clone();
        for i in 0..f.coeffs.len() {
            if f.wave(i).norm_sq() > cutoff {
                f.coeffs[i] = C64::new(0.0, 0.0);
            }
        }
        f
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.n_trunc != other.n_trunc {
            return Err(Error::TruncationMismatch(self.n_trunc, other.n_trunc));
        }
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b.conj())
            .sum())
    }

    /// Direct trigonometric evaluation at a point.
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let n = self.n_trunc as i64;
        let e1 = C64::from_polar(1.0, 2.0 * PI * x[0]);
        let e2 = C64::from_polar(1.0, 2.0 * PI * x[1]);
        let p1 = powers(e1, n);
        let p2 = powers(e2, n);
        let s = self.side();
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..s {
            let mut row = C64::new(0.0, 0.0);
            for b in 0..s {
                row += self.coeffs[a * s + b] * p2[b];
            }
            acc += row * p1[a];
        }
        acc.re
    }

    pub fn scale(&mut self, a: f64) {
        self.coeffs.iter_mut().for_each(|z| *z *= a);
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut f = self.clone();
        f.scale(a);
        f
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self> {
        if self.n_trunc != other.n_trunc {
            return Err(Error::TruncationMismatch(self.n_trunc, other.n_trunc));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x + a * y)
            .collect();
        Ok(Self::from_coeffs(self.n_trunc, coeffs))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// Same field on truncation `n`: extra modes dropped or zero-padded.
    pub fn retruncate(&self, n: usize) -> Self {
        let mut f = Self::zeros(n);
        for i in 0..f.coeffs.len() {
            let k = f.wave(i);
            f.coeffs[i] = self.coeff(k);
        }
        f.mean_zero = f.mean() == 0.0 && f.coeff(WaveIndex::new(0, 0)).im == 0.0;
        f
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// `[z^-n, ..., z^n]`.
pub(crate) fn powers(z: C64, n: i64) -> Vec<C64> {
    let s = (2 * n + 1) as usize;
    let mut p = vec![C64::new(1.0, 0.0); s];
    let zi = z.conj();
    for j in 1..=n as usize {
        p[n as usize + j] = p[n as usize + j - 1] * z;
        p[n as usize - j] = p[n as usize - j + 1] * zi;
    }
    p
}

/// Largest `|k|^2` retained by `project_low(_, k_count)`.
pub fn shell_cutoff(n_trunc: usize, k_count: usize) -> i64 {
    let n = n_trunc as i64;
    let mut shells: Vec<i64> = Vec::new();
    for k1 in -n..=n {
        for k2 in -n..=n {
            let s = k1 * k1 + k2 * k2;
            if s > 0 {
                shells.push(s);
            }
        }
    }
    shells.sort_unstable();
    if k_count == 0 {
        return 0;
    }
    if k_count >= shells.len() {
        return i64::MAX;
    }
    shells[k_count - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn constant_removed() {
        let g = GridField::from_fn(16, |_, _| 5.0);
        let f = SpectralField::to_spectral(&g, 4, true).unwrap();
        assert!(f.coeffs().iter().all(|z| z.norm() < 1e-14));
        assert!(f.is_mean_zero());
    }

    #[test]
    fn single_sine_mode() {
        let g = GridField::from_fn(16, |x1, _| (2.0 * PI * x1).sin());
        let f = SpectralField::to_spectral(&g, 4, false).unwrap();
        for i in 0..f.coeffs().len() {
            let k = f.wave(i);
            let want = match (k.k1, k.k2) {
                (1, 0) => C64::new(0.0, -0.5),
                (-1, 0) => C64::new(0.0, 0.5),
                _ => C64::new(0.0, 0.0),
            };
            assert!((f.coeffs()[i] - want).norm() < 1e-14, "{k:?}");
        }
        let back = f.to_grid(16).unwrap();
        for (a, b) in back.values().iter().zip(g.values()) {
            assert!(close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn resolution_checked() {
        let f = SpectralField::zeros(8);
        assert!(matches!(f.to_grid(16), Err(Error::ResolutionTooSmall { .. })));
        assert!(f.to_grid(17).is_ok());
        let g = GridField::from_fn(10, |_, _| 0.0);
        assert!(SpectralField::to_spectral(&g, 5, false).is_err());
    }

    #[test]
    fn sobolev_examples() {
        let s2 = 2f64.sqrt();
        let f = SpectralField::sin_mode(4, WaveIndex::new(1, 0), s2);
        assert!(close(f.sobolev_norm_sq(0), 1.0, 1e-14));
        assert!(close(f.sobolev_norm_sq(1), FOUR_PI_SQ, 1e-12));
        let g = SpectralField::sin_mode(4, WaveIndex::new(0, 2), s2);
        assert!(close(g.sobolev_norm_sq(1), 16.0 * PI * PI, 1e-11));
        assert!(close(g.sobolev_norm_sq(-1), 1.0 / (16.0 * PI * PI), 1e-15));
    }

    #[test]
    fn projection_by_shell() {
        let f = SpectralField::sin_mode(6, WaveIndex::new(1, 0), 1.0)
            .axpy(1.0, &SpectralField::sin_mode(6, WaveIndex::new(4, 0), 1.0))
            .unwrap();
        // The |k|^2 = 1 shell has four modes.
        let p = f.project_low(4);
        let want = SpectralField::sin_mode(6, WaveIndex::new(1, 0), 1.0);
        assert!(p.sub(&want).unwrap().l2_sq() < 1e-28);
        // K inside a shell keeps the whole shell.
        assert_eq!(shell_cutoff(6, 1), 1);
        assert_eq!(shell_cutoff(6, 5), 2);
        assert_eq!(f.project_low(10_000), f);
    }

    #[test]
    fn inner_products() {
        let a = SpectralField::sin_mode(4, WaveIndex::new(1, 0), 1.0);
        let b = SpectralField::sin_mode(4, WaveIndex::new(0, 1), 1.0);
        assert!(a.inner(&b).unwrap().norm() < 1e-15);
        assert!(close(a.inner(&a).unwrap().re, a.sobolev_norm_sq(0), 1e-15));
        assert!(a.inner(&SpectralField::zeros(5)).is_err());
    }

    #[test]
    fn random_is_unit_real_mean_zero() {
        let f = SpectralField::random(8, 42, 2.0);
        assert!(close(f.l2_sq(), 1.0, 1e-14));
        assert!(f.hermitian_defect() == 0.0);
        assert!(f.is_mean_zero());
        assert_eq!(f, SpectralField::random(8, 42, 2.0));
        assert_ne!(f, SpectralField::random(8, 43, 2.0));
        for i in 0..f.coeffs().len() {
            if f.wave(i).norm_sq() > 4 {
                assert_eq!(f.coeffs()[i], C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn point_evaluation_matches_grid() {
        let f = SpectralField::random(5, 7, 4.0);
        let g = f.to_grid(12).unwrap();
        for idx in [0, 17, 100, 143] {
            assert!(close(f.eval(g.node(idx)), g.values()[idx], 1e-12));
        }
    }
}
