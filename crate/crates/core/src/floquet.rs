//! Period operator `V = U(p)` on the truncated mean-zero Fourier space, its
//! spectrum, and the H1 roughness of its eigenvectors.
//!
//! `V` maps real functions to real functions, so it is assembled in the real
//! orthonormal basis `{sqrt2 cos(2 pi k.x), sqrt2 sin(2 pi k.x)}` over the half
//! lattice (basis index `2h` is the cosine of half-lattice mode `h`, `2h + 1`
//! the sine). The basis functions are joint eigenfunctions of inversion and the
//! half-period translations, so whenever the flow has one of those symmetries
//! `V` is block diagonal; blocks are further split into connected components.
//! The H1 form is diagonal in this basis, so Rayleigh quotients never couple
//! blocks.

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::flow::{FlowSpec, FlowSymmetries, HALF_SHIFTS};
use crate::rng::SplitMix64;
use crate::spectral::{half_lattice, powers, SpectralField, WaveIndex};
use crate::transport::{departure_points, free_evolve, transport_resolution};
use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Entries below this magnitude do not connect basis functions.
const COUPLING_THRESHOLD: f64 = 1e-13;
/// Eigenvalues closer than this belong to one degenerate cluster.
pub const CLUSTER_TOL: f64 = 1e-6;
/// Only eigenvalues at least this large in modulus are clustered.
pub const CLUSTER_MIN_ABS: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct Block {
    /// Real-basis indices spanned by the block, increasing.
    pub basis: Vec<usize>,
    pub matrix: Mat<f64>,
}

#[derive(Debug, Clone)]
pub struct PeriodMatrix {
    pub n_trunc: usize,
    /// `(2n+1)^2 - 1`.
    pub dim: usize,
    pub resolution: usize,
    pub dt: f64,
    pub period: f64,
    pub flow_name: String,
    pub symmetries: FlowSymmetries,
    modes: Vec<WaveIndex>,
    blocks: Vec<Block>,
    defect: f64,
}

fn sector_key(sym: &FlowSymmetries, k: WaveIndex, is_sin: bool) -> u8 {
    let mut key = 0u8;
    if sym.inversion && is_sin {
        key |= 1;
    }
    for (s, a) in HALF_SHIFTS.iter().enumerate() {
        if sym.shifts[s] {
            let phase = (2.0 * a[0]) as i64 * k.k1 + (2.0 * a[1]) as i64 * k.k2;
            if phase.rem_euclid(2) == 1 {
                key |= 2 << s;
            }
        }
    }
    key
}

fn components(m: &Mat<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for j in 0..n {
        for i in 0..n {
            if i != j && m[(i, j)].abs() > COUPLING_THRESHOLD {
                let a = find(&mut parent, i);
                let b = find(&mut parent, j);
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Assemble `V = U(p)` column by column from one backward trace per grid node.
pub fn build_period_matrix(flow: &FlowSpec, n_trunc: usize, dt: f64) -> Result<PeriodMatrix> {
    if n_trunc == 0 {
        return Err(Error::InvalidArgument("n_trunc must be positive".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    let n = n_trunc;
    let ni = n as i64;
    let p = flow.effective_period();
    let r = transport_resolution(n);
    let nodes = r * r;
    let y = departure_points(flow, r, p, 0.0, dt);
    let side = 2 * n + 1;
    let mut p1 = vec![C64::new(0.0, 0.0); nodes * (n + 1)];
    let mut p2 = vec![C64::new(0.0, 0.0); nodes * side];
    p1.par_chunks_mut(n + 1)
        .zip(p2.par_chunks_mut(side))
        .enumerate()
        .for_each(|(i, (a, b))| {
            let e1 = powers(C64::from_polar(1.0, 2.0 * PI * y[i][0]), ni);
            let e2 = powers(C64::from_polar(1.0, 2.0 * PI * y[i][1]), ni);
            a.copy_from_slice(&e1[n..]);
            b.copy_from_slice(&e2);
        });
    let modes = half_lattice(n);
    let dim = 2 * modes.len();
    let sym = flow.symmetries();
    let keys: Vec<u8> = (0..dim)
        .map(|b| sector_key(&sym, modes[b / 2], b % 2 == 1))
        .collect();
    let mut sector_ids: Vec<u8> = keys.clone();
    sector_ids.sort_unstable();
    sector_ids.dedup();
    let sectors: Vec<Vec<usize>> = sector_ids
        .iter()
        .map(|&s| (0..dim).filter(|&b| keys[b] == s).collect())
        .collect();
    let sector_of: Vec<usize> = keys
        .iter()
        .map(|k| sector_ids.iter().position(|s| s == k).unwrap())
        .collect();
    let ri = r as i64;
    let fft = Fft2::new(r);
    let cols: Vec<(Vec<f64>, Vec<f64>)> = modes
        .par_iter()
        .enumerate()
        .map(|(h, k)| {
            let mut buf = vec![C64::new(0.0, 0.0); nodes];
            let k1 = k.k1 as usize;
            let k2 = (k.k2 + ni) as usize;
            for (i, z) in buf.iter_mut().enumerate() {
                *z = p1[i * (n + 1) + k1] * p2[i * side + k2];
            }
            fft.forward_band(&mut buf, n);
            let g = |w: WaveIndex| buf[(w.k1.rem_euclid(ri) * ri + w.k2.rem_euclid(ri)) as usize];
            let mut cos_col = Vec::new();
            for &b in &sectors[sector_of[2 * h]] {
                let kp = modes[b / 2];
                let (gp, gm) = (g(kp), g(kp.neg()));
                cos_col.push(if b % 2 == 0 { gp.re + gm.re } else { -gp.im + gm.im });
            }
            let mut sin_col = Vec::new();
            for &b in &sectors[sector_of[2 * h + 1]] {
                let kp = modes[b / 2];
                let (gp, gm) = (g(kp), g(kp.neg()));
                sin_col.push(if b % 2 == 0 { gp.im + gm.im } else { gp.re - gm.re });
            }
            (cos_col, sin_col)
        })
        .collect();
    let mut blocks = Vec::new();
    for sec in &sectors {
        let m = sec.len();
        let mat = Mat::from_fn(m, m, |i, j| {
            let b = sec[j];
            let col = if b % 2 == 0 { &cols[b / 2].0 } else { &cols[b / 2].1 };
            col[i]
        });
        for comp in components(&mat) {
            let sub = Mat::from_fn(comp.len(), comp.len(), |i, j| mat[(comp[i], comp[j])]);
            blocks.push(Block {
                basis: comp.iter().map(|&i| sec[i]).collect(),
                matrix: sub,
            });
        }
    }
    blocks.sort_by_key(|b| b.basis[0]);
    if blocks.iter().any(|b| !(0..b.matrix.ncols()).all(|j| (0..b.matrix.nrows()).all(|i| b.matrix[(i, j)].is_finite()))) {
        return Err(Error::InvalidArgument("non-finite period matrix entry".into()));
    }
    let mut v = PeriodMatrix {
        n_trunc: n,
        dim,
        resolution: r,
        dt,
        period: p,
        flow_name: flow.name().to_string(),
        symmetries: sym,
        modes,
        blocks,
        defect: 0.0,
    };
    v.defect = unitarity_defect(&v);
    Ok(v)
}

impl PeriodMatrix {
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn defect(&self) -> f64 {
        self.defect
    }

    /// Half-lattice mode behind real-basis index `b`.
    pub fn mode_of(&self, b: usize) -> WaveIndex {
        self.modes[b / 2]
    }

    pub fn lambda_of(&self, b: usize) -> f64 {
        self.modes[b / 2].lambda()
    }

    /// Sizes of the independent blocks.
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.basis.len()).collect()
    }

    /// Dense real matrix in the real basis (small truncations only).
    pub fn to_real_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.dim, self.dim);
        for blk in &self.blocks {
            for (j, &bj) in blk.basis.iter().enumerate() {
                for (i, &bi) in blk.basis.iter().enumerate() {
                    m[(bi, bj)] = blk.matrix[(i, j)];
                }
            }
        }
        m
    }

    /// Mean-zero lattice modes in lattice order; the basis of [`Self::to_complex_dense`].
    pub fn complex_basis(&self) -> Vec<WaveIndex> {
        let n = self.n_trunc as i64;
        let mut v = Vec::new();
        for k1 in -n..=n {
            for k2 in -n..=n {
                if (k1, k2) != (0, 0) {
                    v.push(WaveIndex::new(k1, k2));
                }
            }
        }
        v
    }

    /// `V` in the complex Fourier basis, `V[(k', k)] = <V e_k, e_k'>`.
    pub fn to_complex_dense(&self) -> Mat<C64> {
        let basis = self.complex_basis();
        let pos = |k: WaveIndex| basis.binary_search(&k).unwrap();
        // Column b of T: complex coordinates of real basis vector b.
        let t_col = |b: usize| -> [(usize, C64); 2] {
            let k = self.mode_of(b);
            let s = FRAC_1_SQRT_2;
            if b % 2 == 0 {
                [(pos(k), C64::new(s, 0.0)), (pos(k.neg()), C64::new(s, 0.0))]
            } else {
                [(pos(k), C64::new(0.0, -s)), (pos(k.neg()), C64::new(0.0, s))]
            }
        };
        let mut m = Mat::zeros(self.dim, self.dim);
        for blk in &self.blocks {
            for (j, &bj) in blk.basis.iter().enumerate() {
                for (i, &bi) in blk.basis.iter().enumerate() {
                    let v = blk.matrix[(i, j)];
                    if v == 0.0 {
                        continue;
                    }
                    for (p, tp) in t_col(bi) {
                        for (q, tq) in t_col(bj) {
                            m[(p, q)] += tp * v * tq.conj();
                        }
                    }
                }
            }
        }
        m
    }

    /// `<V e_k, e_k'>` in the complex Fourier basis.
    pub fn complex_entry(&self, row: WaveIndex, col: WaveIndex) -> C64 {
        let h = |k: WaveIndex| -> (usize, C64, C64) {
            // e_k = (sqrt2 cos + i sqrt2 sin) / sqrt2 for k in the half lattice,
            // (sqrt2 cos - i sqrt2 sin) / sqrt2 for -k.
            let (kk, sgn) = if k.in_half_lattice() { (k, 1.0) } else { (k.neg(), -1.0) };
            let idx = self.modes.binary_search(&kk).unwrap();
            (idx, C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.0, sgn * FRAC_1_SQRT_2))
        };
        let (hc, ac, as_) = h(col);
        let (hr, bc, bs) = h(row);
        let entry = |bi: usize, bj: usize| -> f64 {
            for blk in &self.blocks {
                if let (Ok(i), Ok(j)) = (blk.basis.binary_search(&bi), blk.basis.binary_search(&bj)) {
                    return blk.matrix[(i, j)];
                }
            }
            0.0
        };
        // V e_k = ac V c + as V s; project on e_k' = bc c + bs s.
        let mut z = C64::new(0.0, 0.0);
        for (bj, a) in [(2 * hc, ac), (2 * hc + 1, as_)] {
            for (bi, b) in [(2 * hr, bc), (2 * hr + 1, bs)] {
                z += a * entry(bi, bj) * b.conj();
            }
        }
        z
    }
}

fn matvec(m: &Mat<f64>, x: &[f64], y: &mut [f64]) {
    y.iter_mut().for_each(|v| *v = 0.0);
    for j in 0..m.ncols() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        let col = m.col(j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += col[i] * xj;
        }
    }
}

fn matvec_t(m: &Mat<f64>, x: &[f64], y: &mut [f64]) {
    for (j, yj) in y.iter_mut().enumerate() {
        let col = m.col(j);
        let mut s = 0.0;
        for (i, xi) in x.iter().enumerate() {
            s += col[i] * xi;
        }
        *yj = s;
    }
}

/// `||V^T V - I||_2` by 20 power iterations per block from a fixed seed.
pub fn unitarity_defect(v: &PeriodMatrix) -> f64 {
    let mut g = SplitMix64::new(0xDEFEC7);
    let mut worst: f64 = 0.0;
    for blk in &v.blocks {
        let m = blk.basis.len();
        let mut x: Vec<f64> = (0..m).map(|_| g.uniform(-1.0, 1.0)).collect();
        let mut a = vec![0.0; m];
        let mut b = vec![0.0; m];
        let mut est: f64 = 0.0;
        for _ in 0..20 {
            let nx = x.iter().map(|t| t * t).sum::<f64>().sqrt();
            if nx == 0.0 {
                break;
            }
            x.iter_mut().for_each(|t| *t /= nx);
            matvec(&blk.matrix, &x, &mut a);
            matvec_t(&blk.matrix, &a, &mut b);
            for i in 0..m {
                b[i] -= x[i];
            }
            est = b.iter().map(|t| t * t).sum::<f64>().sqrt();
            std::mem::swap(&mut x, &mut b);
        }
        worst = worst.max(est);
    }
    worst
}

/// A complex field on the full lattice (eigenvectors are not real in general).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub n_trunc: usize,
    /// Lattice order, index `(k1 + n)(2n + 1) + (k2 + n)`.
    pub coeffs: Vec<C64>,
}

impl ComplexField {
    pub fn l2_sq(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn h1_sq(&self) -> f64 {
        let tmp = SpectralField::zeros(self.n_trunc);
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, z)| tmp.wave(i).lambda() * z.norm_sqr())
            .sum()
    }

    /// Real part as a real field: coefficients `(c(k) + conj c(-k)) / 2`.
    pub fn real_part(&self) -> SpectralField {
        let mut f = SpectralField::from_coeffs(self.n_trunc, self.coeffs.clone());
        f.symmetrize();
        f
    }

    /// Imaginary part as a real field.
    pub fn imag_part(&self) -> SpectralField {
        let c = self.coeffs.iter().map(|z| z * C64::new(0.0, -1.0)).collect();
        let mut f = SpectralField::from_coeffs(self.n_trunc, c);
        f.symmetrize();
        f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenEntry {
    pub eigenvalue: [f64; 2],
    pub abs: f64,
    /// `E_j` in `(-pi, pi]`.
    pub phase: f64,
    /// H1 Rayleigh quotient of the unit eigenvector (cluster-minimized).
    pub h1_rayleigh: f64,
    /// Participation entropy of the Fourier weights.
    pub entropy: f64,
    pub block: usize,
    pub cluster_size: usize,
}

#[derive(Debug, Clone)]
pub struct EigenReport {
    pub n_trunc: usize,
    pub dim: usize,
    pub defect: f64,
    /// Sorted by `h1_rayleigh` ascending.
    pub entries: Vec<EigenEntry>,
    /// Eigenvectors aligned with `entries` when requested.
    pub vectors: Option<Vec<ComplexField>>,
}

impl EigenReport {
    pub fn min_h1(&self) -> f64 {
        self.entries.first().map(|e| e.h1_rayleigh).unwrap_or(f64::NAN)
    }

    pub fn median_h1(&self) -> f64 {
        let v: Vec<f64> = self.entries.iter().map(|e| e.h1_rayleigh).collect();
        median(&v)
    }

    /// CSV with header `index,re_eig,im_eig,abs_eig,h1_rayleigh`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,re_eig,im_eig,abs_eig,h1_rayleigh\n");
        for (i, e) in self.entries.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                i, e.eigenvalue[0], e.eigenvalue[1], e.abs, e.h1_rayleigh
            ));
        }
        s
    }
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = s.len();
    if m % 2 == 1 {
        s[m / 2]
    } else {
        0.5 * (s[m / 2 - 1] + s[m / 2])
    }
}

/// Minimal H1 Rayleigh values over the span of `vecs` (columns of length `lam.len()`).
fn cluster_rayleigh(vecs: &[Vec<C64>], lam: &[f64]) -> Result<Vec<f64>> {
    let mut q: Vec<Vec<C64>> = Vec::new();
    for v in vecs {
        let mut w = v.clone();
        for _ in 0..2 {
            for u in &q {
                let c: C64 = u.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                for (wi, ui) in w.iter_mut().zip(u) {
                    *wi -= c * ui;
                }
            }
        }
        let nrm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 1e-8 {
            w.iter_mut().for_each(|z| *z /= nrm);
            q.push(w);
        }
    }
    let m = q.len();
    let gram = Mat::<C64>::from_fn(m, m, |i, j| {
        q[i].iter()
            .zip(&q[j])
            .zip(lam)
            .map(|((a, b), l)| a.conj() * b * *l)
            .sum()
    });
    gram.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("{e:?}")))
}

/// Dense eigendecomposition of every block, H1 Rayleigh quotients, and
/// re-diagonalization of the H1 form inside degenerate clusters.
pub fn eigen_report(v: &PeriodMatrix) -> Result<EigenReport> {
    eigen_report_with(v, false)
}

pub fn eigen_report_with(v: &PeriodMatrix, keep_vectors: bool) -> Result<EigenReport> {
    let n = v.n_trunc;
    let side = 2 * n + 1;
    let lattice = |k: WaveIndex| ((k.k1 + n as i64) as usize) * side + (k.k2 + n as i64) as usize;
    let per_block: Vec<Result<Vec<(EigenEntry, Option<ComplexField>)>>> = v
        .blocks
        .iter()
        .enumerate()
        .map(|(bi, blk)| {
            let m = blk.basis.len();
            let lam: Vec<f64> = blk.basis.iter().map(|&b| v.lambda_of(b)).collect();
            let evd = blk
                .matrix
                .eigen()
                .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
            let s = evd.S().column_vector();
            let u = evd.U();
            let mut vals = Vec::with_capacity(m);
            let mut vecs: Vec<Vec<C64>> = Vec::with_capacity(m);
            for j in 0..m {
                let mu: C64 = s[j];
                if !(mu.re.is_finite() && mu.im.is_finite()) {
                    return Err(Error::Decomposition("non-finite eigenvalue".into()));
                }
                let mut w: Vec<C64> = (0..m).map(|i| u[(i, j)]).collect();
                let nrm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                w.iter_mut().for_each(|z| *z /= nrm);
                vals.push(mu);
                vecs.push(w);
            }
            let mut ray: Vec<f64> = vecs
                .iter()
                .map(|w| w.iter().zip(&lam).map(|(z, l)| z.norm_sqr() * l).sum())
                .collect();
            let mut csize = vec![1usize; m];
            let mut used = vec![false; m];
            for i in 0..m {
                if used[i] || vals[i].norm() < CLUSTER_MIN_ABS {
                    continue;
                }
                let members: Vec<usize> = (i..m)
                    .filter(|&j| !used[j] && vals[j].norm() >= CLUSTER_MIN_ABS && (vals[j] - vals[i]).norm() <= CLUSTER_TOL)
                    .collect();
                for &j in &members {
                    used[j] = true;
                }
                if members.len() > 1 {
                    let sub: Vec<Vec<C64>> = members.iter().map(|&j| vecs[j].clone()).collect();
                    let vals_c = cluster_rayleigh(&sub, &lam)?;
                    let mut order = members.clone();
                    order.sort_by(|a, b| ray[*a].partial_cmp(&ray[*b]).unwrap());
                    for (slot, &j) in order.iter().enumerate() {
                        if slot < vals_c.len() {
                            ray[j] = vals_c[slot];
                        }
                        csize[j] = members.len();
                    }
                }
            }
            let mut out = Vec::with_capacity(m);
            for j in 0..m {
                let sq = FRAC_1_SQRT_2;
                let mut weights = Vec::with_capacity(m);
                let mut field = keep_vectors.then(|| vec![C64::new(0.0, 0.0); side * side]);
                // Pair cos/sin coordinates of the same mode.
                let mut idx = 0;
                while idx < m {
                    let b = blk.basis[idx];
                    let k = v.mode_of(b);
                    let (zc, zs, step) = if b % 2 == 0 {
                        if idx + 1 < m && blk.basis[idx + 1] == b + 1 {
                            (vecs[j][idx], vecs[j][idx + 1], 2)
                        } else {
                            (vecs[j][idx], C64::new(0.0, 0.0), 1)
                        }
                    } else {
                        (C64::new(0.0, 0.0), vecs[j][idx], 1)
                    };
                    let fp = (zc - C64::new(0.0, 1.0) * zs) * sq;
                    let fm = (zc + C64::new(0.0, 1.0) * zs) * sq;
                    weights.push(fp.norm_sqr());
                    weights.push(fm.norm_sqr());
                    if let Some(fv) = field.as_mut() {
                        fv[lattice(k)] = fp;
                        fv[lattice(k.neg())] = fm;
                    }
                    idx += step;
                }
                let entropy = -weights
                    .iter()
                    .filter(|&&p| p > 0.0)
                    .map(|p| p * p.ln())
                    .sum::<f64>();
                let mu = vals[j];
                out.push((
                    EigenEntry {
                        eigenvalue: [mu.re, mu.im],
                        abs: mu.norm(),
                        phase: mu.arg(),
                        h1_rayleigh: ray[j],
                        entropy,
                        block: bi,
                        cluster_size: csize[j],
                    },
                    field.map(|c| ComplexField { n_trunc: n, coeffs: c }),
                ));
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(v.dim);
    for b in per_block {
        all.extend(b?);
    }
    all.sort_by(|a, b| a.0.h1_rayleigh.partial_cmp(&b.0.h1_rayleigh).unwrap());
    let vectors = keep_vectors.then(|| all.iter().map(|e| e.1.clone().unwrap()).collect());
    Ok(EigenReport {
        n_trunc: n,
        dim: v.dim,
        defect: v.defect,
        entries: all.into_iter().map(|e| e.0).collect(),
        vectors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RoughnessVerdict {
    #[serde(rename = "H1_EIGENFUNCTION_CANDIDATE")]
    H1EigenfunctionCandidate,
    #[serde(rename = "ROUGH")]
    Rough,
    #[serde(rename = "INCONCLUSIVE")]
    Inconclusive,
}

impl std::fmt::Display for RoughnessVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::H1EigenfunctionCandidate => "H1_EIGENFUNCTION_CANDIDATE",
            Self::Rough => "ROUGH",
            Self::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoughnessRow {
    pub n_trunc: usize,
    pub min_h1: f64,
    pub median_h1: f64,
    pub defect: f64,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoughnessProfile {
    pub rows: Vec<RoughnessRow>,
}

impl RoughnessProfile {
    /// Candidate when the minimum varies by < 10% across truncations; rough
    /// when it is nondecreasing and grows by >= 2x overall.
    pub fn verdict(&self) -> RoughnessVerdict {
        let v: Vec<f64> = self.rows.iter().map(|r| r.min_h1).collect();
        if v.len() < 2 {
            return RoughnessVerdict::Inconclusive;
        }
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi / lo - 1.0 < 0.10 {
            return RoughnessVerdict::H1EigenfunctionCandidate;
        }
        let monotone = v.windows(2).all(|w| w[1] >= w[0]);
        if monotone && v[v.len() - 1] >= 2.0 * v[0] {
            return RoughnessVerdict::Rough;
        }
        RoughnessVerdict::Inconclusive
    }

    /// Ratio of min h1 between two listed truncations.
    pub fn growth(&self, from: usize, to: usize) -> Option<f64> {
        let a = self.rows.iter().find(|r| r.n_trunc == from)?.min_h1;
        let b = self.rows.iter().find(|r| r.n_trunc == to)?.min_h1;
        Some(b / a)
    }

    /// CSV with header `n_trunc,min_h1,median_h1,defect`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n_trunc,min_h1,median_h1,defect\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{}\n", r.n_trunc, r.min_h1, r.median_h1, r.defect));
        }
        s
    }
}

/// Build and analyze `V` at each truncation.
pub fn roughness_profile(flow: &FlowSpec, truncations: &[usize], dt: f64) -> Result<RoughnessProfile> {
    roughness_profile_with(flow, truncations, dt, |_, _| {}).map(|(p, _)| p)
}

/// As [`roughness_profile`], also returning the report at the largest truncation.
pub fn roughness_profile_with(
    flow: &FlowSpec,
    truncations: &[usize],
    dt: f64,
    mut progress: impl FnMut(usize, &RoughnessRow),
) -> Result<(RoughnessProfile, EigenReport)> {
    if truncations.len() < 2 || truncations.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "truncations must be increasing with at least two entries".into(),
        ));
    }
    let mut rows = Vec::new();
    let mut last = None;
    for &n in truncations {
        let v = build_period_matrix(flow, n, dt)?;
        let rep = eigen_report(&v)?;
        let row = RoughnessRow {
            n_trunc: n,
            min_h1: rep.min_h1(),
            median_h1: rep.median_h1(),
            defect: rep.defect,
            dim: rep.dim,
        };
        progress(n, &row);
        rows.push(row);
        last = Some(rep);
    }
    Ok((RoughnessProfile { rows }, last.unwrap()))
}

fn time_average(flow: &FlowSpec, f: &SpectralField, t_end: f64, dt: f64, obs: impl Fn(&SpectralField) -> f64) -> f64 {
    let m = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let h = t_end / m as f64;
    let mut g = f.clone();
    let mut prev = obs(&g);
    let mut acc = 0.0;
    for j in 0..m {
        let t = j as f64 * h;
        g = free_evolve(flow, &g, t, t + h, h);
        let cur = obs(&g);
        acc += 0.5 * h * (prev + cur);
        prev = cur;
    }
    acc / t_end
}

/// `(1/T) int_0^T ||P_K U(t) f||^2 dt` (trapezoid at step `dt`).
pub fn rage_average(flow: &FlowSpec, f: &SpectralField, k_count: usize, t_end: f64, dt: f64) -> f64 {
    time_average(flow, f, t_end, dt, |g| g.project_low(k_count).l2_sq())
}

/// `(1/T) int_0^T ||P_K U(t) f||_1^2 dt` (trapezoid at step `dt`).
pub fn averaged_h1(flow: &FlowSpec, f: &SpectralField, k_count: usize, t_end: f64, dt: f64) -> f64 {
    time_average(flow, f, t_end, dt, |g| g.project_low(k_count).sobolev_norm_sq(1))
}

/// `||V psi - mu psi||` with `mu = <V psi, psi>` for a unit real field, `V` applied by transport.
pub fn eigen_residual(flow: &FlowSpec, psi: &SpectralField, dt: f64) -> (f64, C64) {
    let p = flow.effective_period();
    let vpsi = free_evolve(flow, psi, 0.0, p, dt);
    let nrm = psi.l2_sq();
    let mu = vpsi.inner(psi).unwrap() / nrm;
    let mut res = 0.0;
    for (a, b) in vpsi.coeffs().iter().zip(psi.coeffs()) {
        res += (a - mu * b).norm_sqr();
    }
    ((res / nrm).sqrt(), mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{Axis, Profile};
    use crate::spectral::FOUR_PI_SQ;

    #[test]
    fn zero_flow_is_identity() {
        let v = build_period_matrix(&FlowSpec::zero(), 4, 0.1).unwrap();
        let m = v.to_real_dense();
        for i in 0..v.dim {
            for j in 0..v.dim {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((m[(i, j)] - want).abs() < 1e-12);
            }
        }
        assert!(v.defect() < 1e-12);
        let r = eigen_report(&v).unwrap();
        assert!((r.min_h1() - FOUR_PI_SQ).abs() < 1e-9);
        assert!(v.block_sizes().iter().all(|&s| s == 1));
    }

    #[test]
    fn shear_phases() {
        let u = FlowSpec::shear(Profile::constant(2.0), Axis::X2).with_period(0.25);
        let v = build_period_matrix(&u, 4, 0.01).unwrap();
        let c = v.to_complex_dense();
        let basis = v.complex_basis();
        for (i, ki) in basis.iter().enumerate() {
            for (j, _) in basis.iter().enumerate() {
                let want = if i == j {
                    C64::from_polar(1.0, -2.0 * PI * ki.k2 as f64 * 0.5)
                } else {
                    C64::new(0.0, 0.0)
                };
                assert!((c[(i, j)] - want).norm() < 1e-10, "{ki:?}");
            }
        }
        assert_eq!(v.complex_entry(WaveIndex::new(1, 1), WaveIndex::new(1, 1)), c[(basis.binary_search(&WaveIndex::new(1, 1)).unwrap(), basis.binary_search(&WaveIndex::new(1, 1)).unwrap())]);
        let r = eigen_report(&v).unwrap();
        assert!((r.min_h1() - FOUR_PI_SQ).abs() < 1e-8);
    }

    #[test]
    fn cellular_blocks_and_invariant_cluster() {
        let v = build_period_matrix(&FlowSpec::cellular(1.0), 4, 2e-3).unwrap();
        assert!(v.blocks().len() >= 4);
        let r = eigen_report(&v).unwrap();
        assert!((r.min_h1() / FOUR_PI_SQ - 2.0).abs() < 1e-3, "{}", r.min_h1() / FOUR_PI_SQ);
    }

    #[test]
    fn eigenvectors_map_back() {
        let u = FlowSpec::shear(Profile::constant(2.0), Axis::X2).with_period(0.25);
        let v = build_period_matrix(&u, 3, 0.01).unwrap();
        let r = eigen_report_with(&v, true).unwrap();
        let vecs = r.vectors.as_ref().unwrap();
        for (e, f) in r.entries.iter().zip(vecs) {
            assert!((f.l2_sq() - 1.0).abs() < 1e-12);
            assert!((f.h1_sq() - e.h1_rayleigh).abs() < 1e-9 * e.h1_rayleigh);
        }
    }

    #[test]
    fn verdict_bands() {
        let mk = |v: &[f64]| RoughnessProfile {
            rows: v
                .iter()
                .enumerate()
                .map(|(i, &m)| RoughnessRow { n_trunc: 8 << i, min_h1: m, median_h1: m, defect: 0.0, dim: 0 })
                .collect(),
        };
        assert_eq!(mk(&[1.0, 1.05, 1.02]).verdict(), RoughnessVerdict::H1EigenfunctionCandidate);
        assert_eq!(mk(&[1.0, 2.0, 4.0]).verdict(), RoughnessVerdict::Rough);
        assert_eq!(mk(&[1.0, 3.0, 1.5]).verdict(), RoughnessVerdict::Inconclusive);
    }
}
