//! Numeric kernels shared by the rest of the crate.
//!
//! Everything here is a pure function of its inputs: a dense row-major
//! matrix type, spectral radius estimation by power iteration, rescaling to a
//! target spectral radius, a direct-DFT periodogram and a symmetric
//! positive-definite solver for the readout's normal equations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Iteration cap for [`spectral_radius`].
pub const POWER_ITERATION_CAP: usize = 10_000;
/// Relative change between successive estimates that counts as converged.
pub const POWER_ITERATION_TOL: f64 = 1e-8;
/// Below this spectral radius a matrix cannot be rescaled.
pub const MIN_SCALABLE_RADIUS: f64 = 1e-12;
/// Shortest series [`periodogram`] accepts.
pub const MIN_PERIODOGRAM_LEN: usize = 8;

/// Dense real matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::dim(format!("matrix must be at least 1x1, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::dim(format!("{rows}x{cols} matrix needs {} entries, got {}", rows * cols, data.len())));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite entry at ({}, {})", pos / cols, pos % cols)));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be at least 1x1");
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|row| row.as_ref().len()).unwrap_or(0);
        if let Some(bad) = rows.iter().position(|row| row.as_ref().len() != c) {
            return Err(Error::dim(format!("row {bad} has a different length than row 0")));
        }
        let data = rows.iter().flat_map(|row| row.as_ref().iter().copied()).collect();
        Self::new(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Writes a single entry. Non-finite values are rejected.
    pub fn set(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Numeric(format!("non-finite value for entry ({i}, {j})")));
        }
        if i >= self.rows || j >= self.cols {
            return Err(Error::dim(format!("entry ({i}, {j}) outside {}x{} matrix", self.rows, self.cols)));
        }
        self.data[i * self.cols + j] = value;
        Ok(())
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.rows, self.cols, self.data.iter().map(|v| v * factor).collect())
    }

    pub fn transpose(&self) -> Self {
        let mut out = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        Self { rows: self.cols, cols: self.rows, data: out }
    }

    /// `out = self * x`.
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::dim(format!("vector of length {} against {}x{} matrix", x.len(), self.rows, self.cols)));
        }
        let mut out = vec![0.0; self.rows];
        self.mul_vec_into(x, &mut out);
        Ok(out)
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &RealMatrix) -> Result<RealMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::dim(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = vec![0.0; self.rows * rhs.cols];
        for i in 0..self.rows {
            let out_row = &mut out[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        RealMatrix::new(self.rows, rhs.cols, out)
    }

    /// Gram matrix `selfᵀ * self` without forming the transpose.
    pub fn gram(&self) -> RealMatrix {
        let n = self.cols;
        let mut out = vec![0.0; n * n];
        for t in 0..self.rows {
            let row = self.row(t);
            for (i, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out[i * n + i..(i + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(&row[i..]) {
                    *o += a * b;
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                out[i * n + j] = out[j * n + i];
            }
        }
        RealMatrix { rows: n, cols: n, data: out }
    }

    /// `selfᵀ * rhs` for two matrices with the same row count.
    pub fn transpose_mul(&self, rhs: &RealMatrix) -> Result<RealMatrix> {
        if self.rows != rhs.rows {
            return Err(Error::dim(format!("row counts differ: {} vs {}", self.rows, rhs.rows)));
        }
        let mut out = vec![0.0; self.cols * rhs.cols];
        for t in 0..self.rows {
            let b = rhs.row(t);
            for (i, &a) in self.row(t).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &bv) in out[i * rhs.cols..(i + 1) * rhs.cols].iter_mut().zip(b) {
                    *o += a * bv;
                }
            }
        }
        RealMatrix::new(self.cols, rhs.cols, out)
    }

    /// Copy of rows `start..end`.
    pub fn row_range(&self, start: usize, end: usize) -> Result<RealMatrix> {
        if start >= end || end > self.rows {
            return Err(Error::dim(format!("row range {start}..{end} invalid for {} rows", self.rows)));
        }
        RealMatrix::new(end - start, self.cols, self.data[start * self.cols..end * self.cols].to_vec())
    }

    /// Copy of the square block with top-left corner `(offset, offset)`.
    pub fn diagonal_block(&self, offset: usize, size: usize) -> RealMatrix {
        let mut data = Vec::with_capacity(size * size);
        for i in offset..offset + size {
            data.extend_from_slice(&self.row(i)[offset..offset + size]);
        }
        RealMatrix { rows: size, cols: size, data }
    }

    /// Overwrites the block with top-left corner `(row, col)` by `block`.
    pub fn write_block(&mut self, row: usize, col: usize, block: &RealMatrix) -> Result<()> {
        if row + block.rows > self.rows || col + block.cols > self.cols {
            return Err(Error::dim(format!(
                "{}x{} block at ({row}, {col}) does not fit in {}x{}",
                block.rows, block.cols, self.rows, self.cols
            )));
        }
        for i in 0..block.rows {
            let dst = (row + i) * self.cols + col;
            self.data[dst..dst + block.cols].copy_from_slice(block.row(i));
        }
        Ok(())
    }

    pub fn to_nested(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

impl Serialize for RealMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = serializer.serialize_seq(Some(self.rows))?;
        for i in 0..self.rows {
            seq.serialize_element(self.row(i))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for RealMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        RealMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let tail: f64 = chunks_a.remainder().iter().zip(chunks_b.remainder()).map(|(x, y)| x * y).sum();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Dimension of the Krylov window the Ritz estimate is taken over.
const KRYLOV_WINDOW: usize = 20;

/// Largest eigenvalue modulus of a square matrix.
///
/// Restarted power iteration from a fixed pseudo-random start. Each restart
/// builds an orthonormal basis of the Krylov window {x, Wx, ..., W^(m-1) x}
/// (Arnoldi), takes the largest Ritz value modulus on it as the estimate, and
/// restarts from W^m x. A window wider than two vectors keeps near-tied
/// eigenvalues and dominant complex pairs from stalling convergence.
///
/// The iteration cap counts matrix-vector products.
pub fn spectral_radius(w: &RealMatrix) -> Result<f64> {
    if !w.is_square() {
        return Err(Error::dim(format!("spectral radius needs a square matrix, got {}x{}", w.rows(), w.cols())));
    }
    let n = w.rows();
    let anorm = w.frobenius_norm();
    if anorm == 0.0 {
        return Ok(0.0);
    }
    if n == 1 {
        return Ok(w.get(0, 0).abs());
    }
    let m = n.min(KRYLOV_WINDOW);
    let breakdown = 1e-12 * anorm;

    let mut rng = ChaCha8Rng::seed_from_u64(0x005e_ed0f_5eed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    normalize(&mut x);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut h = vec![vec![0.0; m]; m + 1];
    let mut products = 0usize;
    let mut estimate = f64::NAN;
    let mut stable = 0;
    while products < POWER_ITERATION_CAP {
        basis.clear();
        basis.push(x.clone());
        h.iter_mut().for_each(|row| row.iter_mut().for_each(|v| *v = 0.0));
        let mut invariant_dim = None;
        for j in 0..m {
            let mut v = vec![0.0; n];
            w.mul_vec_into(&basis[j], &mut v);
            products += 1;
            // Modified Gram-Schmidt, repeated once for stability.
            for _ in 0..2 {
                for (i, q) in basis.iter().enumerate() {
                    let c = dot(q, &v);
                    h[i][j] += c;
                    v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= c * qi);
                }
            }
            let hn = norm(&v);
            h[j + 1][j] = hn;
            if hn <= breakdown {
                invariant_dim = Some(j + 1);
                break;
            }
            v.iter_mut().for_each(|vi| *vi /= hn);
            basis.push(v);
        }

        let k = invariant_dim.unwrap_or(m);
        let square: Vec<Vec<f64>> = h[..k].iter().map(|row| row[..k].to_vec()).collect();
        let next =
            hessenberg_eigenvalues(square).map(|ev| ev.iter().fold(0.0f64, |acc, (re, im)| acc.max(re.hypot(*im))));
        if let Some(next) = next {
            if !next.is_finite() {
                return Err(Error::Numeric("power iteration produced a non-finite estimate".into()));
            }
            if invariant_dim.is_some() {
                // The window spans an invariant subspace containing the start
                // vector, so its Ritz values are eigenvalues.
                return Ok(next);
            }
            if (next - estimate).abs() <= POWER_ITERATION_TOL * next {
                stable += 1;
                if stable >= 2 {
                    return Ok(next);
                }
            } else {
                stable = 0;
            }
            estimate = next;
        }

        // Restart from W^m x, expressed in the basis through W Q = Q H.
        let mut coeff = vec![0.0; m + 1];
        coeff[0] = 1.0;
        for j in 0..m {
            let mut advanced = vec![0.0; m + 1];
            for (col, &c) in coeff.iter().enumerate().take(j + 1) {
                for (row, a) in advanced.iter_mut().enumerate().take(j + 2) {
                    *a += h[row][col] * c;
                }
            }
            let s = norm(&advanced);
            coeff = advanced.into_iter().map(|v| v / s).collect();
        }
        x.iter_mut().for_each(|v| *v = 0.0);
        for (q, c) in basis.iter().zip(&coeff) {
            x.iter_mut().zip(q).for_each(|(xi, qi)| *xi += c * qi);
        }
        normalize(&mut x);
    }
    Err(Error::NotConverged { iterations: products, estimate })
}

fn normalize(v: &mut [f64]) {
    let s = norm(v);
    v.iter_mut().for_each(|x| *x /= s);
}

/// Eigenvalues `(re, im)` of a real upper Hessenberg matrix by Francis
/// double-shift QR. `None` if an eigenvalue needs more than 60 sweeps.
fn hessenberg_eigenvalues(mut a: Vec<Vec<f64>>) -> Option<Vec<(f64, f64)>> {
    let n = a.len();
    let mut out = vec![(0.0, 0.0); n];
    let anorm: f64 =
        (0..n).flat_map(|i| (i.saturating_sub(1)..n).map(move |j| (i, j))).map(|(i, j)| a[i][j].abs()).sum();
    if anorm == 0.0 {
        return Some(out);
    }
    let eps = f64::EPSILON;
    let mut nn = n as isize - 1;
    let mut shift = 0.0;
    let at = |a: &Vec<Vec<f64>>, i: isize, j: isize| a[i as usize][j as usize];
    while nn >= 0 {
        let mut its = 0;
        loop {
            // Look for a negligible subdiagonal element.
            let mut l = nn;
            while l > 0 {
                let mut s = at(&a, l - 1, l - 1).abs() + at(&a, l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if at(&a, l, l - 1).abs() <= eps * s {
                    a[l as usize][(l - 1) as usize] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = at(&a, nn, nn);
            if l == nn {
                out[nn as usize] = (x + shift, 0.0);
                nn -= 1;
                break;
            }
            let mut y = at(&a, nn - 1, nn - 1);
            let mut w = at(&a, nn, nn - 1) * at(&a, nn - 1, nn);
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += shift;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    let hi = x + z;
                    let lo = if z != 0.0 { x - w / z } else { hi };
                    out[(nn - 1) as usize] = (hi, 0.0);
                    out[nn as usize] = (lo, 0.0);
                } else {
                    out[(nn - 1) as usize] = (x + p, z);
                    out[nn as usize] = (x + p, -z);
                }
                nn -= 2;
                break;
            }
            if its == 60 {
                return None;
            }
            if its == 10 || its == 20 || its == 40 {
                // Exceptional shift.
                shift += x;
                for i in 0..=nn as usize {
                    a[i][i] -= x;
                }
                let s = at(&a, nn, nn - 1).abs() + at(&a, nn - 1, nn - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let (mut p, mut q, mut r);
            let mut m = nn - 2;
            loop {
                let z = at(&a, m, m);
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / at(&a, m + 1, m) + at(&a, m, m + 1);
                q = at(&a, m + 1, m + 1) - z - rr - ss;
                r = at(&a, m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = at(&a, m, m - 1).abs() * (q.abs() + r.abs());
                let v = p.abs() * (at(&a, m - 1, m - 1).abs() + z.abs() + at(&a, m + 1, m + 1).abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m..nn - 1 {
                a[(i + 2) as usize][i as usize] = 0.0;
                if i != m {
                    a[(i + 2) as usize][(i - 1) as usize] = 0.0;
                }
            }
            let mut k = m;
            while k < nn {
                if k != m {
                    p = at(&a, k, k - 1);
                    q = at(&a, k + 1, k - 1);
                    r = if k + 1 != nn { at(&a, k + 2, k - 1) } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k as usize][(k - 1) as usize] = -at(&a, k, k - 1);
                        }
                    } else {
                        a[k as usize][(k - 1) as usize] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    let (ku, nnu) = (k as usize, nn as usize);
                    for j in ku..=nnu {
                        let mut pp = a[ku][j] + q * a[ku + 1][j];
                        if k + 1 != nn {
                            pp += r * a[ku + 2][j];
                            a[ku + 2][j] -= pp * z;
                        }
                        a[ku + 1][j] -= pp * y;
                        a[ku][j] -= pp * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 } as usize;
                    for i in l as usize..=mmin {
                        let mut pp = x * a[i][ku] + y * a[i][ku + 1];
                        if k + 1 != nn {
                            pp += z * a[i][ku + 2];
                            a[i][ku + 2] -= pp * r;
                        }
                        a[i][ku + 1] -= pp * q;
                        a[i][ku] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Some(out)
}

/// Returns `w * (rho_target / spectral_radius(w))`.
pub fn scale_to_spectral_radius(w: &RealMatrix, rho_target: f64) -> Result<RealMatrix> {
    if !(rho_target > 0.0 && rho_target.is_finite()) {
        return Err(Error::input(format!("target spectral radius must be positive, got {rho_target}")));
    }
    let rho = spectral_radius(w)?;
    if rho < MIN_SCALABLE_RADIUS {
        return Err(Error::CannotScale(rho));
    }
    w.scaled(rho_target / rho)
}

/// One-sided power spectrum of a mean-removed, rectangular-windowed signal.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerSpectrum {
    pub bin_power: Vec<f64>,
    pub sample_count: usize,
}

impl PowerSpectrum {
    pub fn bin_count(&self) -> usize {
        self.bin_power.len()
    }

    /// Sum of power over the full two-sided spectrum; equals
    /// `sum((x - mean)^2)` by Parseval.
    pub fn total_power(&self) -> f64 {
        let n = self.sample_count;
        self.bin_power
            .iter()
            .enumerate()
            .map(|(k, p)| if k == 0 || (n.is_multiple_of(2) && k == n / 2) { *p } else { 2.0 * p })
            .sum()
    }

    /// Index and power of the strongest non-DC bin.
    pub fn peak(&self) -> Option<(usize, f64)> {
        self.bin_power.iter().enumerate().skip(1).fold(None, |best: Option<(usize, f64)>, (k, &p)| match best {
            Some((_, bp)) if bp >= p => best,
            _ => Some((k, p)),
        })
    }
}

/// `bin_power[k] = |DFT_k(x - mean(x))|² / n` for `k = 0..=n/2`, by direct DFT.
pub fn periodogram(signal: &[f64]) -> Result<PowerSpectrum> {
    let n = signal.len();
    if n < MIN_PERIODOGRAM_LEN {
        return Err(Error::input(format!("periodogram needs at least {MIN_PERIODOGRAM_LEN} samples, got {n}")));
    }
    if let Some(i) = signal.iter().position(|v| !v.is_finite()) {
        return Err(Error::input(format!("non-finite sample at index {i}")));
    }
    let mean = signal.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = signal.iter().map(|v| v - mean).collect();

    // Twiddles indexed by (k * t) mod n keep the phase argument exact.
    let step = std::f64::consts::TAU / n as f64;
    let (cos_table, sin_table): (Vec<f64>, Vec<f64>) =
        (0..n).map(|j| ((j as f64 * step).cos(), (j as f64 * step).sin())).unzip();

    let bins = n / 2 + 1;
    let mut bin_power = Vec::with_capacity(bins);
    for k in 0..bins {
        let (mut re, mut im) = (0.0, 0.0);
        let mut idx = 0usize;
        for &x in &centered {
            re += x * cos_table[idx];
            im -= x * sin_table[idx];
            idx += k;
            if idx >= n {
                idx -= n;
            }
        }
        bin_power.push((re * re + im * im) / n as f64);
    }
    Ok(PowerSpectrum { bin_power, sample_count: n })
}

/// Solves `a * x = b` for symmetric positive-definite `a` by Cholesky
/// factorization. Falls back to partially pivoted elimination if rounding
/// makes a pivot non-positive.
pub fn solve_spd(a: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    SpdFactor::new(a)?.solve(b)
}

/// Factorization of a symmetric positive-definite matrix that can be reused
/// for several right-hand sides.
#[derive(Clone, Debug)]
pub struct SpdFactor {
    n: usize,
    kind: FactorKind,
}

#[derive(Clone, Debug)]
enum FactorKind {
    /// Lower-triangular factor, row-major.
    Cholesky(Vec<f64>),
    /// Combined unit-lower/upper factors and the row permutation.
    Lu(Vec<f64>, Vec<usize>),
}

impl SpdFactor {
    pub fn new(a: &RealMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dim(format!("cannot factor a {}x{} matrix", a.rows(), a.cols())));
        }
        let n = a.rows();
        let kind = match cholesky(a) {
            Some(l) => FactorKind::Cholesky(l),
            None => {
                let (lu, perm) = lu_factor(a)?;
                FactorKind::Lu(lu, perm)
            }
        };
        Ok(Self { n, kind })
    }

    /// True when rounding forced the pivoted fallback.
    pub fn is_pivoted_fallback(&self) -> bool {
        matches!(self.kind, FactorKind::Lu(..))
    }

    pub fn solve(&self, b: &RealMatrix) -> Result<RealMatrix> {
        if b.rows() != self.n {
            return Err(Error::dim(format!(
                "cannot solve {0}x{0} system with {1}x{2} right-hand side",
                self.n,
                b.rows(),
                b.cols()
            )));
        }
        let out = match &self.kind {
            FactorKind::Cholesky(l) => cholesky_solve(l, self.n, b),
            FactorKind::Lu(lu, perm) => lu_solve(lu, perm, self.n, b),
        };
        RealMatrix::new(self.n, b.cols(), out)
    }
}

fn cholesky(a: &RealMatrix) -> Option<Vec<f64>> {
    let n = a.rows();
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let lj = &l[j * n..j * n + j];
        let d = a.get(j, j) - dot(lj, lj);
        if !(d > 0.0) {
            return None;
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in j + 1..n {
            let s = a.get(i, j) - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            l[i * n + j] = s / djj;
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], n: usize, b: &RealMatrix) -> Vec<f64> {
    let m = b.cols();
    let mut out = vec![0.0; n * m];
    let mut y = vec![0.0; n];
    for col in 0..m {
        for i in 0..n {
            let s = b.get(i, col) - dot(&l[i * n..i * n + i], &y[..i]);
            y[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[k * n + i] * out[k * m + col];
            }
            out[i * m + col] = s / l[i * n + i];
        }
    }
    out
}

fn lu_factor(a: &RealMatrix) -> Result<(Vec<f64>, Vec<usize>)> {
    let n = a.rows();
    let mut lu = a.as_slice().to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let pivot = (k..n).max_by(|&i, &j| lu[i * n + k].abs().total_cmp(&lu[j * n + k].abs())).unwrap_or(k);
        if lu[pivot * n + k] == 0.0 {
            return Err(Error::Numeric(format!("singular system at column {k}")));
        }
        if pivot != k {
            for j in 0..n {
                lu.swap(k * n + j, pivot * n + j);
            }
            perm.swap(k, pivot);
        }
        for i in k + 1..n {
            let f = lu[i * n + k] / lu[k * n + k];
            lu[i * n + k] = f;
            if f == 0.0 {
                continue;
            }
            for j in k + 1..n {
                lu[i * n + j] -= f * lu[k * n + j];
            }
        }
    }
    Ok((lu, perm))
}

fn lu_solve(lu: &[f64], perm: &[usize], n: usize, b: &RealMatrix) -> Vec<f64> {
    let m = b.cols();
    let mut out = vec![0.0; n * m];
    let mut y = vec![0.0; n];
    for col in 0..m {
        for i in 0..n {
            let s = b.get(perm[i], col) - dot(&lu[i * n..i * n + i], &y[..i]);
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= lu[i * n + k] * out[k * m + col];
            }
            out[i * m + col] = s / lu[i * n + i];
        }
    }
    out
}
