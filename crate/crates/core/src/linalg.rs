//! Band covariance, SPD solves and band-space transforms.
//!
//! The matrices here are small (L x L for L bands, a few hundred at most)
//! so the factorization is a plain dense Cholesky. Reductions use a fixed
//! lane layout and a fixed combination order, which makes every result
//! bit-identical regardless of thread count.

use std::ops::Index;

use rayon::prelude::*;

use crate::cube::HyperspectralCube;
use crate::error::{Error, Result};

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMat {
    n: usize,
    data: Vec<f64>,
}

impl SquareMat {
    pub fn zeros(n: usize) -> Self {
        SquareMat {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SquareMat::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = SquareMat::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    context: format!("row {i} of a square matrix"),
                    expected: n,
                    actual: row.len(),
                });
            }
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Matrix-vector product with the fixed-order dot kernel.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| fixed_dot(self.row(i), x)).collect()
    }
}

impl Index<(usize, usize)> for SquareMat {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

/// Dot product over four fixed accumulator lanes combined in a fixed
/// order; the layout is part of the determinism contract.
pub(crate) fn fixed_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let quads = a.len() / 4;
    for k in 0..quads {
        let i = 4 * k;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * quads..a.len() {
        tail += a[i] * b[i];
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail
}

/// Band covariance matrix with its Cholesky factor and the ridge that was
/// needed (0 when the plain factorization succeeded).
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    matrix: SquareMat,
    factor: SquareMat,
    ridge: f64,
    pixels: usize,
}

impl CovarianceModel {
    pub fn matrix(&self) -> &SquareMat {
        &self.matrix
    }

    pub fn ridge_applied(&self) -> f64 {
        self.ridge
    }

    pub fn pixels(&self) -> usize {
        self.pixels
    }

    pub fn bands(&self) -> usize {
        self.matrix.n()
    }

    fn tri_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.factor.n();
        let f = &self.factor;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let s = fixed_dot(&f.row(i)[..i], &y[..i]);
            y[i] = (b[i] - s) / f.at(i, i);
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = 0.0;
            for k in i + 1..n {
                s += f.at(k, i) * x[k];
            }
            x[i] = (y[i] - s) / f.at(i, i);
        }
        x
    }

    /// Solves (K + ridge I) x = b with one iterative refinement step.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.matrix.n();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                context: "right-hand side length".into(),
                expected: n,
                actual: b.len(),
            });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("right-hand side".into()));
        }
        let mut x = self.tri_solve(b);
        let residual: Vec<f64> = (0..n)
            .map(|i| b[i] - fixed_dot(self.matrix.row(i), &x) - self.ridge * x[i])
            .collect();
        let correction = self.tri_solve(&residual);
        for (xi, ci) in x.iter_mut().zip(&correction) {
            *xi += ci;
        }
        Ok(x)
    }
}

fn cholesky(k: &SquareMat, ridge: f64) -> Option<SquareMat> {
    let n = k.n();
    let mut f = SquareMat::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = k.at(i, j) + if i == j { ridge } else { 0.0 };
            for p in 0..j {
                s -= f.at(i, p) * f.at(j, p);
            }
            if i == j {
                if !s.is_finite() || s <= 0.0 {
                    return None;
                }
                f.set(i, j, s.sqrt());
            } else {
                f.set(i, j, s / f.at(j, j));
            }
        }
    }
    Some(f)
}

fn factor_with_ridge(k: &SquareMat) -> Result<(SquareMat, f64)> {
    if let Some(f) = cholesky(k, 0.0) {
        return Ok((f, 0.0));
    }
    let n = k.n() as f64;
    let mut base = (0..k.n()).map(|i| k.at(i, i)).sum::<f64>() / n;
    if !base.is_finite() || base <= 0.0 {
        base = 1.0;
    }
    for exp in 0..7 {
        let ridge = base * 1e-8 * 10f64.powi(exp);
        if let Some(f) = cholesky(k, ridge) {
            return Ok((f, ridge));
        }
    }
    Err(Error::RidgeExhausted {
        max_ridge: base * 1e-2,
    })
}

/// Covariance of a centered cube: K = (1/N) sum of r_i r_i^T, i.e. the
/// Gram matrix of the band planes over N. Each entry is one fixed-order
/// reduction over the full plane pair, so the result does not depend on
/// the thread count. Rank deficiency is absorbed by an escalating ridge.
pub fn covariance(centered: &HyperspectralCube) -> Result<CovarianceModel> {
    let l = centered.bands();
    let n = centered.pixels() as f64;
    let pairs: Vec<(usize, usize)> = (0..l)
        .flat_map(|i| (i..l).map(move |j| (i, j)))
        .collect();
    let entries: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| fixed_dot(centered.plane(i), centered.plane(j)) / n)
        .collect();
    let mut k = SquareMat::zeros(l);
    for (&(i, j), &v) in pairs.iter().zip(&entries) {
        k.set(i, j, v);
        k.set(j, i, v);
    }
    let (factor, ridge) = factor_with_ridge(&k)?;
    Ok(CovarianceModel {
        matrix: k,
        factor,
        ridge,
        pixels: centered.pixels(),
    })
}

/// Per-band scaling or a full band-mixing matrix.
#[derive(Debug, Clone)]
pub enum BandTransform {
    Diagonal(Vec<f64>),
    Full(SquareMat),
}

impl BandTransform {
    /// Diagonal transform; every scale must be finite and positive.
    pub fn diagonal(scales: Vec<f64>) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::InvalidArgument("empty diagonal transform".into()));
        }
        if let Some(bad) = scales.iter().find(|s| !s.is_finite() || **s <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "diagonal transform entries must be positive and finite, found {bad}"
            )));
        }
        Ok(BandTransform::Diagonal(scales))
    }

    /// Full transform; the matrix must be invertible.
    pub fn full(mat: SquareMat) -> Result<Self> {
        // Gaussian elimination with partial pivoting on a scratch copy;
        // a vanishing pivot means a singular matrix
        let n = mat.n();
        if n == 0 {
            return Err(Error::InvalidArgument("empty transform matrix".into()));
        }
        let mut a = mat.clone();
        for col in 0..n {
            let (pivot_row, pivot) = (col..n)
                .map(|r| (r, a.at(r, col).abs()))
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            if !pivot.is_finite() || pivot == 0.0 {
                return Err(Error::InvalidArgument(
                    "transform matrix is singular".into(),
                ));
            }
            if pivot_row != col {
                for c in 0..n {
                    let tmp = a.at(col, c);
                    a.set(col, c, a.at(pivot_row, c));
                    a.set(pivot_row, c, tmp);
                }
            }
            for r in col + 1..n {
                let factor = a.at(r, col) / a.at(col, col);
                for c in col..n {
                    let v = a.at(r, c) - factor * a.at(col, c);
                    a.set(r, c, v);
                }
            }
        }
        Ok(BandTransform::Full(mat))
    }

    pub fn bands(&self) -> usize {
        match self {
            BandTransform::Diagonal(d) => d.len(),
            BandTransform::Full(m) => m.n(),
        }
    }
}

/// Applies a band transform to every pixel spectrum. The diagonal case
/// scales planes; the full case forms each output band as a fixed-order
/// combination of input planes.
pub fn apply_band_transform(
    cube: &HyperspectralCube,
    t: &BandTransform,
) -> Result<HyperspectralCube> {
    if t.bands() != cube.bands() {
        return Err(Error::DimensionMismatch {
            context: "band transform size".into(),
            expected: cube.bands(),
            actual: t.bands(),
        });
    }
    let planes: Vec<Vec<f64>> = match t {
        BandTransform::Diagonal(scales) => cube
            .planes()
            .par_iter()
            .zip(scales.par_iter())
            .map(|(plane, &s)| plane.iter().map(|&v| v * s).collect())
            .collect(),
        BandTransform::Full(a) => (0..cube.bands())
            .into_par_iter()
            .map(|out_band| {
                let mut out = vec![0.0; cube.pixels()];
                for (in_band, plane) in cube.planes().iter().enumerate() {
                    let w = a.at(out_band, in_band);
                    for (o, &v) in out.iter_mut().zip(plane) {
                        *o += w * v;
                    }
                }
                out
            })
            .collect(),
    };
    cube.with_planes(planes)
}
