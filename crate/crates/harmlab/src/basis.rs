//! Real harmonic polynomial bases in R^2 and R^3.
//!
//! 2D uses `{1, Re z^k, Im z^k}` built by the complex-power recurrence.
//! 3D uses real solid harmonics `r^l Y_l^m` generated by fully normalized
//! associated-Legendre recurrences kept in Cartesian (polynomial) form, so
//! every element is harmonic by construction and well scaled on the unit
//! sphere.

use crate::geometry::{Point, SampledSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Conditioning guard for the downstream linear programs.
pub const MAX_DEGREE_2D: usize = 40;
pub const MAX_DEGREE_3D: usize = 20;

#[derive(Debug, Error)]
pub enum BasisError {
    #[error("dimension {0} not supported (must be 2 or 3)")]
    BadDimension(usize),
    #[error("degree {degree} beyond cap {cap} for dimension {dim}")]
    DegreeCap { degree: usize, cap: usize, dim: usize },
    #[error("coefficient vector length {got}, expected {expected}")]
    CoeffLength { got: usize, expected: usize },
    #[error("non-finite coefficient at index {0}")]
    NonFinite(usize),
    #[error("point dimension {point} does not match basis dimension {basis}")]
    PointDimension { point: usize, basis: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub dim: usize,
    pub max_degree: usize,
}

impl BasisSpec {
    pub fn new(dim: usize, max_degree: usize) -> Result<Self, BasisError> {
        let cap = match dim {
            2 => MAX_DEGREE_2D,
            3 => MAX_DEGREE_3D,
            _ => return Err(BasisError::BadDimension(dim)),
        };
        if max_degree > cap {
            return Err(BasisError::DegreeCap { degree: max_degree, cap, dim });
        }
        Ok(BasisSpec { dim, max_degree })
    }

    pub fn size(&self) -> usize {
        basis_size(self)
    }
}

/// Number of basis elements: `2m + 1` in 2D, `(m + 1)^2` in 3D.
pub fn basis_size(spec: &BasisSpec) -> usize {
    match spec.dim {
        2 => 2 * spec.max_degree + 1,
        _ => (spec.max_degree + 1) * (spec.max_degree + 1),
    }
}

/// Polynomial degree of the basis element at `idx`.
pub fn element_degree(spec: &BasisSpec, idx: usize) -> usize {
    match spec.dim {
        2 => (idx + 1) / 2,
        _ => (idx as f64).sqrt().floor() as usize,
    }
}

/// Evaluates every basis element at `x` into `out`.
pub fn eval_basis_into(spec: &BasisSpec, x: &Point, out: &mut [f64]) {
    debug_assert_eq!(out.len(), basis_size(spec));
    debug_assert_eq!(x.dim(), spec.dim);
    match spec.dim {
        2 => eval_2d(spec.max_degree, x.x(), x.y(), out),
        _ => eval_3d(spec.max_degree, x.x(), x.y(), x.z(), out),
    }
}

pub fn eval_basis(spec: &BasisSpec, x: &Point) -> Vec<f64> {
    let mut out = vec![0.0; basis_size(spec)];
    eval_basis_into(spec, x, &mut out);
    out
}

/// Row-per-point evaluation matrix over a slice of points.
pub fn eval_basis_matrix(spec: &BasisSpec, points: &[Point]) -> Vec<Vec<f64>> {
    points.iter().map(|p| eval_basis(spec, p)).collect()
}

fn eval_2d(m: usize, x: f64, y: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if m == 0 {
        return;
    }
    let (mut re, mut im) = (x, y);
    out[1] = re;
    out[2] = im;
    for k in 2..=m {
        let nre = x * re - y * im;
        let nim = x * im + y * re;
        re = nre;
        im = nim;
        out[2 * k - 1] = re;
        out[2 * k] = im;
    }
}

/// Index of the (l, m) block entry: `l^2` holds order 0, then (Re, Im)
/// pairs for m = 1..l.
fn idx3(l: usize, m: usize, imag: bool) -> usize {
    if m == 0 {
        l * l
    } else {
        l * l + 2 * m - 1 + usize::from(imag)
    }
}

fn eval_3d(deg: usize, x: f64, y: f64, z: f64, out: &mut [f64]) {
    let r2 = x * x + y * y + z * z;
    // Complex solid harmonics Z_l^m for 0 <= m <= l <= deg. Diagonal terms
    // follow Z_m^m = sqrt((2m+1)/(2m)) (x+iy) Z_{m-1}^{m-1}; climbing in l
    // uses the fully normalized Legendre recurrence with r^2 restoring
    // homogeneity.
    let mut diag_re = 1.0f64;
    let mut diag_im = 0.0f64;
    for m in 0..=deg {
        if m > 0 {
            let s = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
            let nre = s * (x * diag_re - y * diag_im);
            let nim = s * (x * diag_im + y * diag_re);
            diag_re = nre;
            diag_im = nim;
        }
        let (mut p_re, mut p_im) = (diag_re, diag_im);
        store3(out, m, m, p_re, p_im);
        if m + 1 <= deg {
            let s = (2 * m + 3) as f64;
            let (mut c_re, mut c_im) = (s.sqrt() * z * p_re, s.sqrt() * z * p_im);
            store3(out, m + 1, m, c_re, c_im);
            for l in (m + 2)..=deg {
                let lf = l as f64;
                let mf = m as f64;
                let a = ((2.0 * lf - 1.0) * (2.0 * lf + 1.0) / ((lf - mf) * (lf + mf))).sqrt();
                let b = ((2.0 * lf + 1.0) * (lf + mf - 1.0) * (lf - mf - 1.0)
                    / ((2.0 * lf - 3.0) * (lf - mf) * (lf + mf)))
                    .sqrt();
                let n_re = a * z * c_re - b * r2 * p_re;
                let n_im = a * z * c_im - b * r2 * p_im;
                p_re = c_re;
                p_im = c_im;
                c_re = n_re;
                c_im = n_im;
                store3(out, l, m, c_re, c_im);
            }
        }
    }
}

#[inline]
fn store3(out: &mut [f64], l: usize, m: usize, re: f64, im: f64) {
    if m == 0 {
        out[idx3(l, 0, false)] = re;
    } else {
        out[idx3(l, m, false)] = re;
        out[idx3(l, m, true)] = im;
    }
}

/// Coefficient vector over a harmonic basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicPoly {
    pub dim: usize,
    pub max_degree: usize,
    pub coeffs: Vec<f64>,
}

impl HarmonicPoly {
    pub fn new(spec: BasisSpec, coeffs: Vec<f64>) -> Result<Self, BasisError> {
        let expected = basis_size(&spec);
        if coeffs.len() != expected {
            return Err(BasisError::CoeffLength { got: coeffs.len(), expected });
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(BasisError::NonFinite(i));
        }
        Ok(HarmonicPoly { dim: spec.dim, max_degree: spec.max_degree, coeffs })
    }

    pub fn zero(spec: BasisSpec) -> Self {
        HarmonicPoly {
            dim: spec.dim,
            max_degree: spec.max_degree,
            coeffs: vec![0.0; basis_size(&spec)],
        }
    }

    pub fn constant(dim: usize, value: f64) -> Result<Self, BasisError> {
        let spec = BasisSpec::new(dim, 0)?;
        HarmonicPoly::new(spec, vec![value])
    }

    pub fn spec(&self) -> BasisSpec {
        BasisSpec { dim: self.dim, max_degree: self.max_degree }
    }

    pub fn eval(&self, x: &Point) -> f64 {
        debug_assert_eq!(x.dim(), self.dim);
        let vals = eval_basis(&self.spec(), x);
        dot(&self.coeffs, &vals)
    }

    /// Max of |eval| over the samples of `s`.
    pub fn sup_norm(&self, s: &SampledSet) -> f64 {
        s.points
            .iter()
            .map(|p| self.eval(p).abs())
            .fold(0.0f64, f64::max)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Max of |c . row| over precomputed basis rows; avoids re-evaluating the
/// basis when many polynomials share one sample set.
pub fn sup_norm_rows(coeffs: &[f64], rows: &[Vec<f64>]) -> f64 {
    rows.iter()
        .map(|row| dot(coeffs, row).abs())
        .fold(0.0f64, f64::max)
}
