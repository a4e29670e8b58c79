//! Periodic grids and field containers.
//!
//! All fields live on a rectangular grid over the periodic domain
//! `[0, Lx) x [0, Ly)` with square cells `h = Lx/nx = Ly/ny`. Arrays are
//! stored row-major with x fastest: `field[[j, i]]` holds the value at
//! `(x1, x2) = (i*h, j*h)`.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type RField = Array2<f64>;
pub type CField = Array2<Complex64>;

/// Grid geometry. Construct through [`make_grid`] so the invariants
/// (even sizes, square cells) are enforced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    /// Grid spacing, equal in both directions.
    pub h: f64,
}

/// Build a grid with even point counts and square cells.
pub fn make_grid(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<GridSpec> {
    if nx == 0 || ny == 0 || nx % 2 != 0 || ny % 2 != 0 {
        return Err(Error::BadGridSize { nx, ny });
    }
    if !(lx > 0.0) || !(ly > 0.0) {
        return Err(Error::BadDomainLength { lx, ly });
    }
    let hx = lx / nx as f64;
    let hy = ly / ny as f64;
    if (hx - hy).abs() > 1e-12 * hx.max(hy) {
        return Err(Error::NonSquareCells { hx, hy });
    }
    Ok(GridSpec { nx, ny, lx, ly, h: hx })
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Array shape `(ny, nx)` of fields on this grid.
    pub fn shape(&self) -> (usize, usize) {
        (self.ny, self.nx)
    }

    /// Physical position of grid point `(i, j)`.
    pub fn pos(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.h, j as f64 * self.h)
    }

    /// Signed integer frequency for FFT bin `i` out of `n`.
    pub fn signed_freq(i: usize, n: usize) -> i64 {
        let i = i as i64;
        let n = n as i64;
        if i < (n + 1) / 2 {
            i
        } else {
            i - n
        }
    }

    /// Wavenumber `xi = 2*pi*k/L` of the FFT bin pair `(ix, iy)`.
    pub fn wavenumber(&self, ix: usize, iy: usize) -> (f64, f64) {
        let kx = Self::signed_freq(ix, self.nx) as f64;
        let ky = Self::signed_freq(iy, self.ny) as f64;
        (
            2.0 * std::f64::consts::PI * kx / self.lx,
            2.0 * std::f64::consts::PI * ky / self.ly,
        )
    }

    /// Nyquist wavenumber `pi/h`.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.h
    }

    pub fn zeros_c(&self) -> CField {
        CField::zeros(self.shape())
    }

    pub fn zeros_r(&self) -> RField {
        RField::zeros(self.shape())
    }

    pub fn check_shape_c(&self, f: &CField) -> Result<()> {
        if f.dim() != self.shape() {
            return Err(Error::ShapeMismatch { got: f.dim(), want: self.shape() });
        }
        Ok(())
    }

    pub fn check_shape_r(&self, f: &RField) -> Result<()> {
        if f.dim() != self.shape() {
            return Err(Error::ShapeMismatch { got: f.dim(), want: self.shape() });
        }
        Ok(())
    }
}

/// l2 inner product `<u, v> = sum conj(u) v`.
pub fn inner(u: &CField, v: &CField) -> Complex64 {
    u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// l2 norm.
pub fn norm(u: &CField) -> f64 {
    u.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// l2 norm of a slice.
pub fn norm_slice(u: &[Complex64]) -> f64 {
    u.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Inner product over slices.
pub fn inner_slice(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
}
