//! Unitary discrete Fourier transforms.
//!
//! Everything downstream assumes the unitary normalization `1/sqrt(n)` in
//! each direction, so that `dft2` is an isometry and partition-of-unity
//! window identities turn into exact frame tightness.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::grid::CField;

/// Cached 1-D plans for one transform length.
#[derive(Clone)]
pub struct Fft1 {
    pub n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft1 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft1 {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    /// In-place unitary forward transform.
    pub fn forward(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.fwd.process(buf);
        let s = 1.0 / (self.n as f64).sqrt();
        for v in buf.iter_mut() {
            *v *= s;
        }
    }

    /// In-place unitary inverse transform.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.inv.process(buf);
        let s = 1.0 / (self.n as f64).sqrt();
        for v in buf.iter_mut() {
            *v *= s;
        }
    }
}

/// Cached 2-D unitary transform for a fixed shape `(rows, cols)`.
#[derive(Clone)]
pub struct Fft2 {
    pub rows: usize,
    pub cols: usize,
    row_plan: Fft1,
    col_plan: Fft1,
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Self {
        Fft2 {
            rows,
            cols,
            row_plan: Fft1::new(cols),
            col_plan: Fft1::new(rows),
        }
    }

    fn process(&self, f: &mut CField, forward: bool) {
        assert_eq!(f.dim(), (self.rows, self.cols));
        for mut row in f.rows_mut() {
            let buf = row.as_slice_mut().expect("standard layout");
            if forward {
                self.row_plan.forward(buf);
            } else {
                self.row_plan.inverse(buf);
            }
        }
        let mut scratch = vec![Complex64::default(); self.rows];
        for c in 0..self.cols {
            for r in 0..self.rows {
                scratch[r] = f[[r, c]];
            }
            if forward {
                self.col_plan.forward(&mut scratch);
            } else {
                self.col_plan.inverse(&mut scratch);
            }
            for r in 0..self.rows {
                f[[r, c]] = scratch[r];
            }
        }
    }

    pub fn forward(&self, f: &mut CField) {
        self.process(f, true);
    }

    pub fn inverse(&self, f: &mut CField) {
        self.process(f, false);
    }
}

/// Unitary 2-D DFT of a field; allocates the plan on the fly.
///
/// Hot paths should hold an [`Fft2`] instead; this is the convenience entry
/// point matching the library-level `dft2`/`idft2` operations.
pub fn dft2(f: &CField) -> Result<CField> {
    let (rows, cols) = f.dim();
    let plan = Fft2::new(rows, cols);
    let mut out = f.clone();
    plan.forward(&mut out);
    Ok(out)
}

/// Unitary inverse 2-D DFT.
pub fn idft2(f: &CField) -> Result<CField> {
    let (rows, cols) = f.dim();
    let plan = Fft2::new(rows, cols);
    let mut out = f.clone();
    plan.inverse(&mut out);
    Ok(out)
}

/// Real field to complex, convenience for tests and I/O.
pub fn to_complex(f: &Array2<f64>) -> CField {
    f.mapv(|v| Complex64::new(v, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::norm;
    use crate::rng::SplitMix64;

    fn random_field(n: usize, seed: u64) -> CField {
        let mut rng = SplitMix64::new(seed);
        CField::from_shape_fn((n, n), |_| {
            let (a, b) = rng.normal_pair();
            Complex64::new(a, b)
        })
    }

    #[test]
    fn delta_to_constant_spectrum() {
        let mut f = CField::zeros((16, 16));
        f[[0, 0]] = Complex64::new(1.0, 0.0);
        let s = dft2(&f).unwrap();
        let want = Complex64::new(1.0 / 16.0, 0.0);
        for v in s.iter() {
            assert!((v - want).norm() < 1e-14);
        }
    }

    #[test]
    fn parseval() {
        let f = random_field(64, 3);
        let s = dft2(&f).unwrap();
        assert!((norm(&s) - norm(&f)).abs() / norm(&f) < 1e-12);
    }

    #[test]
    fn roundtrip() {
        let f = random_field(64, 4);
        let g = idft2(&dft2(&f).unwrap()).unwrap();
        let err = norm(&(&g - &f)) / norm(&f);
        assert!(err < 1e-13, "roundtrip err {err}");
    }
}
