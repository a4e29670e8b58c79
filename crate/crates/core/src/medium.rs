//! Velocity/damping media and the random smooth-medium family.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, RField};
use crate::rng::SplitMix64;

/// Default damping level used throughout the experiments.
pub const DEFAULT_ALPHA: f64 = 2.0 * std::f64::consts::PI;

/// Smallest velocity accepted when drawing random media; draws below this
/// are rejected and resampled from the same stream.
pub const MIN_C_GUARD: f64 = 0.5;

const MAX_RESAMPLE_ATTEMPTS: usize = 100;

/// A medium: velocity `c(x)`, damping `alpha(x)`, and the domain length
/// scale `L` that makes the damping term dimensionless.
#[derive(Debug, Clone)]
pub struct Medium {
    pub grid: GridSpec,
    pub c: RField,
    pub alpha: RField,
    pub l: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub c_mean: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_mean: f64,
}

impl Medium {
    pub fn new(grid: GridSpec, c: RField, alpha: RField, l: f64) -> Result<Self> {
        grid.check_shape_r(&c)?;
        grid.check_shape_r(&alpha)?;
        let c_min = c.iter().cloned().fold(f64::INFINITY, f64::min);
        let c_max = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let c_mean = c.iter().sum::<f64>() / c.len() as f64;
        if !(c_min > 0.0) {
            return Err(Error::NonPositiveVelocity { cmin: c_min });
        }
        let alpha_min = alpha.iter().cloned().fold(f64::INFINITY, f64::min);
        let alpha_max = alpha.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let alpha_mean = alpha.iter().sum::<f64>() / alpha.len() as f64;
        if !(alpha_min > 0.0) {
            return Err(Error::NonPositiveDamping { amin: alpha_min });
        }
        Ok(Medium { grid, c, alpha, l, c_min, c_max, c_mean, alpha_min, alpha_max, alpha_mean })
    }

    /// Constant-coefficient medium.
    pub fn constant(grid: GridSpec, c0: f64, alpha0: f64, l: f64) -> Result<Self> {
        let c = Array2::from_elem(grid.shape(), c0);
        let alpha = Array2::from_elem(grid.shape(), alpha0);
        Medium::new(grid, c, alpha, l)
    }

    /// Replace the damping field by a constant.
    pub fn with_alpha(mut self, alpha0: f64) -> Result<Self> {
        self.alpha = Array2::from_elem(self.grid.shape(), alpha0);
        self.alpha_min = alpha0;
        self.alpha_max = alpha0;
        self.alpha_mean = alpha0;
        if !(alpha0 > 0.0) {
            return Err(Error::NonPositiveDamping { amin: alpha0 });
        }
        Ok(self)
    }

    /// Bilinear interpolation of `c` at an arbitrary point, with periodic
    /// wrap-around. The media here are smooth so the interpolation order is
    /// immaterial at the tolerances used.
    pub fn c_at(&self, x1: f64, x2: f64) -> f64 {
        let g = self.grid;
        let fx = (x1 / g.h).rem_euclid(g.nx as f64);
        let fy = (x2 / g.h).rem_euclid(g.ny as f64);
        let i0 = fx.floor() as usize % g.nx;
        let j0 = fy.floor() as usize % g.ny;
        let tx = fx - fx.floor();
        let ty = fy - fy.floor();
        let i1 = (i0 + 1) % g.nx;
        let j1 = (j0 + 1) % g.ny;
        let c00 = self.c[[j0, i0]];
        let c01 = self.c[[j0, i1]];
        let c10 = self.c[[j1, i0]];
        let c11 = self.c[[j1, i1]];
        c00 * (1.0 - tx) * (1.0 - ty) + c01 * tx * (1.0 - ty) + c10 * (1.0 - tx) * ty + c11 * tx * ty
    }

    /// Same interpolation for `alpha`.
    pub fn alpha_at(&self, x1: f64, x2: f64) -> f64 {
        let g = self.grid;
        let fx = (x1 / g.h).rem_euclid(g.nx as f64);
        let fy = (x2 / g.h).rem_euclid(g.ny as f64);
        let i0 = fx.floor() as usize % g.nx;
        let j0 = fy.floor() as usize % g.ny;
        let tx = fx - fx.floor();
        let ty = fy - fy.floor();
        let i1 = (i0 + 1) % g.nx;
        let j1 = (j0 + 1) % g.ny;
        let a00 = self.alpha[[j0, i0]];
        let a01 = self.alpha[[j0, i1]];
        let a10 = self.alpha[[j1, i0]];
        let a11 = self.alpha[[j1, i1]];
        a00 * (1.0 - tx) * (1.0 - ty) + a01 * tx * (1.0 - ty) + a10 * (1.0 - tx) * ty + a11 * tx * ty
    }
}

/// One Fourier term of the random medium family: amplitude and integer
/// wavenumber pair.
#[derive(Debug, Clone, Copy)]
pub struct MediumTerm {
    pub amp: f64,
    pub kx: f64,
    pub ky: f64,
}

/// Parameters of the random smooth-medium class: a constant base plus six
/// low-wavenumber Fourier modes with random complex coefficients.
#[derive(Debug, Clone)]
pub struct MediumClassParams {
    pub base: f64,
    pub terms: Vec<MediumTerm>,
    pub seed: u64,
}

impl MediumClassParams {
    pub fn new(seed: u64) -> Self {
        MediumClassParams { base: 1.0, terms: default_terms(), seed }
    }

    /// Zero-amplitude variant (constant medium `c = base`).
    pub fn degenerate(seed: u64) -> Self {
        let terms = default_terms()
            .into_iter()
            .map(|t| MediumTerm { amp: 0.0, ..t })
            .collect();
        MediumClassParams { base: 1.0, terms, seed }
    }
}

/// The six (amplitude, wavenumber) triples of the medium family.
pub fn default_terms() -> Vec<MediumTerm> {
    vec![
        MediumTerm { amp: 0.12, kx: 1.0, ky: 0.0 },
        MediumTerm { amp: 0.12, kx: 0.0, ky: 1.0 },
        MediumTerm { amp: 0.084, kx: 1.0, ky: 1.0 },
        MediumTerm { amp: 0.084, kx: 1.0, ky: -1.0 },
        MediumTerm { amp: 0.06, kx: 2.0, ky: 0.0 },
        MediumTerm { amp: 0.06, kx: 0.0, ky: 2.0 },
    ]
}

/// Draw a medium from the random class:
///
/// `c(x) = base + Re( sum_j amp_j (a_j + i b_j) e^{2 pi i (kx_j x1 + ky_j x2)} )`
///
/// with `a_j, b_j ~ Uniform[-1, 1)` drawn in the order
/// `a_1, b_1, a_2, b_2, ...` from a SplitMix64 stream seeded by
/// `params.seed`. If `min c < 0.5` the coefficients are redrawn from the
/// same stream, up to 100 attempts. The damping field is the constant
/// `2*pi` default; see [`Medium::with_alpha`] to override.
pub fn sample_medium(params: &MediumClassParams, grid: GridSpec) -> Result<Medium> {
    let mut rng = SplitMix64::new(params.seed);
    for _ in 0..MAX_RESAMPLE_ATTEMPTS {
        let coeffs: Vec<(f64, f64)> = params
            .terms
            .iter()
            .map(|_| {
                let a = rng.symmetric();
                let b = rng.symmetric();
                (a, b)
            })
            .collect();
        let c = evaluate_c(params, &coeffs, grid);
        let cmin = c.iter().cloned().fold(f64::INFINITY, f64::min);
        if cmin >= MIN_C_GUARD {
            let alpha = Array2::from_elem(grid.shape(), DEFAULT_ALPHA);
            return Medium::new(grid, c, alpha, grid.lx);
        }
    }
    Err(Error::ResampleExhausted { attempts: MAX_RESAMPLE_ATTEMPTS, floor: MIN_C_GUARD })
}

fn evaluate_c(params: &MediumClassParams, coeffs: &[(f64, f64)], grid: GridSpec) -> RField {
    let two_pi = 2.0 * std::f64::consts::PI;
    RField::from_shape_fn(grid.shape(), |(j, i)| {
        let (x1, x2) = grid.pos(i, j);
        let mut v = params.base;
        for (t, &(a, b)) in params.terms.iter().zip(coeffs) {
            let phase = two_pi * (t.kx * x1 / grid.lx + t.ky * x2 / grid.ly);
            // Re((a + i b) e^{i phase}) = a cos(phase) - b sin(phase)
            v += t.amp * (a * phase.cos() - b * phase.sin());
        }
        v
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn zero_amplitude_gives_constant() {
        let grid = make_grid(32, 32, 1.0, 1.0).unwrap();
        let m = sample_medium(&MediumClassParams::degenerate(5), grid).unwrap();
        for v in m.c.iter() {
            assert_eq!(*v, 1.0);
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let grid = make_grid(32, 32, 1.0, 1.0).unwrap();
        let a = sample_medium(&MediumClassParams::new(9), grid).unwrap();
        let b = sample_medium(&MediumClassParams::new(9), grid).unwrap();
        assert_eq!(a.c, b.c);
    }

    #[test]
    fn deviation_bound_over_seeds() {
        // |c - 1| <= sqrt(2) * sum(amp) = sqrt(2) * 0.528 = 0.74672...
        let bound = std::f64::consts::SQRT_2 * (2.0 * 0.12 + 2.0 * 0.084 + 2.0 * 0.06);
        assert!((bound - 0.7467).abs() < 1e-4);
        let grid = make_grid(16, 16, 1.0, 1.0).unwrap();
        for seed in 0..1000u64 {
            let m = sample_medium(&MediumClassParams::new(seed), grid).unwrap();
            for v in m.c.iter() {
                assert!((v - 1.0).abs() <= bound + 1e-12, "seed {seed} dev {}", (v - 1.0).abs());
            }
            // Guard implies the documented global range.
            assert!(m.c_min >= 0.25 && m.c_max <= 1.75);
        }
    }

    #[test]
    fn c_mean_matches_field() {
        let grid = make_grid(32, 32, 1.0, 1.0).unwrap();
        let m = sample_medium(&MediumClassParams::new(11), grid).unwrap();
        let mean = m.c.iter().sum::<f64>() / m.c.len() as f64;
        assert!((mean - m.c_mean).abs() < 1e-12);
    }

    #[test]
    fn bilinear_interp_hits_grid_points() {
        let grid = make_grid(32, 32, 1.0, 1.0).unwrap();
        let m = sample_medium(&MediumClassParams::new(3), grid).unwrap();
        let (x1, x2) = grid.pos(7, 12);
        assert!((m.c_at(x1, x2) - m.c[[12, 7]]).abs() < 1e-13);
        // periodic wrap
        assert!((m.c_at(x1 + grid.lx, x2 - grid.ly) - m.c[[12, 7]]).abs() < 1e-12);
    }
}
