//! Shear rotation of coarse wedge data into band coordinates.
//!
//! Every wedge angle is a multiple of 45 degrees, so rotation never needs
//! generic interpolation:
//!
//! - Multiples of 90 degrees are index relabelings of the torus grid.
//! - The residual 45-degree step works in the Fourier domain: grid
//!   frequencies `(a, b)` are relabelled by the shear `(a, b) -> (b, a+b)`
//!   onto a transverse/axial pair, where the axial sum frequency is
//!   unfolded onto its true range (the wedge support is known, so the
//!   folding of diagonal frequencies by the column count is undone
//!   exactly), and the half-cell stagger of the grid's diagonals is
//!   removed by an exact mixed-domain phase. Every pass is a unitary
//!   relabeling or phase, so the composite is exactly invertible and
//!   norm-preserving to round-off.
//!
//! The output is a band array in `[z][y]` layout: rows are transverse
//! positions, columns run along the wedge direction. Rotation changes the
//! grid parameters (`dy`, `dz`, periods); for diagonal angles the
//! transverse circle of the underlying torus closes only after two turns
//! of the data's z-range, which is recorded in `z_cover` and honored by
//! the ray-table builder.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{Fft1, Fft2};
use crate::grid::{CField, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Family {
    /// Angle = 90 * t degrees: pure relabeling.
    Axis { t: u8 },
    /// Angle = 45 + 90 * t degrees: relabel + diagonal unfold.
    Diag { t: u8 },
}

/// Rotation of an `(m2 rows) x (m1 cols)` coarse field to band coordinates.
#[derive(Clone)]
pub struct Rotation {
    pub angle_deg: f64,
    family: Family,
    m1: usize,
    m2: usize,
    lx: f64,
    /// Band array shape `(nz, ny)`.
    pub band_shape: (usize, usize),
    pub dy: f64,
    pub dz: f64,
    pub y_period: f64,
    /// z period of the data (single cover).
    pub z_period: f64,
    /// 1 for axis angles; 2 for diagonal angles, where the physical
    /// transverse circle is twice the data's z-range.
    pub z_cover: usize,
    /// Unit vector of the band's axial direction in original coordinates.
    pub yhat: [f64; 2],
    /// Unit vector of the band's transverse direction.
    pub zhat: [f64; 2],
    /// Diagonal family: center of the unfolded axial frequency window
    /// (lattice units of the y circle).
    f_center: i64,
    fft_m: Option<Fft1>,
    fft_my: Option<Fft1>,
    fft_sq: Option<Fft2>,
}

impl Rotation {
    /// Build the rotation for a wedge direction. `angle_deg` must be a
    /// multiple of 45 degrees; diagonal angles require a square coarse
    /// grid plus the axial (diagonal-sum) frequency range of the content,
    /// `sum_range`, so folded frequencies can be unfolded exactly.
    pub fn new(
        angle_deg: f64,
        m1: usize,
        m2: usize,
        lx: f64,
        ly: f64,
        sum_range: Option<(i64, i64)>,
    ) -> Result<Self> {
        let a = angle_deg.rem_euclid(360.0);
        let steps = a / 45.0;
        if (steps - steps.round()).abs() > 1e-9 {
            return Err(Error::UnrepresentableSlope { angle_deg });
        }
        let steps = steps.round() as i64 % 8;
        let d1 = lx / m1 as f64;
        let d2 = ly / m2 as f64;
        let rad = (45.0 * steps as f64).to_radians();
        if steps % 2 == 0 {
            let t = ((8 - steps) / 2 % 4) as u8;
            let (nz, ny, dy, dz, yp, zp) = if t % 2 == 0 {
                (m2, m1, d1, d2, lx, ly)
            } else {
                (m1, m2, d2, d1, ly, lx)
            };
            Ok(Rotation {
                angle_deg,
                family: Family::Axis { t },
                m1,
                m2,
                lx,
                band_shape: (nz, ny),
                dy,
                dz,
                y_period: yp,
                z_period: zp,
                z_cover: 1,
                yhat: [rad.cos(), rad.sin()],
                zhat: [-rad.sin(), rad.cos()],
                f_center: 0,
                fft_m: None,
                fft_my: None,
                fft_sq: None,
            })
        } else {
            if m1 != m2 || (d1 - d2).abs() > 1e-12 * d1 {
                return Err(Error::UnrepresentableSlope { angle_deg });
            }
            let m = m1;
            let t = (((9 - steps) / 2) % 4) as u8;
            let (lo, hi) = sum_range.unwrap_or((-(m as i64) + 1, m as i64 - 1));
            // The axial window must hold the content and at least the full
            // mod-m alias classes so the relabeling stays injective.
            // The axial window must cover the content's diagonal-frequency
            // extent, and beyond that the residual frequencies left after
            // kernel demodulation, whose centers shift per transverse mode
            // by the one-way dispersion; 1.6x the grid side covers both.
            let mut my = ((hi - lo + 1) as usize).max((m as f64 * 1.6).ceil() as usize);
            my += my % 2;
            let f_center = (lo + hi).div_euclid(2);
            let s2l = std::f64::consts::SQRT_2 * lx;
            Ok(Rotation {
                angle_deg,
                family: Family::Diag { t },
                m1,
                m2,
                lx,
                band_shape: (m, my),
                dy: s2l / my as f64,
                dz: d1 / std::f64::consts::SQRT_2,
                y_period: s2l,
                z_period: lx / std::f64::consts::SQRT_2,
                z_cover: 2,
                yhat: [rad.cos(), rad.sin()],
                zhat: [-rad.sin(), rad.cos()],
                f_center,
                fft_m: Some(Fft1::new(m)),
                fft_my: Some(Fft1::new(my)),
                fft_sq: Some(Fft2::new(m, m)),
            })
        }
    }

    /// Carrier wavevector (integer lattice) expressed in the rotated frame.
    pub fn rotate_carrier(&self, k: [i64; 2]) -> [i64; 2] {
        let t = match self.family {
            Family::Axis { t } => t,
            Family::Diag { t } => t,
        };
        let mut out = k;
        for _ in 0..t {
            out = [-out[1], out[0]]; // k' = R^t k with R = 90 degrees CCW
        }
        out
    }

    /// Carrier frequency in band coordinates `(eta0, zeta0)`, including
    /// the demodulation by the unfolded axial window center for diagonal
    /// angles. Both are lattice frequencies of the band circles (the
    /// transverse one on the double cover for diagonal angles).
    pub fn band_carrier(&self, k: [i64; 2]) -> (f64, f64) {
        let two_pi = 2.0 * std::f64::consts::PI;
        let kp = self.rotate_carrier(k);
        match self.family {
            Family::Axis { .. } => (
                two_pi * kp[0] as f64 / self.y_period,
                two_pi * kp[1] as f64 / self.z_period,
            ),
            Family::Diag { .. } => {
                let s2l = std::f64::consts::SQRT_2 * self.lx;
                (
                    two_pi * (kp[0] + kp[1] + self.f_center) as f64 / s2l,
                    two_pi * (kp[1] - kp[0]) as f64 / s2l,
                )
            }
        }
    }

    /// Physical position (in original coordinates, not reduced mod the
    /// domain) of the band sample at transverse index `iz` and axial
    /// index `iy`. Fractional and out-of-range indices are allowed;
    /// callers reduce modulo the domain when sampling the medium.
    pub fn band_point(&self, iz: f64, iy: f64) -> (f64, f64) {
        let y = iy * self.dy;
        let z = iz * self.dz;
        (y * self.yhat[0] + z * self.zhat[0], y * self.yhat[1] + z * self.zhat[1])
    }

    pub fn forward(&self, coarse: &CField) -> Result<CField> {
        if coarse.dim() != (self.m2, self.m1) {
            return Err(Error::ShapeMismatch { got: coarse.dim(), want: (self.m2, self.m1) });
        }
        match self.family {
            Family::Axis { t } => Ok(rot90_field(coarse, t)),
            Family::Diag { t } => {
                let m = self.m1;
                let my = self.band_shape.1;
                let mut r = rot90_field(coarse, t);
                self.fft_sq.as_ref().unwrap().forward(&mut r);
                // Relabel grid frequencies (a, b) to transverse label
                // b mod m and unfolded axial frequency a + b.
                let mut band = Array2::<Complex64>::zeros((m, my));
                for jy in 0..m {
                    let b = GridSpec::signed_freq(jy, m);
                    for jx in 0..m {
                        let a = GridSpec::signed_freq(jx, m);
                        let slot = (a + b - self.f_center).rem_euclid(my as i64) as usize;
                        band[[jy, slot]] = r[[jy, jx]];
                    }
                }
                // z back to space; the diagonals of the grid are staggered
                // by half a cell per transverse step, which in this mixed
                // (z index, axial frequency) domain is an exact phase.
                let fft_m = self.fft_m.as_ref().unwrap();
                let fft_my = self.fft_my.as_ref().unwrap();
                let mut col = vec![Complex64::default(); m];
                for f_slot in 0..my {
                    for d in 0..m {
                        col[d] = band[[d, f_slot]];
                    }
                    fft_m.inverse(&mut col);
                    let f = self.f_center + GridSpec::signed_freq(f_slot, my);
                    for (d, v) in col.iter().enumerate() {
                        let ph = -std::f64::consts::PI * f as f64 * d as f64 / m as f64;
                        band[[d, f_slot]] = v * Complex64::from_polar(1.0, ph);
                    }
                }
                // y to space.
                for mut row in band.rows_mut() {
                    fft_my.inverse(row.as_slice_mut().expect("contig"));
                }
                Ok(band)
            }
        }
    }

    pub fn inverse(&self, band: &CField) -> Result<CField> {
        if band.dim() != self.band_shape {
            return Err(Error::ShapeMismatch { got: band.dim(), want: self.band_shape });
        }
        match self.family {
            Family::Axis { t } => Ok(rot90_field(band, (4 - t % 4) % 4)),
            Family::Diag { t } => {
                let m = self.m1;
                let my = self.band_shape.1;
                let fft_m = self.fft_m.as_ref().unwrap();
                let fft_my = self.fft_my.as_ref().unwrap();
                let mut work = band.clone();
                for mut row in work.rows_mut() {
                    fft_my.forward(row.as_slice_mut().expect("contig"));
                }
                let mut col = vec![Complex64::default(); m];
                for f_slot in 0..my {
                    let f = self.f_center + GridSpec::signed_freq(f_slot, my);
                    for d in 0..m {
                        let ph = std::f64::consts::PI * f as f64 * d as f64 / m as f64;
                        col[d] = work[[d, f_slot]] * Complex64::from_polar(1.0, ph);
                    }
                    fft_m.forward(&mut col);
                    for d in 0..m {
                        work[[d, f_slot]] = col[d];
                    }
                }
                let mut r = Array2::<Complex64>::zeros((m, m));
                for jy in 0..m {
                    let b = GridSpec::signed_freq(jy, m);
                    for jx in 0..m {
                        let a = GridSpec::signed_freq(jx, m);
                        let slot = (a + b - self.f_center).rem_euclid(my as i64) as usize;
                        r[[jy, jx]] = work[[jy, slot]];
                    }
                }
                self.fft_sq.as_ref().unwrap().inverse(&mut r);
                Ok(rot90_field(&r, (4 - t % 4) % 4))
            }
        }
    }
}

/// For a diagonal wedge angle, the direction `v` such that the axial
/// (diagonal-sum) frequency of a lattice offset `dk` is `dk . v`; `None`
/// for axis angles.
pub fn diag_sum_vector(angle_deg: f64) -> Option<[i64; 2]> {
    let a = angle_deg.rem_euclid(360.0);
    let steps = (a / 45.0).round() as i64 % 8;
    if steps % 2 == 0 {
        return None;
    }
    let t = ((9 - steps) / 2) % 4;
    // v = R^{-t} (1, 1)
    let mut v = [1i64, 1];
    for _ in 0..t {
        v = [v[1], -v[0]]; // R^{-1}
    }
    Some(v)
}

/// Rotate a coarse field by `t` quarter turns CCW (values relabelled on the
/// torus grid; exact permutation).
pub fn rot90_field(v: &CField, t: u8) -> CField {
    let (m2, m1) = v.dim();
    let (rows_out, cols_out) = if t % 2 == 0 { (m2, m1) } else { (m1, m2) };
    Array2::from_shape_fn((rows_out, cols_out), |(b, a)| {
        let (i, j) = match t % 4 {
            0 => (a, b),
            1 => (b, (m2 - a % m2) % m2),
            2 => ((m1 - a % m1) % m1, (m2 - b % m2) % m2),
            3 => ((m1 - b % m1) % m1, a),
            _ => unreachable!(),
        };
        v[[j, i]]
    })
}
