//! Overlapping periodic bands along the rotated axial coordinate.
//!
//! The y circle of a rotated wedge is cut into `n_bands` overlapping
//! segments. Each band carries a window in y whose squares sum to one over
//! the circle, so splitting is an isometry and merging with the same
//! windows is its exact adjoint. Band-local y is zero at the segment
//! center; the ray tables march outward from there.

use ndarray::Array2;

use crate::filter::smoothstep::SmoothStep;
use crate::grid::CField;

/// Fraction of the band length shared with each neighbor. Wide overlaps
/// measured best: the gentler window spectrum keeps the axial-frequency
/// mixing narrow compared to the weight's variation; 0.75 balances that
/// against table storage.
pub const BAND_OVERLAP_FRACTION: f64 = 0.75;

#[derive(Debug, Clone)]
pub struct BandSpec {
    /// Global index on the y circle of the first stored row.
    pub start: usize,
    /// Stored segment length (rows with nonzero window).
    pub len: usize,
    /// Local index of the band center (the y = 0 row of the tables).
    pub center: usize,
    /// Window values over the stored segment.
    pub window: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BandLayout {
    pub ny_circle: usize,
    pub dy: f64,
    pub bands: Vec<BandSpec>,
}

impl BandLayout {
    /// Lay out `n_bands` overlapping bands over a circle of `ny` rows.
    pub fn new(ny: usize, n_bands: usize, dy: f64, step: &SmoothStep) -> Self {
        assert!(n_bands >= 1);
        if n_bands == 1 {
            return BandLayout {
                ny_circle: ny,
                dy,
                bands: vec![BandSpec {
                    start: 0,
                    len: ny,
                    center: ny / 2,
                    window: vec![1.0; ny],
                }],
            };
        }
        assert!(ny >= 4 * n_bands, "need at least 4 rows per band, got {ny} rows / {n_bands} bands");
        let base = ny as f64 / n_bands as f64;
        let tw = (BAND_OVERLAP_FRACTION * base).round().max(1.0).min(base);
        let mut bands = Vec::with_capacity(n_bands);
        for b in 0..n_bands {
            let lo = b as f64 * base;
            let hi = (b + 1) as f64 * base;
            let first = (lo - tw / 2.0).floor() as i64;
            let last = (hi + tw / 2.0).ceil() as i64;
            let mut window = Vec::new();
            let mut rows = Vec::new();
            for g in first..=last {
                let y = g as f64;
                let w = step.rise(y, lo - tw / 2.0, lo + tw / 2.0)
                    * step.fall(y, hi - tw / 2.0, hi + tw / 2.0);
                if w > 0.0 {
                    rows.push(g);
                    window.push(w);
                }
            }
            let start = rows[0].rem_euclid(ny as i64) as usize;
            let len = rows.len();
            let center_global = (lo + hi) / 2.0;
            let center = (center_global.round() as i64 - rows[0]) as usize;
            bands.push(BandSpec { start, len, center, window });
        }
        BandLayout { ny_circle: ny, dy, bands }
    }

    /// Extract the windowed segments. Input is a `[z][y]` band-circle
    /// array; outputs are `[z][local y]` segments.
    pub fn split(&self, field: &CField) -> Vec<CField> {
        let (nz, ny) = field.dim();
        assert_eq!(ny, self.ny_circle);
        self.bands
            .iter()
            .map(|b| {
                Array2::from_shape_fn((nz, b.len), |(iz, iy)| {
                    let g = (b.start + iy) % ny;
                    field[[iz, g]] * b.window[iy]
                })
            })
            .collect()
    }

    /// Exact adjoint of [`BandLayout::split`]; with all bands present it is
    /// also the inverse because the squared windows sum to one.
    pub fn merge(&self, segments: &[CField], nz: usize) -> CField {
        assert_eq!(segments.len(), self.bands.len());
        let mut out = CField::zeros((nz, self.ny_circle));
        for (b, seg) in self.bands.iter().zip(segments) {
            assert_eq!(seg.dim(), (nz, b.len));
            for iz in 0..nz {
                for iy in 0..b.len {
                    let g = (b.start + iy) % self.ny_circle;
                    out[[iz, g]] += seg[[iz, iy]] * b.window[iy];
                }
            }
        }
        out
    }
}
