//! Error type shared across the crate.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("grid cells must be square: Lx/nx = {hx} but Ly/ny = {hy}")]
    NonSquareCells { hx: f64, hy: f64 },

    #[error("grid sizes must be even and positive, got nx = {nx}, ny = {ny}")]
    BadGridSize { nx: usize, ny: usize },

    #[error("domain lengths must be positive, got Lx = {lx}, Ly = {ly}")]
    BadDomainLength { lx: f64, ly: f64 },

    #[error("field shape {got:?} does not match grid {want:?}")]
    ShapeMismatch { got: (usize, usize), want: (usize, usize) },

    #[error("velocity field must be strictly positive (min = {cmin})")]
    NonPositiveVelocity { cmin: f64 },

    #[error("damping field must be strictly positive (min = {amin})")]
    NonPositiveDamping { amin: f64 },

    #[error("medium resampling failed after {attempts} attempts (min c stayed below {floor})")]
    ResampleExhausted { attempts: usize, floor: f64 },

    #[error("cutoff k4 = {k4} exceeds the grid Nyquist wavenumber {nyquist}; grid too coarse for this frequency")]
    NyquistViolation { k4: f64, nyquist: f64 },

    #[error("dense assembly limited to 4096 unknowns, grid has {n}")]
    GridTooLargeForDense { n: usize },

    #[error("spectral energy outside the subsampling rectangle: leakage fraction {leak:e} exceeds 1e-10")]
    SupportLeakage { leak: f64 },

    #[error("wedge slope tan({angle_deg}°) is not representable as a small-integer shear")]
    UnrepresentableSlope { angle_deg: f64 },

    #[error("eikonal march violates the CFL bound: dy*|S'|max/dz = {ratio} > 1 (use more substeps)")]
    CflViolation { ratio: f64 },

    #[error("eikonal march produced a non-finite value at row {row}")]
    EikonalNaN { row: usize },

    #[error("caustic detected in band (angle {angle}, band {band}) at y = {y}: dZ0/dz = {dz0} <= 0")]
    Caustic { angle: usize, band: usize, y: f64, dz0: f64 },

    #[error("bicharacteristic left the regularized cone at y = {y}")]
    ConeExit { y: f64 },

    #[error("missing ray table for key (angle {angle}, band {band}, k {k})")]
    MissingTable { angle: usize, band: usize, k: usize },

    #[error("dimension mismatch: map expects {want}, got {got}")]
    DimensionMismatch { want: usize, got: usize },

    #[error("bad field file: {0}")]
    BadFieldFile(String),

    #[error("bad configuration: {0}")]
    BadConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
