//! WKB preparation for the wave packet transform.
//!
//! For each band and each transverse mode `zeta_k` the one-way phase
//! `omega T(y, z)` and amplitude `A(y, z)` are prepared so that
//! `A e^{i omega T}` approximates the one-way evolution of the mode. The
//! travel time solves the regularized eikonal equation
//!
//! `dT/dy = (1/c) S(c dT/dz)`,   `T(0, z) = p_z z`,
//!
//! marched by first-order upwind differences from the band center in both
//! directions. `T` is kept as `p_z z + tau` with `tau` periodic in `z`, so
//! the non-periodic linear part never touches the difference stencil and
//! constant media are reproduced exactly. The inverse characteristic flow
//! `Z0` rides along as `z + rho` with the same splitting, and the
//! amplitude comes from the unitarity relation `A = (dZ0/dz)^{1/2}`.
//! A bicharacteristic ODE tracer provides an independent oracle for the
//! same characteristic field.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filter::FilterBank;
use crate::grid::GridSpec;
use crate::medium::Medium;

/// Default regularization angle: the wedge half-aperture.
pub const DEFAULT_ALPHA_REG_DEG: f64 = 45.0;

/// The regularized one-way dispersion factor `S`.
///
/// `S(s) = sqrt(1 - s^2)` inside `|s| <= sin(alpha_reg)` and continues
/// linearly with matching value and slope beyond, taming the square-root
/// singularity at `|s| = 1`.
#[derive(Debug, Clone, Copy)]
pub struct OneWaySymbol {
    /// Regularization angle in radians.
    pub alpha_reg: f64,
    sin_a: f64,
    cos_a: f64,
    tan_a: f64,
}

impl OneWaySymbol {
    pub fn new(alpha_reg: f64) -> Self {
        OneWaySymbol {
            alpha_reg,
            sin_a: alpha_reg.sin(),
            cos_a: alpha_reg.cos(),
            tan_a: alpha_reg.tan(),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let a = s.abs();
        if a <= self.sin_a {
            (1.0 - s * s).sqrt()
        } else {
            self.cos_a - (a - self.sin_a) * self.tan_a
        }
    }

    /// Derivative `S'(s)`; bounded by `tan(alpha_reg)` which sets the CFL
    /// limit of the marching.
    pub fn deriv(&self, s: f64) -> f64 {
        let a = s.abs();
        if a < self.sin_a {
            -s / (1.0 - s * s).sqrt()
        } else {
            -s.signum() * self.tan_a
        }
    }

    pub fn sin_alpha(&self) -> f64 {
        self.sin_a
    }
}

impl Default for OneWaySymbol {
    fn default() -> Self {
        OneWaySymbol::new(DEFAULT_ALPHA_REG_DEG.to_radians())
    }
}

/// Row/column geometry of one band's tables.
#[derive(Debug, Clone, Copy)]
pub struct BandGeometry {
    /// Stored rows along y.
    pub n_rows: usize,
    /// Row index where y = 0.
    pub center: usize,
    /// Transverse points of the table (the full transverse circle; twice
    /// the data count for diagonal bands).
    pub nz: usize,
    pub dy: f64,
    pub dz: f64,
}

impl BandGeometry {
    pub fn y_of(&self, row: usize) -> f64 {
        (row as i64 - self.center as i64) as f64 * self.dy
    }
}

/// Travel time and inverse flow of one transverse mode on one band.
#[derive(Debug, Clone)]
pub struct EikonalSolution {
    /// Periodic part of the travel time: `T = p_z z + tau`.
    pub tau: Array2<f64>,
    /// Periodic part of the inverse flow: `Z0 = z + rho`.
    pub rho: Array2<f64>,
    pub p_z: f64,
    pub geom: BandGeometry,
}

impl EikonalSolution {
    /// Full travel time at a table node.
    pub fn travel_time(&self, row: usize, iz: usize) -> f64 {
        self.p_z * iz as f64 * self.geom.dz + self.tau[[row, iz]]
    }

    /// Full inverse-flow value at a table node.
    pub fn z0(&self, row: usize, iz: usize) -> f64 {
        iz as f64 * self.geom.dz + self.rho[[row, iz]]
    }
}

/// March the regularized eikonal and the inverse-flow transport equation
/// over a band.
///
/// `c_at(row_f, iz)` samples the velocity at fractional row positions
/// (used by the internal substeps) and integer transverse index.
/// `n_sub = 0` picks the smallest substep count satisfying the CFL bound;
/// an explicit value that violates it is an error.
pub fn solve_eikonal<F>(
    c_at: F,
    geom: BandGeometry,
    symbol: &OneWaySymbol,
    p_z: f64,
    n_sub: usize,
) -> Result<EikonalSolution>
where
    F: Fn(f64, usize) -> f64,
{
    let auto = (geom.dy * symbol.tan_a / (0.8 * geom.dz)).ceil().max(1.0) as usize;
    let n_sub = if n_sub == 0 { auto } else { n_sub };
    let ratio = geom.dy * symbol.tan_a / (n_sub as f64 * geom.dz);
    if ratio > 1.0 + 1e-12 {
        return Err(Error::CflViolation { ratio });
    }
    let nz = geom.nz;
    let mut tau = Array2::zeros((geom.n_rows, nz));
    let mut rho = Array2::zeros((geom.n_rows, nz));

    let march = |dir: i64, tau: &mut Array2<f64>, rho: &mut Array2<f64>| -> Result<()> {
        let mut t_cur = vec![0.0f64; nz];
        let mut r_cur = vec![0.0f64; nz];
        let mut t_nxt = vec![0.0f64; nz];
        let mut r_nxt = vec![0.0f64; nz];
        let mut row = geom.center as i64;
        loop {
            let next = row + dir;
            if next < 0 || next >= geom.n_rows as i64 {
                break;
            }
            for sub in 0..n_sub {
                let frac = sub as f64 / n_sub as f64;
                let row_f = row as f64 + dir as f64 * frac;
                let delta = dir as f64 * geom.dy / n_sub as f64;
                for iz in 0..nz {
                    let izp = (iz + 1) % nz;
                    let izm = (iz + nz - 1) % nz;
                    let c = c_at(row_f, iz);
                    let q_c = p_z + (t_cur[izp] - t_cur[izm]) / (2.0 * geom.dz);
                    let v = -symbol.deriv(c * q_c);
                    // Information comes from the upwind side of the
                    // characteristic in the direction of marching.
                    let upwind_minus = dir as f64 * v > 0.0;
                    let q = if upwind_minus {
                        p_z + (t_cur[iz] - t_cur[izm]) / geom.dz
                    } else {
                        p_z + (t_cur[izp] - t_cur[iz]) / geom.dz
                    };
                    t_nxt[iz] = t_cur[iz] + delta * symbol.eval(c * q) / c;
                    let drho = if upwind_minus {
                        (r_cur[iz] - r_cur[izm]) / geom.dz
                    } else {
                        (r_cur[izp] - r_cur[iz]) / geom.dz
                    };
                    r_nxt[iz] = r_cur[iz] - delta * v * (1.0 + drho);
                }
                std::mem::swap(&mut t_cur, &mut t_nxt);
                std::mem::swap(&mut r_cur, &mut r_nxt);
            }
            let urow = next as usize;
            for iz in 0..nz {
                if !t_cur[iz].is_finite() || !r_cur[iz].is_finite() {
                    return Err(Error::EikonalNaN { row: urow });
                }
                tau[[urow, iz]] = t_cur[iz];
                rho[[urow, iz]] = r_cur[iz];
            }
            row = next;
        }
        Ok(())
    };

    march(1, &mut tau, &mut rho)?;
    march(-1, &mut tau, &mut rho)?;
    Ok(EikonalSolution { tau, rho, p_z, geom })
}

/// Amplitude from the unitarity relation `A(y, z) = (dZ0/dz)^{1/2}`,
/// normalized to `A(0, z) = 1`. The derivative is taken by central
/// differences on the periodic transverse circle. A non-positive
/// derivative is a caustic and aborts with the band location.
pub fn amplitude_from_flow(
    sol: &EikonalSolution,
    context: (usize, usize),
) -> Result<Array2<f64>> {
    let geom = sol.geom;
    let mut amp = Array2::zeros((geom.n_rows, geom.nz));
    for row in 0..geom.n_rows {
        for iz in 0..geom.nz {
            let izp = (iz + 1) % geom.nz;
            let izm = (iz + geom.nz - 1) % geom.nz;
            let dz0 = 1.0 + (sol.rho[[row, izp]] - sol.rho[[row, izm]]) / (2.0 * geom.dz);
            if dz0 <= 0.0 {
                return Err(Error::Caustic {
                    angle: context.0,
                    band: context.1,
                    y: geom.y_of(row),
                    dz0,
                });
            }
            amp[[row, iz]] = dz0.sqrt();
        }
    }
    Ok(amp)
}

/// One point of a traced bicharacteristic.
#[derive(Debug, Clone, Copy)]
pub struct RayPoint {
    pub y: f64,
    pub z: f64,
    pub zeta: f64,
}

/// Trace the bicharacteristic ODEs
///
/// `dz/dy = zeta (omega^2/c^2 - zeta^2)^{-1/2}`
/// `dzeta/dy = -(omega^2/c^3) dc/dz (omega^2/c^2 - zeta^2)^{-1/2}`
///
/// with classic fixed-step RK4, `steps_per_dy` stages per table row.
/// Exits with an error if the ray leaves the regularized cone
/// `|zeta| c / omega < sin(alpha_reg)`.
pub fn trace_bicharacteristics<F, G>(
    c_at: F,
    dc_dz: G,
    omega: f64,
    symbol: &OneWaySymbol,
    z0: f64,
    zeta0: f64,
    y_values: &[f64],
    steps_per_interval: usize,
) -> Result<Vec<RayPoint>>
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> f64,
{
    let rhs = |y: f64, z: f64, zeta: f64| -> Result<(f64, f64)> {
        let c = c_at(y, z);
        let disc = omega * omega / (c * c) - zeta * zeta;
        if zeta.abs() * c / omega >= symbol.sin_a || disc <= 0.0 {
            return Err(Error::ConeExit { y });
        }
        let inv = 1.0 / disc.sqrt();
        let dz = zeta * inv;
        let dzeta = -(omega * omega / (c * c * c)) * dc_dz(y, z) * inv;
        Ok((dz, dzeta))
    };
    let mut out = Vec::with_capacity(y_values.len());
    let mut z = z0;
    let mut zeta = zeta0;
    let mut y = y_values[0];
    out.push(RayPoint { y, z, zeta });
    for &target in &y_values[1..] {
        let n = steps_per_interval.max(1);
        let h = (target - y) / n as f64;
        for _ in 0..n {
            let (k1z, k1t) = rhs(y, z, zeta)?;
            let (k2z, k2t) = rhs(y + h / 2.0, z + h / 2.0 * k1z, zeta + h / 2.0 * k1t)?;
            let (k3z, k3t) = rhs(y + h / 2.0, z + h / 2.0 * k2z, zeta + h / 2.0 * k2t)?;
            let (k4z, k4t) = rhs(y + h, z + h * k3z, zeta + h * k3t)?;
            z += h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
            zeta += h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
            y += h;
        }
        y = target;
        out.push(RayPoint { y, z, zeta });
    }
    Ok(out)
}

/// Prepared tables of one band: travel time, amplitude and inverse flow
/// per transverse mode, restricted to the band's data columns.
#[derive(Debug, Clone)]
pub struct BandTables {
    pub geom: BandGeometry,
    /// Transverse data points (z circle of the band data).
    pub nz_data: usize,
    /// Absolute transverse wavenumber per mode index.
    pub zeta: Vec<f64>,
    /// Carrier frequency along y and z.
    pub eta0: f64,
    pub zeta0: f64,
    /// Per mode: travel time `T(y, z)` at the data columns.
    pub t: Vec<Array2<f64>>,
    /// Per mode: amplitude.
    pub a: Vec<Array2<f64>>,
    /// Per mode: inverse flow `Z0`.
    pub z0: Vec<Array2<f64>>,
    /// Velocity on the band (full transverse cover), for diagnostics.
    pub c_band: Array2<f64>,
}

/// All prepared bands, indexed `[angle][band]`.
pub struct RayTables {
    pub omega: f64,
    pub symbol: OneWaySymbol,
    pub bands: Vec<Vec<BandTables>>,
    /// Total stored table values (f64 count over t, a, z0).
    pub stored_f64: usize,
}

impl RayTables {
    pub fn band(&self, angle: usize, band: usize) -> Result<&BandTables> {
        self.bands
            .get(angle)
            .and_then(|v| v.get(band))
            .ok_or(Error::MissingTable { angle, band, k: 0 })
    }

    /// Total number of (angle, band, k) table keys.
    pub fn table_count(&self) -> usize {
        self.bands.iter().flatten().map(|b| b.zeta.len()).sum()
    }
}

/// Sample the medium on the band geometry and march every transverse mode
/// of every band. Work is parallel over modes.
pub fn build_ray_tables(
    medium: &Medium,
    bank: &FilterBank,
    omega: f64,
    symbol: &OneWaySymbol,
) -> Result<RayTables> {
    let mut bands = Vec::with_capacity(bank.rects.len());
    let mut stored = 0usize;
    for (a, rot) in bank.rotations.iter().enumerate() {
        let layout = &bank.layouts[a];
        let nz_data = rot.band_shape.0;
        let nz_cover = nz_data * rot.z_cover;
        let carrier = bank.rects[a].carrier;
        let (eta0, zeta0) = rot.band_carrier(carrier);
        let mut per_band = Vec::with_capacity(layout.bands.len());
        for (b, spec) in layout.bands.iter().enumerate() {
            let geom = BandGeometry {
                n_rows: spec.len,
                center: spec.center,
                nz: nz_cover,
                dy: rot.dy,
                dz: rot.dz,
            };
            // Velocity over the full transverse cover of this band.
            let global_row0 = spec.start as f64;
            let c_at = |row_f: f64, iz: usize| -> f64 {
                let iy = global_row0 + row_f;
                let (x1, x2) = rot.band_point(iz as f64, iy);
                medium.c_at(x1, x2)
            };
            let c_band = Array2::from_shape_fn((spec.len, nz_cover), |(r, iz)| {
                c_at(r as f64, iz)
            });
            // Absolute transverse wavenumbers of the data circle.
            let dz_circle = nz_data as f64 * rot.dz;
            let zeta: Vec<f64> = (0..nz_data)
                .map(|k| {
                    zeta0
                        + 2.0 * std::f64::consts::PI * GridSpec::signed_freq(k, nz_data) as f64
                            / dz_circle
                })
                .collect();
            let solutions: Vec<(Array2<f64>, Array2<f64>, Array2<f64>)> = zeta
                .par_iter()
                .map(|&zk| -> Result<_> {
                    let sol = solve_eikonal(&c_at, geom, symbol, zk / omega, 0)?;
                    let amp_cover = amplitude_from_flow(&sol, (a, b))?;
                    // Restrict to the data columns.
                    let t = Array2::from_shape_fn((spec.len, nz_data), |(r, iz)| {
                        sol.travel_time(r, iz)
                    });
                    let z0 = Array2::from_shape_fn((spec.len, nz_data), |(r, iz)| sol.z0(r, iz));
                    let amp = amp_cover.slice(ndarray::s![.., ..nz_data]).to_owned();
                    Ok((t, amp, z0))
                })
                .collect::<Result<_>>()?;
            let mut t = Vec::with_capacity(nz_data);
            let mut amp = Vec::with_capacity(nz_data);
            let mut z0 = Vec::with_capacity(nz_data);
            for (ti, ai, zi) in solutions {
                stored += ti.len() + ai.len() + zi.len();
                t.push(ti);
                amp.push(ai);
                z0.push(zi);
            }
            per_band.push(BandTables {
                geom,
                nz_data,
                zeta,
                eta0,
                zeta0,
                t,
                a: amp,
                z0,
                c_band,
            });
        }
        bands.push(per_band);
    }
    Ok(RayTables { omega, symbol: *symbol, bands, stored_f64: stored })
}

/// Dump every table (`angle-band-k-{t,a,z0}.htbl`: an ASCII header
/// `HTBL1 <rows> <cols> <dy> <dz>` plus little-endian f64 payload) and a
/// `manifest.txt` listing the keys. Diagnostic interface.
pub fn dump_tables(tables: &RayTables, dir: &std::path::Path) -> Result<()> {
    use std::io::Write;
    std::fs::create_dir_all(dir)?;
    let mut manifest = std::io::BufWriter::new(std::fs::File::create(dir.join("manifest.txt"))?);
    for (a, per_band) in tables.bands.iter().enumerate() {
        for (b, bt) in per_band.iter().enumerate() {
            for k in 0..bt.zeta.len() {
                for (tag, table) in [("t", &bt.t[k]), ("a", &bt.a[k]), ("z0", &bt.z0[k])] {
                    let path = dir.join(format!("{a}-{b}-{k}-{tag}.htbl"));
                    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
                    writeln!(
                        w,
                        "HTBL1 {} {} {} {}",
                        table.nrows(),
                        table.ncols(),
                        bt.geom.dy,
                        bt.geom.dz
                    )?;
                    for v in table.iter() {
                        w.write_all(&v.to_le_bytes())?;
                    }
                    w.flush()?;
                    writeln!(
                        manifest,
                        "{a} {b} {k} {tag} {} {}",
                        table.nrows(),
                        table.ncols()
                    )?;
                }
            }
        }
    }
    manifest.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn geom(n_rows: usize, nz: usize, dy: f64, dz: f64) -> BandGeometry {
        BandGeometry { n_rows, center: n_rows / 2, nz, dy, dz }
    }

    #[test]
    fn s_values() {
        let s45 = OneWaySymbol::new(45.0f64.to_radians());
        assert_eq!(s45.eval(0.0), 1.0);
        let j = 45.0f64.to_radians().sin();
        assert!((s45.eval(j) - 45.0f64.to_radians().cos()).abs() < 1e-12);
        // linear branch at s = 1
        let want = std::f64::consts::SQRT_2 - 1.0;
        assert!((s45.eval(1.0) - want).abs() < 1e-12);
    }

    #[test]
    fn s_is_c1_at_junction() {
        for deg in [30.0, 45.0, 60.0] {
            let sym = OneWaySymbol::new((deg as f64).to_radians());
            let j = sym.sin_a;
            let eps = 1e-7;
            assert!((sym.eval(j - 1e-13) - sym.eval(j + 1e-13)).abs() < 1e-12);
            let d_in = (sym.eval(j) - sym.eval(j - eps)) / eps;
            let d_out = (sym.eval(j + eps) - sym.eval(j)) / eps;
            assert!((d_in - d_out).abs() < 1e-5, "deg {deg}: {d_in} vs {d_out}");
            assert!((d_in + sym.tan_a).abs() < 1e-5);
        }
    }

    #[test]
    fn cfl_violation_rejected_for_explicit_substeps() {
        let sym = OneWaySymbol::default();
        // dy much larger than dz with a single forced substep.
        let g = geom(9, 32, 0.1, 0.02);
        let r = solve_eikonal(|_, _| 1.0, g, &sym, 0.0, 1);
        assert!(matches!(r, Err(Error::CflViolation { .. })));
        // The automatic substep count handles the same geometry.
        assert!(solve_eikonal(|_, _| 1.0, g, &sym, 0.0, 0).is_ok());
    }

    #[test]
    fn constant_medium_axial_is_exact() {
        let sym = OneWaySymbol::default();
        let g = geom(21, 32, 0.02, 0.02);
        let sol = solve_eikonal(|_, _| 1.0, g, &sym, 0.0, 0).unwrap();
        for row in 0..g.n_rows {
            let y = g.y_of(row);
            for iz in 0..g.nz {
                assert!((sol.travel_time(row, iz) - y).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn constant_medium_oblique_matches_analytic() {
        let sym = OneWaySymbol::default();
        let c0 = 1.3;
        let g = geom(25, 48, 0.02, 0.02);
        // |p_z| below sin(alpha)/c0 so the exact branch applies.
        for p_z in [0.1, -0.25, 0.4] {
            let sol = solve_eikonal(|_, _| c0, g, &sym, p_z, 0).unwrap();
            let slope = (1.0 / (c0 * c0) - p_z * p_z).sqrt();
            let mut max_err = 0.0f64;
            for row in 0..g.n_rows {
                let y = g.y_of(row);
                for iz in 0..g.nz {
                    let z = iz as f64 * g.dz;
                    let want = p_z * z + y * slope;
                    max_err = max_err.max((sol.travel_time(row, iz) - want).abs());
                }
            }
            assert!(max_err <= 5.0 * g.dy, "p_z {p_z}: err {max_err}");
            // The periodic-remainder march is in fact exact here.
            assert!(max_err < 1e-12, "p_z {p_z}: err {max_err}");
        }
    }

    #[test]
    fn constant_medium_inverse_flow() {
        let sym = OneWaySymbol::default();
        let c0 = 0.9;
        let p_z = 0.3;
        let g = geom(25, 48, 0.02, 0.02);
        let sol = solve_eikonal(|_, _| c0, g, &sym, p_z, 0).unwrap();
        let v = p_z / (1.0 / (c0 * c0) - p_z * p_z).sqrt();
        for row in 0..g.n_rows {
            let y = g.y_of(row);
            for iz in 0..g.nz {
                let z = iz as f64 * g.dz;
                assert!((sol.z0(row, iz) - (z - y * v)).abs() < 1e-12);
            }
        }
        let amp = amplitude_from_flow(&sol, (0, 0)).unwrap();
        for a in amp.iter() {
            assert!((a - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tracer_straight_rays() {
        let sym = OneWaySymbol::default();
        let omega = 20.0 * PI;
        let ys: Vec<f64> = (0..10).map(|i| i as f64 * 0.05).collect();
        let path =
            trace_bicharacteristics(|_, _| 1.0, |_, _| 0.0, omega, &sym, 0.3, 0.0, &ys, 4).unwrap();
        for p in &path {
            assert!((p.z - 0.3).abs() < 1e-14);
            assert!(p.zeta.abs() < 1e-14);
        }
        // Oblique constant-medium ray is a straight line.
        let zeta0 = 0.3 * omega;
        let path =
            trace_bicharacteristics(|_, _| 1.0, |_, _| 0.0, omega, &sym, 0.0, zeta0, &ys, 4)
                .unwrap();
        let slope = zeta0 / (omega * omega - zeta0 * zeta0).sqrt();
        for p in &path {
            assert!((p.z - slope * p.y).abs() < 1e-12);
            assert!((p.zeta - zeta0).abs() < 1e-10);
        }
    }

    #[test]
    fn tracer_matches_fine_euler_on_linear_gradient() {
        let sym = OneWaySymbol::default();
        let omega = 20.0 * PI;
        let grad = 0.4;
        let c = move |_y: f64, z: f64| 1.0 + grad * z;
        let dcdz = move |_y: f64, _z: f64| grad;
        let ys: Vec<f64> = (0..6).map(|i| i as f64 * 0.04).collect();
        let path = trace_bicharacteristics(c, dcdz, omega, &sym, 0.1, 0.2 * omega, &ys, 16).unwrap();
        // Tiny-step Euler oracle.
        let mut z = 0.1;
        let mut zeta = 0.2 * omega;
        let mut y = 0.0;
        let h = 1e-6;
        let mut idx = 1;
        while idx < ys.len() {
            while y + h <= ys[idx] {
                let cv = c(y, z);
                let inv = 1.0 / (omega * omega / (cv * cv) - zeta * zeta).sqrt();
                let dz = zeta * inv;
                let dzeta = -(omega * omega / (cv * cv * cv)) * grad * inv;
                z += h * dz;
                zeta += h * dzeta;
                y += h;
            }
            let p = path[idx];
            assert!((p.z - z).abs() < 1e-6, "z: {} vs {}", p.z, z);
            assert!((p.zeta - zeta).abs() < 1e-6 * omega, "zeta: {} vs {}", p.zeta, zeta);
            idx += 1;
        }
    }

    #[test]
    fn cone_exit_detected() {
        let sym = OneWaySymbol::default();
        let omega = 20.0 * PI;
        // Start just inside the cone with a strong gradient pushing out.
        let c = |_y: f64, z: f64| 1.0 + 2.0 * z;
        let dcdz = |_y: f64, _z: f64| 2.0;
        let ys: Vec<f64> = (0..40).map(|i| i as f64 * 0.05).collect();
        let r = trace_bicharacteristics(c, dcdz, omega, &sym, 0.0, 0.69 * omega, &ys, 8);
        assert!(matches!(r, Err(Error::ConeExit { .. })));
    }

    #[test]
    fn first_order_convergence_on_smooth_medium() {
        let sym = OneWaySymbol::default();
        // Smooth periodic-in-z velocity; z period 1, band length 0.4.
        let lz = 1.0;
        let c = move |y: f64, z: f64| {
            1.0 + 0.15 * (2.0 * PI * z / lz).sin() * (1.8 * y).cos()
        };
        let p_z = 0.25;
        let base_nz = 40;
        let base_rows = 17;
        let solve = |refine: usize| {
            let nz = base_nz * refine;
            let rows = (base_rows - 1) * refine + 1;
            let g = BandGeometry {
                n_rows: rows,
                center: rows / 2,
                nz,
                dy: 0.4 / (rows - 1) as f64,
                dz: lz / nz as f64,
            };
            let dy = g.dy;
            let center = g.center;
            let dz = g.dz;
            let sol = solve_eikonal(
                move |row_f: f64, iz: usize| c((row_f - center as f64) * dy, iz as f64 * dz),
                g,
                &sym,
                p_z,
                0,
            )
            .unwrap();
            sol
        };
        let s1 = solve(1);
        let s2 = solve(2);
        let s4 = solve(4);
        let sref = solve(32);
        let err = |s: &EikonalSolution, refine: usize| -> f64 {
            let mut e = 0.0f64;
            for row in 0..s.geom.n_rows {
                for iz in 0..s.geom.nz {
                    let want = sref.travel_time(row * 32 / refine, iz * 32 / refine);
                    e = e.max((s.travel_time(row, iz) - want).abs());
                }
            }
            e
        };
        let e1 = err(&s1, 1);
        let e2 = err(&s2, 2);
        let e4 = err(&s4, 4);
        let r12 = e1 / e2;
        let r24 = e2 / e4;
        assert!(
            r12 > 1.7 && r12 < 2.3,
            "first halving ratio {r12} (e1 {e1:.3e}, e2 {e2:.3e})"
        );
        assert!(
            r24 > 1.7 && r24 < 2.3,
            "second halving ratio {r24} (e2 {e2:.3e}, e4 {e4:.3e})"
        );
    }

    #[test]
    fn eikonal_gradient_follows_traced_ray() {
        let sym = OneWaySymbol::default();
        let omega = 20.0 * PI;
        // Linear-gradient medium in z (periodified far from the band).
        let grad = 0.3;
        let lz = 2.0;
        let nz = 100;
        let rows = 21;
        let g = BandGeometry { n_rows: rows, center: rows / 2, nz, dy: 0.02, dz: lz / nz as f64 };
        let cz = move |z: f64| 1.0 + grad * ((z - 1.0).abs() - 0.5).min(0.45);
        let sol = solve_eikonal(
            |_row: f64, iz: usize| cz(iz as f64 * g.dz),
            g,
            &sym,
            0.15,
            0,
        )
        .unwrap();
        let zeta0 = 0.15 * omega;
        let ys: Vec<f64> = (0..=(rows / 2)).map(|i| i as f64 * g.dy).collect();
        let path = trace_bicharacteristics(
            |_y, z| cz(z),
            |_y, z| {
                let h = 1e-6;
                (cz(z + h) - cz(z - h)) / (2.0 * h)
            },
            omega,
            &sym,
            1.0,
            zeta0,
            &ys,
            8,
        )
        .unwrap();
        // dT/dz interpolated at the ray position vs traced zeta/omega,
        // within 3 cells worth of curvature.
        let mut max_cells = 0.0f64;
        for (i, p) in path.iter().enumerate() {
            let row = g.center + i;
            let iz = (p.z / g.dz).round() as usize % nz;
            let izp = (iz + 1) % nz;
            let izm = (iz + nz - 1) % nz;
            let tz = (sol.travel_time(row, izp) - sol.travel_time(row, izm)) / (2.0 * g.dz);
            let tzz = ((sol.travel_time(row, izp) - 2.0 * sol.travel_time(row, iz)
                + sol.travel_time(row, izm))
                / (g.dz * g.dz))
                .abs()
                .max(1e-9);
            let cells = (tz - p.zeta / omega).abs() / (tzz * g.dz);
            max_cells = max_cells.max(cells);
        }
        assert!(max_cells <= 3.0, "gradient/ray mismatch = {max_cells} cells");
    }
}
