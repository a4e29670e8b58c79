//! The discrete Helmholtz operator and its singular-value bounds.
//!
//! `A u = h^{-2} (4u - u_E - u_W - u_N - u_S) + (-omega^2/c^2 + i alpha omega/(L c)) u`
//! on the periodic grid: five-point Laplacian plus a complex zeroth-order
//! term. The imaginary part is the damping that keeps the operator away
//! from singular; it yields the lower bound `alpha_min omega / (L c_max)`
//! on every singular value.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{CField, GridSpec};
use crate::medium::Medium;

/// Operator configuration: a medium plus the angular frequency. `ppw` is
/// the nominal points-per-wavelength of the grid at this frequency,
/// measured against the minimum wavelength in the domain.
#[derive(Clone)]
pub struct HelmholtzOp<'a> {
    pub medium: &'a Medium,
    pub omega: f64,
    pub ppw: f64,
}

/// Analytic bounds from the operator's structure.
#[derive(Debug, Clone, Copy)]
pub struct OperatorBounds {
    /// Lower bound on every singular value.
    pub lower: f64,
    /// Upper bound on every singular value.
    pub upper: f64,
    /// Condition number bound under the points-per-wavelength grid rule.
    pub cond_bound: f64,
}

/// Grid points per direction needed to hold `ppw` points per minimum
/// wavelength at frequency `omega` (rounded up to even).
pub fn grid_points_for(omega: f64, ppw: f64, l: f64, c_min: f64) -> usize {
    let n = (ppw * omega * l / (2.0 * std::f64::consts::PI * c_min)).ceil() as usize;
    n + n % 2
}

impl<'a> HelmholtzOp<'a> {
    pub fn new(medium: &'a Medium, omega: f64) -> Self {
        let ppw = 2.0 * std::f64::consts::PI * medium.c_min / (medium.grid.h * omega);
        HelmholtzOp { medium, omega, ppw }
    }

    pub fn grid(&self) -> GridSpec {
        self.medium.grid
    }

    /// Apply the operator matrix-free.
    pub fn apply(&self, u: &CField) -> Result<CField> {
        let mut out = self.grid().zeros_c();
        self.apply_into(u, &mut out)?;
        Ok(out)
    }

    pub fn apply_into(&self, u: &CField, out: &mut CField) -> Result<()> {
        self.grid().check_shape_c(u)?;
        self.stencil(u, out, false);
        Ok(())
    }

    /// Apply the conjugate transpose. The Laplacian part is real symmetric,
    /// so only the zeroth-order coefficient is conjugated.
    pub fn apply_adjoint(&self, u: &CField) -> Result<CField> {
        let mut out = self.grid().zeros_c();
        self.apply_adjoint_into(u, &mut out)?;
        Ok(out)
    }

    pub fn apply_adjoint_into(&self, u: &CField, out: &mut CField) -> Result<()> {
        self.grid().check_shape_c(u)?;
        self.stencil(u, out, true);
        Ok(())
    }

    /// Flat-buffer variants for matrix-free solvers (row-major, x fastest).
    pub fn apply_flat(&self, u: &[Complex64], out: &mut [Complex64]) {
        let g = self.grid();
        let uv = ndarray::ArrayView2::from_shape(g.shape(), u).expect("flat shape");
        let u2 = uv.to_owned();
        let mut o2 = g.zeros_c();
        self.stencil(&u2, &mut o2, false);
        out.copy_from_slice(o2.as_slice().expect("contig"));
    }

    pub fn apply_adjoint_flat(&self, u: &[Complex64], out: &mut [Complex64]) {
        let g = self.grid();
        let uv = ndarray::ArrayView2::from_shape(g.shape(), u).expect("flat shape");
        let u2 = uv.to_owned();
        let mut o2 = g.zeros_c();
        self.stencil(&u2, &mut o2, true);
        out.copy_from_slice(o2.as_slice().expect("contig"));
    }

    fn stencil(&self, u: &CField, out: &mut CField, conj: bool) {
        let g = self.grid();
        let (nx, ny) = (g.nx, g.ny);
        let inv_h2 = 1.0 / (g.h * g.h);
        let m = self.medium;
        let omega = self.omega;
        for j in 0..ny {
            let jn = (j + 1) % ny;
            let jp = (j + ny - 1) % ny;
            for i in 0..nx {
                let in_ = (i + 1) % nx;
                let ip = (i + nx - 1) % nx;
                let lap = 4.0 * u[[j, i]] - u[[j, in_]] - u[[j, ip]] - u[[jn, i]] - u[[jp, i]];
                let c = m.c[[j, i]];
                let mut zo = Complex64::new(
                    -omega * omega / (c * c),
                    m.alpha[[j, i]] * omega / (m.l * c),
                );
                if conj {
                    zo = zo.conj();
                }
                out[[j, i]] = lap * inv_h2 + zo * u[[j, i]];
            }
        }
    }

    /// The continuous symbol `|xi|^2 - omega^2/c(x)^2 + i alpha(x) omega/(L c(x))`,
    /// with the coefficients interpolated bilinearly off-grid.
    pub fn symbol(&self, x: (f64, f64), xi: (f64, f64)) -> Complex64 {
        let c = self.medium.c_at(x.0, x.1);
        let a = self.medium.alpha_at(x.0, x.1);
        let xi2 = xi.0 * xi.0 + xi.1 * xi.1;
        Complex64::new(xi2 - self.omega * self.omega / (c * c), a * self.omega / (self.medium.l * c))
    }

    /// Dense matrix assembly, the oracle for small-grid SVD checks.
    /// Unknown ordering matches the field layout (row-major, x fastest).
    pub fn assemble_dense(&self) -> Result<DMatrix<Complex64>> {
        let g = self.grid();
        let n = g.len();
        if n > 4096 {
            return Err(Error::GridTooLargeForDense { n });
        }
        let mut mat = DMatrix::<Complex64>::zeros(n, n);
        let mut basis = g.zeros_c();
        let mut col = g.zeros_c();
        for k in 0..n {
            let (j, i) = (k / g.nx, k % g.nx);
            basis[[j, i]] = Complex64::new(1.0, 0.0);
            self.stencil(&basis, &mut col, false);
            basis[[j, i]] = Complex64::new(0.0, 0.0);
            for r in 0..n {
                mat[(r, k)] = col[[r / g.nx, r % g.nx]];
            }
        }
        Ok(mat)
    }

    /// The analytic singular-value bounds and the condition-number estimate
    /// under the points-per-wavelength rule.
    pub fn bounds(&self) -> OperatorBounds {
        let m = self.medium;
        let g = self.grid();
        let lower = m.alpha_min * self.omega / (m.l * m.c_max);
        let upper = Complex64::new(
            8.0 / (g.h * g.h) - self.omega * self.omega / (m.c_max * m.c_max),
            self.omega / (m.alpha_max * m.l * m.c_min),
        )
        .norm();
        let nw = self.ppw;
        let cond_bound = 2.0 * m.l * nw * nw * self.omega * m.c_max
            / (std::f64::consts::PI.powi(2) * m.alpha_min * m.c_min * m.c_min);
        OperatorBounds { lower, upper, cond_bound }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner, make_grid, norm};
    use crate::medium::{sample_medium, MediumClassParams};
    use crate::rng::SplitMix64;
    use std::f64::consts::PI;

    fn random_field(g: GridSpec, seed: u64) -> CField {
        let mut rng = SplitMix64::new(seed);
        CField::from_shape_fn(g.shape(), |_| {
            let (a, b) = rng.normal_pair();
            Complex64::new(a, b)
        })
    }

    #[test]
    fn constant_input_gives_minus_omega_sq() {
        let g = make_grid(16, 16, 1.0, 1.0).unwrap();
        let m = Medium::constant(g, 1.0, 1.0, 1.0).unwrap().with_alpha(1e-300).unwrap();
        // alpha ~ 0 within float range; compare only the real part.
        let op = HelmholtzOp::new(&m, 4.0 * PI);
        let u = CField::from_elem(g.shape(), Complex64::new(1.0, 0.0));
        let v = op.apply(&u).unwrap();
        for z in v.iter() {
            assert!((z.re + (4.0 * PI).powi(2)).abs() < 1e-10);
        }
    }

    #[test]
    fn plane_wave_eigenrelation() {
        let g = make_grid(32, 32, 1.0, 1.0).unwrap();
        let m = Medium::constant(g, 1.0, 1.0, 1.0).unwrap();
        let omega = 4.0 * PI;
        let op = HelmholtzOp::new(&m, omega);
        for k in [1i64, 3, 7] {
            let u = CField::from_shape_fn(g.shape(), |(_, i)| {
                let x = i as f64 * g.h;
                Complex64::from_polar(1.0, 2.0 * PI * k as f64 * x / g.lx)
            });
            let v = op.apply(&u).unwrap();
            let lam_lap = (2.0 - 2.0 * (2.0 * PI * k as f64 * g.h / g.lx).cos()) / (g.h * g.h);
            let want = Complex64::new(lam_lap - omega * omega, m.alpha[[0, 0]] * omega);
            for (a, b) in v.iter().zip(u.iter()) {
                assert!((a - want * b).norm() < 1e-9 * want.norm());
            }
        }
    }

    #[test]
    fn matches_dense_on_16sq() {
        let g = make_grid(16, 16, 1.0, 1.0).unwrap();
        let m = sample_medium(&MediumClassParams::new(2), g).unwrap();
        let op = HelmholtzOp::new(&m, 2.0 * PI);
        let dense = op.assemble_dense().unwrap();
        let u = random_field(g, 10);
        let v = op.apply(&u).unwrap();
        let uv: Vec<Complex64> = u.iter().cloned().collect();
        let dv = &dense * nalgebra::DVector::from_vec(uv);
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (k, z) in v.iter().enumerate() {
            err = err.max((z - dv[k]).norm());
            scale = scale.max(dv[k].norm());
        }
        assert!(err / scale < 1e-12, "relative error {}", err / scale);
    }

    #[test]
    fn adjoint_identity() {
        let g = make_grid(32, 32, 1.0, 1.0).unwrap();
        let m = sample_medium(&MediumClassParams::new(4), g).unwrap();
        let op = HelmholtzOp::new(&m, 2.0 * PI);
        let u = random_field(g, 20);
        let v = random_field(g, 21);
        let au = op.apply(&u).unwrap();
        let atv = op.apply_adjoint(&v).unwrap();
        let lhs = inner(&au, &v);
        let rhs = inner(&u, &atv);
        assert!((lhs - rhs).norm() <= 1e-12 * norm(&au) * norm(&v));
    }

    #[test]
    fn zero_damping_makes_a_symmetric_and_conj_adjoint() {
        let g = make_grid(16, 16, 1.0, 1.0).unwrap();
        let mut m = sample_medium(&MediumClassParams::new(7), g).unwrap();
        m.alpha.fill(1e-300);
        m.alpha_min = 1e-300;
        m.alpha_max = 1e-300;
        m.alpha_mean = 1e-300;
        let op = HelmholtzOp::new(&m, 2.0 * PI);
        let dense = op.assemble_dense().unwrap();
        for r in 0..dense.nrows() {
            for c in 0..r {
                assert!((dense[(r, c)] - dense[(c, r)]).norm() < 1e-12);
            }
        }
        // A* v = conj(A conj(v)) when A is real.
        let v = random_field(g, 30);
        let lhs = op.apply_adjoint(&v).unwrap();
        let rhs = op.apply(&v.mapv(|z| z.conj())).unwrap().mapv(|z| z.conj());
        let d = norm(&(&lhs - &rhs));
        assert!(d <= 1e-10 * norm(&lhs).max(1.0));
    }

    #[test]
    fn symbol_values() {
        let g = make_grid(16, 16, 1.0, 1.0).unwrap();
        let m = Medium::constant(g, 1.0, 2.0 * PI, 1.0).unwrap();
        let omega = 40.0 * PI;
        let op = HelmholtzOp::new(&m, omega);
        // On the characteristic set the real part vanishes.
        let s = op.symbol((0.3, 0.4), (omega, 0.0));
        assert!(s.re.abs() < 1e-9);
        // xi = 0: -omega^2 + i alpha omega/(L c) = -1600 pi^2 + 80 pi^2 i.
        let s0 = op.symbol((0.1, 0.9), (0.0, 0.0));
        assert!((s0.re + 1600.0 * PI * PI).abs() < 1e-9 * 1600.0 * PI * PI);
        assert!((s0.im - 80.0 * PI * PI).abs() < 1e-9 * 80.0 * PI * PI);
    }

    #[test]
    fn bounds_formulas() {
        let g = make_grid(16, 16, 1.0, 1.0).unwrap();
        let m = Medium::constant(g, 1.0, 2.0 * PI, 1.0).unwrap();
        let omega = 40.0 * PI;
        let mut op = HelmholtzOp::new(&m, omega);
        op.ppw = 16.0;
        let b = op.bounds();
        assert!((b.lower - 80.0 * PI * PI).abs() < 1e-9 * 80.0 * PI * PI);
        let want_cond = 2.0 * 256.0 * 40.0 * PI / (PI * PI * 2.0 * PI);
        assert!((b.cond_bound - want_cond).abs() < 1e-9 * want_cond);
    }

    #[test]
    fn dense_svd_within_bounds() {
        let g = make_grid(16, 16, 1.0, 1.0).unwrap();
        for seed in [1u64, 2, 3] {
            let m = sample_medium(&MediumClassParams::new(seed), g).unwrap();
            // Frequency chosen by the points-per-wavelength rule on this grid.
            let omega = 2.0 * PI * m.c_min / (16.0 * g.h);
            let op = HelmholtzOp::new(&m, omega);
            let b = op.bounds();
            let dense = op.assemble_dense().unwrap();
            let svd = dense.svd(false, false);
            let smax = svd.singular_values.iter().cloned().fold(f64::MIN, f64::max);
            let smin = svd.singular_values.iter().cloned().fold(f64::MAX, f64::min);
            assert!(smin >= b.lower * (1.0 - 1e-10), "smin {smin} < lower {}", b.lower);
            assert!(smax <= b.upper * (1.0 + 1e-10), "smax {smax} > upper {}", b.upper);
            assert!(smax / smin <= b.cond_bound, "cond {} > {}", smax / smin, b.cond_bound);
        }
    }

    #[test]
    fn linearity() {
        let g = make_grid(16, 16, 1.0, 1.0).unwrap();
        let m = sample_medium(&MediumClassParams::new(5), g).unwrap();
        let op = HelmholtzOp::new(&m, 2.0 * PI);
        let u = random_field(g, 40);
        let v = random_field(g, 41);
        let a = Complex64::new(0.3, -1.2);
        let b = Complex64::new(-0.7, 0.4);
        let lhs = op.apply(&(u.mapv(|z| a * z) + v.mapv(|z| b * z))).unwrap();
        let rhs = op.apply(&u).unwrap().mapv(|z| a * z) + op.apply(&v).unwrap().mapv(|z| b * z);
        let err = norm(&(&lhs - &rhs)) / norm(&lhs);
        assert!(err < 1e-12);
    }
}
