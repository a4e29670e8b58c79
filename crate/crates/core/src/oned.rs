//! One-dimensional modulated Fourier frame preconditioner.
//!
//! The 1-D analogue of the wave packet transform, with no asymptotic
//! error at all: the wavelength-scale components are demodulated by
//! `e^{-+i omega T(x)}` with the exact travel time `T(x) = int 1/c`, so
//! the frame is exactly tight and serves as the ground-truth
//! demonstration that curved phase-space tiles plus diagonal weights
//! equalize the Helmholtz spectrum.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft1;
use crate::filter::SmoothStep;
use crate::grid::GridSpec;
use crate::rng::SplitMix64;
use crate::solver::{lsqr, LinearMap, SolveReport};

/// The 1-D frame: cutoffs, corrected travel time, weights.
pub struct OneDFrame {
    pub n: usize,
    pub omega: f64,
    pub c: Vec<f64>,
    pub c_mean: f64,
    /// Travel time with the linear correction making
    /// `omega (T(1) - T(0))` a multiple of `2 pi`.
    pub travel: Vec<f64>,
    /// Radial cutoffs per FFT bin: high, positive wavelength scale,
    /// negative wavelength scale.
    pub chi: [Vec<f64>; 3],
    fft: Fft1,
}

/// Coefficients of the three branches.
pub struct OneDCoefficients {
    pub u1: Vec<Complex64>,
    pub u2: Vec<Complex64>,
    pub u3: Vec<Complex64>,
}

/// Build the frame: cutoff supports follow the wavelength-scale layout
/// (`chi1` vanishes on `[-1.5, 1.5] omega/c_min`; `chi2` vanishes outside
/// `[-0.4 omega/c_max, 2 omega/c_min]`; `chi3` mirrored) with smooth-step
/// transitions.
pub fn oned_build(c: &[f64], omega: f64) -> Result<OneDFrame> {
    let n = c.len();
    if n == 0 || n % 2 != 0 {
        return Err(Error::BadGridSize { nx: n, ny: 2 });
    }
    let c_min = c.iter().cloned().fold(f64::INFINITY, f64::min);
    let c_max = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(c_min > 0.0) {
        return Err(Error::NonPositiveVelocity { cmin: c_min });
    }
    let c_mean = c.iter().sum::<f64>() / n as f64;
    let nyquist = std::f64::consts::PI * n as f64;
    if 2.0 * omega / c_min >= nyquist {
        return Err(Error::NyquistViolation { k4: 2.0 * omega / c_min, nyquist });
    }
    let h = 1.0 / n as f64;
    // Trapezoid cumulative travel time on [0, 1].
    let mut travel = vec![0.0f64; n];
    for i in 1..n {
        travel[i] = travel[i - 1] + 0.5 * h * (1.0 / c[i - 1] + 1.0 / c[i]);
    }
    let t1 = travel[n - 1] + 0.5 * h * (1.0 / c[n - 1] + 1.0 / c[0]);
    // Linear correction: omega T(1) snapped to the nearest multiple of 2 pi.
    let target = 2.0 * std::f64::consts::PI * (omega * t1 / (2.0 * std::f64::consts::PI)).round()
        / omega;
    let slope = target - t1;
    for (i, t) in travel.iter_mut().enumerate() {
        *t += slope * i as f64 * h;
    }

    let step = SmoothStep::default();
    let b = omega / c_min;
    let a = omega / c_max;
    let chi2_of = |xi: f64| -> f64 {
        step.rise(xi, -0.4 * a, 0.4 * a) * step.fall(xi, 1.5 * b, 2.0 * b)
    };
    let chi3_of = |xi: f64| chi2_of(-xi);
    let chi1_of = |xi: f64| -> f64 {
        let v = 1.0 - chi2_of(xi).powi(2) - chi3_of(xi).powi(2);
        v.max(0.0).sqrt()
    };
    let mut chi1 = vec![0.0; n];
    let mut chi2 = vec![0.0; n];
    let mut chi3 = vec![0.0; n];
    for i in 0..n {
        let xi = 2.0 * std::f64::consts::PI * GridSpec::signed_freq(i, n) as f64;
        chi1[i] = chi1_of(xi);
        chi2[i] = chi2_of(xi);
        chi3[i] = chi3_of(xi);
    }
    Ok(OneDFrame {
        n,
        omega,
        c: c.to_vec(),
        c_mean,
        travel,
        chi: [chi1, chi2, chi3],
        fft: Fft1::new(n),
    })
}

impl OneDFrame {
    /// Analysis: `u1` is the plain DFT of the high component, `u2`/`u3`
    /// the DFTs of the demodulated wavelength-scale components.
    pub fn forward(&self, u: &[Complex64]) -> Result<OneDCoefficients> {
        if u.len() != self.n {
            return Err(Error::DimensionMismatch { want: self.n, got: u.len() });
        }
        let mut uhat = u.to_vec();
        self.fft.forward(&mut uhat);
        let mut parts = Vec::with_capacity(3);
        for chi in &self.chi {
            let mut p: Vec<Complex64> = uhat.iter().zip(chi).map(|(z, w)| z * w).collect();
            self.fft.inverse(&mut p);
            parts.push(p);
        }
        let u1 = {
            let mut v = parts[0].clone();
            self.fft.forward(&mut v);
            v
        };
        let u2 = {
            let mut v: Vec<Complex64> = parts[1]
                .iter()
                .zip(&self.travel)
                .map(|(z, t)| z * Complex64::from_polar(1.0, -self.omega * t))
                .collect();
            self.fft.forward(&mut v);
            v
        };
        let u3 = {
            let mut v: Vec<Complex64> = parts[2]
                .iter()
                .zip(&self.travel)
                .map(|(z, t)| z * Complex64::from_polar(1.0, self.omega * t))
                .collect();
            self.fft.forward(&mut v);
            v
        };
        Ok(OneDCoefficients { u1, u2, u3 })
    }

    /// Exact adjoint of [`OneDFrame::forward`]; also the inverse, since
    /// every stage is unitary and the squared cutoffs sum to one.
    pub fn adjoint(&self, coeffs: &OneDCoefficients) -> Result<Vec<Complex64>> {
        let branch = |data: &[Complex64], sign: f64| -> Vec<Complex64> {
            let mut v = data.to_vec();
            self.fft.inverse(&mut v);
            if sign != 0.0 {
                for (z, t) in v.iter_mut().zip(&self.travel) {
                    *z *= Complex64::from_polar(1.0, sign * self.omega * t);
                }
            }
            v
        };
        let parts = [
            branch(&coeffs.u1, 0.0),
            branch(&coeffs.u2, 1.0),
            branch(&coeffs.u3, -1.0),
        ];
        let mut acc = vec![Complex64::default(); self.n];
        for (part, chi) in parts.iter().zip(&self.chi) {
            let mut phat = part.clone();
            self.fft.forward(&mut phat);
            for ((accv, p), w) in acc.iter_mut().zip(&phat).zip(chi) {
                *accv += p * w;
            }
        }
        self.fft.inverse(&mut acc);
        Ok(acc)
    }

    /// Diagonal weights per branch coefficient.
    ///
    /// `u1`: the Fourier symbol recipe. `u2`/`u3`: the modulated-frame
    /// scaling `((omega/c)^2 + (2 (omega/c) xi_j)^2)^{-1/2}` evaluated at
    /// `c = c_mean`.
    pub fn weights(&self) -> OneDCoefficients {
        let n = self.n;
        let om = self.omega;
        let cm = self.c_mean;
        let mut w1 = vec![Complex64::default(); n];
        let mut w2 = vec![Complex64::default(); n];
        let mut w3 = vec![Complex64::default(); n];
        for i in 0..n {
            let xi = 2.0 * std::f64::consts::PI * GridSpec::signed_freq(i, n) as f64;
            let real = xi * xi - om * om / (cm * cm);
            w1[i] = Complex64::new(1.0 / real.hypot(om / cm), 0.0);
            let wv = 1.0 / ((om / cm).powi(2) + (2.0 * om / cm * xi).powi(2)).sqrt();
            w2[i] = Complex64::new(wv, 0.0);
            w3[i] = Complex64::new(wv, 0.0);
        }
        OneDCoefficients { u1: w1, u2: w2, u3: w3 }
    }
}

/// 1-D discrete Helmholtz operator: three-point Laplacian plus the same
/// zeroth-order term as the 2-D stencil.
pub struct OneDHelmholtz {
    pub c: Vec<f64>,
    pub alpha: f64,
    pub omega: f64,
    pub l: f64,
    h: f64,
}

impl OneDHelmholtz {
    pub fn new(c: Vec<f64>, alpha: f64, omega: f64) -> Self {
        let h = 1.0 / c.len() as f64;
        OneDHelmholtz { c, alpha, omega, l: 1.0, h }
    }

    fn stencil(&self, u: &[Complex64], out: &mut [Complex64], conj: bool) {
        let n = u.len();
        let inv_h2 = 1.0 / (self.h * self.h);
        for i in 0..n {
            let ip = (i + 1) % n;
            let im = (i + n - 1) % n;
            let lap = 2.0 * u[i] - u[ip] - u[im];
            let c = self.c[i];
            let mut zo = Complex64::new(
                -self.omega * self.omega / (c * c),
                self.alpha * self.omega / (self.l * c),
            );
            if conj {
                zo = zo.conj();
            }
            out[i] = lap * inv_h2 + zo * u[i];
        }
    }
}

impl LinearMap for OneDHelmholtz {
    fn rows(&self) -> usize {
        self.c.len()
    }
    fn cols(&self) -> usize {
        self.c.len()
    }
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.stencil(x, y, false);
    }
    fn apply_adjoint(&self, y: &[Complex64], x: &mut [Complex64]) {
        self.stencil(y, x, true);
    }
}

/// `A (F* W F)`: the right-preconditioned 1-D map.
pub struct OneDPreconditioned<'a> {
    pub op: &'a OneDHelmholtz,
    pub frame: &'a OneDFrame,
    pub weights: OneDCoefficients,
}

impl<'a> OneDPreconditioned<'a> {
    fn m_apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let mut coeffs = self.frame.forward(x).expect("forward");
        for (c, w) in coeffs.u1.iter_mut().zip(&self.weights.u1) {
            *c *= w.re;
        }
        for (c, w) in coeffs.u2.iter_mut().zip(&self.weights.u2) {
            *c *= w.re;
        }
        for (c, w) in coeffs.u3.iter_mut().zip(&self.weights.u3) {
            *c *= w.re;
        }
        let out = self.frame.adjoint(&coeffs).expect("adjoint");
        y.copy_from_slice(&out);
    }
}

impl<'a> LinearMap for OneDPreconditioned<'a> {
    fn rows(&self) -> usize {
        self.op.rows()
    }
    fn cols(&self) -> usize {
        self.op.cols()
    }
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let mut t = vec![Complex64::default(); x.len()];
        self.m_apply(x, &mut t);
        self.op.apply(&t, y);
    }
    fn apply_adjoint(&self, y: &[Complex64], x: &mut [Complex64]) {
        let mut t = vec![Complex64::default(); y.len()];
        self.op.apply_adjoint(y, &mut t);
        self.m_apply(&t, x);
    }
}

/// Solve the 1-D Helmholtz problem by right-preconditioned LSQR.
pub fn oned_solve(
    c: &[f64],
    omega: f64,
    alpha: f64,
    rhs: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<Complex64>, SolveReport)> {
    let frame = oned_build(c, omega)?;
    let op = OneDHelmholtz::new(c.to_vec(), alpha, omega);
    let weights = frame.weights();
    let pmap = OneDPreconditioned { op: &op, frame: &frame, weights };
    let (y, report) = lsqr(&pmap, rhs, tol, max_iter);
    let mut u = vec![Complex64::default(); y.len()];
    pmap.m_apply(&y, &mut u);
    Ok((u, report))
}

/// Unpreconditioned LSQR baseline.
pub fn oned_solve_unpreconditioned(
    c: &[f64],
    omega: f64,
    alpha: f64,
    rhs: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> (Vec<Complex64>, SolveReport) {
    let op = OneDHelmholtz::new(c.to_vec(), alpha, omega);
    lsqr(&op, rhs, tol, max_iter)
}

/// Seeded complex normal right-hand side.
pub fn oned_random_rhs(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = SplitMix64::new(seed);
    (0..n)
        .map(|_| {
            let (a, b) = rng.normal_pair();
            Complex64::new(a, b)
        })
        .collect()
}
