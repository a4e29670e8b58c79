//! Matrix-free LSQR and the right-preconditioned Helmholtz solve.
//!
//! The preconditioned system is `A (F* W F) y = f`, solved in the
//! least-squares sense by LSQR (Golub-Kahan bidiagonalization); the field
//! solution is `u = F* W F y`. Preparation (filter bank, ray tables,
//! kernels, weights) happens once per (medium, omega) and is reused
//! across right-hand sides.

use std::cell::Cell;
use std::time::Instant;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{norm_slice, CField, GridSpec};
use crate::helmholtz::HelmholtzOp;
use crate::lwpt::{build_weights, DiagonalWeights, Lwpt, LwptConfig};
use crate::medium::Medium;
use crate::rng::SplitMix64;

/// A linear operator given by its action and the action of its adjoint.
pub trait LinearMap: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `y = M x`.
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
    /// `x = M* y`.
    fn apply_adjoint(&self, y: &[Complex64], x: &mut [Complex64]);
}

/// The discrete Helmholtz operator as a flat-buffer map.
pub struct HelmholtzMap<'a> {
    pub op: HelmholtzOp<'a>,
}

impl<'a> LinearMap for HelmholtzMap<'a> {
    fn rows(&self) -> usize {
        self.op.grid().len()
    }
    fn cols(&self) -> usize {
        self.op.grid().len()
    }
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.op.apply_flat(x, y);
    }
    fn apply_adjoint(&self, y: &[Complex64], x: &mut [Complex64]) {
        self.op.apply_adjoint_flat(y, x);
    }
}

/// `F* W F`: analysis, diagonal weights, synthesis. Self-adjoint because
/// the weights are real and the synthesis is the exact adjoint of the
/// analysis.
pub struct FrameMap<'a> {
    pub lwpt: &'a Lwpt,
    pub weights: &'a DiagonalWeights,
}

impl<'a> FrameMap<'a> {
    fn apply_field(&self, x: &[Complex64], y: &mut [Complex64]) {
        let g = self.lwpt.grid();
        let u = CField::from_shape_vec(g.shape(), x.to_vec()).expect("flat shape");
        let mut coeffs = self.lwpt.forward(&u).expect("forward");
        self.weights.apply(&mut coeffs);
        let out = self.lwpt.adjoint(&coeffs).expect("adjoint");
        y.copy_from_slice(out.as_slice().expect("contig"));
    }
}

impl<'a> LinearMap for FrameMap<'a> {
    fn rows(&self) -> usize {
        self.lwpt.grid().len()
    }
    fn cols(&self) -> usize {
        self.lwpt.grid().len()
    }
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.apply_field(x, y);
    }
    fn apply_adjoint(&self, y: &[Complex64], x: &mut [Complex64]) {
        self.apply_field(y, x);
    }
}

/// Right-preconditioned operator `A M` with `M = F* W F`.
pub struct PreconditionedMap<'a> {
    pub a: &'a dyn LinearMap,
    pub m: &'a FrameMap<'a>,
}

/// Compose the right-preconditioned map; errors on dimension mismatch.
pub fn preconditioned_map<'a>(
    a: &'a dyn LinearMap,
    m: &'a FrameMap<'a>,
) -> Result<PreconditionedMap<'a>> {
    if a.cols() != m.rows() {
        return Err(Error::DimensionMismatch { want: a.cols(), got: m.rows() });
    }
    Ok(PreconditionedMap { a, m })
}

impl<'a> LinearMap for PreconditionedMap<'a> {
    fn rows(&self) -> usize {
        self.a.rows()
    }
    fn cols(&self) -> usize {
        self.m.cols()
    }
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let mut t = vec![Complex64::default(); self.m.rows()];
        self.m.apply(x, &mut t);
        self.a.apply(&t, y);
    }
    fn apply_adjoint(&self, y: &[Complex64], x: &mut [Complex64]) {
        let mut t = vec![Complex64::default(); self.a.cols()];
        self.a.apply_adjoint(y, &mut t);
        self.m.apply_adjoint(&t, x);
    }
}

/// Iteration record of one solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative LSQR residual estimate after each iteration.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub prepare_seconds: f64,
    pub execute_seconds: f64,
}

/// LSQR on `min ||M y - rhs||`, stopping when the residual estimate has
/// dropped by `tol` relative to the initial residual, or after `max_iter`
/// iterations (`converged = false`, not an error).
pub fn lsqr(
    map: &dyn LinearMap,
    rhs: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> (Vec<Complex64>, SolveReport) {
    assert!(tol > 0.0 && tol < 1.0, "tol must be in (0, 1)");
    let mrows = map.rows();
    let ncols = map.cols();
    assert_eq!(rhs.len(), mrows);

    let start = Instant::now();
    let mut x = vec![Complex64::default(); ncols];
    let mut u = rhs.to_vec();
    let beta0 = norm_slice(&u);
    if beta0 == 0.0 {
        return (
            x,
            SolveReport {
                iterations: 0,
                residual_history: vec![],
                converged: true,
                prepare_seconds: 0.0,
                execute_seconds: start.elapsed().as_secs_f64(),
            },
        );
    }
    scale(&mut u, 1.0 / beta0);
    let mut v = vec![Complex64::default(); ncols];
    map.apply_adjoint(&u, &mut v);
    let mut alpha = norm_slice(&v);
    if alpha > 0.0 {
        scale(&mut v, 1.0 / alpha);
    }
    let mut w = v.clone();
    let mut phibar = beta0;
    let mut rhobar = alpha;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    let mut tmp_m = vec![Complex64::default(); mrows];
    let mut tmp_n = vec![Complex64::default(); ncols];

    for it in 1..=max_iter {
        // u <- A v - alpha u; beta = ||u||
        map.apply(&v, &mut tmp_m);
        for (ui, ti) in u.iter_mut().zip(&tmp_m) {
            *ui = ti - *ui * alpha;
        }
        let beta = norm_slice(&u);
        if beta > 0.0 {
            scale(&mut u, 1.0 / beta);
        }
        // v <- A* u - beta v; alpha = ||v||
        map.apply_adjoint(&u, &mut tmp_n);
        for (vi, ti) in v.iter_mut().zip(&tmp_n) {
            *vi = ti - *vi * beta;
        }
        alpha = norm_slice(&v);
        if alpha > 0.0 {
            scale(&mut v, 1.0 / alpha);
        }
        // Givens rotation eliminating beta.
        let rho = rhobar.hypot(beta);
        let c = rhobar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rhobar = -c * alpha;
        let phi = c * phibar;
        phibar = s * phibar;
        // x and the search direction.
        let t1 = phi / rho;
        let t2 = -theta / rho;
        for i in 0..ncols {
            x[i] += w[i] * t1;
            w[i] = v[i] + w[i] * t2;
        }
        iterations = it;
        let rel = phibar / beta0;
        history.push(rel);
        if rel <= tol {
            converged = true;
            break;
        }
    }
    (
        x,
        SolveReport {
            iterations,
            residual_history: history,
            converged,
            prepare_seconds: 0.0,
            execute_seconds: start.elapsed().as_secs_f64(),
        },
    )
}

fn scale(v: &mut [Complex64], s: f64) {
    for z in v.iter_mut() {
        *z *= s;
    }
}

/// Condition-number estimate from `iters` steps of Golub-Kahan
/// bidiagonalization: the singular values of the small lower-bidiagonal
/// matrix approach the extreme singular values of the operator.
pub fn estimate_cond(map: &dyn LinearMap, seed_rhs: &[Complex64], iters: usize) -> f64 {
    let mut u = seed_rhs.to_vec();
    let beta0 = norm_slice(&u);
    scale(&mut u, 1.0 / beta0);
    let mut v = vec![Complex64::default(); map.cols()];
    map.apply_adjoint(&u, &mut v);
    let mut alpha = norm_slice(&v);
    scale(&mut v, 1.0 / alpha);
    let mut alphas = vec![alpha];
    let mut betas = Vec::new();
    let mut tmp_m = vec![Complex64::default(); map.rows()];
    let mut tmp_n = vec![Complex64::default(); map.cols()];
    for _ in 0..iters {
        map.apply(&v, &mut tmp_m);
        for (ui, ti) in u.iter_mut().zip(&tmp_m) {
            *ui = ti - *ui * alpha;
        }
        let beta = norm_slice(&u);
        if beta == 0.0 {
            break;
        }
        scale(&mut u, 1.0 / beta);
        betas.push(beta);
        map.apply_adjoint(&u, &mut tmp_n);
        for (vi, ti) in v.iter_mut().zip(&tmp_n) {
            *vi = ti - *vi * beta;
        }
        alpha = norm_slice(&v);
        if alpha == 0.0 {
            break;
        }
        scale(&mut v, 1.0 / alpha);
        alphas.push(alpha);
    }
    let k = betas.len();
    let mut bid = nalgebra::DMatrix::<f64>::zeros(k + 1, k);
    for i in 0..k {
        bid[(i, i)] = alphas[i];
        bid[(i + 1, i)] = betas[i];
    }
    let sv = bid.svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(f64::MIN, f64::max);
    let smin = sv.iter().cloned().fold(f64::MAX, f64::min);
    smax / smin
}

/// Solver configuration; defaults follow the reference experiments.
#[derive(Debug, Clone, Copy)]
pub struct SolveConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub lwpt: LwptConfig,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { tol: 1e-5, max_iter: 500, lwpt: LwptConfig::default() }
    }
}

thread_local! {
    static PREPARE_CALLS: Cell<usize> = const { Cell::new(0) };
}

/// Number of preparation phases run by the calling thread
/// (instrumentation for the reuse guarantee).
pub fn prepare_call_count() -> usize {
    PREPARE_CALLS.with(|c| c.get())
}

/// Prepared state: everything reusable across right-hand sides.
pub struct PreparedSolver<'a> {
    pub medium: &'a Medium,
    pub omega: f64,
    pub lwpt: Lwpt,
    pub weights: DiagonalWeights,
    pub config: SolveConfig,
    pub prepare_seconds: f64,
}

impl<'a> PreparedSolver<'a> {
    pub fn new(medium: &'a Medium, omega: f64, config: SolveConfig) -> Result<Self> {
        let t0 = Instant::now();
        let lwpt = Lwpt::prepare(medium, omega, &config.lwpt)?;
        let weights = build_weights(&lwpt, medium);
        PREPARE_CALLS.with(|c| c.set(c.get() + 1));
        Ok(PreparedSolver {
            medium,
            omega,
            lwpt,
            weights,
            config,
            prepare_seconds: t0.elapsed().as_secs_f64(),
        })
    }

    /// Solve `A u = rhs` through the right-preconditioned least-squares
    /// problem; returns the field solution and the iteration report.
    pub fn execute(&self, rhs: &CField) -> Result<(CField, SolveReport)> {
        let (u, mut report) = execute_prepared(
            self.medium,
            self.omega,
            &self.lwpt,
            &self.weights,
            self.config.tol,
            self.config.max_iter,
            rhs,
        )?;
        report.prepare_seconds = self.prepare_seconds;
        Ok((u, report))
    }

    /// Baseline: LSQR on the raw operator, no preconditioning.
    pub fn execute_unpreconditioned(&self, rhs: &CField) -> Result<(CField, SolveReport)> {
        let g = self.medium.grid;
        g.check_shape_c(rhs)?;
        let t0 = Instant::now();
        let op = HelmholtzOp::new(self.medium, self.omega);
        let a_map = HelmholtzMap { op };
        let (u_flat, mut report) = lsqr(
            &a_map,
            rhs.as_slice().expect("contig"),
            self.config.tol,
            self.config.max_iter,
        );
        let u = CField::from_shape_vec(g.shape(), u_flat).expect("shape");
        report.execute_seconds = t0.elapsed().as_secs_f64();
        Ok((u, report))
    }
}

/// Run the right-preconditioned LSQR solve against an already-prepared
/// transform and weights.
pub fn execute_prepared(
    medium: &Medium,
    omega: f64,
    lwpt: &Lwpt,
    weights: &DiagonalWeights,
    tol: f64,
    max_iter: usize,
    rhs: &CField,
) -> Result<(CField, SolveReport)> {
    let g = medium.grid;
    g.check_shape_c(rhs)?;
    let t0 = Instant::now();
    let op = HelmholtzOp::new(medium, omega);
    let a_map = HelmholtzMap { op };
    let frame = FrameMap { lwpt, weights };
    let pmap = preconditioned_map(&a_map, &frame)?;
    let rhs_flat = rhs.as_slice().expect("contig");
    let (y, mut report) = lsqr(&pmap, rhs_flat, tol, max_iter);
    let mut u_flat = vec![Complex64::default(); y.len()];
    frame.apply(&y, &mut u_flat);
    let u = CField::from_shape_vec(g.shape(), u_flat).expect("shape");
    report.execute_seconds = t0.elapsed().as_secs_f64();
    Ok((u, report))
}

/// One-call convenience: prepare then execute.
pub fn solve_helmholtz(
    medium: &Medium,
    omega: f64,
    rhs: &CField,
    config: SolveConfig,
) -> Result<(CField, SolveReport)> {
    let prepared = PreparedSolver::new(medium, omega, config)?;
    prepared.execute(rhs)
}

/// Seeded complex standard-normal right-hand side; one Box-Muller pair
/// per grid point in row-major order.
pub fn random_rhs(grid: GridSpec, seed: u64) -> CField {
    let mut rng = SplitMix64::new(seed);
    CField::from_shape_fn(grid.shape(), |_| {
        let (a, b) = rng.normal_pair();
        Complex64::new(a, b)
    })
}
