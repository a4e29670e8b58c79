//! Self-check suites behind the `verify` command: desk-scale versions of
//! the invariants the integration tests pin down, runnable from the CLI
//! with one pass/fail line per suite.

use num_complex::Complex64;

use crate::fft;
use crate::filter::{build_filter_bank, smooth_step, FilterConfig};
use crate::grid::{inner, make_grid, norm, norm_slice, CField, GridSpec};
use crate::helmholtz::HelmholtzOp;
use crate::lwpt::{build_weights, Lwpt, LwptConfig};
use crate::medium::{sample_medium, Medium, MediumClassParams};
use crate::oned;
use crate::ray::{solve_eikonal, trace_bicharacteristics, BandGeometry, OneWaySymbol};
use crate::rng::SplitMix64;
use crate::solver::{lsqr, random_rhs, HelmholtzMap, PreparedSolver, SolveConfig};

type SuiteResult = Result<(), String>;

fn random_field(g: GridSpec, seed: u64) -> CField {
    let mut rng = SplitMix64::new(seed);
    CField::from_shape_fn(g.shape(), |_| {
        let (a, b) = rng.normal_pair();
        Complex64::new(a, b)
    })
}

fn check(cond: bool, msg: String) -> SuiteResult {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn suite_cutoffs() -> SuiteResult {
    let mut rng = SplitMix64::new(3);
    for _ in 0..10_000 {
        let x = rng.uniform() * 2.0 - 0.5;
        let v = smooth_step(x).powi(2) + smooth_step(1.0 - x).powi(2);
        check((v - 1.0).abs() <= 1e-12, format!("step partition off at x = {x}: {v}"))?;
    }
    let g = make_grid(64, 64, 1.0, 1.0).map_err(|e| e.to_string())?;
    let m = Medium::constant(g, 1.0, crate::medium::DEFAULT_ALPHA, 1.0).map_err(|e| e.to_string())?;
    let bank = build_filter_bank(&m, 8.0 * std::f64::consts::PI, &FilterConfig::default())
        .map_err(|e| e.to_string())?;
    for idx in 0..g.len() {
        let s: f64 = (0..3)
            .map(|c| bank.chi[c].as_slice().unwrap()[idx].powi(2))
            .sum();
        check((s - 1.0).abs() <= 1e-12, format!("radial partition off: {s}"))?;
    }
    Ok(())
}

fn suite_dft() -> SuiteResult {
    let g = make_grid(64, 64, 1.0, 1.0).map_err(|e| e.to_string())?;
    let u = random_field(g, 5);
    let s = fft::dft2(&u).map_err(|e| e.to_string())?;
    check(
        (norm(&s) - norm(&u)).abs() / norm(&u) <= 1e-12,
        "Parseval identity violated".into(),
    )?;
    let back = fft::idft2(&s).map_err(|e| e.to_string())?;
    check(
        norm(&(&back - &u)) / norm(&u) <= 1e-13,
        "DFT roundtrip above 1e-13".into(),
    )
}

fn suite_operator() -> SuiteResult {
    let g = make_grid(16, 16, 1.0, 1.0).map_err(|e| e.to_string())?;
    for seed in 0..5u64 {
        let m = sample_medium(&MediumClassParams::new(seed), g).map_err(|e| e.to_string())?;
        let omega = 2.0 * std::f64::consts::PI * m.c_min / (16.0 * g.h);
        let op = HelmholtzOp::new(&m, omega);
        let dense = op.assemble_dense().map_err(|e| e.to_string())?;
        let u = random_field(g, 100 + seed);
        let v = op.apply(&u).map_err(|e| e.to_string())?;
        let uv: Vec<Complex64> = u.iter().cloned().collect();
        let dv = &dense * nalgebra::DVector::from_vec(uv);
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (k, z) in v.iter().enumerate() {
            err = err.max((z - dv[k]).norm());
            scale = scale.max(dv[k].norm());
        }
        check(err / scale <= 1e-12, format!("dense mismatch {err:e} (seed {seed})"))?;
    }
    Ok(())
}

fn suite_bounds() -> SuiteResult {
    let g = make_grid(16, 16, 1.0, 1.0).map_err(|e| e.to_string())?;
    for seed in 0..3u64 {
        let m = sample_medium(&MediumClassParams::new(seed), g).map_err(|e| e.to_string())?;
        let omega = 2.0 * std::f64::consts::PI * m.c_min / (16.0 * g.h);
        let op = HelmholtzOp::new(&m, omega);
        let b = op.bounds();
        let svd = op.assemble_dense().map_err(|e| e.to_string())?.svd(false, false);
        let smax = svd.singular_values.iter().cloned().fold(f64::MIN, f64::max);
        let smin = svd.singular_values.iter().cloned().fold(f64::MAX, f64::min);
        check(smin >= b.lower * (1.0 - 1e-10), format!("sigma_min {smin} < {}", b.lower))?;
        check(smax <= b.upper * (1.0 + 1e-10), format!("sigma_max {smax} > {}", b.upper))?;
        check(smax / smin <= b.cond_bound, format!("cond {} > {}", smax / smin, b.cond_bound))?;
    }
    Ok(())
}

fn suite_loc_tightness() -> SuiteResult {
    let g = make_grid(64, 64, 1.0, 1.0).map_err(|e| e.to_string())?;
    let m = sample_medium(&MediumClassParams::new(7), g).map_err(|e| e.to_string())?;
    let bank = build_filter_bank(&m, 8.0 * std::f64::consts::PI, &FilterConfig::default())
        .map_err(|e| e.to_string())?;
    let u = random_field(g, 11);
    let leaves = bank.loc_forward(&u).map_err(|e| e.to_string())?;
    let back = bank.loc_adjoint(&leaves).map_err(|e| e.to_string())?;
    let err = norm(&(&back - &u)) / norm(&u);
    check(err <= 1e-9, format!("localization tightness {err:e}"))?;
    let e = leaves.energy();
    check(
        (e - norm(&u).powi(2)).abs() / norm(&u).powi(2) <= 1e-9,
        "localization energy bookkeeping off".into(),
    )
}

fn suite_frame(fault: bool) -> SuiteResult {
    let g = make_grid(64, 64, 1.0, 1.0).map_err(|e| e.to_string())?;
    let omega = 8.0 * std::f64::consts::PI;
    let m = Medium::constant(g, 1.0, crate::medium::DEFAULT_ALPHA, 1.0).map_err(|e| e.to_string())?;
    let lw = Lwpt::prepare(&m, omega, &LwptConfig::default()).map_err(|e| e.to_string())?;
    let u = random_field(g, 13);
    let coeffs = lw.forward(&u).map_err(|e| e.to_string())?;
    let back = lw.adjoint(&coeffs).map_err(|e| e.to_string())?;
    let tight = norm(&(&back - &u)) / norm(&u);
    check(tight <= 1e-6, format!("constant-medium tightness {tight:e}"))?;
    // Adjoint identity.
    let v = random_field(g, 14);
    let fv = lw.forward(&v).map_err(|e| e.to_string())?;
    let lhs: Complex64 = coeffs.data.iter().zip(fv.data.iter()).map(|(a, b)| a.conj() * b).sum();
    let rhs = inner(&u, &lw.adjoint(&fv).map_err(|e| e.to_string())?);
    check(
        (lhs - rhs).norm() <= 1e-11 * norm(&u) * norm(&v),
        "frame adjoint identity violated".into(),
    )?;
    // Weights positive (optionally fault-injected to demonstrate detection).
    let mut weights = build_weights(&lw, &m);
    if fault {
        let mid = weights.w.len() / 2;
        weights.w[mid] *= 1e6;
    }
    let wmax = weights.w.iter().cloned().fold(f64::MIN, f64::max);
    let wmin = weights.w.iter().cloned().fold(f64::MAX, f64::min);
    check(
        wmin > 0.0 && wmax.is_finite() && wmax / wmin < 1e5,
        format!("weight range suspicious: [{wmin:e}, {wmax:e}]"),
    )
}

fn suite_eikonal() -> SuiteResult {
    let sym = OneWaySymbol::default();
    let geom = BandGeometry { n_rows: 25, center: 12, nz: 48, dy: 0.02, dz: 0.02 };
    let c0 = 1.2;
    let p_z = 0.3;
    let sol = solve_eikonal(|_, _| c0, geom, &sym, p_z, 0).map_err(|e| e.to_string())?;
    let slope = (1.0 / (c0 * c0) - p_z * p_z).sqrt();
    for row in 0..geom.n_rows {
        let y = geom.y_of(row);
        for iz in 0..geom.nz {
            let want = p_z * iz as f64 * geom.dz + y * slope;
            let got = sol.travel_time(row, iz);
            check(
                (got - want).abs() <= 5.0 * geom.dy,
                format!("constant-medium eikonal error {}", (got - want).abs()),
            )?;
        }
    }
    // Tracer against straight rays.
    let omega = 20.0 * std::f64::consts::PI;
    let ys: Vec<f64> = (0..8).map(|i| i as f64 * 0.03).collect();
    let path = trace_bicharacteristics(|_, _| 1.0, |_, _| 0.0, omega, &sym, 0.2, 0.25 * omega, &ys, 4)
        .map_err(|e| e.to_string())?;
    let v = 0.25 * omega / (omega * omega - (0.25 * omega).powi(2)).sqrt();
    for p in &path {
        check(
            (p.z - (0.2 + v * p.y)).abs() <= 1e-10,
            "tracer straight-ray mismatch".into(),
        )?;
    }
    Ok(())
}

fn suite_oned() -> SuiteResult {
    let n = 256;
    let omega = 16.0 * std::f64::consts::PI;
    for seed in 0..5u64 {
        let mut rng = SplitMix64::new(seed);
        let phase = rng.uniform();
        let c: Vec<f64> = (0..n)
            .map(|i| {
                let x = i as f64 / n as f64;
                1.0 + 0.2 * (2.0 * std::f64::consts::PI * (x + phase)).sin()
            })
            .collect();
        let frame = oned::oned_build(&c, omega).map_err(|e| e.to_string())?;
        let u = oned::oned_random_rhs(n, 50 + seed);
        let coeffs = frame.forward(&u).map_err(|e| e.to_string())?;
        let back = frame.adjoint(&coeffs).map_err(|e| e.to_string())?;
        let mut diff = 0.0f64;
        for (a, b) in back.iter().zip(&u) {
            diff += (a - b).norm_sqr();
        }
        let err = diff.sqrt() / norm_slice(&u);
        check(err <= 1e-10, format!("1-D tightness {err:e} (seed {seed})"))?;
    }
    Ok(())
}

fn suite_solve() -> SuiteResult {
    let g = make_grid(64, 64, 1.0, 1.0).map_err(|e| e.to_string())?;
    let omega = 8.0 * std::f64::consts::PI;
    let m = sample_medium(&MediumClassParams::new(4), g).map_err(|e| e.to_string())?;
    let prepared =
        PreparedSolver::new(&m, omega, SolveConfig::default()).map_err(|e| e.to_string())?;
    let rhs = random_rhs(g, 6);
    let (u, rep) = prepared.execute(&rhs).map_err(|e| e.to_string())?;
    check(rep.converged, format!("solve did not converge in {} iterations", rep.iterations))?;
    let op = HelmholtzOp::new(&m, omega);
    let au = op.apply(&u).map_err(|e| e.to_string())?;
    let resid = norm(&(&au - &rhs)) / norm(&rhs);
    check(resid <= 10.0 * prepared.config.tol, format!("residual {resid:e}"))?;
    // Monotone residual history.
    for w in rep.residual_history.windows(2) {
        check(w[1] <= w[0] + 1e-14, "LSQR residual not monotone".into())?;
    }
    // Unpreconditioned baseline is much slower.
    let a_map = HelmholtzMap { op: HelmholtzOp::new(&m, omega) };
    let (_, raw) = lsqr(&a_map, rhs.as_slice().unwrap(), prepared.config.tol, 5 * rep.iterations);
    check(
        !raw.converged || raw.iterations >= 5 * rep.iterations,
        format!("baseline too fast: {} vs {}", raw.iterations, rep.iterations),
    )
}

/// Named suites in execution order.
pub fn suite_names() -> Vec<&'static str> {
    vec![
        "cutoffs", "dft", "operator", "bounds", "loc", "frame", "eikonal", "oned", "solve",
    ]
}

/// Run the suites (all, or the one named by `filter`), printing one
/// pass/fail line each; returns the number of failures. `fault` injects a
/// corrupted diagonal weight so the detection path can be exercised.
pub fn run_suites(filter: Option<&str>, fault: bool) -> usize {
    let mut failures = 0;
    for name in suite_names() {
        if let Some(f) = filter {
            if f != name {
                continue;
            }
        }
        let outcome: SuiteResult = match name {
            "cutoffs" => suite_cutoffs(),
            "dft" => suite_dft(),
            "operator" => suite_operator(),
            "bounds" => suite_bounds(),
            "loc" => suite_loc_tightness(),
            "frame" => suite_frame(fault),
            "eikonal" => suite_eikonal(),
            "oned" => suite_oned(),
            "solve" => suite_solve(),
            _ => unreachable!(),
        };
        match outcome {
            Ok(()) => println!("PASS  {name}"),
            Err(msg) => {
                failures += 1;
                println!("FAIL  {name}: {msg}");
            }
        }
    }
    failures
}
