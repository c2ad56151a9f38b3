//! Acceptance suite: one test per criterion, each printing a single
//! pass/fail line (visible with `cargo test --test acceptance -- --nocapture`).

use std::sync::OnceLock;

use num_complex::Complex64;

use wilson_lab::bargmann::{auto_degree, kernel_xi_inner, FockWorkspace, KernelPoint, DEFAULT_C_TILDE};
use wilson_lab::estimator::{
    exact_su2_free_field, potential, su2_free_field_mc, wilson_mc, EstimateResult, RunDiagnostics,
    RunParams,
};
use wilson_lab::field::WienerConfig;
use wilson_lab::lie::{
    build_so_basis, build_su_basis, casimir, standard_rep, structure_constants, GroupKind,
};
use wilson_lab::record::fmt_g17;
use wilson_lab::surface::{nu_norm_kernel, RectSurface};
use wilson_lab::ym::{density_moments_multi, make_wgrid, YmContext};

fn report(criterion: usize, ok: bool, detail: &str) {
    let status = if ok { "pass" } else { "FAIL" };
    println!("criterion {criterion}: {status} ({detail})");
    assert!(ok, "criterion {criterion} failed: {detail}");
}

/// Criterion-8 reference run, shared with criteria 9 and 11.
fn c8_params() -> RunParams {
    RunParams {
        kappa: 4.0,
        a: [0.5, 0.0, 0.0],
        t_len: 0.5,
        n_samples: 10_000,
        n_nodes: 512,
        seed: 1,
        c_tilde: DEFAULT_C_TILDE,
        eps_tail: 1e-6,
        degree: None,
    }
}

fn c8_run() -> &'static (EstimateResult, RunDiagnostics) {
    static RUN: OnceLock<(EstimateResult, RunDiagnostics)> = OnceLock::new();
    RUN.get_or_init(|| {
        let basis = build_su_basis(2).unwrap();
        let sc = structure_constants(&basis).unwrap();
        let rep = standard_rep(&basis);
        let surface = RectSurface::new([0.5, 0.0, 0.0], 0.5).unwrap();
        wilson_mc(&surface, &rep, &sc, &c8_params()).unwrap()
    })
}

#[test]
fn criterion_01_algebra_exactness() {
    let mut worst: f64 = 0.0;
    for n in 2..=4usize {
        let rep = standard_rep(&build_su_basis(n).unwrap());
        // Sum of squares = -Casimir; target (1/N - N) I.
        let sum_sq = -casimir(&rep).matrix;
        let target = 1.0 / n as f64 - n as f64;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { target } else { 0.0 };
                worst = worst.max((sum_sq[(i, j)] - Complex64::new(want, 0.0)).norm());
            }
        }
    }
    for n in 3..=5usize {
        let rep = standard_rep(&build_so_basis(n).unwrap());
        let sum_sq = -casimir(&rep).matrix;
        let target = (1.0 - n as f64) / 2.0;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { target } else { 0.0 };
                worst = worst.max((sum_sq[(i, j)] - Complex64::new(want, 0.0)).norm());
            }
        }
    }
    report(1, worst < 1e-10, &format!("max deviation {worst:.3e}"));
}

#[test]
fn criterion_02_structure_constant_oracle() {
    let sc = structure_constants(&build_su_basis(2).unwrap()).unwrap();
    let eps = |g: usize, a: usize, b: usize| -> f64 {
        match (g, a, b) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    };
    let mut worst: f64 = 0.0;
    for g in 0..3 {
        for a in 0..3 {
            for b in 0..3 {
                worst = worst.max((sc.get(g, a, b) - 2.0_f64.sqrt() * eps(g, a, b)).abs());
            }
        }
    }
    report(2, worst < 1e-12, &format!("max deviation {worst:.3e}"));
}

#[test]
fn criterion_03_kernel_norms() {
    let target = 1.0 / std::f64::consts::TAU;
    let points = [
        KernelPoint::from_real([1.0, 1.0, 1.0, 1.0]),
        KernelPoint::from_real([2.0, 0.0, 0.0, 0.0]),
        KernelPoint::from_real([-0.5, 1.1, 0.3, -0.9]),
        KernelPoint::from_real([0.0, 0.0, 0.0, 0.0]),
    ];
    let mut worst_exact: f64 = 0.0;
    let mut worst_trunc: f64 = 0.0;
    let ws = FockWorkspace::new(auto_degree(2.0, 1e-9, DEFAULT_C_TILDE).unwrap()).unwrap();
    for w in &points {
        for (a, b) in [(0, 1), (0, 3), (1, 2), (2, 3)] {
            let exact = kernel_xi_inner(a, b, w, a, b, w, DEFAULT_C_TILDE).unwrap().re;
            worst_exact = worst_exact.max((exact - target).abs());
            let (xi, _) = ws.xi_coeffs(a, b, w, DEFAULT_C_TILDE).unwrap();
            let trunc: f64 = xi.coeffs.iter().map(|z| z.norm_sqr()).sum();
            worst_trunc = worst_trunc.max((trunc - target).abs());
        }
    }
    report(
        3,
        worst_exact < 1e-14 && worst_trunc < 1e-8,
        &format!("exact dev {worst_exact:.3e}, truncated dev {worst_trunc:.3e} at degree {}", ws.degree),
    );
}

#[test]
fn criterion_04_nu_norm_convergence() {
    let surface = RectSurface::new([1.0, 0.0, 0.0], 1.0).unwrap();
    // Independent oracle values of the erf closed form at |a| = T = 1.
    let oracle = [
        (16.0, 0.20261901093563175),
        (32.0, 0.22568780647136313),
        (64.0, 0.23768847848656835),
    ];
    let vals: Vec<f64> = oracle.iter().map(|&(k, _)| nu_norm_kernel(&surface, k)).collect();
    let increasing = vals[0] < vals[1] && vals[1] < vals[2] && vals[2] < 0.25;
    let worst = oracle
        .iter()
        .zip(&vals)
        .map(|(&(_, o), v)| (v - o).abs())
        .fold(0.0_f64, f64::max);
    let rel = (0.25 - vals[2]) / 0.25;
    report(
        4,
        increasing && worst < 1e-8 && rel < 0.08,
        &format!("values {vals:?}, oracle dev {worst:.3e}, gap to limit {:.2}%", rel * 100.0),
    );
}

#[test]
fn criterion_05_combined_square_identity() {
    let basis = build_su_basis(2).unwrap();
    let sc = structure_constants(&basis).unwrap();
    let ws = FockWorkspace::new(8).unwrap();
    let grid = make_wgrid(256, 1).unwrap();
    let ctx = YmContext::new(&ws, &sc, &grid, 4.0, DEFAULT_C_TILDE).unwrap();
    let cfg = WienerConfig::new(4.0, &ws, sc.dim(), 1).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let (y, combined) = ctx.y_terms_checked(&wilson_lab::field::sample_field(&cfg, i));
        worst = worst.max(((y.y1 + y.y2).re + y.y3 - combined).abs());
    }
    report(5, worst < 1e-8, &format!("max per-sample gap {worst:.3e}"));
}

#[test]
fn criterion_06_density_moments() {
    let basis = build_su_basis(2).unwrap();
    let sc = structure_constants(&basis).unwrap();
    let ws = FockWorkspace::new(10).unwrap();
    let grid = make_wgrid(256, 1).unwrap();
    // raw_y is scale-free; the context kappa is irrelevant here.
    let ctx = YmContext::new(&ws, &sc, &grid, 1.0, DEFAULT_C_TILDE).unwrap();
    let unit = WienerConfig::new(1.0, &ws, sc.dim(), 1).unwrap();
    let kappas = [4.0, 8.0];
    let first = density_moments_multi(&ctx, &unit, 10_000, &kappas, 1.0).unwrap();
    let in_band = first.iter().all(|&(m, se)| (m - 1.0).abs() <= 5.0 * se);
    let decreasing = (first[1].0 - 1.0).abs() < (first[0].0 - 1.0).abs();
    let second = density_moments_multi(&ctx, &unit, 10_000, &[4.0], 2.0).unwrap()[0];
    let bound = (1.0 - 2.0 / std::f64::consts::PI).powi(-(sc.dim() as i32));
    let second_ok = second.0 <= bound + 3.0 * second.1;
    report(
        6,
        in_band && decreasing && second_ok,
        &format!(
            "mean-one band {}: E[Y] = {:.6}+-{:.6} (k=4), {:.6}+-{:.6} (k=8) \
             [systematic O(kappa^-4) deviation, not MC noise]; \
             |E[Y]-1| decreasing {decreasing}; E[Y^2] = {:.4} <= {:.4} {second_ok}",
            if in_band { "holds" } else { "fails" },
            first[0].0,
            first[0].1,
            first[1].0,
            first[1].1,
            second.0,
            bound
        ),
    );
}

#[test]
fn criterion_07_free_field_oracle() {
    let v = 0.1;
    let oracle = exact_su2_free_field(v).unwrap();
    let (mc, se) = su2_free_field_mc(v, 1_000_000, 1);
    report(
        7,
        (mc - oracle).abs() < 3.0 * se && se < 2e-3 && (oracle - 1.85308).abs() < 1e-5,
        &format!("mc {mc:.6} vs oracle {oracle:.6}, se {se:.2e}"),
    );
}

#[test]
fn criterion_08_full_estimator_small_coupling() {
    let (res, diag) = c8_run();
    let oracle = res.oracle_value.unwrap();
    let dev = (res.trace_estimate.0 - oracle).abs();
    report(
        8,
        dev < 3.0 * res.std_error && res.trace_estimate.1.abs() < 3.0 * res.std_error,
        &format!(
            "estimate {:.6}+-{:.6} vs oracle {:.6} at v = {:.6}; closed-form gap {:.3e} (degree {})",
            res.trace_estimate.0,
            res.std_error,
            oracle,
            res.v,
            diag.paper_vs_oracle_gap.unwrap(),
            diag.degree
        ),
    );
}

#[test]
fn criterion_09_interaction_smallness_trend() {
    let (res4, diag4) = c8_run();
    let basis = build_su_basis(2).unwrap();
    let sc = structure_constants(&basis).unwrap();
    let rep = standard_rep(&basis);
    let surface = RectSurface::new([0.5, 0.0, 0.0], 0.5).unwrap();
    // Same degree as the kappa = 4 run so the coefficient streams align
    // (common random numbers across kappa).
    let params2 = RunParams { kappa: 2.0, degree: Some(diag4.degree), ..c8_params() };
    let (res2, _) = wilson_mc(&surface, &rep, &sc, &params2).unwrap();
    let gap = |r: &EstimateResult| {
        let w = Complex64::new(r.trace_estimate.0, r.trace_estimate.1);
        let u = Complex64::new(r.unweighted_trace.0, r.unweighted_trace.1);
        (w - u).norm()
    };
    let g2 = gap(&res2);
    let g4 = gap(res4);
    report(9, g4 < g2, &format!("|weighted - unweighted|: {g2:.3e} (k=2) -> {g4:.3e} (k=4)"));
}

#[test]
fn criterion_10_potential_linearity() {
    let rs = [0.0, 1.0, 2.0, 3.0];
    let su2 = potential(GroupKind::Su, 2, &rs).unwrap();
    let su3 = potential(GroupKind::Su, 3, &rs).unwrap();
    let so3 = potential(GroupKind::So, 3, &rs).unwrap();
    let ok = (su2.slope() - 3.0 / 16.0).abs() < 1e-12
        && (su3.slope() - 1.0 / 3.0).abs() < 1e-12
        && (so3.slope() - 1.0 / 8.0).abs() < 1e-12
        && (su3.rows[3].1 - 1.0).abs() < 1e-12
        && [&su2, &su3, &so3].iter().all(|t| t.linear_fit_residual() < 1e-12);
    report(
        10,
        ok,
        &format!("slopes {:.6}, {:.6}, {:.6}; V_su3(3) = {:.12}", su2.slope(), su3.slope(), so3.slope(), su3.rows[3].1),
    );
}

#[test]
fn criterion_11_determinism() {
    let (res_a, _) = c8_run();
    let basis = build_su_basis(2).unwrap();
    let sc = structure_constants(&basis).unwrap();
    let rep = standard_rep(&basis);
    let surface = RectSurface::new([0.5, 0.0, 0.0], 0.5).unwrap();
    let (res_b, _) = wilson_mc(&surface, &rep, &sc, &c8_params()).unwrap();
    let fields = |r: &EstimateResult| {
        [
            fmt_g17(r.kappa),
            fmt_g17(r.trace_estimate.0),
            fmt_g17(r.std_error),
            fmt_g17(r.paper_closed_form),
            fmt_g17(r.oracle_value.unwrap()),
            fmt_g17(r.area),
            fmt_g17(r.mean_density),
            fmt_g17(r.v),
        ]
        .join(",")
    };
    let a = fields(res_a);
    let b = fields(&res_b);
    report(11, a == b, &format!("csv fields identical: {}", a == b));
}
