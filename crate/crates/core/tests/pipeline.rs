//! Half-line, interior and oracle checks against closed forms and cross-method agreement.

use num_complex::Complex64 as C64;
use qphelm::analysis::{analyze_limit, classify_sweep, dispersion_curve, wrap_half};
use qphelm::cell_solver::{SegmentMesh, Side};
use qphelm::fem::Mesh1D;
use qphelm::halfline::{
    boundary_flux, build_symbols, decay_rate_fit, dtn_from_rtr, reconstruct_halfguide, reconstruct_halfline,
    riccati_residual,
};
use qphelm::interior::{assemble_full, compute_boundaries, interior_mesh, solve_full, solve_interior, PipelineConfig};
use qphelm::medium::{MediumSpec, SourceKind, SourceSpec};
use qphelm::oracle::{green_convolution, truncated_halfline, truncated_wholeline};
use qphelm::riccati::FrequencyKind;
use qphelm::Error;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn cfg() -> PipelineConfig {
    PipelineConfig::default()
}

fn homogeneous(cells: i64) -> MediumSpec {
    MediumSpec::homogeneous(0.5, 0.75f64.sqrt(), cells).unwrap()
}

fn indicator(width: f64) -> SourceSpec {
    SourceSpec { kind: SourceKind::Indicator, center: 0.0, width, amplitude: 1.0, sharpness: 100.0 }
}

/// Closed-form ∫_{−w}^{w} (i/2ω) e^{iω|x−y|} dy.
fn indicator_green(omega: f64, w: f64, x: f64) -> C64 {
    let i = C64::new(0.0, 1.0);
    if x.abs() >= w {
        i * C64::from_polar(1.0, omega * x.abs()) * (omega * w).sin() / (omega * omega)
    } else {
        (C64::from_polar(1.0, omega * (x + w)) + C64::from_polar(1.0, omega * (w - x)) - 2.0) / (2.0 * omega * omega)
    }
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn dtn_map_examples() {
    let z = 3.0;
    assert!((dtn_from_rtr(C64::new(0.0, 0.0), z).unwrap() - C64::new(0.0, -z)).norm() < 1e-15);
    assert!(dtn_from_rtr(C64::new(1.0, 0.0), z).unwrap().norm() < 1e-15);
    assert!(matches!(dtn_from_rtr(C64::new(-1.0, 0.0), z), Err(Error::SingularImpedance(_))));
}

#[test]
fn homogeneous_halfline_is_a_plane_wave() {
    let med = homogeneous(2);
    let k = 2.0;
    let b = compute_boundaries(&med, k, 0.0, &cfg()).unwrap();
    for (side, a, sd) in [(Side::Right, med.a_right, &b.right), (Side::Left, med.a_left, &b.left)] {
        let f = reconstruct_halfline(&sd.fund, &med, a, 3, &b.cell_mesh, k, 0.0, b.z).unwrap();
        assert_eq!(f.side, side);
        let mut worst = 0.0f64;
        for (xs, us) in f.x.iter().zip(&f.u) {
            for (x, u) in xs.iter().zip(us) {
                let exact = C64::new(0.0, 0.5 / k) * C64::from_polar(1.0, k * (x - a).abs());
                worst = worst.max((u - exact).norm() / exact.norm());
            }
        }
        assert!(worst < 1e-5, "{side:?}: {worst:e}");
        let sym = build_symbols(&sd.fund, med.cut.delta, 64).unwrap();
        let plane = C64::from_polar(1.0, k * med.cut.cell_length());
        for j in 0..16 {
            let s = j as f64 / 16.0;
            assert!((sym.p.eval(s) - plane).norm() < 1e-5);
            assert!(sym.s_sym.eval(s).norm() < 1e-5);
        }
    }
}

#[test]
fn propagation_symbol_geometric_mean_is_lambda0() {
    let med = MediumSpec::paper();
    let a = analyze_limit(&med, 4.0, &cfg()).unwrap();
    let f = a.fund.unwrap();
    let sym = build_symbols(&f, med.cut.delta, 256).unwrap();
    let n = 1024;
    let mean_log = (0..n).map(|j| sym.p.eval(j as f64 / n as f64).norm().ln()).sum::<f64>() / n as f64;
    assert!((mean_log.exp() - f.lambda0.norm()).abs() < 1e-8);
    // eigen-relation p(s)φ₀(s) = λ₀φ₀(s+δ)
    for j in 0..32 {
        let s = j as f64 / 32.0;
        let lhs = sym.p.eval(s) * f.phi0.eval(s);
        let rhs = f.lambda0 * f.phi0.eval(s + med.cut.delta);
        assert!((lhs - rhs).norm() < 1e-8 * rhs.norm().max(1.0));
    }
}

#[test]
fn riccati_residuals_are_small() {
    let med = MediumSpec::paper();
    for w in [4.0, 5.642] {
        let b = compute_boundaries(&med, w, 0.0, &cfg()).unwrap();
        let sym = build_symbols(&b.right.fund, med.cut.delta, 2 * b.k_modes).unwrap();
        let (r1, r2) = riccati_residual(&sym, &b.right_ops).unwrap();
        assert!(r1 < 1e-6 && r2 < 1e-6, "ω = {w}: {r1:e} {r2:e}");
    }
}

#[test]
fn evanescent_halfline_cells_join_and_decay() {
    let med = MediumSpec::paper();
    let b = compute_boundaries(&med, 4.0, 0.0, &cfg()).unwrap();
    let f = reconstruct_halfline(&b.right.fund, &med, med.a_right, 12, &b.cell_mesh, 4.0, 0.0, b.z).unwrap();
    assert!(f.junction_mismatch() < 1e-6, "{:e}", f.junction_mismatch());
    let fit = decay_rate_fit(&f).unwrap();
    assert!(fit.monotone);
    let r = b.right.fund.lambda0.norm();
    for n in 1..f.n_cells {
        // per-cell H¹ norms follow |λ₀|ⁿ up to the bounded fibre-to-fibre variation
        let ratio = f.cell_h1[n] / (f.cell_h1[0] * r.powi(n as i32));
        assert!(ratio > 0.2 && ratio < 5.0, "cell {n}: {ratio}");
    }
}

#[test]
fn homogeneous_decay_fit_with_absorption() {
    let med = homogeneous(2);
    let (w, eps) = (2.0, 0.2);
    let b = compute_boundaries(&med, w, eps, &cfg()).unwrap();
    let f = reconstruct_halfline(&b.right.fund, &med, med.a_right, 10, &b.cell_mesh, w, eps, b.z).unwrap();
    let k = C64::new(w * w, eps).sqrt();
    let exact = (-k.im * med.cut.cell_length()).exp();
    let fit = decay_rate_fit(&f).unwrap();
    assert!((fit.rate - exact).abs() < 1e-5, "{} vs {exact}", fit.rate);
    assert!((b.right.fund.lambda0.norm() - exact).abs() < 1e-5);
}

#[test]
fn propagative_boundary_flux_identity() {
    let med = MediumSpec::paper();
    let w = 5.642;
    let b = compute_boundaries(&med, w, 0.0, &cfg()).unwrap();
    for (a, sd) in [(med.a_right, &b.right), (med.a_left, &b.left)] {
        let f = reconstruct_halfline(&sd.fund, &med, a, 2, &b.cell_mesh, w, 0.0, b.z).unwrap();
        let (lhs, rhs) = boundary_flux(&f, sd.rtr, b.z, &med);
        assert!(rhs > 0.0);
        assert!((lhs - rhs).abs() < 1e-3 * rhs, "{lhs} vs {rhs}");
    }
}

#[test]
fn rtr_converges_as_absorption_vanishes() {
    let med = MediumSpec::paper();
    let w = 5.642;
    let limit = compute_boundaries(&med, w, 0.0, &cfg()).unwrap().right.rtr;
    let d: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|e| (compute_boundaries(&med, w, *e, &cfg()).unwrap().right.rtr - limit).norm())
        .collect();
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
}

#[test]
fn halfguide_of_the_fundamental_is_quasi_floquet() {
    let med = MediumSpec::paper();
    let b = compute_boundaries(&med, 4.0, 0.0, &cfg()).unwrap();
    let f = &b.right.fund;
    let sym = build_symbols(f, med.cut.delta, 2 * b.k_modes).unwrap();
    let (n_cells, n_fibers) = (3, 8);
    let samples = reconstruct_halfguide(&sym, &b.right_ops, &med, &f.phi0, n_cells, n_fibers, &b.cell_mesh, 4.0, 0.0, b.z)
        .unwrap();
    let m = b.cell_mesh.m;
    let scale = samples.iter().fold(0.0f64, |a, p| a.max(p.u.norm()));
    for j in 0..n_fibers {
        for n in 1..n_cells {
            for i in 0..m {
                let base = samples[j * n_cells * m + i].u;
                let here = samples[(j * n_cells + n) * m + i].u;
                let want = f.lambda0.powi(n as i32) * base;
                assert!((here - want).norm() < 1e-8 * scale, "fiber {j}, cell {n}");
            }
        }
    }
}

#[test]
fn full_field_is_continuous_at_the_interfaces() {
    let med = MediumSpec::paper();
    for w in [4.0, 5.642] {
        let (_, field) = solve_full(&med, w, 0.0, &SourceSpec::paper(), &cfg(), 2).unwrap();
        let (l, r) = field.junction_mismatch();
        assert!(l < 1e-6 && r < 1e-6, "ω = {w}: {l:e} {r:e}");
        assert!(field.interior.residual < 1e-12);
        assert!(field.left.junction_mismatch() < 1e-6 && field.right.junction_mismatch() < 1e-6);
    }
}

#[test]
fn zero_source_gives_zero_field() {
    let med = MediumSpec::paper();
    let (_, field) = solve_full(&med, 4.0, 0.0, &SourceSpec::zero(), &cfg(), 2).unwrap();
    assert!(field.samples().iter().all(|(_, u)| u.norm() == 0.0));
    let o = truncated_wholeline(&med, 4.0, 0.1, &SourceSpec::zero(), 1e-6, &interior_mesh(&med, 5e-3), 100).unwrap();
    assert!(o.u.iter().all(|u| u.norm() == 0.0));
}

#[test]
fn interior_solve_matches_indicator_green_function() {
    let med = homogeneous(2);
    let (w, half) = (3.0, 0.5);
    // source jumps as mesh nodes
    let mesh = Mesh1D::with_breakpoints(med.a_left, med.a_right, 1e-3, &[-half, half]);
    let zero = C64::new(0.0, 0.0);
    let sol = solve_interior(&med, w, 0.0, zero, zero, &indicator(half), &mesh).unwrap();
    let (mut num, mut den) = (0.0, 0.0);
    for (x, u) in mesh.nodes.iter().zip(&sol.u) {
        let g = indicator_green(w, half, *x);
        num += (u - g).norm_sqr();
        den += g.norm_sqr();
    }
    assert!((num / den).sqrt() < 1e-5, "{:e}", (num / den).sqrt());
}

#[test]
fn green_quadrature_matches_closed_form() {
    let (w, half) = (2.5, 0.7);
    for x in [-3.0, -0.7, -0.2, 0.0, 0.4, 1.9] {
        let got = green_convolution(&indicator(half), w, x, 64);
        // quadrature panels do not straddle the kink at y = x, so allow a coarse tolerance there
        let tol = if x.abs() < half { 1e-5 } else { 1e-12 };
        assert!(rel(got, indicator_green(w, half, x)) < tol, "x = {x}");
    }
}

#[test]
fn homogeneous_full_line_matches_green_function() {
    let med = homogeneous(3);
    let w = 3.0;
    let src = indicator(0.5);
    let c = PipelineConfig { interior_h: 1e-3, ..cfg() };
    let (b, field) = solve_full(&med, w, 0.0, &src, &c, 3).unwrap();
    assert!(b.left.rtr.norm() < 1e-5 && b.right.rtr.norm() < 1e-5);
    let mut worst = 0.0f64;
    for j in 0..=200 {
        let x = -5.0 + 0.05 * j as f64;
        worst = worst.max((field.eval(x).unwrap() - indicator_green(w, 0.5, x)).norm());
    }
    assert!(worst < 1e-4 / w, "{worst:e}");
}

#[test]
fn truncated_halfline_homogeneous_reflection() {
    let med = homogeneous(2);
    let (w, eps, z) = (2.0, 0.3, 1.3);
    let o = truncated_halfline(&med, Side::Right, 0.0, w, eps, z, 1e-10, 400).unwrap();
    let k = C64::new(w * w, eps).sqrt();
    let exact = -(k - z) / (k + z);
    assert!(rel(C64::new(o.rtr.0, o.rtr.1), exact) < 1e-4);
    assert!(o.truncation_bound < 1e-10);
}

#[test]
fn oracle_propagation_symbol_matches_pipeline() {
    let med = MediumSpec::paper();
    let (w, eps) = (4.0, 0.1);
    let b = compute_boundaries(&med, w, eps, &cfg()).unwrap();
    let sym = build_symbols(&b.right.fund, med.cut.delta, 2 * b.k_modes).unwrap();
    let o = truncated_halfline(&med, Side::Right, 0.0, w, eps, b.z, 1e-8, cfg().mesh_nodes).unwrap();
    assert!(rel(sym.p.eval(0.0), C64::new(o.p_symbol.0, o.p_symbol.1)) < 1e-3);
}

#[test]
fn oracles_refuse_small_absorption() {
    let med = MediumSpec::paper();
    assert!(matches!(truncated_halfline(&med, Side::Right, 0.0, 4.0, 0.01, 4.0, 1e-8, 100), Err(Error::OracleRefused(_))));
    let mesh = interior_mesh(&med, 5e-3);
    assert!(matches!(
        truncated_wholeline(&med, 4.0, 0.0, &SourceSpec::paper(), 1e-8, &mesh, 100),
        Err(Error::OracleRefused(_))
    ));
}

#[test]
fn assemble_full_rejects_mismatched_frequencies() {
    let med = MediumSpec::paper();
    let b = compute_boundaries(&med, 4.0, 0.0, &cfg()).unwrap();
    let mesh = interior_mesh(&med, 5e-3);
    let int = solve_interior(&med, 4.5, 0.0, b.left.rtr, b.right.rtr, &SourceSpec::paper(), &mesh).unwrap();
    assert!(matches!(assemble_full(&int, &b, &med, 2), Err(Error::Validation(_))));
}

#[test]
fn homogeneous_dispersion_is_linear() {
    let med = homogeneous(2);
    let c = PipelineConfig { k_modes: 16, ..cfg() };
    let pts = dispersion_curve(&med, 1.0, 3.0, 5, &c).unwrap();
    assert_eq!(pts.len(), 5);
    for p in &pts {
        let want = wrap_half(p.omega / (TWO_PI * med.cut.theta2));
        assert!((p.k0 - want).abs() < 1e-5, "ω = {}: {} vs {want}", p.omega, p.k0);
        assert_eq!(p.class, FrequencyKind::Propagative);
    }
    let (entries, runs) = classify_sweep(&med, &[1.0, 2.0, 3.0], &c);
    assert!(entries.iter().all(|e| e.class == Some(FrequencyKind::Propagative)));
    assert_eq!(runs.len(), 1);
}

#[test]
fn paper_dispersion_is_continuous() {
    let med = MediumSpec::paper();
    let pts = dispersion_curve(&med, 5.5, 5.8, 7, &cfg()).unwrap();
    for w in pts.windows(2) {
        let (a, b) = (C64::new(w[0].lambda0.0, w[0].lambda0.1), C64::new(w[1].lambda0.0, w[1].lambda0.1));
        assert!((a - b).norm() < 0.2, "jump at ω = {}", w[1].omega);
        assert!(!w[1].branch_break);
    }
}

#[test]
fn segment_mesh_has_requested_nodes() {
    let m = SegmentMesh::new(17, 2.0);
    assert_eq!(m.mesh.len(), 17);
    assert!((m.h() - 0.125).abs() < 1e-15);
}
