//! Frequency sweeps, dispersion curves, the group-velocity identity and the Dirichlet
//! fiber-eigenvalue bands.

use faer::Mat;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cell_solver::{cell_coefficient, CellOperator, SegmentMesh, Side};
use crate::error::{Error, Result};
use crate::fem::{assemble, weighted_l2_sq};
use crate::interior::{resolved_right_ops, PipelineConfig};
use crate::medium::MediumSpec;
use crate::riccati::{
    classify_frequency, extract_fundamental, solve_pencil, FrequencyClass, FrequencyKind, FundamentalPair,
    PencilSpectrum, Regime,
};
use crate::shift_ops::pencil_from_ops;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Limit-regime (ε = 0) spectrum of the right pencil, its classification and, unless the
/// frequency has zero flux, the right fundamental pair.
#[derive(Clone, Debug)]
pub struct LimitAnalysis {
    pub spectrum: PencilSpectrum,
    pub class: FrequencyClass,
    pub fund: Option<FundamentalPair>,
}

/// Classification and right fundamental pair at ε = 0.
pub fn analyze_limit(medium: &MediumSpec, omega: f64, cfg: &PipelineConfig) -> Result<LimitAnalysis> {
    let z = medium.impedance.z(omega);
    let mesh = SegmentMesh::new(cfg.mesh_nodes, medium.cut.cell_length());
    let (sym, ops) = resolved_right_ops(medium, omega, 0.0, z, cfg, &mesh)?;
    let pencil = pencil_from_ops(&ops, omega, 0.0)?;
    let spectrum = solve_pencil(&pencil, &sym, medium.cut.delta, cfg.tol_circle)?;
    let qmax = spectrum.pairs.iter().fold(0.0f64, |a, p| a.max(p.flux.abs()));
    let mut class = classify_frequency(&spectrum, cfg.tol_circle, 1e-6 * qmax);
    let fund = if class.class == FrequencyKind::ZeroFlux {
        None
    } else {
        let f = extract_fundamental(&spectrum, Side::Right, Regime::Limit, cfg.tol_circle, &sym, medium.cut.delta)?;
        class.lambda0_right = Some((f.lambda0.re, f.lambda0.im));
        Some(f)
    };
    Ok(LimitAnalysis { spectrum, class, fund })
}

/// One entry of a classification sweep.
#[derive(Clone, Debug, Serialize)]
pub struct ClassifyEntry {
    pub omega: f64,
    pub class: Option<FrequencyKind>,
    pub lambda0: Option<(f64, f64)>,
    pub error: Option<String>,
}

/// Maximal run of consecutive sweep entries with the same class.
#[derive(Clone, Debug, Serialize)]
pub struct ClassInterval {
    pub class: Option<FrequencyKind>,
    pub omega_lo: f64,
    pub omega_hi: f64,
}

/// Classifies every frequency of the grid; failures are recorded and the sweep continues.
pub fn classify_sweep(
    medium: &MediumSpec,
    omegas: &[f64],
    cfg: &PipelineConfig,
) -> (Vec<ClassifyEntry>, Vec<ClassInterval>) {
    let entries: Vec<ClassifyEntry> = omegas
        .par_iter()
        .map(|&omega| match analyze_limit(medium, omega, cfg) {
            Ok(a) => ClassifyEntry { omega, class: Some(a.class.class), lambda0: a.class.lambda0_right, error: None },
            Err(e) => ClassifyEntry { omega, class: None, lambda0: None, error: Some(e.to_string()) },
        })
        .collect();
    let mut runs: Vec<ClassInterval> = Vec::new();
    for e in &entries {
        match runs.last_mut() {
            Some(r) if r.class == e.class => r.omega_hi = e.omega,
            _ => runs.push(ClassInterval { class: e.class, omega_lo: e.omega, omega_hi: e.omega }),
        }
    }
    (entries, runs)
}

/// One point of a dispersion curve.
#[derive(Clone, Debug, Serialize)]
pub struct DispersionPoint {
    pub omega: f64,
    pub lambda0: (f64, f64),
    /// arg λ₀ / 2π in [−1/2, 1/2).
    pub k0: f64,
    /// k0 continued along the sweep.
    pub k0_unwrapped: f64,
    pub q0: f64,
    pub class: FrequencyKind,
    /// Set when continuity with the previous point could not be established.
    pub branch_break: bool,
}

/// Wraps x into [−1/2, 1/2).
pub fn wrap_half(x: f64) -> f64 {
    x - (x + 0.5).floor()
}

/// Right fundamental eigenvalue tracked over an equispaced frequency grid.
///
/// Failed frequencies are skipped and the next point carries a branch-break marker.
pub fn dispersion_curve(
    medium: &MediumSpec,
    omega_min: f64,
    omega_max: f64,
    steps: usize,
    cfg: &PipelineConfig,
) -> Result<Vec<DispersionPoint>> {
    if steps < 2 || !(omega_max > omega_min) || !(omega_min > 0.0) {
        return Err(Error::Validation("dispersion sweep needs 0 < omega_min < omega_max and steps >= 2".into()));
    }
    let omegas: Vec<f64> =
        (0..steps).map(|i| omega_min + (omega_max - omega_min) * i as f64 / (steps - 1) as f64).collect();
    let results: Vec<Option<(FrequencyKind, FundamentalPair)>> = omegas
        .par_iter()
        .map(|&w| analyze_limit(medium, w, cfg).ok().and_then(|a| a.fund.map(|f| (a.class.class, f))))
        .collect();
    let mut out: Vec<DispersionPoint> = Vec::new();
    let mut pending_break = false;
    for (w, r) in omegas.iter().zip(results) {
        let Some((class, f)) = r else {
            pending_break = true;
            continue;
        };
        let k0 = wrap_half(f.lambda0.arg() / TWO_PI);
        let (k0_unwrapped, jump) = match out.last() {
            Some(prev) => {
                let d = wrap_half(k0 - prev.k0);
                (prev.k0_unwrapped + d, d.abs() > 0.25)
            }
            None => (k0, false),
        };
        out.push(DispersionPoint {
            omega: *w,
            lambda0: (f.lambda0.re, f.lambda0.im),
            k0,
            k0_unwrapped,
            q0: f.q0,
            class,
            branch_break: pending_break || jump,
        });
        pending_break = false;
    }
    Ok(out)
}

/// Sides of the group-velocity identity.
#[derive(Clone, Debug, Serialize)]
pub struct GroupVelocityReport {
    pub omega: f64,
    pub d_omega: f64,
    /// Central-difference derivative of k₀ = arg λ₀ / 2π.
    pub k0_prime: f64,
    pub q0: f64,
    /// ∫ρ_p|U₀|² over one periodicity cell.
    pub energy: f64,
    /// 2πθ₂ k₀′ Q₀ / (4z).
    pub lhs: f64,
    /// ω ∫ρ_p|U₀|².
    pub rhs: f64,
    pub rel_error: f64,
    /// k₀′Q₀ / (ω∫ρ_p|U₀|²) without the normalization constant.
    pub literal_ratio: f64,
}

/// ∫ over one periodicity cell of ρ_p|U₀|², with U₀ = E⁰(φ₀) + E¹(ψ₀) evaluated fiber by fiber:
/// θ₂ ∫₀¹∫₀ᴸ ρ_s(t)|φ₀(s)e⁰_s(t) + ψ₀(s+δ)e¹_s(t)|² dt ds.
pub fn mode_energy(medium: &MediumSpec, fund: &FundamentalPair, mesh: &SegmentMesh, n_fibers: usize) -> Result<f64> {
    let d = medium.cut.delta;
    let (omega, eps) = (fund.omega, fund.epsilon);
    let z = medium.impedance.z(omega);
    let vals: Vec<f64> = (0..n_fibers)
        .into_par_iter()
        .map(|j| -> Result<f64> {
            let s = j as f64 / n_fibers as f64;
            let op = CellOperator::new(medium, Side::Right, s, omega, eps, z, mesh)?;
            let (e0, e1) = op.pair();
            let (a0, a1) = (fund.phi0.eval(s), fund.psi0.eval(s + d));
            let u: Vec<C64> = e0.values.iter().zip(&e1.values).map(|(p, q)| a0 * p + a1 * q).collect();
            Ok(weighted_l2_sq(&mesh.mesh, &u, |t| cell_coefficient(&medium.rho_p, medium, Side::Right, s, t)))
        })
        .collect::<Result<_>>()?;
    Ok(medium.cut.theta2 * vals.iter().sum::<f64>() / n_fibers as f64)
}

/// Checks 2πθ₂ k₀′(ω) Q₀ / (4z) = ω ∫ρ_p|U₀|² with central differences for k₀′.
pub fn group_velocity_check(
    medium: &MediumSpec,
    omega: f64,
    d_omega: f64,
    cfg: &PipelineConfig,
) -> Result<GroupVelocityReport> {
    let fund_at = |w: f64| -> Result<FundamentalPair> {
        let a = analyze_limit(medium, w, cfg)?;
        if a.class.class != FrequencyKind::Propagative {
            return Err(Error::Validation(format!("ω = {w} is {}, not propagative", a.class.class.name())));
        }
        a.fund.ok_or_else(|| Error::Extraction(format!("no fundamental pair at ω = {w}")))
    };
    let f0 = fund_at(omega)?;
    let fp = fund_at(omega + d_omega)?;
    let fm = fund_at(omega - d_omega)?;
    let dk = wrap_half((fp.lambda0 / fm.lambda0).arg() / TWO_PI);
    let k0_prime = dk / (2.0 * d_omega);
    let mesh = SegmentMesh::new(cfg.mesh_nodes, medium.cut.cell_length());
    let energy = mode_energy(medium, &f0, &mesh, 2 * cfg.k_modes.max(64))?;
    let z = medium.impedance.z(omega);
    let lhs = TWO_PI * medium.cut.theta2 * k0_prime * f0.q0 / (4.0 * z);
    let rhs = omega * energy;
    Ok(GroupVelocityReport {
        omega,
        d_omega,
        k0_prime,
        q0: f0.q0,
        energy,
        lhs,
        rhs,
        rel_error: (lhs - rhs).abs() / rhs.abs(),
        literal_ratio: k0_prime * f0.q0 / rhs,
    })
}

/// Band n: s ↦ λ_n(s) with its range [a_n, b_n].
#[derive(Clone, Debug, Serialize)]
pub struct BandCurve {
    pub n: usize,
    pub samples: Vec<(f64, f64)>,
    pub a: f64,
    pub b: f64,
}

/// Bands and the threshold ω_* above which the fiber bands cover the axis.
#[derive(Clone, Debug, Serialize)]
pub struct BandsResult {
    pub curves: Vec<BandCurve>,
    /// Smallest N with b_n ≥ a_{n+1} for every N ≤ n < n_max.
    pub overlap_from: Option<usize>,
    /// √a_N, valid up to n_max only.
    pub omega_star: Option<f64>,
    /// Indices n with b_n ≥ a_{n+1}.
    pub overlapping: Vec<usize>,
}

/// First `n_max` Dirichlet eigenvalues of −(μu′)′ = λρu on one fiber segment, by P1 FEM.
///
/// ρ may change sign, so the pencil is solved as Bu = νAu with A the SPD stiffness matrix:
/// A = LLᵀ, C = L⁻¹BL⁻ᵀ symmetric, λ = 1/ν over the positive ν.
pub fn dirichlet_eigenvalues(medium: &MediumSpec, s: f64, n_max: usize, mesh: &SegmentMesh) -> Result<Vec<f64>> {
    let (k, m) = assemble(
        &mesh.mesh,
        |t| cell_coefficient(&medium.mu_p, medium, Side::Right, s, t),
        |t| cell_coefficient(&medium.rho_p, medium, Side::Right, s, t),
    );
    let n = mesh.m - 2;
    if n_max == 0 || n_max > n / 4 {
        return Err(Error::Validation(format!("n_max must be in 1..={} for this mesh", n / 4)));
    }
    // Cholesky of the interior stiffness block (tridiagonal): L with diagonal l and subdiagonal c
    let mut l = vec![0.0; n];
    let mut c = vec![0.0; n];
    for i in 0..n {
        let d = k.diag[i + 1] - if i > 0 { c[i] * c[i] } else { 0.0 };
        if d <= 0.0 {
            return Err(Error::Solver("Dirichlet stiffness is not positive definite".into()));
        }
        l[i] = d.sqrt();
        if i + 1 < n {
            c[i + 1] = k.off[i + 1] / l[i];
        }
    }
    let forward = |x: &mut Mat<f64>| {
        for j in 0..x.ncols() {
            for i in 0..n {
                let prev = if i > 0 { c[i] * x[(i - 1, j)] } else { 0.0 };
                x[(i, j)] = (x[(i, j)] - prev) / l[i];
            }
        }
    };
    let mut x = Mat::from_fn(n, n, |i, j| {
        if i == j {
            m.diag[i + 1]
        } else if i + 1 == j {
            m.off[i + 1]
        } else if j + 1 == i {
            m.off[j + 1]
        } else {
            0.0
        }
    });
    forward(&mut x);
    let mut y = x.transpose().to_owned();
    forward(&mut y);
    let sym = Mat::from_fn(n, n, |i, j| 0.5 * (y[(i, j)] + y[(j, i)]));
    let nu = sym
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Solver(format!("symmetric eigensolver failed: {e:?}")))?;
    let mut lam: Vec<f64> = nu.into_iter().filter(|v| *v > 0.0).map(|v| 1.0 / v).collect();
    lam.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lam.truncate(n_max);
    if lam.len() < n_max {
        return Err(Error::Solver(format!("only {} positive Dirichlet eigenvalues found", lam.len())));
    }
    Ok(lam)
}

/// Bands λ_n(s), n ≤ n_max, on `n_s` equispaced offsets and the ω_* estimate.
pub fn dirichlet_bands(medium: &MediumSpec, n_s: usize, n_max: usize, mesh_nodes: usize) -> Result<BandsResult> {
    if n_s < 2 {
        return Err(Error::Validation("band computation needs at least 2 offsets".into()));
    }
    let mesh = SegmentMesh::new(mesh_nodes, medium.cut.cell_length());
    let rows: Vec<Vec<f64>> = (0..n_s)
        .into_par_iter()
        .map(|j| dirichlet_eigenvalues(medium, j as f64 / n_s as f64, n_max, &mesh))
        .collect::<Result<_>>()?;
    let curves: Vec<BandCurve> = (0..n_max)
        .map(|i| {
            let samples: Vec<(f64, f64)> = rows.iter().enumerate().map(|(j, r)| (j as f64 / n_s as f64, r[i])).collect();
            let a = samples.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
            let b = samples.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
            BandCurve { n: i + 1, samples, a, b }
        })
        .collect();
    let overlapping: Vec<usize> = (0..n_max - 1).filter(|&i| curves[i].b >= curves[i + 1].a).map(|i| i + 1).collect();
    // smallest N such that every n in N..n_max overlaps its successor
    let mut overlap_from = None;
    for n in (1..n_max).rev() {
        if overlapping.contains(&n) {
            overlap_from = Some(n);
        } else {
            break;
        }
    }
    let omega_star = overlap_from.map(|n| curves[n - 1].a.sqrt());
    Ok(BandsResult { curves, overlap_from, omega_star, overlapping })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::TrigPoly2D;

    #[test]
    fn wrap_half_range() {
        assert!((wrap_half(0.7) + 0.3).abs() < 1e-15);
        assert!((wrap_half(-0.5) + 0.5).abs() < 1e-15);
        assert!((wrap_half(0.5) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_dirichlet_eigenvalues() {
        let mut med = MediumSpec::homogeneous(0.5, 0.75f64.sqrt(), 1).unwrap();
        med.rho_p = TrigPoly2D::constant(1.5);
        let th2 = med.cut.theta2;
        let mesh = SegmentMesh::new(600, med.cut.cell_length());
        let lam = dirichlet_eigenvalues(&med, 0.2, 10, &mesh).unwrap();
        for (i, l) in lam.iter().enumerate() {
            let n = (i + 1) as f64;
            let exact = (n * std::f64::consts::PI * th2).powi(2) / 1.5;
            assert!((l - exact).abs() / exact < 1e-3, "n = {n}: {l} vs {exact}");
        }
    }
}
