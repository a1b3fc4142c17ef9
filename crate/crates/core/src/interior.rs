//! Interior problem with RtR transparent conditions, full-line assembly and ε-sweeps.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cell_solver::{rtr_symbols, RtRSymbols, SegmentMesh, Side};
use crate::error::{Error, Result};
use crate::fem::{assemble, l2_h1_sq, load, Mesh1D, Tridiag};
use crate::halfline::{dtn_from_rtr, reconstruct_halfline, rtr_coefficient, HalflineField};
use crate::medium::{MediumSpec, SourceSpec};
use crate::riccati::{
    classify_frequency, extract_fundamental, solve_pencil, FrequencyClass, FrequencyKind, FundamentalPair,
    PencilSpectrum, Regime,
};
use crate::shift_ops::{local_ops, pencil_from_ops, symbol_tail, LocalOps};

/// Numerical parameters of the transparent-boundary pipeline.
#[derive(Clone, Debug, Serialize)]
pub struct PipelineConfig {
    /// Number of Fourier modes K (the mode window holds K − 1 modes).
    pub k_modes: usize,
    /// Upper bound for automatic doubling of K.
    pub k_max: usize,
    /// Double K while the symbol tail exceeds this fraction.
    pub tail_tol: f64,
    /// Nodes per periodicity cell.
    pub mesh_nodes: usize,
    /// Interior mesh spacing.
    pub interior_h: f64,
    /// Tolerance for |λ| = 1.
    pub tol_circle: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { k_modes: 64, k_max: 512, tail_tol: 1e-10, mesh_nodes: 400, interior_h: 5e-3, tol_circle: 1e-3 }
    }
}

/// Boundary data of one side.
#[derive(Clone, Debug)]
pub struct SideData {
    pub symbols: RtRSymbols,
    pub fund: FundamentalPair,
    /// RtR coefficient Λ.
    pub rtr: C64,
    /// DtN coefficient iz(Λ − 1)/(Λ + 1).
    pub dtn: C64,
}

/// Everything the transparent conditions need at one (ω, ε).
#[derive(Clone, Debug)]
pub struct Boundaries {
    pub omega: f64,
    pub epsilon: f64,
    pub z: f64,
    pub k_modes: usize,
    pub right_ops: LocalOps,
    pub spectrum: PencilSpectrum,
    pub class: Option<FrequencyClass>,
    pub left: SideData,
    pub right: SideData,
    pub cell_mesh: SegmentMesh,
}

/// Right-side operators with K doubled until the symbol tail is below `tail_tol`.
pub fn resolved_right_ops(
    medium: &MediumSpec,
    omega: f64,
    epsilon: f64,
    z: f64,
    cfg: &PipelineConfig,
    mesh: &SegmentMesh,
) -> Result<(RtRSymbols, LocalOps)> {
    let mut k = cfg.k_modes;
    if k < 8 || !k.is_power_of_two() {
        return Err(Error::Validation(format!("k_modes must be a power of two >= 8, got {k}")));
    }
    loop {
        let sym = rtr_symbols(medium, Side::Right, omega, epsilon, z, 2 * k, mesh)?;
        let tail = symbol_tail(&sym, k)?;
        if tail <= cfg.tail_tol || 2 * k > cfg.k_max {
            let ops = local_ops(&sym, k, medium.cut.delta)?;
            return Ok((sym, ops));
        }
        k *= 2;
    }
}

/// Symbols, pencil spectrum, fundamental pairs and RtR/DtN coefficients of both sides.
pub fn compute_boundaries(medium: &MediumSpec, omega: f64, epsilon: f64, cfg: &PipelineConfig) -> Result<Boundaries> {
    let z = medium.impedance.z(omega);
    let mesh = SegmentMesh::new(cfg.mesh_nodes, medium.cut.cell_length());
    let (rsym, rops) = resolved_right_ops(medium, omega, epsilon, z, cfg, &mesh)?;
    let k = rops.window.k;
    let lsym = rtr_symbols(medium, Side::Left, omega, epsilon, z, 2 * k, &mesh)?;
    let delta = medium.cut.delta;
    let pencil = pencil_from_ops(&rops, omega, epsilon)?;
    let spectrum = solve_pencil(&pencil, &rsym, delta, cfg.tol_circle)?;
    let (regime, class) = if epsilon > 0.0 {
        (Regime::Absorbing, None)
    } else {
        let c = classify_frequency(&spectrum, cfg.tol_circle, 1e-6 * max_flux(&spectrum));
        if c.class == FrequencyKind::ZeroFlux {
            return Err(Error::ZeroFlux(format!("ω = {omega} is a zero-flux frequency")));
        }
        (Regime::Limit, Some(c))
    };
    let rf = extract_fundamental(&spectrum, Side::Right, regime, cfg.tol_circle, &rsym, delta)?;
    let lf = extract_fundamental(&spectrum, Side::Left, regime, cfg.tol_circle, &lsym, delta)?;
    let side_data = |fund: FundamentalPair, symbols: RtRSymbols, a: f64| -> Result<SideData> {
        let rtr = rtr_coefficient(&fund, &symbols, medium, a)?;
        Ok(SideData { dtn: dtn_from_rtr(rtr, z)?, rtr, fund, symbols })
    };
    let right = side_data(rf, rsym, medium.a_right)?;
    let left = side_data(lf, lsym, medium.a_left)?;
    let class = class.map(|mut c| {
        c.lambda0_right = Some((right.fund.lambda0.re, right.fund.lambda0.im));
        c.lambda0_left = Some((left.fund.lambda0.re, left.fund.lambda0.im));
        c
    });
    Ok(Boundaries { omega, epsilon, z, k_modes: k, right_ops: rops, spectrum, class, left, right, cell_mesh: mesh })
}

fn max_flux(spec: &PencilSpectrum) -> f64 {
    spec.pairs.iter().fold(0.0f64, |a, p| a.max(p.flux.abs()))
}

/// Interior P1 solution.
#[derive(Clone, Debug)]
pub struct InteriorSolution {
    pub mesh: Mesh1D,
    pub u: Vec<C64>,
    /// R₊u(a^j) handed to the half-lines: (left, right).
    pub robin_left: C64,
    pub robin_right: C64,
    pub omega: f64,
    pub epsilon: f64,
    pub z: f64,
    /// Relative residual of the linear solve.
    pub residual: f64,
}

/// Interior mesh with perturbation breakpoints as nodes.
pub fn interior_mesh(medium: &MediumSpec, h: f64) -> Mesh1D {
    let bps: Vec<f64> =
        medium.breakpoints().into_iter().filter(|x| *x > medium.a_left && *x < medium.a_right).collect();
    Mesh1D::with_breakpoints(medium.a_left, medium.a_right, h, &bps)
}

/// P1 solution of −(μu′)′ − ρ(ω² + iε)u = f on (a_left, a_right) with μ∂_νu = −λ^DtN_j u at a^j.
pub fn solve_interior(
    medium: &MediumSpec,
    omega: f64,
    epsilon: f64,
    lambda_left: C64,
    lambda_right: C64,
    source: &SourceSpec,
    mesh: &Mesh1D,
) -> Result<InteriorSolution> {
    let z = medium.impedance.z(omega);
    let dl = dtn_from_rtr(lambda_left, z)?;
    let dr = dtn_from_rtr(lambda_right, z)?;
    let (k, m) = assemble(mesh, |x| medium.effective_coefficient(x).0, |x| medium.effective_coefficient(x).1);
    let mut a = Tridiag::helmholtz(&k, &m, C64::new(omega * omega, epsilon));
    let n = a.len();
    a.diag[0] += dl;
    a.diag[n - 1] += dr;
    let b: Vec<C64> = load(mesh, |x| source.eval(x)).into_iter().map(|v| C64::new(v, 0.0)).collect();
    let u = a.solve(&b)?;
    let r = a.mul(&u);
    let bn = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let rn = r.iter().zip(&b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
    let an = a.diag.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let un = u.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let residual = if bn == 0.0 { rn } else { rn / (an * un + bn) };
    let iz = C64::new(0.0, z);
    Ok(InteriorSolution {
        robin_left: (dl - iz) * u[0],
        robin_right: (dr - iz) * u[n - 1],
        mesh: mesh.clone(),
        u,
        omega,
        epsilon,
        z,
        residual,
    })
}

/// Physical solution on the whole line.
#[derive(Clone, Debug)]
pub struct FieldSolution {
    pub interior: InteriorSolution,
    pub left: HalflineField,
    pub right: HalflineField,
}

impl FieldSolution {
    /// All samples (x, u) sorted by x; junction nodes appear once.
    pub fn samples(&self) -> Vec<(f64, C64)> {
        let mut out: Vec<(f64, C64)> = Vec::new();
        for n in (0..self.left.n_cells).rev() {
            for (x, u) in self.left.x[n].iter().zip(&self.left.u[n]).rev() {
                out.push((*x, *u));
            }
            out.pop();
        }
        out.extend(self.interior.mesh.nodes.iter().copied().zip(self.interior.u.iter().copied()));
        for n in 0..self.right.n_cells {
            out.extend(self.right.x[n].iter().copied().zip(self.right.u[n].iter().copied()).skip(1));
        }
        out
    }

    /// Linear interpolation of the sampled field at x.
    pub fn eval(&self, x: f64) -> Option<C64> {
        let s = self.samples();
        if x < s[0].0 || x > s[s.len() - 1].0 {
            return None;
        }
        let j = s.partition_point(|p| p.0 <= x).clamp(1, s.len() - 1) - 1;
        let t = (x - s[j].0) / (s[j + 1].0 - s[j].0);
        Some(s[j].1 * (1.0 - t) + s[j + 1].1 * t)
    }

    /// Relative jumps of u at (a_left, a_right) between interior and half-line values.
    pub fn junction_mismatch(&self) -> (f64, f64) {
        let n = self.interior.u.len();
        let rel = |a: C64, b: C64| (a - b).norm() / a.norm().max(b.norm()).max(1e-300);
        (rel(self.interior.u[0], self.left.u[0][0]), rel(self.interior.u[n - 1], self.right.u[0][0]))
    }
}

/// Half-line fields scaled by R₊u^int(a^j).
pub fn assemble_full(
    interior: &InteriorSolution,
    bnd: &Boundaries,
    medium: &MediumSpec,
    n_cells: usize,
) -> Result<FieldSolution> {
    if (interior.omega - bnd.omega).abs() > 0.0 || (interior.epsilon - bnd.epsilon).abs() > 0.0 {
        return Err(Error::Validation("interior and boundary data at different (ω, ε)".into()));
    }
    let rec = |fund: &FundamentalPair, a: f64| {
        reconstruct_halfline(fund, medium, a, n_cells, &bnd.cell_mesh, bnd.omega, bnd.epsilon, bnd.z)
    };
    let left = rec(&bnd.left.fund, medium.a_left)?.scaled(interior.robin_left);
    let right = rec(&bnd.right.fund, medium.a_right)?.scaled(interior.robin_right);
    Ok(FieldSolution { interior: interior.clone(), left, right })
}

/// Boundaries, interior solution and full field at (ω, ε).
pub fn solve_full(
    medium: &MediumSpec,
    omega: f64,
    epsilon: f64,
    source: &SourceSpec,
    cfg: &PipelineConfig,
    n_cells: usize,
) -> Result<(Boundaries, FieldSolution)> {
    source.validate(medium)?;
    let bnd = compute_boundaries(medium, omega, epsilon, cfg)?;
    let mesh = interior_mesh(medium, cfg.interior_h);
    let int = solve_interior(medium, omega, epsilon, bnd.left.rtr, bnd.right.rtr, source, &mesh)?;
    let field = assemble_full(&int, &bnd, medium, n_cells)?;
    Ok((bnd, field))
}

/// Result of an ε-sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub omega: f64,
    pub class: Option<FrequencyKind>,
    /// (ε, relative H¹ error on the interior).
    pub rows: Vec<(f64, f64)>,
    /// Least-squares slope of log error against log ε.
    pub slope: f64,
    pub monotone: bool,
}

/// Relative H¹ distance ‖u − v‖/‖v‖ on a shared mesh.
pub fn relative_h1(mesh: &Mesh1D, u: &[C64], v: &[C64]) -> f64 {
    let d: Vec<C64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    let (dl, dh) = l2_h1_sq(mesh, &d);
    let (vl, vh) = l2_h1_sq(mesh, v);
    ((dl + dh) / (vl + vh)).sqrt()
}

/// Interior solutions at each ε and at ε = 0; relative H¹ errors and log-log slope.
pub fn epsilon_sweep(
    medium: &MediumSpec,
    omega: f64,
    eps_list: &[f64],
    source: &SourceSpec,
    cfg: &PipelineConfig,
) -> Result<SweepResult> {
    if eps_list.len() < 3 {
        return Err(Error::Validation("ε-sweep needs at least 3 values".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) || eps_list.iter().any(|e| *e <= 0.0) {
        return Err(Error::Validation("ε values must be positive and decreasing".into()));
    }
    source.validate(medium)?;
    let mesh = interior_mesh(medium, cfg.interior_h);
    let solve = |eps: f64| -> Result<(Boundaries, InteriorSolution)> {
        let b = compute_boundaries(medium, omega, eps, cfg)?;
        let s = solve_interior(medium, omega, eps, b.left.rtr, b.right.rtr, source, &mesh)?;
        Ok((b, s))
    };
    let (b0, u0) = solve(0.0)?;
    let sols: Vec<(Boundaries, InteriorSolution)> = eps_list.par_iter().map(|e| solve(*e)).collect::<Result<_>>()?;
    let rows: Vec<(f64, f64)> =
        eps_list.iter().zip(&sols).map(|(e, (_, s))| (*e, relative_h1(&mesh, &s.u, &u0.u))).collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.0.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    let monotone = rows.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(SweepResult { omega, class: b0.class.map(|c| c.class), rows, slope, monotone })
}

/// Slope of the least-squares line through (x, y).
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let den: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    num / den
}
