//! Brute-force references: direct FEM solves on long truncated domains (ε > 0) and closed-form
//! homogeneous solutions.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::cell_solver::{cell_coefficient, SegmentMesh, Side};
use crate::error::{Error, Result};
use crate::fem::{assemble, load, Mesh1D, Tridiag};
use crate::medium::{MediumSpec, SourceSpec};

/// Smallest ε accepted by the truncated-domain oracles.
pub const MIN_EPSILON: f64 = 0.05;

/// Slowest decay rate Im√((ω² + iε)ρ/μ) over the sampled coefficient range.
pub fn decay_rate(medium: &MediumSpec, omega: f64, epsilon: f64) -> f64 {
    let (_, mu_hi) = medium.mu_p.sampled_bounds(64);
    let (rho_lo, _) = medium.rho_p.sampled_bounds(64);
    C64::new(omega * omega, epsilon).sqrt().im * (rho_lo / mu_hi).sqrt()
}

/// Number of periodicity cells needed for the round-trip reflection bound e^{−2κL} < tol.
pub fn truncation_cells(medium: &MediumSpec, omega: f64, epsilon: f64, tol: f64) -> Result<usize> {
    if epsilon < MIN_EPSILON {
        return Err(Error::OracleRefused(format!("ε = {epsilon} below the oracle guard {MIN_EPSILON}")));
    }
    let kappa = decay_rate(medium, omega, epsilon);
    let l = medium.cut.cell_length();
    let len = (1.0 / tol).ln() / (2.0 * kappa);
    if len > 1e4 * l {
        return Err(Error::OracleRefused(format!("truncated length {len:.1} exceeds 10^4 cells")));
    }
    Ok((len / l).ceil() as usize + 1)
}

/// Traces of the truncated half-line solution.
#[derive(Clone, Debug, Serialize)]
pub struct HalflineOracle {
    /// R₋u(0): the RtR coefficient at this fiber.
    pub rtr: (f64, f64),
    /// R₊u(L) at the end of the first cell: the propagation-symbol value.
    pub p_symbol: (f64, f64),
    pub cells: usize,
    pub truncation_bound: f64,
}

/// Direct FEM solve of the half-line problem on fiber `s` with R₊u(0) = 1 and u = 0 far away.
///
/// The mesh repeats the `m`-node cell mesh, so the oracle solves the same discrete problem as
/// the cell-based pipeline.
#[allow(clippy::too_many_arguments)]
pub fn truncated_halfline(
    medium: &MediumSpec,
    side: Side,
    s: f64,
    omega: f64,
    epsilon: f64,
    z: f64,
    tol: f64,
    m: usize,
) -> Result<HalflineOracle> {
    let cells = truncation_cells(medium, omega, epsilon, tol)?;
    let l = medium.cut.cell_length();
    let cell = SegmentMesh::new(m, l);
    let mut nodes = Vec::with_capacity(cells * (m - 1) + 1);
    for n in 0..cells {
        let start = if n == 0 { 0 } else { 1 };
        nodes.extend(cell.mesh.nodes[start..].iter().map(|t| t + n as f64 * l));
    }
    let mesh = Mesh1D { nodes };
    let (k, mm) = assemble(
        &mesh,
        |t| cell_coefficient(&medium.mu_p, medium, side, s, t),
        |t| cell_coefficient(&medium.rho_p, medium, side, s, t),
    );
    let vol = Tridiag::helmholtz(&k, &mm, C64::new(omega * omega, epsilon));
    let mut a = vol.clone();
    let n = a.len();
    let iz = C64::new(0.0, z);
    a.diag[0] -= iz;
    // Dirichlet at the far end
    a.diag[n - 1] = C64::new(1.0, 0.0);
    a.lower[n - 2] = C64::new(0.0, 0.0);
    let mut b = vec![C64::new(0.0, 0.0); n];
    b[0] = C64::new(1.0, 0.0);
    let u = a.solve(&b)?;
    let f0 = vol.row_mul(0, &u);
    let rtr = -f0 - iz * u[0];
    // outward flux of the first cell at its far end, from the first cell's weak residual
    let (k1, m1) = assemble(
        &cell.mesh,
        |t| cell_coefficient(&medium.mu_p, medium, side, s, t),
        |t| cell_coefficient(&medium.rho_p, medium, side, s, t),
    );
    let first = Tridiag::helmholtz(&k1, &m1, C64::new(omega * omega, epsilon));
    let f_far = first.row_mul(m - 1, &u[..m]);
    let p_symbol = -f_far - iz * u[m - 1];
    let bound = (-2.0 * decay_rate(medium, omega, epsilon) * (cells as f64 - 1.0) * l).exp();
    Ok(HalflineOracle { rtr: (rtr.re, rtr.im), p_symbol: (p_symbol.re, p_symbol.im), cells, truncation_bound: bound })
}

/// Direct solve of the whole-line problem on a symmetric truncated domain.
#[derive(Clone, Debug)]
pub struct WholelineOracle {
    pub mesh: Mesh1D,
    pub u: Vec<C64>,
    pub truncation_bound: f64,
}

/// Whole-line FEM solve with Dirichlet ends; the interior part of the mesh is `interior` and the
/// exterior is tiled with `m`-node cells.
pub fn truncated_wholeline(
    medium: &MediumSpec,
    omega: f64,
    epsilon: f64,
    source: &SourceSpec,
    tol: f64,
    interior: &Mesh1D,
    m: usize,
) -> Result<WholelineOracle> {
    let cells = truncation_cells(medium, omega, epsilon, tol)?;
    let l = medium.cut.cell_length();
    let cell = SegmentMesh::new(m, l);
    let mut nodes = Vec::new();
    for n in (0..cells).rev() {
        // cell n occupies [a_left − (n+1)L, a_left − nL]; its right end is added by the next cell
        nodes.extend(cell.mesh.nodes.iter().rev().take(m - 1).map(|t| medium.a_left - t - n as f64 * l));
    }
    nodes.extend(interior.nodes.iter().copied());
    for n in 0..cells {
        nodes.extend(cell.mesh.nodes.iter().skip(1).map(|t| medium.a_right + t + n as f64 * l));
    }
    let mesh = Mesh1D { nodes };
    let (k, mm) = assemble(&mesh, |x| medium.effective_coefficient(x).0, |x| medium.effective_coefficient(x).1);
    let mut a = Tridiag::helmholtz(&k, &mm, C64::new(omega * omega, epsilon));
    let n = a.len();
    let mut b: Vec<C64> = load(&mesh, |x| source.eval(x)).into_iter().map(|v| C64::new(v, 0.0)).collect();
    a.diag[0] = C64::new(1.0, 0.0);
    a.upper[0] = C64::new(0.0, 0.0);
    a.diag[n - 1] = C64::new(1.0, 0.0);
    a.lower[n - 2] = C64::new(0.0, 0.0);
    b[0] = C64::new(0.0, 0.0);
    b[n - 1] = C64::new(0.0, 0.0);
    let u = a.solve(&b)?;
    let bound = (-2.0 * decay_rate(medium, omega, epsilon) * cells as f64 * l).exp();
    Ok(WholelineOracle { mesh, u, truncation_bound: bound })
}

/// Free-space solution of −u″ − ω²u = f for constant unit coefficients:
/// u(x) = (i/2ω) ∫ f(y) e^{iω|x−y|} dy, by composite Gauss quadrature on the source support.
pub fn green_convolution(source: &SourceSpec, omega: f64, x: f64, panels: usize) -> C64 {
    let (lo, hi) = source.support();
    let h = (hi - lo) / panels as f64;
    let mut acc = C64::new(0.0, 0.0);
    for p in 0..panels {
        let x0 = lo + p as f64 * h;
        for (t, w) in crate::fem::GAUSS5 {
            let y = x0 + t * h;
            acc += C64::from_polar(1.0, omega * (x - y).abs()) * (w * h * source.eval(y));
        }
    }
    acc * C64::new(0.0, 0.5 / omega)
}
