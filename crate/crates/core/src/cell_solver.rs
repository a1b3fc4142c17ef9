//! Robin two-point problems on one periodicity segment and the local RtR symbols.
//!
//! A segment of length L = 1/θ₂ is described in a local coordinate t ∈ [0, L] measured
//! from its near end (the interface the half-line starts from). The right cell occupies
//! x = t, the left cell x = −t. With the outward flux F at an end, the two Robin traces are
//! F − izu (the trace that is imposed) and −F − izu (the trace that is read off).

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{assemble, Mesh1D, TriLu, Tridiag};
use crate::medium::{MediumSpec, TrigPoly2D};

/// Half-line side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// Direction of the cell from its near end: +1 right, −1 left.
    pub fn dir(self) -> f64 {
        match self {
            Side::Right => 1.0,
            Side::Left => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Right => "right",
            Side::Left => "left",
        }
    }
}

/// Which end carries the unit Robin datum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    /// Unit outgoing datum at the near end.
    E0,
    /// Unit datum at the far end.
    E1,
}

/// Uniform mesh of one segment in the local coordinate t ∈ [0, L].
#[derive(Clone, Debug)]
pub struct SegmentMesh {
    pub m: usize,
    pub length: f64,
    pub mesh: Mesh1D,
}

impl SegmentMesh {
    pub fn new(m: usize, length: f64) -> Self {
        Self { m, length, mesh: Mesh1D::uniform(0.0, length, m) }
    }

    /// Spacing h.
    pub fn h(&self) -> f64 {
        self.length / (self.m - 1) as f64
    }
}

/// Solution of one cell problem.
#[derive(Clone, Debug)]
pub struct CellSolution {
    pub side: Side,
    pub kind: CellKind,
    pub s: f64,
    pub omega: f64,
    pub epsilon: f64,
    pub z: f64,
    /// Nodal values indexed by the local coordinate t.
    pub values: Vec<C64>,
    /// R₊ at the near end.
    pub robin_out_0: C64,
    /// R₋ at the near end.
    pub robin_in_0: C64,
    /// R₊ at the far end.
    pub robin_out_l: C64,
    /// R₋ at the far end.
    pub robin_in_l: C64,
}

/// Coefficient profile of the cell with offset `s` at local coordinate t.
pub fn cell_coefficient(coef: &TrigPoly2D, medium: &MediumSpec, side: Side, s: f64, t: f64) -> f64 {
    let d = side.dir();
    coef.eval(s + d * medium.cut.theta1 * t, d * medium.cut.theta2 * t)
}

/// Factorized Robin operator of one cell.
pub struct CellOperator {
    pub side: Side,
    pub s: f64,
    pub omega: f64,
    pub epsilon: f64,
    pub z: f64,
    /// K − (ω² + iε)M without boundary terms.
    pub volume: Tridiag,
    lu: TriLu,
}

impl CellOperator {
    /// Assembles and factorizes the Robin problem for fiber offset `s`.
    pub fn new(
        medium: &MediumSpec,
        side: Side,
        s: f64,
        omega: f64,
        epsilon: f64,
        z: f64,
        mesh: &SegmentMesh,
    ) -> Result<Self> {
        if !(omega > 0.0) || !(epsilon >= 0.0) || !(z > 0.0) {
            return Err(Error::Validation(format!(
                "cell problem needs omega > 0, epsilon >= 0, z > 0 (got {omega}, {epsilon}, {z})"
            )));
        }
        let (k, m) = assemble(
            &mesh.mesh,
            |t| cell_coefficient(&medium.mu_p, medium, side, s, t),
            |t| cell_coefficient(&medium.rho_p, medium, side, s, t),
        );
        let k2 = C64::new(omega * omega, epsilon);
        let volume = Tridiag::helmholtz(&k, &m, k2);
        let mut a = volume.clone();
        let n = a.len();
        let iz = C64::new(0.0, z);
        a.diag[0] -= iz;
        a.diag[n - 1] -= iz;
        let lu = a.factor()?;
        Ok(Self { side, s, omega, epsilon, z, volume, lu })
    }

    /// Solves with imposed traces `g_near` (R₊ at the near end) and `g_far` (R₋ at the far end).
    pub fn solve(&self, g_near: C64, g_far: C64) -> Vec<C64> {
        let n = self.volume.len();
        let mut b = vec![C64::new(0.0, 0.0); n];
        b[0] = g_near;
        b[n - 1] += g_far;
        self.lu.solve(&b)
    }

    /// Outward fluxes (near, far) recovered from the weak residual.
    pub fn outward_fluxes(&self, u: &[C64]) -> (C64, C64) {
        let n = u.len();
        (self.volume.row_mul(0, u), self.volume.row_mul(n - 1, u))
    }

    /// Builds a [`CellSolution`] from nodal values.
    pub fn wrap(&self, kind: CellKind, values: Vec<C64>) -> CellSolution {
        let (f0, fl) = self.outward_fluxes(&values);
        let iz = C64::new(0.0, self.z);
        let n = values.len();
        let (u0, ul) = (values[0], values[n - 1]);
        CellSolution {
            side: self.side,
            kind,
            s: self.s,
            omega: self.omega,
            epsilon: self.epsilon,
            z: self.z,
            robin_out_0: f0 - iz * u0,
            robin_in_0: -f0 - iz * u0,
            robin_in_l: fl - iz * ul,
            robin_out_l: -fl - iz * ul,
            values,
        }
    }

    /// Both cell solutions (e⁰, e¹).
    pub fn pair(&self) -> (CellSolution, CellSolution) {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        (self.wrap(CellKind::E0, self.solve(one, zero)), self.wrap(CellKind::E1, self.solve(zero, one)))
    }
}

/// Solves one cell problem.
#[allow(clippy::too_many_arguments)]
pub fn solve_cell(
    medium: &MediumSpec,
    side: Side,
    kind: CellKind,
    s: f64,
    omega: f64,
    epsilon: f64,
    z: f64,
    mesh: &SegmentMesh,
) -> Result<CellSolution> {
    let op = CellOperator::new(medium, side, s, omega, epsilon, z, mesh)?;
    let (g0, gl) = match kind {
        CellKind::E0 => (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        CellKind::E1 => (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
    };
    Ok(op.wrap(kind, op.solve(g0, gl)))
}

/// The four local RtR symbols sampled on an equispaced grid of [0, 1).
#[derive(Clone, Debug)]
pub struct RtRSymbols {
    pub side: Side,
    pub omega: f64,
    pub epsilon: f64,
    pub z: f64,
    pub s_grid: Vec<f64>,
    pub t00: Vec<C64>,
    pub t01: Vec<C64>,
    pub t10: Vec<C64>,
    pub t11: Vec<C64>,
}

/// Symbol values (t00, t01, t10, t11) at a single offset.
pub fn symbols_at(
    medium: &MediumSpec,
    side: Side,
    s: f64,
    omega: f64,
    epsilon: f64,
    z: f64,
    mesh: &SegmentMesh,
) -> Result<[C64; 4]> {
    let op = CellOperator::new(medium, side, s, omega, epsilon, z, mesh)?;
    let (e0, e1) = op.pair();
    Ok([e0.robin_in_0, e0.robin_out_l, e1.robin_in_0, e1.robin_out_l])
}

/// Solves both cell problems at `n` equispaced offsets and evaluates the four symbols.
pub fn rtr_symbols(
    medium: &MediumSpec,
    side: Side,
    omega: f64,
    epsilon: f64,
    z: f64,
    n: usize,
    mesh: &SegmentMesh,
) -> Result<RtRSymbols> {
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::Validation(format!("symbol grid size must be a power of two >= 8, got {n}")));
    }
    let s_grid: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
    let vals: Vec<[C64; 4]> = s_grid
        .par_iter()
        .map(|&s| symbols_at(medium, side, s, omega, epsilon, z, mesh))
        .collect::<Result<_>>()?;
    Ok(RtRSymbols {
        side,
        omega,
        epsilon,
        z,
        t00: vals.iter().map(|v| v[0]).collect(),
        t01: vals.iter().map(|v| v[1]).collect(),
        t10: vals.iter().map(|v| v[2]).collect(),
        t11: vals.iter().map(|v| v[3]).collect(),
        s_grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane_wave_oracle(k: C64, z: f64, l: f64, kind: CellKind) -> impl Fn(f64) -> C64 {
        // u = A e^{ikx} + B e^{−ikx}; near end x = 0 with outward flux −u′, far end x = L with u′.
        let i = C64::new(0.0, 1.0);
        let iz = i * z;
        let e = |x: f64| (i * k * x).exp();
        // rows: (−u′ − izu)(0) = g0 ; (u′ − izu)(L) = gl
        let a11 = -i * k - iz;
        let a12 = i * k - iz;
        let a21 = (i * k - iz) * e(l);
        let a22 = (-i * k - iz) / e(l);
        let (g0, gl) = match kind {
            CellKind::E0 => (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
            CellKind::E1 => (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
        };
        let det = a11 * a22 - a12 * a21;
        let a = (g0 * a22 - a12 * gl) / det;
        let b = (a11 * gl - a21 * g0) / det;
        move |x: f64| a * (i * k * x).exp() + b * (-i * k * x).exp()
    }

    #[test]
    fn homogeneous_e0_e1_match_plane_wave() {
        let med = MediumSpec::homogeneous(0.5, 0.75f64.sqrt(), 1).unwrap();
        let l = med.cut.cell_length();
        let mesh = SegmentMesh::new(400, l);
        let (omega, eps) = (2.0, 0.0);
        let k = C64::new(omega, 0.0);
        for kind in [CellKind::E0, CellKind::E1] {
            let sol = solve_cell(&med, Side::Right, kind, 0.3, omega, eps, omega, &mesh).unwrap();
            let closed: Box<dyn Fn(f64) -> C64> = match kind {
                CellKind::E0 => Box::new(move |x| C64::new(0.0, 0.5) / k * (C64::new(0.0, 1.0) * k * x).exp()),
                CellKind::E1 => {
                    Box::new(move |x| C64::new(0.0, 0.5) / k * (C64::new(0.0, 1.0) * k * (l - x)).exp())
                }
            };
            let scale = 0.5 / omega;
            for (j, x) in mesh.mesh.nodes.iter().enumerate() {
                assert!((sol.values[j] - closed(*x)).norm() < 1e-5 * scale, "{kind:?} at {x}");
            }
        }
    }

    #[test]
    fn absorbing_plane_wave_two_coefficient_oracle() {
        let med = MediumSpec::homogeneous(0.5, 0.75f64.sqrt(), 1).unwrap();
        let l = med.cut.cell_length();
        let mesh = SegmentMesh::new(800, l);
        let (omega, eps, z) = (3.0, 0.4, 1.7);
        let k = C64::new(omega * omega, eps).sqrt();
        for kind in [CellKind::E0, CellKind::E1] {
            let sol = solve_cell(&med, Side::Right, kind, 0.0, omega, eps, z, &mesh).unwrap();
            let u = plane_wave_oracle(k, z, l, kind);
            let scale = sol.values.iter().fold(0.0f64, |a, v| a.max(v.norm()));
            for (j, x) in mesh.mesh.nodes.iter().enumerate() {
                assert!((sol.values[j] - u(*x)).norm() < 1e-5 * scale);
            }
        }
    }

    #[test]
    fn boundary_conditions_hold() {
        let med = MediumSpec::paper();
        let mesh = SegmentMesh::new(400, med.cut.cell_length());
        for side in [Side::Left, Side::Right] {
            let op = CellOperator::new(&med, side, 0.37, 5.642, 0.0, 5.642, &mesh).unwrap();
            let (e0, e1) = op.pair();
            assert!((e0.robin_out_0 - 1.0).norm() < 1e-10);
            assert!(e0.robin_in_l.norm() < 1e-10);
            assert!(e1.robin_out_0.norm() < 1e-10);
            assert!((e1.robin_in_l - 1.0).norm() < 1e-10);
            // reciprocity t01 = t10 holds exactly for the symmetric discrete problem
            assert!((e0.robin_out_l - e1.robin_in_0).norm() < 1e-10);
        }
    }

    #[test]
    fn homogeneous_solution_independent_of_s() {
        let med = MediumSpec::homogeneous(0.5, 0.75f64.sqrt(), 1).unwrap();
        let mesh = SegmentMesh::new(200, med.cut.cell_length());
        let a = solve_cell(&med, Side::Right, CellKind::E0, 0.1, 2.0, 0.1, 2.0, &mesh).unwrap();
        let b = solve_cell(&med, Side::Right, CellKind::E0, 0.8, 2.0, 0.1, 2.0, &mesh).unwrap();
        for (p, q) in a.values.iter().zip(&b.values) {
            assert!((p - q).norm() < 1e-14);
        }
    }

    #[test]
    fn left_symbols_are_shifted_right_symbols() {
        let med = MediumSpec::paper();
        let mesh = SegmentMesh::new(300, med.cut.cell_length());
        let d = med.cut.delta;
        let (w, eps) = (4.0, 0.01);
        for s in [0.0, 0.21, 0.77] {
            let l = symbols_at(&med, Side::Left, s, w, eps, w, &mesh).unwrap();
            let r = symbols_at(&med, Side::Right, s - d, w, eps, w, &mesh).unwrap();
            assert!((l[0] - r[3]).norm() < 1e-9);
            assert!((l[1] - r[2]).norm() < 1e-9);
            assert!((l[2] - r[1]).norm() < 1e-9);
            assert!((l[3] - r[0]).norm() < 1e-9);
        }
    }
}
