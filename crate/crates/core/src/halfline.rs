//! Propagation and scattering symbols, RtR/DtN coefficients, and the cell-by-cell
//! reconstruction of half-line and half-guide solutions.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::cell_solver::{CellOperator, RtRSymbols, SegmentMesh, Side};
use crate::error::{Error, Result};
use crate::fourier::FourierFn;
use crate::medium::MediumSpec;
use crate::riccati::{shifted, winding_number, FundamentalPair};
use crate::shift_ops::{assemble_t, signed_delta, LocalOps, Pattern, ShiftOpMatrix};

/// Symbols p and s of the propagation and scattering operators:
/// 𝒫φ(s) = p(s−νδ)φ(s−νδ), 𝒮φ(s) = s_sym(s−νδ)φ(s−νδ).
#[derive(Clone, Debug)]
pub struct PropScatterSymbols {
    pub side: Side,
    pub p: FourierFn,
    pub s_sym: FourierFn,
}

/// p(s) = λ₀φ₀(s+νδ)/φ₀(s) and s_sym(s) = ψ₀(s+νδ)/φ₀(s), sampled on `n` points.
pub fn build_symbols(fund: &FundamentalPair, delta: f64, n: usize) -> Result<PropScatterSymbols> {
    let n = n.max(fund.phi0.k()).next_power_of_two();
    let d = signed_delta(fund.side, delta);
    let phi = fund.phi0.samples_on(n);
    let phis = shifted(&fund.phi0, d).samples_on(n);
    let psis = shifted(&fund.psi0, d).samples_on(n);
    let pmax = phi.iter().fold(0.0f64, |a, v| a.max(v.norm()));
    if phi.iter().any(|v| v.norm() <= 1e-12 * pmax) {
        return Err(Error::Extraction("φ₀ vanishes on the grid".into()));
    }
    let p: Vec<C64> = (0..n).map(|j| fund.lambda0 * phis[j] / phi[j]).collect();
    if winding_number(&p).value != Some(0) {
        return Err(Error::Winding("propagation symbol has nonzero winding".into()));
    }
    let s: Vec<C64> = (0..n).map(|j| psis[j] / phi[j]).collect();
    Ok(PropScatterSymbols { side: fund.side, p: FourierFn::from_samples(&p)?, s_sym: FourierFn::from_samples(&s)? })
}

/// Operator matrices (𝒫, 𝒮) on the mode window of `ops`.
pub fn prop_scatter_ops(sym: &PropScatterSymbols, ops: &LocalOps) -> Result<(ShiftOpMatrix, ShiftOpMatrix)> {
    Ok((
        assemble_t(&sym.p, ops.window, Pattern::P01, sym.side, ops.delta)?,
        assemble_t(&sym.s_sym, ops.window, Pattern::P01, sym.side, ops.delta)?,
    ))
}

/// Relative residuals of 𝒫 = T01 + T11𝒮 and 𝒮 = T00𝒫 + T10𝒮𝒫.
///
/// Products of truncated Toeplitz sections differ from sections of products near the window
/// edge, so the residual is measured on the central half of the mode window.
pub fn riccati_residual(sym: &PropScatterSymbols, ops: &LocalOps) -> Result<(f64, f64)> {
    let (p, s) = prop_scatter_ops(sym, ops)?;
    let r1 = p.mat.clone() - (&ops.t01.mat + &ops.t11.mat * &s.mat);
    let r2 = s.mat.clone() - (&ops.t00.mat * &p.mat + &ops.t10.mat * &s.mat * &p.mat);
    let n = ops.window.dim();
    let (lo, hi) = (n / 4, n - n / 4);
    let sub = |m: &faer::Mat<C64>| {
        let mut acc = 0.0;
        for i in lo..hi {
            for j in lo..hi {
                acc += m[(i, j)].norm_sqr();
            }
        }
        acc.sqrt()
    };
    let scale1 = sub(&p.mat).max(sub(&ops.t01.mat)).max(1e-300);
    let scale2 = sub(&s.mat).max(sub(&ops.t00.mat)).max(1e-300);
    Ok((sub(&r1) / scale1, sub(&r2) / scale2))
}

/// Trigonometric interpolation of a sampled symbol at `s`.
pub fn symbol_at(samples: &[C64], s: f64) -> Result<C64> {
    Ok(FourierFn::from_samples(samples)?.eval(s))
}

/// Offset s* = aθ₁ (mod 1) of the cell adjacent to x = a.
pub fn offset_of(medium: &MediumSpec, a: f64) -> f64 {
    (a * medium.cut.theta1).rem_euclid(1.0)
}

/// Λ = t00(s*) + φ₀(s*)⁻¹ψ₀(s*+νδ)t10(s*), s* = aθ₁.
pub fn rtr_coefficient(fund: &FundamentalPair, symbols: &RtRSymbols, medium: &MediumSpec, a: f64) -> Result<C64> {
    if symbols.side != fund.side {
        return Err(Error::Validation("symbols and fundamental pair belong to different sides".into()));
    }
    let s = offset_of(medium, a);
    let d = signed_delta(fund.side, medium.cut.delta);
    let phi = fund.phi0.eval(s);
    if phi.norm() < 1e-12 {
        return Err(Error::Extraction(format!("φ₀ vanishes at s* = {s}")));
    }
    let t00 = symbol_at(&symbols.t00, s)?;
    let t10 = symbol_at(&symbols.t10, s)?;
    Ok(t00 + fund.psi0.eval(s + d) / phi * t10)
}

/// λ^DtN = iz(Λ − 1)/(Λ + 1).
pub fn dtn_from_rtr(lambda: C64, z: f64) -> Result<C64> {
    let den = lambda + 1.0;
    if den.norm() <= 1e-12 {
        return Err(Error::SingularImpedance(format!("Λ = {lambda} is at the pole Λ = −1")));
    }
    Ok(C64::new(0.0, z) * (lambda - 1.0) / den)
}

/// Half-line solution sampled cell by cell.
#[derive(Clone, Debug)]
pub struct HalflineField {
    pub side: Side,
    pub n_cells: usize,
    /// Physical coordinates per cell, ordered by distance from the interface.
    pub x: Vec<Vec<f64>>,
    pub u: Vec<Vec<C64>>,
    pub lambda0: C64,
    /// Amplitude factor applied to the normalized field (R₊u(a)).
    pub amplitude: C64,
    /// Per-cell L² norms.
    pub cell_l2: Vec<f64>,
    /// Per-cell H¹ norms.
    pub cell_h1: Vec<f64>,
}

fn cell_norms(x: &[f64], u: &[C64]) -> (f64, f64) {
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for j in 0..u.len() - 1 {
        let h = (x[j + 1] - x[j]).abs();
        // P1 mass on one element
        let (a, b) = (u[j], u[j + 1]);
        let m = h / 3.0 * (a.norm_sqr() + b.norm_sqr() + (a * b.conj()).re);
        l2 += m;
        h1 += m + (b - a).norm_sqr() / h;
    }
    (l2.sqrt(), h1.sqrt())
}

/// Half-line solution with R₊u(a) = 1, one fresh cell solve per cell:
/// u(a + ν(t + nL)) = λ₀ⁿ φ₀(s*)⁻¹ [φ₀(s*+nνδ)e⁰(t) + ψ₀(s*+(n+1)νδ)e¹(t)] at offset s*+nνδ.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_halfline(
    fund: &FundamentalPair,
    medium: &MediumSpec,
    a: f64,
    n_cells: usize,
    mesh: &SegmentMesh,
    omega: f64,
    epsilon: f64,
    z: f64,
) -> Result<HalflineField> {
    let side = fund.side;
    let d = signed_delta(side, medium.cut.delta);
    let l = medium.cut.cell_length();
    let s0 = offset_of(medium, a);
    let norm = fund.phi0.eval(s0);
    if norm.norm() < 1e-12 {
        return Err(Error::Extraction("φ₀(s*) = 0".into()));
    }
    let cells: Vec<(Vec<f64>, Vec<C64>)> = (0..n_cells)
        .into_par_iter()
        .map(|n| -> Result<(Vec<f64>, Vec<C64>)> {
            let sn = s0 + n as f64 * d;
            let op = CellOperator::new(medium, side, sn.rem_euclid(1.0), omega, epsilon, z, mesh)?;
            let (e0, e1) = op.pair();
            let c0 = fund.lambda0.powi(n as i32) / norm;
            let a0 = c0 * fund.phi0.eval(sn);
            let a1 = c0 * fund.psi0.eval(sn + d);
            let u: Vec<C64> = e0.values.iter().zip(&e1.values).map(|(p, q)| a0 * p + a1 * q).collect();
            let x: Vec<f64> = mesh.mesh.nodes.iter().map(|t| a + side.dir() * (t + n as f64 * l)).collect();
            Ok((x, u))
        })
        .collect::<Result<_>>()?;
    let (x, u): (Vec<_>, Vec<_>) = cells.into_iter().unzip();
    let (cell_l2, cell_h1) = x.iter().zip(&u).map(|(x, u)| cell_norms(x, u)).unzip();
    Ok(HalflineField { side, n_cells, x, u, lambda0: fund.lambda0, amplitude: C64::new(1.0, 0.0), cell_l2, cell_h1 })
}

impl HalflineField {
    /// Same field multiplied by `c`.
    pub fn scaled(&self, c: C64) -> HalflineField {
        let mut out = self.clone();
        for cell in &mut out.u {
            for v in cell.iter_mut() {
                *v *= c;
            }
        }
        out.amplitude *= c;
        out.cell_l2.iter_mut().for_each(|v| *v *= c.norm());
        out.cell_h1.iter_mut().for_each(|v| *v *= c.norm());
        out
    }

    /// Largest relative jump of u between consecutive cells.
    pub fn junction_mismatch(&self) -> f64 {
        let mut worst = 0.0f64;
        for n in 0..self.n_cells.saturating_sub(1) {
            let a = *self.u[n].last().unwrap();
            let b = self.u[n + 1][0];
            worst = worst.max((a - b).norm() / a.norm().max(b.norm()).max(1e-300));
        }
        worst
    }
}

/// Least-squares decay rate of the per-cell L² norms.
#[derive(Clone, Copy, Debug)]
pub struct DecayFit {
    pub rate: f64,
    /// False when the norms are not monotone within 1% (fit-quality warning).
    pub monotone: bool,
}

/// exp of the least-squares slope of log‖u‖_{L²(cell n)} against n.
pub fn decay_rate_fit(field: &HalflineField) -> Result<DecayFit> {
    let n = field.cell_l2.len();
    if n < 8 {
        return Err(Error::Validation(format!("decay fit needs at least 8 cells, got {n}")));
    }
    let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let ys: Vec<f64> = field.cell_l2.iter().map(|v| v.ln()).collect();
    let xm = xs.iter().sum::<f64>() / n as f64;
    let ym = ys.iter().sum::<f64>() / n as f64;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let den: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let slope = num / den;
    let monotone = field.cell_l2.windows(2).all(|w| {
        if slope <= 0.0 {
            w[1] <= w[0] * 1.01
        } else {
            w[1] >= w[0] * 0.99
        }
    });
    Ok(DecayFit { rate: slope.exp(), monotone })
}

/// One sample of a half-guide solution.
#[derive(Clone, Copy, Debug)]
pub struct GuideSample {
    pub y1: f64,
    pub y2: f64,
    pub u: C64,
}

/// Half-guide solution U(y + nνe₂) = E⁰(𝒫ⁿφ) + E¹(𝒮𝒫ⁿφ) on `n_fibers` fibers.
///
/// Along the fiber with offset s, the point (s + νθ₁t, ν(θ₂t + n)) carries
/// (𝒫ⁿφ)(s)e⁰_s(t) + s_sym(s)(𝒫ⁿφ)(s)e¹_s(t). Powers of 𝒫 act in Fourier space.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_halfguide(
    props: &PropScatterSymbols,
    ops: &LocalOps,
    medium: &MediumSpec,
    boundary: &FourierFn,
    n_cells: usize,
    n_fibers: usize,
    mesh: &SegmentMesh,
    omega: f64,
    epsilon: f64,
    z: f64,
) -> Result<Vec<GuideSample>> {
    let side = props.side;
    let (p_op, _) = prop_scatter_ops(props, ops)?;
    let mut powers = Vec::with_capacity(n_cells);
    let mut cur = boundary.resized(ops.window.k);
    for _ in 0..n_cells {
        powers.push(cur.clone());
        cur = p_op.apply_fn(&cur);
    }
    let th = (medium.cut.theta1, medium.cut.theta2);
    let dir = side.dir();
    let fibers: Vec<Vec<GuideSample>> = (0..n_fibers)
        .into_par_iter()
        .map(|j| -> Result<Vec<GuideSample>> {
            let s = j as f64 / n_fibers as f64;
            let op = CellOperator::new(medium, side, s, omega, epsilon, z, mesh)?;
            let (e0, e1) = op.pair();
            let ss = props.s_sym.eval(s);
            let mut out = Vec::new();
            for (n, pw) in powers.iter().enumerate() {
                let v = pw.eval(s);
                for (i, t) in mesh.mesh.nodes.iter().enumerate() {
                    out.push(GuideSample {
                        y1: (s + dir * th.0 * t).rem_euclid(1.0),
                        y2: dir * (th.1 * t + n as f64),
                        u: v * e0.values[i] + ss * v * e1.values[i],
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(fibers.into_iter().flatten().collect())
}

/// Flux at the interface: 4z·Im(μu′ū)(a) computed from the first cell, and Re[(1−Λ)(1+Λ)*].
pub fn boundary_flux(field: &HalflineField, lambda: C64, z: f64, medium: &MediumSpec) -> (f64, f64) {
    let x = &field.x[0];
    let u = &field.u[0];
    // one-sided second-order derivative at the interface
    let h = x[1] - x[0];
    let du = (u[1] * 4.0 - u[0] * 3.0 - u[2]) / (2.0 * h);
    let mu = medium.effective_coefficient(x[0]).0;
    let lhs = 4.0 * z * (mu * du * u[0].conj()).im * field.side.dir();
    let rhs = ((1.0 - lambda) * (1.0 + lambda).conj()).re;
    (lhs / field.amplitude.norm_sqr(), rhs)
}
