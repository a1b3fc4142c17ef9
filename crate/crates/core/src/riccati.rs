//! Spectrum of the augmented Riccati pencil, winding numbers, flux densities, frequency
//! classification and extraction of the fundamental eigenpairs.

use faer::Mat;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cell_solver::{RtRSymbols, Side};
use crate::error::{Error, Result};
use crate::fourier::FourierFn;
use crate::shift_ops::{signed_delta, ModeWindow, Pencil};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Position of an eigenvalue relative to the unit circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusClass {
    Inside,
    OnCircle,
    Outside,
}

/// One finite eigenpair of the pencil, (φ, ψ) normalized so that the larger of |φ(0)|, |ψ(0)| is 1.
#[derive(Clone, Debug)]
pub struct RiccatiEigenpair {
    pub lambda: C64,
    pub phi: FourierFn,
    pub psi: FourierFn,
    pub winding_phi: Option<i64>,
    pub winding_psi: Option<i64>,
    /// Mean of the flux density Q_s over s.
    pub flux: f64,
    /// Standard deviation of Q_s over s.
    pub flux_std: f64,
    pub modulus_class: ModulusClass,
    /// ‖(MM − λNN)v‖ / ((‖MM‖ + |λ|‖NN‖)‖v‖).
    pub residual: f64,
    /// Fraction of eigenvector energy in the top quarter of the mode window.
    pub tail: f64,
}

impl RiccatiEigenpair {
    /// True when the eigenvector is resolved by the mode window.
    pub fn resolved(&self, tail_tol: f64) -> bool {
        self.tail < tail_tol
    }
}

/// Finite eigenpairs plus the count of infinite or indeterminate eigenvalues.
#[derive(Clone, Debug)]
pub struct PencilSpectrum {
    pub side: Side,
    pub omega: f64,
    pub epsilon: f64,
    pub pairs: Vec<RiccatiEigenpair>,
    pub infinite: usize,
}

/// Winding number with its rounding residual; `value` is `None` when f comes close to 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Winding {
    pub value: Option<i64>,
    pub residual: f64,
}

/// Absorbing (ε > 0) or limit (ε = 0) regime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Absorbing,
    Limit,
}

/// Fundamental eigenpair of one side, φ₀(0) = 1.
#[derive(Clone, Debug)]
pub struct FundamentalPair {
    pub side: Side,
    pub lambda0: C64,
    pub phi0: FourierFn,
    pub psi0: FourierFn,
    pub q0: f64,
    pub regime: Regime,
    pub omega: f64,
    pub epsilon: f64,
}

/// Frequency classes of the limit problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyKind {
    Evanescent,
    Propagative,
    ZeroFlux,
}

impl FrequencyKind {
    pub fn name(self) -> &'static str {
        match self {
            FrequencyKind::Evanescent => "evanescent",
            FrequencyKind::Propagative => "propagative",
            FrequencyKind::ZeroFlux => "zero_flux",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FrequencyClass {
    pub omega: f64,
    pub class: FrequencyKind,
    pub lambda0_right: Option<(f64, f64)>,
    pub lambda0_left: Option<(f64, f64)>,
}

/// Default threshold for the Fourier tail of a resolved eigenvector.
pub const TAIL_TOL: f64 = 1e-6;

/// Winding number of a closed curve sampled on an equispaced grid of [0, 1).
///
/// The grid is refined by trigonometric interpolation (up to 8×) while some increment of the
/// argument exceeds π/2. Returns `value = None` if min|f| ≤ 1e−8·max|f|.
pub fn winding_number(samples: &[C64]) -> Winding {
    let undefined = Winding { value: None, residual: f64::NAN };
    let n0 = samples.len();
    if n0 == 0 {
        return undefined;
    }
    let refinable = n0.is_power_of_two() && n0 >= 2;
    let mut cur = samples.to_vec();
    let mut factor = 1;
    loop {
        let max = cur.iter().fold(0.0f64, |a, v| a.max(v.norm()));
        let min = cur.iter().fold(f64::INFINITY, |a, v| a.min(v.norm()));
        if !(max > 0.0) || min <= 1e-8 * max {
            return undefined;
        }
        let incs: Vec<f64> = (0..cur.len()).map(|j| (cur[(j + 1) % cur.len()] / cur[j]).arg()).collect();
        let worst = incs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if worst < std::f64::consts::FRAC_PI_2 || !refinable || factor >= 8 {
            if worst >= std::f64::consts::FRAC_PI_2 {
                return undefined;
            }
            let w = incs.iter().sum::<f64>() / TWO_PI;
            let r = w.round();
            return Winding { value: Some(r as i64), residual: (w - r).abs() };
        }
        let f = FourierFn::from_samples(&cur).expect("power-of-two grid");
        cur = f.samples_on(2 * cur.len());
        factor *= 2;
    }
}

/// Winding number of a Fourier series on an 8K-point grid.
pub fn winding_of(f: &FourierFn) -> Winding {
    winding_number(&f.samples_on(8 * f.k()))
}

/// Shifted function s ↦ f(s + d).
pub fn shifted(f: &FourierFn, d: f64) -> FourierFn {
    let h = (f.k() / 2) as i64;
    let mut g = f.clone();
    for m in -h + 1..h {
        g.set_coeff(m, f.coeff(m) * C64::from_polar(1.0, TWO_PI * m as f64 * d));
    }
    // the Nyquist term is kept unshifted: its coefficient is zero for window vectors
    g
}

/// Flux density Q_s on the symbol grid, with its mean and standard deviation.
#[derive(Clone, Debug)]
pub struct FluxDensity {
    pub samples: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// Q_s = Re[(1 − t00)φ − t10 ψ(s+νδ)]·conj[(1 + t00)φ + t10 ψ(s+νδ)] on the symbol grid.
pub fn flux_density(phi: &FourierFn, psi: &FourierFn, symbols: &RtRSymbols, delta: f64) -> Result<FluxDensity> {
    let n = symbols.t00.len();
    if n < phi.k() || n < psi.k() {
        return Err(Error::Dimension(format!("symbol grid {n} coarser than eigenvector modes {}", phi.k())));
    }
    let d = signed_delta(symbols.side, delta);
    let ph = phi.samples_on(n);
    let ps = shifted(psi, d).samples_on(n);
    let one = C64::new(1.0, 0.0);
    let samples: Vec<f64> = (0..n)
        .map(|j| {
            let (t00, t10) = (symbols.t00[j], symbols.t10[j]);
            let a = (one - t00) * ph[j] - t10 * ps[j];
            let b = (one + t00) * ph[j] + t10 * ps[j];
            (a * b.conj()).re
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let std = (samples.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    Ok(FluxDensity { samples, mean, std })
}

fn modulus_class(lambda: C64, tol: f64) -> ModulusClass {
    let r = lambda.norm();
    if (r - 1.0).abs() < tol {
        ModulusClass::OnCircle
    } else if r < 1.0 {
        ModulusClass::Inside
    } else {
        ModulusClass::Outside
    }
}

fn window_tail(v: &[C64], window: ModeWindow) -> f64 {
    let nh = window.half();
    let cut = (3 * nh) / 4;
    let mut tot = 0.0;
    let mut tail = 0.0;
    for (p, c) in v.iter().enumerate() {
        let e = c.norm_sqr();
        tot += e;
        if window.mode(p).abs() > cut {
            tail += e;
        }
    }
    if tot == 0.0 {
        0.0
    } else {
        tail / tot
    }
}

/// Eigenvectors, finite eigenvalues and the infinite count.
type RawSpectrum = (Mat<C64>, Vec<(usize, C64)>, usize);

/// Standard eigenproblem of NN⁻¹MM; `None` when NN is too ill-conditioned for the reduction.
fn reduced_eigen(p: &Pencil, mm_norm: f64) -> Option<RawSpectrum> {
    use faer::linalg::solvers::Solve;
    let lu = p.nn.partial_piv_lu();
    let a = lu.solve(&p.mm);
    let back = (&p.nn * &a) - &p.mm;
    let a_norm = a.norm_l2();
    if !a_norm.is_finite() || back.norm_l2() > 1e-10 * mm_norm.max(1e-300) || a_norm > 1e12 * mm_norm.max(1.0) {
        return None;
    }
    let evd = a.eigen().ok()?;
    let s = evd.S().column_vector();
    let finite = (0..s.nrows()).map(|j| (j, s[j])).collect();
    Some((evd.U().to_owned(), finite, 0))
}

/// QZ fallback on the pencil itself.
fn qz_eigen(p: &Pencil, mm_norm: f64, nn_norm: f64) -> Result<RawSpectrum> {
    let gevd = p.mm.generalized_eigen(&p.nn).map_err(|e| {
        Error::Solver(format!("generalized eigensolver failed ({e:?}); ‖MM‖ = {mm_norm:.3e}, ‖NN‖ = {nn_norm:.3e}"))
    })?;
    let sa = gevd.S_a().column_vector();
    let sb = gevd.S_b().column_vector();
    let mut infinite = 0;
    let mut finite = Vec::new();
    for j in 0..sa.nrows() {
        let (a, b) = (sa[j], sb[j]);
        if b.norm() <= 1e-13 * a.norm().max(1e-300) || b.norm() == 0.0 {
            infinite += 1;
            continue;
        }
        finite.push((j, a / b));
    }
    Ok((gevd.U().to_owned(), finite, infinite))
}

/// All finite eigenpairs of (MM, NN), with winding numbers and flux densities.
///
/// `symbols` must be the symbols of the pencil's side; they are used for the flux density.
pub fn solve_pencil(p: &Pencil, symbols: &RtRSymbols, delta: f64, tol_circle: f64) -> Result<PencilSpectrum> {
    let n2 = p.mm.nrows();
    let n = n2 / 2;
    let w = p.window;
    let mm_norm = p.mm.norm_l2();
    let nn_norm = p.nn.norm_l2();
    let (u, finite, infinite) = match reduced_eigen(p, mm_norm) {
        Some(r) => r,
        None => qz_eigen(p, mm_norm, nn_norm)?,
    };
    let pairs: Vec<RiccatiEigenpair> = finite
        .par_iter()
        .map(|&(j, lambda)| -> Result<RiccatiEigenpair> {
            let v: Vec<C64> = (0..n2).map(|i| u[(i, j)]).collect();
            let vm = Mat::from_fn(n2, 1, |i, _| v[i]);
            let r = (&p.mm * &vm) - (&p.nn * &vm) * faer::Scale(lambda);
            let vnorm = vm.norm_l2();
            let residual = r.norm_l2() / ((mm_norm + lambda.norm() * nn_norm) * vnorm);
            let tail = window_tail(&v[..n], w).max(window_tail(&v[n..], w));
            let mut phi = w.extend(&v[..n]);
            let mut psi = w.extend(&v[n..]);
            let (p0, q0) = (phi.eval(0.0), psi.eval(0.0));
            let scale = if p0.norm() >= q0.norm() { p0 } else { q0 };
            if scale.norm() > 0.0 {
                phi = phi.scale(scale.inv());
                psi = psi.scale(scale.inv());
            }
            let fd = flux_density(&phi, &psi, symbols, delta)?;
            Ok(RiccatiEigenpair {
                lambda,
                winding_phi: winding_of(&phi).value,
                winding_psi: winding_of(&psi).value,
                phi,
                psi,
                flux: fd.mean,
                flux_std: fd.std,
                modulus_class: modulus_class(lambda, tol_circle),
                residual,
                tail,
            })
        })
        .collect::<Result<_>>()?;
    Ok(PencilSpectrum { side: p.side, omega: p.omega, epsilon: p.epsilon, pairs, infinite })
}

/// Classification of an ε = 0 spectrum: no eigenvalue on the unit circle → evanescent; all of
/// them on it with nonzero flux → propagative; anything else → zero flux.
///
/// Only eigenpairs resolved by the mode window (Fourier tail below `TAIL_TOL`) take part.
pub fn classify_frequency(spec: &PencilSpectrum, tol_circle: f64, tol_flux: f64) -> FrequencyClass {
    let used: Vec<&RiccatiEigenpair> = spec.pairs.iter().filter(|p| p.resolved(TAIL_TOL)).collect();
    let on = used.iter().filter(|p| (p.lambda.norm() - 1.0).abs() < tol_circle).count();
    let class = if on == 0 {
        FrequencyKind::Evanescent
    } else if on == used.len() {
        let qmax = used.iter().fold(0.0f64, |a, p| a.max(p.flux.abs()));
        if qmax < tol_flux {
            FrequencyKind::ZeroFlux
        } else {
            FrequencyKind::Propagative
        }
    } else {
        FrequencyKind::ZeroFlux
    };
    FrequencyClass { omega: spec.omega, class, lambda0_right: None, lambda0_left: None }
}

fn describe(c: &[&RiccatiEigenpair]) -> String {
    c.iter()
        .map(|p| {
            format!(
                "λ={:.6}{:+.6}i |λ|={:.6} w(φ)={:?} w(ψ)={:?} Q={:.3e}",
                p.lambda.re,
                p.lambda.im,
                p.lambda.norm(),
                p.winding_phi,
                p.winding_psi,
                p.flux
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Selects the fundamental pair of `side` from the spectrum of the right pencil.
///
/// Right: the pair with |λ| < 1 − tol (or positive flux on the unit circle) and winding(φ) = 0;
/// the margin tol is dropped when absorbing.
/// Left: the pair with |λ| > 1 + tol (or negative flux) and winding(ψ) = 0, with λ₀ = 1/λ and the
/// roles of φ and ψ exchanged. `symbols` are those of `side` and give Q₀.
pub fn extract_fundamental(
    spec: &PencilSpectrum,
    side: Side,
    regime: Regime,
    tol: f64,
    symbols: &RtRSymbols,
    delta: f64,
) -> Result<FundamentalPair> {
    if spec.side != Side::Right {
        return Err(Error::Extraction("extraction expects the spectrum of the right pencil".into()));
    }
    if symbols.side != side {
        return Err(Error::Extraction("symbols of the wrong side".into()));
    }
    let resolved: Vec<&RiccatiEigenpair> = spec.pairs.iter().filter(|p| p.resolved(TAIL_TOL)).collect();
    let on_circle = resolved.iter().any(|p| (p.lambda.norm() - 1.0).abs() < tol);
    let propagative = regime == Regime::Limit && on_circle;
    // with absorption the circle splits by O(ε), so no margin is applied
    let margin = if regime == Regime::Absorbing { 0.0 } else { tol };
    let cands: Vec<&RiccatiEigenpair> = resolved
        .iter()
        .copied()
        .filter(|p| {
            let r = p.lambda.norm();
            match (side, propagative) {
                (Side::Right, false) => r < 1.0 - margin && p.winding_phi == Some(0),
                (Side::Left, false) => r > 1.0 + margin && p.winding_psi == Some(0),
                (Side::Right, true) => (r - 1.0).abs() < tol && p.flux > 0.0 && p.winding_phi == Some(0),
                (Side::Left, true) => (r - 1.0).abs() < tol && p.flux < 0.0 && p.winding_psi == Some(0),
            }
        })
        .collect();
    if cands.len() != 1 {
        let all: Vec<&RiccatiEigenpair> = spec.pairs.iter().collect();
        return Err(Error::Extraction(format!(
            "{} side at ω = {}: {} candidates [{}]; full spectrum: [{}]",
            side.name(),
            spec.omega,
            cands.len(),
            describe(&cands),
            describe(&all)
        )));
    }
    let p = cands[0];
    let (lambda0, phi, psi) = match side {
        Side::Right => (p.lambda, p.phi.clone(), p.psi.clone()),
        Side::Left => (p.lambda.inv(), p.psi.clone(), p.phi.clone()),
    };
    let n0 = phi.eval(0.0);
    if n0.norm() < 1e-12 {
        return Err(Error::Extraction(format!("{} fundamental vanishes at s = 0", side.name())));
    }
    let phi0 = phi.scale(n0.inv());
    let psi0 = psi.scale(n0.inv());
    let q0 = flux_density(&phi0, &psi0, symbols, delta)?.mean;
    Ok(FundamentalPair { side, lambda0, phi0, psi0, q0, regime, omega: spec.omega, epsilon: spec.epsilon })
}

/// {λ₀e^{∓2πikδ}} for |k| ≤ count (minus sign on the right).
pub fn reconstruct_spectrum(lambda0: C64, side: Side, delta: f64, count: usize) -> Vec<C64> {
    let d = signed_delta(side, delta);
    let c = count as i64;
    (-c..=c).map(|k| lambda0 * C64::from_polar(1.0, -TWO_PI * k as f64 * d)).collect()
}

/// Result of the difference-equation reconstruction of φ₀.
#[derive(Clone, Copy, Debug)]
pub struct DifferenceCheck {
    /// ‖e^v − φ₀‖_∞ / ‖φ₀‖_∞.
    pub phi_residual: f64,
    /// |λ₀ − exp ∫g|.
    pub lambda_residual: f64,
}

/// Rebuilds φ₀ from p(s) = λ₀φ₀(s+νδ)/φ₀(s) by solving v(s+νδ) − v(s) = g(s) − ∫g in Fourier space.
///
/// `n` is the sampling grid (power of two, at least the number of modes of φ₀).
pub fn difference_equation_check(fund: &FundamentalPair, delta: f64, n: usize) -> Result<DifferenceCheck> {
    let n = n.max(fund.phi0.k()).next_power_of_two();
    let d = signed_delta(fund.side, delta);
    let phi = fund.phi0.samples_on(n);
    let phis = shifted(&fund.phi0, d).samples_on(n);
    let pmin = phi.iter().fold(f64::INFINITY, |a, v| a.min(v.norm()));
    let pmax = phi.iter().fold(0.0f64, |a, v| a.max(v.norm()));
    if pmin <= 1e-10 * pmax {
        return Err(Error::Extraction("φ₀ vanishes on the grid".into()));
    }
    let p: Vec<C64> = (0..n).map(|j| fund.lambda0 * phis[j] / phi[j]).collect();
    let w = winding_number(&p);
    if w.value != Some(0) {
        return Err(Error::Winding(format!("winding of the propagation symbol is {:?}, expected 0", w.value)));
    }
    // continuous branch of log p starting from the principal value at s = 0
    let mut g = Vec::with_capacity(n);
    let mut arg = p[0].arg();
    g.push(C64::new(p[0].norm().ln(), arg));
    for j in 1..n {
        arg += (p[j] / p[j - 1]).arg();
        g.push(C64::new(p[j].norm().ln(), arg));
    }
    let gh = FourierFn::from_samples(&g)?;
    let mut v = FourierFn::zeros(n);
    let h = (n / 2) as i64;
    for m in -h + 1..h {
        if m != 0 {
            let den = C64::from_polar(1.0, TWO_PI * m as f64 * d) - 1.0;
            v.set_coeff(m, gh.coeff(m) / den);
        }
    }
    let v0 = v.eval(0.0);
    v.set_coeff(0, -v0);
    let ev: Vec<C64> = v.to_samples().into_iter().map(|x| x.exp()).collect();
    let err = (0..n).fold(0.0f64, |a, j| a.max((ev[j] - phi[j]).norm()));
    Ok(DifferenceCheck { phi_residual: err / pmax, lambda_residual: (fund.lambda0 - gh.coeff(0).exp()).norm() })
}
