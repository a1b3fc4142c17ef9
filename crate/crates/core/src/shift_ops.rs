//! Weighted shift operators in a Fourier basis and the augmented Riccati pencil.
//!
//! Operators act on the symmetric mode window k ∈ {−N, …, N}, N = K/2 − 1 (the Nyquist mode
//! of a K-point grid is left out so that the window is closed under k ↦ −k). Multiplication
//! by a symbol b is the Galerkin (Toeplitz) section (bφ)_k = Σ_m b̂_{k−m} φ_m, and the shift
//! φ ↦ φ(· − d) is diagonal with entries e^{−2πikd}.

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::cell_solver::{RtRSymbols, Side};
use crate::error::{Error, Result};
use crate::fourier::FourierFn;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Index pattern ℓk of a local RtR operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pattern {
    P00,
    P01,
    P10,
    P11,
}

/// Mode window of size 2N + 1 for a K-point grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeWindow {
    /// Grid size K.
    pub k: usize,
}

impl ModeWindow {
    pub fn new(k: usize) -> Self {
        Self { k }
    }

    /// N = K/2 − 1.
    pub fn half(&self) -> i64 {
        (self.k / 2) as i64 - 1
    }

    /// Number of active modes 2N + 1 = K − 1.
    pub fn dim(&self) -> usize {
        self.k - 1
    }

    /// Mode number of row/column index `p`.
    pub fn mode(&self, p: usize) -> i64 {
        p as i64 - self.half()
    }

    /// Coefficient vector of `f` on the window.
    pub fn restrict(&self, f: &FourierFn) -> Vec<C64> {
        (0..self.dim()).map(|p| f.coeff(self.mode(p))).collect()
    }

    /// FourierFn with K stored modes from a window vector (Nyquist coefficient zero).
    pub fn extend(&self, v: &[C64]) -> FourierFn {
        let mut f = FourierFn::zeros(self.k);
        for (p, c) in v.iter().enumerate() {
            f.set_coeff(self.mode(p), *c);
        }
        f
    }
}

/// Dense matrix of a weighted shift operator on a [`ModeWindow`].
#[derive(Clone, Debug)]
pub struct ShiftOpMatrix {
    pub mat: Mat<C64>,
    pub pattern: Option<Pattern>,
    pub side: Option<Side>,
    pub window: ModeWindow,
}

impl ShiftOpMatrix {
    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.mat.norm_l2()
    }

    /// Applies the operator to a window vector.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.window.dim();
        (0..n).map(|i| (0..n).map(|j| self.mat[(i, j)] * v[j]).sum()).collect()
    }

    /// Applies the operator to a FourierFn (restricted to the window).
    pub fn apply_fn(&self, f: &FourierFn) -> FourierFn {
        self.window.extend(&self.apply(&self.window.restrict(f)))
    }

    /// Difference norm ‖A − B‖_F.
    pub fn dist(&self, other: &ShiftOpMatrix) -> f64 {
        (&self.mat - &other.mat).norm_l2()
    }

    /// Matrix product.
    pub fn compose(&self, other: &ShiftOpMatrix) -> ShiftOpMatrix {
        ShiftOpMatrix { mat: &self.mat * &other.mat, pattern: None, side: None, window: self.window }
    }

    /// Sum.
    pub fn add(&self, other: &ShiftOpMatrix) -> ShiftOpMatrix {
        ShiftOpMatrix { mat: &self.mat + &other.mat, pattern: None, side: None, window: self.window }
    }

    /// Identity on the window.
    pub fn identity(window: ModeWindow) -> Self {
        let n = window.dim();
        Self {
            mat: Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }),
            pattern: None,
            side: None,
            window,
        }
    }
}

/// Signed shift: +δ on the right side, −δ on the left side.
pub fn signed_delta(side: Side, delta: f64) -> f64 {
    match side {
        Side::Right => delta,
        Side::Left => -delta,
    }
}

/// Weighted shift matrix with symbol `b` for the given pattern, side and δ.
///
/// With d = ±δ: 00: b(s)φ(s); 01: b(s−d)φ(s−d); 10: b(s)φ(s+d); 11: b(s−d)φ(s).
pub fn assemble_t(b: &FourierFn, window: ModeWindow, pattern: Pattern, side: Side, delta: f64) -> Result<ShiftOpMatrix> {
    if b.k() < window.k {
        return Err(Error::Dimension(format!("symbol has {} modes, window needs at least {}", b.k(), window.k)));
    }
    let d = signed_delta(side, delta);
    let n = window.dim();
    let ph = |k: i64| C64::from_polar(1.0, -TWO_PI * k as f64 * d);
    let mat = Mat::from_fn(n, n, |p, q| {
        let (kp, kq) = (window.mode(p), window.mode(q));
        let c = b.coeff(kp - kq);
        match pattern {
            Pattern::P00 => c,
            Pattern::P01 => ph(kp) * c,
            Pattern::P10 => c * ph(kq).conj(),
            Pattern::P11 => c * ph(kp - kq),
        }
    });
    Ok(ShiftOpMatrix { mat, pattern: Some(pattern), side: Some(side), window })
}

/// Transpose for the bilinear pairing ∫₀¹ φψ: (ᵀA)_{k,m} = A_{−m,−k}.
pub fn transpose_op(a: &ShiftOpMatrix) -> ShiftOpMatrix {
    let n = a.window.dim();
    let mat = Mat::from_fn(n, n, |p, q| a.mat[(n - 1 - q, n - 1 - p)]);
    ShiftOpMatrix { mat, pattern: None, side: a.side, window: a.window }
}

/// The four local RtR operators of one side.
#[derive(Clone, Debug)]
pub struct LocalOps {
    pub side: Side,
    pub window: ModeWindow,
    /// Unsigned shift δ = θ₁/θ₂.
    pub delta: f64,
    pub t00: ShiftOpMatrix,
    pub t01: ShiftOpMatrix,
    pub t10: ShiftOpMatrix,
    pub t11: ShiftOpMatrix,
    /// Symbols as Fourier series (on the symbol grid).
    pub b00: FourierFn,
    pub b01: FourierFn,
    pub b10: FourierFn,
    pub b11: FourierFn,
}

/// Fourier series of the four symbols.
pub fn symbol_series(sym: &RtRSymbols) -> Result<[FourierFn; 4]> {
    Ok([
        FourierFn::from_samples(&sym.t00)?,
        FourierFn::from_samples(&sym.t01)?,
        FourierFn::from_samples(&sym.t10)?,
        FourierFn::from_samples(&sym.t11)?,
    ])
}

/// Largest fraction of symbol energy in modes |k| > 3K/8 over the four symbols.
pub fn symbol_tail(sym: &RtRSymbols, k: usize) -> Result<f64> {
    let s = symbol_series(sym)?;
    Ok(s.iter().map(|f| f.tail_fraction((3 * k / 8) as i64)).fold(0.0, f64::max))
}

/// Assembles T00, T01, T10, T11 on the window of size K from symbols sampled on ≥ K points.
pub fn local_ops(sym: &RtRSymbols, k: usize, delta: f64) -> Result<LocalOps> {
    let w = ModeWindow::new(k);
    let [b00, b01, b10, b11] = symbol_series(sym)?;
    Ok(LocalOps {
        side: sym.side,
        window: w,
        delta,
        t00: assemble_t(&b00, w, Pattern::P00, sym.side, delta)?,
        t01: assemble_t(&b01, w, Pattern::P01, sym.side, delta)?,
        t10: assemble_t(&b10, w, Pattern::P10, sym.side, delta)?,
        t11: assemble_t(&b11, w, Pattern::P11, sym.side, delta)?,
        b00,
        b01,
        b10,
        b11,
    })
}

/// Augmented pencil MM = [[T01, T11],[0, I]], NN = [[I, 0],[T00, T10]].
#[derive(Clone, Debug)]
pub struct Pencil {
    pub mm: Mat<C64>,
    pub nn: Mat<C64>,
    pub side: Side,
    pub omega: f64,
    pub epsilon: f64,
    pub window: ModeWindow,
}

/// Builds the block pencil from the four operators.
pub fn assemble_pencil(
    t00: &ShiftOpMatrix,
    t01: &ShiftOpMatrix,
    t10: &ShiftOpMatrix,
    t11: &ShiftOpMatrix,
    side: Side,
    omega: f64,
    epsilon: f64,
) -> Result<Pencil> {
    let w = t00.window;
    if [t01.window, t10.window, t11.window].iter().any(|x| *x != w) {
        return Err(Error::Dimension("local operators live on different mode windows".into()));
    }
    let n = w.dim();
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let mm = Mat::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => t01.mat[(i, j)],
        (true, false) => t11.mat[(i, j - n)],
        (false, true) => zero,
        (false, false) => {
            if i == j {
                one
            } else {
                zero
            }
        }
    });
    let nn = Mat::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => {
            if i == j {
                one
            } else {
                zero
            }
        }
        (true, false) => zero,
        (false, true) => t00.mat[(i - n, j)],
        (false, false) => t10.mat[(i - n, j - n)],
    });
    Ok(Pencil { mm, nn, side, omega, epsilon, window: w })
}

/// Pencil of one side built from its local operators.
pub fn pencil_from_ops(ops: &LocalOps, omega: f64, epsilon: f64) -> Result<Pencil> {
    assemble_pencil(&ops.t00, &ops.t01, &ops.t10, &ops.t11, ops.side, omega, epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn const_fn(k: usize, c: C64) -> FourierFn {
        FourierFn::from_samples(&vec![c; k]).unwrap()
    }

    #[test]
    fn constant_symbol_patterns() {
        let w = ModeWindow::new(16);
        let c = C64::new(0.3, -1.2);
        let b = const_fn(32, c);
        let d = 0.577;
        let t00 = assemble_t(&b, w, Pattern::P00, Side::Right, d).unwrap();
        let t01 = assemble_t(&b, w, Pattern::P01, Side::Right, d).unwrap();
        let n = w.dim();
        for i in 0..n {
            for j in 0..n {
                let e00 = if i == j { c } else { C64::new(0.0, 0.0) };
                let e01 = if i == j { c * C64::from_polar(1.0, -TWO_PI * w.mode(i) as f64 * d) } else { C64::new(0.0, 0.0) };
                assert!((t00.mat[(i, j)] - e00).norm() < 1e-14);
                assert!((t01.mat[(i, j)] - e01).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn single_mode_symbol_raises_index() {
        let w = ModeWindow::new(16);
        let e: Vec<C64> = (0..32).map(|j| C64::from_polar(1.0, TWO_PI * j as f64 / 32.0)).collect();
        let b = FourierFn::from_samples(&e).unwrap();
        let t = assemble_t(&b, w, Pattern::P00, Side::Right, 0.4).unwrap();
        let n = w.dim();
        for i in 0..n {
            for j in 0..n {
                let want = if i == j + 1 { 1.0 } else { 0.0 };
                assert!((t.mat[(i, j)] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn transpose_involution_and_scalar() {
        let w = ModeWindow::new(8);
        let n = w.dim();
        let a = ShiftOpMatrix {
            mat: Mat::from_fn(n, n, |i, j| C64::new((i * 7 + j * 3) as f64 % 5.0, (i as f64 - j as f64).sin())),
            pattern: None,
            side: None,
            window: w,
        };
        assert!(transpose_op(&transpose_op(&a)).dist(&a) < 1e-15);
        let id = ShiftOpMatrix::identity(w);
        assert!(transpose_op(&id).dist(&id) < 1e-15);
    }

    #[test]
    fn transpose_matches_pairing() {
        // ∫(ᵀA φ) ψ = ∫ φ (A ψ), with ∫ f g = Σ_k f_k g_{−k}
        let w = ModeWindow::new(16);
        let s: Vec<C64> = (0..32).map(|j| C64::new(1.0 + 0.3 * (j as f64).cos(), 0.2 * (j as f64).sin())).collect();
        let b = FourierFn::from_samples(&s).unwrap();
        let a = assemble_t(&b, w, Pattern::P01, Side::Right, 0.3).unwrap();
        let at = transpose_op(&a);
        let n = w.dim();
        let phi: Vec<C64> = (0..n).map(|p| C64::new((p as f64).sin(), 0.1 * p as f64)).collect();
        let psi: Vec<C64> = (0..n).map(|p| C64::new((p as f64 * 0.7).cos(), -0.3)).collect();
        let pair = |f: &[C64], g: &[C64]| -> C64 { (0..n).map(|p| f[p] * g[n - 1 - p]).sum() };
        let lhs = pair(&at.apply(&phi), &psi);
        let rhs = pair(&phi, &a.apply(&psi));
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn operator_action_matches_grid_evaluation() {
        let k = 32;
        let w = ModeWindow::new(k);
        let d = 1.0 / 3f64.sqrt();
        let bs: Vec<C64> = (0..64)
            .map(|j| {
                let s = j as f64 / 64.0;
                C64::new(1.0 + 0.4 * (TWO_PI * s).cos(), 0.3 * (2.0 * TWO_PI * s).sin())
            })
            .collect();
        let b = FourierFn::from_samples(&bs).unwrap();
        let mut phi = FourierFn::zeros(k);
        phi.set_coeff(0, C64::new(1.0, 0.0));
        phi.set_coeff(2, C64::new(0.2, 0.1));
        phi.set_coeff(-3, C64::new(-0.1, 0.05));
        for (pat, side) in [(Pattern::P01, Side::Right), (Pattern::P10, Side::Right), (Pattern::P11, Side::Left)] {
            let t = assemble_t(&b, w, pat, side, d).unwrap();
            let out = t.apply_fn(&phi);
            let sd = signed_delta(side, d);
            for j in 0..10 {
                let s = j as f64 * 0.097;
                let want = match pat {
                    Pattern::P00 => b.eval(s) * phi.eval(s),
                    Pattern::P01 => b.eval(s - sd) * phi.eval(s - sd),
                    Pattern::P10 => b.eval(s) * phi.eval(s + sd),
                    Pattern::P11 => b.eval(s - sd) * phi.eval(s),
                };
                assert!((out.eval(s) - want).norm() < 1e-12, "{pat:?}");
            }
        }
    }
}
