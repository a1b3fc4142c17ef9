//! Complex P1 finite-element kernel on 1D meshes.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Three-point Gauss-Legendre rule on [0, 1]: (abscissa, weight).
pub const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_3, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// Five-point Gauss-Legendre rule on [0, 1].
pub const GAUSS5: [(f64, f64); 5] = [
    (0.046_910_077_030_668_0, 0.118_463_442_528_094_5),
    (0.230_765_344_947_158_5, 0.239_314_335_249_683_2),
    (0.5, 0.284_444_444_444_444_4),
    (0.769_234_655_052_841_5, 0.239_314_335_249_683_2),
    (0.953_089_922_969_332, 0.118_463_442_528_094_5),
];

/// Strictly increasing node list.
#[derive(Clone, Debug)]
pub struct Mesh1D {
    pub nodes: Vec<f64>,
}

impl Mesh1D {
    /// `n` equispaced nodes on [x0, x1] with exact endpoints.
    pub fn uniform(x0: f64, x1: f64, n: usize) -> Self {
        assert!(n >= 2, "mesh needs at least two nodes");
        let h = (x1 - x0) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|j| x0 + j as f64 * h).collect();
        nodes[n - 1] = x1;
        Self { nodes }
    }

    /// Mesh of [x0, x1] with spacing at most `h` that contains every breakpoint in (x0, x1).
    pub fn with_breakpoints(x0: f64, x1: f64, h: f64, breakpoints: &[f64]) -> Self {
        let mut pts = vec![x0];
        pts.extend(breakpoints.iter().copied().filter(|b| *b > x0 && *b < x1));
        pts.push(x1);
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let mut nodes = vec![x0];
        for w in pts.windows(2) {
            let n = ((w[1] - w[0]) / h).ceil().max(1.0) as usize;
            for j in 1..=n {
                nodes.push(if j == n { w[1] } else { w[0] + (w[1] - w[0]) * j as f64 / n as f64 });
            }
        }
        Self { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Real symmetric tridiagonal matrix: diagonal and first off-diagonal.
#[derive(Clone, Debug)]
pub struct SymTri {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// Stiffness ∫μ φᵢ′φⱼ′ and mass ∫ρ φᵢφⱼ with three-point Gauss quadrature per element.
pub fn assemble(mesh: &Mesh1D, mu: impl Fn(f64) -> f64, rho: impl Fn(f64) -> f64) -> (SymTri, SymTri) {
    let n = mesh.len();
    let mut k = SymTri { diag: vec![0.0; n], off: vec![0.0; n - 1] };
    let mut m = SymTri { diag: vec![0.0; n], off: vec![0.0; n - 1] };
    for e in 0..n - 1 {
        let (x0, x1) = (mesh.nodes[e], mesh.nodes[e + 1]);
        let h = x1 - x0;
        let mut mu_int = 0.0;
        let (mut m00, mut m01, mut m11) = (0.0, 0.0, 0.0);
        for (t, w) in GAUSS3 {
            let x = x0 + t * h;
            mu_int += w * mu(x);
            let r = w * rho(x) * h;
            m00 += r * (1.0 - t) * (1.0 - t);
            m01 += r * (1.0 - t) * t;
            m11 += r * t * t;
        }
        let kk = mu_int / h;
        k.diag[e] += kk;
        k.diag[e + 1] += kk;
        k.off[e] -= kk;
        m.diag[e] += m00;
        m.diag[e + 1] += m11;
        m.off[e] += m01;
    }
    (k, m)
}

/// Load vector ∫ f φᵢ with five-point Gauss quadrature per element.
pub fn load(mesh: &Mesh1D, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = mesh.len();
    let mut b = vec![0.0; n];
    for e in 0..n - 1 {
        let (x0, x1) = (mesh.nodes[e], mesh.nodes[e + 1]);
        let h = x1 - x0;
        for (t, w) in GAUSS5 {
            let v = w * h * f(x0 + t * h);
            b[e] += v * (1.0 - t);
            b[e + 1] += v * t;
        }
    }
    b
}

/// Complex tridiagonal matrix with sub-, main and super-diagonals.
#[derive(Clone, Debug)]
pub struct Tridiag {
    pub lower: Vec<C64>,
    pub diag: Vec<C64>,
    pub upper: Vec<C64>,
}

impl Tridiag {
    /// K − k2·M.
    pub fn helmholtz(k: &SymTri, m: &SymTri, k2: C64) -> Self {
        let diag: Vec<C64> = k.diag.iter().zip(&m.diag).map(|(a, b)| C64::from(*a) - k2 * b).collect();
        let off: Vec<C64> = k.off.iter().zip(&m.off).map(|(a, b)| C64::from(*a) - k2 * b).collect();
        Self { lower: off.clone(), diag, upper: off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// y = A x.
    pub fn mul(&self, x: &[C64]) -> Vec<C64> {
        let n = self.len();
        let mut y: Vec<C64> = (0..n).map(|i| self.diag[i] * x[i]).collect();
        for i in 0..n - 1 {
            y[i] += self.upper[i] * x[i + 1];
            y[i + 1] += self.lower[i] * x[i];
        }
        y
    }

    /// Row `i` of A x.
    pub fn row_mul(&self, i: usize, x: &[C64]) -> C64 {
        let mut v = self.diag[i] * x[i];
        if i > 0 {
            v += self.lower[i - 1] * x[i - 1];
        }
        if i + 1 < self.len() {
            v += self.upper[i] * x[i + 1];
        }
        v
    }

    /// LU factorization with partial pivoting.
    pub fn factor(&self) -> Result<TriLu> {
        let n = self.len();
        let mut dl = self.lower.clone();
        let mut d = self.diag.clone();
        let mut du = self.upper.clone();
        let mut du2 = vec![C64::new(0.0, 0.0); n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];
        let scale = d
            .iter()
            .chain(dl.iter())
            .chain(du.iter())
            .fold(0.0f64, |a, v| a.max(v.norm()));
        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= dl[i].norm() {
                if d[i].norm() == 0.0 {
                    return Err(Error::Solver("singular tridiagonal matrix".into()));
                }
                let f = dl[i] / d[i];
                dl[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du[i + 1];
                }
                swap[i] = true;
            }
        }
        let min_pivot = d.iter().fold(f64::INFINITY, |a, v| a.min(v.norm()));
        if !(min_pivot > 1e-14 * scale) {
            return Err(Error::Solver(format!(
                "tridiagonal system too ill-conditioned (min pivot {min_pivot:.3e}, scale {scale:.3e})"
            )));
        }
        Ok(TriLu { dl, d, du, du2, swap })
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        Ok(self.factor()?.solve(b))
    }
}

/// Factorization produced by [`Tridiag::factor`].
#[derive(Clone, Debug)]
pub struct TriLu {
    dl: Vec<C64>,
    d: Vec<C64>,
    du: Vec<C64>,
    du2: Vec<C64>,
    swap: Vec<bool>,
}

impl TriLu {
    /// Solves A x = b.
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.d.len();
        let mut x = b.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                x.swap(i, i + 1);
            }
            let t = x[i];
            x[i + 1] -= self.dl[i] * t;
        }
        x[n - 1] /= self.d[n - 1];
        if n > 1 {
            x[n - 2] = (x[n - 2] - self.du[n - 2] * x[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - self.du[i] * x[i + 1] - self.du2[i] * x[i + 2]) / self.d[i];
        }
        x
    }
}

/// Squared L² and H¹-seminorm of a P1 function: (∫|u|², ∫|u′|²).
pub fn l2_h1_sq(mesh: &Mesh1D, u: &[C64]) -> (f64, f64) {
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for e in 0..mesh.len() - 1 {
        let h = mesh.nodes[e + 1] - mesh.nodes[e];
        let (a, b) = (u[e], u[e + 1]);
        l2 += h / 3.0 * (a.norm_sqr() + (a * b.conj()).re + b.norm_sqr());
        h1 += (b - a).norm_sqr() / h;
    }
    (l2, h1)
}

/// ∫ w |u|² for a P1 function with a pointwise weight, by three-point Gauss quadrature.
pub fn weighted_l2_sq(mesh: &Mesh1D, u: &[C64], w: impl Fn(f64) -> f64) -> f64 {
    let mut s = 0.0;
    for e in 0..mesh.len() - 1 {
        let (x0, x1) = (mesh.nodes[e], mesh.nodes[e + 1]);
        let h = x1 - x0;
        for (t, g) in GAUSS3 {
            let v = u[e] * (1.0 - t) + u[e + 1] * t;
            s += g * h * w(x0 + t * h) * v.norm_sqr();
        }
    }
    s
}

/// Interpolates a P1 function at x (clamped to the mesh).
pub fn interpolate(mesh: &Mesh1D, u: &[C64], x: f64) -> C64 {
    let nodes = &mesh.nodes;
    if x <= nodes[0] {
        return u[0];
    }
    let n = nodes.len();
    if x >= nodes[n - 1] {
        return u[n - 1];
    }
    let j = nodes.partition_point(|v| *v <= x).max(1) - 1;
    let t = (x - nodes[j]) / (nodes[j + 1] - nodes[j]);
    u[j] * (1.0 - t) + u[j + 1] * t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn tridiag_solve_with_pivoting() {
        let a = Tridiag {
            lower: vec![c(3.0, 1.0), c(1.0, 0.0), c(-2.0, 0.5)],
            diag: vec![c(0.0, 0.0), c(1.0, 2.0), c(0.5, 0.0), c(4.0, -1.0)],
            upper: vec![c(1.0, 0.0), c(2.0, -1.0), c(1.0, 1.0)],
        };
        let x = vec![c(1.0, 2.0), c(-1.0, 0.5), c(0.3, -0.7), c(2.0, 0.0)];
        let b = a.mul(&x);
        let y = a.solve(&b).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).norm() < 1e-13);
        }
    }

    #[test]
    fn breakpoint_mesh_contains_breakpoints() {
        let m = Mesh1D::with_breakpoints(-1.0, 1.0, 0.07, &[-0.3, 0.25]);
        assert!(m.nodes.iter().any(|x| (*x + 0.3).abs() < 1e-15));
        assert!(m.nodes.iter().any(|x| (*x - 0.25).abs() < 1e-15));
        assert!(m.nodes.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 0.07 + 1e-12));
    }

    #[test]
    fn mass_and_stiffness_sums() {
        let m = Mesh1D::uniform(0.0, 2.0, 11);
        let (k, ms) = assemble(&m, |_| 1.0, |_| 1.0);
        let total: f64 = ms.diag.iter().sum::<f64>() + 2.0 * ms.off.iter().sum::<f64>();
        assert!((total - 2.0).abs() < 1e-13);
        let row: f64 = k.diag[3] + k.off[2] + k.off[3];
        assert!(row.abs() < 1e-12);
    }
}
