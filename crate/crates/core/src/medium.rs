//! Periodic 2D coefficients, cut geometry, fiber traces, local perturbation and source.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Cut direction θ = (θ₁, θ₂) along which the periodic lift is sampled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutVector {
    pub theta1: f64,
    pub theta2: f64,
    /// δ = θ₁/θ₂.
    pub delta: f64,
    /// Continued-fraction convergents (p, q) of δ.
    pub convergents: Vec<(i64, i64)>,
}

impl CutVector {
    /// Builds the cut vector and its convergents. Requires θ₂ > 0.
    pub fn new(theta1: f64, theta2: f64) -> Result<Self> {
        if !(theta2 > 0.0) || !theta1.is_finite() || !theta2.is_finite() {
            return Err(Error::Validation(format!(
                "cut vector needs finite theta1 and theta2 > 0, got ({theta1}, {theta2})"
            )));
        }
        let delta = theta1 / theta2;
        Ok(Self { theta1, theta2, delta, convergents: convergents(delta, 24) })
    }

    /// Segment length L = 1/θ₂ of one periodicity cell along the line.
    pub fn cell_length(&self) -> f64 {
        1.0 / self.theta2
    }
}

/// Continued-fraction convergents of `x`, stopping at `max_terms` or when exact.
pub fn convergents(x: f64, max_terms: usize) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0i64, x.floor() as i64, 1i64);
    out.push((p1, q1));
    let mut r = x - x.floor();
    for _ in 1..max_terms {
        if r.abs() < 1e-15 {
            break;
        }
        let inv = 1.0 / r;
        let a = inv.floor();
        if a > 1e9 {
            break;
        }
        let a = a as i64;
        let (p2, q2) = match (a.checked_mul(p1), a.checked_mul(q1)) {
            (Some(ap), Some(aq)) => (ap + p0, aq + q0),
            _ => break,
        };
        if q2 > 1_000_000_000_000 {
            break;
        }
        out.push((p2, q2));
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        r = inv - inv.floor();
    }
    out
}

/// Product kind of a 2D trigonometric term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrigKind {
    CosCos,
    CosSin,
    SinCos,
    SinSin,
}

/// amplitude · trig(2πm y₁) · trig(2πn y₂).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub m: u32,
    pub n: u32,
    pub kind: TrigKind,
    pub amplitude: f64,
}

/// Real 1-periodic trigonometric polynomial in two variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly2D {
    pub constant: f64,
    #[serde(default)]
    pub terms: Vec<TrigTerm>,
}

impl TrigPoly2D {
    /// Constant polynomial.
    pub fn constant(c: f64) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    /// Evaluates at (y₁, y₂).
    pub fn eval(&self, y1: f64, y2: f64) -> f64 {
        let mut v = self.constant;
        for t in &self.terms {
            let a1 = TWO_PI * t.m as f64 * y1;
            let a2 = TWO_PI * t.n as f64 * y2;
            let f = match t.kind {
                TrigKind::CosCos => a1.cos() * a2.cos(),
                TrigKind::CosSin => a1.cos() * a2.sin(),
                TrigKind::SinCos => a1.sin() * a2.cos(),
                TrigKind::SinSin => a1.sin() * a2.sin(),
            };
            v += t.amplitude * f;
        }
        v
    }

    /// Σ|amplitudes|, so values lie in [constant − bound, constant + bound].
    pub fn amplitude_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.amplitude.abs()).sum()
    }

    /// Sampled (min, max) on an n×n grid of the unit torus.
    pub fn sampled_bounds(&self, n: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let y1 = i as f64 / n as f64;
            for j in 0..n {
                let v = self.eval(y1, j as f64 / n as f64);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }
}

/// Value of the periodic lift along the fiber with offset `s`: coef(s + θ₁x, θ₂x).
pub fn trace_at(coef: &TrigPoly2D, s: f64, x: f64, cut: &CutVector) -> f64 {
    coef.eval(s + cut.theta1 * x, cut.theta2 * x)
}

/// Constant replacement of (μ, ρ) on (x_lo, x_hi).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub x_lo: f64,
    pub x_hi: f64,
    pub mu: f64,
    pub rho: f64,
}

/// Impedance z of the Robin traces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ImpedanceRule {
    /// z = ω.
    Omega,
    /// z fixed, must be positive.
    Fixed { value: f64 },
}

impl ImpedanceRule {
    /// Impedance at frequency ω.
    pub fn z(&self, omega: f64) -> f64 {
        match self {
            ImpedanceRule::Omega => omega,
            ImpedanceRule::Fixed { value } => *value,
        }
    }
}

/// Full description of the locally perturbed quasiperiodic medium.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediumSpec {
    pub mu_p: TrigPoly2D,
    pub rho_p: TrigPoly2D,
    pub cut: CutVector,
    pub a_left: f64,
    pub a_right: f64,
    pub perturbation: Vec<Perturbation>,
    pub impedance: ImpedanceRule,
}

impl MediumSpec {
    /// Homogeneous medium μ_p = ρ_p = 1 with z = ω and no perturbation.
    pub fn homogeneous(theta1: f64, theta2: f64, cells_each_side: i64) -> Result<Self> {
        let cut = CutVector::new(theta1, theta2)?;
        let l = cut.cell_length();
        Ok(Self {
            mu_p: TrigPoly2D::constant(1.0),
            rho_p: TrigPoly2D::constant(1.0),
            a_left: -(cells_each_side as f64) * l,
            a_right: cells_each_side as f64 * l,
            cut,
            perturbation: Vec::new(),
            impedance: ImpedanceRule::Omega,
        })
    }

    /// The medium used in the numerical section: μ_p = 1.5 + cos·cos, ρ_p = 1.5 + 0.5 sin + 0.5 sin,
    /// θ = (cos π/3, sin π/3), endpoints ±1 snapped to ±1/θ₂, two constant inclusions, z = ω.
    pub fn paper() -> Self {
        let th = std::f64::consts::FRAC_PI_3;
        let cut = CutVector::new(th.cos(), th.sin()).expect("valid cut");
        let l = cut.cell_length();
        Self {
            mu_p: TrigPoly2D {
                constant: 1.5,
                terms: vec![TrigTerm { m: 1, n: 1, kind: TrigKind::CosCos, amplitude: 1.0 }],
            },
            rho_p: TrigPoly2D {
                constant: 1.5,
                terms: vec![
                    TrigTerm { m: 1, n: 0, kind: TrigKind::SinCos, amplitude: 0.5 },
                    TrigTerm { m: 0, n: 1, kind: TrigKind::CosSin, amplitude: 0.5 },
                ],
            },
            cut,
            a_left: -l,
            a_right: l,
            perturbation: vec![
                Perturbation { x_lo: -0.8, x_hi: -0.3, mu: 2.0, rho: 1.0 },
                Perturbation { x_lo: 0.2, x_hi: 0.7, mu: 1.0, rho: 3.0 },
            ],
            impedance: ImpedanceRule::Omega,
        }
    }

    /// Effective (μ, ρ) at x on the s = 0 line.
    pub fn effective_coefficient(&self, x: f64) -> (f64, f64) {
        for p in &self.perturbation {
            if x > p.x_lo && x < p.x_hi {
                return (p.mu, p.rho);
            }
        }
        (trace_at(&self.mu_p, 0.0, x, &self.cut), trace_at(&self.rho_p, 0.0, x, &self.cut))
    }

    /// Perturbation breakpoints, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.perturbation.iter().flat_map(|p| [p.x_lo, p.x_hi]).collect();
        b.sort_by(|a, c| a.partial_cmp(c).unwrap());
        b
    }
}

/// Outcome of [`validate`].
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub mu_bounds: (f64, f64),
    pub rho_bounds: (f64, f64),
    pub endpoint_residuals: (f64, f64),
    pub convergents: Vec<(i64, i64)>,
    /// Smallest q with |δ − p/q| < 1e−12, if any.
    pub rational_denominator: Option<i64>,
    pub warnings: Vec<String>,
    /// Medium with endpoints snapped to multiples of 1/θ₂.
    pub medium: MediumSpec,
}

/// Grid size for sampled positivity checks.
pub const POSITIVITY_GRID: usize = 256;

/// Checks positivity and endpoint integrality, snapping endpoints whose residual
/// |a·θ₂ − round(a·θ₂)| is at most `tol · max(1, |a·θ₂|)`.
pub fn validate(medium: &MediumSpec, tol: f64) -> Result<ValidationReport> {
    let mut warnings = Vec::new();
    let mu_bounds = medium.mu_p.sampled_bounds(POSITIVITY_GRID);
    let rho_bounds = medium.rho_p.sampled_bounds(POSITIVITY_GRID);
    for (name, b) in [("mu_p", mu_bounds), ("rho_p", rho_bounds)] {
        if b.0 <= 0.0 {
            return Err(Error::Validation(format!("{name} is not positive: sampled minimum {}", b.0)));
        }
    }
    for p in &medium.perturbation {
        if !(p.mu > 0.0 && p.rho > 0.0) {
            return Err(Error::Validation(format!("perturbation values must be positive: {p:?}")));
        }
        if !(p.x_lo < p.x_hi) || p.x_lo <= medium.a_left || p.x_hi >= medium.a_right {
            return Err(Error::Validation(format!(
                "perturbation interval ({}, {}) must lie inside (a_left, a_right)",
                p.x_lo, p.x_hi
            )));
        }
    }
    let bp = medium.breakpoints();
    let mut sorted = medium.perturbation.clone();
    sorted.sort_by(|a, b| a.x_lo.partial_cmp(&b.x_lo).unwrap());
    for w in sorted.windows(2) {
        if w[1].x_lo < w[0].x_hi {
            return Err(Error::Validation(format!("perturbation intervals overlap: {bp:?}")));
        }
    }
    let th2 = medium.cut.theta2;
    let mut snapped = medium.clone();
    let mut residuals = [0.0; 2];
    for (i, a) in [medium.a_left, medium.a_right].into_iter().enumerate() {
        let at = a * th2;
        let k = at.round();
        let res = (at - k).abs();
        residuals[i] = res;
        if res > tol * at.abs().max(1.0) {
            return Err(Error::Validation(format!(
                "endpoint {a} gives a*theta2 = {at}, residual {res} exceeds snap tolerance"
            )));
        }
        let a_new = k / th2;
        if res > 0.0 {
            if res > 1e-14 {
                warnings.push(format!("endpoint {a} snapped to {a_new} (a*theta2 residual {res:.3e})"));
            }
            if i == 0 {
                snapped.a_left = a_new;
            } else {
                snapped.a_right = a_new;
            }
        }
    }
    if !(snapped.a_left < snapped.a_right) {
        return Err(Error::Validation(format!(
            "snapped interval ({}, {}) is empty",
            snapped.a_left, snapped.a_right
        )));
    }
    for p in &snapped.perturbation {
        if p.x_lo <= snapped.a_left || p.x_hi >= snapped.a_right {
            return Err(Error::Validation("perturbation leaves the snapped interval".into()));
        }
    }
    if let ImpedanceRule::Fixed { value } = medium.impedance {
        if !(value > 0.0) {
            return Err(Error::Validation(format!("fixed impedance must be positive, got {value}")));
        }
    }
    let conv = medium.cut.convergents.clone();
    let delta = medium.cut.delta;
    let rational_denominator =
        conv.iter().find(|(p, q)| (delta - *p as f64 / *q as f64).abs() < 1e-12).map(|c| c.1);
    if let Some(q) = rational_denominator {
        if q < 10_000 {
            warnings.push(format!("delta = {delta} is numerically rational with denominator {q}"));
        }
    }
    Ok(ValidationReport {
        mu_bounds,
        rho_bounds,
        endpoint_residuals: (residuals[0], residuals[1]),
        convergents: conv,
        rational_denominator,
        warnings,
        medium: snapped,
    })
}

/// Shape of the source term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    /// amplitude · exp(sharpness·(1 − 1/(1 − r²))) for |r| < 1, r = (x − center)/width.
    Bump,
    /// amplitude · exp(−r²), cut at |r| = 8.
    Gaussian,
    /// amplitude on (center − width, center + width).
    Indicator,
}

/// Source term f.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub kind: SourceKind,
    #[serde(default)]
    pub center: f64,
    pub width: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "hundred")]
    pub sharpness: f64,
}

fn one() -> f64 {
    1.0
}
fn hundred() -> f64 {
    100.0
}

impl SourceSpec {
    /// The smooth cut-off bump on (−1, 1) used in the numerical section.
    pub fn paper() -> Self {
        Self { kind: SourceKind::Bump, center: 0.0, width: 1.0, amplitude: 1.0, sharpness: 100.0 }
    }

    /// Zero source.
    pub fn zero() -> Self {
        Self { kind: SourceKind::Indicator, center: 0.0, width: 0.5, amplitude: 0.0, sharpness: 100.0 }
    }

    /// Half-open support (lo, hi).
    pub fn support(&self) -> (f64, f64) {
        let w = match self.kind {
            SourceKind::Gaussian => 8.0 * self.width,
            _ => self.width,
        };
        (self.center - w, self.center + w)
    }

    /// f(x).
    pub fn eval(&self, x: f64) -> f64 {
        let r = (x - self.center) / self.width;
        match self.kind {
            SourceKind::Bump => {
                if r.abs() < 1.0 {
                    self.amplitude * (self.sharpness * (1.0 - 1.0 / (1.0 - r * r))).exp()
                } else {
                    0.0
                }
            }
            SourceKind::Gaussian => {
                if r.abs() < 8.0 {
                    self.amplitude * (-r * r).exp()
                } else {
                    0.0
                }
            }
            SourceKind::Indicator => {
                if r.abs() < 1.0 {
                    self.amplitude
                } else {
                    0.0
                }
            }
        }
    }

    /// Checks that the support lies strictly inside (a_left, a_right).
    pub fn validate(&self, medium: &MediumSpec) -> Result<()> {
        if !(self.width > 0.0) {
            return Err(Error::Validation("source width must be positive".into()));
        }
        let (lo, hi) = self.support();
        if lo <= medium.a_left || hi >= medium.a_right {
            return Err(Error::Validation(format!(
                "source support ({lo}, {hi}) not inside ({}, {})",
                medium.a_left, medium.a_right
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_trace() {
        let c = TrigPoly2D::constant(3.25);
        let cut = CutVector::new(0.3, 0.7).unwrap();
        assert_eq!(trace_at(&c, 0.4, 1.7, &cut), 3.25);
    }

    #[test]
    fn paper_rho_at_origin() {
        let m = MediumSpec::paper();
        assert!((trace_at(&m.rho_p, 0.0, 0.0, &m.cut) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn cos_plus_cos_at_origin() {
        let f = TrigPoly2D {
            constant: 0.0,
            terms: vec![
                TrigTerm { m: 1, n: 0, kind: TrigKind::CosCos, amplitude: 1.0 },
                TrigTerm { m: 0, n: 1, kind: TrigKind::CosCos, amplitude: 1.0 },
            ],
        };
        let cut = CutVector::new(0.5, 0.8).unwrap();
        assert!((trace_at(&f, 0.0, 0.0, &cut) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn perturbation_overrides() {
        let mut m = MediumSpec::paper();
        m.perturbation = vec![Perturbation { x_lo: -0.2, x_hi: 0.2, mu: 2.0, rho: 3.0 }];
        assert_eq!(m.effective_coefficient(0.0), (2.0, 3.0));
        let x = 5.3;
        assert_eq!(
            m.effective_coefficient(x),
            (trace_at(&m.mu_p, 0.0, x, &m.cut), trace_at(&m.rho_p, 0.0, x, &m.cut))
        );
        let h = MediumSpec::homogeneous(0.5, 0.8, 1).unwrap();
        assert_eq!(h.effective_coefficient(0.1), (1.0, 1.0));
    }

    #[test]
    fn paper_endpoints_snap() {
        let mut m = MediumSpec::paper();
        m.a_left = -1.0;
        m.a_right = 1.0;
        assert!(validate(&m, 1e-9).is_err());
        let r = validate(&m, 0.5).unwrap();
        let l = 1.0 / m.cut.theta2;
        assert!((r.medium.a_right - l).abs() < 1e-14);
        assert!((r.medium.a_left + l).abs() < 1e-14);
        assert_eq!(r.warnings.len(), 2);
        assert!((r.mu_bounds.0 - 0.5).abs() < 1e-9 && (r.mu_bounds.1 - 2.5).abs() < 1e-9);
    }

    #[test]
    fn non_elliptic_rejected() {
        let mut m = MediumSpec::paper();
        m.mu_p.constant = 1.0;
        assert!(matches!(validate(&m, 0.5), Err(Error::Validation(_))));
    }

    #[test]
    fn convergents_of_inverse_sqrt3() {
        let d = 1.0 / 3f64.sqrt();
        let c = convergents(d, 20);
        for (p, q) in c.iter().skip(1) {
            assert!((d - *p as f64 / *q as f64).abs() < 1.0 / (*q as f64 * *q as f64));
        }
    }

    #[test]
    fn bump_source() {
        let f = SourceSpec::paper();
        assert!((f.eval(0.0) - 1.0).abs() < 1e-15);
        assert_eq!(f.eval(1.0), 0.0);
        assert!(f.eval(0.9) > 0.0 && f.eval(0.9) < 1e-20);
    }
}
