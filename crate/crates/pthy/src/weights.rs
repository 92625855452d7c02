//! Pre-averaging weight functions and the constants derived from them.
//!
//! A weight is a continuous function `g` on \[0,1\] with `g(0) = g(1) = 0`,
//! extended by zero outside \[0,1\]. The derived constants are
//!
//! ```text
//! psi_hy = ∫₀¹ g,   psi1 = ∫₀¹ g'²,   psi2 = ∫₀¹ g²,
//! psi_{f1,f2}(x) = ∫₀¹ ∫_{x+u-1}^{x+u+1} f1(u) f2(v) dv du,
//! kappa = ∫₋₂² psi_{g,g}²,  kappa_tilde = ∫₋₂² psi_{g',g'}²,
//! kappa_bar = ∫₋₂² psi_{g,g'}².
//! ```
//!
//! Weights are stored as piecewise-linear tables, so the inner `v`-integral
//! of `psi_{f1,f2}` has an exact piecewise antiderivative and only the outer
//! integrals need quadrature. The outer rule is composite Simpson on a
//! uniform grid, validated by recomputing at double resolution.

use crate::error::{Error, Result};

/// Tolerance for the resolution-doubling check on the kappa constants.
pub const KAPPA_QUADRATURE_TOL: f64 = 1e-8;

/// Number of Simpson panels on [-2,2] for the kappa constants. A multiple
/// of 8 keeps the half-integer kink points of `psi` on panel boundaries for
/// the built-in weight.
const KAPPA_PANELS: usize = 2048;

/// A piecewise-linear function on \[0,1\], zero outside.
///
/// Segment `i` covers `[knots[i], knots[i+1])` and evaluates as
/// `a[i] + b[i] * (x - knots[i])`.
#[derive(Debug, Clone)]
pub struct Piecewise {
    knots: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    /// Antiderivative values at the knots, with F(knots[0]) = 0.
    cum: Vec<f64>,
}

impl Piecewise {
    fn new(knots: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Self {
        let mut cum = Vec::with_capacity(knots.len());
        cum.push(0.0);
        for i in 0..a.len() {
            let h = knots[i + 1] - knots[i];
            cum.push(cum[i] + a[i] * h + 0.5 * b[i] * h * h);
        }
        Piecewise { knots, a, b, cum }
    }

    /// Piecewise-linear interpolant of the given (x, y) pairs.
    fn from_points(xs: &[f64], ys: &[f64]) -> Self {
        let mut a = Vec::with_capacity(xs.len() - 1);
        let mut b = Vec::with_capacity(xs.len() - 1);
        for i in 0..xs.len() - 1 {
            a.push(ys[i]);
            b.push((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]));
        }
        Piecewise::new(xs.to_vec(), a, b)
    }

    /// Piecewise-constant derivative of a piecewise-linear function.
    fn derivative(&self) -> Self {
        Piecewise::new(self.knots.clone(), self.b.clone(), vec![0.0; self.b.len()])
    }

    /// Index of the segment containing `x`; segments are half-open on the
    /// right, so a knot belongs to the segment that starts there.
    fn segment(&self, x: f64) -> usize {
        match self.knots.binary_search_by(|k| k.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.a.len() - 1),
            Err(i) => i - 1,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.knots[0] || x > *self.knots.last().unwrap() {
            return 0.0;
        }
        let i = self.segment(x);
        self.a[i] + self.b[i] * (x - self.knots[i])
    }

    /// Antiderivative F(x) = ∫_{0}^{x} f, clamped to the support.
    fn antiderivative(&self, x: f64) -> f64 {
        if x <= self.knots[0] {
            return 0.0;
        }
        if x >= *self.knots.last().unwrap() {
            return *self.cum.last().unwrap();
        }
        let i = self.segment(x);
        let d = x - self.knots[i];
        self.cum[i] + self.a[i] * d + 0.5 * self.b[i] * d * d
    }

    /// ∫ f over the support.
    fn integral(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// ∫ f² over the support, exact for piecewise-linear pieces.
    fn integral_sq(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.a.len() {
            let h = self.knots[i + 1] - self.knots[i];
            let (a, b) = (self.a[i], self.b[i]);
            total += a * a * h + a * b * h * h + b * b * h * h * h / 3.0;
        }
        total
    }
}

/// A weight function together with all constants derived from it.
#[derive(Debug, Clone)]
pub struct WeightProfile {
    g: Piecewise,
    g_prime: Piecewise,
    pub psi_hy: f64,
    pub psi1: f64,
    pub psi2: f64,
    pub kappa: f64,
    pub kappa_tilde: f64,
    pub kappa_bar: f64,
}

impl WeightProfile {
    /// `g(x)` with the zero extension outside \[0,1\].
    pub fn g(&self, x: f64) -> f64 {
        self.g.eval(x)
    }

    /// `g'(x)`; at interior kinks the value is the slope of the segment
    /// starting there, and zero outside \[0,1\].
    pub fn g_prime(&self, x: f64) -> f64 {
        self.g_prime.eval(x)
    }

    /// The weight as a piecewise function, usable with [`psi_cross`].
    pub fn g_fn(&self) -> &Piecewise {
        &self.g
    }

    /// The derivative as a piecewise function.
    pub fn g_prime_fn(&self) -> &Piecewise {
        &self.g_prime
    }

    /// Build a profile from tabulated (x, g(x)) pairs with linear
    /// interpolation; the derivative is the piecewise slope.
    pub fn from_table(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch {
                what: "weight table",
                expected: xs.len(),
                actual: ys.len(),
            });
        }
        if xs.len() < 2 {
            return Err(Error::InvalidParameter(
                "weight table needs at least two points".into(),
            ));
        }
        if xs[0] != 0.0 || *xs.last().unwrap() != 1.0 {
            return Err(Error::InvalidParameter(
                "weight table must span [0,1]".into(),
            ));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "weight table abscissae must be strictly increasing".into(),
            ));
        }
        if ys[0] != 0.0 || *ys.last().unwrap() != 0.0 {
            return Err(Error::InvalidParameter(
                "weight must satisfy g(0) = g(1) = 0".into(),
            ));
        }
        let g = Piecewise::from_points(xs, ys);
        Self::from_piecewise(g)
    }

    fn from_piecewise(g: Piecewise) -> Result<Self> {
        let g_prime = g.derivative();
        let psi_hy = g.integral();
        if psi_hy == 0.0 {
            return Err(Error::InvalidParameter("weight has psi_hy = 0".into()));
        }
        let psi1 = g_prime.integral_sq();
        let psi2 = g.integral_sq();
        let (kappa, kappa_tilde, kappa_bar) = kappa_quadrature(&g, &g_prime, KAPPA_PANELS)?;
        Ok(WeightProfile {
            g,
            g_prime,
            psi_hy,
            psi1,
            psi2,
            kappa,
            kappa_tilde,
            kappa_bar,
        })
    }
}

/// The triangular weight `g(x) = x ∧ (1-x)`.
///
/// Its first three constants are exact: psi_hy = 1/4, psi1 = 1,
/// psi2 = 1/12. The kappa constants come from quadrature.
pub fn make_min_weight() -> WeightProfile {
    let g = Piecewise::from_points(&[0.0, 0.5, 1.0], &[0.0, 0.5, 0.0]);
    WeightProfile::from_piecewise(g).expect("triangular weight quadrature converges")
}

/// `psi_{f1,f2}(x) = ∫₀¹ ∫_{x+u-1}^{x+u+1} f1(u) f2(v) dv du`, with both
/// functions treated as zero outside \[0,1\]. Zero for |x| ≥ 2.
pub fn psi_cross(f1: &Piecewise, f2: &Piecewise, x: f64) -> f64 {
    // Inner integral is exact through the antiderivative of f2. Between
    // breakpoints the u-integrand is a single cubic, so one Simpson
    // application per piece is exact. f1 may jump at piece boundaries
    // (piecewise-constant derivatives do), so endpoint values use the
    // piece's own polynomial, selected by the midpoint.
    let inner = |u: f64| f2.antiderivative(x + u + 1.0) - f2.antiderivative(x + u - 1.0);

    // Breakpoints in u: kinks of f1, plus points where a window edge
    // crosses a knot of f2.
    let mut cuts: Vec<f64> = Vec::new();
    cuts.extend(f1.knots.iter().copied());
    for &k in &f2.knots {
        cuts.push(k - x + 1.0);
        cuts.push(k - x - 1.0);
    }
    cuts.retain(|&c| (0.0..=1.0).contains(&c));
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();

    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let m = 0.5 * (a + b);
        let seg = f1.segment(m);
        let f1_piece = |u: f64| f1.a[seg] + f1.b[seg] * (u - f1.knots[seg]);
        total += (b - a) / 6.0
            * (f1_piece(a) * inner(a) + 4.0 * f1_piece(m) * inner(m) + f1_piece(b) * inner(b));
    }
    total
}

/// Composite Simpson for the three kappa integrals at a given panel count.
fn kappa_simpson(g: &Piecewise, g_prime: &Piecewise, panels: usize) -> (f64, f64, f64) {
    let (lo, hi) = (-2.0, 2.0);
    let h = (hi - lo) / panels as f64;
    let mut sums = [0.0f64; 3];
    let pairs: [(&Piecewise, &Piecewise); 3] = [(g, g), (g_prime, g_prime), (g, g_prime)];
    for (slot, &(f1, f2)) in pairs.iter().enumerate() {
        let sq = |x: f64| {
            let v = psi_cross(f1, f2, x);
            v * v
        };
        let mut acc = sq(lo) + sq(hi);
        for i in 1..panels {
            let x = lo + i as f64 * h;
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * sq(x);
        }
        sums[slot] = acc * h / 3.0;
    }
    (sums[0], sums[1], sums[2])
}

/// The three kappa constants with a resolution-doubling convergence check.
pub fn kappa_quadrature(
    g: &Piecewise,
    g_prime: &Piecewise,
    panels: usize,
) -> Result<(f64, f64, f64)> {
    let coarse = kappa_simpson(g, g_prime, panels);
    let fine = kappa_simpson(g, g_prime, panels * 2);
    let delta = (coarse.0 - fine.0)
        .abs()
        .max((coarse.1 - fine.1).abs())
        .max((coarse.2 - fine.2).abs());
    if delta > KAPPA_QUADRATURE_TOL {
        return Err(Error::QuadratureNonConvergence {
            delta,
            tol: KAPPA_QUADRATURE_TOL,
        });
    }
    Ok(fine)
}

/// Kappa constants of an existing profile, recomputed at the default
/// resolution. Exposed so callers can re-verify convergence.
pub fn kappa_constants(profile: &WeightProfile) -> Result<(f64, f64, f64)> {
    kappa_quadrature(profile.g_fn(), profile.g_prime_fn(), KAPPA_PANELS)
}

/// Kappa constants at an explicit outer panel count (still including the
/// internal resolution-doubling check).
pub fn kappa_at_resolution(profile: &WeightProfile, panels: usize) -> Result<(f64, f64, f64)> {
    kappa_quadrature(profile.g_fn(), profile.g_prime_fn(), panels)
}
