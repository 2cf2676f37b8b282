//! Non-Newtonian calculus over a [`Generator`].
//!
//! A map `a: X -> X` is carried to the r-domain by conjugation,
//! `ã = f ∘ a ∘ f⁻¹`. The derivative is `f⁻¹(ã'(f(x)))` and the integral is
//! `f⁻¹(∫_{f(x1)}^{f(x2)} ã(r) dr)`. All quadrature happens in the r-domain;
//! [`nn_integral_oracle`] recomputes the same integral from deformed
//! Riemann sums built only from ⊕, ⊖ and ⊙.

pub mod quadrature;

use crate::arithmetic::ArithmeticContext;
use crate::error::{Error, Result};
use crate::generator::Generator;

pub use quadrature::{Estimate, QuadratureConfig, QuadratureMethod};

/// Initial central-difference step in the r-domain.
pub const DERIVATIVE_STEP: f64 = 1e-4;
/// Richardson levels for [`nn_derivative`].
pub const DERIVATIVE_LEVELS: usize = 4;

/// A map `a: X -> X` paired with its conjugate `ã = f ∘ a ∘ f⁻¹`.
pub struct NnFunction<'g, A> {
    gen: &'g Generator,
    map: A,
}

impl<A: Fn(f64) -> f64> NnFunction<'_, A> {
    pub fn apply(&self, x: f64) -> f64 {
        (self.map)(x)
    }

    pub fn conjugate(&self, r: f64) -> Result<f64> {
        let x = self.gen.inverse(r)?;
        self.gen.forward((self.map)(x))
    }

    pub fn generator(&self) -> &Generator {
        self.gen
    }
}

pub fn conjugate<A: Fn(f64) -> f64>(gen: &Generator, a: A) -> NnFunction<'_, A> {
    NnFunction { gen, map: a }
}

/// `Da/Dx` at `x`, computed as `f⁻¹(ã'(f(x)))` with a Richardson-extrapolated
/// central difference in the r-domain.
///
/// Accuracy degrades within about 1e-3 of the half-integer piece
/// boundaries of the sin² generator, where `f∘f⁻¹` is ill-conditioned.
pub fn nn_derivative<A: Fn(f64) -> f64>(gen: &Generator, a: A, x: f64) -> Result<f64> {
    let func = conjugate(gen, a);
    let r = gen.forward(x)?;
    let mut prev_row: Vec<f64> = Vec::with_capacity(DERIVATIVE_LEVELS);
    let mut h = DERIVATIVE_STEP;
    for _ in 0..DERIVATIVE_LEVELS {
        let mut row = Vec::with_capacity(prev_row.len() + 1);
        row.push((func.conjugate(r + h)? - func.conjugate(r - h)?) / (2.0 * h));
        let mut factor = 4.0;
        for (j, &coarse) in prev_row.iter().enumerate() {
            let fine = row[j];
            row.push(fine + (fine - coarse) / (factor - 1.0));
            factor *= 4.0;
        }
        prev_row = row;
        h *= 0.5;
    }
    let slope = prev_row[DERIVATIVE_LEVELS - 1];
    if !slope.is_finite() {
        return Err(Error::Differentiation(format!(
            "non-finite r-domain slope at x = {x}"
        )));
    }
    gen.inverse(slope)
}

/// Default δ sequence for [`nn_derivative_limit`]: `1e-2 · 2⁻ᵏ`, k = 0..=20.
pub fn default_deltas() -> Vec<f64> {
    (0..=20).map(|k| 1e-2 * 0.5f64.powi(k)).collect()
}

/// Evaluates the literal quotient `(a(x ⊕ δ) ⊖ a(x)) ⊘ δ` along a decreasing
/// sequence of δ and extrapolates it to δ → 0.
///
/// Extrapolation is polynomial (Neville) in the r-domain step `f(δ)`, which
/// for the sin² generator shrinks like √δ rather than δ. The tableau entry
/// with the smallest change estimate is returned.
pub fn nn_derivative_limit<A: Fn(f64) -> f64>(
    gen: &Generator,
    a: A,
    x: f64,
    deltas: &[f64],
) -> Result<f64> {
    if deltas.len() < 2 {
        return Err(Error::Differentiation("need at least two deltas".into()));
    }
    if deltas.iter().any(|d| !(*d > 0.0 && d.is_finite()))
        || deltas.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::Differentiation(
            "deltas must be a strictly decreasing positive sequence".into(),
        ));
    }
    let ctx = ArithmeticContext::new(gen.clone())?;
    let ax = a(x);
    let mut steps = Vec::with_capacity(deltas.len());
    let mut quotients = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let q = ctx.div(ctx.sub(a(ctx.add(x, delta)?), ax)?, delta)?;
        steps.push(gen.forward(delta)?);
        quotients.push(gen.forward(q)?);
    }

    // Neville tableau extrapolated to step 0. Row i, column j uses
    // points i-j..=i.
    // Each estimate also carries a rounding floor that grows as the step
    // shrinks and with every extrapolation column.
    let scale = gen.forward(ax)?.abs().max(1.0);
    let noise = |i: usize, j: usize| 4.0 * f64::EPSILON * scale / steps[i] * 3f64.powi(j as i32);
    let n = steps.len();
    let mut prev_col = quotients.clone();
    let mut best = quotients[n - 1];
    let mut best_err = (quotients[n - 1] - quotients[n - 2]).abs() + noise(n - 1, 0);
    for j in 1..n.min(6) {
        let mut col = vec![f64::NAN; n];
        for i in j..n {
            let (hi_step, lo_step) = (steps[i - j], steps[i]);
            col[i] = (lo_step * prev_col[i - 1] - hi_step * prev_col[i]) / (lo_step - hi_step);
            let err = (col[i] - prev_col[i])
                .abs()
                .max((col[i] - prev_col[i - 1]).abs())
                + noise(i, j);
            if err.is_finite() && err < best_err {
                best_err = err;
                best = col[i];
            }
        }
        prev_col = col;
    }
    if !best.is_finite() || best_err > 1e-4 * best.abs().max(1.0) {
        return Err(Error::Differentiation(format!(
            "difference quotients do not settle at x = {x} (spread {best_err:e})"
        )));
    }
    gen.inverse(best)
}

/// `∫_{x1}^{x2} a(x) Dx`.
pub fn nn_integral<A: Fn(f64) -> f64>(
    gen: &Generator,
    a: A,
    x1: f64,
    x2: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    nn_integral_split(gen, a, x1, x2, &[], cfg)
}

/// [`nn_integral`] for a piecewise-continuous integrand whose
/// discontinuities sit at `breakpoints` (given in `X`).
pub fn nn_integral_split<A: Fn(f64) -> f64>(
    gen: &Generator,
    a: A,
    x1: f64,
    x2: f64,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64> {
    Ok(nn_integral_estimate(gen, a, x1, x2, breakpoints, cfg)?.0)
}

/// Returns the X-domain value together with the r-domain estimate.
pub fn nn_integral_estimate<A: Fn(f64) -> f64>(
    gen: &Generator,
    a: A,
    x1: f64,
    x2: f64,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<(f64, Estimate)> {
    cfg.validate()?;
    if !(x1.is_finite() && x2.is_finite()) || x1 > x2 {
        return Err(Error::Domain(format!(
            "integration interval [{x1}, {x2}] requires x1 <= x2"
        )));
    }
    if cfg.method == QuadratureMethod::RiemannOracle {
        let v = nn_integral_oracle(gen, a, x1, x2, cfg)?;
        let r = gen.forward(v)?;
        return Ok((
            v,
            Estimate {
                value: r,
                error_bound: f64::NAN,
                panels: cfg.oracle_panels,
            },
        ));
    }
    let (r1, r2) = (gen.forward(x1)?, gen.forward(x2)?);
    let cuts = breakpoints
        .iter()
        .map(|&b| gen.forward(b))
        .collect::<Result<Vec<_>>>()?;
    let func = conjugate(gen, a);
    let est = quadrature::integrate(|r| func.conjugate(r), r1, r2, &cuts, cfg)?;
    Ok((gen.inverse(est.value)?, est))
}

/// Deformed Riemann sum `⊕ᵢ a(ξᵢ) ⊙ (xᵢ₊₁ ⊖ xᵢ)` over `cfg.oracle_panels`
/// panels that are uniform in the r-domain, with `ξᵢ` the r-midpoint mapped
/// back to `X`. Uses nothing but the transported arithmetic.
pub fn nn_integral_oracle<A: Fn(f64) -> f64>(
    gen: &Generator,
    a: A,
    x1: f64,
    x2: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    cfg.validate()?;
    if !(x1.is_finite() && x2.is_finite()) || x1 > x2 {
        return Err(Error::Domain(format!(
            "integration interval [{x1}, {x2}] requires x1 <= x2"
        )));
    }
    let ctx = ArithmeticContext::new(gen.clone())?;
    let (r1, r2) = (gen.forward(x1)?, gen.forward(x2)?);
    let panels = cfg.oracle_panels;
    let width = (r2 - r1) / panels as f64;
    let node = |i: usize| -> Result<f64> {
        if i == panels {
            Ok(x2)
        } else {
            gen.inverse(r1 + i as f64 * width)
        }
    };
    let mut acc = ctx.zero();
    let mut left = x1;
    for i in 0..panels {
        let right = node(i + 1)?;
        let xi = gen.inverse(r1 + (i as f64 + 0.5) * width)?;
        let term = ctx.mul(a(xi), ctx.sub(right, left)?)?;
        acc = ctx.add(acc, term)?;
        left = right;
    }
    Ok(acc)
}

/// Both sides of linearity for the pair `(a, b)` on `[x1, x2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearityGap {
    /// `∫(a + b)` with ordinary pointwise +.
    pub integral_of_sum: f64,
    /// `∫a + ∫b`.
    pub sum_of_integrals: f64,
    /// `∫(a ⊕ b)`.
    pub integral_of_oplus: f64,
    /// `∫a ⊕ ∫b`.
    pub oplus_of_integrals: f64,
    /// `|∫(a + b) − (∫a + ∫b)|`.
    pub gap_ordinary: f64,
    /// `|f(∫(a ⊕ b)) − f(∫a ⊕ ∫b)|`, measured in the r-domain.
    pub gap_deformed: f64,
}

pub fn linearity_gap<A, B>(
    gen: &Generator,
    a: A,
    b: B,
    x1: f64,
    x2: f64,
    cfg: &QuadratureConfig,
) -> Result<LinearityGap>
where
    A: Fn(f64) -> f64,
    B: Fn(f64) -> f64,
{
    let ctx = ArithmeticContext::new(gen.clone())?;
    let int_a = nn_integral(gen, &a, x1, x2, cfg)?;
    let int_b = nn_integral(gen, &b, x1, x2, cfg)?;
    let integral_of_sum = nn_integral(gen, |x| a(x) + b(x), x1, x2, cfg)?;
    let integral_of_oplus = nn_integral(
        gen,
        |x| ctx.add(a(x), b(x)).unwrap_or(f64::NAN),
        x1,
        x2,
        cfg,
    )?;
    let sum_of_integrals = int_a + int_b;
    let oplus_of_integrals = ctx.add(int_a, int_b)?;
    Ok(LinearityGap {
        integral_of_sum,
        sum_of_integrals,
        integral_of_oplus,
        oplus_of_integrals,
        gap_ordinary: (integral_of_sum - sum_of_integrals).abs(),
        gap_deformed: (gen.forward(integral_of_oplus)? - gen.forward(oplus_of_integrals)?).abs(),
    })
}
