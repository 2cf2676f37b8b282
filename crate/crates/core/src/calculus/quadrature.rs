//! Ordinary (Newtonian) quadrature in the r-domain.
//!
//! Integrands are assumed piecewise continuous with known breakpoints. Each
//! piece is integrated as an open interval: samples that would land on a
//! piece end are pulled inside by a relative [`EDGE_INSET`], so an indicator
//! that jumps at a breakpoint contributes its one-sided limit.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EDGE_INSET: f64 = 1e-12;

const MIN_SIMPSON_DEPTH: u32 = 3;
const MAX_SIMPSON_DEPTH: u32 = 60;
const GAUSS_ORDER: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureMethod {
    AdaptiveSimpson,
    GaussLegendreComposite,
    /// Deformed Riemann sums over `oracle_panels` uniform r-domain panels.
    RiemannOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub method: QuadratureMethod,
    /// Absolute error target in the r-domain.
    pub tolerance: f64,
    /// Panel budget shared by all pieces of one integral.
    pub max_subdivisions: usize,
    pub oracle_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            method: QuadratureMethod::AdaptiveSimpson,
            tolerance: 1e-10,
            max_subdivisions: 1 << 20,
            oracle_panels: 1_000_000,
        }
    }
}

impl QuadratureConfig {
    pub fn with_method(mut self, method: QuadratureMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_oracle_panels(mut self, panels: usize) -> Self {
        self.oracle_panels = panels;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be positive and finite, got {}",
                self.tolerance
            )));
        }
        if self.max_subdivisions < 4 {
            return Err(Error::InvalidConfig(format!(
                "max_subdivisions must be at least 4, got {}",
                self.max_subdivisions
            )));
        }
        if self.oracle_panels == 0 {
            return Err(Error::InvalidConfig(
                "oracle_panels must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error_bound: f64,
    pub panels: usize,
}

/// Splits `[lo, hi]` at the breakpoints that fall strictly inside it.
pub fn pieces(lo: f64, hi: f64, breakpoints: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| b.is_finite() && *b > lo && *b < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut start = lo;
    for c in cuts.into_iter().chain(std::iter::once(hi)) {
        if c > start {
            out.push((start, c));
        }
        start = c;
    }
    out
}

/// Integrates `g` over `[lo, hi]` with the adaptive or Gauss–Legendre
/// method of `cfg`. `RiemannOracle` is not a plain r-domain rule and is
/// rejected here.
pub fn integrate<G>(
    g: G,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Estimate>
where
    G: Fn(f64) -> Result<f64>,
{
    cfg.validate()?;
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::Domain(format!("integration bounds [{lo}, {hi}]")));
    }
    let parts = pieces(lo, hi, breakpoints);
    let total_len = hi - lo;
    let mut acc = Accumulator::new(cfg.max_subdivisions);
    for &(a, b) in &parts {
        let tol = cfg.tolerance * (b - a) / total_len;
        match cfg.method {
            QuadratureMethod::AdaptiveSimpson => simpson_piece(&g, a, b, tol, &mut acc)?,
            QuadratureMethod::GaussLegendreComposite => gauss_piece(&g, a, b, tol, &mut acc)?,
            QuadratureMethod::RiemannOracle => return Err(Error::InvalidConfig(
                "riemann_oracle is evaluated by the deformed Riemann sum, not r-domain quadrature"
                    .into(),
            )),
        }
    }
    if acc.exhausted {
        return Err(Error::QuadratureBudget {
            estimate: acc.value,
            error_bound: acc.error,
            panels: acc.panels,
        });
    }
    Ok(Estimate {
        value: acc.value,
        error_bound: acc.error,
        panels: acc.panels,
    })
}

struct Accumulator {
    value: f64,
    error: f64,
    panels: usize,
    budget: usize,
    exhausted: bool,
}

impl Accumulator {
    fn new(budget: usize) -> Self {
        Accumulator {
            value: 0.0,
            error: 0.0,
            panels: 0,
            budget,
            exhausted: false,
        }
    }

    fn has_room(&self) -> bool {
        self.panels < self.budget
    }
}

fn sample<G: Fn(f64) -> Result<f64>>(g: &G, r: f64) -> Result<f64> {
    let v = g(r)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteIntegrand(r))
    }
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn simpson_piece<G: Fn(f64) -> Result<f64>>(
    g: &G,
    a: f64,
    b: f64,
    tol: f64,
    acc: &mut Accumulator,
) -> Result<()> {
    let inset = (b - a) * EDGE_INSET;
    let fa = sample(g, a + inset)?;
    let fb = sample(g, b - inset)?;
    let m = 0.5 * (a + b);
    let fm = sample(g, m)?;
    let panel = Panel {
        a,
        b,
        fa,
        fm,
        fb,
        whole: simpson(a, b, fa, fm, fb),
    };
    acc.panels += 1;
    simpson_recurse(g, panel, tol, 0, acc)
}

// Left-to-right recursion: summation order is fixed by the panel tree.
fn simpson_recurse<G: Fn(f64) -> Result<f64>>(
    g: &G,
    p: Panel,
    tol: f64,
    depth: u32,
    acc: &mut Accumulator,
) -> Result<()> {
    let m = 0.5 * (p.a + p.b);
    let lm = 0.5 * (p.a + m);
    let rm = 0.5 * (m + p.b);
    let flm = sample(g, lm)?;
    let frm = sample(g, rm)?;
    let left = simpson(p.a, m, p.fa, flm, p.fm);
    let right = simpson(m, p.b, p.fm, frm, p.fb);
    let diff = left + right - p.whole;
    let converged = depth >= MIN_SIMPSON_DEPTH && diff.abs() <= 15.0 * tol;
    if converged || depth >= MAX_SIMPSON_DEPTH || !acc.has_room() {
        if !converged {
            acc.exhausted = true;
        }
        acc.value += left + right + diff / 15.0;
        acc.error += diff.abs() / 15.0;
        return Ok(());
    }
    acc.panels += 1;
    simpson_recurse(
        g,
        Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
        },
        0.5 * tol,
        depth + 1,
        acc,
    )?;
    simpson_recurse(
        g,
        Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
        },
        0.5 * tol,
        depth + 1,
        acc,
    )
}

/// Nodes and weights of the Gauss–Legendre rule on `[-1, 1]`.
fn gauss_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| legendre_rule(GAUSS_ORDER))
}

fn legendre_rule(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-like starting guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

fn gauss_composite<G: Fn(f64) -> Result<f64>>(g: &G, a: f64, b: f64, panels: usize) -> Result<f64> {
    let rule = gauss_rule();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let half = 0.5 * h;
        let mid = lo + half;
        let mut s = 0.0;
        for &(x, w) in rule {
            s += w * sample(g, mid + half * x)?;
        }
        total += half * s;
    }
    Ok(total)
}

fn gauss_piece<G: Fn(f64) -> Result<f64>>(
    g: &G,
    a: f64,
    b: f64,
    tol: f64,
    acc: &mut Accumulator,
) -> Result<()> {
    let mut panels = 1usize;
    let mut prev = gauss_composite(g, a, b, panels)?;
    let mut last_diff = prev.abs();
    loop {
        let next_panels = panels * 2;
        if acc.panels + next_panels > acc.budget {
            acc.exhausted = true;
            acc.value += prev;
            acc.panels += panels;
            acc.error += last_diff;
            return Ok(());
        }
        let next = gauss_composite(g, a, b, next_panels)?;
        let diff = (next - prev).abs();
        panels = next_panels;
        if diff <= tol {
            acc.value += next;
            acc.error += diff;
            acc.panels += panels;
            return Ok(());
        }
        prev = next;
        last_diff = diff;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ok<F: Fn(f64) -> f64>(f: F) -> impl Fn(f64) -> Result<f64> {
        move |x| Ok(f(x))
    }

    #[test]
    fn gauss_rule_integrates_high_degree_polynomials() {
        let rule = legendre_rule(GAUSS_ORDER);
        let weight_sum: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((weight_sum - 2.0).abs() < 1e-14);
        // exact through degree 19
        let moment: f64 = rule.iter().map(|(x, w)| w * x.powi(18)).sum();
        assert!((moment - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_sine_over_half_period() {
        let cfg = QuadratureConfig::default();
        let est = integrate(ok(f64::sin), 0.0, PI, &[], &cfg).unwrap();
        assert!((est.value - 2.0).abs() < 1e-10, "{est:?}");
    }

    #[test]
    fn gauss_exponential() {
        let cfg = QuadratureConfig::default().with_method(QuadratureMethod::GaussLegendreComposite);
        let est = integrate(ok(f64::exp), 0.0, 1.0, &[], &cfg).unwrap();
        assert!((est.value - (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn step_function_with_breakpoint_is_exact() {
        let cfg = QuadratureConfig::default();
        let step = ok(|x: f64| if x < 1.0 { 0.0 } else { 3.0 });
        let est = integrate(&step, 0.0, 2.5, &[1.0], &cfg).unwrap();
        assert!((est.value - 4.5).abs() < 1e-11, "{est:?}");
        let cfg = cfg.with_method(QuadratureMethod::GaussLegendreComposite);
        let est = integrate(&step, 0.0, 2.5, &[1.0], &cfg).unwrap();
        assert!((est.value - 4.5).abs() < 1e-11);
    }

    #[test]
    fn budget_exhaustion_carries_estimate() {
        let cfg = QuadratureConfig {
            max_subdivisions: 8,
            tolerance: 1e-14,
            ..QuadratureConfig::default()
        };
        match integrate(ok(|x: f64| (50.0 * x).sin()), 0.0, 10.0, &[], &cfg) {
            Err(Error::QuadratureBudget {
                estimate,
                error_bound,
                ..
            }) => {
                assert!(estimate.is_finite());
                assert!(error_bound >= 0.0);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let cfg = QuadratureConfig::default();
        let r = integrate(ok(|x: f64| 1.0 / (x - 0.5)), 0.0, 1.0, &[], &cfg);
        assert!(matches!(r, Err(Error::NonFiniteIntegrand(_))));
    }

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::default().validate().is_ok());
        assert!(QuadratureConfig::default()
            .with_tolerance(0.0)
            .validate()
            .is_err());
        let cfg = QuadratureConfig {
            max_subdivisions: 3,
            ..QuadratureConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(QuadratureConfig::default()
            .with_oracle_panels(0)
            .validate()
            .is_err());
    }

    #[test]
    fn pieces_ignore_outside_and_duplicate_cuts() {
        let p = pieces(0.0, 4.0, &[5.0, 2.0, -1.0, 2.0, 0.0, 1.0]);
        assert_eq!(p, vec![(0.0, 1.0), (1.0, 2.0), (2.0, 4.0)]);
        assert!(pieces(1.0, 1.0, &[]).is_empty());
    }
}
