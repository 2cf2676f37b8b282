//! Bijections `f: X -> R` that generate a non-Diophantine arithmetic.
//!
//! The built-in [`Generator::paper_sin2`] is the piecewise sin²/arcsin map
//!
//! ```text
//! f⁻¹(x) = n/2 + ½ sin²(π(x − n/2))
//! f(x)   = n/2 + (1/π) arcsin √(2x − n)      for n/2 ≤ x ≤ (n+1)/2
//! ```
//!
//! which is a continuous increasing bijection of ℝ fixing every quarter
//! integer `k/4`. [`Generator::identity`] is the degenerate case under which
//! every deformed operation collapses to its ordinary counterpart.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Slack allowed on the arcsin radicand before it counts as a piece
/// selection failure.
pub const RADICAND_SLACK: f64 = 1e-12;

/// Default round-trip tolerance for `f⁻¹∘f` and `f∘f⁻¹`. arcsin amplifies
/// error near radicand 1, so this sits well above machine epsilon.
pub const DEFAULT_ROUND_TRIP_TOL: f64 = 1e-10;

const PAPER_NAME: &str = "paper-sin2";
const IDENTITY_NAME: &str = "identity";

/// Names accepted by [`Generator::by_name`].
pub const BUILTIN_NAMES: [&str; 2] = [PAPER_NAME, IDENTITY_NAME];

pub type RealMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Closed interval of validity in `X`. Bounds may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidGenerator(format!(
                "domain [{lo}, {hi}] is empty or malformed"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Clone)]
enum Kind {
    PaperSin2,
    Identity,
    Custom { forward: RealMap, inverse: RealMap },
}

/// A bijection `f` together with its inverse.
///
/// Cloning is cheap; custom maps are reference counted.
#[derive(Clone)]
pub struct Generator {
    name: String,
    domain: Interval,
    round_trip_tol: f64,
    kind: Kind,
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Generator")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("round_trip_tol", &self.round_trip_tol)
            .finish()
    }
}

impl Generator {
    /// The piecewise sin²/arcsin generator on all of ℝ.
    pub fn paper_sin2() -> Self {
        Generator {
            name: PAPER_NAME.to_string(),
            domain: Interval::REAL_LINE,
            round_trip_tol: DEFAULT_ROUND_TRIP_TOL,
            kind: Kind::PaperSin2,
        }
    }

    /// `f = f⁻¹ = id`.
    pub fn identity() -> Self {
        Generator {
            name: IDENTITY_NAME.to_string(),
            domain: Interval::REAL_LINE,
            round_trip_tol: DEFAULT_ROUND_TRIP_TOL,
            kind: Kind::Identity,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            PAPER_NAME => Some(Self::paper_sin2()),
            IDENTITY_NAME => Some(Self::identity()),
            _ => None,
        }
    }

    /// Wraps a user-supplied bijection.
    ///
    /// Monotonicity and the round trip are checked on a sample grid over the
    /// domain (or over `[-10, 10]` clipped to it when the domain is
    /// unbounded); this catches gross mistakes, it is not a proof.
    pub fn custom<F, G>(
        name: impl Into<String>,
        domain: Interval,
        forward: F,
        inverse: G,
    ) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let gen = Generator {
            name: name.into(),
            domain,
            round_trip_tol: DEFAULT_ROUND_TRIP_TOL,
            kind: Kind::Custom {
                forward: Arc::new(forward),
                inverse: Arc::new(inverse),
            },
        };
        gen.check_samples(1025)?;
        Ok(gen)
    }

    pub fn with_round_trip_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidConfig(format!("round-trip tolerance {tol}")));
        }
        self.round_trip_tol = tol;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn round_trip_tol(&self) -> f64 {
        self.round_trip_tol
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, Kind::Identity)
    }

    /// `f(x)`.
    pub fn forward(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("f({x}): argument is not finite")));
        }
        match &self.kind {
            Kind::PaperSin2 => eval_f(x),
            Kind::Identity => Ok(x),
            Kind::Custom { forward, .. } => {
                if !self.domain.contains(x) {
                    return Err(Error::Domain(format!(
                        "f({x}): outside domain [{}, {}]",
                        self.domain.lo, self.domain.hi
                    )));
                }
                finite(forward(x), "custom forward map")
            }
        }
    }

    /// `f⁻¹(r)`.
    pub fn inverse(&self, r: f64) -> Result<f64> {
        if !r.is_finite() {
            return Err(Error::Domain(format!("f⁻¹({r}): argument is not finite")));
        }
        match &self.kind {
            Kind::PaperSin2 => eval_f_inv(r),
            Kind::Identity => Ok(r),
            Kind::Custom { inverse, .. } => finite(inverse(r), "custom inverse map"),
        }
    }

    fn check_samples(&self, count: usize) -> Result<()> {
        let lo = self.domain.lo.max(-10.0);
        let hi = self.domain.hi.min(10.0);
        if lo >= hi {
            return Err(Error::InvalidGenerator(format!(
                "{}: no finite sample window in domain",
                self.name
            )));
        }
        let mut prev: Option<f64> = None;
        for i in 0..count {
            let x = lo + (hi - lo) * i as f64 / (count - 1) as f64;
            let r = self.forward(x)?;
            if let Some(p) = prev {
                if r <= p {
                    return Err(Error::InvalidGenerator(format!(
                        "{}: forward map not increasing near x = {x}",
                        self.name
                    )));
                }
            }
            let back = self.inverse(r)?;
            if (back - x).abs() > self.round_trip_tol * x.abs().max(1.0) {
                return Err(Error::InvalidGenerator(format!(
                    "{}: inverse(forward({x})) = {back}",
                    self.name
                )));
            }
            prev = Some(r);
        }
        Ok(())
    }
}

fn finite(v: f64, what: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(what))
    }
}

/// Integer `n` with `n/2 <= x <= (n+1)/2`; exact half-integers take the
/// lower piece.
fn piece_index(x: f64) -> f64 {
    let twice = 2.0 * x;
    let n = twice.floor();
    if n == twice {
        n - 1.0
    } else {
        n
    }
}

/// `f⁻¹(x) = n/2 + ½ sin²(π(x − n/2))`.
pub fn eval_f_inv(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("f⁻¹({x}): argument is not finite")));
    }
    let n = piece_index(x);
    let half_n = 0.5 * n;
    let s = (std::f64::consts::PI * (x - half_n)).sin();
    Ok(half_n + 0.5 * s * s)
}

/// `f(x) = n/2 + (1/π) arcsin √(2x − n)`.
pub fn eval_f(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("f({x}): argument is not finite")));
    }
    let n = piece_index(x);
    let radicand = 2.0 * x - n;
    if !(-RADICAND_SLACK..=1.0 + RADICAND_SLACK).contains(&radicand) {
        return Err(Error::PieceSelection { x, radicand });
    }
    let radicand = radicand.clamp(0.0, 1.0);
    Ok(0.5 * n + radicand.sqrt().asin() * std::f64::consts::FRAC_1_PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn quarter_integers_are_fixed() {
        for k in -40..=40 {
            let x = k as f64 / 4.0;
            assert!((eval_f(x).unwrap() - x).abs() <= 1e-13, "f({x})");
            assert!((eval_f_inv(x).unwrap() - x).abs() <= 1e-13, "f⁻¹({x})");
        }
    }

    #[test]
    fn density_anchor() {
        let rho = eval_f_inv(1.0 / TAU).unwrap();
        assert!((rho - 0.114924).abs() < 1e-6);
        assert!((eval_f(rho).unwrap() - 1.0 / TAU).abs() < 1e-12);
    }

    #[test]
    fn eighth_matches_direct_formula_and_bisection() {
        let direct = 0.5 * (PI / 8.0).sin().powi(2);
        let v = eval_f_inv(0.125).unwrap();
        assert!((v - 0.0732233).abs() < 1e-7);
        assert!((v - direct).abs() < 1e-15);

        // invert eval_f by bisection on [0, 0.5]
        let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if eval_f(mid).unwrap() < 0.125 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((0.5 * (lo + hi) - v).abs() < 1e-14);
    }

    #[test]
    fn round_trip_two_pi() {
        let x = eval_f_inv(TAU).unwrap();
        assert!((eval_f(x).unwrap() - TAU).abs() < 1e-12);
    }

    #[test]
    fn non_finite_input_is_domain_error() {
        assert!(matches!(eval_f(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(eval_f_inv(f64::INFINITY), Err(Error::Domain(_))));
        let g = Generator::paper_sin2();
        assert!(g.forward(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn pieces_join_continuously() {
        // f⁻¹ is C¹ across piece ends; f has a square-root cusp there, so its
        // jump over [b - ε, b + ε] is 2√(2ε)/π and vanishes only like √ε.
        for n in -10..=10 {
            let b = (n + 1) as f64 / 2.0;
            let eps = 1e-9;
            let jump = (eval_f_inv(b - eps).unwrap() - eval_f_inv(b + eps).unwrap()).abs();
            assert!(jump < 1e-7, "f⁻¹ jump {jump} at {b}");

            let mut last = f64::INFINITY;
            for k in 3..=12 {
                let eps = 10f64.powi(-k);
                let jump = (eval_f(b - eps).unwrap() - eval_f(b + eps).unwrap()).abs();
                let cusp = 2.0 * (2.0 * eps).sqrt() / PI;
                assert!(
                    jump <= 1.01 * cusp + 1e-12,
                    "f jump {jump} at {b}, eps {eps}"
                );
                assert!(jump < last);
                last = jump;
            }
            assert!(last < 1e-5);
        }
    }

    #[test]
    fn identity_is_identity() {
        let g = Generator::identity();
        assert_eq!(g.forward(3.7).unwrap(), 3.7);
        assert_eq!(g.inverse(-2.5).unwrap(), -2.5);
        assert!(g.is_identity());
    }

    #[test]
    fn lookup_by_name() {
        assert_eq!(
            Generator::by_name("paper-sin2").unwrap().name(),
            "paper-sin2"
        );
        assert!(Generator::by_name("identity").unwrap().is_identity());
        assert!(Generator::by_name("cubic").is_none());
    }

    #[test]
    fn custom_generator_accepts_bijection() {
        let g = Generator::custom("cube", Interval::REAL_LINE, |x| x * x * x, f64::cbrt).unwrap();
        assert!((g.forward(2.0).unwrap() - 8.0).abs() < 1e-15);
        assert!((g.inverse(27.0).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn custom_generator_rejects_decreasing_map() {
        let err = Generator::custom("neg", Interval::REAL_LINE, |x| -x, |r| -r).unwrap_err();
        assert!(matches!(err, Error::InvalidGenerator(_)));
    }

    #[test]
    fn custom_generator_rejects_bad_inverse() {
        let err = Generator::custom("bad", Interval::REAL_LINE, |x| 2.0 * x, |r| r).unwrap_err();
        assert!(matches!(err, Error::InvalidGenerator(_)));
    }

    #[test]
    fn custom_domain_is_enforced() {
        let g =
            Generator::custom("log", Interval::new(1e-3, 1e3).unwrap(), f64::ln, f64::exp).unwrap();
        assert!(matches!(g.forward(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn seeded_round_trip_sweep() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..10_000 {
            let x: f64 = rng.random_range(-10.0..10.0);
            let a = eval_f(eval_f_inv(x).unwrap()).unwrap();
            let b = eval_f_inv(eval_f(x).unwrap()).unwrap();
            assert!((a - x).abs() <= 1e-10, "f(f⁻¹({x})) = {a}");
            assert!((b - x).abs() <= 1e-10, "f⁻¹(f({x})) = {b}");
        }
    }

    proptest! {
        #[test]
        fn inverse_after_forward(x in -10.0f64..10.0) {
            let back = eval_f_inv(eval_f(x).unwrap()).unwrap();
            prop_assert!((back - x).abs() <= 1e-10);
        }

        #[test]
        fn forward_is_monotone(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            prop_assume!(a != b);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let (fl, fh) = (eval_f(lo).unwrap(), eval_f(hi).unwrap());
            let near_boundary = |x: f64| ((2.0 * x).round() - 2.0 * x).abs() < 2e-14;
            if near_boundary(lo) || near_boundary(hi) {
                prop_assert!(fl <= fh + 1e-14);
            } else {
                prop_assert!(fl < fh);
            }
        }
    }
}
