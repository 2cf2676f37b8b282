//! Transported arithmetic: `x ⊕ y = f⁻¹(f(x) + f(y))` and friends.
//!
//! Values of `X` are plain `f64`; the deformation lives entirely in the
//! operations. Every call recomputes `f` and `f⁻¹`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::generator::Generator;

/// `|f(y)|` below this is treated as a deformed zero divisor.
pub const DIVISOR_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone)]
pub struct ArithmeticContext {
    gen: Generator,
    zero: f64,
    one: f64,
}

impl ArithmeticContext {
    pub fn new(gen: Generator) -> Result<Self> {
        let zero = gen.inverse(0.0)?;
        let one = gen.inverse(1.0)?;
        Ok(ArithmeticContext { gen, zero, one })
    }

    pub fn generator(&self) -> &Generator {
        &self.gen
    }

    /// The deformed zero, `f⁻¹(0)`.
    pub fn zero(&self) -> f64 {
        self.zero
    }

    /// The deformed one, `f⁻¹(1)`.
    pub fn one(&self) -> f64 {
        self.one
    }

    /// `x ⊕ y`
    pub fn add(&self, x: f64, y: f64) -> Result<f64> {
        self.lift(self.gen.forward(x)? + self.gen.forward(y)?, "⊕")
    }

    /// `x ⊖ y`
    pub fn sub(&self, x: f64, y: f64) -> Result<f64> {
        self.lift(self.gen.forward(x)? - self.gen.forward(y)?, "⊖")
    }

    /// `x ⊙ y`
    pub fn mul(&self, x: f64, y: f64) -> Result<f64> {
        self.lift(self.gen.forward(x)? * self.gen.forward(y)?, "⊙")
    }

    /// `x ⊘ y`
    pub fn div(&self, x: f64, y: f64) -> Result<f64> {
        let fy = self.gen.forward(y)?;
        if fy.abs() < DIVISOR_FLOOR {
            return Err(Error::DivisionByZero(fy));
        }
        self.lift(self.gen.forward(x)? / fy, "⊘")
    }

    /// Order of `f(x)` against `f(y)`. For an increasing generator this is
    /// the ordinary order of `x` and `y`.
    pub fn compare(&self, x: f64, y: f64) -> Result<Ordering> {
        let (fx, fy) = (self.gen.forward(x)?, self.gen.forward(y)?);
        Ok(fx.total_cmp(&fy))
    }

    fn lift(&self, r: f64, op: &'static str) -> Result<f64> {
        if !r.is_finite() {
            return Err(Error::Overflow(op));
        }
        self.gen.inverse(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn paper() -> ArithmeticContext {
        ArithmeticContext::new(Generator::paper_sin2()).unwrap()
    }

    fn classical() -> ArithmeticContext {
        ArithmeticContext::new(Generator::identity()).unwrap()
    }

    #[test]
    fn deformed_constants_are_exact_for_sin2_generator() {
        let ctx = paper();
        assert_eq!(ctx.zero(), 0.0);
        assert!((ctx.one() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quarter_integer_sums() {
        let ctx = paper();
        assert!((ctx.add(0.25, 0.25).unwrap() - 0.5).abs() < 1e-13);
        assert!((ctx.sub(0.5, 0.25).unwrap() - 0.25).abs() < 1e-13);
    }

    #[test]
    fn identities_and_annihilator() {
        let ctx = paper();
        assert!((ctx.add(0.3, ctx.zero()).unwrap() - 0.3).abs() < 1e-12);
        assert!((ctx.mul(ctx.one(), 0.114924).unwrap() - 0.114924).abs() < 1e-12);
        assert_eq!(ctx.mul(ctx.zero(), 0.7).unwrap(), ctx.zero());
    }

    #[test]
    fn identity_generator_is_classical() {
        let ctx = classical();
        assert_eq!(ctx.add(2.0, 3.0).unwrap(), 5.0);
        assert_eq!(ctx.compare(5.0, 3.0).unwrap(), Ordering::Greater);
    }

    #[test]
    fn comparison() {
        let ctx = paper();
        assert_eq!(ctx.compare(0.1, 0.2).unwrap(), Ordering::Less);
        assert_eq!(ctx.compare(0.42, 0.42).unwrap(), Ordering::Equal);
    }

    #[test]
    fn division_by_deformed_zero() {
        let ctx = paper();
        assert!(matches!(ctx.div(1.0, 0.0), Err(Error::DivisionByZero(_))));
    }

    #[test]
    fn overflow_is_reported() {
        let ctx = classical();
        assert!(matches!(ctx.mul(1e200, 1e200), Err(Error::Overflow(_))));
    }

    #[test]
    fn seeded_field_laws() {
        use rand::{Rng, SeedableRng};
        let ctx = paper();
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..1000 {
            let x: f64 = rng.random_range(-3.0..3.0);
            let y: f64 = rng.random_range(-3.0..3.0);
            let z: f64 = rng.random_range(-3.0..3.0);
            let xy = ctx.add(x, y).unwrap();
            assert!((xy - ctx.add(y, x).unwrap()).abs() <= 1e-9);
            let l = ctx.add(xy, z).unwrap();
            let r = ctx.add(x, ctx.add(y, z).unwrap()).unwrap();
            assert!((l - r).abs() <= 1e-9, "associativity {l} vs {r}");
            let l = ctx.mul(x, xy).unwrap();
            let r = ctx
                .add(ctx.mul(x, x).unwrap(), ctx.mul(x, y).unwrap())
                .unwrap();
            assert!((l - r).abs() <= 1e-9, "distributivity {l} vs {r}");
        }
    }

    #[test]
    fn seeded_classical_degeneracy() {
        use rand::{Rng, SeedableRng};
        let ctx = classical();
        let mut rng = rand::rngs::StdRng::seed_from_u64(12);
        for _ in 0..1000 {
            let x: f64 = rng.random_range(-100.0..100.0);
            let y: f64 = rng.random_range(0.5..100.0);
            assert!((ctx.add(x, y).unwrap() - (x + y)).abs() <= 1e-15 * (x + y).abs().max(1.0));
            assert!((ctx.sub(x, y).unwrap() - (x - y)).abs() <= 1e-15 * (x - y).abs().max(1.0));
            assert!((ctx.mul(x, y).unwrap() - x * y).abs() <= 1e-15 * (x * y).abs().max(1.0));
            assert!((ctx.div(x, y).unwrap() - x / y).abs() <= 1e-15 * (x / y).abs().max(1.0));
        }
    }

    proptest! {
        #[test]
        fn sub_undoes_add(x in -5.0f64..5.0, y in -5.0f64..5.0) {
            let ctx = paper();
            let back = ctx.sub(ctx.add(x, y).unwrap(), y).unwrap();
            prop_assert!((back - x).abs() <= 1e-9);
        }

        #[test]
        fn div_undoes_mul(x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let ctx = paper();
            prop_assume!(ctx.generator().forward(y).unwrap().abs() >= 1e-6);
            let back = ctx.div(ctx.mul(x, y).unwrap(), y).unwrap();
            prop_assert!((back - x).abs() <= 1e-9);
        }
    }
}
