//! Local hidden-variable model of singlet-state coincidence probabilities.
//!
//! The hidden variable λ lives in `X = [0, (2π)']` with the constant
//! non-Newtonian density `ρ = f⁻¹(1/(2π))`. Each party's detector fires `+`
//! on a half-circle arc of the r-domain determined only by its own setting:
//!
//! ```text
//! party 1, +: [α, α+π)      party 1, −: [α+π, α+2π)
//! party 2, +: [β−π, β)      party 2, −: [β, β+π)
//! ```
//!
//! For `0 <= β−α <= π` the four pairwise overlaps are `[α, β)`, `[β, α+π)`,
//! `[α+π, β+π)` and `[β+π, α+2π)`, the integration ranges of the four
//! coincidence integrals. A joint probability is the non-Newtonian integral
//! of `χ¹ ⊙ χ² ⊙ ρ` over the full circle, which for the sin² generator gives
//! `½ sin²((β−α)/2)` for `++`/`−−` and `½ cos²((β−α)/2)` for `+−`/`−+`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arithmetic::ArithmeticContext;
use crate::calculus::{nn_integral, nn_integral_split, QuadratureConfig};
use crate::error::{Error, Result};
use crate::generator::Generator;

/// Samples per deterministic Monte-Carlo partition.
pub const MC_CHUNK: u64 = 1 << 16;

/// Rounding allowance on the `0 <= beta - alpha <= pi` range check.
pub const ANGLE_SLACK: f64 = 1e-12;

/// Description of the sampling scheme, recorded in run manifests.
pub const MC_ALGORITHM: &str =
    "ChaCha8Rng::seed_from_u64; one u64 per sample, r = (u >> 11) * 2^-53 * 2pi; \
     65536-sample partitions positioned with set_word_pos; counts summed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    PlusPlus,
    PlusMinus,
    MinusPlus,
    MinusMinus,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [
        Outcome::PlusPlus,
        Outcome::PlusMinus,
        Outcome::MinusPlus,
        Outcome::MinusMinus,
    ];

    pub fn signs(self) -> (Sign, Sign) {
        match self {
            Outcome::PlusPlus => (Sign::Plus, Sign::Plus),
            Outcome::PlusMinus => (Sign::Plus, Sign::Minus),
            Outcome::MinusPlus => (Sign::Minus, Sign::Plus),
            Outcome::MinusMinus => (Sign::Minus, Sign::Minus),
        }
    }

    pub fn from_signs(first: Sign, second: Sign) -> Self {
        match (first, second) {
            (Sign::Plus, Sign::Plus) => Outcome::PlusPlus,
            (Sign::Plus, Sign::Minus) => Outcome::PlusMinus,
            (Sign::Minus, Sign::Plus) => Outcome::MinusPlus,
            (Sign::Minus, Sign::Minus) => Outcome::MinusMinus,
        }
    }

    /// Outcomes with equal signs are correlated.
    pub fn is_correlated(self) -> bool {
        matches!(self, Outcome::PlusPlus | Outcome::MinusMinus)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.signs();
        write!(f, "{}{}", a.symbol(), b.symbol())
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "++" | "pp" => Ok(Outcome::PlusPlus),
            "+-" | "pm" => Ok(Outcome::PlusMinus),
            "-+" | "mp" => Ok(Outcome::MinusPlus),
            "--" | "mm" => Ok(Outcome::MinusMinus),
            _ => Err(Error::Domain(format!("unknown outcome {s:?}"))),
        }
    }
}

/// Half-circle arc `[lo_r, hi_r)` of the r-domain on which a detector
/// reports `sign`. `lo_r` is reduced to `[0, 2π)`; `hi_r = lo_r + π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorWindow {
    pub lo_r: f64,
    pub hi_r: f64,
    pub party: Party,
    pub sign: Sign,
    pub angle: f64,
}

impl DetectorWindow {
    /// Whether the r-domain point `r` (any real, taken mod 2π) is in the arc.
    pub fn contains_r(&self, r: f64) -> bool {
        (r - self.lo_r).rem_euclid(TAU) < PI
    }

    /// Arc ends reduced to `[0, 2π)`.
    pub fn ends(&self) -> [f64; 2] {
        [self.lo_r, self.hi_r.rem_euclid(TAU)]
    }
}

pub fn window(party: Party, sign: Sign, angle: f64) -> DetectorWindow {
    let lo = match (party, sign) {
        (Party::One, Sign::Plus) => angle,
        (Party::One, Sign::Minus) => angle + PI,
        (Party::Two, Sign::Plus) => angle - PI,
        (Party::Two, Sign::Minus) => angle,
    };
    let lo_r = lo.rem_euclid(TAU);
    // rem_euclid may round up to exactly 2π
    let lo_r = if lo_r >= TAU { 0.0 } else { lo_r };
    DetectorWindow {
        lo_r,
        hi_r: lo_r + PI,
        party,
        sign,
        angle,
    }
}

/// `χ(λ)`: 1 if `f(λ) mod 2π` lies in the window, else 0. Both values are
/// fixed points of every generator used here, so `χ ⊙ x` masks `x`.
pub fn window_indicator(gen: &Generator, w: &DetectorWindow, lam: f64) -> Result<f64> {
    Ok(if w.contains_r(gen.forward(lam)?) {
        1.0
    } else {
        0.0
    })
}

/// Sub-arcs of `[0, 2π)` on which both windows are open.
pub fn overlap_arcs(first: &DetectorWindow, second: &DetectorWindow) -> Vec<(f64, f64)> {
    let mut cuts = vec![0.0, TAU];
    cuts.extend(first.ends());
    cuts.extend(second.ends());
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut arcs: Vec<(f64, f64)> = Vec::new();
    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        if first.contains_r(mid) && second.contains_r(mid) {
            match arcs.last_mut() {
                Some(last) if last.1 == lo => last.1 = hi,
                _ => arcs.push((lo, hi)),
            }
        }
    }
    arcs
}

/// Total r-measure of the overlap of two windows.
pub fn overlap_measure(first: &DetectorWindow, second: &DetectorWindow) -> f64 {
    overlap_arcs(first, second)
        .iter()
        .map(|(lo, hi)| hi - lo)
        .sum()
}

fn outcome_windows(outcome: Outcome, alpha: f64, beta: f64) -> (DetectorWindow, DetectorWindow) {
    let (s1, s2) = outcome.signs();
    (window(Party::One, s1, alpha), window(Party::Two, s2, beta))
}

/// `ρ = f⁻¹(1/(2π))`.
pub fn density_value(gen: &Generator) -> Result<f64> {
    gen.inverse(1.0 / TAU)
}

/// `∫_{α'}^{β'} ρ(x) Dx` for `0 <= β − α <= π`.
pub fn arc_probability(
    gen: &Generator,
    alpha: f64,
    beta: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let spread = beta - alpha;
    if !(-ANGLE_SLACK..=PI + ANGLE_SLACK).contains(&spread) {
        return Err(Error::Domain(format!(
            "arc probability needs 0 <= beta - alpha <= pi, got {spread}"
        )));
    }
    let rho = density_value(gen)?;
    nn_integral(
        gen,
        |_| rho,
        gen.inverse(alpha)?,
        gen.inverse(beta.max(alpha))?,
        cfg,
    )
}

/// Coincidence probability from the full-circle integral of
/// `χ¹ ⊙ χ² ⊙ ρ`, split at the window ends.
pub fn joint_probability(
    gen: &Generator,
    outcome: Outcome,
    alpha: f64,
    beta: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let ctx = ArithmeticContext::new(gen.clone())?;
    let rho = density_value(gen)?;
    let (w1, w2) = outcome_windows(outcome, alpha, beta);
    let integrand = |lam: f64| -> f64 {
        let product = window_indicator(gen, &w1, lam)
            .and_then(|c1| Ok((c1, window_indicator(gen, &w2, lam)?)))
            .and_then(|(c1, c2)| ctx.mul(ctx.mul(c1, c2)?, rho));
        product.unwrap_or(f64::NAN)
    };
    let breakpoints = w1
        .ends()
        .into_iter()
        .chain(w2.ends())
        .map(|r| gen.inverse(r))
        .collect::<Result<Vec<_>>>()?;
    nn_integral_split(
        gen,
        integrand,
        gen.inverse(0.0)?,
        gen.inverse(TAU)?,
        &breakpoints,
        cfg,
    )
}

/// Trigonometric closed forms, independent of the generator.
pub fn joint_probability_closed(outcome: Outcome, alpha: f64, beta: f64) -> f64 {
    let half = 0.5 * (beta - alpha);
    if outcome.is_correlated() {
        0.5 * half.sin().powi(2)
    } else {
        0.5 * half.cos().powi(2)
    }
}

/// `f⁻¹(overlap measure / 2π)`: the coincidence integral evaluated without
/// quadrature. Under the identity generator this is the classical linear
/// model `m / 2π`.
pub fn joint_probability_overlap(
    gen: &Generator,
    outcome: Outcome,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    let (w1, w2) = outcome_windows(outcome, alpha, beta);
    gen.inverse(overlap_measure(&w1, &w2) / TAU)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointProbabilities {
    pub alpha: f64,
    pub beta: f64,
    pub p_pp: f64,
    pub p_pm: f64,
    pub p_mp: f64,
    pub p_mm: f64,
}

impl JointProbabilities {
    pub fn get(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::PlusPlus => self.p_pp,
            Outcome::PlusMinus => self.p_pm,
            Outcome::MinusPlus => self.p_mp,
            Outcome::MinusMinus => self.p_mm,
        }
    }

    pub fn total(&self) -> f64 {
        self.p_pp + self.p_pm + self.p_mp + self.p_mm
    }

    /// `E = P₊₊ + P₋₋ − P₊₋ − P₋₊`.
    pub fn correlator(&self) -> f64 {
        self.p_pp + self.p_mm - self.p_pm - self.p_mp
    }
}

pub fn joint_probabilities(
    gen: &Generator,
    alpha: f64,
    beta: f64,
    cfg: &QuadratureConfig,
) -> Result<JointProbabilities> {
    Ok(JointProbabilities {
        alpha,
        beta,
        p_pp: joint_probability(gen, Outcome::PlusPlus, alpha, beta, cfg)?,
        p_pm: joint_probability(gen, Outcome::PlusMinus, alpha, beta, cfg)?,
        p_mp: joint_probability(gen, Outcome::MinusPlus, alpha, beta, cfg)?,
        p_mm: joint_probability(gen, Outcome::MinusMinus, alpha, beta, cfg)?,
    })
}

pub fn joint_probabilities_closed(alpha: f64, beta: f64) -> JointProbabilities {
    JointProbabilities {
        alpha,
        beta,
        p_pp: joint_probability_closed(Outcome::PlusPlus, alpha, beta),
        p_pm: joint_probability_closed(Outcome::PlusMinus, alpha, beta),
        p_mp: joint_probability_closed(Outcome::MinusPlus, alpha, beta),
        p_mm: joint_probability_closed(Outcome::MinusMinus, alpha, beta),
    }
}

/// `E(α, β)` from the integral-backed probabilities.
pub fn correlator(gen: &Generator, alpha: f64, beta: f64, cfg: &QuadratureConfig) -> Result<f64> {
    Ok(joint_probabilities(gen, alpha, beta, cfg)?.correlator())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl ChshSettings {
    /// `(0, π/2, π/4, 3π/4)`.
    pub const CANONICAL: ChshSettings = ChshSettings {
        a: 0.0,
        a_prime: std::f64::consts::FRAC_PI_2,
        b: std::f64::consts::FRAC_PI_4,
        b_prime: 3.0 * std::f64::consts::FRAC_PI_4,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    pub settings: ChshSettings,
    /// `E(a,b), E(a,b′), E(a′,b), E(a′,b′)`.
    pub correlators: [f64; 4],
    pub s_value: f64,
}

/// `S = |E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)|`.
pub fn chsh(gen: &Generator, settings: ChshSettings, cfg: &QuadratureConfig) -> Result<ChshResult> {
    let ChshSettings {
        a,
        a_prime,
        b,
        b_prime,
    } = settings;
    let correlators = [
        correlator(gen, a, b, cfg)?,
        correlator(gen, a, b_prime, cfg)?,
        correlator(gen, a_prime, b, cfg)?,
        correlator(gen, a_prime, b_prime, cfg)?,
    ];
    let [ab, abp, apb, apbp] = correlators;
    Ok(ChshResult {
        settings,
        correlators,
        s_value: (ab - abp + apb + apbp).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
}

impl McConfig {
    pub fn new(samples: u64, seed: u64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidConfig(
                "Monte-Carlo needs at least one sample".into(),
            ));
        }
        Ok(McConfig { samples, seed })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub hits: u64,
    pub samples: u64,
    /// Relative frequency in the r-domain.
    pub frequency: f64,
    /// `f⁻¹(frequency)`.
    pub value: f64,
}

/// Outcome each party reports for hidden variable `lam`. Party 1 looks only
/// at `alpha`, party 2 only at `beta`.
pub fn local_outcomes(gen: &Generator, lam: f64, alpha: f64, beta: f64) -> Result<(Sign, Sign)> {
    let r = gen.forward(lam)?;
    let first = if window(Party::One, Sign::Plus, alpha).contains_r(r) {
        Sign::Plus
    } else {
        Sign::Minus
    };
    let second = if window(Party::Two, Sign::Plus, beta).contains_r(r) {
        Sign::Plus
    } else {
        Sign::Minus
    };
    Ok((first, second))
}

fn uniform_angle(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64) * TAU
}

/// Samples `r ~ U[0, 2π)`, sets `λ = f⁻¹(r)`, records both local outcomes
/// and returns `f⁻¹` of the relative frequency of `outcome`.
///
/// The stream is cut into [`MC_CHUNK`]-sample partitions that are processed
/// in parallel; each seeks to its own offset in one ChaCha8 stream, so the
/// result depends only on `(seed, samples)`.
pub fn mc_estimate(
    gen: &Generator,
    outcome: Outcome,
    alpha: f64,
    beta: f64,
    mc: &McConfig,
) -> Result<McEstimate> {
    if mc.samples == 0 {
        return Err(Error::InvalidConfig(
            "Monte-Carlo needs at least one sample".into(),
        ));
    }
    let chunks = mc.samples.div_ceil(MC_CHUNK);
    let hits = (0..chunks)
        .into_par_iter()
        .map(|chunk| -> Result<u64> {
            let start = chunk * MC_CHUNK;
            let end = (start + MC_CHUNK).min(mc.samples);
            let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
            // two 32-bit words per u64
            rng.set_word_pos(u128::from(start) * 2);
            let mut hits = 0u64;
            for _ in start..end {
                let lam = gen.inverse(uniform_angle(&mut rng))?;
                let (s1, s2) = local_outcomes(gen, lam, alpha, beta)?;
                if Outcome::from_signs(s1, s2) == outcome {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum::<u64>();
    let frequency = hits as f64 / mc.samples as f64;
    Ok(McEstimate {
        hits,
        samples: mc.samples,
        frequency,
        value: gen.inverse(frequency)?,
    })
}

/// Deviation allowed between [`mc_estimate`] and the exact probability at
/// `n_sigma` binomial standard errors: the largest move of `f⁻¹` over
/// `p ± n_sigma·σ_p`, with `p` the exact overlap frequency. To first order
/// this is `n_sigma · |(f⁻¹)'(p)| · σ_p`; it stays positive where the slope
/// of `f⁻¹` vanishes.
pub fn mc_tolerance(
    gen: &Generator,
    outcome: Outcome,
    alpha: f64,
    beta: f64,
    samples: u64,
    n_sigma: f64,
) -> Result<f64> {
    let (w1, w2) = outcome_windows(outcome, alpha, beta);
    let p = overlap_measure(&w1, &w2) / TAU;
    let sigma = (p * (1.0 - p) / samples as f64).sqrt();
    let centre = gen.inverse(p)?;
    let up = gen.inverse(p + n_sigma * sigma)?;
    let down = gen.inverse(p - n_sigma * sigma)?;
    Ok((up - centre).abs().max((down - centre).abs()))
}
