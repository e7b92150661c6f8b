//! Outburst radius distributions: a closed-form menu with exact moments,
//! support predicates and inverse-CDF sampling.
//!
//! The menu is fixed (no arbitrary user distributions) so that the moment
//! predicates and the support queries can be answered exactly.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The law of the outburst radius. All laws put zero mass on `{0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadiusDistribution<S: Scalar> {
    Deterministic { value: S },
    Uniform { lo: S, hi: S },
    Exponential { mean: S },
    Pareto { scale: S, alpha: S },
    /// Finite mixture of the base laws; weights must sum to 1.
    Mixture {
        components: Vec<(S, RadiusDistribution<S>)>,
    },
}

/// A moment value that may diverge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub enum Moment<S: Scalar> {
    Finite(S),
    Infinite,
}

impl<S: Scalar> Moment<S> {
    pub fn is_finite(&self) -> bool {
        matches!(self, Moment::Finite(_))
    }

    pub fn finite(&self) -> Option<S> {
        match self {
            Moment::Finite(v) => Some(*v),
            Moment::Infinite => None,
        }
    }
}

impl<S: Scalar> RadiusDistribution<S> {
    pub fn validate(&self) -> Result<()> {
        match self {
            RadiusDistribution::Deterministic { value } => {
                if *value <= S::zero() || !value.is_finite() {
                    return Err(Error::InvalidInput(
                        "deterministic radius must be a positive finite value".into(),
                    ));
                }
            }
            RadiusDistribution::Uniform { lo, hi } => {
                if *lo < S::zero() || *hi <= *lo || !hi.is_finite() {
                    return Err(Error::InvalidInput(
                        "uniform radius law needs 0 <= lo < hi".into(),
                    ));
                }
            }
            RadiusDistribution::Exponential { mean } => {
                if *mean <= S::zero() || !mean.is_finite() {
                    return Err(Error::InvalidInput("exponential mean must be > 0".into()));
                }
            }
            RadiusDistribution::Pareto { scale, alpha } => {
                if *scale <= S::zero() || *alpha <= S::zero() {
                    return Err(Error::InvalidInput(
                        "pareto law needs scale > 0 and alpha > 0".into(),
                    ));
                }
            }
            RadiusDistribution::Mixture { components } => {
                if components.is_empty() {
                    return Err(Error::EmptyInput("mixture with no components"));
                }
                let mut total = S::zero();
                for (w, law) in components {
                    if *w <= S::zero() {
                        return Err(Error::InvalidInput("mixture weights must be > 0".into()));
                    }
                    if matches!(law, RadiusDistribution::Mixture { .. }) {
                        return Err(Error::InvalidInput("mixtures cannot be nested".into()));
                    }
                    law.validate()?;
                    total = total + *w;
                }
                if (total - S::one()).abs() > S::from_f64(1e-9) {
                    return Err(Error::InvalidInput(format!(
                        "mixture weights sum to {total}, expected 1"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `P(R <= r)`.
    pub fn cdf(&self, r: S) -> S {
        if r < S::zero() {
            return S::zero();
        }
        match self {
            RadiusDistribution::Deterministic { value } => {
                if r >= *value {
                    S::one()
                } else {
                    S::zero()
                }
            }
            RadiusDistribution::Uniform { lo, hi } => ((r - *lo) / (*hi - *lo))
                .max(S::zero())
                .min(S::one()),
            RadiusDistribution::Exponential { mean } => S::one() - (-r / *mean).exp(),
            RadiusDistribution::Pareto { scale, alpha } => {
                if r < *scale {
                    S::zero()
                } else {
                    S::one() - (*scale / r).powf(*alpha)
                }
            }
            RadiusDistribution::Mixture { components } => components
                .iter()
                .fold(S::zero(), |acc, (w, law)| acc + *w * law.cdf(r)),
        }
    }

    /// Exact `d`-th moment, or the divergence flag.
    pub fn moment(&self, d: u32) -> Moment<S> {
        match self {
            RadiusDistribution::Deterministic { value } => Moment::Finite(value.powi(d as i32)),
            RadiusDistribution::Uniform { lo, hi } => {
                let p = d as i32 + 1;
                Moment::Finite(
                    (hi.powi(p) - lo.powi(p)) / (S::from_f64(p as f64) * (*hi - *lo)),
                )
            }
            RadiusDistribution::Exponential { mean } => {
                let mut fact = S::one();
                for k in 1..=d {
                    fact = fact * S::from_f64(k as f64);
                }
                Moment::Finite(mean.powi(d as i32) * fact)
            }
            RadiusDistribution::Pareto { scale, alpha } => {
                if *alpha <= S::from_f64(d as f64) {
                    Moment::Infinite
                } else {
                    Moment::Finite(
                        *alpha * scale.powi(d as i32) / (*alpha - S::from_f64(d as f64)),
                    )
                }
            }
            RadiusDistribution::Mixture { components } => {
                let mut acc = S::zero();
                for (w, law) in components {
                    match law.moment(d) {
                        Moment::Finite(m) => acc = acc + *w * m,
                        Moment::Infinite => return Moment::Infinite,
                    }
                }
                Moment::Finite(acc)
            }
        }
    }

    /// Whether `E[exp(phi R)]` is finite for some `phi > 0`.
    pub fn has_exponential_moment(&self) -> bool {
        match self {
            RadiusDistribution::Deterministic { .. }
            | RadiusDistribution::Uniform { .. }
            | RadiusDistribution::Exponential { .. } => true,
            RadiusDistribution::Pareto { .. } => false,
            RadiusDistribution::Mixture { components } => {
                components.iter().all(|(_, law)| law.has_exponential_moment())
            }
        }
    }

    /// Whether every interval `(0, delta)` carries mass.
    pub fn supports_near_zero(&self) -> bool {
        match self {
            RadiusDistribution::Deterministic { .. } => false,
            RadiusDistribution::Uniform { lo, .. } => *lo == S::zero(),
            RadiusDistribution::Exponential { .. } => true,
            RadiusDistribution::Pareto { .. } => false,
            RadiusDistribution::Mixture { components } => {
                components.iter().any(|(_, law)| law.supports_near_zero())
            }
        }
    }

    /// `inf { r > r0 : P(R <= r) > P(R <= r0) }` — the smallest support point
    /// above `r0`. The result `v` satisfies `P(R in [v, v + eps]) > 0` for
    /// every `eps > 0`, which is what the constructive growth machinery needs.
    ///
    /// Errors when `P(R <= r0) = 1` (nothing left above `r0`).
    pub fn min_support_above(&self, r0: S) -> Result<S> {
        if self.cdf(r0) >= S::one() {
            return Err(Error::InvalidInput(format!(
                "no mass above r0={r0}: cdf already 1"
            )));
        }
        match self {
            RadiusDistribution::Deterministic { value } => Ok(*value),
            RadiusDistribution::Uniform { lo, .. } => Ok(r0.max(*lo)),
            RadiusDistribution::Exponential { .. } => Ok(r0.max(S::zero())),
            RadiusDistribution::Pareto { scale, .. } => Ok(r0.max(*scale)),
            RadiusDistribution::Mixture { components } => {
                let mut best: Option<S> = None;
                for (_, law) in components {
                    if let Ok(v) = law.min_support_above(r0) {
                        best = Some(best.map_or(v, |b| if v < b { v } else { b }));
                    }
                }
                best.ok_or_else(|| {
                    Error::InvalidInput(format!("no mixture component has mass above {r0}"))
                })
            }
        }
    }

    /// Inverse CDF at `q` in `[0, 1)`. Mixtures are inverted by bisection.
    pub fn quantile(&self, q: S) -> S {
        debug_assert!(q >= S::zero() && q < S::one());
        match self {
            RadiusDistribution::Deterministic { value } => *value,
            RadiusDistribution::Uniform { lo, hi } => *lo + q * (*hi - *lo),
            RadiusDistribution::Exponential { mean } => -*mean * (S::one() - q).ln(),
            RadiusDistribution::Pareto { scale, alpha } => {
                *scale * (S::one() - q).powf(-S::one() / *alpha)
            }
            RadiusDistribution::Mixture { components } => {
                let mut hi = S::zero();
                for (_, law) in components {
                    hi = hi.max(law.quantile(q));
                }
                let mut lo = S::zero();
                for _ in 0..200 {
                    let mid = lo.half() + hi.half();
                    if self.cdf(mid) >= q {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            }
        }
    }

    /// One draw; always strictly positive.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        match self {
            RadiusDistribution::Deterministic { value } => *value,
            RadiusDistribution::Uniform { lo, hi } => {
                *lo + S::unit_open(rng) * (*hi - *lo)
            }
            RadiusDistribution::Exponential { mean } => -*mean * S::unit_open(rng).ln(),
            RadiusDistribution::Pareto { scale, alpha } => {
                *scale * S::unit_open(rng).powf(-S::one() / *alpha)
            }
            RadiusDistribution::Mixture { components } => {
                let u = S::unit(rng);
                let mut acc = S::zero();
                for (w, law) in components {
                    acc = acc + *w;
                    if u < acc {
                        return law.sample(rng);
                    }
                }
                components
                    .last()
                    .expect("validated mixture is nonempty")
                    .1
                    .sample(rng)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn det(v: f64) -> RadiusDistribution<f64> {
        RadiusDistribution::Deterministic { value: v }
    }

    #[test]
    fn moment_examples() {
        assert_eq!(det(2.0).moment(3), Moment::Finite(8.0));
        let u = RadiusDistribution::<f64>::Uniform { lo: 0.0, hi: 1.0 };
        match u.moment(2) {
            Moment::Finite(m) => assert!((m - 1.0 / 3.0).abs() < 1e-12),
            Moment::Infinite => panic!("uniform moment is finite"),
        }
        let p = RadiusDistribution::Pareto { scale: 1.0, alpha: 2.0 };
        assert_eq!(p.moment(3), Moment::Infinite);
        let p = RadiusDistribution::<f64>::Pareto { scale: 1.0, alpha: 4.0 };
        match p.moment(3) {
            Moment::Finite(m) => assert!((m - 4.0).abs() < 1e-12),
            Moment::Infinite => panic!("alpha > d has finite moment"),
        }
    }

    #[test]
    fn exponential_moment_examples() {
        assert!(det(1.0).has_exponential_moment());
        assert!(!RadiusDistribution::Pareto { scale: 1.0, alpha: 3.0 }.has_exponential_moment());
        assert!(RadiusDistribution::Exponential { mean: 1.0 }.has_exponential_moment());
    }

    #[test]
    fn min_support_above_examples() {
        assert_eq!(det(1.0).min_support_above(0.5).unwrap(), 1.0);
        let u = RadiusDistribution::Uniform { lo: 1.0, hi: 2.0 };
        assert_eq!(u.min_support_above(0.5).unwrap(), 1.0);
        let u = RadiusDistribution::Uniform { lo: 0.0, hi: 1.0 };
        assert_eq!(u.min_support_above(0.2).unwrap(), 0.2);
        // nothing above the essential supremum
        assert!(det(1.0).min_support_above(1.0).is_err());
        assert!(u.min_support_above(1.0).is_err());
        // pareto never saturates
        let p = RadiusDistribution::Pareto { scale: 2.0, alpha: 3.0 };
        assert_eq!(p.min_support_above(0.5).unwrap(), 2.0);
        assert_eq!(p.min_support_above(5.0).unwrap(), 5.0);
    }

    #[test]
    fn support_near_zero() {
        assert!(!det(1.0).supports_near_zero());
        assert!(RadiusDistribution::Uniform { lo: 0.0, hi: 1.0 }.supports_near_zero());
        assert!(!RadiusDistribution::Uniform { lo: 0.5, hi: 1.0 }.supports_near_zero());
        assert!(RadiusDistribution::Exponential { mean: 2.0 }.supports_near_zero());
    }

    #[test]
    fn samples_are_positive_and_match_cdf() {
        let laws = vec![
            det(1.5),
            RadiusDistribution::Uniform { lo: 0.0, hi: 2.0 },
            RadiusDistribution::Exponential { mean: 1.0 },
            RadiusDistribution::Pareto { scale: 1.0, alpha: 3.0 },
            RadiusDistribution::Mixture {
                components: vec![
                    (0.5, det(1.0)),
                    (0.5, RadiusDistribution::Uniform { lo: 2.0, hi: 3.0 }),
                ],
            },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for law in &laws {
            law.validate().unwrap();
            let n = 4000;
            let q = law.quantile(0.5);
            let expected = law.cdf(q); // 0.5 for continuous laws, 1 for atoms
            let mut below = 0usize;
            for _ in 0..n {
                let r = law.sample(&mut rng);
                assert!(r > 0.0, "law {law:?} sampled {r}");
                if r <= q {
                    below += 1;
                }
            }
            let frac = below as f64 / n as f64;
            assert!(
                (frac - expected).abs() < 0.05,
                "law {law:?}: fraction below q50 was {frac}, expected {expected}"
            );
        }
    }

    #[test]
    fn mixture_quantile_by_bisection() {
        let m = RadiusDistribution::<f64>::Mixture {
            components: vec![
                (0.5, RadiusDistribution::Uniform { lo: 0.0, hi: 1.0 }),
                (0.5, RadiusDistribution::Uniform { lo: 3.0, hi: 4.0 }),
            ],
        };
        m.validate().unwrap();
        let q = m.quantile(0.75);
        assert!((m.cdf(q) - 0.75).abs() < 1e-9);
        assert!(q > 3.0 && q < 4.0);
    }

    #[test]
    fn validation_rejects_bad_laws() {
        assert!(det(0.0).validate().is_err());
        assert!(RadiusDistribution::Uniform { lo: 1.0, hi: 1.0 }.validate().is_err());
        assert!(RadiusDistribution::Mixture {
            components: vec![(0.5, det(1.0))],
        }
        .validate()
        .is_err());
        assert!(RadiusDistribution::Mixture {
            components: vec![(
                1.0,
                RadiusDistribution::Mixture { components: vec![(1.0, det(1.0))] }
            )],
        }
        .validate()
        .is_err());
    }
}
