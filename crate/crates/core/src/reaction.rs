//! Ignition-type reaction nonlinearities and their Lipschitz data.
//!
//! Both families vanish outside `(θ₀, 1)` and are positive inside (for
//! `k > 0`):
//!
//! * `Hat`:       `f(T) = k (T-θ₀)₊ (1-T)₊`
//! * `Quadratic`: `f(T) = k [(T-θ₀)₊]² (1-T)₊`
//!
//! The hat family grows linearly at the ignition point; the quadratic family
//! satisfies the pointwise bound `f(T) ≤ k_min [(T-θ₀)₊]²`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonlinearityFamily {
    Hat,
    Quadratic,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    pub family: NonlinearityFamily,
    /// Amplitude, ≥ 0.
    pub k: f64,
    /// Ignition temperature, in (0,1).
    pub theta0: f64,
}

impl NonlinearitySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.k >= 0.0) {
            return Err(Error::Config(format!(
                "reaction amplitude must be ≥ 0, got {}",
                self.k
            )));
        }
        if !(self.theta0 > 0.0 && self.theta0 < 1.0) {
            return Err(Error::Config(format!(
                "ignition temperature must lie in (0,1), got {}",
                self.theta0
            )));
        }
        Ok(())
    }

    /// Reaction rate at temperature `T` (defined on all of ℝ).
    pub fn value(&self, t: f64) -> f64 {
        let up = (t - self.theta0).max(0.0);
        let down = (1.0 - t).max(0.0);
        match self.family {
            NonlinearityFamily::Hat => self.k * up * down,
            NonlinearityFamily::Quadratic => self.k * up * up * down,
        }
    }

    /// Upper bound for `‖f'‖_{L∞([0,1])}`, computed analytically per family.
    ///
    /// Hat: `|f'| = k|1+θ₀-2T|`, maximal at the interval ends, giving
    /// `k(1-θ₀)`. Quadratic: `f' = k(T-θ₀)(2+θ₀-3T)`, and on `[θ₀,1]` the
    /// magnitude is maximal at `T = 1` with value `k(1-θ₀)²`.
    pub fn lipschitz_bound(&self) -> f64 {
        let w = 1.0 - self.theta0;
        match self.family {
            NonlinearityFamily::Hat => self.k * w,
            NonlinearityFamily::Quadratic => self.k * w * w,
        }
    }

    /// Smallest `k_min` with `f(T) ≤ k_min [(T-θ₀)₊]²` on `[0,1]`, as the
    /// supremum of `f(T)/(T-θ₀)²` over a dense grid (`f64::INFINITY` when the
    /// ratio is unbounded), together with whether it is finite.
    ///
    /// The hat family fails (the ratio behaves like `k(1-T)/(T-θ₀)` near
    /// ignition); the quadratic family yields `k(1-θ₀)`, the supremum of
    /// `k(1-T)` as `T ↓ θ₀`.
    pub fn quadratic_growth_check(&self) -> (f64, bool) {
        if self.k == 0.0 {
            return (0.0, true);
        }
        match self.family {
            NonlinearityFamily::Hat => (f64::INFINITY, false),
            NonlinearityFamily::Quadratic => {
                // ratio = k (1-T)₊ on (θ₀, 1]; confirm the analytic supremum
                // on a dense grid before returning it
                let n = 100_000;
                let mut sup: f64 = 0.0;
                for i in 0..=n {
                    let t = self.theta0 + (1.0 - self.theta0) * i as f64 / n as f64;
                    let d = t - self.theta0;
                    if d > 0.0 {
                        sup = sup.max(self.value(t) / (d * d));
                    }
                }
                let analytic = self.k * (1.0 - self.theta0);
                debug_assert!(sup <= analytic + 1e-12 * analytic.max(1.0));
                (analytic.max(sup), true)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn hat(k: f64, theta0: f64) -> NonlinearitySpec {
        NonlinearitySpec {
            family: NonlinearityFamily::Hat,
            k,
            theta0,
        }
    }

    fn quad(k: f64, theta0: f64) -> NonlinearitySpec {
        NonlinearitySpec {
            family: NonlinearityFamily::Quadratic,
            k,
            theta0,
        }
    }

    #[test]
    fn ignition_values() {
        let f = hat(1.0, 0.25);
        assert_eq!(f.value(0.1), 0.0);
        assert_eq!(f.value(1.0), 0.0);
        assert_eq!(f.value(0.25), 0.0);
        assert!((f.value(0.625) - 0.140625).abs() < 1e-15);
        // positive strictly inside the ignition interval
        assert!(f.value(0.3) > 0.0);
        assert!(f.value(0.99) > 0.0);
    }

    #[test]
    fn zero_outside_ignition_interval_exactly() {
        for spec in [hat(2.0, 0.3), quad(1.5, 0.3)] {
            for t in [-3.0, 0.0, 0.3, 1.0, 1.5, 10.0] {
                assert_eq!(spec.value(t), 0.0, "family {:?}, T={t}", spec.family);
            }
        }
    }

    #[test]
    fn lipschitz_bound_hat() {
        assert!((hat(1.0, 0.25).lipschitz_bound() - 0.75).abs() < 1e-15);
        assert_eq!(hat(0.0, 0.4).lipschitz_bound(), 0.0);
    }

    #[test]
    fn lipschitz_bound_quadratic_matches_calculus() {
        // d/dT [2(T-0.5)²(1-T)] on [0.5,1]: extremes at T=(1+2θ₀)/3 and T=1;
        // |f'(1)| = k(1-θ₀)² dominates.
        let spec = quad(2.0, 0.5);
        assert!((spec.lipschitz_bound() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_bound_verified_by_dense_difference_quotients() {
        for spec in [hat(1.0, 0.25), quad(2.0, 0.5), quad(3.0, 0.2)] {
            let n = 100_000;
            let mut max_quot: f64 = 0.0;
            let mut prev_t = 0.0;
            let mut prev_f = spec.value(0.0);
            for i in 1..=n {
                let t = i as f64 / n as f64;
                let f = spec.value(t);
                max_quot = max_quot.max(((f - prev_f) / (t - prev_t)).abs());
                prev_t = t;
                prev_f = f;
            }
            let bound = spec.lipschitz_bound();
            assert!(max_quot <= bound * 1.01, "{:?}: {max_quot} > {bound}", spec.family);
            // and the bound is not a gross over-estimate
            assert!(max_quot >= bound * 0.99, "{:?}: {max_quot} ≪ {bound}", spec.family);
        }
    }

    #[test]
    fn lipschitz_on_random_pairs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for spec in [hat(1.0, 0.25), quad(2.0, 0.5)] {
            let bound = spec.lipschitz_bound();
            for _ in 0..1_000_000 {
                let t1: f64 = rng.gen_range(-0.5..1.5);
                let t2: f64 = rng.gen_range(-0.5..1.5);
                let lhs = (spec.value(t1) - spec.value(t2)).abs();
                assert!(lhs <= bound * (t1 - t2).abs() + 1e-14);
            }
        }
    }

    #[test]
    fn quadratic_growth() {
        let (kmin, holds) = quad(1.0, 0.25).quadratic_growth_check();
        assert!(holds);
        // ratio is k(1-T)₊ with supremum k(1-θ₀) as T ↓ θ₀
        assert!((kmin - 0.75).abs() < 1e-12, "kmin = {kmin}");

        let (kmin, holds) = hat(1.0, 0.25).quadratic_growth_check();
        assert!(!holds);
        assert!(kmin.is_infinite());

        let (kmin, holds) = hat(0.0, 0.25).quadratic_growth_check();
        assert!(holds);
        assert_eq!(kmin, 0.0);
        let (kmin, holds) = quad(0.0, 0.25).quadratic_growth_check();
        assert!(holds);
        assert_eq!(kmin, 0.0);
    }

    #[test]
    fn quadratic_growth_is_consistent() {
        // when it holds, f(T) ≤ k_min (T-θ₀)₊² on a dense grid
        for spec in [quad(1.0, 0.25), quad(4.0, 0.6)] {
            let (kmin, holds) = spec.quadratic_growth_check();
            assert!(holds);
            let n = 100_000;
            let mut worst: f64 = 0.0;
            for i in 0..=n {
                let t = i as f64 / n as f64;
                let up = (t - spec.theta0).max(0.0);
                worst = worst.max(spec.value(t) - kmin * up * up);
            }
            assert!(worst <= 1e-12, "violation {worst}");
        }
    }

    proptest! {
        #[test]
        fn nonnegative_and_supported_inside(k in 0.0f64..10.0, theta0 in 0.01f64..0.99, t in -2.0f64..3.0) {
            for family in [NonlinearityFamily::Hat, NonlinearityFamily::Quadratic] {
                let spec = NonlinearitySpec { family, k, theta0 };
                let v = spec.value(t);
                prop_assert!(v >= 0.0);
                if t <= theta0 || t >= 1.0 {
                    prop_assert_eq!(v, 0.0);
                }
                if k > 0.0 && t > theta0 && t < 1.0 {
                    prop_assert!(v > 0.0);
                }
            }
        }
    }

    #[test]
    fn validation() {
        assert!(hat(1.0, 0.25).validate().is_ok());
        assert!(hat(-1.0, 0.25).validate().is_err());
        assert!(hat(1.0, 0.0).validate().is_err());
        assert!(hat(1.0, 1.0).validate().is_err());
    }

    #[allow(dead_code)]
    fn rng_smoke() {
        // keep the rand dev-dependency honest
        let mut r = rand::rngs::StdRng::seed_from_u64(1);
        let _: f64 = r.gen();
    }
}
