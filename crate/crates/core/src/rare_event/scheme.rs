//! Tilted path laws: `T_t` speeds from `π̃`, one slow speed conditioned on a
//! window `K_t`, then `φ`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::{size_bias_inverse, ProbabilityLaw};
use crate::numerics::KahanSum;
use crate::process::Trajectory;
use crate::rate::relative_entropy;
use crate::scalar::ExtendedReal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiltMode {
    /// Plain `φ`.
    NoTilt,
    /// First speed in `K_t = [ℓ(1-δ)/t, ℓ(1+δ)/t)`.
    SlowReentryOnly,
    /// `⌊μ(p) t⌋` speeds from `π̃`, then one in
    /// `K_t = [(ℓ-δ)/((1-α-δ)t), (ℓ+δ)/((1-α+δ)t))`.
    LlPlusSlowReentry,
}

#[derive(Clone, Debug)]
pub struct TiltedScheme {
    pub mode: TiltMode,
    pub alpha: f64,
    /// `π̃`; `φ` when absent.
    pub pi_tilde: Option<ProbabilityLaw>,
    pub ell: f64,
    pub delta: f64,
    pub t: f64,
    /// Replaces `K_t`.
    pub window_override: Option<(f64, f64)>,
}

impl TiltedScheme {
    pub fn no_tilt(t: f64) -> Self {
        Self {
            mode: TiltMode::NoTilt,
            alpha: 0.0,
            pi_tilde: None,
            ell: 0.5,
            delta: 0.0,
            t,
            window_override: None,
        }
    }

    pub fn slow_reentry(ell: f64, delta: f64, t: f64) -> Result<Self> {
        if !(ell > 0.0 && ell < 1.0 && delta > 0.0 && delta < 1.0 && t > 0.0) {
            return Err(Error::InvalidParameter("need ℓ ∈ (0,1), δ ∈ (0,1), t > 0".into()));
        }
        Ok(Self {
            mode: TiltMode::SlowReentryOnly,
            alpha: 0.0,
            pi_tilde: None,
            ell,
            delta,
            t,
            window_override: None,
        })
    }

    pub fn ll_plus_slow_reentry(alpha: f64, pi_tilde: Option<ProbabilityLaw>, ell: f64, delta: f64, t: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter("α must lie in (0, 1)".into()));
        }
        if !(delta > 0.0 && delta < (1.0 - alpha) / 2.0) {
            return Err(Error::InvalidParameter("δ must lie in (0, (1-α)/2)".into()));
        }
        if !(ell > 0.0 && ell < 1.0 && t > 0.0) {
            return Err(Error::InvalidParameter("need ℓ ∈ (0,1), t > 0".into()));
        }
        if ell >= 1.0 - alpha {
            return Err(Error::InvalidParameter("K_t is empty unless ℓ < 1-α".into()));
        }
        Ok(Self {
            mode: TiltMode::LlPlusSlowReentry,
            alpha,
            pi_tilde,
            ell,
            delta,
            t,
            window_override: None,
        })
    }

    pub fn with_window(mut self, lo: f64, hi: f64) -> Self {
        self.window_override = Some((lo, hi));
        self
    }

    pub fn with_t(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    /// `K_t`, or `None` without tilt.
    pub fn window(&self) -> Option<(f64, f64)> {
        if let Some(w) = self.window_override {
            return Some(w);
        }
        let (a, l, d, t) = (self.alpha, self.ell, self.delta, self.t);
        match self.mode {
            TiltMode::NoTilt => None,
            TiltMode::SlowReentryOnly => Some((l * (1.0 - d) / t, l * (1.0 + d) / t)),
            TiltMode::LlPlusSlowReentry => Some(((l - d) / ((1.0 - a - d) * t), (l + d) / ((1.0 - a + d) * t))),
        }
    }

    pub fn pi_tilde<'a>(&'a self, phi: &'a ProbabilityLaw) -> &'a ProbabilityLaw {
        self.pi_tilde.as_ref().unwrap_or(phi)
    }

    /// `μ(p) = α π(p)` with `π` the inverse size-bias of `π̃`.
    pub fn mean_momentum(&self, phi: &ProbabilityLaw) -> Result<f64> {
        if self.mode != TiltMode::LlPlusSlowReentry {
            return Ok(0.0);
        }
        let pi = size_bias_inverse(self.pi_tilde(phi))?;
        Ok(self.alpha * pi.mean()?.to_f64())
    }

    /// `T_t = ⌊μ(p) t⌋`.
    pub fn block_length(&self, phi: &ProbabilityLaw) -> Result<usize> {
        Ok((self.mean_momentum(phi)? * self.t).floor() as usize)
    }

    /// `log φ(K_t)`; zero without tilt.
    pub fn log_window_mass(&self, phi: &ProbabilityLaw) -> f64 {
        match self.window() {
            Some((lo, hi)) => phi.log_mass_in(lo, hi),
            None => 0.0,
        }
    }
}

/// A sampled path and `log(dP/dQ)` along it.
#[derive(Clone, Debug)]
pub struct TiltedSample {
    pub path: Trajectory<f64>,
    pub log_lr: f64,
    /// Speed drawn in `K_t`, if any.
    pub slow_speed: Option<f64>,
}

/// Draws an undelayed path covering `[0, t]` under the scheme.
pub fn tilted_sampler<R: Rng + ?Sized>(scheme: &TiltedScheme, phi: &ProbabilityLaw, rng: &mut R) -> Result<TiltedSample> {
    let t = scheme.t;
    let mut durations = Vec::new();
    let mut covered = 0.0;
    let mut log_lr = KahanSum::new();
    let mut slow_speed = None;
    if scheme.mode == TiltMode::LlPlusSlowReentry {
        let pt = scheme.pi_tilde(phi);
        let tilted = scheme.pi_tilde.is_some();
        for _ in 0..scheme.block_length(phi)? {
            let v = pt.sample(rng);
            if tilted {
                log_lr.add(phi.log_density_ratio(pt, v));
            }
            durations.push(1.0 / v);
            covered += 1.0 / v;
        }
    }
    if let Some((lo, hi)) = scheme.window() {
        let log_k = phi.log_mass_in(lo, hi);
        let v = phi.sample_conditioned(lo, hi, rng)?;
        log_lr.add(log_k);
        slow_speed = Some(v);
        durations.push(1.0 / v);
        covered += 1.0 / v;
    }
    while covered <= t {
        let v = phi.sample(rng);
        durations.push(1.0 / v);
        covered += 1.0 / v;
    }
    Ok(TiltedSample {
        path: Trajectory::undelayed(durations)?,
        log_lr: log_lr.value(),
        slow_speed,
    })
}

/// `T_t H(π̃|φ) - log φ(K_t)`; `+∞` for an empty window.
pub fn entropy_cost(scheme: &TiltedScheme, phi: &ProbabilityLaw) -> Result<ExtendedReal> {
    let log_k = scheme.log_window_mass(phi);
    if log_k == f64::NEG_INFINITY {
        return Ok(ExtendedReal::Infinite);
    }
    let block = match (&scheme.pi_tilde, scheme.mode) {
        (Some(pt), TiltMode::LlPlusSlowReentry) => {
            let n = scheme.block_length(phi)? as f64;
            relative_entropy(pt, phi)?.scale(&n)
        }
        _ => ExtendedReal::zero(),
    };
    Ok(block + ExtendedReal::Finite(-log_k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matched_window_hits_one_atom() {
        let phi = ProbabilityLaw::dyadic();
        let t = 0.5 * 2f64.powi(8);
        let s = TiltedScheme::slow_reentry(0.5, 0.1, t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = tilted_sampler(&s, &phi, &mut rng).unwrap();
            assert_eq!(x.slow_speed, Some(2f64.powi(-8)));
        }
        let z: f64 = crate::numerics::log_sum_exp((0..=60).map(|j| -(2f64.powi(j))));
        let cost = entropy_cost(&s, &phi).unwrap().to_f64();
        assert!((cost - (256.0 + z)).abs() < 1e-9);
    }

    #[test]
    fn mismatched_window_is_empty() {
        let phi = ProbabilityLaw::dyadic();
        let t = 0.5 * 2f64.powf(8.5);
        let s = TiltedScheme::slow_reentry(0.5, 0.1, t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(tilted_sampler(&s, &phi, &mut rng), Err(Error::EmptyWindow { .. })));
        assert!(entropy_cost(&s, &phi).unwrap().is_infinite());
    }

    #[test]
    fn untilted_block_has_zero_log_lr() {
        let phi = ProbabilityLaw::atomic(&[(1.0, 0.5), (2.0, 0.5)]).unwrap();
        let s = TiltedScheme::ll_plus_slow_reentry(0.5, None, 0.4, 0.1, 20.0)
            .unwrap()
            .with_window(0.0, f64::INFINITY);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            assert!(tilted_sampler(&s, &phi, &mut rng).unwrap().log_lr.abs() < 1e-12);
        }
        assert!(entropy_cost(&s, &phi).unwrap().to_f64().abs() < 1e-12);
    }

    #[test]
    fn window_needs_ell_below_one_minus_alpha() {
        assert!(TiltedScheme::ll_plus_slow_reentry(0.5, None, 0.5, 0.1, 20.0).is_err());
        let s = TiltedScheme::ll_plus_slow_reentry(0.3, None, 0.5, 0.1, 20.0).unwrap();
        let (lo, hi) = s.window().unwrap();
        assert!(lo < hi);
    }
}
