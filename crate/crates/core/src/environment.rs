//! Normalized i.i.d. disorder fields with exact log moment generating
//! functions.
//!
//! Every law is normalized to mean 0 and variance 1. Fields are addressed by
//! (seed, n, x) through a counter-based generator, so a site's value never
//! depends on evaluation order, masking, or thread schedule.

use crate::rng;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

const SQRT3: f64 = 1.7320508075688772;

/// Supported disorder laws, parameter-free after normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderLaw {
    /// Standard normal.
    Gaussian,
    /// Uniform on {−1, +1}.
    Rademacher,
    /// E − 1 with E standard exponential; log_mgf finite only for β < 1.
    ShiftedExponential,
    /// √3·U with U uniform on [−1, 1].
    CenteredUniform,
}

impl DisorderLaw {
    pub const ALL: [DisorderLaw; 4] = [
        DisorderLaw::Gaussian,
        DisorderLaw::Rademacher,
        DisorderLaw::ShiftedExponential,
        DisorderLaw::CenteredUniform,
    ];

    /// Lowercase name used in config files and CSV metadata.
    pub fn name(self) -> &'static str {
        match self {
            DisorderLaw::Gaussian => "gaussian",
            DisorderLaw::Rademacher => "rademacher",
            DisorderLaw::ShiftedExponential => "shifted_exponential",
            DisorderLaw::CenteredUniform => "centered_uniform",
        }
    }
}

impl std::fmt::Display for DisorderLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DisorderLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(DisorderLaw::Gaussian),
            "rademacher" => Ok(DisorderLaw::Rademacher),
            "shifted_exponential" => Ok(DisorderLaw::ShiftedExponential),
            "centered_uniform" => Ok(DisorderLaw::CenteredUniform),
            other => Err(Error::Config(format!("unknown disorder law `{other}`"))),
        }
    }
}

/// λ(β) = log E[exp(β η)] for the given law.
///
/// Exactly 0 at β = 0 for every law. Errors when β is outside the law's
/// finiteness domain (shifted_exponential requires β < 1).
pub fn log_mgf(law: DisorderLaw, beta: f64) -> Result<f64> {
    if !beta.is_finite() {
        return Err(Error::Domain(format!("log_mgf: beta {beta} not finite")));
    }
    match law {
        DisorderLaw::Gaussian => Ok(0.5 * beta * beta),
        DisorderLaw::Rademacher => {
            // log cosh β, overflow-safe for large |β|.
            let a = beta.abs();
            Ok(a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2)
        }
        DisorderLaw::ShiftedExponential => {
            if beta >= 1.0 {
                Err(Error::Domain(format!(
                    "log_mgf: shifted_exponential requires beta < 1, got {beta}"
                )))
            } else {
                Ok(-beta - (-beta).ln_1p())
            }
        }
        DisorderLaw::CenteredUniform => {
            // log(sinh t / t) at t = √3 β, with a series branch near 0.
            let t = (SQRT3 * beta).abs();
            if t < 1e-4 {
                let t2 = t * t;
                Ok((t2 / 6.0 * (1.0 + t2 / 20.0)).ln_1p())
            } else {
                // sinh t / t = e^t (1 − e^{−2t}) / (2t)
                Ok(t + (-(-2.0 * t).exp_m1() / (2.0 * t)).ln())
            }
        }
    }
}

/// Read access to a disorder field η(n, x).
///
/// Implementations must be pure: the same (n, x) always returns the same
/// value, regardless of call order or thread.
pub trait DisorderField: Sync {
    fn eta(&self, n: u32, x: i64) -> f64;
}

/// The production field: counter-based i.i.d. variates keyed by (seed, n, x).
#[derive(Debug, Clone, Copy)]
pub struct EnvironmentField {
    pub seed: u64,
    pub law: DisorderLaw,
}

impl EnvironmentField {
    pub fn new(seed: u64, law: DisorderLaw) -> Self {
        Self { seed, law }
    }
}

impl DisorderField for EnvironmentField {
    fn eta(&self, n: u32, x: i64) -> f64 {
        match self.law {
            DisorderLaw::Gaussian => rng::standard_normal(self.seed, n, x),
            DisorderLaw::Rademacher => {
                if rng::site_word(self.seed, n, x, 0) >> 63 == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
            DisorderLaw::ShiftedExponential => {
                -rng::unit_open(rng::site_word(self.seed, n, x, 0)).ln() - 1.0
            }
            DisorderLaw::CenteredUniform => {
                SQRT3 * (2.0 * rng::unit_open(rng::site_word(self.seed, n, x, 0)) - 1.0)
            }
        }
    }
}

/// η ≡ 0: turns the polymer engine into an exact random-walk calculator
/// (every site weight becomes e^{−λ(β)}).
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroField;

impl DisorderField for ZeroField {
    fn eta(&self, _n: u32, _x: i64) -> f64 {
        0.0
    }
}

/// Explicit site table with a default for unlisted sites. Oracle and
/// enumeration backend.
#[derive(Debug, Clone, Default)]
pub struct TableField {
    values: std::collections::HashMap<(u32, i64), f64>,
    default: f64,
}

impl TableField {
    pub fn new(default: f64) -> Self {
        Self {
            values: std::collections::HashMap::new(),
            default,
        }
    }

    pub fn set(&mut self, n: u32, x: i64, v: f64) {
        self.values.insert((n, x), v);
    }
}

impl DisorderField for TableField {
    fn eta(&self, n: u32, x: i64) -> f64 {
        *self.values.get(&(n, x)).unwrap_or(&self.default)
    }
}

/// Time-shifted view: eta(n, x) reads the inner field at (n + offset, x).
///
/// Restarted block computations must see the same sites as the unshifted run
/// over the block's native time window.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedField<'a, F: DisorderField> {
    inner: &'a F,
    time_offset: u32,
}

impl<'a, F: DisorderField> ShiftedField<'a, F> {
    pub fn new(inner: &'a F, time_offset: u32) -> Self {
        Self { inner, time_offset }
    }
}

impl<F: DisorderField> DisorderField for ShiftedField<'_, F> {
    fn eta(&self, n: u32, x: i64) -> f64 {
        self.inner.eta(n + self.time_offset, x)
    }
}

/// ζ_{n,x}(β) = exp(β η(n,x) − λ(β)).
///
/// Strictly positive with Q-mean exactly 1 by construction.
pub fn zeta(
    field: &impl DisorderField,
    law: DisorderLaw,
    beta: f64,
    n: u32,
    x: i64,
) -> Result<f64> {
    let lambda = log_mgf(law, beta)?;
    Ok((beta * field.eta(n, x) - lambda).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_mgf_gaussian_and_zero() {
        assert_eq!(log_mgf(DisorderLaw::Gaussian, 1.0).unwrap(), 0.5);
        for law in DisorderLaw::ALL {
            assert_eq!(log_mgf(law, 0.0).unwrap(), 0.0, "{law}");
        }
    }

    #[test]
    fn log_mgf_rademacher_value() {
        let v = log_mgf(DisorderLaw::Rademacher, 1.0).unwrap();
        assert!((v - 0.43378083048302694).abs() < 1e-14);
    }

    #[test]
    fn log_mgf_shifted_exponential_domain() {
        assert!(log_mgf(DisorderLaw::ShiftedExponential, 1.0).is_err());
        assert!(log_mgf(DisorderLaw::ShiftedExponential, 0.999).is_ok());
        // λ(β) = −β − log(1−β): spot value at β = 0.5.
        let v = log_mgf(DisorderLaw::ShiftedExponential, 0.5).unwrap();
        assert!((v - (-0.5 + std::f64::consts::LN_2)).abs() < 1e-15);
    }

    #[test]
    fn log_mgf_uniform_series_matches_direct() {
        // Series and direct branches must agree where they meet. The direct
        // branch evaluates ln near 1 and carries ~1 ulp of absolute noise, so
        // compare through ln_1p and leave room for it; a wrong series
        // coefficient would miss by ~1e-10 here.
        for &beta in &[5e-5, 6e-5, 1e-4 / SQRT3] {
            let t = SQRT3 * beta;
            let direct = (t.sinh() / t - 1.0).ln_1p();
            let v = log_mgf(DisorderLaw::CenteredUniform, beta).unwrap();
            assert!((v - direct).abs() < 1e-14, "beta={beta}");
        }
        let v = log_mgf(DisorderLaw::CenteredUniform, 0.7).unwrap();
        let t = SQRT3 * 0.7;
        assert!((v - (t.sinh() / t).ln()).abs() < 1e-14);
    }

    #[test]
    fn log_mgf_convex_on_grid() {
        for law in DisorderLaw::ALL {
            for i in 0..40 {
                let a = -0.9 + 0.04 * i as f64;
                let b = a + 0.08;
                let mid = log_mgf(law, 0.5 * (a + b)).unwrap();
                let avg = 0.5 * (log_mgf(law, a).unwrap() + log_mgf(law, b).unwrap());
                assert!(mid <= avg + 1e-12, "{law} not convex near {a}");
            }
        }
    }

    #[test]
    fn eta_pure_and_supported() {
        for law in DisorderLaw::ALL {
            let f = EnvironmentField::new(987, law);
            for n in 1..20u32 {
                for x in -20..=20i64 {
                    let a = f.eta(n, x);
                    let b = f.eta(n, x);
                    assert_eq!(a.to_bits(), b.to_bits());
                    if law == DisorderLaw::Rademacher {
                        assert!(a == 1.0 || a == -1.0);
                    }
                    if law == DisorderLaw::ShiftedExponential {
                        assert!(a > -1.0);
                    }
                    if law == DisorderLaw::CenteredUniform {
                        assert!(a.abs() < SQRT3);
                    }
                }
            }
        }
    }

    #[test]
    fn eta_empirical_moments() {
        // 10⁶ distinct sites; tolerances are ~5 standard errors for each law
        // (variance-of-variance grows with kurtosis, hence the wider bound
        // for the exponential law).
        let m = 1_000_000u64;
        for law in DisorderLaw::ALL {
            let f = EnvironmentField::new(20240811, law);
            let mut sum = 0.0;
            let mut sq = 0.0;
            for i in 0..m {
                let n = (i % 1000 + 1) as u32;
                let x = (i / 1000) as i64;
                let v = f.eta(n, x);
                sum += v;
                sq += v * v;
            }
            let mean = sum / m as f64;
            let var = sq / m as f64 - mean * mean;
            assert!(mean.abs() < 0.005, "{law} mean {mean}");
            let tol = if law == DisorderLaw::ShiftedExponential {
                0.015
            } else {
                0.005
            };
            assert!((var - 1.0).abs() < tol, "{law} var {var}");
        }
    }

    #[test]
    fn zeta_beta_zero_is_one() {
        for law in DisorderLaw::ALL {
            let f = EnvironmentField::new(5, law);
            assert_eq!(zeta(&f, law, 0.0, 3, 1).unwrap(), 1.0);
        }
    }

    #[test]
    fn zeta_hand_value() {
        // gaussian, β = 1, η = 1 → e^{1 − 1/2}.
        let mut t = TableField::new(0.0);
        t.set(1, 1, 1.0);
        let v = zeta(&t, DisorderLaw::Gaussian, 1.0, 1, 1).unwrap();
        assert!((v - 0.5f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn zeta_empirical_mean_one() {
        let beta = 0.5;
        let m = 200_000u64;
        for law in DisorderLaw::ALL {
            let f = EnvironmentField::new(77, law);
            let mut sum = 0.0;
            for i in 0..m {
                let n = (i % 500 + 1) as u32;
                let x = (i / 500) as i64;
                sum += zeta(&f, law, beta, n, x).unwrap();
            }
            let mean = sum / m as f64;
            assert!((mean - 1.0).abs() < 0.01, "{law} mean {mean}");
        }
    }

    #[test]
    fn shifted_field_reads_displaced_times() {
        let f = EnvironmentField::new(3, DisorderLaw::Gaussian);
        let s = ShiftedField::new(&f, 10);
        assert_eq!(s.eta(1, 4).to_bits(), f.eta(11, 4).to_bits());
    }
}
