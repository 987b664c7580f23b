//! Finite-prefix limit detection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index stride used by polynomial-scale families: `1 + 2520 * 2^20`.
///
/// Strides congruent to 1 modulo 2520 keep every residue pattern of period
/// at most 10 intact, so parity-driven oscillation stays visible.
pub const POLYNOMIAL_STRIDE: u64 = 1 + 2520 * (1 << 20);

/// Tolerances and sampling parameters for deciding limits on a prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceProfile {
    pub eps_rel: f64,
    pub eps_zero: f64,
    pub tail_fraction: f64,
    pub prefix_length: usize,
    pub divergence_threshold: f64,
    /// Sequence term `i` (1-based) is evaluated at index `i * index_stride`.
    pub index_stride: u64,
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        ToleranceProfile {
            eps_rel: 1e-3,
            eps_zero: 1e-6,
            tail_fraction: 0.25,
            prefix_length: 4096,
            divergence_threshold: 1e9,
            index_stride: 1,
        }
    }
}

impl ToleranceProfile {
    /// Profile for families whose magnitudes grow polynomially in the index.
    pub fn polynomial() -> Self {
        ToleranceProfile { index_stride: POLYNOMIAL_STRIDE, ..Self::default() }
    }

    /// Profile for families where `log2` of the terms grows like `n^2`.
    pub fn superexponential() -> Self {
        ToleranceProfile { prefix_length: 48, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_rel > 0.0) || !(self.eps_zero > 0.0) {
            return Err(Error::input("eps_rel and eps_zero must be positive"));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction < 1.0) {
            return Err(Error::input("tail_fraction must lie in (0, 1)"));
        }
        if self.prefix_length < 8 {
            return Err(Error::input("prefix_length must be at least 8"));
        }
        if self.index_stride == 0 || (self.index_stride > 1 && self.index_stride % 2520 != 1) {
            return Err(Error::input("index_stride must be 1 or congruent to 1 mod 2520"));
        }
        Ok(())
    }

    /// Sequence indices `i * stride` for `i = 1..=prefix_length`.
    pub fn indices(&self) -> impl Iterator<Item = u128> + '_ {
        let s = self.index_stride as u128;
        (1..=self.prefix_length as u128).map(move |i| i * s)
    }

    pub fn tail_window(&self, len: usize) -> usize {
        tail_window(len, self.tail_fraction)
    }

    pub fn with_stride(&self, stride: u64) -> Self {
        ToleranceProfile { index_stride: stride, ..self.clone() }
    }
}

pub(crate) fn tail_window(len: usize, fraction: f64) -> usize {
    ((len as f64 * fraction).ceil() as usize).clamp(2.min(len), len)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitKind {
    Converged,
    DivergedToInfinity,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitVerdict {
    pub kind: LimitKind,
    pub value: Option<f64>,
    /// `max - min` over the tail window (infinite if the tail is unbounded).
    pub oscillation: f64,
    pub window: usize,
    pub note: Option<String>,
}

impl LimitVerdict {
    pub fn undetermined(note: impl Into<String>) -> Self {
        LimitVerdict {
            kind: LimitKind::Undetermined,
            value: None,
            oscillation: f64::NAN,
            window: 0,
            note: Some(note.into()),
        }
    }

    pub fn converged(&self) -> Option<f64> {
        match self.kind {
            LimitKind::Converged => self.value,
            _ => None,
        }
    }

    pub fn is_diverged(&self) -> bool {
        self.kind == LimitKind::DivergedToInfinity
    }

    /// Converged to a value within `eps_zero` of zero.
    pub fn is_zero(&self, profile: &ToleranceProfile) -> bool {
        self.converged().is_some_and(|v| v.abs() <= profile.eps_zero)
    }
}

/// Decides the limit of `terms` from its last `tail_fraction` share.
pub fn detect_limit(terms: &[f64], profile: &ToleranceProfile) -> Result<LimitVerdict> {
    if terms.is_empty() {
        return Err(Error::input("detect_limit needs a nonempty sequence"));
    }
    let window = profile.tail_window(terms.len());
    let tail = &terms[terms.len() - window..];
    if tail.iter().any(|t| t.is_nan()) {
        return Ok(LimitVerdict {
            kind: LimitKind::Undetermined,
            value: None,
            oscillation: f64::NAN,
            window,
            note: Some("NaN in tail".into()),
        });
    }
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let oscillation = hi - lo;
    let mk = |kind, value, note: Option<&str>| LimitVerdict {
        kind,
        value,
        oscillation: if oscillation.is_nan() { f64::INFINITY } else { oscillation },
        window,
        note: note.map(str::to_owned),
    };
    if hi.is_finite() && lo.is_finite() {
        let mean = tail.iter().sum::<f64>() / window as f64;
        if oscillation <= profile.eps_rel * (mean.abs() + 1.0) {
            return Ok(mk(LimitKind::Converged, Some(mean), None));
        }
    }
    if lo > profile.divergence_threshold && smoothed_nondecreasing(tail) {
        return Ok(mk(LimitKind::DivergedToInfinity, None, None));
    }
    Ok(mk(LimitKind::Undetermined, None, Some("tail neither settles nor escapes")))
}

/// Block means over eight blocks never decrease.
fn smoothed_nondecreasing(tail: &[f64]) -> bool {
    let block = (tail.len() / 8).max(1);
    let means: Vec<f64> = tail
        .chunks(block)
        .map(|c| {
            if c.iter().any(|v| v.is_infinite()) {
                f64::INFINITY
            } else {
                c.iter().sum::<f64>() / c.len() as f64
            }
        })
        .collect();
    means.windows(2).all(|w| w[1] >= w[0])
}

/// Nondecreasing over the last 75% of the prefix.
pub fn eventually_increasing(terms: &[f64]) -> bool {
    let start = terms.len() / 4;
    terms[start..].windows(2).all(|w| w[1] >= w[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_converges_to_zero() {
        let terms: Vec<f64> = (1..=4096).map(|n| 1.0 / n as f64).collect();
        let v = detect_limit(&terms, &ToleranceProfile::default()).unwrap();
        assert_eq!(v.kind, LimitKind::Converged);
        assert!(v.value.unwrap().abs() <= 1e-3);
    }

    #[test]
    fn identity_diverges_with_lowered_threshold() {
        let terms: Vec<f64> = (1..=4096).map(|n| n as f64).collect();
        let p = ToleranceProfile { divergence_threshold: 1e6, ..Default::default() };
        // every tail term is at most 4096, below 1e6
        assert_eq!(detect_limit(&terms, &p).unwrap().kind, LimitKind::Undetermined);
        let p = ToleranceProfile { divergence_threshold: 1e3, ..Default::default() };
        assert!(detect_limit(&terms, &p).unwrap().is_diverged());
    }

    #[test]
    fn alternating_sign_is_undetermined() {
        let terms: Vec<f64> = (1..=4096).map(|n| if n % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let v = detect_limit(&terms, &ToleranceProfile::default()).unwrap();
        assert_eq!(v.kind, LimitKind::Undetermined);
        assert_eq!(v.oscillation, 2.0);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(detect_limit(&[], &ToleranceProfile::default()).is_err());
    }

    #[test]
    fn profile_validation() {
        assert!(ToleranceProfile::default().validate().is_ok());
        assert!(ToleranceProfile::polynomial().validate().is_ok());
        let bad = ToleranceProfile { prefix_length: 4, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ToleranceProfile { index_stride: 2, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
