//! The ternary label value shared by annotations, latent labels, and
//! classifier outputs.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::{cast, sum_tolerance, Scalar};

/// A label from the value set `{-1, 0, 1}`.
///
/// The canonical ordering everywhere in this crate (matrix rows/columns,
/// probability vectors, file columns) is `(-1, 0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    /// Value -1.
    Negative,
    /// Value 0.
    Neutral,
    /// Value 1.
    Positive,
}

/// Number of distinct label values.
pub const LABEL_COUNT: usize = 3;

impl Label {
    /// All labels in canonical order `(-1, 0, 1)`.
    pub const ALL: [Label; LABEL_COUNT] = [Label::Negative, Label::Neutral, Label::Positive];

    /// The integer value of the label.
    pub fn value(self) -> i8 {
        match self {
            Label::Negative => -1,
            Label::Neutral => 0,
            Label::Positive => 1,
        }
    }

    /// Builds a label from its integer value.
    pub fn from_value(v: i64) -> Option<Label> {
        match v {
            -1 => Some(Label::Negative),
            0 => Some(Label::Neutral),
            1 => Some(Label::Positive),
            _ => None,
        }
    }

    /// Dense index in canonical order: -1 ↦ 0, 0 ↦ 1, 1 ↦ 2.
    pub fn index(self) -> usize {
        match self {
            Label::Negative => 0,
            Label::Neutral => 1,
            Label::Positive => 2,
        }
    }

    /// Inverse of [`Label::index`]. Panics on `i >= 3`.
    pub fn from_index(i: usize) -> Label {
        Label::ALL[i]
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .parse::<i64>()
            .ok()
            .and_then(Label::from_value)
            .ok_or_else(|| {
                Error::InvalidParameter(format!("label `{s}` is not one of -1, 0, 1"))
            })
    }
}

/// A probability vector over the label values, in canonical order.
pub type LabelDistribution<T> = [T; LABEL_COUNT];

/// Checks that `p` is a probability distribution: entries in `[0, 1]`
/// summing to one within tolerance.
pub fn validate_distribution<T: Scalar>(p: &LabelDistribution<T>, what: &str) -> Result<()> {
    let mut sum = T::zero();
    for &v in p {
        if !(v >= T::zero() && v <= T::one() + sum_tolerance::<T>()) {
            return Err(Error::InvalidParameter(format!(
                "{what}: entry {v} outside [0, 1]"
            )));
        }
        sum = sum + v;
    }
    if (sum - T::one()).abs() > sum_tolerance::<T>() {
        return Err(Error::InvalidParameter(format!(
            "{what}: entries sum to {sum}, not 1"
        )));
    }
    Ok(())
}

/// Like [`validate_distribution`], additionally requiring strictly positive
/// entries (the label-prior invariant).
pub fn validate_prior<T: Scalar>(p: &LabelDistribution<T>, what: &str) -> Result<()> {
    validate_distribution(p, what)?;
    if p.iter().any(|&v| v <= T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "{what}: all entries must be > 0"
        )));
    }
    Ok(())
}

/// Normalizes a non-negative vector to sum one. Errors when the total mass
/// is zero.
pub fn normalize<T: Scalar>(p: &LabelDistribution<T>) -> Result<LabelDistribution<T>> {
    let total: T = p.iter().copied().fold(T::zero(), |a, b| a + b);
    if total <= T::zero() {
        return Err(Error::ZeroMass(
            "cannot normalize a vector with zero total mass".into(),
        ));
    }
    Ok([p[0] / total, p[1] / total, p[2] / total])
}

/// The uniform distribution over labels.
pub fn uniform_distribution<T: Scalar>() -> LabelDistribution<T> {
    let third = T::one() / cast::<T>(3.0);
    [third; LABEL_COUNT]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_and_indices_round_trip() {
        for (i, l) in Label::ALL.iter().enumerate() {
            assert_eq!(l.index(), i);
            assert_eq!(Label::from_index(i), *l);
            assert_eq!(Label::from_value(l.value() as i64), Some(*l));
        }
        assert_eq!(Label::from_value(2), None);
        assert_eq!(Label::from_value(-2), None);
    }

    #[test]
    fn parse_accepts_only_the_three_literals() {
        assert_eq!("-1".parse::<Label>().unwrap(), Label::Negative);
        assert_eq!("0".parse::<Label>().unwrap(), Label::Neutral);
        assert_eq!("1".parse::<Label>().unwrap(), Label::Positive);
        assert!("2".parse::<Label>().is_err());
        assert!("".parse::<Label>().is_err());
        assert!("+".parse::<Label>().is_err());
    }

    #[test]
    fn display_matches_file_literals() {
        let shown: Vec<String> = Label::ALL.iter().map(|l| l.to_string()).collect();
        assert_eq!(shown, vec!["-1", "0", "1"]);
    }

    #[test]
    fn distribution_validation() {
        validate_distribution(&[0.2f64, 0.3, 0.5], "p").unwrap();
        assert!(validate_distribution(&[0.2f64, 0.3, 0.6], "p").is_err());
        assert!(validate_distribution(&[-0.1f64, 0.6, 0.5], "p").is_err());
        validate_prior(&[0.495f64, 0.01, 0.495], "prior").unwrap();
        assert!(validate_prior(&[0.5f64, 0.0, 0.5], "prior").is_err());
    }

    #[test]
    fn normalize_rejects_zero_mass() {
        assert!(normalize(&[0.0f64, 0.0, 0.0]).is_err());
        let n = normalize(&[2.0f64, 1.0, 1.0]).unwrap();
        assert_eq!(n, [0.5, 0.25, 0.25]);
    }
}
