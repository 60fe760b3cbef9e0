//! Exact rational helpers shared by every module that compares `Δ` values.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Always `p/q`, including `1/1` for integers.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parse `p/q` or a bare integer.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            (!q.is_zero()).then(|| Rational::new(p, q))
        }
        None => s.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

/// A shared denominator for a family of rationals, with every value scaled
/// to an `i128` numerator. Sums of up to `headroom` scaled values are
/// guaranteed not to overflow.
#[derive(Debug, Clone)]
pub struct CommonScale {
    pub denominator: BigInt,
    pub numerators: Vec<i128>,
}

impl CommonScale {
    pub fn new<'a>(values: impl IntoIterator<Item = &'a Rational>, headroom: usize) -> Option<Self> {
        let values: Vec<&Rational> = values.into_iter().collect();
        let denominator = values
            .iter()
            .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        let limit = BigInt::from(i128::MAX / (headroom.max(1) as i128 * 4));
        let mut numerators = Vec::with_capacity(values.len());
        for v in values {
            let scaled = v.numer() * (&denominator / v.denom());
            if scaled.abs() > limit {
                return None;
            }
            numerators.push(scaled.to_i128()?);
        }
        let den_limit = BigInt::from(i64::MAX);
        if denominator > den_limit {
            return None;
        }
        Some(Self {
            denominator,
            numerators,
        })
    }

    pub fn to_rational(&self, scaled: i128) -> Rational {
        Rational::new(BigInt::from(scaled), self.denominator.clone())
    }

    /// Scale an arbitrary rational onto this denominator, if it divides.
    pub fn scale(&self, r: &Rational) -> Option<i128> {
        let (q, rem) = (r.numer() * &self.denominator).div_rem(r.denom());
        rem.is_zero().then(|| q.to_i128()).flatten()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("3/6"), Some(ratio(1, 2)));
        assert_eq!(parse_rational("2"), Some(int(2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
        assert_eq!(format_rational(&int(1)), "1/1");
        assert_eq!(format_rational(&ratio(10, 6)), "5/3");
    }

    #[test]
    fn common_scale_round_trips() {
        let vals = [ratio(1, 2), ratio(2, 3), int(1)];
        let s = CommonScale::new(vals.iter(), 8).unwrap();
        assert_eq!(s.denominator, BigInt::from(6));
        assert_eq!(s.numerators, vec![3, 4, 6]);
        assert_eq!(s.to_rational(5), ratio(5, 6));
        assert_eq!(s.scale(&ratio(1, 3)), Some(2));
        assert_eq!(s.scale(&ratio(1, 5)), None);
    }
}
