//! Exact rational arithmetic. All weights and measure values in the crate
//! are `Rat`; no floating point enters the core.

use num_bigint::BigInt;

pub type Rat = num_rational::BigRational;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `p/q` or a bare integer. Anything else (decimals included) is
/// rejected so inexact values cannot sneak in.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den == BigInt::from(0) {
        return None;
    }
    Some(Rat::new(num, den))
}

/// Canonical rendering: `p/q` in lowest terms, or `p` when the denominator
/// is one.
pub fn format_rat(r: &Rat) -> String {
    if r.denom() == &BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        assert_eq!(parse_rat("2/4"), Some(rat(1, 2)));
        assert_eq!(parse_rat("3"), Some(rat(3, 1)));
        assert_eq!(parse_rat("0.5"), None);
        assert_eq!(parse_rat("1/0"), None);
        assert_eq!(format_rat(&rat(1, 2)), "1/2");
        assert_eq!(format_rat(&rat(4, 2)), "2");
    }
}
