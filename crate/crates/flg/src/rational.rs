//! Exact rational values: the universal numeric type for loads and capacities.
//!
//! Loads in a client equilibrium are fractions x/y with y bounded by the
//! facility count, so everything downstream compares them exactly. Backed by
//! arbitrary-precision integers; values are always stored reduced with a
//! positive denominator, hence structural equality is value equality.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

pub type Rational = num_rational::BigRational;

/// Rational from an unsigned integer.
pub fn rat_int(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Reduced rational `num/den`. Panics if `den` is zero.
pub fn rat(num: u64, den: u64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Wire form `<num>/<den>`, always with an explicit denominator (`2` prints
/// as `2/1`).
pub fn format_ratio(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses the wire form `<num>/<den>`. The denominator must be positive;
/// the sign, if any, belongs to the numerator.
pub fn parse_ratio(token: &str) -> Result<Rational, String> {
    let (num, den) = token
        .split_once('/')
        .ok_or_else(|| format!("'{token}' is not of the form <num>/<den>"))?;
    let num: BigInt = num
        .parse()
        .map_err(|_| format!("bad numerator '{num}'"))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| format!("bad denominator '{den}'"))?;
    if den <= BigInt::zero() {
        return Err(format!("denominator must be positive, got '{den}'"));
    }
    Ok(Rational::new(num, den))
}

/// Nearest f64; loads at desk scale are far inside f64 range.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().expect("rational out of f64 range")
}

/// Denominator as u64. Panics if it does not fit; instance weights and
/// facility counts keep denominators tiny.
pub fn denom_u64(r: &Rational) -> u64 {
    r.denom().to_u64().expect("denominator exceeds u64")
}

/// True for values < 0; feasibility checks reject these.
pub fn is_negative(r: &Rational) -> bool {
    r.is_negative()
}
