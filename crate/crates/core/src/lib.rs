//! Exact computation of extremal intersection-rank coefficients for finitely
//! generated subgroups of free groups.
//!
//! The pipeline: build the subgroup's folded graph over a two-vertex ambient
//! graph ([`graph`]), generate the admissible-tuple inequality system of that
//! graph ([`ineq`]), solve the associated dual linear program over exact
//! rationals ([`lp`]), and reconstruct a witness subgroup attaining the
//! optimum, verified directly against the fiber product ([`witness`],
//! [`pullback`]). [`pipeline`] ties the steps together and adds decision
//! procedures and a small enumeration oracle; [`io`] covers the file formats.

pub mod error;
pub mod graph;
pub mod io;
pub mod ineq;
pub mod lp;
pub mod pipeline;
pub mod pullback;
pub mod witness;
pub mod words;

pub use error::{Error, Result};

/// Exact rational number; printed as `p/q` (or just `p` when integral).
pub type Rational = num_rational::BigRational;

/// Convenience constructors and parsing for [`Rational`].
pub mod ratio {
    use num_bigint::BigInt;
    use num_traits::Zero;

    use crate::error::{Error, Result};
    use crate::Rational;

    pub fn int(n: i64) -> Rational {
        Rational::from_integer(BigInt::from(n))
    }

    pub fn frac(p: i64, q: i64) -> Rational {
        Rational::new(BigInt::from(p), BigInt::from(q))
    }

    /// Parses `p`, `-p`, or `p/q`.
    pub fn parse(s: &str) -> Result<Rational> {
        let parse_int = |t: &str| -> Result<BigInt> {
            t.parse::<BigInt>().map_err(|_| Error::Parse(format!("bad rational {s:?}")))
        };
        match s.split_once('/') {
            Some((p, q)) => {
                let den = parse_int(q.trim())?;
                if den.is_zero() {
                    return Err(Error::Parse(format!("bad rational {s:?}: zero denominator")));
                }
                Ok(Rational::new(parse_int(p.trim())?, den))
            }
            None => Ok(Rational::from_integer(parse_int(s.trim())?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_display_and_parse() {
        assert_eq!(ratio::frac(1, 2).to_string(), "1/2");
        assert_eq!(ratio::frac(2, 4).to_string(), "1/2");
        assert_eq!(ratio::int(1).to_string(), "1");
        assert_eq!(ratio::frac(-3, 6).to_string(), "-1/2");
        assert_eq!(ratio::parse("7/3").unwrap(), ratio::frac(7, 3));
        assert_eq!(ratio::parse("-4").unwrap(), ratio::int(-4));
        assert!(ratio::parse("1/0").is_err());
        assert!(ratio::parse("x").is_err());
    }
}
