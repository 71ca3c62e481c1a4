use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::set::{RealSet, Universe};
use crate::Rational;

/// Integer polynomial, constant term first, without trailing zeros.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(from = "RawPolynomial", into = "RawPolynomial")]
pub struct Polynomial {
    coeffs: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct RawPolynomial {
    coeffs: Vec<i64>,
}

impl From<RawPolynomial> for Polynomial {
    fn from(raw: RawPolynomial) -> Self {
        Polynomial::new(raw.coeffs)
    }
}

impl From<Polynomial> for RawPolynomial {
    fn from(p: Polynomial) -> Self {
        RawPolynomial { coeffs: p.coeffs }
    }
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<i64>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial::default()
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// `max(degree, max |c|)`; the zero polynomial has height 0.
    pub fn height(&self) -> u64 {
        let top = self.coeffs.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
        top.max(self.degree().unwrap_or(0) as u64)
    }

    /// Horner evaluation in any scalar.
    pub fn eval<S: Scalar>(&self, x: &S) -> S {
        self.coeffs
            .iter()
            .rev()
            .fold(S::zero(), |acc, &c| acc * x.clone() + S::from_i64_exact(c))
    }

    /// Sign of `p(r)`, exact. Evaluates `b^d · p(a/b)` in integers.
    pub fn sign_at(&self, r: &Rational) -> std::cmp::Ordering {
        let Some(d) = self.degree() else {
            return std::cmp::Ordering::Equal;
        };
        // r = a/b with b > 0 after normalization
        let (a, b) = (r.numer(), r.denom());
        if let (Some(a), Some(b)) = (i128::try_from(a).ok(), i128::try_from(b).ok()) {
            if let Some(v) = homogeneous_i128(&self.coeffs, a, b, d) {
                return v.cmp(&0);
            }
        }
        let mut acc = BigInt::zero();
        let mut b_pow = BigInt::from(1);
        let mut terms = vec![BigInt::zero(); d + 1];
        // term_i = c_i a^i b^{d-i}
        for i in (0..=d).rev() {
            terms[i] = b_pow.clone();
            b_pow *= b;
        }
        let mut a_pow = BigInt::from(1);
        for (i, &c) in self.coeffs.iter().enumerate() {
            acc += BigInt::from(c) * &a_pow * &terms[i];
            a_pow *= a;
        }
        if acc.is_positive() {
            std::cmp::Ordering::Greater
        } else if acc.is_negative() {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Equal
        }
    }

    /// `p(-x)`.
    pub fn negate_argument(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| if i % 2 == 1 { -c } else { c })
                .collect(),
        )
    }

    /// `x^d · p(1/x)`; requires `deg p <= d`.
    pub fn reciprocal(&self, d: usize) -> Result<Polynomial> {
        if self.coeffs.len() > d + 1 {
            return Err(Error::Schema(format!("degree {} exceeds {d}", self.coeffs.len() - 1)));
        }
        let mut c = self.coeffs.clone();
        c.resize(d + 1, 0);
        c.reverse();
        Ok(Polynomial::new(c))
    }
}

fn homogeneous_i128(coeffs: &[i64], a: i128, b: i128, d: usize) -> Option<i128> {
    let mut acc: i128 = 0;
    let mut a_pow: i128 = 1;
    for (i, &c) in coeffs.iter().enumerate() {
        let b_pow = b.checked_pow(u32::try_from(d - i).ok()?)?;
        let term = i128::from(c).checked_mul(a_pow)?.checked_mul(b_pow)?;
        acc = acc.checked_add(term)?;
        if i < d {
            a_pow = a_pow.checked_mul(a)?;
        }
    }
    Some(acc)
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let sign = if c < 0 {
                "-"
            } else if first {
                ""
            } else {
                "+"
            };
            let mag = c.unsigned_abs();
            let body = match (i, mag) {
                (0, m) => m.to_string(),
                (1, 1) => "x".into(),
                (1, m) => format!("{m}x"),
                (i, 1) => format!("x^{i}"),
                (i, m) => format!("{m}x^{i}"),
            };
            write!(f, "{sign}{body}")?;
            first = false;
        }
        Ok(())
    }
}

/// The first `count` polynomials, graded by height and, within a grade,
/// ordered by degree and then lexicographically on `(c_0, ..., c_d)`.
pub fn enumerate_polynomials(count: usize) -> Result<Vec<Polynomial>> {
    if count == 0 {
        return Err(Error::EmptyInput("polynomial count"));
    }
    let mut out = vec![Polynomial::zero()];
    let mut h: i64 = 1;
    while out.len() < count {
        'grade: for d in 0..=h as usize {
            // odometer over c_0..c_d in [-h, h], leading coefficient nonzero
            let mut c = vec![-h; d + 1];
            loop {
                let leading_ok = c[d] != 0;
                let tall = d as i64 == h || c.iter().any(|x| x.abs() == h);
                if leading_ok && tall {
                    out.push(Polynomial { coeffs: c.clone() });
                    if out.len() == count {
                        break 'grade;
                    }
                }
                let mut i = d;
                loop {
                    if c[i] < h {
                        c[i] += 1;
                        break;
                    }
                    c[i] = -h;
                    if i == 0 {
                        break;
                    }
                    i -= 1;
                }
                if c.iter().all(|&x| x == -h) {
                    break;
                }
            }
        }
        h += 1;
    }
    Ok(out)
}

/// All polynomials of height at most `h`, in enumeration order.
pub fn polynomials_up_to_height(h: u32) -> Result<Vec<Polynomial>> {
    let side = 2 * u64::from(h) + 1;
    let count = side
        .checked_pow(h + 1)
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| Error::Schema(format!("height {h} too large")))?;
    enumerate_polynomials(count)
}

/// `{i : p_i(r) > 0}`.
pub fn polynomial_member(r: &Rational, polys: &[Polynomial]) -> Result<RealSet> {
    let universe = Universe::new(polys.len())?;
    Ok(RealSet::from_fn(universe, |i| polys[i].sign_at(r).is_gt()))
}

/// Maps each polynomial to its position.
pub fn polynomial_index(polys: &[Polynomial]) -> HashMap<&Polynomial, usize> {
    polys.iter().enumerate().map(|(i, p)| (p, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    fn p(c: &[i64]) -> Polynomial {
        Polynomial::new(c.to_vec())
    }

    #[test]
    fn normalization() {
        assert_eq!(p(&[1, 2, 0, 0]), p(&[1, 2]));
        assert_eq!(p(&[0, 0]), Polynomial::zero());
        assert_eq!(Polynomial::zero().height(), 0);
        assert_eq!(p(&[0, 0, 1]).height(), 2);
        assert_eq!(p(&[5]).height(), 5);
        let json = serde_json::to_string(&p(&[1, -2, 0])).unwrap();
        assert_eq!(json, r#"{"coeffs":[1,-2]}"#);
        let back: Polynomial = serde_json::from_str(r#"{"coeffs":[3,0,0]}"#).unwrap();
        assert_eq!(back, p(&[3]));
    }

    #[test]
    fn enumeration_order() {
        let polys = enumerate_polynomials(30).unwrap();
        assert_eq!(polys[0], Polynomial::zero());
        assert_eq!(&polys[1..3], &[p(&[-1]), p(&[1])]);
        assert!(polys[..9].iter().all(|q| q.height() <= 1));
        assert_eq!(polys[9], p(&[-2]));
        assert_eq!(polys[19], p(&[1, -2]));
    }

    #[test]
    fn height_three_count() {
        let polys = polynomials_up_to_height(3).unwrap();
        assert_eq!(polys.len(), 2401);
        assert!(polys.iter().all(|q| q.height() <= 3));
        assert!(polys.windows(2).all(|w| w[0].height() <= w[1].height()));
        let again = enumerate_polynomials(2401).unwrap();
        assert_eq!(polys, again);
        assert_eq!(polynomial_index(&polys).len(), 2401);
    }

    #[test]
    fn evaluation() {
        let q = p(&[1, 0, 1]);
        let v: Rational = q.eval(&Rational::from_integer((-3).into()));
        assert_eq!(v, Rational::from_integer(10.into()));
        assert!(q.sign_at(&Rational::from_integer((-3).into())).is_gt());
        let f: f64 = p(&[1, -2]).eval(&0.25);
        assert_eq!(f, 0.5);
        assert!(p(&[1, -2]).sign_at(&ratio(1, 2)).is_eq());
        assert!(Polynomial::zero().sign_at(&ratio(3, 7)).is_eq());
    }

    #[test]
    fn transforms() {
        assert_eq!(p(&[1, 2, 3, 4]).negate_argument(), p(&[1, -2, 3, -4]));
        assert_eq!(p(&[1, 2]).reciprocal(3).unwrap(), p(&[0, 0, 2, 1]));
        assert_eq!(p(&[0, 0, 2, 1]).reciprocal(3).unwrap(), p(&[1, 2]));
        assert!(p(&[1, 2, 3]).reciprocal(1).is_err());
    }

    #[test]
    fn members_at_zero() {
        let polys = enumerate_polynomials(64).unwrap();
        let a0 = polynomial_member(&ratio(0, 1), &polys).unwrap();
        for (i, q) in polys.iter().enumerate() {
            assert_eq!(a0.contains(i).unwrap(), q.coeffs().first().is_some_and(|&c| c > 0));
        }
        assert!(!a0.contains(0).unwrap());
    }

    #[test]
    fn display() {
        assert_eq!(p(&[1, -2]).to_string(), "1-2x");
        assert_eq!(p(&[0, 1, 0, -3]).to_string(), "x-3x^3");
        assert_eq!(Polynomial::zero().to_string(), "0");
    }
}
