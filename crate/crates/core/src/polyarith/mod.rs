//! Exact integer polynomials, Sylvester resultants and discriminants.

mod irreducible;
mod system;

pub use irreducible::{irreducibility, Irreducibility, IrreducibilityMethod};
pub use system::{parse_system, validate_system, Certificate, PolySystem, SystemError};

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolyError {
    /// All coefficients are zero.
    ZeroPolynomial,
    /// A coefficient list could not be parsed.
    Parse(String),
    /// The operation needs degree at least one.
    Constant,
    /// Desk-scale routine refused an input that is too large.
    TooLarge(String),
}

impl fmt::Display for PolyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolyError::ZeroPolynomial => f.write_str("zero polynomial"),
            PolyError::Parse(s) => write!(f, "cannot parse polynomial: {s}"),
            PolyError::Constant => f.write_str("polynomial is constant"),
            PolyError::TooLarge(s) => write!(f, "input too large: {s}"),
        }
    }
}

impl core::error::Error for PolyError {}

/// A non-zero polynomial with integer coefficients, stored in ascending
/// degree order with no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Result<Self, PolyError> {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(PolyError::ZeroPolynomial);
        }
        Ok(IntPoly { coeffs })
    }

    pub fn from_i64(coeffs: &[i64]) -> Result<Self, PolyError> {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    /// Parses an ascending comma-separated coefficient list, e.g. `"1,0,1"`
    /// for `X^2 + 1`.
    pub fn parse(s: &str) -> Result<Self, PolyError> {
        let coeffs = s
            .split(',')
            .map(|t| {
                let t = t.trim();
                t.parse::<BigInt>()
                    .map_err(|_| PolyError::Parse(alloc::format!("bad coefficient {t:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(coeffs)
    }

    /// The monic linear polynomial `X + c`.
    pub fn linear(c: i64) -> Self {
        Self::from_i64(&[c, 1]).expect("non-zero")
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn lead(&self) -> &BigInt {
        self.coeffs.last().expect("non-zero polynomial")
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() == 1
    }

    /// `max |c_i|` over `1 <= i <= degree` (the constant term is excluded);
    /// zero for constants.
    pub fn norm(&self) -> BigInt {
        self.coeffs[1..]
            .iter()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(BigInt::zero)
    }

    pub fn content(&self) -> BigInt {
        self.coeffs.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c))
    }

    pub fn eval(&self, n: &BigInt) -> BigInt {
        self.coeffs.iter().rev().fold(BigInt::zero(), |acc, c| acc * n + c)
    }

    /// Coefficients as `i128`, if they all fit.
    pub fn coeffs_i128(&self) -> Option<Vec<i128>> {
        self.coeffs.iter().map(ToPrimitive::to_i128).collect()
    }

    /// Coefficients reduced into `[0, m)`.
    pub fn residues_mod(&self, m: u64) -> Vec<u64> {
        let bm = BigInt::from(m);
        self.coeffs
            .iter()
            .map(|c| c.mod_floor(&bm).to_u64().expect("reduced below m"))
            .collect()
    }

    pub fn derivative(&self) -> Option<IntPoly> {
        if self.is_constant() {
            return None;
        }
        let d = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(i, c)| c * BigInt::from(i + 1))
            .collect();
        Some(IntPoly::new(d).expect("non-constant polynomial has non-zero derivative"))
    }

    pub fn mul(&self, other: &IntPoly) -> IntPoly {
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly { coeffs: out }
    }

    /// `P(X + c)`.
    pub fn shift(&self, c: &BigInt) -> IntPoly {
        // Horner in the polynomial ring: acc = acc * (X + c) + a_i.
        let mut acc: Vec<BigInt> = vec![BigInt::zero()];
        for a in self.coeffs.iter().rev() {
            let mut next = vec![BigInt::zero(); acc.len() + 1];
            for (i, v) in acc.iter().enumerate() {
                next[i + 1] += v;
                next[i] += v * c;
            }
            next[0] += a;
            acc = next;
        }
        IntPoly::new(acc).expect("shift preserves the leading coefficient")
    }

    /// Exact quotient `self / divisor` in `Z[X]`, if it exists.
    pub fn div_exact(&self, divisor: &IntPoly) -> Option<IntPoly> {
        if divisor.degree() > self.degree() {
            return None;
        }
        let mut rem = self.coeffs.clone();
        let dl = divisor.lead();
        let mut quot = vec![BigInt::zero(); self.degree() - divisor.degree() + 1];
        for k in (0..quot.len()).rev() {
            let top = &rem[k + divisor.degree()];
            if top.is_zero() {
                continue;
            }
            let (q, r) = top.div_rem(dl);
            if !r.is_zero() {
                return None;
            }
            for (i, c) in divisor.coeffs.iter().enumerate() {
                rem[k + i] -= &q * c;
            }
            quot[k] = q;
        }
        if rem.iter().all(Zero::is_zero) {
            IntPoly::new(quot).ok()
        } else {
            None
        }
    }
}

impl fmt::Display for IntPoly {
    /// Ascending comma-separated coefficients, the format [`IntPoly::parse`]
    /// reads.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Evaluates `P(n)` exactly.
pub fn eval(p: &IntPoly, n: &BigInt) -> BigInt {
    p.eval(n)
}

/// Fraction-free (Bareiss) determinant of a square integer matrix.
pub fn det_bareiss(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut negate = false;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    negate = !negate;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    if negate {
        -d
    } else {
        d
    }
}

/// The Sylvester matrix of `(U, V)`: `deg V` shifted rows of `U` followed by
/// `deg U` shifted rows of `V`, coefficients in descending order.
pub fn sylvester_matrix(u: &IntPoly, v: &IntPoly) -> Vec<Vec<BigInt>> {
    let (m, n) = (u.degree(), v.degree());
    let size = m + n;
    let mut rows = Vec::with_capacity(size);
    for i in 0..n {
        let mut row = vec![BigInt::zero(); size];
        for (k, c) in u.coeffs.iter().rev().enumerate() {
            row[i + k] = c.clone();
        }
        rows.push(row);
    }
    for i in 0..m {
        let mut row = vec![BigInt::zero(); size];
        for (k, c) in v.coeffs.iter().rev().enumerate() {
            row[i + k] = c.clone();
        }
        rows.push(row);
    }
    rows
}

/// `Res(U, V) = lead(U)^deg V * prod V(roots of U)`, as the Sylvester
/// determinant. Zero exactly when `U` and `V` share a complex root.
pub fn resultant(u: &IntPoly, v: &IntPoly) -> BigInt {
    det_bareiss(sylvester_matrix(u, v))
}

/// Discriminant `(-1)^{g(g-1)/2} Res(P, P') / lead(P)`; equals 1 for every
/// linear polynomial.
pub fn discriminant(p: &IntPoly) -> Result<BigInt, PolyError> {
    let dp = p.derivative().ok_or(PolyError::Constant)?;
    let g = p.degree();
    let (q, r) = resultant(p, &dp).div_rem(p.lead());
    assert!(r.is_zero(), "Res(P, P') must be divisible by lead(P)");
    Ok(if (g * (g - 1) / 2) % 2 == 1 { -q } else { q })
}

/// Both sides of the product-discriminant identity, computed on separate
/// paths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductIdentity {
    /// `disc(U V)`, from the product polynomial.
    pub lhs: BigInt,
    /// `disc(U) disc(V) Res(U, V)^2`, from the factors.
    pub rhs: BigInt,
    /// `lead(U)^deg U * lead(V)^deg V`, the weight carried by the
    /// lead-weighted form of the identity.
    pub lead_weight: BigInt,
    pub holds: bool,
    /// Whether `lead_weight * lhs == rhs` also holds.
    pub lead_weighted_holds: bool,
}

pub fn check_product_identity(u: &IntPoly, v: &IntPoly) -> Result<ProductIdentity, PolyError> {
    let lhs = discriminant(&u.mul(v))?;
    let res = resultant(u, v);
    let rhs = discriminant(u)? * discriminant(v)? * &res * &res;
    let lead_weight = num_traits::pow(u.lead().clone(), u.degree()) * num_traits::pow(v.lead().clone(), v.degree());
    Ok(ProductIdentity {
        holds: lhs == rhs,
        lead_weighted_holds: &lead_weight * &lhs == rhs,
        lhs,
        rhs,
        lead_weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(c: &[i64]) -> IntPoly {
        IntPoly::from_i64(c).unwrap()
    }

    /// Leibniz expansion over all permutations; independent of Bareiss.
    fn det_leibniz(a: &[Vec<BigInt>]) -> BigInt {
        fn rec(a: &[Vec<BigInt>], row: usize, used: &mut Vec<bool>, perm: &mut Vec<usize>) -> BigInt {
            let n = a.len();
            if row == n {
                let mut inv = 0;
                for i in 0..n {
                    for j in i + 1..n {
                        if perm[i] > perm[j] {
                            inv += 1;
                        }
                    }
                }
                let prod = (0..n).fold(BigInt::one(), |acc, i| acc * &a[i][perm[i]]);
                return if inv % 2 == 0 { prod } else { -prod };
            }
            let mut total = BigInt::zero();
            for c in 0..n {
                if !used[c] && !a[row][c].is_zero() {
                    used[c] = true;
                    perm.push(c);
                    total += rec(a, row + 1, used, perm);
                    perm.pop();
                    used[c] = false;
                }
            }
            total
        }
        rec(a, 0, &mut vec![false; a.len()], &mut Vec::new())
    }

    #[test]
    fn eval_examples() {
        assert_eq!(p(&[1, 0, 1]).eval(&2.into()), 5.into());
        assert_eq!(p(&[0, 1]).eval(&7.into()), 7.into());
        assert_eq!(p(&[3, 2]).eval(&(-1).into()), 1.into());
    }

    #[test]
    fn resultant_examples() {
        let m = sylvester_matrix(&p(&[0, 1]), &p(&[1, 1]));
        assert_eq!(det_leibniz(&m), 1.into());
        assert_eq!(resultant(&p(&[0, 1]), &p(&[1, 1])), 1.into());
        let (u, v) = (p(&[1, 0, 1]), p(&[-1, 0, 1]));
        assert_eq!(det_leibniz(&sylvester_matrix(&u, &v)), 4.into());
        assert_eq!(resultant(&u, &v), 4.into());
        assert_eq!(resultant(&p(&[1, 1]), &p(&[1, 1])), 0.into());
    }

    #[test]
    fn resultant_with_constant() {
        assert_eq!(resultant(&p(&[3]), &p(&[1, 2, 1])), 9.into());
        assert_eq!(resultant(&p(&[1, 2, 1]), &p(&[3])), 9.into());
    }

    #[test]
    fn discriminant_examples() {
        assert_eq!(discriminant(&p(&[1, 0, 1])).unwrap(), (-4).into());
        assert_eq!(discriminant(&p(&[0, 1, 1])).unwrap(), 1.into());
        for (b, a) in [(0, 1), (5, -3), (-7, 12)] {
            assert_eq!(discriminant(&p(&[b, a])).unwrap(), 1.into());
        }
        assert_eq!(discriminant(&p(&[4])), Err(PolyError::Constant));
        // X^3 - X + 1: -4(-1)^3 - 27 = -23
        assert_eq!(discriminant(&p(&[1, -1, 0, 1])).unwrap(), (-23).into());
    }

    #[test]
    fn product_identity_examples() {
        let id = check_product_identity(&p(&[0, 1]), &p(&[1, 1])).unwrap();
        assert_eq!((id.lhs.clone(), id.rhs.clone()), (1.into(), 1.into()));
        assert!(id.holds);
        let id = check_product_identity(&p(&[1, 1]), &p(&[1, 1])).unwrap();
        assert_eq!((id.lhs.clone(), id.rhs.clone()), (0.into(), 0.into()));
        assert!(id.holds);
        let id = check_product_identity(&p(&[1, 0, 1]), &p(&[-1, 0, 1])).unwrap();
        assert!(id.holds && id.lead_weighted_holds);
    }

    #[test]
    fn lead_weighted_form_fails_for_non_monic() {
        // disc((2X+1)X) = 1 while 2 * 1 != 1 * 1 * Res^2 = 1.
        let id = check_product_identity(&p(&[1, 2]), &p(&[0, 1])).unwrap();
        assert!(id.holds);
        assert!(!id.lead_weighted_holds);
    }

    #[test]
    fn parse_and_display() {
        let q = IntPoly::parse(" 1, 0 ,1").unwrap();
        assert_eq!(q, p(&[1, 0, 1]));
        assert_eq!(q.to_string(), "1,0,1");
        assert_eq!(IntPoly::parse("0,0"), Err(PolyError::ZeroPolynomial));
        assert!(matches!(IntPoly::parse("1,x"), Err(PolyError::Parse(_))));
        assert_eq!(p(&[1, 2, 0, 0]).degree(), 1);
    }

    #[test]
    fn norm_skips_constant_term() {
        assert_eq!(p(&[-100, 3, -7]).norm(), 7.into());
        assert_eq!(p(&[5]).norm(), 0.into());
        assert_eq!(p(&[6, 4, 2]).content(), 2.into());
    }

    #[test]
    fn exact_division() {
        let a = p(&[1, 1]);
        let b = p(&[-2, 3, 5]);
        assert_eq!(a.mul(&b).div_exact(&b), Some(a.clone()));
        assert_eq!(p(&[1, 0, 1]).div_exact(&a), None);
        assert_eq!(p(&[2, 2]).div_exact(&p(&[0, 2])), None);
    }

    fn arb_poly(max_deg: usize) -> impl Strategy<Value = IntPoly> {
        (1..=max_deg)
            .prop_flat_map(|d| (prop::collection::vec(-50i64..=50, d), 1i64..=50, any::<bool>()))
            .prop_map(|(mut c, lead, neg)| {
                c.push(if neg { -lead } else { lead });
                IntPoly::from_i64(&c).unwrap()
            })
    }

    proptest! {
        #[test]
        fn product_identity_holds(u in arb_poly(4), v in arb_poly(4)) {
            prop_assert!(check_product_identity(&u, &v).unwrap().holds);
        }

        #[test]
        fn resultant_antisymmetry(u in arb_poly(4), v in arb_poly(4)) {
            let sign = if u.degree() * v.degree() % 2 == 1 { -1 } else { 1 };
            prop_assert_eq!(resultant(&u, &v), resultant(&v, &u) * sign);
        }

        #[test]
        fn bareiss_matches_leibniz(u in arb_poly(3), v in arb_poly(3)) {
            let m = sylvester_matrix(&u, &v);
            prop_assert_eq!(det_bareiss(m.clone()), det_leibniz(&m));
        }

        #[test]
        fn discriminant_shift_invariant(u in arb_poly(4), c in -10i64..=10) {
            prop_assert_eq!(discriminant(&u).unwrap(), discriminant(&u.shift(&c.into())).unwrap());
        }

        #[test]
        fn quadratic_closed_form(a in 1i64..50, b in -50i64..50, c in -50i64..50) {
            prop_assert_eq!(discriminant(&p(&[c, b, a])).unwrap(), BigInt::from(b * b - 4 * a * c));
        }
    }
}
