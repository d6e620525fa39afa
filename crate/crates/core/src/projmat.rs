//! Exact arithmetic for elements of PGL₂(ℚ)⁺ and its ℤ₂ cover.
//!
//! A projective class of a rational 2×2 matrix with positive determinant has a
//! unique representative with integer entries, content 1, and first nonzero
//! entry (scanning a,b,c,d) positive.  `ProjMat` stores that representative,
//! so equality of group elements is equality of structs.  `SignedMat` drops
//! the sign rule and keeps a genuine lift to the double cover, which is where
//! the odd-weight discrete-series coefficients live (π(-1) = -1).

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatError {
    /// Zero determinant: the matrix has no projective class in PGL₂(ℚ)⁺.
    #[error("degenerate matrix: zero determinant")]
    DegenerateMatrix,
    /// Negative determinant cannot be repaired by rescaling (det scales by squares).
    #[error("negative determinant: not in PGL2(Q)+")]
    NegativeDeterminant,
    /// Determinant is not an even power of p, so the element is outside PSL₂(ℤ[1/p]).
    #[error("determinant {0} is not an even power of {1}")]
    NotInG(BigInt, u64),
    #[error("matrix string must contain four integers")]
    Parse,
}

/// A lift of a projective class to the ℤ₂ cover: primitive integer entries,
/// positive determinant, sign NOT normalized.  `m` and `-m` are distinct.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignedMat {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigInt,
}

/// Canonical representative of a projective class: primitive, det > 0, and the
/// first nonzero entry of (a,b,c,d) is positive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProjMat(SignedMat);

fn gcd4(a: &BigInt, b: &BigInt, c: &BigInt, d: &BigInt) -> BigInt {
    a.gcd(b).gcd(&c.gcd(d))
}

impl SignedMat {
    /// Build from raw integers, dividing out the (positive) content.
    /// Dividing by a positive scalar does not move within the cover, so the
    /// sign of the lift is preserved.
    pub fn new<T: Into<BigInt>>(a: T, b: T, c: T, d: T) -> Result<Self, MatError> {
        let (a, b, c, d) = (a.into(), b.into(), c.into(), d.into());
        let det = &a * &d - &b * &c;
        if det.is_zero() {
            return Err(MatError::DegenerateMatrix);
        }
        if det.is_negative() {
            return Err(MatError::NegativeDeterminant);
        }
        let g = gcd4(&a, &b, &c, &d);
        Ok(SignedMat { a: &a / &g, b: &b / &g, c: &c / &g, d: &d / &g })
    }

    pub fn identity() -> Self {
        SignedMat { a: BigInt::one(), b: BigInt::zero(), c: BigInt::zero(), d: BigInt::one() }
    }

    pub fn det(&self) -> BigInt {
        &self.a * &self.d - &self.b * &self.c
    }

    /// True if the first nonzero entry in (a,b,c,d) is positive.
    pub fn is_sign_canonical(&self) -> bool {
        for e in [&self.a, &self.b, &self.c, &self.d] {
            if !e.is_zero() {
                return e.is_positive();
            }
        }
        false
    }

    pub fn neg(&self) -> Self {
        SignedMat { a: -&self.a, b: -&self.b, c: -&self.c, d: -&self.d }
    }

    /// Group law on the cover: integer product with positive content divided out.
    pub fn mul(&self, rhs: &SignedMat) -> SignedMat {
        let a = &self.a * &rhs.a + &self.b * &rhs.c;
        let b = &self.a * &rhs.b + &self.b * &rhs.d;
        let c = &self.c * &rhs.a + &self.d * &rhs.c;
        let d = &self.c * &rhs.b + &self.d * &rhs.d;
        let g = gcd4(&a, &b, &c, &d);
        SignedMat { a: a / &g, b: b / &g, c: c / &g, d: d / &g }
    }

    /// Inverse on the cover.  For the unit-determinant representative m/√det
    /// the inverse is adj(m)/√det, and adj(m) is again primitive.
    pub fn inv(&self) -> SignedMat {
        SignedMat { a: self.d.clone(), b: -&self.b, c: -&self.c, d: self.a.clone() }
    }

    /// Squared Frobenius norm of the unit-determinant real representative
    /// m/√det, i.e. (a²+b²+c²+d²)/det.
    pub fn hs_norm_sq(&self) -> f64 {
        let n = &self.a * &self.a + &self.b * &self.b + &self.c * &self.c + &self.d * &self.d;
        big_to_f64(&n) / big_to_f64(&self.det())
    }

    /// Frobenius (Hilbert–Schmidt) norm of the unit-determinant representative.
    pub fn hs_norm_unit(&self) -> f64 {
        self.hs_norm_sq().sqrt()
    }

    /// Guarded Hilbert–Schmidt norm: requires det = p^{2m} (membership in
    /// PSL₂(ℤ[1/p])), then equals the norm of m/p^m.
    pub fn hs_norm(&self, p: u64) -> Result<f64, MatError> {
        match p_power_exponent(&self.det(), p) {
            Some(k) if k % 2 == 0 => Ok(self.hs_norm_unit()),
            _ => Err(MatError::NotInG(self.det(), p)),
        }
    }

    /// Unit-determinant real representative, row major.
    pub fn unit_entries(&self) -> [f64; 4] {
        let s = big_to_f64(&self.det()).sqrt();
        [
            big_to_f64(&self.a) / s,
            big_to_f64(&self.b) / s,
            big_to_f64(&self.c) / s,
            big_to_f64(&self.d) / s,
        ]
    }

    /// Forget the sign: canonical projective representative.
    pub fn to_proj(&self) -> ProjMat {
        if self.is_sign_canonical() {
            ProjMat(self.clone())
        } else {
            ProjMat(self.neg())
        }
    }

    /// Splits into (projective class, sign relative to the canonical lift).
    pub fn class_and_sign(&self) -> (ProjMat, i8) {
        if self.is_sign_canonical() {
            (ProjMat(self.clone()), 1)
        } else {
            (ProjMat(self.neg()), -1)
        }
    }
}

impl ProjMat {
    /// Canonicalize a rational matrix: clear denominators, divide content,
    /// flip sign so the first nonzero entry is positive.
    pub fn canonicalize(raw: &[BigRational; 4]) -> Result<Self, MatError> {
        let lcm = raw
            .iter()
            .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let ints: Vec<BigInt> = raw.iter().map(|r| (r * &lcm).to_integer()).collect();
        let m = SignedMat::new(ints[0].clone(), ints[1].clone(), ints[2].clone(), ints[3].clone())?;
        Ok(m.to_proj())
    }

    pub fn from_ints<T: Into<BigInt>>(a: T, b: T, c: T, d: T) -> Result<Self, MatError> {
        Ok(SignedMat::new(a, b, c, d)?.to_proj())
    }

    pub fn identity() -> Self {
        ProjMat(SignedMat::identity())
    }

    /// diag(1, n), the standard representative of the double coset with label n.
    pub fn diag_1_n(n: u64) -> Self {
        Self::from_ints(1, 0, 0, n as i64).expect("n > 0")
    }

    pub fn entries(&self) -> (&BigInt, &BigInt, &BigInt, &BigInt) {
        (&self.0.a, &self.0.b, &self.0.c, &self.0.d)
    }

    pub fn det(&self) -> BigInt {
        self.0.det()
    }

    pub fn mul(&self, rhs: &ProjMat) -> ProjMat {
        self.0.mul(&rhs.0).to_proj()
    }

    pub fn inv(&self) -> ProjMat {
        self.0.inv().to_proj()
    }

    /// Γ = PSL₂(ℤ): primitive integer matrices of determinant 1.
    pub fn is_in_gamma(&self) -> bool {
        self.det().is_one()
    }

    /// G = PSL₂(ℤ[1/p]): the determinant of the primitive representative is an
    /// even power of p (dividing by p^m gives a unit-determinant matrix over ℤ[1/p]).
    pub fn is_in_g(&self, p: u64) -> bool {
        matches!(p_power_exponent(&self.det(), p), Some(k) if k % 2 == 0)
    }

    pub fn hs_norm_sq(&self) -> f64 {
        self.0.hs_norm_sq()
    }

    pub fn hs_norm_unit(&self) -> f64 {
        self.0.hs_norm_unit()
    }

    pub fn hs_norm(&self, p: u64) -> Result<f64, MatError> {
        self.0.hs_norm(p)
    }

    /// Canonical lift to the cover (the sign-canonical representative).
    pub fn lift(&self) -> &SignedMat {
        &self.0
    }

    pub fn unit_entries(&self) -> [f64; 4] {
        self.0.unit_entries()
    }

    /// Parse "a b c d" (space separated integers).
    pub fn parse(s: &str) -> Result<Self, MatError> {
        let v: Vec<BigInt> = s
            .split_whitespace()
            .map(|t| t.parse::<BigInt>().map_err(|_| MatError::Parse))
            .collect::<Result<_, _>>()?;
        if v.len() != 4 {
            return Err(MatError::Parse);
        }
        Self::from_ints(v[0].clone(), v[1].clone(), v[2].clone(), v[3].clone())
    }
}

impl fmt::Display for ProjMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.0.a, self.0.b, self.0.c, self.0.d)
    }
}

impl fmt::Display for SignedMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.a, self.b, self.c, self.d)
    }
}

/// If n = p^k returns Some(k), else None.
pub fn p_power_exponent(n: &BigInt, p: u64) -> Option<u32> {
    if !n.is_positive() {
        return None;
    }
    let p = BigInt::from(p);
    let mut n = n.clone();
    let mut k = 0u32;
    while n > BigInt::one() {
        let (q, r) = n.div_rem(&p);
        if !r.is_zero() {
            return None;
        }
        n = q;
        k += 1;
    }
    Some(k)
}

fn big_to_f64(n: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    n.to_f64().expect("finite f64")
}
