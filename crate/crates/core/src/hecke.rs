//! The Hecke algebra ℋ₀ of double cosets of Γ in PGL₂(ℚ)⁺.
//!
//! Elements are finitely supported rational combinations of double-coset
//! labels.  The product is computed by enumerating products of left-coset
//! representatives and dividing the per-label sheet counts by ind — the
//! division must be exact, which doubles as a self-test of the coset
//! combinatorics.  A slow independent multiplicity count (`c_multiplicity`)
//! implements the classical θ₂-existence formula for cross-validation.

use crate::cosets::{
    self, left_coset_canonical, left_cosets_of_double_coset, CosetError, DoubleCosetLabel,
    LeftCosetRep,
};
use crate::projmat::ProjMat;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HeckeError {
    /// A sheet count failed to divide by ind: the combinatorics are broken.
    #[error("internal invariant violation: sheet count {count} not divisible by ind {ind} at label {label}")]
    InternalInvariantViolation { label: u64, count: u64, ind: u64 },
    #[error(transparent)]
    Coset(#[from] CosetError),
}

/// Sparse rational combination of double cosets; zero coefficients absent.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HeckeElement {
    coeffs: BTreeMap<DoubleCosetLabel, BigRational>,
}

/// Sparse rational combination of left cosets Γg (vectors in ℓ²(Γ\G)).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CosetVector {
    coeffs: BTreeMap<LeftCosetRep, BigRational>,
}

impl HeckeElement {
    pub fn zero() -> Self {
        Self::default()
    }

    /// δ_e, the identity of ℋ₀.
    pub fn delta_e() -> Self {
        Self::basis(DoubleCosetLabel(1))
    }

    pub fn basis(label: DoubleCosetLabel) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(label, BigRational::one());
        HeckeElement { coeffs }
    }

    /// χ_k = [Γ σ_{p^k} Γ].
    pub fn chi(p: u64, k: u32) -> Self {
        Self::basis(DoubleCosetLabel(p.pow(k)))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&DoubleCosetLabel, &BigRational)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, label: DoubleCosetLabel) -> BigRational {
        self.coeffs.get(&label).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn insert(&mut self, label: DoubleCosetLabel, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(label).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.coeffs.remove(&label);
        }
    }

    pub fn scaled(&self, c: &BigRational) -> Self {
        let mut out = Self::zero();
        for (l, v) in &self.coeffs {
            out.insert(*l, v * c);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (l, v) in &other.coeffs {
            out.insert(*l, v.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (l, v) in &other.coeffs {
            out.insert(*l, -v.clone());
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

impl fmt::Display for HeckeElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (i, (l, v)) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}*[{}]", v, l)?;
        }
        Ok(())
    }
}

/// Product of two basis double cosets, as a label → multiplicity map.
/// Enumerates the multiset {Γ a_i b_j}, groups by label, divides by ind.
pub fn mul_basis(
    x: DoubleCosetLabel,
    y: DoubleCosetLabel,
) -> Result<BTreeMap<DoubleCosetLabel, u64>, HeckeError> {
    let xs = left_cosets_of_double_coset(x);
    let ys = left_cosets_of_double_coset(y);
    let counts: BTreeMap<LeftCosetRep, u64> = xs
        .par_iter()
        .map(|a| {
            let mut local: BTreeMap<LeftCosetRep, u64> = BTreeMap::new();
            for b in &ys {
                let rep = left_coset_canonical(&a.mat().mul(b.mat()));
                *local.entry(rep).or_insert(0) += 1;
            }
            local
        })
        .reduce(BTreeMap::new, |mut acc, local| {
            for (k, v) in local {
                *acc.entry(k).or_insert(0) += v;
            }
            acc
        });
    let mut by_label: BTreeMap<DoubleCosetLabel, u64> = BTreeMap::new();
    for (rep, v) in counts {
        let label = DoubleCosetLabel::of(rep.mat())?;
        *by_label.entry(label).or_insert(0) += v;
    }
    let mut out = BTreeMap::new();
    for (label, count) in by_label {
        let ind = cosets::ind(label);
        if count % ind != 0 {
            return Err(HeckeError::InternalInvariantViolation { label: label.0, count, ind });
        }
        out.insert(label, count / ind);
    }
    Ok(out)
}

/// Bilinear extension of the double-coset product.
pub fn hecke_mul(x: &HeckeElement, y: &HeckeElement) -> Result<HeckeElement, HeckeError> {
    let mut out = HeckeElement::zero();
    for (lx, cx) in x.terms() {
        for (ly, cy) in y.terms() {
            let prod = mul_basis(*lx, *ly)?;
            for (label, mult) in prod {
                out.insert(label, cx * cy * BigRational::from_integer(mult.into()));
            }
        }
    }
    Ok(out)
}

/// Independent multiplicity oracle: c(σ₁,σ₂,z) counts left cosets Γθ₂ ⊆ Γσ₂Γ
/// such that z·θ₂⁻¹ still lies in Γσ₁Γ.
pub fn c_multiplicity(
    s1: DoubleCosetLabel,
    s2: DoubleCosetLabel,
    z: &ProjMat,
) -> Result<u64, HeckeError> {
    let mut count = 0;
    for b in left_cosets_of_double_coset(s2) {
        let w = z.mul(&b.mat().inv());
        if DoubleCosetLabel::of(&w)? == s1 {
            count += 1;
        }
    }
    Ok(count)
}

/// Involution [ΓσΓ]* = [Γσ⁻¹Γ] extended antilinearly (rational coefficients
/// are fixed by conjugation).
pub fn adjoint(x: &HeckeElement) -> HeckeElement {
    let mut out = HeckeElement::zero();
    for (l, c) in x.terms() {
        let inv_label = DoubleCosetLabel::of(&ProjMat::diag_1_n(l.0).inv()).expect("label fits");
        out.insert(inv_label, c.clone());
    }
    out
}

/// The index character ind: ℋ₀ → ℚ, multiplicative on products.
pub fn ind_hom(x: &HeckeElement) -> BigRational {
    let mut acc = BigRational::zero();
    for (l, c) in x.terms() {
        acc += c * BigRational::from_integer(cosets::ind(*l).into());
    }
    acc
}

/// The canonical state φ(x) = ⟨x[Γ],[Γ]⟩: the coefficient of the identity label.
pub fn state_phi(x: &HeckeElement) -> BigRational {
    x.coeff(DoubleCosetLabel(1))
}

impl CosetVector {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The basis vector [Γ].
    pub fn gamma() -> Self {
        Self::basis(left_coset_canonical(&ProjMat::identity()))
    }

    pub fn basis(rep: LeftCosetRep) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(rep, BigRational::one());
        CosetVector { coeffs }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&LeftCosetRep, &BigRational)> {
        self.coeffs.iter()
    }

    pub fn insert(&mut self, rep: LeftCosetRep, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(rep.clone()).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.coeffs.remove(&rep);
        }
    }

    pub fn coeff(&self, rep: &LeftCosetRep) -> BigRational {
        self.coeffs.get(rep).cloned().unwrap_or_else(BigRational::zero)
    }
}

impl fmt::Display for CosetVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (i, (l, v)) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}*{}", v, l)?;
        }
        Ok(())
    }
}

/// Left regular representation: [ΓgΓ]·[Γh] = Σ_{Γg_i ⊆ ΓgΓ} [Γ g_i h].
pub fn act_left_regular(x: &HeckeElement, v: &CosetVector) -> CosetVector {
    let mut out = CosetVector::zero();
    for (label, c) in x.terms() {
        let gis = left_cosets_of_double_coset(*label);
        for (h, w) in v.terms() {
            for gi in &gis {
                out.insert(left_coset_canonical(&gi.mat().mul(h.mat())), c * w);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rational(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn identity_element() {
        let x = HeckeElement::chi(2, 3).add(&HeckeElement::chi(2, 1).scaled(&rational(-2)));
        assert_eq!(hecke_mul(&HeckeElement::delta_e(), &x).unwrap(), x);
        assert_eq!(hecke_mul(&x, &HeckeElement::delta_e()).unwrap(), x);
    }

    #[test]
    fn chi_recurrence_p2() {
        // χ₁χ₁ = χ₂ + (p+1)δ_e
        let chi1 = HeckeElement::chi(2, 1);
        let got = hecke_mul(&chi1, &chi1).unwrap();
        let want = HeckeElement::chi(2, 2).add(&HeckeElement::delta_e().scaled(&rational(3)));
        assert_eq!(got, want);
        // χ₁χ₃ = χ₄ + pχ₂
        let got = hecke_mul(&chi1, &HeckeElement::chi(2, 3)).unwrap();
        let want = HeckeElement::chi(2, 4).add(&HeckeElement::chi(2, 2).scaled(&rational(2)));
        assert_eq!(got, want);
    }

    #[test]
    fn chi_recurrence_all_small_primes() {
        for p in [2u64, 3, 5] {
            let chi1 = HeckeElement::chi(p, 1);
            let got = hecke_mul(&chi1, &chi1).unwrap();
            let want = HeckeElement::chi(p, 2)
                .add(&HeckeElement::delta_e().scaled(&rational((p + 1) as i64)));
            assert_eq!(got, want, "p={p} n=1");
            for n in 2..=4u32 {
                let got = hecke_mul(&chi1, &HeckeElement::chi(p, n)).unwrap();
                let want = HeckeElement::chi(p, n + 1)
                    .add(&HeckeElement::chi(p, n - 1).scaled(&rational(p as i64)));
                assert_eq!(got, want, "p={p} n={n}");
            }
        }
    }

    #[test]
    fn theta2_formula_cross_validates() {
        // the two multiplicity computations agree, including on labels
        // mixing distinct primes
        for (l1, l2) in [(2u64, 2u64), (2, 4), (2, 3), (6, 2), (4, 6), (3, 9)] {
            let prod = mul_basis(DoubleCosetLabel(l1), DoubleCosetLabel(l2)).unwrap();
            for (z_label, mult) in &prod {
                let z = ProjMat::diag_1_n(z_label.0);
                let oracle =
                    c_multiplicity(DoubleCosetLabel(l1), DoubleCosetLabel(l2), &z).unwrap();
                assert_eq!(*mult, oracle, "labels {l1},{l2} at {z_label}");
            }
        }
    }

    #[test]
    fn adjoint_fixes_generators() {
        for p in [2u64, 3] {
            for k in 0..4 {
                let chi = HeckeElement::chi(p, k);
                assert_eq!(adjoint(&chi), chi);
            }
        }
        let x = HeckeElement::chi(2, 1)
            .scaled(&rational(2))
            .add(&HeckeElement::chi(2, 2).scaled(&rational(-1)));
        assert_eq!(adjoint(&x), x);
    }

    #[test]
    fn ind_hom_multiplicative() {
        let chi1 = HeckeElement::chi(2, 1);
        assert_eq!(ind_hom(&HeckeElement::delta_e()), rational(1));
        assert_eq!(ind_hom(&chi1), rational(3));
        let sq = hecke_mul(&chi1, &chi1).unwrap();
        assert_eq!(ind_hom(&sq), rational(9));
        let x = HeckeElement::chi(2, 2);
        let y = HeckeElement::chi(2, 3).add(&HeckeElement::delta_e().scaled(&rational(5)));
        let xy = hecke_mul(&x, &y).unwrap();
        assert_eq!(ind_hom(&xy), ind_hom(&x) * ind_hom(&y));
    }

    #[test]
    fn state_phi_values() {
        assert_eq!(state_phi(&HeckeElement::delta_e()), rational(1));
        for n in 1..=4 {
            assert_eq!(state_phi(&HeckeElement::chi(2, n)), rational(0));
        }
        // φ(χ₁*χ₁) = ind χ₁
        let chi1 = HeckeElement::chi(2, 1);
        let prod = hecke_mul(&adjoint(&chi1), &chi1).unwrap();
        assert_eq!(state_phi(&prod), rational(3));
    }

    #[test]
    fn trace_property() {
        let x = HeckeElement::chi(2, 1).add(&HeckeElement::chi(2, 2).scaled(&rational(3)));
        let y = HeckeElement::chi(2, 3).add(&HeckeElement::delta_e().scaled(&rational(-2)));
        let xy = hecke_mul(&x, &y).unwrap();
        let yx = hecke_mul(&y, &x).unwrap();
        assert_eq!(state_phi(&xy), state_phi(&yx));
    }

    #[test]
    fn left_regular_action() {
        let chi1 = HeckeElement::chi(2, 1);
        let got = act_left_regular(&chi1, &CosetVector::gamma());
        let mut want = CosetVector::zero();
        for rep in left_cosets_of_double_coset(DoubleCosetLabel(2)) {
            want.insert(rep, rational(1));
        }
        assert_eq!(got, want);
        // δ_e acts as the identity
        let v = got.clone();
        assert_eq!(act_left_regular(&HeckeElement::delta_e(), &v), v);
    }

    #[test]
    fn representation_property() {
        // act(x, act(y, v)) = act(xy, v), exact
        let v = CosetVector::gamma();
        for (x, y) in [
            (HeckeElement::chi(2, 1), HeckeElement::chi(2, 1)),
            (HeckeElement::chi(2, 1), HeckeElement::chi(2, 2)),
            (HeckeElement::chi(2, 2), HeckeElement::chi(2, 1)),
        ] {
            let lhs = act_left_regular(&x, &act_left_regular(&y, &v));
            let rhs = act_left_regular(&hecke_mul(&x, &y).unwrap(), &v);
            assert_eq!(lhs, rhs);
        }
        // also from a non-trivial starting vector
        let v2 = act_left_regular(&HeckeElement::chi(2, 1), &v);
        let x = HeckeElement::chi(2, 1);
        let y = HeckeElement::chi(2, 2);
        assert_eq!(
            act_left_regular(&x, &act_left_regular(&y, &v2)),
            act_left_regular(&hecke_mul(&x, &y).unwrap(), &v2)
        );
    }
}
