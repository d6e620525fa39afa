//! Cosets of Γ = PSL₂(ℤ) inside PGL₂(ℚ)⁺.
//!
//! Left cosets Γg of determinant-n primitive matrices biject with Hermite
//! normal forms (a,b;0,d), ad = n, a,d > 0, 0 ≤ b < d, gcd(a,b,d) = 1.  Every
//! primitive matrix of determinant n has Smith form diag(1,n), so the
//! determinant of the primitive representative classifies double cosets.
//!
//! `CosetSet` canonicalizes point sets σ₁Γσ₂ (coset concatenation); relations
//! between disjoint unions of such sets are decided exactly on a norm ball
//! together with per-set cardinality bookkeeping.

use crate::projmat::ProjMat;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CosetError {
    /// A side of a union relation overlaps itself on the test ball.
    #[error("coset sets on one side of the relation are not disjoint")]
    NotDisjoint,
    /// Determinant does not fit the label type.
    #[error("double coset label out of range")]
    LabelRange,
}

/// Hermite-normal-form representative of a left coset Γg.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LeftCosetRep(ProjMat);

impl LeftCosetRep {
    pub fn mat(&self) -> &ProjMat {
        &self.0
    }

    /// (a, b, d) of the HNF matrix (a,b;0,d).
    pub fn hnf_entries(&self) -> (BigInt, BigInt, BigInt) {
        let (a, b, _, d) = self.0.entries();
        (a.clone(), b.clone(), d.clone())
    }
}

impl fmt::Display for LeftCosetRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.0)
    }
}

/// Double cosets ΓσΓ with σ primitive of determinant n are classified by n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DoubleCosetLabel(pub u64);

impl DoubleCosetLabel {
    pub fn of(m: &ProjMat) -> Result<Self, CosetError> {
        m.det().to_u64().map(DoubleCosetLabel).ok_or(CosetError::LabelRange)
    }
}

impl fmt::Display for DoubleCosetLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Bring g to Hermite normal form by left multiplication from Γ:
/// returns (h, u) with u ∈ Γ, u·g = h upper triangular, diagonal positive,
/// 0 ≤ b < d.
pub fn hnf_reduce(g: &ProjMat) -> (ProjMat, ProjMat) {
    let (a, _, c, _) = g.entries();
    let (a, c) = (a.clone(), c.clone());
    // Euclid on the first column: x·a + y·c = g0 with det(x,y;-c/g0,a/g0) = 1.
    let e = a.extended_gcd(&c);
    let (g0, x, y) = (e.gcd, e.x, e.y);
    let u = ProjMat::from_ints(x, y, -(&c / &g0), &a / &g0).expect("unimodular");
    let h = u.mul(g);
    // h = (g0, *; 0, det/g0); reduce the upper-right entry mod d.
    let (ha, hb, _, hd) = h.entries();
    debug_assert!(ha.is_positive() && hd.is_positive());
    let shift = -hb.div_floor(hd);
    let t = ProjMat::from_ints(BigInt::one(), shift, BigInt::zero(), BigInt::one()).unwrap();
    let h2 = t.mul(&h);
    let u2 = t.mul(&u);
    debug_assert_eq!(u2.mul(g), h2);
    (h2, u2)
}

/// Canonical representative of the left coset Γg.
pub fn left_coset_canonical(g: &ProjMat) -> LeftCosetRep {
    LeftCosetRep(hnf_reduce(g).0)
}

fn transpose(g: &ProjMat) -> ProjMat {
    let (a, b, c, d) = g.entries();
    ProjMat::from_ints(a.clone(), c.clone(), b.clone(), d.clone()).expect("same determinant")
}

/// Column Hermite reduction: returns (h, v) with g·v = h lower triangular.
fn hnf_reduce_cols(g: &ProjMat) -> (ProjMat, ProjMat) {
    let (ht, ut) = hnf_reduce(&transpose(g));
    (transpose(&ht), transpose(&ut))
}

/// Constructive Smith form: returns (l, r) in Γ with l·g·r = diag(1, n) for
/// any primitive g of determinant n.  Witness machinery for double-coset
/// computations.
pub fn smith_reduce(g: &ProjMat) -> (ProjMat, ProjMat) {
    let n = g.det();
    let target = ProjMat::from_ints(BigInt::one(), BigInt::zero(), BigInt::zero(), n.clone())
        .expect("positive determinant");
    let mut l = ProjMat::identity();
    let mut r = ProjMat::identity();
    let mut cur = g.clone();
    for _ in 0..16 {
        let (h, u) = hnf_reduce(&cur);
        l = u.mul(&l);
        cur = h;
        let (h2, v) = hnf_reduce_cols(&cur);
        r = r.mul(&v);
        cur = h2;
        // cur is now diagonal (a,0;0,d); primitivity forces gcd(a,d) = 1,
        // and one mixing step reaches diag(1,n)
        let (a, b, c, d) = cur.entries();
        if b.is_zero() && c.is_zero() {
            if a.is_one() {
                break;
            }
            let (a, d) = (a.clone(), d.clone());
            // add the second row to the first, then clear the top row by a
            // column step using gcd(a,d) = 1
            let add = ProjMat::from_ints(BigInt::one(), BigInt::one(), BigInt::zero(), BigInt::one())
                .unwrap();
            l = add.mul(&l);
            cur = add.mul(&cur);
            let e = a.extended_gcd(&d);
            debug_assert!(e.gcd.is_one());
            let v = ProjMat::from_ints(e.x, -&d, e.y, a.clone()).expect("unimodular");
            r = r.mul(&v);
            cur = cur.mul(&v);
        }
        if cur == target {
            break;
        }
    }
    debug_assert_eq!(l.mul(g).mul(&r), target);
    (l, r)
}

/// All left cosets of Γ inside the double coset with the given label:
/// HNF triples (a,b;0,d), ad = n, 0 ≤ b < d, gcd(a,b,d) = 1, sorted.
pub fn left_cosets_of_double_coset(label: DoubleCosetLabel) -> Vec<LeftCosetRep> {
    let n = label.0;
    let mut out = Vec::new();
    for a in 1..=n {
        if n % a != 0 {
            continue;
        }
        let d = n / a;
        let g0 = a.gcd(&d);
        for b in 0..d {
            if b.gcd(&g0) == 1 {
                out.push(LeftCosetRep(
                    ProjMat::from_ints(a as i64, b as i64, 0, d as i64).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

/// ind[ΓσΓ]: the number of left (equivalently right) cosets of Γ in the
/// double coset.
pub fn ind(label: DoubleCosetLabel) -> u64 {
    let n = label.0;
    let mut count = 0u64;
    for a in 1..=n {
        if n % a != 0 {
            continue;
        }
        let d = n / a;
        let g0 = a.gcd(&d);
        count += (0..d).filter(|b| b.gcd(&g0) == 1).count() as u64;
    }
    count
}

/// Right cosets gΓ inside the double coset, enumerated by the transposed HNF
/// scheme (lower-triangular (a,0;b,d)).  Used to verify that left and right
/// counts agree.
pub fn right_cosets_of_double_coset(label: DoubleCosetLabel) -> Vec<ProjMat> {
    left_cosets_of_double_coset(label)
        .into_iter()
        .map(|r| {
            let (a, b, d) = r.hnf_entries();
            ProjMat::from_ints(a, BigInt::zero(), b, d).unwrap()
        })
        .collect()
}

/// [Γ:Γ_σ] with Γ_σ = σΓσ⁻¹ ∩ Γ, computed as the number of left cosets of Γ
/// inside Γσ⁻¹Γ.
pub fn gamma_sigma_index(sigma: &ProjMat) -> u64 {
    let label = DoubleCosetLabel::of(&sigma.inv()).expect("label fits u64");
    ind(label)
}

/// Canonical form of the point set σ₁Γσ₂.  The Γ-ambiguity (σ₁γ, γ⁻¹σ₂) is
/// resolved by HNF-reducing σ₁⁻¹: we store (l, r) = (σ₁u⁻¹, uσ₂) where
/// u·σ₁⁻¹ is in Hermite normal form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CosetSet {
    l: ProjMat,
    r: ProjMat,
}

impl CosetSet {
    pub fn parts(&self) -> (&ProjMat, &ProjMat) {
        (&self.l, &self.r)
    }

    /// Label of the double coset containing the set (the unions we decide are
    /// always label-homogeneous).
    pub fn label(&self) -> Result<DoubleCosetLabel, CosetError> {
        DoubleCosetLabel::of(&self.l.mul(&self.r))
    }
}

impl fmt::Display for CosetSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} . G . {}]", self.l, self.r)
    }
}

/// The concatenation pairing [σ₁Γ] × [Γσ₂] → [σ₁Γσ₂].
pub fn coset_concat(sigma1: &ProjMat, sigma2: &ProjMat) -> CosetSet {
    let (_, u) = hnf_reduce(&sigma1.inv());
    CosetSet { l: sigma1.mul(&u.inv()), r: u.mul(sigma2) }
}

/// Membership g ∈ σ₁Γσ₂ ⟺ σ₁⁻¹·g·σ₂⁻¹ ∈ Γ.
pub fn cosetset_member(g: &ProjMat, s: &CosetSet) -> bool {
    s.l.inv().mul(g).mul(&s.r.inv()).is_in_gamma()
}

/// All projective classes with determinant n and unit-representative
/// Hilbert–Schmidt norm ≤ radius, i.e. a²+b²+c²+d² ≤ radius²·n, primitive,
/// det n.  This is the finite ball on which union relations are decided.
pub fn enumerate_det_ball(n: u64, radius: f64) -> Vec<ProjMat> {
    let cap = radius * radius * n as f64;
    let bound = cap.sqrt().floor() as i64;
    let nn = BigInt::from(n);
    let mut out = BTreeSet::new();
    for a in -bound..=bound {
        let ra = cap - (a * a) as f64;
        if ra < 0.0 {
            continue;
        }
        let bb = ra.sqrt().floor() as i64;
        for b in -bb..=bb {
            let rb = ra - (b * b) as f64;
            let cb = rb.sqrt().floor() as i64;
            for c in -cb..=cb {
                // a*d - b*c = n  =>  d = (n + b*c)/a when a != 0
                if a != 0 {
                    let num = n as i64 + b * c;
                    if num % a != 0 {
                        continue;
                    }
                    let d = num / a;
                    if (a * a + b * b + c * c + d * d) as f64 <= cap {
                        if let Ok(m) = ProjMat::from_ints(a, b, c, d) {
                            if m.det() == nn {
                                out.insert(m);
                            }
                        }
                    }
                } else {
                    // -b*c = n with d free
                    if b == 0 || c == 0 || (-b).checked_mul(c) != Some(n as i64) {
                        continue;
                    }
                    let rd = (rb - (c * c) as f64).max(-1.0);
                    if rd < 0.0 {
                        continue;
                    }
                    let db = rd.sqrt().floor() as i64;
                    for d in -db..=db {
                        if let Ok(m) = ProjMat::from_ints(a, b, c, d) {
                            if m.det() == nn {
                                out.insert(m);
                            }
                        }
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Decide Σ lhs = Σ rhs as disjoint unions, sound and complete on the
/// norm ball of the given radius.  Each side must be internally disjoint on
/// the ball (error otherwise); both sides must consist of sets with the same
/// determinant label.  One CosetSet accounts for one Γ-sized sheet, so equal
/// union plus internal disjointness forces equal sheet counts, which is
/// checked exactly.
pub fn union_relation_holds(
    lhs: &[CosetSet],
    rhs: &[CosetSet],
    radius: f64,
) -> Result<bool, CosetError> {
    let mut labels = BTreeSet::new();
    for s in lhs.iter().chain(rhs.iter()) {
        labels.insert(s.label()?.0);
    }
    let mut agree = true;
    for n in labels {
        for g in enumerate_det_ball(n, radius) {
            let in_l = members_of(&g, lhs)?;
            let in_r = members_of(&g, rhs)?;
            if in_l != in_r {
                agree = false;
            }
        }
    }
    // cardinality bookkeeping: each CosetSet is one Γ-sized sheet, so a
    // disjoint-union equality needs equally many sheets on both sides
    Ok(agree && lhs.len() == rhs.len())
}

fn members_of(g: &ProjMat, side: &[CosetSet]) -> Result<bool, CosetError> {
    let mut hits = 0;
    for s in side {
        if cosetset_member(g, s) {
            hits += 1;
        }
    }
    match hits {
        0 => Ok(false),
        1 => Ok(true),
        _ => Err(CosetError::NotDisjoint),
    }
}

/// The double coset with the given label as a list of CosetSets (one per
/// left coset), for use in union relations.
pub fn double_coset_as_sets(label: DoubleCosetLabel) -> Vec<CosetSet> {
    left_cosets_of_double_coset(label)
        .into_iter()
        .map(|rep| coset_concat(&ProjMat::identity(), rep.mat()))
        .collect()
}
