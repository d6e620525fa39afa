//! Radial model of the p-power Hecke subalgebra on the (p+1)-regular tree.
//!
//! χ₁ acts on the tree as the adjacency operator, so moments of the canonical
//! trace are closed-walk counts at the root, and the spectral measure is the
//! Kesten–McKay density on [−2√p, 2√p].  The orthogonal polynomials tₙ(λ)
//! (t₀ = 1, t₁ = λ, λt₁ = t₂ + (p+1), λtₙ = t₊₁ + p·tₙ₋₁) evaluate the
//! characters φ_λ(χₙ) = tₙ(λ).
//!
//! Two distinct positivity notions matter here.  The character φ_λ is
//! multiplicative, so any Gram matrix [φ_λ(χᵢχⱼ)] is rank one and positive
//! semidefinite for every real λ.  The sharp positivity window |λ| ≤ p+1
//! belongs to the normalized radial kernel u_λ(d) = t_d(λ)/ind(p^d) viewed as
//! a two-point kernel on tree vertices, which `radial_kernel_gram` exposes.

use crate::cosets::{self, DoubleCosetLabel};
use crate::hecke::{hecke_mul, HeckeElement};
use crate::projmat::p_power_exponent;
use crate::quad::{adaptive_simpson, QuadratureFailure};
use nalgebra::DMatrix;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RadialError {
    #[error("element has a label that is not a power of {0}")]
    NotRadial(u64),
    #[error("quadrature failed to converge")]
    QuadratureFailure,
    #[error("|lambda| = {0} exceeds the positivity window [-(p+1), p+1]")]
    OutsidePositivityWindow(f64),
}

impl From<QuadratureFailure> for RadialError {
    fn from(_: QuadratureFailure) -> Self {
        RadialError::QuadratureFailure
    }
}

/// Dense polynomial with exact rational coefficients, low degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly(pub Vec<BigRational>);

impl Poly {
    pub fn zero() -> Self {
        Poly(vec![])
    }

    pub fn constant(c: BigRational) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            Poly(vec![c])
        }
    }

    fn x() -> Self {
        Poly(vec![BigRational::zero(), BigRational::one()])
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        let mut v = vec![BigRational::zero(); n];
        for (i, c) in self.0.iter().enumerate() {
            v[i] += c;
        }
        for (i, c) in other.0.iter().enumerate() {
            v[i] += c;
        }
        Poly(trim(v))
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        Poly(trim(self.0.iter().map(|a| a * c).collect()))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly::zero();
        }
        let mut v = vec![BigRational::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        Poly(trim(v))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| {
            acc * x + c.to_f64().expect("coefficient fits f64")
        })
    }
}

fn trim(mut v: Vec<BigRational>) -> Vec<BigRational> {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
    v
}

/// tₙ as an exact integer-coefficient polynomial in λ.
pub fn t_poly(n: u32, p: u64) -> Poly {
    let mut polys: Vec<Poly> = vec![Poly::constant(BigRational::one()), Poly::x()];
    let x = Poly::x();
    let p_rat = BigRational::from_integer(BigInt::from(p));
    let p1_rat = BigRational::from_integer(BigInt::from(p + 1));
    for k in 2..=n as usize {
        let prev = &polys[k - 1];
        let prev2 = &polys[k - 2];
        let low = if k == 2 { &p1_rat } else { &p_rat };
        polys.push(x.mul(prev).add(&prev2.scale(&-low.clone())));
    }
    polys.truncate(n as usize + 1);
    polys.pop().unwrap()
}

/// Forward three-term recurrence evaluation of tₙ(λ).
pub fn t_poly_eval(n: u32, lambda: f64, p: u64) -> f64 {
    match n {
        0 => 1.0,
        1 => lambda,
        _ => {
            let mut prev = lambda; // t1
            let mut cur = lambda * lambda - (p as f64 + 1.0); // t2
            for _ in 2..n {
                let next = lambda * cur - p as f64 * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

fn radial_exponent(label: DoubleCosetLabel, p: u64) -> Result<u32, RadialError> {
    p_power_exponent(&BigInt::from(label.0), p).ok_or(RadialError::NotRadial(p))
}

/// φ_λ(x) = Σ coeff·t_k(λ) for x supported on p-power labels.
pub fn char_phi_lambda(x: &HeckeElement, lambda: f64, p: u64) -> Result<f64, RadialError> {
    let mut acc = 0.0;
    for (label, c) in x.terms() {
        let k = radial_exponent(*label, p)?;
        acc += c.to_f64().expect("rational fits f64") * t_poly_eval(k, lambda, p);
    }
    Ok(acc)
}

/// φ_λ(x) as an exact polynomial in λ.
pub fn char_phi_poly(x: &HeckeElement, p: u64) -> Result<Poly, RadialError> {
    let mut acc = Poly::zero();
    for (label, c) in x.terms() {
        let k = radial_exponent(*label, p)?;
        acc = acc.add(&t_poly(k, p).scale(c));
    }
    Ok(acc)
}

/// Closed walks of length m at the root of the (p+1)-regular tree, by dynamic
/// programming over the distance from the root.
pub fn tree_moment(m: u32, p: u64) -> BigUint {
    let m = m as usize;
    // dist[d] = number of walks currently ending at distance d
    let mut dist: Vec<BigUint> = vec![BigUint::zero(); m + 2];
    dist[0] = BigUint::one();
    let p_big = BigUint::from(p);
    let deg = BigUint::from(p + 1);
    for _ in 0..m {
        let mut next = vec![BigUint::zero(); m + 2];
        for d in 0..=m {
            if dist[d].is_zero() {
                continue;
            }
            if d == 0 {
                next[1] += &dist[0] * &deg;
            } else {
                next[d - 1] += &dist[d];
                next[d + 1] += &dist[d] * &p_big;
            }
        }
        dist = next;
    }
    dist[0].clone()
}

/// The Kesten–McKay spectral measure of χ₁ on [−2√p, 2√p].
#[derive(Debug, Clone, Copy)]
pub struct SpectralMeasure {
    pub p: u64,
}

impl SpectralMeasure {
    pub fn support(&self) -> (f64, f64) {
        let r = 2.0 * (self.p as f64).sqrt();
        (-r, r)
    }

    /// density λ ↦ (p+1)√(4p−λ²) / (2π((p+1)²−λ²))
    pub fn density(&self, lambda: f64) -> f64 {
        let p = self.p as f64;
        let disc = 4.0 * p - lambda * lambda;
        if disc <= 0.0 {
            return 0.0;
        }
        (p + 1.0) * disc.sqrt() / (2.0 * std::f64::consts::PI * ((p + 1.0) * (p + 1.0) - lambda * lambda))
    }

    /// ∫ λ^m dμ with the endpoint square-root weight removed by the
    /// substitution λ = 2√p sin θ, which makes the integrand smooth.
    pub fn moment(&self, m: u32) -> Result<f64, RadialError> {
        let p = self.p as f64;
        let r = 2.0 * p.sqrt();
        let f = |theta: f64| {
            let lam = r * theta.sin();
            let cos = theta.cos();
            // dλ = r cosθ dθ and √(4p−λ²) = r cosθ
            lam.powi(m as i32) * (p + 1.0) * r * cos * r * cos
                / (2.0 * std::f64::consts::PI * ((p + 1.0) * (p + 1.0) - lam * lam))
        };
        let half_pi = std::f64::consts::FRAC_PI_2;
        // absolute tolerance scaled to the integrand magnitude (~ r^{m+2})
        let tol = 1e-12 * r.powi(m as i32 + 2).max(1.0);
        Ok(adaptive_simpson(&f, -half_pi, half_pi, tol)?)
    }
}

/// Quadrature moment of the Kesten–McKay density; validated against
/// `tree_moment` (the ground truth).
pub fn km_moment(m: u32, p: u64) -> Result<f64, RadialError> {
    SpectralMeasure { p }.moment(m)
}

/// √(m_{2k+2}/m_{2k}) from tree moments: a monotone lower approximation of
/// the spectral radius 2√p.
pub fn spectral_radius_estimate(p: u64, m: u32) -> f64 {
    let hi = tree_moment(2 * m + 2, p);
    let lo = tree_moment(2 * m, p);
    let ratio = BigRational::new(hi.into(), lo.into());
    ratio.to_f64().expect("moment ratio fits f64").sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Temper {
    Tempered,
    Untempered,
}

/// Classify λ inside the positivity window: tempered iff the spherical bound
/// |tₙ(λ)| ≤ (n+1)p^{n/2} holds (1% slack), with an exponential blow-up test
/// at depth n_max catching the untempered range.
pub fn multiplier_growth_test(lambda: f64, p: u64, n_max: u32) -> Result<Temper, RadialError> {
    let tol = 0.01;
    if lambda.abs() > p as f64 + 1.0 {
        return Err(RadialError::OutsidePositivityWindow(lambda));
    }
    let sqrt_p = (p as f64).sqrt();
    let mut worst_ratio: f64 = 0.0;
    for n in 0..=n_max {
        let bound = (n as f64 + 1.0) * sqrt_p.powi(n as i32);
        worst_ratio = worst_ratio.max(t_poly_eval(n, lambda, p).abs() / bound);
    }
    // strip the linear-in-n factor allowed at the spectral edge before taking
    // the n-th root, so λ = 2√p itself stays tempered
    let blowup = (t_poly_eval(n_max, lambda, p).abs() / (n_max as f64 + 1.0))
        .powf(1.0 / n_max as f64);
    if blowup > sqrt_p * (1.0 + tol) || worst_ratio > 1.0 + tol {
        Ok(Temper::Untempered)
    } else {
        Ok(Temper::Tempered)
    }
}

/// The literal character Gram [φ_λ(χᵢ·χⱼ)].  φ_λ is multiplicative, so this
/// matrix is rank one and PSD for every real λ; it serves as a consistency
/// check, not a window discriminator.
pub fn char_product_gram(
    lambda: f64,
    p: u64,
    indices: &[u32],
) -> Result<DMatrix<f64>, RadialError> {
    let n = indices.len();
    let mut m = DMatrix::zeros(n, n);
    for (i, &ki) in indices.iter().enumerate() {
        for (j, &kj) in indices.iter().enumerate() {
            let prod = hecke_mul(&HeckeElement::chi(p, ki), &HeckeElement::chi(p, kj))
                .expect("p-power product");
            m[(i, j)] = char_phi_lambda(&prod, lambda, p)?;
        }
    }
    Ok(m)
}

/// Gram of the normalized radial kernel u_λ(d) = t_d(λ)/ind(p^d) at vertices
/// sitting at the given positions along a tree geodesic.  Positive
/// semidefinite exactly for λ in [−(p+1), p+1].
pub fn radial_kernel_gram(lambda: f64, p: u64, indices: &[u32]) -> DMatrix<f64> {
    let n = indices.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let d = indices[i].abs_diff(indices[j]);
            m[(i, j)] = normalized_u(d, lambda, p);
        }
    }
    m
}

fn normalized_u(d: u32, lambda: f64, p: u64) -> f64 {
    if d == 0 {
        1.0
    } else {
        t_poly_eval(d, lambda, p) / cosets::ind(DoubleCosetLabel(p.pow(d))) as f64
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Min eigenvalue of the radial kernel Gram: the positivity discriminator
/// used by the verification suite.
pub fn gram_psd_phi_lambda(lambda: f64, p: u64, indices: &[u32]) -> f64 {
    min_eigenvalue(&radial_kernel_gram(lambda, p, indices))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_poly_base_and_recurrence() {
        for lam in [-1.7, 0.0, 0.3, 2.9] {
            assert_eq!(t_poly_eval(0, lam, 2), 1.0);
            assert_eq!(t_poly_eval(1, lam, 2), lam);
        }
        // recurrence oracle at p=2, λ=3: t₂ = λt₁ − (p+1) = 6, t₃ = λt₂ − pt₁ = 12
        assert_eq!(t_poly_eval(2, 3.0, 2), 6.0);
        assert_eq!(t_poly_eval(3, 3.0, 2), 12.0);
        // polynomial coefficients agree with the evaluation path
        for n in 0..8 {
            for lam in [-2.0, 0.7, 1.9] {
                let a = t_poly(n, 3).eval(lam);
                let b = t_poly_eval(n, lam, 3);
                assert!((a - b).abs() < 1e-9, "n={n} lam={lam}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn char_values() {
        let p = 2;
        for lam in [0.0, 1.0, 2.5] {
            assert_eq!(char_phi_lambda(&HeckeElement::delta_e(), lam, p).unwrap(), 1.0);
            // φ_λ(χ₁·χ₁) = t₂ + 3 = λ²
            let sq = hecke_mul(&HeckeElement::chi(p, 1), &HeckeElement::chi(p, 1)).unwrap();
            let v = char_phi_lambda(&sq, lam, p).unwrap();
            assert!((v - lam * lam).abs() < 1e-12);
        }
        // t₂(2√p) = 4p − (p+1) = 3p−1
        for p in [2u64, 3, 5] {
            let lam = 2.0 * (p as f64).sqrt();
            let v = char_phi_lambda(&HeckeElement::chi(p, 2), lam, p).unwrap();
            assert!((v - (3.0 * p as f64 - 1.0)).abs() < 1e-9);
        }
        // non-p-power labels are rejected
        let bad = HeckeElement::basis(DoubleCosetLabel(6));
        assert!(matches!(
            char_phi_lambda(&bad, 1.0, 2),
            Err(RadialError::NotRadial(2))
        ));
    }

    #[test]
    fn char_multiplicative_exact() {
        // char(x·y) = char(x)·char(y) as exact polynomials in λ
        let p = 2;
        let x = HeckeElement::chi(p, 1);
        let y = HeckeElement::chi(p, 2);
        let xy = hecke_mul(&x, &y).unwrap();
        let lhs = char_phi_poly(&xy, p).unwrap();
        let rhs = char_phi_poly(&x, p).unwrap().mul(&char_phi_poly(&y, p).unwrap());
        assert_eq!(lhs, rhs);
        let yy = hecke_mul(&y, &y).unwrap();
        assert_eq!(
            char_phi_poly(&yy, p).unwrap(),
            char_phi_poly(&y, p).unwrap().mul(&char_phi_poly(&y, p).unwrap())
        );
    }

    #[test]
    fn tree_moments_small() {
        assert_eq!(tree_moment(0, 2), BigUint::from(1u32));
        assert_eq!(tree_moment(2, 2), BigUint::from(3u32));
        // d² + dq with d = 3, q = 2
        assert_eq!(tree_moment(4, 2), BigUint::from(15u32));
        // odd moments vanish (bipartite tree)
        for m in [1u32, 3, 5, 7] {
            assert_eq!(tree_moment(m, 2), BigUint::zero());
            assert_eq!(tree_moment(m, 3), BigUint::zero());
        }
        // φ(χ₁^2) = ind χ₁ for all p
        for p in [2u64, 3, 5, 7] {
            assert_eq!(tree_moment(2, p), BigUint::from(p + 1));
        }
    }

    #[test]
    fn km_moments_match_tree() {
        for p in [2u64, 3, 5] {
            for m in (0..=12).step_by(2) {
                let t = tree_moment(m, p).to_f64().unwrap();
                let q = km_moment(m, p).unwrap();
                assert!(
                    (q - t).abs() <= 1e-8 * t.max(1.0),
                    "p={p} m={m}: quad {q} vs tree {t}"
                );
            }
            // mass is 1 and odd moments vanish
            assert!((km_moment(0, p).unwrap() - 1.0).abs() < 1e-10);
            assert!(km_moment(3, p).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn spectral_radius_monotone_to_edge() {
        for p in [2u64, 3] {
            let edge = 2.0 * (p as f64).sqrt();
            let mut prev = 0.0;
            for m in 1..=40 {
                let est = spectral_radius_estimate(p, m);
                assert!(est >= prev - 1e-12, "monotone failure at m={m}");
                assert!(est <= edge + 1e-9, "estimate exceeds the edge at m={m}");
                prev = est;
            }
            // √(15/3) = √5 at p=2, m=1
            if p == 2 {
                assert!((spectral_radius_estimate(2, 1) - 5f64.sqrt()).abs() < 1e-12);
            }
            assert!(prev > 0.9 * edge, "within 10% of 2√p at depth 40");
        }
    }

    #[test]
    fn temperedness_classification() {
        for p in [2u64, 3] {
            let edge = 2.0 * (p as f64).sqrt();
            assert_eq!(multiplier_growth_test(0.0, p, 40).unwrap(), Temper::Tempered);
            assert_eq!(multiplier_growth_test(edge, p, 40).unwrap(), Temper::Tempered);
            assert_eq!(
                multiplier_growth_test(0.9 * edge, p, 40).unwrap(),
                Temper::Tempered
            );
            assert_eq!(
                multiplier_growth_test(1.05 * edge, p, 40).unwrap(),
                Temper::Untempered
            );
        }
        assert!(matches!(
            multiplier_growth_test(3.5, 2, 40),
            Err(RadialError::OutsidePositivityWindow(_))
        ));
    }

    #[test]
    fn char_product_gram_is_rank_one_psd() {
        let idx = [0u32, 1, 2, 3, 4];
        for lam in [-2.8, -1.0, 0.0, 1.3, 2.8, 4.0] {
            let m = char_product_gram(lam, 2, &idx).unwrap();
            let min = min_eigenvalue(&m);
            assert!(min >= -1e-9 * m.trace().abs().max(1.0), "λ={lam}: min {min}");
        }
        let single = char_product_gram(0.4, 2, &[0]).unwrap();
        assert!((single[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn radial_kernel_window() {
        let idx = [0u32, 1, 2, 3, 4];
        for p in [2u64, 3] {
            let edge = 2.0 * (p as f64).sqrt();
            // PSD inside the Ramanujan window
            for k in 0..=10 {
                let lam = edge * (k as f64 / 10.0 * 2.0 - 1.0);
                let min = gram_psd_phi_lambda(lam, p, &idx);
                assert!(min >= -1e-9, "p={p} λ={lam}: {min}");
            }
            // PSD on the whole positivity window [−(p+1), p+1]
            for lam in [-(p as f64 + 1.0), p as f64 + 1.0] {
                assert!(gram_psd_phi_lambda(lam, p, &idx) >= -1e-9);
            }
            // a genuinely negative eigenvalue appears at λ = p+2
            let min = gram_psd_phi_lambda(p as f64 + 2.0, p, &idx);
            assert!(min < -1e-3, "p={p}: expected negative eigenvalue, got {min}");
        }
        // search oracle over small index windows confirms the 2-point kernel
        // already fails beyond the window
        let two = gram_psd_phi_lambda(4.0, 2, &[0, 1]);
        assert!((two - (1.0 - 4.0 / 3.0)).abs() < 1e-12);
    }
}
