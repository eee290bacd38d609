//! Coefficient rings used by the endpoint-ordering engine.
//!
//! The same expansion code runs over two rings: plain complex numbers (the
//! Hamiltonian evaluated at one instant) and [`TrigRational`], a small closed
//! algebra of functions of the elapsed time built from the flow's cosine-like
//! and sine-like solutions. The second ring is what makes the time integral of
//! the ordered Hamiltonian available in closed form.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// Entries below this magnitude are treated as zero when dividing.
pub const DIVISION_THRESHOLD: f64 = 1e-12;

/// Relative size below which a term is dropped before integration.
const PRUNE_RELATIVE: f64 = 1e-13;

pub trait Coefficient:
    Clone + fmt::Debug + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn zero() -> Self;
    fn from_complex(z: Complex64) -> Self;

    fn from_real(x: f64) -> Self {
        Self::from_complex(Complex64::new(x, 0.0))
    }

    /// `self / divisor`, or `None` when the divisor is not invertible in the ring.
    fn checked_div(&self, divisor: &Self) -> Option<Self>;
}

impl Coefficient for f64 {
    fn zero() -> Self {
        0.0
    }

    fn from_complex(z: Complex64) -> Self {
        debug_assert!(z.im == 0.0, "real ring cannot hold {z}");
        z.re
    }

    fn checked_div(&self, divisor: &Self) -> Option<Self> {
        (divisor.abs() >= DIVISION_THRESHOLD).then(|| self / divisor)
    }
}

impl Coefficient for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn from_complex(z: Complex64) -> Self {
        z
    }

    fn checked_div(&self, divisor: &Self) -> Option<Self> {
        (divisor.norm() >= DIVISION_THRESHOLD).then(|| self / divisor)
    }
}

/// A linear combination `end·Q(t) + start·Q(0) + constant` of endpoint operators.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LinearForm<R> {
    pub end: R,
    pub start: R,
    pub constant: R,
}

impl<R: Coefficient> LinearForm<R> {
    pub fn new(end: R, start: R, constant: R) -> Self {
        Self { end, start, constant }
    }

    /// `Q(t)` itself.
    pub fn end_operator() -> Self {
        Self::new(R::from_real(1.0), R::zero(), R::zero())
    }

    /// `Q(0)` itself.
    pub fn start_operator() -> Self {
        Self::new(R::zero(), R::from_real(1.0), R::zero())
    }
}

impl LinearForm<f64> {
    pub fn to_complex(self) -> LinearForm<Complex64> {
        LinearForm::new(self.end.into(), self.start.into(), self.constant.into())
    }

    /// Value with the endpoint operators replaced by numbers.
    pub fn evaluate(&self, q_end: f64, q_start: f64) -> f64 {
        self.end * q_end + self.start * q_start + self.constant
    }
}

/// `Σₙ (plain[n] + with_c[n]·C) · Sⁿ`, where `S` and `C` are the sine-like and
/// cosine-like solutions of the flow: `S' = C`, `C' = −Δ·S`, `C² + Δ·S² = 1`.
///
/// Products are reduced with `C² = 1 − Δ·S²` so every element stays linear in `C`.
#[derive(Clone, PartialEq)]
pub struct TrigRational {
    discriminant: Option<f64>,
    terms: BTreeMap<i32, (Complex64, Complex64)>,
}

impl TrigRational {
    /// The constant function 1 over a flow with discriminant `Δ`.
    pub fn unit(discriminant: f64) -> Self {
        Self::monomial(discriminant, Complex64::new(1.0, 0.0), 0)
    }

    /// `coefficient · Sᵖᵒʷᵉʳ`.
    pub fn monomial(discriminant: f64, coefficient: Complex64, power: i32) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(power, (coefficient, Complex64::new(0.0, 0.0)));
        Self {
            discriminant: Some(discriminant),
            terms,
        }
    }

    /// `coefficient · C · Sᵖᵒʷᵉʳ`.
    pub fn cosine_monomial(discriminant: f64, coefficient: Complex64, power: i32) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(power, (Complex64::new(0.0, 0.0), coefficient));
        Self {
            discriminant: Some(discriminant),
            terms,
        }
    }

    pub fn discriminant(&self) -> Option<f64> {
        self.discriminant
    }

    /// `(plain, with_c)` coefficients of `Sⁿ`.
    pub fn term(&self, power: i32) -> (Complex64, Complex64) {
        self.terms
            .get(&power)
            .copied()
            .unwrap_or((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)))
    }

    pub fn powers(&self) -> impl Iterator<Item = i32> + '_ {
        self.terms.keys().copied()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            discriminant: self.discriminant,
            terms: self
                .terms
                .iter()
                .map(|(&n, &(p, q))| (n, (p * factor, q * factor)))
                .collect(),
        }
    }

    /// Value at a point where the flow solutions take the values `c` and `s`.
    pub fn evaluate(&self, c: f64, s: f64) -> Complex64 {
        self.terms.iter().map(|(&n, &(p, q))| (p + q * c) * s.powi(n)).sum()
    }

    /// Leading behaviour as the elapsed time goes to zero (`C → 1`, `S → τ`):
    /// the coefficient of `Sⁿ` with `C` set to one.
    pub fn coefficient_at_origin(&self, power: i32) -> Complex64 {
        let (p, q) = self.term(power);
        p + q
    }

    /// Lowest power of `S` carrying a non-negligible coefficient.
    pub fn leading_power(&self) -> Option<i32> {
        let pruned = self.pruned();
        pruned.terms.keys().next().copied()
    }

    fn largest_coefficient(&self) -> f64 {
        self.terms
            .values()
            .map(|(p, q)| p.norm().max(q.norm()))
            .fold(0.0, f64::max)
    }

    /// Copy without the terms that are round-off residue of cancellations.
    pub fn pruned(&self) -> Self {
        let cutoff = self.largest_coefficient() * PRUNE_RELATIVE;
        let zero = Complex64::new(0.0, 0.0);
        let terms = self
            .terms
            .iter()
            .map(|(&n, &(p, q))| {
                let p = if p.norm() <= cutoff { zero } else { p };
                let q = if q.norm() <= cutoff { zero } else { q };
                (n, (p, q))
            })
            .filter(|(_, (p, q))| *p != zero || *q != zero)
            .collect();
        Self {
            discriminant: self.discriminant,
            terms,
        }
    }

    /// Antiderivative in closed form, or `None` when a term falls outside the
    /// family that integrates back into the algebra (plus `ln S` and `τ`).
    ///
    /// Uses `∫C·Sⁿ = Sⁿ⁺¹/(n+1)`, `∫C/S = ln S`, `∫S⁻² = −C/S` and `∫1 = τ`.
    /// No constant is added: these are the antiderivatives whose Laurent
    /// expansion at the origin has no constant term.
    pub fn antiderivative(&self) -> Option<Antiderivative> {
        let delta = self.discriminant.unwrap_or(0.0);
        let zero = Complex64::new(0.0, 0.0);
        let mut algebraic = TrigRational {
            discriminant: Some(delta),
            terms: BTreeMap::new(),
        };
        let mut log_s = zero;
        let mut linear = zero;
        for (&n, &(p, q)) in &self.pruned().terms {
            if p != zero {
                match n {
                    -2 => algebraic.accumulate(-1, zero, -p),
                    0 => linear += p,
                    _ => return None,
                }
            }
            if q != zero {
                if n == -1 {
                    log_s += q;
                } else {
                    algebraic.accumulate(n + 1, q / f64::from(n + 1), zero);
                }
            }
        }
        Some(Antiderivative {
            algebraic,
            log_s,
            linear,
        })
    }

    fn accumulate(&mut self, power: i32, plain: Complex64, with_c: Complex64) {
        let entry = self
            .terms
            .entry(power)
            .or_insert((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
        entry.0 += plain;
        entry.1 += with_c;
    }

    fn merge_discriminant(a: Option<f64>, b: Option<f64>) -> Option<f64> {
        match (a, b) {
            (Some(x), Some(y)) => {
                debug_assert!(
                    (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0),
                    "mixing flows with discriminants {x} and {y}"
                );
                Some(x)
            }
            (x, None) => x,
            (None, y) => y,
        }
    }

    /// Divides by a single pure monomial `λ·Sᵏ`; `None` for anything else.
    fn monomial_divisor(&self) -> Option<(Complex64, i32)> {
        let pruned = self.pruned();
        let mut iter = pruned.terms.iter();
        let (&power, &(p, q)) = iter.next()?;
        if iter.next().is_some() || q != Complex64::new(0.0, 0.0) {
            return None;
        }
        Some((p, power))
    }
}

impl fmt::Debug for TrigRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (n, (p, q)) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({p} + {q}·C)·S^{n}")?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Add for TrigRational {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self.discriminant = Self::merge_discriminant(self.discriminant, rhs.discriminant);
        for (n, (p, q)) in rhs.terms {
            self.accumulate(n, p, q);
        }
        self
    }
}

impl Neg for TrigRational {
    type Output = Self;

    fn neg(self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Sub for TrigRational {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for TrigRational {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let discriminant = Self::merge_discriminant(self.discriminant, rhs.discriminant);
        let mut out = TrigRational {
            discriminant,
            terms: BTreeMap::new(),
        };
        for (&n, &(p1, q1)) in &self.terms {
            for (&m, &(p2, q2)) in &rhs.terms {
                let cc = q1 * q2;
                out.accumulate(n + m, p1 * p2, p1 * q2 + q1 * p2);
                if cc != Complex64::new(0.0, 0.0) {
                    // C² = 1 − Δ·S²
                    let delta = discriminant.expect("cosine terms need a discriminant");
                    out.accumulate(n + m, cc, Complex64::new(0.0, 0.0));
                    out.accumulate(n + m + 2, -cc * delta, Complex64::new(0.0, 0.0));
                }
            }
        }
        out
    }
}

impl Coefficient for TrigRational {
    fn zero() -> Self {
        TrigRational {
            discriminant: None,
            terms: BTreeMap::new(),
        }
    }

    fn from_complex(z: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(0, (z, Complex64::new(0.0, 0.0)));
        TrigRational {
            discriminant: None,
            terms,
        }
    }

    fn checked_div(&self, divisor: &Self) -> Option<Self> {
        let (lambda, power) = divisor.monomial_divisor()?;
        if lambda.norm() < DIVISION_THRESHOLD {
            return None;
        }
        let inverse = Complex64::new(1.0, 0.0) / lambda;
        Some(TrigRational {
            discriminant: Self::merge_discriminant(self.discriminant, divisor.discriminant),
            terms: self
                .terms
                .iter()
                .map(|(&n, &(p, q))| (n - power, (p * inverse, q * inverse)))
                .collect(),
        })
    }
}

/// Closed-form antiderivative: `algebraic + log_s·ln S + linear·τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Antiderivative {
    pub algebraic: TrigRational,
    pub log_s: Complex64,
    pub linear: Complex64,
}

impl Antiderivative {
    /// Requires `s > 0` whenever the logarithmic part is present.
    pub fn evaluate(&self, c: f64, s: f64, tau: f64) -> Complex64 {
        let mut value = self.algebraic.evaluate(c, s) + self.linear * tau;
        if self.log_s != Complex64::new(0.0, 0.0) {
            value += self.log_s * s.ln();
        }
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn product_reduces_cosine_squared() {
        let delta = 2.0;
        let cot = TrigRational::cosine_monomial(delta, c(1.0), -1);
        let square = cot.clone() * cot;
        // (C/S)² = S⁻² − Δ
        assert_eq!(square.term(-2), (c(1.0), c(0.0)));
        assert_eq!(square.term(0), (c(-delta), c(0.0)));
    }

    #[test]
    fn evaluation_matches_trig_functions() {
        let omega: f64 = 1.3;
        let delta = omega * omega;
        let tau: f64 = 0.4;
        let (cv, sv) = ((omega * tau).cos(), (omega * tau).sin() / omega);
        let f = TrigRational::cosine_monomial(delta, c(2.0), -2) + TrigRational::monomial(delta, c(0.5), 1);
        let expected = 2.0 * cv / (sv * sv) + 0.5 * sv;
        assert!((f.evaluate(cv, sv).re - expected).abs() < 1e-12);
    }

    #[test]
    fn antiderivative_differentiates_back() {
        let omega: f64 = 0.8;
        let delta = omega * omega;
        let f = TrigRational::monomial(delta, c(0.7), -2)
            + TrigRational::cosine_monomial(delta, c(-1.1), -2)
            + TrigRational::cosine_monomial(delta, Complex64::new(0.0, 0.3), -1)
            + TrigRational::from_real(0.25);
        let anti = f.antiderivative().expect("family closed");
        let point = |tau: f64| ((omega * tau).cos(), (omega * tau).sin() / omega);
        let tau = 1.1;
        let h = 1e-5;
        let (c1, s1) = point(tau + h);
        let (c0, s0) = point(tau - h);
        let derivative = (anti.evaluate(c1, s1, tau + h) - anti.evaluate(c0, s0, tau - h)) / (2.0 * h);
        let (cv, sv) = point(tau);
        assert!((derivative - f.evaluate(cv, sv)).norm() < 1e-8);
    }

    #[test]
    fn sine_powers_outside_family_are_rejected() {
        let f = TrigRational::monomial(1.0, c(1.0), -1);
        assert!(f.antiderivative().is_none());
    }

    #[test]
    fn division_only_by_monomials() {
        let delta = 1.0;
        let s = TrigRational::monomial(delta, c(-2.0), 1);
        let num = TrigRational::cosine_monomial(delta, c(1.0), 0);
        let q = num.checked_div(&s).unwrap();
        assert_eq!(q.term(-1), (c(0.0), c(-0.5)));
        let not_monomial = s.clone() + TrigRational::unit(delta);
        assert!(num.checked_div(&not_monomial).is_none());
        assert!(num.checked_div(&TrigRational::monomial(delta, c(1e-14), 1)).is_none());
    }
}
