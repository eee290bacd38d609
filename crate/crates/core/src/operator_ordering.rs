//! Endpoint normal ordering of the Hamiltonian.
//!
//! In the chosen representation the Hamiltonian is rewritten over the endpoint
//! operators `Q(t)` and `Q(0)` (momenta for the momentum representation,
//! positions for the position representation) and every product is ordered so
//! that the later operator stands to the left. Each transposition leaves behind
//! the c-number commutator `[Q(0), Q(t)]`.
//!
//! Derivation for the unit-mass oscillator, momentum representation (`s = sin ωt`,
//! `k = cos ωt`): inverting the flow gives `X(t) = −k/(mωs)·P(t) + 1/(mωs)·P(0)`,
//! and substituting into `H = P(t)²/2m + mω²X(t)²/2` then ordering with
//! `P(0)P(t) = P(t)P(0) + iħmω·s` yields
//!
//! ```text
//! H = (P(t)² + P(0)²)/(2m·s²) − k·P(t)P(0)/(m·s²) − (iħω/2)·k/s
//! ```
//!
//! The last term is the ordering remnant; it integrates to the `1/√sin ωt`
//! prefactor of the kernel.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficients::{Coefficient, LinearForm, TrigRational};
use crate::error::{Error, Result};
use crate::phase_dynamics::{
    endpoint_commutator, invert_endpoints, invert_flow, solve_heisenberg, symbolic_flow, EndpointInversion,
    QuadraticHamiltonian, Representation,
};

/// Rewrite rule `Q(0)·Q(t) → Q(t)·Q(0) + [Q(0), Q(t)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderingRule<R> {
    pub commutator: R,
}

impl<R: Coefficient> OrderingRule<R> {
    /// Applies the rule to `coefficient·Q(0)Q(t)`, returning the coefficient of
    /// the ordered monomial `Q(t)Q(0)` and the scalar left behind.
    pub fn apply(&self, coefficient: R) -> (R, R) {
        let scalar = coefficient.clone() * self.commutator.clone();
        (coefficient, scalar)
    }
}

pub fn normal_order_product(commutator: Complex64) -> OrderingRule<Complex64> {
    OrderingRule { commutator }
}

/// `c_tt·Q(t)² + c_t0·Q(t)Q(0) + c_00·Q(0)² + c_t·Q(t) + c_0·Q(0) + c_scalar`.
///
/// `ordering_remnant` is the part of `c_scalar` produced by commutators.
#[derive(Debug, Clone, PartialEq)]
pub struct Bilinear<R> {
    pub c_tt: R,
    pub c_t0: R,
    pub c_00: R,
    pub c_t: R,
    pub c_0: R,
    pub c_scalar: R,
    pub ordering_remnant: R,
}

impl<R: Coefficient> Bilinear<R> {
    pub fn zero() -> Self {
        Self {
            c_tt: R::zero(),
            c_t0: R::zero(),
            c_00: R::zero(),
            c_t: R::zero(),
            c_0: R::zero(),
            c_scalar: R::zero(),
            ordering_remnant: R::zero(),
        }
    }

    fn add_scaled(self, other: Bilinear<R>, factor: f64) -> Self {
        let k = R::from_real(factor);
        Self {
            c_tt: self.c_tt + k.clone() * other.c_tt,
            c_t0: self.c_t0 + k.clone() * other.c_t0,
            c_00: self.c_00 + k.clone() * other.c_00,
            c_t: self.c_t + k.clone() * other.c_t,
            c_0: self.c_0 + k.clone() * other.c_0,
            c_scalar: self.c_scalar + k.clone() * other.c_scalar,
            ordering_remnant: self.ordering_remnant + k * other.ordering_remnant,
        }
    }

    fn linear(form: &LinearForm<R>) -> Self {
        Self {
            c_t: form.end.clone(),
            c_0: form.start.clone(),
            c_scalar: form.constant.clone(),
            ..Self::zero()
        }
    }
}

/// Expands `lhs·rhs` keeping operator order and normal-orders the result.
pub fn ordered_product<R: Coefficient>(
    lhs: &LinearForm<R>,
    rhs: &LinearForm<R>,
    rule: &OrderingRule<R>,
) -> Bilinear<R> {
    let (reordered, remnant) = rule.apply(lhs.start.clone() * rhs.end.clone());
    Bilinear {
        c_tt: lhs.end.clone() * rhs.end.clone(),
        c_t0: lhs.end.clone() * rhs.start.clone() + reordered,
        c_00: lhs.start.clone() * rhs.start.clone(),
        c_t: lhs.end.clone() * rhs.constant.clone() + lhs.constant.clone() * rhs.end.clone(),
        c_0: lhs.start.clone() * rhs.constant.clone() + lhs.constant.clone() * rhs.start.clone(),
        c_scalar: lhs.constant.clone() * rhs.constant.clone() + remnant.clone(),
        ordering_remnant: remnant,
    }
}

/// Orders `a·P² + b·X² + c·(XP+PX)/2 + d·P + e·X` with `X`, `P` given as
/// endpoint forms.
pub fn order_hamiltonian<R: Coefficient>(
    h: &QuadraticHamiltonian,
    x: &LinearForm<R>,
    p: &LinearForm<R>,
    rule: &OrderingRule<R>,
) -> Bilinear<R> {
    Bilinear::zero()
        .add_scaled(ordered_product(p, p, rule), h.kinetic)
        .add_scaled(ordered_product(x, x, rule), h.potential)
        .add_scaled(ordered_product(x, p, rule), 0.5 * h.cross)
        .add_scaled(ordered_product(p, x, rule), 0.5 * h.cross)
        .add_scaled(Bilinear::linear(p), h.linear_p)
        .add_scaled(Bilinear::linear(x), h.linear_x)
}

/// `(X(t), P(t))` as endpoint forms, given the complementary operator at time `t`.
fn time_t_operators<R: Coefficient>(
    rep: Representation,
    complement_at_end: LinearForm<R>,
) -> (LinearForm<R>, LinearForm<R>) {
    match rep {
        Representation::Momentum => (complement_at_end, LinearForm::end_operator()),
        Representation::Position => (LinearForm::end_operator(), complement_at_end),
    }
}

/// The ordered Hamiltonian evaluated at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderedHamiltonian {
    pub rep: Representation,
    pub time: f64,
    pub c_tt: Complex64,
    pub c_t0: Complex64,
    pub c_00: Complex64,
    pub c_t: Complex64,
    pub c_0: Complex64,
    pub c_scalar: Complex64,
    pub ordering_remnant: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monomial {
    EndSquared,
    EndStart,
    StartSquared,
    End,
    Start,
    Scalar,
}

impl OrderedHamiltonian {
    fn from_bilinear(rep: Representation, time: f64, b: Bilinear<Complex64>) -> Self {
        Self {
            rep,
            time,
            c_tt: b.c_tt,
            c_t0: b.c_t0,
            c_00: b.c_00,
            c_t: b.c_t,
            c_0: b.c_0,
            c_scalar: b.c_scalar,
            ordering_remnant: b.ordering_remnant,
        }
    }

    /// Nonzero monomials in normal order. `Q(0)Q(t)` has no variant.
    pub fn monomials(&self) -> Vec<(Monomial, Complex64)> {
        [
            (Monomial::EndSquared, self.c_tt),
            (Monomial::EndStart, self.c_t0),
            (Monomial::StartSquared, self.c_00),
            (Monomial::End, self.c_t),
            (Monomial::Start, self.c_0),
            (Monomial::Scalar, self.c_scalar),
        ]
        .into_iter()
        .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
        .collect()
    }

    /// Value with the endpoint operators replaced by numbers.
    pub fn evaluate(&self, q_end: f64, q_start: f64) -> Complex64 {
        self.c_tt * q_end * q_end
            + self.c_t0 * q_end * q_start
            + self.c_00 * q_start * q_start
            + self.c_t * q_end
            + self.c_0 * q_start
            + self.c_scalar
    }
}

impl fmt::Display for OrderedHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = match self.rep {
            Representation::Momentum => "P",
            Representation::Position => "X",
        };
        let terms = self.monomials();
        if terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (monomial, c)) in terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            let op = match monomial {
                Monomial::EndSquared => format!("{q}(t)²"),
                Monomial::EndStart => format!("{q}(t){q}(0)"),
                Monomial::StartSquared => format!("{q}(0)²"),
                Monomial::End => format!("{q}(t)"),
                Monomial::Start => format!("{q}(0)"),
                Monomial::Scalar => String::new(),
            };
            write!(f, "({:.6}{:+.6}i){}", c.re, c.im, op)?;
        }
        Ok(())
    }
}

/// Substitutes the endpoint inversion into `H`, expands and normal-orders it.
///
/// Passing a zero commutator gives the classical Hamiltonian expressed through
/// the endpoint variables.
pub fn express_hamiltonian(
    h: &QuadraticHamiltonian,
    inv: &EndpointInversion,
    commutator: Complex64,
    t: f64,
) -> OrderedHamiltonian {
    let rule = normal_order_product(commutator);
    let (x, p) = time_t_operators(inv.rep, inv.at_end.to_complex());
    OrderedHamiltonian::from_bilinear(inv.rep, t, order_hamiltonian(h, &x, &p, &rule))
}

/// The ordered Hamiltonian as a function of elapsed time.
///
/// The homogeneous (drift-free) coefficients are held as closed-form
/// [`TrigRational`] functions; drift-dependent parts are evaluated pointwise
/// through [`EndpointBilinear::at`].
#[derive(Debug, Clone)]
pub struct EndpointBilinear {
    pub hamiltonian: QuadraticHamiltonian,
    pub rep: Representation,
    pub homogeneous: Bilinear<TrigRational>,
    pub with_commutators: bool,
}

impl EndpointBilinear {
    pub fn new(h: &QuadraticHamiltonian, rep: Representation) -> Result<Self> {
        Self::build(h, rep, true)
    }

    /// Variant with every commutator set to zero.
    pub fn classical(h: &QuadraticHamiltonian, rep: Representation) -> Result<Self> {
        Self::build(h, rep, false)
    }

    fn build(h: &QuadraticHamiltonian, rep: Representation, with_commutators: bool) -> Result<Self> {
        h.validate()?;
        let flow = symbolic_flow(h);
        let (_, at_end) = invert_flow(&flow, rep).ok_or(Error::DegenerateMap {
            entry: match rep {
                Representation::Momentum => "m21",
                Representation::Position => "m12",
            },
            value: 0.0,
            threshold: crate::coefficients::DIVISION_THRESHOLD,
        })?;
        let i_hbar = Complex64::new(0.0, h.hbar);
        let commutator = if with_commutators {
            match rep {
                Representation::Momentum => flow.m21.scale(-i_hbar),
                Representation::Position => flow.m12.scale(i_hbar),
            }
        } else {
            TrigRational::zero()
        };
        let rule = OrderingRule { commutator };
        let homogeneous_h = QuadraticHamiltonian {
            linear_p: 0.0,
            linear_x: 0.0,
            ..*h
        };
        let (x, p) = time_t_operators(rep, at_end);
        let homogeneous = order_hamiltonian(&homogeneous_h, &x, &p, &rule);
        Ok(Self {
            hamiltonian: *h,
            rep,
            homogeneous,
            with_commutators,
        })
    }

    /// Full ordered Hamiltonian (drift included) at elapsed time `tau`.
    pub fn at(&self, tau: f64) -> Result<OrderedHamiltonian> {
        let tm = solve_heisenberg(&self.hamiltonian, tau)?;
        let inv = invert_endpoints(&tm, self.rep)?;
        let commutator = if self.with_commutators {
            endpoint_commutator(&tm, &self.hamiltonian, self.rep)
        } else {
            Complex64::new(0.0, 0.0)
        };
        Ok(express_hamiltonian(&self.hamiltonian, &inv, commutator, tau))
    }
}
