//! Heisenberg equations of motion for quadratic Hamiltonians.
//!
//! For `H = a·P² + b·X² + c·(XP+PX)/2 + d·P + e·X` the operator equations
//! `dX/dt = 2a·P + c·X + d`, `dP/dt = −2b·X − c·P − e` are linear, so the
//! operators at time `t` are an affine image of the operators at time 0:
//!
//! ```text
//! (X(t), P(t)) = M(t)·(X(0), P(0)) + (r_x, r_p)
//! ```
//!
//! The generator `G = [[c, 2a], [−2b, −c]]` squares to `−Δ·I` with
//! `Δ = 4ab − c²`, so `exp(G·t) = C(t)·I + S(t)·G` where `C`, `S` are the
//! cosine-like and sine-like solutions of `y'' = −Δ·y`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficients::{Coefficient, LinearForm, TrigRational, DIVISION_THRESHOLD};
use crate::error::{Error, Result};

/// Width of the band around `Δ = 0` in which the polynomial branch is used.
pub const DISCRIMINANT_BAND: f64 = 1e-12;

/// Which endpoint variable the kernel is a function of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Momentum,
    Position,
}

impl Representation {
    pub fn as_str(self) -> &'static str {
        match self {
            Representation::Momentum => "momentum",
            Representation::Position => "position",
        }
    }

    /// The conjugate representation.
    pub fn dual(self) -> Self {
        match self {
            Representation::Momentum => Representation::Position,
            Representation::Position => Representation::Momentum,
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "momentum" | "p" => Ok(Representation::Momentum),
            "position" | "x" => Ok(Representation::Position),
            other => Err(Error::InvalidArgument(format!(
                "unknown representation {other:?} (expected momentum or position)"
            ))),
        }
    }
}

/// `H = kinetic·P² + potential·X² + cross·(XP+PX)/2 + linear_p·P + linear_x·X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticHamiltonian {
    pub kinetic: f64,
    pub potential: f64,
    pub cross: f64,
    pub linear_p: f64,
    pub linear_x: f64,
    pub hbar: f64,
}

impl QuadraticHamiltonian {
    pub fn new(kinetic: f64, potential: f64, cross: f64, linear_p: f64, linear_x: f64, hbar: f64) -> Result<Self> {
        let h = Self {
            kinetic,
            potential,
            cross,
            linear_p,
            linear_x,
            hbar,
        };
        h.validate()?;
        Ok(h)
    }

    /// `P²/2m + mω²X²/2`.
    pub fn oscillator(mass: f64, omega: f64, hbar: f64) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidArgument(format!("mass must be positive, got {mass}")));
        }
        Self::new(0.5 / mass, 0.5 * mass * omega * omega, 0.0, 0.0, 0.0, hbar)
    }

    /// `P²/2m`.
    pub fn free(mass: f64, hbar: f64) -> Result<Self> {
        Self::oscillator(mass, 0.0, hbar)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.kinetic,
            self.potential,
            self.cross,
            self.linear_p,
            self.linear_x,
            self.hbar,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("Hamiltonian coefficients must be finite".into()));
        }
        if !(self.kinetic > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "kinetic coefficient must be positive, got {}",
                self.kinetic
            )));
        }
        if !(self.hbar > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "hbar must be positive, got {}",
                self.hbar
            )));
        }
        Ok(())
    }

    /// `Δ = 4ab − c²`; positive for oscillatory flows.
    pub fn discriminant(&self) -> f64 {
        4.0 * self.kinetic * self.potential - self.cross * self.cross
    }

    /// Mass implied by the kinetic coefficient.
    pub fn mass(&self) -> f64 {
        0.5 / self.kinetic
    }

    /// Classical value at a phase-space point.
    pub fn classical(&self, x: f64, p: f64) -> f64 {
        self.kinetic * p * p + self.potential * x * x + self.cross * x * p + self.linear_p * p + self.linear_x * x
    }

    /// True when P is a constant of motion (`b = c = e = 0`).
    pub fn conserves_momentum(&self) -> bool {
        self.potential == 0.0 && self.cross == 0.0 && self.linear_x == 0.0
    }

    /// Symmetric matrix `A` of the quadratic part over `(X, P)`.
    pub fn quadratic_form(&self) -> [[f64; 2]; 2] {
        [[self.potential, 0.5 * self.cross], [0.5 * self.cross, self.kinetic]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowBranch {
    /// `C = cos ωt`, `S = sin(ωt)/ω`.
    Oscillatory { frequency: f64 },
    /// `C = cosh κt`, `S = sinh(κt)/κ`.
    Hyperbolic { rate: f64 },
    /// `|Δ|` inside the switchover band; truncated series around `C = 1`, `S = t`.
    Parabolic,
}

/// The scalar solutions `C(t)`, `S(t)` that build `exp(G·t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowBasis {
    pub discriminant: f64,
    pub branch: FlowBranch,
}

impl FlowBasis {
    pub fn of(h: &QuadraticHamiltonian) -> Self {
        let discriminant = h.discriminant();
        let branch = if discriminant > DISCRIMINANT_BAND {
            FlowBranch::Oscillatory {
                frequency: discriminant.sqrt(),
            }
        } else if discriminant < -DISCRIMINANT_BAND {
            FlowBranch::Hyperbolic {
                rate: (-discriminant).sqrt(),
            }
        } else {
            FlowBranch::Parabolic
        };
        Self { discriminant, branch }
    }

    /// `(C(t), S(t))`.
    pub fn cosine_sine(&self, t: f64) -> (f64, f64) {
        match self.branch {
            FlowBranch::Oscillatory { frequency } => {
                let (s, c) = (frequency * t).sin_cos();
                (c, s / frequency)
            }
            FlowBranch::Hyperbolic { rate } => ((rate * t).cosh(), (rate * t).sinh() / rate),
            FlowBranch::Parabolic => {
                let d = self.discriminant;
                let t2 = t * t;
                let c = 1.0 - d * t2 / 2.0 + d * d * t2 * t2 / 24.0;
                let s = t * (1.0 - d * t2 / 6.0 + d * d * t2 * t2 / 120.0);
                (c, s)
            }
        }
    }

    /// `W(t) = ∫₀ᵗ S = (1 − C)/Δ`, written without the cancellation.
    pub fn integrated_sine(&self, t: f64) -> f64 {
        match self.branch {
            FlowBranch::Oscillatory { frequency } => {
                let half = (0.5 * frequency * t).sin() / frequency;
                2.0 * half * half
            }
            FlowBranch::Hyperbolic { rate } => {
                let half = (0.5 * rate * t).sinh() / rate;
                2.0 * half * half
            }
            FlowBranch::Parabolic => {
                let d = self.discriminant;
                let t2 = t * t;
                t2 / 2.0 - d * t2 * t2 / 24.0 + d * d * t2 * t2 * t2 / 720.0
            }
        }
    }

    /// First positive zero of `S`, if the flow has one.
    pub fn first_caustic(&self) -> Option<f64> {
        match self.branch {
            FlowBranch::Oscillatory { frequency } => Some(std::f64::consts::PI / frequency),
            _ => None,
        }
    }
}

/// Affine phase-space map `(X(0), P(0)) ↦ (X(t), P(t))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
    pub drift_x: f64,
    pub drift_p: f64,
    pub time: f64,
}

impl TransferMatrix {
    pub fn identity() -> Self {
        Self {
            m11: 1.0,
            m12: 0.0,
            m21: 0.0,
            m22: 1.0,
            drift_x: 0.0,
            drift_p: 0.0,
            time: 0.0,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    /// Image of a classical phase-space point.
    pub fn apply(&self, x: f64, p: f64) -> (f64, f64) {
        (
            self.m11 * x + self.m12 * p + self.drift_x,
            self.m21 * x + self.m22 * p + self.drift_p,
        )
    }

    /// The map that first applies `self`, then `later`.
    pub fn then(&self, later: &TransferMatrix) -> TransferMatrix {
        let (drift_x, drift_p) = later.apply(self.drift_x, self.drift_p);
        TransferMatrix {
            m11: later.m11 * self.m11 + later.m12 * self.m21,
            m12: later.m11 * self.m12 + later.m12 * self.m22,
            m21: later.m21 * self.m11 + later.m22 * self.m21,
            m22: later.m21 * self.m12 + later.m22 * self.m22,
            drift_x,
            drift_p,
            time: self.time + later.time,
        }
    }
}

/// Exact solution of the Heisenberg equations after elapsed time `t`.
pub fn solve_heisenberg(h: &QuadraticHamiltonian, t: f64) -> Result<TransferMatrix> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "elapsed time must be finite and non-negative, got {t}"
        )));
    }
    let basis = FlowBasis::of(h);
    let (c, s) = basis.cosine_sine(t);
    let w = basis.integrated_sine(t);
    let (a, b, x) = (h.kinetic, h.potential, h.cross);
    // forcing f = (d, −e); drift = S·f + W·G·f
    let (fx, fp) = (h.linear_p, -h.linear_x);
    let (gfx, gfp) = (x * fx + 2.0 * a * fp, -2.0 * b * fx - x * fp);
    Ok(TransferMatrix {
        m11: c + x * s,
        m12: 2.0 * a * s,
        m21: -2.0 * b * s,
        m22: c - x * s,
        drift_x: s * fx + w * gfx,
        drift_p: s * fp + w * gfp,
        time: t,
    })
}

/// `[Q(0), Q(t)]` as a c-number: `−iħ·m21` for momentum, `+iħ·m12` for position.
pub fn endpoint_commutator(tm: &TransferMatrix, h: &QuadraticHamiltonian, rep: Representation) -> Complex64 {
    match rep {
        Representation::Momentum => Complex64::new(0.0, -h.hbar * tm.m21),
        Representation::Position => Complex64::new(0.0, h.hbar * tm.m12),
    }
}

/// The complementary operator at both endpoints written over `{Q(t), Q(0)}`.
///
/// For the momentum representation `at_start` is `X(0)` and `at_end` is `X(t)`;
/// for the position representation they are `P(0)` and `P(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndpointInversion {
    pub rep: Representation,
    pub at_start: LinearForm<f64>,
    pub at_end: LinearForm<f64>,
}

/// Entries of a transfer map over an arbitrary coefficient ring.
#[derive(Debug, Clone)]
pub struct FlowEntries<R> {
    pub m11: R,
    pub m12: R,
    pub m21: R,
    pub m22: R,
    pub drift_x: R,
    pub drift_p: R,
}

impl From<&TransferMatrix> for FlowEntries<f64> {
    fn from(tm: &TransferMatrix) -> Self {
        Self {
            m11: tm.m11,
            m12: tm.m12,
            m21: tm.m21,
            m22: tm.m22,
            drift_x: tm.drift_x,
            drift_p: tm.drift_p,
        }
    }
}

/// The homogeneous part of the flow as functions of elapsed time. Drift terms
/// are left out: they are not in the closed algebra and are handled numerically.
pub fn symbolic_flow(h: &QuadraticHamiltonian) -> FlowEntries<TrigRational> {
    let delta = h.discriminant();
    let k = |v: f64| Complex64::new(v, 0.0);
    let cosine = TrigRational::cosine_monomial(delta, k(1.0), 0);
    FlowEntries {
        m11: cosine.clone() + TrigRational::monomial(delta, k(h.cross), 1),
        m12: TrigRational::monomial(delta, k(2.0 * h.kinetic), 1),
        m21: TrigRational::monomial(delta, k(-2.0 * h.potential), 1),
        m22: cosine - TrigRational::monomial(delta, k(h.cross), 1),
        drift_x: TrigRational::zero(),
        drift_p: TrigRational::zero(),
    }
}

/// Solves the map for the complementary operators `(at_start, at_end)`.
/// Returns `None` when the pivot entry is not invertible in the ring.
pub fn invert_flow<R: Coefficient>(m: &FlowEntries<R>, rep: Representation) -> Option<(LinearForm<R>, LinearForm<R>)> {
    match rep {
        Representation::Momentum => {
            // X(0) = (P(t) − m22·P(0) − r_p)/m21,  X(t) = m11·X(0) + m12·P(0) + r_x
            let one = R::from_real(1.0);
            let start_end = one.checked_div(&m.m21)?;
            let start_start = (-m.m22.clone()).checked_div(&m.m21)?;
            let start_const = (-m.drift_p.clone()).checked_div(&m.m21)?;
            let x0 = LinearForm::new(start_end, start_start, start_const);
            let xt = LinearForm::new(
                m.m11.clone() * x0.end.clone(),
                m.m11.clone() * x0.start.clone() + m.m12.clone(),
                m.m11.clone() * x0.constant.clone() + m.drift_x.clone(),
            );
            Some((x0, xt))
        }
        Representation::Position => {
            // P(0) = (X(t) − m11·X(0) − r_x)/m12,  P(t) = m21·X(0) + m22·P(0) + r_p
            let one = R::from_real(1.0);
            let p0 = LinearForm::new(
                one.checked_div(&m.m12)?,
                (-m.m11.clone()).checked_div(&m.m12)?,
                (-m.drift_x.clone()).checked_div(&m.m12)?,
            );
            let pt = LinearForm::new(
                m.m22.clone() * p0.end.clone(),
                m.m22.clone() * p0.start.clone() + m.m21.clone(),
                m.m22.clone() * p0.constant.clone() + m.drift_p.clone(),
            );
            Some((p0, pt))
        }
    }
}

/// Expresses the complementary operators through the endpoint pair `{Q(0), Q(t)}`.
pub fn invert_endpoints(tm: &TransferMatrix, rep: Representation) -> Result<EndpointInversion> {
    let (entry, value) = match rep {
        Representation::Momentum => ("m21", tm.m21),
        Representation::Position => ("m12", tm.m12),
    };
    if value.abs() < DIVISION_THRESHOLD {
        return Err(Error::DegenerateMap {
            entry,
            value,
            threshold: DIVISION_THRESHOLD,
        });
    }
    let (at_start, at_end) = invert_flow(&FlowEntries::from(tm), rep).ok_or(Error::DegenerateMap {
        entry,
        value,
        threshold: DIVISION_THRESHOLD,
    })?;
    Ok(EndpointInversion { rep, at_start, at_end })
}

/// Max-norm of `Mᵀ·A·M − A`; zero when the quadratic part of `H` is a constant of motion.
pub fn conserved_energy_check(tm: &TransferMatrix, h: &QuadraticHamiltonian) -> f64 {
    let a = h.quadratic_form();
    let m = [[tm.m11, tm.m12], [tm.m21, tm.m22]];
    let mut residual: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let mut v = 0.0;
            for k in 0..2 {
                for l in 0..2 {
                    v += m[k][i] * a[k][l] * m[l][j];
                }
            }
            residual = residual.max((v - a[i][j]).abs());
        }
    }
    residual
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn unit_oscillator() -> QuadraticHamiltonian {
        QuadraticHamiltonian::oscillator(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn quarter_period_of_unit_oscillator() {
        let tm = solve_heisenberg(&unit_oscillator(), PI / 2.0).unwrap();
        assert!(tm.m11.abs() < 1e-15);
        assert!((tm.m12 - 1.0).abs() < 1e-15);
        assert!((tm.m21 + 1.0).abs() < 1e-15);
        assert!(tm.m22.abs() < 1e-15);
        assert_eq!((tm.drift_x, tm.drift_p), (0.0, 0.0));
    }

    #[test]
    fn zero_time_is_identity() {
        let h = QuadraticHamiltonian::new(0.7, -0.2, 0.3, 0.5, -1.0, 1.0).unwrap();
        let tm = solve_heisenberg(&h, 0.0).unwrap();
        assert_eq!(tm, TransferMatrix::identity());
    }

    #[test]
    fn free_particle_shear() {
        let h = QuadraticHamiltonian::free(2.0, 1.0).unwrap();
        let tm = solve_heisenberg(&h, 3.0).unwrap();
        assert_eq!((tm.m11, tm.m12, tm.m21, tm.m22), (1.0, 1.5, 0.0, 1.0));
    }

    #[test]
    fn non_finite_time_is_rejected() {
        let h = unit_oscillator();
        assert!(matches!(solve_heisenberg(&h, f64::NAN), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            solve_heisenberg(&h, f64::INFINITY),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(solve_heisenberg(&h, -1.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn hamiltonian_validation() {
        assert!(QuadraticHamiltonian::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0).is_err());
        assert!(QuadraticHamiltonian::new(1.0, 1.0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(QuadraticHamiltonian::new(1.0, f64::NAN, 0.0, 0.0, 0.0, 1.0).is_err());
        assert!(QuadraticHamiltonian::oscillator(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn commutator_examples() {
        let h = unit_oscillator();
        let tm = solve_heisenberg(&h, PI / 2.0).unwrap();
        let k = endpoint_commutator(&tm, &h, Representation::Momentum);
        assert!((k - Complex64::new(0.0, 1.0)).norm() < 1e-15);

        let id = solve_heisenberg(&h, 0.0).unwrap();
        for rep in [Representation::Momentum, Representation::Position] {
            assert_eq!(endpoint_commutator(&id, &h, rep), Complex64::new(0.0, 0.0));
        }

        let free = QuadraticHamiltonian::free(1.0, 1.0).unwrap();
        let tm = solve_heisenberg(&free, 2.0).unwrap();
        assert_eq!(endpoint_commutator(&tm, &free, Representation::Momentum).norm(), 0.0);
    }

    #[test]
    fn quarter_period_inversion() {
        let tm = solve_heisenberg(&unit_oscillator(), PI / 2.0).unwrap();
        let inv = invert_endpoints(&tm, Representation::Momentum).unwrap();
        // X(0) = −P(t), X(t) = P(0)
        assert!((inv.at_start.end + 1.0).abs() < 1e-15);
        assert!(inv.at_start.start.abs() < 1e-15);
        assert!(inv.at_end.end.abs() < 1e-15);
        assert!((inv.at_end.start - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inversion_diverges_at_short_times() {
        let h = unit_oscillator();
        let t = 1e-6;
        let tm = solve_heisenberg(&h, t).unwrap();
        let inv = invert_endpoints(&tm, Representation::Momentum).unwrap();
        assert!((inv.at_start.end * t.sin() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_inversions() {
        let free = QuadraticHamiltonian::free(1.0, 1.0).unwrap();
        let tm = solve_heisenberg(&free, 1.3).unwrap();
        assert!(matches!(
            invert_endpoints(&tm, Representation::Momentum),
            Err(Error::DegenerateMap { entry: "m21", .. })
        ));
        let tm = solve_heisenberg(&unit_oscillator(), PI).unwrap();
        assert!(matches!(
            invert_endpoints(&tm, Representation::Position),
            Err(Error::DegenerateMap { entry: "m12", .. })
        ));
    }

    #[test]
    fn energy_form_examples() {
        let h = unit_oscillator();
        assert_eq!(conserved_energy_check(&TransferMatrix::identity(), &h), 0.0);
        for t in [0.1, 1.0, 2.5, 7.0] {
            let tm = solve_heisenberg(&h, t).unwrap();
            assert!(conserved_energy_check(&tm, &h) < 1e-12);
        }
        let free = QuadraticHamiltonian::free(1.0, 1.0).unwrap();
        let tm = solve_heisenberg(&free, 5.0).unwrap();
        assert!(conserved_energy_check(&tm, &free) < 1e-12);
    }

    #[test]
    fn drift_matches_linear_potential() {
        // H = P²/2 + F·X: X(t) = X0 + P0·t − F·t²/2, P(t) = P0 − F·t
        let force = 0.8;
        let h = QuadraticHamiltonian::new(0.5, 0.0, 0.0, 0.0, force, 1.0).unwrap();
        let t = 1.7;
        let tm = solve_heisenberg(&h, t).unwrap();
        assert!((tm.drift_x + force * t * t / 2.0).abs() < 1e-14);
        assert!((tm.drift_p + force * t).abs() < 1e-14);
    }

    #[test]
    fn symbolic_flow_agrees_with_numeric() {
        let h = QuadraticHamiltonian::new(0.6, 0.9, -0.3, 0.0, 0.0, 1.0).unwrap();
        let basis = FlowBasis::of(&h);
        let sym = symbolic_flow(&h);
        for t in [0.2, 0.9, 1.6] {
            let tm = solve_heisenberg(&h, t).unwrap();
            let (c, s) = basis.cosine_sine(t);
            for (a, b) in [
                (&sym.m11, tm.m11),
                (&sym.m12, tm.m12),
                (&sym.m21, tm.m21),
                (&sym.m22, tm.m22),
            ] {
                assert!((a.evaluate(c, s).re - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn parabolic_band_is_continuous() {
        let a = 0.5;
        for delta in [4e-13, -4e-13, 4e-11, -4e-11] {
            let h = QuadraticHamiltonian::new(a, delta / (4.0 * a), 0.0, 0.0, 0.0, 1.0).unwrap();
            let tm = solve_heisenberg(&h, 10.0).unwrap();
            assert!((tm.determinant() - 1.0).abs() < 1e-12);
            let expected = 10.0 * (1.0 - delta * 100.0 / 6.0);
            assert!((tm.m12 - expected).abs() < 1e-12);
        }
    }
}
