//! From the ordered Hamiltonian to a normalized Gaussian kernel.
//!
//! The kernel of a quadratic Hamiltonian has the form
//!
//! ```text
//! K(q', q) = exp(log_norm + (i/ħ)·(a_tt·q'² + a_00·q² + a_t0·q'q + b_t·q' + b_0·q + s))
//! ```
//!
//! with `q'` the endpoint variable at time `t` and `q` at time 0. The exponent
//! comes from integrating the ordered c-number Hamiltonian over time with the
//! endpoint values held fixed. The prefactor is fixed in three steps: the
//! endpoint derivative conditions fix any endpoint-dependent integration
//! constant, the ordering remnant fixes the time dependence, and the delta limit
//! at `t → 0⁺` fixes the overall constant.
//!
//! For the oscillator in the momentum representation this produces
//! `N(t) = 1/√(2πiħmω·sin ωt)`, the normalization under `∫dp`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficients::{Antiderivative, TrigRational};
use crate::error::{Error, Result};
use crate::operator_ordering::EndpointBilinear;
use crate::phase_dynamics::{invert_endpoints, solve_heisenberg, FlowBasis, QuadraticHamiltonian, Representation};
use crate::quadrature;

const QUADRATURE_REL_TOL: f64 = 1e-12;

/// Times within this relative distance of a caustic are rejected.
const CAUSTIC_MARGIN: f64 = 1e-12;

/// Result of integrating the ordered Hamiltonian, before normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentForm {
    pub rep: Representation,
    pub time: f64,
    pub hbar: f64,
    pub a_tt: Complex64,
    pub a_00: Complex64,
    pub a_t0: Complex64,
    pub b_t: Complex64,
    pub b_0: Complex64,
    pub s: Complex64,
    /// `−(i/ħ)·∫(ordering remnant)`: the time-dependent part of `log N`.
    pub log_amplitude: Complex64,
    /// `λ = lim_{t→0⁺} S(t)·a_tt(t)`; sets the delta-limit normalization.
    pub short_time_coefficient: Complex64,
}

/// Endpoint-dependent integration constants fixed by the derivative conditions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EndpointOffsets {
    pub a_tt: Complex64,
    pub a_00: Complex64,
    pub a_t0: Complex64,
    pub b_t: Complex64,
    pub b_0: Complex64,
}

impl EndpointOffsets {
    pub fn max_norm(&self) -> f64 {
        [self.a_tt, self.a_00, self.a_t0, self.b_t, self.b_0]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub log_norm: Complex64,
    pub offsets: EndpointOffsets,
}

/// Propagator `⟨q', t | q, 0⟩` of a quadratic Hamiltonian.
///
/// Degenerate kernels (`degenerate == true`) are `δ(q' − q)·exp(−i·E(q)·t/ħ)`
/// with `E(q) = delta_energy[0]·q² + delta_energy[1]·q`; their Gaussian
/// coefficients are zero and unused.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernel {
    pub rep: Representation,
    pub time: f64,
    pub hbar: f64,
    pub degenerate: bool,
    pub a_tt: Complex64,
    pub a_00: Complex64,
    pub a_t0: Complex64,
    pub b_t: Complex64,
    pub b_0: Complex64,
    pub s: Complex64,
    pub log_norm: Complex64,
    pub delta_energy: Option<[f64; 2]>,
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

impl GaussianKernel {
    fn delta(rep: Representation, time: f64, hbar: f64, energy: [f64; 2]) -> Self {
        Self {
            rep,
            time,
            hbar,
            degenerate: true,
            a_tt: zero(),
            a_00: zero(),
            a_t0: zero(),
            b_t: zero(),
            b_0: zero(),
            s: zero(),
            log_norm: zero(),
            delta_energy: Some(energy),
        }
    }

    /// The quadratic form multiplying `i/ħ` in the exponent.
    pub fn quadratic_form(&self, q_end: Complex64, q_start: Complex64) -> Complex64 {
        self.a_tt * q_end * q_end
            + self.a_00 * q_start * q_start
            + self.a_t0 * q_end * q_start
            + self.b_t * q_end
            + self.b_0 * q_start
            + self.s
    }

    /// Kernel at complex endpoints (analytic continuation of the Gaussian).
    pub fn evaluate_complex(&self, q_end: Complex64, q_start: Complex64) -> Result<Complex64> {
        if self.degenerate {
            return Err(Error::DegenerateKernel);
        }
        let i_over_hbar = Complex64::new(0.0, 1.0 / self.hbar);
        Ok((self.log_norm + i_over_hbar * self.quadratic_form(q_end, q_start)).exp())
    }

    /// Phase multiplying `δ(q' − q)` for a degenerate kernel.
    pub fn delta_phase(&self, q: f64) -> Option<Complex64> {
        let [quadratic, linear] = self.delta_energy?;
        let energy = quadratic * q * q + linear * q;
        Some(Complex64::new(0.0, -energy * self.time / self.hbar).exp())
    }

    /// All complex coefficients, in serialization order.
    pub fn coefficients(&self) -> [Complex64; 7] {
        [
            self.a_tt,
            self.a_00,
            self.a_t0,
            self.b_t,
            self.b_0,
            self.s,
            self.log_norm,
        ]
    }

    /// Human-readable exponent. When `a_tt = a_00` the quadratic part is written
    /// as `i[(q'² + q²)·cosθ − 2q'q]/(ħ·L)` with `L = −2/a_t0`.
    pub fn pretty(&self) -> String {
        let q = match self.rep {
            Representation::Momentum => "p",
            Representation::Position => "x",
        };
        if self.degenerate {
            let [a, b] = self.delta_energy.unwrap_or([0.0, 0.0]);
            return format!(
                "K({q}',{q}) = δ({q}' − {q})·exp(−i·({a:.12}·{q}² + {b:.12}·{q})·{t}/{hbar})",
                t = self.time,
                hbar = self.hbar
            );
        }
        let norm = self.log_norm.exp();
        let mut out = format!("K({q}',{q}) = ({:.12}{:+.12}i)·exp(", norm.re, norm.im);
        let symmetric = (self.a_tt - self.a_00).norm() <= 1e-12 * self.a_tt.norm().max(1.0);
        if symmetric && self.a_t0.norm() > 0.0 && self.a_t0.im == 0.0 && self.a_tt.im == 0.0 {
            let scale = -2.0 / self.a_t0.re;
            let cosine = self.a_tt.re * scale;
            out.push_str(&format!(
                "i[({q}'² + {q}²)·{cosine:.12} − 2{q}'{q}] / ({:.12})",
                self.hbar * scale
            ));
        } else {
            out.push_str(&format!(
                "(i/{hbar})[{:.12}·{q}'² + {:.12}·{q}² + {:.12}·{q}'{q}]",
                self.a_tt.re,
                self.a_00.re,
                self.a_t0.re,
                hbar = self.hbar
            ));
        }
        let linear_or_scalar = [self.b_t, self.b_0, self.s].iter().any(|c| c.norm() > 0.0);
        if linear_or_scalar {
            out.push_str(&format!(
                " + (i/{hbar})[{:.12}·{q}' + {:.12}·{q} + {:.12}]",
                self.b_t.re,
                self.b_0.re,
                self.s.re,
                hbar = self.hbar
            ));
        }
        out.push(')');
        out
    }
}

impl fmt::Display for GaussianKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pretty())
    }
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::InvalidArgument(format!("time must be positive, got {t}")));
    }
    Ok(())
}

fn check_caustic(basis: &FlowBasis, t: f64) -> Result<()> {
    if let Some(caustic) = basis.first_caustic() {
        if t >= caustic * (1.0 - CAUSTIC_MARGIN) {
            return Err(Error::Caustic(format!(
                "t = {t} reaches the caustic at {caustic} (the Gaussian kernel only exists for 0 < t < {caustic})"
            )));
        }
    }
    let (_, s) = basis.cosine_sine(t);
    if !(s > 0.0) {
        return Err(Error::Caustic(format!(
            "sine-like flow solution is not positive at t = {t}"
        )));
    }
    Ok(())
}

fn closed_form(f: &TrigRational, name: &str) -> Result<Antiderivative> {
    f.antiderivative()
        .ok_or_else(|| Error::Inconsistent(format!("{name} left the closed trig-rational family: {f:?}")))
}

/// `−∫₀ᵗ H_c(τ) dτ` coefficient by coefficient, endpoints held fixed.
///
/// The homogeneous coefficients and the ordering remnant integrate in closed
/// form; terms produced by the linear coefficients are regular at `τ = 0` and
/// are integrated by adaptive quadrature.
pub fn integrate_exponent(bilinear: &EndpointBilinear, t: f64) -> Result<ExponentForm> {
    check_time(t)?;
    let h = &bilinear.hamiltonian;
    let basis = FlowBasis::of(h);
    check_caustic(&basis, t)?;
    let (c, s) = basis.cosine_sine(t);
    let hom = &bilinear.homogeneous;

    let tt = closed_form(&hom.c_tt, "c_tt")?;
    let t0 = closed_form(&hom.c_t0, "c_t0")?;
    let s00 = closed_form(&hom.c_00, "c_00")?;
    let remnant = closed_form(&hom.ordering_remnant, "ordering remnant")?;

    let a_tt = -tt.evaluate(c, s, t);
    let short_time_coefficient = -tt.algebraic.coefficient_at_origin(-1);
    if tt.algebraic.leading_power().is_some_and(|p| p < -1) || tt.log_s != zero() {
        return Err(Error::Inconsistent(
            "exponent has a stronger than 1/t singularity".into(),
        ));
    }

    let i_over_hbar = Complex64::new(0.0, 1.0 / h.hbar);
    let log_amplitude = -i_over_hbar * remnant.evaluate(c, s, t);

    let (b_t, b_0, scalar) = if h.linear_p == 0.0 && h.linear_x == 0.0 {
        (zero(), zero(), zero())
    } else {
        // the integrand is regular at τ = 0 but the endpoint map is singular there
        let tau_min = 1e-6 * t;
        let eval = |tau: f64, pick: fn(&crate::operator_ordering::OrderedHamiltonian) -> Complex64| {
            bilinear
                .at(tau.max(tau_min))
                .map(|o| pick(&o))
                .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
        };
        let scale = h.linear_p.abs().max(h.linear_x.abs()) * 1e-13;
        let b_t = -quadrature::integrate(|tau| eval(tau, |o| o.c_t), 0.0, t, QUADRATURE_REL_TOL, scale)?;
        let b_0 = -quadrature::integrate(|tau| eval(tau, |o| o.c_0), 0.0, t, QUADRATURE_REL_TOL, scale)?;
        let scalar = -quadrature::integrate(
            |tau| eval(tau, |o| o.c_scalar - o.ordering_remnant),
            0.0,
            t,
            QUADRATURE_REL_TOL,
            scale,
        )?;
        if !(b_t.norm().is_finite() && b_0.norm().is_finite() && scalar.norm().is_finite()) {
            return Err(Error::Inconsistent("drift terms could not be integrated".into()));
        }
        (b_t, b_0, scalar)
    };

    Ok(ExponentForm {
        rep: bilinear.rep,
        time: t,
        hbar: h.hbar,
        a_tt,
        a_00: -s00.evaluate(c, s, t),
        a_t0: -t0.evaluate(c, s, t),
        b_t,
        b_0,
        s: scalar,
        log_amplitude,
        short_time_coefficient,
    })
}

/// Exponent coefficients demanded by the endpoint derivative conditions
/// `⟨q',t|Q̄(t)|q,0⟩ = ∓iħ∂_{q'}K`, `⟨q',t|Q̄(0)|q,0⟩ = ±iħ∂_q K`, where `Q̄` is
/// the complementary operator. Returns `(a_tt, a_00, a_t0, b_t, b_0)` and the
/// second, redundant, value of `a_t0`.
pub fn derivative_condition_coefficients(
    h: &QuadraticHamiltonian,
    t: f64,
    rep: Representation,
) -> Result<([f64; 5], f64)> {
    let tm = solve_heisenberg(h, t)?;
    let inv = invert_endpoints(&tm, rep)?;
    // momentum: X = iħ∂_p on the bra side; position: P = −iħ∂_x
    let sign = match rep {
        Representation::Momentum => 1.0,
        Representation::Position => -1.0,
    };
    let end = inv.at_end;
    let start = inv.at_start;
    Ok((
        [
            -sign * end.end / 2.0,
            sign * start.start / 2.0,
            -sign * end.start,
            -sign * end.constant,
            sign * start.constant,
        ],
        sign * start.end,
    ))
}

/// Fixes `log N(t)` and the endpoint constants of integration.
pub fn determine_normalization(exponent: &ExponentForm, h: &QuadraticHamiltonian, t: f64) -> Result<Normalization> {
    check_time(t)?;
    let basis = FlowBasis::of(h);
    check_caustic(&basis, t)?;

    // (1) derivative conditions: whatever the time integral leaves out is an
    //     endpoint-dependent constant
    let (required, a_t0_check) = derivative_condition_coefficients(h, t, exponent.rep)?;
    let scale = required.iter().map(|v| v.abs()).fold(1.0, f64::max);
    if (required[2] - a_t0_check).abs() > 1e-9 * scale {
        return Err(Error::Inconsistent(format!(
            "derivative conditions disagree on a_t0: {} vs {a_t0_check}",
            required[2]
        )));
    }
    let offsets = EndpointOffsets {
        a_tt: required[0] - exponent.a_tt,
        a_00: required[1] - exponent.a_00,
        a_t0: required[2] - exponent.a_t0,
        b_t: required[3] - exponent.b_t,
        b_0: required[4] - exponent.b_0,
    };

    // (2) time dependence: log_amplitude solves dN/dt = −(i/ħ)·remnant·N
    // (3) delta limit: N(t)·S(t)^{1/2} → √(λ/(iπħ)) as t → 0⁺
    let lambda = exponent.short_time_coefficient;
    if !(lambda.norm() > 0.0) || !lambda.norm().is_finite() {
        return Err(Error::Inconsistent(format!(
            "short-time quadratic coefficient {lambda} cannot be normalized"
        )));
    }
    let gaussian = lambda / Complex64::new(0.0, PI * exponent.hbar);
    let log_norm = 0.5 * gaussian.ln() + exponent.log_amplitude;
    Ok(Normalization { log_norm, offsets })
}

/// Full pipeline: flow, ordering, time integral, normalization.
pub fn build_kernel(h: &QuadraticHamiltonian, t: f64, rep: Representation) -> Result<GaussianKernel> {
    h.validate()?;
    check_time(t)?;
    let tm = solve_heisenberg(h, t)?;
    if rep == Representation::Momentum && h.conserves_momentum() {
        return Ok(GaussianKernel::delta(rep, t, h.hbar, [h.kinetic, h.linear_p]));
    }
    check_caustic(&FlowBasis::of(h), t)?;
    invert_endpoints(&tm, rep)?;

    let bilinear = EndpointBilinear::new(h, rep)?;
    let exponent = integrate_exponent(&bilinear, t)?;
    let norm = determine_normalization(&exponent, h, t)?;
    let o = norm.offsets;
    Ok(GaussianKernel {
        rep,
        time: t,
        hbar: h.hbar,
        degenerate: false,
        a_tt: exponent.a_tt + o.a_tt,
        a_00: exponent.a_00 + o.a_00,
        a_t0: exponent.a_t0 + o.a_t0,
        b_t: exponent.b_t + o.b_t,
        b_0: exponent.b_0 + o.b_0,
        s: exponent.s,
        log_norm: norm.log_norm,
        delta_energy: None,
    })
}

/// `K(q_end, q_start)` for a non-degenerate kernel.
pub fn evaluate_kernel(k: &GaussianKernel, q_end: f64, q_start: f64) -> Result<Complex64> {
    k.evaluate_complex(Complex64::new(q_end, 0.0), Complex64::new(q_start, 0.0))
}

/// `∫ later(q'', q')·earlier(q', q) dq'` by the complex Gaussian integral.
pub fn compose(later: &GaussianKernel, earlier: &GaussianKernel) -> Result<GaussianKernel> {
    if later.degenerate || earlier.degenerate {
        return Err(Error::DegenerateKernel);
    }
    if later.rep != earlier.rep {
        return Err(Error::RepresentationMismatch {
            kernel: later.rep.as_str(),
            state: earlier.rep.as_str(),
        });
    }
    if (later.hbar - earlier.hbar).abs() > 1e-15 * later.hbar {
        return Err(Error::InvalidArgument("kernels use different values of hbar".into()));
    }
    let hbar = later.hbar;
    // exponent in q': (i/ħ)(α q'² + β q'),  β = later.a_t0·q'' + earlier.a_t0·q + β₀
    let alpha = later.a_00 + earlier.a_tt;
    if alpha.norm() < 1e-300 {
        return Err(Error::Caustic("intermediate Gaussian integral is singular".into()));
    }
    let beta0 = later.b_0 + earlier.b_t;
    let four_alpha = 4.0 * alpha;
    let log_gauss = 0.5 * (Complex64::new(0.0, PI * hbar) / alpha).ln();
    Ok(GaussianKernel {
        rep: later.rep,
        time: later.time + earlier.time,
        hbar,
        degenerate: false,
        a_tt: later.a_tt - later.a_t0 * later.a_t0 / four_alpha,
        a_00: earlier.a_00 - earlier.a_t0 * earlier.a_t0 / four_alpha,
        a_t0: -2.0 * later.a_t0 * earlier.a_t0 / four_alpha,
        b_t: later.b_t - 2.0 * later.a_t0 * beta0 / four_alpha,
        b_0: earlier.b_0 - 2.0 * earlier.a_t0 * beta0 / four_alpha,
        s: later.s + earlier.s - beta0 * beta0 / four_alpha,
        log_norm: later.log_norm + earlier.log_norm + log_gauss,
        delta_energy: None,
    })
}

/// Largest coefficient difference; `log_norm` is compared modulo `2πi`.
pub fn coefficient_distance(a: &GaussianKernel, b: &GaussianKernel) -> f64 {
    let ca = a.coefficients();
    let cb = b.coefficients();
    let mut worst: f64 = 0.0;
    for i in 0..6 {
        worst = worst.max((ca[i] - cb[i]).norm());
    }
    let mut d = ca[6] - cb[6];
    d.im = (d.im + PI).rem_euclid(2.0 * PI) - PI;
    worst.max(d.norm())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;

    fn unit_oscillator() -> QuadraticHamiltonian {
        QuadraticHamiltonian::oscillator(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn oscillator_exponent_integral() {
        let h = unit_oscillator();
        let bil = EndpointBilinear::new(&h, Representation::Momentum).unwrap();
        for t in [0.3, 1.0, 2.0] {
            let e = integrate_exponent(&bil, t).unwrap();
            let (s, c) = (t.sin(), t.cos());
            assert!((e.a_tt - Complex64::new(c / (2.0 * s), 0.0)).norm() < 1e-12);
            assert!((e.a_00 - Complex64::new(c / (2.0 * s), 0.0)).norm() < 1e-12);
            assert!((e.a_t0 - Complex64::new(-1.0 / s, 0.0)).norm() < 1e-12);
            assert!((e.log_amplitude - Complex64::new(-0.5 * s.ln(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn quarter_period_exponent_value() {
        let h = unit_oscillator();
        let bil = EndpointBilinear::new(&h, Representation::Momentum).unwrap();
        let e = integrate_exponent(&bil, FRAC_PI_2).unwrap();
        let (pe, ps) = (2.0, 3.0);
        let q = e.a_tt * pe * pe + e.a_00 * ps * ps + e.a_t0 * pe * ps;
        let exponent = Complex64::new(0.0, 1.0) * q;
        assert!((exponent - Complex64::new(0.0, -6.0)).norm() < 1e-12);
    }

    #[test]
    fn exponent_diverges_at_short_times() {
        let h = unit_oscillator();
        let bil = EndpointBilinear::new(&h, Representation::Momentum).unwrap();
        let big = integrate_exponent(&bil, 1e-4).unwrap();
        let small = integrate_exponent(&bil, 1e-2).unwrap();
        let value = |e: &ExponentForm| (e.a_tt * 1.0 + e.a_00 * 4.0 + e.a_t0 * 2.0).norm();
        assert!(value(&big) > 50.0 * value(&small));
    }

    #[test]
    fn caustic_is_rejected() {
        let h = unit_oscillator();
        let bil = EndpointBilinear::new(&h, Representation::Momentum).unwrap();
        assert!(matches!(integrate_exponent(&bil, PI), Err(Error::Caustic(_))));
        assert!(matches!(integrate_exponent(&bil, 4.0), Err(Error::Caustic(_))));
        assert!(matches!(
            build_kernel(&h, PI, Representation::Position),
            Err(Error::Caustic(_))
        ));
    }

    #[test]
    fn oscillator_normalization_modulus() {
        let h = unit_oscillator();
        for t in [0.1, 0.7, 2.5] {
            let k = build_kernel(&h, t, Representation::Momentum).unwrap();
            let modulus2 = (2.0 * k.log_norm.re).exp();
            assert!((modulus2 - 1.0 / (2.0 * PI * t.sin())).abs() < 1e-10 * modulus2);
        }
    }

    #[test]
    fn short_time_phase_of_prefactor() {
        let h = unit_oscillator();
        let k = build_kernel(&h, 1e-6, Representation::Momentum).unwrap();
        assert!((k.log_norm.im + PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn nearly_free_momentum_kernel_is_flagged() {
        let h = QuadraticHamiltonian::oscillator(1.0, 1e-7, 1.0).unwrap();
        assert!(matches!(
            build_kernel(&h, 1.0, Representation::Momentum),
            Err(Error::DegenerateMap { .. })
        ));
    }

    #[test]
    fn quarter_period_is_fourier_transform() {
        let h = unit_oscillator();
        let k = build_kernel(&h, FRAC_PI_2, Representation::Momentum).unwrap();
        let expected_norm = Complex64::new(0.0, 2.0 * PI).sqrt().inv();
        for (pe, ps) in [(0.0, 0.0), (2.0, 3.0), (-1.5, 0.5)] {
            let v = evaluate_kernel(&k, pe, ps).unwrap();
            let expected = expected_norm * Complex64::new(0.0, -pe * ps).exp();
            assert!((v - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn free_particle_momentum_kernel_is_delta() {
        let h = QuadraticHamiltonian::free(1.0, 1.0).unwrap();
        let k = build_kernel(&h, 1.0, Representation::Momentum).unwrap();
        assert!(k.degenerate);
        let p: f64 = 1.3;
        let phase = k.delta_phase(p).unwrap();
        assert!((phase - Complex64::new(0.0, -p * p / 2.0).exp()).norm() < 1e-15);
        assert!(matches!(evaluate_kernel(&k, 0.0, 0.0), Err(Error::DegenerateKernel)));
    }

    #[test]
    fn time_must_be_positive() {
        let h = unit_oscillator();
        assert!(matches!(
            build_kernel(&h, 0.0, Representation::Momentum),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn zero_exponent_point_gives_prefactor() {
        let h = unit_oscillator();
        let k = build_kernel(&h, 0.9, Representation::Position).unwrap();
        assert!((evaluate_kernel(&k, 0.0, 0.0).unwrap() - k.log_norm.exp()).norm() < 1e-15);
    }

    #[test]
    fn oscillator_offsets_vanish() {
        let h = QuadraticHamiltonian::oscillator(1.3, 0.8, 0.6).unwrap();
        for rep in [Representation::Momentum, Representation::Position] {
            let bil = EndpointBilinear::new(&h, rep).unwrap();
            let e = integrate_exponent(&bil, 1.1).unwrap();
            let n = determine_normalization(&e, &h, 1.1).unwrap();
            assert!(n.offsets.max_norm() < 1e-12, "{rep}: {:?}", n.offsets);
        }
    }

    #[test]
    fn offsets_are_time_independent() {
        let h = QuadraticHamiltonian::new(0.7, 0.9, 0.35, 0.4, -0.6, 1.0).unwrap();
        for rep in [Representation::Momentum, Representation::Position] {
            let bil = EndpointBilinear::new(&h, rep).unwrap();
            let offsets = |t: f64| {
                let e = integrate_exponent(&bil, t).unwrap();
                determine_normalization(&e, &h, t).unwrap().offsets
            };
            let (o1, o2) = (offsets(0.4), offsets(1.3));
            let diff = EndpointOffsets {
                a_tt: o1.a_tt - o2.a_tt,
                a_00: o1.a_00 - o2.a_00,
                a_t0: o1.a_t0 - o2.a_t0,
                b_t: o1.b_t - o2.b_t,
                b_0: o1.b_0 - o2.b_0,
            };
            assert!(diff.max_norm() < 1e-9, "{rep}: {diff:?}");
        }
    }

    #[test]
    fn composition_of_quarter_periods() {
        let h = unit_oscillator();
        let k1 = build_kernel(&h, PI / 8.0, Representation::Momentum).unwrap();
        let k2 = build_kernel(&h, PI / 8.0, Representation::Momentum).unwrap();
        let k12 = build_kernel(&h, PI / 4.0, Representation::Momentum).unwrap();
        let composed = compose(&k2, &k1).unwrap();
        assert!(coefficient_distance(&composed, &k12) < 1e-10);
    }

    #[test]
    fn serialization_layout() {
        let h = unit_oscillator();
        let k = build_kernel(&h, 0.5, Representation::Momentum).unwrap();
        let json = serde_json::to_string(&k).unwrap();
        assert!(json.starts_with(r#"{"rep":"momentum","time":0.5,"hbar":1.0,"degenerate":false,"a_tt":["#));
        let back: GaussianKernel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, k);
    }

    #[test]
    fn pretty_uses_cosine_form() {
        let h = unit_oscillator();
        let k = build_kernel(&h, PI / 4.0, Representation::Momentum).unwrap();
        let text = k.pretty();
        assert!(text.contains("(p'² + p²)·0.707106781187"), "{text}");
        assert!(text.contains("/ (1.414213562373)"), "{text}");
    }
}
