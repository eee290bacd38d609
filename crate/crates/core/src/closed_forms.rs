//! Reference kernels written directly from their textbook formulas.
//!
//! Nothing here calls into the flow, ordering or kernel-building code.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_dynamics::Representation;

/// Open time interval `(0, upper)`; `upper = None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Validity {
    pub upper: Option<f64>,
}

impl Validity {
    pub fn contains(&self, t: f64) -> bool {
        t.is_finite() && t > 0.0 && self.upper.is_none_or(|u| t < u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Form {
    OscillatorMomentum { m: f64, omega: f64, hbar: f64 },
    OscillatorPosition { m: f64, omega: f64, hbar: f64 },
    FreePosition { m: f64, hbar: f64 },
    FreeMomentum { m: f64, hbar: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceKernel {
    pub name: &'static str,
    pub rep: Representation,
    pub validity: Validity,
    form: Form,
}

impl ReferenceKernel {
    pub fn hbar(&self) -> f64 {
        match self.form {
            Form::OscillatorMomentum { hbar, .. }
            | Form::OscillatorPosition { hbar, .. }
            | Form::FreePosition { hbar, .. }
            | Form::FreeMomentum { hbar, .. } => hbar,
        }
    }

    /// `true` for kernels of the form `δ(q' − q)·phase(q)`.
    pub fn is_delta(&self) -> bool {
        matches!(self.form, Form::FreeMomentum { .. })
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if self.validity.contains(t) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "{} is only defined for t in (0, {}), got {t}",
                self.name,
                self.validity.upper.map_or("inf".to_string(), |u| u.to_string())
            )))
        }
    }

    /// `K(q', t; q, 0)`. Delta kernels return [`Error::DegenerateKernel`].
    pub fn evaluate(&self, t: f64, q_end: f64, q_start: f64) -> Result<Complex64> {
        self.evaluate_complex(t, Complex64::new(q_end, 0.0), Complex64::new(q_start, 0.0))
    }

    pub fn evaluate_complex(&self, t: f64, q_end: Complex64, q_start: Complex64) -> Result<Complex64> {
        self.check_time(t)?;
        let i = Complex64::new(0.0, 1.0);
        match self.form {
            Form::OscillatorMomentum { m, omega, hbar } => {
                let (sin, cos) = (omega * t).sin_cos();
                let prefactor = (2.0 * PI * i * hbar * m * omega * sin).sqrt().inv();
                let bracket = (q_end * q_end + q_start * q_start) * cos - 2.0 * q_end * q_start;
                Ok(prefactor * (i * bracket / (2.0 * m * omega * hbar * sin)).exp())
            }
            Form::OscillatorPosition { m, omega, hbar } => {
                let (sin, cos) = (omega * t).sin_cos();
                let prefactor = (m * omega / (2.0 * PI * i * hbar * sin)).sqrt();
                let bracket = (q_end * q_end + q_start * q_start) * cos - 2.0 * q_end * q_start;
                Ok(prefactor * (i * m * omega * bracket / (2.0 * hbar * sin)).exp())
            }
            Form::FreePosition { m, hbar } => {
                let prefactor = (m / (2.0 * PI * i * hbar * t)).sqrt();
                let d = q_end - q_start;
                Ok(prefactor * (i * m * d * d / (2.0 * hbar * t)).exp())
            }
            Form::FreeMomentum { .. } => Err(Error::DegenerateKernel),
        }
    }

    /// `|∂_q arg K(q', t; q, 0)|`.
    pub fn phase_slope(&self, t: f64, q_end: f64, q_start: f64) -> f64 {
        match self.form {
            Form::OscillatorMomentum { m, omega, hbar } => {
                let (sin, cos) = (omega * t).sin_cos();
                ((q_start * cos - q_end) / (m * omega * hbar * sin)).abs()
            }
            Form::OscillatorPosition { m, omega, hbar } => {
                let (sin, cos) = (omega * t).sin_cos();
                (m * omega * (q_start * cos - q_end) / (hbar * sin)).abs()
            }
            Form::FreePosition { m, hbar } => (m * (q_start - q_end) / (hbar * t)).abs(),
            Form::FreeMomentum { .. } => 0.0,
        }
    }

    /// Phase multiplying `δ(p' − p)` for the free momentum kernel.
    pub fn delta_phase(&self, t: f64, p: f64) -> Option<Complex64> {
        match self.form {
            Form::FreeMomentum { m, hbar } if t.is_finite() && t >= 0.0 => {
                Some(Complex64::new(0.0, -p * p * t / (2.0 * m * hbar)).exp())
            }
            _ => None,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

/// Oscillator kernel in the momentum representation, `ωt ∈ (0, π)`.
pub fn ho_momentum_kernel(m: f64, omega: f64, hbar: f64) -> Result<ReferenceKernel> {
    positive("m", m)?;
    positive("omega", omega)?;
    positive("hbar", hbar)?;
    Ok(ReferenceKernel {
        name: "oscillator_momentum",
        rep: Representation::Momentum,
        validity: Validity {
            upper: Some(PI / omega),
        },
        form: Form::OscillatorMomentum { m, omega, hbar },
    })
}

/// Oscillator kernel in the position representation, `ωt ∈ (0, π)`.
pub fn ho_position_kernel(m: f64, omega: f64, hbar: f64) -> Result<ReferenceKernel> {
    positive("m", m)?;
    positive("omega", omega)?;
    positive("hbar", hbar)?;
    Ok(ReferenceKernel {
        name: "oscillator_position",
        rep: Representation::Position,
        validity: Validity {
            upper: Some(PI / omega),
        },
        form: Form::OscillatorPosition { m, omega, hbar },
    })
}

/// `(position kernel, momentum delta kernel)` of the free particle.
pub fn free_particle_kernels(m: f64, hbar: f64) -> Result<(ReferenceKernel, ReferenceKernel)> {
    positive("m", m)?;
    positive("hbar", hbar)?;
    let unbounded = Validity { upper: None };
    Ok((
        ReferenceKernel {
            name: "free_position",
            rep: Representation::Position,
            validity: unbounded,
            form: Form::FreePosition { m, hbar },
        },
        ReferenceKernel {
            name: "free_momentum",
            rep: Representation::Momentum,
            validity: unbounded,
            form: Form::FreeMomentum { m, hbar },
        },
    ))
}
