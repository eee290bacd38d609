//! Wavefunctions sampled on uniform periodic grids, and the spectral transform
//! between a representation and its conjugate.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_dynamics::Representation;

pub const MIN_LOG2_SAMPLES: u32 = 8;
pub const MAX_LOG2_SAMPLES: u32 = 16;

/// Largest sample modulus allowed at either end of a normalized state.
pub const BOUNDARY_AMPLITUDE: f64 = 1e-12;

/// `n` samples starting at `q_min` with spacing `(q_max − q_min)/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            q_min: -20.0,
            q_max: 20.0,
            n: 4096,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.q_min.is_finite() && self.q_max.is_finite() && self.q_max > self.q_min) {
            return Err(Error::InvalidArgument(format!(
                "grid needs finite q_min < q_max, got [{}, {})",
                self.q_min, self.q_max
            )));
        }
        let ok = self.n.is_power_of_two() && self.n >= 1 << MIN_LOG2_SAMPLES && self.n <= 1 << MAX_LOG2_SAMPLES;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "grid size must be a power of two between 2^{MIN_LOG2_SAMPLES} and 2^{MAX_LOG2_SAMPLES}, got {}",
                self.n
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.q_max - self.q_min) / self.n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveFunctionGrid {
    pub rep: Representation,
    pub hbar: f64,
    /// First sample coordinate (a momentum when `rep` is momentum).
    pub x_min: f64,
    pub dx: f64,
    pub n: usize,
    pub samples: Vec<Complex64>,
}

impl WaveFunctionGrid {
    pub fn new(rep: Representation, hbar: f64, x_min: f64, dx: f64, samples: Vec<Complex64>) -> Result<Self> {
        let n = samples.len();
        let spec = GridSpec {
            q_min: x_min,
            q_max: x_min + dx * n as f64,
            n,
        };
        spec.validate()?;
        if !(dx > 0.0) || !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidArgument("grid spacing and hbar must be positive".into()));
        }
        Ok(Self {
            rep,
            hbar,
            x_min,
            dx,
            n,
            samples,
        })
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            q_min: self.x_min,
            q_max: self.x_min + self.dx * self.n as f64,
            n: self.n,
        }
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        self.x_min + self.dx * i as f64
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coordinate(i)).collect()
    }

    pub fn norm_squared(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx
    }

    pub fn normalize(&mut self) {
        let norm = self.norm_squared().sqrt();
        if norm > 0.0 {
            for z in &mut self.samples {
                *z /= norm;
            }
        }
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.rep != other.rep {
            return Err(Error::RepresentationMismatch {
                kernel: self.rep.as_str(),
                state: other.rep.as_str(),
            });
        }
        let close = |a: f64, b: f64, scale: f64| (a - b).abs() <= 1e-12 * scale;
        if self.n != other.n
            || !close(self.dx, other.dx, self.dx)
            || !close(self.x_min, other.x_min, self.dx * self.n as f64)
        {
            return Err(Error::InvalidArgument("states live on different grids".into()));
        }
        Ok(())
    }

    /// `⟨self|other⟩` by the rectangle rule.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_same_grid(other)?;
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.dx)
    }

    /// `‖self − other‖₂`.
    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        let sum: f64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((sum * self.dx).sqrt())
    }

    /// `⟨q⟩` for the sampled density.
    pub fn mean_coordinate(&self) -> f64 {
        let weighted: f64 = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, z)| z.norm_sqr() * self.coordinate(i))
            .sum();
        weighted * self.dx / self.norm_squared()
    }

    /// Largest modulus among the two end samples, relative to the state norm.
    pub fn boundary_amplitude(&self) -> f64 {
        let norm = self.norm_squared().sqrt();
        self.samples[0].norm().max(self.samples[self.n - 1].norm()) / norm
    }

    /// Indices where `|ψ| > 1e-12·max|ψ|`.
    pub fn support(&self) -> (usize, usize) {
        let peak = self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let cut = peak * 1e-12;
        let first = self.samples.iter().position(|z| z.norm() > cut).unwrap_or(0);
        let last = self.samples.iter().rposition(|z| z.norm() > cut).unwrap_or(self.n - 1);
        (first, last)
    }

    /// Transform to the conjugate representation on a centred grid.
    pub fn to_conjugate(&self) -> WaveFunctionGrid {
        let dy = conjugate_spacing(self.n, self.dx, self.hbar);
        self.to_conjugate_at(-(self.n as f64 / 2.0) * dy)
    }

    /// Transform to the conjugate representation with first sample at `y_min`.
    pub fn to_conjugate_at(&self, y_min: f64) -> WaveFunctionGrid {
        let transform = SpectralTransform::new(self.rep, self.n, self.x_min, self.dx, y_min, self.hbar);
        let mut buf = self.samples.clone();
        transform.forward(&mut buf);
        WaveFunctionGrid {
            rep: self.rep.dual(),
            hbar: self.hbar,
            x_min: y_min,
            dx: transform.dy,
            n: self.n,
            samples: buf,
        }
    }

    pub fn to_momentum(&self) -> Result<WaveFunctionGrid> {
        match self.rep {
            Representation::Position => Ok(self.to_conjugate()),
            Representation::Momentum => Err(Error::RepresentationMismatch {
                kernel: "position",
                state: "momentum",
            }),
        }
    }

    pub fn to_position(&self) -> Result<WaveFunctionGrid> {
        match self.rep {
            Representation::Momentum => Ok(self.to_conjugate()),
            Representation::Position => Err(Error::RepresentationMismatch {
                kernel: "momentum",
                state: "position",
            }),
        }
    }
}

pub fn conjugate_spacing(n: usize, dx: f64, hbar: f64) -> f64 {
    2.0 * PI * hbar / (n as f64 * dx)
}

/// `e^{i·2π·m/n}` with `m` reduced modulo `n` in integer arithmetic.
fn root_of_unity(m: i128, n: usize) -> Complex64 {
    let r = m.rem_euclid(n as i128) as f64;
    let (s, c) = (2.0 * PI * r / n as f64).sin_cos();
    Complex64::new(c, s)
}

/// Unitary transform between a grid `q_j = q_min + j·dq` and its conjugate
/// `y_k = y_min + k·dy`, `dy·dq = 2πħ/n`:
///
/// ```text
/// φ_k = dq/√(2πħ) · Σ_j ψ_j · exp(σ·i·y_k·q_j/ħ)
/// ```
///
/// with `σ = −1` from position to momentum and `σ = +1` the other way.
pub struct SpectralTransform {
    pub n: usize,
    pub dy: f64,
    sign: f64,
    /// `exp(σ·i·y_min·q_j/ħ)` without the `q_min` part
    pre: Vec<Complex64>,
    /// `exp(σ·i·y_k·q_min/ħ)·dq/√(2πħ)`
    post: Vec<Complex64>,
    scale: f64,
    forward_plan: Arc<dyn Fft<f64>>,
    inverse_plan: Arc<dyn Fft<f64>>,
}

impl SpectralTransform {
    pub fn new(from: Representation, n: usize, q_min: f64, dq: f64, y_min: f64, hbar: f64) -> Self {
        let sign = match from {
            Representation::Position => -1.0,
            Representation::Momentum => 1.0,
        };
        let dy = conjugate_spacing(n, dq, hbar);
        // y_min·j·dq/ħ = 2π·(y_min/dy)·j/n; reduce exactly when y_min/dy is integral
        let ratio = y_min / dy;
        let pre: Vec<Complex64> = if ratio.fract() == 0.0 && ratio.abs() < 1e15 {
            let r = ratio as i128;
            (0..n)
                .map(|j| {
                    let z = root_of_unity(r * j as i128, n);
                    if sign < 0.0 {
                        z.conj()
                    } else {
                        z
                    }
                })
                .collect()
        } else {
            (0..n)
                .map(|j| Complex64::from_polar(1.0, sign * y_min * j as f64 * dq / hbar))
                .collect()
        };
        let scale = dq / (2.0 * PI * hbar).sqrt();
        let post = (0..n)
            .map(|k| Complex64::from_polar(scale, sign * (y_min + k as f64 * dy) * q_min / hbar))
            .collect();
        let mut planner = FftPlanner::new();
        Self {
            n,
            dy,
            sign,
            pre,
            post,
            scale,
            forward_plan: planner.plan_fft_forward(n),
            inverse_plan: planner.plan_fft_inverse(n),
        }
    }

    fn plans(&self) -> (&Arc<dyn Fft<f64>>, &Arc<dyn Fft<f64>>) {
        if self.sign < 0.0 {
            (&self.forward_plan, &self.inverse_plan)
        } else {
            (&self.inverse_plan, &self.forward_plan)
        }
    }

    /// Samples on the original grid → samples on the conjugate grid.
    pub fn forward(&self, buf: &mut [Complex64]) {
        for (z, w) in buf.iter_mut().zip(&self.pre) {
            *z *= w;
        }
        self.plans().0.process(buf);
        for (z, w) in buf.iter_mut().zip(&self.post) {
            *z *= w;
        }
    }

    /// Conjugate grid → original grid.
    pub fn backward(&self, buf: &mut [Complex64]) {
        // |post| = dq/√(2πħ), so dividing by |post|²·n undoes both scalings
        let unscale = 1.0 / (self.scale * self.scale * self.n as f64);
        for (z, w) in buf.iter_mut().zip(&self.post) {
            *z *= w.conj() * unscale;
        }
        self.plans().1.process(buf);
        for (z, w) in buf.iter_mut().zip(&self.pre) {
            *z *= w.conj();
        }
    }

    /// One conjugate-space multiplication `ψ ← T⁻¹·diag(phase)·T·ψ`, skipping
    /// the output twiddle that cancels.
    pub fn conjugate_multiply(&self, buf: &mut [Complex64], phase: &[Complex64]) {
        let (there, back) = self.plans();
        for (z, w) in buf.iter_mut().zip(&self.pre) {
            *z *= w;
        }
        there.process(buf);
        for (z, w) in buf.iter_mut().zip(phase) {
            *z *= w;
        }
        back.process(buf);
        let inv_n = 1.0 / self.n as f64;
        for (z, w) in buf.iter_mut().zip(&self.pre) {
            *z *= w.conj() * inv_n;
        }
    }

    /// Conjugate coordinate of output index `k`.
    pub fn conjugate_coordinate(&self, y_min: f64, k: usize) -> f64 {
        y_min + k as f64 * self.dy
    }
}

/// Normalized Gaussian centred at phase-space point `(x0, p0)`.
///
/// Position rep: `exp(−(x − x0)²/(2w²) + i·p0·x/ħ)`.
/// Momentum rep: `exp(−(p − p0)²/(2w²) − i·x0·p/ħ)`.
pub fn gaussian_packet(
    rep: Representation,
    center: (f64, f64),
    width: f64,
    grid: GridSpec,
    hbar: f64,
) -> Result<WaveFunctionGrid> {
    grid.validate()?;
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "packet width must be positive, got {width}"
        )));
    }
    let (x0, p0) = center;
    let (q0, k0) = match rep {
        Representation::Position => (x0, p0),
        Representation::Momentum => (p0, -x0),
    };
    let dq = grid.spacing();
    let samples = (0..grid.n)
        .map(|j| {
            let q = grid.q_min + dq * j as f64;
            let u = (q - q0) / width;
            Complex64::from_polar((-0.5 * u * u).exp(), k0 * q / hbar)
        })
        .collect();
    let mut psi = WaveFunctionGrid::new(rep, hbar, grid.q_min, dq, samples)?;
    psi.normalize();
    let edge = psi.boundary_amplitude();
    if edge > BOUNDARY_AMPLITUDE {
        return Err(Error::GridTooSmall {
            amplitude: edge,
            limit: BOUNDARY_AMPLITUDE,
        });
    }
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_packet() -> WaveFunctionGrid {
        gaussian_packet(Representation::Position, (0.7, -0.4), 1.0, GridSpec::default(), 1.0).unwrap()
    }

    #[test]
    fn packet_is_normalized_and_centred() {
        let psi = gaussian_packet(Representation::Position, (0.0, 0.0), 1.0, GridSpec::default(), 1.0).unwrap();
        assert!((psi.norm_squared() - 1.0).abs() < 1e-12);
        let shifted = default_packet();
        assert!((shifted.mean_coordinate() - 0.7).abs() < 1e-8);
    }

    #[test]
    fn packet_transform_is_gaussian() {
        let hbar = 0.7;
        let w = 1.3;
        let psi = gaussian_packet(Representation::Position, (0.0, 0.5), w, GridSpec::default(), hbar).unwrap();
        let phi = psi.to_momentum().unwrap();
        assert!((phi.mean_coordinate() - 0.5).abs() < 1e-10);
        // |φ(p)|² ∝ exp(−(p − p0)² w²/ħ²): width ħ/w
        let peak = (w * w / (PI * hbar * hbar)).powf(0.25);
        for (k, z) in phi.samples.iter().enumerate() {
            let p = phi.coordinate(k);
            let expected = peak * (-0.5 * ((p - 0.5) * w / hbar).powi(2)).exp();
            assert!((z.norm() - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let psi = default_packet();
        let back = psi.to_momentum().unwrap().to_position().unwrap();
        assert!(psi.l2_distance(&back).unwrap() < 1e-12);
        let mut buf = psi.samples.clone();
        let t = SpectralTransform::new(Representation::Position, psi.n, psi.x_min, psi.dx, -3.0, 1.0);
        t.forward(&mut buf);
        t.backward(&mut buf);
        let err: f64 = buf
            .iter()
            .zip(&psi.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn transform_preserves_norm() {
        let psi = default_packet();
        let phi = psi.to_momentum().unwrap();
        assert!((phi.norm_squared() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conjugate_phase_is_a_translation() {
        // multiplying by exp(−i·p·s/ħ) in momentum space shifts x by s
        let psi = default_packet();
        let y_min = -(psi.n as f64 / 2.0) * conjugate_spacing(psi.n, psi.dx, 1.0);
        let t = SpectralTransform::new(Representation::Position, psi.n, psi.x_min, psi.dx, y_min, 1.0);
        let shift = 2.0;
        let phase: Vec<Complex64> = (0..psi.n)
            .map(|k| Complex64::from_polar(1.0, -t.conjugate_coordinate(y_min, k) * shift))
            .collect();
        let mut buf = psi.samples.clone();
        t.conjugate_multiply(&mut buf, &phase);
        let moved = WaveFunctionGrid::new(psi.rep, 1.0, psi.x_min, psi.dx, buf).unwrap();
        assert!((moved.mean_coordinate() - 2.7).abs() < 1e-9);
    }

    #[test]
    fn grid_limits() {
        let bad = GridSpec {
            q_min: -1.0,
            q_max: 1.0,
            n: 100,
        };
        assert!(bad.validate().is_err());
        let huge = GridSpec {
            n: 1 << 17,
            ..GridSpec::default()
        };
        assert!(huge.validate().is_err());
        let narrow = GridSpec {
            q_min: -3.0,
            q_max: 3.0,
            n: 256,
        };
        assert!(matches!(
            gaussian_packet(Representation::Position, (0.0, 0.0), 1.0, narrow, 1.0),
            Err(Error::GridTooSmall { .. })
        ));
    }

    #[test]
    fn momentum_packet_carries_position_phase() {
        let phi = gaussian_packet(Representation::Momentum, (1.5, 0.0), 1.0, GridSpec::default(), 1.0).unwrap();
        let psi = phi.to_position().unwrap();
        assert!((psi.mean_coordinate() - 1.5).abs() < 1e-10);
    }
}
