//! Split-step spectral evolution and kernel application on grids.
//!
//! `evolve` knows nothing about kernels: it integrates the Schrödinger equation
//! directly and serves as the oracle the kernels are checked against.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::closed_forms::ReferenceKernel;
use crate::error::{Error, Result};
use crate::grid::{conjugate_spacing, SpectralTransform, WaveFunctionGrid};
use crate::kernel_builder::GaussianKernel;
use crate::phase_dynamics::{QuadraticHamiltonian, Representation};

/// Default time step when no step count is requested.
pub const DEFAULT_DT: f64 = 1e-3;
/// `dt·max|V|/ħ` bound for the position-dependent factor.
pub const POTENTIAL_PHASE_LIMIT: f64 = 0.1;
/// `dt·max|T|/ħ` bound for the momentum-dependent factor.
pub const KINETIC_PHASE_LIMIT: f64 = 0.5;
/// Largest phase change of the kernel between neighbouring source samples.
pub const KERNEL_PHASE_STEP_LIMIT: f64 = std::f64::consts::PI;
/// Spectral tails of the evolved state must stay below this fraction of the peak.
pub const SPECTRAL_TAIL_LIMIT: f64 = 1e-10;

/// Anything `apply_kernel` can integrate against.
pub trait Propagator: Sync {
    fn rep(&self) -> Representation;
    fn hbar(&self) -> f64;
    /// `Some(phase)` when the kernel is `δ(q' − q)·phase(q)`.
    fn delta_phase(&self, q: f64) -> Option<Complex64>;
    fn kernel(&self, q_end: f64, q_start: f64) -> Result<Complex64>;
    /// `|∂_q arg K(q', q)|`, the phase slope along the source variable.
    fn phase_slope(&self, q_end: f64, q_start: f64) -> f64;
}

impl Propagator for GaussianKernel {
    fn rep(&self) -> Representation {
        self.rep
    }

    fn hbar(&self) -> f64 {
        self.hbar
    }

    fn delta_phase(&self, q: f64) -> Option<Complex64> {
        if self.degenerate {
            GaussianKernel::delta_phase(self, q)
        } else {
            None
        }
    }

    fn kernel(&self, q_end: f64, q_start: f64) -> Result<Complex64> {
        crate::kernel_builder::evaluate_kernel(self, q_end, q_start)
    }

    fn phase_slope(&self, q_end: f64, q_start: f64) -> f64 {
        let d = 2.0 * self.a_00 * q_start + self.a_t0 * q_end + self.b_0;
        d.re.abs() / self.hbar
    }
}

/// A catalog kernel fixed at one time.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceAt {
    pub kernel: ReferenceKernel,
    pub time: f64,
}

impl ReferenceKernel {
    pub fn at(self, time: f64) -> ReferenceAt {
        ReferenceAt { kernel: self, time }
    }
}

impl Propagator for ReferenceAt {
    fn rep(&self) -> Representation {
        self.kernel.rep
    }

    fn hbar(&self) -> f64 {
        self.kernel.hbar()
    }

    fn delta_phase(&self, q: f64) -> Option<Complex64> {
        self.kernel.delta_phase(self.time, q)
    }

    fn kernel(&self, q_end: f64, q_start: f64) -> Result<Complex64> {
        self.kernel.evaluate(self.time, q_end, q_start)
    }

    fn phase_slope(&self, q_end: f64, q_start: f64) -> f64 {
        self.kernel.phase_slope(self.time, q_end, q_start)
    }
}

/// `φ(q') = ∫ K(q', q)·ψ(q) dq` by the trapezoidal rule over the grid.
///
/// The result is not renormalized. Degenerate kernels multiply pointwise.
pub fn apply_kernel<K: Propagator + ?Sized>(k: &K, psi: &WaveFunctionGrid) -> Result<WaveFunctionGrid> {
    if k.rep() != psi.rep {
        return Err(Error::RepresentationMismatch {
            kernel: k.rep().as_str(),
            state: psi.rep.as_str(),
        });
    }
    if (k.hbar() - psi.hbar).abs() > 1e-15 * psi.hbar {
        return Err(Error::InvalidArgument(
            "kernel and state use different values of hbar".into(),
        ));
    }
    let mut out = psi.clone();
    if k.delta_phase(0.0).is_some() {
        for (i, z) in out.samples.iter_mut().enumerate() {
            *z *= k.delta_phase(psi.coordinate(i)).unwrap_or_default();
        }
        return Ok(out);
    }

    let (first, last) = psi.support();
    let (lo, hi) = (psi.coordinate(first), psi.coordinate(last));
    let (end_lo, end_hi) = (psi.coordinate(0), psi.coordinate(psi.n - 1));
    // the slope is affine in both variables, so the corners bound it
    let slope = [(end_lo, lo), (end_lo, hi), (end_hi, lo), (end_hi, hi)]
        .iter()
        .map(|&(qe, qs)| k.phase_slope(qe, qs))
        .fold(0.0, f64::max);
    let phase_step = slope * psi.dx;
    if !(phase_step < KERNEL_PHASE_STEP_LIMIT) {
        return Err(Error::UnderResolved {
            phase_step,
            limit: KERNEL_PHASE_STEP_LIMIT,
        });
    }

    let weights: Vec<f64> = (first..=last)
        .map(|j| if j == 0 || j == psi.n - 1 { 0.5 * psi.dx } else { psi.dx })
        .collect();
    let sources: Vec<(f64, Complex64)> = (first..=last)
        .zip(&weights)
        .map(|(j, w)| (psi.coordinate(j), psi.samples[j] * w))
        .collect();
    out.samples = (0..psi.n)
        .into_par_iter()
        .map(|i| {
            let qe = psi.coordinate(i);
            let mut acc = Complex64::new(0.0, 0.0);
            for &(qs, v) in &sources {
                acc += k.kernel(qe, qs)? * v;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(out)
}

/// Hamiltonian split into a factor diagonal on the state's grid (`local`)
/// and one diagonal on the conjugate grid, after removing the cross term with
/// the gauge `ψ = exp(iγq²/ħ)·χ`.
#[derive(Debug, Clone, Copy)]
struct Splitting {
    gauge: f64,
    /// `(quadratic, linear)` of the factor diagonal in `q`
    local: (f64, f64),
    /// same for the conjugate variable
    conjugate: (f64, f64),
    local_limit: f64,
    conjugate_limit: f64,
}

impl Splitting {
    fn of(h: &QuadraticHamiltonian, rep: Representation) -> Option<Self> {
        let (a, b, c, d, e) = (h.kinetic, h.potential, h.cross, h.linear_p, h.linear_x);
        match rep {
            Representation::Position => {
                let gauge = -c / (4.0 * a);
                Some(Self {
                    gauge,
                    local: (b - c * c / (4.0 * a), e - d * c / (2.0 * a)),
                    conjugate: (a, d),
                    local_limit: POTENTIAL_PHASE_LIMIT,
                    conjugate_limit: KINETIC_PHASE_LIMIT,
                })
            }
            Representation::Momentum => {
                if c != 0.0 && b == 0.0 {
                    return None;
                }
                let (gauge, a_eff, d_eff) = if c == 0.0 {
                    (0.0, a, d)
                } else {
                    (c / (4.0 * b), a - c * c / (4.0 * b), d - e * c / (2.0 * b))
                };
                Some(Self {
                    gauge,
                    local: (a_eff, d_eff),
                    conjugate: (b, e),
                    local_limit: KINETIC_PHASE_LIMIT,
                    conjugate_limit: POTENTIAL_PHASE_LIMIT,
                })
            }
        }
    }
}

fn max_over(range: (f64, f64), (quadratic, linear): (f64, f64)) -> f64 {
    let f = |q: f64| (quadratic * q * q + linear * q).abs();
    let mut worst = f(range.0).max(f(range.1));
    if quadratic != 0.0 {
        let vertex = -linear / (2.0 * quadratic);
        if vertex > range.0 && vertex < range.1 {
            worst = worst.max(f(vertex));
        }
    }
    worst
}

fn phases(coords: impl Iterator<Item = f64>, (quadratic, linear): (f64, f64), factor: f64) -> Vec<Complex64> {
    coords
        .map(|q| Complex64::from_polar(1.0, -(quadratic * q * q + linear * q) * factor))
        .collect()
}

/// Strang split-step evolution over `t`.
///
/// `steps = None` uses `ceil(t / 1e-3)`. Either way the step is checked
/// against the phase guards over the support of the state and its transform.
pub fn evolve(
    psi: &WaveFunctionGrid,
    h: &QuadraticHamiltonian,
    t: f64,
    steps: Option<usize>,
) -> Result<WaveFunctionGrid> {
    h.validate()?;
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::InvalidArgument(format!("time must be positive, got {t}")));
    }
    if (h.hbar - psi.hbar).abs() > 1e-15 * psi.hbar {
        return Err(Error::InvalidArgument(
            "Hamiltonian and state use different values of hbar".into(),
        ));
    }
    let steps = steps.unwrap_or_else(|| (t / DEFAULT_DT).ceil() as usize);
    if steps == 0 {
        return Err(Error::StepCount { steps: 0, minimum: 1 });
    }

    let Some(split) = Splitting::of(h, psi.rep) else {
        // no usable gauge in this representation; go through the conjugate one
        let conjugate = psi.to_conjugate();
        let evolved = evolve(&conjugate, h, t, Some(steps))?;
        return Ok(evolved.to_conjugate_at(psi.x_min));
    };

    let hbar = psi.hbar;
    let dt = t / steps as f64;
    let coords = psi.coordinates();
    let mut buf: Vec<Complex64> = psi
        .samples
        .iter()
        .zip(&coords)
        .map(|(z, q)| z * Complex64::from_polar(1.0, -split.gauge * q * q / hbar))
        .collect();

    let dy = conjugate_spacing(psi.n, psi.dx, hbar);
    let y_min = -(psi.n as f64 / 2.0) * dy;
    let transform = SpectralTransform::new(psi.rep, psi.n, psi.x_min, psi.dx, y_min, hbar);

    // guards over where the state actually lives
    let gauged = WaveFunctionGrid::new(psi.rep, hbar, psi.x_min, psi.dx, buf.clone())?;
    let (first, last) = gauged.support();
    let local_max = max_over((coords[first], coords[last]), split.local);
    let mut spectrum = buf.clone();
    transform.forward(&mut spectrum);
    let spectral = WaveFunctionGrid::new(psi.rep.dual(), hbar, y_min, dy, spectrum)?;
    let peak = spectral.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tail = spectral.samples[0].norm().max(spectral.samples[psi.n - 1].norm()) / peak;
    if tail > SPECTRAL_TAIL_LIMIT {
        return Err(Error::GridTooSmall {
            amplitude: tail,
            limit: SPECTRAL_TAIL_LIMIT,
        });
    }
    let (kf, kl) = spectral.support();
    let conjugate_max = max_over((spectral.coordinate(kf), spectral.coordinate(kl)), split.conjugate);
    let minimum = ((t * local_max / (hbar * split.local_limit)).ceil() as usize)
        .max((t * conjugate_max / (hbar * split.conjugate_limit)).ceil() as usize)
        .max(1);
    if steps < minimum
        || dt * local_max / hbar >= split.local_limit
        || dt * conjugate_max / hbar >= split.conjugate_limit
    {
        return Err(Error::StepCount {
            steps,
            minimum: minimum.max(steps + 1),
        });
    }

    let half = phases(coords.iter().copied(), split.local, 0.5 * dt / hbar);
    let full: Vec<Complex64> = half.iter().map(|z| z * z).collect();
    let kinetic = phases((0..psi.n).map(|k| y_min + k as f64 * dy), split.conjugate, dt / hbar);

    for (z, w) in buf.iter_mut().zip(&half) {
        *z *= w;
    }
    for step in 0..steps {
        transform.conjugate_multiply(&mut buf, &kinetic);
        let closing = if step + 1 < steps { &full } else { &half };
        for (z, w) in buf.iter_mut().zip(closing) {
            *z *= w;
        }
    }
    for (z, q) in buf.iter_mut().zip(&coords) {
        *z *= Complex64::from_polar(1.0, split.gauge * q * q / hbar);
    }
    WaveFunctionGrid::new(psi.rep, hbar, psi.x_min, psi.dx, buf)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::closed_forms::ho_momentum_kernel;
    use crate::grid::{gaussian_packet, GridSpec};
    use crate::kernel_builder::build_kernel;

    fn packet(rep: Representation, center: (f64, f64)) -> WaveFunctionGrid {
        gaussian_packet(rep, center, 1.0, GridSpec::default(), 1.0).unwrap()
    }

    fn oscillator() -> QuadraticHamiltonian {
        QuadraticHamiltonian::oscillator(1.0, 1.0, 1.0).unwrap()
    }

    /// `(⟨x⟩, ⟨p⟩)` of a position-rep state.
    fn phase_space_center(psi: &WaveFunctionGrid) -> (f64, f64) {
        (psi.mean_coordinate(), psi.to_momentum().unwrap().mean_coordinate())
    }

    #[test]
    fn free_particle_keeps_momentum_distribution() {
        let h = QuadraticHamiltonian::free(1.0, 1.0).unwrap();
        let psi = packet(Representation::Position, (-3.0, 1.0));
        let out = evolve(&psi, &h, 2.0, None).unwrap();
        let before = psi.to_momentum().unwrap();
        let after = out.to_momentum().unwrap();
        for (a, b) in before.samples.iter().zip(&after.samples) {
            assert!((a.norm() - b.norm()).abs() < 1e-10);
        }
        assert!((out.norm_squared() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn coherent_state_follows_classical_orbit() {
        let h = oscillator();
        let psi = packet(Representation::Position, (1.0, 0.0));
        let quarter = evolve(&psi, &h, PI / 2.0, Some(1024)).unwrap();
        let (x, p) = phase_space_center(&quarter);
        assert!(x.abs() < 1e-6 && (p + 1.0).abs() < 1e-6, "({x}, {p})");
        let period = evolve(&psi, &h, 2.0 * PI, Some(4096)).unwrap();
        let (x, p) = phase_space_center(&period);
        assert!((x - 1.0).abs() < 1e-6 && p.abs() < 1e-6, "({x}, {p})");
    }

    #[test]
    fn revival_after_one_period() {
        let h = oscillator();
        let psi = packet(Representation::Position, (0.5, 0.3));
        let out = evolve(&psi, &h, 2.0 * PI, Some(4096)).unwrap();
        let overlap = psi.inner(&out).unwrap();
        assert!(overlap.norm() > 1.0 - 1e-6);
        // global phase exp(−iωT/2) = −1
        assert!((overlap.arg().abs() - PI).abs() < 1e-3);
    }

    #[test]
    fn second_order_convergence() {
        let h = QuadraticHamiltonian::new(0.5, 0.5, 0.0, 0.0, 0.3, 1.0).unwrap();
        let psi = packet(Representation::Position, (0.5, 0.5));
        let t = 1.0;
        // the reference is four times finer than the fine run
        let reference = evolve(&psi, &h, t, Some(3200)).unwrap();
        let coarse = evolve(&psi, &h, t, Some(400)).unwrap();
        let fine = evolve(&psi, &h, t, Some(800)).unwrap();
        let ratio = coarse.l2_distance(&reference).unwrap() / fine.l2_distance(&reference).unwrap();
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn representations_commute_with_evolution() {
        let h = QuadraticHamiltonian::new(0.6, 0.8, 0.2, 0.1, -0.2, 1.0).unwrap();
        let psi = packet(Representation::Position, (0.4, -0.3));
        let a = evolve(&psi, &h, 0.8, Some(8192)).unwrap().to_momentum().unwrap();
        let b = evolve(&psi.to_momentum().unwrap(), &h, 0.8, Some(8192)).unwrap();
        let d = a.l2_distance(&b).unwrap();
        assert!(d < 1e-8, "{d}");
    }

    #[test]
    fn momentum_rep_without_potential_uses_the_conjugate_grid() {
        let h = QuadraticHamiltonian::new(0.5, 0.0, 0.2, 0.0, 0.0, 1.0).unwrap();
        let phi = packet(Representation::Momentum, (0.0, 0.5));
        let out = evolve(&phi, &h, 0.5, None).unwrap();
        assert_eq!(out.rep, Representation::Momentum);
        let direct = evolve(&phi.to_position().unwrap(), &h, 0.5, None)
            .unwrap()
            .to_momentum()
            .unwrap();
        assert!(out.l2_distance(&direct).unwrap() < 1e-10);
    }

    #[test]
    fn step_guard() {
        let h = QuadraticHamiltonian::oscillator(1.0, 10.0, 1.0).unwrap();
        let psi = packet(Representation::Position, (0.0, 0.0));
        match evolve(&psi, &h, 1.0, Some(10)) {
            Err(Error::StepCount { steps, minimum }) => assert!(steps == 10 && minimum > 10),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            evolve(&psi, &oscillator(), 1.0, Some(0)),
            Err(Error::StepCount { steps: 0, .. })
        ));
    }

    #[test]
    fn kernel_matches_split_step() {
        let h = oscillator();
        let k = build_kernel(&h, 0.7, Representation::Momentum).unwrap();
        let phi = packet(Representation::Momentum, (0.5, -0.5));
        let by_kernel = apply_kernel(&k, &phi).unwrap();
        let by_steps = evolve(&phi, &h, 0.7, Some(2048)).unwrap();
        assert!(by_kernel.l2_distance(&by_steps).unwrap() < 1e-5);
    }

    #[test]
    fn catalog_kernel_can_be_applied() {
        let k = ho_momentum_kernel(1.0, 1.0, 1.0).unwrap().at(0.7);
        let phi = packet(Representation::Momentum, (0.0, 0.0));
        let out = apply_kernel(&k, &phi).unwrap();
        assert!((out.norm_squared() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn delta_kernel_multiplies() {
        let h = QuadraticHamiltonian::free(1.0, 1.0).unwrap();
        let k = build_kernel(&h, 1.0, Representation::Momentum).unwrap();
        let phi = packet(Representation::Momentum, (0.0, 1.0));
        let out = apply_kernel(&k, &phi).unwrap();
        assert_eq!(out.norm_squared(), phi.norm_squared());
    }

    #[test]
    fn representation_mismatch() {
        let k = build_kernel(&oscillator(), 0.5, Representation::Momentum).unwrap();
        let psi = packet(Representation::Position, (0.0, 0.0));
        assert!(matches!(
            apply_kernel(&k, &psi),
            Err(Error::RepresentationMismatch { .. })
        ));
    }

    #[test]
    fn short_time_kernel_is_under_resolved_on_the_grid() {
        let k = build_kernel(&oscillator(), 1e-3, Representation::Momentum).unwrap();
        let phi = packet(Representation::Momentum, (0.0, 0.0));
        assert!(matches!(apply_kernel(&k, &phi), Err(Error::UnderResolved { .. })));
    }
}
