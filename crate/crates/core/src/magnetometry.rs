//! Ensemble magnetometer sensitivity model and scheme comparison.

use crate::constants;
use crate::error::{Error, Result};
use crate::hamiltonians::{self, TatForm, Variant};
use crate::optimize;
use crate::registry::Registry;
use crate::spin_ops::{collective_op, evolve, Basis, SpinAxis, StateVector};
use crate::squeezing;
use rayon::prelude::*;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    EchoOnly,
    Cpmg,
    Mrev8,
    Squeeze1A,
    Squeeze2A,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [Scheme::EchoOnly, Scheme::Cpmg, Scheme::Mrev8, Scheme::Squeeze1A, Scheme::Squeeze2A];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::EchoOnly => "echo",
            Scheme::Cpmg => "cpmg",
            Scheme::Mrev8 => "mrev8",
            Scheme::Squeeze1A => "squeeze-1a",
            Scheme::Squeeze2A => "squeeze-2a",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::param(format!("unknown scheme '{s}' (echo, cpmg, mrev8, squeeze-1a, squeeze-2a)")))
    }

    /// Whether the scheme runs the multiple-pulse decoupling sequence.
    pub fn uses_pulse_sequence(self) -> bool {
        matches!(self, Scheme::Mrev8 | Scheme::Squeeze1A | Scheme::Squeeze2A)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Squeeze, then sense: T = t + t_sqz.
    Sequential,
    /// Squeeze while sensing: T = max(t, t_sqz).
    Concurrent,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(Mode::Sequential),
            "concurrent" => Ok(Mode::Concurrent),
            _ => Err(Error::param(format!("unknown mode '{s}' (sequential, concurrent)"))),
        }
    }
}

/// Residual high-order coupling of the decoupled sequence: α̃ ≈ 10·J0⁶τ⁴.
pub fn alpha_tilde_scaling(tau: f64) -> f64 {
    10.0 * constants::j0().powi(6) * tau.powi(4)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityConfig {
    /// Sensing volume (nm³).
    pub volume: f64,
    /// NV density (nm⁻³).
    pub density: f64,
    /// Nitrogen-to-NV conversion efficiency.
    pub conversion: f64,
    pub contrast: f64,
    /// Stretched-exponential coherence time (μs).
    pub t2: f64,
    /// Pulse delay τ (μs).
    pub tau: f64,
    /// Sixth-moment coefficient α̃ (rad²·μs⁻⁴·nm¹⁸ scale).
    pub alpha_tilde: f64,
    /// Collective gap E_g = gap_factor·J0·n_s.
    pub gap_factor: f64,
    pub scheme: Scheme,
    pub mode: Mode,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        SensitivityConfig {
            volume: 300.0 * 300.0 * 10.0,
            density: 1e-3,
            conversion: 0.23,
            contrast: 0.3,
            t2: 300.0,
            tau: 1.5,
            alpha_tilde: alpha_tilde_scaling(1.5),
            gap_factor: 0.961,
            scheme: Scheme::EchoOnly,
            mode: Mode::Sequential,
        }
    }
}

impl SensitivityConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("volume", self.volume),
            ("density", self.density),
            ("contrast", self.contrast),
            ("t2", self.t2),
            ("tau", self.tau),
            ("gap_factor", self.gap_factor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.conversion > 0.0 && self.conversion <= 1.0) {
            return Err(Error::param(format!("conversion must lie in (0, 1], got {}", self.conversion)));
        }
        if self.contrast > 1.0 {
            return Err(Error::param("contrast must not exceed 1"));
        }
        if !(self.alpha_tilde >= 0.0) {
            return Err(Error::param("alpha_tilde must be non-negative"));
        }
        if self.spin_count() < 1.0 {
            return Err(Error::param(format!("n_s·V = {} is below one spin", self.spin_count())));
        }
        Ok(())
    }

    pub fn spin_count(&self) -> f64 {
        self.density * self.volume
    }

    /// Shortest interrogation allowed by the pulse timing (μs).
    pub fn time_floor(&self) -> f64 {
        if self.scheme.uses_pulse_sequence() {
            48.0 * self.tau
        } else {
            2.0 * self.tau
        }
    }

    pub fn gap(&self) -> f64 {
        self.gap_factor * constants::j0() * self.density
    }
}

/// Paramagnetic-bath dephasing time 4f/((1−f)J0 n_s); `None` at f = 1.
pub fn t_epr(density: f64, f: f64) -> Result<Option<f64>> {
    if !(f > 0.0 && f <= 1.0) || !(density > 0.0) {
        return Err(Error::param("t_epr needs f in (0, 1] and positive density"));
    }
    if f == 1.0 {
        return Ok(None);
    }
    let n_epr = density * (1.0 - f) / f;
    Ok(Some(4.0 / (constants::j0() * n_epr)))
}

/// Single-shot-averaged field uncertainty (T) for N spins, phase time t,
/// total time T and squeezing ξ.
pub fn sensitivity_ideal(n: f64, t: f64, total: f64, xi: f64) -> Result<f64> {
    if !(n > 0.0 && t > 0.0 && total > 0.0 && xi > 0.0) {
        return Err(Error::param("sensitivity_ideal needs positive arguments"));
    }
    Ok(constants::field_per_rate() * xi / (n * t * total).sqrt())
}

/// Total experiment time for sensing time t and squeezing time t_sqz.
pub fn total_time(mode: Mode, t: f64, t_sqz: f64) -> f64 {
    match mode {
        Mode::Sequential => t + t_sqz,
        Mode::Concurrent => t.max(t_sqz),
    }
}

/// ln η with η in T·√μs.
fn ln_eta(cfg: &SensitivityConfig, t: f64, t_sqz: f64, xi: f64, inv_t_epr: f64) -> f64 {
    let total = total_time(cfg.mode, t, t_sqz);
    let mut v = (constants::field_per_rate() * 3.0 * std::f64::consts::PI / cfg.contrast).ln()
        - 0.5 * (2.0 * cfg.spin_count() * t).ln()
        + (total / cfg.t2).powi(3)
        + total * inv_t_epr
        + xi.ln();
    if cfg.scheme.uses_pulse_sequence() {
        v += cfg.alpha_tilde * cfg.density.powi(6) * total * total;
    }
    v
}

fn inv_t_epr(cfg: &SensitivityConfig) -> Result<f64> {
    Ok(t_epr(cfg.density, cfg.conversion)?.map_or(0.0, |t| 1.0 / t))
}

/// Sensitivity per root averaging time, in T/√Hz.
pub fn sensitivity_eta(cfg: &SensitivityConfig, t: f64, t_sqz: f64, xi: f64) -> Result<f64> {
    cfg.validate()?;
    if !(t > 0.0) || !(t_sqz >= 0.0) || !(xi > 0.0) {
        return Err(Error::param("sensitivity_eta needs t > 0, t_sqz ≥ 0, xi > 0"));
    }
    // √μs → √s
    Ok(ln_eta(cfg, t, t_sqz, xi, inv_t_epr(cfg)?).exp() * 1e-3)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeOptimum {
    /// Sensing time t (μs).
    pub t_opt: f64,
    /// Total time T (μs).
    pub total: f64,
    /// η in T/√Hz.
    pub eta: f64,
}

/// Minimize η over the sensing time on [time floor, 10·T2].
pub fn optimize_time(cfg: &SensitivityConfig, t_sqz: f64, xi: f64) -> Result<TimeOptimum> {
    cfg.validate()?;
    let floor = cfg.time_floor();
    if cfg.t2 < floor {
        return Err(Error::param(format!("T2 = {} μs is shorter than the pulse-sequence floor {floor} μs", cfg.t2)));
    }
    let inv = inv_t_epr(cfg)?;
    let (a, b) = (floor.ln(), (10.0 * cfg.t2).ln());
    let (s, v) = optimize::golden_section(|s| ln_eta(cfg, s.exp(), t_sqz, xi, inv), a, b, 1e-9);
    // golden search never evaluates the floor itself
    let (s, v) = if ln_eta(cfg, floor, t_sqz, xi, inv) <= v { (a, ln_eta(cfg, floor, t_sqz, xi, inv)) } else { (s, v) };
    let t = s.exp();
    Ok(TimeOptimum { t_opt: t, total: total_time(cfg.mode, t, t_sqz), eta: v.exp() * 1e-3 })
}

/// One evaluated (scheme, density) point.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemePoint {
    pub scheme: Scheme,
    pub density: f64,
    pub n: f64,
    pub t_sqz: f64,
    pub t_opt: f64,
    pub total: f64,
    pub xi: f64,
    pub eta: f64,
    pub xi_source: &'static str,
}

pub trait SensingScheme: Send + Sync {
    fn scheme(&self) -> Scheme;
    /// Optimized sensitivity at the configuration's density.
    fn evaluate(&self, cfg: &SensitivityConfig) -> Result<SchemePoint>;
}

fn unsqueezed(cfg: &SensitivityConfig) -> Result<SchemePoint> {
    let o = optimize_time(cfg, 0.0, 1.0)?;
    Ok(SchemePoint {
        scheme: cfg.scheme,
        density: cfg.density,
        n: cfg.spin_count(),
        t_sqz: 0.0,
        t_opt: o.t_opt,
        total: o.total,
        xi: 1.0,
        eta: o.eta,
        xi_source: "none",
    })
}

struct Unsqueezed(Scheme);

impl SensingScheme for Unsqueezed {
    fn scheme(&self) -> Scheme {
        self.0
    }
    fn evaluate(&self, cfg: &SensitivityConfig) -> Result<SchemePoint> {
        unsqueezed(&SensitivityConfig { scheme: self.0, ..cfg.clone() })
    }
}

/// Closed-form squeezing ξ(t_sqz) with the squeezing strength tied to the
/// gap, ε chosen so the perturbation stays at the gap scale.
struct Squeezed(Variant);

impl Squeezed {
    /// (ξ(t_sqz), largest useful t_sqz).
    fn model(&self, cfg: &SensitivityConfig) -> Result<(Box<dyn Fn(f64) -> f64 + Sync>, f64)> {
        let n = cfg.spin_count();
        let eg = cfg.gap();
        let epr_cap = t_epr(cfg.density, cfg.conversion)?.map_or(f64::INFINITY, |t| t / 2.0);
        match self.0 {
            Variant::TwoAxis => {
                let d = 2.0 * eg / (3.0 * (n - 1.0).max(1.0));
                let floor = (1.0 + 2.0 * 3f64.sqrt()) / (2.0 * n);
                let t_max = if n > 1.0 { (2.0 * n / 3f64.sqrt()).ln() / (d * n) } else { 0.0 };
                let xi = move |ts: f64| (-n * d * ts).exp().max(floor).min(1.0).sqrt();
                Ok((Box::new(xi), t_max.min(epr_cap)))
            }
            Variant::OneAxis => {
                let ni = n.round() as usize;
                if ni < 3 {
                    return Ok((Box::new(|_| 1.0), 0.0));
                }
                let rate = eg / (3.0 * (n - 1.0));
                let (chi_opt, _) = squeezing::oat_optimum(ni)?;
                let xi = move |ts: f64| squeezing::xi2_ideal(ni, rate * ts).map_or(1.0, |v| v.min(1.0).sqrt());
                Ok((Box::new(xi), (chi_opt / rate).min(epr_cap)))
            }
        }
    }
}

impl SensingScheme for Squeezed {
    fn scheme(&self) -> Scheme {
        match self.0 {
            Variant::OneAxis => Scheme::Squeeze1A,
            Variant::TwoAxis => Scheme::Squeeze2A,
        }
    }
    fn evaluate(&self, cfg: &SensitivityConfig) -> Result<SchemePoint> {
        let cfg = SensitivityConfig { scheme: self.scheme(), ..cfg.clone() };
        // t_sqz = 0 is the unsqueezed sequence, always available.
        let base = unsqueezed(&cfg)?;
        let (xi, t_max) = self.model(&cfg)?;
        if !(t_max > 0.0) {
            return Ok(base);
        }
        let eta_at = |ts: f64| optimize_time(&cfg, ts, xi(ts)).map_or(f64::INFINITY, |o| o.eta.ln());
        let (ts, v) = optimize::scan_then_refine(eta_at, 0.0, t_max, 24, 1e-7);
        if v.exp() >= base.eta {
            return Ok(base);
        }
        let x = xi(ts);
        let o = optimize_time(&cfg, ts, x)?;
        Ok(SchemePoint { t_sqz: ts, t_opt: o.t_opt, total: o.total, xi: x, eta: o.eta, xi_source: "closed-form", ..base })
    }
}

pub fn schemes() -> Registry<dyn SensingScheme> {
    let entries: [Arc<dyn SensingScheme>; 5] = [
        Arc::new(Unsqueezed(Scheme::EchoOnly)),
        Arc::new(Unsqueezed(Scheme::Cpmg)),
        Arc::new(Unsqueezed(Scheme::Mrev8)),
        Arc::new(Squeezed(Variant::OneAxis)),
        Arc::new(Squeezed(Variant::TwoAxis)),
    ];
    let mut reg = Registry::new("sensing scheme");
    for s in entries {
        reg.register(s.scheme().name(), s);
    }
    reg
}

/// Optimized point for the configuration's own scheme.
pub fn evaluate(cfg: &SensitivityConfig) -> Result<SchemePoint> {
    schemes().get(cfg.scheme.name())?.evaluate(cfg)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityCurve {
    pub scheme: Scheme,
    pub points: Vec<SchemePoint>,
}

/// Log-spaced densities from `lo` to `hi` (nm⁻³) inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 || lo == hi {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp()).collect()
}

/// Evaluate every scheme at every density. Work runs in parallel; output
/// order follows `schemes` then `densities`.
pub fn density_sweep(template: &SensitivityConfig, densities: &[f64], schemes_wanted: &[Scheme]) -> Result<Vec<SensitivityCurve>> {
    let reg = schemes();
    let impls: Vec<Arc<dyn SensingScheme>> = schemes_wanted.iter().map(|s| reg.get(s.name())).collect::<Result<_>>()?;
    let jobs: Vec<(usize, f64)> =
        (0..impls.len()).flat_map(|i| densities.iter().map(move |&d| (i, d))).collect();
    let points: Vec<SchemePoint> = jobs
        .par_iter()
        .map(|&(i, d)| impls[i].evaluate(&SensitivityConfig { density: d, scheme: schemes_wanted[i], ..template.clone() }))
        .collect::<Result<_>>()?;
    let mut it = points.into_iter();
    Ok(schemes_wanted
        .iter()
        .map(|&s| SensitivityCurve { scheme: s, points: it.by_ref().take(densities.len()).collect() })
        .collect())
}

/// Baseline curve of repeated echoes.
pub fn cpmg_reference(template: &SensitivityConfig, densities: &[f64]) -> Result<SensitivityCurve> {
    Ok(density_sweep(template, densities, &[Scheme::Cpmg])?.remove(0))
}

/// Relative tolerance under which two sensitivities count as equal.
pub const TIE_TOLERANCE: f64 = 1e-6;

/// Whether `scheme` beats `reference` at any density of the sweep.
pub fn has_advantage(template: &SensitivityConfig, densities: &[f64], scheme: Scheme, reference: Scheme) -> Result<bool> {
    let curves = density_sweep(template, densities, &[scheme, reference])?;
    Ok(curves[0].points.iter().zip(&curves[1].points).any(|(a, b)| a.eta < b.eta * (1.0 - TIE_TOLERANCE)))
}

/// Smallest conversion efficiency at which `scheme` beats `reference`
/// somewhere in the sweep, by bisection to `tol`. `None` if even f = 1 fails.
pub fn crossover_threshold(
    template: &SensitivityConfig,
    densities: &[f64],
    scheme: Scheme,
    reference: Scheme,
    tol: f64,
) -> Result<Option<f64>> {
    let adv = |f: f64| has_advantage(&SensitivityConfig { conversion: f, ..template.clone() }, densities, scheme, reference);
    if !adv(1.0)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (1e-3, 1.0);
    if adv(lo)? {
        return Ok(Some(lo));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if adv(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcurrentError {
    /// Scaling estimate: φ·d·t·|sin ν| (1a) or φ·d·N·ln N/N (2a).
    pub estimate: f64,
    /// Trace distance between sequential and combined-generator states.
    pub simulated: f64,
}

/// Error of treating squeezing and field encoding as one combined generator.
/// Ideal twisting with strength d at its optimal time; the field generator
/// is φ·J_z(ν) (1a) or φ·(J_y − J_x)/√2 (2a). `nu` overrides the 1a angle.
pub fn concurrent_error(n: usize, d: f64, phi: f64, variant: Variant, nu: Option<f64>) -> Result<ConcurrentError> {
    if n < 3 || !(d > 0.0) {
        return Err(Error::param("concurrent_error needs n ≥ 3 and d > 0"));
    }
    let basis = Basis::Dicke(n);
    let nf = n as f64;
    let (h, t, axis, psi0, estimate) = match variant {
        Variant::OneAxis => {
            let (chi, _) = squeezing::oat_optimum(n)?;
            let nu = match nu {
                Some(v) => v,
                None => squeezing::nu_optimal(n, chi)?.0,
            };
            let axis = SpinAxis::new(0.0, nu.sin(), nu.cos())?;
            let t = chi / d;
            (hamiltonians::ideal_oat(d, n)?, t, axis, StateVector::coherent(SpinAxis::X, basis)?, phi * d * t * nu.sin().abs())
        }
        Variant::TwoAxis => {
            let t = (2.0 * nf / 3f64.sqrt()).ln() / (d * nf);
            let axis = SpinAxis::new(-1.0, 1.0, 0.0)?;
            (
                hamiltonians::ideal_tat(d, n, TatForm::Quadrature)?,
                t,
                axis,
                StateVector::coherent(SpinAxis::Z, basis)?,
                phi * d * nf.ln(),
            )
        }
    };
    let field = collective_op(axis, basis)?;
    let sequential = evolve(&evolve(&psi0, &h, t)?, &field, phi)?;
    // e^{−i(Ht + φJ)} as evolution for unit time under Ht + φJ
    let combined_h = h.scaled(t).add_scaled(&field, phi)?;
    let combined = evolve(&psi0, &combined_h, 1.0)?;
    let overlap = sequential.inner(&combined)?.norm();
    Ok(ConcurrentError { estimate, simulated: (1.0 - overlap * overlap).max(0.0).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bare() -> SensitivityConfig {
        SensitivityConfig { conversion: 1.0, alpha_tilde: 0.0, ..Default::default() }
    }

    #[test]
    fn t_epr_values() {
        assert_eq!(t_epr(1e-3, 1.0).unwrap(), None);
        let half = t_epr(1e-3, 0.5).unwrap().unwrap();
        assert!((half - 4.0 / (constants::j0() * 1e-3)).abs() < 1e-12 * half);
        let j0 = 1e-7 / (1.054_571_817e-34) * (2.0023 * 9.274_010_078_3e-24f64).powi(2) * 1e21;
        let expect = 4.0 * 0.23 / (0.77 * j0 * 1e-3);
        assert!((t_epr(1e-3, 0.23).unwrap().unwrap() - expect).abs() < 1e-6 * expect);
        assert!(t_epr(1e-3, 0.3).unwrap() < t_epr(1e-3, 0.6).unwrap());
        assert!(t_epr(1e-3, 0.0).is_err());
    }

    #[test]
    fn ideal_sensitivity() {
        let a = sensitivity_ideal(100.0, 100.0, 100.0, 1.0).unwrap();
        let expect = 1.054_571_817e-34 / (2.0023 * 9.274_010_078_3e-24) * 1e6 * 1e-3;
        assert!((a - expect).abs() < 1e-12 * expect);
        let b = sensitivity_ideal(400.0, 100.0, 100.0, 1.0).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        let c = sensitivity_ideal(100.0, 100.0, 100.0, 0.3).unwrap();
        assert!((c / a - 0.3).abs() < 1e-12);
    }

    #[test]
    fn eta_scalings() {
        let cfg = bare();
        let e = sensitivity_eta(&cfg, 50.0, 0.0, 1.0).unwrap();
        let doubled = sensitivity_eta(&SensitivityConfig { contrast: 0.6, ..cfg.clone() }, 50.0, 0.0, 1.0).unwrap();
        assert!((e / doubled - 2.0).abs() < 1e-12);
        let big = sensitivity_eta(&SensitivityConfig { volume: 4.0 * cfg.volume, ..cfg.clone() }, 50.0, 0.0, 1.0).unwrap();
        assert!((e / big - 2.0).abs() < 1e-12);
        // echo limit: prefactor 3π/(C√(2N t)) times the T2 decay
        let expect = constants::field_per_rate() * 3.0 * std::f64::consts::PI / (0.3 * (2.0 * cfg.spin_count() * 50.0).sqrt())
            * (50.0f64 / 300.0).powi(3).exp()
            * 1e-3;
        assert!((e - expect).abs() < 1e-12 * expect);
        assert!(sensitivity_eta(&cfg, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn concurrent_beats_sequential() {
        let cfg = SensitivityConfig { scheme: Scheme::Squeeze2A, ..Default::default() };
        let t = optimize_time(&cfg, 0.0, 1.0).unwrap().t_opt;
        let seq = sensitivity_eta(&cfg, t, t, 0.5).unwrap();
        let con = sensitivity_eta(&SensitivityConfig { mode: Mode::Concurrent, ..cfg }, t, t, 0.5).unwrap();
        assert!(con < seq);
    }

    #[test]
    fn optimum_closed_form() {
        let o = optimize_time(&bare(), 0.0, 1.0).unwrap();
        let expect = 300.0 * (1.0f64 / 6.0).cbrt();
        assert!((o.t_opt - expect).abs() < 1e-3 * expect, "{}", o.t_opt);
    }

    #[test]
    fn epr_shortens_optimum() {
        let mut last = optimize_time(&bare(), 0.0, 1.0).unwrap().t_opt;
        for f in [0.9, 0.6, 0.3] {
            let t = optimize_time(&SensitivityConfig { conversion: f, ..bare() }, 0.0, 1.0).unwrap().t_opt;
            assert!(t < last);
            last = t;
        }
    }

    #[test]
    fn floor_above_t2_errors() {
        let cfg = SensitivityConfig { t2: 10.0, scheme: Scheme::Mrev8, ..bare() };
        assert!(optimize_time(&cfg, 0.0, 1.0).is_err());
    }

    #[test]
    fn squeeze_without_squeezing_is_mrev() {
        let cfg = SensitivityConfig { scheme: Scheme::Mrev8, ..Default::default() };
        let m = optimize_time(&cfg, 0.0, 1.0).unwrap().eta;
        let s = optimize_time(&SensitivityConfig { scheme: Scheme::Squeeze2A, ..cfg }, 0.0, 1.0).unwrap().eta;
        assert_eq!(m, s);
    }

    #[test]
    fn single_point_sweep() {
        let curves = density_sweep(&SensitivityConfig::default(), &log_grid(1e-3, 1e-3, 5), &[Scheme::EchoOnly]).unwrap();
        assert_eq!(curves[0].points.len(), 1);
    }

    #[test]
    fn concurrent_error_limits() {
        let z = concurrent_error(6, 1.0, 0.0, Variant::OneAxis, None).unwrap();
        assert!(z.simulated < 1e-7);
        let c = concurrent_error(6, 1.0, 0.3, Variant::OneAxis, Some(0.0)).unwrap();
        assert!(c.simulated < 1e-7 && c.estimate == 0.0);
        let e = concurrent_error(6, 1.0, 0.3, Variant::TwoAxis, None).unwrap();
        assert!(e.simulated > 0.0);
    }
}
