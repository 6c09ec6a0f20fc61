//! Squeezing parameters, the closed-form one-axis-twisting solution, noisy
//! squeezing formulas, scaling laws and GHZ fidelity.

use crate::error::{Error, Result};
use crate::optimize;
use crate::spin_ops::{collective_op, Basis, CollectiveMoments, SpinAxis, StateVector};
use crate::linalg::{CVec, C64};
use std::f64::consts::PI;

/// Closed-form collective observables after e^{−iχJ_z²}|+x⟩^⊗N.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OatObservables {
    pub n: usize,
    pub chi: f64,
    pub jx: f64,
    pub var_x: f64,
    pub p: f64,
    pub q: f64,
}

impl OatObservables {
    /// ΔJ_z(ν)², with J_z(ν) = cos ν J_z + sin ν J_y.
    pub fn var_z(&self, nu: f64) -> f64 {
        let nf = self.n as f64;
        let r = self.p.hypot(self.q);
        nf / 4.0 * (1.0 + (nf - 1.0) / 4.0 * (self.p - r * (2.0 * nu + self.q.atan2(self.p)).cos()))
    }
}

pub fn oat_observables(n: usize, chi: f64) -> Result<OatObservables> {
    if n < 1 {
        return Err(Error::param("spin count must be at least 1"));
    }
    let nf = n as f64;
    let e = n as i32 - 2;
    let (p, q) = if n >= 2 {
        (1.0 - (2.0 * chi).cos().powi(e), 4.0 * chi.sin() * chi.cos().powi(e))
    } else {
        (0.0, 0.0)
    };
    let jx = nf / 2.0 * chi.cos().powi(n as i32 - 1);
    let var_x = nf / 4.0 * (nf - (nf - 1.0) * p / 2.0) - jx * jx;
    Ok(OatObservables { n, chi, jx, var_x, p, q })
}

/// Optimal and anti-optimal readout angles ν = −½ atan2(Q, P), ν + π/2.
pub fn nu_optimal(n: usize, chi: f64) -> Result<(f64, f64)> {
    let o = oat_observables(n, chi)?;
    let nu = if o.p == 0.0 && o.q == 0.0 { 0.0 } else { -0.5 * o.q.atan2(o.p) };
    Ok((nu, nu + PI / 2.0))
}

pub fn xi2_ideal(n: usize, chi: f64) -> Result<f64> {
    let o = oat_observables(n, chi)?;
    let nf = n as f64;
    Ok((1.0 + (nf - 1.0) / 4.0 * (o.p - o.p.hypot(o.q))) / chi.cos().powi(2 * n as i32 - 2))
}

/// Noise-free quantities shared by the noisy formulas: (P, R, cos^{2N−2}χ).
fn noisy_parts(n: usize, chi: f64) -> Result<(f64, f64, f64)> {
    let o = oat_observables(n, chi)?;
    let r = if o.p == 0.0 { 1.0 } else { o.p / o.p.hypot(o.q) };
    Ok((o.p, r, chi.cos().powi(2 * n as i32 - 2)))
}

/// ξ² under uncorrected single-spin dephasing, with Γt dimensionless.
pub fn xi2_noisy_unprotected(n: usize, chi: f64, gamma_t: f64) -> Result<f64> {
    let (p, r, c) = noisy_parts(n, chi)?;
    if p == 0.0 {
        return Ok(1.0 / c);
    }
    let nf = n as f64;
    let e = (-nf * gamma_t).exp();
    Ok((1.0 + (nf - 1.0) / 4.0 * e * ((1.0 - e) + 1.0 / r) * p * (r - 1.0)) / c)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Clamped {
    pub value: f64,
    /// The printed expression went negative and was clamped to zero.
    pub clamped: bool,
}

/// ξ² for dephasing reduced to its collective component by the gap.
pub fn xi2_noisy_protected(n: usize, chi: f64, gamma_t: f64) -> Result<Clamped> {
    let (p, r, c) = noisy_parts(n, chi)?;
    if p == 0.0 {
        return Ok(Clamped { value: 1.0 / c, clamped: false });
    }
    let nf = n as f64;
    let e = (-gamma_t).exp();
    let bracket = (1.0 - e) - 2.0 * gamma_t.sinh() / p + 1.0 / r;
    let v = (1.0 + (nf - 1.0) / 4.0 * e * bracket * p * (r - 1.0)) / c;
    Ok(if v < 0.0 { Clamped { value: 0.0, clamped: true } } else { Clamped { value: v, clamped: false } })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezingReport {
    pub xi2: f64,
    /// Readout angle of minimal variance in the plane perpendicular to the
    /// reference axis.
    pub nu_opt: f64,
    /// Mean spin along the reference axis.
    pub jx_mean: f64,
    pub var_min: f64,
    pub var_max: f64,
}

/// Min/max variance in the plane spanned by (e1, e2): returns
/// (var_min, var_max, ν_min) with the direction cos ν·e1 + sin ν·e2.
fn plane_extremes(m: &CollectiveMoments, e1: [f64; 3], e2: [f64; 3]) -> (f64, f64, f64) {
    let (v11, v22, v12) = (m.covariance(e1, e1), m.covariance(e2, e2), m.covariance(e1, e2));
    let mean = 0.5 * (v11 + v22);
    let amp = (0.5 * (v11 - v22)).hypot(v12);
    let phi = v12.atan2(0.5 * (v11 - v22));
    let mut nu = 0.5 * (phi + PI);
    if nu > PI / 2.0 {
        nu -= PI;
    }
    ((mean - amp).max(0.0), mean + amp, nu)
}

/// ξ² = N·min_ν Var(J_z(ν))/⟨J_x⟩² for a phase reference along x, with
/// J_z(ν) = e^{iνJ_x} J_z e^{−iνJ_x}. The minimum over ν is taken in
/// closed form from the 2×2 covariance of (J_z, J_y).
pub fn xi2_metrological(state: &StateVector) -> Result<SqueezingReport> {
    let m = CollectiveMoments::of(state);
    let jx = m.mean[0];
    let n = state.basis().n() as f64;
    let (var_min, var_max, nu) = plane_extremes(&m, [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]);
    if jx.abs() < 1e-12 * n {
        return Ok(SqueezingReport { xi2: f64::INFINITY, nu_opt: nu, jx_mean: jx, var_min, var_max });
    }
    Ok(SqueezingReport { xi2: n * var_min / (jx * jx), nu_opt: nu, jx_mean: jx, var_min, var_max })
}

/// Wineland ξ² about the mean-spin direction: N·min_⊥Var/|⟨J⟩|².
pub fn xi2_wineland(state: &StateVector) -> Result<SqueezingReport> {
    Ok(xi2_wineland_moments(&CollectiveMoments::of(state), state.basis().n()))
}

/// Wineland ξ² from (possibly ensemble-averaged) collective moments.
pub fn xi2_wineland_moments(m: &CollectiveMoments, n: usize) -> SqueezingReport {
    let m = *m;
    let n = n as f64;
    let len = (m.mean.iter().map(|x| x * x).sum::<f64>()).sqrt();
    if len < 1e-12 * n {
        return SqueezingReport { xi2: f64::INFINITY, nu_opt: 0.0, jx_mean: 0.0, var_min: 0.0, var_max: 0.0 };
    }
    let u = [m.mean[0] / len, m.mean[1] / len, m.mean[2] / len];
    let (e1, e2) = perpendicular_pair(u);
    let (var_min, var_max, nu) = plane_extremes(&m, e1, e2);
    SqueezingReport { xi2: n * var_min / (len * len), nu_opt: nu, jx_mean: len, var_min, var_max }
}

/// Orthonormal pair spanning the plane perpendicular to `u`.
pub fn perpendicular_pair(u: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let helper = if u[2].abs() < 0.9 { [0.0, 0.0, 1.0] } else { [0.0, 1.0, 0.0] };
    let cross = |a: [f64; 3], b: [f64; 3]| [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let mut e1 = cross(helper, u);
    let l = (e1.iter().map(|x| x * x).sum::<f64>()).sqrt();
    e1.iter_mut().for_each(|x| *x /= l);
    let e2 = cross(u, e1);
    (e1, e2)
}

/// ξ_h = ΔJ_i / √(⟨J_j⟩/2).
pub fn xi_heuristic(state: &StateVector, i_axis: SpinAxis, j_axis: SpinAxis) -> Result<f64> {
    let m = CollectiveMoments::of(state);
    let mean = m.mean_along(j_axis.components());
    if mean <= 0.0 {
        return Err(Error::param("heuristic squeezing needs a positive mean spin along the reference axis"));
    }
    let var = m.covariance(i_axis.components(), i_axis.components()).max(0.0);
    Ok(var.sqrt() / (mean / 2.0).sqrt())
}

/// Overlap with the best cat state along `axis`:
/// max_φ |⟨(|N/2⟩ + e^{iφ}|−N/2⟩)/√2 | ψ⟩|² = (|a| + |b|)²/2.
/// The relative phase produced by a given protocol depends on N and on
/// basis conventions, so it is optimized rather than fixed.
pub fn ghz_fidelity(state: &StateVector, axis: SpinAxis) -> Result<f64> {
    let a = StateVector::coherent(axis, state.basis())?.inner(state)?.norm();
    let b = StateVector::coherent(axis.neg(), state.basis())?.inner(state)?.norm();
    Ok((a + b).powi(2) / 2.0 / state.amps().norm_squared())
}

pub fn ghz_state(basis: Basis, axis: SpinAxis) -> Result<StateVector> {
    let n = basis.n();
    let up = StateVector::coherent(axis, basis)?;
    let down = StateVector::coherent(axis.neg(), basis)?;
    let phase = C64::new(0.0, -1.0).powu(n as u32 + 1);
    let amps: CVec = (up.amps() + down.amps() * phase).unscale(2f64.sqrt());
    Ok(StateVector::new(amps, basis)?.normalized())
}

/// Closed-form optimum of the ideal one-axis twisting: (χ_opt, ξ²_min).
pub fn oat_optimum(n: usize) -> Result<(f64, f64)> {
    if n < 3 {
        return Err(Error::param("one-axis optimum needs at least three spins"));
    }
    let guess = 3f64.powf(1.0 / 6.0) / (n as f64).powf(2.0 / 3.0);
    let hi = (4.0 * guess).min(PI / 4.0);
    let (chi, v) = optimize::scan_then_refine(|c| xi2_ideal(n, c).unwrap_or(f64::INFINITY), 1e-3 * guess, hi, 400, 1e-12);
    Ok((chi, v))
}

/// Optimum of e^{−iχ(J_x² − J_y²)}|+z⟩ by exact Dicke evolution:
/// (χ_opt, ξ²_min) with the Wineland ξ².
pub fn tat_optimum(n: usize) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::param("two-axis optimum needs at least two spins"));
    }
    let basis = Basis::Dicke(n);
    let jx = collective_op(SpinAxis::X, basis)?;
    let jy = collective_op(SpinAxis::Y, basis)?;
    let g = jx.matmul(&jx)?.add_scaled(&jy.matmul(&jy)?, -1.0)?;
    let eig = crate::linalg::Eigensystem::new(g.data());
    let psi = StateVector::coherent(SpinAxis::Z, basis)?;
    let xi2 = |chi: f64| {
        StateVector::new(eig.apply(psi.amps(), chi), basis).map_or(f64::INFINITY, |s| xi2_wineland(&s).map_or(f64::INFINITY, |r| r.xi2))
    };
    let hi = 4.0 * (2.0 * n as f64).ln() / n as f64;
    Ok(optimize::scan_then_refine(xi2, 1e-4, hi, 400, 1e-10))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScalingRegime {
    /// d·J_z²
    OatIdeal { d: f64 },
    /// d(J_x² − J_y²)/2
    TatIdeal { d: f64 },
    /// One-axis twisting from the projected Ising perturbation of strength εD.
    OatProjected { eps_d: f64 },
    /// Two-axis twisting from the projected double-quantum perturbation.
    TatProjected { eps_d: f64 },
    /// One-axis twisting with unprotected dephasing rate Γ.
    NoisyUnprotected { eps_d: f64, gamma: f64 },
    /// One-axis twisting with gap-protected dephasing.
    NoisyProtected { d: f64, gamma: f64 },
    /// Time to reach a GHZ state through the projected Ising term.
    GhzProjected { eps_d: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingPrediction {
    /// Optimal ξ (NaN for the GHZ regime).
    pub xi: f64,
    pub t: f64,
}

pub fn scaling_predictions(n: usize, regime: ScalingRegime) -> Result<ScalingPrediction> {
    if n < 2 {
        return Err(Error::param("scaling laws need at least two spins"));
    }
    let nf = n as f64;
    let xi_1a = 3f64.powf(1.0 / 3.0) / (2f64.sqrt() * nf.powf(1.0 / 3.0));
    let log_term = (2.0 * nf / 3f64.sqrt()).ln();
    Ok(match regime {
        ScalingRegime::OatIdeal { d } => ScalingPrediction { xi: xi_1a, t: 3f64.powf(1.0 / 6.0) / (d * nf.powf(2.0 / 3.0)) },
        ScalingRegime::TatIdeal { d } => {
            ScalingPrediction { xi: ((1.0 + 2.0 * 3f64.sqrt()) / (2.0 * nf)).sqrt(), t: log_term / (d * nf) }
        }
        ScalingRegime::OatProjected { eps_d } => {
            ScalingPrediction { xi: xi_1a, t: 3f64.powf(1.0 / 6.0) * nf.powf(1.0 / 3.0) / eps_d }
        }
        ScalingRegime::TatProjected { eps_d } => {
            ScalingPrediction { xi: 2.0 / nf.sqrt(), t: (nf - 1.0) / (eps_d * nf) * log_term }
        }
        ScalingRegime::NoisyUnprotected { eps_d, gamma } => ScalingPrediction {
            xi: 3f64.powf(1.0 / 3.0) / nf.powf(1.0 / 3.0) * ((1.0 + (gamma / eps_d).powi(2)) / 2.0).sqrt(),
            t: 3f64.powf(1.0 / 6.0) * nf.powf(1.0 / 3.0) / eps_d,
        },
        ScalingRegime::NoisyProtected { d, gamma } => ScalingPrediction {
            xi: xi_1a + (gamma / (nf * d)).sqrt(),
            t: 3f64.powf(1.0 / 6.0) / (d * nf.powf(2.0 / 3.0)),
        },
        ScalingRegime::GhzProjected { eps_d } => ScalingPrediction { xi: f64::NAN, t: PI / 2.0 * nf / eps_d },
    })
}

/// Early-time two-axis twisting law ξ²(t) ≈ e^{−Ndt}, floored at the
/// optimal value (1+2√3)/(2N) reached at t_2a = log(2N/√3)/(dN).
pub fn xi2_tat_closed_form(n: usize, d: f64, t: f64) -> f64 {
    let nf = n as f64;
    let floor = (1.0 + 2.0 * 3f64.sqrt()) / (2.0 * nf);
    (-nf * d * t).exp().max(floor).min(1.0)
}
