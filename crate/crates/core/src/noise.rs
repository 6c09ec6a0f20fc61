//! Ornstein–Uhlenbeck dephasing, Monte-Carlo trajectories and decay fits.

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, Eigensystem, C64};
use crate::spin_ops::{self, Basis, OperatorMatrix, StateVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseMode {
    /// Independent OU field on every spin.
    PerSpin,
    /// Only the spin-averaged field, coupled to J_z.
    CollectiveOnly,
}

impl NoiseMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "per-spin" => Ok(NoiseMode::PerSpin),
            "collective" => Ok(NoiseMode::CollectiveOnly),
            _ => Err(Error::param(format!("unknown noise mode '{s}' (per-spin, collective)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    /// Dephasing rate Γ: a product state's ⟨J_x⟩ decays as e^{−NΓt}.
    pub gamma: f64,
    /// Correlation time τ_c (μs).
    pub tau_c: f64,
    pub mode: NoiseMode,
}

impl NoiseModel {
    pub fn new(gamma: f64, tau_c: f64, mode: NoiseMode) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::param(format!("gamma must be non-negative, got {gamma}")));
        }
        if !(tau_c > 0.0 && tau_c.is_finite()) {
            return Err(Error::param(format!("tau_c must be positive, got {tau_c}")));
        }
        Ok(NoiseModel { gamma, tau_c, mode })
    }

    /// Per-spin OU variance Ω² = NΓ/τ_c.
    pub fn per_spin_variance(&self, n: usize) -> f64 {
        n as f64 * self.gamma / self.tau_c
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryConfig {
    pub n_traj: usize,
    /// Noise discretization step (μs).
    pub dt: f64,
    pub seed: u64,
}

impl TrajectoryConfig {
    pub fn validate(&self, noise: &NoiseModel) -> Result<()> {
        if self.n_traj == 0 {
            return Err(Error::param("n_traj must be at least 1"));
        }
        if !(self.dt > 0.0) || self.dt > noise.tau_c / 10.0 * (1.0 + 1e-12) {
            return Err(Error::param(format!("dt = {} must lie in (0, tau_c/10 = {}]", self.dt, noise.tau_c / 10.0)));
        }
        Ok(())
    }
}

/// Independent random stream for trajectory `index`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Stationary OU process with exact discrete updates.
#[derive(Clone, Copy, Debug)]
pub struct OuProcess {
    pub tau_c: f64,
    pub variance: f64,
    pub value: f64,
}

impl OuProcess {
    pub fn stationary<R: Rng + ?Sized>(tau_c: f64, variance: f64, rng: &mut R) -> Self {
        let z: f64 = rng.sample(StandardNormal);
        OuProcess { tau_c, variance, value: variance.sqrt() * z }
    }

    pub fn step<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) -> f64 {
        let a = (-dt / self.tau_c).exp();
        let z: f64 = rng.sample(StandardNormal);
        self.value = self.value * a + (self.variance * (1.0 - a * a)).sqrt() * z;
        self.value
    }
}

/// OU path sampled at 0, dt, 2dt, … up to `duration`.
pub fn sample_ou<R: Rng + ?Sized>(tau_c: f64, variance: f64, dt: f64, duration: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(tau_c > 0.0 && variance >= 0.0 && dt > 0.0 && duration >= 0.0) {
        return Err(Error::param("sample_ou needs tau_c > 0, variance ≥ 0, dt > 0, duration ≥ 0"));
    }
    let steps = (duration / dt + 1e-9).floor() as usize;
    let mut p = OuProcess::stationary(tau_c, variance, rng);
    let mut path = Vec::with_capacity(steps + 1);
    path.push(p.value);
    for _ in 0..steps {
        path.push(p.step(dt, rng));
    }
    Ok(path)
}

/// Spin-averaged path ω_N(t) = (1/N)Σ_k ω_k(t).
pub fn collective_projection(paths: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = paths.first().ok_or_else(|| Error::param("no paths"))?;
    if paths.iter().any(|p| p.len() != first.len()) {
        return Err(Error::param("paths differ in length"));
    }
    let n = paths.len() as f64;
    Ok((0..first.len()).map(|i| paths.iter().map(|p| p[i]).sum::<f64>() / n).collect())
}

/// Γ(t) = (1/2t)∫∫ ⟨ω_N ω_N⟩ for the OU kernel of per-spin variance Ω².
pub fn gamma_from_kernel(variance: f64, tau_c: f64, t: f64, n: usize) -> f64 {
    let base = variance * tau_c / n as f64;
    if t <= 0.0 {
        return 0.0;
    }
    let x = t / tau_c;
    // 1 − (1 − e^{−x})/x, series for small x
    let bracket = if x < 1e-4 { x / 2.0 - x * x / 6.0 + x * x * x / 24.0 } else { 1.0 + (-x).exp_m1() / x };
    base * bracket
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std_err = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        } else {
            f64::NAN
        };
        Estimate { mean, std_err }
    }
}

/// Per-trajectory probe values: `samples[traj][time][probe]`.
#[derive(Clone, Debug)]
pub struct NoisyRun {
    pub times: Vec<f64>,
    pub samples: Vec<Vec<Vec<f64>>>,
}

impl NoisyRun {
    /// Trajectory-averaged probes at time index `k`.
    pub fn estimates(&self, k: usize) -> Vec<Estimate> {
        let n_probe = self.samples.first().map_or(0, |s| s[k].len());
        (0..n_probe)
            .map(|p| Estimate::from_samples(&self.samples.iter().map(|s| s[k][p]).collect::<Vec<_>>()))
            .collect()
    }

    pub fn series(&self, probe: usize) -> Vec<Estimate> {
        (0..self.times.len()).map(|k| self.estimates(k)[probe]).collect()
    }
}

/// Diagonal of the noise coupling for each noise source: per-spin S_z^k or J_z.
fn noise_diagonals(basis: Basis, mode: NoiseMode) -> Result<Vec<Vec<f64>>> {
    match (basis, mode) {
        (Basis::Full(n), NoiseMode::PerSpin) => Ok((0..n)
            .map(|k| {
                let bit = n - 1 - k;
                (0..basis.dim()).map(|idx| if (idx >> bit) & 1 == 0 { 0.5 } else { -0.5 }).collect()
            })
            .collect()),
        (Basis::Full(n), NoiseMode::CollectiveOnly) => {
            Ok(vec![(0..basis.dim()).map(|idx| n as f64 / 2.0 - idx.count_ones() as f64).collect()])
        }
        (Basis::Dicke(n), NoiseMode::CollectiveOnly) => Ok(vec![(0..=n).map(|k| n as f64 / 2.0 - k as f64).collect()]),
        (Basis::Dicke(n), NoiseMode::PerSpin) => Err(Error::BasisMismatch(basis, Basis::Full(n))),
    }
}

enum Drift {
    Diagonal(Vec<f64>),
    Dense(Eigensystem),
}

/// Monte-Carlo trajectories under h + H_noise(t), recording `probe(state)`
/// at each requested time. Results are ordered by trajectory index and
/// independent of the thread count.
pub fn run_trajectories<F>(
    state: &StateVector,
    h: &OperatorMatrix,
    noise: &NoiseModel,
    cfg: &TrajectoryConfig,
    times: &[f64],
    probe: F,
) -> Result<NoisyRun>
where
    F: Fn(&StateVector) -> Result<Vec<f64>> + Sync,
{
    cfg.validate(noise)?;
    let basis = state.basis();
    if h.basis() != basis {
        return Err(Error::BasisMismatch(basis, h.basis()));
    }
    h.ensure_hermitian()?;
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("times must be non-negative and ascending"));
    }
    let diags = noise_diagonals(basis, noise.mode)?;
    let n = basis.n();
    // Collective mode drives one shared path, the average of N per-spin ones.
    let variance = match noise.mode {
        NoiseMode::PerSpin => noise.per_spin_variance(n),
        NoiseMode::CollectiveOnly => noise.per_spin_variance(n) / n as f64,
    };
    let off_diag = (0..h.dim())
        .flat_map(|i| (0..h.dim()).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .map(|(i, j)| h.data()[(i, j)].norm_sqr())
        .sum::<f64>();
    let drift = if off_diag == 0.0 {
        Drift::Diagonal((0..h.dim()).map(|i| h.data()[(i, i)].re).collect())
    } else {
        Drift::Dense(Eigensystem::new(h.data()))
    };
    let half_step: Option<CMat> = match &drift {
        Drift::Dense(e) => Some(e.propagator(cfg.dt / 2.0)),
        Drift::Diagonal(_) => None,
    };
    let dim = basis.dim();

    let one = |index: usize| -> Result<Vec<Vec<f64>>> {
        let mut rng = substream(cfg.seed, index as u64);
        let mut fields: Vec<OuProcess> =
            diags.iter().map(|_| OuProcess::stationary(noise.tau_c, variance, &mut rng)).collect();
        let mut psi: CVec = state.amps().clone();
        let mut now = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for &target in times {
            while target - now > 1e-12 * target.max(1.0) {
                let step = cfg.dt.min(target - now);
                let mut phase = vec![0.0; dim];
                for (f, d) in fields.iter().zip(&diags) {
                    for (p, s) in phase.iter_mut().zip(d) {
                        *p += f.value * s;
                    }
                }
                match &drift {
                    Drift::Diagonal(hd) => {
                        for i in 0..dim {
                            psi[i] *= C64::from_polar(1.0, -(hd[i] + phase[i]) * step);
                        }
                    }
                    Drift::Dense(e) => {
                        let half = if step == cfg.dt { half_step.clone().unwrap() } else { e.propagator(step / 2.0) };
                        psi = &half * psi;
                        for i in 0..dim {
                            psi[i] *= C64::from_polar(1.0, -phase[i] * step);
                        }
                        psi = &half * psi;
                    }
                }
                for f in fields.iter_mut() {
                    f.step(step, &mut rng);
                }
                now += step;
            }
            out.push(probe(&StateVector::new(psi.clone(), basis)?)?);
        }
        Ok(out)
    };
    let samples = (0..cfg.n_traj).into_par_iter().map(one).collect::<Result<Vec<_>>>()?;
    Ok(NoisyRun { times: times.to_vec(), samples })
}

/// Trajectory-averaged expectation values at time t.
pub fn evolve_noisy(
    state: &StateVector,
    h: &OperatorMatrix,
    noise: &NoiseModel,
    cfg: &TrajectoryConfig,
    t: f64,
    observables: &[OperatorMatrix],
) -> Result<Vec<Estimate>> {
    for o in observables {
        if o.basis() != state.basis() {
            return Err(Error::BasisMismatch(state.basis(), o.basis()));
        }
    }
    let run = run_trajectories(state, h, noise, cfg, &[t], |psi| {
        observables.iter().map(|o| spin_ops::expectation(psi, o)).collect()
    })?;
    Ok(run.estimates(0))
}

/// Mean leakage out of the symmetric subspace at each time, under per-spin
/// noise.
pub fn leakage_probe(
    state: &StateVector,
    h: &OperatorMatrix,
    noise: &NoiseModel,
    cfg: &TrajectoryConfig,
    times: &[f64],
) -> Result<Vec<Estimate>> {
    let n = state.basis().n();
    let w = spin_ops::dicke_isometry(n)?;
    let run = run_trajectories(state, h, noise, cfg, times, |psi| {
        let c = w.adjoint() * psi.amps();
        Ok(vec![(1.0 - c.norm_squared() / psi.amps().norm_squared()).max(0.0)])
    })?;
    Ok(run.series(0))
}

/// Exponential rate from a least-squares line through ln(values).
pub fn fit_decay_rate(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::param("need at least two matching (t, value) points"));
    }
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::param("decay fit needs positive values"));
    }
    let n = times.len() as f64;
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mt = times.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = times.iter().zip(&ys).map(|(t, y)| (t - mt) * (y - my)).sum();
    let sxx: f64 = times.iter().map(|t| (t - mt).powi(2)).sum();
    Ok(-sxy / sxx)
}
