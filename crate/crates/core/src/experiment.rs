//! Squeezing generated by the engineered sequence on a placed ensemble,
//! with optional single-spin dephasing. Cycle-resolved ξ² and leakage.

use crate::error::{Error, Result};
use crate::geometry::SpinEnsemble;
use crate::hamiltonians::{self, Projected, Variant};
use crate::linalg::{CMat, CVec, Eigensystem, C64};
use crate::noise::{substream, Estimate, NoiseModel, OuProcess};
use crate::registry::Registry;
use crate::sequences::{self, PulseEvent, PulseSequence, SequenceParams};
use crate::spin_ops::{self, apply_product, single_rotation, Basis, CollectiveMoments, SpinAxis, StateVector};
use crate::squeezing;
use nalgebra::Matrix3;
use rayon::prelude::*;
use std::sync::Arc;

/// Noise values for one delay window: called with the window length,
/// returns per-spin fields (rad/μs) or `None` when noiseless.
pub type FieldSource<'a> = dyn FnMut(f64) -> Option<Vec<f64>> + 'a;

/// Advances a full-basis state through one sequence cycle.
pub trait CycleStepper: Send + Sync {
    fn cycle(&self, psi: CVec, fields: &mut FieldSource<'_>) -> CVec;
}

pub trait SequencePropagation: Send + Sync {
    fn prepare(&self, ensemble: &SpinEnsemble, seq: &PulseSequence) -> Result<Box<dyn CycleStepper>>;
}

fn dephase(psi: &CVec, fields: &[f64], axis: [f64; 3], t: f64, n: usize) -> Result<CVec> {
    let axis = SpinAxis::from_array(axis)?;
    let ops: Vec<_> = fields.iter().map(|w| single_rotation(axis, w * t)).collect();
    Ok(apply_product(psi, &ops, n))
}

/// Lab-frame pulses and free Ising evolution, noise along the lab z axis.
struct ExactPulses;

struct ExactStepper {
    n: usize,
    h_diag: Vec<f64>,
    z_signs: Vec<Vec<f64>>,
    events: Vec<PulseEvent>,
}

impl SequencePropagation for ExactPulses {
    fn prepare(&self, ensemble: &SpinEnsemble, seq: &PulseSequence) -> Result<Box<dyn CycleStepper>> {
        let h = hamiltonians::h_ising(ensemble)?;
        let n = ensemble.n();
        let dim = h.dim();
        let z_signs = (0..n)
            .map(|k| (0..dim).map(|i| if (i >> (n - 1 - k)) & 1 == 0 { 0.5 } else { -0.5 }).collect())
            .collect();
        Ok(Box::new(ExactStepper { n, h_diag: (0..dim).map(|i| h.data()[(i, i)].re).collect(), z_signs, events: seq.events().to_vec() }))
    }
}

impl CycleStepper for ExactStepper {
    fn cycle(&self, mut psi: CVec, fields: &mut FieldSource<'_>) -> CVec {
        for e in &self.events {
            match *e {
                PulseEvent::Rotation { axis, angle } => {
                    psi = apply_product(&psi, &vec![single_rotation(axis, angle); self.n], self.n);
                }
                PulseEvent::Delay(t) => {
                    let w = fields(t);
                    for (i, amp) in psi.iter_mut().enumerate() {
                        let mut e = self.h_diag[i];
                        if let Some(w) = &w {
                            e += w.iter().zip(&self.z_signs).map(|(wk, s)| wk * s[i]).sum::<f64>();
                        }
                        *amp *= C64::from_polar(1.0, -e * t);
                    }
                }
            }
        }
        psi
    }
}

/// First-order average Hamiltonian in every window with the noise split
/// symmetrically around it. With `toggled_noise` the field follows the
/// toggling-frame direction of S_z, so the echoes refocus slow noise;
/// otherwise it acts along z of the effective frame, unrefocused.
struct AverageHamiltonian {
    toggled_noise: bool,
}

struct AverageStepper {
    n: usize,
    /// (toggled field axis, window length, index into `props`)
    windows: Vec<([f64; 3], f64, usize)>,
    props: Vec<CMat>,
}

impl SequencePropagation for AverageHamiltonian {
    fn prepare(&self, ensemble: &SpinEnsemble, seq: &PulseSequence) -> Result<Box<dyn CycleStepper>> {
        if !seq.is_cyclic() {
            return Err(Error::Sequence("average-Hamiltonian propagation needs a cyclic sequence".into()));
        }
        let tc = seq.cycle_time();
        let axes = seq.toggled_axes([0.0, 0.0, 1.0]);
        // H_zz toggles into Σ 2d (u·S)(u·S); average the tensor u uᵀ.
        let mut m = Matrix3::zeros();
        for w in &axes {
            let u = nalgebra::Vector3::from(w.axis);
            m += u * u.transpose() * (w.duration / tc);
        }
        let hbar = hamiltonians::pair_hamiltonian(&ensemble.couplings, &m)?;
        let eig = Eigensystem::new(hbar.data());
        let mut lengths: Vec<f64> = Vec::new();
        let mut windows = Vec::with_capacity(axes.len());
        for w in &axes {
            let idx = match lengths.iter().position(|l| (l - w.duration).abs() <= 1e-12 * w.duration) {
                Some(i) => i,
                None => {
                    lengths.push(w.duration);
                    lengths.len() - 1
                }
            };
            let axis = if self.toggled_noise { w.axis } else { [0.0, 0.0, 1.0] };
            windows.push((axis, w.duration, idx));
        }
        let props = lengths.iter().map(|&l| eig.propagator(l)).collect();
        Ok(Box::new(AverageStepper { n: ensemble.n(), windows, props }))
    }
}

impl CycleStepper for AverageStepper {
    fn cycle(&self, mut psi: CVec, fields: &mut FieldSource<'_>) -> CVec {
        for &(axis, t, idx) in &self.windows {
            match fields(t) {
                Some(w) => {
                    psi = dephase(&psi, &w, axis, t / 2.0, self.n).expect("toggled axis is a unit vector");
                    psi = &self.props[idx] * psi;
                    psi = dephase(&psi, &w, axis, t / 2.0, self.n).expect("toggled axis is a unit vector");
                }
                None => psi = &self.props[idx] * psi,
            }
        }
        psi
    }
}

pub fn propagations() -> Registry<dyn SequencePropagation> {
    let average: Arc<dyn SequencePropagation> = Arc::new(AverageHamiltonian { toggled_noise: true });
    let effective: Arc<dyn SequencePropagation> = Arc::new(AverageHamiltonian { toggled_noise: false });
    let exact: Arc<dyn SequencePropagation> = Arc::new(ExactPulses);
    Registry::new("sequence propagation")
        .with("average", average)
        .with("average-unrefocused", effective)
        .with("exact", exact)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceRunConfig {
    pub variant: Variant,
    /// Base pulse delay τ (μs).
    pub tau: f64,
    pub cycles: usize,
    /// Cycle at which the ideal twisting optimum should fall; sets ε.
    pub target_cycle: f64,
    /// Explicit ε, overriding `target_cycle`.
    pub eps: Option<f64>,
    pub noise: Option<NoiseModel>,
    pub n_traj: usize,
    pub seed: u64,
    pub propagation: String,
}

impl Default for SequenceRunConfig {
    fn default() -> Self {
        SequenceRunConfig {
            variant: Variant::TwoAxis,
            tau: 1.4,
            cycles: 12,
            target_cycle: 6.0,
            eps: None,
            noise: None,
            n_traj: 200,
            seed: 1,
            propagation: "average".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleRecord {
    pub cycle: usize,
    /// Elapsed time (μs).
    pub time: f64,
    pub xi2_noiseless: f64,
    pub leakage_noiseless: f64,
    /// Wineland ξ² of the trajectory-averaged state.
    pub xi2_noisy: Option<f64>,
    pub leakage_noisy: Option<Estimate>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceRun {
    pub variant: Variant,
    pub eps: f64,
    /// Projected twisting coefficient of the bare perturbation.
    pub c_quad: f64,
    /// Twisting χ accumulated per cycle.
    pub chi_per_cycle: f64,
    pub cycle_time: f64,
    pub records: Vec<CycleRecord>,
}

impl SequenceRun {
    fn best(&self, key: impl Fn(&CycleRecord) -> Option<f64>) -> Option<(usize, f64)> {
        self.records
            .iter()
            .filter_map(|r| key(r).map(|v| (r.cycle, v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// (cycle, ξ²) at the noiseless minimum.
    pub fn best_noiseless(&self) -> Option<(usize, f64)> {
        self.best(|r| Some(r.xi2_noiseless))
    }

    pub fn best_noisy(&self) -> Option<(usize, f64)> {
        self.best(|r| r.xi2_noisy)
    }
}

/// ε that places the ideal twisting optimum at `target_cycle`.
pub fn epsilon_for_target(ensemble: &SpinEnsemble, variant: Variant, tau: f64, target_cycle: f64) -> Result<f64> {
    let n = ensemble.n();
    let (chi_opt, c) = match variant {
        Variant::OneAxis => (squeezing::oat_optimum(n)?.0, hamiltonians::project_check(ensemble, Projected::Ising)?.c_quad),
        Variant::TwoAxis => {
            (squeezing::tat_optimum(n)?.0, hamiltonians::project_check(ensemble, Projected::DoubleQuantum)?.c_quad)
        }
    };
    let tc = 48.0 * tau;
    // weight b of the perturbation in the average Hamiltonian
    let b = chi_opt / (c.abs() * target_cycle * tc);
    match variant {
        // H̄ = (H_H + εH_zz)/(3 + ε)
        Variant::OneAxis if b < 1.0 => Ok(3.0 * b / (1.0 - b)),
        // H̄ = (H_H + εH_dq)/3
        Variant::TwoAxis if 3.0 * b < 1.0 => Ok(3.0 * b),
        _ => Err(Error::param(format!(
            "couplings too weak to reach the optimum by cycle {target_cycle} (perturbation weight {b:.3})"
        ))),
    }
}

fn initial_state(variant: Variant, n: usize) -> Result<StateVector> {
    let axis = match variant {
        Variant::OneAxis => SpinAxis::X,
        Variant::TwoAxis => SpinAxis::Z,
    };
    StateVector::coherent(axis, Basis::Full(n))
}

/// Sum of collective moments over trajectories, for averaging.
fn add_moments(acc: &mut CollectiveMoments, m: &CollectiveMoments, w: f64) {
    for a in 0..3 {
        acc.mean[a] += w * m.mean[a];
        for b in 0..3 {
            acc.second[a][b] += w * m.second[a][b];
        }
    }
}

pub fn run_sequence(ensemble: &SpinEnsemble, cfg: &SequenceRunConfig) -> Result<SequenceRun> {
    let n = ensemble.n();
    Basis::Full(n).check()?;
    if cfg.cycles == 0 {
        return Err(Error::param("cycles must be at least 1"));
    }
    let eps = match cfg.eps {
        Some(e) => e,
        None => epsilon_for_target(ensemble, cfg.variant, cfg.tau, cfg.target_cycle)?,
    };
    let template = sequences::templates().get(&format!("mrev8-echo-{}", cfg.variant.label()))?;
    let seq = template.build(&SequenceParams { tau: cfg.tau, eps })?;
    let tc = seq.cycle_time();
    let stepper = propagations().get(&cfg.propagation)?.prepare(ensemble, &seq)?;
    let psi0 = initial_state(cfg.variant, n)?;
    let basis = psi0.basis();
    let w = spin_ops::dicke_isometry(n)?;
    let leak = |psi: &CVec| (1.0 - (w.adjoint() * psi).norm_squared() / psi.norm_squared()).max(0.0);

    let (projected, weight) = match cfg.variant {
        Variant::OneAxis => (Projected::Ising, eps / (3.0 + eps)),
        Variant::TwoAxis => (Projected::DoubleQuantum, eps / 3.0),
    };
    let c_quad = hamiltonians::project_check(ensemble, projected)?.c_quad;

    let mut records = Vec::with_capacity(cfg.cycles);
    let mut psi = psi0.amps().clone();
    for c in 1..=cfg.cycles {
        psi = stepper.cycle(psi, &mut |_| None);
        let s = StateVector::new(psi.clone(), basis)?;
        records.push(CycleRecord {
            cycle: c,
            time: c as f64 * tc,
            xi2_noiseless: squeezing::xi2_wineland(&s)?.xi2,
            leakage_noiseless: leak(&psi),
            xi2_noisy: None,
            leakage_noisy: None,
        });
    }

    if let Some(noise) = cfg.noise {
        let longest = seq.events().iter().filter_map(|e| if let PulseEvent::Delay(t) = e { Some(*t) } else { None }).fold(0.0, f64::max);
        if longest > noise.tau_c / 10.0 * (1.0 + 1e-12) {
            return Err(Error::param("delay windows must not exceed tau_c/10"));
        }
        if cfg.n_traj == 0 {
            return Err(Error::param("n_traj must be at least 1"));
        }
        let variance = noise.per_spin_variance(n);
        let per_traj: Vec<Vec<(CollectiveMoments, f64)>> = (0..cfg.n_traj)
            .into_par_iter()
            .map(|index| {
                let mut rng = substream(cfg.seed, index as u64);
                let mut ou: Vec<OuProcess> = (0..n).map(|_| OuProcess::stationary(noise.tau_c, variance, &mut rng)).collect();
                let mut field = |t: f64| {
                    let now: Vec<f64> = ou.iter().map(|p| p.value).collect();
                    for p in ou.iter_mut() {
                        p.step(t, &mut rng);
                    }
                    Some(now)
                };
                let mut psi = psi0.amps().clone();
                let mut out = Vec::with_capacity(cfg.cycles);
                for _ in 0..cfg.cycles {
                    psi = stepper.cycle(psi, &mut field);
                    let s = StateVector::new(psi.clone(), basis).expect("basis fixed");
                    out.push((CollectiveMoments::of(&s), leak(&psi)));
                }
                out
            })
            .collect();
        let inv = 1.0 / cfg.n_traj as f64;
        for (k, rec) in records.iter_mut().enumerate() {
            let mut acc = CollectiveMoments { mean: [0.0; 3], second: [[0.0; 3]; 3] };
            for t in &per_traj {
                add_moments(&mut acc, &t[k].0, inv);
            }
            rec.xi2_noisy = Some(squeezing::xi2_wineland_moments(&acc, n).xi2);
            rec.leakage_noisy = Some(Estimate::from_samples(&per_traj.iter().map(|t| t[k].1).collect::<Vec<_>>()));
        }
    }

    Ok(SequenceRun { variant: cfg.variant, eps, c_quad, chi_per_cycle: c_quad * weight * tc, cycle_time: tc, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn propagations_agree_for_short_delays() {
        let ens = SpinEnsemble::from_couplings(nalgebra::DMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                0.0
            } else {
                0.01 * (1.0 + (i + j) as f64 / 3.0)
            }
        }))
        .unwrap();
        let base = SequenceRunConfig { tau: 0.05, cycles: 3, eps: Some(0.2), ..Default::default() };
        for variant in [Variant::OneAxis, Variant::TwoAxis] {
            let a = run_sequence(&ens, &SequenceRunConfig { variant, ..base.clone() }).unwrap();
            let b = run_sequence(&ens, &SequenceRunConfig { variant, propagation: "exact".into(), ..base.clone() }).unwrap();
            for (x, y) in a.records.iter().zip(&b.records) {
                assert!((x.xi2_noiseless - y.xi2_noiseless).abs() < 1e-4, "{variant:?}");
            }
        }
    }

    #[test]
    fn average_mode_conserves_symmetry() {
        let ens = SpinEnsemble::uniform(4, 0.1);
        let run = run_sequence(&ens, &SequenceRunConfig { variant: Variant::OneAxis, cycles: 4, eps: Some(0.3), ..Default::default() }).unwrap();
        assert!(run.records.iter().all(|r| r.leakage_noiseless < 1e-10));
    }

    #[test]
    fn unknown_propagation_lists_choices() {
        let ens = SpinEnsemble::uniform(3, 0.1);
        let err = run_sequence(&ens, &SequenceRunConfig { eps: Some(0.1), propagation: "magic".into(), ..Default::default() }).unwrap_err();
        assert!(err.to_string().contains("average"));
    }
}
