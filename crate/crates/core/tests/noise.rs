use nvsqueeze::geometry::SpinEnsemble;
use nvsqueeze::hamiltonians::{self, Variant};
use nvsqueeze::noise::{self, Estimate, NoiseMode, NoiseModel, TrajectoryConfig};
use nvsqueeze::spin_ops::{self, collective_op, Basis, SpinAxis, StateVector};
use nvsqueeze::squeezing;

fn x_axis() -> SpinAxis {
    SpinAxis::new(1.0, 0.0, 0.0).unwrap()
}

fn jx_decay_rate(mode: NoiseMode, gamma: f64) -> f64 {
    let n = 4;
    let basis = Basis::Full(n);
    let psi = StateVector::coherent(x_axis(), basis).unwrap();
    let h = spin_ops::OperatorMatrix::zeros(basis);
    let model = NoiseModel::new(gamma, 0.1, mode).unwrap();
    let cfg = TrajectoryConfig { n_traj: 2000, dt: 0.01, seed: 11 };
    let jx = collective_op(x_axis(), basis).unwrap();
    // well past τ_c, where the OU phase variance grows linearly
    let times: Vec<f64> = (0..7).map(|k| 1.0 + 0.25 * k as f64).collect();
    let run = noise::run_trajectories(&psi, &h, &model, &cfg, &times, |s| Ok(vec![spin_ops::expectation(s, &jx)?]))
        .unwrap();
    let means: Vec<f64> = run.series(0).iter().map(|e| e.mean).collect();
    noise::fit_decay_rate(&times, &means).unwrap()
}

#[test]
fn per_spin_product_state_decays_at_n_gamma() {
    let gamma = 0.25;
    let rate = jx_decay_rate(NoiseMode::PerSpin, gamma);
    assert!((rate / (4.0 * gamma) - 1.0).abs() < 0.05, "rate {rate}");
}

#[test]
fn collective_product_state_decays_at_gamma() {
    let gamma = 1.0;
    let rate = jx_decay_rate(NoiseMode::CollectiveOnly, gamma);
    assert!((rate / gamma - 1.0).abs() < 0.05, "rate {rate}");
    assert!(jx_decay_rate(NoiseMode::CollectiveOnly, 0.25) < jx_decay_rate(NoiseMode::PerSpin, 0.25));
}

#[test]
fn ising_conserves_jz_on_every_trajectory() {
    let n = 5;
    let basis = Basis::Full(n);
    let ens = SpinEnsemble::uniform(n, 0.7);
    let h = hamiltonians::h_ising(&ens).unwrap();
    let psi = StateVector::coherent(SpinAxis::new(1.0, 0.3, 0.8).unwrap(), basis).unwrap();
    let jz = collective_op(SpinAxis::Z, basis).unwrap();
    let start = spin_ops::expectation(&psi, &jz).unwrap();
    let model = NoiseModel::new(0.2, 1.0, NoiseMode::PerSpin).unwrap();
    let cfg = TrajectoryConfig { n_traj: 20, dt: 0.05, seed: 2 };
    let run = noise::run_trajectories(&psi, &h, &model, &cfg, &[0.5, 1.0, 3.0], |s| {
        Ok(vec![spin_ops::expectation(s, &jz)?, s.norm()])
    })
    .unwrap();
    for traj in &run.samples {
        for row in traj {
            assert!((row[0] - start).abs() < 1e-10);
            assert!((row[1] - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn trajectories_do_not_depend_on_thread_count() {
    let n = 4;
    let basis = Basis::Full(n);
    let ens = SpinEnsemble::uniform(n, 0.5);
    let h = hamiltonians::h_combined(&ens, 0.2, Variant::TwoAxis).unwrap();
    let psi = StateVector::coherent(SpinAxis::Z, basis).unwrap();
    let model = NoiseModel::new(0.05, 2.0, NoiseMode::PerSpin).unwrap();
    let cfg = TrajectoryConfig { n_traj: 64, dt: 0.1, seed: 99 };
    let jy = collective_op(SpinAxis::new(0.0, 1.0, 0.0).unwrap(), basis).unwrap();
    let go = |threads: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
            noise::run_trajectories(&psi, &h, &model, &cfg, &[1.0, 2.5], |s| Ok(vec![spin_ops::expectation(s, &jy)?]))
                .unwrap()
                .samples
        })
    };
    let a = go(1);
    let b = go(8);
    let bits = |v: &Vec<Vec<Vec<f64>>>| v.iter().flatten().flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

fn leakage_at(tau_c: f64) -> f64 {
    let n = 6;
    let ens = SpinEnsemble::uniform(n, 1.0);
    let eps = 0.3;
    let h = hamiltonians::h_combined(&ens, eps, Variant::OneAxis).unwrap();
    let psi = StateVector::coherent(x_axis(), Basis::Full(n)).unwrap();
    // optimal squeezing time for the ε-weighted twisting term
    let (chi, _) = squeezing::oat_optimum(n).unwrap();
    let c = hamiltonians::project_check(&ens, hamiltonians::Projected::Ising).unwrap().c_quad.abs();
    let t = chi / (c * eps / (3.0 + eps));
    let model = NoiseModel::new(1e-2, tau_c, NoiseMode::PerSpin).unwrap();
    let cfg = TrajectoryConfig { n_traj: 200, dt: (tau_c / 10.0).min(t / 20.0), seed: 5 };
    let l = noise::leakage_probe(&psi, &h, &model, &cfg, &[t]).unwrap();
    l[0].mean
}

#[test]
fn gap_protects_the_symmetric_manifold() {
    // gap dN = 6 rad/us against noise cut-offs 1/τ_c of 0.01 and 100
    let protected = leakage_at(100.0);
    let exposed = leakage_at(0.01);
    assert!(protected < 0.05, "protected leakage {protected}");
    assert!(exposed >= 5.0 * protected, "exposed {exposed} vs protected {protected}");
}

/// N·Var(J_z(ν)) / ⟨J_x⟩²_ideal from per-trajectory ⟨A⟩, ⟨A²⟩, with a
/// delta-method standard error.
fn variance_ratio(a: &[f64], a2: &[f64], scale: f64) -> Estimate {
    let m = a.len() as f64;
    let ma = a.iter().sum::<f64>() / m;
    let mb = a2.iter().sum::<f64>() / m;
    let cov = |x: &[f64], mx: f64, y: &[f64], my: f64| {
        x.iter().zip(y).map(|(p, q)| (p - mx) * (q - my)).sum::<f64>() / (m - 1.0)
    };
    let var = mb - ma * ma;
    let se2 = (cov(a2, mb, a2, mb) - 4.0 * ma * cov(a, ma, a2, mb) + 4.0 * ma * ma * cov(a, ma, a, ma)) / m;
    Estimate { mean: var * scale, std_err: se2.max(0.0).sqrt() * scale }
}

#[test]
fn unprotected_formula_matches_monte_carlo() {
    let n = 6;
    let basis = Basis::Full(n);
    let d = 1.0;
    let jz = collective_op(SpinAxis::Z, basis).unwrap();
    let h = jz.matmul(&jz).unwrap().scaled(d);
    let psi = StateVector::coherent(x_axis(), basis).unwrap();
    for (k, &chi) in [0.1, 0.15, 0.2, 0.25, 0.3].iter().enumerate() {
        let t = chi / d;
        let tau_c = 10.0 * t;
        let gamma = 2.0;
        let model = NoiseModel::new(gamma, tau_c, NoiseMode::PerSpin).unwrap();
        let gamma_t = noise::gamma_from_kernel(model.per_spin_variance(n), tau_c, t, n) * t;
        let (nu, _) = squeezing::nu_optimal(n, chi).unwrap();
        let a = collective_op(SpinAxis::new(0.0, nu.sin(), nu.cos()).unwrap(), basis).unwrap();
        let a2 = a.matmul(&a).unwrap();
        let cfg = TrajectoryConfig { n_traj: 4000, dt: tau_c / 10.0, seed: 100 + k as u64 };
        let run = noise::run_trajectories(&psi, &h, &model, &cfg, &[t], |s| {
            Ok(vec![spin_ops::expectation(s, &a)?, spin_ops::expectation(s, &a2)?])
        })
        .unwrap();
        let col = |p: usize| run.samples.iter().map(|tr| tr[0][p]).collect::<Vec<_>>();
        let jx = squeezing::oat_observables(n, chi).unwrap().jx;
        let mc = variance_ratio(&col(0), &col(1), n as f64 / (jx * jx));
        let formula = squeezing::xi2_noisy_unprotected(n, chi, gamma_t).unwrap();
        let ideal = squeezing::xi2_ideal(n, chi).unwrap();
        println!("chi {chi} Γt {gamma_t:.4} ideal {ideal:.5} formula {formula:.5} mc {:.5} ± {:.5}", mc.mean, mc.std_err);
        assert!((mc.mean - formula).abs() < 3.0 * mc.std_err, "chi {chi}: mc {mc:?} formula {formula}");
    }
}
