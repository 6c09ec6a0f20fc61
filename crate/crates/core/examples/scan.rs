use nvsqueeze::experiment::*;
use nvsqueeze::geometry::*;
use nvsqueeze::hamiltonians::Variant;
use nvsqueeze::noise::*;
fn main() {
    let args: Vec<String> = std::env::args().collect();
    let lo: u64 = args[1].parse().unwrap();
    let hi: u64 = args[2].parse().unwrap();
    let ntraj: usize = args[3].parse().unwrap();
    let prop = args.get(4).cloned().unwrap_or("average".into());
    for seed in lo..=hi {
        let spec = GeometrySpec { n: Some(8), ..GeometrySpec::slab([30.0, 30.0, 9.0], 1e-3, seed) };
        let ens = SpinEnsemble::place(&spec).unwrap();
        let d = coupling_mean(&ens);
        let gap = gap_exact(&ens).unwrap();
        let noise = NoiseModel::new(3e-3, 100.0, NoiseMode::PerSpin).unwrap();
        let mut line = format!("seed {seed} D/2pi {:.3} gap {:.3} ", d / (2.0 * std::f64::consts::PI), gap.gap);
        let mut mins = vec![];
        for v in [Variant::OneAxis, Variant::TwoAxis] {
            let cfg = SequenceRunConfig { variant: v, noise: Some(noise), n_traj: ntraj, seed: 7, propagation: prop.clone(), ..Default::default() };
            match run_sequence(&ens, &cfg) {
                Ok(r) => {
                    let (c0, x0) = r.best_noiseless().unwrap();
                    let (c1, x1) = r.best_noisy().unwrap();
                    let leak = r.records[c1 - 1].leakage_noisy.unwrap().mean; let l0 = r.records[c0 - 1].leakage_noiseless;
                    line += &format!("| {} eps {:.3} id {:.3}@{} noisy {:.3}@{} leak {:.3} l0 {:.1e} ", v.label(), r.eps, x0, c0, x1, c1, leak, l0);
                    mins.push((x0, x1, leak));
                }
                Err(e) => line += &format!("| {} ERR {e} ", v.label()),
            }
        }
        if mins.len() == 2 {
            let ok = mins[1].1 < mins[0].1 && mins.iter().all(|m| (m.1 - m.0).abs() <= 0.25 * m.0 && m.2 < 0.05);
            line += if ok { "OK" } else { "" };
        }
        println!("{line}");
    }
}
