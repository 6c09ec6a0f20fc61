//! Subcommand implementations. Each returns the full output text; the
//! binary decides where it goes.

use crate::config::{self, ConfigError, Dim, RawConfig, Source};
use nvsqueeze::constants::PER_CM3_TO_PER_NM3;
use nvsqueeze::experiment::{self, SequenceRunConfig};
use nvsqueeze::geometry::{self, GapKind, GeometryKind, GeometrySpec, SpinEnsemble};
use nvsqueeze::hamiltonians::{self, Projected, Variant};
use nvsqueeze::magnetometry::{self, Mode, Scheme, SchemePoint, SensitivityConfig};
use nvsqueeze::noise::{NoiseMode, NoiseModel};
use nvsqueeze::sequences::{self, FieldModulation, SequenceParams};
use nvsqueeze::spin_ops::{Basis, SpinAxis, StateVector};
use nvsqueeze::squeezing;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] nvsqueeze::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical-contract violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(nvsqueeze::Error::Contract(_)) | CliError::Core(nvsqueeze::Error::NotHermitian(_)) => 3,
            _ => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Simulate,
    VerifySequence,
    Gap,
    Squeeze,
    Sensitivity,
    Sweep,
    ProjectCheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::VerifySequence => "verify-sequence",
            Command::Gap => "gap",
            Command::Squeeze => "squeeze",
            Command::Sensitivity => "sensitivity",
            Command::Sweep => "sweep",
            Command::ProjectCheck => "project-check",
        }
    }
}

/// Loaded configuration plus command-line overrides.
pub struct Context {
    pub text: String,
    pub raw: RawConfig,
    pub seed: u64,
    pub base_dir: PathBuf,
    pub geometry_file: Option<PathBuf>,
}

impl Context {
    pub fn load(path: &Path, seed: Option<u64>, geometry_file: Option<PathBuf>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Context::from_text(text, base_dir, seed, geometry_file)
    }

    pub fn from_text(text: String, base_dir: PathBuf, seed: Option<u64>, geometry_file: Option<PathBuf>) -> Result<Self, CliError> {
        let raw = config::parse(&text)?;
        let seed = seed.or(raw.seed).unwrap_or(1);
        Ok(Context { text, raw, seed, base_dir, geometry_file })
    }

    fn src(&self) -> Source<'_> {
        Source::new(&self.text)
    }

    fn header(&self, cmd: Command) -> String {
        let hash = Sha256::digest(self.text.as_bytes());
        let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
        format!(
            "# nvsqueeze {}\n# command {}\n# config-sha256 {hex}\n# seed {}\n",
            env!("CARGO_PKG_VERSION"),
            cmd.name(),
            self.seed
        )
    }

    fn missing(&self, section: &str) -> CliError {
        ConfigError::General(format!("missing [{section}] section")).into()
    }

    fn ensemble(&self) -> Result<SpinEnsemble, CliError> {
        let src = self.src();
        if let Some(file) = &self.geometry_file {
            return self.ensemble_from_file(file, None);
        }
        let g = self.raw.geometry.as_ref().ok_or_else(|| self.missing("geometry"))?;
        let span = g.span();
        let g = g.get_ref();
        let need_n = || g.n.ok_or_else(|| src.at(span.clone(), "geometry needs n"));
        let spacing = || -> Result<f64, ConfigError> {
            let q = g.spacing.as_ref().ok_or_else(|| src.at(span.clone(), "geometry needs spacing"))?;
            src.positive(q, Dim::Length)
        };
        let mut spec = match g.kind.get_ref().as_str() {
            "chain" => GeometrySpec::chain(need_n()?, spacing()?),
            "lattice" => GeometrySpec::lattice(need_n()?, spacing()?),
            "slab" => {
                let dims = g.slab.as_ref().ok_or_else(|| src.at(span.clone(), "slab geometry needs slab = [x, y, z]"))?;
                let mut slab = [0.0; 3];
                for (k, q) in dims.iter().enumerate() {
                    slab[k] = src.positive(q, Dim::Length)?;
                }
                let density = match &g.density {
                    Some(q) => src.positive(q, Dim::Density)?,
                    None => return Err(src.at(span.clone(), "slab geometry needs density").into()),
                };
                GeometrySpec { n: g.n, ..GeometrySpec::slab(slab, density, g.seed.unwrap_or(self.seed)) }
            }
            "uniform" => {
                let q = g.coupling.as_ref().ok_or_else(|| src.at(span.clone(), "uniform geometry needs coupling"))?;
                return Ok(SpinEnsemble::uniform(need_n()?, src.quantity(q, Dim::Frequency)?));
            }
            "file" => {
                let f = g.file.as_ref().ok_or_else(|| src.at(span.clone(), "file geometry needs file"))?;
                let density = g.density.as_ref().map(|q| src.positive(q, Dim::Density)).transpose()?;
                return self.ensemble_from_file(&self.base_dir.join(f), density);
            }
            other => {
                return Err(src
                    .at(g.kind.span(), format!("unknown geometry kind '{other}' (chain, lattice, slab, uniform, file)"))
                    .into())
            }
        };
        if let Some(q) = &g.r_min {
            spec.r_min = src.quantity(q, Dim::Length)?;
        }
        Ok(SpinEnsemble::place(&spec)?)
    }

    fn ensemble_from_file(&self, path: &Path, density: Option<f64>) -> Result<SpinEnsemble, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        let positions = geometry::read_positions(&text)?;
        Ok(SpinEnsemble::from_positions(positions, SpinAxis::Z, density.unwrap_or(0.0), GeometryKind::Custom)?)
    }

    fn noise(&self) -> Result<Option<(NoiseModel, usize)>, CliError> {
        let Some(n) = &self.raw.noise else { return Ok(None) };
        let src = self.src();
        let n = n.get_ref();
        let gamma = src.quantity(&n.gamma, Dim::Frequency)?;
        let tau_c = src.positive(&n.tau_c, Dim::Time)?;
        let mode = match &n.mode {
            Some(m) => NoiseMode::parse(m.get_ref()).map_err(|e| src.at(m.span(), e.to_string()))?,
            None => NoiseMode::PerSpin,
        };
        Ok(Some((NoiseModel::new(gamma, tau_c, mode)?, n.trajectories.unwrap_or(200))))
    }

    fn variants(&self) -> Result<Vec<Variant>, CliError> {
        let src = self.src();
        match self.raw.analysis.as_ref().and_then(|a| a.variants.as_ref()) {
            None => Ok(vec![Variant::OneAxis, Variant::TwoAxis]),
            Some(list) => list
                .iter()
                .map(|v| Variant::parse(v.get_ref()).map_err(|e| src.at(v.span(), e.to_string()).into()))
                .collect(),
        }
    }

    fn sensitivity(&self) -> Result<(SensitivityConfig, Vec<Scheme>), CliError> {
        let src = self.src();
        let s = self.raw.sensitivity.as_ref().ok_or_else(|| self.missing("sensitivity"))?;
        let s = s.get_ref();
        let tau = src.positive(&s.tau, Dim::Time)?;
        let mut cfg = SensitivityConfig {
            volume: src.positive(&s.volume, Dim::Volume)?,
            conversion: s.conversion,
            contrast: s.contrast,
            t2: src.positive(&s.t2, Dim::Time)?,
            tau,
            alpha_tilde: s.alpha_factor.unwrap_or(10.0) * nvsqueeze::constants::j0().powi(6) * tau.powi(4),
            gap_factor: s.gap_factor.unwrap_or(SensitivityConfig::default().gap_factor),
            ..Default::default()
        };
        if let Some(q) = &s.density {
            cfg.density = src.positive(q, Dim::Density)?;
        }
        if let Some(m) = &s.mode {
            cfg.mode = Mode::parse(m.get_ref()).map_err(|e| src.at(m.span(), e.to_string()))?;
        }
        let schemes = match &s.schemes {
            None => Scheme::ALL.to_vec(),
            Some(list) => list
                .iter()
                .map(|x| Scheme::parse(x.get_ref()).map_err(|e| src.at(x.span(), e.to_string())))
                .collect::<Result<_, _>>()?,
        };
        Ok((cfg, schemes))
    }
}

fn f(x: f64) -> String {
    format!("{x:.9e}")
}

/// Output text and, if a numerical contract failed, the reason.
pub struct Outcome {
    pub text: String,
    pub violation: Option<String>,
}

impl From<String> for Outcome {
    fn from(text: String) -> Self {
        Outcome { text, violation: None }
    }
}

pub fn run(cmd: Command, ctx: &Context) -> Result<Outcome, CliError> {
    let mut out = ctx.header(cmd);
    match cmd {
        Command::Simulate => simulate(ctx, &mut out).map(|_| out.into()),
        Command::VerifySequence => verify_sequence(ctx, out),
        Command::Gap => gap(ctx, &mut out).map(|_| out.into()),
        Command::Squeeze => squeeze(ctx, &mut out).map(|_| out.into()),
        Command::Sensitivity => sensitivity(ctx, &mut out).map(|_| out.into()),
        Command::Sweep => sweep(ctx, &mut out).map(|_| out.into()),
        Command::ProjectCheck => project_check(ctx, &mut out).map(|_| out.into()),
    }
}

fn simulate(ctx: &Context, out: &mut String) -> Result<(), CliError> {
    let src = ctx.src();
    let ens = ctx.ensemble()?;
    let s = ctx.raw.sequence.as_ref().ok_or_else(|| ctx.missing("sequence"))?.get_ref();
    let noise = ctx.noise()?;
    let base = SequenceRunConfig {
        tau: src.positive(&s.tau, Dim::Time)?,
        cycles: s.cycles.unwrap_or(12),
        target_cycle: s.target_cycle.unwrap_or(6.0),
        eps: s.eps,
        noise: noise.map(|n| n.0),
        n_traj: noise.map_or(1, |n| n.1),
        seed: ctx.seed,
        propagation: s.propagation.as_ref().map_or("average".into(), |p| p.get_ref().clone()),
        ..Default::default()
    };
    let mut rows = String::new();
    for variant in ctx.variants()? {
        let run = experiment::run_sequence(&ens, &SequenceRunConfig { variant, ..base.clone() })?;
        let _ = writeln!(
            out,
            "# {} eps {} chi_per_cycle {} cycle_time_us {}",
            variant.label(),
            f(run.eps),
            f(run.chi_per_cycle),
            f(run.cycle_time)
        );
        for r in &run.records {
            let opt = |x: Option<f64>| x.map(f).unwrap_or_default();
            let _ = writeln!(
                rows,
                "{},{},{},{},{},{},{},{}",
                variant.label(),
                r.cycle,
                f(r.time),
                f(r.xi2_noiseless),
                opt(r.xi2_noisy),
                f(r.leakage_noiseless),
                opt(r.leakage_noisy.map(|e| e.mean)),
                opt(r.leakage_noisy.map(|e| e.std_err)),
            );
        }
    }
    out.push_str("variant,cycle,time_us,xi2_noiseless,xi2_noisy,leakage_noiseless,leakage_noisy,leakage_noisy_se\n");
    out.push_str(&rows);
    Ok(())
}

fn verify_sequence(ctx: &Context, mut out: String) -> Result<Outcome, CliError> {
    let src = ctx.src();
    let ens = ctx.ensemble()?;
    let s = ctx.raw.sequence.as_ref().ok_or_else(|| ctx.missing("sequence"))?;
    let span = s.span();
    let s = s.get_ref();
    let name = s.template.as_ref().ok_or_else(|| src.at(span, "verify-sequence needs a template"))?;
    let template = sequences::templates().get(name.get_ref()).map_err(|e| src.at(name.span(), e.to_string()))?;
    let tau = src.positive(&s.tau, Dim::Time)?;
    let eps = s.eps.unwrap_or(0.0);
    let seq = template.build(&SequenceParams { tau, eps })?;
    let hzz = hamiltonians::h_ising(&ens)?;
    let frames = sequences::toggling_frames(&seq, &hzz)?;
    let [h1, h2, h3] = sequences::magnus_terms(&frames)?;
    let field = sequences::effective_field(&seq, SpinAxis::Z, FieldModulation::EchoSynchronous);
    let norm = hzz.norm();
    out.push_str("quantity,value\n");
    let mut row = |k: &str, v: String| {
        let _ = writeln!(out, "{k},{v}");
    };
    row("template", name.get_ref().clone());
    row("pulses", seq.n_pulses().to_string());
    row("cycle_time_us", f(seq.cycle_time()));
    row("cyclic", seq.is_cyclic().to_string());
    let mut violation = None;
    if let Some(variant) = template.variant() {
        let fit = sequences::calibrate_epsilon(&h1, &ens, variant)?;
        row("eps_fit", f(fit.eps));
        row("scale", f(fit.scale));
        row("fit_relative_residual", f(fit.relative_residual));
        if fit.relative_residual > 1e-6 {
            violation = Some(format!("first-order fit residual {:.3e} exceeds 1e-6", fit.relative_residual));
        }
    }
    let r2 = h2.norm() / norm;
    row("h2_relative_norm", f(r2));
    row("h3_relative_norm", f(h3.norm() / norm));
    row("field_x", f(field[0]));
    row("field_y", f(field[1]));
    row("field_z", f(field[2]));
    let perp = SpinAxis::from_array(sequences::effective_field(&seq, SpinAxis::Z, FieldModulation::EchoSynchronous))
        .map(|a| squeezing::perpendicular_pair(a.components()).0)
        .unwrap_or([1.0, 0.0, 0.0]);
    row("moment_t6", f(sequences::moment_t6(&h3, SpinAxis::from_array(perp)?)?));
    if template.variant().is_some() && r2 > 1e-9 && violation.is_none() {
        violation = Some(format!("second-order average Hamiltonian {r2:.3e} exceeds 1e-9 of ‖H‖"));
    }
    Ok(Outcome { text: out, violation })
}

fn gap(ctx: &Context, out: &mut String) -> Result<(), CliError> {
    let ens = ctx.ensemble()?;
    let n = ens.n();
    let g = geometry::gap_exact(&ens)?;
    let d_mean = geometry::coupling_mean(&ens);
    let d_median = geometry::coupling_median(&ens);
    out.push_str("quantity,value\n");
    let _ = writeln!(out, "n,{n}");
    let _ = writeln!(out, "gap_exact,{}", f(g.gap));
    let _ = writeln!(out, "protected_sign,{}", f(g.sign));
    let _ = writeln!(out, "gap_warning,{}", g.warning);
    let kind = match ens.kind {
        GeometryKind::Chain1D => Some(("chain-dipolar", GapKind::Chain1DDipolar)),
        GeometryKind::Lattice2D => Some(("lattice-dipolar", GapKind::Lattice2DDipolar)),
        GeometryKind::RandomSlab3D if ens.density > 0.0 => Some(("random-3d", GapKind::Random { dim: 3, n_s: ens.density })),
        _ => None,
    };
    if let Some((label, kind)) = kind {
        // d0 at the nearest-neighbour scale of the geometry
        let d0 = ens.couplings.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let _ = writeln!(out, "gap_estimate_kind,{label}");
        let _ = writeln!(out, "gap_estimate,{}", f(geometry::gap_estimate(kind, n, d0)?));
    }
    let _ = writeln!(out, "coupling_mean,{}", f(d_mean));
    let _ = writeln!(out, "coupling_median,{}", f(d_median));
    Ok(())
}

fn squeeze(ctx: &Context, out: &mut String) -> Result<(), CliError> {
    let src = ctx.src();
    let sq = ctx.raw.squeeze.as_ref().ok_or_else(|| ctx.missing("squeeze"))?;
    let span = sq.span();
    let sq = sq.get_ref();
    let d = src.positive(&sq.coupling, Dim::Frequency)?;
    if sq.points == 0 || !(sq.chi_max > 0.0) {
        return Err(src.at(span, "squeeze needs points ≥ 1 and chi_max > 0").into());
    }
    let noise = ctx.noise()?.map(|n| n.0);
    let basis = Basis::Dicke(sq.n);
    let h = hamiltonians::ideal_oat(d, sq.n)?;
    let psi0 = StateVector::coherent(SpinAxis::X, basis)?;
    let eig = nvsqueeze::linalg::Eigensystem::new(h.data());
    out.push_str("t_us,chi,jx,nu_opt,xi2_ideal,xi2_simulated,xi2_noisy_unprotected,xi2_noisy_protected,protected_clamped\n");
    for k in 1..=sq.points {
        let chi = sq.chi_max * k as f64 / sq.points as f64;
        let t = chi / d;
        let ideal = squeezing::xi2_ideal(sq.n, chi)?;
        let jx = squeezing::oat_observables(sq.n, chi)?.jx;
        let nu = squeezing::nu_optimal(sq.n, chi)?.0;
        let state = StateVector::new(eig.apply(psi0.amps(), t), basis)?;
        let simulated = squeezing::xi2_metrological(&state)?.xi2;
        let (un, pr, cl) = match noise {
            Some(nm) => {
                let gt = nm.gamma * t;
                let p = squeezing::xi2_noisy_protected(sq.n, chi, gt)?;
                (f(squeezing::xi2_noisy_unprotected(sq.n, chi, gt)?), f(p.value), p.clamped.to_string())
            }
            None => (String::new(), String::new(), String::new()),
        };
        let _ = writeln!(out, "{},{},{},{},{},{},{un},{pr},{cl}", f(t), f(chi), f(jx), f(nu), f(ideal), f(simulated));
    }
    Ok(())
}

fn point_row(out: &mut String, p: &SchemePoint) {
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{}",
        p.scheme.name(),
        f(p.density / PER_CM3_TO_PER_NM3),
        f(p.n),
        f(p.total),
        f(p.xi),
        f(p.eta),
        p.xi_source
    );
}

const SENSITIVITY_HEADER: &str = "scheme,n_s[cm^-3],N,T_opt[us],xi,eta[T/sqrtHz],xi_source\n";

fn sensitivity(ctx: &Context, out: &mut String) -> Result<(), CliError> {
    let (cfg, schemes) = ctx.sensitivity()?;
    out.push_str(SENSITIVITY_HEADER);
    for curve in magnetometry::density_sweep(&cfg, &[cfg.density], &schemes)? {
        for p in &curve.points {
            point_row(out, p);
        }
    }
    Ok(())
}

fn sweep(ctx: &Context, out: &mut String) -> Result<(), CliError> {
    let src = ctx.src();
    let (cfg, schemes) = ctx.sensitivity()?;
    let sw = ctx.raw.sweep.as_ref().ok_or_else(|| ctx.missing("sweep"))?;
    let span = sw.span();
    let sw = sw.get_ref();
    let lo = src.positive(&sw.density_min, Dim::Density)?;
    let hi = src.positive(&sw.density_max, Dim::Density)?;
    if sw.points == 0 || hi < lo {
        return Err(src.at(span, "sweep needs points ≥ 1 and density_max ≥ density_min").into());
    }
    let grid = magnetometry::log_grid(lo, hi, sw.points);
    out.push_str(SENSITIVITY_HEADER);
    for curve in magnetometry::density_sweep(&cfg, &grid, &schemes)? {
        for p in &curve.points {
            point_row(out, p);
        }
    }
    Ok(())
}

fn project_check(ctx: &Context, out: &mut String) -> Result<(), CliError> {
    let ens = ctx.ensemble()?;
    out.push_str("target,c_quad,expected_c_quad,c_id,relative_residual\n");
    for (label, target) in [("ising", Projected::Ising), ("double-quantum", Projected::DoubleQuantum)] {
        let fit = hamiltonians::project_check(&ens, target)?;
        let _ = writeln!(
            out,
            "{label},{},{},{},{}",
            f(fit.c_quad),
            f(fit.expected_c_quad),
            f(fit.c_id),
            f(fit.relative_residual)
        );
    }
    Ok(())
}
