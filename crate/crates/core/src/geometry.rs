//! Spin placement, dipolar couplings, coupling statistics and gap estimates.

use crate::constants;
use crate::error::{Error, Result};
use crate::hamiltonians;
use crate::linalg::Eigensystem;
use crate::spin_ops::{collective_op, Basis, SpinAxis, DEFAULT_N_MAX};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeometryKind {
    Chain1D,
    Lattice2D,
    RandomSlab3D,
    /// Positions read from a file or couplings given directly.
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometrySpec {
    pub kind: GeometryKind,
    /// Spin count; for the random slab, `None` means round(n_s·V).
    pub n: Option<usize>,
    /// Nearest-neighbour spacing for regular kinds (nm).
    pub spacing: f64,
    /// Slab extent L_x, L_y, L_z (nm).
    pub slab: [f64; 3],
    /// Density (nm⁻³).
    pub density: f64,
    pub seed: u64,
    /// Exclusion radius for random placement (nm).
    pub r_min: f64,
    pub quant_axis: SpinAxis,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        GeometrySpec {
            kind: GeometryKind::RandomSlab3D,
            n: None,
            spacing: 10.0,
            slab: [30.0, 30.0, 9.0],
            density: 1e-3,
            seed: 1,
            r_min: 0.5,
            quant_axis: SpinAxis::Z,
        }
    }
}

impl GeometrySpec {
    pub fn chain(n: usize, spacing: f64) -> Self {
        GeometrySpec { kind: GeometryKind::Chain1D, n: Some(n), spacing, ..Default::default() }
    }

    pub fn lattice(n: usize, spacing: f64) -> Self {
        GeometrySpec { kind: GeometryKind::Lattice2D, n: Some(n), spacing, ..Default::default() }
    }

    pub fn slab(slab: [f64; 3], density: f64, seed: u64) -> Self {
        GeometrySpec { kind: GeometryKind::RandomSlab3D, slab, density, seed, ..Default::default() }
    }

    pub fn spin_count(&self) -> Result<usize> {
        match (self.kind, self.n) {
            (_, Some(n)) => Ok(n),
            (GeometryKind::RandomSlab3D, None) => {
                let v = self.slab.iter().product::<f64>();
                Ok((self.density * v).round() as usize)
            }
            _ => Err(Error::param("spin count required for regular geometries")),
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        match self.kind {
            GeometryKind::Chain1D | GeometryKind::Lattice2D if !positive(self.spacing) => {
                Err(Error::param("spacing must be positive"))
            }
            GeometryKind::RandomSlab3D if !self.slab.iter().all(|&l| positive(l)) => {
                Err(Error::param("slab dimensions must be positive"))
            }
            GeometryKind::RandomSlab3D if self.n.is_none() && !positive(self.density) => {
                Err(Error::param("density must be positive"))
            }
            GeometryKind::Custom => Err(Error::param("custom geometries are loaded, not placed")),
            _ if self.r_min < 0.0 => Err(Error::param("r_min must be non-negative")),
            _ => Ok(()),
        }
    }
}

pub type Position = [f64; 3];

#[derive(Clone, Debug)]
pub struct SpinEnsemble {
    pub positions: Vec<Position>,
    pub quant_axis: SpinAxis,
    /// d_lj in rad/μs; symmetric with zero diagonal.
    pub couplings: DMatrix<f64>,
    /// Density in nm⁻³ (0 when unknown).
    pub density: f64,
    pub kind: GeometryKind,
}

impl SpinEnsemble {
    pub fn n(&self) -> usize {
        self.couplings.nrows()
    }

    pub fn from_positions(
        positions: Vec<Position>,
        quant_axis: SpinAxis,
        density: f64,
        kind: GeometryKind,
    ) -> Result<Self> {
        let couplings = dipolar_couplings(&positions, quant_axis)?;
        Ok(SpinEnsemble { positions, quant_axis, couplings, density, kind })
    }

    /// Ensemble defined only by its coupling matrix.
    pub fn from_couplings(couplings: DMatrix<f64>) -> Result<Self> {
        let n = couplings.nrows();
        if couplings.ncols() != n || n == 0 {
            return Err(Error::param("coupling matrix must be square and nonempty"));
        }
        for i in 0..n {
            if couplings[(i, i)] != 0.0 {
                return Err(Error::param("coupling matrix must have zero diagonal"));
            }
            for j in 0..i {
                if (couplings[(i, j)] - couplings[(j, i)]).abs() > 1e-12 * couplings[(i, j)].abs().max(1.0) {
                    return Err(Error::param("coupling matrix must be symmetric"));
                }
            }
        }
        Ok(SpinEnsemble {
            positions: Vec::new(),
            quant_axis: SpinAxis::Z,
            couplings,
            density: 0.0,
            kind: GeometryKind::Custom,
        })
    }

    /// Every pair coupled with strength d.
    pub fn uniform(n: usize, d: f64) -> Self {
        let couplings = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { d });
        SpinEnsemble::from_couplings(couplings).expect("uniform couplings are valid")
    }

    pub fn place(spec: &GeometrySpec) -> Result<Self> {
        let positions = place_spins(spec)?;
        SpinEnsemble::from_positions(positions, spec.quant_axis, spec.density, spec.kind)
    }

    /// Coupling matrix with every entry multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut e = self.clone();
        e.couplings *= s;
        e
    }
}

pub fn place_spins(spec: &GeometrySpec) -> Result<Vec<Position>> {
    spec.validate()?;
    let n = spec.spin_count()?;
    if n == 0 {
        return Err(Error::param("geometry contains no spins"));
    }
    match spec.kind {
        GeometryKind::Chain1D => Ok((0..n).map(|k| [k as f64 * spec.spacing, 0.0, 0.0]).collect()),
        GeometryKind::Lattice2D => {
            let side = (n as f64).sqrt().ceil() as usize;
            Ok((0..n)
                .map(|k| [(k % side) as f64 * spec.spacing, (k / side) as f64 * spec.spacing, 0.0])
                .collect())
        }
        GeometryKind::RandomSlab3D => {
            const MAX_TRIES: usize = 100_000;
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let mut out: Vec<Position> = Vec::with_capacity(n);
            let r2 = spec.r_min * spec.r_min;
            while out.len() < n {
                let mut placed = false;
                for _ in 0..MAX_TRIES {
                    let p = [
                        rng.random::<f64>() * spec.slab[0],
                        rng.random::<f64>() * spec.slab[1],
                        rng.random::<f64>() * spec.slab[2],
                    ];
                    if out.iter().all(|q| dist2(&p, q) > r2) {
                        out.push(p);
                        placed = true;
                        break;
                    }
                }
                if !placed {
                    return Err(Error::Placement(format!(
                        "could not place spin {} of {} with r_min = {} nm",
                        out.len() + 1,
                        n,
                        spec.r_min
                    )));
                }
            }
            Ok(out)
        }
        GeometryKind::Custom => unreachable!("rejected by validate"),
    }
}

fn dist2(a: &Position, b: &Position) -> f64 {
    (0..3).map(|k| (a[k] - b[k]).powi(2)).sum()
}

/// d_lj = J_0 (3cos²θ − 1)/r³ in rad/μs for positions in nm.
pub fn dipolar_couplings(positions: &[Position], axis: SpinAxis) -> Result<DMatrix<f64>> {
    let n = positions.len();
    if n < 1 {
        return Err(Error::param("at least one spin required"));
    }
    let j0 = constants::j0();
    let u = axis.components();
    let mut d = DMatrix::zeros(n, n);
    for l in 0..n {
        for j in (l + 1)..n {
            let r: Vec<f64> = (0..3).map(|k| positions[j][k] - positions[l][k]).collect();
            let r2: f64 = r.iter().map(|x| x * x).sum();
            if r2 < 1e-24 {
                return Err(Error::CoincidentSpins(l, j));
            }
            let rn = r2.sqrt();
            let cos = (0..3).map(|k| r[k] * u[k]).sum::<f64>() / rn;
            let v = j0 * (3.0 * cos * cos - 1.0) / (r2 * rn);
            d[(l, j)] = v;
            d[(j, l)] = v;
        }
    }
    Ok(d)
}

/// D = (2/N) Σ_{l<j} d_lj.
pub fn coupling_mean(ensemble: &SpinEnsemble) -> f64 {
    let n = ensemble.n();
    if n == 0 {
        return 0.0;
    }
    ensemble.couplings.sum() / n as f64
}

/// Median of |d_lj| over pairs.
pub fn coupling_median(ensemble: &SpinEnsemble) -> f64 {
    let n = ensemble.n();
    let mut v: Vec<f64> = (0..n).flat_map(|l| ((l + 1)..n).map(move |j| (l, j))).map(|(l, j)| ensemble.couplings[(l, j)].abs()).collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// D ≈ (2π/3) d_0 r_0³ n_s / (N + 2).
pub fn coupling_median_heuristic(n_s: f64, r0: f64, d0: f64, n: usize) -> Result<f64> {
    if !(n_s > 0.0 && r0 > 0.0 && d0 > 0.0) {
        return Err(Error::param("median heuristic needs positive inputs"));
    }
    Ok(2.0 * PI / 3.0 * d0 * r0.powi(3) * n_s / (n as f64 + 2.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GapKind {
    Chain1DNearest,
    Chain1DDipolar,
    Lattice2DNearest,
    Lattice2DDipolar,
    /// Random placement in `dim` dimensions with density `n_s` (nm⁻dim).
    Random { dim: u32, n_s: f64 },
}

impl GapKind {
    pub fn parse(name: &str, n_s: f64) -> Result<Self> {
        Ok(match name {
            "chain-nn" => GapKind::Chain1DNearest,
            "chain-dipolar" => GapKind::Chain1DDipolar,
            "lattice-nn" => GapKind::Lattice2DNearest,
            "lattice-dipolar" => GapKind::Lattice2DDipolar,
            "random-2d" => GapKind::Random { dim: 2, n_s },
            "random-3d" => GapKind::Random { dim: 3, n_s },
            other => {
                return Err(Error::UnknownStrategy {
                    kind: "gap estimate",
                    name: other.to_string(),
                    available: "chain-nn, chain-dipolar, lattice-nn, lattice-dipolar, random-2d, random-3d".into(),
                })
            }
        })
    }
}

/// Order-of-magnitude gap scalings with unit coefficients. For the random
/// kind, `d0` multiplies (n_s/N)^{3/dim}.
pub fn gap_estimate(kind: GapKind, n: usize, d0: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::param("gap estimate needs at least two spins"));
    }
    let nf = n as f64;
    Ok(match kind {
        GapKind::Chain1DNearest => d0 / (nf * nf),
        GapKind::Chain1DDipolar => d0 / (nf * nf) * nf.ln(),
        GapKind::Lattice2DNearest => d0 / nf,
        GapKind::Lattice2DDipolar => d0 / nf.sqrt(),
        GapKind::Random { dim, n_s } => {
            if dim == 0 || n_s <= 0.0 {
                return Err(Error::param("random gap estimate needs dim ≥ 1 and positive density"));
            }
            d0 * (n_s / nf).powf(3.0 / dim as f64) * nf / 2.0
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapResult {
    /// Lowest J < N/2 energy minus the J = N/2 energy.
    pub gap: f64,
    /// Sign applied to the couplings (+1 or −1).
    pub sign: f64,
    /// True when the symmetric multiplet is not the ground manifold for
    /// either sign.
    pub warning: bool,
}

/// Exact gap above the J = N/2 multiplet of the Heisenberg Hamiltonian.
pub fn gap_exact(ensemble: &SpinEnsemble) -> Result<GapResult> {
    let n = ensemble.n();
    if n < 2 {
        return Err(Error::param("gap needs at least two spins"));
    }
    if n > DEFAULT_N_MAX {
        return Err(Error::TooManySpins { n, max: DEFAULT_N_MAX });
    }
    let basis = Basis::Full(n);
    let h = hamiltonians::h_heisenberg(ensemble)?;
    let eig = Eigensystem::new(h.data());
    let mut j2 = collective_op(SpinAxis::X, basis)?.matmul(&collective_op(SpinAxis::X, basis)?)?;
    for axis in [SpinAxis::Y, SpinAxis::Z] {
        let j = collective_op(axis, basis)?;
        j2 = j2.add_scaled(&j.matmul(&j)?, 1.0)?;
    }
    let jmax = n as f64 / 2.0;
    let target = jmax * (jmax + 1.0);
    let mut sym = Vec::new();
    let mut other = Vec::new();
    for k in 0..eig.values.len() {
        let v = eig.vectors.column(k);
        let val = (v.adjoint() * j2.data() * v)[(0, 0)].re;
        if (val - target).abs() < 0.5 {
            sym.push(eig.values[k]);
        } else {
            other.push(eig.values[k]);
        }
    }
    let e_sym = sym.iter().sum::<f64>() / sym.len() as f64;
    // Gap with couplings multiplied by s: the spectrum scales by s.
    let gap_for = |s: f64| {
        other.iter().map(|e| s * e).fold(f64::INFINITY, f64::min) - s * e_sym
    };
    let (plus, minus) = (gap_for(1.0), gap_for(-1.0));
    if plus > 0.0 {
        Ok(GapResult { gap: plus, sign: 1.0, warning: false })
    } else if minus > 0.0 {
        Ok(GapResult { gap: minus, sign: -1.0, warning: false })
    } else if plus >= minus {
        Ok(GapResult { gap: plus, sign: 1.0, warning: true })
    } else {
        Ok(GapResult { gap: minus, sign: -1.0, warning: true })
    }
}

/// Plain-text table: a `#` header followed by one `x y z` row per spin (nm).
pub fn write_positions(positions: &[Position]) -> String {
    let mut s = String::from("# x_nm y_nm z_nm\n");
    for p in positions {
        let _ = writeln!(s, "{:.12e} {:.12e} {:.12e}", p[0], p[1], p[2]);
    }
    s
}

pub fn read_positions(text: &str) -> Result<Vec<Position>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse { line: i + 1, msg: format!("expected 3 columns, found {}", fields.len()) });
        }
        let mut p = [0.0; 3];
        for (k, f) in fields.iter().enumerate() {
            p[k] = f.parse().map_err(|_| Error::Parse { line: i + 1, msg: format!("invalid number '{f}'") })?;
        }
        out.push(p);
    }
    if out.is_empty() {
        return Err(Error::Parse { line: 0, msg: "geometry file contains no spins".into() });
    }
    Ok(out)
}
