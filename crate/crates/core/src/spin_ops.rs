//! Operators and states for N spin-1/2 particles in the full 2^N space or
//! the (N+1)-dimensional symmetric (Dicke) subspace.
//!
//! Bit ordering: site 0 is the most significant bit of a full-basis index,
//! and a 0 bit means spin up (S_z = +1/2). The Dicke basis is ordered by
//! m = N/2, N/2 − 1, …, −N/2.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, Eigensystem, C64, I, ONE, ZERO};
use nalgebra::Matrix2;

/// Largest spin count accepted for dense full-basis operators.
pub const DEFAULT_N_MAX: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    Full(usize),
    Dicke(usize),
}

impl Basis {
    pub fn n(self) -> usize {
        match self {
            Basis::Full(n) | Basis::Dicke(n) => n,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Basis::Full(n) => 1 << n,
            Basis::Dicke(n) => n + 1,
        }
    }

    pub fn check(self) -> Result<()> {
        match self {
            Basis::Full(n) if n > DEFAULT_N_MAX => Err(Error::TooManySpins { n, max: DEFAULT_N_MAX }),
            _ if self.n() == 0 => Err(Error::param("spin count must be at least 1")),
            _ => Ok(()),
        }
    }
}

/// Unit vector in spin space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinAxis([f64; 3]);

impl SpinAxis {
    pub const X: SpinAxis = SpinAxis([1.0, 0.0, 0.0]);
    pub const Y: SpinAxis = SpinAxis([0.0, 1.0, 0.0]);
    pub const Z: SpinAxis = SpinAxis([0.0, 0.0, 1.0]);

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !(norm > 1e-15) || !norm.is_finite() {
            return Err(Error::param("spin axis must be a nonzero finite vector"));
        }
        Ok(SpinAxis([x / norm, y / norm, z / norm]))
    }

    pub fn from_array(v: [f64; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    pub fn neg(&self) -> SpinAxis {
        SpinAxis([-self.0[0], -self.0[1], -self.0[2]])
    }

    /// Spherical angles (θ from +z, φ from +x).
    pub fn angles(&self) -> (f64, f64) {
        let [x, y, z] = self.0;
        (z.clamp(-1.0, 1.0).acos(), y.atan2(x))
    }
}

#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    data: CMat,
    basis: Basis,
}

impl OperatorMatrix {
    pub fn new(data: CMat, basis: Basis) -> Result<Self> {
        if data.nrows() != basis.dim() || data.ncols() != basis.dim() {
            return Err(Error::param(format!(
                "matrix of size {}x{} does not match basis dimension {}",
                data.nrows(),
                data.ncols(),
                basis.dim()
            )));
        }
        Ok(OperatorMatrix { data, basis })
    }

    pub fn zeros(basis: Basis) -> Self {
        let d = basis.dim();
        OperatorMatrix { data: CMat::zeros(d, d), basis }
    }

    pub fn identity(basis: Basis) -> Self {
        let d = basis.dim();
        OperatorMatrix { data: CMat::identity(d, d), basis }
    }

    pub fn data(&self) -> &CMat {
        &self.data
    }

    pub fn into_data(self) -> CMat {
        self.data
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn hermiticity_error(&self) -> f64 {
        linalg::hermiticity_error(&self.data)
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let err = self.hermiticity_error();
        if err > 1e-12 {
            return Err(Error::NotHermitian(err));
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        linalg::frobenius(&self.data)
    }

    pub fn scaled(&self, s: f64) -> Self {
        OperatorMatrix { data: self.data.scale(s), basis: self.basis }
    }

    fn same_basis(&self, other: &Self) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch(self.basis, other.basis));
        }
        Ok(())
    }

    /// self + s·other
    pub fn add_scaled(&self, other: &Self, s: f64) -> Result<Self> {
        self.same_basis(other)?;
        Ok(OperatorMatrix { data: &self.data + other.data.scale(s), basis: self.basis })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.same_basis(other)?;
        Ok(OperatorMatrix { data: &self.data * &other.data, basis: self.basis })
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.same_basis(other)?;
        Ok(OperatorMatrix { data: linalg::commutator(&self.data, &other.data), basis: self.basis })
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    /// Frobenius distance ‖A − B‖.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.same_basis(other)?;
        Ok(linalg::frobenius(&(&self.data - &other.data)))
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if self.basis != state.basis {
            return Err(Error::BasisMismatch(self.basis, state.basis));
        }
        Ok(StateVector { amps: &self.data * &state.amps, basis: self.basis })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: CVec,
    basis: Basis,
}

impl StateVector {
    pub fn new(amps: CVec, basis: Basis) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::param(format!(
                "state of length {} does not match basis dimension {}",
                amps.len(),
                basis.dim()
            )));
        }
        Ok(StateVector { amps, basis })
    }

    pub fn basis_state(basis: Basis, index: usize) -> Result<Self> {
        basis.check()?;
        if index >= basis.dim() {
            return Err(Error::param("basis index out of range"));
        }
        let mut amps = CVec::zeros(basis.dim());
        amps[index] = ONE;
        Ok(StateVector { amps, basis })
    }

    pub fn amps(&self) -> &CVec {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut CVec {
        &mut self.amps
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        self.amps.unscale_mut(n);
        self
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch(self.basis, other.basis));
        }
        Ok(self.amps.dotc(&other.amps))
    }

    /// Coherent spin state with every spin along `axis`.
    pub fn coherent(axis: SpinAxis, basis: Basis) -> Result<Self> {
        basis.check()?;
        let (theta, phi) = axis.angles();
        let a = C64::new((theta / 2.0).cos(), 0.0);
        let b = C64::from_polar((theta / 2.0).sin(), phi);
        let n = basis.n();
        let amps = match basis {
            Basis::Full(_) => {
                let dim = basis.dim();
                CVec::from_iterator(
                    dim,
                    (0..dim).map(|idx| {
                        let downs = idx.count_ones() as i32;
                        a.powi(n as i32 - downs) * b.powi(downs)
                    }),
                )
            }
            Basis::Dicke(_) => {
                // Amplitude of k flipped spins: √C(N,k) a^{N−k} b^k, in logs for large N.
                let mut ln_binom = 0.0f64;
                let (la, lb) = (a.norm().ln(), b.norm().ln());
                let (pa, pb) = (a.arg(), b.arg());
                CVec::from_iterator(
                    n + 1,
                    (0..=n).map(|k| {
                        if k > 0 {
                            ln_binom += ((n - k + 1) as f64).ln() - (k as f64).ln();
                        }
                        let nk = (n - k) as f64;
                        let kk = k as f64;
                        let mag_ln = 0.5 * ln_binom
                            + if nk > 0.0 { nk * la } else { 0.0 }
                            + if kk > 0.0 { kk * lb } else { 0.0 };
                        C64::from_polar(mag_ln.exp(), nk * pa + kk * pb)
                    }),
                )
            }
        };
        Ok(StateVector { amps, basis })
    }

    /// Embed a Dicke-basis state into the full space.
    pub fn to_full(&self) -> Result<StateVector> {
        match self.basis {
            Basis::Full(_) => Ok(self.clone()),
            Basis::Dicke(n) => {
                let w = dicke_isometry(n)?;
                Ok(StateVector { amps: &w * &self.amps, basis: Basis::Full(n) })
            }
        }
    }
}

pub fn pauli_x() -> Matrix2<C64> {
    Matrix2::new(ZERO, ONE, ONE, ZERO)
}
pub fn pauli_y() -> Matrix2<C64> {
    Matrix2::new(ZERO, -I, I, ZERO)
}
pub fn pauli_z() -> Matrix2<C64> {
    Matrix2::new(ONE, ZERO, ZERO, -ONE)
}

/// 𝟙⊗…⊗op⊗…⊗𝟙 with `op` acting on `site`.
pub fn embed_single(op: &Matrix2<C64>, site: usize, n: usize) -> Result<OperatorMatrix> {
    let basis = Basis::Full(n);
    basis.check()?;
    if site >= n {
        return Err(Error::SiteOutOfRange { site, n });
    }
    let dim = basis.dim();
    let shift = n - 1 - site;
    let mut data = CMat::zeros(dim, dim);
    for col in 0..dim {
        let b = (col >> shift) & 1;
        for b2 in 0..2 {
            let v = op[(b2, b)];
            if v != ZERO {
                let row = (col & !(1 << shift)) | (b2 << shift);
                data[(row, col)] += v;
            }
        }
    }
    Ok(OperatorMatrix { data, basis })
}

/// Spin-operator components S_a as 2x2 matrices (σ/2).
pub fn spin_half(axis: SpinAxis) -> Matrix2<C64> {
    let [x, y, z] = axis.components();
    (pauli_x() * C64::new(x, 0.0) + pauli_y() * C64::new(y, 0.0) + pauli_z() * C64::new(z, 0.0))
        * C64::new(0.5, 0.0)
}

/// J_axis = Σ_k S_axis^k.
pub fn collective_op(axis: SpinAxis, basis: Basis) -> Result<OperatorMatrix> {
    basis.check()?;
    let [x, y, z] = axis.components();
    let dim = basis.dim();
    let mut data = CMat::zeros(dim, dim);
    for col in 0..dim {
        let mut e = CVec::zeros(dim);
        e[col] = ONE;
        let mut out = CVec::zeros(dim);
        for (a, c) in [(0usize, x), (1, y), (2, z)] {
            if c != 0.0 {
                out += apply_j(a, &e, basis) * C64::new(c, 0.0);
            }
        }
        data.set_column(col, &out);
    }
    Ok(OperatorMatrix { data, basis })
}

/// J_a|ψ⟩ for a ∈ {0: x, 1: y, 2: z} without building a matrix.
pub fn apply_j(a: usize, psi: &CVec, basis: Basis) -> CVec {
    let dim = basis.dim();
    let mut out = CVec::zeros(dim);
    match basis {
        Basis::Full(n) => {
            for idx in 0..dim {
                let amp = psi[idx];
                if amp == ZERO {
                    continue;
                }
                match a {
                    2 => {
                        let downs = idx.count_ones() as f64;
                        out[idx] += amp * (0.5 * (n as f64 - 2.0 * downs));
                    }
                    _ => {
                        for k in 0..n {
                            let mask = 1 << k;
                            let target = idx ^ mask;
                            if a == 0 {
                                out[target] += amp * 0.5;
                            } else if idx & mask == 0 {
                                out[target] += amp * C64::new(0.0, 0.5);
                            } else {
                                out[target] += amp * C64::new(0.0, -0.5);
                            }
                        }
                    }
                }
            }
        }
        Basis::Dicke(n) => {
            let j = n as f64 / 2.0;
            for k in 0..=n {
                let amp = psi[k];
                if amp == ZERO {
                    continue;
                }
                let m = j - k as f64;
                match a {
                    2 => out[k] += amp * m,
                    _ => {
                        // J+ raises m (index k−1), J− lowers m (index k+1).
                        let up = if k > 0 { (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt() } else { 0.0 };
                        let dn = if k < n { (j * (j + 1.0) - m * (m - 1.0)).max(0.0).sqrt() } else { 0.0 };
                        if a == 0 {
                            if k > 0 {
                                out[k - 1] += amp * (0.5 * up);
                            }
                            if k < n {
                                out[k + 1] += amp * (0.5 * dn);
                            }
                        } else {
                            // J_y = (J+ − J−)/(2i)
                            if k > 0 {
                                out[k - 1] += amp * C64::new(0.0, -0.5 * up);
                            }
                            if k < n {
                                out[k + 1] += amp * C64::new(0.0, 0.5 * dn);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// First and second moments of the collective spin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollectiveMoments {
    /// ⟨J_a⟩
    pub mean: [f64; 3],
    /// ⟨(J_aJ_b + J_bJ_a)/2⟩
    pub second: [[f64; 3]; 3],
}

impl CollectiveMoments {
    pub fn of(state: &StateVector) -> Self {
        let psi = state.amps();
        let norm2 = psi.norm_squared();
        let v: Vec<CVec> = (0..3).map(|a| apply_j(a, psi, state.basis())).collect();
        let mut mean = [0.0; 3];
        let mut second = [[0.0; 3]; 3];
        for a in 0..3 {
            mean[a] = psi.dotc(&v[a]).re / norm2;
            for b in 0..3 {
                second[a][b] = v[a].dotc(&v[b]).re / norm2;
            }
        }
        CollectiveMoments { mean, second }
    }

    /// ⟨u·J⟩
    pub fn mean_along(&self, u: [f64; 3]) -> f64 {
        (0..3).map(|a| u[a] * self.mean[a]).sum()
    }

    /// Cov(u·J, w·J), symmetrized.
    pub fn covariance(&self, u: [f64; 3], w: [f64; 3]) -> f64 {
        let mut c = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                c += u[a] * w[b] * (self.second[a][b] - self.mean[a] * self.mean[b]);
            }
        }
        c
    }
}

/// Columns are the symmetric states |N/2, m⟩ in the full basis, m descending.
pub fn dicke_isometry(n: usize) -> Result<CMat> {
    let full = Basis::Full(n);
    full.check()?;
    let dim = full.dim();
    let mut w = CMat::zeros(dim, n + 1);
    let mut counts = vec![0usize; n + 1];
    for idx in 0..dim {
        counts[idx.count_ones() as usize] += 1;
    }
    for idx in 0..dim {
        let k = idx.count_ones() as usize;
        w[(idx, k)] = C64::new(1.0 / (counts[k] as f64).sqrt(), 0.0);
    }
    Ok(w)
}

/// Orthogonal projector onto the J = N/2 subspace in the full basis.
pub fn symmetric_projector(n: usize) -> Result<OperatorMatrix> {
    let w = dicke_isometry(n)?;
    Ok(OperatorMatrix { data: &w * w.adjoint(), basis: Basis::Full(n) })
}

/// P·H·P written in the Dicke basis.
pub fn dicke_restrict(op: &OperatorMatrix) -> Result<OperatorMatrix> {
    let n = match op.basis() {
        Basis::Full(n) => n,
        b => return Err(Error::BasisMismatch(b, Basis::Full(b.n()))),
    };
    let w = dicke_isometry(n)?;
    Ok(OperatorMatrix { data: w.adjoint() * op.data() * &w, basis: Basis::Dicke(n) })
}

/// Fraction of the state's weight outside the symmetric subspace.
pub fn leakage(state: &StateVector) -> Result<f64> {
    match state.basis() {
        Basis::Dicke(_) => Ok(0.0),
        Basis::Full(n) => {
            let w = dicke_isometry(n)?;
            let c = w.adjoint() * state.amps();
            Ok((1.0 - c.norm_squared() / state.amps().norm_squared()).max(0.0))
        }
    }
}

/// Exact propagation of a state under a time-independent Hamiltonian.
pub fn evolve(state: &StateVector, h: &OperatorMatrix, t: f64) -> Result<StateVector> {
    if state.basis() != h.basis() {
        return Err(Error::BasisMismatch(state.basis(), h.basis()));
    }
    h.ensure_hermitian()?;
    if t == 0.0 {
        return Ok(state.clone());
    }
    let eig = Eigensystem::new(h.data());
    Ok(StateVector { amps: eig.apply(state.amps(), t), basis: state.basis() })
}

/// ⟨ψ|A|ψ⟩ for Hermitian A.
pub fn expectation(state: &StateVector, op: &OperatorMatrix) -> Result<f64> {
    if state.basis() != op.basis() {
        return Err(Error::BasisMismatch(state.basis(), op.basis()));
    }
    op.ensure_hermitian()?;
    let v = op.data() * state.amps();
    let z = state.amps().dotc(&v) / state.amps().norm_squared();
    if z.im.abs() > 1e-10 * (1.0 + z.re.abs()) {
        return Err(Error::Contract(format!("expectation has imaginary part {:.3e}", z.im)));
    }
    Ok(z.re)
}

/// ⟨A²⟩ − ⟨A⟩², clamped at zero against round-off.
pub fn variance(state: &StateVector, op: &OperatorMatrix) -> Result<f64> {
    let mean = expectation(state, op)?;
    let v = op.data() * state.amps();
    let second = v.norm_squared() / state.amps().norm_squared();
    Ok((second - mean * mean).max(0.0))
}

/// Rotation e^{−iθ u·J} applied to a state. Full basis applies the
/// single-spin rotation site by site; Dicke basis exponentiates u·J.
pub fn rotate(state: &StateVector, axis: SpinAxis, angle: f64) -> Result<StateVector> {
    match state.basis() {
        Basis::Full(n) => {
            let r = single_rotation(axis, angle);
            Ok(StateVector { amps: apply_product(state.amps(), &vec![r; n], n), basis: state.basis() })
        }
        Basis::Dicke(_) => {
            let j = collective_op(axis, state.basis())?;
            evolve(state, &j, angle)
        }
    }
}

/// e^{−iθ u·σ/2} as a 2x2 matrix.
pub fn single_rotation(axis: SpinAxis, angle: f64) -> Matrix2<C64> {
    let [x, y, z] = axis.components();
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    Matrix2::new(
        C64::new(c, -s * z),
        C64::new(-s * y, -s * x),
        C64::new(s * y, -s * x),
        C64::new(c, s * z),
    )
}

/// Apply ⊗_k ops[k] to a full-basis vector.
pub fn apply_product(psi: &CVec, ops: &[Matrix2<C64>], n: usize) -> CVec {
    let mut v = psi.clone();
    let dim = 1usize << n;
    for (site, op) in ops.iter().enumerate() {
        let shift = n - 1 - site;
        let mask = 1usize << shift;
        for idx in 0..dim {
            if idx & mask != 0 {
                continue;
            }
            let (i0, i1) = (idx, idx | mask);
            let (a0, a1) = (v[i0], v[i1]);
            v[i0] = op[(0, 0)] * a0 + op[(0, 1)] * a1;
            v[i1] = op[(1, 0)] * a0 + op[(1, 1)] * a1;
        }
    }
    v
}
