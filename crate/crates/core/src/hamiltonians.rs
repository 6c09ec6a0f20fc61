//! Interaction Hamiltonians, ideal squeezing generators, the collective
//! projection check and the engineered GHZ chain.

use crate::error::{Error, Result};
use crate::geometry::{coupling_mean, SpinEnsemble};
use crate::linalg::{self, CMat, C64, I, ZERO};
use crate::spin_ops::{collective_op, dicke_restrict, Basis, OperatorMatrix, SpinAxis, DEFAULT_N_MAX};
use nalgebra::{DMatrix, Matrix3};

/// Which squeezing generator a construction targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// One-axis twisting (Ising perturbation).
    OneAxis,
    /// Two-axis twisting (double-quantum perturbation).
    TwoAxis,
}

impl Variant {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "1a" => Ok(Variant::OneAxis),
            "2a" => Ok(Variant::TwoAxis),
            other => Err(Error::param(format!("unknown variant '{other}' (expected 1a or 2a)"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Variant::OneAxis => "1a",
            Variant::TwoAxis => "2a",
        }
    }
}

/// Action of S_a on one spin: (flips the spin, amplitude), given whether
/// the spin is down.
fn single_action(a: usize, down: bool) -> (bool, C64) {
    let s = if down { -0.5 } else { 0.5 };
    match a {
        0 => (true, C64::new(0.5, 0.0)),
        1 => (true, C64::new(0.0, s)),
        _ => (false, C64::new(s, 0.0)),
    }
}

/// Σ_{l<j} 2 d_lj Σ_ab M_ab S_a^l S_b^j in the full basis. M must be
/// symmetric for the result to be Hermitian.
pub fn pair_hamiltonian(couplings: &DMatrix<f64>, m: &Matrix3<f64>) -> Result<OperatorMatrix> {
    let n = couplings.nrows();
    if n > DEFAULT_N_MAX {
        return Err(Error::TooManySpins { n, max: DEFAULT_N_MAX });
    }
    let basis = Basis::Full(n);
    let dim = basis.dim();
    let mut data = CMat::zeros(dim, dim);
    let terms: Vec<(usize, usize, f64)> = (0..3)
        .flat_map(|a| (0..3).map(move |b| (a, b)))
        .filter(|&(a, b)| m[(a, b)] != 0.0)
        .map(|(a, b)| (a, b, m[(a, b)]))
        .collect();
    for l in 0..n {
        for j in (l + 1)..n {
            let d = 2.0 * couplings[(l, j)];
            if d == 0.0 {
                continue;
            }
            let (ml, mj) = (1usize << (n - 1 - l), 1usize << (n - 1 - j));
            for col in 0..dim {
                for &(a, b, w) in &terms {
                    let (fj, aj) = single_action(b, col & mj != 0);
                    let mid = if fj { col ^ mj } else { col };
                    let (fl, al) = single_action(a, mid & ml != 0);
                    let row = if fl { mid ^ ml } else { mid };
                    data[(row, col)] += al * aj * (d * w);
                }
            }
        }
    }
    OperatorMatrix::new(data, basis)
}

pub fn h_ising(ensemble: &SpinEnsemble) -> Result<OperatorMatrix> {
    pair_hamiltonian(&ensemble.couplings, &Matrix3::from_diagonal(&[0.0, 0.0, 1.0].into()))
}

pub fn h_heisenberg(ensemble: &SpinEnsemble) -> Result<OperatorMatrix> {
    pair_hamiltonian(&ensemble.couplings, &Matrix3::identity())
}

pub fn h_double_quantum(ensemble: &SpinEnsemble) -> Result<OperatorMatrix> {
    pair_hamiltonian(&ensemble.couplings, &Matrix3::from_diagonal(&[1.0, -1.0, 0.0].into()))
}

/// εH_zz + H_H (1a) or (εH_dq + H_H)/3 (2a).
pub fn h_combined(ensemble: &SpinEnsemble, eps: f64, variant: Variant) -> Result<OperatorMatrix> {
    let hh = h_heisenberg(ensemble)?;
    match variant {
        Variant::OneAxis => hh.add_scaled(&h_ising(ensemble)?, eps),
        Variant::TwoAxis => Ok(hh.add_scaled(&h_double_quantum(ensemble)?, eps)?.scaled(1.0 / 3.0)),
    }
}

/// Squared collective operators in the Dicke basis.
fn dicke_j(n: usize) -> Result<[OperatorMatrix; 3]> {
    let b = Basis::Dicke(n);
    Ok([collective_op(SpinAxis::X, b)?, collective_op(SpinAxis::Y, b)?, collective_op(SpinAxis::Z, b)?])
}

/// d·J_z² in the Dicke basis.
pub fn ideal_oat(d: f64, n: usize) -> Result<OperatorMatrix> {
    let [_, _, jz] = dicke_j(n)?;
    Ok(jz.matmul(&jz)?.scaled(d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TatForm {
    /// d(J_x² − J_y²)/2
    Quadrature,
    /// i d(J_+² − J_−²)/2
    Ladder,
}

pub fn ideal_tat(d: f64, n: usize, form: TatForm) -> Result<OperatorMatrix> {
    let [jx, jy, _] = dicke_j(n)?;
    match form {
        TatForm::Quadrature => Ok(jx.matmul(&jx)?.add_scaled(&jy.matmul(&jy)?, -1.0)?.scaled(d / 2.0)),
        TatForm::Ladder => {
            // J_+² − J_−² = 2i(J_xJ_y + J_yJ_x)
            let anti = jx.matmul(&jy)?.add_scaled(&jy.matmul(&jx)?, 1.0)?;
            let data = anti.data().map(|z| z * (I * I) * d);
            OperatorMatrix::new(data, anti.basis())
        }
    }
}

/// Target of the collective projection fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projected {
    /// H_zz → J_z²
    Ising,
    /// H_dq → J_x² − J_y²
    DoubleQuantum,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionFit {
    pub c_quad: f64,
    pub c_id: f64,
    /// ‖PHP − c_quad·Q − c_id·𝟙‖_F
    pub residual: f64,
    /// residual / ‖PHP‖_F
    pub relative_residual: f64,
    /// D/(N − 1)
    pub expected_c_quad: f64,
}

/// Least-squares fit of the symmetric-subspace projection to c_quad·Q + c_id·𝟙.
pub fn project_check(ensemble: &SpinEnsemble, target: Projected) -> Result<ProjectionFit> {
    let n = ensemble.n();
    if n < 2 {
        return Err(Error::param("projection check needs at least two spins"));
    }
    let (h, q) = match target {
        Projected::Ising => {
            let [_, _, jz] = dicke_j(n)?;
            (h_ising(ensemble)?, jz.matmul(&jz)?)
        }
        Projected::DoubleQuantum => {
            let [jx, jy, _] = dicke_j(n)?;
            (h_double_quantum(ensemble)?, jx.matmul(&jx)?.add_scaled(&jy.matmul(&jy)?, -1.0)?)
        }
    };
    let php = dicke_restrict(&h)?;
    let id = CMat::identity(n + 1, n + 1);
    let (a, b, y) = (q.data(), &id, php.data());
    let g = |u: &CMat, v: &CMat| linalg::inner(u, v).re;
    let (aa, ab, bb) = (g(a, a), g(a, b), g(b, b));
    let (ay, by) = (g(a, y), g(b, y));
    let det = aa * bb - ab * ab;
    let c_quad = (ay * bb - by * ab) / det;
    let c_id = (aa * by - ab * ay) / det;
    let resid = y - a.map(|z| z * c_quad) - b.map(|z| z * c_id);
    let residual = linalg::frobenius(&resid);
    let norm = php.norm();
    Ok(ProjectionFit {
        c_quad,
        c_id,
        residual,
        relative_residual: if norm > 0.0 { residual / norm } else { 0.0 },
        expected_c_quad: coupling_mean(ensemble) / (n as f64 - 1.0),
    })
}

/// Nearest-neighbour chain with d_{k,k+1} = 2d_0√(k(N−k))/N.
pub fn engineered_chain_couplings(n: usize, d0: f64) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(n, n);
    for k in 1..n {
        let v = 2.0 * d0 * ((k * (n - k)) as f64).sqrt() / n as f64;
        d[(k - 1, k)] = v;
        d[(k, k - 1)] = v;
    }
    d
}

pub struct EngineeredChain {
    pub h_coupling: OperatorMatrix,
    /// Σ_k √((2k−1)(2N−2k+1)) S_x^k, without the scale λ.
    pub h_field: OperatorMatrix,
}

pub fn engineered_chain(n: usize, d0: f64) -> Result<EngineeredChain> {
    if n < 2 {
        return Err(Error::param("engineered chain needs at least two spins"));
    }
    let ens = SpinEnsemble::from_couplings(engineered_chain_couplings(n, d0))?;
    let h_coupling = h_ising(&ens)?;
    let mut h_field = OperatorMatrix::zeros(Basis::Full(n));
    for k in 1..=n {
        let w = (((2 * k - 1) * (2 * n - 2 * k + 1)) as f64).sqrt();
        let sx = crate::spin_ops::embed_single(&crate::spin_ops::pauli_x(), k - 1, n)?;
        h_field = h_field.add_scaled(&sx, 0.5 * w)?;
    }
    Ok(EngineeredChain { h_coupling, h_field })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainScan {
    pub lambda: f64,
    pub fidelity: f64,
}

/// Time at which the engineered chain closes a GHZ_z state under the 2d
/// pair convention used here: d_0 t = Nπ/2, reached with λ = 1/4. Quoted
/// values of Nπ/8 correspond to couplings four times stronger.
pub fn engineered_chain_time(n: usize, d0: f64) -> f64 {
    n as f64 * std::f64::consts::PI / (2.0 * d0)
}

/// Scan the field scale λ (in units of d_0) and report the best GHZ_z
/// fidelity reached at time `t` from |↑…↑⟩.
pub fn engineered_chain_scan(n: usize, d0: f64, lambdas: &[f64], t: f64) -> Result<ChainScan> {
    let chain = engineered_chain(n, d0)?;
    let psi0 = crate::spin_ops::StateVector::basis_state(Basis::Full(n), 0)?;
    let mut best = ChainScan { lambda: f64::NAN, fidelity: -1.0 };
    for &lam in lambdas {
        let h = chain.h_coupling.add_scaled(&chain.h_field, lam * d0)?;
        let psi = crate::spin_ops::evolve(&psi0, &h, t)?;
        let f = crate::squeezing::ghz_fidelity(&psi, SpinAxis::Z)?;
        if f > best.fidelity {
            best = ChainScan { lambda: lam, fidelity: f };
        }
    }
    Ok(best)
}

/// e^{iθJ_z} A e^{−iθJ_z} for a Dicke-basis operator (diagonal J_z).
pub fn rotate_about_z(op: &OperatorMatrix, theta: f64) -> OperatorMatrix {
    let n = op.basis().n();
    let dim = op.dim();
    let jmax = n as f64 / 2.0;
    let m = |k: usize| match op.basis() {
        Basis::Dicke(_) => jmax - k as f64,
        Basis::Full(_) => jmax - k.count_ones() as f64,
    };
    let data = CMat::from_fn(dim, dim, |r, c| {
        if op.data()[(r, c)] == ZERO {
            ZERO
        } else {
            op.data()[(r, c)] * C64::from_polar(1.0, theta * (m(r) - m(c)))
        }
    });
    OperatorMatrix::new(data, op.basis()).expect("same shape")
}
