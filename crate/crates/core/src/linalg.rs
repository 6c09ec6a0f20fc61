//! Dense complex linear algebra helpers: Hermitian eigensystems and the
//! matrix exponential.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ‖A − A†‖_F / ‖A‖_F (0 for the zero matrix).
pub fn hermiticity_error(m: &CMat) -> f64 {
    let norm = frobenius(m);
    if norm == 0.0 {
        return 0.0;
    }
    let n = m.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (m[(i, j)] - m[(j, i)].conj()).norm_sqr();
        }
    }
    acc.sqrt() / norm
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Frobenius inner product Tr(A†B).
pub fn inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Eigen-decomposition of a Hermitian matrix: real eigenvalues in ascending
/// order and the unitary of eigenvectors (columns).
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub values: DVector<f64>,
    pub vectors: CMat,
}

impl Eigensystem {
    pub fn new(h: &CMat) -> Self {
        // Symmetrize to remove round-off anti-Hermitian parts.
        let sym = (h + h.adjoint()).scale(0.5);
        let eig = sym.symmetric_eigen();
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
        let mut vectors = CMat::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            vectors.set_column(col, &eig.eigenvectors.column(k));
        }
        Eigensystem { values, vectors }
    }

    /// e^{−iHt} as a dense matrix.
    pub fn propagator(&self, t: f64) -> CMat {
        let phases: Vec<C64> = self.values.iter().map(|&e| C64::from_polar(1.0, -e * t)).collect();
        let mut scaled = self.vectors.clone();
        for (j, p) in phases.iter().enumerate() {
            scaled.column_mut(j).scale_mut_c(*p);
        }
        &scaled * self.vectors.adjoint()
    }

    /// e^{−iHt}|ψ⟩ without forming the propagator.
    pub fn apply(&self, psi: &CVec, t: f64) -> CVec {
        let mut c = self.vectors.adjoint() * psi;
        for (k, e) in self.values.iter().enumerate() {
            c[k] *= C64::from_polar(1.0, -e * t);
        }
        &self.vectors * c
    }
}

trait ScaleC {
    fn scale_mut_c(&mut self, s: C64);
}

impl<S> ScaleC for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S>
where
    S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>,
{
    fn scale_mut_c(&mut self, s: C64) {
        for z in self.iter_mut() {
            *z *= s;
        }
    }
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by Padé-13 scaling and squaring.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let theta13 = 5.371920351148152;
    let norm = one_norm(a);
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.scale(0.5f64.powi(s));
    let id = CMat::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| C64::new(PADE13[k], 0.0);
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9))
        + &a6 * b(7)
        + &a4 * b(5)
        + &a2 * b(3)
        + &id * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8))
        + &a6 * b(6)
        + &a4 * b(4)
        + &a2 * b(2)
        + &id * b(0);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Padé denominator is nonsingular");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// ‖U†U − 𝟙‖_F.
pub fn unitarity_error(u: &CMat) -> f64 {
    let n = u.nrows();
    frobenius(&(u.adjoint() * u - CMat::identity(n, n)))
}
