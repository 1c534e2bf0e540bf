//! Dense complex linear algebra for small qubit counts.
//!
//! Everything here is `O(4^n)` in memory and is only used as a ground-truth
//! oracle for the closed-form observables in [`crate::features`] and for
//! ingesting explicit density matrices. The qubit cap defaults to
//! [`DEFAULT_ORACLE_CAP`] and can be overridden with the
//! `ENTSTRUCT_ORACLE_CAP` environment variable.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::features::AngleTable;
use crate::seeds::SeedParams;

pub const DEFAULT_ORACLE_CAP: usize = 10;
pub const ORACLE_CAP_ENV: &str = "ENTSTRUCT_ORACLE_CAP";

/// Tolerance for structural checks on freshly built states.
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Tolerance for comparisons and discarded imaginary parts.
pub const COMPARISON_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Qubit cap for dense construction, honouring `ENTSTRUCT_ORACLE_CAP`.
pub fn oracle_cap() -> usize {
    std::env::var(ORACLE_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_ORACLE_CAP)
}

fn check_cap(qubits: usize, cap: usize) -> Result<()> {
    if qubits > cap {
        Err(Error::OracleScale {
            requested: qubits,
            cap,
        })
    } else {
        Ok(())
    }
}

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// `|v><v|` for a column vector `v`.
    pub fn outer(v: &[Complex64]) -> Self {
        Self::from_fn(v.len(), v.len(), |r, c| v[r] * v[c].conj())
    }

    pub fn pauli_x() -> Self {
        Self::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn pauli_y() -> Self {
        Self::from_vec(
            2,
            2,
            vec![ZERO, Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), ZERO],
        )
        .unwrap()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    /// Largest `|A_ij - conj(A_ji)|`; infinite for non-square input.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product; the result is `(ra*rb) x (ca*cb)`.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut data = vec![ZERO; rows * cols];
        for ra in 0..self.rows {
            for ca in 0..self.cols {
                let a = self.get(ra, ca);
                if a == ZERO {
                    continue;
                }
                for rb in 0..other.rows {
                    let base = (ra * other.rows + rb) * cols + ca * other.cols;
                    let src = &other.data[rb * other.cols..(rb + 1) * other.cols];
                    for (d, b) in data[base..base + other.cols].iter_mut().zip(src) {
                        *d = a * b;
                    }
                }
            }
        }
        Self { rows, cols, data }
    }

    /// `self ⊗ self ⊗ … ⊗ self` with `times` factors (`times >= 1`).
    pub fn kron_power(&self, times: usize) -> Self {
        let mut out = self.clone();
        for _ in 1..times {
            out = out.kron(self);
        }
        out
    }
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// An `n`-qubit density matrix built by the constructors below.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    qubits: usize,
    matrix: ComplexMatrix,
}

impl DenseState {
    /// Wraps an explicit density matrix after checking shape, trace and
    /// hermiticity. Positivity is not checked.
    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() || !matrix.rows().is_power_of_two() {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square with power-of-two side, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > COMPARISON_TOL {
            return Err(Error::NumericIntegrity(format!("trace {tr} is not 1")));
        }
        if !matrix.is_hermitian(COMPARISON_TOL) {
            return Err(Error::NumericIntegrity("matrix is not Hermitian".into()));
        }
        Ok(Self {
            qubits: matrix.rows().trailing_zeros() as usize,
            matrix,
        })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `cos θ |0…0> + sin θ |1…1>` as a pure state.
    pub fn generalized_ghz(n: usize, theta: f64) -> Result<Self> {
        check_cap(n, oracle_cap())?;
        let dim = 1usize << n;
        let mut v = vec![ZERO; dim];
        v[0] += theta.cos();
        v[dim - 1] += theta.sin();
        Ok(Self {
            qubits: n,
            matrix: ComplexMatrix::outer(&v),
        })
    }

    /// `p |GHZ><GHZ| + (1 - p) I / 2^n`.
    pub fn noised_ghz(n: usize, p: f64) -> Result<Self> {
        check_cap(n, oracle_cap())?;
        let dim = 1usize << n;
        let ghz = ghz_projector(n);
        let mixed = ComplexMatrix::identity(dim).scale(1.0 / dim as f64);
        Ok(Self {
            qubits: n,
            matrix: ghz.scale(p).add(&mixed.scale(1.0 - p))?,
        })
    }
}

/// `|GHZ><GHZ|`: one half at the four corners.
fn ghz_projector(n: usize) -> ComplexMatrix {
    let dim = 1usize << n;
    let mut m = ComplexMatrix::zeros(dim, dim);
    for idx in [0, dim - 1, (dim - 1) * dim, dim * dim - 1] {
        m.data[idx] = Complex64::new(0.5, 0.0);
    }
    m
}

/// `|G_ℓ><G_ℓ|` where `|G_1> = |+>` reduces to the same formula.
fn ghz_block_projector(block: usize) -> ComplexMatrix {
    ghz_projector(block)
}

/// `W_G = I/2 - |GHZ><GHZ|` on `n` qubits.
pub fn ghz_witness(n: usize) -> Result<ComplexMatrix> {
    check_cap(n, oracle_cap())?;
    let dim = 1usize << n;
    ComplexMatrix::identity(dim)
        .scale(0.5)
        .add(&ghz_projector(n).scale(-1.0))
}

/// Seed block `(1-α-β)|G><G| + α η + β I/2^ℓ` with
/// `η = (|0…0><0…0| + |1…1><1…1|)/2`.
pub fn dense_seed_state(block: usize, params: SeedParams) -> Result<DenseState> {
    if block == 0 {
        return Err(Error::Parameter("block size must be at least 1".into()));
    }
    params.validate_domain()?;
    check_cap(block, oracle_cap())?;
    let dim = 1usize << block;
    let (alpha, beta) = (params.alpha(), params.beta());
    let pure = ghz_block_projector(block).scale(1.0 - alpha - beta);
    let mut eta = ComplexMatrix::zeros(dim, dim);
    eta.data[0] += 0.5;
    eta.data[dim * dim - 1] += 0.5;
    let mixed = ComplexMatrix::identity(dim).scale(beta / dim as f64);
    let matrix = pure.add(&eta.scale(alpha))?.add(&mixed)?;
    Ok(DenseState {
        qubits: block,
        matrix,
    })
}

/// Tensor product of `blocks` in order, capped at [`oracle_cap`] qubits.
pub fn dense_compose(blocks: &[DenseState]) -> Result<DenseState> {
    dense_compose_with_cap(blocks, oracle_cap())
}

pub fn dense_compose_with_cap(blocks: &[DenseState], cap: usize) -> Result<DenseState> {
    let (first, rest) = blocks
        .split_first()
        .ok_or_else(|| Error::Parameter("cannot compose zero blocks".into()))?;
    let qubits: usize = blocks.iter().map(|b| b.qubits).sum();
    check_cap(qubits, cap)?;
    let matrix = rest
        .iter()
        .fold(first.matrix.clone(), |acc, b| acc.kron(&b.matrix));
    Ok(DenseState { qubits, matrix })
}

/// `Tr[op · ρ]` for Hermitian `op`.
pub fn expectation(op: &ComplexMatrix, state: &DenseState) -> Result<f64> {
    let rho = &state.matrix;
    if op.rows() != rho.rows() || op.cols() != rho.cols() {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, state is {}x{}",
            op.rows(),
            op.cols(),
            rho.rows(),
            rho.cols()
        )));
    }
    let dim = rho.rows();
    let mut acc = ZERO;
    for i in 0..dim {
        for j in 0..dim {
            acc += op.get(i, j) * rho.get(j, i);
        }
    }
    if acc.im.abs() > COMPARISON_TOL {
        return Err(Error::NumericIntegrity(format!(
            "expectation has imaginary part {:e}",
            acc.im
        )));
    }
    Ok(acc.re)
}

/// The four measured operators, in feature order.
#[derive(Debug, Clone)]
pub struct Observables {
    pub mz: ComplexMatrix,
    pub mx: ComplexMatrix,
    pub az: ComplexMatrix,
    pub ax: ComplexMatrix,
}

impl Observables {
    pub fn as_array(&self) -> [&ComplexMatrix; 4] {
        [&self.mz, &self.mx, &self.az, &self.ax]
    }
}

/// Observables for `n` qubits with the tabulated measurement angle.
pub fn dense_observables(n: usize) -> Result<Observables> {
    let phi = AngleTable::phi(n)?;
    dense_observables_with_angle(n, phi)
}

/// `M_z = |0><0|^⊗n + |1><1|^⊗n`, `M_x = σx^⊗n`, `A_z = A+^⊗n`,
/// `A_x = ((A+ + A-)/2)^⊗n` where `A± = cos(a±) σx + sin(a±) σy` with
/// `a+ = (n+1)φ/(2n)` and `a- = -(n-1)φ/(2n)`.
pub fn dense_observables_with_angle(n: usize, phi: f64) -> Result<Observables> {
    if n == 0 {
        return Err(Error::Parameter("need at least one qubit".into()));
    }
    check_cap(n, oracle_cap())?;
    let dim = 1usize << n;
    let mut mz = ComplexMatrix::zeros(dim, dim);
    mz.data[0] = ONE;
    mz.data[dim * dim - 1] += ONE;

    let sx = ComplexMatrix::pauli_x();
    let sy = ComplexMatrix::pauli_y();
    let rotated = |angle: f64| sx.scale(angle.cos()).add(&sy.scale(angle.sin())).unwrap();
    let nf = n as f64;
    let a_plus = rotated((nf + 1.0) / (2.0 * nf) * phi);
    let a_minus = rotated(-(nf - 1.0) / (2.0 * nf) * phi);
    let a_mean = a_plus.add(&a_minus)?.scale(0.5);

    Ok(Observables {
        mz,
        mx: sx.kron_power(n),
        az: a_plus.kron_power(n),
        ax: a_mean.kron_power(n),
    })
}
