//! Eigen-decompositions through the entropy symmetrizer, shifted solves and
//! P-normalized determinants.
//!
//! With `P = LLᵀ` and `PA` symmetric, `M = L⁻¹(PA)L⁻ᵀ = LᵀAL⁻ᵀ` is
//! symmetric. Its orthonormal eigenvectors `w_j` map to `r_j = L⁻ᵀw_j`,
//! which are eigenvectors of `A` with `⟨r_i, P r_j⟩ = δ_ij`.

use nalgebra::{Cholesky, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::{check_admissible, Matrix, State, SystemModel};

/// Tolerances of the spectral routines, relative to `|A|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    /// Minimum admissible eigenvalue gap.
    pub eps_hyp: f64,
    /// Minimum distance between a shift and the spectrum.
    pub eps_inv: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            eps_hyp: 1e-8,
            eps_inv: 1e-8,
        }
    }
}

/// `A(u)` together with its symmetrizer `P(u) = LLᵀ`.
#[derive(Debug, Clone)]
pub struct SymmetrizedProblem {
    pub state: State,
    pub matrix: Matrix,
    pub symmetrizer: Matrix,
    pub cholesky_factor: Matrix,
}

impl SymmetrizedProblem {
    pub fn new(model: &dyn SystemModel, u: &State) -> Result<Self> {
        check_admissible(model, u)?;
        let a = model.jacobian(u)?;
        let p = model.entropy_hessian(u)?;
        Self::from_matrices(u.clone(), a, p)
    }

    pub fn from_matrices(state: State, matrix: Matrix, symmetrizer: Matrix) -> Result<Self> {
        let chol = Cholesky::new(symmetrizer.clone()).ok_or_else(|| Error::NotPositiveDefinite {
            state: state.iter().copied().collect(),
        })?;
        Ok(SymmetrizedProblem {
            state,
            matrix,
            symmetrizer,
            cholesky_factor: chol.l(),
        })
    }

    /// `L⁻¹(PA)L⁻ᵀ` and its relative asymmetry.
    pub fn symmetrized(&self) -> (Matrix, f64) {
        let l = &self.cholesky_factor;
        let pa = &self.symmetrizer * &self.matrix;
        let x = l
            .solve_lower_triangular(&pa)
            .expect("Cholesky factor has a positive diagonal");
        let m = l
            .solve_lower_triangular(&x.transpose())
            .expect("Cholesky factor has a positive diagonal")
            .transpose();
        let residual = crate::validate::asymmetry(&m);
        (m, residual)
    }

    fn back_transform(&self, w: &DVector<f64>) -> DVector<f64> {
        self.cholesky_factor
            .transpose()
            .solve_upper_triangular(w)
            .expect("Cholesky factor has a positive diagonal")
    }
}

/// Real spectrum and P-orthonormal eigenvectors at a state.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub state: State,
    /// Strictly ascending.
    pub eigenvalues: DVector<f64>,
    /// Column `j` is `r_{j+1}`.
    pub eigenvectors: Matrix,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, j: usize) -> State {
        self.eigenvectors.column(j).into_owned()
    }

    /// `max_ij |⟨r_i, P r_j⟩ - δ_ij|`.
    pub fn orthonormality_error(&self, p: &Matrix) -> f64 {
        let gram = self.eigenvectors.transpose() * p * &self.eigenvectors;
        let n = self.dim();
        (gram - Matrix::identity(n, n)).amax()
    }

    /// `max_j |A r_j - a_j r_j| / |A|`.
    pub fn eigen_residual(&self, a: &Matrix) -> f64 {
        let scale = a.norm();
        if scale == 0.0 {
            return 0.0;
        }
        (0..self.dim())
            .map(|j| {
                let r = self.eigenvectors.column(j);
                (a * r - r * self.eigenvalues[j]).norm()
            })
            .fold(0.0, f64::max)
            / scale
    }

    /// `|A - R diag(a) R⁻¹| / |A|`, with `R⁻¹ = RᵀP`.
    pub fn reconstruction_error(&self, a: &Matrix, p: &Matrix) -> f64 {
        let r = &self.eigenvectors;
        let rebuilt = r * Matrix::from_diagonal(&self.eigenvalues) * r.transpose() * p;
        let scale = a.norm();
        if scale == 0.0 {
            rebuilt.norm()
        } else {
            (rebuilt - a).norm() / scale
        }
    }

    /// Flips eigenvector signs so each has nonnegative overlap with `prev`.
    pub fn align_to(&mut self, prev: &SpectralData) {
        for j in 0..self.dim().min(prev.dim()) {
            if self.eigenvectors.column(j).dot(&prev.eigenvectors.column(j)) < 0.0 {
                self.eigenvectors.column_mut(j).neg_mut();
            }
        }
    }
}

fn sign_normalize(r: &mut DVector<f64>) {
    let mut best = 0;
    for i in 1..r.len() {
        if r[i].abs() > r[best].abs() * (1.0 + 1e-12) {
            best = i;
        }
    }
    if r[best] < 0.0 {
        r.neg_mut();
    }
}

/// Eigen-decomposition of `A(u)` with default tolerances.
pub fn eigen_decompose(model: &dyn SystemModel, u: &State) -> Result<SpectralData> {
    eigen_decompose_with(model, u, &SpectralConfig::default())
}

pub fn eigen_decompose_with(
    model: &dyn SystemModel,
    u: &State,
    config: &SpectralConfig,
) -> Result<SpectralData> {
    decompose(&SymmetrizedProblem::new(model, u)?, config)
}

/// Decomposes an already assembled symmetrized problem.
pub fn decompose(problem: &SymmetrizedProblem, config: &SpectralConfig) -> Result<SpectralData> {
    let n = problem.matrix.nrows();
    let state_vec = || problem.state.iter().copied().collect::<Vec<_>>();
    let (m, residual) = problem.symmetrized();
    if residual > 1e-8 {
        return Err(Error::NotSymmetrizable {
            state: state_vec(),
            residual,
        });
    }
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));

    let scale = problem.matrix.norm();
    for j in 1..n {
        let gap = eigenvalues[j] - eigenvalues[j - 1];
        if gap <= config.eps_hyp * scale {
            return Err(Error::NotStrictlyHyperbolic {
                state: state_vec(),
                gap,
            });
        }
    }

    let mut eigenvectors = Matrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut r = problem.back_transform(&eig.eigenvectors.column(i).into_owned());
        sign_normalize(&mut r);
        eigenvectors.set_column(col, &r);
    }
    Ok(SpectralData {
        state: problem.state.clone(),
        eigenvalues,
        eigenvectors,
    })
}

/// Solves `(A(u) - σI)x = rhs`.
pub fn solve_shifted(
    model: &dyn SystemModel,
    u: &State,
    shift: f64,
    rhs: &State,
) -> Result<State> {
    solve_shifted_with(model, u, shift, rhs, &SpectralConfig::default())
}

pub fn solve_shifted_with(
    model: &dyn SystemModel,
    u: &State,
    shift: f64,
    rhs: &State,
    config: &SpectralConfig,
) -> Result<State> {
    let problem = SymmetrizedProblem::new(model, u)?;
    let spectral = decompose(&problem, config)?;
    solve_shifted_matrix(&problem.matrix, &spectral.eigenvalues, shift, rhs, config)
}

/// Shifted solve given `A` and its (real) spectrum.
pub fn solve_shifted_matrix(
    a: &Matrix,
    eigenvalues: &DVector<f64>,
    shift: f64,
    rhs: &State,
    config: &SpectralConfig,
) -> Result<State> {
    let n = a.nrows();
    if rhs.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: rhs.len(),
        });
    }
    let scale = a.norm() + shift.abs();
    if let Some(&eigenvalue) = eigenvalues
        .iter()
        .find(|&&aj| (aj - shift).abs() <= config.eps_inv * scale)
    {
        return Err(Error::ResonantShift { shift, eigenvalue });
    }
    let shifted = a - Matrix::identity(n, n) * shift;
    shifted
        .lu()
        .solve(rhs)
        .ok_or(Error::ResonantShift {
            shift,
            eigenvalue: f64::NAN,
        })
}

/// `det(c_1/|c_1|_P, …, c_n/|c_n|_P)` with `|c|_P = √⟨c, Pc⟩`.
pub fn normalized_determinant(columns: &[State], weights: &Matrix) -> Result<f64> {
    let n = weights.nrows();
    if columns.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: columns.len(),
        });
    }
    let mut m = Matrix::zeros(n, n);
    for (j, c) in columns.iter().enumerate() {
        if c.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: c.len(),
            });
        }
        let norm2 = c.dot(&(weights * c));
        if !(norm2 > 0.0) || !norm2.is_finite() {
            return Err(Error::DegenerateColumn { index: j });
        }
        m.set_column(j, &(c / norm2.sqrt()));
    }
    Ok(m.determinant())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{Burgers, Euler, PSystem};
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    #[test]
    fn burgers_scalar_spectrum() {
        let sd = eigen_decompose(&Burgers, &dvector![3.0]).unwrap();
        assert_relative_eq!(sd.eigenvalues[0], 3.0, epsilon = 1e-15);
        assert_relative_eq!(sd.eigenvectors[(0, 0)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn p_system_eigenpairs_are_p_orthogonal() {
        let model = PSystem::new(1.0, 2.0).unwrap();
        let u = dvector![0.5, 0.3];
        let sd = eigen_decompose(&model, &u).unwrap();
        assert_relative_eq!(sd.eigenvalues[0], -4.0, epsilon = 1e-13);
        assert_relative_eq!(sd.eigenvalues[1], 4.0, epsilon = 1e-13);
        let r1 = sd.eigenvector(0);
        let r2 = sd.eigenvector(1);
        // r_1 ∝ (1, 4), r_2 ∝ (1, -4) up to the sign convention
        assert_relative_eq!(r1[1] / r1[0], 4.0, epsilon = 1e-13);
        assert_relative_eq!(r2[1] / r2[0], -4.0, epsilon = 1e-13);
        // largest component positive
        assert!(r1[1] > 0.0 && r2[1] > 0.0 && r2[0] < 0.0);
        let p = Matrix::from_diagonal(&dvector![16.0, 1.0]);
        assert!(sd.orthonormality_error(&p) < 1e-14);
    }

    #[test]
    fn euler_sound_speeds() {
        let model = Euler::new(1.4).unwrap();
        let u = Euler::conserved(1.0, 0.0, 1.0, 1.4);
        let sd = eigen_decompose(&model, &u).unwrap();
        let c = 1.4_f64.sqrt();
        assert_relative_eq!(sd.eigenvalues[0], -c, epsilon = 1e-13);
        assert_relative_eq!(sd.eigenvalues[1], 0.0, epsilon = 1e-13);
        assert_relative_eq!(sd.eigenvalues[2], c, epsilon = 1e-13);
        let a = model.jacobian(&u).unwrap();
        let p = model.entropy_hessian(&u).unwrap();
        assert!(sd.eigen_residual(&a) < 1e-12);
        assert!(sd.reconstruction_error(&a, &p) < 1e-12);
        assert!(sd.orthonormality_error(&p) < 1e-12);
    }

    #[test]
    fn indefinite_symmetrizer_rejected() {
        let a = Matrix::identity(2, 2);
        let p = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 0.0]);
        let err = SymmetrizedProblem::from_matrices(dvector![0.0, 0.0], a, p).unwrap_err();
        assert!(err.to_string().contains("not positive definite"));
    }

    #[test]
    fn repeated_eigenvalue_rejected() {
        let a = Matrix::identity(2, 2);
        let p = Matrix::identity(2, 2);
        let prob = SymmetrizedProblem::from_matrices(dvector![0.0, 0.0], a, p).unwrap();
        let err = decompose(&prob, &SpectralConfig::default()).unwrap_err();
        assert!(err.to_string().contains("strict hyperbolicity violated"));
    }

    #[test]
    fn solve_shifted_examples() {
        // scalar: (1 - 0.5) x = 2
        let x = solve_shifted(&Burgers, &dvector![1.0], 0.5, &dvector![2.0]).unwrap();
        assert_relative_eq!(x[0], 4.0, epsilon = 1e-15);

        // shift 0 reproduces w from rhs = A w
        let model = PSystem::new(1.0, 2.0).unwrap();
        let u = dvector![0.5, -0.2];
        let w = dvector![0.3, -1.7];
        let rhs = model.jacobian(&u).unwrap() * &w;
        let x = solve_shifted(&model, &u, 0.0, &rhs).unwrap();
        assert_relative_eq!(x, w, epsilon = 1e-14);

        // (A + √6) x = (1, 0) with A = [[0,-1],[-16,0]]: direct 2×2 inverse
        let s6 = 6.0_f64.sqrt();
        let x = solve_shifted(&model, &u, -s6, &dvector![1.0, 0.0]).unwrap();
        let det = s6 * s6 - 16.0;
        assert_relative_eq!(x[0], s6 / det, epsilon = 1e-14);
        assert_relative_eq!(x[1], 16.0 / det, epsilon = 1e-14);
        let shifted = model.jacobian(&u).unwrap() + Matrix::identity(2, 2) * s6;
        assert!((shifted * &x - dvector![1.0, 0.0]).norm() < 1e-13);
    }

    #[test]
    fn resonant_shift_rejected() {
        let model = PSystem::new(1.0, 2.0).unwrap();
        let err = solve_shifted(&model, &dvector![0.5, 0.0], 4.0, &dvector![1.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("resonant"));
    }

    #[test]
    fn normalized_determinant_basics() {
        let eye = Matrix::identity(3, 3);
        let cols: Vec<State> = (0..3).map(|j| eye.column(j).into_owned()).collect();
        assert_relative_eq!(normalized_determinant(&cols, &eye).unwrap(), 1.0);

        let p = Matrix::from_row_slice(2, 2, &[3.0, 0.5, 0.5, 1.0]);
        let c = vec![dvector![1.0, 2.0], dvector![-0.5, 0.7]];
        let base = normalized_determinant(&c, &p).unwrap();
        let scaled = vec![c[0].clone() * 10.0, c[1].clone()];
        assert_relative_eq!(normalized_determinant(&scaled, &p).unwrap(), base, epsilon = 1e-15);

        let zero = vec![dvector![0.0, 0.0], dvector![1.0, 0.0]];
        assert_eq!(
            normalized_determinant(&zero, &p).unwrap_err(),
            Error::DegenerateColumn { index: 0 }
        );
        // dependent but nonzero columns give a zero determinant, not an error
        let dep = vec![dvector![1.0, 2.0], dvector![2.0, 4.0]];
        assert_eq!(normalized_determinant(&dep, &p).unwrap(), 0.0);
    }

    #[test]
    fn p_system_shock_determinant() {
        // columns S-u = (-0.5, -√6/2) and r_2 ∝ (1, -4), P(S) = diag(16, 1)
        let h = 6.0_f64.sqrt() / 2.0;
        let c = vec![dvector![-0.5, -h], dvector![1.0, -4.0]];
        let raw = 2.0 + h;
        let n1 = (16.0 * 0.25 + h * h).sqrt();
        let n2 = (16.0_f64 + 16.0).sqrt();
        let p = Matrix::from_diagonal(&dvector![16.0, 1.0]);
        let det = normalized_determinant(&c, &p).unwrap();
        assert_relative_eq!(det, raw / (n1 * n2), epsilon = 1e-14);
        assert_relative_eq!(raw, 3.224744871391589, epsilon = 1e-14);
    }
}
