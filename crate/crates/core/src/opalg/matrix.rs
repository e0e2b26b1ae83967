use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};
use crate::real::{cr, Real, C};

/// Dense square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix<T> {
    dim: usize,
    data: Vec<C<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        Self {
            dim,
            data: vec![C::new(T::zero(), T::zero()); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = cr(T::one());
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from `dim * dim` row-major entries.
    pub fn from_entries(dim: usize, data: Vec<C<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig(
                "matrix dimension must be at least 1".into(),
            ));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("matrix has non-finite entries".into()));
        }
        Ok(Self { dim, data })
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(dim: usize, data: &[T]) -> Result<Self> {
        Self::from_entries(dim, data.iter().map(|&x| cr(x)).collect())
    }

    /// Builds a matrix from rows of complex entries; rows must be square.
    pub fn from_rows(rows: &[Vec<C<T>>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_entries(dim, data)
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = cr(d);
        }
        m
    }

    /// |ψ⟩⟨φ|
    pub fn outer(psi: &[C<T>], phi: &[C<T>]) -> Self {
        assert_eq!(psi.len(), phi.len());
        Self::from_fn(psi.len(), |i, j| psi[i] * phi[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C<T>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C<T> {
        (0..self.dim).fold(C::new(T::zero(), T::zero()), |acc, i| acc + self[(i, i)])
    }

    /// tr(self · other) without forming the product.
    pub fn trace_product(&self, other: &Self) -> C<T> {
        self.check_dim(other);
        let n = self.dim;
        let mut acc = C::new(T::zero(), T::zero());
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        acc
    }

    pub fn diagonal_real(&self) -> Vec<T> {
        (0..self.dim).map(|i| self[(i, i)].re).collect()
    }

    pub fn scale(&self, z: C<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * z).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    /// self += alpha · x
    pub fn axpy(&mut self, alpha: C<T>, x: &Self) {
        self.check_dim(x);
        for (a, &b) in self.data.iter_mut().zip(&x.data) {
            *a += b * alpha;
        }
    }

    /// self += alpha · x for real alpha
    pub fn axpy_real(&mut self, alpha: T, x: &Self) {
        self.check_dim(x);
        for (a, &b) in self.data.iter_mut().zip(&x.data) {
            *a += b * alpha;
        }
    }

    /// Largest entry modulus.
    pub fn max_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// max |M − M†|
    pub fn asymmetry(&self) -> T {
        let n = self.dim;
        let mut worst = T::zero();
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// (M + M†)/2
    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        let mut out = self.clone();
        let n = self.dim;
        for i in 0..n {
            out[(i, i)] = cr(self[(i, i)].re);
            for j in (i + 1)..n {
                let z = (self[(i, j)] + self[(j, i)].conj()) * half;
                out[(i, j)] = z;
                out[(j, i)] = z.conj();
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(v.len(), self.dim);
        let n = self.dim;
        (0..n)
            .map(|i| {
                let row = &self.data[i * n..(i + 1) * n];
                row.iter()
                    .zip(v)
                    .fold(C::new(T::zero(), T::zero()), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// Kronecker product self ⊗ other, index (i, k) ↦ i·dim(other) + k.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        Self::from_fn(n * m, |r, c| self[(r / m, c / m)] * other[(r % m, c % m)])
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.check_dim(other);
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).norm()))
    }

    /// Matching dimensions or `DimensionMismatch`.
    pub fn ensure_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            })
        } else {
            Ok(())
        }
    }

    #[inline]
    fn check_dim(&self, other: &Self) {
        assert_eq!(self.dim, other.dim, "matrix dimension mismatch");
    }

    /// Converts between scalar fields.
    pub fn cast<U: Real>(&self) -> ComplexMatrix<U> {
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .map(|z| C::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64())))
                .collect(),
        }
    }
}

/// [A, B] = AB − BA
pub fn commutator<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    &(a * b) - &(b * a)
}

/// {A, B} = AB + BA
pub fn anticommutator<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    &(a * b) + &(b * a)
}

impl<T> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.dim + j]
    }
}

impl<T: Real> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, rhs: Self) -> ComplexMatrix<T> {
        self.check_dim(rhs);
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl<T: Real> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        self.check_dim(rhs);
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }
}

impl<T: Real> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        self.check_dim(rhs);
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }
}

impl<T: Real> Neg for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn neg(self) -> ComplexMatrix<T> {
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&a| -a).collect(),
        }
    }
}

impl<T: Real> Mul<T> for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, s: T) -> ComplexMatrix<T> {
        self.scale_real(s)
    }
}

impl<T: Real> Mul<C<T>> for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, z: C<T>) -> ComplexMatrix<T> {
        self.scale(z)
    }
}

impl<T: Real> AddAssign<&ComplexMatrix<T>> for ComplexMatrix<T> {
    fn add_assign(&mut self, rhs: &ComplexMatrix<T>) {
        self.check_dim(rhs);
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl<T: Real> SubAssign<&ComplexMatrix<T>> for ComplexMatrix<T> {
    fn sub_assign(&mut self, rhs: &ComplexMatrix<T>) {
        self.check_dim(rhs);
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for ComplexMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = &self.data[i * self.dim + j];
                write!(f, "({:?}, {:?})  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Euclidean norm of a complex vector.
pub fn vector_norm<T: Real>(v: &[C<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

/// Pauli and ladder operators on a qubit, basis order (|0⟩, |1⟩) = (e₀, e₁).
pub mod pauli {
    use super::ComplexMatrix;
    use crate::real::{Real, C};

    fn m<T: Real>(entries: [(f64, f64); 4]) -> ComplexMatrix<T> {
        ComplexMatrix::from_entries(
            2,
            entries
                .iter()
                .map(|&(r, i)| C::new(T::lit(r), T::lit(i)))
                .collect(),
        )
        .expect("static 2x2")
    }

    pub fn sigma_x<T: Real>() -> ComplexMatrix<T> {
        m([(0., 0.), (1., 0.), (1., 0.), (0., 0.)])
    }

    pub fn sigma_y<T: Real>() -> ComplexMatrix<T> {
        m([(0., 0.), (0., -1.), (0., 1.), (0., 0.)])
    }

    pub fn sigma_z<T: Real>() -> ComplexMatrix<T> {
        m([(1., 0.), (0., 0.), (0., 0.), (-1., 0.)])
    }

    /// Lowering operator e₀ ↦ e₁ (e₀ is the excited level).
    pub fn sigma_minus<T: Real>() -> ComplexMatrix<T> {
        m([(0., 0.), (0., 0.), (1., 0.), (0., 0.)])
    }

    pub fn sigma_plus<T: Real>() -> ComplexMatrix<T> {
        m([(0., 0.), (1., 0.), (0., 0.), (0., 0.)])
    }
}
