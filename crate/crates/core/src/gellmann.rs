//! Generalized Gell-Mann basis of su(d).
//!
//! The `d² - 1` generators split into three families (labels are 1-based,
//! `1 <= m < n <= d`):
//!
//! * `X(n,m) = |n)(m| + |m)(n|`
//! * `Y(n,m) = i|n)(m| - i|m)(n|` (so `Y(2,1)` is the Pauli `σy`)
//! * `Z(l) = sqrt(2 / (l(l+1))) (Σ_{j<=l} |j)(j| - l |l+1)(l+1|)`
//!
//! normalized so that `Tr(λ_a λ_b) / 2 = δ_ab`. The canonical order is the
//! X block, then the Y block (both sorted by `(m, n)`), then `Z(1)..Z(d-1)`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specmat::{CMatrix, HermitianMatrix};

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 64;

/// Tolerance on `|Tr M|` accepted by [`GellMannBasis::expand`].
pub const EXPAND_TRACE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    /// Symmetric off-diagonal generator for levels `n > m` (1-based).
    X { n: usize, m: usize },
    /// Antisymmetric off-diagonal generator for levels `n > m` (1-based).
    Y { n: usize, m: usize },
    /// Diagonal generator `Z(l)`, `1 <= l <= d - 1`.
    Z { l: usize },
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Label::X { n, m } => write!(f, "X({n},{m})"),
            Label::Y { n, m } => write!(f, "Y({n},{m})"),
            Label::Z { l } => write!(f, "Z({l})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GellMannBasis {
    dim: usize,
    labels: Vec<Label>,
    matrices: Vec<CMatrix>,
    index: HashMap<Label, usize>,
}

/// Real coefficients `κ_a` of a trace-less Hermitian matrix, ordered as the
/// basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector(pub Vec<f64>);

impl CoefficientVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|k| k * k).sum::<f64>().sqrt()
    }
}

fn labels_for(dim: usize) -> Vec<Label> {
    let mut pairs = Vec::new();
    for m in 1..=dim {
        for n in m + 1..=dim {
            pairs.push((n, m));
        }
    }
    let mut labels: Vec<Label> = pairs.iter().map(|&(n, m)| Label::X { n, m }).collect();
    labels.extend(pairs.iter().map(|&(n, m)| Label::Y { n, m }));
    labels.extend((1..dim).map(|l| Label::Z { l }));
    labels
}

/// Dense matrix of a generator in dimension `dim`.
pub fn generator(dim: usize, label: Label) -> CMatrix {
    let mut g = CMatrix::zeros(dim, dim);
    match label {
        Label::X { n, m } => {
            g[(n - 1, m - 1)] = Complex64::new(1.0, 0.0);
            g[(m - 1, n - 1)] = Complex64::new(1.0, 0.0);
        }
        Label::Y { n, m } => {
            g[(n - 1, m - 1)] = Complex64::new(0.0, 1.0);
            g[(m - 1, n - 1)] = Complex64::new(0.0, -1.0);
        }
        Label::Z { l } => {
            let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
            for j in 0..l {
                g[(j, j)] = Complex64::new(norm, 0.0);
            }
            g[(l, l)] = Complex64::new(-(l as f64) * norm, 0.0);
        }
    }
    g
}

/// Diagonal entries `ν_1..ν_d` of `Z(l)`.
pub fn z_diagonal(dim: usize, l: usize) -> Vec<f64> {
    let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
    (0..dim)
        .map(|j| match j.cmp(&l) {
            std::cmp::Ordering::Less => norm,
            std::cmp::Ordering::Equal => -(l as f64) * norm,
            std::cmp::Ordering::Greater => 0.0,
        })
        .collect()
}

fn cache() -> &'static Mutex<HashMap<usize, Arc<GellMannBasis>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GellMannBasis>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared immutable basis for `dim`, built on first request.
pub fn build_basis(dim: usize) -> Result<Arc<GellMannBasis>> {
    if !(MIN_DIM..=MAX_DIM).contains(&dim) {
        return Err(Error::Dimension(dim));
    }
    let mut guard = cache().lock().unwrap_or_else(|e| e.into_inner());
    Ok(guard.entry(dim).or_insert_with(|| Arc::new(GellMannBasis::construct(dim))).clone())
}

impl GellMannBasis {
    fn construct(dim: usize) -> Self {
        let labels = labels_for(dim);
        let matrices = labels.iter().map(|&l| generator(dim, l)).collect();
        let index = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        Self { dim, labels, matrices, index }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of generators, `d² - 1`.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn matrix(&self, a: usize) -> &CMatrix {
        &self.matrices[a]
    }

    pub fn label(&self, a: usize) -> Label {
        self.labels[a]
    }

    pub fn position(&self, label: Label) -> Option<usize> {
        self.index.get(&label).copied()
    }

    /// `κ_a = Tr(M λ_a) / 2`.
    pub fn expand(&self, m: &CMatrix) -> Result<CoefficientVector> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: m.nrows() });
        }
        let tr = m.trace();
        if tr.norm() > EXPAND_TRACE_TOL {
            return Err(Error::TraceNotZero(tr.norm()));
        }
        Ok(CoefficientVector(self.matrices.iter().map(|l| 0.5 * trace_product(m, l).re).collect()))
    }

    /// `Σ_a κ_a λ_a`.
    pub fn reconstruct(&self, kappa: &CoefficientVector) -> Result<HermitianMatrix> {
        if kappa.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: kappa.len() });
        }
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for (k, l) in kappa.0.iter().zip(&self.matrices) {
            if *k != 0.0 {
                acc += l.scale(*k);
            }
        }
        Ok(HermitianMatrix::symmetrized(acc))
    }
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::gue;
    use crate::specmat::frobenius;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pauli_matrices_for_two_levels() {
        let b = build_basis(2).unwrap();
        assert_eq!(b.labels(), &[Label::X { n: 2, m: 1 }, Label::Y { n: 2, m: 1 }, Label::Z { l: 1 }]);
        assert_eq!(b.matrix(0), &CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]));
        assert_eq!(b.matrix(1), &CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]));
        assert_eq!(b.matrix(2), &CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]));
    }

    #[test]
    fn z2_for_three_levels() {
        let z = generator(3, Label::Z { l: 2 });
        let s = 1.0 / 3f64.sqrt();
        for (i, want) in [s, s, -2.0 * s].iter().enumerate() {
            assert!((z[(i, i)].re - want).abs() < 1e-15);
        }
        assert_eq!(z_diagonal(3, 2), (0..3).map(|i| z[(i, i)].re).collect::<Vec<_>>());
    }

    #[test]
    fn canonical_order_and_counts() {
        let b = build_basis(4).unwrap();
        assert_eq!(b.len(), 15);
        let xs = b.labels().iter().filter(|l| matches!(l, Label::X { .. })).count();
        let zs = b.labels().iter().filter(|l| matches!(l, Label::Z { .. })).count();
        assert_eq!((xs, zs), (6, 3));
        assert_eq!(b.label(0), Label::X { n: 2, m: 1 });
        assert_eq!(b.label(1), Label::X { n: 3, m: 1 });
        assert_eq!(b.label(3), Label::X { n: 3, m: 2 });
        assert_eq!(b.label(6), Label::Y { n: 2, m: 1 });
        assert_eq!(b.label(12), Label::Z { l: 1 });
        assert_eq!(b.position(Label::Y { n: 4, m: 3 }), Some(11));
        assert_eq!(b.label(3).to_string(), "X(3,2)");
    }

    #[test]
    fn orthonormal_for_four_levels() {
        let b = build_basis(4).unwrap();
        for (i, li) in b.matrices().iter().enumerate() {
            assert!(li.trace().norm() < 1e-15);
            for (j, lj) in b.matrices().iter().enumerate() {
                let t = trace_product(li, lj) * 0.5;
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((t - c(want, 0.0)).norm() < 1e-14, "{i} {j}");
            }
        }
    }

    #[test]
    fn dimension_bounds() {
        assert!(matches!(build_basis(1), Err(Error::Dimension(1))));
        assert!(matches!(build_basis(65), Err(Error::Dimension(65))));
        assert!(Arc::ptr_eq(&build_basis(3).unwrap(), &build_basis(3).unwrap()));
    }

    #[test]
    fn expand_examples() {
        let b = build_basis(2).unwrap();
        assert_eq!(b.expand(b.matrix(1)).unwrap().0, vec![0.0, 1.0, 0.0]);
        assert_eq!(b.expand(&CMatrix::zeros(2, 2)).unwrap().0, vec![0.0; 3]);
        let m = b.matrix(0).scale(0.3) - b.matrix(2).scale(0.1);
        let k = b.expand(&m).unwrap();
        assert!((k.0[0] - 0.3).abs() < 1e-16 && k.0[1] == 0.0 && (k.0[2] + 0.1).abs() < 1e-16);
        assert!(matches!(b.expand(&CMatrix::identity(2, 2)), Err(Error::TraceNotZero(_))));
        assert!(matches!(b.expand(&CMatrix::zeros(3, 3)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn reconstruct_examples() {
        let b = build_basis(3).unwrap();
        let mut e = vec![0.0; 8];
        e[4] = 1.0;
        assert_eq!(b.reconstruct(&CoefficientVector(e)).unwrap().as_matrix(), b.matrix(4));
        assert_eq!(b.reconstruct(&CoefficientVector(vec![0.0; 8])).unwrap().as_matrix(), &CMatrix::zeros(3, 3));
        assert!(b.reconstruct(&CoefficientVector(vec![0.0; 3])).is_err());
    }

    #[test]
    fn completeness_and_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for d in 2..=6 {
            let b = build_basis(d).unwrap();
            let m = gue(&mut rng, d, 1.0).into_inner();
            let shift = m.trace() / Complex64::new(d as f64, 0.0);
            let traceless = &m - CMatrix::identity(d, d) * shift;
            let k = b.expand(&traceless).unwrap();
            let back = b.reconstruct(&k).unwrap().into_inner() + CMatrix::identity(d, d) * shift;
            assert!(frobenius(&(back - &m)) < 1e-12);
            let f2 = frobenius(&traceless).powi(2);
            assert!((f2 - 2.0 * k.norm().powi(2)).abs() < 1e-12 * (1.0 + f2));

            let kappa = CoefficientVector((0..b.len()).map(|_| rng.random_range(-1.0..1.0)).collect());
            let again = b.expand(b.reconstruct(&kappa).unwrap().as_matrix()).unwrap();
            let err = kappa.0.iter().zip(&again.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-13);
        }
    }
}
