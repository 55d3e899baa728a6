//! Named operators used by scenarios and the self-test.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specmat::{CMatrix, HermitianMatrix};

fn two_level(entries: [[Complex64; 2]; 2]) -> HermitianMatrix {
    HermitianMatrix::symmetrized(CMatrix::from_fn(2, 2, |r, c| entries[r][c]))
}

pub fn pauli_x() -> HermitianMatrix {
    let (o, l) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    two_level([[o, l], [l, o]])
}

pub fn pauli_y() -> HermitianMatrix {
    let (o, i) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0));
    two_level([[o, -i], [i, o]])
}

pub fn pauli_z() -> HermitianMatrix {
    HermitianMatrix::from_real_diagonal(&[1.0, -1.0])
}

/// Nearest-neighbour hopping `Σ_n |n)(n+1| + |n+1)(n|`; its coupling
/// graph is the connected chain.
pub fn ladder(dim: usize) -> Result<HermitianMatrix> {
    if dim < 2 {
        return Err(Error::Dimension(dim));
    }
    Ok(HermitianMatrix::symmetrized(CMatrix::from_fn(dim, dim, |r, c| {
        if r.abs_diff(c) == 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specmat::comm;

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (pauli_x(), pauli_y(), pauli_z());
        let xy = comm(x.as_matrix(), y.as_matrix());
        let want = z.as_matrix() * Complex64::new(0.0, 2.0);
        assert!((xy - want).iter().all(|e| e.norm() < 1e-15));
    }

    #[test]
    fn ladder_is_tridiagonal() {
        let q = ladder(4).unwrap();
        assert_eq!(q.as_matrix()[(1, 2)].re, 1.0);
        assert_eq!(q.as_matrix()[(0, 2)].re, 0.0);
        assert!(ladder(1).is_err());
    }
}
