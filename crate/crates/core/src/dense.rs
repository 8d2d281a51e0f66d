//! Small fixed-size dense helpers used by the mapping and element code.

use crate::scalar::Real;

pub fn det2<T: Real>(a: &[[T; 2]; 2]) -> T {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn inv2<T: Real>(a: &[[T; 2]; 2]) -> Option<[[T; 2]; 2]> {
    let d = det2(a);
    if d == T::zero() || !d.is_finite() {
        return None;
    }
    Some([[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]])
}

pub fn solve2<T: Real>(a: &[[T; 2]; 2], b: [T; 2]) -> Option<[T; 2]> {
    let inv = inv2(a)?;
    Some(mat_vec(&inv, &b))
}

pub fn mat_vec<T: Real, const R: usize, const C: usize>(a: &[[T; C]; R], x: &[T; C]) -> [T; R] {
    let mut y = [T::zero(); R];
    for (yi, row) in y.iter_mut().zip(a) {
        *yi = row.iter().zip(x).map(|(&r, &v)| r * v).sum();
    }
    y
}

pub fn transpose<T: Real, const R: usize, const C: usize>(a: &[[T; C]; R]) -> [[T; R]; C] {
    let mut t = [[T::zero(); R]; C];
    for i in 0..R {
        for j in 0..C {
            t[j][i] = a[i][j];
        }
    }
    t
}

/// Gauss-Jordan inverse with partial pivoting. Returns `None` when a pivot
/// vanishes relative to the matrix scale.
pub fn invert<T: Real, const N: usize>(a: &[[T; N]; N]) -> Option<[[T; N]; N]> {
    let mut m = *a;
    let mut inv = [[T::zero(); N]; N];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = T::one();
    }
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |acc, v| acc.max(v.abs()));
    if scale == T::zero() {
        return None;
    }
    let tiny = scale * T::epsilon();
    for col in 0..N {
        let mut piv = col;
        for r in col + 1..N {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col].abs() <= tiny || !m[piv][col].is_finite() {
            return None;
        }
        m.swap(col, piv);
        inv.swap(col, piv);
        let p = m[col][col];
        for j in 0..N {
            m[col][j] = m[col][j] / p;
            inv[col][j] = inv[col][j] / p;
        }
        for r in 0..N {
            if r == col {
                continue;
            }
            let f = m[r][col];
            if f == T::zero() {
                continue;
            }
            for j in 0..N {
                m[r][j] = m[r][j] - f * m[col][j];
                inv[r][j] = inv[r][j] - f * inv[col][j];
            }
        }
    }
    Some(inv)
}

/// Maximum absolute column sum.
pub fn norm1<T: Real, const N: usize>(a: &[[T; N]; N]) -> T {
    (0..N)
        .map(|j| a.iter().map(|r| r[j].abs()).sum::<T>())
        .fold(T::zero(), T::max)
}

/// 1-norm condition number from a matrix and its computed inverse.
pub fn cond1<T: Real, const N: usize>(a: &[[T; N]; N], inv: &[[T; N]; N]) -> T {
    norm1(a) * norm1(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_known_matrix() {
        let a: [[f64; 2]; 2] = [[4.0, 7.0], [2.0, 6.0]];
        let inv = invert(&a).unwrap();
        assert!((inv[0][0] - 0.6).abs() < 1e-15);
        assert!((inv[0][1] + 0.7).abs() < 1e-15);
        assert!((inv[1][0] + 0.2).abs() < 1e-15);
        assert!((inv[1][1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn singular_is_rejected() {
        let a = [[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 1.0, 1.0]];
        assert!(invert(&a).is_none());
        assert!(inv2(&[[1.0, 2.0], [2.0, 4.0]]).is_none());
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 2.0]];
        let inv = invert(&a).unwrap();
        assert_eq!(inv[0][1], 1.0);
        assert_eq!(inv[1][0], 1.0);
        assert_eq!(inv[2][2], 0.5);
        assert_eq!(cond1(&a, &inv), 2.0 * 1.0);
    }
}
