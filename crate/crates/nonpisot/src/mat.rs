//! Tiny fixed-size complex matrix helpers used by the cocycle and
//! diffraction modules. Dimensions never exceed 4, so plain arrays beat a
//! general linear algebra dependency here.

use num::complex::Complex64;

pub type C = Complex64;
pub type M2 = [[C; 2]; 2];
pub type V2 = [C; 2];
pub type M4 = [[C; 4]; 4];
pub type V4 = [C; 4];

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn m2_zero() -> M2 {
    [[C::new(0.0, 0.0); 2]; 2]
}

pub fn m2_id() -> M2 {
    let mut m = m2_zero();
    m[0][0] = C::new(1.0, 0.0);
    m[1][1] = C::new(1.0, 0.0);
    m
}

pub fn m2_mul(a: &M2, b: &M2) -> M2 {
    let mut r = m2_zero();
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

pub fn m2_vec(a: &M2, v: &V2) -> V2 {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

pub fn m2_det(a: &M2) -> C {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn m2_inv(a: &M2) -> Option<M2> {
    let d = m2_det(a);
    if d.norm() == 0.0 {
        return None;
    }
    Some([[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]])
}

pub fn m2_scale(a: &M2, s: C) -> M2 {
    let mut r = *a;
    for row in r.iter_mut() {
        for x in row.iter_mut() {
            *x *= s;
        }
    }
    r
}

pub fn m2_frob(a: &M2) -> f64 {
    m2_frob_sq(a).sqrt()
}

pub fn m2_frob_sq(a: &M2) -> f64 {
    a.iter().flatten().map(|x| x.norm_sqr()).sum()
}

pub fn v2_norm(v: &V2) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

pub fn m4_zero() -> M4 {
    [[C::new(0.0, 0.0); 4]; 4]
}

pub fn m4_id() -> M4 {
    let mut m = m4_zero();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = C::new(1.0, 0.0);
    }
    m
}

pub fn m4_mul(a: &M4, b: &M4) -> M4 {
    let mut r = m4_zero();
    for i in 0..4 {
        for j in 0..4 {
            let mut s = C::new(0.0, 0.0);
            for (k, bk) in b.iter().enumerate() {
                s += a[i][k] * bk[j];
            }
            r[i][j] = s;
        }
    }
    r
}

pub fn m4_vec(a: &M4, v: &V4) -> V4 {
    let mut r = [C::new(0.0, 0.0); 4];
    for (i, row) in a.iter().enumerate() {
        r[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
    }
    r
}

pub fn v4_norm(v: &V4) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Kronecker product of two 2x2 matrices, indexed so that (i,j) x (k,l)
/// lands in row 2i + k, column 2j + l.
pub fn kron2(a: &M2, b: &M2) -> M4 {
    let mut r = m4_zero();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    r[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    r
}

pub fn m4_conj_transpose(a: &M4) -> M4 {
    let mut r = m4_zero();
    for i in 0..4 {
        for (j, row) in a.iter().enumerate() {
            r[i][j] = row[i].conj();
        }
    }
    r
}

pub fn m4_max_imag(a: &M4) -> f64 {
    a.iter().flatten().map(|x| x.im.abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_det() {
        let a: M2 = [[c(1.0, 1.0), c(2.0, 0.0)], [c(0.0, -1.0), c(3.0, 0.5)]];
        let inv = m2_inv(&a).unwrap();
        let prod = m2_mul(&a, &inv);
        assert!((prod[0][0] - c(1.0, 0.0)).norm() < 1e-14);
        assert!(prod[0][1].norm() < 1e-14);
        assert!(prod[1][0].norm() < 1e-14);
        assert!((prod[1][1] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn kron_mixed_product() {
        // (A x B)(C x D) = AC x BD.
        let a: M2 = [[c(1.0, 0.0), c(2.0, 1.0)], [c(0.0, 3.0), c(-1.0, 0.0)]];
        let b: M2 = [[c(0.5, 0.0), c(0.0, 0.0)], [c(1.0, -1.0), c(2.0, 0.0)]];
        let lhs = m4_mul(&kron2(&a, &b), &kron2(&b, &a));
        let rhs = kron2(&m2_mul(&a, &b), &m2_mul(&b, &a));
        for i in 0..4 {
            for j in 0..4 {
                assert!((lhs[i][j] - rhs[i][j]).norm() < 1e-12);
            }
        }
    }
}
