//! Small dense complex linear algebra shared across the crate.
//!
//! Vectorization convention: row-major stacking,
//! `vec(rho) = [rho00, rho01, rho10, rho11]`, under which
//! `vec(A rho B) = (A kron B^T) vec(rho)`.

use nalgebra::{Matrix2, Matrix4, RowVector4, Vector2, Vector4};
use num_complex::Complex64;

use crate::error::{CwlmError, Result};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;
pub type Vec4 = Vector4<C64>;
pub type Ket = Vector2<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// sigma_x in the {|e>, |g>} basis.
pub fn sigma_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

/// sigma_z = |e><e| - |g><g|.
pub fn sigma_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

/// Raising operator sigma_+ = |e><g|.
pub fn sigma_plus() -> Mat2 {
    Mat2::new(ZERO, ONE, ZERO, ZERO)
}

/// Lowering operator sigma_- = |g><e|.
pub fn sigma_minus() -> Mat2 {
    Mat2::new(ZERO, ZERO, ONE, ZERO)
}

/// |e> = Z+ eigenstate.
pub fn ket_z_plus() -> Ket {
    Ket::new(ONE, ZERO)
}

/// |g> = Z- eigenstate.
pub fn ket_z_minus() -> Ket {
    Ket::new(ZERO, ONE)
}

pub fn ket_x_plus() -> Ket {
    Ket::new(c(std::f64::consts::FRAC_1_SQRT_2), c(std::f64::consts::FRAC_1_SQRT_2))
}

pub fn ket_x_minus() -> Ket {
    Ket::new(c(std::f64::consts::FRAC_1_SQRT_2), -c(std::f64::consts::FRAC_1_SQRT_2))
}

/// Row-major vectorization of a 2x2 matrix.
pub fn vec_rho(rho: &Mat2) -> Vec4 {
    Vec4::new(rho[(0, 0)], rho[(0, 1)], rho[(1, 0)], rho[(1, 1)])
}

/// Inverse of [`vec_rho`].
pub fn unvec_rho(v: &Vec4) -> Mat2 {
    Mat2::new(v[0], v[1], v[2], v[3])
}

/// Left superoperator: vec(A rho) = spre(A) vec(rho).
pub fn spre(a: &Mat2) -> Mat4 {
    a.kronecker(&Mat2::identity())
}

/// Right superoperator: vec(rho B) = spost(B) vec(rho).
pub fn spost(b: &Mat2) -> Mat4 {
    Mat2::identity().kronecker(&b.transpose())
}

/// Trace functional in the row-major convention: t . vec(rho) = Tr rho.
pub fn trace_functional() -> RowVector4<C64> {
    RowVector4::new(ONE, ZERO, ZERO, ONE)
}

pub fn dagger(a: &Mat2) -> Mat2 {
    a.adjoint()
}

pub fn commutator(a: &Mat2, b: &Mat2) -> Mat2 {
    a * b - b * a
}

pub fn anticommutator(a: &Mat2, b: &Mat2) -> Mat2 {
    a * b + b * a
}

fn one_norm(m: &Mat4) -> f64 {
    (0..4)
        .map(|j| (0..4).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by Pade-13 scaling and squaring.
pub fn expm(a: &Mat4) -> Result<Mat4> {
    // Pade-13 coefficients (Higham 2005).
    const B: [f64; 14] = [
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
    const THETA_13: f64 = 5.371920351148152;

    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(CwlmError::ExpmFailure(format!("matrix norm {norm}")));
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let a = a / c(2f64.powi(s as i32));

    let a2 = a * a;
    let a4 = a2 * a2;
    let a6 = a2 * a4;
    let id = Mat4::identity();

    let u = a * (a6 * (a6 * c(B[13]) + a4 * c(B[11]) + a2 * c(B[9]))
        + a6 * c(B[7])
        + a4 * c(B[5])
        + a2 * c(B[3])
        + id * c(B[1]));
    let v = a6 * (a6 * c(B[12]) + a4 * c(B[10]) + a2 * c(B[8]))
        + a6 * c(B[6])
        + a4 * c(B[4])
        + a2 * c(B[2])
        + id * c(B[0]);

    let denom = v - u;
    let mut r = denom
        .try_inverse()
        .ok_or_else(|| CwlmError::ExpmFailure("singular Pade denominator".into()))?
        * (v + u);
    for _ in 0..s {
        r = r * r;
    }
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(CwlmError::ExpmFailure("non-finite entries after squaring".into()));
    }
    Ok(r)
}

/// exp(-i H t) for Hermitian 2x2 H, via the su(2) closed form.
pub fn unitary_of(h: &Mat2, t: f64) -> Mat2 {
    // H = c0 I + cx sx + cy sy + cz sz with real coefficients.
    let c0 = (h[(0, 0)] + h[(1, 1)]).re / 2.0;
    let cx = (h[(0, 1)] + h[(1, 0)]).re / 2.0;
    let cy = (h[(1, 0)] - h[(0, 1)]).im / 2.0;
    let cz = (h[(0, 0)] - h[(1, 1)]).re / 2.0;
    let r = (cx * cx + cy * cy + cz * cz).sqrt();
    let phase = (-I * c(c0 * t)).exp();
    if r * t.abs() < 1e-300 {
        return Mat2::identity() * phase;
    }
    let (sin, cos) = (r * t).sin_cos();
    let n = (
        sigma_x() * c(cx / r) + sigma_y() * c(cy / r) + sigma_z() * c(cz / r),
        cos,
    );
    (Mat2::identity() * c(n.1) - n.0 * (I * c(sin))) * phase
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn vectorization_roundtrip_and_product_rule() {
        let a = Mat2::new(c(1.0), C64::new(0.5, 0.2), C64::new(-0.1, 1.0), c(2.0));
        let b = Mat2::new(C64::new(0.0, 1.0), c(0.3), c(-1.0), C64::new(0.2, -0.4));
        let rho = Mat2::new(c(0.7), C64::new(0.1, 0.1), C64::new(0.1, -0.1), c(0.3));

        assert_eq!(unvec_rho(&vec_rho(&rho)), rho);

        let direct = a * rho * b;
        let via_super = unvec_rho(&(spre(&a) * spost(&b) * vec_rho(&rho)));
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(direct[(i, j)].re, via_super[(i, j)].re, epsilon = 1e-14);
                assert_relative_eq!(direct[(i, j)].im, via_super[(i, j)].im, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn trace_functional_matches_trace() {
        let rho = Mat2::new(c(0.7), C64::new(0.1, 0.1), C64::new(0.1, -0.1), c(0.3));
        let t = trace_functional() * vec_rho(&rho);
        assert_relative_eq!(t[0].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn expm_diagonal() {
        let mut a = Mat4::zeros();
        for (i, lam) in [-1.0, 0.5, 2.0, -0.25].iter().enumerate() {
            a[(i, i)] = c(*lam);
        }
        let e = expm(&a).unwrap();
        for (i, lam) in [-1.0f64, 0.5, 2.0, -0.25].iter().enumerate() {
            assert_relative_eq!(e[(i, i)].re, lam.exp(), epsilon = 1e-12);
        }
    }

    #[test]
    fn expm_skew_hermitian_is_unitary() {
        let h = Mat4::from_fn(|i, j| C64::new((i + j) as f64 * 0.3, (i as f64 - j as f64) * 0.7));
        let h = (h + h.adjoint()) * c(0.5);
        let u = expm(&(h * (-I))).unwrap();
        let should_be_id = u.adjoint() * u;
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(should_be_id[(i, j)].re, expect, epsilon = 1e-12);
                assert_relative_eq!(should_be_id[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn expm_large_norm_uses_squaring() {
        let mut a = Mat4::zeros();
        a[(0, 0)] = c(-40.0);
        a[(1, 1)] = c(10.0);
        let e = expm(&a).unwrap();
        assert_relative_eq!(e[(1, 1)].re, 10f64.exp(), max_relative = 1e-10);
        assert_relative_eq!(e[(0, 0)].re, (-40f64).exp(), max_relative = 1e-8);
    }

    #[test]
    fn unitary_half_rabi_flip() {
        // H = (Omega/2) sx, t = pi/Omega flips Z+ to Z- up to phase.
        let omega = 2.3;
        let h = sigma_x() * c(omega / 2.0);
        let u = unitary_of(&h, std::f64::consts::PI / omega);
        let flipped = u * ket_z_plus();
        assert_relative_eq!(flipped[0].norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(flipped[1].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn unitary_matches_expm() {
        let h = Mat2::new(c(0.4), C64::new(0.3, -0.7), C64::new(0.3, 0.7), c(-1.1));
        let t = 0.83;
        let u = unitary_of(&h, t);
        // Embed in the 4x4 exponential of the left-multiplication superoperator.
        let sup = expm(&(spre(&h) * (-I * c(t)))).unwrap();
        let rho = Mat2::new(c(0.6), c(0.2), c(0.2), c(0.4));
        let a = u * rho;
        let b = unvec_rho(&(sup * vec_rho(&rho)));
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(a[(i, j)].re, b[(i, j)].re, epsilon = 1e-12);
                assert_relative_eq!(a[(i, j)].im, b[(i, j)].im, epsilon = 1e-12);
            }
        }
    }
}
