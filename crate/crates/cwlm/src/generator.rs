//! Counting-field-augmented Liouvillian superoperators.
//!
//! Every evolution equation in the pipeline has the polynomial form
//! L(chi) = L0 + chi L1 - (chi^2 S_VV / 2) Id acting on the row-major
//! vectorization of the 2x2 (quasi-)density matrix.

use crate::linalg::{
    c, dagger, sigma_minus, sigma_plus, sigma_x, sigma_y, sigma_z, spost, spre, Mat2, Mat4, I,
};
use crate::model::{DetectorParams, ObservableSpec, QubitParams};

/// Single-detector generator, polynomial in the counting field.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    /// chi-independent part: Hamiltonian commutator plus dissipators.
    pub l0: Mat4,
    /// Part linear in chi: anticommutator gain term and the S_QV term.
    pub l1: Mat4,
    /// Output-noise coefficient of the -chi^2 S_VV / 2 identity term.
    pub svv: f64,
}

impl Liouvillian {
    /// Evaluate L(chi) = l0 + chi l1 - (chi^2 svv / 2) Id.
    pub fn at(&self, chi: f64) -> Mat4 {
        self.l0 + self.l1 * c(chi) - Mat4::identity() * c(chi * chi * self.svv / 2.0)
    }
}

/// Two-detector generator with independent counting fields chi_x, chi_y.
#[derive(Debug, Clone)]
pub struct JointLiouvillian {
    pub l0: Mat4,
    pub lx: Mat4,
    pub ly: Mat4,
    pub svv_x: f64,
    pub svv_y: f64,
}

impl JointLiouvillian {
    pub fn at(&self, chi_x: f64, chi_y: f64) -> Mat4 {
        self.l0
            + self.lx * c(chi_x)
            + self.ly * c(chi_y)
            - Mat4::identity() * c((chi_x * chi_x * self.svv_x + chi_y * chi_y * self.svv_y) / 2.0)
    }

    /// Freeze chi_y, leaving a single-detector generator in chi_x.
    pub fn fix_y(&self, chi_y: f64) -> Liouvillian {
        Liouvillian {
            l0: self.l0 + self.ly * c(chi_y)
                - Mat4::identity() * c(chi_y * chi_y * self.svv_y / 2.0),
            l1: self.lx,
            svv: self.svv_x,
        }
    }

    /// Freeze chi_x, leaving a single-detector generator in chi_y.
    pub fn fix_x(&self, chi_x: f64) -> Liouvillian {
        Liouvillian {
            l0: self.l0 + self.lx * c(chi_x)
                - Mat4::identity() * c(chi_x * chi_x * self.svv_x / 2.0),
            l1: self.ly,
            svv: self.svv_y,
        }
    }
}

/// Vectorized dissipator D[A] rho = (1/2)[A^dag A, rho]_+ - A rho A^dag.
///
/// Note the sign convention: D enters the master equation with a minus, so
/// -D is the standard Lindblad dissipator.
pub fn dissipator(a: &Mat2) -> Mat4 {
    let ada = dagger(a) * a;
    (spre(&ada) + spost(&ada)) * c(0.5) - spre(a) * spost(&dagger(a))
}

fn hamiltonian_part(h: &Mat2) -> Mat4 {
    // -i [H, rho]
    (spre(h) - spost(h)) * (-I)
}

/// Linear-in-chi part shared by all single-detector generators:
/// -(S_QV/hbar)[rho, O] + (i a_VQ / 2)[rho, O]_+.
fn chi_linear_part(obs: &Mat2, d: &DetectorParams) -> Mat4 {
    let comm = spost(obs) - spre(obs); // [rho, O]
    let anti = spost(obs) + spre(obs); // [rho, O]_+
    comm * c(-d.s_qv) + anti * (I * c(d.a_vq / 2.0))
}

/// Idealized single-coupling-operator equation: the only dissipation is the
/// detector back-action at rate S_QQ / hbar^2.
pub fn build_ideal(obs: &ObservableSpec, d: &DetectorParams, h: &Mat2) -> Liouvillian {
    Liouvillian {
        l0: hamiltonian_part(h) - dissipator(&obs.matrix) * c(d.s_qq),
        l1: chi_linear_part(&obs.matrix, d),
        svv: d.s_vv,
    }
}

/// Experimental form: resonant drive plus intrinsic decoherence, excitation
/// and relaxation channels (the back-action is subsumed in the rates).
pub fn build_experimental(obs: &ObservableSpec, q: &QubitParams, d: &DetectorParams) -> Liouvillian {
    let l0 = hamiltonian_part(&q.hamiltonian())
        - dissipator(&sigma_z()) * c(q.gamma_d)
        - dissipator(&sigma_plus()) * c(q.gamma_up)
        - dissipator(&sigma_minus()) * c(q.gamma_down);
    Liouvillian { l0, l1: chi_linear_part(&obs.matrix, d), svv: d.s_vv }
}

/// Non-demolition form: no Hamiltonian, dephasing through the measured
/// operator itself at rate `gamma`.
pub fn build_nondemolition(obs: &ObservableSpec, d: &DetectorParams, gamma: f64) -> Liouvillian {
    Liouvillian {
        l0: -dissipator(&obs.matrix) * c(gamma),
        l1: chi_linear_part(&obs.matrix, d),
        svv: d.s_vv,
    }
}

/// Simultaneous measurement of sigma_x and sigma_y by two independent
/// detectors. With `ideal = true` the only dissipation is the two
/// back-action channels; otherwise the experimental channels are used.
pub fn build_two_detector(
    q: &QubitParams,
    dx: &DetectorParams,
    dy: &DetectorParams,
    ideal: bool,
) -> JointLiouvillian {
    let l0 = if ideal {
        hamiltonian_part(&q.hamiltonian())
            - dissipator(&sigma_x()) * c(dx.s_qq)
            - dissipator(&sigma_y()) * c(dy.s_qq)
    } else {
        hamiltonian_part(&q.hamiltonian())
            - dissipator(&sigma_z()) * c(q.gamma_d)
            - dissipator(&sigma_plus()) * c(q.gamma_up)
            - dissipator(&sigma_minus()) * c(q.gamma_down)
    };
    JointLiouvillian {
        l0,
        lx: chi_linear_part(&sigma_x(), dx),
        ly: chi_linear_part(&sigma_y(), dy),
        svv_x: dx.s_vv,
        svv_y: dy.s_vv,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ket_z_plus, trace_functional, unvec_rho, vec_rho, C64};
    use approx::assert_relative_eq;

    fn apply(sup: &Mat4, rho: &Mat2) -> Mat2 {
        unvec_rho(&(sup * vec_rho(rho)))
    }

    #[test]
    fn dissipator_sigma_z_cases() {
        let d = dissipator(&sigma_z());
        // Identity commutes: D[sz] (I/2) = 0.
        let out = apply(&d, &(Mat2::identity() * c(0.5)));
        assert!(out.norm() < 1e-14);
        // Off-diagonal decay rate 2: D[sz] sx = 2 sx.
        let out = apply(&d, &sigma_x());
        assert!((out - sigma_x() * c(2.0)).norm() < 1e-14);
    }

    #[test]
    fn dissipator_sigma_minus_on_excited_state() {
        let d = dissipator(&sigma_minus());
        let ee = ket_z_plus() * ket_z_plus().adjoint();
        let gg = crate::linalg::ket_z_minus() * crate::linalg::ket_z_minus().adjoint();
        let out = apply(&d, &ee);
        assert!((out - (ee - gg)).norm() < 1e-14);
    }

    #[test]
    fn trace_functional_annihilates_l0() {
        let obs = ObservableSpec::sigma_x();
        let q = QubitParams::new(1.3, 0.4, 0.2, 0.05, 0.11).unwrap();
        let d = DetectorParams::from_acquisition_time(2.0, 3.0).unwrap();
        for l0 in [
            build_ideal(&obs, &d, &q.hamiltonian()).l0,
            build_experimental(&obs, &q, &d).l0,
            build_nondemolition(&obs, &d, 0.7).l0,
            build_two_detector(&q, &d, &d, true).l0,
            build_two_detector(&q, &d, &d, false).l0,
        ] {
            let t = trace_functional() * l0;
            assert!(t.norm() < 1e-12, "trace functional residual {}", t.norm());
        }
    }

    #[test]
    fn ideal_generator_eigenstate_phase() {
        // H = 0, S_QQ = 0: an O-eigenstate picks up the closed-form trace
        // e^{-S_VV chi^2 t / 2} e^{i chi a_VQ O_i t}.
        let obs = ObservableSpec::sigma_x();
        let d = DetectorParams::new(0.0, 1.7, 0.0, 0.9, 0.0).unwrap();
        let l = build_ideal(&obs, &d, &Mat2::zeros());
        let chi = 0.37;
        let t = 0.83;
        let rho0 = obs.eigenvectors[0] * obs.eigenvectors[0].adjoint();
        let prop = crate::linalg::expm(&(l.at(chi) * c(t))).unwrap();
        let rho_t = apply(&prop, &rho0);
        let tr = rho_t[(0, 0)] + rho_t[(1, 1)];
        let expect = C64::from_polar(
            (-d.s_vv * chi * chi * t / 2.0).exp(),
            chi * d.a_vq * t * obs.eigenvalues[0],
        );
        assert_relative_eq!(tr.re, expect.re, epsilon = 1e-12);
        assert_relative_eq!(tr.im, expect.im, epsilon = 1e-12);
    }

    #[test]
    fn chi_linear_part_is_anticommutator_map() {
        // O = sigma_x, a_VQ = 1, S_QV = 0: l1 vec(rho) = (i/2) vec({rho, sx}).
        let d = DetectorParams::new(0.3, 1.0, 0.0, 1.0, 0.0).unwrap();
        let l = build_ideal(&ObservableSpec::sigma_x(), &d, &Mat2::zeros());
        let rho = Mat2::new(c(0.6), C64::new(0.1, 0.2), C64::new(0.1, -0.2), c(0.4));
        let via_l1 = apply(&l.l1, &rho);
        let direct = crate::linalg::anticommutator(&rho, &sigma_x()) * (I * c(0.5));
        assert!((via_l1 - direct).norm() < 1e-14);
    }

    #[test]
    fn polynomial_structure_degree_two() {
        let obs = ObservableSpec::sigma_y();
        let q = QubitParams::new(0.9, 0.3, 0.1, 0.04, 0.08).unwrap();
        let d = DetectorParams::from_acquisition_time(1.5, 2.0).unwrap();
        let l = build_experimental(&obs, &q, &d);
        // Fit a quadratic through chi in {-2,-1,0,1,2} entrywise and check
        // the residual at a sixth point.
        let chis = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let mats: Vec<Mat4> = chis.iter().map(|&x| l.at(x)).collect();
        // Second divided difference gives the quadratic coefficient.
        let a2 = (mats[4] - mats[2] * c(2.0) + mats[0]) * c(1.0 / 8.0);
        let a1 = (mats[3] - mats[1]) * c(0.5);
        let a0 = mats[2];
        let probe = 1.37;
        let fit = a0 + a1 * c(probe) + a2 * c(probe * probe);
        assert!((fit - l.at(probe)).norm() < 1e-12);
    }

    #[test]
    fn nondemolition_diagonal_entries_static() {
        // With no Hamiltonian the O-basis populations are conserved at chi=0.
        let obs = ObservableSpec::sigma_x();
        let d = DetectorParams::ideal();
        let l = build_nondemolition(&obs, &d, 0.8);
        let rho0 = Mat2::new(c(0.5), C64::new(0.1, 0.05), C64::new(0.1, -0.05), c(0.5));
        let prop = crate::linalg::expm(&(l.at(0.0) * c(2.3))).unwrap();
        let rho_t = apply(&prop, &rho0);
        for v in obs.eigenvectors.iter() {
            let p0 = (v.adjoint() * rho0 * v)[0];
            let pt = (v.adjoint() * rho_t * v)[0];
            assert_relative_eq!(p0.re, pt.re, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_detector_symmetry_and_reduction() {
        let q = QubitParams::hamiltonian_only(0.0, 0.0);
        let d = DetectorParams::ideal();
        let jl = build_two_detector(&q, &d, &d, true);
        // chi_y = 0 reduces to a single-detector generator whose l0 carries
        // the y back-action.
        let single = jl.fix_y(0.0);
        let expect_l0 = -dissipator(&sigma_x()) * c(d.s_qq) - dissipator(&sigma_y()) * c(d.s_qq);
        assert!((single.l0 - expect_l0).norm() < 1e-13);
        assert!((single.l1 - chi_linear_part(&sigma_x(), &d)).norm() < 1e-13);

        // Symmetric detectors: the pi rotation about (x+y)/sqrt(2) swaps
        // sx <-> sy, so at chi_x = chi_y it commutes with the generator.
        let chi = 0.53;
        let axis = (sigma_x() + sigma_y()) * c(0.5 * std::f64::consts::FRAC_1_SQRT_2);
        let u = crate::linalg::unitary_of(&(axis * c(2.0)), std::f64::consts::FRAC_PI_2);
        let sup_u = crate::linalg::spre(&u) * crate::linalg::spost(&crate::linalg::dagger(&u));
        let a = jl.at(chi, chi);
        let conj = sup_u * a * sup_u.try_inverse().unwrap();
        assert!((conj - a).norm() < 1e-12);

        let t = trace_functional() * jl.at(0.0, 0.0);
        assert!(t.norm() < 1e-12);
    }

    #[test]
    fn stationary_state_symmetric_pumping() {
        let obs = ObservableSpec::sigma_x();
        let q = QubitParams::new(0.0, 0.0, 0.0, 0.4, 0.4).unwrap();
        let d = DetectorParams::ideal();
        let l = build_experimental(&obs, &q, &d);
        // I/2 is stationary under symmetric pumping.
        let out = apply(&l.l0, &(Mat2::identity() * c(0.5)));
        assert!(out.norm() < 1e-13);

        // Pure decay relaxes onto |g><g|.
        let q = QubitParams::new(0.0, 0.0, 0.0, 0.0, 0.9).unwrap();
        let l = build_experimental(&obs, &q, &d);
        let gg = crate::linalg::ket_z_minus() * crate::linalg::ket_z_minus().adjoint();
        let out = apply(&l.l0, &gg);
        assert!(out.norm() < 1e-13);
    }
}
