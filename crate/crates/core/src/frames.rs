//! Reference frames, the yaw-pitch Euler sequence and attitude propagation.
//!
//! Four frames are used: Inertial (I), Base (B), Gimbal (G) and Platform (P).
//! Gimbal yaw `psi` rotates B into G about `z_b = z_g`; platform pitch `theta`
//! rotates G into P about `y_g = y_p`. Both rotations are right-handed and
//! positive about the positive axis.
//!
//! Direction-cosine matrices follow the "L_XY maps Y-frame components into
//! X-frame components" convention, so `v_g = L_GB * v_b`.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};

/// The four frames of the two-axis chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameId {
    Inertial,
    Base,
    Gimbal,
    Platform,
}

impl fmt::Display for FrameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FrameId::Inertial => "I",
            FrameId::Base => "B",
            FrameId::Gimbal => "G",
            FrameId::Platform => "P",
        };
        f.write_str(s)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    if !a.is_finite() || (a > -PI && a <= PI) {
        return a;
    }
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    // rem_euclid maps -pi to +pi already; keep the half-open interval explicit
    if w <= -PI {
        w += 2.0 * PI;
    }
    w
}

/// Relative gimbal angles and rates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GimbalAngles {
    /// Yaw, B to G about z (rad).
    pub psi: f64,
    /// Pitch, G to P about y (rad).
    pub theta: f64,
    pub psi_dot: f64,
    pub theta_dot: f64,
}

impl GimbalAngles {
    pub fn new(psi: f64, theta: f64, psi_dot: f64, theta_dot: f64) -> Self {
        Self {
            psi: wrap_angle(psi),
            theta: wrap_angle(theta),
            psi_dot,
            theta_dot,
        }
    }

    pub fn at_rest(psi: f64, theta: f64) -> Self {
        Self::new(psi, theta, 0.0, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.psi.is_finite()
            && self.theta.is_finite()
            && self.psi_dot.is_finite()
            && self.theta_dot.is_finite()
    }
}

/// Orthonormal 3x3 direction-cosine matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Frame rotation by `angle` about z: maps old-frame components into the
    /// rotated frame.
    pub fn about_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self(Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0))
    }

    /// Frame rotation by `angle` about y.
    pub fn about_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self(Matrix3::new(c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c))
    }

    /// Frame rotation by `angle` about x.
    pub fn about_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self(Matrix3::new(1.0, 0.0, 0.0, 0.0, c, s, 0.0, -s, c))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// `self * other`, i.e. apply `other` first.
    pub fn compose(&self, other: &RotationMatrix) -> Self {
        Self(self.0 * other.0)
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }

    /// Largest absolute entry of `R^T R - I`.
    pub fn orthonormality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Matrix3::identity()).abs().max()
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }
}

/// Angular rate with the frame its components are expressed in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateVector {
    pub omega: Vector3<f64>,
    pub frame: FrameId,
}

impl RateVector {
    pub fn new(x: f64, y: f64, z: f64, frame: FrameId) -> Self {
        Self {
            omega: Vector3::new(x, y, z),
            frame,
        }
    }

    pub fn from_vector(omega: Vector3<f64>, frame: FrameId) -> Self {
        Self { omega, frame }
    }

    pub fn zero(frame: FrameId) -> Self {
        Self::from_vector(Vector3::zeros(), frame)
    }

    pub fn x(&self) -> f64 {
        self.omega.x
    }

    pub fn y(&self) -> f64 {
        self.omega.y
    }

    pub fn z(&self) -> f64 {
        self.omega.z
    }

    pub fn is_finite(&self) -> bool {
        self.omega.iter().all(|v| v.is_finite())
    }
}

/// Gimbal and platform direction-cosine matrices for one angle pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerDcm {
    pub l_gb: RotationMatrix,
    pub l_pg: RotationMatrix,
    pub l_pb: RotationMatrix,
}

/// DCMs of the yaw-pitch sequence.
pub fn euler_dcm(angles: &GimbalAngles) -> EulerDcm {
    let l_gb = RotationMatrix::about_z(angles.psi);
    let l_pg = RotationMatrix::about_y(angles.theta);
    let l_pb = l_pg.compose(&l_gb);
    EulerDcm { l_gb, l_pg, l_pb }
}

/// Gimbal and platform inertial rates chained from the base rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainedRates {
    pub omega_g: RateVector,
    pub omega_p: RateVector,
}

/// Chains the base inertial rate through the gimbal joints.
///
/// # Panics
///
/// Panics when `omega_b` is not tagged with [`FrameId::Base`].
pub fn rate_chain(omega_b: &RateVector, angles: &GimbalAngles) -> ChainedRates {
    assert_eq!(
        omega_b.frame,
        FrameId::Base,
        "rate_chain expects the base rate expressed in B"
    );
    let dcm = euler_dcm(angles);
    let wg = dcm.l_gb.apply(&omega_b.omega) + Vector3::new(0.0, 0.0, angles.psi_dot);
    let wp = dcm.l_pg.apply(&wg) + Vector3::new(0.0, angles.theta_dot, 0.0);
    ChainedRates {
        omega_g: RateVector::from_vector(wg, FrameId::Gimbal),
        omega_p: RateVector::from_vector(wp, FrameId::Platform),
    }
}

/// Orientation of a body frame relative to Inertial, stored as a unit
/// quaternion that maps body components to inertial components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attitude(UnitQuaternion<f64>);

impl Default for Attitude {
    fn default() -> Self {
        Self::identity()
    }
}

impl Attitude {
    pub fn identity() -> Self {
        Self(UnitQuaternion::identity())
    }

    pub fn from_quaternion(q: UnitQuaternion<f64>) -> Self {
        Self(q)
    }

    /// Rotation by `angle` about the body `axis` (need not be unit length).
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Self {
        let axis = nalgebra::Unit::new_normalize(axis);
        Self(UnitQuaternion::from_axis_angle(&axis, angle))
    }

    pub fn quaternion(&self) -> &UnitQuaternion<f64> {
        &self.0
    }

    /// Raw `(w, x, y, z)` components.
    pub fn components(&self) -> [f64; 4] {
        let q = self.0.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn from_components(c: [f64; 4]) -> Self {
        Self(UnitQuaternion::from_quaternion(Quaternion::new(
            c[0], c[1], c[2], c[3],
        )))
    }

    pub fn body_to_inertial(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    pub fn inertial_to_body(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0.inverse() * v
    }

    /// Attitude of a child frame given the DCM `l_child_self` (mapping this
    /// frame's components into the child's).
    pub fn child(&self, l_child_self: &RotationMatrix) -> Attitude {
        let rot = nalgebra::Rotation3::from_matrix_unchecked(l_child_self.matrix().transpose());
        Attitude(self.0 * UnitQuaternion::from_rotation_matrix(&rot))
    }

    /// Rotation angle between two attitudes (rad).
    pub fn angle_to(&self, other: &Attitude) -> f64 {
        self.0.angle_to(&other.0)
    }
}

fn quat_rate(q: &Quaternion<f64>, w: &Vector3<f64>) -> Quaternion<f64> {
    q * Quaternion::new(0.0, w.x, w.y, w.z) * 0.5
}

/// Advances an attitude by a body rate held constant over `dt`, using the
/// same classical fourth-order scheme as the dynamics, then renormalises.
pub fn attitude_integrate(att: &Attitude, omega: &RateVector, dt: f64) -> Attitude {
    assert!(dt > 0.0, "attitude_integrate requires dt > 0");
    let q0 = *att.0.quaternion();
    let w = omega.omega;
    let k1 = quat_rate(&q0, &w);
    let k2 = quat_rate(&(q0 + k1 * (0.5 * dt)), &w);
    let k3 = quat_rate(&(q0 + k2 * (0.5 * dt)), &w);
    let k4 = quat_rate(&(q0 + k3 * dt), &w);
    let q = q0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    Attitude(UnitQuaternion::from_quaternion(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn zero_angles_give_identity() {
        let d = euler_dcm(&GimbalAngles::default());
        for m in [d.l_gb, d.l_pg, d.l_pb] {
            assert_abs_diff_eq!(*m.matrix(), Matrix3::identity(), epsilon = 1e-15);
        }
    }

    #[test]
    fn quarter_turn_yaw_maps_xb_to_minus_yg() {
        let d = euler_dcm(&GimbalAngles::at_rest(FRAC_PI_2, 0.0));
        let xg = d.l_gb.apply(&Vector3::x());
        assert_abs_diff_eq!(xg, Vector3::new(0.0, -1.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(*d.l_pg.matrix(), Matrix3::identity(), epsilon = 1e-15);
    }

    #[test]
    fn worst_case_orientation_product() {
        let d = euler_dcm(&GimbalAngles::at_rest(-PI / 4.0, PI / 4.0));
        assert_abs_diff_eq!(d.l_pb.entry(0, 0), 0.5, epsilon = 1e-12);
        // independent 3x3 multiply
        let a = d.l_pg.matrix();
        let b = d.l_gb.matrix();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| a[(i, k)] * b[(k, j)]).sum();
                assert_abs_diff_eq!(d.l_pb.entry(i, j), s, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn rate_chain_at_rest_is_zero() {
        let r = rate_chain(&RateVector::zero(FrameId::Base), &GimbalAngles::default());
        assert_eq!(r.omega_g.omega, Vector3::zeros());
        assert_eq!(r.omega_p.omega, Vector3::zeros());
        assert_eq!(r.omega_p.frame, FrameId::Platform);
    }

    #[test]
    fn yaw_rate_projects_through_pitch() {
        let angles = GimbalAngles::new(0.0, PI / 6.0, 1.0, 0.0);
        let r = rate_chain(&RateVector::zero(FrameId::Base), &angles);
        assert_abs_diff_eq!(r.omega_g.omega, Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(
            r.omega_p.omega,
            Vector3::new(-0.5, 0.0, 0.8660254037844386),
            epsilon = 1e-12
        );
    }

    #[test]
    fn counter_rotation_cancels() {
        let angles = GimbalAngles::new(0.3, 0.0, -1.0, 0.0);
        let r = rate_chain(&RateVector::new(0.0, 0.0, 1.0, FrameId::Base), &angles);
        assert_abs_diff_eq!(r.omega_g.omega, Vector3::zeros(), epsilon = 1e-15);
        assert_abs_diff_eq!(r.omega_p.omega, Vector3::zeros(), epsilon = 1e-15);
    }

    #[test]
    #[should_panic(expected = "expressed in B")]
    fn rate_chain_rejects_wrong_frame() {
        rate_chain(&RateVector::zero(FrameId::Gimbal), &GimbalAngles::default());
    }

    #[test]
    fn wrap_is_half_open() {
        assert_abs_diff_eq!(wrap_angle(PI), PI);
        assert_abs_diff_eq!(wrap_angle(-PI), PI);
        assert_abs_diff_eq!(wrap_angle(PI + 0.1), -PI + 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(7.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-12);
    }

    fn integrate_for(att: Attitude, w: Vector3<f64>, total: f64, steps: usize) -> Attitude {
        let dt = total / steps as f64;
        let rate = RateVector::from_vector(w, FrameId::Platform);
        (0..steps).fold(att, |a, _| attitude_integrate(&a, &rate, dt))
    }

    #[test]
    fn zero_rate_leaves_attitude() {
        let a = Attitude::from_axis_angle(Vector3::new(1.0, 2.0, 3.0), 0.7);
        let b = attitude_integrate(&a, &RateVector::zero(FrameId::Platform), 0.37);
        assert_abs_diff_eq!(a.angle_to(&b), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn full_revolution_closes() {
        let start = Attitude::from_axis_angle(Vector3::new(0.2, -0.4, 1.0), 0.4);
        let end = integrate_for(start, Vector3::new(0.0, 0.0, 2.0 * PI), 1.0, 1000);
        assert!(start.angle_to(&end) < 1e-6);
    }

    #[test]
    fn quarter_pitch_matches_axis_angle() {
        let end = integrate_for(Attitude::identity(), Vector3::new(0.0, FRAC_PI_2, 0.0), 1.0, 1000);
        let oracle = Attitude::from_axis_angle(Vector3::y(), FRAC_PI_2);
        assert!(end.angle_to(&oracle) < 1e-6);
    }

    #[test]
    fn child_attitude_matches_dcm() {
        let angles = GimbalAngles::at_rest(-0.6, 0.9);
        let d = euler_dcm(&angles);
        let base = Attitude::from_axis_angle(Vector3::new(1.0, 1.0, 0.0), 0.3);
        let plat = base.child(&d.l_pb);
        let v = Vector3::new(0.3, -0.2, 0.9);
        // platform components -> inertial two ways
        let direct = plat.body_to_inertial(&v);
        let chained = base.body_to_inertial(&d.l_pb.transpose().apply(&v));
        assert_abs_diff_eq!(direct, chained, epsilon = 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn dcms_are_proper_rotations(psi in -PI..PI, theta in -1.4f64..1.4) {
                let d = euler_dcm(&GimbalAngles::at_rest(psi, theta));
                for m in [d.l_gb, d.l_pg, d.l_pb] {
                    prop_assert!(m.orthonormality_error() < 1e-12);
                    prop_assert!((m.determinant() - 1.0).abs() < 1e-12);
                }
            }

            #[test]
            fn inverse_sequence_is_identity(psi in -PI..PI, theta in -1.4f64..1.4) {
                let d = euler_dcm(&GimbalAngles::at_rest(psi, theta));
                let back = RotationMatrix::about_z(-psi).compose(&RotationMatrix::about_y(-theta));
                let id = back.compose(&d.l_pb);
                prop_assert!((id.matrix() - Matrix3::identity()).abs().max() < 1e-12);
            }

            #[test]
            fn rate_chain_superposes(
                wb in prop::array::uniform3(-2.0f64..2.0),
                wb2 in prop::array::uniform3(-2.0f64..2.0),
                psi in -PI..PI, theta in -1.4f64..1.4,
                pd in -3.0f64..3.0, td in -3.0f64..3.0,
                pd2 in -3.0f64..3.0, td2 in -3.0f64..3.0,
            ) {
                let a1 = GimbalAngles::new(psi, theta, pd, td);
                let a2 = GimbalAngles::new(psi, theta, pd2, td2);
                let a12 = GimbalAngles::new(psi, theta, pd + pd2, td + td2);
                let v1 = RateVector::new(wb[0], wb[1], wb[2], FrameId::Base);
                let v2 = RateVector::new(wb2[0], wb2[1], wb2[2], FrameId::Base);
                let v12 = RateVector::from_vector(v1.omega + v2.omega, FrameId::Base);
                let sum = rate_chain(&v1, &a1).omega_p.omega + rate_chain(&v2, &a2).omega_p.omega;
                let joint = rate_chain(&v12, &a12).omega_p.omega;
                prop_assert!((sum - joint).abs().max() < 1e-12);
            }

            #[test]
            fn forward_then_reverse_rate_composes_to_identity(
                w in prop::array::uniform3(-10.0f64..10.0),
                steps in 1usize..200,
            ) {
                let wv = Vector3::new(w[0], w[1], w[2]);
                let n = wv.norm().max(1e-9);
                let dt = 0.01 / n;
                let start = Attitude::from_axis_angle(Vector3::new(0.1, 0.5, -0.3), 1.1);
                let fwd = integrate_for(start, wv, dt * steps as f64, steps);
                let back = integrate_for(fwd, -wv, dt * steps as f64, steps);
                prop_assert!(start.angle_to(&back) < 1e-6);
            }
        }
    }
}
