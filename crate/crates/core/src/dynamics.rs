//! Rigid-body equations of motion for the yaw gimbal and pitch platform.
//!
//! Both bodies are suspended on their principal axes (products of inertia
//! are taken as zero). The pitch platform obeys
//!
//! ```text
//! T_yp = Iyy_p * dω_yp + (Ixx_p - Izz_p) * ω_xp * ω_zp
//! ```
//!
//! and the external torque about the yaw axis of the gimbal+platform
//! assembly is
//!
//! ```text
//! T_zgp = (Izz_g + Izz_p cos²θ + Ixx_p sin²θ) dω_zg
//!       + (Izz_p - Ixx_p) sinθ cosθ dω_xg
//!       + (Iyy_g - Ixx_g) ω_xg ω_yg
//!       + (Iyy_p - Ixx_p) cosθ ω_xp ω_yp
//!       + (Iyy_p - Izz_p) sinθ ω_yp ω_zp
//!       + Izz_p θ' ω_xp cosθ
//!       + Ixx_p θ' ω_zp sinθ
//! ```
//!
//! which is the z-component of `T_g + L_PGᵀ T_p` with the platform's x/z
//! angular accelerations expanded through the pitch joint.

use nalgebra::{SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::actuation::{motor_torque, MotorParams};
use crate::error::{IspError, Result};
use crate::frames::{euler_dcm, rate_chain, wrap_angle, Attitude, FrameId, GimbalAngles, RateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Body {
    Platform,
    Gimbal,
}

/// Principal moments of inertia, kg·m².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertiaTensor {
    pub ixx: f64,
    pub iyy: f64,
    pub izz: f64,
    pub body: Body,
}

impl InertiaTensor {
    pub fn new(ixx: f64, iyy: f64, izz: f64, body: Body) -> Result<Self> {
        let key = match body {
            Body::Platform => "bodies.platform",
            Body::Gimbal => "bodies.gimbal",
        };
        for (name, v) in [("ixx", ixx), ("iyy", iyy), ("izz", izz)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(IspError::config(format!("{key}.{name}"), "moment of inertia must be > 0"));
            }
        }
        let tol = 1e-12;
        if ixx + iyy < izz - tol || iyy + izz < ixx - tol || izz + ixx < iyy - tol {
            return Err(IspError::config(key, "principal moments violate the triangle inequality"));
        }
        Ok(Self { ixx, iyy, izz, body })
    }

    /// Camera-mount telescope modeller, diagonal terms only.
    pub fn modeller_platform() -> Self {
        Self::new(0.0048, 0.0164, 0.0166, Body::Platform).expect("valid constants")
    }

    /// Estimated yaw gimbal; not measured on the hardware.
    pub fn default_gimbal() -> Self {
        Self::new(0.0100, 0.0100, 0.0100, Body::Gimbal).expect("valid constants")
    }

    pub fn diagonal(&self) -> Vector3<f64> {
        Vector3::new(self.ixx, self.iyy, self.izz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TorqueAxis {
    /// About `y_g = y_p`.
    PlatformPitch,
    /// About `z_b = z_g`.
    GimbalYaw,
}

/// Scalar joint torque, N·m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Torque {
    pub value: f64,
    pub axis: TorqueAxis,
}

impl Torque {
    pub fn pitch(value: f64) -> Self {
        Self {
            value,
            axis: TorqueAxis::PlatformPitch,
        }
    }

    pub fn yaw(value: f64) -> Self {
        Self {
            value,
            axis: TorqueAxis::GimbalYaw,
        }
    }
}

/// Joint friction: viscous plus tanh-smoothed Coulomb.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrictionModel {
    /// N·m·s/rad
    pub viscous: f64,
    /// N·m
    pub coulomb: f64,
    /// Smoothing rate of the Coulomb sign, rad/s.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    0.01
}

impl Default for FrictionModel {
    fn default() -> Self {
        Self {
            viscous: 0.0005,
            coulomb: 0.002,
            epsilon: default_epsilon(),
        }
    }
}

impl FrictionModel {
    pub fn frictionless() -> Self {
        Self {
            viscous: 0.0,
            coulomb: 0.0,
            epsilon: default_epsilon(),
        }
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        if !(self.viscous.is_finite() && self.viscous >= 0.0) {
            return Err(IspError::config(format!("{key}.viscous"), "must be >= 0"));
        }
        if !(self.coulomb.is_finite() && self.coulomb >= 0.0) {
            return Err(IspError::config(format!("{key}.coulomb"), "must be >= 0"));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(IspError::config(format!("{key}.epsilon"), "must be > 0"));
        }
        Ok(())
    }
}

/// Friction torque opposing the relative joint rate.
pub fn friction_torque(relative_rate: f64, model: &FrictionModel) -> f64 {
    -(model.viscous * relative_rate + model.coulomb * (relative_rate / model.epsilon).tanh())
}

/// Full dynamic state; the base rate and its derivative are prescribed inputs
/// evaluated at the state's time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicState {
    pub angles: GimbalAngles,
    pub base_attitude: Attitude,
    pub base_rate: RateVector,
    pub base_rate_dot: Vector3<f64>,
}

impl DynamicState {
    pub fn at_rest(psi: f64, theta: f64) -> Self {
        Self {
            angles: GimbalAngles::at_rest(psi, theta),
            base_attitude: Attitude::identity(),
            base_rate: RateVector::zero(FrameId::Base),
            base_rate_dot: Vector3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.angles.is_finite()
            && self.base_rate.is_finite()
            && self.base_attitude.components().iter().all(|c| c.is_finite())
    }

    /// Inertial attitude of the platform frame.
    pub fn platform_attitude(&self) -> Attitude {
        self.base_attitude.child(&euler_dcm(&self.angles).l_pb)
    }
}

/// Gimbal x/y angular accelerations imposed kinematically by the base.
fn gimbal_xy_acceleration(state: &DynamicState) -> (f64, f64) {
    let dcm = euler_dcm(&state.angles);
    let v = dcm.l_gb.apply(&state.base_rate.omega);
    let a = dcm.l_gb.apply(&state.base_rate_dot);
    let pd = state.angles.psi_dot;
    (a.x + pd * v.y, a.y - pd * v.x)
}

/// Inertial pitch acceleration of the platform, `dω_yp`, from the platform
/// equation of motion.
pub fn pitch_acceleration(state: &DynamicState, inertia_p: &InertiaTensor, t_yp: Torque) -> f64 {
    debug_assert_eq!(t_yp.axis, TorqueAxis::PlatformPitch);
    let wp = rate_chain(&state.base_rate, &state.angles).omega_p.omega;
    (t_yp.value - (inertia_p.ixx - inertia_p.izz) * wp.x * wp.z) / inertia_p.iyy
}

/// Effective yaw inertia seen by the yaw motor at pitch `theta`.
pub fn yaw_effective_inertia(theta: f64, inertia_p: &InertiaTensor, inertia_g: &InertiaTensor) -> f64 {
    let (s, c) = theta.sin_cos();
    inertia_g.izz + inertia_p.izz * c * c + inertia_p.ixx * s * s
}

/// Inertial yaw acceleration of the gimbal, `dω_zg`, from the yaw equation of
/// motion of the gimbal+platform assembly.
pub fn yaw_acceleration(
    state: &DynamicState,
    inertia_p: &InertiaTensor,
    inertia_g: &InertiaTensor,
    t_zgp: Torque,
) -> f64 {
    debug_assert_eq!(t_zgp.axis, TorqueAxis::GimbalYaw);
    let rates = rate_chain(&state.base_rate, &state.angles);
    let wg = rates.omega_g.omega;
    let wp = rates.omega_p.omega;
    let (s, c) = state.angles.theta.sin_cos();
    let td = state.angles.theta_dot;
    let (wdot_xg, _) = gimbal_xy_acceleration(state);
    let p = inertia_p;
    let g = inertia_g;

    let coupling = (p.izz - p.ixx) * s * c * wdot_xg
        + (g.iyy - g.ixx) * wg.x * wg.y
        + (p.iyy - p.ixx) * c * wp.x * wp.y
        + (p.iyy - p.izz) * s * wp.y * wp.z
        + p.izz * td * wp.x * c
        + p.ixx * td * wp.z * s;
    (t_zgp.value - coupling) / yaw_effective_inertia(state.angles.theta, p, g)
}

/// Relative joint accelerations `(psi_ddot, theta_ddot)`.
pub fn joint_accelerations(
    state: &DynamicState,
    inertia_p: &InertiaTensor,
    inertia_g: &InertiaTensor,
    t_zgp: f64,
    t_yp: f64,
) -> (f64, f64) {
    let wdot_zg = yaw_acceleration(state, inertia_p, inertia_g, Torque::yaw(t_zgp));
    let wdot_yp = pitch_acceleration(state, inertia_p, Torque::pitch(t_yp));
    let (_, wdot_yg) = gimbal_xy_acceleration(state);
    let psi_ddot = wdot_zg - state.base_rate_dot.z;
    let theta_ddot = wdot_yp - wdot_yg;
    (psi_ddot, theta_ddot)
}

/// Total rotational kinetic energy of gimbal and platform, J.
pub fn system_energy(state: &DynamicState, inertia_p: &InertiaTensor, inertia_g: &InertiaTensor) -> f64 {
    let r = rate_chain(&state.base_rate, &state.angles);
    let kg = r.omega_g.omega.component_mul(&r.omega_g.omega).dot(&inertia_g.diagonal());
    let kp = r.omega_p.omega.component_mul(&r.omega_p.omega).dot(&inertia_p.diagonal());
    0.5 * (kg + kp)
}

/// Source of the prescribed base inertial rate (expressed in B).
pub trait BaseMotionSource {
    fn rate(&self, t: f64) -> Vector3<f64>;
    fn rate_dot(&self, t: f64) -> Vector3<f64>;
}

/// A base that never moves.
#[derive(Debug, Clone, Copy, Default)]
pub struct FixedBase;

impl BaseMotionSource for FixedBase {
    fn rate(&self, _t: f64) -> Vector3<f64> {
        Vector3::zeros()
    }

    fn rate_dot(&self, _t: f64) -> Vector3<f64> {
        Vector3::zeros()
    }
}

/// How a joint is driven over one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drive {
    /// External torque held constant across the step, N·m.
    Torque(f64),
    /// Motor terminal voltage held constant; torque follows the shaft rate.
    Voltage(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDrive {
    pub yaw: Drive,
    pub pitch: Drive,
}

impl JointDrive {
    pub fn torques(yaw: f64, pitch: f64) -> Self {
        Self {
            yaw: Drive::Torque(yaw),
            pitch: Drive::Torque(pitch),
        }
    }

    pub fn voltages(yaw: f64, pitch: f64) -> Self {
        Self {
            yaw: Drive::Voltage(yaw),
            pitch: Drive::Voltage(pitch),
        }
    }

    pub fn idle() -> Self {
        Self::torques(0.0, 0.0)
    }
}

/// Physical parameters of the two-axis mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GimbalPlant {
    pub platform: InertiaTensor,
    pub gimbal: InertiaTensor,
    pub yaw_friction: FrictionModel,
    pub pitch_friction: FrictionModel,
    pub yaw_motor: MotorParams,
    pub pitch_motor: MotorParams,
    /// Joints mechanically locked to the base.
    pub caged: bool,
}

impl Default for GimbalPlant {
    fn default() -> Self {
        Self {
            platform: InertiaTensor::modeller_platform(),
            gimbal: InertiaTensor::default_gimbal(),
            yaw_friction: FrictionModel::default(),
            pitch_friction: FrictionModel::default(),
            yaw_motor: MotorParams::default(),
            pitch_motor: MotorParams::default(),
            caged: false,
        }
    }
}

type StateVec = SVector<f64, 8>;

fn pack(s: &DynamicState) -> StateVec {
    let q = s.base_attitude.components();
    StateVec::from_column_slice(&[
        s.angles.psi,
        s.angles.theta,
        s.angles.psi_dot,
        s.angles.theta_dot,
        q[0],
        q[1],
        q[2],
        q[3],
    ])
}

impl GimbalPlant {
    pub fn frictionless(mut self) -> Self {
        self.yaw_friction = FrictionModel::frictionless();
        self.pitch_friction = FrictionModel::frictionless();
        self
    }

    /// Net joint torques `(T_zgp, T_yp)` for the drive at the given relative rates.
    pub fn joint_torques(&self, angles: &GimbalAngles, drive: &JointDrive) -> (f64, f64) {
        let actuate = |d: Drive, rate: f64, motor: &MotorParams| match d {
            Drive::Torque(t) => t,
            Drive::Voltage(v) => motor_torque(v, rate, motor),
        };
        let yaw = actuate(drive.yaw, angles.psi_dot, &self.yaw_motor)
            + friction_torque(angles.psi_dot, &self.yaw_friction);
        let pitch = actuate(drive.pitch, angles.theta_dot, &self.pitch_motor)
            + friction_torque(angles.theta_dot, &self.pitch_friction);
        (yaw, pitch)
    }

    fn state_at(&self, y: &StateVec, t: f64, base: &dyn BaseMotionSource) -> DynamicState {
        DynamicState {
            angles: GimbalAngles {
                psi: y[0],
                theta: y[1],
                psi_dot: y[2],
                theta_dot: y[3],
            },
            base_attitude: Attitude::from_quaternion(nalgebra::UnitQuaternion::new_unchecked(
                nalgebra::Quaternion::new(y[4], y[5], y[6], y[7]),
            )),
            base_rate: RateVector::from_vector(base.rate(t), FrameId::Base),
            base_rate_dot: base.rate_dot(t),
        }
    }

    fn derivative(&self, t: f64, y: &StateVec, drive: &JointDrive, base: &dyn BaseMotionSource) -> StateVec {
        let s = self.state_at(y, t, base);
        let (psi_ddot, theta_ddot, psi_dot, theta_dot) = if self.caged {
            (0.0, 0.0, 0.0, 0.0)
        } else {
            let (t_z, t_y) = self.joint_torques(&s.angles, drive);
            let (a, b) = joint_accelerations(&s, &self.platform, &self.gimbal, t_z, t_y);
            (a, b, y[2], y[3])
        };
        let q = nalgebra::Quaternion::new(y[4], y[5], y[6], y[7]);
        let w = s.base_rate.omega;
        let qd = q * nalgebra::Quaternion::new(0.0, w.x, w.y, w.z) * 0.5;
        StateVec::from_column_slice(&[
            psi_dot, theta_dot, psi_ddot, theta_ddot, qd.w, qd.i, qd.j, qd.k,
        ])
    }

    /// Advances the state by one classical fourth-order step of length `dt`
    /// starting at time `t`. Drives are held over the step.
    pub fn step(
        &self,
        state: &DynamicState,
        drive: &JointDrive,
        base: &dyn BaseMotionSource,
        t: f64,
        dt: f64,
    ) -> Result<DynamicState> {
        assert!(dt > 0.0, "step requires dt > 0");
        let y0 = pack(state);
        let k1 = self.derivative(t, &y0, drive, base);
        let k2 = self.derivative(t + 0.5 * dt, &(y0 + k1 * (0.5 * dt)), drive, base);
        let k3 = self.derivative(t + 0.5 * dt, &(y0 + k2 * (0.5 * dt)), drive, base);
        let k4 = self.derivative(t + dt, &(y0 + k3 * dt), drive, base);
        let y = y0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);

        if y.iter().any(|v| !v.is_finite()) {
            return Err(IspError::Divergence {
                time: t + dt,
                detail: format!("non-finite gimbal state {:?}", y.as_slice()),
            });
        }
        let mut next = self.state_at(&y, t + dt, base);
        next.angles.psi = wrap_angle(next.angles.psi);
        next.angles.theta = wrap_angle(next.angles.theta);
        next.base_attitude = Attitude::from_components([y[4], y[5], y[6], y[7]]);
        if !next.is_finite() {
            return Err(IspError::Divergence {
                time: t + dt,
                detail: "non-finite base motion".into(),
            });
        }
        Ok(next)
    }
}

/// Free-function form of [`GimbalPlant::step`].
pub fn step_dynamics(
    plant: &GimbalPlant,
    state: &DynamicState,
    drive: &JointDrive,
    base: &dyn BaseMotionSource,
    t: f64,
    dt: f64,
) -> Result<DynamicState> {
    plant.step(state, drive, base, t, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn state(psi: f64, theta: f64, pd: f64, td: f64, wb: Vector3<f64>, wbd: Vector3<f64>) -> DynamicState {
        DynamicState {
            angles: GimbalAngles::new(psi, theta, pd, td),
            base_attitude: Attitude::identity(),
            base_rate: RateVector::from_vector(wb, FrameId::Base),
            base_rate_dot: wbd,
        }
    }

    #[test]
    fn pitch_rest_is_zero() {
        let s = DynamicState::at_rest(0.0, 0.0);
        assert_eq!(pitch_acceleration(&s, &InertiaTensor::modeller_platform(), Torque::pitch(0.0)), 0.0);
    }

    #[test]
    fn pitch_cross_term_from_modeller_tensor() {
        // ω_p = (1, 0, 2) with psi = theta = 0: base rate (1, 0, 0), yaw rate 2
        let s = state(0.0, 0.0, 2.0, 0.0, Vector3::new(1.0, 0.0, 0.0), Vector3::zeros());
        let a = pitch_acceleration(&s, &InertiaTensor::modeller_platform(), Torque::pitch(0.0));
        assert_abs_diff_eq!(a, -(0.0048 - 0.0166) * 2.0 / 0.0164, epsilon = 1e-12);
        assert_abs_diff_eq!(a, 1.4390, epsilon = 1e-4);
    }

    #[test]
    fn pitch_symmetric_platform() {
        let p = InertiaTensor::new(0.01, 0.0164, 0.01, Body::Platform).unwrap();
        let s = state(0.3, 0.2, 1.0, 0.5, Vector3::new(0.4, 0.1, 0.7), Vector3::zeros());
        assert_abs_diff_eq!(pitch_acceleration(&s, &p, Torque::pitch(0.0164)), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn yaw_at_zero_pitch() {
        let s = DynamicState::at_rest(0.0, 0.0);
        let a = yaw_acceleration(
            &s,
            &InertiaTensor::modeller_platform(),
            &InertiaTensor::default_gimbal(),
            Torque::yaw(0.0266),
        );
        assert_abs_diff_eq!(a, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn yaw_at_ninety_pitch() {
        let p = InertiaTensor::modeller_platform();
        let g = InertiaTensor::default_gimbal();
        let s = DynamicState::at_rest(0.0, FRAC_PI_2);
        let j = g.izz + p.ixx;
        assert_abs_diff_eq!(yaw_effective_inertia(FRAC_PI_2, &p, &g), j, epsilon = 1e-15);
        assert_abs_diff_eq!(yaw_acceleration(&s, &p, &g, Torque::yaw(j)), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn yaw_equilibrium() {
        let s = DynamicState::at_rest(0.4, -0.3);
        let a = yaw_acceleration(
            &s,
            &InertiaTensor::modeller_platform(),
            &InertiaTensor::default_gimbal(),
            Torque::yaw(0.0),
        );
        assert_eq!(a, 0.0);
    }

    /// Newton-Euler residuals evaluated with full vectors. The expanded scalar
    /// yaw/pitch forms must zero the yaw z-residual and the pitch y-residual.
    fn vector_residuals(
        s: &DynamicState,
        p: &InertiaTensor,
        g: &InertiaTensor,
        t_zgp: f64,
        t_yp: f64,
    ) -> (f64, f64) {
        let (psi_ddot, theta_ddot) = joint_accelerations(s, p, g, t_zgp, t_yp);
        let d = euler_dcm(&s.angles);
        let wb = s.base_rate.omega;
        let wg = d.l_gb.apply(&wb) + Vector3::new(0.0, 0.0, s.angles.psi_dot);
        let wp = d.l_pg.apply(&wg) + Vector3::new(0.0, s.angles.theta_dot, 0.0);
        // derivative of L_GB w.r.t. psi, applied to ω_b
        let (sp, cp) = s.angles.psi.sin_cos();
        let dl = nalgebra::Matrix3::new(-sp, cp, 0.0, -cp, -sp, 0.0, 0.0, 0.0, 0.0);
        let wgd = d.l_gb.apply(&s.base_rate_dot)
            + dl * wb * s.angles.psi_dot
            + Vector3::new(0.0, 0.0, psi_ddot);
        let (st, ct) = s.angles.theta.sin_cos();
        let dlp = nalgebra::Matrix3::new(-st, 0.0, -ct, 0.0, 0.0, 0.0, ct, 0.0, -st);
        let wpd = d.l_pg.apply(&wgd) + dlp * wg * s.angles.theta_dot + Vector3::new(0.0, theta_ddot, 0.0);
        let ip = nalgebra::Matrix3::from_diagonal(&p.diagonal());
        let ig = nalgebra::Matrix3::from_diagonal(&g.diagonal());
        let tp = ip * wpd + wp.cross(&(ip * wp));
        let tg = ig * wgd + wg.cross(&(ig * wg));
        let tgp = tg + d.l_pg.transpose().apply(&tp);
        (tgp.z - t_zgp, tp.y - t_yp)
    }

    #[test]
    fn expanded_equations_match_vector_newton_euler() {
        let p = InertiaTensor::modeller_platform();
        let g = InertiaTensor::new(0.011, 0.007, 0.013, Body::Gimbal).unwrap();
        let cases = [
            (0.0, 0.0),
            (0.0, FRAC_PI_2),
            (-0.7, 0.8),
            (2.1, -1.2),
        ];
        for (psi, theta) in cases {
            let s = state(
                psi,
                theta,
                0.9,
                -1.3,
                Vector3::new(0.3, -0.8, 0.5),
                Vector3::new(1.1, 0.4, -2.0),
            );
            let (rz, ry) = vector_residuals(&s, &p, &g, 0.013, -0.021);
            assert!(rz.abs() < 1e-14, "yaw residual {rz} at ({psi}, {theta})");
            assert!(ry.abs() < 1e-14, "pitch residual {ry} at ({psi}, {theta})");
        }
    }

    /// Each yaw coupling term checked alone at θ = 0 and θ = 90°.
    #[test]
    fn yaw_terms_individually() {
        let p = InertiaTensor::new(0.003, 0.005, 0.007, Body::Platform).unwrap();
        let g = InertiaTensor::new(0.002, 0.006, 0.005, Body::Gimbal).unwrap();
        let acc = |s: &DynamicState| yaw_acceleration(s, &p, &g, Torque::yaw(0.0));

        // θ = 0, base rate about x_b, θ' = 1: ω_p = (a, 1, 0).
        // Surviving terms: (Iyy_p - Ixx_p) a*1 and Izz_p θ' a.
        let a = 0.6;
        let s = state(0.0, 0.0, 0.0, 1.0, Vector3::new(a, 0.0, 0.0), Vector3::zeros());
        let expected = -((p.iyy - p.ixx) * a + p.izz * a) / (g.izz + p.izz);
        assert_abs_diff_eq!(acc(&s), expected, epsilon = 1e-15);

        // θ = 0, ω_g = (a, b, 0): gimbal product term plus platform ω_xp ω_yp.
        let b = -0.4;
        let s = state(0.0, 0.0, 0.0, 0.0, Vector3::new(a, b, 0.0), Vector3::zeros());
        let expected = -((g.iyy - g.ixx) * a * b + (p.iyy - p.ixx) * a * b) / (g.izz + p.izz);
        assert_abs_diff_eq!(acc(&s), expected, epsilon = 1e-15);

        // θ = 90°: ω_xp = -ω_zg, ω_zp = ω_xg. Base rate about x_b gives ω_zp = a,
        // θ' = 1 gives ω_yp = 1: terms (Iyy_p - Izz_p) ω_yp ω_zp + Ixx_p θ' ω_zp.
        let s = state(0.0, FRAC_PI_2, 0.0, 1.0, Vector3::new(a, 0.0, 0.0), Vector3::zeros());
        let expected = -((p.iyy - p.izz) * a + p.ixx * a) / (g.izz + p.ixx);
        assert_abs_diff_eq!(acc(&s), expected, epsilon = 1e-12);

        // dω_xg coupling vanishes at both 0 and 90°.
        for th in [0.0, FRAC_PI_2] {
            let s = state(0.0, th, 0.0, 0.0, Vector3::zeros(), Vector3::new(3.0, 0.0, 0.0));
            assert_abs_diff_eq!(acc(&s), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn friction_laws() {
        let m = FrictionModel::default();
        assert_eq!(friction_torque(0.0, &m), 0.0);
        let visc = FrictionModel { viscous: 0.001, coulomb: 0.0, epsilon: 0.01 };
        assert_abs_diff_eq!(friction_torque(2.0, &visc), -0.002, epsilon = 1e-15);
        let coul = FrictionModel { viscous: 0.0, coulomb: 0.005, epsilon: 0.01 };
        assert_abs_diff_eq!(friction_torque(10.0, &coul), -0.005, epsilon = 1e-12);
    }

    #[test]
    fn energy_examples() {
        let p = InertiaTensor::modeller_platform();
        let g = InertiaTensor::default_gimbal();
        assert_eq!(system_energy(&DynamicState::at_rest(0.2, 0.3), &p, &g), 0.0);
        // θ' = 1 only: ω_p = (0, 1, 0), gimbal at rest
        let s = state(0.0, 0.0, 0.0, 1.0, Vector3::zeros(), Vector3::zeros());
        assert_abs_diff_eq!(system_energy(&s, &p, &g), 0.0082, epsilon = 1e-15);
        let s1 = state(0.4, 0.2, 0.7, -0.3, Vector3::zeros(), Vector3::zeros());
        let s2 = state(0.4, 0.2, 1.4, -0.6, Vector3::zeros(), Vector3::zeros());
        assert_abs_diff_eq!(
            system_energy(&s2, &p, &g),
            4.0 * system_energy(&s1, &p, &g),
            epsilon = 1e-15
        );
    }

    #[test]
    fn fixed_point_is_preserved() {
        let plant = GimbalPlant::default();
        let s = DynamicState::at_rest(0.0, 0.0);
        let n = plant.step(&s, &JointDrive::idle(), &FixedBase, 0.0, 0.001).unwrap();
        assert_eq!(n, s);
    }

    #[test]
    fn constant_pitch_torque_closed_form() {
        let mut plant = GimbalPlant::default().frictionless();
        plant.platform = InertiaTensor::new(0.01, 0.0164, 0.01, Body::Platform).unwrap();
        let torque = 0.0164 * 0.5;
        let mut s = DynamicState::at_rest(0.0, 0.0);
        let dt = 0.001;
        for k in 0..100 {
            s = plant
                .step(&s, &JointDrive::torques(0.0, torque), &FixedBase, k as f64 * dt, dt)
                .unwrap();
        }
        assert_abs_diff_eq!(s.angles.theta_dot, 0.5 * 0.1, epsilon = 1e-8);
        assert_abs_diff_eq!(s.angles.theta, 0.5 * 0.5 * 0.01, epsilon = 1e-8);
        assert_eq!(s.angles.psi_dot, 0.0);
    }

    #[test]
    fn diverging_state_is_reported() {
        let plant = GimbalPlant::default();
        let s = DynamicState::at_rest(0.0, 0.0);
        let err = plant
            .step(&s, &JointDrive::torques(f64::NAN, 0.0), &FixedBase, 0.25, 0.001)
            .unwrap_err();
        assert!(matches!(err, IspError::Divergence { time, .. } if (time - 0.251).abs() < 1e-12));
    }

    #[test]
    fn caged_joints_follow_base() {
        struct Spin;
        impl BaseMotionSource for Spin {
            fn rate(&self, _t: f64) -> Vector3<f64> {
                Vector3::new(0.0, 0.5, 0.2)
            }
            fn rate_dot(&self, _t: f64) -> Vector3<f64> {
                Vector3::zeros()
            }
        }
        let plant = GimbalPlant { caged: true, ..GimbalPlant::default() };
        let s0 = DynamicState::at_rest(-0.5, 0.5);
        let s = plant.step(&s0, &JointDrive::voltages(10.0, -10.0), &Spin, 0.0, 0.001).unwrap();
        assert_eq!(s.angles, s0.angles);
    }

    #[test]
    fn triangle_inequality_enforced() {
        assert!(InertiaTensor::new(0.001, 0.001, 0.01, Body::Platform).is_err());
        assert!(InertiaTensor::new(0.0, 0.001, 0.001, Body::Gimbal).is_err());
    }
}
