//! Unit-quaternion helpers in `[w, x, y, z]` order.
//!
//! Euler angles follow the Z-Y-X (yaw, pitch, roll) convention and are given
//! in degrees as `[roll, pitch, yaw]`.

use crate::scalar::Real;

pub type Quat<T> = [T; 4];
pub type Vec3<T> = [T; 3];

pub fn identity<T: Real>() -> Quat<T> {
    [T::one(), T::zero(), T::zero(), T::zero()]
}

pub fn norm<T: Real>(q: &Quat<T>) -> T {
    (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt()
}

pub fn normalize<T: Real>(q: &Quat<T>) -> Quat<T> {
    let n = norm(q);
    q.map(|c| c / n)
}

pub fn mul<T: Real>(a: &Quat<T>, b: &Quat<T>) -> Quat<T> {
    let [aw, ax, ay, az] = *a;
    let [bw, bx, by, bz] = *b;
    [
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ]
}

/// Rotation by `angle_deg` about a unit `axis`.
pub fn from_axis_angle<T: Real>(axis: Vec3<T>, angle_deg: T) -> Quat<T> {
    let half = angle_deg.to_radians() / T::lit(2.0);
    let (s, c) = half.sin_cos();
    [c, axis[0] * s, axis[1] * s, axis[2] * s]
}

/// Rotate `v` from the sensor frame into the world frame.
pub fn rotate<T: Real>(q: &Quat<T>, v: Vec3<T>) -> Vec3<T> {
    let [w, x, y, z] = *q;
    let two = T::lit(2.0);
    // t = 2 (q_vec x v); v' = v + w t + q_vec x t
    let t = [
        two * (y * v[2] - z * v[1]),
        two * (z * v[0] - x * v[2]),
        two * (x * v[1] - y * v[0]),
    ];
    [
        v[0] + w * t[0] + (y * t[2] - z * t[1]),
        v[1] + w * t[1] + (z * t[0] - x * t[2]),
        v[2] + w * t[2] + (x * t[1] - y * t[0]),
    ]
}

/// `[roll, pitch, yaw]` in degrees.
pub fn to_euler_deg<T: Real>(q: &Quat<T>) -> Vec3<T> {
    let [w, x, y, z] = *q;
    let (one, two) = (T::one(), T::lit(2.0));
    let roll = (two * (w * x + y * z)).atan2(one - two * (x * x + y * y));
    let sp = (two * (w * y - z * x)).max(-one).min(one);
    let pitch = sp.asin();
    let yaw = (two * (w * z + x * y)).atan2(one - two * (y * y + z * z));
    [roll.to_degrees(), pitch.to_degrees(), yaw.to_degrees()]
}

pub fn from_euler_deg<T: Real>(euler: Vec3<T>) -> Quat<T> {
    let half = T::lit(0.5);
    let (sr, cr) = (euler[0].to_radians() * half).sin_cos();
    let (sp, cp) = (euler[1].to_radians() * half).sin_cos();
    let (sy, cy) = (euler[2].to_radians() * half).sin_cos();
    [
        cr * cp * cy + sr * sp * sy,
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
    ]
}
