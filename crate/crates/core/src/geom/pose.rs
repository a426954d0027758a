use nalgebra::{Matrix3, Quaternion, Rotation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Rigid transform `x ↦ R·x + t`.
///
/// Poses are named `<to>_from_<from>`: `world_from_ego.apply(p_ego)` yields a
/// world-frame point. Serialized as `{"q": [w, x, y, z], "t": [x, y, z]}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// Rotation by `yaw` about +z followed by a translation.
    pub fn from_yaw(yaw: f64, translation: Vector3<f64>) -> Self {
        Self::new(
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw),
            translation,
        )
    }

    /// Mounting pose of a camera on a vehicle (`ego_from_camera`).
    ///
    /// The ego frame is x-forward, y-left, z-up; the camera frame is
    /// z-forward, x-right, y-down. `yaw` turns the optical axis about ego +z,
    /// so `yaw = 0` looks straight ahead and `yaw = π/2` looks left.
    pub fn camera_mount(yaw: f64, translation: Vector3<f64>) -> Self {
        // Columns are the camera axes expressed in the ego frame.
        let base = Matrix3::new(0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0);
        let base = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(base));
        let turn = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw);
        Self::new(turn * base, translation)
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rotation = self.rotation.inverse();
        Pose {
            rotation,
            translation: -(rotation * self.translation),
        }
    }

    #[inline]
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    #[inline]
    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    /// Heading of the rotated x axis projected on the horizontal plane.
    pub fn yaw(&self) -> f64 {
        let x = self.rotation * Vector3::x();
        x.y.atan2(x.x)
    }

    /// Builds a pose from raw `[w, x, y, z]` components. Components within
    /// 1e-12 of unit norm are kept bit-for-bit; others are renormalized.
    pub fn from_wxyz(q: [f64; 4], t: [f64; 3]) -> Option<Pose> {
        let quat = Quaternion::new(q[0], q[1], q[2], q[3]);
        let norm = quat.norm();
        if !norm.is_finite() || norm < 1e-9 || t.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let rotation = if (norm - 1.0).abs() <= 1e-12 {
            Unit::new_unchecked(quat)
        } else {
            Unit::new_normalize(quat)
        };
        Some(Pose::new(rotation, Vector3::new(t[0], t[1], t[2])))
    }

    pub fn to_wxyz(&self) -> ([f64; 4], [f64; 3]) {
        let q = self.rotation.quaternion();
        (
            [q.w, q.i, q.j, q.k],
            [self.translation.x, self.translation.y, self.translation.z],
        )
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseRepr {
    q: [f64; 4],
    t: [f64; 3],
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let (q, t) = self.to_wxyz();
        PoseRepr { q, t }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = PoseRepr::deserialize(deserializer)?;
        Pose::from_wxyz(repr.q, repr.t)
            .ok_or_else(|| serde::de::Error::custom("pose quaternion must be finite and non-zero"))
    }
}
