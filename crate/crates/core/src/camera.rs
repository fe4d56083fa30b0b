//! Pinhole camera geometry: pixel/ray maps on the unit sphere and the
//! projection Jacobian used by the image-gradient chain rule.

use nalgebra::{Matrix2x3, Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};

/// Frontal-hemisphere cutoff on e3'x; rays closer to the horizon than this
/// are rejected before the projective division.
pub const EPS_Z: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fu: f64,
    pub fv: f64,
    pub u0: f64,
    pub v0: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fu: f64, fv: f64, u0: f64, v0: f64, width: usize, height: usize) -> Result<Self> {
        if fu <= 0.0 || fv <= 0.0 {
            return Err(Error::Config(format!(
                "focal lengths must be positive (fu={fu}, fv={fv})"
            )));
        }
        if u0 < 0.0 || u0 >= width as f64 || v0 < 0.0 || v0 >= height as f64 {
            return Err(Error::Config(format!(
                "principal point ({u0}, {v0}) outside {width}x{height} image"
            )));
        }
        Ok(CameraIntrinsics {
            fu,
            fv,
            u0,
            v0,
            width,
            height,
        })
    }

    /// Default mapping for a bare image: fu = fv = width/2, principal point at
    /// the image center.
    pub fn default_for(width: usize, height: usize) -> Self {
        CameraIntrinsics {
            fu: width as f64 / 2.0,
            fv: width as f64 / 2.0,
            u0: width as f64 / 2.0,
            v0: height as f64 / 2.0,
            width,
            height,
        }
    }

    /// The 2x3 projection matrix [[fu, 0, u0], [0, fv, v0]].
    pub fn projection_matrix(&self) -> Matrix2x3<f64> {
        Matrix2x3::new(self.fu, 0.0, self.u0, 0.0, self.fv, self.v0)
    }
}

/// A unit vector on the sphere of ray directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereDirection(Vector3<f64>);

impl SphereDirection {
    pub fn vector(&self) -> &Vector3<f64> {
        &self.0
    }

    /// True when the ray can project into the image (e3'x > EPS_Z).
    pub fn is_frontal(&self) -> bool {
        self.0.z > EPS_Z
    }
}

/// Skew-symmetric matrix a_x with a_x b = a x b.
pub fn skew(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Projects a nonzero vector onto the unit sphere.
pub fn sphere_project(v: &Vector3<f64>) -> Result<SphereDirection> {
    let n = v.norm();
    if n <= 0.0 || !n.is_finite() {
        return Err(Error::DegenerateDirection);
    }
    Ok(SphereDirection(v / n))
}

/// Orthogonal projector onto the sphere tangent space at x: I - x x'.
pub fn tangent_projector(x: &SphereDirection) -> Matrix3<f64> {
    Matrix3::identity() - x.0 * x.0.transpose()
}

/// Perspective projection of a frontal ray to pixel coordinates.
pub fn ray_to_pixel(k: &CameraIntrinsics, x: &SphereDirection) -> Result<Vector2<f64>> {
    let z = x.0.z;
    if z <= EPS_Z {
        return Err(Error::BehindCamera { z });
    }
    Ok(Vector2::new(
        k.fu * x.0.x / z + k.u0,
        k.fv * x.0.y / z + k.v0,
    ))
}

/// Back-projects a pixel to its unit ray direction.
pub fn pixel_to_ray(k: &CameraIntrinsics, u: f64, v: f64) -> SphereDirection {
    let d = Vector3::new((u - k.u0) / k.fu, (v - k.v0) / k.fv, 1.0);
    // always nonzero: z component is 1
    sphere_project(&d).expect("back-projected ray is never zero")
}

/// Jacobian of the projection h at x, as a 2x3 map on ambient directions.
/// Satisfies Dh(x) x = 0 (the projection is constant along the ray).
pub fn pixel_jacobian(k: &CameraIntrinsics, x: &SphereDirection) -> Result<Matrix2x3<f64>> {
    let z = x.0.z;
    if z <= EPS_Z {
        return Err(Error::BehindCamera { z });
    }
    let inner = Matrix3::identity() - x.0 * Vector3::new(0.0, 0.0, 1.0 / z).transpose();
    Ok(k.projection_matrix() * inner / z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(128.0, 128.0, 128.0, 127.0, 256, 254).unwrap()
    }

    #[test]
    fn sphere_project_axis() {
        let x = sphere_project(&Vector3::new(0.0, 0.0, 2.0)).unwrap();
        assert_abs_diff_eq!(x.vector(), &Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-15);
    }

    #[test]
    fn sphere_project_hand_case() {
        let x = sphere_project(&Vector3::new(3.0, 4.0, 0.0)).unwrap();
        assert_abs_diff_eq!(x.vector(), &Vector3::new(0.6, 0.8, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn sphere_project_rejects_zero() {
        assert!(sphere_project(&Vector3::zeros()).is_err());
    }

    #[test]
    fn projector_at_pole() {
        let x = sphere_project(&Vector3::new(0.0, 0.0, 1.0)).unwrap();
        let p = tangent_projector(&x);
        let expected = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0));
        assert_abs_diff_eq!(&p, &expected, epsilon = 1e-15);
    }

    #[test]
    fn projector_rank_two() {
        let x = sphere_project(&Vector3::new(0.3, -0.4, 0.9)).unwrap();
        let p = tangent_projector(&x);
        let eig = p.symmetric_eigen().eigenvalues;
        let mut e: Vec<f64> = eig.iter().copied().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(e[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ray_to_pixel_optical_axis() {
        let x = sphere_project(&Vector3::new(0.0, 0.0, 1.0)).unwrap();
        let p = ray_to_pixel(&k(), &x).unwrap();
        assert_abs_diff_eq!(p, Vector2::new(128.0, 127.0), epsilon = 1e-12);
    }

    #[test]
    fn ray_to_pixel_hand_case() {
        let x = sphere_project(&Vector3::new(1.0, 0.0, 1.0)).unwrap();
        let p = ray_to_pixel(&k(), &x).unwrap();
        assert_abs_diff_eq!(p, Vector2::new(256.0, 127.0), epsilon = 1e-12);
    }

    #[test]
    fn ray_to_pixel_rejects_horizon() {
        let x = SphereDirection(Vector3::new(1.0, 0.0, 0.0));
        assert!(ray_to_pixel(&k(), &x).is_err());
    }

    #[test]
    fn pixel_to_ray_hand_case() {
        let x = pixel_to_ray(&k(), 128.0 + 128.0, 127.0);
        let s = 1.0 / 2.0f64.sqrt();
        assert_abs_diff_eq!(x.vector(), &Vector3::new(s, 0.0, s), epsilon = 1e-14);
    }

    #[test]
    fn jacobian_at_pole() {
        let x = sphere_project(&Vector3::new(0.0, 0.0, 1.0)).unwrap();
        let j = pixel_jacobian(&k(), &x).unwrap();
        let expected = Matrix2x3::new(128.0, 0.0, 0.0, 0.0, 128.0, 0.0);
        assert_abs_diff_eq!(&j, &expected, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn round_trip_pixels(u in 0.0f64..255.0, v in 0.0f64..253.0) {
            let x = pixel_to_ray(&k(), u, v);
            let p = ray_to_pixel(&k(), &x).unwrap();
            prop_assert!((p.x - u).abs() < 1e-9 && (p.y - v).abs() < 1e-9);
        }

        #[test]
        fn projector_idempotent(v in prop::array::uniform3(-1.0f64..1.0)) {
            let w = Vector3::from_column_slice(&v) + Vector3::new(0.0, 0.0, 1.5);
            let x = sphere_project(&w).unwrap();
            let p = tangent_projector(&x);
            prop_assert!((p * p - p).norm() < 1e-13);
            prop_assert!((p * x.vector()).norm() < 1e-13);
        }

        #[test]
        fn jacobian_kills_ray(v in prop::array::uniform3(-0.5f64..0.5)) {
            let w = Vector3::from_column_slice(&v) + Vector3::new(0.0, 0.0, 1.0);
            let x = sphere_project(&w).unwrap();
            let j = pixel_jacobian(&k(), &x).unwrap();
            prop_assert!((j * x.vector()).norm() < 1e-10);
        }

        #[test]
        fn jacobian_matches_finite_differences(v in prop::array::uniform3(-0.5f64..0.5)) {
            let w = Vector3::from_column_slice(&v) + Vector3::new(0.0, 0.0, 1.2);
            let x = sphere_project(&w).unwrap();
            let j = pixel_jacobian(&k(), &x).unwrap();
            // central differences of h(sphere_project(x + t d)) for tangent d
            let p = tangent_projector(&x);
            for d0 in [Vector3::x(), Vector3::y(), Vector3::z()] {
                let d = p * d0;
                if d.norm() < 1e-3 {
                    continue;
                }
                let t = 1e-5;
                let hp = ray_to_pixel(&k(), &sphere_project(&(x.vector() + d * t)).unwrap()).unwrap();
                let hm = ray_to_pixel(&k(), &sphere_project(&(x.vector() - d * t)).unwrap()).unwrap();
                let fd = (hp - hm) / (2.0 * t);
                let an = j * d;
                prop_assert!((fd - an).norm() <= 1e-5 * an.norm().max(1.0));
            }
        }
    }
}
