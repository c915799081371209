use super::{TactileError, Vec3};
use nalgebra::{Isometry3, Matrix3, Rotation3, Translation3, UnitQuaternion};

/// Sensor-pad markers at rest and after loading, sensor frame, mm.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerField {
    pub rest_points: Vec<Vec3>,
    pub displaced_points: Vec<Vec3>,
}

impl MarkerField {
    pub fn new(rest_points: Vec<Vec3>, displaced_points: Vec<Vec3>) -> Result<Self, TactileError> {
        if rest_points.len() != displaced_points.len() {
            return Err(TactileError::MarkerField(format!(
                "{} rest vs {} displaced points",
                rest_points.len(),
                displaced_points.len()
            )));
        }
        if rest_points.len() < 3 {
            return Err(TactileError::MarkerField(format!(
                "need at least 3 markers, got {}",
                rest_points.len()
            )));
        }
        Ok(Self {
            rest_points,
            displaced_points,
        })
    }

    /// Square grid of markers on the pad plane `z = 0`.
    pub fn grid(n: usize, pitch: f64) -> Vec<Vec3> {
        let half = (n as f64 - 1.0) * pitch * 0.5;
        (0..n)
            .flat_map(|i| (0..n).map(move |j| Vec3::new(i as f64 * pitch - half, j as f64 * pitch - half, 0.0)))
            .collect()
    }
}

/// Best rigid fit `p ≈ R·p' + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidFit {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
    /// RMS residual over all markers, mm.
    pub rms: f64,
}

impl RigidFit {
    pub fn isometry(&self) -> Isometry3<f64> {
        let rot = Rotation3::from_matrix_unchecked(self.rotation);
        Isometry3::from_parts(
            Translation3::from(self.translation),
            UnitQuaternion::from_rotation_matrix(&rot),
        )
    }
}

fn centroid(points: &[Vec3]) -> Vec3 {
    points.iter().fold(Vec3::zeros(), |a, p| a + p) / points.len() as f64
}

/// Rotation and translation minimizing `Σ‖p_i − (R·p'_i + t)‖²`, by
/// centroid subtraction and SVD of the cross-covariance with the
/// reflection fixed so that `det R = +1`.
pub fn kabsch_registration(m: &MarkerField) -> Result<RigidFit, TactileError> {
    let p = &m.rest_points;
    let q = &m.displaced_points;
    let cp = centroid(p);
    let cq = centroid(q);

    let spread = p.iter().fold(Matrix3::zeros(), |acc, v| {
        let d = v - cp;
        acc + d * d.transpose()
    });
    let sv = spread.symmetric_eigenvalues();
    let mut ev: Vec<f64> = sv.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    if ev[0] <= 0.0 || ev[1] <= 1e-12 * ev[0] {
        return Err(TactileError::CollinearMarkers);
    }

    let h = p.iter().zip(q).fold(Matrix3::zeros(), |acc, (pi, qi)| {
        acc + (qi - cq) * (pi - cp).transpose()
    });
    let svd = h.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let fix = Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, d));
    let rotation = v * fix * u.transpose();
    let translation = cp - rotation * cq;
    let sq: f64 = p
        .iter()
        .zip(q)
        .map(|(pi, qi)| (pi - (rotation * qi + translation)).norm_squared())
        .sum();
    Ok(RigidFit {
        rotation,
        translation,
        rms: (sq / p.len() as f64).sqrt(),
    })
}

/// In-hand transform `T^s_l = T^s_sd · T^sd_l`: the registered pad motion
/// composed with the constant pad-to-object transform.
pub fn in_hand_transform(m: &MarkerField, pad_to_object: &Isometry3<f64>) -> Result<Isometry3<f64>, TactileError> {
    Ok(kabsch_registration(m)?.isometry() * pad_to_object)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector3;

    #[test]
    fn identity_when_undisplaced() {
        let pts = MarkerField::grid(4, 2.0);
        let fit = kabsch_registration(&MarkerField::new(pts.clone(), pts).unwrap()).unwrap();
        assert_abs_diff_eq!(fit.rotation, Matrix3::identity(), epsilon = 1e-12);
        assert_abs_diff_eq!(fit.translation, Vec3::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn recovers_constructed_transform() {
        let rest: Vec<Vec3> = MarkerField::grid(4, 2.0)
            .into_iter()
            .enumerate()
            .map(|(i, p)| p + Vec3::new(0.0, 0.0, 0.1 * (i % 3) as f64))
            .collect();
        let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), 30f64.to_radians());
        let t = Vec3::new(1.0, 2.0, 0.0);
        // p = R p' + t  ⇒  p' = Rᵀ (p − t)
        let displaced: Vec<Vec3> = rest.iter().map(|p| rot.inverse() * (p - t)).collect();
        let fit = kabsch_registration(&MarkerField::new(rest, displaced).unwrap()).unwrap();
        assert_abs_diff_eq!(fit.rotation, *rot.matrix(), epsilon = 1e-9);
        assert_abs_diff_eq!(fit.translation, t, epsilon = 1e-9);
    }

    #[test]
    fn collinear_markers_flagged() {
        let rest: Vec<Vec3> = (0..5).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let m = MarkerField::new(rest.clone(), rest).unwrap();
        assert!(matches!(kabsch_registration(&m), Err(TactileError::CollinearMarkers)));
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let a = MarkerField::grid(2, 1.0);
        assert!(MarkerField::new(a.clone(), a[..3].to_vec()).is_err());
        assert!(MarkerField::new(a[..2].to_vec(), a[..2].to_vec()).is_err());
    }

    #[test]
    fn reflection_adversarial_input_keeps_proper_rotation() {
        let rest = vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(1.0, 1.0, 1.0),
        ];
        let mirrored: Vec<Vec3> = rest.iter().map(|p| Vec3::new(-p.x, p.y, p.z)).collect();
        let fit = kabsch_registration(&MarkerField::new(rest, mirrored).unwrap()).unwrap();
        assert_abs_diff_eq!(fit.rotation.determinant(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn in_hand_composition() {
        let pts = MarkerField::grid(3, 2.0);
        let m = MarkerField::new(pts.clone(), pts.clone()).unwrap();
        let t = in_hand_transform(&m, &Isometry3::identity()).unwrap();
        assert_abs_diff_eq!(t.translation.vector, Vec3::zeros(), epsilon = 1e-12);

        // markers shifted by -0.5 in x: the registration maps them back by +0.5
        let shifted: Vec<Vec3> = pts.iter().map(|p| p - Vec3::new(0.5, 0.0, 0.0)).collect();
        let m = MarkerField::new(pts, shifted).unwrap();
        let fixed = Isometry3::translation(0.0, 0.0, 10.0);
        let t = in_hand_transform(&m, &fixed).unwrap();
        assert_abs_diff_eq!(t.translation.vector, Vec3::new(0.5, 0.0, 10.0), epsilon = 1e-12);
    }
}
