use super::{FrameId, LeverArms, SensorAxisMap, TactileError, Vec3, Wrench};
use nalgebra::{DMatrix, DVector, Matrix3};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// One known-point loading of the calibration block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSample {
    pub left: Wrench,
    pub right: Wrench,
    /// Known contact point, gripper frame relative to `O_e`, mm.
    pub contact_point: Vec3,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResidualStats {
    pub mean_mm: f64,
    pub max_mm: f64,
    /// Mean absolute residual per gripper axis, mm.
    pub per_axis_mm: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CalibrationResult {
    pub arms: LeverArms,
    pub condition_number: f64,
    pub residuals: ResidualStats,
    pub samples: usize,
}

fn skew(v: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

const ARM_NAMES: [&str; 6] = ["left.x", "left.y", "left.z", "right.x", "right.y", "right.z"];

/// Least-squares estimate of both sensors' lever arms.
///
/// Each sample contributes three rows of the moment balance
/// `m_L + m_R + a_L × f_L + a_R × f_R = C × F`, linear in the six arm
/// components. Both arms are solved jointly.
pub fn calibrate_lever_arms(
    samples: &[CalibrationSample],
    map: &SensorAxisMap,
) -> Result<CalibrationResult, TactileError> {
    const NEED: usize = 6;
    let n = samples.len();
    if n == 0 {
        return Err(TactileError::TooFewSamples { got: 0, need: NEED });
    }
    let mut a = DMatrix::<f64>::zeros(3 * n, 6);
    let mut b = DVector::<f64>::zeros(3 * n);
    let mut rows = Vec::with_capacity(n);
    for (k, s) in samples.iter().enumerate() {
        if s.left.frame != FrameId::LeftSensor || s.right.frame != FrameId::RightSensor {
            return Err(TactileError::FrameMismatch {
                expected: FrameId::LeftSensor,
                got: s.left.frame,
            });
        }
        let l = map.to_gripper(&s.left);
        let r = map.to_gripper(&s.right);
        let f = l.force + r.force;
        let rhs = s.contact_point.cross(&f) - l.torque - r.torque;
        a.view_mut((3 * k, 0), (3, 3)).copy_from(&(-skew(&l.force)));
        a.view_mut((3 * k, 3), (3, 3)).copy_from(&(-skew(&r.force)));
        b.rows_mut(3 * k, 3).copy_from(&rhs);
        rows.push((l, r, f));
    }

    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let tol = smax * 1e-9;
    let rank = sv.iter().filter(|&&s| s > tol).count();
    if rank < 6 {
        let v_t = svd.v_t.as_ref().expect("requested V^T");
        let mut dirs = Vec::new();
        for (i, &s) in sv.iter().enumerate() {
            if s <= tol {
                let row = v_t.row(i);
                let terms: Vec<String> = row
                    .iter()
                    .zip(ARM_NAMES)
                    .filter(|(c, _)| c.abs() > 1e-3)
                    .map(|(c, name)| format!("{c:+.2}·{name}"))
                    .collect();
                dirs.push(terms.join(" "));
            }
        }
        return Err(TactileError::RankDeficient {
            rank,
            directions: dirs.join("; "),
        });
    }
    // full rank from fewer samples is possible but leaves no redundancy
    if n < NEED {
        return Err(TactileError::TooFewSamples { got: n, need: NEED });
    }
    let smin = sv.min();
    let x = svd.solve(&b, tol).map_err(|e| TactileError::Data(e.to_string()))?;
    let arms = LeverArms {
        left: Vec3::new(x[0], x[1], x[2]),
        right: Vec3::new(x[3], x[4], x[5]),
    };

    // Residual as the distance from each known contact point to the
    // recovered line of action.
    let mut per_axis = [0.0; 3];
    let mut max = 0.0f64;
    let mut sum = 0.0;
    for (s, (l, r, f)) in samples.iter().zip(&rows) {
        let m = super::torque_about(l, &arms.left) + super::torque_about(r, &arms.right);
        let f2 = f.norm_squared();
        if f2 == 0.0 {
            continue;
        }
        // closest point of the line {C : C × F = M} to the known point
        let c0 = f.cross(&m) / f2;
        let dir = f / f2.sqrt();
        let p = s.contact_point;
        let foot = c0 + dir * (p - c0).dot(&dir);
        let d = p - foot;
        for (acc, v) in per_axis.iter_mut().zip(d.iter()) {
            *acc += v.abs();
        }
        max = max.max(d.norm());
        sum += d.norm();
    }
    for v in per_axis.iter_mut() {
        *v /= n as f64;
    }
    Ok(CalibrationResult {
        arms,
        condition_number: smax / smin,
        residuals: ResidualStats {
            mean_mm: sum / n as f64,
            max_mm: max,
            per_axis_mm: per_axis,
        },
        samples: n,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct SampleRow {
    #[serde(rename = "fLx")]
    f_lx: f64,
    #[serde(rename = "fLy")]
    f_ly: f64,
    #[serde(rename = "fLz")]
    f_lz: f64,
    #[serde(rename = "mLx")]
    m_lx: f64,
    #[serde(rename = "mLy")]
    m_ly: f64,
    #[serde(rename = "mLz")]
    m_lz: f64,
    #[serde(rename = "fRx")]
    f_rx: f64,
    #[serde(rename = "fRy")]
    f_ry: f64,
    #[serde(rename = "fRz")]
    f_rz: f64,
    #[serde(rename = "mRx")]
    m_rx: f64,
    #[serde(rename = "mRy")]
    m_ry: f64,
    #[serde(rename = "mRz")]
    m_rz: f64,
    cx: f64,
    cy: f64,
    cz: f64,
}

/// Reads samples with columns `fLx..mLz, fRx..mRz, cx, cy, cz`.
pub fn read_samples_csv<R: Read>(reader: R) -> Result<Vec<CalibrationSample>, TactileError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<SampleRow>().enumerate() {
        let r = row.map_err(|e| TactileError::Data(format!("row {}: {e}", i + 1)))?;
        let s = CalibrationSample {
            left: Wrench::new(
                Vec3::new(r.f_lx, r.f_ly, r.f_lz),
                Vec3::new(r.m_lx, r.m_ly, r.m_lz),
                FrameId::LeftSensor,
            ),
            right: Wrench::new(
                Vec3::new(r.f_rx, r.f_ry, r.f_rz),
                Vec3::new(r.m_rx, r.m_ry, r.m_rz),
                FrameId::RightSensor,
            ),
            contact_point: Vec3::new(r.cx, r.cy, r.cz),
        };
        if !(s.left.is_finite() && s.right.is_finite() && s.contact_point.iter().all(|v| v.is_finite())) {
            return Err(TactileError::Data(format!("row {}: non-finite value", i + 1)));
        }
        out.push(s);
    }
    Ok(out)
}

pub fn write_samples_csv<W: Write>(writer: W, samples: &[CalibrationSample]) -> Result<(), TactileError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for s in samples {
        let (l, r, c) = (&s.left, &s.right, &s.contact_point);
        wtr.serialize(SampleRow {
            f_lx: l.force.x,
            f_ly: l.force.y,
            f_lz: l.force.z,
            m_lx: l.torque.x,
            m_ly: l.torque.y,
            m_lz: l.torque.z,
            f_rx: r.force.x,
            f_ry: r.force.y,
            f_rz: r.force.z,
            m_rx: r.torque.x,
            m_ry: r.torque.y,
            m_rz: r.torque.z,
            cx: c.x,
            cy: c.y,
            cz: c.z,
        })
        .map_err(|e| TactileError::Data(e.to_string()))?;
    }
    wtr.flush().map_err(|e| TactileError::Data(e.to_string()))
}
