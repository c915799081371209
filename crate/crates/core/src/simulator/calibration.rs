use super::{gauss, NoiseConfig};
use crate::rng;
use crate::tactile::{CalibrationSample, PrismBody, Vec3, Wrench, WrenchSynthesizer};
use rand::Rng;

/// Distance of calibration contacts from face boundaries, mm.
const EDGE_MARGIN: f64 = 2.0;

/// `n` pressing contacts on the side faces of `body` and the noisy finger
/// wrenches they produce. Contact geometry comes from the calibration
/// stream, noise from the noise stream.
pub fn synthetic_calibration(
    n: usize,
    body: &PrismBody,
    synth: &WrenchSynthesizer,
    noise: &NoiseConfig,
    seed: u64,
) -> Vec<CalibrationSample> {
    let mut geo = rng::stream(seed, rng::CALIBRATION);
    let mut nz = rng::stream(seed, rng::NOISE);
    let edges = body.contour.edges();
    let perimeter: f64 = edges.iter().map(|e| e.length()).sum();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut u = geo.random_range(0.0..perimeter);
        let mut edge = &edges[edges.len() - 1];
        for e in edges {
            if u < e.length() {
                edge = e;
                break;
            }
            u -= e.length();
        }
        // keep clear of face boundaries, where the entry face is ambiguous
        let len = edge.length();
        let m = EDGE_MARGIN.min(0.25 * len);
        let along = m + (u / len).clamp(0.0, 1.0) * (len - 2.0 * m);
        let p2 = edge.start + edge.direction() * along;
        let zm = EDGE_MARGIN.min(0.25 * (body.z_max - body.z_min));
        let z = geo.random_range(body.z_min + zm..=body.z_max - zm);
        let point = Vec3::new(p2.x, p2.y, z);
        let normal = Vec3::new(edge.normal.x, edge.normal.y, 0.0);
        let tangent = Vec3::new(-edge.normal.y, edge.normal.x, 0.0);
        // pressing load: inward normal part plus bounded shear
        let force = -normal * geo.random_range(6.0..12.0)
            + tangent * geo.random_range(-2.0..2.0)
            + Vec3::z() * geo.random_range(-2.0..2.0);
        let (left, right) = synth.synthesize(&force, &point);
        let mut jitter = |w: Wrench| {
            let df = Vec3::new(
                gauss(&mut nz, noise.force),
                gauss(&mut nz, noise.force),
                gauss(&mut nz, noise.force),
            );
            let dt = Vec3::new(
                gauss(&mut nz, noise.torque),
                gauss(&mut nz, noise.torque),
                gauss(&mut nz, noise.torque),
            );
            Wrench::new(w.force + df, w.torque + dt, w.frame)
        };
        out.push(CalibrationSample {
            left: jitter(left),
            right: jitter(right),
            contact_point: point,
        });
    }
    out
}
