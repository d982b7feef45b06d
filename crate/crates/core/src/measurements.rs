//! Bob's measurement-set families: the phase-encoding set (one time-basis
//! setting plus equatorial settings spread over a half turn), the
//! Platonic-solid sets, and Alice's complementary settings.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quantum::HermitianOp;

/// Values of `n` for which a Platonic-solid set is defined.
pub const PLATONIC_SIZES: [usize; 5] = [2, 3, 4, 6, 10];

const UNIT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum MeasurementKind {
    TimeBasis,
    PhaseBasis { theta: f64 },
    /// Any other direction on the Bloch sphere.
    Direction,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    bloch: [f64; 3],
    label: String,
    kind: MeasurementKind,
}

impl Measurement {
    pub fn time_basis() -> Self {
        Measurement { bloch: [0.0, 0.0, 1.0], label: "Z".into(), kind: MeasurementKind::TimeBasis }
    }

    pub fn phase_basis(theta: f64) -> Self {
        Measurement {
            bloch: [theta.cos(), theta.sin(), 0.0],
            label: format!("theta={theta:.6}"),
            kind: MeasurementKind::PhaseBasis { theta },
        }
    }

    /// A measurement along an arbitrary direction. Vectors within 1e-6 of
    /// unit length are renormalized; the kind is inferred from the direction.
    pub fn from_bloch(label: impl Into<String>, bloch: [f64; 3]) -> Result<Self> {
        let norm = norm3(bloch);
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-6 {
            return invalid(format!("Bloch vector {bloch:?} is not of unit length"));
        }
        let b = [bloch[0] / norm, bloch[1] / norm, bloch[2] / norm];
        let kind = if (b[2] - 1.0).abs() <= UNIT_TOL {
            MeasurementKind::TimeBasis
        } else if b[2] == 0.0 {
            MeasurementKind::PhaseBasis { theta: b[1].atan2(b[0]) }
        } else {
            MeasurementKind::Direction
        };
        let b = if kind == MeasurementKind::TimeBasis { [0.0, 0.0, 1.0] } else { b };
        Ok(Measurement { bloch: b, label: label.into(), kind })
    }

    pub fn bloch(&self) -> [f64; 3] {
        self.bloch
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> MeasurementKind {
        self.kind
    }

    pub fn is_time_basis(&self) -> bool {
        self.kind == MeasurementKind::TimeBasis
    }

    /// The `+-1` observable `n . sigma`.
    pub fn observable(&self) -> HermitianOp {
        HermitianOp::observable(self.bloch)
    }

    fn relabeled(mut self, label: String) -> Self {
        self.label = label;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetFamily {
    PhaseEncoding,
    Platonic,
    Custom,
}

impl fmt::Display for SetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SetFamily::PhaseEncoding => "phase",
            SetFamily::Platonic => "platonic",
            SetFamily::Custom => "custom",
        })
    }
}

impl FromStr for SetFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phase" | "phase_encoding" | "phase-encoding" => Ok(SetFamily::PhaseEncoding),
            "platonic" => Ok(SetFamily::Platonic),
            "custom" => Ok(SetFamily::Custom),
            other => invalid(format!("unknown measurement family '{other}' (expected phase or platonic)")),
        }
    }
}

/// Ordered list of distinct qubit measurements; each entry stands for one
/// antipodal pair of Bloch directions.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    family: SetFamily,
    measurements: Vec<Measurement>,
}

impl MeasurementSet {
    pub fn new(family: SetFamily, measurements: Vec<Measurement>) -> Result<Self> {
        if measurements.is_empty() {
            return invalid("a measurement set needs at least one setting");
        }
        for (i, m) in measurements.iter().enumerate() {
            if (norm3(m.bloch) - 1.0).abs() > UNIT_TOL {
                return invalid(format!("setting {i} is not a unit vector"));
            }
            for (j, other) in measurements.iter().enumerate().take(i) {
                if dot3(m.bloch, other.bloch).abs() > 1.0 - 1e-9 {
                    return invalid(format!("settings {j} and {i} are equal or antipodal"));
                }
            }
        }
        Ok(MeasurementSet { family, measurements })
    }

    /// A custom set from explicit Bloch vectors.
    pub fn custom(vectors: &[[f64; 3]]) -> Result<Self> {
        let ms = vectors
            .iter()
            .enumerate()
            .map(|(i, v)| Measurement::from_bloch(format!("m{i}"), *v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(SetFamily::Custom, ms)
    }

    /// Dispatches to the generator of the named family.
    pub fn for_family(family: SetFamily, n: usize) -> Result<Self> {
        match family {
            SetFamily::PhaseEncoding => phase_encoding_set(n),
            SetFamily::Platonic => platonic_set(n),
            SetFamily::Custom => invalid("custom sets must be given explicitly"),
        }
    }

    pub fn family(&self) -> SetFamily {
        self.family
    }

    pub fn measurements(&self) -> &[Measurement] {
        &self.measurements
    }

    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    pub fn bloch_vectors(&self) -> Vec<[f64; 3]> {
        self.measurements.iter().map(|m| m.bloch).collect()
    }

    /// Applies one rotation (row-major 3x3) to every Bloch vector. The result
    /// is a custom set.
    pub fn rotated(&self, r: [[f64; 3]; 3]) -> Result<Self> {
        let ms = self
            .measurements
            .iter()
            .map(|m| Measurement::from_bloch(m.label.clone(), mat_vec(r, m.bloch)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(SetFamily::Custom, ms)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SetDocument::from(self))?)
    }

    /// Accepts either `{"family": .., "measurements": [..]}` or a bare list of
    /// `{label, bloch}` entries.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SetDocumentIn = serde_json::from_str(text)?;
        let (family, entries) = match doc {
            SetDocumentIn::Full(d) => (d.family, d.measurements),
            SetDocumentIn::List(l) => (SetFamily::Custom, l),
        };
        let ms = entries
            .into_iter()
            .map(|e| Measurement::from_bloch(e.label, e.bloch))
            .collect::<Result<Vec<_>>>()?;
        Self::new(family, ms)
    }
}

#[derive(Serialize, Deserialize)]
struct SetEntry {
    label: String,
    bloch: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct SetDocument {
    family: SetFamily,
    measurements: Vec<SetEntry>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SetDocumentIn {
    Full(SetDocument),
    List(Vec<SetEntry>),
}

impl From<&MeasurementSet> for SetDocument {
    fn from(set: &MeasurementSet) -> Self {
        SetDocument {
            family: set.family,
            measurements: set
                .measurements
                .iter()
                .map(|m| SetEntry { label: m.label.clone(), bloch: m.bloch })
                .collect(),
        }
    }
}

/// `M_0 = sigma_z` and `M_j = sigma_{(j-1) pi/(n-1)}` for `j = 1..n-1`.
pub fn phase_encoding_set(n: usize) -> Result<MeasurementSet> {
    if n < 2 {
        return invalid(format!("phase-encoding sets need n >= 2, got {n}"));
    }
    let mut ms = vec![Measurement::time_basis()];
    for j in 1..n {
        let theta = (j - 1) as f64 * PI / (n - 1) as f64;
        ms.push(Measurement::phase_basis(theta).relabeled(format!("M{j}")));
    }
    ms[0] = ms[0].clone().relabeled("M0".into());
    MeasurementSet::new(SetFamily::PhaseEncoding, ms)
}

/// Antipodal vertex pairs of an inscribed Platonic solid. The octahedron is
/// axis aligned; icosahedron and dodecahedron have one vertex on `+z`.
pub fn platonic_set(n: usize) -> Result<MeasurementSet> {
    let vectors: Vec<[f64; 3]> = match n {
        2 => vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]],
        3 => vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        4 => {
            let s = 1.0 / 3f64.sqrt();
            vec![[s, s, s], [s, -s, s], [-s, s, s], [-s, -s, s]]
        }
        6 => polyhedron_axes(&icosahedron_vertices()),
        10 => polyhedron_axes(&dodecahedron_vertices()),
        other => {
            return invalid(format!(
                "no Platonic-solid set with n = {other}; supported values are {PLATONIC_SIZES:?}"
            ))
        }
    };
    let ms = vectors
        .iter()
        .enumerate()
        .map(|(i, v)| Measurement::from_bloch(format!("P{i}"), *v))
        .collect::<Result<Vec<_>>>()?;
    MeasurementSet::new(SetFamily::Platonic, ms)
}

/// Alice's settings under the `alpha = 0` convention: every ideal correlator
/// with Bob's matching setting equals `p`. Phase `theta` maps to `-theta`.
pub fn complementary_settings(settings: &MeasurementSet) -> MeasurementSet {
    let ms = settings
        .measurements
        .iter()
        .map(|m| match m.kind {
            MeasurementKind::TimeBasis => m.clone(),
            MeasurementKind::PhaseBasis { theta } => {
                Measurement::phase_basis(-theta).relabeled(format!("{}*", m.label))
            }
            MeasurementKind::Direction => Measurement {
                bloch: [m.bloch[0], -m.bloch[1], m.bloch[2]],
                label: format!("{}*", m.label),
                kind: MeasurementKind::Direction,
            },
        })
        .collect();
    MeasurementSet { family: settings.family, measurements: ms }
}

fn icosahedron_vertices() -> Vec<[f64; 3]> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v = Vec::with_capacity(12);
    for a in [1.0, -1.0] {
        for b in [phi, -phi] {
            v.push([0.0, a, b]);
            v.push([a, b, 0.0]);
            v.push([b, 0.0, a]);
        }
    }
    v
}

fn dodecahedron_vertices() -> Vec<[f64; 3]> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v = Vec::with_capacity(20);
    for x in [1.0, -1.0] {
        for y in [1.0, -1.0] {
            for z in [1.0, -1.0] {
                v.push([x, y, z]);
            }
        }
    }
    for a in [1.0 / phi, -1.0 / phi] {
        for b in [phi, -phi] {
            v.push([0.0, a, b]);
            v.push([a, b, 0.0]);
            v.push([b, 0.0, a]);
        }
    }
    v
}

/// Rotates the first vertex onto `+z`, normalizes, keeps one representative
/// of each antipodal pair and orders them by decreasing `z`, then azimuth.
fn polyhedron_axes(vertices: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let first = normalize(vertices[0]);
    let r = rotation_onto_z(first);
    let mut reps: Vec<[f64; 3]> = Vec::new();
    for v in vertices {
        let mut u = normalize(mat_vec(r, *v));
        for c in u.iter_mut() {
            if c.abs() < 1e-12 {
                *c = 0.0;
            }
        }
        let upper = u[2] > 1e-9
            || (u[2].abs() <= 1e-9 && (u[1] > 1e-9 || (u[1].abs() <= 1e-9 && u[0] > 0.0)));
        if upper {
            reps.push(u);
        }
    }
    reps.sort_by(|a, b| {
        b[2].partial_cmp(&a[2])
            .unwrap()
            .then(a[1].atan2(a[0]).partial_cmp(&b[1].atan2(b[0])).unwrap())
    });
    if let Some(top) = reps.first_mut() {
        *top = [0.0, 0.0, 1.0];
    }
    reps
}

/// Rodrigues rotation taking the unit vector `u` onto `+z`.
pub(crate) fn rotation_onto_z(u: [f64; 3]) -> [[f64; 3]; 3] {
    let z = [0.0, 0.0, 1.0];
    let axis = cross3(u, z);
    let s = norm3(axis);
    let c = dot3(u, z);
    if s < 1e-15 {
        return if c > 0.0 {
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        } else {
            [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]
        };
    }
    let k = [axis[0] / s, axis[1] / s, axis[2] / s];
    rotation_about(k, s.atan2(c))
}

/// Rotation by `angle` about the unit axis `k`.
pub fn rotation_about(k: [f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [c + k[0] * k[0] * t, k[0] * k[1] * t - k[2] * s, k[0] * k[2] * t + k[1] * s],
        [k[1] * k[0] * t + k[2] * s, c + k[1] * k[1] * t, k[1] * k[2] * t - k[0] * s],
        [k[2] * k[0] * t - k[1] * s, k[2] * k[1] * t + k[0] * s, c + k[2] * k[2] * t],
    ]
}

fn mat_vec(r: [[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [dot3(r[0], v), dot3(r[1], v), dot3(r[2], v)]
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

fn normalize(a: [f64; 3]) -> [f64; 3] {
    let n = norm3(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{correlation, isotropic_state, IsotropicParams};

    #[test]
    fn phase_encoding_small_sets() {
        let two = phase_encoding_set(2).unwrap();
        assert_eq!(two.bloch_vectors(), vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]);
        assert!(phase_encoding_set(1).is_err());
        assert!(phase_encoding_set(0).is_err());
    }

    #[test]
    fn phase_encoding_nine_has_y_axis_at_m5() {
        let nine = phase_encoding_set(9).unwrap();
        let m5 = &nine.measurements()[5];
        assert_eq!(m5.kind(), MeasurementKind::PhaseBasis { theta: PI / 2.0 });
        let b = m5.bloch();
        assert!(b[0].abs() < 1e-15 && (b[1] - 1.0).abs() < 1e-15 && b[2] == 0.0);
    }

    #[test]
    fn three_settings_coincide_across_families() {
        for n in [2, 3] {
            let a = phase_encoding_set(n).unwrap().bloch_vectors();
            let b = platonic_set(n).unwrap().bloch_vectors();
            for (u, v) in a.iter().zip(&b) {
                for i in 0..3 {
                    assert!((u[i] - v[i]).abs() < 1e-15, "n={n}");
                }
            }
        }
    }

    #[test]
    fn unsupported_platonic_sizes() {
        for n in [0, 1, 5, 7, 8, 9, 12, 20] {
            let err = platonic_set(n).unwrap_err().to_string();
            assert!(err.contains("[2, 3, 4, 6, 10]"), "{err}");
        }
    }

    #[test]
    fn cube_and_dodecahedron_geometry() {
        let cube = platonic_set(4).unwrap().bloch_vectors();
        for i in 0..4 {
            for j in 0..i {
                assert!((dot3(cube[i], cube[j]).abs() - 1.0 / 3.0).abs() < 1e-12);
            }
        }
        let dodeca = platonic_set(10).unwrap();
        assert_eq!(dodeca.len(), 10);
        assert_eq!(dodeca.bloch_vectors()[0], [0.0, 0.0, 1.0]);
    }

    #[test]
    fn complementary_maps_phase_to_negative_phase() {
        let set = MeasurementSet::new(
            SetFamily::Custom,
            vec![Measurement::time_basis(), Measurement::phase_basis(PI / 4.0)],
        )
        .unwrap();
        let comp = complementary_settings(&set);
        assert_eq!(comp.measurements()[0].kind(), MeasurementKind::TimeBasis);
        assert_eq!(comp.measurements()[1].kind(), MeasurementKind::PhaseBasis { theta: -PI / 4.0 });
        let rho = isotropic_state(IsotropicParams::new(1.0, 0.0).unwrap());
        let c = correlation(&rho, &comp.measurements()[1].observable(), &set.measurements()[1].observable())
            .unwrap();
        assert!((c - 1.0).abs() < 1e-12);

        let two = phase_encoding_set(2).unwrap();
        assert_eq!(complementary_settings(&two).bloch_vectors(), two.bloch_vectors());
    }

    #[test]
    fn complementary_general_directions_give_p() {
        let set = platonic_set(6).unwrap();
        let comp = complementary_settings(&set);
        let rho = isotropic_state(IsotropicParams::new(0.8, 0.0).unwrap());
        for (a, b) in comp.measurements().iter().zip(set.measurements()) {
            let c = correlation(&rho, &a.observable(), &b.observable()).unwrap();
            assert!((c - 0.8).abs() < 1e-12);
        }
    }

    #[test]
    fn set_validation() {
        assert!(MeasurementSet::custom(&[[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]).is_err());
        assert!(MeasurementSet::custom(&[[0.0, 0.0, 2.0]]).is_err());
        assert!(MeasurementSet::custom(&[]).is_err());
        let one = MeasurementSet::custom(&[[0.0, 0.0, 1.0]]).unwrap();
        assert!(one.measurements()[0].is_time_basis());
    }

    #[test]
    fn json_document_round_trip() {
        let set = platonic_set(6).unwrap();
        let back = MeasurementSet::from_json(&set.to_json().unwrap()).unwrap();
        assert_eq!(back.family(), SetFamily::Platonic);
        assert_eq!(back.bloch_vectors(), set.bloch_vectors());
        let bare = MeasurementSet::from_json(r#"[{"label":"a","bloch":[1,0,0]},{"label":"b","bloch":[0,0,1]}]"#)
            .unwrap();
        assert_eq!(bare.family(), SetFamily::Custom);
        assert!(bare.measurements()[1].is_time_basis());
    }

    #[test]
    fn family_parsing() {
        assert_eq!("phase".parse::<SetFamily>().unwrap(), SetFamily::PhaseEncoding);
        assert_eq!("platonic".parse::<SetFamily>().unwrap(), SetFamily::Platonic);
        assert!("cube".parse::<SetFamily>().is_err());
    }
}
