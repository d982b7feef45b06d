//! Critical noise and efficiency thresholds, bound curves and their
//! serialization.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assemblage::build_test_assemblage;
use super::certificate::SteeringFunctional;
use super::program::{solve_lhs, Layout, LhsModel, LhsOptions, LhsSolution, LossModel, Target};
use crate::error::{invalid, Error, Result};
use crate::measurements::{MeasurementSet, SetFamily};
use crate::quantum::IsotropicParams;

/// Values within this distance of 1 are reported as exactly 1.
const BOUNDARY_SNAP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    Optimal,
    /// Optimum sits at the boundary value 1 (no steering possible).
    Boundary,
    /// Answered without invoking the solver.
    Trivial,
    Failed,
}

impl BoundStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundStatus::Optimal => "optimal",
            BoundStatus::Boundary => "boundary",
            BoundStatus::Trivial => "trivial",
            BoundStatus::Failed => "failed",
        }
    }

    pub fn is_ok(self) -> bool {
        self != BoundStatus::Failed
    }
}

/// One point of a critical curve. For noise thresholds `p_star` is the
/// critical entangled fraction at efficiency `epsilon`; for efficiency
/// thresholds `epsilon` is the critical efficiency at fraction `p_star`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundPoint {
    pub n: usize,
    pub family: SetFamily,
    pub epsilon: f64,
    pub p_star: f64,
    pub status: BoundStatus,
    pub gap: f64,
    #[serde(default)]
    pub iterations: usize,
    #[serde(default)]
    pub rounds: usize,
    /// Dual functional; negative on every assemblage beyond the threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<SteeringFunctional>,
    #[serde(skip)]
    pub model: Option<LhsModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl BoundPoint {
    fn trivial(n: usize, family: SetFamily, epsilon: f64, p_star: f64) -> Self {
        BoundPoint {
            n,
            family,
            epsilon,
            p_star,
            status: BoundStatus::Trivial,
            gap: 0.0,
            iterations: 0,
            rounds: 0,
            certificate: None,
            model: None,
            error: None,
        }
    }

    fn failed(n: usize, family: SetFamily, epsilon: f64, err: &Error) -> Self {
        BoundPoint {
            status: BoundStatus::Failed,
            p_star: f64::NAN,
            error: Some(err.to_string()),
            ..Self::trivial(n, family, epsilon, f64::NAN)
        }
    }
}

fn check_n(n: usize, settings: &MeasurementSet) -> Result<()> {
    if n != settings.len() {
        return invalid(format!("n = {n} but the measurement set has {} settings", settings.len()));
    }
    Ok(())
}

fn snap(value: f64) -> (f64, BoundStatus) {
    if value >= 1.0 - BOUNDARY_SNAP {
        (1.0, BoundStatus::Boundary)
    } else {
        (value.max(0.0), BoundStatus::Optimal)
    }
}

fn attach(sol: &LhsSolution, point: &mut BoundPoint, probe: impl FnOnce() -> Result<super::Assemblage>) -> Result<()> {
    point.gap = sol.gap;
    point.iterations = sol.iterations;
    point.rounds = sol.rounds;
    point.model = Some(sol.model());
    let probe = probe()?;
    point.certificate = Some(SteeringFunctional::new(sol.certificate(), &probe));
    Ok(())
}

/// Largest entangled fraction `p` for which the honest assemblage at
/// efficiency `epsilon` still admits an LHS model.
pub fn critical_p(n: usize, epsilon: f64, settings: &MeasurementSet, tol: f64) -> Result<BoundPoint> {
    check_n(n, settings)?;
    critical_p_with(epsilon, settings, &LhsOptions::with_tol(tol))
}

pub fn critical_p_with(epsilon: f64, settings: &MeasurementSet, options: &LhsOptions) -> Result<BoundPoint> {
    if !(0.0..=1.0).contains(&epsilon) {
        return invalid(format!("efficiency must lie in [0,1], got {epsilon}"));
    }
    let n = settings.len();
    let family = settings.family();
    if epsilon == 0.0 {
        return Ok(BoundPoint::trivial(n, family, 0.0, 1.0));
    }
    if options.loss_model == LossModel::AverageOverSettings {
        return critical_p_average(epsilon, settings, options);
    }
    let dirs = settings.bloch_vectors();
    let layout = Layout { n, include_null: epsilon < 1.0 };
    let sol = solve_lhs(layout, &Target::MaxP { epsilon, dirs: &dirs }, options)?;
    let (p_star, status) = snap(sol.value);
    let mut point = BoundPoint { status, ..BoundPoint::trivial(n, family, epsilon, p_star) };
    // the functional is evaluated on the maximally entangled assemblage,
    // where its value is at most 2 (p_star - 1)
    attach(&sol, &mut point, || build_test_assemblage(IsotropicParams::new(1.0, 0.0)?, epsilon, settings))?;
    Ok(point)
}

/// Critical fraction under the average-only loss model, by bisection on
/// the (non-increasing) critical efficiency.
fn critical_p_average(epsilon: f64, settings: &MeasurementSet, options: &LhsOptions) -> Result<BoundPoint> {
    let n = settings.len();
    let (mut lo, mut hi) = (0.0, 1.0);
    let top = critical_epsilon_with(1.0, settings, options)?;
    if top.epsilon >= epsilon {
        return Ok(BoundPoint { status: BoundStatus::Boundary, ..BoundPoint::trivial(n, settings.family(), epsilon, 1.0) });
    }
    let mut iterations = top.iterations;
    while hi - lo > 1e-5 {
        let mid = 0.5 * (lo + hi);
        let pt = critical_epsilon_with(mid, settings, options)?;
        iterations += pt.iterations;
        if pt.epsilon >= epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BoundPoint {
        status: BoundStatus::Optimal,
        gap: hi - lo,
        iterations,
        ..BoundPoint::trivial(n, settings.family(), epsilon, 0.5 * (lo + hi))
    })
}

/// Largest efficiency `epsilon` at which the honest assemblage with
/// fraction `p` still admits an LHS model. The result is stored in the
/// `epsilon` field; `p_star` carries `p`.
pub fn critical_epsilon(n: usize, p: f64, settings: &MeasurementSet, tol: f64) -> Result<BoundPoint> {
    check_n(n, settings)?;
    critical_epsilon_with(p, settings, &LhsOptions::with_tol(tol))
}

pub fn critical_epsilon_with(p: f64, settings: &MeasurementSet, options: &LhsOptions) -> Result<BoundPoint> {
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("entangled fraction must lie in [0,1], got {p}"));
    }
    let n = settings.len();
    let family = settings.family();
    if p == 0.0 {
        return Ok(BoundPoint::trivial(n, family, 1.0, 0.0));
    }
    let dirs = settings.bloch_vectors();
    let layout = Layout { n, include_null: true };
    let (target, average) = match options.loss_model {
        LossModel::PerSetting => (Target::MaxEpsilon { p, dirs: &dirs }, false),
        LossModel::AverageOverSettings => (Target::MaxEpsilonAverage { p, dirs: &dirs }, true),
    };
    let sol = solve_lhs(layout, &target, options)?;
    let (eps_star, status) = snap(sol.value);
    let mut point = BoundPoint { status, ..BoundPoint::trivial(n, family, eps_star, p) };
    if average {
        point.gap = sol.gap;
        point.iterations = sol.iterations;
        point.rounds = sol.rounds;
    } else {
        attach(&sol, &mut point, || build_test_assemblage(IsotropicParams::new(p, 0.0)?, 1.0, settings))?;
    }
    Ok(point)
}

/// `critical_p` over a sorted grid of efficiencies. Points are computed in
/// parallel and returned in grid order; a failed point is marked rather
/// than aborting the sweep.
pub fn bound_curve(n: usize, family: SetFamily, epsilons: &[f64], tol: f64) -> Result<Vec<BoundPoint>> {
    let settings = MeasurementSet::for_family(family, n)?;
    bound_curve_with(&settings, epsilons, &LhsOptions::with_tol(tol))
}

pub fn bound_curve_with(settings: &MeasurementSet, epsilons: &[f64], options: &LhsOptions) -> Result<Vec<BoundPoint>> {
    if epsilons.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return invalid("efficiency grid values must lie in (0,1]");
    }
    if epsilons.windows(2).any(|w| w[0] > w[1]) {
        return invalid("efficiency grid must be sorted ascending");
    }
    let n = settings.len();
    let mut points: Vec<BoundPoint> = epsilons
        .par_iter()
        .map(|&e| critical_p_with(e, settings, options).unwrap_or_else(|err| BoundPoint::failed(n, settings.family(), e, &err)))
        .collect();
    let mut last = f64::INFINITY;
    for pt in points.iter_mut().filter(|p| p.status.is_ok()) {
        if pt.p_star > last + 1e-6 {
            pt.error = Some(format!("p_star {} exceeds the value {} at a smaller efficiency", pt.p_star, last));
            pt.status = BoundStatus::Failed;
        } else {
            last = pt.p_star;
        }
    }
    Ok(points)
}

/// Writes `n,family,epsilon,p_star,status,gap` rows.
pub fn write_bound_csv<W: Write>(writer: W, points: &[BoundPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["n", "family", "epsilon", "p_star", "status", "gap"])?;
    for p in points {
        w.write_record([
            p.n.to_string(),
            p.family.to_string(),
            format!("{:.6}", p.epsilon),
            format!("{:.9}", p.p_star),
            p.status.as_str().to_string(),
            format!("{:.3e}", p.gap),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct BoundDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    manifest: Option<String>,
    points: Vec<BoundPoint>,
}

/// JSON document with every point and its dual certificate.
pub fn write_bound_json<W: Write>(writer: W, points: &[BoundPoint], manifest: Option<&str>) -> Result<()> {
    let doc = BoundDocument { manifest: manifest.map(str::to_owned), points: points.to_vec() };
    serde_json::to_writer_pretty(writer, &doc)?;
    Ok(())
}

pub fn read_bound_json<R: Read>(reader: R) -> Result<Vec<BoundPoint>> {
    let doc: BoundDocument = serde_json::from_reader(reader)?;
    Ok(doc.points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lhs::verify_certificate;
    use crate::measurements::phase_encoding_set;

    #[test]
    fn zero_efficiency_is_trivial() {
        let set = phase_encoding_set(3).unwrap();
        let pt = critical_p(3, 0.0, &set, 1e-7).unwrap();
        assert_eq!(pt.p_star, 1.0);
        assert_eq!(pt.status, BoundStatus::Trivial);
        let pt = critical_epsilon(3, 0.0, &set, 1e-7).unwrap();
        assert_eq!(pt.epsilon, 1.0);
        assert!(critical_p(4, 0.5, &set, 1e-7).is_err());
        assert!(critical_p(3, 1.5, &set, 1e-7).is_err());
    }

    #[test]
    fn two_settings_lossless() {
        let set = phase_encoding_set(2).unwrap();
        let pt = critical_p(2, 1.0, &set, 1e-7).unwrap();
        assert!((pt.p_star - 0.5f64.sqrt()).abs() < 1e-6, "{}", pt.p_star);
        let probe = build_test_assemblage(IsotropicParams::new(1.0, 0.0).unwrap(), 1.0, &set).unwrap();
        assert!(verify_certificate(pt.certificate.as_ref().unwrap(), &probe, 1e-8).unwrap());
        let at = build_test_assemblage(IsotropicParams::new(pt.p_star, 0.0).unwrap(), 1.0, &set).unwrap();
        assert!(pt.model.unwrap().max_deviation(&at) < 1e-7);
    }

    #[test]
    fn grid_validation_and_empty_grid() {
        assert!(bound_curve(3, SetFamily::PhaseEncoding, &[], 1e-7).unwrap().is_empty());
        assert!(bound_curve(3, SetFamily::PhaseEncoding, &[0.5, 0.2], 1e-7).is_err());
        assert!(bound_curve(3, SetFamily::PhaseEncoding, &[0.0, 0.2], 1e-7).is_err());
        assert!(bound_curve(5, SetFamily::Platonic, &[0.5], 1e-7).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let set = phase_encoding_set(2).unwrap();
        let pts = vec![critical_p(2, 0.0, &set, 1e-7).unwrap()];
        let mut buf = Vec::new();
        write_bound_csv(&mut buf, &pts).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "n,family,epsilon,p_star,status,gap\n2,phase,0.000000,1.000000000,trivial,0.000e0\n");
    }
}
