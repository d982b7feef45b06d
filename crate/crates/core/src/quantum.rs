//! Two-qubit algebra: Hermitian operators, the isotropic state family,
//! correlators and conditional states.
//!
//! Basis convention: `|0>` is the early time bin and `|1>` the late one, so
//! the `sigma_z` eigenbasis is the arrival-time basis. In every two-qubit
//! operator the steering party (Alice) is the first tensor factor.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::measurements::MeasurementSet;

/// Tolerance on `|a_ij - conj(a_ji)|` accepted when constructing an operator.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Default tolerance for algebraic identities.
pub const ALGEBRA_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense complex Hermitian matrix of dimension 2 or 4.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FlatHermitian", into = "FlatHermitian")]
pub struct HermitianOp {
    m: DMatrix<Complex64>,
}

/// Row-major flattened form used for serialization.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct FlatHermitian {
    dim: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl From<HermitianOp> for FlatHermitian {
    fn from(op: HermitianOp) -> Self {
        let d = op.dim();
        let mut re = Vec::with_capacity(d * d);
        let mut im = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                re.push(op.m[(i, j)].re);
                im.push(op.m[(i, j)].im);
            }
        }
        FlatHermitian { dim: d, re, im }
    }
}

impl TryFrom<FlatHermitian> for HermitianOp {
    type Error = crate::Error;

    fn try_from(flat: FlatHermitian) -> Result<Self> {
        let d = flat.dim;
        if flat.re.len() != d * d || flat.im.len() != d * d {
            return invalid(format!("flattened operator of dim {d} needs {} entries", d * d));
        }
        let m = DMatrix::from_fn(d, d, |i, j| Complex64::new(flat.re[i * d + j], flat.im[i * d + j]));
        HermitianOp::new(m)
    }
}

impl HermitianOp {
    /// Validates dimension and Hermiticity. The stored matrix is symmetrized
    /// so that later algebra sees an exactly Hermitian operator.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        let d = m.nrows();
        if m.ncols() != d || !(d == 2 || d == 4) {
            return invalid(format!("operator must be 2x2 or 4x4, got {}x{}", m.nrows(), m.ncols()));
        }
        for i in 0..d {
            for j in 0..d {
                let (a, b) = (m[(i, j)], m[(j, i)].conj());
                if !a.re.is_finite() || !a.im.is_finite() {
                    return invalid("operator has non-finite entries");
                }
                if (a - b).norm() > HERMITIAN_TOL {
                    return invalid(format!("operator is not Hermitian at ({i},{j})"));
                }
            }
        }
        Ok(Self::from_raw(m))
    }

    fn from_raw(m: DMatrix<Complex64>) -> Self {
        let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        HermitianOp { m: h }
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOp { m: DMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianOp { m: DMatrix::zeros(dim, dim) }
    }

    pub fn pauli_x() -> Self {
        HermitianOp { m: DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]) }
    }

    pub fn pauli_y() -> Self {
        HermitianOp { m: DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]) }
    }

    pub fn pauli_z() -> Self {
        HermitianOp { m: DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]) }
    }

    /// Builds `t*I + r . sigma` from Pauli coordinates `[t, rx, ry, rz]`.
    pub fn from_pauli(c: [f64; 4]) -> Self {
        let [t, x, y, z] = c;
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(t + z, 0.0),
                Complex64::new(x, -y),
                Complex64::new(x, y),
                Complex64::new(t - z, 0.0),
            ],
        );
        HermitianOp { m }
    }

    /// The `+-1` observable `n . sigma` for a Bloch direction.
    pub fn observable(bloch: [f64; 3]) -> Self {
        Self::from_pauli([0.0, bloch[0], bloch[1], bloch[2]])
    }

    /// Pauli coordinates `[t, rx, ry, rz]` of a 2x2 operator, so that
    /// `Tr[A B] = 2 * dot(pauli(A), pauli(B))`.
    pub fn to_pauli(&self) -> [f64; 4] {
        assert_eq!(self.dim(), 2, "Pauli coordinates are defined for qubit operators");
        let m = &self.m;
        [
            0.5 * (m[(0, 0)].re + m[(1, 1)].re),
            m[(1, 0)].re,
            m[(1, 0)].im,
            0.5 * (m[(0, 0)].re - m[(1, 1)].re),
        ]
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.m.clone());
        let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim() == 2 {
            // closed form keeps the 2x2 path exact and cheap
            let [t, x, y, z] = self.to_pauli();
            return t - (x * x + y * y + z * z).sqrt();
        }
        self.eigenvalues()[0]
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianOp { m: &self.m * Complex64::new(s, 0.0) }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        HermitianOp { m: &self.m + &other.m }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        HermitianOp { m: &self.m - &other.m }
    }

    /// Kronecker product `self (x) other`; only qubit (x) qubit is supported.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        if self.dim() != 2 || other.dim() != 2 {
            return invalid("tensor product is defined for two qubit operators");
        }
        Ok(HermitianOp { m: self.m.kronecker(&other.m) })
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.m.iter().zip(other.m.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `Tr[self * other]`, real for Hermitian arguments.
    pub fn trace_product(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        (&self.m * &other.m).trace().re
    }
}

/// `sigma_theta = cos(theta) sigma_x + sin(theta) sigma_y`, the observable an
/// interferometer with differential phase `theta` implements.
pub fn sigma_theta(theta: f64) -> Result<HermitianOp> {
    if !theta.is_finite() {
        return invalid(format!("phase must be finite, got {theta}"));
    }
    Ok(HermitianOp::observable([theta.cos(), theta.sin(), 0.0]))
}

/// Parameters of the isotropic family `p |Psi(alpha)><Psi(alpha)| + (1-p) I/4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotropicParams {
    p: f64,
    alpha: f64,
}

impl IsotropicParams {
    pub fn new(p: f64, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return invalid(format!("entangled fraction p must lie in [0,1], got {p}"));
        }
        if !(0.0..=std::f64::consts::PI).contains(&alpha) {
            return invalid(format!("phase alpha must lie in [0,pi], got {alpha}"));
        }
        Ok(Self { p, alpha })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// The isotropic two-qubit state for validated parameters.
pub fn isotropic_state(params: IsotropicParams) -> HermitianOp {
    isotropic_state_with_phase(params.p, params.alpha)
        .expect("validated parameters always produce a state")
}

/// Same as [`isotropic_state`] but accepts any finite phase `alpha`.
pub fn isotropic_state_with_phase(p: f64, alpha: f64) -> Result<HermitianOp> {
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("entangled fraction p must lie in [0,1], got {p}"));
    }
    if !alpha.is_finite() {
        return invalid("phase alpha must be finite");
    }
    // |Psi(alpha)> = (|00> + e^{i alpha} |11>)/sqrt(2)
    let phase = Complex64::from_polar(1.0, alpha);
    let mut m = DMatrix::<Complex64>::identity(4, 4) * Complex64::new((1.0 - p) / 4.0, 0.0);
    let half_p = Complex64::new(p / 2.0, 0.0);
    m[(0, 0)] += half_p;
    m[(3, 3)] += half_p;
    m[(0, 3)] += half_p * phase.conj();
    m[(3, 0)] += half_p * phase;
    Ok(HermitianOp::from_raw(m))
}

fn check_density(rho: &HermitianOp) -> Result<()> {
    if rho.dim() != 4 {
        return invalid(format!("two-qubit state must be 4x4, got {}x{}", rho.dim(), rho.dim()));
    }
    Ok(())
}

fn check_qubit(op: &HermitianOp, what: &str) -> Result<()> {
    if op.dim() != 2 {
        return invalid(format!("{what} must be a 2x2 operator, got {}x{}", op.dim(), op.dim()));
    }
    Ok(())
}

/// `Tr[rho (A (x) B)]`.
pub fn correlation(rho: &HermitianOp, obs_a: &HermitianOp, obs_b: &HermitianOp) -> Result<f64> {
    check_density(rho)?;
    check_qubit(obs_a, "Alice's observable")?;
    check_qubit(obs_b, "Bob's observable")?;
    Ok(rho.trace_product(&obs_a.kron(obs_b)?))
}

/// Closed form of `correlation(isotropic(p, alpha), sigma_ta, sigma_tb)`.
pub fn equatorial_correlation(p: f64, alpha: f64, theta_a: f64, theta_b: f64) -> f64 {
    p * (theta_a + theta_b - alpha).cos()
}

/// Partial trace over the first (Alice's) factor.
pub fn partial_trace_alice(op: &HermitianOp) -> Result<HermitianOp> {
    check_density(op)?;
    let m = op.matrix();
    let r = DMatrix::from_fn(2, 2, |i, j| m[(i, j)] + m[(2 + i, 2 + j)]);
    Ok(HermitianOp::from_raw(r))
}

/// Bob's subnormalized state `Tr_A[(P (x) I) rho]` after Alice obtains the
/// outcome associated with the projector `P`.
pub fn conditional_state(rho: &HermitianOp, projector_a: &HermitianOp) -> Result<HermitianOp> {
    check_density(rho)?;
    check_qubit(projector_a, "projector")?;
    let p = projector_a.matrix();
    let idem = (p * p - p).iter().map(|c| c.norm()).fold(0.0, f64::max);
    if idem > ALGEBRA_TOL {
        return invalid("projector is not idempotent");
    }
    let lifted = projector_a.kron(&HermitianOp::identity(2))?;
    let prod = lifted.matrix() * rho.matrix();
    partial_trace_alice(&HermitianOp::from_raw(prod))
}

/// Projector onto the `outcome` (+1 or -1) eigenspace of `n . sigma`.
pub fn outcome_projector(bloch: [f64; 3], outcome: i8) -> HermitianOp {
    let s = f64::from(outcome.signum());
    HermitianOp::from_pauli([0.5, 0.5 * s * bloch[0], 0.5 * s * bloch[1], 0.5 * s * bloch[2]])
}

/// Steering parameter: the mean of `n` correlators between Alice's
/// announced outcomes and Bob's results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringEstimate {
    pub value: f64,
    pub per_setting: Vec<f64>,
    pub n: usize,
    /// Standard error of `value`; zero for analytic predictions.
    #[serde(default)]
    pub std_error: f64,
    #[serde(default)]
    pub per_setting_std_error: Vec<f64>,
}

impl SteeringEstimate {
    pub fn from_correlators(per_setting: Vec<f64>, per_setting_std_error: Vec<f64>) -> Self {
        let n = per_setting.len();
        let value = per_setting.iter().sum::<f64>() / n as f64;
        let std_error = if per_setting_std_error.is_empty() {
            0.0
        } else {
            per_setting_std_error.iter().map(|e| e * e).sum::<f64>().sqrt() / n as f64
        };
        SteeringEstimate { value, per_setting, n, std_error, per_setting_std_error }
    }
}

/// Analytic steering parameter for an isotropic state where Bob measures
/// `settings` and Alice measures `alice`.
///
/// `visibility` multiplies the correlators of phase-basis settings only; the
/// time-basis correlator is left untouched.
pub fn expected_steering_parameter(
    params: IsotropicParams,
    settings: &MeasurementSet,
    alice: &MeasurementSet,
    visibility: f64,
) -> Result<SteeringEstimate> {
    if settings.len() != alice.len() {
        return invalid(format!(
            "Bob has {} settings but Alice has {}",
            settings.len(),
            alice.len()
        ));
    }
    if !(0.0..=1.0).contains(&visibility) {
        return invalid(format!("visibility must lie in [0,1], got {visibility}"));
    }
    let rho = isotropic_state(params);
    let per_setting = settings
        .measurements()
        .iter()
        .zip(alice.measurements())
        .map(|(b, a)| {
            let c = correlation(&rho, &a.observable(), &b.observable())?;
            Ok(if b.is_time_basis() { c } else { visibility * c })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SteeringEstimate::from_correlators(per_setting, Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sigma_theta_limits() {
        assert!(sigma_theta(0.0).unwrap().max_abs_diff(&HermitianOp::pauli_x()) < 1e-15);
        assert!(sigma_theta(FRAC_PI_2).unwrap().max_abs_diff(&HermitianOp::pauli_y()) < 1e-15);
        assert!(sigma_theta(f64::NAN).is_err());
        assert!(sigma_theta(f64::INFINITY).is_err());
    }

    #[test]
    fn sigma_theta_quarter_turn_has_unit_eigenvalues() {
        let s = sigma_theta(FRAC_PI_4).unwrap();
        let expect = HermitianOp::pauli_x().add(&HermitianOp::pauli_y()).scale(1.0 / 2f64.sqrt());
        assert!(s.max_abs_diff(&expect) < 1e-15);
        let ev = s.eigenvalues();
        assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn isotropic_examples() {
        let phi = isotropic_state(IsotropicParams::new(1.0, 0.0).unwrap());
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((phi.entry(i, j) - c(0.5, 0.0)).norm() < 1e-15);
        }
        assert!(phi.entry(1, 1).norm() < 1e-15);

        let mixed = isotropic_state(IsotropicParams::new(0.0, 2.0).unwrap());
        assert!(mixed.max_abs_diff(&HermitianOp::identity(4).scale(0.25)) < 1e-15);

        let half = isotropic_state(IsotropicParams::new(0.5, FRAC_PI_2).unwrap());
        assert!((half.entry(0, 3) - c(0.0, -0.25)).norm() < 1e-15);
        let diag: Vec<f64> = (0..4).map(|i| half.entry(i, i).re).collect();
        for (d, e) in diag.iter().zip([0.375, 0.125, 0.125, 0.375]) {
            assert!((d - e).abs() < 1e-15);
        }
    }

    #[test]
    fn isotropic_params_validation() {
        assert!(IsotropicParams::new(1.1, 0.0).is_err());
        assert!(IsotropicParams::new(-0.1, 0.0).is_err());
        assert!(IsotropicParams::new(0.5, PI + 0.1).is_err());
        assert!(isotropic_state_with_phase(0.5, 2.0 * PI).is_ok());
        assert!(isotropic_state_with_phase(0.5, f64::NAN).is_err());
    }

    #[test]
    fn correlation_examples() {
        let z = HermitianOp::pauli_z();
        let phi = isotropic_state(IsotropicParams::new(1.0, 0.0).unwrap());
        assert!((correlation(&phi, &z, &z).unwrap() - 1.0).abs() < 1e-12);

        let rho = isotropic_state(IsotropicParams::new(1.0, FRAC_PI_2).unwrap());
        let s = sigma_theta(FRAC_PI_4).unwrap();
        assert!((correlation(&rho, &s, &s).unwrap() - 1.0).abs() < 1e-12);

        let mixed = isotropic_state(IsotropicParams::new(0.0, 0.0).unwrap());
        assert!(correlation(&mixed, &s, &z).unwrap().abs() < 1e-15);

        assert!(correlation(&s, &s, &z).is_err());
        assert!(correlation(&phi, &phi, &z).is_err());
    }

    #[test]
    fn conditional_state_examples() {
        let phi = isotropic_state(IsotropicParams::new(1.0, 0.0).unwrap());
        let p0 = outcome_projector([0.0, 0.0, 1.0], 1);
        let cond = conditional_state(&phi, &p0).unwrap();
        let expect = HermitianOp::from_pauli([0.25, 0.0, 0.0, 0.25]);
        assert!(cond.max_abs_diff(&expect) < 1e-15);

        let mixed = isotropic_state(IsotropicParams::new(0.0, 0.0).unwrap());
        let px = outcome_projector([1.0, 0.0, 0.0], -1);
        let cond = conditional_state(&mixed, &px).unwrap();
        assert!(cond.max_abs_diff(&HermitianOp::identity(2).scale(0.25)) < 1e-15);

        let rho = isotropic_state(IsotropicParams::new(0.7, 1.1).unwrap());
        let n = [0.6, 0.0, 0.8];
        let sum = conditional_state(&rho, &outcome_projector(n, 1))
            .unwrap()
            .add(&conditional_state(&rho, &outcome_projector(n, -1)).unwrap());
        assert!(sum.max_abs_diff(&HermitianOp::identity(2).scale(0.5)) < 1e-12);

        assert!(conditional_state(&rho, &HermitianOp::pauli_x()).is_err());
    }

    #[test]
    fn pauli_round_trip_and_trace_form() {
        let a = HermitianOp::from_pauli([0.3, -0.2, 0.5, 0.1]);
        let b = HermitianOp::from_pauli([0.7, 0.4, 0.25, -0.6]);
        let pa = a.to_pauli();
        for (x, y) in pa.iter().zip([0.3, -0.2, 0.5, 0.1]) {
            assert!((x - y).abs() < 1e-15);
        }
        let dot: f64 = pa.iter().zip(b.to_pauli()).map(|(x, y)| x * y).sum();
        assert!((a.trace_product(&b) - 2.0 * dot).abs() < 1e-14);
        assert!((a.min_eigenvalue() - a.eigenvalues()[0]).abs() < 1e-12);
    }

    #[test]
    fn serde_flattens_entries() {
        let rho = isotropic_state(IsotropicParams::new(0.5, 1.0).unwrap());
        let json = serde_json::to_string(&rho).unwrap();
        let back: HermitianOp = serde_json::from_str(&json).unwrap();
        assert!(back.max_abs_diff(&rho) < 1e-15);
        assert!(serde_json::from_str::<HermitianOp>(r#"{"dim":2,"re":[0,1,0,0],"im":[0,0,0,0]}"#).is_err());
    }
}
