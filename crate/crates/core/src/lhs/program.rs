//! Conic formulations of LHS-model questions and the restricted-strategy
//! (row generation) driver.
//!
//! Unknowns are one PSD block `sigma_lambda` per deterministic strategy plus
//! a few scalars. Constraints equate `sum_lambda D_lambda(a|k) sigma_lambda`
//! with the target member `sigma_{a|k}`, written in Pauli coordinates. The
//! null constraints of settings `k >= 1` follow from the others by
//! no-signalling and are left out, which keeps the constraint matrix of full
//! row rank.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assemblage::Assemblage;
use super::certificate::{verify_certificate, SteeringFunctional};
use super::conic::{self, block_at, ConeBlock, ConeProgram, ConeStatus, ScalarColumn, SolverSettings};
use super::strategy::{check_strategy_n, digits, DeterministicStrategy, Outcome};
use crate::error::{invalid, Error, Result};
use crate::quantum::HermitianOp;

/// How the strategy set is handled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyMethod {
    /// Full enumeration up to 7 settings, row generation above.
    #[default]
    Auto,
    Full,
    RowGeneration,
}

/// How losses constrain an LHS model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossModel {
    /// Conclusive probability `epsilon` at every setting, null reports
    /// leaving Bob with his reduced state.
    #[default]
    PerSetting,
    /// Only the average conclusive probability over settings is fixed; the
    /// null members are unconstrained apart from positivity. Supported by
    /// the critical-efficiency and critical-noise searches.
    AverageOverSettings,
}

#[derive(Clone, Debug)]
pub struct LhsOptions {
    /// Duality-gap tolerance of the solver and decision margin.
    pub tol: f64,
    /// Margin used when verifying dual certificates.
    pub certificate_tol: f64,
    pub method: StrategyMethod,
    pub loss_model: LossModel,
    pub solver: SolverSettings,
    /// Upper bound on row-generation rounds.
    pub max_rounds: usize,
}

impl Default for LhsOptions {
    fn default() -> Self {
        LhsOptions {
            tol: 1e-7,
            certificate_tol: 1e-8,
            method: StrategyMethod::Auto,
            loss_model: LossModel::PerSetting,
            solver: SolverSettings::default(),
            max_rounds: 100,
        }
    }
}

impl LhsOptions {
    pub fn with_tol(tol: f64) -> Self {
        LhsOptions { tol, ..Default::default() }
    }

    pub fn with_method(mut self, method: StrategyMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_loss_model(mut self, loss_model: LossModel) -> Self {
        self.loss_model = loss_model;
        self
    }

    pub(crate) fn uses_row_generation(&self, n: usize) -> bool {
        match self.method {
            StrategyMethod::Auto => n > 7,
            StrategyMethod::Full => false,
            StrategyMethod::RowGeneration => true,
        }
    }
}

/// Explicit LHS decomposition: `(lambda, q(lambda) sigma_lambda)` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LhsModel {
    pub n: usize,
    pub members: Vec<(DeterministicStrategy, HermitianOp)>,
}

impl LhsModel {
    /// `sum_lambda D_lambda(a|k) sigma_lambda` for every `(a, k)`.
    pub fn reconstruct(&self) -> Vec<[HermitianOp; 3]> {
        let mut out: Vec<[HermitianOp; 3]> =
            (0..self.n).map(|_| [HermitianOp::zeros(2), HermitianOp::zeros(2), HermitianOp::zeros(2)]).collect();
        for (lambda, sigma) in &self.members {
            for (k, o) in lambda.responses.iter().enumerate() {
                let slot = &mut out[k][o.index()];
                *slot = slot.add(sigma);
            }
        }
        out
    }

    /// Largest entrywise deviation between the reconstruction and `target`.
    pub fn max_deviation(&self, target: &Assemblage) -> f64 {
        self.reconstruct()
            .iter()
            .zip(target.members())
            .flat_map(|(r, t)| (0..3).map(move |a| r[a].max_abs_diff(&t[a])))
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.members.iter().map(|(_, s)| s.min_eigenvalue()).fold(f64::INFINITY, f64::min)
    }
}

/// Outcome of an LHS membership test.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LhsDecision {
    pub feasible: bool,
    pub model: Option<LhsModel>,
    pub certificate: Option<SteeringFunctional>,
    /// Solver duality gap (complementarity) at termination.
    pub gap: f64,
    /// Largest `t <= 1` such that `N + t (sigma - N)` is LHS, where `N` is
    /// the uncorrelated assemblage with the same marginals.
    pub lhs_fraction: f64,
}

/// Constraint-row layout: groups of four rows per retained `(a, k)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Layout {
    pub n: usize,
    pub include_null: bool,
}

impl Layout {
    pub fn group(&self, outcome: Outcome, k: usize) -> Option<usize> {
        match outcome {
            Outcome::Plus => Some(2 * k),
            Outcome::Minus => Some(2 * k + 1),
            Outcome::Null if k == 0 && self.include_null => Some(2 * self.n),
            Outcome::Null => None,
        }
    }

    pub fn num_groups(&self) -> usize {
        2 * self.n + usize::from(self.include_null)
    }

    pub fn num_strategies(&self) -> usize {
        3usize.pow(self.n as u32)
    }

    /// Row groups touched by strategy `index`, or `None` if the strategy is
    /// excluded (null responses in a lossless problem).
    pub fn groups_of(&self, index: usize) -> Option<Vec<usize>> {
        let mut groups = Vec::with_capacity(self.n);
        for (k, d) in digits(index, self.n).enumerate() {
            let o = Outcome::from_index(d);
            if o == Outcome::Null && !self.include_null {
                return None;
            }
            if let Some(g) = self.group(o, k) {
                groups.push(g);
            }
        }
        Some(groups)
    }

    /// Null-free strategies, single-setting-conclusive strategies and the
    /// all-null strategy.
    fn seed_strategies(&self) -> Vec<usize> {
        let n = self.n;
        let mut seeds = Vec::new();
        for bits in 0..(1usize << n) {
            let idx = (0..n).fold(0, |acc, k| acc * 3 + ((bits >> (n - 1 - k)) & 1));
            seeds.push(idx);
        }
        if self.include_null {
            let all_null = (0..n).fold(0, |acc, _| acc * 3 + 2);
            seeds.push(all_null);
            for k in 0..n {
                for o in [0usize, 1] {
                    let idx = (0..n).fold(0, |acc, j| acc * 3 + if j == k { o } else { 2 });
                    seeds.push(idx);
                }
            }
        }
        seeds.sort_unstable();
        seeds.dedup();
        seeds
    }

    pub fn pauli(&self, g: usize, v: [f64; 4], b: &mut [f64]) {
        b[4 * g..4 * g + 4].copy_from_slice(&v);
    }
}

/// What a conic program optimizes.
pub(crate) enum Target<'a> {
    /// max p with members `(eps/4)(I +- p n_k.sigma)` and nulls `(1-eps) I/2`.
    MaxP { epsilon: f64, dirs: &'a [[f64; 3]] },
    /// max eps at fixed p with the per-setting loss model.
    MaxEpsilon { p: f64, dirs: &'a [[f64; 3]] },
    /// max mean conclusive probability at fixed p, average-only loss model.
    MaxEpsilonAverage { p: f64, dirs: &'a [[f64; 3]] },
    /// max t <= 1 with members `N + t (S - N)`.
    Membership { target: &'a [[HermitianOp; 3]], reference: Vec<[HermitianOp; 3]> },
}

impl Target<'_> {
    fn n(&self) -> usize {
        match self {
            Target::MaxP { dirs, .. } | Target::MaxEpsilon { dirs, .. } | Target::MaxEpsilonAverage { dirs, .. } => {
                dirs.len()
            }
            Target::Membership { target, .. } => target.len(),
        }
    }

    /// Right-hand side and scalar columns for a given layout.
    fn scalar_part(&self, layout: &Layout) -> (Vec<f64>, Vec<ScalarColumn>) {
        let groups = layout.num_groups();
        let n = layout.n;
        let mut b = vec![0.0; 4 * groups];
        let mut cols = Vec::new();
        let null0 = layout.group(Outcome::Null, 0);
        match *self {
            Target::MaxP { epsilon, dirs } => {
                let mut col = ScalarColumn { cost: -1.0, entries: Vec::new() };
                for (k, d) in dirs.iter().enumerate() {
                    for (o, s) in [(Outcome::Plus, 1.0), (Outcome::Minus, -1.0)] {
                        let g = layout.group(o, k).unwrap();
                        layout.pauli(g, [epsilon / 4.0, 0.0, 0.0, 0.0], &mut b);
                        for r in 0..3 {
                            col.entries.push((4 * g + 1 + r, -s * epsilon / 4.0 * d[r]));
                        }
                    }
                }
                if let Some(g) = null0 {
                    layout.pauli(g, [(1.0 - epsilon) / 2.0, 0.0, 0.0, 0.0], &mut b);
                }
                cols.push(col);
            }
            Target::MaxEpsilon { p, dirs } => {
                let mut col = ScalarColumn { cost: -1.0, entries: Vec::new() };
                for (k, d) in dirs.iter().enumerate() {
                    for (o, s) in [(Outcome::Plus, 1.0), (Outcome::Minus, -1.0)] {
                        let g = layout.group(o, k).unwrap();
                        col.entries.push((4 * g, -0.25));
                        for r in 0..3 {
                            col.entries.push((4 * g + 1 + r, -s * p / 4.0 * d[r]));
                        }
                    }
                }
                let g = null0.expect("efficiency searches always carry null rows");
                layout.pauli(g, [0.5, 0.0, 0.0, 0.0], &mut b);
                col.entries.push((4 * g, 0.5));
                cols.push(col);
            }
            Target::MaxEpsilonAverage { p, dirs } => {
                let g0 = null0.expect("efficiency searches always carry null rows");
                layout.pauli(g0, [0.5, 0.0, 0.0, 0.0], &mut b);
                for (k, d) in dirs.iter().enumerate() {
                    let mut col = ScalarColumn { cost: -1.0 / n as f64, entries: Vec::new() };
                    for (o, s) in [(Outcome::Plus, 1.0), (Outcome::Minus, -1.0)] {
                        let g = layout.group(o, k).unwrap();
                        col.entries.push((4 * g, -0.25));
                        for r in 0..3 {
                            col.entries.push((4 * g + 1 + r, -s * p / 4.0 * d[r]));
                        }
                    }
                    if k == 0 {
                        col.entries.push((4 * g0, 0.5));
                    }
                    cols.push(col);
                }
            }
            Target::Membership { target, ref reference } => {
                let mut col = ScalarColumn { cost: -1.0, entries: Vec::new() };
                for k in 0..n {
                    for o in Outcome::ALL {
                        let Some(g) = layout.group(o, k) else { continue };
                        let s = target[k][o.index()].to_pauli();
                        let r = reference[k][o.index()].to_pauli();
                        layout.pauli(g, r, &mut b);
                        for c in 0..4 {
                            let v = s[c] - r[c];
                            if v != 0.0 {
                                col.entries.push((4 * g + c, -v));
                            }
                        }
                    }
                }
                let cap = b.len();
                b.push(1.0);
                col.entries.push((cap, 1.0));
                cols.push(col);
                cols.push(ScalarColumn { cost: 0.0, entries: vec![(cap, 1.0)] });
            }
        }
        (b, cols)
    }
}

/// Optimal solution of an LHS program over the strategies in `strategies`.
#[derive(Clone, Debug)]
pub(crate) struct LhsSolution {
    pub layout: Layout,
    /// Maximized objective (p, epsilon, mean conclusive rate or t).
    pub value: f64,
    pub strategies: Vec<usize>,
    pub blocks: Vec<[f64; 4]>,
    pub y: Vec<f64>,
    pub gap: f64,
    pub iterations: usize,
    pub rounds: usize,
}

impl LhsSolution {
    pub fn model(&self) -> LhsModel {
        let n = self.layout.n;
        LhsModel {
            n,
            members: self
                .strategies
                .iter()
                .zip(&self.blocks)
                .map(|(&i, b)| (DeterministicStrategy::from_index(i, n), HermitianOp::from_pauli(*b)))
                .collect(),
        }
    }

    /// The steering functional `F = -y` read off the dual variables.
    pub fn certificate(&self) -> Vec<[HermitianOp; 3]> {
        let layout = self.layout;
        let mut members: Vec<[HermitianOp; 3]> = (0..layout.n)
            .map(|k| {
                Outcome::ALL.map(|o| match layout.group(o, k) {
                    Some(g) => {
                        let y = &self.y[4 * g..4 * g + 4];
                        HermitianOp::from_pauli([-y[0], -y[1], -y[2], -y[3]])
                    }
                    None => HermitianOp::zeros(2),
                })
            })
            .collect();
        if !layout.include_null {
            // null members vanish on lossless assemblages; a large enough
            // multiple of I keeps every strategy with a null report positive
            let shift: f64 = members
                .iter()
                .map(|row| row[..2].iter().map(|f| (-f.min_eigenvalue()).max(0.0)).fold(0.0, f64::max))
                .sum();
            for row in &mut members {
                row[2] = HermitianOp::identity(2).scale(shift);
            }
        }
        members
    }
}

fn build_program(layout: &Layout, target: &Target, strategies: &[usize]) -> ConeProgram {
    let (b, scalars) = target.scalar_part(layout);
    let blocks = strategies
        .iter()
        .map(|&i| ConeBlock { cost: [0.0; 4], groups: layout.groups_of(i).expect("strategy admissible") })
        .collect();
    ConeProgram { b, scalars, blocks }
}

fn solve_once(layout: &Layout, target: &Target, strategies: &[usize], settings: &SolverSettings) -> Result<conic::ConeSolution> {
    let prog = build_program(layout, target, strategies);
    let sol = conic::solve(&prog, settings);
    if !matches!(sol.status, ConeStatus::Optimal | ConeStatus::Inaccurate) {
        return Err(Error::SolverFailure {
            reason: format!("{:?} with {} strategy blocks", sol.status, strategies.len()),
            iterations: sol.iterations,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            gap: sol.gap,
        });
    }
    Ok(sol)
}

/// Amount by which the dual slack of strategy `index` leaves the cone.
pub(crate) fn dual_violation(layout: &Layout, index: usize, y: &[f64]) -> Option<f64> {
    let groups = layout.groups_of(index)?;
    let a = block_at(&groups, y);
    // slack z = -A'y must satisfy z0 >= |z1|
    let z = [-a[0], -a[1], -a[2], -a[3]];
    Some((z[1] * z[1] + z[2] * z[2] + z[3] * z[3]).sqrt() - z[0])
}

pub(crate) fn solve_lhs(layout: Layout, target: &Target, options: &LhsOptions) -> Result<LhsSolution> {
    debug_assert_eq!(layout.n, target.n());
    check_strategy_n(layout.n)?;
    let total = layout.num_strategies();
    let mut settings = options.solver.clone();
    settings.gap_tol = settings.gap_tol.min(options.tol);

    if !options.uses_row_generation(layout.n) {
        let strategies: Vec<usize> = (0..total).filter(|&i| layout.groups_of(i).is_some()).collect();
        let sol = solve_once(&layout, target, &strategies, &settings)?;
        return Ok(finish(layout, sol, strategies, 1));
    }

    let mut active = layout.seed_strategies();
    let mut in_active = vec![false; total];
    for &i in &active {
        in_active[i] = true;
    }
    let batch = 50 + 25 * layout.n;
    let mut iterations = 0;
    for round in 1..=options.max_rounds {
        let sol = solve_once(&layout, target, &active, &settings)?;
        iterations += sol.iterations;
        let ymax = sol.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let threshold = 1e-9 * (1.0 + ymax);
        let mut violated: Vec<(f64, usize)> = (0..total)
            .into_par_iter()
            .filter(|&i| !in_active[i])
            .filter_map(|i| dual_violation(&layout, i, &sol.y).filter(|v| *v > threshold).map(|v| (v, i)))
            .collect();
        if violated.is_empty() {
            let mut out = finish(layout, sol, active, round);
            out.iterations = iterations;
            return Ok(out);
        }
        violated.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, i) in violated.iter().take(batch) {
            in_active[i] = true;
            active.push(i);
        }
        active.sort_unstable();
    }
    Err(Error::SolverFailure {
        reason: format!("row generation did not converge within {} rounds", options.max_rounds),
        iterations,
        primal_residual: f64::NAN,
        dual_residual: f64::NAN,
        gap: f64::NAN,
    })
}

fn finish(layout: Layout, sol: conic::ConeSolution, strategies: Vec<usize>, rounds: usize) -> LhsSolution {
    LhsSolution {
        layout,
        value: -sol.primal_obj,
        strategies,
        blocks: sol.x_blocks,
        y: sol.y,
        gap: sol.gap,
        iterations: sol.iterations,
        rounds,
    }
}

/// Product model of an uncorrelated assemblage: each strategy carries the
/// product of its per-setting outcome probabilities times `rho_B`.
fn product_model(asm: &Assemblage) -> LhsModel {
    let n = asm.n();
    let rho = asm.reduced_state();
    let probs: Vec<[f64; 3]> = asm.members().iter().map(|row| [0, 1, 2].map(|a| row[a].trace().max(0.0))).collect();
    let members = (0..3usize.pow(n as u32))
        .filter_map(|i| {
            let w: f64 = digits(i, n).enumerate().map(|(k, d)| probs[k][d]).product();
            (w > 0.0).then(|| (DeterministicStrategy::from_index(i, n), rho.scale(w)))
        })
        .collect();
    LhsModel { n, members }
}

/// Decides whether `assemblage` admits an LHS model, returning either a
/// reconstructing model or a verified steering functional.
pub fn lhs_membership(assemblage: &Assemblage, tol: f64) -> Result<LhsDecision> {
    lhs_membership_with(assemblage, &LhsOptions::with_tol(tol))
}

pub fn lhs_membership_with(assemblage: &Assemblage, options: &LhsOptions) -> Result<LhsDecision> {
    if !(options.tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    let n = assemblage.n();
    check_strategy_n(n)?;
    let reference = assemblage.uncorrelated_reference();
    let uncorrelated = assemblage
        .members()
        .iter()
        .zip(&reference)
        .all(|(r, s)| (0..3).all(|a| r[a].max_abs_diff(&s[a]) <= 1e-12));
    if assemblage.epsilon() <= 0.0 || uncorrelated {
        return Ok(LhsDecision {
            feasible: true,
            model: Some(product_model(assemblage)),
            certificate: None,
            gap: 0.0,
            lhs_fraction: 1.0,
        });
    }
    let layout = Layout { n, include_null: !assemblage.is_lossless() };
    let target = Target::Membership { target: assemblage.members(), reference };
    let sol = solve_lhs(layout, &target, options)?;
    let t = sol.value.min(1.0);
    if t >= 1.0 - options.tol {
        return Ok(LhsDecision { feasible: true, model: Some(sol.model()), certificate: None, gap: sol.gap, lhs_fraction: t });
    }
    let functional = SteeringFunctional::new(sol.certificate(), assemblage);
    if !verify_certificate(&functional, assemblage, options.certificate_tol)? {
        return Err(Error::SolverFailure {
            reason: format!("assemblage sits at the LHS boundary (t = {t:.3e}); certificate did not verify"),
            iterations: sol.iterations,
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
            gap: sol.gap,
        });
    }
    Ok(LhsDecision { feasible: false, model: None, certificate: Some(functional), gap: sol.gap, lhs_fraction: t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lhs::build_test_assemblage;
    use crate::measurements::phase_encoding_set;
    use crate::quantum::IsotropicParams;

    fn asm(p: f64, eps: f64, n: usize) -> Assemblage {
        build_test_assemblage(IsotropicParams::new(p, 0.0).unwrap(), eps, &phase_encoding_set(n).unwrap()).unwrap()
    }

    #[test]
    fn layout_groups() {
        let l = Layout { n: 2, include_null: true };
        assert_eq!(l.num_groups(), 5);
        // (+, null) touches plus of setting 0 only
        assert_eq!(l.groups_of(2), Some(vec![0]));
        // (null, -) touches null of setting 0 and minus of setting 1
        assert_eq!(l.groups_of(7), Some(vec![4, 3]));
        let lossless = Layout { n: 2, include_null: false };
        assert_eq!(lossless.groups_of(2), None);
        assert_eq!(lossless.seed_strategies().len(), 4);
        assert_eq!(l.seed_strategies().len(), 4 + 4 + 1);
    }

    #[test]
    fn white_noise_is_lhs() {
        let d = lhs_membership(&asm(0.0, 1.0, 3), 1e-7).unwrap();
        assert!(d.feasible);
        assert!(d.model.unwrap().max_deviation(&asm(0.0, 1.0, 3)) < 1e-12);
    }

    #[test]
    fn maximally_entangled_three_settings_steer() {
        let a = asm(1.0, 1.0, 3);
        let d = lhs_membership(&a, 1e-7).unwrap();
        assert!(!d.feasible);
        assert!(verify_certificate(d.certificate.as_ref().unwrap(), &a, 1e-8).unwrap());
    }

    #[test]
    fn lossy_feasible_model_reconstructs() {
        let a = asm(0.55, 0.4, 3);
        let d = lhs_membership(&a, 1e-7).unwrap();
        assert!(d.feasible, "t = {}", d.lhs_fraction);
        let m = d.model.unwrap();
        assert!(m.max_deviation(&a) < 1e-7, "{}", m.max_deviation(&a));
        assert!(m.min_eigenvalue() >= -1e-9);
    }
}
