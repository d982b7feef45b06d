//! Primal-dual interior-point method for the structured conic programs that
//! arise from local-hidden-state decompositions.
//!
//! Standard form:
//!
//! ```text
//!   min  c'x   s.t.  A x = b,  x in K
//!   max  b'y   s.t.  A'y + z = c,  z in K
//! ```
//!
//! `K` is a product of nonnegative scalars and 4-dimensional second-order
//! cones. A qubit Hermitian operator `t I + r.sigma` is PSD exactly when
//! `t >= |r|`, so each 2x2 PSD block of the SDP is one such cone in Pauli
//! coordinates. Every cone block enters the constraints with coefficient +1
//! in one or more groups of four consecutive rows; this is what the normal
//! equations exploit.
//!
//! Search directions use Nesterov-Todd scaling and a Mehrotra
//! predictor-corrector step.

use nalgebra::{Cholesky, DMatrix, DVector};

/// A nonnegative scalar variable and its sparse column of `A`.
#[derive(Clone, Debug, Default)]
pub struct ScalarColumn {
    pub cost: f64,
    pub entries: Vec<(usize, f64)>,
}

/// A 4-dimensional second-order cone block; component `r` adds into rows
/// `4g + r` for each group `g`.
#[derive(Clone, Debug)]
pub struct ConeBlock {
    pub cost: [f64; 4],
    pub groups: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct ConeProgram {
    pub b: Vec<f64>,
    pub scalars: Vec<ScalarColumn>,
    pub blocks: Vec<ConeBlock>,
}

#[derive(Clone, Debug)]
pub struct SolverSettings {
    pub max_iter: usize,
    /// Relative primal/dual residual tolerance.
    pub feas_tol: f64,
    /// Relative duality gap tolerance.
    pub gap_tol: f64,
    /// Looser tolerance accepted when the iteration stalls.
    pub inaccurate_tol: f64,
    pub step_fraction: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { max_iter: 150, feas_tol: 1e-10, gap_tol: 1e-10, inaccurate_tol: 1e-8, step_fraction: 0.99 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConeStatus {
    Optimal,
    /// Stalled before the requested tolerances but within `inaccurate_tol`.
    Inaccurate,
    MaxIterations,
    NumericalError,
}

#[derive(Clone, Debug)]
pub struct ConeSolution {
    pub status: ConeStatus,
    pub x_scalars: Vec<f64>,
    pub x_blocks: Vec<[f64; 4]>,
    pub y: Vec<f64>,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Complementarity `x'z`.
    pub gap: f64,
}

/// Point of the product cone, scalars first.
#[derive(Clone, Debug)]
struct Point {
    s: Vec<f64>,
    q: Vec<[f64; 4]>,
}

impl Point {
    fn identity(ns: usize, nq: usize, scale: f64) -> Self {
        Point { s: vec![scale; ns], q: vec![[scale, 0.0, 0.0, 0.0]; nq] }
    }

    fn dot(&self, o: &Point) -> f64 {
        let a: f64 = self.s.iter().zip(&o.s).map(|(x, y)| x * y).sum();
        let b: f64 = self.q.iter().zip(&o.q).map(|(x, y)| dot4(x, y)).sum();
        a + b
    }

    fn axpy(&mut self, alpha: f64, d: &Point) {
        for (x, dx) in self.s.iter_mut().zip(&d.s) {
            *x += alpha * dx;
        }
        for (x, dx) in self.q.iter_mut().zip(&d.q) {
            for r in 0..4 {
                x[r] += alpha * dx[r];
            }
        }
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

fn jdet(u: &[f64; 4]) -> f64 {
    u[0] * u[0] - u[1] * u[1] - u[2] * u[2] - u[3] * u[3]
}

/// Jordan product of the second-order cone.
fn jprod(u: &[f64; 4], v: &[f64; 4]) -> [f64; 4] {
    [dot4(u, v), u[0] * v[1] + v[0] * u[1], u[0] * v[2] + v[0] * u[2], u[0] * v[3] + v[0] * u[3]]
}

/// Solves `u o d = r` for `d`.
fn jdiv(u: &[f64; 4], r: &[f64; 4]) -> [f64; 4] {
    let det = jdet(u);
    let u1r1 = u[1] * r[1] + u[2] * r[2] + u[3] * r[3];
    let d0 = (u[0] * r[0] - u1r1) / det;
    [d0, (r[1] - u[1] * d0) / u[0], (r[2] - u[2] * d0) / u[0], (r[3] - u[3] * d0) / u[0]]
}

type Mat4 = [[f64; 4]; 4];

fn mat4_vec(m: &Mat4, v: &[f64; 4]) -> [f64; 4] {
    [dot4(&m[0], v), dot4(&m[1], v), dot4(&m[2], v), dot4(&m[3], v)]
}

fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Nesterov-Todd scaling of one cone block: `W z = W^{-1} x = lambda`.
#[derive(Clone, Debug)]
struct NtScaling {
    w: Mat4,
    winv: Mat4,
    w2: Mat4,
    lambda: [f64; 4],
}

fn nt_scaling(x: &[f64; 4], z: &[f64; 4]) -> Option<NtScaling> {
    let (xd, zd) = (jdet(x), jdet(z));
    if !(xd > 0.0 && zd > 0.0 && x[0] > 0.0 && z[0] > 0.0) {
        return None;
    }
    let (xs, zs) = (xd.sqrt(), zd.sqrt());
    let xn = x.map(|v| v / xs);
    let zn = z.map(|v| v / zs);
    let gamma = ((1.0 + dot4(&xn, &zn)) / 2.0).sqrt();
    let wbar = [
        (xn[0] + zn[0]) / (2.0 * gamma),
        (xn[1] - zn[1]) / (2.0 * gamma),
        (xn[2] - zn[2]) / (2.0 * gamma),
        (xn[3] - zn[3]) / (2.0 * gamma),
    ];
    let beta = (xs / zs).sqrt();
    let denom = (2.0 * (wbar[0] + 1.0)).sqrt();
    let v = [(wbar[0] + 1.0) / denom, wbar[1] / denom, wbar[2] / denom, wbar[3] / denom];
    let jv = [v[0], -v[1], -v[2], -v[3]];
    let jd = [1.0, -1.0, -1.0, -1.0];
    let mut w = [[0.0; 4]; 4];
    let mut winv = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let jij = if i == j { jd[i] } else { 0.0 };
            w[i][j] = beta * (2.0 * v[i] * v[j] - jij);
            winv[i][j] = (2.0 * jv[i] * jv[j] - jij) / beta;
        }
    }
    let w2 = mat4_mul(&w, &w);
    let lambda = mat4_vec(&w, z);
    Some(NtScaling { w, winv, w2, lambda })
}

/// Largest `alpha` with `u + alpha d` in the cone (may be infinite).
fn soc_max_step(u: &[f64; 4], d: &[f64; 4]) -> f64 {
    let a = jdet(d);
    let b = 2.0 * (u[0] * d[0] - u[1] * d[1] - u[2] * d[2] - u[3] * d[3]);
    let c = jdet(u).max(0.0);
    let mut best = f64::INFINITY;
    let mut consider = |r: f64| {
        if r > 0.0 && r < best {
            best = r;
        }
    };
    if a.abs() < 1e-300 {
        if b < 0.0 {
            consider(-c / b);
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            let q = -0.5 * (b + b.signum() * sq);
            if q != 0.0 {
                consider(q / a);
                consider(c / q);
            } else {
                consider(sq / (2.0 * a));
            }
        }
    }
    // the leading component must stay positive as well
    if d[0] < 0.0 {
        consider(-u[0] / d[0]);
    }
    best
}

fn max_step(p: &Point, d: &Point) -> f64 {
    let mut alpha = f64::INFINITY;
    for (x, dx) in p.s.iter().zip(&d.s) {
        if *dx < 0.0 {
            alpha = alpha.min(-x / dx);
        }
    }
    for (x, dx) in p.q.iter().zip(&d.q) {
        alpha = alpha.min(soc_max_step(x, dx));
    }
    alpha
}

impl ConeProgram {
    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    fn apply_a(&self, x: &Point) -> Vec<f64> {
        let mut out = vec![0.0; self.num_rows()];
        for (col, v) in self.scalars.iter().zip(&x.s) {
            for &(r, a) in &col.entries {
                out[r] += a * v;
            }
        }
        for (blk, v) in self.blocks.iter().zip(&x.q) {
            for &g in &blk.groups {
                for r in 0..4 {
                    out[4 * g + r] += v[r];
                }
            }
        }
        out
    }

    fn apply_at(&self, y: &[f64]) -> Point {
        let s = self.scalars.iter().map(|col| col.entries.iter().map(|&(r, a)| a * y[r]).sum()).collect();
        let q = self.blocks.iter().map(|blk| block_at(&blk.groups, y)).collect();
        Point { s, q }
    }

    fn cost(&self) -> Point {
        Point {
            s: self.scalars.iter().map(|c| c.cost).collect(),
            q: self.blocks.iter().map(|b| b.cost).collect(),
        }
    }
}

/// `A_b' y` for a cone block touching `groups`.
pub(crate) fn block_at(groups: &[usize], y: &[f64]) -> [f64; 4] {
    let mut acc = [0.0; 4];
    for &g in groups {
        for r in 0..4 {
            acc[r] += y[4 * g + r];
        }
    }
    acc
}

struct Scalings {
    /// `sqrt(x/z)` for scalars.
    d: Vec<f64>,
    lambda_s: Vec<f64>,
    q: Vec<NtScaling>,
}

impl Scalings {
    fn new(x: &Point, z: &Point) -> Option<Self> {
        let mut d = Vec::with_capacity(x.s.len());
        let mut lambda_s = Vec::with_capacity(x.s.len());
        for (xi, zi) in x.s.iter().zip(&z.s) {
            if !(*xi > 0.0 && *zi > 0.0) {
                return None;
            }
            d.push((xi / zi).sqrt());
            lambda_s.push((xi * zi).sqrt());
        }
        let q = x.q.iter().zip(&z.q).map(|(xi, zi)| nt_scaling(xi, zi)).collect::<Option<Vec<_>>>()?;
        Some(Scalings { d, lambda_s, q })
    }

    fn apply_w(&self, v: &Point) -> Point {
        Point {
            s: v.s.iter().zip(&self.d).map(|(a, d)| a * d).collect(),
            q: v.q.iter().zip(&self.q).map(|(a, sc)| mat4_vec(&sc.w, a)).collect(),
        }
    }

    fn apply_winv(&self, v: &Point) -> Point {
        Point {
            s: v.s.iter().zip(&self.d).map(|(a, d)| a / d).collect(),
            q: v.q.iter().zip(&self.q).map(|(a, sc)| mat4_vec(&sc.winv, a)).collect(),
        }
    }

    fn apply_w2(&self, v: &Point) -> Point {
        Point {
            s: v.s.iter().zip(&self.d).map(|(a, d)| a * d * d).collect(),
            q: v.q.iter().zip(&self.q).map(|(a, sc)| mat4_vec(&sc.w2, a)).collect(),
        }
    }

    fn lambda(&self) -> Point {
        Point { s: self.lambda_s.clone(), q: self.q.iter().map(|sc| sc.lambda).collect() }
    }
}

fn normal_matrix(prog: &ConeProgram, sc: &Scalings) -> DMatrix<f64> {
    let m = prog.num_rows();
    let mut mat = vec![0.0; m * m];
    for (col, d) in prog.scalars.iter().zip(&sc.d) {
        let d2 = d * d;
        for &(r1, a1) in &col.entries {
            for &(r2, a2) in &col.entries {
                mat[r1 * m + r2] += d2 * a1 * a2;
            }
        }
    }
    for (blk, s) in prog.blocks.iter().zip(&sc.q) {
        for &g in &blk.groups {
            for &h in &blk.groups {
                for r in 0..4 {
                    let row = (4 * g + r) * m + 4 * h;
                    for c in 0..4 {
                        mat[row + c] += s.w2[r][c];
                    }
                }
            }
        }
    }
    DMatrix::from_row_slice(m, m, &mat)
}

fn factor(mut mat: DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let m = mat.nrows();
    let scale = (0..m).map(|i| mat[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut reg = 0.0;
    for _ in 0..8 {
        if let Some(ch) = Cholesky::new(mat.clone()) {
            return Some(ch);
        }
        reg = if reg == 0.0 { 1e-13 * scale } else { reg * 100.0 };
        for i in 0..m {
            mat[(i, i)] += reg;
        }
    }
    None
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Newton direction for complementarity right-hand side `rc` (scaled space).
struct Direction {
    dx: Point,
    dy: Vec<f64>,
    dz: Point,
}

fn solve_newton(
    prog: &ConeProgram,
    sc: &Scalings,
    chol: &Cholesky<f64, nalgebra::Dyn>,
    rp: &[f64],
    rd: &Point,
    rc: &Point,
) -> Direction {
    let lambda = sc.lambda();
    // d = lambda \ rc
    let d = Point {
        s: rc.s.iter().zip(&lambda.s).map(|(r, l)| r / l).collect(),
        q: rc.q.iter().zip(&lambda.q).map(|(r, l)| jdiv(l, r)).collect(),
    };
    let wd = sc.apply_w(&d);
    let w2rd = sc.apply_w2(rd);
    let a_wd = prog.apply_a(&wd);
    let a_w2rd = prog.apply_a(&w2rd);
    let rhs: Vec<f64> = (0..rp.len()).map(|i| rp[i] - a_wd[i] + a_w2rd[i]).collect();
    let rhs_v = DVector::from_vec(rhs);
    let mut dy = chol.solve(&rhs_v);
    // iterative refinement against the unregularized operator
    let mut last = f64::INFINITY;
    for _ in 0..4 {
        let back = prog.apply_a(&sc.apply_w2(&prog.apply_at(dy.as_slice())));
        let resid = DVector::from_iterator(rhs_v.len(), rhs_v.iter().zip(&back).map(|(r, b)| r - b));
        let size = resid.norm();
        if !(size < 0.5 * last) || size <= 1e-15 * rhs_v.norm() {
            break;
        }
        last = size;
        dy += chol.solve(&resid);
    }
    let dy: Vec<f64> = dy.iter().copied().collect();
    let at_dy = prog.apply_at(&dy);
    let mut dz = rd.clone();
    dz.axpy(-1.0, &at_dy);
    let mut dx = wd;
    dx.axpy(-1.0, &sc.apply_w2(&dz));
    Direction { dx, dy, dz }
}

/// Solves the program from a standard cold start.
pub fn solve(prog: &ConeProgram, settings: &SolverSettings) -> ConeSolution {
    let ns = prog.scalars.len();
    let nq = prog.blocks.len();
    let m = prog.num_rows();
    let nu = (ns + nq).max(1) as f64;
    let c = prog.cost();
    let bnorm = norm(&prog.b).max(1.0);
    let cnorm = c.norm().max(1.0);

    let mut x = Point::identity(ns, nq, 1.0);
    let mut z = Point::identity(ns, nq, 1.0);
    let mut y = vec![0.0; m];

    let mut status = ConeStatus::MaxIterations;
    let mut iterations = 0;
    let (mut pres, mut dres, mut gap) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    // late iterations can lose primal accuracy; remember the best one seen
    let mut best: Option<(f64, Point, Vec<f64>, [f64; 3])> = None;

    for it in 0..settings.max_iter {
        iterations = it;
        let ax = prog.apply_a(&x);
        let rp: Vec<f64> = prog.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let mut rd = c.clone();
        rd.axpy(-1.0, &prog.apply_at(&y));
        rd.axpy(-1.0, &z);

        let pobj = c.dot(&x);
        let dobj = dot(&prog.b, &y);
        gap = x.dot(&z);
        pres = norm(&rp) / bnorm;
        dres = rd.norm() / cnorm;
        let scale = 1.0 + pobj.abs().min(dobj.abs());
        if pres < settings.feas_tol && dres < settings.feas_tol && gap / scale < settings.gap_tol {
            status = ConeStatus::Optimal;
            break;
        }
        let merit = pres.max(dres).max(gap / scale);
        if best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((merit, x.clone(), y.clone(), [pres, dres, gap]));
        }
        let mu = gap / nu;

        let Some(sc) = Scalings::new(&x, &z) else {
            status = ConeStatus::NumericalError;
            break;
        };
        let Some(chol) = factor(normal_matrix(prog, &sc)) else {
                status = ConeStatus::NumericalError;
            break;
        };
        let lambda = sc.lambda();
        let lam_sq = Point {
            s: lambda.s.iter().map(|l| -l * l).collect(),
            q: lambda.q.iter().map(|l| jprod(l, l).map(|v| -v)).collect(),
        };

        // predictor
        let aff = solve_newton(prog, &sc, &chol, &rp, &rd, &lam_sq);
        let alpha_aff = max_step(&x, &aff.dx).min(max_step(&z, &aff.dz)).min(1.0);
        let mut xa = x.clone();
        xa.axpy(alpha_aff, &aff.dx);
        let mut za = z.clone();
        za.axpy(alpha_aff, &aff.dz);
        let mu_aff = xa.dot(&za) / nu;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let wdx = sc.apply_winv(&aff.dx);
        let wdz = sc.apply_w(&aff.dz);
        let rc = Point {
            s: (0..ns).map(|i| lam_sq.s[i] + sigma * mu - wdx.s[i] * wdz.s[i]).collect(),
            q: (0..nq)
                .map(|i| {
                    let cross = jprod(&wdx.q[i], &wdz.q[i]);
                    let mut r = lam_sq.q[i];
                    r[0] += sigma * mu;
                    for k in 0..4 {
                        r[k] -= cross[k];
                    }
                    r
                })
                .collect(),
        };
        let dir = solve_newton(prog, &sc, &chol, &rp, &rd, &rc);
        let alpha_max = max_step(&x, &dir.dx).min(max_step(&z, &dir.dz));
        let alpha = (settings.step_fraction * alpha_max).min(1.0);
        if !alpha.is_finite() || alpha <= 1e-14 {
            status = ConeStatus::NumericalError;
            break;
        }
        x.axpy(alpha, &dir.dx);
        z.axpy(alpha, &dir.dz);
        for (yi, dyi) in y.iter_mut().zip(&dir.dy) {
            *yi += alpha * dyi;
        }
        iterations = it + 1;
    }

    if status != ConeStatus::Optimal {
        if let Some((merit, bx, by, [bp, bd, bg])) = best {
            if merit < settings.inaccurate_tol {
                (x, y) = (bx, by);
                (pres, dres, gap) = (bp, bd, bg);
                status = ConeStatus::Inaccurate;
            }
        }
    }

    ConeSolution {
        status,
        primal_obj: c.dot(&x),
        dual_obj: dot(&prog.b, &y),
        x_scalars: x.s,
        x_blocks: x.q,
        y,
        iterations,
        primal_residual: pres,
        dual_residual: dres,
        gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nt_scaling_identity() {
        let x = [2.0, 0.3, -0.5, 0.1];
        let z = [1.5, -0.2, 0.4, 0.9];
        let sc = nt_scaling(&x, &z).unwrap();
        let wz = mat4_vec(&sc.w, &z);
        let winvx = mat4_vec(&sc.winv, &x);
        for i in 0..4 {
            assert!((wz[i] - winvx[i]).abs() < 1e-12);
        }
        let id = mat4_mul(&sc.w, &sc.winv);
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[i][j] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jordan_division_inverts_product() {
        let u = [2.0, 0.5, -0.3, 0.7];
        let v = [0.4, 1.0, 2.0, -1.0];
        let r = jprod(&u, &v);
        let back = jdiv(&u, &r);
        for i in 0..4 {
            assert!((back[i] - v[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn step_to_boundary_lands_on_cone_surface() {
        let u = [1.0, 0.2, 0.0, 0.0];
        let d = [0.0, 1.0, 0.0, 0.0];
        let a = soc_max_step(&u, &d);
        assert!((a - 0.8).abs() < 1e-12);
        assert!(soc_max_step(&u, &[1.0, 0.0, 0.0, 0.0]).is_infinite());
    }

    /// max t s.t. t*I + 0.6 sigma_x = X, X PSD, together with an unrelated
    /// scalar row pinning the scale: minimize trace, X - t*I = 0.6 sigma_x.
    #[test]
    fn solves_small_qubit_program() {
        // min -t s.t. X + t*(-1,0,0,0)... encode: X_t - s = 0 ; X_x = 0.6 ; s + u = 1
        // optimum: s = X_t >= |X_x| = 0.6, maximize -(-s)... keep it simple:
        // minimize X_t subject to X_x = 0.6 and X_y = X_z = 0 -> optimum 0.6
        let prog = ConeProgram {
            b: vec![0.0, 0.6, 0.0, 0.0],
            scalars: vec![ScalarColumn { cost: 0.0, entries: vec![(0, -1.0)] }],
            blocks: vec![ConeBlock { cost: [1.0, 0.0, 0.0, 0.0], groups: vec![0] }],
        };
        let sol = solve(&prog, &SolverSettings::default());
        assert_eq!(sol.status, ConeStatus::Optimal);
        assert!((sol.primal_obj - 0.6).abs() < 1e-8, "{}", sol.primal_obj);
        assert!((sol.dual_obj - 0.6).abs() < 1e-8);
    }
}
