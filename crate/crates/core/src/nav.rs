//! Double-integrator navigation: LQR gain synthesis, inter-robot repulsion and
//! the saturated control law.
//!
//! The fleet dynamics are block diagonal (one 4x4 double-integrator block per
//! robot), so the fleet-wide Riccati equation decomposes into identical per-robot
//! problems. One gain is solved and shared by every robot.

use std::fmt::Write as _;

use nalgebra::{Matrix2, Matrix4, SMatrix, SVector, Vector4};

use crate::domain::{Point, RobotId, WorldConfig};
use crate::error::{invalid, Error, Result};

pub type Matrix4x2 = SMatrix<f64, 4, 2>;
pub type Matrix2x4 = SMatrix<f64, 2, 4>;

/// State order is (x, y, vx, vy).
pub fn double_integrator() -> (Matrix4<f64>, Matrix4x2) {
    let mut a = Matrix4::zeros();
    a[(0, 2)] = 1.0;
    a[(1, 3)] = 1.0;
    let mut b = Matrix4x2::zeros();
    b[(2, 0)] = 1.0;
    b[(3, 1)] = 1.0;
    (a, b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LqrGain {
    pub k: Matrix2x4,
    pub p: Matrix4<f64>,
}

impl LqrGain {
    /// Closed-loop matrix A - BK.
    pub fn closed_loop(&self) -> Matrix4<f64> {
        let (a, b) = double_integrator();
        a - b * self.k
    }

    pub fn from_config(cfg: &WorldConfig) -> Result<Self> {
        let q = Matrix4::from_diagonal(&Vector4::from(cfg.q_diag));
        let r = Matrix2::from_diagonal(&nalgebra::Vector2::from(cfg.r_diag));
        solve_care(&q, &r)
    }
}

/// Frobenius norm of AᵀP + PA − PBR⁻¹BᵀP + Q.
pub fn care_residual(p: &Matrix4<f64>, q: &Matrix4<f64>, r: &Matrix2<f64>) -> f64 {
    let (a, b) = double_integrator();
    let r_inv = r.try_inverse().unwrap_or_else(Matrix2::zeros);
    (a.transpose() * p + p * a - p * b * r_inv * b.transpose() * p + q).norm()
}

const CARE_MAX_ITER: usize = 60;
const STABILITY_MARGIN: f64 = 1e-4;

/// Solves the continuous-time algebraic Riccati equation for the double
/// integrator by Newton–Kleinman iteration. Each step solves a 16x16 Lyapunov
/// system in vectorized form.
pub fn solve_care(q: &Matrix4<f64>, r: &Matrix2<f64>) -> Result<LqrGain> {
    if (q - q.transpose()).norm() > 1e-12 * (1.0 + q.norm()) {
        return Err(invalid("Q must be symmetric"));
    }
    if (r - r.transpose()).norm() > 1e-12 * (1.0 + r.norm()) {
        return Err(invalid("R must be symmetric"));
    }
    if q.iter().any(|v| !v.is_finite()) || r.iter().any(|v| !v.is_finite()) {
        return Err(invalid("Q and R must be finite"));
    }
    if q.symmetric_eigenvalues().min() < -1e-12 * (1.0 + q.norm()) {
        return Err(invalid("Q must be positive semidefinite"));
    }
    let r_chol = r.cholesky().ok_or_else(|| invalid("R must be positive definite"))?;
    let r_inv = r_chol.inverse();

    let (a, b) = double_integrator();
    // Any gain with positive position and velocity terms stabilizes the double integrator.
    let mut k = Matrix2x4::new(1.0, 0.0, 2.0, 0.0, 0.0, 1.0, 0.0, 2.0);
    let mut p = Matrix4::zeros();
    let tol = 1e-8 * q.norm().max(1.0);
    let mut residual = f64::INFINITY;

    for _ in 0..CARE_MAX_ITER {
        let ak = a - b * k;
        let rhs = -(q + k.transpose() * r * k);
        p = solve_lyapunov(&ak, &rhs).ok_or(Error::Solver {
            iterations: CARE_MAX_ITER,
            residual,
        })?;
        p = (p + p.transpose()) * 0.5;
        let k_next = r_inv * b.transpose() * p;
        let step = (k_next - k).norm();
        k = k_next;
        residual = care_residual(&p, q, r);
        if residual <= tol * 1e-3 || step <= 1e-15 * (1.0 + k.norm()) {
            break;
        }
    }

    if !(residual <= tol) {
        return Err(Error::Solver {
            iterations: CARE_MAX_ITER,
            residual,
        });
    }
    let gain = LqrGain { k, p };
    let stable = gain
        .closed_loop()
        .complex_eigenvalues()
        .iter()
        .all(|ev| ev.re < -STABILITY_MARGIN);
    if !stable {
        return Err(Error::Solver {
            iterations: CARE_MAX_ITER,
            residual,
        });
    }
    Ok(gain)
}

/// Solves AᵀX + XA = C for X.
fn solve_lyapunov(a: &Matrix4<f64>, c: &Matrix4<f64>) -> Option<Matrix4<f64>> {
    // Column-major vec: vec(AᵀX) = (I ⊗ Aᵀ) vec X, vec(XA) = (Aᵀ ⊗ I) vec X.
    let at = a.transpose();
    let mut m = SMatrix::<f64, 16, 16>::zeros();
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                // (I ⊗ Aᵀ): block (i, i) holds Aᵀ.
                m[(4 * i + j, 4 * i + k)] += at[(j, k)];
                // (Aᵀ ⊗ I): block (i, k) holds Aᵀ[i, k] · I.
                m[(4 * i + j, 4 * k + j)] += at[(i, k)];
            }
        }
    }
    let rhs = SVector::<f64, 16>::from_column_slice(c.as_slice());
    let x = m.lu().solve(&rhs)?;
    Some(Matrix4::from_column_slice(x.as_slice()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kinematics {
    pub id: RobotId,
    pub position: Point,
    pub velocity: Point,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FleetSnapshot {
    pub robots: Vec<Kinematics>,
}

impl FleetSnapshot {
    pub fn new(robots: Vec<Kinematics>) -> Result<Self> {
        let mut ids: Vec<_> = robots.iter().map(|r| r.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("fleet snapshot has duplicate robot ids"));
        }
        Ok(Self { robots })
    }

    pub fn index_of(&self, id: RobotId) -> Result<usize> {
        self.robots
            .iter()
            .position(|r| r.id == id)
            .ok_or_else(|| invalid(format!("robot {id} not in fleet")))
    }

    pub fn min_pairwise_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.robots.iter().enumerate() {
            for b in &self.robots[i + 1..] {
                best = best.min((a.position - b.position).norm());
            }
        }
        best
    }
}

fn pair_repulsion(pi: &Point, pj: &Point, d_min: f64, k_rep: f64) -> Point {
    let diff = pi - pj;
    let d = diff.norm();
    if d >= d_min {
        return Point::zeros();
    }
    // -dU/dp_i with U = k/2 (1/d - 1/d_min)^2.
    diff * (k_rep * (1.0 / d - 1.0 / d_min) / (d * d * d))
}

fn check_apf_params(d_min: f64, k_rep: f64) -> Result<()> {
    if !(d_min > 0.0) || !(k_rep >= 0.0) {
        return Err(invalid(format!("need d_min > 0 and k_rep >= 0 (got {d_min}, {k_rep})")));
    }
    Ok(())
}

/// Total repulsive potential, each pair counted once.
pub fn apf_potential(fleet: &FleetSnapshot, d_min: f64, k_rep: f64) -> f64 {
    let mut u = 0.0;
    for (i, a) in fleet.robots.iter().enumerate() {
        for b in &fleet.robots[i + 1..] {
            let d = (a.position - b.position).norm();
            if d < d_min {
                let e = 1.0 / d - 1.0 / d_min;
                u += 0.5 * k_rep * e * e;
            }
        }
    }
    u
}

/// Repulsive force −∇U on every robot, in snapshot order.
pub fn apf_forces(fleet: &FleetSnapshot, d_min: f64, k_rep: f64) -> Result<Vec<Point>> {
    check_apf_params(d_min, k_rep)?;
    let n = fleet.robots.len();
    let mut forces = vec![Point::zeros(); n];
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&fleet.robots[i], &fleet.robots[j]);
            if a.position == b.position {
                return Err(Error::DegenerateGeometry {
                    a: a.id,
                    b: b.id,
                    x: a.position.x,
                    y: a.position.y,
                });
            }
            let f = pair_repulsion(&a.position, &b.position, d_min, k_rep);
            forces[i] += f;
            forces[j] -= f;
        }
    }
    Ok(forces)
}

/// Repulsive force on a single robot.
pub fn apf_force(id: RobotId, fleet: &FleetSnapshot, d_min: f64, k_rep: f64) -> Result<Point> {
    check_apf_params(d_min, k_rep)?;
    let i = fleet.index_of(id)?;
    let me = &fleet.robots[i];
    let mut f = Point::zeros();
    for other in fleet.robots.iter().filter(|r| r.id != id) {
        if other.position == me.position {
            return Err(Error::DegenerateGeometry {
                a: me.id,
                b: other.id,
                x: me.position.x,
                y: me.position.y,
            });
        }
        f += pair_repulsion(&me.position, &other.position, d_min, k_rep);
    }
    Ok(f)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NavCommand {
    pub u: Point,
}

fn clamp_components(v: Point, limit: f64) -> Point {
    Point::new(v.x.clamp(-limit, limit), v.y.clamp(-limit, limit))
}

fn cap_norm(v: Point, cap: f64) -> Point {
    let n = v.norm();
    if n > cap {
        v * (cap / n)
    } else {
        v
    }
}

/// Combines the saturated LQR tracking term with a precomputed repulsive force.
///
/// `target` is the desired position (desired velocity is zero); `None` holds the
/// current position and only damps velocity.
pub fn control_with_force(
    state: &Kinematics,
    target: Option<Point>,
    repulsion: Point,
    gain: &LqrGain,
    cfg: &WorldConfig,
) -> NavCommand {
    let goal = target.unwrap_or(state.position);
    let err = Vector4::new(
        state.position.x - goal.x,
        state.position.y - goal.y,
        state.velocity.x,
        state.velocity.y,
    );
    let tracking = -(gain.k * err);
    // The tracking term is saturated on its own first, so that repulsion is never
    // drowned out by a large position error.
    let tracking = clamp_components(Point::new(tracking.x, tracking.y), cfg.u_max);
    let repulsion = cap_norm(repulsion, cfg.apf_force_cap);
    NavCommand {
        u: clamp_components(tracking + repulsion, cfg.u_max),
    }
}

pub fn control(
    id: RobotId,
    fleet: &FleetSnapshot,
    target: Option<Point>,
    gain: &LqrGain,
    cfg: &WorldConfig,
) -> Result<NavCommand> {
    let i = fleet.index_of(id)?;
    let f = apf_force(id, fleet, cfg.d_min, cfg.k_rep)?;
    Ok(control_with_force(&fleet.robots[i], target, f, gain, cfg))
}

/// One semi-implicit Euler step: velocity first (norm-clamped to v_max), then
/// position, clamped to the warehouse with the wall-normal velocity zeroed.
pub fn step_dynamics(fleet: &FleetSnapshot, commands: &[NavCommand], cfg: &WorldConfig) -> FleetSnapshot {
    assert_eq!(fleet.robots.len(), commands.len(), "one command per robot");
    let robots = fleet
        .robots
        .iter()
        .zip(commands)
        .map(|(r, c)| {
            let mut v = cap_norm(r.velocity + c.u * cfg.dt, cfg.v_max);
            let mut p = r.position + v * cfg.dt;
            if p.x < 0.0 || p.x > cfg.width {
                p.x = p.x.clamp(0.0, cfg.width);
                v.x = 0.0;
            }
            if p.y < 0.0 || p.y > cfg.height {
                p.y = p.y.clamp(0.0, cfg.height);
                v.y = 0.0;
            }
            Kinematics {
                id: r.id,
                position: p,
                velocity: v,
            }
        })
        .collect();
    FleetSnapshot { robots }
}

/// One line of a trajectory dump.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub id: RobotId,
    pub position: Point,
    pub velocity: Point,
    pub u: Point,
}

impl TrajectoryRecord {
    pub fn to_line(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{} {}", sig9(self.t), self.id);
        for v in [
            self.position.x,
            self.position.y,
            self.velocity.x,
            self.velocity.y,
            self.u.x,
            self.u.y,
        ] {
            s.push(' ');
            s.push_str(&sig9(v));
        }
        s
    }
}

/// Plain decimal text with 9 significant digits.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (8 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}
