//! Exact Wasserstein-1 distances between finite weighted point sets.
//!
//! Equal-size uniform instances are matching problems and go to an
//! assignment solver; everything else goes to a transportation simplex.
//! Both return an optimal coupling together with optimal dual potentials
//! `phi` (sources) and `psi` (targets) satisfying
//! `phi[i] − psi[j] ≤ ‖xᵢ − yⱼ‖` and `Σ wᵢ phi[i] − Σ vⱼ psi[j] = cost`,
//! normalised so that `phi[0] = 0`.

mod assignment;
mod simplex;

use itertools::Itertools;

use crate::baselines::euclidean;
use crate::{Error, Result, Tensor};

/// Largest `n·m` accepted by [`exact_w1`].
pub const MAX_CELLS: usize = 1_000_000;

/// Weighted point cloud.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalDist {
    points: Tensor,
    weights: Vec<f64>,
}

impl EmpiricalDist {
    pub fn uniform(points: Tensor) -> Self {
        let n = points.rows();
        Self {
            points,
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn weighted(points: Tensor, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != points.rows() {
            return Err(Error::dim(
                "empirical distribution",
                format!("{} weights for {} points", weights.len(), points.rows()),
            ));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::Contract(format!(
                "weights must be nonnegative and sum to 1, sum is {total}"
            )));
        }
        Ok(Self { points, weights })
    }

    pub fn points(&self) -> &Tensor {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    fn is_uniform(&self) -> bool {
        let w0 = 1.0 / self.len() as f64;
        self.weights.iter().all(|&w| w == w0)
    }

    /// Expectation of per-point values.
    pub fn expect(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, f)| w * f).sum()
    }
}

/// A coupling and its transport cost.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    /// Row-major `n × m` matrix of transported mass.
    pub coupling: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    pub cost: f64,
}

impl TransportPlan {
    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.coupling[i * self.cols + j]
    }
}

/// Dual potentials of an optimal plan.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialPair {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

/// Which solver produced a solution and whether its optimal basis was
/// degenerate (in which case the potentials need not be unique).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveInfo {
    pub assignment: bool,
    pub degenerate: bool,
    /// Simplex pivots taken; zero for the assignment solver.
    pub pivots: usize,
}

pub fn cost_matrix(p: &EmpiricalDist, q: &EmpiricalDist) -> Vec<f64> {
    let mut c = Vec::with_capacity(p.len() * q.len());
    for x in p.points.iter_rows() {
        for y in q.points.iter_rows() {
            c.push(euclidean(x, y));
        }
    }
    c
}

fn check_pair(p: &EmpiricalDist, q: &EmpiricalDist) -> Result<()> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::Contract("empty distribution".into()));
    }
    if p.dim() != q.dim() {
        return Err(Error::dim(
            "exact W1",
            format!("dimensions {} and {}", p.dim(), q.dim()),
        ));
    }
    if p.len() * q.len() > MAX_CELLS {
        return Err(Error::Contract(format!(
            "{}×{} instance exceeds {MAX_CELLS} cells",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

/// Optimal plan and potentials.
pub fn exact_w1(p: &EmpiricalDist, q: &EmpiricalDist) -> Result<(TransportPlan, PotentialPair)> {
    exact_w1_info(p, q).map(|(plan, pot, _)| (plan, pot))
}

pub fn exact_w1_info(
    p: &EmpiricalDist,
    q: &EmpiricalDist,
) -> Result<(TransportPlan, PotentialPair, SolveInfo)> {
    check_pair(p, q)?;
    if p.len() == q.len() && p.is_uniform() && q.is_uniform() {
        Ok(solve_assignment(p, q))
    } else {
        solve_simplex(p, q)
    }
}

/// The general solver, also on instances the assignment path would take.
pub fn exact_w1_simplex(
    p: &EmpiricalDist,
    q: &EmpiricalDist,
) -> Result<(TransportPlan, PotentialPair)> {
    check_pair(p, q)?;
    solve_simplex(p, q).map(|(plan, pot, _)| (plan, pot))
}

pub fn w1(p: &EmpiricalDist, q: &EmpiricalDist) -> Result<f64> {
    Ok(exact_w1(p, q)?.0.cost)
}

fn normalise(mut phi: Vec<f64>, mut psi: Vec<f64>) -> PotentialPair {
    let shift = phi[0];
    phi.iter_mut().for_each(|v| *v -= shift);
    psi.iter_mut().for_each(|v| *v -= shift);
    PotentialPair { phi, psi }
}

fn solve_assignment(
    p: &EmpiricalDist,
    q: &EmpiricalDist,
) -> (TransportPlan, PotentialPair, SolveInfo) {
    let n = p.len();
    let c = cost_matrix(p, q);
    let sol = assignment::solve(n, &c);
    let w = 1.0 / n as f64;
    let mut coupling = vec![0.0; n * n];
    let mut total = 0.0;
    for (i, &j) in sol.col_of.iter().enumerate() {
        coupling[i * n + j] = w;
        total += c[i * n + j];
    }
    let plan = TransportPlan {
        coupling,
        rows: n,
        cols: n,
        cost: total * w,
    };
    let psi = sol.v.iter().map(|v| -v).collect();
    // a perfect matching has n positive cells out of 2n − 1 basic ones
    let info = SolveInfo {
        assignment: true,
        degenerate: n > 1,
        pivots: 0,
    };
    (plan, normalise(sol.u, psi), info)
}

fn solve_simplex(
    p: &EmpiricalDist,
    q: &EmpiricalDist,
) -> Result<(TransportPlan, PotentialPair, SolveInfo)> {
    let (n, m) = (p.len(), q.len());
    let c = cost_matrix(p, q);
    let sol = simplex::solve(&p.weights, &q.weights, &c)?;
    let mut coupling = vec![0.0; n * m];
    for &(i, j, f) in &sol.basis {
        coupling[i * m + j] += f;
    }
    let cost = coupling.iter().zip(&c).map(|(f, c)| f * c).sum();
    let plan = TransportPlan {
        coupling,
        rows: n,
        cols: m,
        cost,
    };
    let psi = sol.v.iter().map(|v| -v).collect();
    let info = SolveInfo {
        assignment: false,
        degenerate: sol.degenerate,
        pivots: sol.pivots,
    };
    Ok((plan, normalise(sol.u, psi), info))
}

/// Minimum over all matchings of the mean matched distance.
pub fn brute_force_w1(p: &Tensor, q: &Tensor) -> Result<f64> {
    let n = p.rows();
    if n != q.rows() || n == 0 || n > 8 {
        return Err(Error::Contract(format!(
            "brute force needs equal sizes up to 8, got {n} and {}",
            q.rows()
        )));
    }
    let best = (0..n)
        .permutations(n)
        .map(|perm| {
            perm.iter()
                .enumerate()
                .map(|(i, &j)| euclidean(p.row(i), q.row(j)))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    Ok(best / n as f64)
}

/// Largest violation of `phi[i] − psi[j] ≤ c(i, j)`; nonpositive when feasible.
pub fn dual_violation(p: &EmpiricalDist, q: &EmpiricalDist, pot: &PotentialPair) -> f64 {
    let c = cost_matrix(p, q);
    let m = q.len();
    let mut worst = f64::NEG_INFINITY;
    for (i, phi) in pot.phi.iter().enumerate() {
        for (j, psi) in pot.psi.iter().enumerate() {
            worst = worst.max(phi - psi - c[i * m + j]);
        }
    }
    worst
}

/// `Σ wᵢ phi[i] − Σ vⱼ psi[j]`.
pub fn dual_objective(p: &EmpiricalDist, q: &EmpiricalDist, pot: &PotentialPair) -> f64 {
    p.expect(&pot.phi) - q.expect(&pot.psi)
}

/// The 1-Lipschitz function `z ↦ minⱼ (psi[j] + ‖z − yⱼ‖)` built from target
/// potentials. For optimal potentials it is an optimal dual function: it lies
/// above `phi` on the sources and below `psi` on the targets.
pub fn lipschitz_extension<'a>(
    q: &'a EmpiricalDist,
    psi: &'a [f64],
) -> impl Fn(&[f64]) -> f64 + 'a {
    move |z| {
        q.points
            .iter_rows()
            .zip(psi)
            .map(|(y, s)| s + euclidean(z, y))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prop2Report {
    pub gamma: f64,
    /// `|E_Pn[f* − f**] + E_Pa[f** − f*]|`.
    pub a: f64,
    /// `W(Pn, M) / (1 − γ)`.
    pub b: f64,
    pub holds: bool,
    /// Some optimal basis was degenerate, so other optimal potentials exist.
    pub degenerate: bool,
    pub w_nominal_anomaly: f64,
    pub w_mixture_anomaly: f64,
    pub w_nominal_mixture: f64,
}

/// Mixture `(1 − γ)·Pn + γ·Pa` as a weighted point set on the union.
pub fn mixture(pn: &EmpiricalDist, pa: &EmpiricalDist, gamma: f64) -> Result<EmpiricalDist> {
    let points = Tensor::vstack(&[&pn.points, &pa.points])?;
    let weights = pn
        .weights
        .iter()
        .map(|w| (1.0 - gamma) * w)
        .chain(pa.weights.iter().map(|w| gamma * w))
        .collect();
    let d = EmpiricalDist { points, weights };
    let total: f64 = d.weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Contract(format!("mixture weights sum to {total}")));
    }
    Ok(d)
}

/// Compares how much the optimal critic moves when the nominal sample is
/// contaminated with a `γ` fraction of anomalies against the bound
/// `W(Pn, M) / (1 − γ)`.
///
/// The optimal critics `f*` (for `Pn` against `Pa`) and `f**` (for the
/// mixture `M` against `Pa`) are taken as the Lipschitz extensions of the
/// solvers' target potentials, which makes them genuine 1-Lipschitz optimal
/// dual functions defined everywhere.
pub fn check_prop2_bound(
    pn: &EmpiricalDist,
    pa: &EmpiricalDist,
    gamma: f64,
) -> Result<Prop2Report> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Contract(format!("gamma {gamma} outside (0, 1)")));
    }
    let m = mixture(pn, pa, gamma)?;
    let (plan_star, pot_star, info_star) = exact_w1_info(pn, pa)?;
    let (plan_mix, pot_mix, info_mix) = exact_w1_info(&m, pa)?;
    let (plan_nm, _, _) = exact_w1_info(pn, &m)?;
    let f_star = lipschitz_extension(pa, &pot_star.psi);
    let f_mix = lipschitz_extension(pa, &pot_mix.psi);
    let on = |d: &EmpiricalDist, f: &dyn Fn(&[f64]) -> f64, g: &dyn Fn(&[f64]) -> f64| {
        d.points
            .iter_rows()
            .zip(&d.weights)
            .map(|(x, w)| w * (f(x) - g(x)))
            .sum::<f64>()
    };
    let a = (on(pn, &f_star, &f_mix) + on(pa, &f_mix, &f_star)).abs();
    let b = plan_nm.cost / (1.0 - gamma);
    Ok(Prop2Report {
        gamma,
        a,
        b,
        holds: a <= b + 1e-6,
        degenerate: info_star.degenerate || info_mix.degenerate,
        w_nominal_anomaly: plan_star.cost,
        w_mixture_anomaly: plan_mix.cost,
        w_nominal_mixture: plan_nm.cost,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub w_nominal_anomaly: f64,
    pub w_nominal_estimate: f64,
    pub w_anomaly_estimate: f64,
    /// `|W(Pn, Pa) − W(Pn, P̂a)| − W(Pa, P̂a)`; nonpositive when the bound holds.
    pub slack: f64,
    pub holds: bool,
}

/// `|W(Pn, Pa) − W(Pn, P̂a)| ≤ W(Pa, P̂a)` with oracle distances.
pub fn check_stability_triangle(
    pn: &EmpiricalDist,
    pa: &EmpiricalDist,
    pa_hat: &EmpiricalDist,
) -> Result<StabilityReport> {
    let w_na = w1(pn, pa)?;
    let w_nh = w1(pn, pa_hat)?;
    let w_ah = w1(pa, pa_hat)?;
    let slack = (w_na - w_nh).abs() - w_ah;
    Ok(StabilityReport {
        w_nominal_anomaly: w_na,
        w_nominal_estimate: w_nh,
        w_anomaly_estimate: w_ah,
        slack,
        holds: slack <= 1e-9,
    })
}
