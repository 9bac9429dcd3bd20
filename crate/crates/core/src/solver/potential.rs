//! Concave potential for perfect power capture (`Δ = 0`, no CSI).
//!
//! In log-probabilities `t_i = ln p_i`,
//!
//! `G(t) = Σ_i ρ_i t_i + ∫_0^1 (∏_j (1 - p_j x) - 1) / x dx`
//!
//! has gradient `ρ_i - r_i(p)` and is concave, so its maximizer over `t <= 0`
//! is the unique equilibrium. Every integrand here is a polynomial in `x` of
//! degree below `n`, so a Gauss–Legendre rule with `n/2 + 1` nodes is exact.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{Classification, EquilibriumResult, RESIDUAL_TOL};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Step in `t` for the finite-difference Hessian.
pub const HESSIAN_STEP: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct CapturePotential {
    demands: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl CapturePotential {
    pub fn new(demands: &[f64]) -> Self {
        let (x, w) = gauss_legendre(demands.len() / 2 + 8);
        // Map [-1, 1] onto [0, 1].
        let nodes = x.iter().map(|x| 0.5 * (x + 1.0)).collect();
        let weights = w.iter().map(|w| 0.5 * w).collect();
        CapturePotential { demands: demands.to_vec(), nodes, weights }
    }

    fn probs(t: &[f64]) -> Vec<f64> {
        t.iter().map(|t| t.exp()).collect()
    }

    /// `G(t)`.
    pub fn value(&self, t: &[f64]) -> f64 {
        let p = Self::probs(t);
        let linear: f64 = self.demands.iter().zip(t).map(|(d, t)| if *d == 0.0 { 0.0 } else { d * t }).sum();
        let integral: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| {
                let log_prod: f64 = p.iter().map(|p| (-p * x).ln_1p()).sum();
                w * log_prod.exp_m1() / x
            })
            .sum();
        linear + integral
    }

    /// Throughputs `r_i = p_i ∫_0^1 ∏_{j≠i} (1 - p_j x) dx`.
    pub fn throughput(&self, t: &[f64]) -> Vec<f64> {
        let p = Self::probs(t);
        (0..p.len())
            .map(|i| {
                let s: f64 = self
                    .nodes
                    .iter()
                    .zip(&self.weights)
                    .map(|(&x, &w)| w * p.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, q)| 1.0 - q * x).product::<f64>())
                    .sum();
                p[i] * s
            })
            .collect()
    }

    /// `∇G = ρ - r(p)`.
    pub fn gradient(&self, t: &[f64]) -> Vec<f64> {
        self.throughput(t).iter().zip(&self.demands).map(|(r, d)| d - r).collect()
    }

    /// Exact Hessian: `-r_i` on the diagonal, `p_i p_j ∫ x ∏_{k≠i,j} (1 - p_k x) dx` off it.
    pub fn hessian(&self, t: &[f64]) -> DMatrix<f64> {
        let p = Self::probs(t);
        let n = p.len();
        let r = self.throughput(t);
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                return -r[i];
            }
            let s: f64 = self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(&x, &w)| {
                    let rest: f64 =
                        p.iter().enumerate().filter(|&(k, _)| k != i && k != j).map(|(_, q)| 1.0 - q * x).product();
                    w * x * rest
                })
                .sum();
            p[i] * p[j] * s
        })
    }

    /// Central-difference Hessian of `G` with step `h`.
    pub fn numerical_hessian(&self, t: &[f64], h: f64) -> DMatrix<f64> {
        let n = t.len();
        let at = |di: usize, si: f64, dj: usize, sj: f64| {
            let mut u = t.to_vec();
            u[di] += si * h;
            u[dj] += sj * h;
            self.value(&u)
        };
        let centre = self.value(t);
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = (at(i, 1.0, i, 0.0) - 2.0 * centre + at(i, -1.0, i, 0.0)) / (h * h);
            for j in 0..i {
                let v = (at(i, 1.0, j, 1.0) - at(i, 1.0, j, -1.0) - at(i, -1.0, j, 1.0) + at(i, -1.0, j, -1.0))
                    / (4.0 * h * h);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    /// Largest eigenvalue of the finite-difference Hessian at probabilities `p`.
    pub fn max_hessian_eigenvalue(&self, p: &[f64]) -> f64 {
        let t: Vec<f64> = p.iter().map(|p| p.ln()).collect();
        let h = self.numerical_hessian(&t, HESSIAN_STEP);
        SymmetricEigen::new(h).eigenvalues.max()
    }
}

/// Unique equilibrium under perfect power capture (`Δ = 0`, no CSI).
///
/// Projected gradient ascent on the potential, then Newton steps restricted
/// to the coordinates off the `t = 0` face. Feasible iff `Σ ρ_i <= 1`.
pub fn solve_perfect_capture(demands: &[f64]) -> Result<EquilibriumResult> {
    super::check_demands(demands)?;
    let total: f64 = demands.iter().sum();
    if total > 1.0 + 1e-12 {
        return Err(Error::InfeasibleDemands(format!("demands sum to {total} > 1")));
    }
    let active: Vec<usize> = (0..demands.len()).filter(|&i| demands[i] > 0.0).collect();
    let mut p_full = vec![0.0; demands.len()];
    if active.is_empty() {
        return Ok(EquilibriumResult {
            points: vec![p_full],
            residuals: vec![0.0],
            classification: vec![Classification::Unique],
            feasible: true,
            iterations: 0,
        });
    }

    let rho: Vec<f64> = active.iter().map(|&i| demands[i]).collect();
    let pot = CapturePotential::new(&rho);
    let mut t: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let project = |t: &mut [f64]| t.iter_mut().for_each(|x| *x = x.min(0.0));
    // A coordinate pinned at p = 1 that still wants to grow is held fixed.
    let free = |t: &[f64], g: &[f64]| -> Vec<bool> { t.iter().zip(g).map(|(t, g)| *t < 0.0 || *g < 0.0).collect() };
    let norm = |g: &[f64], free: &[bool]| g.iter().zip(free).filter(|(_, f)| **f).map(|(g, _)| g.abs()).fold(0.0, f64::max);

    let max_iter = 10_000;
    let mut iterations = 0;
    let mut g = pot.gradient(&t);
    loop {
        let fr = free(&t, &g);
        let gnorm = norm(&g, &fr);
        if gnorm <= 1e-14 || iterations >= max_iter {
            break;
        }
        iterations += 1;

        // Newton on the free block, falling back to the gradient.
        let idx: Vec<usize> = (0..t.len()).filter(|&i| fr[i]).collect();
        let hess = pot.hessian(&t);
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |a, b| -hess[(idx[a], idx[b])]);
        let rhs = DVector::from_iterator(idx.len(), idx.iter().map(|&i| g[i]));
        let mut dir = vec![0.0; t.len()];
        match sub.cholesky() {
            Some(ch) => {
                let d = ch.solve(&rhs);
                for (a, &i) in idx.iter().enumerate() {
                    dir[i] = d[a];
                }
            }
            None => {
                for &i in &idx {
                    dir[i] = g[i];
                }
            }
        }
        if dir.iter().zip(&g).map(|(d, g)| d * g).sum::<f64>() <= 0.0 {
            dir = g.iter().zip(&fr).map(|(g, f)| if *f { *g } else { 0.0 }).collect();
        }

        let base = pot.value(&t);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial: Vec<f64> = t.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
            project(&mut trial);
            let gain: f64 = trial.iter().zip(&t).zip(&g).map(|((a, b), g)| (a - b) * g).sum();
            let g_trial = pot.gradient(&trial);
            let rises = pot.value(&trial) >= base + 1e-4 * gain;
            // Near the optimum G is flat to rounding; accept steps that shrink the gradient.
            let shrinks = norm(&g_trial, &free(&trial, &g_trial)) < gnorm;
            if rises || shrinks {
                t = trial;
                g = g_trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    let p: Vec<f64> = t.iter().map(|t| t.exp()).collect();
    for (&i, &pi) in active.iter().zip(&p) {
        p_full[i] = pi;
    }
    let r = pot.throughput(&t);
    let res = r.iter().zip(&rho).map(|(r, d)| (r - d).abs()).fold(0.0, f64::max);
    if res > RESIDUAL_TOL {
        return Err(Error::NonConvergence { iterations, residual: res });
    }
    Ok(EquilibriumResult {
        points: vec![p_full],
        residuals: vec![res],
        classification: vec![Classification::Unique],
        feasible: true,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::power_nocsi_throughput;
    use crate::models::Guard;
    use proptest::prelude::*;

    #[test]
    fn gradient_matches_closed_form_throughput() {
        let p = [0.3, 0.7, 0.1, 0.9];
        let t: Vec<f64> = p.iter().map(|p: &f64| p.ln()).collect();
        let pot = CapturePotential::new(&[0.1; 4]);
        let r = power_nocsi_throughput(&p, Guard::Finite(0.0));
        for (a, b) in pot.throughput(&t).iter().zip(&r) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn analytic_and_numerical_hessians_agree() {
        let p = [0.2, 0.5, 0.8];
        let t: Vec<f64> = p.iter().map(|p: &f64| p.ln()).collect();
        let pot = CapturePotential::new(&[0.1, 0.2, 0.05]);
        let a = pot.hessian(&t);
        let b = pot.numerical_hessian(&t, HESSIAN_STEP);
        assert!((a - b).abs().max() < 1e-6);
    }

    #[test]
    fn boundary_demands_reach_the_corner() {
        let res = solve_perfect_capture(&[0.5, 0.5]).unwrap();
        for p in &res.points[0] {
            assert!((p - 1.0).abs() < 1e-6, "{:?}", res.points);
        }
        let res = solve_perfect_capture(&[0.2, 0.3, 0.4]).unwrap();
        assert!(res.max_residual() < 1e-10);
        assert!(solve_perfect_capture(&[0.5, 0.5001]).unwrap_err().is_infeasible());
    }

    #[test]
    fn zero_demand_nodes_stay_silent() {
        let res = solve_perfect_capture(&[0.0, 0.3, 0.0, 0.2]).unwrap();
        let p = &res.points[0];
        assert_eq!(p[0], 0.0);
        assert_eq!(p[2], 0.0);
        let r = power_nocsi_throughput(p, Guard::Finite(0.0));
        assert!((r[1] - 0.3).abs() < 1e-9 && (r[3] - 0.2).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn potential_is_concave(p in proptest::collection::vec(0.01f64..0.99, 2..8)) {
            let pot = CapturePotential::new(&vec![0.1; p.len()]);
            prop_assert!(pot.max_hessian_eigenvalue(&p) < 1e-6);
            // Along the all-ones direction.
            let t: Vec<f64> = p.iter().map(|p| p.ln()).collect();
            let h = pot.hessian(&t);
            let ones = DVector::from_element(p.len(), 1.0);
            prop_assert!((ones.transpose() * &h * &ones)[(0, 0)] < 0.0);
        }

        #[test]
        fn solution_hits_demands(p in proptest::collection::vec(0.01f64..0.99, 2..7)) {
            let demands = power_nocsi_throughput(&p, Guard::Finite(0.0));
            let res = solve_perfect_capture(&demands).unwrap();
            prop_assert!(res.max_residual() <= 1e-10);
            for (a, b) in res.points[0].iter().zip(&p) {
                prop_assert!((a - b).abs() < 1e-6);
            }
        }
    }
}
