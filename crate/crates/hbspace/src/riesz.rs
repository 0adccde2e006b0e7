//! Riesz-sequence machinery for systems of normalized reproducing kernels:
//! Gram frame bounds, the separation product test, the perturbation
//! stability functional, and the pseudohyperbolic perturbation criterion,
//! with randomized stability experiments.
//!
//! Everything here is finite-section: a system of N kernels yields an N×N
//! Gram matrix whose extreme eigenvalues play the role of Riesz bounds.
//! Verdicts are worded accordingly; no claim about infinite systems is
//! made anywhere.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::kernels::{kernel_eval, kernel_norm_sq_interior, KernelError};
use crate::quad::{integrate_interval, QuadError, QuadratureSpec};
use crate::symbol::SymbolFunction;
use crate::weights::{weight, WeightError};

/// Minimal Gram eigenvalue a baseline system must clear before a
/// perturbation experiment is meaningful.
pub const FINITE_SECTION_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum RieszError {
    #[error("system needs at least one node")]
    EmptySystem,
    #[error("node {re}+{im}i is not in the open upper half-plane")]
    NodeNotInterior { re: f64, im: f64 },
    #[error("kernel at node {index} has vanishing norm")]
    DegenerateKernel { index: usize },
    #[error("numerical Gram asymmetry {asymmetry:.3e} exceeds 1e-10; kernel evaluation is inconsistent")]
    NonHermitian { asymmetry: f64 },
    #[error("plan holds {plan} targets for a system of {system} nodes")]
    PlanMismatch { system: usize, plan: usize },
    #[error("exponent p = {0} outside supported range (1, 2)")]
    BadP(f64),
    #[error("shrinkage exponent gamma = {0} must exceed 1/3")]
    BadGamma(f64),
    #[error("perturbation budget epsilon = {0} must be finite and nonnegative")]
    BadEpsilon(f64),
    #[error("pseudohyperbolic radius {0} outside [0, 1)")]
    BadRadius(f64),
    #[error("experiment needs at least one trial")]
    NoTrials,
    #[error("baseline lambda_min = {lambda_min:.3e} below the finite-section threshold {threshold:.1e}")]
    BaselineUnstable { lambda_min: f64, threshold: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// A finite system of normalized reproducing kernels with its Gram matrix.
///
/// The Gram entry couples kernels through the reproducing identity,
/// `G_{jk} = 2πi·k_{λ_j}(λ_k)/(‖k_{λ_j}‖_b·‖k_{λ_k}‖_b)`, which makes the
/// diagonal algebraically equal to one; it is stored as exactly `1.0`.
/// Construction fails if the computed matrix is Hermitian only to worse
/// than `1e-10`, since the closed forms agree to rounding and a larger
/// defect indicates a kernel evaluation bug.
#[derive(Debug, Clone)]
pub struct KernelSystem {
    symbol: SymbolFunction,
    nodes: Vec<Complex64>,
    norms_sq: Vec<f64>,
    gram: Vec<Complex64>,
}

impl KernelSystem {
    pub fn new(symbol: &SymbolFunction, nodes: &[Complex64]) -> Result<Self, RieszError> {
        if nodes.is_empty() {
            return Err(RieszError::EmptySystem);
        }
        for &z in nodes {
            if !z.re.is_finite() || !z.im.is_finite() || z.im <= 0.0 {
                return Err(RieszError::NodeNotInterior { re: z.re, im: z.im });
            }
        }
        let mut norms_sq = Vec::with_capacity(nodes.len());
        for (index, &z) in nodes.iter().enumerate() {
            let ns = kernel_norm_sq_interior(symbol, z)?;
            if !(ns > 0.0) {
                return Err(RieszError::DegenerateKernel { index });
            }
            norms_sq.push(ns);
        }

        let n = nodes.len();
        let entries: Result<Vec<Complex64>, RieszError> = (0..n)
            .into_par_iter()
            .flat_map_iter(|j| (0..n).map(move |k| (j, k)))
            .map(|(j, k)| {
                if j == k {
                    return Ok(Complex64::new(1.0, 0.0));
                }
                let value = kernel_eval(symbol, nodes[j], nodes[k])?;
                let scale = (norms_sq[j] * norms_sq[k]).sqrt();
                Ok(Complex64::new(0.0, 2.0 * std::f64::consts::PI) * value / scale)
            })
            .collect();
        let gram = entries?;

        let mut asymmetry = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                asymmetry = asymmetry.max((gram[j * n + k] - gram[k * n + j].conj()).norm());
            }
        }
        if asymmetry > 1e-10 {
            return Err(RieszError::NonHermitian { asymmetry });
        }

        Ok(KernelSystem {
            symbol: symbol.clone(),
            nodes: nodes.to_vec(),
            norms_sq,
            gram,
        })
    }

    pub fn symbol(&self) -> &SymbolFunction {
        &self.symbol
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Row-major Gram entry `G_{jk}`.
    pub fn gram(&self, j: usize, k: usize) -> Complex64 {
        self.gram[j * self.nodes.len() + k]
    }

    /// `‖k_{λ_n}‖²_b`.
    pub fn norm_sq(&self, n: usize) -> f64 {
        self.norms_sq[n]
    }
}

/// Extreme Gram eigenvalues, the finite-section surrogate for Riesz
/// bounds.
#[derive(Debug, Clone, Copy)]
pub struct GramBounds {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `lambda_max / lambda_min`; infinite when the section is singular.
    pub condition: f64,
}

/// Eigenvalue range of the Hermitian Gram through the real symmetric
/// embedding `[[Re G, -Im G], [Im G, Re G]]`, whose spectrum is that of
/// `G` with doubled multiplicity.
pub fn gram_bounds(system: &KernelSystem) -> GramBounds {
    let n = system.len();
    let m = nalgebra::DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let (jr, jc) = (r % n, c % n);
        let g = system.gram(jr, jc);
        match (r < n, c < n) {
            (true, true) | (false, false) => g.re,
            (true, false) => -g.im,
            (false, true) => g.im,
        }
    });
    let sym = (&m + m.transpose()) * 0.5;
    let eigen = sym.symmetric_eigenvalues();
    let mut lambda_min = f64::INFINITY;
    let mut lambda_max = f64::NEG_INFINITY;
    for &v in eigen.iter() {
        lambda_min = lambda_min.min(v);
        lambda_max = lambda_max.max(v);
    }
    let condition = if lambda_min > 0.0 {
        lambda_max / lambda_min
    } else {
        f64::INFINITY
    };
    GramBounds {
        lambda_min,
        lambda_max,
        condition,
    }
}

/// Pseudohyperbolic distance `|(a − b)/(a − conj b)|` between points of
/// the upper half-plane.
pub fn pseudohyperbolic_distance(a: Complex64, b: Complex64) -> f64 {
    if a == b {
        return 0.0;
    }
    ((a - b) / (a - b.conj())).norm()
}

/// `inf_k Π_{n≠k} |(λ_n − λ_k)/(λ_n − conj λ_k)|`, the separation product
/// whose positivity characterizes Carleson (interpolating) sequences.
/// Symbol-free. A single node gives the empty product, one.
pub fn carleson_sequence_test(nodes: &[Complex64]) -> Result<f64, RieszError> {
    if nodes.is_empty() {
        return Err(RieszError::EmptySystem);
    }
    for &z in nodes {
        if !z.re.is_finite() || !z.im.is_finite() || z.im <= 0.0 {
            return Err(RieszError::NodeNotInterior { re: z.re, im: z.im });
        }
    }
    let mut inf = f64::INFINITY;
    for (k, &lk) in nodes.iter().enumerate() {
        let mut product = 1.0f64;
        for (n, &ln) in nodes.iter().enumerate() {
            if n != k {
                product *= pseudohyperbolic_distance(ln, lk);
            }
        }
        inf = inf.min(product);
    }
    Ok(inf)
}

/// A perturbation of a kernel system: where each node is allowed to move,
/// and the budget controlling how far.
#[derive(Debug, Clone)]
pub struct PerturbationPlan {
    targets: Vec<Complex64>,
    p: f64,
    gamma: f64,
    epsilon: f64,
}

impl PerturbationPlan {
    pub fn new(
        targets: &[Complex64],
        p: f64,
        gamma: f64,
        epsilon: f64,
    ) -> Result<Self, RieszError> {
        if !(p > 1.0 && p < 2.0) {
            return Err(RieszError::BadP(p));
        }
        if !(gamma > 1.0 / 3.0) || !gamma.is_finite() {
            return Err(RieszError::BadGamma(gamma));
        }
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(RieszError::BadEpsilon(epsilon));
        }
        for &z in targets {
            if !z.re.is_finite() || !z.im.is_finite() || z.im <= 0.0 {
                return Err(RieszError::NodeNotInterior { re: z.re, im: z.im });
            }
        }
        Ok(PerturbationPlan {
            targets: targets.to_vec(),
            p,
            gamma,
            epsilon,
        })
    }

    pub fn targets(&self) -> &[Complex64] {
        &self.targets
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn check_len(&self, system: &KernelSystem) -> Result<(), RieszError> {
        if self.targets.len() != system.len() {
            return Err(RieszError::PlanMismatch {
                system: system.len(),
                plan: self.targets.len(),
            });
        }
        Ok(())
    }
}

/// Stability functional values: the normalized inverse-square weight
/// integrals along the perturbation segments.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub supremum: f64,
    pub per_node: Vec<f64>,
}

/// `sup_n (1/‖k_{λ_n}‖²_b) ∫_{[λ_n, μ_n]} w_p(z)^{-2} |dz|`, with the
/// kernel norm in closed form and the segment integral by adaptive
/// quadrature. Coincident targets contribute zero without quadrature.
/// Segments between interior points stay interior, so every weight
/// evaluation is an interior one.
pub fn stability_functional(
    system: &KernelSystem,
    plan: &PerturbationPlan,
    spec: &QuadratureSpec,
) -> Result<StabilityReport, RieszError> {
    plan.check_len(system)?;
    let mut per_node = Vec::with_capacity(system.len());
    for (n, (&lambda, &mu)) in system.nodes().iter().zip(plan.targets()).enumerate() {
        if lambda == mu {
            per_node.push(0.0);
            continue;
        }
        let dir = mu - lambda;
        let len = dir.norm();
        let symbol = system.symbol();
        let p = plan.p();
        let integrand = |s: f64| -> f64 {
            match weight(symbol, lambda + dir * s, p, 1, spec) {
                Ok(ev) => {
                    if ev.weight > 0.0 {
                        ev.weight.powi(-2)
                    } else {
                        f64::INFINITY
                    }
                }
                Err(_) => f64::NAN,
            }
        };
        let q = integrate_interval(&integrand, 0.0, 1.0, &[], spec)?;
        per_node.push(q.value.max(0.0) * len / system.norm_sq(n));
    }
    let supremum = per_node.iter().fold(0.0f64, |a, &v| a.max(v));
    Ok(StabilityReport { supremum, per_node })
}

/// One node's standing against the pseudohyperbolic perturbation
/// criterion.
#[derive(Debug, Clone, Copy)]
pub struct CriterionEntry {
    /// `|(λ_n − μ_n)/(λ_n − conj μ_n)|`.
    pub distance: f64,
    /// `ε·(1 − |b(λ_n)|)^γ`, the allowed radius at this node.
    pub allowance: f64,
    /// `allowance − distance`.
    pub margin: f64,
    pub within: bool,
}

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub per_node: Vec<CriterionEntry>,
    pub all_within: bool,
}

/// Checks `|(λ_n − μ_n)/(λ_n − conj μ_n)| ≤ ε·(1 − |b(λ_n)|)^γ` node by
/// node. The allowance shrinks where `|b|` approaches one, so nodes near
/// the boundary spectrum tolerate only tiny moves; for symbols with
/// `sup_n |b(λ_n)| < 1` the criterion is a plain pseudohyperbolic
/// ε-ball up to a constant factor.
pub fn corollary73_check(
    system: &KernelSystem,
    plan: &PerturbationPlan,
) -> Result<CriterionReport, RieszError> {
    plan.check_len(system)?;
    let mut per_node = Vec::with_capacity(system.len());
    for (&lambda, &mu) in system.nodes().iter().zip(plan.targets()) {
        let modulus = system.symbol().eval(lambda).map_err(KernelError::from)?.norm();
        let allowance = plan.epsilon() * (1.0 - modulus).powf(plan.gamma());
        let distance = pseudohyperbolic_distance(lambda, mu);
        per_node.push(CriterionEntry {
            distance,
            allowance,
            margin: allowance - distance,
            within: distance <= allowance,
        });
    }
    let all_within = per_node.iter().all(|e| e.within);
    Ok(CriterionReport {
        per_node,
        all_within,
    })
}

/// Point of the upper half-plane at pseudohyperbolic distance `rho` from
/// `center` in Euclidean direction `theta`, found by bisection on the
/// Euclidean radius (the distance is strictly increasing along the ray
/// while it stays under `0.95·Im center`). A requested `rho` beyond the
/// cap saturates at the cap.
pub fn pseudohyperbolic_point(center: Complex64, theta: f64, rho: f64) -> Complex64 {
    if rho <= 0.0 {
        return center;
    }
    let dir = Complex64::from_polar(1.0, theta);
    let cap = 0.95 * center.im;
    if pseudohyperbolic_distance(center, center + dir * cap) <= rho {
        return center + dir * cap;
    }
    let (mut lo, mut hi) = (0.0f64, cap);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if pseudohyperbolic_distance(center, center + dir * mid) < rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    center + dir * (0.5 * (lo + hi))
}

/// Node-wise kernel-norm spread over pseudohyperbolic discs: for each
/// node, `max ‖k_z‖_b / min ‖k_z‖_b` over the disc of radius `r`, sampled
/// at the center and `directions` boundary points. The constants this
/// spread feeds are existential in the underlying theory; thresholds are
/// left to the experiment configuration.
pub fn disc_norm_ratios(
    system: &KernelSystem,
    r: f64,
    directions: usize,
) -> Result<Vec<f64>, RieszError> {
    if !(0.0..1.0).contains(&r) || !r.is_finite() {
        return Err(RieszError::BadRadius(r));
    }
    let mut ratios = Vec::with_capacity(system.len());
    for (n, &lambda) in system.nodes().iter().enumerate() {
        let mut lo = system.norm_sq(n);
        let mut hi = lo;
        for j in 0..directions {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / directions as f64;
            let z = pseudohyperbolic_point(lambda, theta, r);
            let ns = kernel_norm_sq_interior(system.symbol(), z)?;
            lo = lo.min(ns);
            hi = hi.max(ns);
        }
        ratios.push((hi / lo).sqrt());
    }
    Ok(ratios)
}

/// One randomized perturbation trial.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub index: usize,
    /// Fraction of the criterion allowance used as the perturbation
    /// radius; `scale ≤ 1` keeps the trial within the criterion.
    pub scale: f64,
    pub within_criterion: bool,
    pub functional: f64,
    pub min_margin: f64,
    pub bounds: GramBounds,
    /// `lambda_min` stayed at or above half the baseline value.
    pub stable: bool,
}

/// Outcome of a perturbation experiment.
#[derive(Debug, Clone)]
pub struct PerturbationReport {
    pub baseline: GramBounds,
    pub trials: Vec<TrialRecord>,
    /// Calibrated functional threshold: the smallest functional value
    /// among unstable trials, `None` when every trial stayed stable.
    pub epsilon_star: Option<f64>,
    /// Smallest radius scale that lost stability.
    pub boundary_scale: Option<f64>,
    /// Indices of unstable trials whose functional sits strictly below
    /// the calibrated threshold; nonempty means stability is not
    /// monotone in the functional on this family.
    pub findings: Vec<usize>,
}

impl PerturbationReport {
    /// One-line finite-section verdict for reports.
    pub fn verdict(&self) -> String {
        match self.boundary_scale {
            None => format!(
                "finite-section bounds preserved across all {} trials (lambda_min >= {:.3e})",
                self.trials.len(),
                0.5 * self.baseline.lambda_min
            ),
            Some(s) => format!(
                "finite-section stability lost at radius scale {:.3} of the criterion allowance",
                s
            ),
        }
    }
}

/// Randomized stability experiment. Trials ramp the perturbation radius
/// from well inside the criterion allowance to twice that allowance
/// (`scale = 2(t + 1/2)/trials`), move every node by the scaled
/// allowance in a random direction, and rebuild the Gram at the moved
/// nodes. Per-trial generators are seeded as `seed + t·φ64`, so results
/// do not depend on how trials are scheduled across threads.
pub fn perturbation_experiment(
    system: &KernelSystem,
    plan: &PerturbationPlan,
    trials: usize,
    seed: u64,
    spec: &QuadratureSpec,
) -> Result<PerturbationReport, RieszError> {
    plan.check_len(system)?;
    if trials == 0 {
        return Err(RieszError::NoTrials);
    }
    let baseline = gram_bounds(system);
    if baseline.lambda_min <= FINITE_SECTION_THRESHOLD {
        return Err(RieszError::BaselineUnstable {
            lambda_min: baseline.lambda_min,
            threshold: FINITE_SECTION_THRESHOLD,
        });
    }

    let records: Result<Vec<TrialRecord>, RieszError> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed.wrapping_add((t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
            let scale = 2.0 * (t as f64 + 0.5) / trials as f64;
            let mut targets = Vec::with_capacity(system.len());
            for &lambda in system.nodes() {
                let modulus = system
                    .symbol()
                    .eval(lambda)
                    .map_err(KernelError::from)?
                    .norm();
                let allowance = plan.epsilon() * (1.0 - modulus).powf(plan.gamma());
                let theta = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
                targets.push(pseudohyperbolic_point(lambda, theta, scale * allowance));
            }
            let trial_plan =
                PerturbationPlan::new(&targets, plan.p(), plan.gamma(), plan.epsilon())?;
            let functional = stability_functional(system, &trial_plan, spec)?.supremum;
            let criterion = corollary73_check(system, &trial_plan)?;
            let min_margin = criterion
                .per_node
                .iter()
                .map(|e| e.margin)
                .fold(f64::INFINITY, f64::min);
            let moved = KernelSystem::new(system.symbol(), &targets)?;
            let bounds = gram_bounds(&moved);
            Ok(TrialRecord {
                index: t,
                scale,
                within_criterion: criterion.all_within,
                functional,
                min_margin,
                bounds,
                stable: bounds.lambda_min >= 0.5 * baseline.lambda_min,
            })
        })
        .collect();
    let trials = records?;

    let epsilon_star = trials
        .iter()
        .filter(|r| !r.stable)
        .map(|r| r.functional)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.min(v)))
        });
    let boundary_scale = trials
        .iter()
        .filter(|r| !r.stable)
        .map(|r| r.scale)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.min(v)))
        });
    let findings = match epsilon_star {
        None => Vec::new(),
        Some(star) => trials
            .iter()
            .filter(|r| !r.stable && r.functional < star)
            .map(|r| r.index)
            .collect(),
    };

    Ok(PerturbationReport {
        baseline,
        trials,
        epsilon_star,
        boundary_scale,
        findings,
    })
}
