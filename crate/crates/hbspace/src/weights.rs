//! Bernstein weights w_{p,n} built from two L^q norms: the q-norm of the
//! (n+1)-st kernel power and the ρ-weighted q-norm of the rewritten boundary
//! kernel. The min rule and its edge conventions follow the weight's
//! definition: a norm of zero pushes its branch to +∞ (the other branch
//! decides), an infinite norm at a real point forces weight zero.

use crate::kernels::{self, KernelError};
use crate::quad::{self, QuadError, QuadratureSpec, TailBound};
use crate::symbol::SymbolFunction;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("exponent p = {0} outside supported range (1, 2]")]
    BadP(f64),
    #[error("conjugate exponent q = {0} must exceed 1")]
    BadQ(f64),
    #[error("derivative order n = {0} outside supported range for this weight")]
    BadOrder(u32),
    #[error("evaluation point {re}+{im}i lies in the open lower half-plane")]
    LowerHalfPlane { re: f64, im: f64 },
    #[error("plateau modulus ε = {0} outside (0, 1)")]
    BadEpsilon(f64),
    #[error("height y = {0} must be positive")]
    BadHeight(f64),
    #[error("height probe needs at least two distinct heights and one position")]
    ProbeGrid,
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// One weight evaluation with its two constituent norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightEvaluation {
    pub point: Complex64,
    pub p: f64,
    pub q: f64,
    pub order: u32,
    /// ‖(k^b_z)^{n+1}‖_q
    pub kernel_norm: f64,
    /// ‖ρ^{1/q}·𝔎^ρ_{z,n}‖_q
    pub rho_norm: f64,
    pub weight: f64,
    pub quadrature_error: f64,
    pub panels: usize,
}

/// An L^q norm obtained by quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LqNorm {
    pub norm: f64,
    pub error: f64,
    pub panels: usize,
}

pub fn conjugate_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

/// Closed-form slope of w_p(iy) = K_q^{−p/(q(p+1))}·y for the zero symbol
/// at p = 2, with K_q = √π·Γ(q−1/2)/Γ(q). Frozen from an independent
/// evaluation; the quadrature path must reproduce it.
pub const ZERO_SYMBOL_SLOPE_P2: f64 = 0.860_254_013_828_099_6;
/// Same slope at p = 3/2.
pub const ZERO_SYMBOL_SLOPE_P15: f64 = 0.967_751_319_002_385_4;

fn check_point(z: Complex64) -> Result<(), WeightError> {
    if !(z.re.is_finite() && z.im.is_finite()) || z.im < 0.0 {
        return Err(WeightError::LowerHalfPlane { re: z.re, im: z.im });
    }
    Ok(())
}

/// ‖(k^b_z)^{n+1}‖_q by line quadrature. The kernel bound
/// |k_z(t)| ≤ 2/|t − conj z| certifies the |t|^{−(n+1)q} tail.
pub fn kernel_lq_norm(
    b: &SymbolFunction,
    z: Complex64,
    n: u32,
    q: f64,
    spec: &QuadratureSpec,
) -> Result<LqNorm, WeightError> {
    check_point(z)?;
    if !(q.is_finite() && q > 1.0) {
        return Err(WeightError::BadQ(q));
    }
    if n > kernels::MAX_KERNEL_ORDER {
        return Err(WeightError::BadOrder(n));
    }
    let s = (n + 1) as f64 * q;
    let bz = b.eval(z).map_err(KernelError::from)?;
    let zc = z.conj();
    let mut edges = b.singular_boundary_points();
    edges.push(z.re);
    let tail = TailBound {
        coefficient: 4.0f64.powf(s),
        exponent: s,
        valid_from: (2.0 * z.norm()).max(1.0),
    };
    let integrand = move |t: f64| -> f64 {
        match b.eval(Complex64::new(t, 0.0)) {
            Ok(bt) => {
                let k = (Complex64::new(1.0, 0.0) - bz.conj() * bt)
                    / (Complex64::new(t, 0.0) - zc);
                k.norm().powf(s)
            }
            Err(_) => f64::NAN,
        }
    };
    let qd = quad::integrate_line(&integrand, &edges, tail, spec)?;
    Ok(LqNorm {
        norm: qd.value.max(0.0).powf(1.0 / q),
        error: qd.error,
        panels: qd.panels,
    })
}

/// ‖ρ^{1/q}·𝔎^ρ_{z,n}‖_q. ρ vanishes off the nontrivial outer pieces, so the
/// integral is a finite sum over intervals with constant ρ. An inner or
/// piece-free symbol yields exactly zero.
pub fn rho_frak_lq_norm(
    b: &SymbolFunction,
    z: Complex64,
    n: u32,
    q: f64,
    spec: &QuadratureSpec,
) -> Result<LqNorm, WeightError> {
    check_point(z)?;
    if !(q.is_finite() && q > 1.0) {
        return Err(WeightError::BadQ(q));
    }
    if n > kernels::MAX_KERNEL_ORDER {
        return Err(WeightError::BadOrder(n));
    }
    let mut total = 0.0;
    let mut error = 0.0;
    let mut panels = 0;
    for piece in b.outer_pieces() {
        let density = 1.0 - piece.boundary_modulus_sq();
        let qd = quad::integrate_interval(
            &|t: f64| match kernels::frak_kernel(b, z, n, t) {
                Ok(v) => density * v.norm().powf(q),
                Err(_) => f64::NAN,
            },
            piece.lower,
            piece.upper,
            &[],
            spec,
        )?;
        total += qd.value;
        error += qd.error;
        panels += qd.panels;
    }
    Ok(LqNorm {
        norm: total.max(0.0).powf(1.0 / q),
        error,
        panels,
    })
}

/// w_{p,n}(z) = min(norm1^{−pn/(pn+1)}, norm2^{−pn/(pn+1)}). At real points
/// whose singularity sum diverges both norms are +∞ and the weight is zero
/// without any quadrature.
pub fn weight(
    b: &SymbolFunction,
    z: Complex64,
    p: f64,
    n: u32,
    spec: &QuadratureSpec,
) -> Result<WeightEvaluation, WeightError> {
    if !(p.is_finite() && p > 1.0 && p <= 2.0) {
        return Err(WeightError::BadP(p));
    }
    if n == 0 || n > kernels::MAX_KERNEL_ORDER {
        return Err(WeightError::BadOrder(n));
    }
    check_point(z)?;
    let q = conjugate_exponent(p);
    if z.im == 0.0 && !b.in_e_n(z.re, 2) {
        return Ok(WeightEvaluation {
            point: z,
            p,
            q,
            order: n,
            kernel_norm: f64::INFINITY,
            rho_norm: f64::INFINITY,
            weight: 0.0,
            quadrature_error: 0.0,
            panels: 0,
        });
    }
    let norm1 = kernel_lq_norm(b, z, n, q, spec)?;
    let norm2 = rho_frak_lq_norm(b, z, n, q, spec)?;
    let e = p * n as f64 / (p * n as f64 + 1.0);
    // 0^{−e} = +∞ and ∞^{−e} = 0 under IEEE semantics, which is exactly the
    // paper's min-rule convention.
    let w = norm1.norm.powf(-e).min(norm2.norm.powf(-e));
    Ok(WeightEvaluation {
        point: z,
        p,
        q,
        order: n,
        kernel_norm: norm1.norm,
        rho_norm: norm2.norm,
        weight: w,
        quadrature_error: norm1.error + norm2.error,
        panels: norm1.panels + norm2.panels,
    })
}

/// The quantity bounded below by a positive constant in the weight's
/// lower-bound lemma: w_{p,n}(z)·(1 − |b(z)|)^{pn/(q(pn+1))}/(Im z)^n.
pub fn weight_lower_bound_ratio(
    b: &SymbolFunction,
    z: Complex64,
    p: f64,
    n: u32,
    spec: &QuadratureSpec,
) -> Result<f64, WeightError> {
    if z.im <= 0.0 {
        return Err(WeightError::LowerHalfPlane { re: z.re, im: z.im });
    }
    let ev = weight(b, z, p, n, spec)?;
    let modulus = b.eval(z).map_err(KernelError::from)?.norm();
    let expo = p * n as f64 / (ev.q * (p * n as f64 + 1.0));
    Ok(ev.weight * (1.0 - modulus).powf(expo) / z.im.powi(n as i32))
}

/// The two-norm ratio of the flat-plateau example:
/// ‖ρ^{1/q}·𝔎^ρ_{iy,1}‖_q / ‖(k^b_{iy})²‖_q for |b| = ε on [−1, 1].
/// Its supremum in y grows without bound as ε → 1−.
pub fn example42_ratio(
    eps: f64,
    y: f64,
    q: f64,
    spec: &QuadratureSpec,
) -> Result<f64, WeightError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(WeightError::BadEpsilon(eps));
    }
    if !(y.is_finite() && y > 0.0) {
        return Err(WeightError::BadHeight(y));
    }
    let b = SymbolFunction::plateau(-1.0, 1.0, eps).expect("plateau data is valid");
    let z = Complex64::new(0.0, y);
    let norm1 = kernel_lq_norm(&b, z, 1, q, spec)?;
    let norm2 = rho_frak_lq_norm(&b, z, 1, q, spec)?;
    Ok(norm2.norm / norm1.norm)
}

/// Empirical probe of the open height-monotonicity question: whether
/// ‖k^b_{x+iy₁}‖_q ≤ C·‖k^b_{x+iy₂}‖_q whenever y₂ ≤ y₁. Reports the worst
/// observed constant over the grid; asserts nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightMonotonicityProbe {
    /// max over x and y₂ ≤ y₁ of ‖k_{x+iy₁}‖_q/‖k_{x+iy₂}‖_q
    pub worst_ratio: f64,
    pub worst_x: f64,
    pub worst_heights: (f64, f64),
    pub evaluations: usize,
}

pub fn kernel_norm_height_probe(
    b: &SymbolFunction,
    positions: &[f64],
    heights: &[f64],
    q: f64,
    spec: &QuadratureSpec,
) -> Result<HeightMonotonicityProbe, WeightError> {
    if positions.is_empty() || heights.len() < 2 {
        return Err(WeightError::ProbeGrid);
    }
    let mut hs = heights.to_vec();
    hs.sort_by(f64::total_cmp);
    hs.dedup();
    if hs.len() < 2 || hs[0] <= 0.0 {
        return Err(WeightError::ProbeGrid);
    }
    let mut probe = HeightMonotonicityProbe {
        worst_ratio: 0.0,
        worst_x: positions[0],
        worst_heights: (hs[0], hs[0]),
        evaluations: 0,
    };
    for &x in positions {
        let norms = hs
            .iter()
            .map(|&y| kernel_lq_norm(b, Complex64::new(x, y), 0, q, spec).map(|n| n.norm))
            .collect::<Result<Vec<_>, _>>()?;
        probe.evaluations += norms.len();
        for i in 0..hs.len() {
            for j in 0..i {
                // hs[i] ≥ hs[j]: monotonicity would keep this ratio bounded
                let ratio = norms[i] / norms[j];
                if ratio > probe.worst_ratio {
                    probe.worst_ratio = ratio;
                    probe.worst_x = x;
                    probe.worst_heights = (hs[j], hs[i]);
                }
            }
        }
    }
    Ok(probe)
}
