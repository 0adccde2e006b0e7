//! Reproducing kernels of H(b) and their relatives: the order-n kernels, the
//! boundary ρ-kernels, finite kernel combinations with their Gram algebra,
//! companion functions on the ρ-weighted boundary, and the integral
//! representation of derivatives that ties all of them together.
//!
//! Conventions: k_ω(z) = (1 − conj(b(ω))·b(z))/(z − conj ω), and the
//! reproducing identity reads ⟨f, k_ω⟩_b = 2πi·f(ω).

use crate::quad::{
    self, QuadError, Quadrature, QuadratureSpec, TailBound,
};
use crate::symbol::{self, EvalError, SymbolFunction};
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

/// Largest order n for the order-n kernel families (the symbol jets carry
/// derivatives up to 4, and the representation needs b-jets at order n).
pub const MAX_KERNEL_ORDER: u32 = 3;

const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
const C_ONE: Complex64 = Complex64::new(1.0, 0.0);
const TWO_PI_I: Complex64 = Complex64::new(0.0, 2.0 * PI);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("kernel node {re}+{im}i must lie in the open upper half-plane")]
    NodeNotInterior { re: f64, im: f64 },
    #[error("combination needs one coefficient per node ({nodes} nodes, {coefficients} coefficients)")]
    LengthMismatch { nodes: usize, coefficients: usize },
    #[error("combination must contain at least one kernel")]
    Empty,
    #[error("operands are built over different symbols")]
    SymbolMismatch,
    #[error("kernel order {order} outside supported range 0..={max}", max = MAX_KERNEL_ORDER)]
    Order { order: u32 },
    #[error("boundary point {x} fails the finiteness condition for E_{needed}")]
    BoundaryRegularity { x: f64, needed: u32 },
    #[error("non-finite coefficient or node in combination")]
    NonFinite,
}

fn cpow(v: Complex64, m: u32) -> Complex64 {
    let mut out = C_ONE;
    for _ in 0..m {
        out *= v;
    }
    out
}

/// k^b_ω(z). Both points may sit on the closed upper half-plane wherever the
/// symbol is legal; the boundary-diagonal case z = ω uses the limit value
/// −conj(b(ω))·b'(ω).
pub fn kernel_eval(
    b: &SymbolFunction,
    omega: Complex64,
    z: Complex64,
) -> Result<Complex64, KernelError> {
    let bw = b.eval(omega)?;
    let den = z - omega.conj();
    if den == C_ZERO {
        let db = b.derivative(z, 1)?;
        return Ok(-bw.conj() * db);
    }
    let bz = b.eval(z)?;
    Ok((C_ONE - bw.conj() * bz) / den)
}

/// ‖k^b_z‖²_b = π(1 − |b(z)|²)/Im z for interior z.
pub fn kernel_norm_sq_interior(
    b: &SymbolFunction,
    z: Complex64,
) -> Result<f64, KernelError> {
    if z.im <= 0.0 {
        return Err(KernelError::NodeNotInterior { re: z.re, im: z.im });
    }
    let m = b.eval(z)?.norm_sqr();
    Ok(PI * (1.0 - m) / z.im)
}

/// ‖k^b_x‖²_b = 2π|b'(x)| at boundary points carrying the second-order
/// finiteness condition.
pub fn kernel_norm_sq_boundary(b: &SymbolFunction, x: f64) -> Result<f64, KernelError> {
    if !b.in_e_n(x, 2) {
        return Err(KernelError::BoundaryRegularity { x, needed: 2 });
    }
    Ok(2.0 * PI * b.angular_derivative_modulus(x))
}

fn check_order(n: u32) -> Result<(), KernelError> {
    if n > MAX_KERNEL_ORDER {
        return Err(KernelError::Order { order: n });
    }
    Ok(())
}

/// Order-n kernel
/// k^b_{z0,n}(z) = (1 − b(z)·Σ_{j≤n} conj(b^(j)(z0))/j!·(z−conj z0)^j)/(z−conj z0)^{n+1}.
pub fn higher_kernel(
    b: &SymbolFunction,
    z0: Complex64,
    n: u32,
    z: Complex64,
) -> Result<Complex64, KernelError> {
    check_order(n)?;
    let jet = b.jet(z0, n as usize)?;
    let bz = b.eval(z)?;
    let d = z - z0.conj();
    let mut sum = C_ZERO;
    let mut dj = C_ONE;
    let mut fact = 1.0;
    for (j, bj) in jet.iter().enumerate().take(n as usize + 1) {
        if j > 0 {
            dj *= d;
            fact *= j as f64;
        }
        sum += bj.conj() / fact * dj;
    }
    Ok((C_ONE - bz * sum) / cpow(d, n + 1))
}

/// Boundary companion kernel
/// k^ρ_{z0,n}(t) = (Σ_{j≤n} conj(b^(j)(z0))/j!·(t−conj z0)^j)/(t−conj z0)^{n+1}.
pub fn rho_kernel(
    b: &SymbolFunction,
    z0: Complex64,
    n: u32,
    t: f64,
) -> Result<Complex64, KernelError> {
    check_order(n)?;
    let jet = b.jet(z0, n as usize)?;
    let d = Complex64::new(t, 0.0) - z0.conj();
    let mut sum = C_ZERO;
    let mut dj = C_ONE;
    let mut fact = 1.0;
    for (j, bj) in jet.iter().enumerate().take(n as usize + 1) {
        if j > 0 {
            dj *= d;
            fact *= j as f64;
        }
        sum += bj.conj() / fact * dj;
    }
    Ok(sum / cpow(d, n + 1))
}

/// Rewritten boundary kernel
/// 𝔎^ρ_{z0,n}(t) = conj(b(z0))·Σ_{j≤n} C(n+1, j+1)(−1)^j conj(b(z0))^j b(t)^j
///                 /(t−conj z0)^{n+1},
/// which differs from k^ρ_{z0,n} by an element of the Hardy space and gives
/// the representation below its second integrand.
pub fn frak_kernel(
    b: &SymbolFunction,
    z0: Complex64,
    n: u32,
    t: f64,
) -> Result<Complex64, KernelError> {
    check_order(n)?;
    let bw = b.eval(z0)?.conj();
    let bt = b.eval(Complex64::new(t, 0.0))?;
    let d = Complex64::new(t, 0.0) - z0.conj();
    let mut sum = C_ZERO;
    let mut pw = C_ONE; // (conj b(z0)·b(t))^j
    let mut sign = 1.0;
    for j in 0..=n as usize {
        sum += symbol::binomial(n as usize + 1, j + 1) * sign * pw;
        pw *= bw * bt;
        sign = -sign;
    }
    Ok(bw * sum / cpow(d, n + 1))
}

/// Relative residual of the power recurrence
/// (k_{z0})^{ℓ+1} = (1−conj(b(z0))b)^ℓ k_{z0,ℓ} + b·Σ_{j=1}^ℓ conj(a_j)(1−conj(b(z0))b)^{j−1}(k_{z0})^{ℓ+1−j}
/// at the point z, with a_j = b^(j)(z0)/j!.
pub fn recurrence_residual(
    b: &SymbolFunction,
    z0: Complex64,
    ell: u32,
    z: Complex64,
) -> Result<f64, KernelError> {
    check_order(ell)?;
    let jet = b.jet(z0, ell as usize)?;
    let bz = b.eval(z)?;
    let k = kernel_eval(b, z0, z)?;
    let u = C_ONE - jet[0].conj() * bz;
    let lhs = cpow(k, ell + 1);
    let mut rhs = cpow(u, ell) * higher_kernel(b, z0, ell, z)?;
    let mut fact = 1.0;
    for j in 1..=ell {
        fact *= j as f64;
        let aj = jet[j as usize] / fact;
        rhs += bz * aj.conj() * cpow(u, j - 1) * cpow(k, ell + 1 - j);
    }
    let scale = lhs.norm().max(rhs.norm()).max(1e-300);
    Ok((lhs - rhs).norm() / scale)
}

/// Finite combination f = Σ c_j·k^b_{λ_j} over interior nodes. The symbol is
/// cloned in so the combination can outlive its source and so mixed-symbol
/// arithmetic is detectable.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCombination {
    symbol: SymbolFunction,
    nodes: Vec<Complex64>,
    coefficients: Vec<Complex64>,
    /// b(λ_j), cached: every pointwise evaluation needs them.
    node_values: Vec<Complex64>,
}

/// Three-way norm identity ‖f‖²_b = ‖f‖²_2 + ‖g‖²_ρ with the two right-hand
/// terms obtained by quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormDecomposition {
    pub space_norm_sq: f64,
    pub l2_norm_sq: f64,
    pub rho_norm_sq: f64,
    pub defect_rel: f64,
    pub quadrature_error: f64,
    pub panels: usize,
}

/// Derivative reconstructed from boundary integrals against the exact jet
/// value.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationReport {
    pub point: Complex64,
    pub order: u32,
    pub exact: Complex64,
    pub reconstructed: Complex64,
    /// ∫ f(t)·conj((k_{z0})^{n+1}(t)) dt
    pub hardy_integral: Complex64,
    /// ∫ g(t)·ρ(t)·conj(𝔎^ρ_{z0,n}(t)) dt; exactly zero for inner symbols.
    pub rho_integral: Complex64,
    pub residual_rel: f64,
    pub quadrature_error: f64,
    pub panels: usize,
}

impl KernelCombination {
    pub fn new(
        symbol: &SymbolFunction,
        nodes: &[Complex64],
        coefficients: &[Complex64],
    ) -> Result<Self, KernelError> {
        if nodes.is_empty() {
            return Err(KernelError::Empty);
        }
        if nodes.len() != coefficients.len() {
            return Err(KernelError::LengthMismatch {
                nodes: nodes.len(),
                coefficients: coefficients.len(),
            });
        }
        for v in nodes.iter().chain(coefficients) {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(KernelError::NonFinite);
            }
        }
        for z in nodes {
            if z.im <= 0.0 {
                return Err(KernelError::NodeNotInterior { re: z.re, im: z.im });
            }
        }
        let node_values = nodes
            .iter()
            .map(|&z| symbol.eval(z))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(KernelCombination {
            symbol: symbol.clone(),
            nodes: nodes.to_vec(),
            coefficients: coefficients.to_vec(),
            node_values,
        })
    }

    pub fn symbol(&self) -> &SymbolFunction {
        &self.symbol
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// f(z) for z in the legal closed upper half-plane.
    pub fn eval(&self, z: Complex64) -> Result<Complex64, KernelError> {
        let bz = self.symbol.eval(z)?;
        let mut acc = C_ZERO;
        for ((&c, &lam), &blam) in self
            .coefficients
            .iter()
            .zip(&self.nodes)
            .zip(&self.node_values)
        {
            let den = z - lam.conj();
            acc += c * (C_ONE - blam.conj() * bz) / den;
        }
        Ok(acc)
    }

    /// Exact m-th derivative of f (m ≤ 4) through the symbol jets.
    pub fn derivative(&self, z: Complex64, m: usize) -> Result<Complex64, KernelError> {
        if m == 0 {
            return self.eval(z);
        }
        if m > symbol::MAX_DERIVATIVE_ORDER {
            return Err(KernelError::Order { order: m as u32 });
        }
        let bjet = self.symbol.jet(z, m)?;
        let mut acc = C_ZERO;
        for ((&c, &lam), &blam) in self
            .coefficients
            .iter()
            .zip(&self.nodes)
            .zip(&self.node_values)
        {
            // numerator jet: 1 − conj(b(λ))·b(z)
            let mut num = [C_ZERO; 5];
            for k in 0..=m {
                num[k] = -blam.conj() * bjet[k];
            }
            num[0] += C_ONE;
            // inverse-distance jet: d^k (z−conj λ)^{-1} = (−1)^k k!·(z−conj λ)^{−k−1}
            let d = z - lam.conj();
            let mut inv = [C_ZERO; 5];
            let mut dpow = d;
            let mut sign = 1.0;
            let mut fact = 1.0;
            inv[0] = C_ONE / d;
            for k in 1..=m {
                dpow *= d;
                sign = -sign;
                fact *= k as f64;
                inv[k] = (sign * fact) * C_ONE / dpow;
            }
            let prod = symbol::jet_mul(&num, &inv, m);
            acc += c * prod[m];
        }
        Ok(acc)
    }

    /// ⟨f, g⟩_b by the reproducing identity:
    /// Σ_{j,k} c_j·conj(d_k)·2πi·k_{λ_j}(μ_k).
    pub fn inner_product(&self, other: &KernelCombination) -> Result<Complex64, KernelError> {
        if self.symbol != other.symbol {
            return Err(KernelError::SymbolMismatch);
        }
        let mut acc = C_ZERO;
        for (&c, (&lam, &blam)) in self
            .coefficients
            .iter()
            .zip(self.nodes.iter().zip(&self.node_values))
        {
            for (&d, (&mu, &bmu)) in other
                .coefficients
                .iter()
                .zip(other.nodes.iter().zip(&other.node_values))
            {
                let k = (C_ONE - blam.conj() * bmu) / (mu - lam.conj());
                acc += c * d.conj() * TWO_PI_I * k;
            }
        }
        Ok(acc)
    }

    /// ‖f‖²_b from the Gram algebra.
    pub fn norm_sq(&self) -> Result<f64, KernelError> {
        Ok(self.inner_product(self)?.re)
    }

    /// The boundary companion g with T_conj(b) f = T̃_ρ g: a combination of
    /// Cauchy kernels weighted by c_j·conj(b(λ_j)).
    pub fn companion(&self) -> Companion {
        Companion {
            symbol: self.symbol.clone(),
            nodes: self.nodes.clone(),
            weights: self
                .coefficients
                .iter()
                .zip(&self.node_values)
                .map(|(&c, &b)| c * b.conj())
                .collect(),
        }
    }

    pub(crate) fn coefficient_mass(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm()).sum()
    }

    pub(crate) fn tail_radius(&self, extra: &[f64]) -> f64 {
        let mut r: f64 = 1.0;
        for z in &self.nodes {
            r = r.max(z.norm());
        }
        for &x in extra {
            r = r.max(x.abs());
        }
        2.0 * r.max(0.5)
    }

    pub(crate) fn line_edges(&self, extra: &[f64]) -> Vec<f64> {
        let mut edges = self.symbol.singular_boundary_points();
        edges.extend(self.nodes.iter().map(|z| z.re));
        edges.extend_from_slice(extra);
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        edges
    }

    pub(crate) fn eval_real_lossy(&self, t: f64) -> Complex64 {
        match self.symbol.eval(Complex64::new(t, 0.0)) {
            Ok(bt) => {
                let mut acc = C_ZERO;
                for ((&c, &lam), &blam) in self
                    .coefficients
                    .iter()
                    .zip(&self.nodes)
                    .zip(&self.node_values)
                {
                    acc += c * (C_ONE - blam.conj() * bt) / (Complex64::new(t, 0.0) - lam.conj());
                }
                acc
            }
            Err(_) => Complex64::new(f64::NAN, f64::NAN),
        }
    }

    /// ‖f‖²_2 over the boundary line by quadrature. |f(t)| ≤ 4Σ|c_j|/|t| once
    /// |t| dominates every node, which certifies the tail.
    pub fn l2_norm_sq(&self, spec: &QuadratureSpec) -> Result<Quadrature, KernelError> {
        let mass = self.coefficient_mass();
        let tail = TailBound {
            coefficient: (4.0 * mass).powi(2),
            exponent: 2.0,
            valid_from: self.tail_radius(&[]),
        };
        let edges = self.line_edges(&[]);
        Ok(quad::integrate_line(
            &|t| self.eval_real_lossy(t).norm_sqr(),
            &edges,
            tail,
            spec,
        )?)
    }

    /// Checks ‖f‖²_b = ‖f‖²_2 + ‖g‖²_ρ with both right-hand terms computed by
    /// quadrature, reporting the relative defect.
    pub fn norm_decomposition(
        &self,
        spec: &QuadratureSpec,
    ) -> Result<NormDecomposition, KernelError> {
        let space = self.norm_sq()?;
        let l2 = self.l2_norm_sq(spec)?;
        let rho = self.companion().rho_norm_sq(spec)?;
        let defect = (space - l2.value - rho.value).abs() / space.abs().max(1e-300);
        Ok(NormDecomposition {
            space_norm_sq: space,
            l2_norm_sq: l2.value,
            rho_norm_sq: rho.value,
            defect_rel: defect,
            quadrature_error: l2.error + rho.error,
            panels: l2.panels + rho.panels,
        })
    }

    /// Reconstructs f^(n)(z0) from the two boundary integrals
    /// n!/(2πi)·(∫ f·conj((k_{z0})^{n+1}) dt + ∫ g·ρ·conj(𝔎^ρ_{z0,n}) dt)
    /// and compares against the exact jet derivative.
    pub fn derivative_representation(
        &self,
        z0: Complex64,
        n: u32,
        spec: &QuadratureSpec,
    ) -> Result<RepresentationReport, KernelError> {
        check_order(n)?;
        let exact = self.derivative(z0, n as usize)?;
        // cache the z0 data once; the integrand closures only need b(z0)
        let bz0 = self.symbol.eval(z0)?;
        let mass = self.coefficient_mass();
        let tail = TailBound {
            // |f| ≤ 4Σ|c|/|t| and |k_{z0}|^{n+1} ≤ (4/|t|)^{n+1}
            coefficient: 4.0 * mass * 4.0f64.powi(n as i32 + 1),
            exponent: (n + 2) as f64,
            valid_from: self.tail_radius(&[z0.re.abs() + z0.im]),
        };
        let edges = self.line_edges(&[z0.re]);
        let kernel_pow = |t: f64| -> Complex64 {
            let tt = Complex64::new(t, 0.0);
            let den = tt - z0.conj();
            match self.symbol.eval(tt) {
                Ok(bt) => cpow((C_ONE - bz0.conj() * bt) / den, n + 1),
                Err(_) => Complex64::new(f64::NAN, f64::NAN),
            }
        };
        let hardy = quad::integrate_line_complex(
            &|t| self.eval_real_lossy(t) * kernel_pow(t).conj(),
            &edges,
            tail,
            spec,
        )?;
        let g = self.companion();
        let mut rho_integral = C_ZERO;
        let mut rho_err = 0.0;
        let mut rho_panels = 0;
        for piece in self.symbol.outer_pieces() {
            let density = 1.0 - piece.boundary_modulus_sq();
            let q = quad::integrate_interval_complex(
                &|t| {
                    let frak = match frak_kernel(&self.symbol, z0, n, t) {
                        Ok(v) => v,
                        Err(_) => Complex64::new(f64::NAN, f64::NAN),
                    };
                    g.eval(t) * density * frak.conj()
                },
                piece.lower,
                piece.upper,
                &[],
                spec,
            )?;
            rho_integral += q.value;
            rho_err += q.error;
            rho_panels += q.panels;
        }
        let mut factorial = 1.0;
        for j in 1..=n {
            factorial *= j as f64;
        }
        let reconstructed = factorial / TWO_PI_I * (hardy.value + rho_integral);
        let scale = exact.norm().max(reconstructed.norm()).max(1e-300);
        Ok(RepresentationReport {
            point: z0,
            order: n,
            exact,
            reconstructed,
            hardy_integral: hardy.value,
            rho_integral,
            residual_rel: (exact - reconstructed).norm() / scale,
            quadrature_error: hardy.error + rho_err,
            panels: hardy.panels + rho_panels,
        })
    }
}

/// g = Σ c_j·conj(b(λ_j))·(t − conj λ_j)^{-1}, the ρ-side companion of a
/// kernel combination.
#[derive(Debug, Clone, PartialEq)]
pub struct Companion {
    symbol: SymbolFunction,
    nodes: Vec<Complex64>,
    weights: Vec<Complex64>,
}

impl Companion {
    pub fn eval(&self, t: f64) -> Complex64 {
        let tt = Complex64::new(t, 0.0);
        let mut acc = C_ZERO;
        for (&w, &lam) in self.weights.iter().zip(&self.nodes) {
            acc += w / (tt - lam.conj());
        }
        acc
    }

    /// ‖g‖²_ρ = ∫ ρ|g|²: ρ vanishes off the nontrivial outer pieces, so this
    /// is a finite sum of interval integrals with constant density.
    pub fn rho_norm_sq(&self, spec: &QuadratureSpec) -> Result<Quadrature, KernelError> {
        let mut value = 0.0;
        let mut error = 0.0;
        let mut panels = 0;
        for piece in self.symbol.outer_pieces() {
            let density = 1.0 - piece.boundary_modulus_sq();
            let q = quad::integrate_interval(
                &|t| density * self.eval(t).norm_sqr(),
                piece.lower,
                piece.upper,
                &[],
                spec,
            )?;
            value += q.value;
            error += q.error;
            panels += q.panels;
        }
        Ok(Quadrature {
            value,
            error,
            panels,
        })
    }
}
