//! Symbols b in the unit ball of the bounded analytic functions on the upper
//! half-plane, stored through canonical factorization data: a finite Blaschke
//! product, a finite atomic singular part with an exp(iaz) mass, and a
//! piecewise-constant-modulus outer part. Everything downstream (kernels,
//! weights, geometry) evaluates b and its derivatives through this module.

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

/// Highest derivative order the jet machinery carries.
pub const MAX_DERIVATIVE_ORDER: usize = 4;

const C_ONE: Complex64 = Complex64::new(1.0, 0.0);
const C_I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlaschkeZero {
    /// Zero location, strictly inside the upper half-plane.
    pub location: Complex64,
    pub multiplicity: u32,
    /// Unimodular phase attached to this factor, reduced to [0, 2π).
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlaschkeData {
    pub zeros: Vec<BlaschkeZero>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularAtom {
    pub location: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SingularData {
    /// Coefficient a of the exp(iaz) factor (the singular mass at infinity).
    pub exp_mass: f64,
    pub atoms: Vec<SingularAtom>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterPiece {
    pub lower: f64,
    pub upper: f64,
    /// Value of log|b| on [lower, upper]; must be ≤ 0. A level of exactly 0
    /// makes the piece a no-op.
    pub level: f64,
}

impl OuterPiece {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// |b(t)|² on this piece.
    pub fn boundary_modulus_sq(&self) -> f64 {
        (2.0 * self.level).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OuterData {
    pub pieces: Vec<OuterPiece>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SymbolFunction {
    /// b ≡ 0, so H(b) is the full Hardy space and ρ ≡ 1.
    Zero,
    Factored {
        blaschke: BlaschkeData,
        singular: SingularData,
        outer: OuterData,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolError {
    #[error("Blaschke zero at {re}+{im}i must lie strictly in the upper half-plane")]
    ZeroNotInUpperHalfPlane { re: f64, im: f64 },
    #[error("Blaschke multiplicity must be at least 1")]
    ZeroMultiplicity,
    #[error("singular exp mass a = {a} must be nonnegative")]
    NegativeExpMass { a: f64 },
    #[error("atom mass {mass} at t = {location} must be strictly positive")]
    NonPositiveAtomMass { location: f64, mass: f64 },
    #[error("atom locations must be pairwise distinct (duplicate at t = {location})")]
    DuplicateAtom { location: f64 },
    #[error("outer piece [{lower}, {upper}] must have lower < upper")]
    EmptyPiece { lower: f64, upper: f64 },
    #[error("outer level {level} on [{lower}, {upper}] must be ≤ 0")]
    PositiveOuterLevel { lower: f64, upper: f64, level: f64 },
    #[error("outer pieces [{a0}, {b0}] and [{a1}, {b1}] have overlapping interiors")]
    OverlappingPieces { a0: f64, b0: f64, a1: f64, b1: f64 },
    #[error("non-finite number in symbol data")]
    NonFinite,
}

/// What made a boundary point illegal to evaluate at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularKind {
    Atom,
    PieceBreakpoint,
    /// Interior of a piece where |b| < 1: fine for plain evaluation, but b is
    /// not analytic across it, so derivatives are rejected there.
    PieceInterior,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("evaluation at the singular boundary point {point} ({kind:?})")]
    SingularPoint { point: f64, kind: SingularKind },
    #[error("point {re}+{im}i lies in the open lower half-plane")]
    LowerHalfPlane { re: f64, im: f64 },
    #[error("derivative order {order} outside the supported range 1..=4")]
    UnsupportedOrder { order: usize },
}

/// Boundary spectrum: the closed set of real points where |b| does not tend
/// to 1 from inside. Finite data makes it a finite union of points and
/// closed intervals; the Zero symbol owns the whole line.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub entire_line: bool,
    /// Isolated points (atoms outside every nontrivial piece), sorted.
    pub points: Vec<f64>,
    /// Closed intervals (merged nontrivial outer pieces), sorted and disjoint.
    pub intervals: Vec<(f64, f64)>,
}

impl Spectrum {
    pub fn is_empty(&self) -> bool {
        !self.entire_line && self.points.is_empty() && self.intervals.is_empty()
    }

    /// Euclidean distance from x to the spectrum; +∞ for an empty spectrum.
    pub fn distance(&self, x: f64) -> f64 {
        if self.entire_line {
            return 0.0;
        }
        let mut d = f64::INFINITY;
        for &p in &self.points {
            d = d.min((x - p).abs());
        }
        for &(a, b) in &self.intervals {
            let dd = if x < a {
                a - x
            } else if x > b {
                x - b
            } else {
                0.0
            };
            d = d.min(dd);
        }
        d
    }

    pub fn contains(&self, x: f64) -> bool {
        self.distance(x) == 0.0
    }

    /// Does the spectrum meet the open interval (lo, hi)?
    pub fn intersects_open_interval(&self, lo: f64, hi: f64) -> bool {
        if self.entire_line {
            return lo < hi;
        }
        self.points.iter().any(|&p| lo < p && p < hi)
            || self.intervals.iter().any(|&(a, b)| a < hi && b > lo)
    }

    /// Does the spectrum meet the closed interval [lo, hi]?
    pub fn intersects_closed_interval(&self, lo: f64, hi: f64) -> bool {
        if self.entire_line {
            return true;
        }
        self.points.iter().any(|&p| lo <= p && p <= hi)
            || self.intervals.iter().any(|&(a, b)| a <= hi && b >= lo)
    }
}

impl SymbolFunction {
    pub fn zero() -> Self {
        SymbolFunction::Zero
    }

    pub fn factored(
        blaschke: BlaschkeData,
        singular: SingularData,
        outer: OuterData,
    ) -> Result<Self, SymbolError> {
        let mut blaschke = blaschke;
        for z in &mut blaschke.zeros {
            if !z.location.re.is_finite() || !z.location.im.is_finite() || !z.phase.is_finite() {
                return Err(SymbolError::NonFinite);
            }
            if z.location.im <= 0.0 {
                return Err(SymbolError::ZeroNotInUpperHalfPlane {
                    re: z.location.re,
                    im: z.location.im,
                });
            }
            if z.multiplicity == 0 {
                return Err(SymbolError::ZeroMultiplicity);
            }
            z.phase = z.phase.rem_euclid(2.0 * PI);
        }
        if !singular.exp_mass.is_finite() {
            return Err(SymbolError::NonFinite);
        }
        if singular.exp_mass < 0.0 {
            return Err(SymbolError::NegativeExpMass {
                a: singular.exp_mass,
            });
        }
        for a in &singular.atoms {
            if !a.location.is_finite() || !a.mass.is_finite() {
                return Err(SymbolError::NonFinite);
            }
            if a.mass <= 0.0 {
                return Err(SymbolError::NonPositiveAtomMass {
                    location: a.location,
                    mass: a.mass,
                });
            }
        }
        let mut locs: Vec<f64> = singular.atoms.iter().map(|a| a.location).collect();
        locs.sort_by(f64::total_cmp);
        for w in locs.windows(2) {
            if w[0] == w[1] {
                return Err(SymbolError::DuplicateAtom { location: w[0] });
            }
        }
        let mut outer = outer;
        for p in &outer.pieces {
            if !p.lower.is_finite() || !p.upper.is_finite() || !p.level.is_finite() {
                return Err(SymbolError::NonFinite);
            }
            if p.lower >= p.upper {
                return Err(SymbolError::EmptyPiece {
                    lower: p.lower,
                    upper: p.upper,
                });
            }
            if p.level > 0.0 {
                return Err(SymbolError::PositiveOuterLevel {
                    lower: p.lower,
                    upper: p.upper,
                    level: p.level,
                });
            }
        }
        outer
            .pieces
            .sort_by(|a, b| a.lower.total_cmp(&b.lower));
        for w in outer.pieces.windows(2) {
            if w[1].lower < w[0].upper {
                return Err(SymbolError::OverlappingPieces {
                    a0: w[0].lower,
                    b0: w[0].upper,
                    a1: w[1].lower,
                    b1: w[1].upper,
                });
            }
        }
        Ok(SymbolFunction::Factored {
            blaschke,
            singular,
            outer,
        })
    }

    /// Finite Blaschke product from zeros alone (all phases 0).
    pub fn blaschke(zeros: &[(Complex64, u32)]) -> Result<Self, SymbolError> {
        let zeros = zeros
            .iter()
            .map(|&(location, multiplicity)| BlaschkeZero {
                location,
                multiplicity,
                phase: 0.0,
            })
            .collect();
        Self::factored(
            BlaschkeData { zeros },
            SingularData::default(),
            OuterData::default(),
        )
    }

    /// b(z) = exp(iaz).
    pub fn exponential(a: f64) -> Result<Self, SymbolError> {
        Self::factored(
            BlaschkeData::default(),
            SingularData {
                exp_mass: a,
                atoms: Vec::new(),
            },
            OuterData::default(),
        )
    }

    /// Outer symbol whose boundary modulus is the constant `modulus` on
    /// [lower, upper] and 1 elsewhere. `modulus` must lie in (0, 1].
    pub fn plateau(lower: f64, upper: f64, modulus: f64) -> Result<Self, SymbolError> {
        let level = modulus.ln();
        Self::factored(
            BlaschkeData::default(),
            SingularData::default(),
            OuterData {
                pieces: vec![OuterPiece {
                    lower,
                    upper,
                    level,
                }],
            },
        )
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SymbolFunction::Zero)
    }

    /// Inner symbols have unimodular boundary values a.e.: no nontrivial
    /// outer piece. The Zero symbol is not inner.
    pub fn is_inner(&self) -> bool {
        match self {
            SymbolFunction::Zero => false,
            SymbolFunction::Factored { outer, .. } => {
                outer.pieces.iter().all(|p| p.level == 0.0)
            }
        }
    }

    /// Nontrivial outer pieces (level < 0), sorted by position.
    pub fn outer_pieces(&self) -> Vec<OuterPiece> {
        match self {
            SymbolFunction::Zero => Vec::new(),
            SymbolFunction::Factored { outer, .. } => outer
                .pieces
                .iter()
                .copied()
                .filter(|p| p.level < 0.0)
                .collect(),
        }
    }

    /// Real points where evaluation is singular: atoms and the breakpoints of
    /// nontrivial outer pieces. Sorted, deduplicated. Quadrature uses these
    /// as mandatory panel edges.
    pub fn singular_boundary_points(&self) -> Vec<f64> {
        let mut pts = Vec::new();
        if let SymbolFunction::Factored {
            singular, outer, ..
        } = self
        {
            pts.extend(singular.atoms.iter().map(|a| a.location));
            for p in outer.pieces.iter().filter(|p| p.level < 0.0) {
                pts.push(p.lower);
                pts.push(p.upper);
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn boundary_singularity(&self, x: f64, for_derivative: bool) -> Option<SingularKind> {
        if let SymbolFunction::Factored {
            singular, outer, ..
        } = self
        {
            if singular.atoms.iter().any(|a| a.location == x) {
                return Some(SingularKind::Atom);
            }
            for p in outer.pieces.iter().filter(|p| p.level < 0.0) {
                if x == p.lower || x == p.upper {
                    return Some(SingularKind::PieceBreakpoint);
                }
                if for_derivative && x > p.lower && x < p.upper {
                    return Some(SingularKind::PieceInterior);
                }
            }
        }
        None
    }

    /// Value and derivatives of b up to `order` (≤ 4) at z, Im z ≥ 0.
    /// Boundary points must avoid atoms and nontrivial breakpoints; orders
    /// ≥ 1 additionally require the point to be off closed nontrivial pieces
    /// (b is analytic through every other boundary point of our data class).
    pub fn jet(&self, z: Complex64, order: usize) -> Result<[Complex64; 5], EvalError> {
        if order > MAX_DERIVATIVE_ORDER {
            return Err(EvalError::UnsupportedOrder { order });
        }
        if z.im < 0.0 {
            return Err(EvalError::LowerHalfPlane { re: z.re, im: z.im });
        }
        // Rebuild boundary points with +0.0 so principal-branch arguments are
        // taken from inside the half-plane.
        let z = if z.im == 0.0 {
            Complex64::new(z.re, 0.0)
        } else {
            z
        };
        if z.im == 0.0 {
            if let Some(kind) = self.boundary_singularity(z.re, order >= 1) {
                return Err(EvalError::SingularPoint { point: z.re, kind });
            }
        }
        match self {
            SymbolFunction::Zero => Ok([Complex64::new(0.0, 0.0); 5]),
            SymbolFunction::Factored {
                blaschke,
                singular,
                outer,
            } => {
                let mut out = exp_jet(&log_factor_jet(singular, outer, z, order), order);
                for zero in &blaschke.zeros {
                    let factor = blaschke_entry_jet(zero, z, order);
                    out = jet_mul(&out, &factor, order);
                }
                Ok(out)
            }
        }
    }

    /// b(z) for Im z ≥ 0 (boundary points off atoms and nontrivial
    /// breakpoints).
    pub fn eval(&self, z: Complex64) -> Result<Complex64, EvalError> {
        Ok(self.jet(z, 0)?[0])
    }

    /// b^(m)(z), m in 1..=4.
    pub fn derivative(&self, z: Complex64, order: usize) -> Result<Complex64, EvalError> {
        if order == 0 || order > MAX_DERIVATIVE_ORDER {
            return Err(EvalError::UnsupportedOrder { order });
        }
        Ok(self.jet(z, order)?[order])
    }

    /// Modulus of the angular derivative at real x from the factorization
    /// data:
    /// a + Σ 2m·Im z_r/|x−z_r|² + (1/π)Σ m_j/|x−t_j|² + (1/π)∫|log|b||/|x−t|² dt.
    /// +∞ when x is an atom or lies in a closed nontrivial piece.
    pub fn angular_derivative_modulus(&self, x: f64) -> f64 {
        match self {
            SymbolFunction::Zero => 0.0,
            SymbolFunction::Factored {
                blaschke,
                singular,
                outer,
            } => {
                let mut total = singular.exp_mass;
                for z in &blaschke.zeros {
                    let d2 = (x - z.location.re).powi(2) + z.location.im.powi(2);
                    total += z.multiplicity as f64 * 2.0 * z.location.im / d2;
                }
                for a in &singular.atoms {
                    if a.location == x {
                        return f64::INFINITY;
                    }
                    total += a.mass / ((x - a.location).powi(2) * PI);
                }
                for p in outer.pieces.iter().filter(|p| p.level < 0.0) {
                    let piece = inv_distance_integral(p.lower, p.upper, x, 2);
                    if piece.is_infinite() {
                        return f64::INFINITY;
                    }
                    total += p.level.abs() * piece / PI;
                }
                total
            }
        }
    }

    /// The boundary singularity sum
    /// S_n(x) = Σ m·Im z_r/|x−z_r|ⁿ + Σ m_j/|x−t_j|ⁿ + ∫|log|b(t)||/|x−t|ⁿ dt,
    /// +∞ exactly when x is an atom or lies in a closed nontrivial piece.
    pub fn singularity_sum(&self, x: f64, n: u32) -> f64 {
        assert!(n >= 1, "singularity sum needs n >= 1");
        match self {
            SymbolFunction::Zero => 0.0,
            SymbolFunction::Factored {
                blaschke,
                singular,
                outer,
            } => {
                let mut total = 0.0;
                for z in &blaschke.zeros {
                    let d = ((x - z.location.re).powi(2) + z.location.im.powi(2)).sqrt();
                    total += z.multiplicity as f64 * z.location.im / d.powi(n as i32);
                }
                for a in &singular.atoms {
                    if a.location == x {
                        return f64::INFINITY;
                    }
                    total += a.mass / (x - a.location).abs().powi(n as i32);
                }
                for p in outer.pieces.iter().filter(|p| p.level < 0.0) {
                    let piece = inv_distance_integral(p.lower, p.upper, x, n);
                    if piece.is_infinite() {
                        return f64::INFINITY;
                    }
                    total += p.level.abs() * piece;
                }
                total
            }
        }
    }

    /// Membership in E_n = {x : S_n(x) < ∞}.
    pub fn in_e_n(&self, x: f64, n: u32) -> bool {
        self.singularity_sum(x, n).is_finite()
    }

    pub fn spectrum(&self) -> Spectrum {
        match self {
            SymbolFunction::Zero => Spectrum {
                entire_line: true,
                points: Vec::new(),
                intervals: Vec::new(),
            },
            SymbolFunction::Factored {
                singular, outer, ..
            } => {
                let mut intervals: Vec<(f64, f64)> = outer
                    .pieces
                    .iter()
                    .filter(|p| p.level < 0.0)
                    .map(|p| (p.lower, p.upper))
                    .collect();
                intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut merged: Vec<(f64, f64)> = Vec::new();
                for iv in intervals {
                    match merged.last_mut() {
                        Some(last) if iv.0 <= last.1 => last.1 = last.1.max(iv.1),
                        _ => merged.push(iv),
                    }
                }
                let mut points: Vec<f64> = singular
                    .atoms
                    .iter()
                    .map(|a| a.location)
                    .filter(|&t| !merged.iter().any(|&(a, b)| a <= t && t <= b))
                    .collect();
                points.sort_by(f64::total_cmp);
                Spectrum {
                    entire_line: false,
                    points,
                    intervals: merged,
                }
            }
        }
    }

    /// Boundary modulus |b(t)| directly from the data (no analytic
    /// evaluation): exp(level) inside a nontrivial piece, 1 elsewhere,
    /// 0 for the Zero symbol. Errors at atoms and nontrivial breakpoints,
    /// where no limit exists.
    pub fn boundary_modulus(&self, t: f64) -> Result<f64, EvalError> {
        match self {
            SymbolFunction::Zero => Ok(0.0),
            SymbolFunction::Factored {
                singular, outer, ..
            } => {
                if singular.atoms.iter().any(|a| a.location == t) {
                    return Err(EvalError::SingularPoint {
                        point: t,
                        kind: SingularKind::Atom,
                    });
                }
                for p in outer.pieces.iter().filter(|p| p.level < 0.0) {
                    if t == p.lower || t == p.upper {
                        return Err(EvalError::SingularPoint {
                            point: t,
                            kind: SingularKind::PieceBreakpoint,
                        });
                    }
                    if t > p.lower && t < p.upper {
                        return Ok(p.level.exp());
                    }
                }
                Ok(1.0)
            }
        }
    }

    /// ρ(t) = 1 − |b(t)|².
    pub fn rho(&self, t: f64) -> Result<f64, EvalError> {
        let m = self.boundary_modulus(t)?;
        Ok(1.0 - m * m)
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    const TABLE: [[f64; 5]; 5] = [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0, 0.0],
        [1.0, 3.0, 3.0, 1.0, 0.0],
        [1.0, 4.0, 6.0, 4.0, 1.0],
    ];
    TABLE[n][k]
}

/// Leibniz product of two derivative stacks.
pub(crate) fn jet_mul(a: &[Complex64; 5], b: &[Complex64; 5], order: usize) -> [Complex64; 5] {
    let mut out = [Complex64::new(0.0, 0.0); 5];
    for k in 0..=order {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..=k {
            acc += binomial(k, j) * a[j] * b[k - j];
        }
        out[k] = acc;
    }
    out
}

/// Jet of one Blaschke factor e^{iα}((z−z₀)/(z−conj z₀))^m.
fn blaschke_entry_jet(zero: &BlaschkeZero, z: Complex64, order: usize) -> [Complex64; 5] {
    let d = z - zero.location.conj();
    // w = 1 + c/d with c = −2i·Im z₀; d^k(1/d)/dz^k = (−1)^k k!/d^{k+1}.
    let c = Complex64::new(0.0, -2.0 * zero.location.im);
    let mut w = [Complex64::new(0.0, 0.0); 5];
    w[0] = C_ONE + c / d;
    let mut dpow = d;
    let mut sign = -1.0;
    let mut fact = 1.0;
    for k in 1..=order {
        dpow *= d;
        fact *= k as f64;
        w[k] = c * (sign * fact) / dpow;
        sign = -sign;
    }
    let mut out = w;
    for _ in 1..zero.multiplicity {
        out = jet_mul(&out, &w, order);
    }
    let phase = Complex64::from_polar(1.0, zero.phase);
    for v in out.iter_mut().take(order + 1) {
        *v *= phase;
    }
    out
}

/// Derivative stack of h = log(I_μ·O_b): the exponent of the zero-free part.
fn log_factor_jet(
    singular: &SingularData,
    outer: &OuterData,
    z: Complex64,
    order: usize,
) -> [Complex64; 5] {
    let mut g = [Complex64::new(0.0, 0.0); 5];
    g[0] = C_I * singular.exp_mass * z;
    if order >= 1 {
        g[1] = C_I * singular.exp_mass;
    }
    for atom in &singular.atoms {
        let d = z - atom.location;
        let s = -C_I * (atom.mass / PI);
        let cauchy_shift = atom.location / (atom.location * atom.location + 1.0);
        g[0] += s * (C_ONE / d + cauchy_shift);
        let mut dpow = d;
        let mut sign = -1.0;
        let mut fact = 1.0;
        for k in 1..=order {
            dpow *= d;
            fact *= k as f64;
            g[k] += s * (sign * fact) / dpow;
            sign = -sign;
        }
    }
    for p in outer.pieces.iter().filter(|p| p.level != 0.0) {
        let s = C_I * (p.level / PI);
        let da = z - p.lower;
        let db = z - p.upper;
        let shift = 0.5 * ((p.upper * p.upper + 1.0) / (p.lower * p.lower + 1.0)).ln();
        g[0] += s * (da.ln() - db.ln() + shift);
        // d^k[ln(z−α) − ln(z−β)] = (−1)^{k−1}(k−1)!·(1/(z−α)^k − 1/(z−β)^k)
        let mut apow = da;
        let mut bpow = db;
        let mut sign = 1.0;
        let mut fact = 1.0;
        for k in 1..=order {
            if k > 1 {
                apow *= da;
                bpow *= db;
                fact *= (k - 1) as f64;
            }
            g[k] += s * (sign * fact) * (C_ONE / apow - C_ONE / bpow);
            sign = -sign;
        }
    }
    g
}

/// exp applied to a derivative stack: E = e^g,
/// E^(k) = Σ_{j<k} C(k−1, j)·g^(k−j)·E^(j).
fn exp_jet(g: &[Complex64; 5], order: usize) -> [Complex64; 5] {
    let mut e = [Complex64::new(0.0, 0.0); 5];
    e[0] = g[0].exp();
    for k in 1..=order {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..k {
            acc += binomial(k - 1, j) * g[k - j] * e[j];
        }
        e[k] = acc;
    }
    e
}

/// ∫ over [alpha, beta] of dt/|x−t|ⁿ in closed form; +∞ on the closed
/// interval itself (the integral diverges at the endpoints too).
pub(crate) fn inv_distance_integral(alpha: f64, beta: f64, x: f64, n: u32) -> f64 {
    if x >= alpha && x <= beta {
        return f64::INFINITY;
    }
    let (near, far) = if x > beta {
        (x - beta, x - alpha)
    } else {
        (alpha - x, beta - x)
    };
    if n == 1 {
        (far / near).ln()
    } else {
        let e = 1.0 - n as f64;
        (near.powf(e) - far.powf(e)) / (n as f64 - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_zero_at_i() -> SymbolFunction {
        SymbolFunction::blaschke(&[(c(0.0, 1.0), 1)]).unwrap()
    }

    #[test]
    fn exponential_at_i() {
        let b = SymbolFunction::exponential(1.0).unwrap();
        let v = b.eval(c(0.0, 1.0)).unwrap();
        assert_relative_eq!(v.re, (-1.0f64).exp(), max_relative = 1e-14);
        assert!(v.im.abs() < 1e-16);
    }

    #[test]
    fn blaschke_two_point_quotient() {
        let b = single_zero_at_i();
        let v = b.eval(c(0.0, 3.0)).unwrap();
        assert_relative_eq!(v.re, 0.5, max_relative = 1e-14);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn plateau_boundary_limit() {
        // |b(iy)| → 0.5 as y → 0 for the flat outer symbol with |b| = 0.5 on [−1, 1].
        let b = SymbolFunction::plateau(-1.0, 1.0, 0.5).unwrap();
        let v = b.eval(c(0.0, 1e-4)).unwrap();
        assert!((v.norm() - 0.5).abs() < 1e-3, "modulus {}", v.norm());
    }

    #[test]
    fn plateau_matches_log_quotient_form() {
        // The plateau symbol on [−1, 1] equals exp(−(i/π)·ln ε·Log((z−1)/(z+1))).
        let eps: f64 = 0.5;
        let b = SymbolFunction::plateau(-1.0, 1.0, eps).unwrap();
        for &z in &[c(0.3, 0.7), c(-2.0, 0.1), c(5.0, 3.0), c(0.0, 1e-3)] {
            let direct = b.eval(z).unwrap();
            let closed =
                (-C_I / PI * eps.ln() * ((z - 1.0) / (z + 1.0)).ln()).exp();
            assert_relative_eq!(direct.re, closed.re, max_relative = 1e-12);
            assert_relative_eq!(direct.im, closed.im, max_relative = 1e-12);
        }
    }

    #[test]
    fn boundary_value_inside_piece_has_prescribed_modulus() {
        let b = SymbolFunction::plateau(-1.0, 1.0, 0.5).unwrap();
        for &x in &[-0.9, -0.2, 0.4, 0.99] {
            let v = b.eval(c(x, 0.0)).unwrap();
            assert_relative_eq!(v.norm(), 0.5, max_relative = 1e-12);
        }
        // off the piece the modulus is 1
        for &x in &[-3.0, 1.5, 20.0] {
            let v = b.eval(c(x, 0.0)).unwrap();
            assert_relative_eq!(v.norm(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn eval_rejects_singular_boundary_points() {
        let b = SymbolFunction::factored(
            BlaschkeData::default(),
            SingularData {
                exp_mass: 0.0,
                atoms: vec![SingularAtom {
                    location: 2.0,
                    mass: 1.0,
                }],
            },
            OuterData {
                pieces: vec![OuterPiece {
                    lower: -1.0,
                    upper: 1.0,
                    level: -1.0,
                }],
            },
        )
        .unwrap();
        assert!(matches!(
            b.eval(c(2.0, 0.0)),
            Err(EvalError::SingularPoint {
                kind: SingularKind::Atom,
                ..
            })
        ));
        assert!(matches!(
            b.eval(c(1.0, 0.0)),
            Err(EvalError::SingularPoint {
                kind: SingularKind::PieceBreakpoint,
                ..
            })
        ));
        assert!(matches!(
            b.eval(c(0.0, -0.5)),
            Err(EvalError::LowerHalfPlane { .. })
        ));
        // interior of the piece is legal for plain evaluation...
        assert!(b.eval(c(0.5, 0.0)).is_ok());
        // ...but not for derivatives
        assert!(matches!(
            b.derivative(c(0.5, 0.0), 1),
            Err(EvalError::SingularPoint {
                kind: SingularKind::PieceInterior,
                ..
            })
        ));
    }

    #[test]
    fn derivative_of_exponential() {
        let b = SymbolFunction::exponential(1.0).unwrap();
        let d = b.derivative(c(0.0, 1.0), 1).unwrap();
        let expect = C_I * (-1.0f64).exp();
        assert_relative_eq!(d.re, expect.re, max_relative = 1e-14);
        assert_relative_eq!(d.im, expect.im, max_relative = 1e-14);
    }

    #[test]
    fn derivative_of_single_blaschke_factor() {
        // b'(z) = 2i/(z+i)², so b'(i) = −i/2.
        let b = single_zero_at_i();
        let d = b.derivative(c(0.0, 1.0), 1).unwrap();
        assert!(d.re.abs() < 1e-15);
        assert_relative_eq!(d.im, -0.5, max_relative = 1e-14);
    }

    #[test]
    fn higher_derivatives_match_finite_differences() {
        let b = SymbolFunction::factored(
            BlaschkeData {
                zeros: vec![BlaschkeZero {
                    location: c(0.5, 1.5),
                    multiplicity: 2,
                    phase: 0.3,
                }],
            },
            SingularData {
                exp_mass: 0.25,
                atoms: vec![SingularAtom {
                    location: -1.0,
                    mass: 0.8,
                }],
            },
            OuterData {
                pieces: vec![OuterPiece {
                    lower: 0.0,
                    upper: 2.0,
                    level: -0.7,
                }],
            },
        )
        .unwrap();
        let z = c(0.4, 1.1);
        let h = 1e-5;
        for order in 1..=4usize {
            // central difference of the (order−1)-th derivative
            let lower_order = order - 1;
            let take = |w: Complex64| {
                if lower_order == 0 {
                    b.eval(w).unwrap()
                } else {
                    b.derivative(w, lower_order).unwrap()
                }
            };
            let fd = (take(z + h) - take(z - h)) / (2.0 * h);
            let exact = b.derivative(z, order).unwrap();
            assert_relative_eq!(fd.re, exact.re, max_relative = 1e-6);
            assert_relative_eq!(fd.im, exact.im, max_relative = 1e-6);
        }
    }

    #[test]
    fn angular_derivative_examples() {
        let b = SymbolFunction::exponential(3.0).unwrap();
        assert_relative_eq!(b.angular_derivative_modulus(17.2), 3.0);

        let b = single_zero_at_i();
        assert_relative_eq!(b.angular_derivative_modulus(0.0), 2.0);
        // cross-check against the analytic derivative on the boundary
        let d = b.derivative(c(0.0, 0.0), 1).unwrap();
        assert_relative_eq!(d.norm(), 2.0, max_relative = 1e-13);

        let b = SymbolFunction::factored(
            BlaschkeData::default(),
            SingularData {
                exp_mass: 0.0,
                atoms: vec![SingularAtom {
                    location: 0.0,
                    mass: PI,
                }],
            },
            OuterData::default(),
        )
        .unwrap();
        assert_relative_eq!(b.angular_derivative_modulus(1.0), 1.0);
        assert!(b.angular_derivative_modulus(0.0).is_infinite());
    }

    #[test]
    fn singularity_sum_examples() {
        let b = single_zero_at_i();
        assert_relative_eq!(b.singularity_sum(0.0, 2), 1.0);

        let b = SymbolFunction::plateau(-1.0, 1.0, 0.5).unwrap();
        assert!(b.singularity_sum(0.5, 1).is_infinite());
        assert!(b.singularity_sum(1.0, 2).is_infinite());
        let expect = (0.5f64.ln()).abs() * (1.0 - 1.0 / 3.0);
        assert_relative_eq!(b.singularity_sum(2.0, 2), expect, max_relative = 1e-14);
        assert!(b.in_e_n(2.0, 2));
        assert!(!b.in_e_n(0.5, 2));
    }

    #[test]
    fn spectrum_examples() {
        assert!(SymbolFunction::exponential(2.0).unwrap().spectrum().is_empty());

        let s = SymbolFunction::plateau(-1.0, 1.0, 0.5).unwrap().spectrum();
        assert_eq!(s.intervals, vec![(-1.0, 1.0)]);
        assert!(s.points.is_empty());

        let b = SymbolFunction::factored(
            BlaschkeData::default(),
            SingularData {
                exp_mass: 0.0,
                atoms: vec![SingularAtom {
                    location: 0.0,
                    mass: 1.0,
                }],
            },
            OuterData {
                pieces: vec![OuterPiece {
                    lower: 2.0,
                    upper: 3.0,
                    level: -0.5,
                }],
            },
        )
        .unwrap();
        let s = b.spectrum();
        assert_eq!(s.points, vec![0.0]);
        assert_eq!(s.intervals, vec![(2.0, 3.0)]);
        assert_relative_eq!(s.distance(1.0), 1.0);
        assert_relative_eq!(s.distance(2.5), 0.0);
        assert_relative_eq!(s.distance(3.7), 0.7, max_relative = 1e-15);

        assert!(SymbolFunction::zero().spectrum().entire_line);
        assert_eq!(SymbolFunction::zero().spectrum().distance(123.0), 0.0);
    }

    #[test]
    fn modulus_bounded_by_one_on_samples() {
        let b = SymbolFunction::factored(
            BlaschkeData {
                zeros: vec![
                    BlaschkeZero {
                        location: c(-1.0, 0.5),
                        multiplicity: 1,
                        phase: 1.0,
                    },
                    BlaschkeZero {
                        location: c(2.0, 2.0),
                        multiplicity: 3,
                        phase: 0.0,
                    },
                ],
            },
            SingularData {
                exp_mass: 0.1,
                atoms: vec![SingularAtom {
                    location: 1.0,
                    mass: 2.0,
                }],
            },
            OuterData {
                pieces: vec![OuterPiece {
                    lower: -2.0,
                    upper: -1.0,
                    level: -3.0,
                }],
            },
        )
        .unwrap();
        let mut worst: f64 = 0.0;
        for ix in 0..40 {
            for iy in 1..40 {
                let z = c(-8.0 + 0.4 * ix as f64, 0.05 * iy as f64);
                worst = worst.max(b.eval(z).unwrap().norm());
            }
        }
        assert!(worst <= 1.0 + 1e-12, "worst modulus {worst}");
    }

    #[test]
    fn validation_rejects_bad_data() {
        assert!(matches!(
            SymbolFunction::blaschke(&[(c(0.0, -1.0), 1)]),
            Err(SymbolError::ZeroNotInUpperHalfPlane { .. })
        ));
        assert!(matches!(
            SymbolFunction::exponential(-0.5),
            Err(SymbolError::NegativeExpMass { .. })
        ));
        assert!(matches!(
            SymbolFunction::factored(
                BlaschkeData::default(),
                SingularData::default(),
                OuterData {
                    pieces: vec![OuterPiece {
                        lower: 0.0,
                        upper: 1.0,
                        level: 0.5
                    }]
                }
            ),
            Err(SymbolError::PositiveOuterLevel { .. })
        ));
        assert!(matches!(
            SymbolFunction::factored(
                BlaschkeData::default(),
                SingularData::default(),
                OuterData {
                    pieces: vec![
                        OuterPiece {
                            lower: 0.0,
                            upper: 2.0,
                            level: -1.0
                        },
                        OuterPiece {
                            lower: 1.0,
                            upper: 3.0,
                            level: -1.0
                        }
                    ]
                }
            ),
            Err(SymbolError::OverlappingPieces { .. })
        ));
    }

    #[test]
    fn lemma_boundary_monotonicity_of_derivative_modulus() {
        // |b'(x + iy)| ≤ |b'(x)| for each factor type separately.
        let cases = vec![
            SymbolFunction::exponential(1.5).unwrap(),
            single_zero_at_i(),
            SymbolFunction::factored(
                BlaschkeData::default(),
                SingularData {
                    exp_mass: 0.0,
                    atoms: vec![SingularAtom {
                        location: 0.3,
                        mass: 1.2,
                    }],
                },
                OuterData::default(),
            )
            .unwrap(),
            SymbolFunction::plateau(-1.0, 1.0, 0.4).unwrap(),
        ];
        for b in cases {
            for ix in 0..12 {
                let x = -3.0 + 0.55 * ix as f64;
                let cap = b.angular_derivative_modulus(x);
                for iy in 1..=8 {
                    let y = 0.2 * iy as f64;
                    let d = b.derivative(c(x, y), 1).unwrap().norm();
                    assert!(
                        d <= cap * (1.0 + 1e-8) || cap.is_infinite(),
                        "|b'| = {d} above boundary cap {cap} at x={x}, y={y}"
                    );
                }
            }
        }
    }
}
