//! Experiment configuration: a TOML file with a symbol block, an optional
//! quadrature block, and one block per subcommand. Unknown keys are
//! rejected everywhere so a typo cannot silently change a campaign.

use num_complex::Complex64;
use serde::Deserialize;

use hbspace::geometry::{DiscreteMeasure, PointMass, SegmentMass};
use hbspace::quad::QuadratureSpec;
use hbspace::symbol::{
    BlaschkeData, BlaschkeZero, OuterData, OuterPiece, SingularAtom, SingularData,
    SymbolFunction,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub symbol: SymbolConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    pub eval: Option<EvalConfig>,
    pub weight_sweep: Option<WeightSweepConfig>,
    pub bernstein: Option<BernsteinConfig>,
    pub embed: Option<EmbedConfig>,
    pub levelset: Option<LevelsetConfig>,
    pub riesz: Option<RieszConfig>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    Zero,
    Factored,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolConfig {
    pub kind: SymbolKind,
    /// Declares the structural hypothesis that the extended sublevel set
    /// is connected, unbounded, and absorbs the boundary spectrum; only a
    /// declaration can supply it, a finite computation cannot.
    #[serde(default)]
    pub cls: bool,
    #[serde(default)]
    pub zeros: Vec<ZeroConfig>,
    pub singular: Option<SingularConfig>,
    #[serde(default)]
    pub pieces: Vec<PieceConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroConfig {
    pub re: f64,
    pub im: f64,
    #[serde(default = "one_u32")]
    pub multiplicity: u32,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingularConfig {
    #[serde(default)]
    pub exp_mass: f64,
    #[serde(default)]
    pub atoms: Vec<AtomConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub location: f64,
    pub mass: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceConfig {
    pub lower: f64,
    pub upper: f64,
    /// Boundary modulus of the symbol on the piece, in (0, 1).
    pub modulus: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_max_panels")]
    pub max_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: default_rel_tol(),
            abs_tol: default_abs_tol(),
            max_panels: default_max_panels(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub points: Vec<(f64, f64)>,
    /// Highest derivative order to report, at most 4.
    #[serde(default)]
    pub order: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSweepConfig {
    pub p: f64,
    #[serde(default = "one_u32")]
    pub order: u32,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BernsteinConfig {
    pub p: f64,
    #[serde(default = "one_u32")]
    pub order: u32,
    pub count: usize,
    pub nodes_per_function: usize,
    /// re_lo, re_hi, im_lo, im_hi.
    pub node_box: (f64, f64, f64, f64),
    pub measure: MeasureConfig,
    /// When set, the unweighted first-derivative ratio must stay at or
    /// under this bound; exceeding it is a reported finding.
    pub classical_bound: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedConfig {
    pub measure: MeasureConfig,
    pub epsilon: Option<f64>,
    /// Carleson threshold for the restricted geometric test; needs
    /// `epsilon`.
    pub bound: Option<f64>,
    pub p: Option<f64>,
    /// x0, y0, side triples for the square-family test; needs `p`.
    #[serde(default)]
    pub squares: Vec<(f64, f64, f64)>,
    /// Interior grid for the Poisson test and the necessity checks.
    #[serde(default)]
    pub grid: Vec<(f64, f64)>,
    pub family_count: Option<usize>,
    #[serde(default = "three_usize")]
    pub family_nodes: usize,
    pub family_box: Option<(f64, f64, f64, f64)>,
    /// x_lo, x_hi, y_lo, y_hi rectangle for the connectivity probe run
    /// under a declared level structure.
    pub connectivity_region: Option<(f64, f64, f64, f64)>,
    #[serde(default = "default_connectivity_steps")]
    pub connectivity_steps: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsetConfig {
    pub epsilon: f64,
    /// Real points whose three distances are reported.
    pub points: Vec<f64>,
    pub measure: Option<MeasureConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RieszConfig {
    pub nodes: Vec<(f64, f64)>,
    pub p: f64,
    pub gamma: f64,
    pub epsilon: f64,
    /// Explicit perturbation targets; omitted means the identity plan.
    pub targets: Option<Vec<(f64, f64)>>,
    /// Number of randomized perturbation trials; omitted skips the
    /// experiment.
    pub trials: Option<usize>,
    #[serde(default = "default_disc_radius")]
    pub disc_radius: f64,
    #[serde(default = "default_disc_directions")]
    pub disc_directions: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    #[serde(default)]
    pub masses: Vec<MassConfig>,
    #[serde(default)]
    pub segments: Vec<SegmentConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassConfig {
    /// \[re, im\] of the carrier point.
    pub at: (f64, f64),
    pub mass: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub from: (f64, f64),
    pub to: (f64, f64),
    pub density: f64,
}

fn one_u32() -> u32 {
    1
}

fn three_usize() -> usize {
    3
}

fn default_rel_tol() -> f64 {
    1e-8
}

fn default_abs_tol() -> f64 {
    1e-10
}

fn default_max_panels() -> usize {
    20_000
}

fn default_disc_radius() -> f64 {
    0.1
}

fn default_disc_directions() -> usize {
    8
}

fn default_connectivity_steps() -> usize {
    48
}

pub fn complex(pair: (f64, f64)) -> Complex64 {
    Complex64::new(pair.0, pair.1)
}

pub fn parse(text: &str) -> Result<ExperimentConfig, String> {
    toml::from_str(text).map_err(|e| format!("config parse error: {e}"))
}

pub fn build_symbol(cfg: &SymbolConfig) -> Result<SymbolFunction, String> {
    match cfg.kind {
        SymbolKind::Zero => {
            if !cfg.zeros.is_empty() || cfg.singular.is_some() || !cfg.pieces.is_empty() {
                return Err(
                    "symbol kind \"zero\" takes no zeros, singular, or pieces data".into(),
                );
            }
            Ok(SymbolFunction::zero())
        }
        SymbolKind::Factored => {
            let blaschke = BlaschkeData {
                zeros: cfg
                    .zeros
                    .iter()
                    .map(|z| BlaschkeZero {
                        location: Complex64::new(z.re, z.im),
                        multiplicity: z.multiplicity,
                        phase: z.phase,
                    })
                    .collect(),
            };
            let singular = match &cfg.singular {
                None => SingularData::default(),
                Some(s) => SingularData {
                    exp_mass: s.exp_mass,
                    atoms: s
                        .atoms
                        .iter()
                        .map(|a| SingularAtom {
                            location: a.location,
                            mass: a.mass,
                        })
                        .collect(),
                },
            };
            let outer = OuterData {
                pieces: cfg
                    .pieces
                    .iter()
                    .map(|p| {
                        if !(p.modulus > 0.0 && p.modulus < 1.0) {
                            return Err(format!(
                                "piece modulus {} outside (0, 1)",
                                p.modulus
                            ));
                        }
                        Ok(OuterPiece {
                            lower: p.lower,
                            upper: p.upper,
                            level: p.modulus.ln(),
                        })
                    })
                    .collect::<Result<Vec<_>, String>>()?,
            };
            SymbolFunction::factored(blaschke, singular, outer)
                .map_err(|e| format!("invalid symbol: {e}"))
        }
    }
}

pub fn build_spec(cfg: &QuadratureConfig) -> Result<QuadratureSpec, String> {
    if !(1e-14..=1e-2).contains(&cfg.rel_tol) {
        return Err(format!(
            "quadrature rel_tol {} outside supported range [1e-14, 1e-2]",
            cfg.rel_tol
        ));
    }
    if !(cfg.abs_tol > 0.0) || !cfg.abs_tol.is_finite() {
        return Err(format!("quadrature abs_tol {} must be positive", cfg.abs_tol));
    }
    if cfg.max_panels == 0 {
        return Err("quadrature max_panels must be at least 1".into());
    }
    Ok(QuadratureSpec {
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        max_panels: cfg.max_panels,
    })
}

pub fn build_measure(cfg: &MeasureConfig) -> Result<DiscreteMeasure, String> {
    let masses: Vec<PointMass> = cfg
        .masses
        .iter()
        .map(|m| PointMass {
            position: complex(m.at),
            mass: m.mass,
        })
        .collect();
    let segments: Vec<SegmentMass> = cfg
        .segments
        .iter()
        .map(|s| SegmentMass {
            start: complex(s.from),
            end: complex(s.to),
            density: s.density,
        })
        .collect();
    DiscreteMeasure::new(masses, segments).map_err(|e| format!("invalid measure: {e}"))
}
