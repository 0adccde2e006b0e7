//! One runner per subcommand. Each runner validates its block, runs the
//! campaign, and writes `manifest.txt`, a CSV table, and `summary.txt`
//! into the output directory. Findings (property violations) still write
//! their reports before the run is flagged.

use num_complex::Complex64;

use hbspace::bernstein::{
    bernstein_ratio, classical_derivative_ratio, random_kernel_family, NodeBox,
};
use hbspace::embedding::{
    connectivity_probe, embedding_check_thm61, embedding_check_thm62,
    empirical_embedding_constant, kernel_poisson_test, necessity_bound_at, EmbeddingError,
};
use hbspace::geometry::{carleson_constant, vanishing_carleson_check, CarlesonSquare, LevelSetOracle};
use hbspace::quad::QuadratureSpec;
use hbspace::riesz::{
    carleson_sequence_test, corollary73_check, disc_norm_ratios, gram_bounds,
    perturbation_experiment, stability_functional, KernelSystem, PerturbationPlan, RieszError,
};
use hbspace::symbol::SymbolFunction;
use hbspace::weights::{conjugate_exponent, weight, WeightError};

use crate::config::{self, ExperimentConfig};
use crate::report::{cell, manifest, RunDir, Table};
use crate::CliError;

pub struct RunContext<'a> {
    pub command: &'static str,
    pub config: &'a ExperimentConfig,
    pub config_text: &'a str,
    pub symbol: SymbolFunction,
    pub spec: QuadratureSpec,
    pub seed: u64,
    pub out: RunDir,
}

impl RunContext<'_> {
    fn write_manifest(&self) -> Result<(), CliError> {
        self.out
            .write(
                "manifest.txt",
                &manifest(self.command, self.seed, &self.spec, self.config_text),
            )
            .map_err(CliError::Config)
    }

    fn write(&self, name: &str, content: &str) -> Result<(), CliError> {
        self.out.write(name, content).map_err(CliError::Config)
    }
}

fn numerical<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numerical(format!("{e}"))
}

fn config_error<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(format!("{e}"))
}

fn map_weight(e: WeightError) -> CliError {
    match e {
        WeightError::BadP(_)
        | WeightError::BadQ(_)
        | WeightError::BadOrder(_)
        | WeightError::LowerHalfPlane { .. } => config_error(e),
        other => numerical(other),
    }
}

fn map_embed(e: EmbeddingError) -> CliError {
    match e {
        EmbeddingError::EmptySquares
        | EmbeddingError::BadGrid
        | EmbeddingError::SupportLeak { .. }
        | EmbeddingError::SegmentLeak { .. }
        | EmbeddingError::BadP(_)
        | EmbeddingError::EmptyFamily
        | EmbeddingError::BadRegion => config_error(e),
        other => numerical(other),
    }
}

fn map_riesz(e: RieszError) -> CliError {
    match e {
        RieszError::EmptySystem
        | RieszError::NodeNotInterior { .. }
        | RieszError::BadP(_)
        | RieszError::BadGamma(_)
        | RieszError::BadEpsilon(_)
        | RieszError::BadRadius(_)
        | RieszError::NoTrials
        | RieszError::PlanMismatch { .. } => config_error(e),
        RieszError::BaselineUnstable { .. } => CliError::Findings(format!("{e}")),
        other => numerical(other),
    }
}

pub fn eval(ctx: &RunContext) -> Result<(), CliError> {
    let block = ctx
        .config
        .eval
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no [eval] block".into()))?;
    if block.order > 4 {
        return Err(CliError::Config(format!(
            "eval order {} exceeds the jet depth 4",
            block.order
        )));
    }
    if block.points.is_empty() {
        return Err(CliError::Config("eval needs at least one point".into()));
    }
    let mut table = Table::new(&["re", "im", "order", "value_re", "value_im"]);
    for &pt in &block.points {
        let z = config::complex(pt);
        for m in 0..=block.order {
            let v = if m == 0 {
                ctx.symbol.eval(z)
            } else {
                ctx.symbol.derivative(z, m)
            }
            .map_err(config_error)?;
            table.push(vec![cell(z.re), cell(z.im), cell(m), cell(v.re), cell(v.im)]);
        }
    }
    ctx.write_manifest()?;
    ctx.write("eval.csv", &table.to_csv())?;
    ctx.write(
        "summary.txt",
        &format!(
            "eval: {} points, jet order {}\n",
            block.points.len(),
            block.order
        ),
    )
}

pub fn weight_sweep(ctx: &RunContext) -> Result<(), CliError> {
    let block = ctx
        .config
        .weight_sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no [weight_sweep] block".into()))?;
    if block.points.is_empty() {
        return Err(CliError::Config("weight sweep needs at least one point".into()));
    }
    let mut table = Table::new(&[
        "re",
        "im",
        "weight",
        "kernel_norm",
        "rho_norm",
        "quadrature_error",
        "panels",
    ]);
    let mut min_w = f64::INFINITY;
    let mut max_w = 0.0f64;
    for &pt in &block.points {
        let z = config::complex(pt);
        let ev = weight(&ctx.symbol, z, block.p, block.order, &ctx.spec).map_err(map_weight)?;
        min_w = min_w.min(ev.weight);
        max_w = max_w.max(ev.weight);
        table.push(vec![
            cell(z.re),
            cell(z.im),
            cell(ev.weight),
            cell(ev.kernel_norm),
            cell(ev.rho_norm),
            cell(ev.quadrature_error),
            cell(ev.panels),
        ]);
    }
    ctx.write_manifest()?;
    ctx.write("weights.csv", &table.to_csv())?;
    ctx.write(
        "summary.txt",
        &format!(
            "weight sweep: p {} q {} order {} over {} points\nweight range: [{}, {}]\n",
            block.p,
            conjugate_exponent(block.p),
            block.order,
            block.points.len(),
            min_w,
            max_w
        ),
    )
}

pub fn bernstein(ctx: &RunContext) -> Result<(), CliError> {
    let block = ctx
        .config
        .bernstein
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no [bernstein] block".into()))?;
    if !(block.p > 1.0 && block.p < 2.0) {
        return Err(CliError::Config(format!(
            "bernstein p = {} outside (1, 2)",
            block.p
        )));
    }
    if !(1..=2).contains(&block.order) {
        return Err(CliError::Config(format!(
            "bernstein order {} outside 1..=2",
            block.order
        )));
    }
    let (re_lo, re_hi, im_lo, im_hi) = block.node_box;
    let node_box = NodeBox {
        re_lo,
        re_hi,
        im_lo,
        im_hi,
    };
    let family = random_kernel_family(
        &ctx.symbol,
        block.count,
        block.nodes_per_function,
        node_box,
        ctx.seed,
    )
    .map_err(config_error)?;
    let mu = config::build_measure(&block.measure).map_err(CliError::Config)?;
    let report = bernstein_ratio(&ctx.symbol, block.p, block.order, &mu, &family, &ctx.spec)
        .map_err(numerical)?;

    let mut table = Table::new(&["index", "numerator", "space_norm", "ratio"]);
    for f in &report.per_function {
        table.push(vec![
            cell(f.index),
            cell(f.numerator),
            cell(f.space_norm),
            cell(f.ratio),
        ]);
    }
    let mut summary = format!(
        "bernstein: p {} order {} family {} x {} nodes\ncarleson constant: {}\nmax weighted ratio: {}\n",
        report.p,
        report.order,
        block.count,
        block.nodes_per_function,
        report.carleson_constant,
        report.max_ratio
    );

    let mut finding = None;
    if let Some(bound) = block.classical_bound {
        let classical =
            classical_derivative_ratio(&ctx.symbol, &mu, &family, &ctx.spec).map_err(numerical)?;
        summary.push_str(&format!(
            "classical derivative ratio: {classical} (bound {bound})\n"
        ));
        if classical > bound {
            finding = Some(format!(
                "classical derivative ratio {classical} exceeds the configured bound {bound}"
            ));
        }
    }

    ctx.write_manifest()?;
    ctx.write("bernstein.csv", &table.to_csv())?;
    ctx.write("summary.txt", &summary)?;
    match finding {
        Some(msg) => Err(CliError::Findings(msg)),
        None => Ok(()),
    }
}

pub fn embed(ctx: &RunContext) -> Result<(), CliError> {
    let block = ctx
        .config
        .embed
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no [embed] block".into()))?;
    let mu = config::build_measure(&block.measure).map_err(CliError::Config)?;
    let mut summary = String::new();

    match (block.epsilon, block.bound) {
        (Some(eps), Some(bound)) => {
            let verdict = embedding_check_thm61(&ctx.symbol, eps, &mu, bound).map_err(map_embed)?;
            summary.push_str(&format!(
                "restricted carleson test (epsilon {}, bound {}): constant {} over {} of {} candidate squares -> {}\n",
                eps,
                bound,
                verdict.check.constant,
                verdict.check.qualifying,
                verdict.check.candidates,
                if verdict.check.passes { "pass" } else { "fail" }
            ));
            if let Some(w) = verdict.check.worst {
                summary.push_str(&format!(
                    "worst square: x0 {} y0 {} side {}\n",
                    w.x0(),
                    w.y0(),
                    w.side()
                ));
            }
        }
        (None, None) => {}
        _ => {
            return Err(CliError::Config(
                "the restricted test needs both epsilon and bound".into(),
            ))
        }
    }

    if !block.squares.is_empty() {
        let p = block.p.ok_or_else(|| {
            CliError::Config("the square-family test needs p alongside squares".into())
        })?;
        let squares: Vec<CarlesonSquare> = block
            .squares
            .iter()
            .map(|&(x0, y0, side)| CarlesonSquare::new(x0, y0, side).map_err(config_error))
            .collect::<Result<_, _>>()?;
        let rep =
            embedding_check_thm62(&ctx.symbol, &squares, &mu, p, &ctx.spec).map_err(map_embed)?;
        summary.push_str(&format!(
            "square-family test (p {}): lower-side constant {} slice supremum {} mass ratio {} -> {}\n",
            rep.p,
            rep.cond1_constant,
            rep.cond2_constant,
            rep.mass_ratio,
            if rep.passes { "pass" } else { "fail" }
        ));
        if let Some(worst) = rep.cond2_worst {
            summary.push_str(&format!(
                "worst slice: square {} height {} value {}\n",
                worst.square_index, worst.height, worst.value
            ));
        }
    }

    let mut table = Table::new(&[
        "re",
        "im",
        "poisson_value",
        "kernel_ratio_sq",
        "bound",
        "satisfied",
    ]);
    let mut violations = 0usize;
    if !block.grid.is_empty() {
        let grid: Vec<Complex64> = block.grid.iter().map(|&p| config::complex(p)).collect();
        let poisson = kernel_poisson_test(&ctx.symbol, &mu, &grid).map_err(map_embed)?;
        let label = if ctx.config.symbol.cls {
            "declared connected level structure: the supremum characterizes the embedding"
        } else {
            "level structure undeclared: the supremum is a necessary bound only"
        };
        summary.push_str(&format!(
            "poisson supremum: {} at {}+{}i ({label})\n",
            poisson.supremum,
            poisson.witness.map(|w| w.re).unwrap_or(f64::NAN),
            poisson.witness.map(|w| w.im).unwrap_or(f64::NAN),
        ));
        for &z in &grid {
            let check = necessity_bound_at(&ctx.symbol, &mu, z, &ctx.spec).map_err(map_embed)?;
            if !check.satisfied {
                violations += 1;
            }
            table.push(vec![
                cell(z.re),
                cell(z.im),
                cell(check.poisson_value),
                cell(check.kernel_ratio_sq),
                cell(check.bound),
                cell(check.satisfied),
            ]);
        }
        summary.push_str(&format!(
            "necessity inequality: {} of {} grid points satisfied\n",
            grid.len() - violations,
            grid.len()
        ));
    }

    if ctx.config.symbol.cls {
        if let Some(region) = block.connectivity_region {
            let eps = block.epsilon.ok_or_else(|| {
                CliError::Config("the connectivity probe needs epsilon".into())
            })?;
            let probe = connectivity_probe(&ctx.symbol, eps, region, block.connectivity_steps)
                .map_err(map_embed)?;
            summary.push_str(&format!(
                "connectivity probe: {} components over {} cells ({} members)\n",
                probe.components, probe.sampled, probe.members
            ));
            if probe.components != 1 {
                summary.push_str(&format!(
                    "warning: sampled level set splits into {} components; the declared structure may not hold\n",
                    probe.components
                ));
            }
        }
    }

    if let Some(count) = block.family_count {
        let (re_lo, re_hi, im_lo, im_hi) = block.family_box.ok_or_else(|| {
            CliError::Config("the empirical constant needs family_box".into())
        })?;
        let family = random_kernel_family(
            &ctx.symbol,
            count,
            block.family_nodes,
            NodeBox {
                re_lo,
                re_hi,
                im_lo,
                im_hi,
            },
            ctx.seed,
        )
        .map_err(config_error)?;
        let constant =
            empirical_embedding_constant(&ctx.symbol, &mu, &family, &ctx.spec).map_err(map_embed)?;
        summary.push_str(&format!(
            "empirical embedding constant over {count} functions: {constant}\n"
        ));
    }

    ctx.write_manifest()?;
    ctx.write("embed.csv", &table.to_csv())?;
    ctx.write("summary.txt", &summary)?;
    if violations > 0 {
        return Err(CliError::Findings(format!(
            "necessity inequality violated at {violations} grid points"
        )));
    }
    Ok(())
}

pub fn levelset(ctx: &RunContext) -> Result<(), CliError> {
    let block = ctx
        .config
        .levelset
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no [levelset] block".into()))?;
    if block.points.is_empty() {
        return Err(CliError::Config("levelset needs at least one point".into()));
    }
    let oracle =
        LevelSetOracle::new(ctx.symbol.clone(), block.epsilon).map_err(config_error)?;
    let mut table = Table::new(&[
        "x",
        "spectrum_distance",
        "level_distance",
        "extended_distance",
        "level_capped",
    ]);
    for &x in &block.points {
        let d = oracle.distances(x).map_err(numerical)?;
        table.push(vec![
            cell(x),
            cell(d.spectrum_distance),
            cell(d.level_distance),
            cell(d.extended_distance),
            cell(d.level_capped),
        ]);
    }
    let spectrum = oracle.boundary_spectrum();
    let mut summary = format!("level set oracle at epsilon {}\n", block.epsilon);
    if spectrum.entire_line {
        summary.push_str("boundary spectrum: entire real line\n");
    } else {
        let points: Vec<String> = spectrum.points.iter().map(|&x| cell(x)).collect();
        let intervals: Vec<String> = spectrum
            .intervals
            .iter()
            .map(|&(a, b)| format!("[{a}, {b}]"))
            .collect();
        summary.push_str(&format!(
            "boundary spectrum points: [{}]\nboundary spectrum intervals: [{}]\n",
            points.join(", "),
            intervals.join(", ")
        ));
    }
    if let Some(mc) = &block.measure {
        let mu = config::build_measure(mc).map_err(CliError::Config)?;
        let vanishing = vanishing_carleson_check(&mu, &oracle);
        summary.push_str(&format!(
            "plain carleson constant: {}\nvanishing at small scales: {} ({} blocking atoms)\n",
            carleson_constant(&mu),
            vanishing.vanishing,
            vanishing.blocking_atoms.len()
        ));
    }
    ctx.write_manifest()?;
    ctx.write("levelset.csv", &table.to_csv())?;
    ctx.write("summary.txt", &summary)
}

pub fn riesz(ctx: &RunContext) -> Result<(), CliError> {
    let block = ctx
        .config
        .riesz
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no [riesz] block".into()))?;
    let nodes: Vec<Complex64> = block.nodes.iter().map(|&p| config::complex(p)).collect();
    let system = KernelSystem::new(&ctx.symbol, &nodes).map_err(map_riesz)?;
    let baseline = gram_bounds(&system);
    let separation = carleson_sequence_test(&nodes).map_err(map_riesz)?;
    let targets: Vec<Complex64> = match &block.targets {
        Some(t) => t.iter().map(|&p| config::complex(p)).collect(),
        None => nodes.clone(),
    };
    let plan = PerturbationPlan::new(&targets, block.p, block.gamma, block.epsilon)
        .map_err(map_riesz)?;
    let functional = stability_functional(&system, &plan, &ctx.spec).map_err(map_riesz)?;
    let criterion = corollary73_check(&system, &plan).map_err(map_riesz)?;
    let ratios = disc_norm_ratios(&system, block.disc_radius, block.disc_directions)
        .map_err(map_riesz)?;

    let mut summary = format!(
        "riesz system of {} kernels\nbaseline: lambda_min {} lambda_max {} condition {}\nseparation product: {}\nplan functional: {}\nplan within criterion: {}\n",
        system.len(),
        baseline.lambda_min,
        baseline.lambda_max,
        baseline.condition,
        separation,
        functional.supremum,
        criterion.all_within
    );
    let ratio_cells: Vec<String> = ratios.iter().map(|&r| cell(r)).collect();
    summary.push_str(&format!(
        "kernel norm spread over radius-{} discs: [{}]\n",
        block.disc_radius,
        ratio_cells.join(", ")
    ));

    let mut table = Table::new(&[
        "index",
        "scale",
        "within_criterion",
        "functional",
        "min_margin",
        "lambda_min",
        "lambda_max",
        "condition",
        "stable",
    ]);
    let mut finding = None;
    if let Some(trials) = block.trials {
        let report =
            perturbation_experiment(&system, &plan, trials, ctx.seed, &ctx.spec).map_err(map_riesz)?;
        for t in &report.trials {
            table.push(vec![
                cell(t.index),
                cell(t.scale),
                cell(t.within_criterion),
                cell(t.functional),
                cell(t.min_margin),
                cell(t.bounds.lambda_min),
                cell(t.bounds.lambda_max),
                cell(t.bounds.condition),
                cell(t.stable),
            ]);
        }
        summary.push_str(&format!(
            "experiment: {} trials, epsilon_star {}, boundary scale {}\nverdict: {}\n",
            report.trials.len(),
            report
                .epsilon_star
                .map(|v| cell(v))
                .unwrap_or_else(|| "none".into()),
            report
                .boundary_scale
                .map(|v| cell(v))
                .unwrap_or_else(|| "none".into()),
            report.verdict()
        ));
        if !report.findings.is_empty() {
            let ids: Vec<String> = report.findings.iter().map(|&i| cell(i)).collect();
            summary.push_str(&format!(
                "findings: stability not monotone in the functional at trials [{}]\n",
                ids.join(", ")
            ));
            finding = Some(format!(
                "{} trials fell below the calibrated functional threshold yet lost stability",
                report.findings.len()
            ));
        }
    }

    ctx.write_manifest()?;
    ctx.write("riesz_trials.csv", &table.to_csv())?;
    ctx.write("summary.txt", &summary)?;
    match finding {
        Some(msg) => Err(CliError::Findings(msg)),
        None => Ok(()),
    }
}
