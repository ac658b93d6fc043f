use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use mflq::examples::{EXAMPLE_5_2_JSON, EXAMPLE_6_1_JSON};
use mflq::model::config::parse_spec;
use mflq::model::{embed_perturbation, validate_spec};
use mflq::operators::{build_section, check_necessary_condition, OperatorSection, SignReport};
use mflq::perturbation::{classify_family, EpsSchedule, Verdict, BOUNDED_EXPONENT, DIVERGENT_EXPONENT};
use mflq::riccati::{
    check_comparison, check_strong_regularity, solve_control_riccati, solve_game_riccati, solve_mean_riccati,
    RiccatiOptions, COMPARISON_TOL,
};
use mflq::synthesis::{
    build_feedback, default_directions, evaluate_functional, evaluate_functional_mc, gain_residual, propagate_moments,
    stationarity_residual, verify_saddle, ControlLaw, NoiseBundle, SaddleReport, ValueReport, DEFAULT_LAMBDAS,
};
use mflq::{GameSpec, Player, TimeGrid, Vector};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::candidate;
use crate::cli::{Command, GameArgs, McArgs};
use crate::report::{write, Check, RunReport};

/// Tolerance on the feedback optimality identities.
pub const IDENTITY_TOL: f64 = 1e-8;
const BREAKDOWN_HINT: &str =
    "Riccati solve failed; the uniform convexity-concavity condition may not hold (try --embed-eps)";

pub struct Loaded {
    pub spec: GameSpec,
    pub hash: String,
    pub source: String,
}

pub fn hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn bundled(id: &str) -> &'static str {
    match id {
        "61" => EXAMPLE_6_1_JSON,
        _ => EXAMPLE_5_2_JSON,
    }
}

fn load(args: &GameArgs) -> Result<Loaded> {
    let (text, source) = match (&args.source.config, &args.source.example) {
        (Some(path), _) => (
            std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?,
            path.display().to_string(),
        ),
        (None, Some(id)) => (bundled(id).to_string(), format!("example {id}")),
        (None, None) => bail!("either --config or --example is required"),
    };
    let mut spec = parse_spec(&text)?;
    if let Some(eps) = args.embed_eps {
        spec = embed_perturbation(&spec, eps)?;
    }
    Ok(Loaded { spec, hash: hash(&text), source })
}

fn initial_state(args: &GameArgs, n: usize) -> Result<Vector> {
    match &args.x {
        None => Ok(Vector::from_element(n, 1.0)),
        Some(v) if v.len() == n && v.iter().all(|c| c.is_finite()) => Ok(Vector::from_column_slice(v)),
        Some(v) => bail!("--x has {} finite entries but the state dimension is {n}", v.len()),
    }
}

pub fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn grid_for(spec: &GameSpec, steps: u64) -> Result<TimeGrid> {
    Ok(TimeGrid::new(spec.horizon, steps as usize)?)
}

/// Largest block count not above `cap` that divides the grid.
pub fn section_blocks(steps: usize, cap: usize) -> usize {
    (1..=cap.min(steps)).rev().find(|b| steps.is_multiple_of(*b)).unwrap_or(1)
}

pub fn run(command: Command) -> Result<bool> {
    match command {
        Command::Solve { game, mc } => solve(&game, &mc),
        Command::Check { game, blocks, tol } => check(&game, blocks, tol),
        Command::Perturb { game, eps0, eps_factor, eps_steps, tol } => {
            perturb(&game, &EpsSchedule::new(eps0, eps_factor, eps_steps)?, tol)
        }
        Command::Verify { game, candidate, tol, mc } => verify(&game, &candidate, tol, &mc),
        Command::Reproduce { id, grid, out } => crate::reproduce::run(&id, grid as usize, &out),
    }
}

/// Emits the report on stdout and into `out/report.json`.
pub fn emit(report: &mut RunReport, out: &Path) -> Result<bool> {
    let passed = report.finish();
    let text = report.to_json();
    write(out, "report.json", &text)?;
    println!("{text}");
    Ok(passed)
}

fn value_checks(report: &mut RunReport, spec: &GameSpec, law: &ControlLaw, x: &Vector, grid: &TimeGrid, mc: &McArgs, reference: Option<f64>) -> Result<ValueReport> {
    let exact = report.timed("value", || evaluate_functional(spec, law, x, grid))?;
    let scale = 1.0 + x.norm_squared();
    if let Some(v) = reference {
        report.check(Check::within("J(x; saddle) vs <Pi(0)x, x>", exact.value, v, 1e-4 * scale));
    }
    if mc.paths > 0 {
        let noise = NoiseBundle::new(mc.seed, mc.paths);
        let sampled = report.timed("monte_carlo", || evaluate_functional_mc(spec, law, x, grid, &noise))?;
        let tol = (3.0 * sampled.stderr).max(1e-12 * (1.0 + exact.value.abs()));
        report.check(Check::within("Monte Carlo value vs moments", sampled.value, exact.value, tol));
        report.stage("monte_carlo", &sampled);
    }
    report.stage("value", &exact);
    Ok(exact)
}

fn solve(args: &GameArgs, mc: &McArgs) -> Result<bool> {
    let loaded = load(args)?;
    let spec = &loaded.spec;
    let x = initial_state(args, spec.n)?;
    let grid = grid_for(spec, args.grid)?;
    prepare_out(&args.out)?;
    let mut report = RunReport::new("solve", loaded.hash.clone(), loaded.source.clone());
    report.stage("validation", validate_spec(spec));
    report.stage("x", x.as_slice());

    let opts = RiccatiOptions::default();
    let p = report.timed("riccati", || solve_game_riccati(spec, &grid, &opts)).context(BREAKDOWN_HINT)?;
    let pi = report.timed("riccati", || solve_mean_riccati(spec, &p, &grid, &opts)).context(BREAKDOWN_HINT)?;
    let law = Arc::new(report.timed("feedback", || build_feedback(spec, &p, &pi, &opts)).context(BREAKDOWN_HINT)?);

    let regularity = check_strong_regularity(&p, spec, opts.delta);
    let min_margin = regularity.minima().into_iter().fold(f64::INFINITY, f64::min);
    report.check(Check::at_least("strong regularity margin", min_margin, opts.delta));
    report.stage(
        "riccati",
        json!({
            "game_residual": p.residual_norm,
            "mean_residual": pi.residual_norm,
            "max_asymmetry": p.max_asymmetry.max(pi.max_asymmetry),
            "margins": regularity.minima(),
            "delta": opts.delta,
            "max_substeps": p.substeps.iter().max(),
        }),
    );

    let comparison = report.timed("comparison", || -> mflq::Result<_> {
        let p1 = solve_control_riccati(spec, Player::One, &grid, &opts)?;
        let p2 = solve_control_riccati(spec, Player::Two, &grid, &opts)?;
        check_comparison(&p, &p1, &p2, COMPARISON_TOL)
    });
    match comparison {
        Ok(c) => {
            report.check(Check::at_least("comparison margin min(P - P1, P2 - P)", c.min_lower.min(c.min_upper), -c.tol));
            report.stage("comparison", json!({ "min_lower": c.min_lower, "min_upper": c.min_upper, "tol": c.tol }));
        }
        Err(e) => report.stage("comparison", json!({ "unavailable": e.to_string() })),
    }

    let residual = stationarity_residual(spec, &law, &p, &pi);
    report.check(Check::at_most("feedback identity residual", residual, IDENTITY_TOL));
    let value = law.value_at(&x);
    report.stage("saddle_value", json!({ "value": value, "formula": "<Pi(0)x, x>" }));
    let closed_loop = ControlLaw::feedback(law.clone());
    value_checks(&mut report, spec, &closed_loop, &x, &grid, mc, Some(value))?;

    let moments = report.timed("moments", || propagate_moments(spec, &closed_loop, &x, &grid))?;
    write(&args.out, "P.csv", &p.to_csv())?;
    write(&args.out, "Pi.csv", &pi.to_csv())?;
    write(&args.out, "feedback.csv", &law.to_csv())?;
    write(&args.out, "moments.csv", &moments.to_csv())?;
    emit(&mut report, &args.out)
}

pub fn section_stage(section: &OperatorSection, sign: &SignReport) -> serde_json::Value {
    json!({
        "blocks": section.blocks,
        "dims": section.dims(),
        "min_eig_m11": sign.min_eig_m11,
        "max_eig_m22": sign.max_eig_m22,
        "tol": sign.tol,
        "passed": sign.passed,
        "conclusive": sign.conclusive,
        "note": sign.note,
        "witness": sign.witness,
    })
}

fn witness_csv(section: &OperatorSection, sign: &SignReport) -> Option<String> {
    let w = sign.witness.as_ref()?;
    let coef = Vector::from_column_slice(&w.coefficients);
    let mut out = String::from("coordinate,block,t_start,t_end,control\n");
    let len = section.horizon / section.blocks as f64;
    for c in 0..section.m1 + section.m2 {
        for b in 0..section.blocks {
            out.push_str(&format!(
                "{c},{b},{},{},{}\n",
                b as f64 * len,
                (b + 1) as f64 * len,
                section.control_value(&coef, c, b)
            ));
        }
    }
    Some(out)
}

fn check(args: &GameArgs, blocks: Option<usize>, tol: f64) -> Result<bool> {
    let loaded = load(args)?;
    let spec = &loaded.spec;
    let grid = grid_for(spec, args.grid)?;
    let blocks = blocks.unwrap_or_else(|| section_blocks(grid.steps(), crate::cli::defaults::SECTION_BLOCKS));
    prepare_out(&args.out)?;
    let mut report = RunReport::new("check", loaded.hash.clone(), loaded.source.clone());
    report.stage("validation", validate_spec(spec));
    let section = report.timed("section", || build_section(spec, &grid, blocks))?;
    let sign = check_necessary_condition(&section, tol);
    report.check(Check::at_least("lambda_min(M11)", sign.min_eig_m11, -tol));
    report.check(Check::at_most("lambda_max(M22)", sign.max_eig_m22, tol));
    report.stage("section", section_stage(&section, &sign));
    write(&args.out, "section_M.csv", &section.m_csv())?;
    if let Some(csv) = witness_csv(&section, &sign) {
        write(&args.out, "witness.csv", &csv)?;
    }
    emit(&mut report, &args.out)
}

fn perturb(args: &GameArgs, schedule: &EpsSchedule, tol: f64) -> Result<bool> {
    let loaded = load(args)?;
    let spec = &loaded.spec;
    let x = initial_state(args, spec.n)?;
    let grid = grid_for(spec, args.grid)?;
    prepare_out(&args.out)?;
    let mut report = RunReport::new("perturb", loaded.hash.clone(), loaded.source.clone());
    report.stage("validation", validate_spec(spec));
    report.stage("x", x.as_slice());

    let blocks = section_blocks(grid.steps(), crate::cli::defaults::SECTION_BLOCKS);
    let section = report.timed("precheck", || build_section(spec, &grid, blocks))?;
    let sign = check_necessary_condition(&section, crate::cli::defaults::SECTION_TOL);
    report.stage("precheck", section_stage(&section, &sign));
    if !sign.passed {
        // A violated sign condition already rules out an open-loop saddle.
        report.stage("verdict", json!({ "verdict": Verdict::NotSolvable, "by": "section certificate" }));
        report.check(Check::flag("decisive verdict", true));
        if let Some(csv) = witness_csv(&section, &sign) {
            write(&args.out, "witness.csv", &csv)?;
        }
        return emit(&mut report, &args.out);
    }

    let family = report.timed("family", || classify_family(spec, schedule, &x, &grid, tol))?;
    write(&args.out, "eps_family.csv", &family.to_csv())?;
    match family.verdict {
        Verdict::NotSolvable => {
            report.check(Check::at_least("norm growth exponent", family.fit.exponent, DIVERGENT_EXPONENT));
        }
        Verdict::Solvable => {
            report.check(Check::at_most("norm growth exponent", family.fit.exponent, BOUNDED_EXPONENT));
            let last = *family.distances.last().expect("solvable families have distances");
            report.check(Check::at_most("final successive distance", last, tol));
            let saddle = family.saddle.as_ref().expect("solvable families carry a saddle check");
            report.check(Check::at_most("limit saddle |linear term|", saddle.max_abs_linear, tol));
            report.check(Check::flag("limit saddle verification", saddle.passed));
            let limit = family.iterates.last().expect("non-empty schedule");
            write(&args.out, "limit_feedback.csv", &limit.feedback.to_csv())?;
        }
        Verdict::Inconclusive => report.check(Check::flag("decisive verdict", false)),
    }
    report.stage("family", &family);
    emit(&mut report, &args.out)
}

pub fn expansion_csv(saddle: &SaddleReport) -> String {
    let mut out = String::from("player,direction,lambda,linear,quadratic,passed\n");
    for e in &saddle.entries {
        out.push_str(&format!("{},{},{},{},{},{}\n", e.player, e.direction, e.lambda, e.linear, e.quadratic, e.passed));
    }
    out
}

fn verify(args: &GameArgs, path: &Path, tol: f64, mc: &McArgs) -> Result<bool> {
    let loaded = load(args)?;
    let spec = &loaded.spec;
    let x = initial_state(args, spec.n)?;
    let grid = grid_for(spec, args.grid)?;
    let cand = candidate::load(path, spec)?;
    prepare_out(&args.out)?;
    let mut report = RunReport::new("verify", loaded.hash.clone(), loaded.source.clone());
    report.stage("validation", validate_spec(spec));
    report.stage("x", x.as_slice());
    report.stage("candidate", json!({ "path": path.display().to_string(), "has_gains": cand.has_gains }));

    let saddle = report.timed("verify", || {
        verify_saddle(spec, &cand.law, &x, &grid, &default_directions(spec), &DEFAULT_LAMBDAS, tol)
    })?;
    report.check(Check::at_most("max |linear term|", saddle.max_abs_linear, tol));
    report.check(Check::flag("saddle expansion signs", saddle.passed));
    write(&args.out, "expansion.csv", &expansion_csv(&saddle))?;

    if cand.has_gains {
        let opts = RiccatiOptions::default();
        let solved = solve_game_riccati(spec, &grid, &opts).and_then(|p| {
            let pi = solve_mean_riccati(spec, &p, &grid, &opts)?;
            Ok((p, pi))
        });
        match solved {
            Ok((p, pi)) => {
                let mut theta = Vec::with_capacity(grid.len());
                let mut theta_bar = Vec::with_capacity(grid.len());
                for t in grid.nodes() {
                    let (a, b) = cand.law.gains_at(spec, t, mflq::model::Side::Right)?;
                    theta.push(a);
                    theta_bar.push(b);
                }
                let r = gain_residual(spec, &theta, &theta_bar, &p, &pi);
                report.check(Check::at_most("candidate gain identity residual", r, IDENTITY_TOL));
            }
            Err(e) => report.stage("gain_identities", json!({ "unavailable": e.to_string() })),
        }
    } else {
        report.stage("gain_identities", json!({ "unavailable": "candidate has no feedback gains" }));
    }
    value_checks(&mut report, spec, &cand.law, &x, &grid, mc, None)?;
    report.stage("saddle", &saddle);
    emit(&mut report, &args.out)
}
