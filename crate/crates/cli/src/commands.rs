use crate::{parse, Cli, Command, Failure, Format, StrategyArg, TargetArg};
use semidyn_core::arith::{naive_height, ProjPoint};
use semidyn_core::canonical::{
    canonical_height, check_functional_equation, HeightError, HeightEstimate, HeightOptions, Strategy,
};
use semidyn_core::local::{decompose_height, local_green, LocalError, SeriesOptions};
use semidyn_core::measures::{
    binomial_current_claim, binomial_current_claim_default, default_lambda, discrepancy_csv,
    equidistribution_experiment, iterate_potential, measure_csv, measure_from_potential,
    potential_csv, sharpen_potential, default_sharpen_depth, write_with_script, GridPotential, ClaimRow, ComplexSystem, DiscreteMeasure, EquidistributionResult,
    MeasureError,
};
use semidyn_core::orbits::{find_periodic_points, forward_orbit, is_f_periodic, OrbitError, Periodicity};
use semidyn_core::systems::{PolyMapSystem, Registration, System};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

/// A result in all three output formats.
struct Output {
    json: Value,
    csv: String,
    text: String,
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let g = &cli.global;
    if !(g.target_error > 0.0) {
        return Err(Failure::input("--target-error must be positive"));
    }
    if g.node_budget == 0 || g.depth_cap == 0 || g.digit_budget == 0 {
        return Err(Failure::input("budgets must be positive"));
    }
    let out = match &cli.command {
        Command::Height { strategy, fixed_depth } => height(cli, *strategy, *fixed_depth)?,
        Command::Orbit => orbit(cli)?,
        Command::Periodic { bound } => periodic(cli, *bound)?,
        Command::Local { place } => local(cli, place)?,
        Command::Decompose => decompose(cli)?,
        Command::Measure { resolution, iterations, sharpen } => measure(cli, *resolution, *iterations, *sharpen)?,
        Command::Equi { base, depths, target, resolution, iterations, sharpen, exceptional } => {
            equi(cli, base, depths, *target, (*resolution, *iterations, *sharpen), exceptional)?
        }
        Command::Claim { lambda_default, lambda, sequence, n_max } => claim(*lambda_default, *lambda, sequence, *n_max)?,
        Command::Check { samples, aligned } => check(cli, *samples, *aligned)?,
    };
    let body = match g.format {
        Format::Json => serde_json::to_string_pretty(&out.json).expect("json") + "\n",
        Format::Csv => out.csv,
        Format::Text => out.text,
    };
    match (&g.out, &cli.command) {
        // `measure` and `equi` use --out for their artifacts
        (Some(path), c) if !matches!(c, Command::Measure { .. } | Command::Equi { .. }) => {
            std::fs::write(path, body).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
        }
        _ => {
            print!("{body}");
            Ok(())
        }
    }
}

fn load_system(cli: &Cli) -> Result<System, Failure> {
    let path = cli.global.system.as_ref().ok_or_else(|| Failure::input("--system FILE is required"))?;
    let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    System::from_json(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_point(cli: &Cli, sys: &System) -> Result<ProjPoint, Failure> {
    let lit = cli.global.point.as_ref().ok_or_else(|| Failure::input("--point is required"))?;
    parse::point(lit, &sys.space())
}

fn height_options(cli: &Cli) -> HeightOptions {
    let g = &cli.global;
    HeightOptions {
        target_error: g.target_error,
        node_budget: g.node_budget,
        depth_cap: g.depth_cap,
        digit_budget: g.digit_budget,
        ..Default::default()
    }
}

fn height_failure(e: HeightError) -> Failure {
    match e {
        HeightError::NotInDomain(_) | HeightError::BadTarget => Failure::input(e.to_string()),
        HeightError::InequalityOnly(_) => Failure::refusal(format!("{e} (inequality-only registration)")),
        _ => Failure::refusal(e.to_string()),
    }
}

fn orbit_failure(e: OrbitError) -> Failure {
    Failure::refusal(e.to_string())
}

fn measure_failure(e: MeasureError) -> Failure {
    match e {
        MeasureError::Resolution(_) | MeasureError::NotP1 | MeasureError::Degree { .. } | MeasureError::Io(_) => {
            Failure::input(e.to_string())
        }
        _ => Failure::refusal(e.to_string()),
    }
}

fn estimate_text(e: &HeightEstimate) -> String {
    let c = match e.discrepancy_c {
        Some(c) => format!("{c:.6} ({})", if e.discrepancy_certified { "certified" } else { "empirical" }),
        None => "not needed".into(),
    };
    let mut s = format!("ĥ = {:.15} ± {:.3e}\n", e.value, e.error_radius);
    let _ = writeln!(s, "certified: {}", e.certified);
    let _ = writeln!(s, "method: {:?}, stop: {:?}, depth: {}", e.method, e.stop, e.iterations);
    let _ = writeln!(s, "orbit nodes visited: {}", e.orbit_nodes_visited);
    if let Some(n) = e.finite_orbit_size {
        let _ = writeln!(s, "finite orbit of {n} points");
    }
    let _ = writeln!(s, "discrepancy C: {c}");
    s
}

fn height(cli: &Cli, strategy: StrategyArg, fixed_depth: Option<usize>) -> Result<Output, Failure> {
    let sys = load_system(cli)?;
    let x = load_point(cli, &sys)?;
    let strategy = match strategy {
        StrategyArg::Auto => Strategy::Auto,
        StrategyArg::ExactOrbit => Strategy::ExactOrbit,
        StrategyArg::LocalSeries => Strategy::LocalSeries,
        StrategyArg::InvolutionWalk => Strategy::InvolutionWalk,
    };
    let opts = HeightOptions { strategy, fixed_depth, ..height_options(cli) };
    let e = canonical_height(sys.dynamics().as_ref(), &x, &opts).map_err(height_failure)?;
    let json = json!({
        "command": "height",
        "system": sys.label(),
        "point": x.to_string(),
        "naive_height": sys.height(&x),
        "estimate": e,
    });
    let csv = format!(
        "point,value,error_radius,certified,method,depth,finite_orbit_size\n\"{x}\",{},{},{},{:?},{},{}\n",
        e.value,
        e.error_radius,
        e.certified,
        e.method,
        e.iterations,
        e.finite_orbit_size.map(|n| n.to_string()).unwrap_or_default()
    );
    Ok(Output { json, csv, text: format!("system: {}\npoint: {x}\n{}", sys.label(), estimate_text(&e)) })
}

fn orbit(cli: &Cli) -> Result<Output, Failure> {
    let sys = load_system(cli)?;
    let x = load_point(cli, &sys)?;
    let r = forward_orbit(sys.dynamics().as_ref(), &x, cli.global.node_budget).map_err(orbit_failure)?;
    let nodes: Vec<String> = r.nodes.iter().map(|p| p.to_string()).collect();
    let json = json!({
        "command": "orbit",
        "system": sys.label(),
        "point": x.to_string(),
        "status": format!("{:?}", r.status),
        "certified": true,
        "nodes": nodes,
        "edges": r.edges,
    });
    let mut csv = String::from("index,point\n");
    for (i, p) in nodes.iter().enumerate() {
        let _ = writeln!(csv, "{i},\"{p}\"");
    }
    let mut text = format!("orbit of {x}: {:?}, {} points\n", r.status, nodes.len());
    for p in &nodes {
        let _ = writeln!(text, "  {p}");
    }
    Ok(Output { json, csv, text })
}

fn periodic(cli: &Cli, bound: Option<f64>) -> Result<Output, Failure> {
    let sys = load_system(cli)?;
    let budget = cli.global.node_budget;
    if let Some(lit) = &cli.global.point {
        let x = parse::point(lit, &sys.space())?;
        let r = is_f_periodic(sys.dynamics().as_ref(), &x, budget).map_err(orbit_failure)?;
        let witness: Option<Vec<String>> = r.witness.as_ref().map(|w| w.iter().map(|p| p.to_string()).collect());
        let verdict = match r.verdict {
            Periodicity::Periodic => "periodic",
            Periodicity::NotPeriodic => "not_periodic",
            Periodicity::BudgetExceeded => "budget_exceeded",
        };
        let json = json!({
            "command": "periodic",
            "system": sys.label(),
            "point": x.to_string(),
            "verdict": verdict,
            "certified": r.verdict != Periodicity::BudgetExceeded,
            "orbit_size": r.orbit.nodes.len(),
            "witness": witness,
        });
        let w = witness.map(|w| w.join(" ")).unwrap_or_default();
        let csv = format!("point,verdict,orbit_size,witness\n\"{x}\",{verdict},{},\"{w}\"\n", r.orbit.nodes.len());
        let text = format!("{x}: {verdict} (orbit of {} points){}\n", r.orbit.nodes.len(), if w.is_empty() { String::new() } else { format!("; witness sub-orbit {w}") });
        return Ok(Output { json, csv, text });
    }
    let bound = bound.ok_or_else(|| Failure::input("periodic needs --point or --bound"))?;
    if !(bound >= 0.0) || bound > 20.0 {
        return Err(Failure::input("--bound must lie in [0, 20]"));
    }
    if !sys.is_ample() {
        return Err(Failure::refusal("no Northcott bound: L is not ample"));
    }
    let r = find_periodic_points(sys.dynamics().as_ref(), bound, budget);
    let orbits: Vec<Value> = r
        .orbits
        .iter()
        .map(|o| json!({"representative": o.representative.to_string(), "nodes": o.nodes.iter().map(|p| p.to_string()).collect::<Vec<_>>()}))
        .collect();
    let json = json!({
        "command": "periodic",
        "system": sys.label(),
        "bound": bound,
        "orbits": orbits,
        "points_checked": r.points_checked,
        "skipped": r.skipped,
        "undecided": r.undecided,
        "certified": r.undecided == 0,
    });
    let mut csv = String::from("representative,size,nodes\n");
    let mut text = format!("{} periodic orbits among {} points of height ≤ {bound}\n", r.orbits.len(), r.points_checked);
    for o in &r.orbits {
        let nodes: Vec<String> = o.nodes.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(csv, "\"{}\",{},\"{}\"", o.representative, nodes.len(), nodes.join(" "));
        let _ = writeln!(text, "  {{{}}}", nodes.join(", "));
    }
    if r.undecided > 0 {
        let _ = writeln!(text, "{} points undecided within the node budget", r.undecided);
    }
    Ok(Output { json, csv, text })
}

fn poly_system(sys: &System) -> Result<Arc<PolyMapSystem>, Failure> {
    sys.as_poly()
        .cloned()
        .ok_or_else(|| Failure::refusal("local heights are implemented for endomorphism systems of ℙᴺ only"))
}

fn series_options(cli: &Cli) -> SeriesOptions {
    SeriesOptions { target_error: cli.global.target_error, depth_cap: cli.global.depth_cap, ..Default::default() }
}

fn local_failure(e: LocalError) -> Failure {
    match e {
        LocalError::BadLift => Failure::input(e.to_string()),
        _ => Failure::refusal(e.to_string()),
    }
}

fn local(cli: &Cli, place: &str) -> Result<Output, Failure> {
    let sys = load_system(cli)?;
    let poly = poly_system(&sys)?;
    let x = load_point(cli, &sys)?;
    let v = parse::place(place)?;
    let e = local_green(&poly, x.factor(0), &v, &series_options(cli)).map_err(local_failure)?;
    let json = json!({
        "command": "local",
        "system": sys.label(),
        "point": x.to_string(),
        "lift": x.factor(0).iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "certified": true,
        "estimate": e,
    });
    let csv = format!("place,value,error_radius,depth\n{v},{},{},{}\n", e.value, e.error_radius, e.iterations);
    let text = format!("g_{v}({x}) = {:.15} ± {:.3e} (depth {}, certified)\n", e.value, e.error_radius, e.iterations);
    Ok(Output { json, csv, text })
}

fn decompose(cli: &Cli) -> Result<Output, Failure> {
    let sys = load_system(cli)?;
    let poly = poly_system(&sys)?;
    let x = load_point(cli, &sys)?;
    let dec = decompose_height(&poly, &x, &series_options(cli)).map_err(local_failure)?;
    let json = json!({
        "command": "decompose",
        "system": sys.label(),
        "point": x.to_string(),
        "certified": true,
        "locals": dec.locals,
        "total": dec.total,
        "total_radius": dec.total_radius,
    });
    let mut csv = String::from("place,value,error_radius\n");
    let mut text = format!("ĥ({x}) = Σ_v g_v\n");
    for l in &dec.locals {
        let _ = writeln!(csv, "{},{},{}", l.place, l.value, l.error_radius);
        let _ = writeln!(text, "  {:>6}: {:.15} ± {:.3e}", l.place.to_string(), l.value, l.error_radius);
    }
    let _ = writeln!(csv, "total,{},{}", dec.total, dec.total_radius);
    let _ = writeln!(text, "  total : {:.15} ± {:.3e} (certified)", dec.total, dec.total_radius);
    Ok(Output { json, csv, text })
}

fn complex_system(sys: &System) -> Result<ComplexSystem, Failure> {
    let poly = sys.as_poly().ok_or_else(|| Failure::input("measures need an endomorphism system of ℙ¹"))?;
    ComplexSystem::from_poly_system(poly).map_err(measure_failure)
}

fn prefixed(out: &Path, suffix: &str) -> std::path::PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    out.with_file_name(name)
}

fn grid_potential(
    csys: &ComplexSystem,
    resolution: usize,
    iterations: usize,
    sharpen: Option<usize>,
) -> Result<(GridPotential, usize), Failure> {
    let p = iterate_potential(csys, None, resolution, iterations).map_err(measure_failure)?;
    let depth = sharpen.unwrap_or_else(|| default_sharpen_depth(csys.k()));
    Ok(if depth == 0 { (p, 0) } else { (sharpen_potential(csys, &p, depth), depth) })
}

fn measure(cli: &Cli, resolution: usize, iterations: usize, sharpen: Option<usize>) -> Result<Output, Failure> {
    let sys = load_system(cli)?;
    let csys = complex_system(&sys)?;
    let (p, depth) = grid_potential(&csys, resolution, iterations, sharpen)?;
    let m = measure_from_potential(&p).map_err(measure_failure)?;
    let mut files = Vec::new();
    if let Some(out) = &cli.global.out {
        let pot = prefixed(out, "_potential.csv");
        let mea = prefixed(out, "_measure.csv");
        write_with_script(&pot, &potential_csv(&p), "potential").map_err(measure_failure)?;
        write_with_script(&mea, &measure_csv(&m), "measure").map_err(measure_failure)?;
        files = vec![pot.display().to_string(), mea.display().to_string()];
    }
    let last = p.contraction_log.last().copied().unwrap_or(0.0);
    let json = json!({
        "command": "measure",
        "system": sys.label(),
        "resolution": resolution,
        "iterations": p.iterations,
        "sharpen_depth": depth,
        "contraction_log": p.contraction_log,
        // the last increment bounds the remaining iteration error up to k/d
        "error_radius": last * (p.k as f64 / p.d as f64) / (1.0 - p.k as f64 / p.d as f64),
        "certified": false,
        "contraction_violated": p.contraction_violated,
        "overlap_disagreement": p.overlap_disagreement,
        "mass_before_normalization": m.total_before_normalization,
        "clipped_negative": m.clipped_negative,
        "atoms": m.measure.atoms.len(),
        "files": files,
    });
    let csv = if cli.global.out.is_some() { String::new() } else { measure_csv(&m) };
    let mut text = format!(
        "potential: {} iterations at {resolution}², last increment {last:.3e}, chart overlap {:.3e}\n",
        p.iterations, p.overlap_disagreement
    );
    let _ = writeln!(text, "measure: raw mass {:.6}, clipped {:.3e}", m.total_before_normalization, m.clipped_negative);
    if p.contraction_violated {
        let _ = writeln!(text, "warning: contraction rate exceeded k/d beyond interpolation slack");
    }
    for f in &files {
        let _ = writeln!(text, "wrote {f}");
    }
    Ok(Output { json, csv, text })
}

fn equi(
    cli: &Cli,
    base: &str,
    depths: &str,
    target: TargetArg,
    (resolution, iterations, sharpen): (usize, usize, Option<usize>),
    exceptional: &str,
) -> Result<Output, Failure> {
    let sys = load_system(cli)?;
    let csys = complex_system(&sys)?;
    let a = parse::sphere_point(base)?;
    let depths = parse::depths(depths)?;
    if depths.iter().any(|&n| (csys.d as f64).powi(n as i32) > 5e7) {
        return Err(Failure::input("a depth would produce more than 5·10⁷ preimages"));
    }
    let blacklist = parse::sphere_points(exceptional)?;
    let mu = match target {
        TargetArg::Circle => DiscreteMeasure::unit_circle(1 << 16),
        TargetArg::Grid => {
            let (p, _) = grid_potential(&csys, resolution, iterations, sharpen)?;
            measure_from_potential(&p).map_err(measure_failure)?.measure
        }
    };
    let rows: Vec<EquidistributionResult> = depths
        .iter()
        .map(|&n| equidistribution_experiment(&csys, &a, n, &mu, &blacklist))
        .collect::<Result<_, _>>()
        .map_err(measure_failure)?;
    let table = discrepancy_csv(&rows);
    if let Some(out) = &cli.global.out {
        write_with_script(out, &table, "discrepancy").map_err(measure_failure)?;
    }
    let decreasing = rows.windows(2).all(|w| w[1].discrepancy < w[0].discrepancy);
    let json = json!({
        "command": "equi",
        "system": sys.label(),
        "base": [a.z().re, a.z().im],
        "target": format!("{target:?}").to_lowercase(),
        "rows": rows,
        "strictly_decreasing": decreasing,
        "certified": false,
    });
    let mut text = String::from("depth  points  discrepancy\n");
    for r in &rows {
        let _ = writeln!(text, "{:>5} {:>7}  {:.3e}", r.depth, r.points, r.discrepancy);
    }
    let _ = writeln!(text, "strictly decreasing: {decreasing}");
    Ok(Output { json, csv: table, text })
}

fn claim(lambda_default: bool, lambda: Option<f64>, sequence: &str, n_max: usize) -> Result<Output, Failure> {
    let s = parse::sequence(sequence)?;
    let exact = lambda_default || lambda.is_none();
    let rows: Vec<ClaimRow> = if exact {
        binomial_current_claim_default(&s, n_max)
    } else {
        let l = lambda.expect("checked");
        if !(l > 1.0) {
            return Err(Failure::input("--lambda must exceed 1"));
        }
        binomial_current_claim(l, &s, n_max)
    };
    let l = if exact { default_lambda() } else { lambda.expect("checked") };
    let json = json!({
        "command": "claim",
        "lambda": l,
        "lambda_exact": if exact { Some("7+4*sqrt(3)") } else { None },
        "limit": s.limit(),
        "sequence": s,
        "rows": rows,
        "certified": exact,
    });
    let mut csv = String::from("n,t_2n,residual\n");
    let mut text = format!("λ = {l}{}\n   n  t_2n                 |t_2n − s∞|\n", if exact { " = 7+4√3 (exact)" } else { "" });
    for r in &rows {
        let _ = writeln!(csv, "{},{},{}", r.n, r.t_2n, r.residual);
        let _ = writeln!(text, "{:>4}  {:<20.17} {:.3e}", r.n, r.t_2n, r.residual);
    }
    Ok(Output { json, csv, text })
}

fn check(cli: &Cli, samples: usize, aligned: bool) -> Result<Output, Failure> {
    let sys = load_system(cli)?;
    if let Registration::InequalityOnly { k_plus_epsilon } = sys.registration() {
        return Err(height_failure(HeightError::InequalityOnly(k_plus_epsilon)));
    }
    let points = match &cli.global.point {
        Some(lit) => vec![parse::point(lit, &sys.space())?],
        None => sys.sample_points(samples, cli.global.seed),
    };
    if points.is_empty() {
        return Err(Failure::input("no --point given and the system has no point sampler"));
    }
    let opts = height_options(cli);
    let mut reports = Vec::new();
    let mut csv = String::from("point,residual,tolerance,radius_bound,within_tolerance\n");
    let mut text = String::new();
    for x in &points {
        let r = check_functional_equation(sys.dynamics().as_ref(), x, &opts, aligned).map_err(height_failure)?;
        let _ = writeln!(csv, "\"{x}\",{},{},{},{}", r.residual, r.tolerance, r.radius_bound, r.within_tolerance());
        let _ = writeln!(
            text,
            "{x}: |Σ ĥ(f_i x) − d ĥ(x)| = {:.3e} (tolerance {:.1e}, radii {:.3e}) {}",
            r.residual,
            r.tolerance,
            r.radius_bound,
            if r.within_tolerance() { "ok" } else { "FAIL" }
        );
        reports.push(json!({"point": x.to_string(), "naive_height": naive_height(x), "report": r}));
    }
    let passed = reports.iter().filter(|r| r["report"]["residual"].as_f64() <= r["report"]["tolerance"].as_f64()).count();
    let json = json!({
        "command": "check",
        "system": sys.label(),
        "aligned": aligned,
        "points": reports,
        "passed": passed,
        "total": points.len(),
    });
    let _ = writeln!(text, "{passed}/{} within tolerance", points.len());
    Ok(Output { json, csv, text })
}
