//! Command-line front end: derive facet systems for marginal scenarios,
//! evaluate boxes against the standard inequalities, run seeded
//! optimizations over the quantum families, and emit preset data scans
//! (CSV plus a companion gnuplot script).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use entrocone::boxworld::{
    self, bilocal_row, binosig_residual, chsh, chsh_entropic, cycle_size, is_bilocality_shape,
    is_chsh_shape, is_noncontextual, klyachko_k5, named_box, ncycle_entropic, single_detector,
    two_detector, MarginalModel,
};
use entrocone::distill::{
    cavalcanti_wiring, foster_wiring, generalized_wiring, nonlocal_content, wire,
};
use entrocone::entcone::{self, rational_to_f64, EntropicInequality, Triviality};
use entrocone::exactgeom::{parse_rational, rat, rat_int, LinearExpr, Rational};
use entrocone::opt::maximize;
use entrocone::quantum::{
    chained_quantum_box, chsh_quantum_box, chsh_quantum_box_bloch, klyachko_quantum_box,
    KLYACHKO_OPTIMUM,
};
use entrocone::scenario::{self, MarginalScenario};
use entrocone::{Error, Result};

/// Print a line to stdout, exiting quietly if the consumer closed the pipe.
macro_rules! outln {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let mut h = std::io::stdout().lock();
        if writeln!(h, $($t)*).is_err() {
            std::process::exit(0);
        }
    }};
}

#[derive(Parser)]
#[command(
    name = "entrocone",
    version,
    about = "Entropic inequality toolkit: derive facet systems, evaluate boxes, optimize quantum violations, emit data scans"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Project the entropy cone of a scenario and report equations, facets,
    /// triviality flags, and symmetry classes.
    Derive {
        /// Built-in scenario: ncycle:N, bilocality, or bell:PARTIES:SETTINGS:OUTCOMES.
        #[arg(long, conflicts_with = "scenario")]
        builtin: Option<String>,
        /// Path to a scenario JSON file.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Write the full JSON report here (the summary table always goes to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate standard inequalities on a box and flag violations.
    Eval {
        /// Built-in box: pr | classical | white | pmax | iso:C | triangle:G:XI |
        /// prd:D | classicald:D | dfamily:XI:D | nb:XI:G.
        #[arg(long, conflicts_with = "box_file")]
        builtin: Option<String>,
        /// Path to a box JSON file.
        #[arg(long = "box")]
        box_file: Option<PathBuf>,
        /// Inequality selector, repeatable: chsh | chsh_e | cycle:I | k5 |
        /// bilocal_row:K | binosig | noncontextual | nonlocal_content.
        /// Default: every selector fitting the box shape.
        #[arg(long = "ineq")]
        ineqs: Vec<String>,
        /// Threshold above which a value counts as a violation.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        /// Also write the results as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maximize an entropic violation over a quantum parameterization.
    Optimize {
        /// Target: chsh_e | chsh_e_bloch | klyachko_e | chained:K.
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit a preset data scan as CSV plus a companion gnuplot script.
    Scan {
        /// One of: fig2a, fig2b, fig3, fig4, fig6, eta_single, eta_two.
        #[arg(long)]
        figure: String,
        /// Grid step, parsed exactly (e.g. 0.01 or 1/100); default depends on
        /// the preset.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        /// Bisection tolerance for threshold searches.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        /// CSV output path; the gnuplot script lands next to it with
        /// extension .gp. Default: <figure>.csv in the working directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            outln!("{}", e.to_string().trim_end());
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", json!({"error": {"kind": "usage", "message": e.to_string()}}));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({"error": {"kind": error_kind(&e), "message": e.to_string()}}));
            ExitCode::FAILURE
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Degenerate(_) => "degenerate",
        Error::UnknownCoordinate(_) => "unknown_coordinate",
        Error::Domain(_) => "domain",
        Error::Shape(_) => "shape",
        Error::ResourceCap(_) => "resource_cap",
        Error::InvalidBox(_) => "invalid_box",
        Error::SizeCap(_) => "size_cap",
        Error::Internal(_) => "internal",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Derive { builtin, scenario, out } => cmd_derive(builtin, scenario, out),
        Cmd::Eval { builtin, box_file, ineqs, tolerance, out } => {
            cmd_eval(builtin, box_file, ineqs, tolerance, out)
        }
        Cmd::Optimize { target, seed, restarts, out } => cmd_optimize(&target, seed, restarts, out),
        Cmd::Scan { figure, grid, seed, restarts, tolerance, out } => {
            cmd_scan(&figure, grid, seed, restarts, tolerance, out)
        }
    }
}

// ---------------------------------------------------------------------------
// derive

fn builtin_scenario(name: &str) -> Result<MarginalScenario> {
    if let Some(n) = name.strip_prefix("ncycle:") {
        let n: usize =
            n.parse().map_err(|_| Error::Domain(format!("bad cycle length in `{name}`")))?;
        return scenario::ncycle(n);
    }
    if name == "bilocality" {
        return Ok(scenario::bilocality());
    }
    if let Some(rest) = name.strip_prefix("bell:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() == 3 {
            if let (Ok(p), Ok(s), Ok(o)) =
                (parts[0].parse(), parts[1].parse(), parts[2].parse())
            {
                return scenario::bell(p, s, o);
            }
        }
        return Err(Error::Domain(format!("expected bell:PARTIES:SETTINGS:OUTCOMES, got `{name}`")));
    }
    Err(Error::Domain(format!(
        "unknown builtin scenario `{name}` (try ncycle:N, bilocality, bell:P:S:O)"
    )))
}

fn load_scenario(builtin: Option<String>, file: Option<PathBuf>) -> Result<MarginalScenario> {
    match (builtin, file) {
        (Some(name), None) => builtin_scenario(&name),
        (None, Some(path)) => {
            let text = fs::read_to_string(path)?;
            MarginalScenario::from_json(&serde_json::from_str(&text)?)
        }
        _ => Err(Error::Domain("give exactly one of --builtin or --scenario".into())),
    }
}

fn equation_display(e: &LinearExpr) -> Result<String> {
    Ok(EntropicInequality::from_expr(e)?.to_string().replace("≤ 0", "= 0"))
}

fn coeff_json(ineq: &EntropicInequality) -> Value {
    let mut m = serde_json::Map::new();
    for (name, c) in &ineq.coeffs {
        m.insert(name.clone(), Value::String(c.to_string()));
    }
    Value::Object(m)
}

fn cmd_derive(
    builtin: Option<String>,
    scenario_file: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<()> {
    let s = load_scenario(builtin, scenario_file)?;
    let cone = entcone::project(&s)?;
    let group = scenario::symmetries(&s)?;
    let classes = entcone::classify(&cone.facets, &group, &s, &cone.equations);
    let trivial: Vec<bool> = cone
        .facets
        .iter()
        .map(|f| Ok(matches!(entcone::triviality_filter(f, &s)?, Triviality::Trivial)))
        .collect::<Result<_>>()?;
    let n_trivial = trivial.iter().filter(|t| **t).count();

    outln!(
        "scenario: {} observables, {} maximal contexts, symmetry group of order {}",
        s.observables.len(),
        s.maximal_contexts.len(),
        group.order()
    );
    outln!("marginal coordinates: {}", cone.coordinates.len());
    outln!("equations: {}", cone.equations.len());
    for eq in &cone.equations {
        outln!("  {}", equation_display(eq)?);
    }
    outln!(
        "facets: {} ({} trivial, {} nontrivial)",
        cone.facets.len(),
        n_trivial,
        cone.facets.len() - n_trivial
    );
    outln!("classes: {}", classes.len());
    for (k, class) in classes.iter().enumerate() {
        let is_trivial =
            matches!(entcone::triviality_filter(&class.representative, &s)?, Triviality::Trivial);
        outln!(
            "  class {}: orbit {}, {}: {}",
            k + 1,
            class.orbit.len(),
            if is_trivial { "trivial" } else { "nontrivial" },
            class.representative
        );
    }

    if let Some(path) = out {
        let facets: Vec<Value> = cone
            .facets
            .iter()
            .zip(&trivial)
            .map(|(f, t)| {
                json!({
                    "display": f.to_string(),
                    "coeffs": coeff_json(f),
                    "trivial": t,
                })
            })
            .collect();
        let class_json: Vec<Value> = classes
            .iter()
            .map(|c| {
                json!({
                    "representative": c.representative.to_string(),
                    "orbit_size": c.orbit.len(),
                    "members": c.orbit.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
                })
            })
            .collect();
        let report = json!({
            "scenario": s.to_json(),
            "coordinates": cone.coordinates,
            "equations": cone.equations.iter().map(equation_display).collect::<Result<Vec<_>>>()?,
            "facets": facets,
            "classes": class_json,
        });
        fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
        outln!("report written to {}", path.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// eval

fn load_box(builtin: Option<String>, file: Option<PathBuf>) -> Result<(String, MarginalModel)> {
    match (builtin, file) {
        (Some(name), None) => {
            let m = named_box(&name)?;
            Ok((name, m))
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(&path)?;
            let m = MarginalModel::from_json(&serde_json::from_str(&text)?)?;
            Ok((path.display().to_string(), m))
        }
        _ => Err(Error::Domain("give exactly one of --builtin or --box".into())),
    }
}

fn default_selectors(model: &MarginalModel) -> Vec<String> {
    if is_chsh_shape(&model.scenario) {
        return vec!["chsh".into(), "chsh_e".into(), "nonlocal_content".into()];
    }
    if let Some(n) = cycle_size(&model.scenario) {
        let mut v: Vec<String> = (1..=n).map(|i| format!("cycle:{i}")).collect();
        if n == 5 {
            v.push("k5".into());
        }
        return v;
    }
    if is_bilocality_shape(&model.scenario) {
        let mut v: Vec<String> = (1..=10).map(|k| format!("bilocal_row:{k}")).collect();
        v.push("binosig".into());
        return v;
    }
    vec!["noncontextual".into()]
}

/// One evaluated selector: value (number or bool) and whether it flags a
/// violation.
fn eval_selector(model: &MarginalModel, sel: &str, tol: f64) -> Result<(Value, bool)> {
    if let Some(i) = sel.strip_prefix("cycle:") {
        let i: usize =
            i.parse().map_err(|_| Error::Domain(format!("bad cycle index in `{sel}`")))?;
        let v = ncycle_entropic(model, i)?;
        return Ok((json!(v), v > tol));
    }
    if let Some(k) = sel.strip_prefix("bilocal_row:") {
        let k: usize =
            k.parse().map_err(|_| Error::Domain(format!("bad row index in `{sel}`")))?;
        let v = bilocal_row(model, k)?;
        return Ok((json!(v), v > tol));
    }
    match sel {
        "chsh" => {
            let v = chsh(model)?;
            Ok((json!(v), v > 2.0 + tol))
        }
        "chsh_e" => {
            let v = chsh_entropic(model)?;
            Ok((json!(v), v > tol))
        }
        "k5" => {
            let v = klyachko_k5(model)?;
            Ok((json!(v), v < -3.0 - tol))
        }
        "binosig" => {
            let v = binosig_residual(model)?;
            Ok((json!(v), v > 1e-10))
        }
        "noncontextual" => {
            let (nc, _) = is_noncontextual(model)?;
            Ok((json!(nc), !nc))
        }
        "nonlocal_content" => {
            let q = nonlocal_content(model)?.q;
            Ok((json!(q), false))
        }
        _ => Err(Error::Domain(format!("unknown inequality selector `{sel}`"))),
    }
}

fn cmd_eval(
    builtin: Option<String>,
    box_file: Option<PathBuf>,
    ineqs: Vec<String>,
    tolerance: f64,
    out: Option<PathBuf>,
) -> Result<()> {
    let (label, model) = load_box(builtin, box_file)?;
    let selectors = if ineqs.is_empty() { default_selectors(&model) } else { ineqs };
    let mut results = Vec::new();
    for sel in &selectors {
        let (value, violated) = eval_selector(&model, sel, tolerance)?;
        let shown = match &value {
            Value::Bool(b) => b.to_string(),
            Value::Number(n) => format!("{}", n.as_f64().unwrap_or(f64::NAN)),
            v => v.to_string(),
        };
        outln!("{sel} = {shown}{}", if violated { "  [violated]" } else { "" });
        results.push(json!({"inequality": sel, "value": value, "violated": violated}));
    }
    if let Some(path) = out {
        let report = json!({"box": label, "tolerance": tolerance, "results": results});
        fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// optimize

const GOLDEN_STEP: u64 = 0x9E3779B97F4A7C15;

fn optimize_target(
    target: &str,
    seed: u64,
    restarts: usize,
) -> Result<(Vec<(f64, f64)>, entrocone::opt::OptimizationReport)> {
    let angle = (-PI, PI);
    match target {
        "chsh_e" => {
            let mut bounds = vec![(1e-3, FRAC_PI_2 - 1e-3)];
            bounds.extend([angle; 4]);
            let mut obj = |x: &[f64]| match chsh_quantum_box(x[0], &[x[1], x[2], x[3], x[4]]) {
                Ok(b) => chsh_entropic(&b).unwrap_or(f64::NEG_INFINITY),
                Err(_) => f64::NEG_INFINITY,
            };
            let r = maximize(&mut obj, &bounds, restarts, seed);
            Ok((bounds, r))
        }
        "chsh_e_bloch" => {
            let mut bounds = vec![(1e-3, FRAC_PI_2 - 1e-3)];
            bounds.extend([angle; 8]);
            let mut obj = |x: &[f64]| {
                let dirs = [(x[1], x[2]), (x[3], x[4]), (x[5], x[6]), (x[7], x[8])];
                match chsh_quantum_box_bloch(x[0], &dirs) {
                    Ok(b) => chsh_entropic(&b).unwrap_or(f64::NEG_INFINITY),
                    Err(_) => f64::NEG_INFINITY,
                }
            };
            let r = maximize(&mut obj, &bounds, restarts, seed);
            Ok((bounds, r))
        }
        "klyachko_e" => {
            let bounds = vec![(0.0, FRAC_PI_2); 3];
            let mut obj = |x: &[f64]| match klyachko_quantum_box(x[0], x[1], x[2]) {
                Ok(b) => ncycle_entropic(&b, 5).unwrap_or(f64::NEG_INFINITY),
                Err(_) => f64::NEG_INFINITY,
            };
            let r = maximize(&mut obj, &bounds, restarts, seed);
            Ok((bounds, r))
        }
        _ => {
            if let Some(k) = target.strip_prefix("chained:") {
                let k: usize = k
                    .parse()
                    .map_err(|_| Error::Domain(format!("bad setting count in `{target}`")))?;
                if k < 2 {
                    return Err(Error::Domain("chained target needs k ≥ 2".into()));
                }
                let mut bounds = vec![(1e-3, FRAC_PI_2 - 1e-3)];
                bounds.extend(vec![angle; 2 * k]);
                let mut obj = |x: &[f64]| match chained_quantum_box(x[0], k, &x[1..]) {
                    Ok(b) => ncycle_entropic(&b, 2 * k - 1).unwrap_or(f64::NEG_INFINITY),
                    Err(_) => f64::NEG_INFINITY,
                };
                let r = maximize(&mut obj, &bounds, restarts, seed);
                return Ok((bounds, r));
            }
            Err(Error::Domain(format!(
                "unknown target `{target}` (try chsh_e, chsh_e_bloch, klyachko_e, chained:K)"
            )))
        }
    }
}

fn cmd_optimize(target: &str, seed: u64, restarts: usize, out: Option<PathBuf>) -> Result<()> {
    let (bounds, report) = optimize_target(target, seed, restarts)?;
    let doc = json!({
        "target": target,
        "seed": seed,
        "restarts": report.restarts,
        "evaluations": report.evaluations,
        "bounds": bounds.iter().map(|(lo, hi)| json!([lo, hi])).collect::<Vec<_>>(),
        "best_value": report.best_value,
        "best_params": report.best_params,
    });
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    match out {
        Some(path) => fs::write(path, text)?,
        None => outln!("{}", text.trim_end()),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// scan

fn parse_grid(grid: Option<String>, default: Rational) -> Result<Rational> {
    match grid {
        None => Ok(default),
        Some(s) => {
            let g = parse_rational(&s)?;
            if g <= Rational::from_integer(0.into()) || g > Rational::from_integer(1.into()) {
                return Err(Error::Domain(format!("grid step {s} outside (0, 1]")));
            }
            Ok(g)
        }
    }
}

/// Rational multiples k·step for k = from..; stops once the value exceeds
/// `upto`.
fn rational_grid(step: &Rational, from: i64, upto: &Rational) -> Vec<Rational> {
    let mut out = Vec::new();
    let mut k = from;
    loop {
        let v = step * rat_int(k);
        if &v > upto {
            break;
        }
        out.push(v);
        k += 1;
    }
    out
}

fn format_row(row: &[f64]) -> String {
    row.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(",")
}

fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut s = String::with_capacity(rows.len() * 32);
    s.push_str(header);
    s.push('\n');
    for row in rows {
        s.push_str(&format_row(row));
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

fn plot_script(figure: &str, csv: &str) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set terminal pngcairo size 900,640\n");
    s.push_str(&format!("set output '{figure}.png'\n"));
    match figure {
        "fig2a" => {
            s.push_str("set xlabel 'state angle'\nset ylabel 'entropic violation'\n");
            s.push_str(&format!("plot '{csv}' using 1:2 with lines lw 2, 0 with lines dt 2 notitle\n"));
        }
        "fig2b" => {
            s.push_str("set xlabel 'settings per side k'\nset ylabel 'entropic violation'\n");
            s.push_str(&format!("plot '{csv}' using 1:2 with linespoints lw 2 pt 7\n"));
        }
        "fig3" => {
            s.push_str("set xlabel 'xi'\nset ylabel 'gamma'\nset cblabel 'region'\n");
            s.push_str("# region code: 0 none, 1 wiring-distillable, 2 entropic violation, 3 both\n");
            s.push_str(&format!(
                "plot '{csv}' using 2:1:((($6>1e-9)||($7>1e-9)?1:0)+($4>1e-9?2:0)) with points pt 5 ps 0.7 palette notitle\n"
            ));
        }
        "fig4" => {
            s.push_str("set xlabel 'xi'\nset ylabel 'distillation gain'\n");
            s.push_str(&format!(
                "plot for [d=2:5] '{csv}' using (column(1)==d?$2:1/0):4 with linespoints title sprintf('d=%d', d)\n"
            ));
        }
        "fig6" => {
            s.push_str("set xlabel 'xi'\nset ylabel 'gamma'\nset cblabel 'region'\n");
            s.push_str("# region code: 0 none, 1 violating, 3 violating while admitting a global model\n");
            s.push_str(&format!(
                "plot '{csv}' using 1:2:(($3>1e-9?1:0)+($5>0.5&&$3>1e-9?2:0)) with points pt 5 ps 0.9 palette notitle\n"
            ));
        }
        "eta_single" => {
            s.push_str("set xlabel 'detector efficiency'\nset ylabel 'entropic violation'\n");
            s.push_str(&format!("plot '{csv}' using 1:2 with linespoints, 0 with lines dt 2 notitle\n"));
        }
        "eta_two" => {
            s.push_str("set xlabel 'detector efficiency'\nset ylabel 'entropic violation'\n");
            s.push_str(&format!(
                "plot '{csv}' using 1:($3<0.5?$2:1/0) with linespoints, '{csv}' using 1:($3>0.5?$2:1/0) with points pt 9 ps 2 title 'threshold', 0 with lines dt 2 notitle\n"
            ));
        }
        _ => {}
    }
    s
}

fn scan_fig2a(step: &Rational, seed: u64, restarts: usize) -> Vec<Vec<f64>> {
    let step_f = rational_to_f64(step);
    let mut rows = Vec::new();
    let mut i: u64 = 1;
    loop {
        let alpha = step_f * i as f64;
        if alpha >= FRAC_PI_2 - 1e-9 {
            break;
        }
        let mut obj = |x: &[f64]| match chsh_quantum_box(alpha, &[x[0], x[1], x[2], x[3]]) {
            Ok(b) => chsh_entropic(&b).unwrap_or(f64::NEG_INFINITY),
            Err(_) => f64::NEG_INFINITY,
        };
        let r = maximize(
            &mut obj,
            &[(-PI, PI); 4],
            restarts,
            seed.wrapping_add(i.wrapping_mul(GOLDEN_STEP)),
        );
        rows.push(vec![alpha, r.best_value]);
        i += 1;
    }
    rows
}

fn scan_fig2b(seed: u64, restarts: usize) -> Vec<Vec<f64>> {
    let mut rows = Vec::new();
    for k in 2..=10usize {
        let mut obj = |x: &[f64]| match chained_quantum_box(FRAC_PI_4, k, x) {
            Ok(b) => ncycle_entropic(&b, 2 * k - 1).unwrap_or(f64::NEG_INFINITY),
            Err(_) => f64::NEG_INFINITY,
        };
        let r = maximize(
            &mut obj,
            &vec![(-PI, PI); 2 * k],
            restarts,
            seed.wrapping_add((k as u64).wrapping_mul(GOLDEN_STEP)),
        );
        rows.push(vec![k as f64, r.best_value]);
    }
    rows
}

fn scan_fig3(step: &Rational) -> Result<Vec<Vec<f64>>> {
    let one = rat_int(1);
    let foster = foster_wiring();
    let cavalcanti = cavalcanti_wiring();
    let mut rows = Vec::new();
    for g in rational_grid(step, 0, &one) {
        for x in rational_grid(step, 0, &(&one - &g)) {
            let model = boxworld::triangle(&g, &x)?;
            let q = nonlocal_content(&model)?.q;
            let gain_f = nonlocal_content(&wire(&model, &foster)?)?.q - q;
            let gain_c = nonlocal_content(&wire(&model, &cavalcanti)?)?.q - q;
            rows.push(vec![
                rational_to_f64(&g),
                rational_to_f64(&x),
                chsh(&model)?,
                chsh_entropic(&model)?,
                q,
                gain_f,
                gain_c,
            ]);
        }
    }
    Ok(rows)
}

fn scan_fig4(step: &Rational) -> Result<Vec<Vec<f64>>> {
    let one = rat_int(1);
    let mut rows = Vec::new();
    for d in 2..=5usize {
        let wiring = generalized_wiring(d)?;
        for x in rational_grid(step, 0, &one) {
            let model = boxworld::dfamily(&x, d)?;
            let q = nonlocal_content(&model)?.q;
            let gain = nonlocal_content(&wire(&model, &wiring)?)?.q - q;
            rows.push(vec![d as f64, rational_to_f64(&x), q, gain]);
        }
    }
    Ok(rows)
}

fn scan_fig6(step: &Rational) -> Result<Vec<Vec<f64>>> {
    let one = rat_int(1);
    let mut rows = Vec::new();
    for x in rational_grid(step, 0, &one) {
        for g in rational_grid(step, 0, &(&one - &x)) {
            let model = boxworld::nb(&x, &g)?;
            let row7 = bilocal_row(&model, 7)?;
            let max_row = (1..=10)
                .map(|k| bilocal_row(&model, k))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            let (nc, _) = is_noncontextual(&model)?;
            rows.push(vec![
                rational_to_f64(&x),
                rational_to_f64(&g),
                row7,
                max_row,
                if nc { 1.0 } else { 0.0 },
            ]);
        }
    }
    Ok(rows)
}

fn klyachko_reference_box() -> Result<MarginalModel> {
    klyachko_quantum_box(KLYACHKO_OPTIMUM[0], KLYACHKO_OPTIMUM[1], KLYACHKO_OPTIMUM[2])
}

fn scan_eta_single(step: &Rational) -> Result<Vec<Vec<f64>>> {
    let base = klyachko_reference_box()?;
    let lhs0 = ncycle_entropic(&base, 5)?;
    let one = rat_int(1);
    let mut rows = Vec::new();
    for eta in rational_grid(step, 1, &one) {
        let eta_f = rational_to_f64(&eta);
        let lhs = ncycle_entropic(&single_detector(&base, eta_f)?, 5)?;
        rows.push(vec![eta_f, lhs, lhs - eta_f * lhs0]);
    }
    Ok(rows)
}

fn scan_eta_two(step: &Rational, tolerance: f64) -> Result<(Vec<Vec<f64>>, f64)> {
    let base = klyachko_reference_box()?;
    let lhs_at = |eta: f64| -> Result<f64> { ncycle_entropic(&two_detector(&base, eta)?, 5) };
    let mut rows = Vec::new();
    // Sweep the high-efficiency end where the violation turns on.
    let start = rat(95, 100);
    let one = rat_int(1);
    let mut eta = start;
    while eta <= one {
        let eta_f = rational_to_f64(&eta);
        rows.push(vec![eta_f, lhs_at(eta_f)?, 0.0]);
        eta += step;
    }
    let (mut lo, mut hi) = (0.95, 1.0);
    if lhs_at(lo)? > 0.0 {
        return Err(Error::Internal("expected no violation at the sweep start".into()));
    }
    let tol = tolerance.max(1e-12);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if lhs_at(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let threshold = 0.5 * (lo + hi);
    rows.push(vec![threshold, lhs_at(threshold)?, 1.0]);
    Ok((rows, threshold))
}

fn cmd_scan(
    figure: &str,
    grid: Option<String>,
    seed: u64,
    restarts: usize,
    tolerance: f64,
    out: Option<PathBuf>,
) -> Result<()> {
    let csv_path = out.unwrap_or_else(|| PathBuf::from(format!("{figure}.csv")));
    let gp_path = csv_path.with_extension("gp");
    let (header, rows) = match figure {
        "fig2a" => {
            let step = parse_grid(grid, rat(1, 20))?;
            ("alpha,chsh_entropic", scan_fig2a(&step, seed, restarts))
        }
        "fig2b" => ("k,cycle_entropic", scan_fig2b(seed, restarts)),
        "fig3" => {
            let step = parse_grid(grid, rat(1, 100))?;
            (
                "gamma,xi,chsh,chsh_entropic,nonlocal_content,gain_foster,gain_cavalcanti",
                scan_fig3(&step)?,
            )
        }
        "fig4" => {
            let step = parse_grid(grid, rat(1, 20))?;
            ("d,xi,nonlocal_content,gain_generalized", scan_fig4(&step)?)
        }
        "fig6" => {
            let step = parse_grid(grid, rat(1, 20))?;
            ("xi,gamma,row7,max_row,noncontextual", scan_fig6(&step)?)
        }
        "eta_single" => {
            let step = parse_grid(grid, rat(1, 50))?;
            ("eta,cycle_entropic,linearity_residual", scan_eta_single(&step)?)
        }
        "eta_two" => {
            let step = parse_grid(grid, rat(1, 1000))?;
            let (rows, threshold) = scan_eta_two(&step, tolerance)?;
            outln!("threshold = {threshold}");
            ("eta,cycle_entropic,is_threshold", rows)
        }
        _ => {
            return Err(Error::Domain(format!(
                "unknown figure `{figure}` (try fig2a, fig2b, fig3, fig4, fig6, eta_single, eta_two)"
            )))
        }
    };
    write_csv(&csv_path, header, &rows)?;
    let csv_name = csv_path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| csv_path.display().to_string());
    fs::write(&gp_path, plot_script(figure, &csv_name))?;
    outln!("wrote {} ({} rows) and {}", csv_path.display(), rows.len(), gp_path.display());
    Ok(())
}
