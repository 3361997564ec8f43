use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use edrelax::casekit::{
    build_counterexample_case, build_ieee30_scenario, parse_case, parse_case_document,
    serialize_case,
};
use edrelax::oracle::{compare, enumerate, CompareTolerances, OracleOptions, PatternOutcome};
use edrelax::qp::{assemble_relaxed, solve as solve_qp};
use edrelax::relaxation::{
    check_conditions_a, check_conditions_b, check_conditions_c, compute_lmp, recommend_group,
    verify_exactness, ConditionOptions, LmpReference, Recommendation, ReferenceMode,
};
use edrelax::{
    ConditionReport, DispatchSolution, ExactnessReport, Group, LmpForecast, LmpSeries, NetworkCase,
    SolveSettings, SolveStatus,
};
use serde::{Deserialize, Serialize};

use crate::output::{emit, emit_json, is_stdout, read_input, summary_sink};
use crate::{
    BuiltinCase, CheckArgs, CmdResult, Failure, GenArgs, GroupSelector, OracleArgs, SolveArgs,
    SolverFlags, VerifyArgs, EXIT_DATA, EXIT_INFEASIBLE, EXIT_NOT_EXACT, EXIT_OK, EXIT_SOLVER,
};

pub(crate) const SOLUTION_SCHEMA: &str = "edrelax-solution/1";
const CHECK_SCHEMA: &str = "edrelax-check/1";
const VERIFY_SCHEMA: &str = "edrelax-verify/1";
const ORACLE_SCHEMA: &str = "edrelax-oracle/1";
const MAX_LISTED: usize = 10;

#[derive(Debug, Serialize, Deserialize)]
struct SolutionDocument {
    schema: String,
    solution: DispatchSolution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lmp: Option<LmpSeries>,
}

/// One row of the dispatch CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchRow {
    pub step: usize,
    pub total_load: f64,
    pub total_wind: f64,
    pub total_p_ch: f64,
    pub total_p_dc: f64,
    /// Charging minus discharging, MW.
    pub net_storage_power: f64,
    pub lambda: f64,
}

/// Per-step totals of a solved dispatch.
pub fn dispatch_rows(case: &NetworkCase, sol: &DispatchSolution) -> Vec<DispatchRow> {
    (0..case.horizon.steps)
        .map(|t| {
            let total_wind = case
                .generators
                .iter()
                .zip(&sol.p_g)
                .filter(|(g, _)| g.is_renewable())
                .fold(0.0, |acc, (_, p)| acc + p[t]);
            let total_p_ch = sol.p_ch.iter().fold(0.0, |acc, p| acc + p[t]);
            let total_p_dc = sol.p_dc.iter().fold(0.0, |acc, p| acc + p[t]);
            DispatchRow {
                step: t,
                total_load: case.loads.total(t),
                total_wind,
                total_p_ch,
                total_p_dc,
                net_storage_power: total_p_ch - total_p_dc,
                lambda: sol.duals.lambda[t],
            }
        })
        .collect()
}

/// Reads a price forecast CSV with header `bus,step,lmp_forecast` into a
/// `[bus][step]` matrix. Every pair must appear exactly once.
pub fn read_forecast_csv(
    bytes: &[u8],
    buses: usize,
    steps: usize,
) -> Result<Vec<Vec<f64>>, String> {
    #[derive(Deserialize)]
    struct Record {
        bus: usize,
        step: usize,
        lmp_forecast: f64,
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut seen: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (k, record) in reader.deserialize::<Record>().enumerate() {
        let r = record.map_err(|e| format!("forecast row {}: {e}", k + 1))?;
        if r.bus >= buses || r.step >= steps {
            return Err(format!(
                "forecast row {}: bus {} step {} outside {buses}×{steps}",
                k + 1,
                r.bus,
                r.step
            ));
        }
        if !r.lmp_forecast.is_finite() {
            return Err(format!("forecast row {}: value not finite", k + 1));
        }
        if seen.insert((r.bus, r.step), r.lmp_forecast).is_some() {
            return Err(format!(
                "forecast row {}: duplicate bus {} step {}",
                k + 1,
                r.bus,
                r.step
            ));
        }
    }
    let mut matrix = vec![vec![0.0; steps]; buses];
    for (b, row) in matrix.iter_mut().enumerate() {
        for (t, v) in row.iter_mut().enumerate() {
            *v = *seen
                .get(&(b, t))
                .ok_or_else(|| format!("forecast missing bus {b} step {t}"))?;
        }
    }
    Ok(matrix)
}

fn positive(name: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Failure::usage(format!("{name} must be positive, got {v}")))
    }
}

fn settings(flags: &SolverFlags) -> Result<SolveSettings, Failure> {
    positive("--primal-tol", flags.primal_tol)?;
    positive("--dual-tol", flags.dual_tol)?;
    if flags.max_iter == 0 {
        return Err(Failure::usage("--max-iter must be positive"));
    }
    Ok(SolveSettings {
        primal_tol: flags.primal_tol,
        dual_tol: flags.dual_tol,
        max_iter: flags.max_iter,
        ..SolveSettings::default()
    })
}

fn load_case(path: &Path) -> Result<NetworkCase, Failure> {
    Ok(parse_case(&read_input(path)?)?)
}

pub(crate) fn status_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Optimal => EXIT_OK,
        SolveStatus::Infeasible => EXIT_INFEASIBLE,
        SolveStatus::Unbounded | SolveStatus::MaxIter | SolveStatus::Failed => EXIT_SOLVER,
    }
}

fn status_name(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::Unbounded => "unbounded",
        SolveStatus::MaxIter => "iteration limit",
        SolveStatus::Failed => "failed",
    }
}

/// Solves `case`; a non-optimal outcome becomes a failure carrying its
/// exit code and diagnosis.
fn solve_optimal(
    case: &NetworkCase,
    settings: &SolveSettings,
) -> Result<DispatchSolution, Failure> {
    let sol = solve_qp(&assemble_relaxed(case)?, settings)?;
    if sol.is_optimal() {
        return Ok(sol);
    }
    let mut message = format!("dispatch is {}", status_name(sol.status));
    if let Some(d) = &sol.diagnosis {
        message.push_str(": ");
        message.push_str(d);
    }
    Err(Failure::new(status_code(sol.status), message))
}

fn io_err(e: std::io::Error) -> Failure {
    Failure::io(Path::new("<output>"), e)
}

pub(crate) fn solve(args: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let settings = settings(&args.solver)?;
    let case = load_case(&args.case)?;
    let sol = solve_qp(&assemble_relaxed(&case)?, &settings)?;
    let code = status_code(sol.status);
    let lmp = sol.is_optimal().then(|| compute_lmp(&sol, &case.network));

    let doc = SolutionDocument {
        schema: SOLUTION_SCHEMA.into(),
        solution: sol,
        lmp,
    };
    emit_json(args.out.as_deref(), &doc, out)?;
    let sol = &doc.solution;

    if let (Some(path), true) = (&args.csv, sol.is_optimal()) {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in dispatch_rows(&case, sol) {
            w.serialize(row)
                .map_err(|e| Failure::new(EXIT_DATA, e.to_string()))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Failure::new(EXIT_DATA, e.to_string()))?;
        emit(path, &String::from_utf8_lossy(&bytes), out)?;
    }

    if !sol.is_optimal() {
        let diagnosis = sol.diagnosis.as_deref().unwrap_or("no diagnosis available");
        writeln!(err, "dispatch is {}: {diagnosis}", status_name(sol.status)).map_err(io_err)?;
        return Ok(code);
    }
    let json_on_stdout = is_stdout(args.out.as_deref()) || is_stdout(args.csv.as_deref());
    let s: &mut dyn Write = if json_on_stdout { err } else { out };
    let lambda = &sol.duals.lambda;
    let lo = lambda.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    writeln!(
        s,
        "optimal: objective {:.6}, {} iterations",
        sol.objective, sol.iterations
    )
    .map_err(io_err)?;
    writeln!(s, "lambda range [{lo:.4}, {hi:.4}] $/MWh").map_err(io_err)?;
    writeln!(
        s,
        "max p_ch·p_dc {:.3e} MW², stationarity {:.2e}, complementarity {:.2e}",
        sol.max_complementarity_product(),
        sol.residuals.stationarity,
        sol.residuals.complementarity
    )
    .map_err(io_err)?;
    Ok(code)
}

#[derive(Debug, Serialize)]
struct CheckDocument {
    schema: &'static str,
    mode: ReferenceMode,
    group: Option<Group>,
    satisfied: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<ConditionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    recommendation: Option<Recommendation>,
}

fn price_reference(
    args: &CheckArgs,
    case: &NetworkCase,
    doc_forecast: Option<LmpForecast>,
) -> Result<LmpReference, Failure> {
    if let Some(m) = args.mape {
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Failure::usage(format!(
                "--mape must be non-negative, got {m}"
            )));
        }
    }
    let forecast = if args.posteriori {
        None
    } else if let Some(path) = &args.forecast {
        let matrix =
            read_forecast_csv(&read_input(path)?, case.network.n_buses, case.horizon.steps)
                .map_err(|m| Failure::new(EXIT_DATA, format!("{}: {m}", path.display())))?;
        Some(LmpForecast {
            forecast: matrix,
            mape: args.mape.unwrap_or(0.01),
        })
    } else {
        doc_forecast.map(|f| LmpForecast {
            mape: args.mape.unwrap_or(f.mape),
            forecast: f.forecast,
        })
    };
    match forecast {
        Some(f) => Ok(LmpReference::a_priori(&f)),
        None if args.priori => Err(Failure::usage(
            "a-priori check needs a price forecast (--forecast or a forecasts section)",
        )),
        None => {
            let sol = solve_optimal(case, &SolveSettings::default())?;
            Ok(LmpReference::a_posteriori(&sol, case))
        }
    }
}

fn write_report(s: &mut dyn Write, report: &ConditionReport) -> std::io::Result<()> {
    let verdict = if report.satisfied { "holds" } else { "fails" };
    writeln!(
        s,
        "group {}: {verdict} (min cost margin {:.6}, min price margin {:.6})",
        report.group,
        report.min_cost_margin(),
        report.min_price_margin()
    )?;
    let failures: Vec<_> = report.failures().collect();
    for e in failures.iter().take(MAX_LISTED) {
        writeln!(
            s,
            "  storage {} step {}: cost margin {:.6}{}, price margin {:.6}{}",
            e.storage,
            e.step,
            e.cost_margin,
            if e.cost_ok { "" } else { " (violated)" },
            e.price_margin,
            if e.price_ok { "" } else { " (violated)" },
        )?;
    }
    if failures.len() > MAX_LISTED {
        writeln!(s, "  ... {} more", failures.len() - MAX_LISTED)?;
    }
    Ok(())
}

pub(crate) fn check(args: &CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let (case, doc_forecast) = parse_case_document(&read_input(&args.case)?)?;
    let reference = price_reference(args, &case, doc_forecast)?;
    let options = ConditionOptions::default();

    let doc = match args.group {
        GroupSelector::Auto => {
            let rec = recommend_group(&case, &reference, &options)?;
            CheckDocument {
                schema: CHECK_SCHEMA,
                mode: reference.mode,
                group: rec.group,
                satisfied: rec.group.is_some(),
                report: None,
                recommendation: Some(rec),
            }
        }
        selected => {
            let report = match selected {
                GroupSelector::A => check_conditions_a(&case, &reference, &options)?,
                GroupSelector::B => check_conditions_b(&case, &reference, &options)?,
                _ => check_conditions_c(&case, &reference, &options)?,
            };
            CheckDocument {
                schema: CHECK_SCHEMA,
                mode: reference.mode,
                group: Some(report.group),
                satisfied: report.satisfied,
                report: Some(report),
                recommendation: None,
            }
        }
    };
    emit_json(args.out.as_deref(), &doc, out)?;

    let s = summary_sink(args.out.as_deref(), out, err);
    let label = match reference.mode {
        ReferenceMode::APriori => "price floor",
        ReferenceMode::APosteriori => "realized LMP",
    };
    let mode = match reference.mode {
        ReferenceMode::APriori => "a-priori",
        ReferenceMode::APosteriori => "a-posteriori",
    };
    writeln!(s, "{mode} check").map_err(io_err)?;
    let buses: std::collections::BTreeSet<usize> = case.storages.iter().map(|d| d.bus).collect();
    for bus in buses {
        let floor = reference.lmp.values[bus]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        writeln!(s, "bus {bus}: {label} min {floor:.4} $/MWh").map_err(io_err)?;
    }
    if let Some(report) = &doc.report {
        write_report(s, report).map_err(io_err)?;
    }
    if let Some(rec) = &doc.recommendation {
        for line in &rec.rationale {
            writeln!(s, "{line}").map_err(io_err)?;
        }
        match rec.group {
            Some(g) => writeln!(s, "recommended group {g}").map_err(io_err)?,
            None => {
                for report in &rec.reports {
                    write_report(s, report).map_err(io_err)?;
                }
                writeln!(s, "no group holds").map_err(io_err)?;
            }
        }
    }
    Ok(if doc.satisfied {
        EXIT_OK
    } else {
        EXIT_NOT_EXACT
    })
}

#[derive(Debug, Serialize)]
struct VerifyDocument<'a> {
    schema: &'static str,
    case_fingerprint: &'a str,
    report: &'a ExactnessReport,
}

fn load_solution(path: &Path) -> Result<DispatchSolution, Failure> {
    let bytes = read_input(path)?;
    let value: serde_json::Value = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::new(EXIT_DATA, format!("{}: {e}", path.display())))?;
    if value.get("schema").and_then(|s| s.as_str()) == Some(SOLUTION_SCHEMA) {
        let doc: SolutionDocument = serde_json::from_value(value)
            .map_err(|e| Failure::new(EXIT_DATA, format!("{}: {e}", path.display())))?;
        let sol = doc.solution;
        if !sol.is_optimal() {
            return Err(Failure::new(
                status_code(sol.status),
                format!("stored dispatch is {}", status_name(sol.status)),
            ));
        }
        return Ok(sol);
    }
    let case = parse_case(&bytes)?;
    solve_optimal(&case, &SolveSettings::default())
}

pub(crate) fn verify(args: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    positive("--tol", args.tol)?;
    let sol = load_solution(&args.input)?;
    let report = verify_exactness(&sol, args.tol);
    emit_json(
        args.out.as_deref(),
        &VerifyDocument {
            schema: VERIFY_SCHEMA,
            case_fingerprint: &sol.case_fingerprint,
            report: &report,
        },
        out,
    )?;

    let s = summary_sink(args.out.as_deref(), out, err);
    writeln!(
        s,
        "max p_ch·p_dc {:.6e} MW² (tolerance {:.1e})",
        report.max_product, report.tolerance
    )
    .map_err(io_err)?;
    if report.exact {
        writeln!(s, "exact: no simultaneous charging and discharging").map_err(io_err)?;
        return Ok(EXIT_OK);
    }
    writeln!(
        s,
        "not exact: {} simultaneous (storage, step) pairs",
        report.violations.len()
    )
    .map_err(io_err)?;
    for v in report.violations.iter().take(MAX_LISTED) {
        writeln!(
            s,
            "  storage {} step {}: p_ch {:.6}, p_dc {:.6}, product {:.6e}",
            v.storage, v.step, sol.p_ch[v.storage][v.step], sol.p_dc[v.storage][v.step], v.product
        )
        .map_err(io_err)?;
    }
    if report.violations.len() > MAX_LISTED {
        writeln!(s, "  ... {} more", report.violations.len() - MAX_LISTED).map_err(io_err)?;
    }
    Ok(EXIT_NOT_EXACT)
}

#[derive(Debug, Serialize)]
struct OracleDocument {
    schema: &'static str,
    case_fingerprint: String,
    relaxed_objective: f64,
    oracle_objective: f64,
    patterns_enumerated: u64,
    patterns_pruned: u64,
    patterns_infeasible: u64,
    best_pattern: u64,
    comparison: edrelax::oracle::Comparison,
    #[serde(skip_serializing_if = "Option::is_none")]
    table: Option<Vec<PatternOutcome>>,
}

pub(crate) fn oracle(args: &OracleArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let case = load_case(&args.case)?;
    let options = OracleOptions {
        limit: args.limit,
        keep_table: args.table,
        ..OracleOptions::default()
    };
    let result = enumerate(&case, &options)?;
    let relaxed = solve_optimal(&case, &options.settings)?;
    let comparison = compare(&relaxed, &result, &CompareTolerances::default())?;
    let exact = comparison.exact;
    let doc = OracleDocument {
        schema: ORACLE_SCHEMA,
        case_fingerprint: result.case_fingerprint,
        relaxed_objective: relaxed.objective,
        oracle_objective: result.best_objective,
        patterns_enumerated: result.patterns_enumerated,
        patterns_pruned: result.patterns_pruned,
        patterns_infeasible: result.patterns_infeasible,
        best_pattern: result.best_pattern.bits,
        comparison,
        table: result.table,
    };
    emit_json(args.out.as_deref(), &doc, out)?;

    let s = summary_sink(args.out.as_deref(), out, err);
    writeln!(
        s,
        "{} patterns ({} pruned, {} infeasible), best pattern {:#x}",
        doc.patterns_enumerated, doc.patterns_pruned, doc.patterns_infeasible, doc.best_pattern
    )
    .map_err(io_err)?;
    writeln!(
        s,
        "relaxed {:.6}, oracle {:.6}, gap {:.6e} (relative {:.3e})",
        doc.relaxed_objective,
        doc.oracle_objective,
        doc.comparison.gap,
        doc.comparison.relative_gap
    )
    .map_err(io_err)?;
    if let Some(w) = &doc.comparison.witness {
        writeln!(
            s,
            "not exact: storage {} step {} charges {:.6} and discharges {:.6}",
            w.storage, w.step, w.p_ch, w.p_dc
        )
        .map_err(io_err)?;
    } else if exact {
        writeln!(s, "exact").map_err(io_err)?;
    } else {
        writeln!(s, "not exact").map_err(io_err)?;
    }
    Ok(if exact { EXIT_OK } else { EXIT_NOT_EXACT })
}

pub(crate) fn gen(args: &GenArgs, out: &mut dyn Write) -> CmdResult {
    let case = match args.case {
        BuiltinCase::Ieee30 => build_ieee30_scenario(),
        BuiltinCase::Counterexample => build_counterexample_case(),
    };
    let mut text = serialize_case(&case);
    text.push('\n');
    match &args.out {
        Some(path) => emit(path, &text, out)?,
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Failure::io(Path::new("<stdout>"), e))?,
    }
    Ok(EXIT_OK)
}
