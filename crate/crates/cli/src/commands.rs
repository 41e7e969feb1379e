use std::collections::BTreeSet;
use std::time::Instant;

use clap::Args;
use jointva_core::config::{RunConfig, RunMethod};
use jointva_core::integrands::{BenefitKind, IntegrandFactory};
use jointva_core::integration::{bias_report, Integrand};
use jointva_core::oracle::{oracle_price, OracleEstimate};
use jointva_core::pricing::{price_total, sensitivity_grid, Evaluator, GridAxis, MethodChoice, PriceBreakdown, PriceEstimate, SensitivityParam};
use jointva_core::validation::{all_passed, run_checks, Outcome};
use jointva_core::Error;

use crate::report::{coord, ensure_dir, header, num, sci, write_csv, TextTable};
use crate::Failure;

/// Agreement threshold between the semi-analytic price and the oracle, in combined standard errors.
const AGREEMENT_SIGMAS: f64 = 3.0;
const BENCH_LIMIT_PERCENT: f64 = 0.5;

fn numeric(e: Error) -> Failure {
    Failure::Numeric(e.to_string())
}

fn config(e: Error) -> Failure {
    Failure::Config(e.to_string())
}

fn io(msg: String) -> Failure {
    Failure::Numeric(msg)
}

fn benefit_of(kind: &BenefitKind) -> &'static str {
    match kind {
        BenefitKind::GmabA1 | BenefitKind::GmabA2 => "GMAB",
        BenefitKind::SbB1(_) | BenefitKind::SbB2(_) => "SB",
        _ => "DB",
    }
}

fn method_tag(b: &PriceBreakdown, benefit: &str) -> String {
    let tags: BTreeSet<String> = b.integrals.iter().filter(|(k, _)| benefit_of(k) == benefit).map(|(_, e)| e.method.to_string()).collect();
    tags.into_iter().collect::<Vec<_>>().join("+")
}

fn z_score(a: PriceEstimate, b: PriceEstimate) -> f64 {
    let s = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    if s == 0.0 {
        if a.value == b.value { 0.0 } else { f64::INFINITY }
    } else {
        (a.value - b.value).abs() / s
    }
}

pub fn price(cfg: &RunConfig) -> Result<(), Failure> {
    let model = cfg.market_model().map_err(config)?;
    let couple = cfg.couple().map_err(config)?;
    let spec = cfg.contract_spec().map_err(config)?;
    let method = cfg.numerics.method;
    let out = &cfg.output.dir;
    ensure_dir(out).map_err(io)?;

    let semi = match method {
        RunMethod::Oracle => None,
        _ => Some(price_total(&model, &spec, &couple, &cfg.evaluator()).map_err(numeric)?),
    };
    let oracle: Option<OracleEstimate> = match method {
        RunMethod::Oracle | RunMethod::All => Some(oracle_price(&model, &spec, &couple, &cfg.oracle_options()).map_err(numeric)?),
        _ => None,
    };

    print!("{}", header(cfg, "price", &method.to_string()));
    if let Some(o) = &oracle {
        println!("  oracle: {} paths, step {}, seed {}, negative-intensity rate {:.2e}", o.paths, o.step, o.seed, o.negative_intensity_rate);
    }

    let mut cols = vec!["benefit"];
    if semi.is_some() {
        cols.extend(["value", "std_error", "method"]);
    }
    if oracle.is_some() {
        cols.extend(["oracle", "oracle_std_error"]);
    }
    if semi.is_some() && oracle.is_some() {
        cols.extend(["z", "agree"]);
    }
    let mut table = TextTable::new(&cols);
    let mut rows = Vec::new();
    let mut disagreements = Vec::new();
    for name in ["GMAB", "SB", "DB", "total"] {
        let mut r = vec![name.to_string()];
        let pick = |b: &PriceBreakdown| match name {
            "GMAB" => b.gmab,
            "SB" => b.sb,
            "DB" => b.db,
            _ => b.total,
        };
        let pick_o = |o: &OracleEstimate| match name {
            "GMAB" => o.gmab,
            "SB" => o.sb,
            "DB" => o.db,
            _ => o.total,
        };
        if let Some(b) = &semi {
            let p = pick(b);
            let tag = if name == "total" { ["GMAB", "SB", "DB"].map(|n| method_tag(b, n)).join("/") } else { method_tag(b, name) };
            r.extend([num(p.value), sci(p.std_error), tag]);
        }
        if let Some(o) = &oracle {
            let p = pick_o(o);
            r.extend([num(p.value), sci(p.std_error)]);
        }
        if let (Some(b), Some(o)) = (&semi, &oracle) {
            let z = z_score(pick(b), pick_o(o));
            let ok = z <= AGREEMENT_SIGMAS;
            if !ok {
                disagreements.push(format!("{name} ({z:.2} sigma)"));
            }
            r.extend([format!("{z:.2}"), if ok { "yes".into() } else { "NO".into() }]);
        }
        table.row(r.clone());
        rows.push(r);
    }
    println!("{table}");
    write_csv(&out.join("prices.csv"), &cols, &rows).map_err(io)?;

    if let Some(b) = &semi {
        let mut t = TextTable::new(&["integral", "value", "std_error", "method", "samples", "imag_residual"]);
        let mut rows = Vec::new();
        for (k, e) in &b.integrals {
            let r = vec![k.label(), format!("{:.8}", e.value), sci(e.std_error), e.method.to_string(), e.n_samples.to_string(), sci(e.imag_residual)];
            t.row(r.clone());
            rows.push(r);
        }
        println!("{t}");
        write_csv(&out.join("integrals.csv"), &["integral", "value", "std_error", "method", "samples", "imag_residual"], &rows).map_err(io)?;
        let rows: Vec<Vec<String>> = b.terms.iter().map(|t| vec![t.label.clone(), num(t.weight), num(t.value), sci(t.std_error)]).collect();
        write_csv(&out.join("terms.csv"), &["term", "weight", "value", "std_error"], &rows).map_err(io)?;
        for w in &b.warnings {
            println!("warning: {w}");
        }
    }
    println!("wrote {}", out.display());
    if disagreements.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(format!("oracle disagreement above {AGREEMENT_SIGMAS} sigma: {}", disagreements.join(", "))))
    }
}

fn benchmark_kinds(spec: &jointva_core::contract::ContractSpec) -> Vec<BenefitKind> {
    // Beyond two surrender dates the GMAB and DB kernels are 3-D; quadrature there takes minutes per integral.
    if spec.k() >= 3 {
        return vec![BenefitKind::SbB2(1), BenefitKind::SbB1(2), BenefitKind::SbB2(2)];
    }
    let mut kinds = vec![BenefitKind::GmabA1, BenefitKind::GmabA2];
    if spec.k() == 2 {
        kinds.push(BenefitKind::SbB2(1));
    }
    if let Some(&(j, i)) = spec.admissible_pairs().first() {
        kinds.extend([BenefitKind::DbA1 { j, i }, BenefitKind::DbA2 { j, i }]);
    }
    kinds
}

pub fn benchmark(cfg: &RunConfig) -> Result<(), Failure> {
    let model = cfg.market_model().map_err(config)?;
    let spec = cfg.contract_spec().map_err(config)?;
    let factory = IntegrandFactory::new(&model, &spec).map_err(numeric)?;
    let n = &cfg.numerics;
    let quad = Evaluator::quadrature(n.quad_tol);
    let mc = Evaluator::monte_carlo(n.samples, n.seed);
    print!("{}", header(cfg, "benchmark", "quad vs mc"));

    let cols = ["integral", "dim", "quad", "mc", "bias_pct", "std_error_pct", "quad_seconds", "mc_seconds", "below_limit"];
    let mut table = TextTable::new(&cols);
    let mut rows = Vec::new();
    for kind in benchmark_kinds(&spec) {
        let it = factory.build_kind(kind).map_err(numeric)?;
        let t0 = Instant::now();
        let q = quad.evaluate(&it).map_err(numeric)?;
        let tq = t0.elapsed().as_secs_f64();
        let t0 = Instant::now();
        let m = mc.evaluate(&it).map_err(numeric)?;
        let tm = t0.elapsed().as_secs_f64();
        let bias = bias_report(&m, &q).map_err(numeric)?;
        let se = m.std_error_percent();
        let ok = bias < BENCH_LIMIT_PERCENT && se < BENCH_LIMIT_PERCENT;
        let r = vec![
            kind.label(),
            it.dim().to_string(),
            format!("{:.6}", q.value),
            format!("{:.6}", m.value),
            format!("{bias:.4}"),
            format!("{se:.4}"),
            format!("{tq:.2}"),
            format!("{tm:.2}"),
            if ok { "yes".into() } else { "no".into() },
        ];
        table.row(r.clone());
        rows.push(r);
    }
    println!("{table}");
    let out = &cfg.output.dir;
    ensure_dir(out).map_err(io)?;
    write_csv(&out.join("benchmark.csv"), &cols, &rows).map_err(io)?;
    println!("wrote {}", out.display());
    Ok(())
}

#[derive(Args, Debug, Clone)]
pub struct SensitivityArgs {
    /// Two of beta, C, delta, eps1, eps2, kappa1, kappa2.
    #[arg(long, value_delimiter = ',', default_values = ["beta", "C"])]
    axes: Vec<String>,
    /// LO,HI for the first axis.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    x_range: Option<Vec<f64>>,
    /// LO,HI for the second axis.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    y_range: Option<Vec<f64>>,
    /// Points per axis.
    #[arg(long, default_value_t = 4)]
    resolution: usize,
}

fn default_range(p: SensitivityParam) -> (f64, f64) {
    match p {
        SensitivityParam::SurrenderBeta => (0.0, 0.08),
        SensitivityParam::SurrenderBaseline => (0.0, 0.02),
        SensitivityParam::GuaranteeRate => (0.0, 0.04),
        SensitivityParam::Eps1 | SensitivityParam::Eps2 => (0.0, 2.0),
        SensitivityParam::Kappa1 | SensitivityParam::Kappa2 => (0.1, 1.0),
    }
}

fn axis(name: &str, range: Option<&Vec<f64>>, resolution: usize) -> Result<GridAxis, Failure> {
    let p = SensitivityParam::parse(name).map_err(config)?;
    if range.is_some_and(|r| r.len() != 2) {
        return Err(Failure::Config(format!("range for {name} must be LO,HI")));
    }
    let (lo, hi) = range.map(|r| (r[0], r[1])).unwrap_or_else(|| default_range(p));
    GridAxis::linspace(p, lo, hi, resolution).map_err(config)
}

pub fn sensitivity(cfg: &RunConfig, args: &SensitivityArgs) -> Result<(), Failure> {
    let model = cfg.market_model().map_err(config)?;
    let couple = cfg.couple().map_err(config)?;
    let params = cfg.contract_params().map_err(config)?;
    let evaluator = cfg.evaluator();
    if matches!(cfg.numerics.method, RunMethod::Oracle | RunMethod::All) {
        return Err(Failure::Config("sensitivity grids support --method auto, quad or mc".into()));
    }
    if args.axes.len() != 2 {
        return Err(Failure::Config(format!("--axes takes two parameters, got {}", args.axes.len())));
    }
    let ax1 = axis(&args.axes[0], args.x_range.as_ref(), args.resolution)?;
    let ax2 = axis(&args.axes[1], args.y_range.as_ref(), args.resolution)?;
    if ax1.param == ax2.param {
        return Err(Failure::Config(format!("both axes are {}", ax1.param.name())));
    }
    let method = match evaluator.method {
        MethodChoice::Auto => "auto".to_string(),
        m => m.to_string(),
    };
    let cells = sensitivity_grid(&model, &params, &couple, &evaluator, &ax1, &ax2).map_err(numeric)?;
    print!("{}", header(cfg, "sensitivity", &method));

    let out = &cfg.output.dir;
    ensure_dir(out).map_err(io)?;
    let cols = [ax1.param.name(), ax2.param.name(), "value", "std_error"];
    let pick: [(&str, fn(&PriceBreakdown) -> PriceEstimate); 4] =
        [("gmab", |b| b.gmab), ("sb", |b| b.sb), ("db", |b| b.db), ("total", |b| b.total)];
    for (file, f) in pick {
        let rows: Vec<Vec<String>> = cells
            .iter()
            .map(|c| {
                let p = f(&c.breakdown);
                vec![c.x.to_string(), c.y.to_string(), num(p.value), sci(p.std_error)]
            })
            .collect();
        write_csv(&out.join(format!("{file}.csv")), &cols, &rows).map_err(io)?;
    }

    let corner = format!("total: {} \\ {}", ax1.param.name(), ax2.param.name());
    let mut head = vec![corner];
    head.extend(ax2.values.iter().map(|&y| coord(y)));
    let head_ref: Vec<&str> = head.iter().map(String::as_str).collect();
    let mut table = TextTable::new(&head_ref);
    for (r, x) in ax1.values.iter().enumerate() {
        let mut row = vec![coord(*x)];
        row.extend((0..ax2.values.len()).map(|c| num(cells[r * ax2.values.len() + c].breakdown.total.value)));
        table.row(row);
    }
    println!("{table}");
    println!("wrote gmab.csv, sb.csv, db.csv, total.csv to {}", out.display());
    Ok(())
}

pub fn validate(cfg: &RunConfig, paths: u64) -> Result<(), Failure> {
    print!("{}", header(cfg, "validate", &cfg.evaluator().method.to_string()));
    println!("  simulation checks: {paths} paths");
    let results = run_checks(cfg, paths);
    let mut table = TextTable::new(&["check", "result", "detail"]);
    for r in &results {
        let verdict = match r.outcome {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Skipped => "SKIP",
        };
        table.row(vec![r.name.clone(), verdict.into(), r.detail.clone()]);
    }
    println!("{table}");
    if all_passed(&results) {
        Ok(())
    } else {
        let failed: Vec<&str> = results.iter().filter(|r| r.outcome == Outcome::Fail).map(|r| r.name.as_str()).collect();
        Err(Failure::Validation(format!("failed checks: {}", failed.join(", "))))
    }
}
