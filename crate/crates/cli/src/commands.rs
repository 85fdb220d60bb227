use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use bergman_suita::bergman::{kernel_annulus, kernel_g2_center, kernel_reinhardt, KernelValue};
use bergman_suita::domains::{DomainSpec, EllipsoidFamilyParams};
use bergman_suita::green1d::{
    covering_capacity_bound, level_flux_and_isoperimetric, robin_capacity, solve_green_annulus, sublevel_curve,
    GreenSeries1D,
};
use bergman_suita::indicatrix::{
    indicatrix_volume_closed, indicatrix_volume_numeric, kobayashi_arcs, kobayashi_profile_p1half, ENVELOPE_GRID,
};
use bergman_suita::numerics::{SampleStream, Tolerance};
use bergman_suita::suita::{
    figure_scan, lower_bound_experiment, maximize_f, monotonicity_experiment, suita_f as suita_ratio,
    suita_f_ell1, suita_f_power, ExperimentReport, Family, ScanFamily, SuitaRatio,
};
use bergman_suita::verify::run_acceptance;
use bergman_suita::Error;
use num_complex::Complex;
use serde_json::{json, Value};

use crate::parse::{dimensions, domain_and_point};
use crate::{DomainArgs, ExperimentChoice, FamilyKind, Format, GlobalOpts};

const GREEN_SAMPLES: usize = 1 << 18;
const EXPERIMENT_SAMPLES: usize = 1_000_000;
const SCAN_GRID: usize = 200;
const PROFILE_ROWS: usize = 512;

fn tolerance(g: &GlobalOpts) -> Result<Tolerance<f64>> {
    let tol = match g.tol {
        Some(abs) => Tolerance::new(abs, Tolerance::<f64>::default().rel_tol, 200)?,
        None => Tolerance::default(),
    };
    Ok(tol)
}

fn write(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(g: &GlobalOpts, value: &Value) -> Result<()> {
    write(g.out.as_deref(), &(serde_json::to_string_pretty(value)? + "\n"))
}

/// CSV when asked for; the JSON report goes next to a CSV file, or
/// replaces the CSV entirely with `--format json`.
fn emit_report(g: &GlobalOpts, report: &ExperimentReport, default: Format) -> Result<()> {
    let json = report.to_json()? + "\n";
    match g.format.unwrap_or(default) {
        Format::Json => write(g.out.as_deref(), &json),
        Format::Csv => {
            write(g.out.as_deref(), &report.to_csv()?)?;
            if let Some(path) = &g.out {
                write(Some(&path.with_extension("json")), &json)?;
            }
            Ok(())
        }
    }
}

fn complex_list(w: &[Complex<f64>]) -> Value {
    json!(w.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
}

fn kernel_value(d: &DomainSpec<f64>, w: &[Complex<f64>], tol: &Tolerance<f64>) -> Result<KernelValue<f64>> {
    Ok(match d {
        DomainSpec::Annulus { r } => kernel_annulus(*r, w[0], tol)?,
        DomainSpec::SymmetrizedBidisk if w.iter().all(|z| z.norm() == 0.0) => kernel_g2_center(),
        _ => kernel_reinhardt(d, w, tol)?,
    })
}

pub fn kernel(g: &GlobalOpts, args: &DomainArgs) -> Result<()> {
    let (d, w) = domain_and_point(args)?;
    let k = kernel_value(&d, &w, &tolerance(g)?)?;
    eprintln!("K = {}", k.value);
    match g.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(g, &json!({ "domain": d, "w": complex_list(&w), "kernel": k })),
        Format::Csv => write(
            g.out.as_deref(),
            &format!("method,value,error_bound\n{},{:e},{:e}\n", json!(k.method).as_str().unwrap_or(""), k.value, k.error_bound),
        ),
    }
}

fn green_function(d: &DomainSpec<f64>, w: Complex<f64>, tol: &Tolerance<f64>) -> Result<GreenSeries1D<f64>> {
    Ok(match d {
        DomainSpec::Annulus { r } => solve_green_annulus(*r, w, tol)?,
        DomainSpec::Ball { n: 1 } => GreenSeries1D::disk(w)?,
        _ => bail!(Error::Unsupported("Green functions are available for the disk and annuli".into())),
    })
}

pub fn green(g: &GlobalOpts, args: &DomainArgs, t: &[f64]) -> Result<()> {
    let (d, w) = domain_and_point(args)?;
    let green = green_function(&d, w[0], &tolerance(g)?)?;
    let capacity = robin_capacity(&green);
    eprintln!("c = {capacity}");
    let bound = match d {
        DomainSpec::Annulus { r } if (w[0].norm() - r.sqrt()).abs() < 1e-15 => Some(covering_capacity_bound(r)?),
        _ => None,
    };
    let stream = SampleStream::low_discrepancy(2, g.seed);
    let samples = g.samples.unwrap_or(GREEN_SAMPLES);
    let curve = if t.is_empty() {
        None
    } else {
        Some(sublevel_curve(&green, t, &stream, samples)?)
    };
    if g.format == Some(Format::Csv) {
        let Some(curve) = curve else {
            bail!(Error::InvalidParameter("CSV output needs a --t grid".into()));
        };
        return write(g.out.as_deref(), &curve.to_csv()?);
    }
    let levels = t
        .iter()
        .map(|&t| level_flux_and_isoperimetric(&green, t))
        .collect::<bergman_suita::Result<Vec<_>>>()?;
    emit_json(
        g,
        &json!({
            "domain": d,
            "w": complex_list(&w),
            "capacity": capacity,
            "covering_bound": bound,
            "truncation": green.truncation,
            "tail_bound": green.tail_bound,
            "boundary_residual": green.boundary_residual(720),
            "seed": g.seed,
            "samples": samples,
            "sublevel": curve,
            "levels": levels,
        }),
    )
}

pub fn indicatrix(g: &GlobalOpts, p: &[f64], b: f64) -> Result<()> {
    let grid = g.grid.unwrap_or(ENVELOPE_GRID);
    let family = match p {
        [half, rest @ ..] if *half == 0.5 && !rest.is_empty() && rest.iter().all(|&m| m == rest[0]) => {
            Some(EllipsoidFamilyParams::new(rest[0], p.len(), b)?)
        }
        _ => None,
    };
    let closed = family.as_ref().map(indicatrix_volume_closed);
    let numeric = if p.len() == 2 {
        Some(indicatrix_volume_numeric(p, b, grid)?)
    } else {
        None
    };
    if closed.is_none() && numeric.is_none() {
        bail!(Error::Unsupported(
            "indicatrix volumes need two exponents or the family with first exponent 1/2".into()
        ));
    }
    if let Some(v) = numeric.map(|n| n.value).or(closed) {
        eprintln!("lambda(I) = {v}");
    }
    if g.format == Some(Format::Csv) {
        let profile = match &family {
            Some(f) => kobayashi_profile_p1half(f.m, f.n, b)?,
            None => kobayashi_arcs(p, b, grid)?,
        };
        return write(g.out.as_deref(), &profile.to_csv(PROFILE_ROWS)?);
    }
    emit_json(g, &json!({ "p": p, "b": b, "closed": closed, "numeric": numeric }))
}

#[allow(clippy::too_many_arguments)]
pub fn suita_f(
    g: &GlobalOpts,
    g2: bool,
    family: Option<FamilyKind>,
    m: Option<f64>,
    n: Option<usize>,
    b: Option<f64>,
    maximize: bool,
    args: &DomainArgs,
) -> Result<()> {
    let tol = tolerance(g)?;
    if let Some(kind) = family {
        let m = m.context("--m is required with --family")?;
        let fam = match kind {
            FamilyKind::Ell1 => Family::Ell1 { m, n: n.unwrap_or(2) },
            FamilyKind::Power => Family::Power { m },
        };
        if maximize {
            let tol = match g.tol {
                Some(_) => tol,
                None => Tolerance::new(1e-9, 1e-12, 200)?,
            };
            let max = maximize_f(&fam, &tol)?;
            eprintln!("F* = {} at b* = {}", max.f, max.b);
            return emit_json(g, &json!({ "family": fam, "maximum": max }));
        }
        let b = b.context("--b or --maximize is required with --family")?;
        let ratio = match fam {
            Family::Ell1 { m, n } => suita_f_ell1(&EllipsoidFamilyParams::new(m, n, b)?)?,
            Family::Power { m } => suita_f_power(m, b, g.grid.unwrap_or(ENVELOPE_GRID))?,
        };
        return report_ratio(g, json!({ "family": fam, "b": b }), &ratio);
    }
    let (d, w) = if g2 {
        (DomainSpec::SymmetrizedBidisk, vec![Complex::new(0.0, 0.0); 2])
    } else {
        domain_and_point(args)?
    };
    let ratio = suita_ratio(&d, &w, &tol)?;
    report_ratio(g, json!({ "domain": d, "w": complex_list(&w) }), &ratio)
}

fn report_ratio(g: &GlobalOpts, mut head: Value, ratio: &SuitaRatio<f64>) -> Result<()> {
    eprintln!("F = {}", ratio.f);
    head["ratio"] = json!(ratio);
    head["within_bounds"] = json!(ratio.within_bounds(1e-10));
    emit_json(g, &head)
}

pub fn scan(g: &GlobalOpts, family: FamilyKind, m: &[f64], n: Option<&str>) -> Result<()> {
    let grid = g.grid.unwrap_or(SCAN_GRID);
    if grid == 0 {
        bail!(Error::InvalidParameter("--grid must be positive".into()));
    }
    let scan = match family {
        FamilyKind::Ell1 => {
            let [m] = m else {
                bail!(Error::InvalidParameter("the ell1 family takes a single --m".into()));
            };
            ScanFamily::Ell1 {
                m: *m,
                ns: dimensions(n.unwrap_or("2..6"))?,
            }
        }
        FamilyKind::Power => ScanFamily::Power { ms: m.to_vec() },
    };
    let b_grid: Vec<f64> = (1..=grid).map(|i| i as f64 / (grid + 1) as f64).collect();
    let report = figure_scan(&scan, &b_grid)?;
    finish_report(g, &report, Format::Csv)
}

fn finish_report(g: &GlobalOpts, report: &ExperimentReport, default: Format) -> Result<()> {
    emit_report(g, report, default)?;
    for v in &report.verdicts {
        let tag = match (v.passed, v.asserted) {
            (true, true) => "PASS",
            (false, true) => "FAIL",
            (_, false) => "INFO",
        };
        eprintln!("[{tag}] {}: {}", v.name, v.detail);
    }
    if !report.passed() {
        let failed: Vec<&str> = report
            .verdicts
            .iter()
            .filter(|v| v.asserted && !v.passed)
            .map(|v| v.name.as_str())
            .collect();
        bail!(Error::Unresolved(format!("failed verdicts: {}", failed.join(", "))));
    }
    Ok(())
}

pub fn experiment(g: &GlobalOpts, kind: ExperimentChoice, args: &DomainArgs, t: &[f64]) -> Result<()> {
    let (d, w) = domain_and_point(args)?;
    let tol = tolerance(g)?;
    let t: Vec<f64> = if t.is_empty() {
        vec![-6.0, -5.0, -4.0, -3.0, -2.0, -1.0, -0.5]
    } else {
        t.to_vec()
    };
    let stream = SampleStream::low_discrepancy(2, g.seed);
    let samples = g.samples.unwrap_or(EXPERIMENT_SAMPLES);
    let report = match kind {
        ExperimentChoice::Monotonicity => {
            let green = green_function(&d, w[0], &tol)?;
            monotonicity_experiment(&green, &t, &stream, samples)?
        }
        ExperimentChoice::LowerBound => lower_bound_experiment(&d, &w, &t, &stream, samples, &tol)?,
    };
    finish_report(g, &report, Format::Json)
}

pub fn verify_all(g: &GlobalOpts, quick: bool) -> Result<()> {
    let results = run_acceptance(quick);
    for r in &results {
        println!("{}", r.line());
    }
    let failed: Vec<u32> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if let Some(path) = &g.out {
        write(Some(path), &(serde_json::to_string_pretty(&results)? + "\n"))?;
    }
    if !failed.is_empty() {
        bail!(Error::Unresolved(format!("failed criteria: {failed:?}")));
    }
    Ok(())
}
