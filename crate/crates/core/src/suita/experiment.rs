//! Reproducible experiment reports.
//!
//! Each report stores its raw samples and the tolerances its verdicts were
//! judged with, so [`ExperimentReport::recheck`] can re-derive every verdict
//! from the serialized data alone.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_lower_bound_est1, Classification, Family};
use crate::domains::DomainSpec;
use crate::error::{Error, Result};
use crate::green1d::{robin_capacity, sublevel_curve, GreenSeries1D};
use crate::numerics::{SampleKind, SampleStream, Tolerance};
use crate::scalar::Real;

/// Sampling verdicts allow this many combined standard errors.
pub const SIGMA_MULTIPLIER: f64 = 3.0;
/// Relative tolerance for `e^(-2t) lambda({G < t}) -> pi / c^2`.
pub const LIMIT_REL_TOL: f64 = 0.02;
/// Verdict name of the log-convexity evidence, which is never asserted.
pub const CONVEXITY_LABEL: &str = "log-volume convexity";
const F_FLOOR_SLACK: f64 = 1e-10;
// floating-point allowance when a sampled curve is exactly flat
const ROUNDING_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Monotonicity,
    Convexity,
    Limit,
    LowerBound,
    FigureScan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSample {
    pub curve: String,
    pub x: f64,
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    /// False for evidence that is reported but not claimed.
    pub asserted: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMetadata {
    pub description: String,
    pub seed: u64,
    pub sampler: Option<SampleKind>,
    pub samples_per_point: usize,
    pub sigma_multiplier: f64,
    pub limit_rel_tol: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub grid: Vec<f64>,
    pub samples: Vec<ReportSample>,
    pub verdicts: Vec<Verdict>,
    pub metadata: ExperimentMetadata,
}

impl ExperimentReport {
    /// All asserted verdicts passed.
    pub fn passed(&self) -> bool {
        self.verdicts.iter().filter(|v| v.asserted).all(|v| v.passed)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn curve(&self, name: &str) -> Vec<&ReportSample> {
        self.samples.iter().filter(|s| s.curve == name).collect()
    }

    /// Verdicts recomputed from `samples` and `metadata`.
    pub fn recheck(&self) -> Vec<Verdict> {
        match self.kind {
            ExperimentKind::Monotonicity | ExperimentKind::Convexity | ExperimentKind::Limit => {
                curve_verdicts(&self.samples, &self.metadata)
            }
            ExperimentKind::LowerBound => lower_bound_verdicts(&self.samples, &self.metadata),
            ExperimentKind::FigureScan => scan_verdicts(&self.samples),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Sample table. Figure scans use the header `curve,b,F`; other reports
    /// `curve,x,value,error`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let scan = self.kind == ExperimentKind::FigureScan;
        if scan {
            w.write_record(["curve", "b", "F"])?;
        } else {
            w.write_record(["curve", "x", "value", "error"])?;
        }
        for s in &self.samples {
            let mut row = vec![s.curve.clone(), format!("{:e}", s.x), format!("{:e}", s.value)];
            if !scan {
                row.push(format!("{:e}", s.error));
            }
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    /// Reads samples back from [`ExperimentReport::to_csv`] output.
    pub fn samples_from_csv(text: &str) -> Result<Vec<ReportSample>> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let width = rdr.headers()?.len();
        let mut out = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Io(format!("bad numeric field {i} in report CSV")))
            };
            out.push(ReportSample {
                curve: rec.get(0).unwrap_or_default().to_string(),
                x: num(1)?,
                value: num(2)?,
                error: if width > 3 { num(3)? } else { 0.0 },
            });
        }
        Ok(out)
    }
}

fn curve_verdicts(samples: &[ReportSample], meta: &ExperimentMetadata) -> Vec<Verdict> {
    let k = meta.sigma_multiplier;
    let normalized: Vec<&ReportSample> = samples.iter().filter(|s| s.curve == "normalized").collect();
    let lambda: Vec<&ReportSample> = samples.iter().filter(|s| s.curve == "lambda").collect();
    let mut verdicts = Vec::new();

    let mut worst = f64::INFINITY;
    for pair in normalized.windows(2) {
        let sigma = (pair[0].error.powi(2) + pair[1].error.powi(2)).sqrt();
        let rounding = ROUNDING_REL * pair[0].value.abs().max(pair[1].value.abs());
        let slack = pair[1].value - pair[0].value + k * sigma + rounding;
        worst = worst.min(slack);
    }
    verdicts.push(Verdict {
        name: "normalized volume non-decreasing".into(),
        passed: worst >= 0.0,
        asserted: true,
        detail: format!("min (increment + {k} sigma) = {worst:.3e}"),
    });

    if let (Some(first), Some(target)) = (normalized.first(), samples.iter().find(|s| s.curve == "limit")) {
        let rel = ((first.value - target.value) / target.value).abs();
        verdicts.push(Verdict {
            name: "limit pi/c^2".into(),
            passed: rel <= meta.limit_rel_tol,
            asserted: true,
            detail: format!(
                "t = {}: {:.6} vs {:.6} (rel {:.2e}, allowed {})",
                first.x, first.value, target.value, rel, meta.limit_rel_tol
            ),
        });
    }

    // second divided differences of log lambda on a possibly uneven grid
    let mut min_excess = f64::INFINITY;
    for tri in lambda.windows(3) {
        let l: Vec<f64> = tri.iter().map(|s| s.value.ln()).collect();
        let e: Vec<f64> = tri.iter().map(|s| s.error / s.value).collect();
        let (h1, h2) = (tri[1].x - tri[0].x, tri[2].x - tri[1].x);
        let d = (l[2] - l[1]) / h2 - (l[1] - l[0]) / h1;
        let sigma = ((e[2] / h2).powi(2) + (e[1] * (1.0 / h1 + 1.0 / h2)).powi(2) + (e[0] / h1).powi(2)).sqrt();
        min_excess = min_excess.min(d + k * sigma);
    }
    if min_excess.is_finite() {
        verdicts.push(Verdict {
            name: CONVEXITY_LABEL.into(),
            passed: min_excess >= 0.0,
            asserted: false,
            detail: format!("min (second difference + {k} sigma) = {min_excess:.3e}; evidence only"),
        });
    }
    verdicts
}

fn lower_bound_verdicts(samples: &[ReportSample], meta: &ExperimentMetadata) -> Vec<Verdict> {
    let k = meta.sigma_multiplier;
    samples
        .iter()
        .filter(|s| s.curve == "margin")
        .map(|s| Verdict {
            name: format!("margin at t = {}", s.x),
            passed: s.value >= -k * s.error,
            asserted: true,
            detail: format!("{:.6e} +- {:.2e}", s.value, s.error),
        })
        .collect()
}

fn scan_verdicts(samples: &[ReportSample]) -> Vec<Verdict> {
    let min = samples.iter().map(|s| s.value).fold(f64::INFINITY, f64::min);
    let max = samples.iter().map(|s| s.value).fold(f64::NEG_INFINITY, f64::max);
    let convex_bound: f64 = Classification::Convex.bound().expect("convex bound");
    vec![
        Verdict {
            name: "F >= 1".into(),
            passed: min >= 1.0 - F_FLOOR_SLACK,
            asserted: true,
            detail: format!("min F = {min:.12}"),
        },
        Verdict {
            name: "F <= 4".into(),
            passed: max <= convex_bound,
            asserted: true,
            detail: format!("max F = {max:.12}"),
        },
    ]
}

/// Samples `e^(-2t) lambda({G < t})` for a planar Green function and judges
/// monotonicity (asserted), the limit `pi / c^2` at the lowest level
/// (asserted) and convexity of `log lambda` (evidence only).
pub fn monotonicity_experiment<T: Real>(
    green: &GreenSeries1D<T>,
    t_grid: &[T],
    stream: &SampleStream,
    count: usize,
) -> Result<ExperimentReport> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("empty t-grid".into()));
    }
    let curve = sublevel_curve(green, t_grid, stream, count)?;
    let normalized_se = curve.normalized_stderr();
    for (i, (&v, &se)) in curve.normalized.iter().zip(&normalized_se).enumerate() {
        if !(se < v) {
            return Err(Error::Unresolved(format!(
                "sampling error too large at t = {}",
                curve.t[i].to_f64_lossy()
            )));
        }
    }
    let cap = robin_capacity(green);
    let limit = (T::PI() / (cap * cap)).to_f64_lossy();
    let mut samples = Vec::new();
    for (i, t) in curve.t.iter().enumerate() {
        let t = t.to_f64_lossy();
        samples.push(ReportSample {
            curve: "lambda".into(),
            x: t,
            value: curve.lambda[i].to_f64_lossy(),
            error: curve.stderr[i].to_f64_lossy(),
        });
        samples.push(ReportSample {
            curve: "normalized".into(),
            x: t,
            value: curve.normalized[i].to_f64_lossy(),
            error: normalized_se[i].to_f64_lossy(),
        });
    }
    samples.push(ReportSample {
        curve: "limit".into(),
        x: curve.t[0].to_f64_lossy(),
        value: limit,
        error: 0.0,
    });
    let metadata = ExperimentMetadata {
        description: format!(
            "{:?} with pole {}",
            green.domain,
            num_complex::Complex::new(green.pole.re.to_f64_lossy(), green.pole.im.to_f64_lossy())
        ),
        seed: stream.seed,
        sampler: Some(stream.kind),
        samples_per_point: count,
        sigma_multiplier: SIGMA_MULTIPLIER,
        limit_rel_tol: LIMIT_REL_TOL,
        abs_tol: green.tail_bound.to_f64_lossy(),
        rel_tol: 0.0,
    };
    let verdicts = curve_verdicts(&samples, &metadata);
    Ok(ExperimentReport {
        kind: ExperimentKind::Monotonicity,
        grid: t_grid.iter().map(|t| t.to_f64_lossy()).collect(),
        samples,
        verdicts,
        metadata,
    })
}

/// Lower-bound margins over a t-grid; level `i` samples with `stream.split(i)`.
pub fn lower_bound_experiment<T: Real>(
    domain: &DomainSpec<T>,
    w: &[num_complex::Complex<T>],
    t_grid: &[T],
    stream: &SampleStream,
    count: usize,
    tol: &Tolerance<T>,
) -> Result<ExperimentReport> {
    let mut samples = Vec::new();
    for (i, &t) in t_grid.iter().enumerate() {
        let m = check_lower_bound_est1(domain, w, t, &stream.split(i as u64), count, tol)?;
        samples.push(ReportSample {
            curve: "margin".into(),
            x: t.to_f64_lossy(),
            value: m.margin.to_f64_lossy(),
            error: m.sigma.to_f64_lossy(),
        });
    }
    let metadata = ExperimentMetadata {
        description: format!("lower bound on {domain:?}"),
        seed: stream.seed,
        sampler: Some(stream.kind),
        samples_per_point: count,
        sigma_multiplier: SIGMA_MULTIPLIER,
        limit_rel_tol: LIMIT_REL_TOL,
        abs_tol: tol.abs_tol.to_f64_lossy(),
        rel_tol: tol.rel_tol.to_f64_lossy(),
    };
    let verdicts = lower_bound_verdicts(&samples, &metadata);
    Ok(ExperimentReport {
        kind: ExperimentKind::LowerBound,
        grid: t_grid.iter().map(|t| t.to_f64_lossy()).collect(),
        samples,
        verdicts,
        metadata,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ScanFamily<T = f64> {
    Ell1 { m: T, ns: Vec<usize> },
    Power { ms: Vec<T> },
}

impl<T: Real> ScanFamily<T> {
    pub fn members(&self) -> Vec<Family<T>> {
        match self {
            ScanFamily::Ell1 { m, ns } => ns.iter().map(|&n| Family::Ell1 { m: *m, n }).collect(),
            ScanFamily::Power { ms } => ms.iter().map(|&m| Family::Power { m }).collect(),
        }
    }
}

/// `F` along each family member over `b_grid`, one curve per member.
pub fn figure_scan<T: Real>(family: &ScanFamily<T>, b_grid: &[T]) -> Result<ExperimentReport> {
    let members = family.members();
    if members.is_empty() || b_grid.is_empty() {
        return Err(Error::InvalidParameter("figure scan needs non-empty family and grid".into()));
    }
    for m in &members {
        m.validate()?;
    }
    let cells: Vec<(usize, usize)> = (0..members.len())
        .flat_map(|i| (0..b_grid.len()).map(move |j| (i, j)))
        .collect();
    let values: Vec<T> = cells
        .par_iter()
        .map(|&(i, j)| members[i].f(b_grid[j]))
        .collect::<Result<_>>()?;
    let samples: Vec<ReportSample> = cells
        .iter()
        .zip(&values)
        .map(|(&(i, j), &f)| ReportSample {
            curve: members[i].label(),
            x: b_grid[j].to_f64_lossy(),
            value: f.to_f64_lossy(),
            error: 0.0,
        })
        .collect();
    let verdicts = scan_verdicts(&samples);
    Ok(ExperimentReport {
        kind: ExperimentKind::FigureScan,
        grid: b_grid.iter().map(|b| b.to_f64_lossy()).collect(),
        samples,
        verdicts,
        metadata: ExperimentMetadata {
            description: format!("F scan over {}", serde_json::to_string(&members.iter().map(|m| m.label()).collect::<Vec<_>>())?),
            seed: 0,
            sampler: None,
            samples_per_point: 0,
            sigma_multiplier: SIGMA_MULTIPLIER,
            limit_rel_tol: LIMIT_REL_TOL,
            abs_tol: 0.0,
            rel_tol: 0.0,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green1d::solve_green_annulus;
    use num_complex::Complex;
    use std::f64::consts::PI;

    fn interior_grid(n: usize) -> Vec<f64> {
        (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
    }

    #[test]
    fn disk_curve_is_flat() {
        let green = GreenSeries1D::disk(Complex::new(0.0, 0.0)).unwrap();
        let stream = SampleStream::low_discrepancy(2, 0);
        let report = monotonicity_experiment(&green, &[-3.0, -2.0, -1.0, -0.5], &stream, 1 << 16).unwrap();
        for s in report.curve("normalized") {
            assert!((s.value - PI).abs() < 4.0 * s.error + 1e-9);
        }
        assert!(report.passed(), "{:#?}", report.verdicts);
        assert_eq!(report.recheck(), report.verdicts);
    }

    #[test]
    fn annulus_monotone_and_limit() {
        let r: f64 = 0.2;
        let green = solve_green_annulus(r, Complex::new(r.sqrt(), 0.0), &Tolerance::default()).unwrap();
        let stream = SampleStream::low_discrepancy(2, 0);
        let grid = [-6.0, -5.0, -4.0, -3.0, -2.0, -1.0, -0.5];
        let report = monotonicity_experiment(&green, &grid, &stream, 1 << 18).unwrap();
        assert!(report.passed(), "{:#?}", report.verdicts);
        let convexity = report.verdict(CONVEXITY_LABEL).unwrap();
        assert!(!convexity.asserted);
        let back = ExperimentReport::from_json(&report.to_json().unwrap()).unwrap();
        assert_eq!(back.recheck(), report.verdicts);
    }

    #[test]
    fn figure_one_envelope() {
        let grid = interior_grid(200);
        let report = figure_scan(&ScanFamily::Ell1 { m: 0.5, ns: vec![2, 3, 4, 5, 6] }, &grid).unwrap();
        assert_eq!(report.samples.len(), 1000);
        assert!(report.passed());
        assert!(report.samples.iter().all(|s| s.value <= 1.0042));
        let csv = report.to_csv().unwrap();
        assert!(csv.starts_with("curve,b,F\n"));
        let samples = ExperimentReport::samples_from_csv(&csv).unwrap();
        let reread = ExperimentReport { samples, ..report.clone() };
        assert_eq!(reread.recheck(), report.verdicts);
    }

    #[test]
    fn power_scan_is_deterministic() {
        let grid = interior_grid(8);
        let fam = ScanFamily::Power { ms: vec![0.5, 2.0] };
        let a = figure_scan(&fam, &grid).unwrap();
        let b = figure_scan(&fam, &grid).unwrap();
        assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
        assert!(a.passed());
    }

    #[test]
    fn lower_bound_report() {
        let r: f64 = 0.2;
        let d = DomainSpec::annulus(r).unwrap();
        let stream = SampleStream::low_discrepancy(2, 0);
        let rep = lower_bound_experiment(&d, &[Complex::new(r.sqrt(), 0.0)], &[-3.0, -2.0], &stream, 1 << 16, &Tolerance::default())
            .unwrap();
        assert!(rep.passed());
        assert_eq!(rep.recheck(), rep.verdicts);
    }
}
