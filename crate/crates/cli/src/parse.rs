use anyhow::{bail, Context, Result};
use bergman_suita::domains::DomainSpec;
use num_complex::Complex;

use crate::DomainArgs;

fn coordinate(text: &str, sqrt_r: Option<f64>) -> Result<Complex<f64>> {
    let text = text.trim();
    if text == "sqrt" {
        return match sqrt_r {
            Some(s) => Ok(Complex::new(s, 0.0)),
            None => bail!("`sqrt` is only meaningful on an annulus"),
        };
    }
    let (re, im) = match text.split_once(':') {
        Some((re, im)) => (re, im),
        None => (text, "0"),
    };
    let re: f64 = re.trim().parse().with_context(|| format!("bad coordinate `{text}`"))?;
    let im: f64 = im.trim().parse().with_context(|| format!("bad coordinate `{text}`"))?;
    Ok(Complex::new(re, im))
}

/// Parses `a,b:c,...` into complex coordinates.
pub fn point(text: &str, sqrt_r: Option<f64>) -> Result<Vec<Complex<f64>>> {
    text.split(',').map(|c| coordinate(c, sqrt_r)).collect()
}

pub fn domain(args: &DomainArgs) -> Result<DomainSpec<f64>> {
    if let Some(r) = args.annulus {
        return Ok(DomainSpec::annulus(r)?);
    }
    let Some(text) = args.domain.as_deref() else {
        bail!("a domain is required (--domain or --annulus)");
    };
    let json = match text.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?,
        None => text.to_string(),
    };
    Ok(DomainSpec::from_json(&json)?)
}

/// Domain and base point; the point defaults to the origin, or to
/// `sqrt r` on an annulus.
pub fn domain_and_point(args: &DomainArgs) -> Result<(DomainSpec<f64>, Vec<Complex<f64>>)> {
    let d = domain(args)?;
    let sqrt_r = match d {
        DomainSpec::Annulus { r } => Some(r.sqrt()),
        _ => None,
    };
    let w = match args.w.as_deref() {
        Some(text) => point(text, sqrt_r)?,
        None => match sqrt_r {
            Some(s) => vec![Complex::new(s, 0.0)],
            None => vec![Complex::new(0.0, 0.0); d.dimension()],
        },
    };
    if w.len() != d.dimension() {
        bail!("base point has {} coordinates, the domain has dimension {}", w.len(), d.dimension());
    }
    Ok((d, w))
}

/// `2..6` (inclusive) or `2,3,5`.
pub fn dimensions(text: &str) -> Result<Vec<usize>> {
    if let Some((lo, hi)) = text.split_once("..") {
        let hi = hi.strip_prefix('=').unwrap_or(hi);
        let lo: usize = lo.trim().parse().context("bad range start")?;
        let hi: usize = hi.trim().parse().context("bad range end")?;
        if lo > hi {
            bail!("empty dimension range {text}");
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse().with_context(|| format!("bad dimension `{s}`")))
        .collect()
}
