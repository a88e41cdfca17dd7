//! Text forms of targets, step functions and ladders.
//!
//! Targets (`nu`, `mu`):
//! `lebesgue:M`, `uniform:A:B:M`, `triangular:M`, `hist:[m1,...]`,
//! `atoms:[[pos,mass],...]`, `file:PATH` (measure or histogram JSON) and
//! `zero`. Any of them may carry a `*c` suffix scaling the mass by `c`.
//!
//! Step functions (`tau`): `zero`, `const:c`, `identity:M`, `indicator:p`,
//! `ladder:[v1,...]`, `file:PATH` or an inline `{"breakpoints":..,"values":..}`.
//!
//! Scale ladders (`n`): a list `6,8,10,12`, a doubling range `64..2048`, or an
//! arithmetic range `6..12:+2`. Seed lists: `1,4,9` or the inclusive range
//! `1..5`.

use std::path::Path;

use grid_entropy_core::{Histogram, Measure, TauFn};

use crate::formats;

/// A parsed target with the histogram it came from, when it has one.
#[derive(Debug, Clone)]
pub struct Target {
    pub id: String,
    pub measure: Measure,
    pub histogram: Option<Histogram>,
    /// Prokhorov error of the discretization (`1/(2M)` for `M` bins).
    pub resolution: f64,
}

fn split_scale(spec: &str) -> Result<(&str, f64), String> {
    match spec.rsplit_once('*') {
        Some((head, c)) => {
            let c: f64 = c.trim().parse().map_err(|_| format!("bad mass scale `{c}`"))?;
            if !(c >= 0.0 && c.is_finite()) {
                return Err("mass scale must be finite and non-negative".into());
            }
            Ok((head, c))
        }
        None => Ok((spec, 1.0)),
    }
}

fn bins(text: &str) -> Result<usize, String> {
    let m: usize = text.trim().parse().map_err(|_| format!("bad bin count `{text}`"))?;
    if m == 0 {
        return Err("bin count must be positive".into());
    }
    Ok(m)
}

fn from_histogram(id: &str, h: Histogram, scale: f64) -> Result<Target, String> {
    let h = if scale == 1.0 {
        h
    } else {
        Histogram::new(h.masses().iter().map(|m| m * scale).collect()).map_err(|e| e.to_string())?
    };
    Ok(Target {
        id: id.to_string(),
        measure: h.to_measure(),
        resolution: 0.5 / h.bin_count() as f64,
        histogram: Some(h),
    })
}

pub fn parse_target(spec: &str) -> Result<Target, String> {
    let spec = spec.trim();
    let (body, scale) = split_scale(spec)?;
    let (kind, rest) = body.split_once(':').unwrap_or((body, ""));
    match kind {
        "zero" => Ok(Target {
            id: spec.to_string(),
            measure: Measure::zero(),
            histogram: None,
            resolution: 0.0,
        }),
        "lebesgue" => from_histogram(spec, Histogram::uniform(bins(rest)?).map_err(|e| e.to_string())?, scale),
        "uniform" => {
            let parts: Vec<&str> = rest.split(':').collect();
            let [a, b, m] = parts[..] else {
                return Err("expected uniform:A:B:M".into());
            };
            let a: f64 = a.parse().map_err(|_| format!("bad endpoint `{a}`"))?;
            let b: f64 = b.parse().map_err(|_| format!("bad endpoint `{b}`"))?;
            if !(0.0 <= a && a < b && b <= 1.0) {
                return Err("uniform needs 0 <= A < B <= 1".into());
            }
            let h = Histogram::from_cdf(bins(m)?, |x| ((x - a) / (b - a)).clamp(0.0, 1.0)).map_err(|e| e.to_string())?;
            from_histogram(spec, h, scale)
        }
        "triangular" => {
            let h = Histogram::from_cdf(bins(rest)?, |x| x * x).map_err(|e| e.to_string())?;
            from_histogram(spec, h, scale)
        }
        "hist" => {
            let masses: Vec<f64> = serde_json::from_str(rest).map_err(|e| format!("hist masses: {e}"))?;
            from_histogram(spec, Histogram::new(masses).map_err(|e| e.to_string())?, scale)
        }
        "atoms" => {
            let measure = formats::measure_from_json(rest).map_err(|e| format!("atoms: {e}"))?;
            let measure = measure.scale(scale).map_err(|e| e.to_string())?;
            Ok(Target {
                id: spec.to_string(),
                measure,
                histogram: None,
                resolution: 0.0,
            })
        }
        "file" => {
            let text = std::fs::read_to_string(Path::new(rest)).map_err(|e| format!("{rest}: {e}"))?;
            match formats::histogram_from_json(&text) {
                Ok(h) => from_histogram(spec, h, scale),
                Err(_) => {
                    let measure = formats::measure_from_json(&text).map_err(|e| format!("{rest}: {e}"))?;
                    Ok(Target {
                        id: spec.to_string(),
                        measure: measure.scale(scale).map_err(|e| e.to_string())?,
                        histogram: None,
                        resolution: 0.0,
                    })
                }
            }
        }
        _ => Err(format!("unknown target kind `{kind}`")),
    }
}

pub fn parse_tau(spec: &str) -> Result<TauFn, String> {
    let spec = spec.trim();
    if spec.starts_with('{') {
        return formats::tau_from_json(spec);
    }
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let number = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("bad number `{s}`"));
    let tau = match kind {
        "zero" => Ok(TauFn::zero()),
        "const" => Ok(TauFn::constant(number(rest)?)),
        "identity" => TauFn::identity_ladder(bins(rest)?),
        "indicator" => {
            let p = number(rest)?;
            if !(0.0..=1.0).contains(&p) {
                return Err("indicator threshold must lie in [0, 1]".into());
            }
            Ok(TauFn::indicator_from(p))
        }
        "ladder" => {
            let values: Vec<f64> = serde_json::from_str(rest).map_err(|e| format!("ladder values: {e}"))?;
            TauFn::uniform_cells(values)
        }
        "file" => {
            let text = std::fs::read_to_string(rest).map_err(|e| format!("{rest}: {e}"))?;
            return formats::tau_from_json(&text);
        }
        _ => return Err(format!("unknown tau kind `{kind}`")),
    };
    tau.map_err(|e| e.to_string())
}

/// Scale ladder: list, doubling range `a..b` or arithmetic `a..b:+s`.
pub fn parse_scales(spec: &str) -> Result<Vec<u64>, String> {
    let spec = spec.trim();
    let out: Vec<u64> = if let Some((a, rest)) = spec.split_once("..") {
        let (b, step) = match rest.split_once(":+") {
            Some((b, s)) => (b, Some(s)),
            None => (rest, None),
        };
        let a: u64 = a.trim().parse().map_err(|_| format!("bad scale `{a}`"))?;
        let b: u64 = b.trim().parse().map_err(|_| format!("bad scale `{b}`"))?;
        if a == 0 || a > b {
            return Err("range needs 0 < a <= b".into());
        }
        match step {
            Some(s) => {
                let s: u64 = s.trim().parse().map_err(|_| format!("bad step `{s}`"))?;
                if s == 0 {
                    return Err("step must be positive".into());
                }
                (a..=b).step_by(s as usize).collect()
            }
            None => std::iter::successors(Some(a), |&x| x.checked_mul(2)).take_while(|&x| x <= b).collect(),
        }
    } else {
        spec.split(',')
            .map(|x| x.trim().parse::<u64>().map_err(|_| format!("bad scale `{x}`")))
            .collect::<Result<_, _>>()?
    };
    if out.is_empty() || out.contains(&0) {
        return Err("scales must be positive and nonempty".into());
    }
    if out.windows(2).any(|w| w[0] >= w[1]) {
        return Err("scales must be strictly increasing".into());
    }
    Ok(out)
}

pub fn parse_seeds(spec: &str) -> Result<Vec<u64>, String> {
    let spec = spec.trim();
    let out: Vec<u64> = if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| format!("bad seed `{a}`"))?;
        let b: u64 = b.trim().parse().map_err(|_| format!("bad seed `{b}`"))?;
        if a > b {
            return Err("seed range is empty".into());
        }
        (a..=b).collect()
    } else {
        spec.split(',')
            .map(|x| x.trim().parse::<u64>().map_err(|_| format!("bad seed `{x}`")))
            .collect::<Result<_, _>>()?
    };
    if out.is_empty() {
        return Err("no seeds".into());
    }
    Ok(out)
}

pub fn parse_reals(spec: &str) -> Result<Vec<f64>, String> {
    let out: Vec<f64> = spec
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("bad number `{x}`")))
        .collect::<Result<_, _>>()?;
    if out.iter().any(|x| !x.is_finite()) {
        return Err("values must be finite".into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn targets() {
        let t = parse_target("lebesgue:64").unwrap();
        assert_eq!(t.measure.len(), 64);
        assert_eq!(t.resolution, 1.0 / 128.0);
        let t = parse_target("lebesgue:8*2").unwrap();
        assert!((t.measure.total_mass() - 2.0).abs() < 1e-12);
        let t = parse_target("uniform:0:0.5:64").unwrap();
        assert!((t.measure.mass_in(0.0, 0.5) - 1.0).abs() < 1e-12);
        let t = parse_target("atoms:[[0.25,0.5],[0.75,0.5]]").unwrap();
        assert_eq!(t.measure.len(), 2);
        let t = parse_target("hist:[0.5,0.25,0.25]").unwrap();
        assert_eq!(t.histogram.unwrap().bin_count(), 3);
        assert!(parse_target("lebesgue:0").is_err());
        assert!(parse_target("nope:1").is_err());
        assert!(parse_target("zero").unwrap().measure.is_empty());
    }

    #[test]
    fn taus() {
        assert_eq!(parse_tau("zero").unwrap(), TauFn::zero());
        assert_eq!(parse_tau("indicator:0.5").unwrap().eval(0.7), 1.0);
        assert_eq!(parse_tau("ladder:[-1,0,1]").unwrap().cells(), 3);
        let t = parse_tau(r#"{"breakpoints":[0.5],"values":[0,2]}"#).unwrap();
        assert_eq!(t.eval(0.6), 2.0);
        assert!(parse_tau("indicator:2").is_err());
    }

    #[test]
    fn ladders() {
        assert_eq!(parse_scales("64..2048").unwrap(), vec![64, 128, 256, 512, 1024, 2048]);
        assert_eq!(parse_scales("6..12:+2").unwrap(), vec![6, 8, 10, 12]);
        assert_eq!(parse_scales("6,8").unwrap(), vec![6, 8]);
        assert!(parse_scales("8,6").is_err());
        assert_eq!(parse_seeds("1..3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_seeds("4,9").unwrap(), vec![4, 9]);
    }
}
