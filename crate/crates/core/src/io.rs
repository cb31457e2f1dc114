//! Persistence formats: cluster and growth CSVs, measure CSVs, run metadata
//! and binary PGM rasters. All writers are deterministic so that reruns
//! produce identical bytes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::{GrowthEntry, GrowthRecord};
use crate::error::{Error, Result};
use crate::lattice::{check_dim, Bounds, Site};
use crate::measures::MeasureEstimate;
use crate::models::ModelConfig;

/// Everything needed to regenerate a simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub toolkit_version: String,
    pub config: ModelConfig,
    pub dim: usize,
    pub particles: usize,
    pub seed: u64,
    pub checkpoint_every: usize,
}

impl RunMetadata {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn coord_header(dim: usize) -> String {
    (1..=dim).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",")
}

fn push_coords(out: &mut String, site: &Site) {
    for (i, c) in site.coords().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{c}");
    }
}

/// `index,x1,...,xD` with a 1-based index, one row per site in attach order.
pub fn cluster_to_csv(dim: usize, sites: &[Site]) -> String {
    let mut out = format!("index,{}\n", coord_header(dim));
    for (i, s) in sites.iter().enumerate() {
        let _ = write!(out, "{},", i + 1);
        push_coords(&mut out, s);
        out.push('\n');
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses [`cluster_to_csv`] output, returning the dimension and the sites
/// in attach order. Errors carry 1-based line numbers.
pub fn parse_cluster_csv(text: &str) -> Result<(usize, Vec<Site>)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    let dim = cols.len().saturating_sub(1);
    if cols.first() != Some(&"index") || cols[1..] != coord_header(dim).split(',').collect::<Vec<_>>()[..] {
        return Err(parse_err(1, format!("expected header `index,x1,...,xD`, got `{header}`")));
    }
    check_dim(dim).map_err(|e| parse_err(1, e.to_string()))?;
    let mut sites = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != dim + 1 {
            return Err(parse_err(
                lineno,
                format!("expected {} fields, found {}", dim + 1, fields.len()),
            ));
        }
        let index: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(lineno, format!("invalid index `{}`", fields[0])))?;
        if index != sites.len() + 1 {
            return Err(parse_err(
                lineno,
                format!("expected index {}, found {index}", sites.len() + 1),
            ));
        }
        let coords = fields[1..]
            .iter()
            .map(|f| f.parse::<i32>().map_err(|_| parse_err(lineno, format!("invalid coordinate `{f}`"))))
            .collect::<Result<Vec<_>>>()?;
        sites.push(Site::new(&coords));
    }
    Ok((dim, sites))
}

/// `n,rad` with the radius printed to full precision.
pub fn growth_to_csv(record: &GrowthRecord) -> String {
    let mut out = String::from("n,rad\n");
    for e in record.entries() {
        let _ = writeln!(out, "{},{}", e.n, e.rad);
    }
    out
}

pub fn parse_growth_csv(text: &str) -> Result<GrowthRecord> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "n,rad" => {}
        _ => return Err(parse_err(1, "expected header `n,rad`")),
    }
    let mut entries = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (n, rad) = line
            .split_once(',')
            .ok_or_else(|| parse_err(lineno, "expected two fields"))?;
        let n = n
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno, format!("invalid n `{n}`")))?;
        let rad = rad
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno, format!("invalid rad `{rad}`")))?;
        entries.push(GrowthEntry { n, rad });
    }
    GrowthRecord::from_entries(entries)
}

/// `x1,...,xD,prob,stderr,hitprob` in lexicographic site order; `hitprob`
/// is empty when the method does not produce it.
pub fn measure_to_csv(est: &MeasureEstimate) -> String {
    let mut out = format!("{},prob,stderr,hitprob\n", coord_header(est.dim));
    for (s, m) in est.iter() {
        push_coords(&mut out, s);
        let _ = write!(out, ",{},{},", m.prob, m.stderr);
        if let Some(h) = m.hit_prob {
            let _ = write!(out, "{h}");
        }
        out.push('\n');
    }
    out
}

/// Binary PGM (P5) of a planar cluster: one pixel per site over the
/// bounding box plus a one-site margin, rows from the largest second
/// coordinate down. Occupied pixels are 0, empty 255; with `age_shading`
/// the attach index maps linearly onto 0..=200.
pub fn render_pgm(sites: &[Site], age_shading: bool) -> Result<Vec<u8>> {
    let bounds = Bounds::of_sites(sites).ok_or(Error::EmptySet)?;
    if bounds.dim != 2 {
        return Err(Error::InvalidParameter(format!(
            "rendering is only available in d = 2, got d = {}",
            bounds.dim
        )));
    }
    let b = bounds.expanded(1);
    let width = (b.hi[0] - b.lo[0] + 1) as usize;
    let height = (b.hi[1] - b.lo[1] + 1) as usize;
    let mut pixels = vec![255u8; width * height];
    let last = sites.len().saturating_sub(1).max(1) as f64;
    for (i, s) in sites.iter().enumerate() {
        let col = (s.coord(0) - b.lo[0]) as usize;
        let row = (b.hi[1] - s.coord(1)) as usize;
        pixels[row * width + col] = if age_shading {
            (200.0 * i as f64 / last).round() as u8
        } else {
            0
        };
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(&pixels);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelKind;

    #[test]
    fn cluster_csv_round_trip() {
        let sites = vec![Site::from([0, 0]), Site::from([1, 0]), Site::from([1, -1])];
        let text = cluster_to_csv(2, &sites);
        assert_eq!(text, "index,x1,x2\n1,0,0\n2,1,0\n3,1,-1\n");
        assert_eq!(parse_cluster_csv(&text).unwrap(), (2, sites));
    }

    #[test]
    fn cluster_csv_errors_carry_line_numbers() {
        let cases = [
            ("", 1),
            ("idx,x1,x2\n", 1),
            ("index,x1\n1,0\n", 1),
            ("index,x1,x2\n1,0,0\n2,1\n", 3),
            ("index,x1,x2\n1,0,0\n3,1,0\n", 3),
            ("index,x1,x2\n1,0,zero\n", 2),
        ];
        for (text, line) in cases {
            match parse_cluster_csv(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn growth_csv_round_trip() {
        let mut r = GrowthRecord::new(ModelKind::Eden, 1);
        r.push(1, 0.0);
        r.push(2, 1.0);
        r.push(3, 2f64.sqrt());
        let back = parse_growth_csv(&growth_to_csv(&r)).unwrap();
        assert_eq!(back.entries(), r.entries());
        assert!(parse_growth_csv("n,rad\n1,0\n3,1\n").is_err());
    }

    #[test]
    fn metadata_round_trip() {
        let m = RunMetadata {
            toolkit_version: "0.1.0".into(),
            config: ModelConfig::new(ModelKind::Dla),
            dim: 3,
            particles: 50,
            seed: 9,
            checkpoint_every: 10,
        };
        assert_eq!(RunMetadata::from_json(&m.to_json().unwrap()).unwrap(), m);
    }

    #[test]
    fn singleton_renders_three_by_three() {
        let img = render_pgm(&[Site::origin(2)], false).unwrap();
        let header = b"P5\n3 3\n255\n";
        assert_eq!(&img[..header.len()], header);
        let px = &img[header.len()..];
        assert_eq!(px.len(), 9);
        assert_eq!(px[4], 0);
        assert_eq!(px.iter().filter(|&&p| p == 255).count(), 8);
        assert!(render_pgm(&[Site::origin(3)], false).is_err());
    }

    #[test]
    fn age_shading_spans_zero_to_two_hundred() {
        let sites = vec![Site::from([0, 0]), Site::from([1, 0]), Site::from([2, 0])];
        let img = render_pgm(&sites, true).unwrap();
        let px = &img[img.len() - 15..];
        // middle row of a 5 x 3 image
        assert_eq!(&px[5..10], &[255, 0, 100, 200, 255]);
    }
}
