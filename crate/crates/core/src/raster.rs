//! Local-discrepancy heatmaps.
//!
//! Pixel `(a, b)` is anchored at the cell center
//! `q = ((a + 0.5)/res, (b + 0.5)/res)` and holds the worse of the closed
//! overfill and the open underfill of the box `[0, q]`, floored at zero.
//! Images are written top row first, so `y` grows upwards as in a plot.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrepancy::{corner_frame, discrepancy, Measure};
use crate::error::{Error, Result};
use crate::pointset::PointSet;

pub const DEFAULT_RESOLUTION: usize = 512;
pub const MIN_RESOLUTION: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub resolution: usize,
    /// Row-major, `values[b * resolution + a]` for pixel column `a`, row `b`.
    pub values: Vec<f64>,
    pub measure: Measure,
    pub truncated: bool,
    pub threshold: Option<f64>,
}

impl Heatmap {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[b * self.resolution + a]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Pixel rows from the top of the image (largest `y`) down.
    fn image_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.resolution).rev()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RasterFormat {
    Pgm,
    Csv,
}

impl FromStr for RasterFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pgm" => Ok(Self::Pgm),
            "csv" => Ok(Self::Csv),
            other => Err(Error::invalid(format!("unknown raster format '{other}' (expected pgm or csv)"))),
        }
    }
}

fn centers(res: usize) -> Vec<f64> {
    (0..res).map(|a| (a as f64 + 0.5) / res as f64).collect()
}

/// Star local field of `p` at the pixel centers.
fn star_field(p: &PointSet, res: usize) -> Vec<f64> {
    let c = centers(res);
    let n = p.len() as f64;
    let pts: Vec<(f64, f64)> = p.points().map(|x| (x[0], x[1])).collect();
    let mut out = vec![0.0; res * res];
    out.par_chunks_mut(res).enumerate().for_each(|(b, row)| {
        let qy = c[b];
        // first pixel column whose center is >= (resp. >) each point's x
        let mut closed = vec![0usize; res + 1];
        let mut open = vec![0usize; res + 1];
        for &(x, y) in &pts {
            if y <= qy {
                closed[c.partition_point(|&q| q < x)] += 1;
            }
            if y < qy {
                open[c.partition_point(|&q| q <= x)] += 1;
            }
        }
        let (mut cc, mut oc) = (0usize, 0usize);
        for (a, v) in row.iter_mut().enumerate() {
            cc += closed[a];
            oc += open[a];
            let vol = c[a] * qy;
            *v = (cc as f64 / n - vol).max(vol - oc as f64 / n).max(0.0);
        }
    });
    out
}

fn check(p: &PointSet, resolution: usize) -> Result<()> {
    p.require_dim(2)?;
    if p.is_empty() {
        return Err(Error::invalid("cannot rasterize an empty point set"));
    }
    if resolution < MIN_RESOLUTION {
        return Err(Error::invalid(format!("resolution must be at least {MIN_RESOLUTION}")));
    }
    Ok(())
}

/// Local-discrepancy heatmap for the star or 4-corner measure.
///
/// For the 4-corner measure each pixel takes the worst of the four boxes
/// spanned by its center and a corner of the square.
pub fn heatmap(p: &PointSet, resolution: usize, measure: Measure) -> Result<Heatmap> {
    check(p, resolution)?;
    let values = match measure {
        Measure::Star => star_field(p, resolution),
        Measure::Corner4 => {
            let res = resolution;
            let mut acc = vec![0.0f64; res * res];
            for id in 1..=4u8 {
                let field = star_field(&corner_frame(p, id)?, res);
                let (fx, fy) = (matches!(id, 2 | 3), matches!(id, 3 | 4));
                for b in 0..res {
                    for a in 0..res {
                        let sa = if fx { res - 1 - a } else { a };
                        let sb = if fy { res - 1 - b } else { b };
                        let v = &mut acc[b * res + a];
                        *v = v.max(field[sb * res + sa]);
                    }
                }
            }
            acc
        }
        other => return Err(Error::UnsupportedMeasure(other.to_string())),
    };
    Ok(Heatmap { resolution, values, measure, truncated: false, threshold: None })
}

/// Star heatmap with every value below `d*(P) − 1/n` set to zero, leaving
/// only the near-critical regions.
pub fn truncated_heatmap(p: &PointSet, resolution: usize) -> Result<Heatmap> {
    let mut h = heatmap(p, resolution, Measure::Star)?;
    let threshold = discrepancy(p, Measure::Star)?.value - 1.0 / p.len() as f64;
    for v in &mut h.values {
        if *v < threshold {
            *v = 0.0;
        }
    }
    h.truncated = true;
    h.threshold = Some(threshold);
    Ok(h)
}

/// 16-bit binary PGM, scaled so the largest value maps to 65535.
pub fn pgm_bytes(h: &Heatmap) -> Vec<u8> {
    let res = h.resolution;
    let max = h.max();
    let mut out = format!("P5\n{res} {res}\n65535\n").into_bytes();
    out.reserve(2 * res * res);
    for row in h.image_rows() {
        for &v in row {
            let level = if max > 0.0 { (v / max * 65535.0).round() as u16 } else { 0 };
            out.extend_from_slice(&level.to_be_bytes());
        }
    }
    out
}

/// Absolute values, one image row per line.
pub fn csv_string(h: &Heatmap) -> String {
    let mut out = String::new();
    for row in h.image_rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_raster(h: &Heatmap, path: impl AsRef<Path>, format: RasterFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        RasterFormat::Pgm => pgm_bytes(h),
        RasterFormat::Csv => csv_string(h).into_bytes(),
    };
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrepancy::{local_closed, local_open, star_discrepancy};
    use crate::pointset::{fibonacci_set, random_set};

    fn single() -> PointSet {
        PointSet::from_pairs(&[(0.5, 0.5)]).unwrap()
    }

    #[test]
    fn single_point_pixels() {
        let h = heatmap(&single(), 4, Measure::Star).unwrap();
        assert!((h.get(3, 3) - (1.0 - 0.765625)).abs() < 1e-12);
        assert!((h.get(0, 0) - 0.015625).abs() < 1e-12);
    }

    #[test]
    fn field_matches_direct_evaluation() {
        let p = random_set(12, 2, 5).unwrap();
        let res = 16;
        let h = heatmap(&p, res, Measure::Star).unwrap();
        for b in 0..res {
            for a in 0..res {
                let q = [(a as f64 + 0.5) / res as f64, (b as f64 + 0.5) / res as f64];
                let v = local_closed(&p, &q).unwrap().max(local_open(&p, &q).unwrap()).max(0.0);
                assert!((h.get(a, b) - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bounded_by_global_value() {
        let p = fibonacci_set(21).unwrap();
        let d = star_discrepancy(&p).value;
        let h = heatmap(&p, 64, Measure::Star).unwrap();
        assert!(h.values.iter().all(|&v| (0.0..=d + 1e-12).contains(&v)));
        let c4 = heatmap(&p, 64, Measure::Corner4).unwrap();
        let d4 = discrepancy(&p, Measure::Corner4).unwrap().value;
        assert!(c4.max() <= d4 + 1e-12);
        assert!(c4.values.iter().zip(&h.values).all(|(a, b)| a >= b));
    }

    #[test]
    fn truncation_keeps_only_large_values() {
        let p = fibonacci_set(13).unwrap();
        let h = truncated_heatmap(&p, 32).unwrap();
        let t = h.threshold.unwrap();
        assert!(h.truncated);
        assert!(h.values.iter().all(|&v| v == 0.0 || v >= t));
    }

    #[test]
    fn encodings() {
        let h = heatmap(&single(), 4, Measure::Star).unwrap();
        let pgm = pgm_bytes(&h);
        let header = b"P5\n4 4\n65535\n";
        assert_eq!(&pgm[..header.len()], header);
        assert_eq!(pgm.len(), header.len() + 32);
        assert!(pgm[header.len()..].chunks(2).any(|c| c == [0xff, 0xff]));
        let csv = csv_string(&h);
        assert_eq!(csv.lines().count(), 4);
        // top row first: its last cell is the pixel nearest (1, 1)
        let top_right: f64 = csv.lines().next().unwrap().split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(top_right, h.get(3, 3));
        let zero = Heatmap { values: vec![0.0; 16], ..h };
        assert!(pgm_bytes(&zero)[header.len()..].iter().all(|&b| b == 0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(heatmap(&single(), 1, Measure::Star).is_err());
        assert!(matches!(heatmap(&single(), 8, Measure::Extreme), Err(Error::UnsupportedMeasure(_))));
        assert!(heatmap(&random_set(4, 3, 0).unwrap(), 8, Measure::Star).is_err());
        assert!("png".parse::<RasterFormat>().is_err());
    }
}
