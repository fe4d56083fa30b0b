//! File formats: grayscale PGM (P5) and PNG input, PGM output, metrics CSV,
//! and a small self-contained SVG line plotter.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::image::PixelImage;
use crate::observer::ErrorReport;

/// Loads an 8-bit grayscale image (PGM P5 or PNG), mapping intensities to
/// [0,1] by /255. Intrinsics default to fu = fv = width/2, centered principal
/// point, unless `intrinsics` overrides them.
pub fn load_image(path: &Path, intrinsics: Option<CameraIntrinsics>) -> Result<PixelImage> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let (data, width, height) = match ext.as_str() {
        "pgm" => read_pgm(path)?,
        "png" => read_png(path)?,
        other => {
            return Err(Error::Config(format!(
                "unsupported image format '{other}' (expected .pgm or .png)"
            )))
        }
    };
    let k = match intrinsics {
        Some(k) => {
            if k.width != width || k.height != height {
                return Err(Error::Config(format!(
                    "intrinsics size {}x{} does not match image {}x{}",
                    k.width, k.height, width, height
                )));
            }
            k
        }
        None => CameraIntrinsics::default_for(width, height),
    };
    PixelImage::new(data, k)
}

fn read_pgm(path: &Path) -> Result<(Vec<f64>, usize, usize)> {
    let bytes = fs::read(path)?;
    let mut pos = 0usize;
    let mut token = |bytes: &[u8]| -> Result<String> {
        // skip whitespace and '#' comment lines
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::ImageDecode("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token(&bytes)?;
    if magic != "P5" {
        return Err(Error::ImageDecode(format!(
            "expected P5 magic, found '{magic}'"
        )));
    }
    let width: usize = token(&bytes)?
        .parse()
        .map_err(|_| Error::ImageDecode("bad width".into()))?;
    let height: usize = token(&bytes)?
        .parse()
        .map_err(|_| Error::ImageDecode("bad height".into()))?;
    let maxval: usize = token(&bytes)?
        .parse()
        .map_err(|_| Error::ImageDecode("bad maxval".into()))?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::ImageDecode(format!("unsupported maxval {maxval}")));
    }
    pos += 1; // the single whitespace after maxval
    let n = width * height;
    if bytes.len() < pos + n {
        return Err(Error::ImageDecode("truncated PGM payload".into()));
    }
    let data = bytes[pos..pos + n]
        .iter()
        .map(|&b| b as f64 / maxval as f64)
        .collect();
    Ok((data, width, height))
}

fn read_png(path: &Path) -> Result<(Vec<f64>, usize, usize)> {
    let img = image::open(path)
        .map_err(|e| Error::ImageDecode(e.to_string()))?
        .into_luma8();
    let (width, height) = (img.width() as usize, img.height() as usize);
    let data = img.into_raw().into_iter().map(|b| b as f64 / 255.0).collect();
    Ok((data, width, height))
}

/// Writes a pixel image as binary PGM. Invalid pixels are written as 0.
pub fn write_pgm(path: &Path, img: &PixelImage) -> Result<()> {
    let k = img.intrinsics();
    let mut out = BufWriter::new(fs::File::create(path)?);
    write!(out, "P5\n{} {}\n255\n", k.width, k.height)?;
    let bytes: Vec<u8> = img
        .pixels()
        .iter()
        .map(|&p| (p.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    out.write_all(&bytes)?;
    Ok(())
}

/// Display-offset difference image: 0.5 + (a - b)/2, invalid where either is.
pub fn difference_image(a: &PixelImage, b: &PixelImage) -> PixelImage {
    let k = *a.intrinsics();
    let data: Vec<f64> = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| (0.5 + (x - y) / 2.0).clamp(0.0, 1.0))
        .collect();
    let valid: Vec<bool> = a
        .valid_mask()
        .iter()
        .zip(b.valid_mask())
        .map(|(&p, &q)| p && q)
        .collect();
    PixelImage::with_mask(data, valid, k).expect("sizes match")
}

/// Writes the metrics CSV: comment header lines (prefixed '#') followed by
/// `t,eps_H,eps_I,eps_Gamma,delta_norm`. Missing eps_Gamma cells are empty.
pub fn write_metrics_csv(path: &Path, header_lines: &[String], reports: &[ErrorReport]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for line in header_lines {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "t,eps_H,eps_I,eps_Gamma,delta_norm")?;
    for r in reports {
        let gamma = r
            .eps_gamma
            .map(|g| format!("{g:.12e}"))
            .unwrap_or_default();
        writeln!(
            out,
            "{:.6},{:.12e},{:.12e},{},{:.12e}",
            r.t, r.eps_h, r.eps_i, gamma, r.delta_norm
        )?;
    }
    Ok(())
}

/// One curve for the SVG plot.
pub struct PlotSeries<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Emits a log-y line plot as standalone SVG 1.1. Non-positive values are
/// clipped to the plot floor.
pub fn write_svg_plot(
    path: &Path,
    title: &str,
    series: &[PlotSeries],
) -> Result<()> {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const ML: f64 = 70.0;
    const MR: f64 = 20.0;
    const MT: f64 = 40.0;
    const MB: f64 = 50.0;

    let xs: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .collect();
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .filter(|y| *y > 0.0)
        .collect();
    let (x_min, x_max) = bounds(&xs, (0.0, 1.0));
    let (y_min_raw, y_max_raw) = bounds(&ys, (1e-12, 1.0));
    let ly_min = y_min_raw.log10().floor();
    let ly_max = y_max_raw.log10().ceil().max(ly_min + 1.0);

    let sx = |x: f64| ML + (x - x_min) / (x_max - x_min).max(1e-300) * (W - ML - MR);
    let sy = |y: f64| {
        let ly = y.max(10f64.powf(ly_min)).log10();
        MT + (ly_max - ly) / (ly_max - ly_min) * (H - MT - MB)
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        W / 2.0,
        title
    ));
    // axes
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB
    ));
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n",
        H - MB,
        W - MR
    ));
    // decade gridlines and labels
    let mut d = ly_min as i64;
    while d <= ly_max as i64 {
        let y = sy(10f64.powi(d as i32));
        svg.push_str(&format!(
            "<line x1=\"{ML}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#dddddd\"/>\n",
            W - MR
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e{d}</text>\n",
            ML - 6.0,
            y + 4.0
        ));
        d += 1;
    }
    // x labels at min/max
    for x in [x_min, x_max] {
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{x:.2}</text>\n",
            sx(x),
            H - MB + 18.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">t [s]</text>\n",
        (ML + W - MR) / 2.0,
        H - 12.0
    ));
    // curves
    for s in series {
        let mut pts = String::new();
        for &(x, y) in &s.points {
            pts.push_str(&format!("{:.2},{:.2} ", sx(x), sy(y)));
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            s.color,
            pts.trim_end()
        ));
    }
    // legend
    for (i, s) in series.iter().enumerate() {
        let y = MT + 16.0 * i as f64 + 8.0;
        let x = W - MR - 150.0;
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            x + 24.0,
            s.color
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            x + 30.0,
            y + 4.0,
            s.label
        ));
    }
    svg.push_str("</svg>\n");
    fs::write(path, svg)?;
    Ok(())
}

fn bounds(vals: &[f64], fallback: (f64, f64)) -> (f64, f64) {
    if vals.is_empty() {
        return fallback;
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        hi = lo + 1.0;
    }
    (lo, hi)
}
