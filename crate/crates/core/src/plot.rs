//! Log-scale BER-versus-Eb/N0 plots as plain SVG text.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    /// `(ebno_db, ber)` in file order.
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

/// Reads the `ebno_db` and `ber` columns of a BER or asymptote CSV. Lines
/// starting with `#` are skipped. Asymptote files (no `frames` column) are
/// drawn dashed.
pub fn read_series_csv(text: &str, label: &str) -> Result<Series> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut dashed = true;
    let mut points = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let ln = k + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let Some((x, y, width)) = header else {
            let col = |name: &str| fields.iter().position(|f| *f == name);
            let (Some(x), Some(y)) = (col("ebno_db"), col("ber")) else {
                return Err(Error::Parse {
                    line: ln,
                    msg: "header must contain ebno_db and ber columns".into(),
                });
            };
            dashed = col("frames").is_none();
            header = Some((x, y, fields.len()));
            continue;
        };
        if fields.len() != width {
            return Err(Error::Parse {
                line: ln,
                msg: format!("expected {width} fields, got {}", fields.len()),
            });
        }
        let num = |s: &str| -> Result<f64> {
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Parse {
                    line: ln,
                    msg: format!("bad number {s:?}"),
                }),
            }
        };
        points.push((num(fields[x])?, num(fields[y])?));
    }
    if header.is_none() {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            msg: "no header line".into(),
        });
    }
    Ok(Series {
        label: label.to_string(),
        points,
        dashed,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotStyle {
    pub title: String,
    pub width: u32,
    pub height: u32,
    /// Smaller BER values (including zero) are drawn at this floor.
    pub ber_floor: f64,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self {
            title: String::new(),
            width: 640,
            height: 480,
            ber_floor: 1e-12,
        }
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders the series as one polyline each with a legend in input order.
pub fn emit_plot(series: &[Series], style: &PlotStyle) -> Result<String> {
    if series.is_empty() {
        return Err(Error::InvalidParameter("no series to plot".into()));
    }
    if !(style.ber_floor > 0.0) {
        return Err(Error::InvalidParameter("BER floor must be positive".into()));
    }
    let all = || series.iter().flat_map(|s| s.points.iter());
    if all().next().is_none() {
        return Err(Error::InvalidParameter("all series are empty".into()));
    }
    let clamp = |y: f64| y.max(style.ber_floor);
    let (mut x0, mut x1) = all().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let (ylo, yhi) = all().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
        let l = clamp(p.1).log10();
        (a.min(l), b.max(l))
    });
    let d0 = ylo.floor() as i32;
    let mut d1 = yhi.ceil() as i32;
    if d1 <= d0 {
        d1 = d0 + 1;
    }

    let (w, h) = (style.width as f64, style.height as f64);
    let (left, right, top, bottom) = (70.0, 20.0, 40.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let px = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| top + (d1 as f64 - clamp(y).log10()) / (d1 - d0) as f64 * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">"#,
        style.width, style.height, style.width, style.height
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if !style.title.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            w / 2.0,
            escape(&style.title)
        );
    }
    // decade grid and labels
    for d in d0..=d1 {
        let y = top + (d1 - d) as f64 / (d1 - d0) as f64 * ph;
        let _ = writeln!(
            s,
            r##"<line x1="{left:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            left + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#,
            left - 6.0,
            y + 4.0
        );
    }
    let ticks = 6;
    for k in 0..=ticks {
        let xv = x0 + (x1 - x0) * k as f64 / ticks as f64;
        let x = px(xv);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{top:.2}" x2="{x:.2}" y2="{:.2}" stroke="#eeeeee"/>"##,
            top + ph
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{xv:.2}</text>"#,
            top + ph + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{left:.2}" y="{top:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Eb/N0 (dB)</text>"#,
        left + pw / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">BER</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );

    let style_of = |i: usize, ser: &Series| {
        let dash = if ser.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        (PALETTE[i % PALETTE.len()], dash)
    };
    for (i, ser) in series.iter().enumerate() {
        let (color, dash) = style_of(i, ser);
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            pts.join(" ")
        );
    }

    // legend in the lower-left corner, sized from the labels
    let max_label = series.iter().map(|s| s.label.chars().count()).max().unwrap_or(0) as f64;
    let (lw, lh) = (40.0 + 6.8 * max_label, 8.0 + 16.0 * series.len() as f64);
    let (lx, ly0) = (left + 8.0, top + ph - 8.0 - lh);
    let _ = writeln!(
        s,
        r##"<rect x="{lx:.2}" y="{ly0:.2}" width="{lw:.2}" height="{lh:.2}" fill="white" fill-opacity="0.85" stroke="#999999"/>"##
    );
    for (i, ser) in series.iter().enumerate() {
        let (color, dash) = style_of(i, ser);
        let ly = ly0 + 12.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line class="legend" x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            lx + 6.0,
            lx + 30.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 36.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_ber_and_asymptote_files() {
        let ber = read_series_csv(
            "# seed=1\nebno_db,frames,bits,bit_errors,frame_errors,ber,fer\n1,10,100,5,2,5e-2,2e-1\n",
            "sim",
        )
        .unwrap();
        assert_eq!(ber.points, vec![(1.0, 0.05)]);
        assert!(!ber.dashed);
        let asy = read_series_csv("ebno_db,ber\n0,1e-3\n0.5,1e-4\n", "asy").unwrap();
        assert!(asy.dashed);
        assert_eq!(asy.points.len(), 2);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let err = |t: &str| match read_series_csv(t, "x") {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("{other:?}"),
        };
        assert_eq!(err("ebno_db,ber\n0,1e-3\n0.5,abc\n"), 3);
        assert_eq!(err("# c\nebno_db,ber\n0,1e-3,7\n"), 3);
        assert_eq!(err("x,y\n"), 1);
        assert_eq!(err(""), 1);
    }

    #[test]
    fn empty_series_list_is_an_error() {
        assert!(emit_plot(&[], &PlotStyle::default()).is_err());
    }

    #[test]
    fn legend_follows_input_order() {
        let a = Series {
            label: "first".into(),
            points: vec![(0.0, 1e-1), (1.0, 1e-3)],
            dashed: false,
        };
        let b = Series {
            label: "second".into(),
            points: vec![(0.0, 1e-2), (1.0, 0.0)],
            dashed: true,
        };
        let svg = emit_plot(&[a, b], &PlotStyle::default()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        let (i, j) = (svg.find(">first<").unwrap(), svg.find(">second<").unwrap());
        assert!(i < j);
        // zero BER is drawn at the floor, so the axis reaches 1e-12
        assert!(svg.contains(">1e-12<"));
    }
}
