//! Versioned CSV tables and minimal SVG line plots.
//!
//! Every table starts with a `# analog-dist <name> v<version>` line. Plots
//! are rendered from the CSV text alone.

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const CSV_SCHEMA_VERSION: u32 = 1;

pub fn csv_table<T: Serialize>(name: &str, rows: &[T]) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?).expect("csv is utf-8");
    Ok(format!("# analog-dist {name} v{CSV_SCHEMA_VERSION}\n{body}"))
}

/// Columns of a versioned CSV table as `(header, rows)`.
pub fn parse_table(text: &str) -> CliResult<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = r.headers()?.iter().map(str::to_string).collect();
    let rows = r.records().map(|rec| rec.map(|x| x.iter().map(str::to_string).collect())).collect::<Result<_, _>>()?;
    Ok((headers, rows))
}

#[derive(Debug, Clone)]
pub struct PlotSpec<'a> {
    pub title: &'a str,
    pub x: &'a str,
    pub y: &'a [&'a str],
    /// Split rows into one series per distinct value of this column.
    pub group: Option<&'a str>,
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

/// Render a line plot from a versioned CSV table.
pub fn svg_from_csv(text: &str, spec: &PlotSpec) -> CliResult<String> {
    let (headers, rows) = parse_table(text)?;
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Validation(format!("plot column {name} missing")))
    };
    let xi = col(spec.x)?;
    let gi = spec.group.map(col).transpose()?;
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for y in spec.y {
        let yi = col(y)?;
        for row in &rows {
            let (Ok(xv), Ok(yv)) = (row[xi].parse::<f64>(), row[yi].parse::<f64>()) else { continue };
            if !xv.is_finite() || !yv.is_finite() {
                continue;
            }
            let name = match gi {
                Some(g) if spec.y.len() > 1 => format!("{y} {}={}", headers[g], row[g]),
                Some(g) => format!("{}={}", headers[g], row[g]),
                None => y.to_string(),
            };
            match series.iter_mut().find(|s| s.0 == name) {
                Some(s) => s.1.push((xv, yv)),
                None => series.push((name, vec![(xv, yv)])),
            }
        }
    }
    Ok(line_plot(spec.title, spec.x, &spec.y.join(", "), &series))
}

fn nice(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (w, h, ml, mr, mt, mb) = (720.0, 440.0, 70.0, 170.0, 40.0, 50.0);
    let pts = series.iter().flat_map(|s| s.1.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let pw = w - ml - mr;
    let ph = h - mt - mb;
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| mt + ph - (y - y0) / (y1 - y0) * ph;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n\
         <rect x=\"{ml}\" y=\"{mt}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>\n",
        ml + pw / 2.0,
        escape(title)
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        out += &format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            sx(xv),
            mt + ph + 16.0,
            nice(xv),
            ml - 6.0,
            sy(yv) + 4.0,
            nice(yv)
        );
    }
    out += &format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
        ml + pw / 2.0,
        h - 12.0,
        escape(xlabel),
        mt + ph / 2.0,
        mt + ph / 2.0,
        escape(ylabel)
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        out += &format!("<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n", path.join(" "));
        let ly = mt + 14.0 + 18.0 * i as f64;
        out += &format!(
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n<text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
            ml + pw + 10.0,
            ml + pw + 30.0,
            ml + pw + 36.0,
            ly + 4.0,
            escape(name)
        );
    }
    out + "</svg>\n"
}
