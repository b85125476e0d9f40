//! Self-contained SVG charts from CSV files.

use std::fmt::Write as _;

use crate::error::{CliError, CliResult};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

/// A parsed CSV table: header plus string cells.
#[derive(Clone, Debug)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| CliError::user(format!("csv: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.is_empty() || header.iter().all(String::is_empty) {
            return Err(CliError::user("csv is empty"));
        }
        let rows = reader
            .records()
            .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<Vec<Vec<String>>, _>>()
            .map_err(|e| CliError::user(format!("csv: {e}")))?;
        if rows.is_empty() {
            return Err(CliError::user("csv has no data rows"));
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> CliResult<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::user(format!("unknown column {name:?} (have: {})", self.header.join(", "))))
    }

    /// Rows marked as means (`mean` in the first or `seed` column) when
    /// any exist, otherwise all rows.
    fn summary_rows(&self) -> Vec<&Vec<String>> {
        let seed = self.header.iter().position(|h| h == "seed");
        let is_mean = |r: &Vec<String>| r[0] == "mean" || seed.is_some_and(|i| r[i] == "mean");
        let means: Vec<&Vec<String>> = self.rows.iter().filter(|r| is_mean(r)).collect();
        if means.is_empty() {
            self.rows.iter().collect()
        } else {
            means
        }
    }

    fn label(&self, row: &[String]) -> String {
        match self.header.iter().position(|h| h == "variant") {
            Some(i) => row[i].clone(),
            None => row[0].clone(),
        }
    }
}

fn number(cell: &str, column: &str) -> CliResult<Option<f64>> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>()
        .map(Some)
        .map_err(|_| CliError::user(format!("column {column:?}: {cell:?} is not a number")))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open(title: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    )
    .expect("string write");
    s
}

fn axes(s: &mut String, lo: f64, hi: f64) {
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#).expect("write");
    writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#).expect("write");
    for i in 0..=4 {
        let v = lo + (hi - lo) * i as f64 / 4.0;
        let y = y0 - (y0 - y1) * i as f64 / 4.0;
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
            x0 - 6.0,
            y + 4.0,
            fmt_tick(v)
        )
        .expect("write");
        writeln!(s, r##"<line x1="{x0}" y1="{y:.1}" x2="{x1}" y2="{y:.1}" stroke="#dddddd"/>"##).expect("write");
    }
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn value_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let lo = lo.min(0.0);
    if hi <= lo {
        (lo, lo + 1.0)
    } else {
        (lo, hi)
    }
}

fn legend(s: &mut String, names: &[String]) {
    for (i, n) in names.iter().enumerate() {
        let y = MARGIN + 4.0 + 16.0 * i as f64;
        let x = WIDTH - MARGIN + 6.0;
        writeln!(
            s,
            r#"<rect x="{x}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10">{}</text>"#,
            y - 9.0,
            PALETTE[i % PALETTE.len()],
            x + 13.0,
            y,
            escape(n)
        )
        .expect("write");
    }
}

/// Line chart of `ys` against the numeric column `x`, points sorted by x.
pub fn line_chart(table: &Table, x: &str, ys: &[String], title: &str) -> CliResult<String> {
    if ys.is_empty() {
        return Err(CliError::user("no y columns given"));
    }
    let xi = table.column(x)?;
    let yi: Vec<usize> = ys.iter().map(|c| table.column(c)).collect::<CliResult<_>>()?;
    let rows = table.summary_rows();
    let mut series: Vec<Vec<(f64, f64)>> = vec![Vec::new(); ys.len()];
    for r in &rows {
        let Some(xv) = number(&r[xi], x)? else { continue };
        for (k, &c) in yi.iter().enumerate() {
            if let Some(yv) = number(&r[c], &ys[k])? {
                series[k].push((xv, yv));
            }
        }
    }
    for s in &mut series {
        s.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    if series.iter().all(Vec::is_empty) {
        return Err(CliError::user("nothing to plot"));
    }
    let (xlo, xhi) = {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(xv, _) in series.iter().flatten() {
            lo = lo.min(xv);
            hi = hi.max(xv);
        }
        if hi <= lo { (lo - 0.5, lo + 0.5) } else { (lo, hi) }
    };
    let (ylo, yhi) = value_range(series.iter().flatten().map(|p| p.1));
    let px = |v: f64| MARGIN + (WIDTH - 2.0 * MARGIN) * (v - xlo) / (xhi - xlo);
    let py = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - ylo) / (yhi - ylo);

    let mut s = open(title);
    axes(&mut s, ylo, yhi);
    let mut ticks: Vec<f64> = series.iter().flatten().map(|p| p.0).collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for t in ticks {
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            px(t),
            HEIGHT - MARGIN + 16.0,
            fmt_tick(t)
        )
        .expect("write");
    }
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        escape(x)
    )
    .expect("write");
    for (k, pts) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|&(a, b)| format!("{:.1},{:.1}", px(a), py(b))).collect();
        writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, path.join(" "))
            .expect("write");
        for &(a, b) in pts {
            writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, px(a), py(b)).expect("write");
        }
    }
    legend(&mut s, ys);
    s.push_str("</svg>\n");
    Ok(s)
}

/// Grouped bars: one group per summary row, one bar per column.
pub fn bar_chart(table: &Table, columns: &[String], title: &str) -> CliResult<String> {
    if columns.is_empty() {
        return Err(CliError::user("no bar columns given"));
    }
    let ci: Vec<usize> = columns.iter().map(|c| table.column(c)).collect::<CliResult<_>>()?;
    let rows = table.summary_rows();
    let mut groups = Vec::new();
    for r in &rows {
        let vals = ci
            .iter()
            .zip(columns)
            .map(|(&i, name)| number(&r[i], name).map(|v| v.unwrap_or(0.0)))
            .collect::<CliResult<Vec<f64>>>()?;
        groups.push((table.label(r), vals));
    }
    let (lo, hi) = value_range(groups.iter().flat_map(|g| g.1.iter().copied()));
    let py = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - lo) / (hi - lo);
    let group_w = (WIDTH - 2.0 * MARGIN) / groups.len() as f64;
    let bar_w = group_w * 0.8 / columns.len() as f64;

    let mut s = open(title);
    axes(&mut s, lo, hi);
    for (g, (label, vals)) in groups.iter().enumerate() {
        let gx = MARGIN + group_w * g as f64 + group_w * 0.1;
        for (k, &v) in vals.iter().enumerate() {
            let (top, base) = (py(v.max(0.0)), py(v.min(0.0)));
            writeln!(
                s,
                r#"<rect x="{:.1}" y="{top:.1}" width="{bar_w:.1}" height="{:.1}" fill="{}"/>"#,
                gx + bar_w * k as f64,
                base - top,
                PALETTE[k % PALETTE.len()]
            )
            .expect("write");
        }
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            gx + group_w * 0.4,
            HEIGHT - MARGIN + 16.0,
            escape(label)
        )
        .expect("write");
    }
    legend(&mut s, columns);
    s.push_str("</svg>\n");
    Ok(s)
}
