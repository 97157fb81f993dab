use std::fmt::Write;
use std::path::{Path, PathBuf};

use crate::error::CliError;
use crate::files::write_atomic;

const SUMMARY_HEADER: [&str; 3] = ["iteration", "mean_dice_mean", "mean_dice_std"];
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub strategy: String,
    pub iterations: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn read_summary(path: &Path) -> Result<Summary, CliError> {
    let strategy = path
        .file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.strip_prefix("summary_"))
        .unwrap_or("unknown")
        .to_string();
    let bad = |line: u64, msg: String| CliError::Runtime(format!("{}:{line}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let header = reader.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != SUMMARY_HEADER {
        return Err(bad(1, format!("expected header `{}`", SUMMARY_HEADER.join(","))));
    }
    let mut s = Summary {
        strategy,
        iterations: vec![],
        mean: vec![],
        std: vec![],
    };
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            bad(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let iteration: usize = record[0]
            .parse()
            .map_err(|_| bad(line, format!("bad iteration `{}`", &record[0])))?;
        let num = |i: usize| {
            record[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(line, format!("bad {} `{}`", SUMMARY_HEADER[i], &record[i])))
        };
        s.iterations.push(iteration);
        s.mean.push(num(1)?);
        s.std.push(num(2)?);
    }
    if s.iterations.is_empty() {
        return Err(bad(1, "no rows".into()));
    }
    Ok(s)
}

struct Frame {
    width: f64,
    height: f64,
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
    x_max: f64,
}

impl Frame {
    fn new(x_max: usize) -> Self {
        Frame {
            width: 720.0,
            height: 440.0,
            left: 60.0,
            right: 200.0,
            top: 40.0,
            bottom: 50.0,
            x_max: x_max.max(1) as f64,
        }
    }

    fn x(&self, it: f64) -> f64 {
        self.left + it / self.x_max * (self.width - self.left - self.right)
    }

    fn y(&self, dice: f64) -> f64 {
        let h = self.height - self.top - self.bottom;
        self.top + (1.0 - dice.clamp(0.0, 1.0)) * h
    }
}

fn tick_step(max: usize) -> usize {
    let raw = (max as f64 / 10.0).max(1.0);
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|&s| s >= raw).unwrap_or(raw);
    step as usize
}

fn axes(svg: &mut String, f: &Frame, title: &str) {
    let (x0, x1) = (f.x(0.0), f.x(f.x_max));
    let (y0, y1) = (f.y(0.0), f.y(1.0));
    writeln!(
        svg,
        r#"<text x="{:.1}" y="24" font-size="16" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        escape(title)
    )
    .unwrap();
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let y = f.y(v);
        writeln!(
            svg,
            r##"<line x1="{x0:.1}" y1="{y:.1}" x2="{x1:.1}" y2="{y:.1}" stroke="#dddddd"/><text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{v:.1}</text>"##,
            x0 - 6.0,
            y + 4.0
        )
        .unwrap();
    }
    let step = tick_step(f.x_max as usize);
    for it in (0..=f.x_max as usize).step_by(step) {
        let x = f.x(it as f64);
        writeln!(
            svg,
            r##"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{:.1}" stroke="#000000"/><text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle">{it}</text>"##,
            y0 + 5.0,
            y0 + 18.0
        )
        .unwrap();
    }
    writeln!(
        svg,
        r##"<polyline points="{x0:.1},{y1:.1} {x0:.1},{y0:.1} {x1:.1},{y0:.1}" fill="none" stroke="#000000"/>"##
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">iteration</text>"#,
        (x0 + x1) / 2.0,
        f.height - 10.0
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="16" y="{:.1}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.1})">mean Dice</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    )
    .unwrap();
}

fn series(svg: &mut String, f: &Frame, s: &Summary, color: &str, slot: usize) {
    let upper: Vec<String> = s
        .iterations
        .iter()
        .zip(s.mean.iter().zip(&s.std))
        .map(|(&i, (m, sd))| format!("{:.1},{:.1}", f.x(i as f64), f.y(m + sd)))
        .collect();
    let lower: Vec<String> = s
        .iterations
        .iter()
        .zip(s.mean.iter().zip(&s.std))
        .rev()
        .map(|(&i, (m, sd))| format!("{:.1},{:.1}", f.x(i as f64), f.y(m - sd)))
        .collect();
    writeln!(
        svg,
        r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
        upper.join(" "),
        lower.join(" ")
    )
    .unwrap();
    let line: Vec<String> = s
        .iterations
        .iter()
        .zip(&s.mean)
        .map(|(&i, m)| format!("{:.1},{:.1}", f.x(i as f64), f.y(*m)))
        .collect();
    writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
        line.join(" ")
    )
    .unwrap();
    let lx = f.width - f.right + 15.0;
    let ly = f.top + 10.0 + 20.0 * slot as f64;
    writeln!(
        svg,
        r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="3"/><text x="{:.1}" y="{:.1}" font-size="12">{}</text>"#,
        lx + 20.0,
        lx + 26.0,
        ly + 4.0,
        escape(&s.strategy)
    )
    .unwrap();
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Learning curve(s) with a +-1 std band; x spans `[0, x_max]`, y `[0, 1]`.
pub fn plot_svg(summaries: &[&Summary], x_max: usize, title: &str) -> String {
    let f = Frame::new(x_max);
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#,
        w = f.width,
        h = f.height
    )
    .unwrap();
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");
    axes(&mut svg, &f, title);
    for (slot, s) in summaries.iter().enumerate() {
        series(&mut svg, &f, s, PALETTE[slot % PALETTE.len()], slot);
    }
    svg.push_str("</svg>\n");
    svg
}

/// Configured iteration count from `run_meta.json`, if present.
fn configured_iterations(dir: &Path) -> Option<usize> {
    let text = std::fs::read_to_string(dir.join("run_meta.json")).ok()?;
    let meta: serde_json::Value = serde_json::from_str(&text).ok()?;
    meta.get("config")?.get("iterations")?.as_u64().map(|n| n as usize)
}

pub fn report(dir: &Path, out: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("summary_") && n.ends_with(".csv"))
        })
        .collect();
    if paths.is_empty() {
        return Err(CliError::Usage(format!("no summary_*.csv files in {}", dir.display())));
    }
    paths.sort();
    let summaries = paths.iter().map(|p| read_summary(p)).collect::<Result<Vec<_>, _>>()?;
    let longest = summaries.iter().flat_map(|s| s.iterations.iter()).copied().max().unwrap_or(0);
    let x_max = configured_iterations(dir).unwrap_or(longest).max(longest);
    let out = out.unwrap_or(dir);
    crate::files::create_dir(out)?;
    let mut written = Vec::new();
    for s in &summaries {
        let path = out.join(format!("plot_{}.svg", s.strategy));
        write_atomic(&path, plot_svg(&[s], x_max, &s.strategy).as_bytes())?;
        written.push(path);
    }
    let all: Vec<&Summary> = summaries.iter().collect();
    let path = out.join("plot_all.svg");
    write_atomic(&path, plot_svg(&all, x_max, "all strategies").as_bytes())?;
    written.push(path);
    Ok(written)
}
