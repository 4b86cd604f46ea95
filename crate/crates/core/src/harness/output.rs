use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::aggregate::Curve;
use super::run::RunRecord;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "policy,seed,t,arm,inst_regret,cum_regret";

/// Shortest decimal rendering with at most 9 significant digits, switching to
/// exponent notation outside `[1e-5, 1e9)`.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn regret_csv(records: &[RunRecord]) -> String {
    let mut out = String::with_capacity(64 + records.iter().map(|r| r.rounds.len() * 40).sum::<usize>());
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        for log in &r.rounds {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.policy,
                r.seed,
                log.t,
                log.arm,
                fmt_sig(log.inst_regret),
                fmt_sig(log.cum_regret)
            );
        }
    }
    out
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Mean regret curves with a shaded `±1` standard-error band.
pub fn regret_svg(curves: &[Curve]) -> String {
    let (w, h) = (800.0, 500.0);
    let (left, right, top, bottom) = (70.0, 180.0, 20.0, 50.0);
    let horizon = curves.iter().map(Curve::horizon).max().unwrap_or(0).max(1);
    let y_max = curves
        .iter()
        .flat_map(|c| c.mean.iter().zip(&c.stderr).map(|(m, s)| m + s))
        .fold(0.0, f64::max)
        .max(1e-12);
    let sx = |t: usize| left + (w - left - right) * t as f64 / horizon as f64;
    let sy = |v: f64| h - bottom - (h - top - bottom) * v / y_max;
    let step = (horizon / 400).max(1);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{l:.2},{t:.2} V{b:.2} H{r:.2}" fill="none" stroke="black"/>"#,
        l = left,
        t = top,
        b = h - bottom,
        r = w - right
    );
    for i in 0..=4 {
        let v = y_max * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
            left - 6.0,
            sy(v) + 4.0,
            fmt_sig((v * 100.0).round() / 100.0)
        );
        let t = horizon * i / 4;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{t}</text>"#,
            sx(t),
            h - bottom + 16.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">round</text>"#,
        (left + w - right) / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">cumulative regret</text>"#,
        (top + h - bottom) / 2.0,
        (top + h - bottom) / 2.0
    );
    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let ts: Vec<usize> = (0..=c.horizon())
            .step_by(step)
            .chain(std::iter::once(c.horizon()))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let at = |t: usize, sign: f64| {
            if t == 0 {
                0.0
            } else {
                c.mean[t - 1] + sign * c.stderr[t - 1]
            }
        };
        let mut band = String::new();
        for &t in &ts {
            let _ = write!(band, "{:.2},{:.2} ", sx(t), sy(at(t, 1.0)));
        }
        for &t in ts.iter().rev() {
            let _ = write!(band, "{:.2},{:.2} ", sx(t), sy(at(t, -1.0)));
        }
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.trim_end()
        );
        let line: Vec<String> = ts.iter().map(|&t| format!("{:.2},{:.2}", sx(t), sy(at(t, 0.0)))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            line.join(" ")
        );
        let ly = top + 16.0 * i as f64 + 10.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="3"/>"#,
            w - right + 12.0,
            w - right + 32.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#,
            w - right + 38.0,
            ly + 4.0,
            escape(&c.policy)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes `regret.csv` and, if `plot`, `regret.svg` into `dir`.
pub fn emit_outputs(records: &[RunRecord], curves: &[Curve], dir: &Path, plot: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = vec![write_file(dir.join("regret.csv"), &regret_csv(records))?];
    if plot {
        written.push(write_file(dir.join("regret.svg"), &regret_svg(curves))?);
    }
    Ok(written)
}
