//! Horizontal bar charts of importance scores.

use std::fmt::Write;

use vimkit::VimReport;

const WIDTH: f64 = 720.0;
const LABEL_WIDTH: f64 = 160.0;
const MARGIN: f64 = 20.0;
const ROW_HEIGHT: f64 = 18.0;
const TOP: f64 = 40.0;
/// Nonzero scores are drawn at least this wide.
const MIN_BAR: f64 = 0.5;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// One bar per feature in ranking order, with a vertical line at score 0.
/// Bars for positive scores start at the line and extend right; bars for
/// negative scores end at it.
pub fn bar_chart(report: &VimReport, names: &[String]) -> String {
    let scores = &report.scores;
    let lo = scores.iter().copied().fold(0.0_f64, f64::min);
    let hi = scores.iter().copied().fold(0.0_f64, f64::max);
    let range = if hi > lo { hi - lo } else { 1.0 };
    let plot_left = LABEL_WIDTH + MARGIN;
    let plot_width = WIDTH - plot_left - MARGIN;
    let zero_x = plot_left + (-lo) / range * plot_width;
    let height = TOP + ROW_HEIGHT * scores.len() as f64 + MARGIN;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ =
        writeln!(out, r#"<text class="title" x="{MARGIN}" y="22" font-size="14">{}</text>"#, escape(&report.method));
    for (row, &j) in report.ranking.iter().enumerate() {
        let s = scores[j];
        let y = TOP + ROW_HEIGHT * row as f64;
        let mut w = s.abs() / range * plot_width;
        if s != 0.0 {
            w = w.max(MIN_BAR);
        }
        let x = if s < 0.0 { zero_x - w } else { zero_x };
        let fill = if s > 0.0 { "#4682b4" } else { "#b22222" };
        let name = escape(names.get(j).map(String::as_str).unwrap_or(""));
        let _ = writeln!(
            out,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{name}</text>"#,
            LABEL_WIDTH,
            y + ROW_HEIGHT * 0.7
        );
        let _ = writeln!(
            out,
            r#"<rect class="bar" data-feature="{name}" data-index="{j}" data-score="{s:e}" x="{x:.3}" y="{:.3}" width="{w:.3}" height="{:.3}" fill="{fill}"/>"#,
            y + 2.0,
            ROW_HEIGHT - 4.0
        );
    }
    let _ = writeln!(
        out,
        r##"<line class="zero-line" x1="{zero_x:.3}" y1="{:.3}" x2="{zero_x:.3}" y2="{:.3}" stroke="#000" stroke-width="1"/>"##,
        TOP - 4.0,
        height - MARGIN + 4.0
    );
    out.push_str("</svg>\n");
    out
}
