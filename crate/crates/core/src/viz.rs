//! Horizontal bar charts of importance reports, as SVG or plain text.
//!
//! Features are listed top to bottom by descending final score. Negative
//! scores extend left of the zero line instead of being clipped.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::descending_order;
use crate::qmedley::ImportanceReport;

const LABEL_WIDTH: f64 = 170.0;
const VALUE_WIDTH: f64 = 70.0;
const TITLE_HEIGHT: f64 = 32.0;
const PAD: f64 = 10.0;
const TEXT_BAR_CELLS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChartSpec {
    pub title: Option<String>,
    pub width_px: u32,
    pub bar_height_px: u32,
    pub show_values: bool,
    /// `(rows, cols)` for multi-panel output; `None` picks a near-square grid.
    pub panel_grid: Option<(usize, usize)>,
}

impl Default for ChartSpec {
    fn default() -> Self {
        Self {
            title: None,
            width_px: 800,
            bar_height_px: 24,
            show_values: true,
            panel_grid: None,
        }
    }
}

impl ChartSpec {
    fn validate(&self) -> Result<()> {
        if self.width_px as f64 <= LABEL_WIDTH + VALUE_WIDTH + 2.0 * PAD {
            return Err(Error::InvalidConfig(format!("chart width {} px is too small", self.width_px)));
        }
        if self.bar_height_px == 0 {
            return Err(Error::InvalidConfig("bar height must be positive".into()));
        }
        if let Some((r, c)) = self.panel_grid {
            if r == 0 || c == 0 {
                return Err(Error::InvalidConfig("panel grid dimensions must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Display order of a report's features (shared by every renderer).
pub fn display_order(report: &ImportanceReport) -> Vec<usize> {
    descending_order(&report.final_scores)
}

fn check_report(report: &ImportanceReport) -> Result<()> {
    if report.final_scores.is_empty() {
        return Err(Error::Empty("importance report"));
    }
    if report.feature_labels.len() != report.final_scores.len() {
        return Err(Error::DimensionMismatch {
            expected: report.final_scores.len(),
            actual: report.feature_labels.len(),
        });
    }
    Ok(())
}

pub fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn panel_height(n_features: usize, spec: &ChartSpec) -> f64 {
    TITLE_HEIGHT + n_features as f64 * spec.bar_height_px as f64 + 2.0 * PAD
}

/// One chart (title plus bars) drawn with its top-left corner at the origin.
fn chart_body(report: &ImportanceReport, title: &str, width: f64, spec: &ChartSpec) -> String {
    let scores = &report.final_scores;
    let pos = scores.iter().cloned().fold(0.0f64, f64::max);
    let neg = scores.iter().cloned().fold(0.0f64, |m, v| m.max(-v));
    let plot = width - LABEL_WIDTH - VALUE_WIDTH - 2.0 * PAD;
    let scale = if pos + neg > 0.0 { plot / (pos + neg) } else { 0.0 };
    let x0 = PAD + LABEL_WIDTH + neg * scale;
    let bh = spec.bar_height_px as f64;
    let bar = bh * 0.75;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<text class="title" x="{:.2}" y="{:.2}" font-size="16" text-anchor="middle">{}</text>"#,
        width / 2.0,
        PAD + 16.0,
        xml_escape(title)
    );
    let top = TITLE_HEIGHT + PAD;
    for (row, &j) in display_order(report).iter().enumerate() {
        let v = scores[j];
        let y = top + row as f64 * bh;
        let len = v.abs() * scale;
        let x = if v < 0.0 { x0 - len } else { x0 };
        let fill = if v < 0.0 { "#c0504d" } else { "#4f81bd" };
        let _ = writeln!(
            s,
            r#"<text class="label" x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{}</text>"#,
            PAD + LABEL_WIDTH - 6.0,
            y + bar * 0.75,
            xml_escape(&report.feature_labels[j])
        );
        let _ = writeln!(
            s,
            r#"<rect class="bar" data-feature="{j}" x="{x:.2}" y="{y:.2}" width="{len:.2}" height="{bar:.2}" fill="{fill}"/>"#
        );
        if spec.show_values {
            let _ = writeln!(
                s,
                r#"<text class="value" x="{:.2}" y="{:.2}" font-size="12">{v:.4}</text>"#,
                PAD + LABEL_WIDTH + plot + 6.0,
                y + bar * 0.75
            );
        }
    }
    let _ = writeln!(
        s,
        r##"<line class="zero" x1="{x0:.2}" y1="{:.2}" x2="{x0:.2}" y2="{:.2}" stroke="#333" stroke-width="1"/>"##,
        top - 2.0,
        top + scores.len() as f64 * bh
    );
    s
}

fn svg_document(width: f64, height: f64, body: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

/// Sorted bar chart of `report.final_scores` as an SVG document.
pub fn render_bar_chart(report: &ImportanceReport, spec: &ChartSpec) -> Result<String> {
    check_report(report)?;
    spec.validate()?;
    let title = spec.title.clone().unwrap_or_else(|| report.model_descriptor.clone());
    let width = spec.width_px as f64;
    let body = chart_body(report, &title, width, spec);
    Ok(svg_document(width, panel_height(report.final_scores.len(), spec), &body))
}

/// `(rows, cols)` for `n` panels: the spec's grid, or `⌈√n⌉` columns and as
/// many rows as needed.
pub fn multipanel_layout(n: usize, spec: &ChartSpec) -> Result<(usize, usize)> {
    if n == 0 {
        return Err(Error::Empty("report list"));
    }
    if let Some((r, c)) = spec.panel_grid {
        if r * c < n {
            return Err(Error::InvalidConfig(format!("a {r}×{c} grid cannot hold {n} panels")));
        }
        return Ok((r, c));
    }
    let cols = (n as f64).sqrt().ceil() as usize;
    Ok((n.div_ceil(cols), cols))
}

/// Grid of per-model charts, each titled with its model descriptor.
pub fn render_multipanel(reports: &[ImportanceReport], spec: &ChartSpec) -> Result<String> {
    spec.validate()?;
    let (rows, cols) = multipanel_layout(reports.len(), spec)?;
    for r in reports {
        check_report(r)?;
    }
    let pw = spec.width_px as f64;
    let ph = reports
        .iter()
        .map(|r| panel_height(r.final_scores.len(), spec))
        .fold(0.0, f64::max);
    let header = if spec.title.is_some() { TITLE_HEIGHT } else { 0.0 };
    let mut body = String::new();
    if let Some(t) = &spec.title {
        let _ = writeln!(
            body,
            r#"<text class="figure-title" x="{:.2}" y="{:.2}" font-size="18" text-anchor="middle">{}</text>"#,
            pw * cols as f64 / 2.0,
            PAD + 16.0,
            xml_escape(t)
        );
    }
    for (i, r) in reports.iter().enumerate() {
        let (gr, gc) = (i / cols, i % cols);
        let _ = writeln!(
            body,
            r#"<g class="panel" data-row="{gr}" data-col="{gc}" transform="translate({:.2},{:.2})">"#,
            gc as f64 * pw,
            header + gr as f64 * ph
        );
        body.push_str(&chart_body(r, &r.model_descriptor, pw, spec));
        body.push_str("</g>\n");
    }
    let doc = svg_document(pw * cols as f64, header + ph * rows as f64, &body);
    Ok(doc.replacen("<svg ", &format!("<svg data-rows=\"{rows}\" data-cols=\"{cols}\" "), 1))
}

/// Terminal rendering: `label  |█████  0.3210`, longest bar 40 cells.
pub fn render_text_chart(report: &ImportanceReport) -> Result<String> {
    check_report(report)?;
    let max = report.final_scores.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let w = report.feature_labels.iter().map(|l| l.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for j in display_order(report) {
        let v = report.final_scores[j];
        let cells = if max > 0.0 {
            ((v.abs() / max) * TEXT_BAR_CELLS as f64).round() as usize
        } else {
            0
        };
        let bar = "█".repeat(cells);
        let pad = " ".repeat(TEXT_BAR_CELLS - cells);
        let _ = writeln!(out, "{:<w$}  |{bar}{pad}  {v:.4}", report.feature_labels[j]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmedley::{ExplainerConfig, Weights};

    pub(crate) fn report(labels: &[&str], scores: &[f64]) -> ImportanceReport {
        ImportanceReport {
            feature_labels: labels.iter().map(|s| s.to_string()).collect(),
            baseline_accuracy: 1.0,
            dci: scores.to_vec(),
            pi: scores.to_vec(),
            interaction_pi: None,
            weights: Weights { dci: 0.5, pi: 0.5 },
            final_scores: scores.to_vec(),
            config: ExplainerConfig::default(),
            model_descriptor: "QDT (amplitude, 3 qubits)".into(),
            provenance: None,
        }
    }

    fn bar_features(svg: &str) -> Vec<usize> {
        let doc = roxmltree::Document::parse(svg).unwrap();
        doc.descendants()
            .filter(|n| n.attribute("class") == Some("bar"))
            .map(|n| n.attribute("data-feature").unwrap().parse().unwrap())
            .collect()
    }

    #[test]
    fn bars_sorted_descending() {
        let svg = render_bar_chart(&report(&["a", "b", "c"], &[0.1, 0.5, 0.3]), &ChartSpec::default()).unwrap();
        assert_eq!(bar_features(&svg), vec![1, 2, 0]);
    }

    #[test]
    fn ties_keep_feature_order() {
        let svg = render_bar_chart(&report(&["a", "b", "c"], &[0.2; 3]), &ChartSpec::default()).unwrap();
        assert_eq!(bar_features(&svg), vec![0, 1, 2]);
    }

    #[test]
    fn negative_bars_extend_left() {
        let svg = render_bar_chart(&report(&["p", "n"], &[0.4, -0.2]), &ChartSpec::default()).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let bars: Vec<_> = doc.descendants().filter(|n| n.attribute("class") == Some("bar")).collect();
        let x = |n: &roxmltree::Node| n.attribute("x").unwrap().parse::<f64>().unwrap();
        let w = |n: &roxmltree::Node| n.attribute("width").unwrap().parse::<f64>().unwrap();
        assert!((x(&bars[1]) + w(&bars[1]) - x(&bars[0])).abs() < 0.011);
        assert!((w(&bars[0]) / w(&bars[1]) - 2.0).abs() < 1e-3);
    }

    #[test]
    fn labels_are_escaped() {
        let svg = render_bar_chart(&report(&["a<b & \"c\""], &[0.3]), &ChartSpec::default()).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert!(doc.descendants().any(|n| n.text() == Some("a<b & \"c\"")));
    }

    #[test]
    fn empty_report_rejected() {
        assert!(render_bar_chart(&report(&[], &[]), &ChartSpec::default()).is_err());
        assert!(render_text_chart(&report(&[], &[])).is_err());
        assert!(render_multipanel(&[], &ChartSpec::default()).is_err());
    }

    #[test]
    fn layouts() {
        let spec = ChartSpec::default();
        assert_eq!(multipanel_layout(10, &spec).unwrap(), (3, 4));
        assert_eq!(multipanel_layout(1, &spec).unwrap(), (1, 1));
        assert_eq!(multipanel_layout(4, &spec).unwrap(), (2, 2));
        let fixed = ChartSpec { panel_grid: Some((1, 2)), ..spec };
        assert!(multipanel_layout(3, &fixed).is_err());
    }

    #[test]
    fn panel_titles_are_descriptors() {
        let mut reports = Vec::new();
        for i in 0..3 {
            let mut r = report(&["a", "b"], &[0.1, 0.2]);
            r.model_descriptor = format!("model {i}");
            reports.push(r);
        }
        let svg = render_multipanel(&reports, &ChartSpec::default()).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let titles: Vec<_> = doc
            .descendants()
            .filter(|n| n.attribute("class") == Some("title"))
            .map(|n| n.text().unwrap().to_string())
            .collect();
        assert_eq!(titles, vec!["model 0", "model 1", "model 2"]);
        let single = render_multipanel(&reports[..1], &ChartSpec::default()).unwrap();
        let root = roxmltree::Document::parse(&single).unwrap();
        assert_eq!(root.root_element().attribute("width"), Some("800"));
    }

    #[test]
    fn text_chart() {
        let text = render_text_chart(&report(&["alpha", "b", "zero"], &[0.1, 0.4, 0.0])).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("b    "));
        assert_eq!(lines[0].matches('█').count(), 40);
        assert_eq!(lines[1].matches('█').count(), 10);
        assert!(lines[2].starts_with("zero") && lines[2].ends_with("0.0000"));
        assert_eq!(lines[2].matches('█').count(), 0);
    }

    #[test]
    fn rendering_is_pure() {
        let r = report(&["a", "b"], &[0.3, -0.1]);
        let spec = ChartSpec::default();
        assert_eq!(render_bar_chart(&r, &spec).unwrap(), render_bar_chart(&r, &spec).unwrap());
    }
}
