//! Deterministic SVG scatter of an I-Q dataset.

use std::fmt::Write as _;

use iqtomo_core::discriminate::classify_hard;
use iqtomo_core::readout::{IQDataset, Label};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 520.0;
const MARGIN: f64 = 40.0;

fn color(label: Option<Label>) -> &'static str {
    match label {
        Some(Label::Zero) => "#1f77b4",
        Some(Label::One) => "#d62728",
        Some(Label::Noise) => "#7f7f7f",
        None => "#2ca02c",
    }
}

fn label_name(label: Option<Label>) -> &'static str {
    label.map_or("unlabeled", |l| l.name())
}

/// Truth labels when the file has them, else the hard rule under the
/// dataset's own mixture, else nothing.
pub fn plot_labels(d: &IQDataset) -> Vec<Option<Label>> {
    d.samples
        .iter()
        .map(|s| match (s.truth, &d.mixture) {
            (Some(l), _) => Some(l),
            (None, Some(m)) => Some(classify_hard(s.point(), &m.zero, &m.one)),
            (None, None) => None,
        })
        .collect()
}

/// Sample mean and covariance of a point group.
pub fn moments(points: &[[f64; 2]]) -> ([f64; 2], [[f64; 2]; 2]) {
    let n = points.len() as f64;
    let mean = [0, 1].map(|k| points.iter().map(|p| p[k]).sum::<f64>() / n);
    let mut cov = [[0.0; 2]; 2];
    if points.len() > 1 {
        for p in points {
            let d = [p[0] - mean[0], p[1] - mean[1]];
            for r in 0..2 {
                for c in 0..2 {
                    cov[r][c] += d[r] * d[c] / (n - 1.0);
                }
            }
        }
    }
    (mean, cov)
}

pub fn render(d: &IQDataset) -> String {
    let labels = plot_labels(d);
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in d.points() {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    for k in 0..2 {
        let pad = ((hi[k] - lo[k]) * 0.05).max(0.5);
        lo[k] -= pad;
        hi[k] += pad;
    }
    // One scale for both axes so ellipses keep their shape.
    let scale = ((WIDTH - 2.0 * MARGIN) / (hi[0] - lo[0])).min((HEIGHT - 2.0 * MARGIN) / (hi[1] - lo[1]));
    let x = |i: f64| MARGIN + (i - lo[0]) * scale;
    let y = |q: f64| HEIGHT - MARGIN - (q - lo[1]) * scale;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="24" font-family="sans-serif" font-size="14">I-Q plane, observable {} ({} shots)</text>"#,
        d.observable.name(),
        d.len()
    );
    let _ = writeln!(
        s,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    s.push_str("<g class=\"points\" fill-opacity=\"0.5\">\n");
    for (p, l) in d.points().zip(&labels) {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="{}"/>"#, x(p[0]), y(p[1]), color(*l));
    }
    s.push_str("</g>\n");

    for label in [Some(Label::Zero), Some(Label::One), Some(Label::Noise), None] {
        let group: Vec<[f64; 2]> = d.points().zip(&labels).filter(|(_, l)| **l == label).map(|(p, _)| p).collect();
        if group.is_empty() {
            continue;
        }
        let (mean, cov) = moments(&group);
        let (cx, cy) = (x(mean[0]), y(mean[1]));
        let _ = write!(
            s,
            r#"<g class="mean" data-label="{}" data-i="{:.6}" data-q="{:.6}" stroke="black" stroke-width="1.5">"#,
            label_name(label),
            mean[0],
            mean[1]
        );
        let _ = writeln!(s, r#"<path d="M{:.2} {cy:.2}H{:.2}M{cx:.2} {:.2}V{:.2}"/></g>"#, cx - 6.0, cx + 6.0, cy - 6.0, cy + 6.0);
        if group.len() > 1 {
            let (a, b, c) = (cov[0][0], cov[0][1], cov[1][1]);
            let mid = 0.5 * (a + c);
            let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            let (l1, l2) = ((mid + rad).max(0.0), (mid - rad).max(0.0));
            let angle = 0.5 * (2.0 * b).atan2(a - c);
            // The q axis points down in SVG, so the rotation flips sign.
            let _ = writeln!(
                s,
                r#"<ellipse class="sigma2" cx="{cx:.2}" cy="{cy:.2}" rx="{:.2}" ry="{:.2}" transform="rotate({:.2} {cx:.2} {cy:.2})" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                2.0 * l1.sqrt() * scale,
                2.0 * l2.sqrt() * scale,
                -angle.to_degrees(),
                color(label)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
