//! Dependency-free SVG emission for accuracy curves.
//!
//! One line per quantifier over global steps: training quantifiers in gray,
//! the scarce all_ab in blue and only_ab in red, y fixed to [0.4, 1.0] with
//! a dashed chance line at 0.5.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::quant::Quantifier;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const Y_MIN: f64 = 0.4;
const Y_MAX: f64 = 1.0;

fn color(q: Quantifier) -> &'static str {
    match q {
        Quantifier::AllAb => "#1f77b4",
        Quantifier::OnlyAb => "#d62728",
        _ => "#9a9a9a",
    }
}

fn plot_width() -> f64 {
    WIDTH - MARGIN_LEFT - MARGIN_RIGHT
}

fn plot_height() -> f64 {
    HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
}

/// Renders median accuracy curves as a standalone SVG document.
///
/// `curves` maps each quantifier to (step, accuracy) points; points are
/// drawn in their given order. Values outside [0.4, 1.0] are clipped to the
/// plot area rather than rescaling the axis.
pub fn render_accuracy_chart(
    curves: &BTreeMap<Quantifier, Vec<(u32, f64)>>,
    title: &str,
) -> String {
    let x_max = curves
        .values()
        .flat_map(|c| c.iter().map(|(s, _)| *s))
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let x_min = curves
        .values()
        .flat_map(|c| c.iter().map(|(s, _)| *s))
        .min()
        .unwrap_or(1) as f64;
    let x_span = (x_max - x_min).max(1.0);

    let x_of = |step: f64| MARGIN_LEFT + (step - x_min) / x_span * plot_width();
    let y_of = |acc: f64| MARGIN_TOP + (Y_MAX - acc) / (Y_MAX - Y_MIN) * plot_height();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<clipPath id=\"plot\"><rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/></clipPath>",
        MARGIN_LEFT,
        MARGIN_TOP,
        plot_width(),
        plot_height()
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
        MARGIN_LEFT + plot_width() / 2.0,
        xml_escape(title)
    );

    // Axes.
    let x0 = MARGIN_LEFT;
    let x1 = MARGIN_LEFT + plot_width();
    let y0 = MARGIN_TOP + plot_height();
    let _ = writeln!(
        svg,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{x0}\" y1=\"{MARGIN_TOP}\" x2=\"{x0}\" y2=\"{y0}\" stroke=\"black\"/>"
    );

    // Y ticks every 0.1.
    let mut acc = Y_MIN;
    while acc <= Y_MAX + 1e-9 {
        let y = y_of(acc);
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{x0}\" y2=\"{y}\" stroke=\"black\"/>",
            x0 - 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{acc:.1}</text>",
            x0 - 8.0,
            y + 4.0
        );
        acc += 0.1;
    }

    // Five evenly spaced x ticks.
    for i in 0..=4 {
        let step = x_min + x_span * i as f64 / 4.0;
        let x = x_of(step);
        let _ = writeln!(
            svg,
            "<line x1=\"{x}\" y1=\"{y0}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>",
            y0 + 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            y0 + 18.0,
            step.round() as u64
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">global step</text>",
        MARGIN_LEFT + plot_width() / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">median accuracy</text>",
        MARGIN_TOP + plot_height() / 2.0,
        MARGIN_TOP + plot_height() / 2.0
    );

    // Chance line at 0.5.
    let y_chance = y_of(0.5);
    let _ = writeln!(
        svg,
        "<line x1=\"{x0}\" y1=\"{y_chance}\" x2=\"{x1}\" y2=\"{y_chance}\" stroke=\"#bbbbbb\" stroke-dasharray=\"6 4\"/>"
    );

    // Curves, testing quantifiers drawn last so they sit on top.
    let mut ordered: Vec<(&Quantifier, &Vec<(u32, f64)>)> = curves.iter().collect();
    ordered.sort_by_key(|(q, _)| matches!(**q, Quantifier::AllAb | Quantifier::OnlyAb));
    for (q, points) in &ordered {
        let mut path = String::new();
        for (step, acc) in points.iter() {
            let _ = write!(path, "{:.2},{:.2} ", x_of(*step as f64), y_of(*acc));
        }
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\" clip-path=\"url(#plot)\" points=\"{}\"/>",
            color(**q),
            path.trim_end()
        );
    }

    // Legend.
    let legend_x = x1 + 12.0;
    for (i, (q, _)) in curves.iter().enumerate() {
        let y = MARGIN_TOP + 14.0 * i as f64 + 10.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{legend_x}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{}\" stroke-width=\"2\"/>",
            legend_x + 18.0,
            color(*q)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            legend_x + 24.0,
            y + 4.0,
            q.name()
        );
    }

    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
