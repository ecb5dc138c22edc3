//! Static scatter plots of naive estimates against prevalence.

use std::fmt::Write as _;

/// Marker of one setup; setups beyond the fourth reuse the cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    Circle,
    Triangle,
    Square,
    Cross,
}

impl Marker {
    pub fn for_setup(number: usize) -> Self {
        match number.saturating_sub(1) % 4 {
            0 => Marker::Circle,
            1 => Marker::Triangle,
            2 => Marker::Square,
            _ => Marker::Cross,
        }
    }

    pub fn colour(self) -> &'static str {
        match self {
            Marker::Circle => "#d62728",
            Marker::Triangle => "#2ca02c",
            Marker::Square => "#1f77b4",
            Marker::Cross => "#9467bd",
        }
    }

    fn draw(self, out: &mut String, x: f64, y: f64) {
        let r = 2.5;
        let _ = match self {
            Marker::Circle => writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}"/>"#),
            Marker::Square => writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{w}" height="{w}"/>"#,
                x - r,
                y - r,
                w = 2.0 * r
            ),
            Marker::Triangle => writeln!(
                out,
                r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}"/>"#,
                x,
                y - r,
                x - r,
                y + r,
                x + r,
                y + r
            ),
            Marker::Cross => writeln!(
                out,
                r#"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}"/>"#,
                x - r,
                y - r,
                x + r,
                y + r,
                x - r,
                y + r,
                x + r,
                y - r
            ),
        };
    }
}

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Scatter of `(x, y)` points on the unit square. Points outside it are clipped.
pub fn scatter_svg(
    points: &[(f64, f64)],
    title: &str,
    x_label: &str,
    y_label: &str,
    marker: Marker,
) -> String {
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + x * pw;
    let sy = |y: f64| TOP + (1.0 - y) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{v:.1}</text>"#,
            sx(v),
            TOP + ph + 16.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.1}</text>"#,
            LEFT - 6.0,
            sy(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        TOP + ph / 2.0,
        escape(y_label)
    );
    let colour = marker.colour();
    let style = if marker == Marker::Cross {
        format!(r#"fill="none" stroke="{colour}" stroke-width="1""#)
    } else {
        format!(r#"fill="{colour}" fill-opacity="0.5" stroke="none""#)
    };
    let _ = writeln!(s, "<g {style}>");
    for &(x, y) in points {
        if (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y) {
            marker.draw(&mut s, sx(x), sy(y));
        }
    }
    s.push_str("</g>\n</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn markers_cycle() {
        assert_eq!(Marker::for_setup(1), Marker::Circle);
        assert_eq!(Marker::for_setup(4), Marker::Cross);
        assert_eq!(Marker::for_setup(5), Marker::Circle);
    }

    #[test]
    fn fixed_axes() {
        let a = scatter_svg(&[(0.5, 0.5)], "t", "x", "y", Marker::Square);
        let b = scatter_svg(&[(0.2, 0.9)], "t", "x", "y", Marker::Square);
        // frame and tick labels do not depend on the data
        let frame = |s: &str| {
            s.lines()
                .filter(|l| !l.starts_with("<rect x=\"2") && !l.starts_with("<rect x=\"1"))
                .count()
        };
        assert_eq!(frame(&a), frame(&b));
        assert!(a.contains(">1.0</text>") && a.contains(">0.0</text>"));
        assert_eq!(a, scatter_svg(&[(0.5, 0.5)], "t", "x", "y", Marker::Square));
        assert!(!scatter_svg(&[(1.5, 0.5)], "t", "x", "y", Marker::Circle).contains("<circle"));
    }
}
