//! Flow-density overlay chart emitted as plain SVG markup.

use std::fmt::Write;

use lanefree_core::FdPoint;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// A "nice" axis step (1, 2 or 5 times a power of ten) giving roughly
/// `target` intervals up to `max`.
fn tick_step(max: f64, target: f64) -> f64 {
    let raw = (max / target).max(f64::MIN_POSITIVE);
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let m = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn axis_max(max: f64, target: f64) -> (f64, f64) {
    let max = if max > 0.0 { max } else { 1.0 };
    let step = tick_step(max, target);
    ((max / step).ceil() * step, step)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Render every series as a polyline with markers, on shared axes.
pub fn fd_overlay(series: &[(String, Vec<FdPoint>)]) -> String {
    let all = series.iter().flat_map(|(_, pts)| pts.iter());
    let (max_k, max_q) = all.fold((0.0f64, 0.0f64), |(k, q), p| (k.max(p.density), q.max(p.flow)));
    let (x_max, x_step) = axis_max(max_k, 6.0);
    let (y_max, y_step) = axis_max(max_q, 6.0);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |k: f64| LEFT + k / x_max * plot_w;
    let sy = |q: f64| TOP + plot_h - q / y_max * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    let steps = |max: f64, step: f64| (0..=((max / step).round() as usize)).map(move |i| i as f64 * step);
    for k in steps(x_max, x_step) {
        let x = sx(k);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{k}</text>"##,
            TOP,
            TOP + plot_h,
            TOP + plot_h + 18.0
        );
    }
    for q in steps(y_max, y_step) {
        let y = sy(q);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{q}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#333"/>"##
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">density (veh/km)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">flow (veh/h)</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.density), sy(p.flow))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            coords.join(" ")
        );
        for p in pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(p.density),
                sy(p.flow)
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 14.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, flow: f64) -> FdPoint {
        FdPoint {
            n,
            density: n as f64,
            flow,
            mean_speed: 20.0,
            speed_defined: true,
            prev_flow: flow,
            stationary: true,
        }
    }

    #[test]
    fn nice_steps() {
        assert_eq!(tick_step(450.0, 6.0), 100.0);
        assert_eq!(tick_step(14000.0, 6.0), 5000.0);
        assert_eq!(axis_max(450.0, 6.0), (500.0, 100.0));
        assert_eq!(axis_max(0.0, 6.0).0, 1.0);
    }

    #[test]
    fn one_polyline_and_legend_entry_per_series() {
        let series = vec![
            ("a".to_string(), vec![p(50, 4000.0), p(100, 8000.0)]),
            ("b<c".to_string(), vec![p(50, 4100.0), p(100, 9000.0), p(150, 9500.0)]),
        ];
        let svg = fd_overlay(&series);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 5);
        assert!(svg.contains(">b&lt;c</text>"));
        assert_eq!(svg, fd_overlay(&series));
    }

    #[test]
    fn empty_overlay_is_still_a_document() {
        let svg = fd_overlay(&[]);
        assert!(svg.contains("density (veh/km)"));
        assert_eq!(svg.matches("<polyline").count(), 0);
    }
}
