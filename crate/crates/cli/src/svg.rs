//! Minimal, dependency-free SVG charts. Output is plain text with fixed
//! number formatting, so equal data gives byte-equal files.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    s
}

fn legend(s: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = MARGIN + 18.0 * i as f64;
        let x = WIDTH - MARGIN - 110.0;
        let _ = writeln!(s, r#"<rect x="{x:.1}" y="{:.1}" width="12" height="12" fill="{}"/>"#, y - 10.0, PALETTE[i % PALETTE.len()]);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{y:.1}">{}</text>"#, x + 18.0, escape(name));
    }
}

/// Grouped vertical bars: one group per category, one bar per series.
/// `series` is `(name, one value per category)`.
pub fn grouped_bars(title: &str, y_label: &str, categories: &[String], series: &[(String, Vec<f64>)]) -> String {
    let mut s = open(title);
    let max = series
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let plot_w = WIDTH - 2.0 * MARGIN - 120.0;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let base_y = HEIGHT - MARGIN;
    let _ = writeln!(s, r##"<line x1="{MARGIN:.1}" y1="{base_y:.1}" x2="{:.1}" y2="{base_y:.1}" stroke="#333"/>"##, MARGIN + plot_w);
    let _ = writeln!(s, r##"<line x1="{MARGIN:.1}" y1="{MARGIN:.1}" x2="{MARGIN:.1}" y2="{base_y:.1}" stroke="#333"/>"##);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" transform="rotate(-90 16 {:.1})" text-anchor="middle">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, MARGIN - 4.0, MARGIN + 4.0, fmt_value(max));
    let _ = writeln!(s, r#"<text x="{:.1}" y="{base_y:.1}" text-anchor="end">0</text>"#, MARGIN - 4.0);

    let groups = categories.len().max(1) as f64;
    let group_w = plot_w / groups;
    let bar_w = group_w * 0.8 / series.len().max(1) as f64;
    for (c, category) in categories.iter().enumerate() {
        let gx = MARGIN + group_w * c as f64 + group_w * 0.1;
        for (k, (name, values)) in series.iter().enumerate() {
            let v = values.get(c).copied().unwrap_or(0.0);
            let h = plot_h * v / max;
            let x = gx + bar_w * k as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{:.1}" width="{bar_w:.1}" height="{h:.1}" fill="{}"><title>{}: {} = {}</title></rect>"#,
                base_y - h,
                PALETTE[k % PALETTE.len()],
                escape(category),
                escape(name),
                fmt_value(v)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            gx + group_w * 0.4,
            base_y + 16.0,
            escape(category)
        );
    }
    let names: Vec<&str> = series.iter().map(|(n, _)| n.as_str()).collect();
    legend(&mut s, &names);
    s.push_str("</svg>\n");
    s
}

/// Slice-and-dice treemap: rectangles with area proportional to value,
/// split alternately along the width and the height.
pub fn treemap(title: &str, items: &[(String, f64)]) -> String {
    let mut s = open(title);
    let total: f64 = items.iter().map(|(_, v)| v.max(0.0)).sum();
    let (mut x, mut y) = (MARGIN, MARGIN);
    let (mut w, mut h) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let mut remaining = total;
    for (i, (name, value)) in items.iter().enumerate() {
        let value = value.max(0.0);
        let share = if remaining > 0.0 { value / remaining } else { 0.0 };
        let horizontal = i % 2 == 0;
        let (rw, rh) = if i + 1 == items.len() {
            (w, h)
        } else if horizontal {
            (w * share, h)
        } else {
            (w, h * share)
        };
        let _ = writeln!(
            s,
            r##"<rect x="{x:.1}" y="{y:.1}" width="{rw:.1}" height="{rh:.1}" fill="{}" stroke="#fff"><title>{}: {}</title></rect>"##,
            PALETTE[i % PALETTE.len()],
            escape(name),
            fmt_value(value)
        );
        let pct = if total > 0.0 { 100.0 * value / total } else { 0.0 };
        let _ = writeln!(
            s,
            r##"<text x="{:.1}" y="{:.1}" fill="#fff">{} ({pct:.1}%)</text>"##,
            x + 6.0,
            y + 18.0,
            escape(name)
        );
        if horizontal {
            x += rw;
            w -= rw;
        } else {
            y += rh;
            h -= rh;
        }
        remaining -= value;
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_value(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.1}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bars_scale_to_the_maximum() {
        let svg = grouped_bars(
            "t",
            "authors",
            &["A".into(), "B".into()],
            &[("x".into(), vec![1.0, 2.0]), ("y".into(), vec![0.0, 4.0])],
        );
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        // the tallest bar spans the full plot height
        assert!(svg.contains(&format!(r#"height="{:.1}""#, HEIGHT - 2.0 * MARGIN)));
        assert_eq!(svg.matches("<rect").count(), 4 + 2);
    }

    #[test]
    fn treemap_areas_are_proportional() {
        let svg = treemap("w", &[("a".into(), 3.0), ("b & c".into(), 1.0)]);
        let plot_w = WIDTH - 2.0 * MARGIN;
        assert!(svg.contains(&format!(r#"width="{:.1}""#, plot_w * 0.75)));
        assert!(svg.contains("b &amp; c (25.0%)"));
    }

    #[test]
    fn output_is_deterministic() {
        let items = vec![("a".to_string(), 1.5)];
        assert_eq!(treemap("x", &items), treemap("x", &items));
    }
}
