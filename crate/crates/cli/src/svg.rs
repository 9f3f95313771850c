//! Static SVG rendering of barcodes: one horizontal bar per interval, an action
//! axis and degree labels.

use std::fmt::Write;

use reebcz::Barcode;

const WIDTH: f64 = 800.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 20.0;
const ROW: f64 = 16.0;
const AXIS_GAP: f64 = 30.0;

fn palette(deg: i64) -> &'static str {
    const COLORS: [&str; 6] = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
    ];
    COLORS[deg.rem_euclid(COLORS.len() as i64) as usize]
}

pub fn barcode_svg(bc: &Barcode) -> String {
    let bars = bc.bars();
    let mut max = 0.0f64;
    for bar in bars {
        max = max.max(bar.a.to_f64());
        if let Some(b) = &bar.b {
            max = max.max(b.to_f64());
        }
    }
    if max <= 0.0 {
        max = 1.0;
    }
    let has_infinite = bars.iter().any(|b| b.b.is_none());
    let span = if has_infinite { max * 1.1 } else { max };
    let plot = WIDTH - LEFT - RIGHT;
    let x = |v: f64| LEFT + plot * v / span;
    let height = TOP + ROW * bars.len() as f64 + AXIS_GAP + 20.0;
    let axis_y = TOP + ROW * bars.len() as f64 + 10.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, bar) in bars.iter().enumerate() {
        let y = TOP + ROW * i as f64;
        let x0 = x(bar.a.to_f64());
        let x1 = match &bar.b {
            Some(b) => x(b.to_f64()),
            None => WIDTH - RIGHT,
        };
        let _ = writeln!(
            s,
            r#"<rect x="{x0:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            y + 2.0,
            (x1 - x0).max(1.0),
            ROW - 4.0,
            palette(bar.deg)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + ROW - 4.0,
            bar.deg
        );
        if bar.b.is_none() {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}">&#8734;</text>"#,
                x1 + 2.0,
                y + ROW - 4.0
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT:.2}" y1="{axis_y:.2}" x2="{:.2}" y2="{axis_y:.2}" stroke="black"/>"#,
        WIDTH - RIGHT
    );
    for t in 0..=5 {
        let v = span * t as f64 / 5.0;
        let tx = x(v);
        let _ = writeln!(
            s,
            r#"<line x1="{tx:.2}" y1="{axis_y:.2}" x2="{tx:.2}" y2="{:.2}" stroke="black"/>"#,
            axis_y + 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{tx:.2}" y="{:.2}" text-anchor="middle">{v:.3}</text>"#,
            axis_y + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="12" y="{:.2}" transform="rotate(-90 12 {:.2})" text-anchor="middle">degree</text>"#,
        TOP + ROW * bars.len() as f64 / 2.0,
        TOP + ROW * bars.len() as f64 / 2.0
    );
    s.push_str("</svg>\n");
    s
}
