//! Minimal SVG plots: a 2-D scatter and an overlaid histogram.

use std::fmt::Write;

const W: f64 = 600.0;
const H: f64 = 600.0;
const PAD: f64 = 30.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone, width: f64, height: f64) -> Self {
        let lo_hi = |it: &mut dyn Iterator<Item = f64>| {
            it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        };
        let (mut x0, mut x1) = lo_hi(&mut xs.clone());
        let (mut y0, mut y1) = lo_hi(&mut ys.clone());
        if !(x1 > x0) {
            x0 -= 1.0;
            x1 += 1.0;
        }
        if !(y1 > y0) {
            y0 -= 1.0;
            y1 += 1.0;
        }
        Self { x0, x1, y0, y1, width, height }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (self.width - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        self.height - PAD - (y - self.y0) / (self.y1 - self.y0) * (self.height - 2.0 * PAD)
    }
}

fn header(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{PAD}" y="20" font-family="sans-serif" font-size="14">{title}</text>"#);
}

/// Real points in grey, generated points in red, mode centers as crosses.
/// One `<circle class="gen">` per generated point.
pub fn scatter(real: &[[f64; 2]], generated: &[[f64; 2]], centers: &[[f64; 2]], title: &str) -> String {
    let all = || real.iter().chain(generated).chain(centers);
    let frame = Frame::fit(all().map(|p| p[0]), all().map(|p| p[1]), W, H);
    let mut out = String::new();
    header(&mut out, W, H, title);
    for (class, pts, color, r) in [("real", real, "#999999", 1.5), ("gen", generated, "#d62728", 1.5)] {
        let _ = writeln!(out, r#"<g fill="{color}" fill-opacity="0.5">"#);
        for p in pts {
            let _ = writeln!(
                out,
                r#"<circle class="{class}" cx="{:.2}" cy="{:.2}" r="{r}"/>"#,
                frame.px(p[0]),
                frame.py(p[1])
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("<g stroke=\"#1f77b4\" stroke-width=\"1\">\n");
    for c in centers {
        let (x, y) = (frame.px(c[0]), frame.py(c[1]));
        let _ = writeln!(
            out,
            r#"<path class="center" d="M{:.2} {y:.2}H{:.2}M{x:.2} {:.2}V{:.2}"/>"#,
            x - 4.0,
            x + 4.0,
            y - 4.0,
            y + 4.0
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}

/// Normalized histograms of two samples over shared bins, drawn as steps.
pub fn histogram_overlay(a: &[f64], b: &[f64], labels: [&str; 2], bins: usize, title: &str) -> String {
    let (width, height) = (W, 360.0);
    let lo = a.iter().chain(b).cloned().fold(f64::INFINITY, f64::min);
    let hi = a.iter().chain(b).cloned().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let bw = (hi - lo) / bins as f64;
    let density = |v: &[f64]| {
        let mut h = vec![0.0; bins];
        for &x in v {
            let k = (((x - lo) / bw) as usize).min(bins - 1);
            h[k] += 1.0;
        }
        let n = v.len().max(1) as f64 * bw;
        h.iter_mut().for_each(|c| *c /= n);
        h
    };
    let (ha, hb) = (density(a), density(b));
    let top = ha.iter().chain(&hb).cloned().fold(0.0, f64::max);
    let frame = Frame::fit([lo, hi].into_iter(), [0.0, top.max(1e-12)].into_iter(), width, height);
    let mut out = String::new();
    header(&mut out, width, height, title);
    for (h, color, label, row) in [(&ha, "#999999", labels[0], 0), (&hb, "#d62728", labels[1], 1)] {
        let mut d = format!("M{:.2} {:.2}", frame.px(lo), frame.py(0.0));
        for (k, v) in h.iter().enumerate() {
            let x0 = lo + k as f64 * bw;
            let _ = write!(d, "V{:.2}H{:.2}", frame.py(*v), frame.px(x0 + bw));
        }
        let _ = write!(d, "V{:.2}", frame.py(0.0));
        let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.0}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{label}</text>"#,
            width - 160.0,
            40 + 16 * row
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="{:.0}" font-family="sans-serif" font-size="11">{lo:.2} .. {hi:.2} (log2 distance)</text>"#,
        height - 8.0
    );
    out.push_str("</svg>\n");
    out
}
