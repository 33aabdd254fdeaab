//! Static SVG plots: curvature/torsion profiles and target-versus-attained
//! shape overlays.

use std::fmt::Write;

use nalgebra::Vector3;

use crate::geometry::{CTProfile, CrossingDirection, SignChange};

const PANEL_W: f64 = 520.0;
const PANEL_H: f64 = 220.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 44.0;
const FONT: &str = "font-family=\"sans-serif\" font-size=\"12\"";

fn px(v: f64) -> String {
    format!("{:.2}", v)
}

/// Axis-aligned data window drawn into a pixel rectangle.
struct Panel {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (-1.0, 1.0);
    }
    let span = hi - lo;
    if span <= 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
        let d = if lo.abs() > 0.0 { lo.abs() * 0.1 } else { 1e-3 };
        return (lo - d, hi + d);
    }
    (lo - 0.05 * span, hi + 0.05 * span)
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Roughly five round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-2..1e4).contains(&a) {
        let s = format!("{:.4}", v);
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{:.1e}", v)
    }
}

impl Panel {
    fn new(x0: f64, y0: f64, xr: (f64, f64), yr: (f64, f64)) -> Panel {
        Panel {
            x0: x0 + MARGIN_L,
            y0: y0 + MARGIN_T,
            w: PANEL_W - MARGIN_L - MARGIN_R,
            h: PANEL_H - MARGIN_T - MARGIN_B,
            xr,
            yr,
        }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let u = (x - self.xr.0) / (self.xr.1 - self.xr.0);
        let v = (y - self.yr.0) / (self.yr.1 - self.yr.0);
        (self.x0 + u * self.w, self.y0 + (1.0 - v) * self.h)
    }

    fn frame(&self, out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>",
            px(self.x0),
            px(self.y0),
            px(self.w),
            px(self.h)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" {FONT} text-anchor=\"middle\" font-weight=\"bold\">{title}</text>",
            px(self.x0 + self.w / 2.0),
            px(self.y0 - 12.0)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" {FONT} text-anchor=\"middle\">{xlabel}</text>",
            px(self.x0 + self.w / 2.0),
            px(self.y0 + self.h + 36.0)
        );
        let (lx, ly) = (self.x0 - 52.0, self.y0 + self.h / 2.0);
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" {FONT} text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">{ylabel}</text>",
            px(lx),
            px(ly),
            px(lx),
            px(ly)
        );
        for t in ticks(self.xr.0, self.xr.1) {
            let (x, y) = self.map(t, self.yr.0);
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" {FONT} text-anchor=\"middle\">{}</text>",
                px(x),
                px(y + 16.0),
                tick_label(t)
            );
        }
        for t in ticks(self.yr.0, self.yr.1) {
            let (x, y) = self.map(self.xr.0, t);
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" {FONT} text-anchor=\"end\">{}</text>",
                px(x - 4.0),
                px(y + 4.0),
                tick_label(t)
            );
        }
    }

    fn polyline(&self, out: &mut String, xy: &[(f64, f64)], color: &str, extra: &str) {
        let pts: Vec<String> = xy
            .iter()
            .map(|&(x, y)| {
                let (u, v) = self.map(x, y);
                format!("{},{}", px(u), px(v))
            })
            .collect();
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{extra}/>",
            pts.join(" ")
        );
    }

    fn markers(&self, out: &mut String, xy: &[(f64, f64)], color: &str) {
        for &(x, y) in xy {
            let (u, v) = self.map(x, y);
            let _ = writeln!(out, "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\"/>", px(u), px(v));
        }
    }

    fn vline(&self, out: &mut String, x: f64, color: &str, label: Option<&str>) {
        let (u, _) = self.map(x, self.yr.0);
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-dasharray=\"3,3\"/>",
            px(u),
            px(self.y0),
            px(u),
            px(self.y0 + self.h)
        );
        if let Some(l) = label {
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"middle\" fill=\"{color}\">{l}</text>",
                px(u),
                px(self.y0 + 10.0)
            );
        }
    }

    fn hline(&self, out: &mut String, y: f64) {
        if y < self.yr.0 || y > self.yr.1 {
            return;
        }
        let (_, v) = self.map(self.xr.0, y);
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999\"/>",
            px(self.x0),
            px(v),
            px(self.x0 + self.w),
            px(v)
        );
    }
}

fn document(width: f64, height: f64, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n",
        px(width),
        px(height),
        px(width),
        px(height)
    )
}

/// Curvature (1/cm) and torsion (1/mm) against arc length, with dashed
/// gridlines at the disks and markers at the sign changes.
pub fn ct_plot(profile: &CTProfile, disk_s: &[f64], sign_changes: &[SignChange]) -> String {
    let xr = padded(0.0, profile.s_max().max(disk_s.last().copied().unwrap_or(0.0)));
    let kappa: Vec<(f64, f64)> = profile.s.iter().zip(&profile.kappa).map(|(s, k)| (*s, k * 10.0)).collect();
    let tau: Vec<(f64, f64)> = profile.s.iter().zip(&profile.tau).map(|(s, t)| (*s, *t)).collect();
    let (klo, khi) = range(kappa.iter().map(|p| p.1));
    let (tlo, thi) = range(tau.iter().map(|p| p.1));
    let kp = Panel::new(0.0, 0.0, xr, padded(klo.min(0.0), khi));
    let tp = Panel::new(0.0, PANEL_H, xr, padded(tlo.min(0.0), thi.max(0.0)));
    let mut body = String::new();
    for (p, title, ylabel, data) in [
        (&kp, "Curvature", "kappa (1/cm)", &kappa),
        (&tp, "Torsion", "tau (1/mm)", &tau),
    ] {
        p.frame(&mut body, title, "arc length s (mm)", ylabel);
        p.hline(&mut body, 0.0);
        for (i, s) in disk_s.iter().enumerate() {
            p.vline(&mut body, *s, "#888", Some(&format!("D{}", i + 1)));
        }
        p.polyline(&mut body, data, "#1f4e9c", "");
    }
    for c in sign_changes {
        let color = match c.direction {
            CrossingDirection::PosToNeg => "#c0392b",
            CrossingDirection::NegToPos => "#27ae60",
        };
        tp.markers(&mut body, &[(c.s_pos, 0.0)], color);
    }
    document(PANEL_W, 2.0 * PANEL_H, &body)
}

/// Target and attained disk centers in the x-z and y-z projections.
pub fn overlay_plot(title: &str, target: &[Vector3<f64>], attained: &[Vector3<f64>]) -> String {
    let all = || target.iter().chain(attained);
    let zr = padded_equal(range(all().map(|p| p.z)));
    let mut body = String::new();
    let _ = writeln!(
        body,
        "<text x=\"{}\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" font-weight=\"bold\">{title}</text>",
        px(PANEL_W)
    );
    for (col, (axis, name)) in [(0usize, "x"), (1usize, "y")].iter().enumerate() {
        let hr = padded_equal(range(all().map(|p| p[*axis])));
        let mut p = Panel::new(col as f64 * PANEL_W, 10.0, hr, zr);
        p.h = p.w;
        p.frame(&mut body, &format!("{name}-z projection"), &format!("{name} (mm)"), "z (mm)");
        let t: Vec<(f64, f64)> = target.iter().map(|q| (q[*axis], q.z)).collect();
        let a: Vec<(f64, f64)> = attained.iter().map(|q| (q[*axis], q.z)).collect();
        p.polyline(&mut body, &t, "#1f4e9c", "");
        p.markers(&mut body, &t, "#1f4e9c");
        p.polyline(&mut body, &a, "#c0392b", " stroke-dasharray=\"6,3\"");
        p.markers(&mut body, &a, "#c0392b");
    }
    let ly = 10.0 + MARGIN_T + (PANEL_W - MARGIN_L - MARGIN_R) + 56.0;
    let _ = writeln!(
        body,
        "<text x=\"{}\" y=\"{}\" {FONT} fill=\"#1f4e9c\">target</text>\n<text x=\"{}\" y=\"{}\" {FONT} fill=\"#c0392b\">attained</text>",
        px(MARGIN_L),
        px(ly),
        px(MARGIN_L + 60.0),
        px(ly)
    );
    document(2.0 * PANEL_W, ly + 16.0, &body)
}

/// Symmetric padding with a minimum span so both projections share a scale.
fn padded_equal((lo, hi): (f64, f64)) -> (f64, f64) {
    let mid = 0.5 * (lo + hi);
    let half = (0.5 * (hi - lo)).max(300.0) * 1.05;
    (mid - half, mid + half)
}
