//! Text and SVG renderings of joint saliency.
//!
//! Colors come from a fixed 256-entry jet-style map: entry `i` at
//! `x = i / 255` has channels `r = clamp(1.5 − |4x − 3|)`,
//! `g = clamp(1.5 − |4x − 2|)`, `b = clamp(1.5 − |4x − 1|)`, running from
//! dark blue through cyan, yellow and red. A joint with saliency `s` out of
//! `N` joints gets index `round(255 · min(1, s · N / 2))`, so the uniform
//! weight `1/N` lands mid-map and twice uniform saturates.

use std::fmt::Write as _;

use ndarray::{Array2, Axis};

/// Colormap entry `index` (0..=255) as `(r, g, b)` bytes.
pub fn colormap(index: u8) -> (u8, u8, u8) {
    let x = f64::from(index) / 255.0;
    let ch = |c: f64| ((1.5 - (4.0 * x - c).abs()).clamp(0.0, 1.0) * 255.0).round() as u8;
    (ch(3.0), ch(2.0), ch(1.0))
}

pub fn saliency_index(s: f64, num_joints: usize) -> u8 {
    (255.0 * (s * num_joints as f64 / 2.0).clamp(0.0, 1.0)).round() as u8
}

/// One row per frame: `frame,<joint names...>`.
pub fn saliency_csv(weights: &Array2<f64>, joints: &[String]) -> String {
    let mut out = String::from("frame");
    for j in 0..weights.ncols() {
        out.push(',');
        out.push_str(joints.get(j).map_or("", String::as_str));
    }
    out.push('\n');
    for (t, row) in weights.outer_iter().enumerate() {
        let _ = write!(out, "{t}");
        for v in row {
            let _ = write!(out, ",{v:.6}");
        }
        out.push('\n');
    }
    out
}

/// Skeleton drawn in the x/y plane of `pose` (`N × 3`), bones in grey and
/// joints colored by the mean saliency over frames.
pub fn skeleton_svg(pose: &Array2<f64>, edges: &[(usize, usize)], weights: &Array2<f64>, title: &str) -> String {
    const SIZE: f64 = 400.0;
    const PAD: f64 = 30.0;
    let n = pose.nrows();
    let mean = weights.mean_axis(Axis(0)).unwrap_or_else(|| ndarray::Array1::from_elem(n, 1.0 / n as f64));
    let (xs, ys) = (pose.column(0), pose.column(1));
    let lo_x = xs.fold(f64::INFINITY, |a, &b| a.min(b));
    let hi_x = xs.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let lo_y = ys.fold(f64::INFINITY, |a, &b| a.min(b));
    let hi_y = ys.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let span = (hi_x - lo_x).max(hi_y - lo_y).max(1e-9);
    let k = (SIZE - 2.0 * PAD) / span;
    // y grows downward in SVG
    let px = |j: usize| (PAD + (xs[j] - lo_x) * k, SIZE - PAD - (ys[j] - lo_y) * k);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for &(a, b) in edges {
        let ((x1, y1), (x2, y2)) = (px(a), px(b));
        let _ = writeln!(
            svg,
            r##"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#888888" stroke-width="3"/>"##
        );
    }
    for j in 0..n {
        let (x, y) = px(j);
        let (r, g, b) = colormap(saliency_index(mean[j], n));
        let _ = writeln!(
            svg,
            r##"<circle cx="{x:.2}" cy="{y:.2}" r="8" fill="#{r:02x}{g:02x}{b:02x}" stroke="black"><title>{j}: {:.4}</title></circle>"##,
            mean[j]
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn colormap_endpoints() {
        assert_eq!(colormap(0), (0, 0, 128));
        assert_eq!(colormap(255), (128, 0, 0));
        let (r, g, b) = colormap(128);
        assert!(g == 255 && r > 120 && b > 120, "{r} {g} {b}");
    }

    #[test]
    fn uniform_saliency_is_mid_map() {
        for n in [3, 6, 15] {
            assert_eq!(saliency_index(1.0 / n as f64, n), 128);
        }
        assert_eq!(saliency_index(0.0, 15), 0);
        assert_eq!(saliency_index(1.0, 15), 255);
    }

    #[test]
    fn uniform_weights_give_one_color() {
        let pose = array![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let w = Array2::from_elem((4, 3), 1.0 / 3.0);
        let svg = skeleton_svg(&pose, &[(0, 1), (0, 2)], &w, "t");
        let fills: Vec<&str> = svg.match_indices("fill=\"#").map(|(i, _)| &svg[i + 7..i + 13]).collect();
        assert_eq!(fills.len(), 3);
        assert!(fills.iter().all(|f| *f == fills[0]));
        assert_eq!(svg.matches("<line").count(), 2);
    }

    #[test]
    fn csv_shape() {
        let w = Array2::from_elem((2, 3), 1.0 / 3.0);
        let csv = saliency_csv(&w, &["a".into(), "b".into(), "c".into()]);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "frame,a,b,c");
        assert_eq!(lines.len(), 3);
    }
}
