use std::fmt::Write as _;

use super::export::event_polylines;
use crate::graph::PathGraph;
use crate::kkt::{Costs, EventType};

/// Which event paths to draw.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum EventSelection {
    #[default]
    None,
    All,
    Samples(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    pub width: f64,
    pub height: f64,
    pub facet_means: bool,
    pub events: EventSelection,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            width: 640.0,
            height: 640.0,
            facet_means: true,
            events: EventSelection::None,
        }
    }
}

const LAYER_FILLS: [&str; 2] = ["#cfe0f3", "#d3ecd0"];
const SPECIAL_FILL: &str = "#f4d9b8";

/// SVG picture of the facets inside `[0, window.0] x [0, window.1]`.
/// Facets alternate colour by layer; event paths are cyan for `t = 0` and
/// red for `t = 1`.
pub fn render_svg(graph: &PathGraph, window: (f64, f64), opts: &RenderOptions) -> String {
    let (wp, wm) = window;
    assert!(wp > 0.0 && wm > 0.0, "window must be positive");
    let (w, h) = (opts.width, opts.height);
    let px = |c: &Costs| (c.plus / wp * w, h - c.minus / wm * h);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r##"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">
<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>
<g stroke="#555" stroke-width="0.4">"##
    );
    let mut means = Vec::new();
    for f in &graph.facets {
        let Some(b) = &f.boundary else { continue };
        let poly = b.clip_to_box(wp, wm);
        if poly.len() < 3 {
            continue;
        }
        let fill = if f.special.is_some() { SPECIAL_FILL } else { LAYER_FILLS[f.layer % 2] };
        let _ = write!(s, r#"<polygon fill="{fill}" points=""#);
        for (k, p) in poly.iter().enumerate() {
            let (x, y) = px(p);
            let _ = write!(s, "{}{x:.2},{y:.2}", if k > 0 { " " } else { "" });
        }
        let _ = writeln!(s, r#""><title>facet {} layer {}</title></polygon>"#, f.id, f.layer);
        let n = poly.len() as f64;
        let (sp, sm) = poly.iter().fold((0.0, 0.0), |(a, b), p| (a + p.plus, b + p.minus));
        means.push(Costs::new(sp / n, sm / n));
    }
    s.push_str("</g>\n");
    if opts.facet_means {
        s.push_str("<g fill=\"red\">\n");
        for m in &means {
            let (x, y) = px(m);
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.5"/>"#);
        }
        s.push_str("</g>\n");
    }
    if opts.events != EventSelection::None {
        s.push_str("<g fill=\"none\" stroke-width=\"1.5\">\n");
        let reach = 4.0 * (wp + wm);
        for line in event_polylines(graph, reach) {
            if let EventSelection::Samples(keep) = &opts.events {
                if !keep.contains(&line.event.sample) {
                    continue;
                }
            }
            let colour = match line.event.t {
                EventType::MarginOutside => "cyan",
                EventType::MarginInside => "red",
            };
            let _ = write!(s, r#"<polyline stroke="{colour}" points=""#);
            for (k, p) in line.points.iter().enumerate() {
                let (x, y) = px(p);
                let _ = write!(s, "{}{x:.2},{y:.2}", if k > 0 { " " } else { "" });
            }
            let _ = writeln!(s, r#""><title>sample {} t={}</title></polyline>"#, line.event.sample, line.event.t.as_u8());
        }
        s.push_str("</g>\n");
    }
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{w}" height="{h}" fill="none" stroke="black"/>
<text x="{}" y="{}" font-size="11" text-anchor="end">C+ = {wp:.4e}</text>
<text x="4" y="12" font-size="11">C- = {wm:.4e}</text>
</svg>"#,
        w - 4.0,
        h - 4.0
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explorer::{run, ExploreConfig};
    use crate::kkt::{ActiveSets, AffineConstraint, AffineFunctional, Family};
    use crate::polytope::intersect_halfplanes;

    #[test]
    fn one_polygon_per_facet_in_window() {
        let data = crate::dataset::gaussian_classes(3, 3, 2, 1.0, 0.01, 5);
        let g = run(
            &data,
            &ExploreConfig {
                parallel: false,
                ..Default::default()
            },
        )
        .unwrap();
        let window = crate::explorer::default_window(&g);
        let svg = render_svg(&g, window, &RenderOptions::default());
        let drawn = g
            .facets
            .iter()
            .filter(|f| f.boundary.as_ref().is_some_and(|b| b.clip_to_box(window.0, window.1).len() >= 3))
            .count();
        assert_eq!(svg.matches("<polygon").count(), drawn);
        assert_eq!(svg.matches("<circle").count(), drawn);
        assert!(svg.starts_with("<?xml") && svg.trim_end().ends_with("</svg>"));
        let with_events = render_svg(
            &g,
            window,
            &RenderOptions {
                events: EventSelection::All,
                ..Default::default()
            },
        );
        assert!(with_events.contains(r#"stroke="cyan""#) || with_events.contains(r#"stroke="red""#));
    }

    #[test]
    fn unit_square_facet() {
        let mut g = PathGraph::new(2, 1);
        let (id, _) = g.facet_or_insert(ActiveSets::all_inside(2, 1), 1);
        let square = [
            AffineConstraint::sample(AffineFunctional::new(-1.0, 0.0, 1.0), Family::ScoreI, 0),
            AffineConstraint::sample(AffineFunctional::new(0.0, -1.0, 1.0), Family::ScoreI, 1),
        ];
        g.facets[id].boundary = Some(intersect_halfplanes(&square, &[], 1e-12).unwrap());
        let svg = render_svg(&g, (2.0, 2.0), &RenderOptions::default());
        assert_eq!(svg.matches("<polygon").count(), 1);
        assert!(svg.contains("320.00,320.00"));
    }
}
