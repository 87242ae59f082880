//! Static SVG figures of a drawn host: one polyline per pipe labelled with
//! its weight, clusters as dots, crossings between pipes as red marks. With
//! an order set each pipe also shows its guest edges as thin parallel
//! strands, first edge of the canonical order on the right of the
//! tail-to-head direction.

use std::fmt::Write as _;

use crate::geometry::{crossing_pairs_sweep, segment_relation, GeometryError, SegmentRelation};
use crate::model::*;

const SCALE: f64 = 60.0;
const MARGIN: f64 = 30.0;
const STRAND_GAP: f64 = 3.0;

struct Frame {
    min_x: f64,
    max_y: f64,
}

impl Frame {
    fn at(&self, p: &Point) -> (f64, f64) {
        (
            (p.x.to_f64() - self.min_x) * SCALE + MARGIN,
            (self.max_y - p.y.to_f64()) * SCALE + MARGIN,
        )
    }
}

fn points_attr(pts: &[(f64, f64)]) -> String {
    pts.iter()
        .map(|(x, y)| format!("{x:.2},{y:.2}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Polyline shifted sideways by `d` screen units (positive to the right of
/// the walking direction), mitring nothing: each vertex moves along the
/// average normal of its segments.
fn offset(pts: &[(f64, f64)], d: f64) -> Vec<(f64, f64)> {
    let normal = |a: (f64, f64), b: (f64, f64)| {
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let len = dx.hypot(dy).max(1e-9);
        // screen y points down, so (−dy, dx) is the right-hand side
        (-dy / len, dx / len)
    };
    (0..pts.len())
        .map(|i| {
            let mut n = (0.0, 0.0);
            if i > 0 {
                let m = normal(pts[i - 1], pts[i]);
                n = (n.0 + m.0, n.1 + m.1);
            }
            if i + 1 < pts.len() {
                let m = normal(pts[i], pts[i + 1]);
                n = (n.0 + m.0, n.1 + m.1);
            }
            let len = n.0.hypot(n.1).max(1e-9);
            (pts[i].0 + d * n.0 / len, pts[i].1 + d * n.1 / len)
        })
        .collect()
}

pub fn render_svg(inst: &Instance, orders: Option<&PipeOrderSet>) -> Result<String, GeometryError> {
    let host = &inst.host;
    let pairs = crossing_pairs_sweep(host)?;
    let all: Vec<&Point> = host
        .clusters
        .values()
        .chain(host.pipes.values().flat_map(|p| &p.bends))
        .collect();
    let xs: Vec<f64> = all.iter().map(|p| p.x.to_f64()).collect();
    let ys: Vec<f64> = all.iter().map(|p| p.y.to_f64()).collect();
    let fold = |v: &[f64], f: fn(f64, f64) -> f64, init: f64| v.iter().copied().fold(init, f);
    let (min_x, max_x) = (
        fold(&xs, f64::min, f64::INFINITY),
        fold(&xs, f64::max, f64::NEG_INFINITY),
    );
    let (min_y, max_y) = (
        fold(&ys, f64::min, f64::INFINITY),
        fold(&ys, f64::max, f64::NEG_INFINITY),
    );
    let (min_x, max_x, min_y, max_y) = if all.is_empty() {
        (0.0, 0.0, 0.0, 0.0)
    } else {
        (min_x, max_x, min_y, max_y)
    };
    let frame = Frame { min_x, max_y };
    let width = (max_x - min_x) * SCALE + 2.0 * MARGIN;
    let height = (max_y - min_y) * SCALE + 2.0 * MARGIN;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.2} {height:.2}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();

    let weights = inst.map.weights();
    s.push_str("<g class=\"pipes\" fill=\"none\" stroke=\"#888\">\n");
    for &p in host.pipes.keys() {
        let pts: Vec<(f64, f64)> = host.polyline(p).iter().map(|q| frame.at(q)).collect();
        let w = weights.get(&p).copied().unwrap_or(0);
        let stroke = 1.0 + STRAND_GAP * w as f64;
        writeln!(
            s,
            r#"<polyline class="pipe" data-pipe="{p}" data-weight="{w}" stroke-width="{stroke:.1}" stroke-opacity="0.35" points="{}"/>"#,
            points_attr(&pts)
        )
        .unwrap();
    }
    s.push_str("</g>\n");

    if let Some(orders) = orders {
        s.push_str("<g class=\"strands\" fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1\">\n");
        for (&p, order) in &orders.orders {
            let Some(pipe) = host.pipes.get(&p) else {
                continue;
            };
            let mut pts: Vec<(f64, f64)> = host.polyline(p).iter().map(|q| frame.at(q)).collect();
            if pipe.u != pipe.canonical().0 {
                pts.reverse();
            }
            let w = order.len() as f64;
            for (r, e) in order.iter().enumerate() {
                let d = STRAND_GAP * ((w - 1.0) / 2.0 - r as f64);
                writeln!(
                    s,
                    r#"<polyline class="strand" data-edge="{e}" points="{}"/>"#,
                    points_attr(&offset(&pts, d))
                )
                .unwrap();
            }
        }
        s.push_str("</g>\n");
    }

    s.push_str("<g class=\"crossings\" fill=\"#d62728\">\n");
    for &(p, q) in pairs.keys() {
        for a in host.polyline(p).windows(2) {
            for b in host.polyline(q).windows(2) {
                if let SegmentRelation::ProperCrossing(pt) =
                    segment_relation(&a[0], &a[1], &b[0], &b[1])
                {
                    let (x, y) = frame.at(&pt);
                    writeln!(s, r#"<circle class="crossing" data-pipes="{p} {q}" cx="{x:.2}" cy="{y:.2}" r="3"/>"#)
                        .unwrap();
                }
            }
        }
    }
    s.push_str("</g>\n");

    s.push_str("<g class=\"labels\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#444\">\n");
    for &p in host.pipes.keys() {
        let poly = host.polyline(p);
        let mid = poly.len() / 2;
        let (a, b) = (frame.at(&poly[mid - 1]), frame.at(&poly[mid]));
        let w = weights.get(&p).copied().unwrap_or(0);
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{w}</text>"#,
            (a.0 + b.0) / 2.0 + 4.0,
            (a.1 + b.1) / 2.0 - 4.0
        )
        .unwrap();
    }
    s.push_str("</g>\n");

    s.push_str("<g class=\"clusters\" fill=\"black\">\n");
    for (c, p) in &host.clusters {
        let (x, y) = frame.at(p);
        writeln!(
            s,
            r#"<circle class="cluster" data-cluster="{c}" cx="{x:.2}" cy="{y:.2}" r="4"/>"#
        )
        .unwrap();
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}
