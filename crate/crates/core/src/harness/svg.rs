//! Region map: ground-truth labels projected onto two input dimensions.
//!
//! Cells that project onto the same rectangle are merged. A merged
//! rectangle is red when any of its cells is UNSAFE (opacity grows with the
//! unsafe fraction), green when all are SAFE and grey otherwise. Detector
//! cells are outlined.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use super::ground_truth::{GroundTruth, Label};
use crate::error::{Error, Result};

const PLOT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const LEGEND_W: f64 = 170.0;

const UNSAFE_FILL: &str = "#d62728";
const SAFE_FILL: &str = "#2ca02c";
const UNKNOWN_FILL: &str = "#9e9e9e";

#[derive(Default)]
struct Tally {
    safe: usize,
    unsafe_: usize,
    unknown: usize,
    detector: bool,
}

/// x range, y range and label tally of one projected rectangle.
type Projected = ([f64; 2], [f64; 2], Tally);
type RangeKey = (u64, u64);

fn key(lo: f64, hi: f64) -> RangeKey {
    // total order on finite floats via sign-adjusted bits
    fn ord(v: f64) -> u64 {
        let b = v.to_bits();
        if b >> 63 == 1 {
            !b
        } else {
            b | (1 << 63)
        }
    }
    (ord(lo), ord(hi))
}

pub fn render_region_map(gt: &GroundTruth, detector_ids: &[usize], dims: [usize; 2]) -> Result<String> {
    let d = gt.entries.first().map_or(0, |e| e.bounds.len());
    let [dx, dy] = dims;
    if dx >= d || dy >= d || dx == dy {
        return Err(Error::InvalidSpec(format!(
            "plot dimensions [{dx}, {dy}] invalid for {d}-dimensional sub-requirements"
        )));
    }
    let detectors: HashSet<usize> = detector_ids.iter().copied().collect();

    let mut cells: BTreeMap<(RangeKey, RangeKey), Projected> = BTreeMap::new();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for e in &gt.entries {
        let bx = e.bounds[dx];
        let by = e.bounds[dy];
        x0 = x0.min(bx[0]);
        x1 = x1.max(bx[1]);
        y0 = y0.min(by[0]);
        y1 = y1.max(by[1]);
        let slot = cells
            .entry((key(bx[0], bx[1]), key(by[0], by[1])))
            .or_insert_with(|| (bx, by, Tally::default()));
        match e.label {
            Label::Safe => slot.2.safe += 1,
            Label::Unsafe => slot.2.unsafe_ += 1,
            Label::Unknown => slot.2.unknown += 1,
        }
        slot.2.detector |= detectors.contains(&e.id);
    }
    let span = |a: f64, b: f64| if b > a { b - a } else { 1.0 };
    let sx = PLOT / span(x0, x1);
    let sy = PLOT / span(y0, y1);
    let px = |v: f64| MARGIN_LEFT + (v - x0) * sx;
    let py = |v: f64| MARGIN_TOP + PLOT - (v - y0) * sy;

    let width = MARGIN_LEFT + PLOT + LEGEND_W;
    let height = MARGIN_TOP + PLOT + MARGIN_BOTTOM;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" font-size="15">Safe and unsafe sub-requirements (dims {dx}, {dy})</text>"#,
        MARGIN_LEFT
    );

    let mut outlines = String::new();
    for (bx, by, t) in cells.values() {
        let (x, w) = (px(bx[0]), (bx[1] - bx[0]) * sx);
        let (y, h) = (py(by[1]), (by[1] - by[0]) * sy);
        let total = t.safe + t.unsafe_ + t.unknown;
        let (class, fill, opacity) = if t.unsafe_ > 0 {
            let frac = t.unsafe_ as f64 / total as f64;
            ("cell unsafe", UNSAFE_FILL, 0.35 + 0.65 * frac)
        } else if t.unknown == 0 {
            ("cell safe", SAFE_FILL, 0.6)
        } else {
            ("cell unknown", UNKNOWN_FILL, 0.6)
        };
        let _ = writeln!(
            s,
            r##"<rect class="{class}" x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{h:.3}" fill="{fill}" fill-opacity="{opacity:.3}" stroke="#ffffff" stroke-width="1"><title>[{:.6}, {:.6}] x [{:.6}, {:.6}]: {} unsafe, {} safe, {} unknown</title></rect>"##,
            bx[0], bx[1], by[0], by[1], t.unsafe_, t.safe, t.unknown
        );
        if t.detector {
            let _ = writeln!(
                outlines,
                r##"<rect class="detector" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="#000000" stroke-width="2.5"/>"##,
                x + 1.5,
                y + 1.5,
                (w - 3.0).max(0.0),
                (h - 3.0).max(0.0)
            );
        }
    }
    s.push_str(&outlines);

    // axes
    let base = MARGIN_TOP + PLOT;
    let _ = writeln!(
        s,
        r##"<line x1="{MARGIN_LEFT:.1}" y1="{base:.1}" x2="{:.1}" y2="{base:.1}" stroke="#000000"/>"##,
        MARGIN_LEFT + PLOT
    );
    let _ = writeln!(
        s,
        r##"<line x1="{MARGIN_LEFT:.1}" y1="{MARGIN_TOP:.1}" x2="{MARGIN_LEFT:.1}" y2="{base:.1}" stroke="#000000"/>"##
    );
    let _ = writeln!(s, r#"<text class="axis" x="{MARGIN_LEFT:.1}" y="{:.1}" text-anchor="middle">{x0:.5}</text>"#, base + 16.0);
    let _ = writeln!(s, r#"<text class="axis" x="{:.1}" y="{:.1}" text-anchor="middle">{x1:.5}</text>"#, MARGIN_LEFT + PLOT, base + 16.0);
    let _ = writeln!(s, r#"<text class="axis" x="{:.1}" y="{:.1}" text-anchor="middle">input dim {dx}</text>"#, MARGIN_LEFT + PLOT / 2.0, base + 40.0);
    let _ = writeln!(s, r#"<text class="axis" x="{:.1}" y="{base:.1}" text-anchor="end">{y0:.5}</text>"#, MARGIN_LEFT - 6.0);
    let _ = writeln!(s, r#"<text class="axis" x="{:.1}" y="{:.1}" text-anchor="end">{y1:.5}</text>"#, MARGIN_LEFT - 6.0, MARGIN_TOP + 10.0);
    let _ = writeln!(
        s,
        r#"<text class="axis" transform="translate(18 {:.1}) rotate(-90)" text-anchor="middle">input dim {dy}</text>"#,
        MARGIN_TOP + PLOT / 2.0
    );

    // legend
    let lx = MARGIN_LEFT + PLOT + 20.0;
    let entries = [
        ("unsafe", UNSAFE_FILL, "none"),
        ("safe", SAFE_FILL, "none"),
        ("unknown", UNKNOWN_FILL, "none"),
        ("detector", "none", "#000000"),
    ];
    for (i, (name, fill, stroke)) in entries.iter().enumerate() {
        let y = MARGIN_TOP + 10.0 + 24.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect class="legend" x="{lx:.1}" y="{y:.1}" width="16" height="16" fill="{fill}" stroke="{stroke}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{name}</text>"#,
            lx + 24.0,
            y + 12.5
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
