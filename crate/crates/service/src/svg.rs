//! Standalone SVG of a trial or session: hall geometry, pedestrian tracks in
//! one style and the participant's avatar track in another.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use glam::DVec2;
use serde::Deserialize;
use telewalk_core::crowd::Scenario;

use crate::log::{read_json, read_jsonl, Manifest, TickRecord};
use crate::Result;

const SCALE: f64 = 40.0;
const PAD: f64 = 1.0;

#[derive(Deserialize)]
struct Row {
    id: u64,
    kind: String,
    x: f64,
    y: f64,
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Tracks {
    pub pedestrians: BTreeMap<u64, Vec<DVec2>>,
    pub participant: Vec<DVec2>,
}

/// Reads tracks from a log directory. Session logs take the participant
/// track from every tick rather than the decimated CSV.
pub fn load_tracks(dir: &Path) -> Result<(Scenario, Tracks)> {
    let manifest: Manifest = read_json(&dir.join("manifest.json"))?;
    let mut tracks = Tracks::default();
    let csv_path = dir.join("trajectory.csv");
    if csv_path.exists() {
        let mut reader = csv::Reader::from_path(&csv_path)?;
        for row in reader.deserialize::<Row>() {
            let row = row?;
            let p = DVec2::new(row.x, row.y);
            if row.kind == "avatar" {
                tracks.participant.push(p);
            } else {
                tracks.pedestrians.entry(row.id).or_default().push(p);
            }
        }
    }
    let ticks = dir.join("ticks.jsonl");
    if ticks.exists() {
        let records: Vec<TickRecord> = read_jsonl(&ticks)?;
        if !records.is_empty() {
            tracks.participant = records.iter().map(|r| DVec2::new(r.avatar.x, r.avatar.y)).collect();
        }
    }
    Ok((manifest.scenario, tracks))
}

fn bounds(scenario: &Scenario, tracks: &Tracks) -> (DVec2, DVec2) {
    let mut lo = DVec2::splat(f64::INFINITY);
    let mut hi = DVec2::splat(f64::NEG_INFINITY);
    let mut add = |p: DVec2| {
        lo = lo.min(p);
        hi = hi.max(p);
    };
    for w in &scenario.walls {
        add(w.a);
        add(w.b);
    }
    for poly in [&scenario.spawn_surface, &scenario.goal_surface] {
        poly.points().for_each(&mut add);
    }
    tracks.pedestrians.values().flatten().copied().for_each(&mut add);
    tracks.participant.iter().copied().for_each(&mut add);
    (lo - PAD, hi + PAD)
}

pub fn render(scenario: &Scenario, tracks: &Tracks) -> String {
    let (lo, hi) = bounds(scenario, tracks);
    let size = (hi - lo) * SCALE;
    // y grows upward in the hall, downward in SVG
    let px = |p: DVec2| ((p.x - lo.x) * SCALE, (hi.y - p.y) * SCALE);
    let points = |ps: &mut dyn Iterator<Item = DVec2>| {
        ps.map(|p| {
            let (x, y) = px(p);
            format!("{x:.2},{y:.2}")
        })
        .collect::<Vec<_>>()
        .join(" ")
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.2} {:.2}">"#,
        size.x, size.y, size.x, size.y
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<g id="geometry">"#);
    for (id, poly, fill) in [("spawn", &scenario.spawn_surface, "#dbeafe"), ("goal", &scenario.goal_surface, "#dcfce7")] {
        let _ = writeln!(s, r#"<polygon id="{id}" points="{}" fill="{fill}" stroke="none"/>"#, points(&mut poly.points()));
    }
    for w in &scenario.walls {
        let (x1, y1) = px(w.a);
        let (x2, y2) = px(w.b);
        let _ = writeln!(s, r#"<line class="wall" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="black" stroke-width="3"/>"#);
    }
    for g in &scenario.gates {
        let (x1, y1) = px(g.a());
        let (x2, y2) = px(g.b());
        let _ = writeln!(
            s,
            r#"<line class="gate" data-gate="{}" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="seagreen" stroke-width="3" stroke-dasharray="4 3"/>"#,
            g.id
        );
    }
    let _ = writeln!(s, "</g>");
    if !tracks.pedestrians.is_empty() {
        let _ = writeln!(s, r#"<g id="pedestrians" fill="none" stroke="steelblue" stroke-width="1" stroke-opacity="0.6">"#);
        for (id, track) in &tracks.pedestrians {
            let _ = writeln!(s, r#"<polyline data-id="{id}" points="{}"/>"#, points(&mut track.iter().copied()));
        }
        let _ = writeln!(s, "</g>");
    }
    if tracks.participant.len() > 1 {
        let _ = writeln!(
            s,
            r#"<polyline id="participant" fill="none" stroke="crimson" stroke-width="3" points="{}"/>"#,
            points(&mut tracks.participant.iter().copied())
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn export_svg(log: &Path, out: &Path) -> Result<()> {
    let (scenario, tracks) = load_tracks(log)?;
    std::fs::write(out, render(&scenario, &tracks))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_only_without_tracks() {
        let svg = render(&Scenario::four_gate_hall(), &Tracks::default());
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches(r#"class="gate""#).count(), 4);
        assert!(!svg.contains("polyline"));
    }
}
