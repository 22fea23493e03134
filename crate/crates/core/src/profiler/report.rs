use std::fmt::Write as _;
use std::io::Write;

use super::UserProfile;
use crate::face_pipeline::render_summary;

const BAR_WIDTH: usize = 40;

/// Pretty-printed JSON followed by a newline.
pub fn write_profile_json<W: Write + ?Sized>(
    profile: &UserProfile,
    out: &mut W,
) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, profile)?;
    out.write_all(b"\n")
}

fn bars(rows: &[(&str, usize)], out: &mut String) {
    let max = rows.iter().map(|r| r.1).max().unwrap_or(0).max(1);
    let label_width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    for (label, n) in rows {
        let len = (n * BAR_WIDTH).div_ceil(max);
        let _ = writeln!(out, "  {label:<label_width$} {} {n}", "#".repeat(len));
    }
}

/// Plain-text rendering: group histogram, top categories, locations,
/// routing counts and the demography summary.
pub fn render_text_report(profile: &UserProfile, top_k: usize) -> String {
    let mut out = String::new();
    let mut groups: Vec<(&str, usize)> = profile
        .group_histogram
        .iter()
        .map(|(g, &n)| (g.as_str(), n))
        .collect();
    groups.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));

    out.push_str("Interest groups\n");
    if groups.is_empty() {
        out.push_str("  (none)\n");
    }
    bars(&groups, &mut out);

    let _ = writeln!(out, "Top {top_k} categories");
    let top = profile.top_categories(top_k);
    if top.is_empty() {
        out.push_str("  (none)\n");
    }
    bars(&top, &mut out);

    out.push_str("Locations\n");
    if profile.top_locations.is_empty() {
        out.push_str("  (none)\n");
    }
    for loc in &profile.top_locations {
        let _ = writeln!(
            out,
            "  ({:.4}, {:.4}) {} photos",
            loc.latitude, loc.longitude, loc.count
        );
    }

    let (private, public) = profile.routing_stats;
    let _ = writeln!(out, "Routing: {private} private, {public} public");
    out.push_str(&render_summary(&profile.demography));
    if !out.ends_with('\n') {
        out.push('\n');
    }
    out
}
