//! Text and JSON renderings of a [`Comparison`].

use std::fmt::Write as _;

use serde::Serialize;

use crate::experiment::Comparison;

const STD_CONVENTION: &str = "population";
const POOLING: &str = "pooled over all (image, patch) pairs";

/// Human-readable table: one row per patch, a Mean/Std column pair per
/// method and a final total-average row. Values in degrees, three decimals.
pub fn render_table(cmp: &Comparison) -> String {
    let mut out = String::new();
    let targets: Vec<String> = cmp.targets.iter().map(usize::to_string).collect();
    let _ = writeln!(out, "# reproduction angular error (deg)");
    let _ = writeln!(
        out,
        "# images: {}; reference: {}; targets: {}; eval space: {}",
        cmp.image_ids.len(),
        cmp.reference_id,
        targets.join(","),
        cmp.eval_space.name()
    );
    let _ = writeln!(out, "# std: {STD_CONVENTION}; total average: {POOLING}");

    const LABEL: usize = 13;
    const CELL: usize = 17;
    let _ = write!(out, "{:<LABEL$}", "Patch");
    for r in &cmp.reports {
        let _ = write!(out, "|{:^CELL$}", r.method_name);
    }
    out.push('\n');
    let _ = write!(out, "{:<LABEL$}", "");
    for _ in &cmp.reports {
        let _ = write!(out, "|{:>8}{:>8} ", "Mean", "Std");
    }
    out.push('\n');
    let rule = "-".repeat(LABEL + cmp.reports.len() * (CELL + 1));
    let _ = writeln!(out, "{rule}");

    let rows = cmp.reports.first().map_or(0, |r| r.per_patch.len());
    for row in 0..rows {
        let _ = write!(out, "{:<LABEL$}", cmp.reports[0].per_patch[row].patch_id);
        for r in &cmp.reports {
            let s = &r.per_patch[row];
            let _ = write!(out, "|{:>8.3}{:>8.3} ", s.mean_deg, s.std_deg);
        }
        out.push('\n');
    }
    let _ = writeln!(out, "{rule}");
    let _ = write!(out, "{:<LABEL$}", "Total average");
    for r in &cmp.reports {
        let _ = write!(out, "|{:>8.3}{:>8.3} ", r.total_average_mean, r.total_average_std);
    }
    out.push('\n');
    out
}

#[derive(Serialize)]
struct JsonReport<'a> {
    unit: &'static str,
    std_convention: &'static str,
    total_average_pooling: &'static str,
    #[serde(flatten)]
    comparison: &'a Comparison,
}

/// Machine-readable report with every value at full double precision.
pub fn render_json(cmp: &Comparison) -> String {
    let doc =
        JsonReport { unit: "deg", std_convention: STD_CONVENTION, total_average_pooling: POOLING, comparison: cmp };
    let mut s = serde_json::to_string_pretty(&doc).expect("report is plain data");
    s.push('\n');
    s
}
