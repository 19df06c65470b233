//! Plain-text rendering of evaluation summaries.

use super::evaluate::{EvaluationSummary, NEW_SAMPLES};

fn column_title(strategy: &str) -> String {
    match strategy {
        "standard" => "Standard".into(),
        "random" => "Random".into(),
        "bootstrap" => "Bootstrap".into(),
        "length_threshold" => "Heuristic".into(),
        "random_length" => "Random length".into(),
        "rare_words" => "Rare words".into(),
        "temporal" => "Temporal".into(),
        "adversarial" => "Adversarial".into(),
        NEW_SAMPLES => "New Samples".into(),
        other => other.into(),
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.3}")
}

/// Strategies as columns (new samples last), with rows for the run count,
/// system score, baseline score, error reduction and the MSE of each
/// strategy's estimates against the new-sample reference.
pub fn render_table(summary: &EvaluationSummary) -> String {
    let reports: Vec<_> = summary.reports.iter().chain(std::iter::once(&summary.new_samples)).collect();
    let mut header = vec![String::new()];
    header.extend(reports.iter().map(|r| column_title(&r.strategy)));
    let row = |name: &str, cell: &dyn Fn(usize) -> String| -> Vec<String> {
        std::iter::once(name.to_string()).chain((0..reports.len()).map(cell)).collect()
    };
    let rows = vec![
        header,
        row("runs", &|i| reports[i].per_run.len().to_string()),
        row("p_s", &|i| fmt(reports[i].p_s)),
        row("p_b", &|i| fmt(reports[i].p_b)),
        row("r", &|i| fmt(reports[i].error_reduction)),
        row("MSE", &|i| {
            summary
                .mse
                .get(&reports[i].strategy)
                .map_or_else(|| "-".to_string(), |m| fmt(*m))
        }),
    ];

    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in &rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}
