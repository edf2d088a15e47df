use std::io::Write;

use super::BacktestReport;

fn pct(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

/// Per-period table followed by `Mean`, `Skewness` and `Total` rows.
///
/// The `Mean` row carries the rounded mean nonzero length; `Total` sums both
/// length columns. Permuted columns are left empty without a baseline.
pub fn write_report_csv<W: Write>(
    report: &BacktestReport,
    permuted: Option<&BacktestReport>,
    mut out: W,
) -> std::io::Result<()> {
    let report = match permuted {
        Some(p) => report.clone().with_permuted(p),
        None => report.clone(),
    };
    writeln!(out, "period,n_original,n_nonzero,pct_success,pct_success_permuted")?;
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.label,
            r.n_original,
            r.n_nonzero,
            pct(Some(r.pct_success)),
            pct(r.pct_success_permuted)
        )?;
    }
    let rows = report.rows.len() as f64;
    let mean_nonzero = report.rows.iter().map(|r| r.n_nonzero as f64).sum::<f64>() / rows;
    writeln!(
        out,
        "Mean,,{},{},{}",
        mean_nonzero.round() as u64,
        pct(Some(report.mean_pct)),
        pct(permuted.map(|p| p.mean_pct))
    )?;
    writeln!(out, "Skewness,,,{},{}", pct(Some(report.skewness)), pct(permuted.map(|p| p.skewness)))?;
    let total_original: usize = report.rows.iter().map(|r| r.n_original).sum();
    let total_nonzero: usize = report.rows.iter().map(|r| r.n_nonzero).sum();
    writeln!(out, "Total,{total_original},{total_nonzero},,")
}

/// One line per labelled run: `instrument,skewness_original,skewness_permuted`.
pub fn write_skewness_summary<W: Write>(
    runs: &[(String, &BacktestReport, &BacktestReport)],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "instrument,skewness_original,skewness_permuted")?;
    for (name, original, permuted) in runs {
        writeln!(out, "{name},{:.4},{:.4}", original.skewness, permuted.skewness)?;
    }
    Ok(())
}
