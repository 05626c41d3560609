//! Tables on standard output and CSV exports.

use std::fmt::Write as _;

use rankexp::interleave::QualityReport;
use rankexp::sim::{MetaReport, PowerReport, SweepRow, CF_METRICS};
use rankexp::{AnalysisReport, EstimateReport, ModeReport};

use crate::GammaReport;

fn csv_string(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn estimate_line(out: &mut String, r: &EstimateReport) {
    let pct = r
        .percent_delta
        .map_or_else(|| "n/a".to_string(), |p| format!("{:+.2}%", 100.0 * p));
    let _ = writeln!(
        out,
        "  {:<24} {:>+12.6} {:>10} p={:<10.4e} n={}",
        r.metric_name, r.tau_hat, pct, r.p_value, r.n_units
    );
}

pub fn report_table(r: &AnalysisReport) -> String {
    let mut out = format!(
        "experiment {}: {} exposures, {} events, {} dropped bookings\n",
        r.experiment, r.n_exposures, r.n_events, r.dropped_bookings
    );
    match &r.result {
        ModeReport::Ab { conversion } => {
            out.push_str("mode AB\n");
            estimate_line(&mut out, conversion);
        }
        ModeReport::Interleaving {
            preference,
            click_preference,
            quality,
            skipped_events,
        } => {
            out.push_str("mode INTERLEAVING\n");
            for (name, p) in [("tau_pref", preference), ("tau_pref_click", click_preference)] {
                let _ = writeln!(
                    out,
                    "  {:<24} {:>+12.6} T={} C={} tied={} p={:.4e}",
                    name, p.tau_pref, p.n_prefer_t, p.n_prefer_c, p.n_tied, p.p_value
                );
            }
            for m in quality.metrics() {
                estimate_line(&mut out, m);
            }
            let _ = writeln!(out, "  skipped events: {skipped_events}");
        }
        ModeReport::Counterfactual {
            estimates,
            conversion,
            missing_in_cf,
            skipped_events,
        } => {
            out.push_str("mode COUNTERFACTUAL\n");
            estimates.iter().for_each(|e| estimate_line(&mut out, e));
            estimate_line(&mut out, conversion);
            let _ = writeln!(
                out,
                "  missing in counterfactual: {missing_in_cf}, skipped events: {skipped_events}"
            );
        }
    }
    out
}

/// Team balance under interleaving: one row per quality metric.
pub fn quality_csv(q: &QualityReport) -> String {
    let mut rows = vec![["metric", "delta", "baseline_mean", "std_error", "p_value", "n_users"]
        .map(String::from)
        .to_vec()];
    for m in q.metrics() {
        rows.push(vec![
            m.metric_name.clone(),
            m.tau_hat.to_string(),
            m.baseline_mean.to_string(),
            opt(m.std_error()),
            m.p_value.to_string(),
            m.n_units.to_string(),
        ]);
    }
    csv_string(rows)
}

pub fn correlation_csv(r: &MetaReport) -> String {
    let mut rows = vec![["metric", "corr", "directional_agreement", "note"]
        .map(String::from)
        .to_vec()];
    for m in &r.metrics {
        rows.push(vec![
            m.metric.clone(),
            opt(m.pearson),
            m.directional_agreement.to_string(),
            m.error.clone().unwrap_or_default(),
        ]);
    }
    csv_string(rows)
}

pub fn sweep_csv(rows_in: &[SweepRow], symbol: &str) -> String {
    let mut header = vec!["metric".to_string()];
    if let Some(first) = rows_in.first() {
        header.extend(first.values.iter().map(|v| format!("{symbol}={v}")));
    }
    let mut rows = vec![header];
    for r in rows_in {
        let mut row = vec![r.metric.clone()];
        row.extend(r.pearson.iter().map(|p| opt(*p)));
        rows.push(row);
    }
    csv_string(rows)
}

const SCATTER_METRICS: [&str; 3] = ["tau_pref", "tau_g", "tau_oec"];

fn scatter_names() -> Vec<&'static str> {
    let mut names = vec!["tau_pref", "tau_pref_click"];
    names.extend(CF_METRICS);
    names
}

/// One row per corpus experiment: A/B ground truth next to every online estimate.
pub fn scatter_csv(r: &MetaReport) -> String {
    let names = scatter_names();
    let mut header = vec!["experiment".to_string(), "ab_conversion".into(), "ab_p_value".into()];
    header.extend(names.iter().map(|s| s.to_string()));
    let mut rows = vec![header];
    for e in &r.experiments {
        let mut row = vec![
            e.index.to_string(),
            e.ab_conversion.to_string(),
            e.ab_p_value.to_string(),
        ];
        row.extend(names.iter().map(|n| opt(e.estimates.get(*n).copied())));
        rows.push(row);
    }
    csv_string(rows)
}

/// Sign agreement of each online estimate with A/B, per experiment.
pub fn agreement_csv(r: &MetaReport) -> String {
    let names = scatter_names();
    let mut header = vec!["experiment".to_string()];
    header.extend(names.iter().map(|s| s.to_string()));
    let mut rows = vec![header];
    let sign = |x: f64| (x > 0.0) as i8 - (x < 0.0) as i8;
    for e in &r.experiments {
        let mut row = vec![e.index.to_string()];
        row.extend(names.iter().map(|n| match e.estimates.get(*n) {
            Some(&v) => (sign(v) == sign(e.ab_conversion)).to_string(),
            None => String::new(),
        }));
        rows.push(row);
    }
    csv_string(rows)
}

pub fn meta_table(r: &MetaReport) -> String {
    let mut out = format!("corpus of {} experiments\n", r.experiments.len());
    let _ = writeln!(out, "  {:<20} {:>8} {:>10}", "metric", "corr", "agreement");
    for m in &r.metrics {
        let corr = m.pearson.map_or_else(|| "undef".to_string(), |c| format!("{c:.3}"));
        let _ = writeln!(out, "  {:<20} {:>8} {:>10.3}", m.metric, corr, m.directional_agreement);
    }
    for (title, sweep) in [("alpha", &r.alpha_sweep), ("gamma", &r.gamma_sweep)] {
        for row in sweep
            .iter()
            .filter(|row| SCATTER_METRICS.contains(&row.metric.as_str()) || title == "alpha")
        {
            let cells: Vec<String> = row
                .values
                .iter()
                .zip(&row.pearson)
                .map(|(v, p)| {
                    format!(
                        "{title}={v}: {}",
                        p.map_or_else(|| "undef".into(), |c| format!("{c:.3}"))
                    )
                })
                .collect();
            let _ = writeln!(out, "  {:<20} {}", row.metric, cells.join("  "));
        }
    }
    out
}

pub fn gamma_table(r: &GammaReport) -> String {
    let cands: Vec<String> = r.candidates.iter().map(|c| format!("{c:.4}")).collect();
    format!(
        "gamma_0 = {:.4} from {} clicks over {} ranks\ncandidates: {}\n",
        r.gamma_0,
        r.n_clicks,
        r.fit.ranks_used,
        cands.join(", ")
    )
}

pub fn power_table(r: &PowerReport) -> String {
    let mut out = format!(
        "alpha={} power={} replications={}\n  {:<16} {:>14} {:>10}\n",
        r.spec.significance_level, r.spec.power_target, r.conversion.replications, "metric", "required_n", "speedup"
    );
    let _ = writeln!(
        out,
        "  {:<16} {:>14} {:>10}",
        "conversion",
        r.conversion.describe(),
        "1"
    );
    for (row, o) in r.rows.iter().zip(&r.outcomes) {
        let speedup = match (row.speedup, row.is_lower_bound) {
            (Some(s), false) => format!("{s:.1}"),
            (Some(s), true) => format!(">={s:.1}"),
            (None, _) => "n/a".into(),
        };
        let _ = writeln!(out, "  {:<16} {:>14} {:>10}", row.metric, o.describe(), speedup);
    }
    out
}
