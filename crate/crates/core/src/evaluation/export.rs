use super::{EvaluationError, EvaluationReport, KSweepCurve, MeanKPoint};

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, EvaluationError> {
    let bytes = w.into_inner().map_err(|e| EvaluationError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Per-country rows followed by `MICRO` and `MACRO` summary rows.
pub fn report_csv(report: &EvaluationReport) -> Result<String, EvaluationError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["country", "correct", "total", "accuracy", "strategy", "seed"])?;
    let strategy = report.strategy.label();
    let seed = report.seed.to_string();
    for (country, s) in &report.scores.per_country {
        w.write_record([
            country.as_str(),
            &s.correct.to_string(),
            &s.total.to_string(),
            &format!("{:.6}", s.accuracy),
            &strategy,
            &seed,
        ])?;
    }
    let correct: usize = report.scores.per_country.values().map(|s| s.correct).sum();
    w.write_record([
        "MICRO",
        &correct.to_string(),
        &report.query_count.to_string(),
        &format!("{:.6}", report.scores.micro),
        &strategy,
        &seed,
    ])?;
    w.write_record(["MACRO", "", "", &format!("{:.6}", report.scores.macro_), &strategy, &seed])?;
    finish(w)
}

pub fn sweep_csv(curve: &KSweepCurve) -> Result<String, EvaluationError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "micro", "macro", "router_kind", "inner", "seed"])?;
    for p in &curve.points {
        w.write_record([
            p.k.to_string(),
            format!("{:.6}", p.micro),
            format!("{:.6}", p.macro_),
            curve.router_kind.as_str().to_string(),
            curve.inner.as_str().to_string(),
            curve.seed.to_string(),
        ])?;
    }
    finish(w)
}

pub fn mean_sweep_csv(points: &[MeanKPoint], router_kind: &str, seeds: usize) -> Result<String, EvaluationError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "micro_mean", "micro_std", "macro_mean", "router_kind", "seeds"])?;
    for p in points {
        w.write_record([
            p.k.to_string(),
            format!("{:.6}", p.micro_mean),
            format!("{:.6}", p.micro_std),
            format!("{:.6}", p.macro_mean),
            router_kind.to_string(),
            seeds.to_string(),
        ])?;
    }
    finish(w)
}
