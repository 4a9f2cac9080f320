use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::cell::HomogenizedTensor;
use crate::Result;

use super::rate::RateFit;
use super::runner::{CellOutcome, ProbeSummary, SolveReport, StudyReport};

pub const SWEEP_HEADER: [&str; 7] =
    ["epsilon", "h", "sup_err", "w12_err_vs_expansion", "discrepancy", "newton_iters", "apriori_ratio"];

/// Writes `sweep.csv`, `report.txt` and `sweep.svg` into `dir`.
pub fn emit_outputs(report: &StudyReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let csv = dir.join("sweep.csv");
    write_sweep_csv(report, fs::File::create(&csv)?)?;
    let txt = dir.join("report.txt");
    fs::write(&txt, study_text(report))?;
    let svg = dir.join("sweep.svg");
    fs::write(&svg, sweep_svg(report))?;
    Ok(vec![csv, txt, svg])
}

/// One row per requested period; the numeric fields of a failed period are
/// left empty.
pub fn write_sweep_csv<W: Write>(report: &StudyReport, w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(SWEEP_HEADER).map_err(csv_error)?;
    for r in &report.records {
        let mut row = vec![r.eps.to_string(), r.h.to_string()];
        match &r.outcome {
            Ok(s) => row.extend([
                s.sup_err.to_string(),
                s.w12_err.to_string(),
                s.discrepancy.to_string(),
                s.newton_iters.to_string(),
                s.apriori_ratio.to_string(),
            ]),
            Err(_) => row.extend(std::iter::repeat_n(String::new(), 5)),
        }
        out.write_record(&row).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> crate::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io.into(),
        other => crate::Error::Numeric(format!("csv: {other:?}")),
    }
}

fn tensor_lines(s: &mut String, t: &HomogenizedTensor) {
    let n = (t.data().len() / 4).isqrt();
    for a in 0..n {
        for b in 0..n {
            let _ = writeln!(
                s,
                "a_hat[{a}{b}] = [[{:.12e}, {:.12e}], [{:.12e}, {:.12e}]]",
                t.get(a, b, 0, 0),
                t.get(a, b, 0, 1),
                t.get(a, b, 1, 0),
                t.get(a, b, 1, 1)
            );
        }
    }
}

fn fit_line(s: &mut String, name: &str, fit: &std::result::Result<RateFit, String>) {
    match fit {
        Ok(f) => {
            let _ = writeln!(
                s,
                "{name}: slope {:.6} intercept {:.6} residual {:.6} points {}",
                f.slope, f.intercept, f.residual, f.used
            );
            if !f.excluded.is_empty() {
                let _ = writeln!(s, "{name}: excluded periods {:?}", f.excluded);
            }
        }
        Err(e) => {
            let _ = writeln!(s, "{name}: insufficient data ({e})");
        }
    }
}

pub fn cell_text(cell: &CellOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[cell]");
    let _ = writeln!(s, "resolution = {}", cell.correctors.resolution());
    let _ = writeln!(s, "legendre = {:.12e}", cell.legendre);
    let _ = writeln!(s, "residual = {:.3e}", cell.correctors.residual());
    let _ = writeln!(s, "from_cache = {}", cell.from_cache);
    tensor_lines(&mut s, &cell.tensor);
    let _ = writeln!(s, "certificate = {:.12e}", cell.certificate);
    s
}

pub fn solve_text(rep: &SolveReport) -> String {
    let mut s = cell_text(&rep.cell);
    let h = &rep.homogenized;
    let _ = writeln!(s, "\n[homogenized]");
    let _ = writeln!(s, "h = {:.6e}", h.u0.space().mesh().h());
    let _ = writeln!(s, "newton_iterations = {}", h.newton.iterations);
    let _ = writeln!(s, "converged = {}", h.newton.converged);
    let _ = writeln!(s, "sigma_min = {:.6e}", h.sigma_min);
    if let Some(e) = h.manufactured_error {
        let _ = writeln!(s, "manufactured_sup_error = {e:.6e}");
    }
    s
}

pub fn study_text(r: &StudyReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[cell]");
    let _ = writeln!(s, "residual = {:.3e}", r.cell_residual);
    tensor_lines(&mut s, &r.tensor);
    let _ = writeln!(s, "certificate = {:.12e}", r.certificate);
    if let Some((m, t)) = &r.limit {
        let _ = writeln!(s, "\n[limit]");
        let _ = writeln!(s, "resolution = {m}");
        tensor_lines(&mut s, t);
    }
    let _ = writeln!(s, "\n[homogenized]");
    let _ = writeln!(s, "h = {:.6e}", r.homogenized_h);
    let _ = writeln!(s, "newton_iterations = {}", r.homogenized_iterations);
    let _ = writeln!(s, "sigma_min = {:.6e}", r.sigma_min);
    let _ = writeln!(s, "\n[sweep]");
    let _ = writeln!(s, "variant = {}", r.variant.name());
    for rec in &r.records {
        match &rec.outcome {
            Ok(row) => {
                let _ = write!(
                    s,
                    "eps {:.6e} h {:.3e}: sup {:.6e} w12 {:.6e} discrepancy {:.6e} iters {} ratio {:.4} converged {}",
                    rec.eps, rec.h, row.sup_err, row.w12_err, row.discrepancy, row.newton_iters, row.apriori_ratio,
                    row.converged
                );
                if let Some(d) = row.delta {
                    let _ = write!(s, " delta {d:.4e}{}", if row.under_resolved { " (under-resolved)" } else { "" });
                }
                if let Some(c) = &row.cross {
                    let _ = write!(
                        s,
                        " | {} discrepancy {:.6e} converged {} agreement {:.3e}",
                        c.variant.name(),
                        c.discrepancy,
                        c.converged,
                        c.agreement
                    );
                }
                let _ = writeln!(s);
            }
            Err(e) => {
                let _ = writeln!(s, "eps {:.6e} h {:.3e}: failed: {e}", rec.eps, rec.h);
            }
        }
    }
    let _ = writeln!(s, "\n[rates]");
    fit_line(&mut s, "sup_err", &r.sup_fit);
    fit_line(&mut s, &format!("discrepancy ({})", r.variant.name()), &r.discrepancy_fit);
    if let Some(f) = &r.cross_discrepancy_fit {
        fit_line(&mut s, &format!("discrepancy ({})", r.variant.other().name()), f);
    }
    let ratios: Vec<f64> = r.series(|row| Some(row.apriori_ratio)).into_iter().map(|p| p.1).collect();
    if !ratios.is_empty() {
        let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
        let _ = writeln!(s, "apriori_ratio spread (max/min) = {:.4}", hi / lo);
    }
    s
}

pub fn probe_text(p: &ProbeSummary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[probe]");
    let _ = writeln!(s, "epsilon = {:.6e}", p.eps);
    let _ = writeln!(s, "reference_iterations = {}", p.reference.iterations);
    let _ = writeln!(s, "radius = {}", p.report.radius);
    for (i, t) in p.report.trials.iter().enumerate() {
        let _ = writeln!(s, "trial {i}: converged {} iterations {} distance {:.3e}", t.converged, t.iterations, t.distance);
    }
    let _ = writeln!(s, "all_agree = {}", p.report.all_agree);
    s
}

/// Log-log plot of the sup error and the discrepancy against the period,
/// with the fitted lines dashed.
pub fn sweep_svg(r: &StudyReport) -> String {
    let (w, h, pad) = (640.0, 480.0, 60.0);
    let series = [
        ("sup_err", "#1f77b4", r.series(|row| Some(row.sup_err)), &r.sup_fit),
        ("discrepancy", "#d62728", r.series(|row| Some(row.discrepancy)), &r.discrepancy_fit),
    ];
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.2.iter().copied())
        .filter(|p| p.0 > 0.0 && p.1 > 0.0)
        .map(|(x, y)| (x.log10(), y.log10()))
        .collect();
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if pts.is_empty() {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">no converged periods</text>"#, w / 2.0, h / 2.0);
        s.push_str("</svg>\n");
        return s;
    }
    let span = |v: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = v.fold((f64::MAX, f64::MIN), |(a, b), x| (a.min(x), b.max(x)));
        let (lo, hi) = (lo.floor(), hi.ceil());
        if hi > lo { (lo, hi) } else { (lo - 1.0, hi + 1.0) }
    };
    let (x0, x1) = span(&mut pts.iter().map(|p| p.0));
    let (y0, y1) = span(&mut pts.iter().map(|p| p.1));
    let px = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let py = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let _ = writeln!(
        s,
        r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    for d in (x0 as i64)..=(x1 as i64) {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">1e{d}</text>"#,
            px(d as f64),
            h - pad + 18.0
        );
    }
    for d in (y0 as i64)..=(y1 as i64) {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="end">1e{d}</text>"#,
            pad - 6.0,
            py(d as f64) + 4.0
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">epsilon</text>"#, w / 2.0, h - 12.0);
    for (k, (name, color, data, fit)) in series.iter().enumerate() {
        let line: Vec<String> = data
            .iter()
            .filter(|p| p.0 > 0.0 && p.1 > 0.0)
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x.log10()), py(y.log10())))
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" "));
        for p in &line {
            let (cx, cy) = p.split_once(',').unwrap();
            let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3.5" fill="{color}"/>"#);
        }
        let mut label = name.to_string();
        if let Ok(f) = fit {
            let ln10 = std::f64::consts::LN_10;
            let at = |x: f64| (f.intercept + f.slope * x * ln10) / ln10;
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-dasharray="6,4"/>"#,
                px(x0),
                py(at(x0)),
                px(x1),
                py(at(x1))
            );
            let _ = write!(label, " (slope {:.3})", f.slope);
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="13" fill="{color}">{label}</text>"#,
            pad + 10.0,
            pad + 18.0 + 18.0 * k as f64
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::ExpansionVariant;
    use crate::study::runner::{SweepRecord, SweepRow};

    fn report(records: Vec<SweepRecord>) -> StudyReport {
        StudyReport {
            variant: ExpansionVariant::Direct,
            tensor: HomogenizedTensor::new(1, vec![2.0, 0.0, 0.0, 2.0]).unwrap(),
            certificate: 2.0,
            cell_residual: 0.0,
            limit: None,
            sigma_min: 0.9,
            homogenized_iterations: 3,
            homogenized_h: 0.01,
            records,
            sup_fit: Err("no rows".into()),
            discrepancy_fit: Err("no rows".into()),
            cross_discrepancy_fit: None,
        }
    }

    fn row(e: f64) -> SweepRow {
        SweepRow {
            sup_err: e,
            w12_err: 2.0 * e,
            discrepancy: e.sqrt(),
            newton_iters: 3,
            apriori_ratio: 2.0 * e.sqrt(),
            converged: true,
            delta: None,
            under_resolved: false,
            cross: None,
        }
    }

    #[test]
    fn four_periods_give_five_lines() {
        let recs = [0.125, 0.0625, 0.03125, 0.015625]
            .into_iter()
            .map(|e| SweepRecord { eps: e, h: e / 8.0, outcome: Ok(row(e)) })
            .collect();
        let mut buf = Vec::new();
        write_sweep_csv(&report(recs), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().next().unwrap(), SWEEP_HEADER.join(","));
        assert!(text.lines().nth(1).unwrap().starts_with("0.125,0.015625,0.125,0.25,"));
    }

    #[test]
    fn failed_rows_keep_their_period() {
        let recs = vec![SweepRecord { eps: 0.25, h: 0.03125, outcome: Err("diverged".into()) }];
        let mut buf = Vec::new();
        write_sweep_csv(&report(recs), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().nth(1).unwrap(), "0.25,0.03125,,,,,");
    }

    #[test]
    fn empty_study_reports_insufficient_data() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_outputs(&report(Vec::new()), dir.path()).unwrap();
        assert_eq!(fs::read_to_string(&files[0]).unwrap().lines().count(), 1);
        let text = fs::read_to_string(&files[1]).unwrap();
        assert!(text.contains("sup_err: insufficient data"));
        assert!(fs::read_to_string(&files[2]).unwrap().contains("no converged periods"));
    }

    #[test]
    fn unwritable_directory_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        assert!(matches!(emit_outputs(&report(Vec::new()), &blocker.join("sub")), Err(crate::Error::Io(_))));
    }
}
