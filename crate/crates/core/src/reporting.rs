//! Post-processing of diagnostics CSV series into pass/fail verdicts.
//!
//! Boundedness of a column means its max over the last half of the run stays
//! within a factor of its max over the middle third. Spread compares tail
//! maxima of the same column across several runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Result, SimError};
use crate::harness::experiments::spread_ratio;

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub criterion: String,
    pub pass: bool,
    pub measured: f64,
    pub threshold: f64,
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriteriaSpec {
    /// Columns checked for boundedness.
    pub bounded_columns: Vec<String>,
    /// Allowed growth of the tail max over the middle-third max.
    pub factor: f64,
    /// Columns compared across runs by [`spread_verdicts`].
    pub spread_columns: Vec<String>,
    pub spread_threshold: f64,
    /// Tail fraction used for spread statistics.
    pub spread_tail: f64,
}

impl Default for CriteriaSpec {
    fn default() -> Self {
        CriteriaSpec {
            bounded_columns: ["max_n", "l2_grad_c", "l2_u", "energy_F"].map(String::from).to_vec(),
            factor: 1.05,
            spread_columns: ["max_n", "linf_grad_c"].map(String::from).to_vec(),
            spread_threshold: 1.5,
            spread_tail: 0.2,
        }
    }
}

/// A parsed series keyed by column name.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub columns: BTreeMap<String, Vec<f64>>,
}

impl Series {
    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| SimError::Schema(format!("missing column `{name}`")))
    }

    pub fn t(&self) -> &[f64] {
        &self.columns["t"]
    }

    pub fn len(&self) -> usize {
        self.columns.get("t").map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_header(found: &[&str]) -> Result<()> {
    let expected = DiagnosticsRecord::CSV_HEADER;
    if let Some(missing) = expected.iter().find(|c| !found.contains(c)) {
        return Err(SimError::Schema(format!("missing column `{missing}`")));
    }
    if let Some(extra) = found.iter().find(|c| !expected.contains(c)) {
        return Err(SimError::Schema(format!("unexpected column `{extra}`")));
    }
    if found != expected {
        return Err(SimError::Schema(format!(
            "columns out of order: expected `{}`",
            expected.join(",")
        )));
    }
    Ok(())
}

pub fn parse_series(text: &str) -> Result<Series> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let names: Vec<&str> = header.iter().map(String::as_str).collect();
    check_header(&names)?;
    let mut columns: BTreeMap<String, Vec<f64>> = header.iter().map(|h| (h.clone(), Vec::new())).collect();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (name, field) in header.iter().zip(rec.iter()) {
            let v: f64 = field.trim().parse().map_err(|_| {
                SimError::Schema(format!("row {}: column `{name}` is not a number: `{field}`", row + 1))
            })?;
            columns.get_mut(name).expect("known column").push(v);
        }
    }
    Ok(Series { columns })
}

pub fn read_series(path: impl AsRef<Path>) -> Result<Series> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    parse_series(&text)
}

/// Least-squares slope of `y` against `x`; 0 for fewer than two points.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    if n < 2 {
        return 0.0;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for k in 0..n {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn max_where(t: &[f64], v: &[f64], keep: impl Fn(f64) -> bool) -> f64 {
    t.iter()
        .zip(v)
        .filter(|(&t, _)| keep(t))
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `tail max (t >= T/2) <= mid max + (factor - 1) |mid max|`, with the middle
/// third `T/3 <= t <= 2T/3`.
pub fn boundedness_verdict(name: &str, t: &[f64], v: &[f64], factor: f64) -> Verdict {
    let t_end = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let eps = 1e-12 * t_end.abs().max(1.0);
    let mid = max_where(t, v, |s| s >= t_end / 3.0 - eps && s <= 2.0 * t_end / 3.0 + eps);
    let tail = max_where(t, v, |s| s >= t_end / 2.0 - eps);
    let threshold = mid + (factor - 1.0) * mid.abs();
    let (tt, tv): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(v)
        .filter(|(&s, _)| s >= t_end / 2.0 - eps)
        .map(|(&a, &b)| (a, b))
        .unzip();
    let slope = least_squares_slope(&tt, &tv);
    let determinate = mid.is_finite() && tail.is_finite();
    Verdict {
        criterion: format!("bounded:{name}"),
        pass: determinate && tail <= threshold,
        measured: tail,
        threshold,
        notes: if determinate {
            format!("mid_max={mid:.6e} tail_slope={slope:.6e}")
        } else {
            "too few snapshots".into()
        },
    }
}

/// Boundedness verdicts for every configured column of one series file.
pub fn summarize(csv_path: impl AsRef<Path>, criteria: &CriteriaSpec) -> Result<Vec<Verdict>> {
    let series = read_series(csv_path)?;
    summarize_series(&series, criteria)
}

pub fn summarize_series(series: &Series, criteria: &CriteriaSpec) -> Result<Vec<Verdict>> {
    criteria
        .bounded_columns
        .iter()
        .map(|c| Ok(boundedness_verdict(c, series.t(), series.column(c)?, criteria.factor)))
        .collect()
}

/// Max of `column` over `t >= (1 - fraction) T`.
pub fn tail_max(series: &Series, column: &str, fraction: f64) -> Result<f64> {
    let t = series.t();
    let t_end = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let start = (1.0 - fraction) * t_end - 1e-12 * t_end.abs().max(1.0);
    Ok(max_where(t, series.column(column)?, |s| s >= start))
}

/// Spread ratio of tail maxima across runs, one verdict per column.
pub fn spread_verdicts(series: &[Series], criteria: &CriteriaSpec) -> Result<Vec<Verdict>> {
    criteria
        .spread_columns
        .iter()
        .map(|c| {
            let tails = series
                .iter()
                .map(|s| tail_max(s, c, criteria.spread_tail))
                .collect::<Result<Vec<_>>>()?;
            let ratio = spread_ratio(&tails);
            let list: Vec<String> = tails.iter().map(|v| format!("{v:.6e}")).collect();
            Ok(Verdict {
                criterion: format!("spread:{c}"),
                pass: ratio <= criteria.spread_threshold,
                measured: ratio,
                threshold: criteria.spread_threshold,
                notes: format!("tail maxima {}", list.join(" ")),
            })
        })
        .collect()
}

pub fn verdicts_csv(verdicts: &[Verdict]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["criterion", "pass", "measured", "threshold", "notes"])?;
    for v in verdicts {
        w.write_record([
            v.criterion.clone(),
            v.pass.to_string(),
            format!("{:.16e}", v.measured),
            format!("{:.16e}", v.threshold),
            v.notes.clone(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| SimError::Experiment(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| SimError::Experiment(e.to_string()))
}

pub fn verdicts_table(verdicts: &[Verdict]) -> String {
    let mut s = String::new();
    let width = verdicts.iter().map(|v| v.criterion.len()).max().unwrap_or(9).max(9);
    let _ = writeln!(s, "{:<width$} {:<4} {:>14} {:>14}  notes", "criterion", "pass", "measured", "threshold");
    for v in verdicts {
        let _ = writeln!(
            s,
            "{:<width$} {:<4} {:>14.6e} {:>14.6e}  {}",
            v.criterion,
            if v.pass { "PASS" } else { "FAIL" },
            v.measured,
            v.threshold,
            v.notes
        );
    }
    s
}

fn collect_csv(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| SimError::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|e| SimError::io(dir, e)))
        .collect::<Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_csv(&p, out)?;
        } else if p.extension().is_some_and(|e| e == "csv") && p.file_name().is_some_and(|n| n != "verdicts.csv") {
            out.push(p);
        }
    }
    Ok(())
}

/// Summarizes every series under `dir`, adds spread verdicts over the runs
/// kept in `scale_*` subdirectories, and writes `verdicts.csv` into `dir`.
pub fn report_dir(dir: impl AsRef<Path>, criteria: &CriteriaSpec) -> Result<Vec<Verdict>> {
    let dir = dir.as_ref();
    let mut files = Vec::new();
    collect_csv(dir, &mut files)?;
    if files.is_empty() {
        return Err(SimError::Experiment(format!("no series CSV found under {}", dir.display())));
    }
    let mut verdicts = Vec::new();
    let mut scaled = Vec::new();
    for f in &files {
        let series = read_series(f)?;
        let rel = f.strip_prefix(dir).unwrap_or(f).display().to_string();
        for mut v in summarize_series(&series, criteria)? {
            v.criterion = format!("{rel}:{}", v.criterion);
            verdicts.push(v);
        }
        let in_scale_dir = f
            .parent()
            .and_then(Path::file_name)
            .is_some_and(|n| n.to_string_lossy().starts_with("scale_"));
        if in_scale_dir {
            scaled.push(series);
        }
    }
    if scaled.len() >= 2 {
        verdicts.extend(spread_verdicts(&scaled, criteria)?);
    }
    let out = dir.join("verdicts.csv");
    fs::write(&out, verdicts_csv(&verdicts)?).map_err(|e| SimError::io(&out, e))?;
    Ok(verdicts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(n: usize, t_end: f64, f: impl Fn(&str, f64) -> f64) -> String {
        let mut s = DiagnosticsRecord::CSV_HEADER.join(",");
        s.push('\n');
        for k in 0..=n {
            let t = t_end * k as f64 / n as f64;
            let row: Vec<String> = DiagnosticsRecord::CSV_HEADER
                .iter()
                .map(|c| format!("{:.16e}", if *c == "t" { t } else { f(c, t) }))
                .collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    #[test]
    fn constant_columns_have_constant_tail_max() {
        let text = synthetic(60, 30.0, |_, _| 2.5);
        let series = parse_series(&text).unwrap();
        let v = summarize_series(&series, &CriteriaSpec::default()).unwrap();
        assert_eq!(v.len(), 4);
        for verdict in &v {
            assert!(verdict.pass);
            assert_eq!(verdict.measured, 2.5);
            assert!(verdict.notes.contains("tail_slope=0"));
        }
        assert_eq!(tail_max(&series, "max_n", 0.2).unwrap(), 2.5);
    }

    #[test]
    fn linear_growth_fails_with_slope() {
        let text = synthetic(100, 50.0, |c, t| if c == "max_n" { 1.0 + 0.3 * t } else { 1.0 });
        let series = parse_series(&text).unwrap();
        let v = summarize_series(&series, &CriteriaSpec::default()).unwrap();
        let max_n = v.iter().find(|v| v.criterion == "bounded:max_n").unwrap();
        assert!(!max_n.pass);
        assert!((max_n.measured - 16.0).abs() < 1e-12);
        // slope from an independent closed form: exact linear data
        let slope: f64 = max_n
            .notes
            .split("tail_slope=")
            .nth(1)
            .unwrap()
            .parse()
            .unwrap();
        assert!((slope - 0.3).abs() < 1e-9, "{}", max_n.notes);
    }

    #[test]
    fn negative_columns_use_sign_safe_threshold() {
        let v = boundedness_verdict("energy_F", &[0.0, 1.0, 2.0, 3.0], &[-1.0, -2.0, -2.0, -2.0], 1.05);
        assert!((v.threshold - (-1.9)).abs() < 1e-15);
        assert!(v.pass);
    }

    #[test]
    fn missing_column_named() {
        let text = synthetic(4, 1.0, |_, _| 1.0).replacen(",linf_grad_c", "", 1);
        match parse_series(&text) {
            Err(SimError::Schema(msg)) => assert!(msg.contains("linf_grad_c"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reordered_header_rejected() {
        let text = synthetic(4, 1.0, |_, _| 1.0).replacen("mass_n,mass_c", "mass_c,mass_n", 1);
        assert!(matches!(parse_series(&text), Err(SimError::Schema(_))));
    }

    #[test]
    fn spread_over_runs() {
        let a = parse_series(&synthetic(10, 10.0, |_, _| 2.0)).unwrap();
        let b = parse_series(&synthetic(10, 10.0, |_, _| 3.0)).unwrap();
        let v = spread_verdicts(&[a.clone(), b], &CriteriaSpec::default()).unwrap();
        assert_eq!(v[0].measured, 1.5);
        assert!(v[0].pass);
        let v = spread_verdicts(&[a.clone(), a], &CriteriaSpec::default()).unwrap();
        assert_eq!(v[0].measured, 1.0);
    }

    #[test]
    fn slope_of_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        assert!((least_squares_slope(&x, &y) - 2.0).abs() < 1e-15);
        assert_eq!(least_squares_slope(&[1.0], &[2.0]), 0.0);
    }

    #[test]
    fn report_dir_is_pure_and_writes_verdicts() {
        let dir = tempfile::tempdir().unwrap();
        for (k, level) in [1.0, 1.2, 1.1].iter().enumerate() {
            let sub = dir.path().join(format!("scale_{k}"));
            fs::create_dir_all(&sub).unwrap();
            fs::write(sub.join("series.csv"), synthetic(20, 10.0, |_, _| *level)).unwrap();
        }
        let v1 = report_dir(dir.path(), &CriteriaSpec::default()).unwrap();
        let v2 = report_dir(dir.path(), &CriteriaSpec::default()).unwrap();
        assert_eq!(v1, v2);
        assert_eq!(v1.len(), 3 * 4 + 2);
        let spread = v1.iter().find(|v| v.criterion == "spread:max_n").unwrap();
        assert!((spread.measured - 1.2).abs() < 1e-15);
        let text = fs::read_to_string(dir.path().join("verdicts.csv")).unwrap();
        assert!(text.starts_with("criterion,pass,measured,threshold,notes\n"));
        assert_eq!(text.lines().count(), v1.len() + 1);
    }

    #[test]
    fn table_lists_verdicts() {
        let t = verdicts_table(&[Verdict {
            criterion: "bounded:max_n".into(),
            pass: false,
            measured: 2.0,
            threshold: 1.0,
            notes: "x".into(),
        }]);
        assert!(t.contains("FAIL") && t.contains("bounded:max_n"));
    }
}
