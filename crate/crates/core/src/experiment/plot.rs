use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::with_suffix;
use crate::error::{Error, Result};
use crate::pricing::Method;

/// One curve: `(n_points, rel_error)` pairs of a method in file order.
struct Series {
    method: Method,
    points: Vec<(f64, f64)>,
}

fn parse_series(csv: &str) -> Result<Vec<Series>> {
    let mut series: Vec<Series> = Vec::new();
    for (i, line) in csv.lines().enumerate().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 5 {
            return Err(Error::ConfigInvalid(format!("CSV line {} has {} columns", i + 1, cols.len())));
        }
        let method: Method = cols[0].parse()?;
        let pos = match series.iter().position(|s| s.method == method) {
            Some(p) => p,
            None => {
                series.push(Series {
                    method,
                    points: Vec::new(),
                });
                series.len() - 1
            }
        };
        let (Ok(n), Ok(e)) = (cols[1].parse::<f64>(), cols[3].parse::<f64>()) else {
            continue;
        };
        // log axes: zero errors and empty budgets cannot be drawn
        if n > 0.0 && e > 0.0 {
            series[pos].points.push((n, e));
        }
    }
    Ok(series)
}

/// Gnuplot script drawing relative error against points on log-log axes,
/// one series per method with its fixed colour and marker. The data are
/// inlined so the script is self-contained.
pub fn plot_script(csv: &str, title: &str) -> Result<String> {
    let series = parse_series(csv)?;
    let mut s = String::new();
    let _ = writeln!(s, "# relative error against number of points");
    let _ = writeln!(s, "set title \"{}\"", title.replace('"', "'"));
    let _ = writeln!(s, "set logscale xy");
    let _ = writeln!(s, "set format y \"10^{{%L}}\"");
    let _ = writeln!(s, "set xlabel \"points\"");
    let _ = writeln!(s, "set ylabel \"relative error\"");
    let _ = writeln!(s, "set key outside right");
    let drawn: Vec<&Series> = series.iter().filter(|x| !x.points.is_empty()).collect();
    if drawn.is_empty() {
        let _ = writeln!(s, "# warning: no rows with a positive error; nothing to plot");
        return Ok(s);
    }
    let clauses: Vec<String> = drawn
        .iter()
        .map(|x| {
            format!(
                "'-' using 1:2 with linespoints lc rgb \"{}\" pt {} title \"{}\"",
                x.method.color(),
                x.method.marker(),
                x.method
            )
        })
        .collect();
    let _ = writeln!(s, "plot {}", clauses.join(", \\\n     "));
    for x in drawn {
        for (n, e) in &x.points {
            let _ = writeln!(s, "{n} {e:e}");
        }
        let _ = writeln!(s, "e");
    }
    Ok(s)
}

/// Writes `<csv without extension>.gp` next to the CSV and returns its path.
pub fn emit_plot(csv_path: impl AsRef<Path>) -> Result<PathBuf> {
    let path = csv_path.as_ref();
    let csv = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.display().to_string()),
        _ => Error::Io(e),
    })?;
    let title = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let script = plot_script(&csv, &title)?;
    let out = with_suffix(&path.with_extension(""), ".gp");
    std::fs::write(&out, script)?;
    Ok(out)
}
