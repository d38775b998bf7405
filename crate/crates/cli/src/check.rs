//! The `check` subcommand: run the requested methods on one grid and write
//! aligned result files.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mcsbi::engine::check_path_formula;
use mcsbi::output::CdfTable;
use mcsbi::ssa::{estimate_cdf, exact_cme_cdf};
use serde_json::{json, Value};

use crate::config::{Format, Method, RunConfig};
use crate::failure::{io_failure, Failure, Qualify};
use crate::svg;

/// Result of one method on the shared grid.
pub struct MethodRun {
    pub method: Method,
    pub table: CdfTable,
}

pub fn run_methods(config: &RunConfig) -> Result<Vec<MethodRun>, Failure> {
    let network = config.network()?;
    let formula = config.formula(&network)?;
    let grid = config.grid(&formula)?;
    let species = network.species_names();
    let mut runs = Vec::new();
    for method in config.method.expand() {
        let start = Instant::now();
        let table = match method {
            Method::Sbi => check_path_formula(&network, &formula, &grid, &config.engine())
                .qualify("engine")?
                .to_table(),
            Method::Ssa => estimate_cdf(&network, &formula, &grid, config.samples, config.level, config.seed)
                .qualify("ssa")?
                .to_table(&species),
            Method::Exact => {
                let exact = exact_cme_cdf(&network, &formula, &grid, config.state_bound).qualify("exact")?;
                for w in &exact.warnings {
                    eprintln!("warning: exact: {w}");
                }
                eprintln!(
                    "exact: {} states, {} transitions",
                    exact.n_states, exact.n_transitions
                );
                exact.to_table(&species)
            }
            Method::All => unreachable!("expanded above"),
        };
        let seconds = start.elapsed().as_secs_f64();
        eprintln!("{}: final cdf {:.6} in {seconds:.3} s", method.name(), table.cdf.last().copied().unwrap_or(0.0));
        runs.push(MethodRun { method, table });
    }
    Ok(runs)
}

/// Per-time comparison of every pair of methods present.
pub struct Comparison {
    pub columns: Vec<(String, Vec<f64>)>,
}

impl Comparison {
    pub fn build(runs: &[MethodRun]) -> Self {
        let times = runs[0].table.times.clone();
        let find = |m: Method| runs.iter().find(|r| r.method == m).map(|r| &r.table);
        let mut columns = vec![("t".to_string(), times)];
        for r in runs {
            columns.push((format!("{}_cdf", r.method.name()), r.table.cdf.clone()));
        }
        let pairs = [(Method::Sbi, Method::Exact), (Method::Sbi, Method::Ssa), (Method::Ssa, Method::Exact)];
        for (a, b) in pairs {
            if let (Some(ta), Some(tb)) = (find(a), find(b)) {
                let diff = ta.cdf.iter().zip(&tb.cdf).map(|(x, y)| (x - y).abs()).collect();
                columns.push((format!("abs_{}_{}", a.name(), b.name()), diff));
            }
        }
        if let Some(ssa) = find(Method::Ssa) {
            columns.push(("ssa_ci_half_width".into(), ssa.ci_half_width.clone()));
        }
        Self { columns }
    }

    pub fn max_of(&self, name: &str) -> Option<f64> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.iter().copied().fold(0.0, f64::max))
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join(",");
        out.push('\n');
        let rows = self.columns[0].1.len();
        for i in 0..rows {
            let row: Vec<String> = self.columns.iter().map(|(_, v)| format!("{:.10e}", v[i])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let mut obj = serde_json::Map::new();
        for (name, values) in &self.columns {
            obj.insert(name.clone(), json!(values));
        }
        Value::Object(obj)
    }
}

fn render(table: &CdfTable, format: Format) -> String {
    match format {
        Format::Csv => table.to_csv(),
        Format::Json => format!("{:#}\n", table.to_json()),
    }
}

/// `out/sir` -> `out/sir.<tag>.<ext>`; a single-method run whose output
/// already carries the right extension is written there verbatim.
pub fn artifact_path(output: &Path, tag: &str, ext: &str, single: bool) -> PathBuf {
    if single && output.extension().is_some_and(|e| e == ext) {
        return output.to_path_buf();
    }
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".{tag}.{ext}"));
    output.with_file_name(name)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_failure(path, e))
}

pub fn run(config: &RunConfig) -> Result<(), Failure> {
    let runs = run_methods(config)?;
    let Some(output) = &config.output else {
        let text = render(&runs[0].table, config.format);
        std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::usage(format!("cannot write to stdout: {e}")))?;
        return Ok(());
    };
    let single = runs.len() == 1;
    let ext = config.format.extension();
    for r in &runs {
        let path = artifact_path(output, r.method.name(), ext, single);
        write_file(&path, &render(&r.table, config.format))?;
        eprintln!("wrote {}", path.display());
    }
    if runs.len() > 1 {
        let cmp = Comparison::build(&runs);
        let text = match config.format {
            Format::Csv => cmp.to_csv(),
            Format::Json => format!("{:#}\n", cmp.to_json()),
        };
        let path = artifact_path(output, "compare", ext, false);
        write_file(&path, &text)?;
        eprintln!("wrote {}", path.display());
        for (name, _) in cmp.columns.iter().filter(|(n, _)| n.starts_with("abs_")) {
            eprintln!("max {name} = {:.6}", cmp.max_of(name).unwrap_or(f64::NAN));
        }
    }
    if config.plot {
        let curves: Vec<(&str, &[f64], &[f64])> = runs
            .iter()
            .map(|r| (r.method.name(), r.table.times.as_slice(), r.table.cdf.as_slice()))
            .collect();
        let path = artifact_path(output, "plot", "svg", false);
        write_file(&path, &svg::line_plot(&config.property, &curves))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn artifact_naming() {
        let p = Path::new("out/sir");
        assert_eq!(artifact_path(p, "sbi", "csv", false), Path::new("out/sir.sbi.csv"));
        assert_eq!(artifact_path(Path::new("r.csv"), "sbi", "csv", true), Path::new("r.csv"));
        assert_eq!(artifact_path(Path::new("r.csv"), "sbi", "csv", false), Path::new("r.csv.sbi.csv"));
    }
}
