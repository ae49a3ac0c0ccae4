//! Runs a separate MILP solver on an exported LP file and reads its answer.

use std::collections::HashMap;
use std::fs;
use std::process::Command;
use web_time::Instant;

use crate::lp::export_lp;
use crate::milp::Model;

use super::{verify, Solution, SolveError, SolveOptions, SolveStats, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionFormat {
    /// `Optimal - objective value X` followed by `index name value dj` lines.
    Cbc,
    /// One `name value` pair per line; `#` starts a comment. An optional
    /// first line `status <word>` reports infeasibility.
    Plain,
}

/// `command` is split on whitespace; `{in}` and `{out}` are replaced by the
/// LP file and the solution file paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalSolver {
    pub command: String,
    pub format: SolutionFormat,
}

impl ExternalSolver {
    pub fn cbc(binary: &str) -> Self {
        ExternalSolver { command: format!("{binary} {{in}} solve solu {{out}}"), format: SolutionFormat::Cbc }
    }
}

enum Parsed {
    Values(Vec<(String, f64)>),
    Infeasible,
    Unbounded,
}

fn parse_cbc(text: &str) -> Result<Parsed, SolveError> {
    let mut lines = text.lines();
    let head = lines.next().ok_or_else(|| SolveError::Parse("empty solution file".into()))?;
    let lower = head.to_ascii_lowercase();
    if lower.starts_with("infeasible") || lower.contains("integer infeasible") {
        return Ok(Parsed::Infeasible);
    }
    if lower.starts_with("unbounded") {
        return Ok(Parsed::Unbounded);
    }
    if !lower.starts_with("optimal") {
        return Err(SolveError::Parse(format!("solver did not report optimality: {head}")));
    }
    let mut out = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        // CBC marks some lines with a leading `**`.
        let fields: Vec<&str> = if fields[0] == "**" { fields[1..].to_vec() } else { fields };
        if fields.len() < 3 {
            return Err(SolveError::Parse(format!("malformed line: {line}")));
        }
        let value: f64 = fields[2].parse().map_err(|_| SolveError::Parse(format!("bad value in: {line}")))?;
        out.push((fields[1].to_string(), value));
    }
    Ok(Parsed::Values(out))
}

fn parse_plain(text: &str) -> Result<Parsed, SolveError> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(name), Some(val), None) = (it.next(), it.next(), it.next()) else {
            return Err(SolveError::Parse(format!("expected `name value`: {line}")));
        };
        if name == "status" {
            match val {
                "infeasible" => return Ok(Parsed::Infeasible),
                "unbounded" => return Ok(Parsed::Unbounded),
                "optimal" => continue,
                other => return Err(SolveError::Parse(format!("unknown status {other}"))),
            }
        }
        let value: f64 = val.parse().map_err(|_| SolveError::Parse(format!("bad value in: {line}")))?;
        out.push((name.to_string(), value));
    }
    Ok(Parsed::Values(out))
}

/// Variables absent from the solver output are taken as zero; the full
/// assignment is then checked against every row.
pub fn solve_external(model: &Model, ext: &ExternalSolver, options: &SolveOptions) -> Result<Solution, SolveError> {
    let start = Instant::now();
    let lp = export_lp(model);
    let dir = std::env::temp_dir().join(format!("mipopt-{}-{}", std::process::id(), unique()));
    fs::create_dir_all(&dir)?;
    let in_path = dir.join("model.lp");
    let out_path = dir.join("model.sol");
    fs::write(&in_path, &lp.text)?;
    let result = run(ext, &in_path.to_string_lossy(), &out_path.to_string_lossy());
    let text = result.and_then(|()| fs::read_to_string(&out_path).map_err(SolveError::from));
    let _ = fs::remove_dir_all(&dir);
    let text = text?;

    let parsed = match ext.format {
        SolutionFormat::Cbc => parse_cbc(&text)?,
        SolutionFormat::Plain => parse_plain(&text)?,
    };
    let stats = SolveStats { nodes: 0, lp_pivots: 0, seconds: start.elapsed().as_secs_f64() };
    let pairs = match parsed {
        Parsed::Infeasible => return Ok(Solution::without_values(Status::Infeasible, stats)),
        Parsed::Unbounded => return Ok(Solution::without_values(Status::Unbounded, stats)),
        Parsed::Values(p) => p,
    };
    let by_lp_name: HashMap<&str, &str> =
        lp.names.lp_to_model.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
    let mut values = vec![0.0; model.num_vars()];
    for (name, value) in pairs {
        let model_name = by_lp_name
            .get(name.as_str())
            .ok_or_else(|| SolveError::Parse(format!("unknown variable `{name}` in solver output")))?;
        let id = model
            .var_by_name(model_name)
            .ok_or_else(|| SolveError::Parse(format!("unknown variable `{name}` in solver output")))?;
        values[id.index()] = value;
    }
    for (decl, v) in model.vars().iter().zip(values.iter_mut()) {
        if decl.domain.is_integral() && (*v - v.round()).abs() <= options.int_tol {
            *v = v.round();
        }
    }
    verify(model, &values, options.int_tol)?;
    let objective = model.objective().eval(&values);
    Ok(Solution { status: Status::Optimal, values, objective, stats })
}

fn unique() -> u64 {
    use std::sync::atomic::{AtomicU64, Ordering};
    static NEXT: AtomicU64 = AtomicU64::new(0);
    NEXT.fetch_add(1, Ordering::Relaxed)
}

fn run(ext: &ExternalSolver, input: &str, output: &str) -> Result<(), SolveError> {
    let args: Vec<String> =
        ext.command.split_whitespace().map(|a| a.replace("{in}", input).replace("{out}", output)).collect();
    let (program, rest) =
        args.split_first().ok_or_else(|| SolveError::Options("empty solver command".into()))?;
    let out = Command::new(program)
        .args(rest)
        .output()
        .map_err(|source| SolveError::Spawn { command: program.clone(), source })?;
    if !out.status.success() {
        return Err(SolveError::Process {
            command: program.clone(),
            status: out.status.to_string(),
            stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{LinExpr, Sense};

    fn tiny() -> Model {
        let mut m = Model::new();
        let x = m.add_binary("x").unwrap();
        m.add_constraint(LinExpr::from(x), Sense::Ge, 0.5, "lb").unwrap();
        m.set_objective(LinExpr::from(x)).unwrap();
        m
    }

    #[test]
    fn missing_binary_is_a_spawn_error() {
        let ext = ExternalSolver { command: "/nonexistent/solver {in} {out}".into(), format: SolutionFormat::Plain };
        let err = solve_external(&tiny(), &ext, &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, SolveError::Spawn { .. }), "{err}");
    }

    #[test]
    fn parses_cbc_output() {
        let text = "Optimal - objective value 2.5\n      0 x     1     0\n      1 y   0.75   0\n";
        let Parsed::Values(v) = parse_cbc(text).unwrap() else { panic!() };
        assert_eq!(v, vec![("x".to_string(), 1.0), ("y".to_string(), 0.75)]);
        assert!(matches!(parse_cbc("Infeasible - objective value 0\n").unwrap(), Parsed::Infeasible));
    }

    #[test]
    fn unknown_name_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let script = dir.path().join("fake.sh");
        fs::write(&script, "#!/bin/sh\necho 'bogus 1' > \"$2\"\n").unwrap();
        let ext = ExternalSolver {
            command: format!("sh {} {{in}} {{out}}", script.display()),
            format: SolutionFormat::Plain,
        };
        let err = solve_external(&tiny(), &ext, &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, SolveError::Parse(_)), "{err}");
    }

    #[test]
    fn inconsistent_answer_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let script = dir.path().join("fake.sh");
        fs::write(&script, "#!/bin/sh\necho 'x 0' > \"$2\"\n").unwrap();
        let ext = ExternalSolver {
            command: format!("sh {} {{in}} {{out}}", script.display()),
            format: SolutionFormat::Plain,
        };
        let err = solve_external(&tiny(), &ext, &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, SolveError::SolverInconsistency { .. }), "{err}");
    }
}
