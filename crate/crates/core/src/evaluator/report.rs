use std::fmt::Write;

use super::{EvalReport, Scheme};

pub const CSV_HEADER: &str = "model,task,mode,scheme,precision,recall,precision_binary,recall_binary,parse_ratio";

fn task_rank(task: &str) -> usize {
    match task {
        "e+cl" => 0,
        "cl" => 1,
        _ => 2,
    }
}

fn mode_rank(mode: &str) -> usize {
    match mode {
        "static" => 0,
        "dynamic" => 1,
        "zero" => 2,
        _ => 3,
    }
}

fn task_title(task: &str) -> String {
    match task {
        "e+cl" => "E+CL".into(),
        "cl" => "CL".into(),
        other => other.to_uppercase(),
    }
}

fn mode_title(mode: &str) -> String {
    let mut c = mode.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Reports in table order: task, then model by first appearance, then mode.
fn ordered(reports: &[EvalReport]) -> Vec<&EvalReport> {
    let mut models: Vec<&str> = Vec::new();
    for r in reports {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }
    let mut v: Vec<&EvalReport> = reports.iter().collect();
    v.sort_by_key(|r| {
        (
            task_rank(&r.task),
            r.task.clone(),
            models.iter().position(|m| *m == r.model),
            mode_rank(&r.mode),
            r.mode.clone(),
        )
    });
    v
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in ordered(reports) {
        for row in &r.schemes {
            writeln!(
                out,
                "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                csv_field(&r.model),
                csv_field(&r.task),
                csv_field(&r.mode),
                row.scheme,
                row.multiclass.precision.value,
                row.multiclass.recall.value,
                row.binary.precision.value,
                row.binary.recall.value,
                r.parse_ratio
            )
            .unwrap();
        }
    }
    out
}

fn pad(cells: &[String], widths: &[usize]) -> String {
    let mut line = String::new();
    for (i, (c, w)) in cells.iter().zip(widths).enumerate() {
        if i > 0 {
            line.push_str("  ");
        }
        let _ = write!(line, "{c:<w$}");
    }
    line.trim_end().to_string()
}

/// Aligned tables, one per task: rows are model × scheme, columns are
/// P, R, P(b), R(b) for each example mode. Static and Dynamic columns are
/// always present and left blank when there is no run for them.
pub fn render_text(reports: &[EvalReport]) -> String {
    let reports = ordered(reports);
    let mut tasks: Vec<&str> = Vec::new();
    for r in &reports {
        if !tasks.contains(&r.task.as_str()) {
            tasks.push(&r.task);
        }
    }
    let mut out = String::new();
    for task in tasks {
        let group: Vec<&&EvalReport> = reports.iter().filter(|r| r.task == task).collect();
        let mut modes = vec!["static".to_string(), "dynamic".to_string()];
        for r in &group {
            if !modes.contains(&r.mode) {
                modes.push(r.mode.clone());
            }
        }
        let mut models: Vec<&str> = Vec::new();
        for r in &group {
            if !models.contains(&r.model.as_str()) {
                models.push(&r.model);
            }
        }

        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut top = vec![String::new(), String::new()];
        let mut sub = vec!["Model".to_string(), "Scheme".to_string()];
        for m in &modes {
            top.push(mode_title(m));
            top.extend(std::iter::repeat_n(String::new(), 3));
            sub.extend(["P", "R", "P(b)", "R(b)"].map(String::from));
        }
        for model in &models {
            for (si, scheme) in Scheme::ALL.into_iter().enumerate() {
                let mut row = vec![
                    if si == 0 { model.to_string() } else { String::new() },
                    scheme.to_string(),
                ];
                for m in &modes {
                    match group
                        .iter()
                        .find(|r| r.model == *model && r.mode == *m)
                        .and_then(|r| r.row(scheme))
                    {
                        Some(s) => row.extend(
                            [
                                s.multiclass.precision.value,
                                s.multiclass.recall.value,
                                s.binary.precision.value,
                                s.binary.recall.value,
                            ]
                            .map(|v| format!("{v:.3}")),
                        ),
                        None => row.extend(std::iter::repeat_n(String::new(), 4)),
                    }
                }
                rows.push(row);
            }
        }
        let body: Vec<&Vec<String>> = [&sub].into_iter().chain(rows.iter()).collect();
        let widths: Vec<usize> = (0..sub.len())
            .map(|i| body.iter().map(|r| r[i].chars().count()).max().unwrap_or(0))
            .collect();
        // Group titles start at their first column and may overhang it.
        let mut title_line = String::new();
        let mut col = 0;
        for (i, w) in widths.iter().enumerate() {
            if !top[i].is_empty() {
                while title_line.chars().count() < col {
                    title_line.push(' ');
                }
                title_line.push_str(&top[i]);
            }
            col += w + 2;
        }
        let _ = writeln!(out, "{}", task_title(task));
        let _ = writeln!(out, "{title_line}");
        for r in body {
            let _ = writeln!(out, "{}", pad(r, &widths));
        }
        out.push('\n');
    }
    out
}

/// Parsed-output percentages per task, model and example mode.
pub fn render_parse_ratio_table(reports: &[EvalReport]) -> String {
    let header = ["Task Setting", "Model", "Static or Dynamic", "Parsed Ratio (%)"].map(String::from);
    let rows: Vec<[String; 4]> = ordered(reports)
        .into_iter()
        .map(|r| {
            [
                task_title(&r.task),
                r.model.clone(),
                mode_title(&r.mode),
                format!("{:.1}", r.parse_ratio * 100.0),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..4)
        .map(|i| {
            rows.iter()
                .map(|r| r[i].chars().count())
                .chain([header[i].chars().count()])
                .max()
                .unwrap()
        })
        .collect();
    let mut out = String::new();
    for r in [header].iter().chain(rows.iter()) {
        let cells: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", cells.join(" | ").trim_end());
    }
    out
}
