use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use isac_core::evaluation::report::{
    read_acsl_values, read_ber, read_history, read_summary, ACSL_SCHEMA, BER_SCHEMA, HISTORY_SCHEMA, SUMMARY_SCHEMA,
};
use isac_core::evaluation::summarize_exact;

use crate::svg::{BoxItem, Chart, Mark, Series};
use crate::{CliError, PlotArgs, PlotKind};

fn schema_of(path: &Path) -> Result<String, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut first = String::new();
    BufReader::new(file)
        .read_line(&mut first)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    first
        .trim()
        .strip_prefix("# schema: ")
        .map(str::to_string)
        .ok_or_else(|| CliError::Usage(format!("{}:1: not a report file (no '# schema:' line)", path.display())))
}

fn unsupported(path: &Path, schema: &str, kind: PlotKind) -> CliError {
    CliError::Usage(format!("{}: {schema} reports cannot be drawn as {kind:?}", path.display()))
}

fn label(path: &Path, code_id: Option<&str>) -> String {
    code_id
        .map(str::to_string)
        .unwrap_or_else(|| path.file_stem().unwrap_or_default().to_string_lossy().into_owned())
}

pub fn build_chart(args: &PlotArgs) -> Result<Chart, CliError> {
    let mut chart = Chart {
        title: args.title.clone().unwrap_or_default(),
        ..Default::default()
    };
    let mut default_log = false;
    let (mut x_label, mut y_label) = (String::new(), String::new());
    let multi = args.inputs.len() > 1;
    for path in &args.inputs {
        let schema = schema_of(path)?;
        match (args.kind, schema.as_str()) {
            (PlotKind::Box, SUMMARY_SCHEMA) => {
                for r in read_summary(path)?.rows {
                    chart.boxes.push(BoxItem {
                        label: r.code_id.clone(),
                        stats: [r.min, r.q1, r.median, r.q3, r.max],
                    });
                }
                y_label = "ACSL (dB)".into();
            }
            (PlotKind::Box, ACSL_SCHEMA) => {
                let t = read_acsl_values(path)?;
                let values: Vec<f64> = t.rows.iter().map(|r| r.acsl_db).collect();
                let s = summarize_exact(&values)?;
                chart.boxes.push(BoxItem {
                    label: label(path, t.comment("code_id")),
                    stats: [s.min, s.q1, s.median, s.q3, s.max],
                });
                y_label = "ACSL (dB)".into();
            }
            (PlotKind::Scatter, ACSL_SCHEMA) => {
                let t = read_acsl_values(path)?;
                chart.series.push(Series {
                    name: label(path, t.comment("code_id")),
                    points: t.rows.iter().map(|r| (r.message_index as f64, r.acsl_db)).collect(),
                    mark: Mark::Points,
                });
                x_label = "message index".into();
                y_label = "ACSL (dB)".into();
            }
            (PlotKind::Line, BER_SCHEMA) => {
                let mut by_code: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
                for r in read_ber(path)?.rows {
                    by_code.entry(r.code_id).or_default().push((r.snr_db, r.ber));
                }
                for (name, points) in by_code {
                    chart.series.push(Series {
                        name,
                        points,
                        mark: Mark::Line,
                    });
                }
                default_log = true;
                x_label = "SNR (dB)".into();
                y_label = "BER".into();
            }
            (PlotKind::Line, HISTORY_SCHEMA) => {
                let t = read_history(path)?;
                let run = label(path, t.comment("run"));
                let cols: [(&str, fn(&isac_core::training::EpochRecord) -> f64); 3] =
                    [("total", |r| r.total), ("sensing", |r| r.sensing), ("comms", |r| r.comms)];
                for (name, f) in cols {
                    chart.series.push(Series {
                        name: if multi { format!("{run} {name}") } else { name.into() },
                        points: t.rows.iter().map(|r| (r.epoch as f64, f(r))).collect(),
                        mark: Mark::Line,
                    });
                }
                default_log = true;
                x_label = "epoch".into();
                y_label = "loss".into();
            }
            (kind, other) => return Err(unsupported(path, other, kind)),
        }
    }
    chart.log_y = args.log_y.unwrap_or(default_log);
    chart.x_label = args.x_label.clone().unwrap_or(x_label);
    chart.y_label = args.y_label.clone().unwrap_or(y_label);
    Ok(chart)
}

pub fn run(args: &PlotArgs) -> Result<(), CliError> {
    let chart = build_chart(args)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    }
    fs::write(&args.out, chart.render()).map_err(|e| CliError::Runtime(format!("{}: {e}", args.out.display())))?;
    println!("wrote {}", args.out.display());
    Ok(())
}
