//! JSON report envelope, exit codes, and the plain-text renderer.

use std::io::Write;

use serde::Serialize;
use serde_json::Value;

pub const BUILD_ID: &str = env!("QINFRA_BUILD_ID");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exit {
    Success = 0,
    Fail = 2,
    Input = 3,
    Cap = 4,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn of_error(e: &qinfra::Error) -> Exit {
        use qinfra::Error::*;
        match e {
            CapExceeded { .. } => Exit::Cap,
            Divergence(_) => Exit::Fail,
            InvalidDiscriminant { .. } | InvalidForm(_) | Parse(_) | DiscriminantMismatch(..) | InvalidArgument(_) | Sizing(_)
            | Precondition(_) => Exit::Input,
        }
    }
}

/// Where a reported quantity came from.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub quantity: String,
    pub source: String,
}

impl Provenance {
    pub fn new(quantity: impl Into<String>, source: impl Into<String>) -> Self {
        Provenance { quantity: quantity.into(), source: source.into() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub build: &'static str,
    pub exit: Exit,
    pub config: Value,
    pub provenance: Vec<Provenance>,
    pub result: Value,
}

/// A finished command: its report and the process exit code it implies.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Report,
}

impl Outcome {
    pub fn new(command: &'static str, config: &impl Serialize, exit: Exit, provenance: Vec<Provenance>, result: impl Serialize) -> Self {
        Outcome {
            report: Report {
                command,
                build: BUILD_ID,
                exit,
                config: serde_json::to_value(config).expect("config serializes"),
                provenance,
                result: serde_json::to_value(result).expect("result serializes"),
            },
        }
    }

    /// Report for an error raised before or during a run.
    pub fn error(command: &'static str, config: &impl Serialize, e: &qinfra::Error) -> Self {
        #[derive(Serialize)]
        struct Err {
            error: String,
        }
        Outcome::new(command, config, Exit::of_error(e), Vec::new(), Err { error: e.to_string() })
    }

    pub fn exit(&self) -> Exit {
        self.report.exit
    }

    pub fn result(&self) -> &Value {
        &self.report.result
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.report).expect("report serializes")
    }
}

/// `path = value` lines, one per leaf, arrays indexed.
pub fn render_table(v: &Value, out: &mut impl Write) -> std::io::Result<()> {
    fn walk(prefix: &str, v: &Value, out: &mut impl Write) -> std::io::Result<()> {
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&p, x, out)?;
                }
                Ok(())
            }
            Value::Array(a) if !a.is_empty() && a.iter().any(|x| x.is_object() || x.is_array()) => {
                for (i, x) in a.iter().enumerate() {
                    walk(&format!("{prefix}[{i}]"), x, out)?;
                }
                Ok(())
            }
            _ => writeln!(out, "{prefix:<48} {v}"),
        }
    }
    walk("", v, out)
}
