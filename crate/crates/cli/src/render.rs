//! Human, CSV and JSON renderings. Machine-readable payloads carry a
//! `schema_version` and nothing run-dependent, so identical inputs give
//! byte-identical output.

use serde::Serialize;

use crate::cli::Format;

pub const SCHEMA_VERSION: u32 = 1;

/// One row of output.
pub trait Record: Serialize {
    /// CSV header without the leading `schema_version` column.
    const HEADER: &'static str;
    fn csv(&self) -> String;
    fn human(&self) -> String;
}

#[derive(Serialize)]
struct Single<'a, R> {
    schema_version: u32,
    command: &'a str,
    #[serde(flatten)]
    record: &'a R,
}

#[derive(Serialize)]
struct Many<'a, R> {
    schema_version: u32,
    command: &'a str,
    rows: &'a [R],
}

pub fn single<R: Record>(command: &str, record: &R, format: Format) -> String {
    match format {
        Format::Human => record.human(),
        Format::Csv => format!(
            "schema_version,{}\n{SCHEMA_VERSION},{}\n",
            R::HEADER,
            record.csv()
        ),
        Format::Json => json(&Single {
            schema_version: SCHEMA_VERSION,
            command,
            record,
        }),
    }
}

/// Renders a list; `human_header` precedes the human rows.
pub fn many<R: Record>(command: &str, rows: &[R], human_header: &str, format: Format) -> String {
    match format {
        Format::Human => {
            let mut out = String::from(human_header);
            for r in rows {
                out.push_str(&r.human());
            }
            out
        }
        Format::Csv => {
            let mut out = format!("schema_version,{}\n", R::HEADER);
            for r in rows {
                out.push_str(&format!("{SCHEMA_VERSION},{}\n", r.csv()));
            }
            out
        }
        Format::Json => json(&Many {
            schema_version: SCHEMA_VERSION,
            command,
            rows,
        }),
    }
}

fn json<S: Serialize>(value: &S) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("records serialize");
    s.push('\n');
    s
}

/// CSV cell for an optional real.
pub fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:?}")).unwrap_or_default()
}

/// CSV cell for free text; quotes when needed.
pub fn text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Point {
        x: f64,
        label: String,
    }

    impl Record for Point {
        const HEADER: &'static str = "x,label";
        fn csv(&self) -> String {
            format!("{},{}", self.x, text(&self.label))
        }
        fn human(&self) -> String {
            format!("x = {}\n", self.x)
        }
    }

    #[test]
    fn csv_has_schema_column_and_quotes() {
        let p = Point {
            x: 0.5,
            label: "a, b".into(),
        };
        assert_eq!(
            single("p", &p, Format::Csv),
            "schema_version,x,label\n1,0.5,\"a, b\"\n"
        );
    }

    #[test]
    fn json_flattens_single_records() {
        let p = Point {
            x: 1.25,
            label: "q".into(),
        };
        let v: serde_json::Value = serde_json::from_str(&single("p", &p, Format::Json)).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["command"], "p");
        assert_eq!(v["x"], 1.25);
    }

    #[test]
    fn empty_list_renders_header_only() {
        let rows: Vec<Point> = vec![];
        assert_eq!(
            many("p", &rows, "", Format::Csv),
            "schema_version,x,label\n"
        );
        let v: serde_json::Value =
            serde_json::from_str(&many("p", &rows, "", Format::Json)).unwrap();
        assert_eq!(v["rows"].as_array().unwrap().len(), 0);
    }
}
