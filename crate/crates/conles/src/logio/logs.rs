//! Event-log ingestion: XES (concept:name only), CSV (`case_id,activity`
//! columns), and a plain lines format (one trace per line,
//! whitespace-separated labels).

use std::collections::{BTreeMap, HashMap};

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::ParseError;
use crate::petri::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Xes,
    Csv,
    Lines,
}

impl LogFormat {
    /// Picks a format from a file extension, defaulting to lines.
    pub fn from_extension(ext: Option<&str>) -> LogFormat {
        match ext.map(str::to_ascii_lowercase).as_deref() {
            Some("xes") => LogFormat::Xes,
            Some("csv") => LogFormat::Csv,
            _ => LogFormat::Lines,
        }
    }
}

impl std::str::FromStr for LogFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "xes" => Ok(LogFormat::Xes),
            "csv" => Ok(LogFormat::Csv),
            "lines" => Ok(LogFormat::Lines),
            other => Err(format!("unknown log format {other:?}")),
        }
    }
}

/// One case of an event log: id, trace, and any case-level string attributes
/// (kept opaque for round-tripping).
#[derive(Debug, Clone)]
pub struct LogCase {
    pub id: String,
    pub trace: Trace,
    pub attributes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default)]
pub struct EventLog {
    pub cases: Vec<LogCase>,
}

impl EventLog {
    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }
}

/// Parses an event log. An empty log is not an error; callers may warn.
pub fn read_log(bytes: &[u8], format: LogFormat) -> Result<EventLog, ParseError> {
    let log = match format {
        LogFormat::Lines => read_lines(bytes)?,
        LogFormat::Csv => read_csv(bytes)?,
        LogFormat::Xes => read_xes(bytes)?,
    };
    let mut seen = HashMap::new();
    for case in &log.cases {
        if let Some(_previous) = seen.insert(case.id.clone(), ()) {
            return Err(ParseError::Malformed(format!(
                "duplicate case id {:?}",
                case.id
            )));
        }
    }
    Ok(log)
}

fn read_lines(bytes: &[u8]) -> Result<EventLog, ParseError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| ParseError::Malformed(format!("log is not UTF-8: {e}")))?;
    let mut cases = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let trace = Trace::from_words(line)?;
        cases.push(LogCase {
            id: format!("t{}", cases.len() + 1),
            trace,
            attributes: BTreeMap::new(),
        });
    }
    Ok(EventLog { cases })
}

fn read_csv(bytes: &[u8]) -> Result<EventLog, ParseError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(bytes);
    // Events grouped by case id, preserving file order of both cases and
    // events.
    let mut order: Vec<String> = Vec::new();
    let mut events: HashMap<String, Vec<String>> = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 2 {
            return Err(ParseError::Malformed(format!(
                "csv row {} has {} columns, expected case_id,activity",
                i + 1,
                record.len()
            )));
        }
        let case = record[0].trim().to_string();
        let activity = record[1].trim().to_string();
        if i == 0 && case.eq_ignore_ascii_case("case_id") && activity.eq_ignore_ascii_case("activity")
        {
            continue; // header row
        }
        if !events.contains_key(&case) {
            order.push(case.clone());
        }
        events.entry(case).or_default().push(activity);
    }
    let mut cases = Vec::new();
    for id in order {
        let trace = Trace::new(events.remove(&id).unwrap_or_default())?;
        cases.push(LogCase {
            id,
            trace,
            attributes: BTreeMap::new(),
        });
    }
    Ok(EventLog { cases })
}

/// XES subset: `<trace>` elements with `<event>` children; only the
/// `concept:name` string attribute of each is interpreted. Other trace-level
/// string attributes are preserved.
fn read_xes(bytes: &[u8]) -> Result<EventLog, ParseError> {
    let mut reader = Reader::from_reader(bytes);
    let mut p = XesParser::default();
    loop {
        let pos = reader.buffer_position();
        let event = reader
            .read_event()
            .map_err(|source| ParseError::Xml { pos, source })?;
        match event {
            Event::Start(e) => p.open(&e, pos)?,
            Event::Empty(e) => {
                p.open(&e, pos)?;
                p.close(e.local_name().as_ref(), pos)?;
            }
            Event::End(e) => p.close(e.local_name().as_ref(), pos)?,
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(EventLog { cases: p.cases })
}

#[derive(Default)]
struct XesParser {
    cases: Vec<LogCase>,
    in_trace: bool,
    in_event: bool,
    trace_name: Option<String>,
    trace_attrs: BTreeMap<String, String>,
    trace_events: Vec<String>,
    event_name: Option<String>,
}

impl XesParser {
    fn open(&mut self, e: &BytesStart<'_>, pos: u64) -> Result<(), ParseError> {
        match e.local_name().as_ref() {
            b"trace" => {
                self.in_trace = true;
                self.in_event = false;
                self.trace_name = None;
                self.trace_attrs.clear();
                self.trace_events.clear();
            }
            b"event" if self.in_trace => {
                self.in_event = true;
                self.event_name = None;
            }
            b"string" => {
                let (key, value) = attr_kv(e, pos)?;
                if let (Some(key), Some(value)) = (key, value) {
                    if self.in_event {
                        if key == "concept:name" {
                            self.event_name = Some(value);
                        }
                    } else if self.in_trace {
                        if key == "concept:name" {
                            self.trace_name = Some(value.clone());
                        }
                        self.trace_attrs.insert(key, value);
                    }
                }
            }
            b"int" | b"date" | b"float" | b"boolean" | b"id" => {
                let (key, _) = attr_kv(e, pos)?;
                if key.as_deref() == Some("concept:name") {
                    return Err(ParseError::Malformed(format!(
                        "concept:name must be a string attribute (byte {pos})"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn close(&mut self, name: &[u8], pos: u64) -> Result<(), ParseError> {
        match name {
            b"event" if self.in_event => {
                let name = self.event_name.take().ok_or_else(|| {
                    ParseError::Malformed(format!("event without concept:name (byte {pos})"))
                })?;
                self.trace_events.push(name);
                self.in_event = false;
            }
            b"trace" if self.in_trace => {
                let id = self
                    .trace_name
                    .take()
                    .unwrap_or_else(|| format!("t{}", self.cases.len() + 1));
                let trace = Trace::new(std::mem::take(&mut self.trace_events))?;
                self.cases.push(LogCase {
                    id,
                    trace,
                    attributes: std::mem::take(&mut self.trace_attrs),
                });
                self.in_trace = false;
                self.in_event = false;
            }
            _ => {}
        }
        Ok(())
    }
}

fn attr_kv(
    e: &BytesStart<'_>,
    pos: u64,
) -> Result<(Option<String>, Option<String>), ParseError> {
    let mut key = None;
    let mut value = None;
    for a in e.attributes() {
        let a =
            a.map_err(|e| ParseError::Malformed(format!("bad attribute at byte {pos}: {e}")))?;
        let v = a
            .unescape_value()
            .map_err(|source| ParseError::Xml { pos, source })?
            .into_owned();
        match a.key.local_name().as_ref() {
            b"key" => key = Some(v),
            b"value" => value = Some(v),
            _ => {}
        }
    }
    Ok((key, value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_parse_one_trace_per_line() {
        let log = read_log(b"A B D C C E C C E\n", LogFormat::Lines).unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log.cases[0].trace.len(), 9);
        assert_eq!(log.cases[0].id, "t1");
    }

    #[test]
    fn csv_groups_interleaved_cases_in_file_order() {
        let csv = b"case_id,activity\nc1,A\nc2,X\nc1,B\nc2,Y\n";
        let log = read_log(csv, LogFormat::Csv).unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(log.cases[0].id, "c1");
        assert_eq!(log.cases[0].trace.events(), ["A", "B"]);
        assert_eq!(log.cases[1].id, "c2");
        assert_eq!(log.cases[1].trace.events(), ["X", "Y"]);
    }

    #[test]
    fn xes_reads_concept_names() {
        let xes = br#"<?xml version="1.0"?>
<log>
  <trace>
    <string key="concept:name" value="case7"/>
    <string key="org:group" value="ops"/>
    <event><string key="concept:name" value="A"/><int key="other" value="3"/></event>
    <event><string key="concept:name" value="B"/></event>
  </trace>
</log>"#;
        let log = read_log(xes, LogFormat::Xes).unwrap();
        assert_eq!(log.len(), 1);
        let case = &log.cases[0];
        assert_eq!(case.id, "case7");
        assert_eq!(case.trace.events(), ["A", "B"]);
        assert_eq!(case.attributes["org:group"], "ops");
    }

    #[test]
    fn xes_non_string_concept_name_is_rejected() {
        let xes = br#"<log><trace>
  <event><int key="concept:name" value="7"/></event>
</trace></log>"#;
        assert!(read_log(xes, LogFormat::Xes).is_err());
    }

    #[test]
    fn empty_log_is_not_an_error() {
        let log = read_log(b"", LogFormat::Lines).unwrap();
        assert!(log.is_empty());
    }

    #[test]
    fn duplicate_case_ids_are_rejected() {
        let xes = br#"<log>
  <trace><string key="concept:name" value="dup"/><event><string key="concept:name" value="A"/></event></trace>
  <trace><string key="concept:name" value="dup"/><event><string key="concept:name" value="B"/></event></trace>
</log>"#;
        assert!(read_log(xes, LogFormat::Xes).is_err());
    }
}
