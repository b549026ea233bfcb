//! PNML reader/writer for the subset this engine understands:
//! `net`/`page`/`place`/`transition`/`arc`, `initialMarking` on places, a
//! `finalmarkings` block (or a sidecar `.fm` file with `place=count` lines),
//! and the usual invisible-transition conventions.
//!
//! A transition is silent when a `toolspecific` child carries
//! `activity="$invisible$"` or `invisible="true"`, or when it has no
//! (non-empty) name. Otherwise its label is the name text. Arc inscriptions
//! are rejected; multiplicity is expressed by duplicate arcs.

use std::collections::BTreeMap;
use std::path::Path;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::ParseError;
use crate::petri::{Label, LabeledPetriNet, NetBuilder};

#[derive(Debug, Default)]
struct PlaceDecl {
    id: String,
    initial: u32,
}

#[derive(Debug, Default)]
struct TransitionDecl {
    id: String,
    name: Option<String>,
    invisible: bool,
}

#[derive(Debug, Default)]
struct Parsed {
    places: Vec<PlaceDecl>,
    transitions: Vec<TransitionDecl>,
    arcs: Vec<(String, String)>,
    final_markings: Vec<Vec<(String, u32)>>,
}

/// Parses a PNML document. The final marking must be present in the document;
/// use [`read_pnml_file`] to fall back to a sidecar `.fm` file.
pub fn read_pnml(bytes: &[u8]) -> Result<LabeledPetriNet, ParseError> {
    let parsed = parse_document(bytes)?;
    let final_marking = single_final_marking(&parsed)?.ok_or_else(|| {
        ParseError::Malformed(
            "no final marking in PNML (add <finalmarkings> or a sidecar .fm file)".into(),
        )
    })?;
    build_net(parsed, final_marking)
}

/// Reads a PNML file; when the document lacks a `finalmarkings` block, a
/// sidecar file with the same stem and extension `.fm` (lines of
/// `place=count`) supplies the final marking.
pub fn read_pnml_file(path: impl AsRef<Path>) -> Result<LabeledPetriNet, ParseError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    let parsed = parse_document(&bytes)?;
    let final_marking = match single_final_marking(&parsed)? {
        Some(fm) => fm,
        None => read_sidecar(&path.with_extension("fm"))?,
    };
    build_net(parsed, final_marking)
}

fn single_final_marking(parsed: &Parsed) -> Result<Option<Vec<(String, u32)>>, ParseError> {
    match parsed.final_markings.len() {
        0 => Ok(None),
        1 => Ok(Some(parsed.final_markings[0].clone())),
        n => Err(ParseError::Malformed(format!(
            "{n} final markings in PNML, expected exactly one"
        ))),
    }
}

fn read_sidecar(path: &Path) -> Result<Vec<(String, u32)>, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        ParseError::Malformed(format!(
            "no <finalmarkings> in PNML and no sidecar {}: {e}",
            path.display()
        ))
    })?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (place, count) = line.split_once('=').ok_or_else(|| {
            ParseError::Malformed(format!(
                "{}:{}: expected place=count",
                path.display(),
                lineno + 1
            ))
        })?;
        let count: u32 = count.trim().parse().map_err(|_| {
            ParseError::Malformed(format!(
                "{}:{}: bad token count {count:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        out.push((place.trim().to_string(), count));
    }
    Ok(out)
}

fn build_net(
    parsed: Parsed,
    final_marking: Vec<(String, u32)>,
) -> Result<LabeledPetriNet, ParseError> {
    let mut b = NetBuilder::new();
    let mut initial = Vec::new();
    for p in parsed.places {
        if p.initial > 0 {
            initial.push((p.id.clone(), p.initial));
        }
        b = b.place(p.id);
    }
    for t in parsed.transitions {
        let label = match (&t.name, t.invisible) {
            (_, true) => Label::Silent,
            (None, false) => Label::Silent,
            (Some(name), false) if name.is_empty() => Label::Silent,
            (Some(name), false) => Label::Activity(name.clone()),
        };
        b = b.transition(t.id, label);
    }
    for (from, to) in parsed.arcs {
        b = b.arc(from, to);
    }
    b.initial_marking(initial)
        .final_marking(final_marking)
        .build()
        .map_err(ParseError::Invalid)
}

/// Streaming PNML parser state.
#[derive(Default)]
struct PnmlParser {
    parsed: Parsed,
    saw_pnml: bool,
    stack: Vec<String>,
    place: Option<PlaceDecl>,
    transition: Option<TransitionDecl>,
    in_finalmarkings: bool,
    current_final: Option<Vec<(String, u32)>>,
    /// idref of a final-marking place whose token count text is pending.
    final_place: Option<String>,
    text: String,
}

fn parse_document(bytes: &[u8]) -> Result<Parsed, ParseError> {
    let mut reader = Reader::from_reader(bytes);
    let mut p = PnmlParser::default();
    loop {
        let pos = reader.buffer_position();
        let event = reader
            .read_event()
            .map_err(|source| ParseError::Xml { pos, source })?;
        match event {
            Event::Start(e) => {
                let name = local_name(&e);
                p.open(&name, &e, pos)?;
                p.stack.push(name);
                p.text.clear();
            }
            Event::Empty(e) => {
                let name = local_name(&e);
                p.open(&name, &e, pos)?;
                p.close(&name, "")?;
            }
            Event::Text(t) => {
                let text = t.decode().map_err(|source| ParseError::Xml {
                    pos,
                    source: quick_xml::Error::Encoding(source),
                })?;
                p.text.push_str(&text);
            }
            Event::End(e) => {
                let name = String::from_utf8_lossy(e.local_name().as_ref()).to_string();
                p.stack.pop();
                let text = p.text.trim().to_string();
                p.close(&name, &text)?;
                p.text.clear();
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !p.saw_pnml {
        return Err(ParseError::Malformed("no <pnml> element found".into()));
    }
    Ok(p.parsed)
}

impl PnmlParser {
    fn open(&mut self, name: &str, e: &BytesStart<'_>, pos: u64) -> Result<(), ParseError> {
        match name {
            "pnml" => self.saw_pnml = true,
            "finalmarkings" => self.in_finalmarkings = true,
            "marking" if self.in_finalmarkings => self.current_final = Some(Vec::new()),
            "place" if self.in_finalmarkings => {
                if self.current_final.is_none() {
                    // Some writers skip the <marking> wrapper.
                    self.current_final = Some(Vec::new());
                }
                let idref = attr(e, "idref", pos)?.ok_or_else(|| {
                    ParseError::Malformed(format!(
                        "final-marking place without idref at byte {pos}"
                    ))
                })?;
                self.final_place = Some(idref);
            }
            "place" => {
                let id = attr(e, "id", pos)?.ok_or_else(|| {
                    ParseError::Malformed(format!("place without id at byte {pos}"))
                })?;
                self.place = Some(PlaceDecl { id, initial: 0 });
            }
            "transition" => {
                let id = attr(e, "id", pos)?.ok_or_else(|| {
                    ParseError::Malformed(format!("transition without id at byte {pos}"))
                })?;
                self.transition = Some(TransitionDecl {
                    id,
                    name: None,
                    invisible: false,
                });
            }
            "arc" => {
                let source = attr(e, "source", pos)?;
                let target = attr(e, "target", pos)?;
                match (source, target) {
                    (Some(s), Some(t)) => self.parsed.arcs.push((s, t)),
                    _ => {
                        return Err(ParseError::Malformed(format!(
                            "arc without source/target at byte {pos}"
                        )))
                    }
                }
            }
            "toolspecific" => {
                if let Some(t) = self.transition.as_mut() {
                    let activity = attr(e, "activity", pos)?;
                    let invisible = attr(e, "invisible", pos)?;
                    if activity.as_deref() == Some("$invisible$")
                        || invisible.as_deref() == Some("true")
                    {
                        t.invisible = true;
                    }
                }
            }
            "inscription" => {
                // Weighted arcs are out of scope; multiplicity comes from
                // duplicate arcs instead.
                return Err(ParseError::Malformed(format!(
                    "arc inscriptions are not supported (byte {pos})"
                )));
            }
            _ => {}
        }
        Ok(())
    }

    fn close(&mut self, name: &str, text: &str) -> Result<(), ParseError> {
        let inside = |stack: &[String], ancestor: &str| stack.iter().any(|s| s == ancestor);
        match name {
            "place" if self.in_finalmarkings => {
                // A self-closing or count-less place defaults to one token.
                if let (Some(idref), Some(fm)) =
                    (self.final_place.take(), self.current_final.as_mut())
                {
                    fm.push((idref, 1));
                }
            }
            "place" => {
                if let Some(p) = self.place.take() {
                    self.parsed.places.push(p);
                }
            }
            "transition" => {
                if let Some(t) = self.transition.take() {
                    self.parsed.transitions.push(t);
                }
            }
            "marking" => {
                if let Some(fm) = self.current_final.take() {
                    self.parsed.final_markings.push(fm);
                }
            }
            "finalmarkings" => {
                self.in_finalmarkings = false;
                if let Some(fm) = self.current_final.take() {
                    // Wrapper-less form: treated as a single marking.
                    self.parsed.final_markings.push(fm);
                }
            }
            "text" => {
                if self.in_finalmarkings {
                    if let Some(idref) = self.final_place.take() {
                        let count: u32 = text.parse().map_err(|_| {
                            ParseError::Malformed(format!(
                                "bad token count {text:?} in final marking"
                            ))
                        })?;
                        if let Some(fm) = self.current_final.as_mut() {
                            fm.push((idref, count));
                        }
                    }
                } else if inside(&self.stack, "initialMarking") {
                    if let Some(p) = self.place.as_mut() {
                        p.initial = text.parse().map_err(|_| {
                            ParseError::Malformed(format!("bad initial marking count {text:?}"))
                        })?;
                    }
                } else if inside(&self.stack, "name") {
                    if let Some(t) = self.transition.as_mut() {
                        if t.name.is_none() {
                            t.name = Some(text.to_string());
                        }
                    }
                    // Place names are display-only; the id is the identifier.
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn local_name(e: &BytesStart<'_>) -> String {
    String::from_utf8_lossy(e.local_name().as_ref()).to_string()
}

fn attr(e: &BytesStart<'_>, key: &str, pos: u64) -> Result<Option<String>, ParseError> {
    for a in e.attributes() {
        let a =
            a.map_err(|e| ParseError::Malformed(format!("bad attribute at byte {pos}: {e}")))?;
        if a.key.local_name().as_ref() == key.as_bytes() {
            let v = a
                .unescape_value()
                .map_err(|source| ParseError::Xml { pos, source })?;
            return Ok(Some(v.into_owned()));
        }
    }
    Ok(None)
}

/// Serializes a net into the PNML subset read by [`read_pnml`], including the
/// final marking.
pub fn write_pnml(net: &LabeledPetriNet) -> Vec<u8> {
    use quick_xml::escape::escape;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<pnml>\n  <net id=\"net1\" type=\"http://www.pnml.org/version-2009/grammar/pnmlcoremodel\">\n    <page id=\"page1\">\n");
    for p in net.place_ids() {
        let name = escape(net.place_name(p));
        let tokens = net.initial_marking().count(p);
        if tokens > 0 {
            out.push_str(&format!(
                "      <place id=\"{name}\">\n        <name><text>{name}</text></name>\n        <initialMarking><text>{tokens}</text></initialMarking>\n      </place>\n"
            ));
        } else {
            out.push_str(&format!(
                "      <place id=\"{name}\">\n        <name><text>{name}</text></name>\n      </place>\n"
            ));
        }
    }
    for t in net.transition_ids() {
        let id = escape(net.transition_name(t));
        match net.label(t).as_activity() {
            Some(label) => {
                let label = escape(label);
                out.push_str(&format!(
                    "      <transition id=\"{id}\">\n        <name><text>{label}</text></name>\n      </transition>\n"
                ));
            }
            None => {
                out.push_str(&format!(
                    "      <transition id=\"{id}\">\n        <toolspecific tool=\"ProM\" version=\"6.4\" activity=\"$invisible$\"/>\n      </transition>\n"
                ));
            }
        }
    }
    for (i, (from, to)) in net.arcs().iter().enumerate() {
        let from = escape(from.as_str());
        let to = escape(to.as_str());
        out.push_str(&format!(
            "      <arc id=\"a{i}\" source=\"{from}\" target=\"{to}\"/>\n"
        ));
    }
    out.push_str("    </page>\n    <finalmarkings>\n      <marking>\n");
    let fm: BTreeMap<&str, u32> = net
        .final_marking()
        .iter()
        .map(|(p, n)| (net.place_name(p), n))
        .collect();
    for (place, count) in fm {
        let place = escape(place);
        out.push_str(&format!(
            "        <place idref=\"{place}\"><text>{count}</text></place>\n"
        ));
    }
    out.push_str("      </marking>\n    </finalmarkings>\n  </net>\n</pnml>\n");
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example_model;

    #[test]
    fn round_trip_preserves_structure() {
        let net = example_model();
        let bytes = write_pnml(&net);
        let read = read_pnml(&bytes).unwrap();
        assert_eq!(read.num_places(), net.num_places());
        assert_eq!(read.num_transitions(), net.num_transitions());
        for t in net.transition_ids() {
            let name = net.transition_name(t);
            let t2 = read.transition_id(name).unwrap();
            assert_eq!(read.label(t2), net.label(t), "label of {name}");
        }
        assert_eq!(
            read.display_marking(read.initial_marking()),
            net.display_marking(net.initial_marking())
        );
        assert_eq!(
            read.display_marking(read.final_marking()),
            net.display_marking(net.final_marking())
        );
    }

    #[test]
    fn unnamed_invisible_transition_is_silent() {
        let xml = br#"<?xml version="1.0"?>
<pnml><net id="n"><page id="g">
  <place id="a"><initialMarking><text>1</text></initialMarking></place>
  <place id="b"/>
  <transition id="t1"><toolspecific tool="ProM" version="6.4" activity="$invisible$"/></transition>
  <arc id="x1" source="a" target="t1"/>
  <arc id="x2" source="t1" target="b"/>
</page>
<finalmarkings><marking><place idref="b"><text>1</text></place></marking></finalmarkings>
</net></pnml>"#;
        let net = read_pnml(xml).unwrap();
        let t = net.transition_id("t1").unwrap();
        assert!(net.label(t).is_silent());
    }

    #[test]
    fn truncated_xml_is_a_parse_error() {
        let xml = b"<?xml version=\"1.0\"?><pnml><net id=\"n\"><place id=\"p";
        assert!(read_pnml(xml).is_err());
    }

    #[test]
    fn missing_final_marking_is_rejected() {
        let xml = br#"<pnml><net id="n"><page id="g">
  <place id="a"><initialMarking><text>1</text></initialMarking></place>
</page></net></pnml>"#;
        let err = read_pnml(xml).unwrap_err();
        assert!(err.to_string().contains("final marking"));
    }

    #[test]
    fn inscriptions_are_rejected() {
        let xml = br#"<pnml><net id="n"><page id="g">
  <place id="a"/><transition id="t"><name><text>T</text></name></transition>
  <arc id="x" source="a" target="t"><inscription><text>2</text></inscription></arc>
</page><finalmarkings><marking><place idref="a"><text>1</text></place></marking></finalmarkings></net></pnml>"#;
        assert!(read_pnml(xml).is_err());
    }

    #[test]
    fn validation_failures_surface() {
        // Arc referencing an undeclared node.
        let xml = br#"<pnml><net id="n"><page id="g">
  <place id="a"/><arc id="x" source="a" target="ghost"/>
</page><finalmarkings><marking><place idref="a"><text>1</text></place></marking></finalmarkings></net></pnml>"#;
        let err = read_pnml(xml).unwrap_err();
        assert!(matches!(err, ParseError::Invalid(_)));
    }
}
