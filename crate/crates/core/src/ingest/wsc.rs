//! Best-effort importer for WSC-challenge-style datasets.
//!
//! Expected directory layout: `taxonomy.xml` (nested `<concept>` elements,
//! optionally with `<instance>` leaves), `services.xml` (`<service>` elements
//! carrying QoS attributes and `<inputs>`/`<outputs>` parameter lists), and
//! `problem.xml` (`<provided>`/`<wanted>` parameter lists). Instances are
//! treated as leaf concepts under their enclosing concept. After import a
//! canonical JSON dump is written to `<dir>/canonical/` for reproducibility.

use std::path::Path;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use crate::error::{Error, Result};
use crate::model::{CompositionTask, QosVector};
use crate::Repository;

use super::{assemble, dump_canonical, read_file, ServiceJson, TaskJson, TaxonomyJson};

/// Imports a WSC-style dataset directory into the canonical in-memory model
/// and writes the canonical JSON twin alongside it.
pub fn import_wsc(dir: &Path) -> Result<(Repository, CompositionTask)> {
    let taxonomy = parse_taxonomy(&read_file(&dir.join("taxonomy.xml"))?)?;
    let services = parse_services(&read_file(&dir.join("services.xml"))?)?;
    let task = parse_problem(&read_file(&dir.join("problem.xml"))?)?;

    let (repo, task) = assemble(services, taxonomy, task)?;
    let canonical = dir.join("canonical");
    dump_canonical(&repo, &task, &canonical)?;
    log::debug!(
        "wsc import: canonical dump written to {}",
        canonical.display()
    );
    Ok((repo, task))
}

fn xml_err(e: quick_xml::Error) -> Error {
    Error::WscSchema(format!("malformed XML: {e}"))
}

fn name_attr(e: &BytesStart<'_>) -> Result<String> {
    let attr = e
        .try_get_attribute("name")
        .map_err(|e| Error::WscSchema(format!("bad attribute: {e}")))?
        .ok_or_else(|| {
            Error::WscSchema(format!(
                "element `{}` is missing its name attribute",
                String::from_utf8_lossy(e.name().as_ref())
            ))
        })?;
    Ok(attr
        .normalized_value(quick_xml::XmlVersion::Implicit1_0)
        .map_err(|e| Error::WscSchema(format!("bad attribute value: {e}")))?
        .into_owned())
}

fn float_attr(e: &BytesStart<'_>, attr: &str, service: &str) -> Result<f64> {
    let raw = e
        .try_get_attribute(attr)
        .map_err(|e| Error::WscSchema(format!("bad attribute: {e}")))?
        .ok_or_else(|| Error::WscMissingQos(service.to_string()))?;
    let text = raw
        .normalized_value(quick_xml::XmlVersion::Implicit1_0)
        .map_err(|e| Error::WscSchema(format!("bad attribute value: {e}")))?;
    text.parse::<f64>().map_err(|_| {
        Error::WscSchema(format!(
            "service `{service}`: attribute `{attr}` is not a number"
        ))
    })
}

fn parse_taxonomy(text: &str) -> Result<TaxonomyJson> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);
    let mut stack: Vec<String> = Vec::new();
    let mut root: Option<String> = None;
    let mut edges: Vec<(String, String)> = Vec::new();
    let mut seen_container = false;

    let mut register = |stack: &[String], name: String| -> Result<Option<String>> {
        match stack.last() {
            Some(parent) => {
                edges.push((parent.clone(), name.clone()));
                Ok(Some(name))
            }
            None => {
                if root.is_some() {
                    return Err(Error::WscSchema(format!(
                        "second top-level concept `{name}`; taxonomy must have a single root"
                    )));
                }
                root = Some(name.clone());
                Ok(Some(name))
            }
        }
    };

    loop {
        match reader.read_event().map_err(xml_err)? {
            Event::Start(e) => match e.name().as_ref() {
                b"taxonomy" => {
                    seen_container = true;
                }
                b"concept" | b"instance" => {
                    let name = name_attr(&e)?;
                    if let Some(name) = register(&stack, name)? {
                        stack.push(name);
                    }
                }
                other => {
                    return Err(Error::WscSchema(
                        String::from_utf8_lossy(other).into_owned(),
                    ))
                }
            },
            Event::Empty(e) => match e.name().as_ref() {
                b"concept" | b"instance" => {
                    let name = name_attr(&e)?;
                    register(&stack, name)?;
                }
                other => {
                    return Err(Error::WscSchema(
                        String::from_utf8_lossy(other).into_owned(),
                    ))
                }
            },
            Event::End(e) => {
                if matches!(e.name().as_ref(), b"concept" | b"instance") {
                    stack.pop();
                }
            }
            Event::Eof => break,
            Event::Decl(_) | Event::Comment(_) | Event::Text(_) => {}
            _ => {}
        }
    }
    if !seen_container {
        return Err(Error::WscSchema("missing <taxonomy> element".into()));
    }
    let root = root.ok_or_else(|| Error::WscSchema("taxonomy has no root concept".into()))?;
    Ok(TaxonomyJson { root, edges })
}

#[derive(Clone, Copy, PartialEq)]
enum ParamSide {
    None,
    Inputs,
    Outputs,
}

fn parse_services(text: &str) -> Result<Vec<ServiceJson>> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);
    let mut services = Vec::new();
    let mut current: Option<(String, QosVector, Vec<String>, Vec<String>)> = None;
    let mut side = ParamSide::None;

    loop {
        match reader.read_event().map_err(xml_err)? {
            Event::Start(e) | Event::Empty(e) => match e.name().as_ref() {
                b"services" => {}
                b"service" => {
                    let name = name_attr(&e)?;
                    let qos = QosVector {
                        time: float_attr(&e, "time", &name)?,
                        cost: float_attr(&e, "cost", &name)?,
                        reliability: float_attr(&e, "reliability", &name)?,
                        availability: float_attr(&e, "availability", &name)?,
                    };
                    current = Some((name, qos, Vec::new(), Vec::new()));
                }
                b"inputs" => side = ParamSide::Inputs,
                b"outputs" => side = ParamSide::Outputs,
                b"instance" | b"concept" => {
                    let name = name_attr(&e)?;
                    let Some((_, _, inputs, outputs)) = current.as_mut() else {
                        return Err(Error::WscSchema(
                            "parameter outside of a <service> element".into(),
                        ));
                    };
                    match side {
                        ParamSide::Inputs => inputs.push(name),
                        ParamSide::Outputs => outputs.push(name),
                        ParamSide::None => {
                            return Err(Error::WscSchema(
                                "parameter outside of <inputs>/<outputs>".into(),
                            ))
                        }
                    }
                }
                other => {
                    return Err(Error::WscSchema(
                        String::from_utf8_lossy(other).into_owned(),
                    ))
                }
            },
            Event::End(e) => match e.name().as_ref() {
                b"inputs" | b"outputs" => side = ParamSide::None,
                b"service" => {
                    let (_, qos, inputs, outputs) =
                        current.take().expect("service end without start");
                    services.push(ServiceJson {
                        id: services.len(),
                        inputs,
                        outputs,
                        qos,
                    });
                }
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(services)
}

fn parse_problem(text: &str) -> Result<TaskJson> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);
    let mut provided = Vec::new();
    let mut wanted = Vec::new();
    let mut side: Option<bool> = None; // true = provided

    loop {
        match reader.read_event().map_err(xml_err)? {
            Event::Start(e) | Event::Empty(e) => match e.name().as_ref() {
                b"problem" => {}
                b"provided" => side = Some(true),
                b"wanted" => side = Some(false),
                b"instance" | b"concept" => {
                    let name = name_attr(&e)?;
                    match side {
                        Some(true) => provided.push(name),
                        Some(false) => wanted.push(name),
                        None => {
                            return Err(Error::WscSchema(
                                "parameter outside of <provided>/<wanted>".into(),
                            ))
                        }
                    }
                }
                other => {
                    return Err(Error::WscSchema(
                        String::from_utf8_lossy(other).into_owned(),
                    ))
                }
            },
            Event::End(e) => {
                if matches!(e.name().as_ref(), b"provided" | b"wanted") {
                    side = None;
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(TaskJson {
        inputs: provided,
        outputs: wanted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::ingest::{canonical_documents, load_canonical_strs};

    const TAXONOMY_XML: &str = r#"<?xml version="1.0"?>
<taxonomy>
  <concept name="root">
    <concept name="a"/>
    <concept name="b"/>
    <concept name="c"/>
  </concept>
</taxonomy>"#;

    const SERVICES_XML: &str = r#"<?xml version="1.0"?>
<services>
  <service name="alpha" time="2" cost="3" reliability="0.9" availability="0.8">
    <inputs><instance name="a"/></inputs>
    <outputs><instance name="b"/></outputs>
  </service>
  <service name="beta" time="1" cost="5" reliability="0.95" availability="0.85">
    <inputs><instance name="b"/></inputs>
    <outputs><instance name="c"/></outputs>
  </service>
</services>"#;

    const PROBLEM_XML: &str = r#"<?xml version="1.0"?>
<problem>
  <provided><instance name="a"/></provided>
  <wanted><instance name="c"/></wanted>
</problem>"#;

    fn write_fixture(dir: &std::path::Path) {
        std::fs::create_dir_all(dir).unwrap();
        std::fs::write(dir.join("taxonomy.xml"), TAXONOMY_XML).unwrap();
        std::fs::write(dir.join("services.xml"), SERVICES_XML).unwrap();
        std::fs::write(dir.join("problem.xml"), PROBLEM_XML).unwrap();
    }

    #[test]
    fn mini_fixture_matches_canonical_twin() {
        let dir = fixtures::tmpdir("wsc_mini");
        write_fixture(&dir);
        let (repo, task) = import_wsc(&dir).unwrap();

        let (repo2, task2) = load_canonical_strs(
            r#"[
              {"id": 0, "inputs": ["a"], "outputs": ["b"], "qos": {"t": 2, "ct": 3, "r": 0.9, "a": 0.8}},
              {"id": 1, "inputs": ["b"], "outputs": ["c"], "qos": {"t": 1, "ct": 5, "r": 0.95, "a": 0.85}}
            ]"#,
            r#"{"root": "root", "edges": [["root", "a"], ["root", "b"], ["root", "c"]]}"#,
            r#"{"inputs": ["a"], "outputs": ["c"]}"#,
        )
        .unwrap();

        assert_eq!(
            canonical_documents(&repo, &task),
            canonical_documents(&repo2, &task2)
        );
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn canonical_dump_is_loadable() {
        let dir = fixtures::tmpdir("wsc_dump");
        write_fixture(&dir);
        import_wsc(&dir).unwrap();
        let (repo, _task) = crate::ingest::load_canonical_dir(&dir.join("canonical")).unwrap();
        assert_eq!(repo.services.len(), 2);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn missing_taxonomy_file_errors() {
        let dir = fixtures::tmpdir("wsc_missing");
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("services.xml"), SERVICES_XML).unwrap();
        std::fs::write(dir.join("problem.xml"), PROBLEM_XML).unwrap();
        let err = import_wsc(&dir).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn missing_qos_attribute_names_the_service() {
        let dir = fixtures::tmpdir("wsc_noqos");
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("taxonomy.xml"), TAXONOMY_XML).unwrap();
        std::fs::write(
            dir.join("services.xml"),
            r#"<services>
  <service name="alpha" time="2" cost="3" reliability="0.9">
    <inputs><instance name="a"/></inputs>
    <outputs><instance name="b"/></outputs>
  </service>
</services>"#,
        )
        .unwrap();
        std::fs::write(dir.join("problem.xml"), PROBLEM_XML).unwrap();
        let err = import_wsc(&dir).unwrap_err();
        assert!(matches!(err, Error::WscMissingQos(ref name) if name == "alpha"));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn unrecognized_element_is_named() {
        let err = parse_taxonomy("<taxonomy><banana name=\"x\"/></taxonomy>").unwrap_err();
        assert!(matches!(err, Error::WscSchema(ref tag) if tag == "banana"));
    }
}
