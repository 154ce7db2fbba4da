//! Network file format.
//!
//! ```xml
//! <network attributes="availability:higher,cost:lower">
//!   <registry id="r1" domain="weather">
//!     <service id="s1" name="Forecast" url="http://..."><qos availability="0.99" cost="2"/></service>
//!   </registry>
//!   <edge a="r1" b="r2"/>
//! </network>
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use roxmltree::{Document, Node};

use super::{AttributeDecl, NetworkError, PeerNetwork, Registry, RegistryId, ServiceDescriptor, ServiceId};
use crate::taxonomy::{ConceptId, Taxonomy};

fn schema(msg: impl Into<String>) -> NetworkError {
    NetworkError::SchemaViolation(msg.into())
}

fn elements<'a, 'i>(node: Node<'a, 'i>) -> Result<Vec<Node<'a, 'i>>, NetworkError> {
    let mut out = Vec::new();
    for child in node.children() {
        if child.is_element() {
            out.push(child);
        } else if child.is_text() && !child.text().unwrap_or("").trim().is_empty() {
            return Err(schema(format!(
                "unexpected text inside <{}>",
                node.tag_name().name()
            )));
        }
    }
    Ok(out)
}

fn required<'a>(node: Node<'a, '_>, attr: &str) -> Result<&'a str, NetworkError> {
    node.attribute(attr).ok_or_else(|| {
        schema(format!("<{}> is missing attribute `{attr}`", node.tag_name().name()))
    })
}

fn only_attributes(node: Node, allowed: &[&str]) -> Result<(), NetworkError> {
    match node.attributes().find(|a| !allowed.contains(&a.name())) {
        Some(a) => Err(schema(format!(
            "<{}> has unexpected attribute `{}`",
            node.tag_name().name(),
            a.name()
        ))),
        None => Ok(()),
    }
}

pub(super) fn parse(document: &str, taxonomy: &Taxonomy) -> Result<PeerNetwork, NetworkError> {
    let doc = Document::parse(document).map_err(|e| schema(format!("malformed XML: {e}")))?;
    let root = doc.root_element();
    if root.tag_name().name() != "network" {
        return Err(schema(format!("root element is <{}>, expected <network>", root.tag_name().name())));
    }
    only_attributes(root, &["attributes"])?;
    let attributes = AttributeDecl::parse_list(required(root, "attributes")?)?;

    let mut registries = Vec::new();
    let mut adjacency: BTreeMap<RegistryId, BTreeSet<RegistryId>> = BTreeMap::new();
    for node in elements(root)? {
        match node.tag_name().name() {
            "registry" => registries.push(parse_registry(node, &attributes)?),
            "edge" => {
                only_attributes(node, &["a", "b"])?;
                let a = RegistryId::new(required(node, "a")?)?;
                let b = RegistryId::new(required(node, "b")?)?;
                if a == b {
                    return Err(schema(format!("edge joins `{a}` to itself")));
                }
                adjacency.entry(a.clone()).or_default().insert(b.clone());
                adjacency.entry(b).or_default().insert(a);
            }
            other => return Err(schema(format!("unexpected element <{other}> in <network>"))),
        }
    }
    PeerNetwork::new(attributes, registries, adjacency, taxonomy)
}

fn parse_registry(node: Node, attributes: &[AttributeDecl]) -> Result<Registry, NetworkError> {
    only_attributes(node, &["id", "domain"])?;
    let id = RegistryId::new(required(node, "id")?)?;
    let raw_domain = required(node, "domain")?;
    let domain = ConceptId::new(raw_domain).map_err(|_| NetworkError::UnknownDomainConcept {
        registry: id.clone(),
        domain: raw_domain.to_string(),
    })?;
    let mut services = Vec::new();
    for svc in elements(node)? {
        if svc.tag_name().name() != "service" {
            return Err(schema(format!("unexpected <{}> in registry `{id}`", svc.tag_name().name())));
        }
        services.push(parse_service(svc, attributes)?);
    }
    Ok(Registry { id, domain, services })
}

fn parse_service(node: Node, attributes: &[AttributeDecl]) -> Result<ServiceDescriptor, NetworkError> {
    only_attributes(node, &["id", "name", "url"])?;
    let id = ServiceId::new(required(node, "id")?)?;
    let name = required(node, "name")?.to_string();
    let url = required(node, "url")?.to_string();
    let children = elements(node)?;
    let qos_node = match children.as_slice() {
        [q] if q.tag_name().name() == "qos" => *q,
        _ => return Err(schema(format!("service `{id}` must contain exactly one <qos/>"))),
    };
    let mut qos = BTreeMap::new();
    for attr in qos_node.attributes() {
        if !attributes.iter().any(|a| a.name == attr.name()) {
            return Err(schema(format!("service `{id}` carries undeclared attribute `{}`", attr.name())));
        }
        let value: f64 = attr
            .value()
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| schema(format!("service `{id}`: `{}` is not a finite number", attr.name())))?;
        qos.insert(attr.name().to_string(), value);
    }
    Ok(ServiceDescriptor { id, name, url, qos })
}

fn escape(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for ch in raw.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    out
}

pub(super) fn emit(net: &PeerNetwork) -> String {
    let decl: Vec<String> = net
        .attributes
        .iter()
        .map(|a| format!("{}:{}", a.name, a.direction.suffix()))
        .collect();
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<network attributes=\"{}\">", escape(&decl.join(",")));
    for reg in net.registries.values() {
        let _ = writeln!(
            out,
            "  <registry id=\"{}\" domain=\"{}\">",
            escape(reg.id.as_str()),
            escape(reg.domain.as_str())
        );
        for svc in &reg.services {
            let _ = write!(
                out,
                "    <service id=\"{}\" name=\"{}\" url=\"{}\"><qos",
                escape(svc.id.as_str()),
                escape(&svc.name),
                escape(&svc.url)
            );
            for attr in &net.attributes {
                let _ = write!(out, " {}=\"{}\"", attr.name, svc.qos[&attr.name]);
            }
            out.push_str("/></service>\n");
        }
        out.push_str("  </registry>\n");
    }
    for (a, b) in net.edges() {
        let _ = writeln!(out, "  <edge a=\"{}\" b=\"{}\"/>", escape(a.as_str()), escape(b.as_str()));
    }
    out.push_str("</network>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Direction;

    fn taxonomy() -> Taxonomy {
        Taxonomy::load("weather\tservice\nmaps\tservice\n").unwrap()
    }

    const MINIMAL: &str = r#"<network attributes="availability:higher,cost:lower">
  <registry id="r1" domain="Weather">
    <service id="s1" name="Forecast &amp; co" url="http://w.example/f"><qos availability="0.99" cost="2"/></service>
  </registry>
</network>"#;

    #[test]
    fn loads_minimal_file() {
        let net = PeerNetwork::load(MINIMAL, &taxonomy()).unwrap();
        assert_eq!(net.len(), 1);
        assert_eq!(net.probe_count(), 0);
        let reg = net.registries().next().unwrap();
        assert_eq!(reg.domain.as_str(), "weather");
        assert_eq!(reg.services[0].name, "Forecast & co");
        assert_eq!(reg.services[0].qos["cost"], 2.0);
        assert_eq!(net.attributes()[1].direction, Direction::Lower);
    }

    #[test]
    fn emit_round_trips() {
        let net = PeerNetwork::load(MINIMAL, &taxonomy()).unwrap();
        let text = net.to_xml();
        let again = PeerNetwork::load(&text, &taxonomy()).unwrap();
        assert_eq!(again, net);
        assert_eq!(again.to_xml(), text);
    }

    #[test]
    fn schema_errors() {
        let t = taxonomy();
        let cases = [
            "<registry/>",
            "<network><registry id=\"r\" domain=\"maps\"/></network>",
            "<network attributes=\"cost\"/>",
            "<network attributes=\"cost:sideways\"/>",
            "<network attributes=\"cost:lower\"><bogus/></network>",
            "<network attributes=\"cost:lower\"><registry id=\"r\" domain=\"maps\"><service id=\"s\" name=\"n\" url=\"u\"/></registry></network>",
            "<network attributes=\"cost:lower\"><registry id=\"r\" domain=\"maps\"><service id=\"s\" name=\"n\" url=\"u\"><qos/></service></registry></network>",
            "<network attributes=\"cost:lower\"><registry id=\"r\" domain=\"maps\"><service id=\"s\" name=\"n\" url=\"u\"><qos cost=\"x\"/></service></registry></network>",
            "<network attributes=\"cost:lower\"><registry id=\"r\" domain=\"maps\"><service id=\"s\" name=\"n\" url=\"u\"><qos cost=\"1\" speed=\"2\"/></service></registry></network>",
            "<network attributes=\"cost:lower\"><registry id=\"r\" domain=\"maps\"/><edge a=\"r\" b=\"r\"/></network>",
            "<network attributes=\"cost:lower\"><registry id=\"r\" domain=\"maps\"/><registry id=\"r\" domain=\"maps\"/></network>",
            "not xml at all",
        ];
        for doc in cases {
            assert!(
                matches!(PeerNetwork::load(doc, &t), Err(NetworkError::SchemaViolation(_))),
                "{doc}"
            );
        }
    }

    #[test]
    fn unknown_domain_and_duplicates() {
        let t = taxonomy();
        let doc = "<network attributes=\"cost:lower\"><registry id=\"r\" domain=\"finance\"/></network>";
        assert!(matches!(
            PeerNetwork::load(doc, &t),
            Err(NetworkError::UnknownDomainConcept { .. })
        ));
        let doc = "<network attributes=\"cost:lower\">\
            <registry id=\"r1\" domain=\"maps\"><service id=\"s\" name=\"n\" url=\"u\"><qos cost=\"1\"/></service></registry>\
            <registry id=\"r2\" domain=\"weather\"><service id=\"s\" name=\"n\" url=\"u\"><qos cost=\"1\"/></service></registry>\
            </network>";
        assert_eq!(
            PeerNetwork::load(doc, &t).unwrap_err(),
            NetworkError::DuplicateServiceId(ServiceId::new("s").unwrap())
        );
        let doc = "<network attributes=\"cost:lower\"><registry id=\"r\" domain=\"maps\"/><edge a=\"r\" b=\"ghost\"/></network>";
        assert!(matches!(PeerNetwork::load(doc, &t), Err(NetworkError::UnknownRegistry(_))));
    }

    #[test]
    fn single_declared_edge_is_symmetric() {
        let doc = "<network attributes=\"cost:lower\">\
            <registry id=\"a\" domain=\"maps\"/><registry id=\"b\" domain=\"weather\"/>\
            <edge a=\"a\" b=\"b\"/></network>";
        let net = PeerNetwork::load(doc, &taxonomy()).unwrap();
        let a = RegistryId::new("a").unwrap();
        let b = RegistryId::new("b").unwrap();
        assert!(net.neighbors_of(&a).unwrap().contains(&b));
        assert!(net.neighbors_of(&b).unwrap().contains(&a));
    }
}
