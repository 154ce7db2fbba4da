//! QoS normalization, weighted scoring and nearest-level selection.
//!
//! Raw attribute values are min–max normalized over the candidate list
//! (direction-aware), combined with requester weights into a score in
//! `[0, 1]`, and the service whose score lies nearest the requested level is
//! selected.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::network::{AttributeDecl, Direction, ServiceDescriptor};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QosError {
    #[error("service `{service}` has no value for attribute `{attribute}`")]
    MissingAttribute { service: String, attribute: String },
    #[error("weights and normalized values cover different attribute sets")]
    AttributeSetMismatch,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("requested level {0} is outside [0, 1]")]
    InvalidLevel(f64),
    #[error("no services to choose from")]
    EmptyServiceList,
}

/// Tolerance on the weight sum.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Requester weights, one per declared attribute, summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct QosWeights(BTreeMap<String, f64>);

impl QosWeights {
    pub fn new(weights: BTreeMap<String, f64>) -> Result<Self, QosError> {
        if weights.is_empty() {
            return Err(QosError::InvalidWeights("no weights given".into()));
        }
        for (name, &w) in &weights {
            if !(0.0..=1.0).contains(&w) {
                return Err(QosError::InvalidWeights(format!("weight of `{name}` is {w}")));
            }
        }
        let sum: f64 = weights.values().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(QosError::InvalidWeights(format!("weights sum to {sum}")));
        }
        Ok(QosWeights(weights))
    }

    /// Equal weight on every declared attribute.
    pub fn uniform(attributes: &[AttributeDecl]) -> Result<Self, QosError> {
        let w = 1.0 / attributes.len().max(1) as f64;
        Self::new(attributes.iter().map(|a| (a.name.clone(), w)).collect())
    }

    /// Parses `name:weight,name:weight,...`.
    pub fn parse(text: &str) -> Result<Self, QosError> {
        let mut map = BTreeMap::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, value) = item
                .split_once(':')
                .ok_or_else(|| QosError::InvalidWeights(format!("expected name:weight, got `{item}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| QosError::InvalidWeights(format!("bad weight in `{item}`")))?;
            if map.insert(name.trim().to_string(), value).is_some() {
                return Err(QosError::InvalidWeights(format!("`{name}` given twice")));
            }
        }
        Self::new(map)
    }

    /// Checks that the weights cover exactly `attributes`.
    pub fn check_covers(&self, attributes: &[AttributeDecl]) -> Result<(), QosError> {
        let same = self.0.len() == attributes.len()
            && attributes.iter().all(|a| self.0.contains_key(&a.name));
        if same {
            Ok(())
        } else {
            Err(QosError::AttributeSetMismatch)
        }
    }

    pub fn get(&self, attribute: &str) -> Option<f64> {
        self.0.get(attribute).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct QosScore(f64);

impl QosScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub type NormalizedQos = BTreeMap<String, f64>;

/// Min–max normalizes every declared attribute over `services`.
///
/// Higher-is-better maps to `(v−min)/(max−min)`, lower-is-better to
/// `(max−v)/(max−min)`; an attribute with `max = min` normalizes to 1.0.
pub fn normalize_attributes(
    services: &[ServiceDescriptor],
    attributes: &[AttributeDecl],
) -> Result<Vec<NormalizedQos>, QosError> {
    if services.is_empty() {
        return Err(QosError::EmptyServiceList);
    }
    let mut out = vec![NormalizedQos::new(); services.len()];
    for attr in attributes {
        let values = services
            .iter()
            .map(|s| {
                s.qos.get(&attr.name).copied().ok_or_else(|| QosError::MissingAttribute {
                    service: s.id.to_string(),
                    attribute: attr.name.clone(),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = max - min;
        for (slot, v) in out.iter_mut().zip(values) {
            let norm = if span == 0.0 {
                1.0
            } else {
                match attr.direction {
                    Direction::Higher => (v - min) / span,
                    Direction::Lower => (max - v) / span,
                }
            };
            slot.insert(attr.name.clone(), norm);
        }
    }
    Ok(out)
}

/// `Σ w(a)·normalized(a)`, clamped against rounding to `[0, 1]`.
pub fn qos_score(normalized: &NormalizedQos, weights: &QosWeights) -> Result<QosScore, QosError> {
    if normalized.len() != weights.0.len() {
        return Err(QosError::AttributeSetMismatch);
    }
    let mut sum = 0.0;
    for (name, w) in &weights.0 {
        let v = normalized.get(name).ok_or(QosError::AttributeSetMismatch)?;
        sum += w * v;
    }
    Ok(QosScore(sum.clamp(0.0, 1.0)))
}

/// Scores every service in `services` (same order).
pub fn score_services(
    services: &[ServiceDescriptor],
    attributes: &[AttributeDecl],
    weights: &QosWeights,
) -> Result<Vec<QosScore>, QosError> {
    normalize_attributes(services, attributes)?
        .iter()
        .map(|n| qos_score(n, weights))
        .collect()
}

/// Picks the service whose score is nearest `requested_level`.
///
/// Ties go to the higher score, then to the smallest service id.
pub fn nearest_qos_service<'a>(
    services: &'a [ServiceDescriptor],
    attributes: &[AttributeDecl],
    weights: &QosWeights,
    requested_level: f64,
) -> Result<(&'a ServiceDescriptor, QosScore), QosError> {
    if !(0.0..=1.0).contains(&requested_level) {
        return Err(QosError::InvalidLevel(requested_level));
    }
    weights.check_covers(attributes)?;
    let scores = score_services(services, attributes, weights)?;
    let (svc, score) = services
        .iter()
        .zip(scores)
        .min_by(|(sa, a), (sb, b)| {
            let da = (a.0 - requested_level).abs();
            let db = (b.0 - requested_level).abs();
            da.total_cmp(&db)
                .then(b.0.total_cmp(&a.0))
                .then(sa.id.cmp(&sb.id))
        })
        .ok_or(QosError::EmptyServiceList)?;
    Ok((svc, score))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::ServiceId;

    fn decl(name: &str, direction: Direction) -> AttributeDecl {
        AttributeDecl { name: name.into(), direction }
    }

    fn svc(id: &str, qos: &[(&str, f64)]) -> ServiceDescriptor {
        ServiceDescriptor {
            id: ServiceId::new(id).unwrap(),
            name: id.into(),
            url: format!("http://{id}.example"),
            qos: qos.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    fn weights(pairs: &[(&str, f64)]) -> QosWeights {
        QosWeights::new(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()).unwrap()
    }

    #[test]
    fn single_service_normalizes_to_one() {
        let attrs = [decl("availability", Direction::Higher), decl("cost", Direction::Lower)];
        let n = normalize_attributes(&[svc("a", &[("availability", 0.9), ("cost", 3.0)])], &attrs).unwrap();
        assert_eq!(n[0]["availability"], 1.0);
        assert_eq!(n[0]["cost"], 1.0);
    }

    #[test]
    fn lower_is_better_endpoints() {
        let attrs = [decl("response_time_ms", Direction::Lower)];
        let s = [svc("a", &[("response_time_ms", 100.0)]), svc("b", &[("response_time_ms", 200.0)])];
        let n = normalize_attributes(&s, &attrs).unwrap();
        assert_eq!((n[0]["response_time_ms"], n[1]["response_time_ms"]), (1.0, 0.0));
    }

    #[test]
    fn higher_is_better_interior() {
        let attrs = [decl("availability", Direction::Higher)];
        let s = [
            svc("a", &[("availability", 0.90)]),
            svc("b", &[("availability", 0.95)]),
            svc("c", &[("availability", 0.99)]),
        ];
        let n = normalize_attributes(&s, &attrs).unwrap();
        let expected = (0.95 - 0.90) / (0.99 - 0.90);
        assert_eq!(n[0]["availability"], 0.0);
        assert!((n[1]["availability"] - expected).abs() < 1e-15);
        assert!((n[1]["availability"] - 0.555_555_555_555_555_6).abs() < 1e-12);
        assert_eq!(n[2]["availability"], 1.0);
    }

    #[test]
    fn missing_attribute() {
        let attrs = [decl("cost", Direction::Lower)];
        let err = normalize_attributes(&[svc("a", &[])], &attrs).unwrap_err();
        assert!(matches!(err, QosError::MissingAttribute { .. }));
    }

    #[test]
    fn score_examples() {
        let one = NormalizedQos::from([("a".to_string(), 0.7)]);
        assert_eq!(qos_score(&one, &weights(&[("a", 1.0)])).unwrap().value(), 0.7);
        let two = NormalizedQos::from([("a".to_string(), 1.0), ("b".to_string(), 0.0)]);
        assert_eq!(qos_score(&two, &weights(&[("a", 0.5), ("b", 0.5)])).unwrap().value(), 0.5);
        let three = NormalizedQos::from([
            ("a".to_string(), 1.0),
            ("b".to_string(), 1.0),
            ("c".to_string(), 1.0),
        ]);
        let w = weights(&[("a", 0.2), ("b", 0.3), ("c", 0.5)]);
        assert_eq!(qos_score(&three, &w).unwrap().value(), 1.0);
        assert_eq!(qos_score(&two, &w), Err(QosError::AttributeSetMismatch));
    }

    #[test]
    fn weight_validation() {
        assert!(QosWeights::parse("a:0.5,b:0.5").is_ok());
        assert!(QosWeights::parse("a:0.5,b:0.6").is_err());
        assert!(QosWeights::parse("a:1.5,b:-0.5").is_err());
        assert!(QosWeights::parse("a:0.5,a:0.5").is_err());
        assert!(QosWeights::parse("a").is_err());
        assert!(QosWeights::parse("").is_err());
    }

    #[test]
    fn nearest_level_selection() {
        // single attribute, weight 1: score equals the normalized value
        let attrs = [decl("q", Direction::Higher)];
        let w = weights(&[("q", 1.0)]);
        let s = [
            svc("low", &[("q", 0.0)]),
            svc("a", &[("q", 0.70)]),
            svc("b", &[("q", 0.85)]),
            svc("c", &[("q", 0.95)]),
            svc("top", &[("q", 1.0)]),
        ];
        // scores are q itself because min 0 and max 1
        let (pick, score) = nearest_qos_service(&s[1..4].iter().cloned().chain([s[0].clone(), s[4].clone()]).collect::<Vec<_>>(), &attrs, &w, 0.8)
            .map(|(p, sc)| (p.id.to_string(), sc.value()))
            .unwrap();
        assert_eq!(pick, "b");
        assert!((score - 0.85).abs() < 1e-12);
        let (pick, _) = nearest_qos_service(&s, &attrs, &w, 1.0).unwrap();
        assert_eq!(pick.id.as_str(), "top");
    }

    #[test]
    fn nearest_ties() {
        let attrs = [decl("q", Direction::Higher)];
        let w = weights(&[("q", 1.0)]);
        // scores 0, 0.5, 1 → level 0.25 is equidistant from 0 and 0.5: higher wins
        let s = [svc("a", &[("q", 0.0)]), svc("b", &[("q", 5.0)]), svc("c", &[("q", 10.0)])];
        let (pick, _) = nearest_qos_service(&s, &attrs, &w, 0.25).unwrap();
        assert_eq!(pick.id.as_str(), "b");
        // identical services: smallest id
        let s = [svc("z", &[("q", 1.0)]), svc("m", &[("q", 1.0)])];
        let (pick, _) = nearest_qos_service(&s, &attrs, &w, 0.3).unwrap();
        assert_eq!(pick.id.as_str(), "m");
    }

    #[test]
    fn selection_errors() {
        let attrs = [decl("q", Direction::Higher)];
        let w = weights(&[("q", 1.0)]);
        assert_eq!(nearest_qos_service(&[], &attrs, &w, 0.5).unwrap_err(), QosError::EmptyServiceList);
        let s = [svc("a", &[("q", 1.0)])];
        assert_eq!(nearest_qos_service(&s, &attrs, &w, 1.5).unwrap_err(), QosError::InvalidLevel(1.5));
        let other = weights(&[("x", 1.0)]);
        assert_eq!(nearest_qos_service(&s, &attrs, &other, 0.5).unwrap_err(), QosError::AttributeSetMismatch);
    }
}
